//! Exact rational arithmetic, binomial coefficients and a sparse exact
//! linear solver.
//!
//! Everything in this crate is computed over the rationals with
//! arbitrary-precision numerators and denominators; there is no floating
//! point anywhere.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

/// The ground field: reduced fractions with a positive denominator.
pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumError {
    #[error("binomial coefficient requested with negative upper argument {0}")]
    NegativeUpper(i64),
    #[error("row {row} references column {col} but the system has {ncols} columns")]
    ColumnOutOfRange { row: usize, col: usize, ncols: usize },
    #[error("system has {rows} rows but {rhs} right-hand side entries")]
    ShapeMismatch { rows: usize, rhs: usize },
}

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: &BigInt) -> Rational {
    Rational::from_integer(n.clone())
}

/// Canonical text for a rational: `3`, `-1/2`.
pub fn fmt_rational(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// `C(n, k)` for `n >= 0`; zero outside `0 <= k <= n`.
pub fn binomial(n: i64, k: i64) -> Result<BigInt, NumError> {
    if n < 0 {
        return Err(NumError::NegativeUpper(n));
    }
    if k < 0 || k > n {
        return Ok(BigInt::zero());
    }
    Ok(choose(n as u64, k as u64))
}

/// Infallible binomial for unsigned arguments.
pub fn choose(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Falling factorial `n (n-1) ... (n-j+1)`; the empty product is 1.
pub fn falling(n: i64, j: u32) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..j as i64 {
        acc *= n - i;
    }
    acc
}

pub fn factorial(n: u32) -> BigInt {
    (1..=n as u64).fold(BigInt::one(), |acc, i| acc * i)
}

/// `C(n, s) = falling(n, s) / s!` for any integer `n`, including negative.
pub fn generalized_binomial(n: i64, s: u32) -> Rational {
    Rational::new(falling(n, s), factorial(s))
}

/// A sparse linear system `rows * x = rhs` over the rationals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearSystem {
    rows: Vec<BTreeMap<usize, Rational>>,
    rhs: Vec<Rational>,
    ncols: usize,
}

impl LinearSystem {
    pub fn new(ncols: usize) -> Self {
        LinearSystem { rows: Vec::new(), rhs: Vec::new(), ncols }
    }

    /// Builds a system from explicit rows; zero entries are dropped.
    pub fn from_rows(
        ncols: usize,
        rows: Vec<BTreeMap<usize, Rational>>,
        rhs: Vec<Rational>,
    ) -> Result<Self, NumError> {
        if rows.len() != rhs.len() {
            return Err(NumError::ShapeMismatch { rows: rows.len(), rhs: rhs.len() });
        }
        let mut sys = LinearSystem::new(ncols);
        for (row, b) in rows.into_iter().zip(rhs) {
            sys.push_row(row, b)?;
        }
        Ok(sys)
    }

    pub fn push_row(&mut self, mut row: BTreeMap<usize, Rational>, b: Rational) -> Result<(), NumError> {
        row.retain(|_, v| !v.is_zero());
        if let Some((&col, _)) = row.iter().next_back() {
            if col >= self.ncols {
                return Err(NumError::ColumnOutOfRange { row: self.rows.len(), col, ncols: self.ncols });
            }
        }
        self.rows.push(row);
        self.rhs.push(b);
        Ok(())
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[BTreeMap<usize, Rational>] {
        &self.rows
    }

    pub fn rhs(&self) -> &[Rational] {
        &self.rhs
    }

    /// `rows * x`, exactly.
    pub fn apply(&self, x: &[Rational]) -> Vec<Rational> {
        self.rows
            .iter()
            .map(|row| {
                row.iter()
                    .fold(Rational::zero(), |acc, (&c, v)| acc + v * &x[c])
            })
            .collect()
    }

    /// True iff `x` satisfies every equation exactly.
    pub fn is_solution(&self, x: &[Rational]) -> bool {
        x.len() == self.ncols && self.apply(x) == self.rhs
    }
}

/// Solves the system exactly, returning one solution (free variables set to
/// zero) or `None` if it is inconsistent.
///
/// Elimination picks, at every step, the active column with the smallest
/// support among the not-yet-pivoted rows (ties: lowest column index), and
/// within it the shortest row (ties: lowest row index). The result is fully
/// determined by the input.
pub fn solve(system: &LinearSystem) -> Option<Vec<Rational>> {
    let mut rows = system.rows.clone();
    let mut rhs = system.rhs.clone();
    let ncols = system.ncols;

    // Column -> active rows containing it.
    let mut col_rows: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); ncols];
    for (r, row) in rows.iter().enumerate() {
        for &c in row.keys() {
            col_rows[c].insert(r);
        }
    }
    let mut queue: BTreeSet<(usize, usize)> = col_rows
        .iter()
        .enumerate()
        .filter(|(_, s)| !s.is_empty())
        .map(|(c, s)| (s.len(), c))
        .collect();

    let mut pivots: Vec<(usize, usize)> = Vec::new();

    while let Some(&(support, col)) = queue.iter().next() {
        queue.remove(&(support, col));
        debug_assert_eq!(support, col_rows[col].len());
        let prow = *col_rows[col]
            .iter()
            .min_by_key(|&&r| (rows[r].len(), r))
            .expect("queued column has support");

        // Retire the pivot row from the active set.
        for &c in rows[prow].keys() {
            if c == col {
                continue;
            }
            let old = col_rows[c].len();
            col_rows[c].remove(&prow);
            queue.remove(&(old, c));
            if !col_rows[c].is_empty() {
                queue.insert((col_rows[c].len(), c));
            }
        }
        col_rows[col].remove(&prow);

        let inv = rows[prow][&col].recip();
        let pivot_row: Vec<(usize, Rational)> =
            rows[prow].iter().map(|(&c, v)| (c, v * &inv)).collect();
        let pivot_rhs = &rhs[prow] * &inv;
        rows[prow] = pivot_row.iter().cloned().collect();
        rhs[prow] = pivot_rhs.clone();

        let targets: Vec<usize> = std::mem::take(&mut col_rows[col]).into_iter().collect();
        for r in targets {
            let factor = rows[r].remove(&col).expect("support is exact");
            for (c, v) in &pivot_row {
                if *c == col {
                    continue;
                }
                let before = col_rows[*c].len();
                let entry = rows[r].entry(*c).or_insert_with(Rational::zero);
                *entry -= &factor * v;
                if entry.is_zero() {
                    rows[r].remove(c);
                    col_rows[*c].remove(&r);
                } else {
                    col_rows[*c].insert(r);
                }
                let after = col_rows[*c].len();
                if before != after {
                    queue.remove(&(before, *c));
                    if after > 0 {
                        queue.insert((after, *c));
                    }
                }
            }
            let delta = &factor * &pivot_rhs;
            rhs[r] -= delta;
        }
        pivots.push((prow, col));
    }

    // Every non-pivot row is now empty; consistency means its rhs vanished.
    let pivot_rows: BTreeSet<usize> = pivots.iter().map(|&(r, _)| r).collect();
    for (r, b) in rhs.iter().enumerate() {
        if !pivot_rows.contains(&r) && !b.is_zero() {
            return None;
        }
    }

    let mut x = vec![Rational::zero(); ncols];
    for &(r, col) in pivots.iter().rev() {
        let mut value = rhs[r].clone();
        for (&c, v) in &rows[r] {
            if c != col && !x[c].is_zero() {
                value -= v * &x[c];
            }
        }
        x[col] = value;
    }
    debug_assert!(system.is_solution(&x));
    Some(x)
}

/// Sign helper used by binomial expansions: `(-1)^k`.
pub fn sign(k: i64) -> BigInt {
    if k.rem_euclid(2) == 0 {
        BigInt::one()
    } else {
        -BigInt::one()
    }
}
