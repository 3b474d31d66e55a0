//! Seeded random samples for the property checks and scenario runners.

use rand::Rng;

use crate::diffpoly::{DiffPoly, DiffVar, Monomial};
use crate::exactnum::{rat, ratio, Rational};

pub const LETTERS: [&str; 4] = ["x", "y", "z", "u"];

pub fn small_rational<R: Rng>(rng: &mut R) -> Rational {
    let n = rng.gen_range(-4..=4);
    if n == 0 {
        return rat(1);
    }
    ratio(n, rng.gen_range(1..=3))
}

/// Random weight-homogeneous polynomial of weight -1 with at most `ngens`
/// letters, degree at most `max_degree` and indices in `[-index_range, index_range]`.
pub fn random_weight_minus_one<R: Rng>(rng: &mut R, ngens: usize, max_degree: usize, index_range: i64) -> DiffPoly {
    let mut out = DiffPoly::zero();
    for _ in 0..rng.gen_range(1..=3) {
        let degree = rng.gen_range(1..=max_degree);
        // weight -1 means the derivative orders add up to degree - 1
        let mut orders = vec![0u32; degree];
        for _ in 0..degree - 1 {
            let i = rng.gen_range(0..degree);
            orders[i] += 1;
        }
        let vars = orders
            .into_iter()
            .map(|p| {
                let g = LETTERS[rng.gen_range(0..ngens.min(LETTERS.len()))];
                DiffVar::new(g, p, rng.gen_range(-index_range..=index_range))
            })
            .collect();
        out.add_term(Monomial::from_vars(vars), small_rational(rng));
    }
    out
}

/// Random polynomial without any homogeneity constraint.
pub fn random_poly<R: Rng>(rng: &mut R, ngens: usize, max_degree: usize) -> DiffPoly {
    let mut out = DiffPoly::zero();
    for _ in 0..rng.gen_range(0..=3) {
        let degree = rng.gen_range(0..=max_degree);
        let vars = (0..degree)
            .map(|_| {
                let g = LETTERS[rng.gen_range(0..ngens.min(LETTERS.len()))];
                DiffVar::new(g, rng.gen_range(0..3), rng.gen_range(-2..=2))
            })
            .collect();
        out.add_term(Monomial::from_vars(vars), small_rational(rng));
    }
    out
}
