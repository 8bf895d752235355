//! Shared fixture generators for the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use adelion::padic::enumerate_shifts;
use adelion::{
    AdelicIndex, AdelicSum, Ball, CharBallTerm, LocalFunction, LocalIndex, PAdicScalar, Prime,
    UnitPhase,
};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn prime(p: u64) -> Prime {
    Prime::new(p).unwrap()
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// A rational with p-power denominator up to p^max_e.
pub fn random_scalar(rng: &mut impl Rng, p: Prime, max_e: u32) -> PAdicScalar {
    let e = rng.gen_range(0..=max_e);
    let den = p.get().pow(e) as i64;
    PAdicScalar::ratio(rng.gen_range(-30..=30), den)
}

pub fn random_amp(rng: &mut impl Rng) -> Complex64 {
    c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// A random finite sum of character-ball terms.
pub fn random_local_function(rng: &mut impl Rng, p: Prime) -> LocalFunction {
    let n = rng.gen_range(1..=4);
    let terms = (0..n)
        .map(|_| {
            let ball = Ball::new(p, &random_scalar(rng, p, 2), rng.gen_range(-2..=2));
            CharBallTerm::new(
                random_amp(rng),
                UnitPhase::ratio(rng.gen_range(0..12), 12),
                random_scalar(rng, p, 2),
                ball,
            )
        })
        .collect();
    LocalFunction::from_terms(p, terms).unwrap()
}

/// A wavelet index with a Kozyrev wavelet at every prime <= m.
pub fn random_wavelet_index(
    rng: &mut impl Rng,
    m: Prime,
    j: std::ops::RangeInclusive<i64>,
    depth: u32,
) -> AdelicIndex {
    let mut places = BTreeMap::new();
    for q in Prime::up_to(m) {
        let k = rng.gen_range(1..q.get());
        let jq = rng.gen_range(j.clone());
        let shifts = enumerate_shifts(q, depth);
        let a = shifts.choose(rng).unwrap().value().clone();
        places.insert(q, LocalIndex::wavelet(k, jq, a));
    }
    AdelicIndex { real: None, places }
}

/// sum of `n` random wavelets with random coefficients, with the known
/// expansion (duplicates merged).
pub fn random_wavelet_sum(
    rng: &mut impl Rng,
    ms: &[u64],
    n: usize,
    j: std::ops::RangeInclusive<i64>,
    depth: u32,
) -> (AdelicSum, BTreeMap<AdelicIndex, Complex64>) {
    let mut sum = AdelicSum::new();
    let mut want: BTreeMap<AdelicIndex, Complex64> = BTreeMap::new();
    for _ in 0..n {
        let m = prime(*ms.choose(rng).unwrap());
        let alpha = random_wavelet_index(rng, m, j.clone(), depth);
        let coef = random_amp(rng);
        sum.push(coef, alpha.build().unwrap());
        *want.entry(alpha).or_insert(c(0.0, 0.0)) += coef;
    }
    (sum, want)
}
