//! Finite sums of elementary adelic functions and their exact norm.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::adelic::{adelic_inner, AdelicFunction};
use crate::error::{Error, Result};
use crate::local::LocalFunction;
use crate::padic::{Ball, PAdicScalar, Prime};

/// sum_r c_r f_r, kept as an explicit list.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AdelicSum {
    pub pieces: Vec<(Complex64, AdelicFunction)>,
}

impl From<AdelicFunction> for AdelicSum {
    fn from(f: AdelicFunction) -> Self {
        AdelicSum {
            pieces: vec![(Complex64::new(1.0, 0.0), f)],
        }
    }
}

/// A factor expanded over (atom, frequency) pairs.
type Expansion = Vec<((usize, PAdicScalar), Complex64)>;

impl AdelicSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, c: Complex64, f: AdelicFunction) {
        self.pieces.push((c, f));
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn has_real(&self) -> Result<bool> {
        let mut it = self.pieces.iter().map(|(_, f)| f.has_real());
        let Some(first) = it.next() else {
            return Ok(false);
        };
        if it.any(|h| h != first) {
            return Err(Error::RealPlaceMismatch);
        }
        Ok(first)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        AdelicSum {
            pieces: self
                .pieces
                .iter()
                .map(|(a, f)| (a * c, f.clone()))
                .collect(),
        }
    }

    pub fn add(&self, other: &AdelicSum) -> Self {
        let mut pieces = self.pieces.clone();
        pieces.extend(other.pieces.iter().cloned());
        AdelicSum { pieces }
    }

    pub fn sub(&self, other: &AdelicSum) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn evaluate(&self, x: &crate::adelic::AdelePoint) -> Complex64 {
        self.pieces.iter().map(|(c, f)| c * f.evaluate(x)).sum()
    }

    /// (f, g) by bilinearity.
    pub fn inner(&self, other: &AdelicSum) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, f) in &self.pieces {
            for (b, g) in &other.pieces {
                acc += a * b.conj() * adelic_inner(f, g)?;
            }
        }
        Ok(acc)
    }

    /// ||f||^2 computed on a common refinement of all pieces, so that
    /// cancellation between pieces is exact up to rounding of the values.
    pub fn norm_sq(&self) -> Result<f64> {
        let with_real = self.has_real()?;
        let primes: BTreeSet<Prime> = self
            .pieces
            .iter()
            .flat_map(|(_, f)| f.stored_factors().keys().copied())
            .collect();
        let primes: Vec<Prime> = primes.into_iter().collect();

        // Per prime: atoms and per-piece expansions over (atom, freq).
        let mut place_measures: Vec<Vec<f64>> = Vec::new();
        let mut expansions: Vec<Vec<Expansion>> = vec![Vec::new(); self.pieces.len()];
        for &q in &primes {
            let factors: Vec<LocalFunction> =
                self.pieces.iter().map(|(_, f)| f.factor(q)).collect();
            let atoms = atoms(
                factors
                    .iter()
                    .flat_map(|f| f.terms().iter().map(|t| t.ball.clone())),
            );
            place_measures.push(atoms.iter().map(Ball::measure).collect());
            for (r, f) in factors.iter().enumerate() {
                expansions[r].push(expand(f, &atoms));
            }
        }

        let level = self
            .pieces
            .iter()
            .filter_map(|(_, f)| f.real().map(|r| r.level()))
            .max()
            .unwrap_or(0);
        let h = 2f64.powi(-(level as i32));

        type Key = (i64, Vec<(usize, PAdicScalar)>);
        let mut acc: BTreeMap<Key, Complex64> = BTreeMap::new();
        for (r, (c, f)) in self.pieces.iter().enumerate() {
            let reals: Vec<(i64, Complex64)> = match f.real() {
                Some(rf) => rf.values_at_level(level).into_iter().collect(),
                None => vec![(0, Complex64::new(1.0, 0.0))],
            };
            let mut partial: Vec<(Vec<(usize, PAdicScalar)>, Complex64)> = vec![(Vec::new(), *c)];
            for place in &expansions[r] {
                let mut next = Vec::with_capacity(partial.len() * place.len());
                for (key, v) in &partial {
                    for (k, w) in place {
                        let mut key = key.clone();
                        key.push(k.clone());
                        next.push((key, v * w));
                    }
                }
                partial = next;
            }
            for (n, rv) in &reals {
                for (key, v) in &partial {
                    *acc.entry((*n, key.clone()))
                        .or_insert(Complex64::new(0.0, 0.0)) += v * rv;
                }
            }
        }
        let mut total = 0.0;
        for ((_, key), v) in acc {
            let mut m = if with_real { h } else { 1.0 };
            for (i, (atom, _)) in key.iter().enumerate() {
                m *= place_measures[i][*atom];
            }
            total += v.norm_sqr() * m;
        }
        Ok(total)
    }

    pub fn norm(&self) -> Result<f64> {
        Ok(self.norm_sq()?.sqrt())
    }
}

/// Disjoint balls such that every input ball is a union of them.
pub(crate) fn atoms(balls: impl Iterator<Item = Ball>) -> Vec<Ball> {
    let mut set: BTreeSet<Ball> = balls.collect();
    loop {
        let list: Vec<&Ball> = set.iter().collect();
        let split = list.iter().find(|a| {
            list.iter()
                .any(|b| b.gamma() < a.gamma() && a.contains_ball(b))
        });
        let Some(&a) = split else { break };
        let a = a.clone();
        set.remove(&a);
        set.extend(a.children());
    }
    set.into_iter().collect()
}

/// Coefficients of f on the orthogonal system chi(b x) 1_A, A an atom and
/// b visible on A.
fn expand(f: &LocalFunction, atoms: &[Ball]) -> Vec<((usize, PAdicScalar), Complex64)> {
    let mut out: BTreeMap<(usize, PAdicScalar), Complex64> = BTreeMap::new();
    for t in f.terms() {
        for (i, a) in atoms.iter().enumerate() {
            if t.ball.contains_ball(a) {
                let s = t.restricted_to(a);
                *out.entry((i, s.freq.clone()))
                    .or_insert(Complex64::new(0.0, 0.0)) += s.coefficient();
            }
        }
    }
    out.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::DyadicStepFunction;
    use crate::wavelet::kozyrev;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn cancellation_is_exact() {
        let k = kozyrev(Prime::TWO, 1, 0, &PAdicScalar::zero()).unwrap();
        // psi on Z_2 written as two half-ball indicators
        let plus = LocalFunction::indicator(&Ball::new(Prime::TWO, &PAdicScalar::zero(), -1));
        let minus = LocalFunction::indicator(&Ball::new(Prime::TWO, &PAdicScalar::one(), -1));
        let mut s = AdelicSum::from(AdelicFunction::from_factors(None, [k]));
        s.push(c(-1.0), AdelicFunction::from_factors(None, [plus]));
        s.push(c(1.0), AdelicFunction::from_factors(None, [minus]));
        assert_eq!(s.norm_sq().unwrap(), 0.0);
    }

    #[test]
    fn norm_matches_inner_for_orthogonal_pieces() {
        let a = kozyrev(Prime::TWO, 1, 1, &PAdicScalar::ratio(1, 2)).unwrap();
        let b = kozyrev(Prime::THREE, 2, -1, &PAdicScalar::zero()).unwrap();
        let mut s = AdelicSum::new();
        s.push(c(2.0), AdelicFunction::from_factors(None, [a.clone()]));
        s.push(
            Complex64::new(0.0, 1.0),
            AdelicFunction::from_factors(None, [a, b]),
        );
        let via_inner = s.inner(&s).unwrap().re;
        assert!((s.norm_sq().unwrap() - via_inner).abs() < 1e-13);
        assert!((via_inner - 5.0).abs() < 1e-13);
    }

    #[test]
    fn real_place_refinement() {
        let phi = AdelicFunction::refinable(true);
        let halves = AdelicFunction::from_factors(
            Some(DyadicStepFunction::haar_wavelet(0, 0)),
            std::iter::empty(),
        );
        let mut s = AdelicSum::from(phi.clone());
        s.push(c(1.0), halves);
        // 2 on [0,1/2), 0 on [1/2,1)
        assert!((s.norm_sq().unwrap() - 2.0).abs() < 1e-15);
        s.push(c(1.0), AdelicFunction::refinable(false));
        assert!(s.norm_sq().is_err());
    }
}
