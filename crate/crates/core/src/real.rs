//! The real place: finite step functions on dyadic intervals.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::local::DEFAULT_TOL;

/// One dyadic piece amp * 1_{[n 2^{-j}, (n+1) 2^{-j})}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicPiece {
    pub j: i64,
    pub n: i64,
    pub amp: Complex64,
}

/// A complex step function on half-open dyadic intervals, stored at the
/// coarsest common level on which it is a step function.
#[derive(Clone, Debug, PartialEq)]
pub struct DyadicStepFunction {
    level: i64,
    values: BTreeMap<i64, Complex64>,
}

impl Serialize for DyadicStepFunction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            pieces: Vec<DyadicPiece>,
        }
        Repr {
            pieces: self.pieces(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DyadicStepFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            pieces: Vec<DyadicPiece>,
        }
        let r = Repr::deserialize(d)?;
        Ok(DyadicStepFunction::from_pieces(&r.pieces))
    }
}

fn pow2(e: i64) -> BigRational {
    let b = num_traits::pow(BigInt::from(2), e.unsigned_abs() as usize);
    if e >= 0 {
        BigRational::from_integer(b)
    } else {
        BigRational::new(BigInt::one(), b)
    }
}

impl DyadicStepFunction {
    pub fn zero() -> Self {
        DyadicStepFunction {
            level: 0,
            values: BTreeMap::new(),
        }
    }

    /// Sums possibly overlapping pieces at arbitrary levels.
    pub fn from_pieces(pieces: &[DyadicPiece]) -> Self {
        let Some(level) = pieces.iter().map(|p| p.j).max() else {
            return Self::zero();
        };
        let mut values = BTreeMap::new();
        for pc in pieces {
            let k = 1i64 << (level - pc.j);
            for m in 0..k {
                *values.entry(pc.n * k + m).or_insert(Complex64::zero()) += pc.amp;
            }
        }
        DyadicStepFunction { level, values }.canonicalize()
    }

    /// phi^H = 1_{[0,1)}.
    pub fn haar_scaling() -> Self {
        Self::from_pieces(&[DyadicPiece {
            j: 0,
            n: 0,
            amp: Complex64::new(1.0, 0.0),
        }])
    }

    /// psi^H_{jn}(t) = 2^{j/2} psi^H(2^j t - n).
    pub fn haar_wavelet(j: i64, n: i64) -> Self {
        let a = 2f64.powf(j as f64 / 2.0);
        Self::from_pieces(&[
            DyadicPiece {
                j: j + 1,
                n: 2 * n,
                amp: Complex64::new(a, 0.0),
            },
            DyadicPiece {
                j: j + 1,
                n: 2 * n + 1,
                amp: Complex64::new(-a, 0.0),
            },
        ])
    }

    pub fn level(&self) -> i64 {
        self.level
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    pub fn pieces(&self) -> Vec<DyadicPiece> {
        self.values
            .iter()
            .map(|(&n, &amp)| DyadicPiece {
                j: self.level,
                n,
                amp,
            })
            .collect()
    }

    /// Values on the level-`l` grid (l >= own level).
    pub fn values_at_level(&self, l: i64) -> BTreeMap<i64, Complex64> {
        assert!(l >= self.level);
        let k = 1i64 << (l - self.level);
        let mut out = BTreeMap::new();
        for (&n, &a) in &self.values {
            for m in 0..k {
                out.insert(n * k + m, a);
            }
        }
        out
    }

    pub fn canonicalize(&self) -> Self {
        self.canonicalize_with(DEFAULT_TOL)
    }

    pub fn canonicalize_with(&self, tol: f64) -> Self {
        let mut level = self.level;
        let mut values: BTreeMap<i64, Complex64> = self
            .values
            .iter()
            .filter(|(_, a)| a.norm() > tol)
            .map(|(&n, &a)| (n, a))
            .collect();
        if values.is_empty() {
            return Self::zero();
        }
        loop {
            let mut coarse = BTreeMap::new();
            let mut ok = true;
            for (&n, &a) in &values {
                let parent = n.div_euclid(2);
                if coarse.contains_key(&parent) {
                    continue;
                }
                let sib = parent * 2 + (1 - n.rem_euclid(2));
                match values.get(&sib) {
                    Some(&b) if (a - b).norm() <= tol * a.norm().max(1.0) => {
                        coarse.insert(parent, (a + b) / 2.0);
                    }
                    _ => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                break;
            }
            values = coarse;
            level -= 1;
        }
        DyadicStepFunction { level, values }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        let l = self.level.max(other.level);
        let a = self.values_at_level(l);
        let b = other.values_at_level(l);
        let mut keys: Vec<i64> = a.keys().chain(b.keys()).copied().collect();
        keys.sort_unstable();
        keys.dedup();
        let z = Complex64::zero();
        let values = keys
            .into_iter()
            .map(|k| (k, f(*a.get(&k).unwrap_or(&z), *b.get(&k).unwrap_or(&z))))
            .collect();
        DyadicStepFunction { level: l, values }.canonicalize()
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn multiply(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        DyadicStepFunction {
            level: self.level,
            values: self.values.iter().map(|(&n, &a)| (n, a * c)).collect(),
        }
        .canonicalize()
    }

    /// g(t) = f(t - m).
    pub fn translate(&self, m: i64) -> Self {
        let l = self.level.max(0);
        let k = 1i64 << l;
        DyadicStepFunction {
            level: l,
            values: self
                .values_at_level(l)
                .into_iter()
                .map(|(n, a)| (n + m * k, a))
                .collect(),
        }
        .canonicalize()
    }

    /// g(t) = f(2^j t).
    pub fn dilate(&self, j: i64) -> Self {
        DyadicStepFunction {
            level: self.level + j,
            values: self.values.clone(),
        }
    }

    pub fn evaluate(&self, t: &BigRational) -> Complex64 {
        let n = (t * pow2(self.level)).floor().to_integer();
        n.to_i64()
            .and_then(|n| self.values.get(&n).copied())
            .unwrap_or_else(Complex64::zero)
    }

    pub fn integrate(&self) -> Complex64 {
        self.moment(0)
    }

    /// integral of t^s f(t) dt.
    pub fn moment(&self, s: u32) -> Complex64 {
        let h = pow2(-self.level);
        let e = s as usize + 1;
        let mut acc = Complex64::zero();
        for (&n, &a) in &self.values {
            let lo = BigRational::from_integer(n.into()) * &h;
            let hi = &lo + &h;
            let w = (num_traits::pow(hi, e) - num_traits::pow(lo, e))
                / BigRational::from_integer(BigInt::from(e));
            acc += a * w.to_f64().unwrap_or(f64::NAN);
        }
        acc
    }

    pub fn inner(&self, other: &Self) -> Complex64 {
        let l = self.level.max(other.level);
        let a = self.values_at_level(l);
        let b = other.values_at_level(l);
        let h = 2f64.powi(-(l as i32));
        let s: Complex64 = a
            .iter()
            .filter_map(|(k, x)| b.get(k).map(|y| x * y.conj()))
            .sum();
        s * h
    }

    pub fn norm_sq(&self) -> f64 {
        let h = 2f64.powi(-(self.level as i32));
        self.values.values().map(|a| a.norm_sqr()).sum::<f64>() * h
    }

    /// True iff the pointwise value of the step function is one everywhere
    /// on [0,1) and zero elsewhere.
    pub fn is_haar_scaling(&self, tol: f64) -> bool {
        self.level == 0
            && self.values.len() == 1
            && self
                .values
                .get(&0)
                .is_some_and(|a| (a - Complex64::one()).norm() <= tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn scaling_examples() {
        let phi = DyadicStepFunction::haar_scaling();
        assert_eq!(phi.integrate(), Complex64::new(1.0, 0.0));
        assert_eq!(phi.norm_sq(), 1.0);
        // phi(t) = phi(2t) + phi(2t - 1)
        let refined = phi.dilate(1).add(&phi.translate(1).dilate(1));
        assert_eq!(refined, phi);
    }

    #[test]
    fn wavelet_examples() {
        let w = DyadicStepFunction::haar_wavelet(0, 0);
        assert_eq!(w.evaluate(&r(1, 4)), Complex64::new(1.0, 0.0));
        assert_eq!(w.evaluate(&r(3, 4)), Complex64::new(-1.0, 0.0));
        assert_eq!(w.evaluate(&r(1, 1)), Complex64::zero());
        assert_eq!(w.integrate(), Complex64::zero());
        assert_eq!(w.moment(1), Complex64::new(-0.25, 0.0));
        assert_eq!(
            DyadicStepFunction::haar_scaling().moment(1),
            Complex64::new(0.5, 0.0)
        );
    }

    #[test]
    fn haar_orthonormality_box() {
        let mut fns = Vec::new();
        for j in -3..=3 {
            for n in -4..=4 {
                fns.push(DyadicStepFunction::haar_wavelet(j, n));
            }
        }
        for (a, f) in fns.iter().enumerate() {
            for (b, g) in fns.iter().enumerate() {
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((f.inner(g) - want).norm() < 1e-14, "{a} {b}");
            }
        }
    }

    #[test]
    fn dilate_and_translate() {
        let w = DyadicStepFunction::haar_wavelet(0, 0);
        // psi_{j n} = 2^{j/2} psi(2^j t - n)
        let built = w.translate(3).dilate(2).scale(Complex64::new(2.0, 0.0));
        assert!(built.sub(&DyadicStepFunction::haar_wavelet(2, 3)).is_zero());
        let coarse = DyadicStepFunction::haar_wavelet(-2, 1);
        assert_eq!(coarse.evaluate(&r(5, 1)), Complex64::new(0.5, 0.0));
        assert_eq!(coarse.evaluate(&r(7, 1)), Complex64::new(-0.5, 0.0));
    }

    #[test]
    fn json_round_trip() {
        let w = DyadicStepFunction::haar_wavelet(1, -2);
        let s = serde_json::to_string(&w).unwrap();
        assert_eq!(serde_json::from_str::<DyadicStepFunction>(&s).unwrap(), w);
    }
}
