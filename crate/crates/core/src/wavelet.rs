//! Wavelet families on Q_p: Kozyrev wavelets, the parametric Haar family,
//! modified bases and their restrictions to Z_p.

use std::collections::BTreeMap;

use num_complex::Complex64;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::local::{CharBallTerm, LocalFunction};
use crate::padic::{enumerate_shifts, Ball, PAdicScalar, Prime, ShiftIndex, UnitPhase};

/// One basis element at a p-adic place: a shift of the refinable function
/// phi = Omega(|x|_p), or a Kozyrev wavelet psi_{k;j,a}.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LocalIndex {
    Scaling { a: PAdicScalar },
    Wavelet { k: u64, j: i64, a: PAdicScalar },
}

impl LocalIndex {
    pub fn scaling(a: PAdicScalar) -> Self {
        LocalIndex::Scaling { a }
    }

    pub fn wavelet(k: u64, j: i64, a: PAdicScalar) -> Self {
        LocalIndex::Wavelet { k, j, a }
    }

    pub fn shift(&self) -> &PAdicScalar {
        match self {
            LocalIndex::Scaling { a } | LocalIndex::Wavelet { a, .. } => a,
        }
    }

    pub fn is_wavelet(&self) -> bool {
        matches!(self, LocalIndex::Wavelet { .. })
    }

    pub fn validate(&self, p: Prime) -> Result<()> {
        if let LocalIndex::Wavelet { k, .. } = self {
            check_k(p, *k)?;
        }
        ShiftIndex::new(p, self.shift().clone()).map(|_| ())
    }

    pub fn build(&self, p: Prime) -> Result<LocalFunction> {
        match self {
            LocalIndex::Scaling { a } => {
                ShiftIndex::new(p, a.clone())?;
                Ok(LocalFunction::omega(p).translate(a))
            }
            LocalIndex::Wavelet { k, j, a } => kozyrev(p, *k, *j, a),
        }
    }
}

fn check_k(p: Prime, k: u64) -> Result<()> {
    if k == 0 || k >= p.get() {
        return Err(Error::InvalidWaveletIndex { p: p.get(), k });
    }
    Ok(())
}

/// psi^(0)_k(x) = chi_p(k x / p) Omega(|x|_p).
pub fn kozyrev_generator(p: Prime, k: u64) -> Result<LocalFunction> {
    check_k(p, k)?;
    Ok(LocalFunction::omega(p).modulate(&PAdicScalar::ratio(k as i64, p.get() as i64)))
}

/// psi_{k;j,a}(x) = p^{j/2} chi_p((k/p)(p^{-j}x - a)) Omega(|p^{-j}x - a|_p).
pub fn kozyrev(p: Prime, k: u64, j: i64, a: &PAdicScalar) -> Result<LocalFunction> {
    ShiftIndex::new(p, a.clone())?;
    let g = kozyrev_generator(p, k)?;
    Ok(normalized_copy(&g, j, a))
}

/// p^{j/2} f(p^{-j} x - a).
pub fn normalized_copy(f: &LocalFunction, j: i64, a: &PAdicScalar) -> LocalFunction {
    let c = f.p().powf(j as f64 / 2.0);
    f.translate(a).dilate(j).scale(Complex64::new(c, 0.0))
}

/// Kozyrev functions over k in 1..p, j in [j_lo, j_hi], shifts of the given
/// depth, ordered by (j, a, k).
pub fn kozyrev_basis(
    p: Prime,
    j_lo: i64,
    j_hi: i64,
    depth: u32,
) -> Vec<(LocalIndex, LocalFunction)> {
    let shifts = enumerate_shifts(p, depth);
    let mut out = Vec::new();
    for j in j_lo..=j_hi {
        for a in &shifts {
            for k in 1..p.get() {
                let idx = LocalIndex::wavelet(k, j, a.value().clone());
                let f = idx.build(p).expect("valid index");
                out.push((idx, f));
            }
        }
    }
    out
}

/// Modified basis {phi(x - a)} plus {psi_{k;j,a} : 0 <= j <= j_max}, shifts
/// up to denominator p^depth.
pub fn modified_basis(p: Prime, j_max: u32, depth: u32) -> Vec<(LocalIndex, LocalFunction)> {
    let shifts = enumerate_shifts(p, depth);
    let mut out: Vec<(LocalIndex, LocalFunction)> = shifts
        .iter()
        .map(|a| {
            let idx = LocalIndex::scaling(a.value().clone());
            let f = idx.build(p).expect("valid shift");
            (idx, f)
        })
        .collect();
    out.extend(kozyrev_basis(p, 0, j_max as i64, depth));
    out
}

/// P^[0] f = f * Omega(|x|_p).
pub fn restrict_to_unit_ball(f: &LocalFunction) -> LocalFunction {
    f.multiply(&LocalFunction::omega(f.p()))
}

/// The basis of L^2(Z_p): phi plus restricted Kozyrev functions with
/// 0 <= j <= j_max and a in I_p^j.
pub fn restricted_basis(p: Prime, j_max: u32) -> Vec<(LocalIndex, LocalFunction)> {
    let mut out = vec![(
        LocalIndex::scaling(PAdicScalar::zero()),
        LocalFunction::omega(p),
    )];
    for j in 0..=j_max {
        for a in enumerate_shifts(p, j) {
            for k in 1..p.get() {
                let idx = LocalIndex::wavelet(k, j as i64, a.value().clone());
                let f = restrict_to_unit_ball(&idx.build(p).expect("valid index"));
                out.push((idx, f));
            }
        }
    }
    out
}

/// Shifts a of the given depth for which the restriction of
/// `make(a)` to Z_p does not vanish.
pub fn nonvanishing_shifts(
    p: Prime,
    depth: u32,
    make: impl Fn(&PAdicScalar) -> LocalFunction,
) -> Vec<PAdicScalar> {
    enumerate_shifts(p, depth)
        .into_iter()
        .map(|a| a.value().clone())
        .filter(|a| !restrict_to_unit_ball(&make(a)).is_zero())
        .collect()
}

/// Coefficients of f in the scaling family phi_{J,b}(x) = p^{J/2} phi(p^{-J}x - b),
/// i.e. indicators of balls of radius p^{-J}. Exact when f is constant on
/// such balls.
pub fn scaling_expansion(f: &LocalFunction, level: i64) -> Vec<(PAdicScalar, Complex64)> {
    let p = f.p();
    let down = PAdicScalar::prime_power(p, -level);
    let norm = p.powf(level as f64 / 2.0);
    let mut balls: Vec<Ball> = Vec::new();
    for t in f.terms() {
        let mut frontier = vec![t.ball.clone()];
        while frontier[0].gamma() > -level {
            frontier = frontier.iter().flat_map(Ball::children).collect();
        }
        balls.extend(frontier);
    }
    let mut out = BTreeMap::new();
    for b in balls {
        let phi = LocalFunction::indicator(&b).scale(Complex64::new(norm, 0.0));
        let c = f.inner(&phi);
        out.insert(b.center() * &down, c);
    }
    out.into_iter().collect()
}

/// Rebuild sum_b c_b phi_{J,b}.
pub fn scaling_synthesis(
    p: Prime,
    level: i64,
    coeffs: &[(PAdicScalar, Complex64)],
) -> LocalFunction {
    let up = PAdicScalar::prime_power(p, level);
    let norm = p.powf(level as f64 / 2.0);
    let terms = coeffs
        .iter()
        .map(|(b, c)| {
            CharBallTerm::new(
                c * norm,
                UnitPhase::zero(),
                PAdicScalar::zero(),
                Ball::new(p, &(b * &up), -level),
            )
        })
        .collect();
    LocalFunction::from_terms(p, terms).expect("same prime")
}

/// Parameters of the compactly supported Haar wavelet family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HaarFamilyParams {
    pub p: Prime,
    pub s: u32,
    /// (p-1) x (p-1) unitary matrix, rows indexed by mu-1.
    pub u: Vec<Vec<Complex64>>,
    /// (p-1) x p^s unimodular phases sigma_{mu m}.
    pub sigma: Vec<Vec<Complex64>>,
}

const PARAM_TOL: f64 = 1e-10;

impl HaarFamilyParams {
    pub fn validate(&self) -> Result<()> {
        let n = (self.p.get() - 1) as usize;
        let m = self.p.get().pow(self.s) as usize;
        if self.u.len() != n || self.u.iter().any(|r| r.len() != n) {
            return Err(Error::Shape(format!("U must be {n}x{n}")));
        }
        if self.sigma.len() != n || self.sigma.iter().any(|r| r.len() != m) {
            return Err(Error::Shape(format!("sigma must be {n}x{m}")));
        }
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let g: Complex64 = (0..n).map(|k| self.u[k][i].conj() * self.u[k][j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((g - want).norm());
            }
        }
        if dev > PARAM_TOL {
            return Err(Error::NotUnitary(dev));
        }
        for z in self.sigma.iter().flatten() {
            if (z.norm() - 1.0).abs() > PARAM_TOL {
                return Err(Error::NotUnimodular(z.norm()));
            }
        }
        Ok(())
    }

    /// Seeded random parameters: U from Gram-Schmidt on complex Gaussians,
    /// sigma uniform on the circle.
    pub fn random(p: Prime, s: u32, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = (p.get() - 1) as usize;
        let u = random_unitary(n, &mut rng);
        let m = p.get().pow(s) as usize;
        let sigma = (0..n)
            .map(|_| (0..m).map(|_| random_unimodular(&mut rng)).collect())
            .collect();
        HaarFamilyParams { p, s, u, sigma }
    }
}

pub(crate) fn random_unimodular(rng: &mut impl Rng) -> Complex64 {
    let t: f64 = rng.gen::<f64>() * 2.0 * std::f64::consts::PI;
    Complex64::new(t.cos(), t.sin())
}

/// Unitary matrix from modified Gram-Schmidt on Gaussian columns.
pub fn random_unitary(n: usize, rng: &mut impl Rng) -> Vec<Vec<Complex64>> {
    let mut cols: Vec<Vec<Complex64>> = (0..n)
        .map(|_| {
            (0..n)
                .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect()
        })
        .collect();
    for i in 0..n {
        for k in 0..i {
            let (done, rest) = cols.split_at_mut(i);
            let proj: Complex64 = (0..n).map(|r| done[k][r].conj() * rest[0][r]).sum();
            for r in 0..n {
                rest[0][r] -= proj * done[k][r];
            }
        }
        let nrm = cols[i].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in cols[i].iter_mut() {
            *z /= nrm;
        }
    }
    // u[row][col]
    (0..n)
        .map(|r| (0..n).map(|c| cols[c][r]).collect())
        .collect()
}

fn turn(r: BigRational) -> Complex64 {
    UnitPhase::new(r).to_complex()
}

/// alpha^mu_{nu;k} for nu in 1..p (outer) and k in 0..p^s (inner).
pub fn haar_coefficients(params: &HaarFamilyParams, mu: u64) -> Result<Vec<Vec<Complex64>>> {
    params.validate()?;
    let p = params.p;
    check_k(p, mu)?;
    let pu = p.get() as i64;
    let ps = pu.pow(params.s);
    let rat = |n: i64, d: i64| BigRational::new(n.into(), d.into());
    let mut out = Vec::with_capacity((pu - 1) as usize);
    for nu in 1..pu {
        let mut row = Vec::with_capacity(ps as usize);
        for k in 0..ps {
            // e^{-2 pi i ((-nu/p + m)/p^s) k} = turn((nu - m p) k / p^{s+1})
            let kernel = |m: i64| turn(rat((nu - m * pu) * k, ps * pu));
            let mu_i = mu as i64;
            let v = if mu_i == nu {
                let s: Complex64 = (0..ps)
                    .map(|m| kernel(m) * params.sigma[(mu - 1) as usize][m as usize])
                    .sum();
                -s * params.u[(mu - 1) as usize][(mu - 1) as usize] / ps as f64
            } else {
                let num = Complex64::new(1.0, 0.0) - turn(rat(mu_i - nu, pu));
                let mut s = Complex64::new(0.0, 0.0);
                for m in 0..ps {
                    for n in 0..ps {
                        // ((mu-nu)/p + m - n)/p^s
                        let e = rat(mu_i - nu + (m - n) * pu, pu * ps);
                        if e.is_integer() {
                            return Err(Error::DivisionGuard);
                        }
                        let den = Complex64::new(1.0, 0.0) - turn(e);
                        s += kernel(m) * num / den * params.sigma[(nu - 1) as usize][m as usize];
                    }
                }
                -s * params.u[(nu - 1) as usize][(mu - 1) as usize] / (ps * ps) as f64
            };
            row.push(v);
        }
        out.push(row);
    }
    Ok(out)
}

/// psi_mu(x) = sum_nu sum_k alpha^mu_{nu;k} psi^(0)_nu(x - k/p^s).
pub fn haar_wavelet(params: &HaarFamilyParams, mu: u64) -> Result<LocalFunction> {
    let alpha = haar_coefficients(params, mu)?;
    Ok(kozyrev_combination(params.p, params.s, &alpha))
}

fn kozyrev_combination(p: Prime, s: u32, alpha: &[Vec<Complex64>]) -> LocalFunction {
    let ps = p.get().pow(s) as i64;
    let mut acc = LocalFunction::zero(p);
    for (nu_i, row) in alpha.iter().enumerate() {
        let g = kozyrev_generator(p, nu_i as u64 + 1).expect("valid nu");
        let mut terms = Vec::new();
        for (k, c) in row.iter().enumerate() {
            let shifted = g.translate(&PAdicScalar::ratio(k as i64, ps)).scale(*c);
            terms.extend(shifted.terms().iter().cloned());
        }
        let part = LocalFunction::from_terms(p, terms).expect("same prime");
        acc = acc.add(&part);
    }
    acc
}

/// alpha_k = 2^{-s} sum_r gamma_r e^{-i pi (2r-1) k / 2^s}.
pub fn haar2_coefficients(s: u32, gamma: &[Complex64]) -> Result<Vec<Complex64>> {
    let ps = 1i64 << s;
    if gamma.len() != ps as usize {
        return Err(Error::Shape(format!("expected {ps} phases")));
    }
    if let Some(g) = gamma.iter().find(|g| (g.norm() - 1.0).abs() > PARAM_TOL) {
        return Err(Error::NotUnimodular(g.norm()));
    }
    Ok((0..ps)
        .map(|k| {
            let s: Complex64 = (0..ps)
                .map(|r| {
                    gamma[r as usize]
                        * turn(BigRational::new((-(2 * r - 1) * k).into(), (2 * ps).into()))
                })
                .sum();
            s / ps as f64
        })
        .collect())
}

/// The p = 2 wavelet sum_k alpha_k psi^(0)(x - k/2^s).
pub fn haar2_wavelet(s: u32, gamma: &[Complex64]) -> Result<LocalFunction> {
    let alpha = haar2_coefficients(s, gamma)?;
    Ok(kozyrev_combination(Prime::TWO, s, &[alpha]))
}

/// Seeded unimodular phases for `haar2_wavelet`.
pub fn random_haar2_phases(s: u32, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..1usize << s)
        .map(|_| random_unimodular(&mut rng))
        .collect()
}
