//! Lizorkin membership and finite wavelet decomposition on the finite adeles.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::adelic::{AdelicIndex, Place};
use crate::error::{Error, Result};
use crate::local::{LocalFunction, DEFAULT_TOL};
use crate::padic::{enumerate_shifts, Ball, PAdicScalar, Prime};
use crate::sum::AdelicSum;
use crate::wavelet::{kozyrev, LocalIndex};

/// Outcome of the Lizorkin test at one place.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaceCheck {
    pub place: Place,
    pub passes: bool,
    /// Norm of the marginal integral over this place (largest over real moments).
    pub marginal_norm: f64,
    /// For a single elementary function: the integral of its factor at this
    /// place, or the real moments 0..=N.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub integrals: Vec<Complex64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LizorkinReport {
    pub passes: bool,
    pub places: Vec<PlaceCheck>,
}

impl LizorkinReport {
    pub fn first_failure(&self) -> Option<&PlaceCheck> {
        self.places.iter().find(|c| !c.passes)
    }
}

/// Groups pieces by finiteness parameter.
fn groups(f: &AdelicSum) -> BTreeMap<Prime, AdelicSum> {
    let mut out: BTreeMap<Prime, AdelicSum> = BTreeMap::new();
    for (c, g) in &f.pieces {
        out.entry(g.finiteness()).or_default().push(*c, g.clone());
    }
    out
}

/// Lizorkin test. For every group of pieces sharing a finiteness parameter
/// P and every prime r <= P the marginal integral over x_r must vanish; at
/// the real place the moments 0..=moment_max must vanish.
pub fn lizorkin_check(f: &AdelicSum, moment_max: u32, tol: f64) -> Result<LizorkinReport> {
    let with_real = f.has_real()?;
    let single = f.len() == 1;
    let mut checks: BTreeMap<Place, PlaceCheck> = BTreeMap::new();
    let mut record = |place: Place, norm: f64, integrals: Vec<Complex64>| {
        let e = checks.entry(place).or_insert(PlaceCheck {
            place,
            passes: true,
            marginal_norm: 0.0,
            integrals: Vec::new(),
        });
        e.marginal_norm = e.marginal_norm.max(norm);
        e.passes = e.marginal_norm <= tol;
        if single {
            e.integrals = integrals;
        }
    };
    for (p_max, group) in groups(f) {
        for r in Prime::up_to(p_max) {
            let mut marginal = AdelicSum::new();
            let mut ints = Vec::new();
            for (c, g) in &group.pieces {
                let i = g.factor(r).integrate();
                ints.push(i);
                let rest = g.with_factor(LocalFunction::omega(r));
                marginal.push(c * i, rest);
            }
            record(Place::Finite(r), marginal.norm()?, ints);
        }
    }
    if with_real {
        let mut worst = 0.0f64;
        let mut moments = Vec::new();
        for s in 0..=moment_max {
            let mut marginal = AdelicSum::new();
            for (c, g) in &f.pieces {
                let m = g.real().expect("checked").moment(s);
                if single {
                    moments.push(m);
                }
                marginal.push(c * m, g.without_real());
            }
            worst = worst.max(marginal.norm()?);
        }
        record(Place::Real, worst, moments);
    }
    let places: Vec<PlaceCheck> = checks.into_values().collect();
    Ok(LizorkinReport {
        passes: places.iter().all(|c| c.passes),
        places,
    })
}

/// Index range searched at one place: j in [j_lo, j_hi], shifts of depth
/// max(n + j, 0).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaceBox {
    pub p: Prime,
    pub j_lo: i64,
    pub j_hi: i64,
    pub n: i64,
}

impl PlaceBox {
    fn depth(&self, j: i64) -> u32 {
        (self.n + j).max(0) as u32
    }

    fn widen(&self) -> PlaceBox {
        PlaceBox {
            p: self.p,
            j_lo: self.j_lo - 1,
            j_hi: self.j_hi + 1,
            n: self.n + 1,
        }
    }

    /// Number of (k, j, a) triples in the box.
    pub fn size(&self) -> usize {
        (self.j_lo..=self.j_hi)
            .map(|j| (self.p.get() as usize - 1) * (self.p.get() as usize).pow(self.depth(j)))
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub coefficients: Vec<(AdelicIndex, Complex64)>,
    pub residual: f64,
    /// Search box per finiteness group.
    pub boxes: BTreeMap<Prime, Vec<PlaceBox>>,
}

impl Decomposition {
    pub fn coefficient(&self, alpha: &AdelicIndex) -> Complex64 {
        self.coefficients
            .iter()
            .find(|(a, _)| a == alpha)
            .map_or(Complex64::new(0.0, 0.0), |x| x.1)
    }

    pub fn reconstruct(&self) -> Result<AdelicSum> {
        let mut s = AdelicSum::new();
        for (alpha, c) in &self.coefficients {
            s.push(*c, alpha.build()?);
        }
        Ok(s)
    }
}

/// Search box of a group: per place, N = largest support radius and l =
/// smallest constancy over the pieces, j in [-N, -l-1].
fn derived_box(group: &AdelicSum, p_max: Prime) -> Vec<PlaceBox> {
    Prime::up_to(p_max)
        .into_iter()
        .map(|q| {
            let mut n = i64::MIN;
            let mut l = i64::MAX;
            for (_, g) in &group.pieces {
                let f = g.factor(q);
                if let (Some(ni), Some(li)) = (f.support_radius(), f.constancy()) {
                    n = n.max(ni);
                    l = l.min(li);
                }
            }
            if n == i64::MIN {
                return PlaceBox {
                    p: q,
                    j_lo: 0,
                    j_hi: -1,
                    n: 0,
                };
            }
            PlaceBox {
                p: q,
                j_lo: -n,
                j_hi: -l - 1,
                n,
            }
        })
        .collect()
}

/// Shifts a with supp psi_{k;j,a} = B_{-j}(p^j a) meeting supp f.
fn meeting_shifts(f: &LocalFunction, j: i64) -> BTreeSet<PAdicScalar> {
    let p = f.p();
    let g = -j;
    let mut balls: BTreeSet<Ball> = BTreeSet::new();
    for t in f.terms() {
        if t.ball.gamma() <= g {
            balls.insert(t.ball.ancestor(g));
        } else {
            let mut frontier = vec![t.ball.clone()];
            while frontier[0].gamma() > g {
                frontier = frontier.iter().flat_map(Ball::children).collect();
            }
            balls.extend(frontier);
        }
    }
    balls
        .into_iter()
        .map(|b| (&PAdicScalar::prime_power(p, g) * b.center()).frac_part(p))
        .collect()
}

/// One-dimensional coefficients (f, psi_{k;j,a}) over a box. With
/// `exhaustive` every shift of the box is tried, otherwise only shifts whose
/// wavelet meets the support of f.
fn local_coefficients(
    f: &LocalFunction,
    bx: &PlaceBox,
    exhaustive: bool,
    tol: f64,
) -> Vec<(LocalIndex, Complex64)> {
    let p = f.p();
    let mut out = Vec::new();
    for j in bx.j_lo..=bx.j_hi {
        let shifts: Vec<PAdicScalar> = if exhaustive {
            enumerate_shifts(p, bx.depth(j))
                .into_iter()
                .map(|s| s.value().clone())
                .collect()
        } else {
            meeting_shifts(f, j).into_iter().collect()
        };
        for a in shifts {
            for k in 1..p.get() {
                let psi = kozyrev(p, k, j, &a).expect("valid index");
                let v = f.inner(&psi);
                if v.norm() > tol {
                    out.push((LocalIndex::wavelet(k, j, a.clone()), v));
                }
            }
        }
    }
    out
}

/// c_alpha for one group, combining per-place coefficients.
fn group_coefficients(
    group: &AdelicSum,
    p_max: Prime,
    boxes: &[PlaceBox],
    exhaustive: bool,
    tol: f64,
) -> BTreeMap<AdelicIndex, Complex64> {
    let mut acc: BTreeMap<AdelicIndex, Complex64> = BTreeMap::new();
    for (c, g) in &group.pieces {
        let mut partial: Vec<(BTreeMap<Prime, LocalIndex>, Complex64)> =
            vec![(BTreeMap::new(), *c)];
        for bx in boxes {
            let local = local_coefficients(&g.factor(bx.p), bx, exhaustive, tol * 1e-3);
            let mut next = Vec::new();
            for (idx, v) in &partial {
                for (li, w) in &local {
                    let mut idx = idx.clone();
                    idx.insert(bx.p, li.clone());
                    next.push((idx, v * w));
                }
            }
            partial = next;
        }
        for (places, v) in partial {
            *acc.entry(AdelicIndex { real: None, places })
                .or_insert(Complex64::new(0.0, 0.0)) += v;
        }
    }
    debug_assert!(acc.keys().all(|a| a.m() == p_max));
    acc.retain(|_, v| v.norm() > tol);
    acc
}

fn check_input(f: &AdelicSum) -> Result<()> {
    if f.has_real()? {
        return Err(Error::RealPlaceMismatch);
    }
    let report = lizorkin_check(f, 0, DEFAULT_TOL.sqrt())?;
    if let Some(bad) = report.first_failure() {
        return Err(Error::NotLizorkin {
            place: bad.place.to_string(),
            detail: format!("marginal integral has norm {:.3e}", bad.marginal_norm),
        });
    }
    Ok(())
}

/// Finite expansion of a Lizorkin function on the finite adeles in the
/// Kozyrev tensor basis, with the reconstruction residual.
pub fn decompose(f: &AdelicSum) -> Result<Decomposition> {
    check_input(f)?;
    let mut coefficients = Vec::new();
    let mut boxes = BTreeMap::new();
    for (p_max, group) in groups(f) {
        let bx = derived_box(&group, p_max);
        coefficients.extend(group_coefficients(&group, p_max, &bx, false, DEFAULT_TOL));
        boxes.insert(p_max, bx);
    }
    let mut d = Decomposition {
        coefficients,
        residual: 0.0,
        boxes,
    };
    d.residual = f.sub(&d.reconstruct()?).norm()?;
    Ok(d)
}

/// Result of scanning a box one level wider than the derived one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certification {
    /// Number of (index, piece) products examined.
    pub scanned: usize,
    /// Nonzero coefficients not found by `decompose`.
    pub extra: Vec<(AdelicIndex, Complex64)>,
    /// Largest coefficient disagreement on indices found by both.
    pub max_mismatch: f64,
}

impl Certification {
    pub fn certified(&self) -> bool {
        self.extra.is_empty()
    }
}

/// Exhaustive scan of every shift in the box widened by one in j (both
/// sides) and in shift depth.
pub fn certify(f: &AdelicSum, d: &Decomposition) -> Result<Certification> {
    check_input(f)?;
    let found: BTreeMap<&AdelicIndex, Complex64> =
        d.coefficients.iter().map(|(a, c)| (a, *c)).collect();
    let mut scanned = 0usize;
    let mut extra = Vec::new();
    let mut max_mismatch = 0.0f64;
    for (p_max, group) in groups(f) {
        let wide: Vec<PlaceBox> = derived_box(&group, p_max)
            .iter()
            .map(PlaceBox::widen)
            .collect();
        scanned += group.len() * wide.iter().map(PlaceBox::size).product::<usize>();
        for (alpha, c) in group_coefficients(&group, p_max, &wide, true, DEFAULT_TOL) {
            match found.get(&alpha) {
                Some(v) => max_mismatch = max_mismatch.max((v - c).norm()),
                None => extra.push((alpha, c)),
            }
        }
    }
    Ok(Certification {
        scanned,
        extra,
        max_mismatch,
    })
}
