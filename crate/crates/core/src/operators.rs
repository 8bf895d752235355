//! Pseudo-differential operators on the finite adeles as Fourier multipliers.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::adelic::{AdelicFunction, AdelicIndex};
use crate::error::{Error, Result};
use crate::local::{CharBallTerm, LocalFunction};
use crate::padic::{Ball, BallRelation, PAdicScalar, Prime, Valuation};
use crate::sum::AdelicSum;
use crate::wavelet::LocalIndex;

/// One tabulated value of a place symbol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TablePiece {
    pub ball: Ball,
    pub value: Complex64,
}

/// The multiplier at one prime.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PlaceSymbol {
    /// |xi|_p^gamma.
    Power { gamma: Complex64 },
    /// Piecewise constant on disjoint balls; constant on every ball of
    /// radius p^{-M} inside a piece.
    Table {
        pieces: Vec<TablePiece>,
        #[serde(rename = "M")]
        constancy: i64,
    },
}

/// What a multiplier does on a Fourier-side ball.
enum OnBall {
    Value(Complex64),
    Split,
}

impl PlaceSymbol {
    pub fn power(gamma: Complex64) -> Self {
        PlaceSymbol::Power { gamma }
    }

    fn is_identity(&self) -> bool {
        matches!(self, PlaceSymbol::Power { gamma } if *gamma == Complex64::new(0.0, 0.0))
    }

    fn validate(&self, p: Prime) -> Result<()> {
        if let PlaceSymbol::Table { pieces, .. } = self {
            for (i, a) in pieces.iter().enumerate() {
                if a.ball.p() != p {
                    return Err(Error::PrimeMismatch(p.get(), a.ball.p().get()));
                }
                for b in &pieces[i + 1..] {
                    if a.ball.relation(&b.ball) != BallRelation::Disjoint {
                        return Err(Error::Shape(format!(
                            "table pieces overlap at p={p}: {:?} and {:?}",
                            a.ball, b.ball
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Value at a single point xi.
    pub fn value_at(&self, p: Prime, xi: &PAdicScalar) -> Result<Complex64> {
        match self {
            PlaceSymbol::Power { gamma } => match xi.valuation(p) {
                Valuation::Finite(v) => Ok(power_norm(p, -v, *gamma)),
                Valuation::Infinite if self.is_identity() => Ok(Complex64::new(1.0, 0.0)),
                Valuation::Infinite => Err(Error::not_lizorkin_at(p, "symbol evaluated at 0")),
            },
            PlaceSymbol::Table { pieces, .. } => pieces
                .iter()
                .find(|pc| pc.ball.contains(xi))
                .map(|pc| pc.value)
                .ok_or_else(|| Error::SymbolDomain {
                    p: p.get(),
                    center: xi.to_string(),
                    gamma: i64::MIN,
                }),
        }
    }

    fn on_ball(&self, b: &Ball) -> Result<OnBall> {
        let p = b.p();
        match self {
            PlaceSymbol::Power { .. } if self.is_identity() => {
                Ok(OnBall::Value(Complex64::new(1.0, 0.0)))
            }
            PlaceSymbol::Power { gamma } => {
                if b.contains_zero() {
                    return Err(Error::not_lizorkin_at(
                        p,
                        format!("Fourier transform does not vanish on {b:?}"),
                    ));
                }
                // |xi| is constant on a ball missing 0
                let v = b.center().valuation(p).finite().expect("nonzero center");
                Ok(OnBall::Value(power_norm(p, -v, *gamma)))
            }
            PlaceSymbol::Table { pieces, .. } => {
                for pc in pieces {
                    match pc.ball.relation(b) {
                        BallRelation::Equal | BallRelation::SecondInsideFirst => {
                            return Ok(OnBall::Value(pc.value))
                        }
                        BallRelation::FirstInsideSecond => return Ok(OnBall::Split),
                        BallRelation::Disjoint => {}
                    }
                }
                Err(Error::SymbolDomain {
                    p: p.get(),
                    center: b.center().to_string(),
                    gamma: b.gamma(),
                })
            }
        }
    }
}

/// p^{gamma e}; exact power for real integral exponents.
fn power_norm(p: Prime, e: i64, gamma: Complex64) -> Complex64 {
    if gamma.im == 0.0 {
        if gamma.re.fract() == 0.0 && gamma.re.abs() < 64.0 {
            let n = gamma.re as i64 * e;
            if let Ok(n) = i32::try_from(n) {
                return Complex64::new(p.as_f64().powi(n), 0.0);
            }
        }
        return Complex64::new(p.powf(gamma.re * e as f64), 0.0);
    }
    (gamma * (e as f64 * p.as_f64().ln())).exp()
}

/// The implicit multiplier Omega(|xi|_p) beyond the symbol's finiteness.
fn cutoff_on_ball(b: &Ball) -> OnBall {
    let unit = Ball::centered(b.p(), 0);
    match unit.relation(b) {
        BallRelation::Equal | BallRelation::SecondInsideFirst => {
            OnBall::Value(Complex64::new(1.0, 0.0))
        }
        BallRelation::FirstInsideSecond => OnBall::Split,
        BallRelation::Disjoint => OnBall::Value(Complex64::new(0.0, 0.0)),
    }
}

/// A_0(xi) = prod_p A_p(xi_p). Primes <= m without an entry act as the
/// identity; beyond m the factor is Omega(|xi_p|_p).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SymbolRepr")]
pub struct Symbol {
    pub m: Prime,
    pub places: BTreeMap<Prime, PlaceSymbol>,
}

#[derive(Deserialize)]
struct SymbolRepr {
    m: Prime,
    places: BTreeMap<Prime, PlaceSymbol>,
}

impl TryFrom<SymbolRepr> for Symbol {
    type Error = Error;
    fn try_from(r: SymbolRepr) -> Result<Self> {
        Symbol::new(r.m, r.places)
    }
}

impl Symbol {
    pub fn new(m: Prime, places: BTreeMap<Prime, PlaceSymbol>) -> Result<Self> {
        for (p, s) in &places {
            if *p > m {
                return Err(Error::Shape(format!("symbol entry at p={p} beyond m={m}")));
            }
            s.validate(*p)?;
        }
        Ok(Symbol { m, places })
    }

    /// Identity on every place up to m.
    pub fn identity(m: Prime) -> Self {
        Symbol {
            m,
            places: BTreeMap::new(),
        }
    }

    /// |xi|^{gamma_p} at the listed primes.
    pub fn fractional(gammas: &BTreeMap<Prime, Complex64>, m: Prime) -> Result<Self> {
        let places = gammas
            .iter()
            .map(|(p, g)| (*p, PlaceSymbol::power(*g)))
            .collect();
        Symbol::new(m, places)
    }

    /// D^gamma: the same exponent at every prime <= m.
    pub fn uniform(gamma: Complex64, m: Prime) -> Self {
        Symbol {
            m,
            places: Prime::up_to(m)
                .into_iter()
                .map(|p| (p, PlaceSymbol::power(gamma)))
                .collect(),
        }
    }

    /// Multiplier at p, None for the identity.
    fn at(&self, p: Prime) -> Option<&PlaceSymbol> {
        self.places.get(&p).filter(|s| !s.is_identity())
    }

    /// Value of the place factor at a point (identity and cutoff included).
    pub fn place_value(&self, p: Prime, xi: &PAdicScalar) -> Result<Complex64> {
        if p > self.m {
            let inside = xi.valuation(p) >= Valuation::Finite(0);
            return Ok(Complex64::new(if inside { 1.0 } else { 0.0 }, 0.0));
        }
        match self.at(p) {
            Some(s) => s.value_at(p, xi),
            None => Ok(Complex64::new(1.0, 0.0)),
        }
    }
}

/// Multiplies a Fourier-side function by a ball-wise rule, splitting balls
/// until the rule is constant on them.
fn multiply_fourier(
    fh: &LocalFunction,
    rule: impl Fn(&Ball) -> Result<OnBall>,
) -> Result<LocalFunction> {
    let mut work: Vec<CharBallTerm> = fh.terms().to_vec();
    let mut out = Vec::new();
    while let Some(t) = work.pop() {
        match rule(&t.ball)? {
            OnBall::Value(v) => {
                if v != Complex64::new(0.0, 0.0) {
                    out.push(CharBallTerm {
                        amp: t.amp * v,
                        ..t
                    });
                }
            }
            OnBall::Split => work.extend(t.ball.children().iter().map(|c| t.restricted_to(c))),
        }
    }
    LocalFunction::from_terms(fh.p(), out)
}

/// A single term transforms onto one ball, so a term whose Fourier ball sees
/// a constant multiplier is just scaled; only the rest goes through F.
fn apply_place(f: &LocalFunction, rule: impl Fn(&Ball) -> Result<OnBall>) -> Result<LocalFunction> {
    let p = f.p();
    let mut direct = Vec::new();
    let mut rest = Vec::new();
    for t in f.terms() {
        let dual = Ball::new(p, &-&t.freq, -t.ball.gamma());
        match rule(&dual)? {
            OnBall::Value(v) => {
                if v != Complex64::new(0.0, 0.0) {
                    direct.push(CharBallTerm {
                        amp: t.amp * v,
                        ..t.clone()
                    });
                }
            }
            OnBall::Split => rest.push(t.clone()),
        }
    }
    let scaled = LocalFunction::from_terms(p, direct)?;
    if rest.is_empty() {
        return Ok(scaled);
    }
    let rest = LocalFunction::from_terms(p, rest)?;
    Ok(scaled.add(&multiply_fourier(&rest.fourier(), rule)?.inverse_fourier()))
}

/// A f for an elementary function on the finite adeles.
pub fn apply_symbol(f: &AdelicFunction, a: &Symbol) -> Result<AdelicFunction> {
    if f.has_real() {
        return Err(Error::RealPlaceMismatch);
    }
    let mut out = f.clone();
    for q in Prime::up_to(a.m.max(f.finiteness())) {
        let g = if q > a.m {
            if !f.stored_factors().contains_key(&q) {
                continue;
            }
            apply_place(&f.factor(q), |b| Ok(cutoff_on_ball(b)))?
        } else {
            match a.at(q) {
                Some(s) => apply_place(&f.factor(q), |b| s.on_ball(b))?,
                None => continue,
            }
        };
        out = out.with_factor(g);
    }
    Ok(out)
}

/// A applied piece by piece.
pub fn apply_symbol_sum(f: &AdelicSum, a: &Symbol) -> Result<AdelicSum> {
    let mut out = AdelicSum::new();
    for (c, g) in &f.pieces {
        out.push(*c, apply_symbol(g, a)?);
    }
    Ok(out)
}

/// D^gamma f with |xi_p|^{gamma_p} at the listed primes.
pub fn fractional_apply(f: &AdelicSum, gammas: &BTreeMap<Prime, Complex64>) -> Result<AdelicSum> {
    let m = gammas
        .keys()
        .copied()
        .chain(f.pieces.iter().map(|(_, g)| g.finiteness()))
        .max()
        .unwrap_or(Prime::TWO);
    apply_symbol_sum(f, &Symbol::fractional(gammas, m)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenCheck {
    pub is_eigen: bool,
    pub lambda: Complex64,
}

/// (k, j) at each wavelet place, None where the factor is a shift of Omega.
type EigenPlaces = Vec<(Prime, Option<(u64, i64)>)>;

/// The wavelet parameters at each prime up to max(m_A, m_alpha), rejecting
/// indices with a scaling factor where the symbol acts.
fn eigen_places(a: &Symbol, alpha: &AdelicIndex) -> Result<EigenPlaces> {
    alpha.validate()?;
    if alpha.real.is_some() {
        return Err(Error::RealPlaceMismatch);
    }
    let mut out = Vec::new();
    for q in Prime::up_to(a.m.max(alpha.m())) {
        let kj = match alpha.places.get(&q) {
            Some(LocalIndex::Wavelet { k, j, .. }) => Some((*k, *j)),
            _ => None,
        };
        if kj.is_none() && (q <= alpha.m() || a.at(q).is_some()) {
            return Err(Error::HypothesisViolated(format!(
                "index has a scaling factor at p={q}"
            )));
        }
        out.push((q, kj));
    }
    Ok(out)
}

/// Constant on the support, vanishes there, and the value at each place.
type PlaceValues = (bool, bool, Vec<(Prime, Complex64)>);

/// Per-place eigenvalue candidates A_q(-k q^{-j-1}), with flags for
/// constancy on the Fourier support and for vanishing there.
fn place_eigenvalues(a: &Symbol, alpha: &AdelicIndex) -> Result<PlaceValues> {
    let mut values_at = Vec::new();
    let mut constant = true;
    let mut vanishes = false;
    for (q, kj) in eigen_places(a, alpha)? {
        let Some((k, j)) = kj else { continue };
        let qk = PAdicScalar::from_int(k as i64);
        let center = -(&qk * &PAdicScalar::prime_power(q, -j - 1));
        let values = sample_sphere(a, q, j, &center)?;
        let v0 = a.place_value(q, &center)?;
        if values.iter().all(|v| *v == Complex64::new(0.0, 0.0)) {
            vanishes = true;
        }
        if values
            .iter()
            .any(|v| (v - v0).norm() > 1e-15 * v0.norm().max(1.0))
        {
            constant = false;
        }
        values_at.push((q, v0));
    }
    Ok((constant, vanishes, values_at))
}

/// Eigenfunction criterion for Psi_alpha: the symbol must be constant on the
/// Fourier support q^{-j}(-k/q + Z_q) at every place; lambda is the product
/// of the values at -k q^{-j-1}.
pub fn eigen_check(a: &Symbol, alpha: &AdelicIndex) -> Result<EigenCheck> {
    let (constant, vanishes, values) = place_eigenvalues(a, alpha)?;
    Ok(EigenCheck {
        is_eigen: constant || vanishes,
        lambda: values.iter().map(|(_, v)| v).product(),
    })
}

/// Symbol values at representatives of the cosets of radius q^{-M} in
/// B_j(center), plus one extra point in each coset.
fn sample_sphere(a: &Symbol, q: Prime, j: i64, center: &PAdicScalar) -> Result<Vec<Complex64>> {
    let fine = match (q <= a.m).then(|| a.at(q)).flatten() {
        Some(PlaceSymbol::Table { constancy, .. }) => -constancy,
        // power norms are constant on spheres; the cutoff on Z_q
        _ => j,
    };
    let mut out = Vec::new();
    let root = Ball::new(q, center, j);
    let mut cosets = vec![root];
    while cosets[0].gamma() > fine {
        cosets = cosets.iter().flat_map(Ball::children).collect();
    }
    for b in cosets {
        out.push(a.place_value(q, b.center())?);
        let extra = b.center() + &PAdicScalar::prime_power(q, -b.gamma());
        out.push(a.place_value(q, &extra)?);
    }
    Ok(out)
}

/// ||A Psi_alpha - lambda Psi_alpha|| / ||Psi_alpha||.
pub fn verify_eigenrelation(a: &Symbol, alpha: &AdelicIndex) -> Result<f64> {
    let (_, _, values) = place_eigenvalues(a, alpha)?;
    let psi = alpha.build()?;
    let image = apply_symbol(&psi, a)?;
    // lambda Psi as the tensor of the per-place multiples, which avoids
    // rounding from forming the (possibly huge) product first
    let mut scaled = psi.clone();
    for (q, v) in values {
        scaled = scaled.with_factor(psi.factor(q).scale(v));
    }
    let mut diff = AdelicSum::from(image);
    diff.push(Complex64::new(-1.0, 0.0), scaled);
    Ok(diff.norm()? / AdelicSum::from(psi).norm()?)
}
