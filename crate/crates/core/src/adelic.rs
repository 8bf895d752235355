//! Finite-data adeles, the adelic character, stabilized tensor products and
//! the two adelic wavelet families.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::local::LocalFunction;
use crate::padic::{chi, enumerate_shifts, PAdicScalar, Prime, ShiftIndex, UnitPhase, Valuation};
use crate::real::DyadicStepFunction;
use crate::wavelet::{kozyrev, normalized_copy, LocalIndex};

/// Tolerance used to recognise a stored factor as Omega.
const OMEGA_TOL: f64 = 1e-14;

/// A place of Q: the real place or a prime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Place {
    Real,
    Finite(Prime),
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Place::Real => write!(f, "inf"),
            Place::Finite(p) => write!(f, "{p}"),
        }
    }
}

impl Serialize for Place {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Place::Real => s.serialize_str("inf"),
            Place::Finite(p) => s.serialize_u64(p.get()),
        }
    }
}

impl<'de> Deserialize<'de> for Place {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(u64),
            Str(String),
        }
        let p = match Repr::deserialize(d)? {
            Repr::Int(p) => p,
            Repr::Str(s) if s == "inf" => return Ok(Place::Real),
            Repr::Str(s) => s.parse().map_err(serde::de::Error::custom)?,
        };
        Prime::new(p)
            .map(Place::Finite)
            .map_err(serde::de::Error::custom)
    }
}

/// An adele with finitely many non-integral coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdelePoint {
    pub real: PAdicScalar,
    /// Listed p-adic coordinates. Unlisted coordinates are `fill`.
    pub finite: BTreeMap<Prime, PAdicScalar>,
    #[serde(default)]
    pub fill: Fill,
}

/// Value of the unlisted p-adic coordinates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fill {
    /// Unlisted coordinates are 0.
    #[default]
    Zero,
    /// Unlisted coordinates equal the real coordinate (principal adeles).
    Diagonal,
}

impl AdelePoint {
    /// Unlisted coordinates are zero.
    pub fn new(real: PAdicScalar, finite: BTreeMap<Prime, PAdicScalar>) -> Self {
        AdelePoint {
            real,
            finite,
            fill: Fill::Zero,
        }
    }

    /// The principal adele (r, r, r, ...).
    pub fn principal(r: &PAdicScalar) -> Self {
        let finite = prime_divisors(r.denom())
            .into_iter()
            .map(|p| (p, r.clone()))
            .collect();
        AdelePoint {
            real: r.clone(),
            finite,
            fill: Fill::Diagonal,
        }
    }

    /// Rejects a diagonal fill whose unlisted coordinates are not integral.
    pub fn validate(&self) -> Result<()> {
        if self.fill == Fill::Diagonal {
            for p in prime_divisors(self.real.denom()) {
                if !self.finite.contains_key(&p) {
                    return Err(Error::InvalidIndex(format!(
                        "coordinate at p={p} is not in Z_p"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn coordinate(&self, p: Prime) -> PAdicScalar {
        match (self.finite.get(&p), self.fill) {
            (Some(x), _) => x.clone(),
            (None, Fill::Zero) => PAdicScalar::zero(),
            (None, Fill::Diagonal) => self.real.clone(),
        }
    }
}

fn prime_divisors(n: &BigInt) -> Vec<Prime> {
    let mut n = n.clone();
    if n < BigInt::zero() {
        n = -n;
    }
    let mut out = Vec::new();
    let mut d = 2u64;
    while BigInt::from(d) * BigInt::from(d) <= n {
        if n.is_multiple_of(&BigInt::from(d)) {
            out.push(Prime::new(d).expect("smallest divisor is prime"));
            while n.is_multiple_of(&BigInt::from(d)) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > BigInt::one() {
        let last = n.to_u64().expect("prime factor fits in u64");
        out.push(Prime::new(last).expect("remaining factor is prime"));
    }
    out
}

/// chi(a) = chi_inf(a_inf) prod_p chi_p(a_p) with chi_inf(x) = e^{-2 pi i x},
/// so that chi is trivial on principal adeles.
pub fn adelic_character(a: &AdelePoint) -> UnitPhase {
    let mut ph = UnitPhase::from_scalar(&-&a.real);
    for (p, x) in &a.finite {
        ph = ph.add(&chi(x, *p));
    }
    ph
}

/// An elementary function: a real factor (absent on the finite adeles)
/// times p-adic factors, with Omega at every unstored prime.
#[derive(Clone, Debug, PartialEq)]
pub struct AdelicFunction {
    real: Option<DyadicStepFunction>,
    factors: BTreeMap<Prime, LocalFunction>,
}

#[derive(Serialize, Deserialize)]
struct AdelicRepr {
    #[serde(default)]
    real: Option<DyadicStepFunction>,
    #[serde(default)]
    factors: BTreeMap<Prime, LocalFunction>,
    #[serde(default, rename = "P", skip_serializing_if = "Option::is_none")]
    finiteness: Option<Prime>,
}

impl Serialize for AdelicFunction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        AdelicRepr {
            real: self.real.clone(),
            factors: self.factors.clone(),
            finiteness: Some(self.finiteness()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for AdelicFunction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = AdelicRepr::deserialize(d)?;
        let bound = r
            .finiteness
            .or_else(|| r.factors.keys().max().copied())
            .unwrap_or(Prime::TWO);
        AdelicFunction::tensor(r.real, r.factors, bound).map_err(serde::de::Error::custom)
    }
}

impl AdelicFunction {
    /// Tensor product with finiteness bound `p_max`: any stored factor
    /// beyond it must be Omega. Omega factors are dropped.
    pub fn tensor(
        real: Option<DyadicStepFunction>,
        factors: BTreeMap<Prime, LocalFunction>,
        p_max: Prime,
    ) -> Result<Self> {
        let mut kept = BTreeMap::new();
        for (p, f) in factors {
            if f.p() != p {
                return Err(Error::PrimeMismatch(p.get(), f.p().get()));
            }
            if f.is_omega(OMEGA_TOL) {
                continue;
            }
            if p > p_max {
                return Err(Error::FactorBeyondFiniteness(p.get()));
            }
            kept.insert(p, f);
        }
        Ok(AdelicFunction {
            real,
            factors: kept,
        })
    }

    /// Phi = phi^H (x) Omega (x) Omega ..., or Omega (x) ... on the finite adeles.
    pub fn refinable(with_real: bool) -> Self {
        AdelicFunction {
            real: with_real.then(DyadicStepFunction::haar_scaling),
            factors: BTreeMap::new(),
        }
    }

    pub fn from_factors(
        real: Option<DyadicStepFunction>,
        factors: impl IntoIterator<Item = LocalFunction>,
    ) -> Self {
        let map: BTreeMap<Prime, LocalFunction> = factors.into_iter().map(|f| (f.p(), f)).collect();
        let bound = map.keys().max().copied().unwrap_or(Prime::TWO);
        Self::tensor(real, map, bound).expect("factors keyed by their own prime")
    }

    pub fn real(&self) -> Option<&DyadicStepFunction> {
        self.real.as_ref()
    }

    pub fn has_real(&self) -> bool {
        self.real.is_some()
    }

    pub fn stored_factors(&self) -> &BTreeMap<Prime, LocalFunction> {
        &self.factors
    }

    /// The factor at p (Omega when not stored).
    pub fn factor(&self, p: Prime) -> LocalFunction {
        self.factors
            .get(&p)
            .cloned()
            .unwrap_or_else(|| LocalFunction::omega(p))
    }

    /// Minimal P with every factor beyond P equal to Omega (2 if none).
    pub fn finiteness(&self) -> Prime {
        self.factors.keys().max().copied().unwrap_or(Prime::TWO)
    }

    pub fn is_zero(&self) -> bool {
        self.real.as_ref().is_some_and(DyadicStepFunction::is_zero)
            || self.factors.values().any(LocalFunction::is_zero)
    }

    /// Multiplies by a constant, absorbed into the real factor or the
    /// smallest stored factor.
    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        if let Some(r) = &mut out.real {
            *r = r.scale(c);
            return out;
        }
        let p = out.factors.keys().next().copied().unwrap_or(Prime::TWO);
        let f = out.factor(p).scale(c);
        out.factors.insert(p, f);
        out
    }

    pub fn with_factor(&self, f: LocalFunction) -> Self {
        let mut out = self.clone();
        if f.is_omega(OMEGA_TOL) {
            out.factors.remove(&f.p());
        } else {
            out.factors.insert(f.p(), f);
        }
        out
    }

    pub fn without_real(&self) -> Self {
        AdelicFunction {
            real: None,
            factors: self.factors.clone(),
        }
    }

    pub fn evaluate(&self, x: &AdelePoint) -> Complex64 {
        let mut v = match &self.real {
            Some(r) => r.evaluate(x.real.as_rational()),
            None => Complex64::new(1.0, 0.0),
        };
        for (p, f) in &self.factors {
            v *= f.evaluate(&x.coordinate(*p));
        }
        // Omega beyond the stored places.
        let integral_elsewhere = x
            .finite
            .iter()
            .filter(|(p, _)| !self.factors.contains_key(p))
            .all(|(p, y)| y.valuation(*p) >= Valuation::Finite(0));
        if !integral_elsewhere {
            return Complex64::new(0.0, 0.0);
        }
        v
    }

    pub fn norm_sq(&self) -> f64 {
        let r = self.real.as_ref().map_or(1.0, DyadicStepFunction::norm_sq);
        self.factors
            .values()
            .map(LocalFunction::norm_sq)
            .product::<f64>()
            * r
    }

    /// Applies T_a: translation by the adelic shift.
    pub fn shift(&self, a: &AdelicShift) -> Result<Self> {
        let mut out = self.clone();
        if a.real != 0 {
            match &mut out.real {
                Some(r) => *r = r.translate(a.real),
                None => return Err(Error::RealPlaceMismatch),
            }
        }
        for (p, v) in &a.finite {
            ShiftIndex::new(*p, v.clone())?;
            let f = out.factor(*p).translate(v);
            out = out.with_factor(f);
        }
        Ok(out)
    }

    /// Applies M^j: real 2^{-j/2} f(2^{-j} x), p-adic p^{-j/2} f(p^{j} x).
    pub fn multi_dilate(&self, j: &AdelicDilation) -> Result<Self> {
        let mut out = self.clone();
        if j.real != 0 {
            match &mut out.real {
                Some(r) => {
                    *r = r
                        .dilate(-j.real)
                        .scale(Complex64::new(2f64.powf(-(j.real as f64) / 2.0), 0.0))
                }
                None => return Err(Error::RealPlaceMismatch),
            }
        }
        for (p, &jp) in &j.finite {
            let f = out
                .factor(*p)
                .dilate(-jp)
                .scale(Complex64::new(p.powf(-(jp as f64) / 2.0), 0.0));
            out = out.with_factor(f);
        }
        Ok(out)
    }
}

/// (f, g) as the product of per-place inner products.
pub fn adelic_inner(f: &AdelicFunction, g: &AdelicFunction) -> Result<Complex64> {
    let mut v = match (&f.real, &g.real) {
        (Some(a), Some(b)) => a.inner(b),
        (None, None) => Complex64::new(1.0, 0.0),
        _ => return Err(Error::RealPlaceMismatch),
    };
    let mut primes: Vec<Prime> = f.factors.keys().chain(g.factors.keys()).copied().collect();
    primes.sort();
    primes.dedup();
    for p in primes {
        v *= match (f.factors.get(&p), g.factors.get(&p)) {
            (Some(a), Some(b)) => a.inner(b),
            (Some(a), None) => a.inner(&LocalFunction::omega(p)),
            (None, Some(b)) => LocalFunction::omega(p).inner(b),
            (None, None) => unreachable!(),
        };
        if v == Complex64::new(0.0, 0.0) {
            break;
        }
    }
    Ok(v)
}

/// An adelic shift: integer at the real place, elements of I_p elsewhere.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AdelicShift {
    #[serde(default)]
    pub real: i64,
    #[serde(default)]
    pub finite: BTreeMap<Prime, PAdicScalar>,
}

/// An adelic dilation exponent vector.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AdelicDilation {
    #[serde(default)]
    pub real: i64,
    #[serde(default)]
    pub finite: BTreeMap<Prime, i64>,
}

/// Real-place basis element.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RealIndex {
    /// phi^H(x - n).
    Scaling { n: i64 },
    /// psi^H_{jn}.
    Wavelet { j: i64, n: i64 },
}

impl RealIndex {
    pub fn build(&self) -> DyadicStepFunction {
        match *self {
            RealIndex::Scaling { n } => DyadicStepFunction::haar_scaling().translate(n),
            RealIndex::Wavelet { j, n } => DyadicStepFunction::haar_wavelet(j, n),
        }
    }
}

/// Index of a tensor-product adelic wavelet. Places up to the largest
/// listed prime without an entry carry phi(x_q); beyond it, Omega.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AdelicIndex {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub real: Option<RealIndex>,
    pub places: BTreeMap<Prime, LocalIndex>,
}

impl AdelicIndex {
    /// The largest prime with an entry (2 if none).
    pub fn m(&self) -> Prime {
        self.places.keys().max().copied().unwrap_or(Prime::TWO)
    }

    pub fn validate(&self) -> Result<()> {
        for (p, idx) in &self.places {
            idx.validate(*p)?;
        }
        Ok(())
    }

    /// Ψ_α as a tensor product of one-dimensional basis elements.
    pub fn build(&self) -> Result<AdelicFunction> {
        self.validate()?;
        let mut factors = BTreeMap::new();
        for (p, idx) in &self.places {
            factors.insert(*p, idx.build(*p)?);
        }
        AdelicFunction::tensor(self.real.as_ref().map(RealIndex::build), factors, self.m())
    }

    /// Per-place dilation and shift so that Ψ_α = M^{-j} T_a Ψ_(k,0,0).
    pub fn dilation_and_shift(&self) -> (AdelicDilation, AdelicShift) {
        let mut j = AdelicDilation::default();
        let mut a = AdelicShift::default();
        match self.real {
            Some(RealIndex::Wavelet { j: jr, n }) => {
                j.real = jr;
                a.real = n;
            }
            Some(RealIndex::Scaling { n }) => a.real = n,
            None => {}
        }
        for (p, idx) in &self.places {
            if let LocalIndex::Wavelet { j: jp, .. } = idx {
                j.finite.insert(*p, *jp);
            }
            a.finite.insert(*p, idx.shift().clone());
        }
        (j, a)
    }

    /// Ψ_(k,0,0): the same pattern with zero dilation and zero shift.
    pub fn generator(&self) -> AdelicIndex {
        AdelicIndex {
            real: self.real.as_ref().map(|r| match r {
                RealIndex::Scaling { .. } => RealIndex::Scaling { n: 0 },
                RealIndex::Wavelet { .. } => RealIndex::Wavelet { j: 0, n: 0 },
            }),
            places: self
                .places
                .iter()
                .map(|(p, idx)| {
                    let g = match idx {
                        LocalIndex::Scaling { .. } => LocalIndex::scaling(PAdicScalar::zero()),
                        LocalIndex::Wavelet { k, .. } => {
                            LocalIndex::wavelet(*k, 0, PAdicScalar::zero())
                        }
                    };
                    (*p, g)
                })
                .collect(),
        }
    }
}

pub fn adelic_wavelet(alpha: &AdelicIndex) -> Result<AdelicFunction> {
    alpha.build()
}

/// Tensor-basis slice: real wavelets psi^H_{jn} over the given ranges (if
/// `real` is set), and at each prime q <= m the modified basis with
/// 0 <= j_q <= j_max and shifts of the given depth.
pub fn tensor_basis(
    m: Prime,
    real: Option<(std::ops::RangeInclusive<i64>, std::ops::RangeInclusive<i64>)>,
    j_max: u32,
    depth: u32,
) -> Vec<(AdelicIndex, AdelicFunction)> {
    let mut per_place: Vec<(Prime, Vec<LocalIndex>)> = Vec::new();
    for q in Prime::up_to(m) {
        let mut list = Vec::new();
        for a in enumerate_shifts(q, depth) {
            list.push(LocalIndex::scaling(a.value().clone()));
        }
        for j in 0..=j_max as i64 {
            for a in enumerate_shifts(q, depth) {
                for k in 1..q.get() {
                    list.push(LocalIndex::wavelet(k, j, a.value().clone()));
                }
            }
        }
        per_place.push((q, list));
    }
    let reals: Vec<Option<RealIndex>> = match real {
        Some((js, ns)) => js
            .flat_map(|j| ns.clone().map(move |n| Some(RealIndex::Wavelet { j, n })))
            .collect(),
        None => vec![None],
    };
    let mut out = Vec::new();
    for r in reals {
        let mut combos: Vec<BTreeMap<Prime, LocalIndex>> = vec![BTreeMap::new()];
        for (q, list) in &per_place {
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    list.iter().map(move |idx| {
                        let mut c = c.clone();
                        c.insert(*q, idx.clone());
                        c
                    })
                })
                .collect();
        }
        for places in combos {
            let alpha = AdelicIndex {
                real: r.clone(),
                places,
            };
            let f = alpha.build().expect("enumerated index is valid");
            out.push((alpha, f));
        }
    }
    out
}

/// Which one-dimensional function a place contributes to an MRA wavelet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorKind {
    Scaling,
    Wavelet,
}

/// Index of an MRA-based adelic wavelet: a pattern over all places up to
/// its largest prime, wavelet parameters k at wavelet places, one common
/// dilation j and a shift.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MraIndex {
    /// Real-place factor; None on the finite adeles.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub real: Option<FactorKind>,
    pub pattern: BTreeMap<Prime, FactorKind>,
    #[serde(default)]
    pub k: BTreeMap<Prime, u64>,
    pub j: i64,
    #[serde(default)]
    pub shift: AdelicShift,
}

impl MraIndex {
    pub fn validate(&self) -> Result<()> {
        let Some(&m) = self.pattern.keys().max() else {
            return Err(Error::InvalidPattern("empty pattern".into()));
        };
        if self.pattern.keys().copied().ne(Prime::up_to(m)) {
            return Err(Error::InvalidPattern(
                "pattern must cover every prime up to its largest".into(),
            ));
        }
        let all_scaling = self.real.is_none_or(|r| r == FactorKind::Scaling)
            && self.pattern.values().all(|k| *k == FactorKind::Scaling);
        if all_scaling {
            return Err(Error::InvalidPattern(
                "all-scaling pattern is the refinable function".into(),
            ));
        }
        if self.j < 0 {
            return Err(Error::InvalidPattern("dilation must be >= 0".into()));
        }
        for (p, kind) in &self.pattern {
            match (kind, self.k.get(p)) {
                (FactorKind::Wavelet, Some(&k)) if k >= 1 && k < p.get() => {}
                (FactorKind::Wavelet, k) => {
                    return Err(Error::InvalidWaveletIndex {
                        p: p.get(),
                        k: k.copied().unwrap_or(0),
                    })
                }
                (FactorKind::Scaling, None) => {}
                (FactorKind::Scaling, Some(_)) => {
                    return Err(Error::InvalidPattern(format!(
                        "k given at scaling place {p}"
                    )))
                }
            }
        }
        if self.real.is_none() && self.shift.real != 0 {
            return Err(Error::RealPlaceMismatch);
        }
        for (p, a) in &self.shift.finite {
            if !self.pattern.contains_key(p) {
                return Err(Error::InvalidPattern(format!(
                    "shift at p={p} beyond the pattern"
                )));
            }
            ShiftIndex::new(*p, a.clone())?;
        }
        Ok(())
    }

    pub fn build(&self) -> Result<AdelicFunction> {
        self.validate()?;
        let j = self.j;
        let real = self.real.map(|kind| {
            let a = self.shift.real;
            match kind {
                FactorKind::Wavelet => DyadicStepFunction::haar_wavelet(j, a),
                FactorKind::Scaling => DyadicStepFunction::haar_scaling()
                    .translate(a)
                    .dilate(j)
                    .scale(Complex64::new(2f64.powf(j as f64 / 2.0), 0.0)),
            }
        });
        let mut factors = BTreeMap::new();
        for (p, kind) in &self.pattern {
            let a = self
                .shift
                .finite
                .get(p)
                .cloned()
                .unwrap_or_else(PAdicScalar::zero);
            let f = match kind {
                FactorKind::Wavelet => kozyrev(*p, self.k[p], j, &a)?,
                FactorKind::Scaling => normalized_copy(&LocalFunction::omega(*p), j, &a),
            };
            factors.insert(*p, f);
        }
        let m = *self.pattern.keys().max().expect("validated");
        AdelicFunction::tensor(real, factors, m)
    }
}

pub fn mra_wavelet(index: &MraIndex) -> Result<AdelicFunction> {
    index.build()
}

/// T_a Phi.
pub fn mra_scaling(with_real: bool, shift: &AdelicShift) -> Result<AdelicFunction> {
    AdelicFunction::refinable(with_real).shift(shift)
}

/// Shifts with real part in `real_shifts` (if the real place is used) and
/// p-adic parts of the given depth at every prime <= m.
fn mra_shifts(
    m: Prime,
    real_shifts: Option<&std::ops::RangeInclusive<i64>>,
    depth: u32,
) -> Vec<AdelicShift> {
    let reals: Vec<i64> = real_shifts.map_or(vec![0], |r| r.clone().collect());
    let mut out: Vec<AdelicShift> = reals
        .into_iter()
        .map(|r| AdelicShift {
            real: r,
            finite: BTreeMap::new(),
        })
        .collect();
    for q in Prime::up_to(m) {
        let shifts = enumerate_shifts(q, depth);
        out = out
            .into_iter()
            .flat_map(|s| {
                shifts.iter().map(move |a| {
                    let mut s = s.clone();
                    if !a.value().is_zero() {
                        s.finite.insert(q, a.value().clone());
                    }
                    s
                })
            })
            .collect();
    }
    out
}

/// A member of the finite-level MRA family.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MraMember {
    Scaling { shift: AdelicShift },
    Wavelet(MraIndex),
}

/// The level-m MRA family: shifts of Phi, and wavelets for every
/// non-scaling pattern over the places <= m, every k, 0 <= j <= j_max and
/// every shift.
pub fn mra_basis(
    m: Prime,
    real_shifts: Option<std::ops::RangeInclusive<i64>>,
    j_max: u32,
    depth: u32,
) -> Vec<(MraMember, AdelicFunction)> {
    let with_real = real_shifts.is_some();
    let shifts = mra_shifts(m, real_shifts.as_ref(), depth);
    let mut out = Vec::new();
    for s in &shifts {
        let f = mra_scaling(with_real, s).expect("valid shift");
        out.push((MraMember::Scaling { shift: s.clone() }, f));
    }
    let primes = Prime::up_to(m);
    let slots = primes.len() + usize::from(with_real);
    for j in 0..=j_max as i64 {
        for mask in 1u32..(1 << slots) {
            let kind = |bit: usize| {
                if mask & (1 << bit) != 0 {
                    FactorKind::Wavelet
                } else {
                    FactorKind::Scaling
                }
            };
            let real = with_real.then(|| kind(primes.len()));
            let pattern: BTreeMap<Prime, FactorKind> = primes
                .iter()
                .enumerate()
                .map(|(i, p)| (*p, kind(i)))
                .collect();
            let mut ks: Vec<BTreeMap<Prime, u64>> = vec![BTreeMap::new()];
            for (p, kd) in &pattern {
                if *kd == FactorKind::Wavelet {
                    ks = ks
                        .into_iter()
                        .flat_map(|c| {
                            (1..p.get()).map(move |k| {
                                let mut c = c.clone();
                                c.insert(*p, k);
                                c
                            })
                        })
                        .collect();
                }
            }
            for k in &ks {
                for s in &shifts {
                    let idx = MraIndex {
                        real,
                        pattern: pattern.clone(),
                        k: k.clone(),
                        j,
                        shift: s.clone(),
                    };
                    let f = idx.build().expect("enumerated index is valid");
                    out.push((MraMember::Wavelet(idx), f));
                }
            }
        }
    }
    out
}

/// Gram matrix of elementary functions.
pub fn adelic_gram(fns: &[AdelicFunction]) -> Result<Vec<Vec<Complex64>>> {
    let n = fns.len();
    let mut g = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for i in 0..n {
        for j in i..n {
            let v = adelic_inner(&fns[i], &fns[j])?;
            g[i][j] = v;
            g[j][i] = v.conj();
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local::identity_deviation;

    fn q(n: i64, d: i64) -> PAdicScalar {
        PAdicScalar::ratio(n, d)
    }

    #[test]
    fn character_examples() {
        assert!(adelic_character(&AdelePoint::principal(&q(1, 2))).is_zero());
        assert!(adelic_character(&AdelePoint::principal(&q(7, 1))).is_zero());
        let mut fin = BTreeMap::new();
        fin.insert(Prime::THREE, q(1, 3));
        let a = AdelePoint::new(q(0, 1), fin);
        assert_eq!(adelic_character(&a), UnitPhase::ratio(1, 3));
    }

    #[test]
    fn tensor_normalizes_finiteness() {
        let om2 = LocalFunction::omega(Prime::TWO);
        let om3 = LocalFunction::omega(Prime::THREE);
        let f = AdelicFunction::from_factors(Some(DyadicStepFunction::haar_scaling()), [om2, om3]);
        assert_eq!(f, AdelicFunction::refinable(true));
        let k = kozyrev(Prime::TWO, 1, 0, &q(0, 1)).unwrap();
        let g = AdelicFunction::from_factors(None, [k.clone()]);
        assert_eq!(g.finiteness(), Prime::TWO);
        let mut map = BTreeMap::new();
        map.insert(Prime::FIVE, kozyrev(Prime::FIVE, 1, 0, &q(0, 1)).unwrap());
        assert!(matches!(
            AdelicFunction::tensor(None, map, Prime::THREE),
            Err(Error::FactorBeyondFiniteness(5))
        ));
    }

    #[test]
    fn inner_examples() {
        let phi = AdelicFunction::refinable(true);
        assert_eq!(adelic_inner(&phi, &phi).unwrap(), Complex64::new(1.0, 0.0));
        let k = kozyrev(Prime::THREE, 2, -1, &q(0, 1)).unwrap();
        let f = AdelicFunction::from_factors(None, [k]);
        // (psi_{2;-1,0}, Omega) at p = 3 is 3^{-1/2}
        let v = adelic_inner(&f, &AdelicFunction::refinable(false)).unwrap();
        assert!((v - 3f64.powf(-0.5)).norm() < 1e-15);
        assert!(adelic_inner(&f, &phi).is_err());
    }

    #[test]
    fn multi_dilate_example() {
        let mut d = AdelicDilation::default();
        d.finite.insert(Prime::TWO, 1);
        let f = AdelicFunction::refinable(true).multi_dilate(&d).unwrap();
        // 2^{-1/2} phi(2 x_2): indicator of B_1(0)
        let want = LocalFunction::indicator(&crate::padic::Ball::centered(Prime::TWO, 1))
            .scale(Complex64::new(2f64.powf(-0.5), 0.0));
        assert!(f.factor(Prime::TWO).approx_eq(&want, 1e-15));
        assert_eq!(f.real(), Some(&DyadicStepFunction::haar_scaling()));
    }

    #[test]
    fn shift_rejects_non_shift() {
        let mut a = AdelicShift::default();
        a.finite.insert(Prime::TWO, q(3, 2));
        assert!(AdelicFunction::refinable(false).shift(&a).is_err());
        assert_eq!(
            AdelicFunction::refinable(true)
                .shift(&AdelicShift::default())
                .unwrap(),
            AdelicFunction::refinable(true)
        );
    }

    #[test]
    fn trivial_index_is_refinable_function() {
        let alpha = AdelicIndex {
            real: None,
            places: BTreeMap::new(),
        };
        assert_eq!(alpha.build().unwrap(), AdelicFunction::refinable(false));
    }

    #[test]
    fn factorization_through_generator() {
        let mut places = BTreeMap::new();
        places.insert(Prime::TWO, LocalIndex::wavelet(1, 2, q(1, 4)));
        places.insert(Prime::THREE, LocalIndex::scaling(q(2, 3)));
        let alpha = AdelicIndex {
            real: Some(RealIndex::Wavelet { j: -1, n: 3 }),
            places,
        };
        let (j, a) = alpha.dilation_and_shift();
        let neg = AdelicDilation {
            real: -j.real,
            finite: j.finite.iter().map(|(p, v)| (*p, -v)).collect(),
        };
        let g = alpha.generator().build().unwrap();
        let built = g.shift(&a).unwrap().multi_dilate(&neg).unwrap();
        let direct = alpha.build().unwrap();
        assert!(built.real().unwrap().sub(direct.real().unwrap()).is_zero());
        for p in [Prime::TWO, Prime::THREE] {
            assert!(built.factor(p).approx_eq(&direct.factor(p), 1e-14));
        }
    }

    #[test]
    fn mra_rejects_all_scaling() {
        let mut pattern = BTreeMap::new();
        pattern.insert(Prime::TWO, FactorKind::Scaling);
        let idx = MraIndex {
            real: Some(FactorKind::Scaling),
            pattern,
            k: BTreeMap::new(),
            j: 0,
            shift: AdelicShift::default(),
        };
        assert!(matches!(idx.build(), Err(Error::InvalidPattern(_))));
    }

    #[test]
    fn mra_example_row() {
        let mut pattern = BTreeMap::new();
        pattern.insert(Prime::TWO, FactorKind::Scaling);
        let idx = MraIndex {
            real: Some(FactorKind::Wavelet),
            pattern,
            k: BTreeMap::new(),
            j: 0,
            shift: AdelicShift::default(),
        };
        let f = idx.build().unwrap();
        assert_eq!(f.real(), Some(&DyadicStepFunction::haar_wavelet(0, 0)));
        assert!(f.stored_factors().is_empty());
    }

    #[test]
    fn small_mra_gram() {
        let fam = mra_basis(Prime::TWO, Some(0..=1), 1, 1);
        let fns: Vec<_> = fam.into_iter().map(|x| x.1).collect();
        let (dev, at) = identity_deviation(&adelic_gram(&fns).unwrap());
        assert!(dev < 1e-12, "{dev} at {at:?}");
    }

    #[test]
    fn json_round_trip() {
        let k = kozyrev(Prime::THREE, 2, 1, &q(1, 3)).unwrap();
        let f = AdelicFunction::from_factors(Some(DyadicStepFunction::haar_wavelet(0, 1)), [k]);
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(serde_json::from_str::<AdelicFunction>(&s).unwrap(), f);
        let p: Place = serde_json::from_str("\"inf\"").unwrap();
        assert_eq!(p, Place::Real);
        assert!(serde_json::from_str::<Place>("4").is_err());
    }
}
