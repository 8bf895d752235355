//! Exact rationals viewed inside Q_p: valuation, norm, fractional part,
//! digits, the additive character and ultrametric balls.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A validated prime number.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Prime(u64);

impl Prime {
    pub const TWO: Prime = Prime(2);
    pub const THREE: Prime = Prime(3);
    pub const FIVE: Prime = Prime(5);

    pub fn new(p: u64) -> Result<Prime> {
        if is_prime(p) {
            Ok(Prime(p))
        } else {
            Err(Error::NotPrime(p))
        }
    }

    pub fn get(self) -> u64 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }

    pub fn big(self) -> BigInt {
        BigInt::from(self.0)
    }

    /// The next prime after `self`.
    pub fn next(self) -> Prime {
        let mut q = self.0 + 1;
        while !is_prime(q) {
            q += 1;
        }
        Prime(q)
    }

    /// The largest prime below `self`, if any.
    pub fn prev(self) -> Option<Prime> {
        (2..self.0).rev().find(|&q| is_prime(q)).map(Prime)
    }

    /// All primes `q <= p`, ascending.
    pub fn up_to(p: Prime) -> Vec<Prime> {
        (2..=p.0).filter(|&q| is_prime(q)).map(Prime).collect()
    }

    /// p^e as an exact rational (e may be negative).
    pub fn pow(self, e: i64) -> BigRational {
        let base = num_traits::pow(self.big(), e.unsigned_abs() as usize);
        if e >= 0 {
            BigRational::from_integer(base)
        } else {
            BigRational::new(BigInt::one(), base)
        }
    }

    /// p^e as a float (e may be negative).
    pub fn powf(self, e: f64) -> f64 {
        self.as_f64().powf(e)
    }
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl TryFrom<u64> for Prime {
    type Error = Error;
    fn try_from(p: u64) -> Result<Prime> {
        Prime::new(p)
    }
}

impl Serialize for Prime {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u64(self.0)
    }
}

/// Accepts an integer or a decimal string (JSON object keys).
impl<'de> Deserialize<'de> for Prime {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(u64),
            Str(String),
        }
        let p = match Repr::deserialize(d)? {
            Repr::Int(p) => p,
            Repr::Str(s) => s.trim().parse().map_err(serde::de::Error::custom)?,
        };
        Prime::new(p).map_err(serde::de::Error::custom)
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// p-adic valuation; `Infinite` for zero. `Finite(_) < Infinite`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Valuation {
    Finite(i64),
    Infinite,
}

impl Valuation {
    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinite => None,
        }
    }
}

/// An exact rational number. The prime is supplied per operation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PAdicScalar(BigRational);

impl PAdicScalar {
    pub fn new(num: BigInt, den: BigInt) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        Ok(PAdicScalar(BigRational::new(num, den)))
    }

    pub fn zero() -> Self {
        PAdicScalar(BigRational::zero())
    }

    pub fn one() -> Self {
        PAdicScalar(BigRational::one())
    }

    pub fn from_int(n: i64) -> Self {
        PAdicScalar(BigRational::from_integer(n.into()))
    }

    /// `num/den`; panics on a zero denominator.
    pub fn ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        PAdicScalar(BigRational::new(num.into(), den.into()))
    }

    pub fn from_rational(r: BigRational) -> Self {
        PAdicScalar(r)
    }

    pub fn as_rational(&self) -> &BigRational {
        &self.0
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// p^e.
    pub fn prime_power(p: Prime, e: i64) -> Self {
        PAdicScalar(p.pow(e))
    }

    pub fn valuation(&self, p: Prime) -> Valuation {
        if self.0.is_zero() {
            return Valuation::Infinite;
        }
        let pb = p.big();
        Valuation::Finite(count_factor(self.0.numer(), &pb) - count_factor(self.0.denom(), &pb))
    }

    /// |x|_p = p^{-v(x)}, with |0|_p = 0.
    pub fn norm(&self, p: Prime) -> BigRational {
        match self.valuation(p) {
            Valuation::Infinite => BigRational::zero(),
            Valuation::Finite(v) => p.pow(-v),
        }
    }

    /// {x}_p, the negative-power digit tail, in [0, 1).
    pub fn frac_part(&self, p: Prime) -> PAdicScalar {
        let pb = p.big();
        let mut d = self.0.denom().clone();
        let mut m = BigInt::one();
        loop {
            let (q, r) = d.div_rem(&pb);
            if !r.is_zero() {
                break;
            }
            d = q;
            m *= &pb;
        }
        if m.is_one() {
            return PAdicScalar::zero();
        }
        let inv = mod_inverse(&d, &m);
        let r = (self.0.numer() * inv).mod_floor(&m);
        PAdicScalar(BigRational::new(r, m))
    }

    /// Digit x_k of the canonical expansion.
    pub fn digit(&self, p: Prime, k: i64) -> u64 {
        let shifted = self * &PAdicScalar::prime_power(p, -k - 1);
        let f = shifted.frac_part(p);
        let t = (f.0 * BigRational::from_integer(p.big())).floor();
        t.to_integer().to_u64().expect("digit in range")
    }

    /// Digits x_k for kLo <= k <= kHi.
    pub fn digits(&self, p: Prime, k_lo: i64, k_hi: i64) -> Vec<u64> {
        (k_lo..=k_hi).map(|k| self.digit(p, k)).collect()
    }

    /// The part of the expansion at positions k < n, i.e. p^n {x p^{-n}}_p.
    pub fn truncate_below(&self, p: Prime, n: i64) -> PAdicScalar {
        let shifted = self * &PAdicScalar::prime_power(p, -n);
        &shifted.frac_part(p) * &PAdicScalar::prime_power(p, n)
    }

    /// True iff x is in I_p, i.e. {x}_p = x.
    pub fn is_shift(&self, p: Prime) -> bool {
        self.frac_part(p) == *self
    }
}

fn count_factor(n: &BigInt, p: &BigInt) -> i64 {
    let mut n = n.clone();
    let mut c = 0;
    loop {
        let (q, r) = n.div_rem(p);
        if !r.is_zero() {
            return c;
        }
        n = q;
        c += 1;
    }
}

fn mod_inverse(a: &BigInt, m: &BigInt) -> BigInt {
    let e = a.mod_floor(m).extended_gcd(m);
    debug_assert!(e.gcd.is_one());
    e.x.mod_floor(m)
}

impl fmt::Display for PAdicScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

macro_rules! scalar_binop {
    ($tr:ident, $m:ident) => {
        impl $tr<&PAdicScalar> for &PAdicScalar {
            type Output = PAdicScalar;
            fn $m(self, rhs: &PAdicScalar) -> PAdicScalar {
                PAdicScalar((&self.0).$m(&rhs.0))
            }
        }
        impl $tr<PAdicScalar> for PAdicScalar {
            type Output = PAdicScalar;
            fn $m(self, rhs: PAdicScalar) -> PAdicScalar {
                PAdicScalar(self.0.$m(rhs.0))
            }
        }
        impl $tr<&PAdicScalar> for PAdicScalar {
            type Output = PAdicScalar;
            fn $m(self, rhs: &PAdicScalar) -> PAdicScalar {
                PAdicScalar(self.0.$m(&rhs.0))
            }
        }
    };
}
scalar_binop!(Add, add);
scalar_binop!(Sub, sub);
scalar_binop!(Mul, mul);

impl Neg for PAdicScalar {
    type Output = PAdicScalar;
    fn neg(self) -> PAdicScalar {
        PAdicScalar(-self.0)
    }
}

impl Neg for &PAdicScalar {
    type Output = PAdicScalar;
    fn neg(self) -> PAdicScalar {
        PAdicScalar(-&self.0)
    }
}

#[derive(Serialize, Deserialize)]
struct RationalRepr {
    num: String,
    den: String,
}

pub(crate) fn rational_to_repr<S: Serializer>(
    r: &BigRational,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    RationalRepr {
        num: r.numer().to_string(),
        den: r.denom().to_string(),
    }
    .serialize(s)
}

pub(crate) fn rational_from_repr<'de, D: Deserializer<'de>>(
    d: D,
) -> std::result::Result<BigRational, D::Error> {
    use serde::de::Error as _;
    let r = RationalRepr::deserialize(d)?;
    let num: BigInt = r.num.trim().parse().map_err(D::Error::custom)?;
    let den: BigInt = r.den.trim().parse().map_err(D::Error::custom)?;
    if den.is_zero() {
        return Err(D::Error::custom("zero denominator"));
    }
    Ok(BigRational::new(num, den))
}

impl Serialize for PAdicScalar {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        rational_to_repr(&self.0, s)
    }
}

impl<'de> Deserialize<'de> for PAdicScalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        rational_from_repr(d).map(PAdicScalar)
    }
}

/// The complex number e^{2 pi i r}, stored exactly as r in [0, 1).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UnitPhase(BigRational);

impl UnitPhase {
    pub fn zero() -> Self {
        UnitPhase(BigRational::zero())
    }

    /// Reduces `r` mod 1.
    pub fn new(r: BigRational) -> Self {
        let f = &r - r.floor();
        UnitPhase(f)
    }

    pub fn from_scalar(x: &PAdicScalar) -> Self {
        UnitPhase::new(x.0.clone())
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        UnitPhase::new(BigRational::new(num.into(), den.into()))
    }

    pub fn r(&self) -> &BigRational {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn add(&self, other: &UnitPhase) -> UnitPhase {
        UnitPhase::new(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &UnitPhase) -> UnitPhase {
        UnitPhase::new(&self.0 - &other.0)
    }

    pub fn neg(&self) -> UnitPhase {
        UnitPhase::new(-&self.0)
    }

    /// e^{2 pi i r}; quarter turns are exact.
    pub fn to_complex(&self) -> num_complex::Complex64 {
        use num_complex::Complex64;
        let four = &self.0 * BigRational::from_integer(4.into());
        if four.is_integer() {
            return match four.to_integer().to_i64().unwrap_or(0) {
                0 => Complex64::new(1.0, 0.0),
                1 => Complex64::new(0.0, 1.0),
                2 => Complex64::new(-1.0, 0.0),
                _ => Complex64::new(0.0, -1.0),
            };
        }
        let t = 2.0 * std::f64::consts::PI * self.0.to_f64().unwrap_or(0.0);
        Complex64::new(t.cos(), t.sin())
    }
}

impl Serialize for UnitPhase {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        rational_to_repr(&self.0, s)
    }
}

impl<'de> Deserialize<'de> for UnitPhase {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        rational_from_repr(d).map(UnitPhase::new)
    }
}

/// The additive character chi_p(x) = e^{2 pi i {x}_p}.
pub fn chi(x: &PAdicScalar, p: Prime) -> UnitPhase {
    UnitPhase(x.frac_part(p).0)
}

/// Relation between two balls at the same prime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BallRelation {
    Disjoint,
    Equal,
    FirstInsideSecond,
    SecondInsideFirst,
}

/// B_gamma(a) = {x : |x - a|_p <= p^gamma}, with the center truncated to
/// digits below position -gamma.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Ball {
    p: Prime,
    center: PAdicScalar,
    gamma: i64,
}

impl Ball {
    pub fn new(p: Prime, center: &PAdicScalar, gamma: i64) -> Ball {
        Ball {
            p,
            center: center.truncate_below(p, -gamma),
            gamma,
        }
    }

    /// B_gamma(0).
    pub fn centered(p: Prime, gamma: i64) -> Ball {
        Ball {
            p,
            center: PAdicScalar::zero(),
            gamma,
        }
    }

    pub fn p(&self) -> Prime {
        self.p
    }

    pub fn center(&self) -> &PAdicScalar {
        &self.center
    }

    pub fn gamma(&self) -> i64 {
        self.gamma
    }

    /// Haar measure p^gamma.
    pub fn measure(&self) -> f64 {
        self.p.powf(self.gamma as f64)
    }

    pub fn contains(&self, x: &PAdicScalar) -> bool {
        (x - &self.center).valuation(self.p) >= Valuation::Finite(-self.gamma)
    }

    pub fn contains_zero(&self) -> bool {
        self.center.is_zero()
    }

    pub fn contains_ball(&self, other: &Ball) -> bool {
        other.gamma <= self.gamma && self.contains(&other.center)
    }

    pub fn relation(&self, other: &Ball) -> BallRelation {
        assert_eq!(self.p, other.p, "ball relation across different primes");
        match self.gamma.cmp(&other.gamma) {
            Ordering::Equal => {
                if self.center == other.center {
                    BallRelation::Equal
                } else {
                    BallRelation::Disjoint
                }
            }
            Ordering::Greater => {
                if self.contains(&other.center) {
                    BallRelation::SecondInsideFirst
                } else {
                    BallRelation::Disjoint
                }
            }
            Ordering::Less => {
                if other.contains(&self.center) {
                    BallRelation::FirstInsideSecond
                } else {
                    BallRelation::Disjoint
                }
            }
        }
    }

    /// The p sub-balls of radius p^{gamma-1}, ordered by the new digit.
    pub fn children(&self) -> Vec<Ball> {
        let step = PAdicScalar::prime_power(self.p, -self.gamma);
        (0..self.p.get())
            .map(|t| Ball {
                p: self.p,
                center: &self.center + &(&step * &PAdicScalar::from_int(t as i64)),
                gamma: self.gamma - 1,
            })
            .collect()
    }

    /// Index of this ball among its parent's children.
    pub fn child_digit(&self) -> u64 {
        self.center.digit(self.p, -self.gamma - 1)
    }

    pub fn parent(&self) -> Ball {
        self.ancestor(self.gamma + 1)
    }

    /// The unique ball of radius p^gamma containing this one (gamma >= own).
    pub fn ancestor(&self, gamma: i64) -> Ball {
        debug_assert!(gamma >= self.gamma);
        Ball::new(self.p, &self.center, gamma)
    }

    /// Canonical representative of a frequency on this ball: digits at
    /// positions below gamma. The remainder is invisible on the ball.
    pub fn visible_freq(&self, b: &PAdicScalar) -> PAdicScalar {
        b.truncate_below(self.p, self.gamma)
    }

    pub(crate) fn sort_key(&self) -> (&PAdicScalar, i64) {
        (&self.center, -self.gamma)
    }
}

impl PartialOrd for Ball {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ball {
    fn cmp(&self, other: &Self) -> Ordering {
        self.p
            .cmp(&other.p)
            .then_with(|| self.sort_key().cmp(&other.sort_key()))
    }
}

#[derive(Serialize, Deserialize)]
struct BallRepr {
    p: Prime,
    center: PAdicScalar,
    gamma: i64,
}

impl Serialize for Ball {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        BallRepr {
            p: self.p,
            center: self.center.clone(),
            gamma: self.gamma,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Ball {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = BallRepr::deserialize(d)?;
        Ok(Ball::new(r.p, &r.center, r.gamma))
    }
}

/// An element of I_p: a rational equal to its own fractional part.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "ShiftRepr")]
pub struct ShiftIndex {
    p: Prime,
    value: PAdicScalar,
}

#[derive(Deserialize)]
struct ShiftRepr {
    p: Prime,
    value: PAdicScalar,
}

impl TryFrom<ShiftRepr> for ShiftIndex {
    type Error = Error;
    fn try_from(r: ShiftRepr) -> Result<ShiftIndex> {
        ShiftIndex::new(r.p, r.value)
    }
}

impl ShiftIndex {
    pub fn new(p: Prime, value: PAdicScalar) -> Result<ShiftIndex> {
        if !value.is_shift(p) {
            return Err(Error::InvalidShift {
                p: p.get(),
                value: value.to_string(),
            });
        }
        Ok(ShiftIndex { p, value })
    }

    pub fn zero(p: Prime) -> ShiftIndex {
        ShiftIndex {
            p,
            value: PAdicScalar::zero(),
        }
    }

    pub fn p(&self) -> Prime {
        self.p
    }

    pub fn value(&self) -> &PAdicScalar {
        &self.value
    }

    /// Number of p-adic digits, i.e. log_p of the denominator.
    pub fn depth(&self) -> i64 {
        match self.value.valuation(self.p) {
            Valuation::Finite(v) => -v,
            Valuation::Infinite => 0,
        }
    }
}

/// All a in I_p with denominator dividing p^depth, denominator-major.
pub fn enumerate_shifts(p: Prime, depth: u32) -> Vec<ShiftIndex> {
    let pu = p.get() as i64;
    let mut out = vec![ShiftIndex::zero(p)];
    let mut den: i64 = 1;
    for _ in 0..depth {
        den *= pu;
        for n in 1..den {
            if n % pu != 0 {
                out.push(ShiftIndex {
                    p,
                    value: PAdicScalar::ratio(n, den),
                });
            }
        }
    }
    out
}

/// I_p^j = {a in I_p : p^j a in Z_p}.
pub fn enumerate_restricted_shifts(p: Prime, j: u32) -> Vec<ShiftIndex> {
    enumerate_shifts(p, j)
}
