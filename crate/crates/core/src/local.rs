//! Functions on Q_p as finite sums of character-times-ball terms.

use std::collections::{HashMap, HashSet};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::padic::{chi, Ball, PAdicScalar, Prime, UnitPhase, Valuation};

/// Default amplitude tolerance for canonicalization and comparisons.
pub const DEFAULT_TOL: f64 = 1e-12;

/// amp * e^{2 pi i phase} * chi_p(freq x) * 1_ball(x).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharBallTerm {
    pub amp: Complex64,
    pub phase: UnitPhase,
    pub freq: PAdicScalar,
    pub ball: Ball,
}

impl CharBallTerm {
    pub fn new(amp: Complex64, phase: UnitPhase, freq: PAdicScalar, ball: Ball) -> Self {
        CharBallTerm {
            amp,
            phase,
            freq,
            ball,
        }
    }

    /// amp * e^{2 pi i phase}.
    pub fn coefficient(&self) -> Complex64 {
        self.amp * self.phase.to_complex()
    }

    pub fn evaluate(&self, x: &PAdicScalar) -> Complex64 {
        if !self.ball.contains(x) {
            return Complex64::new(0.0, 0.0);
        }
        let ph = self.phase.add(&chi(&(&self.freq * x), self.ball.p()));
        self.amp * ph.to_complex()
    }

    /// Replace the frequency by its visible part on the ball, folding the
    /// rest into the phase.
    pub fn normalized(mut self) -> Self {
        let p = self.ball.p();
        let vis = self.ball.visible_freq(&self.freq);
        if vis != self.freq {
            let delta = &self.freq - &vis;
            self.phase = self.phase.add(&chi(&(&delta * self.ball.center()), p));
            self.freq = vis;
        }
        self
    }

    /// The same function restricted to a sub-ball, normalized there.
    pub fn restricted_to(&self, sub: &Ball) -> CharBallTerm {
        debug_assert!(self.ball.contains_ball(sub));
        CharBallTerm {
            amp: self.amp,
            phase: self.phase.clone(),
            freq: self.freq.clone(),
            ball: sub.clone(),
        }
        .normalized()
    }

    pub fn integral(&self) -> Complex64 {
        let p = self.ball.p();
        if self.freq.valuation(p) < Valuation::Finite(self.ball.gamma()) {
            return Complex64::new(0.0, 0.0);
        }
        let ph = self.phase.add(&chi(&(&self.freq * self.ball.center()), p));
        self.amp * ph.to_complex() * self.ball.measure()
    }
}

/// Integral of t1 * conj(t2) in closed form.
pub fn term_inner(t1: &CharBallTerm, t2: &CharBallTerm) -> Complex64 {
    let small = if t1.ball.gamma() <= t2.ball.gamma() {
        if !t2.ball.contains(t1.ball.center()) {
            return Complex64::new(0.0, 0.0);
        }
        &t1.ball
    } else {
        if !t1.ball.contains(t2.ball.center()) {
            return Complex64::new(0.0, 0.0);
        }
        &t2.ball
    };
    let p = small.p();
    let db = &t1.freq - &t2.freq;
    if db.valuation(p) < Valuation::Finite(small.gamma()) {
        return Complex64::new(0.0, 0.0);
    }
    let ph = t1
        .phase
        .sub(&t2.phase)
        .add(&chi(&(&db * small.center()), p));
    t1.amp * t2.amp.conj() * ph.to_complex() * small.measure()
}

/// A finite sum of character-ball terms at one prime, kept canonical:
/// pairwise disjoint maximal balls, visible frequencies, nonzero amplitudes,
/// sorted by ball.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalFunction {
    p: Prime,
    terms: Vec<CharBallTerm>,
}

#[derive(Deserialize)]
struct LocalRepr {
    p: Prime,
    terms: Vec<CharBallTerm>,
}

impl<'de> Deserialize<'de> for LocalFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = LocalRepr::deserialize(d)?;
        LocalFunction::from_terms(r.p, r.terms).map_err(serde::de::Error::custom)
    }
}

impl LocalFunction {
    pub fn zero(p: Prime) -> Self {
        LocalFunction {
            p,
            terms: Vec::new(),
        }
    }

    /// Omega(|x|_p), the indicator of Z_p.
    pub fn omega(p: Prime) -> Self {
        Self::indicator(&Ball::centered(p, 0))
    }

    pub fn indicator(ball: &Ball) -> Self {
        LocalFunction {
            p: ball.p(),
            terms: vec![CharBallTerm::new(
                Complex64::new(1.0, 0.0),
                UnitPhase::zero(),
                PAdicScalar::zero(),
                ball.clone(),
            )],
        }
    }

    /// Builds and canonicalizes; every ball must live at `p`.
    pub fn from_terms(p: Prime, terms: Vec<CharBallTerm>) -> Result<Self> {
        if let Some(t) = terms.iter().find(|t| t.ball.p() != p) {
            return Err(Error::PrimeMismatch(p.get(), t.ball.p().get()));
        }
        Ok(Self::raw(p, terms).canonicalize())
    }

    pub(crate) fn raw(p: Prime, terms: Vec<CharBallTerm>) -> Self {
        LocalFunction { p, terms }
    }

    pub fn p(&self) -> Prime {
        self.p
    }

    pub fn terms(&self) -> &[CharBallTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_omega(&self, tol: f64) -> bool {
        match self.terms.as_slice() {
            [t] => {
                t.ball == Ball::centered(self.p, 0)
                    && t.freq.is_zero()
                    && (t.coefficient() - 1.0).norm() <= tol
            }
            _ => false,
        }
    }

    pub fn canonicalize(&self) -> Self {
        self.canonicalize_with(DEFAULT_TOL)
    }

    pub fn canonicalize_with(&self, tol: f64) -> Self {
        LocalFunction {
            p: self.p,
            terms: canonical_terms(self.terms.clone(), tol),
        }
    }

    fn map_terms(&self, f: impl Fn(&CharBallTerm) -> CharBallTerm) -> Self {
        Self::raw(self.p, self.terms.iter().map(f).collect()).canonicalize()
    }

    fn check_same_prime(&self, other: &LocalFunction) {
        assert_eq!(self.p, other.p, "local functions at different primes");
    }

    pub fn add(&self, other: &LocalFunction) -> Self {
        self.check_same_prime(other);
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self::raw(self.p, terms).canonicalize()
    }

    pub fn sub(&self, other: &LocalFunction) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map_terms(|t| CharBallTerm {
            amp: t.amp * c,
            ..t.clone()
        })
    }

    /// Multiplies by the exact phase e^{2 pi i ph}.
    pub fn rotate(&self, ph: &UnitPhase) -> Self {
        self.map_terms(|t| CharBallTerm {
            phase: t.phase.add(ph),
            ..t.clone()
        })
    }

    pub fn conjugate(&self) -> Self {
        self.map_terms(|t| CharBallTerm {
            amp: t.amp.conj(),
            phase: t.phase.neg(),
            freq: -&t.freq,
            ball: t.ball.clone(),
        })
    }

    /// g(x) = f(x - c).
    pub fn translate(&self, c: &PAdicScalar) -> Self {
        let p = self.p;
        self.map_terms(|t| CharBallTerm {
            amp: t.amp,
            phase: t.phase.add(&chi(&-(&t.freq * c), p)),
            freq: t.freq.clone(),
            ball: Ball::new(p, &(t.ball.center() + c), t.ball.gamma()),
        })
    }

    /// g(x) = f(p^{-j} x), without renormalization.
    pub fn dilate(&self, j: i64) -> Self {
        let p = self.p;
        let up = PAdicScalar::prime_power(p, j);
        let down = PAdicScalar::prime_power(p, -j);
        self.map_terms(|t| CharBallTerm {
            amp: t.amp,
            phase: t.phase.clone(),
            freq: &t.freq * &down,
            ball: Ball::new(p, &(t.ball.center() * &up), t.ball.gamma() - j),
        })
    }

    /// g(x) = chi_p(b x) f(x).
    pub fn modulate(&self, b: &PAdicScalar) -> Self {
        self.map_terms(|t| CharBallTerm {
            freq: &t.freq + b,
            ..t.clone()
        })
    }

    /// g(x) = f(-x).
    pub fn reflect(&self) -> Self {
        let p = self.p;
        self.map_terms(|t| CharBallTerm {
            amp: t.amp,
            phase: t.phase.clone(),
            freq: -&t.freq,
            ball: Ball::new(p, &-t.ball.center(), t.ball.gamma()),
        })
    }

    pub fn multiply(&self, other: &LocalFunction) -> Self {
        self.check_same_prime(other);
        let mut out = Vec::new();
        for s in &self.terms {
            for t in &other.terms {
                let ball = if s.ball.gamma() <= t.ball.gamma() {
                    if !t.ball.contains(s.ball.center()) {
                        continue;
                    }
                    s.ball.clone()
                } else {
                    if !s.ball.contains(t.ball.center()) {
                        continue;
                    }
                    t.ball.clone()
                };
                out.push(CharBallTerm {
                    amp: s.amp * t.amp,
                    phase: s.phase.add(&t.phase),
                    freq: &s.freq + &t.freq,
                    ball,
                });
            }
        }
        Self::raw(self.p, out).canonicalize()
    }

    pub fn integrate(&self) -> Complex64 {
        self.terms.iter().map(CharBallTerm::integral).sum()
    }

    /// (f, g) = integral of f * conj(g).
    pub fn inner(&self, other: &LocalFunction) -> Complex64 {
        self.check_same_prime(other);
        let mut acc = Complex64::new(0.0, 0.0);
        for s in &self.terms {
            for t in &other.terms {
                acc += term_inner(s, t);
            }
        }
        acc
    }

    /// ||f||^2, exact up to the final float sum (balls are disjoint).
    pub fn norm_sq(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.amp.norm_sqr() * t.ball.measure())
            .sum()
    }

    /// F[f](xi) = integral of chi_p(xi x) f(x) dx.
    pub fn fourier(&self) -> Self {
        let p = self.p;
        self.map_terms(|t| CharBallTerm {
            amp: t.amp * t.ball.measure(),
            phase: t.phase.add(&chi(&(&t.freq * t.ball.center()), p)),
            freq: t.ball.center().clone(),
            ball: Ball::new(p, &-&t.freq, -t.ball.gamma()),
        })
    }

    /// F^{-1}[g](x) = F[g](-x).
    pub fn inverse_fourier(&self) -> Self {
        self.fourier().reflect()
    }

    pub fn evaluate(&self, x: &PAdicScalar) -> Complex64 {
        self.terms.iter().map(|t| t.evaluate(x)).sum()
    }

    /// Smallest N with supp f inside B_N(0); None for the zero function.
    pub fn support_radius(&self) -> Option<i64> {
        self.terms
            .iter()
            .map(|t| {
                let c = match t.ball.center().valuation(self.p) {
                    Valuation::Finite(v) => -v,
                    Valuation::Infinite => i64::MIN,
                };
                t.ball.gamma().max(c)
            })
            .max()
    }

    /// Parameter of constancy: f is constant on every ball of radius p^l.
    /// Conservative (term-wise) value; None for the zero function.
    pub fn constancy(&self) -> Option<i64> {
        self.terms
            .iter()
            .map(|t| match t.freq.valuation(self.p) {
                Valuation::Finite(v) => v.min(t.ball.gamma()),
                Valuation::Infinite => t.ball.gamma(),
            })
            .min()
    }

    /// Smallest ball containing the support.
    pub fn hull(&self) -> Option<Ball> {
        let first = self.terms.first()?;
        let g0 = self.terms.iter().map(|t| t.ball.gamma()).max().unwrap();
        let mut h = first.ball.ancestor(g0);
        while !self.terms.iter().all(|t| h.contains(t.ball.center())) {
            h = h.parent();
        }
        Some(h)
    }

    /// Largest pointwise deviation |f - g|.
    pub fn sup_distance(&self, other: &LocalFunction) -> f64 {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().map(|t| CharBallTerm {
            amp: -t.amp,
            ..t.clone()
        }));
        canonical_terms(terms, 0.0)
            .iter()
            .map(|t| t.amp.norm())
            .fold(0.0, f64::max)
    }

    /// Same balls and frequencies, values within `tol`.
    pub fn approx_eq(&self, other: &LocalFunction, tol: f64) -> bool {
        self.p == other.p
            && self.terms.len() == other.terms.len()
            && self.terms.iter().zip(&other.terms).all(|(a, b)| {
                a.ball == b.ball
                    && a.freq == b.freq
                    && (a.coefficient() - b.coefficient()).norm() <= tol
            })
    }
}

/// Calls `visit(i, j, (f_i, f_j))` for every pair i <= j whose hulls are
/// nested. All other pairs have disjoint supports and inner product 0.
fn for_each_overlapping_pair(
    fns: &[LocalFunction],
    mut visit: impl FnMut(usize, usize, Complex64),
) {
    let hulls: Vec<Option<Ball>> = fns.iter().map(LocalFunction::hull).collect();
    let mut by_hull: HashMap<&Ball, Vec<usize>> = HashMap::new();
    for (i, h) in hulls.iter().enumerate() {
        if let Some(h) = h {
            by_hull.entry(h).or_default().push(i);
        }
    }
    let max_gamma = hulls.iter().flatten().map(Ball::gamma).max().unwrap_or(0);
    for (i, h) in hulls.iter().enumerate() {
        let Some(h) = h else { continue };
        // Partners: functions whose hull equals or contains this hull.
        let mut anc = h.clone();
        loop {
            if let Some(js) = by_hull.get(&anc) {
                for &j in js {
                    if anc == *h && j < i {
                        continue;
                    }
                    visit(i.min(j), i.max(j), fns[i.min(j)].inner(&fns[i.max(j)]));
                }
            }
            if anc.gamma() >= max_gamma {
                break;
            }
            anc = anc.parent();
        }
    }
}

/// Gram matrix G_ij = (f_i, f_j). Pairs with disjoint hulls are exactly 0
/// and skipped.
pub fn gram_matrix(fns: &[LocalFunction]) -> Vec<Vec<Complex64>> {
    let n = fns.len();
    let mut g = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for_each_overlapping_pair(fns, |i, j, v| {
        g[i][j] = v;
        g[j][i] = v.conj();
    });
    g
}

/// Largest deviation of the Gram matrix from the identity without storing
/// it. Zero-norm functions count as a unit deviation on the diagonal.
pub fn gram_deviation(fns: &[LocalFunction]) -> (f64, Option<(usize, usize)>) {
    let mut worst = 0.0;
    let mut at = None;
    for (i, f) in fns.iter().enumerate() {
        if f.is_zero() {
            worst = 1.0;
            at = Some((i, i));
            break;
        }
    }
    for_each_overlapping_pair(fns, |i, j, v| {
        let target = if i == j { 1.0 } else { 0.0 };
        let d = (v - target).norm();
        if d > worst {
            worst = d;
            at = Some((i, j));
        }
    });
    (worst, at)
}

/// Largest entrywise deviation of G from the identity, with its position.
pub fn identity_deviation(g: &[Vec<Complex64>]) -> (f64, Option<(usize, usize)>) {
    let mut worst = 0.0;
    let mut at = None;
    for (i, row) in g.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            let d = (v - target).norm();
            if d > worst {
                worst = d;
                at = Some((i, j));
            }
        }
    }
    (worst, at)
}

fn canonical_terms(terms: Vec<CharBallTerm>, tol: f64) -> Vec<CharBallTerm> {
    let mut work: Vec<CharBallTerm> = terms
        .into_iter()
        .filter(|t| t.amp != Complex64::new(0.0, 0.0))
        .map(CharBallTerm::normalized)
        .collect();
    if work.is_empty() {
        return work;
    }
    refine(&mut work);
    let mut merged = combine_equal_balls(work, tol);
    merge_siblings(&mut merged, tol);
    merged.sort_by(|a, b| a.ball.cmp(&b.ball));
    merged
}

/// Split balls until any two are disjoint or equal, and equal balls carry
/// the same visible frequency.
fn refine(work: &mut Vec<CharBallTerm>) {
    loop {
        combine_same_character(work);
        if work.is_empty() {
            return;
        }
        let mut freq_of: HashMap<&Ball, &PAdicScalar> = HashMap::new();
        let mut split: HashSet<Ball> = HashSet::new();
        for t in work.iter() {
            match freq_of.get(&t.ball) {
                Some(f) if **f != t.freq => {
                    split.insert(t.ball.clone());
                }
                Some(_) => {}
                None => {
                    freq_of.insert(&t.ball, &t.freq);
                }
            }
        }
        let max_gamma = freq_of.keys().map(|b| b.gamma()).max().unwrap();
        for b in freq_of.keys() {
            let mut anc = (*b).clone();
            while anc.gamma() < max_gamma {
                anc = anc.parent();
                if freq_of.contains_key(&anc) {
                    split.insert(anc.clone());
                }
            }
        }
        if split.is_empty() {
            return;
        }
        let old = std::mem::take(work);
        for t in old {
            if split.contains(&t.ball) {
                for c in t.ball.children() {
                    work.push(t.restricted_to(&c));
                }
            } else {
                work.push(t);
            }
        }
    }
}

/// Sum terms sharing ball and frequency, so splitting a ball with many
/// characters does not multiply the term count at every level.
fn combine_same_character(work: &mut Vec<CharBallTerm>) {
    let mut at: HashMap<(Ball, PAdicScalar), usize> = HashMap::new();
    let mut out: Vec<CharBallTerm> = Vec::with_capacity(work.len());
    for t in work.drain(..) {
        match at.get(&(t.ball.clone(), t.freq.clone())) {
            Some(&i) => {
                let acc = &mut out[i];
                if acc.phase == t.phase {
                    acc.amp += t.amp;
                } else {
                    acc.amp += t.amp * t.phase.sub(&acc.phase).to_complex();
                }
            }
            None => {
                at.insert((t.ball.clone(), t.freq.clone()), out.len());
                out.push(t);
            }
        }
    }
    out.retain(|t| t.amp != Complex64::new(0.0, 0.0));
    *work = out;
}

fn combine_equal_balls(work: Vec<CharBallTerm>, tol: f64) -> Vec<CharBallTerm> {
    let mut groups: HashMap<Ball, Vec<CharBallTerm>> = HashMap::new();
    for t in work {
        groups.entry(t.ball.clone()).or_default().push(t);
    }
    let mut out = Vec::with_capacity(groups.len());
    for (_, g) in groups {
        let t = if g.len() == 1 {
            g.into_iter().next().unwrap()
        } else {
            let base = g[0].phase.clone();
            let amp: Complex64 = if g.iter().all(|t| t.phase == base) {
                g.iter().map(|t| t.amp).sum()
            } else {
                g.iter()
                    .map(|t| t.amp * t.phase.sub(&base).to_complex())
                    .sum()
            };
            CharBallTerm {
                amp,
                phase: base,
                freq: g[0].freq.clone(),
                ball: g[0].ball.clone(),
            }
        };
        if t.amp.norm() > tol {
            out.push(t);
        }
    }
    out
}

/// Replace p sibling terms by one parent term whenever the parent carries
/// a single character, until no merge applies.
fn merge_siblings(terms: &mut Vec<CharBallTerm>, tol: f64) {
    loop {
        let mut families: HashMap<Ball, Vec<usize>> = HashMap::new();
        for (i, t) in terms.iter().enumerate() {
            families.entry(t.ball.parent()).or_default().push(i);
        }
        let mut used = vec![false; terms.len()];
        let mut parents = Vec::new();
        for (parent, idx) in &families {
            if idx.len() as u64 != parent.p().get() {
                continue;
            }
            if let Some(m) = try_merge(parent, idx.iter().map(|&i| &terms[i]).collect(), tol) {
                for &i in idx {
                    used[i] = true;
                }
                parents.push(m);
            }
        }
        if parents.is_empty() {
            return;
        }
        let old = std::mem::take(terms);
        terms.extend(
            old.into_iter()
                .zip(used)
                .filter(|(_, u)| !u)
                .map(|(t, _)| t),
        );
        terms.extend(parents);
    }
}

fn try_merge(parent: &Ball, mut kids: Vec<&CharBallTerm>, tol: f64) -> Option<CharBallTerm> {
    let p = parent.p();
    kids.sort_by_key(|t| t.ball.child_digit());
    let b = &kids[0].freq;
    if kids.iter().any(|t| t.freq != *b) {
        return None;
    }
    let step = PAdicScalar::prime_power(p, parent.gamma() - 1);
    let scale = kids[0].amp.norm().max(1.0);
    let equal_amps = kids
        .iter()
        .all(|t| (t.amp - kids[0].amp).norm() <= tol * scale);
    for d in 0..p.get() {
        let shift = &step * &PAdicScalar::from_int(d as i64);
        // chi(d p^{gamma-1} c_t) for each child's center.
        let twists: Vec<UnitPhase> = kids
            .iter()
            .map(|t| chi(&(&shift * t.ball.center()), p))
            .collect();
        let base = kids[0].phase.sub(&twists[0]);
        let fits = if equal_amps
            && kids
                .iter()
                .zip(&twists)
                .all(|(t, w)| t.phase.sub(w) == base)
        {
            true
        } else {
            let target = kids[0].amp;
            kids.iter().zip(&twists).all(|(t, w)| {
                let rel = t.phase.sub(w).sub(&base).to_complex();
                (t.amp * rel - target).norm() <= tol * scale
            })
        };
        if fits {
            let amp = if equal_amps {
                kids[0].amp
            } else {
                let s: Complex64 = kids
                    .iter()
                    .zip(&twists)
                    .map(|(t, w)| t.amp * t.phase.sub(w).sub(&base).to_complex())
                    .sum();
                s / kids.len() as f64
            };
            return Some(
                CharBallTerm {
                    amp,
                    phase: base,
                    freq: b + &shift,
                    ball: parent.clone(),
                }
                .normalized(),
            );
        }
    }
    None
}
