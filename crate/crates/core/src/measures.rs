//! Target/proposal pairs, divergences and level-set functions of the ratio.
//!
//! For a pair `Q ≪ P` with ratio `r = dQ/dP` the level-set functions are
//!
//! * `w_P(h) = P[r(X) ≥ h]`, `w_Q(h) = Q[r(X) ≥ h]` (inclusive),
//! * `W_P(h) = E_P[r ∧ h]` and `S_P(h) = 1 − W_P(h) = E_P[(r − h)₊]`.
//!
//! They satisfy `S_P(h) = w_Q(h) − h·w_P(h)` at every `h ≥ 0`. `S_P` is the
//! survival function of a random level `H` with density `w_P`; it drives both
//! the truncation error and the sample-complexity bounds.
//!
//! Finite pairs are exact (direct summation). Gaussian pairs evaluate the
//! level sets in closed form through the normal CDF and are flagged
//! approximate.

use std::f64::consts::LOG2_E;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{domain, Error, Result};

/// Tolerance on `Σp = 1` and `Σq = 1` for finite pairs.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// A density ratio that can be sampled through its proposal.
///
/// `ratio` may be unnormalized (`r̃ ∝ dQ/dP`); samplers only use ratios and
/// the bound `sup_ratio`.
pub trait RatioModel: Sync {
    type Point: Copy + PartialEq + std::fmt::Debug + Send + Sync;

    fn ratio(&self, x: Self::Point) -> f64;

    /// `ln r̃(x)`; override where a direct log form is more accurate.
    fn log_ratio(&self, x: Self::Point) -> f64 {
        self.ratio(x).ln()
    }

    /// `‖r̃‖_∞`, `f64::INFINITY` when unbounded.
    fn sup_ratio(&self) -> f64;

    fn sample_proposal<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Point;
}

/// Level-set calculus of a normalized ratio.
pub trait LevelSets: RatioModel {
    fn level_stats(&self, h: f64) -> Result<LevelStats>;

    /// True when the level-set functions are computed by exact summation.
    fn is_exact(&self) -> bool;

    /// Smallest `h` with `S_P(h) ≤ eps`.
    fn s_p_inverse(&self, eps: f64) -> Result<f64> {
        check_unit("eps", eps)?;
        if eps >= 1.0 {
            return Ok(0.0);
        }
        let sup = self.sup_ratio();
        if eps == 0.0 {
            return Ok(sup);
        }
        let mut hi = if sup.is_finite() { sup } else { 2.0 };
        while self.level_stats(hi)?.s_p > eps {
            hi *= 2.0;
        }
        bisect(0.0, hi, |h| Ok(self.level_stats(h)?.s_p <= eps))
    }

    /// `φ(h) = h / W_P(h)`.
    fn phi(&self, h: f64) -> Result<f64> {
        if !(h > 0.0) {
            return Err(domain("h", h, "(0, ∞)"));
        }
        Ok(h / self.level_stats(h)?.big_w_p)
    }

    /// Attainable range of `φ` on `(0, ‖r‖_∞]`.
    fn phi_range(&self) -> Result<(f64, f64)> {
        let lo = self.phi(f64::MIN_POSITIVE.sqrt())?;
        Ok((lo, self.sup_ratio()))
    }

    /// `M` with `M / W_P(M) = m_tilde`.
    fn phi_inverse(&self, m_tilde: f64) -> Result<f64> {
        let (lo, hi) = self.phi_range()?;
        check_phi_range(m_tilde, lo, hi)?;
        if m_tilde >= hi {
            return Ok(hi);
        }
        let mut top = if hi.is_finite() { hi } else { 2.0 };
        while self.phi(top)? < m_tilde {
            top *= 2.0;
        }
        bisect(0.0, top, |h| Ok(h > 0.0 && self.phi(h)? >= m_tilde))
    }
}

fn check_unit(name: &'static str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(domain(name, v, "[0, 1]"))
    }
}

fn check_phi_range(m_tilde: f64, lo: f64, hi: f64) -> Result<()> {
    let slack = 1e-12 * lo.max(1.0);
    if m_tilde.is_nan() || m_tilde < lo - slack || m_tilde > hi + slack * hi.max(1.0) {
        return Err(Error::OutOfRange {
            name: "m_tilde",
            value: m_tilde,
            lo,
            hi,
        });
    }
    Ok(())
}

/// Smallest point of `[lo, hi]` where the monotone predicate turns true, to
/// a relative width of 1e-12.
fn bisect(mut lo: f64, mut hi: f64, pred: impl Fn(f64) -> Result<bool>) -> Result<f64> {
    for _ in 0..200 {
        if hi - lo <= 1e-12 * hi.abs().max(1e-300) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if pred(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Half-L1 distance between two mass vectors on a common alphabet.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "laws must share an alphabet");
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Generator `f` of an f-divergence `D_f(Q‖P) = E_P[f(r)]`.
///
/// All shipped generators are convex with `f(1) = 0` and `f′(1) = 0`. The KL
/// generator is `u·log₂u − (u − 1)·log₂e`, so `D_f` is the KL divergence in
/// bits and `(f′)⁻¹(y) = 2^y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FGenerator {
    Kl,
    #[serde(rename = "chi2")]
    ChiSquared,
    Hellinger,
}

impl FGenerator {
    pub const ALL: [FGenerator; 3] = [FGenerator::Kl, FGenerator::ChiSquared, FGenerator::Hellinger];

    pub fn name(self) -> &'static str {
        match self {
            FGenerator::Kl => "kl",
            FGenerator::ChiSquared => "chi2",
            FGenerator::Hellinger => "hellinger",
        }
    }

    pub fn value(self, u: f64) -> f64 {
        match self {
            FGenerator::Kl if u == 0.0 => LOG2_E,
            FGenerator::Kl => u * u.log2() - (u - 1.0) * LOG2_E,
            FGenerator::ChiSquared => (u - 1.0) * (u - 1.0),
            FGenerator::Hellinger => {
                let s = u.sqrt() - 1.0;
                s * s
            }
        }
    }

    pub fn derivative(self, u: f64) -> f64 {
        match self {
            FGenerator::Kl => u.log2(),
            FGenerator::ChiSquared => 2.0 * (u - 1.0),
            FGenerator::Hellinger => 1.0 - 1.0 / u.sqrt(),
        }
    }

    /// `(f′)⁻¹(y)` on `[0, ∞)`: clamps to 0 below the range of `f′` and
    /// returns `∞` above it.
    pub fn inverse_derivative(self, y: f64) -> f64 {
        match self {
            FGenerator::Kl => y.exp2(),
            FGenerator::ChiSquared => (0.5 * y + 1.0).max(0.0),
            FGenerator::Hellinger if y >= 1.0 => f64::INFINITY,
            FGenerator::Hellinger => 1.0 / ((1.0 - y) * (1.0 - y)),
        }
    }
}

impl std::str::FromStr for FGenerator {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "kl" => Ok(FGenerator::Kl),
            "chi2" => Ok(FGenerator::ChiSquared),
            "hellinger" => Ok(FGenerator::Hellinger),
            other => Err(format!("unknown f-generator `{other}` (expected kl, chi2 or hellinger)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelStats {
    pub h: f64,
    pub w_p: f64,
    pub w_q: f64,
    /// `W_P(h) = E_P[r ∧ h]`.
    pub big_w_p: f64,
    pub s_p: f64,
    /// Set when computed by numerical evaluation rather than summation.
    pub approximate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DivergenceReport {
    pub kl_bits: f64,
    pub d_inf_bits: f64,
    pub generator: FGenerator,
    pub d_f: f64,
}

/// A pair over a finite alphabet.
///
/// Atoms with `p = q = 0` are dropped at construction; [`FinitePair::support`]
/// maps the remaining atoms back to their input positions.
#[derive(Debug, Clone, PartialEq)]
pub struct FinitePair {
    p: Vec<f64>,
    q: Vec<f64>,
    ratio: Vec<f64>,
    cdf: Vec<f64>,
    support: Vec<usize>,
    /// Distinct positive ratio values, ascending.
    levels: Vec<f64>,
    normalized: bool,
}

impl FinitePair {
    pub fn new(p: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        Self::build(p, q, true)
    }

    /// A pair whose target weights `q̃ ∝ q` have an unknown normalizer.
    pub fn unnormalized(p: Vec<f64>, q_weights: Vec<f64>) -> Result<Self> {
        Self::build(p, q_weights, false)
    }

    fn build(p: Vec<f64>, q: Vec<f64>, normalized: bool) -> Result<Self> {
        let invalid = |field: &str, reason: String| Error::InvalidDistribution {
            field: field.to_owned(),
            reason,
        };
        if p.is_empty() {
            return Err(invalid("p", "alphabet is empty".into()));
        }
        if p.len() != q.len() {
            return Err(invalid(
                "q",
                format!("length {} differs from p length {}", q.len(), p.len()),
            ));
        }
        for (name, xs) in [("p", &p), ("q", &q)] {
            if let Some(i) = xs.iter().position(|v| !v.is_finite() || *v < 0.0) {
                return Err(invalid(name, format!("entry {i} = {} is not a finite mass ≥ 0", xs[i])));
            }
        }
        let p_sum: f64 = p.iter().sum();
        if (p_sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(invalid("p", format!("sums to {p_sum}, not 1")));
        }
        let q_sum: f64 = q.iter().sum();
        if normalized && (q_sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(invalid("q", format!("sums to {q_sum}, not 1")));
        }
        if !normalized && q_sum <= 0.0 {
            return Err(invalid("q", "weights have zero total".into()));
        }
        if let Some(i) = (0..p.len()).find(|&i| p[i] == 0.0 && q[i] > 0.0) {
            return Err(Error::NotAbsolutelyContinuous { index: i, q: q[i] });
        }

        let support: Vec<usize> = (0..p.len()).filter(|&i| p[i] > 0.0).collect();
        let q_scale = if normalized { q_sum } else { 1.0 };
        let p: Vec<f64> = support.iter().map(|&i| p[i] / p_sum).collect();
        let q: Vec<f64> = support.iter().map(|&i| q[i] / q_scale).collect();
        let ratio: Vec<f64> = q.iter().zip(&p).map(|(q, p)| q / p).collect();
        let mut acc = 0.0;
        let cdf = p
            .iter()
            .map(|pi| {
                acc += pi;
                acc
            })
            .collect();
        let mut levels: Vec<f64> = ratio.iter().copied().filter(|r| *r > 0.0).collect();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        if levels.is_empty() {
            return Err(invalid("q", "target has no mass on the proposal support".into()));
        }
        Ok(Self {
            p,
            q,
            ratio,
            cdf,
            support,
            levels,
            normalized,
        })
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    /// Target masses (or weights, for unnormalized pairs).
    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn ratios(&self) -> &[f64] {
        &self.ratio
    }

    /// Input position of each retained atom.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Q-essential infimum of `r` (smallest ratio on Q's support).
    pub fn q_essential_infimum(&self) -> f64 {
        self.levels[0]
    }

    /// `P[r > 0]`, the proposal mass of the target support.
    pub fn proposal_mass_on_target(&self) -> f64 {
        self.p
            .iter()
            .zip(&self.ratio)
            .filter(|(_, r)| **r > 0.0)
            .map(|(p, _)| p)
            .sum()
    }

    fn require_normalized(&self, what: &'static str) -> Result<()> {
        if self.normalized {
            Ok(())
        } else {
            Err(Error::NormalizerUnknown(what))
        }
    }

    pub fn divergence_report(&self, f: FGenerator) -> Result<DivergenceReport> {
        self.require_normalized("divergence_report")?;
        let kl_bits = self
            .q
            .iter()
            .zip(&self.ratio)
            .filter(|(q, _)| **q > 0.0)
            .map(|(q, r)| q * r.log2())
            .sum();
        let d_f = self.p.iter().zip(&self.ratio).map(|(p, r)| p * f.value(*r)).sum();
        Ok(DivergenceReport {
            kl_bits,
            d_inf_bits: self.sup_ratio().log2(),
            generator: f,
            d_f,
        })
    }

    /// `S_P` at a level, by direct summation of `E_P[(r − h)₊]` written as
    /// `1 − Σ_{r<h} q − h·Σ_{r≥h} p`.
    fn survival(&self, h: f64) -> f64 {
        1.0 - self.wedge(h)
    }

    fn wedge(&self, h: f64) -> f64 {
        self.p
            .iter()
            .zip(&self.q)
            .zip(&self.ratio)
            .map(|((p, q), r)| if *r < h { *q } else { h * p })
            .sum()
    }
}

impl RatioModel for FinitePair {
    type Point = usize;

    fn ratio(&self, x: usize) -> f64 {
        self.ratio[x]
    }

    fn sup_ratio(&self) -> f64 {
        *self.levels.last().expect("levels are non-empty")
    }

    fn sample_proposal<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.cdf.partition_point(|c| *c <= u).min(self.p.len() - 1)
    }
}

impl LevelSets for FinitePair {
    fn level_stats(&self, h: f64) -> Result<LevelStats> {
        self.require_normalized("level_stats")?;
        if !(h >= 0.0) {
            return Err(domain("h", h, "[0, ∞)"));
        }
        let (mut w_p, mut w_q) = (0.0, 0.0);
        for ((p, q), r) in self.p.iter().zip(&self.q).zip(&self.ratio) {
            if *r >= h {
                w_p += p;
                w_q += q;
            }
        }
        let big_w_p = self.wedge(h);
        Ok(LevelStats {
            h,
            w_p,
            w_q,
            big_w_p,
            s_p: 1.0 - big_w_p,
            approximate: false,
        })
    }

    fn is_exact(&self) -> bool {
        true
    }

    /// Exact: `S_P` is linear between consecutive ratio values.
    fn s_p_inverse(&self, eps: f64) -> Result<f64> {
        self.require_normalized("s_p_inverse")?;
        check_unit("eps", eps)?;
        if eps >= 1.0 {
            return Ok(0.0);
        }
        if eps == 0.0 {
            return Ok(self.sup_ratio());
        }
        let mut left = 0.0;
        let mut s_left = 1.0;
        for &t in &self.levels {
            let s_t = self.survival(t);
            if s_t <= eps {
                let slope = self.level_stats(t)?.w_p;
                let h = left + (s_left - eps) / slope;
                return Ok(h.clamp(left, t));
            }
            left = t;
            s_left = s_t;
        }
        Ok(self.sup_ratio())
    }

    fn phi_range(&self) -> Result<(f64, f64)> {
        self.require_normalized("phi_range")?;
        Ok((1.0 / self.proposal_mass_on_target(), self.sup_ratio()))
    }

    /// Exact: on each segment `(t_{j−1}, t_j]` between ratio values,
    /// `W_P(h) = B·h + A` with `B = w_P(t_j)` and `A = Σ_{r<t_j} q`, so
    /// `φ(h) = m` solves to `h = m·A / (1 − m·B)`. Values at the floor of the
    /// range return the Q-essential infimum of `r`, the right end of the
    /// region where `φ` is constant.
    fn phi_inverse(&self, m_tilde: f64) -> Result<f64> {
        let (lo, hi) = self.phi_range()?;
        check_phi_range(m_tilde, lo, hi)?;
        if m_tilde <= lo {
            return Ok(self.q_essential_infimum());
        }
        if m_tilde >= hi {
            return Ok(hi);
        }
        let mut left = self.levels[0];
        for &t in &self.levels[1..] {
            if self.phi(t)? >= m_tilde {
                let stats = self.level_stats(t)?;
                let b = stats.w_p;
                let a = 1.0 - stats.w_q;
                let h = m_tilde * a / (1.0 - m_tilde * b);
                return Ok(h.clamp(left, t));
            }
            left = t;
        }
        Ok(hi)
    }
}

/// Location/scale of a univariate normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub mu: f64,
    pub sigma: f64,
}

impl Gaussian {
    fn cdf(&self, x: f64) -> f64 {
        if x == f64::INFINITY {
            return 1.0;
        }
        if x == f64::NEG_INFINITY {
            return 0.0;
        }
        0.5 * erfc(-(x - self.mu) / (self.sigma * std::f64::consts::SQRT_2))
    }

    fn mass(&self, set: LevelSet) -> f64 {
        match set {
            LevelSet::Empty => 0.0,
            LevelSet::All => 1.0,
            LevelSet::Interval(a, b) => (self.cdf(b) - self.cdf(a)).max(0.0),
            LevelSet::Outside(a, b) => (1.0 - (self.cdf(b) - self.cdf(a))).clamp(0.0, 1.0),
        }
    }
}

/// `{x : r(x) ≥ h}` for a Gaussian pair; half-lines use infinite endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
enum LevelSet {
    Empty,
    All,
    Interval(f64, f64),
    Outside(f64, f64),
}

/// Target `N(μ_q, σ_q²)` against proposal `N(μ_p, σ_p²)`.
///
/// `ln r(x) = a·x² + b·x + c` is quadratic, so every level set is an interval,
/// the complement of one, or a half-line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPair {
    q: Gaussian,
    p: Gaussian,
    a: f64,
    b: f64,
    c: f64,
}

impl GaussianPair {
    pub fn new(q: Gaussian, p: Gaussian) -> Result<Self> {
        for (field, g) in [("q", q), ("p", p)] {
            if !(g.sigma > 0.0 && g.sigma.is_finite()) {
                return Err(Error::InvalidDistribution {
                    field: format!("{field}.sigma"),
                    reason: format!("{} is not a positive scale", g.sigma),
                });
            }
            if !g.mu.is_finite() {
                return Err(Error::InvalidDistribution {
                    field: format!("{field}.mu"),
                    reason: format!("{} is not finite", g.mu),
                });
            }
        }
        let (vq, vp) = (q.sigma * q.sigma, p.sigma * p.sigma);
        Ok(Self {
            q,
            p,
            a: 0.5 / vp - 0.5 / vq,
            b: q.mu / vq - p.mu / vp,
            c: (p.sigma / q.sigma).ln() - 0.5 * q.mu * q.mu / vq + 0.5 * p.mu * p.mu / vp,
        })
    }

    pub fn target(&self) -> Gaussian {
        self.q
    }

    pub fn proposal(&self) -> Gaussian {
        self.p
    }

    pub fn kl_bits(&self) -> f64 {
        let (q, p) = (self.q, self.p);
        let d = q.mu - p.mu;
        let nats = (p.sigma / q.sigma).ln() + (q.sigma * q.sigma + d * d) / (2.0 * p.sigma * p.sigma) - 0.5;
        nats * LOG2_E
    }

    fn log_sup(&self) -> f64 {
        if self.a < 0.0 {
            self.c - self.b * self.b / (4.0 * self.a)
        } else if self.a == 0.0 && self.b == 0.0 {
            self.c
        } else {
            f64::INFINITY
        }
    }

    /// Closed-form `D_f` for the shipped generators.
    pub fn d_f(&self, f: FGenerator) -> f64 {
        let (q, p) = (self.q, self.p);
        let (vq, vp) = (q.sigma * q.sigma, p.sigma * p.sigma);
        let d2 = (q.mu - p.mu) * (q.mu - p.mu);
        match f {
            FGenerator::Kl => self.kl_bits(),
            FGenerator::ChiSquared => {
                let k = 2.0 * vp - vq;
                if k <= 0.0 {
                    f64::INFINITY
                } else {
                    vp / (q.sigma * k.sqrt()) * (d2 / k).exp() - 1.0
                }
            }
            FGenerator::Hellinger => {
                let bc = (2.0 * q.sigma * p.sigma / (vq + vp)).sqrt() * (-d2 / (4.0 * (vq + vp))).exp();
                2.0 * (1.0 - bc)
            }
        }
    }

    pub fn divergence_report(&self, f: FGenerator) -> DivergenceReport {
        DivergenceReport {
            kl_bits: self.kl_bits(),
            d_inf_bits: self.log_sup() * LOG2_E,
            generator: f,
            d_f: self.d_f(f),
        }
    }

    fn level_set(&self, h: f64) -> LevelSet {
        if h == 0.0 {
            return LevelSet::All;
        }
        let c = self.c - h.ln();
        let (a, b) = (self.a, self.b);
        if a == 0.0 {
            return match b {
                b if b > 0.0 => LevelSet::Interval(-c / b, f64::INFINITY),
                b if b < 0.0 => LevelSet::Interval(f64::NEG_INFINITY, -c / b),
                _ if c >= 0.0 => LevelSet::All,
                _ => LevelSet::Empty,
            };
        }
        let disc = b * b - 4.0 * a * c;
        if disc <= 0.0 {
            return if a < 0.0 { LevelSet::Empty } else { LevelSet::All };
        }
        let s = disc.sqrt();
        let (x1, x2) = ((-b - s) / (2.0 * a), (-b + s) / (2.0 * a));
        let (lo, hi) = if x1 < x2 { (x1, x2) } else { (x2, x1) };
        if a < 0.0 {
            LevelSet::Interval(lo, hi)
        } else {
            LevelSet::Outside(lo, hi)
        }
    }

    /// Density of the proposal, used by quadrature checks.
    pub fn proposal_density(&self, x: f64) -> f64 {
        let z = (x - self.p.mu) / self.p.sigma;
        (-0.5 * z * z).exp() / (self.p.sigma * (2.0 * std::f64::consts::PI).sqrt())
    }
}

impl RatioModel for GaussianPair {
    type Point = f64;

    fn ratio(&self, x: f64) -> f64 {
        self.log_ratio(x).exp()
    }

    fn log_ratio(&self, x: f64) -> f64 {
        let (q, p) = (self.q, self.p);
        let zq = (x - q.mu) / q.sigma;
        let zp = (x - p.mu) / p.sigma;
        (p.sigma / q.sigma).ln() - 0.5 * zq * zq + 0.5 * zp * zp
    }

    fn sup_ratio(&self) -> f64 {
        self.log_sup().exp()
    }

    fn sample_proposal<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        Normal::new(self.p.mu, self.p.sigma)
            .expect("validated scale")
            .sample(rng)
    }
}

impl LevelSets for GaussianPair {
    fn level_stats(&self, h: f64) -> Result<LevelStats> {
        if !(h >= 0.0) {
            return Err(domain("h", h, "[0, ∞)"));
        }
        let set = self.level_set(h);
        let w_p = self.p.mass(set);
        let w_q = self.q.mass(set);
        let s_p = (w_q - h * w_p).max(0.0);
        Ok(LevelStats {
            h,
            w_p,
            w_q,
            big_w_p: 1.0 - s_p,
            s_p,
            approximate: true,
        })
    }

    fn is_exact(&self) -> bool {
        false
    }

    fn phi_range(&self) -> Result<(f64, f64)> {
        Ok((1.0, self.sup_ratio()))
    }
}

/// Either kind of pair, as read from a distribution-spec file.
#[derive(Debug, Clone, PartialEq)]
pub enum PairedDistribution {
    Finite(FinitePair),
    Gaussian(GaussianPair),
}

impl PairedDistribution {
    pub fn divergence_report(&self, f: FGenerator) -> Result<DivergenceReport> {
        match self {
            PairedDistribution::Finite(pair) => pair.divergence_report(f),
            PairedDistribution::Gaussian(pair) => Ok(pair.divergence_report(f)),
        }
    }

    pub fn level_stats(&self, h: f64) -> Result<LevelStats> {
        match self {
            PairedDistribution::Finite(pair) => pair.level_stats(h),
            PairedDistribution::Gaussian(pair) => pair.level_stats(h),
        }
    }

    pub fn s_p_inverse(&self, eps: f64) -> Result<f64> {
        match self {
            PairedDistribution::Finite(pair) => pair.s_p_inverse(eps),
            PairedDistribution::Gaussian(pair) => pair.s_p_inverse(eps),
        }
    }

    pub fn phi_inverse(&self, m_tilde: f64) -> Result<f64> {
        match self {
            PairedDistribution::Finite(pair) => pair.phi_inverse(m_tilde),
            PairedDistribution::Gaussian(pair) => pair.phi_inverse(m_tilde),
        }
    }

    pub fn sup_ratio(&self) -> f64 {
        match self {
            PairedDistribution::Finite(pair) => pair.sup_ratio(),
            PairedDistribution::Gaussian(pair) => pair.sup_ratio(),
        }
    }

    pub fn as_finite(&self) -> Option<&FinitePair> {
        match self {
            PairedDistribution::Finite(pair) => Some(pair),
            PairedDistribution::Gaussian(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn tp() -> FinitePair {
        FinitePair::new(vec![0.5, 0.5], vec![0.1, 0.9]).unwrap()
    }

    #[test]
    fn identical_pair_reports_zero() {
        let pair = FinitePair::new(vec![0.2, 0.3, 0.5], vec![0.2, 0.3, 0.5]).unwrap();
        for f in FGenerator::ALL {
            let rep = pair.divergence_report(f).unwrap();
            assert_eq!((rep.kl_bits, rep.d_inf_bits, rep.d_f), (0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn two_point_divergences() {
        let rep = tp().divergence_report(FGenerator::Kl).unwrap();
        // 0.1·log₂0.2 + 0.9·log₂1.8
        let kl = 0.1 * 0.2f64.log2() + 0.9 * 1.8f64.log2();
        assert_abs_diff_eq!(rep.kl_bits, kl, epsilon = 1e-15);
        assert_abs_diff_eq!(rep.kl_bits, 0.5310, epsilon = 5e-5);
        assert_abs_diff_eq!(rep.d_inf_bits, 0.8480, epsilon = 5e-5);
        assert_abs_diff_eq!(rep.d_f, rep.kl_bits, epsilon = 1e-15);
    }

    #[test]
    fn gaussian_kl_closed_form() {
        let pair = GaussianPair::new(Gaussian { mu: 0.5, sigma: 0.5 }, Gaussian { mu: 0.0, sigma: 1.0 }).unwrap();
        let kl = pair.kl_bits();
        assert_abs_diff_eq!(kl / LOG2_E, 0.4431, epsilon = 5e-5);
        assert_abs_diff_eq!(kl, 0.6393, epsilon = 5e-5);
        // quadrature of E_Q[log₂ r]
        let qd = Gaussian { mu: 0.5, sigma: 0.5 };
        let dens = |x: f64| {
            let z = (x - qd.mu) / qd.sigma;
            (-0.5 * z * z).exp() / (qd.sigma * (2.0 * std::f64::consts::PI).sqrt())
        };
        let quad = simpson(-10.0, 10.0, 200_000, |x| dens(x) * pair.log_ratio(x) * LOG2_E);
        assert_abs_diff_eq!(kl, quad, epsilon = 1e-9);
        assert!(pair.sup_ratio().is_finite());
    }

    fn simpson(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn gaussian_divergences_match_quadrature() {
        let pair = GaussianPair::new(Gaussian { mu: 0.5, sigma: 0.7 }, Gaussian { mu: -0.2, sigma: 1.1 }).unwrap();
        for f in FGenerator::ALL {
            let quad = simpson(-30.0, 30.0, 400_000, |x| pair.proposal_density(x) * f.value(pair.ratio(x)));
            assert_abs_diff_eq!(pair.d_f(f), quad, epsilon = 1e-9);
        }
        let mass = simpson(-30.0, 30.0, 400_000, |x| pair.proposal_density(x) * pair.ratio(x));
        assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-9);
        // the maximum of r is attained on the quadratic's vertex
        let grid_max = (0..200_001).map(|i| pair.ratio(-10.0 + i as f64 * 1e-4)).fold(0.0, f64::max);
        assert_abs_diff_eq!(pair.sup_ratio(), grid_max, epsilon = 1e-7);
    }

    #[test]
    fn gaussian_sup_finite_iff_narrower_target() {
        let wide = GaussianPair::new(Gaussian { mu: 0.0, sigma: 2.0 }, Gaussian { mu: 0.0, sigma: 1.0 }).unwrap();
        assert!(wide.sup_ratio().is_infinite());
        let shifted = GaussianPair::new(Gaussian { mu: 1.0, sigma: 1.0 }, Gaussian { mu: 0.0, sigma: 1.0 }).unwrap();
        assert!(shifted.sup_ratio().is_infinite());
        let same = GaussianPair::new(Gaussian { mu: 0.0, sigma: 1.0 }, Gaussian { mu: 0.0, sigma: 1.0 }).unwrap();
        assert_eq!(same.sup_ratio(), 1.0);
    }

    #[test]
    fn gaussian_level_stats_match_quadrature() {
        for (q, p) in [
            (Gaussian { mu: 0.5, sigma: 0.5 }, Gaussian { mu: 0.0, sigma: 1.0 }),
            (Gaussian { mu: 0.3, sigma: 1.5 }, Gaussian { mu: 0.0, sigma: 1.0 }),
            (Gaussian { mu: 1.0, sigma: 1.0 }, Gaussian { mu: 0.0, sigma: 1.0 }),
        ] {
            let pair = GaussianPair::new(q, p).unwrap();
            for h in [0.3, 0.9, 1.4, 2.5] {
                let st = pair.level_stats(h).unwrap();
                let quad_w = simpson(-30.0, 30.0, 600_000, |x| pair.proposal_density(x) * pair.ratio(x).min(h));
                assert_abs_diff_eq!(st.big_w_p, quad_w, epsilon = 1e-6);
                assert!(st.approximate);
            }
        }
    }

    #[test]
    fn level_stats_examples() {
        let st = tp().level_stats(1.0).unwrap();
        assert_abs_diff_eq!(st.w_p, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(st.w_q, 0.9, epsilon = 1e-15);
        assert_abs_diff_eq!(st.big_w_p, 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(st.s_p, 0.4, epsilon = 1e-15);

        let z = tp().level_stats(0.0).unwrap();
        assert_eq!((z.w_p, z.w_q, z.big_w_p, z.s_p), (1.0, 1.0, 0.0, 1.0));

        let top = tp().level_stats(1.8).unwrap();
        assert_abs_diff_eq!(top.big_w_p, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(top.s_p, 0.0, epsilon = 1e-15);
        assert!(tp().level_stats(-0.1).is_err());
    }

    #[test]
    fn identity_holds_at_atoms() {
        let pair = tp();
        for &h in pair.ratios() {
            let st = pair.level_stats(h).unwrap();
            assert_abs_diff_eq!(st.s_p, st.w_q - h * st.w_p, epsilon = 1e-15);
        }
    }

    #[test]
    fn s_p_inverse_examples() {
        let pair = tp();
        assert_abs_diff_eq!(pair.s_p_inverse(0.4).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(pair.s_p_inverse(1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(pair.s_p_inverse(0.0667).unwrap(), (0.9 - 0.0667) / 0.5, epsilon = 1e-12);
        assert_eq!(pair.s_p_inverse(0.0).unwrap(), 1.8);
        assert!(pair.s_p_inverse(1.5).is_err());
        assert!(pair.s_p_inverse(-0.1).is_err());
    }

    #[test]
    fn phi_inverse_examples() {
        let pair = tp();
        assert_abs_diff_eq!(pair.phi_inverse(1.0 / 0.6).unwrap(), 1.0, epsilon = 1e-10);
        assert_eq!(pair.phi_inverse(1.8).unwrap(), 1.8);
        assert_abs_diff_eq!(pair.phi_inverse(1.0).unwrap(), 0.2, epsilon = 1e-12);
        match pair.phi_inverse(2.5) {
            Err(Error::OutOfRange { lo, hi, .. }) => assert_eq!((lo, hi), (1.0, 1.8)),
            other => panic!("expected out-of-range, got {other:?}"),
        }
        assert!(pair.phi_inverse(0.5).is_err());
    }

    #[test]
    fn gaussian_inverses_bisect() {
        let pair = GaussianPair::new(Gaussian { mu: 0.5, sigma: 0.5 }, Gaussian { mu: 0.0, sigma: 1.0 }).unwrap();
        let h = pair.s_p_inverse(0.1).unwrap();
        assert_abs_diff_eq!(pair.level_stats(h).unwrap().s_p, 0.1, epsilon = 1e-9);
        let m = pair.phi_inverse(1.5).unwrap();
        assert_abs_diff_eq!(pair.phi(m).unwrap(), 1.5, epsilon = 1e-9);
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(matches!(
            FinitePair::new(vec![0.5, 0.5, 0.0], vec![0.4, 0.4, 0.2]),
            Err(Error::NotAbsolutelyContinuous { index: 2, .. })
        ));
        assert!(FinitePair::new(vec![0.5, 0.6], vec![0.5, 0.5]).is_err());
        assert!(FinitePair::new(vec![0.5, 0.5], vec![0.5, -0.5]).is_err());
        assert!(FinitePair::new(vec![0.5, 0.5], vec![1.0]).is_err());
        assert!(GaussianPair::new(Gaussian { mu: 0.0, sigma: 0.0 }, Gaussian { mu: 0.0, sigma: 1.0 }).is_err());
    }

    #[test]
    fn degenerate_atoms_are_stripped() {
        let pair = FinitePair::new(vec![0.5, 0.0, 0.5], vec![0.1, 0.0, 0.9]).unwrap();
        assert_eq!(pair.len(), 2);
        assert_eq!(pair.support(), &[0, 2]);
    }

    #[test]
    fn unnormalized_pairs_refuse_divergences() {
        let pair = FinitePair::unnormalized(vec![0.5, 0.5], vec![1.0, 9.0]).unwrap();
        assert!(matches!(pair.divergence_report(FGenerator::Kl), Err(Error::NormalizerUnknown(_))));
        assert!(matches!(pair.level_stats(1.0), Err(Error::NormalizerUnknown(_))));
        assert_eq!(pair.sup_ratio(), 18.0);
    }

    #[test]
    fn generators_are_in_the_class() {
        let grid: Vec<f64> = (0..=400).map(|i| i as f64 * 0.025).collect();
        for f in FGenerator::ALL {
            assert!(f.value(1.0).abs() <= 1e-12, "{f:?}");
            assert!(f.derivative(1.0).abs() <= 1e-9, "{f:?}");
            for w in grid.windows(3) {
                let (a, b, c) = (w[0], w[1], w[2]);
                assert!(f.value(b) <= 0.5 * (f.value(a) + f.value(c)) + 1e-12, "{f:?} at {b}");
            }
            for w in grid[1..].windows(2) {
                assert!(f.derivative(w[1]) > f.derivative(w[0]), "{f:?}");
            }
            for &u in &grid[1..] {
                assert_abs_diff_eq!(f.inverse_derivative(f.derivative(u)), u, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn phi_is_monotone_on_tp() {
        let pair = tp();
        let grid: Vec<f64> = (1..=180).map(|i| i as f64 * 0.01).collect();
        for w in grid.windows(2) {
            let (a, b) = (pair.phi(w[0]).unwrap(), pair.phi(w[1]).unwrap());
            assert!(b >= a - 1e-15);
            if w[0] >= pair.q_essential_infimum() {
                assert!(b > a);
            }
        }
    }

    fn arb_pair() -> impl Strategy<Value = FinitePair> {
        (2usize..12).prop_flat_map(|m| {
            (
                proptest::collection::vec(0.01f64..1.0, m),
                proptest::collection::vec(0.0f64..1.0, m),
            )
                .prop_filter_map("target mass", |(p, q)| {
                    let (sp, sq): (f64, f64) = (p.iter().sum(), q.iter().sum());
                    if sq <= 0.0 {
                        return None;
                    }
                    FinitePair::new(p.iter().map(|x| x / sp).collect(), q.iter().map(|x| x / sq).collect()).ok()
                })
        })
    }

    proptest! {
        #[test]
        fn level_identity(pair in arb_pair(), h in 0.0f64..20.0) {
            let st = pair.level_stats(h).unwrap();
            prop_assert!((st.s_p - (st.w_q - h * st.w_p)).abs() <= 1e-12);
        }

        #[test]
        fn w_p_integrates_to_one(pair in arb_pair()) {
            // w_P is a step function, constant on (t_{j−1}, t_j]
            let mut left = 0.0;
            let mut total = 0.0;
            for &t in &pair.levels {
                total += (t - left) * pair.level_stats(t).unwrap().w_p;
                left = t;
            }
            prop_assert!((total - 1.0).abs() <= 1e-9);
        }

        #[test]
        fn s_p_inverse_is_smallest_level(pair in arb_pair(), eps in 0.001f64..0.999) {
            let h = pair.s_p_inverse(eps).unwrap();
            let s = pair.level_stats(h).unwrap().s_p;
            prop_assert!((s - eps).abs() <= 1e-12 || (h == 0.0 && s <= eps));
        }

        #[test]
        fn phi_inverse_round_trip(pair in arb_pair(), u in 0.0f64..1.0) {
            let (lo, hi) = pair.phi_range().unwrap();
            let m = lo + u * (hi - lo);
            let h = pair.phi_inverse(m).unwrap();
            prop_assert!((pair.phi(h).unwrap() - m).abs() <= 1e-10 * m);
        }

        #[test]
        fn f_divergence_tail_bound(pair in arb_pair(), a in 1.0f64..30.0) {
            for f in FGenerator::ALL {
                let d_f = pair.divergence_report(f).unwrap().d_f;
                let s = pair.level_stats(a).unwrap().s_p;
                let fp = f.derivative(a);
                if fp > 0.0 {
                    prop_assert!(s <= d_f / fp + 1e-12);
                } else {
                    prop_assert!(s <= 1e-12 || d_f > 0.0);
                }
            }
        }
    }
}
