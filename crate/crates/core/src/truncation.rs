//! Truncated targets `Q_M` with ratio `r_M = (r ∧ M) / W_P(M)`.
//!
//! `E_P[r ∧ M] = W_P(M)`, so `r_M` is a normalized ratio with
//! `‖r_M‖_∞ = M̃ = M / W_P(M)`. Since `W_P ≤ 1`, `r_M > r` below the cap and
//! `r_M = M̃` above it, which makes `r > r_M` exactly on `{r > M̃}` and
//! `D_TV(Q_M, Q) = E_P[(r − M̃)₊] = S_P(M̃)`.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::measures::{total_variation, FinitePair, LevelSets, RatioModel};
use crate::rng::{stream_rng, AUX_STREAM};

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedTarget<B = FinitePair> {
    base: B,
    m: f64,
    w_p_at_m: f64,
    m_tilde: f64,
    tv_to_target: Option<f64>,
}

/// Truncates `base` at level `m`. Levels at or above `‖r‖_∞` return the
/// untruncated target.
pub fn truncate<B: LevelSets + Clone>(base: &B, m: f64) -> Result<TruncatedTarget<B>> {
    if !(m > 0.0) {
        return Err(domain("M", m, "(0, ∞)"));
    }
    let sup = base.sup_ratio();
    let (m, w_p_at_m, m_tilde) = if m >= sup {
        (sup, 1.0, sup)
    } else {
        let w = base.level_stats(m)?.big_w_p;
        (m, w, m / w)
    };
    let tv_to_target = if base.is_exact() {
        Some(if m_tilde >= sup { 0.0 } else { base.level_stats(m_tilde)?.s_p })
    } else {
        None
    };
    Ok(TruncatedTarget {
        base: base.clone(),
        m,
        w_p_at_m,
        m_tilde,
        tv_to_target,
    })
}

impl<B> TruncatedTarget<B> {
    pub fn base(&self) -> &B {
        &self.base
    }

    /// Truncation level `M` (capped at `‖r‖_∞`).
    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn w_p_at_m(&self) -> f64 {
        self.w_p_at_m
    }

    /// `M̃ = M / W_P(M) = ‖r_M‖_∞`.
    pub fn m_tilde(&self) -> f64 {
        self.m_tilde
    }

    /// `D_TV(Q_M, Q) = S_P(M̃)`; `None` for pairs without exact level sets.
    pub fn tv_to_target(&self) -> Option<f64> {
        self.tv_to_target
    }
}

impl TruncatedTarget<FinitePair> {
    pub fn truncated_ratios(&self) -> Vec<f64> {
        self.base.ratios().iter().map(|r| r.min(self.m) / self.w_p_at_m).collect()
    }

    /// `q_M[i] = p[i]·r_M(i)`.
    pub fn masses(&self) -> Vec<f64> {
        self.base
            .p()
            .iter()
            .zip(self.truncated_ratios())
            .map(|(p, r)| p * r)
            .collect()
    }

    /// `D_TV(Q_M, Q)` by half-L1 summation.
    pub fn tv_direct(&self) -> f64 {
        total_variation(&self.masses(), self.base.q())
    }
}

impl<B: RatioModel> RatioModel for TruncatedTarget<B> {
    type Point = B::Point;

    fn ratio(&self, x: B::Point) -> f64 {
        self.base.ratio(x).min(self.m) / self.w_p_at_m
    }

    fn log_ratio(&self, x: B::Point) -> f64 {
        self.base.log_ratio(x).min(self.m.ln()) - self.w_p_at_m.ln()
    }

    fn sup_ratio(&self) -> f64 {
        self.m_tilde
    }

    fn sample_proposal<R: Rng + ?Sized>(&self, rng: &mut R) -> B::Point {
        self.base.sample_proposal(rng)
    }
}

/// Truncation with the smallest `M̃` whose error is at most `eps`:
/// `M̃ = S_P⁻¹(eps)`, `M = φ⁻¹(M̃)`.
///
/// When `S_P⁻¹(eps)` lies below the range of `φ` (loose tolerances) the
/// floor of that range is used; every `M` up to the Q-essential infimum of
/// `r` gives the same `Q_M` there.
pub fn optimal_truncation(pair: &FinitePair, eps: f64) -> Result<TruncatedTarget> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(domain("eps", eps, "[0, 1]"));
    }
    if eps == 0.0 {
        return truncate(pair, pair.sup_ratio());
    }
    let (lo, hi) = pair.phi_range()?;
    let m_tilde = pair.s_p_inverse(eps)?.clamp(lo, hi);
    truncate(pair, pair.phi_inverse(m_tilde)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParetoReport {
    pub eps: f64,
    /// `S_P⁻¹(eps)`, the lower bound on `exp₂ D_∞(Q′‖P)` over the TV ball.
    pub floor: f64,
    pub trials: u64,
    pub admissible: u64,
    pub violations: u64,
    /// Smallest `exp₂ D_∞(Q′‖P)` among admissible perturbations.
    pub min_found: f64,
    /// `exp₂ D_∞(Q_M‖P)` of [`optimal_truncation`].
    pub truncation_value: f64,
}

/// Tolerance on the floor in [`pareto_check`].
pub const PARETO_SLACK: f64 = 1e-9;

/// Randomized spot check that no `Q′` with `D_TV(Q′, Q) ≤ eps` has
/// `exp₂ D_∞(Q′‖P) < S_P⁻¹(eps)`.
///
/// Trials cycle through three perturbation families: mixtures with a flat
/// Dirichlet draw, mixtures with a sparse Dirichlet draw, and water-filling
/// moves that shave mass `δ ≤ eps` off the highest-ratio atoms and hand it to
/// the low-ratio ones. This is a statistical test, not a proof.
pub fn pareto_check(pair: &FinitePair, eps: f64, trials: u64, seed: u64) -> Result<ParetoReport> {
    let floor = pair.s_p_inverse(eps)?;
    let truncation_value = optimal_truncation(pair, eps)?
        .truncated_ratios()
        .into_iter()
        .fold(0.0, f64::max);
    let q = pair.q();
    let sup = |law: &[f64]| law.iter().zip(pair.p()).map(|(a, p)| a / p).fold(0.0, f64::max);

    let outcomes: Vec<Option<f64>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream_rng(seed, trial, AUX_STREAM);
            let cand = match trial % 3 {
                0 => dirichlet_mixture(q, eps, 1.0, &mut rng),
                1 => dirichlet_mixture(q, eps, 0.2, &mut rng),
                _ => water_fill(pair, eps, &mut rng),
            };
            (total_variation(&cand, q) <= eps).then(|| sup(&cand))
        })
        .collect();

    let admissible: Vec<f64> = outcomes.into_iter().flatten().collect();
    Ok(ParetoReport {
        eps,
        floor,
        trials,
        admissible: admissible.len() as u64,
        violations: admissible.iter().filter(|v| **v < floor - PARETO_SLACK).count() as u64,
        min_found: admissible.iter().copied().fold(f64::INFINITY, f64::min),
        truncation_value,
    })
}

fn dirichlet(m: usize, alpha: f64, rng: &mut impl Rng) -> Vec<f64> {
    let gamma = Gamma::new(alpha, 1.0).expect("positive shape");
    let mut g: Vec<f64> = (0..m).map(|_| gamma.sample(rng).max(1e-300)).collect();
    let total: f64 = g.iter().sum();
    g.iter_mut().for_each(|x| *x /= total);
    g
}

/// `(1 − t)·Q + t·D` with `t` scaled so the TV to `Q` is at most `eps`.
fn dirichlet_mixture(q: &[f64], eps: f64, alpha: f64, rng: &mut impl Rng) -> Vec<f64> {
    let d = dirichlet(q.len(), alpha, rng);
    let tv = total_variation(&d, q);
    let u: f64 = rng.random();
    let t = if tv > 0.0 { u * (eps / tv).min(1.0) } else { 0.0 };
    q.iter().zip(&d).map(|(a, b)| (1.0 - t) * a + t * b).collect()
}

fn water_fill(pair: &FinitePair, eps: f64, rng: &mut impl Rng) -> Vec<f64> {
    let u: f64 = rng.random();
    let delta = eps * u.powf(0.25);
    let cap = pair.s_p_inverse(delta).unwrap_or(pair.sup_ratio());
    let (p, r) = (pair.p(), pair.ratios());
    let mut out: Vec<f64> = pair.q().iter().zip(p).map(|(q, p)| q.min(cap * p)).collect();
    let removed = 1.0 - out.iter().sum::<f64>();
    let weights = dirichlet(p.len(), 1.0, rng);
    let mut recv: Vec<f64> = (0..p.len()).map(|i| if r[i] < cap { p[i] * weights[i] } else { 0.0 }).collect();
    if recv.iter().sum::<f64>() == 0.0 {
        recv = p.to_vec();
    }
    let total: f64 = recv.iter().sum();
    for (o, w) in out.iter_mut().zip(recv) {
        *o += removed * w / total;
    }
    out
}
