//! Closed-form sample-complexity, tail, importance-sampling and index-entropy
//! bounds. Everything is in bits; KL enters through `(f′)⁻¹(y) = 2^y`.

use std::fmt;
use std::io::Write;

use serde::Serialize;

use crate::error::{domain, Result};
use crate::measures::{FGenerator, FinitePair, LevelSets, RatioModel};
use crate::INDEX_CONSTANT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    Count,
    Bits,
    Probability,
    Real,
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Unit::Count => "count",
            Unit::Bits => "bits",
            Unit::Probability => "probability",
            Unit::Real => "real",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub params: Vec<(String, f64)>,
    pub value: f64,
    /// Set for counts.
    pub ceiling: Option<f64>,
    pub unit: Unit,
}

impl BoundReport {
    fn new(name: &str, params: &[(&str, f64)], value: f64, unit: Unit) -> Self {
        Self {
            name: name.to_owned(),
            params: params.iter().map(|(k, v)| ((*k).to_owned(), *v)).collect(),
            value,
            ceiling: (unit == Unit::Count).then(|| value.ceil()),
            unit,
        }
    }

    pub fn params_string(&self) -> String {
        self.params
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// Writes reports as CSV with columns `name,params,value,ceiling,unit`.
pub fn write_reports<W: Write>(reports: &[BoundReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["name", "params", "value", "ceiling", "unit"])?;
    for r in reports {
        w.write_record([
            r.name.clone(),
            r.params_string(),
            r.value.to_string(),
            r.ceiling.map(|c| c.to_string()).unwrap_or_default(),
            r.unit.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn check_open_unit(name: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(domain(name, x, "(0, 1)"))
    }
}

fn check_nonneg(name: &'static str, x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(domain(name, x, "[0, ∞)"))
    }
}

fn check_probability(name: &'static str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(domain(name, x, "[0, 1]"))
    }
}

/// Rejection-sampler budget `max{(2/(1−ε))·ln(2/ε)·(f′)⁻¹(4D_f/ε), 2}`.
pub fn bp_complexity(d_f: f64, f: FGenerator, eps: f64) -> Result<BoundReport> {
    check_open_unit("eps", eps)?;
    check_nonneg("D_f", d_f)?;
    let k = (2.0 / (1.0 - eps) * (2.0 / eps).ln() * f.inverse_derivative(4.0 * d_f / eps)).max(2.0);
    Ok(BoundReport::new("bp_complexity", &[("D_f", d_f), ("eps", eps)], k, Unit::Count))
}

/// Budget `ln(1/((1−γ)ε))·(f′)⁻¹(D_f/(γε))` for truncated rejection.
pub fn improved_complexity(d_f: f64, f: FGenerator, eps: f64, gamma: f64) -> Result<BoundReport> {
    check_open_unit("eps", eps)?;
    check_open_unit("gamma", gamma)?;
    check_nonneg("D_f", d_f)?;
    let k = (1.0 / ((1.0 - gamma) * eps)).ln() * f.inverse_derivative(d_f / (gamma * eps));
    Ok(BoundReport::new(
        "improved_complexity",
        &[("D_f", d_f), ("eps", eps), ("gamma", gamma)],
        k,
        Unit::Count,
    ))
}

/// Depth `2^{(D_KL + c)/ε}` after which depth-limited A* is ε-close.
pub fn depth_limited_complexity(d_kl: f64, eps: f64) -> Result<BoundReport> {
    check_open_unit("eps", eps)?;
    check_nonneg("D_KL", d_kl)?;
    let k = ((d_kl + INDEX_CONSTANT) / eps).exp2();
    Ok(BoundReport::new(
        "depth_limited_complexity",
        &[("D_KL", d_kl), ("eps", eps)],
        k,
        Unit::Count,
    ))
}

/// Markov bound `P[N > k] ≤ (D_KL + c)/log₂k`, clamped to `[0, 1]`.
///
/// `k` is a count carried as `f64` so depths beyond `u64` stay representable.
pub fn index_tail_bound(d_kl: f64, k: f64) -> Result<BoundReport> {
    if !(k >= 2.0) {
        return Err(domain("k", k, "[2, ∞)"));
    }
    check_nonneg("D_KL", d_kl)?;
    let v = ((d_kl + INDEX_CONSTANT) / k.log2()).clamp(0.0, 1.0);
    Ok(BoundReport::new(
        "index_tail_bound",
        &[("D_KL", d_kl), ("k", k)],
        v,
        Unit::Probability,
    ))
}

/// High-probability form of the importance-sampling bound at `n = 2^{L+t}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CdOriginal {
    /// `(2^{−t/2} + 2√tail)^{1/2}`.
    pub epsilon: f64,
    /// `P[|I_n − I| ≥ 2‖φ‖ε/(1−ε)] ≤ 2ε`.
    pub failure_probability: f64,
    /// Multiply by `‖φ‖` for the deviation threshold.
    pub deviation_factor: f64,
}

pub fn cd_original_epsilon(l: f64, t: f64, tail: f64) -> Result<CdOriginal> {
    check_nonneg("L", l)?;
    check_nonneg("t", t)?;
    check_probability("tail", tail)?;
    let epsilon = ((-t / 2.0).exp2() + 2.0 * tail.sqrt()).sqrt();
    Ok(CdOriginal {
        epsilon,
        failure_probability: 2.0 * epsilon,
        deviation_factor: 2.0 * epsilon / (1.0 - epsilon),
    })
}

/// `‖φ‖(2^{−t/4} + 2√S_P(2^{L+t/2}))`.
pub fn cd_strengthened_bound(l: f64, t: f64, s_tail: f64, phi_norm: f64) -> Result<f64> {
    check_nonneg("L", l)?;
    check_nonneg("t", t)?;
    check_probability("s_tail", s_tail)?;
    check_nonneg("phi_norm", phi_norm)?;
    Ok(phi_norm * ((-t / 4.0).exp2() + 2.0 * s_tail.sqrt()))
}

/// The expectation bound with the `w_Q` tail in place of `S_P`.
pub fn cd_original_bound(l: f64, t: f64, q_tail: f64, phi_norm: f64) -> Result<f64> {
    check_probability("tail", q_tail)?;
    cd_strengthened_bound(l, t, q_tail, phi_norm)
}

/// Relative slack for ratios that should sit exactly on the level `2^{L+t/2}`.
pub const LEVEL_TIE: f64 = 1e-12;

/// Tails at `a = 2^{L+t/2}`: `(w_Q(a), S_P(a))`, with
/// `S_P = w_Q − a·w_P` so that `S_P ≤ w_Q` holds in floating point.
pub fn cd_tails<M: LevelSets>(pair: &M, l: f64, t: f64) -> Result<(f64, f64)> {
    let a = (l + t / 2.0).exp2();
    let s = pair.level_stats(a * (1.0 - LEVEL_TIE))?;
    Ok((s.w_q, (s.w_q - a * s.w_p).max(0.0)))
}

/// Sample size `2^{L+t}`.
pub fn cd_sample_size(l: f64, t: f64) -> f64 {
    (l + t).exp2()
}

/// Three-atom pair with `D_KL = L` and `Q`-mass `L/(L + t/2)` on the spike
/// `log₂r = L + t/2`.
pub fn cd_two_point_pair(l: f64, t: f64) -> Result<FinitePair> {
    if !(l > 0.0) || !l.is_finite() {
        return Err(domain("L", l, "(0, ∞)"));
    }
    check_nonneg("t", t)?;
    let a = l + t / 2.0;
    let q1 = l / a;
    let spike = (-a).exp2();
    FinitePair::new(
        vec![q1 * (1.0 - spike), 1.0 - q1, q1 * spike],
        vec![0.0, 1.0 - q1, q1],
    )
}

/// Smallest `t` at which the original high-probability bound can reach `ε`
/// on [`cd_two_point_pair`]: `2L((2/ε²)² − 1)`.
pub fn cd_required_t(l: f64, eps: f64) -> Result<f64> {
    check_nonneg("L", l)?;
    if !(eps > 0.0) {
        return Err(domain("eps", eps, "(0, ∞)"));
    }
    let c = 2.0 / (eps * eps);
    Ok((2.0 * l * (c * c - 1.0)).max(0.0))
}

/// `(1/n) Σ φ(X_i) r(X_i)` over proposal draws.
pub fn importance_estimate<M, F>(model: &M, samples: &[M::Point], phi: F) -> Result<f64>
where
    M: RatioModel,
    F: Fn(M::Point) -> f64,
{
    if samples.is_empty() {
        return Err(crate::Error::Empty("samples"));
    }
    let total: f64 = samples.iter().map(|&x| phi(x) * model.ratio(x)).sum();
    Ok(total / samples.len() as f64)
}

/// Entropy of the first-index fallback `J = K·1[K ≤ n] + 1[K > n]`,
/// `K ~ Geometric(1/M̃)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndexEntropy {
    pub m_tilde: f64,
    pub n: f64,
    /// `H[J]`, exact.
    pub h_j: f64,
    /// `H[K] = h_b(1/M̃)·M̃`.
    pub h_k: f64,
    /// `P[K > n]`.
    pub tail: f64,
    /// `P[K ≤ n]·H[K] − h_b(P[K > n])`.
    pub lower_bound: f64,
}

fn xlog(x: f64) -> f64 {
    if x > 0.0 {
        -x * x.log2()
    } else {
        0.0
    }
}

pub fn binary_entropy(p: f64) -> f64 {
    xlog(p) + xlog(1.0 - p)
}

fn geometric_entropy(p: f64) -> f64 {
    if p >= 1.0 {
        return 0.0;
    }
    (xlog(p) - (1.0 - p) * (-p).ln_1p() * std::f64::consts::LOG2_E) / p
}

pub fn truncated_index_entropy(m_tilde: f64, n: u64) -> Result<IndexEntropy> {
    if n == 0 {
        return Err(domain("n", 0.0, "[1, ∞)"));
    }
    index_entropy(m_tilde, n as f64)
}

fn index_entropy(m_tilde: f64, n: f64) -> Result<IndexEntropy> {
    if !(m_tilde >= 1.0) || !m_tilde.is_finite() {
        return Err(domain("M_tilde", m_tilde, "[1, ∞)"));
    }
    let p = 1.0 / m_tilde;
    let h_k = geometric_entropy(p);
    // s^n with s = 1 − p
    let tail = if p >= 1.0 { 0.0 } else { (n * (-p).ln_1p()).exp() };
    // H[J] = φ(p + sⁿ) + Σ_{j=2..n} φ(p s^{j−1}), the sum being
    // H[K] − φ(p) − (sⁿ H[K] + φ(sⁿ)).
    let h_j = if n == 1.0 {
        0.0
    } else {
        (xlog(p + tail) + (1.0 - tail) * h_k - xlog(p) - xlog(tail)).max(0.0)
    };
    Ok(IndexEntropy {
        m_tilde,
        n,
        h_j,
        h_k,
        tail,
        lower_bound: (1.0 - tail) * h_k - binary_entropy(tail),
    })
}

/// KL instance of the index-entropy bound: at `M̃ = (2/(1−ε))ln(2/ε)2^{4D/ε}`
/// with the smallest `n` giving `P[K ≤ n] ≥ 1 − ε/2`, checks
/// `lower_bound ≥ (1 − ε/2)·4D/ε − 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KlEntropyCheck {
    pub d_kl: f64,
    pub eps: f64,
    pub entropy: IndexEntropy,
    pub floor: f64,
    pub holds: bool,
}

pub fn kl_entropy_check(d_kl: f64, eps: f64) -> Result<KlEntropyCheck> {
    check_nonneg("D_KL", d_kl)?;
    if !(eps > 0.0 && eps <= 2.0 / std::f64::consts::E) {
        return Err(domain("eps", eps, "(0, 2/e]"));
    }
    let m = 2.0 / (1.0 - eps) * (2.0 / eps).ln() * (4.0 * d_kl / eps).exp2();
    let n = ((eps / 2.0).ln() / (-1.0 / m).ln_1p()).ceil().max(1.0);
    let entropy = index_entropy(m, n)?;
    let floor = (1.0 - eps / 2.0) * 4.0 * d_kl / eps - 1.0;
    Ok(KlEntropyCheck {
        d_kl,
        eps,
        entropy,
        floor,
        holds: entropy.lower_bound >= floor,
    })
}

/// Every bound for one set of inputs, in a fixed order.
pub fn all_reports(d_f: f64, f: FGenerator, d_kl: f64, eps: f64, gamma: f64) -> Result<Vec<BoundReport>> {
    let mut out = vec![
        bp_complexity(d_f, f, eps)?,
        improved_complexity(d_f, f, eps, gamma)?,
    ];
    let depth = depth_limited_complexity(d_kl, eps)?;
    let k = depth.ceiling.expect("count").max(2.0);
    out.push(depth);
    out.push(index_tail_bound(d_kl, k)?);
    if eps <= 2.0 / std::f64::consts::E {
        let c = kl_entropy_check(d_kl, eps)?;
        out.push(BoundReport::new(
            "index_entropy_lower_bound",
            &[("D_KL", d_kl), ("eps", eps), ("M_tilde", c.entropy.m_tilde), ("n", c.entropy.n)],
            c.entropy.lower_bound,
            Unit::Bits,
        ));
    }
    if d_kl > 0.0 {
        out.push(BoundReport::new(
            "cd_required_t",
            &[("L", d_kl), ("eps", eps)],
            cd_required_t(d_kl, eps)?,
            Unit::Real,
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const D_TP: f64 = 0.5310044064107189;

    #[test]
    fn bp_examples() {
        let r = bp_complexity(D_TP, FGenerator::Kl, 0.25).unwrap();
        assert_abs_diff_eq!(r.value, 2002.108, epsilon = 1e-2);
        assert_eq!(r.ceiling, Some(2003.0));
        let expect = (2.0 / 0.75 * 8f64.ln() * (4.0 * D_TP / 0.25).exp2()).ceil();
        assert_eq!(r.ceiling.unwrap(), expect);
        let r = bp_complexity(0.0, FGenerator::Kl, 0.5).unwrap();
        assert_eq!(r.value, (4.0 * 4f64.ln()).max(2.0));
        assert!(bp_complexity(0.0, FGenerator::Kl, 0.999).unwrap().value > bp_complexity(0.0, FGenerator::Kl, 0.99).unwrap().value);
        assert!(bp_complexity(0.1, FGenerator::Kl, 1.0).is_err());
        assert!(bp_complexity(0.1, FGenerator::Kl, 0.0).is_err());
    }

    #[test]
    fn improved_examples() {
        let r = improved_complexity(D_TP, FGenerator::Kl, 0.25, 0.9).unwrap();
        assert_abs_diff_eq!(r.value, 18.938, epsilon = 1e-3);
        assert_eq!(r.ceiling, Some(19.0));
        assert_eq!(improved_complexity(0.0, FGenerator::Kl, 0.5, 0.5).unwrap().ceiling, Some(2.0));
        assert!(improved_complexity(0.1, FGenerator::Kl, 0.5, 1.0).is_err());
        assert!(improved_complexity(0.1, FGenerator::Kl, 0.5, 0.0).is_err());
    }

    #[test]
    fn improved_beats_bp_on_grid() {
        for f in [FGenerator::Kl, FGenerator::ChiSquared] {
            for di in 1..=20 {
                let d = 0.1 * di as f64;
                for ei in 1..=10 {
                    let eps = 0.05 * ei as f64;
                    let bp = bp_complexity(d, f, eps).unwrap().value;
                    let imp = improved_complexity(d, f, eps, 0.9).unwrap().value;
                    assert!(imp < bp, "{f:?} D={d} eps={eps}");
                }
            }
        }
    }

    #[test]
    fn depth_limited_examples() {
        let r = depth_limited_complexity(D_TP, 0.5).unwrap();
        assert_abs_diff_eq!(r.value, 17.4298, epsilon = 1e-3);
        assert_eq!(r.ceiling, Some(18.0));
        assert_eq!(depth_limited_complexity(D_TP, 0.25).unwrap().ceiling, Some(304.0));
        assert_eq!(depth_limited_complexity(0.0, 1.0 - 1e-12).unwrap().ceiling, Some(3.0));
    }

    #[test]
    fn tail_examples() {
        assert_abs_diff_eq!(index_tail_bound(D_TP, 18.0).unwrap().value, 0.494431, epsilon = 1e-6);
        assert_abs_diff_eq!(index_tail_bound(0.0, 4.0).unwrap().value, 0.765369, epsilon = 1e-6);
        assert_eq!(index_tail_bound(5.0, 2.0).unwrap().value, 1.0);
        assert!(index_tail_bound(0.0, 1.0).is_err());
    }

    #[test]
    fn depth_and_tail_are_inverse() {
        for di in 0..=30 {
            let d = 0.1 * di as f64;
            for ei in 1..=19 {
                let eps = 0.05 * ei as f64;
                let k = depth_limited_complexity(d, eps).unwrap().ceiling.unwrap();
                assert!(index_tail_bound(d, k).unwrap().value <= eps + 1e-12);
            }
        }
    }

    #[test]
    fn cd_examples() {
        assert_eq!(cd_original_epsilon(1.0, 0.0, 0.0).unwrap().epsilon, 1.0);
        let e = cd_original_epsilon(1.0, 2.0, 0.5).unwrap();
        assert_abs_diff_eq!(e.epsilon, (0.5 + 2f64.sqrt()).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(e.epsilon, 1.3836, epsilon = 1e-4);
        assert_eq!(e.failure_probability, 2.0 * e.epsilon);
        assert_eq!(cd_original_epsilon(1.0, 8.0, 0.0).unwrap().epsilon, 0.25);
        assert!(cd_original_epsilon(1.0, 1.0, 1.5).is_err());
        assert_eq!(cd_strengthened_bound(1.0, 0.0, 0.0, 3.0).unwrap(), 3.0);
        assert_abs_diff_eq!(cd_strengthened_bound(1.0, 2.0, 0.0, 1.0).unwrap(), 0.5f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn three_atom_construction() {
        let pair = cd_two_point_pair(1.0, 2.0).unwrap();
        assert_eq!(pair.q(), &[0.0, 0.5, 0.5]);
        assert_eq!(pair.p(), &[0.375, 0.5, 0.125]);
        let rep = pair.divergence_report(FGenerator::Kl).unwrap();
        assert_abs_diff_eq!(rep.kl_bits, 1.0, epsilon = 1e-12);
        let (w_q, s_p) = cd_tails(&pair, 1.0, 2.0).unwrap();
        assert_eq!(w_q, 0.5);
        assert_eq!(s_p, 0.0);
        let strong = cd_strengthened_bound(1.0, 2.0, s_p, 1.0).unwrap();
        let orig = cd_original_bound(1.0, 2.0, w_q, 1.0).unwrap();
        assert!(strong < orig);
        let spike = cd_two_point_pair(2.0, 0.0).unwrap();
        assert_eq!(spike.len(), 2);
        assert_abs_diff_eq!(spike.divergence_report(FGenerator::Kl).unwrap().kl_bits, 2.0, epsilon = 1e-12);
        assert!(cd_two_point_pair(0.0, 1.0).is_err());
        assert_eq!(cd_required_t(1.0, 0.5).unwrap(), 126.0);
    }

    #[test]
    fn three_atom_invariants() {
        for li in 1..=10 {
            for ti in 0..=10 {
                let (l, t) = (0.3 * li as f64, 0.7 * ti as f64);
                let pair = cd_two_point_pair(l, t).unwrap();
                let p_sum: f64 = pair.p().iter().sum();
                assert_abs_diff_eq!(p_sum, 1.0, epsilon = 1e-15);
                let e_p_r: f64 = pair.p().iter().zip(pair.ratios()).map(|(p, r)| p * r).sum();
                assert_abs_diff_eq!(e_p_r, 1.0, epsilon = 1e-12);
                let kl = pair.divergence_report(FGenerator::Kl).unwrap().kl_bits;
                assert_abs_diff_eq!(kl, l, epsilon = 1e-12);
                let (w_q, _) = cd_tails(&pair, l, t).unwrap();
                assert_abs_diff_eq!(w_q, l / (l + t / 2.0), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn importance_examples() {
        let tp = FinitePair::new(vec![0.5, 0.5], vec![0.1, 0.9]).unwrap();
        assert_abs_diff_eq!(importance_estimate(&tp, &[1, 0], |_| 1.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(importance_estimate(&tp, &[1, 0, 1], |_| 0.0).unwrap(), 0.0);
        assert!(importance_estimate(&tp, &[], |_| 1.0).is_err());
        let mut rng = stream_rng(3, 0, 0);
        let n = 1_000_000;
        let xs: Vec<usize> = (0..n).map(|_| tp.sample_proposal(&mut rng)).collect();
        let est = importance_estimate(&tp, &xs, |x| if x == 1 { 1.0 } else { 0.0 }).unwrap();
        // Var_P[r·1{x=1}] = 0.5·1.8² − 0.81
        let se = ((0.5 * 1.8 * 1.8 - 0.81) / n as f64).sqrt();
        assert!((est - 0.9).abs() <= 3.0 * se);
    }

    fn entropy_by_pmf(m_tilde: f64, n: u64) -> (f64, f64) {
        let p = 1.0 / m_tilde;
        let s = 1.0 - p;
        let tail = s.powf(n as f64);
        let mut h_j = xlog(p + tail);
        for j in 2..=n {
            h_j += xlog(p * s.powi(j as i32 - 1));
        }
        let mut h_k = 0.0;
        let mut j = 1;
        loop {
            let pk = p * s.powi(j - 1);
            if pk < 1e-300 || j > 200_000 {
                break;
            }
            h_k += xlog(pk);
            j += 1;
        }
        (h_j, (1.0 - tail) * h_k - binary_entropy(tail))
    }

    #[test]
    fn index_entropy_examples() {
        let e = truncated_index_entropy(5.0 / 3.0, 5).unwrap();
        let (h, lb) = entropy_by_pmf(5.0 / 3.0, 5);
        assert_abs_diff_eq!(e.h_j, h, epsilon = 1e-12);
        assert_abs_diff_eq!(e.lower_bound, lb, epsilon = 1e-12);
        assert_abs_diff_eq!(e.h_j, 1.5266453591, epsilon = 1e-9);
        assert_abs_diff_eq!(e.lower_bound, 1.5193000832, epsilon = 1e-9);
        let one = truncated_index_entropy(1.0, 7).unwrap();
        assert_eq!(one.h_j, 0.0);
        assert!(one.lower_bound <= 0.0);
        assert!(truncated_index_entropy(0.9, 3).is_err());
        assert!(truncated_index_entropy(2.0, 0).is_err());
        assert_eq!(truncated_index_entropy(3.0, 1).unwrap().h_j, 0.0);
    }

    #[test]
    fn index_entropy_grid() {
        for i in 0..20 {
            let m = 1.0 + 0.5 * i as f64;
            for n in 1..=20u64 {
                let e = truncated_index_entropy(m, n).unwrap();
                let (h, _) = entropy_by_pmf(m, n);
                assert_abs_diff_eq!(e.h_j, h, epsilon = 1e-12);
                assert!(e.h_j >= e.lower_bound - 1e-12, "M={m} n={n}");
            }
        }
        let far = truncated_index_entropy(3.0, 10_000).unwrap();
        assert_abs_diff_eq!(far.h_j, far.h_k, epsilon = 1e-12);
    }

    #[test]
    fn kl_plugin_grid() {
        for di in 1..=10 {
            for ei in 1..=7 {
                let c = kl_entropy_check(0.1 * di as f64, 0.1 * ei as f64).unwrap();
                assert!(c.holds, "{c:?}");
                assert!(c.entropy.tail <= c.eps / 2.0);
            }
        }
        assert!(kl_entropy_check(0.5, 0.8).is_err());
    }

    #[test]
    fn reports_csv() {
        let rs = all_reports(D_TP, FGenerator::Kl, D_TP, 0.5, 0.9).unwrap();
        let depth = rs.iter().find(|r| r.name == "depth_limited_complexity").unwrap();
        assert_eq!(depth.ceiling, Some(18.0));
        let mut buf = Vec::new();
        write_reports(&rs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("name,params,value,ceiling,unit\n"));
        assert_eq!(text.lines().count(), rs.len() + 1);
    }

    proptest! {
        #[test]
        fn strengthened_never_exceeds_original(
            p in prop::collection::vec(0.01f64..1.0, 2..12),
            q in prop::collection::vec(0.0f64..1.0, 2..12),
            l in 0.0f64..4.0,
            t in 0.0f64..12.0,
        ) {
            let m = p.len().min(q.len());
            let (p, mut q) = (p[..m].to_vec(), q[..m].to_vec());
            if q.iter().sum::<f64>() == 0.0 { q[0] = 1.0; }
            let ps: f64 = p.iter().sum();
            let qs: f64 = q.iter().sum();
            let pair = FinitePair::new(p.iter().map(|x| x / ps).collect(), q.iter().map(|x| x / qs).collect()).unwrap();
            let (w_q, s_p) = cd_tails(&pair, l, t).unwrap();
            let strong = cd_strengthened_bound(l, t, s_p, 1.0).unwrap();
            let orig = cd_original_bound(l, t, w_q, 1.0).unwrap();
            prop_assert!(strong <= orig + 1e-15);
        }

        #[test]
        fn entropy_bound_holds(m in 1.0f64..50.0, n in 1u64..500) {
            let e = truncated_index_entropy(m, n).unwrap();
            prop_assert!(e.h_j >= e.lower_bound - 1e-12);
            prop_assert!(e.h_j <= e.h_k + 1e-12);
        }
    }
}
