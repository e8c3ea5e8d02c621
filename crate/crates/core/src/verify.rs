//! Analytic oracles, empirical laws and the verification suite.
//!
//! Monte-Carlo checks on an alphabet of size `m` with `n` draws use the
//! tolerance `3·√(m/n)`. Every randomized check is seeded, and replications
//! are aggregated in index order, so the suite output is a pure function of
//! the seed.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;

use crate::bounds::{
    bp_complexity, cd_original_bound, cd_strengthened_bound, cd_tails, cd_two_point_pair, depth_limited_complexity,
    improved_complexity, importance_estimate, truncated_index_entropy,
};
use crate::coding::{decode_index, encode_index, rate_report_indices, select_lambda};
use crate::error::{Error, Result};
use crate::measures::{total_variation, FGenerator, FinitePair, LevelSets, PairedDistribution, RatioModel};
use crate::parallel::replicate;
use crate::rng::{stream_rng, Streams, AUX_STREAM};
use crate::samplers::{astar_depth_limited, astar_global, rejection_sample, FailPolicy, SampleRecord};
use crate::truncation::{pareto_check, truncate, TruncatedTarget};
use crate::INDEX_CONSTANT;

/// `3·√(m/n)`.
pub fn mc_tolerance(m: usize, n: usize) -> f64 {
    3.0 * (m as f64 / n as f64).sqrt()
}

/// Exact output law of budgeted rejection with the fresh-proposal fallback.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RejectionOracle {
    pub budget: u64,
    /// `ρ = (1 − 1/M̃)^k`, the probability that every proposal is rejected.
    pub rho: f64,
    /// `(1 − ρ)·Q_M + ρ·P`.
    pub law: Vec<f64>,
    pub truncated: Vec<f64>,
    /// `ρ·D_TV(P, Q_M)`.
    pub tv_to_truncated: f64,
    /// `D_TV(law, Q_M)` by summation.
    pub tv_to_truncated_direct: f64,
    pub tv_to_target: f64,
}

pub fn budgeted_rejection_oracle(tt: &TruncatedTarget, k: u64) -> Result<RejectionOracle> {
    if k == 0 {
        return Err(crate::error::domain("k", 0.0, "[1, ∞)"));
    }
    let pair = tt.base();
    let rho = if tt.m_tilde() <= 1.0 {
        0.0
    } else {
        (k as f64 * (-1.0 / tt.m_tilde()).ln_1p()).exp()
    };
    let truncated = tt.masses();
    let law: Vec<f64> = truncated
        .iter()
        .zip(pair.p())
        .map(|(qm, p)| (1.0 - rho) * qm + rho * p)
        .collect();
    Ok(RejectionOracle {
        budget: k,
        rho,
        tv_to_truncated: rho * total_variation(pair.p(), &truncated),
        tv_to_truncated_direct: total_variation(&law, &truncated),
        tv_to_target: total_variation(&law, pair.q()),
        law,
        truncated,
    })
}

/// [`budgeted_rejection_oracle`] for a spec pair truncated at `m`.
pub fn budgeted_rejection_oracle_for(pair: &PairedDistribution, m: f64, k: u64) -> Result<RejectionOracle> {
    let finite = pair.as_finite().ok_or(Error::FiniteOnly("budgeted_rejection_oracle"))?;
    budgeted_rejection_oracle(&truncate(finite, m)?, k)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalLaw {
    pub m: usize,
    pub counts: Vec<u64>,
    pub n: u64,
    pub masses: Vec<f64>,
    pub tv: f64,
    pub tolerance: f64,
}

impl EmpiricalLaw {
    /// `TV ≤ target + 3·√(m/n)`.
    pub fn passes(&self, target: f64) -> bool {
        self.tv <= target + self.tolerance
    }
}

pub fn empirical_law(symbols: &[usize], reference: &[f64]) -> Result<EmpiricalLaw> {
    if symbols.is_empty() {
        return Err(Error::Empty("records"));
    }
    let m = reference.len();
    let mut counts = vec![0u64; m];
    for &s in symbols {
        *counts.get_mut(s).ok_or(Error::SymbolOutOfAlphabet { symbol: s, size: m })? += 1;
    }
    let n = symbols.len() as u64;
    let masses: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
    Ok(EmpiricalLaw {
        m,
        tv: total_variation(&masses, reference),
        tolerance: mc_tolerance(m, symbols.len()),
        counts,
        n,
        masses,
    })
}

pub fn empirical_law_of(records: &[SampleRecord<usize>], reference: &[f64]) -> Result<EmpiricalLaw> {
    let symbols: Vec<usize> = records.iter().map(|r| r.sample).collect();
    empirical_law(&symbols, reference)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoupledReport {
    pub k: u64,
    pub runs: u64,
    /// Replications with `N′ > N`.
    pub order_violations: u64,
    /// Replications with `N ≤ k` but `N′ ≠ N`.
    pub prefix_violations: u64,
    pub mean_log2_n: f64,
    pub se_log2_n: f64,
    pub mean_log2_n_depth: f64,
}

impl CoupledReport {
    pub fn holds(&self) -> bool {
        self.order_violations == 0 && self.prefix_violations == 0
    }
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, (var / n).sqrt())
}

/// Global and depth-`k` A* on identical randomness per replication.
pub fn coupled_comparison<M: RatioModel>(target: &M, k: u64, n_runs: u64, seed: u64) -> Result<CoupledReport> {
    if n_runs == 0 {
        return Err(Error::Empty("replications"));
    }
    let pairs: Vec<Result<(u64, u64, bool)>> = replicate(n_runs, |rep| {
        let g = astar_global(target, &mut Streams::new(seed, rep), false)?;
        let d = astar_depth_limited(target, k, &mut Streams::new(seed, rep), false)?;
        Ok((g.index, d.index, g.index > k || d.sample == g.sample))
    });
    let mut ns = Vec::with_capacity(n_runs as usize);
    let mut nds = Vec::with_capacity(n_runs as usize);
    let (mut order, mut prefix) = (0, 0);
    for r in pairs {
        let (n, nd, same_sample) = r?;
        if nd > n {
            order += 1;
        }
        if n <= k && (nd != n || !same_sample) {
            prefix += 1;
        }
        ns.push((n as f64).log2());
        nds.push((nd as f64).log2());
    }
    let (mean, se) = mean_se(&ns);
    Ok(CoupledReport {
        k,
        runs: n_runs,
        order_violations: order,
        prefix_violations: prefix,
        mean_log2_n: mean,
        se_log2_n: se,
        mean_log2_n_depth: mean_se(&nds).0,
    })
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |F_a − F_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Critical value of the two-sample KS test, `c(α)·√((n_a + n_b)/(n_a n_b))`
/// with `c(α) = √(−ln(α/2)/2)`.
pub fn ks_critical(alpha: f64, na: usize, nb: usize) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    let (na, nb) = (na as f64, nb as f64);
    c * ((na + nb) / (na * nb)).sqrt()
}

/// A random pair on at most `max_len` atoms: flat Dirichlet proposal, target
/// Dirichlet with each atom zeroed with probability 1/5.
pub fn random_pair<R: Rng + ?Sized>(rng: &mut R, max_len: usize) -> FinitePair {
    let m = rng.random_range(2..=max_len.max(2));
    let flat = |rng: &mut R| -> Vec<f64> {
        let g: Vec<f64> = (0..m).map(|_| Distribution::<f64>::sample(&Exp1, rng) + 1e-12).collect();
        let s: f64 = g.iter().sum();
        g.into_iter().map(|x: f64| x / s).collect()
    };
    let p = flat(rng);
    let mut q = flat(rng);
    for x in q.iter_mut() {
        if rng.random::<f64>() < 0.2 {
            *x = 0.0;
        }
    }
    if q.iter().all(|x| *x == 0.0) {
        q[0] = 1.0;
    }
    let s: f64 = q.iter().sum();
    q.iter_mut().for_each(|x| *x /= s);
    FinitePair::new(p, q).expect("valid random pair")
}

/// Levels at which the level-set checks are evaluated: an even grid over
/// `[0, 1.2‖r‖_∞]` plus atoms' own ratios.
pub fn level_grid<R: Rng + ?Sized>(pair: &FinitePair, rng: &mut R, size: usize) -> Vec<f64> {
    let sup = pair.sup_ratio();
    let even = size / 2;
    let mut hs: Vec<f64> = (0..even).map(|i| 1.2 * sup * i as f64 / (even - 1).max(1) as f64).collect();
    while hs.len() < size {
        hs.push(pair.ratios()[rng.random_range(0..pair.len())]);
    }
    hs
}

/// One line of the suite output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteRow {
    pub test_id: String,
    pub statistic: f64,
    pub bound: f64,
    pub pass: bool,
}

impl SuiteRow {
    fn new(id: &str, statistic: f64, bound: f64, pass: bool) -> Self {
        Self {
            test_id: id.to_owned(),
            statistic,
            bound,
            pass,
        }
    }

    /// Group name, the part of the id before the first dot.
    pub fn group(&self) -> &str {
        self.test_id.split('.').next().unwrap_or(&self.test_id)
    }
}

fn le(id: &str, statistic: f64, bound: f64) -> SuiteRow {
    SuiteRow::new(id, statistic, bound, statistic <= bound)
}

fn ge(id: &str, statistic: f64, bound: f64) -> SuiteRow {
    SuiteRow::new(id, statistic, bound, statistic >= bound)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub rows: Vec<SuiteRow>,
}

impl SuiteReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn group_pass(&self, group: &str) -> Option<bool> {
        let mut rows = self.rows.iter().filter(|r| r.group() == group).peekable();
        rows.peek()?;
        Some(rows.all(|r| r.pass))
    }

    /// CSV with columns `test_id,statistic,bound,pass`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["test_id", "statistic", "bound", "pass"])?;
        for r in &self.rows {
            w.write_record([
                r.test_id.clone(),
                r.statistic.to_string(),
                r.bound.to_string(),
                r.pass.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Group names in suite order.
pub const SUITE_GROUPS: [&str; 12] = [
    "level_identity",
    "truncation_tv",
    "f_divergence_tail",
    "exact_sampling",
    "depth_limited",
    "index_bound",
    "rejection_oracle",
    "complexity",
    "rate",
    "importance_sampling",
    "index_entropy",
    "pareto_floor",
];

const RANDOM_PAIRS: u64 = 50;
const MAX_ATOMS: usize = 32;
const IDENTITY_TOL: f64 = 1e-12;

fn tp() -> FinitePair {
    FinitePair::new(vec![0.5, 0.5], vec![0.1, 0.9]).expect("valid")
}

fn tp_kl() -> f64 {
    tp().divergence_report(FGenerator::Kl).expect("normalized").kl_bits
}

fn random_pairs(seed: u64) -> Vec<(FinitePair, Vec<f64>)> {
    (0..RANDOM_PAIRS)
        .map(|i| {
            let mut rng = stream_rng(seed, i, AUX_STREAM);
            let pair = random_pair(&mut rng, MAX_ATOMS);
            let grid = level_grid(&pair, &mut rng, 20);
            (pair, grid)
        })
        .collect()
}

fn level_identity(pairs: &[(FinitePair, Vec<f64>)]) -> Result<Vec<SuiteRow>> {
    let mut worst = 0.0f64;
    for (pair, grid) in pairs {
        for &h in grid {
            let s = pair.level_stats(h)?;
            worst = worst.max((s.s_p - (s.w_q - h * s.w_p)).abs());
        }
    }
    Ok(vec![le("level_identity.max_abs_err", worst, IDENTITY_TOL)])
}

fn truncation_tv(pairs: &[(FinitePair, Vec<f64>)]) -> Result<Vec<SuiteRow>> {
    let mut worst = 0.0f64;
    for (pair, _) in pairs {
        let sup = pair.sup_ratio();
        for j in 0..10 {
            let tt = truncate(pair, sup * (j as f64 + 0.5) / 10.0)?;
            let s = pair.level_stats(tt.m_tilde())?.s_p;
            worst = worst.max((tt.tv_direct() - s).abs());
        }
    }
    Ok(vec![le("truncation_tv.max_abs_err", worst, IDENTITY_TOL)])
}

fn f_divergence_tail(pairs: &[(FinitePair, Vec<f64>)]) -> Result<Vec<SuiteRow>> {
    let mut rows = Vec::new();
    for f in [FGenerator::Kl, FGenerator::ChiSquared] {
        let mut violations = 0u64;
        let mut checked = 0u64;
        for (pair, grid) in pairs {
            let d_f = pair.divergence_report(f)?.d_f;
            for &a in grid {
                let fp = f.derivative(a);
                if fp > 0.0 {
                    checked += 1;
                    if pair.level_stats(a)?.s_p > d_f / fp + IDENTITY_TOL {
                        violations += 1;
                    }
                }
            }
        }
        rows.push(le(&format!("f_divergence_tail.{}_violations", f.name()), violations as f64, 0.0));
        rows.push(ge(&format!("f_divergence_tail.{}_checked", f.name()), checked as f64, 1.0));
    }
    Ok(rows)
}

fn global_records(pair: &FinitePair, n: u64, seed: u64) -> Result<Vec<SampleRecord<usize>>> {
    replicate(n, |rep| astar_global(pair, &mut Streams::new(seed, rep), false))
        .into_iter()
        .collect()
}

fn exact_sampling(seed: u64) -> Result<Vec<SuiteRow>> {
    let pair = tp();
    let n = 1_000_000;
    let recs = global_records(&pair, n, seed)?;
    let law = empirical_law_of(&recs, pair.q())?;
    let mean_k = recs.iter().map(|r| r.examined as f64).sum::<f64>() / n as f64;
    Ok(vec![
        le("exact_sampling.tv", law.tv, law.tolerance),
        ge("exact_sampling.mean_k_lo", mean_k, 1.75),
        le("exact_sampling.mean_k_hi", mean_k, 1.85),
    ])
}

fn depth_limited(seed: u64) -> Result<Vec<SuiteRow>> {
    let pair = tp();
    let d = tp_kl();
    let n = 100_000u64;
    let mut rows = Vec::new();
    for (eps, expect_k, tag) in [(0.5, 18.0, "eps050"), (0.25, 304.0, "eps025")] {
        let k = depth_limited_complexity(d, eps)?.ceiling.expect("count");
        rows.push(SuiteRow::new(&format!("depth_limited.{tag}_k"), k, expect_k, k == expect_k));
        let recs: Vec<SampleRecord<usize>> =
            replicate(n, |rep| astar_depth_limited(&pair, k as u64, &mut Streams::new(seed, rep), false))
                .into_iter()
                .collect::<Result<_>>()?;
        let law = empirical_law_of(&recs, pair.q())?;
        rows.push(le(&format!("depth_limited.{tag}_tv"), law.tv, eps + law.tolerance));
    }
    Ok(rows)
}

fn index_bound(seed: u64) -> Result<Vec<SuiteRow>> {
    let pair = tp();
    let d = tp_kl();
    let c = coupled_comparison(&pair, 18, 100_000, seed)?;
    Ok(vec![
        le("index_bound.mean_log2_n", c.mean_log2_n, d + INDEX_CONSTANT + 3.0 * c.se_log2_n),
        le("index_bound.order_violations", c.order_violations as f64, 0.0),
        le("index_bound.prefix_violations", c.prefix_violations as f64, 0.0),
        le("index_bound.mean_log2_n_depth", c.mean_log2_n_depth, c.mean_log2_n),
    ])
}

fn rejection_oracle(seed: u64) -> Result<Vec<SuiteRow>> {
    let tt = truncate(&tp(), 1.0)?;
    let k = 5;
    let oracle = budgeted_rejection_oracle(&tt, k)?;
    let n = 1_000_000u64;
    let recs: Vec<SampleRecord<usize>> =
        replicate(n, |rep| rejection_sample(&tt, Some(k), FailPolicy::FreshProposal, &mut Streams::new(seed, rep)))
            .into_iter()
            .collect::<Result<_>>()?;
    let law = empirical_law_of(&recs, &oracle.law)?;
    Ok(vec![
        le("rejection_oracle.law1_err", (oracle.law[1] - 0.82992).abs(), 5e-6),
        le("rejection_oracle.empirical_tv", law.tv, law.tolerance),
        le(
            "rejection_oracle.tv_formula_err",
            (oracle.tv_to_truncated - oracle.tv_to_truncated_direct).abs(),
            IDENTITY_TOL,
        ),
    ])
}

fn complexity() -> Result<Vec<SuiteRow>> {
    let d = tp_kl();
    let imp = improved_complexity(d, FGenerator::Kl, 0.25, 0.9)?.ceiling.expect("count");
    let bp = bp_complexity(d, FGenerator::Kl, 0.25)?.ceiling.expect("count");
    let mut grid_violations = 0u64;
    for f in [FGenerator::Kl, FGenerator::ChiSquared] {
        for di in 1..=20 {
            for ei in 1..=10 {
                let (d, eps) = (0.1 * di as f64, 0.05 * ei as f64);
                if improved_complexity(d, f, eps, 0.9)?.value >= bp_complexity(d, f, eps)?.value {
                    grid_violations += 1;
                }
            }
        }
    }
    Ok(vec![
        SuiteRow::new("complexity.improved", imp, 19.0, imp == 19.0),
        SuiteRow::new("complexity.bp", bp, 2003.0, bp == 2003.0),
        SuiteRow::new("complexity.improved_lt_bp", imp, bp, imp < bp),
        le("complexity.grid_violations", grid_violations as f64, 0.0),
    ])
}

fn rate(seed: u64) -> Result<Vec<SuiteRow>> {
    let pair = tp();
    let d = tp_kl();
    let lambda = select_lambda(d)?;
    let recs = global_records(&pair, 100_000, seed)?;
    let indices: Vec<u64> = recs.iter().map(|r| r.index).collect();
    let report = rate_report_indices(&indices, d)?;
    let mut rng = stream_rng(seed, 0, AUX_STREAM);
    let trials = 100_000u64;
    let mut failures = 0u64;
    for _ in 0..trials {
        let n = rng.random_range(1..=1u64 << 20);
        if decode_index(&encode_index(n)?).ok() != Some(n) {
            failures += 1;
        }
    }
    Ok(vec![
        le("rate.lambda_err", (lambda - 1.4850).abs(), 5e-5),
        le(
            "rate.mean_ideal_bits",
            report.mean_ideal_bits,
            report.rate_bound + 3.0 * report.ideal_std_error,
        ),
        le(
            "rate.mean_ideal_bits_zeta",
            report.mean_ideal_bits,
            report.zeta_bound + 3.0 * report.ideal_std_error,
        ),
        le("rate.round_trip_failures", failures as f64, 0.0),
    ])
}

fn importance_sampling(pairs: &[(FinitePair, Vec<f64>)], seed: u64) -> Result<Vec<SuiteRow>> {
    let mut violations = 0u64;
    for (pair, _) in pairs {
        let l = pair.divergence_report(FGenerator::Kl)?.kl_bits;
        for ti in 0..=16 {
            let t = 0.5 * ti as f64;
            let (w_q, s_p) = cd_tails(pair, l, t)?;
            if cd_strengthened_bound(l, t, s_p, 1.0)? > cd_original_bound(l, t, w_q, 1.0)? {
                violations += 1;
            }
        }
    }
    let three = cd_two_point_pair(1.0, 2.0)?;
    let at4 = three.level_stats(4.0)?;
    let mut rows = vec![
        le("importance_sampling.strengthened_gt_original", violations as f64, 0.0),
        SuiteRow::new("importance_sampling.three_atom_s_p", at4.s_p, 0.0, at4.s_p == 0.0),
        SuiteRow::new("importance_sampling.three_atom_w_q", at4.w_q, 0.5, at4.w_q == 0.5),
    ];

    // E|I_n(φ) − I(φ)| at n = 2^{L+t} for indicators of single atoms
    let cases: Vec<(FinitePair, f64, f64, &str)> = vec![
        (three, 1.0, 2.0, "three_atom"),
        (tp(), tp_kl(), 3.0 - tp_kl(), "tp_n8"),
        (tp(), tp_kl(), 5.0 - tp_kl(), "tp_n32"),
    ];
    let reps = 1000u64;
    for (ci, (pair, l, t, tag)) in cases.iter().enumerate() {
        let n = (l + t).exp2().round() as usize;
        let (_, s_p) = cd_tails(pair, *l, *t)?;
        for atom in 0..pair.len() {
            let target = pair.q()[atom];
            let phi = move |x: usize| if x == atom { 1.0 } else { 0.0 };
            let errs = replicate(reps, |rep| {
                let mut rng = stream_rng(seed, (ci as u64) << 32 | rep, AUX_STREAM);
                let xs: Vec<usize> = (0..n).map(|_| pair.sample_proposal(&mut rng)).collect();
                importance_estimate(pair, &xs, phi).map(|e| (e - target).abs())
            });
            let errs: Vec<f64> = errs.into_iter().collect::<Result<_>>()?;
            let mean = errs.iter().sum::<f64>() / reps as f64;
            let bound = cd_strengthened_bound(*l, *t, s_p, target.sqrt())?;
            rows.push(le(&format!("importance_sampling.mc_{tag}_atom{atom}"), mean, bound));
        }
    }
    Ok(rows)
}

/// `H[J]` and its lower bound by direct summation of the pmf of `J`.
pub fn index_entropy_by_pmf(m_tilde: f64, n: u64) -> (f64, f64) {
    let xlog = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
    let p = 1.0 / m_tilde;
    let s = 1.0 - p;
    let tail = s.powf(n as f64);
    let mut h_j = xlog(p + tail);
    let mut pk = p;
    for _ in 2..=n {
        pk *= s;
        h_j += xlog(pk);
    }
    let mut h_k = 0.0;
    let mut pk = p;
    while pk > 1e-300 {
        h_k += xlog(pk);
        pk *= s;
        if s == 0.0 {
            break;
        }
    }
    let hb = xlog(tail) + xlog(1.0 - tail);
    (h_j, (1.0 - tail) * h_k - hb)
}

fn index_entropy() -> Result<Vec<SuiteRow>> {
    let e = truncated_index_entropy(5.0 / 3.0, 5)?;
    let (h, lb) = index_entropy_by_pmf(5.0 / 3.0, 5);
    let mut worst_gap = f64::INFINITY;
    let mut worst_err = 0.0f64;
    for i in 0..20 {
        let m = 1.0 + 0.25 * i as f64;
        for n in 1..=20u64 {
            let e = truncated_index_entropy(m, n)?;
            worst_gap = worst_gap.min(e.h_j - e.lower_bound);
            worst_err = worst_err.max((e.h_j - index_entropy_by_pmf(m, n).0).abs());
        }
    }
    Ok(vec![
        le("index_entropy.h_j_err", (e.h_j - h).abs(), IDENTITY_TOL),
        le("index_entropy.lower_bound_err", (e.lower_bound - lb).abs(), IDENTITY_TOL),
        le("index_entropy.h_j_ref_err", (e.h_j - 1.5267).abs(), 1e-4),
        le("index_entropy.lower_bound_ref_err", (e.lower_bound - 1.5193).abs(), 1e-4),
        ge("index_entropy.h_j_ge_bound", e.h_j, e.lower_bound),
        ge("index_entropy.grid_min_gap", worst_gap, -IDENTITY_TOL),
        le("index_entropy.grid_pmf_err", worst_err, IDENTITY_TOL),
    ])
}

fn pareto_floor(seed: u64) -> Result<Vec<SuiteRow>> {
    let mut rows = Vec::new();
    for (eps, tag) in [(0.05, "eps005"), (0.2, "eps020")] {
        let r = pareto_check(&tp(), eps, 10_000, seed)?;
        rows.push(le(&format!("pareto_floor.{tag}_violations"), r.violations as f64, 0.0));
        rows.push(ge(&format!("pareto_floor.{tag}_admissible"), r.admissible as f64, 1.0));
        rows.push(le(
            &format!("pareto_floor.{tag}_attained_err"),
            (r.truncation_value - r.floor).abs(),
            IDENTITY_TOL,
        ));
    }
    Ok(rows)
}

/// Generic checks on a user-supplied pair.
fn spec_pair_checks(pair: &PairedDistribution, seed: u64) -> Result<Vec<SuiteRow>> {
    let mut rows = Vec::new();
    let d = pair.divergence_report(FGenerator::Kl)?.kl_bits;
    let n = 100_000u64;
    match pair {
        PairedDistribution::Finite(fp) => {
            let mut rng = stream_rng(seed, 0, AUX_STREAM);
            let mut worst = 0.0f64;
            for h in level_grid(fp, &mut rng, 40) {
                let s = fp.level_stats(h)?;
                worst = worst.max((s.s_p - (s.w_q - h * s.w_p)).abs());
            }
            rows.push(le("spec_pair.level_identity", worst, IDENTITY_TOL));
            let recs = global_records(fp, n, seed)?;
            let law = empirical_law_of(&recs, fp.q())?;
            rows.push(le("spec_pair.exact_sampling_tv", law.tv, law.tolerance));
            let c = coupled_comparison(fp, 18, n, seed)?;
            rows.push(le("spec_pair.mean_log2_n", c.mean_log2_n, d + INDEX_CONSTANT + 3.0 * c.se_log2_n));
            rows.push(le("spec_pair.order_violations", c.order_violations as f64, 0.0));
        }
        PairedDistribution::Gaussian(gp) => {
            let c = coupled_comparison(gp, 18, n, seed)?;
            rows.push(le("spec_pair.mean_log2_n", c.mean_log2_n, d + INDEX_CONSTANT + 3.0 * c.se_log2_n));
            rows.push(le("spec_pair.order_violations", c.order_violations as f64, 0.0));
        }
    }
    Ok(rows)
}

/// Runs every suite group; `extra` adds generic checks on a supplied pair.
pub fn run_suite(seed: u64, extra: Option<&PairedDistribution>) -> Result<SuiteReport> {
    let pairs = random_pairs(seed);
    let mut rows = Vec::new();
    rows.extend(level_identity(&pairs)?);
    rows.extend(truncation_tv(&pairs)?);
    rows.extend(f_divergence_tail(&pairs)?);
    rows.extend(exact_sampling(seed)?);
    rows.extend(depth_limited(seed)?);
    rows.extend(index_bound(seed)?);
    rows.extend(rejection_oracle(seed)?);
    rows.extend(complexity()?);
    rows.extend(rate(seed)?);
    rows.extend(importance_sampling(&pairs, seed)?);
    rows.extend(index_entropy()?);
    rows.extend(pareto_floor(seed)?);
    if let Some(pair) = extra {
        rows.extend(spec_pair_checks(pair, seed)?);
    }
    Ok(SuiteReport { seed, rows })
}

/// Runs one group by name.
pub fn run_group(group: &str, seed: u64) -> Result<Vec<SuiteRow>> {
    let pairs = || random_pairs(seed);
    match group {
        "level_identity" => level_identity(&pairs()),
        "truncation_tv" => truncation_tv(&pairs()),
        "f_divergence_tail" => f_divergence_tail(&pairs()),
        "exact_sampling" => exact_sampling(seed),
        "depth_limited" => depth_limited(seed),
        "index_bound" => index_bound(seed),
        "rejection_oracle" => rejection_oracle(seed),
        "complexity" => complexity(),
        "rate" => rate(seed),
        "importance_sampling" => importance_sampling(&pairs(), seed),
        "index_entropy" => index_entropy(),
        "pareto_floor" => pareto_floor(seed),
        other => Err(Error::UnknownGroup(other.to_owned())),
    }
}
