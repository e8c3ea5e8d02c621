//! Selection samplers over a shared proposal stream.
//!
//! All samplers read `X_1, X_2, ...` from [`Streams::proposal`] in order and
//! nothing else from it, so runs with the same `(seed, replication)` examine
//! the same proposals. A* variants also share the Gumbel stream; with both
//! shared, depth-limited A* returns the prefix argmax of the global run.

use std::fmt;
use std::io::Write;

use rand::distr::Open01;
use rand::Rng;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::measures::RatioModel;
use crate::rng::Streams;

/// Decreasing chain `G_1 > G_2 > ...` of truncated standard Gumbels.
///
/// Stored in the exponential-race domain: `G_k = −ln T_k` with
/// `T_k = T_{k−1} + E_k`, `E_k ~ Exp(1)`, `T_0 = 0` (`G_0 = +∞`). Feeding
/// `E_k = −ln u` gives the inverse-CDF step `G_k = −ln(e^{−G_{k−1}} − ln u)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GumbelChain {
    time: f64,
    step: u64,
}

impl GumbelChain {
    pub fn new() -> Self {
        Self::default()
    }

    /// Last value, `+∞` before the first draw.
    pub fn last(&self) -> f64 {
        -self.time.ln()
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    /// Advances by an exponential increment.
    pub fn push_exponential(&mut self, e: f64) -> f64 {
        self.time += e;
        self.step += 1;
        self.last()
    }

    /// Draws the next value from a uniform on the Gumbel stream.
    pub fn advance<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(Open01);
        self.push_exponential(-u.ln())
    }
}

/// Next chain value for uniform `u ∈ (0, 1)`: `−ln(e^{−b} − ln u)` where `b`
/// is the previous value.
pub fn next_truncated_gumbel(state: &mut GumbelChain, u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(domain("u", u, "(0, 1)"));
    }
    Ok(state.push_exponential(-u.ln()))
}

/// Standard Gumbel truncated to `(−∞, bound)` by its inverse CDF.
pub fn truncated_gumbel(bound: f64, u: f64) -> f64 {
    -((-bound).exp() - u.ln()).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Rejection,
    RejectionBudgeted,
    Astar,
    AstarDepth,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Rejection => "rejection",
            Method::RejectionBudgeted => "rejection-budgeted",
            Method::Astar => "astar",
            Method::AstarDepth => "astar-depth",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "rejection" => Ok(Method::Rejection),
            "rejection-budgeted" => Ok(Method::RejectionBudgeted),
            "astar" => Ok(Method::Astar),
            "astar-depth" => Ok(Method::AstarDepth),
            other => Err(format!(
                "unknown method `{other}` (expected rejection, rejection-budgeted, astar or astar-depth)"
            )),
        }
    }
}

/// What budgeted rejection returns when every proposal was rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailPolicy {
    /// A fresh proposal `X_{k+1}` with `N = k + 1`; the output law is the
    /// mixture `(1 − ρ)·Q̃ + ρ·P`.
    #[default]
    FreshProposal,
    /// The first proposal, `N = 1`. Same output law, lower index entropy.
    FirstIndex,
}

impl std::str::FromStr for FailPolicy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "fresh-proposal" | "fresh" => Ok(FailPolicy::FreshProposal),
            "first-index" | "first" => Ok(FailPolicy::FirstIndex),
            other => Err(format!("unknown fail policy `{other}` (expected fresh-proposal or first-index)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceStep<X> {
    pub step: u64,
    pub x: X,
    pub log_ratio: f64,
    pub gumbel: f64,
    pub best_l: f64,
    pub best_n: u64,
}

/// Outcome of one sampler run.
///
/// `examined` (`K`) counts proposals whose ratio was evaluated. For global
/// A* this excludes the final Gumbel draw that certifies the argmax, so `K`
/// is geometric with mean `‖r̃‖_∞`; the run drew `K + 1` Gumbels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleRecord<X> {
    pub index: u64,
    pub sample: X,
    pub examined: u64,
    pub method: Method,
    pub budget: Option<u64>,
    #[serde(skip)]
    pub trace: Option<Vec<TraceStep<X>>>,
}

fn checked_bound<M: RatioModel>(target: &M) -> Result<f64> {
    let bound = target.sup_ratio();
    if bound.is_finite() && bound > 0.0 {
        Ok(bound)
    } else {
        Err(Error::UnboundedRatio)
    }
}

/// Rejection sampling with acceptance probability `r̃(x) / ‖r̃‖_∞`.
///
/// `budget = None` runs until acceptance (exact, `K` geometric with mean
/// `‖r̃‖_∞`). With a budget `k`, exhaustion falls back per `policy`.
pub fn rejection_sample<M: RatioModel>(
    target: &M,
    budget: Option<u64>,
    policy: FailPolicy,
    streams: &mut Streams,
) -> Result<SampleRecord<M::Point>> {
    let bound = checked_bound(target)?;
    if budget == Some(0) {
        return Err(domain("budget", 0.0, "[1, ∞)"));
    }
    let method = if budget.is_some() {
        Method::RejectionBudgeted
    } else {
        Method::Rejection
    };
    let mut first = None;
    let mut i = 0u64;
    while budget.is_none_or(|k| i < k) {
        i += 1;
        let x = target.sample_proposal(&mut streams.proposal);
        first.get_or_insert(x);
        let u: f64 = streams.accept.random();
        if u * bound < target.ratio(x) {
            return Ok(SampleRecord {
                index: i,
                sample: x,
                examined: i,
                method,
                budget,
                trace: None,
            });
        }
    }
    let (index, sample, examined) = match policy {
        FailPolicy::FreshProposal => (i + 1, target.sample_proposal(&mut streams.proposal), i + 1),
        FailPolicy::FirstIndex => (1, first.expect("budget ≥ 1"), i),
    };
    Ok(SampleRecord {
        index,
        sample,
        examined,
        method,
        budget,
        trace: None,
    })
}

struct Search<X> {
    best_l: f64,
    best: Option<(u64, X)>,
    trace: Option<Vec<TraceStep<X>>>,
}

impl<X: Copy> Search<X> {
    fn new(trace: bool) -> Self {
        Self {
            best_l: f64::NEG_INFINITY,
            best: None,
            trace: trace.then(Vec::new),
        }
    }

    fn visit(&mut self, step: u64, x: X, log_ratio: f64, gumbel: f64) {
        let l = log_ratio + gumbel;
        if self.best_l < l {
            self.best_l = l;
            self.best = Some((step, x));
        }
        if let Some(t) = self.trace.as_mut() {
            t.push(TraceStep {
                step,
                x,
                log_ratio,
                gumbel,
                best_l: self.best_l,
                best_n: self.best.map_or(0, |b| b.0),
            });
        }
    }
}

/// Global-bound A* coding: `N = argmax_k {ln r̃(X_k) + G_k}`, stopping once
/// `G_{k+1} + ln‖r̃‖_∞ < L` certifies that no later index can win.
pub fn astar_global<M: RatioModel>(target: &M, streams: &mut Streams, trace: bool) -> Result<SampleRecord<M::Point>> {
    let ln_bound = checked_bound(target)?.ln();
    let mut chain = GumbelChain::new();
    let mut search = Search::new(trace);
    let mut k = 0u64;
    loop {
        let g = chain.advance(&mut streams.gumbel);
        if g + ln_bound < search.best_l {
            break;
        }
        k += 1;
        let x = target.sample_proposal(&mut streams.proposal);
        search.visit(k, x, target.log_ratio(x), g);
    }
    let (index, sample) = search.best.expect("first step always improves on −∞ or continues");
    Ok(SampleRecord {
        index,
        sample,
        examined: k,
        method: Method::Astar,
        budget: None,
        trace: search.trace,
    })
}

/// Depth-limited A* coding: the same argmax over the first `k` proposals.
///
/// Works for unbounded and unnormalized ratios. If every one of the `k`
/// proposals has `r̃ = 0` the first one is returned.
pub fn astar_depth_limited<M: RatioModel>(
    target: &M,
    k: u64,
    streams: &mut Streams,
    trace: bool,
) -> Result<SampleRecord<M::Point>> {
    if k == 0 {
        return Err(domain("k", 0.0, "[1, ∞)"));
    }
    let mut chain = GumbelChain::new();
    let mut search = Search::new(trace);
    let mut first = None;
    for i in 1..=k {
        let g = chain.advance(&mut streams.gumbel);
        let x = target.sample_proposal(&mut streams.proposal);
        first.get_or_insert(x);
        search.visit(i, x, target.log_ratio(x), g);
    }
    let (index, sample) = search.best.unwrap_or((1, first.expect("k ≥ 1")));
    Ok(SampleRecord {
        index,
        sample,
        examined: k,
        method: Method::AstarDepth,
        budget: Some(k),
        trace: search.trace,
    })
}

/// Writes a trace as CSV with columns `step,x,log_ratio,gumbel,best_L,best_N`.
pub fn write_trace<X: fmt::Display, W: Write>(steps: &[TraceStep<X>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["step", "x", "log_ratio", "gumbel", "best_L", "best_N"])?;
    for s in steps {
        w.write_record([
            s.step.to_string(),
            s.x.to_string(),
            s.log_ratio.to_string(),
            s.gumbel.to_string(),
            s.best_l.to_string(),
            s.best_n.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
