//! Command-line front end.
//!
//! Every subcommand writes CSV to `--out` (or stdout). Tabular summaries use
//! the long format `quantity,key,value`. Exit status is 0 on success, 1 when
//! `verify` finds a failing check and 2 for usage or input errors.

use std::fmt::Display;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::bounds::{all_reports, write_reports};
use crate::coding::{elias_delta_len, rate_report_indices};
use crate::error::{Error, Result};
use crate::measures::{FGenerator, FinitePair, GaussianPair, LevelSets, PairedDistribution, RatioModel};
use crate::rng::Streams;
use crate::samplers::{
    astar_depth_limited, astar_global, rejection_sample, write_trace, FailPolicy, Method, SampleRecord,
};
use crate::spec_file;
use crate::truncation::{optimal_truncation, truncate};
use crate::verify::{empirical_law, run_suite};

pub const EXIT_TEST_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "crs", version, about = "Channel simulation samplers, bounds and verification")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Divergences and level-set statistics over an h-grid.
    Report(ReportArgs),
    /// Truncated target for a level M or a TV tolerance eps.
    Truncate(TruncateArgs),
    /// Run a sampler and emit one record per replication.
    Sample(SampleArgs),
    /// Codelength report for A* indices.
    Code(CodeArgs),
    /// Closed-form complexity and entropy bounds.
    Bounds(BoundsArgs),
    /// Full verification suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct Output {
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub spec: PathBuf,
    /// Number of h-grid points.
    #[arg(long, default_value_t = 21)]
    pub grid: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct TruncateArgs {
    #[arg(long)]
    pub spec: PathBuf,
    /// Truncation level M.
    #[arg(long, conflicts_with = "eps", required_unless_present = "eps")]
    pub m: Option<f64>,
    /// TV tolerance; picks the smallest admissible M̃ (finite pairs).
    #[arg(long)]
    pub eps: Option<f64>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub method: Method,
    /// Budget for rejection-budgeted and depth for astar-depth.
    #[arg(long)]
    pub k: Option<u64>,
    /// Truncate the target at level M first.
    #[arg(long, conflicts_with = "eps")]
    pub m: Option<f64>,
    /// Truncate the target at the optimal level for this TV tolerance first.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, default_value = "fresh-proposal")]
    pub policy: FailPolicy,
    /// Replications.
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub seed: u64,
    /// Empirical law CSV (finite pairs).
    #[arg(long)]
    pub law: Option<PathBuf>,
    /// Per-step trace of replication 0.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct CodeArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long, default_value = "astar")]
    pub method: Method,
    #[arg(long)]
    pub k: Option<u64>,
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub seed: u64,
    /// Information in bits used to tune λ; defaults to the pair's KL.
    #[arg(long)]
    pub dkl: Option<f64>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    /// Pair whose divergences feed the bounds.
    #[arg(long, required_unless_present = "dkl")]
    pub spec: Option<PathBuf>,
    /// KL divergence in bits.
    #[arg(long)]
    pub dkl: Option<f64>,
    /// f-divergence value; defaults to the spec's, or to `--dkl` for kl.
    #[arg(long)]
    pub df: Option<f64>,
    #[arg(long = "f", default_value = "kl")]
    pub generator: FGenerator,
    #[arg(long)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.9)]
    pub gamma: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Adds checks on this pair to the fixed suite.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub output: Output,
}

/// What a successful run concluded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    TestFailure,
}

/// Parses `args` (program name first), runs, and maps errors to exit codes.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let config = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(&config) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::TestFailure) => ExitCode::from(EXIT_TEST_FAILURE),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

pub fn run(config: &RunConfig) -> Result<Outcome> {
    match &config.command {
        Command::Report(a) => report(a),
        Command::Truncate(a) => truncate_cmd(a),
        Command::Sample(a) => sample(a),
        Command::Code(a) => code(a),
        Command::Bounds(a) => bounds(a),
        Command::Verify(a) => verify(a),
    }
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn usage(msg: String) -> Error {
    Error::Usage(msg)
}

/// Long-format `quantity,key,value` writer.
struct Long {
    w: csv::Writer<Box<dyn Write>>,
}

impl Long {
    fn new(path: Option<&Path>) -> Result<Self> {
        let mut w = csv::Writer::from_writer(open_out(path)?);
        w.write_record(["quantity", "key", "value"])?;
        Ok(Self { w })
    }

    fn row(&mut self, quantity: &str, key: impl Display, value: impl Display) -> Result<()> {
        self.w.write_record([quantity.to_owned(), key.to_string(), value.to_string()])?;
        Ok(())
    }

    fn finish(mut self) -> Result<()> {
        self.w.flush()?;
        Ok(())
    }
}

fn report(a: &ReportArgs) -> Result<Outcome> {
    let pair = spec_file::load(&a.spec)?;
    let mut out = Long::new(a.output.out.as_deref())?;
    for f in FGenerator::ALL {
        let d = pair.divergence_report(f)?;
        if f == FGenerator::Kl {
            out.row("divergence", "kl_bits", d.kl_bits)?;
            out.row("divergence", "d_inf_bits", d.d_inf_bits)?;
        }
        out.row("divergence", format!("d_f_{}", f.name()), d.d_f)?;
    }
    let sup = pair.sup_ratio();
    let top = if sup.is_finite() { 1.2 * sup } else { 10.0 };
    let points = a.grid.max(2);
    for i in 0..points {
        let h = top * i as f64 / (points - 1) as f64;
        let s = pair.level_stats(h)?;
        out.row("w_p", h, s.w_p)?;
        out.row("w_q", h, s.w_q)?;
        out.row("big_w_p", h, s.big_w_p)?;
        out.row("s_p", h, s.s_p)?;
    }
    out.finish()?;
    Ok(Outcome::Success)
}

fn truncate_cmd(a: &TruncateArgs) -> Result<Outcome> {
    let pair = spec_file::load(&a.spec)?;
    let mut out = Long::new(a.output.out.as_deref())?;
    match &pair {
        PairedDistribution::Finite(fp) => {
            let tt = match (a.m, a.eps) {
                (Some(m), _) => truncate(fp, m)?,
                (None, Some(eps)) => optimal_truncation(fp, eps)?,
                (None, None) => return Err(usage("one of --m or --eps is required".into())),
            };
            out.row("truncation", "m", tt.m())?;
            out.row("truncation", "w_p_at_m", tt.w_p_at_m())?;
            out.row("truncation", "m_tilde", tt.m_tilde())?;
            out.row("truncation", "tv_to_target", tt.tv_to_target().unwrap_or(f64::NAN))?;
            out.row("truncation", "tv_direct", tt.tv_direct())?;
            for ((sym, qm), r) in fp.support().iter().zip(tt.masses()).zip(tt.truncated_ratios()) {
                out.row("q_m", sym, qm)?;
                out.row("ratio_m", sym, r)?;
            }
        }
        PairedDistribution::Gaussian(gp) => {
            let m = a.m.ok_or(Error::FiniteOnly("truncation by tolerance"))?;
            let tt = truncate(gp, m)?;
            out.row("truncation", "m", tt.m())?;
            out.row("truncation", "w_p_at_m", tt.w_p_at_m())?;
            out.row("truncation", "m_tilde", tt.m_tilde())?;
            let s = gp.level_stats(tt.m_tilde())?;
            out.row("truncation", "tv_to_target", s.s_p)?;
        }
    }
    out.finish()?;
    Ok(Outcome::Success)
}

struct Plan {
    method: Method,
    k: Option<u64>,
    policy: FailPolicy,
    n: u64,
    seed: u64,
    trace: bool,
}

fn plan(method: Method, k: Option<u64>, policy: FailPolicy, n: u64, seed: u64, trace: bool) -> Result<Plan> {
    match method {
        Method::RejectionBudgeted | Method::AstarDepth if k.is_none() => {
            return Err(usage(format!("--k is required for method {method}")))
        }
        Method::Rejection | Method::Astar if k.is_some() => {
            return Err(usage(format!("--k does not apply to method {method}")))
        }
        _ => {}
    }
    if n == 0 {
        return Err(usage("--n must be at least 1".into()));
    }
    Ok(Plan {
        method,
        k,
        policy,
        n,
        seed,
        trace,
    })
}

type Runs<X> = (Vec<SampleRecord<X>>, Option<Vec<crate::samplers::TraceStep<X>>>);

fn run_sampler<M: RatioModel>(target: &M, p: &Plan) -> Result<Runs<M::Point>> {
    let recs: Vec<Result<SampleRecord<M::Point>>> = crate::parallel::replicate(p.n, |rep| {
        let mut s = Streams::new(p.seed, rep);
        let trace = p.trace && rep == 0;
        match p.method {
            Method::Rejection => rejection_sample(target, None, p.policy, &mut s),
            Method::RejectionBudgeted => rejection_sample(target, p.k, p.policy, &mut s),
            Method::Astar => astar_global(target, &mut s, trace),
            Method::AstarDepth => astar_depth_limited(target, p.k.expect("checked"), &mut s, trace),
        }
    });
    let mut recs: Vec<SampleRecord<M::Point>> = recs.into_iter().collect::<Result<_>>()?;
    let trace = recs.first_mut().and_then(|r| r.trace.take());
    Ok((recs, trace))
}

fn write_records<X: Display, W: Write>(recs: &[SampleRecord<X>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["replication", "index", "sample", "examined", "method", "budget"])?;
    for (i, r) in recs.iter().enumerate() {
        w.write_record([
            i.to_string(),
            r.index.to_string(),
            r.sample.to_string(),
            r.examined.to_string(),
            r.method.to_string(),
            r.budget.map(|b| b.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn relabel(recs: Vec<SampleRecord<usize>>, support: &[usize]) -> Vec<SampleRecord<usize>> {
    recs.into_iter()
        .map(|mut r| {
            r.sample = support[r.sample];
            r
        })
        .collect()
}

fn finite_samples(fp: &FinitePair, a: &SampleArgs, p: &Plan) -> Result<Runs<usize>> {
    match (a.m, a.eps) {
        (Some(m), _) => run_sampler(&truncate(fp, m)?, p),
        (None, Some(eps)) => run_sampler(&optimal_truncation(fp, eps)?, p),
        (None, None) => run_sampler(fp, p),
    }
}

fn gaussian_samples(gp: &GaussianPair, a: &SampleArgs, p: &Plan) -> Result<Runs<f64>> {
    match (a.m, a.eps) {
        (Some(m), _) => run_sampler(&truncate(gp, m)?, p),
        (None, Some(_)) => Err(Error::FiniteOnly("truncation by tolerance")),
        (None, None) => run_sampler(gp, p),
    }
}

fn sample(a: &SampleArgs) -> Result<Outcome> {
    let pair = spec_file::load(&a.spec)?;
    let p = plan(a.method, a.k, a.policy, a.n, a.seed, a.trace.is_some())?;
    match &pair {
        PairedDistribution::Finite(fp) => {
            let (recs, trace) = finite_samples(fp, a, &p)?;
            if let Some(path) = &a.law {
                let symbols: Vec<usize> = recs.iter().map(|r| r.sample).collect();
                let to_q = empirical_law(&symbols, fp.q())?;
                let to_p = empirical_law(&symbols, fp.p())?;
                let mut out = Long::new(Some(path))?;
                for (i, sym) in fp.support().iter().enumerate() {
                    out.row("count", sym, to_q.counts[i])?;
                    out.row("empirical", sym, to_q.masses[i])?;
                    out.row("target", sym, fp.q()[i])?;
                    out.row("proposal", sym, fp.p()[i])?;
                }
                out.row("tv", "target", to_q.tv)?;
                out.row("tv", "proposal", to_p.tv)?;
                out.row("tolerance", "mc", to_q.tolerance)?;
                out.finish()?;
            }
            if let (Some(path), Some(steps)) = (&a.trace, trace) {
                let steps: Vec<_> = steps
                    .into_iter()
                    .map(|mut s| {
                        s.x = fp.support()[s.x];
                        s
                    })
                    .collect();
                write_trace(&steps, File::create(path)?)?;
            }
            write_records(&relabel(recs, fp.support()), open_out(a.output.out.as_deref())?)?;
        }
        PairedDistribution::Gaussian(gp) => {
            if a.law.is_some() {
                return Err(Error::FiniteOnly("--law"));
            }
            let (recs, trace) = gaussian_samples(gp, a, &p)?;
            if let (Some(path), Some(steps)) = (&a.trace, trace) {
                write_trace(&steps, File::create(path)?)?;
            }
            write_records(&recs, open_out(a.output.out.as_deref())?)?;
        }
    }
    Ok(Outcome::Success)
}

fn code(a: &CodeArgs) -> Result<Outcome> {
    if !matches!(a.method, Method::Astar | Method::AstarDepth) {
        return Err(usage("code supports --method astar or astar-depth".into()));
    }
    let pair = spec_file::load(&a.spec)?;
    let p = plan(a.method, a.k, FailPolicy::default(), a.n, a.seed, false)?;
    let indices: Vec<u64> = match &pair {
        PairedDistribution::Finite(fp) => run_sampler(fp, &p)?.0.iter().map(|r| r.index).collect(),
        PairedDistribution::Gaussian(gp) => run_sampler(gp, &p)?.0.iter().map(|r| r.index).collect(),
    };
    let i_bits = match a.dkl {
        Some(d) => d,
        None => pair.divergence_report(FGenerator::Kl)?.kl_bits,
    };
    let r = rate_report_indices(&indices, i_bits)?;
    let mut bits = 0usize;
    for &n in &indices {
        bits += elias_delta_len(n)?;
    }
    let mut out = Long::new(a.output.out.as_deref())?;
    out.row("rate", "n", r.n)?;
    out.row("rate", "i_bits", r.i_bits)?;
    out.row("rate", "lambda", r.lambda)?;
    out.row("rate", "log2_zeta", r.log2_zeta)?;
    out.row("rate", "entropy_bits", r.entropy_bits)?;
    out.row("rate", "mean_ideal_bits", r.mean_ideal_bits)?;
    out.row("rate", "ideal_std_error", r.ideal_std_error)?;
    out.row("rate", "mean_elias_bits", r.mean_elias_bits)?;
    out.row("rate", "elias_overhead_bits", r.mean_elias_bits - r.mean_ideal_bits)?;
    out.row("rate", "zeta_bound", r.zeta_bound)?;
    out.row("rate", "rate_bound", r.rate_bound)?;
    out.row("rate", "within_zeta_bound", r.within_zeta_bound)?;
    out.row("rate", "within_rate_bound", r.within_rate_bound)?;
    out.row("bitstream", "bits", bits)?;
    out.row("bitstream", "bytes", bits.div_ceil(8))?;
    out.finish()?;
    Ok(Outcome::Success)
}

fn bounds(a: &BoundsArgs) -> Result<Outcome> {
    let pair = a.spec.as_deref().map(spec_file::load).transpose()?;
    let d_kl = match (a.dkl, &pair) {
        (Some(d), _) => d,
        (None, Some(p)) => p.divergence_report(FGenerator::Kl)?.kl_bits,
        (None, None) => return Err(usage("--dkl or --spec is required".into())),
    };
    let d_f = match (a.df, &pair, a.generator) {
        (Some(d), _, _) => d,
        (None, Some(p), f) => p.divergence_report(f)?.d_f,
        (None, None, FGenerator::Kl) => d_kl,
        (None, None, f) => return Err(usage(format!("--df or --spec is required for generator {}", f.name()))),
    };
    let reports = all_reports(d_f, a.generator, d_kl, a.eps, a.gamma)?;
    write_reports(&reports, open_out(a.output.out.as_deref())?)?;
    Ok(Outcome::Success)
}

fn verify(a: &VerifyArgs) -> Result<Outcome> {
    let pair = a.spec.as_deref().map(spec_file::load).transpose()?;
    let report = run_suite(a.seed, pair.as_ref())?;
    report.write_csv(open_out(a.output.out.as_deref())?)?;
    for r in report.rows.iter().filter(|r| !r.pass) {
        eprintln!("FAIL {}: statistic {} vs bound {}", r.test_id, r.statistic, r.bound);
    }
    Ok(if report.all_pass() {
        Outcome::Success
    } else {
        Outcome::TestFailure
    })
}
