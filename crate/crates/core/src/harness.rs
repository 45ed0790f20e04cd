//! Monte Carlo driver and comparison against Born predictions.
//!
//! Every run draws a fresh [`Sheet`], picks a context per [`Policy`], and
//! tallies the revealed outcome. Runs can be split into partitions, each with
//! its own derived [`RandomStream`]; tallies merge by addition, so a parallel
//! run equals the sequential concatenation of its partitions.

use std::fmt;
use std::ops::{Add, AddAssign};
use std::str::FromStr;

use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::baseline::LocalAssignment;
use crate::error::{Error, Result};
use crate::polarization::{
    born_distribution, expand, mermin_combination, BornDistribution, Context, StateVector,
    SystemOutcome,
};
use crate::rng::RandomStream;
use crate::sampler::SheetSampler;

/// Default total-variation threshold.
pub const DEFAULT_TOLERANCE: f64 = 0.01;

/// Upper-tail quantile used for the chi-square check.
pub const CHI_SQUARE_LEVEL: f64 = 0.999;

/// How the experimenter picks the system measurement for each run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Policy {
    FixedContext(Context),
    /// One draw from the run's stream after the sheet's eight draws; the top
    /// three bits select the context index.
    UniformRandom,
    /// Context `run_index % 8` in canonical order.
    RoundRobin,
}

impl Policy {
    fn choose(&self, run_index: u64, rng: &mut RandomStream) -> Context {
        match self {
            Policy::FixedContext(c) => *c,
            Policy::UniformRandom => Context::ALL[rng.next_index8()],
            Policy::RoundRobin => Context::ALL[(run_index % 8) as usize],
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::FixedContext(c) => write!(f, "fixed:{c}"),
            Policy::UniformRandom => f.write_str("uniform"),
            Policy::RoundRobin => f.write_str("round-robin"),
        }
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Policy::UniformRandom),
            "round-robin" => Ok(Policy::RoundRobin),
            _ => match s.strip_prefix("fixed:") {
                Some(ctx) => Ok(Policy::FixedContext(ctx.parse()?)),
                None => Err(Error::InvalidConfig(format!(
                    "unknown policy {s:?}; expected fixed:CTX, uniform or round-robin"
                ))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    runs: u64,
    seed: u64,
    policy: Policy,
    tolerance: f64,
}

impl RunConfig {
    /// Requires `runs >= 1` and `tolerance` in `(0, 1)`.
    pub fn new(runs: u64, seed: u64, policy: Policy, tolerance: f64) -> Result<RunConfig> {
        if runs == 0 {
            return Err(Error::InvalidConfig("runs must be at least 1".into()));
        }
        if !(tolerance > 0.0 && tolerance < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "tolerance must lie in (0, 1), got {tolerance}"
            )));
        }
        Ok(RunConfig { runs, seed, policy, tolerance })
    }

    pub fn runs(&self) -> u64 {
        self.runs
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }
}

/// Counts per (context, outcome). Outcomes are stored by canonical index, so
/// only basis-consistent pairs are representable.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TallyTable {
    counts: [[u64; 8]; 8],
}

impl TallyTable {
    pub fn new() -> TallyTable {
        TallyTable::default()
    }

    pub fn increment(&mut self, context: Context, outcome_index: usize) {
        self.counts[context.index()][outcome_index] += 1;
    }

    pub fn record(&mut self, context: Context, outcome: &SystemOutcome) -> Result<()> {
        let index = context.outcome_index(outcome).ok_or_else(|| {
            Error::InvalidConfig(format!("outcome {outcome} is not a {context} outcome"))
        })?;
        self.increment(context, index);
        Ok(())
    }

    pub fn count(&self, context: Context, outcome: &SystemOutcome) -> u64 {
        context
            .outcome_index(outcome)
            .map_or(0, |i| self.counts[context.index()][i])
    }

    /// Counts for `context` in canonical outcome order.
    pub fn counts(&self, context: Context) -> &[u64; 8] {
        &self.counts[context.index()]
    }

    pub fn runs_per_context(&self, context: Context) -> u64 {
        self.counts[context.index()].iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// `(context, outcome, count)` for every representable pair, in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (Context, SystemOutcome, u64)> + '_ {
        Context::ALL.into_iter().flat_map(move |c| {
            c.outcomes()
                .zip(self.counts[c.index()])
                .map(move |(o, n)| (c, o, n))
                .collect::<Vec<_>>()
        })
    }
}

impl AddAssign<&TallyTable> for TallyTable {
    fn add_assign(&mut self, rhs: &TallyTable) {
        for (row, other) in self.counts.iter_mut().zip(rhs.counts.iter()) {
            for (a, b) in row.iter_mut().zip(other) {
                *a += b;
            }
        }
    }
}

impl Add for TallyTable {
    type Output = TallyTable;

    fn add(mut self, rhs: TallyTable) -> TallyTable {
        self += &rhs;
        self
    }
}

/// The half-open run range `[start, end)` handled by `partition` of `partitions`.
fn partition_range(runs: u64, partition: u64, partitions: u64) -> (u64, u64) {
    let base = runs / partitions;
    let extra = runs % partitions;
    let start = partition * base + partition.min(extra);
    let len = base + u64::from(partition < extra);
    (start, start + len)
}

/// Runs one partition of a Grandma-model simulation with the stream
/// `RandomStream::partition(seed, partition)`.
pub fn run_grandma_partition(
    config: &RunConfig,
    sampler: &SheetSampler,
    partition: u64,
    partitions: u64,
) -> TallyTable {
    let (start, end) = partition_range(config.runs, partition, partitions);
    let mut rng = RandomStream::partition(config.seed, partition);
    let mut tally = TallyTable::new();
    for run in start..end {
        let sheet = sampler.sample(&mut rng);
        let chosen = config.policy.choose(run, &mut rng);
        let outcome = sheet.reveal(chosen);
        let index = chosen.outcome_index(&outcome).expect("sheet entries are consistent");
        tally.increment(chosen, index);
    }
    tally
}

/// Single-stream simulation; identical to one partition.
pub fn run_grandma(config: &RunConfig, state: &StateVector) -> TallyTable {
    run_grandma_partition(config, &SheetSampler::new(state), 0, 1)
}

/// Splits the runs across `partitions` workers and merges their tallies.
pub fn run_grandma_parallel(config: &RunConfig, state: &StateVector, partitions: u64) -> TallyTable {
    let partitions = partitions.clamp(1, config.runs);
    let sampler = SheetSampler::new(state);
    (0..partitions)
        .into_par_iter()
        .map(|k| run_grandma_partition(config, &sampler, k, partitions))
        .reduce(TallyTable::new, |a, b| a + b)
}

/// Control arm: every run records the outcome fixed by `assignment`.
pub fn run_noncontextual(config: &RunConfig, assignment: &LocalAssignment) -> TallyTable {
    let mut rng = RandomStream::new(config.seed);
    let mut tally = TallyTable::new();
    for run in 0..config.runs {
        let chosen = config.policy.choose(run, &mut rng);
        let outcome = assignment.outcome(chosen);
        let index = chosen.outcome_index(&outcome).expect("assignment outcomes are consistent");
        tally.increment(chosen, index);
    }
    tally
}

/// Goodness-of-fit figures for one evaluated context.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContextStats {
    pub tv: f64,
    /// Pearson statistic over the Born support only.
    pub chisq: f64,
    pub df: usize,
    /// Upper [`CHI_SQUARE_LEVEL`] quantile for `df`.
    pub chisq_critical: f64,
    pub chisq_pass: bool,
    /// Counts on outcomes of zero Born probability.
    pub out_of_support: u64,
    /// `tv <= tolerance` and no out-of-support counts.
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContextRecord {
    pub context: Context,
    pub runs: u64,
    /// `None` when the context was never measured.
    pub stats: Option<ContextStats>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MerminEstimate {
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub tolerance: f64,
    pub contexts: [ContextRecord; 8],
    pub mermin: Option<MerminEstimate>,
}

impl ComparisonReport {
    /// True iff at least one context was evaluated and every evaluated one passes.
    pub fn pass(&self) -> bool {
        let mut evaluated = self.contexts.iter().filter_map(|r| r.stats).peekable();
        evaluated.peek().is_some() && evaluated.all(|s| s.pass)
    }

    pub fn record(&self, context: Context) -> &ContextRecord {
        &self.contexts[context.index()]
    }

    /// True iff every evaluated context is below its chi-square quantile.
    pub fn chisq_pass(&self) -> bool {
        self.contexts.iter().filter_map(|r| r.stats).all(|s| s.chisq_pass)
    }
}

/// Upper quantile of the chi-square distribution; zero for `df == 0`.
pub fn chi_square_quantile(df: usize, level: f64) -> f64 {
    if df == 0 {
        return 0.0;
    }
    ChiSquared::new(df as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(level)
}

fn context_stats(counts: &[u64; 8], dist: &BornDistribution, tolerance: f64) -> ContextStats {
    let runs: u64 = counts.iter().sum();
    let n = runs as f64;
    let mut tv = 0.0;
    let mut chisq = 0.0;
    let mut out_of_support = 0;
    for (i, (&count, &p)) in counts.iter().zip(dist.probabilities()).enumerate() {
        let freq = count as f64 / n;
        tv += (freq - p).abs();
        if dist.is_supported(i) {
            let expected = n * p;
            chisq += (count as f64 - expected).powi(2) / expected;
        } else {
            out_of_support += count;
        }
    }
    tv *= 0.5;
    let df = dist.support_size() - 1;
    let chisq_critical = chi_square_quantile(df, CHI_SQUARE_LEVEL);
    ContextStats {
        tv,
        chisq,
        df,
        chisq_critical,
        chisq_pass: chisq <= chisq_critical,
        out_of_support,
        pass: tv <= tolerance && out_of_support == 0,
    }
}

/// Compares a tally with the Born predictions of `state`.
pub fn compare(tally: &TallyTable, state: &StateVector, config: &RunConfig) -> ComparisonReport {
    compare_with_tolerance(tally, state, config.tolerance)
}

pub fn compare_with_tolerance(tally: &TallyTable, state: &StateVector, tolerance: f64) -> ComparisonReport {
    let contexts = Context::ALL.map(|context| {
        let runs = tally.runs_per_context(context);
        let stats = (runs > 0).then(|| {
            let dist = born_distribution(&expand(state, context));
            context_stats(tally.counts(context), &dist, tolerance)
        });
        ContextRecord { context, runs, stats }
    });
    ComparisonReport {
        tolerance,
        contexts,
        mermin: estimate_mermin(tally).ok(),
    }
}

/// Empirical Mermin combination with propagated standard error.
///
/// Each context mean is over ±1 parity products; its variance is taken as
/// `1 - mean²`, so deterministic contexts contribute exactly zero.
pub fn estimate_mermin(tally: &TallyTable) -> Result<MerminEstimate> {
    let mut means = [0.0; 4];
    let mut variance = 0.0;
    for (slot, context) in means.iter_mut().zip(Context::MERMIN) {
        let runs = tally.runs_per_context(context);
        if runs == 0 {
            return Err(Error::MissingContext(context));
        }
        let signed: i64 = context
            .outcomes()
            .zip(tally.counts(context))
            .map(|(o, &n)| i64::from(o.parity_product()) * n as i64)
            .sum();
        let mean = signed as f64 / runs as f64;
        *slot = mean;
        variance += (1.0 - mean * mean) / runs as f64;
    }
    Ok(MerminEstimate {
        value: mermin_combination(means),
        stderr: variance.max(0.0).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseline::{enumerate_assignments, search};
    use crate::polarization::ghz_state;

    fn so(s: &str) -> SystemOutcome {
        s.parse().unwrap()
    }

    fn cfg(runs: u64, seed: u64, policy: Policy) -> RunConfig {
        RunConfig::new(runs, seed, policy, DEFAULT_TOLERANCE).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(RunConfig::new(0, 1, Policy::RoundRobin, 0.01).is_err());
        assert!(RunConfig::new(1, 1, Policy::RoundRobin, 0.0).is_err());
        assert!(RunConfig::new(1, 1, Policy::RoundRobin, 1.0).is_err());
        assert!(RunConfig::new(1, 1, Policy::RoundRobin, f64::NAN).is_err());
        assert!(RunConfig::new(1, 1, Policy::RoundRobin, 0.5).is_ok());
    }

    #[test]
    fn policy_tokens() {
        for p in [Policy::FixedContext(Context::YXY), Policy::UniformRandom, Policy::RoundRobin] {
            assert_eq!(p.to_string().parse::<Policy>().unwrap(), p);
        }
        assert!("fixed:zzz".parse::<Policy>().is_err());
        assert!("random".parse::<Policy>().is_err());
    }

    #[test]
    fn single_run_lands_on_support() {
        let tally = run_grandma(&cfg(1, 3, Policy::FixedContext(Context::YYX)), &ghz_state());
        assert_eq!(tally.total(), 1);
        let support = [so("R L H'"), so("L R H'"), so("R R V'"), so("L L V'")];
        let hits: u64 = support.iter().map(|o| tally.count(Context::YYX, o)).sum();
        assert_eq!(hits, 1);
    }

    #[test]
    fn xxx_counts_have_even_parity() {
        let tally = run_grandma(&cfg(5_000, 8, Policy::FixedContext(Context::XXX)), &ghz_state());
        for (c, o, n) in tally.iter() {
            if n > 0 {
                assert_eq!(c, Context::XXX);
                assert_eq!(o.parity_product(), 1);
            }
        }
    }

    #[test]
    fn deterministic_tallies() {
        let c = cfg(2_000, 99, Policy::UniformRandom);
        assert_eq!(run_grandma(&c, &ghz_state()), run_grandma(&c, &ghz_state()));
    }

    #[test]
    fn partitions_cover_all_runs() {
        for runs in [1u64, 7, 8, 1001] {
            for parts in 1..=9u64.min(runs) {
                let mut next = 0;
                for k in 0..parts {
                    let (s, e) = partition_range(runs, k, parts);
                    assert_eq!(s, next);
                    next = e;
                }
                assert_eq!(next, runs);
            }
        }
    }

    #[test]
    fn parallel_equals_sequential_partitions() {
        let ghz = ghz_state();
        let c = cfg(10_001, 4, Policy::RoundRobin);
        let sampler = SheetSampler::new(&ghz);
        let mut sequential = TallyTable::new();
        for k in 0..6 {
            sequential += &run_grandma_partition(&c, &sampler, k, 6);
        }
        assert_eq!(run_grandma_parallel(&c, &ghz, 6), sequential);
        assert_eq!(run_grandma_parallel(&c, &ghz, 1), run_grandma(&c, &ghz));
        assert_eq!(sequential.total(), 10_001);
    }

    #[test]
    fn out_of_support_count_fails() {
        let mut tally = TallyTable::new();
        tally.record(Context::YYX, &so("R R H'")).unwrap();
        let report = compare_with_tolerance(&tally, &ghz_state(), 0.01);
        let stats = report.record(Context::YYX).stats.unwrap();
        assert_eq!(stats.out_of_support, 1);
        assert!(!stats.pass);
        assert!(!report.pass());
    }

    #[test]
    fn record_rejects_inconsistent_outcome() {
        let mut tally = TallyTable::new();
        assert!(tally.record(Context::YYX, &so("H' R H'")).is_err());
        assert_eq!(tally.total(), 0);
    }

    #[test]
    fn empty_tally_is_not_a_pass() {
        let report = compare_with_tolerance(&TallyTable::new(), &ghz_state(), 0.01);
        assert!(!report.pass());
        assert!(report.contexts.iter().all(|r| r.stats.is_none()));
        assert!(report.mermin.is_none());
    }

    #[test]
    fn mermin_estimates() {
        let grandma = run_grandma(&cfg(4_000, 12, Policy::RoundRobin), &ghz_state());
        let est = estimate_mermin(&grandma).unwrap();
        assert_eq!(est.value, 4.0);
        assert_eq!(est.stderr, 0.0);

        let best = search(&enumerate_assignments()).best_assignment;
        let classical = run_noncontextual(&cfg(400, 1, Policy::RoundRobin), &best);
        assert_eq!(estimate_mermin(&classical).unwrap().value, 2.0);

        let mut partial = TallyTable::new();
        for c in [Context::XXX, Context::XYY, Context::YYX] {
            partial.increment(c, 0);
        }
        assert_eq!(estimate_mermin(&partial), Err(Error::MissingContext(Context::YXY)));
        assert!(Error::MissingContext(Context::YXY).to_string().contains("yxy"));
    }

    #[test]
    fn noncontextual_all_plus_yyx() {
        let ones = LocalAssignment::from_index(0).unwrap();
        let c = cfg(37, 0, Policy::FixedContext(Context::YYX));
        let tally = run_noncontextual(&c, &ones);
        assert_eq!(tally.count(Context::YYX, &so("R R H'")), 37);
        assert_eq!(run_noncontextual(&c, &ones), tally);
    }

    #[test]
    fn chi_square_quantiles_match_tables() {
        // Published table values for the 0.999 quantile.
        assert!((chi_square_quantile(3, 0.999) - 16.266).abs() < 1e-3);
        assert!((chi_square_quantile(7, 0.999) - 24.322).abs() < 1e-3);
        assert_eq!(chi_square_quantile(0, 0.999), 0.0);
    }
}
