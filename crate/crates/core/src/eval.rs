//! Metrics, estimation-error statistics, stage timing and k-sweeps.

use std::io::Write;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

use crate::dataset::{split_train_test, InteractionDataset};
use crate::error::{Error, Result};
use crate::recommender::{top_n, TopNOptions};
use crate::similarity::{chernoff_delta, SimilarityMatrix};
use crate::strategy::{BuildContext, Built, Method, SimilarityStrategy, StrategyRegistry};
use crate::walksim::{TimeoutPolicy, DEFAULT_MAX_HOPS, DEFAULT_RHO};
use crate::{fmt, rng, ItemId, UserId};

pub const DEFAULT_ALPHAS: [f64; 3] = [0.03, 0.04, 0.05];
pub const DEFAULT_N: usize = 10;
const AE_BINS: usize = 100;

/// `|recommended ∩ relevant| / |recommended|`. `relevant` must be sorted.
pub fn precision_at_n(recommended: &[ItemId], relevant: &[ItemId]) -> Result<f64> {
    if recommended.is_empty() {
        return Err(Error::UndefinedPrecision);
    }
    let hits = recommended.iter().filter(|i| relevant.binary_search(i).is_ok()).count();
    Ok(hits as f64 / recommended.len() as f64)
}

/// `100 · (baseline − pp) / baseline`; negative when PP-IBTN does better.
pub fn precision_loss(pp_precision: f64, baseline_precision: f64) -> Result<f64> {
    if baseline_precision <= 0.0 {
        return Err(Error::UndefinedLoss);
    }
    Ok(100.0 * (baseline_precision - pp_precision) / baseline_precision)
}

/// `1 − δ(k, α)`, the guaranteed coverage for `k` hash functions, floored at 0.
pub fn theoretical_coverage(k: u64, alpha: f64) -> f64 {
    (1.0 - chernoff_delta(k, alpha)).max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AeStats {
    pub samples: usize,
    pub alphas: Vec<f64>,
    /// Empirical `Pr[AE ≤ α]` per alpha.
    pub coverage: Vec<f64>,
    pub mean: f64,
    pub p50: f64,
    pub p90: f64,
    pub p99: f64,
    pub max: f64,
    /// `AE_BINS` equal-width bins over `[0, 1]`; the last bin is closed.
    pub histogram: Vec<u64>,
}

impl AeStats {
    pub fn write_histogram_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        write_histogram_csv(&self.histogram, w)
    }
}

pub fn write_histogram_csv<W: Write>(histogram: &[u64], mut w: W) -> std::io::Result<()> {
    writeln!(w, "bin_low,bin_high,count")?;
    let width = 1.0 / histogram.len() as f64;
    for (b, count) in histogram.iter().enumerate() {
        writeln!(
            w,
            "{},{},{}",
            fmt::sig10(b as f64 * width),
            fmt::sig10((b + 1) as f64 * width),
            count
        )?;
    }
    Ok(())
}

/// Absolute errors over every pair stored in either matrix (absent = 0).
pub fn absolute_errors(estimated: &SimilarityMatrix, exact: &SimilarityMatrix) -> Result<Vec<f64>> {
    if estimated.n_items() != exact.n_items() {
        return Err(Error::MismatchedUniverse(estimated.n_items(), exact.n_items()));
    }
    let mut errors = Vec::with_capacity(exact.nnz().max(estimated.nnz()));
    for i in 0..exact.n_items() as ItemId {
        let (a, b) = (estimated.neighbors(i), exact.neighbors(i));
        let (mut x, mut y) = (a.partition_point(|&(j, _)| j <= i), b.partition_point(|&(j, _)| j <= i));
        while x < a.len() || y < b.len() {
            let ja = a.get(x).map_or(ItemId::MAX, |e| e.0);
            let jb = b.get(y).map_or(ItemId::MAX, |e| e.0);
            if ja == jb {
                errors.push((a[x].1 - b[y].1).abs());
                x += 1;
                y += 1;
            } else if ja < jb {
                errors.push(a[x].1);
                x += 1;
            } else {
                errors.push(b[y].1);
                y += 1;
            }
        }
    }
    Ok(errors)
}

pub fn ae_statistics(estimated: &SimilarityMatrix, exact: &SimilarityMatrix, alphas: &[f64]) -> Result<AeStats> {
    Ok(summarize_errors(absolute_errors(estimated, exact)?, alphas))
}

pub fn summarize_errors(mut errors: Vec<f64>, alphas: &[f64]) -> AeStats {
    errors.sort_by(f64::total_cmp);
    let n = errors.len();
    let quantile = |q: f64| {
        if n == 0 {
            0.0
        } else {
            errors[((q * n as f64).ceil() as usize).clamp(1, n) - 1]
        }
    };
    let coverage = alphas
        .iter()
        .map(|&a| {
            if n == 0 {
                1.0
            } else {
                errors.partition_point(|&e| e <= a) as f64 / n as f64
            }
        })
        .collect();
    let mut histogram = vec![0u64; AE_BINS];
    for &e in &errors {
        histogram[((e * AE_BINS as f64) as usize).min(AE_BINS - 1)] += 1;
    }
    AeStats {
        samples: n,
        alphas: alphas.to_vec(),
        coverage,
        mean: if n == 0 { 0.0 } else { errors.iter().sum::<f64>() / n as f64 },
        p50: quantile(0.5),
        p90: quantile(0.9),
        p99: quantile(0.99),
        max: errors.last().copied().unwrap_or(0.0),
        histogram,
    }
}

fn median(mut xs: Vec<Duration>) -> Duration {
    xs.sort();
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2
    }
}

/// Median wall time of `reps` runs of `stage` (at least 3), after one
/// untimed warm-up run.
pub fn time_similarity_stage<T>(reps: usize, mut stage: impl FnMut() -> Result<T>) -> Result<Duration> {
    if reps < 3 {
        return Err(Error::Domain("timing needs at least 3 repetitions".into()));
    }
    stage()?;
    let mut samples = Vec::with_capacity(reps);
    for _ in 0..reps {
        let start = Instant::now();
        let out = stage()?;
        samples.push(start.elapsed());
        drop(out);
    }
    Ok(median(samples))
}

/// Times two stages in the same process, interleaved in a seeded random
/// order, after one warm-up each. Returns the two medians.
pub fn compare_stage_times<A, B>(
    reps: usize,
    seed: u64,
    mut a: impl FnMut() -> Result<A>,
    mut b: impl FnMut() -> Result<B>,
) -> Result<(Duration, Duration)> {
    let mut run_a = || a().map(drop);
    let mut run_b = || b().map(drop);
    let medians = time_interleaved(reps, seed, &mut [&mut run_a, &mut run_b])?;
    Ok((medians[0], medians[1]))
}

/// Median wall time of each stage, `reps` runs apiece, all runs shuffled
/// together in a seeded order so slow drift in machine speed spreads evenly
/// over the stages. Each stage gets one untimed warm-up run first.
pub fn time_interleaved(
    reps: usize,
    seed: u64,
    stages: &mut [&mut dyn FnMut() -> Result<()>],
) -> Result<Vec<Duration>> {
    if reps < 3 {
        return Err(Error::Domain("timing needs at least 3 repetitions".into()));
    }
    for stage in stages.iter_mut() {
        stage()?;
    }
    let mut order: Vec<usize> = (0..stages.len()).flat_map(|s| std::iter::repeat(s).take(reps)).collect();
    order.shuffle(&mut rng::stream(seed, 0x7157));
    let mut samples = vec![Vec::with_capacity(reps); stages.len()];
    for s in order {
        let start = Instant::now();
        stages[s]()?;
        samples[s].push(start.elapsed());
    }
    Ok(samples.into_iter().map(median).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpearmanTest {
    pub rho: f64,
    /// One-sided p-value for a negative association.
    pub p_negative: f64,
    /// One-sided p-value for a positive association.
    pub p_positive: f64,
}

fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// Spearman rank correlation with t-approximation p-values (`n − 2` df).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<SpearmanTest> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::Domain("spearman needs two equal-length samples of size >= 3".into()));
    }
    let rho = pearson(&average_ranks(x), &average_ranks(y));
    let df = (x.len() - 2) as f64;
    if rho.abs() >= 1.0 {
        let (neg, pos) = if rho < 0.0 { (0.0, 1.0) } else { (1.0, 0.0) };
        return Ok(SpearmanTest {
            rho,
            p_negative: neg,
            p_positive: pos,
        });
    }
    let t = rho * (df / (1.0 - rho * rho)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    Ok(SpearmanTest {
        rho,
        p_negative: dist.cdf(t),
        p_positive: dist.sf(t),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y ≈ slope · x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Domain("linear fit needs two equal-length samples of size >= 2".into()));
    }
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("x values are constant".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    Ok(LinearFit {
        slope,
        intercept,
        r_squared: if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot },
    })
}

/// Total-variation distance between a count histogram and the uniform distribution.
pub fn tv_from_uniform(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 || counts.is_empty() {
        return 0.0;
    }
    let p = 1.0 / counts.len() as f64;
    0.5 * counts.iter().map(|&c| (c as f64 / total as f64 - p).abs()).sum::<f64>()
}

/// Pearson chi-square goodness-of-fit p-value against uniform.
pub fn chi_square_uniform_p(counts: &[u64]) -> Result<f64> {
    if counts.len() < 2 {
        return Err(Error::Domain("chi-square needs at least 2 categories".into()));
    }
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    if expected == 0.0 {
        return Err(Error::Domain("chi-square needs observations".into()));
    }
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let dist = ChiSquared::new((counts.len() - 1) as f64).expect("df > 0");
    Ok(dist.sf(stat))
}

/// Which items count as relevant when scoring a recommendation list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relevance {
    /// Held-out test likes; train likes are never recommended.
    Test,
    /// Train and test likes; train likes stay in the candidate set.
    AllRated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrecisionOptions {
    pub n: usize,
    pub pad_with_zero: bool,
    pub include_cold_start: bool,
    pub relevance: Relevance,
}

impl Default for PrecisionOptions {
    fn default() -> Self {
        PrecisionOptions {
            n: DEFAULT_N,
            pad_with_zero: true,
            include_cold_start: true,
            relevance: Relevance::Test,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrecisionSummary {
    /// Arithmetic mean over evaluated users.
    pub mean: f64,
    pub evaluated: usize,
    /// Users with nothing relevant to find.
    pub skipped_no_relevant: usize,
    /// Users whose recommendation list came back empty.
    pub skipped_empty_list: usize,
    /// Users with no train likes (evaluated unless excluded).
    pub cold_start: usize,
    pub skipped_cold_start: usize,
}

enum UserOutcome {
    Scored { precision: f64, cold: bool },
    NoRelevant,
    EmptyList,
    ColdExcluded,
}

/// Recommends for every user from `sims` and averages precision.
pub fn evaluate_precision(
    train: &InteractionDataset,
    test: &InteractionDataset,
    sims: &SimilarityMatrix,
    opts: PrecisionOptions,
) -> Result<PrecisionSummary> {
    let topn = TopNOptions {
        n: opts.n,
        pad_with_zero: opts.pad_with_zero,
        exclude_liked: opts.relevance == Relevance::Test,
    };
    let outcomes: Vec<UserOutcome> = (0..train.n_users() as UserId)
        .into_par_iter()
        .map(|u| -> Result<UserOutcome> {
            let likes = train.likes(u);
            let relevant: Vec<ItemId> = match opts.relevance {
                Relevance::Test => test.likes(u).to_vec(),
                Relevance::AllRated => {
                    let mut all: Vec<ItemId> = likes.iter().chain(test.likes(u)).copied().collect();
                    all.sort_unstable();
                    all
                }
            };
            if relevant.is_empty() {
                return Ok(UserOutcome::NoRelevant);
            }
            let cold = likes.is_empty();
            if cold && !opts.include_cold_start {
                return Ok(UserOutcome::ColdExcluded);
            }
            let list = top_n(u, likes, sims, topn, None)?;
            match precision_at_n(&list.item_ids(), &relevant) {
                Ok(precision) => Ok(UserOutcome::Scored { precision, cold }),
                Err(Error::UndefinedPrecision) => Ok(UserOutcome::EmptyList),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;

    let mut summary = PrecisionSummary {
        mean: 0.0,
        evaluated: 0,
        skipped_no_relevant: 0,
        skipped_empty_list: 0,
        cold_start: 0,
        skipped_cold_start: 0,
    };
    let mut sum = 0.0;
    for o in outcomes {
        match o {
            UserOutcome::Scored { precision, cold } => {
                sum += precision;
                summary.evaluated += 1;
                summary.cold_start += usize::from(cold);
            }
            UserOutcome::NoRelevant => summary.skipped_no_relevant += 1,
            UserOutcome::EmptyList => summary.skipped_empty_list += 1,
            UserOutcome::ColdExcluded => {
                summary.cold_start += 1;
                summary.skipped_cold_start += 1;
            }
        }
    }
    if summary.evaluated > 0 {
        summary.mean = sum / summary.evaluated as f64;
    }
    Ok(summary)
}

/// How the number of rounds / hash functions is chosen.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "values")]
pub enum KSpec {
    /// Fractions of the user count, `k = ceil(f · n)`.
    Fractions(Vec<f64>),
    Absolute(Vec<u64>),
}

impl KSpec {
    /// `(k, k / n)` for each configured value.
    pub fn resolve(&self, n_users: usize) -> Result<Vec<(u64, f64)>> {
        match self {
            KSpec::Fractions(fs) => fs
                .iter()
                .map(|&f| {
                    if f > 0.0 && f <= 1.0 {
                        let k = (f * n_users as f64).ceil().max(1.0) as u64;
                        Ok((k, f))
                    } else {
                        Err(Error::Domain(format!("k fraction {f} not in (0, 1]")))
                    }
                })
                .collect(),
            KSpec::Absolute(ks) => ks
                .iter()
                .map(|&k| {
                    if k >= 1 {
                        Ok((k, k as f64 / n_users as f64))
                    } else {
                        Err(Error::Domain("k must be >= 1".into()))
                    }
                })
                .collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            KSpec::Fractions(v) => v.is_empty(),
            KSpec::Absolute(v) => v.is_empty(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub dataset: String,
    pub ratio: f64,
    pub seeds: Vec<u64>,
    pub k: KSpec,
    /// Strategies compared against the exact baseline.
    pub strategies: Vec<String>,
    pub alphas: Vec<f64>,
    pub precision: PrecisionOptions,
    pub default_rho: f64,
    pub rho: Option<Vec<f64>>,
    pub max_hops: u64,
    pub exclude_self: bool,
    pub on_timeout: TimeoutPolicy,
    /// Timed builds per cell; the median is reported.
    pub timing_reps: usize,
}

impl ExperimentConfig {
    pub fn new(dataset: impl Into<String>, k: KSpec, seeds: Vec<u64>) -> Self {
        ExperimentConfig {
            dataset: dataset.into(),
            ratio: 0.8,
            seeds,
            k,
            strategies: vec!["union-normalized".into(), "paper-literal".into()],
            alphas: DEFAULT_ALPHAS.to_vec(),
            precision: PrecisionOptions::default(),
            default_rho: DEFAULT_RHO,
            rho: None,
            max_hops: DEFAULT_MAX_HOPS,
            exclude_self: false,
            on_timeout: TimeoutPolicy::Skip,
            timing_reps: 1,
        }
    }
}

/// One averaged configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub dataset: String,
    pub method: Method,
    pub mode: String,
    /// `None` for the exact baseline.
    pub k: Option<u64>,
    pub k_frac: Option<f64>,
    pub n: usize,
    pub seeds: Vec<u64>,
    pub precision: f64,
    /// Per-seed mean precisions, in seed order.
    pub precision_by_seed: Vec<f64>,
    pub precision_loss_pct: Option<f64>,
    pub sim_time_ms: f64,
    pub ae_mean: f64,
    pub ae_p50: f64,
    pub ae_p90: f64,
    pub ae_p99: f64,
    pub ae_max: f64,
    pub alphas: Vec<f64>,
    pub coverage: Vec<f64>,
    /// `1 − δ(k, α)`; present for rows with a `k`.
    pub bound: Option<Vec<f64>>,
    /// Totals over seeds.
    pub users_evaluated: usize,
    pub users_skipped: usize,
    pub cold_start_users: usize,
    pub pairs: f64,
    /// Timeout-skipped rounds, total over seeds.
    pub skipped_rounds: usize,
    #[serde(skip)]
    pub ae_histogram: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub config: ExperimentConfig,
    pub n_users: usize,
    pub n_items: usize,
    pub rows: Vec<ReportRow>,
}

struct Cell {
    precision: PrecisionSummary,
    time: Duration,
    ae: AeStats,
    pairs: usize,
    skipped_rounds: usize,
}

fn timed_build(
    strategy: &dyn SimilarityStrategy,
    train: &InteractionDataset,
    ctx: &BuildContext,
    reps: usize,
) -> Result<(Built, Duration)> {
    let mut samples = Vec::with_capacity(reps.max(1));
    let mut last = None;
    for _ in 0..reps.max(1) {
        let start = Instant::now();
        let built = strategy.build(train, ctx)?;
        samples.push(start.elapsed());
        last = Some(built);
    }
    Ok((last.expect("at least one build"), median(samples)))
}

/// Seed of the walk rounds used for split `split_seed` at `k` rounds.
pub fn walk_seed(split_seed: u64, k: u64) -> u64 {
    rng::derive_seed(split_seed ^ 0x3a1b_c0de, k)
}

/// Runs every `(seed, k, strategy)` cell plus the exact baseline per seed and
/// averages over seeds. Walk strategies at the same `(seed, k)` share rounds.
pub fn sweep_k(ds: &InteractionDataset, cfg: &ExperimentConfig, registry: &StrategyRegistry) -> Result<EvalReport> {
    if cfg.seeds.is_empty() {
        return Err(Error::Domain("at least one seed is required".into()));
    }
    if cfg.k.is_empty() {
        return Err(Error::Domain("at least one k value is required".into()));
    }
    let ks = cfg.k.resolve(ds.n_users())?;
    let baseline = registry.get("exact")?;
    let strategies: Vec<&dyn SimilarityStrategy> =
        cfg.strategies.iter().map(|s| registry.get(s)).collect::<Result<_>>()?;

    let mut base_cells = Vec::with_capacity(cfg.seeds.len());
    // cells[strategy][k][seed]
    let mut cells: Vec<Vec<Vec<Cell>>> = strategies.iter().map(|_| ks.iter().map(|_| Vec::new()).collect()).collect();
    for &seed in &cfg.seeds {
        let split = split_train_test(ds, cfg.ratio, seed)?;
        let ctx0 = context(cfg, 1, seed);
        let (base, base_time) = timed_build(baseline, &split.train, &ctx0, cfg.timing_reps)?;
        let exact = base.matrix;
        base_cells.push(Cell {
            precision: evaluate_precision(&split.train, &split.test, &exact, cfg.precision)?,
            time: base_time,
            ae: summarize_errors(Vec::new(), &cfg.alphas),
            pairs: exact.nnz(),
            skipped_rounds: 0,
        });
        for (si, strategy) in strategies.iter().enumerate() {
            for (ki, &(k, _)) in ks.iter().enumerate() {
                let ctx = context(cfg, k, walk_seed(seed, k));
                let (built, time) = timed_build(*strategy, &split.train, &ctx, cfg.timing_reps)?;
                cells[si][ki].push(Cell {
                    precision: evaluate_precision(&split.train, &split.test, &built.matrix, cfg.precision)?,
                    time,
                    ae: ae_statistics(&built.matrix, &exact, &cfg.alphas)?,
                    pairs: built.matrix.nnz(),
                    skipped_rounds: built.round_log.as_ref().map_or(0, |l| l.skipped.len()),
                });
            }
        }
    }

    let base_row = average_row(cfg, baseline, None, &base_cells, None);
    let base_precision = base_row.precision;
    let mut rows = vec![base_row];
    for (si, strategy) in strategies.iter().enumerate() {
        for (ki, &(k, frac)) in ks.iter().enumerate() {
            let kk = strategy.uses_k().then_some((k, frac));
            rows.push(average_row(cfg, *strategy, kk, &cells[si][ki], Some(base_precision)));
        }
    }
    Ok(EvalReport {
        config: cfg.clone(),
        n_users: ds.n_users(),
        n_items: ds.n_items(),
        rows,
    })
}

fn context(cfg: &ExperimentConfig, k: u64, seed: u64) -> BuildContext {
    BuildContext {
        k,
        seed,
        default_rho: cfg.default_rho,
        rho: cfg.rho.clone(),
        max_hops: cfg.max_hops,
        exclude_self: cfg.exclude_self,
        on_timeout: cfg.on_timeout,
    }
}

fn average_row(
    cfg: &ExperimentConfig,
    strategy: &dyn SimilarityStrategy,
    k: Option<(u64, f64)>,
    cells: &[Cell],
    baseline_precision: Option<f64>,
) -> ReportRow {
    let s = cells.len() as f64;
    let mean = |f: &dyn Fn(&Cell) -> f64| cells.iter().map(f).sum::<f64>() / s;
    let precision_by_seed: Vec<f64> = cells.iter().map(|c| c.precision.mean).collect();
    let precision = precision_by_seed.iter().sum::<f64>() / s;
    let precision_loss_pct = match baseline_precision {
        Some(b) => precision_loss(precision, b).ok(),
        None => precision_loss(precision, precision).ok(),
    };
    let coverage = (0..cfg.alphas.len()).map(|a| mean(&|c| c.ae.coverage[a])).collect();
    let mut ae_histogram = vec![0u64; AE_BINS];
    for c in cells {
        for (h, v) in ae_histogram.iter_mut().zip(&c.ae.histogram) {
            *h += v;
        }
    }
    ReportRow {
        dataset: cfg.dataset.clone(),
        method: strategy.method(),
        mode: strategy.name().to_string(),
        k: k.map(|(k, _)| k),
        k_frac: k.map(|(_, f)| f),
        n: cfg.precision.n,
        seeds: cfg.seeds.clone(),
        precision,
        precision_by_seed,
        precision_loss_pct,
        sim_time_ms: median(cells.iter().map(|c| c.time).collect()).as_secs_f64() * 1e3,
        ae_mean: mean(&|c| c.ae.mean),
        ae_p50: mean(&|c| c.ae.p50),
        ae_p90: mean(&|c| c.ae.p90),
        ae_p99: mean(&|c| c.ae.p99),
        ae_max: mean(&|c| c.ae.max),
        alphas: cfg.alphas.clone(),
        coverage,
        bound: k.map(|(k, _)| cfg.alphas.iter().map(|&a| theoretical_coverage(k, a)).collect()),
        users_evaluated: cells.iter().map(|c| c.precision.evaluated).sum(),
        users_skipped: cells
            .iter()
            .map(|c| c.precision.skipped_no_relevant + c.precision.skipped_empty_list + c.precision.skipped_cold_start)
            .sum(),
        cold_start_users: cells.iter().map(|c| c.precision.cold_start).sum(),
        pairs: mean(&|c| c.pairs as f64),
        skipped_rounds: cells.iter().map(|c| c.skipped_rounds).sum(),
        ae_histogram,
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt::sig10).unwrap_or_default()
}

fn seed_list(seeds: &[u64]) -> String {
    seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(";")
}

impl EvalReport {
    /// CSV header. Per-alpha columns repeat as `coverage@<α>,bound@<α>`.
    pub fn csv_header(&self) -> String {
        let mut cols: Vec<String> = [
            "dataset",
            "method",
            "mode",
            "k",
            "k_frac",
            "n",
            "seeds",
            "precision",
            "precision_loss_pct",
            "sim_time_ms",
            "ae_mean",
            "ae_p50",
            "ae_p90",
            "ae_p99",
            "ae_max",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        for &a in &self.config.alphas {
            cols.push(format!("coverage@{}", fmt::sig10(a)));
            cols.push(format!("bound@{}", fmt::sig10(a)));
        }
        cols.extend(
            ["users_evaluated", "users_skipped", "cold_start_users", "pairs", "skipped_rounds"]
                .iter()
                .map(|s| s.to_string()),
        );
        cols.join(",")
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.csv_header())?;
        for r in &self.rows {
            let mut f: Vec<String> = vec![
                r.dataset.clone(),
                r.method.label().to_string(),
                r.mode.clone(),
                r.k.map(|k| k.to_string()).unwrap_or_default(),
                opt(r.k_frac),
                r.n.to_string(),
                seed_list(&r.seeds),
                fmt::sig10(r.precision),
                opt(r.precision_loss_pct),
                fmt::sig10(r.sim_time_ms),
                fmt::sig10(r.ae_mean),
                fmt::sig10(r.ae_p50),
                fmt::sig10(r.ae_p90),
                fmt::sig10(r.ae_p99),
                fmt::sig10(r.ae_max),
            ];
            for (a, cov) in r.coverage.iter().enumerate() {
                f.push(fmt::sig10(*cov));
                f.push(opt(r.bound.as_ref().map(|b| b[a])));
            }
            f.push(r.users_evaluated.to_string());
            f.push(r.users_skipped.to_string());
            f.push(r.cold_start_users.to_string());
            f.push(fmt::sig10(r.pairs));
            f.push(r.skipped_rounds.to_string());
            writeln!(w, "{}", f.join(","))?;
        }
        Ok(())
    }

    /// JSON with every float rendered to 10 significant digits.
    pub fn to_json(&self) -> serde_json::Value {
        round_floats(serde_json::to_value(self).expect("report serializes"))
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        serde_json::to_writer_pretty(&mut w, &self.to_json())?;
        writeln!(w)
    }

    /// Same report with wall-time columns zeroed, for reproducibility checks.
    pub fn without_timings(&self) -> EvalReport {
        let mut r = self.clone();
        for row in &mut r.rows {
            row.sim_time_ms = 0.0;
        }
        r
    }

    /// The row for `mode` at `k`, if present.
    pub fn row(&self, mode: &str, k: Option<u64>) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.mode == mode && r.k == k)
    }
}

fn round_floats(v: serde_json::Value) -> serde_json::Value {
    use serde_json::Value;
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64");
            fmt::sig10(x)
                .parse::<f64>()
                .ok()
                .and_then(serde_json::Number::from_f64)
                .map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_floats).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_floats(v))).collect()),
        other => other,
    }
}
