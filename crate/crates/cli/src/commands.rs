use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::json;

use pprec::dataset::{binarize, limit_items, load_raw, split_train_test, stats, subsample_users, InteractionDataset};
use pprec::dataset::RawFormat;
use pprec::eval::{sweep_k, walk_seed, EvalReport, ExperimentConfig, KSpec, PrecisionOptions, Relevance};
use pprec::strategy::{BuildContext, Method, StrategyRegistry};
use pprec::synth::{generate_dataset, SyntheticConfig};
use pprec::walksim::{run_protocol, TimeoutPolicy};

use crate::artifacts::Artifacts;
use crate::error::{CliError, StageExt};
use crate::settings::{parse_seeds, Settings};
use crate::{ExperimentArgs, IngestArgs, RunArgs, SubsampleArgs, SweepArgs, SynthArgs};

const EXPERIMENT_KEYS: [&str; 21] = [
    "data",
    "format",
    "max-users",
    "sample-seed",
    "max-items",
    "out-dir",
    "mode",
    "n",
    "seeds",
    "ratio",
    "rho",
    "rho-file",
    "max-hops",
    "exclude-self",
    "on-timeout",
    "alphas",
    "relevance",
    "no-pad",
    "exclude-cold-start",
    "timing-reps",
    "emit-roundlog",
];

const DEFAULTS: [(&str, &str); 13] = [
    ("format", "pairs-tsv"),
    ("sample-seed", "0"),
    ("out-dir", "pprec-out"),
    ("mode", "union-normalized"),
    ("n", "10"),
    ("seeds", "1..10"),
    ("ratio", "0.8"),
    ("rho", "0.5"),
    ("max-hops", "1000"),
    ("on-timeout", "skip"),
    ("alphas", "0.03,0.04,0.05"),
    ("relevance", "test"),
    ("timing-reps", "1"),
];

fn must_exist(path: &Path, what: &str) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::usage(format!("{what} not found: {}", path.display())))
    }
}

fn parse_format(name: &str) -> Result<RawFormat, CliError> {
    name.parse().map_err(|e: pprec::Error| CliError::usage(e.to_string()))
}

fn load_dataset(
    path: &Path,
    format: RawFormat,
    max_users: Option<usize>,
    sample_seed: u64,
    max_items: Option<usize>,
) -> Result<InteractionDataset, CliError> {
    must_exist(path, "input file")?;
    let mut records = load_raw(path, format).stage("load")?;
    if let Some(n) = max_users {
        records = subsample_users(&records, n, sample_seed);
    }
    if let Some(m) = max_items {
        records = limit_items(&records, m);
    }
    binarize(&records).stage("load")
}

pub fn ingest(args: &IngestArgs) -> Result<(), CliError> {
    let format = parse_format(&args.format)?;
    let SubsampleArgs {
        max_users,
        sample_seed,
        max_items,
    } = args.subsample.clone();
    let ds = load_dataset(&args.input, format, max_users, sample_seed.unwrap_or(0), max_items)?;
    write_pairs(&ds, &args.out)?;
    println!("{}", stats(&ds));
    Ok(())
}

fn write_pairs(ds: &InteractionDataset, out: &Path) -> Result<(), CliError> {
    let io = |e| CliError::Stage {
        stage: "output",
        source: pprec::Error::Io {
            path: out.to_path_buf(),
            source: e,
        },
    };
    let file = File::create(out).map_err(io)?;
    let mut w = BufWriter::new(file);
    ds.write_pairs_tsv(&mut w).and_then(|_| w.flush()).map_err(io)
}

pub fn synth(args: &SynthArgs) -> Result<(), CliError> {
    let mut cfg = SyntheticConfig::movielens_like(args.seed);
    cfg.n_users = args.users.unwrap_or(cfg.n_users);
    cfg.n_items = args.items.unwrap_or(cfg.n_items);
    cfg.n_genres = args.genres.unwrap_or(cfg.n_genres);
    cfg.mean_likes = args.mean_likes.unwrap_or(cfg.mean_likes);
    cfg.min_likes = args.min_likes.unwrap_or(cfg.min_likes);
    cfg.popularity_exponent = args.zipf.unwrap_or(cfg.popularity_exponent);
    cfg.in_genre_prob = args.in_genre.unwrap_or(cfg.in_genre_prob);
    let ds = generate_dataset(&cfg).stage("generate")?;
    write_pairs(&ds, &args.out)?;
    println!("{}", stats(&ds));
    Ok(())
}

fn layered(exp: &ExperimentArgs, extra_keys: &[&'static str], extra_defaults: &[(&str, &str)]) -> Result<Settings, CliError> {
    let keys: Vec<&'static str> = EXPERIMENT_KEYS
        .iter()
        .copied()
        .chain(["redact-roundlog"])
        .chain(extra_keys.iter().copied())
        .collect();
    let defaults: Vec<(&str, &str)> = DEFAULTS.iter().chain(extra_defaults).copied().collect();
    let mut s = Settings::new(&keys, &defaults);
    if let Some(path) = &exp.config {
        s.apply_config_file(path)?;
    }
    let path_text = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
    s.flag("data", path_text(&exp.data))?;
    s.flag("format", exp.format.as_ref())?;
    s.flag("max-users", exp.subsample.max_users)?;
    s.flag("sample-seed", exp.subsample.sample_seed)?;
    s.flag("max-items", exp.subsample.max_items)?;
    s.flag("out-dir", path_text(&exp.out_dir))?;
    s.flag("mode", exp.mode.as_ref())?;
    s.flag("n", exp.n)?;
    s.flag("seeds", exp.seeds.as_ref())?;
    s.flag("ratio", exp.ratio)?;
    s.flag("rho", exp.rho)?;
    s.flag("rho-file", path_text(&exp.rho_file))?;
    s.flag("max-hops", exp.max_hops)?;
    s.switch("exclude-self", exp.exclude_self)?;
    s.flag("on-timeout", exp.on_timeout.as_ref())?;
    s.flag("alphas", exp.alphas.as_ref())?;
    s.flag("relevance", exp.relevance.as_ref())?;
    s.switch("no-pad", exp.no_pad)?;
    s.switch("exclude-cold-start", exp.exclude_cold_start)?;
    s.flag("timing-reps", exp.timing_reps)?;
    s.switch("emit-roundlog", exp.emit_roundlog)?;
    s.switch("redact-roundlog", exp.redact_roundlog)?;
    Ok(s)
}

pub fn run(args: &RunArgs) -> Result<(), CliError> {
    let mut s = layered(&args.exp, &["k", "k-frac"], &[])?;
    s.flag("k", args.k)?;
    s.flag("k-frac", args.k_frac)?;
    let k = match s.exclusive(&["k", "k-frac"])? {
        "k" => KSpec::Absolute(vec![s.require("k")?]),
        _ => KSpec::Fractions(vec![s.require("k-frac")?]),
    };
    experiment("run", s, k)
}

pub fn sweep(args: &SweepArgs) -> Result<(), CliError> {
    let default_fracs = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0";
    let mut s = layered(&args.exp, &["ks", "k-fracs"], &[("k-fracs", default_fracs)])?;
    s.flag("ks", args.ks.as_ref())?;
    s.flag("k-fracs", args.k_fracs.as_ref())?;
    let k = match s.exclusive(&["ks", "k-fracs"])? {
        "ks" => KSpec::Absolute(s.list("ks")?.unwrap_or_default()),
        _ => KSpec::Fractions(s.list("k-fracs")?.unwrap_or_default()),
    };
    if k.is_empty() {
        return Err(CliError::usage("empty k list"));
    }
    experiment("sweep", s, k)
}

fn read_rho_file(path: &Path) -> Result<Vec<f64>, CliError> {
    must_exist(path, "rho file")?;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<f64>()
                .map_err(|_| CliError::usage(format!("{}: line {}: bad rho '{l}'", path.display(), i + 1)))
        })
        .collect()
}

fn experiment(command: &str, s: Settings, k: KSpec) -> Result<(), CliError> {
    let data: PathBuf = s.require::<String>("data")?.into();
    must_exist(&data, "input file")?;
    let rho_path: Option<PathBuf> = s.get::<String>("rho-file")?.map(PathBuf::from);
    if let Some(p) = &rho_path {
        must_exist(p, "rho file")?;
    }
    let format = parse_format(&s.require::<String>("format")?)?;
    let registry = StrategyRegistry::default();
    let strategies: Vec<String> = s.list("mode")?.unwrap_or_default();
    if strategies.is_empty() {
        return Err(CliError::usage("at least one --mode is required"));
    }
    for name in &strategies {
        if name == "exact" {
            return Err(CliError::usage("'exact' is the baseline and always included; pick another --mode"));
        }
        registry.get(name).stage("config")?;
    }

    let dataset_name = data.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let mut cfg = ExperimentConfig::new(dataset_name, k, parse_seeds(&s.require::<String>("seeds")?)?);
    cfg.strategies = strategies;
    cfg.ratio = s.require("ratio")?;
    cfg.alphas = s.list("alphas")?.unwrap_or_default();
    cfg.precision = PrecisionOptions {
        n: s.require("n")?,
        pad_with_zero: !s.bool("no-pad")?,
        include_cold_start: !s.bool("exclude-cold-start")?,
        relevance: match s.require::<String>("relevance")?.as_str() {
            "test" => Relevance::Test,
            "all-rated" => Relevance::AllRated,
            other => return Err(CliError::usage(format!("relevance '{other}': expected test or all-rated"))),
        },
    };
    cfg.default_rho = s.require("rho")?;
    cfg.max_hops = s.require("max-hops")?;
    cfg.exclude_self = s.bool("exclude-self")?;
    cfg.on_timeout = match s.require::<String>("on-timeout")?.as_str() {
        "skip" => TimeoutPolicy::Skip,
        "abort" => TimeoutPolicy::Abort,
        other => return Err(CliError::usage(format!("on-timeout '{other}': expected skip or abort"))),
    };
    cfg.timing_reps = s.require("timing-reps")?;
    if cfg.precision.n == 0 {
        return Err(CliError::usage("n must be >= 1"));
    }
    if !(cfg.ratio > 0.0 && cfg.ratio < 1.0) {
        return Err(CliError::usage("ratio must lie strictly between 0 and 1"));
    }

    let ds = load_dataset(
        &data,
        format,
        s.get("max-users")?,
        s.require("sample-seed")?,
        s.get("max-items")?,
    )?;
    if let Some(p) = &rho_path {
        let rho = read_rho_file(p)?;
        if rho.len() != ds.n_users() {
            return Err(CliError::usage(format!(
                "{}: {} rho values for {} users",
                p.display(),
                rho.len(),
                ds.n_users()
            )));
        }
        cfg.rho = Some(rho);
    }
    let ds_stats = stats(&ds);
    eprintln!("{ds_stats}");

    let report = sweep_k(&ds, &cfg, &registry).stage("evaluate")?;

    let out_dir: PathBuf = s.require::<String>("out-dir")?.into();
    let mut out = Artifacts::create(&out_dir)?;
    out.write_json(
        "config.json",
        &json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "settings": s.to_json(),
            "experiment": cfg,
            "dataset": ds_stats,
        }),
    )?;
    out.write("report.csv", |w| report.write_csv(w))?;
    out.write("report.json", |w| report.write_json(w))?;
    for row in report.rows.iter().filter(|r| r.method != Method::Ibtn) {
        let name = format!("ae_histograms/{}_k{}.csv", row.mode, row.k.unwrap_or(0));
        out.write(&name, |w| pprec::eval::write_histogram_csv(&row.ae_histogram, w))?;
    }
    if s.bool("emit-roundlog")? {
        emit_roundlogs(&mut out, &ds, &cfg, &registry, s.bool("redact-roundlog")?)?;
    }
    let listed = out.finish()?;

    print_summary(&report);
    println!("wrote {} files to {}", listed.len() + 1, out_dir.display());
    Ok(())
}

/// Re-runs the rounds behind each walk cell; the seeds match the report's.
fn emit_roundlogs(
    out: &mut Artifacts,
    ds: &InteractionDataset,
    cfg: &ExperimentConfig,
    registry: &StrategyRegistry,
    redacted: bool,
) -> Result<(), CliError> {
    let uses_walk = cfg
        .strategies
        .iter()
        .any(|n| registry.get(n).map(|s| s.method() == Method::PpIbtn).unwrap_or(false));
    if !uses_walk {
        return Ok(());
    }
    let ks = cfg.k.resolve(ds.n_users()).stage("roundlog")?;
    for &seed in &cfg.seeds {
        let split = split_train_test(ds, cfg.ratio, seed).stage("roundlog")?;
        for &(k, _) in &ks {
            let ctx = BuildContext {
                k,
                seed: walk_seed(seed, k),
                default_rho: cfg.default_rho,
                rho: cfg.rho.clone(),
                max_hops: cfg.max_hops,
                exclude_self: cfg.exclude_self,
                on_timeout: cfg.on_timeout,
            };
            let pop = ctx.population(&split.train).stage("roundlog")?;
            let (log, _) = run_protocol(&pop, &ctx.walk_config()).stage("roundlog")?;
            out.write(&format!("roundlogs/seed{seed}_k{k}.jsonl"), |w| log.write_jsonl(w, redacted))?;
        }
    }
    Ok(())
}

fn print_summary(report: &EvalReport) {
    println!(
        "{:<18} {:>7} {:>6} {:>8} {:>8} {:>9} {:>8}",
        "mode", "k", "k/n", "P@N", "loss%", "sim_ms", "ae_mean"
    );
    for r in &report.rows {
        let k = r.k.map(|k| k.to_string()).unwrap_or_else(|| "-".into());
        let frac = r.k_frac.map(|f| format!("{f:.2}")).unwrap_or_else(|| "-".into());
        let loss = r.precision_loss_pct.map(|l| format!("{l:.2}")).unwrap_or_else(|| "-".into());
        println!(
            "{:<18} {:>7} {:>6} {:>8.4} {:>8} {:>9.1} {:>8.4}",
            r.mode, k, frac, r.precision, loss, r.sim_time_ms, r.ae_mean
        );
    }
}
