mod config;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use patlcheck::builder::{build_model, export_dot, BuildConfig, DotOptions, Variant};
use patlcheck::formula::{parse, Relation, StateFormula};
use patlcheck::model::json;
use patlcheck::patl::{check_patl, Verdict};
use patlcheck::semantics::Mode;
use patlcheck::simgen::{generate, write_ensemble};
use patlcheck::trajectory::{read_csv_path, Source, Trajectory};
use serde::{Deserialize, Serialize};

use config::FileConfig;
use report::{Format, ResultsFile, ThresholdResult};

/// Telemetry to stochastic game models, checked against PATL properties.
#[derive(Parser)]
#[command(name = "patlcheck", version)]
struct Cli {
    /// TOML or JSON file with optional [simulate], [build] and [check] sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the simulation seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for trajectory processing and strategy search.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Wall-clock limit per check, in seconds.
    #[arg(long, global = true)]
    timeout: Option<f64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic trajectory ensemble and its reference.
    Simulate {
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Overrides the number of trajectories.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Build a model from a directory of telemetry CSVs.
    Build {
        /// Directory with reference.csv and one CSV per trajectory.
        #[arg(long)]
        data: PathBuf,
        /// Model JSON; build stats go next to it.
        #[arg(long)]
        out: PathBuf,
        /// Time precision in seconds.
        #[arg(long)]
        k: Option<f64>,
        /// A, B or C.
        #[arg(long)]
        variant: Option<Variant>,
        /// Seconds; defaults to the shortest trajectory.
        #[arg(long)]
        horizon: Option<f64>,
        /// Give every non-terminal state a disengage choice.
        #[arg(long)]
        always_allow_disengage: bool,
    },
    /// Check a formula; `p` inside `^{...}` is replaced by each threshold.
    Check {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        formula: String,
        /// Comma-separated values for `p`.
        #[arg(long, value_delimiter = ',')]
        thresholds: Vec<String>,
        /// objective or subjective.
        #[arg(long, default_value = "objective")]
        mode: Mode,
        /// Strategy budget per check.
        #[arg(long)]
        max_strategies: Option<u64>,
        /// Results JSON for `report`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate the results JSON files in a directory.
    Report {
        /// Directory of results JSON files.
        #[arg(long)]
        results: PathBuf,
        #[arg(long, value_enum, default_value = "markdown")]
        format: Format,
        /// Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a model as Graphviz DOT.
    ExportDot {
        #[arg(long)]
        model: PathBuf,
        /// Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Omit edge probabilities.
        #[arg(long)]
        no_probabilities: bool,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct BuildStats {
    model: String,
    variant: String,
    k: f64,
    horizon_steps: usize,
    states: usize,
    trajectories: usize,
    model_gen_time_s: f64,
    repairs: Vec<String>,
}

fn stats_path(model: &Path) -> PathBuf {
    model.with_extension("stats.json")
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_data(dir: &Path) -> Result<(Trajectory, Vec<Trajectory>)> {
    let reference_path = dir.join("reference.csv");
    if !reference_path.is_file() {
        bail!("{}: missing reference.csv", dir.display());
    }
    let reference = read_csv_path(&reference_path, Source::Synthetic)
        .with_context(|| format!("reading {}", reference_path.display()))?;
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|e| e == "csv")
                && p.file_name() != Some("reference.csv".as_ref())
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!(
            "{}: no trajectory CSVs besides reference.csv",
            dir.display()
        );
    }
    let trajs = paths
        .iter()
        .map(|p| {
            read_csv_path(p, Source::Flight).with_context(|| format!("reading {}", p.display()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((reference, trajs))
}

/// Replaces the identifier `p` inside every `^{...}` bound.
fn substitute(template: &str, p: &str) -> (String, bool) {
    let mut out = String::with_capacity(template.len());
    let mut found = false;
    let mut rest = template;
    while let Some(i) = rest.find("^{") {
        out.push_str(&rest[..i + 2]);
        rest = &rest[i + 2..];
        let end = rest.find('}').unwrap_or(rest.len());
        let inner = &rest[..end];
        let chars: Vec<char> = inner.chars().collect();
        for (j, c) in chars.iter().enumerate() {
            let alone = *c == 'p'
                && !j
                    .checked_sub(1)
                    .is_some_and(|k| chars[k].is_alphanumeric() || chars[k] == '_')
                && !chars
                    .get(j + 1)
                    .is_some_and(|n| n.is_alphanumeric() || *n == '_');
            if alone {
                out.push_str(p);
                found = true;
            } else {
                out.push(*c);
            }
        }
        rest = &rest[end..];
    }
    out.push_str(rest);
    (out, found)
}

fn top_relation(f: &StateFormula) -> Option<Relation> {
    match f {
        StateFormula::StrategicProb { bound, .. } => Some(bound.relation),
        _ => None,
    }
}

fn exit_code(verdicts: &[Verdict]) -> u8 {
    if verdicts
        .iter()
        .any(|v| !matches!(v, Verdict::True | Verdict::False))
    {
        2
    } else if verdicts.contains(&Verdict::False) {
        1
    } else {
        0
    }
}

fn run(cli: Cli) -> Result<u8> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring thread pool")?;
    }
    let file = FileConfig::load(cli.config.as_deref())?;
    match cli.cmd {
        Cmd::Simulate { out, n } => {
            let mut cfg = file.simulate;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            if let Some(n) = n {
                cfg.n_trajectories = n;
            }
            let ens = generate(&cfg)?;
            let m = write_ensemble(&out, &cfg, &ens)?;
            println!(
                "wrote {} trajectories + reference to {} ({} disengaged)",
                m.trajectories.len(),
                out.display(),
                m.disengaged
            );
            Ok(0)
        }
        Cmd::Build {
            data,
            out,
            k,
            variant,
            horizon,
            always_allow_disengage,
        } => {
            let mut cfg: BuildConfig = file.build;
            if let Some(k) = k {
                cfg.k = k;
            }
            if let Some(v) = variant {
                cfg.variant = v;
            }
            if horizon.is_some() {
                cfg.horizon = horizon;
            }
            cfg.always_allow_disengage |= always_allow_disengage;
            let (reference, trajs) = load_data(&data)?;
            let clock = Instant::now();
            let mut built = build_model(&trajs, &reference, &cfg)?;
            let gen_time = clock.elapsed().as_secs_f64();
            let id = out
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("model")
                .to_string();
            built
                .model
                .meta
                .insert("id".into(), serde_json::Value::String(id.clone()));
            write_text(&out, &json::to_json(&built.model))?;
            let stats = BuildStats {
                model: id,
                variant: cfg.variant.to_string(),
                k: cfg.k,
                horizon_steps: built.model.meta["horizon_steps"].as_u64().unwrap_or(0) as usize,
                states: built.model.n_states(),
                trajectories: trajs.len(),
                model_gen_time_s: gen_time,
                repairs: built.repairs.iter().map(|r| r.to_string()).collect(),
            };
            write_text(
                &stats_path(&out),
                &(serde_json::to_string_pretty(&stats)? + "\n"),
            )?;
            for r in &built.repairs {
                eprintln!("uniformity repair: {r}");
            }
            println!(
                "#states {}  generation time {:.3} s",
                stats.states, gen_time
            );
            Ok(0)
        }
        Cmd::Check {
            model,
            formula,
            thresholds,
            mode,
            max_strategies,
            out,
        } => {
            let text = std::fs::read_to_string(&model)
                .with_context(|| format!("reading {}", model.display()))?;
            let icgs =
                json::from_json(&text).with_context(|| format!("loading {}", model.display()))?;
            let stats: Option<BuildStats> = std::fs::read_to_string(stats_path(&model))
                .ok()
                .and_then(|s| serde_json::from_str(&s).ok());
            let mut cfg = file.check;
            if cli.timeout.is_some() {
                cfg.timeout_s = cli.timeout;
            }
            if max_strategies.is_some() {
                cfg.max_strategies = max_strategies;
            }
            let sweep: Vec<Option<String>> = if thresholds.is_empty() {
                vec![None]
            } else {
                thresholds.into_iter().map(Some).collect()
            };
            let mut results = Vec::new();
            let mut relation = None;
            println!(
                "{:>8}  {:<16} {:>12} {:>10} {:>10}",
                "p", "result", "achieved", "time s", "examined"
            );
            for p in sweep {
                let text = match &p {
                    Some(p) => {
                        let (s, found) = substitute(&formula, p);
                        if !found {
                            bail!("thresholds given but the formula has no `p` placeholder");
                        }
                        s
                    }
                    None => {
                        if substitute(&formula, "0").1 {
                            bail!("formula has a `p` placeholder; pass --thresholds");
                        }
                        formula.clone()
                    }
                };
                let f = parse(&text).with_context(|| format!("parsing {text:?}"))?;
                relation = relation.or(top_relation(&f));
                let r = check_patl(&icgs, &f, mode, &cfg)?;
                println!(
                    "{:>8}  {:<16} {:>12} {:>10.3} {:>10}",
                    p.as_deref().unwrap_or("-"),
                    r.truth.as_str(),
                    r.achieved
                        .map(|a| format!("{a:.6}"))
                        .unwrap_or_else(|| "-".into()),
                    r.wall_time_s,
                    r.strategies_examined
                );
                results.push(ThresholdResult { p, result: r });
            }
            if let Some(rel) = relation {
                check_monotone(&results, rel);
            }
            let verdicts: Vec<Verdict> = results.iter().map(|r| r.result.truth).collect();
            let file = ResultsFile {
                model: icgs
                    .meta
                    .get("id")
                    .and_then(|v| v.as_str())
                    .unwrap_or("model")
                    .to_string(),
                variant: icgs
                    .meta
                    .get("variant")
                    .and_then(|v| v.as_str())
                    .map(String::from),
                k: icgs.meta.get("k").and_then(|v| v.as_f64()),
                states: icgs.n_states(),
                model_gen_time_s: stats.map(|s| s.model_gen_time_s),
                formula,
                mode: mode.to_string(),
                results,
            };
            if let Some(out) = out {
                write_text(&out, &(serde_json::to_string_pretty(&file)? + "\n"))?;
            }
            Ok(exit_code(&verdicts))
        }
        Cmd::Report {
            results,
            format,
            out,
        } => {
            let files = report::load_dir(&results)?;
            let text = report::render(&files, format);
            match out {
                Some(path) => write_text(&path, &text)?,
                None => print!("{text}"),
            }
            Ok(0)
        }
        Cmd::ExportDot {
            model,
            out,
            no_probabilities,
        } => {
            let text = std::fs::read_to_string(&model)
                .with_context(|| format!("reading {}", model.display()))?;
            let icgs =
                json::from_json(&text).with_context(|| format!("loading {}", model.display()))?;
            let mut opts = DotOptions::for_model(&icgs);
            if no_probabilities {
                opts.probabilities = false;
            }
            let dot = export_dot(&icgs, &opts);
            match out {
                Some(path) => write_text(&path, &dot)?,
                None => print!("{dot}"),
            }
            Ok(0)
        }
    }
}

/// Warns when a decided verdict contradicts threshold monotonicity.
fn check_monotone(results: &[ThresholdResult], rel: Relation) {
    let decided: Vec<(f64, bool)> = results
        .iter()
        .filter_map(|r| {
            let p: f64 = r.p.as_deref()?.parse().ok()?;
            match r.result.truth {
                Verdict::True => Some((p, true)),
                Verdict::False => Some((p, false)),
                _ => None,
            }
        })
        .collect();
    for &(p, t) in &decided {
        for &(q, u) in &decided {
            // lower bounds: TRUE at p implies TRUE at every q <= p
            let violated = if rel.is_lower_bound() {
                t && !u && q < p
            } else {
                t && !u && q > p
            };
            if violated {
                eprintln!("warning: threshold monotonicity violated between p={p} and p={q}");
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
