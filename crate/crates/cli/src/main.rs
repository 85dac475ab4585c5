// SPDX-License-Identifier: MIT OR Apache-2.0

//! `pcalign`: runs the alignment and segmentation pipeline stage by stage or
//! end to end.
//!
//! Exit status is 0 on success, 1 when a reproduction check fails and 2 on a
//! usage, configuration or I/O error.

#![forbid(unsafe_code)]

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use pcalign::difference::difference_sequence;
use pcalign::dp::{build_graph, longest_paths, path_to_segmentation, WeightKind};
use pcalign::experiments::pipeline::{emit_report, observe, run_pipeline, RunReport};
use pcalign::experiments::{load_config, run_monte_carlo, run_paper_repro, ExperimentConfig, Method};
use pcalign::gaussian::{expected_w2, monte_carlo_edge_stats, prob_w1_positive, EdgeNoiseContext};
use pcalign::noise::{NoiseSpec, Seed};
use pcalign::signal::SampleSequence;
use pcalign::threshold::{compatibility_check, search_threshold, threshold_pair, Verdict};
use pcalign::xcorr::{best_shifts, cross_correlation};

#[derive(Parser)]
#[command(
    name = "pcalign",
    version,
    about = "Align and segment two sampled piecewise constant signals"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured methods end to end and write a report.
    Simulate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Cross-correlation profile as CSV (shift,value).
    Xcorr {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Samples and first differences as CSV.
    Diff {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Threshold ladder with verdicts as CSV (v,verdict,reason).
    Threshold {
        #[command(flatten)]
        input: InputArgs,
        /// Check this single threshold instead of searching.
        #[arg(long)]
        v: Option<f64>,
    },
    /// Longest paths through the alignment graph, as JSON.
    Dp {
        #[command(flatten)]
        input: InputArgs,
        /// Gate threshold; defaults to dp.v or half the smallest jump.
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long, value_parser = parse_weight)]
        weight: Option<WeightKind>,
        #[arg(long)]
        max_paths: Option<usize>,
        /// Write the graph in DOT format with the optimal paths highlighted.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Reconstructions and error energies for each method, as JSON.
    Estimate {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Worked two-pulse example at several noise levels with its checks.
    PaperRepro {
        /// Directory for paper_repro.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo comparison of the configured methods.
    Mc {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        /// Directory for mc.json and mc.csv; CSV goes to stdout otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form edge statistics under Gaussian noise against simulation,
    /// as CSV.
    Gaussian {
        #[arg(long, allow_hyphen_values = true)]
        a: f64,
        #[arg(long, allow_hyphen_values = true)]
        b: f64,
        #[arg(long)]
        v: f64,
        #[arg(long)]
        sigma: f64,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// TOML experiment configuration.
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// none, binary:X, gaussian:SIGMA, uniform:HALFWIDTH or fixed:FILE.
    #[arg(long)]
    noise: Option<String>,
    /// Comma-separated subset of xcorr,threshold,dp.
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    methods: Option<Vec<Method>>,
    /// Comma-separated reference indices.
    #[arg(long, value_delimiter = ',')]
    references: Option<Vec<usize>>,
    /// Fixed threshold for the thresholding method.
    #[arg(long = "threshold-v")]
    threshold_v: Option<f64>,
    /// Gate threshold for the graph method.
    #[arg(long = "dp-v")]
    dp_v: Option<f64>,
    #[arg(long = "dp-weight", value_parser = parse_weight)]
    dp_weight: Option<WeightKind>,
    #[arg(long = "dp-max-paths")]
    dp_max_paths: Option<usize>,
    #[arg(long = "xcorr-tolerance")]
    xcorr_tolerance: Option<f64>,
}

#[derive(Args)]
struct OutputArgs {
    /// Output directory; the JSON report goes to stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write graph.dot when the graph method runs.
    #[arg(long)]
    dot: bool,
    /// Zero the wall-clock fields.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct InputArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// First observed sequence as a plain numeric list; replaces the
    /// simulated one.
    #[arg(long, requires = "y2")]
    y1: Option<PathBuf>,
    #[arg(long, requires = "y1")]
    y2: Option<PathBuf>,
}

fn parse_weight(s: &str) -> Result<WeightKind, String> {
    s.parse().map_err(|e: pcalign::Error| e.to_string())
}

fn parse_method(s: &str) -> Result<Method, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "xcorr" => Ok(Method::Xcorr),
        "threshold" => Ok(Method::Threshold),
        "dp" => Ok(Method::Dp),
        other => Err(format!("unknown method {other:?}")),
    }
}

/// Whitespace- or comma-separated numbers; `#` starts a comment.
fn read_numbers(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
        {
            let x: f64 = tok
                .parse()
                .with_context(|| format!("{}:{}: not a number: {tok:?}", path.display(), lineno + 1))?;
            out.push(x);
        }
    }
    Ok(out)
}

fn parse_noise(s: &str) -> Result<Option<NoiseSpec>> {
    let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
    let num = || -> Result<f64> { arg.parse().with_context(|| format!("bad noise parameter {arg:?}")) };
    Ok(Some(match kind {
        "none" => return Ok(None),
        "binary" | "symmetric_binary" => NoiseSpec::SymmetricBinary { x: num()? },
        "gaussian" => NoiseSpec::Gaussian { sigma: num()? },
        "uniform" => NoiseSpec::Uniform { halfwidth: num()? },
        "fixed" => NoiseSpec::Fixed {
            pattern: read_numbers(Path::new(arg))?,
        },
        other => bail!("unknown noise kind {other:?}"),
    }))
}

/// The worked two-pulse instance, used when no configuration is given.
const DEFAULT_CONFIG: &str = r#"
[function]
levels = [1.0, -1.0, 1.0, -1.0]
lengths_in_t = [1.3, 1.45, 1.35, 1.3]

[grids]
offsets = [-0.95, -0.5]
n = 9
"#;

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => load_config(p)?,
            None => ExperimentConfig::from_toml(DEFAULT_CONFIG)?,
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(n) = &self.noise {
            cfg.noise = parse_noise(n)?;
        }
        if let Some(m) = &self.methods {
            cfg.methods = m.clone();
        }
        if let Some(r) = &self.references {
            cfg.references = Some(r.clone());
        }
        if self.threshold_v.is_some() {
            cfg.threshold.v = self.threshold_v;
        }
        if self.dp_v.is_some() {
            cfg.dp.v = self.dp_v;
        }
        if let Some(w) = self.dp_weight {
            cfg.dp.weight = w;
        }
        if let Some(c) = self.dp_max_paths {
            cfg.dp.max_paths = c;
        }
        if let Some(t) = self.xcorr_tolerance {
            cfg.xcorr.tolerance = t;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl InputArgs {
    fn load(&self) -> Result<(ExperimentConfig, SampleSequence, SampleSequence)> {
        let cfg = self.cfg.load()?;
        let (y1, y2) = match (&self.y1, &self.y2) {
            (Some(a), Some(b)) => {
                let (a, b) = (read_numbers(a)?, read_numbers(b)?);
                if a.len() != b.len() || a.len() < 2 {
                    bail!(
                        "sequences must have equal length of at least 2, got {} and {}",
                        a.len(),
                        b.len()
                    );
                }
                (a.into(), b.into())
            }
            _ => observe(&cfg, Seed(cfg.seed))?,
        };
        Ok((cfg, y1, y2))
    }
}

fn csv_stdout() -> csv::Writer<std::io::Stdout> {
    csv::Writer::from_writer(std::io::stdout())
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn verdict_row(v: f64, verdict: &Verdict) -> [String; 3] {
    match verdict {
        Verdict::Accept { regions } => [v.to_string(), "accept".into(), format!("{regions} regions")],
        Verdict::Reject(r) => [v.to_string(), "reject".into(), r.to_string()],
    }
}

fn simulate(cfg: &ExperimentConfig, out: &OutputArgs) -> Result<()> {
    let mut report = run_pipeline(cfg)?;
    if out.no_timing {
        report = report.without_timing();
    }
    let Some(dir) = out
        .out
        .as_ref()
        .or(cfg.output.dir.as_ref().map(PathBuf::from).as_ref())
        .cloned()
    else {
        return print_json(&report);
    };
    let want_dot = out.dot || cfg.output.dot;
    match report.method(Method::Dp).and_then(|m| m.dp.as_ref()) {
        Some(dp) if want_dot => {
            let d1 = difference_sequence(&report.y1.clone().into());
            let d2 = difference_sequence(&report.y2.clone().into());
            let graph = build_graph(&d1, &d2, dp.v, cfg.dp.weight)?;
            emit_report(&report, &dir, Some((&graph, &dp.paths)))?;
        }
        _ => emit_report(&report, &dir, None)?,
    }
    eprintln!("wrote report to {}", dir.display());
    Ok(())
}

fn estimate(report: &RunReport) -> Result<()> {
    let rows: Vec<serde_json::Value> = report
        .methods
        .iter()
        .map(|m| {
            serde_json::json!({
                "method": m.method,
                "best": m.best,
                "diagnostics": m.diagnostics,
                "estimates": m.estimates,
            })
        })
        .collect();
    print_json(&rows)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Simulate { cfg, out } => simulate(&cfg.load()?, &out)?,
        Command::Xcorr { input } => {
            let (cfg, y1, y2) = input.load()?;
            let profile = cross_correlation(&y1, &y2)?;
            let mut w = csv_stdout();
            w.write_record(["shift", "value"])?;
            for (s, r) in profile.iter() {
                w.write_record([s.to_string(), r.to_string()])?;
            }
            w.flush()?;
            let best: Vec<String> = best_shifts(&profile, cfg.xcorr.tolerance)
                .iter()
                .map(i64::to_string)
                .collect();
            eprintln!("best shifts: {}", best.join(" "));
        }
        Command::Diff { input } => {
            let (_, y1, y2) = input.load()?;
            let (d1, d2) = (difference_sequence(&y1), difference_sequence(&y2));
            let mut w = csv_stdout();
            w.write_record(["n", "y1", "y2", "d1", "d2"])?;
            for k in 0..y1.len() {
                w.write_record([
                    (k + 1).to_string(),
                    y1.values()[k].to_string(),
                    y2.values()[k].to_string(),
                    d1.values()[k].to_string(),
                    d2.values()[k].to_string(),
                ])?;
            }
            w.flush()?;
        }
        Command::Threshold { input, v } => {
            let (_, y1, y2) = input.load()?;
            let (d1, d2) = (difference_sequence(&y1), difference_sequence(&y2));
            let mut w = csv_stdout();
            w.write_record(["v", "verdict", "reason"])?;
            if let Some(v) = v {
                let pair = threshold_pair(&d1, &d2, v);
                w.write_record(verdict_row(v, &compatibility_check(&pair.sig1, &pair.sig2)))?;
            } else {
                let search = search_threshold(&d1, &d2)?;
                for c in &search.ladder {
                    w.write_record(verdict_row(c.v, &c.verdict))?;
                }
                match &search.feasible {
                    Some(f) => eprintln!(
                        "feasible at v = {}: {:?} / {:?}",
                        f.v,
                        f.seg1.boundaries(),
                        f.seg2.boundaries()
                    ),
                    None => eprintln!("no feasible threshold"),
                }
            }
            w.flush()?;
        }
        Command::Dp {
            input,
            threshold,
            weight,
            max_paths,
            dot,
        } => {
            let (cfg, y1, y2) = input.load()?;
            let v = match threshold {
                Some(v) if v.is_finite() && v > 0.0 => v,
                Some(v) => bail!("threshold must be positive, got {v}"),
                None => cfg.dp_threshold()?,
            };
            let kind = weight.unwrap_or(cfg.dp.weight);
            let cap = max_paths.unwrap_or(cfg.dp.max_paths);
            if cap == 0 {
                bail!("--max-paths must be positive");
            }
            let graph = build_graph(&difference_sequence(&y1), &difference_sequence(&y2), v, kind)?;
            let res = longest_paths(&graph, cap);
            let paths: Vec<serde_json::Value> = res
                .paths
                .iter()
                .map(|p| {
                    let seg = path_to_segmentation(p).ok();
                    serde_json::json!({
                        "vertices": p.iter().map(ToString::to_string).collect::<Vec<_>>(),
                        "segmentation": seg,
                        "shift": seg.as_ref().map(|s| s.shift()),
                    })
                })
                .collect();
            print_json(&serde_json::json!({
                "v": v,
                "weight_kind": kind,
                "weight": res.weight,
                "edges": res.edges,
                "optimal_count": res.optimal_count,
                "truncated": res.truncated,
                "paths": paths,
            }))?;
            if let Some(path) = dot {
                std::fs::write(&path, graph.to_dot(&res.paths))
                    .with_context(|| format!("cannot write {}", path.display()))?;
            }
        }
        Command::Estimate { cfg } => estimate(&run_pipeline(&cfg.load()?)?)?,
        Command::PaperRepro { out } => {
            let repro = run_paper_repro()?;
            for c in &repro.checks {
                let tag = if c.passed { "PASS" } else { "FAIL" };
                println!("{tag} {} {}: {}", c.id, c.name, c.detail);
            }
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                let json = serde_json::to_string_pretty(&repro)? + "\n";
                std::fs::write(dir.join("paper_repro.json"), json)?;
            }
            if !repro.passed() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Mc { cfg, trials, out } => {
            let cfg = cfg.load()?;
            if trials == 0 {
                bail!("--trials must be positive");
            }
            let report = run_monte_carlo(&cfg, trials)?;
            let mut w = match &out {
                Some(dir) => {
                    std::fs::create_dir_all(dir)?;
                    std::fs::write(dir.join("mc.json"), serde_json::to_string_pretty(&report)? + "\n")?;
                    csv::Writer::from_writer(Box::new(std::fs::File::create(dir.join("mc.csv"))?) as Box<dyn Write>)
                }
                None => csv::Writer::from_writer(Box::new(std::io::stdout()) as Box<dyn Write>),
            };
            for m in &report.methods {
                w.serialize(m)?;
            }
            w.flush()?;
        }
        Command::Gaussian {
            a,
            b,
            v,
            sigma,
            trials,
            seed,
        } => {
            let ctx = EdgeNoiseContext::new(a, b, v, sigma)?;
            if trials < 2 {
                bail!("--trials must be at least 2");
            }
            let mut w = csv_stdout();
            w.write_record([
                "a",
                "b",
                "v",
                "sigma",
                "statistic",
                "closed_form",
                "monte_carlo",
                "standard_error",
            ])?;
            let p = monte_carlo_edge_stats(WeightKind::W1, &ctx, trials, Seed(seed))?;
            let e = monte_carlo_edge_stats(WeightKind::W2, &ctx, trials, Seed(seed))?;
            let params = [a, b, v, sigma].map(|x| x.to_string());
            for (name, closed, mc, se) in [
                (
                    "p_w1_positive",
                    prob_w1_positive(&ctx),
                    p.positive_rate,
                    p.positive_rate_se,
                ),
                ("e_w2", expected_w2(&ctx), e.mean_weight, e.mean_weight_se),
            ] {
                let mut row = params.to_vec();
                row.extend([name.to_string(), closed.to_string(), mc.to_string(), se.to_string()]);
                w.write_record(&row)?;
            }
            w.flush()?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
