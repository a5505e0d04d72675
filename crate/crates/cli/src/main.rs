//! `xorsat-lab`: experiment harness for random k-XORSAT.
//!
//! Exit status: 0 ok, 1 an assertion-tagged check failed, 2 usage error.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use xorsat_core::decimation::{Decimator, InternalVector, OrderingVector};
use xorsat_core::experiments::{self, ExperimentConfig, OgpTarget, OutputFormat, Report, RuleKind};
use xorsat_core::gf2;
use xorsat_core::instance::sample_with_density;
use xorsat_core::peeling::peel;
use xorsat_core::rng::{self, Purpose};
use xorsat_core::Instance;

const BUILD_ID: &str = env!("XORSAT_BUILD_ID");

#[derive(Parser, Debug)]
#[command(name = "xorsat-lab", version, about = "Random k-XORSAT laboratory")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,

    /// Clause width; a comma-separated list for `theory`.
    #[arg(long, global = true, value_delimiter = ',')]
    k: Vec<usize>,
    /// Clause density; a comma-separated grid for `success` and `theory`.
    #[arg(long, global = true, value_delimiter = ',')]
    r: Vec<f64>,
    /// Variable count; a comma-separated list for `success`.
    #[arg(long, global = true, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long, global = true, default_value_t = 20)]
    trials: usize,
    #[arg(long, global = true, value_enum, default_value_t = Rule::Uc)]
    rule: Rule,
    /// Neighbourhood radius of the marginal rule (unit clause always uses 2).
    #[arg(long, global = true, default_value_t = 4)]
    radius: usize,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Thresholds and freeness constants.
    Theory,
    /// Sample an instance in the text format.
    Gen,
    /// Solve an instance by Gaussian elimination.
    Solve {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Reduce an instance to its 2-core.
    Peel {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Run one decimation and print its trace.
    Decimate {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Free-step fractions over many trials.
    Freeness,
    /// Distances along the re-randomization sequence.
    Walk {
        /// Evenly spaced checkpoints, including 0 and n.
        #[arg(long, default_value_t = 101)]
        checkpoints: usize,
        /// Use every i in 0..=n (n + 1 decimations per walk).
        #[arg(long)]
        full: bool,
    },
    /// Histogram of distances between uniform solution pairs.
    OgpScan {
        #[arg(long, default_value_t = 1000)]
        pairs: usize,
        #[arg(long, value_enum, default_value_t = Target::Core)]
        target: Target,
    },
    /// Success probability over an r grid and n list.
    Success,
    /// Empirical 2-core statistics.
    CoreStats,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Rule {
    Uc,
    Marginal,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Target {
    Whole,
    Core,
}

/// Failures that map to exit status 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(e: impl std::fmt::Display) -> anyhow::Error {
    Usage(e.to_string()).into()
}

impl Cli {
    fn config(&self) -> ExperimentConfig {
        let theory = matches!(self.cmd, Cmd::Theory);
        let mut cfg = ExperimentConfig {
            seed: self.seed,
            k: if self.k.is_empty() { if theory { (3..=9).collect() } else { vec![3] } } else { self.k.clone() },
            r: if self.r.is_empty() && !theory { vec![0.9] } else { self.r.clone() },
            n: if self.n.is_empty() { vec![10_000] } else { self.n.clone() },
            trials: self.trials,
            rule: match self.rule {
                Rule::Uc => RuleKind::Uc,
                Rule::Marginal => RuleKind::Marginal,
            },
            radius: self.radius,
            build_id: BUILD_ID.to_string(),
            ..Default::default()
        };
        match self.cmd {
            Cmd::Walk { checkpoints, full } => {
                cfg.checkpoints = checkpoints;
                cfg.full_walk = full;
            }
            Cmd::OgpScan { pairs, target } => {
                cfg.pairs = pairs;
                cfg.target = match target {
                    Target::Whole => OgpTarget::Whole,
                    Target::Core => OgpTarget::Core,
                };
            }
            _ => {}
        }
        cfg
    }

    fn output_format(&self) -> OutputFormat {
        match self.format {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }

    fn emit(&self, text: &str) -> anyhow::Result<()> {
        match &self.out {
            Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn load_or_sample(input: &Option<PathBuf>, cfg: &ExperimentConfig) -> anyhow::Result<Instance> {
    match input {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| usage(format!("reading {}: {e}", p.display())))?;
            text.parse::<Instance>().map_err(|e| usage(format!("{}: {e}", p.display())))
        }
        None => {
            cfg.validate().map_err(usage)?;
            sample_with_density(cfg.k[0], cfg.n[0], cfg.r[0], cfg.seed).map_err(usage)
        }
    }
}

fn header(cmd: &str, cfg: &ExperimentConfig) -> Vec<String> {
    vec![
        format!("xorsat-lab {cmd} build={}", cfg.build_id),
        format!("config {}", serde_json::to_string(cfg).unwrap_or_default()),
    ]
}

fn key_values(cmd: &str, cfg: &ExperimentConfig, v: &serde_json::Value, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => {
            let mut v = v.clone();
            v["header"] = json!(header(cmd, cfg));
            serde_json::to_string_pretty(&v).unwrap_or_default() + "\n"
        }
        OutputFormat::Csv => {
            let mut out: String = header(cmd, cfg).iter().map(|h| format!("# {h}\n")).collect();
            out.push_str("key,value\n");
            if let Some(map) = v.as_object() {
                for (k, val) in map {
                    let s = match val {
                        serde_json::Value::String(s) => s.clone(),
                        serde_json::Value::Number(x) if x.is_f64() => experiments::fmt_sig(x.as_f64().unwrap_or(f64::NAN)),
                        other => other.to_string(),
                    };
                    out.push_str(&format!("{k},{s}\n"));
                }
            }
            out
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    let cfg = cli.config();
    let format = cli.output_format();
    let report = |f: fn(&ExperimentConfig) -> xorsat_core::Result<Report>| -> anyhow::Result<bool> {
        let rep = f(&cfg).map_err(|e| match e {
            xorsat_core::Error::InvalidParameters(_) | xorsat_core::Error::Domain { .. } => usage(e),
            other => anyhow::Error::new(other),
        })?;
        cli.emit(&rep.render(format))?;
        for c in rep.checks.iter().filter(|c| c.assertion && !c.passed) {
            eprintln!("check failed: {} ({})", c.name, c.detail);
        }
        Ok(rep.ok())
    };
    match &cli.cmd {
        Cmd::Theory => report(experiments::cmd_theory),
        Cmd::Freeness => report(experiments::cmd_freeness),
        Cmd::Walk { .. } => report(experiments::cmd_walk),
        Cmd::OgpScan { .. } => report(experiments::cmd_ogp_scan),
        Cmd::Success => report(experiments::cmd_success),
        Cmd::CoreStats => report(experiments::cmd_core_stats),
        Cmd::Gen => {
            let inst = load_or_sample(&None, &cfg)?;
            let text = inst.to_text_with_comments(&header("gen", &cfg));
            cli.emit(&match format {
                OutputFormat::Csv => text,
                OutputFormat::Json => {
                    serde_json::to_string_pretty(&json!({ "header": header("gen", &cfg), "instance": inst.to_string() }))? + "\n"
                }
            })?;
            Ok(true)
        }
        Cmd::Solve { input } => {
            let inst = load_or_sample(input, &cfg)?;
            let e = gf2::eliminate(&inst);
            let mut g = rng::stream(cfg.seed, Purpose::Solution);
            let sol = e.sample_solution(&mut g).ok();
            let verified = sol.as_ref().is_none_or(|s| inst.is_satisfied_by(s));
            let v = json!({
                "n": inst.n(), "m": inst.m(), "k": inst.k(),
                "satisfiable": e.is_consistent(),
                "rank": e.rank(),
                "log2_solutions": e.solution_count_log2(),
                "solution": sol.map(|s| s.to_string()),
            });
            cli.emit(&key_values("solve", &cfg, &v, format))?;
            Ok(verified)
        }
        Cmd::Peel { input } => {
            let inst = load_or_sample(input, &cfg)?;
            let cr = peel(&inst);
            match format {
                OutputFormat::Csv => cli.emit(&cr.to_text(&inst))?,
                OutputFormat::Json => {
                    let v = json!({
                        "core_n": cr.core.n(),
                        "core_m": cr.core.m(),
                        "stats": cr.stats(inst.n()),
                        "kept": cr.kept,
                        "core": cr.to_text(&inst),
                    });
                    cli.emit(&key_values("peel", &cfg, &v, format))?;
                }
            }
            let min_deg_ok = cr.stats(inst.n()).core_degree_hist.iter().take(2).all(|&f| f == 0.0);
            Ok(min_deg_ok)
        }
        Cmd::Decimate { input } => {
            let inst = load_or_sample(input, &cfg)?;
            let n = inst.n();
            let z = OrderingVector::random(n, &mut rng::stream(cfg.seed, Purpose::Ordering));
            let u = InternalVector::random(n, &mut rng::stream(cfg.seed, Purpose::InternalV));
            let rule = cfg.local_rule();
            let tr = Decimator::new(&inst, rule.as_ref(), &z).map_err(usage)?.run(&u)?;
            let text = match format {
                OutputFormat::Json => tr.to_json_lines(&inst),
                OutputFormat::Csv => {
                    let mut out: String = header("decimate", &cfg).iter().map(|h| format!("# {h}\n")).collect();
                    out.push_str(&format!(
                        "# free_fraction = {}\n# satisfied = {}\n# violated_on_removal = {}\n",
                        experiments::fmt_sig(tr.free_fraction()),
                        inst.is_satisfied_by(&tr.output),
                        tr.violated_on_removal
                    ));
                    out.push_str("t,var,p,free,bit,fallback\n");
                    for s in &tr.steps {
                        out.push_str(&format!(
                            "{},{},{},{},{},{}\n",
                            s.t,
                            s.var,
                            experiments::fmt_sig(s.p.value()),
                            u8::from(s.free),
                            u8::from(s.bit),
                            u8::from(s.fallback)
                        ));
                    }
                    out
                }
            };
            cli.emit(&text)?;
            Ok(tr.steps.len() == n)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) if e.is::<Usage>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
