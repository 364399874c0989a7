use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use vassbound::classifier::{ClassifierError, Options, DEFAULT_CAP};
use vassbound::components::{conical_decomposition, MultiComponent, ZbMode};
use vassbound::graph::mec_decomposition;
use vassbound::report::{analyze, markov_chain_report, EstimateReport};
use vassbound::simulator::{
    estimate_fp, parse_cmd, parse_phased, validate_report, Budget, FpEstimate, Outcome, SimConfig, Strategy,
};
use vassbound::{parse_model, Observable, VassMdp, FORMAT_VERSION};

#[derive(Parser)]
#[command(name = "vassbound", about = "Asymptotic complexity of VASS Markov decision processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ZbArg {
    Literal,
    Bounded,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a strongly connected VASS MDP.
    Analyze {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        max_k: u32,
        #[arg(long, value_enum, default_value_t = ZbArg::Literal)]
        zb_mode: ZbArg,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also check the verdicts by simulation.
        #[arg(long)]
        crosscheck: bool,
    },
    /// Classify a VASS Markov chain.
    McClassify {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate fixed-probability bounds by simulation.
    Simulate {
        file: PathBuf,
        /// `length`, `counter:<name>` or `transition:<id>`.
        #[arg(long, default_value = "length")]
        target: String,
        #[arg(long, default_value_t = 0.9)]
        p: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<i64>,
        #[arg(long, default_value_t = 500)]
        trials: usize,
        #[arg(long, default_value_t = 1_000_000)]
        max_steps: u64,
        /// `uniform`, `cmd:<file>` or `phased:<file>`.
        #[arg(long, default_value = "uniform")]
        strategy: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Start state; defaults to the first declared state.
        #[arg(long)]
        start: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Decompose a multi-component into components.
    Decompose {
        model: PathBuf,
        /// Lines `transition-id=rational`.
        #[arg(long)]
        flow: PathBuf,
    },
    /// Print the maximal end components.
    Mec { file: PathBuf },
    /// Check that a file is a valid model.
    Validate { file: PathBuf },
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure { code: 1, error }
    }
}

fn classifier_failure(e: ClassifierError) -> Failure {
    let code = match e {
        ClassifierError::NotStronglyConnected | ClassifierError::NotMarkovChain(_) => 2,
        _ => 1,
    };
    Failure {
        code,
        error: e.into(),
    }
}

fn load_model(path: &Path) -> anyhow::Result<VassMdp> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_model(&text).with_context(|| format!("invalid model {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn render(report: &EstimateReport, format: Format) -> String {
    match format {
        Format::Text => report.to_text(),
        Format::Json => report.to_json(),
    }
}

fn report_code(report: &EstimateReport) -> u8 {
    if report.unresolved || report.cap_reached {
        3
    } else {
        0
    }
}

fn parse_strategy(m: &VassMdp, spec: &str) -> anyhow::Result<Strategy> {
    if spec == "uniform" {
        return Ok(Strategy::UniformRandom);
    }
    if let Some(file) = spec.strip_prefix("cmd:") {
        let text = fs::read_to_string(file).with_context(|| format!("cannot read {file}"))?;
        return Ok(Strategy::FixedCmd(parse_cmd(m, &text).with_context(|| format!("in {file}"))?));
    }
    if let Some(file) = spec.strip_prefix("phased:") {
        let path = Path::new(file);
        let dir = path.parent().unwrap_or(Path::new(""));
        let text = fs::read_to_string(path).with_context(|| format!("cannot read {file}"))?;
        let load = |name: &str| fs::read_to_string(dir.join(name)).map_err(|e| format!("cannot read {name}: {e}"));
        return parse_phased(m, &text, load).with_context(|| format!("in {file}"));
    }
    bail!("unknown strategy `{spec}`; expected uniform, cmd:<file> or phased:<file>")
}

fn crosscheck_text(m: &VassMdp, report: &EstimateReport) -> String {
    let results = validate_report(m, report, &Budget::default());
    let mut out = String::from("\ncrosscheck (p = 0.9)\n");
    for r in &results {
        let word = match r.outcome {
            Outcome::Pass => "pass",
            Outcome::Fail => "FAIL",
            Outcome::Inconclusive => "inconclusive",
        };
        let _ = writeln!(out, "  {:<24} {:<14} {word}: {}", r.item, r.verdict, r.detail);
    }
    out
}

fn fp_text(m: &VassMdp, obs: Observable, strat: &Strategy, est: &FpEstimate) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "target    {}", obs.describe(m));
    let _ = writeln!(out, "strategy  {}", strat.describe(m));
    let _ = writeln!(out, "p         {}", est.p);
    let _ = writeln!(out, "\n{:>10}  {:>14}  censored", "n", "quantile");
    for pt in &est.points {
        let q = pt.value.map_or("inf".to_string(), |v| v.to_string());
        let _ = writeln!(out, "{:>10}  {:>14}  {}/{}", pt.n, q, pt.censored, pt.trials);
    }
    match (est.slope, est.stderr) {
        (Some(s), Some(e)) => {
            let _ = writeln!(out, "\nslope     {s:.4} (stderr {e:.4})");
        }
        _ => out.push_str("\nslope     unavailable (fewer than 3 finite quantiles)\n"),
    }
    out
}

fn parse_flow(m: &VassMdp, text: &str) -> anyhow::Result<Vec<BigRational>> {
    let mut flow = vec![BigRational::from_integer(0.into()); m.num_transitions()];
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (id, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected `transition=rational`", i + 1))?;
        let t = m
            .transition_index(id.trim())
            .ok_or_else(|| anyhow!("line {}: unknown transition `{}`", i + 1, id.trim()))?;
        flow[t] = value
            .trim()
            .parse()
            .map_err(|_| anyhow!("line {}: invalid rational `{}`", i + 1, value.trim()))?;
    }
    Ok(flow)
}

fn run(command: Command) -> Result<u8, Failure> {
    match command {
        Command::Analyze {
            file,
            max_k,
            zb_mode,
            format,
            out,
            crosscheck,
        } => {
            let m = load_model(&file)?;
            let options = Options {
                cap: max_k,
                zb_mode: match zb_mode {
                    ZbArg::Literal => ZbMode::Literal,
                    ZbArg::Bounded => ZbMode::Bounded,
                },
                ..Options::default()
            };
            let report = analyze(&m, options).map_err(classifier_failure)?;
            emit(out.as_deref(), &render(&report, format))?;
            if crosscheck {
                eprint!("{}", crosscheck_text(&m, &report));
            }
            Ok(report_code(&report))
        }
        Command::McClassify { file, format, out } => {
            let m = load_model(&file)?;
            let report = markov_chain_report(&m).map_err(classifier_failure)?;
            emit(out.as_deref(), &render(&report, format))?;
            Ok(0)
        }
        Command::Simulate {
            file,
            target,
            p,
            n_list,
            trials,
            max_steps,
            strategy,
            seed,
            start,
            format,
        } => {
            let m = load_model(&file)?;
            let obs = Observable::parse(&m, &target).map_err(anyhow::Error::from)?;
            let strat = parse_strategy(&m, &strategy)?;
            let start = match start {
                Some(name) => m.state_index(&name).ok_or_else(|| anyhow!("unknown state `{name}`"))?,
                None => 0,
            };
            let cfg = SimConfig {
                start,
                trials,
                max_steps,
                seed,
            };
            let est = estimate_fp(&m, &strat, obs, p, &n_list, &cfg).map_err(anyhow::Error::from)?;
            let text = match format {
                Format::Text => fp_text(&m, obs, &strat, &est),
                Format::Json => {
                    let value = serde_json::json!({
                        "tool": "vassbound",
                        "format_version": FORMAT_VERSION,
                        "model_hash": m.hash(),
                        "target": obs.describe(&m),
                        "strategy": strat.describe(&m),
                        "trials": trials,
                        "max_steps": max_steps,
                        "seed": seed,
                        "estimate": est,
                    });
                    serde_json::to_string_pretty(&value).map_err(anyhow::Error::from)? + "\n"
                }
            };
            emit(None, &text)?;
            Ok(0)
        }
        Command::Decompose { model, flow } => {
            let m = load_model(&model)?;
            let text = fs::read_to_string(&flow).with_context(|| format!("cannot read {}", flow.display()))?;
            let x = MultiComponent::new(&m, parse_flow(&m, &text)?).map_err(anyhow::Error::from)?;
            let parts =
                conical_decomposition(&m, &x, Options::default().selection_cap).map_err(anyhow::Error::from)?;
            let mut out = String::new();
            for (a, y) in &parts {
                let flow: Vec<String> = y
                    .flow
                    .support()
                    .iter()
                    .map(|&t| format!("{}={}", m.transition(t).id, y.flow.flow[t]))
                    .collect();
                let _ = writeln!(out, "{a} x [center {}] {}", m.state(y.center).name, flow.join(" "));
            }
            if parts.is_empty() {
                out.push_str("zero flow\n");
            }
            emit(None, &out)?;
            Ok(0)
        }
        Command::Mec { file } => {
            let m = load_model(&file)?;
            let mut out = String::new();
            for mec in mec_decomposition(&m).mecs {
                let states: Vec<&str> = mec.states.iter().map(|&p| m.state(p).name.as_str()).collect();
                let trans: Vec<&str> = mec.transitions.iter().map(|&t| m.transition(t).id.as_str()).collect();
                let _ = writeln!(out, "states {} transitions {}", states.join(","), trans.join(","));
            }
            emit(None, &out)?;
            Ok(0)
        }
        Command::Validate { file } => {
            let m = load_model(&file)?;
            println!(
                "ok: {} states, {} transitions, {} counters",
                m.num_states(),
                m.num_transitions(),
                m.dim()
            );
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let version = format!("{} (report format {FORMAT_VERSION})", env!("CARGO_PKG_VERSION"));
    let matches = match Cli::command().version(&*version.leak()).try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
