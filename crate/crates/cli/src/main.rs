//! `flexshare` command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use flexshare::model::{
    generate_realistic, generate_synthetic, load_scenario, save_scenario, RealisticConfig, StateFile,
    SyntheticConfig,
};
use flexshare::report::{self, Variant};
use flexshare::sim::{self, SimConfig};
use flexshare::{
    deploy_sequence, AdmissionStatus, AveragingFactor, Error, PriorityScheme, PrioritySpec, Scenario, ServiceIdx,
    Strategy,
};

const MIN_COMPLETIONS: usize = 10_000;

#[derive(Parser)]
#[command(name = "flexshare", version, about = "VNF sharing with flexible priorities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Admit every service in order and write the final deployment.
    Deploy(DeployArgs),
    /// Sweep traffic multipliers and priority schemes, emit CSV.
    Compare(CompareArgs),
    /// Simulate a deployment and compare against the analytic delays.
    Validate(ValidateArgs),
    /// Write a generated scenario as JSON.
    Generate(GenerateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Generator {
    Synthetic,
    Realistic,
}

#[derive(Clone, Copy, ValueEnum)]
enum AvgFactor {
    /// Count every stream on the instance, its own included.
    #[value(name = "paper", alias = "self-included")]
    SelfIncluded,
    /// Leave each stream out of its own count.
    SelfExcluded,
}

impl From<AvgFactor> for AveragingFactor {
    fn from(a: AvgFactor) -> Self {
        match a {
            AvgFactor::SelfIncluded => AveragingFactor::SelfIncluded,
            AvgFactor::SelfExcluded => AveragingFactor::SelfExcluded,
        }
    }
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario JSON file.
    #[arg(long, conflicts_with = "generate", required_unless_present = "generate")]
    scenario: Option<PathBuf>,
    /// Use a built-in scenario instead of a file.
    #[arg(long, value_enum)]
    generate: Option<Generator>,
    /// Traffic multiplier.
    #[arg(long, default_value_t = 1.0)]
    n: f64,
    /// Seed for generated VM capabilities.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Number of VMs in a generated scenario.
    #[arg(long)]
    vms: Option<usize>,
    /// Averaging factor of the scaling problem.
    #[arg(long, value_enum)]
    avg_factor: Option<AvgFactor>,
}

impl ScenarioArgs {
    fn load(&self) -> anyhow::Result<Scenario> {
        if !(self.n > 0.0) {
            bail!(Usage(format!("--n must be positive, got {}", self.n)));
        }
        let mut sc = match (self.generate, &self.scenario) {
            (Some(Generator::Synthetic), _) => {
                let mut cfg = SyntheticConfig::new(self.n, self.seed);
                if let Some(v) = self.vms {
                    cfg.vm_count = v;
                }
                generate_synthetic(&cfg)
            }
            (Some(Generator::Realistic), _) => {
                let mut cfg = RealisticConfig { n: self.n, ..Default::default() };
                if let Some(v) = self.vms {
                    cfg.vm_count = v;
                }
                generate_realistic(&cfg)
            }
            (None, Some(path)) => {
                let sc = load_scenario(path).with_context(|| format!("reading {}", path.display()))?;
                if self.n == 1.0 {
                    sc
                } else {
                    sc.scaled(self.n)
                }
            }
            (None, None) => bail!(Usage("one of --scenario or --generate is required".into())),
        };
        if let Some(a) = self.avg_factor {
            sc.averaging_factor = a.into();
        }
        Ok(sc)
    }
}

#[derive(Args)]
struct SchemeArgs {
    /// Priority scheme: per-service, per-vnf or per-request.
    #[arg(long)]
    scheme: Option<String>,
    /// Window width of per-request priorities.
    #[arg(long)]
    jitter: Option<f64>,
}

impl SchemeArgs {
    fn apply(&self, sc: Scenario) -> anyhow::Result<Scenario> {
        let scheme = match &self.scheme {
            Some(s) => s.parse::<PriorityScheme>().map_err(|e| Usage(e.to_string()))?,
            None => sc.priority_scheme,
        };
        check_jitter(scheme, self.jitter)?;
        Ok(sc.with_scheme(scheme, self.jitter.or(sc.jitter)))
    }
}

fn check_jitter(scheme: PriorityScheme, jitter: Option<f64>) -> anyhow::Result<()> {
    match jitter {
        Some(_) if scheme != PriorityScheme::PerRequest => {
            bail!(Usage(format!("--jitter applies only to per-request priorities, not {scheme}")))
        }
        Some(j) if !(j > 0.0) => bail!(Usage(format!("--jitter must be positive, got {j}"))),
        _ => Ok(()),
    }
}

#[derive(Args)]
struct DeployArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    scheme: SchemeArgs,
    /// Admission order as comma-separated service ids; defaults to file order.
    #[arg(long, value_delimiter = ',')]
    order: Vec<String>,
    /// Search priorities exhaustively instead of through the relaxation.
    #[arg(long)]
    brute: bool,
    /// Stop at the first rejected service.
    #[arg(long)]
    fail_fast: bool,
    /// Directory for state.json and trace.jsonl.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Multipliers as start:end:step, or a comma-separated list.
    #[arg(long, default_value = "1.0:2.0:0.2")]
    n_range: String,
    /// Comma-separated variants: per-service, per-vnf, vnf-brute, per-request.
    #[arg(long, value_delimiter = ',', default_value = "per-service,per-vnf,vnf-brute,per-request")]
    schemes: Vec<String>,
    #[arg(long)]
    jitter: Option<f64>,
    /// CSV output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// State file written by `deploy`.
    #[arg(long)]
    state: PathBuf,
    /// Completions simulated at each instance.
    #[arg(long, default_value_t = 1_000_000)]
    completions: usize,
    /// Deviation CSV output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    scheme: SchemeArgs,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Misuse of the command line, reported with exit code 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

/// Some services were rejected; exit code 1.
#[derive(Debug)]
struct Rejected(Vec<String>);

impl std::fmt::Display for Rejected {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "rejected: {}", self.0.join(", "))
    }
}

impl std::error::Error for Rejected {}

fn exit_code(err: &anyhow::Error) -> (u8, &'static str) {
    if err.downcast_ref::<Rejected>().is_some() {
        return (1, "rejected");
    }
    if err.downcast_ref::<Usage>().is_some() {
        return (2, "usage");
    }
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::Parse { .. }) => (2, "parse"),
        Some(Error::Validation(_) | Error::State(_) | Error::Io(_)) => (2, "input"),
        Some(Error::Unstable { .. }) => (3, "unstable"),
        Some(Error::Numerical(_)) => (3, "numerical"),
        Some(_) => (3, "failure"),
        None => (2, "input"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("FLEXSHARE_LOG", "warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Deploy(a) => deploy(a),
        Command::Compare(a) => compare(a),
        Command::Validate(a) => validate(a),
        Command::Generate(a) => generate(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (code, kind) = exit_code(&err);
            let message = format!("{err:#}");
            let line = serde_json::json!({ "error": kind, "message": message });
            eprintln!("{line}");
            ExitCode::from(code)
        }
    }
}

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

#[derive(Serialize)]
struct DeploySummary<'a> {
    scheme: &'a str,
    admitted: Vec<&'a str>,
    rejected: Vec<&'a str>,
    total_cost: f64,
}

fn deploy(args: DeployArgs) -> anyhow::Result<()> {
    let sc = args.scheme.apply(args.scenario.load()?)?;
    let order: Vec<ServiceIdx> = if args.order.is_empty() {
        sc.service_indices().collect()
    } else {
        args.order
            .iter()
            .map(|id| sc.find_service(id).ok_or_else(|| Usage(format!("unknown service `{id}` in --order"))))
            .collect::<Result<_, _>>()?
    };
    let strategy = if args.brute { Strategy::BruteForce } else { Strategy::FlexShare };

    let order = if args.fail_fast {
        // admit one at a time so nothing runs past the first rejection
        let mut kept = Vec::new();
        for &s in &order {
            kept.push(s);
            let d = deploy_sequence(&kept, &sc, strategy)?;
            if d.results.last().is_some_and(|r| r.status == AdmissionStatus::Rejected) {
                break;
            }
        }
        kept
    } else {
        order
    };
    let d = deploy_sequence(&order, &sc, strategy)?;

    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        std::fs::write(dir.join("state.json"), StateFile::from_state(&d.state, &sc).to_json() + "\n")?;
        let mut trace = BufWriter::new(File::create(dir.join("trace.jsonl"))?);
        for record in d.trace() {
            serde_json::to_writer(&mut trace, record)?;
            trace.write_all(b"\n")?;
        }
        trace.flush()?;
    }

    let name = |s: ServiceIdx| sc.service(s).id.as_str();
    let (admitted, rejected): (Vec<_>, Vec<_>) = d.results.iter().partition(|r| r.status == AdmissionStatus::Admitted);
    let summary = DeploySummary {
        scheme: sc.priority_scheme.as_str(),
        admitted: admitted.iter().map(|r| name(r.service)).collect(),
        rejected: rejected.iter().map(|r| name(r.service)).collect(),
        total_cost: d.total_cost(&sc),
    };
    println!("{}", serde_json::to_string(&summary)?);
    if !summary.rejected.is_empty() {
        bail!(Rejected(summary.rejected.iter().map(|s| s.to_string()).collect()));
    }
    Ok(())
}

fn parse_multipliers(text: &str) -> anyhow::Result<Vec<f64>> {
    let bad = || Usage(format!("cannot read multipliers from `{text}`"));
    let ns: Vec<f64> = if text.contains(':') {
        let parts: Vec<f64> = text.split(':').map(|p| p.trim().parse()).collect::<Result<_, _>>().map_err(|_| bad())?;
        let [start, end, step] = parts[..] else { bail!(bad()) };
        if !(step > 0.0) || end < start {
            bail!(bad());
        }
        report::multiplier_range(start, end, step)
    } else {
        text.split(',').map(|p| p.trim().parse()).collect::<Result<_, _>>().map_err(|_| bad())?
    };
    if ns.is_empty() || ns.iter().any(|&n| !(n > 0.0)) {
        bail!(bad());
    }
    Ok(ns)
}

fn compare(args: CompareArgs) -> anyhow::Result<()> {
    let variants: Vec<Variant> = args
        .schemes
        .iter()
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<Variant>().map_err(|e| Usage(e.to_string())))
        .collect::<Result<_, _>>()?;
    if variants.is_empty() {
        bail!(Usage("--schemes lists no priority scheme".into()));
    }
    if args.jitter.is_some() && !variants.contains(&Variant::FlexShare(PriorityScheme::PerRequest)) {
        bail!(Usage("--jitter applies only to per-request priorities".into()));
    }
    check_jitter(PriorityScheme::PerRequest, args.jitter)?;
    let ns = parse_multipliers(&args.n_range)?;
    let base = args.scenario.load()?;
    let name = match (&args.scenario.generate, &args.scenario.scenario) {
        (Some(Generator::Synthetic), _) => "synthetic".to_string(),
        (Some(Generator::Realistic), _) => "realistic".to_string(),
        (None, Some(p)) => p.file_stem().map_or("scenario".into(), |s| s.to_string_lossy().into_owned()),
        (None, None) => "scenario".into(),
    };
    let rows = report::compare(&name, &base, &ns, &variants, args.jitter);
    report::write_csv(&rows, output(args.out.as_deref())?)?;
    Ok(())
}

fn validate(args: ValidateArgs) -> anyhow::Result<()> {
    if args.completions < MIN_COMPLETIONS {
        bail!(Usage(format!("--completions must be at least {MIN_COMPLETIONS}, got {}", args.completions)));
    }
    let sc = args.scenario.load()?;
    let text = std::fs::read_to_string(&args.state).with_context(|| format!("reading {}", args.state.display()))?;
    let state = StateFile::from_json(&text)?.to_state(&sc)?;
    let jitter = match &state.priorities {
        PrioritySpec::Uniform { jitter, .. } => Some(*jitter),
        PrioritySpec::Deterministic { .. } => None,
    };
    let sc = sc.with_scheme(state.priorities.scheme(), jitter);
    let cfg = SimConfig::new(state.clone(), sc.clone(), args.completions, args.scenario.seed);
    let report = sim::simulate(&cfg)?;
    let deviations = sim::compare_to_analytic(&report, &state, &sc)?;
    for d in deviations.iter().filter(|d| d.flagged) {
        log::warn!(
            "{} at {}: simulated {:.6e} s vs analytic {:.6e} s",
            sc.service(d.service).id,
            d.vnf.map_or("end-to-end", |v| sc.vnf(v).id.as_str()),
            d.simulated,
            d.analytic
        );
    }
    sim::write_deviation_csv(&deviations, output(args.out.as_deref())?, &sc)?;
    Ok(())
}

fn generate(args: GenerateArgs) -> anyhow::Result<()> {
    if args.scenario.generate.is_none() {
        bail!(Usage("generate needs --generate synthetic|realistic".into()));
    }
    let sc = args.scheme.apply(args.scenario.load()?)?;
    match &args.out {
        Some(p) => save_scenario(&sc, p)?,
        None => println!("{}", flexshare::model::scenario_to_json(&sc)),
    }
    Ok(())
}
