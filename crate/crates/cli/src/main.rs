//! `cogtown`: run the daily-life town, run experiments, render reports.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cogtown_core::backend::{
    Backend, BackendError, Gateway, GenerationDefaults, HttpBackend, HttpConfig, ReplayBackend, ScriptRule,
    ScriptedBackend, TemplateSet,
};
use cogtown_core::cognition::Ablation;
use cogtown_core::sim::{RunConfig, SimError, World};
use cogtown_lab::output::{report, wide, write_run};
use cogtown_lab::{run_experiment, ExperimentKind, ExperimentProtocol, LabError, Variant};

#[derive(Parser, Debug)]
#[command(name = "cogtown", version, about = "Affective generative agents: daily-life simulation and psychology experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a town simulation.
    #[command(subcommand)]
    Simulate(Simulate),
    /// Run or list experiments.
    #[command(subcommand)]
    Experiment(Experiment),
    /// Render CSV tables and plot data for a finished run.
    Report(ReportArgs),
}

#[derive(Subcommand, Debug)]
enum Simulate {
    /// The daily-life scenario (or the world in the config file).
    Daily(DailyArgs),
}

#[derive(Subcommand, Debug)]
enum Experiment {
    /// Run one experiment and write its tables under the output directory.
    Run(RunArgs),
    /// List the experiments and their variants.
    List,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum BackendKind {
    /// Deterministic rule-based responses.
    Scripted,
    /// Responses looked up in a recorded transcript.
    Replay,
    /// An OpenAI-compatible completion endpoint.
    Http,
}

#[derive(Args, Debug)]
struct BackendArgs {
    /// Recorded transcript to replay (with `--backend replay`).
    #[arg(long, value_name = "FILE")]
    transcript: Option<PathBuf>,
    /// Endpoint base URL (with `--backend http`).
    #[arg(long, value_name = "URL")]
    url: Option<String>,
    /// Model name sent to the endpoint.
    #[arg(long)]
    model: Option<String>,
    /// Environment variable holding the API key.
    #[arg(long, value_name = "VAR", default_value = "COGTOWN_API_KEY")]
    api_key_env: String,
    /// Record every exchange to `transcript.jsonl` in the output directory
    /// (with `--backend http`).
    #[arg(long)]
    record: bool,
    /// JSON file with extra scripted rules, a list of
    /// {"template", "pattern", "response"} (with `--backend scripted`).
    #[arg(long, value_name = "FILE")]
    rules: Option<PathBuf>,
    /// Directory of `*.txt` prompt templates overriding the built-in ones.
    #[arg(long, value_name = "DIR")]
    templates: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DailyArgs {
    /// Run configuration (JSON).
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Engine; overrides the config.
    #[arg(long, value_enum)]
    backend: Option<BackendKind>,
    /// Waking ticks to run; overrides the config.
    #[arg(long)]
    ticks: Option<u64>,
    /// Continue from a checkpoint written by an interrupted run.
    #[arg(long, value_name = "FILE")]
    resume: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "out/daily")]
    out: PathBuf,
    #[command(flatten)]
    engine: BackendArgs,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// helplessness, dissonance, fitd, diffusion or ostracism.
    #[arg(value_parser = parse_kind)]
    name: ExperimentKind,
    /// based, affection, sim, self, mind or full.
    #[arg(long, value_parser = parse_ablation, default_value = "full")]
    ablation: Ablation,
    /// base or extended.
    #[arg(long, value_parser = parse_variant, default_value = "base")]
    variant: Variant,
    /// Repetitions; defaults to the protocol's.
    #[arg(long)]
    repetitions: Option<usize>,
    /// Seed; defaults to the protocol's.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "scripted")]
    backend: BackendKind,
    /// Parallel repetitions; defaults to the number of logical cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory; defaults to out/<name>_<variant>_<ablation>.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Protocol file replacing the built-in one.
    #[arg(long, value_name = "FILE")]
    protocol: Option<PathBuf>,
    #[command(flatten)]
    engine: BackendArgs,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Directory written by `experiment run` or `simulate daily`.
    #[arg(long = "in", value_name = "DIR")]
    input: PathBuf,
}

fn parse_kind(s: &str) -> Result<ExperimentKind, String> {
    s.parse()
}

fn parse_ablation(s: &str) -> Result<Ablation, String> {
    s.parse()
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse()
}

/// A failure and the exit code it maps to.
#[derive(Debug)]
enum Failure {
    Config(String),
    Unavailable(String),
    Other(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Unavailable(_) => 3,
            Failure::Other(_) => 1,
        }
    }
}

impl From<BackendError> for Failure {
    fn from(e: BackendError) -> Self {
        match e {
            BackendError::Unavailable(_) => Failure::Unavailable(e.to_string()),
            BackendError::Config(_) | BackendError::Template(_) | BackendError::Transcript(_) => {
                Failure::Config(e.to_string())
            }
            _ => Failure::Other(e.to_string()),
        }
    }
}

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        match e {
            LabError::Config(m) => Failure::Config(m),
            LabError::Backend(b) => b.into(),
            other => Failure::Other(other.to_string()),
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(m) => Failure::Config(m),
            SimError::Backend { error, tick, checkpoint } => {
                let at = match checkpoint {
                    Some(p) => format!(" at tick {tick}; resume with --resume {}", p.display()),
                    None => format!(" at tick {tick}"),
                };
                match Failure::from(error) {
                    Failure::Unavailable(m) => Failure::Unavailable(m + &at),
                    Failure::Config(m) => Failure::Config(m + &at),
                    Failure::Other(m) => Failure::Other(m + &at),
                }
            }
            other => Failure::Other(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

/// The engine the flags ask for, plus the HTTP backend when recording.
struct Engine {
    backend: Arc<dyn Backend>,
    recorder: Option<Arc<HttpBackend>>,
}

fn load_rules(path: &Path) -> Result<Vec<ScriptRule>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn build_engine(kind: BackendKind, a: &BackendArgs, base_rules: Vec<ScriptRule>, http: Option<HttpConfig>) -> Result<Engine, Failure> {
    if a.record && kind != BackendKind::Http {
        return Err(Failure::Config("--record needs --backend http".into()));
    }
    let backend: Arc<dyn Backend> = match kind {
        BackendKind::Scripted => {
            let mut rules = base_rules;
            if let Some(p) = &a.rules {
                rules.extend(load_rules(p)?);
            }
            Arc::new(ScriptedBackend::new(rules)?)
        }
        BackendKind::Replay => {
            let path = a
                .transcript
                .as_ref()
                .ok_or_else(|| Failure::Config("--backend replay needs --transcript FILE".into()))?;
            Arc::new(ReplayBackend::from_file(path)?)
        }
        BackendKind::Http => {
            let mut config = http.unwrap_or_default();
            if let Some(u) = &a.url {
                config.base_url = u.clone();
            }
            if let Some(m) = &a.model {
                config.model = m.clone();
            }
            config.api_key_env = a.api_key_env.clone();
            let mut b = HttpBackend::new(config)?;
            if a.record {
                b = b.recording();
            }
            let b = Arc::new(b);
            return Ok(Engine {
                backend: b.clone(),
                recorder: a.record.then_some(b),
            });
        }
    };
    Ok(Engine { backend, recorder: None })
}

fn templates(dir: Option<&Path>) -> Result<TemplateSet, Failure> {
    let mut t = TemplateSet::builtin();
    if let Some(d) = dir {
        t.override_from_dir(d)?;
    }
    Ok(t)
}

fn save_transcript(engine: &Engine, out: &Path) -> Result<(), Failure> {
    if let Some(t) = engine.recorder.as_ref().and_then(|r| r.take_transcript()) {
        let path = out.join("transcript.jsonl");
        t.save(&path)?;
        println!("wrote {} ({} exchanges)", path.display(), t.len());
    }
    Ok(())
}

fn simulate(args: DailyArgs) -> Result<(), Failure> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = Some(s);
    }
    if let Some(t) = args.ticks {
        cfg.ticks = t;
    }
    let seed = cfg.seed();
    let dir = args.engine.templates.as_deref().or(cfg.templates_dir.as_deref());
    let tpl = templates(dir)?;
    let defaults = GenerationDefaults {
        seed,
        ..GenerationDefaults::default()
    };
    let (gw, engine) = match args.backend {
        None if !args.engine.record => (cfg.gateway()?, None),
        kind => {
            let kind = kind.unwrap_or(BackendKind::Http);
            let http = match &cfg.backend {
                cogtown_core::sim::BackendChoice::Http { config } => Some(config.clone()),
                _ => None,
            };
            let base = match (&cfg.backend, kind) {
                (cogtown_core::sim::BackendChoice::Scripted { rules }, BackendKind::Scripted) => {
                    let mut all = ScriptedBackend::daily_life_rules();
                    all.extend(rules.iter().cloned());
                    all
                }
                (_, BackendKind::Scripted) => ScriptedBackend::daily_life_rules(),
                _ => Vec::new(),
            };
            let e = build_engine(kind, &args.engine, base, http)?;
            (Gateway::new(e.backend.clone(), tpl, defaults), Some(e))
        }
    };

    let mut world = match &args.resume {
        Some(p) => World::load_checkpoint(p)?,
        None => World::new(cfg.world_config())?,
    };
    std::fs::create_dir_all(&args.out)?;
    let checkpoint = args.out.join("checkpoint.json");
    let result = world.run_to(&gw, cfg.ticks, Some(&checkpoint));
    if let Some(e) = &engine {
        save_transcript(e, &args.out)?;
    }
    result?;
    world.save_checkpoint(&checkpoint)?;
    for p in world.write_outputs(&args.out)? {
        println!("wrote {}", p.display());
    }
    println!("{} agents, {} ticks, seed {seed}", world.agents.len(), world.ticks_done);
    Ok(())
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let protocol = match &args.protocol {
        Some(p) => ExperimentProtocol::load_for(p, args.name)?,
        None => ExperimentProtocol::builtin(args.name, args.variant),
    };
    if args.protocol.is_some() && protocol.variant != args.variant {
        log::info!("protocol file sets variant `{}`", protocol.variant);
    }
    let mut protocol = protocol.with_ablation(args.ablation);
    if let Some(r) = args.repetitions {
        protocol.repetitions = r;
    }
    if let Some(s) = args.seed {
        protocol.seed = s;
    }
    protocol.validate()?;

    let out = args.out.clone().unwrap_or_else(|| {
        PathBuf::from("out").join(format!("{}_{}_{}", protocol.name, protocol.variant, protocol.ablation))
    });
    let engine = build_engine(args.backend, &args.engine, Vec::new(), None)?;
    let defaults = GenerationDefaults {
        seed: protocol.seed,
        ..GenerationDefaults::default()
    };
    let gw = Gateway::new(engine.backend.clone(), templates(args.engine.templates.as_deref())?, defaults);
    std::fs::create_dir_all(&out)?;
    let result = run_experiment(&protocol, &gw, args.jobs);
    save_transcript(&engine, &out)?;
    let run = result?;
    for p in write_run(&run, &out)? {
        println!("wrote {}", p.display());
    }
    println!(
        "{} ({}, {}): {} repetitions, seed {}, engine {}",
        protocol.name, protocol.variant, protocol.ablation, protocol.repetitions, protocol.seed, run.table.engine
    );
    for row in wide(&run.table) {
        println!("{}", row.join("\t"));
    }
    if run.table.invalid_trials > 0 {
        println!("{} invalid trials", run.table.invalid_trials);
    }
    Ok(())
}

fn list() {
    for kind in ExperimentKind::ALL {
        for variant in [Variant::Base, Variant::Extended] {
            let p = ExperimentProtocol::builtin(kind, variant);
            let groups: Vec<String> = p.groups.iter().map(|g| format!("{} ({})", g.label, g.size)).collect();
            println!("{kind}\t{variant}\t{} agents\t{}", p.n_agents, groups.join(", "));
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(Simulate::Daily(a)) => simulate(a),
        Command::Experiment(Experiment::Run(a)) => run(a),
        Command::Experiment(Experiment::List) => {
            list();
            Ok(())
        }
        Command::Report(a) => report(&a.input).map_err(Failure::from).map(|paths| {
            for p in paths {
                println!("wrote {}", p.display());
            }
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let msg = match &f {
                Failure::Config(m) => format!("configuration error: {m}"),
                Failure::Unavailable(m) | Failure::Other(m) => m.clone(),
            };
            eprintln!("error: {msg}");
            ExitCode::from(f.code())
        }
    }
}
