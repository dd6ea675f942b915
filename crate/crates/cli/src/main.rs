use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use pdsgap::harness::{
    amplification_experiment, isbm_from_config, null_fidelity, phase_sweep, planted_fidelity, recovery_experiment,
    refutation_gap_experiment, run_detection_experiment, write_csv, Config, ExperimentConfig, ExperimentKind,
    ModelPair, ReductionSetup, SweepGrid, DEFAULT_LEVEL,
};
use pdsgap::model::{sample_erdos_renyi, sample_kpc, Hypothesis, KpcParams, PdsParams};
use pdsgap::rng::stream;
use pdsgap::Graph;

#[derive(Parser, Debug)]
#[command(name = "pdsgap", version, about = "Planted dense subgraph reductions and experiments")]
struct Cli {
    /// Master seed; overrides `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Trial count; overrides `trials` in the config.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Flat `key = value` manifest.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Extra `key=value` entries, applied after the config file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Edges,
    Dense,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a graph (`model` = er, pds, pds-star, isbm or kpc).
    Generate {
        #[arg(long, value_enum, default_value = "edges")]
        format: Format,
    },
    /// Map a k-PC graph to PDS* or ISBM; writes the graph, `<out>.support`
    /// and `<out>.trace.json`.
    Reduce {
        /// Source edge list; a `<input>.support` sidecar marks it as planted.
        #[arg(long)]
        input: PathBuf,
    },
    /// Detection trials; fails when Type I + Type II exceeds `max_error`.
    Test,
    /// Exact-recovery trials (`oracle` = topk or amplify).
    Recover,
    /// Densest-k valuation separation on ISBM and null draws.
    Refute,
    /// Phase-diagram sweep over `alphas` x `betas`; infeasible points are
    /// reported and skipped.
    Sweep,
    /// Pushforward fidelity of a reduction (`hypothesis` = null or planted).
    Fidelity,
}

struct Ctx {
    config: Config,
    seed: u64,
    trials: usize,
    out: Option<PathBuf>,
}

impl Ctx {
    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
            None => {
                std::io::stdout().write_all(text.as_bytes())?;
                Ok(())
            }
        }
    }
}

fn summary<T: serde::Serialize>(value: &T) {
    eprintln!("{}", serde_json::to_string_pretty(value).unwrap_or_default());
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn generate(ctx: &Ctx, format: Format) -> Result<bool> {
    let c = &ctx.config;
    let mut rng = stream(ctx.seed, 0);
    let model: String = c.get_or("model", "pds".to_string())?;
    let g = match model.as_str() {
        "er" => sample_erdos_renyi(c.require("n")?, c.require("q")?, &mut rng)?,
        "kpc" => {
            let kpc = KpcParams::contiguous(c.require("n")?, c.require("k0")?, c.get_or("p", 1.0)?, c.require("q")?)?;
            sample_kpc(&kpc, &mut rng)?
        }
        _ => {
            let hypothesis = match c.get_or("hypothesis", "planted".to_string())?.as_str() {
                "null" => Hypothesis::Null,
                "planted" => Hypothesis::Planted,
                other => bail!("unknown hypothesis `{other}`"),
            };
            ModelPair::from_config(c)?.sample(hypothesis, &mut rng)?
        }
    };
    ctx.emit(&match format {
        Format::Edges => g.to_edge_list(),
        Format::Dense => g.to_dense_csv(),
    })?;
    if let (Some(out), Some(line)) = (&ctx.out, g.support_line()) {
        fs::write(sidecar(out, ".support"), line + "\n")?;
    }
    Ok(true)
}

fn read_graph(path: &Path) -> Result<Graph> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let g = Graph::read_edge_list(BufReader::new(file))?;
    let support = sidecar(path, ".support");
    Ok(if support.exists() {
        g.with_planted(Graph::parse_support_line(&fs::read_to_string(support)?)?)
    } else {
        g
    })
}

fn reduce(ctx: &Ctx, input: &Path) -> Result<bool> {
    let out = ctx.out.as_ref().ok_or_else(|| anyhow!("reduce needs --out for its sidecar files"))?;
    let g = read_graph(input)?;
    let mut c = ctx.config.clone();
    c.set("N", g.n());
    let setup = ReductionSetup::from_config(&c, ctx.seed)?;
    let (h, trace) = setup.prepared.run(&g, &setup.kpc, setup.options, &mut stream(ctx.seed, 0))?;
    fs::write(out, h.to_edge_list())?;
    if let Some(line) = h.support_line() {
        fs::write(sidecar(out, ".support"), line + "\n")?;
    }
    fs::write(sidecar(out, ".trace.json"), trace.to_json())?;
    eprintln!(
        "n = {}, k = {}, gamma = {:.3e}, total TV budget = {:.3e}",
        trace.params.n, trace.params.k, trace.params.gamma, trace.total_tv_budget
    );
    Ok(true)
}

fn test(ctx: &Ctx) -> Result<bool> {
    let mut exp = ExperimentConfig::new(ExperimentKind::Detect, ctx.trials, ctx.seed, ctx.config.clone())?;
    exp.record_runtime = ctx.config.get_or("record_runtime", false)?;
    let (curve, rows) = run_detection_experiment(&exp)?;
    ctx.emit(&write_csv(&rows))?;
    summary(&curve);
    Ok(curve.total_error() <= ctx.config.get_or("max_error", 0.5)?)
}

fn recover(ctx: &Ctx) -> Result<bool> {
    let c = &ctx.config;
    let params = PdsParams::new(c.require("n")?, c.require("k")?, c.require("p")?, c.require("q")?)?;
    let min_rate: f64 = c.get_or("min_rate", 0.9)?;
    let (rate, rows) = match c.get_or("oracle", "topk".to_string())?.as_str() {
        "topk" => {
            let (rep, rows) = recovery_experiment(&params, ctx.trials, ctx.seed)?;
            summary(&rep);
            (rep.exact_rate, rows)
        }
        "amplify" => {
            let r_clones = match c.get::<usize>("r_clones")? {
                Some(r) => r,
                None => pdsgap::algorithms::clone_count(params.k, c.get_or("clone_power", 2.1)?),
            };
            let (rep, rows) = amplification_experiment(
                &params,
                c.get_or("corruption", 0.5)?,
                r_clones,
                c.get("c_cut")?,
                ctx.trials,
                ctx.seed,
            )?;
            summary(&rep);
            (rep.exact_rate, rows)
        }
        other => bail!("unknown oracle `{other}`"),
    };
    ctx.emit(&write_csv(&rows))?;
    Ok(rate >= min_rate)
}

fn refute(ctx: &Ctx) -> Result<bool> {
    let params = isbm_from_config(&ctx.config)?;
    let level = ctx.config.get_or("level", DEFAULT_LEVEL)?;
    let (rep, rows) = refutation_gap_experiment(&params, ctx.trials, ctx.seed, level)?;
    ctx.emit(&write_csv(&rows))?;
    summary(&rep);
    Ok(rep.separation_rate >= ctx.config.get_or("min_rate", 0.9)?)
}

fn sweep(ctx: &Ctx) -> Result<bool> {
    let grid = SweepGrid::from_config(&ctx.config, ctx.trials, ctx.seed)?;
    let out = phase_sweep(&grid);
    ctx.emit(&write_csv(&out.rows))?;
    summary(&(&out.points, &out.failures));
    // infeasible grid points are part of the output, not a failed check
    Ok(true)
}

fn fidelity(ctx: &Ctx) -> Result<bool> {
    let c = &ctx.config;
    let setup = ReductionSetup::from_config(c, ctx.seed)?;
    match c.get_or("hypothesis", "null".to_string())?.as_str() {
        "null" => {
            let rep = null_fidelity(&setup, ctx.trials, ctx.seed, c.get_or("significance", 0.01)?)?;
            summary(&rep);
            Ok(rep.all_pass() && rep.edge_count_tv <= c.get_or("max_tv", 0.03)?)
        }
        "planted" => {
            let rep = planted_fidelity(&setup, ctx.trials, ctx.seed)?;
            summary(&rep);
            Ok(rep.pass(c.get_or("sigmas", 3.0)?))
        }
        other => bail!("unknown hypothesis `{other}`"),
    }
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    let mut config = match &cli.config {
        Some(p) => Config::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => Config::default(),
    };
    for kv in &cli.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| anyhow!("--set expects KEY=VALUE, got `{kv}`"))?;
        config.set(k.trim(), v.trim());
    }
    let ctx = Ctx {
        seed: cli.seed.map_or_else(|| config.get_or("seed", 0), Ok)?,
        trials: cli.trials.map_or_else(|| config.get_or("trials", 100), Ok)?,
        out: cli.out.or(config.get::<String>("out")?.map(PathBuf::from)),
        config,
    };
    match &cli.command {
        Command::Generate { format } => generate(&ctx, *format),
        Command::Reduce { input } => reduce(&ctx, input),
        Command::Test => test(&ctx),
        Command::Recover => recover(&ctx),
        Command::Refute => refute(&ctx),
        Command::Sweep => sweep(&ctx),
        Command::Fidelity => fidelity(&ctx),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("statistical check failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
