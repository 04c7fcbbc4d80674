//! Batch entry point: population generation/ingestion, design optimization,
//! sample drawing, evaluation and benchmark reproduction. Progress goes to
//! stderr; data goes to files and stdout only.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use dbdtc::anneal::{self, AcceptanceRule, AnnealSchedule};
use dbdtc::circular;
use dbdtc::energy::EnergyModel;
use dbdtc::geometry::DistanceProvider;
use dbdtc::metrics::{self, EvalInput, EvalOptions, MetricsReport, Target};
use dbdtc::population::{self, CsvOptions, Population};
use dbdtc::report;
use dbdtc::samplers::{self, InclusionVector, InitGenerator};
use dbdtc::scale::{self, StratumAllocation};
use dbdtc::seeds;
use dbdtc::tactical::{cyclic_init, min_params, TacticalConfiguration};

#[derive(Parser, Serialize)]
#[command(
    name = "dbdtc",
    about = "Distributionally balanced sampling designs over minimum tactical configurations",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize)]
enum Command {
    /// Write a synthetic uniform population to CSV.
    Generate(GenerateArgs),
    /// Build and optimize a configuration; write it with its trajectory.
    Optimize(OptimizeArgs),
    /// Draw one sample uniformly from a configuration file.
    Draw(DrawArgs),
    /// Evaluate a design (exact support or Monte Carlo) on a population.
    Evaluate(EvaluateArgs),
    /// Run a multi-design benchmark and emit table-shaped reports.
    Benchmark(BenchmarkArgs),
}

/// Where the population comes from: a CSV file or a synthetic draw.
#[derive(Args, Serialize, Clone)]
struct PopArgs {
    /// Population CSV path (header row; comma separator).
    #[arg(long)]
    pop: Option<PathBuf>,
    /// Comma-separated names of the auxiliary columns.
    #[arg(long)]
    aux_cols: Option<String>,
    /// Optional id column name.
    #[arg(long)]
    id_col: Option<String>,
    /// Optional stratum column name.
    #[arg(long)]
    stratum_col: Option<String>,
    /// Synthetic population spec `N=1000,p=5` (uniform on [0,1]^p).
    #[arg(long, conflicts_with = "pop")]
    synthetic: Option<String>,
    /// Standardize auxiliary columns to mean 0, sd 1 before use.
    #[arg(long, default_value_t = false)]
    standardize: bool,
}

impl PopArgs {
    fn load(&self, master_seed: u64) -> Result<Population> {
        let mut pop = if let Some(path) = &self.pop {
            let aux = self
                .aux_cols
                .as_ref()
                .context("--aux-cols is required with --pop")?;
            let options = CsvOptions {
                aux_columns: aux.split(',').map(|s| s.trim().to_string()).collect(),
                id_column: self.id_col.clone(),
                stratum_column: self.stratum_col.clone(),
            };
            let loaded = population::load_csv(path, &options)?;
            if loaded.rows_dropped > 0 {
                eprintln!(
                    "dropped {} row(s) with missing auxiliary values",
                    loaded.rows_dropped
                );
            }
            loaded.population
        } else if let Some(spec) = &self.synthetic {
            let (n, p) = parse_synthetic(spec)?;
            population::synth_uniform(n, p, seeds::derive(master_seed, "population"))?
        } else {
            bail!("either --pop or --synthetic is required");
        };
        if self.standardize {
            let report = population::standardize(&pop);
            for col in &report.constant_columns {
                eprintln!("warning: auxiliary column {col} is constant; standardized to zero");
            }
            pop = report.population;
        }
        Ok(pop)
    }
}

fn parse_synthetic(spec: &str) -> Result<(usize, usize)> {
    let mut n = None;
    let mut p = None;
    for part in spec.split(',') {
        let (key, value) = part
            .split_once('=')
            .with_context(|| format!("bad synthetic spec fragment '{part}'"))?;
        match key.trim() {
            "N" | "n" => n = Some(value.trim().parse()?),
            "p" | "P" => p = Some(value.trim().parse()?),
            other => bail!("unknown synthetic key '{other}'"),
        }
    }
    Ok((
        n.context("synthetic spec needs N=")?,
        p.context("synthetic spec needs p=")?,
    ))
}

#[derive(Args, Serialize)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    dims: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = false)]
    standardize: bool,
}

#[derive(Args, Serialize)]
struct OptimizeArgs {
    #[command(flatten)]
    population: PopArgs,
    #[arg(long)]
    sample_size: usize,
    #[arg(long, default_value_t = 100_000)]
    iters: u64,
    /// Initialization: `cyclic` or `sampling` (pivotal-method warm start).
    #[arg(long, default_value = "cyclic")]
    init: String,
    /// Initial temperature override (default: probe-scaled).
    #[arg(long)]
    t0: Option<f64>,
    /// Cooling rate override (default: reaches 1e-8 of t0).
    #[arg(long)]
    alpha: Option<f64>,
    /// Use the classical Metropolis acceptance rule.
    #[arg(long, default_value_t = false)]
    metropolis: bool,
    /// Worker count; above 1 the optimizer runs disjoint-pair sweeps.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Compress the population when the configuration size exceeds this.
    #[arg(long, default_value_t = scale::DEFAULT_M_CEILING)]
    m_ceiling: usize,
    /// Fraction of the maximum configuration size kept by compression.
    #[arg(long)]
    compress_ratio: Option<f64>,
    /// Optimize each stratum independently (requires --stratum-col).
    #[arg(long, default_value_t = false)]
    stratify: bool,
    /// Per-stratum sample sizes `label=n,label=n` (with --stratify).
    #[arg(long)]
    allocations: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct DrawArgs {
    /// Configuration file written by `optimize`.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Optional population CSV to map unit indices to ids.
    #[arg(long)]
    pop: Option<PathBuf>,
    #[arg(long)]
    id_col: Option<String>,
    #[arg(long)]
    aux_cols: Option<String>,
}

#[derive(Args, Serialize)]
struct EvaluateArgs {
    #[command(flatten)]
    population: PopArgs,
    /// Evaluate the exact support of this configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Monte Carlo design: `srs`, `systematic` or `lpm`.
    #[arg(long, conflicts_with = "config")]
    design: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    replicates: usize,
    #[arg(long)]
    sample_size: Option<usize>,
    /// Auxiliary column index used to order systematic sampling.
    #[arg(long, default_value_t = 0)]
    order_key: usize,
    /// Comma-separated target column names (CSV populations only).
    #[arg(long)]
    targets: Option<String>,
    /// Neighbor-group size of the variance estimator.
    #[arg(long, default_value_t = 2)]
    neighbors: usize,
    /// Worker threads for replicate evaluation (same results for any count).
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct BenchmarkArgs {
    #[command(flatten)]
    population: PopArgs,
    /// Comma-separated designs among srs, systematic, lpm, circular, dbdtc.
    #[arg(long, default_value = "srs,lpm,dbdtc")]
    designs: String,
    /// Synthetic dimension sweep, e.g. `2,5,10,20`.
    #[arg(long, default_value = "5")]
    dims: String,
    /// Sample-size sweep, e.g. `50` or `100,200`.
    #[arg(long, default_value = "50")]
    sample_sizes: String,
    /// Synthetic population size.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 10_000)]
    replicates: usize,
    /// Annealing iterations for circular and dbdtc.
    #[arg(long, default_value_t = 1_000_000)]
    iters: u64,
    /// Auxiliary column index used to order systematic sampling.
    #[arg(long, default_value_t = 0)]
    order_key: usize,
    /// Comma-separated target column names (CSV populations only).
    #[arg(long)]
    targets: Option<String>,
    #[arg(long, default_value_t = 2)]
    neighbors: usize,
    /// Worker threads for replicate evaluation (same results for any count).
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Optimize(args) => cmd_optimize(args),
        Command::Draw(args) => cmd_draw(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Benchmark(args) => cmd_benchmark(args),
    };
    if let Err(err) = outcome {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run_config_json<T: Serialize>(args: &T) -> String {
    serde_json::to_string(args).expect("run config serializes")
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

// ---------------------------------------------------------------------------

fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let mut pop = population::synth_uniform(args.n, args.dims, seeds::derive(args.seed, "population"))?;
    if args.standardize {
        pop = population::standardize(&pop).population;
    }
    let mut csv = String::from("id");
    for j in 0..args.dims {
        csv.push_str(&format!(",x{}", j + 1));
    }
    csv.push('\n');
    for i in 0..pop.size() {
        csv.push_str(&pop.ids()[i]);
        for j in 0..args.dims {
            csv.push_str(&format!(",{}", pop.aux_value(i, j)));
        }
        csv.push('\n');
    }
    write_file(&args.out, &csv)?;
    eprintln!("wrote {} units to {}", pop.size(), args.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct OptimizeSummary {
    run_config: serde_json::Value,
    seed: u64,
    population_size: usize,
    sample_size: usize,
    n_samples: usize,
    multiplicity: usize,
    initial_expected_energy: f64,
    best_expected_energy: f64,
    final_expected_energy: f64,
    proposed: u64,
    admissible: u64,
    accepted: u64,
    new_best: u64,
    initial_temperature: f64,
    cooling_rate: f64,
    config_hash: String,
    conditional: bool,
    wall_ms: u128,
}

fn acceptance_rule(metropolis: bool) -> AcceptanceRule {
    if metropolis {
        AcceptanceRule::Metropolis
    } else {
        AcceptanceRule::Standard
    }
}

fn cmd_optimize(args: &OptimizeArgs) -> Result<()> {
    if args.stratify {
        return cmd_optimize_stratified(args);
    }
    let started = Instant::now();
    let run_config = serde_json::to_value(args)?;
    let pop = args.population.load(args.seed)?;
    let params = min_params(pop.size(), args.sample_size)?;

    // Compression: explicit ratio, or automatic above the ceiling.
    let (working_pop, plan) = if args.compress_ratio.is_some() || params.n_samples > args.m_ceiling
    {
        let max = pop.size() / args.sample_size;
        let m_star = match args.compress_ratio {
            Some(ratio) => ((max as f64 * ratio).floor() as usize).clamp(1, max),
            None => max.min(args.m_ceiling),
        };
        eprintln!(
            "compressing population: {} units -> {} ({} samples)",
            pop.size(),
            m_star * args.sample_size,
            m_star
        );
        let geom = DistanceProvider::new(&pop);
        let mut rng = seeds::rng(args.seed, "compress");
        let plan = scale::compress_lpm(&pop, args.sample_size, Some(m_star), &geom, &mut rng)?;
        let reduced = plan.reduced_population(&pop)?;
        (reduced, Some(plan))
    } else {
        (pop, None)
    };

    let geom = DistanceProvider::new(&working_pop);
    let phi = geom.phi();
    let model = EnergyModel::new(&geom, &phi);
    let mut init_rng = seeds::rng(args.seed, "init");
    let cfg = match args.init.as_str() {
        "cyclic" => cyclic_init(working_pop.size(), args.sample_size, None, &mut init_rng)?,
        "sampling" => samplers::init_by_sampling(
            working_pop.size(),
            args.sample_size,
            &InitGenerator::LocalPivotal(&geom),
            &mut init_rng,
        )?,
        other => bail!("unknown init '{other}' (expected cyclic or sampling)"),
    };

    let mut anneal_rng = seeds::rng(args.seed, "anneal");
    let mut schedule = anneal::default_schedule(&cfg, &model, args.iters, &mut anneal_rng);
    if let Some(t0) = args.t0 {
        schedule.initial_temperature = t0;
    }
    if let Some(alpha) = args.alpha {
        schedule.cooling_rate = alpha;
    }
    schedule.validate()?;
    let rule = acceptance_rule(args.metropolis);
    let outcome = if args.threads > 1 {
        let sweeps = (args.iters / args.threads as u64).max(1);
        let sweep_schedule = AnnealSchedule {
            iterations: sweeps,
            ..schedule
        };
        anneal::run_sweeps(
            cfg,
            &sweep_schedule,
            &model,
            rule,
            args.threads,
            seeds::derive(args.seed, "anneal.sweeps"),
        )?
    } else {
        anneal::run(cfg, &schedule, &model, rule, &mut anneal_rng)?
    };

    let config_text = outcome.best.to_text();
    let config_hash = report::fnv1a_hex(config_text.as_bytes());
    write_file(&args.out.join("config.txt"), &config_text)?;
    let meta = [
        ("seed", args.seed.to_string()),
        ("run_config", run_config_json(args)),
        ("config_hash", config_hash.clone()),
    ];
    write_file(
        &args.out.join("trajectory.csv"),
        &report::trajectory_csv(&outcome.trajectory, &meta),
    )?;
    if let Some(plan) = &plan {
        #[derive(Serialize)]
        struct PlanFile<'a> {
            params: &'a scale::CompressionParams,
            conditional: bool,
            selected_ids: Option<Vec<u32>>,
            seed: u64,
        }
        let ids = if plan.selected.len() <= 100_000 {
            Some(plan.selected.iter().map(|&u| u + 1).collect())
        } else {
            None
        };
        write_file(
            &args.out.join("compression.json"),
            &report::to_json(&PlanFile {
                params: &plan.params,
                conditional: plan.conditional,
                selected_ids: ids,
                seed: args.seed,
            }),
        )?;
    }
    let summary = OptimizeSummary {
        run_config,
        seed: args.seed,
        population_size: working_pop.size(),
        sample_size: args.sample_size,
        n_samples: outcome.best.n_samples(),
        multiplicity: outcome.best.multiplicity(),
        initial_expected_energy: outcome.initial_expected_energy,
        best_expected_energy: outcome.best_expected_energy,
        final_expected_energy: outcome.final_expected_energy,
        proposed: outcome.counters.proposed,
        admissible: outcome.counters.admissible,
        accepted: outcome.counters.accepted,
        new_best: outcome.counters.new_best,
        initial_temperature: schedule.initial_temperature,
        cooling_rate: schedule.cooling_rate,
        config_hash,
        conditional: plan.is_some(),
        wall_ms: started.elapsed().as_millis(),
    };
    write_file(&args.out.join("summary.json"), &report::to_json(&summary))?;
    eprintln!(
        "optimized: E {:.6} -> {:.6} ({} accepted) in {:?}",
        summary.initial_expected_energy,
        summary.best_expected_energy,
        summary.accepted,
        started.elapsed()
    );
    Ok(())
}

fn parse_allocations(spec: &str) -> Result<Vec<StratumAllocation>> {
    spec.split(',')
        .map(|part| {
            let (label, n) = part
                .split_once('=')
                .with_context(|| format!("bad allocation '{part}'"))?;
            Ok(StratumAllocation {
                label: label.trim().to_string(),
                sample_size: n.trim().parse()?,
            })
        })
        .collect()
}

fn cmd_optimize_stratified(args: &OptimizeArgs) -> Result<()> {
    let started = Instant::now();
    let pop = args.population.load(args.seed)?;
    let allocations = parse_allocations(
        args.allocations
            .as_deref()
            .context("--allocations is required with --stratify")?,
    )?;
    let options = scale::PipelineOptions {
        iterations: args.iters,
        init: if args.init == "sampling" {
            scale::InitKind::Sampling
        } else {
            scale::InitKind::Cyclic
        },
        rule: acceptance_rule(args.metropolis),
        schedule_override: match (args.t0, args.alpha) {
            (Some(t0), Some(alpha)) => Some((t0, alpha)),
            _ => None,
        },
        neighbor_count: 2,
    };
    let outcome = scale::stratified_run(&pop, &allocations, &options, 1000, args.seed)?;
    for run in &outcome.strata {
        write_file(
            &args.out.join(format!("config_{}.txt", run.label)),
            &run.configuration.to_text(),
        )?;
    }
    #[derive(Serialize)]
    struct StratumSummary<'a> {
        label: &'a str,
        units: usize,
        best_expected_energy: f64,
        report: &'a MetricsReport,
    }
    #[derive(Serialize)]
    struct StratifiedSummary<'a> {
        run_config: serde_json::Value,
        seed: u64,
        strata: Vec<StratumSummary<'a>>,
        pooled: &'a MetricsReport,
        wall_ms: u128,
    }
    let summary = StratifiedSummary {
        run_config: serde_json::to_value(args)?,
        seed: args.seed,
        strata: outcome
            .strata
            .iter()
            .map(|r| StratumSummary {
                label: &r.label,
                units: r.unit_indices.len(),
                best_expected_energy: r.best_expected_energy,
                report: &r.report,
            })
            .collect(),
        pooled: &outcome.pooled,
        wall_ms: started.elapsed().as_millis(),
    };
    write_file(&args.out.join("summary.json"), &report::to_json(&summary))?;
    eprintln!(
        "optimized {} strata in {:?}",
        outcome.strata.len(),
        started.elapsed()
    );
    Ok(())
}

// ---------------------------------------------------------------------------

fn cmd_draw(args: &DrawArgs) -> Result<()> {
    let text = fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let cfg = TacticalConfiguration::from_text(&text)?;
    let mut rng = seeds::rng(args.seed, "draw");
    let column = cfg.draw_column(&mut rng);

    let ids: Vec<String> = if let Some(pop_path) = &args.pop {
        let options = CsvOptions {
            aux_columns: args
                .aux_cols
                .as_ref()
                .context("--aux-cols is required with --pop")?
                .split(',')
                .map(|s| s.trim().to_string())
                .collect(),
            id_column: args.id_col.clone(),
            stratum_column: None,
        };
        let loaded = population::load_csv(pop_path, &options)?;
        if loaded.population.size() != cfg.n_units() {
            bail!(
                "population has {} units but configuration expects {}",
                loaded.population.size(),
                cfg.n_units()
            );
        }
        column
            .iter()
            .map(|&u| loaded.population.ids()[u as usize].clone())
            .collect()
    } else {
        column.iter().map(|&u| (u + 1).to_string()).collect()
    };
    let mut out = String::new();
    for id in ids {
        out.push_str(&id);
        out.push('\n');
    }
    print!("{out}");
    Ok(())
}

// ---------------------------------------------------------------------------

fn load_targets(pop_args: &PopArgs, targets: &Option<String>, pop: &Population) -> Result<Vec<Target>> {
    let Some(spec) = targets else {
        return Ok(Vec::new());
    };
    let path = pop_args
        .pop
        .as_ref()
        .context("--targets requires a CSV population")?;
    let names: Vec<String> = spec.split(',').map(|s| s.trim().to_string()).collect();
    let options = CsvOptions {
        aux_columns: names.clone(),
        id_column: pop_args.id_col.clone(),
        stratum_column: None,
    };
    let loaded = population::load_csv(path, &options)?;
    if loaded.population.size() != pop.size() {
        bail!(
            "target columns have {} usable rows, auxiliary columns have {}; \
             missing-value patterns must match",
            loaded.population.size(),
            pop.size()
        );
    }
    Ok(names
        .iter()
        .enumerate()
        .map(|(j, name)| Target::new(name.clone(), loaded.population.column(j)))
        .collect())
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let pop = args.population.load(args.seed)?;
    let geom = DistanceProvider::new(&pop);
    let phi = geom.phi();
    let model = EnergyModel::new(&geom, &phi);
    let targets = load_targets(&args.population, &args.targets, &pop)?;

    let report_out = if let Some(config_path) = &args.config {
        let text = fs::read_to_string(config_path)
            .with_context(|| format!("reading {}", config_path.display()))?;
        let cfg = TacticalConfiguration::from_text(&text)?;
        if cfg.n_units() != pop.size() {
            bail!(
                "configuration is over {} units, population has {}",
                cfg.n_units(),
                pop.size()
            );
        }
        let support = cfg.support();
        metrics::evaluate_design(
            EvalInput::Support(&support),
            &pop,
            &model,
            &targets,
            &EvalOptions {
                design_name: "dbdtc".into(),
                neighbor_count: args.neighbors,
                seed: Some(args.seed),
                config_hash: Some(report::fnv1a_hex(text.as_bytes())),
                keep_rows: true,
                threads: args.threads,
                ..Default::default()
            },
        )?
    } else {
        let design = args
            .design
            .as_deref()
            .context("either --config or --design is required")?;
        let sample_size = args
            .sample_size
            .context("--sample-size is required with --design")?;
        let draws = monte_carlo_draws(
            design,
            &pop,
            &geom,
            sample_size,
            args.replicates,
            args.order_key,
            args.seed,
        )?;
        metrics::evaluate_design(
            EvalInput::Replicates(&draws),
            &pop,
            &model,
            &targets,
            &EvalOptions {
                design_name: design.to_string(),
                neighbor_count: args.neighbors,
                seed: Some(args.seed),
                keep_rows: true,
                threads: args.threads,
                ..Default::default()
            },
        )?
    };

    let meta = [
        ("seed", args.seed.to_string()),
        ("run_config", run_config_json(args)),
    ];
    write_file(
        &args.out.join("report.csv"),
        &report::metrics_csv(&[&report_out], &meta),
    )?;
    #[derive(Serialize)]
    struct EvalFile<'a> {
        run_config: serde_json::Value,
        report: &'a MetricsReport,
    }
    write_file(
        &args.out.join("report.json"),
        &report::to_json(&EvalFile {
            run_config: serde_json::to_value(args)?,
            report: &report_out,
        }),
    )?;
    eprintln!(
        "evaluated {}: mean energy {:.6}",
        report_out.design, report_out.energy.mean
    );
    Ok(())
}

fn monte_carlo_draws(
    design: &str,
    pop: &Population,
    geom: &DistanceProvider,
    sample_size: usize,
    replicates: usize,
    order_key: usize,
    seed: u64,
) -> Result<Vec<Vec<u32>>> {
    let mut draws = Vec::with_capacity(replicates);
    match design {
        "srs" => {
            let mut rng = seeds::rng(seed, "mc.srs");
            for _ in 0..replicates {
                draws.push(samplers::srs(pop.size(), sample_size, &mut rng)?);
            }
        }
        "systematic" => {
            let mut rng = seeds::rng(seed, "mc.systematic");
            for _ in 0..replicates {
                draws.push(samplers::systematic(pop, order_key, sample_size, &mut rng)?);
            }
        }
        "lpm" => {
            let probs = InclusionVector::equal(pop.size(), sample_size)?;
            let mut rng = seeds::rng(seed, "mc.lpm");
            for _ in 0..replicates {
                draws.push(samplers::lpm(&probs, geom, &mut rng)?);
            }
        }
        other => bail!("unknown design '{other}' (expected srs, systematic or lpm)"),
    }
    Ok(draws)
}

// ---------------------------------------------------------------------------

fn cmd_benchmark(args: &BenchmarkArgs) -> Result<()> {
    let started = Instant::now();
    let designs: Vec<String> = args
        .designs
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    for d in &designs {
        if !["srs", "systematic", "lpm", "circular", "dbdtc"].contains(&d.as_str()) {
            bail!("unknown design '{d}'");
        }
    }
    let dims: Vec<usize> = args
        .dims
        .split(',')
        .map(|s| s.trim().parse().context("bad --dims"))
        .collect::<Result<_>>()?;
    let sizes: Vec<usize> = args
        .sample_sizes
        .split(',')
        .map(|s| s.trim().parse().context("bad --sample-sizes"))
        .collect::<Result<_>>()?;

    // A CSV population is evaluated as-is; otherwise each dimension of the
    // sweep gets its own synthetic population.
    let csv_population = args.population.pop.is_some();
    let mut reports: Vec<(usize, usize, MetricsReport)> = Vec::new();
    for &p in &dims {
        let pop = if csv_population {
            args.population.load(args.seed)?
        } else {
            population::synth_uniform(
                args.n,
                p,
                seeds::derive_indexed(args.seed, "benchmark.population", p as u64),
            )?
        };
        let geom = DistanceProvider::new(&pop);
        let phi = geom.phi();
        let model = EnergyModel::new(&geom, &phi);
        let targets = load_targets(&args.population, &args.targets, &pop)?;
        for &n in &sizes {
            for design in &designs {
                eprintln!("benchmark: p={p} n={n} design={design}");
                let (report_out, trajectory) =
                    benchmark_cell(design, &pop, &geom, &model, &targets, n, p, args)?;
                if let Some(points) = trajectory {
                    // Decay curves of the annealed designs, one file per cell.
                    let meta = [
                        ("seed", args.seed.to_string()),
                        ("design", design.clone()),
                        ("run_config", run_config_json(args)),
                    ];
                    write_file(
                        &args.out.join(format!("trajectory_{design}_p{p}_n{n}.csv")),
                        &report::trajectory_csv(&points, &meta),
                    )?;
                }
                reports.push((p, n, report_out));
            }
        }
        if csv_population {
            break; // one population, no dimension sweep
        }
    }

    let meta = [
        ("seed", args.seed.to_string()),
        ("run_config", run_config_json(args)),
    ];
    let mut table = format!(
        "# format_version: {}\n# seed: {}\n# run_config: {}\n\
         dims,sample_size,design,mean_energy,mean_spatial_balance,mean_lb_variant,mean_balance_deviation\n",
        report::FORMAT_VERSION,
        args.seed,
        run_config_json(args)
    );
    for (p, n, r) in &reports {
        table.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            p,
            n,
            r.design,
            r.energy.mean,
            r.spatial_balance.mean,
            r.lb_variant.mean,
            r.balance_deviation.mean
        ));
    }
    write_file(&args.out.join("table.csv"), &table)?;

    let dist_rows: Vec<(&str, usize, &MetricsReport)> = reports
        .iter()
        .map(|(p, _, r)| (r.design.as_str(), *p, r))
        .collect();
    write_file(
        &args.out.join("distributions.csv"),
        &report::distributions_csv(&dist_rows, &meta),
    )?;

    // Estimator table (RRMSE and coverage per target) when targets exist.
    if reports.iter().any(|(_, _, r)| !r.estimators.is_empty()) {
        let mut estimators = format!(
            "# format_version: {}\n# seed: {}\n# run_config: {}\n\
             dims,sample_size,design,target,rrmse,rrmse_is_absolute,coverage\n",
            report::FORMAT_VERSION,
            args.seed,
            run_config_json(args)
        );
        for (p, n, r) in &reports {
            for e in &r.estimators {
                estimators.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    p, n, r.design, e.target, e.rrmse, e.rrmse_is_absolute, e.coverage
                ));
            }
        }
        write_file(&args.out.join("estimators.csv"), &estimators)?;
    }
    #[derive(Serialize)]
    struct BenchFile<'a> {
        run_config: serde_json::Value,
        seed: u64,
        notes: serde_json::Value,
        cells: Vec<BenchCell<'a>>,
    }
    #[derive(Serialize)]
    struct BenchCell<'a> {
        dims: usize,
        sample_size: usize,
        report: &'a MetricsReport,
    }
    write_file(
        &args.out.join("benchmark.json"),
        &report::to_json(&BenchFile {
            run_config: serde_json::to_value(args)?,
            seed: args.seed,
            notes: serde_json::json!({
                "circular": "structural stand-in baseline: position-swap proposals and \
                             this library's schedule, not a reimplementation of any \
                             published circular optimizer",
            }),
            cells: reports
                .iter()
                .map(|(p, n, r)| BenchCell {
                    dims: *p,
                    sample_size: *n,
                    report: r,
                })
                .collect(),
        }),
    )?;
    eprintln!(
        "benchmark complete: {} cells in {:?}",
        reports.len(),
        started.elapsed()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn benchmark_cell(
    design: &str,
    pop: &Population,
    geom: &DistanceProvider,
    model: &EnergyModel,
    targets: &[Target],
    sample_size: usize,
    dims: usize,
    args: &BenchmarkArgs,
) -> Result<(MetricsReport, Option<Vec<anneal::TrajectoryPoint>>)> {
    let cell_seed = seeds::derive(
        args.seed,
        &format!("benchmark.cell.{design}.{dims}.{sample_size}"),
    );
    let options = EvalOptions {
        design_name: design.to_string(),
        neighbor_count: args.neighbors,
        seed: Some(cell_seed),
        keep_rows: true,
        threads: args.threads,
        ..Default::default()
    };
    let cell = match design {
        "srs" | "systematic" | "lpm" => {
            let draws = monte_carlo_draws(
                design,
                pop,
                geom,
                sample_size,
                args.replicates,
                args.order_key,
                cell_seed,
            )?;
            (
                metrics::evaluate_design(
                    EvalInput::Replicates(&draws),
                    pop,
                    model,
                    targets,
                    &options,
                )?,
                None,
            )
        }
        "circular" => {
            let mut rng = seeds::rng(cell_seed, "circular");
            let probe = cyclic_init(pop.size(), sample_size, None, &mut rng)?;
            let schedule = anneal::default_schedule(&probe, model, args.iters, &mut rng);
            let outcome = circular::circular_anneal(
                model,
                sample_size,
                &schedule,
                AcceptanceRule::Standard,
                &mut rng,
            )?;
            let support = outcome.design.support();
            (
                metrics::evaluate_design(
                    EvalInput::Support(&support),
                    pop,
                    model,
                    targets,
                    &options,
                )?,
                Some(outcome.trajectory),
            )
        }
        "dbdtc" => {
            let mut rng = seeds::rng(cell_seed, "dbdtc");
            let cfg = cyclic_init(pop.size(), sample_size, None, &mut rng)?;
            let schedule = anneal::default_schedule(&cfg, model, args.iters, &mut rng);
            let outcome = anneal::run(cfg, &schedule, model, AcceptanceRule::Standard, &mut rng)?;
            let support = outcome.best.support();
            (
                metrics::evaluate_design(
                    EvalInput::Support(&support),
                    pop,
                    model,
                    targets,
                    &options,
                )?,
                Some(outcome.trajectory),
            )
        }
        other => bail!("unknown design '{other}'"),
    };
    Ok(cell)
}
