//! Large-population strategies: randomized compression of the population so
//! the configuration size becomes tunable, and independent per-stratum runs.
//!
//! Compression picks `N* = M* n` units with equal probabilities `N* / N`
//! (local pivotal method), then builds the design on the reduced population,
//! where the minimum configuration size is exactly `M*`. Unconditionally,
//! every unit is included with probability `(N*/N) * (n/N*) = n/N`, but the
//! resulting design is conditional on the selected subset.

use num_rational::Ratio;
use rand::Rng;
use serde::Serialize;

use crate::anneal::{self, AcceptanceRule, AnnealOutcome, AnnealSchedule};
use crate::energy::EnergyModel;
use crate::error::{Error, Result};
use crate::geometry::DistanceProvider;
use crate::metrics::{evaluate_design, EvalInput, EvalOptions, MetricsReport};
use crate::population::{partition_by_strata, Population};
use crate::samplers::{lpm, InclusionVector, InitGenerator};
use crate::seeds;
use crate::tactical::{cyclic_init, min_params, TacticalConfiguration};

/// Compression is suggested automatically once the minimum configuration size
/// exceeds this many samples.
pub const DEFAULT_M_CEILING: usize = 100_000;

/// Whether a `(N, n)` pair warrants compression under a ceiling on `M`.
pub fn needs_compression(n_units: usize, sample_size: usize, m_ceiling: usize) -> Result<bool> {
    Ok(min_params(n_units, sample_size)?.n_samples > m_ceiling)
}

/// Arithmetic of a compression plan, independent of any random selection.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CompressionParams {
    pub population_size: usize,
    pub sample_size: usize,
    /// Chosen configuration size `M*`.
    pub target_configurations: usize,
    /// Reduced population size `N* = M* n`.
    pub reduced_size: usize,
}

impl CompressionParams {
    pub fn new(
        population_size: usize,
        sample_size: usize,
        target_configurations: Option<usize>,
    ) -> Result<Self> {
        if sample_size == 0 || sample_size > population_size {
            return Err(Error::InvalidSampleSize {
                sample_size,
                population_size,
            });
        }
        let max = population_size / sample_size;
        let m_star = target_configurations.unwrap_or(max);
        if m_star == 0 || m_star > max {
            return Err(Error::CompressionSizeOutOfRange { m_star, max });
        }
        Ok(Self {
            population_size,
            sample_size,
            target_configurations: m_star,
            reduced_size: m_star * sample_size,
        })
    }

    /// Probability that a unit enters the reduced population: `N* / N`.
    pub fn selection_probability(&self) -> Ratio<u64> {
        Ratio::new(self.reduced_size as u64, self.population_size as u64)
    }

    /// Per-unit expected frequency `W_i = M* n / N` (equals `N* / N`).
    pub fn weight(&self) -> Ratio<u64> {
        self.selection_probability()
    }

    /// Exact unconditional inclusion probability
    /// `(N*/N) * (1/M*) ... = n/N` as a rational identity.
    pub fn unconditional_inclusion(&self) -> Ratio<u64> {
        self.selection_probability()
            * Ratio::new(
                self.sample_size as u64,
                self.reduced_size as u64,
            )
    }
}

/// A realized compression: the plan plus the selected subset.
#[derive(Debug, Clone)]
pub struct CompressionPlan {
    pub params: CompressionParams,
    /// Selected unit indices in the parent population, sorted.
    pub selected: Vec<u32>,
    /// Designs built on the reduced population are conditional on the draw
    /// of `selected`.
    pub conditional: bool,
}

impl CompressionPlan {
    /// The reduced population, with ids carried over from the parent.
    pub fn reduced_population(&self, pop: &Population) -> Result<Population> {
        pop.restrict(&self.selected)
    }
}

/// Select the reduced population by the local pivotal method with equal
/// probabilities `N* / N`.
pub fn compress_lpm<R: Rng>(
    pop: &Population,
    sample_size: usize,
    target_configurations: Option<usize>,
    geom: &DistanceProvider,
    rng: &mut R,
) -> Result<CompressionPlan> {
    let params = CompressionParams::new(pop.size(), sample_size, target_configurations)?;
    let probs = InclusionVector::new(vec![
        params.reduced_size as f64 / params.population_size as f64;
        params.population_size
    ])?;
    let selected = lpm(&probs, geom, rng)?;
    debug_assert_eq!(selected.len(), params.reduced_size);
    Ok(CompressionPlan {
        params,
        selected,
        conditional: true,
    })
}

/// Per-stratum sample-size allocation.
#[derive(Debug, Clone)]
pub struct StratumAllocation {
    pub label: String,
    pub sample_size: usize,
}

/// How the initial configuration of a run is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitKind {
    Cyclic,
    Sampling,
}

/// Parameters of one optimization pipeline (shared by strata).
#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub iterations: u64,
    pub init: InitKind,
    pub rule: AcceptanceRule,
    /// Overrides the problem-scaled default schedule when set.
    pub schedule_override: Option<(f64, f64)>,
    pub neighbor_count: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            iterations: 100_000,
            init: InitKind::Cyclic,
            rule: AcceptanceRule::Standard,
            schedule_override: None,
            neighbor_count: 2,
        }
    }
}

/// Build and optimize a configuration on one population.
pub fn optimize_population(
    pop: &Population,
    sample_size: usize,
    options: &PipelineOptions,
    master_seed: u64,
) -> Result<(AnnealOutcome, MetricsReport)> {
    let geom = DistanceProvider::new(pop);
    let phi = geom.phi();
    let model = EnergyModel::new(&geom, &phi);
    let mut init_rng = seeds::rng(master_seed, "pipeline.init");
    let cfg = match options.init {
        InitKind::Cyclic => cyclic_init(pop.size(), sample_size, None, &mut init_rng)?,
        InitKind::Sampling => crate::samplers::init_by_sampling(
            pop.size(),
            sample_size,
            &InitGenerator::LocalPivotal(&geom),
            &mut init_rng,
        )?,
    };
    let mut anneal_rng = seeds::rng(master_seed, "pipeline.anneal");
    let schedule = match options.schedule_override {
        Some((t0, alpha)) => AnnealSchedule::new(options.iterations, t0, alpha)?,
        None => anneal::default_schedule(&cfg, &model, options.iterations, &mut anneal_rng),
    };
    let outcome = anneal::run(cfg, &schedule, &model, options.rule, &mut anneal_rng)?;
    let support = outcome.best.support();
    let report = evaluate_design(
        EvalInput::Support(&support),
        pop,
        &model,
        &[],
        &EvalOptions {
            design_name: "dbdtc".into(),
            neighbor_count: options.neighbor_count,
            seed: Some(master_seed),
            ..Default::default()
        },
    )?;
    Ok((outcome, report))
}

/// One stratum's optimized configuration and report.
#[derive(Debug)]
pub struct StratumRun {
    pub label: String,
    /// Unit indices of the stratum in the parent population.
    pub unit_indices: Vec<u32>,
    pub configuration: TacticalConfiguration,
    pub best_expected_energy: f64,
    pub report: MetricsReport,
}

/// Independent per-stratum runs plus pooled Monte Carlo metrics.
#[derive(Debug)]
pub struct StratifiedOutcome {
    pub strata: Vec<StratumRun>,
    pub pooled: MetricsReport,
}

impl StratifiedOutcome {
    /// One combined sample: the union of independent per-stratum draws,
    /// expressed in parent-population unit indices.
    pub fn draw_combined<R: Rng>(&self, rng: &mut R) -> Vec<u32> {
        let mut combined = Vec::new();
        for s in &self.strata {
            for &local in s.configuration.draw_column(rng) {
                combined.push(s.unit_indices[local as usize]);
            }
        }
        combined.sort_unstable();
        combined
    }
}

/// Run the pipeline independently within each stratum and evaluate both the
/// per-stratum designs (exact support) and the pooled design (Monte Carlo
/// over combined draws, since per-unit inclusion probabilities differ across
/// strata).
pub fn stratified_run(
    pop: &Population,
    allocations: &[StratumAllocation],
    options: &PipelineOptions,
    pooled_replicates: usize,
    master_seed: u64,
) -> Result<StratifiedOutcome> {
    let strata = partition_by_strata(pop)?;
    let mut runs = Vec::with_capacity(allocations.len());
    let mut pi = vec![0.0; pop.size()];
    for alloc in allocations {
        let stratum = strata
            .iter()
            .find(|s| s.label == alloc.label)
            .ok_or_else(|| Error::UnknownStratum {
                label: alloc.label.clone(),
            })?;
        if alloc.sample_size > stratum.population.size() {
            return Err(Error::StratumSampleTooLarge {
                label: alloc.label.clone(),
                sample_size: alloc.sample_size,
                stratum_size: stratum.population.size(),
            });
        }
        let stratum_seed = seeds::derive(master_seed, &format!("stratum.{}", alloc.label));
        let (outcome, report) = optimize_population(
            &stratum.population,
            alloc.sample_size,
            options,
            stratum_seed,
        )?;
        let f = alloc.sample_size as f64 / stratum.population.size() as f64;
        for &u in &stratum.unit_indices {
            pi[u as usize] = f;
        }
        runs.push(StratumRun {
            label: alloc.label.clone(),
            unit_indices: stratum.unit_indices.clone(),
            configuration: outcome.best,
            best_expected_energy: outcome.best_expected_energy,
            report,
        });
    }

    // Pooled evaluation over combined draws on the full population.
    let geom = DistanceProvider::new(pop);
    let phi = geom.phi();
    let model = EnergyModel::new(&geom, &phi);
    let outcome_shell = StratifiedOutcome {
        strata: runs,
        pooled: pooled_placeholder(),
    };
    let mut draw_rng = seeds::rng(master_seed, "stratified.pooled");
    let draws: Vec<Vec<u32>> = (0..pooled_replicates.max(1))
        .map(|_| outcome_shell.draw_combined(&mut draw_rng))
        .collect();
    let pooled = evaluate_pooled(&draws, pop, &model, &pi, master_seed)?;
    Ok(StratifiedOutcome {
        pooled,
        ..outcome_shell
    })
}

fn pooled_placeholder() -> MetricsReport {
    MetricsReport {
        design: String::new(),
        mode: crate::metrics::EvaluationMode::MonteCarlo,
        population_size: 0,
        sample_size: 0,
        replicates: 0,
        energy: crate::metrics::MetricSummary { mean: 0.0, sd: 0.0 },
        spatial_balance: crate::metrics::MetricSummary { mean: 0.0, sd: 0.0 },
        lb_variant: crate::metrics::MetricSummary { mean: 0.0, sd: 0.0 },
        balance_deviation: crate::metrics::MetricSummary { mean: 0.0, sd: 0.0 },
        estimators: Vec::new(),
        seed: None,
        config_hash: None,
        rows: Vec::new(),
    }
}

/// Pooled metrics with per-unit (stratum-dependent) inclusion probabilities.
/// Energy and balance deviation generalize directly; the nearest-neighbor
/// metrics reuse the per-unit probabilities through their formulas.
fn evaluate_pooled(
    draws: &[Vec<u32>],
    pop: &Population,
    model: &EnergyModel,
    pi: &[f64],
    seed: u64,
) -> Result<MetricsReport> {
    if draws.is_empty() {
        return Err(Error::EmptySupport);
    }
    let weights = vec![1.0 / draws.len() as f64; draws.len()];
    let geom = model.geometry();
    let phi = model.phi();
    let mut energy = Vec::with_capacity(draws.len());
    let mut sb = Vec::with_capacity(draws.len());
    let mut lb = Vec::with_capacity(draws.len());
    let mut bd = Vec::with_capacity(draws.len());
    for s in draws {
        energy.push(model.sample_energy(s));
        sb.push(crate::metrics::spatial_balance(s, pi, geom));
        lb.push(crate::metrics::local_balance(s, pop, pi, geom, phi));
        bd.push(crate::metrics::balance_deviation(s, pop, pi));
    }
    let summarize = |values: &[f64]| -> crate::metrics::MetricSummary {
        let mean: f64 = values.iter().zip(&weights).map(|(v, w)| v * w).sum();
        let var: f64 = values
            .iter()
            .zip(&weights)
            .map(|(v, w)| w * (v - mean) * (v - mean))
            .sum();
        crate::metrics::MetricSummary {
            mean,
            sd: var.max(0.0).sqrt(),
        }
    };
    Ok(MetricsReport {
        design: "dbdtc-stratified".into(),
        mode: crate::metrics::EvaluationMode::MonteCarlo,
        population_size: pop.size(),
        sample_size: draws[0].len(),
        replicates: draws.len(),
        energy: summarize(&energy),
        spatial_balance: summarize(&sb),
        lb_variant: summarize(&lb),
        balance_deviation: summarize(&bd),
        estimators: Vec::new(),
        seed: Some(seed),
        config_hash: None,
        rows: Vec::new(),
    })
}

/// Draw one final sample through a compression plan: a uniform column of a
/// configuration built on the reduced population, mapped back to parent
/// indices.
pub fn draw_through_compression<R: Rng>(
    plan: &CompressionPlan,
    cfg: &TacticalConfiguration,
    rng: &mut R,
) -> Vec<u32> {
    let column = cfg.draw_column(rng);
    let mut sample: Vec<u32> = column
        .iter()
        .map(|&local| plan.selected[local as usize])
        .collect();
    sample.sort_unstable();
    sample
}
