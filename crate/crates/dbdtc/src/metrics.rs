//! Design-quality measures: energy distance aggregation, spatial balance,
//! a labeled local-balance variant, balance deviation, Horvitz-Thompson
//! estimation with a local-mean variance estimator, RRMSE and CI coverage.
//!
//! Designs are evaluated either on an explicit support (probability-weighted
//! enumeration of the distinct samples) or on a stream of Monte Carlo
//! replicate samples.
//!
//! # References
//! Stevens, D.L., & Olsen, A.R. (2004). Spatially balanced sampling of
//! natural resources. JASA, 99(465), 262-278. (spatial balance measure)

use serde::Serialize;

use crate::energy::EnergyModel;
use crate::error::{Error, Result};
use crate::geometry::{DistanceProvider, PhiVector};
use crate::population::Population;
use crate::tactical::DesignSupport;

/// Two-sided 95% normal quantile used for coverage intervals.
pub const Z_95: f64 = 1.959964;

/// Horvitz-Thompson total of `values` over the sampled units.
pub fn ht_total(sample: &[u32], values: &[f64], pi: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for &i in sample {
        let p = pi[i as usize];
        if p <= 0.0 {
            return Err(Error::ZeroInclusionProbability { unit: i });
        }
        total += values[i as usize] / p;
    }
    Ok(total)
}

/// Euclidean distance between the HT-estimated auxiliary totals and the true
/// totals.
pub fn balance_deviation(sample: &[u32], pop: &Population, pi: &[f64]) -> f64 {
    let dims = pop.dims();
    let mut estimate = vec![0.0; dims];
    for &i in sample {
        let w = 1.0 / pi[i as usize];
        for (e, x) in estimate.iter_mut().zip(pop.aux_row(i as usize)) {
            *e += x * w;
        }
    }
    let totals = pop.aux_totals();
    estimate
        .iter()
        .zip(&totals)
        .map(|(e, t)| (e - t) * (e - t))
        .sum::<f64>()
        .sqrt()
}

/// Inclusion-probability mass and probability-weighted auxiliary mass of the
/// nearest-neighbor region around each sampled unit (sorted centers).
struct VoronoiMass {
    centers: Vec<u32>,
    mass: Vec<f64>,
    weighted_aux: Vec<f64>, // centers.len() x dims
}

fn voronoi_mass(sample: &[u32], pop: &Population, pi: &[f64], geom: &DistanceProvider) -> VoronoiMass {
    let dims = pop.dims();
    let mut centers = sample.to_vec();
    centers.sort_unstable();
    let assignment = geom.voronoi_assign(&centers);
    let mut mass = vec![0.0; centers.len()];
    let mut weighted_aux = vec![0.0; centers.len() * dims];
    for (unit, &center) in assignment.iter().enumerate() {
        let pos = centers.binary_search(&center).expect("center in sample");
        mass[pos] += pi[unit];
        for (w, x) in weighted_aux[pos * dims..(pos + 1) * dims]
            .iter_mut()
            .zip(pop.aux_row(unit))
        {
            *w += pi[unit] * x;
        }
    }
    VoronoiMass {
        centers,
        mass,
        weighted_aux,
    }
}

fn spatial_balance_from(mass: &VoronoiMass) -> f64 {
    mass.mass.iter().map(|v| (v - 1.0) * (v - 1.0)).sum::<f64>() / mass.centers.len() as f64
}

fn local_balance_from(mass: &VoronoiMass, pop: &Population, phi: &PhiVector) -> f64 {
    let dims = pop.dims();
    let mut sum_norm = 0.0;
    for (pos, &center) in mass.centers.iter().enumerate() {
        let x_center = pop.aux_row(center as usize);
        let norm: f64 = mass.weighted_aux[pos * dims..(pos + 1) * dims]
            .iter()
            .zip(x_center)
            .map(|(w, x)| {
                let r = w - mass.mass[pos] * x;
                r * r
            })
            .sum::<f64>()
            .sqrt();
        sum_norm += norm;
    }
    sum_norm / mass.centers.len() as f64 / (1.0 + phi.mean())
}

/// Mean squared deviation from one of the inclusion-probability mass
/// collected by each sampled unit's nearest-neighbor region.
pub fn spatial_balance(sample: &[u32], pi: &[f64], geom: &DistanceProvider) -> f64 {
    // The auxiliary accumulation is unused here; the shared pass keeps the
    // two region-based measures consistent.
    let pop = geom.population();
    spatial_balance_from(&voronoi_mass(sample, pop, pi, geom))
}

/// Local-balance variant: per sampled unit `i`, the residual between the
/// probability-weighted auxiliary mass of its nearest-neighbor region and the
/// region mass placed at `x_i`, normalized by the population mean distance.
///
/// This is a variant measure (the literature defines local balance
/// differently); report it under the `lb_variant` label only.
pub fn local_balance(
    sample: &[u32],
    pop: &Population,
    pi: &[f64],
    geom: &DistanceProvider,
    phi: &PhiVector,
) -> f64 {
    local_balance_from(&voronoi_mass(sample, pop, pi, geom), pop, phi)
}

/// All four per-sample metrics with one nearest-neighbor pass.
pub fn sample_metrics(
    sample: &[u32],
    pop: &Population,
    pi: &[f64],
    model: &EnergyModel,
) -> SampleRow {
    let geom = model.geometry();
    let mass = voronoi_mass(sample, pop, pi, geom);
    SampleRow {
        weight: 0.0,
        energy: model.sample_energy(sample),
        spatial_balance: spatial_balance_from(&mass),
        lb_variant: local_balance_from(&mass, pop, model.phi()),
        balance_deviation: balance_deviation(sample, pop, pi),
    }
}

/// Local-mean variance estimator: each sampled unit is grouped with its
/// `k - 1` nearest sampled neighbors and contributes
/// `k / (k - 1) * (a_i - mean(group))^2` on the expansion scale `a = y / pi`.
pub fn local_mean_variance(
    sample: &[u32],
    values: &[f64],
    pi: &[f64],
    k: usize,
    geom: &DistanceProvider,
) -> Result<f64> {
    if k < 2 || sample.len() < k {
        return Err(Error::InvalidNeighborCount {
            k,
            sample_size: sample.len(),
        });
    }
    let expansion = |unit: u32| -> Result<f64> {
        let p = pi[unit as usize];
        if p <= 0.0 {
            return Err(Error::ZeroInclusionProbability { unit });
        }
        Ok(values[unit as usize] / p)
    };
    let factor = k as f64 / (k as f64 - 1.0);
    let mut total = 0.0;
    for &i in sample {
        let neighbors = geom.nearest_sampled_neighbors(sample, i, k)?;
        let mut group_sum = expansion(i)?;
        for &j in &neighbors {
            group_sum += expansion(j)?;
        }
        let mean = group_sum / k as f64;
        let d = expansion(i)? - mean;
        total += factor * d * d;
    }
    Ok(total)
}

/// A study variable evaluated through the HT estimator.
#[derive(Debug, Clone)]
pub struct Target {
    pub name: String,
    pub values: Vec<f64>,
}

impl Target {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            values,
        }
    }
}

/// Per-sample metric row of a report.
#[derive(Debug, Clone, Default, Serialize)]
pub struct SampleRow {
    pub weight: f64,
    pub energy: f64,
    pub spatial_balance: f64,
    pub lb_variant: f64,
    pub balance_deviation: f64,
}

/// Probability-weighted mean and standard deviation of one metric.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub sd: f64,
}

fn summarize(values: &[f64], weights: &[f64]) -> MetricSummary {
    let mean: f64 = values.iter().zip(weights).map(|(v, w)| v * w).sum();
    let var: f64 = values
        .iter()
        .zip(weights)
        .map(|(v, w)| w * (v - mean) * (v - mean))
        .sum();
    MetricSummary {
        mean,
        sd: var.max(0.0).sqrt(),
    }
}

/// HT-estimator quality for one target variable.
#[derive(Debug, Clone, Serialize)]
pub struct EstimatorSummary {
    pub target: String,
    pub true_total: f64,
    /// Root mean squared error over the true total; the plain RMSE when the
    /// total is (numerically) zero.
    pub rrmse: f64,
    pub rrmse_is_absolute: bool,
    /// Share of samples whose normal interval `ht ± z sqrt(v)` covers the
    /// true total.
    pub coverage: f64,
}

/// How samples are fed into [`evaluate_design`].
pub enum EvalInput<'a> {
    /// Exact enumeration of a design's distinct samples with probabilities.
    Support(&'a DesignSupport),
    /// Monte Carlo replicate samples, equally weighted.
    Replicates(&'a [Vec<u32>]),
}

/// Evaluation settings.
#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub design_name: String,
    /// Group size of the local-mean variance estimator.
    pub neighbor_count: usize,
    /// Normal quantile of the coverage interval.
    pub confidence_z: f64,
    pub seed: Option<u64>,
    pub config_hash: Option<String>,
    /// Whether per-sample rows are retained in the report.
    pub keep_rows: bool,
    /// Worker threads for per-sample metric evaluation. Results are
    /// identical for every thread count (samples are scored independently
    /// and aggregated in input order).
    pub threads: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            design_name: String::new(),
            neighbor_count: 2,
            confidence_z: Z_95,
            seed: None,
            config_hash: None,
            keep_rows: false,
            threads: 1,
        }
    }
}

/// Evaluation mode recorded in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaluationMode {
    ExactSupport,
    MonteCarlo,
}

/// Aggregated design-quality report.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub design: String,
    pub mode: EvaluationMode,
    pub population_size: usize,
    pub sample_size: usize,
    pub replicates: usize,
    pub energy: MetricSummary,
    pub spatial_balance: MetricSummary,
    pub lb_variant: MetricSummary,
    pub balance_deviation: MetricSummary,
    pub estimators: Vec<EstimatorSummary>,
    pub seed: Option<u64>,
    pub config_hash: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub rows: Vec<SampleRow>,
}

/// Evaluate a design on the four sample metrics and, per target, RRMSE and
/// coverage of the HT estimator with the local-mean variance.
pub fn evaluate_design(
    input: EvalInput,
    pop: &Population,
    model: &EnergyModel,
    targets: &[Target],
    options: &EvalOptions,
) -> Result<MetricsReport> {
    let n_units = pop.size();
    for t in targets {
        if t.values.len() != n_units {
            return Err(Error::TargetLengthMismatch {
                name: t.name.clone(),
                expected: n_units,
                actual: t.values.len(),
            });
        }
    }
    let (samples, weights, mode, replicates): (Vec<&[u32]>, Vec<f64>, _, usize) = match &input {
        EvalInput::Support(support) => {
            if support.is_empty() {
                return Err(Error::EmptySupport);
            }
            let m = support.configuration_size() as f64;
            let mut samples = Vec::with_capacity(support.len());
            let mut weights = Vec::with_capacity(support.len());
            for (s, mult) in support.iter() {
                samples.push(s);
                weights.push(mult as f64 / m);
            }
            (
                samples,
                weights,
                EvaluationMode::ExactSupport,
                support.configuration_size(),
            )
        }
        EvalInput::Replicates(reps) => {
            if reps.is_empty() {
                return Err(Error::EmptySupport);
            }
            let w = 1.0 / reps.len() as f64;
            (
                reps.iter().map(|r| r.as_slice()).collect(),
                vec![w; reps.len()],
                EvaluationMode::MonteCarlo,
                reps.len(),
            )
        }
    };

    let sample_size = samples[0].len();
    let pi = vec![sample_size as f64 / n_units as f64; n_units];
    let geom = model.geometry();

    let workers = options.threads.max(1).min(samples.len());
    let mut rows: Vec<SampleRow> = vec![SampleRow::default(); samples.len()];
    if workers > 1 {
        let chunk = samples.len().div_ceil(workers);
        std::thread::scope(|scope| {
            for (sample_chunk, row_chunk) in samples.chunks(chunk).zip(rows.chunks_mut(chunk)) {
                let pi = &pi;
                scope.spawn(move || {
                    for (s, slot) in sample_chunk.iter().zip(row_chunk) {
                        *slot = sample_metrics(s, pop, pi, model);
                    }
                });
            }
        });
    } else {
        for (s, slot) in samples.iter().zip(rows.iter_mut()) {
            *slot = sample_metrics(s, pop, &pi, model);
        }
    }
    for (row, &w) in rows.iter_mut().zip(&weights) {
        row.weight = w;
    }

    let collect = |f: &dyn Fn(&SampleRow) -> f64| -> Vec<f64> { rows.iter().map(f).collect() };
    let energy = summarize(&collect(&|r| r.energy), &weights);
    let sb = summarize(&collect(&|r| r.spatial_balance), &weights);
    let lb = summarize(&collect(&|r| r.lb_variant), &weights);
    let bd = summarize(&collect(&|r| r.balance_deviation), &weights);

    let mut estimators = Vec::with_capacity(targets.len());
    for target in targets {
        let true_total: f64 = target.values.iter().sum();
        let mut mse = 0.0;
        let mut coverage = 0.0;
        for (s, &w) in samples.iter().zip(&weights) {
            let estimate = ht_total(s, &target.values, &pi)?;
            let err = estimate - true_total;
            mse += w * err * err;
            let variance = local_mean_variance(s, &target.values, &pi, options.neighbor_count, geom)?;
            if err.abs() <= options.confidence_z * variance.max(0.0).sqrt() {
                coverage += w;
            }
        }
        let rmse = mse.sqrt();
        let absolute = true_total.abs() < 1e-12;
        estimators.push(EstimatorSummary {
            target: target.name.clone(),
            true_total,
            rrmse: if absolute { rmse } else { rmse / true_total.abs() },
            rrmse_is_absolute: absolute,
            // Weight sums carry float residue; coverage is a probability.
            coverage: coverage.min(1.0),
        });
    }

    Ok(MetricsReport {
        design: options.design_name.clone(),
        mode,
        population_size: n_units,
        sample_size,
        replicates,
        energy,
        spatial_balance: sb,
        lb_variant: lb,
        balance_deviation: bd,
        estimators,
        seed: options.seed,
        config_hash: options.config_hash.clone(),
        rows: if options.keep_rows { rows } else { Vec::new() },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DistanceProvider;
    use crate::population::{synth_uniform, Population};
    use crate::seeds;
    use crate::tactical::cyclic_init;

    fn fixture(pop: &Population) -> (DistanceProvider<'_>, PhiVector) {
        let geom = DistanceProvider::new(pop);
        let phi = geom.phi();
        (geom, phi)
    }

    #[test]
    fn ht_total_census_and_calibration() {
        let pop = synth_uniform(10, 1, 1).unwrap();
        let all: Vec<u32> = (0..10).collect();
        let y: Vec<f64> = pop.column(0);
        let pi = vec![1.0; 10];
        let total: f64 = y.iter().sum();
        assert!((ht_total(&all, &y, &pi).unwrap() - total).abs() < 1e-12);

        // Constant 1 with pi = n/N recovers N exactly.
        let ones = vec![1.0; 10];
        let pi = vec![0.3; 10];
        let sample = vec![1, 5, 9];
        assert!((ht_total(&sample, &ones, &pi).unwrap() - 10.0).abs() < 1e-9);

        let zero_pi = vec![0.0; 10];
        assert!(ht_total(&sample, &ones, &zero_pi).is_err());
    }

    #[test]
    fn balance_deviation_census_is_zero() {
        let pop = synth_uniform(12, 3, 2).unwrap();
        let all: Vec<u32> = (0..12).collect();
        let pi = vec![1.0; 12];
        assert!(balance_deviation(&all, &pop, &pi).abs() < 1e-10);
    }

    #[test]
    fn balance_deviation_matches_direct_sum() {
        let pop = Population::from_rows(vec![vec![1.0], vec![2.0], vec![4.0], vec![8.0]]).unwrap();
        let pi = vec![0.5; 4];
        // Sample {0, 3}: HT total = 2 * (1 + 8) = 18, truth 15 -> |18 - 15| = 3.
        assert!((balance_deviation(&[0, 3], &pop, &pi) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn spatial_balance_census_is_zero() {
        let pop = synth_uniform(15, 2, 3).unwrap();
        let (geom, _) = fixture(&pop);
        let all: Vec<u32> = (0..15).collect();
        let pi = vec![1.0; 15];
        assert!(spatial_balance(&all, &pi, &geom).abs() < 1e-12);
    }

    #[test]
    fn spatial_balance_line_example() {
        // Units at 0,1,2,3; sample {1,3}, pi = 1/2. Voronoi: units 0,1 -> 1;
        // unit 2 -> 1 (tie with 3 resolved to smaller id), unit 3 -> 3.
        // Mass: v_1 = 1.5, v_3 = 0.5 -> SB = ((0.5)^2 + (0.5)^2) / 2 = 0.25.
        let pop =
            Population::from_rows(vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let (geom, _) = fixture(&pop);
        let pi = vec![0.5; 4];
        let sb = spatial_balance(&[1, 3], &pi, &geom);
        assert!((sb - 0.25).abs() < 1e-12, "sb = {sb}");
    }

    #[test]
    fn local_balance_zero_cases() {
        let pop = synth_uniform(10, 2, 4).unwrap();
        let (geom, phi) = fixture(&pop);
        let all: Vec<u32> = (0..10).collect();
        let pi = vec![1.0; 10];
        assert!(local_balance(&all, &pop, &pi, &geom, &phi).abs() < 1e-12);

        let flat = Population::from_rows(vec![vec![7.0, 7.0]; 6]).unwrap();
        let (geom, phi) = fixture(&flat);
        let pi = vec![0.5; 6];
        assert!(local_balance(&[0, 2, 4], &flat, &pi, &geom, &phi).abs() < 1e-12);
    }

    #[test]
    fn local_balance_matches_straight_line_evaluation() {
        let pop = synth_uniform(20, 2, 5).unwrap();
        let (geom, phi) = fixture(&pop);
        let sample = vec![2, 7, 11, 19];
        let pi = vec![0.2; 20];
        let got = local_balance(&sample, &pop, &pi, &geom, &phi);
        // Independent evaluation straight from the formula.
        let assignment = geom.voronoi_assign(&sample);
        let mut expect = 0.0;
        for &i in &sample {
            let mut residual = [0.0; 2];
            let mut v_i = 0.0;
            for (j, &center) in assignment.iter().enumerate() {
                if center == i {
                    v_i += pi[j];
                    for (r, x) in residual.iter_mut().zip(pop.aux_row(j)) {
                        *r += pi[j] * x;
                    }
                }
            }
            for (r, x) in residual.iter_mut().zip(pop.aux_row(i as usize)) {
                *r -= v_i * x;
            }
            expect += residual.iter().map(|r| r * r).sum::<f64>().sqrt();
        }
        expect = expect / 4.0 / (1.0 + phi.mean());
        assert!((got - expect).abs() < 1e-12);
    }

    #[test]
    fn variance_pair_closed_form() {
        let pop = Population::from_rows(vec![vec![0.0], vec![1.0]]).unwrap();
        let (geom, _) = fixture(&pop);
        let y = vec![3.0, 11.0];
        let pi = vec![1.0, 1.0];
        let v = local_mean_variance(&[0, 1], &y, &pi, 2, &geom).unwrap();
        assert!((v - (3.0f64 - 11.0).powi(2)).abs() < 1e-12);

        let y = vec![5.0, 5.0];
        let v = local_mean_variance(&[0, 1], &y, &pi, 2, &geom).unwrap();
        assert!(v.abs() < 1e-12);

        assert!(local_mean_variance(&[0], &y, &pi, 2, &geom).is_err());
        assert!(local_mean_variance(&[0, 1], &y, &pi, 1, &geom).is_err());
    }

    #[test]
    fn variance_matches_straight_line_oracle() {
        let pop = synth_uniform(30, 2, 6).unwrap();
        let (geom, _) = fixture(&pop);
        let y: Vec<f64> = (0..30).map(|i| (i as f64).sin() + 2.0).collect();
        let pi = vec![0.2; 30];
        let sample = vec![1, 4, 9, 16, 25, 29];
        let k = 3;
        let got = local_mean_variance(&sample, &y, &pi, k, &geom).unwrap();
        let mut expect = 0.0;
        for &i in &sample {
            let mut dists: Vec<(f64, u32)> = sample
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| (geom.distance(i as usize, j as usize), j))
                .collect();
            dists.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let group: Vec<u32> = std::iter::once(i)
                .chain(dists.into_iter().take(k - 1).map(|(_, j)| j))
                .collect();
            let a: Vec<f64> = group.iter().map(|&j| y[j as usize] / 0.2).collect();
            let mean = a.iter().sum::<f64>() / k as f64;
            expect += (k as f64 / (k as f64 - 1.0)) * (a[0] - mean) * (a[0] - mean);
        }
        assert!((got - expect).abs() < 1e-9);
    }

    #[test]
    fn census_design_report_is_all_zero_with_full_coverage() {
        let pop = synth_uniform(12, 2, 7).unwrap();
        let (geom, phi) = fixture(&pop);
        let model = EnergyModel::new(&geom, &phi);
        let mut rng = seeds::rng(7, "metrics.census");
        let cfg = cyclic_init(12, 12, None, &mut rng).unwrap();
        let support = cfg.support();
        let targets = vec![Target::new("y", pop.column(0))];
        let report = evaluate_design(
            EvalInput::Support(&support),
            &pop,
            &model,
            &targets,
            &EvalOptions {
                design_name: "census".into(),
                ..Default::default()
            },
        )
        .unwrap();
        assert!(report.energy.mean.abs() < 1e-10);
        assert!(report.spatial_balance.mean.abs() < 1e-10);
        assert!(report.lb_variant.mean.abs() < 1e-10);
        assert!(report.balance_deviation.mean.abs() < 1e-10);
        assert_eq!(report.estimators[0].coverage, 1.0);
        assert!(report.estimators[0].rrmse < 1e-12);
    }

    #[test]
    fn support_mode_is_probability_weighted_exactly() {
        let pop = synth_uniform(6, 2, 8).unwrap();
        let (geom, phi) = fixture(&pop);
        let model = EnergyModel::new(&geom, &phi);
        let mut rng = seeds::rng(8, "metrics.weighted");
        let cfg = cyclic_init(6, 4, Some(&[true, true, false]), &mut rng).unwrap();
        let support = cfg.support();
        let report = evaluate_design(
            EvalInput::Support(&support),
            &pop,
            &model,
            &[],
            &EvalOptions::default(),
        )
        .unwrap();
        let expect: f64 = (0..support.len())
            .map(|i| {
                let p: f64 = *support.probability(i).numer() as f64
                    / *support.probability(i).denom() as f64;
                p * model.sample_energy(support.sample(i))
            })
            .sum();
        assert!((report.energy.mean - expect).abs() < 1e-12);
        assert_eq!(report.mode, EvaluationMode::ExactSupport);
    }

    #[test]
    fn replicate_mode_converges_to_support_mode() {
        let pop = synth_uniform(10, 2, 9).unwrap();
        let (geom, phi) = fixture(&pop);
        let model = EnergyModel::new(&geom, &phi);
        let mut rng = seeds::rng(9, "metrics.converge");
        let cfg = cyclic_init(10, 4, None, &mut rng).unwrap();
        let support = cfg.support();
        let exact = evaluate_design(
            EvalInput::Support(&support),
            &pop,
            &model,
            &[],
            &EvalOptions::default(),
        )
        .unwrap();
        // Draw replicates from the design and compare at 3 sigma.
        let reps = 4000;
        let draws: Vec<Vec<u32>> = (0..reps)
            .map(|_| cfg.draw_column(&mut rng).to_vec())
            .collect();
        let mc = evaluate_design(
            EvalInput::Replicates(&draws),
            &pop,
            &model,
            &[],
            &EvalOptions::default(),
        )
        .unwrap();
        let se = exact.energy.sd / (reps as f64).sqrt() + 1e-12;
        assert!(
            (mc.energy.mean - exact.energy.mean).abs() < 3.0 * se,
            "mc {} vs exact {}",
            mc.energy.mean,
            exact.energy.mean
        );
    }

    #[test]
    fn rrmse_flags_zero_total() {
        let pop = Population::from_rows(vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]]).unwrap();
        let (geom, phi) = fixture(&pop);
        let model = EnergyModel::new(&geom, &phi);
        let mut rng = seeds::rng(10, "metrics.zero_total");
        let cfg = cyclic_init(4, 2, None, &mut rng).unwrap();
        let support = cfg.support();
        // Target sums to zero.
        let targets = vec![Target::new("centered", vec![-1.5, -0.5, 0.5, 1.5])];
        let report = evaluate_design(
            EvalInput::Support(&support),
            &pop,
            &model,
            &targets,
            &EvalOptions::default(),
        )
        .unwrap();
        assert!(report.estimators[0].rrmse_is_absolute);
    }

    #[test]
    fn threaded_evaluation_matches_sequential() {
        let pop = synth_uniform(30, 2, 12).unwrap();
        let (geom, phi) = fixture(&pop);
        let model = EnergyModel::new(&geom, &phi);
        let mut rng = seeds::rng(12, "metrics.threads");
        let draws: Vec<Vec<u32>> = (0..64)
            .map(|_| crate::samplers::srs(30, 6, &mut rng).unwrap())
            .collect();
        let targets = vec![Target::new("y", pop.column(1))];
        let run = |threads: usize| {
            evaluate_design(
                EvalInput::Replicates(&draws),
                &pop,
                &model,
                &targets,
                &EvalOptions {
                    threads,
                    keep_rows: true,
                    ..Default::default()
                },
            )
            .unwrap()
        };
        let seq = run(1);
        for threads in [2, 3, 7] {
            let par = run(threads);
            assert_eq!(par.energy.mean.to_bits(), seq.energy.mean.to_bits());
            assert_eq!(
                par.balance_deviation.sd.to_bits(),
                seq.balance_deviation.sd.to_bits()
            );
            assert_eq!(par.estimators[0].coverage, seq.estimators[0].coverage);
            for (a, b) in par.rows.iter().zip(&seq.rows) {
                assert_eq!(a.energy.to_bits(), b.energy.to_bits());
            }
        }
    }

    #[test]
    fn empty_support_is_rejected() {
        let pop = synth_uniform(4, 1, 11).unwrap();
        let (geom, phi) = fixture(&pop);
        let model = EnergyModel::new(&geom, &phi);
        let reps: Vec<Vec<u32>> = Vec::new();
        let err = evaluate_design(
            EvalInput::Replicates(&reps),
            &pop,
            &model,
            &[],
            &EvalOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::EmptySupport));
    }
}
