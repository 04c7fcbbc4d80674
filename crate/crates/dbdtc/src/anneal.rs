//! Simulated annealing over admissible pairwise interchanges of a tactical
//! configuration, with optional parallel sweeps over disjoint column pairs.
//!
//! An interchange moves unit `u` from column `a` to column `b` and unit `v`
//! the other way; it is admissible when neither unit already belongs to its
//! destination. Admissible interchanges are exactly the 2x2 interchanges of a
//! binary matrix with fixed margins, and the class of such matrices is
//! connected under them (Ryser, 1957), so the search can reach the entire
//! design space.
//!
//! # References
//! Kirkpatrick, S., Gelatt, C.D., & Vecchi, M.P. (1983). Optimization by
//! simulated annealing. Science, 220(4598), 671-680.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::energy::{EnergyLedger, EnergyModel, SwapDelta, RECOMPUTE_INTERVAL};
use crate::error::{Error, Result};
use crate::seeds;
use crate::tactical::TacticalConfiguration;

/// Trajectories are thinned to at most this many rows.
pub const MAX_TRAJECTORY_ROWS: usize = 10_000;

/// Geometric cooling schedule.
#[derive(Debug, Clone, Copy)]
pub struct AnnealSchedule {
    pub iterations: u64,
    pub initial_temperature: f64,
    pub cooling_rate: f64,
}

impl AnnealSchedule {
    pub fn new(iterations: u64, initial_temperature: f64, cooling_rate: f64) -> Result<Self> {
        let schedule = Self {
            iterations,
            initial_temperature,
            cooling_rate,
        };
        schedule.validate()?;
        Ok(schedule)
    }

    pub fn validate(&self) -> Result<()> {
        if self.initial_temperature <= 0.0 || !self.initial_temperature.is_finite() {
            return Err(Error::InvalidSchedule {
                reason: format!(
                    "initial temperature {} must be positive",
                    self.initial_temperature
                ),
            });
        }
        if !(self.cooling_rate > 0.0 && self.cooling_rate <= 1.0) {
            return Err(Error::InvalidSchedule {
                reason: format!("cooling rate {} must lie in (0, 1]", self.cooling_rate),
            });
        }
        Ok(())
    }
}

/// Problem-scaled default schedule: the initial temperature is the median
/// absolute expected-energy change over up to 1000 admissible probe swaps,
/// scaled by `1 / ln 2`, and the cooling rate is chosen so the final
/// temperature is `1e-8` times the initial one.
pub fn default_schedule<R: Rng>(
    cfg: &TacticalConfiguration,
    model: &EnergyModel,
    iterations: u64,
    rng: &mut R,
) -> AnnealSchedule {
    let m = cfg.n_samples();
    let mut magnitudes = Vec::new();
    if m >= 2 {
        let mut attempts = 0u32;
        while magnitudes.len() < 1000 && attempts < 50_000 {
            attempts += 1;
            if let Some(p) = propose(cfg, rng) {
                if p.admissible {
                    let delta = model.delta_swap_unchecked(
                        cfg, p.column_a, p.column_b, p.unit_u, p.unit_v,
                    );
                    magnitudes.push((delta.total / m as f64).abs());
                }
            }
        }
    }
    magnitudes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = if magnitudes.is_empty() {
        0.0
    } else if magnitudes.len() % 2 == 1 {
        magnitudes[magnitudes.len() / 2]
    } else {
        0.5 * (magnitudes[magnitudes.len() / 2 - 1] + magnitudes[magnitudes.len() / 2])
    };
    let t0 = (median / std::f64::consts::LN_2).max(1e-12);
    let alpha = if iterations == 0 {
        1.0
    } else {
        1e-8f64.powf(1.0 / iterations as f64)
    };
    AnnealSchedule {
        iterations,
        initial_temperature: t0,
        cooling_rate: alpha,
    }
}

/// How accepted/rejected moves are decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcceptanceRule {
    /// Keep any strict improvement; accept a non-improvement with
    /// probability `exp(-(E_new - E_prev) / T)` (ties almost surely kept).
    Standard,
    /// Classical Metropolis: accept if not worse, otherwise with probability
    /// `exp(-(E_new - E_prev) / T)`. Differs from [`Self::Standard`] only in
    /// tie handling and randomness consumption.
    Metropolis,
}

fn accept<R: Rng>(
    rule: AcceptanceRule,
    e_new: f64,
    e_prev: f64,
    e_best: f64,
    temperature: f64,
    rng: &mut R,
) -> bool {
    match rule {
        AcceptanceRule::Standard => {
            if e_new < e_best {
                true
            } else if e_new >= e_prev {
                let d = e_new - e_prev;
                let prob = if d == 0.0 { 1.0 } else { (-d / temperature).exp() };
                rng.gen::<f64>() < prob
            } else {
                true
            }
        }
        AcceptanceRule::Metropolis => {
            let d = e_new - e_prev;
            d <= 0.0 || rng.gen::<f64>() < (-d / temperature).exp()
        }
    }
}

/// A proposed interchange between two random columns.
#[derive(Debug, Clone, Copy)]
pub struct Proposal {
    pub column_a: usize,
    pub column_b: usize,
    pub unit_u: u32,
    pub unit_v: u32,
    pub admissible: bool,
}

/// Draw two distinct columns uniformly, one unit uniformly from each, and
/// flag admissibility. Returns `None` when there is nothing to optimize
/// (fewer than two columns).
pub fn propose<R: Rng>(cfg: &TacticalConfiguration, rng: &mut R) -> Option<Proposal> {
    let m = cfg.n_samples();
    if m < 2 {
        return None;
    }
    let n = cfg.sample_size();
    let column_a = rng.gen_range(0..m);
    let mut column_b = rng.gen_range(0..m - 1);
    if column_b >= column_a {
        column_b += 1;
    }
    let unit_u = cfg.column(column_a)[rng.gen_range(0..n)];
    let unit_v = cfg.column(column_b)[rng.gen_range(0..n)];
    let admissible = !cfg.contains(unit_u, column_b) && !cfg.contains(unit_v, column_a);
    Some(Proposal {
        column_a,
        column_b,
        unit_u,
        unit_v,
        admissible,
    })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AnnealCounters {
    pub proposed: u64,
    pub admissible: u64,
    pub accepted: u64,
    pub new_best: u64,
}

/// One thinned trajectory row.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct TrajectoryPoint {
    pub iteration: u64,
    pub expected_energy: f64,
    pub best_energy: f64,
    pub temperature: f64,
}

/// Result of an optimization run.
#[derive(Debug)]
pub struct AnnealOutcome {
    pub best: TacticalConfiguration,
    pub best_expected_energy: f64,
    pub initial_expected_energy: f64,
    pub final_expected_energy: f64,
    pub trajectory: Vec<TrajectoryPoint>,
    pub counters: AnnealCounters,
}

struct TrajectoryRecorder {
    stride: u64,
    points: Vec<TrajectoryPoint>,
}

impl TrajectoryRecorder {
    fn new(total: u64) -> Self {
        Self {
            stride: total.div_ceil((MAX_TRAJECTORY_ROWS - 2) as u64).max(1),
            points: Vec::new(),
        }
    }

    fn record(&mut self, iteration: u64, total: u64, e: f64, best: f64, t: f64) {
        if iteration == 0 || iteration == total || iteration.is_multiple_of(self.stride) {
            if let Some(last) = self.points.last() {
                if last.iteration == iteration {
                    return;
                }
            }
            self.points.push(TrajectoryPoint {
                iteration,
                expected_energy: e,
                best_energy: best,
                temperature: t,
            });
        }
    }
}

/// Sequential optimization: `R` iterations of propose/decide, tracking the
/// best configuration visited. Inadmissible proposals consume an iteration
/// and still cool the temperature.
pub fn run<R: Rng>(
    mut cfg: TacticalConfiguration,
    schedule: &AnnealSchedule,
    model: &EnergyModel,
    rule: AcceptanceRule,
    rng: &mut R,
) -> Result<AnnealOutcome> {
    schedule.validate()?;
    let m = cfg.n_samples() as f64;
    let mut ledger = model.expected_energy(&cfg);
    let initial = ledger.expected();
    let mut best_energy = initial;
    let mut best_columns = cfg.flat_columns().clone();
    let mut temperature = schedule.initial_temperature;
    let mut counters = AnnealCounters::default();
    let total = schedule.iterations;
    let mut recorder = TrajectoryRecorder::new(total);
    recorder.record(0, total, initial, best_energy, temperature);
    let mut accepted_since_sync = 0u64;

    for r in 1..=total {
        let Some(proposal) = propose(&cfg, rng) else {
            break;
        };
        counters.proposed += 1;
        if proposal.admissible {
            counters.admissible += 1;
            let delta = model.delta_swap_unchecked(
                &cfg,
                proposal.column_a,
                proposal.column_b,
                proposal.unit_u,
                proposal.unit_v,
            );
            let e_prev = ledger.expected();
            let e_new = e_prev + delta.total / m;
            if accept(rule, e_new, e_prev, best_energy, temperature, rng) {
                cfg.swap_units(
                    proposal.column_a,
                    proposal.column_b,
                    proposal.unit_u,
                    proposal.unit_v,
                )
                .expect("proposal was admissible");
                ledger.apply_swap(proposal.column_a, proposal.column_b, &delta);
                counters.accepted += 1;
                accepted_since_sync += 1;
                let e_cur = ledger.expected();
                if e_cur < best_energy {
                    best_energy = e_cur;
                    best_columns.clone_from(cfg.flat_columns());
                    counters.new_best += 1;
                }
                if accepted_since_sync >= RECOMPUTE_INTERVAL {
                    ledger.resync(model.expected_energy(&cfg))?;
                    accepted_since_sync = 0;
                }
            }
        }
        temperature *= schedule.cooling_rate;
        recorder.record(r, total, ledger.expected(), best_energy, temperature);
    }
    ledger.resync(model.expected_energy(&cfg))?;

    let best = cfg.with_columns_like(best_columns);
    Ok(AnnealOutcome {
        best,
        best_expected_energy: best_energy,
        initial_expected_energy: initial,
        final_expected_energy: ledger.expected(),
        trajectory: recorder.points,
        counters,
    })
}

/// Outcome of one parallel sweep.
#[derive(Debug, Clone, Copy, Default)]
pub struct SweepStats {
    pub proposed: u64,
    pub admissible: u64,
    pub accepted: u64,
}

struct SweepDecision {
    col_a: usize,
    col_b: usize,
    unit_u: u32,
    unit_v: u32,
    delta: SwapDelta,
    admissible: bool,
    accepted: bool,
}

/// One sweep of `workers` simultaneous steps over disjoint random column
/// pairs at a fixed temperature.
///
/// Workers decide against the frozen pre-sweep state; since the objective is
/// a sum of per-column energies, swaps on disjoint pairs do not interact and
/// the merged result is independent of scheduling order.
#[allow(clippy::too_many_arguments)]
pub fn parallel_sweep(
    cfg: &mut TacticalConfiguration,
    ledger: &mut EnergyLedger,
    model: &EnergyModel,
    rule: AcceptanceRule,
    temperature: f64,
    best_energy: f64,
    workers: usize,
    sweep_seed: u64,
) -> Result<SweepStats> {
    let m = cfg.n_samples();
    if m < 4 {
        return Err(Error::InvalidSchedule {
            reason: format!("parallel sweeps need at least 4 samples, found {m}"),
        });
    }
    let budget = m / 2;
    if workers == 0 || workers > budget {
        return Err(Error::WorkerBudgetExceeded { workers, budget });
    }

    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut seeds::rng(sweep_seed, "sweep.pairing"));
    let pairs: Vec<(usize, usize)> = (0..workers)
        .map(|w| (order[2 * w], order[2 * w + 1]))
        .collect();
    let e_prev = ledger.expected();
    let m_f = m as f64;

    let decisions: Vec<SweepDecision> = std::thread::scope(|scope| {
        let frozen: &TacticalConfiguration = cfg;
        let handles: Vec<_> = pairs
            .iter()
            .enumerate()
            .map(|(p, &(col_a, col_b))| {
                scope.spawn(move || {
                    let mut rng = seeds::rng_indexed(sweep_seed, "sweep.pair", p as u64);
                    let n = frozen.sample_size();
                    let unit_u = frozen.column(col_a)[rng.gen_range(0..n)];
                    let unit_v = frozen.column(col_b)[rng.gen_range(0..n)];
                    let admissible =
                        !frozen.contains(unit_u, col_b) && !frozen.contains(unit_v, col_a);
                    let (delta, accepted) = if admissible {
                        let delta =
                            model.delta_swap_unchecked(frozen, col_a, col_b, unit_u, unit_v);
                        let e_new = e_prev + delta.total / m_f;
                        let keep = accept(rule, e_new, e_prev, best_energy, temperature, &mut rng);
                        (delta, keep)
                    } else {
                        (
                            SwapDelta {
                                column_a: 0.0,
                                column_b: 0.0,
                                total: 0.0,
                                distance_terms: 0,
                            },
                            false,
                        )
                    };
                    SweepDecision {
                        col_a,
                        col_b,
                        unit_u,
                        unit_v,
                        delta,
                        admissible,
                        accepted,
                    }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });

    let mut stats = SweepStats {
        proposed: workers as u64,
        ..Default::default()
    };
    for d in &decisions {
        if d.admissible {
            stats.admissible += 1;
        }
        if d.accepted {
            cfg.swap_units(d.col_a, d.col_b, d.unit_u, d.unit_v)
                .expect("disjoint pairs stay admissible");
            ledger.apply_swap(d.col_a, d.col_b, &d.delta);
            stats.accepted += 1;
        }
    }
    Ok(stats)
}

/// Sweep-based optimization: `schedule.iterations` sweeps of `workers`
/// disjoint-pair steps each. The temperature is held fixed within a sweep
/// and cooled once per sweep.
pub fn run_sweeps(
    cfg: TacticalConfiguration,
    schedule: &AnnealSchedule,
    model: &EnergyModel,
    rule: AcceptanceRule,
    workers: usize,
    master_seed: u64,
) -> Result<AnnealOutcome> {
    schedule.validate()?;
    let mut cfg = cfg;
    let mut ledger = model.expected_energy(&cfg);
    let initial = ledger.expected();
    let mut best_energy = initial;
    let mut best_columns = cfg.flat_columns().clone();
    let mut temperature = schedule.initial_temperature;
    let mut counters = AnnealCounters::default();
    let total = schedule.iterations;
    let mut recorder = TrajectoryRecorder::new(total);
    recorder.record(0, total, initial, best_energy, temperature);
    let mut accepted_since_sync = 0u64;

    for sweep in 1..=total {
        let sweep_seed = seeds::derive_indexed(master_seed, "sweep", sweep);
        let stats = parallel_sweep(
            &mut cfg,
            &mut ledger,
            model,
            rule,
            temperature,
            best_energy,
            workers,
            sweep_seed,
        )?;
        counters.proposed += stats.proposed;
        counters.admissible += stats.admissible;
        counters.accepted += stats.accepted;
        accepted_since_sync += stats.accepted;
        let e_cur = ledger.expected();
        if e_cur < best_energy {
            best_energy = e_cur;
            best_columns.clone_from(cfg.flat_columns());
            counters.new_best += 1;
        }
        if accepted_since_sync >= RECOMPUTE_INTERVAL {
            ledger.resync(model.expected_energy(&cfg))?;
            accepted_since_sync = 0;
        }
        temperature *= schedule.cooling_rate;
        recorder.record(sweep, total, ledger.expected(), best_energy, temperature);
    }
    ledger.resync(model.expected_energy(&cfg))?;

    let best = cfg.with_columns_like(best_columns);
    Ok(AnnealOutcome {
        best,
        best_expected_energy: best_energy,
        initial_expected_energy: initial,
        final_expected_energy: ledger.expected(),
        trajectory: recorder.points,
        counters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DistanceProvider;
    use crate::population::synth_uniform;
    use crate::tactical::cyclic_init;
    use num_rational::Ratio;

    #[test]
    fn propose_is_none_for_single_column() {
        let mut rng = seeds::rng(1, "anneal.propose");
        let cfg = cyclic_init(5, 5, None, &mut rng).unwrap();
        assert!(propose(&cfg, &mut rng).is_none());
    }

    #[test]
    fn propose_on_disjoint_columns_is_always_admissible() {
        let mut rng = seeds::rng(2, "anneal.propose");
        // N=4, n=2 gives two disjoint columns.
        let cfg = cyclic_init(4, 2, Some(&[true, false]), &mut rng).unwrap();
        for _ in 0..100 {
            let p = propose(&cfg, &mut rng).unwrap();
            assert!(p.admissible);
        }
    }

    #[test]
    fn propose_admissibility_frequency_matches_enumeration() {
        let mut rng = seeds::rng(3, "anneal.propose");
        let cfg = cyclic_init(6, 4, Some(&[true, true, false]), &mut rng).unwrap();
        // Enumerate admissibility over all ordered column pairs and unit picks.
        let m = cfg.n_samples();
        let mut admissible = 0usize;
        let mut total = 0usize;
        for a in 0..m {
            for b in 0..m {
                if a == b {
                    continue;
                }
                for &u in cfg.column(a) {
                    for &v in cfg.column(b) {
                        total += 1;
                        if !cfg.contains(u, b) && !cfg.contains(v, a) {
                            admissible += 1;
                        }
                    }
                }
            }
        }
        let expect = admissible as f64 / total as f64;
        let reps = 40_000;
        let mut hits = 0usize;
        for _ in 0..reps {
            if propose(&cfg, &mut rng).unwrap().admissible {
                hits += 1;
            }
        }
        let freq = hits as f64 / reps as f64;
        let sigma = (expect * (1.0 - expect) / reps as f64).sqrt();
        assert!(
            (freq - expect).abs() < 3.0 * sigma,
            "frequency {freq} vs expected {expect}"
        );
    }

    #[test]
    fn zero_iterations_returns_initial_state() {
        let pop = synth_uniform(20, 2, 4).unwrap();
        let geom = DistanceProvider::new(&pop);
        let phi = geom.phi();
        let model = EnergyModel::new(&geom, &phi);
        let mut rng = seeds::rng(4, "anneal.zero");
        let cfg = cyclic_init(20, 4, None, &mut rng).unwrap();
        let initial_cols: Vec<Vec<u32>> = cfg.columns_iter().map(|c| c.to_vec()).collect();
        let schedule = AnnealSchedule::new(0, 1.0, 0.5).unwrap();
        let out = run(cfg, &schedule, &model, AcceptanceRule::Standard, &mut rng).unwrap();
        assert_eq!(out.best_expected_energy, out.initial_expected_energy);
        let best_cols: Vec<Vec<u32>> = out.best.columns_iter().map(|c| c.to_vec()).collect();
        assert_eq!(best_cols, initial_cols);
        assert_eq!(out.trajectory.len(), 1);
    }

    #[test]
    fn run_improves_and_preserves_structure() {
        let pop = synth_uniform(60, 3, 5).unwrap();
        let geom = DistanceProvider::new(&pop);
        let phi = geom.phi();
        let model = EnergyModel::new(&geom, &phi);
        let mut rng = seeds::rng(5, "anneal.run");
        let cfg = cyclic_init(60, 12, None, &mut rng).unwrap();
        let schedule = default_schedule(&cfg, &model, 20_000, &mut rng);
        let out = run(cfg, &schedule, &model, AcceptanceRule::Standard, &mut rng).unwrap();
        assert!(out.best_expected_energy < out.initial_expected_energy);
        out.best.validate().unwrap();
        // Monotone best-energy trajectory.
        for w in out.trajectory.windows(2) {
            assert!(w[1].best_energy <= w[0].best_energy + 1e-15);
        }
        // Inclusion probabilities unchanged: exactly n / N.
        let probs = out.best.inclusion_probs();
        for u in 0..60 {
            assert_eq!(probs.first_order(u), Ratio::new(12, 60));
        }
        assert!(out.counters.accepted <= out.counters.admissible);
        assert!(out.counters.admissible <= out.counters.proposed);
    }

    #[test]
    fn runs_are_deterministic_given_seed() {
        let pop = synth_uniform(40, 2, 6).unwrap();
        let geom = DistanceProvider::new(&pop);
        let phi = geom.phi();
        let model = EnergyModel::new(&geom, &phi);
        let build = || {
            let mut rng = seeds::rng(6, "anneal.determinism");
            let cfg = cyclic_init(40, 8, None, &mut rng).unwrap();
            let schedule = AnnealSchedule::new(5_000, 0.01, 0.999).unwrap();
            run(cfg, &schedule, &model, AcceptanceRule::Standard, &mut rng).unwrap()
        };
        let a = build();
        let b = build();
        assert_eq!(a.best.to_text(), b.best.to_text());
        assert_eq!(a.best_expected_energy, b.best_expected_energy);
        assert_eq!(a.counters.accepted, b.counters.accepted);
    }

    #[test]
    fn trajectory_is_thinned() {
        let pop = synth_uniform(30, 2, 7).unwrap();
        let geom = DistanceProvider::new(&pop);
        let phi = geom.phi();
        let model = EnergyModel::new(&geom, &phi);
        let mut rng = seeds::rng(7, "anneal.thin");
        let cfg = cyclic_init(30, 6, None, &mut rng).unwrap();
        let schedule = AnnealSchedule::new(50_000, 0.01, 0.9999).unwrap();
        let out = run(cfg, &schedule, &model, AcceptanceRule::Standard, &mut rng).unwrap();
        assert!(out.trajectory.len() <= MAX_TRAJECTORY_ROWS);
        assert_eq!(out.trajectory.first().unwrap().iteration, 0);
        assert_eq!(out.trajectory.last().unwrap().iteration, 50_000);
    }

    #[test]
    fn metropolis_rule_also_optimizes() {
        let pop = synth_uniform(40, 2, 8).unwrap();
        let geom = DistanceProvider::new(&pop);
        let phi = geom.phi();
        let model = EnergyModel::new(&geom, &phi);
        let mut rng = seeds::rng(8, "anneal.metropolis");
        let cfg = cyclic_init(40, 8, None, &mut rng).unwrap();
        let schedule = default_schedule(&cfg, &model, 10_000, &mut rng);
        let out = run(cfg, &schedule, &model, AcceptanceRule::Metropolis, &mut rng).unwrap();
        assert!(out.best_expected_energy < out.initial_expected_energy);
    }

    #[test]
    fn sweep_budget_is_enforced() {
        let pop = synth_uniform(24, 2, 9).unwrap();
        let geom = DistanceProvider::new(&pop);
        let phi = geom.phi();
        let model = EnergyModel::new(&geom, &phi);
        let mut rng = seeds::rng(9, "anneal.sweep");
        let mut cfg = cyclic_init(24, 4, None, &mut rng).unwrap(); // M = 6
        let mut ledger = model.expected_energy(&cfg);
        let best = ledger.expected();
        let err = parallel_sweep(
            &mut cfg,
            &mut ledger,
            &model,
            AcceptanceRule::Standard,
            0.01,
            best,
            4, // budget is 3
            1,
        )
        .unwrap_err();
        assert!(matches!(err, Error::WorkerBudgetExceeded { .. }));
    }

    #[test]
    fn sweep_matches_full_recompute_and_is_deterministic() {
        let pop = synth_uniform(36, 3, 10).unwrap();
        let geom = DistanceProvider::new(&pop);
        let phi = geom.phi();
        let model = EnergyModel::new(&geom, &phi);
        let mut rng = seeds::rng(10, "anneal.sweep2");
        let base = cyclic_init(36, 6, None, &mut rng).unwrap(); // M = 6

        let run_once = |seed: u64| {
            let mut cfg = base.clone();
            let mut ledger = model.expected_energy(&cfg);
            let best = ledger.expected();
            let stats = parallel_sweep(
                &mut cfg,
                &mut ledger,
                &model,
                AcceptanceRule::Standard,
                0.05,
                best,
                3,
                seed,
            )
            .unwrap();
            (cfg, ledger, stats)
        };
        let (cfg_a, ledger_a, stats_a) = run_once(77);
        let (cfg_b, ledger_b, stats_b) = run_once(77);
        assert_eq!(cfg_a.to_text(), cfg_b.to_text());
        assert_eq!(stats_a.accepted, stats_b.accepted);
        assert_eq!(ledger_a.expected(), ledger_b.expected());

        cfg_a.validate().unwrap();
        let fresh = model.expected_energy(&cfg_a);
        let gap = (ledger_a.expected() - fresh.expected()).abs()
            / fresh.expected().abs().max(1e-12);
        assert!(gap < 1e-9, "ledger drifted by {gap}");
    }

    #[test]
    fn run_sweeps_improves_energy() {
        let pop = synth_uniform(40, 2, 11).unwrap();
        let geom = DistanceProvider::new(&pop);
        let phi = geom.phi();
        let model = EnergyModel::new(&geom, &phi);
        let mut rng = seeds::rng(11, "anneal.run_sweeps");
        let cfg = cyclic_init(40, 4, None, &mut rng).unwrap(); // M = 10
        let schedule = AnnealSchedule::new(2_000, 0.01, 0.999).unwrap();
        let out = run_sweeps(cfg, &schedule, &model, AcceptanceRule::Standard, 5, 123).unwrap();
        assert!(out.best_expected_energy < out.initial_expected_energy);
        out.best.validate().unwrap();
    }
}
