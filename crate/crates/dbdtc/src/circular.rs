//! Circular-sequence baseline: the design whose samples are the `N`
//! contiguous length-`n` windows of a circular population ordering, optimized
//! by simulated annealing over position swaps.
//!
//! Every unit lies in exactly `n` of the `N` equiprobable windows, so the
//! first-order inclusion probability is `n / N` for any ordering. A position
//! swap touches at most `2n` windows; windows containing both swapped
//! positions keep their unit set and are skipped, the others are patched by a
//! single-unit replacement evaluated with sliding distance sums.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::anneal::{AcceptanceRule, AnnealCounters, AnnealSchedule, TrajectoryPoint};
use crate::energy::{EnergyLedger, EnergyModel, RECOMPUTE_INTERVAL};
use crate::error::Result;
use crate::tactical::DesignSupport;

/// A circular ordering of the population together with its window size.
#[derive(Debug, Clone)]
pub struct CircularDesign {
    order: Vec<u32>,
    sample_size: usize,
}

impl CircularDesign {
    pub fn new(order: Vec<u32>, sample_size: usize) -> Self {
        assert!(sample_size >= 1 && sample_size <= order.len());
        Self { order, sample_size }
    }

    pub fn random<R: Rng>(n_units: usize, sample_size: usize, rng: &mut R) -> Self {
        let mut order: Vec<u32> = (0..n_units as u32).collect();
        order.shuffle(rng);
        Self::new(order, sample_size)
    }

    pub fn order(&self) -> &[u32] {
        &self.order
    }

    pub fn sample_size(&self) -> usize {
        self.sample_size
    }

    pub fn n_units(&self) -> usize {
        self.order.len()
    }

    /// Units of window `k` (positions `k..k+n-1` mod `N`), sorted.
    pub fn window(&self, k: usize) -> Vec<u32> {
        let n_units = self.order.len();
        let mut units: Vec<u32> = (0..self.sample_size)
            .map(|t| self.order[(k + t) % n_units])
            .collect();
        units.sort_unstable();
        units
    }

    /// All `N` windows, each sorted.
    pub fn windows(&self) -> Vec<Vec<u32>> {
        (0..self.order.len()).map(|k| self.window(k)).collect()
    }

    /// The complete design: all `N` windows with probability `1 / N` each.
    pub fn support(&self) -> DesignSupport {
        DesignSupport::from_equal_weight_samples(self.windows())
    }
}

/// Windows of an explicit ordering; `window[k] = {order[k], ..., order[k+n-1]}`
/// with indices mod `N`.
pub fn circular_windows(order: &[u32], sample_size: usize) -> Vec<Vec<u32>> {
    CircularDesign::new(order.to_vec(), sample_size).windows()
}

struct MoveEval {
    patches: Vec<(usize, f64)>,
    total: f64,
}

/// Energy patches of swapping positions `q` and `r` of `order`, one entry per
/// affected window. Windows containing both positions are unaffected.
fn evaluate_move(
    order: &[u32],
    sample_size: usize,
    q: usize,
    r: usize,
    model: &EnergyModel,
) -> MoveEval {
    let n_units = order.len();
    let n_f = sample_size as f64;
    let geom = model.geometry();
    let phi = model.phi();
    let x = order[q] as usize;
    let y = order[r] as usize;
    let d_xy = geom.distance(x, y);
    let mut patches = Vec::with_capacity(2 * sample_size);
    let mut total = 0.0;

    // One pass per swapped position: windows containing `from_pos` but not
    // `other_pos` replace `out_unit` by `in_unit`. The window-sum slide makes
    // the whole move O(n) instead of O(n^2).
    let mut pass = |from_pos: usize, other_pos: usize, out_unit: usize, in_unit: usize| {
        let phi_gain = 2.0 / n_f * (phi.get(in_unit) - phi.get(out_unit));
        let scale = 2.0 / (n_f * n_f);
        let mut k = (from_pos + n_units - (sample_size - 1)) % n_units;
        let mut t_out = 0.0;
        let mut t_in = 0.0;
        for t in 0..sample_size {
            let unit = order[(k + t) % n_units] as usize;
            t_out += geom.distance(unit, out_unit);
            t_in += geom.distance(unit, in_unit);
        }
        for step in 0..sample_size {
            if (other_pos + n_units - k) % n_units >= sample_size {
                let delta = phi_gain - scale * (t_in - d_xy - t_out);
                patches.push((k, delta));
                total += delta;
            }
            if step + 1 < sample_size {
                let leaving = order[k] as usize;
                let entering = order[(k + sample_size) % n_units] as usize;
                t_out += geom.distance(entering, out_unit) - geom.distance(leaving, out_unit);
                t_in += geom.distance(entering, in_unit) - geom.distance(leaving, in_unit);
                k = (k + 1) % n_units;
            }
        }
    };
    pass(q, r, x, y);
    pass(r, q, y, x);
    MoveEval { patches, total }
}

fn accept_move<R: Rng>(
    rule: AcceptanceRule,
    e_new: f64,
    e_prev: f64,
    e_best: f64,
    temperature: f64,
    rng: &mut R,
) -> bool {
    // Mirrors the configuration annealer's acceptance logic.
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

/// Result of a circular optimization run.
#[derive(Debug)]
pub struct CircularOutcome {
    pub design: CircularDesign,
    pub initial_expected_energy: f64,
    pub best_expected_energy: f64,
    pub final_expected_energy: f64,
    pub trajectory: Vec<TrajectoryPoint>,
    pub counters: AnnealCounters,
}

/// Anneal a random circular ordering of the model's population.
pub fn circular_anneal<R: Rng>(
    model: &EnergyModel,
    sample_size: usize,
    schedule: &AnnealSchedule,
    rule: AcceptanceRule,
    rng: &mut R,
) -> Result<CircularOutcome> {
    let design = CircularDesign::random(model.geometry().population().size(), sample_size, rng);
    circular_anneal_from(design, model, schedule, rule, rng)
}

/// Anneal a given circular ordering over position swaps.
pub fn circular_anneal_from<R: Rng>(
    mut design: CircularDesign,
    model: &EnergyModel,
    schedule: &AnnealSchedule,
    rule: AcceptanceRule,
    rng: &mut R,
) -> Result<CircularOutcome> {
    schedule.validate()?;
    let n_units = design.n_units();
    let window_energies = |d: &CircularDesign| -> EnergyLedger {
        EnergyLedger::new((0..n_units).map(|k| model.sample_energy(&d.window(k))).collect())
    };
    let mut ledger = window_energies(&design);
    let initial = ledger.expected();
    let mut best_energy = initial;
    let mut best_order = design.order.clone();
    let mut temperature = schedule.initial_temperature;
    let mut counters = AnnealCounters::default();
    let total_iters = schedule.iterations;
    let mut trajectory = vec![TrajectoryPoint {
        iteration: 0,
        expected_energy: initial,
        best_energy,
        temperature,
    }];
    let stride = total_iters
        .div_ceil((crate::anneal::MAX_TRAJECTORY_ROWS - 2) as u64)
        .max(1);
    let mut accepted_since_sync = 0u64;

    for iter in 1..=total_iters {
        if n_units < 2 {
            break;
        }
        let q = rng.gen_range(0..n_units);
        let mut r = rng.gen_range(0..n_units - 1);
        if r >= q {
            r += 1;
        }
        counters.proposed += 1;
        counters.admissible += 1; // every distinct-position swap is legal
        let eval = evaluate_move(&design.order, design.sample_size, q, r, model);
        let e_prev = ledger.expected();
        let e_new = e_prev + eval.total / n_units as f64;
        if accept_move(rule, e_new, e_prev, best_energy, temperature, rng) {
            design.order.swap(q, r);
            for &(k, delta) in &eval.patches {
                ledger.apply(k, delta);
            }
            counters.accepted += 1;
            accepted_since_sync += 1;
            let e_cur = ledger.expected();
            if e_cur < best_energy {
                best_energy = e_cur;
                best_order.clone_from(&design.order);
                counters.new_best += 1;
            }
            if accepted_since_sync >= RECOMPUTE_INTERVAL {
                ledger.resync(window_energies(&design))?;
                accepted_since_sync = 0;
            }
        }
        temperature *= schedule.cooling_rate;
        if (iter.is_multiple_of(stride) || iter == total_iters)
            && trajectory.last().map(|p| p.iteration) != Some(iter)
        {
            trajectory.push(TrajectoryPoint {
                iteration: iter,
                expected_energy: ledger.expected(),
                best_energy,
                temperature,
            });
        }
    }
    ledger.resync(window_energies(&design))?;

    let final_energy = ledger.expected();
    design.order = best_order;
    Ok(CircularOutcome {
        design,
        initial_expected_energy: initial,
        best_expected_energy: best_energy,
        final_expected_energy: final_energy,
        trajectory,
        counters,
    })
}
