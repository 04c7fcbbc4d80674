//! Fixed-size equal-probability sample generators and the sequential
//! budget-based construction of an initial tactical configuration.

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::DistanceProvider;
use crate::population::Population;
use crate::tactical::{min_params, TacticalConfiguration};

const DECIDED_EPS: f64 = 1e-9;

/// Prescribed first-order inclusion probabilities with an integral sum.
#[derive(Debug, Clone)]
pub struct InclusionVector {
    probs: Vec<f64>,
    target_size: usize,
}

impl InclusionVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        for (index, &p) in probs.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                return Err(Error::ProbabilityOutOfRange { index, value: p });
            }
        }
        let sum: f64 = probs.iter().sum();
        let rounded = sum.round();
        if (sum - rounded).abs() > 1e-9 {
            return Err(Error::NonIntegralProbabilitySum { sum });
        }
        Ok(Self {
            probs,
            target_size: rounded as usize,
        })
    }

    /// Equal probabilities `n / N`.
    pub fn equal(n_units: usize, sample_size: usize) -> Result<Self> {
        if sample_size > n_units {
            return Err(Error::InvalidSampleSize {
                sample_size,
                population_size: n_units,
            });
        }
        Self::new(vec![sample_size as f64 / n_units as f64; n_units])
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn target_size(&self) -> usize {
        self.target_size
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Simple random sampling without replacement: a uniformly random
/// `sample_size`-subset, returned sorted.
pub fn srs<R: Rng>(n_units: usize, sample_size: usize, rng: &mut R) -> Result<Vec<u32>> {
    if sample_size == 0 || sample_size > n_units {
        return Err(Error::InvalidSampleSize {
            sample_size,
            population_size: n_units,
        });
    }
    let mut chosen: Vec<u32> = index::sample(rng, n_units, sample_size)
        .into_iter()
        .map(|i| i as u32)
        .collect();
    chosen.sort_unstable();
    Ok(chosen)
}

/// Ordered systematic sampling with a fractional interval: units are sorted
/// by one auxiliary variable and positions `ceil((u + t) N / n)` are taken
/// for a random start `u` in `(0, 1]`, so any `(N, n)` pair is legal.
pub fn systematic<R: Rng>(
    pop: &Population,
    order_column: usize,
    sample_size: usize,
    rng: &mut R,
) -> Result<Vec<u32>> {
    let start = 1.0 - rng.gen::<f64>(); // uniform on (0, 1]
    systematic_from_start(pop, order_column, sample_size, start)
}

/// Deterministic core of [`systematic`] for a fixed start in `(0, 1]`.
pub fn systematic_from_start(
    pop: &Population,
    order_column: usize,
    sample_size: usize,
    start: f64,
) -> Result<Vec<u32>> {
    let n_units = pop.size();
    if sample_size == 0 || sample_size > n_units {
        return Err(Error::InvalidSampleSize {
            sample_size,
            population_size: n_units,
        });
    }
    if order_column >= pop.dims() {
        return Err(Error::OrderColumnOutOfRange {
            column: order_column,
            dims: pop.dims(),
        });
    }
    debug_assert!(start > 0.0 && start <= 1.0);
    let mut order: Vec<u32> = (0..n_units as u32).collect();
    order.sort_by(|&a, &b| {
        pop.aux_value(a as usize, order_column)
            .partial_cmp(&pop.aux_value(b as usize, order_column))
            .unwrap()
            .then(a.cmp(&b))
    });
    let stride = n_units as f64 / sample_size as f64;
    let mut chosen = Vec::with_capacity(sample_size);
    for t in 0..sample_size {
        let pos = ((start + t as f64) * stride).ceil() as usize;
        let pos = pos.clamp(1, n_units);
        chosen.push(order[pos - 1]);
    }
    chosen.sort_unstable();
    chosen.dedup();
    if chosen.len() != sample_size {
        return Err(Error::WrongSampleSize {
            expected: sample_size,
            actual: chosen.len(),
        });
    }
    Ok(chosen)
}

/// Local pivotal method: sequential pairwise probability updates between
/// nearest undecided neighbors, yielding a fixed-size spatially spread sample
/// honoring the prescribed inclusion probabilities.
///
/// # References
/// Grafström, A., Lundström, N.L.P., & Schelin, L. (2012).
/// Spatially balanced sampling through the pivotal method.
/// Biometrics, 68(2), 514-520.
pub fn lpm<R: Rng>(
    probs: &InclusionVector,
    geom: &DistanceProvider,
    rng: &mut R,
) -> Result<Vec<u32>> {
    let mut p = probs.probs().to_vec();
    let mut undecided: Vec<u32> = Vec::with_capacity(p.len());
    for (i, &pi) in p.iter().enumerate() {
        if pi > DECIDED_EPS && pi < 1.0 - DECIDED_EPS {
            undecided.push(i as u32);
        }
    }

    while undecided.len() >= 2 {
        let slot = rng.gen_range(0..undecided.len());
        let i = undecided[slot];
        // Nearest undecided neighbor, ties resolved to the smallest index.
        let mut best = u32::MAX;
        let mut best_d = f64::INFINITY;
        for &j in &undecided {
            if j == i {
                continue;
            }
            let d = geom.distance(i as usize, j as usize);
            if d < best_d || (d == best_d && j < best) {
                best_d = d;
                best = j;
            }
        }
        let j = best;
        let (pi, pj) = (p[i as usize], p[j as usize]);
        let total = pi + pj;
        if total < 1.0 {
            // One of the pair drops to zero; the survivor absorbs the mass.
            if rng.gen::<f64>() < pj / total {
                p[i as usize] = 0.0;
                p[j as usize] = total;
            } else {
                p[i as usize] = total;
                p[j as usize] = 0.0;
            }
        } else {
            // One of the pair is selected; the other keeps the excess.
            let deficit = 2.0 - total;
            if rng.gen::<f64>() < (1.0 - pj) / deficit {
                p[i as usize] = 1.0;
                p[j as usize] = total - 1.0;
            } else {
                p[j as usize] = 1.0;
                p[i as usize] = total - 1.0;
            }
        }
        // Drop decided units from the pool (largest slot first).
        let slot_j = undecided.iter().position(|&u| u == j).unwrap();
        let mut drops = [usize::MAX; 2];
        let mut n_drops = 0;
        for (s, u) in [(slot, i), (slot_j, j)] {
            let pu = p[u as usize];
            if pu <= DECIDED_EPS || pu >= 1.0 - DECIDED_EPS {
                drops[n_drops] = s;
                n_drops += 1;
            }
        }
        drops[..n_drops].sort_unstable_by(|a, b| b.cmp(a));
        for &s in &drops[..n_drops] {
            undecided.swap_remove(s);
        }
    }
    // A lone leftover must already be numerically resolved.
    for &u in &undecided {
        p[u as usize] = p[u as usize].round();
    }

    let selected: Vec<u32> = (0..p.len() as u32)
        .filter(|&u| p[u as usize] >= 1.0 - DECIDED_EPS)
        .collect();
    if selected.len() != probs.target_size() {
        return Err(Error::WrongSampleSize {
            expected: probs.target_size(),
            actual: selected.len(),
        });
    }
    Ok(selected)
}

/// Fixed-size generators usable by [`init_by_sampling`]. Every generator
/// honors the prescribed inclusion probabilities exactly in expectation and
/// returns exactly `sum(probs)` units.
pub enum InitGenerator<'a> {
    /// Local pivotal method over the given geometry (spatially spread).
    LocalPivotal(&'a DistanceProvider<'a>),
    /// Systematic selection on the cumulative probability grid; `O(N)` per
    /// sample and exact because budgets share one integer denominator.
    ProbabilitySystematic,
}

impl<'a> InitGenerator<'a> {
    fn generate<R: Rng>(
        &self,
        budget: &[u32],
        active: &[u32],
        remaining: u32,
        rng: &mut R,
    ) -> Result<Vec<u32>> {
        match self {
            InitGenerator::LocalPivotal(geom) => {
                let probs = InclusionVector::new(
                    budget
                        .iter()
                        .map(|&b| f64::from(b) / f64::from(remaining))
                        .collect(),
                )?;
                lpm(&probs, geom, rng)
            }
            InitGenerator::ProbabilitySystematic => {
                Ok(systematic_on_budget(budget, active, remaining, rng))
            }
        }
    }
}

/// Exact systematic selection of `sum(budget) / remaining` units where unit
/// `i` has probability `budget[i] / remaining`. Works on the integer
/// cumulative sums over the active (positive-budget) units, so sample sizes
/// are exact by construction.
fn systematic_on_budget<R: Rng>(
    budget: &[u32],
    active: &[u32],
    remaining: u32,
    rng: &mut R,
) -> Vec<u32> {
    let rem = f64::from(remaining);
    let t = rng.gen::<f64>() * rem; // uniform on [0, remaining)
    let mut chosen = Vec::new();
    let mut cum = 0u64;
    let mut m = 0u64;
    for &i in active {
        let next = cum + u64::from(budget[i as usize]);
        while (m as f64) * rem + t < next as f64 {
            chosen.push(i);
            m += 1;
        }
        cum = next;
    }
    chosen
}

/// Build a tactical configuration by sequentially generating its samples with
/// per-step budgets `b_k` and probabilities `b_k / (M - k + 1)`.
pub fn init_by_sampling<R: Rng>(
    n_units: usize,
    sample_size: usize,
    generator: &InitGenerator,
    rng: &mut R,
) -> Result<TacticalConfiguration> {
    let params = min_params(n_units, sample_size)?;
    let (m, c) = (params.n_samples, params.multiplicity);
    let mut budget = vec![c as u32; n_units];
    // Budgets only change through the per-column decrements below, so the
    // running total is the exact vector sum. Active units (positive budget)
    // are tracked in ascending order.
    let mut budget_total = c as u64 * n_units as u64;
    let mut active: Vec<u32> = (0..n_units as u32).collect();
    let mut columns: Vec<Vec<u32>> = Vec::with_capacity(m);
    for k in 0..m {
        let remaining = (m - k) as u32;
        assert_eq!(
            budget_total,
            sample_size as u64 * u64::from(remaining),
            "budget identity violated at step {k}"
        );
        // When every probability is 0 or 1 the sample is forced; this covers
        // the final step and avoids degenerate pivotal updates at p = 1.
        let forced = active.iter().all(|&u| budget[u as usize] == remaining);
        let column = if forced {
            active.clone()
        } else {
            let mut sample = generator.generate(&budget, &active, remaining, rng)?;
            sample.sort_unstable();
            sample
        };
        if column.len() != sample_size {
            return Err(Error::WrongSampleSize {
                expected: sample_size,
                actual: column.len(),
            });
        }
        let mut exhausted = false;
        for &u in &column {
            debug_assert!(budget[u as usize] > 0);
            budget[u as usize] -= 1;
            exhausted |= budget[u as usize] == 0;
        }
        budget_total -= column.len() as u64;
        if exhausted {
            active.retain(|&u| budget[u as usize] > 0);
        }
        columns.push(column);
    }
    TacticalConfiguration::from_columns(n_units, sample_size, columns)
}
