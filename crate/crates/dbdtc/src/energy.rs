//! Energy distance of a sample against the population, expected energy of a
//! configuration, and the incremental change under an admissible swap.
//!
//! The energy distance between the empirical auxiliary distribution of a
//! sample and that of the population reduces to
//! `2 * mean(phi on sample) - mean(phi on population) - mean pairwise
//! distance within the sample`, which is what these routines evaluate.
//!
//! # References
//! Székely, G.J., & Rizzo, M.L. (2013). Energy statistics: A class of
//! statistics based on distances. Journal of Statistical Planning and
//! Inference, 143(8), 1249-1272.

use crate::error::{Error, Result};
use crate::geometry::{DistanceProvider, PhiVector};
use crate::tactical::TacticalConfiguration;

/// Energy evaluations over one population's geometry.
pub struct EnergyModel<'a> {
    geom: &'a DistanceProvider<'a>,
    phi: &'a PhiVector,
}

/// Energy change of an admissible swap, split by affected column.
///
/// `distance_terms` counts the evaluated distance-difference terms
/// `d(i, u) - d(i, v)`; it is at most `2 (n - 1)` per swap.
#[derive(Debug, Clone, Copy)]
pub struct SwapDelta {
    pub column_a: f64,
    pub column_b: f64,
    pub total: f64,
    pub distance_terms: usize,
}

impl<'a> EnergyModel<'a> {
    pub fn new(geom: &'a DistanceProvider<'a>, phi: &'a PhiVector) -> Self {
        Self { geom, phi }
    }

    pub fn geometry(&self) -> &'a DistanceProvider<'a> {
        self.geom
    }

    pub fn phi(&self) -> &'a PhiVector {
        self.phi
    }

    /// Energy distance of one sample. `O(n^2)` given the mean distances.
    pub fn sample_energy(&self, sample: &[u32]) -> f64 {
        let n = sample.len();
        assert!(n > 0, "sample must be nonempty");
        let mut phi_sum = 0.0;
        for &i in sample {
            phi_sum += self.phi.get(i as usize);
        }
        let mut pair_sum = 0.0;
        for (a, &i) in sample.iter().enumerate() {
            for &j in &sample[a + 1..] {
                pair_sum += self.geom.distance(i as usize, j as usize);
            }
        }
        let n_f = n as f64;
        2.0 * phi_sum / n_f - self.phi.mean() - 2.0 * pair_sum / (n_f * n_f)
    }

    /// Per-sample energies of every column, with the running total.
    pub fn expected_energy(&self, cfg: &TacticalConfiguration) -> EnergyLedger {
        let per_sample: Vec<f64> = cfg
            .columns_iter()
            .map(|col| self.sample_energy(col))
            .collect();
        EnergyLedger::new(per_sample)
    }

    /// Total-energy change of moving `unit_u` from `col_a` to `col_b` and
    /// `unit_v` the other way. Only the two affected columns contribute, so
    /// at most `2 (n - 1)` distance-difference terms are evaluated.
    pub fn delta_swap(
        &self,
        cfg: &TacticalConfiguration,
        col_a: usize,
        col_b: usize,
        unit_u: u32,
        unit_v: u32,
    ) -> Result<SwapDelta> {
        let admissible = col_a != col_b
            && cfg.contains(unit_u, col_a)
            && cfg.contains(unit_v, col_b)
            && !cfg.contains(unit_u, col_b)
            && !cfg.contains(unit_v, col_a);
        if !admissible {
            return Err(Error::InadmissibleSwap {
                column_a: col_a,
                column_b: col_b,
                unit_u,
                unit_v,
            });
        }
        Ok(self.delta_swap_unchecked(cfg, col_a, col_b, unit_u, unit_v))
    }

    pub(crate) fn delta_swap_unchecked(
        &self,
        cfg: &TacticalConfiguration,
        col_a: usize,
        col_b: usize,
        unit_u: u32,
        unit_v: u32,
    ) -> SwapDelta {
        let n = cfg.sample_size() as f64;
        let (u, v) = (unit_u as usize, unit_v as usize);
        let mut sum_a = 0.0;
        let mut terms = 0usize;
        for &i in cfg.column(col_a) {
            if i == unit_u {
                continue;
            }
            sum_a += self.geom.distance_diff(i as usize, u, v);
            terms += 1;
        }
        let mut sum_b = 0.0;
        for &i in cfg.column(col_b) {
            if i == unit_v {
                continue;
            }
            sum_b += self.geom.distance_diff(i as usize, u, v);
            terms += 1;
        }
        let phi_gain = 2.0 / n * (self.phi.get(v) - self.phi.get(u));
        let scale = 2.0 / (n * n);
        let column_a = phi_gain + scale * sum_a;
        let column_b = -phi_gain - scale * sum_b;
        SwapDelta {
            column_a,
            column_b,
            total: column_a + column_b,
            distance_terms: terms,
        }
    }
}

/// Cached per-sample energies of a configuration.
///
/// Patched incrementally by the optimizer; a full recompute is forced every
/// [`RECOMPUTE_INTERVAL`] accepted swaps to bound floating-point drift, with a
/// hard failure above [`DRIFT_TOLERANCE`] relative error.
#[derive(Debug, Clone)]
pub struct EnergyLedger {
    per_sample: Vec<f64>,
    total: f64,
}

/// Accepted swaps between forced ledger recomputations.
pub const RECOMPUTE_INTERVAL: u64 = 1_000_000;
/// Maximum tolerated relative drift between cached and recomputed energies.
pub const DRIFT_TOLERANCE: f64 = 1e-7;

impl EnergyLedger {
    pub fn new(per_sample: Vec<f64>) -> Self {
        let total = per_sample.iter().sum();
        Self { per_sample, total }
    }

    pub fn per_sample(&self) -> &[f64] {
        &self.per_sample
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    /// Expected energy distance: the mean of the per-sample energies.
    pub fn expected(&self) -> f64 {
        self.total / self.per_sample.len() as f64
    }

    /// Patch the two affected columns after an accepted swap.
    pub fn apply_swap(&mut self, col_a: usize, col_b: usize, delta: &SwapDelta) {
        self.per_sample[col_a] += delta.column_a;
        self.per_sample[col_b] += delta.column_b;
        self.total += delta.total;
    }

    /// Patch a single entry.
    pub fn apply(&mut self, idx: usize, delta: f64) {
        self.per_sample[idx] += delta;
        self.total += delta;
    }

    /// Relative gap between this ledger and a freshly recomputed one.
    pub fn relative_gap(&self, fresh: &EnergyLedger) -> f64 {
        let scale = fresh.total.abs().max(1e-30);
        (self.total - fresh.total).abs() / scale
    }

    /// Replace the cached values by `fresh`, failing if drift exceeded
    /// [`DRIFT_TOLERANCE`].
    pub fn resync(&mut self, fresh: EnergyLedger) -> Result<()> {
        let gap = self.relative_gap(&fresh);
        if gap > DRIFT_TOLERANCE {
            return Err(Error::EnergyDrift { relative: gap });
        }
        *self = fresh;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DistanceProvider;
    use crate::population::{synth_uniform, Population};
    use crate::seeds;
    use crate::tactical::cyclic_init;
    use rand::Rng;

    /// Energy distance evaluated straight from the definition, independent of
    /// the cached mean distances: used as the oracle for the fast paths.
    pub(crate) fn naive_sample_energy(pop: &Population, sample: &[u32]) -> f64 {
        let n_units = pop.size();
        let dist = |i: usize, j: usize| -> f64 {
            pop.aux_row(i)
                .iter()
                .zip(pop.aux_row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        };
        let n = sample.len() as f64;
        let mut cross = 0.0;
        for &i in sample {
            for k in 0..n_units {
                cross += dist(i as usize, k);
            }
        }
        let mut within = 0.0;
        for &i in sample {
            for &j in sample {
                within += dist(i as usize, j as usize);
            }
        }
        let mut pop_pairs = 0.0;
        for i in 0..n_units {
            for j in 0..n_units {
                pop_pairs += dist(i, j);
            }
        }
        let big_n = n_units as f64;
        2.0 * cross / (n * big_n) - within / (n * n) - pop_pairs / (big_n * big_n)
    }

    fn model_fixture(pop: &Population) -> (DistanceProvider<'_>, PhiVector) {
        let geom = DistanceProvider::new(pop);
        let phi = geom.phi();
        (geom, phi)
    }

    #[test]
    fn census_energy_is_zero() {
        let pop = synth_uniform(25, 3, 1).unwrap();
        let (geom, phi) = model_fixture(&pop);
        let model = EnergyModel::new(&geom, &phi);
        let all: Vec<u32> = (0..25).collect();
        assert!(model.sample_energy(&all).abs() < 1e-12);
    }

    #[test]
    fn line_population_energies() {
        let pop = Population::from_rows(vec![vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let (geom, phi) = model_fixture(&pop);
        let model = EnergyModel::new(&geom, &phi);
        // Middle point scores lower than an endpoint.
        assert!((model.sample_energy(&[1]) - 4.0 / 9.0).abs() < 1e-12);
        assert!((model.sample_energy(&[0]) - 10.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn identical_units_have_zero_energy() {
        let pop = Population::from_rows(vec![vec![3.0, 3.0]; 6]).unwrap();
        let (geom, phi) = model_fixture(&pop);
        let model = EnergyModel::new(&geom, &phi);
        assert_eq!(model.sample_energy(&[0, 2, 4]), 0.0);
    }

    #[test]
    fn sample_energy_is_nonnegative_and_matches_oracle() {
        let pop = synth_uniform(40, 2, 2).unwrap();
        let (geom, phi) = model_fixture(&pop);
        let model = EnergyModel::new(&geom, &phi);
        let mut rng = seeds::rng(2, "energy.oracle");
        for _ in 0..50 {
            let sample = crate::samplers::srs(40, 8, &mut rng).unwrap();
            let fast = model.sample_energy(&sample);
            let slow = naive_sample_energy(&pop, &sample);
            assert!((fast - slow).abs() < 1e-10, "fast {fast} vs naive {slow}");
            assert!(fast >= -1e-12);
        }
    }

    #[test]
    fn expected_energy_averages_columns() {
        let pop = synth_uniform(12, 2, 3).unwrap();
        let (geom, phi) = model_fixture(&pop);
        let model = EnergyModel::new(&geom, &phi);
        let mut rng = seeds::rng(3, "energy.expected");
        let cfg = cyclic_init(12, 8, None, &mut rng).unwrap();
        let ledger = model.expected_energy(&cfg);
        let by_hand: f64 = cfg
            .columns_iter()
            .map(|col| model.sample_energy(col))
            .sum::<f64>()
            / cfg.n_samples() as f64;
        assert!((ledger.expected() - by_hand).abs() < 1e-12);
        let entry_total: f64 = ledger.per_sample().iter().sum();
        assert!((ledger.total() - entry_total).abs() <= 1e-9 * entry_total.abs().max(1.0));
    }

    #[test]
    fn ledger_mean_of_equal_entries() {
        let ledger = EnergyLedger::new(vec![0.25; 7]);
        assert_eq!(ledger.expected(), 0.25);
        assert!((ledger.total() - 1.75).abs() < 1e-15);
    }

    #[test]
    fn census_ledger_is_zero() {
        let pop = synth_uniform(9, 2, 4).unwrap();
        let (geom, phi) = model_fixture(&pop);
        let model = EnergyModel::new(&geom, &phi);
        let mut rng = seeds::rng(4, "energy.census");
        let cfg = cyclic_init(9, 9, None, &mut rng).unwrap();
        assert!(model.expected_energy(&cfg).expected().abs() < 1e-12);
    }

    #[test]
    fn delta_matches_full_recompute() {
        let pop = synth_uniform(30, 3, 5).unwrap();
        let (geom, phi) = model_fixture(&pop);
        let model = EnergyModel::new(&geom, &phi);
        let mut rng = seeds::rng(5, "energy.delta");
        let mut cfg = cyclic_init(30, 12, None, &mut rng).unwrap();
        let n = cfg.sample_size();
        let m = cfg.n_samples();
        for _ in 0..400 {
            let a = rng.gen_range(0..m);
            let mut b = rng.gen_range(0..m - 1);
            if b >= a {
                b += 1;
            }
            let u = cfg.column(a)[rng.gen_range(0..n)];
            let v = cfg.column(b)[rng.gen_range(0..n)];
            let Ok(delta) = model.delta_swap(&cfg, a, b, u, v) else {
                continue;
            };
            assert!(delta.distance_terms <= 2 * (n - 1));
            let before_a = model.sample_energy(cfg.column(a));
            let before_b = model.sample_energy(cfg.column(b));
            cfg.swap_units(a, b, u, v).unwrap();
            let after_a = model.sample_energy(cfg.column(a));
            let after_b = model.sample_energy(cfg.column(b));
            cfg.swap_units(a, b, v, u).unwrap(); // undo
            let expect_total = (after_a + after_b) - (before_a + before_b);
            let scale = expect_total.abs().max(1e-12);
            assert!(
                (delta.total - expect_total).abs() / scale < 1e-9
                    || (delta.total - expect_total).abs() < 1e-12,
                "delta {} vs recompute {}",
                delta.total,
                expect_total
            );
            assert!((delta.column_a - (after_a - before_a)).abs() < 1e-10);
            assert!((delta.column_b - (after_b - before_b)).abs() < 1e-10);
        }
    }

    #[test]
    fn delta_is_zero_for_identical_aux_vectors() {
        let mut rows: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64]).collect();
        rows[6] = rows[1].clone(); // units 1 and 6 coincide
        let pop = Population::from_rows(rows).unwrap();
        let (geom, phi) = model_fixture(&pop);
        let model = EnergyModel::new(&geom, &phi);
        let mut rng = seeds::rng(6, "energy.zero_delta");
        let cfg = cyclic_init(8, 2, Some(&[true, false, false, false]), &mut rng).unwrap();
        // Units 1 and 6 sit in different columns of the cyclic layout.
        let col_u = cfg.unit_columns(1)[0] as usize;
        let col_v = cfg.unit_columns(6)[0] as usize;
        assert!(col_u != col_v && !cfg.contains(1, col_v) && !cfg.contains(6, col_u));
        let delta = model.delta_swap(&cfg, col_u, col_v, 1, 6).unwrap();
        assert!(delta.total.abs() < 1e-12);
    }

    #[test]
    fn delta_rejects_inadmissible_swap() {
        let pop = synth_uniform(6, 1, 7).unwrap();
        let (geom, phi) = model_fixture(&pop);
        let model = EnergyModel::new(&geom, &phi);
        let mut rng = seeds::rng(7, "energy.inadmissible");
        let cfg = cyclic_init(6, 4, Some(&[true, true, false]), &mut rng).unwrap();
        // Unit 0 lies in columns 0 and 1.
        assert!(model.delta_swap(&cfg, 0, 1, 0, 0).is_err());
    }

    #[test]
    fn expected_energy_invariant_under_relabeling() {
        let pop = synth_uniform(15, 2, 8).unwrap();
        let (geom, phi) = model_fixture(&pop);
        let model = EnergyModel::new(&geom, &phi);
        let mut rng = seeds::rng(8, "energy.relabel");
        let cfg = cyclic_init(15, 6, None, &mut rng).unwrap();
        let base = model.expected_energy(&cfg).expected();

        // Relabel units and permute the population rows the same way.
        let mut perm: Vec<u32> = (0..15).collect();
        use rand::seq::SliceRandom;
        perm.shuffle(&mut rng);
        let relabeled = cfg.permute_rows(&perm).unwrap();
        let mut inverse = [0u32; 15];
        for (old, &new) in perm.iter().enumerate() {
            inverse[new as usize] = old as u32;
        }
        let rows: Vec<Vec<f64>> = (0..15)
            .map(|i| pop.aux_row(inverse[i] as usize).to_vec())
            .collect();
        let permuted_pop = Population::from_rows(rows).unwrap();
        let geom2 = DistanceProvider::new(&permuted_pop);
        let phi2 = geom2.phi();
        let model2 = EnergyModel::new(&geom2, &phi2);
        let relabeled_energy = model2.expected_energy(&relabeled).expected();
        assert!((base - relabeled_energy).abs() < 1e-10);
    }
}
