//! Euclidean distances between population units, per-unit mean distances and
//! exact nearest-neighbor queries.
//!
//! Distances are cached as a full `N x N` matrix while `N` stays below a
//! configurable threshold; above it they are recomputed on demand and the
//! mean-distance vector is built in streaming passes with `O(N)` memory.

use crate::error::{Error, Result};
use crate::population::Population;

/// Full-matrix caching is used up to this population size by default.
pub const DEFAULT_CACHE_THRESHOLD: usize = 4000;

/// Pairwise Euclidean distance provider over one population.
pub struct DistanceProvider<'a> {
    pop: &'a Population,
    cache: Option<Vec<f64>>,
}

impl<'a> DistanceProvider<'a> {
    pub fn new(pop: &'a Population) -> Self {
        Self::with_cache_threshold(pop, DEFAULT_CACHE_THRESHOLD)
    }

    pub fn with_cache_threshold(pop: &'a Population, threshold: usize) -> Self {
        let n = pop.size();
        let cache = if n <= threshold {
            let mut m = vec![0.0; n * n];
            for i in 0..n {
                for j in (i + 1)..n {
                    let d = euclidean(pop.aux_row(i), pop.aux_row(j));
                    m[i * n + j] = d;
                    m[j * n + i] = d;
                }
            }
            Some(m)
        } else {
            None
        };
        Self { pop, cache }
    }

    pub fn population(&self) -> &'a Population {
        self.pop
    }

    pub fn is_cached(&self) -> bool {
        self.cache.is_some()
    }

    /// Euclidean distance between units `i` and `j`. Panics on out-of-range
    /// indices, like slice indexing.
    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        match &self.cache {
            Some(m) => m[i * self.pop.size() + j],
            None => euclidean(self.pop.aux_row(i), self.pop.aux_row(j)),
        }
    }

    /// `d(i, u) - d(i, v)` as a single evaluation; the unit of account for
    /// the incremental-energy cost bound.
    #[inline]
    pub fn distance_diff(&self, i: usize, u: usize, v: usize) -> f64 {
        self.distance(i, u) - self.distance(i, v)
    }

    /// Per-unit mean distance to the whole population (self included).
    pub fn phi(&self) -> PhiVector {
        let n = self.pop.size();
        let mut acc = vec![0.0; n];
        match &self.cache {
            Some(m) => {
                for i in 0..n {
                    acc[i] = m[i * n..(i + 1) * n].iter().sum();
                }
            }
            None => {
                for i in 0..n {
                    for j in (i + 1)..n {
                        let d = euclidean(self.pop.aux_row(i), self.pop.aux_row(j));
                        acc[i] += d;
                        acc[j] += d;
                    }
                }
            }
        }
        for a in &mut acc {
            *a /= n as f64;
        }
        PhiVector::new(acc)
    }

    /// Map every population unit to its nearest unit of `sample`; equidistant
    /// candidates resolve to the smallest unit index.
    pub fn voronoi_assign(&self, sample: &[u32]) -> Vec<u32> {
        assert!(!sample.is_empty(), "voronoi assignment needs a nonempty sample");
        let mut centers: Vec<u32> = sample.to_vec();
        centers.sort_unstable();
        (0..self.pop.size())
            .map(|i| {
                let mut best = centers[0];
                let mut best_d = self.distance(i, best as usize);
                for &c in &centers[1..] {
                    let d = self.distance(i, c as usize);
                    if d < best_d {
                        best_d = d;
                        best = c;
                    }
                }
                best
            })
            .collect()
    }

    /// The `k - 1` sampled units nearest to sampled unit `unit` (itself
    /// excluded), ties broken by smallest unit index.
    pub fn nearest_sampled_neighbors(
        &self,
        sample: &[u32],
        unit: u32,
        k: usize,
    ) -> Result<Vec<u32>> {
        if k == 0 || k > sample.len() {
            return Err(Error::InvalidNeighborCount {
                k,
                sample_size: sample.len(),
            });
        }
        debug_assert!(sample.contains(&unit));
        let mut others: Vec<u32> = sample.iter().copied().filter(|&s| s != unit).collect();
        others.sort_unstable();
        let mut keyed: Vec<(f64, u32)> = others
            .into_iter()
            .map(|s| (self.distance(unit as usize, s as usize), s))
            .collect();
        keyed.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        Ok(keyed.into_iter().take(k - 1).map(|(_, s)| s).collect())
    }
}

#[inline]
fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Mean distance from each unit to the whole population.
#[derive(Debug, Clone)]
pub struct PhiVector {
    values: Vec<f64>,
    mean: f64,
}

impl PhiVector {
    pub fn new(values: Vec<f64>) -> Self {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        Self { values, mean }
    }

    #[inline]
    pub fn get(&self, unit: usize) -> f64 {
        self.values[unit]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Population mean of the per-unit mean distances.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::synth_uniform;
    use rand::Rng;

    #[test]
    fn distance_matches_hand_values() {
        let pop = Population::from_rows(vec![vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap();
        let geom = DistanceProvider::new(&pop);
        assert_eq!(geom.distance(0, 1), 5.0);
        assert_eq!(geom.distance(1, 1), 0.0);
    }

    #[test]
    fn distance_matches_naive_recomputation() {
        let pop = synth_uniform(40, 3, 5).unwrap();
        let geom = DistanceProvider::new(&pop);
        let mut rng = crate::seeds::rng(5, "geometry.test");
        for _ in 0..200 {
            let i = rng.gen_range(0..40);
            let j = rng.gen_range(0..40);
            let naive: f64 = (0..3)
                .map(|d| {
                    let z = pop.aux_value(i, d) - pop.aux_value(j, d);
                    z * z
                })
                .sum::<f64>()
                .sqrt();
            assert!((geom.distance(i, j) - naive).abs() < 1e-12);
            assert!((geom.distance(i, j) - geom.distance(j, i)).abs() == 0.0);
        }
    }

    #[test]
    fn phi_on_line_population() {
        let pop = Population::from_rows(vec![vec![0.0], vec![1.0]]).unwrap();
        let geom = DistanceProvider::new(&pop);
        let phi = geom.phi();
        assert!((phi.get(0) - 0.5).abs() < 1e-15);
        assert!((phi.get(1) - 0.5).abs() < 1e-15);

        let pop = Population::from_rows(vec![vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let geom = DistanceProvider::new(&pop);
        let phi = geom.phi();
        assert!((phi.get(0) - 1.0).abs() < 1e-15);
        assert!((phi.get(1) - 2.0 / 3.0).abs() < 1e-15);
        assert!((phi.get(2) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn phi_zero_for_coincident_units() {
        let pop = Population::from_rows(vec![vec![2.0, 2.0]; 5]).unwrap();
        let geom = DistanceProvider::new(&pop);
        assert!(geom.phi().values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn phi_agrees_between_cached_and_on_demand() {
        let pop = synth_uniform(120, 4, 8).unwrap();
        let cached = DistanceProvider::with_cache_threshold(&pop, 4000);
        let on_demand = DistanceProvider::with_cache_threshold(&pop, 0);
        assert!(cached.is_cached());
        assert!(!on_demand.is_cached());
        let a = cached.phi();
        let b = on_demand.phi();
        for i in 0..pop.size() {
            assert!((a.get(i) - b.get(i)).abs() < 1e-12);
        }
    }

    #[test]
    fn voronoi_tie_goes_to_smaller_id() {
        let pop = Population::from_rows(vec![vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let geom = DistanceProvider::new(&pop);
        let assign = geom.voronoi_assign(&[0, 2]);
        assert_eq!(assign, vec![0, 0, 2]);
    }

    #[test]
    fn voronoi_identity_on_census() {
        let pop = synth_uniform(30, 2, 3).unwrap();
        let geom = DistanceProvider::new(&pop);
        let all: Vec<u32> = (0..30).collect();
        let assign = geom.voronoi_assign(&all);
        assert_eq!(assign, all);
    }

    #[test]
    fn voronoi_matches_exhaustive_search() {
        let pop = synth_uniform(60, 2, 13).unwrap();
        let geom = DistanceProvider::new(&pop);
        let sample: Vec<u32> = vec![3, 17, 29, 45, 58];
        let assign = geom.voronoi_assign(&sample);
        assert_eq!(assign.len(), pop.size());
        for (i, &assigned) in assign.iter().enumerate() {
            let mut best = sample[0];
            let mut best_d = f64::INFINITY;
            for &s in &sample {
                let d = geom.distance(i, s as usize);
                if d < best_d || (d == best_d && s < best) {
                    best_d = d;
                    best = s;
                }
            }
            assert_eq!(assigned, best);
        }
    }

    #[test]
    fn neighbors_edge_cases() {
        let pop = synth_uniform(10, 2, 1).unwrap();
        let geom = DistanceProvider::new(&pop);
        let sample = vec![1, 4, 7];
        assert!(geom.nearest_sampled_neighbors(&sample, 4, 1).unwrap().is_empty());
        let pair = vec![2, 9];
        assert_eq!(geom.nearest_sampled_neighbors(&pair, 2, 2).unwrap(), vec![9]);
        assert!(geom.nearest_sampled_neighbors(&pair, 2, 3).is_err());
    }

    #[test]
    fn neighbors_match_sort_oracle() {
        let pop = synth_uniform(50, 3, 21).unwrap();
        let geom = DistanceProvider::new(&pop);
        let sample: Vec<u32> = (0..50).step_by(5).collect();
        for &u in &sample {
            let got = geom.nearest_sampled_neighbors(&sample, u, 4).unwrap();
            let mut oracle: Vec<(f64, u32)> = sample
                .iter()
                .filter(|&&s| s != u)
                .map(|&s| (geom.distance(u as usize, s as usize), s))
                .collect();
            oracle.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let expect: Vec<u32> = oracle.into_iter().take(3).map(|(_, s)| s).collect();
            assert_eq!(got, expect);
        }
    }
}
