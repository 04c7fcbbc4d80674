//! Tactical configurations: `N x M` binary incidence structures whose columns
//! are samples of fixed size `n` and whose rows (units) each appear in exactly
//! `c` columns, at the minimum feasible size `M = N / gcd(N, n)`.

use std::collections::BTreeMap;
use std::fmt;

use num_integer::Integer;
use num_rational::Ratio;
use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};

/// Minimum feasible configuration parameters for a `(N, n)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MinParams {
    /// `gcd(N, n)`.
    pub divisor: usize,
    /// Number of samples `M = N / gcd(N, n)`.
    pub n_samples: usize,
    /// Per-unit multiplicity `c = n / gcd(N, n)`.
    pub multiplicity: usize,
}

/// Compute the minimum configuration size for population size `n_units` and
/// sample size `sample_size`.
pub fn min_params(n_units: usize, sample_size: usize) -> Result<MinParams> {
    if sample_size == 0 || sample_size > n_units {
        return Err(Error::InvalidSampleSize {
            sample_size,
            population_size: n_units,
        });
    }
    let g = n_units.gcd(&sample_size);
    Ok(MinParams {
        divisor: g,
        n_samples: n_units / g,
        multiplicity: sample_size / g,
    })
}

/// First violation found when checking a configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    ColumnSize { column: usize, found: usize },
    DuplicateUnit { column: usize, unit: u32 },
    UnitOutOfRange { column: usize, unit: u32 },
    RowSum { unit: u32, found: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ColumnSize { column, found } => {
                write!(f, "column {column} has {found} units")
            }
            Violation::DuplicateUnit { column, unit } => {
                write!(f, "unit {unit} duplicated in column {column}")
            }
            Violation::UnitOutOfRange { column, unit } => {
                write!(f, "unit {unit} in column {column} out of range")
            }
            Violation::RowSum { unit, found } => {
                write!(f, "unit {unit} appears in {found} columns")
            }
        }
    }
}

/// A minimum tactical configuration.
///
/// Columns are kept as sorted unit-index slices (samples are sets); every
/// unit's column memberships are mirrored as a sorted length-`c` slice so
/// membership tests during swap admissibility are `O(log c)`.
#[derive(Debug, Clone)]
pub struct TacticalConfiguration {
    n_units: usize,
    sample_size: usize,
    n_samples: usize,
    multiplicity: usize,
    columns: Vec<u32>, // flat M x n, each column sorted ascending
    rows: Vec<u32>,    // flat N x c, each row sorted ascending
}

impl TacticalConfiguration {
    /// Build from explicit columns, checking all structural invariants.
    pub fn from_columns(
        n_units: usize,
        sample_size: usize,
        columns: Vec<Vec<u32>>,
    ) -> Result<Self> {
        let params = min_params(n_units, sample_size)?;
        if columns.len() != params.n_samples {
            return Err(Error::MalformedConfigFile {
                line: 0,
                reason: format!(
                    "expected {} samples, found {}",
                    params.n_samples,
                    columns.len()
                ),
            });
        }
        if let Some((k, col)) = columns.iter().enumerate().find(|(_, c)| c.len() != sample_size) {
            return Err(Error::MalformedConfigFile {
                line: 0,
                reason: Violation::ColumnSize {
                    column: k,
                    found: col.len(),
                }
                .to_string(),
            });
        }
        let mut flat = Vec::with_capacity(params.n_samples * sample_size);
        for mut col in columns {
            col.sort_unstable();
            flat.extend_from_slice(&col);
        }
        Self::from_flat_columns(n_units, sample_size, params, flat)
    }

    fn from_flat_columns(
        n_units: usize,
        sample_size: usize,
        params: MinParams,
        columns: Vec<u32>,
    ) -> Result<Self> {
        let mut cfg = Self {
            n_units,
            sample_size,
            n_samples: params.n_samples,
            multiplicity: params.multiplicity,
            columns,
            rows: Vec::new(),
        };
        cfg.rebuild_rows().map_err(|v| Error::MalformedConfigFile {
            line: 0,
            reason: v.to_string(),
        })?;
        Ok(cfg)
    }

    /// Recompute the per-unit membership lists from the columns, failing on
    /// the first structural violation.
    fn rebuild_rows(&mut self) -> std::result::Result<(), Violation> {
        if self.columns.len() != self.n_samples * self.sample_size {
            return Err(Violation::ColumnSize {
                column: self.columns.len() / self.sample_size.max(1),
                found: self.columns.len() % self.sample_size.max(1),
            });
        }
        let c = self.multiplicity;
        let mut counts = vec![0usize; self.n_units];
        let mut rows = vec![0u32; self.n_units * c];
        for k in 0..self.n_samples {
            let col = &self.columns[k * self.sample_size..(k + 1) * self.sample_size];
            for (pos, &u) in col.iter().enumerate() {
                if (u as usize) >= self.n_units {
                    return Err(Violation::UnitOutOfRange { column: k, unit: u });
                }
                if pos > 0 && col[pos - 1] >= u {
                    return Err(Violation::DuplicateUnit { column: k, unit: u });
                }
                let cnt = &mut counts[u as usize];
                if *cnt >= c {
                    return Err(Violation::RowSum {
                        unit: u,
                        found: *cnt + 1,
                    });
                }
                rows[u as usize * c + *cnt] = k as u32;
                *cnt += 1;
            }
        }
        if let Some(u) = counts.iter().position(|&cnt| cnt != c) {
            return Err(Violation::RowSum {
                unit: u as u32,
                found: counts[u],
            });
        }
        // Column indices are appended in increasing k, so rows are sorted.
        self.rows = rows;
        Ok(())
    }

    pub fn n_units(&self) -> usize {
        self.n_units
    }

    pub fn sample_size(&self) -> usize {
        self.sample_size
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn multiplicity(&self) -> usize {
        self.multiplicity
    }

    /// Sorted unit indices of column `k`.
    #[inline]
    pub fn column(&self, k: usize) -> &[u32] {
        &self.columns[k * self.sample_size..(k + 1) * self.sample_size]
    }

    pub fn columns_iter(&self) -> impl Iterator<Item = &[u32]> {
        self.columns.chunks_exact(self.sample_size)
    }

    /// Sorted column indices containing `unit`.
    #[inline]
    pub fn unit_columns(&self, unit: u32) -> &[u32] {
        let c = self.multiplicity;
        &self.rows[unit as usize * c..(unit as usize + 1) * c]
    }

    /// Whether `unit` belongs to column `k`.
    #[inline]
    pub fn contains(&self, unit: u32, k: usize) -> bool {
        self.unit_columns(unit).binary_search(&(k as u32)).is_ok()
    }

    /// Check both margin conditions and index ranges, reporting the first
    /// violation with its coordinates.
    pub fn validate(&self) -> std::result::Result<(), Violation> {
        let mut counts = vec![0usize; self.n_units];
        for k in 0..self.n_samples {
            let col = self.column(k);
            if col.len() != self.sample_size {
                return Err(Violation::ColumnSize {
                    column: k,
                    found: col.len(),
                });
            }
            for (pos, &u) in col.iter().enumerate() {
                if (u as usize) >= self.n_units {
                    return Err(Violation::UnitOutOfRange { column: k, unit: u });
                }
                if pos > 0 && col[pos - 1] == u {
                    return Err(Violation::DuplicateUnit { column: k, unit: u });
                }
                counts[u as usize] += 1;
            }
        }
        for (u, &cnt) in counts.iter().enumerate() {
            if cnt != self.multiplicity {
                return Err(Violation::RowSum {
                    unit: u as u32,
                    found: cnt,
                });
            }
        }
        Ok(())
    }

    /// Move unit `unit_u` from column `col_a` to `col_b` and `unit_v` the
    /// other way. Fails unless the interchange is admissible.
    pub fn swap_units(
        &mut self,
        col_a: usize,
        col_b: usize,
        unit_u: u32,
        unit_v: u32,
    ) -> Result<()> {
        let admissible = col_a != col_b
            && self.contains(unit_u, col_a)
            && self.contains(unit_v, col_b)
            && !self.contains(unit_u, col_b)
            && !self.contains(unit_v, col_a);
        if !admissible {
            return Err(Error::InadmissibleSwap {
                column_a: col_a,
                column_b: col_b,
                unit_u,
                unit_v,
            });
        }
        self.replace_in_column(col_a, unit_u, unit_v);
        self.replace_in_column(col_b, unit_v, unit_u);
        self.replace_in_row(unit_u, col_a as u32, col_b as u32);
        self.replace_in_row(unit_v, col_b as u32, col_a as u32);
        Ok(())
    }

    fn replace_in_column(&mut self, k: usize, old: u32, new: u32) {
        let col = &mut self.columns[k * self.sample_size..(k + 1) * self.sample_size];
        let at = col.binary_search(&old).expect("unit present in column");
        col[at] = new;
        // Restore sortedness by bubbling the replaced entry into place.
        let mut i = at;
        while i > 0 && col[i - 1] > col[i] {
            col.swap(i - 1, i);
            i -= 1;
        }
        while i + 1 < col.len() && col[i] > col[i + 1] {
            col.swap(i, i + 1);
            i += 1;
        }
    }

    fn replace_in_row(&mut self, unit: u32, old: u32, new: u32) {
        let c = self.multiplicity;
        let row = &mut self.rows[unit as usize * c..(unit as usize + 1) * c];
        let at = row.binary_search(&old).expect("column present in row");
        row[at] = new;
        let mut i = at;
        while i > 0 && row[i - 1] > row[i] {
            row.swap(i - 1, i);
            i -= 1;
        }
        while i + 1 < row.len() && row[i] > row[i + 1] {
            row.swap(i, i + 1);
            i += 1;
        }
    }

    /// Apply a unit relabeling: unit `i` of the result is unit `perm⁻¹(i)` of
    /// `self`, i.e. every occurrence of unit `u` becomes `perm[u]`.
    pub fn permute_rows(&self, perm: &[u32]) -> Result<Self> {
        if perm.len() != self.n_units {
            return Err(Error::InvalidPermutation { n: self.n_units });
        }
        let mut seen = vec![false; self.n_units];
        for &p in perm {
            if (p as usize) >= self.n_units || seen[p as usize] {
                return Err(Error::InvalidPermutation { n: self.n_units });
            }
            seen[p as usize] = true;
        }
        let columns: Vec<Vec<u32>> = self
            .columns_iter()
            .map(|col| col.iter().map(|&u| perm[u as usize]).collect())
            .collect();
        Self::from_columns(self.n_units, self.sample_size, columns)
    }

    /// Unique columns with multiplicities and selection probabilities.
    pub fn support(&self) -> DesignSupport {
        let mut counts: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
        for col in self.columns_iter() {
            *counts.entry(col.to_vec()).or_insert(0) += 1;
        }
        let (samples, multiplicities): (Vec<_>, Vec<_>) = counts.into_iter().unzip();
        DesignSupport {
            samples,
            multiplicities,
            configuration_size: self.n_samples,
        }
    }

    /// Exact first- and second-order inclusion probabilities.
    pub fn inclusion_probs(&self) -> InclusionProbabilities {
        let n_units = self.n_units;
        let mut pair_counts = vec![0u32; n_units * n_units];
        for col in self.columns_iter() {
            for (a, &i) in col.iter().enumerate() {
                for &j in &col[a + 1..] {
                    pair_counts[i as usize * n_units + j as usize] += 1;
                    pair_counts[j as usize * n_units + i as usize] += 1;
                }
            }
        }
        let first = (0..n_units)
            .map(|u| {
                Ratio::new(
                    self.unit_columns(u as u32).len() as u64,
                    self.n_samples as u64,
                )
            })
            .collect();
        InclusionProbabilities {
            first,
            pair_counts,
            n_units,
            n_samples: self.n_samples,
        }
    }

    /// Pick one column uniformly at random.
    pub fn draw_column<R: Rng>(&self, rng: &mut R) -> &[u32] {
        self.column(rng.gen_range(0..self.n_samples))
    }

    /// Flat column storage, one memcpy to snapshot.
    pub(crate) fn flat_columns(&self) -> &Vec<u32> {
        &self.columns
    }

    /// Rebuild a configuration with the same parameters from snapshotted
    /// columns. Panics if the snapshot violates the margins.
    pub(crate) fn with_columns_like(&self, columns: Vec<u32>) -> Self {
        let mut cfg = Self {
            n_units: self.n_units,
            sample_size: self.sample_size,
            n_samples: self.n_samples,
            multiplicity: self.multiplicity,
            columns,
            rows: Vec::new(),
        };
        cfg.rebuild_rows().expect("snapshot preserves margins");
        cfg
    }

    /// Text serialization: `N M n c` on the first line, then one sorted
    /// 1-based sample per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{} {} {} {}\n",
            self.n_units, self.n_samples, self.sample_size, self.multiplicity
        ));
        for col in self.columns_iter() {
            let line: Vec<String> = col.iter().map(|u| (u + 1).to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::MalformedConfigFile {
            line: 1,
            reason: "empty file".into(),
        })?;
        let head: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::MalformedConfigFile {
                line: 1,
                reason: e.to_string(),
            })?;
        if head.len() != 4 {
            return Err(Error::MalformedConfigFile {
                line: 1,
                reason: format!("expected 'N M n c', found {} fields", head.len()),
            });
        }
        let (n_units, m, sample_size, c) = (head[0], head[1], head[2], head[3]);
        let params = min_params(n_units, sample_size)?;
        if params.n_samples != m || params.multiplicity != c {
            return Err(Error::MalformedConfigFile {
                line: 1,
                reason: format!(
                    "declared M={m}, c={c}; minimum parameters require M={}, c={}",
                    params.n_samples, params.multiplicity
                ),
            });
        }
        let mut columns = Vec::with_capacity(m);
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let col: Vec<u32> = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<u32>().map_err(|e| Error::MalformedConfigFile {
                        line: idx + 1,
                        reason: e.to_string(),
                    })
                })
                .collect::<Result<_>>()?;
            if col.contains(&0) {
                return Err(Error::MalformedConfigFile {
                    line: idx + 1,
                    reason: "unit ids are 1-based".into(),
                });
            }
            columns.push(col.iter().map(|&u| u - 1).collect());
        }
        if columns.len() != m {
            return Err(Error::MalformedConfigFile {
                line: columns.len() + 1,
                reason: format!("expected {m} sample lines, found {}", columns.len()),
            });
        }
        Self::from_columns(n_units, sample_size, columns)
    }
}

/// Build the cyclic configuration whose row `i` is the `i`-th cyclic shift of
/// a length-`M` pattern with exactly `c` ones. A uniformly random pattern is
/// drawn when none is supplied.
pub fn cyclic_init<R: Rng>(
    n_units: usize,
    sample_size: usize,
    pattern: Option<&[bool]>,
    rng: &mut R,
) -> Result<TacticalConfiguration> {
    let params = min_params(n_units, sample_size)?;
    let (m, c) = (params.n_samples, params.multiplicity);
    let ones: Vec<usize> = match pattern {
        Some(v) => {
            let count = v.iter().filter(|b| **b).count();
            if v.len() != m || count != c {
                return Err(Error::MalformedCyclicPattern {
                    expected_len: m,
                    expected_ones: c,
                });
            }
            v.iter()
                .enumerate()
                .filter(|(_, b)| **b)
                .map(|(i, _)| i)
                .collect()
        }
        None => {
            let mut chosen = index::sample(rng, m, c).into_vec();
            chosen.sort_unstable();
            chosen
        }
    };
    // Unit i lies in column k iff pattern[(k - i) mod M] is set, i.e. the
    // columns of unit i are (i + s) mod M over the pattern's one-positions.
    // Unit-major iteration writes every column in ascending unit order.
    let mut flat = vec![0u32; m * sample_size];
    let mut cursor = vec![0usize; m];
    for i in 0..n_units {
        for &s in &ones {
            let k = (i + s) % m;
            flat[k * sample_size + cursor[k]] = i as u32;
            cursor[k] += 1;
        }
    }
    debug_assert!(cursor.iter().all(|&c| c == sample_size));
    TacticalConfiguration::from_flat_columns(n_units, sample_size, params, flat)
}

/// The set of distinct samples of a configuration with their multiplicities.
#[derive(Debug, Clone)]
pub struct DesignSupport {
    samples: Vec<Vec<u32>>,
    multiplicities: Vec<usize>,
    configuration_size: usize,
}

impl DesignSupport {
    pub fn from_equal_weight_samples(samples: Vec<Vec<u32>>) -> Self {
        let mut counts: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
        let total = samples.len();
        for mut s in samples {
            s.sort_unstable();
            *counts.entry(s).or_insert(0) += 1;
        }
        let (samples, multiplicities): (Vec<_>, Vec<_>) = counts.into_iter().unzip();
        Self {
            samples,
            multiplicities,
            configuration_size: total,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Total number of columns the support was built from (`M`).
    pub fn configuration_size(&self) -> usize {
        self.configuration_size
    }

    pub fn sample(&self, idx: usize) -> &[u32] {
        &self.samples[idx]
    }

    pub fn multiplicity(&self, idx: usize) -> usize {
        self.multiplicities[idx]
    }

    /// Exact selection probability `m(d) / M` of support member `idx`.
    pub fn probability(&self, idx: usize) -> Ratio<u64> {
        Ratio::new(
            self.multiplicities[idx] as u64,
            self.configuration_size as u64,
        )
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[u32], usize)> {
        self.samples
            .iter()
            .map(|s| s.as_slice())
            .zip(self.multiplicities.iter().copied())
    }
}

/// Exact inclusion probabilities of a configuration, kept in integer form.
#[derive(Debug, Clone)]
pub struct InclusionProbabilities {
    first: Vec<Ratio<u64>>,
    pair_counts: Vec<u32>,
    n_units: usize,
    n_samples: usize,
}

impl InclusionProbabilities {
    pub fn first_order(&self, unit: usize) -> Ratio<u64> {
        self.first[unit]
    }

    pub fn first_order_all(&self) -> &[Ratio<u64>] {
        &self.first
    }

    /// Exact `π_ij`: co-occurrence count over `M`.
    pub fn pairwise(&self, i: usize, j: usize) -> Ratio<u64> {
        if i == j {
            return self.first[i];
        }
        Ratio::new(
            u64::from(self.pair_counts[i * self.n_units + j]),
            self.n_samples as u64,
        )
    }

    /// Integer co-occurrence count of units `i != j`.
    pub fn pair_count(&self, i: usize, j: usize) -> u32 {
        self.pair_counts[i * self.n_units + j]
    }

    /// Sum of co-occurrence counts of `i` with all other units.
    pub fn pair_count_row_sum(&self, i: usize) -> u64 {
        self.pair_counts[i * self.n_units..(i + 1) * self.n_units]
            .iter()
            .map(|&c| u64::from(c))
            .sum()
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }
}
