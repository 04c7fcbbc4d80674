//! Finite populations with auxiliary variables: CSV ingestion, synthetic
//! generation and standardization.

use std::collections::HashSet;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::seeds;

/// A finite population of `N` units, each carrying a `p`-dimensional vector of
/// auxiliary variables, an opaque id and optionally a stratum label.
///
/// Immutable after construction; shared read-only by the rest of the crate.
#[derive(Debug, Clone)]
pub struct Population {
    aux: Vec<f64>, // row-major, n_units x dims
    n_units: usize,
    dims: usize,
    ids: Vec<String>,
    strata: Option<Vec<String>>,
}

impl Population {
    /// Build a population from per-unit auxiliary rows. Ids default to
    /// `1..=N` in row order.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::DegeneratePopulation);
        }
        let dims = rows[0].len();
        let mut aux = Vec::with_capacity(rows.len() * dims);
        for row in &rows {
            debug_assert_eq!(row.len(), dims, "ragged auxiliary rows");
            aux.extend_from_slice(row);
        }
        let ids = (1..=rows.len()).map(|i| i.to_string()).collect();
        Self::from_parts(aux, rows.len(), dims, ids, None)
    }

    /// Build from a flat row-major matrix plus ids and optional strata.
    pub fn from_parts(
        aux: Vec<f64>,
        n_units: usize,
        dims: usize,
        ids: Vec<String>,
        strata: Option<Vec<String>>,
    ) -> Result<Self> {
        if n_units == 0 || dims == 0 || aux.len() != n_units * dims {
            return Err(Error::DegeneratePopulation);
        }
        if !aux.iter().all(|v| v.is_finite()) {
            return Err(Error::DegeneratePopulation);
        }
        debug_assert_eq!(ids.len(), n_units);
        if let Some(s) = &strata {
            debug_assert_eq!(s.len(), n_units);
        }
        let mut seen = HashSet::with_capacity(ids.len());
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId { id: id.clone() });
            }
        }
        Ok(Self {
            aux,
            n_units,
            dims,
            ids,
            strata,
        })
    }

    pub fn size(&self) -> usize {
        self.n_units
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    #[inline]
    pub fn aux_row(&self, unit: usize) -> &[f64] {
        &self.aux[unit * self.dims..(unit + 1) * self.dims]
    }

    #[inline]
    pub fn aux_value(&self, unit: usize, dim: usize) -> f64 {
        self.aux[unit * self.dims + dim]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn strata(&self) -> Option<&[String]> {
        self.strata.as_deref()
    }

    /// Values of one auxiliary column.
    pub fn column(&self, dim: usize) -> Vec<f64> {
        (0..self.n_units).map(|i| self.aux_value(i, dim)).collect()
    }

    /// Column-wise totals of the auxiliary variables.
    pub fn aux_totals(&self) -> Vec<f64> {
        let mut totals = vec![0.0; self.dims];
        for i in 0..self.n_units {
            for (t, v) in totals.iter_mut().zip(self.aux_row(i)) {
                *t += v;
            }
        }
        totals
    }

    /// Sub-population restricted to `unit_indices` (ids and strata carried over).
    pub fn restrict(&self, unit_indices: &[u32]) -> Result<Self> {
        let mut aux = Vec::with_capacity(unit_indices.len() * self.dims);
        let mut ids = Vec::with_capacity(unit_indices.len());
        let mut strata = self.strata.as_ref().map(|_| Vec::with_capacity(unit_indices.len()));
        for &u in unit_indices {
            let u = u as usize;
            aux.extend_from_slice(self.aux_row(u));
            ids.push(self.ids[u].clone());
            if let (Some(out), Some(src)) = (&mut strata, &self.strata) {
                out.push(src[u].clone());
            }
        }
        Self::from_parts(aux, unit_indices.len(), self.dims, ids, strata)
    }
}

/// Options for [`load_csv`].
#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub aux_columns: Vec<String>,
    pub id_column: Option<String>,
    pub stratum_column: Option<String>,
}

/// Result of a CSV load: the population plus how many rows were dropped for
/// missing values.
#[derive(Debug)]
pub struct CsvLoad {
    pub population: Population,
    pub rows_dropped: usize,
}

fn is_missing(cell: &str) -> bool {
    let t = cell.trim();
    t.is_empty() || t.eq_ignore_ascii_case("na") || t.eq_ignore_ascii_case("nan")
}

/// Load a population from a headered, comma-separated, UTF-8 CSV file.
///
/// Rows with a missing value in any requested auxiliary column are dropped
/// and counted in [`CsvLoad::rows_dropped`]; a non-numeric (and non-missing)
/// cell is an error naming the row and column.
pub fn load_csv(path: &Path, options: &CsvOptions) -> Result<CsvLoad> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;

    let headers = reader
        .headers()
        .map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?
        .clone();
    let col_index = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::UnknownColumn {
                name: name.to_string(),
            })
    };

    let aux_idx: Vec<usize> = options
        .aux_columns
        .iter()
        .map(|c| col_index(c))
        .collect::<Result<_>>()?;
    let id_idx = options.id_column.as_deref().map(col_index).transpose()?;
    let stratum_idx = options
        .stratum_column
        .as_deref()
        .map(col_index)
        .transpose()?;

    let mut aux = Vec::new();
    let mut ids = Vec::new();
    let mut strata = stratum_idx.map(|_| Vec::new());
    let mut rows_dropped = 0usize;

    for (row_no, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let cells: Vec<&str> = aux_idx.iter().map(|&i| record.get(i).unwrap_or("")).collect();
        if cells.iter().any(|c| is_missing(c)) {
            rows_dropped += 1;
            continue;
        }
        let mut row = Vec::with_capacity(aux_idx.len());
        for (k, cell) in cells.iter().enumerate() {
            let parsed: f64 = cell.trim().parse().map_err(|_| Error::NonNumericCell {
                row: row_no + 1,
                column: options.aux_columns[k].clone(),
                value: cell.to_string(),
            })?;
            if !parsed.is_finite() {
                return Err(Error::NonNumericCell {
                    row: row_no + 1,
                    column: options.aux_columns[k].clone(),
                    value: cell.to_string(),
                });
            }
            row.push(parsed);
        }
        aux.extend_from_slice(&row);
        if let Some(i) = id_idx {
            ids.push(record.get(i).unwrap_or("").trim().to_string());
        }
        if let (Some(out), Some(i)) = (&mut strata, stratum_idx) {
            out.push(record.get(i).unwrap_or("").trim().to_string());
        }
    }

    let n_units = if aux_idx.is_empty() {
        0
    } else {
        aux.len() / aux_idx.len()
    };
    if n_units == 0 {
        return Err(Error::EmptyPopulation);
    }
    if id_idx.is_none() {
        ids = (1..=n_units).map(|i| i.to_string()).collect();
    }
    let population = Population::from_parts(aux, n_units, aux_idx.len(), ids, strata)?;
    Ok(CsvLoad {
        population,
        rows_dropped,
    })
}

/// Synthesize a population with i.i.d. uniform `[0,1]` auxiliary variables.
/// Deterministic given the seed.
pub fn synth_uniform(n_units: usize, dims: usize, seed: u64) -> Result<Population> {
    if n_units == 0 || dims == 0 {
        return Err(Error::DegeneratePopulation);
    }
    let mut rng = seeds::rng(seed, "population.synth_uniform");
    let aux: Vec<f64> = (0..n_units * dims).map(|_| rng.gen::<f64>()).collect();
    let ids = (1..=n_units).map(|i| i.to_string()).collect();
    Population::from_parts(aux, n_units, dims, ids, None)
}

/// Result of [`standardize`]: the transformed population and which columns
/// were constant (mapped to all zero).
#[derive(Debug)]
pub struct StandardizeReport {
    pub population: Population,
    pub constant_columns: Vec<usize>,
}

/// Center each auxiliary column to mean 0 and scale to sample standard
/// deviation 1 (divisor `N - 1`). Constant columns become all-zero and are
/// reported instead of erroring.
pub fn standardize(pop: &Population) -> StandardizeReport {
    let n = pop.size();
    let p = pop.dims();
    let mut means = vec![0.0; p];
    for i in 0..n {
        for (m, v) in means.iter_mut().zip(pop.aux_row(i)) {
            *m += v;
        }
    }
    for m in &mut means {
        *m /= n as f64;
    }
    let mut vars = vec![0.0; p];
    for i in 0..n {
        for ((v, x), m) in vars.iter_mut().zip(pop.aux_row(i)).zip(&means) {
            let d = x - m;
            *v += d * d;
        }
    }
    let mut constant_columns = Vec::new();
    let mut scales = vec![0.0; p];
    for (j, v) in vars.iter().enumerate() {
        let sd = if n > 1 { (v / (n as f64 - 1.0)).sqrt() } else { 0.0 };
        if sd > 0.0 {
            scales[j] = 1.0 / sd;
        } else {
            scales[j] = 0.0;
            constant_columns.push(j);
        }
    }
    let mut aux = Vec::with_capacity(n * p);
    for i in 0..n {
        for ((x, m), s) in pop.aux_row(i).iter().zip(&means).zip(&scales) {
            aux.push((x - m) * s);
        }
    }
    let population = Population::from_parts(
        aux,
        n,
        p,
        pop.ids().to_vec(),
        pop.strata().map(|s| s.to_vec()),
    )
    .expect("standardization preserves shape");
    StandardizeReport {
        population,
        constant_columns,
    }
}

/// One stratum of a partitioned population.
#[derive(Debug)]
pub struct Stratum {
    pub label: String,
    pub population: Population,
    /// Indices of the stratum's units in the parent population.
    pub unit_indices: Vec<u32>,
}

/// Partition a population by its stratum labels, in order of first appearance.
pub fn partition_by_strata(pop: &Population) -> Result<Vec<Stratum>> {
    let labels = pop.strata().ok_or(Error::MissingStrata)?;
    let mut order: Vec<String> = Vec::new();
    for l in labels {
        if !order.iter().any(|o| o == l) {
            order.push(l.clone());
        }
    }
    order
        .into_iter()
        .map(|label| {
            let unit_indices: Vec<u32> = labels
                .iter()
                .enumerate()
                .filter(|(_, l)| **l == label)
                .map(|(i, _)| i as u32)
                .collect();
            let population = pop.restrict(&unit_indices)?;
            Ok(Stratum {
                label,
                population,
                unit_indices,
            })
        })
        .collect()
}
