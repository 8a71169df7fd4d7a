//! Tabulated fields on regular (tensor-product) grids, read from CSV.
//!
//! Rows may come in any order; every grid point must appear exactly once.
//! Evaluation is multilinear and clamps to the table range.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GridTable {
    axes: Vec<Vec<f64>>,
    /// Row-major, last axis fastest.
    values: Vec<f64>,
}

impl GridTable {
    pub fn new(axes: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::Table("table needs at least one axis".into()));
        }
        for (i, axis) in axes.iter().enumerate() {
            if axis.is_empty() {
                return Err(Error::Table(format!("axis {i} is empty")));
            }
            if axis.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::Table(format!("axis {i} is not strictly increasing")));
            }
        }
        let size: usize = axes.iter().map(Vec::len).product();
        if values.len() != size {
            return Err(Error::Table(format!(
                "{} values for a grid of {size} points",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Table("table holds non-finite values".into()));
        }
        Ok(Self { axes, values })
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        debug_assert_eq!(point.len(), self.axes.len());
        let dims = self.axes.len();
        // (lower index, weight of upper neighbour) per axis
        let mut cells = Vec::with_capacity(dims);
        for (axis, &p) in self.axes.iter().zip(point) {
            cells.push(locate(axis, p));
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << dims) {
            let mut weight = 1.0;
            let mut offset = 0;
            for (d, &(lo, frac)) in cells.iter().enumerate() {
                let upper = corner >> d & 1 == 1;
                let (idx, w) = if upper {
                    (lo + 1, frac)
                } else {
                    (lo, 1.0 - frac)
                };
                if w == 0.0 {
                    weight = 0.0;
                    break;
                }
                weight *= w;
                offset = offset * self.axes[d].len() + idx.min(self.axes[d].len() - 1);
            }
            if weight != 0.0 {
                acc += weight * self.values[offset];
            }
        }
        acc
    }

    /// Reads `value_cols` over the grid spanned by `coord_cols`. Returns one
    /// table per value column, all sharing the same axes.
    pub fn read_csv<R: Read>(
        reader: R,
        coord_cols: &[&str],
        value_cols: &[&str],
    ) -> Result<Vec<GridTable>> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let find = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Table(format!("missing column `{name}`")))
        };
        let coord_idx = coord_cols
            .iter()
            .map(|c| find(c))
            .collect::<Result<Vec<_>>>()?;
        let value_idx = value_cols
            .iter()
            .map(|c| find(c))
            .collect::<Result<Vec<_>>>()?;

        let mut rows: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            let parse = |i: usize| -> Result<f64> {
                record
                    .get(i)
                    .unwrap_or("")
                    .parse::<f64>()
                    .map_err(|e| Error::Table(format!("row {}: {e}", line + 2)))
            };
            let coords = coord_idx
                .iter()
                .map(|&i| parse(i))
                .collect::<Result<Vec<_>>>()?;
            let vals = value_idx
                .iter()
                .map(|&i| parse(i))
                .collect::<Result<Vec<_>>>()?;
            rows.push((coords, vals));
        }
        if rows.is_empty() {
            return Err(Error::Table("table has no rows".into()));
        }

        let mut axes: Vec<Vec<f64>> = vec![Vec::new(); coord_cols.len()];
        for (coords, _) in &rows {
            for (axis, c) in axes.iter_mut().zip(coords) {
                axis.push(*c);
            }
        }
        for axis in &mut axes {
            axis.sort_by(f64::total_cmp);
            axis.dedup();
        }
        let lookup: Vec<HashMap<u64, usize>> = axes
            .iter()
            .map(|a| {
                a.iter()
                    .enumerate()
                    .map(|(i, v)| (v.to_bits(), i))
                    .collect()
            })
            .collect();

        let size: usize = axes.iter().map(Vec::len).product();
        if rows.len() != size {
            return Err(Error::Table(format!(
                "{} rows do not fill a regular grid of {size} points",
                rows.len()
            )));
        }
        let mut filled = vec![false; size];
        let mut values = vec![vec![0.0; size]; value_cols.len()];
        for (coords, vals) in rows {
            let mut offset = 0;
            for (d, c) in coords.iter().enumerate() {
                offset = offset * axes[d].len() + lookup[d][&c.to_bits()];
            }
            if std::mem::replace(&mut filled[offset], true) {
                return Err(Error::Table(format!("duplicate grid point {coords:?}")));
            }
            for (col, v) in values.iter_mut().zip(vals) {
                col[offset] = v;
            }
        }
        values
            .into_iter()
            .map(|v| GridTable::new(axes.clone(), v))
            .collect()
    }

    pub fn read_csv_path(
        path: impl AsRef<Path>,
        coord_cols: &[&str],
        value_cols: &[&str],
    ) -> Result<Vec<GridTable>> {
        let file = std::fs::File::open(path.as_ref())
            .map_err(|e| Error::Table(format!("cannot open {}: {e}", path.as_ref().display())))?;
        Self::read_csv(file, coord_cols, value_cols)
    }
}

fn locate(axis: &[f64], p: f64) -> (usize, f64) {
    let n = axis.len();
    if n == 1 || p <= axis[0] {
        return (0, 0.0);
    }
    if p >= axis[n - 1] {
        return (n - 2, 1.0);
    }
    let hi = axis.partition_point(|&a| a <= p);
    let lo = hi - 1;
    (lo, (p - axis[lo]) / (axis[hi] - axis[lo]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bilinear_reproduces_linear_functions() {
        let csv = "x,t,v\n0,0,0\n1,0,1\n0,1,2\n1,1,3\n0,2,4\n1,2,5\n";
        let t = &GridTable::read_csv(csv.as_bytes(), &["x", "t"], &["v"]).unwrap()[0];
        // v = x + 2t
        assert!((t.eval(&[0.25, 1.5]) - 3.25).abs() < 1e-14);
        // clamped
        assert!((t.eval(&[2.0, -1.0]) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rows_in_any_order() {
        let csv = "t,x,v\n1,1,3\n0,0,0\n1,0,2\n0,1,1\n";
        let t = &GridTable::read_csv(csv.as_bytes(), &["x", "t"], &["v"]).unwrap()[0];
        assert!((t.eval(&[0.5, 0.5]) - 1.5).abs() < 1e-14);
    }

    #[test]
    fn rejects_ragged_and_duplicate_grids() {
        let ragged = "x,t,v\n0,0,0\n1,0,1\n0,1,2\n";
        assert!(GridTable::read_csv(ragged.as_bytes(), &["x", "t"], &["v"]).is_err());
        let dup = "x,t,v\n0,0,0\n0,0,1\n0,1,2\n1,1,2\n";
        assert!(GridTable::read_csv(dup.as_bytes(), &["x", "t"], &["v"]).is_err());
        let missing = "x,v\n0,0\n";
        assert!(GridTable::read_csv(missing.as_bytes(), &["x", "t"], &["v"]).is_err());
    }

    #[test]
    fn one_dimensional_table() {
        let csv = "t,tau\n0,0\n0.5,0\n1,0.5\n";
        let t = &GridTable::read_csv(csv.as_bytes(), &["t"], &["tau"]).unwrap()[0];
        assert!((t.eval(&[0.75]) - 0.25).abs() < 1e-14);
    }
}
