//! Column-major feature matrix keyed by cell id.
//!
//! Columns carry dotted feature names; rows carry the cell they describe.
//! Missing values are `NaN` and stay representable until a consumer either
//! imputes them ([`FeatureMatrix::fill_missing`]) or rejects them (model
//! training). Column-major layout matches the access pattern of split search
//! and per-column screening.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geo::CellId;
use crate::stats;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    row_ids: Vec<CellId>,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    /// Build from parallel column vectors. Every column must match the row
    /// count and names must be non-empty and unique.
    pub fn new(row_ids: Vec<CellId>, names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::InvalidInput(alloc::format!(
                "{} column names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        for (name, col) in names.iter().zip(&columns) {
            if name.is_empty() {
                return Err(Error::Naming("empty feature name".into()));
            }
            if col.len() != row_ids.len() {
                return Err(Error::InvalidInput(alloc::format!(
                    "column {name} has {} values for {} rows",
                    col.len(),
                    row_ids.len()
                )));
            }
        }
        let mut sorted = names.clone();
        sorted.sort_unstable();
        for pair in sorted.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::Naming(alloc::format!(
                    "duplicate feature name {}",
                    pair[0]
                )));
            }
        }
        Ok(FeatureMatrix {
            row_ids,
            names,
            columns,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn row_ids(&self) -> &[CellId] {
        &self.row_ids
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.columns[col][row]
    }

    /// Gather one row across all columns.
    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Indices of columns whose name starts with `prefix`, in column order.
    pub fn columns_with_prefix(&self, prefix: &str) -> Vec<usize> {
        self.names
            .iter()
            .enumerate()
            .filter(|(_, n)| n.starts_with(prefix))
            .map(|(j, _)| j)
            .collect()
    }

    /// New matrix keeping only the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<FeatureMatrix> {
        let mut names = Vec::with_capacity(cols.len());
        let mut columns = Vec::with_capacity(cols.len());
        for &j in cols {
            if j >= self.n_cols() {
                return Err(Error::InvalidInput(alloc::format!(
                    "column index {j} out of range for {} columns",
                    self.n_cols()
                )));
            }
            names.push(self.names[j].clone());
            columns.push(self.columns[j].clone());
        }
        FeatureMatrix::new(self.row_ids.clone(), names, columns)
    }

    /// New matrix keeping only the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<FeatureMatrix> {
        for &i in rows {
            if i >= self.n_rows() {
                return Err(Error::InvalidInput(alloc::format!(
                    "row index {i} out of range for {} rows",
                    self.n_rows()
                )));
            }
        }
        let row_ids = rows.iter().map(|&i| self.row_ids[i]).collect();
        let columns = self
            .columns
            .iter()
            .map(|c| rows.iter().map(|&i| c[i]).collect())
            .collect();
        FeatureMatrix::new(row_ids, self.names.clone(), columns)
    }

    /// Join two matrices column-wise. Row ids must agree exactly.
    pub fn hstack(&self, other: &FeatureMatrix) -> Result<FeatureMatrix> {
        if self.row_ids != other.row_ids {
            return Err(Error::InvalidInput(
                "cannot join matrices with different row ids".into(),
            ));
        }
        let names = self
            .names
            .iter()
            .chain(other.names.iter())
            .cloned()
            .collect();
        let columns = self
            .columns
            .iter()
            .chain(other.columns.iter())
            .cloned()
            .collect();
        FeatureMatrix::new(self.row_ids.clone(), names, columns)
    }

    /// Number of missing (`NaN`) entries per column.
    pub fn missing_per_column(&self) -> Vec<usize> {
        self.columns
            .iter()
            .map(|c| c.iter().filter(|v| v.is_nan()).count())
            .collect()
    }

    /// Median of each column's non-missing values; `None` for an all-missing
    /// column.
    pub fn column_medians(&self) -> Vec<Option<f64>> {
        self.columns
            .iter()
            .map(|c| stats::median(c).ok())
            .collect()
    }

    /// Replace missing entries column-by-column with the given fill values.
    ///
    /// A column with missing entries but no fill value (`None`) is an error:
    /// it would silently survive imputation.
    pub fn fill_missing(&mut self, fills: &[Option<f64>]) -> Result<()> {
        if fills.len() != self.n_cols() {
            return Err(Error::InvalidInput(alloc::format!(
                "{} fill values for {} columns",
                fills.len(),
                self.n_cols()
            )));
        }
        for (j, col) in self.columns.iter_mut().enumerate() {
            let has_missing = col.iter().any(|v| v.is_nan());
            if !has_missing {
                continue;
            }
            let fill = fills[j].ok_or_else(|| {
                Error::InsufficientData(alloc::format!(
                    "column {} is entirely missing and cannot be imputed",
                    self.names[j]
                ))
            })?;
            for v in col.iter_mut() {
                if v.is_nan() {
                    *v = fill;
                }
            }
        }
        Ok(())
    }

    /// True when no entry is missing.
    pub fn is_complete(&self) -> bool {
        self.columns
            .iter()
            .all(|c| c.iter().all(|v| !v.is_nan()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn names(ns: &[&str]) -> Vec<String> {
        ns.iter().map(|s| s.to_string()).collect()
    }

    fn small() -> FeatureMatrix {
        FeatureMatrix::new(
            vec![CellId(1), CellId(2), CellId(3)],
            names(&["a.x", "a.y", "b.z"]),
            vec![
                vec![1.0, 2.0, 3.0],
                vec![4.0, f64::NAN, 6.0],
                vec![7.0, 8.0, 9.0],
            ],
        )
        .unwrap()
    }

    #[test]
    fn shape_mismatches_are_rejected() {
        assert!(FeatureMatrix::new(
            vec![CellId(1)],
            names(&["a"]),
            vec![vec![1.0, 2.0]]
        )
        .is_err());
        assert!(FeatureMatrix::new(vec![CellId(1)], names(&["a", "b"]), vec![vec![1.0]]).is_err());
        assert!(matches!(
            FeatureMatrix::new(
                vec![CellId(1)],
                names(&["a", "a"]),
                vec![vec![1.0], vec![2.0]]
            ),
            Err(Error::Naming(_))
        ));
    }

    #[test]
    fn accessors_agree_with_layout() {
        let m = small();
        assert_eq!(m.n_rows(), 3);
        assert_eq!(m.n_cols(), 3);
        assert_eq!(m.value(2, 0), 3.0);
        assert_eq!(m.row(0), vec![1.0, 4.0, 7.0]);
        assert_eq!(m.column_index("b.z"), Some(2));
        assert_eq!(m.column_index("nope"), None);
        assert_eq!(m.columns_with_prefix("a."), vec![0, 1]);
    }

    #[test]
    fn select_columns_keeps_order() {
        let m = small().select_columns(&[2, 0]).unwrap();
        assert_eq!(m.names(), &["b.z".to_string(), "a.x".to_string()]);
        assert_eq!(m.column(0), &[7.0, 8.0, 9.0]);
        assert!(small().select_columns(&[5]).is_err());
    }

    #[test]
    fn select_rows_keeps_ids() {
        let m = small().select_rows(&[2, 0]).unwrap();
        assert_eq!(m.row_ids(), &[CellId(3), CellId(1)]);
        assert_eq!(m.column(0), &[3.0, 1.0]);
        assert!(small().select_rows(&[9]).is_err());
    }

    #[test]
    fn hstack_requires_matching_rows() {
        let left = small();
        let right = FeatureMatrix::new(
            vec![CellId(1), CellId(2), CellId(3)],
            names(&["c.w"]),
            vec![vec![0.1, 0.2, 0.3]],
        )
        .unwrap();
        let joined = left.hstack(&right).unwrap();
        assert_eq!(joined.n_cols(), 4);
        assert_eq!(joined.column(3), &[0.1, 0.2, 0.3]);

        let mismatched = FeatureMatrix::new(vec![CellId(9)], names(&["c.w"]), vec![vec![0.1]]);
        assert!(left.hstack(&mismatched.unwrap()).is_err());
    }

    #[test]
    fn missing_accounting_and_imputation() {
        let mut m = small();
        assert_eq!(m.missing_per_column(), vec![0, 1, 0]);
        assert!(!m.is_complete());
        let medians = m.column_medians();
        assert_eq!(medians[1], Some(5.0));
        m.fill_missing(&medians).unwrap();
        assert!(m.is_complete());
        assert_eq!(m.value(1, 1), 5.0);
    }

    #[test]
    fn all_missing_column_cannot_be_imputed() {
        let mut m = FeatureMatrix::new(
            vec![CellId(1), CellId(2)],
            names(&["a"]),
            vec![vec![f64::NAN, f64::NAN]],
        )
        .unwrap();
        let medians = m.column_medians();
        assert_eq!(medians, vec![None]);
        assert!(matches!(
            m.fill_missing(&medians),
            Err(Error::InsufficientData(_))
        ));
    }
}
