//! Correlation estimation, correlation-matrix validation, PSD checking and
//! the entrywise (Hadamard) square.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;

/// Default relative tolerance for [`psd_check`].
pub const DEFAULT_PSD_TOL: f64 = 1e-10;

/// Observations in rows, variables in columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
    var_names: Vec<String>,
}

impl DataMatrix {
    pub fn new(values: DMatrix<f64>, var_names: Vec<String>) -> Result<Self> {
        if values.nrows() < 2 {
            return Err(Error::DimensionTooSmall(values.nrows()));
        }
        if values.ncols() < 1 {
            return Err(Error::TooFewVariables { got: 0, need: 1 });
        }
        if var_names.len() != values.ncols() {
            return Err(Error::NameCountMismatch(var_names.len(), values.ncols()));
        }
        Ok(Self { values, var_names })
    }

    /// Names default to `V1, V2, ...`.
    pub fn unnamed(values: DMatrix<f64>) -> Result<Self> {
        let names = (1..=values.ncols()).map(|i| format!("V{i}")).collect();
        Self::new(values, names)
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    pub fn n_obs(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_vars(&self) -> usize {
        self.values.ncols()
    }
}

/// Symmetric, unit-diagonal matrix of pairwise correlations with entries in
/// `[-1, 1]`. Stored canonically: `entries[(i, j)] == entries[(j, i)]`
/// bit-for-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    entries: DMatrix<f64>,
    names: Option<Vec<String>>,
}

impl CorrelationMatrix {
    pub fn identity(n: usize) -> Self {
        Self {
            entries: DMatrix::identity(n, n),
            names: None,
        }
    }

    /// Builds from the strict upper triangle, mirroring it and setting the
    /// diagonal to 1. Values are clamped to `[-1, 1]`.
    pub(crate) fn from_upper(n: usize, mut upper: impl FnMut(usize, usize) -> f64) -> Self {
        let mut entries = DMatrix::identity(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = upper(i, j).clamp(-1.0, 1.0);
                entries[(i, j)] = v;
                entries[(j, i)] = v;
            }
        }
        Self {
            entries,
            names: None,
        }
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n() {
            return Err(Error::NameCountMismatch(names.len(), self.n()));
        }
        self.names = Some(names);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    /// Rows as nested vectors, for serialization.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        rows_of(&self.entries)
    }

    /// Flips the sign of every off-diagonal entry in row/column `k`. This
    /// is the correlation matrix of the same variables with `X_k` negated.
    pub fn negate_variable(&self, k: usize) -> Self {
        let mut out = self.clone();
        for i in 0..self.n() {
            if i != k {
                out.entries[(i, k)] = -out.entries[(i, k)];
                out.entries[(k, i)] = -out.entries[(k, i)];
            }
        }
        out
    }

    /// Relabels variables: entry `(i, j)` of the result is entry
    /// `(perm[i], perm[j])` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.n();
        let entries = DMatrix::from_fn(n, n, |i, j| self.entries[(perm[i], perm[j])]);
        let names = self
            .names
            .as_ref()
            .map(|names| perm.iter().map(|&p| names[p].clone()).collect());
        Self { entries, names }
    }
}

pub(crate) fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsdVerdict {
    pub min_eigenvalue: f64,
    pub is_psd: bool,
    pub tolerance_used: f64,
}

/// Sample Pearson correlation of every pair of columns.
///
/// Both covariance and variance use the `n_obs - 1` denominator, which
/// cancels. Constant columns are rejected rather than producing NaN.
pub fn pearson_correlation(data: &DataMatrix) -> Result<CorrelationMatrix> {
    pearson_correlation_with(data, Execution::default())
}

pub fn pearson_correlation_with(data: &DataMatrix, exec: Execution) -> Result<CorrelationMatrix> {
    let n_obs = data.n_obs();
    if n_obs < 2 {
        return Err(Error::DimensionTooSmall(n_obs));
    }
    let p = data.n_vars();
    let values = data.values();

    let mut centered = values.clone();
    let mut norms = Vec::with_capacity(p);
    for j in 0..p {
        let col = values.column(j);
        if col.iter().all(|&v| v == col[0]) {
            return Err(Error::ZeroVarianceColumn(j));
        }
        let mean = col.sum() / n_obs as f64;
        let mut c = centered.column_mut(j);
        c.add_scalar_mut(-mean);
        let ss = c.norm_squared();
        if ss <= 0.0 || !ss.is_finite() {
            return Err(Error::ZeroVarianceColumn(j));
        }
        norms.push(ss.sqrt());
    }

    let rows = exec.map(p, |i| {
        ((i + 1)..p)
            .map(|j| centered.column(i).dot(&centered.column(j)) / (norms[i] * norms[j]))
            .collect::<Vec<f64>>()
    });
    let corr = CorrelationMatrix::from_upper(p, |i, j| rows[i][j - i - 1]);
    corr.with_names(data.var_names().to_vec())
}

/// Accepts a user-supplied matrix as a correlation matrix if it is
/// symmetric, unit-diagonal and bounded by 1 up to `tol`, and returns the
/// canonical form (upper/lower averaged, clamped, diagonal exactly 1).
pub fn validate_correlation(m: &DMatrix<f64>, tol: f64) -> Result<CorrelationMatrix> {
    let (rows, cols) = m.shape();
    if rows != cols {
        return Err(Error::NotSquare { rows, cols });
    }
    let n = rows;
    let mut max_delta = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let delta = (m[(i, j)] - m[(j, i)]).abs();
            if delta.is_nan() {
                return Err(Error::EntryOutOfRange(i, j));
            }
            max_delta = max_delta.max(delta);
        }
    }
    if max_delta > tol {
        return Err(Error::AsymmetryExceeded(max_delta));
    }
    for i in 0..n {
        if !((m[(i, i)] - 1.0).abs() <= tol) {
            return Err(Error::DiagonalNotUnit(i));
        }
    }
    for i in 0..n {
        for j in 0..n {
            if !(m[(i, j)].abs() <= 1.0 + tol) {
                return Err(Error::EntryOutOfRange(i, j));
            }
        }
    }
    Ok(CorrelationMatrix::from_upper(n, |i, j| {
        0.5 * (m[(i, j)] + m[(j, i)])
    }))
}

/// Eigenvalues of the correlation matrix, ascending.
pub fn eigenvalues(c: &CorrelationMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(c.entries().clone())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Smallest-eigenvalue PSD test with a tolerance relative to the spectral
/// scale: `tolerance_used = tol_rel * max(1, |lambda|_max)`.
pub fn psd_check(c: &CorrelationMatrix, tol_rel: f64) -> PsdVerdict {
    let ev = eigenvalues(c);
    let min_eigenvalue = ev.first().copied().unwrap_or(0.0);
    let scale = ev.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    let tolerance_used = tol_rel * scale;
    PsdVerdict {
        min_eigenvalue,
        is_psd: min_eigenvalue >= -tolerance_used,
        tolerance_used,
    }
}

/// Entrywise square. If `C` is the correlation matrix of `X` and `Y` is an
/// independent copy, this is the correlation matrix of `Z_k = X_k Y_k`.
pub fn hadamard_square(c: &CorrelationMatrix) -> CorrelationMatrix {
    let mut out = CorrelationMatrix {
        entries: c.entries().component_mul(c.entries()),
        names: c.names.clone(),
    };
    out.entries.fill_diagonal(1.0);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn r_pi4() -> DMatrix<f64> {
        let c = std::f64::consts::FRAC_1_SQRT_2;
        DMatrix::from_row_slice(3, 3, &[1.0, 0.25, c, 0.25, 1.0, c, c, c, 1.0])
    }

    #[test]
    fn perfect_correlation_and_anticorrelation() {
        let x = [1.0, 2.5, -0.3, 4.0, 7.25];
        let same = DMatrix::from_fn(5, 2, |i, _| x[i]);
        let c = pearson_correlation(&DataMatrix::unnamed(same).unwrap()).unwrap();
        assert_eq!(c.get(0, 1), 1.0);

        let flip = DMatrix::from_fn(5, 2, |i, j| if j == 0 { x[i] } else { -x[i] });
        let c = pearson_correlation(&DataMatrix::unnamed(flip).unwrap()).unwrap();
        assert_eq!(c.get(0, 1), -1.0);
        assert_eq!(c.get(1, 1), 1.0);
    }

    #[test]
    fn constant_column_is_an_error() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 0.1, 2.0, 0.1, 3.0, 0.1]);
        let err = pearson_correlation(&DataMatrix::unnamed(m).unwrap()).unwrap_err();
        assert_eq!(err, Error::ZeroVarianceColumn(1));
    }

    #[test]
    fn single_observation_is_rejected() {
        let m = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        assert_eq!(
            DataMatrix::unnamed(m).unwrap_err(),
            Error::DimensionTooSmall(1)
        );
    }

    #[test]
    fn validate_accepts_identity_unchanged() {
        let id = DMatrix::<f64>::identity(3, 3);
        let c = validate_correlation(&id, 1e-9).unwrap();
        assert_eq!(c.entries(), &id);
    }

    #[test]
    fn validate_clamps_slight_overshoot() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0000001, 1.0000001, 1.0]);
        let c = validate_correlation(&m, 1e-6).unwrap();
        assert_eq!(c.get(0, 1), 1.0);
        assert_eq!(c.get(1, 0), 1.0);
    }

    #[test]
    fn validate_error_paths() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.5, 1.0]);
        match validate_correlation(&m, 1e-6) {
            Err(Error::AsymmetryExceeded(d)) => assert_abs_diff_eq!(d, 0.2, epsilon = 1e-12),
            other => panic!("unexpected {other:?}"),
        }
        let m = DMatrix::from_row_slice(2, 3, &[1.0; 6]);
        assert!(matches!(
            validate_correlation(&m, 1e-6),
            Err(Error::NotSquare { rows: 2, cols: 3 })
        ));
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.9]);
        assert_eq!(
            validate_correlation(&m, 1e-6),
            Err(Error::DiagonalNotUnit(1))
        );
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.2, 1.2, 1.0]);
        assert_eq!(
            validate_correlation(&m, 1e-6),
            Err(Error::EntryOutOfRange(0, 1))
        );
    }

    #[test]
    fn psd_identity() {
        let v = psd_check(&CorrelationMatrix::identity(5), DEFAULT_PSD_TOL);
        assert_abs_diff_eq!(v.min_eigenvalue, 1.0, epsilon = 1e-14);
        assert!(v.is_psd);
        assert_eq!(v.tolerance_used, DEFAULT_PSD_TOL);
    }

    #[test]
    fn psd_counterexample_matrix_spectrum() {
        // characteristic polynomial of R(pi/4) factors as
        // (lambda - 3/4)(lambda^2 - 9/4 lambda + 1/4), roots (9/4 +- sqrt(65/16)) / 2
        let c = validate_correlation(&r_pi4(), 1e-12).unwrap();
        let ev = eigenvalues(&c);
        let disc = (81.0_f64 / 16.0 - 1.0).sqrt();
        let expected = [(2.25 - disc) / 2.0, 0.75, (2.25 + disc) / 2.0];
        for (a, b) in ev.iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        assert!(psd_check(&c, DEFAULT_PSD_TOL).is_psd);
    }

    #[test]
    fn psd_rejects_inconsistent_signs() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.9, -0.9, 0.9, 1.0, 0.9, -0.9, 0.9, 1.0]);
        let c = validate_correlation(&m, 1e-12).unwrap();
        let v = psd_check(&c, DEFAULT_PSD_TOL);
        assert!(!v.is_psd);
        // eigenvector (1, -1, 1) gives 1 - 0.9 - 0.9 = -0.8
        assert_abs_diff_eq!(v.min_eigenvalue, -0.8, epsilon = 1e-12);
    }

    #[test]
    fn hadamard_square_examples() {
        let id = CorrelationMatrix::identity(4);
        assert_eq!(hadamard_square(&id), id);

        let c = validate_correlation(&r_pi4(), 1e-12).unwrap();
        let sq = hadamard_square(&c);
        let expected = [[1.0, 0.0625, 0.5], [0.0625, 1.0, 0.5], [0.5, 0.5, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(sq.get(i, j), expected[i][j], epsilon = 1e-15);
            }
        }

        let m = DMatrix::from_row_slice(2, 2, &[1.0, -0.6, -0.6, 1.0]);
        let sq = hadamard_square(&validate_correlation(&m, 0.0).unwrap());
        assert_abs_diff_eq!(sq.get(0, 1), 0.36, epsilon = 1e-15);
    }

    #[test]
    fn negate_and_permute() {
        let c = validate_correlation(&r_pi4(), 1e-12).unwrap();
        let neg = c.negate_variable(2);
        assert_eq!(neg.get(0, 2), -c.get(0, 2));
        assert_eq!(neg.get(0, 1), c.get(0, 1));
        let p = c.permuted(&[2, 0, 1]);
        assert_eq!(p.get(0, 1), c.get(2, 0));
        assert_eq!(p.get(1, 2), c.get(0, 1));
    }
}
