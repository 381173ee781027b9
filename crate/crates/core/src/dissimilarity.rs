//! Correlation-based dissimilarity measures, scalar transforms of
//! dissimilarities, and the curvature test that predicts whether a
//! transform preserves the metric property.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::corr::{rows_of, CorrelationMatrix};
use crate::error::{Error, Result};

/// Slack for the finite-difference monotonicity and curvature tests.
pub const CURVATURE_SLACK: f64 = 1e-12;
/// Minimum number of grid points for sampled transforms and analysis grids.
pub const MIN_GRID_POINTS: usize = 16;
const ORIGIN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureKind {
    /// `1 - rho`
    Pearson,
    /// `1 - |rho|`
    AbsPearson,
    /// `sqrt(1 - rho)`
    SqrtPearson,
    /// `sqrt(1 - rho^2)`
    PSquared,
}

impl MeasureKind {
    pub const ALL: [MeasureKind; 4] = [
        MeasureKind::Pearson,
        MeasureKind::AbsPearson,
        MeasureKind::SqrtPearson,
        MeasureKind::PSquared,
    ];

    pub fn dissimilarity(self, rho: f64) -> f64 {
        let d = match self {
            MeasureKind::Pearson => 1.0 - rho,
            MeasureKind::AbsPearson => 1.0 - rho.abs(),
            MeasureKind::SqrtPearson => (1.0 - rho).max(0.0).sqrt(),
            MeasureKind::PSquared => (1.0 - rho * rho).max(0.0).sqrt(),
        };
        d.max(0.0)
    }

    pub fn name(self) -> &'static str {
        match self {
            MeasureKind::Pearson => "pearson",
            MeasureKind::AbsPearson => "abspearson",
            MeasureKind::SqrtPearson => "sqrtpearson",
            MeasureKind::PSquared => "psquared",
        }
    }
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MeasureKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        MeasureKind::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                format!(
                    "unknown measure `{s}` (expected pearson, abspearson, sqrtpearson or psquared)"
                )
            })
    }
}

/// Symmetric, zero-diagonal, non-negative matrix of pairwise
/// dissimilarities, tagged with a description of how it was produced.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMatrix {
    entries: DMatrix<f64>,
    provenance: String,
    names: Option<Vec<String>>,
}

impl DissimilarityMatrix {
    /// Checks the invariants exactly: bitwise symmetry, zero diagonal and
    /// non-negative entries.
    pub fn new(entries: DMatrix<f64>, provenance: impl Into<String>) -> Result<Self> {
        let (rows, cols) = entries.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        for i in 0..rows {
            if entries[(i, i)] != 0.0 {
                return Err(Error::DiagonalNotZero(i));
            }
            for j in 0..rows {
                let v = entries[(i, j)];
                if v != entries[(j, i)] {
                    return Err(Error::AsymmetryExceeded((v - entries[(j, i)]).abs()));
                }
                if !(v >= 0.0) {
                    return Err(Error::NegativeEntry(i, j));
                }
            }
        }
        Ok(Self {
            entries,
            provenance: provenance.into(),
            names: None,
        })
    }

    fn from_upper(
        n: usize,
        provenance: String,
        names: Option<Vec<String>>,
        mut upper: impl FnMut(usize, usize) -> f64,
    ) -> Self {
        let mut entries = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = upper(i, j);
                entries[(i, j)] = v;
                entries[(j, i)] = v;
            }
        }
        Self {
            entries,
            provenance,
            names,
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

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        rows_of(&self.entries)
    }

    /// Relabels variables: entry `(i, j)` of the result is entry
    /// `(perm[i], perm[j])` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.n();
        Self {
            entries: DMatrix::from_fn(n, n, |i, j| self.entries[(perm[i], perm[j])]),
            provenance: self.provenance.clone(),
            names: self
                .names
                .as_ref()
                .map(|names| perm.iter().map(|&p| names[p].clone()).collect()),
        }
    }
}

pub fn apply_measure(c: &CorrelationMatrix, kind: MeasureKind) -> DissimilarityMatrix {
    DissimilarityMatrix::from_upper(
        c.n(),
        kind.name().to_string(),
        c.names().map(<[String]>::to_vec),
        |i, j| kind.dissimilarity(c.get(i, j)),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Builtin {
    /// `x^2`
    Square,
    /// `sqrt(x)`
    Sqrt,
    /// `x^(1/4)`: applied to Pearson dissimilarity this yields
    /// `(1 - rho)^(1/4)`, the square root of sqrt-Pearson.
    QuarterRootComposite,
    /// `1 - sqrt(1 - x^2)` on `[0, 1]`: maps `sqrt(1 - rho^2)` to `1 - |rho|`.
    CircleConvex,
}

impl Builtin {
    pub const ALL: [Builtin; 4] = [
        Builtin::Square,
        Builtin::Sqrt,
        Builtin::QuarterRootComposite,
        Builtin::CircleConvex,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Square => "square",
            Builtin::Sqrt => "sqrt",
            Builtin::QuarterRootComposite => "quarter_root_composite",
            Builtin::CircleConvex => "circle_convex",
        }
    }

    /// Upper end of the domain; the lower end is always 0.
    pub fn domain_max(self) -> f64 {
        match self {
            Builtin::CircleConvex => 1.0,
            _ => f64::INFINITY,
        }
    }

    fn eval(self, x: f64) -> f64 {
        match self {
            Builtin::Square => x * x,
            Builtin::Sqrt => x.sqrt(),
            Builtin::QuarterRootComposite => x.sqrt().sqrt(),
            Builtin::CircleConvex => 1.0 - ((1.0 - x) * (1.0 + x)).sqrt(),
        }
    }
}

impl FromStr for Builtin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Builtin::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::UnknownTransform(s.to_string()))
    }
}

/// A scalar function on `[0, inf)`, either built in or given by samples.
#[derive(Debug, Clone, PartialEq)]
pub enum TransformSpec {
    Builtin(Builtin),
    Sampled { grid: Vec<f64>, values: Vec<f64> },
}

impl TransformSpec {
    /// Piecewise-linear transform through `(grid[k], values[k])`.
    pub fn sampled(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() < MIN_GRID_POINTS {
            return Err(Error::GridTooSmall {
                got: grid.len(),
                need: MIN_GRID_POINTS,
            });
        }
        if values.len() != grid.len() {
            return Err(Error::InvalidTransformValue(values.len().min(grid.len())));
        }
        if !(grid[0] >= 0.0) {
            return Err(Error::GridNotAscending(0));
        }
        if let Some(k) = (1..grid.len()).find(|&k| !(grid[k] > grid[k - 1]) || !grid[k].is_finite())
        {
            return Err(Error::GridNotAscending(k));
        }
        if let Some(k) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidTransformValue(k));
        }
        Ok(TransformSpec::Sampled { grid, values })
    }

    pub fn name(&self) -> String {
        match self {
            TransformSpec::Builtin(b) => b.name().to_string(),
            TransformSpec::Sampled { grid, .. } => format!("sampled[{} points]", grid.len()),
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        match self {
            TransformSpec::Builtin(b) => (0.0, b.domain_max()),
            TransformSpec::Sampled { grid, .. } => (grid[0], grid[grid.len() - 1]),
        }
    }

    /// `None` outside the domain.
    pub fn eval(&self, x: f64) -> Option<f64> {
        let (lo, hi) = self.domain();
        if !(x >= lo && x <= hi) {
            return None;
        }
        match self {
            TransformSpec::Builtin(b) => Some(b.eval(x)),
            TransformSpec::Sampled { grid, values } => {
                let k = grid.partition_point(|&g| g <= x);
                if k == grid.len() {
                    return Some(values[k - 1]);
                }
                let (x0, x1) = (grid[k - 1], grid[k]);
                let (y0, y1) = (values[k - 1], values[k]);
                Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
            }
        }
    }
}

/// Entrywise `f(d_ij)`.
pub fn compose_transform(
    d: &DissimilarityMatrix,
    f: &TransformSpec,
) -> Result<DissimilarityMatrix> {
    let at_origin = f.eval(0.0).ok_or(Error::DomainExceeded {
        i: 0,
        j: 0,
        value: 0.0,
    })?;
    if at_origin.abs() > ORIGIN_TOL {
        return Err(Error::NotThroughOrigin(at_origin));
    }
    let n = d.n();
    let mut upper = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let value = d.get(i, j);
            let fx = f.eval(value).ok_or(Error::DomainExceeded { i, j, value })?;
            upper.push(fx.max(0.0));
        }
    }
    let mut it = upper.into_iter();
    Ok(DissimilarityMatrix::from_upper(
        n,
        format!("{}({})", f.name(), d.provenance()),
        d.names.clone(),
        |_, _| it.next().unwrap_or(0.0),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convexity {
    StrictlyConvex,
    StrictlyConcave,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prediction {
    MetricPreserving,
    NotMetricPreserving,
    NoPrediction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TransformVerdict {
    pub passes_origin: bool,
    pub monotone_increasing: bool,
    pub convexity: Convexity,
    pub prediction: Prediction,
}

/// `n` equally spaced points `x_max / n, 2 x_max / n, ..., x_max`.
pub fn uniform_grid(x_max: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|k| x_max * k as f64 / n as f64).collect()
}

/// Finite-difference shape analysis of `f` on `{0} ∪ grid`.
///
/// Curvature uses the three-point second difference
/// `[(x1 - x0)(f2 - f1) - (x2 - x1)(f1 - f0)] / ((x2 - x0) / 2)`, which
/// reduces to `f2 - 2 f1 + f0` on a uniform grid. A convex function through
/// the origin is predicted not metric preserving; a concave, strictly
/// increasing one through the origin is predicted metric preserving.
/// Anything the strict tests cannot certify (affine pieces included) gets
/// no prediction.
pub fn analyze_transform(f: &TransformSpec, grid: &[f64]) -> Result<TransformVerdict> {
    if grid.len() < MIN_GRID_POINTS {
        return Err(Error::GridTooSmall {
            got: grid.len(),
            need: MIN_GRID_POINTS,
        });
    }
    if !(grid[0] > 0.0) {
        return Err(Error::GridNotAscending(0));
    }
    if let Some(k) = (1..grid.len()).find(|&k| !(grid[k] > grid[k - 1])) {
        return Err(Error::GridNotAscending(k));
    }

    let xs: Vec<f64> = std::iter::once(0.0).chain(grid.iter().copied()).collect();
    let ys = xs
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            f.eval(x).ok_or(Error::DomainExceeded {
                i: k,
                j: k,
                value: x,
            })
        })
        .collect::<Result<Vec<f64>>>()?;

    let passes_origin = ys[0].abs() <= ORIGIN_TOL;
    let monotone_increasing = ys.windows(2).all(|w| w[1] - w[0] > CURVATURE_SLACK);

    let second: Vec<f64> = (1..xs.len() - 1)
        .map(|k| {
            let (x0, x1, x2) = (xs[k - 1], xs[k], xs[k + 1]);
            let (f0, f1, f2) = (ys[k - 1], ys[k], ys[k + 1]);
            ((x1 - x0) * (f2 - f1) - (x2 - x1) * (f1 - f0)) / (0.5 * (x2 - x0))
        })
        .collect();
    let convexity = if second.iter().all(|&s| s > CURVATURE_SLACK) {
        Convexity::StrictlyConvex
    } else if second.iter().all(|&s| s < -CURVATURE_SLACK) {
        Convexity::StrictlyConcave
    } else {
        Convexity::Indeterminate
    };

    let prediction = if passes_origin && convexity == Convexity::StrictlyConvex {
        Prediction::NotMetricPreserving
    } else if passes_origin && monotone_increasing && convexity == Convexity::StrictlyConcave {
        Prediction::MetricPreserving
    } else {
        Prediction::NoPrediction
    };

    Ok(TransformVerdict {
        passes_origin,
        monotone_increasing,
        convexity,
        prediction,
    })
}
