//! Metric-property verification: exhaustive triangle and ultrametric scans,
//! the PSD certificate for `sqrt(1 - s)`, and the coherence index.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::corr::{psd_check, CorrelationMatrix};
use crate::dissimilarity::DissimilarityMatrix;
use crate::error::{Error, Result};
use crate::exec::Execution;

pub const DEFAULT_TRIANGLE_TOL: f64 = 1e-9;

/// A triple with `d[i][j] - (d[i][k] + d[k][j]) > tol`. For ultrametric
/// violations the margin is `d[i][j] - max(d[i][k], d[k][j])`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TriangleViolation {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub names: Option<[String; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UltrametricSummary {
    pub count: usize,
    pub worst: Option<TriangleViolation>,
}

/// Distinct variables at zero dissimilarity: the matrix alone cannot say
/// whether they are the same variable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomWarning {
    pub i: usize,
    pub j: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub symmetric: bool,
    pub nonneg_zero_diag: bool,
    pub triangle_violations: Vec<TriangleViolation>,
    pub ultrametric_violations: UltrametricSummary,
    pub is_metric: bool,
    pub is_ultrametric: bool,
    pub tolerance: f64,
    pub axiom_warnings: Vec<AxiomWarning>,
}

impl MetricReport {
    pub fn worst_margin(&self) -> Option<f64> {
        self.triangle_violations.first().map(|v| v.margin)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditOptions {
    pub tol: f64,
    /// Stop each scan at its first violation (in `(i, j, k)` order).
    pub fail_fast: bool,
    pub execution: Execution,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TRIANGLE_TOL,
            fail_fast: false,
            execution: Execution::default(),
        }
    }
}

impl AuditOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

pub fn audit(d: &DissimilarityMatrix, tol: f64) -> MetricReport {
    audit_with(d, &AuditOptions::with_tol(tol))
}

pub fn audit_with(d: &DissimilarityMatrix, opts: &AuditOptions) -> MetricReport {
    audit_matrix(d.entries(), d.names(), opts)
}

#[derive(Default)]
struct RowScan {
    triangle: Vec<TriangleViolation>,
    ultra_count: usize,
    ultra_worst: Option<TriangleViolation>,
}

fn better(a: &TriangleViolation, b: &TriangleViolation) -> bool {
    a.margin > b.margin || (a.margin == b.margin && (a.i, a.j, a.k) < (b.i, b.j, b.k))
}

/// Scans every unordered pair `{i, j}` (`i < j`) against every other `k`.
/// Works on any square matrix, so the axiom flags are meaningful for raw
/// user input. Rows are scanned in parallel under the default execution
/// and merged in a fixed order.
pub fn audit_matrix(
    d: &DMatrix<f64>,
    names: Option<&[String]>,
    opts: &AuditOptions,
) -> MetricReport {
    let n = d.nrows();
    let tol = opts.tol;

    let symmetric = (0..n).all(|i| (0..i).all(|j| (d[(i, j)] - d[(j, i)]).abs() <= tol));
    let nonneg_zero_diag =
        (0..n).all(|i| d[(i, i)].abs() <= tol && (0..n).all(|j| d[(i, j)] >= -tol));

    let triangle_at = |i: usize, j: usize, k: usize| -> Option<f64> {
        let margin = d[(i, j)] - (d[(i, k)] + d[(k, j)]);
        (margin > tol || margin.is_nan()).then_some(margin)
    };
    let ultra_at = |i: usize, j: usize, k: usize| -> Option<f64> {
        let margin = d[(i, j)] - d[(i, k)].max(d[(k, j)]);
        (margin > tol || margin.is_nan()).then_some(margin)
    };
    let violation = |i, j, k, margin| TriangleViolation {
        i,
        j,
        k,
        margin,
        names: names.map(|nm| [nm[i].clone(), nm[j].clone(), nm[k].clone()]),
    };
    let triples = move |i: usize| {
        ((i + 1)..n).flat_map(move |j| {
            (0..n)
                .filter(move |&k| k != i && k != j)
                .map(move |k| (j, k))
        })
    };

    let mut triangle_violations;
    let mut ultrametric_violations = UltrametricSummary {
        count: 0,
        worst: None,
    };

    if opts.fail_fast {
        let first_tri = opts.execution.find_first(n, |i| {
            triples(i).find_map(|(j, k)| triangle_at(i, j, k).map(|m| violation(i, j, k, m)))
        });
        let first_ultra = opts.execution.find_first(n, |i| {
            triples(i).find_map(|(j, k)| ultra_at(i, j, k).map(|m| violation(i, j, k, m)))
        });
        triangle_violations = first_tri.into_iter().collect();
        if let Some(v) = first_ultra {
            ultrametric_violations = UltrametricSummary {
                count: 1,
                worst: Some(v),
            };
        }
    } else {
        let rows = opts.execution.map(n, |i| {
            let mut scan = RowScan::default();
            for (j, k) in triples(i) {
                if let Some(m) = triangle_at(i, j, k) {
                    scan.triangle.push(violation(i, j, k, m));
                }
                if let Some(m) = ultra_at(i, j, k) {
                    scan.ultra_count += 1;
                    let v = violation(i, j, k, m);
                    if scan.ultra_worst.as_ref().is_none_or(|w| better(&v, w)) {
                        scan.ultra_worst = Some(v);
                    }
                }
            }
            scan
        });
        triangle_violations = Vec::new();
        for scan in rows {
            triangle_violations.extend(scan.triangle);
            ultrametric_violations.count += scan.ultra_count;
            if let Some(v) = scan.ultra_worst {
                if ultrametric_violations
                    .worst
                    .as_ref()
                    .is_none_or(|w| better(&v, w))
                {
                    ultrametric_violations.worst = Some(v);
                }
            }
        }
    }
    triangle_violations.sort_by(|a, b| {
        b.margin
            .total_cmp(&a.margin)
            .then((a.i, a.j, a.k).cmp(&(b.i, b.j, b.k)))
    });

    let axiom_warnings = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .filter(|&(i, j)| d[(i, j)].abs() <= tol)
        .map(|(i, j)| AxiomWarning {
            i,
            j,
            message: "distinct variables at zero dissimilarity".to_string(),
        })
        .collect();

    let is_metric = symmetric && nonneg_zero_diag && triangle_violations.is_empty();
    let is_ultrametric = symmetric && nonneg_zero_diag && ultrametric_violations.count == 0;

    MetricReport {
        symmetric,
        nonneg_zero_diag,
        triangle_violations,
        ultrametric_violations,
        is_metric,
        is_ultrametric,
        tolerance: tol,
        axiom_warnings,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateVerdict {
    CertifiedMetric,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GowerCertificate {
    pub verdict: CertificateVerdict,
    pub min_eigenvalue: f64,
}

/// A PSD normalized similarity matrix makes `sqrt(1 - s)` a metric. The
/// implication runs one way only, so a non-PSD matrix is `Inconclusive`.
pub fn certify_sqrt_metric(s: &CorrelationMatrix, tol_rel: f64) -> GowerCertificate {
    let v = psd_check(s, tol_rel);
    GowerCertificate {
        verdict: if v.is_psd {
            CertificateVerdict::CertifiedMetric
        } else {
            CertificateVerdict::Inconclusive
        },
        min_eigenvalue: v.min_eigenvalue,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coherence {
    /// `max d[i][j] / (d[i][k] + d[k][j])`; `+inf` when a positive side
    /// faces a zero path. At most 1 exactly when every triangle holds.
    #[serde(serialize_with = "serialize_ratio")]
    pub value: f64,
    /// Achieving `(i, j, k)`; `None` if every triple was `0 / 0`.
    pub triple: Option<[usize; 3]>,
}

fn serialize_ratio<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str("inf")
    }
}

pub fn coherence_index(d: &DissimilarityMatrix) -> Result<Coherence> {
    coherence_index_with(d, Execution::default())
}

pub fn coherence_index_with(d: &DissimilarityMatrix, exec: Execution) -> Result<Coherence> {
    let n = d.n();
    if n < 3 {
        return Err(Error::TooFewVariables { got: n, need: 3 });
    }
    let e = d.entries();
    let rows = exec.map(n, |i| {
        let mut best: Option<(f64, [usize; 3])> = None;
        for j in (i + 1)..n {
            for k in (0..n).filter(|&k| k != i && k != j) {
                let num = e[(i, j)];
                let den = e[(i, k)] + e[(k, j)];
                let ratio = if den == 0.0 {
                    if num == 0.0 {
                        continue;
                    }
                    f64::INFINITY
                } else {
                    num / den
                };
                if best.is_none_or(|(b, _)| ratio > b) {
                    best = Some((ratio, [i, j, k]));
                }
            }
        }
        best
    });
    let best =
        rows.into_iter()
            .flatten()
            .fold(None, |acc: Option<(f64, [usize; 3])>, cur| match acc {
                Some((b, _)) if cur.0 <= b => acc,
                _ => Some(cur),
            });
    Ok(match best {
        Some((value, triple)) => Coherence {
            value,
            triple: Some(triple),
        },
        None => Coherence {
            value: 0.0,
            triple: None,
        },
    })
}
