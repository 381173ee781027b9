//! Acceptance criteria C1-C8, one test each. Every test prints a single
//! `PASS`/`FAIL` line (run with `--nocapture` to see them) before asserting.

mod common;

use std::f64::consts::{FRAC_PI_4, FRAC_PI_6};
use std::time::{Duration, Instant};

use corrdist::cluster::{cluster, LinkageKind};
use corrdist::counterexample::sample_triple_with;
use corrdist::dissimilarity::{analyze_transform, uniform_grid, Prediction};
use corrdist::random::correlation_suite;
use corrdist::verify::{coherence_index, CertificateVerdict, DEFAULT_TRIANGLE_TOL};
use corrdist::*;

use common::{counterexample_matrix, cubic_boundary_root};

const SUITE_SIZE: usize = 200;
const SUITE_SEED: u64 = 20_240_601;

struct Criterion {
    id: &'static str,
    failures: Vec<String>,
    start: Instant,
    budget: Option<Duration>,
}

impl Criterion {
    fn new(id: &'static str, budget: Option<Duration>) -> Self {
        Self {
            id,
            failures: Vec::new(),
            start: Instant::now(),
            budget,
        }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    fn finish(mut self, summary: &str) {
        let elapsed = self.start.elapsed();
        if let Some(b) = self.budget {
            self.check(
                elapsed < b,
                format!("runtime {elapsed:?} over budget {b:?}"),
            );
        }
        let status = if self.failures.is_empty() {
            "PASS"
        } else {
            "FAIL"
        };
        println!(
            "{status} {} [{:.3}s] {summary}{}",
            self.id,
            elapsed.as_secs_f64(),
            if self.failures.is_empty() {
                String::new()
            } else {
                format!(" :: {}", self.failures.join("; "))
            }
        );
        assert!(
            self.failures.is_empty(),
            "{} failed: {:?}",
            self.id,
            self.failures
        );
    }
}

/// Closed-form Pearson margin `(1 - c^4) - 2 (1 - c)` at `c = cos(theta)`.
fn pearson_margin_exact(theta: f64) -> f64 {
    let m = counterexample_matrix(theta);
    (1.0 - m[(0, 1)]) - (1.0 - m[(0, 2)]) - (1.0 - m[(2, 1)])
}

fn open_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (1..=n)
        .map(|k| lo + (hi - lo) * k as f64 / n as f64)
        .collect()
}

#[test]
fn c1_pearson_counterexample() {
    let mut c = Criterion::new("C1", Some(Duration::from_secs(1)));
    let spec = build_counterexample(ThetaParams::new(FRAC_PI_4).unwrap()).unwrap();
    let report = audit(
        &apply_measure(&spec.correlation, MeasureKind::Pearson),
        DEFAULT_TRIANGLE_TOL,
    );
    let expected = pearson_margin_exact(FRAC_PI_4);
    let v = &report.triangle_violations;
    c.check(v.len() == 1, format!("{} violations, expected 1", v.len()));
    c.check(
        v.iter().all(|t| (t.i, t.j, t.k) == (0, 1, 2)),
        "violation not of X-Y through Z",
    );
    let margin = v.first().map_or(f64::NAN, |t| t.margin);
    c.check(
        (margin - expected).abs() <= 1e-6,
        format!("margin {margin}"),
    );

    let mut bad = Vec::new();
    for theta in open_grid(0.01, FRAC_PI_4, 1000) {
        let s = build_counterexample(ThetaParams::new(theta).unwrap()).unwrap();
        let r = audit(&apply_measure(&s.correlation, MeasureKind::Pearson), 0.0);
        if !r
            .triangle_violations
            .iter()
            .any(|t| (t.i, t.j, t.k) == (0, 1, 2))
        {
            bad.push(theta);
        }
    }
    c.check(
        bad.is_empty(),
        format!("no violation at {} grid points", bad.len()),
    );
    c.finish(&format!(
        "margin {margin:.9} (exact {expected:.9}); 1000/1000 grid points violated"
    ));
}

#[test]
fn c2_boundary_fraction() {
    let mut c = Criterion::new("C2", Some(Duration::from_secs(1)));
    let est = sweep_boundary(10_000).unwrap();
    let theta_ref = cubic_boundary_root().acos();
    c.check(
        (est.fraction_of_range - 0.634).abs() <= 0.002 && est.fraction_of_range > 0.5,
        format!("fraction {}", est.fraction_of_range),
    );
    c.check(
        (est.theta_star - theta_ref).abs() <= 1e-3,
        format!("theta* {} vs {theta_ref}", est.theta_star),
    );
    c.finish(&format!(
        "theta* {:.9} (cubic root {theta_ref:.9}), fraction {:.6}",
        est.theta_star, est.fraction_of_range
    ));
}

#[test]
fn c3_abs_pearson_counterexample() {
    let mut c = Criterion::new("C3", None);
    let mut bad = 0;
    for theta in open_grid(FRAC_PI_6, FRAC_PI_4, 1000)
        .into_iter()
        .chain([FRAC_PI_6])
    {
        let s = build_counterexample(ThetaParams::new(theta).unwrap()).unwrap();
        if audit(&apply_measure(&s.correlation, MeasureKind::AbsPearson), 0.0).is_metric {
            bad += 1;
        }
    }
    c.check(bad == 0, format!("{bad} grid points without violation"));

    let s = build_counterexample(ThetaParams::new(FRAC_PI_6).unwrap()).unwrap();
    let r = audit(
        &apply_measure(&s.correlation, MeasureKind::AbsPearson),
        DEFAULT_TRIANGLE_TOL,
    );
    let margin = r.worst_margin().unwrap_or(f64::NAN);
    let expected = pearson_margin_exact(FRAC_PI_6);
    c.check((margin - 0.16955).abs() <= 1e-6, format!("margin {margin}"));
    c.check(
        (margin - expected).abs() <= 1e-12,
        format!("margin {margin} vs {expected}"),
    );
    c.finish(&format!(
        "margin at pi/6 {margin:.9}; 1001/1001 grid points violated"
    ));
}

#[test]
fn c4_sqrt_pearson_suite() {
    let mut c = Criterion::new("C4", Some(Duration::from_secs(30)));
    let suite = correlation_suite(SUITE_SIZE, SUITE_SEED);
    let mut violating = 0;
    let mut uncertified = 0;
    let mut contradictions = 0;
    for m in &suite {
        let r = audit(
            &apply_measure(m, MeasureKind::SqrtPearson),
            DEFAULT_TRIANGLE_TOL,
        );
        let cert = certify_sqrt_metric(m, corr::DEFAULT_PSD_TOL);
        violating += usize::from(!r.triangle_violations.is_empty());
        uncertified += usize::from(cert.verdict != CertificateVerdict::CertifiedMetric);
        contradictions +=
            usize::from(cert.verdict == CertificateVerdict::CertifiedMetric && !r.is_metric);
    }
    let sizes = suite.iter().map(CorrelationMatrix::n);
    let (lo, hi) = (sizes.clone().min().unwrap(), sizes.max().unwrap());
    c.check(
        violating == 0,
        format!("{violating} matrices with violations"),
    );
    c.check(
        uncertified == 0,
        format!("{uncertified} matrices not certified"),
    );
    c.check(
        contradictions == 0,
        format!("{contradictions} certificate/audit contradictions"),
    );
    c.check(3 <= lo && hi <= 25, format!("sizes {lo}..={hi}"));
    c.finish(&format!(
        "{SUITE_SIZE} matrices, n in {lo}..={hi}: 0 violations, all certified"
    ));
}

#[test]
fn c5_psquared_suite() {
    let mut c = Criterion::new("C5", Some(Duration::from_secs(30)));
    let suite = correlation_suite(SUITE_SIZE, SUITE_SEED);
    let mut violating = 0;
    let mut not_psd = 0;
    for m in &suite {
        let r = audit(
            &apply_measure(m, MeasureKind::PSquared),
            DEFAULT_TRIANGLE_TOL,
        );
        violating += usize::from(!r.triangle_violations.is_empty());
        not_psd += usize::from(!psd_check(&hadamard_square(m), corr::DEFAULT_PSD_TOL).is_psd);
    }
    c.check(
        violating == 0,
        format!("{violating} matrices with violations"),
    );
    c.check(not_psd == 0, format!("{not_psd} Hadamard squares not PSD"));
    c.finish(&format!(
        "{SUITE_SIZE} matrices: 0 violations, all Hadamard squares PSD"
    ));
}

#[test]
fn c6_transform_suite() {
    let mut c = Criterion::new("C6", None);
    let cases = [
        (Builtin::Square, 2.0, Prediction::NotMetricPreserving),
        (Builtin::Sqrt, 2.0, Prediction::MetricPreserving),
        (Builtin::CircleConvex, 0.99, Prediction::NotMetricPreserving),
    ];
    for (b, x_max, want) in cases {
        let v = analyze_transform(&TransformSpec::Builtin(b), &uniform_grid(x_max, 1000)).unwrap();
        c.check(
            v.prediction == want,
            format!("{}: {:?}", b.name(), v.prediction),
        );
    }

    let quarter = TransformSpec::Builtin(Builtin::QuarterRootComposite);
    let mut violating = 0;
    for m in correlation_suite(SUITE_SIZE, SUITE_SEED) {
        let d = compose_transform(&apply_measure(&m, MeasureKind::Pearson), &quarter).unwrap();
        violating += usize::from(!audit(&d, DEFAULT_TRIANGLE_TOL).is_metric);
    }
    c.check(
        violating == 0,
        format!("quarter-root composite: {violating} non-metric"),
    );
    c.finish("square/sqrt/circle_convex verdicts as expected; (1-rho)^(1/4) metric on 200/200");
}

#[test]
fn c7_monte_carlo() {
    let mut c = Criterion::new("C7", Some(Duration::from_secs(5)));
    let spec = build_counterexample(ThetaParams::new(FRAC_PI_4).unwrap()).unwrap();
    let cfg = SampleConfig::new(100_000, 42).unwrap();
    let data = sample_triple(&spec, &cfg).unwrap();
    let emp = pearson_correlation(&data).unwrap();

    let mut worst = 0.0_f64;
    for i in 0..3 {
        for j in 0..3 {
            worst = worst.max((emp.get(i, j) - spec.correlation.get(i, j)).abs());
        }
    }
    c.check(worst <= 0.01, format!("correlation error {worst}"));

    let d = apply_measure(&emp, MeasureKind::Pearson);
    let margin = d.get(0, 1) - (d.get(0, 2) + d.get(2, 1));
    let expected = pearson_margin_exact(FRAC_PI_4);
    c.check(
        (margin - expected).abs() <= 0.03,
        format!("margin {margin}"),
    );

    let again = sample_triple(&spec, &cfg).unwrap();
    c.check(again.values() == data.values(), "rerun not bit-identical");
    let seq = sample_triple_with(&spec, &cfg, Execution::Sequential).unwrap();
    c.check(seq.values() == data.values(), "sequential path differs");
    c.finish(&format!(
        "max |r - rho| {worst:.5}, margin {margin:.5} (exact {expected:.5}), rerun bit-identical"
    ));
}

#[test]
fn c8_coherence_and_linkage() {
    let mut c = Criterion::new("C8", None);
    let spec = build_counterexample(ThetaParams::new(FRAC_PI_4).unwrap()).unwrap();
    let r = &spec.correlation;
    let pearson = apply_measure(r, MeasureKind::Pearson);

    // d_XY / (d_XZ + d_ZY) = (1 - 1/4) / (2 - sqrt 2)
    let expected = 0.75 / (2.0 - 2.0_f64.sqrt());
    let k = coherence_index(&pearson).unwrap();
    c.check(
        (k.value - expected).abs() <= 1e-5,
        format!("pearson coherence {}", k.value),
    );
    c.check(
        k.triple == Some([0, 1, 2]),
        format!("achieving triple {:?}", k.triple),
    );
    for m in [MeasureKind::SqrtPearson, MeasureKind::PSquared] {
        let v = coherence_index(&apply_measure(r, m)).unwrap().value;
        c.check(v <= 1.0, format!("{m} coherence {v}"));
    }

    let dend = cluster(&pearson, LinkageKind::Single).unwrap();
    let (x, y, z) = (0, 1, 2);
    let mut members: Vec<Vec<usize>> = (0..3).map(|i| vec![i]).collect();
    let mut joined_through_z = false;
    let mut direct = false;
    for m in &dend.merges {
        let (a, b) = (members[m.cluster_a].clone(), members[m.cluster_b].clone());
        let crosses = (a.contains(&x) && b.contains(&y)) || (a.contains(&y) && b.contains(&x));
        if crosses {
            direct |= a.len() == 1 && b.len() == 1;
            joined_through_z = a.contains(&z) || b.contains(&z);
            c.check(
                m.height < pearson.get(x, y),
                format!("X-Y join height {} not below d_XY", m.height),
            );
        }
        members.push([a, b].concat());
    }
    c.check(!direct && joined_through_z, "X and Y merged without Z");
    c.finish(&format!(
        "coherence {:.9} (exact {expected:.9}); single linkage joins X and Y via Z",
        k.value
    ));
}
