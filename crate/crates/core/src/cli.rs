//! The `corrdist` command line: argument parsing, command dispatch and
//! report rendering. [`run`] is the whole program minus process exit, so it
//! can be driven in-process.
//!
//! Exit codes: 0 success (for `check`: the matrix is a metric), 2 `check`
//! found triangle violations, 1 usage or input error.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::cluster::{compare_measures, LinkageKind, Partition};
use crate::corr::{pearson_correlation, rows_of, validate_correlation, CorrelationMatrix};
use crate::counterexample::{
    build_counterexample, margins, sample_triple, sweep_boundary_for, sweep_table, SampleConfig,
    ThetaParams,
};
use crate::dissimilarity::{
    analyze_transform, apply_measure, compose_transform, uniform_grid, Builtin, MeasureKind,
    TransformSpec,
};
use crate::error::Error;
use crate::exec::Execution;
use crate::io;
use crate::verify::{audit, Coherence, MetricReport, DEFAULT_TRIANGLE_TOL};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_VIOLATION: i32 = 2;

/// Tolerance for accepting a correlation-matrix file.
const MATRIX_INGEST_TOL: f64 = 1e-6;
const DEFAULT_ANALYSIS_GRID: usize = 1000;

#[derive(Debug, Parser)]
#[command(
    name = "corrdist",
    version,
    about = "Metric audits of correlation-based dissimilarities"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Audit a dissimilarity built from a data or correlation-matrix file.
    Check(CheckArgs),
    /// Evaluate the three-variable counterexample at one angle, or sweep it.
    Counterexample(CounterexampleArgs),
    /// Simulate the counterexample and audit the empirical correlations.
    Sample(SampleArgs),
    /// Predict whether a transform preserves the metric property.
    Transform(TransformArgs),
    /// Compare hierarchical clusterings under two measures.
    Cluster(ClusterArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Table,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Data file (header row of names, one observation per row) or, with
    /// --matrix, a headerless correlation matrix.
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
    /// Treat --input as a correlation matrix.
    #[arg(long)]
    pub matrix: bool,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long, value_enum, default_value = "json")]
    pub format: OutputFormat,
    /// Triangle-inequality tolerance on margins.
    #[arg(long, default_value_t = DEFAULT_TRIANGLE_TOL)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value = "pearson")]
    pub measure: MeasureKind,
    /// Stop at the first violation.
    #[arg(long)]
    pub fail_fast: bool,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Write the report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CounterexampleArgs {
    /// Angle in radians, strictly between 0 and pi/2.
    #[arg(long, conflicts_with = "grid", required_unless_present = "grid")]
    pub theta: Option<f64>,
    /// Number of grid angles for a boundary sweep (at least 100).
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: OutputFormat,
    /// Sweep table destination (grid mode).
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub theta: f64,
    /// Number of observations.
    #[arg(long = "n")]
    pub n_samples: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value = "pearson")]
    pub measure: MeasureKind,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Sampled data destination.
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    /// square, sqrt, quarter_root_composite or circle_convex.
    #[arg(
        long,
        conflicts_with = "transform_file",
        required_unless_present = "transform_file"
    )]
    pub builtin: Option<String>,
    /// Two-column (x, f(x)) file starting with `0, 0`.
    #[arg(long, value_name = "PATH")]
    pub transform_file: Option<PathBuf>,
    /// Points in the analysis grid.
    #[arg(long, default_value_t = DEFAULT_ANALYSIS_GRID)]
    pub grid: usize,
    #[command(flatten)]
    pub input: InputArgs,
    /// Measure the transform is applied to when --input is given.
    #[arg(long, default_value = "sqrtpearson")]
    pub apply_to: MeasureKind,
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value = "pearson")]
    pub measure: MeasureKind,
    /// Second measure to compare against.
    #[arg(long, default_value = "sqrtpearson")]
    pub against: MeasureKind,
    #[arg(long, default_value = "single")]
    pub linkage: LinkageKind,
    /// Comma-separated cluster counts.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub k: Vec<usize>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: OutputFormat,
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Core(#[from] Error),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match execute(&cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}

pub fn execute(command: &Command, out: &mut dyn Write) -> CliResult<i32> {
    match command {
        Command::Check(a) => cmd_check(a, out),
        Command::Counterexample(a) => cmd_counterexample(a, out),
        Command::Sample(a) => cmd_sample(a, out),
        Command::Transform(a) => cmd_transform(a, out),
        Command::Cluster(a) => cmd_cluster(a, out),
    }
}

fn load_correlation(input: &InputArgs) -> CliResult<CorrelationMatrix> {
    let path = input
        .input
        .as_deref()
        .ok_or_else(|| CliError::Usage("--input is required".into()))?;
    if input.matrix {
        let m = io::read_matrix(path)?;
        let names = (1..=m.nrows()).map(|i| format!("V{i}")).collect();
        Ok(validate_correlation(&m, MATRIX_INGEST_TOL)?.with_names(names)?)
    } else {
        Ok(pearson_correlation(&io::read_data(path)?)?)
    }
}

/// Writes `doc` to `path` if given, else to `out`.
fn emit(out: &mut dyn Write, path: Option<&Path>, doc: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, doc)?,
        None => out.write_all(doc.as_bytes())?,
    }
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("documents serialize");
    s.push('\n');
    s
}

/// Six significant digits.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-5..=9).contains(&mag) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}

fn matrix_table(rows: &[Vec<f64>], names: &[String]) -> String {
    let mut s = String::new();
    s.push_str(&format!("{:>10}", ""));
    for n in names {
        s.push_str(&format!(" {n:>10}"));
    }
    s.push('\n');
    for (name, row) in names.iter().zip(rows) {
        s.push_str(&format!("{name:>10}"));
        for v in row {
            s.push_str(&format!(" {:>10}", sig6(*v)));
        }
        s.push('\n');
    }
    s
}

fn report_table(r: &MetricReport) -> String {
    let mut s = String::new();
    s.push_str(&format!("symmetric          {}\n", r.symmetric));
    s.push_str(&format!("nonneg_zero_diag   {}\n", r.nonneg_zero_diag));
    s.push_str(&format!("is_metric          {}\n", r.is_metric));
    s.push_str(&format!("is_ultrametric     {}\n", r.is_ultrametric));
    s.push_str(&format!("tolerance          {}\n", sig6(r.tolerance)));
    s.push_str(&format!(
        "triangle_violations {}\n",
        r.triangle_violations.len()
    ));
    for v in &r.triangle_violations {
        let label = match &v.names {
            Some([a, b, c]) => format!("{a}-{b} via {c}"),
            None => format!("{}-{} via {}", v.i, v.j, v.k),
        };
        s.push_str(&format!("  {label:<24} margin {}\n", sig6(v.margin)));
    }
    s.push_str(&format!(
        "ultrametric_violations {}\n",
        r.ultrametric_violations.count
    ));
    for w in &r.axiom_warnings {
        s.push_str(&format!("warning: {}-{} {}\n", w.i, w.j, w.message));
    }
    s
}

fn cmd_check(a: &CheckArgs, out: &mut dyn Write) -> CliResult<i32> {
    let corr = load_correlation(&a.input)?;
    let d = apply_measure(&corr, a.measure);
    let opts = crate::verify::AuditOptions {
        tol: a.common.tol,
        fail_fast: a.fail_fast,
        execution: Execution::default(),
    };
    let report = crate::verify::audit_with(&d, &opts);
    let doc = match a.common.format {
        OutputFormat::Json => to_json(&json!({
            "command": "check",
            "measure": a.measure,
            "variables": corr.names(),
            "report": report,
        })),
        OutputFormat::Table => format!(
            "measure            {}\nvariables          {}\n{}",
            a.measure,
            corr.n(),
            report_table(&report)
        ),
    };
    emit(out, a.output.as_deref(), &doc)?;
    Ok(if report.is_metric {
        EXIT_OK
    } else {
        EXIT_VIOLATION
    })
}

fn violated_map(m: &crate::counterexample::ViolationMargins) -> BTreeMap<&'static str, bool> {
    MeasureKind::ALL
        .into_iter()
        .map(|k| (k.name(), m.get(k) > 0.0))
        .collect()
}

fn cmd_counterexample(a: &CounterexampleArgs, out: &mut dyn Write) -> CliResult<i32> {
    if let Some(theta) = a.theta {
        let spec = build_counterexample(ThetaParams::new(theta)?)?;
        let m = margins(spec.theta);
        let names = spec.correlation.names().unwrap_or_default().to_vec();
        let doc = match a.format {
            OutputFormat::Json => to_json(&json!({
                "command": "counterexample",
                "theta": theta,
                "variables": names,
                "correlation": spec.correlation.to_rows(),
                "latent": spec.latent,
                "margins": m,
                "violated": violated_map(&m),
            })),
            OutputFormat::Table => {
                let mut s = format!("theta {}\n", sig6(theta));
                s.push_str(&matrix_table(&spec.correlation.to_rows(), &names));
                for k in MeasureKind::ALL {
                    s.push_str(&format!(
                        "{:<12} margin {:>12}  violated {}\n",
                        k.name(),
                        sig6(m.get(k)),
                        m.get(k) > 0.0
                    ));
                }
                s
            }
        };
        emit(out, None, &doc)?;
        return Ok(EXIT_OK);
    }

    let grid = a.grid.expect("clap requires --theta or --grid");
    let exec = Execution::default();
    let boundaries: Vec<_> = [MeasureKind::Pearson, MeasureKind::AbsPearson]
        .into_iter()
        .map(|m| sweep_boundary_for(m, grid, exec))
        .collect::<crate::error::Result<_>>()?;
    if let Some(path) = &a.output {
        let rows = sweep_table(grid, exec)?;
        io::write_sweep(BufWriter::new(File::create(path)?), &rows)?;
    }
    let doc = match a.format {
        OutputFormat::Json => to_json(&json!({
            "command": "counterexample",
            "grid": grid,
            "theta_star": boundaries[0].theta_star,
            "fraction_of_range": boundaries[0].fraction_of_range,
            "boundaries": boundaries,
            "sweep_file": a.output,
        })),
        OutputFormat::Table => {
            let mut s = format!("grid {grid}\n");
            for b in &boundaries {
                s.push_str(&format!(
                    "{:<12} theta_star {}  fraction_of_range {}\n",
                    b.measure.name(),
                    sig6(b.theta_star),
                    sig6(b.fraction_of_range)
                ));
            }
            s
        }
    };
    emit(out, None, &doc)?;
    Ok(EXIT_OK)
}

/// `|d'(rho)|`, for propagating correlation error into a margin.
fn measure_slope(kind: MeasureKind, rho: f64) -> f64 {
    match kind {
        MeasureKind::Pearson | MeasureKind::AbsPearson => 1.0,
        MeasureKind::SqrtPearson => 0.5 / (1.0 - rho).max(f64::MIN_POSITIVE).sqrt(),
        MeasureKind::PSquared => rho.abs() / (1.0 - rho * rho).max(f64::MIN_POSITIVE).sqrt(),
    }
}

fn cmd_sample(a: &SampleArgs, out: &mut dyn Write) -> CliResult<i32> {
    let spec = build_counterexample(ThetaParams::new(a.theta)?)?;
    let cfg = SampleConfig::new(a.n_samples, a.seed)?;
    let data = sample_triple(&spec, &cfg)?;
    if let Some(path) = &a.output {
        io::write_data(BufWriter::new(File::create(path)?), &data)?;
    }
    let empirical = pearson_correlation(&data)?;
    let analytic = &spec.correlation;
    let n = analytic.n();
    let sqrt_n = (a.n_samples as f64).sqrt();
    let error = rows_of(&(empirical.entries() - analytic.entries()).abs());
    let bound: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let r = analytic.get(i, j);
                    3.0 * (1.0 - r * r) / sqrt_n
                })
                .collect()
        })
        .collect();

    let analytic_margin = margins(spec.theta).get(a.measure);
    // margin d_xy - d_xz - d_zy moves by at most sum |d'(rho_e)| * bound_e
    let margin_bound: f64 = [(0, 1), (0, 2), (1, 2)]
        .iter()
        .map(|&(i, j)| measure_slope(a.measure, analytic.get(i, j)) * bound[i][j])
        .sum();
    let wide_interval = margin_bound >= analytic_margin.abs();

    let report = audit(&apply_measure(&empirical, a.measure), a.common.tol);
    let empirical_margin = report.worst_margin();
    let names = data.var_names().to_vec();

    let doc = match a.common.format {
        OutputFormat::Json => to_json(&json!({
            "command": "sample",
            "theta": a.theta,
            "n_samples": a.n_samples,
            "seed": a.seed,
            "measure": a.measure,
            "variables": names,
            "empirical_correlation": empirical.to_rows(),
            "analytic_correlation": analytic.to_rows(),
            "entrywise_error": error,
            "error_bound": bound,
            "analytic_margin": analytic_margin,
            "empirical_margin": empirical_margin,
            "margin_error_bound": margin_bound,
            "wide_interval": wide_interval,
            "report": report,
            "data_file": a.output,
        })),
        OutputFormat::Table => {
            let mut s = format!(
                "theta {}  n {}  seed {}  measure {}\n",
                sig6(a.theta),
                a.n_samples,
                a.seed,
                a.measure
            );
            s.push_str("empirical correlation\n");
            s.push_str(&matrix_table(&empirical.to_rows(), &names));
            s.push_str("analytic correlation\n");
            s.push_str(&matrix_table(&analytic.to_rows(), &names));
            s.push_str("entrywise error\n");
            s.push_str(&matrix_table(&error, &names));
            s.push_str("error bound 3(1-rho^2)/sqrt(n)\n");
            s.push_str(&matrix_table(&bound, &names));
            s.push_str(&format!(
                "analytic margin {}  margin error bound {}{}\n",
                sig6(analytic_margin),
                sig6(margin_bound),
                if wide_interval {
                    "  (wide interval: verdict not resolved at this n)"
                } else {
                    ""
                }
            ));
            s.push_str(&report_table(&report));
            s
        }
    };
    emit(out, None, &doc)?;
    Ok(EXIT_OK)
}

fn cmd_transform(a: &TransformArgs, out: &mut dyn Write) -> CliResult<i32> {
    let spec = match (&a.builtin, &a.transform_file) {
        (Some(name), _) => TransformSpec::Builtin(name.parse::<Builtin>()?),
        (None, Some(path)) => io::read_transform(path)?,
        (None, None) => {
            return Err(CliError::Usage(
                "--builtin or --transform-file is required".into(),
            ))
        }
    };
    let x_max = match &spec {
        TransformSpec::Builtin(Builtin::CircleConvex) => 0.99,
        TransformSpec::Builtin(_) => 2.0,
        TransformSpec::Sampled { grid, .. } => grid[grid.len() - 1],
    };
    let grid = uniform_grid(x_max, a.grid);
    let verdict = analyze_transform(&spec, &grid)?;

    let applied = match a.input.input {
        Some(_) => {
            let corr = load_correlation(&a.input)?;
            let base = apply_measure(&corr, a.apply_to);
            let composed = compose_transform(&base, &spec)?;
            Some((
                composed.provenance().to_string(),
                audit(&composed, a.common.tol),
            ))
        }
        None => None,
    };

    let doc = match a.common.format {
        OutputFormat::Json => to_json(&json!({
            "command": "transform",
            "transform": spec.name(),
            "grid": { "points": a.grid, "x_max": x_max },
            "verdict": verdict,
            "applied": applied.as_ref().map(|(prov, report)| json!({
                "measure": a.apply_to,
                "dissimilarity": prov,
                "report": report,
            })),
        })),
        OutputFormat::Table => {
            let mut s = format!(
                "transform {}\ngrid {} points over (0, {}]\npasses_origin {}\nmonotone_increasing {}\nconvexity {}\nprediction {}\n",
                spec.name(),
                a.grid,
                sig6(x_max),
                verdict.passes_origin,
                verdict.monotone_increasing,
                enum_name(&verdict.convexity),
                enum_name(&verdict.prediction),
            );
            if let Some((prov, report)) = &applied {
                s.push_str(&format!("applied to {prov}\n"));
                s.push_str(&report_table(report));
            }
            s
        }
    };
    emit(out, a.output.as_deref(), &doc)?;
    Ok(EXIT_OK)
}

fn enum_name<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(Value::String(s)) => s,
        _ => String::new(),
    }
}

fn named(p: &Partition, names: &[String]) -> Vec<Vec<String>> {
    p.iter()
        .map(|set| set.iter().map(|&i| names[i].clone()).collect())
        .collect()
}

fn coherence_json(c: &Coherence, names: &[String]) -> Value {
    let mut v = serde_json::to_value(c).unwrap_or(Value::Null);
    v["triple_names"] = json!(c.triple.map(|t| t.map(|i| names[i].clone())));
    v
}

fn cmd_cluster(a: &ClusterArgs, out: &mut dyn Write) -> CliResult<i32> {
    let corr = load_correlation(&a.input)?;
    let cmp = compare_measures(&corr, a.measure, a.against, a.linkage, &a.k)?;
    let names = cmp.dendrogram_a.leaf_names.clone();

    let doc = match a.format {
        OutputFormat::Json => {
            let partitions: BTreeMap<String, Value> = cmp
                .partitions_at_k
                .iter()
                .map(|(k, (pa, pb))| {
                    (
                        k.to_string(),
                        json!({ "a": named(pa, &names), "b": named(pb, &names) }),
                    )
                })
                .collect();
            let agreement: BTreeMap<String, f64> = cmp
                .agreement_at_k
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect();
            to_json(&json!({
                "command": "cluster",
                "measure_a": cmp.measure_a,
                "measure_b": cmp.measure_b,
                "linkage": cmp.linkage,
                "coherence_a": coherence_json(&cmp.coherence_a, &names),
                "coherence_b": coherence_json(&cmp.coherence_b, &names),
                "dendrogram_a": cmp.dendrogram_a,
                "dendrogram_b": cmp.dendrogram_b,
                "partitions_at_k": partitions,
                "agreement_at_k": agreement,
            }))
        }
        OutputFormat::Table => {
            let mut s = format!(
                "linkage {}\n{:<12} coherence {}\n{:<12} coherence {}\n",
                cmp.linkage,
                cmp.measure_a.name(),
                sig6(cmp.coherence_a.value),
                cmp.measure_b.name(),
                sig6(cmp.coherence_b.value),
            );
            for (k, (pa, pb)) in &cmp.partitions_at_k {
                s.push_str(&format!(
                    "k={k}  rand {}\n  a: {:?}\n  b: {:?}\n",
                    sig6(cmp.agreement_at_k[k]),
                    named(pa, &names),
                    named(pb, &names)
                ));
            }
            s
        }
    };
    emit(out, a.output.as_deref(), &doc)?;
    Ok(EXIT_OK)
}
