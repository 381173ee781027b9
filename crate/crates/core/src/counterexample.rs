//! The one-parameter family of three correlated variables on which Pearson
//! and |Pearson| dissimilarities break the triangle inequality.
//!
//! For `theta` in `(0, pi/2)` take zero-mean `U, V, W` with `U` independent
//! of `(V, W)`, `var U = cos^2`, `var V = var W = sin^2` and
//! `corr(V, W) = -cos^2`. Then `X = U + V`, `Y = U + W`, `Z = U` have unit
//! variance, `rho_xz = rho_yz = cos` and `rho_xy = cos^4`.

use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::corr::{psd_check, CorrelationMatrix, DataMatrix, DEFAULT_PSD_TOL};
use crate::dissimilarity::MeasureKind;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::random::{chunk_rng, SAMPLE_CHUNK};

/// Distance kept from both ends of `(0, pi/2)` in grid sweeps.
pub const THETA_GUARD: f64 = 0.01;
pub const MIN_SWEEP_GRID: usize = 100;
pub const BISECTION_TOL: f64 = 1e-10;

pub const VARIABLE_NAMES: [&str; 3] = ["X", "Y", "Z"];

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct ThetaParams(f64);

impl ThetaParams {
    pub fn new(theta: f64) -> Result<Self> {
        if theta > 0.0 && theta < FRAC_PI_2 {
            Ok(Self(theta))
        } else {
            Err(Error::ThetaOutOfRange(theta))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Second moments of the latent variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatentSpec {
    pub var_u: f64,
    pub var_v: f64,
    pub var_w: f64,
    pub corr_vw: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleSpec {
    pub theta: ThetaParams,
    pub correlation: CorrelationMatrix,
    pub latent: LatentSpec,
}

pub fn build_counterexample(theta: ThetaParams) -> Result<CounterexampleSpec> {
    let (s, c) = theta.value().sin_cos();
    let c4 = (c * c) * (c * c);
    let correlation =
        CorrelationMatrix::from_upper(3, |i, j| if (i, j) == (0, 1) { c4 } else { c })
            .with_names(VARIABLE_NAMES.iter().map(|s| s.to_string()).collect())?;
    let verdict = psd_check(&correlation, DEFAULT_PSD_TOL);
    if !verdict.is_psd {
        return Err(Error::NotRealizable(verdict.min_eigenvalue));
    }
    Ok(CounterexampleSpec {
        theta,
        correlation,
        latent: LatentSpec {
            var_u: c * c,
            var_v: s * s,
            var_w: s * s,
            corr_vw: -c * c,
        },
    })
}

/// `d_xy - (d_xz + d_zy)` for each measure on the family; positive means
/// the triangle through `Z` is violated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ViolationMargins {
    pub pearson_margin: f64,
    pub abs_pearson_margin: f64,
    pub sqrt_pearson_margin: f64,
    pub psquared_margin: f64,
}

impl ViolationMargins {
    pub fn get(&self, kind: MeasureKind) -> f64 {
        match kind {
            MeasureKind::Pearson => self.pearson_margin,
            MeasureKind::AbsPearson => self.abs_pearson_margin,
            MeasureKind::SqrtPearson => self.sqrt_pearson_margin,
            MeasureKind::PSquared => self.psquared_margin,
        }
    }

    pub fn violated(&self) -> Vec<MeasureKind> {
        MeasureKind::ALL
            .into_iter()
            .filter(|&m| self.get(m) > 0.0)
            .collect()
    }
}

pub fn margins(theta: ThetaParams) -> ViolationMargins {
    let c = theta.value().cos();
    let c2 = c * c;
    let c4 = c2 * c2;
    let c8 = c4 * c4;
    ViolationMargins {
        pearson_margin: (1.0 - c4) - 2.0 * (1.0 - c),
        abs_pearson_margin: (1.0 - c4.abs()) - 2.0 * (1.0 - c.abs()),
        sqrt_pearson_margin: (1.0 - c4).sqrt() - 2.0 * (1.0 - c).sqrt(),
        psquared_margin: (1.0 - c8).sqrt() - 2.0 * (1.0 - c2).sqrt(),
    }
}

/// `n` equally spaced angles from `THETA_GUARD` to `pi/2 - THETA_GUARD`.
pub fn theta_grid(n: usize) -> Vec<f64> {
    let lo = THETA_GUARD;
    let hi = FRAC_PI_2 - THETA_GUARD;
    let last = (n.max(2) - 1) as f64;
    (0..n).map(|k| lo + (hi - lo) * k as f64 / last).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryEstimate {
    pub measure: MeasureKind,
    /// End of the initial run of positive margins; 0 if the first grid
    /// point is not violated.
    pub theta_star: f64,
    /// `theta_star / (pi / 2)`.
    pub fraction_of_range: f64,
    /// Grid points with a positive margin anywhere in the sweep.
    pub positive_points: usize,
    pub grid_size: usize,
}

/// Boundary of the Pearson violation region.
pub fn sweep_boundary(grid_size: usize) -> Result<BoundaryEstimate> {
    sweep_boundary_for(MeasureKind::Pearson, grid_size, Execution::default())
}

/// Scans the guarded theta grid, then bisects the first sign change down to
/// `BISECTION_TOL`.
pub fn sweep_boundary_for(
    measure: MeasureKind,
    grid_size: usize,
    exec: Execution,
) -> Result<BoundaryEstimate> {
    if grid_size < MIN_SWEEP_GRID {
        return Err(Error::GridTooSmall {
            got: grid_size,
            need: MIN_SWEEP_GRID,
        });
    }
    let margin_at = |t: f64| margins(ThetaParams(t)).get(measure);
    let grid = theta_grid(grid_size);
    let values = exec.map(grid.len(), |k| margin_at(grid[k]));
    let positive_points = values.iter().filter(|&&m| m > 0.0).count();

    let theta_star = match values.iter().position(|&m| m <= 0.0) {
        Some(0) => 0.0,
        None => FRAC_PI_2,
        Some(k) => {
            let (mut lo, mut hi) = (grid[k - 1], grid[k]);
            while hi - lo > BISECTION_TOL {
                let mid = 0.5 * (lo + hi);
                if margin_at(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        }
    };

    Ok(BoundaryEstimate {
        measure,
        theta_star,
        fraction_of_range: theta_star / FRAC_PI_2,
        positive_points,
        grid_size,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub theta: f64,
    pub margins: ViolationMargins,
}

impl SweepRow {
    /// `+`-joined names of the violated measures, or `none`.
    pub fn violated_flags(&self) -> String {
        let v = self.margins.violated();
        if v.is_empty() {
            "none".to_string()
        } else {
            v.iter().map(|m| m.name()).collect::<Vec<_>>().join("+")
        }
    }
}

pub fn sweep_table(grid_size: usize, exec: Execution) -> Result<Vec<SweepRow>> {
    if grid_size < MIN_SWEEP_GRID {
        return Err(Error::GridTooSmall {
            got: grid_size,
            need: MIN_SWEEP_GRID,
        });
    }
    let grid = theta_grid(grid_size);
    Ok(exec.map(grid.len(), |k| SweepRow {
        theta: grid[k],
        margins: margins(ThetaParams(grid[k])),
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SampleConfig {
    pub n_samples: usize,
    pub seed: u64,
}

impl SampleConfig {
    pub fn new(n_samples: usize, seed: u64) -> Result<Self> {
        if n_samples < 2 {
            return Err(Error::SampleSizeTooSmall(n_samples));
        }
        Ok(Self { n_samples, seed })
    }
}

pub fn sample_triple(spec: &CounterexampleSpec, cfg: &SampleConfig) -> Result<DataMatrix> {
    sample_triple_with(spec, cfg, Execution::default())
}

/// Gaussian realizations of `(X, Y, Z) = (U + V, U + W, U)`.
///
/// `(V, W)` comes from the 2x2 Cholesky factor of its covariance. Rows are
/// drawn in fixed-size chunks, each from its own ChaCha stream keyed by
/// `(seed, chunk)`, so the output is identical for any execution strategy.
pub fn sample_triple_with(
    spec: &CounterexampleSpec,
    cfg: &SampleConfig,
    exec: Execution,
) -> Result<DataMatrix> {
    let SampleConfig { n_samples, seed } = SampleConfig::new(cfg.n_samples, cfg.seed)?;
    let l = spec.latent;
    let sd_u = l.var_u.sqrt();
    let sd_v = l.var_v.sqrt();
    // L = sd * [[1, 0], [r, sqrt(1 - r^2)]]
    let w_on_v = l.var_w.sqrt() * l.corr_vw;
    let w_own = l.var_w.sqrt() * (1.0 - l.corr_vw * l.corr_vw).max(0.0).sqrt();

    let n_chunks = n_samples.div_ceil(SAMPLE_CHUNK);
    let chunks = exec.map(n_chunks, |c| {
        let mut rng = chunk_rng(seed, c);
        let rows = SAMPLE_CHUNK.min(n_samples - c * SAMPLE_CHUNK);
        let mut out = Vec::with_capacity(rows * 3);
        for _ in 0..rows {
            let z1: f64 = rng.sample(StandardNormal);
            let z2: f64 = rng.sample(StandardNormal);
            let z3: f64 = rng.sample(StandardNormal);
            let u = sd_u * z1;
            let v = sd_v * z2;
            let w = w_on_v * z2 + w_own * z3;
            out.extend([u + v, u + w, u]);
        }
        out
    });
    let flat: Vec<f64> = chunks.into_iter().flatten().collect();
    DataMatrix::new(
        DMatrix::from_row_slice(n_samples, 3, &flat),
        VARIABLE_NAMES.iter().map(|s| s.to_string()).collect(),
    )
}
