//! Brute-force grid oracle and the calibration gates built on it.

use super::config::ExperimentConfig;
use super::output::create;
use super::HarnessError;
use crate::criticality::{Objective, ParamSpace, UnitPoint};
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;
use std::path::Path;

pub const GRID_HEADER: &str = "u0,u1,t_amb_c,i_max_a,kappa,critical";

/// Accepted range of the critical grid fraction.
pub const GATE_FRACTION: (f64, f64) = (0.003, 0.02);
/// Every critical grid point must lie at or above these physical values.
pub const GATE_REGION_MIN: (f64, f64) = (25.0, 55.0);
/// Accepted range of the median criticality in the lower-left probe box.
pub const GATE_PLATEAU: (f64, f64) = (0.3, 0.45);
/// Probe box of the plateau gate: `u0 <= 0.25`, `0.1 <= u1 <= 0.35`.
pub const PLATEAU_BOX: (f64, f64, f64) = (0.25, 0.1, 0.35);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub u0: f64,
    pub u1: f64,
    pub t_amb: f64,
    pub i_max: f64,
    pub kappa: f64,
    pub critical: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub resolution: usize,
    /// Row-major with `u0` outer.
    pub points: Vec<GridPoint>,
}

impl GridResult {
    pub fn critical_fraction(&self) -> f64 {
        self.points.iter().filter(|p| p.critical).count() as f64 / self.points.len() as f64
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), HarnessError> {
        let mut out = create(path)?;
        let mut write = || -> std::io::Result<()> {
            writeln!(out, "{GRID_HEADER}")?;
            for p in &self.points {
                writeln!(
                    out,
                    "{:.6},{:.6},{:.6},{:.6},{:.6},{}",
                    p.u0,
                    p.u1,
                    p.t_amb,
                    p.i_max,
                    p.kappa,
                    u8::from(p.critical)
                )?;
            }
            out.flush()
        };
        write().map_err(|e| HarnessError::io(path, e))
    }
}

/// Evaluates the objective on a `resolution x resolution` grid spanning the
/// closed unit square, corners included.
pub fn grid_oracle<O: Objective + Sync + ?Sized>(
    resolution: usize,
    objective: &O,
    space: &ParamSpace,
    c_kappa: f64,
) -> Result<GridResult, HarnessError> {
    if resolution < 2 {
        return Err(HarnessError::Config(format!("grid resolution must be at least 2, got {resolution}")));
    }
    let step = 1.0 / (resolution - 1) as f64;
    let points = (0..resolution * resolution)
        .into_par_iter()
        .map(|k| {
            let (u0, u1) = ((k / resolution) as f64 * step, (k % resolution) as f64 * step);
            let u = UnitPoint(vec![u0, u1]);
            let kappa = objective.evaluate(&u)?;
            let x = space.denormalize(&u).map_err(|e| HarnessError::Config(e.to_string()))?;
            Ok(GridPoint { u0, u1, t_amb: x.0[0], i_max: x.0[1], kappa, critical: kappa >= c_kappa })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    Ok(GridResult { resolution, points })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationReport {
    pub resolution: usize,
    pub critical_fraction: f64,
    pub critical_t_amb_min: Option<f64>,
    pub critical_i_max_min: Option<f64>,
    pub plateau_median: f64,
    pub gates: Vec<GateResult>,
    pub passed: bool,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Applies the three calibration gates to a grid.
pub fn calibration_report(grid: &GridResult) -> CalibrationReport {
    let fraction = grid.critical_fraction();
    let critical: Vec<&GridPoint> = grid.points.iter().filter(|p| p.critical).collect();
    let t_min = critical.iter().map(|p| p.t_amb).min_by(f64::total_cmp);
    let i_min = critical.iter().map(|p| p.i_max).min_by(f64::total_cmp);
    let (u0_hi, u1_lo, u1_hi) = PLATEAU_BOX;
    let plateau = median(
        grid.points
            .iter()
            .filter(|p| p.u0 <= u0_hi && p.u1 >= u1_lo && p.u1 <= u1_hi)
            .map(|p| p.kappa)
            .collect(),
    );

    let in_fraction = fraction >= GATE_FRACTION.0 && fraction <= GATE_FRACTION.1;
    let confined = critical.iter().all(|p| p.t_amb >= GATE_REGION_MIN.0 && p.i_max >= GATE_REGION_MIN.1);
    let flat = plateau >= GATE_PLATEAU.0 && plateau <= GATE_PLATEAU.1;
    let gates = vec![
        GateResult {
            name: "critical_fraction",
            passed: in_fraction,
            detail: format!("{fraction:.6} in [{}, {}]", GATE_FRACTION.0, GATE_FRACTION.1),
        },
        GateResult {
            name: "critical_region",
            passed: confined,
            detail: match (t_min, i_min) {
                (Some(t), Some(i)) => format!(
                    "critical points start at t_amb {t:.3} C (need >= {}), i_max {i:.3} A (need >= {})",
                    GATE_REGION_MIN.0, GATE_REGION_MIN.1
                ),
                _ => "no critical points".to_string(),
            },
        },
        GateResult {
            name: "plateau",
            passed: flat,
            detail: format!("median kappa {plateau:.6} in [{}, {}]", GATE_PLATEAU.0, GATE_PLATEAU.1),
        },
    ];
    CalibrationReport {
        resolution: grid.resolution,
        critical_fraction: fraction,
        critical_t_amb_min: t_min,
        critical_i_max_min: i_min,
        plateau_median: plateau,
        passed: gates.iter().all(|g| g.passed),
        gates,
    }
}

/// Grid oracle at the configured resolution plus the calibration gates.
pub fn calibrate_check(cfg: &ExperimentConfig) -> Result<(GridResult, CalibrationReport), HarnessError> {
    let objective = cfg.objective();
    let grid = grid_oracle(cfg.grid_resolution, &objective, &objective.space, cfg.crit.c_kappa)?;
    let report = calibration_report(&grid);
    Ok((grid, report))
}
