//! Test space, criticality functions and the objective seen by the searches.

use crate::bms::{simulate, ControlLimits, SimError, SimOptions, SimOutcome, SimParams, SimState};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("dimension `{name}`: lower bound {lower} is not below upper bound {upper}")]
    EmptyRange { name: String, lower: f64, upper: f64 },
    #[error("point has {got} coordinates, the space has {expected}")]
    WrongArity { expected: usize, got: usize },
    #[error("coordinate {axis} = {value} lies outside [0, 1]")]
    OutOfUnitCube { axis: usize, value: f64 },
    #[error("test space needs at least one dimension")]
    NoDimensions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub unit: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpace {
    pub dims: Vec<Dimension>,
}

impl Default for ParamSpace {
    fn default() -> Self {
        ParamSpace::battery(-5.0, 40.0, 10.0, 100.0)
    }
}

impl ParamSpace {
    /// Ambient temperature (deg C) by maximum station current (A).
    pub fn battery(t_lo: f64, t_hi: f64, i_lo: f64, i_hi: f64) -> Self {
        ParamSpace {
            dims: vec![
                Dimension { name: "t_amb".into(), lower: t_lo, upper: t_hi, unit: "degC".into() },
                Dimension { name: "i_max".into(), lower: i_lo, upper: i_hi, unit: "A".into() },
            ],
        }
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn validate(&self) -> Result<(), SpaceError> {
        if self.dims.is_empty() {
            return Err(SpaceError::NoDimensions);
        }
        for d in &self.dims {
            if !(d.lower < d.upper) || !d.lower.is_finite() || !d.upper.is_finite() {
                return Err(SpaceError::EmptyRange { name: d.name.clone(), lower: d.lower, upper: d.upper });
            }
        }
        Ok(())
    }

    pub fn denormalize(&self, u: &UnitPoint) -> Result<ParamPoint, SpaceError> {
        if u.0.len() != self.dims.len() {
            return Err(SpaceError::WrongArity { expected: self.dims.len(), got: u.0.len() });
        }
        Ok(ParamPoint(
            u.0.iter()
                .zip(&self.dims)
                .map(|(x, d)| d.lower + x * (d.upper - d.lower))
                .collect(),
        ))
    }
}

/// Point of the normalized cube `[0, 1]^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitPoint(pub Vec<f64>);

impl UnitPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self, SpaceError> {
        for (axis, &value) in coords.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(SpaceError::OutOfUnitCube { axis, value });
            }
        }
        Ok(UnitPoint(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

/// Point in physical units, same axis order as the [`ParamSpace`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamPoint(pub Vec<f64>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CriticalitySpec {
    pub c_kappa: f64,
    /// h
    pub t_fatal: f64,
    /// h
    pub t_min: f64,
    /// deg C
    pub temp_fatal: f64,
    /// deg C
    pub temp_min: f64,
}

impl Default for CriticalitySpec {
    fn default() -> Self {
        CriticalitySpec { c_kappa: 0.8, t_fatal: 9.0, t_min: 0.0, temp_fatal: 63.75, temp_min: -5.0 }
    }
}

impl CriticalitySpec {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.c_kappa > 0.0 && self.c_kappa < 1.0) {
            return Err(format!("crit.c_kappa must lie in (0, 1), got {}", self.c_kappa));
        }
        if !(self.t_min < self.t_fatal) {
            return Err("crit.t_min must be below crit.t_fatal".into());
        }
        if !(self.temp_min < self.temp_fatal) {
            return Err("crit.temp_min must be below crit.temp_fatal".into());
        }
        Ok(())
    }
}

/// Charging-time criticality; `t_charge` in hours.
pub fn kappa_time(t_charge: f64, spec: &CriticalitySpec) -> f64 {
    ((t_charge - spec.t_min) / (spec.t_fatal - spec.t_min)).clamp(0.0, 1.0)
}

/// Battery-temperature criticality; `t_bat` in deg C.
pub fn kappa_temp(t_bat: f64, spec: &CriticalitySpec) -> f64 {
    ((t_bat - spec.temp_min) / (spec.temp_fatal - spec.temp_min)).clamp(0.0, 1.0)
}

pub fn kappa_combine(k_time: f64, k_temp: f64) -> f64 {
    k_time.max(k_temp)
}

pub fn is_critical(kappa: f64, spec: &CriticalitySpec) -> bool {
    kappa >= spec.c_kappa
}

/// Criticality of one simulator state.
pub fn kappa_state(state: &SimState, spec: &CriticalitySpec) -> f64 {
    kappa_combine(kappa_time(state.t / 3600.0, spec), kappa_temp(state.t_bat, spec))
}

/// Black-box objective on the unit cube. Must be deterministic.
pub trait Objective {
    fn dim(&self) -> usize;
    fn evaluate(&self, u: &UnitPoint) -> Result<f64, SimError>;
}

impl<T: Objective + ?Sized> Objective for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn evaluate(&self, u: &UnitPoint) -> Result<f64, SimError> {
        (**self).evaluate(u)
    }
}

/// The battery charging simulator behind the criticality monitor.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BatteryObjective {
    pub sim: SimParams,
    pub limits: ControlLimits,
    pub space: ParamSpace,
    pub crit: CriticalitySpec,
}

impl BatteryObjective {
    pub fn new(sim: SimParams, limits: ControlLimits, space: ParamSpace, crit: CriticalitySpec) -> Self {
        BatteryObjective { sim, limits, space, crit }
    }

    /// Physical (t_amb, i_max) of a unit point.
    pub fn physical(&self, u: &UnitPoint) -> (f64, f64) {
        let p = self.space.denormalize(u).expect("objective is two-dimensional");
        (p.0[0], p.0[1])
    }

    pub fn run(&self, u: &UnitPoint, options: SimOptions) -> Result<SimOutcome, SimError> {
        let (t_amb, i_max) = self.physical(u);
        let crit = &self.crit;
        simulate(t_amb, i_max, &self.sim, &self.limits, options, |s| kappa_state(s, crit))
    }
}

impl Objective for BatteryObjective {
    fn dim(&self) -> usize {
        2
    }

    fn evaluate(&self, u: &UnitPoint) -> Result<f64, SimError> {
        Ok(self.run(u, SimOptions::default())?.kappa_peak)
    }
}

/// Wraps a closure as an objective, for tests and toy problems.
pub struct FnObjective<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64> FnObjective<F> {
    pub fn new(dim: usize, f: F) -> Self {
        FnObjective { dim, f }
    }
}

impl<F: Fn(&[f64]) -> f64> Objective for FnObjective<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn evaluate(&self, u: &UnitPoint) -> Result<f64, SimError> {
        Ok((self.f)(&u.0))
    }
}
