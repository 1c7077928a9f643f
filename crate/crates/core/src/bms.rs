//! Fixed-step battery charging simulator.
//!
//! Four components are advanced once per communication step, in a fixed
//! Gauss-Seidel order: charging approval, charging management, charging
//! station, then the battery (voltage, state of charge, temperature). Each
//! component sees the values already updated earlier in the same step; the
//! approval logic therefore reads the battery state produced by the previous
//! step.
//!
//! Nothing in here is random. [`simulate`] is a pure function of its inputs.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },
    #[error("resistance factor table: cells {first} and {second} overlap")]
    OverlappingFactors { first: usize, second: usize },
    #[error("non-finite {quantity} at step {step}; check the simulation parameters")]
    NonFinite { step: u64, quantity: &'static str },
}

/// One rectangle of the resistance factor table.
///
/// Intervals are half-open `[lo, hi)`; the upper edge is closed when it is the
/// largest upper edge of the whole table on that axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RFactorCell {
    pub soc_lo: f64,
    pub soc_hi: f64,
    #[serde(default)]
    pub i_lo: f64,
    #[serde(default = "unbounded")]
    pub i_hi: f64,
    pub factor: f64,
}

fn unbounded() -> f64 {
    f64::INFINITY
}

/// Piecewise-constant multiplier on the internal resistance over
/// (state of charge, charging current). Empty means factor 1 everywhere.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RFactorTable {
    cells: Vec<RFactorCell>,
}

impl RFactorTable {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn new(cells: Vec<RFactorCell>) -> Result<Self, SimError> {
        let table = RFactorTable { cells };
        table.validate()?;
        Ok(table)
    }

    pub fn cells(&self) -> &[RFactorCell] {
        &self.cells
    }

    pub fn validate(&self) -> Result<(), SimError> {
        for c in &self.cells {
            if !(c.soc_lo < c.soc_hi) || !(c.i_lo < c.i_hi) {
                return Err(SimError::InvalidParam {
                    field: "r_factors",
                    reason: format!("empty interval in {c:?}"),
                });
            }
            if !(c.factor > 0.0) || !c.factor.is_finite() {
                return Err(SimError::InvalidParam {
                    field: "r_factors",
                    reason: format!("factor must be positive and finite, got {}", c.factor),
                });
            }
        }
        for (a, ca) in self.cells.iter().enumerate() {
            for (b, cb) in self.cells.iter().enumerate().skip(a + 1) {
                let soc = ca.soc_lo < cb.soc_hi && cb.soc_lo < ca.soc_hi;
                let cur = ca.i_lo < cb.i_hi && cb.i_lo < ca.i_hi;
                if soc && cur {
                    return Err(SimError::OverlappingFactors { first: a, second: b });
                }
            }
        }
        Ok(())
    }

    pub fn factor(&self, soc: f64, i_charge: f64) -> f64 {
        if self.cells.is_empty() {
            return 1.0;
        }
        let soc_top = self.cells.iter().map(|c| c.soc_hi).fold(f64::MIN, f64::max);
        let i_top = self.cells.iter().map(|c| c.i_hi).fold(f64::MIN, f64::max);
        let inside = |v: f64, lo: f64, hi: f64, top: f64| lo <= v && (v < hi || (v == hi && hi == top));
        self.cells
            .iter()
            .find(|c| inside(soc, c.soc_lo, c.soc_hi, soc_top) && inside(i_charge, c.i_lo, c.i_hi, i_top))
            .map_or(1.0, |c| c.factor)
    }
}

/// Physical constants of the battery and the integration settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    /// Capacity, Ah.
    pub b_size: f64,
    /// kg
    pub mass: f64,
    /// J/(kg K)
    pub c_cell: f64,
    /// Ohm
    pub r_internal: f64,
    /// m^2
    pub surface_area: f64,
    /// W/(m^2 K)
    pub h_transfer: f64,
    /// Series resistance of the voltage model, Ohm.
    pub r_a: f64,
    /// Open-circuit voltage at empty charge, V.
    pub ocv0: f64,
    /// Open-circuit voltage slope over state of charge, V.
    pub ocv_slope: f64,
    pub soc_init: f64,
    /// deg C
    pub t_bat_init: f64,
    /// Step, s.
    pub dt: f64,
    /// Cutoff, s.
    pub t_sim_max: f64,
    pub r_factors: RFactorTable,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            b_size: 70.0,
            mass: 120.0,
            c_cell: 900.0,
            r_internal: 0.165,
            surface_area: 1.5,
            h_transfer: 7.5,
            r_a: 0.01,
            ocv0: 21.6,
            ocv_slope: 4.8,
            soc_init: 0.0,
            t_bat_init: 20.0,
            dt: 1.0,
            t_sim_max: 32_400.0,
            r_factors: RFactorTable::identity(),
        }
    }
}

impl SimParams {
    /// Heat capacity m*c, J/K.
    pub fn heat_capacity(&self) -> f64 {
        self.mass * self.c_cell
    }

    /// Heat transfer A*h, W/K.
    pub fn heat_transfer(&self) -> f64 {
        self.surface_area * self.h_transfer
    }

    /// Largest step for which the explicit Euler cooling term stays stable.
    pub fn stability_limit(&self) -> f64 {
        self.heat_capacity() / self.heat_transfer()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let positive = [
            ("b_size", self.b_size),
            ("mass", self.mass),
            ("c_cell", self.c_cell),
            ("r_internal", self.r_internal),
            ("surface_area", self.surface_area),
            ("h_transfer", self.h_transfer),
            ("r_a", self.r_a),
            ("ocv0", self.ocv0),
            ("ocv_slope", self.ocv_slope),
            ("dt", self.dt),
            ("t_sim_max", self.t_sim_max),
        ];
        for (field, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SimError::InvalidParam {
                    field,
                    reason: format!("must be positive and finite, got {v}"),
                });
            }
        }
        if !(0.0..0.95).contains(&self.soc_init) {
            return Err(SimError::InvalidParam {
                field: "soc_init",
                reason: format!("must lie in [0, 0.95), got {}", self.soc_init),
            });
        }
        if !self.t_bat_init.is_finite() || self.t_bat_init < -273.15 {
            return Err(SimError::InvalidParam {
                field: "t_bat_init",
                reason: format!("not a physical temperature: {}", self.t_bat_init),
            });
        }
        if self.dt >= self.stability_limit() {
            return Err(SimError::InvalidParam {
                field: "dt",
                reason: format!(
                    "explicit Euler needs dt < m*c/(A*h) = {:.3} s, got {}",
                    self.stability_limit(),
                    self.dt
                ),
            });
        }
        self.r_factors.validate()
    }
}

/// Thresholds of the approval and management logic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlLimits {
    pub soc_full: f64,
    pub soc_rearm: f64,
    pub t_bat_max_approve: f64,
    pub t_bat_rearm: f64,
    pub t_bat_min_approve: f64,
    pub t_bat_min_rearm: f64,
    pub u_bat_max_approve: f64,
    pub u_bat_rearm: f64,
    pub heatup_temp: f64,
    pub fast_soc_lo: f64,
    pub fast_soc_hi: f64,
    pub fast_temp_lo: f64,
    pub fast_temp_hi: f64,
    pub i_heatup: f64,
    pub i_slow: f64,
    pub i_rest: f64,
}

impl Default for ControlLimits {
    fn default() -> Self {
        ControlLimits {
            soc_full: 0.95,
            soc_rearm: 0.93,
            t_bat_max_approve: 42.0,
            t_bat_rearm: 38.0,
            t_bat_min_approve: -10.0,
            t_bat_min_rearm: -8.0,
            u_bat_max_approve: 29.0,
            u_bat_rearm: 28.5,
            heatup_temp: 5.0,
            fast_soc_lo: 0.05,
            fast_soc_hi: 0.85,
            fast_temp_lo: 5.0,
            fast_temp_hi: 40.0,
            i_heatup: 30.0,
            i_slow: 20.0,
            i_rest: 0.0,
        }
    }
}

impl ControlLimits {
    /// Same limits with every approval ceiling and floor removed.
    pub fn without_approval_limits(mut self) -> Self {
        self.t_bat_max_approve = f64::INFINITY;
        self.t_bat_rearm = f64::INFINITY;
        self.t_bat_min_approve = f64::NEG_INFINITY;
        self.t_bat_min_rearm = f64::NEG_INFINITY;
        self.u_bat_max_approve = f64::INFINITY;
        self.u_bat_rearm = f64::INFINITY;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        fn bad(field: &'static str, reason: String) -> SimError {
            SimError::InvalidParam { field, reason }
        }
        // A disabled (infinite) limit needs no rearm band.
        let below = |rearm: f64, limit: f64| limit.is_infinite() || rearm < limit;
        if !(self.soc_full > 0.0 && self.soc_full <= 1.0) {
            return Err(bad("soc_full", format!("must lie in (0, 1], got {}", self.soc_full)));
        }
        if !(self.soc_rearm < self.soc_full) {
            return Err(bad("soc_rearm", "must be below soc_full".into()));
        }
        if !below(self.t_bat_rearm, self.t_bat_max_approve) {
            return Err(bad("t_bat_rearm", "must be below t_bat_max_approve".into()));
        }
        if !below(-self.t_bat_min_rearm, -self.t_bat_min_approve) {
            return Err(bad("t_bat_min_rearm", "must be above t_bat_min_approve".into()));
        }
        if !below(self.u_bat_rearm, self.u_bat_max_approve) {
            return Err(bad("u_bat_rearm", "must be below u_bat_max_approve".into()));
        }
        if !(self.fast_soc_lo < self.fast_soc_hi) {
            return Err(bad("fast_soc_lo", "must be below fast_soc_hi".into()));
        }
        if !(self.fast_temp_lo < self.fast_temp_hi) {
            return Err(bad("fast_temp_lo", "must be below fast_temp_hi".into()));
        }
        for (field, v) in [("i_heatup", self.i_heatup), ("i_slow", self.i_slow), ("i_rest", self.i_rest)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(bad(field, format!("must be a non-negative current, got {v}")));
            }
        }
        Ok(())
    }
}

/// Output of the charging approval component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Control {
    Charging,
    Resting,
    Discharging,
}

impl fmt::Display for Control {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Control::Charging => "charging",
            Control::Resting => "resting",
            Control::Discharging => "discharging",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimState {
    /// Elapsed time, s.
    pub t: f64,
    pub soc: f64,
    pub t_bat: f64,
    pub u_bat: f64,
    pub control: Control,
    pub i_demand: f64,
    pub i_charge: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    /// Hours until the battery reached `soc_full`, or the cutoff.
    pub charging_time: f64,
    pub timed_out: bool,
    pub t_bat_peak: f64,
    /// Largest value returned by the monitor.
    pub kappa_peak: f64,
    pub steps: u64,
    pub trace: Option<Vec<SimState>>,
}

/// Coulomb counting over one step.
pub fn soc_step(soc: f64, i_charge: f64, dt: f64, b_size: f64) -> f64 {
    (soc + i_charge * dt / (b_size * 3600.0)).clamp(0.0, 1.0)
}

/// Internal resistance scaled by the factor table.
pub fn r_effective(soc: f64, i_charge: f64, p: &SimParams) -> f64 {
    p.r_internal * p.r_factors.factor(soc, i_charge)
}

/// Forward Euler step of `m c dT/dt = R I^2 + A h (T_amb - T)`.
pub fn temp_step(t_bat: f64, i_charge: f64, t_amb: f64, resistance: f64, p: &SimParams, dt: f64) -> f64 {
    let heat = resistance * i_charge * i_charge + p.heat_transfer() * (t_amb - t_bat);
    t_bat + dt * heat / p.heat_capacity()
}

/// Linear terminal voltage model.
pub fn voltage(soc: f64, i_charge: f64, p: &SimParams) -> f64 {
    p.r_a * i_charge + p.ocv_slope * soc + p.ocv0
}

/// Charging approval with hysteresis.
///
/// A full battery switches to `Discharging`, which is terminal. Otherwise a
/// breached temperature or voltage limit switches to `Resting`, and resting
/// only ends once every monitored quantity is back inside its rearm level.
pub fn approval_step(prev: Control, soc: f64, t_bat: f64, u_bat: f64, lim: &ControlLimits) -> Control {
    if soc >= lim.soc_full || (prev == Control::Discharging && soc >= lim.soc_rearm) {
        return Control::Discharging;
    }
    match prev {
        Control::Resting => {
            let rearmed =
                t_bat <= lim.t_bat_rearm && t_bat >= lim.t_bat_min_rearm && u_bat <= lim.u_bat_rearm;
            if rearmed {
                Control::Charging
            } else {
                Control::Resting
            }
        }
        _ => {
            let breached =
                t_bat > lim.t_bat_max_approve || t_bat < lim.t_bat_min_approve || u_bat > lim.u_bat_max_approve;
            if breached {
                Control::Resting
            } else {
                Control::Charging
            }
        }
    }
}

/// Demanded current. Precedence: rest, heat up, fast charge, slow charge.
pub fn management_step(soc: f64, t_bat: f64, control: Control, i_max: f64, lim: &ControlLimits) -> f64 {
    if control != Control::Charging {
        lim.i_rest
    } else if t_bat < lim.heatup_temp {
        lim.i_heatup
    } else if (lim.fast_soc_lo..=lim.fast_soc_hi).contains(&soc)
        && (lim.fast_temp_lo..=lim.fast_temp_hi).contains(&t_bat)
    {
        i_max
    } else {
        lim.i_slow
    }
}

pub fn station_step(i_demand: f64, i_max: f64) -> f64 {
    i_demand.min(i_max)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SimOptions {
    /// Keep every `n`-th state (plus the first and the last).
    pub trace_stride: Option<u64>,
}

/// Runs one charging process at ambient temperature `t_amb` (deg C) and
/// available current `i_max` (A). `monitor` is called on the initial state and
/// after every step; the outcome keeps the largest value it returned.
pub fn simulate<M>(
    t_amb: f64,
    i_max: f64,
    p: &SimParams,
    lim: &ControlLimits,
    options: SimOptions,
    mut monitor: M,
) -> Result<SimOutcome, SimError>
where
    M: FnMut(&SimState) -> f64,
{
    let mut state = SimState {
        t: 0.0,
        soc: p.soc_init,
        t_bat: p.t_bat_init,
        u_bat: voltage(p.soc_init, 0.0, p),
        control: Control::Charging,
        i_demand: 0.0,
        i_charge: 0.0,
    };
    let max_steps = (p.t_sim_max / p.dt).ceil() as u64;
    let stride = options.trace_stride.map(|s| s.max(1));
    let mut trace = stride.map(|_| vec![state]);
    let mut kappa_peak = monitor(&state);
    let mut t_bat_peak = state.t_bat;
    let mut steps = 0u64;

    let timed_out = loop {
        state.control = approval_step(state.control, state.soc, state.t_bat, state.u_bat, lim);
        if state.control == Control::Discharging {
            break false;
        }
        if steps >= max_steps {
            break true;
        }
        state.i_demand = management_step(state.soc, state.t_bat, state.control, i_max, lim);
        state.i_charge = station_step(state.i_demand, i_max);
        state.u_bat = voltage(state.soc, state.i_charge, p);
        state.soc = soc_step(state.soc, state.i_charge, p.dt, p.b_size);
        let r = r_effective(state.soc, state.i_charge, p);
        state.t_bat = temp_step(state.t_bat, state.i_charge, t_amb, r, p, p.dt);
        steps += 1;
        state.t = steps as f64 * p.dt;

        for (quantity, v) in [("soc", state.soc), ("t_bat", state.t_bat), ("u_bat", state.u_bat)] {
            if !v.is_finite() {
                return Err(SimError::NonFinite { step: steps, quantity });
            }
        }
        t_bat_peak = t_bat_peak.max(state.t_bat);
        kappa_peak = kappa_peak.max(monitor(&state));
        if let (Some(s), Some(tr)) = (stride, trace.as_mut()) {
            if steps.is_multiple_of(s) {
                tr.push(state);
            }
        }
    };

    if let Some(tr) = trace.as_mut() {
        if tr.last().map(|last| last.t) != Some(state.t) {
            tr.push(state);
        } else if let Some(last) = tr.last_mut() {
            // Refresh the control signal that ended the run.
            *last = state;
        }
    }
    Ok(SimOutcome {
        charging_time: state.t / 3600.0,
        timed_out,
        t_bat_peak,
        kappa_peak,
        steps,
        trace,
    })
}

pub const TRACE_HEADER: &str = "t_s,soc,t_bat_c,u_bat_v,control,i_charge_a";

/// Writes a state trace as CSV.
pub fn write_trace<W: Write>(mut out: W, trace: &[SimState]) -> std::io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for s in trace {
        writeln!(
            out,
            "{:.0},{:.6},{:.6},{:.6},{},{:.6}",
            s.t, s.soc, s.t_bat, s.u_bat, s.control, s.i_charge
        )?;
    }
    Ok(())
}
