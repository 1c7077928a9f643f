//! Budgeted search strategies over an [`Objective`].
//!
//! Every strategy returns the sequence of fresh objective evaluations it made,
//! in order. Random strategies draw from a `ChaCha8Rng` seeded with
//! `seed_from_u64(seed)`; independent instances inside one run use distinct
//! streams of the same seed.

mod doo;
mod hoo;
mod mc;
mod poo;
mod soo;

pub use doo::{doo_run, DooParams};
pub use hoo::{hoo_b_value, hoo_run, hoo_u_value, Hoo, HooParams};
pub use mc::mc_run;
pub use poo::{poo_instance_count, poo_run, poo_schedule, PooInstanceReport, PooParams, PooRun};
pub use soo::{soo_h_max, soo_run, SooParams};

use crate::bms::SimError;
use crate::criticality::{Objective, UnitPoint};
use crate::partition::NodeId;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error("invalid hyperparameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },
    #[error(transparent)]
    Sim(#[from] SimError),
}

pub(crate) fn check_open_unit(field: &'static str, v: f64) -> Result<(), SearchError> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(SearchError::InvalidParam { field, reason: format!("must lie in (0, 1), got {v}") })
    }
}

pub(crate) fn check_positive(field: &'static str, v: f64) -> Result<(), SearchError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(SearchError::InvalidParam { field, reason: format!("must be positive, got {v}") })
    }
}

pub(crate) fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub n_max: usize,
    pub n_used: usize,
}

impl Budget {
    pub fn new(n_max: usize) -> Self {
        Budget { n_max, n_used: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.n_max - self.n_used
    }

    pub fn exhausted(&self) -> bool {
        self.n_used >= self.n_max
    }
}

/// One fresh objective evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    /// 1-based position in the trace.
    pub index: usize,
    pub point: UnitPoint,
    pub kappa: f64,
    pub critical: bool,
    pub node: Option<NodeId>,
    pub instance_id: Option<usize>,
}

/// Evaluates points against the objective, charging the budget and
/// appending to the trace.
pub(crate) struct Evaluator<'a, O: ?Sized> {
    objective: &'a O,
    c_kappa: f64,
    pub budget: Budget,
    pub trace: Vec<EvalRecord>,
}

impl<'a, O: Objective + ?Sized> Evaluator<'a, O> {
    pub fn new(objective: &'a O, n_max: usize, c_kappa: f64) -> Self {
        Evaluator { objective, c_kappa, budget: Budget::new(n_max), trace: Vec::with_capacity(n_max) }
    }

    pub fn eval(&mut self, point: UnitPoint, node: Option<NodeId>, instance_id: Option<usize>) -> Result<f64, SearchError> {
        debug_assert!(!self.budget.exhausted());
        let kappa = self.objective.evaluate(&point)?;
        self.budget.n_used += 1;
        self.trace.push(EvalRecord {
            index: self.trace.len() + 1,
            point,
            kappa,
            critical: kappa >= self.c_kappa,
            node,
            instance_id,
        });
        Ok(kappa)
    }
}

pub fn critical_count(trace: &[EvalRecord]) -> usize {
    trace.iter().filter(|r| r.critical).count()
}

/// Prefix sums of the critical flag: `(n, critical events among the first n)`.
pub fn cumulative_curve(trace: &[EvalRecord]) -> Vec<(usize, usize)> {
    trace
        .iter()
        .scan(0, |acc, r| {
            *acc += usize::from(r.critical);
            Some((r.index, *acc))
        })
        .collect()
}
