//! Criticality-guided search for rare critical scenarios of a battery
//! charging system.
//!
//! [`bms`] simulates one charging process, [`criticality`] turns a run into a
//! criticality value in `[0, 1]`, [`partition`] holds the binary partition
//! tree shared by the optimistic optimizers in [`search`], and [`harness`]
//! runs experiments and writes their results.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bms;
pub mod criticality;
pub mod harness;
pub mod partition;
pub mod search;

pub use bms::{simulate, ControlLimits, SimError, SimOutcome, SimParams};
pub use criticality::{BatteryObjective, CriticalitySpec, Objective, ParamSpace, UnitPoint};
pub use search::{EvalRecord, SearchError};
