use super::{rng_for, EvalRecord, Evaluator, SearchError};
use crate::criticality::{Objective, UnitPoint};
use rand::Rng;

/// Uniform Monte Carlo sampling of the unit cube.
pub fn mc_run<O: Objective + ?Sized>(
    n_max: usize,
    seed: u64,
    objective: &O,
    c_kappa: f64,
) -> Result<Vec<EvalRecord>, SearchError> {
    let mut rng = rng_for(seed, 0);
    let mut ev = Evaluator::new(objective, n_max, c_kappa);
    while !ev.budget.exhausted() {
        let point = UnitPoint((0..objective.dim()).map(|_| rng.random::<f64>()).collect());
        ev.eval(point, None, None)?;
    }
    Ok(ev.trace)
}
