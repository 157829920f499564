//! Experiment metrics: the normalized worst-agent error and the
//! worst-over-interested-agents recovered field.

use crate::error::{Error, Result};
use crate::field_model::FieldSystem;
use crate::recovery::SimulationTrace;
use crate::scalar::Real;

/// `max_n ||x_n - theta_{I_n}||_2 / sqrt(|I_n|)`.
pub fn max_normalized_rmse<T: Real>(states: &[Vec<T>], sys: &FieldSystem<T>) -> T {
    let theta = sys.field().values();
    let mut worst = T::zero();
    for (n, state) in states.iter().enumerate() {
        let interest = sys.interest(n);
        let mut sq = T::zero();
        for (r, m) in interest.iter().enumerate() {
            let d = state[r] - theta[m];
            sq += d * d;
        }
        let v = (sq / T::from_usize(interest.len()).unwrap()).sqrt();
        worst = worst.max(v);
    }
    worst
}

/// One cell of the recovered-field dump (all indices 0-based; the CSV
/// layer shifts to 1-based).
#[derive(Debug, Clone, Copy)]
pub struct CellReport<T> {
    pub row: usize,
    pub col: usize,
    pub truth: T,
    /// Estimate with the largest absolute error among interested agents.
    pub recovered: T,
    pub abs_error: T,
}

/// Per-cell worst recovered value over the interested agents, from the
/// final states of a trace. `side` is the cell-grid side length.
pub fn worst_case_field<T: Real>(
    trace: &SimulationTrace<T>,
    sys: &FieldSystem<T>,
    side: usize,
) -> Result<Vec<CellReport<T>>> {
    if side * side != sys.field_len() {
        return Err(Error::Config(format!(
            "side {} does not square to the field length {}",
            side,
            sys.field_len()
        )));
    }
    let theta = sys.field().values();
    let mut out = Vec::with_capacity(sys.field_len());
    for m in 0..sys.field_len() {
        let group = sys.interest_group(m);
        if group.is_empty() {
            return Err(Error::Assumption(format!(
                "no agent is interested in cell {}",
                m + 1
            )));
        }
        let mut worst_val = T::zero();
        let mut worst_err = T::neg_infinity();
        for &n in group {
            let r = sys.interest(n).rank_of(m).expect("agent in interest group");
            let est = trace.final_states[n][r];
            let err = (est - theta[m]).abs();
            if err > worst_err {
                worst_err = err;
                worst_val = est;
            }
        }
        out.push(CellReport {
            row: m / side,
            col: m % side,
            truth: theta[m],
            recovered: worst_val,
            abs_error: worst_err,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_model::{AgentMeasurement, FieldVector, InterestSet};
    use crate::linalg::SparseVec;
    use crate::recovery::Algorithm;

    fn selector(m: usize, dim: usize) -> SparseVec<f64> {
        SparseVec::new(dim, vec![(m, 1.0)]).unwrap()
    }

    fn system(theta: Vec<f64>, interests: Vec<Vec<usize>>) -> FieldSystem<f64> {
        let m = theta.len();
        let field = FieldVector::new(theta).unwrap();
        let agents = interests
            .iter()
            .map(|i| {
                AgentMeasurement::new(m, i.iter().map(|&c| selector(c, m)).collect()).unwrap()
            })
            .collect();
        let interests = interests
            .into_iter()
            .map(|i| InterestSet::new(i).unwrap())
            .collect();
        FieldSystem::new(field, agents, interests).unwrap()
    }

    fn trace_with(final_states: Vec<Vec<f64>>) -> SimulationTrace<f64> {
        SimulationTrace {
            algorithm: Algorithm::Resilient,
            iterations: 0,
            rmse: vec![0.0],
            snapshots: vec![],
            final_states,
            max_saturation_excess: None,
            last_saturated: None,
        }
    }

    #[test]
    fn rmse_examples() {
        let sys = system(vec![5.0], vec![vec![0]]);
        assert_eq!(max_normalized_rmse(&[vec![5.0]], &sys), 0.0);
        assert_eq!(max_normalized_rmse(&[vec![2.0]], &sys), 3.0);

        // zero states against a constant field: the normalization makes
        // the metric equal the constant
        let sys = system(vec![7.0; 4], vec![(0..4).collect()]);
        assert!((max_normalized_rmse(&[vec![0.0; 4]], &sys) - 7.0).abs() < 1e-12);
    }

    #[test]
    fn worst_case_selects_largest_error() {
        // cell 0 tracked by both agents; agent 2 is off by +10
        let sys = system(vec![100.0], vec![vec![0], vec![0]]);
        let trace = trace_with(vec![vec![100.0], vec![110.0]]);
        let cells = worst_case_field(&trace, &sys, 1).unwrap();
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].recovered, 110.0);
        assert_eq!(cells[0].abs_error, 10.0);
    }

    #[test]
    fn worst_case_exact_states() {
        let sys = system(vec![1.0, 2.0, 3.0, 4.0], vec![(0..4).collect()]);
        let trace = trace_with(vec![vec![1.0, 2.0, 3.0, 4.0]]);
        let cells = worst_case_field(&trace, &sys, 2).unwrap();
        for c in &cells {
            assert_eq!(c.recovered, c.truth);
            assert_eq!(c.abs_error, 0.0);
        }
        assert_eq!(cells[3].row, 1);
        assert_eq!(cells[3].col, 1);
    }
}
