//! The per-agent recovery iteration: decaying weight schedules, interest
//! censorship of exchanged states, the saturated innovation gain, and the
//! synchronous round driver. The non-resilient baseline (identical update
//! with the gain pinned to 1) lives here too.

use std::str::FromStr;

use crate::attack::AttackSpec;
use crate::error::{Error, Result};
use crate::field_model::{stack_measurements, FieldSystem, InterestSet};
use crate::graph::{check_topology, CommGraph};
use crate::linalg::SparseVec;
use crate::scalar::{iter_base, Real};

/// Weight-sequence hyperparameters:
/// `alpha_t = a/(t+1)^tau1`, `beta_t = b/(t+1)^tau2`,
/// `gamma_t = Gamma/(t+1)^tau_gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams<T> {
    pub a: T,
    pub b: T,
    pub tau1: T,
    pub tau2: T,
    pub gamma: T,
    pub tau_gamma: T,
}

impl<T: Real> HyperParams<T> {
    /// Validates `a, b, Gamma > 0`, `0 < tau2 < tau1 < 1` and
    /// `0 < tau_gamma < tau1 - tau2`; the orderings make the consensus
    /// weight dominate the innovation weight and drive the saturated
    /// innovation contribution `gamma_t * alpha_t / beta_t` to zero.
    pub fn new(a: T, b: T, tau1: T, tau2: T, gamma: T, tau_gamma: T) -> Result<Self> {
        let zero = T::zero();
        if !(a > zero && b > zero && gamma > zero) {
            return Err(Error::Config(
                "hyperparameters a, b, Gamma must be positive".into(),
            ));
        }
        for v in [a, b, tau1, tau2, gamma, tau_gamma] {
            if !v.is_finite() {
                return Err(Error::Config("hyperparameters must be finite".into()));
            }
        }
        if !(zero < tau2 && tau2 < tau1 && tau1 < T::one()) {
            return Err(Error::Config(format!(
                "exponents must satisfy 0 < tau2 < tau1 < 1 (got tau1 = {}, tau2 = {})",
                tau1, tau2
            )));
        }
        if !(zero < tau_gamma && tau_gamma < tau1 - tau2) {
            return Err(Error::Config(format!(
                "threshold exponent must satisfy 0 < tau_gamma < tau1 - tau2 \
                 (got tau_gamma = {}, tau1 - tau2 = {})",
                tau_gamma,
                tau1 - tau2
            )));
        }
        Ok(Self {
            a,
            b,
            tau1,
            tau2,
            gamma,
            tau_gamma,
        })
    }

    /// The stock configuration used by the grid experiments.
    pub fn defaults() -> Self {
        Self::new(
            crate::scalar::real(1.0),
            crate::scalar::real(0.084),
            crate::scalar::real(0.26),
            crate::scalar::real(0.001),
            crate::scalar::real(40.0),
            crate::scalar::real(0.25),
        )
        .expect("stock hyperparameters are valid")
    }

    /// Innovation weight `a/(t+1)^tau1`.
    pub fn alpha(&self, t: usize) -> T {
        self.a / iter_base::<T>(t).powf(self.tau1)
    }

    /// Consensus weight `b/(t+1)^tau2`.
    pub fn beta(&self, t: usize) -> T {
        self.b / iter_base::<T>(t).powf(self.tau2)
    }

    /// Saturation threshold `Gamma/(t+1)^tau_gamma`.
    pub fn gamma_threshold(&self, t: usize) -> T {
        self.gamma / iter_base::<T>(t).powf(self.tau_gamma)
    }
}

/// `min(1, gamma/|residual|)`, the per-row innovation gain. Defined as 1
/// at zero residual (the continuous limit; the gain multiplies a zero
/// innovation there anyway).
pub fn saturation_gain<T: Real>(residual: T, gamma: T) -> T {
    let mag = residual.abs();
    if mag <= gamma {
        T::one()
    } else {
        gamma / mag
    }
}

/// The gained innovation component `k * residual`, computed as
/// `sign(residual) * min(|residual|, gamma)` so the saturation bound
/// holds exactly in floating point (dividing by `|residual|` and
/// multiplying back can overshoot by an ulp).
pub fn saturated_residual<T: Real>(residual: T, gamma: T) -> T {
    if residual.abs() <= gamma {
        residual
    } else if residual > T::zero() {
        gamma
    } else {
        -gamma
    }
}

/// Re-indexes a neighbor's state into the receiver's interest
/// coordinates: component `i` is the neighbor's estimate of the
/// receiver's `i`-th interest component when the neighbor tracks it,
/// else 0.
pub fn censor_received<T: Real>(x_l: &[T], i_l: &InterestSet, i_n: &InterestSet) -> Vec<T> {
    i_n.iter()
        .map(|m| match i_l.rank_of(m) {
            Some(r) => x_l[r],
            None => T::zero(),
        })
        .collect()
}

/// The matching projection of the receiver's own state: component `i`
/// kept when the neighbor tracks that component, else 0. Subtracting the
/// two censored vectors touches only shared components.
pub fn censor_self<T: Real>(x_n: &[T], i_n: &InterestSet, i_l: &InterestSet) -> Vec<T> {
    i_n.iter()
        .zip(x_n)
        .map(|(m, &v)| if i_l.contains(m) { v } else { T::zero() })
        .collect()
}

/// Which update rule to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Saturated innovation gains (attack-resilient).
    Resilient,
    /// The same update with every gain pinned to 1.
    Cirfe,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Resilient => "resilient",
            Algorithm::Cirfe => "cirfe",
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "resilient" => Ok(Algorithm::Resilient),
            "cirfe" => Ok(Algorithm::Cirfe),
            other => Err(Error::Config(format!(
                "unknown algorithm '{}' (expected 'resilient' or 'cirfe')",
                other
            ))),
        }
    }
}

/// When to keep full per-agent state snapshots in the trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapshotPolicy {
    /// No snapshots (final states are always kept).
    None,
    /// Iterations 0, k, 2k, ... plus the final iteration.
    Every(usize),
    /// Every iteration; only sensible at desk scale.
    All,
}

impl SnapshotPolicy {
    fn wants(&self, t: usize, last: usize) -> bool {
        match *self {
            SnapshotPolicy::None => false,
            SnapshotPolicy::Every(k) => t == last || (k > 0 && t % k == 0),
            SnapshotPolicy::All => true,
        }
    }
}

/// Output of a simulation run.
#[derive(Debug, Clone)]
pub struct SimulationTrace<T> {
    pub algorithm: Algorithm,
    pub iterations: usize,
    /// Worst normalized per-agent error, indexed by iteration (length
    /// `iterations + 1`; entry 0 is the all-zeros initial state).
    pub rmse: Vec<T>,
    /// `(iteration, states)` pairs per the snapshot policy.
    pub snapshots: Vec<(usize, Vec<Vec<T>>)>,
    pub final_states: Vec<Vec<T>>,
    /// Max over the run of `|k_p * residual| - gamma_t` on applied
    /// innovations; nonpositive iff saturation never overshot. Only
    /// tracked for the resilient rule.
    pub max_saturation_excess: Option<T>,
    /// Last iteration at which some gain was strictly below 1.
    pub last_saturated: Option<usize>,
}

/// Precomputed per-round machinery: restricted measurement rows,
/// attacked readings, and per-neighbor shared-component index maps.
pub struct Simulator<'a, T> {
    sys: &'a FieldSystem<T>,
    graph: &'a CommGraph,
    hp: HyperParams<T>,
    algorithm: Algorithm,
    restricted: Vec<Vec<SparseVec<T>>>,
    /// Measurements sliced per agent, in local row order.
    y: Vec<Vec<T>>,
    /// For agent `n`, one entry per neighbor (in `graph.neighbors(n)`
    /// order): pairs `(rank in n's interest, rank in l's interest)` of
    /// the shared components.
    shared: Vec<Vec<Vec<(usize, usize)>>>,
    states: Vec<Vec<T>>,
    t: usize,
    max_excess: Option<T>,
    last_saturated: Option<usize>,
}

fn shared_ranks(a: &InterestSet, b: &InterestSet) -> Vec<(usize, usize)> {
    // both component lists are sorted; merge
    let (ca, cb) = (a.components(), b.components());
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < ca.len() && j < cb.len() {
        match ca[i].cmp(&cb[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push((i, j));
                i += 1;
                j += 1;
            }
        }
    }
    out
}

impl<'a, T: Real> Simulator<'a, T> {
    /// Structural setup only; `run` performs the assumption checks.
    pub fn new(
        sys: &'a FieldSystem<T>,
        graph: &'a CommGraph,
        attack: Option<&AttackSpec<T>>,
        hp: HyperParams<T>,
        algorithm: Algorithm,
    ) -> Result<Self> {
        if graph.vertex_count() != sys.agent_count() {
            return Err(Error::Config(format!(
                "graph has {} vertices, system has {} agents",
                graph.vertex_count(),
                sys.agent_count()
            )));
        }
        let stacked = stack_measurements(sys, attack)?;
        let n_agents = sys.agent_count();
        let mut y = Vec::with_capacity(n_agents);
        for n in 0..n_agents {
            let off = sys.row_offset(n);
            y.push(stacked[off..off + sys.agent(n).row_count()].to_vec());
        }
        let restricted = (0..n_agents)
            .map(|n| sys.restricted_rows(n))
            .collect::<Result<Vec<_>>>()?;
        let shared = (0..n_agents)
            .map(|n| {
                graph
                    .neighbors(n)
                    .iter()
                    .map(|&l| shared_ranks(sys.interest(n), sys.interest(l)))
                    .collect()
            })
            .collect();
        let states = (0..n_agents)
            .map(|n| vec![T::zero(); sys.interest(n).len()])
            .collect();
        Ok(Self {
            sys,
            graph,
            hp,
            algorithm,
            restricted,
            y,
            shared,
            states,
            t: 0,
            max_excess: None,
            last_saturated: None,
        })
    }

    pub fn iteration(&self) -> usize {
        self.t
    }

    pub fn states(&self) -> &[Vec<T>] {
        &self.states
    }

    /// Overrides one agent's state (for probing single updates from a
    /// chosen configuration).
    pub fn set_state(&mut self, n: usize, state: Vec<T>) -> Result<()> {
        if state.len() != self.sys.interest(n).len() {
            return Err(Error::Config(format!(
                "state length {} does not match agent {}'s interest size {}",
                state.len(),
                n + 1,
                self.sys.interest(n).len()
            )));
        }
        self.states[n] = state;
        Ok(())
    }

    /// One synchronous round: every agent computes its `t+1` state from
    /// the frozen snapshot of all iteration-`t` states.
    pub fn step(&mut self) {
        let alpha = self.hp.alpha(self.t);
        let beta = self.hp.beta(self.t);
        let gamma = self.hp.gamma_threshold(self.t);
        let mut next = Vec::with_capacity(self.states.len());
        for n in 0..self.states.len() {
            next.push(self.updated_state(n, alpha, beta, gamma));
        }
        self.states = next;
        self.t += 1;
    }

    fn updated_state(&mut self, n: usize, alpha: T, beta: T, gamma: T) -> Vec<T> {
        let x = &self.states[n];
        let mut upd = x.clone();
        // consensus over shared components only: the censored difference
        // is zero wherever the neighbor does not track the component
        for (l_pos, &l) in self.graph.neighbors(n).iter().enumerate() {
            let xl = &self.states[l];
            for &(i_n, i_l) in &self.shared[n][l_pos] {
                upd[i_n] -= beta * (x[i_n] - xl[i_l]);
            }
        }
        // innovation with per-row saturated gain
        let mut excess = self.max_excess;
        let mut saturated = false;
        for (p, row) in self.restricted[n].iter().enumerate() {
            let r = self.y[n][p] - row.dot(x);
            let s = match self.algorithm {
                Algorithm::Resilient => {
                    let s = saturated_residual(r, gamma);
                    if s != r {
                        saturated = true;
                    }
                    let e = s.abs() - gamma;
                    excess = Some(match excess {
                        Some(prev) => prev.max(e),
                        None => e,
                    });
                    s
                }
                Algorithm::Cirfe => r,
            };
            row.scatter_add(&mut upd, alpha * s);
        }
        self.max_excess = excess;
        if saturated {
            self.last_saturated = Some(self.t);
        }
        upd
    }
}

/// Runs `iters` synchronous rounds from the all-zeros initial state.
/// Checks the standing assumptions and per-component connectivity up
/// front; the trajectory is deterministic in the inputs.
pub fn run<T: Real>(
    sys: &FieldSystem<T>,
    graph: &CommGraph,
    attack: Option<&AttackSpec<T>>,
    hp: HyperParams<T>,
    iters: usize,
    algorithm: Algorithm,
    snapshots: SnapshotPolicy,
) -> Result<SimulationTrace<T>> {
    let report = sys.validate();
    if !report.passed() {
        return Err(Error::Assumption(report.failure_summary()));
    }
    let topo = check_topology(graph, sys)?;
    if !topo.passed() {
        return Err(Error::Assumption(format!(
            "interest subnetworks disconnected for components (1-based): {:?}",
            topo.disconnected.iter().map(|m| m + 1).collect::<Vec<_>>()
        )));
    }

    let mut sim = Simulator::new(sys, graph, attack, hp, algorithm)?;
    let mut rmse = Vec::with_capacity(iters + 1);
    let mut snaps = Vec::new();
    rmse.push(crate::scenario::metrics::max_normalized_rmse(
        sim.states(),
        sys,
    ));
    if snapshots.wants(0, iters) {
        snaps.push((0, sim.states().to_vec()));
    }
    for t in 1..=iters {
        sim.step();
        rmse.push(crate::scenario::metrics::max_normalized_rmse(
            sim.states(),
            sys,
        ));
        if snapshots.wants(t, iters) {
            snaps.push((t, sim.states().to_vec()));
        }
    }
    Ok(SimulationTrace {
        algorithm,
        iterations: iters,
        rmse,
        snapshots: snaps,
        final_states: sim.states().to_vec(),
        max_saturation_excess: sim.max_excess,
        last_saturated: sim.last_saturated,
    })
}
