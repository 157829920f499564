//! Grid-world generator: agents on a uniform grid over a square field of
//! cells, selector measurement rows over a window around each agent, a
//! larger interest window, 4-neighbor mesh communication, and override
//! attacks on a seeded choice of agents.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::attack::{AttackSpec, Disturbance};
use crate::error::{Error, Result};
use crate::field_model::{AgentMeasurement, FieldSystem, FieldVector, InterestSet};
use crate::graph::{check_topology, CommGraph};
use crate::linalg::SparseVec;
use crate::scalar::{real, Real};

#[derive(Debug, Clone)]
pub struct GridScenarioParams<T> {
    /// Cell grid side length; the field has `side * side` components.
    pub side: usize,
    pub agent_rows: usize,
    pub agent_cols: usize,
    pub measurement_window: usize,
    pub interest_window: usize,
    /// Attacked agent count, drawn from the seeded shuffle (ignored when
    /// `attacked_ids` is given).
    pub attacked_count: usize,
    /// Explicit attacked agents (0-based).
    pub attacked_ids: Option<Vec<usize>>,
    pub override_value: T,
    /// Explicit field values (row-major); generated from the seed when
    /// absent.
    pub field: Option<Vec<T>>,
    pub seed: u64,
}

/// Everything the generator decided, including the seeded attacked set.
#[derive(Debug, Clone)]
pub struct GeneratedScenario<T> {
    pub sys: FieldSystem<T>,
    pub graph: CommGraph,
    pub attack: AttackSpec<T>,
    /// Attacked agents (0-based, sorted).
    pub attacked_agents: Vec<usize>,
}

/// Window of `w` cells around `center`, clipped at the grid boundary.
/// The upper end is computed before clipping the lower end, so boundary
/// agents keep windows of up to `w` cells inside the grid.
fn window(center: f64, w: usize, side: usize) -> (usize, usize) {
    let lo = (center - w as f64 / 2.0 + 0.5).floor() as isize;
    let hi = (lo + w as isize).min(side as isize).max(0) as usize;
    (lo.max(0) as usize, hi)
}

/// Smooth random field: bilinear interpolation of a coarse uniform grid,
/// scaled to `[0, 255]` and rounded to whole values.
fn generate_field<T: Real>(rng: &mut ChaCha8Rng, side: usize) -> Vec<T> {
    const COARSE: usize = 8;
    let mut cg = [[0f64; COARSE + 1]; COARSE + 1];
    for row in cg.iter_mut() {
        for v in row.iter_mut() {
            *v = rng.gen::<f64>();
        }
    }
    // per-axis coarse index and fraction
    let coords: Vec<(usize, f64)> = (0..side)
        .map(|i| {
            let x = if side == 1 {
                0.0
            } else {
                i as f64 * COARSE as f64 / (side - 1) as f64
            };
            let idx = (x as usize).min(COARSE - 1);
            (idx, x - idx as f64)
        })
        .collect();
    let mut vals = vec![0f64; side * side];
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for r in 0..side {
        let (i0, fr) = coords[r];
        for c in 0..side {
            let (j0, fc) = coords[c];
            let v = cg[i0][j0] * (1.0 - fr) * (1.0 - fc)
                + cg[i0 + 1][j0] * fr * (1.0 - fc)
                + cg[i0][j0 + 1] * (1.0 - fr) * fc
                + cg[i0 + 1][j0 + 1] * fr * fc;
            vals[r * side + c] = v;
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    let range = hi - lo;
    vals.into_iter()
        .map(|v| {
            let scaled = if range > 0.0 {
                (255.0 * (v - lo) / range).round()
            } else {
                128.0
            };
            real::<T>(scaled)
        })
        .collect()
}

pub fn generate_grid_scenario<T: Real>(
    params: &GridScenarioParams<T>,
) -> Result<GeneratedScenario<T>> {
    let side = params.side;
    let m = side * side;
    let n_agents = params.agent_rows * params.agent_cols;
    if side == 0 || n_agents == 0 {
        return Err(Error::Config("grid dimensions must be positive".into()));
    }
    if params.interest_window < params.measurement_window {
        return Err(Error::Config(
            "interest window must contain the measurement window".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let field_values = match &params.field {
        Some(v) => {
            if v.len() != m {
                return Err(Error::Config(format!(
                    "explicit field has {} values, grid needs {}",
                    v.len(),
                    m
                )));
            }
            v.clone()
        }
        None => generate_field(&mut rng, side),
    };
    let field = FieldVector::new(field_values)?;

    let row_spacing = side as f64 / params.agent_rows as f64;
    let col_spacing = side as f64 / params.agent_cols as f64;
    let mut agents = Vec::with_capacity(n_agents);
    let mut interests = Vec::with_capacity(n_agents);
    let mut coverage = vec![0usize; m];
    for ar in 0..params.agent_rows {
        for ac in 0..params.agent_cols {
            let pr = (ar as f64 + 0.5) * row_spacing;
            let pc = (ac as f64 + 0.5) * col_spacing;
            let (mr0, mr1) = window(pr, params.measurement_window, side);
            let (mc0, mc1) = window(pc, params.measurement_window, side);
            let mut rows = Vec::with_capacity((mr1 - mr0) * (mc1 - mc0));
            for r in mr0..mr1 {
                for c in mc0..mc1 {
                    let cell = r * side + c;
                    coverage[cell] += 1;
                    rows.push(SparseVec::new(m, vec![(cell, T::one())])?);
                }
            }
            agents.push(AgentMeasurement::new(m, rows)?);
            let (ir0, ir1) = window(pr, params.interest_window, side);
            let (ic0, ic1) = window(pc, params.interest_window, side);
            let cells: Vec<usize> = (ir0..ir1)
                .flat_map(|r| (ic0..ic1).map(move |c| r * side + c))
                .collect();
            interests.push(InterestSet::new(cells)?);
        }
    }
    if let Some(cell) = coverage.iter().position(|&c| c == 0) {
        return Err(Error::Config(format!(
            "cell ({}, {}) is measured by no agent; enlarge the measurement window",
            cell / side + 1,
            cell % side + 1
        )));
    }
    let sys = FieldSystem::new(field, agents, interests)?;

    let mut edges = Vec::new();
    for ar in 0..params.agent_rows {
        for ac in 0..params.agent_cols {
            let id = ar * params.agent_cols + ac;
            if ac + 1 < params.agent_cols {
                edges.push((id, id + 1));
            }
            if ar + 1 < params.agent_rows {
                edges.push((id, id + params.agent_cols));
            }
        }
    }
    let graph = CommGraph::new(n_agents, edges)?;

    let report = sys.validate();
    if !report.passed() {
        return Err(Error::Config(format!(
            "generated system violates assumptions: {}",
            report.failure_summary()
        )));
    }
    let topo = check_topology(&graph, &sys)?;
    if !topo.passed() {
        return Err(Error::Config(format!(
            "interest subnetworks disconnected for cells (1-based): {:?}",
            topo.disconnected
                .iter()
                .take(20)
                .map(|c| c + 1)
                .collect::<Vec<_>>()
        )));
    }

    let mut attacked: Vec<usize> = match &params.attacked_ids {
        Some(ids) => {
            if ids.iter().any(|&id| id >= n_agents) {
                return Err(Error::Config("attacked agent id out of range".into()));
            }
            ids.clone()
        }
        None => {
            let mut perm: Vec<usize> = (0..n_agents).collect();
            perm.shuffle(&mut rng);
            perm.truncate(params.attacked_count);
            perm
        }
    };
    attacked.sort_unstable();
    attacked.dedup();

    let mut entries = std::collections::BTreeMap::new();
    for &n in &attacked {
        let off = sys.row_offset(n);
        for p in off..off + sys.agent(n).row_count() {
            entries.insert(p, Disturbance::Override(params.override_value));
        }
    }
    let attack = AttackSpec::new(entries)?;

    Ok(GeneratedScenario {
        sys,
        graph,
        attack,
        attacked_agents: attacked,
    })
}
