//! Adversary model: which scalar measurements are compromised, the
//! disturbance applied to them, the attacker leverage constant and the
//! resilience condition.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::field_model::{FieldSystem, Grammian};
use crate::linalg::{SparseVec, SymMat};
use crate::scalar::{real, Real};

/// Exact vertex enumeration of the leverage constant is performed up to
/// this many compromised measurements (about a million sign vertices).
pub const ENUMERATION_LIMIT: usize = 20;

/// How a single compromised measurement is altered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Disturbance<T> {
    /// `y = h^T theta + a` with a fixed nonzero offset.
    Additive(T),
    /// The reading is replaced by a target value; the equivalent additive
    /// disturbance is derived at application time.
    Override(T),
}

/// The compromised measurement set and its disturbances, keyed by global
/// measurement index.
#[derive(Debug, Clone, Default)]
pub struct AttackSpec<T> {
    entries: BTreeMap<usize, Disturbance<T>>,
}

impl<T: Real> AttackSpec<T> {
    pub fn new(entries: BTreeMap<usize, Disturbance<T>>) -> Result<Self> {
        for (&p, d) in &entries {
            if let Disturbance::Additive(a) = d {
                if *a == T::zero() {
                    return Err(Error::Config(format!(
                        "additive disturbance at measurement {} is zero; \
                         a compromised measurement must actually be disturbed",
                        p + 1
                    )));
                }
                if !a.is_finite() {
                    return Err(Error::Config(format!(
                        "disturbance at measurement {} is not finite",
                        p + 1
                    )));
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// The nominal compromised index set (before override neutralization).
    pub fn compromised(&self) -> BTreeSet<usize> {
        self.entries.keys().copied().collect()
    }

    pub fn entries(&self) -> &BTreeMap<usize, Disturbance<T>> {
        &self.entries
    }

    /// Additive disturbance on every row of one agent.
    pub fn additive_on_agent(
        sys: &FieldSystem<T>,
        agent: usize,
        offset: T,
    ) -> Result<Self> {
        let start = sys.row_offset(agent);
        let count = sys.agent(agent).row_count();
        Self::new(
            (start..start + count)
                .map(|p| (p, Disturbance::Additive(offset)))
                .collect(),
        )
    }

    /// Override every row of one agent to a fixed reading.
    pub fn override_agent(sys: &FieldSystem<T>, agent: usize, target: T) -> Result<Self> {
        let start = sys.row_offset(agent);
        let count = sys.agent(agent).row_count();
        Self::new(
            (start..start + count)
                .map(|p| (p, Disturbance::Override(target)))
                .collect(),
        )
    }
}

/// Result of applying an attack to the clean stacked measurement.
#[derive(Debug, Clone)]
pub struct AppliedAttack<T> {
    pub measurements: Vec<T>,
    /// Indices whose reading actually changed.
    pub effective: BTreeSet<usize>,
    /// Override entries whose target equaled the clean reading; reported
    /// and excluded from the effective compromised set.
    pub neutralized: Vec<usize>,
}

/// `y = H theta + a`. Entries outside the compromised set are returned
/// bit-identical to the clean readings.
pub fn apply_attack<T: Real>(
    sys: &FieldSystem<T>,
    spec: &AttackSpec<T>,
) -> Result<AppliedAttack<T>> {
    let mut y = sys.clean_measurements();
    let p_total = y.len();
    let mut effective = BTreeSet::new();
    let mut neutralized = Vec::new();
    for (&p, d) in spec.entries() {
        if p >= p_total {
            return Err(Error::Config(format!(
                "compromised measurement index {} out of range (P = {})",
                p + 1,
                p_total
            )));
        }
        match *d {
            Disturbance::Additive(a) => {
                y[p] += a;
                effective.insert(p);
            }
            Disturbance::Override(target) => {
                if target == y[p] {
                    neutralized.push(p);
                } else {
                    y[p] = target;
                    effective.insert(p);
                }
            }
        }
    }
    Ok(AppliedAttack {
        measurements: y,
        effective,
        neutralized,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeltaMethod {
    /// Empty compromised set.
    Empty,
    /// Exact maximum over the 2^|A| sign vertices of the hypercube.
    VertexEnumeration,
    /// Exact closed form for canonical selector rows:
    /// sqrt(sum_m c_m^2) with c_m the per-component compromised count.
    SelectorClosedForm,
    /// Upper bound |A|, used when neither exact route applies.
    CardinalityBound,
}

/// The attacker leverage constant: the maximum of `||H_A^T v||_2` over
/// the infinity-norm unit ball.
#[derive(Debug, Clone, Copy)]
pub struct DeltaA<T> {
    pub value: T,
    pub exact: bool,
    pub method: DeltaMethod,
}

fn compromised_rows<'a, T: Real>(
    sys: &'a FieldSystem<T>,
    compromised: &BTreeSet<usize>,
) -> Result<Vec<&'a SparseVec<T>>> {
    compromised.iter().map(|&p| sys.global_row(p)).collect()
}

/// Exact enumeration over sign vertices. The maximized norm is convex,
/// so the maximum over the cube is attained at a vertex; by symmetry
/// only half of the vertices need visiting. Gray-code order keeps each
/// step to a single row flip.
pub fn delta_a_enumerated<T: Real>(rows: &[&SparseVec<T>]) -> Result<T> {
    let k = rows.len();
    if k == 0 {
        return Ok(T::zero());
    }
    if k > ENUMERATION_LIMIT {
        return Err(Error::Runtime(format!(
            "refusing to enumerate 2^{} sign vertices",
            k
        )));
    }
    // compact the support so the accumulator is small
    let mut support: Vec<usize> = rows.iter().flat_map(|r| r.indices()).collect();
    support.sort_unstable();
    support.dedup();
    let rank = |i: usize| support.binary_search(&i).unwrap();
    let compact: Vec<Vec<(usize, T)>> = rows
        .iter()
        .map(|r| r.iter().map(|(i, v)| (rank(i), v)).collect())
        .collect();

    let mut acc = vec![T::zero(); support.len()];
    for r in &compact {
        for &(i, v) in r {
            acc[i] += v;
        }
    }
    let mut sq: T = acc.iter().map(|&x| x * x).sum();
    let mut best = sq;
    let mut signs = vec![T::one(); k];

    // first sign fixed by symmetry; Gray code over the remaining k-1
    let steps: u64 = 1u64 << (k - 1);
    for step in 1..steps {
        let flip = step.trailing_zeros() as usize + 1;
        let s = signs[flip];
        let two = real::<T>(2.0);
        let four = real::<T>(4.0);
        let mut dot = T::zero();
        let mut nsq = T::zero();
        for &(i, v) in &compact[flip] {
            dot += v * acc[i];
            nsq += v * v;
        }
        sq = sq - four * s * dot + four * nsq;
        for &(i, v) in &compact[flip] {
            acc[i] -= two * s * v;
        }
        signs[flip] = -s;
        if sq > best {
            best = sq;
        }
    }
    Ok(best.max(T::zero()).sqrt())
}

/// Closed form when every compromised row is a canonical selector.
/// Returns `None` when a non-selector row is present.
pub fn delta_a_selector_closed_form<T: Real>(rows: &[&SparseVec<T>]) -> Option<T> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for r in rows {
        let m = r.as_unit_selector()?;
        *counts.entry(m).or_insert(0) += 1;
    }
    let sum: T = counts
        .values()
        .map(|&c| {
            let c = T::from_usize(c).unwrap();
            c * c
        })
        .sum();
    Some(sum.sqrt())
}

/// The leverage constant for a compromised index set, exact whenever
/// enumeration or the selector closed form applies, otherwise the |A|
/// upper bound flagged as inexact.
pub fn delta_a<T: Real>(sys: &FieldSystem<T>, compromised: &BTreeSet<usize>) -> Result<DeltaA<T>> {
    if compromised.is_empty() {
        return Ok(DeltaA {
            value: T::zero(),
            exact: true,
            method: DeltaMethod::Empty,
        });
    }
    let rows = compromised_rows(sys, compromised)?;
    if rows.len() <= ENUMERATION_LIMIT {
        return Ok(DeltaA {
            value: delta_a_enumerated(&rows)?,
            exact: true,
            method: DeltaMethod::VertexEnumeration,
        });
    }
    if let Some(value) = delta_a_selector_closed_form(&rows) {
        return Ok(DeltaA {
            value,
            exact: true,
            method: DeltaMethod::SelectorClosedForm,
        });
    }
    Ok(DeltaA {
        value: T::from_usize(rows.len()).unwrap(),
        exact: false,
        method: DeltaMethod::CardinalityBound,
    })
}

/// The resilience condition: minimum eigenvalue of the uncompromised
/// Grammian strictly above the attacker leverage.
#[derive(Debug, Clone)]
pub struct ResilienceReport<T> {
    pub lambda_min_clean: T,
    pub delta: DeltaA<T>,
    /// Strict inequality, taken literally: equality does not hold.
    pub holds: bool,
    /// The margin `lambda_min - delta` (meaningful when `delta.exact`).
    pub margin: T,
}

fn clean_grammian<T: Real>(sys: &FieldSystem<T>, compromised: &BTreeSet<usize>) -> Grammian<T> {
    if sys.all_selector_rows() {
        let mut d = vec![T::zero(); sys.field_len()];
        for (n, agent) in sys.agents().iter().enumerate() {
            let off = sys.row_offset(n);
            for (local, row) in agent.rows().iter().enumerate() {
                if !compromised.contains(&(off + local)) {
                    d[row.as_unit_selector().expect("selector")] += T::one();
                }
            }
        }
        Grammian::Diagonal(d)
    } else {
        let mut g = SymMat::zeros(sys.field_len());
        for (n, agent) in sys.agents().iter().enumerate() {
            let off = sys.row_offset(n);
            for (local, row) in agent.rows().iter().enumerate() {
                if !compromised.contains(&(off + local)) {
                    g.add_outer(row, T::one());
                }
            }
        }
        Grammian::Dense(g)
    }
}

pub fn resilience_check<T: Real>(
    sys: &FieldSystem<T>,
    compromised: &BTreeSet<usize>,
) -> Result<ResilienceReport<T>> {
    if let Some(&p) = compromised.iter().next_back() {
        if p >= sys.total_measurements() {
            return Err(Error::Config(format!(
                "compromised index {} out of range (P = {})",
                p + 1,
                sys.total_measurements()
            )));
        }
    }
    let lambda_min_clean = clean_grammian(sys, compromised).min_eigenvalue();
    let delta = delta_a(sys, compromised)?;
    Ok(ResilienceReport {
        lambda_min_clean,
        delta,
        holds: lambda_min_clean > delta.value,
        margin: lambda_min_clean - delta.value,
    })
}
