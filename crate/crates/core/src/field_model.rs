//! The unknown field, per-agent measurement structure, interest sets and
//! the global scalar-measurement indexing.
//!
//! Conventions: the field has `M` components, agent `n` owns `P_n`
//! measurement rows, and the rows of all agents are numbered globally
//! `1..=P` in agent order. Internally everything is 0-based; scenario
//! files, reports and CSV output use the 1-based numbering.

use std::collections::BTreeSet;

use crate::attack::AttackSpec;
use crate::error::{Error, Result};
use crate::linalg::{SparseVec, SymMat};
use crate::scalar::{real, Real};

/// Rows must have unit Euclidean norm within this tolerance.
pub const UNIT_NORM_TOL: f64 = 1e-12;
/// The observability Grammian counts as invertible above this.
pub const OBSERVABILITY_TOL: f64 = 1e-10;

/// The field parameter: a finite real vector of length `M >= 1`.
#[derive(Debug, Clone)]
pub struct FieldVector<T> {
    values: Vec<T>,
}

impl<T: Real> FieldVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Config("field must have at least one component".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Config(format!(
                "field component {} is not finite",
                i + 1
            )));
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }
}

/// One agent's measurement matrix `H_n`, stored as sparse rows over the
/// full field width.
#[derive(Debug, Clone)]
pub struct AgentMeasurement<T> {
    rows: Vec<SparseVec<T>>,
    field_len: usize,
}

impl<T: Real> AgentMeasurement<T> {
    /// Structural construction only; the unit-norm and nonzero-row
    /// assumptions are checked by [`FieldSystem::validate`], which
    /// reports rather than aborts.
    pub fn new(field_len: usize, rows: Vec<SparseVec<T>>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if row.dim() != field_len {
                return Err(Error::Config(format!(
                    "row {} has width {}, expected field length {}",
                    i + 1,
                    row.dim(),
                    field_len
                )));
            }
        }
        Ok(Self { rows, field_len })
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[SparseVec<T>] {
        &self.rows
    }

    pub fn field_len(&self) -> usize {
        self.field_len
    }

    /// Physical coupling set: indices of nonzero columns of `H_n`.
    pub fn coupling_set(&self) -> BTreeSet<usize> {
        self.rows.iter().flat_map(|r| r.indices()).collect()
    }

    /// True when every row is a canonical selector `e_m`.
    pub fn all_selector_rows(&self) -> bool {
        self.rows.iter().all(|r| r.as_unit_selector().is_some())
    }
}

/// Sorted set of field components an agent wants to recover, with the
/// forward map (rank -> component) and its inverse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterestSet {
    components: Vec<usize>,
}

impl InterestSet {
    pub fn new(mut components: Vec<usize>) -> Result<Self> {
        components.sort_unstable();
        components.dedup();
        if components.is_empty() {
            return Err(Error::Config("interest set must be nonempty".into()));
        }
        Ok(Self { components })
    }

    /// Accepts an explicit 1-based list, as written in scenario files.
    pub fn from_one_based(components: Vec<usize>) -> Result<Self> {
        if components.iter().any(|&c| c == 0) {
            return Err(Error::Config("interest components are 1-based".into()));
        }
        Self::new(components.into_iter().map(|c| c - 1).collect())
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Forward map: the component at rank `r` (0-based).
    pub fn component(&self, r: usize) -> usize {
        self.components[r]
    }

    /// Inverse map: the rank of component `m`, if interested.
    pub fn rank_of(&self, m: usize) -> Option<usize> {
        self.components.binary_search(&m).ok()
    }

    pub fn contains(&self, m: usize) -> bool {
        self.rank_of(m).is_some()
    }

    pub fn components(&self) -> &[usize] {
        &self.components
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.components.iter().copied()
    }
}

/// The Grammian `G = H^T H`, kept diagonal when every row is a selector
/// (the grid scenarios) so the observability check stays cheap at scale.
#[derive(Debug, Clone)]
pub enum Grammian<T> {
    Diagonal(Vec<T>),
    Dense(SymMat<T>),
}

impl<T: Real> Grammian<T> {
    pub fn min_eigenvalue(&self) -> T {
        match self {
            Grammian::Diagonal(d) => d
                .iter()
                .copied()
                .fold(T::infinity(), |a, b| a.min(b)),
            Grammian::Dense(m) => m.min_eigenvalue(),
        }
    }
}

/// One named assumption check with an explanation on failure.
#[derive(Debug, Clone)]
pub struct AssumptionCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Itemized result of `validate`; never aborts on bad data.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub checks: Vec<AssumptionCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failure_summary(&self) -> String {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{}: {}", c.name, c.detail))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// The complete measurement structure: field, agents, interest sets and
/// the cumulative row offsets that define the global indexing.
#[derive(Debug, Clone)]
pub struct FieldSystem<T> {
    field: FieldVector<T>,
    agents: Vec<AgentMeasurement<T>>,
    interests: Vec<InterestSet>,
    row_offsets: Vec<usize>,
    total_rows: usize,
    groups: Vec<Vec<usize>>,
}

impl<T: Real> FieldSystem<T> {
    pub fn new(
        field: FieldVector<T>,
        agents: Vec<AgentMeasurement<T>>,
        interests: Vec<InterestSet>,
    ) -> Result<Self> {
        if agents.is_empty() {
            return Err(Error::Config("system needs at least one agent".into()));
        }
        if agents.len() != interests.len() {
            return Err(Error::Config(format!(
                "{} agents but {} interest sets",
                agents.len(),
                interests.len()
            )));
        }
        let m = field.len();
        for (n, a) in agents.iter().enumerate() {
            if a.field_len() != m {
                return Err(Error::Config(format!(
                    "agent {} rows have width {}, field has {}",
                    n + 1,
                    a.field_len(),
                    m
                )));
            }
        }
        for (n, i) in interests.iter().enumerate() {
            if let Some(&c) = i.components().last() {
                if c >= m {
                    return Err(Error::Config(format!(
                        "agent {} interest component {} exceeds field length {}",
                        n + 1,
                        c + 1,
                        m
                    )));
                }
            }
        }
        let mut row_offsets = Vec::with_capacity(agents.len());
        let mut total = 0usize;
        for a in &agents {
            row_offsets.push(total);
            total += a.row_count();
        }
        let mut groups = vec![Vec::new(); m];
        for (n, i) in interests.iter().enumerate() {
            for c in i.iter() {
                groups[c].push(n);
            }
        }
        Ok(Self {
            field,
            agents,
            interests,
            row_offsets,
            total_rows: total,
            groups,
        })
    }

    pub fn field(&self) -> &FieldVector<T> {
        &self.field
    }

    pub fn field_len(&self) -> usize {
        self.field.len()
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    pub fn agent(&self, n: usize) -> &AgentMeasurement<T> {
        &self.agents[n]
    }

    pub fn agents(&self) -> &[AgentMeasurement<T>] {
        &self.agents
    }

    pub fn interest(&self, n: usize) -> &InterestSet {
        &self.interests[n]
    }

    pub fn interests(&self) -> &[InterestSet] {
        &self.interests
    }

    /// Total scalar measurement count `P`.
    pub fn total_measurements(&self) -> usize {
        self.total_rows
    }

    /// Global index of agent `n`'s first row.
    pub fn row_offset(&self, n: usize) -> usize {
        self.row_offsets[n]
    }

    /// Maps a global measurement index to `(agent, local row)`.
    pub fn locate_measurement(&self, p: usize) -> Result<(usize, usize)> {
        if p >= self.total_rows {
            return Err(Error::Config(format!(
                "measurement index {} out of range (P = {})",
                p + 1,
                self.total_rows
            )));
        }
        let n = match self.row_offsets.binary_search(&p) {
            Ok(n) => n,
            Err(ins) => ins - 1,
        };
        Ok((n, p - self.row_offsets[n]))
    }

    /// Global row `p` of the stacked matrix `H`.
    pub fn global_row(&self, p: usize) -> Result<&SparseVec<T>> {
        let (n, local) = self.locate_measurement(p)?;
        Ok(&self.agents[n].rows()[local])
    }

    /// Interest group of component `m`: all agents interested in it.
    pub fn interest_group(&self, m: usize) -> &[usize] {
        &self.groups[m]
    }

    /// The true values of the components agent `n` is interested in.
    pub fn truth_for_agent(&self, n: usize) -> Vec<T> {
        self.interests[n]
            .iter()
            .map(|m| self.field.values()[m])
            .collect()
    }

    /// Clean stacked measurement `H * theta` in global row order.
    pub fn clean_measurements(&self) -> Vec<T> {
        let theta = self.field.values();
        let mut y = Vec::with_capacity(self.total_rows);
        for a in &self.agents {
            for row in a.rows() {
                y.push(row.dot(theta));
            }
        }
        y
    }

    pub fn all_selector_rows(&self) -> bool {
        self.agents.iter().all(|a| a.all_selector_rows())
    }

    /// `G = H^T H`, diagonal when the instance is selector-only.
    pub fn grammian(&self) -> Grammian<T> {
        if self.all_selector_rows() {
            let mut d = vec![T::zero(); self.field_len()];
            for a in &self.agents {
                for row in a.rows() {
                    let m = row.as_unit_selector().expect("selector");
                    d[m] += T::one();
                }
            }
            Grammian::Diagonal(d)
        } else {
            let mut g = SymMat::zeros(self.field_len());
            for a in &self.agents {
                for row in a.rows() {
                    g.add_outer(row, T::one());
                }
            }
            Grammian::Dense(g)
        }
    }

    /// `H_n` with the columns outside the interest set removed; columns
    /// re-indexed by interest rank. Fails when a physically coupled
    /// column would be dropped.
    pub fn restricted_rows(&self, n: usize) -> Result<Vec<SparseVec<T>>> {
        let interest = &self.interests[n];
        self.agents[n]
            .rows()
            .iter()
            .enumerate()
            .map(|(local, row)| {
                row.remap(interest.len(), |m| interest.rank_of(m)).map_err(|_| {
                    Error::Assumption(format!(
                        "agent {} row {} touches a component outside its interest set",
                        n + 1,
                        local + 1
                    ))
                })
            })
            .collect()
    }

    /// Checks the standing assumptions; returns an itemized report.
    pub fn validate(&self) -> ValidationReport {
        let mut checks = Vec::new();
        let tol = real::<T>(UNIT_NORM_TOL);

        let mut bad_rows = Vec::new();
        for (n, a) in self.agents.iter().enumerate() {
            for (local, row) in a.rows().iter().enumerate() {
                if row.is_zero() || (row.norm() - T::one()).abs() > tol {
                    bad_rows.push(self.row_offsets[n] + local + 1);
                }
            }
        }
        checks.push(AssumptionCheck {
            name: "unit-norm rows",
            passed: bad_rows.is_empty(),
            detail: if bad_rows.is_empty() {
                String::new()
            } else {
                format!("rows without unit norm (global, 1-based): {:?}", bad_rows)
            },
        });

        let mut bad_coupling = Vec::new();
        for (n, a) in self.agents.iter().enumerate() {
            let coupled = a.coupling_set();
            if !coupled.iter().all(|&m| self.interests[n].contains(m)) {
                bad_coupling.push(n + 1);
            }
        }
        checks.push(AssumptionCheck {
            name: "coupling within interest",
            passed: bad_coupling.is_empty(),
            detail: if bad_coupling.is_empty() {
                String::new()
            } else {
                format!("agents measuring outside their interest set: {:?}", bad_coupling)
            },
        });

        let uncovered: Vec<usize> = self
            .groups
            .iter()
            .enumerate()
            .filter(|(_, g)| g.is_empty())
            .map(|(m, _)| m + 1)
            .collect();
        checks.push(AssumptionCheck {
            name: "every component has interested agents",
            passed: uncovered.is_empty(),
            detail: if uncovered.is_empty() {
                String::new()
            } else {
                format!("components nobody is interested in: {:?}", uncovered)
            },
        });

        let lambda_min = self.grammian().min_eigenvalue();
        let observable = lambda_min > real::<T>(OBSERVABILITY_TOL);
        checks.push(AssumptionCheck {
            name: "global observability",
            passed: observable,
            detail: if observable {
                String::new()
            } else {
                format!("lambda_min(G) = {} not positive", lambda_min)
            },
        });

        ValidationReport { checks }
    }
}

/// The attacked stacked measurement `y = H theta + a` in the global row
/// order: rows `P_n+1 ..= P_n+P_n` belong to agent `n`.
pub fn stack_measurements<T: Real>(
    sys: &FieldSystem<T>,
    attack: Option<&AttackSpec<T>>,
) -> Result<Vec<T>> {
    match attack {
        None => Ok(sys.clean_measurements()),
        Some(spec) => Ok(crate::attack::apply_attack(sys, spec)?.measurements),
    }
}
