//! Assignment model data types and the seeded random instance generator.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Duration;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("app {0} has no candidates")]
    NoCandidates(usize),
    #[error("app {0} marks more than one candidate as current")]
    MultipleCurrent(usize),
    #[error("app {app} candidate {candidate}: cost must be positive and finite")]
    BadCost { app: usize, candidate: usize },
    #[error("resource row {0}: capacity must be non-negative and finite")]
    BadCapacity(usize),
    #[error("app {app} candidate {candidate}: {reason}")]
    BadUsage { app: usize, candidate: usize, reason: &'static str },
}

/// One resource constraint: total usage of choosing candidates stays within
/// `capacity`.
#[derive(Clone, PartialEq, Debug)]
pub struct ResourceRow {
    pub name: String,
    pub capacity: f64,
}

/// One placement option of one app.
#[derive(Clone, PartialEq, Debug)]
pub struct CandidateEntry {
    pub label: String,
    /// Satisfaction term this choice would produce (2 = unchanged).
    pub cost: f64,
    /// Marks the app's current placement; at most one per app.
    pub is_current: bool,
    /// `(resource row index, amount)`, strictly ascending by row.
    pub uses: Vec<(usize, f64)>,
}

#[derive(Clone, PartialEq, Debug)]
pub struct AppEntry {
    pub label: String,
    pub candidates: Vec<CandidateEntry>,
}

impl AppEntry {
    pub fn current_index(&self) -> Option<usize> {
        self.candidates.iter().position(|c| c.is_current)
    }
}

/// The full problem: self-contained, serializable, independent of the
/// topology it was built from.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct AssignmentModel {
    pub apps: Vec<AppEntry>,
    pub resources: Vec<ResourceRow>,
}

impl AssignmentModel {
    pub fn validate(&self) -> Result<(), ModelError> {
        for (r, row) in self.resources.iter().enumerate() {
            if !(row.capacity >= 0.0 && row.capacity.is_finite()) {
                return Err(ModelError::BadCapacity(r));
            }
        }
        for (k, app) in self.apps.iter().enumerate() {
            if app.candidates.is_empty() {
                return Err(ModelError::NoCandidates(k));
            }
            if app.candidates.iter().filter(|c| c.is_current).count() > 1 {
                return Err(ModelError::MultipleCurrent(k));
            }
            for (s, candidate) in app.candidates.iter().enumerate() {
                if !(candidate.cost > 0.0 && candidate.cost.is_finite()) {
                    return Err(ModelError::BadCost { app: k, candidate: s });
                }
                let mut last_row = None;
                for &(row, amount) in &candidate.uses {
                    if row >= self.resources.len() {
                        return Err(ModelError::BadUsage {
                            app: k,
                            candidate: s,
                            reason: "usage names an unknown resource row",
                        });
                    }
                    if last_row.is_some_and(|prev| prev >= row) {
                        return Err(ModelError::BadUsage {
                            app: k,
                            candidate: s,
                            reason: "usage rows must be strictly ascending",
                        });
                    }
                    if !(amount > 0.0 && amount.is_finite()) {
                        return Err(ModelError::BadUsage {
                            app: k,
                            candidate: s,
                            reason: "usage amounts must be positive and finite",
                        });
                    }
                    last_row = Some(row);
                }
            }
        }
        Ok(())
    }

    /// Objective of a full choice vector, summed in app order.
    pub fn objective_of(&self, choice: &[usize]) -> f64 {
        self.apps
            .iter()
            .zip(choice)
            .fold(0.0, |acc, (app, &s)| acc + app.candidates[s].cost)
    }

    /// Exact feasibility check of a full choice vector.
    pub fn is_feasible(&self, choice: &[usize]) -> bool {
        let mut used = vec![0.0; self.resources.len()];
        for (app, &s) in self.apps.iter().zip(choice) {
            for &(row, amount) in &app.candidates[s].uses {
                used[row] += amount;
            }
        }
        used.iter().zip(&self.resources).all(|(u, row)| *u <= row.capacity)
    }

    /// Apps whose chosen candidate differs from a marked current one.
    pub fn moved_count(&self, choice: &[usize]) -> usize {
        self.apps
            .iter()
            .zip(choice)
            .filter(|(app, &s)| app.current_index().is_some() && !app.candidates[s].is_current)
            .count()
    }
}

#[derive(Clone, Copy, PartialEq, Debug, Default)]
pub struct SolveStats {
    pub nodes: u64,
    pub lp_solves: u64,
    /// Wall time; informational only, never exported into trace files.
    pub elapsed: Duration,
}

#[derive(Clone, PartialEq, Debug)]
pub struct OptimalAssignment {
    /// Chosen candidate index per app.
    pub choice: Vec<usize>,
    pub objective: f64,
    /// True when the search space was exhausted; false when a budget cut it
    /// short and `choice` is only the best incumbent.
    pub certified: bool,
    pub stats: SolveStats,
}

#[derive(Clone, Copy, PartialEq, Debug)]
pub struct RandomModelLimits {
    pub max_apps: usize,
    pub max_candidates: usize,
    pub max_rows: usize,
}

impl Default for RandomModelLimits {
    fn default() -> Self {
        Self { max_apps: 12, max_candidates: 3, max_rows: 6 }
    }
}

/// Seeded random instance for fuzzing and solver cross-checks.
///
/// All quantities are dyadic rationals (multiples of 2^-20 for costs, 1/8
/// for usage), so objective sums and capacity arithmetic are exact in f64;
/// two solvers agreeing mathematically then agree bitwise. Capacities are
/// drawn around a random witness assignment, so the instance is always
/// feasible.
pub fn random_model(seed: u64, limits: &RandomModelLimits) -> AssignmentModel {
    const COST_GRID: f64 = (1u64 << 20) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = rng.random_range(0..=limits.max_rows);
    let apps = rng.random_range(1..=limits.max_apps);

    let mut model = AssignmentModel::default();
    for r in 0..rows {
        model.resources.push(ResourceRow { name: format!("r{r}"), capacity: 0.0 });
    }

    let mut witness = Vec::with_capacity(apps);
    for k in 0..apps {
        let candidates = rng.random_range(1..=limits.max_candidates);
        let mut app = AppEntry { label: format!("a{k}"), candidates: Vec::new() };
        let current = if rng.random_range(0..2u8) == 0 { Some(rng.random_range(0..candidates)) } else { None };
        for s in 0..candidates {
            let cost = rng.random_range(1u64 << 20..=3u64 << 20) as f64 / COST_GRID;
            let mut uses = Vec::new();
            if rows > 0 {
                for row in 0..rows {
                    // ~half the row/candidate pairs carry usage
                    if rng.random_range(0..2u8) == 0 {
                        let amount = rng.random_range(1..=32u32) as f64 / 8.0;
                        uses.push((row, amount));
                    }
                }
            }
            app.candidates.push(CandidateEntry {
                label: format!("c{s}"),
                cost,
                is_current: current == Some(s),
                uses,
            });
        }
        witness.push(rng.random_range(0..app.candidates.len()));
        model.apps.push(app);
    }

    // Capacity = witness usage + dyadic slack, guaranteeing feasibility.
    let mut needed = vec![0.0f64; rows];
    for (app, &w) in model.apps.iter().zip(&witness) {
        for &(row, amount) in &app.candidates[w].uses {
            needed[row] += amount;
        }
    }
    for (row, need) in model.resources.iter_mut().zip(&needed) {
        row.capacity = need + rng.random_range(0..=16u32) as f64 / 8.0;
    }
    debug_assert!(model.validate().is_ok());
    debug_assert!(model.is_feasible(&witness));
    model
}
