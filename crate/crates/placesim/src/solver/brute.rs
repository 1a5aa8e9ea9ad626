//! Exhaustive reference solver: depth-first enumeration in lexicographic
//! candidate order, pruning only branches that already overflow a resource.
//! Ties keep the first (lexicographically smallest) assignment found.

use super::model::{AssignmentModel, OptimalAssignment, SolveStats};
use super::SolverError;
use std::time::Instant;

pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

pub fn brute_force(model: &AssignmentModel, cap: u64) -> Result<OptimalAssignment, SolverError> {
    model.validate()?;
    let product: u128 = model.apps.iter().map(|a| a.candidates.len() as u128).product();
    if product > u128::from(cap) {
        return Err(SolverError::EnumerationTooLarge { product, cap });
    }

    let started = Instant::now();
    let mut search = Search {
        model,
        used: vec![0.0; model.resources.len()],
        choice: vec![0; model.apps.len()],
        best: None,
        leaves: 0,
    };
    search.descend(0, 0.0);

    let Search { best, leaves, .. } = search;
    let Some((objective, choice)) = best else {
        return Err(SolverError::Infeasible);
    };
    Ok(OptimalAssignment {
        choice,
        objective,
        certified: true,
        stats: SolveStats { nodes: leaves, lp_solves: 0, elapsed: started.elapsed() },
    })
}

struct Search<'m> {
    model: &'m AssignmentModel,
    used: Vec<f64>,
    choice: Vec<usize>,
    best: Option<(f64, Vec<usize>)>,
    leaves: u64,
}

impl Search<'_> {
    fn descend(&mut self, app: usize, cost_so_far: f64) {
        if app == self.model.apps.len() {
            self.leaves += 1;
            // Strict improvement keeps the lexicographically first optimum.
            if self.best.as_ref().is_none_or(|(best, _)| cost_so_far < *best) {
                self.best = Some((cost_so_far, self.choice.clone()));
            }
            return;
        }
        let candidates = &self.model.apps[app].candidates;
        for (s, candidate) in candidates.iter().enumerate() {
            let mut feasible = true;
            for &(row, amount) in &candidate.uses {
                self.used[row] += amount;
                if self.used[row] > self.model.resources[row].capacity {
                    feasible = false;
                }
            }
            if feasible {
                self.choice[app] = s;
                self.descend(app + 1, cost_so_far + candidate.cost);
            }
            for &(row, amount) in &candidate.uses {
                self.used[row] -= amount;
            }
        }
    }
}
