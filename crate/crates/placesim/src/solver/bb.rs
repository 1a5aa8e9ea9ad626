//! Branch and bound over the assignment model.
//!
//! The search keeps three sound lower bounds per node: the additive bound
//! (per-app minimum over individually fitting candidates, folded in app
//! order so float monotonicity makes it admissible), the LP relaxation of
//! the remaining subproblem (minus a small safety margin), and node
//! infeasibility via per-candidate residual checks. Incumbents come from two
//! cheap completions per node: "everyone stays" and a greedy min-cost fill.
//!
//! Ties are broken toward fewer moved apps; among equal-objective,
//! equal-move assignments the search keeps the lexicographically smallest
//! choice vector it encounters. A pruned subtree never hides a strictly
//! better objective, so the returned objective equals the exhaustive
//! optimum whenever the run is certified.

use super::model::{AssignmentModel, OptimalAssignment, SolveStats};
use super::simplex::{solve_lp, LpOutcome, LpProblem};
use super::SolverError;
use std::time::{Duration, Instant};

/// Safety margin subtracted from LP bounds: simplex arithmetic is inexact,
/// the additive bound is not, so the LP is only trusted above this slack.
const LP_MARGIN: f64 = 1e-6;
const INT_EPS: f64 = 1e-7;

/// Finest power-of-two cost grid the lattice bound will look for. 2^-40 is
/// far below any meaningful cost difference but leaves plenty of mantissa
/// room for exact sums.
const MAX_GRID_BITS: i32 = 40;

/// Coarsest power-of-two grid the cost is an exact multiple of, as the
/// exponent k of grid 2^-k. Scaling by a power of two is exact, so the
/// integrality test is reliable inside the guarded range.
fn intrinsic_bits(cost: f64) -> Option<i32> {
    if !cost.is_finite() || cost.abs() >= 2f64.powi(52) {
        return None;
    }
    for k in 0..=MAX_GRID_BITS {
        let scaled = cost * f64::powi(2.0, k);
        if scaled.abs() >= 2f64.powi(53) {
            return None;
        }
        if scaled == scaled.trunc() {
            return Some(k);
        }
    }
    None
}

/// If every candidate cost is a multiple of one power-of-two grid step, all
/// assignment objectives live on that lattice and every f64 partial sum of
/// them is exact, so any valid lower bound may be rounded up to the next
/// lattice point. That turns "LP value within the margin of the incumbent"
/// into an exact equality the move tie-break can prune on; without it,
/// plateaus of equal-objective assignments are enumerated node by node.
/// Returns the grid exponent k (grid = 2^-k), or None when some cost is
/// off-grid or sums could leave the exact range.
fn cost_grid_bits(model: &AssignmentModel) -> Option<i32> {
    let mut bits = 0i32;
    let mut total = 0.0f64;
    for app in &model.apps {
        let mut max_cost = 0.0f64;
        for candidate in &app.candidates {
            bits = bits.max(intrinsic_bits(candidate.cost)?);
            max_cost = max_cost.max(candidate.cost);
        }
        total += max_cost;
    }
    // Every partial objective sum is a multiple of 2^-bits bounded by
    // `total`; it stays exactly representable only below 2^52 at grid
    // resolution.
    (total * f64::powi(2.0, bits) < 2f64.powi(52)).then_some(bits)
}

/// Smallest lattice multiple >= `bound`; exact because scaling by a power
/// of two is exact within the guarded range.
fn ceil_to_grid(bound: f64, grid_bits: i32) -> f64 {
    let scaled = bound * f64::powi(2.0, grid_bits);
    scaled.ceil() * f64::powi(2.0, -grid_bits)
}

#[derive(Clone, Copy, PartialEq, Debug)]
pub struct SolveBudget {
    pub max_nodes: u64,
    /// Wall-clock cut-off. `None` keeps the solve fully deterministic;
    /// simulation runs rely on that.
    pub max_wall: Option<Duration>,
}

impl Default for SolveBudget {
    fn default() -> Self {
        Self { max_nodes: 10_000_000, max_wall: Some(Duration::from_secs(60)) }
    }
}

impl SolveBudget {
    pub fn nodes_only(max_nodes: u64) -> Self {
        Self { max_nodes, max_wall: None }
    }
}

pub fn solve_exact(
    model: &AssignmentModel,
    budget: &SolveBudget,
) -> Result<OptimalAssignment, SolverError> {
    model.validate()?;
    let started = Instant::now();

    let mut search = Search::new(model, budget, started);
    search.reduce();
    search.dfs();

    let stats = SolveStats {
        nodes: search.nodes,
        lp_solves: search.lp_solves,
        elapsed: started.elapsed(),
    };
    match search.incumbent {
        Some(inc) => Ok(OptimalAssignment {
            choice: inc.choice,
            objective: inc.objective,
            certified: !search.exhausted,
            stats,
        }),
        None if search.exhausted => Err(SolverError::BudgetExhausted),
        None => Err(SolverError::Infeasible),
    }
}

struct Incumbent {
    objective: f64,
    moves: usize,
    choice: Vec<usize>,
}

struct Search<'m> {
    model: &'m AssignmentModel,
    budget: &'m SolveBudget,
    started: Instant,
    /// Row indices that can actually bind; all others are provably slack.
    alive_rows: Vec<bool>,
    /// Remaining capacity per row (only alive rows are consulted).
    residual: Vec<f64>,
    /// Chosen candidate per app; pre-filled by reduction for separable apps.
    partial: Vec<Option<usize>>,
    current_of: Vec<Option<usize>>,
    /// Nearest earlier app with an identical candidate list (labels aside).
    /// Such apps are interchangeable: permuting their choices changes no
    /// objective, feasibility, or move count, so the search only visits
    /// assignments where their candidate indices are non-decreasing.
    class_pred: Vec<Option<usize>>,
    /// Cost lattice exponent when all costs share a power-of-two grid.
    grid_bits: Option<i32>,
    incumbent: Option<Incumbent>,
    nodes: u64,
    lp_solves: u64,
    exhausted: bool,
}

fn same_candidates(a: &super::model::AppEntry, b: &super::model::AppEntry) -> bool {
    a.candidates.len() == b.candidates.len()
        && a.candidates.iter().zip(&b.candidates).all(|(x, y)| {
            x.cost == y.cost && x.is_current == y.is_current && x.uses == y.uses
        })
}

impl<'m> Search<'m> {
    fn new(model: &'m AssignmentModel, budget: &'m SolveBudget, started: Instant) -> Self {
        let class_pred = (0..model.apps.len())
            .map(|k| (0..k).rev().find(|&j| same_candidates(&model.apps[j], &model.apps[k])))
            .collect();
        Search {
            model,
            budget,
            started,
            alive_rows: vec![true; model.resources.len()],
            residual: model.resources.iter().map(|r| r.capacity).collect(),
            partial: vec![None; model.apps.len()],
            current_of: model.apps.iter().map(|a| a.current_index()).collect(),
            class_pred,
            grid_bits: cost_grid_bits(model),
            incumbent: None,
            nodes: 0,
            lp_solves: 0,
            exhausted: false,
        }
    }

    /// Lowest candidate index app `k` may still take under the class order.
    fn class_floor(&self, k: usize) -> usize {
        self.class_pred[k].and_then(|p| self.partial[p]).unwrap_or(0)
    }

    /// Drops rows that no assignment can violate, then fixes apps whose
    /// candidates touch no remaining row (their choice is separable), and
    /// repeats until stable.
    fn reduce(&mut self) {
        loop {
            let mut changed = false;
            for row in 0..self.alive_rows.len() {
                if !self.alive_rows[row] {
                    continue;
                }
                let mut worst = 0.0f64;
                for (k, app) in self.model.apps.iter().enumerate() {
                    worst += match self.partial[k] {
                        Some(s) => usage_on(&app.candidates[s].uses, row),
                        None => app
                            .candidates
                            .iter()
                            .map(|c| usage_on(&c.uses, row))
                            .fold(0.0, f64::max),
                    };
                }
                if worst <= self.model.resources[row].capacity {
                    self.alive_rows[row] = false;
                    changed = true;
                }
            }
            for (k, app) in self.model.apps.iter().enumerate() {
                if self.partial[k].is_some() {
                    continue;
                }
                let touches_alive = app
                    .candidates
                    .iter()
                    .any(|c| c.uses.iter().any(|&(row, _)| self.alive_rows[row]));
                if !touches_alive {
                    self.partial[k] = Some(best_candidate_index(app));
                    changed = true;
                }
            }
            if !changed {
                return;
            }
        }
    }

    fn over_budget(&mut self) -> bool {
        if self.exhausted {
            return true;
        }
        if self.nodes >= self.budget.max_nodes
            || self.budget.max_wall.is_some_and(|w| self.started.elapsed() >= w)
        {
            self.exhausted = true;
        }
        self.exhausted
    }

    fn dfs(&mut self) {
        if self.over_budget() {
            return;
        }
        self.nodes += 1;

        // Individually fitting candidates per unassigned app. The class
        // floor is part of "fitting": a node that forces an app below its
        // predecessor's choice only duplicates a permutation explored under
        // an earlier sibling.
        let mut fits: Vec<(usize, Vec<usize>)> = Vec::new();
        for (k, app) in self.model.apps.iter().enumerate() {
            if self.partial[k].is_some() {
                continue;
            }
            let fitting: Vec<usize> = (self.class_floor(k)..app.candidates.len())
                .filter(|&s| self.fits_residual(&app.candidates[s].uses))
                .collect();
            if fitting.is_empty() {
                return; // no choice left for this app: infeasible node
            }
            fits.push((k, fitting));
        }
        if fits.is_empty() {
            let choice: Vec<usize> = self.partial.iter().map(|c| c.unwrap()).collect();
            if self.model.is_feasible(&choice) {
                self.offer(choice);
            }
            return;
        }

        let (bound, moves_lb) = self.additive_bound(&fits);
        if self.prunable(bound, moves_lb) {
            return;
        }

        self.offer_stay_completion(&fits);
        self.offer_greedy_completion(&fits);
        if self.prunable(bound, moves_lb) {
            return;
        }

        // The additive bound ignores capacities entirely; bring in the LP
        // only when some alive row could actually bind.
        let mut branch_app: Option<usize> = None;
        if fits.len() >= 2 && self.any_binding_row(&fits) {
            match self.lp_bound(&fits) {
                LpStep::Infeasible => return,
                LpStep::Fractional { bound: lp_bound, branch } => {
                    if self.prunable(lp_bound.max(bound), moves_lb) {
                        return;
                    }
                    branch_app = Some(branch);
                }
                LpStep::Integral { bound: lp_bound, choice } => {
                    if self.model.is_feasible(&choice) {
                        self.offer(choice);
                    }
                    if self.prunable(lp_bound.max(bound), moves_lb) {
                        return;
                    }
                }
                LpStep::Unavailable => {}
            }
        }

        let mut branch_app = branch_app.unwrap_or_else(|| widest_spread(self.model, &fits));
        // Branch the earliest unfixed member of the app's class; fixed
        // members always form a prefix, so later members then enumerate
        // only candidates at or above their predecessor's choice.
        while let Some(p) = self.class_pred[branch_app] {
            if self.partial[p].is_none() {
                branch_app = p;
            } else {
                break;
            }
        }
        let (_, fitting) =
            fits.iter().find(|(k, _)| *k == branch_app).expect("branch app comes from fits");

        let mut order: Vec<usize> = fitting.clone();
        order.sort_by(|&a, &b| {
            candidate_key(&self.model.apps[branch_app], a)
                .partial_cmp(&candidate_key(&self.model.apps[branch_app], b))
                .expect("costs are finite")
        });

        for s in order {
            let uses = &self.model.apps[branch_app].candidates[s].uses;
            if !self.fits_residual(uses) {
                continue;
            }
            self.apply(branch_app, s);
            self.dfs();
            self.unapply(branch_app, s);
            if self.exhausted {
                return;
            }
        }
    }

    fn fits_residual(&self, uses: &[(usize, f64)]) -> bool {
        uses.iter()
            .all(|&(row, amount)| !self.alive_rows[row] || amount <= self.residual[row])
    }

    fn apply(&mut self, app: usize, s: usize) {
        self.partial[app] = Some(s);
        for &(row, amount) in &self.model.apps[app].candidates[s].uses {
            if self.alive_rows[row] {
                self.residual[row] -= amount;
            }
        }
    }

    fn unapply(&mut self, app: usize, s: usize) {
        self.partial[app] = None;
        for &(row, amount) in &self.model.apps[app].candidates[s].uses {
            if self.alive_rows[row] {
                self.residual[row] += amount;
            }
        }
    }

    /// Folds min-fitting-candidate costs in app order (admissible in float
    /// arithmetic), and a lower bound on moved apps: moves already fixed
    /// plus apps whose current candidate no longer fits.
    fn additive_bound(&self, fits: &[(usize, Vec<usize>)]) -> (f64, usize) {
        let mut bound = 0.0f64;
        let mut moves_lb = 0usize;
        let mut fit_iter = fits.iter().peekable();
        for (k, app) in self.model.apps.iter().enumerate() {
            match self.partial[k] {
                Some(s) => {
                    bound += app.candidates[s].cost;
                    if self.current_of[k].is_some() && !app.candidates[s].is_current {
                        moves_lb += 1;
                    }
                }
                None => {
                    let (_, fitting) = fit_iter.next().expect("fits covers unassigned apps");
                    let min = fitting
                        .iter()
                        .map(|&s| app.candidates[s].cost)
                        .fold(f64::INFINITY, f64::min);
                    bound += min;
                    if let Some(cur) = self.current_of[k] {
                        if !fitting.contains(&cur) {
                            moves_lb += 1;
                        }
                    }
                }
            }
        }
        debug_assert!(fit_iter.peek().is_none());
        (bound, moves_lb)
    }

    /// A subtree is worthless when it cannot beat the incumbent objective,
    /// nor tie it with fewer moves.
    fn prunable(&self, bound: f64, moves_lb: usize) -> bool {
        match &self.incumbent {
            None => false,
            Some(inc) => bound > inc.objective || (bound == inc.objective && moves_lb >= inc.moves),
        }
    }

    fn offer(&mut self, choice: Vec<usize>) {
        let objective = self.model.objective_of(&choice);
        let moves = self.model.moved_count(&choice);
        let better = match &self.incumbent {
            None => true,
            Some(inc) => {
                objective < inc.objective
                    || (objective == inc.objective
                        && (moves < inc.moves || (moves == inc.moves && choice < inc.choice)))
            }
        };
        if better {
            self.incumbent = Some(Incumbent { objective, moves, choice });
        }
    }

    fn offer_stay_completion(&mut self, fits: &[(usize, Vec<usize>)]) {
        let mut choice = Vec::with_capacity(self.model.apps.len());
        for (k, assigned) in self.partial.iter().enumerate() {
            match assigned {
                Some(s) => choice.push(*s),
                None => match self.current_of[k] {
                    Some(cur) => choice.push(cur),
                    None => return,
                },
            }
        }
        let _ = fits;
        if self.model.is_feasible(&choice) {
            self.offer(choice);
        }
    }

    fn offer_greedy_completion(&mut self, fits: &[(usize, Vec<usize>)]) {
        let mut residual = self.residual.clone();
        let mut choice: Vec<usize> = self.partial.iter().map(|c| c.unwrap_or(0)).collect();
        for (k, fitting) in fits {
            let app = &self.model.apps[*k];
            let pick = fitting
                .iter()
                .copied()
                .filter(|&s| {
                    app.candidates[s]
                        .uses
                        .iter()
                        .all(|&(row, amount)| !self.alive_rows[row] || amount <= residual[row])
                })
                .min_by(|&a, &b| {
                    candidate_key(app, a)
                        .partial_cmp(&candidate_key(app, b))
                        .expect("costs are finite")
                });
            let Some(s) = pick else { return };
            choice[*k] = s;
            for &(row, amount) in &app.candidates[s].uses {
                if self.alive_rows[row] {
                    residual[row] -= amount;
                }
            }
        }
        if self.model.is_feasible(&choice) {
            self.offer(choice);
        }
    }

    fn any_binding_row(&self, fits: &[(usize, Vec<usize>)]) -> bool {
        for (row, alive) in self.alive_rows.iter().enumerate() {
            if !*alive {
                continue;
            }
            let mut worst = 0.0f64;
            for (k, fitting) in fits {
                worst += fitting
                    .iter()
                    .map(|&s| usage_on(&self.model.apps[*k].candidates[s].uses, row))
                    .fold(0.0, f64::max);
            }
            if worst > self.residual[row] {
                return true;
            }
        }
        false
    }

    fn lp_bound(&mut self, fits: &[(usize, Vec<usize>)]) -> LpStep {
        self.lp_solves += 1;

        // Column layout: unassigned apps in order, their fitting candidates
        // in order.
        let mut col_of: Vec<Vec<usize>> = Vec::with_capacity(fits.len());
        let mut objective = Vec::new();
        let mut eq_rows = Vec::new();
        for (k, fitting) in fits {
            let app = &self.model.apps[*k];
            let mut cols = Vec::with_capacity(fitting.len());
            let mut convexity = Vec::with_capacity(fitting.len());
            for &s in fitting {
                cols.push(objective.len());
                convexity.push((objective.len(), 1.0));
                objective.push(app.candidates[s].cost);
            }
            col_of.push(cols);
            eq_rows.push((convexity, 1.0));
        }

        let mut ub_rows = Vec::new();
        for (row, alive) in self.alive_rows.iter().enumerate() {
            if !*alive {
                continue;
            }
            let mut entries = Vec::new();
            for ((k, fitting), cols) in fits.iter().zip(&col_of) {
                for (&s, &col) in fitting.iter().zip(cols) {
                    let amount = usage_on(&self.model.apps[*k].candidates[s].uses, row);
                    if amount > 0.0 {
                        entries.push((col, amount));
                    }
                }
            }
            if !entries.is_empty() {
                ub_rows.push((entries, self.residual[row]));
            }
        }

        let problem = LpProblem { cols: objective.len(), objective, eq_rows, ub_rows };
        let outcome = match solve_lp(&problem) {
            Ok(o) => o,
            Err(_) => return LpStep::Unavailable,
        };
        let (value, solution) = match outcome {
            LpOutcome::Infeasible => return LpStep::Infeasible,
            LpOutcome::Optimal { value, solution } => (value, solution),
        };

        let assigned_fold = self
            .partial
            .iter()
            .enumerate()
            .filter_map(|(k, s)| s.map(|s| self.model.apps[k].candidates[s].cost))
            .fold(0.0, |acc, c| acc + c);
        let bound = assigned_fold + value - LP_MARGIN;
        // On a cost lattice the margin-weakened bound can be pulled back up
        // to the next representable objective, which is what lets equal-
        // objective plateaus close exactly instead of being enumerated.
        let bound = match self.grid_bits {
            Some(bits) => ceil_to_grid(bound, bits),
            None => bound,
        };

        // Integral solution: read it off and let the caller treat it as a
        // completion; fractional: branch on the widest-cost-spread app among
        // the fractional ones.
        let mut fractional: Vec<usize> = Vec::new();
        let mut choice: Vec<usize> = self.partial.iter().map(|c| c.unwrap_or(0)).collect();
        for ((k, fitting), cols) in fits.iter().zip(&col_of) {
            let mut take: Option<usize> = None;
            let mut is_fractional = false;
            for (&s, &col) in fitting.iter().zip(cols) {
                let x = solution[col];
                if x > 1.0 - INT_EPS {
                    take = Some(s);
                } else if x > INT_EPS {
                    is_fractional = true;
                }
            }
            match (take, is_fractional) {
                (Some(s), false) => choice[*k] = s,
                _ => fractional.push(*k),
            }
        }
        if fractional.is_empty() {
            return LpStep::Integral { bound, choice };
        }

        let branch = fractional
            .iter()
            .copied()
            .max_by(|&a, &b| {
                let spread = |k: usize| {
                    let (_, fitting) = fits.iter().find(|(fk, _)| *fk == k).unwrap();
                    let costs = fitting.iter().map(|&s| self.model.apps[k].candidates[s].cost);
                    let min = costs.clone().fold(f64::INFINITY, f64::min);
                    let max = costs.fold(f64::NEG_INFINITY, f64::max);
                    max - min
                };
                // larger spread wins; ties go to the lower app index
                spread(a)
                    .partial_cmp(&spread(b))
                    .expect("costs are finite")
                    .then(b.cmp(&a))
            })
            .expect("fractional is non-empty");
        LpStep::Fractional { bound, branch }
    }
}

enum LpStep {
    Infeasible,
    Unavailable,
    Integral { bound: f64, choice: Vec<usize> },
    Fractional { bound: f64, branch: usize },
}

fn usage_on(uses: &[(usize, f64)], row: usize) -> f64 {
    uses.iter().find(|(r, _)| *r == row).map_or(0.0, |&(_, amount)| amount)
}

/// `(cost, prefers-current, index)`: cheapest first, the current placement
/// ahead of equal-cost twins, then lowest index.
fn candidate_key(app: &super::model::AppEntry, s: usize) -> (f64, u8, usize) {
    let c = &app.candidates[s];
    (c.cost, u8::from(!c.is_current), s)
}

fn best_candidate_index(app: &super::model::AppEntry) -> usize {
    (0..app.candidates.len())
        .min_by(|&a, &b| {
            candidate_key(app, a).partial_cmp(&candidate_key(app, b)).expect("costs are finite")
        })
        .expect("validated apps have candidates")
}

/// Unassigned app with the largest cost spread over its fitting candidates.
fn widest_spread(model: &AssignmentModel, fits: &[(usize, Vec<usize>)]) -> usize {
    fits.iter()
        .max_by(|(ka, fa), (kb, fb)| {
            let spread = |k: usize, fitting: &[usize]| {
                let costs = fitting.iter().map(|&s| model.apps[k].candidates[s].cost);
                let min = costs.clone().fold(f64::INFINITY, f64::min);
                let max = costs.fold(f64::NEG_INFINITY, f64::max);
                max - min
            };
            spread(*ka, fa)
                .partial_cmp(&spread(*kb, fb))
                .expect("costs are finite")
                .then(kb.cmp(ka))
        })
        .map(|(k, _)| *k)
        .expect("caller checked fits is non-empty")
}

#[cfg(test)]
mod tests {
    use super::super::brute::{brute_force, DEFAULT_ENUMERATION_CAP};
    use super::super::model::{
        random_model, AppEntry, AssignmentModel, CandidateEntry, RandomModelLimits, ResourceRow,
    };
    use super::*;

    fn cand(cost: f64, current: bool, uses: Vec<(usize, f64)>) -> CandidateEntry {
        CandidateEntry { label: String::new(), cost, is_current: current, uses }
    }

    fn app(candidates: Vec<CandidateEntry>) -> AppEntry {
        AppEntry { label: String::new(), candidates }
    }

    #[test]
    fn capacity_inactive_model_closes_at_the_root() {
        // Cheapest candidates all fit: bound is tight immediately.
        let model = AssignmentModel {
            apps: vec![
                app(vec![cand(2.0, true, vec![(0, 1.0)]), cand(1.5, false, vec![(0, 1.0)])]),
                app(vec![cand(2.0, true, vec![(0, 1.0)]), cand(1.25, false, vec![(0, 2.0)])]),
            ],
            resources: vec![ResourceRow { name: "r".into(), capacity: 10.0 }],
        };
        let solved = solve_exact(&model, &SolveBudget::default()).unwrap();
        assert_eq!(solved.objective, 1.5 + 1.25);
        assert_eq!(solved.choice, vec![1, 1]);
        assert!(solved.certified);
        assert_eq!(solved.stats.lp_solves, 0);
    }

    #[test]
    fn optimum_beats_repaired_greedy() {
        // Greedy in app order: app0 grabs the shared row (1.0), app1 must pay
        // 3.0 -> 4.0 total. The optimum swaps: 1.2 + 1.1 = 2.3.
        let model = AssignmentModel {
            apps: vec![
                app(vec![cand(1.0, false, vec![(0, 1.0)]), cand(1.2, false, vec![(1, 1.0)])]),
                app(vec![cand(1.1, false, vec![(0, 1.0)]), cand(3.0, false, vec![])]),
            ],
            resources: vec![
                ResourceRow { name: "r0".into(), capacity: 1.0 },
                ResourceRow { name: "r1".into(), capacity: 1.0 },
            ],
        };
        let solved = solve_exact(&model, &SolveBudget::default()).unwrap();
        assert_eq!(solved.choice, vec![1, 0]);
        assert_eq!(solved.objective, model.objective_of(&[1, 0]));
        assert!(solved.certified);

        let oracle = brute_force(&model, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(solved.objective, oracle.objective);
    }

    #[test]
    fn all_stay_ties_resolve_to_zero_moves() {
        // Every candidate costs exactly 2; the solver must not move anyone.
        let model = AssignmentModel {
            apps: (0..6)
                .map(|_| {
                    app(vec![
                        cand(2.0, false, vec![(0, 1.0)]),
                        cand(2.0, true, vec![(0, 1.0)]),
                        cand(2.0, false, vec![]),
                    ])
                })
                .collect(),
            resources: vec![ResourceRow { name: "r".into(), capacity: 6.0 }],
        };
        let solved = solve_exact(&model, &SolveBudget::default()).unwrap();
        assert_eq!(solved.objective, 12.0);
        assert_eq!(model.moved_count(&solved.choice), 0);
        assert!(solved.certified);
        // Tie-heavy models must not blow up the node count.
        assert!(solved.stats.nodes < 100, "nodes = {}", solved.stats.nodes);
    }

    #[test]
    fn forced_moves_still_count_in_the_tie_break() {
        // The current placement no longer fits (capacity 0 residual row), so
        // exactly one move is unavoidable.
        let model = AssignmentModel {
            apps: vec![app(vec![
                cand(2.0, true, vec![(0, 1.0)]),
                cand(2.0, false, vec![]),
            ])],
            resources: vec![ResourceRow { name: "r".into(), capacity: 0.0 }],
        };
        let solved = solve_exact(&model, &SolveBudget::default()).unwrap();
        assert_eq!(solved.choice, vec![1]);
        assert_eq!(model.moved_count(&solved.choice), 1);
    }

    #[test]
    fn infeasible_model_errors_like_the_oracle() {
        let model = AssignmentModel {
            apps: vec![app(vec![cand(1.0, false, vec![(0, 2.0)])])],
            resources: vec![ResourceRow { name: "r".into(), capacity: 1.0 }],
        };
        assert_eq!(solve_exact(&model, &SolveBudget::default()), Err(SolverError::Infeasible));
        assert_eq!(brute_force(&model, DEFAULT_ENUMERATION_CAP), Err(SolverError::Infeasible));
    }

    #[test]
    fn node_budget_degrades_to_uncertified_incumbent() {
        let model = AssignmentModel {
            apps: (0..8)
                .map(|_| {
                    app(vec![
                        cand(2.0, true, vec![(0, 1.0)]),
                        cand(1.5, false, vec![(0, 2.0)]),
                    ])
                })
                .collect(),
            resources: vec![ResourceRow { name: "r".into(), capacity: 10.0 }],
        };
        let solved = solve_exact(&model, &SolveBudget::nodes_only(1)).unwrap();
        assert!(!solved.certified);
        // the incumbent is still a feasible assignment
        assert!(model.is_feasible(&solved.choice));
    }

    #[test]
    fn matches_the_oracle_on_random_models() {
        let limits = RandomModelLimits { max_apps: 8, max_candidates: 3, max_rows: 5 };
        for seed in 0..60 {
            let model = random_model(seed, &limits);
            let exact = solve_exact(&model, &SolveBudget::default()).unwrap();
            let oracle = brute_force(&model, DEFAULT_ENUMERATION_CAP).unwrap();
            assert!(exact.certified, "seed {seed} not certified");
            assert!(model.is_feasible(&exact.choice), "seed {seed} infeasible");
            assert_eq!(exact.objective, oracle.objective, "seed {seed} objective drift");
        }
    }

    #[test]
    fn solving_twice_is_identical() {
        let model = random_model(1234, &RandomModelLimits::default());
        let a = solve_exact(&model, &SolveBudget::nodes_only(1_000_000)).unwrap();
        let b = solve_exact(&model, &SolveBudget::nodes_only(1_000_000)).unwrap();
        assert_eq!(a.choice, b.choice);
        assert_eq!(a.objective, b.objective);
        assert_eq!(a.certified, b.certified);
        assert_eq!(a.stats.nodes, b.stats.nodes);
        assert_eq!(a.stats.lp_solves, b.stats.lp_solves);
    }
}
