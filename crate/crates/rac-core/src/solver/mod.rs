//! LP and MIP solving: the simplex engine, a deterministic branch-and-bound
//! over the commitment binaries, and the outer loop that adds violated
//! transmission constraints lazily in batches of the k most violated.

pub mod lu;
pub mod simplex;

use crate::milp::{
    build_rac_with_ptdf, evaluate_flow_violations, BuildError, MilpProblem, TransmissionKey,
    VarKind, FLOW_TOLERANCE,
};
use crate::netcalc::{compute_ptdf, NetcalcError};
use crate::repair;
use crate::uc::{RacInstance, Schedule};
use simplex::{solve_form, Basis, SimplexOptions, SimplexStatus, StandardForm};
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Network(#[from] NetcalcError),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

// ---------------------------------------------------------------------------
// LP interface
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    Numerical,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Values of the problem's variables (logicals excluded).
    pub primal: Vec<f64>,
    pub objective: f64,
    /// Dual value per constraint row.
    pub duals: Vec<f64>,
    pub iterations: u64,
}

/// Solve the LP relaxation of a problem. The result is self-audited: primal
/// feasibility within 1e-7 and complementary slackness within 1e-6, else the
/// status degrades to `Numerical`.
pub fn solve_lp(p: &MilpProblem) -> LpSolution {
    let form = StandardForm::from_problem(p);
    let r = solve_form(&form, None, SimplexOptions::default());
    lp_solution_from(p, &form, r)
}

fn lp_solution_from(p: &MilpProblem, form: &StandardForm, r: simplex::SimplexResult) -> LpSolution {
    let mut status = match r.status {
        SimplexStatus::Optimal => LpStatus::Optimal,
        SimplexStatus::Infeasible => LpStatus::Infeasible,
        SimplexStatus::Unbounded => LpStatus::Unbounded,
        SimplexStatus::IterLimit | SimplexStatus::Numerical => LpStatus::Numerical,
    };
    if status == LpStatus::Optimal && !audit(p, form, &r) {
        status = LpStatus::Numerical;
    }
    LpSolution {
        status,
        primal: r.x[..p.variables.len()].to_vec(),
        objective: r.objective,
        duals: r.duals,
        iterations: r.iterations,
    }
}

/// Primal feasibility and complementary slackness audit.
fn audit(p: &MilpProblem, _form: &StandardForm, r: &simplex::SimplexResult) -> bool {
    let feas = 1e-7;
    for (j, v) in p.variables.iter().enumerate() {
        let scale = 1.0 + v.lower.abs().max(v.upper.abs());
        if r.x[j] < v.lower - feas * scale || r.x[j] > v.upper + feas * scale {
            if std::env::var("RAC_AUDIT_DEBUG").is_ok() {
                eprintln!("audit: var {} ({}) value {} outside [{}, {}]", j, v.name, r.x[j], v.lower, v.upper);
            }
            return false;
        }
    }
    let dual_scale = 1.0 + r.duals.iter().fold(0.0f64, |a, d| a.max(d.abs()));
    for (i, c) in p.constraints.iter().enumerate() {
        let lhs: f64 = c.terms.iter().map(|&(j, v)| v * r.x[j]).sum();
        let scale = 1.0 + c.rhs.abs() + lhs.abs();
        let slack = lhs - c.rhs;
        let ok = match c.sense {
            crate::milp::Sense::Le => slack <= feas * scale,
            crate::milp::Sense::Ge => slack >= -feas * scale,
            crate::milp::Sense::Eq => slack.abs() <= feas * scale,
        };
        if !ok {
            if std::env::var("RAC_AUDIT_DEBUG").is_ok() {
                eprintln!("audit: row {} ({}) lhs {} rhs {} sense {:?}", i, c.tag, lhs, c.rhs, c.sense);
            }
            return false;
        }
        // Complementary slackness: a row with real slack carries no dual.
        if c.sense != crate::milp::Sense::Eq
            && slack.abs() > 1e-6 * scale
            && r.duals[i].abs() > 1e-6 * dual_scale
        {
            if std::env::var("RAC_AUDIT_DEBUG").is_ok() {
                eprintln!("audit: row {} ({}) slack {} dual {}", i, c.tag, slack, r.duals[i]);
            }
            return false;
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Branch and bound
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MipStatus {
    Optimal,
    TimeLimit,
    NodeLimit,
    Infeasible,
    Numerical,
}

#[derive(Debug, Clone, Copy)]
pub struct MipConfig {
    /// Relative optimality gap at which the search stops.
    pub gap_tol: f64,
    /// Wall-clock budget in seconds.
    pub time_limit: f64,
    pub max_nodes: usize,
    /// Expansions between best-bound restarts in the depth-first search.
    pub restart_interval: usize,
}

impl Default for MipConfig {
    fn default() -> Self {
        MipConfig { gap_tol: 1e-3, time_limit: 600.0, max_nodes: 500_000, restart_interval: 100 }
    }
}

/// One row of the per-round lazy-loop trace.
#[derive(Debug, Clone)]
pub struct RoundTrace {
    pub round: usize,
    pub added: Vec<TransmissionKey>,
    pub objective: f64,
    pub nodes: usize,
    pub simplex_iterations: u64,
    pub wall_time: f64,
}

#[derive(Debug, Clone)]
pub struct MipSolution {
    pub status: MipStatus,
    /// Incumbent values for all problem variables.
    pub primal: Vec<f64>,
    pub objective: f64,
    pub bound: f64,
    /// (objective - bound) / max(|objective|, eps).
    pub gap: f64,
    pub nodes: usize,
    pub simplex_iterations: u64,
    pub wall_time: f64,
    /// Lazy-loop trace; a plain branch-and-bound run has none.
    pub rounds: Vec<RoundTrace>,
}

impl MipSolution {
    pub fn relative_gap(objective: f64, bound: f64) -> f64 {
        (objective - bound).max(0.0) / objective.abs().max(1e-9)
    }

    /// Machine-readable per-round trace.
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("round,added,objective,nodes,simplex_iterations\n");
        for r in &self.rounds {
            let _ = writeln!(
                s,
                "{},{},{:.6},{},{}",
                r.round,
                r.added.len(),
                r.objective,
                r.nodes,
                r.simplex_iterations
            );
        }
        s
    }

    /// Fixed-column text log of the lazy rounds.
    pub fn format_log(&self) -> String {
        let mut s = String::from("round    nodes incumbent          bound            gap      added\n");
        for r in &self.rounds {
            let _ = writeln!(
                s,
                "{:>5} {:>8} {:>16.6} {:>16.6} {:>8.4} {:>8}",
                r.round,
                r.nodes,
                r.objective,
                self.bound,
                self.gap,
                r.added.len()
            );
        }
        s
    }
}

struct Node {
    id: usize,
    /// (variable, lower, upper) tightenings relative to the root problem.
    changes: Vec<(usize, f64, f64)>,
    lp_bound: f64,
    basis: Basis,
}

/// Candidate integral assignments proposed from an LP relaxation; values are
/// bound fixings (variable, value).
pub type RootHeuristic<'a> = dyn Fn(&[f64]) -> Option<Vec<(usize, f64)>> + 'a;

pub fn branch_and_bound(p: &MilpProblem, cfg: &MipConfig) -> MipSolution {
    branch_and_bound_with_heuristic(p, cfg, None)
}

pub fn branch_and_bound_with_heuristic(
    p: &MilpProblem,
    cfg: &MipConfig,
    heuristic: Option<&RootHeuristic>,
) -> MipSolution {
    let start = Instant::now();
    let form_root = StandardForm::from_problem(p);
    let binaries: Vec<usize> = p
        .variables
        .iter()
        .enumerate()
        .filter(|(_, v)| v.kind == VarKind::Binary)
        .map(|(j, _)| j)
        .collect();
    // Commitment binaries come first in the unit-commitment layout; the
    // startup/shutdown indicators are integral whenever the commitments are,
    // so they only get branched as a last resort.
    let x_block_end = if p.layout.gens > 0 { p.layout.gens * p.layout.horizon } else { usize::MAX };
    let (primary_binaries, secondary_binaries): (Vec<usize>, Vec<usize>) =
        binaries.iter().partition(|&&j| j < x_block_end);
    let int_tol = 1e-6;

    let mut form = form_root.clone();
    let mut total_iters: u64 = 0;
    let mut nodes_expanded = 0usize;
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut numerical_trouble = false;

    let fail = |status: MipStatus, iters: u64, nodes: usize, start: &Instant| MipSolution {
        status,
        primal: Vec::new(),
        objective: f64::NAN,
        bound: f64::NEG_INFINITY,
        gap: f64::NAN,
        nodes,
        simplex_iterations: iters,
        wall_time: start.elapsed().as_secs_f64(),
        rounds: Vec::new(),
    };

    // Root relaxation from a crash basis: power-balance rows start with
    // their positive penalty slack basic, which is primal feasible for
    // soft-constrained commitment models and skips phase 1.
    let crash = crash_basis(p, &form_root);
    let root = solve_form(&form, crash.as_ref(), SimplexOptions::default());
    total_iters += root.iterations;
    nodes_expanded += 1;
    match root.status {
        SimplexStatus::Infeasible => return fail(MipStatus::Infeasible, total_iters, nodes_expanded, &start),
        SimplexStatus::Optimal => {}
        _ => return fail(MipStatus::Numerical, total_iters, nodes_expanded, &start),
    }

    // Root heuristic: evaluate a proposed integral assignment to seed the
    // incumbent before the search starts.
    if let Some(h) = heuristic {
        if let Some(fixings) = h(&root.x[..p.variables.len()]) {
            restore_bounds(&mut form, &form_root, &[]);
            for &(j, val) in &fixings {
                form.lower[j] = val;
                form.upper[j] = val;
            }
            let r = solve_form(&form, Some(&root.basis), SimplexOptions { partial_pricing: true, ..SimplexOptions::default() });
            total_iters += r.iterations;
            if r.status == SimplexStatus::Optimal
                && binaries.iter().all(|&j| is_integral(r.x[j], int_tol))
            {
                incumbent = Some((r.objective, r.x[..p.variables.len()].to_vec()));
            }
        }
    }

    let mut next_id = 1usize;
    let mut open: Vec<Node> = vec![Node { id: 0, changes: Vec::new(), lp_bound: root.objective, basis: root.basis.clone() }];
    let mut since_restart = 0usize;
    let mut root_result = Some(root);

    let (objective, primal, bound) = loop {
        // Termination checks.
        let open_bound = open.iter().map(|n| n.lp_bound).fold(f64::INFINITY, f64::min);
        let inc_obj = incumbent.as_ref().map_or(f64::INFINITY, |(o, _)| *o);
        let global_bound = open_bound.min(inc_obj);
        if let Some((obj, x)) = &incumbent {
            if open.is_empty() || MipSolution::relative_gap(*obj, global_bound) <= cfg.gap_tol {
                break (*obj, x.clone(), if open.is_empty() { *obj } else { global_bound });
            }
        } else if open.is_empty() {
            // No incumbent and nothing left: infeasible integer problem.
            return fail(MipStatus::Infeasible, total_iters, nodes_expanded, &start);
        }
        if start.elapsed().as_secs_f64() > cfg.time_limit || nodes_expanded >= cfg.max_nodes {
            let status = if nodes_expanded >= cfg.max_nodes { MipStatus::NodeLimit } else { MipStatus::TimeLimit };
            match incumbent {
                Some((obj, x)) => {
                    let gap = MipSolution::relative_gap(obj, global_bound);
                    return MipSolution {
                        status,
                        primal: x,
                        objective: obj,
                        bound: global_bound,
                        gap,
                        nodes: nodes_expanded,
                        simplex_iterations: total_iters,
                        wall_time: start.elapsed().as_secs_f64(),
                        rounds: Vec::new(),
                    };
                }
                None => return fail(status, total_iters, nodes_expanded, &start),
            }
        }

        // Node selection: LIFO with periodic best-bound restarts.
        since_restart += 1;
        let pick = if since_restart >= cfg.restart_interval {
            since_restart = 0;
            let mut best = 0usize;
            for (i, n) in open.iter().enumerate() {
                if n.lp_bound < open[best].lp_bound - 1e-12
                    || (n.lp_bound <= open[best].lp_bound + 1e-12 && n.id < open[best].id)
                {
                    best = i;
                }
            }
            best
        } else {
            open.len() - 1
        };
        let node = open.swap_remove(pick);

        // Prune against the incumbent before solving.
        let cutoff = incumbent
            .as_ref()
            .map(|(obj, _)| obj - cfg.gap_tol * obj.abs().max(1e-9));
        if let Some(cut) = cutoff {
            if node.lp_bound >= cut {
                continue;
            }
        }

        // Node 0 reuses the already-solved root relaxation.
        let r = match (node.id, root_result.take()) {
            (0, Some(r)) => r,
            _ => {
                restore_bounds(&mut form, &form_root, &node.changes);
                let node_opts = SimplexOptions { partial_pricing: true, ..SimplexOptions::default() };
                let r = solve_form(&form, Some(&node.basis), node_opts);
                total_iters += r.iterations;
                nodes_expanded += 1;
                if std::env::var("RAC_BB_DEBUG").is_ok() && nodes_expanded % 50 == 0 {
                    eprintln!(
                        "bb: nodes {nodes_expanded} open {} iters {total_iters} inc {:?} bound {:.1} depth {}",
                        open.len(),
                        incumbent.as_ref().map(|(o, _)| *o),
                        open.iter().map(|n| n.lp_bound).fold(f64::INFINITY, f64::min),
                        node.changes.len(),
                    );
                }
                r
            }
        };
        match r.status {
            SimplexStatus::Infeasible => continue,
            SimplexStatus::Optimal => {}
            _ => {
                numerical_trouble = true;
                continue;
            }
        }
        if let Some(cut) = cutoff {
            if r.objective >= cut {
                continue;
            }
        }

        // Integer feasible? Branch on the most fractional binary, preferring
        // the commitment block over the implied startup/shutdown indicators.
        let pick_most_fractional = |range: &[usize]| {
            range
                .iter()
                .filter(|&&j| !is_integral(r.x[j], int_tol))
                .max_by(|&&a, &&b| {
                    let fa = frac_score(r.x[a]);
                    let fb = frac_score(r.x[b]);
                    fa.partial_cmp(&fb).unwrap().then(b.cmp(&a))
                })
                .copied()
        };
        let fractional = pick_most_fractional(&primary_binaries)
            .or_else(|| pick_most_fractional(&secondary_binaries));
        match fractional {
            None => {
                let obj = r.objective;
                if incumbent.as_ref().map_or(true, |(best, _)| obj < *best - 1e-12) {
                    incumbent = Some((obj, r.x[..p.variables.len()].to_vec()));
                }
            }
            Some(j) => {
                let xj = r.x[j];
                let mut down = node.changes.clone();
                down.push((j, form_root.lower[j], xj.floor()));
                let mut up = node.changes.clone();
                up.push((j, xj.ceil(), form_root.upper[j]));
                let down_node = Node { id: next_id, changes: down, lp_bound: r.objective, basis: r.basis.clone() };
                let up_node = Node { id: next_id + 1, changes: up, lp_bound: r.objective, basis: r.basis };
                next_id += 2;
                // Explore the rounded side first (pushed last).
                if xj - xj.floor() >= 0.5 {
                    open.push(down_node);
                    open.push(up_node);
                } else {
                    open.push(up_node);
                    open.push(down_node);
                }
            }
        }
    };

    let status = if numerical_trouble { MipStatus::Numerical } else { MipStatus::Optimal };
    let gap = MipSolution::relative_gap(objective, bound);
    MipSolution {
        status,
        primal,
        objective,
        bound,
        gap,
        nodes: nodes_expanded,
        simplex_iterations: total_iters,
        wall_time: start.elapsed().as_secs_f64(),
        rounds: Vec::new(),
    }
}

/// Balance rows carry the positive imbalance slack as the starting basic
/// variable; every other row keeps its logical.
fn crash_basis(p: &MilpProblem, form: &StandardForm) -> Option<Basis> {
    if p.layout.gens == 0 {
        return None;
    }
    let mut basis = Basis::all_logical(form);
    for (i, c) in p.constraints.iter().enumerate() {
        if let crate::milp::ConstraintTag::Balance { t } = c.tag {
            let col = p.layout.slack_balance_pos(t);
            if c.terms.iter().any(|&(j, v)| j == col && v == 1.0) {
                basis.basic[i] = col;
            }
        }
    }
    Some(basis)
}

fn is_integral(v: f64, tol: f64) -> bool {
    (v - v.round()).abs() <= tol
}

/// Distance from the nearest integer; larger is more fractional.
fn frac_score(v: f64) -> f64 {
    (v - v.round()).abs()
}

fn restore_bounds(form: &mut StandardForm, root: &StandardForm, changes: &[(usize, f64, f64)]) {
    form.lower.copy_from_slice(&root.lower);
    form.upper.copy_from_slice(&root.upper);
    for &(j, lo, hi) in changes {
        form.lower[j] = form.lower[j].max(lo);
        form.upper[j] = form.upper[j].min(hi);
    }
}

// ---------------------------------------------------------------------------
// Lazy transmission loop
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct LazyConfig {
    /// Constraints added per round (the k most violated).
    pub k: usize,
    pub gap_tol: f64,
    /// Total wall-clock budget across rounds, seconds.
    pub time_limit: f64,
    pub max_rounds: usize,
    /// Seed the incumbent at the root with a round-and-repair heuristic.
    pub use_root_heuristic: bool,
}

impl Default for LazyConfig {
    fn default() -> Self {
        LazyConfig { k: 15, gap_tol: 1e-3, time_limit: 600.0, max_rounds: 50, use_root_heuristic: true }
    }
}

#[derive(Debug, Clone)]
pub struct LazySolveResult {
    pub mip: MipSolution,
    /// The final problem (with the full active set), for solution extraction.
    pub problem: MilpProblem,
    pub active: Vec<TransmissionKey>,
    /// True when the round cap stopped the loop with violations remaining.
    pub rounds_exhausted: bool,
}

impl LazySolveResult {
    pub fn commitments(&self) -> Vec<Vec<bool>> {
        self.problem.commitments_from_primal(&self.mip.primal)
    }
}

/// Solve with lazily generated transmission constraints: start from the seed
/// set, then repeatedly add up to `k` most-violated constraints and re-solve
/// until the incumbent violates nothing outside the active set.
pub fn iterative_solve(
    inst: &RacInstance,
    fixed: &[(usize, usize, bool)],
    seed_lines: &[TransmissionKey],
    cfg: &LazyConfig,
) -> Result<LazySolveResult, SolverError> {
    let start = Instant::now();
    let ptdf = compute_ptdf(&inst.network)?;
    let mut active: BTreeSet<TransmissionKey> = seed_lines.iter().copied().collect();
    let mut rounds: Vec<RoundTrace> = Vec::new();

    loop {
        let round = rounds.len();
        let round_start = Instant::now();
        let active_vec: Vec<TransmissionKey> = active.iter().copied().collect();
        let problem = build_rac_with_ptdf(inst, fixed, &active_vec, &ptdf)?;

        let remaining = (cfg.time_limit - start.elapsed().as_secs_f64()).max(1e-3);
        let mip_cfg = MipConfig { gap_tol: cfg.gap_tol, time_limit: remaining, ..MipConfig::default() };

        let mut mip = {
            let heuristic_closure;
            let heuristic: Option<&RootHeuristic> = if cfg.use_root_heuristic {
                heuristic_closure = make_uc_heuristic(inst, &problem);
                Some(&heuristic_closure)
            } else {
                None
            };
            branch_and_bound_with_heuristic(&problem, &mip_cfg, heuristic)
        };
        match mip.status {
            MipStatus::Optimal | MipStatus::TimeLimit | MipStatus::NodeLimit => {}
            MipStatus::Infeasible => {
                return Err(SolverError::Numerical(
                    "soft-constrained model reported infeasible".into(),
                ))
            }
            MipStatus::Numerical => {
                return Err(SolverError::Numerical("branch and bound hit numerical trouble".into()))
            }
        }

        let injections = problem.injections_from_primal(inst, &mip.primal);
        let violations: Vec<_> = evaluate_flow_violations(inst, &injections, &ptdf)
            .into_iter()
            .filter(|v| !active.contains(&(v.line, v.period, v.dir)))
            .collect();

        let added: Vec<TransmissionKey> = violations
            .iter()
            .take(cfg.k)
            .map(|v| (v.line, v.period, v.dir))
            .collect();
        rounds.push(RoundTrace {
            round,
            added: added.clone(),
            objective: mip.objective,
            nodes: mip.nodes,
            simplex_iterations: mip.simplex_iterations,
            wall_time: round_start.elapsed().as_secs_f64(),
        });

        let out_of_time = mip.status == MipStatus::TimeLimit;
        let exhausted = round + 1 >= cfg.max_rounds;
        if violations.iter().all(|v| v.violation <= FLOW_TOLERANCE) || out_of_time || exhausted {
            let rounds_exhausted = exhausted && !violations.is_empty() && !out_of_time;
            mip.wall_time = start.elapsed().as_secs_f64();
            mip.rounds = rounds;
            return Ok(LazySolveResult {
                mip,
                problem,
                active: active_vec,
                rounds_exhausted,
            });
        }
        for key in added {
            active.insert(key);
        }
    }
}

/// Round-and-repair incumbent heuristic: round the LP relaxation commitments,
/// project each generator onto its feasible region, and fix x, v, and w to
/// the repaired schedule.
fn make_uc_heuristic<'a>(
    inst: &'a RacInstance,
    problem: &'a MilpProblem,
) -> Box<dyn Fn(&[f64]) -> Option<Vec<(usize, f64)>> + 'a> {
    Box::new(move |primal: &[f64]| {
        let layout = &problem.layout;
        let rounded: Vec<Vec<bool>> = (0..layout.gens)
            .map(|g| (0..layout.horizon).map(|t| primal[layout.x(g, t)] > 0.5).collect())
            .collect();
        let selected: Vec<(usize, usize)> = (0..layout.gens)
            .flat_map(|g| (0..layout.horizon).map(move |t| (g, t)))
            .filter(|&(g, t)| !inst.generators[g].must_run[t])
            .collect();
        let repaired = repair::repair_all(&rounded, &selected, inst).ok()?;
        let schedule = Schedule::from_commitments(repaired.schedule.clone(), &inst.generators);
        let mut fixings = Vec::with_capacity(3 * layout.gens * layout.horizon);
        for g in 0..layout.gens {
            for t in 0..layout.horizon {
                fixings.push((layout.x(g, t), f64::from(schedule.x[g][t])));
                fixings.push((layout.v(g, t), f64::from(schedule.u_start[g][t])));
                fixings.push((layout.w(g, t), f64::from(schedule.u_stop[g][t])));
            }
        }
        Some(fixings)
    })
}
