//! Minimum-Hamming-distance projection of predicted commitment schedules onto
//! the per-generator feasibility region, solved by dynamic programming over
//! (period, status, dwell) states.
//!
//! The DP runs in O(T * (min_up + min_down)) per generator. Ties between
//! equal-distance optima are broken toward fewer committed periods, then
//! toward the lexicographically earliest off pattern.

use crate::uc::{CommitRules, Generator, RacInstance};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RepairError {
    #[error("generator {generator}: fixed cells admit no feasible completion")]
    NoFeasibleCompletion { generator: usize },
    #[error("generator {generator}: prediction length {got} does not match horizon {expected}")]
    LengthMismatch { generator: usize, expected: usize, got: usize },
}

const INF: u64 = u64::MAX / 4;

/// Backward cost-to-go table over (period, status, dwell) with saturating
/// dwell counters. Costs encode (hamming, committed-count) lexicographically.
struct Dp<'a> {
    horizon: usize,
    rules: &'a CommitRules,
    cap_off: usize,
    cap_on: usize,
    states: usize,
    /// ctg[t * states + state]
    ctg: Vec<u64>,
}

impl<'a> Dp<'a> {
    fn state(&self, on: bool, dwell: usize) -> usize {
        let cap = if on { self.cap_on } else { self.cap_off };
        let d = dwell.min(cap);
        if on {
            self.cap_off + (d - 1)
        } else {
            d - 1
        }
    }

    fn step_cost(&self, t: usize, b: bool, cost_target: &[Option<bool>]) -> u64 {
        let mismatch = matches!(cost_target[t], Some(want) if want != b);
        u64::from(mismatch) * (self.horizon as u64 + 1) + u64::from(b)
    }

    /// Allowed next state when choosing status `b` at period `t` from
    /// (status, dwell). Switching requires the completed dwell and enough
    /// room before the horizon end for the new minimum dwell.
    fn transition(&self, t: usize, on: bool, dwell: usize, b: bool) -> Option<(bool, usize)> {
        if b == on {
            return Some((on, dwell + 1));
        }
        let min_cur = if on { self.rules.min_up } else { self.rules.min_down };
        let min_new = if b { self.rules.min_up } else { self.rules.min_down };
        if dwell >= min_cur && self.horizon - t >= min_new {
            Some((b, 1))
        } else {
            None
        }
    }

    fn build(rules: &'a CommitRules, horizon: usize, cost_target: &[Option<bool>], hard_fixed: &[Option<bool>]) -> Self {
        let cap_off = rules.min_down;
        let cap_on = rules.min_up;
        let states = cap_off + cap_on;
        let mut dp = Dp { horizon, rules, cap_off, cap_on, states, ctg: vec![INF; (horizon + 1) * states] };
        for s in 0..states {
            dp.ctg[horizon * states + s] = 0;
        }
        for t in (0..horizon).rev() {
            for on in [false, true] {
                let cap = if on { cap_on } else { cap_off };
                for dwell in 1..=cap {
                    let mut best = INF;
                    for b in [false, true] {
                        if matches!(hard_fixed[t], Some(f) if f != b) {
                            continue;
                        }
                        if let Some((ns, nd)) = dp.transition(t, on, dwell, b) {
                            let next = dp.ctg[(t + 1) * states + dp.state(ns, nd)];
                            if next < INF {
                                best = best.min(dp.step_cost(t, b, cost_target) + next);
                            }
                        }
                    }
                    let idx = t * states + dp.state(on, dwell);
                    dp.ctg[idx] = best;
                }
            }
        }
        dp
    }

    /// Walk forward picking off before on whenever both reach the optimum, so
    /// ties fall to the lexicographically earliest off pattern.
    fn reconstruct(&self, cost_target: &[Option<bool>], hard_fixed: &[Option<bool>]) -> Option<Vec<bool>> {
        let init = (self.rules.initial_on, self.rules.initial_duration);
        let mut remaining = self.ctg[self.state(init.0, init.1)];
        if remaining >= INF {
            return None;
        }
        let (mut on, mut dwell) = init;
        let mut out = Vec::with_capacity(self.horizon);
        for t in 0..self.horizon {
            let mut chosen = None;
            for b in [false, true] {
                if matches!(hard_fixed[t], Some(f) if f != b) {
                    continue;
                }
                if let Some((ns, nd)) = self.transition(t, on, dwell, b) {
                    let next = self.ctg[(t + 1) * self.states + self.state(ns, nd)];
                    if next < INF && self.step_cost(t, b, cost_target) + next == remaining {
                        chosen = Some((b, ns, nd, next));
                        break;
                    }
                }
            }
            let (b, ns, nd, next) = chosen.expect("cost-to-go table is consistent");
            out.push(b);
            on = ns;
            dwell = nd;
            remaining = next;
        }
        Some(out)
    }
}

/// Core solve: minimize mismatches against `cost_target` (None = free cell)
/// subject to the switch rules and `hard_fixed` cells. Returns the schedule
/// and its mismatch count.
fn solve_dp(
    cost_target: &[Option<bool>],
    hard_fixed: &[Option<bool>],
    rules: &CommitRules,
) -> Option<(Vec<bool>, usize)> {
    let horizon = cost_target.len();
    let dp = Dp::build(rules, horizon, cost_target, hard_fixed);
    let schedule = dp.reconstruct(cost_target, hard_fixed)?;
    let distance = schedule
        .iter()
        .zip(cost_target)
        .filter(|&(&b, want)| matches!(want, Some(w) if *w != b))
        .count();
    Some((schedule, distance))
}

/// True when the fixed cells (plus must-run) can be extended to a feasible
/// schedule for this generator.
pub fn feasible_completion_exists(g: &Generator, fixed: &[Option<bool>]) -> bool {
    let horizon = g.must_run.len();
    let mut hard = vec![None; horizon];
    for t in 0..horizon {
        match (fixed.get(t).copied().flatten(), g.must_run[t]) {
            (Some(false), true) => return false,
            (f, true) => hard[t] = Some(true).or(f),
            (f, false) => hard[t] = f,
        }
    }
    let free = vec![None; horizon];
    solve_dp(&free, &hard, &CommitRules::of(g)).is_some()
}

/// Repair one generator's predicted 0/1 schedule to the closest feasible
/// schedule in Hamming distance, honoring `hard_fixed` cells and the
/// generator's must-run mask.
pub fn repair_generator(
    pred: &[bool],
    g: &Generator,
    hard_fixed: &[Option<bool>],
) -> Result<(Vec<bool>, usize), RepairError> {
    let horizon = g.must_run.len();
    if pred.len() != horizon || hard_fixed.len() != horizon {
        return Err(RepairError::LengthMismatch { generator: g.id, expected: horizon, got: pred.len() });
    }
    let mut hard = hard_fixed.to_vec();
    for t in 0..horizon {
        if g.must_run[t] {
            if hard[t] == Some(false) {
                return Err(RepairError::NoFeasibleCompletion { generator: g.id });
            }
            hard[t] = Some(true);
        }
    }
    let cost: Vec<Option<bool>> = pred.iter().map(|&b| Some(b)).collect();
    solve_dp(&cost, &hard, &CommitRules::of(g)).ok_or(RepairError::NoFeasibleCompletion { generator: g.id })
}

/// Outcome of repairing a prediction matrix over a confidence-selected cell
/// subset.
#[derive(Debug, Clone)]
pub struct RepairResult {
    /// Repaired schedule; rows for unselected generators hold the zero-cost
    /// feasibility baseline and contribute no fixings.
    pub schedule: Vec<Vec<bool>>,
    /// Per-generator Hamming distance to the prediction over selected cells.
    pub distance: Vec<usize>,
    /// Cells where the repaired value differs from the prediction (over
    /// selected cells only).
    pub changed: Vec<(usize, usize)>,
    /// Selected-cell mask the repair was run against.
    pub selected: Vec<Vec<bool>>,
    /// Generators that had at least one selected cell.
    pub touched: Vec<bool>,
}

impl RepairResult {
    /// Cells to fix in the MILP. By default only the selected cells' repaired
    /// values are fixed; with `fix_unselected` every cell of a touched
    /// generator is fixed to the DP schedule.
    pub fn fixings(&self, fix_unselected: bool) -> Vec<(usize, usize, bool)> {
        let mut out = Vec::new();
        for (g, row) in self.schedule.iter().enumerate() {
            if !self.touched[g] {
                continue;
            }
            for (t, &b) in row.iter().enumerate() {
                if fix_unselected || self.selected[g][t] {
                    out.push((g, t, b));
                }
            }
        }
        out
    }

    pub fn total_distance(&self) -> usize {
        self.distance.iter().sum()
    }
}

/// Repair the selected cells of a predicted commitment matrix. Selected cells
/// carry Hamming cost; unselected cells are free in the DP. Generators with
/// no selected cell are untouched.
pub fn repair_all(
    pred: &[Vec<bool>],
    selected: &[(usize, usize)],
    inst: &RacInstance,
) -> Result<RepairResult, RepairError> {
    let horizon = inst.horizon;
    let gens = inst.generators.len();
    let mut sel_mask = vec![vec![false; horizon]; gens];
    for &(g, t) in selected {
        sel_mask[g][t] = true;
    }
    let mut schedule = Vec::with_capacity(gens);
    let mut distance = Vec::with_capacity(gens);
    let mut changed = Vec::new();
    let mut touched = Vec::with_capacity(gens);
    for (g, generator) in inst.generators.iter().enumerate() {
        let has_selection = sel_mask[g].iter().any(|&s| s);
        let mut hard = vec![None; horizon];
        for t in 0..horizon {
            if generator.must_run[t] {
                hard[t] = Some(true);
            }
        }
        let cost: Vec<Option<bool>> = (0..horizon)
            .map(|t| if sel_mask[g][t] { Some(pred[g][t]) } else { None })
            .collect();
        let (row, dist) = solve_dp(&cost, &hard, &CommitRules::of(generator))
            .ok_or(RepairError::NoFeasibleCompletion { generator: generator.id })?;
        for t in 0..horizon {
            if sel_mask[g][t] && row[t] != pred[g][t] {
                changed.push((g, t));
            }
        }
        schedule.push(row);
        distance.push(dist);
        touched.push(has_selection);
    }
    Ok(RepairResult { schedule, distance, changed, selected: sel_mask, touched })
}

#[cfg(test)]
pub(crate) mod oracle {
    use crate::uc::{commitment_rules_ok, CommitRules};

    /// Exhaustive minimum-Hamming repair over all 2^T schedules; mirrors the
    /// DP's tie-breaks (fewest committed, then lexicographically smallest).
    pub fn brute_force_repair(
        cost_target: &[Option<bool>],
        hard_fixed: &[Option<bool>],
        rules: &CommitRules,
    ) -> Option<(Vec<bool>, usize)> {
        let horizon = cost_target.len();
        let mut best: Option<(usize, usize, Vec<bool>)> = None;
        for bits in 0..(1u32 << horizon) {
            let x: Vec<bool> = (0..horizon).map(|t| bits >> t & 1 == 1).collect();
            if x.iter()
                .zip(hard_fixed)
                .any(|(&b, fix)| matches!(fix, Some(f) if *f != b))
            {
                continue;
            }
            if !commitment_rules_ok(&x, rules) {
                continue;
            }
            let dist = x
                .iter()
                .zip(cost_target)
                .filter(|&(&b, want)| matches!(want, Some(w) if *w != b))
                .count();
            let committed = x.iter().filter(|&&b| b).count();
            let candidate = (dist, committed, x);
            best = match best {
                None => Some(candidate),
                Some(cur) => {
                    if (candidate.0, candidate.1, &candidate.2) < (cur.0, cur.1, &cur.2) {
                        Some(candidate)
                    } else {
                        Some(cur)
                    }
                }
            };
        }
        best.map(|(dist, _, x)| (x, dist))
    }
}
