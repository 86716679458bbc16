//! Bounded-variable revised primal simplex with a composite phase 1.
//!
//! Works on the standard form `A x + s = b` with bounds on every column;
//! logical columns carry the row sense. Phase 1 starts from any basis
//! (all-logical by default, a caller-provided one for warm starts) and
//! minimizes the total bound violation of the basic variables with piecewise
//! costs; phase 2 is textbook Dantzig pricing with a Bland fallback after
//! degenerate stalls. All tie-breaks are index-based so runs are
//! deterministic.

use super::lu::{BasisFactors, ColMatrix};
use crate::milp::{MilpProblem, Sense};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimplexStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterLimit,
    Numerical,
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub feas_tol: f64,
    pub dual_tol: f64,
    pub max_iters: u64,
    pub refactor_every: usize,
    /// Rotating block pricing instead of a full Devex scan; pays off on warm
    /// re-solves that take few iterations.
    pub partial_pricing: bool,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            feas_tol: 1e-7,
            dual_tol: 1e-7,
            max_iters: 0,
            refactor_every: 64,
            partial_pricing: false,
        }
    }
}

/// Computational form of an LP: structural columns then one logical column
/// per row.
#[derive(Debug, Clone)]
pub struct StandardForm {
    pub m: usize,
    pub n: usize,
    pub cols: ColMatrix,
    pub cost: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl StandardForm {
    /// Build from a MILP with integrality relaxed.
    pub fn from_problem(p: &MilpProblem) -> Self {
        let n = p.variables.len();
        let m = p.constraints.len();
        let mut per_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, c) in p.constraints.iter().enumerate() {
            for &(j, v) in &c.terms {
                if v != 0.0 {
                    per_col[j].push((i, v));
                }
            }
        }
        let mut col_ptr = vec![0usize];
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        for col in &per_col {
            for &(i, v) in col {
                row_idx.push(i);
                values.push(v);
            }
            col_ptr.push(row_idx.len());
        }
        let mut lower: Vec<f64> = p.variables.iter().map(|v| v.lower).collect();
        let mut upper: Vec<f64> = p.variables.iter().map(|v| v.upper).collect();
        let mut cost: Vec<f64> = p.variables.iter().map(|v| v.objective).collect();
        for (i, c) in p.constraints.iter().enumerate() {
            row_idx.push(i);
            values.push(1.0);
            col_ptr.push(row_idx.len());
            let (lo, hi) = match c.sense {
                Sense::Le => (0.0, f64::INFINITY),
                Sense::Ge => (f64::NEG_INFINITY, 0.0),
                Sense::Eq => (0.0, 0.0),
            };
            lower.push(lo);
            upper.push(hi);
            cost.push(0.0);
        }
        let cols = ColMatrix { rows: m, col_ptr, row_idx, values };
        StandardForm { m, n, cols, cost, lower, upper, rhs: p.constraints.iter().map(|c| c.rhs).collect() }
    }

    pub fn ncols(&self) -> usize {
        self.n + self.m
    }
}

/// Simplex basis: one basic column per row plus the bound status of every
/// nonbasic column.
#[derive(Debug, Clone)]
pub struct Basis {
    pub basic: Vec<usize>,
    pub at_upper: Vec<bool>,
}

impl Basis {
    pub fn all_logical(form: &StandardForm) -> Self {
        let basic: Vec<usize> = (form.n..form.n + form.m).collect();
        let mut at_upper = vec![false; form.ncols()];
        for (j, up) in at_upper.iter_mut().enumerate() {
            *up = !form.lower[j].is_finite();
        }
        Basis { basic, at_upper }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub status: SimplexStatus,
    pub x: Vec<f64>,
    pub duals: Vec<f64>,
    pub objective: f64,
    pub iterations: u64,
    pub basis: Basis,
}

#[derive(Clone, Copy, PartialEq)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
}

struct Solver<'a> {
    form: &'a StandardForm,
    opts: SimplexOptions,
    basic: Vec<usize>,
    state: Vec<VarState>,
    x: Vec<f64>,
    factors: BasisFactors,
    iterations: u64,
    stall: u32,
    bland: bool,
    /// Devex reference weights, one per column.
    weights: Vec<f64>,
    price_cursor: usize,
}

enum Blocker {
    BoundFlip,
    Row { r: usize, to_upper: bool },
}

/// Deferred Devex update: the pivot row (through the pre-pivot basis), the
/// pivot element, and the entering column's reference weight.
struct PendingDevex {
    rho: Vec<f64>,
    pivot: f64,
    entering_weight: f64,
}

impl<'a> Solver<'a> {
    fn new(form: &'a StandardForm, start: Option<&Basis>, opts: SimplexOptions) -> Result<Self, SimplexStatus> {
        let ncols = form.ncols();
        let basis = match start {
            Some(b) if b.basic.len() == form.m && b.at_upper.len() == ncols => b.clone(),
            _ => Basis::all_logical(form),
        };
        let (basis, factors) = match BasisFactors::factorize(&form.cols, &basis.basic) {
            Ok(f) => (basis, f),
            // A stale warm-start basis can be singular; fall back cold.
            Err(_) => {
                let fallback = Basis::all_logical(form);
                let f = BasisFactors::factorize(&form.cols, &fallback.basic)
                    .map_err(|_| SimplexStatus::Numerical)?;
                (fallback, f)
            }
        };
        let mut s = Solver::init(form, basis, factors, opts);
        s.compute_basic_values();
        Ok(s)
    }

    fn init(form: &'a StandardForm, basis: Basis, factors: BasisFactors, opts: SimplexOptions) -> Self {
        let ncols = form.ncols();
        let mut state = vec![VarState::AtLower; ncols];
        for (j, st) in state.iter_mut().enumerate() {
            if basis.at_upper[j] && form.upper[j].is_finite() {
                *st = VarState::AtUpper;
            }
        }
        for (r, &j) in basis.basic.iter().enumerate() {
            state[j] = VarState::Basic(r);
        }
        Solver {
            form,
            opts,
            basic: basis.basic,
            state,
            x: vec![0.0; ncols],
            factors,
            iterations: 0,
            stall: 0,
            bland: false,
            weights: vec![1.0; ncols],
            price_cursor: 0,
        }
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.state[j] {
            VarState::AtUpper => self.form.upper[j],
            _ => {
                if self.form.lower[j].is_finite() {
                    self.form.lower[j]
                } else {
                    self.form.upper[j].min(0.0)
                }
            }
        }
    }

    fn compute_basic_values(&mut self) {
        let form = self.form;
        let mut rhs = form.rhs.clone();
        for j in 0..form.ncols() {
            if matches!(self.state[j], VarState::Basic(_)) {
                continue;
            }
            let v = self.nonbasic_value(j);
            self.x[j] = v;
            if v != 0.0 {
                let (rows, vals) = form.cols.col(j);
                for (&i, &a) in rows.iter().zip(vals) {
                    rhs[i] -= a * v;
                }
            }
        }
        let mut beta = vec![0.0; form.m];
        self.factors.ftran(&rhs, &mut beta);
        for (r, &j) in self.basic.iter().enumerate() {
            self.x[j] = beta[r];
        }
    }

    fn refactorize(&mut self) -> Result<(), SimplexStatus> {
        self.factors = BasisFactors::factorize(&self.form.cols, &self.basic)
            .map_err(|_| SimplexStatus::Numerical)?;
        self.compute_basic_values();
        Ok(())
    }

    /// Total primal infeasibility and per-row phase-1 costs.
    fn infeasibility(&self, d: &mut [f64]) -> f64 {
        let mut total = 0.0;
        for (r, &j) in self.basic.iter().enumerate() {
            let v = self.x[j];
            d[r] = 0.0;
            if v < self.form.lower[j] - self.opts.feas_tol {
                d[r] = -1.0;
                total += self.form.lower[j] - v;
            } else if v > self.form.upper[j] + self.opts.feas_tol {
                d[r] = 1.0;
                total += v - self.form.upper[j];
            }
        }
        total
    }

    /// Fused pricing pass: applies any pending Devex weight update while
    /// scoring every nonbasic column with one traversal of the column data.
    /// Returns the entering column (best score, or lowest eligible index
    /// under Bland's rule).
    fn price(&mut self, y: &[f64], phase1: bool, pending: Option<&PendingDevex>) -> Option<usize> {
        if self.opts.partial_pricing && !self.bland {
            return self.price_partial(y, phase1);
        }
        let form = self.form;
        let mut best: Option<(f64, usize)> = None;
        let mut bland_pick: Option<usize> = None;
        for j in 0..form.ncols() {
            let state = self.state[j];
            if matches!(state, VarState::Basic(_)) {
                continue;
            }
            let (rows, vals) = form.cols.col(j);
            let mut rc = if phase1 { 0.0 } else { form.cost[j] };
            let mut beta = 0.0;
            match pending {
                Some(pd) => {
                    for (&i, &a) in rows.iter().zip(vals) {
                        rc -= y[i] * a;
                        beta += pd.rho[i] * a;
                    }
                    if beta != 0.0 {
                        let tau = beta / pd.pivot;
                        let cand = tau * tau * pd.entering_weight;
                        if cand > self.weights[j] {
                            self.weights[j] = cand;
                        }
                    }
                }
                None => {
                    for (&i, &a) in rows.iter().zip(vals) {
                        rc -= y[i] * a;
                    }
                }
            }
            if form.upper[j] - form.lower[j] <= 0.0 {
                continue; // fixed variables never enter
            }
            let viol = match state {
                VarState::AtLower => -rc,
                VarState::AtUpper => rc,
                VarState::Basic(_) => unreachable!(),
            };
            if viol > self.opts.dual_tol {
                if bland_pick.is_none() {
                    bland_pick = Some(j);
                }
                let score = viol * viol / self.weights[j];
                match best {
                    Some((b, _)) if b >= score => {}
                    _ => best = Some((score, j)),
                }
            }
        }
        if self.bland {
            bland_pick
        } else {
            best.map(|(_, j)| j)
        }
    }

    /// Block pricing with a rotating cursor and plain largest-violation
    /// scoring; a fruitless full wrap proves optimality.
    fn price_partial(&mut self, y: &[f64], phase1: bool) -> Option<usize> {
        let form = self.form;
        let ncols = form.ncols();
        let block = 512.min(ncols);
        let mut scanned = 0;
        let mut best: Option<(f64, usize)> = None;
        while scanned < ncols {
            for _ in 0..block.min(ncols - scanned) {
                let j = self.price_cursor;
                self.price_cursor = (self.price_cursor + 1) % ncols;
                let state = self.state[j];
                if matches!(state, VarState::Basic(_)) || form.upper[j] - form.lower[j] <= 0.0 {
                    continue;
                }
                let (rows, vals) = form.cols.col(j);
                let mut rc = if phase1 { 0.0 } else { form.cost[j] };
                for (&i, &a) in rows.iter().zip(vals) {
                    rc -= y[i] * a;
                }
                let viol = match state {
                    VarState::AtLower => -rc,
                    VarState::AtUpper => rc,
                    VarState::Basic(_) => unreachable!(),
                };
                if viol > self.opts.dual_tol {
                    match best {
                        Some((b, _)) if b >= viol => {}
                        _ => best = Some((viol, j)),
                    }
                }
            }
            scanned += block.min(ncols - scanned);
            if best.is_some() {
                break;
            }
        }
        best.map(|(_, j)| j)
    }

    /// Bound and step for basic row `r` along the direction, or None when it
    /// never blocks. In phase 1 infeasible basics block only toward their
    /// violated bound. `relax` widens the target bound (Harris pass 1).
    fn row_ratio(&self, r: usize, aq: f64, dir: f64, relax: f64) -> Option<(f64, bool)> {
        let form = self.form;
        let feas = self.opts.feas_tol;
        let j = self.basic[r];
        let xb = self.x[j];
        let (lb, ub) = (form.lower[j], form.upper[j]);
        let rate = -dir * aq;
        let below = xb < lb - feas;
        let above = xb > ub + feas;
        if below {
            if rate <= 0.0 {
                return None;
            }
            Some(((lb + relax - xb) / rate, false))
        } else if above {
            if rate >= 0.0 {
                return None;
            }
            Some(((ub - relax - xb) / rate, true))
        } else if rate < 0.0 {
            if !lb.is_finite() {
                return None;
            }
            Some(((lb - relax - xb) / rate, false))
        } else {
            if !ub.is_finite() {
                return None;
            }
            Some(((ub + relax - xb) / rate, true))
        }
    }

    /// Harris two-pass ratio test: pass 1 computes the tolerance-relaxed
    /// maximum step, pass 2 picks the largest-pivot blocker within it.
    fn ratio_test(&self, q: usize, dir: f64, alpha_nz: &[(usize, f64)], _phase1: bool) -> (f64, Blocker) {
        let form = self.form;
        let feas = self.opts.feas_tol;
        let flip_range = form.upper[q] - form.lower[q];

        let mut relaxed_step = flip_range;
        for &(r, aq) in alpha_nz {
            if aq.abs() <= 1e-9 {
                continue;
            }
            if let Some((delta, _)) = self.row_ratio(r, aq, dir, feas) {
                relaxed_step = relaxed_step.min(delta.max(0.0));
            }
        }
        if !relaxed_step.is_finite() {
            return (relaxed_step, Blocker::BoundFlip);
        }

        // Pass 2: among rows whose exact ratio is within the relaxed step,
        // prefer the largest pivot; under Bland's rule the lowest basic index.
        let mut chosen: Option<(usize, bool, f64, f64)> = None; // (row, to_upper, delta, |alpha|)
        for &(r, aq) in alpha_nz {
            if aq.abs() <= 1e-9 {
                continue;
            }
            if let Some((delta, to_upper)) = self.row_ratio(r, aq, dir, 0.0) {
                let delta = delta.max(0.0);
                if delta <= relaxed_step + 1e-12 {
                    let better = match chosen {
                        None => true,
                        Some((cr, _, _, ca)) => {
                            if self.bland {
                                // Still avoid hopeless pivots under Bland.
                                (aq.abs() >= 1e-7 && ca < 1e-7)
                                    || (!(aq.abs() < 1e-7 && ca >= 1e-7)
                                        && self.basic[r] < self.basic[cr])
                            } else {
                                aq.abs() > ca + 1e-12
                            }
                        }
                    };
                    if better {
                        chosen = Some((r, to_upper, delta, aq.abs()));
                    }
                }
            }
        }
        match chosen {
            // A full bound flip never loses to a row blocking beyond it.
            Some((r, to_upper, delta, _)) if delta <= flip_range => {
                (delta, Blocker::Row { r, to_upper })
            }
            _ => (flip_range, Blocker::BoundFlip),
        }
    }

    fn solve(&mut self) -> SimplexStatus {
        let form = self.form;
        let max_iters = if self.opts.max_iters == 0 {
            200_000 + 50 * (form.m as u64 + form.n as u64)
        } else {
            self.opts.max_iters
        };
        let mut d = vec![0.0; form.m];
        let mut cb = vec![0.0; form.m];
        let mut y = vec![0.0; form.m];
        let mut alpha = vec![0.0; form.m];
        let mut alpha_nz: Vec<(usize, f64)> = Vec::new();
        let mut col_dense = vec![0.0; form.m];
        let mut pending: Option<PendingDevex> = None;
        let mut spare_rho = vec![0.0; form.m];
        let mut last_recovery = 0u64;
        let profile = std::env::var("RAC_SIMPLEX_PROFILE").is_ok();
        let mut t_btran = 0.0f64;
        let mut t_price = 0.0f64;
        let mut t_ftran = 0.0f64;
        let mut t_rest = 0.0f64;
        let mut t_refactor = 0.0f64;
        let mut clock = std::time::Instant::now();
        let mut lap = |acc: &mut f64, clock: &mut std::time::Instant| {
            if profile {
                let now = std::time::Instant::now();
                *acc += now.duration_since(*clock).as_secs_f64();
                *clock = now;
            }
        };
        loop {
            if self.iterations >= max_iters {
                return SimplexStatus::IterLimit;
            }
            self.iterations += 1;

            let z1 = self.infeasibility(&mut d);
            let phase1 = z1 > 0.0;
            if phase1 {
                cb.copy_from_slice(&d);
            } else {
                for (r, &j) in self.basic.iter().enumerate() {
                    cb[r] = form.cost[j];
                }
            }
            lap(&mut t_rest, &mut clock);
            self.factors.btran(&cb, &mut y);
            lap(&mut t_btran, &mut clock);

            let entering = self.price(&y, phase1, pending.as_ref());
            lap(&mut t_price, &mut clock);
            if let Some(pd) = pending.take() {
                spare_rho = pd.rho;
            }
            let q = match entering {
                Some(q) => q,
                None => {
                    if profile {
                        eprintln!(
                            "simplex profile: btran {t_btran:.2}s price {t_price:.2}s ftran {t_ftran:.2}s refactor {t_refactor:.2}s rest {t_rest:.2}s iters {}",
                            self.iterations
                        );
                    }
                    if phase1 {
                        return SimplexStatus::Infeasible;
                    }
                    return SimplexStatus::Optimal;
                }
            };
            let dir = match self.state[q] {
                VarState::AtLower => 1.0,
                VarState::AtUpper => -1.0,
                VarState::Basic(_) => unreachable!(),
            };

            let (rows, vals) = form.cols.col(q);
            col_dense.iter_mut().for_each(|v| *v = 0.0);
            for (&i, &a) in rows.iter().zip(vals) {
                col_dense[i] = a;
            }
            self.factors.ftran(&col_dense, &mut alpha);
            lap(&mut t_ftran, &mut clock);
            alpha_nz.clear();
            for (r, &v) in alpha.iter().enumerate() {
                if v.abs() > 1e-11 {
                    alpha_nz.push((r, v));
                }
            }

            let (delta, blocker) = self.ratio_test(q, dir, &alpha_nz, phase1);
            if !delta.is_finite() {
                if phase1 {
                    if std::env::var("RAC_SIMPLEX_DEBUG").is_ok() {
                        eprintln!("simplex: phase-1 unbounded direction at iter {} entering {q}", self.iterations);
                    }
                    return SimplexStatus::Numerical;
                }
                return SimplexStatus::Unbounded;
            }

            // Apply the step.
            if delta > 0.0 {
                self.x[q] += dir * delta;
                for &(r, aq) in &alpha_nz {
                    let j = self.basic[r];
                    self.x[j] -= dir * aq * delta;
                }
            }
            if delta <= 1e-10 {
                self.stall += 1;
                if self.stall > 100 {
                    self.bland = true;
                }
            } else {
                self.stall = 0;
                self.bland = false;
            }

            match blocker {
                Blocker::BoundFlip => {
                    self.state[q] = match self.state[q] {
                        VarState::AtLower => VarState::AtUpper,
                        VarState::AtUpper => VarState::AtLower,
                        VarState::Basic(_) => unreachable!(),
                    };
                    self.x[q] = self.nonbasic_value(q);
                }
                Blocker::Row { r, to_upper } => {
                    // Stash the Devex update for the next pricing pass: the
                    // pivot row through the pre-pivot basis.
                    let pivot = alpha[r];
                    if pivot.abs() >= 1e-12 && !self.opts.partial_pricing {
                        let wq = self.weights[q];
                        let leave_weight = (wq / (pivot * pivot)).max(1.0);
                        if leave_weight > 1e8 {
                            self.weights.iter_mut().for_each(|w| *w = 1.0);
                        } else {
                            col_dense.iter_mut().for_each(|v| *v = 0.0);
                            col_dense[r] = 1.0;
                            let mut rho = std::mem::take(&mut spare_rho);
                            self.factors.btran(&col_dense, &mut rho);
                            self.weights[self.basic[r]] = leave_weight;
                            pending = Some(PendingDevex { rho, pivot, entering_weight: wq });
                        }
                    }

                    let leaving = self.basic[r];
                    self.state[leaving] = if to_upper { VarState::AtUpper } else { VarState::AtLower };
                    self.x[leaving] = if to_upper { form.upper[leaving] } else { form.lower[leaving] };
                    self.basic[r] = q;
                    self.state[q] = VarState::Basic(r);
                    lap(&mut t_rest, &mut clock);
                    let refactor_due = self.factors.push_eta(r, &alpha_nz, pivot).is_err()
                        || self.factors.eta_count() >= self.opts.refactor_every;
                    let refactor_failed = refactor_due && {
                        let failed = self.refactorize().is_err();
                        lap(&mut t_refactor, &mut clock);
                        failed
                    };
                    if refactor_failed {
                        // The pivot produced a numerically singular basis
                        // (the FTRAN column was too inaccurate). Undo it,
                        // restore fresh factors, and redo the iteration.
                        self.basic[r] = leaving;
                        self.state[leaving] = VarState::Basic(r);
                        self.state[q] = if dir > 0.0 { VarState::AtLower } else { VarState::AtUpper };
                        if let Some(pd) = pending.take() {
                            spare_rho = pd.rho;
                        }
                        if self.iterations == last_recovery + 1 || self.refactorize().is_err() {
                            if std::env::var("RAC_SIMPLEX_DEBUG").is_ok() {
                                eprintln!("simplex: unrecoverable singular basis at iter {}", self.iterations);
                            }
                            return SimplexStatus::Numerical;
                        }
                        last_recovery = self.iterations;
                    }
                }
            }
        }
    }

    fn finish(mut self, status: SimplexStatus) -> SimplexResult {
        // Refresh values and duals at the final basis for accuracy.
        if matches!(status, SimplexStatus::Optimal) && self.refactorize().is_err() {
            return self.finish_with(SimplexStatus::Numerical);
        }
        self.finish_with(status)
    }

    fn finish_with(self, status: SimplexStatus) -> SimplexResult {
        let form = self.form;
        let mut cb = vec![0.0; form.m];
        for (r, &j) in self.basic.iter().enumerate() {
            cb[r] = form.cost[j];
        }
        let mut duals = vec![0.0; form.m];
        self.factors.btran(&cb, &mut duals);
        let objective = form.cost.iter().zip(&self.x).map(|(c, v)| c * v).sum();
        let mut at_upper = vec![false; form.ncols()];
        for (j, up) in at_upper.iter_mut().enumerate() {
            *up = matches!(self.state[j], VarState::AtUpper);
        }
        SimplexResult {
            status,
            x: self.x,
            duals,
            objective,
            iterations: self.iterations,
            basis: Basis { basic: self.basic, at_upper },
        }
    }
}

/// Solve the LP relaxation of `form`, optionally warm-starting from `start`.
pub fn solve_form(form: &StandardForm, start: Option<&Basis>, opts: SimplexOptions) -> SimplexResult {
    match Solver::new(form, start, opts) {
        Ok(mut solver) => {
            let status = solver.solve();
            solver.finish(status)
        }
        Err(status) => SimplexResult {
            status,
            x: vec![0.0; form.ncols()],
            duals: vec![0.0; form.m],
            objective: f64::NAN,
            iterations: 0,
            basis: Basis::all_logical(form),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{Constraint, ConstraintTag, Variable, VarKind};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn var(name: &str, lower: f64, upper: f64, objective: f64) -> Variable {
        Variable { name: name.into(), kind: VarKind::Continuous, lower, upper, objective }
    }

    fn generic(vars: Vec<Variable>, rows: Vec<(Vec<(usize, f64)>, Sense, f64)>) -> MilpProblem {
        MilpProblem::generic(
            vars,
            rows.into_iter()
                .enumerate()
                .map(|(t, (terms, sense, rhs))| Constraint { terms, sense, rhs, tag: ConstraintTag::Balance { t } })
                .collect(),
        )
    }

    #[test]
    fn minimal_lp_examples() {
        // min x s.t. x >= 3, x in [0, 10]
        let p = generic(vec![var("x", 0.0, 10.0, 1.0)], vec![(vec![(0, 1.0)], Sense::Ge, 3.0)]);
        let form = StandardForm::from_problem(&p);
        let r = solve_form(&form, None, SimplexOptions::default());
        assert_eq!(r.status, SimplexStatus::Optimal);
        assert!((r.objective - 3.0).abs() < 1e-9);

        // Contradictory rows.
        let p = generic(
            vec![var("x", 0.0, 10.0, 1.0)],
            vec![(vec![(0, 1.0)], Sense::Ge, 3.0), (vec![(0, 1.0)], Sense::Le, 2.0)],
        );
        let form = StandardForm::from_problem(&p);
        let r = solve_form(&form, None, SimplexOptions::default());
        assert_eq!(r.status, SimplexStatus::Infeasible);
    }

    #[test]
    fn unbounded_is_reported() {
        // min -x with x = s, s unbounded above.
        let p = generic(
            vec![var("x", 0.0, f64::INFINITY, -1.0)],
            vec![(vec![(0, 1.0)], Sense::Ge, 0.0)],
        );
        let form = StandardForm::from_problem(&p);
        let r = solve_form(&form, None, SimplexOptions::default());
        assert_eq!(r.status, SimplexStatus::Unbounded);
    }

    #[test]
    fn upper_bounded_variables_settle_at_bounds() {
        // max x + 2y (min -x - 2y) with x + y <= 1.5, x,y in [0,1].
        let p = generic(
            vec![var("x", 0.0, 1.0, -1.0), var("y", 0.0, 1.0, -2.0)],
            vec![(vec![(0, 1.0), (1, 1.0)], Sense::Le, 1.5)],
        );
        let form = StandardForm::from_problem(&p);
        let r = solve_form(&form, None, SimplexOptions::default());
        assert_eq!(r.status, SimplexStatus::Optimal);
        assert!((r.objective + 2.5).abs() < 1e-9);
        assert!((r.x[1] - 1.0).abs() < 1e-9);
        assert!((r.x[0] - 0.5).abs() < 1e-9);
    }

    /// Enumerate candidate vertices by choosing active constraints among
    /// variable bounds and tight rows; the brute-force LP oracle.
    pub(crate) fn vertex_enumeration_optimum(p: &MilpProblem) -> Option<f64> {
        let n = p.variables.len();
        let rows = &p.constraints;
        // Active-set candidates: (kind, index, bound) where kind 0 = var at
        // lower, 1 = var at upper, 2 = row tight.
        let mut candidates: Vec<(u8, usize)> = Vec::new();
        for j in 0..n {
            candidates.push((0, j));
            if p.variables[j].upper > p.variables[j].lower {
                candidates.push((1, j));
            }
        }
        for (i, c) in rows.iter().enumerate() {
            if c.sense != Sense::Eq {
                candidates.push((2, i));
            }
        }
        let forced: Vec<usize> = rows
            .iter()
            .enumerate()
            .filter(|(_, c)| c.sense == Sense::Eq)
            .map(|(i, _)| i)
            .collect();
        let need = n.checked_sub(forced.len())?;
        let mut best: Option<f64> = None;
        let k = candidates.len();
        let mut choice: Vec<usize> = (0..need).collect();
        loop {
            // Assemble the active system.
            let mut a = vec![vec![0.0; n]; n];
            let mut b = vec![0.0; n];
            let mut row_i = 0;
            for &fi in &forced {
                for &(j, v) in &rows[fi].terms {
                    a[row_i][j] = v;
                }
                b[row_i] = rows[fi].rhs;
                row_i += 1;
            }
            for &ci in &choice {
                let (kind, idx) = candidates[ci];
                match kind {
                    0 => {
                        a[row_i][idx] = 1.0;
                        b[row_i] = p.variables[idx].lower;
                    }
                    1 => {
                        a[row_i][idx] = 1.0;
                        b[row_i] = p.variables[idx].upper;
                    }
                    _ => {
                        for &(j, v) in &rows[idx].terms {
                            a[row_i][j] = v;
                        }
                        b[row_i] = rows[idx].rhs;
                    }
                }
                row_i += 1;
            }
            if row_i == n {
                if let Some(x) = dense_solve(&a, &b) {
                    if point_feasible(p, &x) {
                        let obj: f64 = p.variables.iter().zip(&x).map(|(v, xv)| v.objective * xv).sum();
                        best = Some(best.map_or(obj, |cur: f64| cur.min(obj)));
                    }
                }
            }
            // Next combination.
            if need == 0 {
                break;
            }
            let mut pos = need;
            loop {
                if pos == 0 {
                    return best;
                }
                pos -= 1;
                if choice[pos] + 1 <= k - (need - pos) {
                    choice[pos] += 1;
                    for p2 in pos + 1..need {
                        choice[p2] = choice[p2 - 1] + 1;
                    }
                    break;
                }
            }
        }
        best
    }

    fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
        let n = b.len();
        let mut m: Vec<Vec<f64>> = a.iter().cloned().collect();
        let mut rhs = b.to_vec();
        for k in 0..n {
            let piv = (k..n).max_by(|&i, &j| m[i][k].abs().partial_cmp(&m[j][k].abs()).unwrap())?;
            if m[piv][k].abs() < 1e-9 {
                return None;
            }
            m.swap(k, piv);
            rhs.swap(k, piv);
            for i in k + 1..n {
                let f = m[i][k] / m[k][k];
                if f == 0.0 {
                    continue;
                }
                for j in k..n {
                    m[i][j] -= f * m[k][j];
                }
                rhs[i] -= f * rhs[k];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut acc = rhs[i];
            for j in i + 1..n {
                acc -= m[i][j] * x[j];
            }
            x[i] = acc / m[i][i];
        }
        Some(x)
    }

    fn point_feasible(p: &MilpProblem, x: &[f64]) -> bool {
        let tol = 1e-7;
        for (j, v) in p.variables.iter().enumerate() {
            if x[j] < v.lower - tol || x[j] > v.upper + tol {
                return false;
            }
        }
        for c in &p.constraints {
            let lhs: f64 = c.terms.iter().map(|&(j, v)| v * x[j]).sum();
            let ok = match c.sense {
                Sense::Le => lhs <= c.rhs + tol,
                Sense::Ge => lhs >= c.rhs - tol,
                Sense::Eq => (lhs - c.rhs).abs() <= tol,
            };
            if !ok {
                return false;
            }
        }
        true
    }

    #[test]
    fn random_lps_match_vertex_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let mut solved = 0;
        for trial in 0..300 {
            let n = rng.gen_range(1..=5);
            let m = rng.gen_range(1..=5);
            let vars: Vec<Variable> = (0..n)
                .map(|j| {
                    let lo = rng.gen_range(-2.0..1.0f64);
                    let hi = lo + rng.gen_range(0.0..4.0f64);
                    var(&format!("x{j}"), lo, hi, rng.gen_range(-3.0..3.0f64))
                })
                .collect();
            let rows: Vec<(Vec<(usize, f64)>, Sense, f64)> = (0..m)
                .map(|_| {
                    let terms: Vec<(usize, f64)> = (0..n)
                        .filter_map(|j| {
                            if rng.gen_bool(0.7) {
                                Some((j, rng.gen_range(-2.0..2.0f64)))
                            } else {
                                None
                            }
                        })
                        .collect();
                    let sense = match rng.gen_range(0..6) {
                        0 => Sense::Eq,
                        1 | 2 => Sense::Ge,
                        _ => Sense::Le,
                    };
                    (terms, sense, rng.gen_range(-2.0..2.0f64))
                })
                .filter(|(terms, _, _)| !terms.is_empty())
                .collect();
            if rows.is_empty() {
                continue;
            }
            let p = generic(vars, rows);
            let form = StandardForm::from_problem(&p);
            let r = solve_form(&form, None, SimplexOptions::default());
            let oracle = vertex_enumeration_optimum(&p);
            match (r.status, oracle) {
                (SimplexStatus::Optimal, Some(expect)) => {
                    solved += 1;
                    assert!(
                        (r.objective - expect).abs() <= 1e-7 * (1.0 + expect.abs()),
                        "trial {trial}: got {} expected {expect}",
                        r.objective
                    );
                }
                (SimplexStatus::Infeasible, None) => {}
                (status, oracle) => panic!("trial {trial}: status {status:?} vs oracle {oracle:?}"),
            }
        }
        assert!(solved > 100, "too few solvable trials: {solved}");
    }

    #[test]
    fn duals_satisfy_complementary_slackness() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        for _ in 0..50 {
            let n = rng.gen_range(2..=5);
            let vars: Vec<Variable> =
                (0..n).map(|j| var(&format!("x{j}"), 0.0, rng.gen_range(1.0..4.0f64), rng.gen_range(-2.0..2.0f64))).collect();
            let rows: Vec<(Vec<(usize, f64)>, Sense, f64)> = (0..rng.gen_range(1..=4))
                .map(|_| {
                    let terms: Vec<(usize, f64)> =
                        (0..n).map(|j| (j, rng.gen_range(-1.0..2.0f64))).collect();
                    (terms, if rng.gen_bool(0.5) { Sense::Le } else { Sense::Ge }, rng.gen_range(-1.0..3.0f64))
                })
                .collect();
            let p = generic(vars, rows);
            let form = StandardForm::from_problem(&p);
            let r = solve_form(&form, None, SimplexOptions::default());
            if r.status != SimplexStatus::Optimal {
                continue;
            }
            for (i, c) in p.constraints.iter().enumerate() {
                let lhs: f64 = c.terms.iter().map(|&(j, v)| v * r.x[j]).sum();
                let slack = (c.rhs - lhs).abs();
                if slack > 1e-6 * (1.0 + c.rhs.abs()) {
                    assert!(
                        r.duals[i].abs() < 1e-6 * (1.0 + r.duals.iter().fold(0.0f64, |a, d| a.max(d.abs()))),
                        "row {i} has slack {slack} and dual {}",
                        r.duals[i]
                    );
                }
            }
        }
    }
}
