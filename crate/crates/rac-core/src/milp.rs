//! Translation of a commitment instance into a mixed-integer linear program:
//! commitment/startup/shutdown binaries with min-up/min-down linking, stepwise
//! energy costs, ramp limits, and soft system-wide balance, reserve, and
//! transmission constraints (the latter restricted to an explicit active set).
//!
//! Cost convention: a committed unit pays its no-load cost plus the first
//! energy step price for the eco-min band; energy above eco-min is priced per
//! step. Transmission rows are expressed over net bus injections through PTDF
//! coefficients, so no flow variables exist.

use crate::netcalc::{compute_ptdf, NetcalcError, PtdfMatrix};
use crate::repair::feasible_completion_exists;
use crate::uc::RacInstance;
use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("generator {generator}: fixed commitments admit no feasible completion")]
    InfeasibleFixedSchedule { generator: usize },
    #[error("fixed commitment ({generator}, {period}) outside the horizon")]
    FixOutOfRange { generator: usize, period: usize },
    #[error(transparent)]
    Network(#[from] NetcalcError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sense::Le => write!(f, "<="),
            Sense::Ge => write!(f, ">="),
            Sense::Eq => write!(f, "="),
        }
    }
}

/// Flow direction of a transmission constraint: `Pos` caps the flow at
/// +limit, `Neg` floors it at -limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FlowDir {
    Pos,
    Neg,
}

impl fmt::Display for FlowDir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlowDir::Pos => write!(f, "+"),
            FlowDir::Neg => write!(f, "-"),
        }
    }
}

/// (line, period, direction) identity of one transmission constraint.
pub type TransmissionKey = (usize, usize, FlowDir);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ConstraintTag {
    Link { g: usize, t: usize },
    MinUp { g: usize, t: usize },
    MinDown { g: usize, t: usize },
    Capacity { g: usize, t: usize },
    RampUp { g: usize, t: usize },
    RampDown { g: usize, t: usize },
    Balance { t: usize },
    Reserve { t: usize },
    Transmission { line: usize, t: usize, dir: FlowDir },
}

impl ConstraintTag {
    pub fn family(&self) -> &'static str {
        match self {
            ConstraintTag::Link { .. } => "link",
            ConstraintTag::MinUp { .. } => "min_up",
            ConstraintTag::MinDown { .. } => "min_down",
            ConstraintTag::Capacity { .. } => "capacity",
            ConstraintTag::RampUp { .. } => "ramp_up",
            ConstraintTag::RampDown { .. } => "ramp_down",
            ConstraintTag::Balance { .. } => "balance",
            ConstraintTag::Reserve { .. } => "reserve",
            ConstraintTag::Transmission { .. } => "transmission",
        }
    }
}

impl fmt::Display for ConstraintTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintTag::Link { g, t } => write!(f, "link[g{g},t{t}]"),
            ConstraintTag::MinUp { g, t } => write!(f, "min_up[g{g},t{t}]"),
            ConstraintTag::MinDown { g, t } => write!(f, "min_down[g{g},t{t}]"),
            ConstraintTag::Capacity { g, t } => write!(f, "capacity[g{g},t{t}]"),
            ConstraintTag::RampUp { g, t } => write!(f, "ramp_up[g{g},t{t}]"),
            ConstraintTag::RampDown { g, t } => write!(f, "ramp_down[g{g},t{t}]"),
            ConstraintTag::Balance { t } => write!(f, "balance[t{t}]"),
            ConstraintTag::Reserve { t } => write!(f, "reserve[t{t}]"),
            ConstraintTag::Transmission { line, t, dir } => {
                write!(f, "transmission[l{line},t{t},{dir}]")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Constraint {
    /// Sparse row: (variable index, coefficient).
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
    pub tag: ConstraintTag,
}

/// Index layout of the unit-commitment variables inside the flat vector.
#[derive(Debug, Clone)]
pub struct UcLayout {
    pub gens: usize,
    pub horizon: usize,
    /// Energy step counts per generator.
    pub steps: Vec<usize>,
    x0: usize,
    v0: usize,
    w0: usize,
    p0: usize,
    p_gen_offset: Vec<usize>,
    r0: usize,
    sb_pos0: usize,
    sb_neg0: usize,
    s_res0: usize,
    s_flow0: usize,
}

impl UcLayout {
    pub fn x(&self, g: usize, t: usize) -> usize {
        self.x0 + g * self.horizon + t
    }
    pub fn v(&self, g: usize, t: usize) -> usize {
        self.v0 + g * self.horizon + t
    }
    pub fn w(&self, g: usize, t: usize) -> usize {
        self.w0 + g * self.horizon + t
    }
    pub fn p(&self, g: usize, t: usize, e: usize) -> usize {
        self.p0 + self.p_gen_offset[g] + t * self.steps[g] + e
    }
    pub fn r(&self, g: usize, t: usize) -> usize {
        self.r0 + g * self.horizon + t
    }
    pub fn slack_balance_pos(&self, t: usize) -> usize {
        self.sb_pos0 + t
    }
    pub fn slack_balance_neg(&self, t: usize) -> usize {
        self.sb_neg0 + t
    }
    pub fn slack_reserve(&self, t: usize) -> usize {
        self.s_res0 + t
    }
    pub fn slack_flow(&self, active_idx: usize) -> usize {
        self.s_flow0 + active_idx
    }
}

/// A built problem: variables with bounds and objective, tagged sparse rows,
/// and the layout to interpret solutions.
#[derive(Debug, Clone)]
pub struct MilpProblem {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub layout: UcLayout,
    /// Active transmission constraints, in row order of their slack index.
    pub active_lines: Vec<TransmissionKey>,
}

impl MilpProblem {
    /// Assemble a problem from raw variables and rows, without the
    /// unit-commitment layout (the layout accessors must not be used).
    pub fn generic(variables: Vec<Variable>, constraints: Vec<Constraint>) -> Self {
        MilpProblem {
            variables,
            constraints,
            layout: UcLayout {
                gens: 0,
                horizon: 0,
                steps: Vec::new(),
                x0: 0,
                v0: 0,
                w0: 0,
                p0: 0,
                p_gen_offset: Vec::new(),
                r0: 0,
                sb_pos0: 0,
                sb_neg0: 0,
                s_res0: 0,
                s_flow0: 0,
            },
            active_lines: Vec::new(),
        }
    }

    pub fn objective_value(&self, primal: &[f64]) -> f64 {
        self.variables
            .iter()
            .zip(primal)
            .map(|(v, x)| v.objective * x)
            .sum()
    }

    /// Indices of binary variables that are not fixed by bounds.
    pub fn free_binaries(&self) -> Vec<usize> {
        self.variables
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VarKind::Binary && v.upper - v.lower > 0.5)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn commitments_from_primal(&self, primal: &[f64]) -> Vec<Vec<bool>> {
        let l = &self.layout;
        (0..l.gens)
            .map(|g| (0..l.horizon).map(|t| primal[l.x(g, t)] > 0.5).collect())
            .collect()
    }

    /// Total dispatch (eco-min band plus step energy) per (generator, period).
    pub fn dispatch_from_primal(&self, inst: &RacInstance, primal: &[f64]) -> Vec<Vec<f64>> {
        let l = &self.layout;
        (0..l.gens)
            .map(|g| {
                (0..l.horizon)
                    .map(|t| {
                        let mut d = inst.generators[g].eco_min[t] * primal[l.x(g, t)];
                        for e in 0..l.steps[g] {
                            d += primal[l.p(g, t, e)];
                        }
                        d
                    })
                    .collect()
            })
            .collect()
    }

    /// Net bus injections (generation minus load) per (bus position, period).
    pub fn injections_from_primal(&self, inst: &RacInstance, primal: &[f64]) -> Vec<Vec<f64>> {
        let dispatch = self.dispatch_from_primal(inst, primal);
        bus_injections(inst, &dispatch)
    }

    /// Constraint counts per family, for audits against the closed forms.
    pub fn family_counts(&self) -> BTreeMap<&'static str, usize> {
        let mut out = BTreeMap::new();
        for c in &self.constraints {
            *out.entry(c.tag.family()).or_insert(0) += 1;
        }
        out
    }

    /// LP-format-style text dump with deterministic ordering, for external
    /// cross-checking.
    pub fn to_lp_text(&self) -> String {
        let mut s = String::from("minimize\n");
        for (i, v) in self.variables.iter().enumerate() {
            if v.objective != 0.0 {
                let _ = writeln!(s, "  {:+.6} {}", v.objective, self.variables[i].name);
            }
        }
        s.push_str("subject to\n");
        for c in &self.constraints {
            let _ = write!(s, "  {}:", c.tag);
            for &(j, coef) in &c.terms {
                let _ = write!(s, " {:+.6} {}", coef, self.variables[j].name);
            }
            let _ = writeln!(s, " {} {:.6}", c.sense, c.rhs);
        }
        s.push_str("bounds\n");
        for v in &self.variables {
            let _ = writeln!(s, "  {:.6} <= {} <= {:.6}", v.lower, v.name, v.upper);
        }
        s.push_str("binaries\n");
        for v in &self.variables {
            if v.kind == VarKind::Binary {
                let _ = writeln!(s, "  {}", v.name);
            }
        }
        s
    }
}

fn bus_injections(inst: &RacInstance, dispatch: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = inst.network.bus_count();
    let horizon = inst.horizon;
    let mut inj = vec![vec![0.0; horizon]; n];
    for (g, gen) in inst.generators.iter().enumerate() {
        let b = inst.network.bus_index(gen.bus).expect("validated bus");
        for t in 0..horizon {
            inj[b][t] += dispatch[g][t];
        }
    }
    for load in &inst.loads {
        let b = inst.network.bus_index(load.bus).expect("validated bus");
        for t in 0..horizon {
            inj[b][t] -= load.forecast[t];
        }
    }
    inj
}

/// Every (line, period, direction) transmission constraint of the instance.
pub fn full_transmission_set(inst: &RacInstance) -> Vec<TransmissionKey> {
    let mut out = Vec::with_capacity(2 * inst.network.lines.len() * inst.horizon);
    for l in 0..inst.network.lines.len() {
        for t in 0..inst.horizon {
            out.push((l, t, FlowDir::Pos));
            out.push((l, t, FlowDir::Neg));
        }
    }
    out
}

/// One detected transmission violation, in MW beyond the limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowViolation {
    pub line: usize,
    pub period: usize,
    pub dir: FlowDir,
    pub violation: f64,
}

pub const FLOW_TOLERANCE: f64 = 1e-6;

/// Evaluate all transmission constraints against per-(bus, period) net
/// injections; returns strictly positive violations sorted by magnitude
/// descending, ties by (line, period, direction) ascending.
pub fn evaluate_flow_violations(
    inst: &RacInstance,
    injections: &[Vec<f64>],
    ptdf: &PtdfMatrix,
) -> Vec<FlowViolation> {
    let mut out = Vec::new();
    for (l, line) in inst.network.lines.iter().enumerate() {
        for t in 0..inst.horizon {
            let flow: f64 = (0..ptdf.buses).map(|b| ptdf.get(l, b) * injections[b][t]).sum();
            let over = flow - line.flow_limit;
            if over > FLOW_TOLERANCE {
                out.push(FlowViolation { line: l, period: t, dir: FlowDir::Pos, violation: over });
            }
            let under = -line.flow_limit - flow;
            if under > FLOW_TOLERANCE {
                out.push(FlowViolation { line: l, period: t, dir: FlowDir::Neg, violation: under });
            }
        }
    }
    out.sort_by(|a, b| {
        b.violation
            .partial_cmp(&a.violation)
            .unwrap()
            .then((a.line, a.period, a.dir).cmp(&(b.line, b.period, b.dir)))
    });
    out
}

/// Build the MILP for an instance, fixing the given partial schedule and
/// including only the listed transmission constraints. Computes the PTDF
/// internally; use [`build_rac_with_ptdf`] to reuse one across builds.
pub fn build_rac(
    inst: &RacInstance,
    fixed: &[(usize, usize, bool)],
    active_lines: &[TransmissionKey],
) -> Result<MilpProblem, BuildError> {
    let ptdf = compute_ptdf(&inst.network)?;
    build_rac_with_ptdf(inst, fixed, active_lines, &ptdf)
}

pub fn build_rac_with_ptdf(
    inst: &RacInstance,
    fixed: &[(usize, usize, bool)],
    active_lines: &[TransmissionKey],
    ptdf: &PtdfMatrix,
) -> Result<MilpProblem, BuildError> {
    let gens = inst.generators.len();
    let horizon = inst.horizon;

    // Merge caller fixings with must-run and initial-state obligations, then
    // verify each generator still has a feasible completion.
    let mut fix = vec![vec![None::<bool>; horizon]; gens];
    for &(g, t, b) in fixed {
        if g >= gens || t >= horizon {
            return Err(BuildError::FixOutOfRange { generator: g, period: t });
        }
        if matches!(fix[g][t], Some(prev) if prev != b) {
            return Err(BuildError::InfeasibleFixedSchedule { generator: inst.generators[g].id });
        }
        fix[g][t] = Some(b);
    }
    for (g, gen) in inst.generators.iter().enumerate() {
        for t in 0..horizon {
            if gen.must_run[t] {
                if fix[g][t] == Some(false) {
                    return Err(BuildError::InfeasibleFixedSchedule { generator: gen.id });
                }
                fix[g][t] = Some(true);
            }
        }
        // Residual initial obligations.
        let residual = if gen.initial_on {
            gen.min_up.saturating_sub(gen.initial_duration)
        } else {
            gen.min_down.saturating_sub(gen.initial_duration)
        };
        for t in 0..residual.min(horizon) {
            if fix[g][t] == Some(!gen.initial_on) {
                return Err(BuildError::InfeasibleFixedSchedule { generator: gen.id });
            }
            fix[g][t] = Some(gen.initial_on);
        }
        if !feasible_completion_exists(gen, &fix[g]) {
            return Err(BuildError::InfeasibleFixedSchedule { generator: gen.id });
        }
    }

    // Finite cap for penalty slacks, large enough to absorb any imbalance.
    let mut slack_cap = 10.0;
    for t in 0..horizon {
        let load: f64 = inst.loads.iter().map(|l| l.forecast[t]).sum();
        let cap: f64 = inst.generators.iter().map(|g| g.eco_max[t]).sum();
        slack_cap += load.abs() + cap.abs();
    }
    slack_cap += inst.reserve_requirement.iter().sum::<f64>().abs();

    let steps: Vec<usize> = inst.generators.iter().map(|g| g.energy_steps.len()).collect();
    let mut p_gen_offset = Vec::with_capacity(gens);
    let mut acc = 0usize;
    for g in 0..gens {
        p_gen_offset.push(acc);
        acc += steps[g] * horizon;
    }
    let gt = gens * horizon;
    let layout = UcLayout {
        gens,
        horizon,
        steps: steps.clone(),
        x0: 0,
        v0: gt,
        w0: 2 * gt,
        p0: 3 * gt,
        p_gen_offset,
        r0: 3 * gt + acc,
        sb_pos0: 4 * gt + acc,
        sb_neg0: 4 * gt + acc + horizon,
        s_res0: 4 * gt + acc + 2 * horizon,
        s_flow0: 4 * gt + acc + 3 * horizon,
    };
    let total_vars = layout.s_flow0 + active_lines.len();
    let mut variables = Vec::with_capacity(total_vars);

    // x, then v, then w blocks.
    for (g, gen) in inst.generators.iter().enumerate() {
        let band_price = gen.energy_steps.first().map_or(0.0, |s| s.price);
        for t in 0..horizon {
            let (lower, upper) = match fix[g][t] {
                Some(true) => (1.0, 1.0),
                Some(false) => (0.0, 0.0),
                None => (0.0, 1.0),
            };
            variables.push(Variable {
                name: format!("x[g{g},t{t}]"),
                kind: VarKind::Binary,
                lower,
                upper,
                objective: gen.no_load_cost[t] + band_price * gen.eco_min[t],
            });
        }
    }
    for (g, gen) in inst.generators.iter().enumerate() {
        for t in 0..horizon {
            // No room to complete the minimum dwell before the horizon end.
            let upper = if horizon - t < gen.min_up { 0.0 } else { 1.0 };
            variables.push(Variable {
                name: format!("v[g{g},t{t}]"),
                kind: VarKind::Binary,
                lower: 0.0,
                upper,
                objective: gen.startup_cost,
            });
        }
    }
    for (g, gen) in inst.generators.iter().enumerate() {
        for t in 0..horizon {
            let upper = if horizon - t < gen.min_down { 0.0 } else { 1.0 };
            variables.push(Variable {
                name: format!("w[g{g},t{t}]"),
                kind: VarKind::Binary,
                lower: 0.0,
                upper,
                objective: 0.0,
            });
        }
    }
    for (g, gen) in inst.generators.iter().enumerate() {
        for t in 0..horizon {
            for (e, step) in gen.energy_steps.iter().enumerate() {
                variables.push(Variable {
                    name: format!("p[g{g},t{t},e{e}]"),
                    kind: VarKind::Continuous,
                    lower: 0.0,
                    upper: step.width,
                    objective: step.price,
                });
            }
        }
    }
    for (g, gen) in inst.generators.iter().enumerate() {
        for t in 0..horizon {
            variables.push(Variable {
                name: format!("r[g{g},t{t}]"),
                kind: VarKind::Continuous,
                lower: 0.0,
                upper: gen.reserve_max[t].max(0.0),
                objective: gen.reserve_price[t],
            });
        }
    }
    for (prefix, obj) in [("sb_pos", inst.penalties.balance), ("sb_neg", inst.penalties.balance)] {
        for t in 0..horizon {
            variables.push(Variable {
                name: format!("{prefix}[t{t}]"),
                kind: VarKind::Continuous,
                lower: 0.0,
                upper: slack_cap,
                objective: obj,
            });
        }
    }
    for t in 0..horizon {
        variables.push(Variable {
            name: format!("s_res[t{t}]"),
            kind: VarKind::Continuous,
            lower: 0.0,
            upper: slack_cap,
            objective: inst.penalties.reserve,
        });
    }
    for (i, &(l, t, dir)) in active_lines.iter().enumerate() {
        let _ = i;
        variables.push(Variable {
            name: format!("s_flow[l{l},t{t},{dir}]"),
            kind: VarKind::Continuous,
            lower: 0.0,
            upper: slack_cap,
            objective: inst.penalties.flow,
        });
    }
    debug_assert_eq!(variables.len(), total_vars);

    let mut constraints = Vec::new();

    for (g, gen) in inst.generators.iter().enumerate() {
        for t in 0..horizon {
            // x[t] - x[t-1] - v[t] + w[t] = 0, with x[-1] folded into the rhs.
            let mut terms = vec![(layout.x(g, t), 1.0), (layout.v(g, t), -1.0), (layout.w(g, t), 1.0)];
            let mut rhs = 0.0;
            if t == 0 {
                rhs = f64::from(gen.initial_on);
            } else {
                terms.push((layout.x(g, t - 1), -1.0));
            }
            constraints.push(Constraint { terms, sense: Sense::Eq, rhs, tag: ConstraintTag::Link { g, t } });
        }
        for t in 0..horizon {
            let from = (t + 1).saturating_sub(gen.min_up);
            let mut terms: Vec<(usize, f64)> = (from..=t).map(|tau| (layout.v(g, tau), 1.0)).collect();
            terms.push((layout.x(g, t), -1.0));
            constraints.push(Constraint { terms, sense: Sense::Le, rhs: 0.0, tag: ConstraintTag::MinUp { g, t } });
        }
        for t in 0..horizon {
            let from = (t + 1).saturating_sub(gen.min_down);
            let mut terms: Vec<(usize, f64)> = (from..=t).map(|tau| (layout.w(g, tau), 1.0)).collect();
            terms.push((layout.x(g, t), 1.0));
            constraints.push(Constraint { terms, sense: Sense::Le, rhs: 1.0, tag: ConstraintTag::MinDown { g, t } });
        }
        for t in 0..horizon {
            let spread = gen.eco_max[t] - gen.eco_min[t];
            let mut terms: Vec<(usize, f64)> =
                (0..steps[g]).map(|e| (layout.p(g, t, e), 1.0)).collect();
            terms.push((layout.r(g, t), 1.0));
            terms.push((layout.x(g, t), -spread));
            constraints.push(Constraint { terms, sense: Sense::Le, rhs: 0.0, tag: ConstraintTag::Capacity { g, t } });
        }
        // Ramps over total dispatch D[t] = eco_min[t] x[t] + sum_e p[t][e].
        for t in 0..horizon {
            let mut terms: Vec<(usize, f64)> = vec![(layout.x(g, t), gen.eco_min[t])];
            terms.extend((0..steps[g]).map(|e| (layout.p(g, t, e), 1.0)));
            terms.push((layout.v(g, t), -gen.startup_ramp));
            let mut rhs = 0.0;
            if t == 0 {
                rhs += f64::from(gen.initial_on) * (gen.eco_min[0] + gen.ramp_up);
            } else {
                terms.push((layout.x(g, t - 1), -gen.eco_min[t - 1] - gen.ramp_up));
                terms.extend((0..steps[g]).map(|e| (layout.p(g, t - 1, e), -1.0)));
            }
            constraints.push(Constraint { terms, sense: Sense::Le, rhs, tag: ConstraintTag::RampUp { g, t } });
        }
        for t in 0..horizon {
            let mut terms: Vec<(usize, f64)> = vec![(layout.x(g, t), -gen.eco_min[t] - gen.ramp_down)];
            terms.extend((0..steps[g]).map(|e| (layout.p(g, t, e), -1.0)));
            terms.push((layout.w(g, t), -gen.shutdown_ramp));
            let mut rhs = 0.0;
            if t == 0 {
                rhs -= f64::from(gen.initial_on) * gen.eco_min[0];
            } else {
                terms.push((layout.x(g, t - 1), gen.eco_min[t - 1]));
                terms.extend((0..steps[g]).map(|e| (layout.p(g, t - 1, e), 1.0)));
            }
            constraints.push(Constraint { terms, sense: Sense::Le, rhs, tag: ConstraintTag::RampDown { g, t } });
        }
    }

    for t in 0..horizon {
        let mut terms = Vec::new();
        for (g, gen) in inst.generators.iter().enumerate() {
            terms.push((layout.x(g, t), gen.eco_min[t]));
            terms.extend((0..steps[g]).map(|e| (layout.p(g, t, e), 1.0)));
        }
        terms.push((layout.slack_balance_pos(t), 1.0));
        terms.push((layout.slack_balance_neg(t), -1.0));
        let rhs: f64 = inst.loads.iter().map(|l| l.forecast[t]).sum();
        constraints.push(Constraint { terms, sense: Sense::Eq, rhs, tag: ConstraintTag::Balance { t } });
    }
    for t in 0..horizon {
        let mut terms: Vec<(usize, f64)> = (0..gens).map(|g| (layout.r(g, t), 1.0)).collect();
        terms.push((layout.slack_reserve(t), 1.0));
        constraints.push(Constraint {
            terms,
            sense: Sense::Ge,
            rhs: inst.reserve_requirement[t],
            tag: ConstraintTag::Reserve { t },
        });
    }

    for (i, &(l, t, dir)) in active_lines.iter().enumerate() {
        let line = &inst.network.lines[l];
        let mut terms = Vec::new();
        let mut load_flow = 0.0;
        for (g, gen) in inst.generators.iter().enumerate() {
            let b = inst.network.bus_index(gen.bus).expect("validated bus");
            let coef = ptdf.get(l, b);
            if coef.abs() < 1e-12 {
                continue;
            }
            terms.push((layout.x(g, t), coef * gen.eco_min[t]));
            terms.extend((0..steps[g]).map(|e| (layout.p(g, t, e), coef)));
        }
        for load in &inst.loads {
            let b = inst.network.bus_index(load.bus).expect("validated bus");
            load_flow += ptdf.get(l, b) * load.forecast[t];
        }
        let (sense, rhs, slack_sign) = match dir {
            FlowDir::Pos => (Sense::Le, line.flow_limit + load_flow, -1.0),
            FlowDir::Neg => (Sense::Ge, -line.flow_limit + load_flow, 1.0),
        };
        terms.push((layout.slack_flow(i), slack_sign));
        constraints.push(Constraint { terms, sense, rhs, tag: ConstraintTag::Transmission { line: l, t, dir } });
    }

    Ok(MilpProblem { variables, constraints, layout, active_lines: active_lines.to_vec() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uc::tests_support;

    #[test]
    fn family_counts_match_closed_forms() {
        let inst = tests_support::instance(4, 3);
        let active = vec![(0, 1, FlowDir::Pos), (0, 2, FlowDir::Neg)];
        let p = build_rac(&inst, &[], &active).unwrap();
        let counts = p.family_counts();
        let gt = 3 * 4;
        assert_eq!(counts["link"], gt);
        assert_eq!(counts["min_up"], gt);
        assert_eq!(counts["min_down"], gt);
        assert_eq!(counts["capacity"], gt);
        assert_eq!(counts["ramp_up"], gt);
        assert_eq!(counts["ramp_down"], gt);
        assert_eq!(counts["balance"], 4);
        assert_eq!(counts["reserve"], 4);
        assert_eq!(counts["transmission"], 2);
        // Tags are unique.
        let mut tags: Vec<_> = p.constraints.iter().map(|c| c.tag).collect();
        tags.sort();
        tags.dedup();
        assert_eq!(tags.len(), p.constraints.len());
    }

    #[test]
    fn every_variable_is_referenced() {
        let inst = tests_support::instance(3, 2);
        let p = build_rac(&inst, &[], &[(0, 0, FlowDir::Pos)]).unwrap();
        let mut referenced = vec![false; p.variables.len()];
        for c in &p.constraints {
            for &(j, _) in &c.terms {
                referenced[j] = true;
            }
        }
        for (i, v) in p.variables.iter().enumerate() {
            assert!(referenced[i] || v.objective != 0.0, "unreferenced: {}", v.name);
        }
        for v in &p.variables {
            assert!(v.lower.is_finite() && v.upper.is_finite(), "{} has infinite bound", v.name);
            if v.kind == VarKind::Binary {
                assert!(v.lower >= 0.0 && v.upper <= 1.0);
            }
        }
    }

    #[test]
    fn fixings_become_bounds_and_min_up_propagates() {
        let mut inst = tests_support::instance(2, 1);
        inst.generators[0].min_up = 2;
        let p = build_rac(&inst, &[(0, 0, true)], &[]).unwrap();
        let x0 = &p.variables[p.layout.x(0, 0)];
        assert_eq!((x0.lower, x0.upper), (1.0, 1.0));
        // x[0][1] stays a free binary; the min-up rows force it to 1 in any
        // feasible solution (exercised against the solver elsewhere).
        let x1 = &p.variables[p.layout.x(0, 1)];
        assert_eq!((x1.lower, x1.upper), (0.0, 1.0));
    }

    #[test]
    fn conflicting_fix_is_rejected_naming_the_generator() {
        let mut inst = tests_support::instance(4, 2);
        inst.generators[1].id = 11;
        inst.generators[1].must_run[2] = true;
        let err = build_rac(&inst, &[(1, 2, false)], &[]).unwrap_err();
        assert!(matches!(err, BuildError::InfeasibleFixedSchedule { generator: 11 }));

        // A per-generator infeasible pattern (on-off-on with min_up 2).
        let mut inst2 = tests_support::instance(4, 1);
        inst2.generators[0].min_up = 3;
        let err2 = build_rac(&inst2, &[(0, 1, true), (0, 2, false)], &[]).unwrap_err();
        assert!(matches!(err2, BuildError::InfeasibleFixedSchedule { generator: 0 }));
    }

    #[test]
    fn late_switch_binaries_are_fixed_to_zero() {
        let mut inst = tests_support::instance(4, 1);
        inst.generators[0].min_up = 3;
        inst.generators[0].min_down = 2;
        let p = build_rac(&inst, &[], &[]).unwrap();
        for t in 0..4 {
            let v = &p.variables[p.layout.v(0, t)];
            assert_eq!(v.upper, if 4 - t < 3 { 0.0 } else { 1.0 }, "v at t={t}");
            let w = &p.variables[p.layout.w(0, t)];
            assert_eq!(w.upper, if 4 - t < 2 { 0.0 } else { 1.0 }, "w at t={t}");
        }
    }

    #[test]
    fn full_transmission_set_has_expected_cardinality() {
        let mut inst = tests_support::instance(4, 1);
        inst.network.lines = (0..3)
            .map(|id| crate::uc::Line { id, from: 0, to: 1, reactance: 0.1, flow_limit: 10.0 })
            .collect();
        assert_eq!(full_transmission_set(&inst).len(), 2 * 3 * 4);

        inst.network.lines.clear();
        assert!(full_transmission_set(&inst).is_empty());

        inst.network.lines.push(crate::uc::Line { id: 0, from: 0, to: 1, reactance: 0.1, flow_limit: 10.0 });
        inst.horizon = 1;
        let mut one = tests_support::instance(1, 1);
        one.network.lines = inst.network.lines.clone();
        assert_eq!(
            full_transmission_set(&one),
            vec![(0, 0, FlowDir::Pos), (0, 0, FlowDir::Neg)]
        );
    }

    #[test]
    fn flow_violations_sorted_and_thresholded() {
        let mut inst = tests_support::instance(1, 2);
        inst.network.lines[0].flow_limit = 10.0;
        let ptdf = compute_ptdf(&inst.network).unwrap();
        // No violation.
        let inj = vec![vec![5.0], vec![-5.0]];
        assert!(evaluate_flow_violations(&inst, &inj, &ptdf).is_empty());
        // Injecting 15 at bus 0 (reference is bus 0, so flow comes from the
        // withdrawal at bus 1): flow limit exceeded by 5.
        let inj = vec![vec![15.0], vec![-15.0]];
        let v = evaluate_flow_violations(&inst, &inj, &ptdf);
        assert_eq!(v.len(), 1);
        assert!((v[0].violation - 5.0).abs() < 1e-9);

        // Two lines with violations 5 and 7: larger first.
        let mut inst2 = tests_support::instance(1, 2);
        inst2.network.buses = vec![0, 1, 2];
        inst2.network.lines = vec![
            crate::uc::Line { id: 0, from: 0, to: 1, reactance: 0.1, flow_limit: 10.0 },
            crate::uc::Line { id: 1, from: 0, to: 2, reactance: 0.1, flow_limit: 8.0 },
        ];
        let ptdf2 = compute_ptdf(&inst2.network).unwrap();
        let inj2 = vec![vec![30.0], vec![-15.0], vec![-15.0]];
        let v2 = evaluate_flow_violations(&inst2, &inj2, &ptdf2);
        assert_eq!(v2.len(), 2);
        assert_eq!(v2[0].line, 1);
        assert!((v2[0].violation - 7.0).abs() < 1e-9);
        assert!((v2[1].violation - 5.0).abs() < 1e-9);
    }

    #[test]
    fn lp_text_dump_is_deterministic() {
        let inst = tests_support::instance(2, 1);
        let a = build_rac(&inst, &[], &[]).unwrap().to_lp_text();
        let b = build_rac(&inst, &[], &[]).unwrap().to_lp_text();
        assert_eq!(a, b);
        assert!(a.contains("balance[t0]"));
    }
}
