//! Domain model for reliability assessment commitment instances.
//!
//! An instance bundles a generator fleet, a load set, and a DC network over a
//! discrete horizon. Commitment feasibility follows switch semantics: a unit
//! may change status only after dwelling at least its minimum up/down time in
//! the current status (the initial dwell counts), and a switch is only allowed
//! if the new status can complete its minimum dwell within the horizon.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Instance flavor. Horizons differ by flavor in practice (24 for day-ahead
/// re-commitment, 12 for look-ahead), but the horizon is carried explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RacKind {
    #[serde(rename = "DA-SCUC")]
    DaScuc,
    #[serde(rename = "DA-FRAC")]
    DaFrac,
    #[serde(rename = "LAC")]
    Lac,
}

impl fmt::Display for RacKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RacKind::DaScuc => write!(f, "DA-SCUC"),
            RacKind::DaFrac => write!(f, "DA-FRAC"),
            RacKind::Lac => write!(f, "LAC"),
        }
    }
}

/// One block of the incremental energy offer: `width` MW priced at `price`
/// $/MWh. Blocks are consumed in order; prices must be non-decreasing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyStep {
    pub width: f64,
    pub price: f64,
}

/// Maximum number of energy offer blocks per generator.
pub const MAX_ENERGY_STEPS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub id: usize,
    pub bus: usize,
    pub eco_min: Vec<f64>,
    pub eco_max: Vec<f64>,
    pub min_up: usize,
    pub min_down: usize,
    pub ramp_up: f64,
    pub ramp_down: f64,
    pub startup_ramp: f64,
    pub shutdown_ramp: f64,
    pub initial_on: bool,
    /// Periods already spent in the initial status (>= 1).
    pub initial_duration: usize,
    pub no_load_cost: Vec<f64>,
    pub startup_cost: f64,
    pub energy_steps: Vec<EnergyStep>,
    #[serde(with = "mask_01")]
    pub must_run: Vec<bool>,
    pub reserve_max: Vec<f64>,
    pub reserve_price: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Load {
    pub id: usize,
    pub bus: usize,
    pub forecast: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub id: usize,
    pub from: usize,
    pub to: usize,
    pub reactance: f64,
    pub flow_limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub buses: Vec<usize>,
    pub lines: Vec<Line>,
    pub reference_bus: usize,
}

impl Network {
    pub fn bus_count(&self) -> usize {
        self.buses.len()
    }

    /// Position of a bus id in `buses`, if present.
    pub fn bus_index(&self, bus: usize) -> Option<usize> {
        self.buses.iter().position(|&b| b == bus)
    }

    /// True when every bus is reachable from the first one over the lines.
    pub fn is_connected(&self) -> bool {
        let n = self.buses.len();
        if n == 0 {
            return false;
        }
        let mut adj = vec![Vec::new(); n];
        for line in &self.lines {
            if let (Some(i), Some(j)) = (self.bus_index(line.from), self.bus_index(line.to)) {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Prices for violating the soft system-wide constraints, $/MW.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Penalties {
    pub balance: f64,
    pub reserve: f64,
    pub flow: f64,
}

impl Default for Penalties {
    fn default() -> Self {
        // Above any sane marginal energy price so slacks engage last.
        Penalties { balance: 5000.0, reserve: 1100.0, flow: 2000.0 }
    }
}

/// Current wire-format version for instance files.
pub const INSTANCE_FORMAT: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RacInstance {
    pub format: u32,
    pub kind: RacKind,
    pub horizon: usize,
    pub penalties: Penalties,
    pub network: Network,
    pub generators: Vec<Generator>,
    pub loads: Vec<Load>,
    pub reserve_requirement: Vec<f64>,
}

/// Serialize boolean masks as 0/1 integer arrays.
mod mask_01 {
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(mask: &[bool], ser: S) -> Result<S::Ok, S::Error> {
        ser.collect_seq(mask.iter().map(|&b| u8::from(b)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<bool>, D::Error> {
        let raw = Vec::<u8>::deserialize(de)?;
        raw.into_iter()
            .map(|v| match v {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(D::Error::custom(format!("mask entry must be 0 or 1, got {other}"))),
            })
            .collect()
    }
}

#[derive(Debug, Error)]
pub enum UcError {
    #[error("schedule length {got} does not match horizon {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{field}: length mismatch (expected {expected}, got {got})")]
    FieldLength { field: String, expected: usize, got: usize },
}

/// A single validation finding; `path` locates the offending field/index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

fn violation(path: impl Into<String>, message: impl Into<String>) -> Violation {
    Violation { path: path.into(), message: message.into() }
}

// ---------------------------------------------------------------------------
// Commitment-rule checking
// ---------------------------------------------------------------------------

/// Per-generator commitment rules needed to judge a 0/1 schedule.
#[derive(Debug, Clone, Copy)]
pub struct CommitRules {
    pub min_up: usize,
    pub min_down: usize,
    pub initial_on: bool,
    pub initial_duration: usize,
}

impl CommitRules {
    pub fn of(g: &Generator) -> Self {
        CommitRules {
            min_up: g.min_up,
            min_down: g.min_down,
            initial_on: g.initial_on,
            initial_duration: g.initial_duration,
        }
    }

    fn min_dwell(&self, on: bool) -> usize {
        if on {
            self.min_up
        } else {
            self.min_down
        }
    }
}

/// Check min-up/min-down switch rules over a full 0/1 schedule, ignoring any
/// must-run mask. A switch out of a status requires the dwell in that status
/// (counting the initial dwell for the leading run) to have reached its
/// minimum, and a switch into a status requires enough remaining periods for
/// the new minimum dwell.
pub fn commitment_rules_ok(x: &[bool], rules: &CommitRules) -> bool {
    let horizon = x.len();
    let mut status = rules.initial_on;
    let mut dwell = rules.initial_duration;
    for (t, &on) in x.iter().enumerate() {
        if on != status {
            if dwell < rules.min_dwell(status) {
                return false;
            }
            if horizon - t < rules.min_dwell(on) {
                return false;
            }
            status = on;
            dwell = 1;
        } else {
            dwell += 1;
        }
    }
    true
}

/// Lint a must-run mask: every interior run (bounded by switches on both
/// sides within the horizon) must meet its minimum dwell. Boundary runs are
/// exempt because they may continue past either end of the window.
pub fn mask_runs_consistent(mask: &[bool], min_up: usize, min_down: usize) -> bool {
    let mut runs: Vec<(bool, usize)> = Vec::new();
    for &on in mask {
        match runs.last_mut() {
            Some((s, len)) if *s == on => *len += 1,
            _ => runs.push((on, 1)),
        }
    }
    if runs.len() <= 2 {
        return true;
    }
    runs[1..runs.len() - 1]
        .iter()
        .all(|&(on, len)| len >= if on { min_up } else { min_down })
}

/// True when some feasible schedule commits every masked cell, given the
/// true initial state. Forward reachability over (status, dwell) states.
pub fn mask_completion_exists(mask: &[bool], rules: &CommitRules) -> bool {
    let cap_on = rules.min_up;
    let cap_off = rules.min_down;
    let horizon = mask.len();
    let state_id = |on: bool, dwell: usize| -> usize {
        if on {
            cap_off + dwell.min(cap_on) - 1
        } else {
            dwell.min(cap_off) - 1
        }
    };
    let nstates = cap_on + cap_off;
    let mut reach = vec![false; nstates];
    reach[state_id(rules.initial_on, rules.initial_duration)] = true;
    for t in 0..horizon {
        let mut next = vec![false; nstates];
        for on in [false, true] {
            let cap = if on { cap_on } else { cap_off };
            for dwell in 1..=cap {
                if !reach[state_id(on, dwell)] {
                    continue;
                }
                for b in [false, true] {
                    if mask[t] && !b {
                        continue;
                    }
                    if b == on {
                        next[state_id(on, dwell + 1)] = true;
                    } else {
                        let min_cur = if on { rules.min_up } else { rules.min_down };
                        let min_new = if b { rules.min_up } else { rules.min_down };
                        if dwell >= min_cur && horizon - t >= min_new {
                            next[state_id(b, 1)] = true;
                        }
                    }
                }
            }
        }
        reach = next;
        if reach.iter().all(|&r| !r) {
            return false;
        }
    }
    true
}

/// Full per-generator feasibility of a commitment vector: switch rules plus
/// the must-run mask.
pub fn schedule_is_feasible(x: &[bool], g: &Generator) -> Result<bool, UcError> {
    let horizon = g.must_run.len();
    if x.len() != horizon {
        return Err(UcError::LengthMismatch { expected: horizon, got: x.len() });
    }
    for t in 0..horizon {
        if g.must_run[t] && !x[t] {
            return Ok(false);
        }
    }
    Ok(commitment_rules_ok(x, &CommitRules::of(g)))
}

// ---------------------------------------------------------------------------
// Schedule with derived switch indicators
// ---------------------------------------------------------------------------

/// A commitment matrix over (generator, period) with derived startup and
/// shutdown indicators.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub x: Vec<Vec<bool>>,
    pub u_start: Vec<Vec<bool>>,
    pub u_stop: Vec<Vec<bool>>,
}

impl Schedule {
    /// Derive startup/shutdown indicators from commitments and initial states.
    pub fn from_commitments(x: Vec<Vec<bool>>, generators: &[Generator]) -> Self {
        let mut u_start = Vec::with_capacity(x.len());
        let mut u_stop = Vec::with_capacity(x.len());
        for (g, row) in x.iter().enumerate() {
            let mut prev = generators[g].initial_on;
            let mut starts = Vec::with_capacity(row.len());
            let mut stops = Vec::with_capacity(row.len());
            for &on in row {
                starts.push(on && !prev);
                stops.push(!on && prev);
                prev = on;
            }
            u_start.push(starts);
            u_stop.push(stops);
        }
        Schedule { x, u_start, u_stop }
    }

    pub fn horizon(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }
}

// ---------------------------------------------------------------------------
// Instance validation
// ---------------------------------------------------------------------------

/// Check every type invariant and report violations instead of failing.
pub fn validate_instance(inst: &RacInstance) -> Vec<Violation> {
    let mut out = Vec::new();
    let horizon = inst.horizon;

    if horizon < 1 {
        out.push(violation("horizon", "must be at least 1"));
    }
    if inst.format != INSTANCE_FORMAT {
        out.push(violation("format", format!("unsupported version {}", inst.format)));
    }

    let net = &inst.network;
    if net.bus_index(net.reference_bus).is_none() {
        out.push(violation("network.reference_bus", format!("bus {} not in bus list", net.reference_bus)));
    }
    for (i, line) in net.lines.iter().enumerate() {
        let path = format!("network.lines[{i}]");
        if line.from == line.to {
            out.push(violation(&path, "self-loop line"));
        }
        if line.reactance <= 0.0 {
            out.push(violation(format!("{path}.reactance"), "must be positive"));
        }
        if line.flow_limit <= 0.0 {
            out.push(violation(format!("{path}.flow_limit"), "must be positive"));
        }
        for (end, bus) in [("from", line.from), ("to", line.to)] {
            if net.bus_index(bus).is_none() {
                out.push(violation(format!("{path}.{end}"), format!("bus {bus} not in bus list")));
            }
        }
    }
    if !net.buses.is_empty() && !net.is_connected() {
        out.push(violation("network", "graph is not connected"));
    }

    let mut max_energy_price = 0.0f64;

    for g in &inst.generators {
        let path = format!("generators[{}]", g.id);
        if net.bus_index(g.bus).is_none() {
            out.push(violation(format!("{path}.bus"), format!("bus {} not in bus list", g.bus)));
        }
        for (name, arr) in [
            ("eco_min", &g.eco_min),
            ("eco_max", &g.eco_max),
            ("no_load_cost", &g.no_load_cost),
            ("reserve_max", &g.reserve_max),
            ("reserve_price", &g.reserve_price),
        ] {
            if arr.len() != horizon {
                out.push(violation(
                    format!("{path}.{name}"),
                    format!("length {} does not match horizon {horizon}", arr.len()),
                ));
            }
        }
        if g.must_run.len() != horizon {
            out.push(violation(
                format!("{path}.must_run"),
                format!("length {} does not match horizon {horizon}", g.must_run.len()),
            ));
        }
        for t in 0..g.eco_min.len().min(g.eco_max.len()) {
            if g.eco_min[t] < 0.0 {
                out.push(violation(format!("{path}.eco_min[t={t}]"), "must be non-negative"));
            }
            if g.eco_min[t] > g.eco_max[t] {
                out.push(violation(
                    format!("{path}.eco_min[t={t}]"),
                    format!("eco_min {} exceeds eco_max {}", g.eco_min[t], g.eco_max[t]),
                ));
            }
        }
        if g.min_up < 1 {
            out.push(violation(format!("{path}.min_up"), "must be at least 1"));
        }
        if g.min_down < 1 {
            out.push(violation(format!("{path}.min_down"), "must be at least 1"));
        }
        if g.initial_duration < 1 {
            out.push(violation(format!("{path}.initial_duration"), "must be at least 1"));
        }
        if g.energy_steps.len() > MAX_ENERGY_STEPS {
            out.push(violation(
                format!("{path}.energy_steps"),
                format!("{} steps exceed the maximum of {MAX_ENERGY_STEPS}", g.energy_steps.len()),
            ));
        }
        let width_sum: f64 = g.energy_steps.iter().map(|s| s.width).sum();
        for t in 0..g.eco_min.len().min(g.eco_max.len()) {
            let spread = g.eco_max[t] - g.eco_min[t];
            if (width_sum - spread).abs() > 1e-6 {
                out.push(violation(
                    format!("{path}.energy_steps"),
                    format!("widths sum to {width_sum} but eco_max - eco_min is {spread} at t={t}"),
                ));
                break;
            }
        }
        for (s, pair) in g.energy_steps.windows(2).enumerate() {
            if pair[1].price < pair[0].price {
                out.push(violation(
                    format!("{path}.energy_steps[{}]", s + 1),
                    "prices must be non-decreasing across steps",
                ));
            }
        }
        for (s, step) in g.energy_steps.iter().enumerate() {
            if step.width < 0.0 {
                out.push(violation(format!("{path}.energy_steps[{s}].width"), "must be non-negative"));
            }
            max_energy_price = max_energy_price.max(step.price);
        }
        if g.must_run.len() == horizon {
            if !mask_runs_consistent(&g.must_run, g.min_up, g.min_down) {
                out.push(violation(
                    format!("{path}.must_run"),
                    "must-run incompatible with min-up/min-down",
                ));
            }
            if !mask_completion_exists(&g.must_run, &CommitRules::of(g)) {
                out.push(violation(
                    format!("{path}.must_run"),
                    "must-run admits no feasible completion given initial state",
                ));
            }
        }
        if g.startup_ramp < g.eco_min.iter().fold(0.0f64, |a, &b| a.max(b)) - 1e-9 {
            out.push(violation(
                format!("{path}.startup_ramp"),
                "below eco_min: committed-feasible schedules could not dispatch",
            ));
        }
        if g.shutdown_ramp < g.eco_min.iter().fold(0.0f64, |a, &b| a.max(b)) - 1e-9 {
            out.push(violation(
                format!("{path}.shutdown_ramp"),
                "below eco_min: committed-feasible schedules could not dispatch",
            ));
        }
        for t in 1..g.eco_min.len() {
            let rise = g.eco_min[t] - g.eco_min[t - 1];
            if rise > g.ramp_up + 1e-9 || -rise > g.ramp_down + 1e-9 {
                out.push(violation(
                    format!("{path}.eco_min[t={t}]"),
                    "eco_min varies faster than the ramp rates allow",
                ));
                break;
            }
        }
    }

    for l in &inst.loads {
        let path = format!("loads[{}]", l.id);
        if net.bus_index(l.bus).is_none() {
            out.push(violation(format!("{path}.bus"), format!("bus {} not in bus list", l.bus)));
        }
        if l.forecast.len() != horizon {
            out.push(violation(
                format!("{path}.forecast"),
                format!("length {} does not match horizon {horizon}", l.forecast.len()),
            ));
        }
        for (t, &f) in l.forecast.iter().enumerate() {
            if f < 0.0 {
                out.push(violation(format!("{path}.forecast[t={t}]"), "must be non-negative"));
            }
        }
    }

    if inst.reserve_requirement.len() != horizon {
        out.push(violation(
            "reserve_requirement",
            format!("length {} does not match horizon {horizon}", inst.reserve_requirement.len()),
        ));
    }

    for (name, p) in
        [("balance", inst.penalties.balance), ("reserve", inst.penalties.reserve), ("flow", inst.penalties.flow)]
    {
        if p <= max_energy_price {
            out.push(violation(
                format!("penalties.{name}"),
                format!("penalty {p} must exceed the maximum marginal energy price {max_energy_price}"),
            ));
        }
    }

    out
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// Serialize an instance to the versioned JSON wire format.
pub fn serialize_instance(inst: &RacInstance) -> String {
    serde_json::to_string_pretty(inst).expect("instance serialization cannot fail")
}

/// Parse an instance, checking structural consistency (array lengths against
/// the horizon and bus references) so downstream code can index freely.
pub fn deserialize_instance(text: &str) -> Result<RacInstance, UcError> {
    let inst: RacInstance =
        serde_json::from_str(text).map_err(|e| UcError::Parse(e.to_string()))?;
    if inst.format != INSTANCE_FORMAT {
        return Err(UcError::Parse(format!(
            "unsupported format version {} (expected {INSTANCE_FORMAT})",
            inst.format
        )));
    }
    let horizon = inst.horizon;
    let check = |field: String, len: usize| -> Result<(), UcError> {
        if len != horizon {
            Err(UcError::FieldLength { field, expected: horizon, got: len })
        } else {
            Ok(())
        }
    };
    for g in &inst.generators {
        let p = format!("generators[{}]", g.id);
        check(format!("{p}.eco_min"), g.eco_min.len())?;
        check(format!("{p}.eco_max"), g.eco_max.len())?;
        check(format!("{p}.no_load_cost"), g.no_load_cost.len())?;
        check(format!("{p}.must_run"), g.must_run.len())?;
        check(format!("{p}.reserve_max"), g.reserve_max.len())?;
        check(format!("{p}.reserve_price"), g.reserve_price.len())?;
        if inst.network.bus_index(g.bus).is_none() {
            return Err(UcError::Parse(format!("{p}.bus: unknown bus {}", g.bus)));
        }
    }
    for l in &inst.loads {
        check(format!("loads[{}].forecast", l.id), l.forecast.len())?;
        if inst.network.bus_index(l.bus).is_none() {
            return Err(UcError::Parse(format!("loads[{}].bus: unknown bus {}", l.id, l.bus)));
        }
    }
    check("reserve_requirement".into(), inst.reserve_requirement.len())?;
    Ok(inst)
}


#[cfg(test)]
mod tests {
    use super::tests_support::{generator as test_generator, instance as test_instance};
    use super::*;

    #[test]
    fn well_formed_instance_validates_clean() {
        let inst = test_instance(4, 2);
        assert!(validate_instance(&inst).is_empty());
    }

    #[test]
    fn eco_min_above_eco_max_names_the_cell() {
        let mut inst = test_instance(4, 1);
        inst.generators[0].eco_min[3] = 25.0;
        let violations = validate_instance(&inst);
        assert!(violations.iter().any(|v| v.path == "generators[0].eco_min[t=3]"), "{violations:?}");
    }

    #[test]
    fn must_run_incompatible_with_min_up_is_flagged() {
        let mut inst = test_instance(4, 1);
        inst.generators[0].min_up = 2;
        inst.generators[0].must_run = vec![true, false, true, false];
        let violations = validate_instance(&inst);
        assert!(
            violations.iter().any(|v| v.message.contains("must-run incompatible")),
            "{violations:?}"
        );
    }

    /// Independent oracle: decompose into runs and check each run's dwell and
    /// horizon room directly.
    fn feasible_by_run_decomposition(x: &[bool], r: &CommitRules) -> bool {
        let horizon = x.len();
        if horizon == 0 {
            return true;
        }
        let mut runs: Vec<(bool, usize, usize)> = Vec::new(); // (status, start, len)
        for (t, &on) in x.iter().enumerate() {
            match runs.last_mut() {
                Some((s, _, len)) if *s == on => *len += 1,
                _ => runs.push((on, t, 1)),
            }
        }
        let continuation = runs[0].0 == r.initial_on;
        for (i, &(status, start, len)) in runs.iter().enumerate() {
            let leading_extra = if i == 0 && continuation { r.initial_duration } else { 0 };
            let begins_with_switch = !(i == 0 && continuation);
            if begins_with_switch && horizon - start < r.min_dwell(status) {
                return false;
            }
            let ends_with_switch = i + 1 < runs.len();
            if ends_with_switch && len + leading_extra < r.min_dwell(status) {
                return false;
            }
            // A switch at `start` also ends the previous dwell; for the first
            // run that dwell is the initial one.
            if i == 0 && !continuation && r.initial_duration < r.min_dwell(!status) {
                return false;
            }
        }
        true
    }

    #[test]
    fn feasibility_examples() {
        let mut g = test_generator(4);
        g.min_up = 2;
        g.min_down = 2;
        assert!(schedule_is_feasible(&[true, true, true, true], &g).unwrap());
        assert!(!schedule_is_feasible(&[true, false, true, false], &g).unwrap());

        let mut g2 = test_generator(4);
        g2.initial_on = true;
        g2.initial_duration = 1;
        g2.min_up = 3;
        assert!(!schedule_is_feasible(&[false, false, false, false], &g2).unwrap());
        // Two more on-periods discharge the obligation.
        assert!(schedule_is_feasible(&[true, true, false, false], &g2).unwrap());
    }

    #[test]
    fn horizon_room_rule_rejects_late_switches() {
        let mut g = test_generator(4);
        g.min_up = 2;
        g.min_down = 2;
        // Turning on at the last period cannot complete its minimum dwell.
        assert!(!schedule_is_feasible(&[false, false, false, true], &g).unwrap());
        // Turning off at the last period likewise.
        assert!(!schedule_is_feasible(&[true, true, true, false], &g).unwrap());
        assert!(schedule_is_feasible(&[false, false, true, true], &g).unwrap());
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let g = test_generator(4);
        assert!(schedule_is_feasible(&[true, true], &g).is_err());
    }

    #[test]
    fn rules_match_run_decomposition_oracle_exhaustively() {
        for min_up in 1..=3usize {
            for min_down in 1..=3usize {
                for initial_on in [false, true] {
                    for initial_duration in 1..=3usize {
                        let rules = CommitRules { min_up, min_down, initial_on, initial_duration };
                        for horizon in 1..=8usize {
                            for bits in 0..(1u32 << horizon) {
                                let x: Vec<bool> =
                                    (0..horizon).map(|t| bits >> t & 1 == 1).collect();
                                assert_eq!(
                                    commitment_rules_ok(&x, &rules),
                                    feasible_by_run_decomposition(&x, &rules),
                                    "x={x:?} rules={rules:?}"
                                );
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn derived_switch_indicators_are_consistent() {
        let gens = vec![
            Generator { initial_on: true, ..test_generator(5) },
            Generator { id: 1, ..test_generator(5) },
        ];
        let x = vec![
            vec![true, false, false, true, true],
            vec![false, true, true, false, false],
        ];
        let s = Schedule::from_commitments(x, &gens);
        for g in 0..2 {
            let mut prev = gens[g].initial_on;
            for t in 0..5 {
                let dx = i32::from(s.x[g][t]) - i32::from(prev);
                assert_eq!(dx, i32::from(s.u_start[g][t]) - i32::from(s.u_stop[g][t]));
                assert!(!(s.u_start[g][t] && s.u_stop[g][t]));
                prev = s.x[g][t];
            }
        }
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let inst = test_instance(3, 2);
        let text = serialize_instance(&inst);
        let back = deserialize_instance(&text).unwrap();
        assert_eq!(back, inst);
        assert_eq!(serialize_instance(&back), text);
    }

    #[test]
    fn missing_reference_bus_names_the_field() {
        let inst = test_instance(2, 1);
        let mut value: serde_json::Value = serde_json::from_str(&serialize_instance(&inst)).unwrap();
        value["network"].as_object_mut().unwrap().remove("reference_bus");
        let err = deserialize_instance(&value.to_string()).unwrap_err();
        assert!(err.to_string().contains("reference_bus"), "{err}");
    }

    #[test]
    fn forecast_length_mismatch_is_reported() {
        let mut inst = test_instance(4, 1);
        inst.loads[0].forecast = vec![1.0; 2];
        let text = serde_json::to_string(&inst).unwrap();
        let err = deserialize_instance(&text).unwrap_err();
        assert!(err.to_string().contains("length mismatch"), "{err}");
        assert!(err.to_string().contains("forecast"), "{err}");
    }

    #[test]
    fn mask_serializes_as_01() {
        let mut inst = test_instance(2, 1);
        inst.generators[0].must_run = vec![true, false];
        let text = serialize_instance(&inst);
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["generators"][0]["must_run"], serde_json::json!([1, 0]));
    }
}
