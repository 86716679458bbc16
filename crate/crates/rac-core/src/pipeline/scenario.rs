//! Synthetic fleets, networks, and load scenarios.
//!
//! Fleets mix slow/cheap base units, mid-merit units, and fast peakers sized
//! so total capacity comfortably covers the daily peak. Line limits are set
//! relative to a nominal flow pattern so congestion appears at peak hours
//! without making instances infeasible. Loads follow a daily sinusoid with
//! per-day autoregressive noise and a linear drift that separates the train
//! and test windows.

use crate::netcalc::compute_ptdf;
use crate::uc::{
    EnergyStep, Generator, Line, Load, Network, Penalties, RacInstance, RacKind, INSTANCE_FORMAT,
};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub generators: usize,
    pub buses: usize,
    pub lines: usize,
    pub frac_horizon: usize,
    pub lac_horizon: usize,
    /// Intra-day re-commitment passes over the look-ahead span.
    pub lac_windows: usize,
    /// Hour at which the look-ahead span starts.
    pub lac_offset: usize,
    pub days: usize,
    pub train_days: usize,
    /// System-wide average load as a fraction of total fleet capacity.
    pub load_level: f64,
    /// Daily sinusoid amplitude as a fraction of the base load.
    pub load_amplitude: f64,
    /// Std of the day-to-day autoregressive load noise (fraction).
    pub load_noise_std: f64,
    /// Linear per-day drift of the load level (fraction per day).
    pub drift_rate: f64,
    /// Std of the forecast refresh noise between solves (fraction).
    pub forecast_error_std: f64,
    /// Reserve requirement as a fraction of hourly load.
    pub reserve_fraction: f64,
    /// Line limit slack over nominal peak flows; lower is more congested.
    pub congestion_margin: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 1,
            generators: 30,
            buses: 14,
            lines: 20,
            frac_horizon: 24,
            lac_horizon: 12,
            lac_windows: 4,
            lac_offset: 6,
            days: 12,
            train_days: 9,
            load_level: 0.5,
            load_amplitude: 0.18,
            load_noise_std: 0.03,
            drift_rate: 0.004,
            forecast_error_std: 0.02,
            reserve_fraction: 0.05,
            congestion_margin: 1.15,
        }
    }
}

/// A synthesized fleet: the fixed physical system a scenario runs on.
#[derive(Debug, Clone)]
pub struct Fleet {
    pub network: Network,
    pub generators: Vec<Generator>,
    pub load_buses: Vec<usize>,
    pub load_shares: Vec<f64>,
    pub load_phases: Vec<f64>,
    /// Total eco-max capacity at a reference hour.
    pub capacity: f64,
}

pub fn synth_fleet(cfg: &ScenarioConfig) -> Fleet {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.buses.max(2);

    let mut lines = Vec::new();
    for i in 1..n {
        let j = rng.gen_range(0..i);
        lines.push((i, j));
    }
    while lines.len() < cfg.lines.max(n - 1) {
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        if i != j && !lines.contains(&(i, j)) && !lines.contains(&(j, i)) {
            lines.push((i, j));
        }
    }
    let network = Network {
        buses: (0..n).collect(),
        lines: lines
            .iter()
            .enumerate()
            .map(|(id, &(from, to))| Line {
                id,
                from,
                to,
                reactance: rng.gen_range(0.05..0.25),
                flow_limit: 1.0, // sized below from nominal flows
            })
            .collect(),
        reference_bus: 0,
    };

    // Loads: one per bus, random share of the system load, staggered phases.
    let load_buses: Vec<usize> = (0..n).collect();
    let raw_shares: Vec<f64> = (0..n).map(|_| rng.gen_range(0.3..1.0)).collect();
    let share_sum: f64 = raw_shares.iter().sum();
    let load_shares: Vec<f64> = raw_shares.iter().map(|s| s / share_sum).collect();
    let load_phases: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();

    // Generator classes: (count share, size, eco-min frac, marginal cost,
    // no-load, startup, min dwell, ramp frac of spread).
    let horizon = cfg.frac_horizon.max(cfg.lac_horizon);
    let mut generators = Vec::with_capacity(cfg.generators);
    let mut capacity = 0.0;
    for id in 0..cfg.generators {
        let class = match id % 3 {
            0 => 0, // base
            1 => 1, // mid
            _ => 2, // peaker
        };
        let (size_lo, size_hi, min_frac, cost_lo, cost_hi, dwell_hi, ramp_frac) = match class {
            0 => (80.0, 140.0, 0.45, 8.0, 14.0, 4usize, 0.35),
            1 => (40.0, 80.0, 0.35, 16.0, 26.0, 2, 0.6),
            _ => (15.0, 40.0, 0.2, 30.0, 55.0, 1, 1.0),
        };
        let eco_max: f64 = rng.gen_range(size_lo..size_hi);
        let eco_min = (eco_max * min_frac * rng.gen_range(0.8..1.2)).min(eco_max * 0.8);
        let spread = eco_max - eco_min;
        let base_price = rng.gen_range(cost_lo..cost_hi);
        let nsteps = rng.gen_range(2..=3usize);
        let widths = {
            let mut cuts: Vec<f64> = (0..nsteps - 1).map(|_| rng.gen_range(0.2..0.8)).collect();
            cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut w = Vec::with_capacity(nsteps);
            let mut prev = 0.0;
            for c in cuts {
                w.push((c - prev) * spread);
                prev = c;
            }
            w.push((1.0 - prev) * spread);
            w
        };
        let energy_steps: Vec<EnergyStep> = widths
            .iter()
            .enumerate()
            .map(|(e, &width)| EnergyStep { width, price: base_price * (1.0 + 0.25 * e as f64) })
            .collect();
        let dwell = rng.gen_range(1..=dwell_hi);
        let initial_on = class == 0;
        capacity += eco_max;
        generators.push(Generator {
            id,
            bus: rng.gen_range(0..n),
            eco_min: vec![eco_min; horizon],
            eco_max: vec![eco_max; horizon],
            min_up: dwell,
            min_down: dwell,
            ramp_up: (spread * ramp_frac).max(1.0),
            ramp_down: (spread * ramp_frac).max(1.0),
            startup_ramp: eco_min + 0.6 * spread,
            shutdown_ramp: eco_min + 0.6 * spread,
            initial_on,
            initial_duration: horizon,
            no_load_cost: vec![base_price * eco_max * 0.08; horizon],
            startup_cost: base_price * eco_max * rng.gen_range(0.05..0.25),
            energy_steps,
            must_run: vec![false; horizon],
            reserve_max: vec![spread * 0.25; horizon],
            reserve_price: vec![base_price * 0.08; horizon],
        });
    }

    let mut fleet =
        Fleet { network, generators, load_buses, load_shares, load_phases, capacity };

    // Size line limits from nominal peak flows so congestion is occasional.
    let ptdf = compute_ptdf(&fleet.network).expect("synth networks are connected");
    let peak = cfg.load_level * fleet.capacity * (1.0 + cfg.load_amplitude);
    let mut inj = vec![0.0; n];
    for g in &fleet.generators {
        let b = fleet.network.bus_index(g.bus).unwrap();
        // Nominal generation proportional to capacity at peak level.
        inj[b] += g.eco_max[0] / fleet.capacity * peak;
    }
    for (li, &b) in fleet.load_buses.iter().enumerate() {
        inj[b] -= fleet.load_shares[li] * peak;
    }
    let flows = ptdf.flows(&inj);
    let mean_abs = flows.iter().map(|f| f.abs()).sum::<f64>() / flows.len().max(1) as f64;
    for (l, line) in fleet.network.lines.iter_mut().enumerate() {
        let nominal = flows[l].abs().max(0.25 * mean_abs).max(1.0);
        line.flow_limit = nominal * cfg.congestion_margin;
    }
    fleet
}

/// Hourly per-load forecast for a given absolute hour of a simulated day.
/// `level_noise` is the day-level autoregressive factor; `refresh_noise`
/// perturbs individual hours (forecast updates between solves).
pub fn load_profile(
    cfg: &ScenarioConfig,
    fleet: &Fleet,
    load_idx: usize,
    day: usize,
    hour: usize,
    level_noise: f64,
    refresh: &mut ChaCha8Rng,
) -> f64 {
    let share = fleet.load_shares[load_idx];
    let base = cfg.load_level * fleet.capacity * share;
    let angle = 2.0 * std::f64::consts::PI * (hour as f64) / 24.0 + fleet.load_phases[load_idx];
    let shape = 1.0 + cfg.load_amplitude * (angle.sin() - 0.3 * (2.0 * angle).cos());
    let drift = 1.0 + cfg.drift_rate * day as f64;
    let noise = 1.0 + cfg.forecast_error_std * refresh.sample::<f64, _>(rand_distr_standard());
    (base * shape * drift * (1.0 + level_noise) * noise).max(0.0)
}

/// Standard normal via Box-Muller on the uniform generator, avoiding a
/// dependency on rand_distr.
struct StdNormal;

fn rand_distr_standard() -> StdNormal {
    StdNormal
}

impl rand::distributions::Distribution<f64> for StdNormal {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u1: f64 = rng.gen_range(1e-12..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

/// Assemble an instance for one kind over `horizon` periods starting at
/// `start_hour` of `day`.
#[allow(clippy::too_many_arguments)]
pub fn make_instance(
    cfg: &ScenarioConfig,
    fleet: &Fleet,
    kind: RacKind,
    horizon: usize,
    day: usize,
    start_hour: usize,
    level_noise: f64,
    refresh: &mut ChaCha8Rng,
    must_run: Option<&[Vec<bool>]>,
    initial: Option<&[(bool, usize)]>,
) -> RacInstance {
    let generators: Vec<Generator> = fleet
        .generators
        .iter()
        .enumerate()
        .map(|(g, template)| {
            let mut gen = template.clone();
            gen.eco_min = vec![template.eco_min[0]; horizon];
            gen.eco_max = vec![template.eco_max[0]; horizon];
            gen.no_load_cost = vec![template.no_load_cost[0]; horizon];
            gen.reserve_max = vec![template.reserve_max[0]; horizon];
            gen.reserve_price = vec![template.reserve_price[0]; horizon];
            gen.must_run = match must_run {
                Some(m) => m[g].clone(),
                None => vec![false; horizon],
            };
            if let Some(init) = initial {
                gen.initial_on = init[g].0;
                gen.initial_duration = init[g].1.max(1);
            }
            gen
        })
        .collect();
    let loads: Vec<Load> = fleet
        .load_buses
        .iter()
        .enumerate()
        .map(|(li, &bus)| Load {
            id: li,
            bus,
            forecast: (0..horizon)
                .map(|t| load_profile(cfg, fleet, li, day, start_hour + t, level_noise, refresh))
                .collect(),
        })
        .collect();
    let reserve_requirement: Vec<f64> = (0..horizon)
        .map(|t| cfg.reserve_fraction * loads.iter().map(|l| l.forecast[t]).sum::<f64>())
        .collect();
    RacInstance {
        format: INSTANCE_FORMAT,
        kind,
        horizon,
        penalties: Penalties::default(),
        network: fleet.network.clone(),
        generators,
        loads,
        reserve_requirement,
    }
}

/// Small random instance for brute-force oracle checks: a few generators and
/// periods, optionally with tight line limits to force congestion.
pub fn tiny_random_instance(
    rng: &mut ChaCha8Rng,
    gens: usize,
    horizon: usize,
    lines: usize,
    congested: bool,
) -> RacInstance {
    let buses = (gens / 2 + 2).clamp(2, 5);
    let mut line_list = Vec::new();
    for i in 1..buses {
        line_list.push((i, rng.gen_range(0..i)));
    }
    while line_list.len() < lines.max(buses - 1) {
        let i = rng.gen_range(0..buses);
        let j = rng.gen_range(0..buses);
        if i != j {
            line_list.push((i, j));
        }
    }
    let total_cap_guess = 30.0 * gens as f64;
    let network = Network {
        buses: (0..buses).collect(),
        lines: line_list
            .into_iter()
            .enumerate()
            .map(|(id, (from, to))| Line {
                id,
                from,
                to,
                reactance: rng.gen_range(0.05..0.3),
                flow_limit: if congested {
                    rng.gen_range(0.05..0.25) * total_cap_guess
                } else {
                    total_cap_guess * 2.0
                },
            })
            .collect(),
        reference_bus: 0,
    };
    let generators: Vec<Generator> = (0..gens)
        .map(|id| {
            let eco_max = rng.gen_range(15.0..45.0);
            let eco_min = eco_max * rng.gen_range(0.2..0.5);
            let spread = eco_max - eco_min;
            let price = rng.gen_range(5.0..40.0);
            let nsteps = rng.gen_range(1..=2usize);
            let energy_steps = if nsteps == 1 {
                vec![EnergyStep { width: spread, price }]
            } else {
                let cut = rng.gen_range(0.3..0.7);
                vec![
                    EnergyStep { width: spread * cut, price },
                    EnergyStep { width: spread * (1.0 - cut), price: price * 1.4 },
                ]
            };
            let min_up = rng.gen_range(1..=horizon.min(3));
            let min_down = rng.gen_range(1..=horizon.min(3));
            let initial_on = rng.gen_bool(0.4);
            let initial_duration = rng.gen_range(1..=4).max(if initial_on { 1 } else { min_down });
            let mut must_run = vec![false; horizon];
            if initial_on && rng.gen_bool(0.3) {
                // A prefix shorter than the horizon must leave room for the
                // down-switch: enough on-dwell before it and enough periods
                // after it.
                let lo = min_up.saturating_sub(initial_duration).max(1);
                let hi = horizon.saturating_sub(min_down);
                let len = if lo <= hi && rng.gen_bool(0.5) { rng.gen_range(lo..=hi) } else { horizon };
                for cell in must_run.iter_mut().take(len) {
                    *cell = true;
                }
            }
            Generator {
                id,
                bus: rng.gen_range(0..buses),
                eco_min: vec![eco_min; horizon],
                eco_max: vec![eco_max; horizon],
                min_up,
                min_down,
                ramp_up: spread * rng.gen_range(0.5..1.5),
                ramp_down: spread * rng.gen_range(0.5..1.5),
                startup_ramp: eco_min + spread * rng.gen_range(0.5..1.0),
                shutdown_ramp: eco_min + spread * rng.gen_range(0.5..1.0),
                initial_on,
                initial_duration,
                no_load_cost: vec![price * eco_max * 0.1; horizon],
                startup_cost: price * eco_max * rng.gen_range(0.2..0.8),
                energy_steps,
                must_run,
                reserve_max: vec![spread * 0.3; horizon],
                reserve_price: vec![price * 0.1; horizon],
            }
        })
        .collect();
    let capacity: f64 = generators.iter().map(|g| g.eco_max[0]).sum();
    let loads: Vec<Load> = (0..buses.min(3))
        .map(|id| Load {
            id,
            bus: rng.gen_range(0..buses),
            forecast: (0..horizon)
                .map(|_| rng.gen_range(0.2..0.7) * capacity / buses.min(3) as f64)
                .collect(),
        })
        .collect();
    let reserve_requirement: Vec<f64> = (0..horizon)
        .map(|t| 0.05 * loads.iter().map(|l| l.forecast[t]).sum::<f64>())
        .collect();
    RacInstance {
        format: INSTANCE_FORMAT,
        kind: RacKind::DaScuc,
        horizon,
        penalties: Penalties::default(),
        network,
        generators,
        loads,
        reserve_requirement,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uc::validate_instance;

    #[test]
    fn synthesized_fleet_yields_valid_instances() {
        let cfg = ScenarioConfig::default();
        let fleet = synth_fleet(&cfg);
        let mut refresh = ChaCha8Rng::seed_from_u64(9);
        let inst = make_instance(
            &cfg,
            &fleet,
            RacKind::DaScuc,
            cfg.frac_horizon,
            0,
            0,
            0.0,
            &mut refresh,
            None,
            None,
        );
        let violations = validate_instance(&inst);
        assert!(violations.is_empty(), "{violations:?}");
        assert_eq!(inst.generators.len(), cfg.generators);
        assert_eq!(inst.loads.len(), cfg.buses);
    }

    #[test]
    fn tiny_instances_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..50 {
            let gens = rng.gen_range(1..=4);
            let horizon = rng.gen_range(1..=4);
            let lines = rng.gen_range(1..=2);
            let congested = rng.gen_bool(0.5);
            let inst = tiny_random_instance(&mut rng, gens, horizon, lines, congested);
            let violations = validate_instance(&inst);
            assert!(violations.is_empty(), "trial {trial}: {violations:?}");
        }
    }

    #[test]
    fn same_seed_same_fleet() {
        let cfg = ScenarioConfig::default();
        let a = synth_fleet(&cfg);
        let b = synth_fleet(&cfg);
        assert_eq!(a.network, b.network);
        assert_eq!(a.generators, b.generators);
    }
}
