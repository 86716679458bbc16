use rac_core::milp::build_rac;
use rac_core::pipeline::scenario::{make_instance, synth_fleet, ScenarioConfig};
use rac_core::solver::{solve_lp, LpStatus};
use rac_core::uc::RacKind;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

#[test]
fn dbg_root_lp() {
    let cfg = ScenarioConfig::default();
    let fleet = synth_fleet(&cfg);
    let mut refresh = ChaCha8Rng::seed_from_u64(42);
    let inst = make_instance(&cfg, &fleet, RacKind::DaScuc, 24, 0, 0, 0.0, &mut refresh, None, None);
    let p = build_rac(&inst, &[], &[]).unwrap();
    eprintln!("vars {} rows {}", p.variables.len(), p.constraints.len());
    let start = Instant::now();
    let lp = solve_lp(&p);
    eprintln!("root LP: status {:?} obj {:.2} iters {} wall {:.2}s", lp.status, lp.objective, lp.iterations, start.elapsed().as_secs_f64());
    assert_eq!(lp.status, LpStatus::Optimal);
}
