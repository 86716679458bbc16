use rac_core::pipeline::scenario::{make_instance, synth_fleet, ScenarioConfig};
use rac_core::solver::{iterative_solve, LazyConfig};
use rac_core::uc::RacKind;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

#[test]
#[ignore]
fn probe_scuc_solve_time() {
    let cfg = ScenarioConfig::default();
    let fleet = synth_fleet(&cfg);
    let mut refresh = ChaCha8Rng::seed_from_u64(42);
    let inst = make_instance(&cfg, &fleet, RacKind::DaScuc, 24, 0, 0, 0.0, &mut refresh, None, None);
    let start = Instant::now();
    let r = iterative_solve(&inst, &[], &[], &LazyConfig::default()).unwrap();
    eprintln!(
        "SCUC G=30 T=24: status {:?} obj {:.2} gap {:.5} nodes {} iters {} rounds {} wall {:.2}s",
        r.mip.status,
        r.mip.objective,
        r.mip.gap,
        r.mip.nodes,
        r.mip.simplex_iterations,
        r.mip.rounds.len(),
        start.elapsed().as_secs_f64()
    );
    eprintln!("round trace:");
    for t in &r.mip.rounds {
        eprintln!("  round {} added {} obj {:.2} nodes {} iters {} wall {:.2}s",
            t.round, t.added.len(), t.objective, t.nodes, t.simplex_iterations, t.wall_time);
    }
}
