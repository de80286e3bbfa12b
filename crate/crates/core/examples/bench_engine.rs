use slfv_core::env::{Coupling, Environment, Regime, ZLaw};
use slfv_core::slfv::*;
use slfv_core::{Field, TorusGrid};
use std::time::Instant;

fn main() {
    let g = TorusGrid::new(1, 32, 8).unwrap();
    let env = Environment::sample(
        g,
        &Regime::WhiteNoise { law: ZLaw::Rademacher, coupling: Coupling::Independent },
        1,
        0.0,
    )
    .unwrap();
    let regime = ScalingRegime::sparse(1, 32, 2.0).unwrap();
    println!("rate = {:.3e}/unit time", regime.time_factor());
    let phi = Field::constant(g, 1.0);
    for (backend, t, label) in [
        (BackendChoice::Direct, 0.01, "direct"),
        (BackendChoice::Lazy, 0.01, "lazy"),
        (BackendChoice::Lazy, 0.1, "lazy"),
    ] {
        let mut spec = SimulationSpec::new(regime, t, 5);
        spec.initial = InitialCondition::SparseUniform;
        spec.backend = backend;
        let start = Instant::now();
        let (path, _) = simulate(&env, &spec, &[phi.clone()]).unwrap();
        let el = start.elapsed().as_secs_f64();
        println!(
            "{label:7} T={t}: {:.3e} events in {:.2}s  -> {:.1} ns/event   mass obs: {:.4}",
            path.total_events as f64,
            el,
            el / path.total_events as f64 * 1e9,
            path.measure_observable(4, 0),
        );
    }
}
