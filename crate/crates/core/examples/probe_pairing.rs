use slfv_core::env::{Coupling, Environment, Regime, ZLaw};
use slfv_core::{Field, TorusGrid};
use std::f64::consts::PI;

fn main() {
    let regime = Regime::WhiteNoise { law: ZLaw::Rademacher, coupling: Coupling::Hierarchical };
    for seed in 0..6u64 {
        print!("seed {seed}:");
        for n in [8usize, 16, 32, 64, 128] {
            let g = TorusGrid::new(1, n, 8).unwrap();
            let env = Environment::sample(g, &regime, seed, 0.0).unwrap();
            let test = Field::from_fn(g, |x| (2.0 * PI * x[0]).sin() + 0.5 * (4.0 * PI * x[0]).cos());
            print!("  {:+.4}", env.xi().inner(&test));
        }
        println!();
    }
}
