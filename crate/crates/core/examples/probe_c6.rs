use slfv_core::env::{Coupling, Environment, Regime, ZLaw};
use slfv_core::hamiltonian::{eigenpairs, Hamiltonian};
use slfv_core::TorusGrid;

fn main() {
    let regime = Regime::WhiteNoise { law: ZLaw::Rademacher, coupling: Coupling::Hierarchical };
    let mut monotone = 0;
    let mut positive = 0;
    let mut total_runs = 0;
    for seed in 0..20u64 {
        let mut lams = Vec::new();
        for n in [8usize, 16, 32, 64] {
            let g = TorusGrid::new(1, n, 8).unwrap();
            let env = Environment::sample(g, &regime, seed, 0.0).unwrap();
            let h = Hamiltonian::from_env(&env);
            let basis = eigenpairs(&h, 1, 1e-8).unwrap();
            lams.push(basis.pairs[0].value);
            if basis.pairs[0].min_value > 0.0 {
                positive += 1;
            }
            total_runs += 1;
        }
        let d: Vec<f64> = lams.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        let mono = d[0] > d[1] && d[1] > d[2];
        if mono {
            monotone += 1;
        }
        println!(
            "seed {seed:2}: lam = [{:+.4} {:+.4} {:+.4} {:+.4}] diffs = [{:.4} {:.4} {:.4}] {}",
            lams[0], lams[1], lams[2], lams[3], d[0], d[1], d[2], if mono { "MONO" } else { "----" }
        );
    }
    println!("monotone: {monotone}/20, positive principal: {positive}/{total_runs}");
}
