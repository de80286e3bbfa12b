use slfv_core::checks::*;

fn main() {
    let arg = std::env::args().nth(1).unwrap_or_default();
    match arg.as_str() {
        "renorm" => println!("{}", check_renormalization(200).line()),
        "eigen" => println!("{}", check_eigen_convergence(8).line()),
        "mart" => println!("{}", check_slfv_martingale(2000).line()),
        "dual" => println!("{}", check_laplace_duality(400).line()),
        "fkpp" => println!("{}", check_fkpp_limit(4, 200).line()),
        _ => eprintln!("usage: probe_mc renorm|eigen|mart|dual|fkpp"),
    }
}
