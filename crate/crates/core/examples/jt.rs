fn main() {
    // compare hankel branch against the quadrature at the switch region
    for z in [47.0f64, 48.0, 49.0, 60.0, 100.0, 200.0, 500.0] {
        let v = slfv_core::spectral::bessel_j1(z);
        println!("{z}: {v:.16e}");
    }
}
