fn main() {

    for o in slfv_core::checks::run_fast_checks() {
        println!("{}", o.line());
    }
}
