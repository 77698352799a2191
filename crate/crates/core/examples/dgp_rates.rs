//! Print empirical missingness rates of the benchmark generators.

use seqadj::simulate::{gen_setup1, gen_setup2};

fn main() {
    let n = 400_000;
    for theta in [-1.90, -0.90, -0.30] {
        let (ds, _) = gen_setup1(n, theta, 12345);
        let missing = ds.r().iter().filter(|&&r| r == 0).count() as f64 / n as f64;
        println!("setup 1 theta {theta:+.2}: missing {:.4}", missing);
    }
    let (ds, _) = gen_setup2(n, 12345);
    let missing = ds.r().iter().filter(|&&r| r == 0).count() as f64 / n as f64;
    println!("setup 2: missing {:.4}", missing);
}
