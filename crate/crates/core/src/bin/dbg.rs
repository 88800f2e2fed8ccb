fn main() {
    use sqfn::field::{make_field, GridSpec};
    use sqfn::convolve::ball_average;
    let g = GridSpec::new(2, 16, 1.0).unwrap();
    let c = make_field(g, |_| 3.7).unwrap();
    let out = ball_average(&c, 0.2).unwrap();
    let bad: Vec<(usize, f64)> = out.values().iter().enumerate()
        .filter(|(_, &v)| v != 3.7).map(|(i, &v)| (i, v - 3.7)).take(5).collect();
    println!("bad: {bad:?}  mean exact? {}", c.mean() == 3.7);

    // symbol check
    for x in [0.3_f64, 5.9, 6.1, 9.0, 40.0] {
        let s2 = sqfn::kernels::ball_fourier_symbol(2, x).unwrap();
        let r2 = 2.0 * libm::j1(x) / x;
        let s3 = sqfn::kernels::ball_fourier_symbol(3, x).unwrap();
        let r3 = 3.0 * (x.sin() - x * x.cos()) / (x * x * x);
        println!("x={x}: n2 diff={:.3e} n3 diff={:.3e}", s2 - r2, s3 - r3);
    }

    // table vs direct
    let table = sqfn::kernels::SmoothedRieszTable::new(1.5, 2).unwrap();
    for r in [2e-4_f64, 0.013, 0.49, 0.93, 1.002, 2.9, 9.4, 15.0] {
        let direct = sqfn::kernels::smoothed_riesz_at(1.5, 2, r, 1e-10).unwrap();
        let interp = table.eval(r);
        println!("r={r}: rel err {:.3e}", (direct - interp).abs() / direct.abs());
    }
}
