//! Mayer iterates `W_{t/n}^n(x0)` for `f(x) = x²/2` against `e^{-t} x0`.

use minmove::engine::fitted_order;
use minmove::euclid::{euclid_mayer_iterate, QuadraticFunctional};
use nalgebra::DVector;

fn main() -> minmove::Result<()> {
    let f = QuadraticFunctional::scalar(1.0)?;
    let x0 = DVector::from_element(1, 1.0);
    let exact = f.exact_flow(&x0, 1.0)[0];
    let (mut taus, mut errs) = (Vec::new(), Vec::new());
    println!("{:>5} {:>22} {:>12}", "n", "iterate", "error");
    for k in 1..=8 {
        let n = 1usize << k;
        let x = euclid_mayer_iterate(&f, &x0, 1.0, n)?[0];
        println!("{n:>5} {x:>22.16} {:>12.3e}", (x - exact).abs());
        taus.push(1.0 / n as f64);
        errs.push((x - exact).abs());
    }
    println!("fitted order {:.4}", fitted_order(&taus, &errs));
    Ok(())
}
