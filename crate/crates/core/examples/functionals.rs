//! The energy functionals of one potential, and the K-energy along a geodesic.

use minmove::geodesic::legendre_point;
use minmove::kahler::{evaluate_functionals, k_energy, mean_normalize};
use minmove::{FourierMode, SurfaceBackground};

fn main() -> minmove::Result<()> {
    let bg = SurfaceBackground::constant_ricci(64, -0.5)?;
    let phi = bg.potential_from_modes(0.1, &[FourierMode::cosine(1, 3e-3), FourierMode { k: 3, cos: 0.0, sin: 1e-4 }])?;
    let report = evaluate_functionals(&bg, &mean_normalize(&bg, &phi))?;
    print!("{}", report.to_kv_text());
    println!("I_A - 2 J_A = {:.3e}", report.i_a - 2.0 * report.j_a);

    let flat = SurfaceBackground::flat(64)?;
    let p = flat.potential_from_modes(0.0, &[FourierMode::cosine(1, 3e-3)])?;
    let q = flat.potential_from_modes(0.0, &[FourierMode::cosine(2, 1e-3)])?;
    for i in 0..=4 {
        let s = i as f64 / 4.0;
        println!("s = {s:.2}  nu = {:.12e}", k_energy(&flat, &legendre_point(&flat, &p, &q, s)?)?);
    }
    Ok(())
}
