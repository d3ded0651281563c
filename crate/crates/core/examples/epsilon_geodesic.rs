//! ε-geodesics shrink onto the exact geodesic as ε → 0.

use minmove::engine::fitted_order;
use minmove::geodesic::{geodesic_epsilon, geodesic_legendre, GeodesicSettings};
use minmove::{FourierMode, SurfaceBackground};

fn main() -> minmove::Result<()> {
    let bg = SurfaceBackground::flat(32)?;
    let phi0 = bg.potential_from_modes(0.0, &[FourierMode::cosine(1, 2e-3)])?;
    let phi1 = bg.potential_from_modes(0.0, &[FourierMode::cosine(2, 1e-3)])?;
    let settings = GeodesicSettings { m_t: 32, ..GeodesicSettings::default() };
    let exact = geodesic_legendre(&bg, &phi0, &phi1, settings.m_t)?;
    let (mut eps, mut gaps) = (Vec::new(), Vec::new());
    for e in [1e-1, 1e-2, 1e-3, 1e-4] {
        let path = geodesic_epsilon(&bg, &phi0, &phi1, e, &settings)?;
        let gap = path
            .slices
            .iter()
            .zip(&exact.slices)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max);
        println!("eps {e:.0e}  drift {:.3e}  sup gap {gap:.3e}", path.energy_drift());
        eps.push(e);
        gaps.push(gap);
    }
    println!("order of the sup gap {:.3}", fitted_order(&eps, &gaps));

    let curved = SurfaceBackground::from_fn("bump", 32, |x| 1.0 + 0.2 * (2.0 * std::f64::consts::PI * x).cos(), |_| -0.5)?;
    let a = curved.potential_from_modes(0.0, &[FourierMode::cosine(1, 2e-3)])?;
    let b = curved.zero();
    let path = geodesic_epsilon(&curved, &a, &b, 1e-3, &settings)?;
    println!("curved background: newton residual {:.3e}, length {:.6e}", path.solver_residual, path.length());
    Ok(())
}
