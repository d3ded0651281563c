//! Exact geodesic between two potentials on the flat background: constant
//! energy element, length equal to the distance, and the endpoint velocity.

use minmove::geodesic::{geodesic_legendre, legendre_distance, legendre_endpoint_velocity};
use minmove::{FourierMode, SurfaceBackground};

fn main() -> minmove::Result<()> {
    let bg = SurfaceBackground::flat(64)?;
    let phi0 = bg.potential_from_modes(0.0, &[FourierMode::cosine(1, 2e-3)])?;
    let phi1 = bg.potential_from_modes(0.0, &[FourierMode { k: 2, cos: 0.0, sin: 1e-3 }])?;
    let path = geodesic_legendre(&bg, &phi0, &phi1, 32)?;
    let d = legendre_distance(&bg, &phi0, &phi1)?;
    println!("distance        {d:.12e}");
    println!("length          {:.12e}", path.length());
    println!("energy drift    {:.3e}", path.energy_drift());
    for m in [0, 8, 16, 24, 32] {
        println!("t = {:.3}  E = {:.12e}", path.times[m], path.energy[m]);
    }
    let end = legendre_endpoint_velocity(&bg, &phi0, &phi1)?;
    let sup = end.velocity.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    println!("sup |velocity at t = 1| {sup:.6e}");
    Ok(())
}
