//! One resolvent step on the flat background, certified by random probes
//! and restarts from perturbed points.

use minmove::kahler::calabi_energy;
use minmove::{resolvent, FourierMode, KahlerSpace, MetricSpace, ResolventConfig, SurfaceBackground};

fn main() -> minmove::Result<()> {
    let space = KahlerSpace::new(SurfaceBackground::flat(32)?);
    let bg = space.background();
    let phi = bg.potential_from_modes(0.0, &[FourierMode::cosine(1, 1e-3), FourierMode::cosine(2, 2e-4)])?;
    let mut cfg = ResolventConfig::new(1e-5)?;
    cfg.probes = 50;
    cfg.verify_uniqueness = true;
    let out = resolvent(&space, &phi, &cfg)?;
    println!("iterations         {}", out.iterations);
    println!("objective          {:.12e} (anchor {:.12e})", out.objective, out.anchor_objective);
    println!("euler-lagrange     {:.3e}", out.euler_lagrange);
    println!("optimality margin  {:?}", out.optimality_margin);
    println!("uniqueness spread  {:?}", out.uniqueness_spread);
    println!("verified           {}", out.verified());
    let d = space.distance(&phi, &out.point)?;
    println!("step distance / tau  {:.6e}", d / cfg.tau);
    println!("sqrt(calabi energy)  {:.6e}", calabi_energy(bg, &phi)?.sqrt());
    Ok(())
}
