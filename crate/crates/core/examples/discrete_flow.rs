//! A discrete Calabi flow trace and its flow-map properties.

use minmove::engine::{distance_control_margin, flow_properties, FlowPropertySettings};
use minmove::{discrete_flow, FourierMode, KahlerSpace, ResolventConfig, SurfaceBackground};

fn main() -> minmove::Result<()> {
    let space = KahlerSpace::new(SurfaceBackground::flat(32)?);
    let bg = space.background();
    let phi = bg.potential_from_modes(0.0, &[FourierMode::cosine(1, 1e-3)])?;
    let psi = bg.potential_from_modes(0.0, &[FourierMode { k: 2, cos: 0.0, sin: 5e-4 }])?;
    let cfg = ResolventConfig::new(1e-5)?;
    let trace = discrete_flow(&space, &phi, &cfg, 10)?;
    for (t, e) in trace.times.iter().zip(&trace.energies) {
        println!("t = {t:.1e}  nu = {e:.12e}");
    }
    let (margin, slack) = distance_control_margin(&space, &trace)?;
    println!("distance control margin {margin:.3e} (slack {slack:.1e})");

    let grid = (0..4).map(|k| (1 << k) as f64 * cfg.tau).collect();
    let report = flow_properties(&space, &phi, &psi, &FlowPropertySettings::new(cfg, grid))?;
    for e in &report.entries {
        println!("{:<24} {:>12.4e}  {}", e.name, e.value, if e.passed { "ok" } else { "FAILED" });
    }
    Ok(())
}
