//! Sup of J, I_A, J_A, the entropy and the H¹ seminorm along a flow on a
//! negatively curved background, next to their initial values.

use minmove::engine::energy_bound_diagnostics;
use minmove::reference::{integrate_calabi, PDEConfig};
use minmove::{FourierMode, SurfaceBackground};

fn main() -> minmove::Result<()> {
    let bg = SurfaceBackground::constant_ricci(32, -0.5)?;
    let phi = bg.potential_from_modes(0.0, &[FourierMode::cosine(1, 2e-3), FourierMode::cosine(3, 1e-4)])?;
    let mut cfg = PDEConfig::new(1e-7, 1e-3)?;
    cfg.record_every = 100;
    let traj = integrate_calabi(&bg, &phi, &cfg)?;
    let rep = energy_bound_diagnostics(&bg, &traj.states, 10.0, 1e-12)?;
    for (name, (s, i)) in ["|J|", "I_A", "J_A", "|entropy|", "H1"].iter().zip(rep.sups().iter().zip(rep.initial)) {
        println!("{name:<10} initial {i:.4e}  sup {s:.4e}");
    }
    println!("calabi energy {:.4e} -> {:.4e}", traj.calabi[0], traj.calabi.last().unwrap());
    Ok(())
}
