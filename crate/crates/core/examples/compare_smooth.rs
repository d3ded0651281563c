//! Discrete flows with halving steps against the direct Calabi flow solver.

use minmove::reference::{compare_discrete_to_smooth, halving_schedule};
use minmove::{FourierMode, KahlerSpace, ResolventConfig, SurfaceBackground};

fn main() -> minmove::Result<()> {
    let space = KahlerSpace::new(SurfaceBackground::flat(32)?);
    let phi = space.background().potential_from_modes(0.0, &[FourierMode::cosine(1, 1e-3)])?;
    let t_end = 1e-4;
    let schedule = halving_schedule(t_end, 8);
    let finest = *schedule.last().unwrap();
    let table = compare_discrete_to_smooth(&space, &phi, t_end, &schedule, &ResolventConfig::new(schedule[0])?, finest / 512.0)?;
    println!("{:>12} {:>6} {:>12} {:>12}", "tau", "steps", "sup error", "coherence");
    for r in &table.rows {
        println!("{:>12.4e} {:>6} {:>12.4e} {:>12.4e}", r.tau, r.steps, r.sup_error, r.coherence);
    }
    println!("fitted order {:.3}, monotone {}", table.fitted_order, table.monotone);
    Ok(())
}
