//! `W_{t/n}^n(φ0)` for doubling `n`: successive distances halve.

use minmove::{mayer_limit, FourierMode, KahlerSpace, ResolventConfig, SurfaceBackground};

fn main() -> minmove::Result<()> {
    let space = KahlerSpace::new(SurfaceBackground::flat(32)?);
    let phi = space.background().potential_from_modes(0.0, &[FourierMode::cosine(1, 1e-3)])?;
    let t = 1e-4;
    let levels = mayer_limit(&space, &phi, t, &[2, 4, 8, 16, 32, 64], &ResolventConfig::new(t / 2.0)?)?;
    for l in &levels {
        match l.next_distance {
            Some(d) => println!("n = {:>3}  nu = {:.12e}  d(next) = {d:.3e}", l.n, l.energy),
            None => println!("n = {:>3}  nu = {:.12e}", l.n, l.energy),
        }
    }
    Ok(())
}
