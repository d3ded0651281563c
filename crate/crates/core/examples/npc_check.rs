//! Triangle and quadrilateral comparison residuals for random potentials on
//! the flat background. Negative residuals mean the inequality holds with room.

use minmove::space::{check_npc_triangle, check_quadrilateral};
use minmove::{KahlerSpace, RandomPoints, SurfaceBackground};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> minmove::Result<()> {
    let space = KahlerSpace::new(SurfaceBackground::flat(64)?);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_tri = f64::NEG_INFINITY;
    let mut worst_quad = f64::NEG_INFINITY;
    for _ in 0..20 {
        let [a, b, c, d] = std::array::from_fn(|_| space.random_point(&mut rng));
        worst_tri = worst_tri.max(check_npc_triangle(&space, &a, &b, &c, 11)?);
        worst_quad = worst_quad.max(check_quadrilateral(&space, &a, &b, &c, &d, 11)?);
    }
    println!("worst triangle residual      {worst_tri:.3e}");
    println!("worst quadrilateral residual {worst_quad:.3e}");
    Ok(())
}
