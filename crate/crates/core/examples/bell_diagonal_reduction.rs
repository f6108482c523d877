//! Reduces a random two-qubit state to Bell-diagonal form and shows what
//! the reduction keeps.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use steerqkd::sampling::random_density;
use steerqkd::steering::{cjwr_f3_optimal, correlation_matrix, symmetrize_to_bell_diagonal};

fn main() -> steerqkd::Result<()> {
    let rho = random_density(4, &mut ChaCha8Rng::seed_from_u64(2024));
    let red = symmetrize_to_bell_diagonal(&rho)?;
    println!("input diagonal correlators      {:?}", correlation_matrix(&rho)?.diagonal());
    println!("symmetrized diagonal correlators {:?}", correlation_matrix(&red.symmetrized)?.diagonal());
    println!("rotation angles (alice, bob)    {:?}", red.rotation);
    println!("Bell weights                    {:?}", red.state.lam());
    println!("residual off-diagonal           {:.2e}", red.residual);
    println!(
        "optimal F3: input {:.9}, symmetrized {:.9}, Bell-diagonal {:.9}",
        cjwr_f3_optimal(&rho)?,
        cjwr_f3_optimal(&red.symmetrized)?,
        cjwr_f3_optimal(&red.density)?
    );
    Ok(())
}
