//! Convex-roof concurrence of mixed two-qubit states, checked against the
//! Wootters closed form.

use sepent::measures::{convex_roof, wootters_concurrence, MeasureKind, RoofOptions};
use sepent::random::random_density;
use sepent::state::named;
use sepent::{LocalDims, RandomStream};

fn main() -> sepent::Result<()> {
    let opts = RoofOptions::default();
    for p in [0.2, 1.0 / 3.0, 0.6, 0.9] {
        let rho = named::werner(p)?;
        let roof = convex_roof(&MeasureKind::Concurrence, &rho, &opts)?;
        println!("werner p={p:.3}: roof {:.8}  closed form {:.8}  (3p-1)/2 = {:.8}", roof.value, wootters_concurrence(&rho)?, ((3.0 * p - 1.0) / 2.0).max(0.0));
    }

    let mut rng = RandomStream::new(3, 0);
    let dims = LocalDims::qubits(2);
    for rank in 2..=4 {
        let rho = random_density(&dims, rank, &mut rng)?;
        let roof = convex_roof(&MeasureKind::Concurrence, &rho, &RoofOptions { seed: rank as u64, ..opts.clone() })?;
        println!(
            "random rank {rank}: roof {:.8} closed form {:.8} ensemble {} converged {}",
            roof.value,
            wootters_concurrence(&rho)?,
            roof.ensemble.len(),
            roof.converged
        );
    }
    Ok(())
}
