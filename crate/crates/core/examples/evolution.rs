//! The determinant-product law: under a separable channel every outcome
//! carries entanglement `|det K_m^(1)|^(2/d1)···E(ψ)`, so the average
//! output entanglement is `decay_factor · E(ψ)` for any input.

use sepent::channels::{families, verify_evolution};
use sepent::measures::{MeasureKind, RoofOptions};
use sepent::random::{random_density, random_pure_state};
use sepent::state::named;
use sepent::{LocalDims, RandomStream, State};

fn main() -> sepent::Result<()> {
    let roof = RoofOptions::default();
    let bitflip = families::bit_flip_correlated(0.3)?;
    let rep = verify_evolution(&bitflip, &named::bell().into(), &MeasureKind::Concurrence, &roof)?;
    println!("bit-flip on Bell: decay {:.6} ratio {:.12} output {:?}", rep.decay, rep.ratio, rep.output_entanglement);

    let mut rng = RandomStream::new(11, 0);
    let qubits = LocalDims::qubits(2);
    let channel = families::random_separable(&qubits, 4, &mut rng)?;
    println!("random separable channel, decay factor {:.6}", channel.decay_factor());
    for trial in 0..3 {
        let input: State = if trial < 2 { random_pure_state(&qubits, &mut rng).into() } else { random_density(&qubits, 3, &mut rng)?.into() };
        let rep = verify_evolution(&channel, &input, &MeasureKind::Concurrence, &roof)?;
        println!(
            "  input E {:.6} -> average {:.6}  ratio {:.12}  per-outcome residual {:.1e}  aggregate {:.1e}",
            rep.input_entanglement,
            rep.average_output,
            rep.ratio,
            rep.max_outcome_residual(),
            rep.aggregate_residual
        );
    }

    // three qubits, a channel on one party
    let three = LocalDims::qubits(3);
    let one_sided = families::random_one_sided(&three, 1, 3, &mut rng)?;
    let psi = random_pure_state(&three, &mut rng);
    let rep = verify_evolution(&one_sided, &psi.into(), &MeasureKind::SqrtThreeTangle, &roof)?;
    println!("one-sided on 3 qubits: decay {:.6} ratio {:.12} residual {:.1e}", rep.decay, rep.ratio, rep.max_outcome_residual());
    Ok(())
}
