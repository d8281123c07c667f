//! Entanglement resilience factor: the smallest decay factor over all
//! separable Kraus representations of a channel.

use sepent::channels::{families, embed_one_sided};
use sepent::erf::{erf_minimize, one_sided_qubit_erf, tensor_bound_check, MixingSearchOptions};
use sepent::measures::{MeasureKind, RoofOptions};
use sepent::random::random_pure_state;
use sepent::state::named;
use sepent::{LocalDims, RandomStream};

fn main() -> sepent::Result<()> {
    let opts = MixingSearchOptions::default();
    let bitflip = families::bit_flip_correlated(0.3)?;
    let est = erf_minimize(&bitflip, &opts)?;
    println!("bit-flip: ERF {:.12}, nontrivial alternatives {}", est.value, est.nontrivial_alternatives().count());

    let mut rng = RandomStream::new(5, 0);
    let qubits = LocalDims::qubits(2);
    let channel = families::random_separable(&qubits, 3, &mut rng)?;
    let est = erf_minimize(&channel, &MixingSearchOptions { seed: 5, ..opts.clone() })?;
    let est = est.with_bounds(&channel, random_pure_state(&qubits, &mut rng).into(), &MeasureKind::Concurrence, &RoofOptions::default())?;
    let b = est.bounds.as_ref().expect("bounds requested");
    println!(
        "random channel: decay of given representation {:.6}, searched ERF {:.6}, residual {:.1e}",
        est.start_value, est.value, est.separability_residual
    );
    println!("  bounds: {:.6} ≤ {:.6} ≤ {:.6}", b.lower, est.value, b.upper);

    // amplitude damping on one qubit: closed form from the determinant form
    let damping = families::amplitude_damping(0.4)?;
    let closed = one_sided_qubit_erf(damping.ops())?;
    let searched = erf_minimize(&embed_one_sided(damping.ops(), 0, &qubits)?, &MixingSearchOptions { extra_operators: 1, ..opts.clone() })?;
    println!("amplitude damping γ=0.4: closed form {closed:.8} search {:.8}", searched.value);

    let rep = tensor_bound_check(&[families::depolarizing(0.3)?, damping], &MixingSearchOptions { restarts: 3, ..opts })?;
    println!("tensor bound: joint {:.6} ≤ product {:.6}: {}", rep.joint.value, rep.product, rep.holds);

    let bell_ratio = sepent::erf::erf_bounds(&bitflip, &named::bell().into(), &MeasureKind::Concurrence, &RoofOptions::default())?;
    println!("bit-flip on Bell: output/input = {:.12}", bell_ratio.lower);
    Ok(())
}
