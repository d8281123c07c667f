//! Pure-state SL-invariant measures on named and random states, and their
//! invariance under determinant-one local maps.

use sepent::measures::{measure_pure, MeasureKind};
use sepent::random::{random_local_sl, random_pure_state};
use sepent::state::named;
use sepent::{linalg, LocalDims, PureState, RandomStream};

fn main() -> sepent::Result<()> {
    let bell = named::bell();
    let ghz = named::ghz(3)?;
    let w = named::w_state(3)?;
    println!("concurrence(Bell)       = {:.6}", measure_pure(&MeasureKind::Concurrence, &bell)?);
    println!("g_concurrence:2(Bell)   = {:.6}", measure_pure(&MeasureKind::GConcurrence(2), &bell)?);
    println!("sqrt_three_tangle(GHZ)  = {:.6}", measure_pure(&MeasureKind::SqrtThreeTangle, &ghz)?);
    println!("sqrt_three_tangle(W)    = {:.6}", measure_pure(&MeasureKind::SqrtThreeTangle, &w)?);

    // G-concurrence of a random 3⊗3 state
    let mut rng = RandomStream::new(7, 0);
    let dims = LocalDims::new(vec![3, 3])?;
    let psi = random_pure_state(&dims, &mut rng);
    println!("g_concurrence:3(random) = {:.6}", measure_pure(&MeasureKind::GConcurrence(3), &psi)?);

    // E((A⊗B)ψ) = ‖(A⊗B)ψ‖² E(ψ/‖·‖) when det A = det B = 1, for degree-2 measures
    let qubits = LocalDims::qubits(2);
    let psi = random_pure_state(&qubits, &mut rng);
    let g = linalg::kron_all(&random_local_sl(&qubits, &mut rng)?)?;
    let (phi, norm_sq) = PureState::from_unnormalized(&g * psi.amps(), qubits)?;
    let before = measure_pure(&MeasureKind::Concurrence, &psi)?;
    let after = norm_sq * measure_pure(&MeasureKind::Concurrence, &phi)?;
    println!("SL invariance: C(ψ) = {before:.12}, ‖gψ‖²·C(gψ/‖gψ‖) = {after:.12}");
    Ok(())
}
