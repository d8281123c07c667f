mod common;

use common::{decay_factor, pure_concurrence, wootters, M};
use proptest::prelude::*;
use sepent::channels::{families, tensor_channels, verify_evolution, SeparableChannel};
use sepent::measures::{MeasureKind, RoofOptions};
use sepent::random::{random_density, random_pure_state};
use sepent::state::named;
use sepent::{LocalDims, RandomStream, State};

fn factors(ch: &SeparableChannel) -> Vec<Vec<M>> {
    ch.ops().iter().map(|op| op.factors.clone()).collect()
}

fn dims_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop_oneof![Just(vec![2, 2]), Just(vec![2, 3]), Just(vec![3, 3]), Just(vec![2, 2, 2])]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn decay_factor_is_at_most_one(seed: u64, dims in dims_strategy(), count in 1usize..7) {
        let dims = LocalDims::new(dims).unwrap();
        let ch = families::random_separable(&dims, count, &mut RandomStream::new(seed, 0)).unwrap();
        prop_assert!(ch.diagnostics().closure_residual < 1e-10);
        let reference = decay_factor(&factors(&ch));
        prop_assert!((ch.decay_factor() - reference).abs() < 1e-10);
        prop_assert!(reference <= 1.0 + 1e-10);
        prop_assert_eq!(ch.is_random_unitary(1e-10), (reference - 1.0).abs() < 1e-10);
    }

    #[test]
    fn random_unitary_channels_have_unit_decay(seed: u64, dims in dims_strategy(), count in 1usize..6) {
        let dims = LocalDims::new(dims).unwrap();
        let ch = families::random_unitary_separable(&dims, count, &mut RandomStream::new(seed, 0)).unwrap();
        prop_assert!((decay_factor(&factors(&ch)) - 1.0).abs() < 1e-10);
        prop_assert!(ch.is_random_unitary(1e-10));
    }

    #[test]
    fn per_outcome_identity_on_two_qubit_pure_states(seed: u64, count in 2usize..7) {
        let mut rng = RandomStream::new(seed, 0);
        let dims = LocalDims::qubits(2);
        let ch = families::random_separable(&dims, count, &mut rng).unwrap();
        let psi = random_pure_state(&dims, &mut rng);
        let c_in = pure_concurrence(psi.amps().as_slice());
        let rep = verify_evolution(&ch, &psi.clone().into(), &MeasureKind::Concurrence, &RoofOptions::default()).unwrap();
        for (m, op) in ch.ops().iter().enumerate() {
            let out = op.full() * psi.amps();
            let weight = common::det2(&op.factors[0]).norm() * common::det2(&op.factors[1]).norm();
            let residual = (pure_concurrence(out.as_slice()) - weight * c_in).abs();
            prop_assert!(residual < 1e-12);
            prop_assert!((rep.outcome_residuals[m] - residual).abs() < 1e-12);
        }
        prop_assert!((rep.ratio - decay_factor(&factors(&ch))).abs() < 1e-9);
    }

    #[test]
    fn aggregate_identity_on_mixed_states(seed: u64, count in 2usize..7, rank in 1usize..5) {
        let mut rng = RandomStream::new(seed, 0);
        let dims = LocalDims::qubits(2);
        let ch = families::random_separable(&dims, count, &mut rng).unwrap();
        let rho = random_density(&dims, rank, &mut rng).unwrap();
        let c_in = wootters(rho.matrix());
        let average: f64 = ch.full_kraus().iter().map(|k| wootters(&(k * rho.matrix() * k.adjoint()))).sum();
        prop_assert!((average - decay_factor(&factors(&ch)) * c_in).abs() < 1e-7);
    }

    #[test]
    fn outcome_probabilities_sum_to_one(seed: u64, dims in dims_strategy(), count in 1usize..6) {
        let mut rng = RandomStream::new(seed, 0);
        let dims = LocalDims::new(dims).unwrap();
        let ch = families::random_separable(&dims, count, &mut rng).unwrap();
        let rho = random_density(&dims, 2, &mut rng).unwrap();
        prop_assert!((ch.outcomes(&rho).unwrap().total_probability() - 1.0).abs() < 1e-12);
        prop_assert!((ch.apply(&rho).unwrap().trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn decay_factor_multiplies_over_tensor_products(seed: u64, a in 1usize..4, b in 1usize..4) {
        let mut rng = RandomStream::new(seed, 0);
        let x = families::random_local_channel(2, a, &mut rng).unwrap();
        let y = families::random_local_channel(3, b, &mut rng).unwrap();
        let joint = tensor_channels(&[x.clone(), y.clone()]).unwrap();
        prop_assert!((joint.decay_factor() - x.decay_factor() * y.decay_factor()).abs() < 1e-12);
    }
}

#[test]
fn bit_flip_preserves_bell_but_not_generic_states() {
    let ch = families::bit_flip_correlated(0.3).unwrap();
    assert!((decay_factor(&factors(&ch)) - 1.0).abs() < 1e-12);
    let bell = named::bell();
    let out = ch.apply(&bell.to_density()).unwrap();
    assert!((wootters(out.matrix()) - 1.0).abs() < 1e-12);

    let mut rng = RandomStream::new(4, 0);
    for _ in 0..20 {
        let psi = random_pure_state(&LocalDims::qubits(2), &mut rng);
        let c_in = pure_concurrence(psi.amps().as_slice());
        let c_out = wootters(ch.apply(&psi.to_density()).unwrap().matrix());
        assert!(c_out / c_in < 1.0 - 1e-6, "{c_out} / {c_in}");
    }
}

#[test]
fn state_and_channel_dimensions_must_agree() {
    let ch = families::bit_flip_correlated(0.2).unwrap();
    let psi: State = random_pure_state(&LocalDims::new(vec![2, 3]).unwrap(), &mut RandomStream::new(0, 0)).into();
    assert!(matches!(
        verify_evolution(&ch, &psi, &MeasureKind::Concurrence, &RoofOptions::default()),
        Err(sepent::Error::DimensionMismatch { .. })
    ));
}
