mod common;

use common::{concurrence_from_purity, pure_concurrence, sqrt_three_tangle, wootters};
use proptest::prelude::*;
use sepent::linalg::kron_all;
use sepent::measures::{convex_roof, g_concurrence_direct, measure_pure, wootters_concurrence, MeasureKind, RoofOptions};
use sepent::random::{random_density, random_local_sl, random_pure_state};
use sepent::state::named;
use sepent::{LocalDims, PureState, RandomStream};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn concurrence_matches_reference(seed: u64) {
        let psi = random_pure_state(&LocalDims::qubits(2), &mut RandomStream::new(seed, 0));
        let a = psi.amps().as_slice();
        let c = measure_pure(&MeasureKind::Concurrence, &psi).unwrap();
        prop_assert!((c - pure_concurrence(a)).abs() < 1e-12);
        prop_assert!((c - concurrence_from_purity(a)).abs() < 1e-7);
    }

    #[test]
    fn three_tangle_matches_reference(seed: u64) {
        let psi = random_pure_state(&LocalDims::qubits(3), &mut RandomStream::new(seed, 0));
        let t = measure_pure(&MeasureKind::SqrtThreeTangle, &psi).unwrap();
        prop_assert!((t - sqrt_three_tangle(psi.amps().as_slice())).abs() < 1e-12);
    }

    #[test]
    fn sl_invariance_of_pure_measures(seed: u64, which in 0usize..4) {
        let (kind, dims) = match which {
            0 => (MeasureKind::Concurrence, LocalDims::qubits(2)),
            1 => (MeasureKind::SqrtThreeTangle, LocalDims::qubits(3)),
            2 => (MeasureKind::GConcurrence(3), LocalDims::new(vec![3, 3]).unwrap()),
            _ => (MeasureKind::GConcurrence(4), LocalDims::new(vec![4, 4]).unwrap()),
        };
        let mut rng = RandomStream::new(seed, 1);
        let psi = random_pure_state(&dims, &mut rng);
        let g = kron_all(&random_local_sl(&dims, &mut rng).unwrap()).unwrap();
        let (moved, norm_sq) = PureState::from_unnormalized(&g * psi.amps(), dims).unwrap();
        let before = measure_pure(&kind, &psi).unwrap();
        let after = norm_sq * measure_pure(&kind, &moved).unwrap();
        prop_assert!((after - before).abs() <= 1e-8 * before.max(1e-3), "{before} vs {after}");
    }

    #[test]
    fn g_concurrence_paths_agree(seed: u64, d in 2usize..5) {
        let psi = random_pure_state(&LocalDims::new(vec![d, d]).unwrap(), &mut RandomStream::new(seed, 0));
        let a = measure_pure(&MeasureKind::GConcurrence(d), &psi).unwrap();
        prop_assert!((a - g_concurrence_direct(&psi).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn wootters_matches_reference(seed: u64, rank in 1usize..5) {
        let rho = random_density(&LocalDims::qubits(2), rank, &mut RandomStream::new(seed, 0)).unwrap();
        prop_assert!((wootters_concurrence(&rho).unwrap() - wootters(rho.matrix())).abs() < 1e-7);
    }

    #[test]
    fn entangled_iff_partial_transpose_is_negative(seed: u64, rank in 2usize..5) {
        let rho = random_density(&LocalDims::qubits(2), rank, &mut RandomStream::new(seed, 0)).unwrap();
        let c = wootters_concurrence(&rho).unwrap();
        let neg = common::min_pt_eigenvalue(rho.matrix());
        // skip draws within rounding of the boundary
        prop_assume!(c > 1e-6 || neg > -1e-9);
        prop_assert_eq!(c > 1e-6, neg < 0.0, "C = {}, min PT eigenvalue = {}", c, neg);
    }
}

#[test]
fn named_state_values() {
    assert!((measure_pure(&MeasureKind::Concurrence, &named::bell()).unwrap() - 1.0).abs() < 1e-12);
    assert!((measure_pure(&MeasureKind::SqrtThreeTangle, &named::ghz(3).unwrap()).unwrap() - 1.0).abs() < 1e-12);
    assert!(measure_pure(&MeasureKind::SqrtThreeTangle, &named::w_state(3).unwrap()).unwrap() < 1e-12);
    for p in [0.0, 0.3, 0.5, 0.8, 1.0] {
        let c = wootters_concurrence(&named::werner(p).unwrap()).unwrap();
        assert!((c - ((3.0 * p - 1.0) / 2.0).max(0.0)).abs() < 1e-12, "p = {p}: {c}");
    }
}

#[test]
fn roof_never_undercuts_closed_form() {
    let mut rng = RandomStream::new(99, 0);
    for k in 0..6 {
        let rho = random_density(&LocalDims::qubits(2), 2 + k % 3, &mut rng).unwrap();
        let res = convex_roof(&MeasureKind::Concurrence, &rho, &RoofOptions { seed: k as u64, ..RoofOptions::default() }).unwrap();
        let exact = wootters(rho.matrix());
        assert!(res.value >= exact - 1e-9, "roof {} below closed form {exact}", res.value);
        assert!(res.value - exact < 1e-4);
        assert!((res.reconstruct() - rho.matrix()).norm() < 1e-10);
    }
}
