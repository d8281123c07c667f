mod common;

use common::{kron, min_pt_eigenvalue, M};
use sepent::breaking::{eb_threshold_scan, maximally_entangled, r_peb_test, schmidt_rank, PebOptions, ScanOptions, ThresholdStatus, Verdict};
use sepent::channels::families;
use sepent::state::named;

/// `(Λ⊗I)(|Φ⁺⟩⟨Φ⁺|)` from the Kraus operators of a qubit channel.
fn choi(ops: &[M]) -> M {
    let phi = common::rank_one(maximally_entangled(2).amps().as_slice());
    let id = M::identity(2, 2);
    ops.iter().map(|k| {
        let big = kron(k, &id);
        &big * &phi * big.adjoint()
    }).fold(M::zeros(4, 4), |acc, x| acc + x)
}

#[test]
fn depolarizing_verdicts_follow_partial_transpose_of_choi_state() {
    let opts = PebOptions { probes: 5, ..PebOptions::default() };
    for i in 0..=20 {
        let p = i as f64 / 20.0;
        let ch = families::depolarizing(p).unwrap();
        let breaks = min_pt_eigenvalue(&choi(ch.ops())) >= -1e-12;
        let rep = r_peb_test(&ch, 1, &opts).unwrap();
        assert_eq!(rep.verdict == Verdict::Breaks, breaks, "p = {p}");
        assert!(rep.agreement());
    }
}

#[test]
fn threshold_scan_finds_two_thirds() {
    let rep = eb_threshold_scan(families::depolarizing, 1, &ScanOptions::default()).unwrap();
    assert_eq!(rep.status, ThresholdStatus::Found);
    assert!((rep.threshold.unwrap() - 2.0 / 3.0).abs() < 1e-3);
}

#[test]
fn schmidt_ranks_of_named_states() {
    assert_eq!(schmidt_rank(&named::bell(), &[0], 1e-10).unwrap(), 2);
    assert_eq!(schmidt_rank(&maximally_entangled(3), &[0], 1e-10).unwrap(), 3);
    assert_eq!(schmidt_rank(&named::ghz(3).unwrap(), &[0], 1e-10).unwrap(), 2);
}
