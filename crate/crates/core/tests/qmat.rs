mod common;

use entrocap::qmat::{
    self, partial_trace, permute_subsystems, purify, sample_isometry, sample_state, CMatrix, CompositeLayout,
    DensityOperator,
};
use entrocap::Error;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sampled_states_are_states(d in 1usize..7, rank_frac in 0.0f64..1.0, seed in any::<u64>()) {
        let rank = 1 + ((d - 1) as f64 * rank_frac) as usize;
        let rho = sample_state(d, rank, seed).unwrap();
        prop_assert!((rho.trace() - 1.0).abs() < 1e-12);
        let spec = common::spectrum(rho.mat());
        prop_assert!(spec.iter().all(|&x| x > -1e-12));
        prop_assert_eq!(spec.iter().filter(|&&x| x > 1e-10).count(), rank);
    }

    #[test]
    fn eigenvalues_match_reference(d in 1usize..9, seed in any::<u64>()) {
        let rho = sample_state(d, d, seed).unwrap();
        let mut reference = common::spectrum(rho.mat());
        reference.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let ours = rho.eigenvalues();
        for (a, b) in ours.iter().zip(&reference) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        let recon = rho.eig().reconstruct();
        prop_assert!(qmat::max_abs(&(recon - rho.mat())) < 1e-12);
    }

    #[test]
    fn partial_trace_matches_loops(da in 1usize..5, db in 1usize..5, seed in any::<u64>()) {
        let rho = sample_state(da * db, da * db, seed).unwrap();
        let layout = CompositeLayout::from_dims(&[da, db]).unwrap();
        let a = partial_trace(rho.mat(), &layout, &[0]).unwrap();
        let b = partial_trace(rho.mat(), &layout, &[1]).unwrap();
        prop_assert!(qmat::max_abs(&(a - common::trace_second(rho.mat(), da, db))) < 1e-13);
        prop_assert!(qmat::max_abs(&(b - common::trace_first(rho.mat(), da, db))) < 1e-13);
    }

    #[test]
    fn swap_then_trace(da in 1usize..4, db in 1usize..4, seed in any::<u64>()) {
        let a = sample_state(da, da, seed).unwrap();
        let b = sample_state(db, db, seed.wrapping_add(1)).unwrap();
        let layout = CompositeLayout::from_dims(&[da, db]).unwrap();
        let (swapped, l2) = permute_subsystems(&qmat::tensor(a.mat(), b.mat()), &layout, &[1, 0]).unwrap();
        prop_assert_eq!(l2.dims(), &[db, da][..]);
        prop_assert!(qmat::max_abs(&(swapped - qmat::tensor(b.mat(), a.mat()))) < 1e-14);
    }

    #[test]
    fn purification_reduces_back(d in 1usize..6, seed in any::<u64>()) {
        let rho = sample_state(d, 1 + (seed % d as u64) as usize, seed).unwrap();
        let p = purify(&rho);
        let m = p.as_bipartite_matrix();
        prop_assert!(qmat::max_abs(&(&m * m.adjoint() - rho.mat())) < 1e-12);
        prop_assert!((p.vec().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn isometries_are_isometric(d_in in 1usize..5, extra in 0usize..4, seed in any::<u64>()) {
        let v = sample_isometry(d_in, d_in + extra, seed).unwrap();
        prop_assert!(qmat::max_abs(&(v.adjoint() * &v - qmat::identity(d_in))) < 1e-12);
    }
}

#[test]
fn density_operator_rejects_bad_input() {
    let not_hermitian = CMatrix::from_row_slice(2, 2, &[qmat::r(1.0), qmat::r(1.0), qmat::r(0.0), qmat::r(0.0)]);
    assert!(matches!(DensityOperator::new(not_hermitian), Err(Error::Invariant(_))));
    let negative = qmat::diag_real(&[1.5, -0.5]);
    assert!(matches!(DensityOperator::new(negative), Err(Error::Invariant(_))));
    let wrong_trace = qmat::diag_real(&[0.5, 0.25]);
    assert!(matches!(DensityOperator::new(wrong_trace), Err(Error::Invariant(_))));
}

#[test]
fn sampling_is_reproducible() {
    assert_eq!(sample_state(4, 2, 99).unwrap(), sample_state(4, 2, 99).unwrap());
    assert_ne!(sample_state(4, 2, 99).unwrap(), sample_state(4, 2, 100).unwrap());
}
