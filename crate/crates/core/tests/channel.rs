mod common;

use entrocap::channel::{cq_channel, is_cq, is_cq_discrete, CpMap, KrausChannel, CQ_TOL};
use entrocap::qmat::{self, c, gaussian_matrix, ket, r, sample_isometry, sample_state, CMatrix, DensityOperator};
use entrocap::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn channel(d_in: usize, d_out: usize, extra: usize, seed: u64) -> KrausChannel {
    KrausChannel::random(d_in, d_out, d_in.div_ceil(d_out) + extra, seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn outputs_match_dilation(d_in in 1usize..5, d_out in 1usize..5, extra in 0usize..3, seed in any::<u64>()) {
        let ch = channel(d_in, d_out, extra, seed);
        let rho = sample_state(d_in, d_in, seed ^ 1).unwrap();
        let (out, env) = common::outputs(&ch, rho.mat());
        prop_assert!(qmat::max_abs(&(ch.apply_matrix(rho.mat()).unwrap() - out)) < 1e-13);
        prop_assert!(qmat::max_abs(&(ch.complementary().apply_matrix(rho.mat()).unwrap() - env)) < 1e-13);
        prop_assert!((ch.apply(&rho).unwrap().trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dual_is_adjoint(d_in in 1usize..5, d_out in 1usize..5, seed in any::<u64>()) {
        let ch = channel(d_in, d_out, 1, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = gaussian_matrix(d_in, d_in, &mut rng);
        let a = gaussian_matrix(d_out, d_out, &mut rng);
        let lhs = qmat::trace_product(&ch.apply_matrix(&x).unwrap(), &a);
        let rhs = qmat::trace_product(&x, &ch.dual_apply(&a).unwrap());
        prop_assert!((lhs - rhs).norm() < 1e-11 * (1.0 + lhs.norm()));
    }

    #[test]
    fn pure_inputs_give_equal_spectra(d_in in 1usize..5, d_out in 1usize..5, seed in any::<u64>()) {
        let ch = channel(d_in, d_out, 2, seed);
        let psi = sample_state(d_in, 1, seed ^ 7).unwrap();
        let (out, env) = common::outputs(&ch, psi.mat());
        let mut a = common::spectrum(&out);
        let mut b = common::spectrum(&env);
        let n = a.len().max(b.len());
        a.resize(n, 0.0);
        b.resize(n, 0.0);
        a.sort_by(|x, y| y.partial_cmp(x).unwrap());
        b.sort_by(|x, y| y.partial_cmp(x).unwrap());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn truncation_matches_definition(d in 2usize..5, n in 0usize..5, seed in any::<u64>()) {
        let n = n.min(d);
        let ch = channel(d, d, 1, seed);
        let tau = sample_state(d, d, seed ^ 3).unwrap();
        let rho = sample_state(d, d, seed ^ 5).unwrap();
        let out = ch.apply_matrix(rho.mat()).unwrap();
        let p = CMatrix::from_fn(d, d, |i, j| if i == j && i < n { r(1.0) } else { r(0.0) });
        let leaked = qmat::trace_re(&(&out - &p * &out * &p));
        let expected = &p * &out * &p + tau.mat() * r(leaked);
        let got = ch.truncate(n, &tau, None).unwrap().apply_matrix(rho.mat()).unwrap();
        prop_assert!(qmat::max_abs(&(got - expected)) < 1e-12);
    }

    #[test]
    fn canonical_form_is_the_same_map(d_in in 1usize..4, d_out in 1usize..4, seed in any::<u64>()) {
        // duplicating a Kraus operator with weights 1/2 leaves the map unchanged
        let ch = channel(d_in, d_out, 1, seed);
        let mut ks: Vec<CMatrix> = Vec::new();
        for k in ch.kraus() {
            ks.push(k * r(0.5f64.sqrt()));
            ks.push(k * r(0.5f64.sqrt()));
        }
        let doubled = KrausChannel::new(ks).unwrap();
        let canon = doubled.canonicalize();
        prop_assert!(canon.kraus().len() <= ch.kraus().len());
        let rho = sample_state(d_in, d_in, seed ^ 9).unwrap();
        let diff = canon.apply_matrix(rho.mat()).unwrap() - ch.apply_matrix(rho.mat()).unwrap();
        prop_assert!(qmat::max_abs(&diff) < 1e-12);
    }
}

#[test]
fn non_trace_preserving_family_is_rejected() {
    let k = qmat::diag_real(&[1.0, 0.5]);
    assert!(matches!(KrausChannel::new(vec![k]), Err(Error::Invariant(_))));
}

#[test]
fn mixed_shapes_are_rejected() {
    let a = CMatrix::zeros(2, 2);
    let b = CMatrix::zeros(3, 2);
    assert!(KrausChannel::new(vec![a, b]).is_err());
}

#[test]
fn named_channels_act_as_documented() {
    let rho = sample_state(3, 3, 4).unwrap();
    let deph = KrausChannel::dephasing(3).apply_matrix(rho.mat()).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let expected = if i == j { rho.mat()[(i, j)] } else { r(0.0) };
            assert!((deph[(i, j)] - expected).norm() < 1e-14);
        }
    }
    let p = 0.3;
    let depol = KrausChannel::depolarizing(3, p).unwrap().apply_matrix(rho.mat()).unwrap();
    let expected = rho.mat() * r(1.0 - p) + qmat::identity(3) * r(p / 3.0);
    assert!(qmat::max_abs(&(depol - expected)) < 1e-13);
    let tau = sample_state(2, 2, 5).unwrap();
    let rep = KrausChannel::replacement(3, &tau).apply_matrix(rho.mat()).unwrap();
    assert!(qmat::max_abs(&(rep - tau.mat())) < 1e-13);
}

#[test]
fn amplitude_damping_decays_excitation() {
    let ch = KrausChannel::amplitude_damping(0.3).unwrap();
    let out = ch.apply(&DensityOperator::basis(2, 1).unwrap()).unwrap();
    assert!((out.mat()[(0, 0)].re - 0.3).abs() < 1e-14);
    assert!((out.mat()[(1, 1)].re - 0.7).abs() < 1e-14);
}

#[test]
fn stinespring_round_trip() {
    let v = sample_isometry(3, 6, 12).unwrap();
    let ch = KrausChannel::from_stinespring(&v, 2).unwrap();
    let rho = sample_state(3, 2, 13).unwrap();
    let big = &v * rho.mat() * v.adjoint();
    let expected = common::trace_second(&big, 2, 3);
    assert!(qmat::max_abs(&(ch.apply_matrix(rho.mat()).unwrap() - expected)) < 1e-13);
}

#[test]
fn cq_detection() {
    let states: Vec<DensityOperator> = (0..3).map(|k| sample_state(2, 2, k).unwrap()).collect();
    let cq = cq_channel(&states, 3).unwrap();
    assert!(is_cq(&cq, CQ_TOL).is_cq);
    let discrete = is_cq_discrete(&cq, CQ_TOL);
    assert!(discrete.is_discrete, "{discrete:?}");
    // Φ(|k⟩⟨k|) = σ_k
    for (k, s) in states.iter().enumerate() {
        let out = cq.apply_matrix(&qmat::projector(&ket(3, k))).unwrap();
        assert!(qmat::max_abs(&(out - s.mat())) < 1e-13);
    }
    let u = sample_isometry(3, 3, 1).unwrap();
    let cert = is_cq(&KrausChannel::unitary(u).unwrap(), CQ_TOL);
    assert!(!cert.is_cq && cert.max_commutator > 1e-3);
    // completely depolarizing channels have scalar dual image
    assert!(is_cq(&KrausChannel::replacement(3, &states[0]), CQ_TOL).is_cq);
}

#[test]
fn cq_is_basis_independent() {
    // a qubit channel that is c-q in a rotated basis is still c-q
    let h = CMatrix::from_row_slice(2, 2, &[r(1.0), r(1.0), r(1.0), r(-1.0)]) * r(0.5f64.sqrt());
    let deph = KrausChannel::dephasing(2);
    let rotated = KrausChannel::unitary(h.clone()).unwrap().then(&deph).unwrap();
    assert!(is_cq(&rotated, CQ_TOL).is_cq);
    let phase = CMatrix::from_row_slice(2, 2, &[r(1.0), r(0.0), r(0.0), c(0.0, 1.0)]);
    let not_cq = KrausChannel::unitary(phase).unwrap();
    assert!(!is_cq(&not_cq, CQ_TOL).is_cq);
}
