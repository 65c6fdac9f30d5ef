//! Bosonic Gaussian channels in covariance form, their c-q classification,
//! and Fock-truncated single-mode attenuators for capacity cross-checks.
//!
//! Conventions: quadratures ordered `(q_1, p_1, q_2, p_2, …)`, symplectic
//! form `Δ = ⊕ [[0, 1], [−1, 0]]`, vacuum covariance `I/2`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::capacity::EnergyConstraint;
use crate::channel::KrausChannel;
use crate::error::{dimension, invariant, Error, Result};
use crate::qmat::{self, c, diag_real, r, CMatrix, DensityOperator};

pub type RMatrix = DMatrix<f64>;
pub type RVector = DVector<f64>;

/// Tolerance of the Heisenberg-type PSD conditions.
pub const VALIDITY_TOL: f64 = 1e-10;

/// Threshold for `K^⊤ΔK = 0` and `K = 0`.
pub const CQ_THRESHOLD: f64 = 1e-12;

/// Singular values above this count toward `rank K`.
pub const RANK_THRESHOLD: f64 = 1e-10;

/// `(Z, Δ)` with `Z = ℝ^{2k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticSpace {
    delta: RMatrix,
}

impl SymplecticSpace {
    pub fn standard(modes: usize) -> Self {
        let mut delta = RMatrix::zeros(2 * modes, 2 * modes);
        for j in 0..modes {
            delta[(2 * j, 2 * j + 1)] = 1.0;
            delta[(2 * j + 1, 2 * j)] = -1.0;
        }
        Self { delta }
    }

    pub fn new(delta: RMatrix) -> Result<Self> {
        let n = delta.nrows();
        if n == 0 || n % 2 != 0 || !delta.is_square() {
            return Err(dimension(format!("symplectic form must be 2k×2k, got {}×{}", n, delta.ncols())));
        }
        if (&delta + delta.transpose()).amax() > 1e-12 {
            return Err(invariant("symplectic form is not skew-symmetric"));
        }
        if delta.clone().lu().determinant().abs() < 1e-12 {
            return Err(invariant("symplectic form is degenerate"));
        }
        Ok(Self { delta })
    }

    pub fn dim(&self) -> usize {
        self.delta.nrows()
    }

    pub fn modes(&self) -> usize {
        self.dim() / 2
    }

    pub fn delta(&self) -> &RMatrix {
        &self.delta
    }
}

/// Parameters `(K, l, α)` of `Φ*[W_B(z)] = W_A(Kz) exp(i l^⊤z − ½ z^⊤αz)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianChannelParams {
    /// `Z_B → Z_A`, shape `dim Z_A × dim Z_B`.
    pub k: RMatrix,
    pub l: DVector<f64>,
    pub alpha: RMatrix,
    pub space_a: SymplecticSpace,
    pub space_b: SymplecticSpace,
}

impl GaussianChannelParams {
    pub fn new(
        k: RMatrix,
        l: DVector<f64>,
        alpha: RMatrix,
        space_a: SymplecticSpace,
        space_b: SymplecticSpace,
    ) -> Result<Self> {
        let (da, db) = (space_a.dim(), space_b.dim());
        if k.shape() != (da, db) {
            return Err(dimension(format!("K must be {da}×{db}, got {:?}", k.shape())));
        }
        if l.len() != db {
            return Err(dimension(format!("l must have length {db}, got {}", l.len())));
        }
        if alpha.shape() != (db, db) {
            return Err(dimension(format!("α must be {db}×{db}, got {:?}", alpha.shape())));
        }
        if (&alpha - alpha.transpose()).amax() > 1e-12 {
            return Err(invariant("α is not symmetric"));
        }
        Ok(Self { k, l, alpha, space_a, space_b })
    }

    /// Standard-form parameters on `modes_a → modes_b` modes.
    pub fn standard(k: RMatrix, alpha: RMatrix, modes_a: usize, modes_b: usize) -> Result<Self> {
        let l = DVector::zeros(2 * modes_b);
        Self::new(k, l, alpha, SymplecticSpace::standard(modes_a), SymplecticSpace::standard(modes_b))
    }

    /// Single-mode attenuator with transmissivity `η` and `N_E` thermal
    /// environment photons: `K = √η I₂`, `α = (1−η)(2N_E+1)/2 · I₂`.
    pub fn attenuator(eta: f64, n_env: f64) -> Result<Self> {
        let k = RMatrix::identity(2, 2) * eta.sqrt();
        let alpha = RMatrix::identity(2, 2) * ((1.0 - eta) * (2.0 * n_env + 1.0) / 2.0);
        Self::standard(k, alpha, 1, 1)
    }

    /// `K^⊤ Δ_A K`.
    pub fn pulled_back_form(&self) -> RMatrix {
        self.k.transpose() * self.space_a.delta() * &self.k
    }

    /// Covariance of the output for an input covariance on `Z_A`.
    pub fn output_covariance(&self, cov: &RMatrix) -> Result<RMatrix> {
        if cov.shape() != (self.space_a.dim(), self.space_a.dim()) {
            return Err(dimension("input covariance does not match Z_A"));
        }
        Ok(self.k.transpose() * cov * &self.k + &self.alpha)
    }

    /// Parameters after symplectic changes of basis `S_A`, `S_B`:
    /// `K → S_A^⊤ K S_B`, `α → S_B^⊤ α S_B`, `l → S_B^⊤ l`.
    pub fn conjugated(&self, s_a: &RMatrix, s_b: &RMatrix) -> Result<Self> {
        Self::new(
            s_a.transpose() * &self.k * s_b,
            s_b.transpose() * &self.l,
            s_b.transpose() * &self.alpha * s_b,
            self.space_a.clone(),
            self.space_b.clone(),
        )
    }
}

fn complexify(m: &RMatrix) -> CMatrix {
    m.map(r)
}

/// Outcome of the validity check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianValidity {
    pub valid: bool,
    /// The smaller of the minimal eigenvalues of `α ∓ (i/2)(Δ_B − K^⊤Δ_A K)`.
    pub min_eig_both_signs: f64,
}

/// Check `α ≥ ±(i/2)(Δ_B − K^⊤Δ_A K)` as Hermitian matrices.
pub fn validate_gaussian(p: &GaussianChannelParams) -> Result<GaussianValidity> {
    if p.k.shape() != (p.space_a.dim(), p.space_b.dim()) || p.alpha.shape() != (p.space_b.dim(), p.space_b.dim()) {
        return Err(dimension("channel parameters do not match their symplectic spaces"));
    }
    let form = p.space_b.delta() - p.pulled_back_form();
    let alpha = complexify(&p.alpha);
    let skew = form.map(|x| c(0.0, 0.5 * x));
    let mut min = f64::INFINITY;
    for m in [&alpha - &skew, &alpha + &skew] {
        let values = qmat::eigvalsh(&m)?;
        min = min.min(*values.last().expect("nonempty"));
    }
    Ok(GaussianValidity { valid: min >= -VALIDITY_TOL, min_eig_both_signs: min })
}

/// c-q structure of a Gaussian channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GaussianClass {
    pub cq: bool,
    pub discrete_type: bool,
    pub no_discrete_subchannel: bool,
}

/// `cq ⇔ K^⊤Δ_A K = 0`, `discrete_type ⇔ K = 0`,
/// `no_discrete_subchannel ⇔ rank K = dim Z_A`.
pub fn classify_gaussian(p: &GaussianChannelParams) -> GaussianClass {
    let rank = p.k.clone().svd(false, false).singular_values.iter().filter(|&&s| s > RANK_THRESHOLD).count();
    GaussianClass {
        cq: p.pulled_back_form().amax() <= CQ_THRESHOLD,
        discrete_type: p.k.amax() <= CQ_THRESHOLD,
        no_discrete_subchannel: rank == p.space_a.dim(),
    }
}

/// `exp(ΔH)` for a random symmetric `H` with entries of size `scale`.
pub fn random_symplectic(space: &SymplecticSpace, scale: f64, rng: &mut impl Rng) -> RMatrix {
    let n = space.dim();
    let g = RMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal) * scale);
    let h = (&g + g.transpose()) * 0.5;
    (space.delta() * h).exp()
}

/// Mean vector and covariance matrix of a Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    pub mean: DVector<f64>,
    pub cov: RMatrix,
    pub space: SymplecticSpace,
}

impl GaussianState {
    pub fn new(mean: DVector<f64>, cov: RMatrix, space: SymplecticSpace) -> Result<Self> {
        let n = space.dim();
        if mean.len() != n || cov.shape() != (n, n) {
            return Err(dimension(format!("state on Z of dimension {n} needs mean {n} and covariance {n}×{n}")));
        }
        if (&cov - cov.transpose()).amax() > 1e-12 {
            return Err(invariant("covariance is not symmetric"));
        }
        let heis = complexify(&cov) + space.delta().map(|x| c(0.0, 0.5 * x));
        let min = *qmat::eigvalsh(&heis)?.last().expect("nonempty");
        if min < -VALIDITY_TOL {
            return Err(invariant(format!("covariance violates cov + (i/2)Δ ≥ 0 (min eigenvalue {min:.3e})")));
        }
        Ok(Self { mean, cov, space })
    }

    /// Single-mode thermal state, covariance `(N + ½) I₂`.
    pub fn thermal(n: f64) -> Result<Self> {
        if !(n >= 0.0) {
            return Err(invariant("mean photon number must be nonnegative"));
        }
        Self::new(DVector::zeros(2), RMatrix::identity(2, 2) * (n + 0.5), SymplecticSpace::standard(1))
    }

    pub fn entropy(&self) -> Result<f64> {
        gaussian_entropy(&self.cov, &self.space)
    }
}

/// `g(N) = (N+1) log₂(N+1) − N log₂ N`.
pub fn g(n: f64) -> f64 {
    if n <= 0.0 {
        0.0
    } else {
        (n + 1.0) * (n + 1.0).log2() - n * n.log2()
    }
}

/// Symplectic eigenvalues, the positive eigenvalues of `γ^{1/2} (iΔ) γ^{1/2}`.
pub fn symplectic_eigenvalues(cov: &RMatrix, space: &SymplecticSpace) -> Result<Vec<f64>> {
    if cov.shape() != (space.dim(), space.dim()) {
        return Err(dimension("covariance does not match the symplectic space"));
    }
    let root = qmat::sqrtm_psd(&complexify(cov))?;
    let i_delta = space.delta().map(|x| c(0.0, x));
    let m = &root * i_delta * &root;
    let values = qmat::eigvalsh(&qmat::hermitian_part(&m))?;
    Ok(values[..space.modes()].to_vec())
}

/// Von Neumann entropy of a Gaussian state, `Σ_j g(ν_j − ½)`.
pub fn gaussian_entropy(cov: &RMatrix, space: &SymplecticSpace) -> Result<f64> {
    Ok(symplectic_eigenvalues(cov, space)?.iter().map(|&nu| g(nu - 0.5)).sum())
}

/// `I(ρ, Φ)` for a single-mode channel and a thermal input, from covariance
/// matrices: `H(ρ) + H(Φ(ρ)) − H((Φ ⊗ Id)(ρ̂))` with `ρ̂` the two-mode
/// squeezed vacuum purifying `ρ`.
pub fn gaussian_mi_oracle(channel: &GaussianChannelParams, input: &GaussianState) -> Result<f64> {
    if channel.space_a.modes() != 1 || channel.space_b.modes() != 1 {
        return Err(Error::Unsupported("the covariance oracle handles single-mode channels only".into()));
    }
    if input.space.modes() != 1 {
        return Err(dimension("input must be a single-mode state"));
    }
    let a = input.cov[(0, 0)];
    let thermal = RMatrix::identity(2, 2) * a;
    if (&input.cov - &thermal).amax() > 1e-12 {
        return Err(Error::Unsupported("the covariance oracle needs a thermal input".into()));
    }
    let n = a - 0.5;
    let cross = (n * (n + 1.0)).max(0.0).sqrt();
    let z = RMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0])) * cross;
    let mut joint = RMatrix::zeros(4, 4);
    joint.view_mut((0, 0), (2, 2)).copy_from(&thermal);
    joint.view_mut((2, 2), (2, 2)).copy_from(&thermal);
    joint.view_mut((0, 2), (2, 2)).copy_from(&z);
    joint.view_mut((2, 0), (2, 2)).copy_from(&z);
    let mut lift = RMatrix::identity(4, 4);
    lift.view_mut((0, 0), (2, 2)).copy_from(&channel.k);
    let mut noise = RMatrix::zeros(4, 4);
    noise.view_mut((0, 0), (2, 2)).copy_from(&channel.alpha);
    let joint_out = lift.transpose() * joint * &lift + noise;

    let one = SymplecticSpace::standard(1);
    let two = SymplecticSpace::standard(2);
    let h_in = gaussian_entropy(&input.cov, &one)?;
    let h_out = gaussian_entropy(&channel.output_covariance(&input.cov)?, &one)?;
    let h_joint = gaussian_entropy(&joint_out, &two)?;
    Ok(h_in + h_out - h_joint)
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    (1..=k).map(|j| ((n - k + j) as f64 / j as f64).ln()).sum()
}

/// Single-mode attenuator on the Fock space truncated at `cutoff` photons:
/// `⟨n−ℓ|A_ℓ|n⟩ = √C(n,ℓ) √(η^{n−ℓ}(1−η)^ℓ)` for `ℓ = 0..=cutoff`, columns
/// renormalised so that `Σ A_ℓ†A_ℓ = I` exactly.
pub fn fock_attenuator(eta: f64, cutoff: usize) -> Result<KrausChannel> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(invariant(format!("transmissivity must lie in (0, 1), got {eta}")));
    }
    if cutoff < 2 {
        return Err(invariant("Fock cutoff must be at least 2"));
    }
    let d = cutoff + 1;
    let mut kraus: Vec<CMatrix> = Vec::with_capacity(d);
    for l in 0..d {
        let mut a = CMatrix::zeros(d, d);
        for n in l..d {
            let ln = ln_binomial(n, l) + (n - l) as f64 * eta.ln() + l as f64 * (1.0 - eta).ln();
            a[(n - l, n)] = r((0.5 * ln).exp());
        }
        kraus.push(a);
    }
    for n in 0..d {
        let norm: f64 = kraus.iter().map(|a| a.column(n).norm_squared()).sum();
        let scale = 1.0 / norm.sqrt();
        for a in kraus.iter_mut() {
            a.column_mut(n).scale_mut(scale);
        }
    }
    KrausChannel::new(kraus)
}

/// Thermal state with `N` mean photons, truncated at `cutoff` and renormalised.
pub fn thermal_state(n: f64, cutoff: usize) -> Result<DensityOperator> {
    if !(n >= 0.0) {
        return Err(invariant("mean photon number must be nonnegative"));
    }
    let q = n / (n + 1.0);
    let mut p: Vec<f64> = (0..=cutoff).map(|k| if k == 0 { 1.0 } else { q.powi(k as i32) }).collect();
    let z: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= z);
    DensityOperator::diagonal(&p)
}

/// `diag(0, 1, …, cutoff)`.
pub fn number_operator(cutoff: usize) -> CMatrix {
    diag_real(&(0..=cutoff).map(|k| k as f64).collect::<Vec<_>>())
}

/// Mean-photon constraint `Tr ρ a†a ≤ E` on the truncated space.
pub fn number_constraint(cutoff: usize, e: f64) -> Result<EnergyConstraint> {
    EnergyConstraint::new(number_operator(cutoff), e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::CpMap;
    use crate::entropy::von_neumann;

    #[test]
    fn validity_examples() {
        let delta_abs = RMatrix::identity(2, 2) * 0.5;
        let p = GaussianChannelParams::standard(RMatrix::zeros(2, 2), delta_abs, 1, 1).unwrap();
        let v = validate_gaussian(&p).unwrap();
        assert!(v.valid && v.min_eig_both_signs.abs() < 1e-12);

        let att = GaussianChannelParams::attenuator(0.6, 0.0).unwrap();
        let v = validate_gaussian(&att).unwrap();
        assert!(v.valid && v.min_eig_both_signs.abs() < 1e-12);

        let zero = GaussianChannelParams::standard(RMatrix::zeros(2, 2), RMatrix::zeros(2, 2), 1, 1).unwrap();
        assert!(!validate_gaussian(&zero).unwrap().valid);
    }

    #[test]
    fn classification_examples() {
        let alpha = RMatrix::identity(2, 2) * 0.5;
        let k0 = GaussianChannelParams::standard(RMatrix::zeros(2, 2), alpha.clone(), 1, 1).unwrap();
        assert_eq!(
            classify_gaussian(&k0),
            GaussianClass { cq: true, discrete_type: true, no_discrete_subchannel: false }
        );
        let k1 = RMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let k1 = GaussianChannelParams::standard(k1, alpha.clone(), 1, 1).unwrap();
        assert_eq!(
            classify_gaussian(&k1),
            GaussianClass { cq: true, discrete_type: false, no_discrete_subchannel: false }
        );
        let att = GaussianChannelParams::attenuator(0.6, 0.0).unwrap();
        assert_eq!(
            classify_gaussian(&att),
            GaussianClass { cq: false, discrete_type: false, no_discrete_subchannel: true }
        );
    }

    #[test]
    fn thermal_and_number_operator() {
        let vac = thermal_state(0.0, 5).unwrap();
        assert_eq!(vac, DensityOperator::basis(6, 0).unwrap());
        let th = thermal_state(1.0, 40).unwrap();
        assert!((von_neumann(&th) - g(1.0)).abs() < 1e-6);
        assert!((g(1.0) - 2.0).abs() < 1e-15);
        let mean = th.expectation(&number_operator(40));
        let q: f64 = 0.5;
        assert!((mean - 1.0).abs() <= q.powi(41) * 42.0);
        assert!(thermal_state(-0.1, 4).is_err());
    }

    #[test]
    fn attenuator_examples() {
        let ch = fock_attenuator(0.6, 4).unwrap();
        let vac = DensityOperator::basis(5, 0).unwrap();
        assert!(qmat::max_abs(&(ch.apply(&vac).unwrap().mat() - vac.mat())) < 1e-14);
        let one = DensityOperator::basis(5, 1).unwrap();
        let expected = diag_real(&[0.4, 0.6, 0.0, 0.0, 0.0]);
        assert!(qmat::max_abs(&(ch.apply(&one).unwrap().mat() - expected)) < 1e-14);

        let near_one = fock_attenuator(1.0 - 1e-12, 3).unwrap();
        assert!(qmat::max_abs(&(&near_one.kraus()[0] - qmat::identity(4))) < 1e-10);
        assert!(near_one.kraus()[1..].iter().all(|a| qmat::max_abs(a) < 1e-5));
        assert!(fock_attenuator(1.0, 3).is_err());
        assert!(fock_attenuator(0.5, 1).is_err());
    }

    #[test]
    fn oracle_examples() {
        let att = GaussianChannelParams::attenuator(0.6, 0.0).unwrap();
        let th = GaussianState::thermal(1.0).unwrap();
        let exact = g(1.0) + g(0.6) - g(0.4);
        let value = gaussian_mi_oracle(&att, &th).unwrap();
        assert!((value - exact).abs() < 1e-10);
        // the published figure adds terms already rounded to five places
        assert!((value - 2.31871).abs() < 5e-5);

        let clear = GaussianChannelParams::attenuator(1.0 - 1e-12, 0.0).unwrap();
        assert!((gaussian_mi_oracle(&clear, &th).unwrap() - 2.0 * g(1.0)).abs() < 1e-6);
        let vac = GaussianState::thermal(0.0).unwrap();
        assert!(gaussian_mi_oracle(&att, &vac).unwrap().abs() < 1e-10);

        let two = GaussianChannelParams::standard(RMatrix::zeros(4, 4), RMatrix::identity(4, 4), 2, 2).unwrap();
        let two_mode_thermal = GaussianState::new(DVector::zeros(4), RMatrix::identity(4, 4), SymplecticSpace::standard(2)).unwrap();
        assert!(matches!(gaussian_mi_oracle(&two, &two_mode_thermal), Err(Error::Unsupported(_))));
    }
}
