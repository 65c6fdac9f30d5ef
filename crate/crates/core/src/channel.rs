//! Channels and quantum operations in Kraus form.
//!
//! The environment of a Kraus family is indexed by Kraus position: the
//! Stinespring isometry is `V = Σ_i K_i ⊗ |i⟩_E` on the layout `(B, E)`,
//! so the complementary map has Kraus operators `L_b = Σ_i |i⟩⟨b| K_i`.

use serde::{Deserialize, Serialize};

use crate::error::{dimension, invariant, Result};
use crate::qmat::{
    self, c, commutator, hermitian_eig, identity, isometry_residual, ket, max_abs, r, CMatrix,
    CompositeLayout, DensityOperator, TraceClass, ONE, ZERO,
};

/// Tolerance for the trace-preservation and contraction conditions.
pub const KRAUS_TOL: f64 = 1e-9;

/// Default commutator tolerance for the c-q test.
pub const CQ_TOL: f64 = 1e-8;

/// Eigenvalue cutoff used when canonicalising a Kraus family via its Choi matrix.
pub const CHOI_CUTOFF: f64 = 1e-12;

/// A completely positive map given by a finite Kraus family.
pub trait CpMap {
    fn kraus(&self) -> &[CMatrix];
    fn d_in(&self) -> usize;
    fn d_out(&self) -> usize;
    fn is_trace_preserving(&self) -> bool;

    /// Environment dimension of the canonical dilation.
    fn d_env(&self) -> usize {
        self.kraus().len()
    }

    /// `Σ_i K_i X K_i†` on an arbitrary operator.
    fn apply_matrix(&self, x: &CMatrix) -> Result<CMatrix> {
        if x.nrows() != self.d_in() || x.ncols() != self.d_in() {
            return Err(dimension(format!(
                "operator is {}x{}, map input dimension is {}",
                x.nrows(),
                x.ncols(),
                self.d_in()
            )));
        }
        let mut out = CMatrix::zeros(self.d_out(), self.d_out());
        for k in self.kraus() {
            out += k * x * k.adjoint();
        }
        Ok(out)
    }

    fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        let out = self.apply_matrix(rho.mat())?;
        let class = if self.is_trace_preserving() { rho.class() } else { TraceClass::SubUnitTrace };
        Ok(DensityOperator::from_trusted(out, class))
    }

    /// Heisenberg-picture action `Σ_i K_i† A K_i`.
    fn dual_apply(&self, a: &CMatrix) -> Result<CMatrix> {
        if a.nrows() != self.d_out() || a.ncols() != self.d_out() {
            return Err(dimension(format!(
                "observable is {}x{}, map output dimension is {}",
                a.nrows(),
                a.ncols(),
                self.d_out()
            )));
        }
        let mut out = CMatrix::zeros(self.d_in(), self.d_in());
        for k in self.kraus() {
            out += k.adjoint() * a * k;
        }
        Ok(out)
    }

    /// Kraus operators `L_b` (each `d_env × d_in`) of the complementary map.
    fn complementary_kraus(&self) -> Vec<CMatrix> {
        let ks = self.kraus();
        (0..self.d_out())
            .map(|b| CMatrix::from_fn(ks.len(), self.d_in(), |e, a| ks[e][(b, a)]))
            .collect()
    }

    /// Stinespring matrix `V` of shape `(d_out·d_env) × d_in`, layout `(B, E)`.
    fn stinespring_matrix(&self) -> CMatrix {
        let ks = self.kraus();
        let de = ks.len();
        CMatrix::from_fn(self.d_out() * de, self.d_in(), |row, a| ks[row % de][(row / de, a)])
    }
}

fn check_family(kraus: &[CMatrix]) -> Result<(usize, usize)> {
    let first = kraus.first().ok_or_else(|| invariant("Kraus list is empty"))?;
    let (d_out, d_in) = first.shape();
    if d_out == 0 || d_in == 0 {
        return Err(invariant("Kraus operators must be non-empty matrices"));
    }
    if let Some(k) = kraus.iter().find(|k| k.shape() != (d_out, d_in)) {
        return Err(dimension(format!(
            "Kraus operators have mixed shapes {:?} and {:?}",
            (d_out, d_in),
            k.shape()
        )));
    }
    Ok((d_out, d_in))
}

/// `Σ_i K_i† K_i`.
pub fn kraus_gram(kraus: &[CMatrix]) -> CMatrix {
    let d_in = kraus[0].ncols();
    kraus.iter().fold(CMatrix::zeros(d_in, d_in), |acc, k| acc + k.adjoint() * k)
}

/// Completely positive trace-preserving map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrausChannel {
    kraus: Vec<CMatrix>,
    d_in: usize,
    d_out: usize,
}

impl KrausChannel {
    pub fn new(kraus: Vec<CMatrix>) -> Result<Self> {
        let (d_out, d_in) = check_family(&kraus)?;
        let resid = max_abs(&(kraus_gram(&kraus) - identity(d_in)));
        if !(resid <= KRAUS_TOL) {
            return Err(invariant(format!(
                "Kraus family is not trace preserving (‖ΣK†K − I‖ = {resid:.3e})"
            )));
        }
        Ok(Self { kraus, d_in, d_out })
    }

    pub fn into_kraus(self) -> Vec<CMatrix> {
        self.kraus
    }

    pub fn identity(d: usize) -> Self {
        Self { kraus: vec![identity(d)], d_in: d, d_out: d }
    }

    /// `ρ ↦ U ρ U†`.
    pub fn unitary(u: CMatrix) -> Result<Self> {
        if !u.is_square() || isometry_residual(&u) > KRAUS_TOL {
            return Err(invariant("matrix is not unitary"));
        }
        Self::new(vec![u])
    }

    /// Completely dephasing channel in the computational basis.
    pub fn dephasing(d: usize) -> Self {
        let kraus = (0..d).map(|k| qmat::projector(&ket(d, k))).collect();
        Self { kraus, d_in: d, d_out: d }
    }

    /// `ρ ↦ (1 − p) ρ + p I/d`, with Heisenberg–Weyl Kraus operators.
    pub fn depolarizing(d: usize, p: f64) -> Result<Self> {
        let d2 = (d * d) as f64;
        let w0 = 1.0 - p + p / d2;
        if !(p >= 0.0) || w0 < 0.0 {
            return Err(invariant(format!("depolarizing parameter {p} is not completely positive")));
        }
        let omega = 2.0 * std::f64::consts::PI / d as f64;
        let mut kraus = Vec::with_capacity(d * d);
        for a in 0..d {
            for b in 0..d {
                let weight = if a == 0 && b == 0 { w0 } else { p / d2 };
                if weight == 0.0 {
                    continue;
                }
                // X^a Z^b
                let m = CMatrix::from_fn(d, d, |i, j| {
                    if i == (j + a) % d {
                        let ph = omega * (b * j) as f64;
                        c(ph.cos(), ph.sin()) * weight.sqrt()
                    } else {
                        ZERO
                    }
                });
                kraus.push(m);
            }
        }
        Self::new(kraus)
    }

    /// Constant map `ρ ↦ Tr(ρ) τ` (completely depolarizing onto `τ`).
    pub fn replacement(d_in: usize, tau: &DensityOperator) -> Self {
        let eig = tau.eig();
        let d_out = tau.dim();
        let mut kraus = Vec::new();
        for (j, &t) in eig.values.iter().enumerate() {
            if t <= 0.0 {
                continue;
            }
            let v = eig.vector(j) * r(t.sqrt());
            for k in 0..d_in {
                kraus.push(&v * ket(d_in, k).adjoint());
            }
        }
        Self { kraus, d_in, d_out }
    }

    /// Qubit amplitude damping with decay probability `gamma`.
    pub fn amplitude_damping(gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(invariant(format!("damping probability {gamma} outside [0, 1]")));
        }
        let k0 = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, r((1.0 - gamma).sqrt())]);
        let k1 = CMatrix::from_row_slice(2, 2, &[ZERO, r(gamma.sqrt()), ZERO, ZERO]);
        Self::new(vec![k0, k1])
    }

    /// Random channel from a Haar-like isometry `C^d_in → C^d_out ⊗ C^rank`.
    pub fn random(d_in: usize, d_out: usize, rank: usize, seed: u64) -> Result<Self> {
        if rank == 0 || d_out * rank < d_in {
            return Err(invariant(format!(
                "Kraus rank {rank} too small for a channel {d_in} -> {d_out}"
            )));
        }
        let v = qmat::sample_isometry(d_in, d_out * rank, seed)?;
        Self::from_stinespring(&v, d_out)
    }

    /// Kraus family of an isometry on the layout `(B, E)`.
    pub fn from_stinespring(v: &CMatrix, d_out: usize) -> Result<Self> {
        if d_out == 0 || v.nrows() % d_out != 0 {
            return Err(dimension("isometry rows are not a multiple of the output dimension"));
        }
        let de = v.nrows() / d_out;
        let kraus = (0..de)
            .map(|e| CMatrix::from_fn(d_out, v.ncols(), |b, a| v[(b * de + e, a)]))
            .collect();
        Self::new(kraus)
    }

    pub fn stinespring(&self) -> StinespringDilation {
        let layout = CompositeLayout::labeled(&[("B", self.d_out), ("E", self.kraus.len())])
            .expect("positive dims");
        StinespringDilation { v: self.stinespring_matrix(), layout }
    }

    /// Complementary channel `ρ ↦ Tr_B V ρ V†`.
    pub fn complementary(&self) -> KrausChannel {
        KrausChannel { kraus: self.complementary_kraus(), d_in: self.d_in, d_out: self.kraus.len() }
    }

    /// Kraus family `{K_i ⊗ L_j}` of `self ⊗ other`.
    pub fn tensor(&self, other: &KrausChannel) -> KrausChannel {
        let kraus = self
            .kraus
            .iter()
            .flat_map(|k| other.kraus.iter().map(move |l| qmat::tensor(k, l)))
            .collect();
        KrausChannel { kraus, d_in: self.d_in * other.d_in, d_out: self.d_out * other.d_out }
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &KrausChannel) -> Result<KrausChannel> {
        if other.d_in != self.d_out {
            return Err(dimension("composition dimensions do not match"));
        }
        let kraus = other
            .kraus
            .iter()
            .flat_map(|m| self.kraus.iter().map(move |k| m * k))
            .collect();
        Ok(KrausChannel { kraus, d_in: self.d_in, d_out: other.d_out })
    }

    /// Minimal Kraus family from the eigen-decomposition of the Choi matrix.
    pub fn canonicalize(&self) -> KrausChannel {
        let kraus = canonical_kraus(&self.kraus, self.d_in, self.d_out);
        KrausChannel { kraus, d_in: self.d_in, d_out: self.d_out }
    }

    /// `Π_n ∘ Φ` where `Π_n(ρ) = P_n ρ P_n + Tr[ρ(I − P_n)] τ`.
    ///
    /// `P_n` projects onto the first `n` computational basis vectors of the
    /// output, or onto the top-`n` eigenvectors of `ordering` when given.
    pub fn truncate(
        &self,
        n: usize,
        tau: &DensityOperator,
        ordering: Option<&CMatrix>,
    ) -> Result<KrausChannel> {
        let pi = truncation_map(self.d_out, n, tau, ordering)?;
        self.then(&pi)
    }

    /// Quantum operation `ρ ↦ P_n Φ(ρ) P_n`.
    pub fn compress(&self, n: usize, ordering: Option<&CMatrix>) -> Result<QuantumOperation> {
        let basis = output_basis(self.d_out, n, ordering)?;
        let p: CMatrix = basis.columns(0, n) * basis.columns(0, n).adjoint();
        let kraus = self.kraus.iter().map(|k| &p * k).collect();
        QuantumOperation::new(kraus)
    }

    /// Subchannel on the span of the orthonormal columns of `basis`.
    pub fn restrict(&self, basis: &CMatrix) -> Result<KrausChannel> {
        if basis.nrows() != self.d_in {
            return Err(dimension(format!(
                "subspace basis has {} rows, channel input dimension is {}",
                basis.nrows(),
                self.d_in
            )));
        }
        if basis.ncols() == 0 || isometry_residual(basis) > KRAUS_TOL {
            return Err(invariant("subspace basis is not orthonormal"));
        }
        let kraus = self.kraus.iter().map(|k| k * basis).collect();
        KrausChannel::new(kraus)
    }
}

impl CpMap for KrausChannel {
    fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }
    fn d_in(&self) -> usize {
        self.d_in
    }
    fn d_out(&self) -> usize {
        self.d_out
    }
    fn is_trace_preserving(&self) -> bool {
        true
    }
}

/// Completely positive trace-non-increasing map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumOperation {
    kraus: Vec<CMatrix>,
    d_in: usize,
    d_out: usize,
}

impl QuantumOperation {
    pub fn new(kraus: Vec<CMatrix>) -> Result<Self> {
        let (d_out, d_in) = check_family(&kraus)?;
        let defect = identity(d_in) - kraus_gram(&kraus);
        let min = qmat::eigvalsh(&defect)?.last().copied().unwrap_or(0.0);
        if min < -KRAUS_TOL {
            return Err(invariant(format!(
                "Kraus family increases trace (min eigenvalue of I − ΣK†K is {min:.3e})"
            )));
        }
        Ok(Self { kraus, d_in, d_out })
    }

    pub fn complementary(&self) -> QuantumOperation {
        QuantumOperation {
            kraus: self.complementary_kraus(),
            d_in: self.d_in,
            d_out: self.kraus.len(),
        }
    }
}

impl From<KrausChannel> for QuantumOperation {
    fn from(ch: KrausChannel) -> Self {
        QuantumOperation { kraus: ch.kraus, d_in: ch.d_in, d_out: ch.d_out }
    }
}

impl CpMap for QuantumOperation {
    fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }
    fn d_in(&self) -> usize {
        self.d_in
    }
    fn d_out(&self) -> usize {
        self.d_out
    }
    fn is_trace_preserving(&self) -> bool {
        max_abs(&(kraus_gram(&self.kraus) - identity(self.d_in))) <= KRAUS_TOL
    }
}

/// Isometry `V : H_A → H_B ⊗ H_E` with `Φ(ρ) = Tr_E VρV†`.
#[derive(Debug, Clone, PartialEq)]
pub struct StinespringDilation {
    pub v: CMatrix,
    pub layout: CompositeLayout,
}

impl StinespringDilation {
    pub fn d_env(&self) -> usize {
        self.layout.dims()[1]
    }

    pub fn isometry_residual(&self) -> f64 {
        isometry_residual(&self.v)
    }

    /// `Tr_E VρV†`.
    pub fn channel_output(&self, rho: &CMatrix) -> Result<CMatrix> {
        qmat::partial_trace(&(&self.v * rho * self.v.adjoint()), &self.layout, &[0])
    }

    /// `Tr_B VρV†`.
    pub fn environment_output(&self, rho: &CMatrix) -> Result<CMatrix> {
        qmat::partial_trace(&(&self.v * rho * self.v.adjoint()), &self.layout, &[1])
    }
}

fn canonical_kraus(kraus: &[CMatrix], d_in: usize, d_out: usize) -> Vec<CMatrix> {
    // Choi vector of K: index b * d_in + a
    let n = d_in * d_out;
    let mut choi = CMatrix::zeros(n, n);
    for k in kraus {
        let v = qmat::CVector::from_fn(n, |idx, _| k[(idx / d_in, idx % d_in)]);
        choi += &v * v.adjoint();
    }
    let eig = hermitian_eig(&choi).expect("Choi matrix is Hermitian");
    eig.values
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > CHOI_CUTOFF)
        .map(|(j, &l)| {
            let s = l.sqrt();
            CMatrix::from_fn(d_out, d_in, |b, a| eig.vectors[(b * d_in + a, j)] * s)
        })
        .collect()
}

/// Unitary whose first `n` columns span the range of `P_n`.
fn output_basis(d: usize, n: usize, ordering: Option<&CMatrix>) -> Result<CMatrix> {
    if n > d {
        return Err(invariant(format!("truncation rank {n} exceeds output dimension {d}")));
    }
    match ordering {
        None => Ok(identity(d)),
        Some(obs) => {
            if obs.shape() != (d, d) {
                return Err(dimension("ordering observable has the wrong dimension"));
            }
            Ok(hermitian_eig(obs)?.vectors)
        }
    }
}

/// Kraus form of `Π_n`: `{P_n} ∪ {√t_j |t_j⟩⟨e_k| : k ≥ n}`.
pub fn truncation_map(
    d: usize,
    n: usize,
    tau: &DensityOperator,
    ordering: Option<&CMatrix>,
) -> Result<KrausChannel> {
    if tau.dim() != d {
        return Err(dimension("τ must live on the output space"));
    }
    let basis = output_basis(d, n, ordering)?;
    let mut kraus = Vec::new();
    if n > 0 {
        kraus.push(basis.columns(0, n) * basis.columns(0, n).adjoint());
    }
    let eig = tau.eig();
    for (j, &t) in eig.values.iter().enumerate() {
        if t <= 0.0 {
            continue;
        }
        let v = eig.vector(j) * r(t.sqrt());
        for k in n..d {
            kraus.push(&v * basis.column(k).adjoint());
        }
    }
    KrausChannel::new(kraus)
}

/// Discrete c-q channel `ρ ↦ Σ_k ⟨k|ρ|k⟩ σ_k`.
pub fn cq_channel(states: &[DensityOperator], d_in: usize) -> Result<KrausChannel> {
    if states.len() != d_in {
        return Err(dimension(format!("need {d_in} output states, got {}", states.len())));
    }
    let d_out = states[0].dim();
    let mut kraus = Vec::new();
    for (k, sigma) in states.iter().enumerate() {
        if sigma.dim() != d_out {
            return Err(dimension("c-q output states have different dimensions"));
        }
        // re-validate: the list may hold sub-normalised operators
        let sigma = DensityOperator::new(sigma.mat().clone())?;
        let eig = sigma.eig();
        for (j, &s) in eig.values.iter().enumerate() {
            if s <= 0.0 {
                continue;
            }
            kraus.push(eig.vector(j) * r(s.sqrt()) * ket(d_in, k).adjoint());
        }
    }
    KrausChannel::new(kraus)
}

/// Hermitian operator basis of the `d × d` matrices.
pub fn hermitian_basis(d: usize) -> Vec<CMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(d * d);
    for j in 0..d {
        let mut m = CMatrix::zeros(d, d);
        m[(j, j)] = ONE;
        out.push(m);
    }
    for j in 0..d {
        for k in j + 1..d {
            let mut re = CMatrix::zeros(d, d);
            re[(j, k)] = r(s);
            re[(k, j)] = r(s);
            out.push(re);
            let mut im = CMatrix::zeros(d, d);
            im[(j, k)] = c(0.0, s);
            im[(k, j)] = c(0.0, -s);
            out.push(im);
        }
    }
    out
}

/// Outcome of the c-q test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CqCertificate {
    pub is_cq: bool,
    /// Largest `‖[Φ*(E_a), Φ*(E_b)]‖_max` over the Hermitian basis.
    pub max_commutator: f64,
}

/// Whether the dual image `Φ*(B(H_B))` is commutative within `tol`.
pub fn is_cq<M: CpMap + ?Sized>(map: &M, tol: f64) -> CqCertificate {
    let images = dual_images(map);
    let mut worst: f64 = 0.0;
    for a in 0..images.len() {
        for b in a + 1..images.len() {
            worst = worst.max(max_abs(&commutator(&images[a], &images[b])));
        }
    }
    CqCertificate { is_cq: worst <= tol, max_commutator: worst }
}

fn dual_images<M: CpMap + ?Sized>(map: &M) -> Vec<CMatrix> {
    hermitian_basis(map.d_out())
        .iter()
        .map(|e| map.dual_apply(e).expect("basis has output dimension"))
        .collect()
}

/// Outcome of the discrete-type c-q test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteCqCertificate {
    pub is_discrete: bool,
    pub max_commutator: f64,
    /// Largest `‖Φ(|u_k⟩⟨u_l|)‖_max`, `k ≠ l`, in the common eigenbasis.
    pub max_coherence_leak: f64,
    /// Columns `|u_k⟩` realising `Φ(ρ) = Σ_k ⟨u_k|ρ|u_k⟩ σ_k`.
    pub basis: Option<CMatrix>,
}

/// Whether the channel has the form `Σ_k ⟨u_k|ρ|u_k⟩ σ_k` for some
/// orthonormal basis, which is returned when it does.
pub fn is_cq_discrete<M: CpMap + ?Sized>(map: &M, tol: f64) -> DiscreteCqCertificate {
    let cert = is_cq(map, tol);
    if !cert.is_cq {
        return DiscreteCqCertificate {
            is_discrete: false,
            max_commutator: cert.max_commutator,
            max_coherence_leak: f64::NAN,
            basis: None,
        };
    }
    // a generic real combination of a commuting family separates its joint eigenspaces
    let images = dual_images(map);
    let d = map.d_in();
    let mut combo = CMatrix::zeros(d, d);
    for (i, img) in images.iter().enumerate() {
        let w = ((i as f64 + 1.0) * 0.618_033_988_749_894_9).fract() + 0.5;
        combo += img * r(w);
    }
    let u = hermitian_eig(&qmat::hermitian_part(&combo)).expect("Hermitian").vectors;
    let mut leak: f64 = 0.0;
    for k in 0..d {
        for l in 0..d {
            if k == l {
                continue;
            }
            let unit = u.column(k) * u.column(l).adjoint();
            let out = map.apply_matrix(&unit).expect("input dimension");
            leak = leak.max(max_abs(&out));
        }
    }
    let is_discrete = leak <= tol;
    DiscreteCqCertificate {
        is_discrete,
        max_commutator: cert.max_commutator,
        max_coherence_leak: leak,
        basis: is_discrete.then_some(u),
    }
}

/// `(Φ ⊗ Id)` style action of `map` on subsystem `site` of a composite operator.
pub fn apply_local<M: CpMap + ?Sized>(
    map: &M,
    x: &CMatrix,
    layout: &CompositeLayout,
    site: usize,
) -> Result<(CMatrix, CompositeLayout)> {
    if site >= layout.len() || layout.dims()[site] != map.d_in() {
        return Err(dimension(format!(
            "cannot apply a map with input dimension {} to subsystem {site} of {:?}",
            map.d_in(),
            layout.dims()
        )));
    }
    if x.nrows() != layout.total() || x.ncols() != layout.total() {
        return Err(dimension("operator does not match layout"));
    }
    let before: usize = layout.dims()[..site].iter().product();
    let after: usize = layout.dims()[site + 1..].iter().product();
    let left = identity(before);
    let right = identity(after);
    let mut out_dims = layout.dims().to_vec();
    out_dims[site] = map.d_out();
    let n_out = before * map.d_out() * after;
    let mut out = CMatrix::zeros(n_out, n_out);
    for k in map.kraus() {
        let full = qmat::tensor(&qmat::tensor(&left, k), &right);
        out += &full * x * full.adjoint();
    }
    let out_layout = CompositeLayout::new(out_dims, layout.labels().to_vec())?;
    Ok((out, out_layout))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::{diag_real, sample_state, tensor};

    fn hadamard() -> CMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        CMatrix::from_row_slice(2, 2, &[r(s), r(s), r(s), r(-s)])
    }

    #[test]
    fn apply_examples() {
        let rho = sample_state(2, 2, 1).unwrap();
        let id = KrausChannel::identity(2);
        assert!(max_abs(&(id.apply(&rho).unwrap().mat() - rho.mat())) < 1e-15);

        let tau = sample_state(3, 2, 2).unwrap();
        let rep = KrausChannel::replacement(2, &tau);
        assert!(max_abs(&(rep.apply(&rho).unwrap().mat() - tau.mat())) < 1e-12);

        let deph = KrausChannel::dephasing(2);
        let out = deph.apply(&rho).unwrap();
        let m = rho.mat();
        assert!(max_abs(&(out.mat() - diag_real(&[m[(0, 0)].re, m[(1, 1)].re]))) < 1e-15);
    }

    #[test]
    fn apply_rejects_wrong_dimension() {
        let rho = sample_state(3, 3, 1).unwrap();
        assert!(KrausChannel::identity(2).apply(&rho).is_err());
        assert!(KrausChannel::identity(2).dual_apply(&identity(3)).is_err());
    }

    #[test]
    fn dual_examples() {
        let ch = KrausChannel::random(2, 3, 2, 4).unwrap();
        assert!(max_abs(&(ch.dual_apply(&identity(3)).unwrap() - identity(2))) < 1e-12);

        let u = qmat::sample_isometry(2, 2, 5).unwrap();
        let uc = KrausChannel::unitary(u.clone()).unwrap();
        let a = qmat::hermitian_part(&qmat::gaussian_matrix(2, 2, &mut rand::SeedableRng::seed_from_u64(3u64) as &mut rand_chacha::ChaCha8Rng));
        assert!(max_abs(&(uc.dual_apply(&a).unwrap() - u.adjoint() * &a * &u)) < 1e-12);

        let d = KrausChannel::dephasing(2).dual_apply(&a).unwrap();
        assert!(max_abs(&(d - diag_real(&[a[(0, 0)].re, a[(1, 1)].re]))) < 1e-15);
    }

    #[test]
    fn stinespring_examples() {
        let u = qmat::sample_isometry(2, 2, 6).unwrap();
        let st = KrausChannel::unitary(u.clone()).unwrap().stinespring();
        assert_eq!(st.d_env(), 1);
        assert!(max_abs(&(&st.v - &u)) < 1e-15);
        assert_eq!(KrausChannel::dephasing(2).stinespring().d_env(), 2);
        for seed in 0..10 {
            let ch = KrausChannel::random(3, 2, 4, seed).unwrap();
            let st = ch.stinespring();
            assert!(st.isometry_residual() <= 1e-10);
            let rho = sample_state(3, 3, seed + 100).unwrap();
            let direct = ch.apply(&rho).unwrap();
            assert!(max_abs(&(st.channel_output(rho.mat()).unwrap() - direct.mat())) <= 1e-9);
            let env = ch.complementary().apply(&rho).unwrap();
            assert!(max_abs(&(st.environment_output(rho.mat()).unwrap() - env.mat())) <= 1e-9);
        }
    }

    #[test]
    fn complementary_examples() {
        let rho = sample_state(2, 2, 3).unwrap();
        let u = qmat::sample_isometry(2, 2, 7).unwrap();
        let comp = KrausChannel::unitary(u).unwrap().complementary();
        assert_eq!(comp.d_out(), 1);
        assert!((comp.apply(&rho).unwrap().mat()[(0, 0)].re - 1.0).abs() < 1e-12);

        let ch = KrausChannel::random(2, 2, 3, 8).unwrap();
        let mut rev = ch.kraus().to_vec();
        rev.reverse();
        let ch_rev = KrausChannel::new(rev).unwrap();
        let a = qmat::eigvalsh(ch.complementary().apply(&rho).unwrap().mat()).unwrap();
        let b = qmat::eigvalsh(ch_rev.complementary().apply(&rho).unwrap().mat()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn tensor_channel_examples() {
        let id = KrausChannel::identity(2).tensor(&KrausChannel::identity(3));
        assert_eq!(id.kraus().len(), 1);
        assert_eq!(id.kraus()[0], identity(6));

        let ch = KrausChannel::random(2, 2, 3, 9).unwrap();
        let prod = ch.tensor(&KrausChannel::identity(2));
        assert_eq!(prod.kraus().len(), 3);
        let rho = sample_state(2, 2, 10).unwrap();
        let sigma = sample_state(2, 1, 11).unwrap();
        let lhs = prod.apply(&rho.tensor(&sigma)).unwrap();
        let rhs = tensor(ch.apply(&rho).unwrap().mat(), sigma.mat());
        assert!(max_abs(&(lhs.mat() - rhs)) <= 1e-9);
        let two = ch.tensor(&KrausChannel::dephasing(2));
        assert_eq!(two.kraus().len(), 6);
    }

    #[test]
    fn truncation_examples() {
        let tau = DensityOperator::basis(3, 0).unwrap();
        let id3 = KrausChannel::identity(3);
        let t = id3.truncate(2, &tau, None).unwrap();
        let out = t.apply(&DensityOperator::basis(3, 2).unwrap()).unwrap();
        assert!(max_abs(&(out.mat() - tau.mat())) < 1e-15);

        let ch = KrausChannel::random(2, 3, 2, 12).unwrap();
        let full = ch.truncate(3, &tau, None).unwrap();
        let rho = sample_state(2, 2, 13).unwrap();
        assert!(max_abs(&(full.apply(&rho).unwrap().mat() - ch.apply(&rho).unwrap().mat())) < 1e-12);

        let tau_mixed = sample_state(3, 3, 14).unwrap();
        for n in 0..=3 {
            let tr = ch.truncate(n, &tau_mixed, None).unwrap();
            assert!((tr.apply(&rho).unwrap().trace() - 1.0).abs() <= 1e-10);
        }
        assert!(ch.truncate(4, &tau, None).is_err());
    }

    #[test]
    fn truncation_with_ordering_observable() {
        let tau = DensityOperator::basis(3, 2).unwrap();
        // top eigenvector of diag(0,1,2) is |2⟩
        let ordering = diag_real(&[0.0, 1.0, 2.0]);
        let t = KrausChannel::identity(3).truncate(1, &tau, Some(&ordering)).unwrap();
        let out = t.apply(&DensityOperator::basis(3, 0).unwrap()).unwrap();
        assert!(max_abs(&(out.mat() - tau.mat())) < 1e-12);
        let kept = t.apply(&DensityOperator::basis(3, 2).unwrap()).unwrap();
        assert!((kept.mat()[(2, 2)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cq_channel_examples() {
        let basis: Vec<_> = (0..3).map(|k| DensityOperator::basis(3, k).unwrap()).collect();
        let ch = cq_channel(&basis, 3).unwrap();
        let rho = sample_state(3, 3, 15).unwrap();
        let out = ch.apply(&rho).unwrap();
        let expected = KrausChannel::dephasing(3).apply(&rho).unwrap();
        assert!(max_abs(&(out.mat() - expected.mat())) < 1e-12);

        let tau = sample_state(2, 2, 16).unwrap();
        let constant = cq_channel(&[tau.clone(), tau.clone()], 2).unwrap();
        assert!(max_abs(&(constant.apply(&rho_2()).unwrap().mat() - tau.mat())) < 1e-12);

        let sig: Vec<_> = (0..2).map(|k| sample_state(2, 2, 20 + k).unwrap()).collect();
        let ch = cq_channel(&sig, 2).unwrap();
        for (j, s) in sig.iter().enumerate() {
            let out = ch.apply(&DensityOperator::basis(2, j).unwrap()).unwrap();
            assert!(max_abs(&(out.mat() - s.mat())) < 1e-12);
        }
        assert!(cq_channel(&sig, 3).is_err());
    }

    fn rho_2() -> DensityOperator {
        sample_state(2, 2, 99).unwrap()
    }

    #[test]
    fn cq_detection() {
        let sig: Vec<_> = (0..3).map(|k| sample_state(2, 2, 30 + k).unwrap()).collect();
        let ch = cq_channel(&sig, 3).unwrap();
        assert!(is_cq(&ch, CQ_TOL).is_cq);
        let disc = is_cq_discrete(&ch, CQ_TOL);
        assert!(disc.is_discrete);
        // recovered basis is the computational one up to phases and order
        let u = disc.basis.unwrap();
        for k in 0..3 {
            let col_max = (0..3).map(|i| u[(i, k)].norm()).fold(0.0, f64::max);
            assert!((col_max - 1.0).abs() < 1e-8);
        }

        let h = KrausChannel::unitary(hadamard()).unwrap();
        let cert = is_cq(&h, CQ_TOL);
        assert!(!cert.is_cq);
        assert!(cert.max_commutator > 0.1);
        assert!(!is_cq_discrete(&h, CQ_TOL).is_discrete);

        let rep = KrausChannel::replacement(3, &sample_state(2, 2, 40).unwrap());
        assert!(is_cq(&rep, CQ_TOL).is_cq);
        assert!(is_cq_discrete(&rep, CQ_TOL).is_discrete);
    }

    #[test]
    fn restriction() {
        let sig: Vec<_> = (0..3).map(|k| sample_state(2, 2, 50 + k).unwrap()).collect();
        let ch = cq_channel(&sig, 3).unwrap();
        let full = ch.restrict(&identity(3)).unwrap();
        assert_eq!(full, ch);
        let sub = ch.restrict(&identity(3).columns(0, 2).into_owned()).unwrap();
        assert_eq!(sub.d_in(), 2);
        assert!(is_cq_discrete(&sub, CQ_TOL).is_discrete);
        let bad = CMatrix::from_element(3, 1, ONE);
        assert!(ch.restrict(&bad).is_err());
    }

    #[test]
    fn canonicalize_reduces_rank() {
        let dup: Vec<CMatrix> = KrausChannel::dephasing(2)
            .kraus()
            .iter()
            .flat_map(|k| [k * r(0.6), k * r(0.8)])
            .collect();
        let ch = KrausChannel::new(dup).unwrap();
        let canon = ch.canonicalize();
        assert_eq!(canon.kraus().len(), 2);
        let rho = sample_state(2, 2, 60).unwrap();
        assert!(max_abs(&(canon.apply(&rho).unwrap().mat() - ch.apply(&rho).unwrap().mat())) < 1e-12);
    }

    #[test]
    fn validation_errors() {
        let bad = vec![diag_real(&[1.0, 0.5])];
        assert!(KrausChannel::new(bad.clone()).is_err());
        assert!(QuantumOperation::new(bad).is_ok());
        assert!(QuantumOperation::new(vec![diag_real(&[1.2, 0.5])]).is_err());
        assert!(KrausChannel::new(vec![]).is_err());
        let op = KrausChannel::random(2, 3, 2, 70).unwrap().compress(2, None).unwrap();
        assert!(!op.is_trace_preserving());
    }

    #[test]
    fn local_application_matches_tensor() {
        let ch = KrausChannel::random(2, 3, 2, 80).unwrap();
        let rho = sample_state(2, 2, 81).unwrap();
        let sigma = sample_state(2, 2, 82).unwrap();
        let layout = CompositeLayout::from_dims(&[2, 2]).unwrap();
        let (out, l) = apply_local(&ch, &tensor(sigma.mat(), rho.mat()), &layout, 1).unwrap();
        assert_eq!(l.dims(), &[2, 3]);
        let expected = tensor(sigma.mat(), ch.apply(&rho).unwrap().mat());
        assert!(max_abs(&(out - expected)) < 1e-12);
    }
}
