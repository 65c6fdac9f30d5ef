//! Dense complex-matrix substrate.
//!
//! Matrices are `nalgebra::DMatrix<Complex<f64>>`. Hermitian spectral work
//! goes through [`hermitian_eig`], which is the only place the crate calls
//! into an eigensolver. Composite systems are described by a
//! [`CompositeLayout`]; the leftmost subsystem is the most significant
//! digit of the row index (standard Kronecker ordering).

use nalgebra::{Complex, DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{dimension, invariant, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Tolerance used for the state invariants (Hermiticity, PSD, trace).
pub const STATE_TOL: f64 = 1e-10;

/// Relative Hermiticity tolerance accepted by [`hermitian_eig`].
pub const HERMITIAN_TOL: f64 = 1e-9;

pub const ZERO: C64 = Complex { re: 0.0, im: 0.0 };
pub const ONE: C64 = Complex { re: 1.0, im: 0.0 };

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

#[inline]
pub fn r(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

/// Computational basis vector `|k⟩` in dimension `d`.
pub fn ket(d: usize, k: usize) -> CVector {
    let mut v = CVector::zeros(d);
    v[k] = ONE;
    v
}

pub fn projector(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

pub fn diag_real(values: &[f64]) -> CMatrix {
    let mut m = CMatrix::zeros(values.len(), values.len());
    for (i, &x) in values.iter().enumerate() {
        m[(i, i)] = r(x);
    }
    m
}

pub fn from_real(m: &DMatrix<f64>) -> CMatrix {
    m.map(r)
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn hermitian_residual(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    max_abs(&(m - m.adjoint()))
}

/// `(m + m†) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * r(0.5)
}

pub fn trace_re(m: &CMatrix) -> f64 {
    m.trace().re
}

/// `Tr(a b)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Spectral decomposition of a Hermitian matrix, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    /// Unitary whose columns are the eigenvectors, in the order of `values`.
    pub vectors: CMatrix,
}

impl Eigh {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `U f(Λ) U†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let fj = f(self.values[j]);
            scaled.column_mut(j).scale_mut(fj);
        }
        scaled * self.vectors.adjoint()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.map(|x| x)
    }

    pub fn vector(&self, j: usize) -> CVector {
        self.vectors.column(j).into_owned()
    }
}

/// Eigen-decomposition of a Hermitian matrix.
///
/// The input is symmetrised before decomposition; inputs whose
/// anti-Hermitian part exceeds `HERMITIAN_TOL · max(1, ‖A‖_max)` are rejected.
pub fn hermitian_eig(a: &CMatrix) -> Result<Eigh> {
    if !a.is_square() {
        return Err(dimension(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let n = a.nrows();
    let scale = max_abs(a).max(1.0);
    let resid = hermitian_residual(a);
    if !(resid <= HERMITIAN_TOL * scale) {
        return Err(invariant(format!(
            "matrix is not Hermitian (anti-Hermitian residual {resid:.3e})"
        )));
    }
    if n == 0 {
        return Ok(Eigh { values: vec![], vectors: CMatrix::zeros(0, 0) });
    }
    let h = faer::Mat::<faer::c64>::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5);
    let evd = h
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| crate::error::Error::Numerical(format!("eigensolver failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    // faer returns ascending order
    let values: Vec<f64> = (0..n).rev().map(|j| s[j].re).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| u[(i, n - 1 - j)]);
    Ok(Eigh { values, vectors })
}

/// Eigenvalues only, descending.
pub fn eigvalsh(a: &CMatrix) -> Result<Vec<f64>> {
    Ok(hermitian_eig(a)?.values)
}

/// `f(A)` for Hermitian `A`.
pub fn hermitian_fn(a: &CMatrix, f: impl Fn(f64) -> f64) -> Result<CMatrix> {
    Ok(hermitian_eig(a)?.map(f))
}

/// Principal square root of a PSD matrix (negative noise clipped).
pub fn sqrtm_psd(a: &CMatrix) -> Result<CMatrix> {
    hermitian_fn(a, |x| x.max(0.0).sqrt())
}

/// Kronecker product `a ⊗ b`.
pub fn tensor(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn tensor_vec(a: &CVector, b: &CVector) -> CVector {
    a.kronecker(b)
}

/// Kronecker product of a list, left to right.
pub fn tensor_all<'a>(ops: impl IntoIterator<Item = &'a CMatrix>) -> CMatrix {
    let mut acc = CMatrix::identity(1, 1);
    for op in ops {
        acc = acc.kronecker(op);
    }
    acc
}

/// Subsystem bookkeeping for composite operators.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompositeLayout {
    dims: Vec<usize>,
    labels: Vec<String>,
}

impl CompositeLayout {
    pub fn new(dims: Vec<usize>, labels: Vec<String>) -> Result<Self> {
        if dims.len() != labels.len() {
            return Err(dimension("layout needs one label per subsystem"));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(invariant("subsystem dimensions must be positive"));
        }
        Ok(Self { dims, labels })
    }

    /// Layout with labels `A`, `B`, `C`, ...
    pub fn from_dims(dims: &[usize]) -> Result<Self> {
        let labels = (0..dims.len()).map(|i| default_label(i)).collect();
        Self::new(dims.to_vec(), labels)
    }

    pub fn labeled(pairs: &[(&str, usize)]) -> Result<Self> {
        Self::new(
            pairs.iter().map(|p| p.1).collect(),
            pairs.iter().map(|p| p.0.to_string()).collect(),
        )
    }

    pub fn single(label: &str, dim: usize) -> Self {
        Self { dims: vec![dim], labels: vec![label.to_string()] }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn concat(&self, other: &CompositeLayout) -> CompositeLayout {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        let mut labels = self.labels.clone();
        labels.extend(other.labels.iter().cloned());
        CompositeLayout { dims, labels }
    }

    pub fn select(&self, subsystems: &[usize]) -> CompositeLayout {
        CompositeLayout {
            dims: subsystems.iter().map(|&k| self.dims[k]).collect(),
            labels: subsystems.iter().map(|&k| self.labels[k].clone()).collect(),
        }
    }

    fn check_operator(&self, x: &CMatrix) -> Result<()> {
        if x.nrows() != self.total() || x.ncols() != self.total() {
            return Err(dimension(format!(
                "operator is {}x{} but layout {:?} has total dimension {}",
                x.nrows(),
                x.ncols(),
                self.dims,
                self.total()
            )));
        }
        Ok(())
    }

    /// Digits of a flat index.
    fn digits(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for k in (0..self.dims.len()).rev() {
            out[k] = idx % self.dims[k];
            idx /= self.dims[k];
        }
        out
    }

    fn flat(&self, digits: impl Iterator<Item = usize>, which: &[usize]) -> usize {
        let mut idx = 0;
        for (d, &k) in digits.zip(which) {
            idx = idx * self.dims[k] + d;
        }
        idx
    }
}

fn default_label(i: usize) -> String {
    const NAMES: [&str; 8] = ["A", "B", "C", "D", "E", "F", "G", "H"];
    NAMES.get(i).map(|s| s.to_string()).unwrap_or_else(|| format!("S{i}"))
}

fn check_subsystems(layout: &CompositeLayout, subs: &[usize]) -> Result<Vec<usize>> {
    let mut sorted = subs.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != subs.len() {
        return Err(invariant(format!("repeated subsystem index in {subs:?}")));
    }
    if let Some(&bad) = sorted.iter().find(|&&k| k >= layout.len()) {
        return Err(invariant(format!(
            "subsystem index {bad} out of range for layout with {} subsystems",
            layout.len()
        )));
    }
    Ok(sorted)
}

/// Partial trace keeping the subsystems in `keep` (returned in ascending
/// subsystem order).
pub fn partial_trace(x: &CMatrix, layout: &CompositeLayout, keep: &[usize]) -> Result<CMatrix> {
    layout.check_operator(x)?;
    let keep = check_subsystems(layout, keep)?;
    let traced: Vec<usize> = (0..layout.len()).filter(|k| !keep.contains(k)).collect();
    let d_keep: usize = keep.iter().map(|&k| layout.dims[k]).product();
    let d_tr: usize = traced.iter().map(|&k| layout.dims[k]).product();

    // full index for every (kept, traced) pair
    let mut table = vec![0usize; d_keep * d_tr];
    for full in 0..layout.total() {
        let digits = layout.digits(full);
        let kidx = layout.flat(keep.iter().map(|&k| digits[k]), &keep);
        let tidx = layout.flat(traced.iter().map(|&k| digits[k]), &traced);
        table[kidx * d_tr + tidx] = full;
    }
    let mut out = CMatrix::zeros(d_keep, d_keep);
    for i in 0..d_keep {
        for j in 0..d_keep {
            let mut acc = ZERO;
            for t in 0..d_tr {
                acc += x[(table[i * d_tr + t], table[j * d_tr + t])];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// Reorders the tensor factors of `x` so that new subsystem `j` is old
/// subsystem `order[j]`.
pub fn permute_subsystems(
    x: &CMatrix,
    layout: &CompositeLayout,
    order: &[usize],
) -> Result<(CMatrix, CompositeLayout)> {
    layout.check_operator(x)?;
    let sorted = check_subsystems(layout, order)?;
    if sorted.len() != layout.len() {
        return Err(invariant("permutation must mention every subsystem once"));
    }
    let new_layout = layout.select(order);
    let n = layout.total();
    let mut map = vec![0usize; n];
    for (old, slot) in map.iter_mut().enumerate() {
        let digits = layout.digits(old);
        *slot = layout.flat(order.iter().map(|&k| digits[k]), order);
    }
    let mut out = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(map[i], map[j])] = x[(i, j)];
        }
    }
    Ok((out, new_layout))
}

/// Whether a density operator is normalised or only trace-bounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceClass {
    UnitTrace,
    SubUnitTrace,
}

/// Hermitian positive semidefinite matrix of trace one (or at most one).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityOperator {
    mat: CMatrix,
    class: TraceClass,
}

impl DensityOperator {
    /// Validates a unit-trace state.
    pub fn new(mat: CMatrix) -> Result<Self> {
        Self::with_class(mat, TraceClass::UnitTrace)
    }

    /// Validates an element of the trace-≤1 cone.
    pub fn sub_normalized(mat: CMatrix) -> Result<Self> {
        Self::with_class(mat, TraceClass::SubUnitTrace)
    }

    pub fn with_class(mat: CMatrix, class: TraceClass) -> Result<Self> {
        check_psd(&mat)?;
        let tr = trace_re(&mat);
        match class {
            TraceClass::UnitTrace if (tr - 1.0).abs() > STATE_TOL => {
                return Err(invariant(format!("state trace is {tr}, expected 1")));
            }
            TraceClass::SubUnitTrace if tr > 1.0 + STATE_TOL => {
                return Err(invariant(format!("operator trace {tr} exceeds 1")));
            }
            _ => {}
        }
        Ok(Self { mat: hermitian_part(&mat), class })
    }

    /// Skips validation; callers guarantee the invariants.
    pub(crate) fn from_trusted(mat: CMatrix, class: TraceClass) -> Self {
        Self { mat: hermitian_part(&mat), class }
    }

    pub fn pure(v: &CVector) -> Result<Self> {
        let n = v.norm();
        if (n - 1.0).abs() > STATE_TOL {
            return Err(invariant(format!("state vector has norm {n}")));
        }
        Ok(Self::from_trusted(projector(v), TraceClass::UnitTrace))
    }

    pub fn basis(d: usize, k: usize) -> Result<Self> {
        if k >= d {
            return Err(dimension(format!("basis index {k} out of range for dimension {d}")));
        }
        Ok(Self::from_trusted(projector(&ket(d, k)), TraceClass::UnitTrace))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self::from_trusted(identity(d) * r(1.0 / d as f64), TraceClass::UnitTrace)
    }

    pub fn diagonal(p: &[f64]) -> Result<Self> {
        Self::new(diag_real(p))
    }

    pub fn mat(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_mat(self) -> CMatrix {
        self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn class(&self) -> TraceClass {
        self.class
    }

    pub fn trace(&self) -> f64 {
        trace_re(&self.mat)
    }

    /// Spectrum, descending, with noise in `[-STATE_TOL, 0]` clipped to zero.
    pub fn eigenvalues(&self) -> Vec<f64> {
        eigvalsh(&self.mat)
            .expect("density operators are Hermitian")
            .into_iter()
            .map(|x| x.max(0.0))
            .collect()
    }

    pub fn eig(&self) -> Eigh {
        hermitian_eig(&self.mat).expect("density operators are Hermitian")
    }

    /// Number of eigenvalues above `threshold`.
    pub fn rank(&self, threshold: f64) -> usize {
        self.eigenvalues().iter().filter(|&&x| x > threshold).count()
    }

    pub fn expectation(&self, obs: &CMatrix) -> f64 {
        trace_product(&self.mat, obs).re
    }

    pub fn tensor(&self, other: &DensityOperator) -> DensityOperator {
        let class = if self.class == TraceClass::UnitTrace && other.class == TraceClass::UnitTrace {
            TraceClass::UnitTrace
        } else {
            TraceClass::SubUnitTrace
        };
        Self::from_trusted(tensor(&self.mat, &other.mat), class)
    }

    /// Convex combination `(1-t) self + t other`.
    pub fn mix(&self, other: &DensityOperator, t: f64) -> DensityOperator {
        Self::from_trusted(&self.mat * r(1.0 - t) + &other.mat * r(t), self.class)
    }
}

fn check_psd(mat: &CMatrix) -> Result<()> {
    if !mat.is_square() {
        return Err(dimension("density operator must be square"));
    }
    let resid = hermitian_residual(mat);
    if !(resid <= STATE_TOL) {
        return Err(invariant(format!("operator is not Hermitian (residual {resid:.3e})")));
    }
    let min = eigvalsh(mat)?.last().copied().unwrap_or(0.0);
    if min < -STATE_TOL {
        return Err(invariant(format!("operator is not PSD (min eigenvalue {min:.3e})")));
    }
    Ok(())
}

/// Unit vector on a composite space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PureVector {
    vec: CVector,
    layout: CompositeLayout,
}

impl PureVector {
    pub fn new(vec: CVector, layout: CompositeLayout) -> Result<Self> {
        if vec.len() != layout.total() {
            return Err(dimension(format!(
                "vector length {} does not match layout dimension {}",
                vec.len(),
                layout.total()
            )));
        }
        let n = vec.norm();
        if (n - 1.0).abs() > STATE_TOL {
            return Err(invariant(format!("pure vector has norm {n}")));
        }
        Ok(Self { vec, layout })
    }

    pub fn vec(&self) -> &CVector {
        &self.vec
    }

    pub fn layout(&self) -> &CompositeLayout {
        &self.layout
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator::from_trusted(projector(&self.vec), TraceClass::UnitTrace)
    }

    /// Reduced state on `keep`.
    pub fn reduced(&self, keep: &[usize]) -> Result<DensityOperator> {
        let m = partial_trace(&projector(&self.vec), &self.layout, keep)?;
        Ok(DensityOperator::from_trusted(m, TraceClass::UnitTrace))
    }

    /// Coefficients as a `dim(first) × dim(rest)` matrix.
    pub fn as_bipartite_matrix(&self) -> CMatrix {
        let d0 = self.layout.dims()[0];
        let rest = self.vec.len() / d0;
        CMatrix::from_fn(d0, rest, |i, j| self.vec[i * rest + j])
    }
}

/// Canonical purification `Σ_k √λ_k |e_k⟩ ⊗ |k⟩` on `A ⊗ R`, with the
/// eigenvalues in descending order and `dim R = dim A`.
pub fn purify(rho: &DensityOperator) -> PureVector {
    let d = rho.dim();
    let eig = rho.eig();
    let mut v = CVector::zeros(d * d);
    for k in 0..d {
        let w = eig.values[k].max(0.0).sqrt();
        if w == 0.0 {
            continue;
        }
        for a in 0..d {
            v[a * d + k] += eig.vectors[(a, k)] * r(w);
        }
    }
    let norm = v.norm();
    if norm > 0.0 {
        v.unscale_mut(norm);
    }
    let layout = CompositeLayout::labeled(&[("A", d), ("R", d)]).expect("positive dims");
    PureVector { vec: v, layout }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix of i.i.d. standard complex Gaussian entries.
pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut impl rand::Rng) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c(re * s, im * s)
    })
}

/// Random state of the given rank: partial trace of a Gaussian pure vector
/// on `C^dim ⊗ C^rank`.
pub fn sample_state(dim: usize, rank: usize, seed: u64) -> Result<DensityOperator> {
    sample_state_with(dim, rank, &mut rng(seed))
}

pub fn sample_state_with(dim: usize, rank: usize, rng: &mut impl rand::Rng) -> Result<DensityOperator> {
    if dim == 0 || rank == 0 || rank > dim {
        return Err(invariant(format!("need 1 <= rank <= dim, got rank {rank}, dim {dim}")));
    }
    let g = gaussian_matrix(dim, rank, rng);
    let m = &g * g.adjoint();
    let tr = trace_re(&m);
    Ok(DensityOperator::from_trusted(m * r(1.0 / tr), TraceClass::UnitTrace))
}

pub fn sample_pure(dim: usize, seed: u64) -> Result<PureVector> {
    sample_pure_with(dim, &mut rng(seed))
}

pub fn sample_pure_with(dim: usize, rng: &mut impl rand::Rng) -> Result<PureVector> {
    if dim == 0 {
        return Err(invariant("dimension must be positive"));
    }
    let g = gaussian_matrix(dim, 1, rng);
    let v: CVector = g.column(0).into_owned();
    let n = v.norm();
    Ok(PureVector { vec: v / r(n), layout: CompositeLayout::single("A", dim) })
}

/// Random isometry `C^d_in → C^d_out` from the phase-corrected QR factor of
/// a Gaussian matrix.
pub fn sample_isometry(d_in: usize, d_out: usize, seed: u64) -> Result<CMatrix> {
    sample_isometry_with(d_in, d_out, &mut rng(seed))
}

pub fn sample_isometry_with(d_in: usize, d_out: usize, rng: &mut impl rand::Rng) -> Result<CMatrix> {
    if d_in == 0 || d_out < d_in {
        return Err(invariant(format!("isometry needs 0 < d_in <= d_out, got {d_in} -> {d_out}")));
    }
    let g = gaussian_matrix(d_out, d_in, rng);
    Ok(orthonormalize(&g))
}

/// Orthonormal columns spanning the column space of a full-rank tall matrix.
pub fn orthonormalize(g: &CMatrix) -> CMatrix {
    let qr = g.clone().qr();
    let mut q = qr.q();
    let rr = qr.r();
    for j in 0..q.ncols() {
        let d = rr[(j, j)];
        let n = d.norm();
        if n > 0.0 {
            let phase = d / r(n);
            for i in 0..q.nrows() {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}

/// `‖V†V − I‖_max`.
pub fn isometry_residual(v: &CMatrix) -> f64 {
    max_abs(&(v.adjoint() * v - identity(v.ncols())))
}
