//! Entropic functionals: entropies on the trace-≤1 cone, the extended
//! relative entropy, conditional entropy, χ-quantities, quantum mutual
//! information and coherent information. Everything is in bits.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::channel::{apply_local, CpMap, KrausChannel};
use crate::error::{dimension, invariant, Error, Result};
use crate::qmat::{
    self, hermitian_eig, partial_trace, permute_subsystems, purify, r, trace_re, CMatrix,
    CompositeLayout, DensityOperator, TraceClass, STATE_TOL,
};

/// Eigenvalues below this threshold are outside the support.
pub const SUPPORT_TOL: f64 = 1e-12;

/// Weight of `A` on the kernel of `B` above which `H(A‖B) = +∞`.
pub const LEAK_TOL: f64 = 1e-10;

/// `x log₂ x` with `0 log 0 = 0`; small negative noise is clipped.
#[inline]
pub fn xlog2x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

/// Shannon entropy of a (possibly unnormalised) nonnegative vector, `−Σ p log p`.
pub fn shannon(p: &[f64]) -> f64 {
    -p.iter().map(|&x| xlog2x(x)).sum::<f64>()
}

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    shannon(&[p, 1.0 - p])
}

/// The two entropies of an operator `A ≥ 0`, `Tr A ≤ 1`:
/// `S(A) = −Tr A log A` and `H(A) = S(A) + Tr A log Tr A`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyPair {
    pub s: f64,
    pub h: f64,
}

pub fn entropy_of_spectrum(values: &[f64]) -> EntropyPair {
    let s = shannon(values);
    let t: f64 = values.iter().map(|x| x.max(0.0)).sum();
    EntropyPair { s, h: s + xlog2x(t) }
}

/// `S` and `H` of a PSD operator.
pub fn entropy(a: &CMatrix) -> Result<EntropyPair> {
    let values = psd_spectrum(a)?;
    Ok(entropy_of_spectrum(&values))
}

/// Von Neumann entropy `H(ρ)` of a state (the `H` variant for sub-normalised input).
pub fn von_neumann(rho: &DensityOperator) -> f64 {
    entropy_of_spectrum(&rho.eigenvalues()).h
}

/// `H(A)` of a PSD matrix.
pub fn entropy_h(a: &CMatrix) -> Result<f64> {
    Ok(entropy(a)?.h)
}

/// `S(A)` of a PSD matrix.
pub fn entropy_s(a: &CMatrix) -> Result<f64> {
    Ok(entropy(a)?.s)
}

fn psd_spectrum(a: &CMatrix) -> Result<Vec<f64>> {
    let values = qmat::eigvalsh(a)?;
    if let Some(&min) = values.last() {
        if min < -STATE_TOL {
            return Err(invariant(format!("operator is not PSD (min eigenvalue {min:.3e})")));
        }
    }
    Ok(values.into_iter().map(|x| x.max(0.0)).collect())
}

/// A relative entropy value, possibly `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RelEntropy {
    Finite(f64),
    Infinite,
}

impl RelEntropy {
    pub fn is_infinite(self) -> bool {
        matches!(self, RelEntropy::Infinite)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            RelEntropy::Finite(x) => Some(x),
            RelEntropy::Infinite => None,
        }
    }

    /// The value as an `f64`, with `+∞` mapped to `f64::INFINITY`.
    pub fn value(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    fn expect_finite(self, what: &str) -> Result<f64> {
        self.finite()
            .ok_or_else(|| Error::Numerical(format!("{what} is infinite at finite dimension")))
    }
}

impl fmt::Display for RelEntropy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RelEntropy::Finite(x) => write!(f, "{x}"),
            RelEntropy::Infinite => write!(f, "+inf"),
        }
    }
}

impl Serialize for RelEntropy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            RelEntropy::Finite(x) => s.serialize_f64(*x),
            RelEntropy::Infinite => s.serialize_str("+inf"),
        }
    }
}

/// Extended relative entropy
/// `H(A‖B) = Σ_i ⟨i|A ln A − A ln B + B − A|i⟩ / ln 2` for `A, B ≥ 0`.
///
/// Reduces to the usual quantum relative entropy when both traces are one.
pub fn relative_entropy(a: &CMatrix, b: &CMatrix) -> Result<RelEntropy> {
    if a.shape() != b.shape() {
        return Err(dimension(format!(
            "relative entropy operands are {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let ea = hermitian_eig(a)?;
    let eb = hermitian_eig(b)?;
    for (name, e) in [("first", &ea), ("second", &eb)] {
        if let Some(&min) = e.values.last() {
            if min < -STATE_TOL {
                return Err(invariant(format!(
                    "{name} argument is not PSD (min eigenvalue {min:.3e})"
                )));
            }
        }
    }
    // diagonal of A in the eigenbasis of B
    let a_in_b = eb.vectors.adjoint() * a * &eb.vectors;
    let mut leak = 0.0;
    let mut cross = 0.0;
    for (j, &bj) in eb.values.iter().enumerate() {
        let w = a_in_b[(j, j)].re;
        if bj < SUPPORT_TOL {
            leak += w;
        } else {
            cross += w * bj.ln();
        }
    }
    if leak > LEAK_TOL {
        return Ok(RelEntropy::Infinite);
    }
    let self_term: f64 = ea.values.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum();
    let nats = self_term - cross + trace_re(b) - trace_re(a);
    Ok(RelEntropy::Finite(nats / std::f64::consts::LN_2))
}

/// Conditional entropy `H(A|B) = H(ρ_A) − H(ρ_AB ‖ ρ_A ⊗ ρ_B)` where `A`
/// and `B` are disjoint groups of subsystems of `layout`.
pub fn conditional_entropy(
    rho: &CMatrix,
    layout: &CompositeLayout,
    a: &[usize],
    b: &[usize],
) -> Result<f64> {
    let (rho_ab, l_ab, na) = grouped_marginal(rho, layout, a, b)?;
    let all: Vec<usize> = (0..l_ab.len()).collect();
    let rho_a = partial_trace(&rho_ab, &l_ab, &all[..na])?;
    let rho_b = partial_trace(&rho_ab, &l_ab, &all[na..])?;
    let product = qmat::tensor(&rho_a, &rho_b);
    let mutual = relative_entropy(&rho_ab, &product)?.expect_finite("H(ρ_AB‖ρ_A⊗ρ_B)")?;
    Ok(entropy_h(&rho_a)? - mutual)
}

/// The finite-dimensional form `H(ρ_AB) − H(ρ_B)`.
pub fn conditional_entropy_difference(
    rho: &CMatrix,
    layout: &CompositeLayout,
    a: &[usize],
    b: &[usize],
) -> Result<f64> {
    let (rho_ab, l_ab, na) = grouped_marginal(rho, layout, a, b)?;
    let all: Vec<usize> = (0..l_ab.len()).collect();
    let rho_b = partial_trace(&rho_ab, &l_ab, &all[na..])?;
    Ok(entropy_h(&rho_ab)? - entropy_h(&rho_b)?)
}

/// Marginal on `a ∪ b`, reordered so that the `a` factors come first.
fn grouped_marginal(
    rho: &CMatrix,
    layout: &CompositeLayout,
    a: &[usize],
    b: &[usize],
) -> Result<(CMatrix, CompositeLayout, usize)> {
    if a.is_empty() || b.is_empty() {
        return Err(invariant("conditional entropy needs nonempty A and B"));
    }
    if a.iter().any(|k| b.contains(k)) {
        return Err(invariant("A and B must be disjoint"));
    }
    let mut keep: Vec<usize> = a.iter().chain(b).copied().collect();
    keep.sort_unstable();
    let reduced = partial_trace(rho, layout, &keep)?;
    let l_red = layout.select(&keep);
    // position of each requested subsystem inside `keep`
    let order: Vec<usize> = a
        .iter()
        .chain(b)
        .map(|k| keep.iter().position(|x| x == k).expect("kept"))
        .collect();
    let (m, l) = permute_subsystems(&reduced, &l_red, &order)?;
    Ok((m, l, a.len()))
}

/// Finitely supported probability measure on states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    weights: Vec<f64>,
    states: Vec<DensityOperator>,
}

impl Ensemble {
    pub fn new(weights: Vec<f64>, states: Vec<DensityOperator>) -> Result<Self> {
        if weights.is_empty() || weights.len() != states.len() {
            return Err(invariant("ensemble needs one weight per state and at least one member"));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(invariant("ensemble weights must be nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > STATE_TOL {
            return Err(invariant(format!("ensemble weights sum to {total}")));
        }
        let d = states[0].dim();
        if states.iter().any(|s| s.dim() != d) {
            return Err(dimension("ensemble members have different dimensions"));
        }
        if states.iter().any(|s| s.class() != TraceClass::UnitTrace) {
            return Err(invariant("ensemble members must be unit-trace states"));
        }
        Ok(Self { weights, states })
    }

    /// Ensemble from unnormalised members `X_i = π_i ρ_i`; zero members are dropped.
    pub fn from_parts(parts: &[CMatrix]) -> Result<Self> {
        let traces: Vec<f64> = parts.iter().map(trace_re).collect();
        let total: f64 = traces.iter().sum();
        if !(total > 0.0) {
            return Err(invariant("ensemble parts have zero total weight"));
        }
        let mut weights = Vec::new();
        let mut states = Vec::new();
        for (x, &t) in parts.iter().zip(&traces) {
            if t <= 1e-300 {
                continue;
            }
            weights.push(t / total);
            states.push(DensityOperator::from_trusted(x * r(1.0 / t), TraceClass::UnitTrace));
        }
        Self::new(weights, states)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn states(&self) -> &[DensityOperator] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn members(&self) -> impl Iterator<Item = (f64, &DensityOperator)> {
        self.weights.iter().copied().zip(&self.states)
    }

    /// Average state `Σ π_i ρ_i`.
    pub fn barycenter(&self) -> DensityOperator {
        let d = self.dim();
        let m = self
            .members()
            .fold(CMatrix::zeros(d, d), |acc, (w, s)| acc + s.mat() * r(w));
        DensityOperator::from_trusted(m, TraceClass::UnitTrace)
    }
}

/// `χ(μ) = Σ π_i H(ρ_i ‖ ρ̄)`.
pub fn chi_quantity(mu: &Ensemble) -> f64 {
    let bar = mu.barycenter();
    mu.members()
        .filter(|(w, _)| *w > 0.0)
        .map(|(w, s)| {
            w * relative_entropy(s.mat(), bar.mat())
                .expect("ensemble members are states")
                .finite()
                .expect("members lie in the support of the barycenter")
        })
        .sum()
}

/// `H(ρ̄) − Σ π_i H(ρ_i)`.
pub fn chi_quantity_entropic(mu: &Ensemble) -> f64 {
    let members: f64 = mu.members().map(|(w, s)| w * von_neumann(s)).sum();
    von_neumann(&mu.barycenter()) - members
}

/// χ-quantity of the image ensemble `{π_i, Φ(ρ_i)}`.
///
/// Channels use the relative-entropy form; trace-decreasing operations use
/// `S(Φ(ρ̄)) − Σ π_i S(Φ(ρ_i))`.
pub fn chi_through<M: CpMap + ?Sized>(map: &M, mu: &Ensemble) -> Result<f64> {
    if map.d_in() != mu.dim() {
        return Err(dimension(format!(
            "ensemble dimension {} does not match map input {}",
            mu.dim(),
            map.d_in()
        )));
    }
    let bar_out = map.apply_matrix(mu.barycenter().mat())?;
    if map.is_trace_preserving() {
        let mut acc = 0.0;
        for (w, s) in mu.members().filter(|(w, _)| *w > 0.0) {
            let out = map.apply_matrix(s.mat())?;
            acc += w * relative_entropy(&out, &bar_out)?.expect_finite("χ term")?;
        }
        Ok(acc)
    } else {
        let mut acc = entropy_s(&bar_out)?;
        for (w, s) in mu.members() {
            acc -= w * entropy_s(&map.apply_matrix(s.mat())?)?;
        }
        Ok(acc)
    }
}

fn check_input<M: CpMap + ?Sized>(rho: &DensityOperator, map: &M) -> Result<()> {
    if rho.dim() != map.d_in() {
        return Err(dimension(format!(
            "state dimension {} does not match channel input {}",
            rho.dim(),
            map.d_in()
        )));
    }
    Ok(())
}

/// Quantum mutual information
/// `I(ρ, Φ) = H((Φ ⊗ Id_R)(ρ̂) ‖ Φ(ρ) ⊗ ϱ)` with `ρ̂` the canonical
/// purification and `ϱ = Tr_A ρ̂`.
///
/// The joint output is `Σ_i |c_i⟩⟨c_i|` with `c_i = vec(K_i ψ)`, so its
/// spectrum is that of the Gram matrix `⟨c_i|c_j⟩`, and the cross term
/// splits as `Σ_i ⟨c_i| ln Φ(ρ) ⊗ I + I ⊗ ln ϱ |c_i⟩`. Neither side is
/// formed at size `d_B d_R`.
pub fn mutual_information<M: CpMap + ?Sized>(rho: &DensityOperator, map: &M) -> Result<f64> {
    check_input(rho, map)?;
    let purification = purify(rho);
    let psi = purification.as_bipartite_matrix();
    let ws: Vec<CMatrix> = map.kraus().iter().map(|k| k * &psi).collect();
    let n = ws.len();
    let mut gram = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = qmat::trace_product(&ws[i].adjoint(), &ws[j]);
            gram[(i, j)] = v;
            gram[(j, i)] = v.conj();
        }
    }
    let self_term: f64 = qmat::eigvalsh(&gram)?.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum();
    let out = hermitian_eig(&map.apply_matrix(rho.mat())?)?;
    let reference = hermitian_eig(purification.reduced(&[1])?.mat())?;
    let ln_on_support = |e: &qmat::Eigh| e.map(|x| if x >= SUPPORT_TOL { x.ln() } else { 0.0 });
    let support = |e: &qmat::Eigh| e.map(|x| if x >= SUPPORT_TOL { 1.0 } else { 0.0 });
    let (ln_out, ln_ref_t) = (ln_on_support(&out), ln_on_support(&reference).transpose());
    let (p_out, p_ref_t) = (support(&out), support(&reference).transpose());
    let mut cross = 0.0;
    let mut kept = 0.0;
    for w in &ws {
        let wa = w.adjoint();
        cross += qmat::trace_product(&wa, &(&ln_out * w)).re + qmat::trace_product(&(&wa * w), &ln_ref_t).re;
        kept += qmat::trace_product(&wa, &(&p_out * w * &p_ref_t)).re;
    }
    if rho.trace() - kept > LEAK_TOL {
        return RelEntropy::Infinite.expect_finite("mutual information");
    }
    Ok((self_term - cross) / std::f64::consts::LN_2)
}

/// `I(ρ, Φ) = H(ρ) + H(Φ(ρ)) − H(Φ̂(ρ))`.
pub fn mutual_information_entropic<M: CpMap + ?Sized>(rho: &DensityOperator, map: &M) -> Result<f64> {
    check_input(rho, map)?;
    let out = map.apply_matrix(rho.mat())?;
    let env = complementary_output(map, rho.mat());
    Ok(von_neumann(rho) + entropy_h(&out)? - entropy_h(&env)?)
}

/// `Φ̂(ρ)_{ij} = Tr(K_i ρ K_j†)`.
pub(crate) fn complementary_output<M: CpMap + ?Sized>(map: &M, rho: &CMatrix) -> CMatrix {
    let ks = map.kraus();
    let applied: Vec<CMatrix> = ks.iter().map(|k| k * rho).collect();
    let n = ks.len();
    let mut out = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = qmat::trace_product(&applied[i], &ks[j].adjoint());
            out[(i, j)] = v;
            out[(j, i)] = v.conj();
        }
    }
    out
}

/// `I_c(ρ, Φ) = I(ρ, Φ) − H(ρ)`.
pub fn coherent_information<M: CpMap + ?Sized>(rho: &DensityOperator, map: &M) -> Result<f64> {
    Ok(mutual_information(rho, map)? - von_neumann(rho))
}

/// `H(Φ(ρ)) − H(Φ̂(ρ))`.
pub fn coherent_information_entropic<M: CpMap + ?Sized>(
    rho: &DensityOperator,
    map: &M,
) -> Result<f64> {
    check_input(rho, map)?;
    let out = map.apply_matrix(rho.mat())?;
    Ok(entropy_h(&out)? - entropy_h(&complementary_output(map, rho.mat()))?)
}

/// Ensemble `{π_λ, (E_λ ⊗ Id_B)(ω_AB)}` of encoded shared states. Every
/// member has the same `B` marginal as `ω_AB`.
///
/// Returns the ensemble together with the layout `(A', B)` of its members.
pub fn fixed_marginal_ensemble(
    omega: &DensityOperator,
    layout: &CompositeLayout,
    encodings: &[KrausChannel],
    weights: &[f64],
) -> Result<(Ensemble, CompositeLayout)> {
    if layout.len() != 2 {
        return Err(dimension("shared state must be bipartite (A, B)"));
    }
    if encodings.is_empty() || encodings.len() != weights.len() {
        return Err(invariant("need one weight per encoding"));
    }
    let d_out = encodings[0].d_out();
    if encodings.iter().any(|e| e.d_out() != d_out) {
        return Err(dimension("encodings have different output dimensions"));
    }
    let mut states = Vec::with_capacity(encodings.len());
    let mut out_layout = layout.clone();
    for enc in encodings {
        let (m, l) = apply_local(enc, omega.mat(), layout, 0)?;
        out_layout = l;
        states.push(DensityOperator::from_trusted(m, TraceClass::UnitTrace));
    }
    Ok((Ensemble::new(weights.to_vec(), states)?, out_layout))
}
