use serde::Serialize;

use super::constraint::{constraint_tensor, EnergyConstraint};
use super::{cea_capacity, chi_capacity, CapacityOptions, CapacityResult};
use crate::channel::{is_cq_discrete, CpMap, KrausChannel, CQ_TOL};
use crate::entropy::chi_through;
use crate::error::{Error, Result};
use crate::qmat::DensityOperator;

/// Slack when comparing certified values from separate runs.
const COMPARE_TOL: f64 = 1e-9;

/// A certified interval `[value, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bracket {
    pub value: f64,
    pub upper: f64,
    pub gap: f64,
}

impl Bracket {
    pub fn of(res: &CapacityResult) -> Self {
        let upper = res.upper().unwrap_or(f64::INFINITY);
        Self { value: res.value, upper, gap: upper - res.value }
    }

    pub fn overlaps(&self, other: &Bracket, tol: f64) -> bool {
        self.value <= other.upper + tol && other.value <= self.upper + tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Prop1Verdict {
    Holds,
    /// The heuristic χ values leave the comparison open.
    Inconclusive,
}

/// `C_ea(Φ) ≥ 2 C_χ(Φ) − C_χ(Φ̂)` evaluated with a certified `C_ea` and
/// heuristic χ lower bounds.
#[derive(Debug, Clone, Serialize)]
pub struct Prop1Report {
    pub cea: Bracket,
    pub chi_channel: f64,
    pub chi_complement: f64,
    /// `2 C_χ(Φ) − C_χ(Φ̂)`.
    pub rhs: f64,
    /// `C_ea lower bound − rhs`.
    pub margin: f64,
    pub verdict: Prop1Verdict,
}

/// Evaluate the inequality with tolerance `1e-6`. The χ value of the
/// complement is the larger of its own search and its value on the
/// ensemble found for `Φ`; both are lower bounds on `C_χ(Φ̂)`.
pub fn check_prop1(map: &KrausChannel, c: &EnergyConstraint, opts: &CapacityOptions) -> Result<Prop1Report> {
    let cea = cea_capacity(map, c, opts)?;
    let chi = chi_capacity(map, c, None, opts)?;
    let complement = map.canonicalize().complementary();
    let mut chi_complement = chi_capacity(&complement, c, None, opts)?.value;
    if let Some(ens) = chi.optimizer.ensemble() {
        chi_complement = chi_complement.max(chi_through(&complement, ens)?);
    }
    let rhs = 2.0 * chi.value - chi_complement;
    let margin = cea.value - rhs;
    let verdict = if margin >= -1e-6 { Prop1Verdict::Holds } else { Prop1Verdict::Inconclusive };
    Ok(Prop1Report { cea: Bracket::of(&cea), chi_channel: chi.value, chi_complement, rhs, margin, verdict })
}

/// Evidence on whether `C_ea` and `C_χ` coincide, and on the c-q structure
/// of the channel restricted to the support of a near-optimal average state.
#[derive(Debug, Clone, Serialize)]
pub struct CoincidenceReport {
    pub cea: Bracket,
    pub chi: f64,
    /// `C_ea lower bound − C_χ lower bound`.
    pub gap: f64,
    pub barycenter_rank: usize,
    /// The restricted channel is a c-q channel of discrete type.
    pub cq_discrete: bool,
    pub max_commutator: f64,
    pub max_coherence_leak: f64,
}

/// Eigenvalue threshold defining the support of the optimal average state.
pub const SUPPORT_THRESHOLD: f64 = 1e-10;

pub fn coincidence_certificate(
    map: &KrausChannel,
    c: &EnergyConstraint,
    opts: &CapacityOptions,
) -> Result<CoincidenceReport> {
    let cea = cea_capacity(map, c, opts)?;
    let chi = chi_capacity(map, c, None, opts)?;
    let bar = chi.optimizer.average_state();
    let eig = bar.eig();
    let support: Vec<usize> = (0..eig.dim()).filter(|&k| eig.values[k] > SUPPORT_THRESHOLD).collect();
    let restricted = map.restrict(&eig.vectors.select_columns(&support))?;
    let cert = is_cq_discrete(&restricted, CQ_TOL);
    Ok(CoincidenceReport {
        cea: Bracket::of(&cea),
        chi: chi.value,
        gap: cea.value - chi.value,
        barycenter_rank: support.len(),
        cq_discrete: cert.is_discrete,
        max_commutator: cert.max_commutator,
        max_coherence_leak: cert.max_coherence_leak,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationRow {
    pub rank: usize,
    #[serde(flatten)]
    pub bracket: Bracket,
}

#[derive(Debug, Clone, Serialize)]
pub struct TruncationTable {
    /// Rows sorted by rank.
    pub rows: Vec<TruncationRow>,
    /// The untruncated channel.
    pub full: Bracket,
    /// No certified bracket contradicts monotonicity in the rank.
    pub monotone: bool,
    /// Whether the full-rank row overlaps the untruncated bracket; `None`
    /// if no row has full rank.
    pub full_rank_overlaps: Option<bool>,
}

/// `C_ea(Π_n ∘ Φ, F, E)` for every `n` in `ranks`, next to `C_ea(Φ, F, E)`.
pub fn truncation_convergence(
    map: &KrausChannel,
    c: &EnergyConstraint,
    ranks: &[usize],
    tau: &DensityOperator,
    opts: &CapacityOptions,
) -> Result<TruncationTable> {
    let full = Bracket::of(&cea_capacity(map, c, opts)?);
    let mut sorted = ranks.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut rows = Vec::with_capacity(sorted.len());
    for &n in &sorted {
        let truncated = map.truncate(n, tau, None)?;
        rows.push(TruncationRow { rank: n, bracket: Bracket::of(&cea_capacity(&truncated, c, opts)?) });
    }
    let monotone = rows
        .iter()
        .enumerate()
        .all(|(i, a)| rows[i + 1..].iter().all(|b| b.bracket.upper + COMPARE_TOL >= a.bracket.value))
        && rows.iter().all(|a| full.upper + COMPARE_TOL >= a.bracket.value);
    let full_rank_overlaps = rows
        .iter()
        .find(|row| row.rank == map.d_out())
        .map(|row| row.bracket.overlaps(&full, COMPARE_TOL));
    Ok(TruncationTable { rows, full, monotone, full_rank_overlaps })
}

#[derive(Debug, Clone, Serialize)]
pub struct AdditivityReport {
    pub one_copy: Bracket,
    pub two_copy: Bracket,
    /// `C_ea(Φ⊗Φ) − 2 C_ea(Φ)` on the lower bounds.
    pub difference: f64,
    /// `gap(Φ⊗Φ) + 2 gap(Φ)`.
    pub combined_gap: f64,
    pub consistent: bool,
}

/// Largest `max(d_A, d_B, d_E)²` accepted by the two-copy probe.
pub const ADDITIVITY_LIMIT: usize = 64;

/// Compare `C_ea(Φ⊗Φ, F^{(2)}, 2E)` with `2 C_ea(Φ, F, E)`.
pub fn additivity_probe(map: &KrausChannel, c: &EnergyConstraint, opts: &CapacityOptions) -> Result<AdditivityReport> {
    let canonical = map.canonicalize();
    let largest = canonical.d_in().max(canonical.d_out()).max(canonical.d_env());
    if largest * largest > ADDITIVITY_LIMIT {
        return Err(Error::Resource(format!(
            "two-copy problem needs dimension {} (limit {ADDITIVITY_LIMIT})",
            largest * largest
        )));
    }
    let one = Bracket::of(&cea_capacity(&canonical, c, opts)?);
    let two = Bracket::of(&cea_capacity(&canonical.tensor(&canonical), &constraint_tensor(c, 2)?, opts)?);
    let difference = two.value - 2.0 * one.value;
    let combined_gap = two.gap + 2.0 * one.gap;
    Ok(AdditivityReport {
        one_copy: one,
        two_copy: two,
        difference,
        combined_gap,
        consistent: difference.abs() <= combined_gap + COMPARE_TOL,
    })
}
