//! Constrained capacities: certified `C_ea` by Frank–Wolfe ascent on the
//! mutual information, heuristic `C_χ` lower bounds by ensemble search, and
//! the reports built on top of them.

mod checks;
mod chi;
mod constraint;
mod fw;
mod linear;

use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy::Ensemble;
use crate::qmat::DensityOperator;

pub use checks::{
    Bracket,
    additivity_probe, check_prop1, coincidence_certificate, truncation_convergence, AdditivityReport,
    CoincidenceReport, Prop1Report, Prop1Verdict, TruncationRow, TruncationTable,
};
pub use chi::{chi_at_state, chi_capacity};
pub use constraint::{constraint_tensor, EnergyConstraint, FEASIBILITY_TOL};
pub use fw::{cea_capacity, mutual_information_gradient};
pub use linear::{feasible_linear_max, LinearMax};

/// Optimizer settings shared by every capacity routine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapacityOptions {
    pub max_iterations: usize,
    /// Target width of certified brackets, in bits.
    pub gap_tolerance: f64,
    /// Independent starts; start 0 is deterministic, the others are seeded.
    pub restarts: usize,
    pub seed: u64,
    /// Weight of `I/d` mixed into the iterate before taking logarithms.
    pub epsilon: f64,
    /// Run restarts on the rayon pool.
    pub parallel: bool,
}

impl Default for CapacityOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            gap_tolerance: 1e-5,
            restarts: 4,
            seed: 0,
            epsilon: 1e-9,
            parallel: true,
        }
    }
}

impl CapacityOptions {
    pub(crate) fn restart_rng(&self, restart: usize) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(restart as u64))
    }
}

/// How far a capacity value can be trusted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Certificate {
    /// The true value lies in `[value, upper]`, `upper − value = gap`.
    DualityGap { gap: f64, upper: f64 },
    /// Lower bound found by local search, no matching upper bound.
    Heuristic,
}

/// Maximiser returned with a capacity value.
#[derive(Debug, Clone, PartialEq)]
pub enum Optimizer {
    State(DensityOperator),
    Ensemble(Ensemble),
}

impl Optimizer {
    /// Input state, or the barycenter of an ensemble.
    pub fn average_state(&self) -> DensityOperator {
        match self {
            Optimizer::State(s) => s.clone(),
            Optimizer::Ensemble(e) => e.barycenter(),
        }
    }

    pub fn ensemble(&self) -> Option<&Ensemble> {
        match self {
            Optimizer::Ensemble(e) => Some(e),
            Optimizer::State(_) => None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CapacityResult {
    /// Best value found; a lower bound on the capacity.
    pub value: f64,
    #[serde(skip)]
    pub optimizer: Optimizer,
    pub certificate: Certificate,
    pub iterations: usize,
    /// False when the iteration budget ran out before `gap_tolerance` was met.
    pub converged: bool,
    /// Seed of the restart that produced `value`.
    pub seed: u64,
    #[serde(skip)]
    pub wall_time: Duration,
    /// Iterates of the winning Frank–Wolfe run; empty for heuristic results.
    #[serde(skip)]
    pub trace: Vec<TracePoint>,
}

/// Objective value and energy `Tr ρF` after one Frank–Wolfe iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub value: f64,
    pub energy: f64,
}

impl CapacityResult {
    pub fn gap(&self) -> Option<f64> {
        match self.certificate {
            Certificate::DualityGap { gap, .. } => Some(gap),
            Certificate::Heuristic => None,
        }
    }

    /// Certified upper bound, if any.
    pub fn upper(&self) -> Option<f64> {
        match self.certificate {
            Certificate::DualityGap { upper, .. } => Some(upper),
            Certificate::Heuristic => None,
        }
    }

    pub fn is_certified(&self) -> bool {
        self.gap().is_some()
    }
}

/// Output of one restart before merging.
pub(crate) struct Run<T> {
    pub value: f64,
    pub seed: u64,
    pub payload: T,
}

/// Run `restarts` independent starts and keep the best, lowest seed on ties.
pub(crate) fn best_of<T: Send>(
    opts: &CapacityOptions,
    run: impl Fn(usize) -> crate::Result<Run<T>> + Sync,
) -> crate::Result<(Run<T>, Vec<Run<T>>)> {
    let n = opts.restarts.max(1);
    let mut runs: Vec<Run<T>> = if opts.parallel {
        (0..n).into_par_iter().map(&run).collect::<crate::Result<_>>()?
    } else {
        (0..n).map(&run).collect::<crate::Result<_>>()?
    };
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        let b = &runs[best];
        if r.value > b.value || (r.value == b.value && r.seed < b.seed) {
            best = i;
        }
    }
    let winner = runs.swap_remove(best);
    Ok((winner, runs))
}
