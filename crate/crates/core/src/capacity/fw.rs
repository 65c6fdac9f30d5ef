use std::time::Instant;

use super::constraint::EnergyConstraint;
use super::linear::feasible_linear_max;
use super::{best_of, CapacityOptions, CapacityResult, Certificate, Optimizer, Run, TracePoint};
use crate::channel::{CpMap, KrausChannel};
use crate::entropy::entropy_h;
use crate::error::{invariant, Result};
use crate::qmat::{self, hermitian_fn, identity, r, sample_state_with, CMatrix, DensityOperator, TraceClass};

/// `log₂` on the support; zero on the kernel.
pub(crate) fn log2_support(a: &CMatrix) -> Result<CMatrix> {
    hermitian_fn(a, |x| if x > 0.0 { x.log2() } else { 0.0 })
}

/// Channel and complement with minimal environment.
pub(crate) struct MiObjective {
    channel: KrausChannel,
    complement: KrausChannel,
}

impl MiObjective {
    pub fn new(map: &KrausChannel) -> Self {
        let channel = map.canonicalize();
        let complement = channel.complementary();
        Self { channel, complement }
    }

    /// `H(ρ) + H(Φ(ρ)) − H(Φ̂(ρ))`.
    pub fn value(&self, rho: &CMatrix) -> Result<f64> {
        Ok(entropy_h(rho)? + entropy_h(&self.channel.apply_matrix(rho)?)?
            - entropy_h(&self.complement.apply_matrix(rho)?)?)
    }

    /// `−log₂ ρ − Φ*(log₂ Φ(ρ)) + Φ̂*(log₂ Φ̂(ρ))`, up to multiples of `I`.
    pub fn gradient(&self, rho: &CMatrix) -> Result<CMatrix> {
        let out = log2_support(&self.channel.apply_matrix(rho)?)?;
        let env = log2_support(&self.complement.apply_matrix(rho)?)?;
        Ok(-log2_support(rho)? - self.channel.dual_apply(&out)? + self.complement.dual_apply(&env)?)
    }
}

/// Gradient of `ρ ↦ I(ρ, Φ)` at a full-rank state, as a Hermitian matrix
/// defined up to a multiple of the identity.
pub fn mutual_information_gradient(map: &KrausChannel, rho: &DensityOperator) -> Result<CMatrix> {
    MiObjective::new(map).gradient(rho.mat())
}

/// Maximiser of a concave function on `[0, 1]` by golden section.
fn golden_section(f: impl Fn(f64) -> Result<f64>, tol: f64) -> Result<(f64, f64)> {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (0.0, 1.0);
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1)?;
        }
    }
    let end = f(1.0)?;
    Ok(if f1 >= f2 && f1 >= end {
        (x1, f1)
    } else if f2 >= end {
        (x2, f2)
    } else {
        (1.0, end)
    })
}

struct FwRun {
    state: DensityOperator,
    upper: f64,
    iterations: usize,
    trace: Vec<TracePoint>,
}

fn frank_wolfe(
    obj: &MiObjective,
    c: &EnergyConstraint,
    start: DensityOperator,
    opts: &CapacityOptions,
) -> Result<(f64, FwRun)> {
    let d = c.dim();
    let eps = opts.epsilon;
    let mixed = identity(d) * r(eps / d as f64);
    let mut rho = start.into_mat();
    let mut value = obj.value(&rho)?;
    let mut upper = f64::INFINITY;
    let mut iterations = 0;
    let mut trace = vec![TracePoint { value, energy: c.energy(&rho) }];
    for k in 0..opts.max_iterations.max(1) {
        iterations = k + 1;
        let rho_eps = &rho * r(1.0 - eps) + &mixed;
        let g = obj.gradient(&rho_eps)?;
        let lin = feasible_linear_max(&g, c)?;
        // concavity: I(σ) ≤ I(ρ_ε) + Tr G(σ − ρ_ε) for every state σ
        let bound = obj.value(&rho_eps)? + lin.upper - qmat::trace_product(&g, &rho_eps).re;
        upper = upper.min(bound);
        if upper - value <= opts.gap_tolerance {
            break;
        }
        let dir = lin.state.mat() - &rho;
        let along = |t: f64| obj.value(&(&rho + &dir * r(t)));
        let (mut t, mut v) = golden_section(along, 1e-10)?;
        if !(v > value) {
            let fallback = 2.0 / (k as f64 + 2.0);
            let fv = along(fallback)?;
            if fv > value {
                (t, v) = (fallback, fv);
            } else {
                break;
            }
        }
        rho += &dir * r(t);
        value = v;
        trace.push(TracePoint { value, energy: c.energy(&rho) });
    }
    let state = DensityOperator::from_trusted(qmat::hermitian_part(&rho), TraceClass::UnitTrace);
    Ok((value, FwRun { state, upper: upper.max(value), iterations, trace }))
}

/// Entanglement-assisted capacity `C_ea(Φ, F, E) = sup_{Tr ρF ≤ E} I(ρ, Φ)`.
///
/// Returns the best feasible value with a certified upper bound. Start 0
/// is the most mixed feasible state; further starts are random feasible
/// states. Upper bounds from every start are valid and the smallest is kept.
pub fn cea_capacity(map: &KrausChannel, c: &EnergyConstraint, opts: &CapacityOptions) -> Result<CapacityResult> {
    c.check_dim(map.d_in())?;
    if !(opts.epsilon > 0.0 && opts.epsilon < 1.0) {
        return Err(invariant("regularizer ε must lie in (0, 1)"));
    }
    let clock = Instant::now();
    let obj = MiObjective::new(map);
    let (best, others) = best_of(opts, |i| {
        let start = if i == 0 {
            c.interior_point()
        } else {
            let sigma = sample_state_with(c.dim(), c.dim(), &mut opts.restart_rng(i))?;
            c.pull_into_feasible(sigma.mat())
        };
        let (value, payload) = frank_wolfe(&obj, c, start, opts)?;
        Ok(Run { value, seed: opts.seed.wrapping_add(i as u64), payload })
    })?;
    let upper = others.iter().map(|r| r.payload.upper).fold(best.payload.upper, f64::min);
    let gap = (upper - best.value).max(0.0);
    Ok(CapacityResult {
        value: best.value,
        optimizer: Optimizer::State(best.payload.state.clone()),
        certificate: Certificate::DualityGap { gap, upper: best.value + gap },
        iterations: best.payload.iterations,
        converged: gap <= opts.gap_tolerance,
        seed: best.seed,
        wall_time: clock.elapsed(),
        trace: best.payload.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::mutual_information;
    use crate::qmat::{diag_real, sample_state};

    #[test]
    fn gradient_matches_finite_differences() {
        let map = KrausChannel::random(3, 2, 3, 7).unwrap();
        let rho = sample_state(3, 3, 8).unwrap();
        let g = mutual_information_gradient(&map, &rho).unwrap();
        let sigma = sample_state(3, 3, 9).unwrap();
        let dir = sigma.mat() - rho.mat();
        let h = 1e-6;
        let at = |t: f64| {
            let m = rho.mat() + &dir * r(t);
            mutual_information(&DensityOperator::new(m).unwrap(), &map).unwrap()
        };
        let fd = (at(h) - at(-h)) / (2.0 * h);
        let analytic = qmat::trace_product(&g, &dir).re;
        assert!((fd - analytic).abs() < 1e-6, "{fd} vs {analytic}");
    }

    #[test]
    fn identity_qubit_constrained() {
        let c = EnergyConstraint::new(diag_real(&[0.0, 1.0]), 0.25).unwrap();
        let res = cea_capacity(&KrausChannel::identity(2), &c, &CapacityOptions::default()).unwrap();
        let exact = 2.0 * crate::entropy::binary_entropy(0.75);
        assert!(res.value <= exact + 1e-9 && exact <= res.upper().unwrap() + 1e-9);
        assert!(res.gap().unwrap() <= 1e-4);
    }

    #[test]
    fn replacement_is_zero() {
        let tau = sample_state(2, 2, 3).unwrap();
        let c = EnergyConstraint::new(diag_real(&[0.0, 1.0, 2.0]), 0.7).unwrap();
        let res = cea_capacity(&KrausChannel::replacement(3, &tau), &c, &CapacityOptions::default()).unwrap();
        assert!(res.value.abs() < 1e-9);
        assert!(res.upper().unwrap() < 1e-4);
    }
}
