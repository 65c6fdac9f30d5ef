use std::time::Instant;

use rand::Rng;

use super::constraint::EnergyConstraint;
use super::fw::log2_support;
use super::{best_of, CapacityOptions, CapacityResult, Certificate, Optimizer, Run};
use crate::channel::{CpMap, KrausChannel};
use crate::entropy::{entropy_h, Ensemble};
use crate::error::{dimension, invariant, Result};
use crate::qmat::{
    self, gaussian_matrix, hermitian_fn, projector, r, sample_isometry_with, CMatrix,
    CVector, DensityOperator, ZERO,
};

/// Members lighter than this are dropped from the objective.
const WEIGHT_FLOOR: f64 = 1e-14;

/// Log-weight from which dropped members may re-enter the weight update.
const REVIVE_LN: f64 = -30.0;

/// Improvement below which a local search counts as stalled.
const STALL: f64 = 1e-13;

/// Default ensemble size `d²`.
fn default_size(d: usize, m: Option<usize>) -> Result<usize> {
    let m = m.unwrap_or(d * d);
    if m == 0 {
        return Err(invariant("ensemble size must be positive"));
    }
    Ok(m)
}

/// `A (A†A)^{-1/2}`, the closest matrix with orthonormal columns.
fn polar(a: &CMatrix) -> CMatrix {
    match hermitian_fn(&(a.adjoint() * a), |x| if x > 1e-300 { 1.0 / x.sqrt() } else { 0.0 }) {
        Ok(inv_sqrt) => a * inv_sqrt,
        Err(_) => qmat::orthonormalize(a),
    }
}

/// Pure decompositions of a fixed state `ρ = BB†`, `ψ_i = B u_i` with
/// `u_i` the `i`-th row of an `m×r` matrix `U` with orthonormal columns.
struct Decomposition<'a> {
    map: &'a KrausChannel,
    b: CMatrix,
}

impl Decomposition<'_> {
    fn members(&self, u: &CMatrix) -> Vec<CVector> {
        (0..u.nrows()).map(|i| &self.b * u.row(i).transpose()).collect()
    }

    /// `Σ_i H(Φ(ψ_iψ_i†))` with the extended entropy.
    fn objective(&self, u: &CMatrix) -> Result<f64> {
        let mut acc = 0.0;
        for psi in self.members(u) {
            if psi.norm_squared() > WEIGHT_FLOOR {
                acc += entropy_h(&self.map.apply_matrix(&projector(&psi))?)?;
            }
        }
        Ok(acc)
    }

    /// Rows `(B† M_i ψ_i)ᵀ`, `M_i = −Φ*(log₂ Φ(ψ_iψ_i†)) + log₂ t_i · I`.
    fn gradient(&self, u: &CMatrix) -> Result<CMatrix> {
        let mut g = CMatrix::zeros(u.nrows(), u.ncols());
        for (i, psi) in self.members(u).iter().enumerate() {
            let t = psi.norm_squared();
            if t <= WEIGHT_FLOOR {
                continue;
            }
            let log_out = log2_support(&self.map.apply_matrix(&projector(psi))?)?;
            let m_psi = -self.map.dual_apply(&log_out)? * psi + psi * r(t.log2());
            let row = self.b.adjoint() * m_psi;
            g.set_row(i, &row.transpose());
        }
        Ok(g)
    }

    fn descend(&self, mut u: CMatrix, max_iterations: usize) -> Result<(f64, CMatrix, usize)> {
        let mut f = self.objective(&u)?;
        let mut step: f64 = 1.0;
        let mut stalls = 0;
        let mut iterations = 0;
        for k in 0..max_iterations {
            iterations = k + 1;
            let g = self.gradient(&u)?;
            if g.norm() < 1e-12 {
                break;
            }
            let mut accepted = None;
            step = (step * 2.0).min(16.0);
            for _ in 0..40 {
                let cand = polar(&(&u - &g * r(step)));
                let fc = self.objective(&cand)?;
                if fc < f {
                    accepted = Some((cand, fc));
                    break;
                }
                step *= 0.5;
            }
            let Some((cand, fc)) = accepted else { break };
            let gain = f - fc;
            u = cand;
            f = fc;
            stalls = if gain < STALL { stalls + 1 } else { 0 };
            if stalls >= 5 {
                break;
            }
        }
        Ok((f, u, iterations))
    }
}

/// Heuristic lower bound on `C_χ(Φ, ρ) = H(Φ(ρ)) − min Σ_i π_i H(Φ(ρ_i))`,
/// the minimum running over pure decompositions `ρ = Σ_i π_i ρ_i` with `m`
/// members (default `d²`).
pub fn chi_at_state(
    map: &KrausChannel,
    rho: &DensityOperator,
    m: Option<usize>,
    opts: &CapacityOptions,
) -> Result<CapacityResult> {
    let d = map.d_in();
    if rho.dim() != d {
        return Err(dimension(format!("state dimension {} does not match channel input {d}", rho.dim())));
    }
    let clock = Instant::now();
    let m = default_size(d, m)?;
    let eig = rho.eig();
    let support: Vec<usize> = (0..d).filter(|&k| eig.values[k] > qmat::STATE_TOL).collect();
    let rank = support.len();
    if m < rank {
        return Err(invariant(format!("decomposition size {m} is below rank(ρ) = {rank}")));
    }
    let mut b = eig.vectors.select_columns(&support);
    for (j, &k) in support.iter().enumerate() {
        b.column_mut(j).scale_mut(eig.values[k].sqrt());
    }
    let h_out = entropy_h(&map.apply_matrix(rho.mat())?)?;
    let problem = Decomposition { map, b };
    let (best, _) = best_of(opts, |i| {
        let start = if i == 0 {
            // the eigen-decomposition
            CMatrix::from_fn(m, rank, |a, j| if a == j { qmat::ONE } else { ZERO })
        } else {
            sample_isometry_with(rank, m, &mut opts.restart_rng(i))?
        };
        let (f, u, iterations) = problem.descend(start, opts.max_iterations)?;
        Ok(Run { value: h_out - f, seed: opts.seed.wrapping_add(i as u64), payload: (u, iterations) })
    })?;
    let (u, iterations) = best.payload;
    let parts: Vec<CMatrix> = problem.members(&u).iter().map(projector).collect();
    Ok(CapacityResult {
        value: best.value,
        optimizer: Optimizer::Ensemble(Ensemble::from_parts(&parts)?),
        certificate: Certificate::Heuristic,
        iterations,
        converged: iterations < opts.max_iterations,
        seed: best.seed,
        wall_time: clock.elapsed(),
        trace: Vec::new(),
    })
}

/// Weights `∝ exp(ℓ_i − s ln2 · e_i)` with the smallest `s ≥ 0` for which the
/// average energy is at most `bound`. `None` if no member is cheap enough.
fn tilt(log_w: &[f64], energies: &[f64], bound: f64) -> Option<(Vec<f64>, f64)> {
    let weights = |s: f64| {
        let shifted: Vec<f64> = log_w
            .iter()
            .zip(energies)
            .map(|(&l, &e)| l - s * std::f64::consts::LN_2 * e)
            .collect();
        let top = shifted.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = shifted.iter().map(|&x| (x - top).exp()).collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|x| x / z).collect::<Vec<f64>>()
    };
    let energy = |w: &[f64]| w.iter().zip(energies).map(|(a, b)| a * b).sum::<f64>();
    let live = |i: usize| log_w[i].is_finite();
    let cheapest = (0..log_w.len()).filter(|&i| live(i)).map(|i| energies[i]).fold(f64::INFINITY, f64::min);
    if cheapest > bound + 1e-12 {
        return None;
    }
    let w0 = weights(0.0);
    if energy(&w0) <= bound {
        return Some((w0, 0.0));
    }
    let mut hi = 1.0;
    let mut w_hi = weights(hi);
    while energy(&w_hi) > bound {
        hi *= 2.0;
        if hi > 1e12 {
            // only members at the bound survive
            let mut w: Vec<f64> = (0..log_w.len())
                .map(|i| if live(i) && energies[i] <= bound + 1e-12 { w0[i].max(1e-300) } else { 0.0 })
                .collect();
            let z: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= z);
            return Some((w, hi));
        }
        w_hi = weights(hi);
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let w = weights(mid);
        if energy(&w) > bound {
            lo = mid;
        } else {
            hi = mid;
            w_hi = w;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Some((w_hi, hi))
}

/// Pure-state ensemble under a fixed channel.
struct PureEnsemble {
    weights: Vec<f64>,
    states: Vec<CVector>,
}

struct Evaluation {
    chi: f64,
    outputs: Vec<CMatrix>,
    average: CMatrix,
}

fn evaluate(map: &KrausChannel, ens: &PureEnsemble) -> Result<Evaluation> {
    let outputs: Vec<CMatrix> = ens.states.iter().map(|v| map.apply_matrix(&projector(v))).collect::<Result<_>>()?;
    let d = map.d_out();
    let mut average = CMatrix::zeros(d, d);
    let mut members = 0.0;
    for (w, y) in ens.weights.iter().zip(&outputs) {
        if *w > 0.0 {
            average += y * r(*w);
            members += w * entropy_h(y)?;
        }
    }
    Ok(Evaluation { chi: entropy_h(&average)? - members, outputs, average })
}

fn energies(c: &EnergyConstraint, states: &[CVector]) -> Vec<f64> {
    states.iter().map(|v| (v.adjoint() * c.f() * v)[(0, 0)].re).collect()
}

fn log_weights(w: &[f64]) -> Vec<f64> {
    w.iter().map(|&x| if x > 0.0 { x.ln() } else { f64::NEG_INFINITY }).collect()
}

fn random_unit(d: usize, rng: &mut impl Rng) -> CVector {
    let g = gaussian_matrix(d, 1, rng);
    let v = g.column(0).into_owned();
    let n = v.norm();
    v / r(n)
}

fn initial_states(d: usize, m: usize, c: &EnergyConstraint, restart: usize, rng: &mut impl Rng) -> Vec<CVector> {
    let mut states: Vec<CVector> = (0..m)
        .map(|i| if restart == 0 && i < d { qmat::ket(d, i) } else { random_unit(d, rng) })
        .collect();
    if energies(c, &states).iter().all(|&e| e > c.bound()) {
        let ground = c.ground_space(1e-10);
        states[m - 1] = ground.column(0).into_owned();
    }
    states
}

/// Weight update `π_i ← π_i 2^{D_i − s e_i}` with `D_i = H(Φ(ρ_i) ‖ Φ(ρ̄))`.
fn weight_step(c: &EnergyConstraint, ens: &PureEnsemble, ev: &Evaluation) -> Result<Option<(Vec<f64>, f64)>> {
    let log_avg = log2_support(&ev.average)?;
    let mut log_w = log_weights(&ens.weights);
    for (i, y) in ev.outputs.iter().enumerate() {
        let div = -entropy_h(y)? - qmat::trace_product(y, &log_avg).re;
        log_w[i] = log_w[i].max(REVIVE_LN) + std::f64::consts::LN_2 * div;
    }
    Ok(tilt(&log_w, &energies(c, &ens.states), c.bound()))
}

/// Gradient step on every member along `A_i ψ_i`,
/// `A_i = Φ*(log Φ(ρ_i)) − Φ*(log Φ(ρ̄))`. When the energy constraint is
/// active the π-weighted component along `Fψ_i` is projected out, so the step
/// keeps the average energy to first order; the weights are re-tilted to
/// absorb the rest. Returns the improved ensemble, if any.
fn state_step(
    map: &KrausChannel,
    c: &EnergyConstraint,
    ens: &PureEnsemble,
    ev: &Evaluation,
    step: &mut f64,
) -> Result<Option<(PureEnsemble, Evaluation)>> {
    let tangent = |psi: &CVector, v: CVector| {
        let overlap = (psi.adjoint() * &v)[(0, 0)];
        v - psi * overlap
    };
    let back = map.dual_apply(&log2_support(&ev.average)?)?;
    let mut grads = Vec::with_capacity(ens.states.len());
    let mut costs = Vec::with_capacity(ens.states.len());
    for (psi, y) in ens.states.iter().zip(&ev.outputs) {
        let a = map.dual_apply(&log2_support(y)?)? - &back;
        grads.push(tangent(psi, &a * psi));
        costs.push(tangent(psi, c.f() * psi));
    }
    let energy: f64 = ens.weights.iter().zip(energies(c, &ens.states)).map(|(w, e)| w * e).sum();
    let mut lambda = 0.0;
    if energy > c.bound() - 1e-10 * (1.0 + c.bound().abs()) {
        let (mut gh, mut hh) = (0.0, 0.0);
        for ((w, g), h) in ens.weights.iter().zip(&grads).zip(&costs) {
            gh += w * g.dotc(h).re;
            hh += w * h.norm_squared();
        }
        if gh > 0.0 && hh > 1e-300 {
            lambda = gh / hh;
        }
    }
    let dirs: Vec<CVector> = grads.iter().zip(&costs).map(|(g, h)| g - h * r(lambda)).collect();
    *step = (*step * 2.0).clamp(1e-6, 4.0);
    for _ in 0..30 {
        let states: Vec<CVector> = ens
            .states
            .iter()
            .zip(&dirs)
            .map(|(psi, d)| {
                let v = psi + d * r(*step);
                let n = v.norm();
                v / r(n)
            })
            .collect();
        let e = energies(c, &states);
        if let Some((weights, _)) = tilt(&log_weights(&ens.weights), &e, c.bound()) {
            let cand = PureEnsemble { weights, states };
            let cev = evaluate(map, &cand)?;
            if cev.chi > ev.chi {
                return Ok(Some((cand, cev)));
            }
        }
        *step *= 0.5;
    }
    Ok(None)
}

fn ascend(map: &KrausChannel, c: &EnergyConstraint, mut ens: PureEnsemble, max_iterations: usize) -> Result<(PureEnsemble, Evaluation, usize)> {
    let mut ev = evaluate(map, &ens)?;
    let mut step: f64 = 0.5;
    let mut stalls = 0;
    let mut iterations = 0;
    for k in 0..max_iterations {
        iterations = k + 1;
        let before = ev.chi;
        if let Some((weights, _)) = weight_step(c, &ens, &ev)? {
            let cand = PureEnsemble { weights, states: ens.states.clone() };
            let cev = evaluate(map, &cand)?;
            if cev.chi >= ev.chi {
                ens = cand;
                ev = cev;
            }
        }
        if let Some((cand, cev)) = state_step(map, c, &ens, &ev, &mut step)? {
            ens = cand;
            ev = cev;
        }
        stalls = if ev.chi - before < STALL { stalls + 1 } else { 0 };
        if stalls >= 5 {
            break;
        }
    }
    Ok((ens, ev, iterations))
}

/// Heuristic lower bound on the constrained χ-capacity
/// `C_χ(Φ, F, E) = sup { χ_Φ(μ) : Tr ρ̄(μ)F ≤ E }` over pure ensembles with
/// `m` members (default `d²`), by alternating Blahut–Arimoto weight updates
/// and gradient steps on the member states.
pub fn chi_capacity(
    map: &KrausChannel,
    c: &EnergyConstraint,
    m: Option<usize>,
    opts: &CapacityOptions,
) -> Result<CapacityResult> {
    let d = map.d_in();
    c.check_dim(d)?;
    let clock = Instant::now();
    let m = default_size(d, m)?;
    let (best, _) = best_of(opts, |i| {
        let mut rng = opts.restart_rng(i);
        let states = initial_states(d, m, c, i, &mut rng);
        let uniform = vec![(1.0 / m as f64).ln(); m];
        let (weights, _) = tilt(&uniform, &energies(c, &states), c.bound())
            .ok_or_else(|| invariant("no feasible starting ensemble"))?;
        let (ens, ev, iterations) = ascend(map, c, PureEnsemble { weights, states }, opts.max_iterations)?;
        Ok(Run { value: ev.chi, seed: opts.seed.wrapping_add(i as u64), payload: (ens, iterations) })
    })?;
    let (ens, iterations) = best.payload;
    let mut weights = Vec::new();
    let mut states = Vec::new();
    for (w, v) in ens.weights.iter().zip(&ens.states) {
        if *w > 0.0 {
            weights.push(*w);
            states.push(DensityOperator::pure(v)?);
        }
    }
    let z: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= z);
    Ok(CapacityResult {
        value: best.value,
        optimizer: Optimizer::Ensemble(Ensemble::new(weights, states)?),
        certificate: Certificate::Heuristic,
        iterations,
        converged: iterations < opts.max_iterations,
        seed: best.seed,
        wall_time: clock.elapsed(),
        trace: Vec::new(),
    })
}
