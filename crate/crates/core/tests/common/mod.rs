//! Reference computations for integration tests. These avoid the library's
//! spectral routines: eigenvalues come from nalgebra's Hermitian solver and
//! partial traces from explicit index loops.

#![allow(dead_code)]

use entrocap::channel::{CpMap, KrausChannel};
use entrocap::qmat::{CMatrix, C64};
use rand::Rng;

pub fn spectrum(m: &CMatrix) -> Vec<f64> {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    h.symmetric_eigenvalues().iter().copied().collect()
}

/// Von Neumann entropy in bits of a PSD matrix.
pub fn entropy(m: &CMatrix) -> f64 {
    spectrum(m).into_iter().filter(|&x| x > 1e-300).map(|x| -x * x.log2()).sum()
}

/// `Tr_B` of an operator on `C^da ⊗ C^db`.
pub fn trace_second(m: &CMatrix, da: usize, db: usize) -> CMatrix {
    CMatrix::from_fn(da, da, |i, j| (0..db).map(|k| m[(i * db + k, j * db + k)]).sum())
}

/// `Tr_A` of an operator on `C^da ⊗ C^db`.
pub fn trace_first(m: &CMatrix, da: usize, db: usize) -> CMatrix {
    CMatrix::from_fn(db, db, |i, j| (0..da).map(|k| m[(k * db + i, k * db + j)]).sum())
}

/// Stinespring isometry `V = Σ_i K_i ⊗ |i⟩` on output ⊗ environment.
pub fn stinespring(ch: &KrausChannel) -> CMatrix {
    let ks = ch.kraus();
    let (d_out, d_in, n) = (ch.d_out(), ch.d_in(), ks.len());
    CMatrix::from_fn(d_out * n, d_in, |row, a| ks[row % n][(row / n, a)])
}

/// `Φ(ρ)` and `Φ̂(ρ)` from the dilation.
pub fn outputs(ch: &KrausChannel, rho: &CMatrix) -> (CMatrix, CMatrix) {
    let v = stinespring(ch);
    let big = &v * rho * v.adjoint();
    let n = ch.kraus().len();
    (trace_second(&big, ch.d_out(), n), trace_first(&big, ch.d_out(), n))
}

/// `I(ρ, Φ) = S(ρ) + S(Φρ) − S(Φ̂ρ)` from the dilation.
pub fn mutual_information(ch: &KrausChannel, rho: &CMatrix) -> f64 {
    let (out, env) = outputs(ch, rho);
    entropy(rho) + entropy(&out) - entropy(&env)
}

pub fn coherent_information(ch: &KrausChannel, rho: &CMatrix) -> f64 {
    let (out, env) = outputs(ch, rho);
    entropy(&out) - entropy(&env)
}

/// `max H(p)` over distributions with `Σ p_k f_k ≤ E`: the Gibbs law at the
/// inverse temperature that saturates the bound, or uniform if that is
/// feasible.
pub fn water_filling(levels: &[f64], e: f64) -> f64 {
    let gibbs = |beta: f64| {
        let w: Vec<f64> = levels.iter().map(|&f| (-beta * f).exp()).collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|x| x / z).collect::<Vec<f64>>()
    };
    let mean = |p: &[f64]| p.iter().zip(levels).map(|(a, b)| a * b).sum::<f64>();
    let shannon = |p: &[f64]| p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum::<f64>();
    if mean(&gibbs(0.0)) <= e {
        return shannon(&gibbs(0.0));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while mean(&gibbs(hi)) > e {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean(&gibbs(mid)) > e {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    shannon(&gibbs(hi))
}

/// `g(N) = (N+1) log(N+1) − N log N`.
pub fn g(n: f64) -> f64 {
    if n <= 0.0 {
        0.0
    } else {
        (n + 1.0) * (n + 1.0).log2() - n * n.log2()
    }
}

/// Mutual information of the pure-loss channel with transmissivity `η` at a
/// thermal input with `N` photons, from the symplectic spectrum of the
/// joint output of a purification.
pub fn attenuator_mi(eta: f64, n: f64) -> f64 {
    let out = eta * n;
    let d = ((n + out + 1.0).powi(2) - 4.0 * eta * n * (n + 1.0)).sqrt();
    g(n) + g(out) - g((d - 1.0 + out - n) / 2.0) - g((d - 1.0 - out + n) / 2.0)
}

pub fn random_dims(rng: &mut impl Rng, max: usize, max_rank: usize) -> (usize, usize, usize) {
    loop {
        let (a, b) = (rng.random_range(1..=max), rng.random_range(1..=max));
        let min_rank = a.div_ceil(b);
        if min_rank <= max_rank {
            return (a, b, rng.random_range(min_rank..=max_rank));
        }
    }
}

pub fn weights(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.05).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}
