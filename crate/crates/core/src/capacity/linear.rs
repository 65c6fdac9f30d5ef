use serde::Serialize;

use super::constraint::EnergyConstraint;
use crate::error::{dimension, Result};
use crate::qmat::{self, hermitian_eig, projector, r, CMatrix, CVector, DensityOperator, TraceClass};

/// Solution of `max Tr Gσ` over `{σ ≥ 0, Tr σ = 1, Tr σF ≤ E}`.
#[derive(Debug, Clone, Serialize)]
pub struct LinearMax {
    #[serde(skip)]
    pub state: DensityOperator,
    /// `Tr Gσ` at the returned state.
    pub value: f64,
    /// Dual bound `min_λ λE + λ_max(G − λF)` over the multipliers visited.
    pub upper: f64,
    /// Multiplier of the energy constraint, `None` when the feasible set is
    /// the ground space of `F`.
    pub multiplier: Option<f64>,
}

impl LinearMax {
    pub fn gap(&self) -> f64 {
        (self.upper - self.value).max(0.0)
    }
}

/// Top eigenspace of `G − λF`, with the extreme energies it contains.
struct Face {
    lambda: f64,
    top: f64,
    f_min: f64,
    f_max: f64,
    v_min: CVector,
    v_max: CVector,
}

impl Face {
    fn new(g: &CMatrix, f: &CMatrix, lambda: f64) -> Result<Self> {
        let m = g - f * r(lambda);
        let eig = hermitian_eig(&m)?;
        let top = eig.values[0];
        let tol = 1e-11 * (qmat::max_abs(g) + lambda * qmat::max_abs(f)).max(1.0);
        let cols: Vec<usize> = (0..eig.dim()).take_while(|&j| eig.values[j] >= top - tol).collect();
        let basis = eig.vectors.select_columns(&cols);
        let inner = hermitian_eig(&(basis.adjoint() * f * &basis))?;
        let last = inner.dim() - 1;
        Ok(Self {
            lambda,
            top,
            f_max: inner.values[0],
            f_min: inner.values[last],
            v_max: &basis * inner.vectors.column(0),
            v_min: &basis * inner.vectors.column(last),
        })
    }

    fn dual(&self, e: f64) -> f64 {
        self.lambda * e + self.top
    }
}

fn expectation(v: &CVector, a: &CMatrix) -> f64 {
    (v.adjoint() * a * v)[(0, 0)].re
}

fn pure_solution(v: &CVector, g: &CMatrix, upper: f64, multiplier: Option<f64>) -> LinearMax {
    let value = expectation(v, g);
    LinearMax {
        state: DensityOperator::from_trusted(projector(v), TraceClass::UnitTrace),
        value,
        upper: upper.max(value),
        multiplier,
    }
}

/// Mixture of `a` and `b` whose energy equals `e`.
fn mixture(a: &CVector, b: &CVector, f_a: f64, f_b: f64, e: f64, g: &CMatrix, upper: f64, lambda: f64) -> LinearMax {
    let t = if (f_a - f_b).abs() > 0.0 { ((e - f_b) / (f_a - f_b)).clamp(0.0, 1.0) } else { 1.0 };
    let sigma = projector(a) * r(t) + projector(b) * r(1.0 - t);
    let value = t * expectation(a, g) + (1.0 - t) * expectation(b, g);
    LinearMax {
        state: DensityOperator::from_trusted(sigma, TraceClass::UnitTrace),
        value,
        upper: upper.max(value),
        multiplier: Some(lambda),
    }
}

/// Maximise `Tr Gσ` over states with `Tr σF ≤ E` by bisection on the
/// Lagrange multiplier of the energy constraint.
///
/// The returned state is a top eigenvector of `G − λF`, or a mixture of two
/// such vectors at the breakpoint where the constraint becomes active. Ties
/// resolve toward the smaller multiplier.
pub fn feasible_linear_max(g: &CMatrix, c: &EnergyConstraint) -> Result<LinearMax> {
    if g.nrows() != c.dim() || g.ncols() != c.dim() {
        return Err(dimension(format!(
            "objective is {}x{}, constraint dimension is {}",
            g.nrows(),
            g.ncols(),
            c.dim()
        )));
    }
    let f = c.f();
    let e = c.bound();
    let start = Face::new(g, f, 0.0)?;
    if start.f_min <= e {
        return Ok(pure_solution(&start.v_min, g, start.dual(e), Some(0.0)));
    }

    if e <= c.min_eig() + 1e-12 {
        // only the ground space of F is feasible
        let w = c.ground_space(1e-10);
        let inner = hermitian_eig(&(w.adjoint() * g * &w))?;
        let v = &w * inner.vectors.column(0);
        return Ok(pure_solution(&v, g, inner.values[0], None));
    }

    let spectrum = qmat::eigvalsh(g)?;
    let spread = spectrum[0] - spectrum[spectrum.len() - 1];
    let mut hi = 1.01 * (spread + 1e-12) / (e - c.min_eig()) + 1e-12;
    let mut hi_face = Face::new(g, f, hi)?;
    for _ in 0..200 {
        if hi_face.f_min <= e {
            break;
        }
        hi *= 2.0;
        hi_face = Face::new(g, f, hi)?;
    }
    if hi_face.f_max >= e {
        return Ok(mixture(&hi_face.v_max, &hi_face.v_min, hi_face.f_max, hi_face.f_min, e, g, hi_face.dual(e), hi));
    }
    let mut lo = 0.0;
    let mut lo_face = start;
    for _ in 0..200 {
        if hi - lo <= 1e-15 * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let face = Face::new(g, f, mid)?;
        if face.f_min > e {
            lo = mid;
            lo_face = face;
        } else if face.f_max < e {
            hi = mid;
            hi_face = face;
        } else {
            let upper = face.dual(e);
            return Ok(mixture(&face.v_max, &face.v_min, face.f_max, face.f_min, e, g, upper, mid));
        }
    }
    let upper = lo_face.dual(e).min(hi_face.dual(e));
    Ok(mixture(
        &lo_face.v_min,
        &hi_face.v_max,
        lo_face.f_min,
        hi_face.f_max,
        e,
        g,
        upper,
        0.5 * (lo + hi),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::{diag_real, max_abs};

    #[test]
    fn forced_support() {
        let c = EnergyConstraint::new(diag_real(&[0.0, 1.0]), 0.0).unwrap();
        let sol = feasible_linear_max(&diag_real(&[1.0, 0.0]), &c).unwrap();
        assert!((sol.value - 1.0).abs() < 1e-12);
        assert!(max_abs(&(sol.state.mat() - diag_real(&[1.0, 0.0]))) < 1e-12);
        assert!(sol.gap() <= 1e-10);
    }

    #[test]
    fn inactive_constraint_gives_top_eigenvector() {
        let c = EnergyConstraint::new(diag_real(&[0.0, 1.0, 3.0]), 3.0).unwrap();
        let g = diag_real(&[0.2, -1.0, 0.7]);
        let sol = feasible_linear_max(&g, &c).unwrap();
        assert!((sol.value - 0.7).abs() < 1e-12);
        assert_eq!(sol.multiplier, Some(0.0));
    }

    #[test]
    fn active_breakpoint_mixes_two_vectors() {
        let c = EnergyConstraint::new(diag_real(&[0.0, 1.0]), 0.25).unwrap();
        let g = diag_real(&[0.0, 1.0]);
        let sol = feasible_linear_max(&g, &c).unwrap();
        assert!((sol.value - 0.25).abs() < 1e-10);
        assert!((c.energy(sol.state.mat()) - 0.25).abs() < 1e-10);
        assert!(sol.gap() <= 1e-10);
    }
}
