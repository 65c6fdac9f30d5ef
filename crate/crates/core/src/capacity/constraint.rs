use crate::error::{dimension, invariant, Error, Result};
use crate::qmat::{self, identity, CMatrix, DensityOperator, STATE_TOL};

/// Feasibility slack for `Tr ρF ≤ E`.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Linear energy constraint `Tr ρF ≤ E` with `F ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyConstraint {
    f: CMatrix,
    e: f64,
    spectrum: Vec<f64>,
}

impl EnergyConstraint {
    pub fn new(f: CMatrix, e: f64) -> Result<Self> {
        if !e.is_finite() {
            return Err(invariant("energy bound must be finite"));
        }
        let spectrum = qmat::eigvalsh(&f)?;
        let min = *spectrum.last().ok_or_else(|| dimension("F is empty"))?;
        if min < -STATE_TOL {
            return Err(invariant(format!("F is not PSD (min eigenvalue {min:.3e})")));
        }
        if min > e + 1e-12 {
            return Err(Error::Infeasible { min_eig: min, bound: e });
        }
        Ok(Self { f: qmat::hermitian_part(&f), e, spectrum })
    }

    /// `F = 0`, which never binds.
    pub fn unconstrained(d: usize) -> Self {
        Self { f: CMatrix::zeros(d, d), e: 0.0, spectrum: vec![0.0; d] }
    }

    pub fn f(&self) -> &CMatrix {
        &self.f
    }

    pub fn bound(&self) -> f64 {
        self.e
    }

    pub fn dim(&self) -> usize {
        self.f.nrows()
    }

    pub fn min_eig(&self) -> f64 {
        *self.spectrum.last().expect("nonempty")
    }

    pub fn max_eig(&self) -> f64 {
        self.spectrum[0]
    }

    /// No state violates the constraint.
    pub fn is_inactive(&self) -> bool {
        self.e >= self.max_eig()
    }

    pub fn energy(&self, rho: &CMatrix) -> f64 {
        qmat::trace_product(rho, &self.f).re
    }

    pub fn is_feasible(&self, rho: &CMatrix) -> bool {
        self.energy(rho) <= self.e + FEASIBILITY_TOL
    }

    pub(crate) fn check_dim(&self, d: usize) -> Result<()> {
        if self.dim() != d {
            return Err(dimension(format!(
                "constraint acts on dimension {}, channel input is {d}",
                self.dim()
            )));
        }
        Ok(())
    }

    /// Projector onto the eigenspace of the smallest eigenvalue of `F`.
    pub(crate) fn ground_space(&self, tol: f64) -> CMatrix {
        let eig = qmat::hermitian_eig(&self.f).expect("F is Hermitian");
        let min = self.min_eig();
        let cols: Vec<usize> = (0..eig.dim()).filter(|&j| eig.values[j] <= min + tol).collect();
        eig.vectors.select_columns(&cols)
    }

    /// A feasible state, as mixed as the constraint allows: `I/d` when it is
    /// feasible, otherwise the mixture of `I/d` with the normalised ground
    /// space of `F` that saturates the bound.
    pub fn interior_point(&self) -> DensityOperator {
        let d = self.dim();
        let mixed = identity(d) / qmat::r(d as f64);
        self.pull_into_feasible(&mixed)
    }

    /// Mix `rho` with the ground state of `F` until `Tr ρF ≤ E`.
    pub(crate) fn pull_into_feasible(&self, rho: &CMatrix) -> DensityOperator {
        let energy = self.energy(rho);
        if energy <= self.e {
            return DensityOperator::from_trusted(rho.clone(), qmat::TraceClass::UnitTrace);
        }
        let g = self.ground_space(1e-10);
        let ground = &g * g.adjoint() / qmat::r(g.ncols() as f64);
        let min = self.min_eig();
        let t = ((self.e - min) / (energy - min)).clamp(0.0, 1.0);
        DensityOperator::from_trusted(rho * qmat::r(t) + ground * qmat::r(1.0 - t), qmat::TraceClass::UnitTrace)
    }
}

/// `(F^{(n)}, nE)` with `F^{(n)} = Σ_k I ⊗ ⋯ ⊗ F ⊗ ⋯ ⊗ I`.
pub fn constraint_tensor(c: &EnergyConstraint, n: usize) -> Result<EnergyConstraint> {
    if n < 1 {
        return Err(invariant("number of copies must be at least 1"));
    }
    let d = c.dim();
    let id = identity(d);
    let mut f = CMatrix::zeros(d.pow(n as u32), d.pow(n as u32));
    for k in 0..n {
        let factors: Vec<&CMatrix> = (0..n).map(|j| if j == k { &c.f } else { &id }).collect();
        f += qmat::tensor_all(factors);
    }
    EnergyConstraint::new(f, n as f64 * c.e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::{diag_real, max_abs, sample_state};

    #[test]
    fn tensor_examples() {
        let c = EnergyConstraint::new(diag_real(&[0.0, 1.0]), 0.3).unwrap();
        assert_eq!(constraint_tensor(&c, 1).unwrap(), c);
        let c2 = constraint_tensor(&c, 2).unwrap();
        assert!(max_abs(&(c2.f() - diag_real(&[0.0, 1.0, 1.0, 2.0]))) < 1e-15);
        assert!((c2.bound() - 0.6).abs() < 1e-15);
        let rho = sample_state(2, 2, 1).unwrap();
        let pair = rho.tensor(&rho);
        assert!((c2.energy(pair.mat()) - 2.0 * c.energy(rho.mat())).abs() < 1e-12);
        assert!(constraint_tensor(&c, 0).is_err());
    }

    #[test]
    fn validation() {
        assert!(matches!(
            EnergyConstraint::new(diag_real(&[1.0, 2.0]), 0.5),
            Err(Error::Infeasible { .. })
        ));
        assert!(EnergyConstraint::new(diag_real(&[-1.0, 2.0]), 0.5).is_err());
        // the bound may sit exactly at the ground energy
        assert!(EnergyConstraint::new(diag_real(&[0.0, 1.0]), 0.0).is_ok());
    }

    #[test]
    fn interior_point_is_feasible_and_saturates() {
        let c = EnergyConstraint::new(diag_real(&[0.0, 1.0, 2.0]), 0.25).unwrap();
        let rho = c.interior_point();
        assert!((c.energy(rho.mat()) - 0.25).abs() < 1e-12);
        assert!((rho.trace() - 1.0).abs() < 1e-12);
        let loose = EnergyConstraint::new(diag_real(&[0.0, 1.0, 2.0]), 5.0).unwrap();
        assert!(max_abs(&(loose.interior_point().into_mat() - identity(3) / qmat::r(3.0))) < 1e-15);
    }
}
