//! Channel-spec files: JSON documents naming a channel, an optional energy
//! constraint, an optional input state and optimizer options.

use std::path::Path;

use entrocap::capacity::{CapacityOptions, EnergyConstraint};
use entrocap::channel::{cq_channel, CpMap, KrausChannel};
use entrocap::gaussian::{
    fock_attenuator, number_operator, thermal_state, GaussianChannelParams, RMatrix, RVector, SymplecticSpace,
};
use entrocap::qmat::{c, CMatrix, CVector, DensityOperator};
use entrocap::Error;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Fock cutoff used for Gaussian channels when neither the file nor the
/// command line sets one.
pub const DEFAULT_CUTOFF: usize = 30;

/// Failure to turn a file into a well-formed problem. Syntax and shape
/// problems are parse errors; documented invariants are library errors.
#[derive(Debug)]
pub enum SpecError {
    Parse(String),
    Library(Error),
}

impl From<Error> for SpecError {
    fn from(e: Error) -> Self {
        SpecError::Library(e)
    }
}

/// A matrix entry: a real number or an `[re, im]` pair.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl Entry {
    fn value(self) -> entrocap::qmat::C64 {
        match self {
            Entry::Real(x) => c(x, 0.0),
            Entry::Complex([re, im]) => c(re, im),
        }
    }
}

pub type RawMatrix = Vec<Vec<Entry>>;

fn rows_cols<T>(rows: &[Vec<T>], at: &str) -> Result<(usize, usize), SpecError> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if n == 0 || m == 0 {
        return Err(SpecError::Parse(format!("{at}: matrix is empty")));
    }
    if let Some((i, row)) = rows.iter().enumerate().find(|(_, row)| row.len() != m) {
        return Err(SpecError::Parse(format!("{at}: row {i} has {} entries, expected {m}", row.len())));
    }
    Ok((n, m))
}

fn complex_matrix(raw: &RawMatrix, at: &str) -> Result<CMatrix, SpecError> {
    let (n, m) = rows_cols(raw, at)?;
    Ok(CMatrix::from_fn(n, m, |i, j| raw[i][j].value()))
}

fn real_matrix(raw: &[Vec<f64>], at: &str) -> Result<RMatrix, SpecError> {
    let (n, m) = rows_cols(raw, at)?;
    Ok(RMatrix::from_fn(n, m, |i, j| raw[i][j]))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianPayload {
    #[serde(rename = "K")]
    pub k: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<Vec<f64>>,
    pub alpha: Vec<Vec<f64>>,
    /// `[modes of A, modes of B]`.
    pub modes: [usize; 2],
}

/// Built-in channel families.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "name", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum Named {
    Identity { d: usize },
    Dephasing { d: usize },
    Depolarizing { d: usize, p: f64 },
    AmplitudeDamping { gamma: f64 },
    Replacement { d_in: usize, tau: StateSpec },
    Random { d_in: usize, d_out: usize, rank: usize, seed: u64 },
    FockAttenuator { eta: f64, cutoff: Option<usize> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum ChannelSpec {
    Kraus(Vec<RawMatrix>),
    /// Output states `σ_k`; the input dimension is their number.
    Cq(Vec<RawMatrix>),
    Gaussian(GaussianPayload),
    Named(Named),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OperatorSpec {
    Matrix(RawMatrix),
    /// `"number_operator"`, the photon number on the truncated Fock space.
    Builtin(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSpec {
    #[serde(rename = "F")]
    pub f: OperatorSpec,
    #[serde(rename = "E")]
    pub e: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateForm {
    Thermal(f64),
    Diagonal(Vec<f64>),
    Pure(Vec<Entry>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    Matrix(RawMatrix),
    Form(StateForm),
}

/// Options a file may set; anything unset keeps the library default.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecOptions {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap_tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parallel: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ensemble_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ranks: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<usize>,
}

impl SpecOptions {
    /// Fields set in `over` win.
    pub fn merged(&self, over: &SpecOptions) -> SpecOptions {
        SpecOptions {
            max_iterations: over.max_iterations.or(self.max_iterations),
            gap_tolerance: over.gap_tolerance.or(self.gap_tolerance),
            restarts: over.restarts.or(self.restarts),
            seed: over.seed.or(self.seed),
            epsilon: over.epsilon.or(self.epsilon),
            parallel: over.parallel.or(self.parallel),
            ensemble_size: over.ensemble_size.or(self.ensemble_size),
            ranks: over.ranks.clone().or_else(|| self.ranks.clone()),
            cutoff: over.cutoff.or(self.cutoff),
        }
    }

    pub fn capacity(&self) -> CapacityOptions {
        let d = CapacityOptions::default();
        CapacityOptions {
            max_iterations: self.max_iterations.unwrap_or(d.max_iterations),
            gap_tolerance: self.gap_tolerance.unwrap_or(d.gap_tolerance),
            restarts: self.restarts.unwrap_or(d.restarts),
            seed: self.seed.unwrap_or(d.seed),
            epsilon: self.epsilon.unwrap_or(d.epsilon),
            parallel: self.parallel.unwrap_or(d.parallel),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpecFile {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(flatten)]
    pub channel: ChannelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraint: Option<ConstraintSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<StateSpec>,
    #[serde(default)]
    pub options: SpecOptions,
}

impl SpecFile {
    pub fn parse(text: &str) -> Result<Self, SpecError> {
        let file: SpecFile = serde_json::from_str(text).map_err(|e| SpecError::Parse(e.to_string()))?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(SpecError::Parse(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                file.schema_version
            )));
        }
        Ok(file)
    }

    pub fn read(path: &Path) -> Result<Self, SpecError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SpecError::Parse(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            SpecError::Parse(msg) => SpecError::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

/// A channel with its constraint and input state, all checked.
pub struct Realized {
    pub channel: KrausChannel,
    pub constraint: EnergyConstraint,
    pub constrained: bool,
    pub state: Option<DensityOperator>,
}

/// A validated problem ready for the library.
pub struct Problem {
    /// Gaussian parameters, when the file gives them.
    pub gaussian: Option<GaussianChannelParams>,
    /// Finite-dimensional form; an error for Gaussian channels without a
    /// Fock realization.
    pub realized: Result<Realized, Error>,
    pub options: SpecOptions,
}

impl Problem {
    pub fn realized(&self) -> Result<&Realized, Error> {
        self.realized.as_ref().map_err(Clone::clone)
    }
}

fn gaussian_params(g: &GaussianPayload) -> Result<GaussianChannelParams, SpecError> {
    let [ma, mb] = g.modes;
    let k = real_matrix(&g.k, "payload.K")?;
    let alpha = real_matrix(&g.alpha, "payload.alpha")?;
    let l = match &g.l {
        Some(v) => nalgebra_vector(v),
        None => RVector::zeros(2 * mb),
    };
    Ok(GaussianChannelParams::new(k, l, alpha, SymplecticSpace::standard(ma), SymplecticSpace::standard(mb))?)
}

fn nalgebra_vector(v: &[f64]) -> RVector {
    RVector::from_column_slice(v)
}

/// Transmissivity of a vacuum-environment single-mode attenuator
/// `K = √η I₂`, `α = (1−η)/2 I₂`, `l = 0`, if `p` is one.
pub fn as_attenuator(p: &GaussianChannelParams) -> Option<f64> {
    if p.space_a.modes() != 1 || p.space_b.modes() != 1 || p.l.amax() > 1e-12 {
        return None;
    }
    let s = p.k[(0, 0)];
    let eta = s * s;
    let k_ok = (&p.k - RMatrix::identity(2, 2) * s).amax() <= 1e-12 && s > 0.0;
    let a_ok = (&p.alpha - RMatrix::identity(2, 2) * ((1.0 - eta) / 2.0)).amax() <= 1e-12;
    (k_ok && a_ok && eta < 1.0).then_some(eta)
}

fn state(spec: &StateSpec, d: usize, at: &str) -> Result<DensityOperator, SpecError> {
    let rho = match spec {
        StateSpec::Matrix(m) => DensityOperator::new(complex_matrix(m, at)?)?,
        StateSpec::Form(StateForm::Thermal(n)) => thermal_state(*n, d.saturating_sub(1))?,
        StateSpec::Form(StateForm::Diagonal(p)) => DensityOperator::diagonal(p)?,
        StateSpec::Form(StateForm::Pure(v)) => {
            DensityOperator::pure(&CVector::from_iterator(v.len(), v.iter().map(|e| e.value())))?
        }
    };
    if rho.dim() != d {
        return Err(SpecError::Library(Error::Dimension(format!(
            "{at} has dimension {}, channel input has {d}",
            rho.dim()
        ))));
    }
    Ok(rho)
}

fn named(n: &Named, cutoff: usize) -> Result<KrausChannel, SpecError> {
    Ok(match n {
        Named::Identity { d } => KrausChannel::identity(*d),
        Named::Dephasing { d } => KrausChannel::dephasing(*d),
        Named::Depolarizing { d, p } => KrausChannel::depolarizing(*d, *p)?,
        Named::AmplitudeDamping { gamma } => KrausChannel::amplitude_damping(*gamma)?,
        Named::Replacement { d_in, tau } => {
            let tau = match tau {
                StateSpec::Matrix(m) => DensityOperator::new(complex_matrix(m, "payload.params.tau")?)?,
                StateSpec::Form(StateForm::Diagonal(p)) => DensityOperator::diagonal(p)?,
                StateSpec::Form(StateForm::Pure(v)) => {
                    DensityOperator::pure(&CVector::from_iterator(v.len(), v.iter().map(|e| e.value())))?
                }
                StateSpec::Form(StateForm::Thermal(_)) => {
                    return Err(SpecError::Parse("payload.params.tau: thermal needs a Fock cutoff".into()))
                }
            };
            KrausChannel::replacement(*d_in, &tau)
        }
        Named::Random { d_in, d_out, rank, seed } => KrausChannel::random(*d_in, *d_out, *rank, *seed)?,
        Named::FockAttenuator { eta, cutoff: own } => fock_attenuator(*eta, own.unwrap_or(cutoff))?,
    })
}

fn realize(channel: KrausChannel, file: &SpecFile) -> Result<Realized, SpecError> {
    let d = channel.d_in();
    let (constraint, constrained) = match &file.constraint {
        None => (EnergyConstraint::unconstrained(d), false),
        Some(spec) => {
            let f = match &spec.f {
                OperatorSpec::Matrix(m) => complex_matrix(m, "constraint.F")?,
                OperatorSpec::Builtin(name) if name == "number_operator" => number_operator(d - 1),
                OperatorSpec::Builtin(name) => {
                    return Err(SpecError::Parse(format!("constraint.F: unknown operator \"{name}\"")))
                }
            };
            if f.shape() != (d, d) {
                return Err(SpecError::Library(Error::Dimension(format!(
                    "constraint.F is {}x{}, channel input has dimension {d}",
                    f.nrows(),
                    f.ncols()
                ))));
            }
            (EnergyConstraint::new(f, spec.e)?, true)
        }
    };
    let state = file.state.as_ref().map(|s| state(s, d, "state")).transpose()?;
    Ok(Realized { channel, constraint, constrained, state })
}

impl Problem {
    /// Realize the file with `overrides` taking precedence over its options.
    pub fn build(file: &SpecFile, overrides: &SpecOptions) -> Result<Self, SpecError> {
        let options = file.options.merged(overrides);
        let cutoff = options.cutoff.unwrap_or(DEFAULT_CUTOFF);
        let (channel, gaussian) = match &file.channel {
            ChannelSpec::Kraus(list) => {
                if list.is_empty() {
                    return Err(SpecError::Parse("payload: Kraus list is empty".into()));
                }
                let ks = list
                    .iter()
                    .enumerate()
                    .map(|(i, m)| complex_matrix(m, &format!("payload[{i}]")))
                    .collect::<Result<Vec<_>, _>>()?;
                (Ok(KrausChannel::new(ks)?), None)
            }
            ChannelSpec::Cq(list) => {
                if list.is_empty() {
                    return Err(SpecError::Parse("payload: state list is empty".into()));
                }
                let states = list
                    .iter()
                    .enumerate()
                    .map(|(i, m)| Ok(DensityOperator::new(complex_matrix(m, &format!("payload[{i}]"))?)?))
                    .collect::<Result<Vec<_>, SpecError>>()?;
                (Ok(cq_channel(&states, states.len())?), None)
            }
            ChannelSpec::Gaussian(g) => {
                let p = gaussian_params(g)?;
                let validity = entrocap::gaussian::validate_gaussian(&p)?;
                if !validity.valid {
                    return Err(SpecError::Library(Error::Invariant(format!(
                        "Gaussian parameters violate α ≥ ±(i/2)(Δ_B − KᵀΔ_A K) (min eigenvalue {:.3e})",
                        validity.min_eig_both_signs
                    ))));
                }
                let realized = match as_attenuator(&p) {
                    Some(eta) if eta > 0.0 => Ok(fock_attenuator(eta, cutoff)?),
                    _ => Err(Error::Unsupported(
                        "only single-mode vacuum attenuators have a Fock realization".into(),
                    )),
                };
                (realized, Some(p))
            }
            ChannelSpec::Named(n) => (Ok(named(n, cutoff)?), None),
        };
        let realized = match channel {
            Ok(ch) => Ok(realize(ch, file)?),
            Err(e) => Err(e),
        };
        Ok(Self { gaussian, realized, options })
    }
}
