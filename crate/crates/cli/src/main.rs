mod spec;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use entrocap::capacity::{
    additivity_probe, cea_capacity, check_prop1, chi_at_state, chi_capacity, coincidence_certificate,
    truncation_convergence, CapacityOptions, CapacityResult, Prop1Verdict,
};
use entrocap::channel::{is_cq, CpMap, CQ_TOL};
use entrocap::entropy::{
    coherent_information, entropy, mutual_information, mutual_information_entropic, von_neumann,
};
use entrocap::gaussian::{classify_gaussian, gaussian_mi_oracle, validate_gaussian, GaussianState};
use entrocap::properties::run_all;
use entrocap::qmat::{max_abs, DensityOperator};
use entrocap::Error;
use serde_json::{json, Value};

use spec::{Problem, SpecError, SpecFile, SpecOptions, StateForm, StateSpec};

const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "entrocap", version, about = "Entropic quantities and constrained capacities of quantum channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(clap::Args)]
struct Flags {
    /// Base seed for randomized restarts and property instances.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Target certified gap in bits.
    #[arg(long = "gap-tol", global = true)]
    gap_tol: Option<f64>,
    #[arg(long, global = true)]
    restarts: Option<usize>,
    /// Fock cutoff for Gaussian channels.
    #[arg(long, global = true)]
    cutoff: Option<usize>,
    #[arg(long = "max-iter", global = true)]
    max_iter: Option<usize>,
    /// Weight of I/d mixed into iterates before taking logarithms.
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Number of ensemble members for chi searches.
    #[arg(long = "ensemble-size", global = true)]
    ensemble_size: Option<usize>,
    /// Truncation ranks, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    ranks: Option<Vec<usize>>,
    /// Write the machine-readable report to this path.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    /// Print the machine-readable report instead of the summary.
    #[arg(long, global = true)]
    json: bool,
    /// Include wall time in the machine-readable report.
    #[arg(long, global = true)]
    timing: bool,
    /// Run restarts and suite cases on one thread.
    #[arg(long, global = true)]
    serial: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a spec file and check every invariant of its contents.
    Validate { spec: PathBuf },
    /// Entropies of the input state and of both channel outputs.
    Entropy { spec: PathBuf },
    /// Mutual and coherent information at the spec's input state.
    Mi { spec: PathBuf },
    /// Certified entanglement-assisted capacity.
    Cea { spec: PathBuf },
    /// Heuristic constrained chi-capacity.
    Chi {
        spec: PathBuf,
        /// Optimize over ensembles with the spec's state as average.
        #[arg(long = "at-state")]
        at_state: bool,
    },
    /// Compare C_ea with 2 C_chi(channel) - C_chi(complement).
    Prop1 { spec: PathBuf },
    /// Evidence on whether C_ea and C_chi coincide.
    Coincidence { spec: PathBuf },
    /// Validity and c-q classification of Gaussian parameters.
    GaussianClassify { spec: PathBuf },
    /// C_ea of output truncations next to the full channel.
    Truncation { spec: PathBuf },
    /// Compare two-copy C_ea with twice the one-copy value.
    Additivity { spec: PathBuf },
    /// Run the seeded property suite.
    Suite { spec: Option<PathBuf> },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate { .. } => "validate",
            Command::Entropy { .. } => "entropy",
            Command::Mi { .. } => "mi",
            Command::Cea { .. } => "cea",
            Command::Chi { .. } => "chi",
            Command::Prop1 { .. } => "prop1",
            Command::Coincidence { .. } => "coincidence",
            Command::GaussianClassify { .. } => "gaussian-classify",
            Command::Truncation { .. } => "truncation",
            Command::Additivity { .. } => "additivity",
            Command::Suite { .. } => "suite",
        }
    }

    fn spec(&self) -> Option<&Path> {
        match self {
            Command::Validate { spec }
            | Command::Entropy { spec }
            | Command::Mi { spec }
            | Command::Cea { spec }
            | Command::Chi { spec, .. }
            | Command::Prop1 { spec }
            | Command::Coincidence { spec }
            | Command::GaussianClassify { spec }
            | Command::Truncation { spec }
            | Command::Additivity { spec } => Some(spec),
            Command::Suite { spec } => spec.as_deref(),
        }
    }
}

impl Flags {
    fn overrides(&self) -> SpecOptions {
        SpecOptions {
            max_iterations: self.max_iter,
            gap_tolerance: self.gap_tol,
            restarts: self.restarts,
            seed: self.seed,
            epsilon: self.epsilon,
            parallel: self.serial.then_some(false),
            ensemble_size: self.ensemble_size,
            ranks: self.ranks.clone(),
            cutoff: self.cutoff,
        }
    }
}

/// Result of one command before it is written out.
struct Outcome {
    result: Value,
    /// `Some(false)` flags a computation that stopped before its tolerance.
    converged: Option<bool>,
    warnings: Vec<String>,
    summary: Vec<String>,
    /// The suite failed.
    failed: bool,
}

impl Outcome {
    fn new(result: Value, summary: Vec<String>) -> Self {
        Self { result, converged: None, warnings: vec![], summary, failed: false }
    }
}

enum Failure {
    Parse(String),
    Library(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Library(e)
    }
}

impl From<SpecError> for Failure {
    fn from(e: SpecError) -> Self {
        match e {
            SpecError::Parse(m) => Failure::Parse(m),
            SpecError::Library(e) => Failure::Library(e),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let clock = Instant::now();
    let loaded = match cli.command.spec() {
        Some(path) => SpecFile::read(path).map(Some),
        None => Ok(None),
    };
    let outcome = loaded
        .map_err(Failure::from)
        .and_then(|file| run(&cli.command, file.as_ref(), &cli.flags).map(|o| (file, o)));
    let (file, outcome) = match outcome {
        Ok(o) => o,
        Err(Failure::Parse(msg)) => {
            eprintln!("parse error: {msg}");
            return ExitCode::from(2);
        }
        Err(Failure::Library(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    let elapsed = clock.elapsed();
    let options = file.as_ref().map_or_else(SpecOptions::default, |f| f.options.clone()).merged(&cli.flags.overrides());
    let capacity = options.capacity();
    let mut report = json!({
        "schema_version": REPORT_SCHEMA_VERSION,
        "command": cli.command.name(),
        "spec": cli.command.spec().map(|p| p.display().to_string()),
        "input": file.as_ref().map(|f| serde_json::to_value(f).expect("spec serializes")),
        "options": options_value(&capacity, &options),
        "seed": capacity.seed,
        "result": outcome.result,
        "converged": outcome.converged,
        "warnings": outcome.warnings,
    });
    if cli.flags.timing {
        report["wall_time_seconds"] = json!(elapsed.as_secs_f64());
    }
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    if let Some(path) = &cli.flags.report {
        if let Err(e) = std::fs::write(path, &text) {
            eprintln!("error: cannot write report to {}: {e}", path.display());
            return ExitCode::from(3);
        }
    }
    if cli.flags.json {
        print!("{text}");
    } else {
        println!("{}", cli.command.name());
        for line in &outcome.summary {
            println!("  {line}");
        }
        if outcome.converged == Some(false) {
            println!("  not converged: the certificate is wider than the gap tolerance");
        }
        for w in &outcome.warnings {
            println!("  warning: {w}");
        }
        println!("  seed {}, wall time {:.3} s", capacity.seed, elapsed.as_secs_f64());
    }
    if outcome.failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn options_value(c: &CapacityOptions, o: &SpecOptions) -> Value {
    let mut v = serde_json::to_value(c).expect("options serialize");
    v["ensemble_size"] = json!(o.ensemble_size);
    v["ranks"] = json!(o.ranks);
    v["cutoff"] = json!(o.cutoff.unwrap_or(spec::DEFAULT_CUTOFF));
    v
}

fn run(command: &Command, file: Option<&SpecFile>, flags: &Flags) -> Result<Outcome, Failure> {
    if let Command::Suite { .. } = command {
        let options = file.map_or_else(SpecOptions::default, |f| f.options.clone()).merged(&flags.overrides());
        return Ok(suite(&options.capacity()));
    }
    let file = file.expect("every other command takes a spec");
    let problem = Problem::build(file, &flags.overrides()).map_err(|e| match e {
        SpecError::Parse(m) => Failure::Parse(format!("{}: {m}", command.spec().expect("has spec").display())),
        other => other.into(),
    })?;
    let opts = problem.options.capacity();
    match command {
        Command::Validate { .. } => validate(&problem),
        Command::Entropy { .. } => entropies(&problem),
        Command::Mi { .. } => mi(&problem),
        Command::Cea { .. } => {
            let p = problem.realized()?;
            let res = cea_capacity(&p.channel, &p.constraint, &opts)?;
            let energy = p.constraint.energy(res.optimizer.average_state().mat());
            Ok(capacity_outcome("C_ea", &res, energy, p.constrained))
        }
        Command::Chi { at_state, .. } => {
            let p = problem.realized()?;
            let m = problem.options.ensemble_size;
            let res = if *at_state {
                let rho = p
                    .state
                    .as_ref()
                    .ok_or_else(|| Error::Invariant("chi --at-state needs a state in the spec".into()))?;
                chi_at_state(&p.channel, rho, m, &opts)?
            } else {
                chi_capacity(&p.channel, &p.constraint, m, &opts)?
            };
            let energy = p.constraint.energy(res.optimizer.average_state().mat());
            let mut out = capacity_outcome("C_chi", &res, energy, p.constrained);
            if let Some(ens) = res.optimizer.ensemble() {
                out.result["ensemble_weights"] = json!(ens.weights());
            }
            Ok(out)
        }
        Command::Prop1 { .. } => {
            let p = problem.realized()?;
            let rep = check_prop1(&p.channel, &p.constraint, &opts)?;
            let summary = vec![
                format!("C_ea in [{:.6}, {:.6}]", rep.cea.value, rep.cea.upper),
                format!("C_chi(channel) >= {:.6}, C_chi(complement) >= {:.6}", rep.chi_channel, rep.chi_complement),
                format!("margin {:+.3e}: {:?}", rep.margin, rep.verdict),
            ];
            let mut out = Outcome::new(serde_json::to_value(&rep).expect("serializes"), summary);
            if rep.verdict == Prop1Verdict::Inconclusive {
                out.warnings.push("heuristic chi values leave the inequality undecided".into());
            }
            Ok(out)
        }
        Command::Coincidence { .. } => {
            let p = problem.realized()?;
            let rep = coincidence_certificate(&p.channel, &p.constraint, &opts)?;
            let summary = vec![
                format!("C_ea in [{:.6}, {:.6}], C_chi >= {:.6}", rep.cea.value, rep.cea.upper, rep.chi),
                format!("difference {:.3e}", rep.gap),
                format!(
                    "barycenter rank {}, restricted channel discrete c-q: {}",
                    rep.barycenter_rank, rep.cq_discrete
                ),
            ];
            Ok(Outcome::new(serde_json::to_value(&rep).expect("serializes"), summary))
        }
        Command::GaussianClassify { .. } => classify(&problem, file),
        Command::Truncation { .. } => {
            let p = problem.realized()?;
            let ranks = problem.options.ranks.clone().unwrap_or_else(|| (1..=p.channel.d_out()).collect());
            let tau = DensityOperator::basis(p.channel.d_out(), 0)?;
            let table = truncation_convergence(&p.channel, &p.constraint, &ranks, &tau, &opts)?;
            let mut summary: Vec<String> = table
                .rows
                .iter()
                .map(|r| format!("n = {:>3}: [{:.6}, {:.6}]", r.rank, r.bracket.value, r.bracket.upper))
                .collect();
            summary.push(format!("full:    [{:.6}, {:.6}]", table.full.value, table.full.upper));
            summary.push(format!("monotone: {}", table.monotone));
            let mut out = Outcome::new(serde_json::to_value(&table).expect("serializes"), summary);
            if !table.monotone {
                out.warnings.push("brackets contradict monotonicity in the rank".into());
            }
            Ok(out)
        }
        Command::Additivity { .. } => {
            let p = problem.realized()?;
            let rep = additivity_probe(&p.channel, &p.constraint, &opts)?;
            let summary = vec![
                format!("C_ea one copy in [{:.6}, {:.6}]", rep.one_copy.value, rep.one_copy.upper),
                format!("C_ea two copies in [{:.6}, {:.6}]", rep.two_copy.value, rep.two_copy.upper),
                format!("difference {:+.3e}, combined gap {:.3e}", rep.difference, rep.combined_gap),
            ];
            let mut out = Outcome::new(serde_json::to_value(&rep).expect("serializes"), summary);
            if !rep.consistent {
                out.warnings.push("difference exceeds the combined certificate gaps".into());
            }
            Ok(out)
        }
        Command::Suite { .. } => unreachable!("handled above"),
    }
}

fn capacity_outcome(label: &str, res: &CapacityResult, energy: f64, constrained: bool) -> Outcome {
    let state = res.optimizer.average_state();
    let mut result = serde_json::to_value(res).expect("serializes");
    result["average_state_spectrum"] = json!(state.eigenvalues());
    result["energy"] = json!(constrained.then_some(energy));
    let mut summary = vec![match res.upper() {
        Some(upper) => format!("{label} in [{:.6}, {:.6}] bits (gap {:.2e})", res.value, upper, upper - res.value),
        None => format!("{label} >= {:.6} bits (heuristic)", res.value),
    }];
    summary.push(format!("{} iterations", res.iterations));
    if constrained {
        summary.push(format!("energy of the average state {energy:.6}"));
    }
    let mut out = Outcome::new(result, summary);
    if res.is_certified() {
        out.converged = Some(res.converged);
    }
    out
}

fn validate(problem: &Problem) -> Result<Outcome, Failure> {
    let mut result = json!({});
    let mut summary = vec![];
    if let Some(g) = &problem.gaussian {
        let validity = validate_gaussian(g)?;
        result["gaussian"] = json!({ "validity": validity, "class": classify_gaussian(g) });
        summary.push(format!("Gaussian parameters valid (min eigenvalue {:.3e})", validity.min_eig_both_signs));
    }
    match &problem.realized {
        Ok(p) => {
            let ch = &p.channel;
            let gram = ch.kraus().iter().fold(entrocap::qmat::CMatrix::zeros(ch.d_in(), ch.d_in()), |acc, k| {
                acc + k.adjoint() * k
            });
            let tp_residual = max_abs(&(gram - entrocap::qmat::identity(ch.d_in())));
            let cq = is_cq(ch, CQ_TOL);
            result["channel"] = json!({
                "d_in": ch.d_in(),
                "d_out": ch.d_out(),
                "kraus_count": ch.kraus().len(),
                "minimal_kraus_rank": ch.canonicalize().d_env(),
                "trace_preservation_residual": tp_residual,
                "cq": cq,
            });
            summary.push(format!(
                "channel {} -> {} with {} Kraus operators (minimal {}), trace-preservation residual {:.1e}",
                ch.d_in(),
                ch.d_out(),
                ch.kraus().len(),
                ch.canonicalize().d_env(),
                tp_residual
            ));
            summary.push(format!("c-q: {}", cq.is_cq));
            if p.constrained {
                result["constraint"] = json!({
                    "bound": p.constraint.bound(),
                    "min_eig": p.constraint.min_eig(),
                    "max_eig": p.constraint.max_eig(),
                    "inactive": p.constraint.is_inactive(),
                });
                summary.push(format!(
                    "constraint feasible: E = {} >= min eig F = {:.6}",
                    p.constraint.bound(),
                    p.constraint.min_eig()
                ));
            }
            if let Some(rho) = &p.state {
                result["state"] = json!({ "dim": rho.dim(), "rank": rho.rank(1e-10) });
                summary.push(format!("state of dimension {} and rank {}", rho.dim(), rho.rank(1e-10)));
            }
        }
        Err(e) => {
            result["fock_realization"] = json!(e.to_string());
            summary.push(format!("no Fock realization: {e}"));
        }
    }
    Ok(Outcome::new(result, summary))
}

fn input_state(problem: &Problem, warnings: &mut Vec<String>) -> Result<DensityOperator, Error> {
    let p = problem.realized()?;
    Ok(match &p.state {
        Some(s) => s.clone(),
        None => {
            warnings.push("no state in the spec; using the maximally mixed state".into());
            DensityOperator::maximally_mixed(p.channel.d_in())
        }
    })
}

fn entropies(problem: &Problem) -> Result<Outcome, Failure> {
    let mut warnings = vec![];
    let rho = input_state(problem, &mut warnings)?;
    let ch = &problem.realized()?.channel;
    let out = entropy(&ch.apply_matrix(rho.mat())?)?;
    let env = entropy(&ch.complementary().apply_matrix(rho.mat())?)?;
    let input = von_neumann(&rho);
    let result = json!({
        "input": input,
        "output": out.h,
        "environment": env.h,
    });
    let summary = vec![
        format!("H(rho) = {input:.6}"),
        format!("H(Phi(rho)) = {:.6}", out.h),
        format!("H(complement(rho)) = {:.6}", env.h),
    ];
    let mut o = Outcome::new(result, summary);
    o.warnings = warnings;
    Ok(o)
}

fn mi(problem: &Problem) -> Result<Outcome, Failure> {
    let mut warnings = vec![];
    let rho = input_state(problem, &mut warnings)?;
    let ch = &problem.realized()?.channel;
    let relative = mutual_information(&rho, ch)?;
    let entropic = mutual_information_entropic(&rho, ch)?;
    let coherent = coherent_information(&rho, ch)?;
    let result = json!({
        "mutual_information": relative,
        "mutual_information_entropic": entropic,
        "route_discrepancy": (relative - entropic).abs(),
        "coherent_information": coherent,
    });
    let summary = vec![
        format!("I(rho, Phi) = {relative:.6} bits (entropy route {entropic:.6})"),
        format!("I_c(rho, Phi) = {coherent:.6} bits"),
    ];
    let mut o = Outcome::new(result, summary);
    o.warnings = warnings;
    Ok(o)
}

fn classify(problem: &Problem, file: &SpecFile) -> Result<Outcome, Failure> {
    let g = problem
        .gaussian
        .as_ref()
        .ok_or_else(|| Error::Unsupported("gaussian-classify needs a spec of kind gaussian".into()))?;
    let validity = validate_gaussian(g)?;
    let class = classify_gaussian(g);
    let mut result = json!({ "validity": validity, "class": class });
    let mut summary = vec![
        format!("valid: {}", validity.valid),
        format!(
            "c-q: {}, discrete type: {}, no discrete subchannel: {}",
            class.cq, class.discrete_type, class.no_discrete_subchannel
        ),
    ];
    if let Some(StateSpec::Form(StateForm::Thermal(n))) = &file.state {
        match GaussianState::thermal(*n).and_then(|s| gaussian_mi_oracle(g, &s)) {
            Ok(v) => {
                result["mi_oracle"] = json!(v);
                summary.push(format!("I(thermal({n}), Phi) = {v:.6} bits from covariances"));
            }
            Err(Error::Unsupported(_)) => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(Outcome::new(result, summary))
}

fn suite(opts: &CapacityOptions) -> Outcome {
    let outcomes = run_all(opts.seed, opts.parallel);
    let failed = outcomes.iter().any(|o| !o.passed);
    let summary = outcomes
        .iter()
        .map(|o| {
            let mut line = format!(
                "{} {}: {} ({} cases, worst {:.2e}, tolerance {:.0e})",
                if o.passed { "PASS" } else { "FAIL" },
                o.module,
                o.name,
                o.cases,
                o.worst,
                o.tolerance
            );
            if let Some(e) = &o.error {
                line.push_str(&format!(": {e}"));
            }
            line
        })
        .collect();
    let passed = outcomes.iter().filter(|o| o.passed).count();
    let result = json!({ "passed": passed, "total": outcomes.len(), "properties": outcomes });
    let mut out = Outcome::new(result, summary);
    out.failed = failed;
    out
}
