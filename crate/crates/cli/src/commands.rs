//! One function per subcommand. Each returns an [`Outcome`]: the JSON report
//! printed on stdout, the named checks that failed, and any files written.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use progq::cartan::{
    controlled_no_go_check, distance_up_to_phase, min_fidelity_closed, min_fidelity_from_phases,
    optimal_params, optimal_v, scan_cartan, CartanParams, Sign,
};
use progq::channels::{
    fidelity_for_program, fidelity_via_partial_trace, kraus_sum_fidelity, program_fidelity,
    worst_case_fidelity, ProgrammableGate,
};
use progq::covariant::{covariant_sweep, write_sweep};
use progq::covering::{build_net, covering_scaling_experiment, jensen_bound_check, CoveringConfig};
use progq::linalg::{
    basis_vector, eig_hermitian, haar_unitary_with, paulis, rng_from_seed, DensityState, MatrixJson,
    PovmJson, UnitaryOp,
};
use progq::povm::{distance_bound_chain, povm_distance_qubit, Povm};
use progq::search::SearchConfig;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Format, RunConfig};
use crate::error::CliError;

/// Target worst-case fidelity of the optimal qubit gate.
pub const OPTIMAL_FIDELITY: f64 = 0.25;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
}

impl Check {
    /// Passes when `value <= tolerance`.
    pub fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            passed: value <= tolerance,
            value,
            tolerance,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub passed: bool,
    pub failures: Vec<String>,
    pub report: Value,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    fn from_checks(checks: Vec<Check>, mut report: Value, files: Vec<PathBuf>) -> Self {
        let failures: Vec<String> = checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect();
        report["checks"] = serde_json::to_value(&checks).expect("checks serialize");
        report["passed"] = Value::Bool(failures.is_empty());
        if !files.is_empty() {
            report["files"] = json!(files);
        }
        Self {
            passed: failures.is_empty(),
            failures,
            report,
            files,
        }
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::file(path, e))?;
    // serde_json errors carry line and column.
    serde_json::from_str(&text).map_err(|e| CliError::file(path, e))
}

fn load_unitary(path: &Path) -> Result<UnitaryOp<f64>, CliError> {
    let m: MatrixJson = read_json(path)?;
    let m = m.to_matrix().map_err(|e| CliError::file(path, e))?;
    UnitaryOp::new(m).map_err(|e| CliError::file(path, e))
}

fn load_state(path: &Path) -> Result<DensityState<f64>, CliError> {
    let m: MatrixJson = read_json(path)?;
    let m = m.to_matrix().map_err(|e| CliError::file(path, e))?;
    DensityState::new(m).map_err(|e| CliError::file(path, e))
}

fn load_povm(path: &Path) -> Result<Povm<f64>, CliError> {
    let p: PovmJson = read_json(path)?;
    Povm::from_json(&p).map_err(|e| CliError::file(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::file(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::file(path, e))
}

fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::file(path, e))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| CliError::file(path, e))
}

#[derive(Debug, Clone)]
pub struct VerifyArgs {
    pub sign: Sign,
    /// Check these canonical angles instead of the optimal gate.
    pub alpha: Option<[f64; 3]>,
    /// Haar targets for the reported `S^dag S` spread.
    pub samples: usize,
    pub search: SearchConfig,
}

impl Default for VerifyArgs {
    fn default() -> Self {
        Self {
            sign: Sign::Plus,
            alpha: None,
            samples: 20,
            search: SearchConfig::default(),
        }
    }
}

/// Closed form, numeric min-max, `S^dag S` spectrum, phase variants and circuit.
pub fn verify_optimal(args: &VerifyArgs, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (gate, circuit) = match args.alpha {
        None => {
            let (g, c) = optimal_v::<f64>(args.sign);
            (g, Some(c))
        }
        Some([a1, a2, a3]) => (progq::cartan::cartan_gate(&CartanParams::new(a1, a2, a3)), None),
    };
    let params = args
        .alpha
        .map_or_else(|| optimal_params::<f64>(args.sign), |[a, b, c]| CartanParams::new(a, b, c));
    let mut checks = Vec::new();

    let closed = min_fidelity_closed(&params);
    checks.push(Check::at_most("closed_form", (closed.fidelity - OPTIMAL_FIDELITY).abs(), 1e-12));

    let search = SearchConfig {
        seed: cfg.seed,
        ..args.search.clone()
    };
    let numeric = worst_case_fidelity(&gate, &search)?;
    checks.push(Check::at_most(
        "numeric_min_max",
        (numeric.fidelity - OPTIMAL_FIDELITY).abs(),
        1e-6,
    ));

    // At the four candidate worst-case targets U = sigma_j, S^dag S = |t_j|^2 I.
    let mut pauli_dev: f64 = 0.0;
    for p in paulis::<f64>() {
        pauli_dev = pauli_dev.max(sdagger_s_deviation(&UnitaryOp::new(p)?, &gate)?);
    }
    checks.push(Check::at_most("sdagger_s_pauli_targets", pauli_dev, 1e-10));

    // Away from the Paulis the spectrum is 1 ± x(U); reported, not checked.
    let mut rng = rng_from_seed(cfg.seed);
    let mut haar_dev: f64 = 0.0;
    for _ in 0..args.samples {
        let u = haar_unitary_with::<f64, _>(2, &mut rng);
        haar_dev = haar_dev.max(sdagger_s_deviation(&u, &gate)?);
    }

    let variants: Vec<CartanParams<f64>> = match args.alpha {
        None => {
            let q = std::f64::consts::FRAC_PI_4;
            vec![
                CartanParams::new(q, 0.0, q),
                CartanParams::new(q, 0.0, -q),
                CartanParams::new(-q, 0.0, q),
                CartanParams::new(-q, 0.0, -q),
            ]
        }
        Some(_) => vec![params],
    };
    let variant_dev = variants
        .iter()
        .flat_map(|p| [p.phases(), p.phases().negated()])
        .map(|th| (min_fidelity_from_phases(&th).fidelity - OPTIMAL_FIDELITY).abs())
        .fold(0.0, f64::max);
    checks.push(Check::at_most("phase_variants", variant_dev, 1e-12));

    let mut report = json!({
        "sign": args.sign,
        "alpha": params.alpha,
        "fidelity_closed": closed.fidelity,
        "worst_pauli_index": closed.worst_pauli_index,
        "fidelity_numeric": numeric.fidelity,
        "numeric_search": numeric.report(),
        "sdagger_s_haar_max_deviation": haar_dev,
        "sdagger_s_haar_samples": args.samples,
    });
    if let Some(c) = circuit {
        let dev = distance_up_to_phase(&c.unitary(), gate.unitary().matrix());
        checks.push(Check::at_most("circuit", dev, 1e-10));
        report["circuit"] = json!(c.to_string().lines().collect::<Vec<_>>());
    }
    Ok(Outcome::from_checks(checks, report, vec![]))
}

/// Largest `|lambda - 1|` over the spectrum of `S(U, V)^dag S(U, V)`.
pub fn sdagger_s_deviation(u: &UnitaryOp<f64>, gate: &ProgrammableGate<f64>) -> Result<f64, CliError> {
    let s = progq::channels::s_matrix(u, gate)?;
    let e = eig_hermitian(&s.adjoint().matmul(&s))?;
    Ok(e.values.iter().fold(0.0, |m, v| m.max((v - 1.0).abs())))
}

/// Writes the scan to `sink` and checks that no grid point beats `1/4`.
pub fn scan_cartan_to<W: Write>(grid: usize, sink: &mut W) -> Result<Outcome, CliError> {
    let summary = scan_cartan(grid, sink)?;
    let checks = vec![Check::at_most(
        "max_fidelity",
        summary.max_fidelity - OPTIMAL_FIDELITY,
        1e-12,
    )];
    let report = json!({
        "grid": grid,
        "rows": summary.rows,
        "max_fidelity": summary.max_fidelity,
        "argmax": summary.argmax,
    });
    Ok(Outcome::from_checks(checks, report, vec![]))
}

/// Closed-form scan over `alpha_i = k pi / grid`; always CSV.
pub fn scan_cartan_cmd(grid: usize, out: Option<&Path>, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let path = cfg.output_file(out, "scan_cartan.csv");
    let mut w = create(&path)?;
    let mut outcome = scan_cartan_to(grid, &mut w)?;
    w.flush().map_err(|e| CliError::file(&path, e))?;
    outcome.report["files"] = json!([path]);
    outcome.files.push(path);
    Ok(outcome)
}

/// `2j` from `"25/2"`, `"12.5"` or `"12"`.
pub fn parse_spin(text: &str) -> Result<u32, CliError> {
    let bad = || CliError::Input(format!("{text:?} is not a positive half-integer"));
    let twice = if let Some((num, den)) = text.split_once('/') {
        let num: u32 = num.trim().parse().map_err(|_| bad())?;
        match den.trim() {
            "2" => num,
            "1" => num * 2,
            _ => return Err(bad()),
        }
    } else {
        let j: f64 = text.trim().parse().map_err(|_| bad())?;
        let t = 2.0 * j;
        if !(t.is_finite() && t >= 0.0 && (t - t.round()).abs() < 1e-9) {
            return Err(bad());
        }
        t.round() as u32
    };
    if twice == 0 {
        return Err(bad());
    }
    Ok(twice)
}

pub fn covariant_sweep_cmd(
    twice_j_max: u32,
    samples: usize,
    out: Option<&Path>,
    cfg: &RunConfig,
) -> Result<Outcome, CliError> {
    let rows = covariant_sweep(twice_j_max, samples, cfg.seed)?;
    let max_residual = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    let monotone = rows.windows(2).all(|w| w[1].delta < w[0].delta);
    let path = match cfg.format {
        Format::Csv => {
            let path = cfg.output_file(out, "covariant_sweep.csv");
            let mut w = create(&path)?;
            write_sweep(&rows, &mut w)
                .and_then(|_| w.flush())
                .map_err(|e| CliError::file(&path, e))?;
            path
        }
        Format::Json => {
            let path = cfg.output_file(out, "covariant_sweep.json");
            write_json_file(&path, &rows)?;
            path
        }
    };
    let checks = vec![
        Check::at_most("delta_equals_two_over_d", max_residual, 1e-9),
        Check {
            name: "delta_decreasing".into(),
            passed: monotone,
            value: if monotone { 0.0 } else { 1.0 },
            tolerance: 0.0,
        },
    ];
    let report = json!({
        "twice_j_max": twice_j_max,
        "samples": samples,
        "rows": rows.len(),
        "max_residual": max_residual,
    });
    Ok(Outcome::from_checks(checks, report, vec![path]))
}

#[derive(Debug, Clone)]
pub struct CoveringArgs {
    pub radii: Vec<f64>,
    pub pool_size: usize,
    pub max_centers: usize,
    /// Haar targets for the Jensen bound check.
    pub targets: usize,
}

impl Default for CoveringArgs {
    fn default() -> Self {
        let base = CoveringConfig::default();
        Self {
            radii: vec![0.8, 0.4, 0.2, 0.1],
            pool_size: base.pool_size,
            max_centers: base.max_centers,
            targets: 1000,
        }
    }
}

/// Slope range accepted for the qubit covering exponent.
pub const SLOPE_RANGE: (f64, f64) = (1.5, 2.5);

pub fn covering_cmd(args: &CoveringArgs, out: Option<&Path>, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let config = CoveringConfig {
        pool_size: args.pool_size,
        seed: cfg.seed,
        max_centers: args.max_centers,
    };
    let rep = covering_scaling_experiment(&args.radii, &config)?;
    let smallest = *args.radii.last().expect("validated non-empty");
    let net = build_net(2, smallest, &config)?;
    let basis = vec![basis_vector(2, 0), basis_vector(2, 1)];
    let mut rng = rng_from_seed(cfg.seed.wrapping_add(1));
    let mut violations = 0usize;
    let mut worst_slack = f64::NEG_INFINITY;
    for _ in 0..args.targets {
        let w = haar_unitary_with::<f64, _>(2, &mut rng);
        let r = jensen_bound_check(&w, &net, &basis)?;
        if !r.holds(1e-10) {
            violations += 1;
        }
        worst_slack = worst_slack.max(r.delta_actual - r.delta_bound);
    }

    let table = match cfg.format {
        Format::Csv => {
            let path = cfg.output_file(out, "covering.csv");
            let mut w = create(&path)?;
            rep.write_csv(&mut w)
                .and_then(|_| w.flush())
                .map_err(|e| CliError::file(&path, e))?;
            path
        }
        Format::Json => {
            let path = cfg.output_file(out, "covering.json");
            write_json_file(&path, &rep.points)?;
            path
        }
    };
    let fit_path = table.with_file_name("covering_fit.json");
    let fit = rep.fit();
    write_json_file(
        &fit_path,
        &json!({
            "slope": fit.slope,
            "intercept": fit.intercept,
            "r_squared": fit.r_squared,
            "covariant_ratios": rep.covariant_ratios(),
        }),
    )?;

    let (lo, hi) = SLOPE_RANGE;
    let checks = vec![
        Check {
            name: "slope_in_range".into(),
            passed: (lo..=hi).contains(&fit.slope),
            value: fit.slope,
            tolerance: hi - 2.0,
        },
        Check::at_most("jensen_violations", violations as f64, 0.0),
    ];
    let report = json!({
        "points": rep.points,
        "slope": fit.slope,
        "intercept": fit.intercept,
        "r_squared": fit.r_squared,
        "covariant_ratios": rep.covariant_ratios(),
        "net_size": net.centers.len(),
        "net_radius": net.radius,
        "targets": args.targets,
        "max_delta_minus_bound": worst_slack,
    });
    Ok(Outcome::from_checks(checks, report, vec![table, fit_path]))
}

/// `{delta, op_sum, frob_sum}` for two POVM files.
pub fn povm_distance_cmd(p: &Path, q: &Path) -> Result<Outcome, CliError> {
    let pp = load_povm(p)?;
    let qq = load_povm(q)?;
    let chain = distance_bound_chain(&pp, &qq)?;
    let mut report = json!({
        "delta": chain.delta,
        "op_sum": chain.op_sum,
        "frob_sum": chain.frob_sum,
    });
    if pp.dim() == 2 && pp.outcomes() == 2 {
        report["delta_qubit"] = json!(povm_distance_qubit(&pp, &qq)?);
    }
    let checks = vec![Check {
        name: "bound_chain".into(),
        passed: chain.chain_holds(1e-10),
        value: (chain.delta - chain.op_sum).max(chain.op_sum - chain.frob_sum),
        tolerance: 1e-10,
    }];
    Ok(Outcome::from_checks(checks, report, vec![]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FidelityMode {
    /// Best program for the target: `||S||^2 / d^2`.
    Best,
    /// A given program, evaluated along three independent routes.
    Program,
    /// Worst case over qubit targets (the target file is not needed).
    Worst,
}

pub fn channel_fidelity_cmd(
    target: Option<&Path>,
    gate: &Path,
    mode: FidelityMode,
    program: Option<&Path>,
    cfg: &RunConfig,
) -> Result<Outcome, CliError> {
    let v = load_unitary(gate)?;
    let need_target = || {
        target.ok_or_else(|| CliError::Input("--target is required for this mode".into()))
    };
    match mode {
        FidelityMode::Worst => {
            let g = ProgrammableGate::with_system_dim(v, 2)?;
            let search = SearchConfig {
                seed: cfg.seed,
                ..SearchConfig::default()
            };
            let wc = worst_case_fidelity(&g, &search)?;
            let report = json!({
                "mode": "worst",
                "fidelity": wc.fidelity,
                "search": wc.report(),
            });
            Ok(Outcome::from_checks(vec![], report, vec![]))
        }
        FidelityMode::Best => {
            let u = load_unitary(need_target()?)?;
            let g = ProgrammableGate::with_system_dim(v, u.dim())?;
            let pf = program_fidelity(&u, &g)?;
            let report = json!({
                "mode": "best",
                "fidelity": pf.fidelity,
                "best_program": MatrixJson::from_matrix(pf.best_program.matrix()),
            });
            Ok(Outcome::from_checks(vec![], report, vec![]))
        }
        FidelityMode::Program => {
            let u = load_unitary(need_target()?)?;
            let g = ProgrammableGate::with_system_dim(v, u.dim())?;
            let path = program.ok_or_else(|| CliError::Input("--program is required for mode program".into()))?;
            let sigma = load_state(path)?;
            let kraus = kraus_sum_fidelity(&u, &g, &sigma)?;
            let s_form = fidelity_for_program(&u, &g, &sigma)?;
            let direct = fidelity_via_partial_trace(&u, &g, &sigma)?;
            let residual = (kraus - s_form).abs().max((kraus - direct).abs()).max((s_form - direct).abs());
            let report = json!({
                "mode": "program",
                "fidelity": s_form,
                "kraus_sum": kraus,
                "s_matrix": s_form,
                "partial_trace": direct,
            });
            Ok(Outcome::from_checks(
                vec![Check::at_most("three_way_agreement", residual, 1e-10)],
                report,
                vec![],
            ))
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct NoGoArgs {
    pub v1: Option<PathBuf>,
    pub v2: Option<PathBuf>,
    /// Random pairs when no files are given.
    pub pairs: usize,
}

/// For controlled-unitary gates, find a target with zero fidelity.
pub fn no_go_cmd(args: &NoGoArgs, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let pairs: Vec<(UnitaryOp<f64>, UnitaryOp<f64>)> = match (&args.v1, &args.v2) {
        (Some(a), Some(b)) => vec![(load_unitary(a)?, load_unitary(b)?)],
        (None, None) => {
            if args.pairs == 0 {
                return Err(CliError::Input("--pairs must be positive".into()));
            }
            let mut rng = rng_from_seed(cfg.seed);
            (0..args.pairs)
                .map(|_| (haar_unitary_with(2, &mut rng), haar_unitary_with(2, &mut rng)))
                .collect()
        }
        _ => return Err(CliError::Input("give both --v1 and --v2, or neither".into())),
    };
    let mut max_formula: f64 = 0.0;
    let mut max_fidelity: f64 = 0.0;
    let mut fallbacks = 0;
    for (a, b) in &pairs {
        let r = controlled_no_go_check(a, b)?;
        max_formula = max_formula.max(r.formula_fidelity);
        max_fidelity = max_fidelity.max(r.min_fidelity);
        fallbacks += usize::from(r.used_fallback);
    }
    let checks = vec![
        Check::at_most("orthogonal_target", max_formula, 1e-8),
        Check::at_most("programmed_fidelity", max_fidelity, 1e-8),
    ];
    let report = json!({
        "pairs": pairs.len(),
        "max_formula_fidelity": max_formula,
        "max_fidelity": max_fidelity,
        "fallbacks": fallbacks,
    });
    Ok(Outcome::from_checks(checks, report, vec![]))
}
