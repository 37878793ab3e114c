use std::collections::BTreeMap;
use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use serde_json::{json, Value};
use sijc_core::evolution::{self, FdSettings};
use sijc_core::inversion::{self, Method, SeriesOptions, SignTable};
use sijc_core::oracle::{self, HeisenbergOracle, Stencil};
use sijc_core::rep::{self, max_abs};
use sijc_core::spectrum::{self, Branch};
use sijc_core::{Layout, ModelFamily, Phase, C64};

use crate::config::RunConfig;
use crate::output::{self, fmt_f64, OutputError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Evolve,
    Inversion,
    Verify,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error("computation failed: {0}")]
    Compute(#[from] sijc_core::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Output(_) => EXIT_CONFIG,
            RunError::Compute(_) => EXIT_CHECK,
        }
    }
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit_code: i32,
    pub files: Vec<PathBuf>,
    /// Human-readable notes for stderr, e.g. failing check names.
    pub notes: Vec<String>,
}

/// One mandatory check in a report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Check {
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(residual: f64, tolerance: f64) -> Self {
        Self {
            residual,
            tolerance,
            // NaN residuals fail
            pass: residual <= tolerance,
        }
    }
}

#[derive(Debug, Default)]
struct Checks(BTreeMap<String, Check>);

impl Checks {
    fn add(&mut self, cfg: &RunConfig, name: impl Into<String>, tolerance_key: &str, residual: f64) {
        self.0.insert(name.into(), Check::new(residual, cfg.tolerance(tolerance_key)));
    }

    fn failing(&self) -> Vec<String> {
        self.0.iter().filter(|(_, c)| !c.pass).map(|(k, _)| k.clone()).collect()
    }

    fn to_json(&self) -> Value {
        serde_json::to_value(&self.0).expect("checks serialize")
    }
}

pub fn execute(command: Command, cfg: &RunConfig, strict: bool) -> Result<Outcome, RunError> {
    output::ensure_dir(&cfg.output_dir)?;
    match command {
        Command::Spectrum => run_spectrum(cfg),
        Command::Evolve => run_evolve(cfg),
        Command::Inversion => run_inversion(cfg, strict),
        Command::Verify => run_verify(cfg),
    }
}

fn model_json(cfg: &RunConfig) -> Value {
    let params = match cfg.model.family {
        ModelFamily::Harmonic { omega } => json!({ "omega": omega }),
        ModelFamily::MorseClass { c1, c2 } => json!({ "c1": c1, "c2": c2 }),
        ModelFamily::ScalingClass { r1, q } => json!({ "r1": r1, "q": q }),
    };
    let c = cfg.coupling();
    json!({
        "kind": cfg.model.family.name(),
        "params": params,
        "Omega": c.rabi,
        "Delta": c.detuning,
        "hbar": c.hbar,
        "N": cfg.levels,
        "phase_convention": phase_name(cfg.phase),
    })
}

fn phase_name(p: Phase) -> &'static str {
    match p {
        Phase::PlusI => "paper_plus_i",
        Phase::MinusI => "oracle_minus_i",
    }
}

fn series_options(cfg: &RunConfig) -> SeriesOptions {
    SeriesOptions {
        order: cfg.series_order,
        signs: SignTable::Derived,
        tail_tolerance: cfg.tolerance("series_tail"),
    }
}

fn require_state(cfg: &RunConfig) -> Result<&DVector<C64>, RunError> {
    cfg.initial_state.as_ref().ok_or_else(|| {
        crate::config::ConfigError::field("initial_state", "missing field, required by this command").into()
    })
}

fn max_of(xs: impl IntoIterator<Item = f64>) -> f64 {
    // NaN propagates so that it cannot hide behind a smaller value
    xs.into_iter().fold(0.0, |a: f64, x| if x.is_nan() || a.is_nan() { f64::NAN } else { a.max(x) })
}

pub const SPECTRUM_HEADER: [&str; 11] = [
    "model",
    "m",
    "E_analytic_plus",
    "E_analytic_minus",
    "C_up_plus",
    "C_low_plus",
    "lambda_plus",
    "lambda_minus",
    "E_oracle_plus",
    "E_oracle_minus",
    "abs_residual",
];

fn run_spectrum(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let c = cfg.coupling();
    let table = spectrum::analytic_spectrum(&cfg.ladder, c)?;
    let h = rep::build_hamiltonian(&cfg.ladder, c)?.total;
    let eig = oracle::diagonalize(&h)?;
    let (matched, singlet_oracle) = table.match_reference(&eig.eigenvalues)?;
    let name = cfg.model.family.name();

    let mut rows = Vec::with_capacity(table.rows.len() + 1);
    let mut residuals = Vec::new();
    for (r, &(op, om)) in table.rows.iter().zip(&matched) {
        let res = (r.e_plus - op).abs().max((r.e_minus - om).abs());
        residuals.push(res);
        rows.push(vec![
            name.to_string(),
            r.m.to_string(),
            fmt_f64(r.e_plus),
            fmt_f64(r.e_minus),
            fmt_f64(r.c_up_plus),
            fmt_f64(r.c_low_plus),
            fmt_f64(r.lambda_plus),
            fmt_f64(r.lambda_minus),
            fmt_f64(op),
            fmt_f64(om),
            fmt_f64(res),
        ]);
    }
    // the singlet |0⟩_down: pure lower channel, eigenvalue −ħΔ in both energy slots
    let e0 = table.singlet_energy;
    let res0 = (e0 - singlet_oracle).abs();
    residuals.push(res0);
    rows.push(vec![
        name.to_string(),
        "-1".to_string(),
        fmt_f64(e0),
        fmt_f64(e0),
        fmt_f64(0.0),
        fmt_f64(1.0),
        fmt_f64(e0),
        fmt_f64(e0),
        fmt_f64(singlet_oracle),
        fmt_f64(singlet_oracle),
        fmt_f64(res0),
    ]);

    let csv_path = cfg.output_dir.join("spectrum.csv");
    output::write_csv(&csv_path, &SPECTRUM_HEADER, &rows)?;

    let max_res = max_of(residuals);
    let tol = cfg.tolerance("spectrum_residual");
    let ortho = max_of(table.rows.iter().flat_map(|r| {
        [r.normalization_error(Branch::Plus), r.normalization_error(Branch::Minus), r.cross_overlap()]
    }));
    let check = Check::new(max_res, tol);
    let diag = json!({
        "command": "spectrum",
        "model": model_json(cfg),
        "rows": table.rows.len() + 1,
        "max_abs_residual": check,
        "pairing_error": table.pairing_error(&eig.eigenvalues)?,
        "orthonormality_error": ortho,
        "oracle_reconstruction_residual": eig.reconstruction_residual,
    });
    let diag_path = cfg.output_dir.join("diagnostics.json");
    output::write_json(&diag_path, &diag)?;

    let mut notes = Vec::new();
    if !check.pass {
        notes.push(format!("spectrum residual {max_res:e} exceeds tolerance {tol:e}"));
    }
    Ok(Outcome {
        exit_code: if check.pass { EXIT_OK } else { EXIT_CHECK },
        files: vec![csv_path, diag_path],
        notes,
    })
}

pub const EVOLUTION_HEADER: [&str; 8] = [
    "t",
    "P_up_paper",
    "P_up_oracle",
    "residual_first_order",
    "residual_second_order",
    "residual_unitarity",
    "oracle_distance",
    "ground_deviation",
];

fn upper_population(layout: Layout, v: &DVector<C64>) -> f64 {
    (0..layout.upper_dim()).map(|m| v[layout.up(m)].norm_sqr()).sum()
}

/// The oracle distance is a mandatory check only where the closed form is
/// the exact propagator: zero detuning with the `−i` phase.
fn oracle_is_exact(cfg: &RunConfig) -> bool {
    cfg.coupling().detuning == 0.0 && cfg.phase == Phase::MinusI
}

fn run_evolve(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let psi = require_state(cfg)?;
    let layout = Layout::of(&cfg.ladder);
    let grid = cfg.time.samples();
    let samples = evolution::propagator_diagnostics(&cfg.ladder, cfg.coupling(), &grid, cfg.phase, PROPAGATOR_FD)?;

    let rows: Vec<Vec<String>> = samples
        .iter()
        .map(|s| {
            let p = upper_population(layout, &s.u_paper.apply(psi));
            let o = upper_population(layout, &s.u_oracle.apply(psi));
            vec![
                fmt_f64(s.t),
                fmt_f64(p),
                fmt_f64(o),
                fmt_f64(s.residual_first_order),
                fmt_f64(s.residual_second_order),
                fmt_f64(s.residual_unitarity),
                fmt_f64(s.oracle_distance),
                fmt_f64(s.ground.deviation),
            ]
        })
        .collect();
    let csv_path = cfg.output_dir.join("evolution.csv");
    output::write_csv(&csv_path, &EVOLUTION_HEADER, &rows)?;

    let mut checks = Checks::default();
    checks.add(cfg, "propagator_second_order", "propagator_second_order", max_of(samples.iter().map(|s| s.residual_second_order)));
    checks.add(cfg, "propagator_unitarity", "propagator_unitarity", max_of(samples.iter().map(|s| s.residual_unitarity)));
    let distance = max_of(samples.iter().map(|s| s.oracle_distance));
    if oracle_is_exact(cfg) {
        checks.add(cfg, "propagator_oracle", "propagator_oracle", distance);
    }
    let failing = checks.failing();
    let diag = json!({
        "command": "evolve",
        "model": model_json(cfg),
        "initial_state": cfg.initial_label,
        "checks": checks.to_json(),
        "informational": {
            "first_order_residual": max_of(samples.iter().map(|s| s.residual_first_order)),
            "oracle_distance": distance,
            "ground_mode_deviation": max_of(samples.iter().map(|s| s.ground.deviation)),
        },
    });
    let diag_path = cfg.output_dir.join("diagnostics.json");
    output::write_json(&diag_path, &diag)?;
    Ok(Outcome {
        exit_code: if failing.is_empty() { EXIT_OK } else { EXIT_CHECK },
        files: vec![csv_path, diag_path],
        notes: failing.iter().map(|n| format!("check failed: {n}")).collect(),
    })
}

pub const INVERSION_HEADER: [&str; 5] = ["t", "W_paper", "W_oracle", "abs_diff", "series_tail_bound"];

fn run_inversion(cfg: &RunConfig, strict: bool) -> Result<Outcome, RunError> {
    let psi = require_state(cfg)?;
    let grid = cfg.time.samples();
    let opts = series_options(cfg);
    let paper = inversion::inversion_expectation(psi, &cfg.ladder, cfg.coupling(), &grid, Method::Paper, opts)?;
    let exact = inversion::inversion_expectation(psi, &cfg.ladder, cfg.coupling(), &grid, Method::Oracle, opts)?;

    let mut rows = Vec::with_capacity(grid.len());
    let mut flagged = Vec::new();
    for (p, o) in paper.iter().zip(&exact) {
        if p.tail_warning {
            flagged.push(p.t);
        }
        rows.push(vec![
            fmt_f64(p.t),
            fmt_f64(p.w),
            fmt_f64(o.w),
            fmt_f64((p.w - o.w).abs()),
            fmt_f64(p.tail_bound),
        ]);
    }
    let csv_path = cfg.output_dir.join("inversion.csv");
    output::write_csv(&csv_path, &INVERSION_HEADER, &rows)?;

    let diag = json!({
        "command": "inversion",
        "model": model_json(cfg),
        "initial_state": cfg.initial_label,
        "series_order": cfg.series_order,
        "series_tail_tolerance": opts.tail_tolerance,
        "strict": strict,
        "tail_flagged_t": flagged,
        "max_abs_diff": max_of(paper.iter().zip(&exact).map(|(p, o)| (p.w - o.w).abs())),
        "max_imag_leakage": max_of(paper.iter().chain(&exact).map(|s| s.imag_leakage)),
    });
    let diag_path = cfg.output_dir.join("diagnostics.json");
    output::write_json(&diag_path, &diag)?;

    let mut notes = Vec::new();
    if !flagged.is_empty() {
        notes.push(format!(
            "series tail bound above {:e} at {} sample(s); raise series.order",
            opts.tail_tolerance,
            flagged.len()
        ));
    }
    Ok(Outcome {
        exit_code: if strict && !flagged.is_empty() { EXIT_CHECK } else { EXIT_OK },
        files: vec![csv_path, diag_path],
        notes,
    })
}

/// Propagator residual settings. Five points keep the truncation error of
/// the second derivative near `h⁴ω⁶/90`, far below the default tolerance
/// for the ladders a config can reasonably request.
const PROPAGATOR_FD: FdSettings = FdSettings {
    step: 1e-3,
    stencil: Stencil::FivePoint,
};

/// Step for the finite-difference checks on the particular solution.
const PARTICULAR_FD_STEP: f64 = 1e-2;

fn run_verify(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let ladder = &cfg.ladder;
    let c = cfg.coupling();
    let layout = Layout::of(ladder);
    let grid = cfg.time.samples();
    let opts = series_options(cfg);
    let mut checks = Checks::default();
    let mut info = serde_json::Map::new();

    // algebraic identities
    let ids = rep::identity_suite(ladder, c)?;
    for check in &ids.checks {
        if check.informational {
            info.insert(check.name.clone(), json!(check.residual));
        } else {
            checks.add(cfg, format!("identity.{}", check.name), "identity", check.residual);
        }
    }

    // spectrum against the eigensolver
    let parts = rep::build_hamiltonian(ladder, c)?;
    let table = spectrum::analytic_spectrum(ladder, c)?;
    let eig = oracle::diagonalize(&parts.total)?;
    checks.add(cfg, "spectrum_pairing", "spectrum_pairing", table.pairing_error(&eig.eigenvalues)?);
    checks.add(
        cfg,
        "orthonormality",
        "orthonormality",
        max_of(table.rows.iter().flat_map(|r| {
            [r.normalization_error(Branch::Plus), r.normalization_error(Branch::Minus), r.cross_overlap()]
        })),
    );
    let mut vec_res = Vec::new();
    for (m, row) in table.rows.iter().enumerate() {
        for b in [Branch::Plus, Branch::Minus] {
            let v = table.eigenvector(layout, m, b);
            vec_res.push((parts.total.apply(&v) - &v * C64::new(row.energy(b), 0.0)).norm());
        }
    }
    checks.add(cfg, "eigenvector_residual", "eigenvector_residual", max_of(vec_res));

    // propagator
    let samples = evolution::propagator_diagnostics(ladder, c, &grid, cfg.phase, PROPAGATOR_FD)?;
    checks.add(cfg, "propagator_second_order", "propagator_second_order", max_of(samples.iter().map(|s| s.residual_second_order)));
    checks.add(cfg, "propagator_unitarity", "propagator_unitarity", max_of(samples.iter().map(|s| s.residual_unitarity)));
    let distance = max_of(samples.iter().map(|s| s.oracle_distance));
    if oracle_is_exact(cfg) {
        checks.add(cfg, "propagator_oracle", "propagator_oracle", distance);
    } else {
        info.insert("propagator_oracle_distance".into(), json!(distance));
    }
    info.insert("first_order_residual".into(), json!(max_of(samples.iter().map(|s| s.residual_first_order))));
    info.insert("ground_mode_deviation".into(), json!(max_of(samples.iter().map(|s| s.ground.deviation))));
    let conv = evolution::second_order_convergence(ladder, c, &grid, cfg.phase, PROPAGATOR_FD.step)?;
    info.insert(
        "second_order_convergence".into(),
        json!({ "coarse": conv.coarse, "fine": conv.fine, "ratio": conv.ratio }),
    );

    // F-matrix and product expansions
    let mut f_disc = Vec::new();
    let mut prod = Vec::new();
    for &t in &grid {
        f_disc.push(inversion::f_matrix(ladder, c, t, cfg.phase)?.discrepancy);
        prod.push(inversion::product_expansion_residual(ladder, c, t, cfg.phase)?);
    }
    checks.add(cfg, "f_matrix_dual_path", "f_matrix_dual_path", max_of(f_disc));
    checks.add(cfg, "product_expansion", "product_expansion", max_of(prod));

    // particular solution
    let sp = |t: f64| inversion::particular_solution(ladder, c, t, opts).map(|p| p.operator().into_matrix());
    checks.add(cfg, "particular_initial_value", "particular_initial_value", max_abs(&sp(0.0)?));
    let slope: DMatrix<C64> = oracle::fd_first(sp, 0.0, 1e-3, Stencil::FivePoint)?;
    checks.add(cfg, "particular_initial_slope", "particular_initial_slope", max_abs(&slope));
    let nu = inversion::RabiFrequencies::new(ladder, c).full();
    let mut ode = Vec::new();
    let mut tails = Vec::new();
    let mut printed = Vec::new();
    let mut closed = Vec::new();
    for &t in &grid {
        let p = inversion::particular_solution(ladder, c, t, opts)?;
        tails.push(p.tail_bound);
        let exact = inversion::particular_closed_form(ladder, c, t).to_operator();
        closed.push(p.operator().max_abs_diff(&exact));
        let as_printed = SeriesOptions {
            signs: SignTable::AsPrinted,
            ..opts
        };
        printed.push(inversion::particular_solution(ladder, c, t, as_printed)?.operator().max_abs_diff(&exact));
        if t < 2.0 * PARTICULAR_FD_STEP {
            continue;
        }
        let d2: DMatrix<C64> = oracle::fd_second(sp, t, PARTICULAR_FD_STEP, Stencil::FivePoint)?;
        let pm = p.operator().into_matrix();
        let f = inversion::f_matrix(ladder, c, t, cfg.phase)?.direct;
        let r = DMatrix::from_fn(pm.nrows(), pm.ncols(), |i, j| {
            d2[(i, j)] + pm[(i, j)] * (nu[i] * nu[i]) - f.matrix()[(i, j)]
        });
        ode.push(max_abs(&r));
    }
    checks.add(cfg, "particular_ode", "particular_ode", max_of(ode));
    checks.add(cfg, "series_tail", "series_tail", max_of(tails));
    info.insert("particular_series_vs_closed_form".into(), json!(max_of(closed)));
    info.insert("as_printed_sign_deviation".into(), json!(max_of(printed)));

    // standard-JC closed form against the series, harmonic models only
    let table76 = match cfg.model.family {
        ModelFamily::Harmonic { omega } => {
            let mut rows = Vec::new();
            for &t in &grid {
                let k = inversion::standard_jc_particular(omega, omega - c.detuning, c.rabi, c.hbar, t, cfg.levels)?;
                let s = inversion::particular_solution(ladder, c, t, opts)?;
                rows.push(json!({
                    "t": t,
                    "closed_form_max_abs": k.max_abs(),
                    "series_max_abs": s.blocks.max_abs(),
                    "max_abs_diff": k.to_operator().max_abs_diff(&s.operator()),
                }));
            }
            Value::Array(rows)
        }
        _ => Value::Null,
    };
    info.insert("standard_jc_closed_form_vs_series".into(), table76);

    // inversion
    if c.detuning == 0.0 {
        let o = HeisenbergOracle::new(ladder, c)?;
        let mut d = Vec::new();
        for &t in &grid {
            let s = inversion::sigma3(ladder, c, t, None, opts)?;
            d.push(inversion::paired_distance(&s.operator, &o.sigma3(t)));
        }
        checks.add(cfg, "resonant_inversion_oracle", "resonant_inversion_oracle", max_of(d));
    }
    let default_state;
    let psi = match &cfg.initial_state {
        Some(v) => v,
        None => {
            default_state = inversion::basis_state(layout, false, 1)?;
            &default_state
        }
    };
    let wp = inversion::inversion_expectation(psi, ladder, c, &grid, Method::Paper, opts)?;
    let wo = inversion::inversion_expectation(psi, ladder, c, &grid, Method::Oracle, opts)?;
    info.insert(
        "inversion_paper_vs_oracle".into(),
        json!(max_of(wp.iter().zip(&wo).map(|(p, o)| (p.w - o.w).abs()))),
    );

    let mut report = match checks.to_json() {
        Value::Object(m) => m,
        _ => unreachable!("checks serialize to an object"),
    };
    report.insert("informational".into(), Value::Object(info));
    let path = cfg.output_dir.join("verify.json");
    output::write_json(&path, &Value::Object(report))?;

    let failing = checks.failing();
    Ok(Outcome {
        exit_code: if failing.is_empty() { EXIT_OK } else { EXIT_CHECK },
        files: vec![path],
        notes: failing.iter().map(|n| format!("check failed: {n}")).collect(),
    })
}
