//! Subcommand implementations. Each writes its artifacts into the output
//! directory and returns a short summary for stdout.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use rom_dwr::{qoi_eval, selection_condition_number, AdjointTrajectory, DiscreteModel, Trajectory};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::io::{self, fmt_f64, opt_cell};
use crate::pipeline::{
    dwr_columns_for, evaluate, evaluate_with, reference_dwr_basis, Evaluation, Experiment, Offline,
    Selection,
};

pub const TRAJECTORY: &str = "trajectory.txt";
pub const ADJOINT: &str = "adjoint.txt";
pub const QOI: &str = "qoi.txt";
pub const POD_BASIS: &str = "pod_basis.txt";
pub const NONLINEAR_BASIS: &str = "nonlinear_basis.txt";
pub const DEIM_INDICES: &str = "deim_indices.txt";
pub const DEIM_CONDITION: &str = "deim_condition.txt";
pub const ESTIMATE: &str = "estimate.csv";
pub const CONTRIBUTIONS: &str = "contributions.csv";
pub const DWR: &str = "dwr.txt";
pub const ADAPTIVE_INDICES: &str = "adaptive_indices.txt";
pub const ADAPT_TABLE: &str = "adapt_deim.csv";
pub const SWEEP: &str = "sweep.csv";
pub const SWEEP_FAILURES: &str = "sweep_failures.csv";

/// Columns of every error-report table. The estimate approximates
/// `true_error = Q(full) - Q(reduced)` with the same sign.
pub const REPORT_HEADER: [&str; 11] = [
    "k",
    "m",
    "alpha",
    "mu",
    "scheme",
    "true_error",
    "estimated_error",
    "ratio",
    "cond_PtV",
    "qoi_value",
    "wall_ms",
];

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Fill the `wall_ms` column; off by default so reruns are byte-identical.
    pub timing: bool,
}

fn out_dir(config: &ExperimentConfig) -> CliResult<PathBuf> {
    let dir = config.output_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    Ok(dir)
}

fn report_row(e: &Evaluation, wall_ms: Option<f64>) -> Vec<String> {
    let r = &e.report;
    vec![
        r.pod_dim.to_string(),
        r.deim_count.map(|m| m.to_string()).unwrap_or_default(),
        opt_cell(e.alpha),
        fmt_f64(e.viscosity),
        r.scheme.to_string(),
        opt_cell(r.true_error),
        fmt_f64(r.estimated_error),
        opt_cell(r.ratio()),
        opt_cell(r.condition_number),
        fmt_f64(r.qoi_value),
        wall_ms.map(|w| format!("{w:.3}")).unwrap_or_default(),
    ]
}

fn read_offline_inputs(exp: &Experiment, dir: &Path) -> CliResult<(Trajectory, AdjointTrajectory)> {
    let states = io::read_matrix(&dir.join(TRAJECTORY))?;
    let adjoint = io::read_matrix(&dir.join(ADJOINT))?;
    let expect = (exp.model.dim(), exp.grid.num_steps() + 1);
    for (name, m) in [(TRAJECTORY, &states), (ADJOINT, &adjoint)] {
        if m.shape() != expect {
            return Err(CliError::Malformed {
                path: dir.join(name),
                reason: format!(
                    "shape {:?} does not match the configuration {:?}",
                    m.shape(),
                    expect
                ),
            });
        }
    }
    let cols =
        |m: &nalgebra::DMatrix<f64>| m.column_iter().map(|c| c.into_owned()).collect::<Vec<_>>();
    let trajectory = Trajectory::new(cols(&states), exp.grid)?;
    // Recompute the adjoint from the stored trajectory; the file is kept for
    // inspection and checked against the recomputation.
    let adj = rom_dwr::full_adjoint_for(&exp.model, &trajectory, &exp.qoi, exp.scheme())?;
    let stored = cols(&adjoint);
    let scale = adj
        .multipliers()
        .iter()
        .map(|l| l.amax())
        .fold(1e-300, f64::max);
    if stored
        .iter()
        .zip(adj.multipliers())
        .any(|(a, b)| (a - b).amax() > 1e-8 * scale)
    {
        return Err(CliError::Malformed {
            path: dir.join(ADJOINT),
            reason: "does not match the adjoint of the stored trajectory".into(),
        });
    }
    Ok((trajectory, adj))
}

pub fn run_fom(config: &ExperimentConfig) -> CliResult<String> {
    let exp = Experiment::new(config.clone())?;
    let dir = out_dir(config)?;
    let traj = exp.run_full(&exp.model)?;
    let adj = rom_dwr::full_adjoint_for(&exp.model, &traj, &exp.qoi, exp.scheme())?;
    let q = qoi_eval(&exp.qoi, &traj);
    io::write_matrix(&dir.join(TRAJECTORY), &traj.to_matrix())?;
    io::write_matrix(
        &dir.join(ADJOINT),
        &nalgebra::DMatrix::from_columns(adj.multipliers()),
    )?;
    io::write_scalar(&dir.join(QOI), q)?;
    Ok(io::describe(&[
        ("qoi", fmt_f64(q)),
        ("states", format!("{} x {}", traj.dim(), traj.len())),
    ]))
}

pub fn build_rom(config: &ExperimentConfig) -> CliResult<String> {
    let exp = Experiment::new(config.clone())?;
    let dir = out_dir(config)?;
    let (traj, adj) = read_offline_inputs(&exp, &dir)?;
    let offline = Offline::from_runs(&exp, traj, adj)?;
    let basis = offline.state_basis(config.rom.pod_size)?;
    let v = offline.nonlinear_basis(config.rom.deim_points)?;
    let indices = rom_dwr::deim_indices(&v)?;
    let cond = selection_condition_number(&v, &indices);
    io::write_matrix(&dir.join(POD_BASIS), basis.modes())?;
    io::write_matrix(&dir.join(NONLINEAR_BASIS), &v)?;
    io::write_indices(&dir.join(DEIM_INDICES), &indices)?;
    io::write_scalar(&dir.join(DEIM_CONDITION), cond)?;
    Ok(io::describe(&[
        ("k", basis.k().to_string()),
        ("m", v.ncols().to_string()),
        ("cond_PtV", fmt_f64(cond)),
    ]))
}

struct OnlineInputs {
    basis: rom_dwr::PodBasis,
    v: nalgebra::DMatrix<f64>,
    indices: Vec<usize>,
    full_qoi: f64,
}

fn read_online_inputs(exp: &Experiment, dir: &Path, adaptive: bool) -> CliResult<OnlineInputs> {
    let u = io::read_matrix(&dir.join(POD_BASIS))?;
    let basis = rom_dwr::PodBasis::from_modes(u).map_err(|e| CliError::Malformed {
        path: dir.join(POD_BASIS),
        reason: e.to_string(),
    })?;
    let v = io::read_matrix(&dir.join(NONLINEAR_BASIS))?;
    let index_file = if adaptive {
        ADAPTIVE_INDICES
    } else {
        DEIM_INDICES
    };
    let indices = io::read_indices(&dir.join(index_file))?;
    let full_qoi = io::read_scalar(&dir.join(QOI))?;
    if basis.dim() != exp.model.dim() || v.nrows() != exp.model.dim() {
        return Err(CliError::Malformed {
            path: dir.join(POD_BASIS),
            reason: "basis size does not match the configured grid".into(),
        });
    }
    Ok(OnlineInputs {
        basis,
        v,
        indices,
        full_qoi,
    })
}

/// Overwrites `estimate.csv` with one report row for the configured model and
/// writes the dual-weighted residuals and per-step contributions.
pub fn estimate(config: &ExperimentConfig, opts: &RunOptions) -> CliResult<String> {
    let exp = Experiment::new(config.clone())?;
    let dir = out_dir(config)?;
    let inputs = read_online_inputs(&exp, &dir, config.rom.adaptive)?;
    let start = Instant::now();
    let mut eval = evaluate_with(
        &exp,
        inputs.basis,
        &inputs.v,
        inputs.indices,
        config.model.viscosity,
        inputs.full_qoi,
    )?;
    if config.rom.adaptive {
        eval.alpha = Some(config.rom.alpha);
    }
    let wall = opts.timing.then(|| start.elapsed().as_secs_f64() * 1e3);
    let row = report_row(&eval, wall);
    io::write_text(
        &dir.join(ESTIMATE),
        &io::csv_string(&REPORT_HEADER, &[row])?,
    )?;
    io::write_text(
        &dir.join(CONTRIBUTIONS),
        &io::contributions_csv(&eval.report.per_step_contributions)?,
    )?;
    io::write_matrix(&dir.join(DWR), &eval.dwr.matrix())?;
    Ok(io::describe(&[
        ("true_error", fmt_f64(eval.true_error())),
        ("estimated_error", fmt_f64(eval.report.estimated_error)),
        ("ratio", opt_cell(eval.report.ratio())),
    ]))
}

pub const ADAPT_HEADER: [&str; 7] = [
    "selection",
    "alpha",
    "qoi_error",
    "estimated_error",
    "cond_PtV",
    "points_in_qoi_window",
    "indices",
];

/// Adaptive selections for each `alpha` in `sweep.alphas` (or `rom.alpha`),
/// compared against the standard points. The dual-weighted-residual basis
/// comes from the last `estimate` run.
pub fn adapt_deim(config: &ExperimentConfig) -> CliResult<String> {
    let exp = Experiment::new(config.clone())?;
    let dir = out_dir(config)?;
    let z = io::read_matrix(&dir.join(DWR))?;
    let inputs = read_online_inputs(&exp, &dir, false)?;
    let m = inputs.v.ncols();
    let count = config.rom.dwr_modes.min(m).min(z.nrows()).min(z.ncols());
    let w = rom_dwr::dwr_basis(&z, count)?;
    let alphas = config
        .sweep
        .alphas
        .clone()
        .unwrap_or_else(|| vec![config.rom.alpha]);

    let run = |indices: Vec<usize>| {
        evaluate_with(
            &exp,
            inputs.basis.clone(),
            &inputs.v,
            indices,
            config.model.viscosity,
            inputs.full_qoi,
        )
    };
    let row = |label: &str, alpha: Option<f64>, e: &Evaluation| {
        vec![
            label.to_string(),
            opt_cell(alpha),
            fmt_f64(e.true_error()),
            fmt_f64(e.report.estimated_error),
            opt_cell(e.report.condition_number),
            exp.count_in_qoi_window(&e.indices).to_string(),
            io::format_indices(&e.indices).trim_end().to_string(),
        ]
    };

    let standard = run(inputs.indices.clone())?;
    let mut rows = vec![row("standard", None, &standard)];
    let mut chosen = None;
    for &alpha in &alphas {
        let sel = Selection::Adaptive {
            alpha,
            w: &w,
            normalize: config.rom.normalize,
        };
        let eval = run(sel.indices(&inputs.v)?)?;
        rows.push(row("adaptive", Some(alpha), &eval));
        if chosen.is_none() || alpha == config.rom.alpha {
            chosen = Some(eval);
        }
    }
    let chosen = chosen.expect("at least one alpha");
    io::write_indices(&dir.join(ADAPTIVE_INDICES), &chosen.indices)?;
    io::write_text(
        &dir.join(ADAPT_TABLE),
        &io::csv_string(&ADAPT_HEADER, &rows)?,
    )?;
    Ok(io::describe(&[
        ("standard |qoi error|", fmt_f64(standard.true_error().abs())),
        ("adaptive |qoi error|", fmt_f64(chosen.true_error().abs())),
        (
            "standard cond_PtV",
            opt_cell(standard.report.condition_number),
        ),
        (
            "adaptive cond_PtV",
            opt_cell(chosen.report.condition_number),
        ),
    ]))
}

/// One sweep tuple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub k: usize,
    pub m: usize,
    pub alpha: Option<f64>,
    pub mu: f64,
}

pub fn sweep_points(config: &ExperimentConfig) -> CliResult<Vec<SweepPoint>> {
    config.validate_sweep()?;
    let s = &config.sweep;
    let alphas: Vec<Option<f64>> = match &s.alphas {
        Some(a) => a.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    if s.pod_dims.is_empty()
        || s.deim_points.is_empty()
        || s.viscosities.is_empty()
        || alphas.is_empty()
    {
        return Err(CliError::Config("sweep lists must not be empty".into()));
    }
    let mut out = Vec::new();
    for &mu in &s.viscosities {
        for &k in &s.pod_dims {
            for &m in &s.deim_points {
                for &alpha in &alphas {
                    out.push(SweepPoint { k, m, alpha, mu });
                }
            }
        }
    }
    Ok(out)
}

pub const FAILURE_HEADER: [&str; 5] = ["k", "m", "alpha", "mu", "error"];

/// Result rows in tuple order plus the tuples that failed.
pub struct SweepOutcome {
    pub rows: Vec<(SweepPoint, Evaluation)>,
    pub failures: Vec<(SweepPoint, String)>,
}

/// Runs the whole sweep in-process from a fresh offline stage. Tuples are
/// evaluated in parallel; results keep tuple order.
pub fn run_sweep(
    exp: &Experiment,
    opts: &RunOptions,
) -> CliResult<(SweepOutcome, Vec<Option<f64>>)> {
    let points = sweep_points(&exp.config)?;
    let offline = Offline::build(exp)?;
    let w = if exp.config.sweep.alphas.is_some() {
        Some(reference_dwr_basis(exp, &offline)?)
    } else {
        None
    };
    let mut mus: Vec<f64> = exp.config.sweep.viscosities.clone();
    mus.dedup();
    let truths: Vec<(f64, CliResult<f64>)> =
        mus.par_iter().map(|&mu| (mu, exp.full_qoi(mu))).collect();

    let results: Vec<(SweepPoint, CliResult<Evaluation>, Option<f64>)> = points
        .par_iter()
        .map(|p| {
            let start = Instant::now();
            let truth = truths.iter().find(|(mu, _)| *mu == p.mu).map(|(_, t)| t);
            let res = match truth {
                Some(Ok(t)) => {
                    let wm;
                    let sel = match (p.alpha, &w) {
                        (Some(alpha), Some(w)) => {
                            wm = dwr_columns_for(w, p.m);
                            Selection::Adaptive {
                                alpha,
                                w: &wm,
                                normalize: exp.config.rom.normalize,
                            }
                        }
                        _ => Selection::Standard,
                    };
                    evaluate(exp, &offline, p.k, p.m, p.mu, sel, *t)
                }
                Some(Err(e)) => Err(CliError::Config(format!(
                    "full model failed at mu={}: {e}",
                    p.mu
                ))),
                None => unreachable!("every viscosity has a truth entry"),
            };
            let wall = opts.timing.then(|| start.elapsed().as_secs_f64() * 1e3);
            (*p, res, wall)
        })
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut walls = Vec::new();
    for (p, res, wall) in results {
        match res {
            Ok(e) => {
                rows.push((p, e));
                walls.push(wall);
            }
            Err(e) => failures.push((p, e.to_string())),
        }
    }
    Ok((SweepOutcome { rows, failures }, walls))
}

pub fn sweep(config: &ExperimentConfig, opts: &RunOptions) -> CliResult<String> {
    let exp = Experiment::new(config.clone())?;
    let dir = out_dir(config)?;
    let (outcome, walls) = run_sweep(&exp, opts)?;
    let rows: Vec<Vec<String>> = outcome
        .rows
        .iter()
        .zip(&walls)
        .map(|((_, e), w)| report_row(e, *w))
        .collect();
    io::write_text(&dir.join(SWEEP), &io::csv_string(&REPORT_HEADER, &rows)?)?;
    let failures_path = dir.join(SWEEP_FAILURES);
    if outcome.failures.is_empty() {
        if failures_path.exists() {
            fs::remove_file(&failures_path).map_err(|e| CliError::io(&failures_path, e))?;
        }
    } else {
        let f: Vec<Vec<String>> = outcome
            .failures
            .iter()
            .map(|(p, msg)| {
                vec![
                    p.k.to_string(),
                    p.m.to_string(),
                    opt_cell(p.alpha),
                    fmt_f64(p.mu),
                    msg.clone(),
                ]
            })
            .collect();
        io::write_text(&failures_path, &io::csv_string(&FAILURE_HEADER, &f)?)?;
    }
    Ok(io::describe(&[
        ("rows", outcome.rows.len().to_string()),
        ("failures", outcome.failures.len().to_string()),
    ]))
}
