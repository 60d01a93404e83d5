//! Offline/online experiment pipeline for the Burgers model.
//!
//! Offline: one full run at the training viscosity, its full adjoint, a POD
//! basis of states and adjoints together, and a POD basis of the advection
//! term. Online: a POD/DEIM reduced model of any size, its fast error
//! estimate, and the true error from a full run at the evaluation viscosity.

use nalgebra::{DMatrix, DVector};
use rom_dwr::{
    adaptive_deim_indices_with, collect_snapshots, deim_indices, dual_weighted_residuals,
    dwr_basis, full_adjoint_for, integrate, qoi_eval, report_from_dwr, simulate_rom,
    AdaptiveDeimConfig, AdjointTrajectory, BurgersModel, DeimApproximation, DiscreteModel,
    DualWeightedResiduals, ErrorReport, NewtonSettings, PodBasis, ReducedModel, Scheme,
    SnapshotSource, SquaredSumQoi, TimeGrid, Trajectory, Truncation,
};

use crate::config::{ExperimentConfig, PodSize};
use crate::error::{CliError, CliResult};

/// The validated, instantiated problem of one configuration.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub model: BurgersModel,
    pub x0: DVector<f64>,
    pub grid: TimeGrid,
    pub settings: NewtonSettings,
    pub qoi: SquaredSumQoi,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> CliResult<Self> {
        config.validate()?;
        let m = &config.model;
        let model = BurgersModel::new(m.n_grid, m.length, m.viscosity)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let x0 = config
            .initial_condition()
            .sample(&model)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let grid = TimeGrid::new(config.time.t_final, config.time.num_steps)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let qoi = SquaredSumQoi::on_interval(&model, config.qoi.lower, config.qoi.upper)
            .map_err(|_| CliError::Config("no grid point lies inside the QoI interval".into()))?;
        let settings = NewtonSettings {
            tol: config.solver.newton_tol,
            max_iter: config.solver.max_iter,
        };
        Ok(Self {
            config,
            model,
            x0,
            grid,
            settings,
            qoi,
        })
    }

    pub fn scheme(&self) -> Scheme {
        self.config.time.scheme
    }

    pub fn model_at(&self, viscosity: f64) -> CliResult<BurgersModel> {
        Ok(self.model.with_viscosity(viscosity)?)
    }

    pub fn run_full(&self, model: &BurgersModel) -> CliResult<Trajectory> {
        Ok(integrate(
            model,
            &self.x0,
            &self.grid,
            self.scheme(),
            &self.settings,
        )?)
    }

    /// `Q` of a full run at `viscosity`.
    pub fn full_qoi(&self, viscosity: f64) -> CliResult<f64> {
        let model = self.model_at(viscosity)?;
        Ok(qoi_eval(&self.qoi, &self.run_full(&model)?))
    }

    /// Interior coordinates of 0-based indices falling in the QoI interval.
    pub fn count_in_qoi_window(&self, indices: &[usize]) -> usize {
        let window = self.qoi.indices();
        indices.iter().filter(|i| window.contains(i)).count()
    }
}

/// Training data and the untruncated bases derived from it.
#[derive(Debug, Clone)]
pub struct Offline {
    pub trajectory: Trajectory,
    pub adjoint: AdjointTrajectory,
    /// All available POD modes of the state and adjoint snapshots.
    pub state_modes: PodBasis,
    /// All available POD modes of the advection snapshots `N(x_1) … N(x_Nt)`.
    pub nonlinear_modes: PodBasis,
}

fn all_modes(data: &DMatrix<f64>) -> CliResult<PodBasis> {
    let rank = data.nrows().min(data.ncols());
    Ok(PodBasis::from_matrix(data, Truncation::Rank(rank))?)
}

impl Offline {
    pub fn build(exp: &Experiment) -> CliResult<Self> {
        let trajectory = exp.run_full(&exp.model)?;
        let adjoint = full_adjoint_for(&exp.model, &trajectory, &exp.qoi, exp.scheme())?;
        Self::from_runs(exp, trajectory, adjoint)
    }

    pub fn from_runs(
        exp: &Experiment,
        trajectory: Trajectory,
        adjoint: AdjointTrajectory,
    ) -> CliResult<Self> {
        let states = collect_snapshots([
            (SnapshotSource::ForwardState, trajectory.states()),
            (SnapshotSource::AdjointState, adjoint.multipliers()),
        ])?;
        let nonlinear: Vec<DVector<f64>> = trajectory
            .states()
            .iter()
            .skip(1)
            .map(|x| exp.model.nonlinear_term(x))
            .collect();
        let nonlinear = collect_snapshots([(SnapshotSource::NonlinearTerm, &nonlinear[..])])?;
        Ok(Self {
            state_modes: all_modes(states.data())?,
            nonlinear_modes: all_modes(nonlinear.data())?,
            trajectory,
            adjoint,
        })
    }

    /// State basis sized by the configuration.
    pub fn state_basis(&self, size: PodSize) -> CliResult<PodBasis> {
        let k = match size {
            PodSize::Modes(k) => k,
            PodSize::Energy(gamma) => {
                let sv: Vec<f64> = self.state_modes.singular_values().iter().copied().collect();
                rom_dwr::pod::energy_rank(&sv, gamma)
            }
        };
        self.state_basis_k(k)
    }

    pub fn state_basis_k(&self, k: usize) -> CliResult<PodBasis> {
        if k == 0 || k > self.state_modes.k() {
            return Err(CliError::Config(format!(
                "POD dimension {k} exceeds the {} available snapshot modes",
                self.state_modes.k()
            )));
        }
        Ok(self.state_modes.truncated(k)?)
    }

    pub fn nonlinear_basis(&self, m: usize) -> CliResult<DMatrix<f64>> {
        if m == 0 || m > self.nonlinear_modes.k() {
            return Err(CliError::Config(format!(
                "DEIM point count {m} exceeds the {} available nonlinear modes",
                self.nonlinear_modes.k()
            )));
        }
        Ok(self.nonlinear_modes.modes().columns(0, m).into_owned())
    }
}

/// How interpolation points are chosen.
#[derive(Debug, Clone, Copy)]
pub enum Selection<'w> {
    Standard,
    /// `w` may have fewer columns than the number of points requested.
    Adaptive {
        alpha: f64,
        w: &'w DMatrix<f64>,
        normalize: bool,
    },
}

impl Selection<'_> {
    pub fn alpha(&self) -> Option<f64> {
        match self {
            Selection::Standard => None,
            Selection::Adaptive { alpha, .. } => Some(*alpha),
        }
    }

    pub fn indices(&self, v: &DMatrix<f64>) -> CliResult<Vec<usize>> {
        Ok(match self {
            Selection::Standard => deim_indices(v)?,
            Selection::Adaptive {
                alpha,
                w,
                normalize,
            } => {
                let config = AdaptiveDeimConfig {
                    normalize: *normalize,
                    ..AdaptiveDeimConfig::new(*alpha)?
                };
                adaptive_deim_indices_with(v, w, &config)?
            }
        })
    }
}

/// One online evaluation.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub report: ErrorReport,
    pub indices: Vec<usize>,
    pub dwr: DualWeightedResiduals,
    pub alpha: Option<f64>,
    pub viscosity: f64,
}

impl Evaluation {
    pub fn true_error(&self) -> f64 {
        self.report
            .true_error
            .expect("evaluations always carry the true error")
    }
}

/// Builds and runs the reduced model from explicit bases and points.
pub fn evaluate_with(
    exp: &Experiment,
    basis: PodBasis,
    v: &DMatrix<f64>,
    indices: Vec<usize>,
    viscosity: f64,
    full_qoi: f64,
) -> CliResult<Evaluation> {
    let model = exp.model_at(viscosity)?;
    let deim = DeimApproximation::new(&basis, v, &indices)?;
    let rom = ReducedModel::with_deim(&model, basis, deim)?;
    let rtraj = simulate_rom(&rom, &exp.x0, &exp.grid, exp.scheme(), &exp.settings)?;
    let dwr = dual_weighted_residuals(&rom, &rtraj, &exp.qoi, &exp.x0, exp.scheme())?;
    let reduced_qoi = qoi_eval(&exp.qoi, &rtraj.lift(rom.basis())?);
    let report = report_from_dwr(&rom, &dwr, reduced_qoi).with_true_error(full_qoi - reduced_qoi);
    Ok(Evaluation {
        report,
        indices,
        dwr,
        alpha: None,
        viscosity,
    })
}

/// Reduced model with `k` state modes and `m` points chosen by `selection`,
/// evaluated at `viscosity`. `full_qoi` is `Q` of the full run there.
pub fn evaluate(
    exp: &Experiment,
    offline: &Offline,
    k: usize,
    m: usize,
    viscosity: f64,
    selection: Selection<'_>,
    full_qoi: f64,
) -> CliResult<Evaluation> {
    let basis = offline.state_basis_k(k)?;
    let v = offline.nonlinear_basis(m)?;
    let indices = selection.indices(&v)?;
    let mut e = evaluate_with(exp, basis, &v, indices, viscosity, full_qoi)?;
    e.alpha = selection.alpha();
    Ok(e)
}

/// Dual-weighted-residual basis from the configured reference run
/// (`rom.pod_dim`, `rom.deim_points`, standard DEIM, training viscosity).
/// Keeps `rom.dwr_modes` vectors; callers slice further per point count.
pub fn reference_dwr_basis(exp: &Experiment, offline: &Offline) -> CliResult<DMatrix<f64>> {
    let k = offline.state_basis(exp.config.rom.pod_size)?.k();
    let truth = qoi_eval(&exp.qoi, &offline.trajectory);
    let eval = evaluate(
        exp,
        offline,
        k,
        exp.config.rom.deim_points,
        exp.config.model.viscosity,
        Selection::Standard,
        truth,
    )?;
    let z = eval.dwr.matrix();
    Ok(dwr_basis(
        &z,
        exp.config.rom.dwr_modes.min(z.nrows().min(z.ncols())),
    )?)
}

/// First `min(m, columns)` columns of a dual-weighted-residual basis.
pub fn dwr_columns_for(w: &DMatrix<f64>, m: usize) -> DMatrix<f64> {
    w.columns(0, m.min(w.ncols())).into_owned()
}
