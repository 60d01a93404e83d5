//! Goal-oriented error estimates for reduced trajectories.
//!
//! All estimates approximate `ε = Q(x) - Q(x̂)`, the full-model QoI minus the
//! QoI of the lifted reduced trajectory. Per-step contributions are stored so
//! that their plain sum is the estimate:
//!
//! * slot 0: `-[Uλ̃₀]ᵀ (x₀ - x̂₀)`
//! * slot i (explicit): `[Uλ̃_i]ᵀ φ_i`
//! * slot i (implicit): `φ_iᵀ [Uλ̃_{i-1} + ∂r_{i-1}/∂x (x̂_{i-1})]`
//!
//! The dual-weighted residuals `z_i` are the Hadamard products behind those
//! inner products, so the estimate equals `-Σ z₀ + Σ_{i≥1} Σ z_i`.

use nalgebra::{DMatrix, DVector};

use crate::adjoint::{
    full_adjoint_for, full_adjoint_from, qoi_eval, reduced_adjoint, QuantityOfInterest,
};
use crate::error::{check_len, Error, Result};
use crate::linalg;
use crate::model::{integrate, step, DiscreteModel, NewtonSettings, Scheme, TimeGrid, Trajectory};
use crate::rom::{simulate_rom, ReducedModel, ReducedTrajectory};

/// Slot 0 holds `Δx₀ = x₀ - x̂₀`; slot `i ≥ 1` holds the full-model residual
/// `φ_i` of the lifted reduced trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSeries {
    residuals: Vec<DVector<f64>>,
    scheme: Scheme,
}

impl ResidualSeries {
    pub fn residuals(&self) -> &[DVector<f64>] {
        &self.residuals
    }

    pub fn initial_error(&self) -> &DVector<f64> {
        &self.residuals[0]
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Largest Euclidean norm over all slots.
    pub fn max_norm(&self) -> f64 {
        self.residuals.iter().map(|r| r.norm()).fold(0.0, f64::max)
    }
}

fn check_lifted<M: DiscreteModel + ?Sized>(
    model: &M,
    lifted: &Trajectory,
    x0: &DVector<f64>,
) -> Result<()> {
    check_len("lifted trajectory", model.dim(), lifted.dim())?;
    check_len("initial condition", model.dim(), x0.len())
}

/// `φ_{i+1} = x̂_{i+1} - x̂_i - h F(x̂_i)`.
pub fn residuals_explicit<M: DiscreteModel + ?Sized>(
    model: &M,
    lifted: &Trajectory,
    x0: &DVector<f64>,
) -> Result<ResidualSeries> {
    residuals(model, lifted, x0, Scheme::Explicit)
}

/// `φ_{i+1} = x̂_{i+1} - x̂_i - h F(x̂_{i+1})`.
pub fn residuals_implicit<M: DiscreteModel + ?Sized>(
    model: &M,
    lifted: &Trajectory,
    x0: &DVector<f64>,
) -> Result<ResidualSeries> {
    residuals(model, lifted, x0, Scheme::Implicit)
}

pub fn residuals<M: DiscreteModel + ?Sized>(
    model: &M,
    lifted: &Trajectory,
    x0: &DVector<f64>,
    scheme: Scheme,
) -> Result<ResidualSeries> {
    check_lifted(model, lifted, x0)?;
    let h = lifted.grid().step();
    let xs = lifted.states();
    let mut out = Vec::with_capacity(xs.len());
    out.push(x0 - &xs[0]);
    for w in xs.windows(2) {
        let at = match scheme {
            Scheme::Explicit => &w[0],
            Scheme::Implicit => &w[1],
        };
        out.push(&w[1] - &w[0] - model.rhs(at) * h);
    }
    Ok(ResidualSeries {
        residuals: out,
        scheme,
    })
}

/// `z_0 … z_Nt`, each of full-state length.
#[derive(Debug, Clone, PartialEq)]
pub struct DualWeightedResiduals {
    z: Vec<DVector<f64>>,
    scheme: Scheme,
}

impl DualWeightedResiduals {
    pub fn z(&self) -> &[DVector<f64>] {
        &self.z
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Columns `z_0 … z_Nt`.
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_columns(&self.z)
    }

    /// `-Σ z₀` followed by `Σ z_i` for `i ≥ 1`.
    pub fn contributions(&self) -> Vec<f64> {
        self.z
            .iter()
            .enumerate()
            .map(|(i, z)| if i == 0 { -z.sum() } else { z.sum() })
            .collect()
    }

    pub fn estimate(&self) -> f64 {
        self.contributions().iter().sum()
    }
}

/// Dual-weighted residuals of a reduced run. Only the reduced trajectory, its
/// lift and full-model right-hand-side evaluations are used.
pub fn dual_weighted_residuals<M, Q>(
    rom: &ReducedModel<'_, M>,
    rtraj: &ReducedTrajectory,
    q: &Q,
    x0: &DVector<f64>,
    scheme: Scheme,
) -> Result<DualWeightedResiduals>
where
    M: DiscreteModel + ?Sized,
    Q: QuantityOfInterest + ?Sized,
{
    let basis = rom.basis();
    let lifted = rtraj.lift(basis)?;
    let res = residuals(rom.full_model(), &lifted, x0, scheme)?;
    let adj = reduced_adjoint(rom, rtraj, q, scheme)?;
    let nt = rtraj.grid().num_steps();
    let weights: Vec<DVector<f64>> = adj
        .multipliers()
        .iter()
        .map(|l| basis.modes() * l)
        .collect();
    let mut z = Vec::with_capacity(nt + 1);
    z.push(weights[0].component_mul(&res.residuals[0]));
    for i in 1..=nt {
        let w = match scheme {
            Scheme::Explicit => weights[i].clone(),
            Scheme::Implicit => &weights[i - 1] + q.term_gradient(i - 1, nt, lifted.state(i - 1)),
        };
        z.push(w.component_mul(&res.residuals[i]));
    }
    Ok(DualWeightedResiduals { z, scheme })
}

/// First `count` left singular vectors of the dual-weighted-residual matrix.
pub fn dwr_basis(z: &DMatrix<f64>, count: usize) -> Result<DMatrix<f64>> {
    let limit = z.nrows().min(z.ncols());
    if count == 0 || count > limit {
        return Err(Error::InvalidArgument(format!(
            "cannot extract {count} singular vectors from a {}x{} matrix",
            z.nrows(),
            z.ncols()
        )));
    }
    let (u, _) = linalg::left_singular_vectors(z)?;
    Ok(u.columns(0, count).into_owned())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    /// `Q(x) - Q(x̂)` when the full model was run.
    pub true_error: Option<f64>,
    pub estimated_error: f64,
    pub per_step_contributions: Vec<f64>,
    /// `Q(x̂)`.
    pub qoi_value: f64,
    pub pod_dim: usize,
    pub deim_count: Option<usize>,
    pub condition_number: Option<f64>,
    pub params: Vec<f64>,
    pub scheme: Scheme,
}

impl ErrorReport {
    pub fn with_true_error(mut self, true_error: f64) -> Self {
        self.true_error = Some(true_error);
        self
    }

    /// `estimate / true`, if the truth is known and nonzero.
    pub fn ratio(&self) -> Option<f64> {
        self.true_error
            .filter(|t| *t != 0.0)
            .map(|t| self.estimated_error / t)
    }

    /// `|estimate - true|`.
    pub fn gap(&self) -> Option<f64> {
        self.true_error.map(|t| (self.estimated_error - t).abs())
    }

    fn from_contributions<M: DiscreteModel + ?Sized>(
        rom: &ReducedModel<'_, M>,
        contributions: Vec<f64>,
        qoi_value: f64,
        scheme: Scheme,
    ) -> Self {
        Self {
            true_error: None,
            estimated_error: contributions.iter().sum(),
            per_step_contributions: contributions,
            qoi_value,
            pod_dim: rom.k(),
            deim_count: rom.m(),
            condition_number: rom.deim().map(|d| d.condition_number()),
            params: rom.full_model().params().to_vec(),
            scheme,
        }
    }
}

/// Fast estimate from one reduced forward and one reduced adjoint run.
pub fn estimate_error_fast<M, Q>(
    rom: &ReducedModel<'_, M>,
    rtraj: &ReducedTrajectory,
    q: &Q,
    x0: &DVector<f64>,
    scheme: Scheme,
) -> Result<ErrorReport>
where
    M: DiscreteModel + ?Sized,
    Q: QuantityOfInterest + ?Sized,
{
    let dwr = dual_weighted_residuals(rom, rtraj, q, x0, scheme)?;
    let qoi_value = qoi_eval(q, &rtraj.lift(rom.basis())?);
    Ok(report_from_dwr(rom, &dwr, qoi_value))
}

/// Fast-estimate report assembled from already computed dual-weighted
/// residuals. `qoi_value` is `Q(x̂)`.
pub fn report_from_dwr<M: DiscreteModel + ?Sized>(
    rom: &ReducedModel<'_, M>,
    dwr: &DualWeightedResiduals,
    qoi_value: f64,
) -> ErrorReport {
    ErrorReport::from_contributions(rom, dwr.contributions(), qoi_value, dwr.scheme())
}

pub fn estimate_error_fast_explicit<M, Q>(
    rom: &ReducedModel<'_, M>,
    rtraj: &ReducedTrajectory,
    q: &Q,
    x0: &DVector<f64>,
) -> Result<ErrorReport>
where
    M: DiscreteModel + ?Sized,
    Q: QuantityOfInterest + ?Sized,
{
    estimate_error_fast(rom, rtraj, q, x0, Scheme::Explicit)
}

pub fn estimate_error_fast_implicit<M, Q>(
    rom: &ReducedModel<'_, M>,
    rtraj: &ReducedTrajectory,
    q: &Q,
    x0: &DVector<f64>,
) -> Result<ErrorReport>
where
    M: DiscreteModel + ?Sized,
    Q: QuantityOfInterest + ?Sized,
{
    estimate_error_fast(rom, rtraj, q, x0, Scheme::Implicit)
}

/// `Q(x) - Q(x̂)` with both models started from `x₀` (the reduced one from
/// `Uᵀx₀`).
pub fn true_error<M, Q>(
    model: &M,
    rom: &ReducedModel<'_, M>,
    q: &Q,
    x0: &DVector<f64>,
    grid: &TimeGrid,
    scheme: Scheme,
    settings: &NewtonSettings,
) -> Result<f64>
where
    M: DiscreteModel + ?Sized,
    Q: QuantityOfInterest + ?Sized,
{
    let full = integrate(model, x0, grid, scheme, settings)?;
    let lifted = simulate_rom(rom, x0, grid, scheme, settings)?.lift(rom.basis())?;
    Ok(qoi_eval(q, &full) - qoi_eval(q, &lifted))
}

/// Which full adjoints weight the one-step defects in the oracle estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleVariant {
    /// Adjoint `λ̂_i` along the full trajectory restarted from each `x̂_i`.
    PartialTrajectories,
    /// One full adjoint along the full trajectory from `x₀`.
    SingleTrajectory,
}

/// Reference estimate `-Σ_i λ̂_iᵀ Δx_i`, where `Δx_i` is one full step from
/// `x̂_{i-1}` minus `x̂_i` (and `Δx₀ = x₀ - x̂₀`). Needs full-model solves, so
/// it is meant for validation on small problems. The report carries the true
/// error as well.
#[allow(clippy::too_many_arguments)]
pub fn estimate_error_oracle<M, Q>(
    model: &M,
    rom: &ReducedModel<'_, M>,
    q: &Q,
    x0: &DVector<f64>,
    grid: &TimeGrid,
    scheme: Scheme,
    settings: &NewtonSettings,
    variant: OracleVariant,
) -> Result<ErrorReport>
where
    M: DiscreteModel + ?Sized,
    Q: QuantityOfInterest + ?Sized,
{
    let nt = grid.num_steps();
    let h = grid.step();
    let rtraj = simulate_rom(rom, x0, grid, scheme, settings)?;
    let lifted = rtraj.lift(rom.basis())?;
    let xs = lifted.states();

    let mut defects = Vec::with_capacity(nt + 1);
    defects.push(x0 - &xs[0]);
    for i in 1..=nt {
        let next = step(model, &xs[i - 1], h, scheme, settings).map_err(|e| e.at_step(i - 1))?;
        defects.push(next - &xs[i]);
    }

    let full = integrate(model, x0, grid, scheme, settings)?;
    let lambdas: Vec<DVector<f64>> = match variant {
        OracleVariant::SingleTrajectory => full_adjoint_for(model, &full, q, scheme)?
            .multipliers()
            .to_vec(),
        OracleVariant::PartialTrajectories => (0..=nt)
            .map(|i| {
                let states = if i == nt {
                    vec![xs[nt].clone()]
                } else {
                    let sub = TimeGrid::from_step(h, nt - i)?;
                    integrate(model, &xs[i], &sub, scheme, settings)
                        .map_err(|e| e.at_step(i))?
                        .into_states()
                };
                Ok(full_adjoint_from(model, &states, i, nt, h, q, scheme)?.swap_remove(0))
            })
            .collect::<Result<_>>()?,
    };

    let contributions: Vec<f64> = lambdas
        .iter()
        .zip(&defects)
        .map(|(l, d)| -l.dot(d))
        .collect();
    let qoi_value = qoi_eval(q, &lifted);
    let truth = qoi_eval(q, &full) - qoi_value;
    Ok(
        ErrorReport::from_contributions(rom, contributions, qoi_value, scheme)
            .with_true_error(truth),
    )
}
