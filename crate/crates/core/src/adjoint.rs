//! Quantities of interest and discrete adjoints of the Euler steppers.
//!
//! Multipliers follow the sign convention `λ_Nt = -∂r_Nt/∂x`, so the QoI
//! gradient with respect to the initial state is `-λ_0`.

use nalgebra::{DMatrix, DVector};

use crate::burgers::BurgersModel;
use crate::error::{check_len, Error, Result};
use crate::linalg;
use crate::model::{DiscreteModel, Scheme, Trajectory};
use crate::rom::{ReducedModel, ReducedTrajectory};

/// `Q = Σ_i r_i(x_i)` over the stored time levels `i = 0..=num_steps`.
pub trait QuantityOfInterest {
    fn term(&self, step: usize, num_steps: usize, x: &DVector<f64>) -> f64;

    fn term_gradient(&self, step: usize, num_steps: usize, x: &DVector<f64>) -> DVector<f64>;
}

impl<Q: QuantityOfInterest + ?Sized> QuantityOfInterest for &Q {
    fn term(&self, step: usize, num_steps: usize, x: &DVector<f64>) -> f64 {
        (**self).term(step, num_steps, x)
    }
    fn term_gradient(&self, step: usize, num_steps: usize, x: &DVector<f64>) -> DVector<f64> {
        (**self).term_gradient(step, num_steps, x)
    }
}

/// `Σ_{j∈S} x_j²` at the final time only.
#[derive(Debug, Clone, PartialEq)]
pub struct SquaredSumQoi {
    indices: Vec<usize>,
}

impl SquaredSumQoi {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidArgument("QoI index set is empty".into()));
        }
        Ok(Self { indices })
    }

    /// Interior nodes whose coordinates lie in `[lo, hi]`.
    pub fn on_interval(model: &BurgersModel, lo: f64, hi: f64) -> Result<Self> {
        Self::new(model.indices_in(lo, hi))
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }
}

impl QuantityOfInterest for SquaredSumQoi {
    fn term(&self, step: usize, num_steps: usize, x: &DVector<f64>) -> f64 {
        if step == num_steps {
            self.indices.iter().map(|&j| x[j] * x[j]).sum()
        } else {
            0.0
        }
    }

    fn term_gradient(&self, step: usize, num_steps: usize, x: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(x.len());
        if step == num_steps {
            for &j in &self.indices {
                g[j] = 2.0 * x[j];
            }
        }
        g
    }
}

/// `cᵀ x_Nt`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearQoi {
    weights: DVector<f64>,
}

impl LinearQoi {
    pub fn new(weights: DVector<f64>) -> Self {
        Self { weights }
    }
}

impl QuantityOfInterest for LinearQoi {
    fn term(&self, step: usize, num_steps: usize, x: &DVector<f64>) -> f64 {
        if step == num_steps {
            self.weights.dot(x)
        } else {
            0.0
        }
    }

    fn term_gradient(&self, step: usize, num_steps: usize, x: &DVector<f64>) -> DVector<f64> {
        if step == num_steps {
            self.weights.clone()
        } else {
            DVector::zeros(x.len())
        }
    }
}

/// `Q ≡ 0`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ZeroQoi;

impl QuantityOfInterest for ZeroQoi {
    fn term(&self, _: usize, _: usize, _: &DVector<f64>) -> f64 {
        0.0
    }
    fn term_gradient(&self, _: usize, _: usize, x: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(x.len())
    }
}

/// `factor · Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledQoi<Q> {
    pub inner: Q,
    pub factor: f64,
}

impl<Q: QuantityOfInterest> QuantityOfInterest for ScaledQoi<Q> {
    fn term(&self, step: usize, num_steps: usize, x: &DVector<f64>) -> f64 {
        self.factor * self.inner.term(step, num_steps, x)
    }
    fn term_gradient(&self, step: usize, num_steps: usize, x: &DVector<f64>) -> DVector<f64> {
        self.inner.term_gradient(step, num_steps, x) * self.factor
    }
}

pub fn qoi_eval<Q: QuantityOfInterest + ?Sized>(q: &Q, traj: &Trajectory) -> f64 {
    let nt = traj.grid().num_steps();
    traj.states()
        .iter()
        .enumerate()
        .map(|(i, x)| q.term(i, nt, x))
        .sum()
}

/// Multipliers `λ_0 … λ_Nt` in forward order.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointTrajectory {
    multipliers: Vec<DVector<f64>>,
    scheme: Scheme,
}

impl AdjointTrajectory {
    pub fn multipliers(&self) -> &[DVector<f64>] {
        &self.multipliers
    }

    pub fn multiplier(&self, i: usize) -> &DVector<f64> {
        &self.multipliers[i]
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn len(&self) -> usize {
        self.multipliers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.multipliers.is_empty()
    }
}

/// `∇_{x₀} Q = -λ_0`.
pub fn qoi_gradient(adj: &AdjointTrajectory) -> DVector<f64> {
    -&adj.multipliers[0]
}

/// Full adjoint along `states`, which hold time levels `first..=num_steps`.
/// Used directly for partial trajectories that start mid-horizon.
pub(crate) fn full_adjoint_from<M, Q>(
    model: &M,
    states: &[DVector<f64>],
    first: usize,
    num_steps: usize,
    h: f64,
    q: &Q,
    scheme: Scheme,
) -> Result<Vec<DVector<f64>>>
where
    M: DiscreteModel + ?Sized,
    Q: QuantityOfInterest + ?Sized,
{
    check_len(
        "adjoint trajectory length",
        num_steps + 1 - first,
        states.len(),
    )?;
    let n = model.dim();
    let last = states.len() - 1;
    let mut lambdas = vec![DVector::zeros(n); states.len()];
    lambdas[last] = -q.term_gradient(num_steps, num_steps, &states[last]);
    for j in (0..last).rev() {
        let step = first + j;
        let grad = q.term_gradient(step, num_steps, &states[j]);
        let next = &lambdas[j + 1];
        let propagated = match scheme {
            Scheme::Explicit => next + model.rhs_jacobian(&states[j]).tr_mul(next) * h,
            Scheme::Implicit => {
                let a = DMatrix::identity(n, n) - model.rhs_jacobian(&states[j + 1]) * h;
                linalg::lu_solve_transpose("implicit adjoint step", a, next)
                    .map_err(|e| e.at_step(step))?
            }
        };
        lambdas[j] = propagated - grad;
    }
    Ok(lambdas)
}

fn full_adjoint<M, Q>(
    model: &M,
    traj: &Trajectory,
    q: &Q,
    scheme: Scheme,
) -> Result<AdjointTrajectory>
where
    M: DiscreteModel + ?Sized,
    Q: QuantityOfInterest + ?Sized,
{
    check_len("adjoint state", model.dim(), traj.dim())?;
    let grid = traj.grid();
    let multipliers = full_adjoint_from(
        model,
        traj.states(),
        0,
        grid.num_steps(),
        grid.step(),
        q,
        scheme,
    )?;
    Ok(AdjointTrajectory {
        multipliers,
        scheme,
    })
}

/// `λ_i = (I + h J(x_i))ᵀ λ_{i+1} - ∂r_i/∂x_i`.
pub fn full_adjoint_explicit<M, Q>(model: &M, traj: &Trajectory, q: &Q) -> Result<AdjointTrajectory>
where
    M: DiscreteModel + ?Sized,
    Q: QuantityOfInterest + ?Sized,
{
    full_adjoint(model, traj, q, Scheme::Explicit)
}

/// `λ_i = (I - h J(x_{i+1}))⁻ᵀ λ_{i+1} - ∂r_i/∂x_i`.
pub fn full_adjoint_implicit<M, Q>(model: &M, traj: &Trajectory, q: &Q) -> Result<AdjointTrajectory>
where
    M: DiscreteModel + ?Sized,
    Q: QuantityOfInterest + ?Sized,
{
    full_adjoint(model, traj, q, Scheme::Implicit)
}

pub fn full_adjoint_for<M, Q>(
    model: &M,
    traj: &Trajectory,
    q: &Q,
    scheme: Scheme,
) -> Result<AdjointTrajectory>
where
    M: DiscreteModel + ?Sized,
    Q: QuantityOfInterest + ?Sized,
{
    full_adjoint(model, traj, q, scheme)
}

/// Reduced multipliers `λ̃_i` of length `k`, computed on the lifted reduced
/// trajectory only.
///
/// Explicit: `λ̃_i = Uᵀ (I + h Ĵ(U x̃_i))ᵀ U λ̃_{i+1} - Uᵀ ∂r_i`, with `Ĵ` the
/// full-space Jacobian of the hyper-reduced right-hand side, applied
/// matrix-free. Implicit: `λ̃_i = (I - h J̃(x̃_{i+1}))⁻ᵀ λ̃_{i+1} - Uᵀ ∂r_i`,
/// the exact adjoint of the reduced implicit step, with `J̃ = Uᵀ Ĵ U`.
pub fn reduced_adjoint<M, Q>(
    rom: &ReducedModel<'_, M>,
    rtraj: &ReducedTrajectory,
    q: &Q,
    scheme: Scheme,
) -> Result<AdjointTrajectory>
where
    M: DiscreteModel + ?Sized,
    Q: QuantityOfInterest + ?Sized,
{
    let basis = rom.basis();
    let u = basis.modes();
    let k = rom.k();
    let nt = rtraj.grid().num_steps();
    let h = rtraj.grid().step();
    for s in rtraj.states() {
        check_len("reduced adjoint state", k, s.len())?;
    }
    let lifted: Vec<DVector<f64>> = rtraj.states().iter().map(|s| u * s).collect();
    let mut lambdas = vec![DVector::zeros(k); nt + 1];
    lambdas[nt] = -u.tr_mul(&q.term_gradient(nt, nt, &lifted[nt]));
    for i in (0..nt).rev() {
        let grad = u.tr_mul(&q.term_gradient(i, nt, &lifted[i]));
        let next = &lambdas[i + 1];
        let propagated = match scheme {
            Scheme::Explicit => {
                let y = u * next;
                let w = &y + rom.lifted_jacobian_transpose_apply(&lifted[i], &y) * h;
                u.tr_mul(&w)
            }
            Scheme::Implicit => {
                let a = DMatrix::identity(k, k) - rom.rhs_jacobian(rtraj.state(i + 1)) * h;
                linalg::lu_solve_transpose("reduced implicit adjoint step", a, next)
                    .map_err(|e| e.at_step(i))?
            }
        };
        lambdas[i] = propagated - grad;
    }
    Ok(AdjointTrajectory {
        multipliers: lambdas,
        scheme,
    })
}
