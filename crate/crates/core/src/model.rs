//! Autonomous semi-discrete dynamical systems `x' = F(x, μ)` and their
//! explicit/implicit Euler time integration.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, Error, Result};
use crate::linalg;

/// A semi-discrete model `x' = F(x, μ)` of fixed state dimension.
///
/// Implementations may split `F(x) = L x + N(x)` with a constant matrix `L`
/// by returning it from [`DiscreteModel::linear_part`]. Reduced models then
/// project `L` exactly and apply hyper-reduction to `N` only. The split never
/// changes `rhs` or `rhs_jacobian`, which always describe the whole of `F`.
///
/// Callers guarantee that every vector passed in has length [`dim`](Self::dim);
/// the public stepping functions in this module check that for you.
pub trait DiscreteModel {
    fn dim(&self) -> usize;

    fn params(&self) -> &[f64] {
        &[]
    }

    fn rhs(&self, x: &DVector<f64>) -> DVector<f64>;

    fn rhs_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64>;

    fn linear_part(&self) -> Option<&DMatrix<f64>> {
        None
    }

    /// `N(x) = F(x) - L x`.
    fn nonlinear_term(&self, x: &DVector<f64>) -> DVector<f64> {
        match self.linear_part() {
            Some(l) => self.rhs(x) - l * x,
            None => self.rhs(x),
        }
    }

    /// Rows `rows` of `∂N/∂x`. Models with local stencils should override this.
    fn nonlinear_jacobian_rows(&self, x: &DVector<f64>, rows: &[usize]) -> DMatrix<f64> {
        let mut jac = self.rhs_jacobian(x);
        if let Some(l) = self.linear_part() {
            jac -= l;
        }
        linalg::select_rows(&jac, rows)
    }
}

impl<M: DiscreteModel + ?Sized> DiscreteModel for &M {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn params(&self) -> &[f64] {
        (**self).params()
    }
    fn rhs(&self, x: &DVector<f64>) -> DVector<f64> {
        (**self).rhs(x)
    }
    fn rhs_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        (**self).rhs_jacobian(x)
    }
    fn linear_part(&self) -> Option<&DMatrix<f64>> {
        (**self).linear_part()
    }
    fn nonlinear_term(&self, x: &DVector<f64>) -> DVector<f64> {
        (**self).nonlinear_term(x)
    }
    fn nonlinear_jacobian_rows(&self, x: &DVector<f64>, rows: &[usize]) -> DMatrix<f64> {
        (**self).nonlinear_jacobian_rows(x, rows)
    }
}

/// Linear model `F(x) = A x`.
#[derive(Debug, Clone)]
pub struct LinearModel {
    a: DMatrix<f64>,
}

impl LinearModel {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() || a.nrows() == 0 {
            return Err(Error::InvalidArgument(format!(
                "linear model needs a non-empty square matrix, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        Ok(Self { a })
    }

    pub fn scalar(a: f64) -> Self {
        Self {
            a: DMatrix::from_element(1, 1, a),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }
}

impl DiscreteModel for LinearModel {
    fn dim(&self) -> usize {
        self.a.nrows()
    }
    fn rhs(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x
    }
    fn rhs_jacobian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        self.a.clone()
    }
}

/// Model defined by a pair of closures, handy for small experiments.
pub struct ClosureModel<F, J> {
    dim: usize,
    rhs: F,
    jacobian: J,
}

impl<F, J> ClosureModel<F, J>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
    J: Fn(&DVector<f64>) -> DMatrix<f64>,
{
    pub fn new(dim: usize, rhs: F, jacobian: J) -> Self {
        Self { dim, rhs, jacobian }
    }
}

impl<F, J> DiscreteModel for ClosureModel<F, J>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
    J: Fn(&DVector<f64>) -> DMatrix<f64>,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn rhs(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.rhs)(x)
    }
    fn rhs_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        (self.jacobian)(x)
    }
}

/// Euler variant used for time stepping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Explicit,
    Implicit,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Explicit => "explicit",
            Scheme::Implicit => "implicit",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "explicit" => Ok(Scheme::Explicit),
            "implicit" => Ok(Scheme::Implicit),
            other => Err(Error::InvalidArgument(format!(
                "unknown scheme '{other}', expected 'explicit' or 'implicit'"
            ))),
        }
    }
}

/// Uniform time grid with `num_steps` steps of size `step` ending at `t_final`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    step: f64,
    num_steps: usize,
    t_final: f64,
}

impl TimeGrid {
    pub fn new(t_final: f64, num_steps: usize) -> Result<Self> {
        if num_steps == 0 {
            return Err(Error::InvalidArgument("num_steps must be positive".into()));
        }
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "t_final must be positive and finite, got {t_final}"
            )));
        }
        Ok(Self {
            step: t_final / num_steps as f64,
            num_steps,
            t_final,
        })
    }

    pub fn from_step(step: f64, num_steps: usize) -> Result<Self> {
        Self::new(step * num_steps as f64, num_steps)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn num_steps(&self) -> usize {
        self.num_steps
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.step
    }
}

/// States `x_0 … x_Nt` on a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    states: Vec<DVector<f64>>,
    grid: TimeGrid,
}

impl Trajectory {
    pub fn new(states: Vec<DVector<f64>>, grid: TimeGrid) -> Result<Self> {
        check_len("trajectory length", grid.num_steps() + 1, states.len())?;
        let dim = states[0].len();
        for (i, s) in states.iter().enumerate() {
            check_len("trajectory state", dim, s.len())?;
            if !s.iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "state {i} contains non-finite entries"
                )));
            }
        }
        Ok(Self { states, grid })
    }

    pub fn states(&self) -> &[DVector<f64>] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &DVector<f64> {
        &self.states[i]
    }

    pub fn initial(&self) -> &DVector<f64> {
        &self.states[0]
    }

    pub fn final_state(&self) -> &DVector<f64> {
        &self.states[self.states.len() - 1]
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.states[0].len()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// States as the columns of a `dim × (Nt+1)` matrix.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_columns(&self.states)
    }

    pub fn into_states(self) -> Vec<DVector<f64>> {
        self.states
    }
}

/// Newton–Raphson stopping rule on the Euclidean norm of the residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub solution: DVector<f64>,
    pub iterations: usize,
    pub residual_norm: f64,
}

/// Solves `residual(y) = 0` by Newton's method with dense LU linear solves.
pub fn newton_solve<R, J>(
    residual: R,
    jacobian: J,
    guess: &DVector<f64>,
    settings: &NewtonSettings,
) -> Result<NewtonOutcome>
where
    R: Fn(&DVector<f64>) -> DVector<f64>,
    J: Fn(&DVector<f64>) -> DMatrix<f64>,
{
    let mut y = guess.clone();
    let mut iterations = 0;
    loop {
        let r = residual(&y);
        check_len("Newton residual", y.len(), r.len())?;
        let norm = r.norm();
        if norm <= settings.tol {
            return Ok(NewtonOutcome {
                solution: y,
                iterations,
                residual_norm: norm,
            });
        }
        if iterations >= settings.max_iter || !norm.is_finite() {
            return Err(Error::NewtonDiverged {
                iterations,
                residual_norm: norm,
            });
        }
        let jac = jacobian(&y);
        if jac.nrows() != y.len() || jac.ncols() != y.len() {
            return Err(Error::DimensionMismatch {
                context: "Newton Jacobian",
                expected: y.len(),
                actual: jac.nrows().max(jac.ncols()),
            });
        }
        let delta = linalg::lu_solve("Newton system", jac, &r)?;
        y -= delta;
        iterations += 1;
    }
}

fn check_state<M: DiscreteModel + ?Sized>(model: &M, x: &DVector<f64>, h: f64) -> Result<()> {
    check_len("model state", model.dim(), x.len())?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "time step must be positive, got {h}"
        )));
    }
    Ok(())
}

/// `x + h F(x)`.
pub fn step_explicit<M: DiscreteModel + ?Sized>(
    model: &M,
    x: &DVector<f64>,
    h: f64,
) -> Result<DVector<f64>> {
    check_state(model, x, h)?;
    Ok(x + model.rhs(x) * h)
}

/// Solves `y = x + h F(y)` by Newton iteration started at `x`.
pub fn step_implicit<M: DiscreteModel + ?Sized>(
    model: &M,
    x: &DVector<f64>,
    h: f64,
    settings: &NewtonSettings,
) -> Result<NewtonOutcome> {
    check_state(model, x, h)?;
    let identity = DMatrix::<f64>::identity(x.len(), x.len());
    newton_solve(
        |y| y - x - model.rhs(y) * h,
        |y| &identity - model.rhs_jacobian(y) * h,
        x,
        settings,
    )
}

pub fn step<M: DiscreteModel + ?Sized>(
    model: &M,
    x: &DVector<f64>,
    h: f64,
    scheme: Scheme,
    settings: &NewtonSettings,
) -> Result<DVector<f64>> {
    match scheme {
        Scheme::Explicit => step_explicit(model, x, h),
        Scheme::Implicit => step_implicit(model, x, h, settings).map(|o| o.solution),
    }
}

/// Integrates `grid.num_steps()` Euler steps from `x0`. Errors carry the
/// index of the step that failed.
pub fn integrate<M: DiscreteModel + ?Sized>(
    model: &M,
    x0: &DVector<f64>,
    grid: &TimeGrid,
    scheme: Scheme,
    settings: &NewtonSettings,
) -> Result<Trajectory> {
    check_len("initial state", model.dim(), x0.len())?;
    let mut states = Vec::with_capacity(grid.num_steps() + 1);
    states.push(x0.clone());
    for i in 0..grid.num_steps() {
        let next =
            step(model, &states[i], grid.step(), scheme, settings).map_err(|e| e.at_step(i))?;
        if !next.iter().all(|v| v.is_finite()) {
            return Err(Error::NewtonDiverged {
                iterations: 0,
                residual_norm: f64::NAN,
            }
            .at_step(i));
        }
        states.push(next);
    }
    Trajectory::new(states, *grid)
}
