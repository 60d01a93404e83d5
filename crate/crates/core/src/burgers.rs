//! Viscous Burgers equation `u_t + u u_x = μ u_xx` on `[0, L]` with
//! homogeneous Dirichlet boundaries, discretized by central differences.
//!
//! The boundary values are eliminated, so the state holds the `n - 2`
//! interior samples. The semi-discrete system is
//!
//! ```text
//! u' = -u ⊙ (D1 u) + μ D2 u
//! ```
//!
//! and the diffusion term `μ D2` is reported as the model's linear part, so
//! reduced models hyper-reduce only the advection term.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, Error, Result};
use crate::model::DiscreteModel;

#[derive(Debug, Clone)]
pub struct BurgersModel {
    n_grid: usize,
    length: f64,
    dx: f64,
    params: [f64; 1],
    d1: DMatrix<f64>,
    d2: DMatrix<f64>,
    diffusion: DMatrix<f64>,
}

impl BurgersModel {
    /// Assembles the central-difference operators on `n_grid` points.
    pub fn new(n_grid: usize, length: f64, viscosity: f64) -> Result<Self> {
        if n_grid < 4 {
            return Err(Error::InvalidArgument(format!(
                "Burgers grid needs at least 4 points, got {n_grid}"
            )));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "domain length must be positive, got {length}"
            )));
        }
        if !(viscosity > 0.0 && viscosity.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "viscosity must be positive, got {viscosity}"
            )));
        }
        let dim = n_grid - 2;
        let dx = length / (n_grid - 1) as f64;
        let mut d1 = DMatrix::zeros(dim, dim);
        let mut d2 = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            d2[(i, i)] = -2.0 / (dx * dx);
            if i > 0 {
                d1[(i, i - 1)] = -0.5 / dx;
                d2[(i, i - 1)] = 1.0 / (dx * dx);
            }
            if i + 1 < dim {
                d1[(i, i + 1)] = 0.5 / dx;
                d2[(i, i + 1)] = 1.0 / (dx * dx);
            }
        }
        let diffusion = &d2 * viscosity;
        Ok(Self {
            n_grid,
            length,
            dx,
            params: [viscosity],
            d1,
            d2,
            diffusion,
        })
    }

    /// Same grid, different viscosity.
    pub fn with_viscosity(&self, viscosity: f64) -> Result<Self> {
        Self::new(self.n_grid, self.length, viscosity)
    }

    pub fn n_grid(&self) -> usize {
        self.n_grid
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn viscosity(&self) -> f64 {
        self.params[0]
    }

    /// Central first-derivative operator.
    pub fn d1(&self) -> &DMatrix<f64> {
        &self.d1
    }

    /// Central second-derivative operator.
    pub fn d2(&self) -> &DMatrix<f64> {
        &self.d2
    }

    /// Physical coordinate of interior state entry `j` (0-based).
    pub fn coordinate(&self, j: usize) -> f64 {
        (j + 1) as f64 * self.dx
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.dim()).map(|j| self.coordinate(j)).collect()
    }

    /// Interior state indices whose coordinates lie in `[lo, hi]`.
    pub fn indices_in(&self, lo: f64, hi: f64) -> Vec<usize> {
        let tol = 1e-12 * self.length;
        (0..self.dim())
            .filter(|&j| {
                let x = self.coordinate(j);
                x >= lo - tol && x <= hi + tol
            })
            .collect()
    }

    /// `-u ⊙ (D1 u) + μ D2 u`, with a length check.
    pub fn evaluate(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        check_len("Burgers state", self.dim(), u.len())?;
        Ok(self.rhs(u))
    }

    /// `-diag(D1 u) - diag(u) D1 + μ D2`, with a length check.
    pub fn evaluate_jacobian(&self, u: &DVector<f64>) -> Result<DMatrix<f64>> {
        check_len("Burgers state", self.dim(), u.len())?;
        Ok(self.rhs_jacobian(u))
    }

    fn advection(&self, u: &DVector<f64>) -> DVector<f64> {
        -u.component_mul(&(&self.d1 * u))
    }
}

impl DiscreteModel for BurgersModel {
    fn dim(&self) -> usize {
        self.n_grid - 2
    }

    fn params(&self) -> &[f64] {
        &self.params
    }

    fn rhs(&self, u: &DVector<f64>) -> DVector<f64> {
        self.advection(u) + &self.diffusion * u
    }

    fn rhs_jacobian(&self, u: &DVector<f64>) -> DMatrix<f64> {
        let du = &self.d1 * u;
        let mut jac = self.diffusion.clone();
        for i in 0..self.dim() {
            jac[(i, i)] -= du[i];
            for j in i.saturating_sub(1)..(i + 2).min(self.dim()) {
                jac[(i, j)] -= u[i] * self.d1[(i, j)];
            }
        }
        jac
    }

    fn linear_part(&self) -> Option<&DMatrix<f64>> {
        Some(&self.diffusion)
    }

    fn nonlinear_term(&self, u: &DVector<f64>) -> DVector<f64> {
        self.advection(u)
    }

    fn nonlinear_jacobian_rows(&self, u: &DVector<f64>, rows: &[usize]) -> DMatrix<f64> {
        let n = self.dim();
        let half = 0.5 / self.dx;
        let at = |j: isize| {
            if j < 0 || j >= n as isize {
                0.0
            } else {
                u[j as usize]
            }
        };
        let mut out = DMatrix::zeros(rows.len(), n);
        for (r, &i) in rows.iter().enumerate() {
            let ii = i as isize;
            let du = (at(ii + 1) - at(ii - 1)) * half;
            out[(r, i)] = -du;
            if i > 0 {
                out[(r, i - 1)] = u[i] * half;
            }
            if i + 1 < n {
                out[(r, i + 1)] = -u[i] * half;
            }
        }
        out
    }
}

/// Degree-seven initial profile
/// `p(x) = a s²(1-s)²(s-r₁)(s-r₂)(s-r₃)` with `s = x / L`.
///
/// `a` is chosen so that `max |p| = amplitude` on `[0, L]` and `p > 0` just
/// inside `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialCondition {
    pub roots: [f64; 3],
    pub amplitude: f64,
}

impl Default for InitialCondition {
    fn default() -> Self {
        // single hump leaning towards the left boundary
        Self {
            roots: [-1.0, 1.5, 2.0],
            amplitude: 1.0,
        }
    }
}

impl InitialCondition {
    const SAMPLES: usize = 20_000;

    fn shape(&self, s: f64) -> f64 {
        let [r1, r2, r3] = self.roots;
        s * s * (1.0 - s) * (1.0 - s) * (s - r1) * (s - r2) * (s - r3)
    }

    /// The leading coefficient `a`.
    pub fn coefficient(&self) -> Result<f64> {
        let peak = (0..=Self::SAMPLES)
            .map(|i| self.shape(i as f64 / Self::SAMPLES as f64).abs())
            .fold(0.0, f64::max);
        if !(peak > 0.0) {
            return Err(Error::Degenerate(
                "initial profile vanishes identically".into(),
            ));
        }
        let near_left = self.shape(1e-6);
        let sign = if near_left < 0.0 { -1.0 } else { 1.0 };
        Ok(sign * self.amplitude / peak)
    }

    /// `p` at normalized coordinate `s ∈ [0, 1]`.
    pub fn value(&self, s: f64) -> Result<f64> {
        Ok(self.coefficient()? * self.shape(s))
    }

    /// Samples the profile at the interior grid points of `model`.
    pub fn sample(&self, model: &BurgersModel) -> Result<DVector<f64>> {
        let a = self.coefficient()?;
        Ok(DVector::from_iterator(
            model.dim(),
            (0..model.dim()).map(|j| a * self.shape(model.coordinate(j) / model.length())),
        ))
    }
}

/// Default initial condition sampled on `model`'s interior points.
pub fn initial_condition(model: &BurgersModel) -> DVector<f64> {
    InitialCondition::default()
        .sample(model)
        .expect("default initial condition is non-degenerate")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{integrate, NewtonSettings, Scheme, TimeGrid};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
        DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn small_grid_stencils() {
        let m = BurgersModel::new(5, 1.0, 0.1).unwrap();
        assert_eq!(m.dim(), 3);
        assert_relative_eq!(m.dx(), 0.25);
        let row: Vec<f64> = m.d2().row(0).iter().copied().collect();
        assert_eq!(row, vec![-32.0, 16.0, 0.0]);
        let d1u = m.d1() * DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert_eq!(d1u.as_slice(), &[4.0, 4.0, -4.0]);
    }

    #[test]
    fn baseline_sized_grid() {
        let m = BurgersModel::new(201, 1.0, 0.1).unwrap();
        assert_eq!(m.dim(), 199);
        assert_relative_eq!(m.dx(), 0.005, epsilon = 1e-15);
    }

    #[test]
    fn rejects_invalid_sizes() {
        assert!(BurgersModel::new(3, 1.0, 0.1).is_err());
        assert!(BurgersModel::new(10, 0.0, 0.1).is_err());
        assert!(BurgersModel::new(10, 1.0, -0.1).is_err());
        let m = BurgersModel::new(10, 1.0, 0.1).unwrap();
        assert!(m.evaluate(&DVector::zeros(3)).is_err());
        assert!(m.evaluate_jacobian(&DVector::zeros(3)).is_err());
    }

    #[test]
    fn first_derivative_of_constant_vanishes_in_the_interior() {
        let m = BurgersModel::new(12, 1.0, 0.1).unwrap();
        let d = m.d1() * DVector::from_element(m.dim(), 1.0);
        for i in 1..m.dim() - 1 {
            assert_eq!(d[i], 0.0);
        }
        assert!(d[0] > 0.0 && d[m.dim() - 1] < 0.0);
    }

    #[test]
    fn second_derivative_of_linear_function_vanishes_in_the_interior() {
        let m = BurgersModel::new(12, 2.0, 0.1).unwrap();
        let u = DVector::from_iterator(m.dim(), m.coordinates().into_iter().map(|x| 3.0 * x + 1.0));
        let d = m.d2() * u;
        for i in 1..m.dim() - 1 {
            assert!(d[i].abs() < 1e-9, "row {i}: {}", d[i]);
        }
    }

    #[test]
    fn rhs_matches_loop_evaluation() {
        let m = BurgersModel::new(5, 1.0, 0.1).unwrap();
        let n = m.dim();
        let dx = m.dx();
        let u = DVector::from_iterator(
            n,
            m.coordinates()
                .into_iter()
                .map(|x| (std::f64::consts::PI * x).sin()),
        );
        let got = m.evaluate(&u).unwrap();
        for i in 0..n {
            let left = if i == 0 { 0.0 } else { u[i - 1] };
            let right = if i + 1 == n { 0.0 } else { u[i + 1] };
            let expect =
                -u[i] * (right - left) / (2.0 * dx) + 0.1 * (right - 2.0 * u[i] + left) / (dx * dx);
            assert_relative_eq!(got[i], expect, epsilon = 1e-12);
        }
        assert_eq!(m.evaluate(&DVector::zeros(n)).unwrap(), DVector::zeros(n));
    }

    #[test]
    fn constant_state_without_viscosity_has_no_interior_advection() {
        let m = BurgersModel::new(10, 1.0, 1e-300).unwrap();
        let f = m.nonlinear_term(&DVector::from_element(m.dim(), 2.5));
        for i in 1..m.dim() - 1 {
            assert_eq!(f[i], 0.0);
        }
    }

    #[test]
    fn jacobian_at_zero_is_diffusion() {
        let m = BurgersModel::new(9, 1.0, 0.3).unwrap();
        let jac = m.evaluate_jacobian(&DVector::zeros(m.dim())).unwrap();
        assert_eq!(jac, m.d2() * 0.3);
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = BurgersModel::new(8, 1.0, 0.1).unwrap();
        let eps = 1e-6;
        for _ in 0..10 {
            let u = random_state(&mut rng, m.dim());
            let jac = m.rhs_jacobian(&u);
            for j in 0..m.dim() {
                let mut up = u.clone();
                let mut dn = u.clone();
                up[j] += eps;
                dn[j] -= eps;
                let fd = (m.rhs(&up) - m.rhs(&dn)) / (2.0 * eps);
                let col = jac.column(j);
                assert!((&fd - col).norm() <= 1e-6 * col.norm().max(1.0));
            }
            let dir = random_state(&mut rng, m.dim());
            let fd = (m.rhs(&(&u + &dir * eps)) - m.rhs(&(&u - &dir * eps))) / (2.0 * eps);
            let jv = &jac * &dir;
            assert!((&fd - &jv).norm() <= 1e-6 * jv.norm());
        }
    }

    #[test]
    fn sampled_nonlinear_jacobian_rows_match_full() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = BurgersModel::new(15, 1.0, 0.2).unwrap();
        let u = random_state(&mut rng, m.dim());
        let rows = [0, 5, 12, 3];
        let full = m.rhs_jacobian(&u) - m.linear_part().unwrap();
        let sampled = m.nonlinear_jacobian_rows(&u, &rows);
        for (r, &i) in rows.iter().enumerate() {
            assert!((sampled.row(r) - full.row(i)).amax() < 1e-12);
        }
        assert!((m.nonlinear_term(&u) + m.linear_part().unwrap() * &u - m.rhs(&u)).amax() < 1e-12);
    }

    #[test]
    fn initial_condition_shape() {
        let ic = InitialCondition::default();
        let m = BurgersModel::new(2001, 1.0, 0.1).unwrap();
        let u = ic.sample(&m).unwrap();
        assert!(u[0] > 0.0 && u[0] < 1e-4);
        assert!(u[m.dim() - 1].abs() < 1e-4);
        assert_relative_eq!(u.amax(), 1.0, epsilon = 1e-6);

        let doubled = InitialCondition {
            amplitude: 2.0,
            ..ic
        }
        .sample(&m)
        .unwrap();
        assert!((doubled - &u * 2.0).amax() < 1e-14);

        let coarse = initial_condition(&BurgersModel::new(41, 1.0, 0.1).unwrap());
        assert!(coarse[0] > 0.0);
    }

    #[test]
    fn initial_condition_is_a_degree_seven_polynomial() {
        let ic = InitialCondition::default();
        let step = 0.05;
        let samples: Vec<f64> = (0..20)
            .map(|i| ic.value(i as f64 * step).unwrap())
            .collect();
        let diff = |v: &[f64]| v.windows(2).map(|w| w[1] - w[0]).collect::<Vec<_>>();
        let mut d = samples;
        for _ in 0..7 {
            d = diff(&d);
        }
        let seventh = d[0];
        assert!(seventh.abs() > 1e-9);
        assert!(d
            .iter()
            .all(|v| (v - seventh).abs() < 1e-9 * seventh.abs().max(1.0)));
        let eighth = diff(&d);
        assert!(eighth
            .iter()
            .all(|v| v.abs() < 1e-10 * seventh.abs().max(1.0) + 1e-14));
    }

    #[test]
    fn qoi_window_indices_follow_coordinates() {
        let m = BurgersModel::new(201, 1.0, 0.1).unwrap();
        let idx = m.indices_in(0.05, 0.1);
        assert_eq!(idx.first(), Some(&9));
        assert_eq!(idx.last(), Some(&19));
        assert_eq!(idx.len(), 11);
    }

    #[test]
    fn strong_diffusion_decays_the_solution_norm() {
        let m = BurgersModel::new(41, 1.0, 1.0).unwrap();
        let grid = TimeGrid::new(0.5, 50).unwrap();
        let traj = integrate(
            &m,
            &initial_condition(&m),
            &grid,
            Scheme::Implicit,
            &NewtonSettings::default(),
        )
        .unwrap();
        let norms: Vec<f64> = traj.states().iter().map(|s| s.norm()).collect();
        assert!(norms.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }
}
