//! POD-Galerkin and POD/DEIM reduced models.
//!
//! A [`ReducedModel`] is itself a [`DiscreteModel`] of dimension `k`, so the
//! generic Euler steppers and Newton solver drive it unchanged. When the full
//! model exposes a linear part `L`, the reduced right-hand side is
//! `UᵀLU x̃ + Uᵀ V (PᵀV)⁻¹ Pᵀ N(U x̃)`; otherwise DEIM approximates all of `F`.

use nalgebra::{DMatrix, DVector};

use crate::deim::DeimApproximation;
use crate::error::{check_len, Error, Result};
use crate::model::{
    self, DiscreteModel, NewtonOutcome, NewtonSettings, Scheme, TimeGrid, Trajectory,
};
use crate::pod::PodBasis;

pub struct ReducedModel<'a, M: ?Sized> {
    full: &'a M,
    basis: PodBasis,
    deim: Option<DeimApproximation>,
    reduced_linear: Option<DMatrix<f64>>,
}

impl<'a, M: DiscreteModel + ?Sized> ReducedModel<'a, M> {
    /// Plain Galerkin projection `Uᵀ F(U x̃)`.
    pub fn galerkin(full: &'a M, basis: PodBasis) -> Result<Self> {
        Self::build(full, basis, None)
    }

    pub fn with_deim(full: &'a M, basis: PodBasis, deim: DeimApproximation) -> Result<Self> {
        Self::build(full, basis, Some(deim))
    }

    fn build(full: &'a M, basis: PodBasis, deim: Option<DeimApproximation>) -> Result<Self> {
        check_len("reduced basis rows", full.dim(), basis.dim())?;
        if let Some(d) = &deim {
            check_len("DEIM projector rows", basis.k(), d.projector().nrows())?;
            check_len("DEIM mode rows", full.dim(), d.nonlinear_modes().nrows())?;
        }
        let reduced_linear = full.linear_part().map(|l| {
            let u = basis.modes();
            u.tr_mul(&(l * u))
        });
        Ok(Self {
            full,
            basis,
            deim,
            reduced_linear,
        })
    }

    pub fn full_model(&self) -> &'a M {
        self.full
    }

    pub fn basis(&self) -> &PodBasis {
        &self.basis
    }

    pub fn deim(&self) -> Option<&DeimApproximation> {
        self.deim.as_ref()
    }

    pub fn k(&self) -> usize {
        self.basis.k()
    }

    pub fn m(&self) -> Option<usize> {
        self.deim.as_ref().map(DeimApproximation::m)
    }

    /// `Uᵀ x₀`.
    pub fn initial_state(&self, x0: &DVector<f64>) -> Result<DVector<f64>> {
        self.basis.project(x0)
    }

    /// `(∂F̂/∂x)(U x̃)ᵀ y` for a full-space `y`, where `F̂ = L + V(PᵀV)⁻¹Pᵀ N`
    /// is the full-space operator the reduced model approximates (plain `F`
    /// for Galerkin).
    pub(crate) fn lifted_jacobian_transpose_apply(
        &self,
        lifted: &DVector<f64>,
        y: &DVector<f64>,
    ) -> DVector<f64> {
        match &self.deim {
            None => self.full.rhs_jacobian(lifted).tr_mul(y),
            Some(d) => {
                let rows = self.full.nonlinear_jacobian_rows(lifted, d.indices());
                let mut out = rows.tr_mul(&d.reconstruct_transpose(y));
                if let Some(l) = self.full.linear_part() {
                    out += l.tr_mul(y);
                }
                out
            }
        }
    }
}

impl<M: DiscreteModel + ?Sized> DiscreteModel for ReducedModel<'_, M> {
    fn dim(&self) -> usize {
        self.basis.k()
    }

    fn params(&self) -> &[f64] {
        self.full.params()
    }

    fn rhs(&self, xr: &DVector<f64>) -> DVector<f64> {
        let u = self.basis.modes();
        let x = u * xr;
        match &self.deim {
            None => u.tr_mul(&self.full.rhs(&x)),
            Some(d) => {
                let sampled =
                    crate::linalg::select_entries(&self.full.nonlinear_term(&x), d.indices());
                let mut out = d.projector() * sampled;
                if let Some(lr) = &self.reduced_linear {
                    out += lr * xr;
                }
                out
            }
        }
    }

    /// Sampled Jacobian rows times `U`, never the full `Ns × Ns` product.
    fn rhs_jacobian(&self, xr: &DVector<f64>) -> DMatrix<f64> {
        let u = self.basis.modes();
        let x = u * xr;
        match &self.deim {
            None => u.tr_mul(&(self.full.rhs_jacobian(&x) * u)),
            Some(d) => {
                let rows = self.full.nonlinear_jacobian_rows(&x, d.indices());
                let mut out = d.projector() * (rows * u);
                if let Some(lr) = &self.reduced_linear {
                    out += lr;
                }
                out
            }
        }
    }

    fn linear_part(&self) -> Option<&DMatrix<f64>> {
        self.reduced_linear.as_ref()
    }
}

/// Reduced states `x̃_0 … x̃_Nt`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedTrajectory {
    inner: Trajectory,
}

impl ReducedTrajectory {
    pub fn new(states: Vec<DVector<f64>>, grid: TimeGrid) -> Result<Self> {
        Ok(Self {
            inner: Trajectory::new(states, grid)?,
        })
    }

    pub fn states(&self) -> &[DVector<f64>] {
        self.inner.states()
    }

    pub fn state(&self, i: usize) -> &DVector<f64> {
        self.inner.state(i)
    }

    pub fn grid(&self) -> &TimeGrid {
        self.inner.grid()
    }

    pub fn len(&self) -> usize {
        self.inner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.is_empty()
    }

    pub fn as_trajectory(&self) -> &Trajectory {
        &self.inner
    }

    /// `x̂_i = U x̃_i` for every stored state.
    pub fn lift(&self, basis: &PodBasis) -> Result<Trajectory> {
        let states = self
            .states()
            .iter()
            .map(|s| basis.lift(s))
            .collect::<Result<Vec<_>>>()?;
        Trajectory::new(states, *self.grid())
    }
}

pub fn rom_step_explicit<M: DiscreteModel + ?Sized>(
    rom: &ReducedModel<'_, M>,
    xr: &DVector<f64>,
    h: f64,
) -> Result<DVector<f64>> {
    model::step_explicit(rom, xr, h)
}

pub fn rom_step_implicit<M: DiscreteModel + ?Sized>(
    rom: &ReducedModel<'_, M>,
    xr: &DVector<f64>,
    h: f64,
    settings: &NewtonSettings,
) -> Result<NewtonOutcome> {
    model::step_implicit(rom, xr, h, settings)
}

pub fn integrate_rom<M: DiscreteModel + ?Sized>(
    rom: &ReducedModel<'_, M>,
    xr0: &DVector<f64>,
    grid: &TimeGrid,
    scheme: Scheme,
    settings: &NewtonSettings,
) -> Result<ReducedTrajectory> {
    check_len("reduced initial state", rom.k(), xr0.len())?;
    let inner = model::integrate(rom, xr0, grid, scheme, settings)?;
    Ok(ReducedTrajectory { inner })
}

/// Runs the reduced model from `Uᵀ x₀`.
pub fn simulate_rom<M: DiscreteModel + ?Sized>(
    rom: &ReducedModel<'_, M>,
    x0: &DVector<f64>,
    grid: &TimeGrid,
    scheme: Scheme,
    settings: &NewtonSettings,
) -> Result<ReducedTrajectory> {
    integrate_rom(rom, &rom.initial_state(x0)?, grid, scheme, settings)
}

impl From<ReducedTrajectory> for Trajectory {
    fn from(r: ReducedTrajectory) -> Self {
        r.inner
    }
}

/// Checks `x̃_{i+1} - x̃_i - h f̃(x̃_{i+1})` for a reduced implicit step.
pub fn implicit_defect<M: DiscreteModel + ?Sized>(
    rom: &ReducedModel<'_, M>,
    from: &DVector<f64>,
    to: &DVector<f64>,
    h: f64,
) -> Result<f64> {
    check_len("reduced state", rom.k(), from.len())?;
    check_len("reduced state", rom.k(), to.len())?;
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "time step must be positive, got {h}"
        )));
    }
    Ok((to - from - rom.rhs(to) * h).norm())
}
