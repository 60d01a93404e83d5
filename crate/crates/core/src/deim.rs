//! Discrete empirical interpolation: greedy point selection (standard and
//! dual-weighted adaptive) and the resulting hyper-reduced projector.
//!
//! Indices are 0-based row positions throughout the library.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, Error, Result};
use crate::linalg::{self, argmax_abs};
use crate::pod::PodBasis;

/// Residuals whose peak falls below this fraction of the candidate column's
/// peak mean the columns are numerically dependent.
const DEPENDENCE_TOL: f64 = 1e-12;

fn interpolation_residual(
    v: &DMatrix<f64>,
    indices: &[usize],
    target: &DVector<f64>,
) -> Option<DVector<f64>> {
    let l = indices.len();
    let basis = v.columns(0, l);
    let ptv = DMatrix::from_fn(l, l, |i, j| basis[(indices[i], j)]);
    let rhs = DVector::from_iterator(l, indices.iter().map(|&r| target[r]));
    let c = ptv.lu().solve(&rhs)?;
    if !c.iter().all(|x| x.is_finite()) {
        return None;
    }
    Some(target - basis * c)
}

/// Standard greedy DEIM selection: the first point is the largest entry of
/// `v₁`; every later point is the largest entry of the residual left after
/// interpolating `v_ℓ` at the points chosen so far. Ties go to the smallest
/// index.
pub fn deim_indices(v: &DMatrix<f64>) -> Result<Vec<usize>> {
    let m = v.ncols();
    if m == 0 || m > v.nrows() {
        return Err(Error::InvalidArgument(format!(
            "cannot select {m} interpolation points from {} rows",
            v.nrows()
        )));
    }
    let (first, peak) = argmax_abs(v.column(0).iter().copied(), &[]).expect("non-empty column");
    if peak == 0.0 {
        return Err(Error::InvalidArgument("first basis vector is zero".into()));
    }
    let mut indices = vec![first];
    for l in 1..m {
        let col = v.column(l).into_owned();
        let r = interpolation_residual(v, &indices, &col).ok_or_else(|| {
            Error::InvalidArgument(format!("singular interpolation system at step {}", l + 1))
        })?;
        let (next, peak) = argmax_abs(r.iter().copied(), &[]).expect("non-empty residual");
        if peak <= DEPENDENCE_TOL * col.amax().max(f64::MIN_POSITIVE) {
            return Err(Error::InvalidArgument(format!(
                "basis column {} is linearly dependent on the previous ones",
                l + 1
            )));
        }
        indices.push(next);
    }
    Ok(indices)
}

/// Settings for [`adaptive_deim_indices_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveDeimConfig {
    /// Weight on the nonlinear-basis residual; `1 - alpha` goes to the
    /// dual-weighted-residual basis.
    pub alpha: f64,
    /// Rescale `|rᵛ|` and `|rʷ|` to unit peak before blending.
    pub normalize: bool,
}

impl AdaptiveDeimConfig {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidArgument(format!(
                "alpha {alpha} outside [0, 1]"
            )));
        }
        Ok(Self {
            alpha,
            normalize: false,
        })
    }
}

/// Adaptive selection with raw (unnormalized) residual magnitudes.
pub fn adaptive_deim_indices(v: &DMatrix<f64>, w: &DMatrix<f64>, alpha: f64) -> Result<Vec<usize>> {
    adaptive_deim_indices_with(v, w, &AdaptiveDeimConfig::new(alpha)?)
}

/// Greedy selection driven by `α|rᵛ| + (1-α)|rʷ|`, where `rᵛ` and `rʷ` are
/// the errors of interpolating `v_ℓ` and `w_ℓ` in the span of the previous
/// nonlinear modes at the current points.
///
/// The first point compares the peaks of `|v₁|` and `|w₁|` directly, without
/// `α`. Rows that are already selected are excluded from every later argmax.
/// When `w` has fewer columns than `v`, the remaining steps fall back to the
/// standard residual `|rᵛ|`.
pub fn adaptive_deim_indices_with(
    v: &DMatrix<f64>,
    w: &DMatrix<f64>,
    config: &AdaptiveDeimConfig,
) -> Result<Vec<usize>> {
    let m = v.ncols();
    if !(0.0..=1.0).contains(&config.alpha) {
        return Err(Error::InvalidArgument(format!(
            "alpha {} outside [0, 1]",
            config.alpha
        )));
    }
    if m == 0 || m > v.nrows() {
        return Err(Error::InvalidArgument(format!(
            "cannot select {m} interpolation points from {} rows",
            v.nrows()
        )));
    }
    check_len("dual-weighted basis rows", v.nrows(), w.nrows())?;
    if w.ncols() == 0 {
        return Err(Error::InvalidArgument(
            "dual-weighted basis has no columns".into(),
        ));
    }

    let (rho_v, psi_v) = argmax_abs(v.column(0).iter().copied(), &[]).expect("non-empty");
    let (rho_w, psi_w) = argmax_abs(w.column(0).iter().copied(), &[]).expect("non-empty");
    if psi_v == 0.0 {
        return Err(Error::SelectionFailed {
            step: 1,
            reason: "first nonlinear mode is zero".into(),
        });
    }
    let mut indices = vec![if psi_v >= psi_w { rho_v } else { rho_w }];

    for l in 1..m {
        let step = l + 1;
        let singular = || Error::SelectionFailed {
            step,
            reason: "interpolation matrix PᵀV is singular".into(),
        };
        let vl = v.column(l).into_owned();
        let rv = interpolation_residual(v, &indices, &vl).ok_or_else(singular)?;
        let mut score = rv.abs();
        if l < w.ncols() {
            let wl = w.column(l).into_owned();
            let rw = interpolation_residual(v, &indices, &wl).ok_or_else(singular)?;
            let mut rw = rw.abs();
            if config.normalize {
                let (sv, sw) = (score.max(), rw.max());
                if sv > 0.0 {
                    score /= sv;
                }
                if sw > 0.0 {
                    rw /= sw;
                }
            }
            score = score * config.alpha + rw * (1.0 - config.alpha);
        }
        let (next, peak) = argmax_abs(score.iter().copied(), &indices).ok_or_else(singular)?;
        if peak == 0.0 {
            return Err(Error::SelectionFailed {
                step,
                reason: "combined residual vanishes on all unselected rows".into(),
            });
        }
        indices.push(next);
    }
    Ok(indices)
}

/// `V` rows at `indices`, i.e. `PᵀV`.
pub fn selection_matrix(v: &DMatrix<f64>, indices: &[usize]) -> DMatrix<f64> {
    linalg::select_rows(v, indices)
}

/// 2-norm condition number of `PᵀV`; `+inf` when singular.
pub fn selection_condition_number(v: &DMatrix<f64>, indices: &[usize]) -> f64 {
    if indices.len() != v.ncols() || indices.iter().any(|&i| i >= v.nrows()) {
        return f64::INFINITY;
    }
    linalg::condition_number(&selection_matrix(v, indices))
}

/// Hyper-reduced approximation `Uᵀ f ≈ Uᵀ V (PᵀV)⁻¹ Pᵀ f`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeimApproximation {
    nonlinear_modes: DMatrix<f64>,
    indices: Vec<usize>,
    /// `(PᵀV)⁻¹`, kept for full-space reconstruction.
    interpolation_inverse: DMatrix<f64>,
    /// `Uᵀ V (PᵀV)⁻¹`, `k × m`.
    projector: DMatrix<f64>,
    condition: f64,
}

impl DeimApproximation {
    /// Precomputes the `k × m` projector for basis `basis`, nonlinear modes
    /// `v` and interpolation points `indices`.
    pub fn new(basis: &PodBasis, v: &DMatrix<f64>, indices: &[usize]) -> Result<Self> {
        check_len("nonlinear basis rows", basis.dim(), v.nrows())?;
        check_len("interpolation indices", v.ncols(), indices.len())?;
        if let Some(&bad) = indices.iter().find(|&&i| i >= v.nrows()) {
            return Err(Error::InvalidArgument(format!(
                "interpolation index {bad} out of range"
            )));
        }
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(
                "interpolation indices repeat".into(),
            ));
        }
        let ptv = selection_matrix(v, indices);
        let condition = linalg::condition_number(&ptv);
        if !condition.is_finite() {
            return Err(Error::SingularInterpolation { condition });
        }
        let inverse = ptv
            .try_inverse()
            .ok_or(Error::SingularInterpolation { condition })?;
        let projector = basis.modes().transpose() * v * &inverse;
        Ok(Self {
            nonlinear_modes: v.clone(),
            indices: indices.to_vec(),
            interpolation_inverse: inverse,
            projector,
            condition,
        })
    }

    /// Interpolation at every row, which reproduces the full model when used
    /// with an identity basis.
    pub fn exact(basis: &PodBasis) -> Result<Self> {
        let n = basis.dim();
        Self::new(basis, &DMatrix::identity(n, n), &(0..n).collect::<Vec<_>>())
    }

    pub fn nonlinear_modes(&self) -> &DMatrix<f64> {
        &self.nonlinear_modes
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn projector(&self) -> &DMatrix<f64> {
        &self.projector
    }

    pub fn m(&self) -> usize {
        self.indices.len()
    }

    pub fn condition_number(&self) -> f64 {
        self.condition
    }

    /// `Pᵀ f`.
    pub fn sample(&self, f: &DVector<f64>) -> Result<DVector<f64>> {
        check_len("sampled vector", self.nonlinear_modes.nrows(), f.len())?;
        Ok(linalg::select_entries(f, &self.indices))
    }

    /// `Uᵀ V (PᵀV)⁻¹ f_sampled`.
    pub fn approximate(&self, f_sampled: &DVector<f64>) -> Result<DVector<f64>> {
        check_len("sampled nonlinear term", self.m(), f_sampled.len())?;
        Ok(&self.projector * f_sampled)
    }

    /// `V (PᵀV)⁻¹ f_sampled`, the full-space interpolant.
    pub fn reconstruct(&self, f_sampled: &DVector<f64>) -> Result<DVector<f64>> {
        check_len("sampled nonlinear term", self.m(), f_sampled.len())?;
        Ok(&self.nonlinear_modes * (&self.interpolation_inverse * f_sampled))
    }

    /// `(PᵀV)⁻ᵀ Vᵀ y`: the transpose of [`reconstruct`](Self::reconstruct)
    /// applied to a full-space vector.
    pub(crate) fn reconstruct_transpose(&self, y: &DVector<f64>) -> DVector<f64> {
        self.interpolation_inverse
            .tr_mul(&self.nonlinear_modes.tr_mul(y))
    }
}

/// Same as [`DeimApproximation::new`].
pub fn build_deim_operator(
    basis: &PodBasis,
    v: &DMatrix<f64>,
    indices: &[usize],
) -> Result<DeimApproximation> {
    DeimApproximation::new(basis, v, indices)
}

/// Same as [`DeimApproximation::approximate`].
pub fn approximate_nonlinear(
    deim: &DeimApproximation,
    f_sampled: &DVector<f64>,
) -> Result<DVector<f64>> {
    deim.approximate(f_sampled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pod::Truncation;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn orthonormal(seed: u64, rows: usize, cols: usize) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0));
        a.qr().q().columns(0, cols).into_owned()
    }

    /// Greedy selection written with plain loops and Gaussian elimination.
    fn literal_deim(v: &DMatrix<f64>) -> Vec<usize> {
        let (n, m) = v.shape();
        let argmax = |r: &[f64]| {
            let mut best = 0;
            for i in 1..r.len() {
                if r[i].abs() > r[best].abs() {
                    best = i;
                }
            }
            best
        };
        let col0: Vec<f64> = (0..n).map(|i| v[(i, 0)]).collect();
        let mut rho = vec![argmax(&col0)];
        for l in 1..m {
            // solve (PᵀV) c = Pᵀ v_l
            let mut a: Vec<Vec<f64>> = (0..l)
                .map(|i| {
                    let mut row: Vec<f64> = (0..l).map(|j| v[(rho[i], j)]).collect();
                    row.push(v[(rho[i], l)]);
                    row
                })
                .collect();
            for p in 0..l {
                let piv = (p..l)
                    .max_by(|&x, &y| a[x][p].abs().total_cmp(&a[y][p].abs()))
                    .unwrap();
                a.swap(p, piv);
                for r in p + 1..l {
                    let f = a[r][p] / a[p][p];
                    for c in p..=l {
                        a[r][c] -= f * a[p][c];
                    }
                }
            }
            let mut c = vec![0.0; l];
            for p in (0..l).rev() {
                let mut acc = a[p][l];
                for q in p + 1..l {
                    acc -= a[p][q] * c[q];
                }
                c[p] = acc / a[p][p];
            }
            let mut r = vec![0.0; n];
            for i in 0..n {
                r[i] = v[(i, l)];
                for j in 0..l {
                    r[i] -= v[(i, j)] * c[j];
                }
            }
            rho.push(argmax(&r));
        }
        rho
    }

    #[test]
    fn matches_literal_loop_implementation() {
        for seed in 0..10 {
            let v = orthonormal(100 + seed, 50, 6);
            assert_eq!(deim_indices(&v).unwrap(), literal_deim(&v));
        }
    }

    #[test]
    fn single_column_picks_largest_entry() {
        let v = DMatrix::from_column_slice(3, 1, &[0.5, -0.9, 0.1]);
        assert_eq!(deim_indices(&v).unwrap(), vec![1]);
    }

    #[test]
    fn unit_vectors_select_their_rows() {
        let v = DMatrix::<f64>::identity(3, 2);
        assert_eq!(deim_indices(&v).unwrap(), vec![0, 1]);
    }

    #[test]
    fn ties_go_to_the_smallest_index() {
        let v = DMatrix::from_column_slice(4, 1, &[0.2, -0.7, 0.7, 0.1]);
        assert_eq!(deim_indices(&v).unwrap(), vec![1]);
    }

    #[test]
    fn dependent_columns_are_rejected() {
        let mut v = orthonormal(1, 10, 3);
        let c0 = v.column(0).into_owned();
        v.set_column(2, &(c0 * 2.0));
        assert!(matches!(deim_indices(&v), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn adaptive_with_identical_bases_matches_standard() {
        let v = orthonormal(4, 40, 6);
        let standard = deim_indices(&v).unwrap();
        for alpha in [0.0, 0.3, 0.5, 1.0] {
            assert_eq!(adaptive_deim_indices(&v, &v, alpha).unwrap(), standard);
        }
    }

    #[test]
    fn adaptive_alpha_one_follows_standard_after_the_first_point() {
        let v = orthonormal(5, 30, 5);
        let mut w = orthonormal(6, 30, 5);
        // keep psi_v >= psi_w so the first point agrees
        w *= 0.5 * v.column(0).amax() / w.column(0).amax();
        assert_eq!(
            adaptive_deim_indices(&v, &w, 1.0).unwrap(),
            deim_indices(&v).unwrap()
        );
    }

    #[test]
    fn adaptive_first_point_comes_from_larger_peak() {
        let v = DMatrix::from_column_slice(4, 1, &[0.1, 0.5, 0.0, 0.0]);
        let w = DMatrix::from_column_slice(4, 1, &[0.0, 0.0, 0.0, 0.9]);
        assert_eq!(adaptive_deim_indices(&v, &w, 0.9).unwrap(), vec![3]);
    }

    #[test]
    fn adaptive_never_repeats_indices() {
        let v = orthonormal(7, 25, 8);
        // w concentrated on a row that v picks first
        let mut w = DMatrix::zeros(25, 8);
        let first = deim_indices(&v).unwrap()[0];
        for j in 0..8 {
            w[(first, j)] = 10.0;
            w[((first + j + 1) % 25, j)] = 0.1;
        }
        for alpha in [0.0, 0.2, 0.5] {
            let idx = adaptive_deim_indices(&v, &w, alpha).unwrap();
            let mut s = idx.clone();
            s.sort_unstable();
            s.dedup();
            assert_eq!(s.len(), idx.len());
        }
    }

    #[test]
    fn adaptive_rejects_bad_alpha_and_shapes() {
        let v = orthonormal(8, 10, 2);
        assert!(adaptive_deim_indices(&v, &v, 1.5).is_err());
        assert!(adaptive_deim_indices(&v, &orthonormal(9, 9, 2), 0.5).is_err());
    }

    #[test]
    fn adaptive_with_short_dual_basis_falls_back_to_standard_residual() {
        let v = orthonormal(10, 30, 6);
        let w = v.columns(0, 2).into_owned();
        assert_eq!(
            adaptive_deim_indices(&v, &w, 0.0).unwrap(),
            deim_indices(&v).unwrap()
        );
    }

    #[test]
    fn projector_is_exact_on_span_when_basis_equals_modes() {
        let v = orthonormal(12, 20, 4);
        let basis = PodBasis::from_modes(v.clone()).unwrap();
        let deim = DeimApproximation::new(&basis, &v, &[3, 7, 11, 19]).unwrap();
        let f = &v * DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let got = deim.approximate(&deim.sample(&f).unwrap()).unwrap();
        assert!((got - basis.project(&f).unwrap()).amax() < 1e-10);
        assert_eq!(
            deim.approximate(&DVector::zeros(4)).unwrap(),
            DVector::zeros(4)
        );
    }

    #[test]
    fn single_point_projector_is_scaled_projection() {
        let v = orthonormal(13, 15, 1);
        let basis = PodBasis::from_matrix(&orthonormal(14, 15, 3), Truncation::Rank(3)).unwrap();
        let idx = deim_indices(&v).unwrap();
        let deim = DeimApproximation::new(&basis, &v, &idx).unwrap();
        let expect = basis.modes().transpose() * v.column(0) / v[(idx[0], 0)];
        assert!((deim.projector().column(0) - expect).amax() < 1e-14);
    }

    #[test]
    fn projector_matches_dense_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let v = DMatrix::from_fn(40, 5, |_, _| rng.random_range(-1.0..1.0));
        let basis = PodBasis::from_modes(orthonormal(16, 40, 7)).unwrap();
        let idx = deim_indices(&v).unwrap();
        let deim = DeimApproximation::new(&basis, &v, &idx).unwrap();
        // dense route: explicit selection matrix P
        let mut p = DMatrix::zeros(40, 5);
        for (j, &i) in idx.iter().enumerate() {
            p[(i, j)] = 1.0;
        }
        let dense = basis.modes().transpose() * &v * (p.transpose() * &v).try_inverse().unwrap();
        assert!((deim.projector() - &dense).amax() < 1e-10);

        let f = DVector::from_fn(40, |_, _| rng.random_range(-1.0..1.0));
        let expect = &dense * (p.transpose() * &f);
        assert!((deim.approximate(&deim.sample(&f).unwrap()).unwrap() - expect).amax() < 1e-10);
        assert!(deim.approximate(&DVector::zeros(3)).is_err());
    }

    #[test]
    fn construction_rejects_singular_or_invalid_points() {
        let v = orthonormal(17, 10, 2);
        let basis = PodBasis::from_modes(orthonormal(18, 10, 2)).unwrap();
        assert!(DeimApproximation::new(&basis, &v, &[1, 1]).is_err());
        assert!(DeimApproximation::new(&basis, &v, &[1, 10]).is_err());
        let mut z = DMatrix::zeros(10, 2);
        z[(0, 0)] = 1.0;
        z[(1, 0)] = 1.0;
        z[(0, 1)] = 1.0;
        z[(1, 1)] = 1.0;
        assert!(matches!(
            DeimApproximation::new(&basis, &z, &[0, 1]),
            Err(Error::SingularInterpolation { .. })
        ));
    }

    #[test]
    fn condition_number_examples() {
        let v = DMatrix::<f64>::identity(4, 2);
        assert_relative_eq!(
            selection_condition_number(&v, &[0, 1]),
            1.0,
            epsilon = 1e-14
        );
        let mut d = DMatrix::zeros(3, 2);
        d[(0, 0)] = 10.0;
        d[(2, 1)] = 0.1;
        assert_relative_eq!(
            selection_condition_number(&d, &[0, 2]),
            100.0,
            epsilon = 1e-10
        );
        assert!(selection_condition_number(&d, &[0, 1]).is_infinite());
    }

    proptest! {
        #[test]
        fn interpolation_and_span_exactness(seed in 0u64..300, rows in 8usize..60, m in 1usize..7) {
            let v = orthonormal(seed, rows, m.min(rows));
            let idx = deim_indices(&v).unwrap();
            let mut s = idx.clone();
            s.sort_unstable();
            s.dedup();
            prop_assert_eq!(s.len(), idx.len());
            prop_assert_eq!(deim_indices(&v).unwrap(), idx.clone());

            let basis = PodBasis::identity(rows);
            let deim = DeimApproximation::new(&basis, &v, &idx).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
            let f = DVector::from_fn(rows, |_, _| rng.random_range(-1.0..1.0));
            let rec = deim.reconstruct(&deim.sample(&f).unwrap()).unwrap();
            for &i in &idx {
                prop_assert!((rec[i] - f[i]).abs() <= 1e-10);
            }
            let g = &v * DVector::from_fn(v.ncols(), |_, _| rng.random_range(-1.0..1.0));
            let rec = deim.reconstruct(&deim.sample(&g).unwrap()).unwrap();
            prop_assert!((rec - g).amax() <= 1e-9);
        }

        #[test]
        fn adaptive_reduces_to_standard_for_equal_bases(seed in 0u64..200, alpha in 0.0f64..=1.0) {
            let v = orthonormal(seed, 30, 5);
            prop_assert_eq!(adaptive_deim_indices(&v, &v, alpha).unwrap(), deim_indices(&v).unwrap());
        }
    }
}
