//! Snapshot collection and proper orthogonal decomposition.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, Error, Result};
use crate::linalg;

/// Where a snapshot column came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SnapshotSource {
    ForwardState,
    AdjointState,
    NonlinearTerm,
    DualWeightedResidual,
}

impl fmt::Display for SnapshotSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SnapshotSource::ForwardState => "forward-state",
            SnapshotSource::AdjointState => "adjoint-state",
            SnapshotSource::NonlinearTerm => "nonlinear-term",
            SnapshotSource::DualWeightedResidual => "dual-weighted-residual",
        })
    }
}

/// Snapshots stored column-wise with a source tag per column.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    data: DMatrix<f64>,
    tags: Vec<SnapshotSource>,
}

impl SnapshotMatrix {
    pub fn new(data: DMatrix<f64>, tags: Vec<SnapshotSource>) -> Result<Self> {
        if data.ncols() == 0 || data.nrows() == 0 {
            return Err(Error::InvalidArgument(
                "snapshot matrix must be non-empty".into(),
            ));
        }
        check_len("snapshot tags", data.ncols(), tags.len())?;
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument("snapshots must be finite".into()));
        }
        Ok(Self { data, tags })
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn tags(&self) -> &[SnapshotSource] {
        &self.tags
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.data.ncols()
    }

    /// Number of columns carrying `tag`.
    pub fn count(&self, tag: SnapshotSource) -> usize {
        self.tags.iter().filter(|t| **t == tag).count()
    }
}

/// Concatenates groups of snapshot vectors horizontally, in order.
pub fn collect_snapshots<'a, I>(groups: I) -> Result<SnapshotMatrix>
where
    I: IntoIterator<Item = (SnapshotSource, &'a [DVector<f64>])>,
{
    let mut columns: Vec<DVector<f64>> = Vec::new();
    let mut tags = Vec::new();
    for (tag, states) in groups {
        for s in states {
            if let Some(first) = columns.first() {
                check_len("snapshot", first.len(), s.len())?;
            }
            columns.push(s.clone());
            tags.push(tag);
        }
    }
    if columns.is_empty() {
        return Err(Error::InvalidArgument("no snapshots supplied".into()));
    }
    SnapshotMatrix::new(DMatrix::from_columns(&columns), tags)
}

/// How many modes to keep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    /// Smallest `k` whose singular-value share `I(k)` reaches the threshold.
    Energy(f64),
    Rank(usize),
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation::Energy(0.99)
    }
}

/// Orthonormal POD modes plus the full singular spectrum of the snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct PodBasis {
    modes: DMatrix<f64>,
    singular_values: DVector<f64>,
    gamma: Option<f64>,
}

/// `I(m) = Σ_{i≤m} σ_i / Σ_i σ_i`, using singular values (not their squares).
pub fn energy_fraction(singular_values: &[f64], m: usize) -> f64 {
    let total: f64 = singular_values.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    singular_values.iter().take(m).sum::<f64>() / total
}

/// Smallest `m ≥ 1` with `I(m) ≥ gamma`.
pub fn energy_rank(singular_values: &[f64], gamma: f64) -> usize {
    let total: f64 = singular_values.iter().sum();
    let mut acc = 0.0;
    for (i, s) in singular_values.iter().enumerate() {
        acc += s;
        if acc / total >= gamma {
            return i + 1;
        }
    }
    singular_values.len()
}

impl PodBasis {
    /// Thin SVD of the (uncentered) snapshot matrix, truncated as requested.
    pub fn from_snapshots(snapshots: &SnapshotMatrix, truncation: Truncation) -> Result<Self> {
        Self::from_matrix(snapshots.data(), truncation)
    }

    pub fn from_matrix(data: &DMatrix<f64>, truncation: Truncation) -> Result<Self> {
        if data.amax() == 0.0 {
            return Err(Error::Degenerate(
                "snapshot matrix is identically zero".into(),
            ));
        }
        let (u, s) = linalg::left_singular_vectors(data)?;
        let sv: Vec<f64> = s.iter().copied().collect();
        let (k, gamma) = match truncation {
            Truncation::Energy(gamma) => {
                if !(0.0..=1.0).contains(&gamma) {
                    return Err(Error::InvalidArgument(format!(
                        "energy threshold {gamma} outside [0, 1]"
                    )));
                }
                (energy_rank(&sv, gamma), Some(gamma))
            }
            Truncation::Rank(k) => {
                if k == 0 || k > u.ncols() {
                    return Err(Error::InvalidArgument(format!(
                        "requested {k} modes but only {} are available",
                        u.ncols()
                    )));
                }
                (k, None)
            }
        };
        Ok(Self {
            modes: u.columns(0, k).into_owned(),
            singular_values: s,
            gamma,
        })
    }

    /// Wraps an externally supplied orthonormal basis.
    pub fn from_modes(modes: DMatrix<f64>) -> Result<Self> {
        if modes.ncols() == 0 || modes.ncols() > modes.nrows() {
            return Err(Error::InvalidArgument(format!(
                "basis of shape {}x{} cannot be orthonormal",
                modes.nrows(),
                modes.ncols()
            )));
        }
        let gram = modes.transpose() * &modes;
        let dev = (gram - DMatrix::identity(modes.ncols(), modes.ncols())).amax();
        if dev > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "basis columns are not orthonormal (deviation {dev:e})"
            )));
        }
        let k = modes.ncols();
        Ok(Self {
            modes,
            singular_values: DVector::from_element(k, 1.0),
            gamma: None,
        })
    }

    /// `I_n` as a basis; with a matching exact DEIM this reproduces the full model.
    pub fn identity(n: usize) -> Self {
        Self {
            modes: DMatrix::identity(n, n),
            singular_values: DVector::from_element(n, 1.0),
            gamma: None,
        }
    }

    /// The first `k` modes of this basis.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.modes.ncols() {
            return Err(Error::InvalidArgument(format!(
                "cannot keep {k} of {} modes",
                self.modes.ncols()
            )));
        }
        Ok(Self {
            modes: self.modes.columns(0, k).into_owned(),
            singular_values: self.singular_values.clone(),
            gamma: None,
        })
    }

    pub fn modes(&self) -> &DMatrix<f64> {
        &self.modes
    }

    pub fn singular_values(&self) -> &DVector<f64> {
        &self.singular_values
    }

    pub fn k(&self) -> usize {
        self.modes.ncols()
    }

    pub fn dim(&self) -> usize {
        self.modes.nrows()
    }

    pub fn gamma(&self) -> Option<f64> {
        self.gamma
    }

    /// `Uᵀ x`.
    pub fn project(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_len("project", self.dim(), x.len())?;
        Ok(self.modes.tr_mul(x))
    }

    /// `U x̃`.
    pub fn lift(&self, reduced: &DVector<f64>) -> Result<DVector<f64>> {
        check_len("lift", self.k(), reduced.len())?;
        Ok(&self.modes * reduced)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(seed: u64, r: usize, c: usize) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn collects_in_order_with_tags() {
        let a = [
            DVector::from_vec(vec![1.0, 2.0]),
            DVector::from_vec(vec![3.0, 4.0]),
            DVector::from_vec(vec![5.0, 6.0]),
        ];
        let b = [DVector::from_vec(vec![7.0, 8.0])];
        let s = collect_snapshots([
            (SnapshotSource::ForwardState, &a[..]),
            (SnapshotSource::AdjointState, &b[..]),
        ])
        .unwrap();
        assert_eq!(s.data().shape(), (2, 4));
        assert_eq!(s.data()[(1, 3)], 8.0);
        assert_eq!(s.count(SnapshotSource::ForwardState), 3);
        assert_eq!(s.tags()[3], SnapshotSource::AdjointState);

        let single = collect_snapshots([(SnapshotSource::ForwardState, &a[..])]).unwrap();
        assert_eq!(single.data().shape(), (2, 3));
    }

    #[test]
    fn rejects_empty_and_ragged_input() {
        let none: [DVector<f64>; 0] = [];
        assert!(collect_snapshots([(SnapshotSource::ForwardState, &none[..])]).is_err());
        let ragged = [DVector::zeros(2), DVector::zeros(3)];
        assert!(matches!(
            collect_snapshots([(SnapshotSource::ForwardState, &ragged[..])]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rank_one_snapshots_give_one_mode() {
        let s = DVector::from_vec(vec![1.0, -2.0, 2.0]);
        let cols = [s.clone(), &s * 2.0, &s * 3.0];
        let snaps = collect_snapshots([(SnapshotSource::ForwardState, &cols[..])]).unwrap();
        for gamma in [0.1, 0.5, 0.99, 1.0] {
            let b = PodBasis::from_snapshots(&snaps, Truncation::Energy(gamma)).unwrap();
            assert_eq!(b.k(), 1, "gamma {gamma}");
            let expect = &s / s.norm();
            assert!(
                (b.modes().column(0) - &expect).amax() < 1e-12
                    || (b.modes().column(0) + &expect).amax() < 1e-12
            );
        }
    }

    #[test]
    fn energy_criterion_uses_plain_singular_values() {
        assert_relative_eq!(energy_fraction(&[3.0, 1.0], 1), 0.75);
        assert_eq!(energy_rank(&[3.0, 1.0], 0.9), 2);
        assert_eq!(energy_rank(&[3.0, 1.0], 0.75), 1);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0]));
        let b = PodBasis::from_matrix(&d, Truncation::Energy(0.9)).unwrap();
        assert_eq!(b.k(), 2);
        assert_eq!(b.gamma(), Some(0.9));
    }

    #[test]
    fn fixed_rank_residual_matches_full_svd_tail() {
        let s = random_matrix(11, 20, 8);
        let b = PodBasis::from_matrix(&s, Truncation::Rank(4)).unwrap();
        let u = b.modes();
        let resid = (&s - u * u.transpose() * &s).norm();
        // independent route: singular values from nalgebra directly
        let mut sv: Vec<f64> = s.clone().singular_values().iter().copied().collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let tail: f64 = sv[4..].iter().map(|v| v * v).sum::<f64>().sqrt();
        assert_relative_eq!(resid, tail, epsilon = 1e-10);
    }

    #[test]
    fn degenerate_and_invalid_requests() {
        assert!(matches!(
            PodBasis::from_matrix(&DMatrix::zeros(4, 3), Truncation::Rank(1)),
            Err(Error::Degenerate(_))
        ));
        let s = random_matrix(2, 6, 3);
        assert!(PodBasis::from_matrix(&s, Truncation::Rank(4)).is_err());
        assert!(PodBasis::from_matrix(&s, Truncation::Energy(1.5)).is_err());
    }

    #[test]
    fn sign_convention_is_deterministic() {
        let s = random_matrix(5, 10, 6);
        let a = PodBasis::from_matrix(&s, Truncation::Rank(4)).unwrap();
        let b = PodBasis::from_matrix(&(-&s), Truncation::Rank(4)).unwrap();
        assert!((a.modes() - b.modes()).amax() < 1e-12);
        for col in a.modes().column_iter() {
            let (i, _) = col.iter().enumerate().fold((0, 0.0), |acc, (i, v)| {
                if v.abs() > acc.1 {
                    (i, v.abs())
                } else {
                    acc
                }
            });
            assert!(col[i] > 0.0);
        }
    }

    #[test]
    fn project_and_lift() {
        let b = PodBasis::from_matrix(&random_matrix(8, 12, 5), Truncation::Rank(3)).unwrap();
        let r = DVector::from_vec(vec![0.3, -1.2, 2.0]);
        assert!((b.project(&b.lift(&r).unwrap()).unwrap() - &r).amax() < 1e-12);
        let x = DVector::from_fn(12, |i, _| (i as f64).sin());
        let p1 = b.lift(&b.project(&x).unwrap()).unwrap();
        let p2 = b.lift(&b.project(&p1).unwrap()).unwrap();
        assert!((p1 - p2).amax() < 1e-12);
        assert!(b.project(&DVector::zeros(3)).is_err());
        assert!(b.lift(&DVector::zeros(12)).is_err());
    }

    #[test]
    fn vectors_in_span_are_reproduced() {
        let b = PodBasis::from_matrix(&random_matrix(9, 30, 7), Truncation::Rank(5)).unwrap();
        let x = b.modes() * DVector::from_vec(vec![1.0, -0.5, 0.25, 2.0, -3.0]);
        let back = b.lift(&b.project(&x).unwrap()).unwrap();
        assert!((back - x).amax() < 1e-10);
    }

    proptest! {
        #[test]
        fn bases_are_orthonormal_and_energy_rank_is_minimal(
            seed in 0u64..500, rows in 3usize..25, cols in 1usize..12, gamma in 0.05f64..1.0
        ) {
            let s = random_matrix(seed, rows, cols);
            let b = PodBasis::from_matrix(&s, Truncation::Energy(gamma)).unwrap();
            let gram = b.modes().transpose() * b.modes();
            prop_assert!((gram - DMatrix::identity(b.k(), b.k())).amax() <= 1e-10);
            let sv: Vec<f64> = b.singular_values().iter().copied().collect();
            prop_assert!(sv.windows(2).all(|w| w[0] >= w[1]));
            let k = b.k();
            prop_assert!(energy_fraction(&sv, k) >= gamma - 1e-15);
            prop_assert!(k == 1 || energy_fraction(&sv, k - 1) < gamma);
        }

        #[test]
        fn projection_error_does_not_grow_with_k(seed in 0u64..200, col in 0usize..6) {
            let s = random_matrix(seed, 15, 6);
            let x = s.column(col).into_owned();
            let full = PodBasis::from_matrix(&s, Truncation::Rank(6)).unwrap();
            let mut last = f64::INFINITY;
            for k in 1..=6 {
                let u = full.truncated(k).unwrap();
                let err = (&x - u.lift(&u.project(&x).unwrap()).unwrap()).norm();
                prop_assert!(err <= last + 1e-12);
                last = err;
            }
        }
    }
}
