//! Small dense linear-algebra helpers shared by the basis and solver code.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Thin SVD returning left singular vectors and singular values sorted in
/// non-increasing order. Column signs are normalized with [`fix_signs`].
pub fn left_singular_vectors(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::Degenerate("empty matrix".into()));
    }
    let svd = a.clone().svd(true, false);
    let u = svd
        .u
        .ok_or_else(|| Error::Degenerate("SVD did not produce left singular vectors".into()))?;
    let s = svd.singular_values;

    let mut order: Vec<usize> = (0..s.len()).collect();
    // stable sort keeps the solver's order for exact ties
    order.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).unwrap_or(std::cmp::Ordering::Equal));

    let mut sorted_u = DMatrix::zeros(u.nrows(), order.len());
    let mut sorted_s = DVector::zeros(order.len());
    for (dst, &src) in order.iter().enumerate() {
        sorted_u.set_column(dst, &u.column(src));
        sorted_s[dst] = s[src];
    }
    fix_signs(&mut sorted_u);
    Ok((sorted_u, sorted_s))
}

/// Flips each column so that its entry of largest magnitude is positive
/// (smallest row index on ties).
pub fn fix_signs(m: &mut DMatrix<f64>) {
    for mut col in m.column_iter_mut() {
        let mut best = 0;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > col[best].abs() {
                best = i;
            }
        }
        if !col.is_empty() && col[best] < 0.0 {
            col.neg_mut();
        }
    }
}

/// Position of the largest absolute entry, smallest index on ties.
/// Rows flagged in `masked` are skipped.
pub(crate) fn argmax_abs<I>(values: I, masked: &[usize]) -> Option<(usize, f64)>
where
    I: IntoIterator<Item = f64>,
{
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        if masked.contains(&i) {
            continue;
        }
        let a = v.abs();
        match best {
            Some((_, b)) if a <= b => {}
            _ => best = Some((i, a)),
        }
    }
    best
}

/// 2-norm condition number. Singular (or empty) matrices report +inf.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return f64::INFINITY;
    }
    let s = a.clone().singular_values();
    let max = s.max();
    let min = s.min();
    if min <= 0.0 || !min.is_finite() || max / min > 1.0 / f64::EPSILON * 1e3 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solves `a x = b` with partial-pivoting LU.
pub(crate) fn lu_solve(
    context: &'static str,
    a: DMatrix<f64>,
    b: &DVector<f64>,
) -> Result<DVector<f64>> {
    let x = a.lu().solve(b).ok_or(Error::SingularSystem(context))?;
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::SingularSystem(context))
    }
}

/// Solves `aᵀ x = b`.
pub(crate) fn lu_solve_transpose(
    context: &'static str,
    a: DMatrix<f64>,
    b: &DVector<f64>,
) -> Result<DVector<f64>> {
    lu_solve(context, a.transpose(), b)
}

/// Rows of `m` at `rows`, in the given order.
pub(crate) fn select_rows(m: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)])
}

pub(crate) fn select_entries(v: &DVector<f64>, rows: &[usize]) -> DVector<f64> {
    DVector::from_iterator(rows.len(), rows.iter().map(|&r| v[r]))
}
