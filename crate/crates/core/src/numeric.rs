//! Dense floating-point helpers shared by the geometric modules.

use nalgebra::{DMatrix, DVector};

/// Singular values of `m`; empty for matrices with a zero dimension.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    m.singular_values().iter().copied().collect()
}

/// Number of singular values above `tau · σ_max`. A zero matrix has rank 0.
pub fn numeric_rank(m: &DMatrix<f64>, tau: f64) -> usize {
    let sv = singular_values(m);
    let max = sv.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tau * max).count()
}

/// Orthonormal basis (as columns) of the column space of `m`, with the same
/// relative threshold as [`numeric_rank`].
pub fn column_space(m: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
    let rows = m.nrows();
    if rows == 0 || m.ncols() == 0 {
        return DMatrix::zeros(rows, 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return DMatrix::zeros(rows, 0);
    }
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > tau * max)
        .collect();
    DMatrix::from_fn(rows, keep.len(), |r, c| u[(r, keep[c])])
}

/// Modified Gram–Schmidt (two passes) of `candidates` against the columns of
/// `against`, which must be orthonormal. Returns at most `limit`
/// orthonormal vectors, skipping candidates whose remainder is shorter than
/// `drop_below`.
pub fn gram_schmidt(
    against: &DMatrix<f64>,
    candidates: impl IntoIterator<Item = DVector<f64>>,
    limit: usize,
    drop_below: f64,
) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::new();
    for mut v in candidates {
        if out.len() == limit {
            break;
        }
        for _ in 0..2 {
            for q in against.column_iter() {
                let d = q.dot(&v);
                v.axpy(-d, &q, 1.0);
            }
            for q in &out {
                let d = q.dot(&v);
                v.axpy(-d, q, 1.0);
            }
        }
        let norm = v.norm();
        if norm > drop_below {
            out.push(v / norm);
        }
    }
    out
}

/// Orthonormal basis of the orthogonal complement of the (orthonormal)
/// columns of `basis` in `ℝᵈ`, built from the standard basis.
pub fn orthogonal_complement(basis: &DMatrix<f64>) -> DMatrix<f64> {
    let dim = basis.nrows();
    let need = dim - basis.ncols();
    let candidates = (0..dim).map(|k| {
        let mut e = DVector::zeros(dim);
        e[k] = 1.0;
        e
    });
    let cols = gram_schmidt(basis, candidates, need, 1e-8);
    columns_to_matrix(dim, &cols)
}

pub fn columns_to_matrix(rows: usize, cols: &[DVector<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols.len(), |r, c| cols[c][r])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_thresholds_relative_to_largest_singular_value() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-12]);
        assert_eq!(numeric_rank(&m, 1e-9), 1);
        let scaled = &m * 1e6;
        assert_eq!(numeric_rank(&scaled, 1e-9), 1);
        assert_eq!(numeric_rank(&DMatrix::zeros(3, 2), 1e-9), 0);
        assert_eq!(numeric_rank(&DMatrix::zeros(3, 0), 1e-9), 0);
    }

    #[test]
    fn complement_is_orthonormal() {
        let a = column_space(&DMatrix::from_row_slice(3, 1, &[1.0, 1.0, 0.0]), 1e-9);
        let b = orthogonal_complement(&a);
        assert_eq!(b.ncols(), 2);
        let full = DMatrix::from_fn(3, 3, |r, c| if c == 0 { a[(r, 0)] } else { b[(r, c - 1)] });
        let gram = full.transpose() * &full;
        assert!((gram - DMatrix::identity(3, 3)).norm() < 1e-12);
    }
}
