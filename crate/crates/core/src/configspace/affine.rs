//! Affine hulls, their intersections and simplex selection.

use nalgebra::{DMatrix, DVector};

use super::strata::greedy_rank_choice;
use super::{Configuration, RANK_TOLERANCE};
use crate::numeric::{column_space, numeric_rank, orthogonal_complement};
use crate::{Error, Result};

/// `base + span(basis)` with orthonormal basis columns.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSubspace {
    base: DVector<f64>,
    basis: DMatrix<f64>,
}

impl AffineSubspace {
    pub fn new(base: DVector<f64>, directions: &DMatrix<f64>) -> Result<Self> {
        if directions.nrows() != base.len() {
            return Err(Error::DimensionMismatch {
                expected: base.len(),
                found: directions.nrows(),
            });
        }
        Ok(AffineSubspace {
            basis: column_space(directions, RANK_TOLERANCE),
            base,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.base.len()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn base_point(&self) -> &DVector<f64> {
        &self.base
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Orthogonal projector onto the direction space.
    pub fn projector(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }

    pub fn distance_to(&self, x: &DVector<f64>) -> f64 {
        let d = x - &self.base;
        let along = &self.basis * (self.basis.transpose() * &d);
        (d - along).norm()
    }

    /// Zero iff the subspaces coincide: the spectral-norm gap between the
    /// projectors plus the distance from one base point to the other subspace.
    pub fn subspace_distance(&self, other: &AffineSubspace) -> f64 {
        if self.dim() != other.dim() || self.ambient_dim() != other.ambient_dim() {
            return f64::INFINITY;
        }
        let gap = (self.projector() - other.projector()).norm();
        gap + other.distance_to(&self.base)
    }
}

/// Smallest affine subspace containing the points: base point is the first
/// point, directions span the differences.
pub fn affine_hull(points: &[DVector<f64>]) -> Result<AffineSubspace> {
    let first = points.first().ok_or(Error::EmptyInput)?;
    let dim = first.len();
    if let Some(p) = points.iter().find(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: p.len(),
        });
    }
    let diffs = DMatrix::from_fn(dim, points.len() - 1, |r, c| points[c + 1][r] - first[r]);
    AffineSubspace::new(first.clone(), &diffs)
}

/// Common intersection, or `None` when the subspaces do not meet.
///
/// Each subspace contributes the constraints `Cᵀ(x − b) = 0` with `C` an
/// orthonormal basis of its normal space; the stacked system is solved in the
/// least-squares sense and the candidate is accepted when it lies within
/// `1e−8 · (1 + scale)` of every subspace.
pub fn intersect_affine(subspaces: &[AffineSubspace]) -> Result<Option<AffineSubspace>> {
    let first = subspaces.first().ok_or(Error::EmptyInput)?;
    let dim = first.ambient_dim();
    if let Some(s) = subspaces.iter().find(|s| s.ambient_dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: s.ambient_dim(),
        });
    }
    let mut rows: Vec<DVector<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    for s in subspaces {
        let normals = orthogonal_complement(&s.basis);
        for c in normals.column_iter() {
            rhs.push(c.dot(&s.base));
            rows.push(c.into_owned());
        }
    }
    if rows.is_empty() {
        return Ok(Some(AffineSubspace {
            base: first.base.clone(),
            basis: DMatrix::identity(dim, dim),
        }));
    }
    let constraints = DMatrix::from_fn(rows.len(), dim, |r, c| rows[r][c]);
    let rhs = DVector::from_vec(rhs);
    let svd = constraints.clone().svd(true, true);
    let max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let candidate = svd
        .solve(&rhs, RANK_TOLERANCE * max)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;

    let scale = subspaces
        .iter()
        .flat_map(|s| s.base.iter())
        .fold(0.0f64, |m, x| m.max(x.abs()));
    let tol = 1e-8 * (1.0 + scale);
    if subspaces.iter().any(|s| s.distance_to(&candidate) > tol) {
        return Ok(None);
    }
    // directions: null space of the constraint matrix
    let row_space = column_space(&constraints.transpose(), RANK_TOLERANCE);
    let directions = orthogonal_complement(&row_space);
    Ok(Some(AffineSubspace {
        base: candidate,
        basis: directions,
    }))
}

/// Greedy choice of `n + 1` agents forming a non-degenerate simplex: agents are
/// scanned in index order and kept when they raise the affine rank.
pub fn find_nondegenerate_simplex(p: &Configuration) -> Result<Vec<usize>> {
    let rank = p.rank(None)?;
    if rank < p.dim() {
        return Err(Error::Degenerate { rank, dim: p.dim() });
    }
    Ok(greedy_rank_choice(p, p.dim()))
}

/// Leave-one-out scan over a non-degenerate `(n+1)`-point simplex: returns the
/// `n` kept vertex indices (into `simplex`) that together with `x` form a
/// non-degenerate configuration, dropping the smallest index that works.
pub fn extend_simplex_with_point(simplex: &[DVector<f64>], x: &DVector<f64>) -> Result<Vec<usize>> {
    let dim = x.len();
    if simplex.len() != dim + 1 || simplex.iter().any(|v| v.len() != dim) {
        return Err(Error::SimplexDegenerate);
    }
    if affine_rank(simplex.iter()) != dim {
        return Err(Error::SimplexDegenerate);
    }
    for drop in 0..=dim {
        let kept: Vec<usize> = (0..=dim).filter(|&k| k != drop).collect();
        let pts = kept.iter().map(|&k| &simplex[k]).chain(std::iter::once(x));
        if affine_rank(pts) == dim {
            return Ok(kept);
        }
    }
    // unreachable for a non-degenerate simplex: every x is off some facet
    Err(Error::SimplexDegenerate)
}

fn affine_rank<'a>(mut points: impl Iterator<Item = &'a DVector<f64>>) -> usize {
    let Some(first) = points.next() else {
        return 0;
    };
    let diffs: Vec<DVector<f64>> = points.map(|p| p - first).collect();
    if diffs.is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(first.len(), diffs.len(), |r, c| diffs[c][r]);
    numeric_rank(&m, RANK_TOLERANCE)
}

/// Sign of `det(x_2 − x_1, …, x_{n+1} − x_1)`: which of the two connected
/// components of the non-degenerate `(n+1)`-agent configurations `p` is in.
pub fn component_sign(p: &Configuration) -> Result<i8> {
    if p.num_agents() != p.dim() + 1 {
        return Err(Error::SizeMismatch {
            expected: p.dim() + 1,
            found: p.num_agents(),
        });
    }
    let rank = p.rank(None)?;
    if rank < p.dim() {
        return Err(Error::Degenerate { rank, dim: p.dim() });
    }
    let agents: Vec<usize> = (0..p.num_agents()).collect();
    let det = p.difference_matrix(&agents).determinant();
    Ok(if det > 0.0 { 1 } else { -1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::configspace::SampleKind;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    fn cfg(points: &[&[f64]]) -> Configuration {
        let dim = points[0].len();
        Configuration::from_agents(dim, &points.iter().map(|p| p.to_vec()).collect::<Vec<_>>())
            .unwrap()
    }

    #[test]
    fn greedy_simplex_examples() {
        let p = cfg(&[&[0., 0.], &[1., 0.], &[2., 0.], &[0., 1.]]);
        assert_eq!(find_nondegenerate_simplex(&p).unwrap(), vec![0, 1, 3]);
        let q = cfg(&[&[0., 0.], &[1., 0.], &[0., 1.]]);
        assert_eq!(find_nondegenerate_simplex(&q).unwrap(), vec![0, 1, 2]);
        let line = cfg(&[&[0., 0.], &[1., 1.], &[2., 2.]]);
        assert_eq!(
            find_nondegenerate_simplex(&line),
            Err(Error::Degenerate { rank: 1, dim: 2 })
        );
    }

    #[test]
    fn leave_one_out_examples() {
        let simplex = vec![v(&[0., 0.]), v(&[1., 0.]), v(&[0., 1.])];
        // interior point: dropping the first vertex already works
        assert_eq!(
            extend_simplex_with_point(&simplex, &v(&[0.25, 0.25])).unwrap(),
            vec![1, 2]
        );
        // a vertex itself: the kept set must omit it
        for k in 0..3 {
            let kept = extend_simplex_with_point(&simplex, &simplex[k]).unwrap();
            assert!(!kept.contains(&k));
        }
        // a point on the facet opposite vertex 0 (hull of vertices 1 and 2)
        let on_facet = v(&[0.5, 0.5]);
        let kept = extend_simplex_with_point(&simplex, &on_facet).unwrap();
        assert!(kept.contains(&0));
        let flat = vec![v(&[0., 0.]), v(&[1., 0.]), v(&[2., 0.])];
        assert_eq!(
            extend_simplex_with_point(&flat, &v(&[0., 1.])),
            Err(Error::SimplexDegenerate)
        );
    }

    #[test]
    fn hull_examples() {
        assert_eq!(affine_hull(&[v(&[1., 2.])]).unwrap().dim(), 0);
        assert_eq!(affine_hull(&[v(&[1., 2.]), v(&[1., 2.])]).unwrap().dim(), 0);
        let facet = affine_hull(&[v(&[1., 0., 0.]), v(&[0., 1., 0.]), v(&[0., 0., 1.])]).unwrap();
        assert_eq!(facet.dim(), 2);
        assert!(facet.distance_to(&v(&[1. / 3., 1. / 3., 1. / 3.])) < 1e-14);
        assert_eq!(affine_hull(&[]), Err(Error::EmptyInput));
    }

    #[test]
    fn intersection_examples() {
        let simplex = vec![v(&[0., 0.]), v(&[2., 0.]), v(&[0., 3.])];
        let facets: Vec<AffineSubspace> = (0..3)
            .map(|i| {
                let pts: Vec<DVector<f64>> = (0..3)
                    .filter(|&j| j != i)
                    .map(|j| simplex[j].clone())
                    .collect();
                affine_hull(&pts).unwrap()
            })
            .collect();
        for i in 0..3 {
            let others: Vec<AffineSubspace> = (0..3)
                .filter(|&j| j != i)
                .map(|j| facets[j].clone())
                .collect();
            let meet = intersect_affine(&others).unwrap().unwrap();
            assert_eq!(meet.dim(), 0);
            assert!((meet.base_point() - &simplex[i]).norm() < 1e-12);
        }
        assert!(intersect_affine(&facets).unwrap().is_none());
        let same = intersect_affine(&[facets[0].clone(), facets[0].clone()])
            .unwrap()
            .unwrap();
        assert!(same.subspace_distance(&facets[0]) < 1e-12);
        let other_dim = affine_hull(&[v(&[0., 0., 0.])]).unwrap();
        assert!(matches!(
            intersect_affine(&[facets[0].clone(), other_dim]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sign_examples() {
        assert_eq!(
            component_sign(&cfg(&[&[0., 0.], &[1., 0.], &[0., 1.]])).unwrap(),
            1
        );
        assert_eq!(
            component_sign(&cfg(&[&[0., 0.], &[0., 1.], &[1., 0.]])).unwrap(),
            -1
        );
        let p = Configuration::sample(3, 4, SampleKind::Uniform, 5).unwrap();
        let mirrored: Vec<Vec<f64>> = (0..4)
            .map(|i| {
                let mut x: Vec<f64> = p.agent(i).iter().copied().collect();
                x[0] = -x[0];
                x
            })
            .collect();
        let m = Configuration::from_agents(3, &mirrored).unwrap();
        assert_eq!(component_sign(&p).unwrap(), -component_sign(&m).unwrap());
        assert!(matches!(
            component_sign(&cfg(&[&[0., 0.], &[1., 1.], &[2., 2.]])),
            Err(Error::Degenerate { .. })
        ));
    }

    #[test]
    fn sign_constant_along_nondegenerate_path() {
        // rotate a triangle: det stays positive the whole way
        let base = [v(&[0., 0.]), v(&[1., 0.]), v(&[0., 1.])];
        for step in 0..=100 {
            let t = step as f64 / 100.0 * std::f64::consts::PI;
            let rot = DMatrix::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()]);
            let pts: Vec<Vec<f64>> = base
                .iter()
                .map(|x| (&rot * x).iter().copied().collect())
                .collect();
            let p = Configuration::from_agents(2, &pts).unwrap();
            assert_eq!(component_sign(&p).unwrap(), 1);
        }
    }
}
