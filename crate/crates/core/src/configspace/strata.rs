//! Rank strata `Pᵏ` and their local charts.

use nalgebra::{DMatrix, DVector};

use super::{Configuration, RANK_TOLERANCE};
use crate::numeric::{columns_to_matrix, gram_schmidt, numeric_rank};
use crate::{Error, Result};

/// `d_k = −k² + k(N + n − 1) + n`, the dimension of the rank-`k` stratum.
pub fn stratum_dimension(k: usize, agents: usize, dim: usize) -> Result<usize> {
    if k > dim || dim > agents {
        return Err(Error::IndexOutOfRange(format!(
            "need 0 <= k <= n <= N, got k = {k}, n = {dim}, N = {agents}"
        )));
    }
    let (k, big_n, n) = (k as i64, agents as i64, dim as i64);
    Ok((-k * k + k * (big_n + n - 1) + n) as usize)
}

/// Evaluates `nN − d_k ≥ N − n` for every `k < n`.
pub fn codimension_bound_holds(agents: usize, dim: usize) -> Result<bool> {
    if agents <= dim {
        return Err(Error::RequiresNGreaterThann { agents, dim });
    }
    for k in 0..dim {
        let codim = (dim * agents) as i64 - stratum_dimension(k, agents, dim)? as i64;
        if codim < (agents - dim) as i64 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Local chart around a rank-`k` configuration `p`.
///
/// `index_choice[0]` is the base agent and `index_choice[1..]` are `k` agents
/// whose differences from it span the affine hull. With
/// `A = (x_{c₁} − x_{c₀}, …)` and `B` an orthonormal completion of `A`, the
/// chart uses `L = (A, B)ᵀ` and sends `p′` to
///
/// ```text
/// v_i = x′_i − x_i                                  for chosen agents
/// v_i = L_{p′}(x′_i − x′_{c₀}) − L_p(x_i − x_{c₀})  for the others
/// ```
///
/// where `L_{p′}` is rebuilt from the chosen agents of `p′`, with `B`
/// re-orthogonalized against the new differences. A nearby `p′` has rank `k`
/// exactly when the last `n − k` entries of every non-chosen `v_i` vanish.
#[derive(Debug, Clone)]
pub struct StratumChart {
    center: Configuration,
    rank: usize,
    index_choice: Vec<usize>,
    a_part: DMatrix<f64>,
    b_part: DMatrix<f64>,
    l_map: DMatrix<f64>,
}

impl StratumChart {
    pub fn new(p: &Configuration, k: usize) -> Result<Self> {
        let found = p.rank(None)?;
        if found != k {
            return Err(Error::RankMismatch { expected: k, found });
        }
        let index_choice = greedy_rank_choice(p, k);
        let a_part = p.difference_matrix(&index_choice);
        let dim = p.dim();
        let a_basis = crate::numeric::column_space(&a_part, RANK_TOLERANCE);
        let candidates = (0..dim).map(|c| {
            let mut e = DVector::zeros(dim);
            e[c] = 1.0;
            e
        });
        let b_cols = gram_schmidt(&a_basis, candidates, dim - k, 1e-8);
        let b_part = columns_to_matrix(dim, &b_cols);
        let l_map = stack_transposed(&a_part, &b_part);
        Ok(StratumChart {
            center: p.clone(),
            rank: k,
            index_choice,
            a_part,
            b_part,
            l_map,
        })
    }

    pub fn center(&self) -> &Configuration {
        &self.center
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn index_choice(&self) -> &[usize] {
        &self.index_choice
    }

    pub fn a_part(&self) -> &DMatrix<f64> {
        &self.a_part
    }

    pub fn b_part(&self) -> &DMatrix<f64> {
        &self.b_part
    }

    pub fn l_map(&self) -> &DMatrix<f64> {
        &self.l_map
    }

    fn check(&self, p: &Configuration) -> Result<()> {
        if p.dim() != self.center.dim() || p.num_agents() != self.center.num_agents() {
            return Err(Error::SizeMismatch {
                expected: self.center.as_slice().len(),
                found: p.as_slice().len(),
            });
        }
        Ok(())
    }

    /// `L_{p′}` for a configuration near the center.
    fn l_at(&self, chosen: &[DVector<f64>]) -> DMatrix<f64> {
        let dim = self.center.dim();
        let a = DMatrix::from_fn(dim, self.rank, |r, c| chosen[c + 1][r] - chosen[0][r]);
        let a_basis = crate::numeric::column_space(&a, RANK_TOLERANCE);
        let seeds = self.b_part.column_iter().map(|c| c.into_owned());
        let b_cols = gram_schmidt(&a_basis, seeds, dim - self.rank, 0.0);
        stack_transposed(&a, &columns_to_matrix(dim, &b_cols))
    }

    fn is_chosen(&self, agent: usize) -> bool {
        self.index_choice.contains(&agent)
    }

    /// Chart coordinates, agent-major: `(v_1, …, v_N)`.
    pub fn forward(&self, p: &Configuration) -> Result<Vec<f64>> {
        self.check(p)?;
        let base = self.index_choice[0];
        let chosen: Vec<DVector<f64>> = self.index_choice.iter().map(|&i| p.agent(i)).collect();
        let l_new = self.l_at(&chosen);
        let x_base = self.center.agent(base);
        let xp_base = p.agent(base);
        let mut out = Vec::with_capacity(p.as_slice().len());
        for i in 0..p.num_agents() {
            let v = if self.is_chosen(i) {
                p.agent(i) - self.center.agent(i)
            } else {
                &l_new * (p.agent(i) - &xp_base) - &self.l_map * (self.center.agent(i) - &x_base)
            };
            out.extend(v.iter());
        }
        Ok(out)
    }

    /// Inverse of [`forward`](Self::forward).
    pub fn inverse(&self, v: &[f64]) -> Result<Configuration> {
        let dim = self.center.dim();
        let agents = self.center.num_agents();
        if v.len() != dim * agents {
            return Err(Error::SizeMismatch {
                expected: dim * agents,
                found: v.len(),
            });
        }
        let block = |i: usize| DVector::from_column_slice(&v[i * dim..(i + 1) * dim]);
        let chosen: Vec<DVector<f64>> = self
            .index_choice
            .iter()
            .map(|&i| block(i) + self.center.agent(i))
            .collect();
        let l_new = self.l_at(&chosen);
        let lu = l_new.lu();
        let base = self.index_choice[0];
        let x_base = self.center.agent(base);
        let mut positions = vec![Vec::new(); agents];
        for (slot, &i) in self.index_choice.iter().enumerate() {
            positions[i] = chosen[slot].iter().copied().collect();
        }
        for (i, pos) in positions.iter_mut().enumerate() {
            if self.is_chosen(i) {
                continue;
            }
            let rhs = block(i) + &self.l_map * (self.center.agent(i) - &x_base);
            let d = lu
                .solve(&rhs)
                .ok_or_else(|| Error::InvalidArgument("chart matrix is singular".into()))?;
            *pos = (d + &chosen[0]).iter().copied().collect();
        }
        Configuration::from_agents(dim, &positions)
    }

    /// Positions in the chart vector that vanish exactly on the stratum: the
    /// last `n − k` entries of every non-chosen agent's block.
    pub fn forced_zero_indices(&self) -> Vec<usize> {
        let dim = self.center.dim();
        (0..self.center.num_agents())
            .filter(|&i| !self.is_chosen(i))
            .flat_map(|i| (self.rank..dim).map(move |c| i * dim + c))
            .collect()
    }

    /// Dimension of the slice the stratum maps into.
    pub fn slice_dimension(&self) -> usize {
        self.center.as_slice().len() - self.forced_zero_indices().len()
    }
}

fn stack_transposed(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let dim = a.nrows();
    let k = a.ncols();
    DMatrix::from_fn(
        dim,
        dim,
        |r, c| if r < k { a[(c, r)] } else { b[(c, r - k)] },
    )
}

/// Greedy scan in agent order keeping agents that raise the affine rank,
/// stopping at `k + 1` agents.
pub(super) fn greedy_rank_choice(p: &Configuration, k: usize) -> Vec<usize> {
    let mut chosen = vec![0];
    for i in 1..p.num_agents() {
        if chosen.len() == k + 1 {
            break;
        }
        chosen.push(i);
        if numeric_rank(&p.difference_matrix(&chosen), RANK_TOLERANCE) < chosen.len() - 1 {
            chosen.pop();
        }
    }
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::configspace::SampleKind;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn stratum_dimension_examples() {
        for (agents, dim) in [(4, 2), (5, 3), (7, 1)] {
            assert_eq!(
                stratum_dimension(dim - 1, agents, dim).unwrap(),
                dim * agents - agents + dim
            );
            assert_eq!(stratum_dimension(0, agents, dim).unwrap(), dim);
            assert_eq!(stratum_dimension(dim, agents, dim).unwrap(), dim * agents);
        }
        assert_eq!(stratum_dimension(1, 4, 2).unwrap(), 6);
        assert!(matches!(
            stratum_dimension(3, 4, 2),
            Err(Error::IndexOutOfRange(_))
        ));
        assert!(matches!(
            stratum_dimension(0, 2, 3),
            Err(Error::IndexOutOfRange(_))
        ));
    }

    #[test]
    fn codimension_examples() {
        assert!(codimension_bound_holds(4, 2).unwrap());
        assert!(codimension_bound_holds(5, 2).unwrap());
        for n in 1..6 {
            assert!(codimension_bound_holds(n + 1, n).unwrap());
            let d = stratum_dimension(n - 1, n + 1, n).unwrap();
            assert_eq!(n * (n + 1) - d, 1);
        }
        assert_eq!(
            codimension_bound_holds(2, 2),
            Err(Error::RequiresNGreaterThann { agents: 2, dim: 2 })
        );
    }

    #[test]
    fn chart_structure() {
        let p = Configuration::sample(3, 6, SampleKind::Rank(1), 4).unwrap();
        let chart = StratumChart::new(&p, 1).unwrap();
        assert_eq!(chart.index_choice().len(), 2);
        let bt_a = chart.b_part().transpose() * chart.a_part();
        assert!(bt_a.norm() < 1e-12);
        let bt_b = chart.b_part().transpose() * chart.b_part();
        assert!((bt_b - DMatrix::identity(2, 2)).norm() < 1e-12);
        assert!(chart.l_map().clone().try_inverse().is_some());
        assert!(chart.forward(&p).unwrap().iter().all(|v| v.abs() < 1e-12));
        assert!(matches!(
            StratumChart::new(&p, 2),
            Err(Error::RankMismatch {
                expected: 2,
                found: 1
            })
        ));
    }

    #[test]
    fn chart_round_trip_and_slice() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for (agents, dim) in [(4, 2), (5, 2), (5, 3)] {
            for k in 0..dim {
                let p =
                    Configuration::sample(dim, agents, SampleKind::Rank(k), rng.random()).unwrap();
                let chart = StratumChart::new(&p, k).unwrap();
                assert_eq!(
                    chart.forced_zero_indices().len(),
                    (dim - k) * (agents - k - 1)
                );
                assert_eq!(
                    chart.slice_dimension(),
                    stratum_dimension(k, agents, dim).unwrap()
                );
                // generic neighbor
                let coords: Vec<f64> = p
                    .as_slice()
                    .iter()
                    .map(|x| x + 1e-3 * rng.random_range(-1.0..1.0))
                    .collect();
                let q = Configuration::from_coordinate_major(dim, agents, coords).unwrap();
                let back = chart.inverse(&chart.forward(&q).unwrap()).unwrap();
                assert!(back.distance(&q) < 1e-10);
            }
        }
    }
}
