//! Configurations of `N` agents in `ℝⁿ`.
//!
//! Storage is coordinate-major, `p = (x¹, …, xⁿ)` where `xᶜ ∈ ℝᴺ` stacks the
//! `c`-th coordinate of every agent. This is the layout on which the lifted
//! operator `D(A) = Diag(A, …, A)` acts. File formats are agent-major.

mod affine;
mod strata;

pub use affine::{
    affine_hull, component_sign, extend_simplex_with_point, find_nondegenerate_simplex,
    intersect_affine, AffineSubspace,
};
pub use strata::{codimension_bound_holds, stratum_dimension, StratumChart};

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::digraph::ScdReport;
use crate::numeric::numeric_rank;
use crate::{Error, Result};

/// Relative singular-value threshold: `σ` counts as zero iff
/// `σ ≤ RANK_TOLERANCE · σ_max`.
pub const RANK_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    dim: usize,
    agents: usize,
    coords: Vec<f64>,
}

impl Configuration {
    /// From coordinate-major data of length `dim · agents`.
    pub fn from_coordinate_major(dim: usize, agents: usize, coords: Vec<f64>) -> Result<Self> {
        if coords.len() != dim * agents {
            return Err(Error::SizeMismatch {
                expected: dim * agents,
                found: coords.len(),
            });
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coordinate".into()));
        }
        Ok(Configuration {
            dim,
            agents,
            coords,
        })
    }

    /// From one position per agent.
    pub fn from_agents(dim: usize, positions: &[Vec<f64>]) -> Result<Self> {
        let agents = positions.len();
        let mut coords = vec![0.0; dim * agents];
        for (i, x) in positions.iter().enumerate() {
            if x.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: x.len(),
                });
            }
            for (c, &v) in x.iter().enumerate() {
                coords[c * agents + i] = v;
            }
        }
        Configuration::from_coordinate_major(dim, agents, coords)
    }

    /// From the `N×n` matrix `X = (x¹, …, xⁿ)` whose rows are agents.
    pub fn from_matrix(x: &DMatrix<f64>) -> Result<Self> {
        // nalgebra is column-major, which is exactly the coordinate-major layout
        Configuration::from_coordinate_major(x.ncols(), x.nrows(), x.as_slice().to_vec())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_agents(&self) -> usize {
        self.agents
    }

    /// The coordinate-major vector `p ∈ ℝ^{nN}`.
    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn as_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.agents, self.dim, &self.coords)
    }

    /// `xᶜ`: the `c`-th coordinate of every agent.
    pub fn coordinate(&self, c: usize) -> &[f64] {
        &self.coords[c * self.agents..(c + 1) * self.agents]
    }

    pub fn agent(&self, i: usize) -> DVector<f64> {
        DVector::from_fn(self.dim, |c, _| self.coords[c * self.agents + i])
    }

    pub fn agent_positions(&self) -> Vec<DVector<f64>> {
        (0..self.agents).map(|i| self.agent(i)).collect()
    }

    /// Index of agent `i`'s `c`-th coordinate in the coordinate-major vector.
    pub fn index(&self, agent: usize, c: usize) -> usize {
        c * self.agents + agent
    }

    /// Agent-major flattening `(x_1, …, x_N)`.
    pub fn to_agent_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.coords.len());
        for i in 0..self.agents {
            for c in 0..self.dim {
                out.push(self.coords[c * self.agents + i]);
            }
        }
        out
    }

    pub fn from_agent_major(dim: usize, agents: usize, data: &[f64]) -> Result<Self> {
        if data.len() != dim * agents {
            return Err(Error::SizeMismatch {
                expected: dim * agents,
                found: data.len(),
            });
        }
        let positions: Vec<Vec<f64>> = data.chunks(dim.max(1)).map(<[f64]>::to_vec).collect();
        if dim == 0 {
            return Configuration::from_coordinate_major(0, agents, Vec::new());
        }
        Configuration::from_agents(dim, &positions)
    }

    pub fn sub_configuration(&self, agents: &[usize]) -> Configuration {
        let positions: Vec<Vec<f64>> = agents
            .iter()
            .map(|&i| self.agent(i).iter().copied().collect())
            .collect();
        Configuration::from_agents(self.dim, &positions).expect("finite sub-configuration")
    }

    /// Euclidean distance in `ℝ^{nN}`.
    pub fn distance(&self, other: &Configuration) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Largest coordinate magnitude.
    pub fn scale(&self) -> f64 {
        self.coords.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Rank `r_p`: dimension of the span of `{x_k − x_first}` over the given
    /// agents (all agents by default).
    pub fn rank(&self, subset: Option<&[usize]>) -> Result<usize> {
        self.rank_with_tolerance(subset, RANK_TOLERANCE)
    }

    pub fn rank_with_tolerance(&self, subset: Option<&[usize]>, tau: f64) -> Result<usize> {
        let all: Vec<usize>;
        let agents = match subset {
            Some([]) => return Err(Error::EmptySubset),
            Some(s) => {
                if let Some(&bad) = s.iter().find(|&&i| i >= self.agents) {
                    return Err(Error::IndexOutOfRange(format!("agent {bad}")));
                }
                s
            }
            None => {
                if self.agents == 0 {
                    return Err(Error::EmptySubset);
                }
                all = (0..self.agents).collect();
                &all
            }
        };
        let d = self.difference_matrix(agents);
        let magnitude = agents
            .iter()
            .flat_map(|&i| (0..self.dim).map(move |c| self.coords[c * self.agents + i].abs()))
            .fold(0.0, f64::max);
        let sv = crate::numeric::singular_values(&d);
        let max = sv.iter().copied().fold(0.0, f64::max);
        // roundoff in the positions themselves is never counted as spread
        if max <= tau * magnitude {
            return Ok(0);
        }
        Ok(numeric_rank(&d, tau))
    }

    /// `n × (m−1)` matrix with columns `x_k − x_first`.
    pub(crate) fn difference_matrix(&self, agents: &[usize]) -> DMatrix<f64> {
        let base = agents[0];
        DMatrix::from_fn(self.dim, agents.len() - 1, |c, k| {
            self.coords[c * self.agents + agents[k + 1]] - self.coords[c * self.agents + base]
        })
    }

    /// Rank of `X_e = (1, x¹, …, xⁿ) ∈ ℝ^{N×(n+1)}`; equals `rank() + 1`.
    pub fn extended_matrix_rank(&self) -> usize {
        let x_e = DMatrix::from_fn(self.agents, self.dim + 1, |i, c| {
            if c == 0 {
                1.0
            } else {
                self.coords[(c - 1) * self.agents + i]
            }
        });
        numeric_rank(&x_e, RANK_TOLERANCE)
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.agents > 0 && self.rank(None).map_or(false, |r| r == self.dim)
    }

    /// Membership in `Q`: every maximal component's sub-configuration has
    /// full rank `n`.
    pub fn in_q(&self, scd: &ScdReport) -> Result<QMembership> {
        if scd.num_vertices() != self.agents {
            return Err(Error::SizeMismatch {
                expected: scd.num_vertices(),
                found: self.agents,
            });
        }
        let mut ranks = Vec::with_capacity(scd.maximal_set.len());
        for &c in &scd.maximal_set {
            ranks.push((c, self.rank(Some(&scd.components[c]))?));
        }
        let in_q = ranks.iter().all(|&(_, r)| r == self.dim);
        Ok(QMembership { in_q, ranks })
    }

    /// JSON object `{"n": …, "N": …, "agents": [[…], …]}`.
    pub fn to_json(&self) -> String {
        let file = ConfigurationFile {
            n: self.dim,
            num_agents: self.agents,
            agents: (0..self.agents)
                .map(|i| self.agent(i).iter().copied().collect())
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ConfigurationFile = serde_json::from_str(text)?;
        if file.agents.len() != file.num_agents {
            return Err(Error::Parse(format!(
                "N = {} but {} agents listed",
                file.num_agents,
                file.agents.len()
            )));
        }
        Configuration::from_agents(file.n, &file.agents).map_err(|e| Error::Parse(e.to_string()))
    }

    /// One agent per row, comma-separated. No header.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.agents {
            let row: Vec<String> = self.agent(i).iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row =
                line.split(',')
                    .map(|t| {
                        let v: f64 = t.trim().parse().map_err(|_| {
                            Error::Parse(format!("line {}: bad number {t:?}", k + 1))
                        })?;
                        if v.is_finite() {
                            Ok(v)
                        } else {
                            Err(Error::Parse(format!("line {}: non-finite value", k + 1)))
                        }
                    })
                    .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        let dim = rows
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::Parse("no agents".into()))?;
        Configuration::from_agents(dim, &rows).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Pseudorandom configuration with coordinates in `[−1, 1]`.
    ///
    /// `Rank(k)` places `k + 1` affinely independent agents and the rest at
    /// random affine combinations of them, in a shuffled agent order; the rank
    /// is checked afterwards and the draw repeated on failure.
    pub fn sample(dim: usize, agents: usize, kind: SampleKind, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Configuration::sample_with(dim, agents, kind, &mut rng)
    }

    pub fn sample_with<R: Rng + ?Sized>(
        dim: usize,
        agents: usize,
        kind: SampleKind,
        rng: &mut R,
    ) -> Result<Self> {
        if agents == 0 {
            return Err(Error::InvalidStratum("no agents".into()));
        }
        let k = match kind {
            SampleKind::Uniform => {
                let coords = (0..dim * agents)
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect();
                return Configuration::from_coordinate_major(dim, agents, coords);
            }
            SampleKind::Rank(k) => k,
        };
        if k > dim || k + 1 > agents {
            return Err(Error::InvalidStratum(format!(
                "rank {k} impossible for {agents} agents in dimension {dim}"
            )));
        }
        for _ in 0..100 {
            let anchors: Vec<DVector<f64>> = (0..=k)
                .map(|_| DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0)))
                .collect();
            let mut positions: Vec<Vec<f64>> = anchors
                .iter()
                .map(|a| a.iter().copied().collect())
                .collect();
            for _ in (k + 1)..agents {
                let mut weights: Vec<f64> = (0..=k).map(|_| rng.random_range(-1.0..1.0)).collect();
                let partial: f64 = weights[..k].iter().sum();
                weights[k] = 1.0 - partial;
                let mut x = DVector::zeros(dim);
                for (w, a) in weights.iter().zip(&anchors) {
                    x.axpy(*w, a, 1.0);
                }
                positions.push(x.iter().copied().collect());
            }
            positions.shuffle(rng);
            let p = Configuration::from_agents(dim, &positions)?;
            if p.rank(None)? == k {
                return Ok(p);
            }
        }
        Err(Error::InvalidStratum(format!(
            "could not sample a rank-{k} configuration"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleKind {
    Uniform,
    Rank(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QMembership {
    pub in_q: bool,
    /// `(maximal component, rank of its sub-configuration)`.
    pub ranks: Vec<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigurationFile {
    n: usize,
    #[serde(rename = "N")]
    num_agents: usize,
    agents: Vec<Vec<f64>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digraph::Digraph;
    use proptest::prelude::*;
    use rand::Rng;

    fn cfg(points: &[&[f64]]) -> Configuration {
        let dim = points[0].len();
        Configuration::from_agents(dim, &points.iter().map(|p| p.to_vec()).collect::<Vec<_>>())
            .unwrap()
    }

    #[test]
    fn roundoff_around_a_common_point_is_rank_zero() {
        let p = cfg(&[&[0.3, -1.2], &[0.3 + 5e-17, -1.2], &[0.3, -1.2 - 2e-16]]);
        assert_eq!(p.rank(None).unwrap(), 0);
        let q = cfg(&[&[0.0, 0.0], &[1e-20, 0.0], &[0.0, 1e-20]]);
        assert_eq!(q.rank(None).unwrap(), 2);
    }

    #[test]
    fn rank_examples() {
        assert_eq!(
            cfg(&[&[0., 0.], &[1., 0.], &[2., 0.]]).rank(None).unwrap(),
            1
        );
        assert_eq!(
            cfg(&[&[0., 0.], &[1., 0.], &[0., 1.]]).rank(None).unwrap(),
            2
        );
        assert_eq!(
            cfg(&[&[3., 1.], &[3., 1.], &[3., 1.]]).rank(None).unwrap(),
            0
        );
        assert_eq!(cfg(&[&[3., 1.]]).rank(None).unwrap(), 0);
        let p = cfg(&[&[0., 0.], &[1., 0.], &[0., 1.]]);
        assert_eq!(p.rank(Some(&[])), Err(Error::EmptySubset));
        assert_eq!(p.rank(Some(&[0, 1])).unwrap(), 1);
    }

    #[test]
    fn extended_rank_examples() {
        assert_eq!(
            cfg(&[&[0., 0.], &[1., 0.], &[0., 1.]]).extended_matrix_rank(),
            3
        );
        assert_eq!(cfg(&[&[2., 2.], &[2., 2.]]).extended_matrix_rank(), 1);
        // SVD oracle on the explicit matrix
        let p = cfg(&[&[0., 0.], &[1., 1.], &[2., 2.], &[-1., -1.]]);
        let x_e =
            DMatrix::from_row_slice(4, 3, &[1., 0., 0., 1., 1., 1., 1., 2., 2., 1., -1., -1.]);
        let oracle = x_e.singular_values().iter().filter(|&&s| s > 1e-9).count();
        assert_eq!(oracle, 2);
        assert_eq!(p.extended_matrix_rank(), oracle);
    }

    #[test]
    fn layout_round_trip() {
        let p = cfg(&[&[1., 2.], &[3., 4.], &[5., 6.]]);
        assert_eq!(p.as_slice(), &[1., 3., 5., 2., 4., 6.]);
        assert_eq!(p.coordinate(1), &[2., 4., 6.]);
        assert_eq!(p.to_agent_major(), vec![1., 2., 3., 4., 5., 6.]);
        let q = Configuration::from_agent_major(2, 3, &p.to_agent_major()).unwrap();
        assert_eq!(p, q);
        assert_eq!(Configuration::from_matrix(&p.as_matrix()).unwrap(), p);
    }

    #[test]
    fn in_q_examples() {
        let scd = Digraph::complete(3).coarse_scd().unwrap();
        let p = cfg(&[&[0., 0.], &[1., 0.], &[0., 1.]]);
        assert!(p.in_q(&scd).unwrap().in_q);
        let collinear = cfg(&[&[0., 0.], &[1., 0.], &[2., 0.]]);
        assert!(!collinear.in_q(&scd).unwrap().in_q);

        // {1} → {2,3,4}: the source agent sits on a line through nothing in
        // particular; only the maximal component matters.
        let mut g = Digraph::cycle(3).relabel(&[1, 2, 3]);
        let mut big = Digraph::new(4);
        for (i, j) in g.edges() {
            big.add_edge(i, j).unwrap();
        }
        big.add_edge(0, 1).unwrap();
        g = big;
        let scd = g.coarse_scd().unwrap();
        let p = cfg(&[&[5., 5.], &[0., 0.], &[1., 0.], &[0., 1.]]);
        let m = p.in_q(&scd).unwrap();
        assert!(m.in_q);
        assert_eq!(m.ranks, vec![(1, 2)]);
        assert!(matches!(
            cfg(&[&[0., 0.], &[1., 0.]]).in_q(&scd),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn sampling_examples() {
        let p = Configuration::sample(2, 5, SampleKind::Rank(0), 7).unwrap();
        let first = p.agent(0);
        assert!((0..5).all(|i| p.agent(i) == first));
        let p = Configuration::sample(3, 6, SampleKind::Rank(3), 11).unwrap();
        assert_eq!(p.rank(None).unwrap(), 3);
        assert_eq!(
            Configuration::sample(2, 4, SampleKind::Rank(1), 3).unwrap(),
            Configuration::sample(2, 4, SampleKind::Rank(1), 3).unwrap()
        );
        assert!(matches!(
            Configuration::sample(2, 4, SampleKind::Rank(3), 0),
            Err(Error::InvalidStratum(_))
        ));
        assert!(matches!(
            Configuration::sample(3, 2, SampleKind::Rank(2), 0),
            Err(Error::InvalidStratum(_))
        ));
    }

    #[test]
    fn file_formats() {
        let p = cfg(&[&[0.5, -1.0], &[1e-300, 3.25]]);
        assert_eq!(Configuration::from_json(&p.to_json()).unwrap(), p);
        assert_eq!(Configuration::from_csv(&p.to_csv()).unwrap(), p);
        assert!(Configuration::from_csv("1,NaN\n").is_err());
        assert!(Configuration::from_csv("1,inf\n").is_err());
        assert!(Configuration::from_csv("1,2\n3\n").is_err());
        assert!(Configuration::from_json(r#"{"n":2,"N":1,"agents":[[1.0]]}"#).is_err());
        assert!(Configuration::from_json(r#"{"n":1,"N":2,"agents":[[1.0]]}"#).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn extended_rank_is_rank_plus_one(seed in any::<u64>(), dim in 1usize..=3, extra in 0usize..=5, k_pick in 0usize..4) {
            let agents = dim + 1 + extra;
            let k = k_pick.min(dim);
            let p = Configuration::sample(dim, agents, SampleKind::Rank(k), seed).unwrap();
            prop_assert_eq!(p.rank(None).unwrap(), k);
            prop_assert_eq!(p.extended_matrix_rank(), k + 1);
        }

        #[test]
        fn q_is_open(seed in any::<u64>()) {
            let g = Digraph::complete(5);
            let scd = g.coarse_scd().unwrap();
            let p = Configuration::sample(2, 5, SampleKind::Uniform, seed).unwrap();
            prop_assume!(p.in_q(&scd).unwrap().in_q);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            let s = p.scale();
            let coords: Vec<f64> = p.as_slice().iter().map(|x| x + 1e-6 * s * rng.random_range(-1.0..1.0)).collect();
            let q = Configuration::from_coordinate_major(2, 5, coords).unwrap();
            prop_assert!(q.in_q(&scd).unwrap().in_q);
        }
    }
}
