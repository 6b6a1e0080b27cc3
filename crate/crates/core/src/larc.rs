//! The Lie algebra of control vector fields evaluated at a configuration.
//!
//! An `N × N` zero row-sum matrix `A` acts on a coordinate-major configuration
//! `p ∈ ℝ^{nN}` through the block-diagonal lift `D(A) = diag(A, …, A)`. The
//! field of edge `i → j` is `D(A_ij)p`, which holds `x_j − x_i` in agent `i`'s
//! slots and zeros elsewhere.
//!
//! `ℒ_p = {D(A)p : A ∈ 𝔸_Ḡ}` where `Ḡ` is the transitive closure, so
//! `dim ℒ_p` is the sum over agents of the rank of
//! `{x_j − x_i : i → j ∈ Ḡ}`.

use std::fmt;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::configspace::{extend_simplex_with_point, find_nondegenerate_simplex};
use crate::digraph::{Digraph, VerdictKind};
use crate::liealg::{graph_lie_closure, ZeroRowSumMatrix};
use crate::numeric::numeric_rank;
use crate::{Configuration, Error, Result, RANK_TOLERANCE};

/// `D(A)` for an `N × N` matrix `A` and `n` coordinate blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDiagonal {
    block: DMatrix<f64>,
    copies: usize,
}

pub fn lift_block_diagonal(a: &ZeroRowSumMatrix, dim: usize) -> BlockDiagonal {
    let size = a.size();
    BlockDiagonal {
        block: DMatrix::from_row_slice(size, size, &a.to_f64()),
        copies: dim,
    }
}

impl BlockDiagonal {
    pub fn block(&self) -> &DMatrix<f64> {
        &self.block
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    /// `D(A)p` for coordinate-major `p`.
    pub fn apply(&self, p: &Configuration) -> Result<Vec<f64>> {
        let size = self.block.nrows();
        if p.num_agents() != size || p.dim() != self.copies {
            return Err(Error::SizeMismatch {
                expected: size * self.copies,
                found: p.as_slice().len(),
            });
        }
        // coordinate-major p is exactly the column-major N × n matrix X
        Ok((&self.block * p.as_matrix()).as_slice().to_vec())
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let size = self.block.nrows();
        let total = size * self.copies;
        let mut m = DMatrix::zeros(total, total);
        for c in 0..self.copies {
            m.view_mut((c * size, c * size), (size, size))
                .copy_from(&self.block);
        }
        m
    }
}

/// `D(A_ij)p`, coordinate-major.
pub fn lifted_field(p: &Configuration, i: usize, j: usize) -> Vec<f64> {
    let (dim, agents) = (p.dim(), p.num_agents());
    let mut v = vec![0.0; dim * agents];
    for c in 0..dim {
        let x = p.coordinate(c);
        v[c * agents + i] = x[j] - x[i];
    }
    v
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LarcReport {
    #[serde(rename = "dim")]
    pub dim_l_p: usize,
    pub required: usize,
    pub passes: bool,
    #[serde(rename = "per_agent")]
    pub per_agent_ranks: Vec<usize>,
    #[serde(rename = "closure_edges")]
    pub closure_edge_count: usize,
}

impl LarcReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl fmt::Display for LarcReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passes { "PASS" } else { "FAIL" };
        write!(f, "dim {} / {}: {}", self.dim_l_p, self.required, verdict)
    }
}

fn check_sizes(p: &Configuration, g: &Digraph) -> Result<()> {
    if p.num_agents() != g.num_vertices() {
        return Err(Error::SizeMismatch {
            expected: g.num_vertices(),
            found: p.num_agents(),
        });
    }
    Ok(())
}

/// Evaluates `ℒ_p` through the per-agent rank decomposition.
pub fn lie_algebra_at(p: &Configuration, g: &Digraph) -> Result<LarcReport> {
    lie_algebra_at_with_tolerance(p, g, RANK_TOLERANCE)
}

/// [`lie_algebra_at`] with an explicit relative rank threshold.
pub fn lie_algebra_at_with_tolerance(
    p: &Configuration,
    g: &Digraph,
    tau: f64,
) -> Result<LarcReport> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "rank tolerance {tau} outside (0, 1)"
        )));
    }
    check_sizes(p, g)?;
    let closure = g.transitive_closure();
    let dim = p.dim();
    let per_agent_ranks: Vec<usize> = (0..p.num_agents())
        .map(|i| {
            let targets: Vec<usize> = closure.out_neighbors(i).collect();
            let xi = p.agent(i);
            let m = DMatrix::from_fn(dim, targets.len(), |r, c| {
                p.coordinate(r)[targets[c]] - xi[r]
            });
            numeric_rank(&m, tau)
        })
        .collect();
    let dim_l_p = per_agent_ranks.iter().sum();
    let required = dim * p.num_agents();
    Ok(LarcReport {
        dim_l_p,
        required,
        passes: dim_l_p == required,
        per_agent_ranks,
        closure_edge_count: closure.num_edges(),
    })
}

/// As [`lie_algebra_at`], and additionally cross-checks the result against
/// two slower evaluations: the numeric rank of all closure-edge fields
/// stacked as columns, and the rank of `{D(A)p}` over the exact Lie closure
/// of the graph's generators. Any disagreement is an error.
pub fn lie_algebra_at_checked(p: &Configuration, g: &Digraph) -> Result<LarcReport> {
    lie_algebra_at_checked_with_tolerance(p, g, RANK_TOLERANCE)
}

/// [`lie_algebra_at_checked`] with an explicit relative rank threshold.
pub fn lie_algebra_at_checked_with_tolerance(
    p: &Configuration,
    g: &Digraph,
    tau: f64,
) -> Result<LarcReport> {
    let report = lie_algebra_at_with_tolerance(p, g, tau)?;
    let closure = g.transitive_closure();
    let fields: Vec<Vec<f64>> = closure
        .edges()
        .map(|(i, j)| lifted_field(p, i, j))
        .collect();
    let stacked = stack_columns(p.as_slice().len(), &fields);
    let slow = numeric_rank(&stacked, tau);
    if slow != report.dim_l_p {
        return Err(Error::RankPathMismatch {
            fast: report.dim_l_p,
            slow,
        });
    }
    let basis = graph_lie_closure(g)?;
    let evaluated: Vec<Vec<f64>> = basis
        .elements()
        .iter()
        .map(|a| lift_block_diagonal(a, p.dim()).apply(p))
        .collect::<Result<_>>()?;
    let bracketed = numeric_rank(&stack_columns(p.as_slice().len(), &evaluated), tau);
    if bracketed != report.dim_l_p {
        return Err(Error::RankPathMismatch {
            fast: report.dim_l_p,
            slow: bracketed,
        });
    }
    Ok(report)
}

pub fn larc_passes(p: &Configuration, g: &Digraph) -> Result<bool> {
    Ok(lie_algebra_at(p, g)?.passes)
}

fn stack_columns(rows: usize, cols: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols.len(), |r, c| cols[c][r])
}

/// Which block of the witness construction a vector belongs to. Agent and
/// component indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WitnessLabel {
    /// `D(A_ij)p` with `i`, `j` in the simplex chosen inside a maximal
    /// component.
    Simplex {
        component: usize,
        i: usize,
        j: usize,
    },
    /// `D(A_ij)p` attaching agent `i` to `n` simplex agents of a reachable
    /// maximal component.
    Attachment {
        component: usize,
        i: usize,
        j: usize,
    },
}

impl WitnessLabel {
    /// The agent whose coordinates carry the vector.
    pub fn source(&self) -> usize {
        match *self {
            WitnessLabel::Simplex { i, .. } | WitnessLabel::Attachment { i, .. } => i,
        }
    }

    pub fn edge(&self) -> (usize, usize) {
        match *self {
            WitnessLabel::Simplex { i, j, .. } | WitnessLabel::Attachment { i, j, .. } => (i, j),
        }
    }
}

impl fmt::Display for WitnessLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            WitnessLabel::Simplex { component, i, j } => {
                write!(f, "L_p'{} {}->{}", component + 1, i + 1, j + 1)
            }
            WitnessLabel::Attachment { i, j, .. } => {
                write!(f, "L_x{} {}->{}", i + 1, i + 1, j + 1)
            }
        }
    }
}

/// `nN` independent vectors of `ℒ_p`: for each maximal component a
/// non-degenerate simplex with all `n(n+1)` of its internal edge fields, and
/// for every other agent `n` edge fields into the simplex of the
/// smallest-index maximal component it reaches.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessBasis {
    pub vectors: Vec<Vec<f64>>,
    pub labels: Vec<WitnessLabel>,
}

impl WitnessBasis {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Vectors as the columns of an `nN × len` matrix.
    pub fn as_matrix(&self) -> DMatrix<f64> {
        let rows = self.vectors.first().map_or(0, Vec::len);
        stack_columns(rows, &self.vectors)
    }

    pub fn rank(&self) -> usize {
        numeric_rank(&self.as_matrix(), RANK_TOLERANCE)
    }

    /// One vector per row, coordinate-major, label in the last column.
    pub fn to_csv(&self) -> String {
        let width = self.vectors.first().map_or(0, Vec::len);
        let mut out = String::new();
        let header: Vec<String> = (1..=width).map(|k| format!("v{k}")).collect();
        out.push_str(&header.join(","));
        out.push_str(",label\n");
        for (v, label) in self.vectors.iter().zip(&self.labels) {
            for x in v {
                out.push_str(&format!("{x:.16e},"));
            }
            out.push_str(&label.to_string());
            out.push('\n');
        }
        out
    }
}

pub fn construct_witness_basis(p: &Configuration, g: &Digraph) -> Result<WitnessBasis> {
    check_sizes(p, g)?;
    let scd = g.coarse_scd()?;
    let verdict = scd.verdict(p.dim());
    if verdict.kind != VerdictKind::GenericallyControllable {
        return Err(Error::StructuralFailure {
            offending: verdict.offending_components,
        });
    }
    if !p.in_q(&scd)?.in_q {
        return Err(Error::NotInQ);
    }

    let mut basis = WitnessBasis {
        vectors: Vec::new(),
        labels: Vec::new(),
    };
    let mut in_simplex = vec![false; p.num_agents()];
    let mut simplices: Vec<Vec<usize>> = vec![Vec::new(); scd.num_components()];
    for &c in &scd.maximal_set {
        let members = &scd.components[c];
        let local = find_nondegenerate_simplex(&p.sub_configuration(members))?;
        let simplex: Vec<usize> = local.iter().map(|&k| members[k]).collect();
        for &i in &simplex {
            in_simplex[i] = true;
            for &j in &simplex {
                if i != j {
                    basis.vectors.push(lifted_field(p, i, j));
                    basis
                        .labels
                        .push(WitnessLabel::Simplex { component: c, i, j });
                }
            }
        }
        simplices[c] = simplex;
    }
    for agent in 0..p.num_agents() {
        if in_simplex[agent] {
            continue;
        }
        let target = scd.reachable_maximal(scd.component_of(agent))[0];
        let simplex = &simplices[target];
        let points: Vec<_> = simplex.iter().map(|&k| p.agent(k)).collect();
        let kept = extend_simplex_with_point(&points, &p.agent(agent))?;
        for k in kept {
            let j = simplex[k];
            basis.vectors.push(lifted_field(p, agent, j));
            basis.labels.push(WitnessLabel::Attachment {
                component: target,
                i: agent,
                j,
            });
        }
    }
    Ok(basis)
}
