//! Exact arithmetic on zero row-sum integer matrices.
//!
//! Every zero row-sum matrix `A` decomposes uniquely as `Σ_{i≠j} a_ij A_ij`
//! where `a_ij` are its off-diagonal entries and
//! `A_ij = −e_i e_iᵀ + e_i e_jᵀ` is the edge generator. Independence tests
//! therefore work on the `N(N−1)` off-diagonal coordinates with fraction-free
//! integer elimination; no floating tolerance is involved anywhere here.

use std::collections::BTreeMap;
use std::fmt;

use crate::digraph::Digraph;
use crate::{Error, Result};

/// An `N×N` integer matrix whose rows sum to zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ZeroRowSumMatrix {
    size: usize,
    entries: Vec<i64>,
}

impl ZeroRowSumMatrix {
    pub fn zero(size: usize) -> Self {
        ZeroRowSumMatrix {
            size,
            entries: vec![0; size * size],
        }
    }

    /// Row-major constructor; fails unless the matrix is square with zero row
    /// sums.
    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let size = rows.len();
        let mut entries = Vec::with_capacity(size * size);
        for row in rows {
            if row.len() != size {
                return Err(Error::SizeMismatch {
                    expected: size,
                    found: row.len(),
                });
            }
            if row.iter().sum::<i64>() != 0 {
                return Err(Error::InvalidArgument(format!(
                    "row {row:?} does not sum to zero"
                )));
            }
            entries.extend_from_slice(row);
        }
        Ok(ZeroRowSumMatrix { size, entries })
    }

    /// Builds the matrix with the given off-diagonal entries; diagonal entries
    /// are set to make every row sum vanish.
    pub fn from_off_diagonal(size: usize, coords: &[i64]) -> Result<Self> {
        if coords.len() != size * size.saturating_sub(1) {
            return Err(Error::SizeMismatch {
                expected: size * size.saturating_sub(1),
                found: coords.len(),
            });
        }
        let mut m = ZeroRowSumMatrix::zero(size);
        let mut k = 0;
        for i in 0..size {
            let mut diag = 0i64;
            for j in 0..size {
                if i != j {
                    m.entries[i * size + j] = coords[k];
                    diag = diag.checked_sub(coords[k]).ok_or(Error::Overflow)?;
                    k += 1;
                }
            }
            m.entries[i * size + i] = diag;
        }
        Ok(m)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, row: usize, col: usize) -> i64 {
        self.entries[row * self.size + col]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[i64]> {
        self.entries.chunks(self.size.max(1))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&x| x == 0)
    }

    /// Off-diagonal entries in row-major order: the coordinates of this matrix
    /// in the generator basis `{A_ij}`.
    pub fn off_diagonal(&self) -> Vec<i64> {
        let n = self.size;
        let mut out = Vec::with_capacity(n * n.saturating_sub(1));
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    out.push(self.entries[i * n + j]);
                }
            }
        }
        out
    }

    pub fn row_sums_vanish(&self) -> bool {
        self.rows().all(|r| r.iter().sum::<i64>() == 0)
    }

    fn check_size(&self, other: &Self) -> Result<()> {
        if self.size != other.size {
            return Err(Error::SizeMismatch {
                expected: self.size,
                found: other.size,
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_size(other)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.checked_add(*b).ok_or(Error::Overflow))
            .collect::<Result<_>>()?;
        Ok(ZeroRowSumMatrix {
            size: self.size,
            entries,
        })
    }

    pub fn checked_scale(&self, factor: i64) -> Result<Self> {
        let entries = self
            .entries
            .iter()
            .map(|a| a.checked_mul(factor).ok_or(Error::Overflow))
            .collect::<Result<_>>()?;
        Ok(ZeroRowSumMatrix {
            size: self.size,
            entries,
        })
    }

    fn checked_mul(&self, other: &Self) -> Result<Vec<i64>> {
        let n = self.size;
        let mut out = vec![0i64; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.entries[i * n + k];
                if a == 0 {
                    continue;
                }
                for j in 0..n {
                    let b = other.entries[k * n + j];
                    if b != 0 {
                        let p = a.checked_mul(b).ok_or(Error::Overflow)?;
                        out[i * n + j] = out[i * n + j].checked_add(p).ok_or(Error::Overflow)?;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Dense copy as `f64`, row-major.
    pub fn to_f64(&self) -> Vec<f64> {
        self.entries.iter().map(|&x| x as f64).collect()
    }
}

impl fmt::Display for ZeroRowSumMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.rows() {
            let line: Vec<String> = row.iter().map(i64::to_string).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// Matrix commutator `ab − ba`.
pub fn bracket(a: &ZeroRowSumMatrix, b: &ZeroRowSumMatrix) -> Result<ZeroRowSumMatrix> {
    a.check_size(b)?;
    let ab = a.checked_mul(b)?;
    let ba = b.checked_mul(a)?;
    let entries = ab
        .iter()
        .zip(&ba)
        .map(|(x, y)| x.checked_sub(*y).ok_or(Error::Overflow))
        .collect::<Result<_>>()?;
    Ok(ZeroRowSumMatrix {
        size: a.size,
        entries,
    })
}

/// The generator `A_ij = −e_i e_iᵀ + e_i e_jᵀ` on `size` vertices (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeGenerator {
    i: usize,
    j: usize,
    size: usize,
}

impl EdgeGenerator {
    pub fn new(i: usize, j: usize, size: usize) -> Result<Self> {
        if i == j || i >= size || j >= size {
            return Err(Error::InvalidIndices { i, j, size });
        }
        Ok(EdgeGenerator { i, j, size })
    }

    pub fn i(&self) -> usize {
        self.i
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn to_matrix(&self) -> ZeroRowSumMatrix {
        let mut m = ZeroRowSumMatrix::zero(self.size);
        m.entries[self.i * self.size + self.i] = -1;
        m.entries[self.i * self.size + self.j] = 1;
        m
    }
}

/// Dense `A_ij` for 0-based indices.
pub fn edge_generator(i: usize, j: usize, size: usize) -> Result<ZeroRowSumMatrix> {
    Ok(EdgeGenerator::new(i, j, size)?.to_matrix())
}

/// Generators `A_G` of a digraph, in edge order.
pub fn graph_generators(g: &Digraph) -> Vec<EdgeGenerator> {
    g.edges()
        .map(|(i, j)| EdgeGenerator {
            i,
            j,
            size: g.num_vertices(),
        })
        .collect()
}

/// Integer combination `Σ c_ij A_ij`. Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GeneratorCombination {
    terms: BTreeMap<(usize, usize), i64>,
}

impl GeneratorCombination {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_terms<I: IntoIterator<Item = ((usize, usize), i64)>>(terms: I) -> Result<Self> {
        let mut c = GeneratorCombination::new();
        for ((i, j), coef) in terms {
            if i == j {
                return Err(Error::InvalidIndices { i, j, size: 0 });
            }
            c.add_term(i, j, coef)?;
        }
        Ok(c)
    }

    fn add_term(&mut self, i: usize, j: usize, coef: i64) -> Result<()> {
        let entry = self.terms.entry((i, j)).or_insert(0);
        *entry = entry.checked_add(coef).ok_or(Error::Overflow)?;
        if *entry == 0 {
            self.terms.remove(&(i, j));
        }
        Ok(())
    }

    pub fn terms(&self) -> &BTreeMap<(usize, usize), i64> {
        &self.terms
    }

    pub fn coefficient(&self, i: usize, j: usize) -> i64 {
        self.terms.get(&(i, j)).copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn to_matrix(&self, size: usize) -> Result<ZeroRowSumMatrix> {
        let mut m = ZeroRowSumMatrix::zero(size);
        for (&(i, j), &c) in &self.terms {
            if i >= size || j >= size {
                return Err(Error::InvalidIndices { i, j, size });
            }
            m.entries[i * size + j] = m.entries[i * size + j]
                .checked_add(c)
                .ok_or(Error::Overflow)?;
            m.entries[i * size + i] = m.entries[i * size + i]
                .checked_sub(c)
                .ok_or(Error::Overflow)?;
        }
        Ok(m)
    }

    /// Unique expansion of a zero row-sum matrix in the generator basis.
    pub fn from_matrix(m: &ZeroRowSumMatrix) -> Self {
        let n = m.size;
        let mut terms = BTreeMap::new();
        for i in 0..n {
            for j in 0..n {
                let c = m.get(i, j);
                if i != j && c != 0 {
                    terms.insert((i, j), c);
                }
            }
        }
        GeneratorCombination { terms }
    }
}

/// Symbolic bracket of two generators.
///
/// With `a = A_ij`, `b = A_i'j'`:
/// - `i = i'`: `A_ij − A_ij'`
/// - `j = i'`: `A_ij' − A_ij`
/// - `j' = i`: `A_i'i − A_i'j` (the previous case with the arguments swapped)
/// - otherwise the generators commute.
///
/// The 2-cycle `j = i'`, `j' = i` is reported as [`Error::DegenerateBracket`];
/// callers fall back to [`bracket`] for it.
pub fn structural_bracket(a: &EdgeGenerator, b: &EdgeGenerator) -> Result<GeneratorCombination> {
    if a.size != b.size {
        return Err(Error::SizeMismatch {
            expected: a.size,
            found: b.size,
        });
    }
    let (i, j, ip, jp) = (a.i, a.j, b.i, b.j);
    if j == ip && jp == i {
        return Err(Error::DegenerateBracket { i, j });
    }
    let mut out = GeneratorCombination::new();
    if i == ip {
        out.add_term(i, j, 1)?;
        out.add_term(i, jp, -1)?;
    } else if j == ip {
        out.add_term(i, jp, 1)?;
        out.add_term(i, j, -1)?;
    } else if jp == i {
        out.add_term(ip, i, 1)?;
        out.add_term(ip, j, -1)?;
    }
    Ok(out)
}

/// Bilinear extension of [`structural_bracket`] to combinations, using the
/// dense bracket for 2-cycle terms.
pub fn bracket_combinations(
    x: &GeneratorCombination,
    y: &GeneratorCombination,
    size: usize,
) -> Result<GeneratorCombination> {
    let mut out = GeneratorCombination::new();
    for (&(i, j), &cx) in &x.terms {
        let a = EdgeGenerator::new(i, j, size)?;
        for (&(k, l), &cy) in &y.terms {
            let b = EdgeGenerator::new(k, l, size)?;
            let term = match structural_bracket(&a, &b) {
                Ok(t) => t,
                Err(Error::DegenerateBracket { .. }) => {
                    GeneratorCombination::from_matrix(&bracket(&a.to_matrix(), &b.to_matrix())?)
                }
                Err(e) => return Err(e),
            };
            let scale = cx.checked_mul(cy).ok_or(Error::Overflow)?;
            for (&(p, q), &c) in &term.terms {
                out.add_term(p, q, c.checked_mul(scale).ok_or(Error::Overflow)?)?;
            }
        }
    }
    Ok(out)
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Incremental row-echelon form over the integers with primitive rows, used
/// for exact rank and span-membership tests over the rationals.
#[derive(Debug, Clone, Default)]
pub struct RowEchelon {
    width: usize,
    // (pivot column, primitive row with positive pivot), sorted by pivot
    rows: Vec<(usize, Vec<i64>)>,
}

impl RowEchelon {
    pub fn new(width: usize) -> Self {
        RowEchelon {
            width,
            rows: Vec::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    fn reduce(&self, v: &[i64]) -> Result<Vec<i64>> {
        if v.len() != self.width {
            return Err(Error::SizeMismatch {
                expected: self.width,
                found: v.len(),
            });
        }
        let mut cur: Vec<i128> = v.iter().map(|&x| x as i128).collect();
        for (pivot, row) in &self.rows {
            let c = cur[*pivot];
            if c == 0 {
                continue;
            }
            let p = row[*pivot] as i128;
            let mut g = 0i128;
            for (x, &r) in cur.iter_mut().zip(row) {
                *x = x
                    .checked_mul(p)
                    .and_then(|y| y.checked_sub(c.checked_mul(r as i128)?))
                    .ok_or(Error::Overflow)?;
                g = gcd(g, *x);
            }
            if g > 1 {
                cur.iter_mut().for_each(|x| *x /= g);
            }
        }
        cur.into_iter()
            .map(|x| i64::try_from(x).map_err(|_| Error::Overflow))
            .collect()
    }

    /// Adds `v` if it is independent of the current rows; returns whether it
    /// was added.
    pub fn insert(&mut self, v: &[i64]) -> Result<bool> {
        let mut r = self.reduce(v)?;
        let Some(pivot) = r.iter().position(|&x| x != 0) else {
            return Ok(false);
        };
        let g = r.iter().fold(0i128, |g, &x| gcd(g, x as i128)) as i64;
        let sign = if r[pivot] < 0 { -1 } else { 1 };
        r.iter_mut().for_each(|x| *x = *x / g * sign);
        let at = self.rows.partition_point(|(p, _)| *p < pivot);
        self.rows.insert(at, (pivot, r));
        Ok(true)
    }

    pub fn contains(&self, v: &[i64]) -> Result<bool> {
        Ok(self.reduce(v)?.iter().all(|&x| x == 0))
    }
}

/// Linearly independent zero row-sum matrices spanning a subspace of `𝔸`.
#[derive(Debug, Clone)]
pub struct LieBasis {
    size: usize,
    elements: Vec<ZeroRowSumMatrix>,
    echelon: RowEchelon,
}

impl PartialEq for LieBasis {
    fn eq(&self, other: &Self) -> bool {
        self.size == other.size && self.elements == other.elements
    }
}

impl LieBasis {
    pub fn empty(size: usize) -> Self {
        LieBasis {
            size,
            elements: Vec::new(),
            echelon: RowEchelon::new(size * size.saturating_sub(1)),
        }
    }

    /// Keeps the matrices that are independent of the ones before them.
    pub fn from_matrices<'a, I>(size: usize, matrices: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a ZeroRowSumMatrix>,
    {
        let mut basis = LieBasis::empty(size);
        for m in matrices {
            basis.try_push(m.clone())?;
        }
        Ok(basis)
    }

    /// Basis `A_G` of the span `𝔸_G`.
    pub fn of_graph(g: &Digraph) -> Self {
        let mats: Vec<ZeroRowSumMatrix> = graph_generators(g)
            .iter()
            .map(EdgeGenerator::to_matrix)
            .collect();
        LieBasis::from_matrices(g.num_vertices(), &mats).expect("generators are unit vectors")
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn dimension(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[ZeroRowSumMatrix] {
        &self.elements
    }

    fn try_push(&mut self, m: ZeroRowSumMatrix) -> Result<bool> {
        if m.size != self.size {
            return Err(Error::SizeMismatch {
                expected: self.size,
                found: m.size,
            });
        }
        let added = self.echelon.insert(&m.off_diagonal())?;
        if added {
            self.elements.push(m);
        }
        Ok(added)
    }

    /// Exact span membership.
    pub fn contains(&self, m: &ZeroRowSumMatrix) -> Result<bool> {
        if m.size != self.size {
            return Err(Error::SizeMismatch {
                expected: self.size,
                found: m.size,
            });
        }
        self.echelon.contains(&m.off_diagonal())
    }

    /// True iff both bases span the same rational subspace.
    pub fn span_equal(&self, other: &LieBasis) -> Result<bool> {
        if self.size != other.size {
            return Err(Error::SizeMismatch {
                expected: self.size,
                found: other.size,
            });
        }
        if self.dimension() != other.dimension() {
            return Ok(false);
        }
        for m in &other.elements {
            if !self.contains(m)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Text block: `dim <d>`, then one matrix per record (rows of
    /// space-separated integers), records separated by blank lines.
    pub fn to_text(&self) -> String {
        let mut out = format!("dim {}\n", self.dimension());
        for m in &self.elements {
            out.push('\n');
            out.push_str(&m.to_string());
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim);
        let header = lines
            .by_ref()
            .find(|l| !l.is_empty())
            .ok_or_else(|| Error::Parse("empty basis text".into()))?;
        let dim: usize = header
            .strip_prefix("dim ")
            .and_then(|d| d.trim().parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad header {header:?}")))?;
        let mut records: Vec<Vec<Vec<i64>>> = Vec::new();
        let mut current: Vec<Vec<i64>> = Vec::new();
        for line in lines {
            if line.is_empty() {
                if !current.is_empty() {
                    records.push(std::mem::take(&mut current));
                }
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<i64>()
                        .map_err(|_| Error::Parse(format!("bad entry {t:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            current.push(row);
        }
        if !current.is_empty() {
            records.push(current);
        }
        if records.len() != dim {
            return Err(Error::Parse(format!(
                "header says {dim} matrices, found {}",
                records.len()
            )));
        }
        let size = records.first().map_or(0, Vec::len);
        let mut basis = LieBasis::empty(size);
        for rows in &records {
            let m = ZeroRowSumMatrix::from_rows(rows).map_err(|e| Error::Parse(e.to_string()))?;
            if !basis.try_push(m).map_err(|e| Error::Parse(e.to_string()))? {
                return Err(Error::Parse("basis elements are linearly dependent".into()));
            }
        }
        Ok(basis)
    }
}

/// Which bracket implementation drives the closure computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BracketPath {
    #[default]
    Dense,
    Structural,
}

/// Smallest bracket-closed subspace containing the generators.
pub fn lie_closure(generators: &[EdgeGenerator]) -> Result<LieBasis> {
    lie_closure_with(generators, BracketPath::Dense)
}

/// Worklist saturation: every newly adjoined element is bracketed against all
/// earlier ones, in insertion order, and brackets that raise the exact rank are
/// adjoined. Terminates because the dimension is at most `N(N−1)`.
pub fn lie_closure_with(generators: &[EdgeGenerator], path: BracketPath) -> Result<LieBasis> {
    let first = generators.first().ok_or(Error::EmptyGeneratorSet)?;
    let size = first.size;
    if let Some(g) = generators.iter().find(|g| g.size != size) {
        return Err(Error::SizeMismatch {
            expected: size,
            found: g.size,
        });
    }
    let mut basis = LieBasis::empty(size);
    let mut combos: Vec<GeneratorCombination> = Vec::new();
    for g in generators {
        if basis.try_push(g.to_matrix())? {
            combos.push(GeneratorCombination::from_terms([((g.i, g.j), 1)])?);
        }
    }
    let mut next = 0;
    while next < basis.elements.len() {
        for k in 0..next {
            let candidate = match path {
                BracketPath::Dense => bracket(&basis.elements[k], &basis.elements[next])?,
                BracketPath::Structural => {
                    bracket_combinations(&combos[k], &combos[next], size)?.to_matrix(size)?
                }
            };
            if candidate.is_zero() {
                continue;
            }
            if basis.try_push(candidate.clone())? {
                combos.push(GeneratorCombination::from_matrix(&candidate));
            }
        }
        next += 1;
    }
    Ok(basis)
}

/// Lie closure of `A_G` for a digraph.
pub fn graph_lie_closure(g: &Digraph) -> Result<LieBasis> {
    lie_closure(&graph_generators(g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn a(i: usize, j: usize, n: usize) -> ZeroRowSumMatrix {
        // 1-based for readability
        edge_generator(i - 1, j - 1, n).unwrap()
    }

    fn g(i: usize, j: usize, n: usize) -> EdgeGenerator {
        EdgeGenerator::new(i - 1, j - 1, n).unwrap()
    }

    fn combo(terms: &[((usize, usize), i64)]) -> GeneratorCombination {
        GeneratorCombination::from_terms(terms.iter().map(|&((i, j), c)| ((i - 1, j - 1), c)))
            .unwrap()
    }

    fn sub(x: &ZeroRowSumMatrix, y: &ZeroRowSumMatrix) -> ZeroRowSumMatrix {
        x.checked_add(&y.checked_scale(-1).unwrap()).unwrap()
    }

    fn random_zero_row_sum(n: usize, rng: &mut impl Rng) -> ZeroRowSumMatrix {
        let coords: Vec<i64> = (0..n * (n - 1)).map(|_| rng.random_range(-3..=3)).collect();
        ZeroRowSumMatrix::from_off_diagonal(n, &coords).unwrap()
    }

    #[test]
    fn edge_generator_examples() {
        assert_eq!(
            a(1, 2, 2),
            ZeroRowSumMatrix::from_rows(&[vec![-1, 1], vec![0, 0]]).unwrap()
        );
        assert_eq!(
            a(2, 1, 2),
            ZeroRowSumMatrix::from_rows(&[vec![0, 0], vec![1, -1]]).unwrap()
        );
        assert!(a(3, 1, 4).row_sums_vanish());
        assert!(matches!(
            edge_generator(1, 1, 3),
            Err(Error::InvalidIndices { .. })
        ));
        assert!(matches!(
            edge_generator(0, 3, 3),
            Err(Error::InvalidIndices { .. })
        ));
    }

    #[test]
    fn dense_bracket_examples() {
        assert_eq!(
            bracket(&a(1, 2, 3), &a(2, 3, 3)).unwrap(),
            sub(&a(1, 3, 3), &a(1, 2, 3))
        );
        assert_eq!(
            bracket(&a(1, 2, 3), &a(1, 3, 3)).unwrap(),
            sub(&a(1, 2, 3), &a(1, 3, 3))
        );
        assert!(bracket(&a(1, 2, 4), &a(3, 4, 4)).unwrap().is_zero());
        assert!(matches!(
            bracket(&a(1, 2, 3), &a(1, 2, 4)),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn two_cycle_bracket_is_generator_difference() {
        let b = bracket(&a(1, 2, 3), &a(2, 1, 3)).unwrap();
        assert!(b.row_sums_vanish());
        assert_eq!(b, sub(&a(2, 1, 3), &a(1, 2, 3)));
        assert_eq!(
            structural_bracket(&g(1, 2, 3), &g(2, 1, 3)),
            Err(Error::DegenerateBracket { i: 0, j: 1 })
        );
    }

    #[test]
    fn structural_bracket_examples() {
        assert_eq!(
            structural_bracket(&g(1, 2, 4), &g(2, 3, 4)).unwrap(),
            combo(&[((1, 3), 1), ((1, 2), -1)])
        );
        assert_eq!(
            structural_bracket(&g(2, 3, 4), &g(3, 4, 4)).unwrap(),
            combo(&[((2, 4), 1), ((2, 3), -1)])
        );
        assert!(structural_bracket(&g(1, 2, 4), &g(3, 4, 4))
            .unwrap()
            .is_empty());
        // shared head commutes
        assert!(structural_bracket(&g(1, 2, 3), &g(3, 2, 3))
            .unwrap()
            .is_empty());
        // head of b is the tail of a
        assert_eq!(
            structural_bracket(&g(1, 2, 3), &g(3, 1, 3)).unwrap(),
            combo(&[((3, 1), 1), ((3, 2), -1)])
        );
    }

    #[test]
    fn structural_matches_dense_exhaustively() {
        for n in 2..=6 {
            for i in 0..n {
                for j in (0..n).filter(|&j| j != i) {
                    for k in 0..n {
                        for l in (0..n).filter(|&l| l != k) {
                            let (x, y) = (
                                EdgeGenerator::new(i, j, n).unwrap(),
                                EdgeGenerator::new(k, l, n).unwrap(),
                            );
                            let dense = bracket(&x.to_matrix(), &y.to_matrix()).unwrap();
                            assert!(dense.row_sums_vanish());
                            match structural_bracket(&x, &y) {
                                Ok(c) => assert_eq!(c.to_matrix(n).unwrap(), dense),
                                Err(Error::DegenerateBracket { .. }) => {
                                    assert!(j == k && l == i)
                                }
                                Err(e) => panic!("{e}"),
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn closure_of_path_is_closure_graph_span() {
        let path = Digraph::path(4);
        let closure = graph_lie_closure(&path).unwrap();
        assert_eq!(closure.dimension(), 6);
        let expected = LieBasis::of_graph(&path.transitive_closure());
        assert!(closure.span_equal(&expected).unwrap());
        // A_14 is produced by brackets
        assert!(closure.contains(&a(1, 4, 4)).unwrap());
        assert!(!closure.contains(&a(4, 1, 4)).unwrap());
    }

    #[test]
    fn closure_small_examples() {
        let k3 = graph_lie_closure(&Digraph::complete(3)).unwrap();
        assert_eq!(k3.dimension(), 6);
        let single = lie_closure(&[g(1, 2, 3)]).unwrap();
        assert_eq!(single.dimension(), 1);
        assert_eq!(lie_closure(&[]), Err(Error::EmptyGeneratorSet));
        assert!(matches!(
            lie_closure(&[g(1, 2, 3), g(1, 2, 4)]),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn span_equal_examples() {
        let x = LieBasis::from_matrices(2, &[a(1, 2, 2)]).unwrap();
        let y = LieBasis::from_matrices(2, &[a(1, 2, 2).checked_scale(2).unwrap()]).unwrap();
        let z = LieBasis::from_matrices(2, &[a(2, 1, 2)]).unwrap();
        assert!(x.span_equal(&y).unwrap());
        assert!(!x.span_equal(&z).unwrap());
        let w = LieBasis::from_matrices(3, &[a(1, 2, 3)]).unwrap();
        assert!(matches!(x.span_equal(&w), Err(Error::SizeMismatch { .. })));
    }

    #[test]
    fn basis_text_round_trip() {
        let basis = graph_lie_closure(&Digraph::path(3)).unwrap();
        let text = basis.to_text();
        assert!(text.starts_with("dim 3\n\n"));
        let parsed = LieBasis::parse_text(&text).unwrap();
        assert_eq!(parsed, basis);
        assert!(LieBasis::parse_text("dim 2\n\n-1 1\n0 0\n").is_err());
        assert!(LieBasis::parse_text("dim 1\n\n1 1\n0 0\n").is_err());
    }

    #[test]
    fn echelon_tracks_rank_exactly() {
        let mut e = RowEchelon::new(3);
        assert!(e.insert(&[2, 4, 6]).unwrap());
        assert!(!e.insert(&[1, 2, 3]).unwrap());
        assert!(e.insert(&[0, 1, 1]).unwrap());
        assert!(e.contains(&[1, 3, 4]).unwrap());
        assert!(!e.contains(&[0, 0, 1]).unwrap());
        assert_eq!(e.rank(), 2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn bracket_preserves_zero_row_sums(seed in any::<u64>(), n in 2usize..7) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_zero_row_sum(n, &mut rng);
            let y = random_zero_row_sum(n, &mut rng);
            prop_assert!(bracket(&x, &y).unwrap().row_sums_vanish());
        }

        #[test]
        fn jacobi_identity(seed in any::<u64>(), n in 2usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_zero_row_sum(n, &mut rng);
            let y = random_zero_row_sum(n, &mut rng);
            let z = random_zero_row_sum(n, &mut rng);
            let t1 = bracket(&x, &bracket(&y, &z).unwrap()).unwrap();
            let t2 = bracket(&y, &bracket(&z, &x).unwrap()).unwrap();
            let t3 = bracket(&z, &bracket(&x, &y).unwrap()).unwrap();
            prop_assert!(t1.checked_add(&t2).unwrap().checked_add(&t3).unwrap().is_zero());
        }

        #[test]
        fn combination_matrix_round_trip(seed in any::<u64>(), n in 2usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_zero_row_sum(n, &mut rng);
            prop_assert_eq!(GeneratorCombination::from_matrix(&x).to_matrix(n).unwrap(), x);
        }

        #[test]
        fn closure_equals_transitive_closure_span(seed in any::<u64>(), n in 2usize..=8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let graph = Digraph::random_weakly_connected(n, 0.15, &mut rng);
            let closure = graph_lie_closure(&graph).unwrap();
            let closed = graph.transitive_closure();
            prop_assert!(closure.span_equal(&LieBasis::of_graph(&closed)).unwrap());
            prop_assert_eq!(closure.dimension(), closed.num_edges());
            for (i, j) in closed.edges() {
                prop_assert!(closure.contains(&edge_generator(i, j, n).unwrap()).unwrap());
            }
            // generators of G are independent
            prop_assert_eq!(LieBasis::of_graph(&graph).dimension(), graph.num_edges());
        }

        #[test]
        fn dense_and_structural_closures_agree(seed in any::<u64>(), n in 2usize..=6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let graph = Digraph::random_weakly_connected(n, 0.2, &mut rng);
            let gens = graph_generators(&graph);
            let dense = lie_closure_with(&gens, BracketPath::Dense).unwrap();
            let structural = lie_closure_with(&gens, BracketPath::Structural).unwrap();
            prop_assert_eq!(dense, structural);
        }
    }
}
