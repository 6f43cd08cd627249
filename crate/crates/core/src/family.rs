//! Finite state spaces, measures and exponential families.
//!
//! Sufficient statistics are exact rationals; everything derived from them
//! combinatorially (rank, normal space, vertex sets) is computed exactly.
//! Densities and moments are double precision.

use std::collections::HashMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{rank_of, RatMatrix};
use crate::lp::{self, Scalar};
use crate::rational::{self, Q};
use crate::zoo::Partition;

/// Tolerance for a probability vector to sum to one.
pub const SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSpace {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl StateSpace {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidStateSpace("no states".into()));
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::InvalidStateSpace(format!("duplicate label {l:?}")));
            }
        }
        Ok(StateSpace { labels, index })
    }

    /// States labelled `"0"`, `"1"`, ...
    pub fn indexed(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| i.to_string()).collect())
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn restrict(&self, states: &[usize]) -> StateSpace {
        let labels = states.iter().map(|&s| self.labels[s].clone()).collect();
        StateSpace::new(labels).expect("sub-list of distinct labels")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Measure(Vec<f64>);

impl Measure {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidMeasure(format!("entry {i} is not finite")));
        }
        Ok(Measure(values))
    }

    pub fn uniform(n: usize) -> Self {
        Measure(vec![1.0; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn normalized(&self) -> Vec<f64> {
        let t = self.total();
        self.0.iter().map(|v| v / t).collect()
    }

    /// All entries equal, up to relative rounding.
    pub fn is_uniform(&self) -> bool {
        let first = self.0[0];
        self.0.iter().all(|v| (v - first).abs() <= 1e-12 * first.abs().max(1.0))
    }
}

/// Nonnegative vector summing to one within [`SUM_TOL`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::NotProbability("empty vector".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::NotProbability(format!("entry {i} = {}", values[i])));
        }
        let s: f64 = values.iter().sum();
        if (s - 1.0).abs() > SUM_TOL {
            return Err(Error::NotProbability(format!("entries sum to {s}")));
        }
        Ok(ProbabilityVector(values))
    }

    /// Rescales a nonnegative vector with positive mass.
    pub fn normalize(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::NotProbability(format!("entry {i} = {}", values[i])));
        }
        let s: f64 = values.iter().sum();
        if s <= 0.0 {
            return Err(Error::NotProbability("zero mass".into()));
        }
        Ok(ProbabilityVector(values.into_iter().map(|v| v / s).collect()))
    }

    pub fn uniform(n: usize) -> Self {
        ProbabilityVector(vec![1.0 / n as f64; n])
    }

    pub fn point_mass(n: usize, x: usize) -> Self {
        let mut v = vec![0.0; n];
        v[x] = 1.0;
        ProbabilityVector(v)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&i| self.0[i] > 0.0).collect()
    }

    pub fn mass(&self, states: &[usize]) -> f64 {
        states.iter().map(|&s| self.0[s]).sum()
    }

    pub fn entropy(&self) -> f64 {
        -self.0.iter().filter(|&&p| p > 0.0).map(|p| p * p.ln()).sum::<f64>()
    }

    pub fn total_variation(&self, other: &ProbabilityVector) -> f64 {
        0.5 * self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).sum::<f64>()
    }
}

impl std::ops::Index<usize> for ProbabilityVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// The h×N matrix A of exact rationals; column `x` is the statistic A_x.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SufficientStatistics {
    matrix: RatMatrix,
}

impl SufficientStatistics {
    pub fn new(rows: Vec<Vec<Q>>, n: usize) -> Result<Self> {
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::DimensionMismatch {
                what: if i == 0 { "statistics columns" } else { "statistics row length" },
                expected: n,
                found: r.len(),
            });
        }
        Ok(SufficientStatistics {
            matrix: RatMatrix::from_rows(rows, n),
        })
    }

    pub fn from_integers(rows: &[Vec<i64>]) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        Self::new(
            rows.iter()
                .map(|r| r.iter().map(|&v| rational::q(v)).collect())
                .collect(),
            n,
        )
    }

    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &RatMatrix {
        &self.matrix
    }

    pub fn column(&self, x: usize) -> Vec<Q> {
        self.matrix.column(x)
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Q]> {
        self.matrix.rows()
    }

    pub fn restrict(&self, states: &[usize]) -> SufficientStatistics {
        SufficientStatistics {
            matrix: self.matrix.select_columns(states),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NaturalParameters(pub Vec<f64>);

/// Which arithmetic decided a vertex test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpPath {
    Exact,
    Float,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexSet {
    pub states: Vec<usize>,
    pub path: LpPath,
}

/// Largest denominator for which vertex tests run in exact arithmetic.
const EXACT_LP_MAX_DENOM: i64 = 1_000_000;

#[derive(Debug, Clone)]
pub struct ExponentialFamily {
    space: StateSpace,
    nu: Measure,
    stats: SufficientStatistics,
    extended: RatMatrix,
    rank: usize,
    normal_basis: Vec<Vec<Q>>,
    stats_f64: Vec<Vec<f64>>,
    log_nu: Vec<f64>,
}

impl ExponentialFamily {
    pub fn build(space: StateSpace, nu: Measure, stats: SufficientStatistics) -> Result<Self> {
        let n = space.size();
        if nu.len() != n {
            return Err(Error::DimensionMismatch {
                what: "reference measure length",
                expected: n,
                found: nu.len(),
            });
        }
        if stats.ncols() != n {
            return Err(Error::DimensionMismatch {
                what: "statistics columns",
                expected: n,
                found: stats.ncols(),
            });
        }
        if let Some((state, &value)) = nu.values().iter().enumerate().find(|(_, v)| **v <= 0.0) {
            return Err(Error::NonPositiveReference { state, value });
        }
        let extended = stats.matrix().with_row(vec![Q::one(); n]);
        let (_, pivots) = extended.rref();
        let rank = pivots.len();
        let normal_basis = extended.kernel();
        let stats_f64 = stats.matrix().to_f64_rows();
        let log_nu = nu.values().iter().map(|v| v.ln()).collect();
        Ok(ExponentialFamily {
            space,
            nu,
            stats,
            extended,
            rank,
            normal_basis,
            stats_f64,
            log_nu,
        })
    }

    /// Convenience constructor with indexed labels and integer statistics.
    pub fn from_integers(nu: &[f64], rows: &[Vec<i64>]) -> Result<Self> {
        let stats = SufficientStatistics::from_integers(rows)?;
        Self::build(
            StateSpace::indexed(nu.len())?,
            Measure::new(nu.to_vec())?,
            stats,
        )
    }

    pub fn size(&self) -> usize {
        self.space.size()
    }

    pub fn dim(&self) -> usize {
        self.rank - 1
    }

    pub fn normal_dim(&self) -> usize {
        self.normal_basis.len()
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn nu(&self) -> &Measure {
        &self.nu
    }

    pub fn log_nu(&self) -> &[f64] {
        &self.log_nu
    }

    pub fn stats(&self) -> &SufficientStatistics {
        &self.stats
    }

    pub fn stats_f64(&self) -> &[Vec<f64>] {
        &self.stats_f64
    }

    /// Statistics with an all-ones row appended.
    pub fn extended_stats(&self) -> &RatMatrix {
        &self.extended
    }

    pub fn normal_basis(&self) -> &[Vec<Q>] {
        &self.normal_basis
    }

    pub fn normal_basis_f64(&self) -> Vec<Vec<f64>> {
        self.normal_basis
            .iter()
            .map(|v| v.iter().map(rational::to_f64).collect())
            .collect()
    }

    pub fn is_full_simplex(&self) -> bool {
        self.normal_basis.is_empty()
    }

    pub fn in_normal_space_exact(&self, u: &[Q]) -> bool {
        u.len() == self.size() && self.extended.mul_vec(u).iter().all(Zero::is_zero)
    }

    /// Largest entry of `|[A;1] u|`, scaled by the magnitude of `u`.
    pub fn normal_residual(&self, u: &[f64]) -> f64 {
        let scale = u.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
        let ones = u.iter().sum::<f64>().abs();
        self.stats_f64
            .iter()
            .map(|row| row.iter().zip(u).map(|(a, b)| a * b).sum::<f64>().abs())
            .fold(ones, f64::max)
            / scale
    }

    /// Row indices of `A` forming a basis of the row space modulo constants.
    pub fn tangent_rows(&self) -> Vec<usize> {
        independent_rows_mod_constants(&self.stats, self.size())
    }

    /// Equality of extended tangent spaces, i.e. the same family up to the
    /// choice of statistics (reference measures are not compared).
    pub fn same_row_span(&self, other: &ExponentialFamily) -> bool {
        if self.size() != other.size() || self.rank != other.rank {
            return false;
        }
        let rows: Vec<Vec<Q>> = self
            .extended
            .rows()
            .chain(other.extended.rows())
            .map(<[Q]>::to_vec)
            .collect();
        rank_of(&rows, self.size()) == self.rank
    }

    /// The family induced on a subset of states: restricted reference
    /// measure and statistics columns.
    pub fn restrict(&self, states: &[usize]) -> ExponentialFamily {
        let nu = Measure(states.iter().map(|&s| self.nu.0[s]).collect());
        ExponentialFamily::build(self.space.restrict(states), nu, self.stats.restrict(states))
            .expect("restriction of a valid family")
    }

    pub fn density(&self, theta: &NaturalParameters) -> Result<ProbabilityVector> {
        if theta.0.len() != self.stats.nrows() {
            return Err(Error::DimensionMismatch {
                what: "natural parameters",
                expected: self.stats.nrows(),
                found: theta.0.len(),
            });
        }
        let logits: Vec<f64> = (0..self.size())
            .map(|x| {
                self.log_nu[x]
                    + self
                        .stats_f64
                        .iter()
                        .zip(&theta.0)
                        .map(|(row, t)| t * row[x])
                        .sum::<f64>()
            })
            .collect();
        Ok(ProbabilityVector(softmax(&logits)))
    }

    pub fn moment_map(&self, p: &ProbabilityVector) -> Vec<f64> {
        self.stats_f64
            .iter()
            .map(|row| row.iter().zip(p.values()).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// States whose column is a vertex of the convex support.
    pub fn convex_support_vertices(&self) -> VertexSet {
        let limit = num_bigint::BigInt::from(EXACT_LP_MAX_DENOM);
        let exact = rational::max_denominator(self.stats.rows().flatten()) <= limit;
        let columns: Vec<Vec<Q>> = (0..self.size()).map(|x| self.extended.column(x)).collect();
        let mut verdict: HashMap<&Vec<Q>, bool> = HashMap::new();
        let mut states = Vec::new();
        for x in 0..self.size() {
            let col = &columns[x];
            let is_vertex = match verdict.get(col) {
                Some(&v) => v,
                None => {
                    let mut others: Vec<&Vec<Q>> = columns.iter().filter(|c| *c != col).collect();
                    others.sort();
                    others.dedup();
                    let v = if exact {
                        !in_convex_hull::<Q>(&others, col, Q::clone)
                    } else {
                        !in_convex_hull::<f64>(&others, col, rational::to_f64)
                    };
                    verdict.insert(col, v);
                    v
                }
            };
            if is_vertex {
                states.push(x);
            }
        }
        VertexSet {
            states,
            path: if exact { LpPath::Exact } else { LpPath::Float },
        }
    }

    /// The partition whose indicator statistics generate this family, if the
    /// family is a partition exponential family.
    pub fn is_partition_family(&self) -> Option<Partition> {
        if !self.nu.is_uniform() {
            return None;
        }
        let mut fibers: Vec<(Vec<Q>, Vec<usize>)> = Vec::new();
        for x in 0..self.size() {
            let col = self.stats.column(x);
            match fibers.iter_mut().find(|(c, _)| *c == col) {
                Some((_, block)) => block.push(x),
                None => fibers.push((col, vec![x])),
            }
        }
        let reps: Vec<usize> = fibers.iter().map(|(_, b)| b[0]).collect();
        let ext_cols: Vec<Vec<Q>> = reps.iter().map(|&x| self.extended.column(x)).collect();
        if rank_of(&ext_cols, self.extended.nrows()) != reps.len() {
            return None;
        }
        // affinely independent distinct columns are automatically vertices
        let blocks = fibers.into_iter().map(|(_, b)| b).collect();
        Partition::new(blocks, self.size()).ok()
    }
}

/// Whether `target` is a convex combination of `points` (all columns carry a
/// trailing 1, so the equality system already encodes the simplex constraint).
fn in_convex_hull<T: Scalar>(points: &[&Vec<Q>], target: &[Q], conv: impl Fn(&Q) -> T) -> bool {
    if points.is_empty() {
        return false;
    }
    let rows = target.len();
    let a: Vec<Vec<T>> = (0..rows)
        .map(|r| points.iter().map(|p| conv(&p[r])).collect())
        .collect();
    let b: Vec<T> = target.iter().map(conv).collect();
    lp::feasible(&a, &b)
}

pub(crate) fn independent_rows_mod_constants(stats: &SufficientStatistics, n: usize) -> Vec<usize> {
    let mut acc: Vec<Vec<Q>> = vec![vec![Q::one(); n]];
    let mut chosen = Vec::new();
    for (i, row) in stats.rows().enumerate() {
        acc.push(row.to_vec());
        if rank_of(&acc, n) == acc.len() {
            chosen.push(i);
        } else {
            acc.pop();
        }
    }
    chosen
}

/// Max-shifted softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}

pub fn log_sum_exp(logits: &[f64]) -> f64 {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln()
}
