//! Constructors for named families: partition models, hierarchical
//! (loglinear) families, grouping families of composite systems and the
//! one-dimensional three-state families with maximal divergence `log 2`.
//!
//! Product states are indexed row-major with factor 1 varying slowest.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{ExponentialFamily, Measure, StateSpace, SufficientStatistics};
use crate::linalg::RatMatrix;
use crate::rational::{self, Q};

/// Disjoint cover of `0..n` by nonempty blocks. Blocks are kept sorted and
/// ordered by their smallest state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
    n: usize,
}

impl Partition {
    pub fn new(blocks: Vec<Vec<usize>>, n: usize) -> Result<Self> {
        let mut seen = vec![false; n];
        let mut blocks: Vec<Vec<usize>> = blocks
            .into_iter()
            .map(|mut b| {
                b.sort_unstable();
                b
            })
            .collect();
        for b in &blocks {
            if b.is_empty() {
                return Err(Error::InvalidPartition("empty block".into()));
            }
            for &x in b {
                if x >= n {
                    return Err(Error::InvalidPartition(format!("state {x} out of range 0..{n}")));
                }
                if std::mem::replace(&mut seen[x], true) {
                    return Err(Error::InvalidPartition(format!("state {x} in two blocks")));
                }
            }
        }
        if let Some(x) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!("state {x} not covered")));
        }
        blocks.sort_by_key(|b| b[0]);
        Ok(Partition { blocks, n })
    }

    /// Consecutive blocks of the given sizes.
    pub fn from_sizes(sizes: &[usize]) -> Result<Self> {
        let mut next = 0;
        let blocks = sizes
            .iter()
            .map(|&s| {
                let b: Vec<usize> = (next..next + s).collect();
                next += s;
                b
            })
            .collect();
        Self::new(blocks, next)
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn coarseness(&self) -> usize {
        self.blocks.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn is_homogeneous(&self) -> bool {
        let c = self.coarseness();
        self.blocks.iter().all(|b| b.len() == c)
    }

    pub fn block_of(&self, x: usize) -> &[usize] {
        self.blocks
            .iter()
            .find(|b| b.contains(&x))
            .expect("partition covers every state")
    }
}

pub fn partition_family(partition: &Partition, space: StateSpace) -> Result<ExponentialFamily> {
    let n = space.size();
    if partition.size() != n {
        return Err(Error::InvalidPartition(format!(
            "partition covers {} states, space has {n}",
            partition.size()
        )));
    }
    let rows: Vec<Vec<Q>> = partition
        .blocks()
        .iter()
        .map(|b| (0..n).map(|x| if b.contains(&x) { Q::one() } else { Q::zero() }).collect())
        .collect();
    ExponentialFamily::build(space, Measure::uniform(n), SufficientStatistics::new(rows, n)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HierarchicalSpec {
    pub cardinalities: Vec<usize>,
    /// Generators as subsets of `1..=n`.
    #[serde(rename = "complex")]
    pub generators: Vec<Vec<usize>>,
}

impl HierarchicalSpec {
    pub fn new(cardinalities: Vec<usize>, generators: Vec<Vec<usize>>) -> Self {
        HierarchicalSpec {
            cardinalities,
            generators,
        }
    }

    pub fn num_states(&self) -> usize {
        self.cardinalities.iter().product()
    }

    /// Row-major product states, factor 1 slowest.
    pub fn states(&self) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for &c in &self.cardinalities {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    (0..c).map(move |v| {
                        let mut s = prefix.clone();
                        s.push(v);
                        s
                    })
                })
                .collect();
        }
        out
    }

    fn validate(&self) -> Result<()> {
        let n = self.cardinalities.len();
        if self.cardinalities.contains(&0) {
            return Err(Error::InvalidStateSpace("zero cardinality".into()));
        }
        for g in &self.generators {
            if g.iter().any(|&i| i == 0 || i > n) {
                return Err(Error::BadGenerator {
                    generator: g.clone(),
                    n,
                });
            }
        }
        Ok(())
    }

    fn union(&self) -> Vec<usize> {
        let mut k: Vec<usize> = self.generators.iter().flatten().copied().collect();
        k.sort_unstable();
        k.dedup();
        k
    }
}

fn product_labels(states: &[Vec<usize>]) -> Vec<String> {
    states
        .iter()
        .map(|s| s.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(""))
        .collect()
}

/// 0-1 marginal statistics: one indicator row per (generator, configuration).
/// An empty generator list yields the single all-ones row, i.e. the family
/// consisting of the uniform distribution.
pub fn hierarchical_family(spec: &HierarchicalSpec) -> Result<ExponentialFamily> {
    spec.validate()?;
    let states = spec.states();
    let n = states.len();
    let mut rows: Vec<Vec<Q>> = Vec::new();
    for g in &spec.generators {
        let mut g: Vec<usize> = g.iter().map(|i| i - 1).collect();
        g.sort_unstable();
        g.dedup();
        let marg: Vec<Vec<usize>> = states.iter().map(|s| g.iter().map(|&i| s[i]).collect()).collect();
        let mut configs = marg.clone();
        configs.sort();
        configs.dedup();
        for cfg in configs {
            rows.push(marg.iter().map(|m| if *m == cfg { Q::one() } else { Q::zero() }).collect());
        }
    }
    if rows.is_empty() {
        rows.push(vec![Q::one(); n]);
    }
    ExponentialFamily::build(
        StateSpace::new(product_labels(&states))?,
        Measure::uniform(n),
        SufficientStatistics::new(rows, n)?,
    )
}

/// The partition model of `~_K` (states agreeing on the coordinates in `K`,
/// given 1-based), together with its partition.
pub fn grouping_family(k: &[usize], cardinalities: &[usize]) -> Result<(ExponentialFamily, Partition)> {
    let spec = HierarchicalSpec::new(cardinalities.to_vec(), vec![k.to_vec()]);
    spec.validate()?;
    let states = spec.states();
    let key = |s: &Vec<usize>| -> Vec<usize> { k.iter().map(|&i| s[i - 1]).collect() };
    let mut blocks: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for (x, s) in states.iter().enumerate() {
        let kx = key(s);
        match blocks.iter_mut().find(|(kk, _)| *kk == kx) {
            Some((_, b)) => b.push(x),
            None => blocks.push((kx, vec![x])),
        }
    }
    let partition = Partition::new(blocks.into_iter().map(|(_, b)| b).collect(), states.len())?;
    let family = partition_family(&partition, StateSpace::new(product_labels(&states))?)?;
    Ok((family, partition))
}

/// Number of vertices of the marginal polytope: the product of the
/// cardinalities of the factors covered by some generator.
pub fn marginal_polytope_vertex_count(spec: &HierarchicalSpec) -> usize {
    spec.union().iter().map(|&i| spec.cardinalities[i - 1]).product()
}

/// The unique family on three states with normal space `R u` and maximal
/// divergence `log 2`; its reference measure is `u+ + u-` after scaling `u`
/// so that `u+` has unit mass.
pub fn unique_log2_family_n3(u: &[Q]) -> Result<ExponentialFamily> {
    if u.len() != 3 {
        return Err(Error::DimensionMismatch {
            what: "direction length",
            expected: 3,
            found: u.len(),
        });
    }
    if u.iter().all(Zero::is_zero) {
        return Err(Error::ZeroVector);
    }
    if !u.iter().fold(Q::zero(), |a, b| a + b).is_zero() {
        return Err(Error::NotSumZero);
    }
    if u.iter().any(Zero::is_zero) {
        return Err(Error::DegenerateSupport);
    }
    let plus: Q = u.iter().filter(|v| v.is_positive()).fold(Q::zero(), |a, b| a + b);
    let nu: Vec<f64> = u.iter().map(|v| rational::to_f64(&(v.abs() / &plus))).collect();
    let orth = RatMatrix::from_rows(vec![u.to_vec()], 3).kernel();
    ExponentialFamily::build(
        StateSpace::indexed(3)?,
        Measure::new(nu)?,
        SufficientStatistics::new(orth, 3)?,
    )
}

/// Family on the disjoint union of two state spaces whose closure is the
/// mixture of the two closures.
pub fn direct_sum(a: &ExponentialFamily, b: &ExponentialFamily) -> Result<ExponentialFamily> {
    let (na, nb) = (a.size(), b.size());
    let n = na + nb;
    let mut rows: Vec<Vec<Q>> = Vec::new();
    for r in a.stats().rows() {
        rows.push(r.iter().cloned().chain(std::iter::repeat_n(Q::zero(), nb)).collect());
    }
    for r in b.stats().rows() {
        rows.push(std::iter::repeat_n(Q::zero(), na).chain(r.iter().cloned()).collect());
    }
    rows.push((0..n).map(|x| if x < na { Q::one() } else { Q::zero() }).collect());
    let labels = a
        .space()
        .labels()
        .iter()
        .map(|l| format!("a{l}"))
        .chain(b.space().labels().iter().map(|l| format!("b{l}")))
        .collect();
    let nu = a.nu().values().iter().chain(b.nu().values()).copied().collect();
    ExponentialFamily::build(StateSpace::new(labels)?, Measure::new(nu)?, SufficientStatistics::new(rows, n)?)
}
