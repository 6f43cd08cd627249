//! Circuits of the normal space and everything built on them: the binomial
//! description of the closure, coparallel classes and the decomposition of a
//! family into a mixture along the connected components of its matroid.

use num_traits::{Signed, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::family::{ExponentialFamily, ProbabilityVector};
use crate::linalg::{rank_of, RatMatrix};
use crate::rational::{self, Q};

pub const DEFAULT_BUDGET: u64 = 10_000_000;
pub const DEFAULT_MEMBERSHIP_TOL: f64 = 1e-9;

/// Minimal-support vector of the normal space, in primitive integer form with
/// its first nonzero entry positive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CircuitVector {
    support: Vec<usize>,
    vector: Vec<Q>,
}

impl CircuitVector {
    /// Scales to the primitive integer vector with a positive leading entry.
    pub fn from_vector(vector: Vec<Q>) -> Self {
        let vector = rational::primitive_integer(&vector);
        let support = (0..vector.len()).filter(|&i| !vector[i].is_zero()).collect();
        CircuitVector { support, vector }
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn vector(&self) -> &[Q] {
        &self.vector
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.vector.iter().map(rational::to_f64).collect()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.support.binary_search(&x).is_ok()
    }
}

impl Serialize for CircuitVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("CircuitVector", 2)?;
        st.serialize_field("support", &self.support)?;
        let v: Vec<String> = self.vector.iter().map(rational::format).collect();
        st.serialize_field("vector", &v)?;
        st.end()
    }
}

/// One vector per circuit, sorted lexicographically by support.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct CircuitBasis {
    circuits: Vec<CircuitVector>,
}

impl CircuitBasis {
    pub fn circuits(&self) -> &[CircuitVector] {
        &self.circuits
    }

    pub fn len(&self) -> usize {
        self.circuits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.circuits.is_empty()
    }

    pub fn supports(&self) -> Vec<Vec<usize>> {
        self.circuits.iter().map(|c| c.support.clone()).collect()
    }
}

/// Circuits of the column configuration of `m`, scanning supports by size and
/// keeping dependent sets that contain no circuit found earlier.
fn circuits_of_columns(m: &RatMatrix, columns: &[usize], budget: u64) -> Result<Vec<CircuitVector>> {
    let n = columns.len();
    let max_size = (m.select_columns(columns).rank() + 1).min(n);
    let mut found: Vec<CircuitVector> = Vec::new();
    let mut scanned: u64 = 0;
    for size in 1..=max_size {
        let mut fresh = Vec::new();
        for subset in Combinations::new(n, size) {
            scanned += 1;
            if scanned > budget {
                return Err(Error::StateSpaceTooLarge { budget });
            }
            let states: Vec<usize> = subset.iter().map(|&i| columns[i]).collect();
            if found.iter().any(|c| c.support.iter().all(|s| states.contains(s))) {
                continue;
            }
            let sub = m.select_columns(&states);
            if sub.rank() == size {
                continue;
            }
            let kernel = sub.kernel();
            debug_assert_eq!(kernel.len(), 1, "minimal dependent set has a one-dimensional kernel");
            let mut full = vec![Q::zero(); m.ncols()];
            for (k, &s) in states.iter().enumerate() {
                full[s] = kernel[0][k].clone();
            }
            fresh.push(CircuitVector::from_vector(full));
        }
        found.extend(fresh);
    }
    found.sort_by(|a, b| a.support.cmp(&b.support));
    Ok(found)
}

pub fn circuit_basis(family: &ExponentialFamily) -> Result<CircuitBasis> {
    circuit_basis_with_budget(family, DEFAULT_BUDGET)
}

pub fn circuit_basis_with_budget(family: &ExponentialFamily, budget: u64) -> Result<CircuitBasis> {
    let all: Vec<usize> = (0..family.size()).collect();
    Ok(CircuitBasis {
        circuits: circuits_of_columns(family.extended_stats(), &all, budget)?,
    })
}

/// A circuit vector supported inside `supp(u)` that does not vanish at `x`.
pub fn circuit_through(family: &ExponentialFamily, u: &[Q], x: usize) -> Result<CircuitVector> {
    if u.len() != family.size() {
        return Err(Error::DimensionMismatch {
            what: "normal vector length",
            expected: family.size(),
            found: u.len(),
        });
    }
    if !family.in_normal_space_exact(u) {
        let uf: Vec<f64> = u.iter().map(rational::to_f64).collect();
        return Err(Error::NotInNormalSpace {
            residual: family.normal_residual(&uf),
        });
    }
    if x >= u.len() || u[x].is_zero() {
        return Err(Error::ZeroAtState(x));
    }
    let support: Vec<usize> = (0..u.len()).filter(|&i| !u[i].is_zero()).collect();
    let circuits = circuits_of_columns(family.extended_stats(), &support, DEFAULT_BUDGET)?;
    Ok(circuits
        .into_iter()
        .find(|c| c.contains(x))
        .expect("every nonzero coordinate of a normal vector lies on a circuit"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CircuitResidual {
    pub support: Vec<usize>,
    /// `|log lhs - log rhs|` when both monomials are positive.
    pub log_residual: Option<f64>,
    /// Set when a zero occurs: whether both monomials vanish together.
    pub zero_match: Option<bool>,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MembershipReport {
    pub member: bool,
    pub tol: f64,
    pub residuals: Vec<CircuitResidual>,
}

/// Tests the circuit binomial equations `prod (P/nu)^{u+} = prod (P/nu)^{u-}`
/// with the conventions `0^a = 0` for `a > 0` and empty product `1`.
pub fn closure_membership(
    family: &ExponentialFamily,
    basis: &CircuitBasis,
    p: &ProbabilityVector,
    tol: f64,
) -> MembershipReport {
    let log_ratio: Vec<f64> = p
        .values()
        .iter()
        .zip(family.log_nu())
        .map(|(&px, &ln)| if px > 0.0 { px.ln() - ln } else { f64::NEG_INFINITY })
        .collect();
    let residuals: Vec<CircuitResidual> = basis
        .circuits
        .iter()
        .map(|c| {
            let mut lhs = 0.0;
            let mut rhs = 0.0;
            let (mut lhs_zero, mut rhs_zero) = (false, false);
            for &x in &c.support {
                let e = rational::to_f64(&c.vector[x]);
                let pos = c.vector[x].is_positive();
                if log_ratio[x] == f64::NEG_INFINITY {
                    if pos {
                        lhs_zero = true;
                    } else {
                        rhs_zero = true;
                    }
                } else if pos {
                    lhs += e * log_ratio[x];
                } else {
                    rhs -= e * log_ratio[x];
                }
            }
            if lhs_zero || rhs_zero {
                let m = lhs_zero == rhs_zero;
                CircuitResidual {
                    support: c.support.clone(),
                    log_residual: None,
                    zero_match: Some(m),
                    holds: m,
                }
            } else {
                let r = (lhs - rhs).abs();
                CircuitResidual {
                    support: c.support.clone(),
                    log_residual: Some(r),
                    zero_match: None,
                    holds: r <= tol,
                }
            }
        })
        .collect();
    MembershipReport {
        member: residuals.iter().all(|r| r.holds),
        tol,
        residuals,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoparallelPartition {
    pub classes: Vec<Vec<usize>>,
    pub loops: Vec<usize>,
}

/// States are coparallel when they lie on exactly the same (nonempty) set of
/// circuits.
pub fn coparallel_classes(family: &ExponentialFamily, basis: &CircuitBasis) -> CoparallelPartition {
    let incidence: Vec<Vec<usize>> = (0..family.size())
        .map(|x| {
            basis.circuits
                .iter()
                .enumerate()
                .filter(|(_, c)| c.contains(x))
                .map(|(i, _)| i)
                .collect()
        })
        .collect();
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut loops = Vec::new();
    for x in 0..family.size() {
        if incidence[x].is_empty() {
            loops.push(x);
            continue;
        }
        match classes.iter_mut().find(|cl| incidence[cl[0]] == incidence[x]) {
            Some(cl) => cl.push(x),
            None => classes.push(vec![x]),
        }
    }
    CoparallelPartition { classes, loops }
}

#[derive(Debug, Clone)]
pub struct MixtureComponent {
    pub states: Vec<usize>,
    pub family: ExponentialFamily,
}

/// Connected components of the matroid (states linked when they share a
/// circuit) with the family induced on each; loops form singleton components.
pub fn mixture_decomposition(family: &ExponentialFamily, basis: &CircuitBasis) -> Vec<MixtureComponent> {
    let n = family.size();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        let mut y = x;
        while parent[y] != r {
            let next = parent[y];
            parent[y] = r;
            y = next;
        }
        r
    }
    for c in &basis.circuits {
        let first = c.support[0];
        for &s in &c.support[1..] {
            let (a, b) = (find(&mut parent, first), find(&mut parent, s));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut root_of: Vec<Option<usize>> = vec![None; n];
    for x in 0..n {
        let r = find(&mut parent, x);
        match root_of[r] {
            Some(i) => comps[i].push(x),
            None => {
                root_of[r] = Some(comps.len());
                comps.push(vec![x]);
            }
        }
    }
    comps
        .into_iter()
        .map(|states| MixtureComponent {
            family: family.restrict(&states),
            states,
        })
        .collect()
}

/// Rank of the circuit matrix restricted to the columns of a coparallel class.
pub fn rank_of_class(family: &ExponentialFamily, basis: &CircuitBasis, class: &[usize]) -> Result<usize> {
    let mut sorted = class.to_vec();
    sorted.sort_unstable();
    let classes = coparallel_classes(family, basis);
    if !classes.classes.contains(&sorted) {
        return Err(Error::NotACoparallelClass);
    }
    let rows: Vec<Vec<Q>> = basis
        .circuits
        .iter()
        .map(|c| sorted.iter().map(|&x| c.vector[x].clone()).collect())
        .collect();
    Ok(rank_of(&rows, sorted.len()))
}

/// k-subsets of `0..n` in lexicographic order.
pub(crate) struct Combinations {
    n: usize,
    idx: Vec<usize>,
    done: bool,
}

impl Combinations {
    pub(crate) fn new(n: usize, k: usize) -> Self {
        Combinations {
            n,
            idx: (0..k).collect(),
            done: k > n,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.idx.clone();
        let k = self.idx.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.idx[i] < self.n - k + i {
                self.idx[i] += 1;
                for j in i + 1..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use crate::zoo::{direct_sum, partition_family, unique_log2_family_n3, Partition};
    use crate::family::StateSpace;

    fn example() -> ExponentialFamily {
        ExponentialFamily::from_integers(&[1.0, 4.0, 1.0], &[vec![0, 1, 2]]).unwrap()
    }

    fn blocks() -> ExponentialFamily {
        ExponentialFamily::from_integers(&[1.0; 4], &[vec![1, 1, 0, 0], vec![0, 0, 1, 1]]).unwrap()
    }

    fn qv(v: &[i64]) -> Vec<Q> {
        v.iter().map(|&x| q(x)).collect()
    }

    #[test]
    fn combinations_enumerate_in_order() {
        let all: Vec<_> = Combinations::new(4, 2).collect();
        assert_eq!(all.len(), 6);
        assert_eq!(all[0], vec![0, 1]);
        assert_eq!(all[5], vec![2, 3]);
        assert_eq!(Combinations::new(3, 0).count(), 1);
        assert_eq!(Combinations::new(2, 3).count(), 0);
    }

    #[test]
    fn basis_examples() {
        let b = circuit_basis(&blocks()).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b.circuits()[0].vector(), qv(&[1, -1, 0, 0]).as_slice());
        assert_eq!(b.circuits()[1].vector(), qv(&[0, 0, 1, -1]).as_slice());
        let b = circuit_basis(&example()).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b.circuits()[0].vector(), qv(&[1, -2, 1]).as_slice());
        assert_eq!(b.circuits()[0].support(), &[0, 1, 2]);
        let full = ExponentialFamily::from_integers(&[1.0; 3], &[vec![1, 0, 0], vec![0, 1, 0]]).unwrap();
        assert!(circuit_basis(&full).unwrap().is_empty());
    }

    #[test]
    fn budget_is_enforced() {
        let err = circuit_basis_with_budget(&blocks(), 3).unwrap_err();
        assert_eq!(err, Error::StateSpaceTooLarge { budget: 3 });
    }

    #[test]
    fn circuit_through_examples() {
        let c = circuit_through(&example(), &qv(&[1, -2, 1]), 0).unwrap();
        assert_eq!(c.vector(), qv(&[1, -2, 1]).as_slice());
        let c = circuit_through(&blocks(), &qv(&[1, -1, 1, -1]), 0).unwrap();
        assert_eq!(c.vector(), qv(&[1, -1, 0, 0]).as_slice());
        let c = circuit_through(&blocks(), &qv(&[1, -1, -1, 1]), 3).unwrap();
        assert_eq!(c.vector(), qv(&[0, 0, 1, -1]).as_slice());
        assert!(matches!(
            circuit_through(&blocks(), &qv(&[1, 0, -1, 0]), 0),
            Err(Error::NotInNormalSpace { .. })
        ));
        assert_eq!(
            circuit_through(&blocks(), &qv(&[1, -1, 0, 0]), 2).unwrap_err(),
            Error::ZeroAtState(2)
        );
    }

    #[test]
    fn membership_examples() {
        let f = example();
        let b = circuit_basis(&f).unwrap();
        let p = ProbabilityVector::new(vec![1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0]).unwrap();
        let r = closure_membership(&f, &b, &p, DEFAULT_MEMBERSHIP_TOL);
        assert!(r.member);
        assert!(r.residuals[0].log_residual.unwrap() < 1e-12);

        let f = blocks();
        let b = circuit_basis(&f).unwrap();
        assert!(!closure_membership(&f, &b, &ProbabilityVector::point_mass(4, 0), 1e-9).member);
        let half = ProbabilityVector::new(vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        assert!(closure_membership(&f, &b, &half, 1e-9).member);
        let skew = ProbabilityVector::new(vec![2.0 / 3.0, 1.0 / 3.0, 0.0, 0.0]).unwrap();
        assert!(!closure_membership(&f, &b, &skew, 1e-9).member);
    }

    #[test]
    fn zero_rule_boundary_cases() {
        // delta_0 on the three-state family: P0 P2 = 0 while P1^2 = 0
        let f = example();
        let b = circuit_basis(&f).unwrap();
        let r = closure_membership(&f, &b, &ProbabilityVector::point_mass(3, 0), 1e-9);
        assert_eq!(r.residuals[0].zero_match, Some(true));
        assert!(r.member);
        let r = closure_membership(&f, &b, &ProbabilityVector::new(vec![0.5, 0.5, 0.0]).unwrap(), 1e-9);
        assert_eq!(r.residuals[0].zero_match, Some(false));
        assert!(!r.member);
    }

    #[test]
    fn coparallel_examples() {
        let f = blocks();
        let c = coparallel_classes(&f, &circuit_basis(&f).unwrap());
        assert_eq!(c.classes, vec![vec![0, 1], vec![2, 3]]);
        assert!(c.loops.is_empty());
        let f = example();
        let c = coparallel_classes(&f, &circuit_basis(&f).unwrap());
        assert_eq!(c.classes, vec![vec![0, 1, 2]]);
        let full = ExponentialFamily::from_integers(&[1.0; 3], &[vec![1, 0, 0], vec![0, 1, 0]]).unwrap();
        let c = coparallel_classes(&full, &circuit_basis(&full).unwrap());
        assert!(c.classes.is_empty());
        assert_eq!(c.loops, vec![0, 1, 2]);
    }

    #[test]
    fn mixture_examples() {
        let f = blocks();
        let comps = mixture_decomposition(&f, &circuit_basis(&f).unwrap());
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0].states, vec![0, 1]);
        assert_eq!(comps[1].states, vec![2, 3]);
        for c in &comps {
            assert_eq!(circuit_basis(&c.family).unwrap().len(), 1);
        }
        let f = example();
        assert_eq!(mixture_decomposition(&f, &circuit_basis(&f).unwrap()).len(), 1);

        let pair = partition_family(&Partition::from_sizes(&[2]).unwrap(), StateSpace::indexed(2).unwrap()).unwrap();
        let tri = unique_log2_family_n3(&[q(1), q(1), q(-2)]).unwrap();
        let s = direct_sum(&pair, &tri).unwrap();
        let comps = mixture_decomposition(&s, &circuit_basis(&s).unwrap());
        let sizes: Vec<usize> = comps.iter().map(|c| c.states.len()).collect();
        assert_eq!(sizes, vec![2, 3]);
    }

    #[test]
    fn class_rank_examples() {
        let f = blocks();
        let b = circuit_basis(&f).unwrap();
        assert_eq!(rank_of_class(&f, &b, &[0, 1]).unwrap(), 1);
        assert_eq!(rank_of_class(&f, &b, &[1, 2]).unwrap_err(), Error::NotACoparallelClass);
        let f = example();
        let b = circuit_basis(&f).unwrap();
        assert_eq!(rank_of_class(&f, &b, &[0, 1, 2]).unwrap(), 1);
    }

    #[test]
    fn export_format() {
        let b = circuit_basis(&example()).unwrap();
        let s = serde_json::to_string(&b).unwrap();
        assert_eq!(s, r#"[{"support":[0,1,2],"vector":["1","-2","1"]}]"#);
    }
}
