//! Optimality experiments: Carathéodory witnesses, structure of families with
//! maximal divergence `log 2`, one- and zero-dimensional optimality tests,
//! inclusion probes for partition models and the `D(N,k)` scanner.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::{circuit_basis, coparallel_classes, mixture_decomposition};
use crate::divmax::{
    dbar, estimate_max_divergence, local_maximizers, max_divergence_oracle, DEFAULT_TOL,
};
use crate::error::{Error, Result};
use crate::family::{ExponentialFamily, Measure, ProbabilityVector, StateSpace, SufficientStatistics};
use crate::linalg::{rank_of, RatMatrix};
use crate::projection::ri_project;
use crate::rational::{self, Q};
use crate::zoo::{partition_family, Partition};

/// Label carried by every sampling-based report.
pub const EVIDENCE: &str = "empirical evidence";
pub const SCAN_MARGIN: f64 = 1e-4;
pub const PROBE_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub criterion: String,
    pub pass: bool,
    pub tolerance: f64,
    pub detail: String,
}

impl Verdict {
    fn new(criterion: &str, pass: bool, tolerance: f64, detail: String) -> Self {
        Verdict {
            criterion: criterion.to_string(),
            pass,
            tolerance,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(rename = "P")]
    pub p: ProbabilityVector,
    /// `D_E(P)` recomputed by projection.
    pub divergence: f64,
    /// `log N − log(dim + 1)`.
    pub bound: f64,
    pub states: Vec<usize>,
    pub weights: Vec<f64>,
}

/// A distribution with divergence at least `log N − log(dim + 1)`: the
/// uniform moment written as a convex combination of at most `dim + 1`
/// affinely independent vertices of the convex support.
pub fn caratheodory_witness(family: &ExponentialFamily) -> Result<Witness> {
    let n = family.size();
    let uniform = ProbabilityVector::uniform(n);
    let d = ri_project(family, &uniform)?.divergence;
    if d > 1e-9 {
        return Err(Error::UniformNotInFamily(d));
    }
    let ext = family.extended_stats();
    let target: Vec<Q> = ext
        .rows()
        .map(|r| r.iter().fold(Q::zero(), |a, b| a + b) / Q::from_integer(BigInt::from(n)))
        .collect();
    // one state per distinct vertex column
    let mut vertices: Vec<usize> = Vec::new();
    for x in family.convex_support_vertices().states {
        if !vertices.iter().any(|&y| ext.column(y) == ext.column(x)) {
            vertices.push(x);
        }
    }
    let columns: Vec<Vec<Q>> = vertices.iter().map(|&x| ext.column(x)).collect();
    let mut chosen = Vec::new();
    let (idx, lambda) = lex_decomposition(&columns, &target, family.dim() + 1, 0, &mut chosen)
        .expect("the uniform moment lies in the convex support");
    let states: Vec<usize> = idx.iter().map(|&i| vertices[i]).collect();
    let weights: Vec<f64> = lambda.iter().map(rational::to_f64).collect();
    let mut p = vec![0.0; n];
    for (&x, &w) in states.iter().zip(&weights) {
        p[x] += w;
    }
    let p = ProbabilityVector::normalize(p)?;
    let divergence = ri_project(family, &p)?.divergence;
    Ok(Witness {
        p,
        divergence,
        bound: (n as f64).ln() - ((family.dim() + 1) as f64).ln(),
        states,
        weights,
    })
}

/// Lexicographically first set of independent columns whose nonnegative
/// combination equals `target`.
fn lex_decomposition(
    columns: &[Vec<Q>],
    target: &[Q],
    max_size: usize,
    from: usize,
    chosen: &mut Vec<usize>,
) -> Option<(Vec<usize>, Vec<Q>)> {
    if !chosen.is_empty() {
        let m = RatMatrix::from_rows(
            (0..target.len())
                .map(|r| chosen.iter().map(|&c| columns[c][r].clone()).collect())
                .collect(),
            chosen.len(),
        );
        if let Some(lambda) = m.solve(target) {
            if lambda.iter().all(|l| !l.is_negative()) {
                return Some((chosen.clone(), lambda));
            }
        }
    }
    if chosen.len() == max_size {
        return None;
    }
    for c in from..columns.len() {
        chosen.push(c);
        let cols: Vec<Vec<Q>> = chosen.iter().map(|&i| columns[i].clone()).collect();
        if rank_of(&cols, target.len()) == chosen.len() {
            if let Some(found) = lex_decomposition(columns, target, max_size, c + 1, chosen) {
                return Some(found);
            }
        }
        chosen.pop();
    }
    None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqualityCase {
    pub equality: bool,
    pub homogeneous_partition: Option<Partition>,
    pub verdict: String,
}

/// Whether a witness attains the bound, and whether the family is then the
/// partition model of a homogeneous partition.
pub fn equality_case(family: &ExponentialFamily, witness: &Witness, max_d: f64, tol: f64) -> EqualityCase {
    let equality = (max_d - witness.bound).abs() <= tol;
    let partition = family.is_partition_family().filter(Partition::is_homogeneous);
    let verdict = match (equality, &partition) {
        (true, Some(_)) => "partition model of a homogeneous partition",
        (true, None) => "bound attained but the family is not a homogeneous partition model",
        (false, _) => "strict inequality",
    };
    EqualityCase {
        equality,
        homogeneous_partition: partition,
        verdict: verdict.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Log2Report {
    pub max_d: f64,
    pub hypothesis_met: bool,
    pub size: usize,
    pub dim: usize,
    pub dim_lower_bound: usize,
    pub classes: Vec<Vec<usize>>,
    pub loops: Vec<usize>,
    pub components: Vec<Vec<usize>>,
    pub partition: Option<Partition>,
    pub verdicts: Vec<Verdict>,
    pub summary: String,
}

/// Structural consequences of `max D_E = log 2`.
pub fn check_log2_structure(family: &ExponentialFamily, tol: f64, starts: usize, seed: u64) -> Result<Log2Report> {
    let n = family.size();
    let max_d = estimate_max_divergence(family, starts, seed)?;
    let log2 = 2f64.ln();
    let hypothesis_met = (max_d - log2).abs() <= tol;
    let dim = family.dim();
    let dim_lower_bound = n.div_ceil(2).saturating_sub(1);
    let mut report = Log2Report {
        max_d,
        hypothesis_met,
        size: n,
        dim,
        dim_lower_bound,
        classes: Vec::new(),
        loops: Vec::new(),
        components: Vec::new(),
        partition: None,
        verdicts: Vec::new(),
        summary: String::new(),
    };
    if !hypothesis_met {
        report.summary = "log2 hypothesis not met".into();
        return Ok(report);
    }
    let basis = circuit_basis(family)?;
    let cop = coparallel_classes(family, &basis);
    report.classes = cop.classes.clone();
    report.loops = cop.loops.clone();
    report.components = mixture_decomposition(family, &basis).into_iter().map(|c| c.states).collect();
    report.partition = family.is_partition_family();

    report.verdicts.push(Verdict::new(
        "dimension bound",
        dim >= dim_lower_bound,
        0.0,
        format!("dim {dim}, lower bound {dim_lower_bound}"),
    ));
    if dim == dim_lower_bound {
        let sizes: Vec<usize> = cop.classes.iter().map(Vec::len).collect();
        if n.is_multiple_of(2) {
            let pairs = cop.loops.is_empty() && sizes.iter().all(|&s| s == 2);
            let pair_model = report
                .partition
                .as_ref()
                .is_some_and(|p| p.blocks().iter().all(|b| b.len() == 2));
            report.verdicts.push(Verdict::new(
                "even case: coparallel pairs",
                pairs,
                0.0,
                format!("class sizes {sizes:?}"),
            ));
            report.verdicts.push(Verdict::new(
                "even case: partition model into pairs",
                pair_model,
                0.0,
                format!("partition {:?}", report.partition.as_ref().map(Partition::blocks)),
            ));
        } else {
            let triples = sizes.iter().filter(|&&s| s == 3).count();
            let shape = cop.loops.is_empty() && triples <= 1 && sizes.iter().all(|&s| s == 2 || s == 3);
            let mut comps = report.components.clone();
            let mut classes = cop.classes.clone();
            comps.sort();
            classes.sort();
            report.verdicts.push(Verdict::new(
                "odd case: pairs and at most one triple",
                shape,
                0.0,
                format!("class sizes {sizes:?}"),
            ));
            report.verdicts.push(Verdict::new(
                "odd case: mixture of the classes",
                comps == classes,
                0.0,
                format!("components {comps:?}"),
            ));
        }
    }
    if family.nu().is_uniform() {
        report.verdicts.push(Verdict::new(
            "uniform reference: partition model",
            report.partition.is_some(),
            0.0,
            format!("partition {:?}", report.partition.as_ref().map(Partition::blocks)),
        ));
    }
    report.summary = if report.partition.is_some() {
        "partition model confirmed".into()
    } else if report.verdicts.iter().all(|v| v.pass) {
        "structure confirmed, not a partition model".into()
    } else {
        "structure check failed".into()
    };
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneDimReport {
    /// Weight of `u⁺` in `P_E = μ u⁺ + (1 − μ) u⁻`, with `u` oriented so
    /// that `D̄(u) ≤ 0`.
    pub mu: f64,
    pub lower: f64,
    pub upper: f64,
    pub optimal: bool,
    pub u: Vec<f64>,
}

/// Whether a one-dimensional family on three states has maximal divergence
/// at most `d`, i.e. `e^{−D} ≤ μ ≤ 1 − e^{−D}`.
pub fn one_dim_optimality(family: &ExponentialFamily, d: f64) -> Result<OneDimReport> {
    if family.dim() != 1 || family.size() != 3 {
        return Err(Error::NotOneDimensional {
            dim: family.dim(),
            size: family.size(),
        });
    }
    let raw = family.normal_basis_f64().remove(0);
    let plus: f64 = raw.iter().filter(|v| **v > 0.0).sum();
    let mut u: Vec<f64> = raw.iter().map(|v| v / plus).collect();
    if dbar(family, &u)? > 0.0 {
        u.iter_mut().for_each(|v| *v = -*v);
    }
    let up = ProbabilityVector::normalize(u.iter().map(|v| v.max(0.0)).collect())?;
    let pe = ri_project(family, &up)?.point;
    let mu: f64 = (0..3).filter(|&x| u[x] > 0.0).map(|x| pe[x]).sum();
    let lower = (-d).exp();
    let upper = 1.0 - lower;
    let slack = 1e-9;
    Ok(OneDimReport {
        mu,
        lower,
        upper,
        optimal: mu >= lower - slack && mu <= upper + slack,
        u,
    })
}

/// `max_x −log ν_x ≤ D` for the normalized reference measure: the divergence
/// from a single distribution is maximized at a vertex.
pub fn zero_dim_optimality(nu: &Measure, d: f64) -> bool {
    zero_dim_max(nu) <= d + 1e-12
}

pub fn zero_dim_max(nu: &Measure) -> f64 {
    nu.normalized().iter().map(|v| -v.ln()).fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub dim: usize,
    pub reference: String,
    pub max_d: f64,
    pub exceeds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionReport {
    pub coarseness: usize,
    pub smallest_block: usize,
    pub max_d: f64,
    pub max_d_matches: bool,
    pub margin: f64,
    pub probes: Vec<Probe>,
    pub all_probes_exceed: bool,
    pub label: String,
}

/// Probes random proper subfamilies of a partition model with one block of
/// size `l ≤ c` and all others of size `c`.
pub fn inclusion_optimal_partition_check(
    partition: &Partition,
    n_probes: usize,
    seed: u64,
    starts: usize,
) -> Result<InclusionReport> {
    let n = partition.size();
    let c = partition.coarseness();
    let mut sizes: Vec<usize> = partition.blocks().iter().map(Vec::len).collect();
    sizes.sort_unstable();
    let smaller = sizes.iter().filter(|&&s| s < c).count();
    if c >= n || smaller > 1 {
        return Err(Error::ShapeMismatch(format!("block sizes {sizes:?}")));
    }
    let family = partition_family(partition, StateSpace::indexed(n)?)?;
    let max_d = estimate_max_divergence(&family, starts, seed)?;
    let target = (c as f64).ln();
    let sub_dim = family.dim() - 1;
    let blocks = partition.blocks();

    let probes: Vec<Result<Probe>> = (0..n_probes)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64 + 1);
            let member = i % 2 == 1;
            let nu: Vec<f64> = if member {
                let w: Vec<f64> = blocks
                    .iter()
                    .map(|_| StandardNormal.sample(&mut rng))
                    .map(|g: f64| g.exp())
                    .collect();
                (0..n).map(|x| w[blocks.iter().position(|b| b.contains(&x)).unwrap()]).collect()
            } else {
                vec![1.0; n]
            };
            let max_d = if sub_dim == 0 {
                zero_dim_max(&Measure::new(nu)?)
            } else {
                let rows: Vec<Vec<Q>> = (0..sub_dim)
                    .map(|_| {
                        let g: Vec<Q> = blocks.iter().map(|_| gaussian_rational(&mut rng)).collect();
                        (0..n)
                            .map(|x| g[blocks.iter().position(|b| b.contains(&x)).unwrap()].clone())
                            .collect()
                    })
                    .collect();
                let sub = ExponentialFamily::build(
                    StateSpace::indexed(n)?,
                    Measure::new(nu)?,
                    SufficientStatistics::new(rows, n)?,
                )?;
                estimate_max_divergence(&sub, starts, seed.wrapping_add(i as u64))?
            };
            Ok(Probe {
                dim: sub_dim,
                reference: if member { "member" } else { "uniform" }.into(),
                max_d,
                exceeds: max_d > target + PROBE_MARGIN,
            })
        })
        .collect();
    let probes = probes.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(InclusionReport {
        coarseness: c,
        smallest_block: sizes[0],
        max_d,
        max_d_matches: (max_d - target).abs() <= 1e-6,
        margin: PROBE_MARGIN,
        all_probes_exceed: probes.iter().all(|p| p.exceeds),
        probes,
        label: EVIDENCE.into(),
    })
}

fn gaussian_rational<R: Rng>(rng: &mut R) -> Q {
    let g: f64 = StandardNormal.sample(rng);
    Q::new(BigInt::from((g * 1000.0).round() as i64), BigInt::from(1000))
}

/// A `k`-dimensional family on `n` states with random rational statistics
/// (denominator 1000); uniform reference measure when `uniform` is set and a
/// log-normal one otherwise.
pub fn random_family<R: Rng>(n: usize, k: usize, uniform: bool, rng: &mut R) -> ExponentialFamily {
    assert!(k < n, "dimension must be below the number of states");
    loop {
        let rows: Vec<Vec<Q>> = (0..k).map(|_| (0..n).map(|_| gaussian_rational(rng)).collect()).collect();
        let nu: Vec<f64> = if uniform {
            vec![1.0; n]
        } else {
            (0..n).map(|_| StandardNormal.sample(rng)).map(|g: f64| g.exp()).collect()
        };
        let stats = SufficientStatistics::new(rows, n).expect("row lengths");
        let family = ExponentialFamily::build(
            StateSpace::indexed(n).expect("nonempty"),
            Measure::new(nu).expect("finite"),
            stats,
        )
        .expect("valid family");
        if family.dim() == k {
            return family;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub family_id: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub k: usize,
    #[serde(rename = "maxD")]
    pub max_d: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recheck {
    pub family_id: String,
    pub estimate: f64,
    pub oracle: f64,
    pub confirmed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    #[serde(rename = "N")]
    pub n: usize,
    pub k: usize,
    pub samples: usize,
    pub seed: u64,
    pub conjectured: f64,
    pub partition_sizes: Vec<usize>,
    pub best_partition: f64,
    pub sampled_min: f64,
    pub margin: f64,
    /// Samples whose estimate undercut the best partition model by more
    /// than the margin; each one is rechecked with the brute-force oracle.
    pub alerts: Vec<Recheck>,
    pub beaten: bool,
    pub rows: Vec<ScanRow>,
    pub label: String,
}

/// Near-equal block sizes for `blocks` blocks on `n` states.
pub fn near_equal_sizes(n: usize, blocks: usize) -> Vec<usize> {
    (0..blocks).map(|i| n / blocks + usize::from(i < n % blocks)).collect()
}

pub fn scan_conjecture(n: usize, k: usize, samples: usize, seed: u64, starts: usize) -> Result<ScanReport> {
    if n == 0 || n > 8 || k >= n {
        return Err(Error::InvalidStateSpace(format!("scan needs N <= 8 and k < N (got N={n}, k={k})")));
    }
    let conjectured = (n.div_ceil(k + 1) as f64).ln();
    let sizes = near_equal_sizes(n, k + 1);
    let partition = Partition::from_sizes(&sizes)?;
    let pfam = partition_family(&partition, StateSpace::indexed(n)?)?;
    let best_partition = estimate_max_divergence(&pfam, starts, seed)?;

    let estimates: Vec<Result<(ExponentialFamily, f64)>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64 + 1);
            let family = random_family(n, k, true, &mut rng);
            let d = estimate_max_divergence(&family, starts, seed.wrapping_add(i as u64))?;
            Ok((family, d))
        })
        .collect();
    let mut rows = Vec::with_capacity(samples + 1);
    rows.push(ScanRow {
        family_id: format!("partition-{}", sizes.iter().map(usize::to_string).collect::<Vec<_>>().join("-")),
        n,
        k,
        max_d: best_partition,
        bound: conjectured,
    });
    let mut alerts = Vec::new();
    let mut sampled_min = f64::INFINITY;
    for (i, e) in estimates.into_iter().enumerate() {
        let (family, d) = e?;
        let id = format!("random-{n}-{k}-{i}");
        sampled_min = sampled_min.min(d);
        if d < best_partition - SCAN_MARGIN {
            let oracle = max_divergence_oracle(&family, 0.05)?.value;
            alerts.push(Recheck {
                family_id: id.clone(),
                estimate: d,
                oracle,
                confirmed: oracle.max(d) < best_partition - SCAN_MARGIN,
            });
        }
        rows.push(ScanRow {
            family_id: id,
            n,
            k,
            max_d: d,
            bound: conjectured,
        });
    }
    Ok(ScanReport {
        n,
        k,
        samples,
        seed,
        conjectured,
        partition_sizes: sizes,
        best_partition,
        sampled_min,
        margin: SCAN_MARGIN,
        beaten: alerts.iter().any(|a| a.confirmed),
        alerts,
        rows,
        label: EVIDENCE.into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySummary {
    #[serde(rename = "N")]
    pub n: usize,
    pub dim: usize,
    pub normal_dim: usize,
    pub uniform_reference: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalityReport {
    pub family: FamilySummary,
    pub max_d: f64,
    /// `log N − log(dim + 1)`.
    pub bound: f64,
    pub witnesses: Vec<Witness>,
    pub equality_case: Option<EqualityCase>,
    pub structure: Option<Log2Report>,
    pub verdicts: Vec<Verdict>,
}

/// Structure checks for a single family.
pub fn verify_family(family: &ExponentialFamily, starts: usize, seed: u64, tol: f64) -> Result<OptimalityReport> {
    let n = family.size();
    let summary = FamilySummary {
        n,
        dim: family.dim(),
        normal_dim: family.normal_dim(),
        uniform_reference: family.nu().is_uniform(),
    };
    let bound = (n as f64).ln() - ((family.dim() + 1) as f64).ln();
    let mut verdicts = Vec::new();
    if family.is_full_simplex() {
        verdicts.push(Verdict::new("closure is the simplex", true, 0.0, "max D = 0".into()));
        return Ok(OptimalityReport {
            family: summary,
            max_d: 0.0,
            bound,
            witnesses: Vec::new(),
            equality_case: None,
            structure: None,
            verdicts,
        });
    }
    let report = local_maximizers(family, starts, seed, DEFAULT_TOL)?;
    let max_d = report.global_estimate;
    verdicts.push(Verdict::new(
        "max D >= log 2",
        max_d >= 2f64.ln() - tol,
        tol,
        format!("estimate {max_d}"),
    ));
    let mut witnesses = Vec::new();
    let mut equality = None;
    match caratheodory_witness(family) {
        Ok(w) => {
            verdicts.push(Verdict::new(
                "witness bound",
                w.divergence >= w.bound - 1e-7,
                1e-7,
                format!("D_E(P) = {}, bound {}", w.divergence, w.bound),
            ));
            equality = Some(equality_case(family, &w, max_d, 1e-6));
            witnesses.push(w);
        }
        Err(Error::UniformNotInFamily(_)) => {}
        Err(e) => return Err(e),
    }
    let log2 = if (max_d - 2f64.ln()).abs() <= tol {
        let s = check_log2_structure(family, tol, starts, seed)?;
        verdicts.extend(s.verdicts.iter().cloned());
        Some(s)
    } else {
        None
    };
    Ok(OptimalityReport {
        family: summary,
        max_d,
        bound,
        witnesses,
        equality_case: equality,
        structure: log2,
        verdicts,
    })
}
