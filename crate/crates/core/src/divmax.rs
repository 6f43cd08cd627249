//! Maximizing the divergence `D_E(P) = D(P‖P_E)` from a family.
//!
//! The search runs on the boundary `∂U` of the unit ball of the normal space,
//! where `D̄(u) = Σ u log(|u|/ν)` is positively homogeneous. Local maximizers
//! `u` of `D̄` correspond to local maximizers `u⁺` of `D_E` with
//! `D_E(u⁺) = log(1 + exp D̄(u))`, and every candidate is checked against
//! that relation through an independent projection.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::{circuit_basis, Combinations};
use crate::error::{Error, Result};
use crate::family::{ExponentialFamily, ProbabilityVector};
use crate::linalg::rank_of;
use crate::projection::{divergence, ri_project, FaceProjector, ProjectionConfig};
use crate::rational::Q;
use crate::zoo::Partition;

pub const DEFAULT_STARTS: usize = 64;
pub const DEFAULT_TOL: f64 = 1e-9;
/// Largest accepted `|D_E(u⁺) − log(1 + exp D̄(u))|`.
pub const DUALITY_TOL: f64 = 1e-7;
/// Total-variation distance below which two maximizers are merged.
pub const MERGE_TOL: f64 = 1e-6;
pub const ORACLE_BUDGET: u64 = 5_000_000;

const NORMAL_TOL: f64 = 1e-8;
const ASCENT_ITERS: usize = 400;
const POLISH_ITERS: usize = 100;

/// A point of `∂U`: `u ∈ 𝒩` with `u⁺(𝒳) = u⁻(𝒳) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KernelDirection(Vec<f64>);

impl KernelDirection {
    pub fn new(family: &ExponentialFamily, u: Vec<f64>) -> Result<Self> {
        check_normal(family, &u)?;
        let plus: f64 = u.iter().filter(|v| **v > 0.0).sum();
        if (plus - 1.0).abs() > NORMAL_TOL {
            return Err(Error::InvalidMeasure(format!("positive part has mass {plus}, expected 1")));
        }
        Ok(KernelDirection(u))
    }

    /// Rescales a nonzero normal vector onto `∂U`.
    pub fn normalize(family: &ExponentialFamily, u: Vec<f64>) -> Result<Self> {
        check_normal(family, &u)?;
        let plus: f64 = u.iter().filter(|v| **v > 0.0).sum();
        if plus <= 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(KernelDirection(u.into_iter().map(|v| v / plus).collect()))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn plus(&self) -> Vec<f64> {
        self.0.iter().map(|v| v.max(0.0)).collect()
    }

    pub fn minus(&self) -> Vec<f64> {
        self.0.iter().map(|v| (-v).max(0.0)).collect()
    }

    pub fn neg(&self) -> KernelDirection {
        KernelDirection(self.0.iter().map(|v| -v).collect())
    }
}

fn check_normal(family: &ExponentialFamily, u: &[f64]) -> Result<()> {
    if u.len() != family.size() {
        return Err(Error::DimensionMismatch {
            what: "normal vector length",
            expected: family.size(),
            found: u.len(),
        });
    }
    let residual = family.normal_residual(u);
    if residual > NORMAL_TOL {
        return Err(Error::NotInNormalSpace { residual });
    }
    Ok(())
}

pub fn dbar(family: &ExponentialFamily, u: &[f64]) -> Result<f64> {
    check_normal(family, u)?;
    Ok(dbar_unchecked(family.log_nu(), u))
}

fn dbar_unchecked(log_nu: &[f64], u: &[f64]) -> f64 {
    u.iter()
        .zip(log_nu)
        .filter(|(v, _)| **v != 0.0)
        .map(|(v, ln)| v * (v.abs().ln() - ln))
        .sum()
}

/// `Ψ⁺(u) = u⁺`, the kernel distribution of `u`.
pub fn psi_plus(u: &KernelDirection) -> ProbabilityVector {
    ProbabilityVector::normalize(u.plus()).expect("positive part of a point of ∂U")
}

/// `Ψ_E(P) = (P − P_E) / (P − P_E)⁺(𝒳)`.
pub fn psi_family(family: &ExponentialFamily, p: &ProbabilityVector) -> Result<KernelDirection> {
    let proj = ri_project(family, p)?;
    if proj.divergence <= 1e-10 {
        return Err(Error::PointInClosure);
    }
    let diff: Vec<f64> = p.values().iter().zip(proj.point.values()).map(|(a, b)| a - b).collect();
    let plus: f64 = diff.iter().filter(|v| **v > 0.0).sum();
    if plus <= 0.0 {
        return Err(Error::PointInClosure);
    }
    Ok(KernelDirection(diff.into_iter().map(|v| v / plus).collect()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalMaximum {
    #[serde(rename = "P")]
    pub p: ProbabilityVector,
    pub u: KernelDirection,
    #[serde(rename = "D_value")]
    pub d_value: f64,
    #[serde(rename = "Dbar_value")]
    pub dbar_value: f64,
    pub duality_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodTrace {
    pub starts: usize,
    pub seed: u64,
    /// Circuit vectors and their negatives tried as extra deterministic starts.
    pub circuit_starts: usize,
    /// Ascent plus polishing iterations per start, random starts first.
    pub iterations: Vec<usize>,
    /// Converged candidates whose duality gap exceeded the tolerance.
    pub rejected: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximizerReport {
    pub local_maxima: Vec<LocalMaximum>,
    pub global_estimate: f64,
    pub method_trace: MethodTrace,
}

impl MaximizerReport {
    /// Entries within `tol` of the global estimate.
    pub fn global_maximizers(&self, tol: f64) -> impl Iterator<Item = &LocalMaximum> {
        self.local_maxima
            .iter()
            .filter(move |m| m.d_value >= self.global_estimate - tol)
    }
}

struct Candidate {
    maximum: LocalMaximum,
    iterations: usize,
}

pub fn local_maximizers(family: &ExponentialFamily, n_starts: usize, seed: u64, tol: f64) -> Result<MaximizerReport> {
    if family.is_full_simplex() {
        return Err(Error::ZeroNormalSpace);
    }
    let basis = orthonormal_normal_basis(family);
    let m = basis.ncols();

    let mut starts: Vec<Vec<f64>> = (0..n_starts)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            (0..m).map(|_| StandardNormal.sample(&mut rng)).collect()
        })
        .collect();
    let circuits = circuit_basis(family).map(|b| b.circuits().to_vec()).unwrap_or_default();
    let mut circuit_starts = 0;
    for c in &circuits {
        let v = DVector::from_vec(c.to_f64());
        let coords = basis.tr_mul(&v);
        starts.push(coords.iter().copied().collect());
        starts.push(coords.iter().map(|x| -x).collect());
        circuit_starts += 2;
    }

    let candidates: Vec<Option<Candidate>> = starts
        .par_iter()
        .map(|c0| run_start(family, &basis, c0, tol))
        .collect();

    let mut iterations = Vec::with_capacity(candidates.len());
    let mut accepted: Vec<LocalMaximum> = Vec::new();
    let mut rejected = 0;
    for cand in candidates {
        let Some(cand) = cand else {
            iterations.push(0);
            rejected += 1;
            continue;
        };
        iterations.push(cand.iterations);
        if cand.maximum.duality_gap > DUALITY_TOL {
            rejected += 1;
            continue;
        }
        if !accepted
            .iter()
            .any(|a| a.p.total_variation(&cand.maximum.p) <= MERGE_TOL)
        {
            accepted.push(cand.maximum);
        }
    }
    accepted.sort_by(|a, b| {
        b.d_value
            .partial_cmp(&a.d_value)
            .unwrap()
            .then_with(|| lex_cmp(a.p.values(), b.p.values()))
    });
    let global_estimate = accepted.iter().map(|a| a.d_value).fold(f64::NEG_INFINITY, f64::max);
    Ok(MaximizerReport {
        local_maxima: accepted,
        global_estimate,
        method_trace: MethodTrace {
            starts: n_starts,
            seed,
            circuit_starts,
            iterations,
            rejected,
            tol,
        },
    })
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match y.partial_cmp(x).unwrap() {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    std::cmp::Ordering::Equal
}

/// Global maximum estimate; zero when the closure is the whole simplex.
pub fn estimate_max_divergence(family: &ExponentialFamily, n_starts: usize, seed: u64) -> Result<f64> {
    if family.is_full_simplex() {
        return Ok(0.0);
    }
    Ok(local_maximizers(family, n_starts, seed, DEFAULT_TOL)?.global_estimate)
}

fn orthonormal_normal_basis(family: &ExponentialFamily) -> DMatrix<f64> {
    orthonormal_columns(&family.normal_basis_f64(), family.size())
}

fn orthonormal_columns(vectors: &[Vec<f64>], n: usize) -> DMatrix<f64> {
    let m = vectors.len();
    let raw = DMatrix::from_fn(n, m, |i, j| vectors[j][i]);
    raw.qr().q().columns(0, m).into_owned()
}

fn point_on_boundary(basis: &DMatrix<f64>, c: &[f64]) -> Option<Vec<f64>> {
    let u = basis * DVector::from_column_slice(c);
    let l1: f64 = u.iter().map(|v| v.abs()).sum();
    if !l1.is_finite() || l1 <= 1e-300 {
        return None;
    }
    Some(u.iter().map(|v| 2.0 * v / l1).collect())
}

/// Projected ascent of `D̄` in the coordinates of `basis`, followed by a
/// stratum restriction and fixed-point polishing `u ← Ψ_E(u⁺)`.
fn run_start(family: &ExponentialFamily, basis: &DMatrix<f64>, c0: &[f64], tol: f64) -> Option<Candidate> {
    let log_nu = family.log_nu();
    let (mut u, mut iters) = ascend(log_nu, basis, c0, tol)?;

    // restrict to the stratum of (numerically) vanishing coordinates
    let peak = u.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let support: Vec<usize> = (0..u.len()).filter(|&x| u[x].abs() > 1e-7 * peak).collect();
    if support.len() < u.len() {
        if let Some(sub) = stratum_basis(family, &support) {
            let coords = sub.tr_mul(&DVector::from_column_slice(&u));
            if let Some((v, k)) = ascend(log_nu, &sub, coords.as_slice(), tol) {
                if dbar_unchecked(log_nu, &v) >= dbar_unchecked(log_nu, &u) - 1e-9 {
                    u = v;
                }
                iters += k;
            }
        }
    }

    let config = ProjectionConfig::default();
    let mut projectors: Vec<(Vec<usize>, FaceProjector)> = Vec::new();
    let mut project = |p: &ProbabilityVector| {
        let supp = p.support();
        let i = match projectors.iter().position(|(s, _)| *s == supp) {
            Some(i) => i,
            None => {
                let fp = FaceProjector::for_support(family, &supp);
                projectors.push((supp, fp));
                projectors.len() - 1
            }
        };
        projectors[i].1.project(p, &config)
    };

    let mut best: Option<(Vec<f64>, ProbabilityVector, f64)> = None;
    for _ in 0..POLISH_ITERS {
        let p = ProbabilityVector::normalize(u.iter().map(|v| v.max(0.0)).collect()).ok()?;
        let proj = project(&p).ok()?;
        iters += 1;
        let diff: Vec<f64> = p.values().iter().zip(proj.point.values()).map(|(a, b)| a - b).collect();
        let plus: f64 = diff.iter().filter(|v| **v > 0.0).sum();
        if plus <= 0.0 {
            return None;
        }
        let next: Vec<f64> = diff.iter().map(|v| v / plus).collect();
        let delta: f64 = next.iter().zip(&u).map(|(a, b)| (a - b).abs()).sum();
        let improved = best.as_ref().is_none_or(|(_, _, d)| proj.divergence >= *d - 1e-12);
        if improved {
            best = Some((u.clone(), p, proj.divergence));
        }
        u = next;
        if delta < 1e-13 {
            break;
        }
    }
    let (_, _, _) = best.as_ref()?;
    // the final iterate is a fixed point when the loop converged
    let p = ProbabilityVector::normalize(u.iter().map(|v| v.max(0.0)).collect()).ok()?;
    let proj = project(&p).ok()?;
    let d_value = divergence(p.values(), proj.point.values());
    let dbar_value = dbar_unchecked(log_nu, &u);
    let duality_gap = (d_value - log1p_exp(dbar_value)).abs();
    Some(Candidate {
        maximum: LocalMaximum {
            p,
            u: KernelDirection(u),
            d_value,
            dbar_value,
            duality_gap,
        },
        iterations: iters,
    })
}

fn log1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Orthonormal basis of the normal vectors supported on `support`.
fn stratum_basis(family: &ExponentialFamily, support: &[usize]) -> Option<DMatrix<f64>> {
    let ext = family.extended_stats().select_columns(support);
    let kernel = ext.kernel();
    if kernel.is_empty() {
        return None;
    }
    let n = family.size();
    let vectors: Vec<Vec<f64>> = kernel
        .iter()
        .map(|k| {
            let mut v = vec![0.0; n];
            for (&x, val) in support.iter().zip(k) {
                v[x] = crate::rational::to_f64(val);
            }
            v
        })
        .collect();
    Some(orthonormal_columns(&vectors, n))
}

/// Backtracking ascent of `D̄(Ec)/(|Ec|₁/2)` over coordinates `c`; returns the
/// final point rescaled onto `∂U`.
fn ascend(log_nu: &[f64], basis: &DMatrix<f64>, c0: &[f64], tol: f64) -> Option<(Vec<f64>, usize)> {
    let mut u = point_on_boundary(basis, c0)?;
    let mut c: Vec<f64> = basis.tr_mul(&DVector::from_column_slice(&u)).iter().copied().collect();
    let mut f = dbar_unchecked(log_nu, &u);
    let mut step: f64 = 1.0;
    let mut iters = 0;
    for _ in 0..ASCENT_ITERS {
        iters += 1;
        let g: Vec<f64> = u
            .iter()
            .zip(log_nu)
            .map(|(v, ln)| {
                if *v == 0.0 {
                    0.0
                } else {
                    v.abs().ln() - ln - 0.5 * f * v.signum()
                }
            })
            .collect();
        let gc = basis.tr_mul(&DVector::from_vec(g));
        let gnorm = gc.norm();
        if !gnorm.is_finite() || gnorm <= tol {
            break;
        }
        let mut accepted = false;
        step = (step * 4.0).min(1e3);
        while step > 1e-14 {
            let cand: Vec<f64> = c.iter().zip(gc.iter()).map(|(a, b)| a + step * b).collect();
            if let Some(v) = point_on_boundary(basis, &cand) {
                let fv = dbar_unchecked(log_nu, &v);
                if fv >= f + 1e-4 * step * gnorm * gnorm {
                    u = v;
                    c = basis.tr_mul(&DVector::from_column_slice(&u)).iter().copied().collect();
                    let gain = fv - f;
                    f = fv;
                    accepted = true;
                    if gain <= tol * 1e-3 {
                        return Some((u, iters));
                    }
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Some((u, iters))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub value: f64,
    pub argmax: ProbabilityVector,
    pub supports: usize,
    pub evaluations: u64,
}

/// Brute-force maximum of `D_E`: grid search over the simplices of all
/// supports of at most `dim + 1` states with linearly independent extended
/// columns, each best cell refined by exponentiated-gradient ascent.
pub fn max_divergence_oracle(family: &ExponentialFamily, grid_step: f64) -> Result<OracleResult> {
    max_divergence_oracle_with_budget(family, grid_step, ORACLE_BUDGET)
}

pub fn max_divergence_oracle_with_budget(
    family: &ExponentialFamily,
    grid_step: f64,
    budget: u64,
) -> Result<OracleResult> {
    let n = family.size();
    if family.is_full_simplex() {
        return Ok(OracleResult {
            value: 0.0,
            argmax: ProbabilityVector::uniform(n),
            supports: 0,
            evaluations: 0,
        });
    }
    let cells = (1.0 / grid_step).round().max(1.0) as usize;
    let columns: Vec<Vec<Q>> = (0..n).map(|x| family.extended_stats().column(x)).collect();
    let rows = columns[0].len();
    let mut supports = Vec::new();
    let mut total: u64 = 0;
    for k in 1..=(family.dim() + 1).min(n) {
        for s in Combinations::new(n, k) {
            let cols: Vec<Vec<Q>> = s.iter().map(|&x| columns[x].clone()).collect();
            if rank_of(&cols, rows) == k {
                total = total.saturating_add(binomial(cells.saturating_sub(1), k - 1).max(1));
                if total > budget {
                    return Err(Error::BudgetExceeded(total));
                }
                supports.push(s);
            }
        }
    }
    let config = ProjectionConfig::default();
    let results: Vec<Result<(f64, ProbabilityVector)>> = supports
        .par_iter()
        .map(|s| search_support(family, s, cells, &config))
        .collect();
    let mut best: Option<(f64, ProbabilityVector)> = None;
    for r in results {
        let (v, p) = r?;
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            best = Some((v, p));
        }
    }
    let (value, argmax) = best.expect("at least one support");
    Ok(OracleResult {
        value,
        argmax,
        supports: supports.len(),
        evaluations: total,
    })
}

fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u64 = 1;
    for i in 0..k {
        r = r.saturating_mul((n - i) as u64) / (i as u64 + 1);
    }
    r
}

fn search_support(
    family: &ExponentialFamily,
    support: &[usize],
    cells: usize,
    config: &ProjectionConfig,
) -> Result<(f64, ProbabilityVector)> {
    let n = family.size();
    let k = support.len();
    let projector = FaceProjector::for_support(family, support);
    let embed = |w: &[f64]| -> ProbabilityVector {
        let mut v = vec![0.0; n];
        for (&x, &p) in support.iter().zip(w) {
            v[x] = p;
        }
        ProbabilityVector::normalize(v).expect("grid weights")
    };
    let eval = |w: &[f64]| -> Result<f64> {
        let p = embed(w);
        Ok(projector.project(&p, config)?.divergence)
    };
    let mut best_w = vec![1.0 / k as f64; k];
    let mut best = eval(&best_w)?;
    if k > 1 && cells >= k {
        let mut parts = vec![1usize; k];
        parts[k - 1] = cells - (k - 1);
        loop {
            let w: Vec<f64> = parts.iter().map(|&c| c as f64 / cells as f64).collect();
            let v = eval(&w)?;
            if v > best {
                best = v;
                best_w = w;
            }
            if !next_composition(&mut parts) {
                break;
            }
        }
    }
    if k > 1 {
        let (w, v) = refine(&projector, support, best_w, best, config)?;
        best_w = w;
        best = v;
    }
    Ok((best, embed(&best_w)))
}

/// Next composition of the same total into positive parts, in
/// lexicographic order.
fn next_composition(parts: &mut [usize]) -> bool {
    let k = parts.len();
    if k < 2 {
        return false;
    }
    let mut tail = parts[k - 1];
    for i in (0..k - 1).rev() {
        if tail > k - 1 - i {
            parts[i] += 1;
            for p in &mut parts[i + 1..k - 1] {
                *p = 1;
            }
            parts[k - 1] = tail - 1 - (k - 2 - i);
            return true;
        }
        tail += parts[i];
    }
    false
}

/// Exponentiated-gradient ascent of `D_E` on the simplex of `support`; the
/// gradient of `D_E` at `P` is `log(P/P_E)` up to constants.
fn refine(
    projector: &FaceProjector,
    support: &[usize],
    mut w: Vec<f64>,
    mut value: f64,
    config: &ProjectionConfig,
) -> Result<(Vec<f64>, f64)> {
    let n = projector.family().size();
    let project = |w: &[f64]| -> Result<(f64, Vec<f64>)> {
        let mut v = vec![0.0; n];
        for (&x, &p) in support.iter().zip(w) {
            v[x] = p;
        }
        let p = ProbabilityVector::normalize(v)?;
        let r = projector.project(&p, config)?;
        Ok((r.divergence, support.iter().map(|&x| r.point[x]).collect()))
    };
    let (_, mut pe) = project(&w)?;
    let mut eta: f64 = 1.0;
    for _ in 0..300 {
        let grad: Vec<f64> = w.iter().zip(&pe).map(|(a, b)| (a / b).ln()).collect();
        let mean: f64 = grad.iter().zip(&w).map(|(g, a)| g * a).sum();
        let spread = grad.iter().zip(&w).map(|(g, a)| a * (g - mean).powi(2)).sum::<f64>();
        if spread < 1e-18 {
            break;
        }
        let mut improved = false;
        eta = (eta * 2.0).min(64.0);
        while eta > 1e-10 {
            let raw: Vec<f64> = w.iter().zip(&grad).map(|(a, g)| a * (eta * (g - mean)).exp()).collect();
            let z: f64 = raw.iter().sum();
            let cand: Vec<f64> = raw.iter().map(|v| (v / z).max(1e-300)).collect();
            let (v, pc) = project(&cand)?;
            if v > value {
                improved = v - value > 1e-15;
                w = cand;
                value = v;
                pe = pc;
                break;
            }
            eta *= 0.5;
        }
        if !improved {
            break;
        }
    }
    Ok((w, value))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalityReport {
    pub support: Vec<usize>,
    /// `max |v(supp u)|` over an orthonormal basis `v` of the normal space.
    pub max_violation: f64,
    /// Only when `D̄(u) = 0`: `max |Σ_{x ∉ supp u} v(x) log(|v(x)|/ν_x)|`
    /// over the probe vectors `v`.
    pub zero_level_violation: Option<f64>,
    pub pass: bool,
}

/// First-order conditions at a local maximizer. Every normal vector sums to
/// zero over the support of `u`. When `D̄(u) = 0` also
/// `Σ_{x ∉ supp u} v(x) log(|v(x)|/ν_x) ≤ 0` for all normal `v`; the left side
/// is odd in `v`, so it must vanish. That part is probed on the basis
/// vectors and their pairwise sums and differences.
pub fn criticality_check(family: &ExponentialFamily, u: &KernelDirection, tol: f64) -> CriticalityReport {
    let peak = u.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let support: Vec<usize> = (0..u.values().len())
        .filter(|&x| u.values()[x].abs() > 1e-9 * peak)
        .collect();
    let basis = orthonormal_normal_basis(family);
    let max_violation = basis
        .column_iter()
        .map(|v| support.iter().map(|&x| v[x]).sum::<f64>().abs())
        .fold(0.0, f64::max);
    let zero_level = dbar(family, u.values()).is_ok_and(|d| d.abs() <= tol);
    let zero_level_violation = zero_level.then(|| {
        let outside: Vec<usize> = (0..family.size()).filter(|x| !support.contains(x)).collect();
        let log_nu = family.log_nu();
        let f = |v: &[f64]| -> f64 {
            outside
                .iter()
                .filter(|&&x| v[x] != 0.0)
                .map(|&x| v[x] * (v[x].abs().ln() - log_nu[x]))
                .sum::<f64>()
                .abs()
        };
        let cols: Vec<Vec<f64>> = basis.column_iter().map(|c| c.iter().copied().collect()).collect();
        let mut worst: f64 = 0.0;
        for (i, a) in cols.iter().enumerate() {
            worst = worst.max(f(a));
            for b in &cols[i + 1..] {
                let sum: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
                worst = worst.max(f(&sum)).max(f(&diff));
            }
        }
        worst
    });
    CriticalityReport {
        pass: max_violation <= tol && zero_level_violation.is_none_or(|z| z <= tol),
        support,
        max_violation,
        zero_level_violation,
    }
}

/// The two conditions characterizing global maximizers of the divergence
/// from a partition model: mass only on blocks of maximal size, and a point
/// mass inside each such block.
pub fn is_partition_maximizer(partition: &Partition, p: &ProbabilityVector, tol: f64) -> bool {
    let c = partition.coarseness();
    partition.blocks().iter().all(|b| {
        let mass = p.mass(b);
        if mass <= tol {
            return true;
        }
        let peak = b.iter().map(|&x| p[x]).fold(0.0, f64::max);
        b.len() == c && peak >= mass - tol
    })
}

/// A global maximizer projecting onto `q`: each block's mass is moved to its
/// first state.
pub fn partition_maximizer_for(partition: &Partition, q: &ProbabilityVector) -> Result<ProbabilityVector> {
    if q.len() != partition.size() {
        return Err(Error::DimensionMismatch {
            what: "distribution length",
            expected: partition.size(),
            found: q.len(),
        });
    }
    let c = partition.coarseness();
    let mut out = vec![0.0; q.len()];
    for b in partition.blocks() {
        let mass = q.mass(b);
        if mass <= 0.0 {
            continue;
        }
        if b.len() != c {
            return Err(Error::UnreachableTarget);
        }
        out[b[0]] = mass;
    }
    ProbabilityVector::normalize(out)
}
