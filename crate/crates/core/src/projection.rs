//! Information divergence and the generalized rI-projection.
//!
//! The projection of `P` is the unique point `P_E` of the closure with the
//! same moments `A·P_E = A·P`. It is found by maximizing the concave dual
//! `θ·A·P − log Z_θ` with a damped Newton method on the face of the convex
//! support that contains `A·P` in its relative interior. That face is located
//! with a linear program whenever `P` lacks full support.

use nalgebra::{DMatrix, DVector};
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{independent_rows_mod_constants, log_sum_exp, softmax, ExponentialFamily, ProbabilityVector};
use crate::lp::{self, LpOutcome, Scalar};
use crate::rational::{self, Q};
use crate::zoo::Partition;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionConfig {
    /// Bound on `max |A·P − A·P_E|`.
    pub tol: f64,
    pub max_iter: usize,
    /// `|θ|` beyond which a stalled Newton run triggers facial reduction.
    pub theta_threshold: f64,
    pub armijo: f64,
    pub jitter: f64,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        ProjectionConfig {
            tol: 1e-10,
            max_iter: 500,
            theta_threshold: 1e3,
            armijo: 1e-4,
            jitter: 1e-12,
        }
    }
}

impl ProjectionConfig {
    pub fn with_tol(tol: f64) -> Self {
        ProjectionConfig {
            tol,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionResult {
    pub point: ProbabilityVector,
    pub divergence: f64,
    pub face_support: Vec<usize>,
    pub iterations: usize,
    pub residual: f64,
    /// Dual objective after every accepted Newton step.
    #[serde(skip)]
    pub dual_trace: Vec<f64>,
    pub config: ProjectionConfig,
}

/// `D(P‖Q) = Σ P log(P/Q)` with `0 log 0 = 0 log(0/0) = 0`; `+∞` when the
/// support of `P` is not contained in that of `Q`.
pub fn divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&a, &b)| {
            if a <= 0.0 {
                0.0
            } else if b <= 0.0 {
                f64::INFINITY
            } else {
                a * (a / b).ln()
            }
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Truncation {
    /// Distribution on the states of `Y`, in the order given.
    pub dist: ProbabilityVector,
    /// True when `P(Y) = 0` and the uniform distribution was substituted.
    pub arbitrary: bool,
}

pub fn truncate(p: &ProbabilityVector, states: &[usize]) -> Result<Truncation> {
    if states.is_empty() {
        return Err(Error::EmptySet);
    }
    let mass = p.mass(states);
    if mass > 0.0 {
        let v = states.iter().map(|&s| p[s] / mass).collect();
        Ok(Truncation {
            dist: ProbabilityVector::normalize(v)?,
            arbitrary: false,
        })
    } else {
        Ok(Truncation {
            dist: ProbabilityVector::uniform(states.len()),
            arbitrary: true,
        })
    }
}

/// Smallest facial set containing `support`: the states whose columns lie on
/// the smallest face of the convex support containing the columns of
/// `support`.
pub fn facial_set(family: &ExponentialFamily, support: &[usize]) -> Vec<usize> {
    let n = family.size();
    if support.len() == n || support.is_empty() {
        return (0..n).collect();
    }
    let limit = num_bigint::BigInt::from(1_000_000);
    let exact = rational::max_denominator(family.stats().rows().flatten()) <= limit;
    if exact {
        facial_set_with::<Q>(family, support, Q::clone)
    } else {
        facial_set_with::<f64>(family, support, rational::to_f64)
    }
}

fn facial_set_with<T: Scalar>(family: &ExponentialFamily, support: &[usize], conv: impl Fn(&Q) -> T) -> Vec<usize> {
    let n = family.size();
    let ext = family.extended_stats();
    let a: Vec<Vec<T>> = ext.rows().map(|r| r.iter().map(&conv).collect()).collect();
    // barycentre of the supporting columns, scaled by |support|
    let b: Vec<T> = ext
        .rows()
        .map(|r| {
            let s = support.iter().fold(Q::zero(), |acc, &x| acc + &r[x]);
            conv(&s)
        })
        .collect();
    let mut in_face = vec![false; n];
    for &s in support {
        in_face[s] = true;
    }
    loop {
        let c: Vec<T> = in_face.iter().map(|&f| if f { T::zero_s() } else { T::one_s() }).collect();
        match lp::maximize(&a, &b, &c) {
            LpOutcome::Optimal { x, value } if value.is_pos() => {
                for (i, xi) in x.iter().enumerate() {
                    if xi.is_pos() {
                        in_face[i] = true;
                    }
                }
            }
            _ => break,
        }
        if in_face.iter().all(|&f| f) {
            break;
        }
    }
    (0..n).filter(|&i| in_face[i]).collect()
}

pub fn ri_project(family: &ExponentialFamily, p: &ProbabilityVector) -> Result<ProjectionResult> {
    ri_project_with(family, p, &ProjectionConfig::default())
}

pub fn ri_project_with(
    family: &ExponentialFamily,
    p: &ProbabilityVector,
    config: &ProjectionConfig,
) -> Result<ProjectionResult> {
    check_len(family, p)?;
    let face = facial_set(family, &p.support());
    match project_on_face(family, p, &face, config) {
        Err(Error::NoConvergence { .. }) => {
            // numerically tiny entries may hide a proper face
            let peak = p.values().iter().cloned().fold(0.0, f64::max);
            let support: Vec<usize> = (0..p.len()).filter(|&i| p[i] > 1e-12 * peak).collect();
            let smaller = facial_set(family, &support);
            if smaller.len() < face.len() {
                project_on_face(family, p, &smaller, config)
            } else {
                project_on_face(family, p, &face, config)
            }
        }
        other => other,
    }
}

/// Projection given the facial set of `supp(P)`, for callers that project
/// many distributions sharing a support.
pub fn ri_project_on_face(
    family: &ExponentialFamily,
    p: &ProbabilityVector,
    face: &[usize],
    config: &ProjectionConfig,
) -> Result<ProjectionResult> {
    check_len(family, p)?;
    project_on_face(family, p, face, config)
}

fn check_len(family: &ExponentialFamily, p: &ProbabilityVector) -> Result<()> {
    if p.len() != family.size() {
        return Err(Error::DimensionMismatch {
            what: "distribution length",
            expected: family.size(),
            found: p.len(),
        });
    }
    Ok(())
}

fn project_on_face(
    family: &ExponentialFamily,
    p: &ProbabilityVector,
    face: &[usize],
    config: &ProjectionConfig,
) -> Result<ProjectionResult> {
    FaceProjector::new(family, face).project(p, config)
}

/// Projection onto the part of the closure supported on a fixed facial set,
/// with the reduced statistics computed once.
#[derive(Debug, Clone)]
pub struct FaceProjector<'a> {
    family: &'a ExponentialFamily,
    face: Vec<usize>,
    t: Vec<Vec<f64>>,
    log_nu: Vec<f64>,
}

impl<'a> FaceProjector<'a> {
    pub fn new(family: &'a ExponentialFamily, face: &[usize]) -> Self {
        let stats_face = family.stats().restrict(face);
        let rows = independent_rows_mod_constants(&stats_face, face.len());
        let all = family.stats_f64();
        let t = rows
            .iter()
            .map(|&r| face.iter().map(|&x| all[r][x]).collect())
            .collect();
        let log_nu = face.iter().map(|&x| family.log_nu()[x]).collect();
        FaceProjector {
            family,
            face: face.to_vec(),
            t,
            log_nu,
        }
    }

    /// Builds the projector for the facial set of `support`.
    pub fn for_support(family: &'a ExponentialFamily, support: &[usize]) -> Self {
        Self::new(family, &facial_set(family, support))
    }

    pub fn face(&self) -> &[usize] {
        &self.face
    }

    pub fn family(&self) -> &'a ExponentialFamily {
        self.family
    }

    pub fn project(&self, p: &ProbabilityVector, config: &ProjectionConfig) -> Result<ProjectionResult> {
        check_len(self.family, p)?;
        let n = self.family.size();
        let face = &self.face;
        let target: Vec<f64> = self
            .t
            .iter()
            .map(|row| row.iter().zip(face).map(|(a, &x)| a * p[x]).sum())
            .collect();
        let solved = newton(&self.t, &self.log_nu, &target, config)?;
        let mut point = vec![0.0; n];
        for (k, &x) in face.iter().enumerate() {
            point[x] = solved.point[k];
        }
        let moments = self.family.moment_map(p);
        let residual = self
            .family
            .stats_f64()
            .iter()
            .zip(&moments)
            .map(|(row, m)| (row.iter().zip(&point).map(|(a, b)| a * b).sum::<f64>() - m).abs())
            .fold(0.0, f64::max);
        let divergence = divergence(p.values(), &point);
        Ok(ProjectionResult {
            point: ProbabilityVector::normalize(point)?,
            divergence,
            face_support: face.clone(),
            iterations: solved.iterations,
            residual,
            dual_trace: solved.trace,
            config: *config,
        })
    }
}

struct NewtonOutcome {
    point: Vec<f64>,
    iterations: usize,
    trace: Vec<f64>,
}

/// Maximizes `θ·m − log Σ ν_x exp(θ·T_x)` over θ; the rows of `t` are
/// affinely independent so the Fisher matrix is positive definite.
fn newton(t: &[Vec<f64>], log_nu: &[f64], target: &[f64], config: &ProjectionConfig) -> Result<NewtonOutcome> {
    let d = t.len();
    let k = log_nu.len();
    let logits = |theta: &[f64]| -> Vec<f64> {
        (0..k)
            .map(|x| log_nu[x] + t.iter().zip(theta).map(|(row, th)| th * row[x]).sum::<f64>())
            .collect()
    };
    let dual = |theta: &[f64]| -> f64 {
        theta.iter().zip(target).map(|(a, b)| a * b).sum::<f64>() - log_sum_exp(&logits(theta))
    };
    let mut theta = vec![0.0; d];
    let mut value = dual(&theta);
    let mut trace = vec![value];
    if d == 0 {
        return Ok(NewtonOutcome {
            point: softmax(&logits(&theta)),
            iterations: 0,
            trace,
        });
    }
    let mut stalls = 0usize;
    for iter in 0..config.max_iter {
        let p = softmax(&logits(&theta));
        let mean: Vec<f64> = t.iter().map(|row| row.iter().zip(&p).map(|(a, b)| a * b).sum()).collect();
        let grad: Vec<f64> = target.iter().zip(&mean).map(|(a, b)| a - b).collect();
        let gnorm = grad.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
        if gnorm <= config.tol * 0.5 {
            return Ok(NewtonOutcome {
                point: p,
                iterations: iter,
                trace,
            });
        }
        let mut fisher = DMatrix::<f64>::zeros(d, d);
        for i in 0..d {
            for j in 0..=i {
                let c: f64 = (0..k).map(|x| p[x] * (t[i][x] - mean[i]) * (t[j][x] - mean[j])).sum();
                fisher[(i, j)] = c;
                fisher[(j, i)] = c;
            }
        }
        let g = DVector::from_vec(grad.clone());
        let dir = solve_spd(fisher, &g, config.jitter);
        let slope: f64 = dir.iter().zip(&grad).map(|(a, b)| a * b).sum();
        let mut step = 1.0;
        let mut accepted = None;
        // a nearly singular Fisher matrix gives huge directions, so the
        // floor is on the length of the move rather than on `step`
        let dir_norm = dir.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let theta_scale = 1.0 + theta.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        while step * dir_norm > 1e-16 * theta_scale {
            let cand: Vec<f64> = theta.iter().zip(dir.iter()).map(|(a, b)| a + step * b).collect();
            let v = dual(&cand);
            if v - value >= config.armijo * step * slope {
                accepted = Some((cand, v));
                break;
            }
            // close to the optimum rounding hides the increase; fall back
            // on the gradient norm
            if slope <= 1e-13 * (1.0 + value.abs()) {
                let pc = softmax(&logits(&cand));
                let gc = t
                    .iter()
                    .zip(target)
                    .map(|(row, m)| (m - row.iter().zip(&pc).map(|(a, b)| a * b).sum::<f64>()).abs())
                    .fold(0.0, f64::max);
                if gc < gnorm {
                    accepted = Some((cand, v.max(value)));
                    break;
                }
            }
            step *= 0.5;
        }
        let theta_norm = theta.iter().map(|v| v * v).sum::<f64>().sqrt();
        match accepted {
            Some((cand, v)) => {
                if v - value <= 1e-15 * (1.0 + value.abs()) {
                    stalls += 1;
                } else {
                    stalls = 0;
                }
                theta = cand;
                value = v;
                trace.push(value);
            }
            None => stalls = usize::MAX,
        }
        if stalls >= 3 {
            // rounding limits further progress
            if gnorm <= config.tol {
                return Ok(NewtonOutcome {
                    point: softmax(&logits(&theta)),
                    iterations: iter + 1,
                    trace,
                });
            }
            if stalls == usize::MAX || theta_norm > config.theta_threshold {
                return Err(Error::NoConvergence {
                    iterations: iter + 1,
                    residual: gnorm,
                    theta_norm,
                });
            }
        }
    }
    let p = softmax(&logits(&theta));
    let residual = t
        .iter()
        .zip(target)
        .map(|(row, m)| (m - row.iter().zip(&p).map(|(a, b)| a * b).sum::<f64>()).abs())
        .fold(0.0, f64::max);
    Err(Error::NoConvergence {
        iterations: config.max_iter,
        residual,
        theta_norm: theta.iter().map(|v| v * v).sum::<f64>().sqrt(),
    })
}

fn solve_spd(mut m: DMatrix<f64>, g: &DVector<f64>, jitter: f64) -> DVector<f64> {
    let d = m.nrows();
    let scale = (0..d).map(|i| m[(i, i)]).fold(0.0, f64::max).max(1e-300);
    let mut eps = jitter * scale;
    for i in 0..d {
        m[(i, i)] += eps;
    }
    loop {
        if let Some(ch) = m.clone().cholesky() {
            return ch.solve(g);
        }
        let bump = eps.max(1e-300) * 99.0;
        for i in 0..d {
            m[(i, i)] += bump;
        }
        eps += bump;
    }
}

/// Closed-form projection onto a partition model: average over blocks.
pub fn partition_project(partition: &Partition, p: &ProbabilityVector) -> Result<ProbabilityVector> {
    if partition.size() != p.len() {
        return Err(Error::DimensionMismatch {
            what: "distribution length",
            expected: partition.size(),
            found: p.len(),
        });
    }
    let mut out = vec![0.0; p.len()];
    for b in partition.blocks() {
        let avg = p.mass(b) / b.len() as f64;
        for &x in b {
            out[x] = avg;
        }
    }
    ProbabilityVector::normalize(out)
}

/// `Σ_i P(X^i) (log|X^i| − H(P^{X^i}))`.
pub fn partition_divergence(partition: &Partition, p: &ProbabilityVector) -> Result<f64> {
    if partition.size() != p.len() {
        return Err(Error::DimensionMismatch {
            what: "distribution length",
            expected: partition.size(),
            found: p.len(),
        });
    }
    let mut total = 0.0;
    for b in partition.blocks() {
        let mass = p.mass(b);
        if mass <= 0.0 {
            continue;
        }
        let h = truncate(p, b)?.dist.entropy();
        total += mass * ((b.len() as f64).ln() - h);
    }
    Ok(total)
}
