//! ℓ1-constrained empirical risk minimization by restarted projected
//! subgradient descent.
//!
//! The search runs in feature-scaled coordinates `φ_i = c_i θ_i`, where `c_i`
//! is the RMS of feature column `i`, so the constraint becomes a weighted ℓ1
//! ball with an exact Euclidean projection. Each restart proceeds in phases:
//! a phase takes normalized subgradient steps of length `r / √(t+1)` from the
//! best point so far, averages its iterates, and the next phase halves `r`.
//! The losses are convex and the families linear, so the objective is convex
//! and, for the absolute and quantile losses, polyhedral; step halving then
//! converges geometrically.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::EmpiricalRisk;
use crate::error::{Error, Result};
use crate::losses::LossSpec;
use crate::predictors::{ParamVector, PredictorFamily};
use crate::series::TimeSeries;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Number of deterministic starting points (the warm start counts as one).
    pub restarts: usize,
    pub max_phases: usize,
    pub iterations_per_phase: usize,
    /// Optional first starting point, e.g. the previous fit in a rolling backtest.
    pub warm_start: Option<Vec<f64>>,
    /// Initial step radius in θ units; defaults to the ball radius `D`.
    pub initial_step: Option<f64>,
    /// A restart stops once the step radius falls below this fraction of
    /// `1 + ‖φ‖₂`.
    pub min_step: f64,
    /// Points per axis of the reference grid used to certify the result.
    pub certificate_grid: Option<usize>,
    /// The grid check only runs up to this parameter dimension.
    pub certificate_max_dim: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            restarts: 5,
            max_phases: 48,
            iterations_per_phase: 50,
            warm_start: None,
            initial_step: None,
            min_step: 1e-11,
            certificate_grid: Some(21),
            certificate_max_dim: 3,
        }
    }
}

impl SolverConfig {
    /// Single restart from `theta` with a reduced initial step, for refits on
    /// slightly extended data.
    pub fn warm(&self, theta: Vec<f64>, step: f64) -> Self {
        Self {
            restarts: 1,
            warm_start: Some(theta),
            initial_step: Some(step),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErmFit {
    pub theta: ParamVector,
    pub objective: f64,
    /// Best objective after each phase, concatenated over restarts in the
    /// order they ran; non-increasing within each restart.
    pub best_history: Vec<Vec<f64>>,
    /// Minimum of the reference grid, when the certificate ran.
    pub grid_minimum: Option<f64>,
}

/// Euclidean projection onto `{x : ‖x‖₁ ≤ radius}`.
pub fn l1_project(theta: &[f64], radius: f64) -> ParamVector {
    let weights = vec![1.0; theta.len()];
    ParamVector(project_weighted_l1(theta, &weights, radius))
}

/// Euclidean projection onto `{x : Σ w_i |x_i| ≤ radius}`, `w_i > 0`.
///
/// The solution is `x_i = sign(y_i) (|y_i| - μ w_i)_+` with `μ` the root of a
/// decreasing piecewise-linear function whose breakpoints are `|y_i| / w_i`.
fn project_weighted_l1(y: &[f64], w: &[f64], radius: f64) -> Vec<f64> {
    let norm: f64 = y.iter().zip(w).map(|(v, wi)| wi * v.abs()).sum();
    if norm <= radius {
        return y.to_vec();
    }
    let mut order: Vec<usize> = (0..y.len()).collect();
    let brk = |i: usize| y[i].abs() / w[i];
    order.sort_by(|&a, &b| brk(b).partial_cmp(&brk(a)).unwrap_or(Ordering::Equal));
    let (mut a_sum, mut b_sum) = (0.0, 0.0);
    let mut mu = 0.0;
    for (j, &i) in order.iter().enumerate() {
        a_sum += w[i] * y[i].abs();
        b_sum += w[i] * w[i];
        mu = (a_sum - radius) / b_sum;
        let next = order.get(j + 1).map_or(0.0, |&i2| brk(i2));
        if mu >= next {
            break;
        }
    }
    let mu = mu.max(0.0);
    y.iter()
        .zip(w)
        .map(|(v, wi)| v.signum() * (v.abs() - mu * wi).max(0.0))
        .collect()
}

/// Strict preference: lower objective, then smaller ℓ1 norm, then
/// lexicographically smaller. Objectives within `1e-12` relative tie.
fn better(a: (&[f64], f64), b: (&[f64], f64)) -> bool {
    let tol = 1e-12 * (1.0 + a.1.abs().max(b.1.abs()));
    if a.1 < b.1 - tol {
        return true;
    }
    if a.1 > b.1 + tol {
        return false;
    }
    let l1 = |x: &[f64]| x.iter().map(|v| v.abs()).sum::<f64>();
    match l1(a.0).partial_cmp(&l1(b.0)) {
        Some(Ordering::Less) => true,
        Some(Ordering::Greater) => false,
        _ => a.0.iter().zip(b.0).find(|(x, y)| x != y).is_some_and(|(x, y)| x < y),
    }
}

fn starting_points(dim: usize, radius: f64, config: &SolverConfig) -> Vec<Vec<f64>> {
    let restarts = config.restarts.max(1);
    let mut starts = Vec::with_capacity(restarts);
    if let Some(w) = &config.warm_start {
        starts.push(l1_project(w, radius).into_inner());
    }
    let mut r = 0;
    while starts.len() < restarts {
        if r == 0 {
            starts.push(vec![0.0; dim]);
        } else {
            let mag = radius * r as f64 / (restarts as f64 * dim.max(1) as f64);
            starts.push(
                (0..dim)
                    .map(|i| if (i + r) % 2 == 0 { mag } else { -mag })
                    .collect(),
            );
        }
        r += 1;
    }
    starts
}

struct Run {
    theta: Vec<f64>,
    objective: f64,
    history: Vec<f64>,
}

fn descend(risk: &EmpiricalRisk, radius: f64, scales: &[f64], start: &[f64], config: &SolverConfig) -> Run {
    let d = scales.len();
    let weights: Vec<f64> = scales.iter().map(|c| 1.0 / c).collect();
    let to_theta = |phi: &[f64]| -> Vec<f64> { phi.iter().zip(scales).map(|(p, c)| p / c).collect() };
    let c_max = scales.iter().cloned().fold(0.0, f64::max);

    let mut best_phi: Vec<f64> = start.iter().zip(scales).map(|(t, c)| t * c).collect();
    let mut best = risk.value(start);
    let mut history = Vec::new();
    let mut step = config.initial_step.unwrap_or(radius) * c_max;

    let mut g_theta = vec![0.0; d];
    let mut g_phi = vec![0.0; d];
    let mut trial = vec![0.0; d];
    let mut avg = vec![0.0; d];
    for _ in 0..config.max_phases {
        let mut phi = best_phi.clone();
        avg.iter_mut().for_each(|a| *a = 0.0);
        let mut taken = 0usize;
        for t in 0..config.iterations_per_phase {
            let theta = to_theta(&phi);
            let value = risk.value_and_subgradient(&theta, &mut g_theta);
            if value < best || (value == best && better((&theta, value), (&to_theta(&best_phi), best))) {
                best = value;
                best_phi.clone_from(&phi);
            }
            for i in 0..d {
                g_phi[i] = g_theta[i] / scales[i];
            }
            let g_norm = g_phi.iter().map(|g| g * g).sum::<f64>().sqrt();
            if g_norm == 0.0 || !g_norm.is_finite() {
                break;
            }
            let eta = step / (g_norm * ((t + 1) as f64).sqrt());
            for i in 0..d {
                trial[i] = phi[i] - eta * g_phi[i];
            }
            phi = project_weighted_l1(&trial, &weights, radius);
            taken += 1;
            for (a, p) in avg.iter_mut().zip(&phi) {
                *a += (p - *a) / taken as f64;
            }
        }
        if taken > 0 {
            for candidate in [&phi, &avg] {
                let theta = to_theta(candidate);
                let value = risk.value(&theta);
                if value < best {
                    best = value;
                    best_phi.clone_from(candidate);
                }
            }
        }
        history.push(best);
        step *= 0.5;
        let scale = 1.0 + best_phi.iter().map(|v| v * v).sum::<f64>().sqrt();
        if taken == 0 || step < config.min_step * scale {
            break;
        }
    }
    Run {
        theta: to_theta(&best_phi),
        objective: best,
        history,
    }
}

/// Minimizes a prepared empirical risk over `{‖θ‖₁ ≤ radius}`.
pub fn minimize(risk: &EmpiricalRisk, radius: f64, config: &SolverConfig) -> Result<ErmFit> {
    if !(radius > 0.0) {
        return Err(Error::invalid(format!("ℓ1 radius must be > 0, got {radius}")));
    }
    let d = risk.dim();
    if d == 0 {
        return Ok(ErmFit {
            theta: ParamVector(vec![]),
            objective: risk.value(&[]),
            best_history: vec![],
            grid_minimum: None,
        });
    }
    let scales = risk.design().column_scales();
    let runs: Vec<Run> = starting_points(d, radius, config)
        .iter()
        .map(|start| descend(risk, radius, &scales, start, config))
        .collect();

    let mut best_idx = 0;
    for (i, run) in runs.iter().enumerate().skip(1) {
        if better((&run.theta, run.objective), (&runs[best_idx].theta, runs[best_idx].objective)) {
            best_idx = i;
        }
    }
    let theta = l1_project(&runs[best_idx].theta, radius).into_inner();
    let objective = risk.value(&theta);
    if !objective.is_finite() {
        return Err(Error::NotConverged {
            best: theta,
            gap: f64::INFINITY,
            tolerance: 0.0,
        });
    }

    let grid_minimum = match config.certificate_grid {
        Some(points) if d <= config.certificate_max_dim => {
            let grid_min = grid_minimum(risk, radius, points);
            let tolerance = 1e-6 * (1.0 + grid_min);
            if objective - grid_min > tolerance {
                return Err(Error::NotConverged {
                    best: theta,
                    gap: objective - grid_min,
                    tolerance,
                });
            }
            Some(grid_min)
        }
        _ => None,
    };

    Ok(ErmFit {
        theta: ParamVector(theta),
        objective,
        best_history: runs.into_iter().map(|r| r.history).collect(),
        grid_minimum,
    })
}

/// Minimum of `r` over the points of a `points^d` grid on `[-D, D]^d` that
/// lie in the ℓ1 ball.
pub(crate) fn grid_minimum(risk: &EmpiricalRisk, radius: f64, points: usize) -> f64 {
    let d = risk.dim();
    let points = points.max(2);
    let axis: Vec<f64> = (0..points)
        .map(|i| -radius + 2.0 * radius * i as f64 / (points - 1) as f64)
        .collect();
    let mut idx = vec![0usize; d];
    let mut theta = vec![0.0; d];
    let mut best = f64::INFINITY;
    loop {
        for (t, &i) in theta.iter_mut().zip(&idx) {
            *t = axis[i];
        }
        if theta.iter().map(|v| v.abs()).sum::<f64>() <= radius * (1.0 + 1e-12) {
            best = best.min(risk.value(&theta));
        }
        let mut pos = 0;
        loop {
            if pos == d {
                return best;
            }
            idx[pos] += 1;
            if idx[pos] < points {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// Empirical risk minimizer of `family` on `series` over `‖θ‖₁ ≤ D`.
pub fn erm_fit(
    series: &TimeSeries,
    family: &PredictorFamily,
    loss: LossSpec,
    config: &SolverConfig,
) -> Result<ErmFit> {
    let risk = EmpiricalRisk::new(series, family, loss)?;
    minimize(&risk, family.radius, config)
}

/// ERM over a finite candidate set; returns the winning index and its risk.
pub fn erm_finite(
    series: &TimeSeries,
    family: &PredictorFamily,
    loss: LossSpec,
    candidates: &[ParamVector],
) -> Result<(usize, f64)> {
    if candidates.is_empty() {
        return Err(Error::invalid("no candidates"));
    }
    if let Some(c) = candidates.iter().find(|c| c.len() != family.dim()) {
        return Err(Error::DimensionMismatch {
            expected: family.dim(),
            got: c.len(),
        });
    }
    let risk = EmpiricalRisk::new(series, family, loss)?;
    let risks: Vec<f64> = candidates.iter().map(|c| risk.value(c)).collect();
    let mut best = 0;
    for i in 1..candidates.len() {
        if better((&candidates[i], risks[i]), (&candidates[best], risks[best])) {
            best = i;
        }
    }
    Ok((best, risks[best]))
}
