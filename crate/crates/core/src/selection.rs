//! Point selection from relaxed design weights: local maxima of the weights on the
//! candidate graph, taken in descending order.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::design::{DesignProblem, Weights};
use crate::error::{check_len, Error, Result};
use crate::geometry::CandidateSet;
use crate::interpolation::{gram_condition_number, kernel_system, max_power_over, PointSet};
use crate::kernels::MercerKernel;
use crate::socp::{build_program, extract_weights};
use crate::solver::{Backend, Residuals, SolverOptions, SolverStatus};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SelectionOptions {
    pub solver: SolverOptions,
    pub backend: Backend,
    /// Slack in the local-maximum test `w_j ≥ w_k − τ`.
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Selected,
    /// Fewer local maxima than requested points.
    TooFewMaxima,
}

/// Solver statistics without the solution vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub status: SolverStatus,
    pub objective: f64,
    pub iterations: usize,
    pub residuals: Residuals,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Maximum of the power function over the candidates; `None` when the kernel
    /// matrix of the chosen points is numerically singular.
    pub max_power: Option<f64>,
    pub condition_number: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Timings {
    pub build_s: f64,
    pub solve_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub n: usize,
    pub outcome: Outcome,
    pub weights: Weights,
    pub local_maxima: Vec<usize>,
    /// Candidate indices by descending weight; empty unless selected.
    pub chosen: Vec<usize>,
    /// More than half of the candidates are local maxima.
    pub plateau: bool,
    pub solve: Option<SolveSummary>,
    pub diagnostics: Diagnostics,
    pub timings: Timings,
}

impl SelectionResult {
    pub fn succeeded(&self) -> bool {
        self.outcome == Outcome::Selected
    }
}

/// `{ j : w_j ≥ w_k − τ for every neighbour k }`.
pub fn local_maxima(w: &[f64], candidates: &CandidateSet, tau: f64) -> Result<Vec<usize>> {
    check_len(candidates.len(), w.len())?;
    Ok((0..w.len())
        .filter(|&j| candidates.neighbors[j].iter().all(|&k| w[j] >= w[k] - tau))
        .collect())
}

/// Indices sorted by descending weight, ties to the smaller index.
fn by_descending_weight(w: &[f64], indices: &[usize]) -> Vec<usize> {
    let mut sorted = indices.to_vec();
    sorted.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
    sorted
}

/// Rounds solved weights to `n` points: local maxima by descending weight.
pub fn round_weights(weights: Weights, candidates: &CandidateSet, n: usize, tau: f64) -> Result<SelectionResult> {
    let local = local_maxima(&weights.0, candidates, tau)?;
    let plateau = 2 * local.len() > candidates.len();
    let (outcome, chosen) = if local.len() < n {
        (Outcome::TooFewMaxima, Vec::new())
    } else {
        let mut order = by_descending_weight(&weights.0, &local);
        order.truncate(n);
        (Outcome::Selected, order)
    };
    Ok(SelectionResult {
        n,
        outcome,
        weights,
        local_maxima: local,
        chosen,
        plateau,
        solve: None,
        diagnostics: Diagnostics::default(),
        timings: Timings::default(),
    })
}

/// Solves the relaxed design problem with `ℓ = n` and rounds the weights. Frozen
/// indices of the problem are pinned at weight one.
pub fn select_with_problem(problem: &DesignProblem, candidates: &CandidateSet, opts: &SelectionOptions) -> Result<SelectionResult> {
    check_len(candidates.len(), problem.len())?;
    let n = problem.budget();
    if problem.dim() == 1 {
        return select_single(problem, candidates, opts.tau);
    }
    let start = Instant::now();
    let (layout, prog) = build_program(&problem.orthonormalized())?;
    let build_s = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let solved = opts.backend.solve(&prog, &opts.solver)?;
    let solve_s = start.elapsed().as_secs_f64();
    let Some(v) = solved.v.as_deref() else {
        return Err(Error::Solver(format!(
            "cone program for n = {n} ended with status {:?} after {} iterations",
            solved.status, solved.iterations
        )));
    };
    let mut weights = extract_weights(&layout, v)?;
    for &j in problem.frozen() {
        weights.0[j] = 1.0;
    }
    let mut result = round_weights(weights, candidates, n, opts.tau)?;
    result.solve = Some(SolveSummary {
        status: solved.status,
        objective: solved.objective,
        iterations: solved.iterations,
        residuals: solved.residuals,
    });
    result.timings = Timings { build_s, solve_s };
    Ok(result)
}

/// `ℓ = 1`: the optimal design puts its unit weight on the largest `a_j1²`.
fn select_single(problem: &DesignProblem, candidates: &CandidateSet, tau: f64) -> Result<SelectionResult> {
    let a = problem.regressors();
    let mut weights = vec![0.0; problem.len()];
    if let [j] = problem.frozen() {
        weights[*j] = 1.0;
    } else {
        let mut best = 0;
        for j in 1..a.len() {
            if a[j][0] * a[j][0] > a[best][0] * a[best][0] {
                best = j;
            }
        }
        weights[best] = 1.0;
    }
    round_weights(Weights(weights), candidates, 1, tau)
}

/// Adds the power-function maximum and condition number of the chosen points.
fn diagnose(result: &mut SelectionResult, kernel: &dyn MercerKernel, candidates: &CandidateSet) -> Result<()> {
    if !result.succeeded() {
        return Ok(());
    }
    let points = PointSet::from_indices(candidates, &result.chosen)?;
    result.diagnostics = diagnostics_for(kernel, candidates, &points)?;
    Ok(())
}

/// Power-function maximum over the candidates and condition number of a point set.
/// The maximum is omitted when the kernel matrix is numerically singular or its
/// power function breaks down.
pub fn diagnostics_for(kernel: &dyn MercerKernel, candidates: &CandidateSet, points: &PointSet) -> Result<Diagnostics> {
    let condition_number = Some(gram_condition_number(kernel, points)?);
    let max_power = match kernel_system(kernel, points) {
        Ok(sys) => match max_power_over(&sys, kernel, candidates) {
            Ok((p, _)) => Some(p),
            Err(Error::Numerical(_)) => None,
            Err(e) => return Err(e),
        },
        Err(Error::Conditioning { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(Diagnostics {
        max_power,
        condition_number,
    })
}

/// Selects `n` points from the local maxima of the D-optimal weights for the first
/// `n` Mercer terms.
pub fn algorithm1(kernel: &dyn MercerKernel, candidates: &CandidateSet, n: usize, opts: &SelectionOptions) -> Result<SelectionResult> {
    check_count(n, candidates.len())?;
    let problem = DesignProblem::from_candidates(kernel, candidates, n, n, Vec::new())?;
    let mut result = select_with_problem(&problem, candidates, opts)?;
    diagnose(&mut result, kernel, candidates)?;
    Ok(result)
}

fn check_count(n: usize, m: usize) -> Result<()> {
    if n == 0 || n > m {
        return Err(Error::Parameter(format!("need 1 ≤ n ≤ {m}, got {n}")));
    }
    Ok(())
}

/// Nested selection along increasing totals `n_1 < n_2 < …`. Stage `i` pins the
/// points of stage `i − 1` and selects `n_i` points in all. Stops after the first
/// stage that fails to find enough local maxima; that stage is the last entry.
pub fn algorithm2(
    kernel: &dyn MercerKernel,
    candidates: &CandidateSet,
    totals: &[usize],
    opts: &SelectionOptions,
) -> Result<Vec<SelectionResult>> {
    if totals.is_empty() {
        return Err(Error::Parameter("empty schedule".into()));
    }
    if totals.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::Parameter(format!("schedule totals must increase strictly: {totals:?}")));
    }
    check_count(totals[0], candidates.len())?;
    check_count(*totals.last().unwrap(), candidates.len())?;

    let mut stages = Vec::with_capacity(totals.len());
    let mut pinned: Vec<usize> = Vec::new();
    for (stage, &n) in totals.iter().enumerate() {
        let problem = DesignProblem::from_candidates(kernel, candidates, n, n, pinned.clone())?;
        let mut result = select_with_problem(&problem, candidates, opts)
            .map_err(|e| Error::Solver(format!("stage {} (n = {n}): {e}", stage + 1)))?;
        diagnose(&mut result, kernel, candidates)?;
        let ok = result.succeeded();
        if ok {
            pinned = result.chosen.clone();
        }
        stages.push(result);
        if !ok {
            break;
        }
    }
    Ok(stages)
}
