//! Relaxed D-optimal design: information matrices, the log-determinant objective,
//! truncated Gram determinants and two reference solvers.
//!
//! For regressors `a_1, …, a_m ∈ ℝ^ℓ` and weights `0 ≤ w ≤ 1` with `Σ w_j = n`
//! the information matrix is `M(w) = Σ_j w_j a_j a_jᵀ`.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, Error, Result};
use crate::geometry::CandidateSet;
use crate::kernels::MercerKernel;

/// Pivot ratio below which an information matrix counts as singular.
pub const SINGULAR_PIVOT_RATIO: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct DesignProblem {
    regressors: Vec<Vec<f64>>,
    budget: usize,
    frozen: Vec<usize>,
    dim: usize,
}

impl DesignProblem {
    /// `frozen` holds 0-based indices whose weights are pinned to one.
    pub fn new(regressors: Vec<Vec<f64>>, budget: usize, frozen: Vec<usize>) -> Result<Self> {
        let m = regressors.len();
        let dim = regressors.first().map_or(0, Vec::len);
        if m == 0 || dim == 0 {
            return Err(Error::Parameter("design needs at least one non-empty regressor".into()));
        }
        for a in &regressors {
            check_len(dim, a.len())?;
        }
        if dim > m {
            return Err(Error::Parameter(format!("regressor dimension {dim} exceeds candidate count {m}")));
        }
        if budget == 0 || budget > m {
            return Err(Error::Parameter(format!("budget must lie in 1..={m}, got {budget}")));
        }
        let mut frozen = frozen;
        frozen.sort_unstable();
        frozen.dedup();
        if let Some(&j) = frozen.iter().find(|&&j| j >= m) {
            return Err(Error::Index {
                index: j,
                valid: format!("0..{m}"),
            });
        }
        if frozen.len() > budget {
            return Err(Error::Parameter(format!("{} frozen indices exceed budget {budget}", frozen.len())));
        }
        Ok(Self {
            regressors,
            budget,
            frozen,
            dim,
        })
    }

    /// Regressors `(φ_1(y_j), …, φ_ℓ(y_j))` for every candidate.
    pub fn from_candidates(
        kernel: &dyn MercerKernel,
        candidates: &CandidateSet,
        dim: usize,
        budget: usize,
        frozen: Vec<usize>,
    ) -> Result<Self> {
        let regressors = candidates
            .points
            .iter()
            .map(|y| kernel.regressor(dim, y))
            .collect::<Result<Vec<_>>>()?;
        Self::new(regressors, budget, frozen)
    }

    pub fn regressors(&self) -> &[Vec<f64>] {
        &self.regressors
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn frozen(&self) -> &[usize] {
        &self.frozen
    }

    /// Regressor dimension `ℓ`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of candidates `m`.
    pub fn len(&self) -> usize {
        self.regressors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regressors.is_empty()
    }

    /// The same problem with regressors `√(m/ℓ)·q_j`, where `q_j` are the rows of the
    /// thin QR factor of `(a_1 … a_m)ᵀ`. The information matrix changes by a fixed
    /// congruence, so optimal weights are unchanged and `log det` shifts by a
    /// constant. Rank-deficient regressors are returned unchanged.
    pub fn orthonormalized(&self) -> Self {
        let (m, ell) = (self.len(), self.dim);
        let a = DMatrix::from_fn(m, ell, |i, k| self.regressors[i][k]);
        let qr = a.qr();
        let r = qr.r();
        let diag_max = (0..ell).fold(0.0f64, |acc, k| acc.max(r[(k, k)].abs()));
        if !(0..ell).all(|k| r[(k, k)].abs() > 1e-13 * diag_max) {
            return self.clone();
        }
        let q = qr.q() * (m as f64 / ell as f64).sqrt();
        Self {
            regressors: (0..m).map(|i| q.row(i).iter().copied().collect()).collect(),
            ..self.clone()
        }
    }

    fn is_frozen(&self) -> Vec<bool> {
        let mut mask = vec![false; self.len()];
        for &j in &self.frozen {
            mask[j] = true;
        }
        mask
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct Weights(pub Vec<f64>);

impl Weights {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Checks box, budget and frozen-weight feasibility.
    pub fn check_feasible(&self, p: &DesignProblem) -> Result<()> {
        check_len(p.len(), self.0.len())?;
        if let Some((j, w)) = self.0.iter().enumerate().find(|(_, w)| !(-1e-9..=1.0 + 1e-9).contains(*w)) {
            return Err(Error::Numerical(format!("weight {j} = {w} outside [0, 1]")));
        }
        let sum: f64 = self.0.iter().sum();
        let n = p.budget as f64;
        if (sum - n).abs() > 1e-6 * n {
            return Err(Error::Numerical(format!("weights sum to {sum}, expected {n}")));
        }
        if let Some(&j) = p.frozen.iter().find(|&&j| self.0[j] < 1.0 - 1e-6) {
            return Err(Error::Numerical(format!("frozen weight {j} = {}", self.0[j])));
        }
        Ok(())
    }
}

/// `M(w) = Σ_j w_j a_j a_jᵀ`.
pub fn information_matrix(p: &DesignProblem, w: &[f64]) -> Result<DMatrix<f64>> {
    check_len(p.len(), w.len())?;
    let l = p.dim;
    let mut m = DMatrix::zeros(l, l);
    for (a, &wj) in p.regressors.iter().zip(w) {
        if wj == 0.0 {
            continue;
        }
        let a = DVector::from_column_slice(a);
        m.ger(wj, &a, &a, 1.0);
    }
    Ok(m)
}

/// `log det M` of a symmetric matrix, or `−∞` when its Cholesky pivots degenerate.
pub fn logdet_spd(m: &DMatrix<f64>) -> f64 {
    let Some(chol) = m.clone().cholesky() else {
        return f64::NEG_INFINITY;
    };
    let l = chol.l_dirty();
    let pivots: Vec<f64> = (0..m.nrows()).map(|i| l[(i, i)] * l[(i, i)]).collect();
    let max = pivots.iter().cloned().fold(0.0, f64::max);
    if pivots.iter().any(|&d| !(d > SINGULAR_PIVOT_RATIO * max)) {
        return f64::NEG_INFINITY;
    }
    pivots.iter().map(|d| d.ln()).sum()
}

/// `log det M(w)`, `−∞` when `M(w)` is numerically singular.
pub fn logdet_objective(p: &DesignProblem, w: &[f64]) -> Result<f64> {
    Ok(logdet_spd(&information_matrix(p, w)?))
}

/// `(λ_1 ⋯ λ_n)(det Φ_n)²` with `(Φ_n)_{iℓ} = φ_ℓ(x_i)`, the truncated-expansion
/// approximation of the determinant of the kernel matrix on `points`.
pub fn truncated_gram_det(kernel: &dyn MercerKernel, points: &[Vec<f64>]) -> Result<f64> {
    let n = points.len();
    if n == 0 {
        return Err(Error::Parameter("need at least one point".into()));
    }
    let mut phi = DMatrix::zeros(n, n);
    for (i, x) in points.iter().enumerate() {
        for (l, v) in kernel.regressor(n, x)?.into_iter().enumerate() {
            phi[(i, l)] = v;
        }
    }
    let mut prod = 1.0;
    for l in 1..=n {
        prod *= kernel.eigenvalue(l)?;
    }
    let d = phi.determinant();
    Ok(prod * d * d)
}

const BRUTEFORCE_LIMIT: f64 = 1e6;

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Exhaustive search over all size-`n` subsets containing the frozen indices for
/// the one maximising `det Σ_{j∈S} a_j a_jᵀ`. Ties go to the lexicographically
/// smallest subset. Returns sorted 0-based indices and the maximal determinant.
pub fn fekete_bruteforce(p: &DesignProblem) -> Result<(Vec<usize>, f64)> {
    let frozen = p.is_frozen();
    let free: Vec<usize> = (0..p.len()).filter(|&j| !frozen[j]).collect();
    let pick = p.budget - p.frozen.len();
    let count = binomial(free.len(), pick);
    if count > BRUTEFORCE_LIMIT {
        return Err(Error::Capacity(format!(
            "{count:.3e} subsets exceed the limit of {BRUTEFORCE_LIMIT:.0e}"
        )));
    }

    let l = p.dim;
    let mut base = DMatrix::zeros(l, l);
    for &j in &p.frozen {
        let a = DVector::from_column_slice(&p.regressors[j]);
        base.ger(1.0, &a, &a, 1.0);
    }

    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut combo: Vec<usize> = (0..pick).collect();
    loop {
        let mut m = base.clone();
        for &c in &combo {
            let a = DVector::from_column_slice(&p.regressors[free[c]]);
            m.ger(1.0, &a, &a, 1.0);
        }
        let det = m.determinant();
        let improves = match &best {
            None => true,
            Some((_, b)) => det > *b + 1e-12 * b.abs().max(f64::MIN_POSITIVE),
        };
        if improves {
            let mut set: Vec<usize> = combo.iter().map(|&c| free[c]).chain(p.frozen.iter().copied()).collect();
            set.sort_unstable();
            best = Some((set, det));
        }
        // next combination in lexicographic order
        let Some(i) = (0..pick).rev().find(|&i| combo[i] < free.len() - pick + i) else {
            break;
        };
        combo[i] += 1;
        for t in i + 1..pick {
            combo[t] = combo[t - 1] + 1;
        }
    }
    Ok(best.expect("at least one subset"))
}

/// Euclidean projection of `w` onto `{0 ≤ w ≤ 1, Σ w = n, w_frozen = 1}`, by
/// bisection on the shift `τ` in `clamp(w − τ, 0, 1)`.
pub fn project_weights(w: &[f64], budget: usize, frozen: &[bool]) -> Vec<f64> {
    let target = budget as f64 - frozen.iter().filter(|&&f| f).count() as f64;
    let free = || w.iter().zip(frozen).filter(|(_, &f)| !f).map(|(&v, _)| v);
    let total = |tau: f64| free().map(|v| (v - tau).clamp(0.0, 1.0)).sum::<f64>();
    let mut lo = free().fold(f64::INFINITY, f64::min) - 1.0;
    let mut hi = free().fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * (1.0 + lo.abs()) {
            break;
        }
    }
    let tau = 0.5 * (lo + hi);
    w.iter()
        .zip(frozen)
        .map(|(&v, &f)| if f { 1.0 } else { (v - tau).clamp(0.0, 1.0) })
        .collect()
}

struct Variances {
    logdet: f64,
    /// `M⁻¹ a_j` for every candidate, stored column-wise.
    solved: DMatrix<f64>,
    /// `d_j = a_jᵀ M⁻¹ a_j`.
    d: Vec<f64>,
}

fn variances(p: &DesignProblem, a: &DMatrix<f64>, w: &[f64]) -> Option<Variances> {
    let m = information_matrix(p, w).ok()?;
    let logdet = logdet_spd(&m);
    if !logdet.is_finite() {
        return None;
    }
    let solved = m.cholesky()?.solve(a);
    let d = (0..a.ncols()).map(|j| a.column(j).dot(&solved.column(j))).collect();
    Some(Variances { logdet, solved, d })
}

/// Classical multiplicative algorithm for the capped D-optimal design, followed by
/// pairwise exchange steps.
///
/// Each multiplicative step sets `w_j ← (n/ℓ) w_j a_jᵀM(w)⁻¹a_j` and projects back
/// onto the feasible set. The projected iteration stalls near the caps, so the best
/// iterate is then refined by exchanges that move weight from the candidate with the
/// smallest variance `d_j` among those with `w_j > 0` to the one with the largest
/// variance among those with `w_j < 1`, with the exact line search of
/// `det M(w + δ(e_i − e_j)) = det M(w)·(1 + δ(d_i − d_j) + δ²(d_ij² − d_i d_j))`.
///
/// The multiplicative phase stops when the relative change of `log det M` falls to
/// `tol`, the exchange phase when `d_i − d_j ≤ tol·d_i`. The multiplicative phase is
/// limited to `iters` steps and the exchange phase to `10·iters`. The returned weights are the best iterate seen.
pub fn multiplicative_solver(p: &DesignProblem, iters: usize, tol: f64) -> Result<Weights> {
    let m = p.len();
    let frozen = p.is_frozen();
    let free_count = m - p.frozen.len();
    let fill = if free_count == 0 {
        0.0
    } else {
        (p.budget - p.frozen.len()) as f64 / free_count as f64
    };
    let mut w: Vec<f64> = frozen.iter().map(|&f| if f { 1.0 } else { fill }).collect();
    let a = DMatrix::from_fn(p.dim, m, |i, j| p.regressors[j][i]);
    let Some(mut state) = variances(p, &a, &w) else {
        return Err(Error::Initialization("information matrix of the uniform design is singular".into()));
    };

    let mut best = (state.logdet, w.clone());
    let scale = p.budget as f64 / p.dim as f64;
    let converged = |old: f64, new: f64| (new - old).abs() <= tol * old.abs().max(1.0);

    for _ in 0..iters {
        let updated: Vec<f64> = w.iter().zip(&state.d).map(|(wj, dj)| scale * wj * dj).collect();
        let next = project_weights(&updated, p.budget, &frozen);
        let Some(next_state) = variances(p, &a, &next) else { break };
        let done = converged(state.logdet, next_state.logdet);
        w = next;
        state = next_state;
        if state.logdet > best.0 {
            best = (state.logdet, w.clone());
        }
        if done {
            break;
        }
    }

    w = best.1.clone();
    state = variances(p, &a, &w).expect("best iterate is nonsingular");
    for _ in 0..iters.max(1) * 10 {
        let up = (0..m).filter(|&j| !frozen[j] && w[j] < 1.0).max_by(|&x, &y| state.d[x].total_cmp(&state.d[y]));
        let down = (0..m).filter(|&j| !frozen[j] && w[j] > 0.0).min_by(|&x, &y| state.d[x].total_cmp(&state.d[y]));
        let (Some(i), Some(j)) = (up, down) else { break };
        let (di, dj) = (state.d[i], state.d[j]);
        // optimality: a common threshold separates the variances of capped, free
        // and zero weights
        if i == j || di - dj <= tol.max(1e-14) * di {
            break;
        }
        let dij = a.column(i).dot(&state.solved.column(j));
        let lin = di - dj;
        let quad = dij * dij - di * dj;
        let hi = (1.0 - w[i]).min(w[j]);
        let step = if quad < 0.0 { (-lin / (2.0 * quad)).min(hi) } else { hi };
        if !(step > 0.0) {
            break;
        }
        let mut next = w.clone();
        next[i] += step;
        next[j] -= step;
        for v in [i, j] {
            if next[v] < 1e-15 {
                next[v] = 0.0;
            } else if next[v] > 1.0 - 1e-15 {
                next[v] = 1.0;
            }
        }
        let Some(next_state) = variances(p, &a, &next) else { break };
        if next_state.logdet < state.logdet - 1e-14 * state.logdet.abs().max(1.0) {
            break;
        }
        w = next;
        state = next_state;
        if state.logdet >= best.0 {
            best = (state.logdet, w.clone());
        }
    }
    Ok(Weights(best.1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::brownian_kernel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn problem(a: &[[f64; 2]], n: usize) -> DesignProblem {
        DesignProblem::new(a.iter().map(|r| r.to_vec()).collect(), n, vec![]).unwrap()
    }

    fn det3(m: &DMatrix<f64>) -> f64 {
        m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)]) - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
            + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
    }

    const ATOMS: [[f64; 2]; 4] = [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [2.0, 0.0]];

    #[test]
    fn problem_validation() {
        assert!(DesignProblem::new(vec![vec![1.0, 0.0], vec![1.0]], 1, vec![]).is_err());
        assert!(DesignProblem::new(vec![vec![1.0, 0.0, 0.0]], 1, vec![]).is_err());
        assert!(DesignProblem::new(vec![vec![1.0], vec![2.0]], 3, vec![]).is_err());
        assert!(DesignProblem::new(vec![vec![1.0], vec![2.0]], 1, vec![0, 1]).is_err());
        assert!(DesignProblem::new(vec![vec![1.0], vec![2.0]], 1, vec![5]).is_err());
        let p = DesignProblem::new(vec![vec![1.0], vec![2.0]], 2, vec![1, 1]).unwrap();
        assert_eq!(p.frozen(), &[1]);
    }

    #[test]
    fn information_matrix_examples() {
        let p = problem(&[[1.0, 0.0], [0.0, 1.0]], 2);
        let m = information_matrix(&p, &[1.0, 1.0]).unwrap();
        assert_eq!(m, DMatrix::identity(2, 2));
        assert_eq!(logdet_objective(&p, &[1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(logdet_objective(&p, &[2.0, 0.0]).unwrap(), f64::NEG_INFINITY);
        assert!(information_matrix(&p, &[1.0]).is_err());

        let p = problem(&[[1.0, 2.0], [3.0, 1.0], [0.5, 0.5]], 2);
        let m = information_matrix(&p, &[2.0, 0.0, 0.0]).unwrap();
        assert!(m.determinant().abs() < 1e-12);
    }

    #[test]
    fn information_matrix_matches_cofactor_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let a: Vec<Vec<f64>> = (0..6).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let p = DesignProblem::new(a.clone(), 3, vec![]).unwrap();
            let w = vec![0.5; 6];
            let m = information_matrix(&p, &w).unwrap();
            let mut oracle = DMatrix::zeros(3, 3);
            for j in 0..6 {
                for r in 0..3 {
                    for c in 0..3 {
                        oracle[(r, c)] += 0.5 * a[j][r] * a[j][c];
                    }
                }
            }
            let want = det3(&oracle);
            assert!((m.determinant() - want).abs() <= 1e-12 * want.abs());
            assert!((logdet_objective(&p, &w).unwrap() - want.ln()).abs() <= 1e-10);
        }
    }

    #[test]
    fn truncated_gram_det_examples() {
        let k = brownian_kernel();
        let v = truncated_gram_det(&k, &[vec![1.0]]).unwrap();
        assert!((v - 8.0 / (PI * PI)).abs() < 1e-14);
        assert!(((v - 1.0).abs() - 0.189).abs() < 1e-3);
        assert_eq!(truncated_gram_det(&k, &[vec![0.0]]).unwrap(), 0.0);
        assert!(truncated_gram_det(&k, &[]).is_err());
    }

    #[test]
    fn truncated_gram_det_approaches_exact_det() {
        let k = brownian_kernel();
        let x = [vec![0.25], vec![0.5], vec![1.0]];
        let exact = DMatrix::from_fn(3, 3, |i, j| k.eval(&x[i], &x[j])).determinant();
        // det(Φ_L Λ_L Φ_Lᵀ) with L terms; L = n reproduces the truncated formula
        let det_with = |terms: usize| {
            let g = DMatrix::from_fn(3, 3, |i, j| k.truncated_sum(terms, &x[i], &x[j]).unwrap());
            g.determinant()
        };
        let approx = truncated_gram_det(&k, &x).unwrap();
        assert!((det_with(3) - approx).abs() <= 1e-12 * approx.abs());
        let ratio = approx / exact;
        assert!(ratio > 0.0 && ratio.is_finite());
        let errs: Vec<f64> = [3, 30, 300].iter().map(|&l| (det_with(l) - exact).abs()).collect();
        assert!(errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
    }

    #[test]
    fn bruteforce_examples() {
        let (set, det) = fekete_bruteforce(&problem(&ATOMS, 2)).unwrap();
        assert_eq!(set, vec![1, 3]);
        assert!((det - 4.0).abs() < 1e-12);

        let p = problem(&[[1.0, 0.0], [0.0, 1.0]], 2);
        assert_eq!(fekete_bruteforce(&p).unwrap().0, vec![0, 1]);

        // ties: (1,0),(0,1),(−1,0),(0,−1) all give det 1 → lexicographic first
        let p = problem(&[[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]], 2);
        assert_eq!(fekete_bruteforce(&p).unwrap().0, vec![0, 1]);

        let big = DesignProblem::new((0..60).map(|j| vec![j as f64]).collect(), 10, vec![]).unwrap();
        assert!(matches!(fekete_bruteforce(&big), Err(Error::Capacity(_))));
    }

    #[test]
    fn bruteforce_respects_frozen_and_dominates_random_subsets() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a: Vec<Vec<f64>> = (0..12).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let p = DesignProblem::new(a.clone(), 4, vec![7]).unwrap();
        let (set, det) = fekete_bruteforce(&p).unwrap();
        assert!(set.contains(&7));
        let free = DesignProblem::new(a, 4, vec![]).unwrap();
        let (_, free_det) = fekete_bruteforce(&free).unwrap();
        assert!(free_det >= det * (1.0 - 1e-12));
        for _ in 0..100 {
            let mut idx: Vec<usize> = (0..12).collect();
            for i in 0..4 {
                let s = rng.random_range(i..12);
                idx.swap(i, s);
            }
            let mut w = vec![0.0; 12];
            for &i in &idx[..4] {
                w[i] = 1.0;
            }
            assert!(information_matrix(&free, &w).unwrap().determinant() <= free_det + 1e-12);
        }
    }

    #[test]
    fn projection_is_feasible_and_fixed_on_feasible_points() {
        let frozen = [false, true, false, false, false];
        let w = project_weights(&[3.0, 0.2, -1.0, 0.4, 0.9], 3, &frozen);
        assert!((w.iter().sum::<f64>() - 3.0).abs() < 1e-12);
        assert_eq!(w[1], 1.0);
        assert!(w.iter().all(|&v| (0.0..=1.0).contains(&v)));
        let feasible = [0.5, 1.0, 0.25, 0.25, 1.0];
        let same = project_weights(&feasible, 3, &frozen);
        for (a, b) in same.iter().zip(&feasible) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn multiplicative_singleton() {
        let p = problem(&[[1.0, 0.5], [0.3, 2.0]], 2);
        let w = multiplicative_solver(&p, 100, 1e-12).unwrap();
        assert_eq!(w.0, vec![1.0, 1.0]);
    }

    #[test]
    fn multiplicative_rejects_singular_start() {
        let p = problem(&[[1.0, 0.0], [2.0, 0.0], [3.0, 0.0]], 2);
        assert!(matches!(multiplicative_solver(&p, 10, 1e-9), Err(Error::Initialization(_))));
    }

    fn grid_optimum_m4() -> f64 {
        // det M = (w1 + w3 + 4w4)(w2 + w3) − w3² with w4 = 2 − w1 − w2 − w3
        let steps = 1000usize;
        let h = 1.0 / steps as f64;
        let mut best = f64::NEG_INFINITY;
        for i in 0..=steps {
            for j in 0..=steps {
                let (w1, w2) = (i as f64 * h, j as f64 * h);
                let lo = (steps as i64 - i as i64 - j as i64).max(0) as usize;
                let hi = (2 * steps).saturating_sub(i + j).min(steps);
                for k in lo..=hi {
                    let w3 = k as f64 * h;
                    let w4 = ((2 * steps - i - j - k) as f64) * h;
                    let det = (w1 + w3 + 4.0 * w4) * (w2 + w3) - w3 * w3;
                    best = best.max(det);
                }
            }
        }
        best.ln()
    }

    #[test]
    fn multiplicative_matches_grid_oracle() {
        let p = problem(&ATOMS, 2);
        let w = multiplicative_solver(&p, 2000, 1e-14).unwrap();
        w.check_feasible(&p).unwrap();
        let got = logdet_objective(&p, &w.0).unwrap();
        let grid = grid_optimum_m4();
        assert!(got >= grid - 1e-6, "{got} < {grid}");
        // on the face w1 = 0, w2 = w3 = s, w4 = 2 − 2s: det = 16s − 15s², maximal 64/15
        assert!((got - (64.0f64 / 15.0).ln()).abs() <= 1e-9, "{got} {:?}", w.0);
    }

    #[test]
    fn multiplicative_improves_on_start_and_keeps_frozen() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let a: Vec<Vec<f64>> = (0..15).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let p = DesignProblem::new(a, 5, vec![2, 11]).unwrap();
            let w = multiplicative_solver(&p, 500, 1e-12).unwrap();
            w.check_feasible(&p).unwrap();
            let mut start = vec![3.0 / 13.0; 15];
            start[2] = 1.0;
            start[11] = 1.0;
            assert!(logdet_objective(&p, &w.0).unwrap() >= logdet_objective(&p, &start).unwrap());
        }
    }
}
