//! Kernel interpolation on a finite point set: the kernel matrix, interpolants, the
//! power function and the P-greedy baseline.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{check_len, Error, Result};
use crate::geometry::CandidateSet;
use crate::kernels::MercerKernel;

/// Smallest admissible ratio between the smallest and largest Cholesky pivot.
pub const MIN_PIVOT_RATIO: f64 = 1e-15;
/// Squared power values in `[−CLAMP, 0)` are treated as rounding and set to zero.
pub const POWER_CLAMP: f64 = 1e-9;
/// Incremental P-greedy pivots at or below this trigger a full recomputation.
pub const GREEDY_PIVOT_FLOOR: f64 = 1e-12;
const GREEDY_TIE: f64 = 1e-10;

/// Ordered, pairwise distinct points.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    points: Vec<Vec<f64>>,
}

impl PointSet {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(first) = points.first() {
            for p in &points {
                check_len(first.len(), p.len())?;
            }
        }
        let scale = points
            .iter()
            .flatten()
            .fold(1.0f64, |a, v| a.max(v.abs()));
        for i in 0..points.len() {
            for j in 0..i {
                let d = points[i]
                    .iter()
                    .zip(&points[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                if d <= 1e-14 * scale {
                    return Err(Error::Parameter(format!("points {j} and {i} coincide")));
                }
            }
        }
        Ok(PointSet { points })
    }

    pub fn empty() -> Self {
        PointSet { points: Vec::new() }
    }

    /// The candidates at the given 0-based indices, in that order.
    pub fn from_indices(candidates: &CandidateSet, indices: &[usize]) -> Result<Self> {
        let points = indices
            .iter()
            .map(|&i| {
                candidates.points.get(i).cloned().ok_or_else(|| Error::Index {
                    index: i,
                    valid: format!("0..{}", candidates.len()),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(points)
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Kernel matrix `𝒦 = (K(x_i, x_j))` of a point set with its Cholesky factor.
#[derive(Debug, Clone)]
pub struct KernelSystem {
    points: Vec<Vec<f64>>,
    gram: DMatrix<f64>,
    factor: Option<Cholesky<f64, Dyn>>,
}

pub fn kernel_system(kernel: &dyn MercerKernel, x: &PointSet) -> Result<KernelSystem> {
    for p in x.points() {
        kernel.check_point(p)?;
    }
    let n = x.len();
    let pts = x.points();
    let gram = DMatrix::from_fn(n, n, |i, j| kernel.eval(&pts[i], &pts[j]));
    if n == 0 {
        return Ok(KernelSystem {
            points: Vec::new(),
            gram,
            factor: None,
        });
    }
    let factor = Cholesky::new(gram.clone()).ok_or(Error::Conditioning { pivot_ratio: 0.0 })?;
    let ratio = pivot_ratio(&factor);
    if ratio < MIN_PIVOT_RATIO {
        return Err(Error::Conditioning { pivot_ratio: ratio });
    }
    Ok(KernelSystem {
        points: pts.to_vec(),
        gram,
        factor: Some(factor),
    })
}

/// `min L_ii² / max L_ii²`.
fn pivot_ratio(factor: &Cholesky<f64, Dyn>) -> f64 {
    let l = factor.l_dirty();
    let (lo, hi) = (0..l.nrows()).fold((f64::INFINITY, 0.0f64), |(lo, hi), i| {
        let d = l[(i, i)] * l[(i, i)];
        (lo.min(d), hi.max(d))
    });
    lo / hi
}

impl KernelSystem {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// The lower Cholesky factor (empty for an empty point set).
    pub fn cholesky_l(&self) -> DMatrix<f64> {
        self.factor.as_ref().map_or_else(|| DMatrix::zeros(0, 0), |f| f.l())
    }

    /// `k(x) = (K(x, x_1), …, K(x, x_n))`.
    pub fn kernel_vector(&self, kernel: &dyn MercerKernel, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.points.iter().map(|p| kernel.eval(x, p)))
    }

    /// `‖L⁻¹k(x)‖²`, i.e. `k(x)ᵀ𝒦⁻¹k(x)`.
    fn projected_norm2(&self, kernel: &dyn MercerKernel, x: &[f64]) -> f64 {
        let Some(f) = &self.factor else { return 0.0 };
        let mut k = self.kernel_vector(kernel, x);
        f.l_dirty().solve_lower_triangular_mut(&mut k);
        k.norm_squared()
    }
}

/// `s_f(x) = Σ c_j K(x, x_j)`.
#[derive(Debug, Clone)]
pub struct Interpolant {
    points: Vec<Vec<f64>>,
    coefficients: Vec<f64>,
}

impl Interpolant {
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn eval(&self, kernel: &dyn MercerKernel, x: &[f64]) -> f64 {
        self.points
            .iter()
            .zip(&self.coefficients)
            .map(|(p, c)| c * kernel.eval(x, p))
            .sum()
    }
}

/// The interpolant matching `values` at the nodes of `sys`.
pub fn interpolate(sys: &KernelSystem, values: &[f64]) -> Result<Interpolant> {
    check_len(sys.len(), values.len())?;
    let coefficients = match &sys.factor {
        Some(f) => f.solve(&DVector::from_column_slice(values)).as_slice().to_vec(),
        None => Vec::new(),
    };
    Ok(Interpolant {
        points: sys.points.clone(),
        coefficients,
    })
}

/// `P(x) = √(K(x,x) − k(x)ᵀ𝒦⁻¹k(x))`; equals `√K(x,x)` for an empty system.
pub fn power_function(sys: &KernelSystem, kernel: &dyn MercerKernel, x: &[f64]) -> Result<f64> {
    kernel.check_point(x)?;
    let p2 = kernel.eval(x, x) - sys.projected_norm2(kernel, x);
    clamp_power(p2)
}

fn clamp_power(p2: f64) -> Result<f64> {
    if p2 >= 0.0 {
        Ok(p2.sqrt())
    } else if p2 >= -POWER_CLAMP {
        Ok(0.0)
    } else {
        Err(Error::Numerical(format!("squared power function {p2:e} is negative")))
    }
}

/// `√(det 𝒦_{x} / det 𝒦)` with `𝒦_{x}` the kernel matrix of `X ∪ {x}`, both
/// determinants computed directly. Only suitable for small `n`.
pub fn determinant_ratio_power(kernel: &dyn MercerKernel, x: &PointSet, point: &[f64]) -> Result<f64> {
    kernel.check_point(point)?;
    let n = x.len();
    let pts = x.points();
    let at = |i: usize| if i < n { pts[i].as_slice() } else { point };
    let bordered = DMatrix::from_fn(n + 1, n + 1, |i, j| kernel.eval(at(i), at(j)));
    let inner = bordered.view((0, 0), (n, n)).into_owned();
    let inner_det = if n == 0 { 1.0 } else { inner.lu().determinant() };
    if !(inner_det > 0.0) {
        return Err(Error::Conditioning { pivot_ratio: 0.0 });
    }
    Ok((bordered.lu().determinant() / inner_det).max(0.0).sqrt())
}

/// Largest power-function value over the candidates and its first index.
pub fn max_power_over(sys: &KernelSystem, kernel: &dyn MercerKernel, candidates: &CandidateSet) -> Result<(f64, usize)> {
    let mut best = (f64::NEG_INFINITY, 0);
    for (j, y) in candidates.points.iter().enumerate() {
        let p = power_function(sys, kernel, y)?;
        if p > best.0 {
            best = (p, j);
        }
    }
    if candidates.is_empty() {
        return Err(Error::Parameter("empty candidate set".into()));
    }
    Ok(best)
}

/// Spectral condition number of the kernel matrix.
pub fn condition_number(sys: &KernelSystem) -> Result<f64> {
    spectral_condition(&sys.gram)
}

/// Spectral condition number of the kernel matrix of `x` without factorising it;
/// infinite when the smallest computed eigenvalue is not positive.
pub fn gram_condition_number(kernel: &dyn MercerKernel, x: &PointSet) -> Result<f64> {
    let pts = x.points();
    let n = pts.len();
    spectral_condition(&DMatrix::from_fn(n, n, |i, j| kernel.eval(&pts[i], &pts[j])))
}

fn spectral_condition(gram: &DMatrix<f64>) -> Result<f64> {
    if gram.is_empty() {
        return Err(Error::Parameter("condition number of an empty kernel matrix".into()));
    }
    let eig = SymmetricEigen::new(gram.clone()).eigenvalues;
    let hi = eig.iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v));
    let lo = eig.iter().fold(f64::INFINITY, |a, &v| a.min(v));
    Ok(if lo > 0.0 { hi / lo } else { f64::INFINITY })
}

/// First index whose value is within a relative `GREEDY_TIE` of the maximum over
/// the unmasked entries.
fn greedy_argmax(p2: &[f64], taken: &[bool]) -> Option<usize> {
    let max = p2
        .iter()
        .zip(taken)
        .filter(|(_, &t)| !t)
        .fold(f64::NEG_INFINITY, |a, (&v, _)| a.max(v));
    if max == f64::NEG_INFINITY {
        return None;
    }
    let floor = max - GREEDY_TIE * max.abs();
    (0..p2.len()).find(|&j| !taken[j] && p2[j] >= floor)
}

/// P-greedy selection of `n` candidate indices. Starts at the maximiser of
/// `K(y, y)` and repeatedly adds the maximiser of the current power function, kept
/// up to date through a Newton basis.
pub fn p_greedy(kernel: &dyn MercerKernel, candidates: &CandidateSet, n: usize) -> Result<Vec<usize>> {
    let m = candidates.len();
    if n > m {
        return Err(Error::Parameter(format!("n = {n} exceeds the {m} candidates")));
    }
    let ys = &candidates.points;
    let mut p2: Vec<f64> = ys.iter().map(|y| kernel.eval(y, y)).collect();
    // column k holds the k-th Newton basis function on the candidates
    let mut basis = DMatrix::<f64>::zeros(m, n);
    let mut taken = vec![false; m];
    let mut chosen = Vec::with_capacity(n);

    while chosen.len() < n {
        let k = chosen.len();
        let mut j = greedy_argmax(&p2, &taken).expect("unselected candidates remain");
        if p2[j] <= GREEDY_PIVOT_FLOOR && k > 0 {
            // a failed refactorisation keeps the incremental values
            if recompute_basis(kernel, candidates, &chosen, &mut basis, &mut p2) {
                j = greedy_argmax(&p2, &taken).expect("unselected candidates remain");
            }
        }
        let pivot = p2[j];
        if !(pivot > 0.0) {
            return Err(Error::Numerical(format!(
                "power function vanishes on all remaining candidates after {k} points"
            )));
        }
        let scale = pivot.sqrt();
        let xj = &ys[j];
        for i in 0..m {
            let mut v = kernel.eval(&ys[i], xj);
            for c in 0..k {
                v -= basis[(i, c)] * basis[(j, c)];
            }
            basis[(i, k)] = v / scale;
        }
        for i in 0..m {
            p2[i] -= basis[(i, k)] * basis[(i, k)];
        }
        taken[j] = true;
        p2[j] = 0.0;
        chosen.push(j);
    }
    Ok(chosen)
}

/// Rebuilds the Newton basis `K(C, X) L⁻ᵀ` and the squared power values from a
/// fresh factorisation of the chosen points. Returns false, leaving both
/// untouched, when the chosen Gram matrix is numerically singular.
fn recompute_basis(
    kernel: &dyn MercerKernel,
    candidates: &CandidateSet,
    chosen: &[usize],
    basis: &mut DMatrix<f64>,
    p2: &mut [f64],
) -> bool {
    let xs: Vec<&[f64]> = chosen.iter().map(|&c| candidates.points[c].as_slice()).collect();
    let gram = DMatrix::from_fn(xs.len(), xs.len(), |i, j| kernel.eval(xs[i], xs[j]));
    // no conditioning gate here: the greedy pivots are already near rounding level
    let Some(chol) = Cholesky::new(gram) else {
        return false;
    };
    let l = chol.l();
    for (i, y) in candidates.points.iter().enumerate() {
        let mut k = DVector::from_iterator(xs.len(), xs.iter().map(|x| kernel.eval(y, x)));
        l.solve_lower_triangular_mut(&mut k);
        for c in 0..chosen.len() {
            basis[(i, c)] = k[c];
        }
        p2[i] = kernel.eval(y, y) - k.norm_squared();
    }
    for &c in chosen {
        p2[c] = 0.0;
    }
    true
}
