//! Positive-definite kernels with closed-form evaluation and truncated Mercer
//! eigen-systems `K(x, y) = Σ λ_ℓ φ_ℓ(x) φ_ℓ(y)`.
//!
//! Three families are provided:
//!
//! * [`Brownian`]: `min(x, y)` on `[0, 1]`, sine eigenfunctions orthonormal in
//!   `L²([0, 1])`.
//! * [`SphericalImq`]: the inverse multiquadric `1/√(1 + γ² − 2γ xᵀy)` on the
//!   unit sphere, with real spherical harmonics orthonormal with respect to the
//!   surface measure.
//! * [`Gaussian`]: `exp(−ε²‖x − y‖²)` in one or two dimensions, with Hermite
//!   eigenfunctions orthonormal in `L²(ℝ, (α/√π) e^{−α²x²})`. The candidate
//!   domains used with this kernel are bounded subsets of `[−1, 1]^d`, where the
//!   eigenfunctions are no longer orthonormal; they are used there as written.
//!
//! Eigen-indices are 1-based everywhere in this module.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{check_len, Error, Result};

/// Enumeration of tensor-product eigenfunctions along each anti-diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenOrdering {
    /// `φ₁φ₁, φ₂φ₁, φ₁φ₂, φ₃φ₁, φ₂φ₂, φ₁φ₃, …` (first factor descending).
    #[default]
    Standard,
    /// `φ₁φ₁, φ₁φ₂, φ₂φ₁, φ₁φ₃, φ₂φ₂, φ₃φ₁, …` (first factor ascending).
    Swapped,
}

/// A kernel together with an indexed eigen-system.
///
/// Implementations are immutable and may be shared across threads.
pub trait MercerKernel: Send + Sync + fmt::Debug {
    /// Ambient dimension of the points the kernel accepts.
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64], y: &[f64]) -> f64;

    /// `λ_ℓ` for a 1-based index.
    fn eigenvalue(&self, index: usize) -> Result<f64>;

    /// `φ_ℓ(x)` for a 1-based index.
    fn eigenfunction(&self, index: usize, x: &[f64]) -> Result<f64>;

    /// Only tensor-product kernels distinguish orderings.
    fn ordering(&self) -> EigenOrdering {
        EigenOrdering::Standard
    }

    /// Checks dimension and domain membership of a point.
    fn check_point(&self, x: &[f64]) -> Result<()>;

    /// `(φ₁(y), …, φ_len(y))`.
    fn regressor(&self, len: usize, y: &[f64]) -> Result<Vec<f64>> {
        (1..=len).map(|l| self.eigenfunction(l, y)).collect()
    }

    /// `Σ_{ℓ ≤ terms} λ_ℓ φ_ℓ(x) φ_ℓ(y)`.
    fn truncated_sum(&self, terms: usize, x: &[f64], y: &[f64]) -> Result<f64> {
        let ax = self.regressor(terms, x)?;
        let ay = self.regressor(terms, y)?;
        let mut acc = 0.0;
        for (l, (fx, fy)) in ax.iter().zip(&ay).enumerate() {
            acc += self.eigenvalue(l + 1)? * fx * fy;
        }
        Ok(acc)
    }
}

fn check_index(index: usize) -> Result<()> {
    if index == 0 {
        Err(Error::Index {
            index,
            valid: "1, 2, …".into(),
        })
    } else {
        Ok(())
    }
}

const DOMAIN_TOL: f64 = 1e-12;

/// Brownian motion kernel `min(x, y)` on `[0, 1]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Brownian;

pub fn brownian_kernel() -> Brownian {
    Brownian
}

impl MercerKernel for Brownian {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        x[0].min(y[0])
    }

    fn eigenvalue(&self, index: usize) -> Result<f64> {
        check_index(index)?;
        let k = (2 * index - 1) as f64;
        Ok(4.0 / (k * k * PI * PI))
    }

    fn eigenfunction(&self, index: usize, x: &[f64]) -> Result<f64> {
        check_index(index)?;
        self.check_point(x)?;
        let k = (2 * index - 1) as f64;
        Ok(2f64.sqrt() * (k * PI * x[0] / 2.0).sin())
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        check_len(1, x.len())?;
        if x[0] < -DOMAIN_TOL || x[0] > 1.0 + DOMAIN_TOL {
            return Err(Error::Domain(format!("{} is outside [0, 1]", x[0])));
        }
        Ok(())
    }
}

/// Spherical inverse multiquadric kernel on `S²`.
#[derive(Debug, Clone, Copy)]
pub struct SphericalImq {
    gamma: f64,
}

pub fn spherical_imq_kernel(gamma: f64) -> Result<SphericalImq> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Parameter(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    Ok(SphericalImq { gamma })
}

/// Splits a 1-based flat harmonic index into `(degree, order)` with the order in
/// `1..=2·degree+1`, so that `index = degree² + order`.
pub fn harmonic_index(index: usize) -> (usize, usize) {
    debug_assert!(index >= 1);
    let mut degree = ((index - 1) as f64).sqrt() as usize;
    while degree * degree > index - 1 {
        degree -= 1;
    }
    while (degree + 1) * (degree + 1) <= index - 1 {
        degree += 1;
    }
    (degree, index - degree * degree)
}

/// Real orthonormal spherical harmonics `Y_{n,k}` for all degrees `n ≤ max_degree`
/// at a unit vector, flattened in the order `Y_{0,1}, Y_{1,1}, Y_{1,2}, Y_{1,3}, …`.
///
/// Within degree `n`, order `k` corresponds to `m = k − n − 1 ∈ [−n, n]`:
/// `m < 0` uses `sin(|m|φ)`, `m = 0` the zonal harmonic, `m > 0` uses `cos(mφ)`.
pub fn real_spherical_harmonics(max_degree: usize, x: &[f64]) -> Vec<f64> {
    let cos_t = x[2].clamp(-1.0, 1.0);
    let sin_t = (x[0] * x[0] + x[1] * x[1]).sqrt();
    let phi = x[1].atan2(x[0]);
    let nmax = max_degree;

    // Fully normalised associated Legendre functions, no Condon–Shortley phase.
    // plm[n][m] for 0 ≤ m ≤ n ≤ nmax.
    let mut plm = vec![vec![0.0; nmax + 1]; nmax + 1];
    plm[0][0] = (1.0 / (4.0 * PI)).sqrt();
    for m in 1..=nmax {
        let mf = m as f64;
        plm[m][m] = ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * sin_t * plm[m - 1][m - 1];
    }
    for m in 0..nmax {
        let mf = m as f64;
        plm[m + 1][m] = (2.0 * mf + 3.0).sqrt() * cos_t * plm[m][m];
    }
    for m in 0..=nmax {
        let mf = m as f64;
        for n in (m + 2)..=nmax {
            let nf = n as f64;
            let a = ((4.0 * nf * nf - 1.0) / (nf * nf - mf * mf)).sqrt();
            let b = (((nf - 1.0) * (nf - 1.0) - mf * mf) / (4.0 * (nf - 1.0) * (nf - 1.0) - 1.0)).sqrt();
            plm[n][m] = a * (cos_t * plm[n - 1][m] - b * plm[n - 2][m]);
        }
    }

    let mut out = Vec::with_capacity((nmax + 1) * (nmax + 1));
    for n in 0..=nmax {
        for k in 1..=(2 * n + 1) {
            let m = k as i64 - n as i64 - 1;
            let value = match m {
                0 => plm[n][0],
                m if m > 0 => 2f64.sqrt() * plm[n][m as usize] * (m as f64 * phi).cos(),
                m => 2f64.sqrt() * plm[n][(-m) as usize] * ((-m) as f64 * phi).sin(),
            };
            out.push(value);
        }
    }
    out
}

impl SphericalImq {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

impl MercerKernel for SphericalImq {
    fn dim(&self) -> usize {
        3
    }

    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let t = x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
        1.0 / (1.0 + self.gamma * self.gamma - 2.0 * self.gamma * t).sqrt()
    }

    fn eigenvalue(&self, index: usize) -> Result<f64> {
        check_index(index)?;
        let (degree, _) = harmonic_index(index);
        let n = degree as f64;
        Ok(4.0 * PI * self.gamma.powi(degree as i32) / (2.0 * n + 1.0))
    }

    fn eigenfunction(&self, index: usize, x: &[f64]) -> Result<f64> {
        check_index(index)?;
        self.check_point(x)?;
        let (degree, _) = harmonic_index(index);
        Ok(real_spherical_harmonics(degree, x)[index - 1])
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        check_len(3, x.len())?;
        let norm = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        if (norm - 1.0).abs() > 1e-8 {
            return Err(Error::Domain(format!("expected a unit vector, norm is {norm}")));
        }
        Ok(())
    }

    fn regressor(&self, len: usize, y: &[f64]) -> Result<Vec<f64>> {
        self.check_point(y)?;
        if len == 0 {
            return Ok(Vec::new());
        }
        let (degree, _) = harmonic_index(len);
        let mut all = real_spherical_harmonics(degree, y);
        all.truncate(len);
        Ok(all)
    }
}

/// Gaussian kernel `exp(−ε²‖x − y‖²)` in dimension one or two.
#[derive(Debug, Clone, Copy)]
pub struct Gaussian {
    dim: usize,
    epsilon: f64,
    alpha: f64,
    ordering: EigenOrdering,
    beta: f64,
    delta2: f64,
    lambda1: f64,
    ratio: f64,
}

pub fn gaussian_kernel(dim: usize, epsilon: f64, alpha: f64, ordering: EigenOrdering) -> Result<Gaussian> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::Parameter(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Parameter(format!("alpha must be positive, got {alpha}")));
    }
    if dim != 1 && dim != 2 {
        return Err(Error::Parameter(format!("gaussian kernel supports d = 1 or 2, got {dim}")));
    }
    let beta = (1.0 + (2.0 * epsilon / alpha).powi(2)).powf(0.25);
    let delta2 = alpha * alpha * (beta * beta - 1.0) / 2.0;
    let denom = alpha * alpha + delta2 + epsilon * epsilon;
    Ok(Gaussian {
        dim,
        epsilon,
        alpha,
        ordering,
        beta,
        delta2,
        lambda1: (alpha * alpha / denom).sqrt(),
        ratio: epsilon * epsilon / denom,
    })
}

/// Position of a 1-based flat index on the anti-diagonals of `ℕ × ℕ`:
/// returns `(i, j)` (both 1-based) for the requested ordering.
pub fn tensor_index(index: usize, ordering: EigenOrdering) -> (usize, usize) {
    debug_assert!(index >= 1);
    // diagonal s holds the pairs with i + j = s + 1; it starts after s(s−1)/2 entries
    let mut s = 1;
    while s * (s + 1) / 2 < index {
        s += 1;
    }
    let t = index - s * (s - 1) / 2 - 1;
    match ordering {
        EigenOrdering::Standard => (s - t, 1 + t),
        EigenOrdering::Swapped => (1 + t, s - t),
    }
}

impl Gaussian {
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `δ²` of the eigenfunction envelope `e^{−δ²x²}`.
    pub fn delta_squared(&self) -> f64 {
        self.delta2
    }

    /// One-dimensional eigenvalue `λ_n`.
    pub fn factor_eigenvalue(&self, n: usize) -> f64 {
        self.lambda1 * self.ratio.powi(n as i32 - 1)
    }

    /// One-dimensional eigenfunctions `φ₁(x), …, φ_count(x)`, evaluated through the
    /// normalised Hermite recurrence `h_{k+1} = √(2/(k+1)) t h_k − √(k/(k+1)) h_{k−1}`
    /// with `h_k = H_k / √(2^k k!)`.
    pub fn factor_eigenfunctions(&self, count: usize, x: f64) -> Vec<f64> {
        let t = self.alpha * self.beta * x;
        let envelope = self.beta.sqrt() * (-self.delta2 * x * x).exp();
        let mut out = Vec::with_capacity(count);
        let (mut prev, mut cur) = (0.0, 1.0);
        for k in 0..count {
            out.push(envelope * cur);
            let kf = k as f64;
            let next = (2.0 / (kf + 1.0)).sqrt() * t * cur - (kf / (kf + 1.0)).sqrt() * prev;
            prev = cur;
            cur = next;
        }
        out
    }

    fn factor_indices(&self, index: usize) -> (usize, usize) {
        if self.dim == 1 {
            (index, 0)
        } else {
            tensor_index(index, self.ordering)
        }
    }
}

impl MercerKernel for Gaussian {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        (-self.epsilon * self.epsilon * d2).exp()
    }

    fn eigenvalue(&self, index: usize) -> Result<f64> {
        check_index(index)?;
        Ok(match self.factor_indices(index) {
            (i, 0) => self.factor_eigenvalue(i),
            (i, j) => self.factor_eigenvalue(i) * self.factor_eigenvalue(j),
        })
    }

    fn eigenfunction(&self, index: usize, x: &[f64]) -> Result<f64> {
        check_index(index)?;
        self.check_point(x)?;
        Ok(match self.factor_indices(index) {
            (i, 0) => self.factor_eigenfunctions(i, x[0])[i - 1],
            (i, j) => self.factor_eigenfunctions(i, x[0])[i - 1] * self.factor_eigenfunctions(j, x[1])[j - 1],
        })
    }

    fn ordering(&self) -> EigenOrdering {
        self.ordering
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        check_len(self.dim, x.len())?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite coordinate".into()));
        }
        Ok(())
    }

    fn regressor(&self, len: usize, y: &[f64]) -> Result<Vec<f64>> {
        self.check_point(y)?;
        if self.dim == 1 {
            return Ok(self.factor_eigenfunctions(len, y[0]));
        }
        let pairs: Vec<(usize, usize)> = (1..=len).map(|l| tensor_index(l, self.ordering)).collect();
        let max_factor = pairs.iter().map(|&(i, j)| i.max(j)).max().unwrap_or(0);
        let fx = self.factor_eigenfunctions(max_factor, y[0]);
        let fy = self.factor_eigenfunctions(max_factor, y[1]);
        Ok(pairs.into_iter().map(|(i, j)| fx[i - 1] * fy[j - 1]).collect())
    }
}
