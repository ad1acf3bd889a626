//! Primal-dual interior-point solver for [`ConicProgram`]s.
//!
//! The program is brought to the form
//!
//! ```text
//! minimise qᵀx   subject to   Ax = b,   Gx + s = h,   s ∈ ℝ₊^k × Q³ × ⋯ × Q³
//! ```
//!
//! with `q = −c`. Equality rows and fixed variables form `A`; one-sided rows, finite
//! variable bounds and the cones form `G`. A rotated cone `η² ≤ 2ξζ` becomes the
//! Lorentz cone element `((ξ + ζ)/√2, (ξ − ζ)/√2, η)`.
//!
//! Iterations follow the Mehrotra predictor-corrector scheme with Nesterov–Todd
//! scaling. Bound and cone blocks of `G` touch at most three variables and no
//! variable lies in two cones, so those blocks are eliminated into a block-diagonal
//! term of the reduced KKT matrix
//!
//! ```text
//! [ H + δI   Aᵀ    G_rᵀ  ]
//! [ A       −δI    0     ]
//! [ G_r      0    −W_r²  ]
//! ```
//!
//! which keeps only the general inequality rows `G_r` explicit. It is factorised by
//! a sparse LDLᵀ with a fill-reducing ordering computed once per solve.

use std::f64::consts::FRAC_1_SQRT_2;
use std::path::Path;
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::ldlt::factor::LdltRegularization;
use faer::sparse::linalg::cholesky::{factorize_symbolic_cholesky, LdltRef, SymbolicCholesky, SymmetricOrdering};
use faer::sparse::{Argsort, Pair, SparseColMat, SymbolicSparseColMat};
use faer::{Conj, MatMut, Par, Side};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::socp::ConicProgram;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    Optimal,
    NearOptimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    NumericalFailure,
}

impl SolverStatus {
    pub fn has_solution(self) -> bool {
        matches!(self, SolverStatus::Optimal | SolverStatus::NearOptimal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-8, max_iter: 200 }
    }
}

/// Relative primal infeasibility, dual infeasibility and duality gap.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverResult {
    pub status: SolverStatus,
    /// Present when the status carries a solution.
    pub v: Option<Vec<f64>>,
    /// `cᵀv` of the returned point (of the last iterate when there is none).
    pub objective: f64,
    pub iterations: usize,
    pub residuals: Residuals,
}

/// Residual level below which an unconverged iterate is still returned.
const NEAR_OPTIMAL_TOL: f64 = 1e-5;
const STATIC_REG: f64 = 1e-9;
/// Regularisations tried in turn when a factorisation breaks down.
const FALLBACK_REG: [f64; 3] = [STATIC_REG, 1e-7, 1e-5];
const STEP_FRACTION: f64 = 0.99;
const REFINE_STEPS: usize = 8;

/// A solver backend: the built-in interior-point method or an external process.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Backend {
    #[default]
    Builtin,
    /// Shell command invoked as `<cmd> <program.json> <result.json>`.
    External(String),
}

impl Backend {
    /// Parses `builtin` or `external:<cmd>`.
    pub fn parse(spec: &str) -> Result<Self> {
        match spec.split_once(':') {
            _ if spec == "builtin" => Ok(Backend::Builtin),
            Some(("external", cmd)) if !cmd.trim().is_empty() => Ok(Backend::External(cmd.to_string())),
            _ => Err(Error::Parameter(format!("unknown backend {spec:?}; expected builtin or external:<cmd>"))),
        }
    }

    pub fn solve(&self, prog: &ConicProgram, opts: &SolverOptions) -> Result<SolverResult> {
        match self {
            Backend::Builtin => solve(prog, opts),
            Backend::External(cmd) => solve_external(prog, cmd, opts),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Block {
    /// `±x_j ≤ …` from a variable bound.
    Bound { var: usize, sign: f64 },
    Cone { vars: [usize; 3] },
}

/// The program in standard form.
struct Standard {
    n: usize,
    q: Vec<f64>,
    /// Equality rows as `(row, col, value)`.
    a: Vec<(usize, usize, f64)>,
    b: Vec<f64>,
    /// Explicit inequality rows `g·x + s = h`, sign already applied.
    rows: Vec<Vec<(usize, f64)>>,
    /// Eliminated blocks: bounds first, then cones.
    bounds: Vec<Block>,
    cones: Vec<Block>,
    h: Vec<f64>,
}

impl Standard {
    fn from_program(prog: &ConicProgram) -> Self {
        let n = prog.num_vars();
        let q: Vec<f64> = prog.objective.iter().map(|c| -c).collect();
        let mut by_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); prog.num_rows()];
        for &(r, c, v) in &prog.entries {
            by_row[r].push((c, v));
        }

        let mut a = Vec::new();
        let mut b = Vec::new();
        let mut rows = Vec::new();
        let mut h_rows = Vec::new();
        for (r, coeffs) in by_row.into_iter().enumerate() {
            let (lo, hi) = (prog.row_lower[r], prog.row_upper[r]);
            if lo == hi {
                let i = b.len();
                a.extend(coeffs.iter().map(|&(c, v)| (i, c, v)));
                b.push(lo);
                continue;
            }
            if hi.is_finite() {
                rows.push(coeffs.clone());
                h_rows.push(hi);
            }
            if lo.is_finite() {
                rows.push(coeffs.iter().map(|&(c, v)| (c, -v)).collect());
                h_rows.push(-lo);
            }
        }

        let mut in_cone_base = vec![false; n];
        for cone in &prog.cones {
            in_cone_base[cone.xi] = true;
            in_cone_base[cone.zeta] = true;
        }
        let mut bounds = Vec::new();
        let mut h_bounds = Vec::new();
        for j in 0..n {
            let (lo, hi) = (prog.var_lower[j], prog.var_upper[j]);
            if lo == hi {
                let i = b.len();
                a.push((i, j, 1.0));
                b.push(lo);
                continue;
            }
            // ξ, ζ ≥ 0 already follows from cone membership
            if lo.is_finite() && !(lo == 0.0 && in_cone_base[j]) {
                bounds.push(Block::Bound { var: j, sign: -1.0 });
                h_bounds.push(-lo);
            }
            if hi.is_finite() {
                bounds.push(Block::Bound { var: j, sign: 1.0 });
                h_bounds.push(hi);
            }
        }
        let cones: Vec<Block> = prog
            .cones
            .iter()
            .map(|c| Block::Cone {
                vars: [c.xi, c.zeta, c.eta],
            })
            .collect();
        let mut h = h_rows;
        h.extend(h_bounds);
        h.extend(std::iter::repeat_n(0.0, 3 * cones.len()));
        Standard {
            n,
            q,
            a,
            b,
            rows,
            bounds,
            cones,
            h,
        }
    }

    fn p(&self) -> usize {
        self.b.len()
    }

    /// Number of nonnegative-orthant coordinates (rows then bounds).
    fn n_lin(&self) -> usize {
        self.rows.len() + self.bounds.len()
    }

    fn n_cone_slots(&self) -> usize {
        self.n_lin() + 3 * self.cones.len()
    }

    fn degree(&self) -> f64 {
        (self.n_lin() + self.cones.len()) as f64
    }

    fn mul_a(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for &(i, j, v) in &self.a {
            out[i] += v * x[j];
        }
    }

    fn mul_at(&self, y: &[f64], out: &mut [f64]) {
        for &(i, j, v) in &self.a {
            out[j] += v * y[i];
        }
    }

    fn mul_g(&self, x: &[f64], out: &mut [f64]) {
        for (r, row) in self.rows.iter().enumerate() {
            out[r] = row.iter().map(|&(j, v)| v * x[j]).sum();
        }
        let nr = self.rows.len();
        for (k, blk) in self.bounds.iter().enumerate() {
            if let Block::Bound { var, sign } = *blk {
                out[nr + k] = sign * x[var];
            }
        }
        let base = self.n_lin();
        for (c, blk) in self.cones.iter().enumerate() {
            if let Block::Cone { vars: [xi, ze, et] } = *blk {
                let o = base + 3 * c;
                out[o] = -(x[xi] + x[ze]) * FRAC_1_SQRT_2;
                out[o + 1] = -(x[xi] - x[ze]) * FRAC_1_SQRT_2;
                out[o + 2] = -x[et];
            }
        }
    }

    fn mul_gt(&self, z: &[f64], out: &mut [f64]) {
        for (r, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                out[j] += v * z[r];
            }
        }
        let nr = self.rows.len();
        for (k, blk) in self.bounds.iter().enumerate() {
            if let Block::Bound { var, sign } = *blk {
                out[var] += sign * z[nr + k];
            }
        }
        let base = self.n_lin();
        for (c, blk) in self.cones.iter().enumerate() {
            if let Block::Cone { vars: [xi, ze, et] } = *blk {
                let o = base + 3 * c;
                out[xi] -= (z[o] + z[o + 1]) * FRAC_1_SQRT_2;
                out[ze] -= (z[o] - z[o + 1]) * FRAC_1_SQRT_2;
                out[et] -= z[o + 2];
            }
        }
    }
}

/// `T` with `G_c = −T` for a cone block.
const T: [[f64; 3]; 3] = [
    [FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0],
    [FRAC_1_SQRT_2, -FRAC_1_SQRT_2, 0.0],
    [0.0, 0.0, 1.0],
];

type Mat3 = [[f64; 3]; 3];

fn mat3_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

fn mat3_vec(a: &Mat3, x: &[f64]) -> [f64; 3] {
    [
        a[0][0] * x[0] + a[0][1] * x[1] + a[0][2] * x[2],
        a[1][0] * x[0] + a[1][1] * x[1] + a[1][2] * x[2],
        a[2][0] * x[0] + a[2][1] * x[1] + a[2][2] * x[2],
    ]
}

fn transpose3(a: &Mat3) -> Mat3 {
    let mut t = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = a[j][i];
        }
    }
    t
}

/// `x₀² − ‖x̄‖²`, factored to avoid cancellation near the boundary.
fn jnorm2(x: &[f64]) -> f64 {
    let r = x[1].hypot(x[2]);
    (x[0] - r) * (x[0] + r)
}

/// Nesterov–Todd scaling of a Lorentz cone block: `W = β(2vvᵀ − J)`, symmetric, with
/// `W z = W⁻¹ s`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SocScaling {
    w: Mat3,
    winv: Mat3,
}

impl SocScaling {
    pub(crate) fn new(s: &[f64], z: &[f64]) -> Self {
        let sn = jnorm2(s).sqrt();
        let zn = jnorm2(z).sqrt();
        let sb = [s[0] / sn, s[1] / sn, s[2] / sn];
        let zb = [z[0] / zn, z[1] / zn, z[2] / zn];
        let gamma = ((1.0 + sb[0] * zb[0] + sb[1] * zb[1] + sb[2] * zb[2]) / 2.0).sqrt();
        let wb = [
            (sb[0] + zb[0]) / (2.0 * gamma),
            (sb[1] - zb[1]) / (2.0 * gamma),
            (sb[2] - zb[2]) / (2.0 * gamma),
        ];
        let beta = (sn / zn).sqrt();
        let norm = (2.0 * (wb[0] + 1.0)).sqrt();
        let v = [(wb[0] + 1.0) / norm, wb[1] / norm, wb[2] / norm];
        let jv = [v[0], -v[1], -v[2]];
        let jdiag = [1.0, -1.0, -1.0];
        let mut w = [[0.0; 3]; 3];
        let mut winv = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let jij = if i == j { jdiag[i] } else { 0.0 };
                w[i][j] = beta * (2.0 * v[i] * v[j] - jij);
                winv[i][j] = (2.0 * jv[i] * jv[j] - jij) / beta;
            }
        }
        SocScaling { w, winv }
    }

    pub(crate) fn apply(&self, x: &[f64]) -> [f64; 3] {
        mat3_vec(&self.w, x)
    }

    pub(crate) fn apply_inv(&self, x: &[f64]) -> [f64; 3] {
        mat3_vec(&self.winv, x)
    }
}

/// Scaling of all cone blocks at the current iterate.
struct Scaling {
    /// `√(s/z)` for every orthant coordinate.
    lin: Vec<f64>,
    soc: Vec<SocScaling>,
}

impl Scaling {
    fn new(std: &Standard, s: &[f64], z: &[f64]) -> Self {
        let nl = std.n_lin();
        let lin = (0..nl).map(|k| (s[k] / z[k]).sqrt()).collect();
        let soc = (0..std.cones.len())
            .map(|c| {
                let o = nl + 3 * c;
                SocScaling::new(&s[o..o + 3], &z[o..o + 3])
            })
            .collect();
        Scaling { lin, soc }
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let nl = self.lin.len();
        for k in 0..nl {
            out[k] = self.lin[k] * x[k];
        }
        for (c, sc) in self.soc.iter().enumerate() {
            let o = nl + 3 * c;
            out[o..o + 3].copy_from_slice(&sc.apply(&x[o..o + 3]));
        }
    }

    fn apply_inv(&self, x: &[f64], out: &mut [f64]) {
        let nl = self.lin.len();
        for k in 0..nl {
            out[k] = x[k] / self.lin[k];
        }
        for (c, sc) in self.soc.iter().enumerate() {
            let o = nl + 3 * c;
            out[o..o + 3].copy_from_slice(&sc.apply_inv(&x[o..o + 3]));
        }
    }
}

/// Jordan product `x ∘ y`.
fn jordan_product(nl: usize, x: &[f64], y: &[f64], out: &mut [f64]) {
    for k in 0..nl {
        out[k] = x[k] * y[k];
    }
    for o in (nl..x.len()).step_by(3) {
        out[o] = x[o] * y[o] + x[o + 1] * y[o + 1] + x[o + 2] * y[o + 2];
        out[o + 1] = x[o] * y[o + 1] + y[o] * x[o + 1];
        out[o + 2] = x[o] * y[o + 2] + y[o] * x[o + 2];
    }
}

/// Solves `λ ∘ u = r` for `u`.
fn jordan_divide(nl: usize, lambda: &[f64], r: &[f64], out: &mut [f64]) {
    for k in 0..nl {
        out[k] = r[k] / lambda[k];
    }
    for o in (nl..lambda.len()).step_by(3) {
        let (l0, l1, l2) = (lambda[o], lambda[o + 1], lambda[o + 2]);
        let u0 = (l0 * r[o] - l1 * r[o + 1] - l2 * r[o + 2]) / (l0 * l0 - l1 * l1 - l2 * l2);
        out[o] = u0;
        out[o + 1] = (r[o + 1] - u0 * l1) / l0;
        out[o + 2] = (r[o + 2] - u0 * l2) / l0;
    }
}

/// Largest `α` with `x + α·d` in the closed cone (`f64::INFINITY` if unbounded).
fn max_step(nl: usize, x: &[f64], d: &[f64]) -> f64 {
    let mut alpha = f64::INFINITY;
    for k in 0..nl {
        if d[k] < 0.0 {
            alpha = alpha.min(-x[k] / d[k]);
        }
    }
    for o in (nl..x.len()).step_by(3) {
        alpha = alpha.min(soc_max_step(&x[o..o + 3], &d[o..o + 3]));
    }
    alpha
}

fn soc_max_step(x: &[f64], d: &[f64]) -> f64 {
    // (x₀ + αd₀)² − ‖x̄ + αd̄‖² = aα² + 2bα + c, c > 0 in the interior
    let a = jnorm2(d);
    let b = x[0] * d[0] - x[1] * d[1] - x[2] * d[2];
    let c = jnorm2(x).max(0.0);
    let mut best = f64::INFINITY;
    if d[0] < 0.0 {
        best = -x[0] / d[0];
    }
    let scale = d[0].abs().max(d[1].abs()).max(d[2].abs());
    if a.abs() <= 1e-14 * scale * scale {
        if b < 0.0 {
            best = best.min(-c / (2.0 * b));
        }
        return best;
    }
    let disc = b * b - a * c;
    if disc < 0.0 {
        return best;
    }
    let q = -(b + b.signum() * disc.sqrt());
    for root in [q / a, if q != 0.0 { c / q } else { f64::INFINITY }] {
        if root > 0.0 {
            best = best.min(root);
        }
    }
    best
}

fn strictly_interior(nl: usize, x: &[f64], d: &[f64], alpha: f64) -> bool {
    let at = |k: usize| x[k] + alpha * d[k];
    (0..nl).all(|k| at(k) > 0.0)
        && (nl..x.len()).step_by(3).all(|o| {
            let y = [at(o), at(o + 1), at(o + 2)];
            y[0] > 0.0 && jnorm2(&y) > 0.0
        })
}

/// Smallest `α` with `x + α·e` in the cone, `e` the cone identity.
fn identity_shift(nl: usize, x: &[f64]) -> f64 {
    let mut alpha = f64::NEG_INFINITY;
    for &v in &x[..nl] {
        alpha = alpha.max(-v);
    }
    for o in (nl..x.len()).step_by(3) {
        alpha = alpha.max((x[o + 1] * x[o + 1] + x[o + 2] * x[o + 2]).sqrt() - x[o]);
    }
    alpha
}

fn add_identity(nl: usize, x: &mut [f64], alpha: f64) {
    for v in &mut x[..nl] {
        *v += alpha;
    }
    for o in (nl..x.len()).step_by(3) {
        x[o] += alpha;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Reduced KKT system with a fixed sparsity pattern.
struct Kkt {
    n: usize,
    p: usize,
    nr: usize,
    pairs: Vec<(usize, usize)>,
    values: Vec<f64>,
    /// Offsets of the pattern sections inside `pairs`.
    cone_off: usize,
    y_diag: usize,
    z_diag: usize,
    csc: SymbolicSparseColMat<usize>,
    argsort: Argsort<usize>,
    symbolic: SymbolicCholesky<usize>,
    signs: Vec<i8>,
    reg: f64,
    l_values: Vec<f64>,
    factor_buf: MemBuffer,
    solve_buf: MemBuffer,
}

impl Kkt {
    fn new(std: &Standard) -> Result<Self> {
        let (n, p, nr) = (std.n, std.p(), std.rows.len());
        let dim = n + p + nr;
        let mut pairs: Vec<(usize, usize)> = (0..n).map(|j| (j, j)).collect();
        let mut values = vec![0.0; n];
        let cone_off = pairs.len();
        for blk in &std.cones {
            if let Block::Cone { vars: [a, b, c] } = *blk {
                for (i, j) in [(a, b), (a, c), (b, c)] {
                    pairs.push((i.min(j), i.max(j)));
                    values.push(0.0);
                }
            }
        }
        for &(i, j, v) in &std.a {
            pairs.push((j, n + i));
            values.push(v);
        }
        for (r, row) in std.rows.iter().enumerate() {
            for &(j, v) in row {
                pairs.push((j, n + p + r));
                values.push(v);
            }
        }
        let y_diag = pairs.len();
        for i in 0..p {
            pairs.push((n + i, n + i));
            values.push(-STATIC_REG);
        }
        let z_diag = pairs.len();
        for r in 0..nr {
            pairs.push((n + p + r, n + p + r));
            values.push(-1.0);
        }

        let indices: Vec<Pair<usize, usize>> = pairs.iter().map(|&(r, c)| Pair { row: r, col: c }).collect();
        let (csc, argsort) = SymbolicSparseColMat::try_new_from_indices(dim, dim, &indices)
            .map_err(|e| Error::Solver(format!("KKT pattern: {e:?}")))?;
        let symbolic = factorize_symbolic_cholesky(csc.as_ref(), Side::Upper, SymmetricOrdering::Amd, Default::default())
            .map_err(|e| Error::Solver(format!("symbolic factorisation: {e:?}")))?;
        let signs: Vec<i8> = (0..dim).map(|i| if i < n { 1 } else { -1 }).collect();
        let l_values = vec![0.0; symbolic.len_val()];
        let factor_buf = MemBuffer::new(symbolic.factorize_numeric_ldlt_scratch::<f64>(Par::Seq, Default::default()));
        let solve_buf = MemBuffer::new(symbolic.solve_in_place_scratch::<f64>(1, Par::Seq));
        Ok(Kkt {
            n,
            p,
            nr,
            pairs,
            values,
            cone_off,
            y_diag,
            z_diag,
            csc,
            argsort,
            symbolic,
            signs,
            reg: STATIC_REG,
            l_values,
            factor_buf,
            solve_buf,
        })
    }

    fn dim(&self) -> usize {
        self.n + self.p + self.nr
    }

    /// Loads the scaling into the matrix values and factorises, raising the static
    /// regularisation if the factorisation breaks down.
    fn factor(&mut self, std: &Standard, w: &Scaling) -> Result<()> {
        let mut outcome = Ok(());
        for reg in FALLBACK_REG {
            outcome = self.factor_with(std, w, reg);
            if outcome.is_ok() {
                break;
            }
        }
        outcome
    }

    fn factor_with(&mut self, std: &Standard, w: &Scaling, reg: f64) -> Result<()> {
        self.reg = reg;
        let n = self.n;
        for v in &mut self.values[..n] {
            *v = reg;
        }
        let nr = std.rows.len();
        for (k, blk) in std.bounds.iter().enumerate() {
            if let Block::Bound { var, .. } = *blk {
                let wk = w.lin[nr + k];
                self.values[var] += 1.0 / (wk * wk);
            }
        }
        for (c, blk) in std.cones.iter().enumerate() {
            let Block::Cone { vars } = *blk else { continue };
            // Tᵀ W⁻² T
            let winv = &w.soc[c].winv;
            let wt = mat3_mul(winv, &T);
            let h = mat3_mul(&transpose3(&wt), &wt);
            for i in 0..3 {
                self.values[vars[i]] += h[i][i];
            }
            let off = self.cone_off + 3 * c;
            self.values[off] = h[0][1];
            self.values[off + 1] = h[0][2];
            self.values[off + 2] = h[1][2];
        }
        for r in 0..self.nr {
            let wr = w.lin[r];
            self.values[self.z_diag + r] = -wr * wr;
        }
        for i in 0..self.p {
            self.values[self.y_diag + i] = -reg;
        }

        let mat = SparseColMat::new_from_argsort(self.csc.clone(), &self.argsort, &self.values)
            .map_err(|e| Error::Solver(format!("KKT assembly: {e:?}")))?;
        self.symbolic
            .factorize_numeric_ldlt(
                &mut self.l_values,
                mat.as_ref(),
                Side::Upper,
                LdltRegularization {
                    dynamic_regularization_signs: Some(&self.signs),
                    dynamic_regularization_delta: reg,
                    dynamic_regularization_epsilon: 1e-13,
                },
                Par::Seq,
                MemStack::new(&mut self.factor_buf),
                Default::default(),
            )
            .map_err(|e| Error::Numerical(format!("KKT factorisation: {e:?}")))?;
        Ok(())
    }

    fn solve_in_place(&mut self, rhs: &mut [f64]) {
        let ldlt = LdltRef::<usize, f64>::new(&self.symbolic, &self.l_values);
        let dim = rhs.len();
        ldlt.solve_in_place_with_conj(
            Conj::No,
            MatMut::from_column_major_slice_mut(rhs, dim, 1),
            Par::Seq,
            MemStack::new(&mut self.solve_buf),
        );
    }

    /// Product with the unregularised matrix.
    fn mul(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (&(i, j), &v) in self.pairs.iter().zip(&self.values) {
            out[i] += v * x[j];
            if i != j {
                out[j] += v * x[i];
            }
        }
        for j in 0..self.n {
            out[j] -= self.reg * x[j];
        }
        for i in 0..self.p {
            out[self.n + i] += self.reg * x[self.n + i];
        }
    }

    /// Solves with two steps of iterative refinement.
    fn solve(&mut self, rhs: &[f64]) -> Vec<f64> {
        let mut sol = rhs.to_vec();
        self.solve_in_place(&mut sol);
        let mut tmp = vec![0.0; self.dim()];
        for _ in 0..2 {
            self.mul(&sol, &mut tmp);
            for (t, r) in tmp.iter_mut().zip(rhs) {
                *t = r - *t;
            }
            self.solve_in_place(&mut tmp);
            for (s, d) in sol.iter_mut().zip(&tmp) {
                *s += d;
            }
        }
        sol
    }
}

/// Solves `[0 Aᵀ Gᵀ; A 0 0; G 0 −W²] (x, y, z) = (bx, by, bz)`, refining against the
/// unreduced system until the residual stops shrinking.
fn solve_full(kkt: &mut Kkt, std: &Standard, w: &Scaling, bx: &[f64], by: &[f64], bz: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (mut x, mut y, mut z) = solve_reduced(kkt, std, w, bx, by, bz);
    let ns = bz.len();
    let residual = |x: &[f64], y: &[f64], z: &[f64]| {
        let mut rx = bx.to_vec();
        let mut t = vec![0.0; x.len()];
        std.mul_at(y, &mut t);
        std.mul_gt(z, &mut t);
        rx.iter_mut().zip(&t).for_each(|(r, v)| *r -= v);
        let mut ry = vec![0.0; y.len()];
        std.mul_a(x, &mut ry);
        ry.iter_mut().zip(by).for_each(|(r, b)| *r = b - *r);
        let mut gx = vec![0.0; ns];
        std.mul_g(x, &mut gx);
        let mut wz = vec![0.0; ns];
        w.apply(z, &mut wz);
        let mut w2z = vec![0.0; ns];
        w.apply(&wz, &mut w2z);
        let rz: Vec<f64> = (0..ns).map(|k| bz[k] - gx[k] + w2z[k]).collect();
        // the third block row measured in W⁻¹-scaled coordinates
        let mut scaled = vec![0.0; ns];
        w.apply_inv(&rz, &mut scaled);
        let size = (dot(&rx, &rx) + dot(&ry, &ry) + dot(&scaled, &scaled)).sqrt();
        (rx, ry, rz, size)
    };
    let (mut rx, mut ry, mut rz, mut size) = residual(&x, &y, &z);
    for _ in 0..REFINE_STEPS {
        if size == 0.0 {
            break;
        }
        let (dx, dy, dz) = solve_reduced(kkt, std, w, &rx, &ry, &rz);
        let cx: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
        let cy: Vec<f64> = y.iter().zip(&dy).map(|(a, b)| a + b).collect();
        let cz: Vec<f64> = z.iter().zip(&dz).map(|(a, b)| a + b).collect();
        let next = residual(&cx, &cy, &cz);
        if !(next.3 < size) {
            break;
        }
        (x, y, z) = (cx, cy, cz);
        (rx, ry, rz, size) = next;
    }
    (x, y, z)
}

fn solve_reduced(kkt: &mut Kkt, std: &Standard, w: &Scaling, bx: &[f64], by: &[f64], bz: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (n, p, nr) = (std.n, std.p(), std.rows.len());
    let nl = std.n_lin();
    let mut rhs = vec![0.0; n + p + nr];
    rhs[..n].copy_from_slice(bx);
    rhs[n..n + p].copy_from_slice(by);
    rhs[n + p..].copy_from_slice(&bz[..nr]);
    // + Σ G_iᵀ W_i⁻² bz_i over eliminated blocks
    for (k, blk) in std.bounds.iter().enumerate() {
        if let Block::Bound { var, sign } = *blk {
            let wk = w.lin[nr + k];
            rhs[var] += sign * bz[nr + k] / (wk * wk);
        }
    }
    for (c, blk) in std.cones.iter().enumerate() {
        let Block::Cone { vars } = *blk else { continue };
        let o = nl + 3 * c;
        let sc = &w.soc[c];
        let t = sc.apply_inv(&sc.apply_inv(&bz[o..o + 3]));
        // G_cᵀ = −Tᵀ
        let g = mat3_vec(&transpose3(&T), &t);
        for i in 0..3 {
            rhs[vars[i]] -= g[i];
        }
    }
    let sol = kkt.solve(&rhs);
    let x = sol[..n].to_vec();
    let y = sol[n..n + p].to_vec();
    let mut z = vec![0.0; std.n_cone_slots()];
    z[..nr].copy_from_slice(&sol[n + p..]);
    // z_i = W_i⁻² (G_i x − bz_i)
    let mut gx = vec![0.0; std.n_cone_slots()];
    std.mul_g(&x, &mut gx);
    for k in 0..std.bounds.len() {
        let wk = w.lin[nr + k];
        z[nr + k] = (gx[nr + k] - bz[nr + k]) / (wk * wk);
    }
    for c in 0..std.cones.len() {
        let o = nl + 3 * c;
        let d = [gx[o] - bz[o], gx[o + 1] - bz[o + 1], gx[o + 2] - bz[o + 2]];
        let sc = &w.soc[c];
        z[o..o + 3].copy_from_slice(&sc.apply_inv(&sc.apply_inv(&d)));
    }
    (x, y, z)
}

struct Iterate {
    x: Vec<f64>,
    y: Vec<f64>,
    s: Vec<f64>,
    z: Vec<f64>,
}

struct Progress {
    rx: Vec<f64>,
    ry: Vec<f64>,
    rz: Vec<f64>,
    pcost: f64,
    res: Residuals,
}

fn progress(std: &Standard, it: &Iterate) -> Progress {
    let (n, p) = (std.n, std.p());
    let mut rx = std.q.clone();
    std.mul_at(&it.y, &mut rx);
    std.mul_gt(&it.z, &mut rx);
    let mut ry = vec![0.0; p];
    std.mul_a(&it.x, &mut ry);
    for (r, b) in ry.iter_mut().zip(&std.b) {
        *r -= b;
    }
    let mut rz = vec![0.0; std.n_cone_slots()];
    std.mul_g(&it.x, &mut rz);
    for k in 0..rz.len() {
        rz[k] += it.s[k] - std.h[k];
    }
    debug_assert_eq!(rx.len(), n);
    let pcost = dot(&std.q, &it.x);
    let dcost = -dot(&std.h, &it.z) - dot(&std.b, &it.y);
    let gap = dot(&it.s, &it.z);
    let res = Residuals {
        primal: (norm(&ry) / norm(&std.b).max(1.0)).max(norm(&rz) / norm(&std.h).max(1.0)),
        dual: norm(&rx) / norm(&std.q).max(1.0),
        gap: gap.max(pcost - dcost) / pcost.abs().max(1.0),
    };
    Progress { rx, ry, rz, pcost, res }
}

/// Solves a conic program with the built-in interior-point method.
pub fn solve(prog: &ConicProgram, opts: &SolverOptions) -> Result<SolverResult> {
    prog.validate()?;
    if !(opts.tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let std = Standard::from_program(prog);
    let (n, p) = (std.n, std.p());
    let nl = std.n_lin();
    let ns = std.n_cone_slots();
    let mut kkt = Kkt::new(&std)?;

    let unit = Scaling {
        lin: vec![1.0; nl],
        soc: (0..std.cones.len())
            .map(|_| SocScaling {
                w: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
                winv: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            })
            .collect(),
    };
    let failure = |iterations, status| SolverResult {
        status,
        v: None,
        objective: f64::NAN,
        iterations,
        residuals: Residuals::default(),
    };
    if kkt.factor(&std, &unit).is_err() {
        return Ok(failure(0, SolverStatus::NumericalFailure));
    }
    // primal start: least-squares fit of Gx ≈ h subject to Ax = b
    let (x, _, zp) = solve_full(&mut kkt, &std, &unit, &vec![0.0; n], &std.b, &std.h);
    let mut s: Vec<f64> = zp.iter().map(|v| -v).collect();
    // dual start: least-norm z with Gᵀz + Aᵀy + q = 0
    let neg_q: Vec<f64> = std.q.iter().map(|v| -v).collect();
    let (_, y, mut z) = solve_full(&mut kkt, &std, &unit, &neg_q, &vec![0.0; p], &vec![0.0; ns]);
    for v in [&mut s, &mut z] {
        let shift = identity_shift(nl, v);
        if shift >= -1e-8 {
            add_identity(nl, v, 1.0 + shift.max(0.0));
        }
    }
    let mut it = Iterate { x, y, s, z };
    let degree = std.degree().max(1.0);

    let mut best: Option<(f64, Vec<f64>, Residuals)> = None;
    let mut iterations = 0;
    let mut status = SolverStatus::IterationLimit;
    let mut last = progress(&std, &it);
    let data_scale = norm(&std.b).max(norm(&std.h)).max(1.0);

    while iterations < opts.max_iter {
        let pr = &last;
        let r = pr.res;
        let worst = r.primal.max(r.dual).max(r.gap);
        if best.as_ref().is_none_or(|b| worst < b.0) {
            best = Some((worst, it.x.clone(), r));
        }
        if r.primal <= opts.tol && r.dual <= opts.tol && r.gap <= opts.tol {
            status = SolverStatus::Optimal;
            break;
        }
        let xn = it.x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let yzn = it.y.iter().chain(&it.z).fold(0.0f64, |a, v| a.max(v.abs()));
        if xn > 1e12 * data_scale && r.dual <= 1e-6 {
            status = SolverStatus::Unbounded;
            break;
        }
        if yzn > 1e12 * norm(&std.q).max(1.0) && r.primal > 1e-6 {
            status = SolverStatus::Infeasible;
            break;
        }

        let w = Scaling::new(&std, &it.s, &it.z);
        let mut lambda = vec![0.0; ns];
        w.apply(&it.z, &mut lambda);
        let mu = dot(&it.s, &it.z) / degree;
        if kkt.factor(&std, &w).is_err() {
            status = SolverStatus::NumericalFailure;
            break;
        }

        // returns (dx, dy, ds, dz) for a complementarity right-hand side rs
        let direction = |kkt: &mut Kkt, kappa: f64, rs: &[f64]| {
            let mut u = vec![0.0; ns];
            jordan_divide(nl, &lambda, rs, &mut u);
            let mut wu = vec![0.0; ns];
            w.apply(&u, &mut wu);
            let bx: Vec<f64> = pr.rx.iter().map(|v| -kappa * v).collect();
            let by: Vec<f64> = pr.ry.iter().map(|v| -kappa * v).collect();
            let bz: Vec<f64> = pr.rz.iter().zip(&wu).map(|(r, a)| -kappa * r - a).collect();
            let (dx, dy, dz) = solve_full(kkt, &std, &w, &bx, &by, &bz);
            // Δs = W(u − WΔz)
            let mut wdz = vec![0.0; ns];
            w.apply(&dz, &mut wdz);
            let diff: Vec<f64> = u.iter().zip(&wdz).map(|(a, b)| a - b).collect();
            let mut ds = vec![0.0; ns];
            w.apply(&diff, &mut ds);
            (dx, dy, ds, dz)
        };

        // predictor
        let mut rs = vec![0.0; ns];
        jordan_product(nl, &lambda, &lambda, &mut rs);
        rs.iter_mut().for_each(|v| *v = -*v);
        let (_, _, ds_a, dz_a) = direction(&mut kkt, 1.0, &rs);
        let alpha_a = max_step(nl, &it.s, &ds_a).min(max_step(nl, &it.z, &dz_a)).min(1.0);
        let s_a: Vec<f64> = it.s.iter().zip(&ds_a).map(|(a, b)| a + alpha_a * b).collect();
        let z_a: Vec<f64> = it.z.iter().zip(&dz_a).map(|(a, b)| a + alpha_a * b).collect();
        let sigma = (dot(&s_a, &z_a) / (mu * degree)).clamp(0.0, 1.0).powi(3);

        // corrector
        let mut winv_ds = vec![0.0; ns];
        w.apply_inv(&ds_a, &mut winv_ds);
        let mut w_dz = vec![0.0; ns];
        w.apply(&dz_a, &mut w_dz);
        let mut cross = vec![0.0; ns];
        jordan_product(nl, &winv_ds, &w_dz, &mut cross);
        for k in 0..ns {
            rs[k] -= cross[k];
        }
        for k in 0..nl {
            rs[k] += sigma * mu;
        }
        for o in (nl..ns).step_by(3) {
            rs[o] += sigma * mu;
        }
        let (dx, dy, ds, dz) = direction(&mut kkt, 1.0 - sigma, &rs);
        let mut alpha = (STEP_FRACTION * max_step(nl, &it.s, &ds).min(max_step(nl, &it.z, &dz))).min(1.0);
        // rounding can still leave a block on the boundary
        while alpha > 1e-14 && !(strictly_interior(nl, &it.s, &ds, alpha) && strictly_interior(nl, &it.z, &dz, alpha)) {
            alpha *= 0.5;
        }
        if !(alpha > 1e-14) || dx.iter().chain(&dz).any(|v| !v.is_finite()) {
            status = SolverStatus::NumericalFailure;
            break;
        }
        for (a, d) in it.x.iter_mut().zip(&dx) {
            *a += alpha * d;
        }
        for (a, d) in it.y.iter_mut().zip(&dy) {
            *a += alpha * d;
        }
        for (a, d) in it.s.iter_mut().zip(&ds) {
            *a += alpha * d;
        }
        for (a, d) in it.z.iter_mut().zip(&dz) {
            *a += alpha * d;
        }
        iterations += 1;
        last = progress(&std, &it);
    }

    if status != SolverStatus::Optimal {
        let r = last.res;
        let worst = r.primal.max(r.dual).max(r.gap);
        if best.as_ref().is_none_or(|b| worst < b.0) {
            best = Some((worst, it.x.clone(), r));
        }
    }
    let objective_of = |x: &[f64]| dot(&prog.objective, x);
    let result = match status {
        SolverStatus::Optimal => SolverResult {
            status,
            objective: -last.pcost,
            v: Some(it.x),
            iterations,
            residuals: last.res,
        },
        SolverStatus::IterationLimit | SolverStatus::NumericalFailure => match best {
            Some((worst, x, res)) if worst <= NEAR_OPTIMAL_TOL => SolverResult {
                status: SolverStatus::NearOptimal,
                objective: objective_of(&x),
                v: Some(x),
                iterations,
                residuals: res,
            },
            _ => SolverResult {
                objective: objective_of(&it.x),
                residuals: last.res,
                ..failure(iterations, status)
            },
        },
        _ => SolverResult {
            objective: objective_of(&it.x),
            residuals: last.res,
            ..failure(iterations, status)
        },
    };
    Ok(result)
}

/// A constraint violated beyond the tolerance of [`verify`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Row { index: usize, value: f64, lower: f64, upper: f64 },
    Bound { index: usize, value: f64, lower: f64, upper: f64 },
    /// `excess = max(η² − 2ξζ, −ξ, −ζ)`.
    Cone { index: usize, excess: f64 },
}

/// Lists every row, variable bound and cone violated by more than `tol`.
pub fn verify(prog: &ConicProgram, v: &[f64], tol: f64) -> Result<Vec<Violation>> {
    check_len(prog.num_vars(), v.len())?;
    let mut out = Vec::new();
    let mut ax = vec![0.0; prog.num_rows()];
    for &(r, c, val) in &prog.entries {
        ax[r] += val * v[c];
    }
    for (index, &value) in ax.iter().enumerate() {
        let (lower, upper) = (prog.row_lower[index], prog.row_upper[index]);
        if value < lower - tol || value > upper + tol {
            out.push(Violation::Row { index, value, lower, upper });
        }
    }
    for (index, &value) in v.iter().enumerate() {
        let (lower, upper) = (prog.var_lower[index], prog.var_upper[index]);
        if value < lower - tol || value > upper + tol {
            out.push(Violation::Bound { index, value, lower, upper });
        }
    }
    for (index, c) in prog.cones.iter().enumerate() {
        let (xi, zeta, eta) = (v[c.xi], v[c.zeta], v[c.eta]);
        let excess = (eta * eta - 2.0 * xi * zeta).max(-xi).max(-zeta);
        if excess > tol {
            out.push(Violation::Cone { index, excess });
        }
    }
    Ok(out)
}

#[derive(Deserialize)]
struct ExternalResult {
    #[serde(default)]
    v: Option<Vec<f64>>,
    status: SolverStatus,
}

static EXTERNAL_RUNS: AtomicUsize = AtomicUsize::new(0);

/// Runs `sh -c '<cmd> "$@"' sh <program.json> <result.json>` and imports the result
/// file `{"v": [...], "status": "optimal" | ...}`.
pub fn solve_external(prog: &ConicProgram, cmd: &str, opts: &SolverOptions) -> Result<SolverResult> {
    prog.validate()?;
    let dir = std::env::temp_dir().join(format!(
        "fekete-socp-{}-{}",
        std::process::id(),
        EXTERNAL_RUNS.fetch_add(1, Ordering::Relaxed)
    ));
    std::fs::create_dir_all(&dir).map_err(|e| Error::Solver(format!("creating {}: {e}", dir.display())))?;
    let result = run_external(prog, cmd, opts, &dir);
    let _ = std::fs::remove_dir_all(&dir);
    result
}

fn run_external(prog: &ConicProgram, cmd: &str, opts: &SolverOptions, dir: &Path) -> Result<SolverResult> {
    let prog_path = dir.join("program.json");
    let result_path = dir.join("result.json");
    std::fs::write(&prog_path, prog.to_json()).map_err(|e| Error::Solver(format!("writing program: {e}")))?;
    let status = Command::new("sh")
        .arg("-c")
        .arg(format!("{cmd} \"$@\""))
        .arg("sh")
        .arg(&prog_path)
        .arg(&result_path)
        .status()
        .map_err(|e| Error::Solver(format!("launching external solver: {e}")))?;
    if !status.success() {
        return Err(Error::Solver(format!("external solver exited with {status}")));
    }
    let text = std::fs::read_to_string(&result_path).map_err(|e| Error::Solver(format!("reading result: {e}")))?;
    let parsed: ExternalResult =
        serde_json::from_str(&text).map_err(|e| Error::Solver(format!("invalid result JSON: {e}")))?;
    let Some(v) = parsed.v else {
        if parsed.status.has_solution() {
            return Err(Error::Solver(format!("external solver reported {:?} without a solution", parsed.status)));
        }
        return Ok(SolverResult {
            status: parsed.status,
            v: None,
            objective: f64::NAN,
            iterations: 0,
            residuals: Residuals {
                primal: f64::NAN,
                dual: f64::NAN,
                gap: f64::NAN,
            },
        });
    };
    check_len(prog.num_vars(), v.len())?;
    let violations = verify(prog, &v, opts.tol.max(1e-6))?;
    let primal = violations
        .iter()
        .map(|v| match *v {
            Violation::Row { value, lower, upper, .. } | Violation::Bound { value, lower, upper, .. } => {
                (lower - value).max(value - upper)
            }
            Violation::Cone { excess, .. } => excess,
        })
        .fold(0.0, f64::max);
    let objective = dot(&prog.objective, &v);
    let has = parsed.status.has_solution();
    Ok(SolverResult {
        status: parsed.status,
        v: has.then_some(v),
        objective,
        iterations: 0,
        residuals: Residuals {
            primal,
            dual: f64::NAN,
            gap: f64::NAN,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::socp::{geometric_mean_program, RotatedCone};

    fn in_soc(x: &[f64]) -> bool {
        x[0] > 0.0 && jnorm2(x) > 0.0
    }

    #[test]
    fn nt_scaling_maps_z_to_winv_s() {
        let cases = [([3.0, 1.0, -0.5], [2.0, -0.3, 0.7]), ([1.0, 0.0, 0.0], [5.0, 4.0, 2.0]), ([10.0, 9.9, 0.1], [1.0, -0.2, 0.5])];
        for (s, z) in cases {
            assert!(in_soc(&s) && in_soc(&z));
            let w = SocScaling::new(&s, &z);
            let wz = w.apply(&z);
            let wis = w.apply_inv(&s);
            for i in 0..3 {
                assert!((wz[i] - wis[i]).abs() < 1e-12 * (1.0 + wz[i].abs()), "{wz:?} vs {wis:?}");
            }
            let back = w.apply(&w.apply_inv(&[0.3, -1.0, 2.0]));
            assert!((back[0] - 0.3).abs() < 1e-12 && (back[1] + 1.0).abs() < 1e-12 && (back[2] - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn jordan_division_inverts_product() {
        let lambda = [0.5, 2.0, 3.0, 0.2, -0.4];
        let u = [1.5, -0.7, 0.3, 0.8, 0.1];
        let mut r = [0.0; 5];
        jordan_product(2, &lambda, &u, &mut r);
        let mut back = [0.0; 5];
        jordan_divide(2, &lambda, &r, &mut back);
        for i in 0..5 {
            assert!((back[i] - u[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn cone_step_lengths() {
        let x = [2.0, 0.0, 0.0];
        // moving towards (0, 1, 0): boundary where 2 − α = α
        assert!((soc_max_step(&x, &[-1.0, 1.0, 0.0]) - 1.0).abs() < 1e-12);
        assert_eq!(soc_max_step(&x, &[1.0, 0.0, 0.0]), f64::INFINITY);
        assert!((max_step(1, &[1.0, 2.0, 0.0, 0.0], &[-0.5, 0.0, 0.0, 0.0]) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn single_rotated_cone_with_fixed_sides() {
        let (_, prog) = geometric_mean_program(&[1.0, 1.0]).unwrap();
        let res = solve(&prog, &SolverOptions::default()).unwrap();
        assert_eq!(res.status, SolverStatus::Optimal);
        assert!((res.objective - 1.0).abs() < 1e-7, "{}", res.objective);
        let (_, prog) = geometric_mean_program(&[1.0, 4.0]).unwrap();
        let res = solve(&prog, &SolverOptions::default()).unwrap();
        assert!((res.objective - 2.0).abs() < 1e-7, "{}", res.objective);
    }

    #[test]
    fn linear_program() {
        // maximise x + y s.t. x + 2y ≤ 4, 3x + y ≤ 6, x, y ≥ 0 → (8/5, 6/5)
        let prog = ConicProgram {
            objective: vec![1.0, 1.0],
            entries: vec![(0, 0, 1.0), (0, 1, 2.0), (1, 0, 3.0), (1, 1, 1.0)],
            row_lower: vec![f64::NEG_INFINITY; 2],
            row_upper: vec![4.0, 6.0],
            var_lower: vec![0.0; 2],
            var_upper: vec![f64::INFINITY; 2],
            cones: vec![],
        };
        let res = solve(&prog, &SolverOptions::default()).unwrap();
        assert_eq!(res.status, SolverStatus::Optimal);
        let v = res.v.unwrap();
        assert!((v[0] - 1.6).abs() < 1e-6 && (v[1] - 1.2).abs() < 1e-6, "{v:?}");
        assert!((res.objective - 2.8).abs() < 1e-7);
    }

    #[test]
    fn infeasible_program_is_not_optimal() {
        let prog = ConicProgram {
            objective: vec![1.0],
            entries: vec![(0, 0, 1.0)],
            row_lower: vec![2.0],
            row_upper: vec![f64::INFINITY],
            var_lower: vec![0.0],
            var_upper: vec![1.0],
            cones: vec![],
        };
        let res = solve(&prog, &SolverOptions::default()).unwrap();
        assert!(!res.status.has_solution(), "{res:?}");
    }

    #[test]
    fn verify_reports_exactly_the_broken_constraint() {
        let prog = ConicProgram {
            objective: vec![0.0; 3],
            entries: vec![(0, 0, 1.0), (0, 1, 1.0)],
            row_lower: vec![1.0],
            row_upper: vec![1.0],
            var_lower: vec![0.0, 0.0, f64::NEG_INFINITY],
            var_upper: vec![f64::INFINITY; 3],
            cones: vec![RotatedCone { xi: 0, zeta: 1, eta: 2 }],
        };
        assert!(verify(&prog, &[0.5, 0.5, 0.5], 1e-9).unwrap().is_empty());
        let zero = verify(&prog, &[0.0, 0.0, 0.0], 1e-9).unwrap();
        assert_eq!(zero.len(), 1);
        assert!(matches!(zero[0], Violation::Row { index: 0, .. }));
        let negated = verify(&prog, &[-0.5, 1.5, 0.5], 1e-9).unwrap();
        assert!(negated.contains(&Violation::Cone { index: 0, excess: 0.5 * 0.5 + 2.0 * 0.5 * 1.5 }));
        assert!(verify(&prog, &[0.0], 1e-9).is_err());
    }

    #[test]
    fn backend_parsing() {
        assert_eq!(Backend::parse("builtin").unwrap(), Backend::Builtin);
        assert_eq!(Backend::parse("external:my solver").unwrap(), Backend::External("my solver".into()));
        assert!(Backend::parse("external:").is_err());
        assert!(Backend::parse("mosek").is_err());
    }
}
