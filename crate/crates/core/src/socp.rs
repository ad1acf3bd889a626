//! Second-order cone formulation of the relaxed D-optimal design problem.
//!
//! The program maximises `u_1` over the vector
//!
//! ```text
//! v = (u_11, u_12, …, u_{P,1}, u_{P,2}; ĝ_1, …, ĝ_ℓ; Z; T; Ŵ),   P = 2^p − 1, p = ⌈log₂ ℓ⌉
//! ```
//!
//! where `Z`, `T` and `Ŵ` are `m × ℓ` blocks stored column-major, `Ŵ` holding `ℓ`
//! copies of the halved weights `ŵ_i = w_i/2`. Every variable occurs in at most one
//! rotated cone `η² ≤ 2ξζ`; copies are tied together by equality rows. At the
//! optimum `u_1 = c(ℓ)·det(Σ_j w_j a_j a_jᵀ)^{1/ℓ}` with the constant of
//! [`scale_constant`].
//!
//! Slots are 0-based: the formulas' `v_k` lives at slot `k − 1`.

use std::f64::consts::SQRT_2;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::design::{DesignProblem, Weights};
use crate::error::{check_len, Error, Result};

/// Named slot ranges of the variable vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VariableLayout {
    pub m: usize,
    pub ell: usize,
    pub p: u32,
}

pub fn build_layout(m: usize, ell: usize) -> Result<VariableLayout> {
    if ell < 2 {
        return Err(Error::Parameter(format!("the cone formulation needs ℓ ≥ 2, got {ell}")));
    }
    if ell > m {
        return Err(Error::Parameter(format!("ℓ = {ell} exceeds m = {m}")));
    }
    Ok(VariableLayout {
        m,
        ell,
        p: ell.next_power_of_two().trailing_zeros(),
    })
}

impl VariableLayout {
    /// Number of tree nodes `2^p − 1`.
    pub fn nodes(&self) -> usize {
        (1 << self.p) - 1
    }

    /// Slot of copy `copy ∈ {1, 2}` of `u_i` (`i` 1-based).
    pub fn u(&self, i: usize, copy: usize) -> usize {
        debug_assert!((1..=self.nodes()).contains(&i) && (copy == 1 || copy == 2));
        2 * (i - 1) + copy - 1
    }

    /// Slot of `ĝ_j` (`j` 1-based).
    pub fn g(&self, j: usize) -> usize {
        2 * self.nodes() + j - 1
    }

    fn block(&self, k: usize, i: usize, j: usize) -> usize {
        debug_assert!((1..=self.m).contains(&i) && (1..=self.ell).contains(&j));
        2 * self.nodes() + self.ell + k * self.m * self.ell + (j - 1) * self.m + i - 1
    }

    /// Slot of `z_ij` (1-based indices).
    pub fn z(&self, i: usize, j: usize) -> usize {
        self.block(0, i, j)
    }

    pub fn t(&self, i: usize, j: usize) -> usize {
        self.block(1, i, j)
    }

    /// Slot of copy `j` of `ŵ_i`.
    pub fn w(&self, i: usize, j: usize) -> usize {
        self.block(2, i, j)
    }

    pub fn u_range(&self) -> Range<usize> {
        0..2 * self.nodes()
    }

    pub fn g_range(&self) -> Range<usize> {
        let s = 2 * self.nodes();
        s..s + self.ell
    }

    pub fn z_range(&self) -> Range<usize> {
        let s = self.g_range().end;
        s..s + self.m * self.ell
    }

    pub fn t_range(&self) -> Range<usize> {
        let s = self.z_range().end;
        s..s + self.m * self.ell
    }

    pub fn w_range(&self) -> Range<usize> {
        let s = self.t_range().end;
        s..s + self.m * self.ell
    }

    pub fn total_len(&self) -> usize {
        2 * self.nodes() + self.ell + 3 * self.m * self.ell
    }

    /// Number of `u_i ≤ u_1` rows: leaves of the tree left unused by the `ĝ`s.
    pub fn padding_rows(&self) -> usize {
        (1usize << (self.p - 1)) - self.ell.div_ceil(2)
    }

    pub fn row_count(&self) -> usize {
        let (m, l) = (self.m, self.ell);
        self.nodes() + m * (l - 1) + l * (l + 1) / 2 + 1 + l + self.padding_rows()
    }

    /// Coefficient linking `g̃_j` to `ĝ_j`: `g̃_j = coef·ĝ_j`.
    pub fn g_scale(&self, j: usize) -> f64 {
        if j == self.ell && self.ell % 2 == 1 {
            2.0
        } else {
            SQRT_2
        }
    }
}

/// Rotated quadratic cone `η² ≤ 2ξζ`, `ξ, ζ ≥ 0`, given by variable slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "[usize; 3]", into = "[usize; 3]")]
pub struct RotatedCone {
    pub xi: usize,
    pub zeta: usize,
    pub eta: usize,
}

impl From<[usize; 3]> for RotatedCone {
    fn from([xi, zeta, eta]: [usize; 3]) -> Self {
        RotatedCone { xi, zeta, eta }
    }
}

impl From<RotatedCone> for [usize; 3] {
    fn from(c: RotatedCone) -> Self {
        [c.xi, c.zeta, c.eta]
    }
}

/// A conic program: maximise `cᵀv` subject to `bl ≤ Av ≤ bu`, `xl ≤ v ≤ xu` and
/// membership of the listed rotated cones. Infinite bounds are stored as `±∞`.
///
/// The JSON form uses the keys `obj` (dense objective), `rows` (`[row, col, value]`
/// triplets), `bl`, `bu`, `xl`, `xu` (numbers, or the strings `"inf"`/`"-inf"`) and
/// `cones` (`[ξ, ζ, η]` slot triples). All indices are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConicProgram {
    #[serde(rename = "obj")]
    pub objective: Vec<f64>,
    #[serde(rename = "rows")]
    pub entries: Vec<(usize, usize, f64)>,
    #[serde(rename = "bl", with = "bounds")]
    pub row_lower: Vec<f64>,
    #[serde(rename = "bu", with = "bounds")]
    pub row_upper: Vec<f64>,
    #[serde(rename = "xl", with = "bounds")]
    pub var_lower: Vec<f64>,
    #[serde(rename = "xu", with = "bounds")]
    pub var_upper: Vec<f64>,
    pub cones: Vec<RotatedCone>,
}

mod bounds {
    use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Bound {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let out: Vec<Bound> = v
            .iter()
            .map(|&x| match x {
                f64::INFINITY => Bound::Text("inf".into()),
                f64::NEG_INFINITY => Bound::Text("-inf".into()),
                x => Bound::Num(x),
            })
            .collect();
        out.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Bound>::deserialize(d)?
            .into_iter()
            .map(|b| match b {
                Bound::Num(x) => Ok(x),
                Bound::Text(t) if t == "inf" => Ok(f64::INFINITY),
                Bound::Text(t) if t == "-inf" => Ok(f64::NEG_INFINITY),
                Bound::Text(t) => Err(de::Error::custom(format!("invalid bound {t:?}"))),
            })
            .collect()
    }
}

impl ConicProgram {
    fn empty(num_vars: usize) -> Self {
        ConicProgram {
            objective: vec![0.0; num_vars],
            entries: Vec::new(),
            row_lower: Vec::new(),
            row_upper: Vec::new(),
            var_lower: vec![f64::NEG_INFINITY; num_vars],
            var_upper: vec![f64::INFINITY; num_vars],
            cones: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.row_lower.len()
    }

    fn push_row(&mut self, coeffs: &[(usize, f64)], lower: f64, upper: f64) {
        let r = self.num_rows();
        self.entries.extend(coeffs.iter().map(|&(c, v)| (r, c, v)));
        self.row_lower.push(lower);
        self.row_upper.push(upper);
    }

    /// Checks index ranges, bound vector lengths and that cones are disjoint.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        check_len(n, self.var_lower.len())?;
        check_len(n, self.var_upper.len())?;
        check_len(self.num_rows(), self.row_upper.len())?;
        for &(r, c, _) in &self.entries {
            if r >= self.num_rows() || c >= n {
                return Err(Error::Index {
                    index: if r >= self.num_rows() { r } else { c },
                    valid: format!("rows 0..{}, columns 0..{n}", self.num_rows()),
                });
            }
        }
        let mut seen = vec![false; n];
        for cone in &self.cones {
            for s in [cone.xi, cone.zeta, cone.eta] {
                if s >= n {
                    return Err(Error::Index {
                        index: s,
                        valid: format!("0..{n}"),
                    });
                }
                if std::mem::replace(&mut seen[s], true) {
                    return Err(Error::Parameter(format!("slot {s} appears in more than one cone")));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("conic programs serialise")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let prog: Self = serde_json::from_str(text).map_err(|e| Error::Parameter(format!("invalid program JSON: {e}")))?;
        prog.validate()?;
        Ok(prog)
    }
}

/// Rows tying the two copies of every tree node, the padding rows `u_i ≤ u_1`, and
/// the tree and leaf cones. Shared by the full program and the geometric-mean
/// sub-program.
fn tree_cones(layout: &VariableLayout) -> Vec<RotatedCone> {
    let half = 1usize << (layout.p - 1);
    let two_p = 1usize << layout.p;
    let ell = layout.ell;
    // 1-based v indices, converted on push
    let v = |k: usize| k - 1;
    let mut cones = Vec::new();
    for i in 1..half {
        cones.push(RotatedCone {
            xi: v(2 * (2 * i) - 1),
            zeta: v(2 * (2 * i + 1) - 1),
            eta: v(2 * i),
        });
    }
    let last_pair = if ell % 2 == 0 { half + ell / 2 - 1 } else { half + (ell - 1) / 2 - 1 };
    for i in half..=last_pair {
        cones.push(RotatedCone {
            xi: v(two_p + 2 * i - 1),
            zeta: v(two_p + 2 * i),
            eta: v(2 * i),
        });
    }
    if ell % 2 == 1 {
        cones.push(RotatedCone {
            xi: v(2 * (two_p - 1) + ell),
            zeta: v(1),
            eta: v(two_p + ell - 1),
        });
    }
    cones
}

fn push_copy_rows(prog: &mut ConicProgram, layout: &VariableLayout) {
    for i in 1..=layout.nodes() {
        prog.push_row(&[(layout.u(i, 1), 1.0), (layout.u(i, 2), -1.0)], 0.0, 0.0);
    }
}

fn push_padding_rows(prog: &mut ConicProgram, layout: &VariableLayout) {
    let first = (1usize << (layout.p - 1)) + layout.ell.div_ceil(2);
    for i in first..=layout.nodes() {
        prog.push_row(&[(layout.u(1, 1), -1.0), (layout.u(i, 1), 1.0)], f64::NEG_INFINITY, 0.0);
    }
}

/// Builds the cone program of a design problem. Frozen indices of the problem are
/// pinned through [`add_pinned_weights`].
pub fn build_program(problem: &DesignProblem) -> Result<(VariableLayout, ConicProgram)> {
    let m = problem.len();
    let ell = problem.dim();
    let layout = build_layout(m, ell)?;
    let mut prog = ConicProgram::empty(layout.total_len());
    prog.objective[layout.u(1, 1)] = 1.0;

    // copies of u
    push_copy_rows(&mut prog, &layout);
    // copies of ŵ
    for k in 1..ell {
        for i in 1..=m {
            prog.push_row(&[(layout.w(i, k), 1.0), (layout.w(i, k + 1), -1.0)], 0.0, 0.0);
        }
    }
    // (a_1 … a_m) Z is lower triangular with diagonal g̃
    let a = problem.regressors();
    for r in 1..=ell {
        for c in r..=ell {
            let mut coeffs = Vec::with_capacity(m + 1);
            if c == r {
                coeffs.push((layout.g(r), -layout.g_scale(r)));
            }
            coeffs.extend((1..=m).map(|i| (layout.z(i, c), a[i - 1][r - 1])));
            prog.push_row(&coeffs, 0.0, 0.0);
        }
    }
    // Σ_i ŵ_iℓ = n/2
    let coeffs: Vec<_> = (1..=m).map(|i| (layout.w(i, ell), 1.0)).collect();
    let half_n = problem.budget() as f64 / 2.0;
    prog.push_row(&coeffs, half_n, half_n);
    // Σ_i t_ij ≤ g̃_j
    for j in 1..=ell {
        let mut coeffs = vec![(layout.g(j), -layout.g_scale(j))];
        coeffs.extend((1..=m).map(|i| (layout.t(i, j), 1.0)));
        prog.push_row(&coeffs, f64::NEG_INFINITY, 0.0);
    }
    push_padding_rows(&mut prog, &layout);

    for s in layout.u_range().chain(layout.g_range()).chain(layout.t_range()).chain(layout.w_range()) {
        prog.var_lower[s] = 0.0;
    }
    for s in layout.w_range() {
        prog.var_upper[s] = 0.5;
    }

    prog.cones = tree_cones(&layout);
    for j in 1..=ell {
        for i in 1..=m {
            prog.cones.push(RotatedCone {
                xi: layout.t(i, j),
                zeta: layout.w(i, j),
                eta: layout.z(i, j),
            });
        }
    }

    let frozen: Vec<usize> = problem.frozen().to_vec();
    add_pinned_weights(&mut prog, &layout, &frozen)?;
    Ok((layout, prog))
}

/// Appends rows `ŵ_j1 = value` for 0-based candidate indices.
pub fn pin_weights(prog: &mut ConicProgram, layout: &VariableLayout, pins: &[(usize, f64)]) -> Result<()> {
    for &(j, _) in pins {
        if j >= layout.m {
            return Err(Error::Index {
                index: j,
                valid: format!("0..{}", layout.m),
            });
        }
    }
    for &(j, value) in pins {
        prog.push_row(&[(layout.w(j + 1, 1), 1.0)], value, value);
    }
    Ok(())
}

/// Appends rows `ŵ_j1 = 1/2`, i.e. `w_j = 1`, for 0-based candidate indices.
pub fn add_pinned_weights(prog: &mut ConicProgram, layout: &VariableLayout, pinned: &[usize]) -> Result<()> {
    let pins: Vec<_> = pinned.iter().map(|&j| (j, 0.5)).collect();
    pin_weights(prog, layout, &pins)
}

/// `w_j = 2ŵ_j1`.
pub fn extract_weights(layout: &VariableLayout, v: &[f64]) -> Result<Weights> {
    check_len(layout.total_len(), v.len())?;
    Ok(Weights((1..=layout.m).map(|i| 2.0 * v[layout.w(i, 1)]).collect()))
}

/// The tree part alone: maximise `u_1` with `g̃` fixed through the bounds of the
/// `ĝ` slots. The optimum is `c(ℓ)·(∏ g̃_j)^{1/ℓ}`.
pub fn geometric_mean_program(g_tilde: &[f64]) -> Result<(VariableLayout, ConicProgram)> {
    let ell = g_tilde.len();
    if g_tilde.iter().any(|&g| !(g >= 0.0) || !g.is_finite()) {
        return Err(Error::Parameter("g̃ must be finite and nonnegative".into()));
    }
    let layout = build_layout(ell, ell)?;
    let len = 2 * layout.nodes() + ell;
    let mut prog = ConicProgram::empty(len);
    prog.objective[layout.u(1, 1)] = 1.0;
    push_copy_rows(&mut prog, &layout);
    push_padding_rows(&mut prog, &layout);
    for s in layout.u_range() {
        prog.var_lower[s] = 0.0;
    }
    for (j, &g) in g_tilde.iter().enumerate() {
        let value = g / layout.g_scale(j + 1);
        prog.var_lower[layout.g(j + 1)] = value;
        prog.var_upper[layout.g(j + 1)] = value;
    }
    prog.cones = tree_cones(&layout);
    Ok((layout, prog))
}

/// `c(ℓ) = 2^{(p−1)2^{p−1}/ℓ}`: the factor between the optimal `u_1` and the `ℓ`-th
/// root of the determinant (or of `∏ g̃_j` in the geometric-mean sub-program).
///
/// Each of the `2^{p−1} − 1` internal tree cones carries a factor 2; unwinding the
/// tree gives `u_1^{2^p} = 2^{(p−1)2^{p−1}} (∏ g̃_j) u_1^{2^p−ℓ}`.
pub fn scale_constant(ell: usize) -> f64 {
    let p = ell.next_power_of_two().trailing_zeros() as i32;
    if p == 0 {
        return 1.0;
    }
    let half = (1u64 << (p - 1)) as f64;
    2f64.powf((p - 1) as f64 * half / ell as f64)
}

/// Recovers `det M(w)` from the optimal `u_1`.
pub fn determinant_from_objective(ell: usize, u1: f64) -> f64 {
    (u1 / scale_constant(ell)).powi(ell as i32)
}
