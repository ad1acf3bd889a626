//! Determinant inequalities behind the cone formulation, and concavity of the
//! relaxed objective.

use fekete_core::design::{logdet_objective, project_weights, DesignProblem};
use fekete_core::geometry::{interval_candidates, Domain};
use fekete_core::interpolation::{kernel_system, max_power_over, PointSet};
use fekete_core::kernels::brownian_kernel;
use fekete_core::kernels::MercerKernel;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize, data: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |i, j| data[i * cols + j])
}

/// `(m, ℓ, A, B)` with `ℓ ≤ m ≤ 8`.
fn pair_strategy() -> impl Strategy<Value = (usize, usize, Vec<f64>, Vec<f64>)> {
    (1usize..=8)
        .prop_flat_map(|m| (Just(m), 1..=m))
        .prop_flat_map(|(m, l)| {
            let cell = -2.0..2.0f64;
            (
                Just(m),
                Just(l),
                prop::collection::vec(cell.clone(), m * l),
                prop::collection::vec(cell, m * l),
            )
        })
}

/// Two PSD matrices `XXᵀ`, `YYᵀ` of size `ℓ ≤ 6` with possibly deficient rank.
fn psd_strategy() -> impl Strategy<Value = (DMatrix<f64>, DMatrix<f64>)> {
    (1usize..=6, 1usize..=8, 1usize..=8)
        .prop_flat_map(|(l, kx, ky)| {
            (
                Just(l),
                Just(kx),
                Just(ky),
                prop::collection::vec(-2.0..2.0f64, l * kx),
                prop::collection::vec(-2.0..2.0f64, l * ky),
            )
        })
        .prop_map(|(l, kx, ky, x, y)| {
            let x = matrix(l, kx, &x);
            let y = matrix(l, ky, &y);
            (&x * x.transpose(), &y * y.transpose())
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn determinant_cauchy_schwarz((m, l, a, b) in pair_strategy()) {
        let a = matrix(m, l, &a);
        let b = matrix(m, l, &b);
        let lhs = (a.transpose() * &b).determinant().powi(2);
        let rhs = (a.transpose() * &a).determinant() * (b.transpose() * &b).determinant();
        prop_assert!(lhs <= rhs * (1.0 + 1e-9) + 1e-300, "{lhs} > {rhs}");
    }

    #[test]
    fn determinant_superadditivity((c, d) in psd_strategy()) {
        let sum = (&c + &d).determinant();
        let parts = c.determinant().max(0.0) + d.determinant().max(0.0);
        // rank-deficient parts have determinants at rounding level
        let noise = 1e-12 * (c.norm() + d.norm()).powi(c.nrows() as i32);
        prop_assert!(parts <= sum * (1.0 + 1e-9) + noise, "{parts} > {sum}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn log_det_is_concave(
        (m, l, a) in (3usize..=10).prop_flat_map(|m| (Just(m), 1..=m.min(4))).prop_flat_map(|(m, l)| (Just(m), Just(l), prop::collection::vec(-1.0..1.0f64, m * l))),
        r1 in prop::collection::vec(0.0..1.0f64, 10),
        r2 in prop::collection::vec(0.0..1.0f64, 10),
    ) {
        let regs: Vec<Vec<f64>> = a.chunks(l).map(<[f64]>::to_vec).collect();
        let n = l.max(m / 2);
        let p = DesignProblem::new(regs, n, vec![]).unwrap();
        let free = vec![false; m];
        let w1 = project_weights(&r1[..m], n, &free);
        let w2 = project_weights(&r2[..m], n, &free);
        let mid: Vec<f64> = w1.iter().zip(&w2).map(|(x, y)| 0.5 * (x + y)).collect();
        let (f1, f2, fm) = (
            logdet_objective(&p, &w1).unwrap(),
            logdet_objective(&p, &w2).unwrap(),
            logdet_objective(&p, &mid).unwrap(),
        );
        prop_assume!(f1.is_finite() && f2.is_finite());
        prop_assert!(fm >= 0.5 * (f1 + f2) - 1e-9, "{fm} < {}", 0.5 * (f1 + f2));
    }
}

fn subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    (k - 1..m)
        .flat_map(|last| {
            subsets(last, k - 1).into_iter().map(move |mut s| {
                s.push(last);
                s
            })
        })
        .collect()
}

fn gram_det(k: &dyn MercerKernel, pts: &[Vec<f64>], idx: &[usize]) -> f64 {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| k.eval(&pts[idx[i]], &pts[idx[j]])).determinant()
}

#[test]
fn power_bounded_by_best_larger_determinant() {
    let b = brownian_kernel();
    let c = interval_candidates(10, Domain::Interval01).unwrap();
    for n in 1..=4 {
        let best_next = subsets(10, n + 1).iter().map(|s| gram_det(&b, &c.points, s)).fold(0.0, f64::max);
        for x in subsets(9, n).into_iter().map(|s| s.into_iter().map(|j| j + 1).collect::<Vec<_>>()) {
            let det = gram_det(&b, &c.points, &x);
            let sys = kernel_system(&b, &PointSet::from_indices(&c, &x).unwrap()).unwrap();
            let (pmax, _) = max_power_over(&sys, &b, &c).unwrap();
            assert!(pmax * pmax <= best_next / det + 1e-9, "X = {x:?}: {} > {}", pmax * pmax, best_next / det);
        }
    }
}
