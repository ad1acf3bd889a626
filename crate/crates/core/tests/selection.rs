//! Selection against exhaustive search, nesting and invariances.

use fekete_core::design::{fekete_bruteforce, truncated_gram_det, DesignProblem};
use fekete_core::geometry::{interval_candidates, CandidateSet, Domain};
use fekete_core::kernels::{brownian_kernel, gaussian_kernel, EigenOrdering, MercerKernel};
use fekete_core::selection::{algorithm1, algorithm2, select_with_problem, SelectionOptions};

fn determinant_of(problem: &DesignProblem, subset: &[usize]) -> f64 {
    let l = problem.dim();
    let mut m = nalgebra::DMatrix::<f64>::zeros(l, l);
    for &j in subset {
        let a = nalgebra::DVector::from_column_slice(&problem.regressors()[j]);
        m.ger(1.0, &a, &a, 1.0);
    }
    m.determinant()
}

/// Ratio of the truncated determinant at Algorithm 1's points to the exhaustive
/// maximum, or `None` when Algorithm 1 finds too few local maxima.
fn bruteforce_ratio(kernel: &dyn MercerKernel, c: &CandidateSet, n: usize) -> Option<f64> {
    let r = algorithm1(kernel, c, n, &SelectionOptions::default()).unwrap();
    if !r.succeeded() {
        return None;
    }
    let problem = DesignProblem::from_candidates(kernel, c, n, n, vec![]).unwrap();
    let (best_set, best) = fekete_bruteforce(&problem).unwrap();
    let got = determinant_of(&problem, &r.chosen);

    // the Gram form of the same determinant, up to the eigenvalue product
    let pts: Vec<Vec<f64>> = best_set.iter().map(|&j| c.points[j].clone()).collect();
    let lambdas: f64 = (1..=n).map(|l| kernel.eigenvalue(l).unwrap()).product();
    let gram = truncated_gram_det(kernel, &pts).unwrap();
    assert!((gram / (lambdas * best) - 1.0).abs() < 1e-9, "{gram} vs {}", lambdas * best);
    Some(got / best)
}

#[test]
fn algorithm1_is_near_the_exhaustive_optimum() {
    let b = brownian_kernel();
    let g = gaussian_kernel(1, 1.0, 1.0, EigenOrdering::Standard).unwrap();
    for m in [6, 8, 10, 12] {
        for n in 1..=3 {
            let c = interval_candidates(m, Domain::Interval01).unwrap();
            let ratio = bruteforce_ratio(&b, &c, n).unwrap_or_else(|| panic!("brownian m = {m}, n = {n} failed"));
            assert!(ratio >= 0.9, "brownian m = {m}, n = {n}: ratio {ratio}");
            let c = interval_candidates(m, Domain::Interval11).unwrap();
            let ratio = bruteforce_ratio(&g, &c, n).unwrap_or_else(|| panic!("gaussian m = {m}, n = {n} failed"));
            assert!(ratio >= 0.9, "gaussian m = {m}, n = {n}: ratio {ratio}");
        }
    }
}

#[test]
fn selection_ignores_regressor_scale() {
    let b = brownian_kernel();
    let c = interval_candidates(60, Domain::Interval01).unwrap();
    let opts = SelectionOptions::default();
    for n in [2, 4, 6] {
        let base = DesignProblem::from_candidates(&b, &c, n, n, vec![]).unwrap();
        let reference = select_with_problem(&base, &c, &opts).unwrap();
        assert!(reference.succeeded());
        for s in [0.1, 10.0] {
            let scaled: Vec<Vec<f64>> = base.regressors().iter().map(|a| a.iter().map(|x| s * x).collect()).collect();
            let p = DesignProblem::new(scaled, n, vec![]).unwrap();
            let r = select_with_problem(&p, &c, &opts).unwrap();
            assert_eq!(r.chosen, reference.chosen, "n = {n}, scale {s}");
        }
    }
}

#[test]
fn nested_stages_contain_their_predecessors() {
    let b = brownian_kernel();
    let c = interval_candidates(80, Domain::Interval01).unwrap();
    let stages = algorithm2(&b, &c, &[3, 6, 9], &SelectionOptions::default()).unwrap();
    assert_eq!(stages.len(), 3);
    for pair in stages.windows(2) {
        assert!(pair[1].succeeded());
        assert_eq!(pair[1].chosen.len(), pair[1].n);
        assert!(pair[0].chosen.iter().all(|j| pair[1].chosen.contains(j)), "{:?} ⊄ {:?}", pair[0].chosen, pair[1].chosen);
    }
    for s in &stages {
        let mut sorted = s.chosen.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), s.n, "repeated point at n = {}", s.n);
        assert!(s.diagnostics.condition_number.is_some_and(f64::is_finite));
    }
}

#[test]
fn single_stage_schedule_is_algorithm1() {
    let g = gaussian_kernel(1, 1.0, 1.0, EigenOrdering::Standard).unwrap();
    let c = interval_candidates(50, Domain::Interval11).unwrap();
    let opts = SelectionOptions::default();
    let one = algorithm1(&g, &c, 5, &opts).unwrap();
    let nested = algorithm2(&g, &c, &[5], &opts).unwrap();
    assert_eq!(nested.len(), 1);
    assert_eq!(nested[0].chosen, one.chosen);
}
