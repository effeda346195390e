mod common;

use proptest::prelude::*;
use rand::Rng;

use common::{random_network, rel, rng};
use impedance_diffusion::allocate::{
    allocation_landscape, optimize_allocation, AllocationProblem, SolverOptions,
};
use impedance_diffusion::fixtures;
use impedance_diffusion::spectral::{eig_product, eig_symmetric};

fn quick() -> SolverOptions {
    SolverOptions {
        starts: 2,
        ..SolverOptions::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn allocation_invariants(seed in any::<u64>(), n in 2usize..=6) {
        let mut r = rng(seed);
        let net = random_network(&mut r, n, 0.4, 0.5, 1e-3, 0.0, 0.0);
        let c = r.gen_range(1e-3..1e-2);
        let mut problem = AllocationProblem::for_network(&net, None, c).unwrap();
        problem.options = quick();
        let result = optimize_allocation(&problem).unwrap();

        prop_assert!(result.allocation.iter().all(|&v| v >= 0.0));
        prop_assert!((result.allocation.iter().sum::<f64>() - c).abs() <= 1e-12 * c);
        let check = eig_product(&result.allocation, &problem.laplacian).unwrap().lambda2_symmetric();
        prop_assert!((check - result.lambda2).abs() <= 1e-9 * result.lambda2);
        prop_assert!(result.lambda2 >= result.uniform_lambda2 - 1e-9 * result.uniform_lambda2.abs());

        let l2 = eig_symmetric(&problem.laplacian).unwrap().eigenvalues[1];
        let dmax = result.allocation.iter().copied().fold(0.0, f64::max);
        let dmin = result.allocation.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(result.lambda2 <= l2 * dmax * (1.0 + 1e-12));
        if dmin > 0.0 {
            prop_assert!(result.lambda2 >= l2 * dmin * (1.0 - 1e-12));
        }

        // identical problems give bitwise-identical results
        prop_assert_eq!(optimize_allocation(&problem).unwrap(), result.clone());

        // the objective is homogeneous of degree one in the budget
        let mut scaled = problem.clone();
        scaled.budget = 3.0 * c;
        let big = optimize_allocation(&scaled).unwrap();
        prop_assert!(rel(big.lambda2, 3.0 * result.lambda2) < 1e-6);
    }
}

#[test]
fn landscape_max_agrees_with_optimizer() {
    let problem = AllocationProblem::for_network(&fixtures::star(), None, 5e-3).unwrap();
    let best = optimize_allocation(&problem).unwrap();
    let land = allocation_landscape(&problem, 50).unwrap();
    let (_, grid_max) = land.max().unwrap();
    assert!(grid_max <= best.lambda2 * (1.0 + 1e-9));
    assert!(grid_max >= 0.98 * best.lambda2);
}

#[test]
fn vanishing_budget_flattens_landscape() {
    let mut last = f64::INFINITY;
    for c in [1e-3, 1e-6, 1e-9] {
        let problem = AllocationProblem::for_network(&fixtures::star(), None, c).unwrap();
        let max = allocation_landscape(&problem, 6).unwrap().max().unwrap().1;
        assert!(max < last);
        assert!(max <= c);
        last = max;
    }
}
