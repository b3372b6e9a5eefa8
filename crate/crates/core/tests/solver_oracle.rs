//! Randomized cross-checks of the simplex solver against exhaustive vertex
//! enumeration, plus self-certification via the KKT checker.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rmarket_core::solver::{
    check_kkt, duality_gap, enumerate_vertices, solve_lp, LpProblem, LpStatus, VertexEnumeration,
};

/// Random bounded LP with up to 6 variables and mixed eq/ub rows.
fn random_bounded_lp(rng: &mut ChaCha8Rng) -> LpProblem {
    let n = rng.gen_range(1..=6);
    let mut p = LpProblem::new(n);
    for j in 0..n {
        let lo = rng.gen_range(-5.0..5.0);
        p.lower[j] = lo;
        p.upper[j] = lo + rng.gen_range(0.0..10.0);
        p.objective[j] = rng.gen_range(-10.0..10.0);
    }
    let m_eq = rng.gen_range(0..=n.min(2));
    let m_ub = rng.gen_range(0..=3);
    for _ in 0..m_eq {
        let row: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        // rhs near an interior point so the instance is usually feasible
        let mid: f64 = row
            .iter()
            .enumerate()
            .map(|(j, a)| a * 0.5 * (p.lower[j] + p.upper[j]))
            .sum();
        p.eq.push(row, mid + rng.gen_range(-1.0..1.0));
    }
    for _ in 0..m_ub {
        let row: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let mid: f64 = row
            .iter()
            .enumerate()
            .map(|(j, a)| a * 0.5 * (p.lower[j] + p.upper[j]))
            .sum();
        p.ub.push(row, mid + rng.gen_range(-1.0..3.0));
    }
    p
}

#[test]
fn matches_vertex_enumeration_on_random_lps() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut optima = 0;
    for trial in 0..1000 {
        let p = random_bounded_lp(&mut rng);
        let sol = solve_lp(&p).unwrap();
        let oracle = enumerate_vertices(&p).unwrap();
        let VertexEnumeration::Vertices(vs) = oracle else {
            panic!("trial {trial}: bounded LP reported unbounded");
        };
        match sol.status {
            LpStatus::Optimal => {
                optima += 1;
                let best = vs.iter().map(|(_, o)| *o).fold(f64::INFINITY, f64::min);
                let rel = (sol.objective_value - best).abs() / (1.0 + best.abs());
                assert!(
                    rel <= 1e-8,
                    "trial {trial}: solver {} vs oracle {}",
                    sol.objective_value,
                    best
                );
                assert!(
                    duality_gap(&p, &sol) <= 1e-8 * (1.0 + sol.objective_value.abs()),
                    "trial {trial}: duality gap {}",
                    duality_gap(&p, &sol)
                );
                let report = check_kkt(&p, &sol, 1e-7);
                assert!(report.is_empty(), "trial {trial}: KKT {:?}", report);
            }
            LpStatus::Infeasible => {
                assert!(vs.is_empty(), "trial {trial}: oracle found a vertex");
            }
            LpStatus::Unbounded => panic!("trial {trial}: bounded LP reported unbounded"),
        }
    }
    // the generator is tuned to make most instances feasible
    assert!(optima > 600, "only {optima} optimal instances");
}

#[test]
fn repeated_solves_are_bit_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let p = random_bounded_lp(&mut rng);
        let a = solve_lp(&p).unwrap();
        let b = solve_lp(&p).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.y_eq, b.y_eq);
        assert_eq!(a.y_ub, b.y_ub);
        assert_eq!(a.z_lower, b.z_lower);
        assert_eq!(a.z_upper, b.z_upper);
        assert_eq!(a.objective_value, b.objective_value);
    }
}
