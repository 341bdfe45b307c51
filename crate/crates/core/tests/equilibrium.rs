mod common;

use nalgebra::{DMatrix, DVector};
use netsing::equilibrium::{
    consistent_state, reduced_laplacian, reduced_potential, solve_full, terminal_currents, EquilibriumProblem,
};
use netsing::{fixtures, Error};
use proptest::prelude::*;
use rand::Rng;

fn conserving(rng: &mut rand_chacha::ChaCha8Rng, nb: usize, scale: f64) -> DVector<f64> {
    let u = common::random_state(rng, nb, scale);
    u.add_scalar(-u.mean())
}

#[test]
fn reduced_laplacian_is_jacobian_of_terminal_currents() {
    let mut rng = common::rng(21);
    let mut checked = 0;
    for _ in 0..60 {
        let n = rng.random_range(3..=8);
        let net = common::random_network(&mut rng, n);
        let nb = net.partition().boundary().len();
        let zb = common::random_state(&mut rng, nb, 0.5);
        let Ok(red) = reduced_laplacian(&net, &zb) else { continue };
        let h = 1e-5;
        let mut fd = DMatrix::zeros(nb, nb);
        let mut ok = true;
        for j in 0..nb {
            let mut p = zb.clone();
            let mut m = zb.clone();
            p[j] += h;
            m[j] -= h;
            match (terminal_currents(&net, &p), terminal_currents(&net, &m)) {
                (Ok(a), Ok(b)) => fd.set_column(j, &((a - b) / (2.0 * h))),
                _ => ok = false,
            }
        }
        if !ok {
            continue;
        }
        let scale = red.matrix().amax().max(1.0);
        assert!((&fd - red.matrix()).amax() < 1e-6 * scale, "{fd} vs {}", red.matrix());
        // and of the reduced potential
        let g = terminal_currents(&net, &zb).unwrap();
        for j in 0..nb {
            let mut p = zb.clone();
            let mut m = zb.clone();
            p[j] += h;
            m[j] -= h;
            let d = (reduced_potential(&net, &p).unwrap() - reduced_potential(&net, &m).unwrap()) / (2.0 * h);
            assert!((d - g[j]).abs() < 1e-6 * g[j].abs().max(1.0));
        }
        checked += 1;
    }
    assert!(checked >= 40, "only {checked} networks checked");
}

#[test]
fn example_reduced_laplacian_is_singular_at_critical_gain() {
    let net = fixtures::fig1();
    let red = reduced_laplacian(&net, &DVector::zeros(3)).unwrap();
    assert_eq!(red.corank(), 2);
    let red = reduced_laplacian(&fixtures::fig1_with(0.3, 0.5), &DVector::zeros(3)).unwrap();
    assert_eq!(red.corank(), 1);
}

#[test]
fn non_conserving_currents_are_rejected() {
    let p = EquilibriumProblem::new(fixtures::fig1_with(0.3, 0.5), DVector::from_vec(vec![1.0, 0.0, 0.0]));
    assert!(matches!(solve_full(&p).unwrap_err(), Error::NonConservingCurrents { .. }));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn full_solution_satisfies_equations_and_is_gauge_independent(seed in any::<u64>(), n in 2usize..=9) {
        let mut rng = common::rng(seed);
        let net = common::random_resistor_network(&mut rng, n);
        let nb = net.partition().boundary().len();
        let u = conserving(&mut rng, nb, 1.0);
        let base = solve_full(&EquilibriumProblem::new(net.clone(), u.clone())).unwrap();
        let z = base.z();
        prop_assert!(z.sum().abs() < 1e-12);
        prop_assert!(net.residual(z, &u).unwrap().amax() < 1e-10);
        for g in 0..n {
            let other = solve_full(&EquilibriumProblem::new(net.clone(), u.clone()).with_ground(g)).unwrap();
            prop_assert!((other.z() - z).amax() < 1e-10);
        }
        // the boundary part reproduces the reduced terminal map
        let zb = net.partition().gather_boundary(z);
        prop_assert!((terminal_currents(&net, &zb).unwrap() - &u).amax() < 1e-9);
        prop_assert!((consistent_state(&net, &zb).unwrap() - z).amax() < 1e-9);
    }
}
