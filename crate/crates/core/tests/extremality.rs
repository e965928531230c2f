use covariant_povm::extremality::{
    convex_split, descend_to_extremal, is_extremal, lemma_feasibility, minimal_support_check,
    perturbation_space, rank_bounds, split_along_witness,
};
use covariant_povm::numerics::{
    c, cr, hermitian_eig, identity, matrix_unit, max_abs_diff, rank_tol, trace, CMatrix,
    Tolerances,
};
use covariant_povm::sampling::{random_complex, random_seed};
use covariant_povm::scenarios::{self, Stabilizer};
use covariant_povm::{Error, Seed};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_correlation(n: usize, r: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let v = random_complex(n, r, rng);
    let g = &v * v.adjoint();
    CMatrix::from_fn(n, n, |i, j| g[(i, j)] / cr((g[(i, i)].re * g[(j, j)].re).sqrt()))
}

/// Dimension of the Hermitian `A` on `Rng(C)` with zero diagonal after pulling back.
fn oracle_nullity(cm: &CMatrix) -> usize {
    let eig = hermitian_eig(cm).unwrap();
    let keep: Vec<usize> = (0..eig.values.len()).filter(|&k| eig.values[k] > 1e-8).collect();
    let r = keep.len();
    let n = cm.nrows();
    let v = CMatrix::from_fn(n, r, |i, k| eig.vectors[(i, keep[k])] * cr(eig.values[keep[k]].sqrt()));
    let mut cols = Vec::new();
    for p in 0..r {
        cols.push(matrix_unit(r, p, p));
        for q in (p + 1)..r {
            cols.push(matrix_unit(r, p, q) + matrix_unit(r, q, p));
            cols.push(matrix_unit(r, p, q) * c(0.0, 1.0) - matrix_unit(r, q, p) * c(0.0, 1.0));
        }
    }
    let sys = DMatrix::<f64>::from_fn(n, cols.len(), |i, k| {
        let row = v.row(i);
        (row.conjugate() * &cols[k] * row.transpose())[(0, 0)].re
    });
    let s = nalgebra::SVD::new(sys, false, false).singular_values;
    let smax = s.iter().copied().fold(0.0, f64::max);
    cols.len() - s.iter().filter(|&&x| x > 1e-9 * smax).count()
}

fn correlation_seed(cm: &CMatrix) -> Seed {
    let n = cm.nrows();
    let s = scenarios::u1_phase(n, &vec![1; n], Stabilizer::Trivial).unwrap();
    let space = s.seed_space(&Tolerances::default()).unwrap();
    scenarios::correlation_matrix_to_seed(cm, &space).unwrap()
}

#[test]
fn identity_two_splits_into_phase_rank_one_seeds() {
    let seed = correlation_seed(&identity(2));
    let split = split_along_witness(&seed).unwrap();
    let recombined =
        split.zeta_plus.xi() * cr(split.lambda) + split.zeta_minus.xi() * cr(1.0 - split.lambda);
    assert!(max_abs_diff(&recombined, &identity(2)) < 1e-10);
    for z in [&split.zeta_plus, &split.zeta_minus] {
        assert!(z.report().unwrap().valid);
        assert_eq!(rank_tol(z.xi(), 1e-8), 1);
        assert!(is_extremal(z).unwrap().extremal);
    }
}

#[test]
fn extremal_seed_refuses_to_split() {
    let ones = CMatrix::from_element(3, 3, cr(1.0));
    let seed = correlation_seed(&ones);
    assert!(matches!(split_along_witness(&seed), Err(Error::Extremal)));
    assert_eq!(perturbation_space(&seed).unwrap().dimension, 0);
}

#[test]
fn off_commutant_theta_is_rejected() {
    let s = scenarios::u1_phase(3, &[1, 2], Stabilizer::Cyclic(2)).unwrap();
    let space = s.seed_space(&Tolerances::default()).unwrap();
    let seed = Seed::new_valid(identity(3), space).unwrap();
    let theta = matrix_unit(3, 0, 0) - matrix_unit(3, 1, 1);
    assert!(convex_split(&seed, &theta).is_err());
}

#[test]
fn descent_from_interior_reaches_extremal_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let s = scenarios::spin_j(1.0).unwrap();
    let space = s.seed_space(&Tolerances::default()).unwrap();
    for _ in 0..5 {
        let seed = random_seed(&space, None, &mut rng).unwrap();
        let path = descend_to_extremal(&seed, &mut rng).unwrap();
        let last = path.last().unwrap();
        assert!(last.report().unwrap().valid);
        assert!(is_extremal(last).unwrap().extremal);
        let ranks: Vec<usize> = path.iter().map(|z| rank_tol(z.xi(), 1e-8)).collect();
        assert!(ranks.windows(2).all(|w| w[1] < w[0]), "{ranks:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn correlation_extremality_matches_oracle(n in 2usize..=5, r in 1usize..=5, seed in any::<u64>()) {
        let r = r.min(n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cm = random_correlation(n, r, &mut rng);
        let z = correlation_seed(&cm);
        let nullity = oracle_nullity(&cm);
        let cert = is_extremal(&z).unwrap();
        prop_assert_eq!(cert.extremal, nullity == 0);
        prop_assert_eq!(perturbation_space(&z).unwrap().dimension, nullity);
        prop_assert_eq!(minimal_support_check(&z).unwrap(), nullity == 0);
        let rb = rank_bounds(&z).unwrap();
        if cert.extremal {
            prop_assert!(rb.budget_ok);
        }
        if let Some(theta) = cert.witness {
            let lemma = lemma_feasibility(z.xi(), &theta, 1e-9).unwrap();
            prop_assert!(lemma.feasible);
            prop_assert!(trace(&theta).norm() <= 1e-8);
            let split = convex_split(&z, &theta).unwrap();
            prop_assert!(split.zeta_plus.report().unwrap().valid);
            prop_assert!(split.zeta_minus.report().unwrap().valid);
            prop_assert!(split.lambda > 0.0 && split.lambda < 1.0);
            let back = split.zeta_plus.xi() * cr(split.lambda)
                + split.zeta_minus.xi() * cr(1.0 - split.lambda);
            prop_assert!(max_abs_diff(&back, z.xi()) <= 1e-9);
        }
    }

    #[test]
    fn perturbation_basis_respects_constraints(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = scenarios::u1_phase(4, &[2, 1, 1], Stabilizer::Trivial).unwrap();
        let space = s.seed_space(&Tolerances::default()).unwrap();
        let z = random_seed(&space, None, &mut rng).unwrap();
        let ps = perturbation_space(&z).unwrap();
        for theta in &ps.basis {
            prop_assert!(lemma_feasibility(z.xi(), theta, 1e-9).unwrap().feasible);
            let eps = 1e-3 / covariant_povm::numerics::max_abs(theta).max(1e-12);
            let moved = z.xi() + theta * cr(eps);
            prop_assert!(max_abs_diff(
                &covariant_povm::grouprep::frame_operator(&moved, &space.g_dec).unwrap(),
                &identity(4)
            ) <= 1e-9);
        }
    }

    #[test]
    fn extremal_seeds_meet_rank_budget(which in 0usize..3, seed in any::<u64>()) {
        let tol = Tolerances::default();
        let s = [
            scenarios::spin_j(1.0).unwrap(),
            scenarios::u1_phase(4, &[2, 1, 1], Stabilizer::Trivial).unwrap(),
            scenarios::cyclic(3, &[0, 1, 2]).unwrap(),
        ][which].clone();
        let space = s.seed_space(&tol).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = random_seed(&space, None, &mut rng).unwrap();
        let path = descend_to_extremal(&z, &mut rng).unwrap();
        let rb = rank_bounds(path.last().unwrap()).unwrap();
        prop_assert!(rb.budget_ok);
        prop_assert!(rank_tol(path.last().unwrap().xi(), 1e-8) >= rb.lower_bound);
    }
}
