use covariant_povm::covariant::{
    block_form, born_probability, check_seed, likelihood, normalize_to_seed, povm_density,
    seed_from_blocks, validate_density,
};
use covariant_povm::grouprep::{GroupPoint, ModelKind};
use covariant_povm::numerics::{
    c, cr, diag, hermitian_eig, identity, max_abs_diff, CMatrix, Tolerances,
};
use covariant_povm::sampling::{random_density, random_seed};
use covariant_povm::scenarios::{self, Stabilizer};
use covariant_povm::{Error, Seed};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn taylor_exp(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let mut term = identity(n);
    let mut sum = identity(n);
    for k in 1..60 {
        term = &term * a / cr(k as f64);
        sum += &term;
    }
    sum
}

#[test]
fn spin_one_pi_rotation_moves_highest_weight_to_lowest() {
    let s = scenarios::spin_j(1.0).unwrap();
    let space = s.seed_space(&Tolerances::default()).unwrap();
    let xi = scenarios::spin_highest_weight_seed(1.0, 0).unwrap();
    let seed = Seed::new_valid(xi.clone(), space).unwrap();
    let point = GroupPoint::Lie(vec![0.0, -std::f64::consts::PI, 0.0]);
    let m = povm_density(&seed, &point).unwrap();
    let [_, jy, _] = scenarios::angular_momentum(1.0).unwrap();
    let u = taylor_exp(&(&jy * c(0.0, -std::f64::consts::PI)));
    let oracle = &u * &xi * u.adjoint();
    assert!(max_abs_diff(&m, &oracle) < 1e-10);
    assert!(max_abs_diff(&m, &diag(&[0.0, 0.0, 3.0])) < 1e-10);
}

#[test]
fn validate_density_rejects_bad_states() {
    assert!(matches!(
        validate_density(&diag(&[0.6, 0.6]), 2),
        Err(Error::InvalidState(_))
    ));
    assert!(matches!(
        validate_density(&diag(&[1.2, -0.2]), 2),
        Err(Error::InvalidState(_))
    ));
    assert!(validate_density(&diag(&[0.5, 0.5, 0.0]), 2).is_err());
    assert!(validate_density(&diag(&[0.25, 0.75]), 2).is_ok());
}

#[test]
fn check_seed_reports_each_violation() {
    let s = scenarios::u1_phase(3, &[1, 1, 1], Stabilizer::Trivial).unwrap();
    let space = s.seed_space(&Tolerances::default()).unwrap();
    let good = check_seed(&identity(3), &space.g_dec, &space.g0_dec, 1e-9).unwrap();
    assert!(good.valid);
    let scaled = check_seed(&(identity(3) * cr(2.0)), &space.g_dec, &space.g0_dec, 1e-9).unwrap();
    assert!(!scaled.valid && scaled.norm_violation > 0.5);
    let mut neg = identity(3) * cr(1.0);
    neg[(0, 1)] = cr(1.5);
    neg[(1, 0)] = cr(1.5);
    let report = check_seed(&neg, &space.g_dec, &space.g0_dec, 1e-9).unwrap();
    assert!(!report.valid && report.psd_margin < 0.0);
}

#[test]
fn normalize_to_seed_needs_full_frame() {
    let s = scenarios::u1_phase(3, &[1, 1, 1], Stabilizer::Trivial).unwrap();
    let space = s.seed_space(&Tolerances::default()).unwrap();
    assert!(normalize_to_seed(&diag(&[1.0, 1.0, 0.0]), &space).is_err());
    let seed = normalize_to_seed(&diag(&[2.0, 3.0, 5.0]), &space).unwrap();
    assert!(max_abs_diff(seed.xi(), &identity(3)) < 1e-12);
}

#[test]
fn finite_group_probabilities_sum_to_one() {
    let s = scenarios::cyclic(4, &[0, 1, 1, 3]).unwrap();
    let space = s.seed_space(&Tolerances::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = match s.rep.kind() {
        ModelKind::Finite(els) => els.len(),
        _ => unreachable!(),
    };
    for _ in 0..20 {
        let seed = random_seed(&space, None, &mut rng).unwrap();
        let rho = random_density(4, 2, &mut rng);
        let total: f64 = (0..n)
            .map(|k| born_probability(&rho, &seed, &GroupPoint::Element(k)).unwrap())
            .sum::<f64>()
            / n as f64;
        assert!((total - 1.0).abs() < 1e-10, "total {total}");
        assert!(likelihood(&rho, &seed).unwrap() >= -1e-12);
    }
}

fn spaces() -> Vec<std::sync::Arc<covariant_povm::SeedSpace>> {
    let tol = Tolerances::default();
    vec![
        scenarios::spin_j(1.0).unwrap().seed_space(&tol).unwrap(),
        scenarios::u1_phase(4, &[2, 1, 1], Stabilizer::Trivial)
            .unwrap()
            .seed_space(&tol)
            .unwrap(),
        scenarios::u1_phase(4, &[1, 2, 1], Stabilizer::Cyclic(2))
            .unwrap()
            .seed_space(&tol)
            .unwrap(),
        scenarios::cyclic(3, &[0, 1, 2]).unwrap().seed_space(&tol).unwrap(),
        scenarios::su_d_tensor2(3).unwrap().seed_space(&tol).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn povm_density_preserves_spectrum(which in 0usize..5, seed in any::<u64>(), t in -3.0f64..3.0) {
        let space = &spaces()[which];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_seed(space, None, &mut rng).unwrap();
        let point = match space.g_dec.model.kind() {
            ModelKind::Finite(els) => GroupPoint::Element(seed as usize % els.len()),
            ModelKind::OneParameter { .. } => GroupPoint::Angle(t),
            ModelKind::Lie(gens) => GroupPoint::Lie((0..gens.len()).map(|k| t / (k + 1) as f64).collect()),
        };
        let m = povm_density(&s, &point).unwrap();
        let a = hermitian_eig(s.xi()).unwrap().values;
        let b = hermitian_eig(&m).unwrap().values;
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-9 * a.last().unwrap().max(1.0));
        }
    }

    #[test]
    fn block_form_round_trips(which in 0usize..5, seed in any::<u64>(), cap in 1usize..3) {
        let space = &spaces()[which];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = match random_seed(space, Some(cap), &mut rng) {
            Ok(s) => s,
            Err(_) => random_seed(space, None, &mut rng).unwrap(),
        };
        prop_assert!(s.report().unwrap().valid);
        let blocks = block_form(&s).unwrap();
        let rebuilt = seed_from_blocks(&blocks, &space.g0_dec).unwrap();
        prop_assert!(max_abs_diff(&rebuilt, s.xi()) <= 1e-9);
        let rank_total: usize = blocks
            .blocks
            .iter()
            .map(|b| b.rank * b.d)
            .sum();
        let eig = hermitian_eig(s.xi()).unwrap();
        let thr = 1e-9 * eig.max().max(1.0);
        prop_assert_eq!(rank_total, eig.values.iter().filter(|&&v| v > thr).count());
    }
}
