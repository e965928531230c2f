use std::f64::consts::PI;

use covariant_povm::grouprep::{
    commutant_basis, frame_operator, intertwiner_check, isotypic_decompose, twirl, GroupModel,
    GroupPoint, ModelKind,
};
use covariant_povm::numerics::{
    c, commutator, cr, diag, identity, kron, max_abs, max_abs_diff, matrix_unit, nullspace, trace,
    CMatrix, Tolerances,
};
use covariant_povm::sampling::random_complex;
use covariant_povm::scenarios::{self, Stabilizer};
use covariant_povm::Scenario;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn models() -> Vec<GroupModel> {
    let mut out = Vec::new();
    let scen: Vec<Scenario> = vec![
        scenarios::spin_j(0.5).unwrap(),
        scenarios::spin_j(1.0).unwrap(),
        scenarios::spin_j(1.5).unwrap(),
        scenarios::su_d_tensor2(3).unwrap(),
        scenarios::u1_phase(4, &[1, 2, 1], Stabilizer::Cyclic(2)).unwrap(),
        scenarios::cyclic(4, &[0, 1, 1, 3]).unwrap(),
    ];
    for s in scen {
        out.push(s.rep);
        out.push(s.stabilizer);
    }
    out
}

#[test]
fn builders_pass_intertwiner_check() {
    for model in models() {
        let dec = isotypic_decompose(&model, &Tolerances::default()).unwrap();
        let total: usize = dec.classes.iter().map(|c| c.d * c.m).sum();
        assert_eq!(total, model.dim());
        assert!(intertwiner_check(&dec, &model).max_violation() <= 1e-8);
    }
}

#[test]
fn commutant_of_diag_001_matches_explicit_nullspace() {
    let n = diag(&[0.0, 0.0, 1.0]);
    let model = GroupModel::one_parameter(n.clone()).unwrap();
    // Oracle: vec(B N - N B) = (N^T (x) I - I (x) N) vec(B), solved directly.
    let map = kron(&n.transpose(), &identity(3)) - kron(&identity(3), &n);
    assert_eq!(nullspace(&map, 1e-9).ncols(), 5);
    assert_eq!(commutant_basis(&model).unwrap().len(), 5);
}

#[test]
fn block_structure_is_irrep_tensor_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for model in models() {
        let dec = isotypic_decompose(&model, &Tolerances::default()).unwrap();
        let sum = dec
            .classes
            .iter()
            .fold(CMatrix::zeros(dec.dim, dec.dim), |acc, c| {
                let w = c.isometry();
                acc + &w * w.adjoint()
            });
        assert!(max_abs_diff(&sum, &identity(dec.dim)) <= 1e-9);
        let points: Vec<GroupPoint> = match model.kind() {
            ModelKind::Finite(els) => (0..els.len()).map(GroupPoint::Element).collect(),
            ModelKind::OneParameter { .. } => vec![GroupPoint::Angle(0.7), GroupPoint::Angle(-2.1)],
            ModelKind::Lie(gens) => (0..2)
                .map(|_| {
                    let v = random_complex(gens.len(), 1, &mut rng);
                    GroupPoint::Lie(v.iter().map(|z| z.re).collect())
                })
                .collect(),
        };
        for p in &points {
            let u = model.unitary(p).unwrap();
            for class in &dec.classes {
                let w = class.isometry();
                let block = w.adjoint() * &u * &w;
                let irrep = class.blocks[0].adjoint() * &u * &class.blocks[0];
                let expected = kron(&irrep, &identity(class.m));
                assert!(max_abs_diff(&block, &expected) <= 1e-7);
            }
        }
    }
}

#[test]
fn twirl_off_diagonal_phase_vanishes_like_quadrature() {
    let model = GroupModel::one_parameter(diag(&[0.0, 1.0])).unwrap();
    let dec = isotypic_decompose(&model, &Tolerances::default()).unwrap();
    let o = matrix_unit(2, 0, 1);
    // Riemann sum of exp(i phi) over a period.
    let nodes = 64;
    let mut avg = CMatrix::zeros(2, 2);
    for t in 0..nodes {
        let phi = 2.0 * PI * t as f64 / nodes as f64;
        let u = model.unitary(&GroupPoint::Angle(phi)).unwrap();
        avg += &u * &o * u.adjoint() / cr(nodes as f64);
    }
    assert!(max_abs(&avg) < 1e-14);
    assert!(max_abs(&twirl(&o, &dec).unwrap()) < 1e-14);
}

#[test]
fn cyclic_three_twirl_is_diagonal_projection() {
    let s = scenarios::cyclic(3, &[0, 1, 2]).unwrap();
    let dec = isotypic_decompose(&s.rep, &Tolerances::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let o = random_complex(3, 3, &mut rng);
    let els = match s.rep.kind() {
        ModelKind::Finite(els) => els.clone(),
        _ => unreachable!(),
    };
    let explicit = els
        .iter()
        .fold(CMatrix::zeros(3, 3), |acc, u| acc + u * &o * u.adjoint())
        / cr(3.0);
    let diagonal = CMatrix::from_fn(3, 3, |i, j| if i == j { o[(i, j)] } else { cr(0.0) });
    assert!(max_abs_diff(&explicit, &diagonal) < 1e-12);
    assert!(max_abs_diff(&twirl(&o, &dec).unwrap(), &diagonal) < 1e-12);
}

#[test]
fn frame_operator_examples() {
    let s = scenarios::spin_j(1.0).unwrap();
    let dec = isotypic_decompose(&s.rep, &Tolerances::default()).unwrap();
    let xi = scenarios::spin_highest_weight_seed(1.0, 0).unwrap();
    assert!(max_abs_diff(&frame_operator(&xi, &dec).unwrap(), &identity(3)) <= 1e-9);
    assert!(max_abs_diff(&frame_operator(&identity(3), &dec).unwrap(), &identity(3)) <= 1e-12);
}

#[test]
fn closed_under_adjoint_is_required() {
    let w = c(0.0, 1.0);
    let u = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![cr(1.0), w]));
    assert!(GroupModel::finite(vec![identity(2), u.clone()]).is_err());
    assert!(GroupModel::finite(vec![identity(2), u.clone(), u.adjoint(), &u * &u]).is_ok());
}

fn finite_models() -> Vec<GroupModel> {
    vec![
        scenarios::cyclic(3, &[0, 1, 2]).unwrap().rep,
        scenarios::cyclic(4, &[0, 1, 1, 3]).unwrap().rep,
        scenarios::cyclic(5, &[2, 0]).unwrap().rep,
    ]
}

proptest! {
    #[test]
    fn twirl_commutes_preserves_trace_and_is_idempotent(
        which in 0usize..12, seed in any::<u64>()
    ) {
        let model = &models()[which];
        let dec = isotypic_decompose(model, &Tolerances::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let o = random_complex(dec.dim, dec.dim, &mut rng);
        let t = twirl(&o, &dec).unwrap();
        prop_assert!(model.commutation_violation(&t) <= 1e-8);
        prop_assert!((trace(&t) - trace(&o)).norm() <= 1e-10);
        prop_assert!(max_abs_diff(&twirl(&t, &dec).unwrap(), &t) <= 1e-10);
        let fixed = twirl(&t, &dec).unwrap();
        prop_assert!(max_abs_diff(&fixed, &t) <= 1e-10);
    }

    #[test]
    fn finite_twirl_matches_group_average(which in 0usize..3, seed in any::<u64>()) {
        let model = &finite_models()[which];
        let dec = isotypic_decompose(model, &Tolerances::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let o = random_complex(dec.dim, dec.dim, &mut rng);
        let els = match model.kind() { ModelKind::Finite(e) => e.clone(), _ => unreachable!() };
        let avg = els.iter().fold(CMatrix::zeros(dec.dim, dec.dim), |acc, u| acc + u * &o * u.adjoint())
            / cr(els.len() as f64);
        prop_assert!(max_abs_diff(&avg, &twirl(&o, &dec).unwrap()) <= 1e-9);
    }

    #[test]
    fn commutant_elements_commute(which in 0usize..12) {
        let model = &models()[which];
        for b in commutant_basis(model).unwrap() {
            for x in model.constraint_matrices() {
                prop_assert!(max_abs(&commutator(&b, x)) <= 1e-8);
            }
        }
    }
}
