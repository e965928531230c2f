use std::hint::black_box;

use covariant_povm::extremality::is_extremal;
use covariant_povm::grouprep::isotypic_decompose;
use covariant_povm::numerics::{diag, Tolerances};
use covariant_povm::optimize::{optimize_likelihood, OptimizeOptions};
use covariant_povm::sampling::random_seed;
use covariant_povm::scenarios::{self, Stabilizer};
use covariant_povm::Seed;
use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn decomposition(c: &mut Criterion) {
    let tol = Tolerances::default();
    let su3 = scenarios::su_d_tensor2(3).unwrap();
    c.bench_function("decompose su3 tensor square", |b| {
        b.iter(|| isotypic_decompose(black_box(&su3.rep), &tol).unwrap())
    });
    c.bench_function("decompose su3 stabilizer", |b| {
        b.iter(|| isotypic_decompose(black_box(&su3.stabilizer), &tol).unwrap())
    });
    let spin = scenarios::spin_j(3.0).unwrap();
    c.bench_function("decompose spin-3", |b| {
        b.iter(|| isotypic_decompose(black_box(&spin.rep), &tol).unwrap())
    });
}

fn extremality(c: &mut Criterion) {
    let tol = Tolerances::default();
    let su3 = scenarios::su_d_tensor2(3).unwrap();
    let space = su3.seed_space(&tol).unwrap();
    let seed = Seed::new(scenarios::su_d_tensor2_seed(3).unwrap(), space).unwrap();
    c.bench_function("extremality su3 projector seed", |b| {
        b.iter(|| is_extremal(black_box(&seed)).unwrap())
    });
    let u1 = scenarios::u1_phase(8, &[1; 8], Stabilizer::Trivial).unwrap();
    let space = u1.seed_space(&tol).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let seed = random_seed(&space, Some(3), &mut rng).unwrap();
    c.bench_function("extremality rank-3 correlation matrix d=8", |b| {
        b.iter(|| is_extremal(black_box(&seed)).unwrap())
    });
}

fn optimizer(c: &mut Criterion) {
    let tol = Tolerances::default();
    let spin = scenarios::spin_j(1.0).unwrap();
    let space = spin.seed_space(&tol).unwrap();
    let rho = diag(&[0.5, 0.3, 0.2]);
    let opts = OptimizeOptions::default();
    c.bench_function("optimize spin-1", |b| {
        b.iter(|| optimize_likelihood(black_box(&rho), &space, &opts).unwrap())
    });
}

criterion_group!(benches, decomposition, extremality, optimizer);
criterion_main!(benches);
