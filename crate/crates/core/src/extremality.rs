//! Extremality of seeds: perturbations, the span test on the `F` family,
//! minimal support, rank bounds and convex splitting.
//!
//! Three independent routes decide extremality:
//!
//! * [`is_extremal`] compares the complex span of the compressed operators
//!   `F_ij = (+)_nu X_nu Tr_{H_nu}[P_nu T_ij P_nu] X_nu` with the full block
//!   algebra `(+)_nu B(Rng X_nu)`.
//! * [`perturbation_space`] parametrizes `Theta = (+)_nu I (x) X_nu A_nu X_nu`
//!   and solves the trace conditions directly on ambient matrices.
//! * [`minimal_support_check`] works in the Hermitian commutant of `G_0`,
//!   independent of the block form, and asks whether any nonzero direction
//!   supported in `Supp(Xi)` preserves the normalization.

use rand::Rng;

use crate::covariant::{block_form, support_threshold, Seed, SeedBlocks};
use crate::error::{Error, Result};
use crate::grouprep::{hermitian_commutant_basis, IsotypicDecomposition};
use crate::numerics::{
    c, cr, ensure_hermitian, hermitian_eig, hermitian_part, hermitian_to_real, hs_norm, identity,
    max_abs, rank_tol, real_nullspace, real_orthonormal_columns, real_to_hermitian,
    singular_values, trace_product, CMatrix, RMatrix,
};

/// Outcome of the positivity lemma for `Xi + t Theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaFeasibility {
    pub feasible: bool,
    /// `lambda_min_nonzero(Xi) / ||Theta||` when feasible.
    pub epsilon: Option<f64>,
    /// `||K Theta K|| + ||K Theta P||` with `K` the kernel projector.
    pub leakage: f64,
}

/// Decides `Supp(Theta) within Supp(Xi)` and, if so, a radius `eps` with
/// `Xi + t Theta >= 0` for `|t| <= eps`.
pub fn lemma_feasibility(xi: &CMatrix, theta: &CMatrix, tol: f64) -> Result<LemmaFeasibility> {
    if xi.shape() != theta.shape() {
        return Err(Error::ShapeMismatch {
            expected: xi.shape(),
            got: theta.shape(),
        });
    }
    ensure_hermitian(theta)?;
    let eig = hermitian_eig(xi)?;
    let threshold = tol * eig.max().max(1.0);
    let support: Vec<usize> = (0..eig.values.len()).filter(|&k| eig.values[k] > threshold).collect();
    let v = eig.columns(&support);
    let p = &v * v.adjoint();
    let k = identity(xi.nrows()) - &p;
    let leakage = max_abs(&(&k * theta * &k)) + max_abs(&(&k * theta * &p));
    let theta_norm = crate::numerics::hermitian_norm(&hermitian_part(theta))?;
    let feasible = leakage <= tol * theta_norm.max(1.0);
    let epsilon = if feasible && theta_norm > 0.0 && !support.is_empty() {
        Some(eig.values[support[0]] / theta_norm)
    } else if feasible {
        Some(f64::INFINITY)
    } else {
        None
    };
    Ok(LemmaFeasibility {
        feasible,
        epsilon,
        leakage,
    })
}

/// Real basis of all perturbations of a seed.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSpace {
    /// HS-orthonormal Hermitian perturbations.
    pub basis: Vec<CMatrix>,
    pub dimension: usize,
}

/// Evidence for or against extremality from the span test.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtremalityCertificate {
    pub extremal: bool,
    /// Rank of the HS Gram matrix of the compressed `F` family.
    pub gram_rank: usize,
    /// `sum_nu r_nu^2`.
    pub block_dim: usize,
    /// `F_ij^(mu)` as ambient multiplicity-space blocks, one list entry per `(mu, i, j)`.
    pub f_operators: Vec<FOperator>,
    /// Singular values of the stacked `F` family, descending.
    pub singular_values: Vec<f64>,
    /// A nonzero perturbation when not extremal.
    pub witness: Option<CMatrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FOperator {
    pub mu: usize,
    pub i: usize,
    pub j: usize,
    /// One `m_nu x m_nu` block per `G_0` class.
    pub blocks: Vec<CMatrix>,
}

/// `Tr_{H_nu}[P_nu Y P_nu]` for every `G_0` class.
fn partial_traces(y: &CMatrix, g0: &IsotypicDecomposition) -> Vec<CMatrix> {
    g0.classes.iter().map(|c| c.partial_trace(y)).collect()
}

/// `A -> (+)_nu I (x) V s a s V^dagger` for a block-diagonal `a` on `(+)_nu C^{r_nu}`.
fn lift_block(blocks: &SeedBlocks, g0: &IsotypicDecomposition, a: &[CMatrix]) -> CMatrix {
    let n = g0.dim;
    let mut out = CMatrix::zeros(n, n);
    for ((b, class), a_nu) in blocks.blocks.iter().zip(&g0.classes).zip(a) {
        if b.rank == 0 {
            continue;
        }
        let vs = CMatrix::from_fn(class.m, b.rank, |r, k| b.range[(r, k)] * cr(b.singular[k]));
        out += class.embed(&(&vs * a_nu * vs.adjoint()));
    }
    hermitian_part(&out)
}

/// Offsets of each block inside the flattened `(+)_nu C^{r_nu x r_nu}`.
fn block_offsets(blocks: &SeedBlocks) -> Vec<usize> {
    let mut acc = 0;
    blocks
        .blocks
        .iter()
        .map(|b| {
            let o = acc;
            acc += b.rank * b.rank;
            o
        })
        .collect()
}

pub fn is_extremal(seed: &Seed) -> Result<ExtremalityCertificate> {
    seed.ensure_valid()?;
    let blocks = block_form(seed)?;
    let space = seed.space();
    let (g, g0) = (&space.g_dec, &space.g0_dec);
    let block_dim = blocks.block_dim();
    let offsets = block_offsets(&blocks);

    let mut f_operators = Vec::new();
    let mut rows: Vec<Vec<crate::numerics::C64>> = Vec::new();
    for class in &g.classes {
        for i in 0..class.m {
            for j in 0..class.m {
                let traces = partial_traces(class.t(i, j), g0);
                let mut f_blocks = Vec::with_capacity(traces.len());
                let mut row = vec![cr(0.0); block_dim];
                for ((b, k), &off) in blocks.blocks.iter().zip(&traces).zip(&offsets) {
                    f_blocks.push(&b.x * k * &b.x);
                    if b.rank == 0 {
                        continue;
                    }
                    let compressed = b.range.adjoint() * k * &b.range;
                    for p in 0..b.rank {
                        for q in 0..b.rank {
                            row[off + p * b.rank + q] =
                                compressed[(p, q)] * cr(b.singular[p] * b.singular[q]);
                        }
                    }
                }
                rows.push(row);
                f_operators.push(FOperator {
                    mu: class.label,
                    i,
                    j,
                    blocks: f_blocks,
                });
            }
        }
    }
    let stack = CMatrix::from_fn(rows.len(), block_dim, |r, k| rows[r][k]);
    let tol = space.tol();
    let gram_rank = rank_tol(&stack, tol);
    let singular_values = singular_values(&stack);
    let extremal = gram_rank == block_dim;
    let witness = if extremal {
        None
    } else {
        Some(span_witness(&stack, &blocks, g0, tol)?)
    };
    Ok(ExtremalityCertificate {
        extremal,
        gram_rank,
        block_dim,
        f_operators,
        singular_values,
        witness,
    })
}

/// A Hermitian `a` orthogonal to every row of `stack`, lifted to a normalized `Theta`.
fn span_witness(
    stack: &CMatrix,
    blocks: &SeedBlocks,
    g0: &IsotypicDecomposition,
    tol: f64,
) -> Result<CMatrix> {
    let null = crate::numerics::nullspace(stack, tol);
    if null.ncols() == 0 {
        return Err(Error::Extremal);
    }
    // <a, f> = sum conj(a) f vanishes for the conjugate of a null vector.
    let flat: Vec<_> = null.column(0).iter().map(|z| z.conj()).collect();
    let offsets = block_offsets(blocks);
    let unflatten = |v: &[crate::numerics::C64]| -> Vec<CMatrix> {
        blocks
            .blocks
            .iter()
            .zip(&offsets)
            .map(|(b, &off)| CMatrix::from_fn(b.rank, b.rank, |p, q| v[off + p * b.rank + q]))
            .collect()
    };
    let a = unflatten(&flat);
    let re: Vec<CMatrix> = a.iter().map(hermitian_part).collect();
    let im: Vec<CMatrix> = a.iter().map(|m| hermitian_part(&(m * c(0.0, -1.0)))).collect();
    let norm = |v: &[CMatrix]| v.iter().map(|m| hs_norm(m).powi(2)).sum::<f64>();
    let chosen = if norm(&re) >= norm(&im) { re } else { im };
    let theta = lift_block(blocks, g0, &chosen);
    let scale = hs_norm(&theta);
    if scale == 0.0 {
        return Err(Error::ZeroPerturbation);
    }
    Ok(theta / cr(scale))
}

fn orthonormal_hermitian(cands: &[CMatrix], n: usize, tol: f64) -> Vec<CMatrix> {
    if cands.is_empty() {
        return vec![];
    }
    let cols = RMatrix::from_fn(n * n, cands.len(), |_, _| 0.0);
    let mut cols = cols;
    for (k, m) in cands.iter().enumerate() {
        cols.set_column(k, &nalgebra::DVector::from_vec(hermitian_to_real(m)));
    }
    let q = real_orthonormal_columns(&cols, tol);
    (0..q.ncols())
        .map(|k| real_to_hermitian(q.column(k).as_slice(), n))
        .collect()
}

/// Real-linear constraint rows `Re/Im Tr[Theta T_ij^(mu)]` for the given candidates.
fn trace_constraints(cands: &[CMatrix], g: &IsotypicDecomposition) -> RMatrix {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for class in &g.classes {
        for i in 0..class.m {
            for j in i..class.m {
                let t = class.t(i, j);
                let vals: Vec<_> = cands.iter().map(|th| trace_product(th, t)).collect();
                rows.push(vals.iter().map(|z| z.re).collect());
                if i != j {
                    rows.push(vals.iter().map(|z| z.im).collect());
                }
            }
        }
    }
    RMatrix::from_fn(rows.len(), cands.len(), |r, k| rows[r][k])
}

/// Combines `cands` with the nullspace coefficients of `constraints`.
fn combine(cands: &[CMatrix], null: &RMatrix) -> Vec<CMatrix> {
    (0..null.ncols())
        .map(|col| {
            cands
                .iter()
                .enumerate()
                .fold(CMatrix::zeros(cands[0].nrows(), cands[0].ncols()), |acc, (k, m)| {
                    acc + m * cr(null[(k, col)])
                })
        })
        .collect()
}

pub fn perturbation_space(seed: &Seed) -> Result<PerturbationSpace> {
    seed.ensure_valid()?;
    let blocks = block_form(seed)?;
    let space = seed.space();
    let (g, g0) = (&space.g_dec, &space.g0_dec);
    let n = seed.dim();
    let tol = space.tol();

    let mut cands = Vec::new();
    for (nu, b) in blocks.blocks.iter().enumerate() {
        let r = b.rank;
        for p in 0..r {
            for q in p..r {
                let mut variants = vec![];
                if p == q {
                    variants.push(crate::numerics::matrix_unit(r, p, p));
                } else {
                    let e = crate::numerics::matrix_unit(r, p, q);
                    let f = crate::numerics::matrix_unit(r, q, p);
                    variants.push(&e + &f);
                    variants.push(e * c(0.0, -1.0) + f * c(0.0, 1.0));
                }
                for a_nu in variants {
                    let mut a: Vec<CMatrix> = blocks
                        .blocks
                        .iter()
                        .map(|bb| CMatrix::zeros(bb.rank, bb.rank))
                        .collect();
                    a[nu] = a_nu;
                    let theta = lift_block(&blocks, g0, &a);
                    let s = hs_norm(&theta);
                    cands.push(theta / cr(s));
                }
            }
        }
    }
    if cands.is_empty() {
        return Ok(PerturbationSpace {
            basis: vec![],
            dimension: 0,
        });
    }
    let constraints = trace_constraints(&cands, g);
    let null = real_nullspace(&constraints, tol);
    let basis = if null.ncols() == 0 {
        vec![]
    } else {
        orthonormal_hermitian(&combine(&cands, &null), n, 1e-12)
    };
    Ok(PerturbationSpace {
        dimension: basis.len(),
        basis,
    })
}

/// True iff no seed other than `Xi` has support inside `Supp(Xi)`.
pub fn minimal_support_check(seed: &Seed) -> Result<bool> {
    Ok(supported_directions(seed)?.is_empty())
}

/// Hermitian `G_0`-invariant directions with support in `Supp(Xi)` and vanishing trace constraints.
fn supported_directions(seed: &Seed) -> Result<Vec<CMatrix>> {
    seed.ensure_valid()?;
    let space = seed.space();
    let n = seed.dim();
    let tol = space.tol();
    let basis = hermitian_commutant_basis(&space.g0_dec.model, tol)?;
    let eig = hermitian_eig(seed.xi())?;
    let threshold = support_threshold(seed.xi(), tol)?;
    let kernel: Vec<usize> = (0..n).filter(|&k| eig.values[k] <= threshold).collect();
    let kv = eig.columns(&kernel);

    let mut rows: Vec<Vec<f64>> = Vec::new();
    if !kernel.is_empty() {
        let images: Vec<CMatrix> = basis.iter().map(|b| kv.adjoint() * b).collect();
        for r in 0..kernel.len() {
            for col in 0..n {
                rows.push(images.iter().map(|m| m[(r, col)].re).collect());
                rows.push(images.iter().map(|m| m[(r, col)].im).collect());
            }
        }
    }
    let tc = trace_constraints(&basis, &space.g_dec);
    for r in 0..tc.nrows() {
        rows.push(tc.row(r).iter().copied().collect());
    }
    let a = RMatrix::from_fn(rows.len(), basis.len(), |r, k| rows[r][k]);
    let null = real_nullspace(&a, tol);
    if null.ncols() == 0 {
        return Ok(vec![]);
    }
    Ok(orthonormal_hermitian(&combine(&basis, &null), n, 1e-12))
}

/// Result of splitting a seed along a perturbation.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexSplit {
    pub zeta_plus: Seed,
    pub zeta_minus: Seed,
    /// `Xi = lambda zeta_+ + (1 - lambda) zeta_-`.
    pub lambda: f64,
    pub t_plus: f64,
    pub t_minus: f64,
}

const BISECTION_TOL: f64 = 1e-12;

/// Largest `t` with `Xi_s + t Theta_s >= 0` on the compressed support.
fn max_step(xi_s: &CMatrix, theta_s: &CMatrix, eps: f64) -> Result<f64> {
    let feasible = |t: f64| -> Result<bool> {
        Ok(hermitian_eig(&hermitian_part(&(xi_s + theta_s * cr(t))))?.min() >= 0.0)
    };
    let mut lo = eps;
    let mut hi = 2.0 * eps;
    let mut doublings = 0;
    while feasible(hi)? {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 200 {
            return Err(Error::NotAPerturbation(
                "Xi + t Theta stays positive for all t".into(),
            ));
        }
    }
    while hi - lo > BISECTION_TOL * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if feasible(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

pub fn convex_split(seed: &Seed, theta: &CMatrix) -> Result<ConvexSplit> {
    seed.ensure_valid()?;
    let space = seed.space();
    let tol = space.tol();
    if theta.shape() != seed.xi().shape() {
        return Err(Error::ShapeMismatch {
            expected: seed.xi().shape(),
            got: theta.shape(),
        });
    }
    ensure_hermitian(theta)?;
    let theta = hermitian_part(theta);
    let scale = max_abs(&theta);
    if scale <= tol {
        return Err(Error::ZeroPerturbation);
    }
    let trace_dev = crate::covariant::normalization_violation(&(seed.xi() + &theta), &space.g_dec);
    if trace_dev > 1e-8 * scale.max(1.0) {
        return Err(Error::NotAPerturbation(format!(
            "trace constraints violated by {trace_dev:e}"
        )));
    }
    let comm = space.g0_dec.model.commutation_violation(&theta);
    if comm > 1e-8 * scale.max(1.0) {
        return Err(Error::NotAPerturbation(format!(
            "does not commute with the stabilizer ({comm:e})"
        )));
    }
    let lemma = lemma_feasibility(seed.xi(), &theta, tol)?;
    let eps = match lemma.epsilon {
        Some(e) if lemma.feasible => e,
        _ => {
            return Err(Error::NotAPerturbation(format!(
                "support leaves Supp(Xi) (leakage {:e})",
                lemma.leakage
            )))
        }
    };
    let eig = hermitian_eig(seed.xi())?;
    let threshold = support_threshold(seed.xi(), tol)?;
    let support: Vec<usize> = (0..eig.values.len()).filter(|&k| eig.values[k] > threshold).collect();
    let v = eig.columns(&support);
    let xi_s = hermitian_part(&(v.adjoint() * seed.xi() * &v));
    let theta_s = hermitian_part(&(v.adjoint() * &theta * &v));
    let t_plus = max_step(&xi_s, &theta_s, eps)?;
    let t_minus = max_step(&xi_s, &(-&theta_s), eps)?;
    let zeta_plus = seed.with_xi(seed.xi() + &theta * cr(t_plus))?;
    let zeta_minus = seed.with_xi(seed.xi() - &theta * cr(t_minus))?;
    Ok(ConvexSplit {
        zeta_plus,
        zeta_minus,
        lambda: t_minus / (t_plus + t_minus),
        t_plus,
        t_minus,
    })
}

/// Splits along the witness of [`is_extremal`]; fails with [`Error::Extremal`] otherwise.
pub fn split_along_witness(seed: &Seed) -> Result<ConvexSplit> {
    let cert = is_extremal(seed)?;
    match cert.witness {
        Some(theta) => convex_split(seed, &theta),
        None => Err(Error::Extremal),
    }
}

/// Repeatedly splits along random perturbations, keeping the lower-rank side,
/// until an extremal seed is reached. Returns the path, starting at `seed`.
pub fn descend_to_extremal<R: Rng + ?Sized>(seed: &Seed, rng: &mut R) -> Result<Vec<Seed>> {
    let mut path = vec![seed.clone()];
    let limit = seed.dim() * seed.dim() + 1;
    for _ in 0..limit {
        let current = path.last().expect("path is nonempty").clone();
        let pert = perturbation_space(&current)?;
        if pert.dimension == 0 {
            return Ok(path);
        }
        let n = current.dim();
        let mut theta = CMatrix::zeros(n, n);
        for b in &pert.basis {
            theta += b * cr(rng.random_range(-1.0..1.0));
        }
        let split = convex_split(&current, &theta)?;
        let tol = current.space().tol();
        let rank = |s: &Seed| rank_tol(s.xi(), tol);
        let next = if rank(&split.zeta_minus) < rank(&split.zeta_plus) {
            split.zeta_minus
        } else {
            split.zeta_plus
        };
        path.push(clean_support(&next)?);
    }
    Err(Error::NonConvergence {
        iterations: limit,
        last_step: 0.0,
    })
}

/// Rebuilds a seed from its block form, dropping eigenvalues below the support threshold.
fn clean_support(seed: &Seed) -> Result<Seed> {
    let blocks = block_form(seed)?;
    let xi = crate::covariant::seed_from_blocks(&blocks, &seed.space().g0_dec)?;
    seed.with_xi(xi)
}

/// Rank lower bound and the budget `sum r_nu^2 <= sum m_mu^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankBoundReport {
    /// `max_mu ceil(m_mu / d_mu)`.
    pub lower_bound: usize,
    pub extremal_budget_lhs: usize,
    pub extremal_budget_rhs: usize,
    pub budget_ok: bool,
}

/// `max_mu ceil(m_mu / d_mu)`: no seed has smaller rank.
pub fn rank_lower_bound(g_dec: &IsotypicDecomposition) -> usize {
    g_dec
        .classes
        .iter()
        .map(|c| c.m.div_ceil(c.d))
        .max()
        .unwrap_or(0)
}

pub fn rank_bounds(seed: &Seed) -> Result<RankBoundReport> {
    let g = &seed.space().g_dec;
    let blocks = block_form(seed)?;
    let lhs = blocks.block_dim();
    let rhs = g.commutant_dim();
    Ok(RankBoundReport {
        lower_bound: rank_lower_bound(g),
        extremal_budget_lhs: lhs,
        extremal_budget_rhs: rhs,
        budget_ok: lhs <= rhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariant::SeedSpace;
    use crate::grouprep::GroupModel;
    use crate::numerics::{diag, from_real_rows, Tolerances};

    fn sigma_x() -> CMatrix {
        from_real_rows(2, 2, &[0.0, 1.0, 1.0, 0.0])
    }

    /// Nondegenerate U(1) with trivial stabilizer: seeds are correlation matrices.
    fn correlation_seed(xi: CMatrix) -> Seed {
        let n = xi.nrows();
        let charges: Vec<f64> = (0..n).map(|k| k as f64).collect();
        let rep = GroupModel::one_parameter(diag(&charges)).unwrap();
        let triv = GroupModel::trivial(n).unwrap();
        let space = SeedSpace::new(&rep, &triv, &Tolerances::default()).unwrap();
        Seed::new(xi, space).unwrap()
    }

    #[test]
    fn lemma_examples() {
        let l = lemma_feasibility(&identity(2), &(sigma_x() * cr(2.0)), 1e-9).unwrap();
        assert!(l.feasible);
        assert!((l.epsilon.unwrap() - 0.5).abs() < 1e-12);
        let l = lemma_feasibility(&diag(&[1.0, 0.0]), &sigma_x(), 1e-9).unwrap();
        assert!(!l.feasible);
        let l = lemma_feasibility(&diag(&[2.0, 1.0, 0.0]), &diag(&[1.0, -1.0, 0.0]), 1e-9).unwrap();
        assert!(l.feasible);
        assert!((l.epsilon.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_two_split_along_sigma_x() {
        let seed = correlation_seed(identity(2));
        let split = convex_split(&seed, &sigma_x()).unwrap();
        assert!((split.lambda - 0.5).abs() < 1e-12);
        let plus = from_real_rows(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let minus = from_real_rows(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        assert!(crate::numerics::max_abs_diff(split.zeta_plus.xi(), &plus) < 1e-11);
        assert!(crate::numerics::max_abs_diff(split.zeta_minus.xi(), &minus) < 1e-11);
    }

    #[test]
    fn identity_two_has_two_perturbations() {
        let seed = correlation_seed(identity(2));
        assert_eq!(perturbation_space(&seed).unwrap().dimension, 2);
        let cert = is_extremal(&seed).unwrap();
        assert!(!cert.extremal);
        assert_eq!((cert.gram_rank, cert.block_dim), (2, 4));
        assert!(!minimal_support_check(&seed).unwrap());
    }

    #[test]
    fn split_rejects_bad_directions() {
        let seed = correlation_seed(identity(2));
        assert_eq!(convex_split(&seed, &CMatrix::zeros(2, 2)), Err(Error::ZeroPerturbation));
        assert!(matches!(
            convex_split(&seed, &diag(&[1.0, -1.0])),
            Err(Error::NotAPerturbation(_))
        ));
    }

    #[test]
    fn rank_one_correlation_is_extremal() {
        let v = nalgebra::DVector::from_vec(vec![cr(1.0), c(0.0, 1.0), cr(-1.0)]);
        let seed = correlation_seed(&v * v.adjoint());
        let cert = is_extremal(&seed).unwrap();
        assert!(cert.extremal);
        assert!(cert.witness.is_none());
        assert_eq!(split_along_witness(&seed), Err(Error::Extremal));
    }
}
