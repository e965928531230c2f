//! Seeds of covariant POVMs: constraint checks, block form, densities.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grouprep::{
    isotypic_decompose_seeded, twirl, GroupModel, GroupPoint, IsotypicDecomposition,
    DEFAULT_RNG_SEED,
};
use crate::numerics::{
    cr, ensure_hermitian, ensure_square, hermitian_eig, hermitian_part, max_abs, max_abs_diff,
    trace, CMatrix, Tolerances,
};

/// The pair of decompositions a seed lives against: `R(G)` for the
/// normalization constraint and `R(G_0)` for the commutation constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedSpace {
    pub g_dec: IsotypicDecomposition,
    pub g0_dec: IsotypicDecomposition,
    pub tolerances: Tolerances,
}

impl SeedSpace {
    pub fn new(rep: &GroupModel, stabilizer: &GroupModel, tol: &Tolerances) -> Result<Arc<Self>> {
        Self::with_seed(rep, stabilizer, tol, DEFAULT_RNG_SEED)
    }

    pub fn with_seed(
        rep: &GroupModel,
        stabilizer: &GroupModel,
        tol: &Tolerances,
        rng_seed: u64,
    ) -> Result<Arc<Self>> {
        let g_dec = isotypic_decompose_seeded(rep, tol, rng_seed)?;
        let g0_dec = isotypic_decompose_seeded(stabilizer, tol, rng_seed)?;
        Self::from_decompositions(g_dec, g0_dec, *tol)
    }

    pub fn from_decompositions(
        g_dec: IsotypicDecomposition,
        g0_dec: IsotypicDecomposition,
        tolerances: Tolerances,
    ) -> Result<Arc<Self>> {
        if g_dec.dim != g0_dec.dim {
            return Err(Error::ShapeMismatch {
                expected: (g_dec.dim, g_dec.dim),
                got: (g0_dec.dim, g0_dec.dim),
            });
        }
        Ok(Arc::new(Self {
            g_dec,
            g0_dec,
            tolerances,
        }))
    }

    pub fn dim(&self) -> usize {
        self.g_dec.dim
    }

    pub fn tol(&self) -> f64 {
        self.tolerances.tol
    }
}

/// A candidate seed `Xi` together with the decompositions it is checked against.
#[derive(Debug, Clone, PartialEq)]
pub struct Seed {
    xi: CMatrix,
    space: Arc<SeedSpace>,
}

impl Seed {
    /// Wraps a Hermitian operator. Validity is reported by [`Seed::report`], not enforced.
    pub fn new(xi: CMatrix, space: Arc<SeedSpace>) -> Result<Self> {
        let n = ensure_square(&xi)?;
        if n != space.dim() {
            return Err(Error::ShapeMismatch {
                expected: (space.dim(), space.dim()),
                got: xi.shape(),
            });
        }
        ensure_hermitian(&xi)?;
        Ok(Self {
            xi: hermitian_part(&xi),
            space,
        })
    }

    /// Like [`Seed::new`] but fails unless the constraints hold at the space tolerance.
    pub fn new_valid(xi: CMatrix, space: Arc<SeedSpace>) -> Result<Self> {
        let seed = Self::new(xi, space)?;
        let report = seed.report()?;
        if !report.valid {
            return Err(Error::InvalidSeed(report.describe()));
        }
        Ok(seed)
    }

    pub fn xi(&self) -> &CMatrix {
        &self.xi
    }

    pub fn space(&self) -> &Arc<SeedSpace> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.xi.nrows()
    }

    pub fn report(&self) -> Result<ConstraintReport> {
        check_seed(
            &self.xi,
            &self.space.g_dec,
            &self.space.g0_dec,
            self.space.tol(),
        )
    }

    pub fn ensure_valid(&self) -> Result<ConstraintReport> {
        let report = self.report()?;
        if report.valid {
            Ok(report)
        } else {
            Err(Error::InvalidSeed(report.describe()))
        }
    }

    /// Same decompositions, different operator.
    pub fn with_xi(&self, xi: CMatrix) -> Result<Self> {
        Self::new(xi, self.space.clone())
    }
}

/// Violations of the three seed constraints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintReport {
    /// Smallest eigenvalue of `Xi`.
    pub psd_margin: f64,
    /// `max |Tr[T_ij Xi] - d delta_ij|` over all classes of `R(G)`.
    pub norm_violation: f64,
    /// Largest commutator with the elements or generators of `R(G_0)`.
    pub comm_violation: f64,
    pub valid: bool,
    pub tol: f64,
}

impl ConstraintReport {
    pub fn describe(&self) -> String {
        format!(
            "psd margin {:e}, normalization violation {:e}, commutation violation {:e} (tol {:e})",
            self.psd_margin, self.norm_violation, self.comm_violation, self.tol
        )
    }
}

fn ensure_dim(a: &CMatrix, dim: usize) -> Result<()> {
    if a.shape() != (dim, dim) {
        return Err(Error::ShapeMismatch {
            expected: (dim, dim),
            got: a.shape(),
        });
    }
    Ok(())
}

/// Largest deviation of `Tr[T_ij Xi]` from `d delta_ij`.
pub fn normalization_violation(xi: &CMatrix, g_dec: &IsotypicDecomposition) -> f64 {
    let mut worst: f64 = 0.0;
    for class in &g_dec.classes {
        let pt = class.partial_trace(xi);
        for i in 0..class.m {
            for j in 0..class.m {
                let target = if i == j { class.d as f64 } else { 0.0 };
                worst = worst.max((pt[(i, j)] - cr(target)).norm());
            }
        }
    }
    worst
}

pub fn check_seed(
    xi: &CMatrix,
    g_dec: &IsotypicDecomposition,
    g0_dec: &IsotypicDecomposition,
    tol: f64,
) -> Result<ConstraintReport> {
    ensure_dim(xi, g_dec.dim)?;
    ensure_dim(xi, g0_dec.dim)?;
    ensure_hermitian(xi)?;
    let psd_margin = hermitian_eig(xi)?.min();
    let norm_violation = normalization_violation(xi, g_dec);
    let comm_violation = g0_dec.model.commutation_violation(xi);
    let valid = psd_margin >= -tol && norm_violation <= tol && comm_violation <= tol;
    Ok(ConstraintReport {
        psd_margin,
        norm_violation,
        comm_violation,
        valid,
        tol,
    })
}

/// Multiplicity-space factor of one `G_0` class.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedBlock {
    pub label: usize,
    /// `d_nu`.
    pub d: usize,
    /// `X_nu`, Hermitian PSD, `m_nu x m_nu`.
    pub x: CMatrix,
    /// `r_nu = rank(X_nu)`.
    pub rank: usize,
    /// Orthonormal basis of `Rng(X_nu)` (columns).
    pub range: CMatrix,
    /// Eigenvalues of `X_nu` on `range`, matching its columns.
    pub singular: Vec<f64>,
}

/// `Xi = (+)_nu I_nu (x) X_nu^dagger X_nu`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedBlocks {
    pub blocks: Vec<SeedBlock>,
}

impl SeedBlocks {
    pub fn ranks(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.rank).collect()
    }

    /// `sum_nu r_nu^2`.
    pub fn block_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.rank * b.rank).sum()
    }

    pub fn nonzero(&self) -> impl Iterator<Item = &SeedBlock> {
        self.blocks.iter().filter(|b| b.rank > 0)
    }
}

/// Eigenvalue cutoff used for supports and block ranks: `tol * max(1, lambda_max)`.
pub fn support_threshold(xi: &CMatrix, tol: f64) -> Result<f64> {
    Ok(tol * hermitian_eig(xi)?.max().max(1.0))
}

pub fn block_form(seed: &Seed) -> Result<SeedBlocks> {
    let g0 = &seed.space.g0_dec;
    let xi = &seed.xi;
    let tol = seed.space.tol();
    let threshold = support_threshold(xi, tol)?;
    let mut blocks = Vec::with_capacity(g0.classes.len());
    let mut rebuilt = CMatrix::zeros(xi.nrows(), xi.ncols());
    for class in &g0.classes {
        let o = hermitian_part(&(class.partial_trace(xi) * cr(1.0 / class.d as f64)));
        let eig = hermitian_eig(&o)?;
        let keep: Vec<usize> = (0..class.m).filter(|&k| eig.values[k] > threshold).collect();
        let range = eig.columns(&keep);
        let singular: Vec<f64> = keep.iter().map(|&k| eig.values[k].sqrt()).collect();
        let x = hermitian_part(&eig.reconstruct_with(|v| if v > threshold { v.sqrt() } else { 0.0 }));
        rebuilt += class.embed(&(&x * &x));
        blocks.push(SeedBlock {
            label: class.label,
            d: class.d,
            x,
            rank: keep.len(),
            range,
            singular,
        });
    }
    let residual = max_abs_diff(&rebuilt, xi);
    let allowed = (10.0 * tol).max(1e-8) * max_abs(xi).max(1.0);
    if residual > allowed {
        return Err(Error::NotInCommutant(residual));
    }
    Ok(SeedBlocks { blocks })
}

pub fn seed_from_blocks(blocks: &SeedBlocks, g0_dec: &IsotypicDecomposition) -> Result<CMatrix> {
    if blocks.blocks.len() != g0_dec.classes.len() {
        return Err(Error::InvalidParameter(format!(
            "expected {} blocks, got {}",
            g0_dec.classes.len(),
            blocks.blocks.len()
        )));
    }
    let n = g0_dec.dim;
    let mut out = CMatrix::zeros(n, n);
    for (block, class) in blocks.blocks.iter().zip(&g0_dec.classes) {
        if block.x.shape() != (class.m, class.m) {
            return Err(Error::ShapeMismatch {
                expected: (class.m, class.m),
                got: block.x.shape(),
            });
        }
        out += class.embed(&(block.x.adjoint() * &block.x));
    }
    Ok(hermitian_part(&out))
}

/// `M(g) = U_g Xi U_g^dagger`.
pub fn povm_density(seed: &Seed, g: &GroupPoint) -> Result<CMatrix> {
    let u = seed.space.g_dec.model.unitary(g)?;
    Ok(hermitian_part(&(&u * &seed.xi * u.adjoint())))
}

/// Checks that `rho` is a density matrix on `C^dim`.
pub fn validate_density(rho: &CMatrix, dim: usize) -> Result<()> {
    ensure_dim(rho, dim)?;
    ensure_hermitian(rho)?;
    let tr = trace(rho);
    if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 {
        return Err(Error::InvalidState(format!("trace {} is not 1", tr.re)));
    }
    let min = hermitian_eig(rho)?.min();
    if min < -1e-10 {
        return Err(Error::InvalidState(format!(
            "negative eigenvalue {min:e}"
        )));
    }
    Ok(())
}

/// `Tr[rho U_g Xi U_g^dagger]`.
pub fn born_probability(rho: &CMatrix, seed: &Seed, g: &GroupPoint) -> Result<f64> {
    validate_density(rho, seed.dim())?;
    let m = povm_density(seed, g)?;
    Ok(crate::numerics::trace_product(rho, &m).re)
}

/// `Tr[rho Xi]`.
pub fn likelihood(rho: &CMatrix, seed: &Seed) -> Result<f64> {
    ensure_dim(rho, seed.dim())?;
    Ok(crate::numerics::trace_product(rho, &seed.xi).re)
}

/// Rescales a `G_0`-invariant PSD operator `Y` into a seed:
/// `F^{-1/2} Y F^{-1/2}` with `F` the `G`-twirl of `Y`, which must be invertible.
pub fn normalize_to_seed(y: &CMatrix, space: &Arc<SeedSpace>) -> Result<Seed> {
    ensure_dim(y, space.dim())?;
    ensure_hermitian(y)?;
    let f = hermitian_part(&twirl(y, &space.g_dec)?);
    let eig = hermitian_eig(&f)?;
    let floor = 1e-8 * eig.max().max(f64::MIN_POSITIVE);
    if eig.min() <= floor {
        return Err(Error::InvalidSeed(format!(
            "frame operator is singular (min eigenvalue {:e})",
            eig.min()
        )));
    }
    let inv_sqrt = eig.reconstruct_with(|v| 1.0 / v.sqrt());
    let xi = hermitian_part(&(&inv_sqrt * y * &inv_sqrt));
    Seed::new(xi, space.clone())
}
