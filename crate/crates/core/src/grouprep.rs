//! Group actions, commutants and isotypic (Wedderburn) decompositions.
//!
//! A [`GroupModel`] is one of three concrete descriptions of a unitary
//! representation: an explicit finite list of unitaries, a single Hermitian
//! generator `N` of `U(phi) = exp(i phi N)`, or a set of Hermitian Lie-algebra
//! generators. Continuous models never enumerate group elements: commuting with
//! every generator is the same as commuting with the connected group they
//! generate.
//!
//! [`isotypic_decompose`] splits the carrier space into irreducible blocks by
//! diagonalizing a random Hermitian element of the commutant, refines any block
//! whose restricted commutant is not scalar, and then groups equivalent blocks
//! by solving the intertwiner equation. Equivalent blocks are rotated so they
//! carry identical irrep matrices, which makes `T_ij = W_i W_j^dagger` the
//! invariant partial isometries connecting them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::{
    self, c, cluster_sorted, commutator, cr, ensure_hermitian, ensure_square, hermitian_eig,
    hermitian_part, hermitian_to_real, hs_norm, identity, kron, max_abs, max_abs_diff, nullspace,
    real_orthonormal_columns, real_to_hermitian, trace_product, CMatrix, RMatrix, Tolerances,
};

/// Fixed seed for the randomized decomposition.
pub const DEFAULT_RNG_SEED: u64 = 0xC0FFEE;

const UNITARY_TOL: f64 = 1e-10;
const INTEGER_SPECTRUM_TOL: f64 = 1e-8;

/// How a unitary representation is specified.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    /// The full list of group elements.
    Finite(Vec<CMatrix>),
    /// `U(phi) = exp(i phi N)`.
    OneParameter {
        generator: CMatrix,
        integer_spectrum: bool,
    },
    /// `U(c) = exp(i sum_k c_k X_k)` for Hermitian generators `X_k`.
    Lie(Vec<CMatrix>),
}

/// A unitary representation `R(G) = {U_g}` on `C^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupModel {
    dim: usize,
    kind: ModelKind,
}

/// A point of the group, in the coordinates natural to each model kind.
#[derive(Debug, Clone, PartialEq)]
pub enum GroupPoint {
    /// Index into the element list of a finite model.
    Element(usize),
    /// Angle for a one-parameter model.
    Angle(f64),
    /// Coefficients contracted with the generators of a Lie model.
    Lie(Vec<f64>),
}

impl GroupModel {
    pub fn finite(elements: Vec<CMatrix>) -> Result<Self> {
        let first = elements.first().ok_or(Error::EmptyModel)?;
        let dim = ensure_square(first)?;
        if dim == 0 {
            return Err(Error::EmptyModel);
        }
        for (k, u) in elements.iter().enumerate() {
            if u.shape() != (dim, dim) {
                return Err(Error::ShapeMismatch {
                    expected: (dim, dim),
                    got: u.shape(),
                });
            }
            let defect = max_abs_diff(&(u.adjoint() * u), &identity(dim));
            if defect > UNITARY_TOL {
                return Err(Error::InvalidModel(format!(
                    "element {k} is not unitary (defect {defect:e})"
                )));
            }
        }
        for (k, u) in elements.iter().enumerate() {
            let adj = u.adjoint();
            if !elements.iter().any(|v| max_abs_diff(v, &adj) <= 1e-8) {
                return Err(Error::InvalidModel(format!(
                    "element list is not closed under adjoint (element {k})"
                )));
            }
        }
        Ok(Self {
            dim,
            kind: ModelKind::Finite(elements),
        })
    }

    pub fn one_parameter(generator: CMatrix) -> Result<Self> {
        let dim = ensure_square(&generator)?;
        if dim == 0 {
            return Err(Error::EmptyModel);
        }
        ensure_hermitian(&generator)?;
        let generator = hermitian_part(&generator);
        let eig = hermitian_eig(&generator)?;
        let integer_spectrum = eig
            .values
            .iter()
            .all(|x| (x - x.round()).abs() <= INTEGER_SPECTRUM_TOL);
        Ok(Self {
            dim,
            kind: ModelKind::OneParameter {
                generator,
                integer_spectrum,
            },
        })
    }

    pub fn lie(dim: usize, generators: Vec<CMatrix>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::EmptyModel);
        }
        let mut clean = Vec::with_capacity(generators.len());
        for x in &generators {
            if x.shape() != (dim, dim) {
                return Err(Error::ShapeMismatch {
                    expected: (dim, dim),
                    got: x.shape(),
                });
            }
            ensure_hermitian(x)?;
            clean.push(hermitian_part(x));
        }
        Ok(Self {
            dim,
            kind: ModelKind::Lie(clean),
        })
    }

    /// The trivial group on `C^dim`.
    pub fn trivial(dim: usize) -> Result<Self> {
        Self::lie(dim, vec![])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            ModelKind::Finite(_) => "finite",
            ModelKind::OneParameter { .. } => "one_parameter",
            ModelKind::Lie(_) => "lie",
        }
    }

    /// The matrices an operator must commute with to lie in the commutant:
    /// elements for finite models, generators otherwise.
    pub fn constraint_matrices(&self) -> &[CMatrix] {
        match &self.kind {
            ModelKind::Finite(els) => els,
            ModelKind::OneParameter { generator, .. } => std::slice::from_ref(generator),
            ModelKind::Lie(gens) => gens,
        }
    }

    /// Period of `phi -> exp(i phi N)` for one-parameter models whose spectrum is
    /// integer (2 pi) or half-integer (4 pi).
    pub fn period(&self) -> Option<f64> {
        match &self.kind {
            ModelKind::OneParameter {
                generator,
                integer_spectrum,
            } => {
                if *integer_spectrum {
                    return Some(2.0 * std::f64::consts::PI);
                }
                let eig = hermitian_eig(generator).ok()?;
                let half = eig
                    .values
                    .iter()
                    .all(|x| (2.0 * x - (2.0 * x).round()).abs() <= INTEGER_SPECTRUM_TOL);
                half.then_some(4.0 * std::f64::consts::PI)
            }
            _ => None,
        }
    }

    /// The unitary `U_g` for a group point.
    pub fn unitary(&self, point: &GroupPoint) -> Result<CMatrix> {
        match (&self.kind, point) {
            (ModelKind::Finite(els), GroupPoint::Element(k)) => els.get(*k).cloned().ok_or_else(|| {
                Error::InvalidGroupPoint(format!("element index {k} out of range ({})", els.len()))
            }),
            (ModelKind::OneParameter { generator, .. }, GroupPoint::Angle(phi)) => {
                if !phi.is_finite() {
                    return Err(Error::InvalidGroupPoint(format!("angle {phi} is not finite")));
                }
                numerics::expi_hermitian(generator, *phi)
            }
            (ModelKind::Lie(gens), GroupPoint::Lie(coeffs)) => {
                if coeffs.len() != gens.len() {
                    return Err(Error::InvalidGroupPoint(format!(
                        "expected {} Lie coefficients, got {}",
                        gens.len(),
                        coeffs.len()
                    )));
                }
                if coeffs.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidGroupPoint("non-finite Lie coefficient".into()));
                }
                let mut h = CMatrix::zeros(self.dim, self.dim);
                for (x, &a) in gens.iter().zip(coeffs) {
                    h += x * cr(a);
                }
                numerics::expi_hermitian(&h, 1.0)
            }
            _ => Err(Error::InvalidGroupPoint(format!(
                "point {point:?} does not match a {} model",
                self.kind_name()
            ))),
        }
    }

    /// The identity point of the model.
    pub fn identity_point(&self) -> GroupPoint {
        match &self.kind {
            ModelKind::Finite(els) => {
                let id = identity(self.dim);
                let k = els
                    .iter()
                    .position(|u| max_abs_diff(u, &id) <= 1e-10)
                    .unwrap_or(0);
                GroupPoint::Element(k)
            }
            ModelKind::OneParameter { .. } => GroupPoint::Angle(0.0),
            ModelKind::Lie(gens) => GroupPoint::Lie(vec![0.0; gens.len()]),
        }
    }

    /// Largest violation of `[B, X] = 0` over the constraint matrices.
    pub fn commutation_violation(&self, b: &CMatrix) -> f64 {
        self.constraint_matrices()
            .iter()
            .map(|x| max_abs(&commutator(b, x)))
            .fold(0.0, f64::max)
    }

    fn all_diagonal(&self) -> bool {
        self.constraint_matrices().iter().all(|x| {
            let scale = max_abs(x).max(1.0);
            (0..self.dim).all(|i| (0..self.dim).all(|j| i == j || x[(i, j)].norm() <= 1e-14 * scale))
        })
    }
}

/// Linear map `B -> [B, X]` on column-major `vec(B)`.
fn commutator_map(x: &CMatrix) -> CMatrix {
    let n = x.nrows();
    let id = identity(n);
    kron(&x.transpose(), &id) - kron(&id, x)
}

fn commutant_of(mats: &[CMatrix], n: usize, tol: f64) -> Vec<CMatrix> {
    let n2 = n * n;
    if mats.is_empty() {
        return (0..n2)
            .map(|k| numerics::matrix_unit(n, k % n, k / n))
            .collect();
    }
    let mut stacked = CMatrix::zeros(n2 * mats.len(), n2);
    for (k, x) in mats.iter().enumerate() {
        stacked
            .view_mut((k * n2, 0), (n2, n2))
            .copy_from(&commutator_map(x));
    }
    let null = nullspace(&stacked, tol);
    (0..null.ncols())
        .map(|k| CMatrix::from_column_slice(n, n, null.column(k).as_slice()))
        .collect()
}

/// HS-orthonormal basis of the commutant `{B : [B, U] = 0}`.
pub fn commutant_basis(rep: &GroupModel) -> Result<Vec<CMatrix>> {
    commutant_basis_tol(rep, numerics::DEFAULT_TOL)
}

pub fn commutant_basis_tol(rep: &GroupModel, tol: f64) -> Result<Vec<CMatrix>> {
    if rep.dim == 0 {
        return Err(Error::EmptyModel);
    }
    Ok(commutant_of(rep.constraint_matrices(), rep.dim, tol))
}

/// HS-orthonormal basis of the Hermitian operators in the commutant; its
/// real dimension equals the complex dimension of the commutant.
pub fn hermitian_commutant_basis(rep: &GroupModel, tol: f64) -> Result<Vec<CMatrix>> {
    let n = rep.dim;
    let basis = commutant_basis_tol(rep, tol)?;
    let mut cols = RMatrix::zeros(n * n, 2 * basis.len());
    for (k, b) in basis.iter().enumerate() {
        let re = hermitian_part(b);
        let im = hermitian_part(&(b * c(0.0, -1.0)));
        cols.set_column(2 * k, &nalgebra::DVector::from_vec(hermitian_to_real(&re)));
        cols.set_column(2 * k + 1, &nalgebra::DVector::from_vec(hermitian_to_real(&im)));
    }
    let q = real_orthonormal_columns(&cols, tol.max(1e-12));
    Ok((0..q.ncols())
        .map(|k| real_to_hermitian(q.column(k).as_slice(), n))
        .collect())
}

/// One isotypic component: `m` equivalent copies of a `d`-dimensional irrep.
#[derive(Debug, Clone, PartialEq)]
pub struct IsotypicClass {
    pub label: usize,
    pub d: usize,
    pub m: usize,
    /// Isometries `W_i: C^d -> H`, one per copy, all carrying the same irrep matrices.
    pub blocks: Vec<CMatrix>,
    /// `intertwiners[i][j] = T_ij = W_i W_j^dagger`.
    pub intertwiners: Vec<Vec<CMatrix>>,
}

impl IsotypicClass {
    fn from_blocks(label: usize, blocks: Vec<CMatrix>) -> Self {
        let d = blocks[0].ncols();
        let m = blocks.len();
        let intertwiners = (0..m)
            .map(|i| (0..m).map(|j| &blocks[i] * blocks[j].adjoint()).collect())
            .collect();
        Self {
            label,
            d,
            m,
            blocks,
            intertwiners,
        }
    }

    pub fn t(&self, i: usize, j: usize) -> &CMatrix {
        &self.intertwiners[i][j]
    }

    /// Projector `P_mu` onto the isotypic subspace.
    pub fn projector(&self) -> CMatrix {
        let n = self.blocks[0].nrows();
        (0..self.m).fold(CMatrix::zeros(n, n), |acc, i| acc + &self.intertwiners[i][i])
    }

    /// `W_mu : H_mu (x) M_mu -> H`; column `a * m + i` is column `a` of block `i`.
    pub fn isometry(&self) -> CMatrix {
        let n = self.blocks[0].nrows();
        CMatrix::from_fn(n, self.d * self.m, |r, col| {
            let (a, i) = (col / self.m, col % self.m);
            self.blocks[i][(r, a)]
        })
    }

    /// `Tr_{H_mu}[P_mu Y P_mu]` as an `m x m` matrix on the multiplicity space.
    pub fn partial_trace(&self, y: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.m, self.m);
        for k in 0..self.m {
            let wk_y = self.blocks[k].adjoint() * y;
            for l in 0..self.m {
                out[(k, l)] = trace_product(&wk_y, &self.blocks[l]);
            }
        }
        out
    }

    /// `sum_ij O_ij T_ij`, i.e. `I_mu (x) O` placed in the ambient space.
    pub fn embed(&self, o: &CMatrix) -> CMatrix {
        let n = self.blocks[0].nrows();
        let mut out = CMatrix::zeros(n, n);
        for i in 0..self.m {
            for j in 0..self.m {
                let z = o[(i, j)];
                if z != cr(0.0) {
                    out += &self.intertwiners[i][j] * z;
                }
            }
        }
        out
    }

    fn first_support_index(&self) -> usize {
        let p = self.projector();
        (0..p.nrows())
            .find(|&i| p[(i, i)].re > 1e-6)
            .unwrap_or(usize::MAX)
    }
}

/// `H = (+)_mu H_mu (x) M_mu` for a given representation.
#[derive(Debug, Clone, PartialEq)]
pub struct IsotypicDecomposition {
    pub dim: usize,
    pub classes: Vec<IsotypicClass>,
    pub model: GroupModel,
    pub rng_seed: u64,
    pub tolerances: Tolerances,
}

impl IsotypicDecomposition {
    /// `sum_mu m_mu^2`, the complex dimension of the commutant.
    pub fn commutant_dim(&self) -> usize {
        self.classes.iter().map(|c| c.m * c.m).sum()
    }

    /// HS-orthonormal Hermitian basis of the commutant built from the intertwiners.
    pub fn hermitian_basis(&self) -> Vec<CMatrix> {
        let mut out = Vec::with_capacity(self.commutant_dim());
        for class in &self.classes {
            let norm = 1.0 / (class.d as f64).sqrt();
            let off = 1.0 / (2.0 * class.d as f64).sqrt();
            for i in 0..class.m {
                out.push(class.t(i, i) * cr(norm));
                for j in (i + 1)..class.m {
                    out.push((class.t(i, j) + class.t(j, i)) * cr(off));
                    out.push((class.t(i, j) - class.t(j, i)) * c(0.0, off));
                }
            }
        }
        out
    }

    fn check_dim(&self, o: &CMatrix) -> Result<()> {
        if o.shape() != (self.dim, self.dim) {
            return Err(Error::ShapeMismatch {
                expected: (self.dim, self.dim),
                got: o.shape(),
            });
        }
        Ok(())
    }
}

/// Decomposes `rep` into isotypic classes with intertwiners.
pub fn isotypic_decompose(rep: &GroupModel, tol: &Tolerances) -> Result<IsotypicDecomposition> {
    isotypic_decompose_seeded(rep, tol, DEFAULT_RNG_SEED)
}

pub fn isotypic_decompose_seeded(
    rep: &GroupModel,
    tol: &Tolerances,
    rng_seed: u64,
) -> Result<IsotypicDecomposition> {
    let n = rep.dim;
    if n == 0 {
        return Err(Error::EmptyModel);
    }
    let classes = if rep.all_diagonal() {
        diagonal_classes(rep)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let mut blocks = Vec::new();
        split_irreducible(
            rep.constraint_matrices(),
            identity(n),
            tol,
            &mut rng,
            &mut blocks,
        )?;
        group_equivalent(rep, blocks, tol)?
    };
    let dec = IsotypicDecomposition {
        dim: n,
        classes,
        model: rep.clone(),
        rng_seed,
        tolerances: *tol,
    };
    let total: usize = dec.classes.iter().map(|c| c.d * c.m).sum();
    if total != n {
        return Err(Error::Decomposition(format!(
            "blocks cover {total} of {n} dimensions"
        )));
    }
    Ok(dec)
}

/// Exact decomposition when every constraint matrix is diagonal: basis vectors
/// with identical diagonal signatures form one class of 1-dimensional irreps.
fn diagonal_classes(rep: &GroupModel) -> Vec<IsotypicClass> {
    let n = rep.dim;
    let mats = rep.constraint_matrices();
    let scale = mats.iter().map(max_abs).fold(1.0, f64::max);
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let same = |j: usize| {
            mats.iter()
                .all(|x| (x[(i, i)] - x[(j, j)]).norm() <= INTEGER_SPECTRUM_TOL * scale)
        };
        match groups.iter_mut().find(|g| same(g[0])) {
            Some(g) => g.push(i),
            None => groups.push(vec![i]),
        }
    }
    groups
        .into_iter()
        .enumerate()
        .map(|(label, idx)| {
            let blocks = idx
                .iter()
                .map(|&i| CMatrix::from_column_slice(n, 1, numerics::basis_vector(n, i).as_slice()))
                .collect();
            IsotypicClass::from_blocks(label, blocks)
        })
        .collect()
}

fn random_hermitian_in(basis: &[CMatrix], rng: &mut ChaCha8Rng) -> CMatrix {
    let n = basis[0].nrows();
    let mut h = CMatrix::zeros(n, n);
    for b in basis {
        h += b * c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    }
    hermitian_part(&h)
}

/// Recursively splits the invariant subspace spanned by the isometry `w`
/// (with restricted constraint matrices `mats`) into irreducible blocks.
fn split_irreducible(
    mats: &[CMatrix],
    w: CMatrix,
    tol: &Tolerances,
    rng: &mut ChaCha8Rng,
    out: &mut Vec<CMatrix>,
) -> Result<()> {
    let k = w.ncols();
    let comm = commutant_of(mats, k, tol.tol);
    if comm.len() <= 1 {
        out.push(w);
        return Ok(());
    }
    let mut last_gap = None;
    for _attempt in 0..4 {
        let h = random_hermitian_in(&comm, rng);
        let eig = hermitian_eig(&h)?;
        let range = eig.max() - eig.min();
        let threshold = tol.cluster_rel * range.max(f64::MIN_POSITIVE);
        let ambiguous = eig
            .values
            .windows(2)
            .map(|p| p[1] - p[0])
            .find(|&g| g > threshold && g <= 1e3 * threshold);
        let clusters = cluster_sorted(&eig.values, threshold);
        if let Some(gap) = ambiguous {
            last_gap = Some((gap, threshold));
            continue;
        }
        if clusters.len() < 2 {
            continue;
        }
        for cl in clusters {
            let idx: Vec<usize> = cl.collect();
            let v = eig.columns(&idx);
            let sub: Vec<CMatrix> = mats.iter().map(|x| v.adjoint() * x * &v).collect();
            split_irreducible(&sub, &w * &v, tol, rng, out)?;
        }
        return Ok(());
    }
    match last_gap {
        Some((gap, threshold)) => Err(Error::ClusterAmbiguity { gap, threshold }),
        None => Err(Error::Decomposition(
            "random commutant element failed to split a reducible block".into(),
        )),
    }
}

/// Solves `rho_a(X) S = S rho_b(X)` for all constraint matrices.
fn intertwiner_space(rep: &GroupModel, wa: &CMatrix, wb: &CMatrix, tol: f64) -> CMatrix {
    let d = wa.ncols();
    let id = identity(d);
    let mats = rep.constraint_matrices();
    if mats.is_empty() {
        return nullspace(&CMatrix::zeros(1, d * d), tol);
    }
    let mut stacked = CMatrix::zeros(d * d * mats.len(), d * d);
    for (k, x) in mats.iter().enumerate() {
        let ra = wa.adjoint() * x * wa;
        let rb = wb.adjoint() * x * wb;
        let map = kron(&id, &ra) - kron(&rb.transpose(), &id);
        stacked.view_mut((k * d * d, 0), (d * d, d * d)).copy_from(&map);
    }
    nullspace(&stacked, tol)
}

fn group_equivalent(
    rep: &GroupModel,
    blocks: Vec<CMatrix>,
    tol: &Tolerances,
) -> Result<Vec<IsotypicClass>> {
    let mut groups: Vec<Vec<CMatrix>> = Vec::new();
    'blocks: for wb in blocks {
        let d = wb.ncols();
        for g in groups.iter_mut() {
            let wa = &g[0];
            if wa.ncols() != d {
                continue;
            }
            let null = intertwiner_space(rep, wa, &wb, tol.tol);
            match null.ncols() {
                0 => continue,
                1 => {
                    let s = CMatrix::from_column_slice(d, d, null.column(0).as_slice());
                    let s = &s * cr((d as f64).sqrt() / hs_norm(&s));
                    let defect = max_abs_diff(&(&s * s.adjoint()), &identity(d));
                    if defect > 1e-6 {
                        return Err(Error::Decomposition(format!(
                            "intertwiner between equivalent blocks is not invertible (defect {defect:e})"
                        )));
                    }
                    g.push(&wb * s.adjoint());
                    continue 'blocks;
                }
                k => {
                    return Err(Error::Decomposition(format!(
                        "intertwiner space has dimension {k}; block is not irreducible"
                    )))
                }
            }
        }
        groups.push(vec![wb]);
    }
    let mut classes: Vec<IsotypicClass> = groups
        .into_iter()
        .map(|g| IsotypicClass::from_blocks(0, g))
        .collect();
    classes.sort_by_key(|c| (std::cmp::Reverse(c.d), c.first_support_index()));
    for (label, class) in classes.iter_mut().enumerate() {
        class.label = label;
    }
    Ok(classes)
}

/// Largest violations of the defining identities of a decomposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntertwinerReport {
    /// `U_g T U_g^dagger = T` (or `[X, T] = 0` for generators).
    pub invariance: f64,
    /// `T_ij T_jk = T_ik`.
    pub composition: f64,
    /// `T_ii` Hermitian idempotent with trace `d`.
    pub projector: f64,
    /// `sum_mu P_mu = I`.
    pub completeness: f64,
}

impl IntertwinerReport {
    pub fn max_violation(&self) -> f64 {
        self.invariance
            .max(self.composition)
            .max(self.projector)
            .max(self.completeness)
    }
}

pub fn intertwiner_check(dec: &IsotypicDecomposition, rep: &GroupModel) -> IntertwinerReport {
    let n = dec.dim;
    let mut report = IntertwinerReport {
        invariance: 0.0,
        composition: 0.0,
        projector: 0.0,
        completeness: 0.0,
    };
    let mut total = CMatrix::zeros(n, n);
    for class in &dec.classes {
        for i in 0..class.m {
            let tii = class.t(i, i);
            total += tii;
            let idem = max_abs_diff(&(tii * tii), tii);
            let herm = max_abs_diff(tii, &tii.adjoint());
            let tr = (numerics::trace(tii).re - class.d as f64).abs();
            report.projector = report.projector.max(idem).max(herm).max(tr);
            for j in 0..class.m {
                let t = class.t(i, j);
                let inv = match rep.kind() {
                    ModelKind::Finite(els) => els
                        .iter()
                        .map(|u| max_abs_diff(&(u * t * u.adjoint()), t))
                        .fold(0.0, f64::max),
                    _ => rep.commutation_violation(t),
                };
                report.invariance = report.invariance.max(inv);
                for k in 0..class.m {
                    let comp = max_abs_diff(&(t * class.t(j, k)), class.t(i, k));
                    report.composition = report.composition.max(comp);
                }
            }
        }
    }
    report.completeness = max_abs_diff(&total, &identity(n));
    report
}

/// Projection onto the commutant:
/// `sum_mu sum_ij Tr[T_ji O] / d_mu T_ij`, the Haar average of `U_g O U_g^dagger`.
pub fn twirl(o: &CMatrix, dec: &IsotypicDecomposition) -> Result<CMatrix> {
    dec.check_dim(o)?;
    let mut out = CMatrix::zeros(dec.dim, dec.dim);
    for class in &dec.classes {
        let block = class.partial_trace(o) * cr(1.0 / class.d as f64);
        out += class.embed(&block);
    }
    Ok(out)
}

/// `integral dg U_g Xi U_g^dagger`; equals the identity for a normalized seed.
pub fn frame_operator(xi: &CMatrix, dec: &IsotypicDecomposition) -> Result<CMatrix> {
    dec.check_dim(xi)?;
    ensure_hermitian(xi)?;
    Ok(hermitian_part(&twirl(xi, dec)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::diag;

    fn spin_half() -> GroupModel {
        let sx = numerics::from_real_rows(2, 2, &[0.0, 0.5, 0.5, 0.0]);
        let mut sy = CMatrix::zeros(2, 2);
        sy[(0, 1)] = c(0.0, -0.5);
        sy[(1, 0)] = c(0.0, 0.5);
        let sz = diag(&[0.5, -0.5]);
        GroupModel::lie(2, vec![sx, sy, sz]).unwrap()
    }

    #[test]
    fn commutant_sizes() {
        assert_eq!(commutant_basis(&spin_half()).unwrap().len(), 1);
        assert_eq!(commutant_basis(&GroupModel::trivial(3).unwrap()).unwrap().len(), 9);
        let n = GroupModel::one_parameter(diag(&[0.0, 0.0, 1.0])).unwrap();
        assert_eq!(commutant_basis(&n).unwrap().len(), 5);
    }

    #[test]
    fn commutant_basis_is_orthonormal_and_commuting() {
        let n = GroupModel::one_parameter(diag(&[0.0, 0.0, 1.0])).unwrap();
        let basis = commutant_basis(&n).unwrap();
        for (i, a) in basis.iter().enumerate() {
            assert!(n.commutation_violation(a) < 1e-12);
            for (j, b) in basis.iter().enumerate() {
                let g = numerics::hs_inner(a, b).unwrap();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((g - cr(expect)).norm() < 1e-12);
            }
        }
        assert_eq!(hermitian_commutant_basis(&n, 1e-9).unwrap().len(), 5);
    }

    #[test]
    fn empty_models_are_rejected() {
        assert_eq!(GroupModel::finite(vec![]), Err(Error::EmptyModel));
        assert_eq!(GroupModel::lie(0, vec![]), Err(Error::EmptyModel));
    }

    #[test]
    fn non_unitary_element_rejected() {
        let err = GroupModel::finite(vec![diag(&[1.0, 2.0])]).unwrap_err();
        assert!(matches!(err, Error::InvalidModel(_)));
    }

    #[test]
    fn integer_spectrum_flag() {
        let m = GroupModel::one_parameter(diag(&[0.0, 1.0, 2.0])).unwrap();
        assert!(matches!(m.kind(), ModelKind::OneParameter { integer_spectrum: true, .. }));
        assert_eq!(m.period(), Some(2.0 * std::f64::consts::PI));
        let m = GroupModel::one_parameter(diag(&[0.5, -0.5])).unwrap();
        assert!(matches!(m.kind(), ModelKind::OneParameter { integer_spectrum: false, .. }));
        assert_eq!(m.period(), Some(4.0 * std::f64::consts::PI));
        let m = GroupModel::one_parameter(diag(&[0.0, 0.3])).unwrap();
        assert_eq!(m.period(), None);
    }

    #[test]
    fn trivial_group_gives_matrix_units() {
        let rep = GroupModel::trivial(3).unwrap();
        let dec = isotypic_decompose(&rep, &Tolerances::default()).unwrap();
        assert_eq!(dec.classes.len(), 1);
        let class = &dec.classes[0];
        assert_eq!((class.d, class.m), (1, 3));
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(class.t(i, j), &numerics::matrix_unit(3, i, j));
            }
        }
        assert_eq!(intertwiner_check(&dec, &rep).max_violation(), 0.0);
    }

    #[test]
    fn spin_half_is_irreducible() {
        let rep = spin_half();
        let dec = isotypic_decompose(&rep, &Tolerances::default()).unwrap();
        assert_eq!(dec.classes.len(), 1);
        assert_eq!((dec.classes[0].d, dec.classes[0].m), (2, 1));
        assert!(intertwiner_check(&dec, &rep).max_violation() < 1e-8);
    }

    #[test]
    fn corrupted_intertwiner_is_detected() {
        let rep = GroupModel::one_parameter(diag(&[0.0, 0.0, 1.0])).unwrap();
        let mut dec = isotypic_decompose(&rep, &Tolerances::default()).unwrap();
        assert!(intertwiner_check(&dec, &rep).max_violation() < 1e-8);
        dec.classes[0].intertwiners[0][1][(1, 0)] += cr(1e-3);
        assert!(intertwiner_check(&dec, &rep).max_violation() >= 1e-4);
    }

    #[test]
    fn twirl_kills_phase_coherence() {
        let rep = GroupModel::one_parameter(diag(&[0.0, 1.0])).unwrap();
        let dec = isotypic_decompose(&rep, &Tolerances::default()).unwrap();
        let o = numerics::matrix_unit(2, 0, 1);
        assert!(max_abs(&twirl(&o, &dec).unwrap()) < 1e-14);
    }

    #[test]
    fn frame_operator_of_trivial_group_is_identity_map() {
        let dec = isotypic_decompose(&GroupModel::trivial(2).unwrap(), &Tolerances::default()).unwrap();
        let xi = diag(&[2.0, 0.0]);
        let f = frame_operator(&xi, &dec).unwrap();
        assert!(max_abs_diff(&f, &xi) < 1e-15);
        assert!(max_abs_diff(&frame_operator(&identity(2), &dec).unwrap(), &identity(2)) < 1e-15);
    }

    #[test]
    fn twirl_dimension_mismatch() {
        let dec = isotypic_decompose(&GroupModel::trivial(2).unwrap(), &Tolerances::default()).unwrap();
        assert!(matches!(twirl(&identity(3), &dec), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn unitary_point_kinds() {
        let rep = spin_half();
        assert!(rep.unitary(&GroupPoint::Angle(0.3)).is_err());
        assert!(rep.unitary(&GroupPoint::Lie(vec![0.0, 0.0])).is_err());
        let u = rep.unitary(&GroupPoint::Lie(vec![0.0, 0.0, 0.0])).unwrap();
        assert!(max_abs_diff(&u, &identity(2)) < 1e-14);
    }
}
