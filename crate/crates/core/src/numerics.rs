//! Dense complex-matrix kernel.
//!
//! Everything downstream works with [`CMatrix`], a dynamically sized
//! `nalgebra` matrix of `Complex<f64>`. Eigen- and singular-value
//! decompositions come from `nalgebra`; this module adds the tolerance-aware
//! predicates (rank, nullspace, support) that the rest of the crate phrases
//! its decisions in.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;
pub type RMatrix = DMatrix<f64>;

/// Default tolerance for every "equals zero" or "is contained in" decision.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Relative threshold used to group eigenvalues into clusters.
pub const DEFAULT_CLUSTER_REL: f64 = 1e-7;

/// Relative asymmetry accepted on input to routines that require a Hermitian matrix.
pub const HERMITIAN_INPUT_TOL: f64 = 1e-10;

/// Tolerance configuration shared by the decision procedures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Rank, nullity and containment decisions.
    pub tol: f64,
    /// Eigenvalue clusters are split where the gap exceeds `cluster_rel` times the spectral range.
    pub cluster_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            cluster_rel: DEFAULT_CLUSTER_REL,
        }
    }
}

impl Tolerances {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn zeros(n: usize) -> CMatrix {
    CMatrix::zeros(n, n)
}

/// Builds a complex matrix from a real row-major slice.
pub fn from_real_rows(rows: usize, cols: usize, data: &[f64]) -> CMatrix {
    assert_eq!(data.len(), rows * cols, "entry count must equal rows*cols");
    CMatrix::from_fn(rows, cols, |i, j| cr(data[i * cols + j]))
}

/// Real diagonal matrix.
pub fn diag(values: &[f64]) -> CMatrix {
    let n = values.len();
    CMatrix::from_fn(n, n, |i, j| if i == j { cr(values[i]) } else { cr(0.0) })
}

/// |v><v| for a complex column vector.
pub fn outer(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

/// Standard basis vector e_k in C^n.
pub fn basis_vector(n: usize, k: usize) -> CVector {
    let mut v = CVector::zeros(n);
    v[k] = cr(1.0);
    v
}

/// Matrix unit |i><j| in C^{n x n}.
pub fn matrix_unit(n: usize, i: usize, j: usize) -> CMatrix {
    let mut m = zeros(n);
    m[(i, j)] = cr(1.0);
    m
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Frobenius (Hilbert-Schmidt) norm.
pub fn hs_norm(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace(a: &CMatrix) -> C64 {
    a.diagonal().iter().sum()
}

/// Hilbert-Schmidt inner product Tr[A^dagger B].
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> Result<C64> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            expected: a.shape(),
            got: b.shape(),
        });
    }
    Ok(a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum())
}

/// Tr[A B] without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = cr(0.0);
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn ensure_square(a: &CMatrix) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    Ok(a.nrows())
}

/// Max |A - A^dagger|.
pub fn hermitian_defect(a: &CMatrix) -> f64 {
    max_abs_diff(a, &a.adjoint())
}

/// (A + A^dagger) / 2, exactly Hermitian in floating point.
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).map(|z| z * 0.5)
}

pub fn ensure_hermitian(a: &CMatrix) -> Result<()> {
    ensure_square(a)?;
    let defect = hermitian_defect(a);
    if defect > HERMITIAN_INPUT_TOL * max_abs(a).max(1.0) {
        return Err(Error::NotHermitian(defect));
    }
    Ok(())
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Unitary; column k belongs to `values[k]`.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for k in 0..n {
            let s = f(self.values[k]);
            scaled.column_mut(k).scale_mut(s);
        }
        &scaled * self.vectors.adjoint()
    }

    /// Projector onto the span of eigenvectors whose eigenvalue satisfies `keep`.
    pub fn spectral_projector(&self, keep: impl Fn(f64) -> bool) -> CMatrix {
        self.reconstruct_with(|x| if keep(x) { 1.0 } else { 0.0 })
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Columns of `vectors` with index in `range`.
    pub fn columns(&self, idx: &[usize]) -> CMatrix {
        let n = self.vectors.nrows();
        CMatrix::from_fn(n, idx.len(), |i, j| self.vectors[(i, idx[j])])
    }
}

/// Hermitian eigendecomposition with eigenvalues sorted ascending.
pub fn hermitian_eig(a: &CMatrix) -> Result<HermitianEigen> {
    ensure_hermitian(a)?;
    let n = a.nrows();
    if n == 0 {
        return Ok(HermitianEigen {
            values: vec![],
            vectors: zeros(0),
        });
    }
    let eig = nalgebra::SymmetricEigen::new(hermitian_part(a));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(HermitianEigen { values, vectors })
}

/// Singular values, descending.
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    if a.is_empty() {
        return vec![];
    }
    let mut s: Vec<f64> = nalgebra::SVD::new(a.clone(), false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Number of singular values strictly above `tol * sigma_max`.
pub fn rank_tol(a: &CMatrix, tol: f64) -> usize {
    let s = singular_values(a);
    match s.first() {
        Some(&smax) if smax > 0.0 => s.iter().filter(|&&x| x > tol * smax).count(),
        _ => 0,
    }
}

pub fn real_rank_tol(a: &RMatrix, tol: f64) -> usize {
    if a.is_empty() {
        return 0;
    }
    let s = nalgebra::SVD::new(a.clone(), false, false).singular_values;
    let smax = s.iter().copied().fold(0.0, f64::max);
    if smax <= 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > tol * smax).count()
}

/// Orthonormal basis (columns) of the nullspace of `a`, with singular values
/// `<= tol * sigma_max` counted as zero.
pub fn nullspace(a: &CMatrix, tol: f64) -> CMatrix {
    let (rows, cols) = a.shape();
    if cols == 0 {
        return CMatrix::zeros(0, 0);
    }
    // SVD only returns min(rows, cols) right singular vectors; pad to square.
    let padded = if rows < cols {
        let mut p = CMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = nalgebra::SVD::new(padded, false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let null: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| smax == 0.0 || svd.singular_values[k] <= tol * smax)
        .collect();
    CMatrix::from_fn(cols, null.len(), |i, j| v_t[(null[j], i)].conj())
}

/// Real counterpart of [`nullspace`].
pub fn real_nullspace(a: &RMatrix, tol: f64) -> RMatrix {
    let (rows, cols) = a.shape();
    if cols == 0 {
        return RMatrix::zeros(0, 0);
    }
    let padded = if rows < cols {
        let mut p = RMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = nalgebra::SVD::new(padded, false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let null: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| smax == 0.0 || svd.singular_values[k] <= tol * smax)
        .collect();
    RMatrix::from_fn(cols, null.len(), |i, j| v_t[(null[j], i)])
}

/// Orthonormalizes the columns of `a` over the reals, dropping dependent ones.
pub fn real_orthonormal_columns(a: &RMatrix, tol: f64) -> RMatrix {
    if a.ncols() == 0 {
        return a.clone();
    }
    let svd = nalgebra::SVD::new(a.clone(), true, false);
    let u = svd.u.expect("requested left singular vectors");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| smax > 0.0 && svd.singular_values[k] > tol * smax)
        .collect();
    RMatrix::from_fn(a.nrows(), keep.len(), |i, j| u[(i, keep[j])])
}

/// Hilbert-Schmidt-nearest positive semidefinite matrix (eigenvalue clipping).
pub fn psd_project(a: &CMatrix) -> Result<CMatrix> {
    let eig = hermitian_eig(a)?;
    Ok(hermitian_part(&eig.reconstruct_with(|x| x.max(0.0))))
}

/// PSD square root. Eigenvalues in [-1e-10, 0) are treated as zero.
pub fn hermitian_sqrt(a: &CMatrix) -> Result<CMatrix> {
    let eig = hermitian_eig(a)?;
    let min = eig.min();
    if min < -1e-10 {
        return Err(Error::NotPsd(min));
    }
    Ok(hermitian_part(&eig.reconstruct_with(|x| x.max(0.0).sqrt())))
}

/// Spectral norm of a Hermitian matrix (largest |eigenvalue|).
pub fn hermitian_norm(a: &CMatrix) -> Result<f64> {
    let eig = hermitian_eig(a)?;
    Ok(eig.min().abs().max(eig.max().abs()))
}

/// exp(i t H) for Hermitian H.
pub fn expi_hermitian(h: &CMatrix, t: f64) -> Result<CMatrix> {
    let eig = hermitian_eig(h)?;
    let n = eig.values.len();
    let mut scaled = eig.vectors.clone();
    for k in 0..n {
        let phase = C64::from_polar(1.0, t * eig.values[k]);
        for i in 0..n {
            scaled[(i, k)] *= phase;
        }
    }
    Ok(&scaled * eig.vectors.adjoint())
}

/// Orthogonal projector onto the support (range) of a Hermitian PSD matrix,
/// keeping eigenvalues above `tol * max(1, lambda_max)`.
pub fn support_projector(a: &CMatrix, tol: f64) -> Result<(CMatrix, usize)> {
    let eig = hermitian_eig(a)?;
    let thr = tol * eig.max().abs().max(1.0);
    let idx: Vec<usize> = (0..eig.values.len())
        .filter(|&k| eig.values[k] > thr)
        .collect();
    let v = eig.columns(&idx);
    Ok((hermitian_part(&(&v * v.adjoint())), idx.len()))
}

/// Groups sorted values into clusters separated by gaps larger than `threshold`.
/// Returns index ranges into `values`.
pub fn cluster_sorted(values: &[f64], threshold: f64) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for k in 1..=values.len() {
        if k == values.len() || values[k] - values[k - 1] > threshold {
            if k > start {
                out.push(start..k);
            }
            start = k;
        }
    }
    out
}

/// Real coordinates of a Hermitian matrix against the standard orthonormal
/// basis {E_kk, (E_kl+E_lk)/sqrt2, i(E_kl-E_lk)/sqrt2}; length n^2.
pub fn hermitian_to_real(a: &CMatrix) -> Vec<f64> {
    let n = a.nrows();
    let s2 = std::f64::consts::SQRT_2;
    let mut out = Vec::with_capacity(n * n);
    for k in 0..n {
        out.push(a[(k, k)].re);
    }
    for k in 0..n {
        for l in (k + 1)..n {
            out.push(s2 * a[(k, l)].re);
            out.push(-s2 * a[(k, l)].im);
        }
    }
    out
}

/// Inverse of [`hermitian_to_real`].
pub fn real_to_hermitian(x: &[f64], n: usize) -> CMatrix {
    assert_eq!(x.len(), n * n);
    let s2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut a = zeros(n);
    for k in 0..n {
        a[(k, k)] = cr(x[k]);
    }
    let mut p = n;
    for k in 0..n {
        for l in (k + 1)..n {
            let z = c(s2 * x[p], -s2 * x[p + 1]);
            a[(k, l)] = z;
            a[(l, k)] = z.conj();
            p += 2;
        }
    }
    a
}
