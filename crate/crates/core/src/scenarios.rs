//! Builders for the standard group settings: spin-j rotations, the tensor
//! square of SU(d), U(1) phase shifts and cyclic groups.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::covariant::{Seed, SeedSpace};
use crate::error::{Error, Result};
use crate::grouprep::{GroupModel, ModelKind};
use crate::numerics::{c, cr, diag, identity, kron, max_abs_diff, matrix_unit, CMatrix, Tolerances};

/// A representation `R(G)` together with the stabilizer `R(G_0)` of the reference state.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub rep: GroupModel,
    pub stabilizer: GroupModel,
    pub dim: usize,
    pub notes: String,
}

impl Scenario {
    pub fn new(name: impl Into<String>, rep: GroupModel, stabilizer: GroupModel) -> Result<Self> {
        if rep.dim() != stabilizer.dim() {
            return Err(Error::InvalidModel(format!(
                "representation has dimension {} but stabilizer has {}",
                rep.dim(),
                stabilizer.dim()
            )));
        }
        Ok(Self {
            name: name.into(),
            dim: rep.dim(),
            rep,
            stabilizer,
            notes: String::new(),
        })
    }

    fn with_notes(mut self, notes: impl Into<String>) -> Self {
        self.notes = notes.into();
        self
    }

    /// The same representation with a trivial stabilizer.
    pub fn with_trivial_stabilizer(&self) -> Result<Self> {
        let mut out = Self::new(
            format!("{}/trivial-stabilizer", self.name),
            self.rep.clone(),
            GroupModel::trivial(self.dim)?,
        )?;
        out.notes = self.notes.clone();
        Ok(out)
    }

    pub fn seed_space(&self, tol: &Tolerances) -> Result<Arc<SeedSpace>> {
        SeedSpace::new(&self.rep, &self.stabilizer, tol)
    }

    pub fn seed_space_seeded(&self, tol: &Tolerances, rng_seed: u64) -> Result<Arc<SeedSpace>> {
        SeedSpace::with_seed(&self.rep, &self.stabilizer, tol, rng_seed)
    }
}

/// Angular momentum matrices `(J_x, J_y, J_z)` in the `|j, m>` basis, `m` descending.
pub fn angular_momentum(j: f64) -> Result<[CMatrix; 3]> {
    let two_j = 2.0 * j;
    if !(two_j >= 0.0 && (two_j - two_j.round()).abs() < 1e-12) {
        return Err(Error::InvalidParameter(format!("spin {j} is not a nonnegative half-integer")));
    }
    let n = two_j.round() as usize + 1;
    let m = |k: usize| j - k as f64;
    let mut jp = CMatrix::zeros(n, n);
    for k in 1..n {
        jp[(k - 1, k)] = cr((j * (j + 1.0) - m(k) * (m(k) + 1.0)).sqrt());
    }
    let jm = jp.adjoint();
    let jx = (&jp + &jm) * cr(0.5);
    let jy = (&jp - &jm) * c(0.0, -0.5);
    let jz = diag(&(0..n).map(m).collect::<Vec<_>>());
    Ok([jx, jy, jz])
}

/// Rotations in the spin-`j` irrep; the stabilizer of `|j, j>` is the z-rotations.
pub fn spin_j(j: f64) -> Result<Scenario> {
    let [jx, jy, jz] = angular_momentum(j)?;
    let n = jz.nrows();
    let rep = GroupModel::lie(n, vec![jx, jy, jz.clone()])?;
    let stabilizer = GroupModel::one_parameter(jz)?;
    Ok(Scenario::new(format!("spin-{j}"), rep, stabilizer)?
        .with_notes("generators J_x, J_y, J_z; stabilizer exp(i phi J_z)"))
}

/// `|j, m><j, m|` scaled by `2j + 1`, with `m` given as the basis index (0 is `m = j`).
pub fn spin_highest_weight_seed(j: f64, index: usize) -> Result<CMatrix> {
    let n = (2.0 * j).round() as usize + 1;
    if index >= n {
        return Err(Error::InvalidParameter(format!("index {index} out of range for spin {j}")));
    }
    Ok(matrix_unit(n, index, index) * cr(n as f64))
}

/// Hermitian basis of `su(d)`: symmetric, antisymmetric and diagonal Gell-Mann matrices.
pub fn gell_mann(d: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(d * d - 1);
    for k in 0..d {
        for l in (k + 1)..d {
            out.push(matrix_unit(d, k, l) + matrix_unit(d, l, k));
            out.push(matrix_unit(d, k, l) * c(0.0, -1.0) + matrix_unit(d, l, k) * c(0.0, 1.0));
        }
    }
    for k in 1..d {
        let norm = (2.0 / (k * (k + 1)) as f64).sqrt();
        let mut v = vec![0.0; d];
        for x in v.iter_mut().take(k) {
            *x = norm;
        }
        v[k] = -(k as f64) * norm;
        out.push(diag(&v));
    }
    out
}

fn tensor_square_generator(x: &CMatrix) -> CMatrix {
    let id = identity(x.nrows());
    kron(x, &id) + kron(&id, x)
}

/// `U (x) U` for `U` in `SU(d)`; the reference state is `|e_1> (x) |e_1>` and its
/// stabilizer is `diag(det(V)^{-1}, V)` with `V` in `U(d-1)`, lifted to the tensor square.
pub fn su_d_tensor2(d: usize) -> Result<Scenario> {
    if d < 3 {
        return Err(Error::InvalidParameter(format!("su_d_tensor2 needs d >= 3, got {d}")));
    }
    let gens = gell_mann(d).iter().map(tensor_square_generator).collect();
    let rep = GroupModel::lie(d * d, gens)?;
    let mut stab = Vec::with_capacity((d - 1) * (d - 1));
    for x in full_hermitian_basis(d - 1) {
        let mut lifted = CMatrix::zeros(d, d);
        lifted[(0, 0)] = -crate::numerics::trace(&x);
        lifted.view_mut((1, 1), (d - 1, d - 1)).copy_from(&x);
        stab.push(tensor_square_generator(&lifted));
    }
    let stabilizer = GroupModel::lie(d * d, stab)?;
    Ok(Scenario::new(format!("su{d}-tensor2"), rep, stabilizer)?
        .with_notes("reference vector e_1; stabilizer u(d-1) with compensating phase"))
}

/// All `n^2` Hermitian matrix units (a basis of `u(n)`).
fn full_hermitian_basis(n: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(n * n);
    for k in 0..n {
        out.push(matrix_unit(n, k, k));
        for l in (k + 1)..n {
            out.push(matrix_unit(n, k, l) + matrix_unit(n, l, k));
            out.push(matrix_unit(n, k, l) * c(0.0, -1.0) + matrix_unit(n, l, k) * c(0.0, 1.0));
        }
    }
    out
}

/// Projector onto the antisymmetric subspace of `C^d (x) C^d`.
pub fn antisymmetric_projector(d: usize) -> CMatrix {
    let n = d * d;
    let mut swap = CMatrix::zeros(n, n);
    for a in 0..d {
        for b in 0..d {
            swap[(a * d + b, b * d + a)] = cr(1.0);
        }
    }
    (identity(n) - swap) * cr(0.5)
}

/// Projector onto `(e_1^perp)^{(x)2}`.
fn complement_square_projector(d: usize) -> CMatrix {
    let mut q = identity(d);
    q[(0, 0)] = cr(0.0);
    kron(&q, &q)
}

/// `d(d+1)/2 |psi><psi|^{(x)2} + d/(d-2) P_- Q P_-` with `|psi> = e_1`.
pub fn su_d_tensor2_seed(d: usize) -> Result<CMatrix> {
    if d < 3 {
        return Err(Error::InvalidParameter(format!("su_d_tensor2 needs d >= 3, got {d}")));
    }
    let (psi, anti) = su_d_tensor2_support_parts(d);
    let df = d as f64;
    Ok(psi * cr(df * (df + 1.0) / 2.0) + anti * cr(df / (df - 2.0)))
}

/// Projector onto the support of [`su_d_tensor2_seed`]; its rank is `1 + (d-1)(d-2)/2`.
pub fn su_d_tensor2_support_projector(d: usize) -> Result<CMatrix> {
    if d < 3 {
        return Err(Error::InvalidParameter(format!("su_d_tensor2 needs d >= 3, got {d}")));
    }
    let (psi, anti) = su_d_tensor2_support_parts(d);
    Ok(psi + anti)
}

fn su_d_tensor2_support_parts(d: usize) -> (CMatrix, CMatrix) {
    let psi = matrix_unit(d * d, 0, 0);
    let pm = antisymmetric_projector(d);
    let q = complement_square_projector(d);
    (psi, &pm * q * &pm)
}

/// Stability group options for the U(1) phase scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stabilizer {
    Trivial,
    /// The subgroup `Z_k` of phases `exp(2 pi i t / k)`.
    Cyclic(usize),
    Full,
}

/// `exp(i phi N)` with `N = (+)_n n I_{degeneracies[n]}`.
pub fn u1_phase(d: usize, degeneracies: &[usize], stabilizer: Stabilizer) -> Result<Scenario> {
    let total: usize = degeneracies.iter().sum();
    if total != d || d == 0 {
        return Err(Error::InvalidParameter(format!(
            "degeneracies {degeneracies:?} do not sum to d = {d}"
        )));
    }
    let charges: Vec<f64> = degeneracies
        .iter()
        .enumerate()
        .flat_map(|(n, &k)| std::iter::repeat_n(n as f64, k))
        .collect();
    let generator = diag(&charges);
    let rep = GroupModel::one_parameter(generator.clone())?;
    let stab = match stabilizer {
        Stabilizer::Trivial => GroupModel::trivial(d)?,
        Stabilizer::Full => GroupModel::one_parameter(generator)?,
        Stabilizer::Cyclic(k) => {
            let ch: Vec<i64> = charges.iter().map(|&x| x as i64).collect();
            cyclic_group(k, &ch)?
        }
    };
    Ok(Scenario::new(format!("u1-phase-{d}"), rep, stab)?
        .with_notes(format!("degeneracies {degeneracies:?}, stabilizer {stabilizer:?}")))
}

/// Finite group `{diag(omega^{c t}) : t = 0..n-1}` with `omega = exp(2 pi i / n)`.
pub fn cyclic_group(n: usize, charges: &[i64]) -> Result<GroupModel> {
    if n == 0 {
        return Err(Error::InvalidParameter("cyclic group order must be at least 1".into()));
    }
    if charges.is_empty() {
        return Err(Error::EmptyModel);
    }
    let elements = (0..n)
        .map(|t| {
            let phases: Vec<_> = charges
                .iter()
                .map(|&ch| {
                    let k = (ch * t as i64).rem_euclid(n as i64);
                    crate::numerics::C64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64)
                })
                .collect();
            CMatrix::from_diagonal(&nalgebra::DVector::from_vec(phases))
        })
        .collect();
    GroupModel::finite(elements)
}

/// The cyclic group `Z_n` acting by charges, with trivial stabilizer.
pub fn cyclic(n: usize, charges: &[i64]) -> Result<Scenario> {
    let rep = cyclic_group(n, charges)?;
    let stab = GroupModel::trivial(charges.len())?;
    Ok(Scenario::new(format!("cyclic-{n}"), rep, stab)?
        .with_notes(format!("charges {charges:?}")))
}

fn ensure_correlation_scenario(space: &SeedSpace) -> Result<()> {
    let is_unit_u1 = match space.g_dec.model.kind() {
        ModelKind::OneParameter { .. } => space.g_dec.classes.iter().all(|c| c.m == 1 && c.d == 1),
        _ => false,
    };
    let trivial_g0 = space.g0_dec.model.constraint_matrices().is_empty();
    if !is_unit_u1 || !trivial_g0 {
        return Err(Error::Unsupported(
            "correlation matrices need a nondegenerate U(1) representation with trivial stabilizer"
                .into(),
        ));
    }
    Ok(())
}

/// Maps a correlation matrix to a seed. The generator eigenbasis is the
/// computational basis, so the map is the identity on entries.
pub fn correlation_matrix_to_seed(cm: &CMatrix, space: &Arc<SeedSpace>) -> Result<Seed> {
    ensure_correlation_scenario(space)?;
    let seed = Seed::new(cm.clone(), space.clone())?;
    let diag_dev = (0..cm.nrows())
        .map(|i| (cm[(i, i)] - cr(1.0)).norm())
        .fold(0.0, f64::max);
    if diag_dev > 1e-8 {
        return Err(Error::InvalidSeed(format!(
            "correlation matrix diagonal deviates from 1 by {diag_dev:e}"
        )));
    }
    let margin = crate::numerics::hermitian_eig(cm)?.min();
    if margin < -space.tol() {
        return Err(Error::NotPsd(margin));
    }
    Ok(seed)
}

pub fn seed_to_correlation_matrix(seed: &Seed) -> Result<CMatrix> {
    ensure_correlation_scenario(seed.space())?;
    seed.ensure_valid()?;
    Ok(seed.xi().clone())
}

/// Checks that `a` and `b` agree entrywise within `tol`.
pub fn approx_eq(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
    a.shape() == b.shape() && max_abs_diff(a, b) <= tol
}
