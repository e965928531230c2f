//! Likelihood maximization over the seed set, the averaging map `M`, and
//! the uniqueness/stability certificates for randomized projector states.
//!
//! The optimizer works in real coordinates of the `G_0` commutant: a seed is
//! `(+)_nu I_nu (x) O_nu`, stored as `sqrt(d_nu)`-scaled real coordinates of
//! each Hermitian `O_nu`, so the Euclidean metric on coordinates is the
//! Hilbert-Schmidt metric on operators. Commutation with `G_0` holds by
//! construction; positivity is blockwise eigenvalue clipping and the
//! normalization is an affine subspace.

use std::sync::Arc;

use nalgebra::DVector;

use crate::covariant::{likelihood, validate_density, Seed, SeedSpace};
use crate::error::{Error, Result};
use crate::extremality::is_extremal;
use crate::grouprep::{twirl, GroupPoint, IsotypicDecomposition, ModelKind};
use crate::numerics::{
    cluster_sorted, cr, hermitian_eig, hermitian_part, hermitian_to_real, hs_norm, identity,
    max_abs_diff, real_to_hermitian, support_projector, trace_product, CMatrix, RMatrix,
};

/// Nodes of the trapezoidal rule over one period of a one-parameter group.
pub const QUADRATURE_NODES: usize = 4096;

/// Coordinates on the `G_0`-invariant Hermitian operators.
#[derive(Debug, Clone)]
struct BlockCoords {
    /// `(class index, m, d, offset)`.
    layout: Vec<(usize, usize, usize, usize)>,
    len: usize,
}

impl BlockCoords {
    fn new(g0: &IsotypicDecomposition) -> Self {
        let mut off = 0;
        let layout = g0
            .classes
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let entry = (k, c.m, c.d, off);
                off += c.m * c.m;
                entry
            })
            .collect();
        Self { layout, len: off }
    }

    fn blocks(&self, x: &DVector<f64>) -> Vec<CMatrix> {
        self.layout
            .iter()
            .map(|&(_, m, d, off)| {
                let s = 1.0 / (d as f64).sqrt();
                let v: Vec<f64> = x.rows(off, m * m).iter().map(|a| a * s).collect();
                real_to_hermitian(&v, m)
            })
            .collect()
    }

    fn pack_blocks(&self, blocks: &[CMatrix]) -> DVector<f64> {
        let mut x = DVector::zeros(self.len);
        for (&(_, m, d, off), o) in self.layout.iter().zip(blocks) {
            let s = (d as f64).sqrt();
            for (k, v) in hermitian_to_real(o).into_iter().enumerate().take(m * m) {
                x[off + k] = v * s;
            }
        }
        x
    }

    fn operator(&self, x: &DVector<f64>, g0: &IsotypicDecomposition) -> CMatrix {
        let mut out = CMatrix::zeros(g0.dim, g0.dim);
        for (&(k, ..), o) in self.layout.iter().zip(self.blocks(x)) {
            out += g0.classes[k].embed(&o);
        }
        hermitian_part(&out)
    }

    fn coords_of(&self, a: &CMatrix, g0: &IsotypicDecomposition) -> DVector<f64> {
        let blocks: Vec<CMatrix> = self
            .layout
            .iter()
            .map(|&(k, _, d, _)| {
                hermitian_part(&(g0.classes[k].partial_trace(a) * cr(1.0 / d as f64)))
            })
            .collect();
        self.pack_blocks(&blocks)
    }

    fn psd_project(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let blocks = self
            .blocks(x)
            .iter()
            .map(|o| Ok(hermitian_part(&hermitian_eig(o)?.reconstruct_with(|v| v.max(0.0)))))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.pack_blocks(&blocks))
    }

    fn min_eigenvalue(&self, x: &DVector<f64>) -> Result<f64> {
        let mut min = f64::INFINITY;
        for o in self.blocks(x) {
            min = min.min(hermitian_eig(&o)?.min());
        }
        Ok(min)
    }
}

/// Affine set `{x : A x = b}` with a precomputed pseudo-inverse.
#[derive(Debug, Clone)]
struct Affine {
    a: RMatrix,
    a_pinv: RMatrix,
    b: DVector<f64>,
}

impl Affine {
    fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        x - &self.a_pinv * (&self.a * x - &self.b)
    }

    fn residual(&self, x: &DVector<f64>) -> f64 {
        (&self.a * x - &self.b).amax()
    }
}

/// Real rows `Re/Im Tr[T_ij Xi(x)] = d delta_ij` plus optional extra rows.
fn normalization_rows(
    coords: &BlockCoords,
    space: &SeedSpace,
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let g0 = &space.g0_dec;
    let units: Vec<CMatrix> = (0..coords.len)
        .map(|k| {
            let mut e = DVector::zeros(coords.len);
            e[k] = 1.0;
            coords.operator(&e, g0)
        })
        .collect();
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for class in &space.g_dec.classes {
        for i in 0..class.m {
            for j in i..class.m {
                let t = class.t(i, j);
                let vals: Vec<_> = units.iter().map(|u| trace_product(t, u)).collect();
                rows.push(vals.iter().map(|z| z.re).collect());
                rhs.push(if i == j { class.d as f64 } else { 0.0 });
                if i != j {
                    rows.push(vals.iter().map(|z| z.im).collect());
                    rhs.push(0.0);
                }
            }
        }
    }
    (rows, rhs)
}

fn affine_from_rows(rows: &[Vec<f64>], rhs: &[f64], cols: usize) -> Result<Affine> {
    let a = RMatrix::from_fn(rows.len(), cols, |r, k| rows[r][k]);
    let a_pinv = a
        .clone()
        .pseudo_inverse(1e-12 * a.amax().max(1.0))
        .map_err(|e| Error::Decomposition(e.to_string()))?;
    Ok(Affine {
        a,
        a_pinv,
        b: DVector::from_vec(rhs.to_vec()),
    })
}

/// Options for [`optimize_likelihood`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeOptions {
    pub max_iter: usize,
    /// Stop once an accepted step moves less than this (HS norm).
    pub step_tol: f64,
    /// Iteration cap for each projection onto the seed set.
    pub max_projection_iter: usize,
    pub projection_tol: f64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            max_iter: 10_000,
            step_tol: 1e-9,
            max_projection_iter: 20_000,
            projection_tol: 1e-14,
        }
    }
}

/// The closed-form optimum for `rho = (1 - alpha) P / r + alpha sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedForm {
    /// The unique seed supported in `Supp(P)`.
    pub xi: CMatrix,
    /// `(1 - alpha) dim / r`.
    pub value: f64,
    pub rank: usize,
    pub alpha: f64,
    /// Largest eigenvalue of `sigma`, when `alpha > 0`.
    pub q_bar: Option<f64>,
    /// Iterative optimum within `1e-8` in value and `1e-6` in HS norm.
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub xi_star: Seed,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub last_step: f64,
    /// Objective after each accepted iteration, starting from the identity seed.
    pub history: Vec<f64>,
    pub unique: Option<bool>,
    pub stability_alpha_max: Option<f64>,
    pub closed_form: Option<ClosedForm>,
}

/// Projection onto `{PSD} cap {affine}` by Dykstra alternation.
fn project_seed_set(
    coords: &BlockCoords,
    affine: &Affine,
    z: &DVector<f64>,
    opts: &OptimizeOptions,
) -> Result<DVector<f64>> {
    let mut x = affine.project(z);
    let mut p = DVector::zeros(z.len());
    for _ in 0..opts.max_projection_iter {
        let y = coords.psd_project(&(&x + &p))?;
        p = &x + &p - &y;
        let next = affine.project(&y);
        let change = (&next - &x).norm();
        x = next;
        if change <= opts.projection_tol * x.norm().max(1.0) {
            break;
        }
    }
    Ok(x)
}

/// Maximizes `Tr[rho Xi]` over valid seeds by projected gradient ascent.
pub fn optimize_likelihood(
    rho: &CMatrix,
    space: &Arc<SeedSpace>,
    opts: &OptimizeOptions,
) -> Result<OptimizationResult> {
    validate_density(rho, space.dim())?;
    let g0 = &space.g0_dec;
    let coords = BlockCoords::new(g0);
    let (rows, rhs) = normalization_rows(&coords, space);
    let affine = affine_from_rows(&rows, &rhs, coords.len)?;

    let mut x = coords.coords_of(&identity(space.dim()), g0);
    if affine.residual(&x) > 1e-9 {
        return Err(Error::InvalidModel(
            "the identity is not a seed: stabilizer and representation are inconsistent".into(),
        ));
    }
    let grad = coords.coords_of(&hermitian_part(rho), g0);
    let mut eta = 1.0 / hermitian_eig(rho)?.max();
    let mut value = grad.dot(&x);
    let mut history = vec![value];
    let mut converged = false;
    let mut last_step = f64::INFINITY;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let candidate = project_seed_set(&coords, &affine, &(&x + &grad * eta), opts)?;
        let cand_value = grad.dot(&candidate);
        if cand_value < value - 1e-12 {
            eta *= 0.5;
            continue;
        }
        last_step = (&candidate - &x).norm();
        x = candidate;
        value = cand_value;
        history.push(value);
        if last_step < opts.step_tol {
            converged = true;
            break;
        }
    }
    let xi = coords.operator(&x, g0);
    let xi_star = Seed::new(xi, space.clone())?;
    let value = likelihood(rho, &xi_star)?;

    let closed_form = closed_form_optimum(rho, space, &coords)?.map(|mut cf| {
        cf.agrees = (cf.value - value).abs() <= 1e-8
            && hs_norm(&(&cf.xi - xi_star.xi())) <= 1e-6;
        cf
    });
    let stability_alpha_max = closed_form.as_ref().and_then(|cf| {
        cf.q_bar.map(|q| 1.0 / (1.0 + cf.rank as f64 * q))
    });
    let mut result = OptimizationResult {
        xi_star,
        value,
        iterations,
        converged,
        last_step,
        history,
        unique: None,
        stability_alpha_max,
        closed_form,
    };
    if converged {
        result.unique = Some(unique_optimum_certificate(&result, rho)?);
    }
    Ok(result)
}

/// Top eigenprojector of `rho` with its rank and eigenvalue, plus the next eigenvalue.
fn top_eigenspace(rho: &CMatrix) -> Result<(CMatrix, usize, f64, Option<f64>)> {
    let eig = hermitian_eig(rho)?;
    let range = (eig.max() - eig.min()).max(eig.max().abs()).max(f64::MIN_POSITIVE);
    let clusters = cluster_sorted(&eig.values, 1e-9 * range);
    let top = clusters.last().expect("nonempty spectrum").clone();
    let idx: Vec<usize> = top.clone().collect();
    let v = eig.columns(&idx);
    let lambda = idx.iter().map(|&k| eig.values[k]).sum::<f64>() / idx.len() as f64;
    let next = (top.start > 0).then(|| eig.values[top.start - 1]);
    Ok((hermitian_part(&(&v * v.adjoint())), idx.len(), lambda, next))
}

/// The unique seed supported in the top eigenspace of `rho`, if there is one.
fn closed_form_optimum(
    rho: &CMatrix,
    space: &Arc<SeedSpace>,
    coords: &BlockCoords,
) -> Result<Option<ClosedForm>> {
    let g0 = &space.g0_dec;
    let n = space.dim();
    let (p, r, lambda, next) = top_eigenspace(rho)?;
    let kernel = identity(n) - &p;
    let (mut rows, mut rhs) = normalization_rows(coords, space);
    let units: Vec<CMatrix> = (0..coords.len)
        .map(|k| {
            let mut e = DVector::zeros(coords.len);
            e[k] = 1.0;
            &kernel * coords.operator(&e, g0)
        })
        .collect();
    for i in 0..n {
        for j in 0..n {
            rows.push(units.iter().map(|u| u[(i, j)].re).collect());
            rhs.push(0.0);
            rows.push(units.iter().map(|u| u[(i, j)].im).collect());
            rhs.push(0.0);
        }
    }
    let affine = affine_from_rows(&rows, &rhs, coords.len)?;
    let x = &affine.a_pinv * &affine.b;
    if affine.residual(&x) > 1e-9 {
        return Ok(None);
    }
    let nullity = coords.len - crate::numerics::real_rank_tol(&affine.a, 1e-9);
    if nullity > 0 || coords.min_eigenvalue(&x)? < -1e-9 {
        return Ok(None);
    }
    let alpha = (1.0 - r as f64 * lambda).max(0.0);
    let q_bar = match next {
        Some(q) if alpha > 1e-12 => Some(q / alpha),
        _ => None,
    };
    Ok(Some(ClosedForm {
        xi: coords.operator(&x, g0),
        value: (1.0 - alpha) * n as f64 / r as f64,
        rank: r,
        alpha,
        q_bar,
        agrees: false,
    }))
}

/// True only when the randomized-projector hypotheses hold: the top
/// eigenprojector of `rho` is `Supp(Xi*)`, `alpha < 1 / (1 + r q_bar)`, and
/// `Xi*` is extremal.
pub fn unique_optimum_certificate(result: &OptimizationResult, rho: &CMatrix) -> Result<bool> {
    if !result.converged {
        return Ok(false);
    }
    let seed = &result.xi_star;
    let tol = seed.space().tol();
    let (p, r, lambda, next) = top_eigenspace(rho)?;
    let (supp, rank) = support_projector(seed.xi(), tol.max(1e-8))?;
    if rank != r || max_abs_diff(&supp, &p) > 1e-6 {
        return Ok(false);
    }
    let alpha = (1.0 - r as f64 * lambda).max(0.0);
    if let Some(q) = next {
        if alpha > 1e-12 {
            let q_bar = q / alpha;
            if alpha >= 1.0 / (1.0 + r as f64 * q_bar) {
                return Ok(false);
            }
        }
    }
    match is_extremal(seed) {
        Ok(cert) => Ok(cert.extremal),
        Err(Error::InvalidSeed(_)) => Ok(false),
        Err(e) => Err(e),
    }
}

/// `1 / (1 + r q_bar)` for `rho = (1 - alpha) P / r + alpha sigma`, with `P` the
/// support projector of the seed and `q_bar` the largest eigenvalue of `sigma`.
pub fn stability_threshold(seed: &Seed, sigma: &CMatrix) -> Result<f64> {
    validate_density(sigma, seed.dim())?;
    let tol = seed.space().tol();
    let (p, r) = support_projector(seed.xi(), tol)?;
    let overlap = crate::numerics::max_abs(&(&p * sigma * &p)) + crate::numerics::max_abs(&(&p * sigma));
    if overlap > 1e-8 {
        return Err(Error::SupportOverlap(overlap));
    }
    let q_bar = hermitian_eig(sigma)?.max();
    Ok(1.0 / (1.0 + r as f64 * q_bar))
}

/// Nonnegative weight `f(x_0, g x_0)` as a function of the group point `g`.
#[derive(Debug, Clone, PartialEq)]
pub enum Weight {
    Constant(f64),
    /// One value per element of a finite model.
    Elements(Vec<f64>),
    /// `sum_k cos[k] cos(k w phi) + sin[k] sin(k w phi)` with `w = 2 pi / period`
    /// on a one-parameter model; `sin[0]` is ignored.
    Trig { cos: Vec<f64>, sin: Vec<f64> },
}

impl Weight {
    fn trig_eval(cos: &[f64], sin: &[f64], omega: f64, phi: f64) -> f64 {
        let a: f64 = cos
            .iter()
            .enumerate()
            .map(|(k, c)| c * (k as f64 * omega * phi).cos())
            .sum();
        let b: f64 = sin
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, s)| s * (k as f64 * omega * phi).sin())
            .sum();
        a + b
    }

    /// Nodes and weights of the average over the group, each node with its `f` value.
    fn nodes(&self, dec: &IsotypicDecomposition) -> Result<Vec<(GroupPoint, f64)>> {
        let model = &dec.model;
        match (self, model.kind()) {
            (Weight::Elements(w), ModelKind::Finite(els)) => {
                if w.len() != els.len() {
                    return Err(Error::InvalidParameter(format!(
                        "{} weights for {} group elements",
                        w.len(),
                        els.len()
                    )));
                }
                Ok(w.iter().enumerate().map(|(k, &f)| (GroupPoint::Element(k), f)).collect())
            }
            (Weight::Trig { cos, sin }, ModelKind::OneParameter { .. }) => {
                let period = model.period().ok_or_else(|| {
                    Error::Unsupported("generator spectrum is not (half-)integer".into())
                })?;
                let omega = 2.0 * std::f64::consts::PI / period;
                Ok((0..QUADRATURE_NODES)
                    .map(|t| {
                        let phi = period * t as f64 / QUADRATURE_NODES as f64;
                        (GroupPoint::Angle(phi), Self::trig_eval(cos, sin, omega, phi))
                    })
                    .collect())
            }
            (w, kind) => Err(Error::Unsupported(format!(
                "weight {} on a {} model",
                w.kind_name(),
                match kind {
                    ModelKind::Finite(_) => "finite",
                    ModelKind::OneParameter { .. } => "one_parameter",
                    ModelKind::Lie(_) => "lie",
                }
            ))),
        }
    }

    fn kind_name(&self) -> &'static str {
        match self {
            Weight::Constant(_) => "constant",
            Weight::Elements(_) => "elements",
            Weight::Trig { .. } => "trig",
        }
    }

    /// `k = integral dg f`; checks `f >= 0` and `k > 0`.
    pub fn normalization(&self, dec: &IsotypicDecomposition) -> Result<f64> {
        let k = match self {
            Weight::Constant(c) => {
                if c.is_nan() || *c < 0.0 {
                    return Err(Error::InvalidParameter(format!("negative weight {c}")));
                }
                *c
            }
            _ => {
                let nodes = self.nodes(dec)?;
                if let Some((_, f)) = nodes.iter().find(|(_, f)| *f < -1e-12 || !f.is_finite()) {
                    return Err(Error::InvalidParameter(format!("weight takes value {f}")));
                }
                nodes.iter().map(|(_, f)| f).sum::<f64>() / nodes.len() as f64
            }
        };
        if k <= 0.0 {
            return Err(Error::InvalidParameter("weight integrates to zero".into()));
        }
        Ok(k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FigureOfMerit {
    /// `f(x, x_*) = delta(x - x_*)`: the likelihood `Tr[rho Xi]`.
    DeltaLikelihood,
    Weighted(Weight),
}

/// `M(rho) = k^{-1} integral dg f(x_0, g x_0) U_g rho U_g^dagger`.
pub fn ml_map(rho: &CMatrix, fom: &FigureOfMerit, dec: &IsotypicDecomposition) -> Result<CMatrix> {
    validate_density(rho, dec.dim)?;
    let weight = match fom {
        FigureOfMerit::Weighted(w) => w,
        FigureOfMerit::DeltaLikelihood => {
            return Err(Error::Unsupported("the averaging map needs a weighted figure of merit".into()))
        }
    };
    let k = weight.normalization(dec)?;
    if let Weight::Constant(_) = weight {
        return Ok(hermitian_part(&twirl(rho, dec)?));
    }
    let nodes = weight.nodes(dec)?;
    let mut out = CMatrix::zeros(dec.dim, dec.dim);
    for (g, f) in &nodes {
        if *f == 0.0 {
            continue;
        }
        let u = dec.model.unitary(g)?;
        out += (&u * rho * u.adjoint()) * cr(*f);
    }
    Ok(hermitian_part(&(out * cr(1.0 / (k * nodes.len() as f64)))))
}

/// `F_rho[Xi] = integral dg f(x_0, g x_0) Tr[U_g rho U_g^dagger Xi]`.
pub fn average_figure_of_merit(seed: &Seed, rho: &CMatrix, fom: &FigureOfMerit) -> Result<f64> {
    validate_density(rho, seed.dim())?;
    let dec = &seed.space().g_dec;
    let weight = match fom {
        FigureOfMerit::DeltaLikelihood => return likelihood(rho, seed),
        FigureOfMerit::Weighted(w) => w,
    };
    weight.normalization(dec)?;
    if let Weight::Constant(c) = weight {
        return Ok(c * trace_product(&twirl(rho, dec)?, seed.xi()).re);
    }
    let nodes = weight.nodes(dec)?;
    let mut total = 0.0;
    for (g, f) in &nodes {
        if *f == 0.0 {
            continue;
        }
        let u = dec.model.unitary(g)?;
        total += f * trace_product(&(&u * rho * u.adjoint()), seed.xi()).re;
    }
    Ok(total / nodes.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grouprep::GroupModel;
    use crate::numerics::{diag, Tolerances};

    fn u1_space(n: usize) -> Arc<SeedSpace> {
        let charges: Vec<f64> = (0..n).map(|k| k as f64).collect();
        let rep = GroupModel::one_parameter(diag(&charges)).unwrap();
        SeedSpace::new(&rep, &GroupModel::trivial(n).unwrap(), &Tolerances::default()).unwrap()
    }

    #[test]
    fn stability_threshold_arithmetic() {
        let space = u1_space(4);
        let mut xi = CMatrix::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                xi[(i, j)] = cr(1.0);
            }
        }
        xi[(2, 2)] = cr(1.0);
        xi[(3, 3)] = cr(1.0);
        // rank 3; sigma must live on the remaining direction (e0 - e1)/sqrt2
        let seed = Seed::new(xi, space).unwrap();
        let mut sigma = CMatrix::zeros(4, 4);
        sigma[(0, 0)] = cr(0.5);
        sigma[(1, 1)] = cr(0.5);
        sigma[(0, 1)] = cr(-0.5);
        sigma[(1, 0)] = cr(-0.5);
        let a = stability_threshold(&seed, &sigma).unwrap();
        assert!((a - 0.25).abs() < 1e-12);
        assert!(matches!(
            stability_threshold(&seed, &diag(&[1.0, 0.0, 0.0, 0.0])),
            Err(Error::SupportOverlap(_))
        ));
    }

    #[test]
    fn trig_weight_must_be_nonnegative() {
        let space = u1_space(2);
        let w = Weight::Trig { cos: vec![0.5, 1.0], sin: vec![] };
        assert!(w.normalization(&space.g_dec).is_err());
        let w = Weight::Trig { cos: vec![1.0, 0.5], sin: vec![0.0, 0.3] };
        assert!((w.normalization(&space.g_dec).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn maximally_mixed_state_is_not_unique() {
        let space = u1_space(3);
        let rho = identity(3) * cr(1.0 / 3.0);
        let res = optimize_likelihood(&rho, &space, &OptimizeOptions::default()).unwrap();
        assert!(res.converged);
        assert!((res.value - 1.0).abs() < 1e-9);
        assert_eq!(res.unique, Some(false));
    }
}
