//! Random valid seeds for property tests and benchmarks.

use std::sync::Arc;

use rand::Rng;

use crate::covariant::{normalize_to_seed, Seed, SeedSpace};
use crate::error::{Error, Result};
use crate::numerics::{c, hermitian_part, CMatrix};

const MAX_ATTEMPTS: usize = 64;

/// Complex matrix with independent entries uniform in the unit square.
pub fn random_complex<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    hermitian_part(&random_complex(n, n, rng))
}

/// Random density matrix `Z Z^dagger / Tr` of the given rank.
pub fn random_density<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> CMatrix {
    let z = random_complex(n, rank.clamp(1, n), rng);
    let rho = &z * z.adjoint();
    let tr = crate::numerics::trace(&rho).re;
    hermitian_part(&(rho / c(tr, 0.0)))
}

/// A random rank-one seed, when the `G_0` decomposition has a one-dimensional class
/// whose vectors can be normalized.
pub fn random_rank_one_seed<R: Rng + ?Sized>(space: &Arc<SeedSpace>, rng: &mut R) -> Result<Seed> {
    let candidates: Vec<usize> = space
        .g0_dec
        .classes
        .iter()
        .enumerate()
        .filter(|(_, c)| c.d == 1)
        .map(|(k, _)| k)
        .collect();
    if candidates.is_empty() {
        return Err(Error::Unsupported("no one-dimensional stabilizer class".into()));
    }
    for _ in 0..MAX_ATTEMPTS {
        let class = &space.g0_dec.classes[candidates[rng.random_range(0..candidates.len())]];
        let z = random_complex(class.m, 1, rng);
        let y = class.embed(&(&z * z.adjoint()));
        if let Ok(seed) = normalize_to_seed(&y, space) {
            return Ok(seed);
        }
    }
    Err(Error::Unsupported("no rank-one seed found for this scenario".into()))
}

/// A random seed whose multiplicity factors have ranks at most `max_rank`
/// (`None` draws full-rank factors, giving interior points).
pub fn random_seed<R: Rng + ?Sized>(
    space: &Arc<SeedSpace>,
    max_rank: Option<usize>,
    rng: &mut R,
) -> Result<Seed> {
    for _ in 0..MAX_ATTEMPTS {
        let n = space.dim();
        let mut y = CMatrix::zeros(n, n);
        for class in &space.g0_dec.classes {
            let k = match max_rank {
                Some(r) => rng.random_range(0..=r.min(class.m)),
                None => class.m,
            };
            if k == 0 {
                continue;
            }
            let z = random_complex(class.m, k, rng);
            y += class.embed(&(&z * z.adjoint()));
        }
        if let Ok(seed) = normalize_to_seed(&y, space) {
            return Ok(seed);
        }
    }
    Err(Error::Unsupported("could not draw a seed with invertible frame operator".into()))
}
