//! Seeded random states, operations and transition grids.
//!
//! Everything here is deterministic for a given RNG state; models built from
//! a `u64` seed use [`ChaCha8Rng`] so the result is identical across runs and
//! platforms.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::densemath::ComplexMatrix;
use crate::quantum::{DensityOperator, KrausOperation};
use crate::tom::{SubTOM, SubVectorState, Tom, VectorState};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `rows x cols` matrix of i.i.d. standard complex Gaussians.
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let data = (0..rows * cols)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re * scale, im * scale)
        })
        .collect();
    ComplexMatrix::new(rows, cols, data).expect("finite gaussian samples")
}

/// A point of the probability simplex of length `n`.
pub fn simplex<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// Random full-rank density operator with the given trace.
pub fn density<R: Rng + ?Sized>(rng: &mut R, dim: usize, trace: f64) -> DensityOperator {
    let g = ginibre(rng, dim, dim);
    let m = &g * &g.adjoint();
    let t = m.trace_re();
    DensityOperator::from_trusted(m.scale_re(trace / t).hermitian_part())
}

/// Normalises a family of Kraus matrices sharing an input space so that
/// `Σ K†K = I`, by right-multiplying each with `S^{-1/2}`.
pub(crate) fn normalise_family(family: &mut [ComplexMatrix]) {
    let dim = family[0].cols();
    let s = family
        .iter()
        .fold(ComplexMatrix::zeros(dim, dim), |acc, k| &acc + &(&k.adjoint() * k));
    let inv_sqrt = s
        .hermitian_function(|x| 1.0 / x.sqrt())
        .expect("gram matrix is Hermitian");
    for k in family.iter_mut() {
        *k = &*k * &inv_sqrt;
    }
}

/// Random channel with `rank` Kraus matrices, raised to `⌈dim_in / dim_out⌉`
/// when smaller since fewer cannot be trace preserving.
pub fn channel<R: Rng + ?Sized>(rng: &mut R, dim_in: usize, dim_out: usize, rank: usize) -> KrausOperation {
    let rank = rank.max(dim_in.div_ceil(dim_out));
    let mut kraus: Vec<ComplexMatrix> = (0..rank).map(|_| ginibre(rng, dim_out, dim_in)).collect();
    normalise_family(&mut kraus);
    KrausOperation::from_kraus_unchecked(kraus)
}

fn grid_from_columns(out_size: usize, in_size: usize, columns: Vec<Vec<KrausOperation>>) -> SubTOM {
    let rows = (0..out_size)
        .map(|i| (0..in_size).map(|j| columns[j][i].clone()).collect())
        .collect();
    crate::tom::validate_sub_tom(rows).expect("random grid satisfies the column law")
}

/// Random TOM: each column is a Ginibre family normalised to a channel.
pub fn tom<R: Rng + ?Sized>(rng: &mut R, size: usize, dim: usize) -> Tom {
    let sub = sub_tom_scaled(rng, size, size, dim, dim, |_| 1.0);
    Tom::try_from(sub).expect("columns are channels")
}

/// Random sub-TOM: a channel column scaled by a uniform factor in `[0, 1)`.
pub fn sub_tom<R: Rng + ?Sized>(rng: &mut R, out_size: usize, in_size: usize, dim_in: usize, dim_out: usize) -> SubTOM {
    sub_tom_scaled(rng, out_size, in_size, dim_in, dim_out, |r| r.random::<f64>())
}

fn sub_tom_scaled<R: Rng + ?Sized>(
    rng: &mut R,
    out_size: usize,
    in_size: usize,
    dim_in: usize,
    dim_out: usize,
    mut factor: impl FnMut(&mut R) -> f64,
) -> SubTOM {
    let columns = (0..in_size)
        .map(|_| {
            // enough matrices per entry for the column Gram matrix to be invertible
            let per_entry = dim_in.div_ceil(out_size * dim_out);
            let mut family: Vec<ComplexMatrix> = (0..out_size * per_entry)
                .map(|_| ginibre(rng, dim_out, dim_in))
                .collect();
            normalise_family(&mut family);
            let s = factor(rng).sqrt();
            family
                .chunks(per_entry)
                .map(|ks| KrausOperation::from_kraus_unchecked(ks.iter().map(|k| k.scale_re(s)).collect()))
                .collect()
        })
        .collect();
    grid_from_columns(out_size, in_size, columns)
}

/// Random vector state with full-rank parts.
pub fn vector_state<R: Rng + ?Sized>(rng: &mut R, size: usize, dim: usize) -> VectorState {
    let w = simplex(rng, size);
    let parts = w.iter().map(|&t| density(rng, dim, t)).collect();
    VectorState::new(parts).expect("weights sum to one")
}

/// Random sub-normalised vector state with total trace drawn from `[0, 1)`.
pub fn sub_vector_state<R: Rng + ?Sized>(rng: &mut R, size: usize, dim: usize) -> SubVectorState {
    let total: f64 = rng.random();
    let w = simplex(rng, size);
    let parts = w.iter().map(|&t| density(rng, dim, t * total)).collect();
    SubVectorState::new(parts).expect("total trace below one")
}
