//! Seeded sampling of states, unitaries, SL(d,ℂ) elements and isometries.
//!
//! Every draw goes through a [`RandomStream`], a ChaCha generator keyed by
//! `(seed, stream_id)`. Parallel workers use distinct stream ids derived from
//! one master seed, so results never depend on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{usage, Error, Result};
use crate::linalg::{determinant, orthonormalize, singular_values, ComplexMatrix, ComplexVector, LocalDims, C64};
use crate::state::{DensityMatrix, PureState};

/// Smallest singular value accepted for an SL(d,ℂ) draw.
pub const SL_CONDITION_GUARD: f64 = 1e-6;
const SL_MAX_REDRAWS: usize = 100;

#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Independent child stream, a pure function of `(seed, stream_id, index)`.
    pub fn derive(&self, index: u64) -> RandomStream {
        RandomStream::new(self.seed, derive_stream_id(self.stream_id, index))
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `lo..=hi`.
    pub fn int_in(&mut self, lo: usize, hi: usize) -> usize {
        self.rng.random_range(lo..=hi)
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Standard complex Gaussian: real and imaginary parts with variance 1/2.
    pub fn complex_normal(&mut self) -> C64 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        C64::new(self.normal() * s, self.normal() * s)
    }

    pub fn ginibre(&mut self, rows: usize, cols: usize) -> ComplexMatrix {
        // column-major fill order; fixed for reproducibility
        ComplexMatrix::from_fn(rows, cols, |_, _| self.complex_normal())
    }

    /// Point on the probability simplex, uniform (flat Dirichlet).
    pub fn simplex(&mut self, n: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..n).map(|_| -self.uniform().max(f64::MIN_POSITIVE).ln()).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|x| x / total).collect()
    }
}

/// splitmix64 finalizer over the pair, used to key child streams.
pub fn derive_stream_id(parent: u64, index: u64) -> u64 {
    let mut z = parent.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ index.wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Haar-distributed `d × d` unitary (QR of a Ginibre matrix with the phases
/// of `R`'s diagonal absorbed into `Q`).
pub fn random_haar_unitary(d: usize, rng: &mut RandomStream) -> ComplexMatrix {
    orthonormalize(&rng.ginibre(d, d))
}

/// Haar-distributed isometry with `rows ≥ cols` (first columns of a Haar unitary).
pub fn random_isometry(rows: usize, cols: usize, rng: &mut RandomStream) -> Result<ComplexMatrix> {
    if cols > rows {
        return usage(format!("isometry needs rows ≥ cols, got {rows}x{cols}"));
    }
    Ok(orthonormalize(&rng.ginibre(rows, cols)))
}

/// Element of SL(d,ℂ): a Ginibre draw rescaled by the principal branch of
/// `det^(-1/d)`, redrawn while its smallest singular value is below
/// [`SL_CONDITION_GUARD`].
pub fn random_sl(d: usize, rng: &mut RandomStream) -> Result<ComplexMatrix> {
    if d < 2 {
        return usage(format!("SL(d) sampling needs d ≥ 2, got {d}"));
    }
    for _ in 0..SL_MAX_REDRAWS {
        let g = rng.ginibre(d, d);
        let det = determinant(&g)?;
        if det.norm() == 0.0 {
            continue;
        }
        let root = C64::from_polar(det.norm().powf(-1.0 / d as f64), -det.arg() / d as f64);
        let g = g * root;
        let smin = singular_values(&g).last().copied().unwrap_or(0.0);
        if smin > SL_CONDITION_GUARD {
            return Ok(g);
        }
    }
    Err(Error::Internal(format!("no well-conditioned SL({d}) draw after {SL_MAX_REDRAWS} attempts")))
}

/// Local SL factors, one per party.
pub fn random_local_sl(dims: &LocalDims, rng: &mut RandomStream) -> Result<Vec<ComplexMatrix>> {
    dims.as_slice().iter().map(|&d| random_sl(d, rng)).collect()
}

/// Haar-uniform pure state (normalized complex Gaussian vector).
pub fn random_pure_state(dims: &LocalDims, rng: &mut RandomStream) -> PureState {
    let v = ComplexVector::from_fn(dims.total(), |_, _| rng.complex_normal());
    PureState::from_unnormalized(v, dims.clone()).expect("gaussian vector is nonzero").0
}

/// Normalized Wishart density matrix `G G† / tr` with `G` of shape `D × rank`.
pub fn random_density(dims: &LocalDims, rank: usize, rng: &mut RandomStream) -> Result<DensityMatrix> {
    let d = dims.total();
    if rank == 0 || rank > d {
        return usage(format!("rank {rank} out of range 1..={d}"));
    }
    let g = rng.ginibre(d, rank);
    DensityMatrix::from_unnormalized_matrix(&g * g.adjoint(), dims.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haar_unitary_is_unitary_and_reproducible() {
        let mut rng = RandomStream::new(7, 0);
        for d in 1..6 {
            let u = random_haar_unitary(d, &mut rng);
            assert!((u.adjoint() * &u - ComplexMatrix::identity(d, d)).norm() < 1e-12);
        }
        let a = random_haar_unitary(4, &mut RandomStream::new(11, 3));
        let b = random_haar_unitary(4, &mut RandomStream::new(11, 3));
        assert_eq!(a, b);
        let c = random_haar_unitary(4, &mut RandomStream::new(11, 4));
        assert_ne!(a, c);
        let one = random_haar_unitary(1, &mut rng);
        assert!((one[(0, 0)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sl_draws_have_unit_determinant() {
        let mut rng = RandomStream::new(3, 1);
        for d in 2..5 {
            for _ in 0..20 {
                let g = random_sl(d, &mut rng).unwrap();
                assert!((determinant(&g).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-10);
                assert!(*singular_values(&g).last().unwrap() > SL_CONDITION_GUARD);
            }
        }
        let a = random_sl(2, &mut rng).unwrap();
        let b = random_sl(2, &mut rng).unwrap();
        assert!((determinant(&(a * b)).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-9);
        assert!(random_sl(1, &mut rng).is_err());
    }

    #[test]
    fn random_states_are_valid() {
        let mut rng = RandomStream::new(5, 0);
        let dims = LocalDims::new(vec![2, 3]).unwrap();
        let psi = random_pure_state(&dims, &mut rng);
        assert!((psi.amps().norm_squared() - 1.0).abs() < 1e-12);
        for rank in 1..=6 {
            let rho = random_density(&dims, rank, &mut rng).unwrap();
            let (vals, _) = crate::linalg::hermitian_eigen(rho.matrix());
            assert!(vals.iter().all(|&v| v > -1e-12));
            assert_eq!(vals.iter().filter(|&&v| v > 1e-10).count(), rank);
            assert!((crate::linalg::trace(rho.matrix()).re - 1.0).abs() < 1e-12);
        }
        assert!(random_density(&dims, 7, &mut rng).is_err());
        assert!(random_density(&dims, 0, &mut rng).is_err());
    }

    #[test]
    fn derived_streams_differ() {
        let root = RandomStream::new(1, 0);
        assert_ne!(root.derive(0).stream_id(), root.derive(1).stream_id());
        let mut a = root.derive(5);
        let mut b = root.derive(5);
        assert_eq!(a.normal().to_bits(), b.normal().to_bits());
    }
}
