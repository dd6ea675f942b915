use rand::Rng;
use rand_distr::StandardNormal;

use crate::design::{KroneckerDesign, PSD_SLACK};
use crate::error::{Error, Result};
use crate::kernels::RejectionKernelSpec;
use crate::linalg::{LinearOperator, ScaledIdentity};
use crate::scalar::{lit, to_f64, Real};

/// A design usable for Bernoulli rotations: a linear map with operator norm
/// at most one and a sampler for `N(0, I - AᵀA)`.
pub trait RotationDesign<T: Real>: LinearOperator<T> + Sync {
    /// Smallest eigenvalue of `I - AᵀA`.
    fn min_whitening_eigenvalue(&self) -> T;
    fn whitening_noise(&self, rng: &mut dyn rand::RngCore) -> Vec<T>;
}

impl<T: Real + Send + Sync> RotationDesign<T> for KroneckerDesign<T> {
    fn min_whitening_eigenvalue(&self) -> T {
        self.min_whitening_eigenvalue
    }
    fn whitening_noise(&self, rng: &mut dyn rand::RngCore) -> Vec<T> {
        KroneckerDesign::whitening_noise(self, rng)
    }
}

impl<T: Real + Send + Sync> RotationDesign<T> for ScaledIdentity<T> {
    fn min_whitening_eigenvalue(&self) -> T {
        T::one() - self.scale * self.scale
    }
    fn whitening_noise(&self, rng: &mut dyn rand::RngCore) -> Vec<T> {
        let s = (T::one() - self.scale * self.scale).max(T::zero()).sqrt();
        if s == T::zero() {
            return vec![T::zero(); self.n];
        }
        (0..self.n).map(|_| s * lit(rng.sample::<f64, _>(StandardNormal))).collect()
    }
}

/// Knobs for negative controls.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RotationOptions {
    /// Add the `N(0, I - AᵀA)` correction. Turning it off leaves the output
    /// covariance at `AᵀA`, which fidelity tests must detect.
    pub whitening: bool,
}

impl Default for RotationOptions {
    fn default() -> Self {
        RotationOptions { whitening: true }
    }
}

/// Maps a block of bits to Gaussians: `y = Aᵀ x + w`, where `x` applies the
/// rejection kernel entrywise and `w ~ N(0, I - AᵀA)`.
///
/// Under a single planted bit at index `i` the output is close to
/// `N(mu A_i, I)` (row `i` of the design); with no planted bit it is close
/// to `N(0, I)`.
pub fn bernoulli_rotate_block<T, D, R>(
    bits: &[bool],
    design: &D,
    kernel: &RejectionKernelSpec<T>,
    options: RotationOptions,
    rng: &mut R,
) -> Result<Vec<T>>
where
    T: Real,
    D: RotationDesign<T> + ?Sized,
    R: Rng,
{
    if bits.len() != design.nrows() {
        return Err(Error::param(
            "bits",
            format!("block has {} bits, design has {} rows", bits.len(), design.nrows()),
        ));
    }
    let min_ev = to_f64(design.min_whitening_eigenvalue());
    if min_ev < -PSD_SLACK {
        return Err(Error::NotPsd { min_eigenvalue: min_ev });
    }
    let x: Vec<T> = bits.iter().map(|&b| kernel.sample(b, rng)).collect();
    let mut y = vec![T::zero(); design.ncols()];
    design.apply_transpose(&x, &mut y);
    if options.whitening {
        let w = design.whitening_noise(rng);
        for (yi, wi) in y.iter_mut().zip(w) {
            *yi = *yi + wi;
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn identity_design_is_the_bare_kernel() {
        let kernel = RejectionKernelSpec::new(1.0, 0.5, 0.05, 1000).unwrap();
        let id = ScaledIdentity { n: 6, scale: 1.0 };
        let bits = [true, false, true, true, false, false];
        let y = bernoulli_rotate_block(&bits, &id, &kernel, RotationOptions::default(), &mut stream(1, 0)).unwrap();
        let mut rng = stream(1, 0);
        let direct: Vec<f64> = bits.iter().map(|&b| kernel.sample(b, &mut rng)).collect();
        assert_eq!(y, direct);
    }

    #[test]
    fn wrong_length_is_rejected() {
        let kernel = RejectionKernelSpec::new(1.0, 0.5, 0.05, 1000).unwrap();
        let id = ScaledIdentity { n: 4, scale: 1.0 };
        assert!(bernoulli_rotate_block(&[true; 3], &id, &kernel, RotationOptions::default(), &mut stream(1, 0)).is_err());
    }
}
