//! Resource monotones evaluated on reduced states, all in bits.
//!
//! * relative entropy of coherence `S(ρ^D) − S(ρ)`,
//! * relative entropy of imaginarity `S(Re ρ) − S(ρ)`,
//! * relative entropy of Gaussianity `S_G(ρ) − S(ρ)` (see [`majorana`]),
//! * mana `log₂ Σ_r |W_r|` (see [`wigner`]).

pub mod majorana;
pub mod wigner;

use crate::dense::{entropy_of_spectrum, von_neumann_entropy, DensityMatrix, PureState};
use crate::error::{Error, Result};
use crate::linalg::{binary_entropy, shannon_entropy, symmetric_eigenvalues};

pub use majorana::{gaussian_entropy, majorana_correlation_matrix, non_gaussianity, MajoranaCorrelationMatrix};
pub use wigner::{mana, phase_point_operators, PhasePointOperatorSet};

/// Values below `-NEGATIVE_TOL` are reported as errors rather than clamped.
pub const NEGATIVE_TOL: f64 = 1e-9;

pub(crate) fn clamp_nonnegative(value: f64, what: &str) -> Result<f64> {
    if value < -NEGATIVE_TOL {
        return Err(Error::InvalidDensityMatrix(format!("{what} evaluated to {value:e}")));
    }
    Ok(value.max(0.0))
}

/// Relative entropy of coherence in the computational basis.
pub fn coherence(rho: &DensityMatrix) -> Result<f64> {
    let diag: Vec<f64> = rho.matrix().diagonal().iter().map(|z| z.re).collect();
    let s_diag = entropy_of_spectrum(&diag)?;
    clamp_nonnegative(s_diag - von_neumann_entropy(rho)?, "coherence")
}

/// Relative entropy of imaginarity.
pub fn imaginarity(rho: &DensityMatrix) -> Result<f64> {
    let re = rho.matrix().map(|z| z.re);
    let s_re = entropy_of_spectrum(&symmetric_eigenvalues(&re))?;
    clamp_nonnegative(s_re - von_neumann_entropy(rho)?, "imaginarity")
}

/// Coherence of a global pure state: Shannon entropy of `|ψ_z|²`.
pub fn coherence_of_pure(state: &PureState) -> f64 {
    shannon_entropy(state.amplitudes().iter().map(|a| a.norm_sqr()))
}

/// Imaginarity of a global pure state. `Re(|ψ⟩⟨ψ|)` has rank two with
/// eigenvalues `(1 ± |ψᵀψ|)/2`.
pub fn imaginarity_of_pure(state: &PureState) -> f64 {
    let overlap: num_complex::Complex64 = state.amplitudes().iter().map(|a| a * a).sum();
    binary_entropy((1.0 + overlap.norm().min(1.0)) / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{reduced_density, tilted_state, TiltKind};
    use crate::linalg::{CMatrix, C64, I};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn coherence_examples() {
        let diag = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.3), c(0.7)]));
        let rho = DensityMatrix::new(1, 2, diag).unwrap();
        assert_abs_diff_eq!(coherence(&rho).unwrap(), 0.0, epsilon = 1e-12);

        let plus = CMatrix::from_element(2, 2, c(0.5));
        let rho = DensityMatrix::new(1, 2, plus).unwrap();
        assert_abs_diff_eq!(coherence(&rho).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn coherence_of_tilted_pair() {
        let theta = std::f64::consts::PI / 3.0;
        let s = tilted_state(6, 2, TiltKind::Y, theta).unwrap();
        let rho = reduced_density(&s, &[0, 1]).unwrap();
        // product of two pure qubits: S(ρ)=0, S(ρ^D)=2H(cos²(θ/2))
        let expected = 2.0 * binary_entropy((theta / 2.0).cos().powi(2));
        assert_abs_diff_eq!(coherence(&rho).unwrap(), expected, epsilon = 1e-10);
        assert_abs_diff_eq!(expected, 1.6226, epsilon = 1e-4);
    }

    #[test]
    fn imaginarity_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = PureState::random(2, 2, &mut rng).unwrap();
        let real =
            DensityMatrix::new(2, 2, DensityMatrix::from_pure(&s).matrix().map(|z| c(z.re))).unwrap();
        assert_abs_diff_eq!(imaginarity(&real).unwrap(), 0.0, epsilon = 1e-12);

        // |y+⟩ = (|0⟩ + i|1⟩)/√2
        let y = CMatrix::from_row_slice(2, 2, &[c(0.5), -I * 0.5, I * 0.5, c(0.5)]);
        let rho = DensityMatrix::new(1, 2, y).unwrap();
        assert_abs_diff_eq!(imaginarity(&rho).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn x_tilt_half_pi_is_maximally_imaginary() {
        let s = tilted_state(4, 2, TiltKind::X, std::f64::consts::FRAC_PI_2).unwrap();
        let rho = reduced_density(&s, &[0]).unwrap();
        let re = rho.matrix().map(|z| z.re);
        assert_abs_diff_eq!(re[(0, 0)], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(re[(0, 1)], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(imaginarity(&rho).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn pure_state_shortcuts_match_definitions() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 1..=6 {
            let s = PureState::random(n, 2, &mut rng).unwrap();
            let rho = DensityMatrix::from_pure(&s);
            assert_abs_diff_eq!(imaginarity_of_pure(&s), imaginarity(&rho).unwrap(), epsilon = 1e-9);
            assert_abs_diff_eq!(coherence_of_pure(&s), coherence(&rho).unwrap(), epsilon = 1e-9);
        }
    }
}
