//! Fermionic Gaussianity through Jordan–Wigner Majorana correlations.

use nalgebra::DMatrix;

use crate::dense::{pauli_string_expectation, reduced_density, von_neumann_entropy, DensityMatrix, PureState};
use crate::error::{Error, Result};
use crate::linalg::{binary_entropy, hermitian_eigenvalues, C64, CMatrix};
use crate::pauli::PauliString;

use super::clamp_nonnegative;

const ANTISYMMETRY_TOL: f64 = 1e-10;
const SINGULAR_VALUE_LIMIT: f64 = 1.0 + 1e-6;

/// `M_ab = -(i/2) Tr(ρ [γ_a, γ_b])` on the `2 N_A` Majoranas of a prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct MajoranaCorrelationMatrix {
    matrix: DMatrix<f64>,
}

impl MajoranaCorrelationMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() % 2 != 0 {
            return Err(Error::DimensionMismatch(format!(
                "correlation matrix must be 2N_A square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let asym = (&matrix + matrix.transpose()).amax();
        if asym > ANTISYMMETRY_TOL {
            return Err(Error::InvalidParameter(format!("M + Mᵀ deviates by {asym:e}")));
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn n_modes(&self) -> usize {
        self.matrix.nrows() / 2
    }

    /// The `N_A` non-negative paired singular values, descending.
    pub fn paired_singular_values(&self) -> Vec<f64> {
        // iM is Hermitian with spectrum ±λ_j
        let im = self.matrix.map(|x| C64::new(0.0, x));
        let mut ev = hermitian_eigenvalues(&im);
        ev.reverse();
        ev.truncate(self.n_modes());
        ev
    }
}

fn check_prefix(region: &[usize], n_sites: usize) -> Result<usize> {
    if region.is_empty() || region.len() > n_sites || region.iter().enumerate().any(|(k, &s)| k != s) {
        return Err(Error::InvalidRegion(format!(
            "Majorana correlations need a prefix region 0..N_A, got {region:?}"
        )));
    }
    Ok(region.len())
}

/// Correlation matrix of the prefix `region` evaluated from global
/// expectation values.
pub fn majorana_correlation_matrix(state: &PureState, region: &[usize]) -> Result<MajoranaCorrelationMatrix> {
    let n = state.n_sites();
    let n_a = check_prefix(region, n)?;
    let gammas: Vec<PauliString> = (1..=2 * n_a)
        .map(|a| PauliString::majorana(n, a))
        .collect::<Result<_>>()?;
    let mut m = DMatrix::zeros(2 * n_a, 2 * n_a);
    for a in 0..2 * n_a {
        for b in a + 1..2 * n_a {
            // [γ_a, γ_b] = 2 γ_a γ_b for a ≠ b
            let expectation = pauli_string_expectation(state, &(&gammas[a] * &gammas[b]))?;
            let value = (C64::new(0.0, -1.0) * expectation).re;
            m[(a, b)] = value;
            m[(b, a)] = -value;
        }
    }
    MajoranaCorrelationMatrix::new(m)
}

/// Correlation matrix computed directly from a reduced qubit state, with
/// Majoranas of its own `N_A` sites.
pub fn majorana_correlation_of_density(rho: &DensityMatrix) -> Result<MajoranaCorrelationMatrix> {
    if rho.local_dim() != 2 {
        return Err(Error::UnsupportedDim(rho.local_dim()));
    }
    let n_a = rho.n_sites();
    let gammas: Vec<CMatrix> = (1..=2 * n_a)
        .map(|a| PauliString::majorana(n_a, a).map(|g| g.matrix()))
        .collect::<Result<_>>()?;
    let mut m = DMatrix::zeros(2 * n_a, 2 * n_a);
    for a in 0..2 * n_a {
        for b in a + 1..2 * n_a {
            let comm = &gammas[a] * &gammas[b] - &gammas[b] * &gammas[a];
            let value = (C64::new(0.0, -0.5) * (rho.matrix() * comm).trace()).re;
            m[(a, b)] = value;
            m[(b, a)] = -value;
        }
    }
    MajoranaCorrelationMatrix::new(m)
}

/// Entropy of the Gaussian state sharing `M`: `Σ_j H((1+λ_j)/2)`.
pub fn gaussian_entropy(m: &MajoranaCorrelationMatrix) -> Result<f64> {
    let mut s = 0.0;
    for lambda in m.paired_singular_values() {
        if lambda > SINGULAR_VALUE_LIMIT {
            return Err(Error::SingularValueTooLarge(lambda));
        }
        s += binary_entropy((1.0 + lambda.clamp(0.0, 1.0)) / 2.0);
    }
    Ok(s)
}

/// Relative entropy of Gaussianity of the prefix `region`.
pub fn non_gaussianity(state: &PureState, region: &[usize]) -> Result<f64> {
    let m = majorana_correlation_matrix(state, region)?;
    let rho = reduced_density(state, region)?;
    clamp_nonnegative(gaussian_entropy(&m)? - von_neumann_entropy(&rho)?, "non-Gaussianity")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{tilted_state, TiltKind};
    use crate::linalg::ONE;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn vacuum_correlations() {
        let s = PureState::basis(3, 2, &[0, 0, 0]).unwrap();
        let m = majorana_correlation_matrix(&s, &[0]).unwrap();
        assert_abs_diff_eq!(m.matrix()[(0, 1)], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m.matrix()[(1, 0)], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(gaussian_entropy(&m).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(non_gaussianity(&s, &[0, 1]).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn half_bell_pair_has_no_correlations() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let z = C64::new(0.0, 0.0);
        let bell = PureState::from_amplitudes(2, 2, vec![ONE * h, z, z, ONE * h]).unwrap();
        let m = majorana_correlation_matrix(&bell, &[0]).unwrap();
        assert!(m.matrix().amax() < 1e-14);
        assert_abs_diff_eq!(gaussian_entropy(&m).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn gaussian_entropy_examples() {
        let zero = MajoranaCorrelationMatrix::new(DMatrix::zeros(6, 6)).unwrap();
        assert_abs_diff_eq!(gaussian_entropy(&zero).unwrap(), 3.0, epsilon = 1e-12);

        let m = DMatrix::from_row_slice(2, 2, &[0.0, 0.5, -0.5, 0.0]);
        let m = MajoranaCorrelationMatrix::new(m).unwrap();
        assert_abs_diff_eq!(gaussian_entropy(&m).unwrap(), binary_entropy(0.75), epsilon = 1e-12);

        let big = DMatrix::from_row_slice(2, 2, &[0.0, 1.5, -1.5, 0.0]);
        let big = MajoranaCorrelationMatrix::new(big).unwrap();
        assert!(matches!(gaussian_entropy(&big), Err(Error::SingularValueTooLarge(_))));

        assert!(MajoranaCorrelationMatrix::new(DMatrix::from_element(2, 2, 1.0)).is_err());
    }

    #[test]
    fn prefix_requirement() {
        let s = PureState::basis(3, 2, &[0, 0, 0]).unwrap();
        assert!(matches!(majorana_correlation_matrix(&s, &[1]), Err(Error::InvalidRegion(_))));
        assert!(matches!(majorana_correlation_matrix(&s, &[]), Err(Error::InvalidRegion(_))));
    }

    #[test]
    fn global_and_reduced_routes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = PureState::random(5, 2, &mut rng).unwrap();
        for n_a in 1..=3 {
            let region: Vec<usize> = (0..n_a).collect();
            let global = majorana_correlation_matrix(&s, &region).unwrap();
            let local = majorana_correlation_of_density(&reduced_density(&s, &region).unwrap()).unwrap();
            assert!((global.matrix() - local.matrix()).amax() < 1e-12);
        }
    }

    #[test]
    fn tilted_state_is_non_gaussian() {
        let s = tilted_state(8, 2, TiltKind::Y, 0.7).unwrap();
        let ng = non_gaussianity(&s, &[0, 1]).unwrap();
        assert!(ng > 1e-3, "{ng}");
    }
}
