//! Discrete Wigner function and mana for qutrit chains.
//!
//! Phase-point operators factorize over sites, `A_r = ⊗_l A_{r_l}`, so only
//! the nine single-qutrit operators are stored. The Wigner function of an
//! `n`-qutrit state is contracted site by site and never materializes the
//! `9^n` operators.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::dense::{kron_all, qudit_clock, qudit_shift, DensityMatrix};
use crate::error::{Error, Result};
use crate::linalg::{C64, CMatrix, ZERO};

use super::clamp_nonnegative;

const D: usize = 3;
/// Largest chain for which a cached operator set is handed out.
pub const MAX_SITES: usize = 6;

/// Qutrit Pauli `P_r = τ^{r_x r_z} X^{r_x} Z^{r_z}`, `τ = e^{-iπ(d+1)/d}`.
///
/// With `X` to the left of `Z` this sign makes `{P_r}` closed under adjoint,
/// so `A_0` is Hermitian.
pub fn qutrit_pauli(rx: usize, rz: usize) -> CMatrix {
    let x = qudit_shift(D);
    let z = qudit_clock(D);
    let tau = C64::from_polar(1.0, -PI * (D as f64 + 1.0) / D as f64);
    let xp = (0..rx % D).fold(CMatrix::identity(D, D), |acc, _| acc * &x);
    let zp = (0..rz % D).fold(CMatrix::identity(D, D), |acc, _| acc * &z);
    (xp * zp) * tau.powu(((rx % D) * (rz % D)) as u32)
}

#[derive(Debug, Clone)]
pub struct PhasePointOperatorSet {
    n_sites: usize,
    /// Single-qutrit `A_r`, indexed by `3 r_x + r_z`.
    single: Vec<CMatrix>,
}

impl PhasePointOperatorSet {
    fn build(n_sites: usize) -> Self {
        let paulis: Vec<CMatrix> = (0..D * D).map(|r| qutrit_pauli(r / D, r % D)).collect();
        let a0 = paulis.iter().fold(CMatrix::zeros(D, D), |acc, p| acc + p) / C64::new(D as f64, 0.0);
        let single = paulis.iter().map(|p| p * &a0 * p.adjoint()).collect();
        Self { n_sites, single }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Number of phase-space points, `9^n`.
    pub fn len(&self) -> usize {
        (D * D).pow(self.n_sites as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn single_site(&self) -> &[CMatrix] {
        &self.single
    }

    /// Dense `A_r`; `r` is read in base 9 with site 0 most significant and
    /// per-site digit `3 r_x + r_z`.
    pub fn operator(&self, r: usize) -> CMatrix {
        let factors: Vec<CMatrix> = (0..self.n_sites)
            .map(|l| {
                let digit = (r / (D * D).pow((self.n_sites - 1 - l) as u32)) % (D * D);
                self.single[digit].clone()
            })
            .collect();
        kron_all(&factors)
    }

    /// Quasi-probabilities `W_r = Tr(A_r ρ) / d^n`, summing to one.
    pub fn wigner(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        if rho.local_dim() != D || rho.n_sites() != self.n_sites {
            return Err(Error::DimensionMismatch(format!(
                "operator set for {} qutrits, state on {} sites of dimension {}",
                self.n_sites,
                rho.n_sites(),
                rho.local_dim()
            )));
        }
        // layout: [prefix r][i_rest][j_rest]
        let mut rest = rho.dim();
        let mut current: Vec<C64> = Vec::with_capacity(rest * rest);
        for i in 0..rest {
            for j in 0..rest {
                current.push(rho.matrix()[(i, j)]);
            }
        }
        let mut n_prefix = 1;
        for _ in 0..self.n_sites {
            let sub = rest / D;
            let mut next = vec![ZERO; n_prefix * D * D * sub * sub];
            for p in 0..n_prefix {
                let block = &current[p * rest * rest..(p + 1) * rest * rest];
                for (r, a) in self.single.iter().enumerate() {
                    let out = &mut next[(p * D * D + r) * sub * sub..(p * D * D + r + 1) * sub * sub];
                    // Tr(A ρ) contracts A[b, a] with ρ[a, b]
                    for ia in 0..D {
                        for jb in 0..D {
                            let coeff = a[(jb, ia)];
                            if coeff == ZERO {
                                continue;
                            }
                            for ip in 0..sub {
                                let row = (ia * sub + ip) * rest + jb * sub;
                                let src = &block[row..row + sub];
                                let dst = &mut out[ip * sub..(ip + 1) * sub];
                                for (d, s) in dst.iter_mut().zip(src) {
                                    *d += coeff * s;
                                }
                            }
                        }
                    }
                }
            }
            current = next;
            n_prefix *= D * D;
            rest = sub;
        }
        let norm = (D as f64).powi(self.n_sites as i32);
        Ok(current.into_iter().map(|w| w.re / norm).collect())
    }
}

/// Cached operator set for `n_sites` qutrits.
pub fn phase_point_operators(n_sites: usize) -> Result<&'static PhasePointOperatorSet> {
    static CACHE: [OnceLock<PhasePointOperatorSet>; MAX_SITES + 1] = [const { OnceLock::new() }; MAX_SITES + 1];
    if n_sites == 0 || n_sites > MAX_SITES {
        return Err(Error::SizeLimit(format!(
            "phase-point operators supported for 1..={MAX_SITES} qutrits, requested {n_sites}"
        )));
    }
    Ok(CACHE[n_sites].get_or_init(|| PhasePointOperatorSet::build(n_sites)))
}

/// Mana `log₂ Σ_r |W_r|`.
pub fn mana(rho: &DensityMatrix) -> Result<f64> {
    if rho.local_dim() != D {
        return Err(Error::UnsupportedDim(rho.local_dim()));
    }
    let set = phase_point_operators(rho.n_sites())?;
    let negativity: f64 = set.wigner(rho)?.iter().map(|w| w.abs()).sum();
    clamp_nonnegative(negativity.log2(), "mana")
}
