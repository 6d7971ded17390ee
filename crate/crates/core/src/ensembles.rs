//! Gate families for the free and resourceful circuits.
//!
//! | family              | gates                                                      |
//! |---------------------|------------------------------------------------------------|
//! | `Coherence`         | `exp(-i Σ α_ab Z^a⊗Z^b) · S`, `S ∈ {1, SWAP}`              |
//! | `Orthogonal`        | `exp(-iα (X⊗Y − Y⊗X)/2)` (real)                            |
//! | `Gaussian`          | `exp(Σ_ab H_ab γ_a γ_b)` on the four bond Majoranas        |
//! | `Haar`              | Haar-random `U(d²)`                                        |
//! | `QutritClifford`    | random words in qutrit Clifford generators                  |
//! | `MonomialClifford`  | uniform over the 768 monomial two-qubit Cliffords          |
//!
//! Every draw goes through [`EnsembleSpec::draw`], which applies the dilution
//! coin and always consumes the gate sample so that streams stay aligned
//! across dilution values.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::dense::{qudit_clock, qudit_shift, Gate};
use crate::error::{Error, Result};
use crate::linalg::{expm_hermitian, C64, CMatrix, I, ONE, ZERO};
use crate::pauli::{Pauli, PauliString};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Coherence,
    Orthogonal,
    Gaussian,
    Haar,
    QutritClifford,
    MonomialClifford,
}

impl Family {
    pub fn local_dim(self) -> Option<usize> {
        match self {
            Family::QutritClifford => Some(3),
            Family::Haar => None,
            _ => Some(2),
        }
    }
}

pub const DEFAULT_SWAP_PROBABILITY: f64 = 0.5;
pub const DEFAULT_GAUSSIAN_SCALE: f64 = 1.0;
pub const DEFAULT_CLIFFORD_WORD_LENGTH: usize = 32;

/// A gate family with its dilution probability and sampling knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub family: Family,
    pub local_dim: usize,
    pub epsilon: f64,
    /// Probability of the SWAP factor in the coherence family.
    pub swap_probability: f64,
    /// Standard deviation of the entries of `H` in the Gaussian family.
    pub gaussian_scale: f64,
    /// Generator-word length for qutrit Cliffords.
    pub clifford_word_length: usize,
}

impl EnsembleSpec {
    pub fn new(family: Family, local_dim: usize, epsilon: f64) -> Result<Self> {
        let spec = Self {
            family,
            local_dim,
            epsilon,
            swap_probability: DEFAULT_SWAP_PROBABILITY,
            gaussian_scale: DEFAULT_GAUSSIAN_SCALE,
            clifford_word_length: DEFAULT_CLIFFORD_WORD_LENGTH,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::InvalidParameter(format!(
                "epsilon {} outside [0, 1]",
                self.epsilon
            )));
        }
        if !(0.0..=1.0).contains(&self.swap_probability) {
            return Err(Error::InvalidParameter(format!(
                "swap_probability {} outside [0, 1]",
                self.swap_probability
            )));
        }
        if !(self.gaussian_scale.is_finite() && self.gaussian_scale >= 0.0) {
            return Err(Error::InvalidParameter("gaussian_scale must be ≥ 0".into()));
        }
        match self.family.local_dim() {
            Some(d) if d != self.local_dim => Err(Error::InvalidParameter(format!(
                "{:?} gates need d={d}, got d={}",
                self.family, self.local_dim
            ))),
            None if !matches!(self.local_dim, 2 | 3) => Err(Error::UnsupportedDim(self.local_dim)),
            _ => Ok(()),
        }
    }

    /// Undiluted sample from the family.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Gate {
        match self.family {
            Family::Coherence => sample_coherence_gate(rng, self.swap_probability),
            Family::Orthogonal => sample_orthogonal_gate(rng),
            Family::Gaussian => sample_gaussian_gate(rng, self.gaussian_scale),
            Family::Haar => sample_haar_gate(rng, self.local_dim),
            Family::QutritClifford => sample_qutrit_clifford(rng, self.clifford_word_length),
            Family::MonomialClifford => {
                let gates = enumerate_monomial_cliffords();
                gates[rng.random_range(0..gates.len())].clone()
            }
        }
    }

    /// Diluted draw: `Some(gate)` with probability `epsilon`, `None` for the
    /// identity. The gate is sampled either way.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<Gate> {
        let coin: f64 = rng.random();
        let gate = self.sample(rng);
        (coin < self.epsilon).then_some(gate)
    }
}

/// With probability `epsilon` returns `sampler(rng)`, else the identity. The
/// sampler runs regardless of the coin.
pub fn dilute<R, F>(rng: &mut R, epsilon: f64, sampler: F) -> Result<Gate>
where
    R: Rng + ?Sized,
    F: FnOnce(&mut R) -> Gate,
{
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidParameter(format!("epsilon {epsilon} outside [0, 1]")));
    }
    let coin: f64 = rng.random();
    let gate = sampler(rng);
    if coin < epsilon {
        Ok(gate)
    } else {
        Ok(Gate::identity(gate.arity(), gate.local_dim()))
    }
}

/// `exp(-i Σ_{a,b∈{0,1}} α_ab Z^a⊗Z^b) · S` with `S` the SWAP when `swap`.
pub fn coherence_gate(alphas: [[f64; 2]; 2], swap: bool) -> Gate {
    let mut m = CMatrix::zeros(4, 4);
    for z1 in 0..2 {
        for z2 in 0..2 {
            let mut angle = 0.0;
            for (a, row) in alphas.iter().enumerate() {
                for (b, alpha) in row.iter().enumerate() {
                    let parity = (a * z1 + b * z2) % 2;
                    angle += if parity == 0 { *alpha } else { -*alpha };
                }
            }
            m[(2 * z1 + z2, 2 * z1 + z2)] = C64::from_polar(1.0, -angle);
        }
    }
    if swap {
        m *= Gate::swap(2).matrix();
    }
    Gate::new(2, 2, m).expect("phase-dressed permutation is unitary")
}

pub fn sample_coherence_gate<R: Rng + ?Sized>(rng: &mut R, swap_probability: f64) -> Gate {
    let mut alphas = [[0.0; 2]; 2];
    for row in alphas.iter_mut() {
        for a in row.iter_mut() {
            *a = rng.random_range(0.0..2.0 * PI);
        }
    }
    let swap = rng.random::<f64>() < swap_probability;
    coherence_gate(alphas, swap)
}

/// Hermitian generator `(X⊗Y − Y⊗X)/2`.
pub fn orthogonal_generator() -> CMatrix {
    let xy = PauliString::new(vec![Pauli::X, Pauli::Y]).matrix();
    let yx = PauliString::new(vec![Pauli::Y, Pauli::X]).matrix();
    (xy - yx) * C64::new(0.5, 0.0)
}

/// `exp(-iα (X⊗Y − Y⊗X)/2)`.
pub fn orthogonal_gate(alpha: f64) -> Gate {
    let u = expm_hermitian(&orthogonal_generator(), alpha);
    Gate::new(2, 2, u).expect("exponential of a Hermitian generator is unitary")
}

pub fn sample_orthogonal_gate<R: Rng + ?Sized>(rng: &mut R) -> Gate {
    orthogonal_gate(rng.random_range(0.0..2.0 * PI))
}

/// Bond Majoranas `γ₁=X⊗I, γ₂=Y⊗I, γ₃=Z⊗X, γ₄=Z⊗Y`, indexed from 0.
pub fn bond_majoranas() -> [PauliString; 4] {
    use Pauli::*;
    [
        PauliString::new(vec![X, I]),
        PauliString::new(vec![Y, I]),
        PauliString::new(vec![Z, X]),
        PauliString::new(vec![Z, Y]),
    ]
}

/// Gaussian gate `exp(Σ_{a,b} H_ab γ_a γ_b)` for real antisymmetric 4×4 `H`,
/// i.e. `exp(-i G)` with Hermitian `G = i Σ H_ab γ_a γ_b`. It rotates the
/// Majorana correlation matrix as `M → e^{4H} M e^{-4H}`.
pub fn gaussian_gate(h: &DMatrix<f64>) -> Result<Gate> {
    if h.nrows() != 4 || h.ncols() != 4 {
        return Err(Error::DimensionMismatch("H must be 4x4".into()));
    }
    if (h + h.transpose()).amax() > 1e-12 {
        return Err(Error::InvalidParameter("H must be antisymmetric".into()));
    }
    let gammas = bond_majoranas();
    let mut g = CMatrix::zeros(4, 4);
    for a in 0..4 {
        for b in 0..4 {
            if a != b && h[(a, b)] != 0.0 {
                let prod = (&gammas[a] * &gammas[b]).matrix();
                g += prod * (I * h[(a, b)]);
            }
        }
    }
    // symmetrize round-off before the Hermitian eigendecomposition
    let g = (&g + g.adjoint()) * C64::new(0.5, 0.0);
    Gate::new(2, 2, expm_hermitian(&g, 1.0))
}

/// Antisymmetric `H` with i.i.d. normal upper-triangle entries.
pub fn sample_antisymmetric<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(4, 4);
    for a in 0..4 {
        for b in a + 1..4 {
            let v: f64 = rng.sample(StandardNormal);
            h[(a, b)] = scale * v;
            h[(b, a)] = -scale * v;
        }
    }
    h
}

pub fn sample_gaussian_gate<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> Gate {
    gaussian_gate(&sample_antisymmetric(rng, scale)).expect("antisymmetric by construction")
}

/// Haar-random `U(d²)`: complex Ginibre matrix, QR, phases of `R`'s diagonal
/// moved into `Q`.
pub fn sample_haar_gate<R: Rng + ?Sized>(rng: &mut R, local_dim: usize) -> Gate {
    let dim = local_dim * local_dim;
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)) * scale
    });
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..dim {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { ONE };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    Gate::new(2, local_dim, q).expect("QR factor is unitary")
}

fn permutation_matrix(perm: &[usize; 4]) -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    for (src, &dst) in perm.iter().enumerate() {
        m[(dst, src)] = ONE;
    }
    m
}

/// Closure of a generating set under left multiplication, starting from the
/// identity, deduplicated by `key`. Breadth-first so the order is fixed.
fn closure<K: PartialEq>(generators: &[CMatrix], key: impl Fn(&CMatrix) -> K) -> Vec<CMatrix> {
    let n = generators[0].nrows();
    let mut elements = vec![CMatrix::identity(n, n)];
    let mut keys = vec![key(&elements[0])];
    let mut frontier = 0;
    while frontier < elements.len() {
        let current = elements[frontier].clone();
        frontier += 1;
        for g in generators {
            let next = g * &current;
            let k = key(&next);
            if !keys.contains(&k) {
                keys.push(k);
                elements.push(next);
            }
        }
    }
    elements
}

/// Phase of a unit-modulus entry in units of π/4.
fn eighth_turns(z: C64) -> i64 {
    (z.arg() / (PI / 4.0)).round().rem_euclid(8.0) as i64
}

/// The 768 two-qubit Cliffords (mod global phase) with monomial matrices,
/// ordered as `D·P` with index `32·p + d`; index 0 is the identity.
pub fn enumerate_monomial_cliffords() -> &'static [Gate] {
    static GATES: OnceLock<Vec<Gate>> = OnceLock::new();
    GATES.get_or_init(|| {
        // |z1 z2⟩ ↦ index 2 z1 + z2
        let x1 = permutation_matrix(&[2, 3, 0, 1]);
        let x2 = permutation_matrix(&[1, 0, 3, 2]);
        let cnot12 = permutation_matrix(&[0, 1, 3, 2]);
        let cnot21 = permutation_matrix(&[0, 3, 2, 1]);
        let swap = permutation_matrix(&[0, 2, 1, 3]);
        let perms = closure(&[x1, x2, cnot12, cnot21, swap], |m| {
            (0..4)
                .map(|c| (0..4).position(|r| m[(r, c)] != ZERO).unwrap())
                .collect::<Vec<_>>()
        });

        let diag = |d: [C64; 4]| CMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&d));
        let s1 = diag([ONE, ONE, I, I]);
        let s2 = diag([ONE, I, ONE, I]);
        let cz = diag([ONE, ONE, ONE, -ONE]);
        let z1 = diag([ONE, ONE, -ONE, -ONE]);
        let z2 = diag([ONE, -ONE, ONE, -ONE]);
        let diags = closure(&[s1, s2, cz, z1, z2], |m| {
            (0..4).map(|k| eighth_turns(m[(k, k)])).collect::<Vec<_>>()
        });

        let mut gates = Vec::with_capacity(perms.len() * diags.len());
        for p in &perms {
            for d in &diags {
                gates.push(Gate::new(2, 2, d * p).expect("monomial Clifford is unitary"));
            }
        }
        gates
    })
}

/// Qutrit Clifford generators: `F, S, X, Z` on each qutrit, `CZ`, and `SUM`
/// in both orientations.
pub fn qutrit_clifford_generators() -> &'static [CMatrix] {
    static GENS: OnceLock<Vec<CMatrix>> = OnceLock::new();
    GENS.get_or_init(|| {
        let d = 3;
        let omega = |k: usize| C64::from_polar(1.0, 2.0 * PI * (k % d) as f64 / d as f64);
        let f = CMatrix::from_fn(d, d, |j, k| omega(j * k) / (d as f64).sqrt());
        let s = CMatrix::from_diagonal(&nalgebra::DVector::from_fn(d, |k, _| omega(k * (k + d - 1) / 2)));
        let x = qudit_shift(d);
        let z = qudit_clock(d);
        let id = CMatrix::identity(d, d);
        let mut gens = Vec::new();
        for single in [&f, &s, &x, &z] {
            gens.push(single.kronecker(&id));
            gens.push(id.kronecker(single));
        }
        let cz = CMatrix::from_diagonal(&nalgebra::DVector::from_fn(9, |k, _| omega((k / 3) * (k % 3))));
        gens.push(cz);
        let mut sum12 = CMatrix::zeros(9, 9);
        let mut sum21 = CMatrix::zeros(9, 9);
        for j in 0..3 {
            for k in 0..3 {
                sum12[(3 * j + (j + k) % 3, 3 * j + k)] = ONE;
                sum21[(3 * ((j + k) % 3) + k, 3 * j + k)] = ONE;
            }
        }
        gens.push(sum12);
        gens.push(sum21);
        gens
    })
}

/// Product of generators `word[n-1] ⋯ word[0]` (first letter acts first).
pub fn qutrit_clifford_word(word: &[usize]) -> Result<Gate> {
    let gens = qutrit_clifford_generators();
    let mut u = CMatrix::identity(9, 9);
    for &letter in word {
        let g = gens.get(letter).ok_or_else(|| {
            Error::InvalidParameter(format!("generator index {letter} out of range"))
        })?;
        u = g * u;
    }
    Gate::new(2, 3, u)
}

pub fn sample_qutrit_clifford<R: Rng + ?Sized>(rng: &mut R, word_length: usize) -> Gate {
    let n_gens = qutrit_clifford_generators().len();
    let word: Vec<usize> = (0..word_length).map(|_| rng.random_range(0..n_gens)).collect();
    qutrit_clifford_word(&word).expect("letters in range")
}
