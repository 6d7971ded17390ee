//! Dense statevector engine for chains of qubits (`d = 2`) or qutrits (`d = 3`).
//!
//! Amplitudes are stored with site 0 as the most significant base-`d` digit.
//! Two-site gates act on any ordered pair of distinct sites; the first site of
//! the pair is the more significant digit of the gate's local index, so the
//! periodic wrap bond `(N-1, 0)` needs no reshuffling.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{
    self, expm_hermitian, hermitian_eigenvalues, hermiticity_deviation, unitarity_deviation, C64,
    CMatrix, ONE, ZERO,
};
use crate::pauli::{Pauli, PauliString};

const NORM_TOL: f64 = 1e-10;
const KET_NORM_TOL: f64 = 1e-8;
const UNITARY_TOL: f64 = 1e-10;
/// Eigenvalues at or below this are treated as exact zeros in entropies.
pub const EIGEN_CLIP: f64 = 1e-12;
/// Eigenvalues below minus this signal an invalid density matrix.
pub const EIGEN_HARD_ERROR: f64 = 1e-8;

fn check_dim(local_dim: usize) -> Result<()> {
    match local_dim {
        2 | 3 => Ok(()),
        d => Err(Error::UnsupportedDim(d)),
    }
}

/// Pure state of `n_sites` qudits.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    n_sites: usize,
    local_dim: usize,
    amps: Vec<C64>,
}

impl PureState {
    pub fn from_amplitudes(n_sites: usize, local_dim: usize, amps: Vec<C64>) -> Result<Self> {
        check_dim(local_dim)?;
        let len = local_dim.pow(n_sites as u32);
        if amps.len() != len {
            return Err(Error::DimensionMismatch(format!(
                "expected {len} amplitudes, got {}",
                amps.len()
            )));
        }
        let norm_sq: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm_sq });
        }
        Ok(Self { n_sites, local_dim, amps })
    }

    /// Computational basis state `|digits⟩`.
    pub fn basis(n_sites: usize, local_dim: usize, digits: &[usize]) -> Result<Self> {
        check_dim(local_dim)?;
        if digits.len() != n_sites || digits.iter().any(|&v| v >= local_dim) {
            return Err(Error::DimensionMismatch("basis digits".into()));
        }
        let idx = digits.iter().fold(0, |acc, &v| acc * local_dim + v);
        let mut amps = vec![ZERO; local_dim.pow(n_sites as u32)];
        amps[idx] = ONE;
        Ok(Self { n_sites, local_dim, amps })
    }

    /// Haar-random pure state (normalized complex Gaussian vector).
    pub fn random<R: Rng + ?Sized>(n_sites: usize, local_dim: usize, rng: &mut R) -> Result<Self> {
        check_dim(local_dim)?;
        let len = local_dim.pow(n_sites as u32);
        let mut amps: Vec<C64> = (0..len)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= norm);
        Ok(Self { n_sites, local_dim, amps })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn to_vector(&self) -> nalgebra::DVector<C64> {
        nalgebra::DVector::from_column_slice(&self.amps)
    }

    /// `|⟨self|other⟩|`.
    pub fn overlap(&self, other: &PureState) -> C64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    fn stride(&self, site: usize) -> usize {
        self.local_dim.pow((self.n_sites - 1 - site) as u32)
    }

    /// Applies a two-site gate in place to the ordered pair `(x, y)`.
    pub fn apply_gate2(&mut self, gate: &Gate, x: usize, y: usize) -> Result<()> {
        if gate.arity != 2 || gate.local_dim != self.local_dim {
            return Err(Error::DimensionMismatch(format!(
                "gate arity {} dim {} on a d={} chain",
                gate.arity, gate.local_dim, self.local_dim
            )));
        }
        if x >= self.n_sites || y >= self.n_sites || x == y {
            return Err(Error::InvalidSites(format!(
                "({x}, {y}) on {} sites",
                self.n_sites
            )));
        }
        let d = self.local_dim;
        let dd = d * d;
        let g = gate.row_major();
        let (sx, sy) = (self.stride(x), self.stride(y));
        let (lo, hi) = if sx < sy { (sx, sy) } else { (sy, sx) };
        let mut offsets = [0usize; 9];
        for a in 0..d {
            for b in 0..d {
                offsets[a * d + b] = a * sx + b * sy;
            }
        }
        // nonzero entries per row; monomial gates keep one per row
        let mut entries = [[(0usize, ZERO); 9]; 9];
        let mut counts = [0usize; 9];
        for i in 0..dd {
            for j in 0..dd {
                let v = g[i * dd + j];
                if v != ZERO {
                    entries[i][counts[i]] = (offsets[j], v);
                    counts[i] += 1;
                }
            }
        }
        let mut buf = [ZERO; 9];
        let len = self.amps.len();
        // bases: every index whose digits at x and y are zero
        for outer in (0..len).step_by(hi * d) {
            for mid in (outer..outer + hi).step_by(lo * d) {
                for base in mid..mid + lo {
                    for i in 0..dd {
                        let row = &entries[i][..counts[i]];
                        buf[i] = row.iter().fold(ZERO, |acc, &(off, v)| acc + v * self.amps[base + off]);
                    }
                    for i in 0..dd {
                        self.amps[base + offsets[i]] = buf[i];
                    }
                }
            }
        }
        Ok(())
    }

    /// Applies a one-site gate in place.
    pub fn apply_gate1(&mut self, gate: &Gate, x: usize) -> Result<()> {
        if gate.arity != 1 || gate.local_dim != self.local_dim {
            return Err(Error::DimensionMismatch("one-site gate".into()));
        }
        if x >= self.n_sites {
            return Err(Error::InvalidSites(format!("{x} on {} sites", self.n_sites)));
        }
        let d = self.local_dim;
        let g = gate.row_major();
        let s = self.stride(x);
        let mut buf = [ZERO; 3];
        for k in 0..self.amps.len() / d {
            let base = (k / s) * s * d + k % s;
            for j in 0..d {
                buf[j] = self.amps[base + j * s];
            }
            for i in 0..d {
                self.amps[base + i * s] = (0..d).map(|j| g[i * d + j] * buf[j]).sum();
            }
        }
        Ok(())
    }

    /// Applies a full `d^N × d^N` matrix. Used by oracles and small systems.
    pub fn apply_dense(&mut self, u: &CMatrix) -> Result<()> {
        if u.nrows() != self.amps.len() || u.ncols() != self.amps.len() {
            return Err(Error::DimensionMismatch("global operator".into()));
        }
        let v = u * self.to_vector();
        self.amps.copy_from_slice(v.as_slice());
        Ok(())
    }
}

/// `state` with `gate` applied on the ordered site pair `sites`.
pub fn apply_two_site_gate(state: &PureState, gate: &Gate, sites: (usize, usize)) -> Result<PureState> {
    let mut out = state.clone();
    out.apply_gate2(gate, sites.0, sites.1)?;
    Ok(out)
}

/// Unitary acting on one or two qudits.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    arity: usize,
    local_dim: usize,
    matrix: CMatrix,
    row_major: Vec<C64>,
}

impl Gate {
    pub fn new(arity: usize, local_dim: usize, matrix: CMatrix) -> Result<Self> {
        Self::with_tolerance(arity, local_dim, matrix, UNITARY_TOL)
    }

    /// Like [`Gate::new`] but with a caller-chosen unitarity tolerance.
    pub fn with_tolerance(arity: usize, local_dim: usize, matrix: CMatrix, tol: f64) -> Result<Self> {
        check_dim(local_dim)?;
        if !(1..=2).contains(&arity) {
            return Err(Error::InvalidParameter(format!("gate arity {arity}")));
        }
        let dim = local_dim.pow(arity as u32);
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "gate matrix {}x{} for dimension {dim}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let deviation = unitarity_deviation(&matrix);
        if deviation > tol {
            return Err(Error::NotUnitary { deviation });
        }
        let row_major = matrix.transpose().as_slice().to_vec();
        Ok(Self { arity, local_dim, matrix, row_major })
    }

    pub fn identity(arity: usize, local_dim: usize) -> Self {
        let dim = local_dim.pow(arity as u32);
        Self::new(arity, local_dim, CMatrix::identity(dim, dim)).expect("identity is unitary")
    }

    /// Two-site SWAP.
    pub fn swap(local_dim: usize) -> Self {
        let dim = local_dim * local_dim;
        let mut m = CMatrix::zeros(dim, dim);
        for a in 0..local_dim {
            for b in 0..local_dim {
                m[(b * local_dim + a, a * local_dim + b)] = ONE;
            }
        }
        Self::new(2, local_dim, m).expect("swap is unitary")
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    fn row_major(&self) -> &[C64] {
        &self.row_major
    }

    pub fn is_identity(&self) -> bool {
        let n = self.matrix.nrows();
        self.matrix
            .iter()
            .enumerate()
            .all(|(k, z)| {
                let (i, j) = (k % n, k / n);
                *z == if i == j { ONE } else { ZERO }
            })
    }

    /// True when every row and column holds exactly one nonzero entry.
    pub fn is_monomial(&self, tol: f64) -> bool {
        let n = self.matrix.nrows();
        let row_ok = (0..n).all(|i| (0..n).filter(|&j| self.matrix[(i, j)].norm() > tol).count() == 1);
        let col_ok = (0..n).all(|j| (0..n).filter(|&i| self.matrix[(i, j)].norm() > tol).count() == 1);
        row_ok && col_ok
    }
}

/// Hermitian unit-trace positive matrix on `n_sites` qudits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_sites: usize,
    local_dim: usize,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validates hermiticity, trace and positivity within `1e-10`.
    pub fn new(n_sites: usize, local_dim: usize, matrix: CMatrix) -> Result<Self> {
        Self::with_tolerance(n_sites, local_dim, matrix, 1e-10)
    }

    pub fn with_tolerance(n_sites: usize, local_dim: usize, matrix: CMatrix, tol: f64) -> Result<Self> {
        check_dim(local_dim)?;
        let dim = local_dim.pow(n_sites as u32);
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "density matrix {}x{} for {n_sites} sites of dimension {local_dim}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let herm = hermiticity_deviation(&matrix);
        if herm > tol {
            return Err(Error::InvalidDensityMatrix(format!("not Hermitian ({herm:e})")));
        }
        let tr = matrix.trace();
        if (tr - ONE).norm() > tol {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr}")));
        }
        let min_ev = hermitian_eigenvalues(&matrix)[0];
        if min_ev < -tol {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {min_ev:e}"
            )));
        }
        Ok(Self { n_sites, local_dim, matrix })
    }

    pub(crate) fn new_unchecked(n_sites: usize, local_dim: usize, matrix: CMatrix) -> Self {
        Self { n_sites, local_dim, matrix }
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn from_pure(state: &PureState) -> Self {
        let v = state.to_vector();
        Self::new_unchecked(state.n_sites, state.local_dim, &v * v.adjoint())
    }

    pub fn maximally_mixed(n_sites: usize, local_dim: usize) -> Self {
        let dim = local_dim.pow(n_sites as u32);
        Self::new_unchecked(
            n_sites,
            local_dim,
            CMatrix::identity(dim, dim) / C64::new(dim as f64, 0.0),
        )
    }

    /// Tensor product `self ⊗ other`.
    pub fn tensor(&self, other: &DensityMatrix) -> Result<Self> {
        if self.local_dim != other.local_dim {
            return Err(Error::DimensionMismatch("local dimensions differ".into()));
        }
        Ok(Self::new_unchecked(
            self.n_sites + other.n_sites,
            self.local_dim,
            self.matrix.kronecker(&other.matrix),
        ))
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }
}

/// `|local_ket⟩^{⊗ n_sites}`.
pub fn product_state(n_sites: usize, local_dim: usize, local_ket: &[C64]) -> Result<PureState> {
    check_dim(local_dim)?;
    if local_ket.len() != local_dim {
        return Err(Error::DimensionMismatch(format!(
            "ket of length {} for local dimension {local_dim}",
            local_ket.len()
        )));
    }
    let norm_sq: f64 = local_ket.iter().map(|a| a.norm_sqr()).sum();
    if (norm_sq - 1.0).abs() > KET_NORM_TOL {
        return Err(Error::NotNormalized { norm_sq });
    }
    let mut amps = vec![ONE];
    for _ in 0..n_sites {
        let mut next = Vec::with_capacity(amps.len() * local_dim);
        for a in &amps {
            next.extend(local_ket.iter().map(|k| a * k));
        }
        amps = next;
    }
    Ok(PureState { n_sites, local_dim, amps })
}

/// Families of tilted product states `exp(-iθ Σ_i G_i)|0…0⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TiltKind {
    /// `G = Y/2`, qubits.
    Y,
    /// `G = X/2`, qubits.
    X,
    /// `G = X + X†` with the qutrit shift `X`.
    QutritX,
}

impl TiltKind {
    pub fn local_dim(self) -> usize {
        match self {
            TiltKind::Y | TiltKind::X => 2,
            TiltKind::QutritX => 3,
        }
    }

    /// The one-site Hermitian generator `G`.
    pub fn generator(self) -> CMatrix {
        let half = C64::new(0.5, 0.0);
        match self {
            TiltKind::Y => Pauli::Y.matrix() * half,
            TiltKind::X => Pauli::X.matrix() * half,
            TiltKind::QutritX => {
                let x = qudit_shift(3);
                &x + x.adjoint()
            }
        }
    }

    /// `exp(-iθG)|0⟩`.
    pub fn local_ket(self, theta: f64) -> Vec<C64> {
        let u = expm_hermitian(&self.generator(), theta);
        u.column(0).iter().copied().collect()
    }
}

pub fn tilted_state(n_sites: usize, local_dim: usize, kind: TiltKind, theta: f64) -> Result<PureState> {
    if kind.local_dim() != local_dim {
        return Err(Error::InvalidParameter(format!(
            "tilt {kind:?} requires d={}, got d={local_dim}",
            kind.local_dim()
        )));
    }
    product_state(n_sites, local_dim, &kind.local_ket(theta))
}

/// Generalized shift `X = Σ_m |m⟩⟨m+1 mod d|`.
pub fn qudit_shift(d: usize) -> CMatrix {
    let mut x = CMatrix::zeros(d, d);
    for m in 0..d {
        x[(m, (m + 1) % d)] = ONE;
    }
    x
}

/// Generalized clock `Z = Σ_m ω^m |m⟩⟨m|`, `ω = e^{2πi/d}`.
pub fn qudit_clock(d: usize) -> CMatrix {
    let mut z = CMatrix::zeros(d, d);
    for m in 0..d {
        z[(m, m)] = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * m as f64 / d as f64);
    }
    z
}

fn validate_region(n_sites: usize, region: &[usize]) -> Result<()> {
    if region.is_empty() {
        return Err(Error::InvalidRegion("empty region".into()));
    }
    let mut seen = vec![false; n_sites];
    for &s in region {
        if s >= n_sites {
            return Err(Error::InvalidRegion(format!("site {s} out of range")));
        }
        if std::mem::replace(&mut seen[s], true) {
            return Err(Error::InvalidRegion(format!("site {s} repeated")));
        }
    }
    Ok(())
}

/// Reduced state on `region`; tensor factors follow the order of `region`,
/// the complement is traced out.
pub fn reduced_density(state: &PureState, region: &[usize]) -> Result<DensityMatrix> {
    let n = state.n_sites;
    let d = state.local_dim;
    validate_region(n, region)?;
    let n_a = region.len();
    let dim_a = d.pow(n_a as u32);
    let dim_b = d.pow((n - n_a) as u32);

    if region.iter().enumerate().all(|(pos, &s)| pos == s) {
        // prefix: amplitudes already form the dim_a × dim_b matrix row by row
        let rows: Vec<&[C64]> = state.amps.chunks_exact(dim_b).collect();
        let mut rho = CMatrix::zeros(dim_a, dim_a);
        for i in 0..dim_a {
            for j in 0..=i {
                let v: C64 = rows[i].iter().zip(rows[j]).map(|(a, b)| a * b.conj()).sum();
                rho[(i, j)] = v;
                rho[(j, i)] = v.conj();
            }
        }
        return Ok(DensityMatrix::new_unchecked(n_a, d, rho));
    }

    // weight of each site's digit in the (a, b) indices
    let mut weight_a = vec![0usize; n];
    let mut in_a = vec![false; n];
    for (pos, &s) in region.iter().enumerate() {
        weight_a[s] = d.pow((n_a - 1 - pos) as u32);
        in_a[s] = true;
    }
    let complement: Vec<usize> = (0..n).filter(|s| !in_a[*s]).collect();
    let mut weight_b = vec![0usize; n];
    for (pos, &s) in complement.iter().enumerate() {
        weight_b[s] = d.pow((complement.len() - 1 - pos) as u32);
    }

    let mut psi = CMatrix::zeros(dim_a, dim_b);
    let mut digits = vec![0usize; n];
    let (mut a, mut b) = (0usize, 0usize);
    for amp in &state.amps {
        psi[(a, b)] = *amp;
        // odometer increment, last site fastest
        for s in (0..n).rev() {
            let w = if in_a[s] { weight_a[s] } else { weight_b[s] };
            let acc = if in_a[s] { &mut a } else { &mut b };
            if digits[s] + 1 < d {
                digits[s] += 1;
                *acc += w;
                break;
            }
            *acc -= digits[s] * w;
            digits[s] = 0;
        }
    }
    let rho = &psi * psi.adjoint();
    Ok(DensityMatrix::new_unchecked(n_a, d, rho))
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    entropy_of_spectrum(&rho.eigenvalues())
}

/// `-Σ λ log₂ λ` with clipping of round-off negatives.
pub(crate) fn entropy_of_spectrum(eigenvalues: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &l in eigenvalues {
        if l < -EIGEN_HARD_ERROR {
            return Err(Error::NegativeEigenvalue(l));
        }
        if l > EIGEN_CLIP {
            s -= l * l.log2();
        }
    }
    Ok(s.max(0.0))
}

/// `⟨ψ|P|ψ⟩` for a qubit Pauli string (phase included).
pub fn pauli_string_expectation(state: &PureState, string: &PauliString) -> Result<C64> {
    if state.local_dim != 2 {
        return Err(Error::UnsupportedDim(state.local_dim));
    }
    if string.len() != state.n_sites {
        return Err(Error::DimensionMismatch(format!(
            "Pauli string of length {} on {} sites",
            string.len(),
            state.n_sites
        )));
    }
    let n = state.n_sites;
    let (mut xmask, mut zmask, mut n_y) = (0usize, 0usize, 0u8);
    for (s, op) in string.ops.iter().enumerate() {
        let bit = 1usize << (n - 1 - s);
        match op {
            Pauli::I => {}
            Pauli::X => xmask |= bit,
            Pauli::Y => {
                xmask |= bit;
                zmask |= bit;
                n_y += 1;
            }
            Pauli::Z => zmask |= bit,
        }
    }
    // P|i⟩ = i^{n_y} (-1)^{|i & zmask|} |i ^ xmask⟩
    let mut acc = ZERO;
    for (i, amp) in state.amps.iter().enumerate() {
        let term = state.amps[i ^ xmask].conj() * amp;
        if (i & zmask).count_ones() % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    let phase = PauliString { phase: (string.phase + n_y) % 4, ops: vec![] }.coefficient();
    Ok(phase * acc)
}

/// Real `d^n × d^n` matrix of the dense operator `⊗ ops`, site 0 first.
pub fn kron_all(ops: &[CMatrix]) -> CMatrix {
    ops.iter()
        .fold(CMatrix::from_element(1, 1, ONE), |acc, m| linalg::kron(&acc, m))
}

/// Embeds a two-site operator acting on `(x, y)` into the full chain.
/// Oracle helper for small `n`.
pub fn embed_two_site(op: &CMatrix, n_sites: usize, local_dim: usize, x: usize, y: usize) -> CMatrix {
    let d = local_dim;
    let dim = d.pow(n_sites as u32);
    let stride = |s: usize| d.pow((n_sites - 1 - s) as u32);
    let (sx, sy) = (stride(x), stride(y));
    let mut full = CMatrix::zeros(dim, dim);
    for col in 0..dim {
        let (ax, ay) = ((col / sx) % d, (col / sy) % d);
        let rest = col - ax * sx - ay * sy;
        for bx in 0..d {
            for by in 0..d {
                let v = op[(bx * d + by, ax * d + ay)];
                if v != ZERO {
                    full[(rest + bx * sx + by * sy, col)] += v;
                }
            }
        }
    }
    full
}

/// Real part of a complex matrix, element-wise.
pub fn real_part(m: &CMatrix) -> DMatrix<f64> {
    m.map(|z| z.re)
}
