//! Reset channels of a Floquet brickwork chain and their spectra.
//!
//! The first `N_A` qubits form the system; the rest is an environment reset
//! to `𝟙/2^{N−N_A}` after every period:
//! `ℰ[ρ] = Tr_B[U (ρ ⊗ 𝟙_B/d_B) U†]`. The channel acts on column-vectorized
//! matrices, `vec(ρ)[i + j d_A] = ρ_ij`. Its spectrum `μ_k` is sorted by
//! descending modulus; `ln μ_k` is the matching generator eigenvalue.

use nalgebra::DVector;

use crate::dense::{DensityMatrix, Gate, PureState};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, hermiticity_deviation, polar_unitary, unitarity_deviation, C64, CMatrix, ONE, ZERO};
use crate::monotones::coherence;
use crate::protocols::{brickwork_layer, Boundary, TimeSeries};

pub const TRACE_PRESERVATION_TOL: f64 = 1e-9;
pub const CHOI_PSD_TOL: f64 = 1e-8;
pub const SPECTRAL_RADIUS_TOL: f64 = 1e-9;
/// Eigenvalues closer than this are treated as one cluster.
pub const CLUSTER_TOL: f64 = 1e-6;
/// Singular values of `S − μ` below this count as null directions.
pub const NULL_TOL: f64 = 1e-7;
pub const BIORTHONORMAL_TOL: f64 = 1e-6;
/// Modulus gap below which `|μ_2|` and `|μ_3|` form one block.
pub const MODULUS_DEGENERACY_TOL: f64 = 1e-9;
pub const TRAJECTORY_TOL: f64 = 1e-8;
/// Unitarity tolerance of the fixed gate, whose entries carry 8 digits.
pub const FIXED_GATE_TOL: f64 = 2e-8;
pub const MAX_SITES: usize = 12;

/// Fixed monomial two-qubit gate of the reference Floquet chain.
pub fn fixed_floquet_gate() -> Gate {
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 3)] = C64::new(0.79517062, -0.60638575);
    m[(1, 1)] = C64::new(0.6283294, -0.7779474);
    m[(2, 2)] = C64::new(0.99984225, 0.01776183);
    m[(3, 0)] = C64::new(-0.96625112, -0.25760196);
    Gate::with_tolerance(2, 2, m, FIXED_GATE_TOL).expect("fixed gate is unitary to 8 digits")
}

/// Nearest exactly unitary gate (polar projection).
pub fn reunitarize(gate: &Gate) -> Result<Gate> {
    Gate::new(gate.arity(), gate.local_dim(), polar_unitary(gate.matrix()))
}

/// `U = L_even · L_odd` on an open chain: the layer on bonds `(0,1),(2,3),…`
/// acts first, then the layer on `(1,2),(3,4),…`.
pub fn build_floquet_unitary(gate: &Gate, n_sites: usize) -> Result<CMatrix> {
    if n_sites < 2 || n_sites % 2 != 0 || n_sites > MAX_SITES {
        return Err(Error::SizeLimit(format!("Floquet chains need even N in 2..={MAX_SITES}, got {n_sites}")));
    }
    if gate.arity() != 2 || gate.local_dim() != 2 {
        return Err(Error::DimensionMismatch("Floquet chains use two-qubit gates".into()));
    }
    let dim = 1usize << n_sites;
    let odd = brickwork_layer(1, n_sites, Boundary::Open);
    let even = brickwork_layer(2, n_sites, Boundary::Open);
    let mut u = CMatrix::zeros(dim, dim);
    let mut amps = vec![ZERO; dim];
    for c in 0..dim {
        amps.iter_mut().for_each(|a| *a = ZERO);
        amps[c] = ONE;
        let mut state = PureState::from_amplitudes(n_sites, 2, amps.clone())?;
        for &(x, y) in odd.iter().chain(&even) {
            state.apply_gate2(gate, x, y)?;
        }
        for (r, a) in state.amplitudes().iter().enumerate() {
            u[(r, c)] = *a;
        }
    }
    Ok(u)
}

pub fn vectorize(m: &CMatrix) -> DVector<C64> {
    // nalgebra storage is column-major
    DVector::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &DVector<C64>, d: usize) -> CMatrix {
    CMatrix::from_column_slice(d, d, v.as_slice())
}

/// Channel matrix on column-vectorized `2^{N_A}`-dimensional operators.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSuperoperator {
    n_a: usize,
    matrix: CMatrix,
}

impl ChannelSuperoperator {
    /// Checks trace preservation, Choi positivity and the spectral radius.
    pub fn new(n_a: usize, matrix: CMatrix) -> Result<Self> {
        let d = 1usize << n_a;
        if matrix.nrows() != d * d || matrix.ncols() != d * d {
            return Err(Error::DimensionMismatch(format!("channel on {n_a} qubits must be {0}x{0}", d * d)));
        }
        let channel = Self { n_a, matrix };
        let tp = channel.trace_preservation_deviation();
        if tp > TRACE_PRESERVATION_TOL {
            return Err(Error::ChannelInvariant(format!("trace preservation off by {tp:e}")));
        }
        let choi = channel.choi();
        let herm = hermiticity_deviation(&choi);
        if herm > CHOI_PSD_TOL {
            return Err(Error::ChannelInvariant(format!("Choi matrix not Hermitian ({herm:e})")));
        }
        let min = hermitian_eigenvalues(&((&choi + choi.adjoint()) * C64::new(0.5, 0.0)))[0];
        if min < -CHOI_PSD_TOL {
            return Err(Error::ChannelInvariant(format!("Choi eigenvalue {min:e} < 0")));
        }
        let radius = eigenvalues(&channel.matrix).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if radius > 1.0 + SPECTRAL_RADIUS_TOL {
            return Err(Error::ChannelInvariant(format!("spectral radius {radius}")));
        }
        Ok(channel)
    }

    pub fn n_a(&self) -> usize {
        self.n_a
    }

    /// Hilbert-space dimension `2^{N_A}`.
    pub fn dim(&self) -> usize {
        1 << self.n_a
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Largest entry of `vec(𝟙)ᵀ S − vec(𝟙)ᵀ`.
    pub fn trace_preservation_deviation(&self) -> f64 {
        let d = self.dim();
        (0..d * d)
            .map(|col| {
                let image: C64 = (0..d).map(|k| self.matrix[(k + k * d, col)]).sum();
                let target = if col % (d + 1) == 0 { ONE } else { ZERO };
                (image - target).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Reshuffled matrix `J[(k,i),(l,j)] = S[k + l d, i + j d]`.
    pub fn choi(&self) -> CMatrix {
        let d = self.dim();
        CMatrix::from_fn(d * d, d * d, |r, c| {
            let (k, i) = (r / d, r % d);
            let (l, j) = (c / d, c % d);
            self.matrix[(k + l * d, i + j * d)]
        })
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        unvectorize(&(&self.matrix * vectorize(rho)), self.dim())
    }
}

/// `ℰ` for the first `n_a` sites of an `n_sites`-qubit unitary.
pub fn build_channel(u: &CMatrix, n_sites: usize, n_a: usize) -> Result<ChannelSuperoperator> {
    if n_a == 0 || n_a >= n_sites {
        return Err(Error::InvalidRegion(format!("N_A = {n_a} on {n_sites} sites")));
    }
    let (da, db) = (1usize << n_a, 1usize << (n_sites - n_a));
    if u.nrows() != da * db || u.ncols() != da * db {
        return Err(Error::DimensionMismatch(format!("unitary is not {0}x{0}", da * db)));
    }
    let scale = 1.0 / db as f64;
    let mut s = CMatrix::zeros(da * da, da * da);
    for i in 0..da {
        for j in 0..da {
            for k in 0..da {
                for l in 0..da {
                    let mut acc = ZERO;
                    for b in 0..db {
                        for bp in 0..db {
                            acc += u[(k * db + bp, i * db + b)] * u[(l * db + bp, j * db + b)].conj();
                        }
                    }
                    s[(k + l * da, i + j * da)] = acc * scale;
                }
            }
        }
    }
    ChannelSuperoperator::new(n_a, s)
}

/// Eigenvalues of a general complex matrix via its Schur form, sorted by
/// descending modulus, then descending real and imaginary part.
pub fn eigenvalues(m: &CMatrix) -> Vec<C64> {
    let (_, t) = m.clone().schur().unpack();
    let mut ev: Vec<C64> = t.diagonal().iter().copied().collect();
    sort_spectrum(&mut ev);
    ev
}

fn spectral_order(a: &C64, b: &C64) -> std::cmp::Ordering {
    b.norm()
        .total_cmp(&a.norm())
        .then(b.re.total_cmp(&a.re))
        .then(b.im.total_cmp(&a.im))
}

fn sort_spectrum(ev: &mut [C64]) {
    ev.sort_by(spectral_order);
}

/// Eigenvalues of the channel, sorted.
pub fn channel_eigenvalues(channel: &ChannelSuperoperator) -> Vec<C64> {
    eigenvalues(channel.matrix())
}

/// Orthonormal basis of the approximate null space of `m`, as columns; the
/// second value is the smallest singular value outside it.
fn null_space(m: &CMatrix, tol: f64) -> (Vec<DVector<C64>>, f64) {
    let n = m.ncols();
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let mut basis = Vec::new();
    let mut gap = f64::INFINITY;
    for &k in &order {
        let sv = svd.singular_values[k];
        if sv < tol {
            basis.push(v_t.row(k).adjoint().into_owned());
        } else {
            gap = sv;
            break;
        }
    }
    (basis, gap)
}

/// Unique fixed point of the channel, normalized to unit trace.
pub fn steady_state(channel: &ChannelSuperoperator) -> Result<DensityMatrix> {
    let n = channel.matrix.nrows();
    let shifted = channel.matrix() - CMatrix::identity(n, n);
    let (basis, _) = null_space(&shifted, NULL_TOL);
    if basis.len() != 1 {
        return Err(Error::DegenerateSpectrum(format!("{} fixed points", basis.len())));
    }
    let rho = unvectorize(&basis[0], channel.dim());
    let rho = &rho / rho.trace();
    DensityMatrix::with_tolerance(channel.n_a(), 2, (&rho + rho.adjoint()) * C64::new(0.5, 0.0), 1e-8)
}

/// Biorthonormal eigen-decomposition of a diagonalizable channel.
#[derive(Debug, Clone)]
pub struct ChannelSpectrum {
    pub eigenvalues: Vec<C64>,
    /// `r_k`; the first is the unit-trace steady state.
    pub right_modes: Vec<CMatrix>,
    /// `l_k` with `Tr(l_j† r_k) = δ_jk`.
    pub left_modes: Vec<CMatrix>,
    /// Some eigenvalue cluster has more than one member.
    pub degenerate: bool,
}

impl ChannelSpectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `ln μ_k` (principal branch; `-∞` for `μ_k = 0`).
    pub fn generator_eigenvalues(&self) -> Vec<C64> {
        self.eigenvalues
            .iter()
            .map(|mu| if *mu == ZERO { C64::new(f64::NEG_INFINITY, 0.0) } else { mu.ln() })
            .collect()
    }

    /// `Tr(l_k† m)`.
    pub fn coefficient(&self, k: usize, m: &CMatrix) -> C64 {
        self.left_modes[k].iter().zip(m.iter()).map(|(l, x)| l.conj() * x).sum()
    }

    /// `Σ_k μ_k^t Tr(l_k† ρ₀) r_k`.
    pub fn reconstruct(&self, rho0: &CMatrix, t: u32) -> CMatrix {
        let d = rho0.nrows();
        let mut out = CMatrix::zeros(d, d);
        for k in 0..self.len() {
            let c = self.coefficient(k, rho0) * self.eigenvalues[k].powu(t);
            out += &self.right_modes[k] * c;
        }
        out
    }

    /// Largest `|Tr(l_j† r_k) − δ_jk|`.
    pub fn biorthonormality_deviation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.len() {
            for k in 0..self.len() {
                let target = if j == k { ONE } else { ZERO };
                worst = worst.max((self.coefficient(j, &self.right_modes[k]) - target).norm());
            }
        }
        worst
    }
}

/// Eigenvalues, right modes and biorthonormal left modes. Clusters are
/// resolved through the null space of `S − μ̄`; a cluster whose null space
/// is smaller than its multiplicity is defective and reported as an error.
pub fn channel_spectrum(channel: &ChannelSuperoperator) -> Result<ChannelSpectrum> {
    let s = channel.matrix();
    let n = s.nrows();
    let d = channel.dim();
    let raw = eigenvalues(s);

    let mut clusters: Vec<Vec<C64>> = Vec::new();
    for mu in raw {
        match clusters.iter_mut().find(|c| c.iter().any(|x| (x - mu).norm() < CLUSTER_TOL)) {
            Some(c) => c.push(mu),
            None => clusters.push(vec![mu]),
        }
    }
    let degenerate = clusters.iter().any(|c| c.len() > 1);

    let mut mus = Vec::with_capacity(n);
    let mut right = CMatrix::zeros(n, n);
    for cluster in &clusters {
        let centre = cluster.iter().sum::<C64>() / C64::new(cluster.len() as f64, 0.0);
        let shifted = s - CMatrix::identity(n, n) * centre;
        let (basis, gap) = null_space(&shifted, NULL_TOL);
        if basis.len() != cluster.len() {
            return Err(Error::DegenerateSpectrum(format!(
                "eigenvalue {centre:.3e} has multiplicity {} but {} eigenvectors (next singular value {gap:.1e}); \
                 the channel is not diagonalizable",
                cluster.len(),
                basis.len()
            )));
        }
        for v in basis {
            let col = mus.len();
            right.set_column(col, &normalize_mode(v, d));
            mus.push(if cluster.len() == 1 { cluster[0] } else { centre });
        }
    }

    // order columns by eigenvalue
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| spectral_order(&mus[a], &mus[b]));
    let right = CMatrix::from_fn(n, n, |r, c| right[(r, order[c])]);
    let mus: Vec<C64> = order.iter().map(|&k| mus[k]).collect();

    let inverse = right
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::DegenerateSpectrum("right modes are linearly dependent".into()))?;
    let right_modes: Vec<CMatrix> = (0..n).map(|k| unvectorize(&right.column(k).into_owned(), d)).collect();
    let left_modes: Vec<CMatrix> = (0..n)
        .map(|k| unvectorize(&inverse.row(k).adjoint().into_owned(), d))
        .collect();
    let spectrum = ChannelSpectrum { eigenvalues: mus, right_modes, left_modes, degenerate };

    let bio = spectrum.biorthonormality_deviation();
    if bio > BIORTHONORMAL_TOL {
        return Err(Error::DegenerateSpectrum(format!("biorthonormality off by {bio:e}")));
    }
    for k in 0..n {
        let l = vectorize(&spectrum.left_modes[k]);
        let residual = (s.adjoint() * &l - l * spectrum.eigenvalues[k].conj()).camax();
        if residual > BIORTHONORMAL_TOL {
            return Err(Error::DegenerateSpectrum(format!("left mode {k} residual {residual:e}")));
        }
    }
    if (spectrum.eigenvalues[0] - ONE).norm() > CLUSTER_TOL {
        return Err(Error::ChannelInvariant(format!("leading eigenvalue {} is not 1", spectrum.eigenvalues[0])));
    }
    Ok(spectrum)
}

/// Unit-trace for modes with nonzero trace, otherwise unit norm with the
/// largest entry real and positive.
fn normalize_mode(v: DVector<C64>, d: usize) -> DVector<C64> {
    let trace: C64 = (0..d).map(|k| v[k + k * d]).sum();
    if trace.norm() > 1e-6 {
        return v / trace;
    }
    let (idx, _) = v
        .iter()
        .enumerate()
        .fold((0, 0.0), |(bi, bn), (i, z)| if z.norm() > bn + 1e-12 { (i, z.norm()) } else { (bi, bn) });
    let phase = v[idx] / v[idx].norm();
    let v = v / phase;
    let norm = v.norm();
    v / C64::new(norm, 0.0)
}

/// `|Tr(l_2† m)|`, or the root-sum-square over every mode whose modulus
/// matches `|μ_2|`.
pub fn mode_overlap(spectrum: &ChannelSpectrum, m: &CMatrix) -> Result<f64> {
    if spectrum.len() < 2 {
        return Err(Error::DegenerateSpectrum("no slow mode".into()));
    }
    let d = spectrum.right_modes[0].nrows();
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::DimensionMismatch(format!("state must be {d}x{d}")));
    }
    let slow = spectrum.eigenvalues[1].norm();
    let sum: f64 = (1..spectrum.len())
        .filter(|&k| (spectrum.eigenvalues[k].norm() - slow).abs() < MODULUS_DEGENERACY_TOL)
        .map(|k| spectrum.coefficient(k, m).norm_sqr())
        .sum();
    Ok(sum.sqrt())
}

pub fn slow_mode_overlap(spectrum: &ChannelSpectrum, rho0: &DensityMatrix) -> Result<f64> {
    mode_overlap(spectrum, rho0.matrix())
}

#[derive(Debug, Clone)]
pub struct MarkovTrajectory {
    pub states: Vec<DensityMatrix>,
    /// Coherence of each state; zero stderr, one realization.
    pub coherence: TimeSeries,
}

/// `ρ_t = ℰ^t[ρ₀]` for `t = 0..=steps`, with coherence along the way.
pub fn evolve_markov(channel: &ChannelSuperoperator, rho0: &DensityMatrix, steps: usize) -> Result<MarkovTrajectory> {
    if rho0.dim() != channel.dim() || rho0.local_dim() != 2 {
        return Err(Error::DimensionMismatch(format!("state must live on {} qubits", channel.n_a())));
    }
    let mut states = vec![rho0.clone()];
    let mut values = vec![coherence(rho0)?];
    let mut current = rho0.matrix().clone();
    for t in 1..=steps {
        current = channel.apply(&current);
        let trace = current.trace();
        if (trace - ONE).norm() > TRAJECTORY_TOL {
            return Err(Error::InvariantDrift(format!("trace {trace} at step {t}")));
        }
        let herm = hermiticity_deviation(&current);
        if herm > TRAJECTORY_TOL {
            return Err(Error::InvariantDrift(format!("hermiticity off by {herm:e} at step {t}")));
        }
        let min = hermitian_eigenvalues(&current)[0];
        if min < -TRAJECTORY_TOL {
            return Err(Error::InvariantDrift(format!("eigenvalue {min:e} at step {t}")));
        }
        let rho = DensityMatrix::with_tolerance(channel.n_a(), 2, current.clone(), TRAJECTORY_TOL)
            .map_err(|e| Error::InvariantDrift(format!("step {t}: {e}")))?;
        values.push(coherence(&rho)?);
        states.push(rho);
    }
    let coherence = TimeSeries::new("markov", (0..=steps).collect(), values, vec![0.0; steps + 1], 1)?;
    Ok(MarkovTrajectory { states, coherence })
}

/// `(|θ⟩⟨θ|)^{⊗ n_a}` with `|θ⟩ = e^{-iYθ/2}|0⟩`.
pub fn tilted_product_density(n_a: usize, theta: f64) -> Result<DensityMatrix> {
    let ket = crate::dense::tilted_state(n_a, 2, crate::dense::TiltKind::Y, theta)?;
    Ok(DensityMatrix::from_pure(&ket))
}

/// Default analysis chain: fixed gate (optionally re-unitarized), Floquet
/// unitary and reset channel.
pub fn fixed_gate_channel(n_sites: usize, n_a: usize, reunitarized: bool) -> Result<ChannelSuperoperator> {
    let gate = fixed_floquet_gate();
    let gate = if reunitarized { reunitarize(&gate)? } else { gate };
    let u = build_floquet_unitary(&gate, n_sites)?;
    let dev = unitarity_deviation(&u);
    if dev > 2e-7 {
        return Err(Error::NotUnitary { deviation: dev });
    }
    build_channel(&u, n_sites, n_a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::sample_haar_gate;
    use crate::linalg::max_abs_diff;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn generic_channel(seed: u64) -> ChannelSuperoperator {
        let gate = sample_haar_gate(&mut ChaCha8Rng::seed_from_u64(seed), 2);
        let u = build_floquet_unitary(&gate, 4).unwrap();
        build_channel(&u, 4, 2).unwrap()
    }

    #[test]
    fn fixed_gate_entries() {
        let g = fixed_floquet_gate();
        assert_eq!(g.matrix()[(1, 1)], C64::new(0.6283294, -0.7779474));
        assert!(g.is_monomial(1e-12));
        for (r, c) in [(0, 3), (1, 1), (2, 2), (3, 0)] {
            assert!((g.matrix()[(r, c)].norm() - 1.0).abs() < FIXED_GATE_TOL);
        }
        let exact = reunitarize(&g).unwrap();
        assert!(unitarity_deviation(exact.matrix()) < 1e-14);
        assert!(max_abs_diff(exact.matrix(), g.matrix()) < 2e-8);
    }

    #[test]
    fn floquet_examples() {
        let u = build_floquet_unitary(&Gate::identity(2, 2), 4).unwrap();
        assert!(max_abs_diff(&u, &CMatrix::identity(16, 16)) < 1e-15);

        let u = build_floquet_unitary(&Gate::swap(2), 4).unwrap();
        assert!(u.iter().all(|z| *z == ZERO || *z == ONE));
        assert!(unitarity_deviation(&u) < 1e-15);
        // SWAP(1,2)·SWAP(0,1)SWAP(2,3) sends site 0 to site 2
        let mut probe = PureState::basis(4, 2, &[1, 0, 0, 0]).unwrap();
        probe.apply_dense(&u).unwrap();
        assert_eq!(probe.amplitudes()[0b0010], ONE);

        let u = build_floquet_unitary(&fixed_floquet_gate(), 6).unwrap();
        assert!(unitarity_deviation(&u) < 2e-7);
        assert!(build_floquet_unitary(&Gate::identity(2, 2), 5).is_err());
        assert!(build_floquet_unitary(&Gate::identity(2, 2), 14).is_err());
    }

    #[test]
    fn identity_channel() {
        let ch = build_channel(&CMatrix::identity(16, 16), 4, 2).unwrap();
        assert!(max_abs_diff(ch.matrix(), &CMatrix::identity(16, 16)) < 1e-15);
        let spec = channel_spectrum(&ch).unwrap();
        assert!(spec.degenerate);
        assert!(spec.eigenvalues.iter().all(|mu| (mu - ONE).norm() < 1e-12));
        assert!(matches!(steady_state(&ch), Err(Error::DegenerateSpectrum(_))));
    }

    #[test]
    fn channel_matches_partial_trace_oracle() {
        let gate = sample_haar_gate(&mut ChaCha8Rng::seed_from_u64(3), 2);
        let u = build_floquet_unitary(&gate, 4).unwrap();
        let ch = build_channel(&u, 4, 1).unwrap();
        let rho = tilted_product_density(1, 0.9).unwrap();
        let env = DensityMatrix::maximally_mixed(3, 2);
        let joint = rho.tensor(&env).unwrap();
        let evolved = &u * joint.matrix() * u.adjoint();
        // trace out sites 1..4 by summing diagonal environment blocks
        let mut oracle = CMatrix::zeros(2, 2);
        for k in 0..2 {
            for l in 0..2 {
                oracle[(k, l)] = (0..8).map(|b| evolved[(k * 8 + b, l * 8 + b)]).sum();
            }
        }
        assert!(max_abs_diff(&ch.apply(rho.matrix()), &oracle) < 1e-13);
    }

    #[test]
    fn channel_invariants_enforced() {
        let mut bad = CMatrix::identity(4, 4);
        bad[(0, 0)] = C64::new(1.1, 0.0);
        assert!(matches!(ChannelSuperoperator::new(1, bad), Err(Error::ChannelInvariant(_))));
        // transpose map: trace preserving but not completely positive
        let transpose = CMatrix::from_fn(4, 4, |r, c| if (r % 2, r / 2) == (c / 2, c % 2) { ONE } else { ZERO });
        assert!(matches!(ChannelSuperoperator::new(1, transpose), Err(Error::ChannelInvariant(_))));
        assert!(build_channel(&CMatrix::identity(16, 16), 4, 4).is_err());
    }

    #[test]
    fn generic_spectrum_is_biorthonormal_and_reconstructs() {
        let ch = generic_channel(17);
        let spec = channel_spectrum(&ch).unwrap();
        assert!(!spec.degenerate);
        assert!(spec.biorthonormality_deviation() < 1e-8);
        assert_abs_diff_eq!(spec.eigenvalues[0].re, 1.0, epsilon = 1e-10);
        assert!(spec.eigenvalues.iter().all(|mu| mu.norm() <= 1.0 + 1e-9));
        assert!(spec.eigenvalues.windows(2).all(|w| w[0].norm() >= w[1].norm() - 1e-12));

        let ss = steady_state(&ch).unwrap();
        assert!(max_abs_diff(&spec.right_modes[0], ss.matrix()) < 1e-8);

        let rho0 = tilted_product_density(2, 1.1).unwrap();
        let traj = evolve_markov(&ch, &rho0, 50).unwrap();
        for (t, rho) in traj.states.iter().enumerate() {
            let rec = spec.reconstruct(rho0.matrix(), t as u32);
            assert!(max_abs_diff(&rec, rho.matrix()) < 1e-7, "step {t}");
        }
    }

    #[test]
    fn overlap_examples() {
        let ch = generic_channel(17);
        let spec = channel_spectrum(&ch).unwrap();
        let ss = steady_state(&ch).unwrap();
        assert!(slow_mode_overlap(&spec, &ss).unwrap() < 1e-8);

        let slow = spec.eigenvalues[1].norm();
        let block = (1..spec.len())
            .filter(|&k| (spec.eigenvalues[k].norm() - slow).abs() < MODULUS_DEGENERACY_TOL)
            .count();
        let probe = ss.matrix() + &spec.right_modes[1] * C64::new(0.25, 0.0);
        let expected = if block == 1 { 0.25 } else { mode_overlap(&spec, &(&spec.right_modes[1] * C64::new(0.25, 0.0))).unwrap() };
        assert_abs_diff_eq!(mode_overlap(&spec, &probe).unwrap(), expected, epsilon = 1e-9);
        assert!(mode_overlap(&spec, &CMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn evolve_examples() {
        let ch = generic_channel(5);
        let rho0 = tilted_product_density(2, 0.7).unwrap();
        let traj = evolve_markov(&ch, &rho0, 0).unwrap();
        assert_eq!(traj.states.len(), 1);
        assert_eq!(traj.states[0], rho0);
        let long = evolve_markov(&ch, &rho0, 400).unwrap();
        let ss = steady_state(&ch).unwrap();
        assert!(max_abs_diff(long.states.last().unwrap().matrix(), ss.matrix()) < 1e-6);
    }

    #[test]
    fn fixed_gate_channel_fixed_point() {
        let ch = fixed_gate_channel(6, 2, true).unwrap();
        let mixed = DensityMatrix::maximally_mixed(2, 2);
        assert!(max_abs_diff(&ch.apply(mixed.matrix()), mixed.matrix()) < 1e-8);
        let ss = steady_state(&ch).unwrap();
        assert!(max_abs_diff(ss.matrix(), mixed.matrix()) < 1e-8);
        assert_abs_diff_eq!(channel_eigenvalues(&ch)[0].re, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn raw_fixed_gate_breaks_trace_preservation_tolerance() {
        assert!(matches!(fixed_gate_channel(6, 2, false), Err(Error::ChannelInvariant(_))));
    }

    #[test]
    fn fixed_gate_channel_resets_in_two_periods() {
        // ℰ∘ℰ is the replace-by-𝟙/4 map, so every non-unit eigenvalue sits in
        // a defective zero block
        let ch = fixed_gate_channel(6, 2, true).unwrap();
        let s2 = ch.matrix() * ch.matrix();
        let replace = CMatrix::from_fn(16, 16, |r, c| {
            if r % 5 == 0 && c % 5 == 0 {
                C64::new(0.25, 0.0)
            } else {
                ZERO
            }
        });
        assert!(max_abs_diff(&s2, &replace) < 1e-12);
        assert!(max_abs_diff(ch.matrix(), &replace) > 0.1);
        assert!(matches!(channel_spectrum(&ch), Err(Error::DegenerateSpectrum(_))));
    }
}
