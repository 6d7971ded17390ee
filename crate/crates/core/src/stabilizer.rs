//! Stabilizer tableaux evolved by coherence-preserving (monomial) Cliffords.
//!
//! A state of `N` qubits is stored as `N` generators
//! `g_μ = i^{φ_μ} Π_i X_i^{m_i^μ} Z_i^{n_i^μ}` with the bit matrices packed
//! row-wise into `u64` words. For a contiguous region `A` with complement `B`
//!
//! * `S(ρ_A)      = rank[m|_A, n|_A] − N_A`,
//! * `S(ρ_A^diag) = rank[m, n|_B] − N_B`,
//!
//! and the relative entropy of coherence is their difference. Phases are kept
//! for completeness but enter neither formula: both reduced operators are
//! normalized projectors with flat spectra.

use std::ops::Range;
use std::sync::OnceLock;

use rand::Rng;

use crate::ensembles::enumerate_monomial_cliffords;
use crate::error::{Error, Result};
use crate::linalg::{C64, CMatrix};
use crate::pauli::{Pauli, PauliString};

/// Packed GF(2) matrix with row-wise storage.
#[derive(Debug, Clone)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words = cols.div_ceil(64).max(1);
        Self { rows, cols, words, data: vec![0; rows * words] }
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        (self.data[r * self.words + c / 64] >> (c % 64)) & 1 == 1
    }

    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        let w = &mut self.data[r * self.words + c / 64];
        if v {
            *w |= 1 << (c % 64);
        } else {
            *w &= !(1 << (c % 64));
        }
    }

    fn row_mut(&mut self, r: usize) -> &mut [u64] {
        &mut self.data[r * self.words..(r + 1) * self.words]
    }

    /// Rank over GF(2); consumes a scratch copy.
    pub fn rank(&self) -> usize {
        let mut m = self.data.clone();
        let w = self.words;
        let mut rank = 0;
        for col in 0..self.cols {
            if rank == self.rows {
                break;
            }
            let (cw, bit) = (col / 64, 1u64 << (col % 64));
            let Some(pivot) = (rank..self.rows).find(|&r| m[r * w + cw] & bit != 0) else {
                continue;
            };
            if pivot != rank {
                for k in 0..w {
                    m.swap(pivot * w + k, rank * w + k);
                }
            }
            for r in rank + 1..self.rows {
                if m[r * w + cw] & bit != 0 {
                    for k in cw..w {
                        m[r * w + k] ^= m[rank * w + k];
                    }
                }
            }
            rank += 1;
        }
        rank
    }
}

/// Reads `len ≤ 64` bits starting at bit `pos`.
fn get_bits(src: &[u64], pos: usize, len: usize) -> u64 {
    if len == 0 {
        return 0;
    }
    let (w, off) = (pos / 64, pos % 64);
    let mut v = src[w] >> off;
    if off > 0 && off + len > 64 {
        v |= src[w + 1] << (64 - off);
    }
    if len < 64 {
        v &= (1u64 << len) - 1;
    }
    v
}

/// ORs `len ≤ 64` bits of `val` into `dst` at bit `pos`.
fn put_bits(dst: &mut [u64], pos: usize, val: u64, len: usize) {
    if len == 0 {
        return;
    }
    let (w, off) = (pos / 64, pos % 64);
    dst[w] |= val << off;
    if off > 0 && off + len > 64 {
        dst[w + 1] |= val >> (64 - off);
    }
}

fn copy_bits(src: &[u64], start: usize, len: usize, dst: &mut [u64], at: usize) {
    let mut k = 0;
    while k < len {
        let chunk = (len - k).min(64);
        put_bits(dst, at + k, get_bits(src, start + k, chunk), chunk);
        k += chunk;
    }
}

/// Conjugation table of one two-qubit Clifford on the 16 operators
/// `X^{m1}Z^{n1} ⊗ X^{m2}Z^{n2}` (code `m1 | n1<<1 | m2<<2 | n2<<3`):
/// `U O U† = i^k O'`, stored as `(code', k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConjugationTable(pub [(u8, u8); 16]);

fn local_operator(code: u8) -> CMatrix {
    let site = |m: u8, n: u8| {
        let x = if m == 1 { Pauli::X.matrix() } else { CMatrix::identity(2, 2) };
        let z = if n == 1 { Pauli::Z.matrix() } else { CMatrix::identity(2, 2) };
        x * z
    };
    site(code & 1, (code >> 1) & 1).kronecker(&site((code >> 2) & 1, (code >> 3) & 1))
}

/// Conjugation table of a 4×4 Clifford; errors if some image is not a
/// single phased Pauli operator.
pub fn conjugation_table(u: &CMatrix) -> Result<ConjugationTable> {
    let ops: Vec<CMatrix> = (0..16).map(local_operator).collect();
    let mut table = [(0u8, 0u8); 16];
    for (code, op) in ops.iter().enumerate() {
        let image = u * op * u.adjoint();
        let hit = ops.iter().enumerate().find_map(|(c2, target)| {
            let coeff: C64 = (target.adjoint() * &image).trace() / 4.0;
            ((coeff.norm() - 1.0).abs() < 1e-8).then_some((c2, coeff))
        });
        let (c2, coeff) = hit.ok_or_else(|| {
            Error::InvalidParameter(format!("operator {code} has no single-Pauli image"))
        })?;
        let quarter = coeff.arg() / std::f64::consts::FRAC_PI_2;
        if (quarter - quarter.round()).abs() > 1e-8 {
            return Err(Error::InvalidParameter("non-quarter-turn Pauli phase".into()));
        }
        table[code] = (c2 as u8, quarter.round().rem_euclid(4.0) as u8);
    }
    Ok(ConjugationTable(table))
}

/// Precomputed tables for the 768 monomial Cliffords, same order as
/// [`enumerate_monomial_cliffords`].
pub fn monomial_tables() -> &'static [ConjugationTable] {
    static TABLES: OnceLock<Vec<ConjugationTable>> = OnceLock::new();
    TABLES.get_or_init(|| {
        enumerate_monomial_cliffords()
            .iter()
            .map(|g| conjugation_table(g.matrix()).expect("monomial Cliffords are Clifford"))
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StabilizerTableau {
    n: usize,
    words: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    phases: Vec<u8>,
}

impl StabilizerTableau {
    fn empty(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        Self { n, words, x: vec![0; n * words], z: vec![0; n * words], phases: vec![0; n] }
    }

    /// `|0…0⟩`, stabilized by `Z_i`.
    pub fn zero_state(n: usize) -> Self {
        let mut t = Self::empty(n);
        for i in 0..n {
            t.set_z(i, i, true);
        }
        t
    }

    /// Builds a tableau from explicit generators and checks the invariants.
    pub fn from_generators(generators: &[PauliString]) -> Result<Self> {
        let n = generators.len();
        let mut t = Self::empty(n);
        for (row, g) in generators.iter().enumerate() {
            if g.len() != n {
                return Err(Error::DimensionMismatch("generator length".into()));
            }
            // Y = i X Z
            let mut phase = g.phase;
            for (site, op) in g.ops.iter().enumerate() {
                match op {
                    Pauli::I => {}
                    Pauli::X => t.set_x(row, site, true),
                    Pauli::Z => t.set_z(row, site, true),
                    Pauli::Y => {
                        t.set_x(row, site, true);
                        t.set_z(row, site, true);
                        phase += 1;
                    }
                }
            }
            t.phases[row] = phase % 4;
        }
        t.validate()?;
        Ok(t)
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn x_bit(&self, row: usize, site: usize) -> bool {
        (self.x[row * self.words + site / 64] >> (site % 64)) & 1 == 1
    }

    pub fn z_bit(&self, row: usize, site: usize) -> bool {
        (self.z[row * self.words + site / 64] >> (site % 64)) & 1 == 1
    }

    pub fn phase(&self, row: usize) -> u8 {
        self.phases[row]
    }

    fn set_x(&mut self, row: usize, site: usize, v: bool) {
        let w = &mut self.x[row * self.words + site / 64];
        *w = (*w & !(1 << (site % 64))) | (u64::from(v) << (site % 64));
    }

    fn set_z(&mut self, row: usize, site: usize, v: bool) {
        let w = &mut self.z[row * self.words + site / 64];
        *w = (*w & !(1 << (site % 64))) | (u64::from(v) << (site % 64));
    }

    /// Generator `row` as a phased Pauli string.
    pub fn generator(&self, row: usize) -> PauliString {
        let mut phase = self.phases[row];
        let ops = (0..self.n)
            .map(|s| match (self.x_bit(row, s), self.z_bit(row, s)) {
                (false, false) => Pauli::I,
                (true, false) => Pauli::X,
                (false, true) => Pauli::Z,
                (true, true) => {
                    // X Z = -i Y
                    phase += 3;
                    Pauli::Y
                }
            })
            .collect();
        PauliString { phase: phase % 4, ops }
    }

    /// Independence and mutual commutation of the generators.
    pub fn validate(&self) -> Result<()> {
        let mut full = BitMatrix::zeros(self.n, 2 * self.n);
        for r in 0..self.n {
            for s in 0..self.n {
                full.set(r, s, self.x_bit(r, s));
                full.set(r, self.n + s, self.z_bit(r, s));
            }
        }
        if full.rank() != self.n {
            return Err(Error::InvalidParameter("generators are dependent".into()));
        }
        for a in 0..self.n {
            for b in a + 1..self.n {
                let mut parity = 0;
                for k in 0..self.words {
                    let (ia, ib) = (a * self.words + k, b * self.words + k);
                    parity ^= ((self.x[ia] & self.z[ib]) ^ (self.z[ia] & self.x[ib])).count_ones() & 1;
                }
                if parity != 0 {
                    return Err(Error::InvalidParameter(format!(
                        "generators {a} and {b} anticommute"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Applies monomial Clifford `gate_index` to the ordered pair `(x, y)`.
    pub fn apply_monomial(&mut self, gate_index: usize, x: usize, y: usize) -> Result<()> {
        let table = monomial_tables().get(gate_index).ok_or_else(|| {
            Error::InvalidParameter(format!("gate index {gate_index} outside 0..768"))
        })?;
        self.apply_table(table, x, y)
    }

    pub fn apply_table(&mut self, table: &ConjugationTable, x: usize, y: usize) -> Result<()> {
        if x >= self.n || y >= self.n || x == y {
            return Err(Error::InvalidSites(format!("({x}, {y}) on {} sites", self.n)));
        }
        let (wx, bx) = (x / 64, x % 64);
        let (wy, by) = (y / 64, y % 64);
        for row in 0..self.n {
            let base = row * self.words;
            let code = ((self.x[base + wx] >> bx) & 1)
                | (((self.z[base + wx] >> bx) & 1) << 1)
                | (((self.x[base + wy] >> by) & 1) << 2)
                | (((self.z[base + wy] >> by) & 1) << 3);
            let (image, k) = table.0[code as usize];
            if image as u64 == code && k == 0 {
                continue;
            }
            let image = u64::from(image);
            self.x[base + wx] = (self.x[base + wx] & !(1 << bx)) | ((image & 1) << bx);
            self.z[base + wx] = (self.z[base + wx] & !(1 << bx)) | (((image >> 1) & 1) << bx);
            self.x[base + wy] = (self.x[base + wy] & !(1 << by)) | (((image >> 2) & 1) << by);
            self.z[base + wy] = (self.z[base + wy] & !(1 << by)) | (((image >> 3) & 1) << by);
            self.phases[row] = (self.phases[row] + k) % 4;
        }
        Ok(())
    }

    fn check_region(&self, region: &Range<usize>) -> Result<()> {
        if region.start >= region.end || region.end > self.n {
            return Err(Error::InvalidRegion(format!("{region:?} on {} sites", self.n)));
        }
        Ok(())
    }

    /// `rank[m|_A, n|_A] − N_A`.
    pub fn entanglement_entropy(&self, region: Range<usize>) -> Result<usize> {
        self.check_region(&region)?;
        let n_a = region.len();
        let mut m = BitMatrix::zeros(self.n, 2 * n_a);
        for row in 0..self.n {
            let src = row * self.words;
            let (xs, zs) = (&self.x[src..src + self.words], &self.z[src..src + self.words]);
            let dst = m.row_mut(row);
            copy_bits(xs, region.start, n_a, dst, 0);
            copy_bits(zs, region.start, n_a, dst, n_a);
        }
        Ok(m.rank() - n_a)
    }

    /// `rank[m, n|_B] − N_B`.
    pub fn diagonal_entropy(&self, region: Range<usize>) -> Result<usize> {
        self.check_region(&region)?;
        let n_b = self.n - region.len();
        let mut m = BitMatrix::zeros(self.n, self.n + n_b);
        for row in 0..self.n {
            let src = row * self.words;
            let (xs, zs) = (&self.x[src..src + self.words], &self.z[src..src + self.words]);
            let dst = m.row_mut(row);
            copy_bits(xs, 0, self.n, dst, 0);
            copy_bits(zs, 0, region.start, dst, self.n);
            copy_bits(zs, region.end, self.n - region.end, dst, self.n + region.start);
        }
        Ok(m.rank() - n_b)
    }

    /// Relative entropy of coherence of the region, in bits.
    pub fn coherence(&self, region: Range<usize>) -> Result<usize> {
        let diag = self.diagonal_entropy(region.clone())?;
        let ent = self.entanglement_entropy(region)?;
        Ok(diag
            .checked_sub(ent)
            .expect("diagonal entropy bounds the entanglement entropy"))
    }
}

/// Product state with each site in `|+⟩` (probability `p`) or `|0⟩`.
pub fn init_hadamard_product<R: Rng + ?Sized>(n_sites: usize, p: f64, rng: &mut R) -> Result<StabilizerTableau> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("p = {p} outside [0, 1]")));
    }
    let mut t = StabilizerTableau::empty(n_sites);
    for i in 0..n_sites {
        if rng.random::<f64>() < p {
            t.set_x(i, i, true);
        } else {
            t.set_z(i, i, true);
        }
    }
    Ok(t)
}

/// Free-function form of [`StabilizerTableau::apply_monomial`].
pub fn apply_monomial_clifford(
    tab: &StabilizerTableau,
    gate_index: usize,
    sites: (usize, usize),
) -> Result<StabilizerTableau> {
    let mut out = tab.clone();
    out.apply_monomial(gate_index, sites.0, sites.1)?;
    Ok(out)
}

pub fn entanglement_entropy(tab: &StabilizerTableau, region: Range<usize>) -> Result<usize> {
    tab.entanglement_entropy(region)
}

pub fn diagonal_entropy(tab: &StabilizerTableau, region: Range<usize>) -> Result<usize> {
    tab.diagonal_entropy(region)
}

pub fn coherence_stab(tab: &StabilizerTableau, region: Range<usize>) -> Result<usize> {
    tab.coherence(region)
}
