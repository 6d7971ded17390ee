//! Qubit Pauli labels and phase-tracked Pauli strings.

use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{C64, CMatrix, I, ONE, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_char(c: char) -> Result<Self> {
        match c {
            'I' => Ok(Pauli::I),
            'X' => Ok(Pauli::X),
            'Y' => Ok(Pauli::Y),
            'Z' => Ok(Pauli::Z),
            other => Err(Error::InvalidLabel(other)),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    /// Whether the operator flips the computational basis bit.
    pub fn flips(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    /// The 2×2 matrix.
    pub fn matrix(self) -> CMatrix {
        match self {
            Pauli::I => CMatrix::identity(2, 2),
            Pauli::X => CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
            Pauli::Y => CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
            Pauli::Z => CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        }
    }

    /// `self * other = i^k * result`, returned as `(k, result)`.
    pub fn product(self, other: Pauli) -> (u8, Pauli) {
        use Pauli::*;
        match (self, other) {
            (I, p) | (p, I) => (0, p),
            (X, X) | (Y, Y) | (Z, Z) => (0, I),
            (X, Y) => (1, Z),
            (Y, X) => (3, Z),
            (Y, Z) => (1, X),
            (Z, Y) => (3, X),
            (Z, X) => (1, Y),
            (X, Z) => (3, Y),
        }
    }
}

/// `i^phase * ops[0] ⊗ ops[1] ⊗ ...`
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    pub phase: u8,
    pub ops: Vec<Pauli>,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        Self { phase: 0, ops: vec![Pauli::I; n] }
    }

    pub fn new(ops: Vec<Pauli>) -> Self {
        Self { phase: 0, ops }
    }

    /// Jordan–Wigner Majorana operator `γ_a` on `n` sites, `a` counted from 1:
    /// `γ_{2m-1} = Z…Z X_m`, `γ_{2m} = Z…Z Y_m`.
    pub fn majorana(n: usize, a: usize) -> Result<Self> {
        if a == 0 || a > 2 * n {
            return Err(Error::InvalidParameter(format!(
                "Majorana index {a} outside 1..={}",
                2 * n
            )));
        }
        let site = (a - 1) / 2;
        let mut ops = vec![Pauli::I; n];
        for op in ops.iter_mut().take(site) {
            *op = Pauli::Z;
        }
        ops[site] = if a % 2 == 1 { Pauli::X } else { Pauli::Y };
        Ok(Self::new(ops))
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn coefficient(&self) -> C64 {
        match self.phase % 4 {
            0 => ONE,
            1 => I,
            2 => -ONE,
            _ => -I,
        }
    }

    /// Dense matrix including the phase (site 0 most significant).
    pub fn matrix(&self) -> CMatrix {
        let mut m = CMatrix::from_element(1, 1, self.coefficient());
        for op in &self.ops {
            m = m.kronecker(&op.matrix());
        }
        m
    }
}

impl Mul for &PauliString {
    type Output = PauliString;

    fn mul(self, rhs: &PauliString) -> PauliString {
        assert_eq!(self.len(), rhs.len(), "Pauli string length mismatch");
        let mut phase = self.phase + rhs.phase;
        let ops = self
            .ops
            .iter()
            .zip(&rhs.ops)
            .map(|(&a, &b)| {
                let (k, p) = a.product(b);
                phase += k;
                p
            })
            .collect();
        PauliString { phase: phase % 4, ops }
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(Pauli::from_char)
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = ["+", "+i", "-", "-i"][usize::from(self.phase % 4)];
        write!(f, "{sign}")?;
        for op in &self.ops {
            write!(f, "{}", op.as_char())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    #[test]
    fn single_site_products_match_matrices() {
        for a in Pauli::ALL {
            for b in Pauli::ALL {
                let (k, p) = a.product(b);
                let lhs = a.matrix() * b.matrix();
                let rhs = PauliString { phase: k, ops: vec![p] }.matrix();
                assert!(max_abs_diff(&lhs, &rhs) < 1e-15, "{a:?}{b:?}");
            }
        }
    }

    #[test]
    fn majoranas_anticommute() {
        let n = 3;
        for a in 1..=2 * n {
            for b in 1..=2 * n {
                let ga = PauliString::majorana(n, a).unwrap().matrix();
                let gb = PauliString::majorana(n, b).unwrap().matrix();
                let anti = &ga * &gb + &gb * &ga;
                let expect = if a == b {
                    CMatrix::identity(8, 8) * C64::new(2.0, 0.0)
                } else {
                    CMatrix::zeros(8, 8)
                };
                assert!(max_abs_diff(&anti, &expect) < 1e-14);
            }
        }
    }

    #[test]
    fn gamma1_gamma2_is_i_z() {
        let g1 = PauliString::majorana(1, 1).unwrap();
        let g2 = PauliString::majorana(1, 2).unwrap();
        let p = &g1 * &g2;
        assert_eq!(p.to_string(), "+iZ");
    }

    #[test]
    fn parse_rejects_bad_label() {
        assert_eq!("XQ".parse::<PauliString>(), Err(Error::InvalidLabel('Q')));
    }
}
