//! Dense state vectors and Pauli strings. Qubit `q` is bit `q` of the basis index.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::QeccError;

pub const MAX_QUBITS: usize = 14;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Tensor product of single-qubit Paulis, stored as X and Z bit masks.
///
/// A qubit with both bits set carries `Y = iXZ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Pauli {
    pub x: u32,
    pub z: u32,
    pub n: usize,
}

impl Pauli {
    pub fn identity(n: usize) -> Self {
        Pauli { x: 0, z: 0, n }
    }

    /// Single-qubit Pauli `letter` (1 = X, 2 = Y, 3 = Z) on qubit `q`.
    pub fn single(n: usize, q: usize, letter: u8) -> Self {
        let bit = 1u32 << q;
        match letter {
            1 => Pauli { x: bit, z: 0, n },
            2 => Pauli { x: bit, z: bit, n },
            3 => Pauli { x: 0, z: bit, n },
            _ => Pauli::identity(n),
        }
    }

    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    pub fn commutes_with(&self, other: &Pauli) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 0
    }

    /// Amplitude factor and target index for basis state `b`.
    #[inline]
    pub fn act(&self, b: usize) -> (Complex64, usize) {
        let sign = if (b as u32 & self.z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        let phase = I.powu(self.y_count() % 4) * sign;
        (phase, b ^ self.x as usize)
    }

    /// Dense `2^n x 2^n` matrix.
    pub fn matrix(&self) -> DMatrix<Complex64> {
        let dim = 1usize << self.n;
        let mut m = DMatrix::zeros(dim, dim);
        for b in 0..dim {
            let (f, t) = self.act(b);
            m[(t, b)] = f;
        }
        m
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n {
            let c = match ((self.x >> q) & 1, (self.z >> q) & 1) {
                (0, 0) => 'I',
                (1, 0) => 'X',
                (1, 1) => 'Y',
                _ => 'Z',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for Pauli {
    type Err = QeccError;

    /// Character `i` acts on qubit `i`.
    fn from_str(s: &str) -> Result<Self, QeccError> {
        let mut p = Pauli::identity(s.len());
        for (q, c) in s.chars().enumerate() {
            let letter = match c {
                'I' => 0,
                'X' => 1,
                'Y' => 2,
                'Z' => 3,
                _ => return Err(QeccError::Input(format!("bad Pauli letter `{c}`"))),
            };
            let single = Pauli::single(s.len(), q, letter);
            p.x |= single.x;
            p.z |= single.z;
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Computational basis state `|index>` on `n` qubits.
    pub fn basis(n: usize, index: usize) -> Self {
        assert!(n <= MAX_QUBITS && index < 1 << n);
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[index] = Complex64::new(1.0, 0.0);
        StateVector { n, amps }
    }

    /// Wraps amplitudes; they must have length `2^n` and unit norm.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self, QeccError> {
        let n = amps.len().trailing_zeros() as usize;
        if amps.len() != 1 << n || n > MAX_QUBITS {
            return Err(QeccError::Input(format!("{} amplitudes is not 2^n for n <= {MAX_QUBITS}", amps.len())));
        }
        let s = StateVector { n, amps };
        if (s.norm_sqr() - 1.0).abs() > 1e-10 {
            return Err(QeccError::Input(format!("state has squared norm {}", s.norm_sqr())));
        }
        Ok(s)
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(amps: Vec<Complex64>) -> Result<Self, QeccError> {
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(QeccError::Input("zero vector".into()));
        }
        Self::from_amplitudes(amps.into_iter().map(|a| a / norm).collect())
    }

    /// Gaussian-sampled state, uniform on the unit sphere.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let amps = (0..1usize << n)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        Self::normalized(amps).expect("nonzero with probability one")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// `|<self|other>|^2`, insensitive to global phase.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// `self` on the low qubits, `other` on the high ones.
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for b in &other.amps {
            for a in &self.amps {
                amps.push(a * b);
            }
        }
        StateVector { n: self.n + other.n, amps }
    }

    /// Appends `k` qubits in `|0>` above the existing ones.
    pub fn extend(&self, k: usize) -> StateVector {
        self.tensor(&StateVector::basis(k, 0))
    }

    pub fn apply_pauli(&mut self, p: &Pauli) {
        self.apply_pauli_where(p, |_| true);
    }

    /// Applies `p` (on the low qubits) to the basis states where `cond` holds.
    ///
    /// `cond` must depend only on qubits `p` does not flip.
    pub fn apply_pauli_where(&mut self, p: &Pauli, cond: impl Fn(usize) -> bool) {
        let mut out = self.amps.clone();
        for (b, &a) in self.amps.iter().enumerate() {
            if cond(b) {
                let (f, t) = p.act(b);
                out[t] = f * a;
            }
        }
        self.amps = out;
    }

    pub fn apply_h(&mut self, q: usize) {
        let bit = 1usize << q;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for b in 0..self.amps.len() {
            if b & bit == 0 {
                let (a0, a1) = (self.amps[b], self.amps[b | bit]);
                self.amps[b] = (a0 + a1) * s;
                self.amps[b | bit] = (a0 - a1) * s;
            }
        }
    }

    pub fn to_dvector(&self) -> DVector<Complex64> {
        DVector::from_vec(self.amps.clone())
    }
}
