//! The five-qubit perfect code.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::state::{Pauli, StateVector};
use crate::QeccError;

pub const GENERATORS: [&str; 4] = ["XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"];
pub const LOGICAL_X: &str = "XXXXX";
pub const LOGICAL_Z: &str = "ZZZZZ";

/// Stabilizer data plus the 16 correctable errors, indexed by syndrome value.
#[derive(Debug, Clone)]
pub struct FiveQubitCode {
    generators: [Pauli; 4],
    logical_x: Pauli,
    logical_z: Pauli,
    /// `errors[s]` is the weight-at-most-one Pauli whose syndrome is `s`.
    errors: [Pauli; 16],
    zero_l: StateVector,
    one_l: StateVector,
}

impl FiveQubitCode {
    /// Builds the code and checks commutation and nondegeneracy.
    pub fn new() -> Result<Self, QeccError> {
        let generators = GENERATORS.map(|g| g.parse::<Pauli>().expect("constant"));
        let logical_x: Pauli = LOGICAL_X.parse().expect("constant");
        let logical_z: Pauli = LOGICAL_Z.parse().expect("constant");
        for (i, a) in generators.iter().enumerate() {
            for b in &generators[i + 1..] {
                if !a.commutes_with(b) {
                    return Err(QeccError::Construction(format!("generators {a} and {b} anticommute")));
                }
            }
            if !a.commutes_with(&logical_x) || !a.commutes_with(&logical_z) {
                return Err(QeccError::Construction(format!("generator {a} does not commute with the logicals")));
            }
        }
        if logical_x.commutes_with(&logical_z) {
            return Err(QeccError::Construction("logical X and Z commute".into()));
        }

        let mut slots: [Option<Pauli>; 16] = [None; 16];
        let mut candidates = vec![Pauli::identity(5)];
        for q in 0..5 {
            for letter in 1..=3 {
                candidates.push(Pauli::single(5, q, letter));
            }
        }
        for e in candidates {
            let s = syndrome_of(&generators, &e);
            if let Some(prev) = slots[s] {
                return Err(QeccError::Construction(format!(
                    "errors {prev} and {e} share syndrome {s}; the code is degenerate on them"
                )));
            }
            slots[s] = Some(e);
        }
        let errors = slots.map(|e| e.expect("16 errors fill 16 syndromes"));

        let mut zero_l = StateVector::basis(5, 0);
        for g in &generators {
            let mut t = zero_l.clone();
            t.apply_pauli(g);
            let sum: Vec<Complex64> = zero_l.amplitudes().iter().zip(t.amplitudes()).map(|(a, b)| (a + b) * 0.5).collect();
            zero_l = StateVector::normalized(sum).map_err(|_| QeccError::Construction("empty code space".into()))?;
        }
        let mut one_l = zero_l.clone();
        one_l.apply_pauli(&logical_x);
        Ok(FiveQubitCode {
            generators,
            logical_x,
            logical_z,
            errors,
            zero_l,
            one_l,
        })
    }

    pub fn generators(&self) -> &[Pauli; 4] {
        &self.generators
    }

    pub fn logical_x(&self) -> &Pauli {
        &self.logical_x
    }

    pub fn logical_z(&self) -> &Pauli {
        &self.logical_z
    }

    /// Correctable errors in syndrome order.
    pub fn errors(&self) -> &[Pauli; 16] {
        &self.errors
    }

    /// Syndrome value: bit `i` set when the error anticommutes with generator `i`.
    pub fn syndrome(&self, e: &Pauli) -> usize {
        syndrome_of(&self.generators, e)
    }

    pub fn zero_l(&self) -> &StateVector {
        &self.zero_l
    }

    pub fn one_l(&self) -> &StateVector {
        &self.one_l
    }

    /// `a|0_L> + b|1_L>` for a normalized single-qubit state `(a, b)`.
    pub fn encode_covertext(&self, covertext: &StateVector) -> Result<StateVector, QeccError> {
        if covertext.n() != 1 {
            return Err(QeccError::Input("covertext must be one qubit".into()));
        }
        let [a, b] = [covertext.amplitudes()[0], covertext.amplitudes()[1]];
        let amps = self
            .zero_l
            .amplitudes()
            .iter()
            .zip(self.one_l.amplitudes())
            .map(|(z, o)| a * z + b * o)
            .collect();
        StateVector::from_amplitudes(amps)
    }

    /// Code-space projector as a 32 x 32 matrix.
    pub fn projector(&self) -> DMatrix<Complex64> {
        let z = self.zero_l.to_dvector();
        let o = self.one_l.to_dvector();
        &z * z.adjoint() + &o * o.adjoint()
    }

    /// Expectation of a Pauli on a 5-qubit state.
    pub fn expectation(&self, p: &Pauli, s: &StateVector) -> f64 {
        let mut t = s.clone();
        t.apply_pauli(p);
        s.inner(&t).re
    }
}

fn syndrome_of(generators: &[Pauli; 4], e: &Pauli) -> usize {
    generators
        .iter()
        .enumerate()
        .filter(|(_, g)| !g.commutes_with(e))
        .map(|(i, _)| 1 << i)
        .sum()
}
