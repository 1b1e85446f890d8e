//! Messages carried by which error syndrome the codeword shows.
//!
//! Registers in the decoder are laid out as data qubits 0..5, syndrome
//! ancillas 5..9, reference qubits from 9 upwards.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::code::FiveQubitCode;
use crate::state::{Pauli, StateVector};
use crate::QeccError;

/// Largest tolerated weight outside the correctable span.
pub const LEAKAGE_TOLERANCE: f64 = 1e-8;

const DATA: usize = 5;
const ANCILLA: usize = 4;

/// Lifts a 5-qubit Pauli to act on the data qubits of a wider register.
fn widen(p: &Pauli, n: usize) -> Pauli {
    Pauli { x: p.x, z: p.z, n }
}

/// `sum_m a_m E_m |psi_L>` for a 4-qubit message, or the same with the message
/// register entangled with a reference: `sum_{m,r} a_{m,r} E_m|psi_L> |r>`,
/// where the input index is `m + 16 r` and the output index `data + 32 r`.
pub fn stego_superpose(
    code: &FiveQubitCode,
    message: &StateVector,
    codeword: &StateVector,
) -> Result<StateVector, QeccError> {
    if message.n() < ANCILLA || codeword.n() != DATA {
        return Err(QeccError::Input("need a message of at least 4 qubits and a 5-qubit codeword".into()));
    }
    let reference = message.n() - ANCILLA;
    let dim = 1usize << (DATA + reference);
    let mut out = vec![Complex64::new(0.0, 0.0); dim];
    for (idx, &a) in message.amplitudes().iter().enumerate() {
        if a == Complex64::new(0.0, 0.0) {
            continue;
        }
        let (m, r) = (idx & 0xf, idx >> ANCILLA);
        let e = &code.errors()[m];
        for (b, &c) in codeword.amplitudes().iter().enumerate() {
            let (f, t) = e.act(b);
            out[t + (r << DATA)] += a * f * c;
        }
    }
    StateVector::from_amplitudes(out)
}

/// Output of [`stego_decode`].
#[derive(Debug, Clone)]
pub struct Decoded {
    /// Message register (plus reference, if any), index `m + 16 r`.
    pub message: StateVector,
    pub covertext: StateVector,
    /// Decoded logical qubit (qubit 0) with the message register above it.
    pub joint: StateVector,
    /// Squared norm that left the correctable span.
    pub leakage: f64,
    /// Weight of the leading product term; 1 when the output is a product state.
    pub product_weight: f64,
}

/// Extracts the syndrome coherently, undoes the error and decodes the logical qubit.
pub fn stego_decode(code: &FiveQubitCode, received: &StateVector) -> Result<Decoded, QeccError> {
    if received.n() < DATA {
        return Err(QeccError::Input("received state has fewer than 5 qubits".into()));
    }
    let reference = received.n() - DATA;
    let n = DATA + ANCILLA + reference;
    if n > crate::state::MAX_QUBITS {
        return Err(QeccError::Input(format!("{n} qubits exceed the simulator limit")));
    }
    // reorder to data | ancilla | reference
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
    for (idx, &a) in received.amplitudes().iter().enumerate() {
        let (d, r) = (idx & 0x1f, idx >> DATA);
        amps[d | (r << (DATA + ANCILLA))] = a;
    }
    let mut state = StateVector::from_amplitudes(amps)?;

    for (i, g) in code.generators().iter().enumerate() {
        let anc = DATA + i;
        state.apply_h(anc);
        state.apply_pauli_where(&widen(g, n), |b| b >> anc & 1 == 1);
        state.apply_h(anc);
    }
    for (s, e) in code.errors().iter().enumerate() {
        state.apply_pauli_where(&widen(e, n), |b| (b >> DATA) & 0xf == s);
    }

    // logical amplitudes for every (ancilla, reference) value
    let rest = 1usize << (ANCILLA + reference);
    let amps = state.amplitudes();
    let mut joint = vec![Complex64::new(0.0, 0.0); 2 * rest];
    for t in 0..rest {
        let block = &amps[t << DATA..(t + 1) << DATA];
        for (l, word) in [code.zero_l(), code.one_l()].into_iter().enumerate() {
            joint[l + 2 * t] = word.amplitudes().iter().zip(block).map(|(w, a)| w.conj() * a).sum();
        }
    }
    let kept: f64 = joint.iter().map(|a| a.norm_sqr()).sum();
    let leakage = (1.0 - kept).max(0.0);
    if leakage > LEAKAGE_TOLERANCE {
        return Err(QeccError::Integrity(format!(
            "{leakage:e} of the received norm lies outside the correctable span"
        )));
    }
    let joint = StateVector::normalized(joint)?;

    // split covertext (2) from message (rest) by the leading singular pair
    let m = DMatrix::from_fn(2, rest, |l, t| joint.amplitudes()[l + 2 * t]);
    let svd = m.svd(true, true);
    let (k, s) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, 0.0), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let u = svd.u.expect("requested");
    let v_t = svd.v_t.expect("requested");
    let covertext = StateVector::normalized(vec![u[(0, k)], u[(1, k)]])?;
    let message = StateVector::normalized((0..rest).map(|t| v_t[(k, t)]).collect())?;
    Ok(Decoded {
        message,
        covertext,
        joint,
        leakage,
        product_weight: s * s,
    })
}

/// `sum_i w_i |psi_i><psi_i|` over 5-qubit states.
pub fn eve_reduced_state(ensemble: &[(f64, StateVector)]) -> Result<DMatrix<Complex64>, QeccError> {
    let mut rho = DMatrix::<Complex64>::zeros(32, 32);
    for (w, s) in ensemble {
        if s.n() != DATA || *w < 0.0 {
            return Err(QeccError::Input("ensemble members must be 5-qubit states with nonnegative weight".into()));
        }
        let v = s.to_dvector();
        rho += (&v * v.adjoint()) * Complex64::new(*w, 0.0);
    }
    Ok(rho)
}

/// Channel output on `|psi_L>` with every error of weight above one discarded:
/// `(1-p)^5` on the identity and `(p/3)(1-p)^4` on each single-qubit Pauli.
pub fn truncated_channel_output(code: &FiveQubitCode, codeword: &StateVector, p: f64) -> DMatrix<Complex64> {
    let weights = depolarizing_weights(code, p);
    let ensemble: Vec<(f64, StateVector)> = code
        .errors()
        .iter()
        .zip(weights)
        .map(|(e, w)| {
            let mut s = codeword.clone();
            s.apply_pauli(e);
            (w, s)
        })
        .collect();
    eve_reduced_state(&ensemble).expect("valid ensemble")
}

/// Truncated depolarizing weight of each error, in syndrome order.
pub fn depolarizing_weights(code: &FiveQubitCode, p: f64) -> [f64; 16] {
    code.errors().map(|e| {
        let w = e.weight() as i32;
        (p / 3.0).powi(w) * (1.0 - p).powi(5 - w)
    })
}

/// `1/2 ||a - b||_1` for Hermitian `a`, `b`.
pub fn trace_distance(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    let eig = SymmetricEigen::new(a - b);
    0.5 * eig.eigenvalues.iter().map(|v| v.abs()).sum::<f64>()
}

/// Eve's state when basis message `m` is sent with probability `probs[m]`.
pub fn classical_message_state(
    code: &FiveQubitCode,
    codeword: &StateVector,
    probs: &[f64; 16],
) -> Result<DMatrix<Complex64>, QeccError> {
    let ensemble = (0..16)
        .map(|m| Ok((probs[m], stego_superpose(code, &StateVector::basis(4, m), codeword)?)))
        .collect::<Result<Vec<_>, QeccError>>()?;
    eve_reduced_state(&ensemble)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn code() -> FiveQubitCode {
        FiveQubitCode::new().unwrap()
    }

    fn plus() -> StateVector {
        StateVector::normalized(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)]).unwrap()
    }

    #[test]
    fn zero_message_leaves_codeword() {
        let c = code();
        let cw = c.encode_covertext(&plus()).unwrap();
        let out = stego_superpose(&c, &StateVector::basis(4, 0), &cw).unwrap();
        assert!((out.fidelity(&cw) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn basis_messages_decode_exactly() {
        let c = code();
        let cw = c.encode_covertext(&plus()).unwrap();
        for m in 0..16 {
            let out = stego_superpose(&c, &StateVector::basis(4, m), &cw).unwrap();
            let d = stego_decode(&c, &out).unwrap();
            assert!((d.message.amplitudes()[m].norm_sqr() - 1.0).abs() < 1e-12);
            assert!((d.covertext.fidelity(&plus()) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_message_spreads_evenly_over_syndromes() {
        let c = code();
        let cw = c.encode_covertext(&StateVector::basis(1, 0)).unwrap();
        let uniform = StateVector::normalized(vec![Complex64::new(1.0, 0.0); 16]).unwrap();
        let out = stego_superpose(&c, &uniform, &cw).unwrap();
        let rho = eve_reduced_state(&[(1.0, out)]).unwrap();
        // syndrome probabilities through projectors onto each error subspace
        let p = c.projector();
        for e in c.errors() {
            let m = e.matrix();
            let proj = &m * &p * m.adjoint();
            assert!(((&proj * &rho).trace().re - 1.0 / 16.0).abs() < 1e-12);
        }
    }

    #[test]
    fn random_round_trips() {
        let c = code();
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for _ in 0..20 {
            let msg = StateVector::random(4, &mut rng);
            let cov = StateVector::random(1, &mut rng);
            let cw = c.encode_covertext(&cov).unwrap();
            let d = stego_decode(&c, &stego_superpose(&c, &msg, &cw).unwrap()).unwrap();
            assert!(d.joint.fidelity(&cov.tensor(&msg)) > 1.0 - 1e-10);
        }
    }

    #[test]
    fn error_subspaces_span_the_whole_register() {
        // 16 syndromes times a 2-dimensional code space fill all 32 dimensions
        let c = code();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let any = StateVector::random(5, &mut rng);
        assert!(stego_decode(&c, &any).unwrap().leakage < 1e-12);
    }

    #[test]
    fn single_pure_state_distance() {
        let c = code();
        let cw = c.encode_covertext(&StateVector::basis(1, 0)).unwrap();
        let rho = eve_reduced_state(&[(1.0, cw.clone())]).unwrap();
        let mut other = cw.clone();
        other.apply_pauli(&c.errors()[3]);
        let sigma = eve_reduced_state(&[(1.0, other)]).unwrap();
        // orthogonal pure states are perfectly distinguishable
        assert!((trace_distance(&rho, &sigma) - 1.0).abs() < 1e-12);
        assert!(trace_distance(&rho, &rho) < 1e-12);
    }
}
