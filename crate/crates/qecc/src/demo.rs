//! End-to-end run of the five-qubit demonstration.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use synstego::prob::shannon_entropy;
use synstego::secrecy::{kl_alpha_bound, AlphaBound};

use crate::code::FiveQubitCode;
use crate::state::StateVector;
use crate::stego::{
    classical_message_state, depolarizing_weights, stego_decode, stego_superpose, trace_distance,
    truncated_channel_output,
};
use crate::QeccError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemoReport {
    pub p: f64,
    /// Worst round-trip fidelity over the random trials.
    pub fidelity: f64,
    /// Worst fidelity in the trials with an entangled reference.
    pub entangled_fidelity: f64,
    pub trials: usize,
    /// Syndrome outcome probabilities with channel-matched message amplitudes.
    pub syndrome_distribution: Vec<f64>,
    /// Eve's distance to the truncated channel output for that message ensemble.
    pub trace_distance: f64,
    /// `(1 - Z) / 2`, with `Z` the mass kept by truncation.
    pub truncation_deficit: f64,
    pub kl_bound_bits: f64,
    /// Entropy of the normalized 16-outcome distribution.
    pub outcome_entropy_bits: f64,
    pub distinct_syndromes: usize,
}

/// Kraus operators `sqrt(w_m) E_m` of the truncated depolarizing channel.
pub fn weighted_kraus(code: &FiveQubitCode, p: f64) -> Vec<DMatrix<Complex64>> {
    code.errors()
        .iter()
        .zip(depolarizing_weights(code, p))
        .map(|(e, w)| e.matrix() * Complex64::new(w.sqrt(), 0.0))
        .collect()
}

pub fn alpha_bound(code: &FiveQubitCode, p: f64) -> Result<AlphaBound, QeccError> {
    Ok(kl_alpha_bound(&weighted_kraus(code, p), &code.projector())?)
}

/// Worst fidelity over `trials` random (message, covertext) pairs; with
/// `entangled`, the message register is maximally entangled with a 4-qubit
/// reference, with random relative phases.
pub fn round_trip_fidelity(code: &FiveQubitCode, trials: usize, entangled: bool, seed: u64) -> Result<f64, QeccError> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut worst = 1.0f64;
    for _ in 0..trials {
        let cov = StateVector::random(1, &mut rng);
        let msg = if entangled {
            maximally_entangled_with_phases(&mut rng)
        } else {
            StateVector::random(4, &mut rng)
        };
        let cw = code.encode_covertext(&cov)?;
        let d = stego_decode(code, &stego_superpose(code, &msg, &cw)?)?;
        worst = worst.min(d.joint.fidelity(&cov.tensor(&msg)));
    }
    Ok(worst)
}

/// `sum_m e^{i phi_m} |m>|m> / 4` on message plus reference.
fn maximally_entangled_with_phases(rng: &mut ChaCha20Rng) -> StateVector {
    use rand::Rng;
    let mut amps = vec![Complex64::new(0.0, 0.0); 256];
    for m in 0..16 {
        let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        amps[m + 16 * m] = Complex64::from_polar(0.25, phi);
    }
    StateVector::from_amplitudes(amps).expect("normalized by construction")
}

pub fn run_demo(p: f64, trials: usize, seed: u64) -> Result<DemoReport, QeccError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(QeccError::Input(format!("p = {p} outside [0, 1]")));
    }
    let code = FiveQubitCode::new()?;
    let fidelity = round_trip_fidelity(&code, trials, false, seed)?;
    let entangled_fidelity = round_trip_fidelity(&code, trials, true, seed.wrapping_add(1))?;

    let weights = depolarizing_weights(&code, p);
    let z: f64 = weights.iter().sum();
    let normalized: Vec<f64> = weights.iter().map(|w| w / z).collect();
    let probs: [f64; 16] = normalized.clone().try_into().expect("16 entries");

    // channel-matched amplitudes sqrt(w_m / Z) give the syndrome distribution
    let cw = code.encode_covertext(&StateVector::basis(1, 0))?;
    let msg = StateVector::normalized(normalized.iter().map(|w| Complex64::new(w.sqrt(), 0.0)).collect())?;
    let out = stego_superpose(&code, &msg, &cw)?;
    let proj = code.projector();
    let syndrome_distribution = code
        .errors()
        .iter()
        .map(|e| {
            let m = e.matrix();
            let v = out.to_dvector();
            (v.adjoint() * (&m * &proj * m.adjoint()) * v)[(0, 0)].re
        })
        .collect();

    let rho = classical_message_state(&code, &cw, &probs)?;
    let sigma = truncated_channel_output(&code, &cw, p);
    let bound = alpha_bound(&code, p)?;
    Ok(DemoReport {
        p,
        fidelity,
        entangled_fidelity,
        trials,
        syndrome_distribution,
        trace_distance: trace_distance(&rho, &sigma),
        truncation_deficit: 0.5 * (1.0 - z),
        kl_bound_bits: bound.bound_bits,
        outcome_entropy_bits: shannon_entropy(&normalized),
        distinct_syndromes: code.errors().len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_record_is_consistent() {
        let r = run_demo(0.1, 10, 5).unwrap();
        assert!(r.fidelity > 1.0 - 1e-10);
        assert!(r.entangled_fidelity > 1.0 - 1e-10);
        assert!((r.trace_distance - r.truncation_deficit).abs() < 1e-9);
        assert!((r.kl_bound_bits - r.outcome_entropy_bits).abs() < 1e-8);
        assert!((r.syndrome_distribution.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noiseless_limit() {
        let r = run_demo(0.0, 2, 1).unwrap();
        assert!(r.trace_distance.abs() < 1e-12);
        assert!(r.kl_bound_bits.abs() < 1e-12);
    }
}
