//! Secrecy metrics and entropy bounds.
//!
//! Eve's view is the distribution of error strings averaged over key and
//! message. On a nondegenerate code distinct errors land in orthogonal
//! syndrome subspaces, so for classical messages the trace distance between
//! her state and the channel output equals the total-variation distance
//! computed here.

use nalgebra::{DMatrix, SymmetricEigen};
use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::Zero;
use serde::Serialize;

use crate::channels::{ChannelKind, ChannelModel};
use crate::codec::{ErrorString, Placement, StegoCodebook};
use crate::error::{domain, Error, Result};
use crate::prob::{binary_entropy, compensated_sum, log2_biguint, BigCount, LogProb, WeightVector};

/// Statement attached to every secrecy report.
pub const REDUCTION_NOTE: &str = "trace distance evaluated as total variation between syndrome \
    distributions; exact for classical messages on a nondegenerate code";

/// Key- and message-averaged mass on one class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InducedClass {
    pub weights: WeightVector,
    pub class_size: BigCount,
    /// Strings of the class that carry mass.
    pub covered: BigCount,
    /// Mass of each covered string.
    pub string_mass: LogProb,
    /// Channel probability of each string of the class.
    pub channel_logprob: LogProb,
    /// Codewords per subset still reachable from the message domain.
    pub live_codewords: BigCount,
    pub n_subsets: BigCount,
}

impl InducedClass {
    /// Total induced mass on the class.
    pub fn mass(&self) -> f64 {
        if self.covered.is_zero() {
            0.0
        } else {
            (self.covered.log2() + self.string_mass.log2()).exp2()
        }
    }
}

/// Distribution Eve sees when messages are uniform on `[0, L)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InducedDistribution {
    pub domain: BigCount,
    /// One entry per codebook class, in codebook order.
    pub classes: Vec<InducedClass>,
}

impl InducedDistribution {
    pub fn total_mass(&self) -> f64 {
        compensated_sum(self.classes.iter().map(InducedClass::mass))
    }

    /// Induced probability of a single string.
    pub fn string_logprob(&self, book: &StegoCodebook, e: &ErrorString) -> Result<LogProb> {
        let (idx, rank) = match book.locate(e)? {
            Placement::Class { class, rank } => (class, rank),
            _ => return Ok(LogProb::ZERO),
        };
        let cls = &self.classes[idx];
        let c = book.classes()[idx].c_class.value();
        if rank >= c * cls.n_subsets.value() {
            return Ok(LogProb::ZERO);
        }
        if &(&rank % c) >= cls.live_codewords.value() {
            return Ok(LogProb::ZERO);
        }
        Ok(cls.string_mass)
    }
}

/// Induced distribution for messages uniform on `[0, C_total)`.
pub fn induced_distribution(book: &StegoCodebook) -> InducedDistribution {
    induced_distribution_on(book, book.c_total().value()).expect("full domain is valid")
}

/// Induced distribution for messages uniform on `[0, domain)`, `domain <= C_total`.
pub fn induced_distribution_on(book: &StegoCodebook, domain_size: &BigUint) -> Result<InducedDistribution> {
    if domain_size.is_zero() || domain_size > book.c_total().value() {
        return Err(domain(format!(
            "message domain {domain_size} must lie in [1, C_total = {}]",
            book.c_total()
        )));
    }
    let log_l = log2_biguint(domain_size);
    let classes = book
        .classes()
        .iter()
        .map(|c| {
            let start = c.offset.value();
            let live = if domain_size <= start {
                BigUint::zero()
            } else {
                (domain_size - start).min(c.c_class.value().clone())
            };
            let covered = c.n_subsets.value() * &live;
            InducedClass {
                weights: c.weights.clone(),
                class_size: c.class_size.clone(),
                covered: BigCount::new(covered),
                string_mass: LogProb::from_log2(-(log_l + c.n_subsets.log2())),
                channel_logprob: c.string_logprob,
                live_codewords: BigCount::new(live),
                n_subsets: c.n_subsets.clone(),
            }
        })
        .collect();
    Ok(InducedDistribution {
        domain: BigCount::new(domain_size.clone()),
        classes,
    })
}

/// Exact distance between the induced and channel string distributions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecrecyReport {
    pub tv_distance: f64,
    pub truncation_mass: f64,
    /// Half the L1 gap inside the typical window.
    pub rounding_residual: f64,
    pub delta_param: Option<f64>,
    pub classes_dropped: usize,
    pub message_domain_log2: f64,
    pub reduction: String,
    pub flags: Vec<String>,
}

/// `count * |a - b|` for a class of equiprobable strings, in log space.
fn class_gap(count: &BigUint, a: LogProb, b: LogProb) -> f64 {
    if count.is_zero() {
        return 0.0;
    }
    let lc = log2_biguint(count);
    match (a.is_zero(), b.is_zero()) {
        (true, true) => 0.0,
        (true, false) => (lc + b.log2()).exp2(),
        (false, true) => (lc + a.log2()).exp2(),
        (false, false) => {
            let ratio = ((a.log2() - b.log2()) * std::f64::consts::LN_2).exp_m1().abs();
            if ratio == 0.0 {
                0.0
            } else {
                (lc + b.log2() + ratio.log2()).exp2()
            }
        }
    }
}

/// TV distance for uniform messages on `[0, C_total)`.
pub fn tv_to_channel(book: &StegoCodebook) -> SecrecyReport {
    secrecy_report(book, &induced_distribution(book))
}

/// TV distance for a given induced distribution of `book`.
pub fn secrecy_report(book: &StegoCodebook, dist: &InducedDistribution) -> SecrecyReport {
    let mut terms = Vec::with_capacity(2 * dist.classes.len() + book.dropped().len());
    for c in &dist.classes {
        terms.push(class_gap(c.covered.value(), c.string_mass, c.channel_logprob));
        let uncovered = c.class_size.value() - c.covered.value();
        terms.push(class_gap(&uncovered, LogProb::ZERO, c.channel_logprob));
    }
    for d in book.dropped() {
        terms.push(class_gap(d.class_size.value(), LogProb::ZERO, d.string_logprob));
    }
    let rounding_residual = 0.5 * compensated_sum(terms);
    let truncation_mass = book.truncation_mass();
    SecrecyReport {
        tv_distance: (rounding_residual + 0.5 * truncation_mass).min(1.0),
        truncation_mass,
        rounding_residual,
        delta_param: book.window().delta,
        classes_dropped: book.dropped().len(),
        message_domain_log2: dist.domain.log2(),
        reduction: REDUCTION_NOTE.to_string(),
        flags: book.flags().to_vec(),
    }
}

/// Output entropy of the channel on `N` uses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyReport {
    pub bits: f64,
    /// True when `bits` is the proven maximum over pure inputs.
    pub proven_maximum: bool,
    pub note: Option<String>,
}

pub fn entropy_sigma_e(channel: &ChannelModel, n: usize) -> EntropyReport {
    let bits = n as f64 * channel.entropy_per_use();
    match channel.kind() {
        ChannelKind::BitFlip => EntropyReport {
            bits,
            proven_maximum: true,
            note: None,
        },
        _ => EntropyReport {
            bits,
            proven_maximum: false,
            note: Some("value attained by a nondegenerate code; not shown to be the maximum".into()),
        },
    }
}

/// `h2(x)`, with `h2(0) = h2(1) = 0`.
pub fn h2(x: f64) -> f64 {
    binary_entropy(x)
}

/// Typicality penalty `delta N + h2(delta)`.
pub fn g_term(n: usize, delta: f64) -> f64 {
    delta * n as f64 + h2(delta)
}

/// Continuity penalty `eps N + (1 + eps) h2(eps / (1 + eps))`.
pub fn f_term(n: usize, eps: f64) -> f64 {
    eps * n as f64 + (1.0 + eps) * h2(eps / (1.0 + eps))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    #[serde(rename = "H_sigmaE")]
    pub h_sigma_e: f64,
    pub g_term: f64,
    pub f_term: f64,
    #[serde(rename = "M_upper")]
    pub m_upper: f64,
    #[serde(rename = "M_achieved")]
    pub m_achieved: f64,
    pub proven_maximum: bool,
}

/// Upper bound on hidden bits per block; fails if `m_achieved` exceeds it.
pub fn upper_bound(
    channel: &ChannelModel,
    n: usize,
    delta: f64,
    eps: f64,
    m_achieved: f64,
) -> Result<BoundReport> {
    for (name, v) in [("delta", delta), ("eps", eps)] {
        if !(0.0..1.0).contains(&v) {
            return Err(domain(format!("{name} = {v} must lie in [0, 1)")));
        }
    }
    let h = entropy_sigma_e(channel, n);
    let g = g_term(n, delta);
    let f = f_term(n, eps);
    let report = BoundReport {
        h_sigma_e: h.bits,
        g_term: g,
        f_term: f,
        m_upper: h.bits + g + f,
        m_achieved,
        proven_maximum: h.proven_maximum,
    };
    if m_achieved > report.m_upper {
        return Err(Error::Integrity(format!(
            "achieved {m_achieved} bits exceeds the upper bound {}",
            report.m_upper
        )));
    }
    Ok(report)
}

/// Error probabilities on the code space and their entropy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaBound {
    pub alpha_diag: Vec<f64>,
    pub bound_bits: f64,
    /// Trace of alpha before renormalization.
    pub alpha_trace: f64,
    /// Largest Frobenius residual among the pair checks.
    pub max_residual: f64,
}

/// Tolerance for `P E_i^dag E_j P = alpha_ij P`.
pub const KL_TOLERANCE: f64 = 1e-8;

/// Diagonalized Knill-Laflamme matrix of `kraus` on the code space `projector`.
pub fn kl_alpha_bound(kraus: &[DMatrix<Complex64>], projector: &DMatrix<Complex64>) -> Result<AlphaBound> {
    if kraus.is_empty() {
        return Err(domain("empty Kraus set"));
    }
    let dim = projector.nrows();
    if projector.ncols() != dim || kraus.iter().any(|k| k.nrows() != dim || k.ncols() != dim) {
        return Err(domain("Kraus operators and projector must be square of equal size"));
    }
    let rank = projector.trace().re;
    if rank < 0.5 {
        return Err(domain("projector has zero trace"));
    }
    let sandwiched: Vec<DMatrix<Complex64>> = kraus.iter().map(|k| k * projector).collect();
    let m = kraus.len();
    let mut alpha = DMatrix::<Complex64>::zeros(m, m);
    let mut max_residual = 0.0f64;
    for i in 0..m {
        for j in i..m {
            let block = sandwiched[i].adjoint() * &sandwiched[j];
            let a = block.trace() / rank;
            let residual = (&block - projector * a).norm();
            if residual > KL_TOLERANCE {
                return Err(Error::NotCorrectable { i, j, residual });
            }
            max_residual = max_residual.max(residual);
            alpha[(i, j)] = a;
            alpha[(j, i)] = a.conj();
        }
    }
    let eig = SymmetricEigen::new(alpha);
    let mut diag: Vec<f64> = eig.eigenvalues.iter().map(|&v| v.max(0.0)).collect();
    diag.sort_by(|a, b| b.total_cmp(a));
    let trace: f64 = diag.iter().sum();
    if trace <= 0.0 {
        return Err(domain("alpha matrix has zero trace"));
    }
    for v in &mut diag {
        *v /= trace;
    }
    let bound_bits = compensated_sum(diag.iter().filter(|&&a| a > 0.0).map(|&a| -a * a.log2()));
    Ok(AlphaBound {
        alpha_diag: diag,
        bound_bits,
        alpha_trace: trace,
        max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::WindowSpec;

    fn bitflip(p: f64) -> ChannelModel {
        ChannelModel::bit_flip(p).unwrap()
    }

    #[test]
    fn fair_coin_full_window_is_exact() {
        let book = StegoCodebook::compile(&bitflip(0.5), 8, WindowSpec::Full).unwrap();
        let r = tv_to_channel(&book);
        assert_eq!(r.tv_distance, 0.0);
        assert_eq!(r.truncation_mass, 0.0);
        assert!((induced_distribution(&book).total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn induced_mass_is_normalized() {
        for (p, n, d) in [(0.1, 40, 1.0), (0.2, 100, 2.0), (0.3, 500, 1.5)] {
            let book = StegoCodebook::compile(&bitflip(p), n, WindowSpec::ClampedBand(d)).unwrap();
            let dist = induced_distribution(&book);
            assert!((dist.total_mass() - 1.0).abs() < 1e-10);
            let l = BigUint::from(1u32) << book.otp_width() as usize;
            let dist = induced_distribution_on(&book, &l).unwrap();
            assert!((dist.total_mass() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn decomposition_bound_holds() {
        let book = StegoCodebook::compile(&bitflip(0.1), 200, WindowSpec::Band(1.0)).unwrap();
        let r = tv_to_channel(&book);
        assert!(r.tv_distance <= r.truncation_mass + r.rounding_residual + 1e-9);
        assert!(r.tv_distance >= 0.5 * r.truncation_mass);
    }

    #[test]
    fn tv_falls_as_window_widens() {
        let ch = bitflip(0.1);
        let tv: Vec<f64> = [1.0, 2.0, 3.0]
            .iter()
            .map(|&d| tv_to_channel(&StegoCodebook::compile(&ch, 200, WindowSpec::Band(d)).unwrap()).tv_distance)
            .collect();
        assert!(tv[0] > tv[1] && tv[1] > tv[2], "{tv:?}");
    }

    #[test]
    fn entropy_closed_forms() {
        let e = entropy_sigma_e(&bitflip(0.1), 100);
        assert!((e.bits - 46.899_559_358_928_12).abs() < 1e-9);
        assert!(e.proven_maximum);
        let e = entropy_sigma_e(&ChannelModel::depolarizing(0.1).unwrap(), 100);
        assert!((e.bits - 62.749_184_366_139_69).abs() < 1e-9);
        assert!(!e.proven_maximum);
        assert_eq!(entropy_sigma_e(&bitflip(0.0), 100).bits, 0.0);
    }

    #[test]
    fn penalties() {
        assert_eq!(h2(0.0), 0.0);
        assert_eq!(h2(1.0), 0.0);
        assert!(g_term(200, 0.01) > g_term(100, 0.01));
        assert!(f_term(200, 0.01) > f_term(100, 0.01));
        assert_eq!(g_term(100, 0.0), 0.0);
        assert_eq!(f_term(100, 0.0), 0.0);
    }

    #[test]
    fn bound_value_and_integrity() {
        let b = upper_bound(&bitflip(0.1), 1000, 0.01, 0.01, 0.0).unwrap();
        assert!((b.m_upper - 489.157_324_132_981_7).abs() < 1e-9);
        let zero = upper_bound(&bitflip(0.1), 1000, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(zero.m_upper, zero.h_sigma_e);
        assert!(matches!(
            upper_bound(&bitflip(0.1), 1000, 0.01, 0.01, 500.0),
            Err(Error::Integrity(_))
        ));
        assert!(upper_bound(&bitflip(0.1), 1000, 1.0, 0.01, 0.0).is_err());
    }

    #[test]
    fn identity_kraus_gives_zero_bound() {
        let id = DMatrix::<Complex64>::identity(4, 4);
        let mut p = DMatrix::<Complex64>::zeros(4, 4);
        p[(0, 0)] = Complex64::new(1.0, 0.0);
        p[(3, 3)] = Complex64::new(1.0, 0.0);
        let r = kl_alpha_bound(&[id], &p).unwrap();
        assert_eq!(r.alpha_diag, vec![1.0]);
        assert_eq!(r.bound_bits, 0.0);
    }

    #[test]
    fn uncorrectable_pair_is_reported() {
        // a code space of full rank cannot tell I from Z
        let one = Complex64::new(1.0, 0.0);
        let id = DMatrix::<Complex64>::identity(2, 2);
        let mut z = DMatrix::<Complex64>::zeros(2, 2);
        z[(0, 0)] = one;
        z[(1, 1)] = -one;
        assert!(matches!(
            kl_alpha_bound(&[id.clone(), z], &id),
            Err(Error::NotCorrectable { i: 0, j: 1, .. })
        ));
    }
}
