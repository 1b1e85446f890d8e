//! Channel models, typical windows and the per-weight-class tables the codec
//! is compiled from.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use serde::{Serialize, Serializer};

use crate::error::{domain, Error, Result};
use crate::prob::{
    self, binomial, check_probability_vector, log2_sum_exp2, multinomial, shannon_entropy,
    BigCount, LogProb, WeightVector,
};

/// Default ceiling on the number of enumerated weight classes.
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

const PAULI_LETTERS: [char; 4] = ['I', 'X', 'Y', 'Z'];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ChannelKind {
    BitFlip,
    Depolarizing,
    RandomUnitary,
}

/// A memoryless single-qubit channel described by its error-symbol probabilities.
///
/// Index 0 is always the identity outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    kind: ChannelKind,
    probs: Vec<f64>,
    /// Total error probability for bit-flip and depolarizing channels.
    error_prob: Option<f64>,
}

impl ChannelModel {
    pub fn bit_flip(p: f64) -> Result<Self> {
        check_unit(p)?;
        Ok(ChannelModel {
            kind: ChannelKind::BitFlip,
            probs: vec![1.0 - p, p],
            error_prob: Some(p),
        })
    }

    pub fn depolarizing(p: f64) -> Result<Self> {
        check_unit(p)?;
        let third = p / 3.0;
        Ok(ChannelModel {
            kind: ChannelKind::Depolarizing,
            probs: vec![1.0 - p, third, third, third],
            error_prob: Some(p),
        })
    }

    pub fn random_unitary(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(domain("random-unitary channel needs at least two outcomes"));
        }
        if probs.len() > 4 + 26 {
            return Err(domain("random-unitary channel supports at most 30 outcomes"));
        }
        check_probability_vector(&probs)?;
        Ok(ChannelModel {
            kind: ChannelKind::RandomUnitary,
            probs,
            error_prob: None,
        })
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn alphabet_size(&self) -> usize {
        self.probs.len()
    }

    /// Total probability of a non-identity outcome.
    pub fn error_probability(&self) -> f64 {
        self.error_prob.unwrap_or(1.0 - self.probs[0])
    }

    /// Whether typicality is judged on total error weight rather than per symbol.
    pub fn is_weight_grouped(&self) -> bool {
        !matches!(self.kind, ChannelKind::RandomUnitary)
    }

    /// Printable letter for alphabet index `i`: `I X Y Z`, then `A`, `B`, ...
    pub fn symbol_char(&self, i: usize) -> char {
        symbol_char(i)
    }

    pub fn symbol_index(&self, c: char) -> Option<usize> {
        let idx = match c {
            'I' => 0,
            'X' => 1,
            'Y' => 2,
            'Z' => 3,
            'A'..='Z' => 4 + (c as usize - 'A' as usize),
            _ => return None,
        };
        (idx < self.alphabet_size()).then_some(idx)
    }

    /// Single-use entropy in bits: `h(p)`, `s(p)` or `H(p_1..p_k)`.
    pub fn entropy_per_use(&self) -> f64 {
        shannon_entropy(&self.probs)
    }
}

fn symbol_char(i: usize) -> char {
    if i < 4 {
        PAULI_LETTERS[i]
    } else {
        (b'A' + (i - 4) as u8) as char
    }
}

fn check_unit(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(domain(format!("error probability {p} not in [0, 1]")));
    }
    Ok(())
}

impl fmt::Display for ChannelModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ChannelKind::BitFlip => write!(f, "bitflip:p={}", self.error_probability()),
            ChannelKind::Depolarizing => write!(f, "depol:p={}", self.error_probability()),
            ChannelKind::RandomUnitary => {
                write!(f, "ru:p=")?;
                for (i, p) in self.probs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{p}")?;
                }
                Ok(())
            }
        }
    }
}

impl Serialize for ChannelModel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl FromStr for ChannelModel {
    type Err = Error;

    /// Parses `bitflip:p=0.1`, `depol:p=0.1` or `ru:p=0.7,0.2,0.1`.
    fn from_str(spec: &str) -> Result<Self> {
        let parse_err = |token: &str, reason: &str| Error::Parse {
            token: token.to_string(),
            reason: reason.to_string(),
        };
        let (name, rest) = spec
            .split_once(':')
            .ok_or_else(|| parse_err(spec, "expected `<kind>:p=<values>`"))?;
        let values = rest
            .strip_prefix("p=")
            .ok_or_else(|| parse_err(rest, "expected `p=`"))?;
        let mut probs = Vec::new();
        for tok in values.split(',') {
            let v: f64 = tok
                .trim()
                .parse()
                .map_err(|_| parse_err(tok, "not a number"))?;
            probs.push(v);
        }
        let single = |probs: &[f64]| -> Result<f64> {
            match probs {
                [p] => Ok(*p),
                _ => Err(parse_err(values, "expected a single probability")),
            }
        };
        let model = match name {
            "bitflip" => ChannelModel::bit_flip(single(&probs)?),
            "depol" => ChannelModel::depolarizing(single(&probs)?),
            "ru" => ChannelModel::random_unitary(probs),
            other => return Err(parse_err(other, "unknown channel kind (bitflip, depol, ru)")),
        };
        model.map_err(|e| parse_err(values, &e.to_string()))
    }
}

/// How the typical window is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowSpec {
    /// Band of relative half-width `delta = D * sqrt((1-p)/(pN))`; `delta >= 1` is rejected.
    Band(f64),
    /// Same band, but `delta >= 1` is accepted and the lower edge clamps at zero.
    ClampedBand(f64),
    /// Every weight vector with nonzero probability.
    Full,
    /// Explicit total-weight range, for weight-grouped channels.
    WeightRange(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowBounds {
    /// Inclusive range of the number of non-identity symbols.
    TotalWeight { lo: usize, hi: usize },
    /// Inclusive range per alphabet symbol.
    PerSymbol(Vec<(usize, usize)>),
}

/// The set of admitted weight vectors for one block length.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypicalWindow {
    /// Relative half-width; `None` for full or explicit-range windows.
    pub delta: Option<f64>,
    /// Coverage constant the half-width was derived from.
    pub d: Option<f64>,
    pub n: usize,
    pub bounds: WindowBounds,
}

impl TypicalWindow {
    pub fn admits(&self, weights: &WeightVector) -> bool {
        match &self.bounds {
            WindowBounds::TotalWeight { lo, hi } => {
                let w = weights.error_weight();
                *lo <= w && w <= *hi
            }
            WindowBounds::PerSymbol(ranges) => weights
                .counts()
                .iter()
                .zip(ranges)
                .all(|(&c, &(lo, hi))| lo <= c && c <= hi),
        }
    }

    /// Inclusive total-weight range for weight-grouped windows.
    pub fn weight_range(&self) -> Option<(usize, usize)> {
        match self.bounds {
            WindowBounds::TotalWeight { lo, hi } => Some((lo, hi)),
            WindowBounds::PerSymbol(_) => None,
        }
    }
}

// Absorbs representation error such as 10 * (1 - 0.6) = 4.000000000000001.
fn inward_bounds(center: f64, delta: f64, n: usize) -> (i64, i64) {
    let tol = 1e-9 * center.abs().max(1.0);
    let lo = (center * (1.0 - delta) - tol).ceil() as i64;
    let hi = (center * (1.0 + delta) + tol).floor() as i64;
    (lo.max(0), hi.min(n as i64))
}

/// Typical window for `channel` at block length `n`.
pub fn make_window(channel: &ChannelModel, n: usize, spec: WindowSpec) -> Result<TypicalWindow> {
    if n == 0 {
        return Err(domain("block length N must be positive"));
    }
    let (d, clamp) = match spec {
        WindowSpec::Band(d) => (d, false),
        WindowSpec::ClampedBand(d) => (d, true),
        WindowSpec::Full => return Ok(full_window(channel, n)),
        WindowSpec::WeightRange(lo, hi) => {
            if !channel.is_weight_grouped() {
                return Err(domain("explicit weight ranges apply to bit-flip and depolarizing channels"));
            }
            if lo > hi || hi > n {
                return Err(Error::EmptyWindow {
                    symbol: "error weight".into(),
                    reason: format!("range [{lo}, {hi}] invalid for N = {n}"),
                });
            }
            return Ok(TypicalWindow {
                delta: None,
                d: None,
                n,
                bounds: WindowBounds::TotalWeight { lo, hi },
            });
        }
    };
    if !(d > 0.0 && d.is_finite()) {
        return Err(domain(format!("coverage constant D = {d} must be positive")));
    }
    let nf = n as f64;
    let check_delta = |delta: f64| -> Result<()> {
        if !clamp && delta >= 1.0 {
            return Err(domain(format!(
                "typical-window half-width delta = {delta:.6} must be below 1 (reduce D or increase N)"
            )));
        }
        Ok(())
    };

    if channel.is_weight_grouped() {
        let p = channel.error_probability();
        if p <= 0.0 || p >= 1.0 {
            return Err(Error::EmptyWindow {
                symbol: "X".into(),
                reason: format!("error probability {p} leaves no typical band"),
            });
        }
        let delta = d * ((1.0 - p) / (p * nf)).sqrt();
        check_delta(delta)?;
        let (lo, hi) = inward_bounds(nf * p, delta, n);
        if lo > hi {
            return Err(Error::EmptyWindow {
                symbol: "error weight".into(),
                reason: format!("N*p*(1 -/+ delta) rounds inward to [{lo}, {hi}]"),
            });
        }
        return Ok(TypicalWindow {
            delta: Some(delta),
            d: Some(d),
            n,
            bounds: WindowBounds::TotalWeight {
                lo: lo as usize,
                hi: hi as usize,
            },
        });
    }

    let probs = channel.probs();
    let delta = probs
        .iter()
        .filter(|&&p| p > 0.0 && p < 1.0)
        .map(|&p| d * ((1.0 - p) / (p * nf)).sqrt())
        .fold(0.0f64, f64::max);
    if delta == 0.0 {
        return Err(Error::EmptyWindow {
            symbol: "all".into(),
            reason: "deterministic channel has no typical band".into(),
        });
    }
    check_delta(delta)?;
    let mut ranges = Vec::with_capacity(probs.len());
    for (i, &p) in probs.iter().enumerate() {
        if p == 0.0 {
            ranges.push((0, 0));
            continue;
        }
        let (lo, hi) = inward_bounds(nf * p, delta, n);
        if lo > hi {
            return Err(Error::EmptyWindow {
                symbol: symbol_char(i).to_string(),
                reason: format!("N*p = {} gives the empty range [{lo}, {hi}]", nf * p),
            });
        }
        ranges.push((lo as usize, hi as usize));
    }
    let lo_sum: usize = ranges.iter().map(|r| r.0).sum();
    let hi_sum: usize = ranges.iter().map(|r| r.1).sum();
    if lo_sum > n || hi_sum < n {
        return Err(Error::EmptyWindow {
            symbol: "sum".into(),
            reason: format!("no vector in the per-symbol ranges sums to N = {n}"),
        });
    }
    Ok(TypicalWindow {
        delta: Some(delta),
        d: Some(d),
        n,
        bounds: WindowBounds::PerSymbol(ranges),
    })
}

fn full_window(channel: &ChannelModel, n: usize) -> TypicalWindow {
    let bounds = if channel.is_weight_grouped() {
        let p = channel.error_probability();
        let (lo, hi) = if p == 0.0 {
            (0, 0)
        } else if p == 1.0 {
            (n, n)
        } else {
            (0, n)
        };
        WindowBounds::TotalWeight { lo, hi }
    } else {
        WindowBounds::PerSymbol(
            channel
                .probs()
                .iter()
                .map(|&p| if p == 0.0 { (0, 0) } else { (0, n) })
                .collect(),
        )
    };
    TypicalWindow {
        delta: None,
        d: None,
        n,
        bounds,
    }
}

/// One admitted weight class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassEntry {
    /// Symbol counts; for weight-grouped channels `[N - w, w]` over {identity, error}.
    pub weights: WeightVector,
    pub class_size: BigCount,
    /// Probability of each single string in the class.
    pub string_logprob: LogProb,
}

impl ClassEntry {
    /// Total channel probability of the class.
    pub fn class_logprob(&self) -> LogProb {
        if self.string_logprob.is_zero() {
            return LogProb::ZERO;
        }
        LogProb::from_log2(self.class_size.log2() + self.string_logprob.log2())
    }
}

/// Admitted classes of a channel at block length `N`, in lexicographic order of counts.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightClassTable {
    pub channel: ChannelModel,
    pub n: usize,
    pub window: TypicalWindow,
    pub entries: Vec<ClassEntry>,
    /// Channel probability of every string outside the window.
    pub truncation_mass: f64,
}

impl WeightClassTable {
    /// Total channel probability inside the window.
    pub fn covered_mass(&self) -> f64 {
        log2_sum_exp2(self.entries.iter().map(|e| e.class_logprob().log2())).exp2()
    }

    /// Effective entropy per qubit of the admitted strings.
    pub fn effective_entropy(&self) -> f64 {
        let classes: Vec<(LogProb, BigCount)> = self
            .entries
            .iter()
            .map(|e| (e.string_logprob, e.class_size.clone()))
            .collect();
        effective_entropy(&classes, self.n)
    }

    /// Notes that qualify how the table should be read.
    pub fn flags(&self) -> Vec<String> {
        let mut flags = Vec::new();
        if self.channel.kind() == ChannelKind::Depolarizing {
            flags.push(
                "depolarizing typicality is judged on total weight; the window also admits \
                 strings with atypical X/Y/Z proportions"
                    .to_string(),
            );
        }
        flags
    }
}

/// Builds the class table for `channel` under `window`, with the default enumeration cap.
pub fn build_table(channel: &ChannelModel, n: usize, window: &TypicalWindow) -> Result<WeightClassTable> {
    build_table_capped(channel, n, window, DEFAULT_ENUMERATION_CAP)
}

pub fn build_table_capped(
    channel: &ChannelModel,
    n: usize,
    window: &TypicalWindow,
    cap: u64,
) -> Result<WeightClassTable> {
    if window.n != n {
        return Err(domain(format!("window built for N = {}, table requested for N = {n}", window.n)));
    }
    match &window.bounds {
        WindowBounds::TotalWeight { lo, hi } => {
            if !channel.is_weight_grouped() {
                return Err(domain("total-weight window used with a random-unitary channel"));
            }
            Ok(weight_grouped_table(channel, n, window.clone(), *lo, *hi))
        }
        WindowBounds::PerSymbol(ranges) => {
            if channel.is_weight_grouped() || ranges.len() != channel.alphabet_size() {
                return Err(domain("per-symbol window does not match the channel alphabet"));
            }
            symbol_table(channel, n, window.clone(), ranges, cap)
        }
    }
}

fn weight_grouped_table(
    channel: &ChannelModel,
    n: usize,
    window: TypicalWindow,
    lo: usize,
    hi: usize,
) -> WeightClassTable {
    let p = channel.error_probability();
    // Per-string probability of one non-identity letter.
    let letter_prob = channel.probs()[1];
    let letters = (channel.alphabet_size() - 1) as u32;
    let log_letter = if letter_prob > 0.0 { letter_prob.log2() } else { f64::NEG_INFINITY };
    let log_id = if p < 1.0 { (1.0 - p).log2() } else { f64::NEG_INFINITY };
    let string_lp = |w: usize| -> LogProb {
        if (w > 0 && letter_prob == 0.0) || (w < n && p == 1.0) {
            return LogProb::ZERO;
        }
        let mut v = 0.0;
        if w > 0 {
            v += w as f64 * log_letter;
        }
        if w < n {
            v += (n - w) as f64 * log_id;
        }
        LogProb::from_log2(v)
    };

    let mut entries = Vec::with_capacity(hi - lo + 1);
    let mut count = binomial(n, lo).expect("w within [0, N]").into_inner();
    for w in lo..=hi {
        if w > lo {
            count = count * BigUint::from(n - w + 1) / BigUint::from(w);
        }
        let size = &count * BigUint::from(letters).pow(w as u32);
        entries.push(ClassEntry {
            weights: WeightVector::from_counts(vec![n - w, w]),
            class_size: BigCount::new(size),
            string_logprob: string_lp(w),
        });
    }
    // Lexicographic order on [N - w, w] is descending w.
    entries.reverse();

    // Outside mass summed directly over the excluded binomial terms; exact
    // counts below 2000 keep small-N tails at full precision.
    let tail_term = |w: usize| -> f64 {
        if (w > 0 && p == 0.0) || (w < n && p == 1.0) {
            return f64::NEG_INFINITY;
        }
        let log_count = if n <= 2000 {
            binomial(n, w).expect("w within [0, N]").log2()
        } else {
            prob::log2_binomial_approx(n as u64, w as u64)
        };
        log_count
            + if w > 0 { w as f64 * p.log2() } else { 0.0 }
            + if w < n { (n - w) as f64 * (1.0 - p).log2() } else { 0.0 }
    };
    let truncation_mass = log2_sum_exp2((0..lo).chain(hi + 1..=n).map(tail_term)).exp2();

    WeightClassTable {
        channel: channel.clone(),
        n,
        window,
        entries,
        truncation_mass,
    }
}

fn symbol_table(
    channel: &ChannelModel,
    n: usize,
    window: TypicalWindow,
    ranges: &[(usize, usize)],
    cap: u64,
) -> Result<WeightClassTable> {
    let mut vectors = Vec::new();
    enumerate_vectors(ranges, n, cap, &mut vectors)?;
    let probs = channel.probs();
    let mut entries = Vec::with_capacity(vectors.len());
    for counts in vectors {
        let weights = WeightVector::from_counts(counts);
        let class_size = multinomial(&weights)?;
        let string_logprob = prob::string_logprob(&weights, probs)?;
        entries.push(ClassEntry {
            weights,
            class_size,
            string_logprob,
        });
    }
    if entries.is_empty() {
        return Err(Error::EmptyWindow {
            symbol: "sum".into(),
            reason: format!("no weight vector in the window sums to N = {n}"),
        });
    }

    // Direct summation over the complement when it is small enough to enumerate.
    let k = probs.len();
    let all_ranges: Vec<(usize, usize)> = probs
        .iter()
        .map(|&p| if p == 0.0 { (0, 0) } else { (0, n) })
        .collect();
    let total_vectors = binomial(n + k - 1, k - 1)?;
    let truncation_mass = if total_vectors <= BigCount::from(cap.min(2_000_000)) {
        let mut all = Vec::new();
        enumerate_vectors(&all_ranges, n, u64::MAX, &mut all)?;
        let outside = all.into_iter().filter_map(|c| {
            let wv = WeightVector::from_counts(c);
            if window.admits(&wv) {
                return None;
            }
            let lp = prob::string_logprob(&wv, probs).ok()?;
            if lp.is_zero() {
                return None;
            }
            Some(multinomial(&wv).ok()?.log2() + lp.log2())
        });
        log2_sum_exp2(outside).exp2()
    } else {
        let covered = log2_sum_exp2(entries.iter().map(|e| e.class_logprob().log2())).exp2();
        (1.0 - covered).max(0.0)
    };

    Ok(WeightClassTable {
        channel: channel.clone(),
        n,
        window,
        entries,
        truncation_mass,
    })
}

/// All count vectors inside `ranges` summing to `n`, in lexicographic order.
fn enumerate_vectors(
    ranges: &[(usize, usize)],
    n: usize,
    cap: u64,
    out: &mut Vec<Vec<usize>>,
) -> Result<()> {
    let k = ranges.len();
    // suffix_lo[i] / suffix_hi[i]: feasible totals for symbols i..k
    let mut suffix_lo = vec![0usize; k + 1];
    let mut suffix_hi = vec![0usize; k + 1];
    for i in (0..k).rev() {
        suffix_lo[i] = suffix_lo[i + 1] + ranges[i].0;
        suffix_hi[i] = suffix_hi[i + 1] + ranges[i].1;
    }
    let mut current = vec![0usize; k];
    let mut produced = 0u64;
    #[allow(clippy::too_many_arguments)]
    fn rec(
        i: usize,
        remaining: usize,
        ranges: &[(usize, usize)],
        suffix_lo: &[usize],
        suffix_hi: &[usize],
        current: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
        produced: &mut u64,
        cap: u64,
    ) -> Result<()> {
        let k = ranges.len();
        if i + 1 == k {
            let (lo, hi) = ranges[i];
            if lo <= remaining && remaining <= hi {
                current[i] = remaining;
                *produced += 1;
                if *produced > cap {
                    return Err(Error::Capacity {
                        classes: *produced,
                        cap,
                    });
                }
                out.push(current.clone());
            }
            return Ok(());
        }
        let (lo, hi) = ranges[i];
        let min_here = lo.max(remaining.saturating_sub(suffix_hi[i + 1]));
        let max_here = hi.min(remaining.saturating_sub(suffix_lo[i + 1]));
        if remaining < suffix_lo[i + 1] {
            return Ok(());
        }
        for c in min_here..=max_here {
            current[i] = c;
            rec(i + 1, remaining - c, ranges, suffix_lo, suffix_hi, current, out, produced, cap)?;
        }
        Ok(())
    }
    if n < suffix_lo[0] || n > suffix_hi[0] {
        return Ok(());
    }
    rec(0, n, ranges, &suffix_lo, &suffix_hi, &mut current, out, &mut produced, cap)
}

/// `-(1/N) sum multiplicity * p log2 p` over string classes.
pub fn effective_entropy(classes: &[(LogProb, BigCount)], n: usize) -> f64 {
    assert!(n > 0, "block length must be positive");
    let terms = classes.iter().filter_map(|(lp, mult)| {
        if lp.is_zero() || mult.is_zero() {
            return None;
        }
        let mass = (mult.log2() + lp.log2()).exp2();
        Some(-mass * lp.log2())
    });
    prob::compensated_sum(terms) / n as f64
}
