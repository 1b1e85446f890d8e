//! The syndrome codec: messages map to error strings of the typical set, with
//! the shared key choosing one of several disjoint subsets per weight class.
//!
//! For each admitted class `c` the codebook keeps `C_c` codewords, where
//! `C_c = floor(|c| * p_c / q)` and `q` is the probability of the most likely
//! admitted string. The class is cut into `n_c = floor(|c| / C_c)` rank
//! intervals of length `C_c`; subset `j` is the interval
//! `[j * C_c, (j + 1) * C_c)`. Messages are assigned to classes by cumulative
//! `C_c` in lexicographic class order.

pub mod ranking;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::Zero;
use serde::Serialize;

use crate::channels::{
    build_table, make_window, ChannelKind, ChannelModel, TypicalWindow, WeightClassTable, WindowSpec,
};
use crate::error::{domain, Error, Result};
use crate::keystream::{ceil_log2, BlockDraw, KeyBudgetReport, KeySeed, KeyStream};
use crate::prob::{log2_biguint, BigCount, Dyadic, LogProb, WeightVector};

/// Block lengths up to this use exact dyadic arithmetic for `C_c`.
pub const EXACT_ROUNDING_MAX_N: usize = 64;

/// Length-`N` word over the channel alphabet (index 0 is the identity).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ErrorString {
    symbols: Vec<u8>,
}

impl ErrorString {
    pub fn new(symbols: Vec<u8>) -> Self {
        ErrorString { symbols }
    }

    pub fn identity(n: usize) -> Self {
        ErrorString { symbols: vec![0; n] }
    }

    /// Parses letters `I X Y Z A B ...` for an alphabet of `k` symbols.
    pub fn parse(text: &str, k: usize) -> Result<Self> {
        let mut symbols = Vec::with_capacity(text.len());
        for c in text.trim().chars() {
            let idx = match c {
                'I' => 0,
                'X' => 1,
                'Y' => 2,
                'Z' => 3,
                'A'..='Z' => 4 + (c as usize - 'A' as usize),
                _ => usize::MAX,
            };
            if idx >= k {
                return Err(Error::Parse {
                    token: c.to_string(),
                    reason: format!("not a letter of the {k}-symbol error alphabet"),
                });
            }
            symbols.push(idx as u8);
        }
        Ok(ErrorString { symbols })
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Number of non-identity positions.
    pub fn error_weight(&self) -> usize {
        self.symbols.iter().filter(|&&s| s != 0).count()
    }

    /// Symbol counts over a `k`-letter alphabet.
    pub fn weights(&self, k: usize) -> Result<WeightVector> {
        let mut counts = vec![0usize; k];
        for &s in &self.symbols {
            let s = s as usize;
            if s >= k {
                return Err(domain(format!("symbol index {s} outside a {k}-letter alphabet")));
            }
            counts[s] += 1;
        }
        Ok(WeightVector::from_counts(counts))
    }
}

impl fmt::Display for ErrorString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.symbols {
            let c = match s {
                0 => 'I',
                1 => 'X',
                2 => 'Y',
                3 => 'Z',
                other => (b'A' + other - 4) as char,
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Index of a hidden message, in `[0, C_total)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Message(pub BigUint);

impl Message {
    pub fn index(&self) -> &BigUint {
        &self.0
    }
}

impl From<u64> for Message {
    fn from(v: u64) -> Self {
        Message(BigUint::from(v))
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl FromStr for Message {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.trim().parse::<BigUint>().map(Message).map_err(|_| Error::Parse {
            token: s.to_string(),
            reason: "message must be a nonnegative decimal integer".into(),
        })
    }
}

/// One class of the compiled codebook.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CodebookClass {
    pub weights: WeightVector,
    pub class_size: BigCount,
    pub string_logprob: LogProb,
    /// Codewords per subset.
    pub c_class: BigCount,
    /// Disjoint subsets the class is cut into.
    pub n_subsets: BigCount,
    /// First message index mapped to this class.
    pub offset: BigCount,
}

/// An admitted class whose codeword count rounds down to zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DroppedClass {
    pub weights: WeightVector,
    pub class_size: BigCount,
    pub string_logprob: LogProb,
}

/// Compiled message/error-string codec.
#[derive(Debug, Clone)]
pub struct StegoCodebook {
    channel: ChannelModel,
    n: usize,
    window: TypicalWindow,
    classes: Vec<CodebookClass>,
    dropped: Vec<DroppedClass>,
    c_total: BigCount,
    q_log: LogProb,
    m_bits: f64,
    n_subsets_max: BigCount,
    truncation_mass: f64,
    exact_rounding: bool,
    flags: Vec<String>,
}

/// JSON summary of a codebook.
#[derive(Debug, Clone, Serialize)]
pub struct CodebookSummary {
    #[serde(rename = "N")]
    pub n: usize,
    pub channel: ChannelModel,
    pub delta: Option<f64>,
    #[serde(rename = "C_total")]
    pub c_total: BigCount,
    #[serde(rename = "C_total_log2")]
    pub c_total_log2: f64,
    #[serde(rename = "M_bits")]
    pub m_bits: f64,
    pub dropped_classes: usize,
    pub truncation_mass: f64,
    pub n_subsets_max: BigCount,
    pub flags: Vec<String>,
}

/// Where a string sits inside the codebook.
#[derive(Debug, Clone, PartialEq)]
pub enum Placement {
    /// Inside admitted class `class`, at rank `rank`.
    Class { class: usize, rank: BigUint },
    /// Inside the window but in a class with no codewords.
    Dropped,
    /// Outside the typical window.
    Atypical,
}

impl StegoCodebook {
    /// Builds the window, the class table and the codebook in one go.
    pub fn compile(channel: &ChannelModel, n: usize, spec: WindowSpec) -> Result<Self> {
        let window = make_window(channel, n, spec)?;
        let table = build_table(channel, n, &window)?;
        Self::from_table(&table)
    }

    pub fn from_table(table: &WeightClassTable) -> Result<Self> {
        let n = table.n;
        let live: Vec<usize> = (0..table.entries.len())
            .filter(|&i| !table.entries[i].string_logprob.is_zero())
            .collect();
        if live.is_empty() {
            return Err(Error::RateZero);
        }
        let exact = n <= EXACT_ROUNDING_MAX_N;
        let c_values: Vec<BigUint> = if exact {
            exact_codeword_counts(table)
        } else {
            log_codeword_counts(table)
        };
        let q_log = live
            .iter()
            .map(|&i| table.entries[i].string_logprob)
            .fold(LogProb::ZERO, |a, b| if b > a { b } else { a });

        let mut classes = Vec::new();
        let mut dropped = Vec::new();
        let mut c_total = BigUint::zero();
        let mut n_max = BigUint::from(1u32);
        for (entry, c) in table.entries.iter().zip(c_values) {
            if c.is_zero() {
                dropped.push(DroppedClass {
                    weights: entry.weights.clone(),
                    class_size: entry.class_size.clone(),
                    string_logprob: entry.string_logprob,
                });
                continue;
            }
            if &c > entry.class_size.value() {
                return Err(Error::Integrity(format!(
                    "class {} gets {c} codewords but has only {} strings",
                    entry.weights, entry.class_size
                )));
            }
            let n_subsets = entry.class_size.value() / &c;
            if n_subsets > n_max {
                n_max = n_subsets.clone();
            }
            classes.push(CodebookClass {
                weights: entry.weights.clone(),
                class_size: entry.class_size.clone(),
                string_logprob: entry.string_logprob,
                offset: BigCount::new(c_total.clone()),
                c_class: BigCount::new(c.clone()),
                n_subsets: BigCount::new(n_subsets),
            });
            c_total += c;
        }
        if c_total.is_zero() {
            return Err(Error::RateZero);
        }
        let m_bits = log2_biguint(&c_total);
        Ok(StegoCodebook {
            channel: table.channel.clone(),
            n,
            window: table.window.clone(),
            classes,
            dropped,
            c_total: BigCount::new(c_total),
            q_log,
            m_bits,
            n_subsets_max: BigCount::new(n_max),
            truncation_mass: table.truncation_mass,
            exact_rounding: exact,
            flags: table.flags(),
        })
    }

    pub fn channel(&self) -> &ChannelModel {
        &self.channel
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn window(&self) -> &TypicalWindow {
        &self.window
    }

    pub fn classes(&self) -> &[CodebookClass] {
        &self.classes
    }

    pub fn dropped(&self) -> &[DroppedClass] {
        &self.dropped
    }

    pub fn c_total(&self) -> &BigCount {
        &self.c_total
    }

    /// Log-probability of the most probable admitted string.
    pub fn q_log(&self) -> LogProb {
        self.q_log
    }

    /// `log2 C_total`.
    pub fn m_bits(&self) -> f64 {
        self.m_bits
    }

    pub fn n_subsets_max(&self) -> &BigCount {
        &self.n_subsets_max
    }

    /// Channel probability outside the typical window.
    pub fn truncation_mass(&self) -> f64 {
        self.truncation_mass
    }

    /// Whether `C_c` was obtained with exact dyadic arithmetic.
    pub fn exact_rounding(&self) -> bool {
        self.exact_rounding
    }

    pub fn flags(&self) -> &[String] {
        &self.flags
    }

    /// Width of one-time-pad messages: `floor(log2 C_total)`.
    pub fn otp_width(&self) -> u64 {
        self.c_total.value().bits() - 1
    }

    pub fn summary(&self) -> CodebookSummary {
        CodebookSummary {
            n: self.n,
            channel: self.channel.clone(),
            delta: self.window.delta,
            c_total: self.c_total.clone(),
            c_total_log2: self.m_bits,
            m_bits: self.m_bits,
            dropped_classes: self.dropped.len(),
            truncation_mass: self.truncation_mass,
            n_subsets_max: self.n_subsets_max.clone(),
            flags: self.flags.clone(),
        }
    }

    /// Weight class a string belongs to under this codebook's grouping.
    pub fn class_weights(&self, e: &ErrorString) -> Result<WeightVector> {
        if e.len() != self.n {
            return Err(domain(format!("string has length {}, codebook N = {}", e.len(), self.n)));
        }
        let k = self.channel.alphabet_size();
        let wv = e.weights(k)?;
        if self.channel.is_weight_grouped() {
            let w = wv.error_weight();
            Ok(WeightVector::from_counts(vec![self.n - w, w]))
        } else {
            Ok(wv)
        }
    }

    /// Locates a string: admitted class and rank, dropped class, or outside the window.
    pub fn locate(&self, e: &ErrorString) -> Result<Placement> {
        let wv = self.class_weights(e)?;
        match self.classes.binary_search_by(|c| c.weights.cmp(&wv)) {
            Ok(idx) => {
                let rank = self.rank(idx, e)?;
                Ok(Placement::Class { class: idx, rank })
            }
            Err(_) if self.window.admits(&wv) => Ok(Placement::Dropped),
            Err(_) => Ok(Placement::Atypical),
        }
    }

    fn rank(&self, idx: usize, e: &ErrorString) -> Result<BigUint> {
        let class = &self.classes[idx];
        if self.channel.is_weight_grouped() {
            let letters = self.channel.alphabet_size() - 1;
            ranking::rank_in_weight_class(e, class.weights.error_weight(), letters)
        } else {
            ranking::rank_in_class(e, &class.weights)
        }
    }

    fn unrank(&self, idx: usize, rank: &BigUint) -> Result<ErrorString> {
        let class = &self.classes[idx];
        if self.channel.is_weight_grouped() {
            let letters = self.channel.alphabet_size() - 1;
            ranking::unrank_in_weight_class(rank, self.n, class.weights.error_weight(), letters)
        } else {
            ranking::unrank_in_class(rank, &class.weights, self.n)
        }
    }

    /// Class index and in-class offset of a message.
    pub fn message_class(&self, m: &Message) -> Result<(usize, BigUint)> {
        if m.index() >= self.c_total.value() {
            return Err(domain(format!(
                "message {m} outside [0, {})",
                self.c_total
            )));
        }
        let idx = self
            .classes
            .partition_point(|c| c.offset.value() <= m.index())
            - 1;
        Ok((idx, m.index() - self.classes[idx].offset.value()))
    }

    /// Encodes with an explicit subset index instead of key bits.
    pub fn encode_with_subset(&self, m: &Message, subset: &BigUint) -> Result<ErrorString> {
        let (idx, r) = self.message_class(m)?;
        let class = &self.classes[idx];
        if subset >= class.n_subsets.value() {
            return Err(domain(format!(
                "subset {subset} outside [0, {}) for class {}",
                class.n_subsets, class.weights
            )));
        }
        self.unrank(idx, &(subset * class.c_class.value() + r))
    }

    /// Maps a message to an error string, drawing one block of key bits.
    pub fn encode(&self, m: &Message, key: &mut KeyStream) -> Result<ErrorString> {
        let (idx, _) = self.message_class(m)?;
        let draw = key.draw_block(self.n_subsets_max.value())?;
        let j = draw.subset_index(self.classes[idx].n_subsets.value());
        self.encode_with_subset(m, &j)
    }

    /// Recovers the message; key bits are drawn before any validation so the
    /// receiver's stream advances exactly as the sender's did.
    pub fn decode(&self, e: &ErrorString, key: &mut KeyStream) -> Result<Message> {
        let draw = key.draw_block(self.n_subsets_max.value())?;
        self.decode_with_draw(e, &draw)
    }

    fn decode_with_draw(&self, e: &ErrorString, draw: &BlockDraw) -> Result<Message> {
        let (idx, rank) = match self.locate(e)? {
            Placement::Class { class, rank } => (class, rank),
            Placement::Dropped => {
                return Err(Error::NotACodeword(format!(
                    "class {} has no codewords",
                    self.class_weights(e)?
                )))
            }
            Placement::Atypical => {
                return Err(Error::AtypicalString(self.class_weights(e)?.to_string()))
            }
        };
        let j = draw.subset_index(self.classes[idx].n_subsets.value());
        self.decode_in_subset(idx, &rank, &j)
    }

    /// Decodes with an explicit subset index instead of key bits.
    pub fn decode_with_subset(&self, e: &ErrorString, subset: &BigUint) -> Result<Message> {
        match self.locate(e)? {
            Placement::Class { class, rank } => self.decode_in_subset(class, &rank, subset),
            Placement::Dropped => Err(Error::NotACodeword("class has no codewords".into())),
            Placement::Atypical => Err(Error::AtypicalString(self.class_weights(e)?.to_string())),
        }
    }

    fn decode_in_subset(&self, idx: usize, rank: &BigUint, j: &BigUint) -> Result<Message> {
        let class = &self.classes[idx];
        let c = class.c_class.value();
        let (got_subset, r) = rank.div_rem(c);
        if &got_subset != j {
            return Err(Error::NotACodeword(format!(
                "rank {rank} lies in subset {got_subset}, key selects subset {j}"
            )));
        }
        Ok(Message(class.offset.value() + r))
    }
}

/// `C_c` by exact comparison of dyadic string probabilities.
fn exact_codeword_counts(table: &WeightClassTable) -> Vec<BigUint> {
    let probs = table.channel.probs();
    let grouped = table.channel.is_weight_grouped();
    let dyadic: Vec<Option<Dyadic>> = table
        .entries
        .iter()
        .map(|e| {
            if grouped {
                Dyadic::string_prob(e.weights.counts(), &[probs[0], probs[1]])
            } else {
                Dyadic::string_prob(e.weights.counts(), probs)
            }
        })
        .collect();
    let q = dyadic
        .iter()
        .flatten()
        .max_by(|a, b| a.cmp_value(b))
        .expect("at least one live class")
        .clone();
    table
        .entries
        .iter()
        .zip(&dyadic)
        .map(|(e, d)| match d {
            Some(d) => d.scaled_floor(e.class_size.value(), &q),
            None => BigUint::zero(),
        })
        .collect()
}

/// `C_c` in log space, biased one ulp down before the floor.
fn log_codeword_counts(table: &WeightClassTable) -> Vec<BigUint> {
    let q_log = table
        .entries
        .iter()
        .map(|e| e.string_logprob.log2())
        .fold(f64::NEG_INFINITY, f64::max);
    table
        .entries
        .iter()
        .map(|e| {
            let lp = e.string_logprob.log2();
            if lp == f64::NEG_INFINITY {
                return BigUint::zero();
            }
            let gap = lp - q_log;
            match gap.partial_cmp(&0.0) {
                Some(Ordering::Equal) | Some(Ordering::Greater) => e.class_size.value().clone(),
                _ => {
                    let factor = gap.exp2().next_down();
                    if factor <= 0.0 {
                        return BigUint::zero();
                    }
                    let d = Dyadic::from_f64(factor);
                    let scaled = e.class_size.value() * &d.mantissa;
                    if d.exponent >= 0 {
                        scaled << d.exponent as usize
                    } else {
                        scaled >> (-d.exponent) as usize
                    }
                }
            }
        })
        .collect()
}

/// Rate of the compiled codebook next to its closed-form asymptote.
#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    #[serde(rename = "N")]
    pub n: usize,
    pub channel: ChannelModel,
    pub delta: Option<f64>,
    #[serde(rename = "M_bits")]
    pub m_bits: f64,
    /// `N h(p)`, `N s(p)` or `N H(p_1..p_k)`.
    pub asymptote_bits: f64,
    /// `M_bits / asymptote_bits`.
    pub ratio: f64,
}

pub fn achievable_rate(channel: &ChannelModel, n: usize, spec: WindowSpec) -> Result<RateReport> {
    let book = StegoCodebook::compile(channel, n, spec)?;
    Ok(rate_report(&book))
}

pub fn rate_report(book: &StegoCodebook) -> RateReport {
    let asymptote_bits = book.n as f64 * book.channel.entropy_per_use();
    RateReport {
        n: book.n,
        channel: book.channel.clone(),
        delta: book.window.delta,
        m_bits: book.m_bits,
        asymptote_bits,
        ratio: if asymptote_bits > 0.0 {
            book.m_bits / asymptote_bits
        } else {
            f64::NAN
        },
    }
}

/// Key accounting for a bit-flip codebook built with band half-width `d`.
///
/// `clamp` selects [`WindowSpec::ClampedBand`] so short blocks with a wide
/// band still compile.
pub fn key_cost(channel: &ChannelModel, n: usize, d: f64, clamp: bool) -> Result<KeyBudgetReport> {
    if channel.kind() != ChannelKind::BitFlip {
        return Err(domain("key cost is defined for the bit-flip channel"));
    }
    let p = channel.error_probability();
    if p <= 0.0 || p >= 1.0 {
        return Err(domain(format!("bit-flip probability {p} must lie in (0, 1)")));
    }
    let spec = if clamp { WindowSpec::ClampedBand(d) } else { WindowSpec::Band(d) };
    let book = StegoCodebook::compile(channel, n, spec)?;
    let delta = d * ((1.0 - p) / (p * n as f64)).sqrt();
    let k_formula = 2.0 * n as f64 * p * delta * ((1.0 - p) / p).log2();

    let mut key = KeyStream::new(KeySeed([0; 32]));
    book.encode(&Message::from(0), &mut key)?;
    Ok(KeyBudgetReport {
        k_formula,
        k_measured: key.consumed(),
        n_subsets_max: book.n_subsets_max.clone(),
        log2_n_max_ceil: ceil_log2(book.n_subsets_max.value()),
        delta,
        n,
        otp_bits: book.otp_width(),
    })
}
