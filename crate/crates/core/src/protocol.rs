//! Monte Carlo of the full exchange: Alice encodes, the link is noiseless,
//! Bob decodes, and Eve runs a likelihood-ratio test on every block.

use num_bigint::{BigUint, RandBigInt};
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{ChannelModel, WindowSpec};
use crate::codec::{ErrorString, Message, StegoCodebook};
use crate::error::{domain, Error, Result};
use crate::keystream::{apply_pad, bits_at, block_draw_bits, KeySeed, KeyStream};
use crate::prob::string_logprob;
use crate::secrecy::{induced_distribution_on, secrecy_report, InducedDistribution};

/// z-score of a two-sided 99% band.
pub const Z_99: f64 = 2.576;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub channel: ChannelModel,
    #[serde(rename = "N")]
    pub n: usize,
    pub window: WindowSpec,
    pub blocks: u64,
    pub seed: KeySeed,
    pub otp: bool,
    pub eve_test: bool,
}

/// One row of the per-block trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub block: u64,
    pub weight: usize,
    pub llr: f64,
    pub key_bits: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LlrStats {
    pub mean: f64,
    pub var: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub blocks: u64,
    pub blocks_ok: u64,
    pub key_bits_used: u64,
    pub key_bits_per_block: u64,
    pub eve_llr_stats: LlrStats,
    pub eve_advantage: f64,
    /// Standard error of `eve_advantage` at the chosen threshold.
    pub eve_advantage_stderr: f64,
    /// Exact distance Eve's estimate converges to.
    pub exact_tv: f64,
    #[serde(skip)]
    pub trace: Vec<TraceRow>,
}

impl SimResult {
    /// Whether the empirical advantage lies inside the 99% band around the exact value.
    pub fn within_band(&self) -> bool {
        (self.eve_advantage - self.exact_tv).abs() <= Z_99 * self.eve_advantage_stderr.max(1e-12)
    }
}

/// I.i.d. draw of `n` symbols from the channel's probability vector.
pub fn sample_channel<R: Rng + ?Sized>(channel: &ChannelModel, n: usize, rng: &mut R) -> ErrorString {
    let dist = WeightedIndex::new(channel.probs()).expect("channel probabilities are valid");
    ErrorString::new((0..n).map(|_| dist.sample(rng) as u8).collect())
}

struct BlockOutcome {
    ok: bool,
    weight: usize,
    llr: f64,
    calibration_llr: Option<f64>,
}

struct Run<'a> {
    book: &'a StegoCodebook,
    dist: InducedDistribution,
    config: &'a SimConfig,
    draw_bits: u64,
    otp_bits: u64,
    domain: BigUint,
}

impl Run<'_> {
    fn llr(&self, e: &ErrorString) -> Result<f64> {
        let induced = self.dist.string_logprob(self.book, e)?;
        let k = self.config.channel.alphabet_size();
        let channel = string_logprob(&e.weights(k)?, self.config.channel.probs())?;
        Ok(induced.log2() - channel.log2())
    }

    fn block(&self, b: u64) -> Result<BlockOutcome> {
        let mut rng = ChaCha20Rng::from_seed(self.config.seed.0);
        rng.set_stream(b + 1);
        let seed = self.config.seed;
        let start = b * (self.draw_bits + self.otp_bits);

        let plain = rng.gen_biguint_below(&self.domain);
        let sent = if self.config.otp {
            apply_pad(&plain, &bits_at(&seed, start + self.draw_bits, self.otp_bits))
        } else {
            plain.clone()
        };
        let e = self.book.encode(&Message(sent), &mut KeyStream::at(seed, start))?;

        let received = self.book.decode(&e, &mut KeyStream::at(seed, start))?;
        let recovered = if self.config.otp {
            apply_pad(received.index(), &bits_at(&seed, start + self.draw_bits, self.otp_bits))
        } else {
            received.0
        };

        let (llr, calibration_llr) = if self.config.eve_test {
            let cal = sample_channel(&self.config.channel, self.config.n, &mut rng);
            (self.llr(&e)?, Some(self.llr(&cal)?))
        } else {
            (0.0, None)
        };
        Ok(BlockOutcome {
            ok: recovered == plain,
            weight: e.error_weight(),
            llr,
            calibration_llr,
        })
    }
}

/// Best-threshold advantage between two samples, with its standard error.
fn threshold_advantage(alice: &[f64], calibration: &[f64]) -> (f64, f64) {
    let mut a = alice.to_vec();
    let mut c = calibration.to_vec();
    a.sort_by(f64::total_cmp);
    c.sort_by(f64::total_cmp);
    let (na, nc) = (a.len() as f64, c.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let (mut best, mut best_fa, mut best_fc) = (0.0f64, 0.0, 0.0);
    while i < a.len() || j < c.len() {
        let t = match (a.get(i), c.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => break,
        };
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < c.len() && c[j] <= t {
            j += 1;
        }
        let (fa, fc) = (i as f64 / na, j as f64 / nc);
        if (fc - fa).abs() > best {
            best = (fc - fa).abs();
            best_fa = fa;
            best_fc = fc;
        }
    }
    let stderr = ((best_fa * (1.0 - best_fa) + best_fc * (1.0 - best_fc)) / na.min(nc)).sqrt();
    (best, stderr)
}

fn mean_var(xs: &[f64]) -> LlrStats {
    if xs.is_empty() {
        return LlrStats { mean: 0.0, var: 0.0 };
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    LlrStats { mean, var }
}

/// Runs the simulation; blocks are processed in parallel with per-block substreams.
pub fn run(config: &SimConfig) -> Result<SimResult> {
    let book = StegoCodebook::compile(&config.channel, config.n, config.window)?;
    run_with_book(config, &book)
}

pub fn run_with_book(config: &SimConfig, book: &StegoCodebook) -> Result<SimResult> {
    if config.blocks == 0 {
        return Err(domain("blocks must be at least 1"));
    }
    let otp_bits = if config.otp { book.otp_width() } else { 0 };
    let domain_size = if config.otp {
        BigUint::from(1u32) << otp_bits as usize
    } else {
        book.c_total().value().clone()
    };
    let dist = induced_distribution_on(book, &domain_size)?;
    let exact_tv = secrecy_report(book, &dist).tv_distance;
    let run = Run {
        book,
        dist,
        config,
        draw_bits: block_draw_bits(book.n_subsets_max().value()),
        otp_bits,
        domain: domain_size,
    };
    let outcomes: Vec<BlockOutcome> = (0..config.blocks)
        .into_par_iter()
        .map(|b| run.block(b))
        .collect::<Result<_>>()?;

    let blocks_ok = outcomes.iter().filter(|o| o.ok).count() as u64;
    if blocks_ok != config.blocks {
        return Err(Error::Integrity(format!(
            "{} of {} blocks failed to decode on a noiseless link",
            config.blocks - blocks_ok,
            config.blocks
        )));
    }
    let per_block = run.draw_bits + run.otp_bits;
    let alice: Vec<f64> = outcomes.iter().map(|o| o.llr).collect();
    let (eve_advantage, eve_advantage_stderr) = if config.eve_test {
        let cal: Vec<f64> = outcomes.iter().filter_map(|o| o.calibration_llr).collect();
        threshold_advantage(&alice, &cal)
    } else {
        (0.0, 0.0)
    };
    let trace = outcomes
        .iter()
        .enumerate()
        .map(|(b, o)| TraceRow {
            block: b as u64,
            weight: o.weight,
            llr: o.llr,
            key_bits: per_block,
        })
        .collect();
    Ok(SimResult {
        blocks: config.blocks,
        blocks_ok,
        key_bits_used: per_block * config.blocks,
        key_bits_per_block: per_block,
        eve_llr_stats: mean_var(&alice),
        eve_advantage,
        eve_advantage_stderr,
        exact_tv,
        trace,
    })
}
