//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::collections::{HashMap, HashSet};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_bigint::BigUint;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use synstego::codec::{key_cost, Message, StegoCodebook};
use synstego::keystream::SUBSET_SLACK_BITS;
use synstego::protocol::{run, SimConfig};
use synstego::secrecy::{induced_distribution, induced_distribution_on, kl_alpha_bound, tv_to_channel, upper_bound};
use synstego::{ChannelModel, KeySeed, KeyStream, WindowSpec};
use synstego_qecc::demo::{alpha_bound, round_trip_fidelity, weighted_kraus};
use synstego_qecc::stego::depolarizing_weights;
use synstego_qecc::FiveQubitCode;

/// Closed-form reference values, evaluated independently of the library.
fn h(p: f64) -> f64 {
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

fn entropy(ps: &[f64]) -> f64 {
    ps.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum()
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn timed(limit: Duration, f: impl FnOnce() -> Verdict) -> Verdict {
    let t = Instant::now();
    let mut v = f();
    let took = t.elapsed();
    if took > limit {
        v.pass = false;
    }
    v.detail = format!("{} [{:.2?} of {:?}]", v.detail, took, limit);
    v
}

/// Rate window check shared by criteria 1 and 2; `slope` is the per-error
/// log-probability step of the channel's weight classes.
fn rate_window(ch: &ChannelModel, entropy_per_use: f64, slope: f64) -> Verdict {
    let p = ch.error_probability();
    let mut pass = true;
    let mut last_gap = f64::INFINITY;
    let mut parts = Vec::new();
    for n in [200usize, 1000, 5000] {
        let t = Instant::now();
        let book = match StegoCodebook::compile(ch, n, WindowSpec::Band(2.0)) {
            Ok(b) => b,
            Err(e) => return verdict(false, format!("N={n}: {e}")),
        };
        let took = t.elapsed();
        let delta = 2.0 * ((1.0 - p) / (p * n as f64)).sqrt();
        let rate = book.m_bits() / n as f64;
        let lo = entropy_per_use - delta * p * slope - 0.02;
        let gap = entropy_per_use - rate;
        let ok = rate >= lo && rate <= entropy_per_use && gap < last_gap && took < Duration::from_secs(10);
        pass &= ok;
        last_gap = gap;
        parts.push(format!("N={n} rate={rate:.5} in [{lo:.5}, {entropy_per_use:.5}] {took:.1?}"));
    }
    verdict(pass, parts.join("; "))
}

fn criterion_1() -> Verdict {
    let p = 0.1;
    rate_window(&ChannelModel::bit_flip(p).unwrap(), h(p), ((1.0 - p) / p).log2())
}

fn criterion_2() -> Verdict {
    let p = 0.1;
    let s = entropy(&[1.0 - p, p / 3.0, p / 3.0, p / 3.0]);
    // each extra error costs log2(3(1-p)/p) bits of string probability
    rate_window(&ChannelModel::depolarizing(p).unwrap(), s, (3.0 * (1.0 - p) / p).log2())
}

fn criterion_3() -> Verdict {
    timed(Duration::from_secs(60), || {
        let probs = [0.7, 0.2, 0.1];
        let ch = ChannelModel::random_unitary(probs.to_vec()).unwrap();
        let n = 200;
        let book = match StegoCodebook::compile(&ch, n, WindowSpec::Band(2.0)) {
            Ok(b) => b,
            Err(e) => return verdict(false, e.to_string()),
        };
        let big_h = entropy(&probs);
        let delta = probs.iter().map(|&q| 2.0 * ((1.0 - q) / (q * n as f64)).sqrt()).fold(0.0, f64::max);
        let need = n as f64 * (1.0 - delta) * big_h;
        verdict(
            book.m_bits() >= need && (big_h - 1.15678).abs() < 1e-5,
            format!("M_bits={:.3} >= N(1-delta)H={need:.3} (delta={delta:.4}, H={big_h:.5})", book.m_bits()),
        )
    })
}

/// Half the L1 distance over every string, with the induced side obtained by
/// running the encoder over every (message, subset) pair.
fn brute_tv(book: &StegoCodebook, ch: &ChannelModel) -> f64 {
    let k = ch.alphabet_size();
    let total = u64::try_from(book.c_total().value()).unwrap();
    let mut mass: HashMap<u64, f64> = HashMap::new();
    for m in 0..total {
        let msg = Message::from(m);
        let (idx, _) = book.message_class(&msg).unwrap();
        let n_sub = u64::try_from(book.classes()[idx].n_subsets.value()).unwrap();
        for j in 0..n_sub {
            let e = book.encode_with_subset(&msg, &BigUint::from(j)).unwrap();
            let key = e.symbols().iter().rev().fold(0u64, |acc, &s| acc * k as u64 + s as u64);
            *mass.entry(key).or_insert(0.0) += 1.0 / (total as f64 * n_sub as f64);
        }
    }
    let probs = ch.probs();
    let strings = (k as u64).pow(book.n() as u32);
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for idx in 0..strings {
        let mut x = idx;
        let mut p = 1.0;
        for _ in 0..book.n() {
            p *= probs[(x % k as u64) as usize];
            x /= k as u64;
        }
        let t = (mass.get(&idx).copied().unwrap_or(0.0) - p).abs();
        let u = sum + t;
        comp += if sum.abs() >= t { (sum - u) + t } else { (t - u) + sum };
        sum = u;
    }
    0.5 * (sum + comp)
}

fn criterion_4() -> Verdict {
    timed(Duration::from_secs(120), || {
        let mut worst = 0.0f64;
        let mut cases = 0;
        let bitflip = [0.05, 0.1, 0.3, 0.5].map(|p| ChannelModel::bit_flip(p).unwrap());
        let depol = [0.1, 0.3].map(|p| ChannelModel::depolarizing(p).unwrap());
        let specs = [WindowSpec::ClampedBand(1.0), WindowSpec::ClampedBand(2.0), WindowSpec::Full];
        for ch in bitflip.iter().chain(&depol) {
            for n in [4usize, 8, 12] {
                for spec in specs {
                    if n == 12 && ch.alphabet_size() == 4 && spec == WindowSpec::Full {
                        continue;
                    }
                    let Ok(book) = StegoCodebook::compile(ch, n, spec) else { continue };
                    let diff = (tv_to_channel(&book).tv_distance - brute_tv(&book, ch)).abs();
                    worst = worst.max(diff);
                    cases += 1;
                }
            }
        }
        let config = SimConfig {
            channel: ChannelModel::bit_flip(0.1).unwrap(),
            n: 20,
            window: WindowSpec::ClampedBand(2.0),
            blocks: 100_000,
            seed: KeySeed([0x42; 32]),
            otp: false,
            eve_test: true,
        };
        let sim = match run(&config) {
            Ok(r) => r,
            Err(e) => return verdict(false, e.to_string()),
        };
        verdict(
            worst <= 1e-10 && sim.within_band(),
            format!(
                "{cases} exhaustive cases, max |closed - brute| = {worst:.2e}; N=20 advantage {:.5} vs exact {:.5} (99% band +/-{:.5})",
                sim.eve_advantage,
                sim.exact_tv,
                2.576 * sim.eve_advantage_stderr
            ),
        )
    })
}

fn criterion_5() -> Verdict {
    timed(Duration::from_secs(30), || {
        let mut pass = true;
        let mut margin = f64::INFINITY;
        for p in [0.05, 0.1, 0.2] {
            let ch = ChannelModel::bit_flip(p).unwrap();
            for n in [100usize, 1000] {
                let book = StegoCodebook::compile(&ch, n, WindowSpec::ClampedBand(2.0)).unwrap();
                match upper_bound(&ch, n, 0.01, 0.01, book.m_bits()) {
                    Ok(b) => {
                        let g = 0.01 * n as f64 + h(0.01);
                        let f = 0.01 * n as f64 + 1.01 * h(0.01 / 1.01);
                        let independent = n as f64 * h(p) + g + f;
                        pass &= (b.m_upper - independent).abs() < 1e-9 * independent;
                        margin = margin.min(b.m_upper - book.m_bits());
                    }
                    Err(_) => pass = false,
                }
            }
        }
        verdict(pass, format!("6 grid points, smallest margin M_upper - M_bits = {margin:.3} bits"))
    })
}

fn criterion_6() -> Verdict {
    timed(Duration::from_secs(30), || {
        let p = 0.1;
        let ch = ChannelModel::bit_flip(p).unwrap();
        let mut pass = true;
        let mut last = f64::INFINITY;
        let mut parts = Vec::new();
        for n in [100usize, 400, 1600] {
            let r = key_cost(&ch, n, 2.0, false).unwrap();
            let delta = 2.0 * ((1.0 - p) / (p * n as f64)).sqrt();
            let formula = 2.0 * n as f64 * p * delta * ((1.0 - p) / p).log2();
            let n_max = r.n_subsets_max.value();
            let ceil_log = if n_max == &BigUint::from(1u32) { 0 } else { (n_max - 1u32).bits() };
            let per_n = r.k_measured as f64 / n as f64;
            pass &= (r.k_formula - formula).abs() <= 1e-9 * formula
                && r.k_measured == ceil_log + SUBSET_SLACK_BITS
                && per_n < last;
            last = per_n;
            parts.push(format!("N={n} K_formula={:.3} K_measured={} ({per_n:.4}/N)", r.k_formula, r.k_measured));
        }
        verdict(pass, parts.join("; "))
    })
}

fn criterion_7() -> Verdict {
    timed(Duration::from_secs(10), || {
        let code = match FiveQubitCode::new() {
            Ok(c) => c,
            Err(e) => return verdict(false, e.to_string()),
        };
        let syndromes: HashSet<usize> = code.errors().iter().map(|e| code.syndrome(e)).collect();
        let plain = round_trip_fidelity(&code, 100, false, 7).unwrap_or(0.0);
        let entangled = round_trip_fidelity(&code, 100, true, 8).unwrap_or(0.0);
        verdict(
            syndromes.len() == 16 && plain >= 1.0 - 1e-10 && entangled >= 1.0 - 1e-10,
            format!(
                "{} distinct syndromes; worst fidelity {:.3e} below 1 (plain), {:.3e} (entangled reference)",
                syndromes.len(),
                1.0 - plain,
                1.0 - entangled
            ),
        )
    })
}

fn criterion_8() -> Verdict {
    timed(Duration::from_secs(10), || {
        let code = FiveQubitCode::new().unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(28);
        let mut worst_entropy = 0.0f64;
        let mut worst_remix = 0.0f64;
        for p in [0.01, 0.1, 0.3] {
            let w = depolarizing_weights(&code, p);
            let z: f64 = w.iter().sum();
            let expected = entropy(&w.map(|x| x / z));
            let Ok(b) = alpha_bound(&code, p) else {
                return verdict(false, format!("alpha bound failed at p={p}"));
            };
            worst_entropy = worst_entropy.max((b.bound_bits - expected).abs());

            let g = DMatrix::from_fn(16, 16, |_, _| {
                Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
            });
            let u = g.qr().q();
            let kraus = weighted_kraus(&code, p);
            let remixed: Vec<DMatrix<Complex64>> = (0..16)
                .map(|k| (0..16).fold(DMatrix::zeros(32, 32), |acc, j| acc + &kraus[j] * u[(j, k)]))
                .collect();
            let r = kl_alpha_bound(&remixed, &code.projector()).unwrap();
            worst_remix = worst_remix.max((r.bound_bits - b.bound_bits).abs());
        }
        verdict(
            worst_entropy <= 1e-8 && worst_remix <= 1e-8,
            format!("|bound - entropy| <= {worst_entropy:.2e}; remix drift <= {worst_remix:.2e}"),
        )
    })
}

fn criterion_9() -> Verdict {
    timed(Duration::from_secs(120), || {
        let channels = [
            ChannelModel::bit_flip(0.1).unwrap(),
            ChannelModel::bit_flip(0.3).unwrap(),
            ChannelModel::depolarizing(0.1).unwrap(),
            ChannelModel::depolarizing(0.25).unwrap(),
            ChannelModel::random_unitary(vec![0.7, 0.2, 0.1]).unwrap(),
        ];
        let seed = KeySeed([0x99; 32]);
        let mut messages = 0u64;
        let mut round_trip = true;
        let mut disjoint = true;
        let mut normalized = true;
        for ch in &channels {
            for n in 1..=14usize {
                let Ok(book) = StegoCodebook::compile(ch, n, WindowSpec::ClampedBand(1.5)) else { continue };
                let total = u64::try_from(book.c_total().value()).unwrap();
                let mut pos = 0u64;
                for m in 0..total {
                    let mut a = KeyStream::at(seed, pos);
                    let e = book.encode(&Message::from(m), &mut a).unwrap();
                    let mut b = KeyStream::at(seed, pos);
                    round_trip &= book.decode(&e, &mut b).ok() == Some(Message::from(m)) && a.position() == b.position();
                    pos = a.position();
                    messages += 1;
                }
                for cls in book.classes() {
                    let n_sub = u64::try_from(cls.n_subsets.value()).unwrap().min(64);
                    let c = u64::try_from(cls.c_class.value()).unwrap().min(64);
                    let mut seen = HashSet::new();
                    for j in 0..n_sub {
                        for r in 0..c {
                            let msg = Message(cls.offset.value() + r);
                            disjoint &= seen.insert(book.encode_with_subset(&msg, &BigUint::from(j)).unwrap());
                        }
                    }
                }
                let l = BigUint::from(1u32) << book.otp_width() as usize;
                normalized &= (induced_distribution(&book).total_mass() - 1.0).abs() < 1e-10
                    && (induced_distribution_on(&book, &l).unwrap().total_mass() - 1.0).abs() < 1e-10;
            }
        }
        let config = SimConfig {
            channel: ChannelModel::depolarizing(0.1).unwrap(),
            n: 30,
            window: WindowSpec::ClampedBand(1.5),
            blocks: 2000,
            seed,
            otp: true,
            eve_test: true,
        };
        let replay = run(&config).ok() == run(&config).ok()
            && KeyStream::at(seed, 5).next_bits(4096).ok() == KeyStream::at(seed, 5).next_bits(4096).ok();
        verdict(
            round_trip && disjoint && normalized && replay,
            format!(
                "{messages} messages round-tripped (N<=14): {round_trip}; disjoint: {disjoint}; normalized: {normalized}; replay: {replay}"
            ),
        )
    })
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 9] = [
        ("rate achievability, bit flip", criterion_1),
        ("rate achievability, depolarizing", criterion_2),
        ("random-unitary rate", criterion_3),
        ("secrecy exactness", criterion_4),
        ("converse consistency", criterion_5),
        ("key consumption", criterion_6),
        ("quantum round trip", criterion_7),
        ("alpha-matrix bound", criterion_8),
        ("property suites", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let v = f();
        if !v.pass {
            failed += 1;
        }
        println!("[{}] criterion {} ({name}): {}", if v.pass { "PASS" } else { "FAIL" }, i + 1, v.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
