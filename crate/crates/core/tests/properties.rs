use std::collections::HashSet;

use num_bigint::BigUint;
use proptest::prelude::*;
use synstego::codec::ranking::{rank_in_class, unrank_in_class};
use synstego::codec::{Message, StegoCodebook};
use synstego::prob::{binomial, multinomial};
use synstego::protocol::{run, SimConfig};
use synstego::secrecy::{induced_distribution, induced_distribution_on};
use synstego::{ChannelModel, KeySeed, KeyStream, WeightVector, WindowSpec};

fn channel(kind: u8, p: f64) -> ChannelModel {
    match kind {
        0 => ChannelModel::bit_flip(p).unwrap(),
        1 => ChannelModel::depolarizing(p).unwrap(),
        _ => ChannelModel::random_unitary(vec![1.0 - p, 0.6 * p, 0.4 * p]).unwrap(),
    }
}

#[test]
fn round_trip_exhaustive_small_blocks() {
    let seed = KeySeed([0x5a; 32]);
    for kind in 0..3u8 {
        for &p in &[0.1, 0.3] {
            for n in 2..=14usize {
                let Ok(book) = StegoCodebook::compile(&channel(kind, p), n, WindowSpec::ClampedBand(1.5)) else {
                    continue;
                };
                let total = u64::try_from(book.c_total().value()).unwrap();
                let mut pos = 0u64;
                for m in 0..total {
                    let mut alice = KeyStream::at(seed, pos);
                    let e = book.encode(&Message::from(m), &mut alice).unwrap();
                    let mut bob = KeyStream::at(seed, pos);
                    assert_eq!(book.decode(&e, &mut bob).unwrap(), Message::from(m));
                    assert_eq!(alice.position(), bob.position());
                    pos = alice.position();
                }
            }
        }
    }
}

#[test]
fn subsets_are_disjoint() {
    for kind in 0..3u8 {
        let book = StegoCodebook::compile(&channel(kind, 0.2), 10, WindowSpec::ClampedBand(1.0)).unwrap();
        let mut seen = HashSet::new();
        let mut expected = 0u64;
        for cls in book.classes() {
            let c = u64::try_from(cls.c_class.value()).unwrap();
            let n_sub = u64::try_from(cls.n_subsets.value()).unwrap();
            expected += c * n_sub;
            for j in 0..n_sub {
                for r in 0..c {
                    let m = Message(cls.offset.value() + r);
                    let e = book.encode_with_subset(&m, &BigUint::from(j)).unwrap();
                    assert!(seen.insert(e), "string reused across subsets");
                }
            }
        }
        assert_eq!(seen.len() as u64, expected);
    }
}

#[test]
fn rate_is_monotone_and_below_entropy() {
    for ch in [channel(0, 0.1), channel(1, 0.1)] {
        let mut last = 0.0;
        for n in [50usize, 100, 200, 400] {
            let book = StegoCodebook::compile(&ch, n, WindowSpec::Band(2.0)).unwrap();
            assert!(book.m_bits() >= last);
            assert!(book.m_bits() <= n as f64 * ch.entropy_per_use() + 1.0);
            last = book.m_bits();
        }
    }
}

#[test]
fn simulation_replays_exactly() {
    let config = SimConfig {
        channel: channel(1, 0.15),
        n: 24,
        window: WindowSpec::ClampedBand(1.5),
        blocks: 400,
        seed: KeySeed([3; 32]),
        otp: true,
        eve_test: true,
    };
    assert_eq!(run(&config).unwrap(), run(&config).unwrap());
}

proptest! {
    #[test]
    fn binomial_rows_sum_to_powers_of_two(n in 0usize..200) {
        let sum = (0..=n).fold(BigUint::from(0u32), |acc, w| acc + binomial(n, w).unwrap().into_inner());
        prop_assert_eq!(sum, BigUint::from(1u32) << n);
    }

    #[test]
    fn multinomials_sum_to_k_pow_n(n in 0usize..24) {
        let mut sum = BigUint::from(0u32);
        for a in 0..=n {
            for b in 0..=n - a {
                let wv = WeightVector::from_counts(vec![a, b, n - a - b]);
                sum += multinomial(&wv).unwrap().into_inner();
            }
        }
        prop_assert_eq!(sum, BigUint::from(3u32).pow(n as u32));
    }

    #[test]
    fn rank_unrank_inverse(counts in prop::collection::vec(0usize..12, 2..5), r in any::<u64>()) {
        let n: usize = counts.iter().sum();
        let class = WeightVector::from_counts(counts);
        let size = multinomial(&class).unwrap().into_inner();
        let rank = BigUint::from(r) % &size;
        let e = unrank_in_class(&rank, &class, n).unwrap();
        prop_assert_eq!(rank_in_class(&e, &class).unwrap(), rank);
    }

    #[test]
    fn induced_distribution_is_normalized(kind in 0u8..3, p in 0.02f64..0.45, n in 5usize..150, d in 0.5f64..3.0) {
        let ch = channel(kind, p);
        if let Ok(book) = StegoCodebook::compile(&ch, n, WindowSpec::ClampedBand(d)) {
            prop_assert!((induced_distribution(&book).total_mass() - 1.0).abs() < 1e-10);
            let l = BigUint::from(1u32) << book.otp_width() as usize;
            prop_assert!((induced_distribution_on(&book, &l).unwrap().total_mass() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn round_trip_with_random_keys(seed in any::<[u8; 32]>(), pos in 0u64..1_000_000, m in any::<u64>(), n in 20usize..300) {
        let book = StegoCodebook::compile(&channel(0, 0.1), n, WindowSpec::ClampedBand(2.0)).unwrap();
        let msg = Message(BigUint::from(m) % book.c_total().value());
        let seed = KeySeed(seed);
        let e = book.encode(&msg, &mut KeyStream::at(seed, pos)).unwrap();
        prop_assert_eq!(book.decode(&e, &mut KeyStream::at(seed, pos)).unwrap(), msg);
    }

    #[test]
    fn equal_seeds_agree(seed in any::<[u8; 32]>(), pos in 0u64..100_000, len in 1u64..300) {
        let mut a = KeyStream::at(KeySeed(seed), pos);
        let mut b = KeyStream::at(KeySeed(seed), pos);
        prop_assert_eq!(a.next_bits(len).unwrap(), b.next_bits(len).unwrap());
        prop_assert_eq!(a.consumed(), len);
    }
}
