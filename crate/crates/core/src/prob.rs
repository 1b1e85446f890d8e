//! Exact counting and base-2 log-domain probability arithmetic.
//!
//! Counts of error strings are arbitrary-precision integers and are never
//! rounded. Probabilities are carried as base-2 logarithms because
//! `p^w (1-p)^(N-w)` leaves the range of `f64` for block lengths in the
//! low thousands.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{domain, Result};

/// Largest block length accepted by the exact counting routines.
pub const EXACT_COUNT_LIMIT: usize = 1_000_000;

/// Base-2 logarithm of a probability. Negative infinity encodes probability zero.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct LogProb(f64);

impl LogProb {
    pub const ZERO: LogProb = LogProb(f64::NEG_INFINITY);
    pub const ONE: LogProb = LogProb(0.0);

    /// Wraps a base-2 logarithm. Values slightly above zero from rounding are kept as is.
    pub fn from_log2(value: f64) -> Self {
        debug_assert!(!value.is_nan(), "NaN log-probability");
        LogProb(value)
    }

    pub fn from_prob(p: f64) -> Self {
        debug_assert!((0.0..=1.0 + 1e-12).contains(&p), "probability {p} out of range");
        if p <= 0.0 {
            Self::ZERO
        } else {
            LogProb(p.log2())
        }
    }

    pub fn log2(self) -> f64 {
        self.0
    }

    pub fn prob(self) -> f64 {
        self.0.exp2()
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    /// Order-insensitive sum of probabilities held in log space.
    pub fn sum<I: IntoIterator<Item = LogProb>>(items: I) -> LogProb {
        LogProb(log2_sum_exp2(items.into_iter().map(|lp| lp.0)))
    }
}

impl Mul for LogProb {
    type Output = LogProb;

    fn mul(self, rhs: LogProb) -> LogProb {
        if self.is_zero() || rhs.is_zero() {
            LogProb::ZERO
        } else {
            LogProb(self.0 + rhs.0)
        }
    }
}

impl fmt::Display for LogProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "2^{}", self.0)
    }
}

/// `log2(sum_i 2^x_i)`, summed largest-first with Neumaier compensation.
pub fn log2_sum_exp2<I: IntoIterator<Item = f64>>(logs: I) -> f64 {
    let mut xs: Vec<f64> = logs
        .into_iter()
        .filter(|x| *x != f64::NEG_INFINITY)
        .collect();
    if xs.is_empty() {
        return f64::NEG_INFINITY;
    }
    xs.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    let top = xs[0];
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in xs {
        let term = (x - top).exp2();
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    top + (sum + comp).log2()
}

/// Compensated sum of plain `f64` terms, accumulated in descending magnitude.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut xs: Vec<f64> = terms.into_iter().collect();
    xs.sort_by(|a, b| b.abs().partial_cmp(&a.abs()).unwrap_or(Ordering::Equal));
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Exact nonnegative count of strings.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct BigCount(BigUint);

impl BigCount {
    pub fn new(value: BigUint) -> Self {
        BigCount(value)
    }

    pub fn zero() -> Self {
        BigCount(BigUint::zero())
    }

    pub fn one() -> Self {
        BigCount(BigUint::one())
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn into_inner(self) -> BigUint {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// Base-2 logarithm; negative infinity for zero.
    pub fn log2(&self) -> f64 {
        log2_biguint(&self.0)
    }
}

impl From<BigUint> for BigCount {
    fn from(v: BigUint) -> Self {
        BigCount(v)
    }
}

impl From<u64> for BigCount {
    fn from(v: u64) -> Self {
        BigCount(BigUint::from(v))
    }
}

impl fmt::Display for BigCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl Serialize for BigCount {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

impl Add<&BigCount> for &BigCount {
    type Output = BigCount;

    fn add(self, rhs: &BigCount) -> BigCount {
        BigCount(&self.0 + &rhs.0)
    }
}

/// `log2` of an arbitrary-precision integer, accurate to double precision.
pub fn log2_biguint(v: &BigUint) -> f64 {
    if v.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = v.bits();
    if bits <= 1000 {
        return v.to_f64().expect("fits in f64").log2();
    }
    let shift = bits - 64;
    let top = (v >> shift).to_u64().expect("64 leading bits");
    (top as f64).log2() + shift as f64
}

/// Counts of each alphabet symbol in a length-`N` string.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct WeightVector {
    counts: Vec<usize>,
}

impl WeightVector {
    pub fn new(counts: Vec<usize>, n: usize) -> Result<Self> {
        let total: usize = counts.iter().sum();
        if total != n {
            return Err(domain(format!(
                "weight vector {counts:?} sums to {total}, expected N = {n}"
            )));
        }
        if counts.is_empty() {
            return Err(domain("weight vector needs at least one symbol"));
        }
        Ok(WeightVector { counts })
    }

    /// Builds the vector without a target length; `N` is the sum of counts.
    pub fn from_counts(counts: Vec<usize>) -> Self {
        assert!(!counts.is_empty(), "weight vector needs at least one symbol");
        WeightVector { counts }
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn n(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    /// Number of non-identity symbols (everything but index 0).
    pub fn error_weight(&self) -> usize {
        self.counts[1..].iter().sum()
    }
}

impl fmt::Display for WeightVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, c) in self.counts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "]")
    }
}

fn primes_up_to(n: usize) -> Vec<usize> {
    if n < 2 {
        return Vec::new();
    }
    let mut sieve = vec![true; n + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut i = 2;
    while i * i <= n {
        if sieve[i] {
            let mut j = i * i;
            while j <= n {
                sieve[j] = false;
                j += i;
            }
        }
        i += 1;
    }
    sieve
        .iter()
        .enumerate()
        .filter_map(|(p, &is)| is.then_some(p))
        .collect()
}

/// Exponent of prime `p` in `n!` (Legendre).
fn legendre(mut n: usize, p: usize) -> usize {
    let mut e = 0;
    while n > 0 {
        n /= p;
        e += n;
    }
    e
}

fn product_tree(mut factors: Vec<BigUint>) -> BigUint {
    if factors.is_empty() {
        return BigUint::one();
    }
    while factors.len() > 1 {
        let mut next = Vec::with_capacity(factors.len().div_ceil(2));
        let mut it = factors.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(a * b),
                None => next.push(a),
            }
        }
        factors = next;
    }
    factors.pop().expect("nonempty")
}

/// `N! / (n_1! ... n_k!)` from its prime factorization.
fn factorial_ratio(n: usize, parts: &[usize]) -> BigUint {
    let mut factors = Vec::new();
    for p in primes_up_to(n) {
        let e = legendre(n, p) - parts.iter().map(|&m| legendre(m, p)).sum::<usize>();
        if e == 0 {
            continue;
        }
        // Pack prime powers into u64 words before going big.
        let mut acc: u64 = 1;
        for _ in 0..e {
            match acc.checked_mul(p as u64) {
                Some(v) => acc = v,
                None => {
                    factors.push(BigUint::from(acc));
                    acc = p as u64;
                }
            }
        }
        factors.push(BigUint::from(acc));
    }
    product_tree(factors)
}

/// Exact binomial coefficient `C(n, w)`.
pub fn binomial(n: usize, w: usize) -> Result<BigCount> {
    if w > n {
        return Err(domain(format!("binomial: w = {w} outside [0, {n}]")));
    }
    if n > EXACT_COUNT_LIMIT {
        return Err(domain(format!(
            "binomial: N = {n} exceeds the exact limit {EXACT_COUNT_LIMIT}; use log2_binomial_approx"
        )));
    }
    Ok(BigCount(factorial_ratio(n, &[w, n - w])))
}

/// Exact multinomial coefficient `N! / (n_1! ... n_k!)`.
pub fn multinomial(weights: &WeightVector) -> Result<BigCount> {
    let n = weights.n();
    if n > EXACT_COUNT_LIMIT {
        return Err(domain(format!(
            "multinomial: N = {n} exceeds the exact limit {EXACT_COUNT_LIMIT}; use log2_multinomial_approx"
        )));
    }
    Ok(BigCount(factorial_ratio(n, weights.counts())))
}

/// Approximate `log2 C(n, w)` through the log-gamma function, for any size.
pub fn log2_binomial_approx(n: u64, w: u64) -> f64 {
    assert!(w <= n);
    (libm::lgamma(n as f64 + 1.0) - libm::lgamma(w as f64 + 1.0) - libm::lgamma((n - w) as f64 + 1.0))
        / std::f64::consts::LN_2
}

/// Approximate `log2` of a multinomial coefficient through log-gamma.
pub fn log2_multinomial_approx(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let mut v = libm::lgamma(n as f64 + 1.0);
    for &c in counts {
        v -= libm::lgamma(c as f64 + 1.0);
    }
    v / std::f64::consts::LN_2
}

/// Probability of one string with the given symbol counts: `sum_i n_i log2 p_i`.
///
/// A zero probability paired with a positive count yields [`LogProb::ZERO`].
pub fn string_logprob(weights: &WeightVector, probs: &[f64]) -> Result<LogProb> {
    if weights.k() != probs.len() {
        return Err(domain(format!(
            "weight vector has {} symbols, probability vector has {}",
            weights.k(),
            probs.len()
        )));
    }
    check_probability_vector(probs)?;
    let mut acc = 0.0;
    for (&n, &p) in weights.counts().iter().zip(probs) {
        if n == 0 {
            continue;
        }
        if p == 0.0 {
            return Ok(LogProb::ZERO);
        }
        acc += n as f64 * p.log2();
    }
    Ok(LogProb(acc))
}

/// `log2[ C(N,w) p^w (1-p)^(N-w) ]`.
pub fn weight_class_logprob(n: usize, w: usize, p: f64) -> Result<LogProb> {
    if !(p > 0.0 && p < 1.0) {
        return Err(domain(format!("weight_class_logprob: p = {p} not in (0, 1)")));
    }
    let count = binomial(n, w)?;
    let lp = w as f64 * p.log2() + (n - w) as f64 * (1.0 - p).log2();
    Ok(LogProb(count.log2() + lp))
}

pub(crate) fn check_probability_vector(probs: &[f64]) -> Result<()> {
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(domain(format!("probabilities must be finite and nonnegative: {probs:?}")));
    }
    let total = compensated_sum(probs.iter().copied());
    if (total - 1.0).abs() > 1e-12 {
        return Err(domain(format!("probabilities sum to {total}, not 1")));
    }
    Ok(())
}

/// Binary entropy in bits; zero at both endpoints.
pub fn binary_entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

/// Shannon entropy of a probability vector in bits.
pub fn shannon_entropy(probs: &[f64]) -> f64 {
    compensated_sum(
        probs
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| -p * p.log2()),
    )
}

/// An `f64` probability product held exactly as `mantissa * 2^exponent`.
///
/// Every finite double is a dyadic rational, so products of channel
/// probabilities can be compared and divided without rounding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Dyadic {
    pub mantissa: BigUint,
    pub exponent: i64,
}

impl Dyadic {
    pub fn from_f64(x: f64) -> Dyadic {
        debug_assert!(x > 0.0 && x.is_finite());
        let bits = x.to_bits();
        let exp_bits = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mut m, mut e) = if exp_bits == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), exp_bits - 1075)
        };
        let tz = m.trailing_zeros();
        m >>= tz;
        e += tz as i64;
        Dyadic {
            mantissa: BigUint::from(m),
            exponent: e,
        }
    }

    /// Exact `prod_i p_i^{n_i}`; `None` when a zero probability has a positive count.
    pub fn string_prob(counts: &[usize], probs: &[f64]) -> Option<Dyadic> {
        let mut mantissa = BigUint::one();
        let mut exponent = 0i64;
        for (&n, &p) in counts.iter().zip(probs) {
            if n == 0 {
                continue;
            }
            if p == 0.0 {
                return None;
            }
            let d = Dyadic::from_f64(p);
            mantissa *= d.mantissa.pow(n as u32);
            exponent += d.exponent * n as i64;
        }
        Some(Dyadic { mantissa, exponent })
    }

    pub fn cmp_value(&self, other: &Dyadic) -> Ordering {
        let (a, b) = self.aligned(other);
        a.cmp(&b)
    }

    fn aligned(&self, other: &Dyadic) -> (BigUint, BigUint) {
        let e = self.exponent.min(other.exponent);
        (
            &self.mantissa << (self.exponent - e) as usize,
            &other.mantissa << (other.exponent - e) as usize,
        )
    }

    /// `floor(count * self / other)`.
    pub fn scaled_floor(&self, count: &BigUint, other: &Dyadic) -> BigUint {
        let (a, b) = self.aligned(other);
        (count * a) / b
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_small_cases() {
        assert_eq!(binomial(4, 2).unwrap(), BigCount::from(6));
        assert_eq!(binomial(17, 0).unwrap(), BigCount::from(1));
        assert_eq!(binomial(17, 17).unwrap(), BigCount::from(1));
        assert_eq!(binomial(0, 0).unwrap(), BigCount::from(1));
    }

    #[test]
    fn binomial_matches_pascal_triangle() {
        let mut row = vec![BigUint::one()];
        for n in 1..=60usize {
            let mut next = vec![BigUint::one(); n + 1];
            for w in 1..n {
                next[w] = &row[w - 1] + &row[w];
            }
            row = next;
            for (w, v) in row.iter().enumerate() {
                assert_eq!(binomial(n, w).unwrap().value(), v, "C({n},{w})");
            }
        }
        assert_eq!(binomial(30, 15).unwrap(), BigCount::from(155_117_520));
    }

    #[test]
    fn binomial_rejects_out_of_range() {
        assert!(matches!(binomial(3, 4), Err(crate::Error::Domain(_))));
    }

    #[test]
    fn multinomial_cases() {
        let wv = WeightVector::new(vec![2, 1, 1], 4).unwrap();
        assert_eq!(multinomial(&wv).unwrap(), BigCount::from(12));
        let wv = WeightVector::new(vec![9, 0, 0, 0], 9).unwrap();
        assert_eq!(multinomial(&wv).unwrap(), BigCount::from(1));
        let wv = WeightVector::new(vec![3, 3, 3, 3], 12).unwrap();
        assert_eq!(multinomial(&wv).unwrap(), BigCount::from(369_600));
        assert!(WeightVector::new(vec![3, 3], 7).is_err());
    }

    #[test]
    fn binomial_is_two_symbol_multinomial() {
        for n in 0..40 {
            for w in 0..=n {
                let wv = WeightVector::new(vec![w, n - w], n).unwrap();
                assert_eq!(binomial(n, w).unwrap(), multinomial(&wv).unwrap());
            }
        }
    }

    #[test]
    fn string_logprob_cases() {
        let wv = WeightVector::from_counts(vec![1, 1]);
        assert_eq!(string_logprob(&wv, &[0.5, 0.5]).unwrap().log2(), -2.0);
        let wv = WeightVector::from_counts(vec![0, 25]);
        let lp = string_logprob(&wv, &[0.1, 0.9]).unwrap().log2();
        assert!((lp - 25.0 * 0.9f64.log2()).abs() < 1e-12);
        // mpmath, 40 digits
        let wv = WeightVector::from_counts(vec![2, 8]);
        let lp = string_logprob(&wv, &[0.1, 0.9]).unwrap().log2();
        assert!((lp - (-7.859_880_937_335_124)).abs() < 1e-12);
    }

    #[test]
    fn zero_probability_symbol_gives_zero_mass() {
        let wv = WeightVector::from_counts(vec![2, 1]);
        assert!(string_logprob(&wv, &[1.0, 0.0]).unwrap().is_zero());
        let wv = WeightVector::from_counts(vec![3, 0]);
        assert_eq!(string_logprob(&wv, &[1.0, 0.0]).unwrap().log2(), 0.0);
    }

    #[test]
    fn weight_class_logprob_cases() {
        let lp = weight_class_logprob(4, 2, 0.5).unwrap();
        assert!((lp.log2() - 0.375f64.log2()).abs() < 1e-14);
        let lp = weight_class_logprob(30, 0, 0.2).unwrap();
        assert!((lp.log2() - 30.0 * 0.8f64.log2()).abs() < 1e-12);
        // 10 * 0.1 * 0.9^9 = 0.387420489 exactly
        let lp = weight_class_logprob(10, 1, 0.1).unwrap();
        assert!((lp.log2() - 0.387_420_489f64.log2()).abs() < 1e-12);
        assert!(weight_class_logprob(10, 1, 0.0).is_err());
        assert!(weight_class_logprob(10, 1, 1.0).is_err());
    }

    #[test]
    fn log_sum_is_order_insensitive() {
        let xs: Vec<f64> = (0..500).map(|i| -((i * 37 % 101) as f64) * 0.37).collect();
        let mut ys = xs.clone();
        ys.reverse();
        let a = log2_sum_exp2(xs);
        let b = log2_sum_exp2(ys);
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        assert_eq!(log2_sum_exp2(Vec::new()), f64::NEG_INFINITY);
    }

    #[test]
    fn log2_of_huge_counts() {
        let v = BigUint::one() << 5000usize;
        assert_eq!(log2_biguint(&v), 5000.0);
        let c = binomial(5000, 500).unwrap();
        let approx = log2_binomial_approx(5000, 500);
        assert!((c.log2() - approx).abs() < 1e-9 * approx);
    }

    #[test]
    fn dyadic_products_are_exact() {
        let a = Dyadic::string_prob(&[2, 1], &[0.5, 0.25]).unwrap();
        assert_eq!(a.mantissa, BigUint::one());
        assert_eq!(a.exponent, -4);
        let b = Dyadic::string_prob(&[1, 1], &[0.5, 0.25]).unwrap();
        assert_eq!(a.cmp_value(&b), Ordering::Less);
        // floor(10 * (1/16) / (1/8)) = 5
        assert_eq!(a.scaled_floor(&BigUint::from(10u32), &b), BigUint::from(5u32));
    }

    #[test]
    fn entropy_helpers() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert!((binary_entropy(0.1) - 0.468_995_593_589_281_2).abs() < 1e-15);
        assert!((shannon_entropy(&[0.7, 0.2, 0.1]) - 1.156_779_649_447_039_5).abs() < 1e-14);
    }
}
