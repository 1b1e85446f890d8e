//! Bijections between `[0, class_size)` and the strings of one weight class.
//!
//! Subsets of positions are ranked in the combinatorial number system (colex
//! order: sorted positions `c_1 < ... < c_t` get rank `sum_i C(c_i, i)`).
//! Multi-symbol classes place each non-identity symbol in index order among
//! the positions still free; identity fills what is left. The rank is mixed
//! radix with the first symbol least significant.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::Zero;

use super::ErrorString;
use crate::error::{domain, Result};
use crate::prob::{binomial, WeightVector};

fn binom(m: usize, t: usize) -> BigUint {
    if t > m {
        BigUint::zero()
    } else {
        binomial(m, t).expect("t <= m").into_inner()
    }
}

/// Walks positions `m-1 .. 0` keeping `b = C(pos, t)` for the `t` selections still open.
struct Scan {
    b: BigUint,
    t: usize,
}

impl Scan {
    fn new(m: usize, t: usize) -> Scan {
        let b = if m == 0 { BigUint::zero() } else { binom(m - 1, t) };
        Scan { b, t }
    }

    /// Moves from `pos` to `pos - 1`, selecting `pos` or not.
    fn step(&mut self, pos: usize, selected: bool) {
        if pos == 0 {
            if selected {
                self.t -= 1;
            }
            return;
        }
        if selected {
            // C(pos-1, t-1) = C(pos, t) * t / pos
            if !self.b.is_zero() {
                self.b = &self.b * self.t / pos;
            }
            self.t -= 1;
        } else {
            // C(pos-1, t) = C(pos, t) * (pos - t) / pos
            self.b = &self.b * (pos - self.t) / pos;
        }
    }
}

/// Colex rank of the selected positions among `selected.len()` slots.
pub fn comb_rank(selected: &[bool]) -> BigUint {
    let t = selected.iter().filter(|&&s| s).count();
    let mut scan = Scan::new(selected.len(), t);
    let mut rank = BigUint::zero();
    for pos in (0..selected.len()).rev() {
        if scan.t == 0 {
            break;
        }
        if selected[pos] {
            rank += &scan.b;
        }
        scan.step(pos, selected[pos]);
    }
    rank
}

/// Positions with colex rank `rank` among `t`-subsets of `m` slots.
pub fn comb_unrank(rank: &BigUint, m: usize, t: usize) -> Vec<bool> {
    debug_assert!(rank < &binom(m, t), "rank out of range");
    let mut selected = vec![false; m];
    let mut r = rank.clone();
    let mut scan = Scan::new(m, t);
    for pos in (0..m).rev() {
        if scan.t == 0 {
            break;
        }
        let take = r >= scan.b;
        if take {
            r -= &scan.b;
            selected[pos] = true;
        }
        scan.step(pos, take);
    }
    selected
}

fn check_rank(rank: &BigUint, size: &BigUint) -> Result<()> {
    if rank >= size {
        return Err(domain(format!("rank {rank} outside class of size {size}")));
    }
    Ok(())
}

/// Number of strings with exactly the given symbol counts.
fn class_size(class: &WeightVector) -> BigUint {
    let mut free = class.n();
    let mut size = BigUint::from(1u32);
    for &c in &class.counts()[1..] {
        size *= binom(free, c);
        free -= c;
    }
    size
}

/// Rank of `e` among strings with symbol counts `class`.
pub fn rank_in_class(e: &ErrorString, class: &WeightVector) -> Result<BigUint> {
    let k = class.k();
    let actual = e.weights(k)?;
    if &actual != class {
        return Err(domain(format!("string has weights {actual}, expected {class}")));
    }
    let symbols = e.symbols();
    let mut free: Vec<usize> = (0..symbols.len()).collect();
    let mut digits = Vec::with_capacity(k - 1);
    for s in 1..k {
        let selected: Vec<bool> = free.iter().map(|&p| symbols[p] as usize == s).collect();
        let radix = binom(free.len(), class.counts()[s]);
        digits.push((comb_rank(&selected), radix));
        free = free
            .into_iter()
            .zip(&selected)
            .filter_map(|(p, &sel)| (!sel).then_some(p))
            .collect();
    }
    let mut rank = BigUint::zero();
    for (digit, radix) in digits.into_iter().rev() {
        rank = rank * radix + digit;
    }
    Ok(rank)
}

/// The string of rank `rank` among strings of length `n` with symbol counts `class`.
pub fn unrank_in_class(rank: &BigUint, class: &WeightVector, n: usize) -> Result<ErrorString> {
    if class.n() != n {
        return Err(domain(format!("class {class} does not have length {n}")));
    }
    check_rank(rank, &class_size(class))?;
    let k = class.k();
    let mut symbols = vec![0u8; n];
    let mut free: Vec<usize> = (0..n).collect();
    let mut r = rank.clone();
    for s in 1..k {
        let t = class.counts()[s];
        let radix = binom(free.len(), t);
        let (q, digit) = r.div_rem(&radix);
        r = q;
        let selected = comb_unrank(&digit, free.len(), t);
        let mut rest = Vec::with_capacity(free.len() - t);
        for (p, sel) in free.into_iter().zip(selected) {
            if sel {
                symbols[p] = s as u8;
            } else {
                rest.push(p);
            }
        }
        free = rest;
    }
    Ok(ErrorString::new(symbols))
}

/// Size of the class of strings with `w` non-identity letters drawn from `letters` choices.
pub fn weight_class_size(n: usize, w: usize, letters: usize) -> BigUint {
    binom(n, w) * BigUint::from(letters).pow(w as u32)
}

/// Rank of `e` among strings with `w` non-identity letters (from `letters` choices).
///
/// The support is ranked first; the letters along the support, read as a
/// base-`letters` number with the lowest position least significant, form
/// the high digit.
pub fn rank_in_weight_class(e: &ErrorString, w: usize, letters: usize) -> Result<BigUint> {
    let symbols = e.symbols();
    if symbols.iter().any(|&s| s as usize > letters) {
        return Err(domain("symbol outside the alphabet"));
    }
    let support: Vec<bool> = symbols.iter().map(|&s| s != 0).collect();
    let weight = support.iter().filter(|&&s| s).count();
    if weight != w {
        return Err(domain(format!("string has weight {weight}, expected {w}")));
    }
    let base = BigUint::from(letters);
    let mut letter_index = BigUint::zero();
    for &s in symbols.iter().rev().filter(|&&s| s != 0) {
        letter_index = letter_index * &base + BigUint::from(s as usize - 1);
    }
    Ok(letter_index * binom(symbols.len(), w) + comb_rank(&support))
}

/// Inverse of [`rank_in_weight_class`].
pub fn unrank_in_weight_class(rank: &BigUint, n: usize, w: usize, letters: usize) -> Result<ErrorString> {
    if w > n {
        return Err(domain(format!("weight {w} exceeds length {n}")));
    }
    check_rank(rank, &weight_class_size(n, w, letters))?;
    let (mut letter_index, support_rank) = rank.div_rem(&binom(n, w));
    let support = comb_unrank(&support_rank, n, w);
    let base = BigUint::from(letters);
    let mut symbols = vec![0u8; n];
    for (p, sel) in support.into_iter().enumerate() {
        if sel {
            let (q, digit) = letter_index.div_rem(&base);
            letter_index = q;
            let d = usize::try_from(&digit).expect("digit < letters");
            symbols[p] = (d + 1) as u8;
        }
    }
    Ok(ErrorString::new(symbols))
}
