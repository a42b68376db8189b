//! Lexicographic permutation ranking (Lehmer codes / factoradic digits).
//!
//! A rank `R < t!` only permutes the last `t` of `m` positions, so single
//! values of huge permutations are evaluated in O(t²) with `t` the least
//! integer such that `t! > R`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Least `t` with `t! > rank`.
fn tail_len(rank: &BigInt) -> usize {
    let mut t = 0usize;
    let mut f = BigInt::one();
    while &f <= rank {
        t += 1;
        f *= t;
    }
    t
}

/// Permutation of `{0, …, t−1}` with lexicographic rank `rank < t!`.
pub fn unrank_small(t: usize, rank: &BigInt) -> Vec<usize> {
    let mut fact = vec![BigInt::one(); t + 1];
    for i in 1..=t {
        fact[i] = &fact[i - 1] * i;
    }
    assert!(rank < &fact[t] && !rank.is_negative(), "rank out of range");
    let mut pool: Vec<usize> = (0..t).collect();
    let mut rest = rank.clone();
    let mut out = Vec::with_capacity(t);
    for i in 0..t {
        let (digit, r) = rest.div_rem(&fact[t - 1 - i]);
        let idx = digit.to_usize().unwrap();
        out.push(pool.remove(idx));
        rest = r;
    }
    out
}

/// Lexicographic rank of a permutation of `{0, …, t−1}`.
pub fn rank_small(perm: &[usize]) -> BigInt {
    let t = perm.len();
    let mut rank = BigInt::zero();
    for i in 0..t {
        let smaller_after = perm[i + 1..].iter().filter(|&&v| v < perm[i]).count();
        rank = rank * (t - i) + smaller_after;
    }
    rank
}

/// `m!` if it is below `cap`, else `None`.
pub fn factorial_below(m: &BigInt, cap: &BigInt) -> Option<BigInt> {
    let mut f = BigInt::one();
    let mut i = BigInt::one();
    while &i <= m {
        f *= &i;
        if &f >= cap {
            return None;
        }
        i += 1;
    }
    Some(f)
}

/// Whether `rank < m!`, without computing `m!` when it is large.
pub fn rank_fits(m: &BigInt, rank: &BigInt) -> bool {
    if rank.is_negative() {
        return false;
    }
    let t = tail_len(rank);
    BigInt::from(t) <= *m
}

/// Value at 0-based position `pos` of the rank-`rank` permutation of `{0, …, m−1}`.
pub fn lehmer_value(m: &BigInt, rank: &BigInt, pos: &BigInt) -> BigInt {
    assert!(rank_fits(m, rank), "rank {} not below {}!", rank, m);
    let t = tail_len(rank);
    let start = m - t;
    if pos < &start {
        return pos.clone();
    }
    let local = (pos - &start).to_usize().unwrap();
    let perm = unrank_small(t, rank);
    &start + perm[local]
}

/// Inverse lookup: position holding `value` in the rank-`rank` permutation of `{0, …, m−1}`.
pub fn lehmer_position(m: &BigInt, rank: &BigInt, value: &BigInt) -> BigInt {
    assert!(rank_fits(m, rank), "rank {} not below {}!", rank, m);
    let t = tail_len(rank);
    let start = m - t;
    if value < &start {
        return value.clone();
    }
    let local = (value - &start).to_usize().unwrap();
    let perm = unrank_small(t, rank);
    let p = perm.iter().position(|&v| v == local).unwrap();
    &start + p
}

/// Rank of the permutation of `{0, …, m−1}` that is the identity except that
/// the images of positions `a` and `b` are swapped.
pub fn rank_of_transposition(m: &BigInt, a: &BigInt, b: &BigInt) -> BigInt {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    if lo == hi {
        return BigInt::zero();
    }
    let t = (m - lo).to_usize().expect("transposition too far from the end");
    let mut perm: Vec<usize> = (0..t).collect();
    perm.swap(0, (hi - lo).to_usize().unwrap());
    rank_small(&perm)
}
