//! Outward-rounded interval arithmetic over dyadic rationals.
//!
//! A [`Dyadic`] is `mant * 2^exp` with a big-integer mantissa. An
//! [`Interval`] is a pair of dyadics; every operation widens its result so
//! that the true real value is always enclosed. Working precision is the
//! number of mantissa bits kept after each rounding step.
//!
//! `ln` and `exp` are evaluated with fixed-point series where every
//! truncation is directed, plus an explicit tail bound.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Default working precision in bits.
pub const DEFAULT_PRECISION: u32 = 128;

/// Largest binary exponent accepted by `exp`; beyond this the result is
/// reported as unrepresentable instead of allocating astronomically.
const MAX_EXP_BITS: i64 = 1 << 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Round {
    Down,
    Up,
}

/// Exact value `mant * 2^exp`, kept with an odd mantissa (or zero).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Dyadic {
    mant: BigInt,
    exp: i64,
}

impl Dyadic {
    pub fn new(mant: BigInt, exp: i64) -> Self {
        let mut d = Dyadic { mant, exp };
        d.normalize();
        d
    }

    pub fn zero() -> Self {
        Dyadic { mant: BigInt::zero(), exp: 0 }
    }

    pub fn from_int(v: impl Into<BigInt>) -> Self {
        Dyadic::new(v.into(), 0)
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mant
    }

    pub fn exponent(&self) -> i64 {
        self.exp
    }

    fn normalize(&mut self) {
        if self.mant.is_zero() {
            self.exp = 0;
            return;
        }
        let tz = self.mant.trailing_zeros().unwrap_or(0);
        if tz > 0 {
            self.mant >>= tz;
            self.exp += tz as i64;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn sign(&self) -> Sign {
        self.mant.sign()
    }

    /// Position just above the most significant bit, i.e. `2^(msb-1) <= |x| < 2^msb`.
    fn msb(&self) -> i64 {
        self.mant.bits() as i64 + self.exp
    }

    pub fn neg(&self) -> Self {
        Dyadic { mant: -self.mant.clone(), exp: self.exp }
    }

    /// Rounds to at most `prec` significant bits in direction `dir`.
    pub fn round(&self, prec: u32, dir: Round) -> Self {
        let bits = self.mant.bits();
        if bits <= prec as u64 {
            return self.clone();
        }
        let shift = bits - prec as u64;
        let m = match dir {
            Round::Down => &self.mant >> shift,
            Round::Up => -((-&self.mant) >> shift),
        };
        Dyadic::new(m, self.exp + shift as i64)
    }

    fn align(a: &Dyadic, b: &Dyadic) -> (BigInt, BigInt, i64) {
        let e = a.exp.min(b.exp);
        let ma = &a.mant << (a.exp - e) as u64;
        let mb = &b.mant << (b.exp - e) as u64;
        (ma, mb, e)
    }

    /// Exact sum when the exponents are close; otherwise a directed bound.
    fn add_round(&self, other: &Dyadic, prec: u32, dir: Round) -> Dyadic {
        if self.is_zero() {
            return other.round(prec, dir);
        }
        if other.is_zero() {
            return self.round(prec, dir);
        }
        let (big, small) = if self.msb() >= other.msb() { (self, other) } else { (other, self) };
        let gap = big.msb() - small.msb();
        if gap > prec as i64 + 4 {
            // `small` lies strictly below one unit of the rounded `big`.
            let rb = big.round(prec, dir);
            let ulp = Dyadic::new(BigInt::one(), rb.msb() - prec as i64);
            return match (dir, small.sign()) {
                (Round::Down, Sign::Minus) => rb.add_round(&ulp.neg(), prec + 2, Round::Down).round(prec, Round::Down),
                (Round::Up, Sign::Plus) => rb.add_round(&ulp, prec + 2, Round::Up).round(prec, Round::Up),
                _ => rb,
            };
        }
        let (ma, mb, e) = Dyadic::align(self, other);
        Dyadic::new(ma + mb, e).round(prec, dir)
    }

    fn mul_round(&self, other: &Dyadic, prec: u32, dir: Round) -> Dyadic {
        Dyadic::new(&self.mant * &other.mant, self.exp + other.exp).round(prec, dir)
    }

    fn div_round(&self, other: &Dyadic, prec: u32, dir: Round) -> Dyadic {
        assert!(!other.is_zero(), "division by zero dyadic");
        if self.is_zero() {
            return Dyadic::zero();
        }
        let shift = (prec as i64 + 2 + other.mant.bits() as i64 - self.mant.bits() as i64).max(0);
        let num = &self.mant << shift as u64;
        let q = match dir {
            Round::Down => num.div_floor(&other.mant),
            Round::Up => -((-num).div_floor(&other.mant)),
        };
        Dyadic::new(q, self.exp - other.exp - shift).round(prec, dir)
    }

    /// Floor of the value as an integer. Fails for values with astronomically
    /// large exponents.
    pub fn floor(&self) -> BigInt {
        if self.exp >= 0 {
            assert!(self.exp < MAX_EXP_BITS, "dyadic too large to convert");
            &self.mant << self.exp as u64
        } else {
            &self.mant >> (-self.exp) as u64
        }
    }

    pub fn ceil(&self) -> BigInt {
        -(self.neg().floor())
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let bits = self.mant.bits() as i64;
        let keep = bits.min(60);
        let top = (&self.mant >> (bits - keep) as u64).to_f64().unwrap_or(f64::NAN);
        let e = self.exp + bits - keep;
        if e > 2000 {
            return if top > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY };
        }
        if e < -2000 {
            return 0.0;
        }
        top * 2f64.powi(e as i32)
    }

    /// Approximate base-2 logarithm of |x|, usable for very large values.
    pub fn log2_abs_approx(&self) -> f64 {
        let bits = self.mant.bits() as i64;
        let keep = bits.min(60);
        let top = (&self.mant >> (bits - keep) as u64).abs().to_f64().unwrap_or(1.0);
        top.log2() + (self.exp + bits - keep) as f64
    }

    /// Serialized as `mant*2^exp`.
    pub fn to_text(&self) -> String {
        format!("{}*2^{}", self.mant, self.exp)
    }

    pub fn parse_text(s: &str) -> Option<Dyadic> {
        let (m, e) = s.trim().split_once("*2^")?;
        Some(Dyadic::new(m.parse().ok()?, e.parse().ok()?))
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (sa, sb) = (self.mant.sign(), other.mant.sign());
        let rank = |s: Sign| match s {
            Sign::Minus => 0,
            Sign::NoSign => 1,
            Sign::Plus => 2,
        };
        if sa != sb {
            return rank(sa).cmp(&rank(sb));
        }
        if sa == Sign::NoSign {
            return Ordering::Equal;
        }
        let (ma, mb) = (self.msb(), other.msb());
        if ma != mb {
            let o = ma.cmp(&mb);
            return if sa == Sign::Plus { o } else { o.reverse() };
        }
        let (x, y, _) = Dyadic::align(self, other);
        x.cmp(&y)
    }
}

/// Closed interval `[lo, hi]` with dyadic endpoints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    pub lo: Dyadic,
    pub hi: Dyadic,
}

impl Interval {
    pub fn new(lo: Dyadic, hi: Dyadic) -> Self {
        assert!(lo <= hi, "inverted interval");
        Interval { lo, hi }
    }

    pub fn point(v: Dyadic) -> Self {
        Interval { lo: v.clone(), hi: v }
    }

    pub fn from_int(v: impl Into<BigInt>) -> Self {
        Interval::point(Dyadic::from_int(v))
    }

    /// Encloses `num/den` (den nonzero).
    pub fn from_ratio(num: &BigInt, den: &BigInt, prec: u32) -> Self {
        let (n, d) = (Dyadic::from_int(num.clone()), Dyadic::from_int(den.clone()));
        Interval { lo: n.div_round(&d, prec, Round::Down), hi: n.div_round(&d, prec, Round::Up) }
    }

    pub fn add(&self, o: &Interval, prec: u32) -> Interval {
        Interval {
            lo: self.lo.add_round(&o.lo, prec, Round::Down),
            hi: self.hi.add_round(&o.hi, prec, Round::Up),
        }
    }

    pub fn neg(&self) -> Interval {
        Interval { lo: self.hi.neg(), hi: self.lo.neg() }
    }

    pub fn sub(&self, o: &Interval, prec: u32) -> Interval {
        self.add(&o.neg(), prec)
    }

    pub fn mul(&self, o: &Interval, prec: u32) -> Interval {
        let cands = [(&self.lo, &o.lo), (&self.lo, &o.hi), (&self.hi, &o.lo), (&self.hi, &o.hi)];
        let lo = cands.iter().map(|(a, b)| a.mul_round(b, prec, Round::Down)).min().unwrap();
        let hi = cands.iter().map(|(a, b)| a.mul_round(b, prec, Round::Up)).max().unwrap();
        Interval { lo, hi }
    }

    /// Division; the divisor must not contain zero.
    pub fn div(&self, o: &Interval, prec: u32) -> Interval {
        assert!(o.lo.sign() == o.hi.sign() && !o.lo.is_zero(), "divisor interval contains zero");
        let cands = [(&self.lo, &o.lo), (&self.lo, &o.hi), (&self.hi, &o.lo), (&self.hi, &o.hi)];
        let lo = cands.iter().map(|(a, b)| a.div_round(b, prec, Round::Down)).min().unwrap();
        let hi = cands.iter().map(|(a, b)| a.div_round(b, prec, Round::Up)).max().unwrap();
        Interval { lo, hi }
    }

    /// Natural logarithm; requires `lo > 0`.
    pub fn ln(&self, prec: u32) -> Interval {
        assert!(self.lo.sign() == Sign::Plus, "ln of non-positive interval");
        let lo = ln_enclosure(&self.lo, prec).0;
        let hi = ln_enclosure(&self.hi, prec).1;
        Interval { lo, hi }
    }

    /// Exponential; `None` if the result would exceed the representable range.
    pub fn exp(&self, prec: u32) -> Option<Interval> {
        let lo = exp_enclosure(&self.lo, prec)?.0;
        let hi = exp_enclosure(&self.hi, prec)?.1;
        Some(Interval { lo, hi })
    }

    /// `Some(Less)` if certainly `self < o`, `Some(Greater)` if certainly
    /// `self > o`, `None` when the enclosures overlap.
    pub fn cmp_certain(&self, o: &Interval) -> Option<Ordering> {
        if self.hi < o.lo {
            Some(Ordering::Less)
        } else if self.lo > o.hi {
            Some(Ordering::Greater)
        } else {
            None
        }
    }

    /// Certainly `self <= o`.
    pub fn certainly_le(&self, o: &Interval) -> bool {
        self.hi <= o.lo
    }

    /// Certainly `self < o`.
    pub fn certainly_lt(&self, o: &Interval) -> bool {
        self.hi < o.lo
    }

    pub fn contains(&self, v: &Dyadic) -> bool {
        &self.lo <= v && v <= &self.hi
    }

    pub fn is_subset_of(&self, o: &Interval) -> bool {
        o.lo <= self.lo && self.hi <= o.hi
    }

    pub fn mid_f64(&self) -> f64 {
        (self.lo.to_f64() + self.hi.to_f64()) / 2.0
    }

    pub fn width_f64(&self) -> f64 {
        self.hi.to_f64() - self.lo.to_f64()
    }

    pub fn to_text(&self) -> String {
        format!("[{}, {}]", self.lo.to_text(), self.hi.to_text())
    }

    pub fn parse_text(s: &str) -> Option<Interval> {
        let s = s.trim().strip_prefix('[')?.strip_suffix(']')?;
        let (a, b) = s.split_once(',')?;
        let (lo, hi) = (Dyadic::parse_text(a)?, Dyadic::parse_text(b)?);
        (lo <= hi).then_some(Interval { lo, hi })
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = (self.lo.to_f64(), self.hi.to_f64());
        if a.is_finite() && b.is_finite() && a.abs() < 1e300 {
            write!(f, "[{:.12e}, {:.12e}]", a, b)
        } else {
            write!(f, "[~2^{:.6}, ~2^{:.6}]", self.lo.log2_abs_approx(), self.hi.log2_abs_approx())
        }
    }
}

/// Fixed-point enclosure of `2 * atanh(z)` for `z = num/den` in `[0, 1/3]`,
/// scaled by `2^w`.
fn atanh2_fixed(num: &BigInt, den: &BigInt, w: u64) -> (BigInt, BigInt) {
    let one = BigInt::one() << w;
    let scaled = num << w;
    let (zl, r) = scaled.div_rem(den);
    let zu = if r.is_zero() { zl.clone() } else { &zl + 1 };
    let z2l = (&zl * &zl) >> w;
    let z2u = ceil_shr(&zu * &zu, w);
    let (mut pl, mut pu) = (zl, zu);
    let (mut sl, mut su) = (BigInt::zero(), BigInt::zero());
    let mut k: u64 = 1;
    loop {
        if pu <= BigInt::one() {
            // Remaining terms are bounded by pu * 9/8 <= 2 units.
            su += 2;
            break;
        }
        sl += &pl / k;
        su += ceil_div_u64(&pu, k);
        pl = (&pl * &z2l) >> w;
        pu = ceil_shr(&pu * &z2u, w);
        k += 2;
        debug_assert!(pu < one);
    }
    (sl * 2, su * 2)
}

fn ceil_shr(v: BigInt, w: u64) -> BigInt {
    -((-v) >> w)
}

fn ceil_div_u64(v: &BigInt, k: u64) -> BigInt {
    let k = BigInt::from(k);
    -((-v).div_floor(&k))
}

/// Enclosure of ln 2 scaled by `2^w`.
fn ln2_fixed(w: u64) -> (BigInt, BigInt) {
    atanh2_fixed(&BigInt::one(), &BigInt::from(3), w)
}

/// Returns `(lower, upper)` bounds of `ln(x)` for a positive dyadic.
fn ln_enclosure(x: &Dyadic, prec: u32) -> (Dyadic, Dyadic) {
    assert!(x.sign() == Sign::Plus);
    let b = x.mant.bits();
    let half = BigInt::one() << (b - 1);
    let k = x.exp + b as i64 - 1;
    let w = prec as u64 + 48 + (64 - k.unsigned_abs().leading_zeros() as u64);
    let (yl, yu) = atanh2_fixed(&(&x.mant - &half), &(&x.mant + &half), w);
    let (l2l, l2u) = ln2_fixed(w);
    let kb = BigInt::from(k);
    let (lo, hi) = if k >= 0 { (yl + &kb * l2l, yu + &kb * l2u) } else { (yl + &kb * l2u, yu + &kb * l2l) };
    let wl = -(w as i64);
    (Dyadic::new(lo, wl).round(prec, Round::Down), Dyadic::new(hi, wl).round(prec, Round::Up))
}

/// Fixed-point `exp(r)` for `r = rr / 2^w` in `[0, 0.75]`, rounding in `dir`.
///
/// For large `w` the argument is first divided by `2^s` and the result squared
/// `s` times; every step rounds in `dir`, and all quantities stay positive so
/// squaring is monotone.
fn exp_small_fixed(rr: &BigInt, w: u64, dir: Round) -> BigInt {
    let s = if w > 512 { ((w as f64).sqrt() as u64) / 2 } else { 0 };
    let ww = w + s + 8;
    let r = match dir {
        Round::Down => (rr << (ww - w)) >> s,
        Round::Up => -((-(rr << (ww - w))) >> s),
    };
    let mut e = exp_series_fixed(&r, ww, dir);
    for _ in 0..s {
        let sq = &e * &e;
        e = match dir {
            Round::Down => sq >> ww,
            Round::Up => ceil_shr(sq, ww),
        };
    }
    match dir {
        Round::Down => e >> (ww - w),
        Round::Up => ceil_shr(e, ww - w),
    }
}

fn exp_series_fixed(rr: &BigInt, w: u64, dir: Round) -> BigInt {
    let mut term = BigInt::one() << w;
    let mut sum = term.clone();
    let mut i: u64 = 1;
    loop {
        let prod = &term * rr;
        let den = BigInt::from(i) << w;
        term = match dir {
            Round::Down => prod.div_floor(&den),
            Round::Up => -((-prod).div_floor(&den)),
        };
        if term.is_zero() {
            break;
        }
        sum += &term;
        if dir == Round::Up && term <= BigInt::one() {
            // Further terms shrink by at least a factor 2.
            sum += 2;
            break;
        }
        i += 1;
    }
    sum
}

/// Returns `(lower, upper)` bounds of `exp(x)`, or `None` when `x` is so large
/// that the exponent leaves the supported range.
fn exp_enclosure(x: &Dyadic, prec: u32) -> Option<(Dyadic, Dyadic)> {
    if x.msb() > 44 {
        return None;
    }
    let w = prec as u64 + 64;
    let xl = if x.exp >= 0 { &x.mant << (x.exp as u64 + w) } else { floor_shift(&x.mant, x.exp + w as i64) };
    let xu = if x.exp >= 0 { xl.clone() } else { -floor_shift(&(-&x.mant), x.exp + w as i64) };
    let (l2l, l2u) = ln2_fixed(w);
    let k = if xl.sign() != Sign::Minus { xl.div_floor(&l2u) } else { xl.div_floor(&l2l) };
    let (rl, ru) = if k.sign() != Sign::Minus {
        (&xl - &k * &l2u, &xu - &k * &l2l)
    } else {
        (&xl - &k * &l2l, &xu - &k * &l2u)
    };
    let k = k.to_i64()?;
    if k.abs() > MAX_EXP_BITS {
        return None;
    }
    let el = exp_small_fixed(&rl.max(BigInt::zero()), w, Round::Down);
    let eu = exp_small_fixed(&ru, w, Round::Up);
    let e = k - w as i64;
    Some((Dyadic::new(el, e).round(prec, Round::Down), Dyadic::new(eu, e).round(prec, Round::Up)))
}

/// `floor(m * 2^s)` for any sign of `s`.
fn floor_shift(m: &BigInt, s: i64) -> BigInt {
    if s >= 0 {
        m << s as u64
    } else {
        m >> (-s) as u64
    }
}

/// Natural logarithm of a positive big integer as an interval.
pub fn ln_int(v: &BigInt, prec: u32) -> Interval {
    Interval::from_int(v.clone()).ln(prec)
}

/// Certified lower bound on `ln(m!)`.
///
/// Exact summation for small `m`, otherwise `m ln m - m` (which holds since
/// `m! m^{-m} e^m > 1`).
pub fn ln_factorial_lower(m: &BigInt, prec: u32) -> Dyadic {
    if m.sign() != Sign::Plus {
        return Dyadic::zero();
    }
    if let Some(small) = m.to_u64().filter(|&v| v <= 4096) {
        let mut f = BigInt::one();
        for i in 2..=small {
            f *= i;
        }
        return ln_int(&f, prec).lo;
    }
    let mi = Interval::from_int(m.clone());
    let t = mi.ln(prec).sub(&Interval::from_int(1), prec);
    mi.mul(&t, prec).lo
}
