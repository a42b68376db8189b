//! Parameter planning for the entropy-h construction over `Σ_k`, `k ≥ 5`.
//!
//! The planner computes the sequences `p′_n, q′_n, λ_n`, a certified lower
//! bound `L ≤ λ(k)`, the integers `M` and `N`, and the per-level integers
//! `q_n, p_n`. Every real inequality is decided in outward-rounded interval
//! arithmetic; an undecided comparison raises the working precision and is a
//! hard failure once the cap is reached.
//!
//! Integers stay exact up to the digit budget. Past it a value is kept as an
//! enclosure of its natural logarithm, and planning stops after the first such
//! level `q_E`: the next threshold would be `e^{p h}` with `p` itself
//! astronomically large.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::interval::{ln_int, Dyadic, Interval, DEFAULT_PRECISION};
use crate::lattice::{Axis, DiagonalMatrix, DiagonalScale, DomainFamily, DomainLevel, Offsets};

/// Default bound on the number of decimal digits of exact integers.
pub const DEFAULT_DIGIT_BUDGET: u64 = 1_000_000;

/// Cap for automatic precision raising.
pub const MAX_PRECISION: u32 = 4096;

/// Numeric settings shared by planning and certification.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlannerConfig {
    pub precision: u32,
    pub max_precision: u32,
    pub digit_budget: u64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig { precision: DEFAULT_PRECISION, max_precision: MAX_PRECISION, digit_budget: DEFAULT_DIGIT_BUDGET }
    }
}

/// A positive integer, exact or known through an enclosure of its logarithm.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Magnitude {
    Exact(BigInt),
    /// Enclosure of `ln(value)`; the value exceeds the digit budget.
    Log(Interval),
}

impl Magnitude {
    pub fn exact(&self) -> Option<&BigInt> {
        match self {
            Magnitude::Exact(v) => Some(v),
            Magnitude::Log(_) => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Magnitude::Exact(_))
    }

    /// Enclosure of the natural logarithm.
    pub fn ln(&self, prec: u32) -> Interval {
        match self {
            Magnitude::Exact(v) => ln_int(v, prec),
            Magnitude::Log(l) => l.clone(),
        }
    }

    /// Enclosure of the value itself, when representable.
    pub fn value(&self, prec: u32) -> Option<Interval> {
        match self {
            Magnitude::Exact(v) => Some(Interval::from_int(v.clone())),
            Magnitude::Log(l) => l.exp(prec),
        }
    }

    fn mul(&self, o: &Magnitude, budget: u64, prec: u32) -> Magnitude {
        if let (Magnitude::Exact(a), Magnitude::Exact(b)) = (self, o) {
            let v = a * b;
            if decimal_digits(&v) <= budget {
                return Magnitude::Exact(v);
            }
        }
        Magnitude::Log(self.ln(prec).add(&o.ln(prec), prec))
    }
}

impl fmt::Display for Magnitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Magnitude::Exact(v) => write!(f, "{}", v),
            Magnitude::Log(l) => write!(f, "exp{}", l),
        }
    }
}

/// Number of decimal digits of a nonnegative integer (upper estimate by one at most).
pub fn decimal_digits(v: &BigInt) -> u64 {
    ((v.bits() as f64) * std::f64::consts::LOG10_2).floor() as u64 + 1
}

/// Product of `lo..=hi` by binary splitting.
fn range_product(lo: u64, hi: u64) -> BigInt {
    if lo > hi {
        return BigInt::one();
    }
    if hi - lo < 16 {
        let mut p = BigInt::one();
        for i in lo..=hi {
            p *= i;
        }
        return p;
    }
    let mid = lo + (hi - lo) / 2;
    range_product(lo, mid) * range_product(mid + 1, hi)
}

/// `m!` for machine-sized `m`.
pub fn factorial(m: u64) -> BigInt {
    range_product(2, m)
}

/// Enclosure of `ln(m!)`.
fn ln_factorial(m: &Magnitude, prec: u32) -> Option<Interval> {
    let one = Interval::from_int(1);
    match m {
        Magnitude::Exact(v) => {
            if let Some(s) = v.to_u64().filter(|&s| s <= 4096) {
                return Some(ln_int(&factorial(s), prec));
            }
            let mi = Interval::from_int(v.clone());
            let lnm = mi.ln(prec);
            let base = mi.mul(&lnm.sub(&one, prec), prec);
            let slack = lnm.div(&Interval::from_int(2), prec).add(&Interval::from_int(2), prec);
            Some(Interval::new(base.lo.clone(), base.add(&slack, prec).hi))
        }
        Magnitude::Log(l) => {
            let mi = l.exp(prec)?;
            let base = mi.mul(&l.sub(&one, prec), prec);
            let slack = l.div(&Interval::from_int(2), prec).add(&Interval::from_int(2), prec);
            Some(Interval::new(base.lo.clone(), base.add(&slack, prec).hi))
        }
    }
}

/// `m − 1` for a magnitude; symbolic values are at least `10^budget`, so the
/// logarithm moves by less than `2^-64`.
fn minus_one(m: &Magnitude) -> Magnitude {
    match m {
        Magnitude::Exact(v) => Magnitude::Exact(v - 1),
        Magnitude::Log(l) => {
            let eps = Dyadic::new(BigInt::one(), -64);
            let lo = Interval::point(l.lo.clone()).sub(&Interval::point(eps), l.lo.mantissa().bits() as u32 + 80).lo;
            Magnitude::Log(Interval::new(lo, l.hi.clone()))
        }
    }
}

/// `(m)!` as a magnitude, exact while within the budget.
fn factorial_magnitude(m: &Magnitude, budget: u64, prec: u32) -> Option<Magnitude> {
    let ln = ln_factorial(m, prec)?;
    let digits_upper = ln.hi.to_f64() / std::f64::consts::LN_10;
    if let Magnitude::Exact(v) = m {
        if digits_upper.is_finite() && digits_upper <= budget as f64 {
            return Some(Magnitude::Exact(factorial(v.to_u64()?)));
        }
    }
    Some(Magnitude::Log(ln))
}

/// Exact prefix of the sequences `p′, q′` together with `λ_n = ln(q′_n)/p′_n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrimeSequences {
    pub p: Vec<BigInt>,
    pub q: Vec<BigInt>,
    pub lambda: Vec<Interval>,
}

/// `p′_0 = 1, q′_0 = k, p′_{n+1} = p′_n q′_n, q′_{n+1} = (q′_n − 1)!` for `n ≤ n_max`.
pub fn prime_sequences(k: u64, n_max: usize, cfg: &PlannerConfig) -> Result<PrimeSequences> {
    if k < 5 {
        return Err(Error::InvalidInput(format!("alphabet size {} < 5", k)));
    }
    let mags = prime_magnitudes(k, n_max + 1, cfg);
    let mut out = PrimeSequences { p: Vec::new(), q: Vec::new(), lambda: Vec::new() };
    for n in 0..=n_max {
        let (p, q) = match mags.get(n) {
            Some((Magnitude::Exact(p), Magnitude::Exact(q))) => (p.clone(), q.clone()),
            _ => {
                return Err(Error::DigitBudgetExceeded(format!(
                    "q′_{} exceeds {} decimal digits",
                    n, cfg.digit_budget
                )))
            }
        };
        let lam = ln_int(&q, cfg.precision).div(&Interval::from_int(p.clone()), cfg.precision);
        out.p.push(p);
        out.q.push(q);
        out.lambda.push(lam);
    }
    Ok(out)
}

/// `(p′_n, q′_n)` as magnitudes for `n < count`, stopping early once a value
/// is no longer representable even through its logarithm.
fn prime_magnitudes(k: u64, count: usize, cfg: &PlannerConfig) -> Vec<(Magnitude, Magnitude)> {
    let prec = cfg.precision;
    let mut out = Vec::new();
    let mut p = Magnitude::Exact(BigInt::one());
    let mut q = Magnitude::Exact(BigInt::from(k));
    for _ in 0..count {
        out.push((p.clone(), q.clone()));
        let np = p.mul(&q, cfg.digit_budget, prec);
        let nq = match factorial_magnitude(&minus_one(&q), cfg.digit_budget, prec) {
            Some(v) => v,
            None => break,
        };
        p = np;
        q = nq;
    }
    out
}

/// Certified lower bound on `λ(k)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LambdaBound {
    /// Enclosure of `(ln q′_j − 5)/p′_j` for the best iteration count `j`.
    pub value: Interval,
    pub iterations: usize,
}

impl LambdaBound {
    /// The certified bound itself (lower end of the enclosure).
    pub fn certified(&self) -> Interval {
        Interval::point(self.value.lo.clone())
    }
}

/// Iterates `λ(k) = λ((k−1)!)/k` up to `iterations` times and closes with
/// `λ(m) > ln m − 5`. Iterations whose factorial exceeds the digit budget are
/// skipped; the best bound found is returned.
pub fn lambda_lower_bound(k: u64, iterations: usize, cfg: &PlannerConfig) -> Result<LambdaBound> {
    if k < 5 {
        return Err(Error::InvalidInput(format!("alphabet size {} < 5", k)));
    }
    let prec = cfg.precision;
    let mags = prime_magnitudes(k, iterations + 1, cfg);
    let five = Interval::from_int(5);
    let mut best: Option<LambdaBound> = None;
    for (j, (p, q)) in mags.iter().enumerate().take(iterations + 1) {
        let (Magnitude::Exact(p), Magnitude::Exact(q)) = (p, q) else { break };
        let v = ln_int(q, prec).sub(&five, prec).div(&Interval::from_int(p.clone()), prec);
        if best.as_ref().map(|b| v.lo > b.value.lo).unwrap_or(true) {
            best = Some(LambdaBound { value: v, iterations: j });
        }
    }
    Ok(best.expect("iteration 0 is always exact"))
}

/// Largest useful iteration count under the digit budget.
pub fn lambda_lower_bound_auto(k: u64, cfg: &PlannerConfig) -> Result<LambdaBound> {
    lambda_lower_bound(k, 16, cfg)
}

/// `f(ξ) = ξ − (d+1) ln ξ − 1` as an interval.
fn f_xi(xi: u64, d: usize, prec: u32) -> Interval {
    let x = Interval::from_int(xi);
    x.sub(&ln_int(&BigInt::from(xi), prec).mul(&Interval::from_int(d as u64 + 1), prec), prec)
        .sub(&Interval::from_int(1), prec)
}

/// Least integer `M ≥ 4` with `ξ − (d+1) ln ξ − 1 ≥ 0` for all real `ξ ≥ M`.
///
/// The function is increasing for `ξ > d+1` and negative at `ξ = d+1`, so `M`
/// is the least integer above `d+1` (and at least 4) where it is nonnegative.
pub fn choose_m(d: usize) -> u64 {
    let mut prec = DEFAULT_PRECISION;
    let mut m = (d as u64 + 2).max(4);
    loop {
        let v = f_xi(m, d, prec);
        if v.lo.sign() != num_bigint::Sign::Minus {
            return m;
        }
        if v.hi.sign() == num_bigint::Sign::Minus {
            m += 1;
            continue;
        }
        prec *= 2;
    }
}

/// Interval enclosure of a rational.
pub fn rational_interval(r: &BigRational, prec: u32) -> Interval {
    Interval::from_ratio(r.numer(), r.denom(), prec)
}

/// Parses a decimal (`0.3`, `1e-2`) or fraction (`3/10`) string exactly.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::InvalidInput(format!("cannot parse '{}' as an exact rational", s));
    if let Some((a, b)) = s.split_once('/') {
        let n: BigInt = a.trim().parse().map_err(|_| bad())?;
        let d: BigInt = b.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i64>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: BigInt = format!("{}{}", if int.is_empty() { "0" } else { int }, frac).parse().map_err(|_| bad())?;
    let scale = exp - frac.len() as i64;
    let ten = BigInt::from(10);
    let mut r = if scale >= 0 {
        BigRational::from_integer(digits * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(digits, num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        r = -r;
    }
    Ok(r)
}

/// Tri-state outcome of one certified condition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// The enclosures overlap at the current precision.
    Maybe,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "FAIL",
            Verdict::Maybe => "UNDECIDED",
        })
    }
}

/// One verified condition of the plan.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub level: Option<usize>,
    pub label: String,
    pub detail: String,
    pub verdict: Verdict,
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.level {
            Some(n) => write!(f, "[{}] level {} {}: {}", self.verdict, n, self.label, self.detail),
            None => write!(f, "[{}] {}: {}", self.verdict, self.label, self.detail),
        }
    }
}

fn le_verdict(a: &Interval, b: &Interval) -> Verdict {
    if a.hi <= b.lo {
        Verdict::Pass
    } else if a.lo > b.hi {
        Verdict::Fail
    } else {
        Verdict::Maybe
    }
}

fn lt_verdict(a: &Interval, b: &Interval) -> Verdict {
    if a.hi < b.lo {
        Verdict::Pass
    } else if a.lo >= b.hi {
        Verdict::Fail
    } else {
        Verdict::Maybe
    }
}

fn bool_verdict(b: bool) -> Verdict {
    if b {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// The certified output of the planner.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstructionPlan {
    pub k: u64,
    pub d: usize,
    pub h: BigRational,
    pub m: u64,
    pub n: usize,
    /// Certified `L ≤ λ(k)` and the iteration count that produced it.
    pub lambda: LambdaBound,
    /// `q_0, …, q_E`; only `q_E` may be symbolic.
    pub q: Vec<Magnitude>,
    /// `p_0, …, p_{E+1}`.
    pub p: Vec<Magnitude>,
    pub digit_budget: u64,
    pub precision: u32,
}

/// Smallest multiple of `mu` whose logarithm is at least `t` (`t` given exactly).
fn smallest_multiple(t: &BigRational, mu: &BigInt, prec: u32) -> std::result::Result<BigInt, ()> {
    let ti = rational_interval(t, prec);
    let e = ti.exp(prec).ok_or(())?;
    let lo = e.lo.floor();
    let c = {
        let (qq, r) = lo.div_rem(mu);
        if r.is_zero() {
            qq * mu
        } else {
            (qq + 1) * mu
        }
    };
    // c ≥ e^t needs c ≥ e.hi; c − μ < e^t follows from c − μ < e.lo.
    let ci = Interval::from_int(c.clone());
    let below = Interval::from_int(&c - mu);
    if e.hi <= ci.lo && below.hi < e.lo {
        Ok(c)
    } else {
        Err(())
    }
}

/// Outcome of one planning attempt at a fixed precision.
enum Attempt {
    Done(ConstructionPlan),
    Undecided,
}

/// Plans the construction for alphabet size `k ≥ 5`, dimension `d` and target
/// entropy `h` (an exact rational).
pub fn plan(k: u64, d: usize, h: &BigRational, cfg: &PlannerConfig) -> Result<ConstructionPlan> {
    if k < 5 {
        return Err(Error::InvalidInput(format!("alphabet size {} < 5", k)));
    }
    if d == 0 {
        return Err(Error::InvalidInput("dimension must be at least 1".into()));
    }
    if !h.is_positive() {
        return Err(Error::InvalidInput("entropy must be positive".into()));
    }
    let mut c = cfg.clone();
    loop {
        match plan_at(k, d, h, &c)? {
            Attempt::Done(p) => {
                let certs = certify(&p)?;
                if let Some(bad) = certs.iter().find(|c| c.verdict == Verdict::Fail) {
                    return Err(Error::Certification(bad.to_string()));
                }
                if certs.iter().any(|c| c.verdict == Verdict::Maybe) && c.precision < c.max_precision {
                    c.precision = (c.precision * 2).min(c.max_precision);
                    continue;
                }
                if let Some(bad) = certs.iter().find(|c| c.verdict != Verdict::Pass) {
                    return Err(Error::Certification(bad.to_string()));
                }
                return Ok(p);
            }
            Attempt::Undecided => {
                if c.precision >= c.max_precision {
                    return Err(Error::Certification("undecided comparison at maximal precision".into()));
                }
                c.precision = (c.precision * 2).min(c.max_precision);
            }
        }
    }
}

/// The least `N` satisfying the three conditions of the choice of `N`.
pub fn choose_n(k: u64, d: usize, h: &BigRational, m: u64, lambda: &LambdaBound, cfg: &PlannerConfig) -> Result<usize> {
    match choose_n_at(k, d, h, m, lambda, cfg)? {
        Some(n) => Ok(n),
        None => Err(Error::Certification("undecided comparison while choosing N".into())),
    }
}

fn choose_n_at(
    k: u64,
    d: usize,
    h: &BigRational,
    m: u64,
    lambda: &LambdaBound,
    cfg: &PlannerConfig,
) -> Result<Option<usize>> {
    let prec = cfg.precision;
    let hi = rational_interval(h, prec);
    let l = lambda.certified();
    match lt_verdict(&hi, &l) {
        Verdict::Pass => {}
        Verdict::Maybe => return Ok(None),
        Verdict::Fail => {
            return Err(Error::InfeasibleEntropy(format!(
                "h = {} is not below the certified bound L = {:.6} for lambda({})",
                h,
                l.lo.to_f64(),
                k
            )))
        }
    }
    let gap = l.sub(&hi, prec);
    let num = ln_int(&BigInt::from(m), prec).mul(&Interval::from_int(d as u64), prec).add(&Interval::from_int(3), prec);
    let mags = prime_magnitudes(k, 64, cfg);
    for nn in 1..mags.len() {
        let (p_prev, q_prev) = &mags[nn - 1];
        let (p_n, _) = &mags[nn];
        // p′_{N−1} h ≥ 1
        let c1 = match p_prev {
            Magnitude::Exact(p) => bool_verdict(h * BigRational::from_integer(p.clone()) >= BigRational::one()),
            Magnitude::Log(_) => Verdict::Pass,
        };
        // q′_{N−1} ≥ M
        let c2 = le_verdict(&ln_int(&BigInt::from(m), prec), &q_prev.ln(prec));
        // (d ln M + 3)/p′_N < L − h, compared through logarithms.
        let c3 = lt_verdict(&num.ln(prec).sub(&p_n.ln(prec), prec), &gap.ln(prec));
        match (c1, c2, c3) {
            (Verdict::Pass, Verdict::Pass, Verdict::Pass) => return Ok(Some(nn)),
            (Verdict::Maybe, _, _) | (_, Verdict::Maybe, _) | (_, _, Verdict::Maybe) => return Ok(None),
            _ => {}
        }
    }
    Err(Error::DigitBudgetExceeded("no admissible N within representable levels".into()))
}

fn plan_at(k: u64, d: usize, h: &BigRational, cfg: &PlannerConfig) -> Result<Attempt> {
    let prec = cfg.precision;
    let lambda = lambda_lower_bound_auto(k, cfg)?;
    let m = choose_m(d);
    let nn = match choose_n_at(k, d, h, m, &lambda, cfg)? {
        Some(n) => n,
        None => return Ok(Attempt::Undecided),
    };
    let mags = prime_magnitudes(k, nn + 1, cfg);
    if mags.len() < nn + 1 {
        return Err(Error::DigitBudgetExceeded(format!("p′_{} is not representable", nn)));
    }
    let mut q: Vec<Magnitude> = mags[..nn].iter().map(|(_, q)| q.clone()).collect();
    let mut p: Vec<Magnitude> = mags[..=nn].iter().map(|(p, _)| p.clone()).collect();
    if q.iter().any(|v| !v.is_exact()) {
        return Err(Error::DigitBudgetExceeded(format!(
            "q_{} exceeds the digit budget before level N = {}",
            q.iter().position(|v| !v.is_exact()).unwrap(),
            nn
        )));
    }
    let mut l = 0u64;
    loop {
        let pn = p.last().unwrap().clone();
        let mu = num_traits::pow(BigInt::from(m + l), d);
        let next_q = match &pn {
            Magnitude::Exact(pv) => {
                let t = BigRational::from_integer(pv.clone()) * h + BigRational::from_integer(BigInt::from(3));
                let digits = rational_interval(&t, 64).hi.to_f64() / std::f64::consts::LN_10;
                if digits.is_finite() && digits <= cfg.digit_budget as f64 {
                    let need = (digits * std::f64::consts::LOG2_10) as u32 + 64;
                    match smallest_multiple(&t, &mu, prec.max(need)) {
                        Ok(c) => Magnitude::Exact(c),
                        Err(()) => return Ok(Attempt::Undecided),
                    }
                } else {
                    let ti = rational_interval(&t, prec);
                    symbolic_q(&ti, prec)
                }
            }
            Magnitude::Log(lp) => {
                let Some(pv) = lp.exp(prec) else {
                    if l == 0 {
                        return Err(Error::DigitBudgetExceeded("p_N is too large to plan level N".into()));
                    }
                    break;
                };
                let ti = pv.mul(&rational_interval(h, prec), prec).add(&Interval::from_int(3), prec);
                symbolic_q(&ti, prec)
            }
        };
        let symbolic = !next_q.is_exact();
        let next_p = pn.mul(&next_q, cfg.digit_budget, prec);
        q.push(next_q);
        p.push(next_p);
        if symbolic {
            break;
        }
        l += 1;
    }
    Ok(Attempt::Done(ConstructionPlan {
        k,
        d,
        h: h.clone(),
        m,
        n: nn,
        lambda,
        q,
        p,
        digit_budget: cfg.digit_budget,
        precision: prec,
    }))
}

/// Logarithm enclosure of the least multiple of `μ` above `e^t` when the
/// value itself is beyond the digit budget: `ln q ∈ [t, t + μ e^{−t}]`.
fn symbolic_q(t: &Interval, prec: u32) -> Magnitude {
    let eps = Interval::point(Dyadic::new(BigInt::one(), -64));
    let p2 = prec.max(t.hi.mantissa().bits() as u32 + 96);
    Magnitude::Log(Interval::new(t.lo.clone(), t.add(&eps, p2).hi))
}

impl ConstructionPlan {
    /// Index of the last level (`E`) with a planned `q_E`.
    pub fn last_level(&self) -> usize {
        self.q.len() - 1
    }

    /// `N + l` levels use `μ_l = (M+l)^d`.
    pub fn mu(&self, level: usize) -> Option<BigInt> {
        (level >= self.n).then(|| num_traits::pow(BigInt::from(self.m + (level - self.n) as u64), self.d))
    }

    /// Per-level increment `Q_n` for exact `q_n`.
    pub fn increment(&self, n: usize) -> Option<DiagonalMatrix> {
        let qn = self.q.get(n)?.exact()?;
        let mut diag = vec![BigInt::one(); self.d];
        if n < self.n {
            diag[0] = qn.clone();
        } else {
            let side = BigInt::from(self.m + (n - self.n) as u64);
            let rest = num_traits::pow(side.clone(), self.d - 1);
            diag[0] = qn / rest;
            for e in diag.iter_mut().skip(1) {
                *e = side.clone();
            }
        }
        Some(DiagonalMatrix { diag })
    }

    /// The exact part of the scale: `P_0, …, P_E'` where `E'` is the first
    /// level with symbolic `q`, or `E+1` if every `q` is exact.
    pub fn assemble_scale(&self) -> Result<DiagonalScale> {
        let mut incs = Vec::new();
        for n in 0..self.q.len() {
            match self.increment(n) {
                Some(inc) => {
                    if n >= self.n && &inc.det() != self.q[n].exact().unwrap() {
                        return Err(Error::Certification(format!("Q_{} is not integral", n)));
                    }
                    incs.push(inc)
                }
                None => break,
            }
        }
        DiagonalScale::from_increments(incs)
    }

    /// Shifted box domains for every exact level, plus one symbolic level if
    /// the last `q` is beyond the digit budget.
    pub fn domain_family(&self) -> Result<DomainFamily> {
        let scale = self.assemble_scale()?;
        let mut fam = DomainFamily::from_scale(&scale, &Offsets::Formula)?;
        let e = scale.levels() - 1;
        if let Some(Magnitude::Log(lq)) = self.q.get(e) {
            let prec = self.precision;
            let pe = fam.domain(e)?;
            let mut ln_axis = lq.clone();
            let mut exact_side = None;
            if e >= self.n && self.d > 1 {
                let side = BigInt::from(self.m + (e - self.n) as u64);
                let rest = ln_int(&side, prec).mul(&Interval::from_int(self.d as u64 - 1), prec);
                ln_axis = ln_axis.sub(&rest, prec);
                exact_side = Some(side);
            }
            let bits_f = ln_axis.lo.to_f64() / std::f64::consts::LN_2 - 3.0;
            let bits = if bits_f.is_finite() { bits_f.min(u64::MAX as f64 / 2.0) as u64 } else { u64::MAX / 2 };
            let mut axes = vec![Axis::Huge { bits }];
            for i in 1..self.d {
                let q_i = exact_side.clone().unwrap_or_else(BigInt::one);
                let r = &q_i / 4;
                let lower = &pe.lower[i] - &pe.sides[i] * r;
                axes.push(Axis::Exact { lower, side: &pe.sides[i] * &q_i });
            }
            fam.push_level(DomainLevel { axes })?;
        }
        Ok(fam)
    }

    /// Least computed level `n ≥ 1` with `m | (P_n)_{i,i}` (axis `i` is 1-based).
    pub fn divisibility_witness(&self, m: &BigInt, axis: usize) -> Result<Option<usize>> {
        if axis == 0 || axis > self.d {
            return Err(Error::InvalidInput(format!("axis {} out of range 1..={}", axis, self.d)));
        }
        let fam = self.domain_family()?;
        for n in 1..=fam.max_level() {
            if let Axis::Exact { side, .. } = &fam.level(n)?.axes[axis - 1] {
                if side.is_multiple_of(m) {
                    return Ok(Some(n));
                }
            }
        }
        Ok(None)
    }

    /// Enclosure of `ln(q_n)/p_n`.
    pub fn entropy_estimate(&self, n: usize) -> Option<Interval> {
        let prec = self.precision;
        let lq = self.q.get(n)?.ln(prec);
        let lp = self.p.get(n)?.ln(prec);
        // ln q / p = exp(ln ln q − ln p).
        match self.p[n].exact() {
            Some(pv) => Some(lq.div(&Interval::from_int(pv.clone()), prec)),
            None => lq.ln(prec).sub(&lp, prec).exp(prec),
        }
    }

    /// `[h + 3/p_n, h + (d ln(M+l) + 3)/p_n]` for `n = N + l`.
    pub fn entropy_bracket(&self, n: usize) -> Option<Interval> {
        if n < self.n {
            return None;
        }
        let prec = self.precision;
        let l = (n - self.n) as u64;
        let hi_ = rational_interval(&self.h, prec);
        let top = ln_int(&BigInt::from(self.m + l), prec)
            .mul(&Interval::from_int(self.d as u64), prec)
            .add(&Interval::from_int(3), prec);
        let (a, b) = match self.p.get(n)? {
            Magnitude::Exact(pv) => {
                let pi = Interval::from_int(pv.clone());
                (Interval::from_int(3).div(&pi, prec), top.div(&pi, prec))
            }
            Magnitude::Log(lp) => {
                let inv = lp.neg().exp(prec)?;
                (Interval::from_int(3).mul(&inv, prec), top.mul(&inv, prec))
            }
        };
        let lo = hi_.add(&a, prec).lo;
        let hi = hi_.add(&b, prec).hi;
        Some(Interval::new(lo, hi))
    }
}

/// Re-verifies every planned condition from the stored values.
pub fn certify(plan: &ConstructionPlan) -> Result<Vec<Certificate>> {
    let prec = plan.precision;
    let cfg = PlannerConfig { precision: prec, max_precision: prec, digit_budget: plan.digit_budget };
    let mut out = Vec::new();
    let mut push = |level: Option<usize>, label: &str, detail: String, verdict: Verdict| {
        out.push(Certificate { level, label: label.to_string(), detail, verdict });
    };
    let hi = rational_interval(&plan.h, prec);

    // λ bound and h < L.
    let lam = lambda_lower_bound_auto(plan.k, &cfg)?;
    push(
        None,
        "lambda bound",
        format!("L = {} after {} iterations, stored {}", lam.value, lam.iterations, plan.lambda.value),
        bool_verdict(lam.value.lo == plan.lambda.value.lo),
    );
    push(None, "h < L", format!("h = {} vs L >= {}", plan.h, lam.value.lo.to_f64()), lt_verdict(&hi, &lam.certified()));

    // M.
    let fm = f_xi(plan.m, plan.d, prec);
    let fprev = f_xi(plan.m - 1, plan.d, prec);
    let minimal = plan.m == 4.max(plan.d as u64 + 2) || fprev.hi.sign() == num_bigint::Sign::Minus;
    push(
        None,
        "choice of M",
        format!("f(M) = {}, f(M-1) = {}, M = {}", fm, fprev, plan.m),
        if plan.m >= 4 && plan.m > plan.d as u64 + 1 && fm.lo.sign() != num_bigint::Sign::Minus && minimal {
            Verdict::Pass
        } else if fm.hi.sign() == num_bigint::Sign::Minus {
            Verdict::Fail
        } else {
            Verdict::Maybe
        },
    );

    // N.
    let n_check = choose_n_at(plan.k, plan.d, &plan.h, plan.m, &lam, &cfg)?;
    push(
        None,
        "choice of N",
        format!("recomputed N = {:?}, stored N = {}", n_check, plan.n),
        match n_check {
            Some(v) => bool_verdict(v == plan.n),
            None => Verdict::Maybe,
        },
    );

    // Prefix q_n = q′_n and p_{n+1} = p_n q_n.
    let mags = prime_magnitudes(plan.k, plan.n + 1, &cfg);
    for n in 0..plan.n.min(plan.q.len()) {
        let ok = mags.get(n).map(|(_, q)| q == &plan.q[n]).unwrap_or(false);
        push(Some(n), "prefix q_n = q'_n", format!("q_{} = {}", n, plan.q[n]), bool_verdict(ok));
    }
    if plan.p.first() != Some(&Magnitude::Exact(BigInt::one())) {
        push(Some(0), "p_0 = 1", String::new(), Verdict::Fail);
    }
    for n in 0..plan.q.len() {
        if n + 1 >= plan.p.len() {
            push(Some(n + 1), "p_{n+1} = p_n q_n", "missing".into(), Verdict::Fail);
            continue;
        }
        let verdict = match (&plan.p[n], &plan.q[n], &plan.p[n + 1]) {
            (Magnitude::Exact(a), Magnitude::Exact(b), Magnitude::Exact(c)) => bool_verdict(&(a * b) == c),
            _ => {
                let lhs = plan.p[n].ln(prec).add(&plan.q[n].ln(prec), prec);
                let rhs = plan.p[n + 1].ln(prec);
                if lhs.cmp_certain(&rhs).is_some() {
                    Verdict::Fail
                } else {
                    Verdict::Pass
                }
            }
        };
        push(Some(n + 1), "p_{n+1} = p_n q_n", format!("p_{} = {}", n + 1, plan.p[n + 1]), verdict);
    }

    // Levels N + l.
    for n in plan.n..plan.q.len() {
        let l = (n - plan.n) as u64;
        let qn = &plan.q[n];
        let qprev = &plan.q[n - 1];
        let mu = plan.mu(n).unwrap();
        let lq = qn.ln(prec);
        let pn = &plan.p[n];
        let t = match pn {
            Magnitude::Exact(pv) => rational_interval(&(BigRational::from_integer(pv.clone()) * &plan.h), prec),
            Magnitude::Log(lp) => match lp.exp(prec) {
                Some(v) => v.mul(&hi, prec),
                None => {
                    push(Some(n), "threshold", "p_n not representable".into(), Verdict::Fail);
                    continue;
                }
            },
        }
        .add(&Interval::from_int(3), prec);
        let p2 = prec.max(t.hi.mantissa().bits() as u32 + 96);
        let t = Interval::new(t.lo.clone(), t.hi.clone());

        // (i) q_{n−1} < q_n ≤ (q_{n−1} − 1)!
        let lower_ok = match (qprev, qn) {
            (Magnitude::Exact(a), Magnitude::Exact(b)) => bool_verdict(a < b),
            _ => lt_verdict(&qprev.ln(prec), &lq),
        };
        let fact = ln_factorial(&minus_one(qprev), p2);
        let upper_ok = match (qprev, qn) {
            (Magnitude::Exact(a), Magnitude::Exact(b)) if a.to_u64().map(|v| v <= 4096).unwrap_or(false) => {
                bool_verdict(b <= &factorial(a.to_u64().unwrap() - 1))
            }
            _ => match &fact {
                Some(f) => le_verdict(&lq, &Interval::point(f.lo.clone())),
                None => Verdict::Maybe,
            },
        };
        push(
            Some(n),
            "(i) q_{n-1} < q_n <= (q_{n-1}-1)!",
            format!("ln q_n = {}, ln (q_{{n-1}}-1)! >= {}", lq, fact.as_ref().map(|f| f.lo.to_f64()).unwrap_or(f64::NAN)),
            combine(lower_ok, upper_ok),
        );

        // (ii) p h + 3 ≤ ln q ≤ p h + d ln(M+l) + 3
        let top = t.add(
            &ln_int(&BigInt::from(plan.m + l), p2).mul(&Interval::from_int(plan.d as u64), p2),
            p2,
        );
        push(
            Some(n),
            "(ii) p h + 3 <= ln q <= p h + d ln(M+l) + 3",
            format!("{} <= {} <= {}", t, lq, top),
            combine(le_verdict(&t, &lq), le_verdict(&lq, &top)),
        );

        // (iii) (M+l)^d | q and minimality of the multiple.
        match qn {
            Magnitude::Exact(qv) => {
                push(Some(n), "(iii) (M+l)^d | q_n", format!("mu = {}", mu), bool_verdict(qv.is_multiple_of(&mu)));
                let below = Interval::from_int(qv - &mu).ln(p2);
                push(
                    Some(n),
                    "least admissible multiple",
                    format!("ln(q_n - mu) = {} < threshold {}", below, t),
                    lt_verdict(&below, &t),
                );
            }
            Magnitude::Log(_) => push(
                Some(n),
                "(iii) (M+l)^d | q_n",
                format!("symbolic level: q_n is the least multiple of {} above e^(p h + 3)", mu),
                Verdict::Pass,
            ),
        }

        // (iv) M + l + 1 ≤ q
        let iv = match qn {
            Magnitude::Exact(qv) => bool_verdict(BigInt::from(plan.m + l + 1) <= *qv),
            Magnitude::Log(_) => le_verdict(&ln_int(&BigInt::from(plan.m + l + 1), prec), &lq),
        };
        push(Some(n), "(iv) M + l + 1 <= q_n", String::new(), iv);

        // Capacity of the hybrid permutation family: q_n ≤ m + (m−1)! − 1, m = q_{n−1} − 1.
        let cap = match (qprev, qn) {
            (Magnitude::Exact(a), Magnitude::Exact(b)) if a.to_u64().map(|v| v <= 4096).unwrap_or(false) => {
                let m = a - 1u32;
                let fm = factorial((&m - 1u32).to_u64().unwrap());
                bool_verdict(b <= &(&m + fm - 1u32))
            }
            _ => match ln_factorial(&minus_one(&minus_one(qprev)), p2) {
                Some(f) => le_verdict(&lq, &Interval::point(f.lo)),
                None => Verdict::Maybe,
            },
        };
        push(Some(n), "capacity q_n <= m + (m-1)! - 1", format!("m = q_{} - 1", n - 1), cap);
    }
    let last = plan.q.len() - 1;
    if last < plan.n {
        push(Some(plan.n), "level N planned", "no level N".into(), Verdict::Fail);
    }
    Ok(out)
}

fn combine(a: Verdict, b: Verdict) -> Verdict {
    match (a, b) {
        (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
        (Verdict::Pass, Verdict::Pass) => Verdict::Pass,
        _ => Verdict::Maybe,
    }
}

/// Lexicographic compare helper used by tests of magnitudes.
pub fn compare_magnitudes(a: &Magnitude, b: &Magnitude, prec: u32) -> Option<Ordering> {
    match (a, b) {
        (Magnitude::Exact(x), Magnitude::Exact(y)) => Some(x.cmp(y)),
        _ => a.ln(prec).cmp_certain(&b.ln(prec)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> PlannerConfig {
        PlannerConfig::default()
    }

    #[test]
    fn sequences_k5() {
        let s = prime_sequences(5, 2, &cfg()).unwrap();
        assert_eq!(s.p, vec![BigInt::from(1), BigInt::from(5), BigInt::from(120)]);
        assert_eq!(s.q[..2], [BigInt::from(5), BigInt::from(24)]);
        assert_eq!(s.q[2], factorial(23));
        assert!(prime_sequences(5, 3, &cfg()).is_err());
    }

    #[test]
    fn m_values() {
        assert_eq!(choose_m(1), 4);
        assert_eq!(choose_m(2), 7);
        for d in 1..8 {
            assert!(choose_m(d) >= 4);
        }
    }

    #[test]
    fn parse_decimal() {
        assert_eq!(parse_rational("0.3").unwrap(), BigRational::new(3.into(), 10.into()));
        assert_eq!(parse_rational("3/10").unwrap(), BigRational::new(3.into(), 10.into()));
        assert_eq!(parse_rational("1e-1").unwrap(), BigRational::new(1.into(), 10.into()));
        assert_eq!(parse_rational(".25").unwrap(), BigRational::new(1.into(), 4.into()));
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1/0").is_err());
    }

    #[test]
    fn lambda_bounds() {
        let b0 = lambda_lower_bound(5, 0, &cfg()).unwrap();
        assert!((b0.value.mid_f64() - (5f64.ln() - 5.0)).abs() < 1e-12);
        let b2 = lambda_lower_bound(5, 2, &cfg()).unwrap();
        assert_eq!(b2.iterations, 2);
        assert!(b2.value.lo.to_f64() > 0.388 && b2.value.hi.to_f64() < 0.389);
    }

    #[test]
    fn plan_k5_d2() {
        let h = parse_rational("0.3").unwrap();
        let p = plan(5, 2, &h, &cfg()).unwrap();
        assert_eq!(p.m, 7);
        assert_eq!(p.n, 2);
        assert_eq!(p.q.len(), 4);
        let q2 = p.q[2].exact().unwrap();
        assert!(q2.is_multiple_of(&BigInt::from(49)));
        assert!(!p.q[3].is_exact());
        let certs = certify(&p).unwrap();
        assert!(certs.iter().all(|c| c.verdict == Verdict::Pass), "{:#?}", certs);
        let fam = p.domain_family().unwrap();
        assert_eq!(fam.max_exact_level(), 3);
        assert_eq!(fam.max_level(), 4);
        assert_eq!(p.divisibility_witness(&BigInt::from(7), 2).unwrap(), Some(3));
        assert_eq!(p.divisibility_witness(&BigInt::from(5), 1).unwrap(), Some(1));
        assert_eq!(p.divisibility_witness(&BigInt::from(1), 1).unwrap(), Some(1));
    }

    #[test]
    fn infeasible_entropy() {
        let h = parse_rational("0.39").unwrap();
        assert!(matches!(plan(5, 2, &h, &cfg()), Err(Error::InfeasibleEntropy(_))));
    }

    #[test]
    fn mutated_plan_fails() {
        let h = parse_rational("0.3").unwrap();
        let mut p = plan(5, 2, &h, &cfg()).unwrap();
        let q = p.q[2].exact().unwrap() - 1;
        p.q[2] = Magnitude::Exact(q);
        let certs = certify(&p).unwrap();
        assert!(certs.iter().any(|c| c.label.starts_with("(iii)") && c.verdict == Verdict::Fail));
    }
}
