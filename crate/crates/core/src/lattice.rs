//! Big-integer Z^d arithmetic, diagonal scales and nested box domains.
//!
//! Domains are never materialized: a [`FundamentalDomain`] is a lower corner
//! plus side lengths, and membership, coset projection and lexicographic
//! rank are all O(d) big-integer operations.
//!
//! A [`DomainFamily`] stores the per-level data `(P_n, D_n)` with `D_0 = {0}`
//! and `P_0 = I`. Levels whose first axis is astronomically large (beyond
//! the digit budget of a plan) are kept as [`Axis::Huge`]: such an axis is
//! known to contain every coordinate below a certified bit length, which is
//! all pointwise evaluation ever needs.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// A point of Z^d.
pub type LatticeVector = Vec<BigInt>;

/// A letter of the alphabet `Σ_k = {0, …, k−1}`.
pub type Letter = u32;

/// Builds a lattice vector from machine integers.
pub fn lv(coords: &[i64]) -> LatticeVector {
    coords.iter().map(|&c| BigInt::from(c)).collect()
}

pub fn zero_vec(d: usize) -> LatticeVector {
    vec![BigInt::zero(); d]
}

pub fn is_zero_vec(v: &[BigInt]) -> bool {
    v.iter().all(|c| c.is_zero())
}

pub fn add(a: &[BigInt], b: &[BigInt]) -> LatticeVector {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[BigInt], b: &[BigInt]) -> LatticeVector {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn neg(a: &[BigInt]) -> LatticeVector {
    a.iter().map(|x| -x).collect()
}

pub fn fmt_vec(v: &[BigInt]) -> String {
    let parts: Vec<String> = v.iter().map(|c| c.to_string()).collect();
    format!("({})", parts.join(","))
}

pub(crate) fn check_dim(expected: usize, v: &[BigInt]) -> Result<()> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got: v.len() })
    }
}

/// Positive diagonal integer matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiagonalMatrix {
    pub diag: Vec<BigInt>,
}

impl DiagonalMatrix {
    pub fn new(diag: Vec<BigInt>) -> Result<Self> {
        if diag.iter().any(|e| e < &BigInt::one()) {
            return Err(Error::InvalidInput("diagonal entries must be >= 1".into()));
        }
        Ok(DiagonalMatrix { diag })
    }

    pub fn from_u64(diag: &[u64]) -> Result<Self> {
        Self::new(diag.iter().map(|&v| BigInt::from(v)).collect())
    }

    pub fn identity(d: usize) -> Self {
        DiagonalMatrix { diag: vec![BigInt::one(); d] }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn mul(&self, o: &DiagonalMatrix) -> DiagonalMatrix {
        DiagonalMatrix { diag: self.diag.iter().zip(&o.diag).map(|(a, b)| a * b).collect() }
    }

    pub fn apply(&self, v: &[BigInt]) -> LatticeVector {
        self.diag.iter().zip(v).map(|(a, b)| a * b).collect()
    }

    pub fn det(&self) -> BigInt {
        self.diag.iter().product()
    }
}

/// The planned sequence of `(P_n, Q_n)` with `P_{n+1} = P_n Q_n`, starting at `P_0 = I`.
///
/// `p` may hold one more entry than `q`; `p[n]` is `P_n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiagonalScale {
    pub p: Vec<DiagonalMatrix>,
    pub q: Vec<DiagonalMatrix>,
}

impl DiagonalScale {
    /// Builds `P_0 = I, P_{n+1} = P_n Q_n` from the increments.
    pub fn from_increments(q: Vec<DiagonalMatrix>) -> Result<Self> {
        let d = q.first().map(|m| m.dim()).ok_or_else(|| Error::InvalidInput("empty scale".into()))?;
        let mut p = vec![DiagonalMatrix::identity(d)];
        for m in &q {
            if m.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, got: m.dim() });
            }
            let next = p.last().unwrap().mul(m);
            p.push(next);
        }
        Ok(DiagonalScale { p, q })
    }

    pub fn dim(&self) -> usize {
        self.p[0].dim()
    }

    pub fn levels(&self) -> usize {
        self.p.len()
    }

    /// Checks `P_{n+1} = P_n Q_n` entrywise.
    pub fn validate(&self) -> Result<()> {
        for (n, qn) in self.q.iter().enumerate() {
            if n + 1 < self.p.len() && self.p[n].mul(qn) != self.p[n + 1] {
                return Err(Error::InvalidInput(format!("P_{} != P_{} Q_{}", n + 1, n, n)));
            }
        }
        Ok(())
    }
}

/// Axis-aligned integer box `lower + [0, sides)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FundamentalDomain {
    pub level: usize,
    pub lower: LatticeVector,
    pub sides: Vec<BigInt>,
}

impl FundamentalDomain {
    pub fn new(level: usize, lower: LatticeVector, sides: Vec<BigInt>) -> Self {
        FundamentalDomain { level, lower, sides }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn card(&self) -> BigInt {
        self.sides.iter().product()
    }

    pub fn upper_exclusive(&self) -> LatticeVector {
        add(&self.lower, &self.sides)
    }

    pub fn contains(&self, g: &[BigInt]) -> bool {
        g.iter()
            .zip(self.lower.iter().zip(&self.sides))
            .all(|(c, (lo, s))| c >= lo && c < &(lo + s))
    }

    pub fn translate(&self, g: &[BigInt]) -> FundamentalDomain {
        FundamentalDomain { level: self.level, lower: add(&self.lower, g), sides: self.sides.clone() }
    }

    /// 0-based lexicographic rank (first axis most significant).
    pub fn rank(&self, g: &[BigInt]) -> Option<BigInt> {
        if !self.contains(g) {
            return None;
        }
        let mut r = BigInt::zero();
        for i in 0..self.dim() {
            r = r * &self.sides[i] + (&g[i] - &self.lower[i]);
        }
        Some(r)
    }

    pub fn unrank(&self, r: &BigInt) -> Option<LatticeVector> {
        if r.is_negative() || r >= &self.card() {
            return None;
        }
        let mut out = vec![BigInt::zero(); self.dim()];
        let mut rest = r.clone();
        for i in (0..self.dim()).rev() {
            let (q, m) = rest.div_mod_floor(&self.sides[i]);
            out[i] = &self.lower[i] + m;
            rest = q;
        }
        Some(out)
    }

    /// Cell count as `u128` if it fits under `budget`.
    pub fn card_within(&self, budget: u128) -> Result<u128> {
        let c = self.card();
        match c.to_u128() {
            Some(v) if v <= budget => Ok(v),
            _ => Err(Error::CellBudgetExceeded { needed: c.to_u128().unwrap_or(u128::MAX), budget }),
        }
    }

    /// Lexicographic iterator over all points.
    pub fn points(&self) -> BoxPoints {
        BoxPoints::new(self.lower.clone(), self.sides.clone())
    }
}

impl fmt::Display for FundamentalDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .lower
            .iter()
            .zip(&self.sides)
            .map(|(l, s)| format!("[{}, {}]", l, l + s - 1))
            .collect();
        write!(f, "D_{} = {}", self.level, parts.join(" x "))
    }
}

/// Lexicographic enumeration of the points of a box.
pub struct BoxPoints {
    lower: LatticeVector,
    sides: Vec<BigInt>,
    cur: Option<LatticeVector>,
}

impl BoxPoints {
    pub fn new(lower: LatticeVector, sides: Vec<BigInt>) -> Self {
        let cur = if sides.iter().all(|s| s.is_positive()) { Some(lower.clone()) } else { None };
        BoxPoints { lower, sides, cur }
    }
}

impl Iterator for BoxPoints {
    type Item = LatticeVector;

    fn next(&mut self) -> Option<LatticeVector> {
        let out = self.cur.clone()?;
        let mut next = out.clone();
        let mut i = next.len();
        loop {
            if i == 0 {
                self.cur = None;
                break;
            }
            i -= 1;
            next[i] += 1;
            if next[i] < &self.lower[i] + &self.sides[i] {
                self.cur = Some(next);
                break;
            }
            next[i] = self.lower[i].clone();
        }
        Some(out)
    }
}

/// One axis of a level: either an exact box side, or a side so large that
/// it contains every coordinate of fewer than `bits` bits (on both sides of 0).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Axis {
    Exact { lower: BigInt, side: BigInt },
    Huge { bits: u64 },
}

/// Domain data of one level: `D_n` and the diagonal of `P_n` (the box sides).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DomainLevel {
    pub axes: Vec<Axis>,
}

impl DomainLevel {
    pub fn is_exact(&self) -> bool {
        self.axes.iter().all(|a| matches!(a, Axis::Exact { .. }))
    }
}

/// How domain lower corners are chosen.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Offsets {
    /// `s_1 = 0`, `s_{n+1} = P_n r_n + s_n` with `r_n = ⌊Q_n/4⌋` per axis
    /// (zero when some entry of `Q_n` is below 4).
    Formula,
    /// Explicit lower corners of `D_1, D_2, …`.
    Explicit(Vec<LatticeVector>),
    /// All domains are the unshifted cuboids `[0, P_n)`.
    Unshifted,
}

/// Shift vector `r_n = ⌊Q_n/4⌋` per axis; levels with an increment entry
/// below 4 are left unshifted (`r_n = 0`).
pub fn shift_vector(q: &DiagonalMatrix) -> LatticeVector {
    if q.diag.iter().any(|e| e < &BigInt::from(4)) {
        return zero_vec(q.dim());
    }
    q.diag.iter().map(|e| e / 4).collect()
}

/// The nested fundamental domains `D_0, …, D_{n_max}` of a scale.
pub fn shifted_domains(scale: &DiagonalScale, n_max: usize, offsets: &Offsets) -> Result<Vec<FundamentalDomain>> {
    let d = scale.dim();
    if n_max >= scale.levels() {
        return Err(Error::DepthBudgetExceeded(format!("scale has {} levels, requested {}", scale.levels(), n_max)));
    }
    let mut out = vec![FundamentalDomain::new(0, zero_vec(d), vec![BigInt::one(); d])];
    let mut s = zero_vec(d);
    for n in 1..=n_max {
        let lower = match offsets {
            Offsets::Formula => {
                if n >= 2 {
                    let r = shift_vector(&scale.q[n - 1]);
                    s = add(&scale.p[n - 1].apply(&r), &s);
                }
                neg(&s)
            }
            Offsets::Unshifted => zero_vec(d),
            Offsets::Explicit(list) => {
                let l = list
                    .get(n - 1)
                    .ok_or_else(|| Error::InvalidInput(format!("no explicit offset for level {}", n)))?;
                check_dim(d, l)?;
                l.clone()
            }
        };
        out.push(FundamentalDomain::new(n, lower, scale.p[n].diag.clone()));
    }
    for n in 1..out.len() {
        check_nested_pair(&out[n - 1], &out[n], &scale.p[n - 1].diag)?;
    }
    Ok(out)
}

/// Checks that `inner ⊆ outer`, that `0 ∈ outer`, and that `outer` is tiled by
/// `P_{n}`-translates of `inner`.
fn check_nested_pair(inner: &FundamentalDomain, outer: &FundamentalDomain, p_inner: &[BigInt]) -> Result<()> {
    let z = zero_vec(outer.dim());
    if !outer.contains(&z) {
        return Err(Error::InvalidInput(format!("{} does not contain the origin", outer)));
    }
    for i in 0..outer.dim() {
        let (il, ol) = (&inner.lower[i], &outer.lower[i]);
        let iu = il + &inner.sides[i];
        let ou = ol + &outer.sides[i];
        if il < ol || iu > ou {
            return Err(Error::InvalidInput(format!("{} is not contained in {}", inner, outer)));
        }
        if !(il - ol).is_multiple_of(&p_inner[i]) || !outer.sides[i].is_multiple_of(&p_inner[i]) {
            return Err(Error::InvalidInput(format!("{} is not tiled by translates of {}", outer, inner)));
        }
    }
    Ok(())
}

/// Nested domain family `D_0 = {0} ⊆ D_1 ⊆ …` with their scales.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DomainFamily {
    d: usize,
    levels: Vec<DomainLevel>,
}

impl DomainFamily {
    /// Family from exact domains (`domains[0]` must be `{0}`).
    pub fn from_domains(domains: &[FundamentalDomain]) -> Result<Self> {
        let d = domains.first().ok_or_else(|| Error::InvalidInput("no domains".into()))?.dim();
        let levels = domains
            .iter()
            .map(|dom| DomainLevel {
                axes: dom
                    .lower
                    .iter()
                    .zip(&dom.sides)
                    .map(|(l, s)| Axis::Exact { lower: l.clone(), side: s.clone() })
                    .collect(),
            })
            .collect();
        let fam = DomainFamily { d, levels };
        fam.validate()?;
        Ok(fam)
    }

    /// Family from a scale, with domains chosen by `offsets`.
    pub fn from_scale(scale: &DiagonalScale, offsets: &Offsets) -> Result<Self> {
        scale.validate()?;
        let doms = shifted_domains(scale, scale.levels() - 1, offsets)?;
        Self::from_domains(&doms)
    }

    /// Appends a level whose axes may be huge. Exact axes must nest with the
    /// previous level.
    pub fn push_level(&mut self, level: DomainLevel) -> Result<()> {
        check_dim(self.d, &vec![BigInt::zero(); level.axes.len()])?;
        self.levels.push(level);
        self.validate()
    }

    fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::InvalidInput("no levels".into()));
        }
        let base = &self.levels[0];
        for a in &base.axes {
            match a {
                Axis::Exact { lower, side } if lower.is_zero() && side.is_one() => {}
                _ => return Err(Error::InvalidInput("D_0 must be {0}".into())),
            }
        }
        for n in 1..self.levels.len() {
            for i in 0..self.d {
                match (&self.levels[n - 1].axes[i], &self.levels[n].axes[i]) {
                    (Axis::Exact { lower: il, side: is }, Axis::Exact { lower: ol, side: os }) => {
                        let iu = il + is;
                        let ou = ol + os;
                        if il < ol || iu > ou || ol.is_positive() || !ou.is_positive() {
                            return Err(Error::InvalidInput(format!("level {} axis {} does not nest", n, i + 1)));
                        }
                        if !(il - ol).is_multiple_of(is) || !os.is_multiple_of(is) {
                            return Err(Error::InvalidInput(format!("level {} axis {} is not tiled", n, i + 1)));
                        }
                    }
                    (Axis::Huge { .. }, Axis::Exact { .. }) => {
                        return Err(Error::InvalidInput("exact axis above a huge axis".into()));
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Highest level index present.
    pub fn max_level(&self) -> usize {
        self.levels.len() - 1
    }

    /// Highest level whose domain is fully exact.
    pub fn max_exact_level(&self) -> usize {
        self.levels.iter().rposition(|l| l.is_exact()).unwrap_or(0)
    }

    pub fn level(&self, n: usize) -> Result<&DomainLevel> {
        self.levels
            .get(n)
            .ok_or_else(|| Error::DepthBudgetExceeded(format!("level {} beyond the computed depth {}", n, self.max_level())))
    }

    pub fn is_exact(&self, n: usize) -> bool {
        self.levels.get(n).map(|l| l.is_exact()).unwrap_or(false)
    }

    /// The exact box `D_n`.
    pub fn domain(&self, n: usize) -> Result<FundamentalDomain> {
        let lvl = self.level(n)?;
        let mut lower = Vec::with_capacity(self.d);
        let mut sides = Vec::with_capacity(self.d);
        for a in &lvl.axes {
            match a {
                Axis::Exact { lower: l, side } => {
                    lower.push(l.clone());
                    sides.push(side.clone());
                }
                Axis::Huge { .. } => {
                    return Err(Error::DigitBudgetExceeded(format!("D_{} is symbolic beyond the digit budget", n)));
                }
            }
        }
        Ok(FundamentalDomain::new(n, lower, sides))
    }

    /// Diagonal of `P_n`.
    pub fn p(&self, n: usize) -> Result<DiagonalMatrix> {
        Ok(DiagonalMatrix { diag: self.domain(n)?.sides })
    }

    fn huge_ok(c: &BigInt, bits: u64, n: usize) -> Result<()> {
        if c.bits() < bits {
            Ok(())
        } else {
            Err(Error::DepthBudgetExceeded(format!(
                "coordinate {} exceeds the certified range of symbolic level {}",
                c, n
            )))
        }
    }

    /// Whether `g ∈ D_n`.
    pub fn contains(&self, n: usize, g: &[BigInt]) -> Result<bool> {
        check_dim(self.d, g)?;
        let lvl = self.level(n)?;
        for (c, a) in g.iter().zip(&lvl.axes) {
            match a {
                Axis::Exact { lower, side } => {
                    if c < lower || c >= &(lower + side) {
                        return Ok(false);
                    }
                }
                Axis::Huge { bits } => Self::huge_ok(c, *bits, n)?,
            }
        }
        Ok(true)
    }

    /// `ψ_n(g)`: the unique `d ∈ D_n` with `g − d ∈ Γ_n`.
    pub fn coset_project(&self, g: &[BigInt], n: usize) -> Result<LatticeVector> {
        check_dim(self.d, g)?;
        let lvl = self.level(n)?;
        let mut out = Vec::with_capacity(self.d);
        for (c, a) in g.iter().zip(&lvl.axes) {
            match a {
                Axis::Exact { lower, side } => out.push(lower + (c - lower).mod_floor(side)),
                Axis::Huge { bits } => {
                    Self::huge_ok(c, *bits, n)?;
                    out.push(c.clone());
                }
            }
        }
        Ok(out)
    }

    /// Whether `g ∈ Γ_n = P_n Z^d`.
    pub fn in_gamma(&self, n: usize, g: &[BigInt]) -> Result<bool> {
        check_dim(self.d, g)?;
        let lvl = self.level(n)?;
        for (c, a) in g.iter().zip(&lvl.axes) {
            match a {
                Axis::Exact { side, .. } => {
                    if !c.is_multiple_of(side) {
                        return Ok(false);
                    }
                }
                Axis::Huge { bits } => {
                    Self::huge_ok(c, *bits, n)?;
                    if !c.is_zero() {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }

    /// `D_n ∩ Γ_t` for `t ≤ n`, both exact, as a grid of multipliers.
    pub fn grid(&self, n: usize, t: usize) -> Result<GammaGrid> {
        if t > n {
            return Err(Error::InvalidInput(format!("grid level {} above domain level {}", t, n)));
        }
        let dn = self.domain(n)?;
        let pt = self.p(t)?;
        let ulow: Vec<BigInt> = dn.lower.iter().zip(&pt.diag).map(|(l, p)| ceil_div(l, p)).collect();
        let counts: Vec<BigInt> = dn.sides.iter().zip(&pt.diag).map(|(s, p)| s / p).collect();
        Ok(GammaGrid { step: pt.diag, ulow, counts })
    }

    /// Translation-invariance witness for tests: `ψ_n(g + P_n z) = ψ_n(g)`.
    pub fn apply_p(&self, n: usize, z: &[BigInt]) -> Result<LatticeVector> {
        Ok(self.p(n)?.apply(z))
    }
}

fn ceil_div(a: &BigInt, b: &BigInt) -> BigInt {
    -((-a).div_floor(b))
}

/// The points `P_t u` with `u` in the box `ulow + [0, counts)`, enumerated
/// lexicographically; used for `D_n ∩ Γ_t` and interior sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GammaGrid {
    pub step: Vec<BigInt>,
    pub ulow: Vec<BigInt>,
    pub counts: Vec<BigInt>,
}

impl GammaGrid {
    pub fn card(&self) -> BigInt {
        if self.counts.iter().any(|c| !c.is_positive()) {
            return BigInt::zero();
        }
        self.counts.iter().product()
    }

    fn ubox(&self) -> FundamentalDomain {
        FundamentalDomain::new(0, self.ulow.clone(), self.counts.clone())
    }

    /// 0-based lexicographic rank of a grid point.
    pub fn rank(&self, g: &[BigInt]) -> Option<BigInt> {
        let mut u = Vec::with_capacity(g.len());
        for (c, s) in g.iter().zip(&self.step) {
            let (q, r) = c.div_mod_floor(s);
            if !r.is_zero() {
                return None;
            }
            u.push(q);
        }
        self.ubox().rank(&u)
    }

    pub fn unrank(&self, r: &BigInt) -> Option<LatticeVector> {
        let u = self.ubox().unrank(r)?;
        Some(u.iter().zip(&self.step).map(|(a, b)| a * b).collect())
    }

    pub fn contains(&self, g: &[BigInt]) -> bool {
        self.rank(g).is_some()
    }

    pub fn points(&self) -> impl Iterator<Item = LatticeVector> + '_ {
        let counts = if self.counts.iter().any(|c| !c.is_positive()) {
            vec![BigInt::zero(); self.counts.len()]
        } else {
            self.counts.clone()
        };
        BoxPoints::new(self.ulow.clone(), counts).map(move |u| u.iter().zip(&self.step).map(|(a, b)| a * b).collect())
    }
}

/// `∂_K(F) = {g : −K+g meets both F and its complement}`, enumerated
/// lexicographically over the bounding box of `F + K`.
pub fn k_boundary(k: &[LatticeVector], f: &FundamentalDomain) -> Vec<LatticeVector> {
    let d = f.dim();
    if k.is_empty() {
        return Vec::new();
    }
    let mut lower = f.lower.clone();
    let mut upper = f.upper_exclusive();
    for i in 0..d {
        let kmin = k.iter().map(|v| &v[i]).min().unwrap();
        let kmax = k.iter().map(|v| &v[i]).max().unwrap();
        lower[i] += kmin;
        upper[i] += kmax;
    }
    let sides = sub(&upper, &lower);
    BoxPoints::new(lower, sides)
        .filter(|g| {
            let mut inside = false;
            let mut outside = false;
            for kv in k {
                if f.contains(&sub(g, kv)) {
                    inside = true;
                } else {
                    outside = true;
                }
            }
            inside && outside
        })
        .collect()
}

/// Result of [`interior_rest`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InteriorRest {
    /// `I_{t,n}(g)` as a grid of `Γ_t` points.
    pub interior: GammaGrid,
    /// `#R_{t,n}(g) = #D_n − #D_t · #I_{t,n}(g)`.
    pub rest: BigInt,
}

/// `I_{t,n}(g) = {γ ∈ Γ_t : D_t + γ ⊆ D_n + g}` and the size of the rest.
pub fn interior_rest(fam: &DomainFamily, t: usize, n: usize, g: &[BigInt]) -> Result<InteriorRest> {
    if t > n {
        return Err(Error::InvalidInput(format!("interior_rest needs t <= n, got t={} n={}", t, n)));
    }
    check_dim(fam.dim(), g)?;
    let dt = fam.domain(t)?;
    let dn = fam.domain(n)?;
    let mut ulow = Vec::with_capacity(g.len());
    let mut counts = Vec::with_capacity(g.len());
    for i in 0..g.len() {
        let p = &dt.sides[i];
        let lo = &dn.lower[i] + &g[i] - &dt.lower[i];
        let hi = &dn.lower[i] + &g[i] + &dn.sides[i] - &dt.lower[i] - p;
        let a = ceil_div(&lo, p);
        let b = hi.div_floor(p);
        let c: BigInt = (&b - &a + 1u32).max(BigInt::zero());
        ulow.push(a);
        counts.push(c);
    }
    let interior = GammaGrid { step: dt.sides.clone(), ulow, counts };
    let rest = dn.card() - dt.card() * interior.card();
    Ok(InteriorRest { interior, rest })
}
