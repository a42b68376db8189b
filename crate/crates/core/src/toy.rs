//! Small explicit constructions and brute-force oracles.
//!
//! The oracle rebuilds everything from the definitions: `ψ_n` by scanning
//! box axes, the blocks `C_n^{(j)}` as dense grids, and the hole-filling
//! sequence `y_0, y_1, …` whose limit is the Toeplitz array. None of it goes
//! through the production evaluators.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::blocks::{Construction, Patch};
use crate::error::{Error, Result};
use crate::lattice::{
    add, is_zero_vec, sub, DiagonalMatrix, DiagonalScale, DomainFamily, FundamentalDomain, LatticeVector, Letter, Offsets,
};
use crate::toeplitz::ArrayHandle;

/// Depth budget used for toy handles.
pub const TOY_DEPTH_BUDGET: usize = 64;

/// An explicit construction: increments `Q_0, Q_1, …` and one permutation
/// table per level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ToyPlan {
    pub name: String,
    pub k: u64,
    pub increments: Vec<Vec<u64>>,
    pub offsets: Offsets,
    /// `tables[n−1][j−1][r−1] = σ_j(γ^{(r)})` for `S_n`.
    pub tables: Vec<Vec<Vec<u64>>>,
}

impl ToyPlan {
    pub fn dim(&self) -> usize {
        self.increments.first().map_or(0, |q| q.len())
    }

    pub fn levels(&self) -> usize {
        self.increments.len()
    }

    pub fn domain_family(&self) -> Result<DomainFamily> {
        let q = self.increments.iter().map(|d| DiagonalMatrix::from_u64(d)).collect::<Result<Vec<_>>>()?;
        DomainFamily::from_scale(&DiagonalScale::from_increments(q)?, &self.offsets)
    }

    /// Construction with all structural checks.
    pub fn construction(&self) -> Result<Construction> {
        Construction::explicit(self.k, self.domain_family()?, self.tables.clone(), TOY_DEPTH_BUDGET)
    }

    /// Construction without bijectivity, distinctness or coverage checks.
    pub fn construction_unchecked(&self) -> Result<Construction> {
        Construction::explicit_unchecked(self.k, self.domain_family()?, self.tables.clone(), TOY_DEPTH_BUDGET)
    }

    pub fn handle(&self) -> Result<ArrayHandle> {
        Ok(ArrayHandle::new(self.construction()?))
    }

    /// Text form accepted by [`parse_toy_plan`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "name {}", self.name);
        let _ = writeln!(s, "k {}", self.k);
        match &self.offsets {
            Offsets::Formula => s.push_str("offsets formula\n"),
            Offsets::Unshifted => s.push_str("offsets unshifted\n"),
            Offsets::Explicit(v) => {
                s.push_str("offsets explicit\n");
                for l in v {
                    let _ = writeln!(s, "lower {}", join(l));
                }
            }
        }
        for (q, t) in self.increments.iter().zip(&self.tables) {
            let _ = writeln!(s, "level {}", join(q));
            for row in t {
                let _ = writeln!(s, "row {}", join(row));
            }
        }
        s
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

/// Parses the line format written by [`ToyPlan::to_text`]. `#` starts a
/// comment.
pub fn parse_toy_plan(text: &str) -> Result<ToyPlan> {
    let mut name = String::from("toy");
    let mut k = None;
    let mut offsets = Offsets::Formula;
    let mut lowers: Vec<LatticeVector> = Vec::new();
    let mut increments: Vec<Vec<u64>> = Vec::new();
    let mut tables: Vec<Vec<Vec<u64>>> = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |what: &str| Error::Format(format!("line {}: {}", no + 1, what));
        let mut it = line.split_whitespace();
        let key = it.next().unwrap();
        let rest: Vec<&str> = it.collect();
        let nums = || rest.iter().map(|t| t.parse::<u64>().map_err(|_| bad("expected non-negative integers"))).collect::<Result<Vec<_>>>();
        match key {
            "name" => name = rest.join(" "),
            "k" => {
                let v = nums()?;
                if v.len() != 1 {
                    return Err(bad("k takes one value"));
                }
                k = Some(v[0]);
            }
            "offsets" => {
                offsets = match rest.first().copied() {
                    Some("formula") => Offsets::Formula,
                    Some("unshifted") => Offsets::Unshifted,
                    Some("explicit") => Offsets::Explicit(Vec::new()),
                    _ => return Err(bad("offsets must be formula, unshifted or explicit")),
                }
            }
            "lower" => {
                let v = rest
                    .iter()
                    .map(|t| t.parse::<BigInt>().map_err(|_| bad("expected integers")))
                    .collect::<Result<Vec<_>>>()?;
                lowers.push(v);
            }
            "level" => {
                increments.push(nums()?);
                tables.push(Vec::new());
            }
            "row" => tables.last_mut().ok_or_else(|| bad("row before any level"))?.push(nums()?),
            _ => return Err(bad(&format!("unknown key {}", key))),
        }
    }
    if let Offsets::Explicit(_) = offsets {
        offsets = Offsets::Explicit(lowers);
    }
    let k = k.ok_or_else(|| Error::Format("missing k".into()))?;
    if increments.is_empty() {
        return Err(Error::Format("no levels".into()));
    }
    Ok(ToyPlan { name, k, increments, offsets, tables })
}

/// `σ_1` = identity order, then the `m` rows `r ↦ 2 + ((c − (r−1)) mod m)`.
/// Every `(rank, target)` pair is covered by some `σ_j`, `j ≥ 2`. Needs `m ≥ 3`.
pub fn anti_cyclic_family(m: u64) -> Vec<Vec<u64>> {
    let mut rows = vec![(2..m + 2).collect::<Vec<_>>()];
    for c in 0..m {
        rows.push((1..=m).map(|r| 2 + (c + m - (r - 1) % m) % m).collect());
    }
    rows
}

/// All `m!` bijections onto `{2, …, m+1}` in lexicographic order.
pub fn full_family(m: u64) -> Vec<Vec<u64>> {
    let mut cur: Vec<u64> = (2..m + 2).collect();
    let mut out = vec![cur.clone()];
    loop {
        let Some(i) = (1..cur.len()).rev().find(|&i| cur[i - 1] < cur[i]) else { return out };
        let j = (i..cur.len()).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
}

/// `d = 1`, `Q_n = 4`, four letters, four levels.
pub fn toy_line() -> ToyPlan {
    ToyPlan {
        name: "line-4".into(),
        k: 4,
        increments: vec![vec![4]; 4],
        offsets: Offsets::Formula,
        tables: vec![anti_cyclic_family(3); 4],
    }
}

/// `d = 2`, `Q_n = diag(2, 2)`, four letters, four levels.
pub fn toy_square() -> ToyPlan {
    ToyPlan {
        name: "square-2x2".into(),
        k: 4,
        increments: vec![vec![2, 2]; 4],
        offsets: Offsets::Formula,
        tables: vec![anti_cyclic_family(3); 4],
    }
}

/// `d = 1`, `Q = 4, 6, 6, 6`: the full family on level 1, anti-cyclic above.
pub fn toy_mixed() -> ToyPlan {
    ToyPlan {
        name: "line-mixed".into(),
        k: 4,
        increments: vec![vec![4], vec![6], vec![6], vec![6]],
        offsets: Offsets::Formula,
        tables: vec![full_family(3), anti_cyclic_family(5), anti_cyclic_family(5), anti_cyclic_family(5)],
    }
}

/// The three reference toy plans.
pub fn standard_toys() -> Vec<ToyPlan> {
    vec![toy_line(), toy_square(), toy_mixed()]
}

/// [`toy_line`] with `σ_2 ∈ S_2` made non-injective, so that the level-1
/// blocks occur with unequal frequencies in the level-2 blocks.
pub fn toy_corrupted() -> ToyPlan {
    let mut p = toy_line();
    p.name = "line-4-corrupted".into();
    p.tables[1][1] = vec![2, 4, 4];
    p
}

/// Brute-force materialization of a toy construction.
#[derive(Clone, Debug)]
pub struct Oracle {
    pub k: u64,
    pub domains: Vec<FundamentalDomain>,
    pub periods: Vec<Vec<BigInt>>,
    /// `blocks[n][j−1]`: `C_n^{(j)}` over `D_n` in box order.
    pub blocks: Vec<Vec<Vec<Letter>>>,
}

impl Oracle {
    pub fn build(plan: &ToyPlan) -> Result<Self> {
        let fam = plan.domain_family()?;
        let levels = plan.levels();
        let mut domains = Vec::new();
        let mut periods = Vec::new();
        for n in 0..=levels {
            domains.push(fam.domain(n)?);
            periods.push(fam.p(n)?.diag);
        }
        let mut o = Oracle { k: plan.k, domains, periods, blocks: vec![(0..plan.k).map(|a| vec![a as Letter]).collect()] };
        for n in 1..=levels {
            let nonzero: Vec<LatticeVector> = o.domains[n]
                .points()
                .filter(|g| o.divisible(g, n - 1) && !is_zero_vec(g))
                .collect();
            let mut level = Vec::new();
            for row in &plan.tables[n - 1] {
                if row.len() != nonzero.len() {
                    return Err(Error::InvalidInput(format!("row of length {} at level {}", row.len(), n)));
                }
                let mut cells = Vec::new();
                for g in o.domains[n].points() {
                    let d = o.psi(&g, n - 1)?;
                    let gamma = sub(&g, &d);
                    let j = match nonzero.iter().position(|v| v == &gamma) {
                        None => 1,
                        Some(r) => row[r] as usize,
                    };
                    let pos = o.domains[n - 1].rank(&d).unwrap().to_usize().unwrap();
                    let blk = o.blocks[n - 1]
                        .get(j - 1)
                        .ok_or_else(|| Error::InvalidInput(format!("index {} out of range at level {}", j, n)))?;
                    cells.push(blk[pos]);
                }
                level.push(cells);
            }
            o.blocks.push(level);
        }
        Ok(o)
    }

    pub fn levels(&self) -> usize {
        self.domains.len() - 1
    }

    fn divisible(&self, g: &[BigInt], n: usize) -> bool {
        g.iter().zip(&self.periods[n]).all(|(c, p)| c.is_multiple_of(p))
    }

    /// The representative of `g + Γ_n` in `D_n`, found by scanning each axis.
    /// Beyond the last level, points of the last domain are their own
    /// representatives.
    pub fn psi(&self, g: &[BigInt], n: usize) -> Result<LatticeVector> {
        if n > self.levels() {
            let top = &self.domains[self.levels()];
            return if top.contains(g) {
                Ok(g.to_vec())
            } else {
                Err(Error::DepthBudgetExceeded("point outside the oracle's last domain".into()))
            };
        }
        let dom = &self.domains[n];
        let mut out = Vec::with_capacity(g.len());
        for i in 0..g.len() {
            let mut c = dom.lower[i].clone();
            let end = &dom.lower[i] + &dom.sides[i];
            while c < end && !(&g[i] - &c).is_multiple_of(&self.periods[n][i]) {
                c += 1;
            }
            out.push(c);
        }
        Ok(out)
    }

    pub fn theta(&self, g: &[BigInt], n: usize) -> Result<LatticeVector> {
        Ok(sub(&self.psi(g, n)?, &self.psi(g, n - 1)?))
    }

    pub fn block_patch(&self, n: usize, j: usize) -> Patch {
        let dom = &self.domains[n];
        Patch {
            origin: dom.lower.clone(),
            sides: dom.sides.iter().map(|s| s.to_u64().unwrap()).collect(),
            letters: self.blocks[n][j - 1].clone(),
        }
    }

    /// `y_n(g)`; `None` is the hole.
    pub fn y(&self, n: usize, g: &[BigInt]) -> Result<Option<Letter>> {
        if n == 0 {
            return Ok(None);
        }
        let prefix = self.psi(g, n - 1)?;
        if is_zero_vec(&self.theta(g, n)?) {
            let pos = self.domains[n - 1].rank(&prefix).unwrap().to_usize().unwrap();
            Ok(Some(self.blocks[n - 1][0][pos]))
        } else {
            self.y(n - 1, &prefix)
        }
    }

    /// `y_0, …, y_{L+1}` on the last domain `D_L`. Fails if a filled cell
    /// changes later or a hole survives.
    pub fn limit(&self) -> Result<Patch> {
        let top = self.domains[self.levels()].clone();
        let mut letters = Vec::new();
        for g in top.points() {
            let mut seen: Option<Letter> = None;
            for n in 0..=self.levels() + 1 {
                let v = self.y(n, &g)?;
                match (seen, v) {
                    (Some(a), Some(b)) if a != b => {
                        return Err(Error::Verification(format!("y_{} changes a filled cell", n)));
                    }
                    (Some(_), None) => return Err(Error::Verification(format!("y_{} reopens a hole", n))),
                    (None, Some(b)) => seen = Some(b),
                    _ => {}
                }
            }
            letters.push(seen.ok_or_else(|| Error::Verification("hole survives the last level".into()))?);
        }
        Ok(Patch { origin: top.lower.clone(), sides: top.sides.iter().map(|s| s.to_u64().unwrap()).collect(), letters })
    }

    /// Occurrences of `C_t^{(i)}` at `γ ∈ D_n ∩ Γ_t` inside `C_n^{(j)}`,
    /// over `#(D_n ∩ Γ_t)`.
    pub fn ap(&self, t: usize, i: usize, n: usize, j: usize) -> BigRational {
        let outer = &self.domains[n];
        let inner = &self.domains[t];
        let c = &self.blocks[n][j - 1];
        let b = &self.blocks[t][i - 1];
        let mut total = 0u64;
        let mut hits = 0u64;
        for gamma in outer.points().filter(|g| self.divisible(g, t)) {
            total += 1;
            let ok = inner.points().zip(b).all(|(d, &a)| {
                let p = add(&d, &gamma);
                outer.rank(&p).map(|r| c[r.to_usize().unwrap()] == a).unwrap_or(false)
            });
            hits += ok as u64;
        }
        BigRational::new(BigInt::from(hits), BigInt::from(total))
    }
}

/// Outcome of [`per_comparison`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PerReport {
    pub checked: usize,
    /// In the formula set but not periodic on the sampled translates.
    pub formula_only: Vec<LatticeVector>,
    /// Outside the formula set without a verified witness.
    pub unwitnessed: Vec<LatticeVector>,
    /// Exclusions certified by a witness `γ ∈ Γ_n` with `x(g+γ) ≠ x(g)`.
    pub witnessed: usize,
    /// Witnessed exclusions whose witness lies outside the limit box.
    pub beyond_box: usize,
}

impl PerReport {
    pub fn passed(&self) -> bool {
        self.formula_only.is_empty() && self.unwitnessed.is_empty() && self.witnessed > 0
    }
}

/// Compares `Per(x, Γ_n)` from the θ formula with the brute-force set
/// `{g : x(g+γ) = x(g) for all γ ∈ Γ_n with g+γ in the limit box}` on the
/// window `D_n − P_n + [0, 3P_n)` clipped to the box. Every exclusion by the
/// formula must be certified by `aperiodicity_witness`.
pub fn per_comparison(handle: &ArrayHandle, oracle: &Oracle, limit: &Patch, n: usize) -> Result<PerReport> {
    let box_ = limit.domain();
    let dn = &oracle.domains[n];
    let p = &oracle.periods[n];
    let mut report = PerReport::default();
    let lower: LatticeVector = dn.lower.iter().zip(p).map(|(l, q)| l - q).collect();
    let window = FundamentalDomain::new(n, lower, p.iter().map(|q| q * 3).collect());
    for g in window.points().filter(|g| box_.contains(g)) {
        report.checked += 1;
        let a = limit.get(&g).unwrap();
        let periodic = box_.points().filter(|h| oracle.divisible(&sub(h, &g), n)).all(|h| limit.get(&h) == Some(a));
        if handle.per_membership(&g, n)? {
            if !periodic {
                report.formula_only.push(g);
            }
            continue;
        }
        let alpha = if a == 1 { 2 } else { 1 };
        let gamma = handle.aperiodicity_witness(&g, n, alpha)?;
        let target = add(&g, &gamma);
        let value = match limit.get(&target) {
            Some(v) => v,
            None => handle.x_eval(&target)?,
        };
        if oracle.divisible(&gamma, n) && value == alpha {
            report.witnessed += 1;
            if periodic {
                report.beyond_box += 1;
            }
        } else {
            report.unwitnessed.push(g);
        }
    }
    Ok(report)
}

/// Rank-to-target pairs of each level's table that no member `σ_j`,
/// `j ≥ 2`, realizes.
pub fn uncovered_pairs(plan: &ToyPlan) -> Vec<(usize, usize, u64)> {
    let mut out = Vec::new();
    for (n, t) in plan.tables.iter().enumerate() {
        let m = t.first().map_or(0, |r| r.len());
        for r in 0..m {
            for target in 2..m as u64 + 2 {
                if !t.iter().skip(1).any(|row| row[r] == target) {
                    out.push((n + 1, r + 1, target));
                }
            }
        }
    }
    out
}

/// `C_n^{(j)}` restricted to `D_t`-aligned positions agrees with some
/// `C_t^{(i)}`, with `i = 1` at `γ = 0` (finite form of the nesting of blocks).
pub fn blocks_nest(oracle: &Oracle, t: usize, n: usize) -> bool {
    let outer = &oracle.domains[n];
    let inner = &oracle.domains[t];
    oracle.blocks[n].iter().all(|c| {
        outer.points().filter(|g| oracle.divisible(g, t)).all(|gamma| {
            let sub_block: Vec<Letter> = inner
                .points()
                .map(|d| c[outer.rank(&add(&d, &gamma)).unwrap().to_usize().unwrap()])
                .collect();
            if gamma.iter().all(|c| c.is_zero()) {
                sub_block == oracle.blocks[t][0]
            } else {
                oracle.blocks[t].contains(&sub_block)
            }
        })
    })
}
