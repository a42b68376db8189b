//! Permutation families `S_n` and the blocks `C_n^{(j)}`.
//!
//! Blocks are never stored. `C_n^{(j)}(h)` is evaluated by descending through
//! the θ components of `h`, one σ evaluation per level.
//!
//! The domain of every `σ ∈ S_n` is `(D_n ∩ Γ_{n−1}) ∖ {0}`, enumerated
//! lexicographically (first axis most significant) with 1-based ranks
//! `γ^{(1)}, …, γ^{(m)}`, `m = q_{n−1} − 1`. Targets are `{2, …, q_{n−1}}`.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::lattice::{is_zero_vec, sub, DomainFamily, FundamentalDomain, GammaGrid, LatticeVector, Letter};
use crate::perm::{lehmer_position, lehmer_value, rank_fits};
use crate::planner::{ConstructionPlan, Magnitude};

/// Default bound on the number of cells of a materialized block or patch.
pub const DEFAULT_CELL_BUDGET: u128 = 10_000_000;

/// How the members `σ_1, σ_2, …` of one family are laid out.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Family {
    /// `σ_j` is the permutation of lexicographic rank `j − 1`.
    Full,
    /// `m` cyclic shifts followed by Lehmer permutations fixing `γ^{(1)} ↦ 2`.
    Hybrid,
    /// `table[j−1][r−1] = σ_j(γ^{(r)})`.
    Explicit(Vec<Vec<u64>>),
}

/// A dense grid of letters over a box, in lexicographic cell order (first
/// axis most significant).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Patch {
    pub origin: LatticeVector,
    pub sides: Vec<u64>,
    pub letters: Vec<Letter>,
}

impl Patch {
    pub fn dim(&self) -> usize {
        self.origin.len()
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Letter at absolute coordinates `g`, if inside.
    pub fn get(&self, g: &[BigInt]) -> Option<Letter> {
        let mut idx = 0usize;
        for i in 0..self.dim() {
            let off = (&g[i] - &self.origin[i]).to_i64()?;
            if off < 0 || off as u64 >= self.sides[i] {
                return None;
            }
            idx = idx * self.sides[i] as usize + off as usize;
        }
        self.letters.get(idx).copied()
    }

    /// Box covered by the patch.
    pub fn domain(&self) -> FundamentalDomain {
        FundamentalDomain::new(0, self.origin.clone(), self.sides.iter().map(|&s| BigInt::from(s)).collect())
    }
}

/// Cached geometry of `D_n ∩ Γ_{n−1}` for one exact level.
#[derive(Clone, Debug)]
struct LevelGrid {
    grid: GammaGrid,
    zero_rank: BigInt,
}

/// Domain family, block counts and permutation families of one construction.
#[derive(Clone, Debug)]
pub struct Construction {
    pub k: u64,
    pub fam: DomainFamily,
    /// `q_0 = k, q_1, …`: number of blocks per level (`None` when symbolic).
    pub sizes: Vec<Option<BigInt>>,
    /// `families[n−1]` is `S_n` for `n = 1, …, max_level`.
    pub families: Vec<Family>,
    pub depth_budget: usize,
    grids: Vec<Option<LevelGrid>>,
}

impl Construction {
    fn assemble(k: u64, fam: DomainFamily, sizes: Vec<Option<BigInt>>, families: Vec<Family>, depth_budget: usize) -> Result<Self> {
        let levels = fam.max_level();
        if families.len() != levels {
            return Err(Error::InvalidInput(format!("{} families for {} levels", families.len(), levels)));
        }
        let mut grids = vec![None];
        for n in 1..=levels {
            if fam.is_exact(n) && fam.is_exact(n - 1) {
                let grid = fam.grid(n, n - 1)?;
                let zero_rank = grid.rank(&vec![BigInt::zero(); fam.dim()]).expect("0 lies in every grid");
                if let Some(Some(q)) = sizes.get(n - 1) {
                    if &grid.card() != q {
                        return Err(Error::InvalidInput(format!(
                            "#(D_{} ∩ Γ_{}) = {} but q_{} = {}",
                            n,
                            n - 1,
                            grid.card(),
                            n - 1,
                            q
                        )));
                    }
                }
                grids.push(Some(LevelGrid { grid, zero_rank }));
            } else {
                grids.push(None);
            }
        }
        Ok(Construction { k, fam, sizes, families, depth_budget, grids })
    }

    /// Construction of a certified plan: full families below level `N`,
    /// hybrid families from `N` on.
    pub fn from_plan(plan: &ConstructionPlan, depth_budget: usize) -> Result<Self> {
        let fam = plan.domain_family()?;
        let mut sizes: Vec<Option<BigInt>> = plan.q.iter().map(|q| q.exact().cloned()).collect();
        while sizes.len() <= fam.max_level() {
            sizes.push(None);
        }
        if let Some(Magnitude::Exact(q0)) = plan.q.first() {
            if q0 != &BigInt::from(plan.k) {
                return Err(Error::Certification("q_0 differs from k".into()));
            }
        }
        let families = (1..=fam.max_level()).map(|n| if n < plan.n { Family::Full } else { Family::Hybrid }).collect();
        Self::assemble(plan.k, fam, sizes, families, depth_budget)
    }

    /// Construction from explicit families, validated for bijectivity,
    /// distinctness and coverage.
    pub fn explicit(k: u64, fam: DomainFamily, tables: Vec<Vec<Vec<u64>>>, depth_budget: usize) -> Result<Self> {
        let c = Self::explicit_unchecked(k, fam, tables, depth_budget)?;
        for n in 1..=c.fam.max_level() {
            c.validate_family(n)?;
            if let CoverageVerdict::Missing { rank, target } = c.coverage_check(n)? {
                return Err(Error::InvalidInput(format!(
                    "S_{} does not send γ^({}) to {} with any member",
                    n, rank, target
                )));
            }
        }
        Ok(c)
    }

    /// Explicit families without the structural checks (used to build
    /// deliberately defective examples).
    pub fn explicit_unchecked(k: u64, fam: DomainFamily, tables: Vec<Vec<Vec<u64>>>, depth_budget: usize) -> Result<Self> {
        let mut sizes = vec![Some(BigInt::from(k))];
        for t in &tables {
            sizes.push(Some(BigInt::from(t.len())));
        }
        let families = tables.into_iter().map(Family::Explicit).collect();
        Self::assemble(k, fam, sizes, families, depth_budget)
    }

    pub fn dim(&self) -> usize {
        self.fam.dim()
    }

    pub fn max_level(&self) -> usize {
        self.fam.max_level()
    }

    /// `q_n`, the number of blocks at level `n`.
    pub fn q(&self, n: usize) -> Result<&BigInt> {
        self.sizes
            .get(n)
            .and_then(|s| s.as_ref())
            .ok_or_else(|| Error::DigitBudgetExceeded(format!("q_{} is symbolic or beyond the computed depth", n)))
    }

    fn level_grid(&self, n: usize) -> Result<&LevelGrid> {
        match self.grids.get(n) {
            Some(Some(g)) => Ok(g),
            Some(None) => Err(Error::DepthBudgetExceeded(format!("level {} is symbolic; its permutations cannot be evaluated", n))),
            None => Err(Error::DepthBudgetExceeded(format!("level {} beyond the computed depth {}", n, self.max_level()))),
        }
    }

    fn family(&self, n: usize) -> Result<&Family> {
        if n == 0 {
            return Err(Error::InvalidInput("families are indexed from level 1".into()));
        }
        self.families
            .get(n - 1)
            .ok_or_else(|| Error::DepthBudgetExceeded(format!("no family at level {}", n)))
    }

    /// 1-based rank of `γ ∈ (D_n ∩ Γ_{n−1}) ∖ {0}`.
    pub fn domain_rank(&self, n: usize, gamma: &[BigInt]) -> Result<BigInt> {
        let lg = self.level_grid(n)?;
        let raw = lg
            .grid
            .rank(gamma)
            .ok_or_else(|| Error::InvalidInput(format!("{} is not in D_{} ∩ Γ_{}", crate::lattice::fmt_vec(gamma), n, n - 1)))?;
        if raw == lg.zero_rank {
            return Err(Error::InvalidInput("0 has no rank".into()));
        }
        Ok(if raw < lg.zero_rank { raw + 1 } else { raw })
    }

    /// Inverse of [`Construction::domain_rank`].
    pub fn domain_unrank(&self, n: usize, r: &BigInt) -> Result<LatticeVector> {
        let lg = self.level_grid(n)?;
        if !r.is_positive() {
            return Err(Error::InvalidInput("ranks start at 1".into()));
        }
        let raw = if r <= &lg.zero_rank { r - 1 } else { r.clone() };
        lg.grid.unrank(&raw).ok_or_else(|| Error::InvalidInput(format!("rank {} beyond D_{} ∩ Γ_{}", r, n, n - 1)))
    }

    /// `m = q_{n−1} − 1`, the size of the permuted set at level `n`.
    pub fn domain_size(&self, n: usize) -> Result<BigInt> {
        Ok(self.q(n - 1)? - 1)
    }

    fn check_index(&self, n: usize, j: &BigInt) -> Result<()> {
        if !j.is_positive() {
            return Err(Error::InvalidInput(format!("block index {} at level {} is not positive", j, n)));
        }
        if let Some(Some(q)) = self.sizes.get(n) {
            if j > q {
                return Err(Error::InvalidInput(format!("block index {} exceeds q_{} = {}", j, n, q)));
            }
        }
        Ok(())
    }

    /// `σ_j(γ^{(r)})` for the rank `r`.
    pub fn sigma_rank(&self, n: usize, j: &BigInt, r: &BigInt) -> Result<BigInt> {
        self.check_index(n, j)?;
        let m = self.domain_size(n)?;
        match self.family(n)? {
            Family::Full => {
                let rank = j - 1;
                if !rank_fits(&m, &rank) {
                    return Err(Error::InvalidInput(format!("index {} exceeds {}!", j, m)));
                }
                Ok(2 + lehmer_value(&m, &rank, &(r - 1)))
            }
            Family::Hybrid => {
                if j <= &m {
                    Ok(2 + (r - 1 + j - 1) % &m)
                } else if r.is_one() {
                    Ok(BigInt::from(2))
                } else {
                    let rank = j - &m;
                    let m1 = &m - 1;
                    if !rank_fits(&m1, &rank) {
                        return Err(Error::Certification(format!("S_{} exceeds its capacity at index {}", n, j)));
                    }
                    Ok(3 + lehmer_value(&m1, &rank, &(r - 2)))
                }
            }
            Family::Explicit(t) => {
                let row = &t[j.to_usize().unwrap() - 1];
                let v = row
                    .get(r.to_usize().unwrap_or(usize::MAX).wrapping_sub(1))
                    .ok_or_else(|| Error::InvalidInput(format!("rank {} beyond S_{} table", r, n)))?;
                Ok(BigInt::from(*v))
            }
        }
    }

    /// `σ_j(γ)` for `γ ∈ (D_n ∩ Γ_{n−1}) ∖ {0}`.
    pub fn sigma_eval(&self, n: usize, j: &BigInt, gamma: &[BigInt]) -> Result<BigInt> {
        let r = self.domain_rank(n, gamma)?;
        self.sigma_rank(n, j, &r)
    }

    /// The rank `r` with `σ_j(γ^{(r)}) = target`.
    pub fn sigma_inverse_rank(&self, n: usize, j: &BigInt, target: &BigInt) -> Result<BigInt> {
        self.check_index(n, j)?;
        let m = self.domain_size(n)?;
        let two = BigInt::from(2);
        if target < &two || target > &(&m + 1) {
            return Err(Error::InvalidInput(format!("target {} outside 2..={}", target, &m + 1)));
        }
        match self.family(n)? {
            Family::Full => Ok(1 + lehmer_position(&m, &(j - 1), &(target - 2))),
            Family::Hybrid => {
                if j <= &m {
                    let shift = target - 2 - (j - 1);
                    Ok(1 + ((shift % &m) + &m) % &m)
                } else if target == &two {
                    Ok(BigInt::one())
                } else {
                    Ok(2 + lehmer_position(&(&m - 1), &(j - &m), &(target - 3)))
                }
            }
            Family::Explicit(t) => {
                let row = &t[j.to_usize().unwrap() - 1];
                let tv = target.to_u64().unwrap();
                row.iter()
                    .position(|&v| v == tv)
                    .map(|p| BigInt::from(p + 1))
                    .ok_or_else(|| Error::InvalidInput(format!("σ_{} at level {} never takes {}", j, n, target)))
            }
        }
    }

    /// Checks that every member of an explicit family is a bijection onto
    /// `{2, …, q_{n−1}}` and that members are pairwise distinct.
    pub fn validate_family(&self, n: usize) -> Result<()> {
        let m = self.domain_size(n)?.to_usize().ok_or_else(|| Error::InvalidInput("family too large to validate".into()))?;
        if let Family::Explicit(t) = self.family(n)? {
            let mut seen = std::collections::HashSet::new();
            for (j, row) in t.iter().enumerate() {
                let mut sorted = row.clone();
                sorted.sort_unstable();
                if sorted != (2..m as u64 + 2).collect::<Vec<_>>() {
                    return Err(Error::InvalidInput(format!("σ_{} of S_{} is not a bijection onto 2..={}", j + 1, n, m + 1)));
                }
                if !seen.insert(row.clone()) {
                    return Err(Error::InvalidInput(format!("σ_{} of S_{} repeats an earlier member", j + 1, n)));
                }
            }
            if t.first().map(|r| r.iter().enumerate().any(|(i, &v)| v != i as u64 + 2)).unwrap_or(true) {
                return Err(Error::InvalidInput(format!("σ_1 of S_{} must be the order-preserving base", n)));
            }
        }
        Ok(())
    }

    /// Whether every `(γ, target)` pair is realized by some member.
    pub fn coverage_check(&self, n: usize) -> Result<CoverageVerdict> {
        let m = self.domain_size(n)?;
        match self.family(n)? {
            Family::Full => {
                let q = self.q(n)?;
                let mu = m.to_u64().and_then(|mv| crate::perm::factorial_below(&BigInt::from(mv), &(q + 1)));
                Ok(if mu.as_ref() == Some(q) {
                    CoverageVerdict::AllPermutations
                } else {
                    CoverageVerdict::Missing { rank: BigInt::one(), target: BigInt::from(2) }
                })
            }
            Family::Hybrid => match self.sizes.get(n).and_then(|s| s.as_ref()) {
                Some(q) if q < &m => Ok(CoverageVerdict::Missing { rank: BigInt::one(), target: 2 + q }),
                _ => Ok(CoverageVerdict::CyclicShifts),
            },
            Family::Explicit(t) => {
                let mu = m.to_usize().unwrap();
                let mut hit = vec![vec![false; mu]; mu];
                for row in t {
                    for (r, &v) in row.iter().enumerate().take(mu) {
                        if (2..mu as u64 + 2).contains(&v) {
                            hit[r][v as usize - 2] = true;
                        }
                    }
                }
                for (r, row) in hit.iter().enumerate() {
                    if let Some(tg) = row.iter().position(|&b| !b) {
                        return Ok(CoverageVerdict::Missing { rank: BigInt::from(r + 1), target: BigInt::from(tg + 2) });
                    }
                }
                Ok(CoverageVerdict::Exhaustive)
            }
        }
    }

    /// `C_n^{(j)}(h)` for `h ∈ D_n`.
    pub fn block_eval(&self, n: usize, j: &BigInt, h: &[BigInt]) -> Result<Letter> {
        self.check_index(n, j)?;
        if !self.fam.contains(n, h)? {
            return Err(Error::InvalidInput(format!("{} is not in D_{}", crate::lattice::fmt_vec(h), n)));
        }
        let mut j = j.clone();
        let mut h = h.to_vec();
        let mut level = n;
        while level > 0 {
            let lo = self.fam.coset_project(&h, level - 1)?;
            let gamma = sub(&h, &lo);
            j = if is_zero_vec(&gamma) { BigInt::one() } else { self.sigma_eval(level, &j, &gamma)? };
            h = lo;
            level -= 1;
        }
        j.to_u32()
            .and_then(|v| v.checked_sub(1))
            .ok_or_else(|| Error::InvalidInput(format!("level-0 index {} is not a letter", j)))
    }

    /// The full grid of `C_n^{(j)}` over `D_n`.
    pub fn materialize(&self, n: usize, j: &BigInt, cell_budget: u128) -> Result<Patch> {
        let dom = self.fam.domain(n)?;
        dom.card_within(cell_budget)?;
        let letters = dom.points().map(|p| self.block_eval(n, j, &p)).collect::<Result<Vec<_>>>()?;
        Ok(Patch { origin: dom.lower.clone(), sides: dom.sides.iter().map(|s| s.to_u64().unwrap()).collect(), letters })
    }
}

/// Outcome of [`Construction::coverage_check`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CoverageVerdict {
    /// The family contains every bijection.
    AllPermutations,
    /// The `m` cyclic shifts alone hit every target at every rank.
    CyclicShifts,
    /// Checked pair by pair.
    Exhaustive,
    /// No member sends `γ^{(rank)}` to `target`.
    Missing { rank: BigInt, target: BigInt },
}

impl CoverageVerdict {
    pub fn passed(&self) -> bool {
        !matches!(self, CoverageVerdict::Missing { .. })
    }
}
