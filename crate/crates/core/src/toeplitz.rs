//! The Toeplitz array `x`, its periodic positions, substitution and the
//! rescaled pipeline for arbitrary alphabets.
//!
//! `x(g)` is the stable value of the hole-filling recursion: with `n` the
//! least level where `θ_n(g) = 0`, `x(g) = C_{n−1}^{(1)}(ψ_{n−1}(g))`.

use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::blocks::{Construction, Family, Patch};
use crate::error::{Error, Result};
use crate::interval::{ln_int, Interval};
use crate::lattice::{add, fmt_vec, is_zero_vec, sub, zero_vec, FundamentalDomain, LatticeVector, Letter};
use crate::perm::rank_of_transposition;
use crate::planner::{lambda_lower_bound_auto, plan, rational_interval, ConstructionPlan, PlannerConfig};
use crate::theta::{essential_witness, min_zero_level, theta};

/// Anything that can be evaluated pointwise on `Z^d`.
pub trait Array: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, g: &[BigInt]) -> Result<Letter>;
}

/// An array given by a closure.
pub struct FnArray<F> {
    pub d: usize,
    pub f: F,
}

impl<F: Fn(&[BigInt]) -> Letter + Sync> Array for FnArray<F> {
    fn dim(&self) -> usize {
        self.d
    }

    fn eval(&self, g: &[BigInt]) -> Result<Letter> {
        Ok((self.f)(g))
    }
}

impl Construction {
    /// `x(g)` for the untranslated array.
    pub fn x_eval(&self, g: &[BigInt]) -> Result<Letter> {
        let n = min_zero_level(&self.fam, g, self.depth_budget)?;
        let h = self.fam.coset_project(g, n - 1)?;
        self.block_eval(n - 1, &BigInt::one(), &h)
    }

    /// Whether `θ_i(g) = 0` for some `i ≤ n`.
    pub fn per_membership(&self, g: &[BigInt], n: usize) -> Result<bool> {
        let mut prev = self.fam.coset_project(g, 0)?;
        for i in 1..=n {
            let cur = self.fam.coset_project(g, i)?;
            if cur == prev {
                return Ok(true);
            }
            prev = cur;
        }
        Ok(false)
    }

    /// Indices `j ≥ from` at level `i` with `σ_j(γ)` among `targets`, for explicit families.
    fn explicit_preimages(&self, i: usize, gamma: &[BigInt], targets: &[BigInt], from: usize) -> Result<Vec<BigInt>> {
        let q = self.q(i)?.to_usize().unwrap();
        let r = self.domain_rank(i, gamma)?;
        let mut out = Vec::new();
        for j in from..=q {
            let v = self.sigma_rank(i, &BigInt::from(j), &r)?;
            if targets.contains(&v) {
                out.push(BigInt::from(j));
            }
        }
        Ok(out)
    }

    /// Some `j ≥ 2` with `σ_j(γ) = l` at level `i` (full or hybrid family).
    fn structured_preimage(&self, i: usize, gamma: &[BigInt], l: &BigInt) -> Result<BigInt> {
        let m = self.domain_size(i)?;
        let r = self.domain_rank(i, gamma)?;
        let q = self.q(i).ok();
        let fits = |j: &BigInt| q.map(|q| j <= q).unwrap_or(true);
        let j = match &self.families[i - 1] {
            Family::Hybrid => {
                let cyc: BigInt = ((l - 2 - (&r - 1)) % &m + &m) % &m + 1;
                if !cyc.is_one() {
                    cyc
                } else if r.is_one() {
                    &m + 1
                } else {
                    // fix position r−2 of the tail permutation, swap two others
                    let p = &r - 2;
                    let m1 = &m - 1;
                    let cands: Vec<BigInt> = (1..=3u32).map(|k| &m1 - k).filter(|c: &BigInt| c != &p && !c.is_negative()).collect();
                    if cands.len() < 2 {
                        return Err(Error::InvalidInput(format!("S_{} too small for a non-base preimage", i)));
                    }
                    &m + rank_of_transposition(&m1, &cands[0], &cands[1])
                }
            }
            Family::Full => {
                let (a, b) = (&r - 1, l - 2);
                if a != b {
                    rank_of_transposition(&m, &a, &b) + 1
                } else {
                    let cands: Vec<BigInt> = (1..=3u32).map(|k| &m - k).filter(|c: &BigInt| c != &a && !c.is_negative()).collect();
                    if cands.len() < 2 {
                        return Err(Error::InvalidInput(format!("S_{} too small for a non-base preimage", i)));
                    }
                    rank_of_transposition(&m, &cands[0], &cands[1]) + 1
                }
            }
            Family::Explicit(_) => unreachable!(),
        };
        if !fits(&j) {
            return Err(Error::InvalidInput(format!("preimage index {} exceeds q_{}", j, i)));
        }
        debug_assert_eq!(&self.sigma_rank(i, &j, &r)?, l);
        Ok(j)
    }

    /// `γ ∈ Γ_n` with `x(g + γ) = α`, for `θ_i(g) ≠ 0` (`i ≤ n`) and `α ≠ 0`.
    pub fn aperiodicity_witness(&self, g: &[BigInt], n: usize, alpha: Letter) -> Result<LatticeVector> {
        if alpha == 0 || alpha as u64 >= self.k {
            return Err(Error::InvalidInput(format!("letter {} is not in 1..{}", alpha, self.k)));
        }
        let base = self.fam.coset_project(g, n)?;
        let mut thetas = Vec::with_capacity(n);
        for i in 1..=n {
            let th = theta(&self.fam, &base, i)?;
            if is_zero_vec(&th) {
                return Err(Error::InvalidInput(format!("θ_{}({}) = 0; the position is periodic", i, fmt_vec(g))));
            }
            thetas.push(th);
        }
        let explicit = self.families.iter().take(n).any(|f| matches!(f, Family::Explicit(_)));
        let top_index = if explicit {
            let mut reach = vec![BigInt::from(alpha) + 1];
            for i in 1..=n {
                // index 1 is only usable at the top, where it needs no σ-image
                reach = self.explicit_preimages(i, &thetas[i - 1], &reach, if i == n { 1 } else { 2 })?;
                if reach.is_empty() {
                    return Err(Error::Verification(format!("letter {} cannot be lifted past level {}", alpha, i)));
                }
            }
            reach[0].clone()
        } else {
            let mut l = BigInt::from(alpha) + 1;
            for i in 1..=n {
                l = self.structured_preimage(i, &thetas[i - 1], &l)?;
            }
            l
        };
        let gamma_top = if top_index.is_one() {
            zero_vec(self.dim())
        } else {
            let r = self.sigma_inverse_rank(n + 1, &BigInt::one(), &top_index)?;
            self.domain_unrank(n + 1, &r)?
        };
        let gamma = add(&sub(&base, g), &gamma_top);
        let got = self.x_eval(&add(g, &gamma))?;
        if got != alpha {
            return Err(Error::Verification(format!("witness {} gives {} instead of {}", fmt_vec(&gamma), got, alpha)));
        }
        Ok(gamma)
    }
}

/// A bijection from `Σ_K` onto the `F`-blocks over `Σ_k`, `F = [0, P)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubstitutionMap {
    pub source_alphabet: u64,
    pub target_alphabet: u64,
    pub sides: Vec<u64>,
    /// `table[a][c]`: letter of `S(a)` at the `c`-th cell of `F` (lexicographic).
    pub table: Vec<Vec<Letter>>,
}

impl SubstitutionMap {
    /// Validates bijectivity and the pinned block `S(0) = (0, 1, …, 1)`.
    pub fn new(target_alphabet: u64, sides: Vec<u64>, table: Vec<Vec<Letter>>) -> Result<Self> {
        let cells: u64 = sides.iter().product();
        if sides.iter().any(|&s| s == 0) {
            return Err(Error::InvalidInput("empty substitution shape".into()));
        }
        let expect = (target_alphabet as u128).checked_pow(cells as u32);
        if expect != Some(table.len() as u128) {
            return Err(Error::InvalidInput(format!(
                "{} blocks cannot be a bijection onto {}^{} patterns",
                table.len(),
                target_alphabet,
                cells
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for (a, row) in table.iter().enumerate() {
            if row.len() as u64 != cells || row.iter().any(|&v| v as u64 >= target_alphabet) {
                return Err(Error::InvalidInput(format!("S({}) is not an F-block over the target alphabet", a)));
            }
            if !seen.insert(row.clone()) {
                return Err(Error::InvalidInput(format!("S({}) repeats an earlier image", a)));
            }
        }
        let pinned: Vec<Letter> = (0..cells).map(|c| if c == 0 { 0 } else { 1 }).collect();
        if table[0] != pinned {
            return Err(Error::InvalidInput("S(0) must be 0 at the origin and 1 elsewhere".into()));
        }
        Ok(SubstitutionMap { source_alphabet: table.len() as u64, target_alphabet, sides, table })
    }

    /// Base-`k` digit expansion in lexicographic cell order (first cell most
    /// significant), with the letter whose expansion is the pinned block
    /// swapped to the expansion of 0.
    pub fn canonical(k: u64, sides: Vec<u64>) -> Result<Self> {
        let cells: u32 = sides.iter().product::<u64>() as u32;
        let kk = (k as u128)
            .checked_pow(cells)
            .filter(|&v| v <= 1 << 24)
            .ok_or_else(|| Error::InvalidInput("substitution alphabet too large to tabulate".into()))? as u64;
        let expand = |mut a: u64| {
            let mut row = vec![0 as Letter; cells as usize];
            for c in (0..cells as usize).rev() {
                row[c] = (a % k) as Letter;
                a /= k;
            }
            row
        };
        let mut table: Vec<Vec<Letter>> = (0..kk).map(expand).collect();
        let pinned_letter = (0..cells.saturating_sub(1)).fold(0u64, |acc, _| acc * k + 1);
        table.swap(0, pinned_letter as usize);
        Self::new(k, sides, table)
    }

    pub fn cells(&self) -> u64 {
        self.sides.iter().product()
    }

    /// Lexicographic index of a cell `f ∈ F`.
    pub fn cell_index(&self, f: &[BigInt]) -> usize {
        let mut idx = 0usize;
        for (c, &s) in f.iter().zip(&self.sides) {
            idx = idx * s as usize + c.to_usize().unwrap();
        }
        idx
    }

    /// `g = f + P d` with `f ∈ F`.
    pub fn split(&self, g: &[BigInt]) -> (LatticeVector, LatticeVector) {
        let mut d = Vec::with_capacity(g.len());
        let mut f = Vec::with_capacity(g.len());
        for (c, &s) in g.iter().zip(&self.sides) {
            let (q, r) = c.div_mod_floor(&BigInt::from(s));
            d.push(q);
            f.push(r);
        }
        (f, d)
    }

    pub fn scale(&self, v: &[BigInt]) -> LatticeVector {
        v.iter().zip(&self.sides).map(|(a, &s)| a * s).collect()
    }

    /// `B^S` for a block `B` over a box.
    pub fn apply_patch(&self, b: &Patch) -> Patch {
        let d = b.dim();
        let origin = self.scale(&b.origin);
        let sides: Vec<u64> = b.sides.iter().zip(&self.sides).map(|(a, s)| a * s).collect();
        let total: usize = sides.iter().product::<u64>() as usize;
        let mut letters = Vec::with_capacity(total);
        let mut idx = vec![0u64; d];
        for _ in 0..total {
            let mut src = 0usize;
            let mut cell = 0usize;
            for i in 0..d {
                src = src * b.sides[i] as usize + (idx[i] / self.sides[i]) as usize;
                cell = cell * self.sides[i] as usize + (idx[i] % self.sides[i]) as usize;
            }
            letters.push(self.table[b.letters[src] as usize][cell]);
            for i in (0..d).rev() {
                idx[i] += 1;
                if idx[i] < sides[i] {
                    break;
                }
                idx[i] = 0;
            }
        }
        Patch { origin, sides, letters }
    }
}

/// The array `g·x` (optionally substituted) of a construction.
#[derive(Clone, Debug)]
pub struct ArrayHandle {
    pub construction: Arc<Construction>,
    pub plan: Option<Arc<ConstructionPlan>>,
    pub translation: LatticeVector,
    pub substitution: Option<Arc<SubstitutionMap>>,
}

/// Outcome of [`ArrayHandle::essential_period_check`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EssentialVerdict {
    /// `h` lies in the period lattice itself.
    InLattice,
    /// `g ∈ Per(·, α)` while `g + h ∉ Per(·, α)`.
    Witness { g: LatticeVector, alpha: Letter, pinned: bool },
}

impl ArrayHandle {
    pub fn new(construction: Construction) -> Self {
        let d = construction.dim();
        ArrayHandle { construction: Arc::new(construction), plan: None, translation: zero_vec(d), substitution: None }
    }

    /// Handle of a certified plan.
    pub fn from_plan(plan: ConstructionPlan, depth_budget: usize) -> Result<Self> {
        let c = Construction::from_plan(&plan, depth_budget)?;
        let mut h = Self::new(c);
        h.plan = Some(Arc::new(plan));
        Ok(h)
    }

    pub fn dim(&self) -> usize {
        self.construction.dim()
    }

    /// Alphabet size of the evaluated array.
    pub fn alphabet(&self) -> u64 {
        match &self.substitution {
            Some(s) => s.target_alphabet,
            None => self.construction.k,
        }
    }

    /// The handle of `g·y` where `y` is this handle's array.
    pub fn translate(&self, g: &[BigInt]) -> Self {
        let mut h = self.clone();
        h.translation = add(&self.translation, g);
        h
    }

    /// `x^S`; the translation must be zero.
    pub fn substitute(&self, s: SubstitutionMap) -> Result<Self> {
        if self.substitution.is_some() {
            return Err(Error::InvalidInput("handle is already substituted".into()));
        }
        if !is_zero_vec(&self.translation) {
            return Err(Error::InvalidInput("substitute before translating".into()));
        }
        if s.source_alphabet != self.construction.k || s.sides.len() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "substitution over {} letters in dimension {} does not fit alphabet {} in dimension {}",
                s.source_alphabet,
                s.sides.len(),
                self.construction.k,
                self.dim()
            )));
        }
        let mut h = self.clone();
        h.substitution = Some(Arc::new(s));
        Ok(h)
    }

    /// `#F` (1 without substitution).
    pub fn shape_cells(&self) -> u64 {
        self.substitution.as_ref().map(|s| s.cells()).unwrap_or(1)
    }

    /// `D_n`, or `F_n = F + P D_n` for a substituted handle.
    pub fn level_domain(&self, n: usize) -> Result<FundamentalDomain> {
        let dom = self.construction.fam.domain(n)?;
        Ok(match &self.substitution {
            Some(s) => FundamentalDomain::new(n, s.scale(&dom.lower), s.scale(&dom.sides)),
            None => dom,
        })
    }

    /// Diagonal of `P_n`, or of `P P_n` for a substituted handle.
    pub fn level_period(&self, n: usize) -> Result<Vec<BigInt>> {
        let p = self.construction.fam.p(n)?.diag;
        Ok(match &self.substitution {
            Some(s) => s.scale(&p),
            None => p,
        })
    }

    fn absolute(&self, g: &[BigInt]) -> Result<LatticeVector> {
        crate::lattice::check_dim(self.dim(), g)?;
        Ok(add(g, &self.translation))
    }

    /// Letter at `g`.
    pub fn x_eval(&self, g: &[BigInt]) -> Result<Letter> {
        let a = self.absolute(g)?;
        match &self.substitution {
            None => self.construction.x_eval(&a),
            Some(s) => {
                let (f, d) = s.split(&a);
                let src = self.construction.x_eval(&d)?;
                Ok(s.table[src as usize][s.cell_index(&f)])
            }
        }
    }

    /// Dense extraction of the box `lower + [0, sides)`, evaluated in parallel
    /// with an order-preserving collect.
    pub fn patch(&self, lower: &[BigInt], sides: &[u64], cell_budget: u128) -> Result<Patch> {
        crate::lattice::check_dim(self.dim(), lower)?;
        let total = sides.iter().try_fold(1u128, |acc, &s| acc.checked_mul(s as u128)).unwrap_or(u128::MAX);
        if total > cell_budget {
            return Err(Error::CellBudgetExceeded { needed: total, budget: cell_budget });
        }
        let d = sides.len();
        let letters = (0..total as u64)
            .into_par_iter()
            .map(|mut idx| {
                let mut g = vec![BigInt::zero(); d];
                for i in (0..d).rev() {
                    g[i] = &lower[i] + idx % sides[i];
                    idx /= sides[i];
                }
                self.x_eval(&g)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Patch { origin: lower.to_vec(), sides: sides.to_vec(), letters })
    }

    /// `θ^Δ_i(g)` for a substituted handle (`i ≥ 1`), `θ_i(g)` otherwise.
    pub fn theta_level(&self, g: &[BigInt], i: usize) -> Result<LatticeVector> {
        let a = self.absolute(g)?;
        match &self.substitution {
            None => theta(&self.construction.fam, &a, i),
            Some(s) => {
                let (f, d) = s.split(&a);
                if i == 0 {
                    return Ok(f);
                }
                Ok(s.scale(&theta(&self.construction.fam, &d, i)?))
            }
        }
    }

    /// Membership of `g` in the set of positions periodic under the level-`n`
    /// lattice, by the θ formula.
    pub fn per_membership(&self, g: &[BigInt], n: usize) -> Result<bool> {
        let a = self.absolute(g)?;
        match &self.substitution {
            None => self.construction.per_membership(&a, n),
            Some(s) => self.construction.per_membership(&s.split(&a).1, n),
        }
    }

    /// `γ` in the level-`n` lattice with `x(g + γ) = α` (unsubstituted handles).
    pub fn aperiodicity_witness(&self, g: &[BigInt], n: usize, alpha: Letter) -> Result<LatticeVector> {
        if self.substitution.is_some() {
            return Err(Error::InvalidInput("letter witnesses are defined for the unsubstituted array".into()));
        }
        self.construction.aperiodicity_witness(&self.absolute(g)?, n, alpha)
    }

    /// `δ` in the level-`n` lattice with `y(g + δ) ≠ y(g)`, for positions
    /// outside the Per-set.
    pub fn exclusion_witness(&self, g: &[BigInt], n: usize) -> Result<LatticeVector> {
        let a = self.absolute(g)?;
        let k = self.construction.k as Letter;
        let delta = match &self.substitution {
            None => {
                let here = self.construction.x_eval(&a)?;
                let alpha = if here == 1 { 2 } else { 1 };
                if alpha >= k {
                    return Err(Error::InvalidInput("alphabet too small for an exclusion witness".into()));
                }
                self.construction.aperiodicity_witness(&a, n, alpha)?
            }
            Some(s) => {
                let (f, d) = s.split(&a);
                let beta = self.construction.x_eval(&d)?;
                let c = s.cell_index(&f);
                let want = s.table[beta as usize][c];
                let alpha = (1..k)
                    .find(|&al| s.table[al as usize][c] != want)
                    .ok_or_else(|| Error::Verification("no letter changes this cell".into()))?;
                s.scale(&self.construction.aperiodicity_witness(&d, n, alpha)?)
            }
        };
        if self.x_eval(&add(g, &delta))? == self.x_eval(g)? {
            return Err(Error::Verification(format!("exclusion witness {} does not change the letter", fmt_vec(&delta))));
        }
        Ok(delta)
    }

    fn in_level_lattice(&self, h: &[BigInt], n: usize) -> Result<bool> {
        let p = self.level_period(n)?;
        Ok(h.iter().zip(&p).all(|(a, b)| a.is_multiple_of(b)))
    }

    /// Checks that `h` cannot be a period of the Per-sets at level `n` unless
    /// it lies in the level-`n` lattice, producing the refuting witness.
    pub fn essential_period_check(&self, n: usize, h: &[BigInt]) -> Result<EssentialVerdict> {
        if self.in_level_lattice(h, n)? {
            return Ok(EssentialVerdict::InLattice);
        }
        let base_h = match &self.substitution {
            Some(s) => s.split(h).1,
            None => h.to_vec(),
        };
        let fam = &self.construction.fam;
        let index: Vec<usize> = (1..=n).collect();
        let any_nonzero = index.iter().map(|&i| theta(fam, &base_h, i)).collect::<Result<Vec<_>>>()?.iter().any(|t| !is_zero_vec(t));
        // Witness positions are absolute, so undo the translation.
        let (g, pinned) = if any_nonzero {
            let w = essential_witness(fam, &base_h, &index)?;
            let w = match &self.substitution {
                Some(s) => s.scale(&w),
                None => w,
            };
            (sub(&w, &self.translation), false)
        } else if self.substitution.is_some() {
            (sub(&zero_vec(self.dim()), &self.translation), true)
        } else {
            return Err(Error::Verification(format!("θ_i({}) = 0 for all i ≤ {} yet h is outside Γ_{}", fmt_vec(h), n, n)));
        };
        let alpha = self.x_eval(&g)?;
        let gh = add(&g, h);
        if !self.per_membership(&g, n)? {
            return Err(Error::Verification(format!("witness {} is not periodic", fmt_vec(&g))));
        }
        let excluded = !self.per_membership(&gh, n)? || self.x_eval(&gh)? != alpha;
        if !excluded {
            return Err(Error::Verification(format!("{} + h stays in the Per-set of letter {}", fmt_vec(&g), alpha)));
        }
        Ok(EssentialVerdict::Witness { g, alpha, pinned })
    }
}

impl Array for ArrayHandle {
    fn dim(&self) -> usize {
        ArrayHandle::dim(self)
    }

    fn eval(&self, g: &[BigInt]) -> Result<Letter> {
        self.x_eval(g)
    }
}

/// Result of the rescaled pipeline.
#[derive(Clone, Debug)]
pub struct TheoremA {
    /// Side of the substitution cube, `s = t^d`.
    pub t: u64,
    pub s: u64,
    pub handle: ArrayHandle,
}

/// Least `s = t^d` with `k^s ≥ 5`, `s(ln k − h) ≥ 5` and `s h` certified below
/// the λ bound for `k^s`; plans the `Σ_{k^s}` construction at entropy `s h` and
/// substitutes with the canonical map.
pub fn theorem_a_pipeline(k: u64, d: usize, h: &BigRational, cfg: &PlannerConfig, depth_budget: usize) -> Result<TheoremA> {
    if k < 2 || d == 0 {
        return Err(Error::InvalidInput("need k ≥ 2 and d ≥ 1".into()));
    }
    let prec = cfg.precision;
    let hi = rational_interval(h, prec);
    let lnk = ln_int(&BigInt::from(k), prec);
    if !h.is_positive() || !hi.certainly_lt(&lnk) {
        return Err(Error::InfeasibleEntropy(format!("h = {} is not certified inside (0, ln {})", h, k)));
    }
    for t in 1u64.. {
        let s = t.checked_pow(d as u32).ok_or_else(|| Error::InfeasibleEntropy("substitution size overflow".into()))?;
        let kk = match (k as u128).checked_pow(s as u32).filter(|&v| v <= 1 << 24) {
            Some(v) => v as u64,
            None => return Err(Error::InfeasibleEntropy(format!("no certifiable substitution size for h = {}", h))),
        };
        if kk < 5 {
            continue;
        }
        let si = Interval::from_int(s);
        if !Interval::from_int(5).certainly_le(&si.mul(&lnk.sub(&hi, prec), prec)) {
            continue;
        }
        let sh = h * BigRational::from_integer(BigInt::from(s));
        let lam = lambda_lower_bound_auto(kk, cfg)?;
        if !rational_interval(&sh, prec).certainly_lt(&lam.certified()) {
            continue;
        }
        let p = plan(kk, d, &sh, cfg)?;
        let base = ArrayHandle::from_plan(p, depth_budget)?;
        let sm = SubstitutionMap::canonical(k, vec![t; d])?;
        let handle = base.substitute(sm)?;
        return Ok(TheoremA { t, s, handle });
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{lv, DiagonalMatrix, DiagonalScale, DomainFamily, Offsets};

    fn toy() -> Construction {
        let q = vec![DiagonalMatrix::from_u64(&[4]).unwrap(); 4];
        let fam = DomainFamily::from_scale(&DiagonalScale::from_increments(q).unwrap(), &Offsets::Formula).unwrap();
        let t = vec![vec![2, 3, 4], vec![2, 4, 3], vec![3, 2, 4], vec![4, 3, 2]];
        Construction::explicit(4, fam, vec![t.clone(), t.clone(), t.clone(), t], 16).unwrap()
    }

    #[test]
    fn origin_is_zero_and_base_block_restricts() {
        let c = toy();
        assert_eq!(c.x_eval(&lv(&[0])).unwrap(), 0);
        let base = c.materialize(3, &BigInt::one(), 1000).unwrap();
        for p in c.fam.domain(3).unwrap().points() {
            assert_eq!(Some(c.x_eval(&p).unwrap()), base.get(&p));
        }
    }

    #[test]
    fn witnesses_hit_every_letter() {
        let c = toy();
        for g in -20i64..20 {
            let gv = lv(&[g]);
            for n in 1..=2 {
                if c.per_membership(&gv, n).unwrap() {
                    continue;
                }
                for a in 1..4 {
                    let w = c.aperiodicity_witness(&gv, n, a).unwrap();
                    assert!(c.fam.in_gamma(n, &w).unwrap());
                }
            }
        }
    }

    #[test]
    fn canonical_substitution() {
        let s = SubstitutionMap::canonical(2, vec![3, 3]).unwrap();
        assert_eq!(s.source_alphabet, 512);
        assert_eq!(s.table[0], vec![0, 1, 1, 1, 1, 1, 1, 1, 1]);
        assert_eq!(s.table[255], vec![0; 9]);
        let bad = SubstitutionMap::new(2, vec![2], vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert!(bad.is_err());
    }

    #[test]
    fn translation_shifts_evaluation() {
        let h = ArrayHandle::new(toy());
        let t = h.translate(&lv(&[7]));
        for g in -10i64..10 {
            assert_eq!(t.x_eval(&lv(&[g])).unwrap(), h.x_eval(&lv(&[g + 7])).unwrap());
        }
        let p = t.patch(&lv(&[-3]), &[9], 100).unwrap();
        let q = h.patch(&lv(&[4]), &[9], 100).unwrap();
        assert_eq!(p.letters, q.letters);
    }
}
