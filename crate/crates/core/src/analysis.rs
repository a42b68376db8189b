//! Block census, frequencies `ap(B, C)`, entropy estimates and the Birkhoff
//! style window counts used to check unique ergodicity.
//!
//! All counts are exact rationals.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::blocks::Patch;
use crate::error::{Error, Result};
use crate::interval::{ln_int, Interval};
use crate::lattice::{add, FundamentalDomain, GammaGrid, LatticeVector};
use crate::toeplitz::ArrayHandle;

/// How [`census`] obtains `W_{D_t}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CensusMode {
    /// Sweep the `Γ_t`-grid of one level-`(t+1)` base block.
    Scan,
    /// Report `q_t` from the construction.
    Certificate,
}

/// Result of [`census`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Census {
    /// Distinct blocks in order of first occurrence.
    Blocks(Vec<Patch>),
    Cardinality(BigInt),
}

impl Census {
    pub fn len(&self) -> BigInt {
        match self {
            Census::Blocks(b) => BigInt::from(b.len()),
            Census::Cardinality(c) => c.clone(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len().is_zero()
    }
}

/// The `step`-lattice points of a box.
pub fn lattice_points(dom: &FundamentalDomain, step: &[BigInt]) -> GammaGrid {
    let ulow: Vec<BigInt> = dom.lower.iter().zip(step).map(|(l, p)| ceil_div(l, p)).collect();
    let uhigh: Vec<BigInt> = dom.upper_exclusive().iter().zip(step).map(|(u, p)| ceil_div(u, p)).collect();
    let counts = uhigh.iter().zip(&ulow).map(|(h, l)| (h - l).max(BigInt::zero())).collect();
    GammaGrid { step: step.to_vec(), ulow, counts }
}

fn ceil_div(a: &BigInt, b: &BigInt) -> BigInt {
    -((-a).div_floor(b))
}

/// Reads the block `y|_{dom + γ}` as a patch over `dom`.
pub fn block_at(handle: &ArrayHandle, dom: &FundamentalDomain, gamma: &[BigInt]) -> Result<Patch> {
    let sides: Vec<u64> = dom
        .sides
        .iter()
        .map(|s| s.to_u64().ok_or_else(|| Error::CellBudgetExceeded { needed: u128::MAX, budget: 0 }))
        .collect::<Result<_>>()?;
    let mut letters = Vec::with_capacity(sides.iter().product::<u64>() as usize);
    for p in dom.points() {
        letters.push(handle.x_eval(&add(&p, gamma))?);
    }
    Ok(Patch { origin: dom.lower.clone(), sides, letters })
}

/// `W_{D_t}` of the handle's array.
pub fn census(handle: &ArrayHandle, t: usize, mode: CensusMode, cell_budget: u128) -> Result<Census> {
    match mode {
        CensusMode::Certificate => Ok(Census::Cardinality(handle.construction.q(t)?.clone())),
        CensusMode::Scan => census_scan(handle, t, t + 1, cell_budget).map(Census::Blocks),
    }
}

/// Distinct blocks `y|_{D_t + γ}` for `γ ∈ D_s ∩ Γ_t`, in first-occurrence order.
pub fn census_scan(handle: &ArrayHandle, t: usize, s: usize, cell_budget: u128) -> Result<Vec<Patch>> {
    let dt = handle.level_domain(t)?;
    let ds = handle.level_domain(s)?;
    let grid = lattice_points(&ds, &handle.level_period(t)?);
    let needed = grid.card() * dt.card();
    if needed > BigInt::from(cell_budget) {
        return Err(Error::CellBudgetExceeded { needed: needed.to_u128().unwrap_or(u128::MAX), budget: cell_budget });
    }
    let gammas: Vec<LatticeVector> = grid.points().collect();
    let blocks = gammas.par_iter().map(|g| block_at(handle, &dt, g)).collect::<Result<Vec<_>>>()?;
    let mut seen = HashMap::new();
    let mut out = Vec::new();
    for b in blocks {
        if !seen.contains_key(&b.letters) {
            seen.insert(b.letters.clone(), out.len());
            out.push(b);
        }
    }
    Ok(out)
}

/// Number of `γ` in `C`'s box on the `step` lattice with `C(d + γ) = B(d)`
/// for all `d` in `B`'s box, over the number of such lattice points.
pub fn ap(b: &Patch, c: &Patch, step: &[BigInt]) -> Result<BigRational> {
    if b.dim() != c.dim() || step.len() != b.dim() {
        return Err(Error::InvalidInput("blocks of different dimensions".into()));
    }
    let grid = lattice_points(&c.domain(), step);
    let total = grid.card();
    if total.is_zero() {
        return Err(Error::InvalidInput("no aligned positions".into()));
    }
    let bdom = b.domain();
    let mut hits = 0u64;
    'outer: for g in grid.points() {
        for (p, &letter) in bdom.points().zip(&b.letters) {
            if c.get(&add(&p, &g)) != Some(letter) {
                continue 'outer;
            }
        }
        hits += 1;
    }
    Ok(BigRational::new(BigInt::from(hits), total))
}

/// `ap(B, C)` for sampled pairs and their spread.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrequencyReport {
    pub t: usize,
    /// `(B index, C index, ap)`; indices are block indices `j`.
    pub entries: Vec<(BigInt, BigInt, BigRational)>,
    pub min: BigRational,
    pub max: BigRational,
}

impl FrequencyReport {
    pub fn spread(&self) -> BigRational {
        &self.max - &self.min
    }

    pub fn passed(&self) -> bool {
        self.spread().is_zero()
    }

    /// A pair with the smallest and one with the largest value.
    pub fn witness(&self) -> Option<((BigInt, BigInt), (BigInt, BigInt))> {
        let lo = self.entries.iter().find(|e| e.2 == self.min)?;
        let hi = self.entries.iter().find(|e| e.2 == self.max)?;
        Some(((lo.0.clone(), lo.1.clone()), (hi.0.clone(), hi.1.clone())))
    }
}

/// Level-`(t+1)` block indices: all when `q_{t+1} ≤ sample`, otherwise
/// index 1, index `q_{t+1}` and seeded uniform draws.
pub fn sample_indices(q: &BigInt, sample: usize, seed: u64) -> Vec<BigInt> {
    if q <= &BigInt::from(sample) {
        return (1..=q.to_u64().unwrap()).map(BigInt::from).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bytes = (q.bits() / 8 + 9) as usize;
    let mut out = vec![BigInt::from(1), q.clone()];
    while out.len() < sample {
        let mut buf = vec![0u8; bytes];
        rng.fill(&mut buf[..]);
        let v = BigInt::from_bytes_le(num_bigint::Sign::Plus, &buf) % q + 1;
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

/// `ap(C_t^{(i)}, C_{t+1}^{(j)})` for all `i` and sampled `j`; passes iff
/// every value is the same.
pub fn unique_ergodicity_probe(handle: &ArrayHandle, t: usize, sample: usize, seed: u64, cell_budget: u128) -> Result<FrequencyReport> {
    let c = &handle.construction;
    let over = |needed: BigInt| Error::CellBudgetExceeded { needed: needed.to_u128().unwrap_or(u128::MAX), budget: cell_budget };
    let base_cells = c.q(t)? * c.fam.domain(t)?.card();
    if base_cells > BigInt::from(cell_budget) {
        return Err(over(base_cells));
    }
    let js = sample_indices(c.q(t + 1)?, sample, seed);
    let needed = base_cells + BigInt::from(js.len()) * c.fam.domain(t + 1)?.card();
    if needed > BigInt::from(cell_budget) {
        return Err(over(needed));
    }
    let qt = c.q(t)?.to_u64().ok_or_else(|| Error::CellBudgetExceeded { needed: u128::MAX, budget: cell_budget })?;
    let bs = (1..=qt)
        .into_par_iter()
        .map(|i| c.materialize(t, &BigInt::from(i), cell_budget).map(|p| (BigInt::from(i), p)))
        .collect::<Result<Vec<_>>>()?;
    let step = c.fam.p(t)?.diag;
    let rows = js
        .par_iter()
        .map(|j| {
            let cj = c.materialize(t + 1, j, cell_budget)?;
            bs.iter().map(|(i, b)| Ok((i.clone(), j.clone(), ap(b, &cj, &step)?))).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let entries: Vec<_> = rows.into_iter().flatten().collect();
    let min = entries.iter().map(|e| e.2.clone()).min().unwrap_or_else(BigRational::zero);
    let max = entries.iter().map(|e| e.2.clone()).max().unwrap_or_else(BigRational::zero);
    Ok(FrequencyReport { t, entries, min, max })
}

/// One row of [`entropy_estimates`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EntropyRow {
    pub n: usize,
    /// Enclosure of `ln(q_n)/(p_n #F)`.
    pub estimate: Interval,
    /// `[h + 3/p_n, h + (d ln(M+l) + 3)/p_n] / #F` for planned levels `n ≥ N`.
    pub bracket: Option<Interval>,
}

impl EntropyRow {
    pub fn in_bracket(&self) -> Option<bool> {
        self.bracket.as_ref().map(|b| self.estimate.is_subset_of(b))
    }
}

/// Per-level entropy estimates `ln #W_{D_n} / #D_n`, divided by `#F` for
/// substituted handles.
pub fn entropy_estimates(handle: &ArrayHandle, levels: &[usize], prec: u32) -> Result<Vec<EntropyRow>> {
    let cells = Interval::from_int(handle.shape_cells());
    let mut out = Vec::new();
    for &n in levels {
        let (estimate, bracket) = match &handle.plan {
            Some(p) => {
                let e = p
                    .entropy_estimate(n)
                    .ok_or_else(|| Error::DigitBudgetExceeded(format!("no entropy enclosure at level {}", n)))?;
                (e, p.entropy_bracket(n))
            }
            None => {
                let q = handle.construction.q(n)?;
                let pn = handle.construction.fam.domain(n)?.card();
                (ln_int(q, prec).div(&Interval::from_int(pn), prec), None)
            }
        };
        out.push(EntropyRow {
            n,
            estimate: estimate.div(&cells, prec),
            bracket: bracket.map(|b| b.div(&cells, prec)),
        });
    }
    Ok(out)
}

/// `F(A, g, n)`: frequency of the pattern `A` (a patch over a finite box `M`)
/// among the translates `h·y`, `h ∈ D_n + g`.
pub fn birkhoff(handle: &ArrayHandle, a: &Patch, g: &[BigInt], n: usize, cell_budget: u128) -> Result<BigRational> {
    let dn = handle.level_domain(n)?.translate(g);
    let total = dn.card();
    if &total * BigInt::from(a.len()) > BigInt::from(cell_budget) {
        return Err(Error::CellBudgetExceeded { needed: u128::MAX, budget: cell_budget });
    }
    let mdom = a.domain();
    let pts: Vec<LatticeVector> = dn.points().collect();
    let hits = pts
        .par_iter()
        .map(|h| -> Result<u64> {
            for (m, &letter) in mdom.points().zip(&a.letters) {
                if handle.x_eval(&add(h, &m))? != letter {
                    return Ok(0);
                }
            }
            Ok(1)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum::<u64>();
    Ok(BigRational::new(BigInt::from(hits), total))
}

/// `Ψ(t, n, B, g)`: share of `γ ∈ I_{t,n}(g)` with `y|_{D_t + γ} = B`.
pub fn psi_quantity(handle: &ArrayHandle, t: usize, n: usize, b: &Patch, g: &[BigInt], cell_budget: u128) -> Result<BigRational> {
    let dt = handle.level_domain(t)?;
    let dn = handle.level_domain(n)?.translate(g);
    // γ ∈ Γ_t with D_t + γ ⊆ D_n + g
    let inner = FundamentalDomain::new(
        n,
        dn.lower.iter().zip(&dt.lower).map(|(a, b)| a - b).collect(),
        dn.sides.iter().zip(&dt.sides).map(|(a, b)| (a - b + 1u32).max(BigInt::zero())).collect(),
    );
    let grid = lattice_points(&inner, &handle.level_period(t)?);
    let count = grid.card();
    if count.is_zero() {
        return Err(Error::InvalidInput("I_{t,n}(g) is empty".into()));
    }
    if &count * dt.card() > BigInt::from(cell_budget) {
        return Err(Error::CellBudgetExceeded { needed: u128::MAX, budget: cell_budget });
    }
    let gammas: Vec<LatticeVector> = grid.points().collect();
    let hits = gammas
        .par_iter()
        .map(|gm| block_at(handle, &dt, gm).map(|blk| (blk.letters == b.letters) as u64))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum::<u64>();
    Ok(BigRational::new(BigInt::from(hits), count))
}
