//! The θ decomposition maps and essential-period witnesses.
//!
//! For nested box domains the top-down peeling of the definition collapses to
//! `θ_n(g) = ψ_n(g) − ψ_{n−1}(g)` with `ψ_0 = 0`: the projection `ψ_n(g)` lies
//! in `D_n`, its own level-(n−1) projection is `ψ_{n−1}(g)`, and the difference
//! is the `Γ_{n−1}` part of `ψ_n(g)`. Each query is O(d) per level.

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::lattice::{is_zero_vec, sub, zero_vec, DomainFamily, LatticeVector};

/// `θ_1(g), …, θ_m(g)` where `m ≥ 1` is the least level with `g ∈ D_m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThetaDecomposition {
    pub components: Vec<LatticeVector>,
}

impl ThetaDecomposition {
    pub fn depth(&self) -> usize {
        self.components.len()
    }

    /// `θ_i(g)` with the convention `θ_i(g) = 0` beyond the depth.
    pub fn get(&self, i: usize) -> Option<LatticeVector> {
        if i == 0 {
            return None;
        }
        Some(self.components.get(i - 1).cloned().unwrap_or_else(|| zero_vec(self.dim())))
    }

    fn dim(&self) -> usize {
        self.components.first().map(|c| c.len()).unwrap_or(0)
    }
}

/// `θ_n(g)` for `n ≥ 1`.
pub fn theta(fam: &DomainFamily, g: &[BigInt], n: usize) -> Result<LatticeVector> {
    if n == 0 {
        return Err(Error::InvalidInput("θ maps are indexed from 1".into()));
    }
    let hi = fam.coset_project(g, n)?;
    let lo = fam.coset_project(g, n - 1)?;
    Ok(sub(&hi, &lo))
}

/// Least `m ≥ 1` with `g ∈ D_m`, searching up to `depth_budget`.
pub fn depth_of(fam: &DomainFamily, g: &[BigInt], depth_budget: usize) -> Result<usize> {
    let top = depth_budget.min(fam.max_level());
    for m in 1..=top {
        if fam.contains(m, g)? {
            return Ok(m);
        }
    }
    Err(Error::DepthBudgetExceeded(format!(
        "point {} lies in no domain up to level {}",
        crate::lattice::fmt_vec(g),
        top
    )))
}

/// Full decomposition of `g`.
pub fn decompose(fam: &DomainFamily, g: &[BigInt], depth_budget: usize) -> Result<ThetaDecomposition> {
    let m = depth_of(fam, g, depth_budget)?;
    let mut components = Vec::with_capacity(m);
    let mut prev = fam.coset_project(g, 0)?;
    for n in 1..=m {
        let cur = fam.coset_project(g, n)?;
        components.push(sub(&cur, &prev));
        prev = cur;
    }
    Ok(ThetaDecomposition { components })
}

/// Smallest `n ≥ 1` with `θ_n(g) = 0`.
///
/// Levels beyond the computed depth are reached through nesting only: if
/// `g ∈ D_{n−1}` then `θ_n(g) = 0` without knowing `D_n`.
pub fn min_zero_level(fam: &DomainFamily, g: &[BigInt], depth_budget: usize) -> Result<usize> {
    let mut prev = fam.coset_project(g, 0)?;
    for n in 1..=depth_budget {
        if n <= fam.max_level() {
            let cur = fam.coset_project(g, n)?;
            if cur == prev {
                return Ok(n);
            }
            prev = cur;
        } else {
            if fam.contains(n - 1, g)? {
                return Ok(n);
            }
            break;
        }
    }
    Err(Error::DepthBudgetExceeded(format!(
        "no vanishing θ component for {} up to level {}",
        crate::lattice::fmt_vec(g),
        depth_budget.min(fam.max_level() + 1)
    )))
}

/// Lexicographically least nonzero point of `D_i ∩ Γ_{i−1}`.
pub fn least_nonzero_generator(fam: &DomainFamily, i: usize) -> Result<LatticeVector> {
    let grid = fam.grid(i, i - 1)?;
    let first = grid.unrank(&BigInt::from(0)).ok_or_else(|| Error::InvalidInput(format!("D_{} ∩ Γ_{} is empty", i, i - 1)))?;
    if !is_zero_vec(&first) {
        return Ok(first);
    }
    grid.unrank(&BigInt::from(1))
        .ok_or_else(|| Error::InvalidInput(format!("D_{} ∩ Γ_{} has no nonzero point", i, i - 1)))
}

/// Witness `g` for the essential-period argument: `θ_i(g) = 0` exactly where
/// `θ_i(h) ≠ 0` (for `i ∈ index_set`), and the least nonzero generator elsewhere.
pub fn essential_witness(fam: &DomainFamily, h: &[BigInt], index_set: &[usize]) -> Result<LatticeVector> {
    let mut any = false;
    let mut g = zero_vec(fam.dim());
    for &i in index_set {
        let th = theta(fam, h, i)?;
        if is_zero_vec(&th) {
            let gen = least_nonzero_generator(fam, i)?;
            g = crate::lattice::add(&g, &gen);
        } else {
            any = true;
        }
    }
    if !any {
        return Err(Error::InvalidInput(format!(
            "θ_i({}) = 0 for every i in the index set; no witness exists",
            crate::lattice::fmt_vec(h)
        )));
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{lv, DiagonalMatrix, DiagonalScale, Offsets};

    fn example_family() -> DomainFamily {
        let q = vec![
            DiagonalMatrix::from_u64(&[2, 2]).unwrap(),
            DiagonalMatrix::from_u64(&[2, 3]).unwrap(),
            DiagonalMatrix::from_u64(&[2, 2]).unwrap(),
            DiagonalMatrix::from_u64(&[3, 2]).unwrap(),
        ];
        let scale = DiagonalScale::from_increments(q).unwrap();
        let offs = Offsets::Explicit(vec![lv(&[0, -1]), lv(&[-2, -3]), lv(&[-2, -9]), lv(&[-10, -9])]);
        DomainFamily::from_scale(&scale, &offs).unwrap()
    }

    #[test]
    fn example_fixture() {
        let fam = example_family();
        let dec = decompose(&fam, &lv(&[10, 5]), 10).unwrap();
        assert_eq!(dec.components, vec![lv(&[0, -1]), lv(&[-2, 0]), lv(&[4, -6]), lv(&[8, 12])]);
        assert_eq!(min_zero_level(&fam, &lv(&[10, 5]), 10).unwrap(), 5);
    }

    #[test]
    fn zero_point() {
        let fam = example_family();
        let dec = decompose(&fam, &lv(&[0, 0]), 10).unwrap();
        assert_eq!(dec.components, vec![lv(&[0, 0])]);
        assert_eq!(min_zero_level(&fam, &lv(&[0, 0]), 10).unwrap(), 1);
    }

    #[test]
    fn budget_exceeded() {
        let fam = example_family();
        assert!(matches!(decompose(&fam, &lv(&[100, 0]), 10), Err(Error::DepthBudgetExceeded(_))));
        assert!(matches!(min_zero_level(&fam, &lv(&[10, 5]), 3), Err(Error::DepthBudgetExceeded(_))));
    }

    #[test]
    fn witness_pattern() {
        let fam = example_family();
        let h = lv(&[1, 0]);
        let g = essential_witness(&fam, &h, &[1, 2]).unwrap();
        for i in 1..=2 {
            let th = theta(&fam, &h, i).unwrap();
            let tg = theta(&fam, &g, i).unwrap();
            assert_eq!(is_zero_vec(&tg), !is_zero_vec(&th));
            assert!(!is_zero_vec(&theta(&fam, &crate::lattice::add(&g, &h), i).unwrap()));
        }
        assert!(essential_witness(&fam, &lv(&[0, 0]), &[1, 2]).is_err());
    }
}
