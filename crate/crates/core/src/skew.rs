//! Odometer coordinates and the skew-product description of translates
//! `y = g·x`: `π_t`, the carry `ε_t`, the blocks `W_t(y, γ)` and the derived
//! arrays `y^{(t)}` over the alphabet `W_{D_t}(x)`.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::lattice::{add, fmt_vec, sub, DomainFamily, FundamentalDomain, LatticeVector, Letter};
use crate::toeplitz::Array;

/// Residues `ψ_n(g)`, `n = 0, …, depth`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OdometerCoordinate {
    pub residues: Vec<LatticeVector>,
}

impl OdometerCoordinate {
    pub fn of(fam: &DomainFamily, g: &[BigInt], depth: usize) -> Result<Self> {
        let residues = (0..=depth).map(|n| fam.coset_project(g, n)).collect::<Result<_>>()?;
        Ok(OdometerCoordinate { residues })
    }

    /// Whether each residue reduces to the previous one.
    pub fn is_compatible(&self, fam: &DomainFamily) -> Result<bool> {
        for n in 0..self.residues.len().saturating_sub(1) {
            if fam.coset_project(&self.residues[n + 1], n)? != self.residues[n] {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// `π_t(g·x) = ψ_t(g)`.
pub fn pi_t(fam: &DomainFamily, translation: &[BigInt], t: usize) -> Result<LatticeVector> {
    fam.coset_project(translation, t)
}

fn lattice_offsets(p: &[BigInt], reach: i64) -> Vec<LatticeVector> {
    let d = p.len();
    let side = (2 * reach + 1) as u64;
    let total = side.pow(d as u32);
    (0..total)
        .map(|mut idx| {
            let mut v = vec![BigInt::zero(); d];
            for i in (0..d).rev() {
                v[i] = &p[i] * ((idx % side) as i64 - reach);
                idx /= side;
            }
            v
        })
        .filter(|v| v.iter().any(|c| !c.is_zero()))
        .collect()
}

/// Letter at `h` if `y(h + γ) = y(h)` for all sampled `γ ∈ Γ_t`, else `None`.
fn periodic_letter<A: Array + ?Sized>(x: &A, translation: &[BigInt], h: &[BigInt], offs: &[LatticeVector]) -> Result<Option<Letter>> {
    let base = add(h, translation);
    let a = x.eval(&base)?;
    for o in offs {
        if x.eval(&add(&base, o))? != a {
            return Ok(None);
        }
    }
    Ok(Some(a))
}

/// Checks `Per(y, Γ_t, α) = Per(x, Γ_t, α) − π_t(y)` on a window, with
/// periodicity sampled over `γ ∈ P_t [−reach, reach]^d`.
pub fn pi_t_check<A: Array + ?Sized>(
    x: &A,
    fam: &DomainFamily,
    translation: &[BigInt],
    t: usize,
    window: &FundamentalDomain,
    reach: i64,
) -> Result<bool> {
    let pi = pi_t(fam, translation, t)?;
    let offs = lattice_offsets(&fam.p(t)?.diag, reach);
    let zero = vec![BigInt::zero(); fam.dim()];
    for h in window.points() {
        let lhs = periodic_letter(x, translation, &h, &offs)?;
        let rhs = periodic_letter(x, &zero, &add(&h, &pi), &offs)?;
        if lhs != rhs {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `ε_t(g, h) = P_t^{−1}(−ψ_t(g + h) + g + ψ_t(h))`.
pub fn epsilon_t(fam: &DomainFamily, g: &[BigInt], h: &[BigInt], t: usize) -> Result<LatticeVector> {
    let v = add(&sub(g, &fam.coset_project(&add(g, h), t)?), &fam.coset_project(h, t)?);
    let p = fam.p(t)?.diag;
    v.iter()
        .zip(&p)
        .map(|(a, b)| {
            let (q, r) = a.div_rem(b);
            if r.is_zero() {
                Ok(q)
            } else {
                Err(Error::Verification(format!("ε_t numerator {} is not in Γ_t", fmt_vec(&v))))
            }
        })
        .collect()
}

/// `W_t(y, γ)(d) = y(d + γ − π_t(y))` over `D_t`, with `y = translation·x`.
pub fn w_t<A: Array + ?Sized>(x: &A, fam: &DomainFamily, translation: &[BigInt], gamma: &[BigInt], t: usize) -> Result<Vec<Letter>> {
    let pi = pi_t(fam, translation, t)?;
    let shift = add(&sub(gamma, &pi), translation);
    fam.domain(t)?.points().map(|d| x.eval(&add(&d, &shift))).collect()
}

/// `W_{D_t}(x)` from the blocks at `γ ∈ D_s ∩ Γ_t`, in first-occurrence order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DerivedAlphabet {
    pub t: usize,
    pub blocks: Vec<Vec<Letter>>,
    index: HashMap<Vec<Letter>, usize>,
}

impl DerivedAlphabet {
    pub fn scan<A: Array + ?Sized>(x: &A, fam: &DomainFamily, t: usize, s: usize) -> Result<Self> {
        let zero = vec![BigInt::zero(); fam.dim()];
        let mut blocks = Vec::new();
        let mut index = HashMap::new();
        for gamma in fam.grid(s, t)?.points() {
            let b = w_t(x, fam, &zero, &gamma, t)?;
            if !index.contains_key(&b) {
                index.insert(b.clone(), blocks.len());
                blocks.push(b);
            }
        }
        Ok(DerivedAlphabet { t, blocks, index })
    }

    pub fn index_of(&self, b: &[Letter]) -> Option<usize> {
        self.index.get(b).copied()
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

/// `y^{(t)}(g) = W_t(y, P_t g)` as a letter of the derived alphabet.
pub fn derived_array_eval<A: Array + ?Sized>(
    x: &A,
    fam: &DomainFamily,
    translation: &[BigInt],
    t: usize,
    g: &[BigInt],
    alphabet: &DerivedAlphabet,
) -> Result<usize> {
    let gamma = fam.p(t)?.apply(g);
    let b = w_t(x, fam, translation, &gamma, t)?;
    alphabet
        .index_of(&b)
        .ok_or_else(|| Error::Verification(format!("block at {} is missing from the derived alphabet", fmt_vec(&gamma))))
}

/// Outcome of [`skew_equivariance_check`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SkewVerdict {
    /// `π_t(g·y)` and `g + π_t(y)` agree modulo `Γ_t`.
    pub odometer_ok: bool,
    pub carry: LatticeVector,
    /// Window points where `(g·y)^{(t)}(h) ≠ y^{(t)}(h + ε_t(g, π_t(y)))`.
    pub mismatches: Vec<LatticeVector>,
}

impl SkewVerdict {
    pub fn passed(&self) -> bool {
        self.odometer_ok && self.mismatches.is_empty()
    }
}

/// Checks `π_t(g·y) + Γ_t = g + π_t(y) + Γ_t` and
/// `(g·y)^{(t)}(h) = y^{(t)}(h + ε_t(g, π_t(y)))` for all `h` in the window.
pub fn skew_equivariance_check<A: Array + ?Sized>(
    x: &A,
    fam: &DomainFamily,
    y_translation: &[BigInt],
    g: &[BigInt],
    t: usize,
    window: &FundamentalDomain,
    alphabet: &DerivedAlphabet,
) -> Result<SkewVerdict> {
    let pi_y = pi_t(fam, y_translation, t)?;
    let gy = add(y_translation, g);
    let pi_gy = pi_t(fam, &gy, t)?;
    let odometer_ok = fam.coset_project(&add(g, &pi_y), t)? == pi_gy;
    let carry = epsilon_t(fam, g, &pi_y, t)?;
    let mut mismatches = Vec::new();
    for h in window.points() {
        let lhs = derived_array_eval(x, fam, &gy, t, &h, alphabet)?;
        let rhs = derived_array_eval(x, fam, y_translation, t, &add(&h, &carry), alphabet)?;
        if lhs != rhs {
            mismatches.push(h);
        }
    }
    Ok(SkewVerdict { odometer_ok, carry, mismatches })
}

/// The one-dimensional carry: `1` if `c + d ≥ P_t`, else `0`.
pub fn carry_closed_form(p: u64, c: u64, d: u64) -> i64 {
    if d < p - c {
        0
    } else {
        1
    }
}

/// Derived array on a window as a vector of alphabet indices.
pub fn derived_window<A: Array + ?Sized>(
    x: &A,
    fam: &DomainFamily,
    translation: &[BigInt],
    t: usize,
    window: &FundamentalDomain,
    alphabet: &DerivedAlphabet,
) -> Result<Vec<usize>> {
    window.points().map(|h| derived_array_eval(x, fam, translation, t, &h, alphabet)).collect()
}

/// `|c|` as `i64` for reporting.
pub fn small(v: &[BigInt]) -> Vec<i64> {
    v.iter().map(|c| c.to_i64().unwrap_or(i64::MAX)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{lv, DiagonalMatrix, DiagonalScale, Offsets};
    use crate::toeplitz::FnArray;

    fn fam_p(p: u64) -> DomainFamily {
        let q = vec![DiagonalMatrix::from_u64(&[p]).unwrap(), DiagonalMatrix::from_u64(&[2]).unwrap()];
        DomainFamily::from_scale(&DiagonalScale::from_increments(q).unwrap(), &Offsets::Unshifted).unwrap()
    }

    #[test]
    fn carry_matches_closed_form() {
        for p in [2u64, 3, 5, 8] {
            let fam = fam_p(p);
            for c in 0..p {
                for d in 0..p {
                    let e = epsilon_t(&fam, &lv(&[c as i64]), &lv(&[d as i64]), 1).unwrap();
                    assert_eq!(e, lv(&[carry_closed_form(p, c, d)]));
                }
            }
        }
    }

    #[test]
    fn carry_two_dimensional() {
        let q = vec![DiagonalMatrix::from_u64(&[4, 6]).unwrap()];
        let fam = DomainFamily::from_scale(&DiagonalScale::from_increments(q).unwrap(), &Offsets::Unshifted).unwrap();
        let e = epsilon_t(&fam, &lv(&[3, 5]), &lv(&[2, 2]), 1).unwrap();
        assert_eq!(e, lv(&[1, 1]));
        assert_eq!(epsilon_t(&fam, &lv(&[0, 0]), &lv(&[3, 4]), 1).unwrap(), lv(&[0, 0]));
    }

    #[test]
    fn four_periodic_example() {
        let fam = fam_p(2);
        let x = FnArray { d: 1, f: |g: &[BigInt]| (g[0].mod_floor(&BigInt::from(4)) == BigInt::from(1)) as Letter };
        let alpha = DerivedAlphabet::scan(&x, &fam, 1, 2).unwrap();
        assert_eq!(alpha.blocks, vec![vec![0, 1], vec![0, 0]]);
        let window = FundamentalDomain::new(0, lv(&[-4]), vec![BigInt::from(8)]);
        let one = lv(&[1]);
        let v0 = skew_equivariance_check(&x, &fam, &lv(&[0]), &one, 1, &window, &alpha).unwrap();
        assert!(v0.passed());
        assert_eq!(v0.carry, lv(&[0]));
        let v1 = skew_equivariance_check(&x, &fam, &one, &one, 1, &window, &alpha).unwrap();
        assert!(v1.passed());
        assert_eq!(v1.carry, lv(&[1]));
        assert!(pi_t_check(&x, &fam, &lv(&[5]), 1, &window, 3).unwrap());
        assert_eq!(pi_t(&fam, &lv(&[5]), 1).unwrap(), lv(&[1]));
    }
}
