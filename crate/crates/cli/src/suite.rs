//! The `verify` suite: invariant checks on one array, each reported with a
//! verdict and a short detail (the first failing witness on failure).

use num_bigint::BigInt;

use toeplitz_core::analysis::{ap, census, entropy_estimates, unique_ergodicity_probe, Census, CensusMode};
use toeplitz_core::formats::coords;
use toeplitz_core::lattice::{add, lv, DiagonalMatrix, DiagonalScale, DomainFamily, FundamentalDomain, Offsets};
use toeplitz_core::planner::{certify, Verdict};
use toeplitz_core::skew::{carry_closed_form, epsilon_t, skew_equivariance_check, DerivedAlphabet};
use toeplitz_core::theta::decompose;
use toeplitz_core::toeplitz::ArrayHandle;
use toeplitz_core::toy::{per_comparison, Oracle};
use toeplitz_core::{Error, Result};

use crate::Source;

pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: impl Into<String>) -> Check {
    Check { name: name.into(), passed, detail: detail.into() }
}

/// Box of side `3 P_1` (at most 64 per axis) around `D_1`, clipped to the
/// top exact domain.
fn sample_box(h: &ArrayHandle) -> Result<FundamentalDomain> {
    let d1 = h.level_domain(1)?;
    let p1 = h.level_period(1)?;
    let top = h.construction.fam.domain(h.construction.fam.max_exact_level())?;
    let cap = BigInt::from(64);
    let lower: Vec<BigInt> = d1.lower.iter().zip(&p1).zip(&top.lower).map(|((l, p), t)| (l - p).max(t.clone())).collect();
    let upper = top.upper_exclusive();
    let sides = lower
        .iter()
        .zip(&p1)
        .zip(&upper)
        .map(|((l, p), u)| (p * 3u32).min(cap.clone()).min(u - l))
        .collect();
    Ok(FundamentalDomain::new(1, lower, sides))
}

fn family_check(h: &ArrayHandle) -> Result<Check> {
    let c = &h.construction;
    for n in 1..=c.families.len().min(c.fam.max_exact_level()) {
        if let Err(e) = c.validate_family(n) {
            return Ok(check("family structure", false, e.to_string()));
        }
    }
    Ok(check("family structure", true, format!("{} levels", c.families.len().min(c.fam.max_exact_level()))))
}

fn theta_check(h: &ArrayHandle, window: &FundamentalDomain) -> Result<Check> {
    let fam = &h.construction.fam;
    let mut count = 0;
    for g in window.points() {
        let dec = decompose(fam, &g, h.construction.depth_budget)?;
        let mut sum = vec![BigInt::from(0); g.len()];
        for (i, c) in dec.components.iter().enumerate() {
            if !fam.contains(i + 1, c)? || !fam.in_gamma(i, c)? {
                return Ok(check("theta decomposition", false, format!("θ_{}({}) = {} out of place", i + 1, coords(&g), coords(c))));
            }
            sum = add(&sum, c);
        }
        if sum != g {
            return Ok(check("theta decomposition", false, format!("components of {} do not sum back", coords(&g))));
        }
        count += 1;
    }
    Ok(check("theta decomposition", true, format!("{} points", count)))
}

fn per_check(h: &ArrayHandle, window: &FundamentalDomain) -> Result<Check> {
    let p1 = h.level_period(1)?;
    let d = h.dim();
    let k = h.alphabet() as u32;
    let mut shifts = Vec::new();
    for i in 0..d {
        for m in [-2i64, -1, 1, 2] {
            let mut v = lv(&vec![0; d]);
            v[i] = &p1[i] * m;
            shifts.push(v);
        }
    }
    let fam = &h.construction.fam;
    let top = fam.max_exact_level();
    let (mut periodic, mut witnessed) = (0, 0);
    for g in window.points() {
        let a = h.x_eval(&g)?;
        if h.per_membership(&g, 1)? {
            for s in &shifts {
                let t = add(&g, s);
                if !fam.contains(top, &t)? {
                    continue;
                }
                if h.x_eval(&t)? != a {
                    return Ok(check("periodic positions", false, format!("{} is in the formula set but x changes by {}", coords(&g), coords(s))));
                }
            }
            periodic += 1;
        } else {
            for alpha in 1..k {
                let gamma = h.aperiodicity_witness(&g, 1, alpha)?;
                if !h.construction.fam.in_gamma(1, &gamma)? || h.x_eval(&add(&g, &gamma))? != alpha {
                    return Ok(check("periodic positions", false, format!("bad witness for letter {} at {}", alpha, coords(&g))));
                }
            }
            witnessed += 1;
        }
    }
    Ok(check("periodic positions", true, format!("{} periodic, {} excluded with witnesses for every letter", periodic, witnessed)))
}

fn coverage(h: &ArrayHandle) -> Result<Check> {
    let c = &h.construction;
    let top = c.fam.max_exact_level();
    let mut levels = 0;
    for n in 1..=top.min(c.families.len()) {
        if !c.fam.is_exact(n) || c.q(n - 1).is_err() {
            continue;
        }
        let v = c.coverage_check(n)?;
        if !v.passed() {
            return Ok(check("coverage", false, format!("level {}: {:?}", n, v)));
        }
        levels += 1;
    }
    Ok(check("coverage", true, format!("{} levels", levels)))
}

fn carry_closed_form_check() -> Result<Check> {
    for p in [2u64, 3, 5, 8] {
        let q = vec![DiagonalMatrix::from_u64(&[p])?, DiagonalMatrix::from_u64(&[2])?];
        let fam = DomainFamily::from_scale(&DiagonalScale::from_increments(q)?, &Offsets::Unshifted)?;
        for c in 0..p {
            for d in 0..p {
                let e = epsilon_t(&fam, &lv(&[c as i64]), &lv(&[d as i64]), 1)?;
                if e != lv(&[carry_closed_form(p, c, d)]) {
                    return Ok(check("carry closed form", false, format!("P = {}, c = {}, d = {}", p, c, d)));
                }
            }
        }
    }
    Ok(check("carry closed form", true, "P in {2, 3, 5, 8}"))
}

fn cocycle_check(h: &ArrayHandle, window: &FundamentalDomain) -> Result<Check> {
    let fam = &h.construction.fam;
    let pts: Vec<_> = window.points().step_by(7).take(12).collect();
    let t = 1;
    for g1 in &pts {
        for g2 in &pts {
            for p in pts.iter().take(4) {
                let lhs = epsilon_t(fam, &add(g1, g2), p, t)?;
                let rhs = add(&epsilon_t(fam, g2, &fam.coset_project(&add(g1, p), t)?, t)?, &epsilon_t(fam, g1, p, t)?);
                if lhs != rhs {
                    return Ok(check("carry cocycle", false, format!("g1 = {}, g2 = {}, h = {}", coords(g1), coords(g2), coords(p))));
                }
            }
        }
    }
    Ok(check("carry cocycle", true, format!("{} triples", pts.len() * pts.len() * pts.len().min(4))))
}

fn skew_check(h: &ArrayHandle) -> Result<Check> {
    let fam = &h.construction.fam;
    let t = 1;
    let alphabet = DerivedAlphabet::scan(h, fam, t, t + 1)?;
    let d = h.dim();
    // one cell inside the top exact domain, so that moves by -1 stay evaluable
    let top = fam.domain(fam.max_exact_level())?;
    let lower = top.lower.iter().map(|l: &BigInt| (l + 1u32).max(BigInt::from(-1))).collect();
    let window = FundamentalDomain::new(0, lower, vec![BigInt::from(3); d]);
    // moves along the first axis stay inside the evaluable domains
    let mut moves = Vec::new();
    for m in [1i64, -1, 3] {
        let mut e = vec![0; d];
        e[0] = m;
        moves.push(lv(&e));
    }
    moves.push(lv(&vec![1; d]));
    let mut pairs = 0;
    for y in &moves {
        for g in &moves {
            let v = skew_equivariance_check(h, fam, y, g, t, &window, &alphabet)?;
            if !v.passed() {
                return Ok(check("skew product", false, format!("y = {}·x, g = {}: {:?}", coords(y), coords(g), v.mismatches.first())));
            }
            pairs += 1;
        }
    }
    Ok(check("skew product", true, format!("{} pairs, {} derived letters", pairs, alphabet.len())))
}

fn frequency_check(h: &ArrayHandle, seed: u64, budget: u128) -> Result<Check> {
    let rep = unique_ergodicity_probe(h, 1, 50, seed, budget)?;
    let detail = format!("{} pairs, min {}, max {}", rep.entries.len(), rep.min, rep.max);
    Ok(check("frequencies", rep.passed(), detail))
}

fn entropy_check(src: &Source) -> Result<Option<Check>> {
    let Some(p) = &src.plan else { return Ok(None) };
    let levels: Vec<usize> = (p.n..=p.last_level()).collect();
    let rows = entropy_estimates(&src.handle, &levels, p.precision)?;
    for r in &rows {
        if r.in_bracket() == Some(false) {
            return Ok(Some(check("entropy brackets", false, format!("level {}: {} outside bracket", r.n, r.estimate))));
        }
    }
    Ok(Some(check("entropy brackets", true, format!("levels {}..={}", p.n, p.last_level()))))
}

fn oracle_checks(src: &Source, budget: u128) -> Result<Vec<Check>> {
    let Some(toy) = &src.toy else { return Ok(Vec::new()) };
    let h = &src.handle;
    let o = Oracle::build(toy)?;
    let lim = o.limit()?;
    let mut out = Vec::new();
    let mismatch = lim.domain().points().zip(&lim.letters).find_map(|(g, &a)| match h.x_eval(&g) {
        Ok(b) if b == a => None,
        _ => Some(g),
    });
    out.push(match mismatch {
        None => check("oracle limit", true, format!("{} cells", lim.len())),
        Some(g) => check("oracle limit", false, format!("x_eval differs at {}", coords(&g))),
    });
    for n in 1..=2.min(o.levels()) {
        let r = per_comparison(h, &o, &lim, n)?;
        out.push(check(&format!("oracle periodic positions n={}", n), r.passed(), format!("{:?}", (r.checked, r.witnessed, r.formula_only.len(), r.unwitnessed.len()))));
    }
    for t in 1..o.levels() {
        let Census::Blocks(bs) = census(h, t, CensusMode::Scan, budget)? else {
            return Err(Error::Verification("scan census unavailable".into()));
        };
        let mut got: Vec<_> = bs.iter().map(|b| b.letters.clone()).collect();
        let mut want = o.blocks[t].clone();
        got.sort();
        want.sort();
        out.push(check(&format!("oracle census t={}", t), got == want, format!("{} blocks", got.len())));
        let step = h.level_period(t)?;
        let mut ok = true;
        for i in 1..=o.blocks[t].len() {
            for j in 1..=o.blocks[t + 1].len() {
                ok &= ap(&o.block_patch(t, i), &o.block_patch(t + 1, j), &step)? == o.ap(t, i, t + 1, j);
            }
        }
        out.push(check(&format!("oracle ap table t={}", t), ok, format!("{}x{}", o.blocks[t].len(), o.blocks[t + 1].len())));
    }
    Ok(out)
}

/// Runs every applicable check; certificates first, so a corrupted plan
/// fails before any evaluation.
pub fn run(src: &Source, seed: u64, budget: u128) -> anyhow::Result<Vec<Check>> {
    let h = &src.handle;
    if h.substitution.is_some() {
        anyhow::bail!(Error::InvalidInput("verify runs on unsubstituted arrays".into()));
    }
    let mut out = Vec::new();
    if let Some(p) = &src.plan {
        let certs = certify(p)?;
        let bad = certs.iter().find(|c| c.verdict != Verdict::Pass);
        out.push(check("certificates", bad.is_none(), bad.map_or(format!("{} conditions", certs.len()), |c| c.to_string())));
        if bad.is_some() {
            return Ok(out);
        }
    }
    if src.toy.is_some() {
        let c = family_check(h)?;
        let failed = !c.passed;
        out.push(c);
        if failed {
            return Ok(out);
        }
    }
    let window = sample_box(h)?;
    out.push(theta_check(h, &window)?);
    out.push(per_check(h, &window)?);
    out.push(coverage(h)?);
    out.push(frequency_check(h, seed, budget)?);
    if let Some(c) = entropy_check(src)? {
        out.push(c);
    }
    out.push(carry_closed_form_check()?);
    out.push(cocycle_check(h, &window)?);
    out.push(skew_check(h)?);
    out.extend(oracle_checks(src, budget)?);
    Ok(out)
}
