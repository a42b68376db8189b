//! Acceptance criteria 1-9, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so every line is printed; the process
//! exits nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;

use toeplitz_core::analysis::{ap, census, census_scan, entropy_estimates, unique_ergodicity_probe, Census, CensusMode};
use toeplitz_core::blocks::DEFAULT_CELL_BUDGET;
use toeplitz_core::interval::{ln_int, Interval};
use toeplitz_core::lattice::{add, lv, DiagonalMatrix, DiagonalScale, DomainFamily, FundamentalDomain, Offsets};
use toeplitz_core::planner::{certify, lambda_lower_bound, plan, prime_sequences, PlannerConfig, Verdict};
use toeplitz_core::skew::{
    carry_closed_form, derived_window, epsilon_t, pi_t, skew_equivariance_check, DerivedAlphabet,
};
use toeplitz_core::theta::{decompose, theta};
use toeplitz_core::toeplitz::{theorem_a_pipeline, ArrayHandle, EssentialVerdict, FnArray, SubstitutionMap};
use toeplitz_core::toy::{per_comparison, standard_toys, toy_line, Oracle};
use toeplitz_core::Letter;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e<T: std::fmt::Display>(x: T) -> String {
    x.to_string()
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took <= limit, format!("took {:?}, limit {:?}", took, limit))
}

fn ratio(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

fn c1_theta_fixture() -> Outcome {
    let q = [[2u64, 2], [2, 3], [2, 2], [3, 2]].iter().map(|v| DiagonalMatrix::from_u64(v)).collect::<Result<Vec<_>, _>>().map_err(e)?;
    let scale = DiagonalScale::from_increments(q).map_err(e)?;
    let offs = Offsets::Explicit(vec![lv(&[0, -1]), lv(&[-2, -3]), lv(&[-2, -9]), lv(&[-10, -9])]);
    let fam = DomainFamily::from_scale(&scale, &offs).map_err(e)?;
    let start = Instant::now();
    let dec = decompose(&fam, &lv(&[10, 5]), 16).map_err(e)?;
    let took = start.elapsed();
    let want = vec![lv(&[0, -1]), lv(&[-2, 0]), lv(&[4, -6]), lv(&[8, 12])];
    ensure(dec.components == want, format!("got {:?}", dec.components))?;
    ensure(took < Duration::from_millis(1), format!("took {:?}", took))?;
    Ok(format!("θ_1..θ_4 = (0,-1), (-2,0), (4,-6), (8,12) in {:?}", took))
}

fn c2_carry_closed_form() -> Outcome {
    let start = Instant::now();
    let mut pairs = 0;
    for p in [2u64, 3, 5, 8] {
        let q = vec![DiagonalMatrix::from_u64(&[p]).map_err(e)?, DiagonalMatrix::from_u64(&[2]).map_err(e)?];
        let fam = DomainFamily::from_scale(&DiagonalScale::from_increments(q).map_err(e)?, &Offsets::Unshifted).map_err(e)?;
        let dt = fam.domain(1).map_err(e)?;
        for c in dt.points() {
            for d in dt.points() {
                let got = epsilon_t(&fam, &c, &d, 1).map_err(e)?;
                let (ci, di) = (c[0].clone(), d[0].clone());
                let want = if di < BigInt::from(p) - &ci { 0 } else { 1 };
                ensure(got == lv(&[want]), format!("P = {}, c = {}, d = {}: {:?}", p, ci, di, got))?;
                let cu: u64 = ci.try_into().unwrap();
                let du: u64 = di.try_into().unwrap();
                ensure(carry_closed_form(p, cu, du) == want, "closed form helper disagrees")?;
                pairs += 1;
            }
        }
    }
    within(start, Duration::from_secs(1))?;
    Ok(format!("{} pairs over P in {{2, 3, 5, 8}}", pairs))
}

fn c3_skew_example() -> Outcome {
    let start = Instant::now();
    let q = vec![DiagonalMatrix::from_u64(&[2]).map_err(e)?, DiagonalMatrix::from_u64(&[2]).map_err(e)?];
    let fam = DomainFamily::from_scale(&DiagonalScale::from_increments(q).map_err(e)?, &Offsets::Unshifted).map_err(e)?;
    // x = ...0100 0100..., period 4, x(g) = 1 iff g = 1 mod 4
    let x = FnArray { d: 1, f: |g: &[BigInt]| (g[0].mod_floor(&BigInt::from(4)) == BigInt::from(1)) as Letter };
    let t = 1;
    let alphabet = DerivedAlphabet::scan(&x, &fam, t, t + 1).map_err(e)?;
    ensure(alphabet.len() == 2, format!("derived alphabet has {} letters", alphabet.len()))?;
    let window = FundamentalDomain::new(0, lv(&[-8]), vec![BigInt::from(16)]);
    let one = lv(&[1]);
    // (0 + 2Z, x^(t)) goes to (1 + 2Z, x^(t))
    let v0 = skew_equivariance_check(&x, &fam, &lv(&[0]), &one, t, &window, &alphabet).map_err(e)?;
    ensure(v0.passed() && v0.carry == lv(&[0]), format!("from 0 + 2Z: {:?}", v0))?;
    ensure(pi_t(&fam, &one, t).map_err(e)? == lv(&[1]), "π_t(1·x) is not 1")?;
    // (1 + 2Z, x^(t)) goes to (0 + 2Z, S x^(t))
    let v1 = skew_equivariance_check(&x, &fam, &one, &one, t, &window, &alphabet).map_err(e)?;
    ensure(v1.passed() && v1.carry == lv(&[1]), format!("from 1 + 2Z: {:?}", v1))?;
    ensure(pi_t(&fam, &lv(&[2]), t).map_err(e)? == lv(&[0]), "π_t(2·x) is not 0")?;
    let shifted = FundamentalDomain::new(0, lv(&[-7]), vec![BigInt::from(16)]);
    let lhs = derived_window(&x, &fam, &lv(&[2]), t, &window, &alphabet).map_err(e)?;
    let rhs = derived_window(&x, &fam, &lv(&[0]), t, &shifted, &alphabet).map_err(e)?;
    ensure(lhs == rhs, "(2·x)^(t) is not the shift of x^(t)")?;
    let base = derived_window(&x, &fam, &lv(&[0]), t, &window, &alphabet).map_err(e)?;
    ensure(base != lhs, "shift acts trivially on the window")?;
    within(start, Duration::from_secs(1))?;
    Ok(format!("1 maps (0+2Z, x') to (1+2Z, x') with carry 0 and (1+2Z, x') to (0+2Z, S x') with carry 1, {} cells", lhs.len()))
}

fn c4_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let toys = standard_toys();
    ensure(toys.len() >= 3, "fewer than three toy plans")?;
    let mut notes = Vec::new();
    for toy in &toys {
        ensure(toy.dim() <= 2 && toy.k <= 4 && toy.levels() >= 3, format!("{} is outside the toy envelope", toy.name))?;
        let h = toy.handle().map_err(e)?;
        let o = Oracle::build(toy).map_err(e)?;
        let lim = o.limit().map_err(e)?;
        let d3 = h.level_domain(3).map_err(e)?;
        let mut cells = 0;
        for (g, &a) in lim.domain().points().zip(&lim.letters) {
            ensure(h.x_eval(&g).map_err(e)? == a, format!("{}: x_eval differs from the limit at {:?}", toy.name, g))?;
            cells += d3.contains(&g) as usize;
        }
        ensure(cells as u64 == d3.card().try_into().unwrap_or(u64::MAX), format!("{}: limit does not cover D_3", toy.name))?;
        let mut per = 0;
        for n in 1..=2 {
            let r = per_comparison(&h, &o, &lim, n).map_err(e)?;
            ensure(r.passed(), format!("{}: Per-sets differ at n = {}: {:?} {:?}", toy.name, n, r.formula_only, r.unwitnessed))?;
            per += r.checked;
        }
        let mut aps = 0;
        for t in 1..o.levels() {
            let Census::Blocks(bs) = census(&h, t, CensusMode::Scan, DEFAULT_CELL_BUDGET).map_err(e)? else {
                return Err("scan census unavailable".into());
            };
            let mut got: Vec<_> = bs.iter().map(|b| b.letters.clone()).collect();
            let mut want = o.blocks[t].clone();
            got.sort();
            want.sort();
            ensure(got == want, format!("{}: census differs at t = {}", toy.name, t))?;
            let step = h.level_period(t).map_err(e)?;
            for i in 1..=o.blocks[t].len() {
                for j in 1..=o.blocks[t + 1].len() {
                    let v = ap(&o.block_patch(t, i), &o.block_patch(t + 1, j), &step).map_err(e)?;
                    ensure(v == o.ap(t, i, t + 1, j), format!("{}: ap({}, {}) differs at t = {}", toy.name, i, j, t))?;
                    aps += 1;
                }
            }
        }
        notes.push(format!("{}: {} cells, {} Per points, {} ap entries", toy.name, lim.len(), per, aps));
    }
    within(start, Duration::from_secs(60))?;
    Ok(format!("{} in {:?}", notes.join("; "), start.elapsed()))
}

fn c5_theorem_mode() -> Outcome {
    let start = Instant::now();
    let cfg = PlannerConfig::default();
    let h = ratio(3, 10);
    let p = plan(5, 2, &h, &cfg).map_err(e)?;
    ensure(p.m == 7 && p.n == 2, format!("M = {}, N = {}", p.m, p.n))?;
    let certs = certify(&p).map_err(e)?;
    if let Some(c) = certs.iter().find(|c| c.verdict != Verdict::Pass) {
        return Err(c.to_string());
    }
    let handle = ArrayHandle::from_plan(p.clone(), 64).map_err(e)?;
    let rep = unique_ergodicity_probe(&handle, 1, 50, 0, DEFAULT_CELL_BUDGET).map_err(e)?;
    let b_count = rep.entries.iter().map(|x| x.0.clone()).collect::<std::collections::BTreeSet<_>>().len();
    let c_count = rep.entries.iter().map(|x| x.1.clone()).collect::<std::collections::BTreeSet<_>>().len();
    let quarter = ratio(1, 24);
    ensure(rep.entries.iter().all(|x| x.2 == quarter), format!("ap spread {}..{}", rep.min, rep.max))?;
    ensure(b_count == 24 && c_count >= 50, format!("{} B blocks, {} C blocks", b_count, c_count))?;
    let rows = entropy_estimates(&handle, &[p.n], p.precision).map_err(e)?;
    let prec = p.precision;
    let hi = Interval::from_ratio(h.numer(), h.denom(), prec);
    let lo_b = hi.add(&Interval::from_ratio(&BigInt::from(3), &BigInt::from(120), prec), prec);
    let ln7 = ln_int(&BigInt::from(7), prec);
    let hi_b = hi.add(&ln7.mul(&Interval::from_int(2), prec).add(&Interval::from_int(3), prec).div(&Interval::from_int(120), prec), prec);
    let bracket = Interval::new(lo_b.lo.clone(), hi_b.hi.clone());
    ensure(rows[0].estimate.is_subset_of(&bracket), format!("estimate {} outside {}", rows[0].estimate.to_text(), bracket.to_text()))?;
    within(start, Duration::from_secs(300))?;
    Ok(format!(
        "M = 7, N = 2, {} certificates pass, ap = 1/24 on {} x {} pairs, estimate {:.6} in [{:.6}, {:.6}]",
        certs.len(),
        b_count,
        c_count,
        rows[0].estimate.mid_f64(),
        bracket.lo.to_f64(),
        bracket.hi.to_f64()
    ))
}

fn c6_substitution() -> Outcome {
    let start = Instant::now();
    let toy = toy_line();
    let base = toy.handle().map_err(e)?;
    let s = SubstitutionMap::canonical(2, vec![2]).map_err(e)?;
    ensure(s.source_alphabet == toy.k, "substitution does not match the toy alphabet")?;
    let sub = base.substitute(s.clone()).map_err(e)?;
    let mut checked = 0;
    for t in 1..toy.levels() {
        let bx = census_scan(&base, t, t + 1, DEFAULT_CELL_BUDGET).map_err(e)?;
        let bs = census_scan(&sub, t, t + 1, DEFAULT_CELL_BUDGET).map_err(e)?;
        ensure(bx.len() == bs.len(), format!("t = {}: {} blocks vs {} substituted", t, bx.len(), bs.len()))?;
        let mut img: Vec<_> = bx.iter().map(|b| s.apply_patch(b).letters).collect();
        let mut got: Vec<_> = bs.iter().map(|b| b.letters.clone()).collect();
        img.sort();
        got.sort();
        ensure(img == got, format!("t = {}: substituted census is not the image", t))?;
        if t + 1 < toy.levels() {
            let cx = census_scan(&base, t + 1, t + 2, DEFAULT_CELL_BUDGET).map_err(e)?;
            let step = base.level_period(t).map_err(e)?;
            let sstep = sub.level_period(t).map_err(e)?;
            for b in &bx {
                for c in &cx {
                    let v = ap(b, c, &step).map_err(e)?;
                    let w = ap(&s.apply_patch(b), &s.apply_patch(c), &sstep).map_err(e)?;
                    ensure(v == w, format!("t = {}: ap {} vs {}", t, v, w))?;
                    checked += 1;
                }
            }
        }
    }
    let levels: Vec<usize> = (1..toy.levels()).collect();
    let prec = 128;
    let ex = entropy_estimates(&base, &levels, prec).map_err(e)?;
    let es = entropy_estimates(&sub, &levels, prec).map_err(e)?;
    let cells = Interval::from_int(2);
    for (a, b) in ex.iter().zip(&es) {
        let scaled = a.estimate.div(&cells, prec);
        ensure(scaled.lo <= b.estimate.hi && b.estimate.lo <= scaled.hi, format!("level {}: estimates do not scale by 1/#F", a.n))?;
        let count = census_scan(&sub, a.n, a.n + 1, DEFAULT_CELL_BUDGET).map_err(e)?.len();
        let fn_card = sub.level_domain(a.n).map_err(e)?.card();
        let direct = ln_int(&BigInt::from(count), prec).div(&Interval::from_int(fn_card), prec);
        ensure(direct.lo <= b.estimate.hi && b.estimate.lo <= direct.hi, format!("level {}: ln #W / #F_n disagrees", a.n))?;
    }
    within(start, Duration::from_secs(30))?;
    Ok(format!("census preserved at levels 1..{}, {} ap entries equal, entropy scaled by 1/2", toy.levels() - 1, checked))
}

fn c7_theorem_a() -> Outcome {
    let start = Instant::now();
    let cfg = PlannerConfig::default();
    let ta = theorem_a_pipeline(2, 2, &ratio(1, 10), &cfg, 64).map_err(e)?;
    ensure(ta.s == 9, format!("s = {}", ta.s))?;
    let y = &ta.handle;
    let s = y.substitution.clone().ok_or("handle is not substituted")?;
    let fam = &y.construction.fam;
    let top = fam.max_exact_level();
    let n = 1;
    // test box: the corner of F_1, which lies in the evaluable strip
    let f1 = y.level_domain(n).map_err(e)?;
    let period = y.level_period(n).map_err(e)?;
    let sides: Vec<BigInt> = f1.sides.iter().map(|v| v.min(&BigInt::from(48)).clone()).collect();
    let bx = FundamentalDomain::new(0, f1.lower.clone(), sides);
    let (mut periodic, mut excluded, mut shifts_checked) = (0, 0, 0);
    for g in bx.points() {
        let d = s.split(&g).1;
        if !fam.contains(top, &d).map_err(e)? {
            continue;
        }
        // θ^Δ_0(g) = f, θ^Δ_i(g) = P θ_i(d)
        let formula = (1..=n).any(|i| theta(fam, &d, i).map(|t| t.iter().all(|c| c == &BigInt::from(0))).unwrap_or(false));
        ensure(y.per_membership(&g, n).map_err(e)? == formula, format!("per_membership disagrees with θ^Δ at {:?}", g))?;
        let a = y.x_eval(&g).map_err(e)?;
        if formula {
            for i in 0..g.len() {
                for m in [-2i64, -1, 1, 2] {
                    let mut delta = vec![BigInt::from(0); g.len()];
                    delta[i] = &period[i] * m;
                    let gd = add(&g, &delta);
                    if !fam.contains(top, &s.split(&gd).1).map_err(e)? {
                        continue;
                    }
                    ensure(y.x_eval(&gd).map_err(e)? == a, format!("{:?} is in the formula set but y changes along {:?}", g, delta))?;
                    shifts_checked += 1;
                }
            }
            periodic += 1;
        } else {
            let delta = y.exclusion_witness(&g, n).map_err(e)?;
            ensure(delta.iter().zip(&period).all(|(c, p)| c.is_multiple_of(p)), "exclusion witness is outside the level lattice")?;
            ensure(y.x_eval(&add(&g, &delta)).map_err(e)? != a, "exclusion witness keeps the letter")?;
            excluded += 1;
        }
    }
    ensure(periodic > 0 && excluded > 0 && shifts_checked > 0, format!("box too thin: {} periodic, {} excluded, {} shifts", periodic, excluded, shifts_checked))?;
    let zero = vec![BigInt::from(0); 2];
    ensure(y.x_eval(&zero).map_err(e)? == 0, "y(0) is not 0")?;
    let mut rejected = 0;
    for h in FundamentalDomain::new(0, zero.clone(), vec![BigInt::from(3); 2]).points().skip(1) {
        match y.essential_period_check(n, &h).map_err(e)? {
            EssentialVerdict::Witness { g, alpha, pinned } => {
                ensure(pinned && g == zero && alpha == 0, format!("h = {:?}: witness {:?} letter {} pinned {}", h, g, alpha, pinned))?;
                ensure(y.x_eval(&h).map_err(e)? == 1, format!("y({:?}) is not 1", h))?;
            }
            EssentialVerdict::InLattice => return Err(format!("h = {:?} reported in the lattice", h)),
        }
        rejected += 1;
    }
    ensure(rejected == 8, format!("{} shifts rejected", rejected))?;
    within(start, Duration::from_secs(300))?;
    Ok(format!(
        "s = 9; {} periodic ({} shifts) and {} excluded positions on the box; {} shifts in F\\{{0}} rejected by S(0)",
        periodic, shifts_checked, excluded, rejected
    ))
}

fn c8_sequences() -> Outcome {
    let start = Instant::now();
    let cfg = PlannerConfig::default();
    let seq = prime_sequences(5, 2, &cfg).map_err(e)?;
    let f23: BigInt = (1..=23u32).map(BigInt::from).product();
    let want_p = vec![BigInt::from(1), BigInt::from(5), BigInt::from(120)];
    let want_q = vec![BigInt::from(5), BigInt::from(24), f23];
    ensure(seq.p == want_p && seq.q == want_q, format!("p = {:?}, q = {:?}", seq.p, seq.q))?;
    let l = &seq.lambda;
    ensure(l[1].certainly_lt(&l[0]) && l[2].certainly_lt(&l[1]), "λ is not certified decreasing")?;
    let lo = Interval::from_ratio(&BigInt::from(4299), &BigInt::from(10000), 128);
    let hi = Interval::from_ratio(&BigInt::from(4302), &BigInt::from(10000), 128);
    ensure(lo.certainly_le(&l[2]) && l[2].certainly_le(&hi), format!("λ_2 = {}", l[2].to_text()))?;
    let lb = lambda_lower_bound(5, 2, &cfg).map_err(e)?;
    let lo = Interval::from_ratio(&BigInt::from(388), &BigInt::from(1000), 128);
    let hi = Interval::from_ratio(&BigInt::from(389), &BigInt::from(1000), 128);
    ensure(lo.certainly_le(&lb.value) && lb.value.certainly_le(&hi), format!("λ bound = {}", lb.value.to_text()))?;
    within(start, Duration::from_secs(1))?;
    Ok(format!("(1,5), (5,24), (120,23!); λ_2 ≈ {:.5}; bound ≈ {:.5}", l[2].mid_f64(), lb.value.mid_f64()))
}

fn run_cli(args: &[&str], threads: &str) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_toeplitz-forge"))
        .args(args)
        .env("RAYON_NUM_THREADS", threads)
        .output()
        .map_err(e)?;
    ensure(out.status.success(), format!("{:?} exited with {:?}: {}", args, out.status.code(), String::from_utf8_lossy(&out.stderr)))?;
    Ok(out.stdout)
}

fn c9_determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("toeplitz-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(e)?;
    let plan_path = dir.join("k5.plan");
    let plan_str = plan_path.to_str().unwrap();
    let plan_args = ["plan", "--k", "5", "--d", "2", "--h", "3/10"];
    let mut runs = Vec::new();
    for threads in ["1", "4", "4"] {
        runs.push(run_cli(&plan_args, threads)?);
    }
    ensure(runs.windows(2).all(|w| w[0] == w[1]), "plan output differs between runs")?;
    std::fs::write(&plan_path, &runs[0]).map_err(e)?;
    let patch_args = ["patch", "--plan", plan_str, "--box", "-20,-1:60,7"];
    let census_args = ["census", "--plan", plan_str, "--level", "1"];
    let mut patches = Vec::new();
    let mut censuses = Vec::new();
    for threads in ["1", "4", "4"] {
        patches.push(run_cli(&patch_args, threads)?);
        censuses.push(run_cli(&census_args, threads)?);
    }
    ensure(patches.windows(2).all(|w| w[0] == w[1]), "patch output differs between runs")?;
    ensure(censuses.windows(2).all(|w| w[0] == w[1]), "census output differs between runs")?;
    let _ = std::fs::remove_dir_all(&dir);
    Ok(format!("plan ({} bytes), patch ({} bytes) and census identical over 3 runs with 1 and 4 threads", runs[0].len(), patches[0].len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("theta fixture", c1_theta_fixture),
        ("carry closed form", c2_carry_closed_form),
        ("skew example", c3_skew_example),
        ("oracle equivalence", c4_oracle_equivalence),
        ("theorem mode k=5 d=2 h=3/10", c5_theorem_mode),
        ("substitution laws", c6_substitution),
        ("theorem A pipeline k=2 d=2 h=1/10", c7_theorem_a),
        ("sequence table", c8_sequences),
        ("determinism", c9_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {} {}: {}", i + 1, name, detail),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {}: {}", i + 1, name, detail);
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
