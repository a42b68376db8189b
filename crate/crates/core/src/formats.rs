//! File formats: plan files, patch text, binary PGM and line records.
//!
//! Plan file (`# toeplitz-forge plan v1`): one `key value` pair per line.
//! Integers are decimal, `h` is an exact rational `p/q`, log-magnitudes are
//! intervals `[m*2^e, m*2^e]` with dyadic endpoints.
//!
//! Patch text: first line `d n_rows n_cols origin_1 … origin_d`, then one row
//! per line with letters separated by single spaces. Columns run along axis 1
//! and rows along axis 2 (increasing); a one-dimensional patch is one row.
//!
//! PGM: binary `P5` with maxval `k − 1`, same row order as the text format.
//!
//! Records (`# toeplitz-forge records v1`): one record per line,
//! `kind key=value key=value …`, rationals as `p/q`. Values are
//! percent-escaped for `%`, space, `=` and newlines.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;

use crate::blocks::Patch;
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::lattice::Letter;
use crate::planner::{ConstructionPlan, LambdaBound, Magnitude};

pub const PLAN_HEADER: &str = "# toeplitz-forge plan v1";
pub const RECORDS_HEADER: &str = "# toeplitz-forge records v1";

fn magnitude_text(m: &Magnitude) -> String {
    match m {
        Magnitude::Exact(v) => format!("exact {}", v),
        Magnitude::Log(i) => format!("log {}", i.to_text()),
    }
}

fn parse_magnitude(s: &str) -> Result<Magnitude> {
    let (kind, rest) = s.split_once(' ').ok_or_else(|| Error::Format(format!("bad magnitude {}", s)))?;
    match kind {
        "exact" => rest.trim().parse().map(Magnitude::Exact).map_err(|_| Error::Format(format!("bad integer {}", rest))),
        "log" => Interval::parse_text(rest).map(Magnitude::Log).ok_or_else(|| Error::Format(format!("bad interval {}", rest))),
        _ => Err(Error::Format(format!("bad magnitude kind {}", kind))),
    }
}

/// Serializes a plan; `parse_plan(&plan_to_text(p)) == p`.
pub fn plan_to_text(p: &ConstructionPlan) -> String {
    let mut s = String::new();
    s.push_str(PLAN_HEADER);
    s.push('\n');
    let _ = writeln!(s, "k {}", p.k);
    let _ = writeln!(s, "d {}", p.d);
    let _ = writeln!(s, "h {}/{}", p.h.numer(), p.h.denom());
    let _ = writeln!(s, "M {}", p.m);
    let _ = writeln!(s, "N {}", p.n);
    let _ = writeln!(s, "lambda_iterations {}", p.lambda.iterations);
    let _ = writeln!(s, "lambda {}", p.lambda.value.to_text());
    let _ = writeln!(s, "digit_budget {}", p.digit_budget);
    let _ = writeln!(s, "precision {}", p.precision);
    for (i, q) in p.q.iter().enumerate() {
        let _ = writeln!(s, "q {} {}", i, magnitude_text(q));
    }
    for (i, v) in p.p.iter().enumerate() {
        let _ = writeln!(s, "p {} {}", i, magnitude_text(v));
    }
    s
}

/// Parses a plan file. Structure only; certification is separate.
pub fn parse_plan(text: &str) -> Result<ConstructionPlan> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(PLAN_HEADER) {
        return Err(Error::Format("missing plan header".into()));
    }
    let mut k = None;
    let mut d = None;
    let mut h = None;
    let mut m = None;
    let mut n = None;
    let mut iters = None;
    let mut lambda = None;
    let mut digit_budget = None;
    let mut precision = None;
    let mut q = Vec::new();
    let mut p = Vec::new();
    for (no, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || Error::Format(format!("plan line {}: {}", no + 2, line));
        let (key, rest) = line.split_once(' ').ok_or_else(bad)?;
        let int = |s: &str| s.trim().parse::<u64>().map_err(|_| bad());
        match key {
            "k" => k = Some(int(rest)?),
            "d" => d = Some(int(rest)? as usize),
            "h" => h = Some(rest.trim().parse::<BigRational>().map_err(|_| bad())?),
            "M" => m = Some(int(rest)?),
            "N" => n = Some(int(rest)? as usize),
            "lambda_iterations" => iters = Some(int(rest)? as usize),
            "lambda" => lambda = Some(Interval::parse_text(rest).ok_or_else(bad)?),
            "digit_budget" => digit_budget = Some(int(rest)?),
            "precision" => precision = Some(int(rest)? as u32),
            "q" | "p" => {
                let (idx, mag) = rest.split_once(' ').ok_or_else(bad)?;
                let idx = int(idx)? as usize;
                let list = if key == "q" { &mut q } else { &mut p };
                if idx != list.len() {
                    return Err(Error::Format(format!("{} indices out of order at line {}", key, no + 2)));
                }
                list.push(parse_magnitude(mag)?);
            }
            _ => return Err(bad()),
        }
    }
    let need = |what: &str| Error::Format(format!("plan is missing {}", what));
    Ok(ConstructionPlan {
        k: k.ok_or_else(|| need("k"))?,
        d: d.ok_or_else(|| need("d"))?,
        h: h.ok_or_else(|| need("h"))?,
        m: m.ok_or_else(|| need("M"))?,
        n: n.ok_or_else(|| need("N"))?,
        lambda: LambdaBound { value: lambda.ok_or_else(|| need("lambda"))?, iterations: iters.ok_or_else(|| need("lambda_iterations"))? },
        q,
        p,
        digit_budget: digit_budget.ok_or_else(|| need("digit_budget"))?,
        precision: precision.ok_or_else(|| need("precision"))?,
    })
}

/// Rows of a patch of dimension at most 2: `rows[r][c]` is the letter at
/// `origin + (c, r)`.
pub fn patch_rows(p: &Patch) -> Result<Vec<Vec<Letter>>> {
    match p.dim() {
        1 => Ok(vec![p.letters.clone()]),
        2 => {
            let (w, h) = (p.sides[0] as usize, p.sides[1] as usize);
            Ok((0..h).map(|r| (0..w).map(|c| p.letters[c * h + r]).collect()).collect())
        }
        d => Err(Error::Format(format!("patches of dimension {} have no grid form", d))),
    }
}

pub fn patch_to_text(p: &Patch) -> Result<String> {
    let rows = patch_rows(p)?;
    let mut s = String::new();
    let origin = p.origin.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ");
    let _ = writeln!(s, "{} {} {} {}", p.dim(), rows.len(), rows.first().map_or(0, |r| r.len()), origin);
    for r in rows {
        s.push_str(&r.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" "));
        s.push('\n');
    }
    Ok(s)
}

pub fn parse_patch_text(text: &str) -> Result<Patch> {
    let mut lines = text.lines();
    let bad = |w: &str| Error::Format(format!("patch text: {}", w));
    let head: Vec<&str> = lines.next().ok_or_else(|| bad("empty"))?.split_whitespace().collect();
    let nums = |v: &[&str]| v.iter().map(|t| t.parse::<i64>().map_err(|_| bad("bad header"))).collect::<Result<Vec<_>>>();
    let h = nums(&head)?;
    if h.len() < 3 || h.len() != 3 + h[0] as usize || !(1..=2).contains(&h[0]) {
        return Err(bad("bad header"));
    }
    let (d, nr, nc) = (h[0] as usize, h[1] as usize, h[2] as usize);
    let rows: Vec<Vec<Letter>> = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(' ').map(|t| t.parse::<Letter>().map_err(|_| bad("bad letter"))).collect())
        .collect::<Result<_>>()?;
    if rows.len() != nr || rows.iter().any(|r| r.len() != nc) || (d == 1 && nr != 1) {
        return Err(bad("grid does not match header"));
    }
    let origin = h[3..].iter().map(|&c| BigInt::from(c)).collect();
    let (sides, letters) = if d == 1 {
        (vec![nc as u64], rows[0].clone())
    } else {
        (vec![nc as u64, nr as u64], (0..nc).flat_map(|c| rows.iter().map(move |r| r[c])).collect())
    };
    Ok(Patch { origin, sides, letters })
}

/// Binary PGM with maxval `k − 1` (two bytes per sample above 255).
pub fn patch_to_pgm(p: &Patch, k: u64) -> Result<Vec<u8>> {
    if k < 2 {
        return Err(Error::InvalidInput("alphabet must have at least two letters".into()));
    }
    let maxval = k - 1;
    if maxval > 65535 {
        return Err(Error::Format("alphabet too large for PGM".into()));
    }
    let rows = patch_rows(p)?;
    let mut out = format!("P5\n{} {}\n{}\n", rows.first().map_or(0, |r| r.len()), rows.len(), maxval).into_bytes();
    for r in rows {
        for a in r {
            if a as u64 > maxval {
                return Err(Error::InvalidInput(format!("letter {} exceeds k − 1", a)));
            }
            if maxval < 256 {
                out.push(a as u8);
            } else {
                out.extend_from_slice(&(a as u16).to_be_bytes());
            }
        }
    }
    Ok(out)
}

/// A line record `kind key=value …`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Record {
    pub kind: String,
    pub fields: Vec<(String, String)>,
}

impl Record {
    pub fn new(kind: &str) -> Self {
        Record { kind: kind.into(), fields: Vec::new() }
    }

    pub fn field(mut self, key: &str, value: impl ToString) -> Self {
        self.fields.push((key.into(), value.to_string()));
        self
    }

    pub fn rational(self, key: &str, r: &BigRational) -> Self {
        let v = format!("{}/{}", r.numer(), r.denom());
        self.field(key, v)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_line(&self) -> String {
        let mut s = escape(&self.kind);
        for (k, v) in &self.fields {
            let _ = write!(s, " {}={}", escape(k), escape(v));
        }
        s
    }

    pub fn parse_line(line: &str) -> Result<Self> {
        let mut parts = line.split(' ');
        let kind = unescape(parts.next().filter(|k| !k.is_empty()).ok_or_else(|| Error::Format("empty record".into()))?)?;
        let fields = parts
            .map(|p| {
                let (k, v) = p.split_once('=').ok_or_else(|| Error::Format(format!("bad field {}", p)))?;
                Ok((unescape(k)?, unescape(v)?))
            })
            .collect::<Result<_>>()?;
        Ok(Record { kind, fields })
    }
}

fn escape(s: &str) -> String {
    let mut o = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '%' => o.push_str("%25"),
            ' ' => o.push_str("%20"),
            '=' => o.push_str("%3D"),
            '\n' => o.push_str("%0A"),
            '\r' => o.push_str("%0D"),
            _ => o.push(c),
        }
    }
    o
}

fn unescape(s: &str) -> Result<String> {
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let hex = s.get(i + 1..i + 3).ok_or_else(|| Error::Format("truncated escape".into()))?;
            out.push(u8::from_str_radix(hex, 16).map_err(|_| Error::Format("bad escape".into()))?);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).map_err(|_| Error::Format("bad utf-8 in record".into()))
}

/// Header line plus one line per record.
pub fn records_to_text(records: &[Record]) -> String {
    let mut s = String::from(RECORDS_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&r.to_line());
        s.push('\n');
    }
    s
}

pub fn parse_records(text: &str) -> Result<Vec<Record>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(RECORDS_HEADER) {
        return Err(Error::Format("missing records header".into()));
    }
    lines.filter(|l| !l.trim().is_empty()).map(Record::parse_line).collect()
}

/// Letters of a patch as a comma-separated list.
pub fn letters_field(p: &Patch) -> String {
    p.letters.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(",")
}

/// Parses a `p/q` or integer field.
pub fn parse_rational_field(s: &str) -> Result<BigRational> {
    s.parse::<BigRational>().map_err(|_| Error::Format(format!("bad rational {}", s)))
}

/// `i64` view of a coordinate list, for compact reports.
pub fn coords(v: &[BigInt]) -> String {
    v.iter().map(|c| c.to_i64().map_or_else(|| c.to_string(), |x| x.to_string())).collect::<Vec<_>>().join(",")
}
