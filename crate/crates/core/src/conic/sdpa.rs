//! SDPA sparse format (`.dat-s`) export and import.
//!
//! The file describes `min cᵀx` subject to `Σ xᵢ Fᵢ − F₀ ⪰ 0`, so moment
//! variables map to `x` and every PSD block `S₀ + Σ yᵢ Sᵢ` is written with
//! `Fᵢ = Sᵢ`, `F₀ = −S₀`. Linear constraints go to one trailing diagonal
//! block: `form ≤ rhs` becomes the entry `rhs − form ≥ 0`, and `form = rhs`
//! becomes the consecutive pair `form − rhs ≥ 0`, `rhs − form ≥ 0`. A
//! maximization is written with `c` negated.
//!
//! Leading `*` comment lines carry what the format cannot express
//! (sense, objective constant, equality and entry counts) so that a file
//! parses back into the same [`ConicProblem`]. Files without them are read
//! as plain SDPA: every diagonal entry is an inequality.

use std::fmt::Write as _;
use std::path::Path;

use super::{ConicProblem, LinearConstraint, PsdBlock, Solution, Status};
use crate::error::{Error, Result};
use crate::moments::LinearForm;

const TAG: &str = "* lipcert";

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// `(matno, block, i, j, value)`, all 1-indexed except `matno`.
type Entry = (usize, usize, usize, usize, f64);

fn entries(p: &ConicProblem) -> Vec<Entry> {
    let mut out = Vec::new();
    for (b, blk) in p.psd.iter().enumerate() {
        let mut k = 0;
        for j in 0..blk.dim {
            for i in 0..=j {
                for &(v, c) in blk.entries[k].terms() {
                    out.push((v + 1, b + 1, i + 1, j + 1, c));
                }
                let c0 = blk.constant_at(k);
                if c0 != 0.0 {
                    out.push((0, b + 1, i + 1, j + 1, -c0));
                }
                k += 1;
            }
        }
    }
    let lb = p.psd.len() + 1;
    let mut r = 0;
    let mut diag = |form: &LinearForm, rhs: f64, sign: f64, out: &mut Vec<Entry>| {
        r += 1;
        for &(v, c) in form.terms() {
            out.push((v + 1, lb, r, r, sign * c));
        }
        if rhs != 0.0 {
            out.push((0, lb, r, r, sign * rhs));
        }
    };
    for c in &p.equalities {
        diag(&c.form, c.rhs, 1.0, &mut out);
        diag(&c.form, c.rhs, -1.0, &mut out);
    }
    for c in &p.inequalities {
        diag(&c.form, c.rhs, -1.0, &mut out);
    }
    if r == 0 {
        out.push((0, lb, 1, 1, -1.0));
    }
    out.retain(|e| e.4 != 0.0);
    out.sort_by(|a, b| (a.0, a.1, a.2, a.3).cmp(&(b.0, b.1, b.2, b.3)));
    out
}

/// SDPA sparse text of `p`. Identical problems give identical bytes.
pub fn write_sdpa_string(p: &ConicProblem) -> String {
    let ents = entries(p);
    let n_lin = 2 * p.equalities.len() + p.inequalities.len();
    let mut s = String::new();
    let _ = writeln!(s, "{TAG} {}", if p.maximize { "maximize" } else { "minimize" });
    let _ = writeln!(s, "{TAG} objective_constant {}", num(p.objective_constant));
    let _ = writeln!(
        s,
        "{TAG} equalities {} inequalities {} entries {}",
        p.equalities.len(),
        p.inequalities.len(),
        ents.len()
    );
    let _ = writeln!(s, "{}", p.n_vars);
    let _ = writeln!(s, "{}", p.psd.len() + 1);
    let mut sizes: Vec<String> = p.psd.iter().map(|b| b.dim.to_string()).collect();
    sizes.push(format!("-{}", n_lin.max(1)));
    let _ = writeln!(s, "{}", sizes.join(" "));
    let sign = if p.maximize { -1.0 } else { 1.0 };
    let mut c = vec![0.0; p.n_vars];
    for &(i, v) in p.objective.terms() {
        c[i] = sign * v;
    }
    let _ = writeln!(s, "{}", c.iter().map(|&v| num(v)).collect::<Vec<_>>().join(" "));
    for (m, b, i, j, v) in ents {
        let _ = writeln!(s, "{m} {b} {i} {j} {}", num(v));
    }
    s
}

pub fn export_sdpa(p: &ConicProblem, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_sdpa_string(p)).map_err(|e| Error::io(path, e))
}

pub fn read_sdpa(path: impl AsRef<Path>) -> Result<ConicProblem> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_sdpa(&text)
}

#[derive(Default)]
struct Meta {
    maximize: bool,
    constant: f64,
    equalities: Option<usize>,
    entries: Option<usize>,
}

fn bad(line: usize, message: impl Into<String>) -> Error {
    Error::ParseLine {
        line,
        message: message.into(),
    }
}

fn parse_num<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse().map_err(|_| bad(line, format!("invalid {what} '{tok}'")))
}

fn parse_meta(rest: &str, line: usize, meta: &mut Meta) -> Result<()> {
    let toks: Vec<&str> = rest.split_whitespace().collect();
    match toks.as_slice() {
        ["maximize"] => meta.maximize = true,
        ["minimize"] => meta.maximize = false,
        ["objective_constant", v] => meta.constant = parse_num(v, line, "number")?,
        ["equalities", e, "inequalities", _, "entries", n] => {
            meta.equalities = Some(parse_num(e, line, "count")?);
            meta.entries = Some(parse_num(n, line, "count")?);
        }
        _ => {}
    }
    Ok(())
}

/// Parses SDPA sparse text. Errors name the offending line (1-based).
pub fn parse_sdpa(text: &str) -> Result<ConicProblem> {
    let mut meta = Meta::default();
    // header tokens with their line numbers
    let mut header: Vec<(usize, String)> = Vec::new();
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).peekable();
    while let Some(&(ln, l)) = lines.peek() {
        let t = l.trim_start();
        if let Some(rest) = t.strip_prefix(TAG) {
            parse_meta(rest, ln, &mut meta)?;
        } else if !(t.starts_with('*') || t.starts_with('"') || t.is_empty()) {
            break;
        }
        lines.next();
    }
    let clean = |l: &str| -> String {
        l.chars()
            .map(|c| if matches!(c, '{' | '}' | '(' | ')' | ',') { ' ' } else { c })
            .collect()
    };
    let mut last_line = 0;
    let mut next_tokens = |count: usize, header: &mut Vec<(usize, String)>, what: &str| -> Result<Vec<(usize, String)>> {
        while header.len() < count {
            match lines.next() {
                Some((ln, l)) => {
                    last_line = ln;
                    // "6 = mDIM" style trailing annotations are ignored
                    let l = clean(l);
                    let body = l.split('=').next().unwrap_or("");
                    header.extend(body.split_whitespace().map(|t| (ln, t.to_string())));
                }
                None => return Err(bad(last_line + 1, format!("unexpected end of file reading {what}"))),
            }
        }
        Ok(header.drain(..count).collect())
    };
    let m_tok = next_tokens(1, &mut header, "variable count")?;
    let m: usize = parse_num(&m_tok[0].1, m_tok[0].0, "variable count")?;
    if !header.is_empty() {
        return Err(bad(m_tok[0].0, "unexpected tokens after variable count"));
    }
    let nb_tok = next_tokens(1, &mut header, "block count")?;
    let nb: usize = parse_num(&nb_tok[0].1, nb_tok[0].0, "block count")?;
    header.clear();
    let sizes: Vec<i64> = next_tokens(nb, &mut header, "block sizes")?
        .iter()
        .map(|(ln, t)| parse_num::<i64>(t, *ln, "block size"))
        .collect::<Result<_>>()?;
    if sizes.contains(&0) {
        return Err(bad(nb_tok[0].0 + 1, "block size 0"));
    }
    header.clear();
    let c: Vec<f64> = next_tokens(m, &mut header, "objective vector")?
        .iter()
        .map(|(ln, t)| parse_num::<f64>(t, *ln, "number"))
        .collect::<Result<_>>()?;
    if !header.is_empty() {
        return Err(bad(header[0].0, "too many objective coefficients"));
    }

    // per block: matno -> entries
    let mut psd_idx: Vec<Option<usize>> = Vec::with_capacity(nb);
    let mut psd: Vec<(usize, Vec<Vec<(usize, f64)>>, Vec<f64>)> = Vec::new();
    let mut diag: Vec<Vec<Vec<(usize, f64)>>> = Vec::new();
    let mut diag_c: Vec<Vec<f64>> = Vec::new();
    let mut diag_idx: Vec<Option<usize>> = Vec::with_capacity(nb);
    for &s in &sizes {
        if s > 0 {
            let n = s as usize;
            psd_idx.push(Some(psd.len()));
            diag_idx.push(None);
            psd.push((n, vec![Vec::new(); n * (n + 1) / 2], vec![0.0; n * (n + 1) / 2]));
        } else {
            let n = (-s) as usize;
            psd_idx.push(None);
            diag_idx.push(Some(diag.len()));
            diag.push(vec![Vec::new(); n]);
            diag_c.push(vec![0.0; n]);
        }
    }
    let mut count = 0;
    for (ln, l) in lines {
        let l = clean(l);
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() != 5 {
            return Err(bad(ln, format!("expected 5 fields, found {}", toks.len())));
        }
        let mat: usize = parse_num(toks[0], ln, "matrix number")?;
        let blk: usize = parse_num(toks[1], ln, "block number")?;
        let mut i: usize = parse_num(toks[2], ln, "row")?;
        let mut j: usize = parse_num(toks[3], ln, "column")?;
        let v: f64 = parse_num(toks[4], ln, "value")?;
        if mat > m || blk == 0 || blk > nb || i == 0 || j == 0 {
            return Err(bad(ln, "index out of range"));
        }
        if i > j {
            std::mem::swap(&mut i, &mut j);
        }
        let dim = sizes[blk - 1].unsigned_abs() as usize;
        if j > dim {
            return Err(bad(ln, format!("entry ({i},{j}) outside block of size {dim}")));
        }
        if let Some(pb) = psd_idx[blk - 1] {
            let k = j * (j - 1) / 2 + (i - 1);
            if mat == 0 {
                psd[pb].2[k] -= v;
            } else {
                psd[pb].1[k].push((mat - 1, v));
            }
        } else {
            if i != j {
                return Err(bad(ln, "off-diagonal entry in diagonal block"));
            }
            let db = diag_idx[blk - 1].unwrap();
            if mat == 0 {
                diag_c[db][i - 1] += v;
            } else {
                diag[db][i - 1].push((mat - 1, v));
            }
        }
        count += 1;
    }
    if let Some(n) = meta.entries {
        if n != count {
            return Err(bad(
                text.lines().count() + 1,
                format!("expected {n} entries, found {count} (truncated file?)"),
            ));
        }
    }

    let sign = if meta.maximize { -1.0 } else { 1.0 };
    let mut p = ConicProblem::new(m, meta.maximize);
    p.objective = LinearForm::from_terms(c.iter().enumerate().map(|(i, &v)| (i, sign * v)).collect());
    p.objective_constant = meta.constant;
    for (k, (n, ents, cst)) in psd.into_iter().enumerate() {
        let mut b = PsdBlock::new(n, ents.into_iter().map(LinearForm::from_terms).collect(), format!("block{}", k + 1));
        if cst.iter().any(|&v| v != 0.0) {
            b.constant = cst;
        }
        p.psd.push(b);
    }
    let n_diag = diag.len();
    for (db, (rows, cs)) in diag.into_iter().zip(diag_c).enumerate() {
        let tagged = meta.entries.is_some() && db + 1 == n_diag && sizes.last().is_some_and(|&s| s < 0);
        let n_eq = if tagged { meta.equalities.unwrap_or(0) } else { 0 };
        if tagged && n_eq == 0 && rows.len() == 1 && rows[0].is_empty() && cs[0] == -1.0 {
            continue;
        }
        let mut rows = rows.into_iter().zip(cs);
        for _ in 0..n_eq {
            let (f, c0) = rows.next().ok_or_else(|| Error::Parse("equality count exceeds linear block".into()))?;
            let _ = rows.next();
            p.equalities.push(LinearConstraint {
                form: LinearForm::from_terms(f),
                rhs: c0,
            });
        }
        for (f, c0) in rows {
            p.inequalities.push(LinearConstraint {
                form: LinearForm::from_terms(f.into_iter().map(|(i, v)| (i, -v)).collect()),
                rhs: -c0,
            });
        }
    }
    p.validate()?;
    Ok(p)
}

/// Text form of a solution vector, readable by [`import_solution`].
pub fn solution_string(sol: &Solution) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{TAG} solution status {}", sol.status.as_str());
    let _ = writeln!(s, "objValPrimal = {}", num(sol.value));
    let _ = writeln!(s, "xVec =");
    let _ = writeln!(s, "{{{}}}", sol.y.iter().map(|&v| num(v)).collect::<Vec<_>>().join(","));
    s
}

pub fn write_solution(sol: &Solution, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, solution_string(sol)).map_err(|e| Error::io(path, e))
}

/// Reads an external solution for `problem`: either an SDPA-style output
/// with an `xVec = {…}` section, or a bare whitespace/comma separated list
/// of `n_vars` numbers. Value, residuals and status are recomputed from
/// `problem`; nothing else in the file is trusted.
pub fn parse_solution(text: &str, problem: &ConicProblem) -> Result<Solution> {
    let mut y = Vec::new();
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim_start().starts_with('*'))
        .collect();
    let start = lines.iter().position(|(_, l)| l.trim_start().starts_with("xVec"));
    let body: &[(usize, &str)] = match start {
        Some(s) => &lines[s..],
        None => &lines,
    };
    let mut open = start.is_none();
    let mut closed = false;
    'outer: for &(ln, l) in body {
        let mut l = l;
        if !open {
            match l.find('{') {
                Some(p) => {
                    open = true;
                    l = &l[p + 1..];
                }
                None => continue,
            }
        }
        if start.is_some() {
            if let Some(p) = l.find('}') {
                l = &l[..p];
                closed = true;
            }
        }
        for tok in l.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
            if start.is_none() && tok.contains('=') {
                return Err(bad(ln, format!("unexpected token '{tok}'")));
            }
            y.push(parse_num::<f64>(tok, ln, "number")?);
        }
        if closed {
            break 'outer;
        }
    }
    let last = text.lines().count();
    if start.is_some() && !closed {
        return Err(bad(last + 1, "unterminated xVec (truncated file?)"));
    }
    if y.len() != problem.n_vars {
        return Err(Error::Dimension {
            expected: problem.n_vars,
            got: y.len(),
        });
    }
    let residuals = problem.residuals(&y);
    let v = residuals.max_violation();
    let status = if v <= 1e-6 {
        Status::Optimal
    } else if v <= 1e-4 {
        Status::NearOptimal
    } else {
        Status::NumericalFailure
    };
    Ok(Solution {
        value: problem.objective_value(&y),
        dual_value: f64::NAN,
        y,
        status,
        primal_residual: residuals.equality.max(residuals.inequality),
        dual_residual: f64::NAN,
        rel_gap: f64::NAN,
        residuals,
        iterations: 0,
        solve_time_s: 0.0,
    })
}

pub fn import_solution(path: impl AsRef<Path>, problem: &ConicProblem) -> Result<Solution> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_solution(&text, problem)
}
