//! Conversion of a moment-side problem to block-diagonal primal standard form.
//!
//! Each PSD block becomes a matrix variable equal to its (scaled) value.
//! Every variable `yᵢ` that appears alone in some entry is represented by that
//! entry; every other entry of every block becomes an equality. Variables
//! without such an entry stay free. Inequalities receive nonnegative slacks.

use std::collections::HashMap;

use super::ConicProblem;
use crate::moments::LinearForm;

/// One equality of `𝒜(X) + B w = b`. PSD terms are `(block, p, q, coef)` with
/// `p ≤ q` and mean `coef · X[p, q]`.
#[derive(Clone, Debug, Default)]
pub(crate) struct Row {
    pub psd: Vec<(u32, u32, u32, f64)>,
    pub lp: Vec<(usize, f64)>,
    pub free: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, Default)]
pub(crate) struct SfData {
    pub blocks: Vec<usize>,
    pub lp: usize,
    pub n_free: usize,
    pub rows: Vec<Row>,
    pub b: Vec<f64>,
    /// Per block, upper entries `(p, q, coef)` meaning `coef · X[p, q]`.
    pub c_psd: Vec<Vec<(u32, u32, f64)>>,
    pub c_lp: Vec<f64>,
    pub c_free: Vec<f64>,
    /// Detected while building: an empty row with nonzero right-hand side.
    pub infeasible: bool,
    /// Detected while building: a free variable with cost and no constraint.
    pub unbounded: bool,
}

#[derive(Clone, Copy, Debug)]
enum Recover {
    Entry { blk: u32, p: u32, q: u32, coef: f64, offset: f64 },
    Free(usize),
    Unused,
}

pub(crate) struct StandardForm {
    pub data: SfData,
    recover: Vec<Recover>,
    var_scale: Vec<f64>,
    /// Internal objective is `(±objective − offset) / scale`.
    pub objective_scale: f64,
    pub objective_offset: f64,
}

#[derive(Default)]
struct Acc {
    psd: Vec<(u32, u32, u32, f64)>,
    free: Vec<(usize, f64)>,
    constant: f64,
}

impl StandardForm {
    pub fn build(p: &ConicProblem) -> Self {
        let n = p.n_vars;
        let s: Vec<f64> = p.scale.clone().unwrap_or_else(|| vec![1.0; n]);

        // scaled blocks: entry (p, q) multiplied by d_p d_q, variables by s
        let mut blocks: Vec<(Vec<LinearForm>, Vec<f64>)> = Vec::with_capacity(p.psd.len());
        for b in &p.psd {
            let dim = b.dim;
            let mut diag = vec![0.0; dim];
            for (k, (i, j)) in packed_positions(dim).enumerate() {
                if i == j {
                    diag[i] = b.constant_at(k).abs()
                        + b.entries[k].terms().iter().map(|&(v, c)| (c * s[v]).abs()).sum::<f64>();
                }
            }
            let d: Vec<f64> = diag.iter().map(|&e| if e > 0.0 { 1.0 / e.sqrt() } else { 1.0 }).collect();
            let mut forms = Vec::with_capacity(b.entries.len());
            let mut consts = Vec::with_capacity(b.entries.len());
            for (k, (i, j)) in packed_positions(dim).enumerate() {
                let f = d[i] * d[j];
                forms.push(LinearForm(b.entries[k].terms().iter().map(|&(v, c)| (v, c * s[v] * f)).collect()));
                consts.push(b.constant_at(k) * f);
            }
            blocks.push((forms, consts));
        }

        // representatives
        let mut recover = vec![Recover::Unused; n];
        let mut is_rep: Vec<Vec<bool>> = Vec::with_capacity(blocks.len());
        for (bi, (forms, consts)) in blocks.iter().enumerate() {
            let dim = p.psd[bi].dim;
            let mut flags = vec![false; forms.len()];
            for (k, (i, j)) in packed_positions(dim).enumerate() {
                if let [(v, c)] = forms[k].terms() {
                    if matches!(recover[*v], Recover::Unused) {
                        recover[*v] = Recover::Entry {
                            blk: bi as u32,
                            p: i as u32,
                            q: j as u32,
                            coef: *c,
                            offset: consts[k],
                        };
                        flags[k] = true;
                    }
                }
            }
            is_rep.push(flags);
        }

        let mut n_free = 0;
        let mut mark_free = |f: &LinearForm, recover: &mut Vec<Recover>| {
            for &(v, _) in f.terms() {
                if matches!(recover[v], Recover::Unused) {
                    recover[v] = Recover::Free(n_free);
                    n_free += 1;
                }
            }
        };
        for (forms, _) in &blocks {
            for f in forms {
                mark_free(f, &mut recover);
            }
        }
        for c in p.equalities.iter().chain(&p.inequalities) {
            mark_free(&c.form, &mut recover);
        }

        let subst = |f: &LinearForm, scale_vars: bool, recover: &[Recover]| -> Acc {
            let mut acc = Acc::default();
            for &(v, c) in f.terms() {
                let c = if scale_vars { c * s[v] } else { c };
                match recover[v] {
                    Recover::Entry { blk, p, q, coef, offset } => {
                        acc.psd.push((blk, p, q, c / coef));
                        acc.constant -= c * offset / coef;
                    }
                    Recover::Free(w) => acc.free.push((w, c)),
                    Recover::Unused => {}
                }
            }
            acc
        };

        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for (bi, (forms, consts)) in blocks.iter().enumerate() {
            let dim = p.psd[bi].dim;
            for (k, (i, j)) in packed_positions(dim).enumerate() {
                if is_rep[bi][k] {
                    continue;
                }
                // X[i,j] - L(y) = S0[i,j]
                let acc = subst(&forms[k], false, &recover);
                let mut row = Row::default();
                row.psd.push((bi as u32, i as u32, j as u32, 1.0));
                row.psd.extend(acc.psd.iter().map(|&(b, p, q, c)| (b, p, q, -c)));
                row.free.extend(acc.free.iter().map(|&(w, c)| (w, -c)));
                rows.push(row);
                rhs.push(consts[k] + acc.constant);
            }
        }
        for c in &p.equalities {
            let acc = subst(&c.form, true, &recover);
            rows.push(Row {
                psd: acc.psd,
                lp: Vec::new(),
                free: acc.free,
            });
            rhs.push(c.rhs - acc.constant);
        }
        for (l, c) in p.inequalities.iter().enumerate() {
            let acc = subst(&c.form, true, &recover);
            rows.push(Row {
                psd: acc.psd,
                lp: vec![(l, 1.0)],
                free: acc.free,
            });
            rhs.push(c.rhs - acc.constant);
        }

        // objective
        let sign = if p.maximize { -1.0 } else { 1.0 };
        let acc = subst(&p.objective.scale(sign), true, &recover);
        let mut c_psd: Vec<Vec<(u32, u32, f64)>> = vec![Vec::new(); blocks.len()];
        for (b, i, j, c) in merge_psd(acc.psd) {
            c_psd[b as usize].push((i, j, c));
        }
        let mut c_free = vec![0.0; n_free];
        for (w, c) in acc.free {
            c_free[w] += c;
        }
        let objective_offset = acc.constant;
        let cmax = c_psd
            .iter()
            .flatten()
            .map(|&(_, _, c)| c.abs())
            .chain(c_free.iter().map(|c| c.abs()))
            .fold(0.0, f64::max);
        let objective_scale = if cmax > 0.0 { cmax } else { 1.0 };
        for e in c_psd.iter_mut().flatten() {
            e.2 /= objective_scale;
        }
        for c in &mut c_free {
            *c /= objective_scale;
        }

        let mut data = SfData {
            blocks: p.psd.iter().map(|b| b.dim).collect(),
            lp: p.inequalities.len(),
            n_free,
            rows: Vec::new(),
            b: Vec::new(),
            c_psd,
            c_lp: vec![0.0; p.inequalities.len()],
            c_free,
            infeasible: false,
            unbounded: false,
        };
        normalize_rows(rows, rhs, &mut data);

        let mut used = vec![false; n_free];
        for r in &data.rows {
            for &(w, _) in &r.free {
                used[w] = true;
            }
        }
        if used.iter().zip(&data.c_free).any(|(&u, &c)| !u && c != 0.0) {
            data.unbounded = true;
        }

        Self {
            data,
            recover,
            var_scale: s,
            objective_scale,
            objective_offset,
        }
    }

    /// Moment vector from the primal iterate.
    pub fn recover(&self, x: &[Vec<f64>], w: &[f64]) -> Vec<f64> {
        self.recover
            .iter()
            .zip(&self.var_scale)
            .map(|(r, &s)| {
                let yt = match *r {
                    Recover::Entry { blk, p, q, coef, offset } => {
                        let b = &x[blk as usize];
                        let dim = self.data.blocks[blk as usize];
                        if b.is_empty() {
                            0.0
                        } else {
                            (b[p as usize + q as usize * dim] - offset) / coef
                        }
                    }
                    Recover::Free(i) => w.get(i).copied().unwrap_or(0.0),
                    Recover::Unused => 0.0,
                };
                yt * s
            })
            .collect()
    }
}

pub(crate) fn packed_positions(dim: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..dim).flat_map(|j| (0..=j).map(move |i| (i, j)))
}

fn merge_psd(mut t: Vec<(u32, u32, u32, f64)>) -> Vec<(u32, u32, u32, f64)> {
    t.sort_unstable_by_key(|&(b, p, q, _)| (b, q, p));
    let mut out: Vec<(u32, u32, u32, f64)> = Vec::with_capacity(t.len());
    for e in t {
        match out.last_mut() {
            Some(l) if (l.0, l.1, l.2) == (e.0, e.1, e.2) => l.3 += e.3,
            _ => out.push(e),
        }
    }
    out.retain(|e| e.3 != 0.0);
    out
}

fn merge_idx(mut t: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    t.sort_unstable_by_key(|&(i, _)| i);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(t.len());
    for e in t {
        match out.last_mut() {
            Some(l) if l.0 == e.0 => l.1 += e.1,
            _ => out.push(e),
        }
    }
    out.retain(|e| e.1 != 0.0);
    out
}

/// Merges repeated terms, scales each row to unit max coefficient, and drops
/// empty and exactly duplicated rows.
fn normalize_rows(rows: Vec<Row>, rhs: Vec<f64>, data: &mut SfData) {
    let mut seen: HashMap<Vec<u64>, f64> = HashMap::new();
    for (row, b) in rows.into_iter().zip(rhs) {
        let mut row = Row {
            psd: merge_psd(row.psd),
            lp: merge_idx(row.lp),
            free: merge_idx(row.free),
        };
        let coefs = || row.psd.iter().map(|e| e.3).chain(row.lp.iter().map(|e| e.1)).chain(row.free.iter().map(|e| e.1));
        let big = coefs().map(f64::abs).fold(0.0, f64::max);
        if big == 0.0 {
            if b.abs() > 1e-12 {
                data.infeasible = true;
            }
            continue;
        }
        let lead = coefs().next().unwrap_or(1.0);
        let f = lead.signum() / big;
        row.psd.iter_mut().for_each(|e| e.3 *= f);
        row.lp.iter_mut().for_each(|e| e.1 *= f);
        row.free.iter_mut().for_each(|e| e.1 *= f);
        let b = b * f;
        let mut key = Vec::with_capacity(3 * (row.psd.len() + row.lp.len() + row.free.len()) + 3);
        for e in &row.psd {
            key.extend([0, ((e.0 as u64) << 32) | e.1 as u64, e.2 as u64, e.3.to_bits()]);
        }
        for e in &row.lp {
            key.extend([1, e.0 as u64, e.1.to_bits()]);
        }
        for e in &row.free {
            key.extend([2, e.0 as u64, e.1.to_bits()]);
        }
        if let Some(&prev) = seen.get(&key) {
            if (prev - b).abs() > 1e-12 * (1.0 + b.abs()) {
                data.infeasible = true;
            }
            continue;
        }
        seen.insert(key, b);
        data.rows.push(row);
        data.b.push(b);
    }
}
