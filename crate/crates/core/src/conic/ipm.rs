//! Infeasible-start primal-dual interior-point method (HKM direction with
//! Mehrotra predictor-corrector) for
//!
//! ```text
//! min ⟨C, X⟩ + dᵀw   s.t.  𝒜(X) + B w = b,  X ⪰ 0
//! max bᵀλ            s.t.  C − 𝒜*(λ) = Z ⪰ 0,  Bᵀλ = d
//! ```
//!
//! where `X` is block diagonal with dense PSD blocks and one nonnegative
//! diagonal block, and `w` is free. Free variables are eliminated from the
//! Schur system by a second, small Schur complement `BᵀM⁻¹B`.

use std::time::Instant;

use faer::linalg::solvers::DenseSolveCore;
use faer::prelude::*;
use faer::{Mat, MatRef, Side};

use super::standard::SfData;
use super::{Settings, Status};

pub(crate) struct IpmOutput {
    /// PSD blocks of the primal iterate, column-major.
    pub x: Vec<Vec<f64>>,
    pub w: Vec<f64>,
    pub status: Status,
    pub pinf: f64,
    pub dinf: f64,
    pub gap: f64,
    pub dual_obj: f64,
    pub iterations: usize,
}

/// Rows touching one PSD block.
struct BlockRows {
    dim: usize,
    rows: Vec<usize>,
    terms: Vec<Vec<(u32, u32, f64)>>,
    dense: Vec<bool>,
}

struct Problem<'a> {
    d: &'a SfData,
    m: usize,
    blocks: Vec<BlockRows>,
    lp_rows: Vec<Vec<(usize, f64)>>,
    /// `B`, `m × n_free`, column-major.
    bmat: Vec<f64>,
    c_blocks: Vec<Vec<f64>>,
}

#[derive(Clone)]
struct Iterate {
    x: Vec<Vec<f64>>,
    z: Vec<Vec<f64>>,
    xl: Vec<f64>,
    zl: Vec<f64>,
    w: Vec<f64>,
    lam: Vec<f64>,
}

fn view(v: &[f64], n: usize) -> MatRef<'_, f64> {
    MatRef::from_column_major_slice(v, n, n)
}

fn to_vec(m: MatRef<'_, f64>) -> Vec<f64> {
    let (r, c) = (m.nrows(), m.ncols());
    let mut v = Vec::with_capacity(r * c);
    for j in 0..c {
        for i in 0..r {
            v.push(m[(i, j)]);
        }
    }
    v
}

fn mul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    to_vec((view(a, n) * view(b, n)).as_ref())
}

fn symmetrize(v: &mut [f64], n: usize) {
    for j in 0..n {
        for i in 0..j {
            let s = 0.5 * (v[i + j * n] + v[j + i * n]);
            v[i + j * n] = s;
            v[j + i * n] = s;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn inverse_spd(v: &[f64], n: usize) -> Option<Vec<f64>> {
    let l = view(v, n).llt(Side::Lower).ok()?;
    let mut inv = to_vec(l.inverse().as_ref());
    symmetrize(&mut inv, n);
    Some(inv)
}

/// Largest `α` with `X + α dX ⪰ 0` (infinite if `dX ⪰ 0`).
fn max_step_psd(x: &[f64], dx: &[f64], n: usize) -> f64 {
    if n == 1 {
        return if dx[0] < 0.0 { -x[0] / dx[0] } else { f64::INFINITY };
    }
    let Ok(l) = view(x, n).llt(Side::Lower) else {
        return 0.0;
    };
    let mut w = Mat::<f64>::from_fn(n, n, |i, j| dx[i + j * n]);
    l.L().solve_lower_triangular_in_place(w.as_mut());
    let mut wt = w.transpose().to_owned();
    l.L().solve_lower_triangular_in_place(wt.as_mut());
    let mut s = to_vec(wt.as_ref());
    symmetrize(&mut s, n);
    match view(&s, n).self_adjoint_eigenvalues(Side::Lower) {
        Ok(ev) => {
            let lmin = ev[0];
            if lmin < 0.0 {
                -1.0 / lmin
            } else {
                f64::INFINITY
            }
        }
        Err(_) => 0.0,
    }
}

fn max_step_lp(x: &[f64], dx: &[f64]) -> f64 {
    x.iter()
        .zip(dx)
        .filter(|(_, &d)| d < 0.0)
        .map(|(&v, &d)| -v / d)
        .fold(f64::INFINITY, f64::min)
}

/// `tr(E_pq X E_rs Zi)` with `E_pq = (e_p e_qᵀ + e_q e_pᵀ)/2`.
#[inline]
fn pair_trace(x: &[f64], zi: &[f64], n: usize, p: usize, q: usize, r: usize, s: usize) -> f64 {
    0.25 * (x[q + r * n] * zi[s + p * n]
        + x[q + s * n] * zi[r + p * n]
        + x[p + r * n] * zi[s + q * n]
        + x[p + s * n] * zi[r + q * n])
}

/// `⟨A, Y⟩` for sparse symmetric `A` given by upper terms and any square `Y`.
#[inline]
fn inner(terms: &[(u32, u32, f64)], y: &[f64], n: usize) -> f64 {
    terms
        .iter()
        .map(|&(p, q, c)| {
            let (p, q) = (p as usize, q as usize);
            if p == q {
                c * y[p + p * n]
            } else {
                0.5 * c * (y[p + q * n] + y[q + p * n])
            }
        })
        .sum()
}

impl<'a> Problem<'a> {
    fn new(d: &'a SfData) -> Self {
        let m = d.rows.len();
        let mut blocks: Vec<BlockRows> = d
            .blocks
            .iter()
            .map(|&dim| BlockRows {
                dim,
                rows: Vec::new(),
                terms: Vec::new(),
                dense: Vec::new(),
            })
            .collect();
        let mut lp_rows = vec![Vec::new(); d.lp];
        let nf = d.n_free;
        let mut bmat = vec![0.0; m * nf];
        for (i, row) in d.rows.iter().enumerate() {
            let mut k = 0;
            while k < row.psd.len() {
                let b = row.psd[k].0 as usize;
                let mut t = Vec::new();
                while k < row.psd.len() && row.psd[k].0 as usize == b {
                    let e = row.psd[k];
                    t.push((e.1, e.2, e.3));
                    k += 1;
                }
                blocks[b].rows.push(i);
                blocks[b].terms.push(t);
            }
            for &(l, c) in &row.lp {
                lp_rows[l].push((i, c));
            }
            for &(f, c) in &row.free {
                bmat[i + f * m] += c;
            }
        }
        for blk in &mut blocks {
            let n = blk.dim as f64;
            let total: usize = blk.terms.iter().map(Vec::len).sum();
            blk.dense = blk
                .terms
                .iter()
                .map(|t| blk.dim >= 4 && (t.len() as f64) * (total as f64) * 4.0 > 2.0 * n * n * n)
                .collect();
        }
        let c_blocks = d
            .c_psd
            .iter()
            .zip(&d.blocks)
            .map(|(t, &n)| {
                let mut c = vec![0.0; n * n];
                for &(p, q, v) in t {
                    let (p, q) = (p as usize, q as usize);
                    if p == q {
                        c[p + p * n] += v;
                    } else {
                        c[p + q * n] += 0.5 * v;
                        c[q + p * n] += 0.5 * v;
                    }
                }
                c
            })
            .collect();
        Self {
            d,
            m,
            blocks,
            lp_rows,
            bmat,
            c_blocks,
        }
    }

    fn n_free(&self) -> usize {
        self.d.n_free
    }

    /// `𝒜(Y)` over the PSD and LP parts.
    fn apply_a(&self, y: &[Vec<f64>], yl: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for (blk, yk) in self.blocks.iter().zip(y) {
            for (&i, t) in blk.rows.iter().zip(&blk.terms) {
                out[i] += inner(t, yk, blk.dim);
            }
        }
        for (l, rows) in self.lp_rows.iter().enumerate() {
            for &(i, c) in rows {
                out[i] += c * yl[l];
            }
        }
        out
    }

    /// `𝒜*(λ)`.
    fn apply_at(&self, lam: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut s: Vec<Vec<f64>> = self.blocks.iter().map(|b| vec![0.0; b.dim * b.dim]).collect();
        for (blk, sk) in self.blocks.iter().zip(&mut s) {
            let n = blk.dim;
            for (&i, t) in blk.rows.iter().zip(&blk.terms) {
                let li = lam[i];
                for &(p, q, c) in t {
                    let (p, q) = (p as usize, q as usize);
                    if p == q {
                        sk[p + p * n] += c * li;
                    } else {
                        sk[p + q * n] += 0.5 * c * li;
                        sk[q + p * n] += 0.5 * c * li;
                    }
                }
            }
        }
        let sl = self
            .lp_rows
            .iter()
            .map(|rows| rows.iter().map(|&(i, c)| c * lam[i]).sum())
            .collect();
        (s, sl)
    }

    fn apply_b(&self, w: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut out = vec![0.0; m];
        for (f, &wf) in w.iter().enumerate() {
            if wf != 0.0 {
                for i in 0..m {
                    out[i] += self.bmat[i + f * m] * wf;
                }
            }
        }
        out
    }

    fn apply_bt(&self, lam: &[f64]) -> Vec<f64> {
        let m = self.m;
        (0..self.n_free()).map(|f| dot(&self.bmat[f * m..(f + 1) * m], lam)).collect()
    }

    fn primal_obj(&self, it: &Iterate) -> f64 {
        let mut v: f64 = self.c_blocks.iter().zip(&it.x).map(|(c, x)| dot(c, x)).sum();
        v += dot(&self.d.c_lp, &it.xl);
        v += dot(&self.d.c_free, &it.w);
        v
    }

    /// Schur matrix `M_ij = Σ_k tr(A_ik X_k A_jk Z_k⁻¹) + Σ_l a_il a_jl x_l / z_l`
    /// as a dense column-major array.
    fn schur(&self, x: &[Vec<f64>], zi: &[Vec<f64>], xl: &[f64], zl: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut mm = vec![0.0; m * m];
        let mut acc = |i: usize, j: usize, v: f64| {
            let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
            mm[lo + hi * m] += v;
        };
        for (k, blk) in self.blocks.iter().enumerate() {
            let n = blk.dim;
            let (xk, zik) = (&x[k], &zi[k]);
            let sparse: Vec<usize> = (0..blk.rows.len()).filter(|&a| !blk.dense[a]).collect();
            for (a, &isdense) in blk.dense.iter().enumerate() {
                if !isdense {
                    continue;
                }
                // H = Zi A_a X
                let mut ax = vec![0.0; n * n];
                for &(p, q, c) in &blk.terms[a] {
                    let (p, q) = (p as usize, q as usize);
                    for col in 0..n {
                        if p == q {
                            ax[p + col * n] += c * xk[p + col * n];
                        } else {
                            ax[p + col * n] += 0.5 * c * xk[q + col * n];
                            ax[q + col * n] += 0.5 * c * xk[p + col * n];
                        }
                    }
                }
                let h = mul(zik, &ax, n);
                for bidx in 0..blk.rows.len() {
                    if blk.dense[bidx] && bidx < a {
                        continue;
                    }
                    acc(blk.rows[a], blk.rows[bidx], inner(&blk.terms[bidx], &h, n));
                }
            }
            for (sa, &a) in sparse.iter().enumerate() {
                let ta = &blk.terms[a];
                for &b in &sparse[sa..] {
                    let mut v = 0.0;
                    for &(p, q, ca) in ta {
                        for &(r, s, cb) in &blk.terms[b] {
                            v += ca * cb * pair_trace(xk, zik, n, p as usize, q as usize, r as usize, s as usize);
                        }
                    }
                    acc(blk.rows[a], blk.rows[b], v);
                }
            }
        }
        for (l, rows) in self.lp_rows.iter().enumerate() {
            let f = xl[l] / zl[l];
            for (ia, &(i, ca)) in rows.iter().enumerate() {
                for &(j, cb) in &rows[ia..] {
                    acc(i, j, ca * cb * f);
                }
            }
        }
        for j in 0..m {
            for i in 0..j {
                mm[j + i * m] = mm[i + j * m];
            }
        }
        mm
    }
}

/// Cholesky factor of an SPD matrix, with growing diagonal regularization
/// when the matrix is numerically singular.
fn factor(mut a: Mat<f64>) -> Option<faer::linalg::solvers::Llt<f64>> {
    let n = a.nrows();
    if n == 0 {
        return None;
    }
    let maxd = (0..n).map(|i| a[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    let mut added = 0.0;
    for attempt in 0..12 {
        if let Ok(l) = a.llt(Side::Lower) {
            if attempt > 0 {
                log::trace!("ipm schur regularized by {added:.2e} (max diagonal {maxd:.2e})");
            }
            return Some(l);
        }
        let target = maxd * 1e-14 * 10f64.powi(attempt);
        for i in 0..n {
            a[(i, i)] += target - added;
        }
        added = target;
    }
    None
}

struct Schur {
    m: usize,
    llt: Option<faer::linalg::solvers::Llt<f64>>,
    /// `M⁻¹B`, column-major `m × n_free`.
    mib: Vec<f64>,
    s_llt: Option<faer::linalg::solvers::Llt<f64>>,
    nf: usize,
}

impl Schur {
    fn new(pr: &Problem, mm: Vec<f64>) -> Option<Self> {
        let m = pr.m;
        let nf = pr.n_free();
        let llt = if m > 0 {
            let a = Mat::<f64>::from_fn(m, m, |i, j| mm[i + j * m]);
            drop(mm);
            Some(factor(a)?)
        } else {
            None
        };
        let (mib, s_llt) = if nf > 0 && m > 0 {
            let mut bm = Mat::<f64>::from_fn(m, nf, |i, j| pr.bmat[i + j * m]);
            llt.as_ref().unwrap().solve_in_place(bm.as_mut());
            let mib = to_vec(bm.as_ref());
            let s = Mat::<f64>::from_fn(nf, nf, |a, b| dot(&pr.bmat[a * m..(a + 1) * m], &mib[b * m..(b + 1) * m]));
            let s = Mat::<f64>::from_fn(nf, nf, |a, b| 0.5 * (s[(a, b)] + s[(b, a)]));
            (mib, Some(factor(s)?))
        } else {
            (Vec::new(), None)
        };
        Some(Self { m, llt, mib, s_llt, nf })
    }

    fn solve_m(&self, u: &[f64]) -> Vec<f64> {
        match &self.llt {
            Some(l) => {
                let mut v = Mat::<f64>::from_fn(self.m, 1, |i, _| u[i]);
                l.solve_in_place(v.as_mut());
                (0..self.m).map(|i| v[(i, 0)]).collect()
            }
            None => Vec::new(),
        }
    }

    /// Solves `M dλ + B dw = u`, `Bᵀ dλ = rf`.
    fn solve(&self, pr: &Problem, u: &[f64], rf: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let v = self.solve_m(u);
        if self.nf == 0 {
            return (v, Vec::new());
        }
        let bt_v = pr.apply_bt(&v);
        let mut rhs = Mat::<f64>::from_fn(self.nf, 1, |f, _| bt_v[f] - rf[f]);
        self.s_llt.as_ref().unwrap().solve_in_place(rhs.as_mut());
        let dw: Vec<f64> = (0..self.nf).map(|f| rhs[(f, 0)]).collect();
        let mut dl = v;
        for (f, &d) in dw.iter().enumerate() {
            for i in 0..self.m {
                dl[i] -= self.mib[i + f * self.m] * d;
            }
        }
        (dl, dw)
    }
}

/// Preconditioned conjugate gradients on `M x = u` from the initial guess `x`,
/// with the (possibly regularized) Cholesky solve as preconditioner.
fn pcg(op: &dyn Fn(&[f64]) -> Vec<f64>, prec: &dyn Fn(&[f64]) -> Vec<f64>, u: &[f64], x: &mut [f64]) {
    let mx = op(x);
    let mut r: Vec<f64> = u.iter().zip(&mx).map(|(a, b)| a - b).collect();
    let target = 1e-13 * norm(u).max(1e-300);
    let r0 = norm(&r);
    if r0 <= target {
        return;
    }
    let (mut best_x, mut best_r) = (x.to_vec(), r0);
    let mut z = prec(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for _ in 0..30 {
        let mp = op(&p);
        let pmp = dot(&p, &mp);
        if !(pmp > 0.0) {
            break;
        }
        let alpha = rz / pmp;
        for i in 0..x.len() {
            x[i] += alpha * p[i];
            r[i] -= alpha * mp[i];
        }
        let rn = norm(&r);
        if rn < best_r {
            best_r = rn;
            best_x.copy_from_slice(x);
        }
        if rn <= target {
            break;
        }
        z = prec(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..p.len() {
            p[i] = z[i] + beta * p[i];
        }
    }
    log::trace!("ipm pcg residual {r0:.2e} -> {best_r:.2e}");
    x.copy_from_slice(&best_x);
}

struct Metrics {
    pinf: f64,
    dinf: f64,
    gap: f64,
    pobj: f64,
    dobj: f64,
}

impl Metrics {
    fn worst(&self) -> f64 {
        self.pinf.max(self.dinf).max(self.gap)
    }
}

fn output(it: &Iterate, met: &Metrics, status: Status, iterations: usize) -> IpmOutput {
    IpmOutput {
        x: it.x.clone(),
        w: it.w.clone(),
        status,
        pinf: met.pinf,
        dinf: met.dinf,
        gap: met.gap,
        dual_obj: met.dobj,
        iterations,
    }
}

fn trivial(d: &SfData, status: Status) -> IpmOutput {
    IpmOutput {
        x: d.blocks.iter().map(|&n| vec![0.0; n * n]).collect(),
        w: vec![0.0; d.n_free],
        status,
        pinf: 0.0,
        dinf: 0.0,
        gap: 0.0,
        dual_obj: 0.0,
        iterations: 0,
    }
}

const NEAR_TOL: f64 = 1e-4;
/// Relative gap accepted from a stalled but feasible iterate.
const NEAR_GAP: f64 = 1e-3;

pub(crate) fn solve(d: &SfData, settings: &Settings, start: Instant) -> IpmOutput {
    if d.infeasible {
        return trivial(d, Status::Infeasible);
    }
    if d.unbounded {
        return trivial(d, Status::Unbounded);
    }
    let pr = Problem::new(d);
    let m = pr.m;
    let n_cone: usize = d.blocks.iter().sum::<usize>() + d.lp;
    if m == 0 && n_cone == 0 {
        return trivial(d, Status::Optimal);
    }
    log::debug!(
        "ipm rows {m} blocks {} (largest {}) lp {} free {}",
        d.blocks.len(),
        d.blocks.iter().max().unwrap_or(&0),
        d.lp,
        d.n_free
    );

    // starting point
    let bnorm = norm(&d.b);
    let cnorm = (pr.c_blocks.iter().map(|c| dot(c, c)).sum::<f64>() + dot(&d.c_lp, &d.c_lp) + dot(&d.c_free, &d.c_free)).sqrt();
    let mut it = Iterate {
        x: Vec::new(),
        z: Vec::new(),
        xl: Vec::new(),
        zl: Vec::new(),
        w: vec![0.0; d.n_free],
        lam: vec![0.0; m],
    };
    let start_scale = |n: usize, row_norms: &mut dyn Iterator<Item = (usize, f64)>, cn: f64| -> (f64, f64) {
        let nf = n as f64;
        let mut xi: f64 = 10f64.max(nf.sqrt());
        let mut amax: f64 = cn;
        for (i, an) in row_norms {
            xi = xi.max(nf * (1.0 + d.b[i].abs()) / (1.0 + an));
            amax = amax.max(an);
        }
        let eta = 10f64.max(nf.sqrt()).max((1.0 + amax) / nf.sqrt());
        (xi, eta)
    };
    for (k, blk) in pr.blocks.iter().enumerate() {
        let n = blk.dim;
        let cn = norm(&pr.c_blocks[k]);
        let mut rn = blk.rows.iter().zip(&blk.terms).map(|(&i, t)| {
            let f: f64 = t.iter().map(|&(p, q, c)| if p == q { c * c } else { 0.5 * c * c }).sum();
            (i, f.sqrt())
        });
        let (xi, eta) = start_scale(n, &mut rn, cn);
        let mut x = vec![0.0; n * n];
        let mut z = vec![0.0; n * n];
        for p in 0..n {
            x[p + p * n] = xi;
            z[p + p * n] = eta;
        }
        it.x.push(x);
        it.z.push(z);
    }
    if d.lp > 0 {
        let mut rn = pr.lp_rows.iter().flat_map(|r| r.iter().map(|&(i, c)| (i, c.abs())));
        let (xi, eta) = start_scale(d.lp, &mut rn, norm(&d.c_lp));
        it.xl = vec![xi; d.lp];
        it.zl = vec![eta; d.lp];
    }

    let mut best: Option<(Iterate, Metrics)> = None;
    let mut since_best = 0;
    let mut iterations = 0;

    for iter in 0..=settings.max_iter {
        iterations = iter;
        // residuals
        let ax = pr.apply_a(&it.x, &it.xl);
        let bw = pr.apply_b(&it.w);
        let rp: Vec<f64> = (0..m).map(|i| d.b[i] - ax[i] - bw[i]).collect();
        let (atl, atl_lp) = pr.apply_at(&it.lam);
        let rd: Vec<Vec<f64>> = (0..pr.blocks.len())
            .map(|k| {
                pr.c_blocks[k]
                    .iter()
                    .zip(&atl[k])
                    .zip(&it.z[k])
                    .map(|((c, a), z)| c - a - z)
                    .collect()
            })
            .collect();
        let rd_lp: Vec<f64> = (0..d.lp).map(|l| d.c_lp[l] - atl_lp[l] - it.zl[l]).collect();
        let bt_l = pr.apply_bt(&it.lam);
        let rf: Vec<f64> = (0..d.n_free).map(|f| d.c_free[f] - bt_l[f]).collect();

        let pobj = pr.primal_obj(&it);
        let dobj = dot(&d.b, &it.lam);
        let dres = (rd.iter().map(|r| dot(r, r)).sum::<f64>() + dot(&rd_lp, &rd_lp) + dot(&rf, &rf)).sqrt();
        let met = Metrics {
            pinf: norm(&rp) / (1.0 + bnorm),
            dinf: dres / (1.0 + cnorm),
            gap: (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs()),
            pobj,
            dobj,
        };
        log::debug!(
            "ipm {iter:3} pobj {:+.8e} dobj {:+.8e} pinf {:.2e} dinf {:.2e} gap {:.2e}",
            met.pobj,
            met.dobj,
            met.pinf,
            met.dinf,
            met.gap
        );
        if !met.pobj.is_finite() || !met.dobj.is_finite() {
            break;
        }
        if met.pinf <= settings.feas_tol && met.dinf <= settings.feas_tol && met.gap <= settings.rel_gap_tol {
            return output(&it, &met, Status::Optimal, iter);
        }
        // infeasibility heuristics on diverging iterates
        // a diverging dual (primal) objective with relatively vanishing
        // residual is an approximate Farkas certificate
        if met.dobj > 1e8 && dres < 1e-8 * met.dobj && met.pinf > 1e-6 {
            return output(&it, &met, Status::Infeasible, iter);
        }
        if met.pobj < -1e8 && norm(&rp) < -1e-8 * met.pobj && met.dinf > 1e-6 {
            return output(&it, &met, Status::Unbounded, iter);
        }
        let better = best.as_ref().is_none_or(|(_, b)| met.worst() < 0.9 * b.worst());
        if better {
            best = Some((it.clone(), met));
            since_best = 0;
        } else {
            since_best += 1;
        }
        // once near optimal, a short run without progress is a plateau
        let window = if best.as_ref().is_some_and(|(_, b)| b.worst() <= 1e-6) { 5 } else { 25 };
        if since_best > window || iter == settings.max_iter {
            break;
        }
        if let Some(limit) = settings.time_limit {
            if start.elapsed().as_secs_f64() > limit {
                break;
            }
        }

        // factorization data
        let zi: Option<Vec<Vec<f64>>> = it
            .z
            .iter()
            .zip(&pr.blocks)
            .map(|(z, b)| inverse_spd(z, b.dim))
            .collect();
        let Some(zi) = zi else {
            break;
        };
        let mu = (it.x.iter().zip(&it.z).map(|(x, z)| dot(x, z)).sum::<f64>() + dot(&it.xl, &it.zl)) / n_cone.max(1) as f64;
        let t0 = Instant::now();
        let mm = pr.schur(&it.x, &zi, &it.xl, &it.zl);
        let t1 = Instant::now();
        let Some(schur) = Schur::new(&pr, mm) else {
            break;
        };

        let t2 = Instant::now();
        // X Rd Zi
        let g: Vec<Vec<f64>> = (0..pr.blocks.len())
            .map(|k| {
                let n = pr.blocks[k].dim;
                mul(&mul(&it.x[k], &rd[k], n), &zi[k], n)
            })
            .collect();
        let g_lp: Vec<f64> = (0..d.lp).map(|l| it.xl[l] * rd_lp[l] / it.zl[l]).collect();
        let ag = pr.apply_a(&g, &g_lp);
        let a_zi = pr.apply_a(&zi, &it.zl.iter().map(|z| 1.0 / z).collect::<Vec<_>>());
        let base: Vec<f64> = (0..m).map(|i| d.b[i] - bw[i] + ag[i]).collect();

        // M v = A(X Aᵀ(v) Z⁻¹) + LP part, without forming M
        let op = |v: &[f64]| -> Vec<f64> {
            let (atv, atv_lp) = pr.apply_at(v);
            let h: Vec<Vec<f64>> = (0..pr.blocks.len())
                .map(|k| {
                    let n = pr.blocks[k].dim;
                    mul(&mul(&it.x[k], &atv[k], n), &zi[k], n)
                })
                .collect();
            let h_lp: Vec<f64> = (0..d.lp).map(|l| it.xl[l] * atv_lp[l] / it.zl[l]).collect();
            pr.apply_a(&h, &h_lp)
        };
        let direction = |sigma: f64, corr: Option<(&[Vec<f64>], &[f64])>| {
            let mut u: Vec<f64> = (0..m).map(|i| base[i] - sigma * mu * a_zi[i]).collect();
            if let Some((dk, dl)) = corr {
                let ad = pr.apply_a(dk, dl);
                for i in 0..m {
                    u[i] += ad[i];
                }
            }
            let (mut dlam, dw) = schur.solve(&pr, &u, &rf);
            if d.n_free == 0 && m > 0 {
                pcg(&op, &|r: &[f64]| schur.solve_m(r), &u, &mut dlam);
            }
            let (atd, atd_lp) = pr.apply_at(&dlam);
            let mut dx = Vec::with_capacity(pr.blocks.len());
            let mut dz = Vec::with_capacity(pr.blocks.len());
            for k in 0..pr.blocks.len() {
                let n = pr.blocks[k].dim;
                let dzk: Vec<f64> = rd[k].iter().zip(&atd[k]).map(|(r, a)| r - a).collect();
                let xdz = mul(&mul(&it.x[k], &dzk, n), &zi[k], n);
                let mut dxk: Vec<f64> = (0..n * n).map(|e| sigma * mu * zi[k][e] - it.x[k][e] - xdz[e]).collect();
                if let Some((dk, _)) = corr {
                    for e in 0..n * n {
                        dxk[e] -= dk[k][e];
                    }
                }
                symmetrize(&mut dxk, n);
                dx.push(dxk);
                dz.push(dzk);
            }
            let dzl: Vec<f64> = (0..d.lp).map(|l| rd_lp[l] - atd_lp[l]).collect();
            let dxl: Vec<f64> = (0..d.lp)
                .map(|l| {
                    let mut v = sigma * mu / it.zl[l] - it.xl[l] - it.xl[l] * dzl[l] / it.zl[l];
                    if let Some((_, dl)) = corr {
                        v -= dl[l];
                    }
                    v
                })
                .collect();
            (dx, dz, dxl, dzl, dlam, dw)
        };
        let steps = |dx: &[Vec<f64>], dz: &[Vec<f64>], dxl: &[f64], dzl: &[f64]| -> (f64, f64) {
            let mut ap = max_step_lp(&it.xl, dxl);
            let mut ad = max_step_lp(&it.zl, dzl);
            for k in 0..pr.blocks.len() {
                let n = pr.blocks[k].dim;
                ap = ap.min(max_step_psd(&it.x[k], &dx[k], n));
                ad = ad.min(max_step_psd(&it.z[k], &dz[k], n));
            }
            (ap, ad)
        };

        // predictor
        let (dxa, dza, dxla, dzla, _, _) = direction(0.0, None);
        let (apa, ada) = steps(&dxa, &dza, &dxla, &dzla);
        let (apa, ada) = (apa.min(1.0), ada.min(1.0));
        let mut mu_aff = 0.0;
        for k in 0..pr.blocks.len() {
            let xs: Vec<f64> = it.x[k].iter().zip(&dxa[k]).map(|(x, d)| x + apa * d).collect();
            let zs: Vec<f64> = it.z[k].iter().zip(&dza[k]).map(|(z, d)| z + ada * d).collect();
            mu_aff += dot(&xs, &zs);
        }
        for l in 0..d.lp {
            mu_aff += (it.xl[l] + apa * dxla[l]) * (it.zl[l] + ada * dzla[l]);
        }
        mu_aff /= n_cone.max(1) as f64;
        let ratio = (mu_aff / mu).clamp(0.0, 1.0);
        let expo = if apa.min(ada) > 0.2 { 3.0 } else { 2.0 };
        let sigma = ratio.powf(expo).clamp(0.0, 1.0);

        // corrector
        let corr_k: Vec<Vec<f64>> = (0..pr.blocks.len())
            .map(|k| {
                let n = pr.blocks[k].dim;
                mul(&mul(&dxa[k], &dza[k], n), &zi[k], n)
            })
            .collect();
        let corr_l: Vec<f64> = (0..d.lp).map(|l| dxla[l] * dzla[l] / it.zl[l]).collect();
        let (dx, dz, dxl, dzl, dlam, dw) = direction(sigma, Some((&corr_k, &corr_l)));
        let (ap, ad) = steps(&dx, &dz, &dxl, &dzl);
        if log::log_enabled!(log::Level::Trace) {
            let adx = pr.apply_a(&dx, &dxl);
            let bdw = pr.apply_b(&dw);
            let e: Vec<f64> = (0..m).map(|i| adx[i] + bdw[i] - rp[i]).collect();
            log::trace!("ipm newton residual {:.2e} of {:.2e}", norm(&e), norm(&rp));
        }
        let gamma = 0.9 + 0.09 * apa.min(ada);
        let ap = (gamma * ap).min(1.0);
        let ad = (gamma * ad).min(1.0);
        log::trace!(
            "ipm step primal {ap:.3} dual {ad:.3} sigma {sigma:.2e} schur {:.2}s factor {:.2}s total {:.2}s",
            (t1 - t0).as_secs_f64(),
            (t2 - t1).as_secs_f64(),
            t0.elapsed().as_secs_f64()
        );
        if ap < 1e-10 && ad < 1e-10 {
            break;
        }
        for k in 0..pr.blocks.len() {
            for (x, d) in it.x[k].iter_mut().zip(&dx[k]) {
                *x += ap * d;
            }
            for (z, d) in it.z[k].iter_mut().zip(&dz[k]) {
                *z += ad * d;
            }
        }
        for l in 0..d.lp {
            it.xl[l] += ap * dxl[l];
            it.zl[l] += ad * dzl[l];
        }
        for (w, d) in it.w.iter_mut().zip(&dw) {
            *w += ap * d;
        }
        for (l, d) in it.lam.iter_mut().zip(&dlam) {
            *l += ad * d;
        }
    }

    match best {
        Some((b, met)) => {
            // degenerate faces (stable ReLUs) can stall the gap once both
            // residuals are tiny
            let status = if met.pinf.max(met.dinf) <= NEAR_TOL && met.gap <= NEAR_GAP {
                Status::NearOptimal
            } else {
                Status::NumericalFailure
            };
            output(&b, &met, status, iterations)
        }
        None => trivial(d, Status::NumericalFailure),
    }
}
