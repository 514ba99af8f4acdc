//! The Lipschitz-constant estimation POP of a ReLU network.
//!
//! Variables are laid out as `t`, `x₀`, then for each layer `i`: `zᵢ`, `uᵢ`
//! and, for hidden layers feeding another layer, `xᵢ`. Lifted `s` variables
//! come last.

use super::polynomial::{Monomial, Polynomial};
use super::subsets::build_subsets;
use super::{Constraint, PopMeta, PopProblem, Variable, VarKind, DEFAULT_LIFT_CAP};
use crate::error::{Error, Result};
use crate::network::{InputRegion, Network};

/// Variable ids of an LCEP instance grouped by role.
#[derive(Clone, Debug, PartialEq)]
pub struct LcepLayout {
    pub layer_sizes: Vec<usize>,
    pub t: Vec<u32>,
    /// `x[0]` is the input; `x[i]` for `1 ≤ i < m` are hidden activations.
    pub x: Vec<Vec<u32>>,
    /// `z[i-1]` is the pre-activation of layer `i`.
    pub z: Vec<Vec<u32>>,
    /// `u[i-1]` is the derivative selection of layer `i`.
    pub u: Vec<Vec<u32>>,
    /// Lifted `s[j·p₂ + k] = u₁ʲ u₂ᵏ`; empty unless lifted.
    pub s: Vec<u32>,
}

impl LcepLayout {
    pub fn depth(&self) -> usize {
        self.layer_sizes.len() - 1
    }
}

struct Builder {
    vars: Vec<Variable>,
}

impl Builder {
    fn group(&mut self, kind: VarKind, n: usize) -> Vec<u32> {
        (0..n)
            .map(|coord| {
                let id = self.vars.len() as u32;
                self.vars.push(Variable { kind, coord, id });
                id
            })
            .collect()
    }
}

/// `build_lcep(net, region, k)` with the output vector `c_k`.
pub fn build_lcep(net: &Network, region: &InputRegion, label: usize) -> Result<PopProblem> {
    let c = net.output_row(label)?.to_vec();
    let mut pop = build_lcep_for_output(net, region, &c)?;
    pop.meta.label = Some(label);
    Ok(pop)
}

/// LCEP with an arbitrary output vector `c` of length `p_m`, e.g. a
/// difference of two output rows.
pub fn build_lcep_for_output(net: &Network, region: &InputRegion, c: &[f64]) -> Result<PopProblem> {
    region.validate_for(net)?;
    let sizes = net.layer_sizes().to_vec();
    let m = net.depth();
    if c.len() != sizes[m] {
        return Err(Error::Dimension {
            expected: sizes[m],
            got: c.len(),
        });
    }
    if c.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("output vector".into()));
    }

    let mut b = Builder { vars: Vec::new() };
    let t = b.group(VarKind::T, sizes[0]);
    let mut x = vec![b.group(VarKind::X(0), sizes[0])];
    let mut z = Vec::with_capacity(m);
    let mut u = Vec::with_capacity(m);
    for i in 1..=m {
        z.push(b.group(VarKind::Z(i), sizes[i]));
        u.push(b.group(VarKind::U(i), sizes[i]));
        if i < m {
            x.push(b.group(VarKind::X(i), sizes[i]));
        }
    }
    let layout = LcepLayout {
        layer_sizes: sizes.clone(),
        t,
        x,
        z,
        u,
        s: Vec::new(),
    };

    let one = Polynomial::constant(1.0);
    let var = Polynomial::var;
    let mut constraints = Vec::new();
    for (i, (&ti, &xi)) in layout.t.iter().zip(&layout.x[0]).enumerate() {
        constraints.push(Constraint::nonneg(&one - &var(ti).square(), format!("t{i}^2 <= 1")));
        let (lo, hi) = region.bounds(i);
        let g = -&(&(&var(xi) - &Polynomial::constant(lo)) * &(&var(xi) - &Polynomial::constant(hi)));
        constraints.push(Constraint::nonneg(g, format!("x0[{i}] in box")));
    }
    for layer in 1..=m {
        let (a, bias) = (net.weight(layer), net.bias(layer));
        let prev = &layout.x[layer - 1];
        for j in 0..sizes[layer] {
            let zj = layout.z[layer - 1][j];
            let uj = layout.u[layer - 1][j];
            let mut g = Polynomial::affine(prev, a.row(j), bias[j]);
            g = &var(zj) - &g;
            constraints.push(Constraint::bad(g, format!("z{layer}[{j}] = A x + b")));
            constraints.push(Constraint::zero(
                &var(uj) * &(&var(uj) - &one),
                format!("u{layer}[{j}] binary"),
            ));
            constraints.push(Constraint::nonneg(
                &(&var(uj) - &Polynomial::constant(0.5)) * &var(zj),
                format!("u{layer}[{j}] sign"),
            ));
        }
        if layer >= 2 {
            for j in 0..sizes[layer - 1] {
                let xj = layout.x[layer - 1][j];
                let zj = layout.z[layer - 2][j];
                let diff = &var(xj) - &var(zj);
                constraints.push(Constraint::zero(&var(xj) * &diff, format!("x{}[{j}] relu", layer - 1)));
                constraints.push(Constraint::nonneg(var(xj), format!("x{}[{j}] >= 0", layer - 1)));
                constraints.push(Constraint::nonneg(diff, format!("x{}[{j}] >= z", layer - 1)));
            }
        }
    }

    let objective = objective_for(net, &layout, c);
    let ranges = variable_ranges(net, region, &layout, b.vars.len());
    let mut pop = PopProblem {
        variables: b.vars,
        objective,
        maximize: true,
        constraints,
        subsets: Vec::new(),
        ranges: Some(ranges),
        layout: Some(layout),
        meta: PopMeta {
            layer_sizes: sizes,
            region: Some(region.clone()),
            label: None,
        },
        warnings: Vec::new(),
    };
    pop.subsets = build_subsets(&pop)?;
    pop.tag_constraints()?;
    Ok(pop)
}

/// `tᵀ (∏ Aᵢᵀ diag(uᵢ)) c`, expanded from the output layer inwards.
fn objective_for(net: &Network, layout: &LcepLayout, c: &[f64]) -> Polynomial {
    let m = layout.depth();
    let mut w: Vec<Polynomial> = c.iter().map(|&v| Polynomial::constant(v)).collect();
    for layer in (1..=m).rev() {
        let a = net.weight(layer);
        for (j, wj) in w.iter_mut().enumerate() {
            *wj = wj.mul_monomial(&Monomial::var(layout.u[layer - 1][j]));
        }
        let mut next = vec![Polynomial::zero(); a.cols()];
        for (j, wj) in w.iter().enumerate() {
            for (k, nk) in next.iter_mut().enumerate() {
                let aj = a.get(j, k);
                if aj != 0.0 {
                    *nk = &*nk + &wj.scale(aj);
                }
            }
        }
        w = next;
    }
    let mut obj = Polynomial::zero();
    for (wi, &ti) in w.iter().zip(&layout.t) {
        obj = &obj + &wi.mul_monomial(&Monomial::var(ti));
    }
    obj
}

/// Interval bounds on every variable, by forward interval propagation.
fn variable_ranges(net: &Network, region: &InputRegion, layout: &LcepLayout, n: usize) -> Vec<(f64, f64)> {
    let mut r = vec![(0.0, 0.0); n];
    for &ti in &layout.t {
        r[ti as usize] = (-1.0, 1.0);
    }
    let mut act: Vec<(f64, f64)> = (0..region.dim()).map(|i| region.bounds(i)).collect();
    for (i, &xi) in layout.x[0].iter().enumerate() {
        r[xi as usize] = act[i];
    }
    for layer in 1..=layout.depth() {
        let (a, bias) = (net.weight(layer), net.bias(layer));
        let mut pre = Vec::with_capacity(a.rows());
        for (j, &bj) in bias.iter().enumerate() {
            let (mut lo, mut hi) = (bj, bj);
            for (k, &(l, h)) in act.iter().enumerate() {
                let w = a.get(j, k);
                lo += (w * l).min(w * h);
                hi += (w * l).max(w * h);
            }
            pre.push((lo, hi));
        }
        for (j, &p) in pre.iter().enumerate() {
            r[layout.z[layer - 1][j] as usize] = p;
            r[layout.u[layer - 1][j] as usize] = (0.0, 1.0);
        }
        act = pre.iter().map(|&(l, h)| (l.max(0.0), h.max(0.0))).collect();
        if layer < layout.depth() {
            for (j, &xj) in layout.x[layer].iter().enumerate() {
                r[xj as usize] = act[j];
            }
        }
    }
    for &s in &layout.s {
        r[s as usize] = (0.0, 1.0);
    }
    r
}

/// Two-hidden-layer LCEP with the lifting `s = u₁u₂ᵀ`, lowering the
/// objective to degree 2.
pub fn build_lifted_lcep2(net: &Network, region: &InputRegion, label: usize) -> Result<PopProblem> {
    let c = net.output_row(label)?.to_vec();
    let mut pop = build_lifted_lcep2_for_output(net, region, &c, DEFAULT_LIFT_CAP)?;
    pop.meta.label = Some(label);
    Ok(pop)
}

/// Lifted two-hidden-layer LCEP for output vector `c`; warns when the number
/// of lifted variables reaches `cap`.
pub fn build_lifted_lcep2_for_output(
    net: &Network,
    region: &InputRegion,
    c: &[f64],
    cap: usize,
) -> Result<PopProblem> {
    if net.depth() != 2 {
        return Err(Error::InvalidArgument(format!(
            "lifting needs exactly two hidden layers, network has {}",
            net.depth()
        )));
    }
    let mut pop = build_lcep_for_output(net, region, c)?;
    let layout = pop.layout.as_mut().expect("lcep layout");
    let (p0, p1, p2) = (layout.layer_sizes[0], layout.layer_sizes[1], layout.layer_sizes[2]);
    let count = p1 * p2;
    if count >= cap {
        let msg = format!("lifting adds {count} variables and constraints (cap {cap}); expect heavy memory use");
        log::warn!("{msg}");
        pop.warnings.push(msg);
    }

    let base = pop.variables.len() as u32;
    for idx in 0..count {
        pop.variables.push(Variable {
            kind: VarKind::S,
            coord: idx,
            id: base + idx as u32,
        });
        layout.s.push(base + idx as u32);
    }
    let (a1, a2) = (net.weight(1), net.weight(2));
    let mut obj = Polynomial::zero();
    for j in 0..p1 {
        for k in 0..p2 {
            let s = layout.s[j * p2 + k];
            let w = a2.get(k, j) * c[k];
            if w == 0.0 {
                continue;
            }
            for i in 0..p0 {
                let coef = a1.get(j, i) * w;
                if coef != 0.0 {
                    obj.add_term(Monomial::from_pairs([(layout.t[i], 1), (s, 1)]), coef);
                }
            }
        }
    }
    for j in 0..p1 {
        for k in 0..p2 {
            let s = layout.s[j * p2 + k];
            let g = &Polynomial::var(s) - &(&Polynomial::var(layout.u[0][j]) * &Polynomial::var(layout.u[1][k]));
            pop.constraints.push(Constraint::bad(g, format!("s[{j},{k}] = u1 u2")));
        }
    }
    pop.objective = obj;
    if let Some(r) = pop.ranges.as_mut() {
        r.resize(pop.variables.len(), (0.0, 1.0));
    }
    Ok(pop)
}

/// Feasible point of an LCEP instance generated by input `x0` and direction
/// `t`: activations from the forward pass, `u` from the activation pattern
/// (0 at ties), and `s = u₁u₂ᵀ` when lifted.
pub fn lift_point(pop: &PopProblem, net: &Network, x0: &[f64], t: &[f64]) -> Result<Vec<f64>> {
    let layout = pop
        .layout
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("problem has no network layout".into()))?;
    if t.len() != layout.t.len() {
        return Err(Error::Dimension {
            expected: layout.t.len(),
            got: t.len(),
        });
    }
    let trace = net.forward(x0)?;
    let mut p = vec![0.0; pop.n_vars()];
    for (&id, &v) in layout.t.iter().zip(t) {
        p[id as usize] = v;
    }
    for (layer, ids) in layout.x.iter().enumerate() {
        for (&id, &v) in ids.iter().zip(&trace.activations[layer]) {
            p[id as usize] = v;
        }
    }
    for (layer, ids) in layout.z.iter().enumerate() {
        for (j, &id) in ids.iter().enumerate() {
            let zv = trace.pre_activations[layer][j];
            p[id as usize] = zv;
            p[layout.u[layer][j] as usize] = if zv > 0.0 { 1.0 } else { 0.0 };
        }
    }
    if !layout.s.is_empty() {
        let p2 = layout.layer_sizes[2];
        for (idx, &id) in layout.s.iter().enumerate() {
            p[id as usize] = p[layout.u[0][idx / p2] as usize] * p[layout.u[1][idx % p2] as usize];
        }
    }
    Ok(p)
}
