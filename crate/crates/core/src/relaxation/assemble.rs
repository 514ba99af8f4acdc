//! Lowering of POPs to moment relaxations.

use super::Relaxation;
use crate::conic::{ConicProblem, PsdBlock};
use crate::error::{Error, Result};
use crate::moments::{
    localizing_matrix, localizing_order, moment_matrix, riesz, sub_moment_block, sub_moment_block_agg,
    BlockSense, LinearForm, MomentIndex, SymbolicBlock,
};
use crate::pop::{verify_rip, rip_violation, ConstraintSense, Monomial, PopProblem, Polynomial, Tag};

use super::CubicMode;

/// Collects blocks and scalar constraints over one shared moment index.
pub(crate) struct Assembler {
    pub index: MomentIndex,
    psd: Vec<PsdBlock>,
    equalities: Vec<(LinearForm, f64)>,
    inequalities: Vec<(LinearForm, f64)>,
}

impl Assembler {
    pub fn new() -> Self {
        Self {
            index: MomentIndex::new(),
            psd: Vec::new(),
            equalities: Vec::new(),
            inequalities: Vec::new(),
        }
    }

    pub fn normalize(&mut self) {
        self.equalities.push((LinearForm::single(0), 1.0));
    }

    pub fn block(&mut self, b: SymbolicBlock) {
        match b.sense {
            BlockSense::Zero => {
                for e in b.entries {
                    if !e.is_zero() {
                        self.equalities.push((e, 0.0));
                    }
                }
            }
            BlockSense::Psd if b.dim == 1 => {
                let e = b.entries.into_iter().next().unwrap();
                self.scalar(e, ConstraintSense::NonNeg);
            }
            BlockSense::Psd => self.psd.push(PsdBlock::new(b.dim, b.entries, b.label)),
        }
    }

    /// `form ≥ 0` or `form = 0`, where the constant monomial is `y₀`.
    pub fn scalar(&mut self, form: LinearForm, sense: ConstraintSense) {
        if form.is_zero() {
            return;
        }
        match sense {
            ConstraintSense::NonNeg => self.inequalities.push((form.scale(-1.0), 0.0)),
            ConstraintSense::Zero => self.equalities.push((form, 0.0)),
        }
    }

    pub fn riesz_scalar(&mut self, g: &Polynomial, sense: ConstraintSense) {
        let f = riesz(g, &mut self.index);
        self.scalar(f, sense);
    }

    /// `L(g) = 0`, plus `L(g²) = 0` when `g` is affine.
    pub fn bad(&mut self, g: &Polynomial) {
        self.riesz_scalar(g, ConstraintSense::Zero);
        if g.degree() <= 1 {
            self.riesz_scalar(&g.square(), ConstraintSense::Zero);
        }
    }

    /// Refuses objectives with a monomial that no block or constraint carries,
    /// whose moment would otherwise be unconstrained.
    pub fn check_objective(&self, pop: &PopProblem) -> Result<()> {
        for (m, _) in pop.objective.terms() {
            if self.index.get(m).is_none() {
                return Err(Error::UnsupportedObjective(m.fmt_with(&|v| pop.var_name(v))));
            }
        }
        Ok(())
    }

    pub fn finish(mut self, pop: &PopProblem) -> Result<Relaxation> {
        self.check_objective(pop)?;
        let objective = riesz(&pop.objective, &mut self.index);
        let n = self.index.len();
        let mut problem = ConicProblem::new(n, pop.maximize);
        problem.objective = objective;
        for (f, r) in self.equalities {
            problem.add_equality(f, r);
        }
        for (f, r) in self.inequalities {
            problem.add_inequality(f, r);
        }
        let n_psd_blocks = self.psd.len();
        problem.psd = self.psd;
        if let Some(ranges) = &pop.ranges {
            problem.scale = Some(scale_hints(&self.index, ranges));
        }
        Ok(Relaxation {
            problem,
            index: self.index,
            n_psd_blocks,
        })
    }
}

/// Expected magnitude of each moment: `∏ max(|lo_v|, |hi_v|)^α_v`.
fn scale_hints(index: &MomentIndex, ranges: &[(f64, f64)]) -> Vec<f64> {
    let s: Vec<f64> = ranges
        .iter()
        .map(|&(lo, hi)| {
            let v = lo.abs().max(hi.abs());
            if v > 0.0 && v.is_finite() {
                v
            } else {
                1.0
            }
        })
        .collect();
    index
        .monomials()
        .iter()
        .map(|m| m.pairs().iter().map(|&(v, e)| s[v as usize].powi(e as i32)).product())
        .collect()
}

fn all_vars(pop: &PopProblem) -> Vec<u32> {
    (0..pop.n_vars() as u32).collect()
}

/// `M_k − Σ_{v∈I} v²` with `M_k` from the variable ranges; `None` when a
/// range is unbounded.
fn ball(pop: &PopProblem, subset: &[u32]) -> Option<Polynomial> {
    let ranges = pop.ranges.as_ref()?;
    let mut bound = 0.0;
    let mut g = Polynomial::zero();
    for &v in subset {
        let (lo, hi) = ranges[v as usize];
        let r = (lo * lo).max(hi * hi);
        if !r.is_finite() {
            return None;
        }
        bound += r;
        g.add_term(Monomial::from_pairs([(v, 2)]), -1.0);
    }
    g.add_term(Monomial::one(), bound);
    Some(g)
}

/// First-order dense relaxation.
pub fn assemble_shor(pop: &PopProblem) -> Result<Relaxation> {
    pop.validate()?;
    let deg = pop.max_degree();
    if deg > 2 {
        return Err(Error::DegreeDeficit { degree: deg, order: 1 });
    }
    let mut a = Assembler::new();
    a.normalize();
    let m1 = moment_matrix(&all_vars(pop), 1, &mut a.index).with_label("M1 dense");
    a.block(m1);
    for c in &pop.constraints {
        if c.tag == Tag::Bad {
            a.bad(&c.poly);
        } else {
            a.riesz_scalar(&c.poly, c.sense);
        }
    }
    lifted_reductions(pop, &mut a);
    a.finish(pop)
}

/// `L(s² − s) = 0` for every lifted `s = u₁u₂`, which is binary. Nothing
/// else bounds `L(s²)` at order 1.
fn lifted_reductions(pop: &PopProblem, a: &mut Assembler) {
    let Some(layout) = pop.layout.as_ref() else { return };
    for &s in &layout.s {
        let mut g = Polynomial::monomial(Monomial::from_pairs([(s, 2)]), 1.0);
        g.add_term(Monomial::var(s), -1.0);
        a.riesz_scalar(&g, ConstraintSense::Zero);
    }
}

fn rip_check(pop: &PopProblem) -> Result<()> {
    if pop.subsets.is_empty() {
        return Err(Error::InvalidArgument("problem has no variable subsets".into()));
    }
    if !verify_rip(&pop.subsets) {
        return Err(Error::RipViolation {
            position: rip_violation(&pop.subsets).unwrap_or(0),
        });
    }
    Ok(())
}

/// Sparse part of the order-`d` heuristic relaxation: subset moment blocks
/// (for `d ≥ 2`), localizing blocks of tagged constraints, the bad-constraint
/// equalities, and optional ball constraints, on top of `y₀ = 1` and a dense
/// `M₁`.
fn sparse_core(pop: &PopProblem, d: u32, balls: bool, a: &mut Assembler) -> Result<()> {
    a.normalize();
    let blk = moment_matrix(&all_vars(pop), 1, &mut a.index).with_label("M1 dense");
    a.block(blk);
    if d >= 2 {
        for (k, s) in pop.subsets.iter().enumerate() {
            let blk = moment_matrix(s, d, &mut a.index).with_label(format!("M{d} subset {k}"));
            a.block(blk);
        }
    }
    for (i, c) in pop.constraints.iter().enumerate() {
        match c.tag {
            Tag::Bad => a.bad(&c.poly),
            Tag::Subset(k) => {
                let order = localizing_order(&c.poly, d)?;
                if order == 0 {
                    a.riesz_scalar(&c.poly, c.sense);
                } else {
                    let sense = match c.sense {
                        ConstraintSense::NonNeg => BlockSense::Psd,
                        ConstraintSense::Zero => BlockSense::Zero,
                    };
                    let b = localizing_matrix(&c.poly, &pop.subsets[k], order, sense, &mut a.index)?;
                    a.block(b.with_label(format!("L{order} {}", c.label)));
                }
            }
            Tag::Untagged => return Err(Error::UncoveredConstraint { index: i }),
        }
    }
    if balls {
        for (k, s) in pop.subsets.iter().enumerate() {
            if let Some(g) = ball(pop, s) {
                let b = localizing_matrix(&g, s, d - 1, BlockSense::Psd, &mut a.index)?;
                a.block(b.with_label(format!("ball subset {k}")));
            }
        }
    }
    Ok(())
}

/// Heuristic sparse relaxation of order `d ≥ 1`.
pub fn assemble_hr(pop: &PopProblem, d: u32, balls: bool) -> Result<Relaxation> {
    if d == 0 {
        return Err(Error::InvalidArgument("relaxation order must be at least 1".into()));
    }
    pop.validate()?;
    rip_check(pop)?;
    let mut a = Assembler::new();
    sparse_core(pop, d, balls, &mut a)?;
    a.finish(pop)
}

fn cubic_blocks(pop: &PopProblem, mode: CubicMode, a: &mut Assembler) {
    let layout = pop.layout.as_ref().expect("checked by caller");
    let (t, u1, u2) = (&layout.t, &layout.u[0], &layout.u[1]);
    match mode {
        CubicMode::PerTriple => {
            for &ti in t {
                for &uj in u1 {
                    for &uk in u2 {
                        let blk = sub_moment_block(ti, uj, uk, &mut a.index);
                        a.block(blk);
                    }
                }
            }
        }
        CubicMode::Aggregated => {
            for &uk in u2 {
                let blk = sub_moment_block_agg(t, u1, uk, &mut a.index);
                a.block(blk);
            }
        }
        CubicMode::Lifted => return,
    }
    // The diagonal moments L((u₁ʲ)²(u₂ᵏ)²) appear in no other block, so
    // without u² = u they are unbounded and so is the objective.
    for &uj in u1 {
        for &uk in u2 {
            let mut g = Polynomial::monomial(Monomial::from_pairs([(uj, 2), (uk, 2)]), 1.0);
            g.add_term(Monomial::from_pairs([(uj, 1), (uk, 1)]), -1.0);
            a.riesz_scalar(&g, ConstraintSense::Zero);
        }
    }
}

/// Relaxation of a two-hidden-layer instance at `order ∈ {1, 2}`.
///
/// Order 2 is the sparse order-2 relaxation plus cubic-moment blocks; order 1
/// keeps only the dense `M₁`, the cubic blocks and scalar Riesz constraints.
/// With [`CubicMode::Lifted`], `pop` must come from
/// [`build_lifted_lcep2`](crate::pop::build_lifted_lcep2) and no cubic blocks
/// are needed.
pub fn assemble_hr_two_hidden(pop: &PopProblem, order: u32, mode: CubicMode, balls: bool) -> Result<Relaxation> {
    let layout = pop
        .layout
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("problem has no network layout".into()))?;
    if layout.depth() != 2 {
        return Err(Error::InvalidArgument(format!(
            "two-hidden-layer relaxation needs m = 2, got m = {}",
            layout.depth()
        )));
    }
    let lifted = !layout.s.is_empty();
    if lifted != (mode == CubicMode::Lifted) {
        return Err(Error::InvalidArgument(if lifted {
            "lifted problem requires cubic mode 'lifted'".into()
        } else {
            "cubic mode 'lifted' requires a lifted problem".into()
        }));
    }
    if !(1..=2).contains(&order) {
        return Err(Error::InvalidArgument(format!("order must be 1 or 2, got {order}")));
    }
    pop.validate()?;
    rip_check(pop)?;
    let mut a = Assembler::new();
    if order == 2 {
        sparse_core(pop, 2, balls, &mut a)?;
    } else {
        a.normalize();
        let blk = moment_matrix(&all_vars(pop), 1, &mut a.index).with_label("M1 dense");
        a.block(blk);
        for c in &pop.constraints {
            if c.tag == Tag::Bad {
                a.bad(&c.poly);
            } else {
                a.riesz_scalar(&c.poly, c.sense);
            }
        }
        if balls {
            for s in &pop.subsets {
                if let Some(g) = ball(pop, s) {
                    a.riesz_scalar(&g, ConstraintSense::NonNeg);
                }
            }
        }
    }
    cubic_blocks(pop, mode, &mut a);
    lifted_reductions(pop, &mut a);
    a.finish(pop)
}

/// Dense order-`d` moment relaxation: `M_d` over all variables and full
/// localizing matrices for every constraint, bad ones included. Only for
/// small instances.
pub fn assemble_dense(pop: &PopProblem, d: u32) -> Result<Relaxation> {
    pop.validate()?;
    let vars = all_vars(pop);
    let mut a = Assembler::new();
    a.normalize();
    let blk = moment_matrix(&vars, d, &mut a.index).with_label(format!("M{d} dense"));
    a.block(blk);
    for c in &pop.constraints {
        let order = localizing_order(&c.poly, d)?;
        let sense = match c.sense {
            ConstraintSense::NonNeg => BlockSense::Psd,
            ConstraintSense::Zero => BlockSense::Zero,
        };
        let b = localizing_matrix(&c.poly, &vars, order, sense, &mut a.index)?;
        a.block(b.with_label(format!("L{order} {}", c.label)));
    }
    a.finish(pop)
}

/// Number of monomials of degree `≤ d` in `n` variables.
pub(crate) fn binom_count(n: usize, d: usize) -> usize {
    let mut r: usize = 1;
    for i in 1..=d {
        r = r.saturating_mul(n + i) / i;
    }
    r
}
