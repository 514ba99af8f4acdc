//! Monomial bases, moment indexing and symbolic moment / localizing matrices.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::pop::{Monomial, Polynomial};

/// All monomials of total degree `≤ degree` in `vars`, graded-lex ordered.
#[derive(Clone, Debug, PartialEq)]
pub struct MonomialBasis {
    pub vars: Vec<u32>,
    pub degree: u32,
    pub monomials: Vec<Monomial>,
}

impl MonomialBasis {
    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }
}

pub fn basis(vars: &[u32], d: u32) -> MonomialBasis {
    let mut vs = vars.to_vec();
    vs.sort_unstable();
    vs.dedup();
    let mut out = vec![Monomial::one()];
    let mut frontier = vec![(Monomial::one(), 0usize)];
    for _ in 0..d {
        let mut next = Vec::new();
        for (m, start) in &frontier {
            for (k, &v) in vs.iter().enumerate().skip(*start) {
                next.push((m.mul(&Monomial::var(v)), k));
            }
        }
        out.extend(next.iter().map(|(m, _)| m.clone()));
        frontier = next;
    }
    out.sort();
    MonomialBasis {
        vars: vs,
        degree: d,
        monomials: out,
    }
}

/// Bijection between monomials and moment variables, in registration order.
/// The constant monomial is always index 0.
#[derive(Clone, Debug)]
pub struct MomentIndex {
    ids: HashMap<Monomial, usize>,
    monomials: Vec<Monomial>,
}

impl Default for MomentIndex {
    fn default() -> Self {
        Self::new()
    }
}

impl MomentIndex {
    pub fn new() -> Self {
        let mut idx = Self {
            ids: HashMap::new(),
            monomials: Vec::new(),
        };
        idx.register(&Monomial::one());
        idx
    }

    pub fn register(&mut self, m: &Monomial) -> usize {
        if let Some(&i) = self.ids.get(m) {
            return i;
        }
        let i = self.monomials.len();
        self.ids.insert(m.clone(), i);
        self.monomials.push(m.clone());
        i
    }

    pub fn get(&self, m: &Monomial) -> Option<usize> {
        self.ids.get(m).copied()
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn monomial(&self, i: usize) -> &Monomial {
        &self.monomials[i]
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    /// Moments of the Dirac measure at `point`: `y_α = point^α`.
    pub fn point_moments(&self, point: &[f64]) -> Vec<f64> {
        self.monomials.iter().map(|m| m.eval(point)).collect()
    }
}

/// `Σ coef · y_index`, sorted by index with no repeated or zero entries.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearForm(pub Vec<(usize, f64)>);

impl LinearForm {
    pub fn from_terms(mut terms: Vec<(usize, f64)>) -> Self {
        terms.sort_unstable_by_key(|&(i, _)| i);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for (i, c) in terms {
            match out.last_mut() {
                Some((j, acc)) if *j == i => *acc += c,
                _ => out.push((i, c)),
            }
        }
        out.retain(|&(_, c)| c != 0.0);
        Self(out)
    }

    pub fn single(i: usize) -> Self {
        Self(vec![(i, 1.0)])
    }

    pub fn terms(&self) -> &[(usize, f64)] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        self.0.iter().map(|&(i, c)| c * y[i]).sum()
    }

    pub fn add(&self, other: &LinearForm) -> LinearForm {
        let mut t = self.0.clone();
        t.extend_from_slice(&other.0);
        Self::from_terms(t)
    }

    pub fn scale(&self, s: f64) -> LinearForm {
        Self::from_terms(self.0.iter().map(|&(i, c)| (i, c * s)).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockSense {
    Psd,
    /// Every entry is constrained to zero.
    Zero,
}

/// Symmetric matrix of linear forms in the moments, stored as its packed
/// upper triangle (column-major: entry `(i, j)`, `i ≤ j`, at `j(j+1)/2 + i`).
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolicBlock {
    pub dim: usize,
    pub entries: Vec<LinearForm>,
    pub sense: BlockSense,
    pub label: String,
}

impl SymbolicBlock {
    pub fn packed_index(i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        j * (j + 1) / 2 + i
    }

    pub fn entry(&self, i: usize, j: usize) -> &LinearForm {
        &self.entries[Self::packed_index(i, j)]
    }

    /// Upper-triangle positions `(i, j)` in packed order.
    pub fn positions(dim: usize) -> impl Iterator<Item = (usize, usize)> {
        (0..dim).flat_map(|j| (0..=j).map(move |i| (i, j)))
    }

    /// Dense row-major numeric matrix at moment vector `y`.
    pub fn eval(&self, y: &[f64]) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.dim]; self.dim];
        for (i, j) in Self::positions(self.dim) {
            let v = self.entry(i, j).eval(y);
            m[i][j] = v;
            m[j][i] = v;
        }
        m
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }
}

/// PSD block with rows and columns indexed by `rows`: entry `(a, b)` is the
/// moment of `rows[a]·rows[b]`.
pub fn gram_block(rows: &[Monomial], index: &mut MomentIndex) -> SymbolicBlock {
    let dim = rows.len();
    let entries = SymbolicBlock::positions(dim)
        .map(|(i, j)| LinearForm::single(index.register(&rows[i].mul(&rows[j]))))
        .collect();
    SymbolicBlock {
        dim,
        entries,
        sense: BlockSense::Psd,
        label: String::new(),
    }
}

/// `M_d(y, subset)`.
pub fn moment_matrix(subset: &[u32], d: u32, index: &mut MomentIndex) -> SymbolicBlock {
    gram_block(&basis(subset, d).monomials, index).with_label(format!("M{d}"))
}

/// Order of the localizing matrix of `g` inside an order-`d` relaxation.
pub fn localizing_order(g: &Polynomial, d: u32) -> Result<u32> {
    let w = g.degree().div_ceil(2);
    if w > d {
        return Err(Error::DegreeDeficit {
            degree: g.degree(),
            order: d,
        });
    }
    Ok(d - w)
}

/// `M_order(g·y, subset)`: entry `(α, β)` is `Σ_γ g_γ y_{α+β+γ}`.
pub fn localizing_matrix(
    g: &Polynomial,
    subset: &[u32],
    order: u32,
    sense: BlockSense,
    index: &mut MomentIndex,
) -> Result<SymbolicBlock> {
    if !g.support().iter().all(|v| subset.contains(v)) {
        return Err(Error::InvalidArgument(
            "localizing polynomial leaves its subset".into(),
        ));
    }
    let rows = basis(subset, order).monomials;
    let dim = rows.len();
    let entries = SymbolicBlock::positions(dim)
        .map(|(i, j)| {
            let ab = rows[i].mul(&rows[j]);
            LinearForm::from_terms(g.terms().map(|(m, c)| (index.register(&ab.mul(m)), c)).collect())
        })
        .collect();
    Ok(SymbolicBlock {
        dim,
        entries,
        sense,
        label: format!("L{order}"),
    })
}

/// Riesz functional `L_y(f)` as a linear form.
pub fn riesz(f: &Polynomial, index: &mut MomentIndex) -> LinearForm {
    LinearForm::from_terms(f.terms().map(|(m, c)| (index.register(m), c)).collect())
}

/// 3×3 sub-block of `M₂` on `{t, u₁, u₂}` with rows `[1, t, u₁u₂]`.
pub fn sub_moment_block(t: u32, u1: u32, u2: u32, index: &mut MomentIndex) -> SymbolicBlock {
    let rows = [
        Monomial::one(),
        Monomial::var(t),
        Monomial::from_pairs([(u1, 1), (u2, 1)]),
    ];
    gram_block(&rows, index).with_label("M2sub")
}

/// Sub-block of `M₂` with rows `[1, t, u₁·u₂ᵏ]`, of size `1 + |t| + |u₁|`.
pub fn sub_moment_block_agg(t: &[u32], u1: &[u32], u2k: u32, index: &mut MomentIndex) -> SymbolicBlock {
    let mut rows = vec![Monomial::one()];
    rows.extend(t.iter().map(|&v| Monomial::var(v)));
    rows.extend(u1.iter().map(|&v| Monomial::from_pairs([(v, 1), (u2k, 1)])));
    gram_block(&rows, index).with_label("M2agg")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sym_eigs_min(m: &[Vec<f64>]) -> f64 {
        let n = m.len();
        let a = faer::Mat::<f64>::from_fn(n, n, |i, j| m[i][j]);
        let ev = a.self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
        ev.iter().copied().fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn basis_sizes_and_order() {
        let b = basis(&[0, 1], 1);
        assert_eq!(b.monomials, vec![Monomial::one(), Monomial::var(0), Monomial::var(1)]);
        assert_eq!(basis(&[4, 5, 6], 0).len(), 1);
        assert_eq!(basis(&[0, 1, 2], 2).len(), 10);
        assert_eq!(basis(&[0, 1], 2).len(), 6);
        assert_eq!(basis(&[0, 1], 4).len(), 15);
    }

    #[test]
    fn disk_moment_matrix_and_localizer() {
        let mut idx = MomentIndex::new();
        let m1 = moment_matrix(&[0, 1], 1, &mut idx);
        assert_eq!(m1.dim, 3);
        let snapshot = idx.clone();
        let y = |a: u32, b: u32| snapshot.get(&Monomial::from_pairs([(0, a), (1, b)])).unwrap();
        assert_eq!(m1.entry(0, 0), &LinearForm::single(y(0, 0)));
        assert_eq!(m1.entry(1, 2), &LinearForm::single(y(1, 1)));
        assert_eq!(m1.entry(2, 2), &LinearForm::single(y(0, 2)));
        assert_eq!(idx.len(), 6);

        let x = Polynomial::var;
        let g = &(&Polynomial::constant(1.0) - &x(0).square()) - &x(1).square();
        let order = localizing_order(&g, 1).unwrap();
        assert_eq!(order, 0);
        let l = localizing_matrix(&g, &[0, 1], order, BlockSense::Psd, &mut idx).unwrap();
        assert_eq!(l.dim, 1);
        assert_eq!(
            l.entry(0, 0),
            &LinearForm::from_terms(vec![(0, 1.0), (y(2, 0), -1.0), (y(0, 2), -1.0)])
        );
        assert!(localizing_order(&g, 0).is_err());

        let f = &x(0) * &x(1);
        assert_eq!(riesz(&f, &mut idx), LinearForm::single(y(1, 1)));
        assert_eq!(riesz(&Polynomial::constant(7.0), &mut idx), LinearForm(vec![(0, 7.0)]));
    }

    #[test]
    fn sparse_blocks_are_submatrices_of_dense() {
        let mut idx = MomentIndex::new();
        let dense = moment_matrix(&[0, 1, 2], 1, &mut idx);
        let n_dense = idx.len();
        let b1 = moment_matrix(&[0, 1], 1, &mut idx);
        let b2 = moment_matrix(&[1, 2], 1, &mut idx);
        assert_eq!(idx.len(), n_dense);
        // rows of the dense block: [1, x0, x1, x2]
        for (blk, rows) in [(&b1, [0usize, 1, 2]), (&b2, [0, 2, 3])] {
            for a in 0..3 {
                for b in 0..3 {
                    assert_eq!(blk.entry(a, b), dense.entry(rows[a], rows[b]));
                }
            }
        }
        let mut sep = MomentIndex::new();
        moment_matrix(&[0, 1], 2, &mut sep);
        let one = sep.len();
        moment_matrix(&[1, 2], 2, &mut sep);
        assert!(sep.len() < 2 * one);
    }

    #[test]
    fn singleton_block_is_hankel() {
        let mut idx = MomentIndex::new();
        let b = moment_matrix(&[3], 1, &mut idx);
        let x = idx.get(&Monomial::var(3)).unwrap();
        let x2 = idx.get(&Monomial::from_pairs([(3, 2)])).unwrap();
        assert_eq!(b.entries, vec![LinearForm::single(0), LinearForm::single(x), LinearForm::single(x2)]);
    }

    #[test]
    fn binary_localizer_and_constant_polynomial() {
        let mut idx = MomentIndex::new();
        let u = Polynomial::var(0);
        let g = &u * &(&u - &Polynomial::constant(1.0));
        let z = localizing_matrix(&g, &[0, 1], 1, BlockSense::Zero, &mut idx).unwrap();
        assert_eq!(z.dim, 3);
        assert_eq!(z.sense, BlockSense::Zero);
        let u2 = idx.get(&Monomial::from_pairs([(0, 2)])).unwrap();
        let u1 = idx.get(&Monomial::var(0)).unwrap();
        assert_eq!(z.entry(0, 0), &LinearForm::from_terms(vec![(u2, 1.0), (u1, -1.0)]));

        let c = localizing_matrix(&Polynomial::constant(1.0), &[0, 1], 1, BlockSense::Psd, &mut idx).unwrap();
        assert_eq!(c.entries, moment_matrix(&[0, 1], 1, &mut idx).entries);
    }

    #[test]
    fn sub_moment_blocks() {
        let mut idx = MomentIndex::new();
        let b = sub_moment_block(0, 1, 2, &mut idx);
        let mono = |p: &[(u32, u32)]| LinearForm::single(idx.get(&Monomial::from_pairs(p.iter().copied())).unwrap());
        assert_eq!(b.entry(0, 2), &mono(&[(1, 1), (2, 1)]));
        assert_eq!(b.entry(1, 2), &mono(&[(0, 1), (1, 1), (2, 1)]));
        assert_eq!(b.entry(2, 2), &mono(&[(1, 2), (2, 2)]));
        let agg = sub_moment_block_agg(&[0, 3], &[1, 4, 5], 2, &mut idx);
        assert_eq!(agg.dim, 1 + 2 + 3);
    }

    proptest! {
        #[test]
        fn riesz_is_linear(a in prop::collection::vec((0u32..3, 0u32..3, -5i32..5), 0..6),
                           b in prop::collection::vec((0u32..3, 0u32..3, -5i32..5), 0..6)) {
            let mk = |ts: &Vec<(u32, u32, i32)>| {
                let mut p = Polynomial::zero();
                for &(e0, e1, c) in ts {
                    p.add_term(Monomial::from_pairs([(0, e0), (1, e1)]), c as f64);
                }
                p
            };
            let (f, g) = (mk(&a), mk(&b));
            let mut idx = MomentIndex::new();
            let lhs = riesz(&(&f + &g), &mut idx);
            let rhs = riesz(&f, &mut idx).add(&riesz(&g, &mut idx));
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn point_mass_blocks(x in prop::collection::vec(-2.0f64..2.0, 3)) {
            let mut idx = MomentIndex::new();
            let m = moment_matrix(&[0, 1, 2], 2, &mut idx);
            let v = Polynomial::var;
            let g = &(&Polynomial::constant(1.5) - &v(0).square()) + &(&v(1) * &v(2));
            let l = localizing_matrix(&g, &[0, 1, 2], 1, BlockSense::Psd, &mut idx).unwrap();
            let y = idx.point_moments(&x);
            let rows = basis(&[0, 1, 2], 2).monomials;
            let mv: Vec<f64> = rows.iter().map(|r| r.eval(&x)).collect();
            let me = m.eval(&y);
            for i in 0..m.dim {
                for j in 0..m.dim {
                    prop_assert!((me[i][j] - mv[i] * mv[j]).abs() < 1e-9);
                }
            }
            let gx = g.eval(&x);
            let le = l.eval(&y);
            let lrows = basis(&[0, 1, 2], 1).monomials;
            let lv: Vec<f64> = lrows.iter().map(|r| r.eval(&x)).collect();
            for i in 0..l.dim {
                for j in 0..l.dim {
                    prop_assert!((le[i][j] - gx * lv[i] * lv[j]).abs() < 1e-9);
                }
            }
            prop_assert!(sym_eigs_min(&me) > -1e-8);
            let lmin = sym_eigs_min(&le);
            if gx > 1e-6 { prop_assert!(lmin > -1e-8); }
            if gx < -1e-6 { prop_assert!(lmin < 0.0); }
        }
    }
}
