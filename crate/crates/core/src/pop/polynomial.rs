//! Sparse multivariate polynomials over variable ids.

use std::cmp::Ordering;
use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Monomial stored as `(variable id, exponent)` pairs, sorted by id, exponents > 0.
///
/// Ordered graded-lexicographically: lower total degree first; within a degree,
/// a larger exponent on a lower variable id comes first, so the degree-2
/// monomials in two variables list as `x0², x0·x1, x1²`.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial(Vec<(u32, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Self(Vec::new())
    }

    pub fn var(id: u32) -> Self {
        Self(vec![(id, 1)])
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, u32)>) -> Self {
        let mut m = BTreeMap::new();
        for (v, e) in pairs {
            if e > 0 {
                *m.entry(v).or_insert(0) += e;
            }
        }
        Self(m.into_iter().collect())
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    pub fn pairs(&self) -> &[(u32, u32)] {
        &self.0
    }

    pub fn exponent(&self, var: u32) -> u32 {
        self.0
            .binary_search_by_key(&var, |&(v, _)| v)
            .map_or(0, |i| self.0[i].1)
    }

    pub fn vars(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.iter().map(|&(v, _)| v)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial(out)
    }

    /// Value at `point`, indexed by variable id.
    pub fn eval(&self, point: &[f64]) -> f64 {
        self.0
            .iter()
            .map(|&(v, e)| point[v as usize].powi(e as i32))
            .product()
    }

    pub fn fmt_with(&self, names: &dyn Fn(u32) -> String) -> String {
        if self.is_one() {
            return "1".into();
        }
        self.0
            .iter()
            .map(|&(v, e)| {
                if e == 1 {
                    names(v)
                } else {
                    format!("{}^{e}", names(v))
                }
            })
            .collect::<Vec<_>>()
            .join("*")
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            let (va, ea) = a[i];
            let (vb, eb) = b[j];
            match va.cmp(&vb) {
                Ordering::Less => return Ordering::Less,
                Ordering::Greater => return Ordering::Greater,
                Ordering::Equal => match ea.cmp(&eb) {
                    Ordering::Equal => {
                        i += 1;
                        j += 1;
                    }
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Less => return Ordering::Greater,
                },
            }
        }
        // equal degree and one side exhausted: both must be exhausted
        (a.len() - i).cmp(&(b.len() - j)).reverse()
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.fmt_with(&|v| format!("v{v}")))
    }
}

/// Real polynomial as a sparse map monomial → coefficient. Zero coefficients
/// are never stored.
#[derive(Clone, PartialEq, Default)]
pub struct Polynomial {
    terms: BTreeMap<Monomial, f64>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn var(id: u32) -> Self {
        Self::monomial(Monomial::var(id), 1.0)
    }

    pub fn monomial(m: Monomial, c: f64) -> Self {
        let mut p = Self::zero();
        p.add_term(m, c);
        p
    }

    /// `Σ coeffs[k]·vars[k] + constant`.
    pub fn affine(vars: &[u32], coeffs: &[f64], constant: f64) -> Self {
        let mut p = Self::constant(constant);
        for (&v, &c) in vars.iter().zip(coeffs) {
            p.add_term(Monomial::var(v), c);
        }
        p
    }

    pub fn add_term(&mut self, m: Monomial, c: f64) {
        if c == 0.0 {
            return;
        }
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == 0.0 {
                    o.remove();
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Variables with a nonzero exponent in some term.
    pub fn support(&self) -> BTreeSet<u32> {
        self.terms.keys().flat_map(|m| m.vars()).collect()
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        self.terms.iter().map(|(m, c)| c * m.eval(point)).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        if s == 0.0 {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect(),
        }
    }

    pub fn mul_monomial(&self, m: &Monomial) -> Self {
        Self {
            terms: self.terms.iter().map(|(k, c)| (k.mul(m), *c)).collect(),
        }
    }

    pub fn square(&self) -> Self {
        self * self
    }

    pub fn fmt_with(&self, names: &dyn Fn(u32) -> String) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut s = String::new();
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let sign = if *c < 0.0 { "-" } else { "+" };
            if i > 0 || *c < 0.0 {
                s.push_str(if i > 0 { " " } else { "" });
                s.push_str(sign);
                s.push(' ');
            }
            if m.is_one() {
                s.push_str(&format!("{}", c.abs()));
            } else {
                s.push_str(&format!("{}*{}", c.abs(), m.fmt_with(names)));
            }
        }
        s
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.fmt_with(&|v| format!("v{v}")))
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in rhs.terms() {
            out.add_term(m.clone(), c);
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in rhs.terms() {
            out.add_term(m.clone(), -c);
        }
        out
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut acc: BTreeMap<Monomial, f64> = BTreeMap::new();
        for (ma, ca) in self.terms() {
            for (mb, cb) in rhs.terms() {
                *acc.entry(ma.mul(mb)).or_insert(0.0) += ca * cb;
            }
        }
        acc.retain(|_, c| *c != 0.0);
        Polynomial { terms: acc }
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn graded_lex_order() {
        let x = |v| Monomial::var(v);
        let mut ms = vec![
            x(1).mul(&x(1)),
            x(0).mul(&x(1)),
            Monomial::one(),
            x(1),
            x(0).mul(&x(0)),
            x(0),
        ];
        ms.sort();
        assert_eq!(
            ms,
            vec![
                Monomial::one(),
                x(0),
                x(1),
                x(0).mul(&x(0)),
                x(0).mul(&x(1)),
                x(1).mul(&x(1)),
            ]
        );
    }

    #[test]
    fn cancellation_drops_terms() {
        let p = Polynomial::var(0);
        let q = &p - &p;
        assert!(q.is_empty());
        let r = &(&Polynomial::var(0) + &Polynomial::constant(1.0)) * &(&Polynomial::var(0) - &Polynomial::constant(1.0));
        // (x+1)(x-1) = x^2 - 1
        assert_eq!(r.len(), 2);
        assert_eq!(r.degree(), 2);
        assert_eq!(r.eval(&[3.0]), 8.0);
    }

    fn arb_poly() -> impl Strategy<Value = Polynomial> {
        prop::collection::vec((0u32..3, 0u32..3, 0u32..3, -3i32..4), 0..6).prop_map(|ts| {
            let mut p = Polynomial::zero();
            for (a, b, c, k) in ts {
                p.add_term(Monomial::from_pairs([(0, a), (1, b), (2, c)]), k as f64);
            }
            p
        })
    }

    proptest! {
        #[test]
        fn ring_ops_agree_with_evaluation(p in arb_poly(), q in arb_poly(),
                                          x in prop::collection::vec(-2.0f64..2.0, 3)) {
            let s = (&p + &q).eval(&x);
            prop_assert!((s - (p.eval(&x) + q.eval(&x))).abs() < 1e-9);
            let m = (&p * &q).eval(&x);
            prop_assert!((m - p.eval(&x) * q.eval(&x)).abs() < 1e-7 * (1.0 + m.abs()));
            prop_assert!((&p * &q).terms().all(|(_, c)| c != 0.0));
        }

        #[test]
        fn order_is_total_and_graded(a in prop::collection::vec(0u32..3, 3), b in prop::collection::vec(0u32..3, 3)) {
            let ma = Monomial::from_pairs(a.iter().enumerate().map(|(i, &e)| (i as u32, e)));
            let mb = Monomial::from_pairs(b.iter().enumerate().map(|(i, &e)| (i as u32, e)));
            prop_assert_eq!(ma.cmp(&mb) == Ordering::Equal, ma == mb);
            prop_assert_eq!(ma.cmp(&mb), mb.cmp(&ma).reverse());
            if ma.degree() < mb.degree() {
                prop_assert_eq!(ma.cmp(&mb), Ordering::Less);
            }
        }
    }
}
