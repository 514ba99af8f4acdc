//! Polynomial optimization problems, and the Lipschitz-constant POP of a ReLU
//! network with its variable-subset structure.

mod lcep;
pub mod polynomial;
mod subsets;

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::network::InputRegion;

pub use lcep::{
    build_lcep, build_lcep_for_output, build_lifted_lcep2, build_lifted_lcep2_for_output, lift_point,
    LcepLayout,
};
pub use polynomial::{Monomial, Polynomial};
pub use subsets::{build_subsets, rip_violation, verify_rip};

/// Default number of `s = u₁u₂ᵀ` variables above which lifting warns.
pub const DEFAULT_LIFT_CAP: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKind {
    T,
    /// Activation `x_layer`; layer 0 is the input.
    X(usize),
    U(usize),
    Z(usize),
    /// Lifted product `u₁ʲ u₂ᵏ`, coordinate `j·p₂ + k`.
    S,
    Generic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub kind: VarKind,
    pub coord: usize,
    pub id: u32,
}

impl Variable {
    pub fn name(&self) -> String {
        match self.kind {
            VarKind::T => format!("t[{}]", self.coord),
            VarKind::X(l) => format!("x{l}[{}]", self.coord),
            VarKind::U(l) => format!("u{l}[{}]", self.coord),
            VarKind::Z(l) => format!("z{l}[{}]", self.coord),
            VarKind::S => format!("s[{}]", self.coord),
            VarKind::Generic => format!("v[{}]", self.coord),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintSense {
    /// `g ≥ 0`
    NonNeg,
    /// `g = 0`
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tag {
    Untagged,
    Subset(usize),
    /// Violates the subset pattern; only scalar moment constraints are imposed.
    Bad,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub poly: Polynomial,
    pub sense: ConstraintSense,
    pub tag: Tag,
    pub label: String,
}

impl Constraint {
    pub fn nonneg(poly: Polynomial, label: impl Into<String>) -> Self {
        Self {
            poly,
            sense: ConstraintSense::NonNeg,
            tag: Tag::Untagged,
            label: label.into(),
        }
    }

    pub fn zero(poly: Polynomial, label: impl Into<String>) -> Self {
        Self {
            poly,
            sense: ConstraintSense::Zero,
            tag: Tag::Untagged,
            label: label.into(),
        }
    }

    pub fn bad(poly: Polynomial, label: impl Into<String>) -> Self {
        Self {
            poly,
            sense: ConstraintSense::Zero,
            tag: Tag::Bad,
            label: label.into(),
        }
    }

    /// Residual at `point` in the constraint's own sense: nonnegative values
    /// mean satisfied for `NonNeg`, zero means satisfied for `Zero`.
    pub fn value(&self, point: &[f64]) -> f64 {
        self.poly.eval(point)
    }

    pub fn is_satisfied(&self, point: &[f64], tol: f64) -> bool {
        let v = self.value(point);
        match self.sense {
            ConstraintSense::NonNeg => v >= -tol,
            ConstraintSense::Zero => v.abs() <= tol,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct PopMeta {
    pub layer_sizes: Vec<usize>,
    pub region: Option<InputRegion>,
    pub label: Option<usize>,
}

/// A polynomial optimization problem over variables `0..n`.
///
/// The objective is maximized unless `maximize` is false.
#[derive(Clone, Debug)]
pub struct PopProblem {
    pub variables: Vec<Variable>,
    pub objective: Polynomial,
    pub maximize: bool,
    pub constraints: Vec<Constraint>,
    pub subsets: Vec<Vec<u32>>,
    /// Per-variable interval `[lo, hi]` valid on the feasible set.
    pub ranges: Option<Vec<(f64, f64)>>,
    pub layout: Option<LcepLayout>,
    pub meta: PopMeta,
    pub warnings: Vec<String>,
}

impl PopProblem {
    /// Problem over `n` generic variables with no constraints.
    pub fn generic(n: usize, objective: Polynomial, maximize: bool) -> Self {
        Self {
            variables: (0..n)
                .map(|i| Variable {
                    kind: VarKind::Generic,
                    coord: i,
                    id: i as u32,
                })
                .collect(),
            objective,
            maximize,
            constraints: Vec::new(),
            subsets: Vec::new(),
            ranges: None,
            layout: None,
            meta: PopMeta::default(),
            warnings: Vec::new(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn push(&mut self, c: Constraint) {
        self.constraints.push(c);
    }

    pub fn var_name(&self, id: u32) -> String {
        self.variables
            .get(id as usize)
            .map_or_else(|| format!("v[{id}]"), Variable::name)
    }

    /// Largest degree among objective and constraints.
    pub fn max_degree(&self) -> u32 {
        self.constraints
            .iter()
            .map(|c| c.poly.degree())
            .chain(std::iter::once(self.objective.degree()))
            .max()
            .unwrap_or(0)
    }

    /// Assigns every untagged constraint to the first subset covering its
    /// support. A constraint with empty support is assigned to subset 0.
    pub fn tag_constraints(&mut self) -> Result<()> {
        let sets: Vec<BTreeSet<u32>> = self
            .subsets
            .iter()
            .map(|s| s.iter().copied().collect())
            .collect();
        for (index, c) in self.constraints.iter_mut().enumerate() {
            if c.tag != Tag::Untagged {
                continue;
            }
            let support = c.poly.support();
            let k = sets
                .iter()
                .position(|s| support.is_subset(s))
                .ok_or(Error::UncoveredConstraint { index })?;
            c.tag = Tag::Subset(k);
        }
        Ok(())
    }

    /// Checks ids, subset coverage of tagged constraints, and the degree of
    /// bad constraints.
    pub fn validate(&self) -> Result<()> {
        for (i, v) in self.variables.iter().enumerate() {
            if v.id as usize != i {
                return Err(Error::InvalidArgument(format!(
                    "variable ids are not dense at position {i}"
                )));
            }
        }
        let n = self.n_vars() as u32;
        let in_range = |p: &Polynomial| p.support().iter().all(|&v| v < n);
        if !in_range(&self.objective) {
            return Err(Error::InvalidArgument("objective references unknown variable".into()));
        }
        for (index, c) in self.constraints.iter().enumerate() {
            if !in_range(&c.poly) {
                return Err(Error::InvalidArgument(format!(
                    "constraint {index} references unknown variable"
                )));
            }
            match c.tag {
                Tag::Subset(k) => {
                    let set: BTreeSet<u32> = self
                        .subsets
                        .get(k)
                        .ok_or(Error::UncoveredConstraint { index })?
                        .iter()
                        .copied()
                        .collect();
                    if !c.poly.support().is_subset(&set) {
                        return Err(Error::UncoveredConstraint { index });
                    }
                }
                Tag::Bad => {
                    if c.poly.degree() > 2 {
                        return Err(Error::InvalidArgument(format!(
                            "bad constraint {index} has degree {}",
                            c.poly.degree()
                        )));
                    }
                }
                Tag::Untagged => {}
            }
        }
        if let Some(r) = &self.ranges {
            if r.len() != self.n_vars() {
                return Err(Error::Dimension {
                    expected: self.n_vars(),
                    got: r.len(),
                });
            }
        }
        Ok(())
    }

    pub fn is_feasible(&self, point: &[f64], tol: f64) -> bool {
        self.constraints.iter().all(|c| c.is_satisfied(point, tol))
    }

    /// Generic problem from JSON:
    ///
    /// ```json
    /// {"n_vars": 2, "maximize": false,
    ///  "objective": [[1.0, [[0, 1], [1, 1]]]],
    ///  "constraints": [{"sense": "nonneg", "poly": [[1.0, []], [-1.0, [[0, 2]]], [-1.0, [[1, 2]]]]}],
    ///  "subsets": [[0, 1]]}
    /// ```
    ///
    /// A polynomial is a list of `[coefficient, [[variable, exponent], ...]]`.
    /// Without `subsets` all variables form one subset.
    pub fn from_json_str(text: &str) -> Result<Self> {
        #[derive(serde::Deserialize)]
        #[serde(deny_unknown_fields)]
        struct JsonConstraint {
            sense: String,
            poly: Vec<(f64, Vec<(u32, u32)>)>,
            #[serde(default)]
            label: Option<String>,
        }
        #[derive(serde::Deserialize)]
        #[serde(deny_unknown_fields)]
        struct JsonPop {
            n_vars: usize,
            #[serde(default)]
            maximize: bool,
            objective: Vec<(f64, Vec<(u32, u32)>)>,
            #[serde(default)]
            constraints: Vec<JsonConstraint>,
            #[serde(default)]
            subsets: Option<Vec<Vec<u32>>>,
        }
        let j: JsonPop = serde_json::from_str(text).map_err(|e| Error::Parse(format!("pop json: {e}")))?;
        let poly = |terms: &[(f64, Vec<(u32, u32)>)]| -> Result<Polynomial> {
            let mut p = Polynomial::zero();
            for (c, pairs) in terms {
                if !c.is_finite() {
                    return Err(Error::NonFinite("pop coefficient".into()));
                }
                p.add_term(Monomial::from_pairs(pairs.iter().copied()), *c);
            }
            Ok(p)
        };
        let mut pop = PopProblem::generic(j.n_vars, poly(&j.objective)?, j.maximize);
        for (i, c) in j.constraints.iter().enumerate() {
            let g = poly(&c.poly)?;
            let label = c.label.clone().unwrap_or_else(|| format!("g{i}"));
            pop.push(match c.sense.as_str() {
                "nonneg" => Constraint::nonneg(g, label),
                "zero" => Constraint::zero(g, label),
                other => return Err(Error::Parse(format!("unknown constraint sense '{other}'"))),
            });
        }
        pop.subsets = j.subsets.unwrap_or_else(|| vec![(0..j.n_vars as u32).collect()]);
        pop.validate_ids()?;
        pop.tag_constraints()?;
        pop.validate()?;
        Ok(pop)
    }

    fn validate_ids(&self) -> Result<()> {
        let n = self.n_vars() as u32;
        if self.subsets.iter().flatten().any(|&v| v >= n) {
            return Err(Error::InvalidArgument("subset references unknown variable".into()));
        }
        Ok(())
    }

    /// Human-readable listing, one item per line.
    pub fn dump(&self) -> String {
        let names = |v: u32| self.var_name(v);
        let mut s = String::new();
        let sense = if self.maximize { "maximize" } else { "minimize" };
        let _ = writeln!(s, "{sense} {}", self.objective.fmt_with(&names));
        for c in &self.constraints {
            let rel = match c.sense {
                ConstraintSense::NonNeg => ">= 0",
                ConstraintSense::Zero => "= 0",
            };
            let tag = match c.tag {
                Tag::Untagged => String::new(),
                Tag::Subset(k) => format!("  [subset {k}]"),
                Tag::Bad => "  [bad]".into(),
            };
            let _ = writeln!(s, "  {}: {} {rel}{tag}", c.label, c.poly.fmt_with(&names));
        }
        for (k, set) in self.subsets.iter().enumerate() {
            let members: Vec<String> = set.iter().map(|&v| names(v)).collect();
            let _ = writeln!(s, "  subset {k}: {{{}}}", members.join(", "));
        }
        s
    }
}
