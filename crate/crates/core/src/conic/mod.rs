//! Solver-neutral moment-side conic problems, an interior-point solver, and
//! SDPA sparse file export / import.
//!
//! A [`ConicProblem`] optimizes a linear form over free variables `y` subject
//! to `A y = b`, `G y ≤ h` and linear matrix inequalities
//! `S₀ + Σ yᵢ Sᵢ ⪰ 0`. [`solve`] converts it to the block-diagonal primal
//! standard form `min ⟨C, X⟩, 𝒜(X) + B w = b, X ⪰ 0` and runs a primal-dual
//! path-following method on that form.

mod ipm;
mod sdpa;
mod standard;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::LinearForm;

pub use sdpa::{
    export_sdpa, import_solution, parse_sdpa, parse_solution, read_sdpa, solution_string, write_sdpa_string, write_solution,
};

#[derive(Clone, Debug, PartialEq)]
pub struct LinearConstraint {
    pub form: LinearForm,
    pub rhs: f64,
}

/// `S₀ + Σ yᵢ Sᵢ`, stored as packed upper-triangle affine entries
/// (column-major, see [`crate::moments::SymbolicBlock::packed_index`]).
#[derive(Clone, Debug, PartialEq)]
pub struct PsdBlock {
    pub dim: usize,
    pub entries: Vec<LinearForm>,
    /// Packed `S₀`; empty means zero.
    pub constant: Vec<f64>,
    pub label: String,
}

impl PsdBlock {
    pub fn new(dim: usize, entries: Vec<LinearForm>, label: impl Into<String>) -> Self {
        Self {
            dim,
            entries,
            constant: Vec::new(),
            label: label.into(),
        }
    }

    pub fn constant_at(&self, k: usize) -> f64 {
        self.constant.get(k).copied().unwrap_or(0.0)
    }

    /// Dense value at `y`, column-major `dim × dim`.
    pub fn value(&self, y: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut m = vec![0.0; n * n];
        let mut k = 0;
        for j in 0..n {
            for i in 0..=j {
                let v = self.entries[k].eval(y) + self.constant_at(k);
                m[i + j * n] = v;
                m[j + i * n] = v;
                k += 1;
            }
        }
        m
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConicProblem {
    pub n_vars: usize,
    pub objective: LinearForm,
    pub objective_constant: f64,
    pub maximize: bool,
    /// `form = rhs`
    pub equalities: Vec<LinearConstraint>,
    /// `form ≤ rhs`
    pub inequalities: Vec<LinearConstraint>,
    pub psd: Vec<PsdBlock>,
    /// Expected magnitude of each variable, used to condition the solve.
    pub scale: Option<Vec<f64>>,
}

impl ConicProblem {
    pub fn new(n_vars: usize, maximize: bool) -> Self {
        Self {
            n_vars,
            maximize,
            ..Self::default()
        }
    }

    pub fn add_equality(&mut self, form: LinearForm, rhs: f64) {
        self.equalities.push(LinearConstraint { form, rhs });
    }

    pub fn add_inequality(&mut self, form: LinearForm, rhs: f64) {
        self.inequalities.push(LinearConstraint { form, rhs });
    }

    pub fn objective_value(&self, y: &[f64]) -> f64 {
        self.objective.eval(y) + self.objective_constant
    }

    /// Same feasible set, objective negated and sense toggled.
    pub fn negated(&self) -> Self {
        let mut p = self.clone();
        p.objective = p.objective.scale(-1.0);
        p.objective_constant = -p.objective_constant;
        p.maximize = !p.maximize;
        p
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_vars;
        let check = |f: &LinearForm, what: &str| -> Result<()> {
            if let Some(&(i, c)) = f.terms().iter().find(|&&(i, c)| i >= n || !c.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "{what} references variable {i} (coefficient {c}) with n_vars = {n}"
                )));
            }
            Ok(())
        };
        check(&self.objective, "objective")?;
        for c in self.equalities.iter().chain(&self.inequalities) {
            check(&c.form, "linear constraint")?;
            if !c.rhs.is_finite() {
                return Err(Error::NonFinite("constraint right-hand side".into()));
            }
        }
        for b in &self.psd {
            let len = b.dim * (b.dim + 1) / 2;
            if b.entries.len() != len || !(b.constant.is_empty() || b.constant.len() == len) {
                return Err(Error::InvalidArgument(format!(
                    "psd block '{}' has inconsistent packed length",
                    b.label
                )));
            }
            for e in &b.entries {
                check(e, "psd block")?;
            }
        }
        if let Some(s) = &self.scale {
            if s.len() != n || s.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::InvalidArgument("scale hints must be positive, one per variable".into()));
            }
        }
        Ok(())
    }

    /// Constraint violations of `y`, measured relative to the magnitude of
    /// the terms involved so that they are comparable across scales.
    pub fn residuals(&self, y: &[f64]) -> Residuals {
        let rel = |c: &LinearConstraint| {
            let v = c.form.eval(y) - c.rhs;
            let mag: f64 = c.form.terms().iter().map(|&(i, a)| (a * y[i]).abs()).sum::<f64>() + c.rhs.abs();
            (v, 1.0 + mag)
        };
        let eq = self
            .equalities
            .iter()
            .map(|c| {
                let (v, m) = rel(c);
                v.abs() / m
            })
            .fold(0.0, f64::max);
        let ineq = self
            .inequalities
            .iter()
            .map(|c| {
                let (v, m) = rel(c);
                v.max(0.0) / m
            })
            .fold(0.0, f64::max);
        let psd_floor = self
            .psd
            .iter()
            .map(|b| normalized_min_eigenvalue(b.dim, &b.value(y)))
            .fold(f64::INFINITY, f64::min);
        Residuals {
            equality: eq,
            inequality: ineq,
            psd_floor: if self.psd.is_empty() { 0.0 } else { psd_floor },
        }
    }
}

/// Violation summary of a candidate point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// Largest relative equality violation.
    pub equality: f64,
    /// Largest relative inequality violation.
    pub inequality: f64,
    /// Smallest eigenvalue over all PSD blocks after symmetric diagonal
    /// normalization to unit diagonal.
    pub psd_floor: f64,
}

impl Residuals {
    pub fn max_violation(&self) -> f64 {
        self.equality.max(self.inequality).max((-self.psd_floor).max(0.0))
    }
}

/// `λ_min(D S D)` with `D = diag(1/√|S_pp|)`, so that the value does not
/// depend on the scale of individual rows.
pub fn normalized_min_eigenvalue(n: usize, s: &[f64]) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let maxd = (0..n).map(|p| s[p + p * n].abs()).fold(0.0, f64::max);
    if maxd == 0.0 {
        let off = s.iter().map(|v| v.abs()).fold(0.0, f64::max);
        return if off == 0.0 { 0.0 } else { -1.0 };
    }
    let floor = maxd * 1e-30;
    let d: Vec<f64> = (0..n).map(|p| 1.0 / s[p + p * n].abs().max(floor).sqrt()).collect();
    let m = faer::Mat::<f64>::from_fn(n, n, |i, j| s[i + j * n] * d[i] * d[j]);
    match m.self_adjoint_eigenvalues(faer::Side::Lower) {
        Ok(ev) => ev.first().copied().unwrap_or(0.0),
        Err(_) => f64::NEG_INFINITY,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Optimal,
    NearOptimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

impl Status {
    pub fn has_value(self) -> bool {
        matches!(self, Status::Optimal | Status::NearOptimal)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::NearOptimal => "near_optimal",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
            Status::NumericalFailure => "numerical_failure",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Settings {
    pub feas_tol: f64,
    pub rel_gap_tol: f64,
    pub max_iter: usize,
    /// Seconds.
    pub time_limit: Option<f64>,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            feas_tol: 1e-8,
            rel_gap_tol: 1e-8,
            max_iter: 200,
            time_limit: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub y: Vec<f64>,
    /// Objective at `y`.
    pub value: f64,
    /// Value of the dual objective, a bound on the optimum from the other side.
    pub dual_value: f64,
    pub status: Status,
    /// Relative primal infeasibility of the internal standard form.
    pub primal_residual: f64,
    /// Relative dual infeasibility of the internal standard form.
    pub dual_residual: f64,
    pub rel_gap: f64,
    /// Violations of the original problem, recomputed at `y`.
    pub residuals: Residuals,
    pub iterations: usize,
    pub solve_time_s: f64,
}

/// Solves `problem`. Failures are reported through [`Solution::status`]; an
/// `Err` means the problem itself is malformed.
pub fn solve(problem: &ConicProblem, settings: &Settings) -> Result<Solution> {
    problem.validate()?;
    let start = Instant::now();
    let sf = standard::StandardForm::build(problem);
    let out = ipm::solve(&sf.data, settings, start);
    let y = sf.recover(&out.x, &out.w);
    let sign = if problem.maximize { -1.0 } else { 1.0 };
    let value = problem.objective_value(&y);
    let dual_value = sign * (out.dual_obj * sf.objective_scale + sf.objective_offset) + problem.objective_constant;
    let residuals = problem.residuals(&y);
    Ok(Solution {
        value: if out.status.has_value() { value } else { f64::NAN },
        dual_value: if out.status.has_value() { dual_value } else { f64::NAN },
        y,
        status: out.status,
        primal_residual: out.pinf,
        dual_residual: out.dinf,
        rel_gap: out.gap,
        residuals,
        iterations: out.iterations,
        solve_time_s: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk() -> ConicProblem {
        // y = (y00, y10, y01, y20, y11, y02); min y11
        let mut p = ConicProblem::new(6, false);
        p.objective = LinearForm::single(4);
        p.add_equality(LinearForm::single(0), 1.0);
        p.add_inequality(LinearForm::from_terms(vec![(0, -1.0), (3, 1.0), (5, 1.0)]), 0.0);
        let e = |i| LinearForm::single(i);
        // packed upper, column-major: (0,0) (0,1) (1,1) (0,2) (1,2) (2,2)
        p.psd.push(PsdBlock::new(3, vec![e(0), e(1), e(3), e(2), e(4), e(5)], "M1"));
        p
    }

    #[test]
    fn disk_value() {
        let s = solve(&disk(), &Settings::default()).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!((s.value + 0.5).abs() < 1e-7, "{}", s.value);
        assert!((s.dual_value + 0.5).abs() < 1e-7);
        assert!(s.residuals.max_violation() < 1e-7);
    }

    #[test]
    fn negation_flips_value() {
        let p = disk();
        let a = solve(&p, &Settings::default()).unwrap();
        let b = solve(&p.negated(), &Settings::default()).unwrap();
        assert!((a.value + b.value).abs() < 1e-9, "{} {}", a.value, b.value);
    }

    #[test]
    fn empty_problem() {
        let p = ConicProblem::new(0, true);
        let s = solve(&p, &Settings::default()).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert_eq!(s.value, 0.0);
    }

    #[test]
    fn lp_corner() {
        let mut p = ConicProblem::new(2, true);
        p.objective = LinearForm::single(1);
        p.add_inequality(LinearForm::single(1), 3.0);
        let s = solve(&p, &Settings::default()).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!((s.value - 3.0).abs() < 1e-7, "{}", s.value);
    }

    #[test]
    fn unbounded_and_infeasible() {
        let mut p = ConicProblem::new(1, true);
        p.objective = LinearForm::single(0);
        p.add_inequality(LinearForm::single(0).scale(-1.0), 0.0);
        let s = solve(&p, &Settings::default()).unwrap();
        assert_eq!(s.status, Status::Unbounded);

        let mut q = ConicProblem::new(1, true);
        q.objective = LinearForm::single(0);
        q.add_inequality(LinearForm::single(0), -1.0);
        q.add_inequality(LinearForm::single(0).scale(-1.0), -1.0);
        let s = solve(&q, &Settings::default()).unwrap();
        assert_eq!(s.status, Status::Infeasible);
    }

    #[test]
    fn square_nonpositivity() {
        // max -y2 over [[y0, y1], [y1, y2]] ⪰ 0, y0 = 1
        let mut p = ConicProblem::new(3, true);
        p.objective = LinearForm(vec![(2, -1.0)]);
        p.add_equality(LinearForm::single(0), 1.0);
        p.psd.push(PsdBlock::new(
            2,
            vec![LinearForm::single(0), LinearForm::single(1), LinearForm::single(2)],
            "M1",
        ));
        let s = solve(&p, &Settings::default()).unwrap();
        assert!(s.status.has_value());
        assert!(s.value.abs() < 1e-7, "{}", s.value);
    }

    #[test]
    fn normalized_eigenvalue_ignores_row_scale() {
        // outer product of (1, 1e6): rank one, PSD
        let s = [1.0, 1e6, 1e6, 1e12];
        assert!(normalized_min_eigenvalue(2, &s).abs() < 1e-12);
        let t = [1.0, 2.0, 2.0, 1.0];
        assert!((normalized_min_eigenvalue(2, &t) + 1.0).abs() < 1e-12);
    }
}
