//! Shor, HR-1 and HR-2 moment relaxations of Lipschitz-constant POPs.
//!
//! Every relaxation shares one [`MomentIndex`] across its blocks, so that
//! overlapping subsets refer to the same moment variables. The affine layer
//! equations `z − Ax − b = 0` break the subset pattern; they only enter
//! through a dense `M₁` and the scalar equalities `L(g) = 0`, `L(g²) = 0`.

mod assemble;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use assemble::{assemble_dense, assemble_hr, assemble_hr_two_hidden, assemble_shor};

use crate::conic::{self, ConicProblem, Settings, Solution, Status};
use crate::error::{Error, Result};
use crate::moments::MomentIndex;
use crate::network::{InputRegion, Network};
use crate::pop::{build_lcep_for_output, build_lifted_lcep2_for_output, PopProblem, DEFAULT_LIFT_CAP};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Shor,
    #[serde(rename = "hr1")]
    HR1,
    #[serde(rename = "hr2")]
    HR2,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Shor => "shor",
            Method::HR1 => "hr1",
            Method::HR2 => "hr2",
        }
    }

    pub fn order(self) -> u32 {
        match self {
            Method::Shor | Method::HR1 => 1,
            Method::HR2 => 2,
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "shor" => Ok(Method::Shor),
            "hr1" | "hr-1" => Ok(Method::HR1),
            "hr2" | "hr-2" => Ok(Method::HR2),
            _ => Err(Error::InvalidArgument(format!("unknown relaxation method '{s}'"))),
        }
    }
}

/// How the cubic moments `t·u₁·u₂` of two-hidden-layer objectives are carried.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CubicMode {
    /// One 3×3 block `[1, tⁱ, u₁ʲu₂ᵏ]` per triple.
    #[default]
    PerTriple,
    /// One block `[1, t, u₁u₂ᵏ]` per unit of the second layer.
    Aggregated,
    /// Lift `s = u₁u₂ᵀ` so the objective becomes quadratic.
    Lifted,
}

impl std::str::FromStr for CubicMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "per_triple" => Ok(CubicMode::PerTriple),
            "aggregated" => Ok(CubicMode::Aggregated),
            "lifted" => Ok(CubicMode::Lifted),
            _ => Err(Error::InvalidArgument(format!("unknown cubic mode '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RelaxationSpec {
    pub method: Method,
    /// Only used when the network has two hidden layers.
    pub cubic_mode: CubicMode,
    pub settings: Settings,
    /// Add the redundant `M − ‖x_I‖² ≥ 0` constraints per subset.
    pub ball_constraints: bool,
}

impl Default for RelaxationSpec {
    fn default() -> Self {
        Self {
            method: Method::HR2,
            cubic_mode: CubicMode::PerTriple,
            settings: Settings::default(),
            ball_constraints: true,
        }
    }
}

impl RelaxationSpec {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    pub fn with_cubic_mode(mut self, mode: CubicMode) -> Self {
        self.cubic_mode = mode;
        self
    }
}

/// An assembled relaxation with its moment index.
#[derive(Clone, Debug)]
pub struct Relaxation {
    pub problem: ConicProblem,
    pub index: MomentIndex,
    pub n_psd_blocks: usize,
}

impl Relaxation {
    pub fn n_moment_vars(&self) -> usize {
        self.index.len()
    }

    /// Moment vector of the Dirac measure at a POP point.
    pub fn point_moments(&self, point: &[f64]) -> Vec<f64> {
        self.index.point_moments(point)
    }

    pub fn solve(&self, settings: &Settings) -> Result<Solution> {
        conic::solve(&self.problem, settings)
    }
}

/// POP whose relaxation `spec` asks for: lifted for Shor or lifted mode on
/// two hidden layers, plain otherwise.
pub fn build_pop(net: &Network, region: &InputRegion, c: &[f64], spec: &RelaxationSpec) -> Result<PopProblem> {
    let lift = net.depth() == 2 && (spec.method == Method::Shor || spec.cubic_mode == CubicMode::Lifted);
    if lift {
        build_lifted_lcep2_for_output(net, region, c, DEFAULT_LIFT_CAP)
    } else {
        build_lcep_for_output(net, region, c)
    }
}

/// Assembles the relaxation of the LCEP with output vector `c`.
pub fn relax(net: &Network, region: &InputRegion, c: &[f64], spec: &RelaxationSpec) -> Result<Relaxation> {
    let pop = build_pop(net, region, c, spec)?;
    relax_pop(&pop, spec)
}

/// Assembles the relaxation `spec` of an already-built POP.
pub fn relax_pop(pop: &PopProblem, spec: &RelaxationSpec) -> Result<Relaxation> {
    let depth = pop.layout.as_ref().map(|l| l.depth());
    match (spec.method, depth) {
        (Method::Shor, _) => assemble_shor(pop),
        (m, Some(2)) => {
            let lifted = pop.layout.as_ref().is_some_and(|l| !l.s.is_empty());
            let mode = if lifted { CubicMode::Lifted } else { spec.cubic_mode };
            assemble_hr_two_hidden(pop, m.order(), mode, spec.ball_constraints)
        }
        (m, _) => assemble_hr(pop, m.order(), spec.ball_constraints),
    }
}

/// Result of one relaxation solve.
#[derive(Clone, Debug)]
pub struct Bound {
    pub method: Method,
    /// `L_y(objective)` at the solution: an upper bound on the maximum.
    /// Short of `Optimal`, the more conservative of it and the dual value.
    pub value: f64,
    pub status: Status,
    pub solution: Solution,
    pub n_moment_vars: usize,
    pub n_psd_blocks: usize,
    pub assemble_time_s: f64,
}

/// Solves a relaxation and fails unless the solver reached a usable value.
pub fn solve_relaxation(r: &Relaxation, method: Method, settings: &Settings, context: &str) -> Result<Bound> {
    let sol = r.solve(settings)?;
    if !sol.status.has_value() {
        return Err(Error::Solver {
            status: sol.status.as_str().into(),
            context: if context.is_empty() {
                String::new()
            } else {
                format!(" ({context})")
            },
        });
    }
    let value = if sol.status == Status::Optimal || !sol.dual_value.is_finite() {
        sol.value
    } else if r.problem.maximize {
        sol.value.max(sol.dual_value)
    } else {
        sol.value.min(sol.dual_value)
    };
    Ok(Bound {
        method,
        value,
        status: sol.status,
        n_moment_vars: r.n_moment_vars(),
        n_psd_blocks: r.n_psd_blocks,
        solution: sol,
        assemble_time_s: 0.0,
    })
}

/// Upper bound on the Lipschitz constant of `x ↦ cᵀF(x)` over `region`.
pub fn upper_bound(net: &Network, region: &InputRegion, c: &[f64], spec: &RelaxationSpec) -> Result<Bound> {
    let start = Instant::now();
    let r = relax(net, region, c, spec)?;
    let assemble_time_s = start.elapsed().as_secs_f64();
    log::info!(
        "{}: {} moments, {} psd blocks, {} equalities, {} inequalities",
        spec.method.as_str(),
        r.n_moment_vars(),
        r.n_psd_blocks,
        r.problem.equalities.len(),
        r.problem.inequalities.len()
    );
    let mut b = solve_relaxation(&r, spec.method, &spec.settings, "")?;
    b.assemble_time_s = assemble_time_s;
    Ok(b)
}

/// `upper_bound` for output label `label`.
pub fn lipschitz_bound(net: &Network, region: &InputRegion, label: usize, spec: &RelaxationSpec) -> Result<Bound> {
    let c = net.output_row(label)?.to_vec();
    upper_bound(net, region, &c, spec)
}

/// A-priori problem size, computed from the layer sizes alone.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeEstimate {
    /// Upper estimate of the number of moment variables.
    pub moment_vars: usize,
    pub psd_blocks: usize,
}

/// Size of the relaxation `spec` for a network with `layer_sizes`, without
/// assembling it.
pub fn estimate_size(layer_sizes: &[usize], spec: &RelaxationSpec) -> SizeEstimate {
    use assemble::binom_count;
    let m = layer_sizes.len().saturating_sub(1);
    let p = layer_sizes;
    let p0 = p.first().copied().unwrap_or(0);
    let hidden: usize = p[1..].iter().sum();
    let inner: usize = if m >= 2 { p[1..m].iter().sum() } else { 0 };
    let lift = m == 2 && (spec.method == Method::Shor || spec.cubic_mode == CubicMode::Lifted);
    let s = if lift { p[1] * p[2] } else { 0 };
    let n = 2 * p0 + 2 * hidden + inner + s;
    let dense = binom_count(n, 2);
    let subsets = p0 + 2 * inner + p.get(m).copied().unwrap_or(0);
    // constraints per subset are at most three
    let (mut vars, mut blocks) = match spec.method {
        Method::Shor => (dense, 1),
        Method::HR1 => (dense, 1),
        Method::HR2 => (
            dense.saturating_add(subsets * binom_count(2, 4)),
            1 + subsets + 3 * subsets + usize::from(spec.ball_constraints) * subsets,
        ),
    };
    if m == 2 && !lift {
        let (p1, p2) = (p[1], p[2]);
        match spec.cubic_mode {
            CubicMode::PerTriple => {
                vars = vars.saturating_add(p0 * p1 * p2 + 2 * p1 * p2);
                blocks = blocks.saturating_add(p0 * p1 * p2);
            }
            CubicMode::Aggregated => {
                vars = vars.saturating_add(p0 * p1 * p2 + p1 * p1 * p2);
                blocks = blocks.saturating_add(p2);
            }
            CubicMode::Lifted => {}
        }
    }
    SizeEstimate {
        moment_vars: vars,
        psd_blocks: blocks,
    }
}
