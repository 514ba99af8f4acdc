//! Lower bounds on Lipschitz constants: gradient sampling (LBS) and exact
//! activation-pattern enumeration for small one-hidden-layer networks.

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{InputRegion, Network};

pub const DEFAULT_SAMPLES: usize = 50_000;
/// Pattern enumeration is refused above this many hidden units.
pub const ORACLE_MAX_UNITS: usize = 20;
/// Required slack of every pre-activation sign in the pattern feasibility LP.
pub const ORACLE_MARGIN: f64 = 1e-9;

const CHUNK: usize = 1024;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LbsReport {
    pub lower_bound: f64,
    /// Sample attaining the bound.
    pub argmax: Vec<f64>,
    pub n_samples: usize,
    pub seed: u64,
}

/// `max ‖∇(cᵀF)(x)‖₁` over `n` points drawn uniformly from `region`.
///
/// Sample `i` comes from ChaCha stream `i / 1024` of `seed`, so the first `n`
/// samples do not depend on `n` or on the thread count.
pub fn lbs(net: &Network, region: &InputRegion, label: usize, n: usize, seed: u64) -> Result<LbsReport> {
    let c = net.output_row(label)?.to_vec();
    lbs_for_output(net, region, &c, n, seed)
}

pub fn lbs_for_output(net: &Network, region: &InputRegion, c: &[f64], n: usize, seed: u64) -> Result<LbsReport> {
    region.validate_for(net)?;
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    if c.len() != *net.layer_sizes().last().unwrap() {
        return Err(Error::Dimension {
            expected: *net.layer_sizes().last().unwrap(),
            got: c.len(),
        });
    }
    let dim = region.dim();
    let chunks = n.div_ceil(CHUNK);
    // (value, sample index, sample)
    let best = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let mut best: Option<(f64, usize, Vec<f64>)> = None;
            let mut x = vec![0.0; dim];
            for i in k * CHUNK..((k + 1) * CHUNK).min(n) {
                for (j, xj) in x.iter_mut().enumerate() {
                    let (lo, hi) = region.bounds(j);
                    *xj = lo + (hi - lo) * rng.random::<f64>();
                }
                let pattern = net.activation_pattern(&x).expect("dimension checked");
                let g = net.gradient_for_pattern(&pattern, c);
                let v: f64 = g.iter().map(|a| a.abs()).sum();
                if best.as_ref().is_none_or(|b| v > b.0) {
                    best = Some((v, i, x.clone()));
                }
            }
            best.expect("non-empty chunk")
        })
        .reduce_with(|a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a })
        .expect("at least one chunk");
    Ok(LbsReport {
        lower_bound: best.0,
        argmax: best.2,
        n_samples: n,
        seed,
    })
}

/// Whether some `x` in `region` realizes `pattern` with every pre-activation
/// at least [`ORACLE_MARGIN`] away from zero on the selected side.
fn pattern_feasible(net: &Network, region: &InputRegion, pattern: &[bool]) -> bool {
    let (a, b) = (net.weight(1), net.bias(1));
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let xs: Vec<_> = (0..region.dim()).map(|i| lp.add_var(0.0, region.bounds(i))).collect();
    let delta = lp.add_var(1.0, (f64::NEG_INFINITY, 1.0));
    for (j, &on) in pattern.iter().enumerate() {
        let s = if on { 1.0 } else { -1.0 };
        let row = a.row(j);
        if row.iter().all(|&w| w == 0.0) {
            // constant pre-activation: both selections are valid at zero
            if s * b[j] < 0.0 {
                return false;
            }
            continue;
        }
        let mut expr: Vec<_> = xs.iter().zip(row).filter(|(_, &w)| w != 0.0).map(|(&v, &w)| (v, s * w)).collect();
        expr.push((delta, -1.0));
        lp.add_constraint(expr, ComparisonOp::Ge, -s * b[j]);
    }
    match lp.solve() {
        Ok(out) => out.solution().is_some_and(|sol| sol.objective() >= ORACLE_MARGIN),
        Err(_) => false,
    }
}

/// Exact Lipschitz constant of `x ↦ cᵀF(x)` w.r.t. `L∞` for a one-hidden-layer
/// network: `max ‖A₁ᵀ diag(u) c‖₁` over activation patterns `u` realizable
/// inside `region`.
pub fn exact_lipschitz_1hidden_for_output(net: &Network, region: &InputRegion, c: &[f64]) -> Result<f64> {
    region.validate_for(net)?;
    if net.depth() != 1 {
        return Err(Error::InvalidArgument(format!(
            "exact oracle needs one hidden layer, network has {}",
            net.depth()
        )));
    }
    let p1 = net.layer_sizes()[1];
    if p1 > ORACLE_MAX_UNITS {
        return Err(Error::Budget(format!(
            "{p1} hidden units exceed the enumeration limit of {ORACLE_MAX_UNITS}"
        )));
    }
    if c.len() != p1 {
        return Err(Error::Dimension { expected: p1, got: c.len() });
    }
    let mut candidates: Vec<(f64, u32)> = (0..1u32 << p1)
        .map(|bits| {
            let pattern = vec![(0..p1).map(|j| bits >> j & 1 == 1).collect::<Vec<_>>()];
            let g = net.gradient_for_pattern(&pattern, c);
            (g.iter().map(|v| v.abs()).sum(), bits)
        })
        .collect();
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for (v, bits) in candidates {
        let pattern: Vec<bool> = (0..p1).map(|j| bits >> j & 1 == 1).collect();
        if pattern_feasible(net, region, &pattern) {
            return Ok(v);
        }
    }
    // every region contains an interior point, so some pattern is realizable
    // unless all pre-activations vanish identically
    Ok(0.0)
}

pub fn exact_lipschitz_1hidden(net: &Network, region: &InputRegion, label: usize) -> Result<f64> {
    let c = net.output_row(label)?.to_vec();
    exact_lipschitz_1hidden_for_output(net, region, &c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{random_network, Matrix};

    fn scalar_net() -> Network {
        Network::new(
            vec![1, 1],
            vec![Matrix::identity(1)],
            vec![vec![0.0]],
            Matrix::from_rows(&[vec![1.0]]).unwrap(),
            None,
        )
        .unwrap()
    }

    #[test]
    fn scalar_oracle() {
        let v = exact_lipschitz_1hidden(&scalar_net(), &InputRegion::global(1), 0).unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn always_active_net() {
        let mut net = random_network(&[3, 4], 4, 2).unwrap();
        let a = net.weight(1).clone();
        let c = net.output_row(0).unwrap().to_vec();
        net = Network::new(vec![3, 4], vec![a.clone()], vec![vec![1e6; 4]], Matrix::from_rows(&[c.clone()]).unwrap(), None)
            .unwrap();
        let want: f64 = a.tmul_vec(&c).iter().map(|v| v.abs()).sum();
        let region = InputRegion::global(3);
        for n in [1, 7, 3000] {
            let r = lbs(&net, &region, 0, n, 9).unwrap();
            assert!((r.lower_bound - want).abs() < 1e-12);
        }
        let o = exact_lipschitz_1hidden(&net, &region, 0).unwrap();
        assert!((o - want).abs() < 1e-12);
    }

    #[test]
    fn lbs_single_sample_and_nesting() {
        let net = random_network(&[4, 6], 3, 5).unwrap();
        let region = InputRegion::global(4);
        let one = lbs(&net, &region, 0, 1, 3).unwrap();
        let g = net.gradient(&one.argmax, 0).unwrap();
        assert_eq!(one.lower_bound, g.iter().map(|v| v.abs()).sum::<f64>());
        let mut prev = 0.0;
        for n in [1, 10, 1000, 2048, 5000] {
            let r = lbs(&net, &region, 0, n, 3).unwrap();
            assert!(r.lower_bound >= prev);
            prev = r.lower_bound;
        }
        assert_eq!(lbs(&net, &region, 0, 5000, 3).unwrap(), lbs(&net, &region, 0, 5000, 3).unwrap());
    }

    #[test]
    fn lbs_below_oracle() {
        for seed in 0..5 {
            let net = random_network(&[3, 5], 3, seed).unwrap();
            let region = InputRegion::global(3);
            let l = lbs(&net, &region, 0, 4000, seed).unwrap().lower_bound;
            let o = exact_lipschitz_1hidden(&net, &region, 0).unwrap();
            assert!(l <= o + 1e-12, "{l} > {o}");
        }
    }

    #[test]
    fn tiny_region_single_pattern() {
        let net = random_network(&[2, 3], 2, 11).unwrap();
        let x0 = vec![0.3, -0.2];
        let region = InputRegion::local(x0.clone(), 1e-7).unwrap();
        let g = net.gradient(&x0, 0).unwrap();
        let want: f64 = g.iter().map(|v| v.abs()).sum();
        let o = exact_lipschitz_1hidden(&net, &region, 0).unwrap();
        assert!((o - want).abs() < 1e-12, "{o} {want}");
    }

    #[test]
    fn oracle_permutation_invariance() {
        let net = random_network(&[3, 4], 3, 8).unwrap();
        let a = net.weight(1);
        let perm = [2, 0, 3, 1];
        let rows: Vec<Vec<f64>> = perm.iter().map(|&j| a.row(j).to_vec()).collect();
        let b: Vec<f64> = perm.iter().map(|&j| net.bias(1)[j]).collect();
        let c: Vec<f64> = perm.iter().map(|&j| net.output_row(0).unwrap()[j]).collect();
        let q = Network::new(vec![3, 4], vec![Matrix::from_rows(&rows).unwrap()], vec![b], Matrix::from_rows(&[c]).unwrap(), None)
            .unwrap();
        let region = InputRegion::global(3);
        let x = exact_lipschitz_1hidden(&net, &region, 0).unwrap();
        let y = exact_lipschitz_1hidden(&q, &region, 0).unwrap();
        assert!((x - y).abs() < 1e-12);
    }

    #[test]
    fn oracle_limits() {
        let net = random_network(&[2, 21], 2, 0).unwrap();
        assert!(matches!(
            exact_lipschitz_1hidden(&net, &InputRegion::global(2), 0),
            Err(Error::Budget(_))
        ));
        let deep = random_network(&[2, 2, 2], 2, 0).unwrap();
        assert!(exact_lipschitz_1hidden(&deep, &InputRegion::global(2), 0).is_err());
    }
}
