//! Robustness certificates from Lipschitz bounds.
//!
//! A binary classifier with score `y₀ = F(x₀)` is `ε`-robust at `x₀` when
//! `y₀ (y₀ − sign(y₀) ε L) > 0`. A multiclass classifier with predicted label
//! `r` is `ε`-robust when `y_i − y_r + ε L_{i,r} < 0` for every `i ≠ r`, where
//! `L_{i,r}` bounds the Lipschitz constant of `y_i − y_r`.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{InputRegion, Matrix, Network};
use crate::relaxation::{upper_bound, Method, RelaxationSpec};

/// Bounds `L_{ij}` for `f_{ij}(x) = y_i(x) − y_j(x)`, one solve per unordered pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseLipschitzMatrix {
    classes: usize,
    /// Row-major `K × K`; the diagonal is stored as zero and never read.
    values: Vec<f64>,
    pub method: Method,
    pub region: InputRegion,
    pub n_solves: usize,
}

impl PairwiseLipschitzMatrix {
    /// Builds a matrix from an explicit upper triangle, mirrored below.
    pub fn from_upper(classes: usize, upper: &[(usize, usize, f64)], method: Method, region: InputRegion) -> Result<Self> {
        if classes < 2 {
            return Err(Error::InvalidArgument("pairwise matrix needs at least two classes".into()));
        }
        let mut values = vec![f64::NAN; classes * classes];
        for i in 0..classes {
            values[i * classes + i] = 0.0;
        }
        for &(i, j, v) in upper {
            if i >= classes || j >= classes || i == j {
                return Err(Error::InvalidArgument(format!("invalid pair ({i}, {j})")));
            }
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("bound for pair ({i}, {j}) is {v}")));
            }
            values[i * classes + j] = v;
            values[j * classes + i] = v;
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidArgument("pairwise matrix is missing pairs".into()));
        }
        Ok(Self {
            classes,
            values,
            method,
            region,
            n_solves: upper.len(),
        })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn get(&self, i: usize, j: usize) -> Result<f64> {
        if i >= self.classes || j >= self.classes {
            return Err(Error::LabelOutOfRange {
                label: i.max(j),
                classes: self.classes,
            });
        }
        if i == j {
            return Err(Error::InvalidArgument(format!("diagonal entry ({i}, {i}) is undefined")));
        }
        Ok(self.values[i * self.classes + j])
    }

    /// Full matrix with `None` on the diagonal.
    pub fn to_rows(&self) -> Vec<Vec<Option<f64>>> {
        (0..self.classes)
            .map(|i| {
                (0..self.classes)
                    .map(|j| (i != j).then(|| self.values[i * self.classes + j]))
                    .collect()
            })
            .collect()
    }
}

/// Solves the `K(K−1)/2` relaxations with `c = c_i − c_j` for `i < j`.
///
/// `L_{ji} = L_{ij}` because `f_{ji} = −f_{ij}` and the L∞ dual norm of the
/// gradient is symmetric under sign.
pub fn pairwise_matrix(net: &Network, region: &InputRegion, spec: &RelaxationSpec) -> Result<PairwiseLipschitzMatrix> {
    region.validate_for(net)?;
    let k = net.classes();
    if k < 2 {
        return Err(Error::InvalidArgument(format!("pairwise matrix needs K ≥ 2 outputs, network has {k}")));
    }
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
    let upper = pairs
        .par_iter()
        .map(|&(i, j)| {
            let ci = net.output_row(i)?;
            let cj = net.output_row(j)?;
            let c: Vec<f64> = ci.iter().zip(cj).map(|(a, b)| a - b).collect();
            let b = upper_bound(net, region, &c, spec).map_err(|e| match e {
                Error::Solver { status, .. } => Error::Solver {
                    status,
                    context: format!(" (pair {i}, {j})"),
                },
                other => other,
            })?;
            log::info!("pair ({i}, {j}): {:.6} ({})", b.value, b.status.as_str());
            // a zero objective may come back as a tiny negative number
            Ok((i, j, b.value.max(0.0)))
        })
        .collect::<Result<Vec<_>>>()?;
    PairwiseLipschitzMatrix::from_upper(k, &upper, spec.method, region.clone())
}

/// Binary criterion on the single score of `net`.
pub fn certify_binary(net: &Network, l: f64, x0: &[f64], epsilon: f64) -> Result<bool> {
    if !(l >= 0.0 && l.is_finite()) {
        return Err(Error::InvalidArgument(format!("Lipschitz bound must be nonnegative, got {l}")));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    if net.classes() != 1 {
        return Err(Error::InvalidArgument(format!(
            "binary certification needs one output, network has {}",
            net.classes()
        )));
    }
    let y0 = net.scores(x0)?[0];
    Ok(y0 != 0.0 && y0 * (y0 - y0.signum() * epsilon * l) > 0.0)
}

/// Multiclass criterion with the pairwise matrix; refuses points whose
/// `ε`-ball leaves the matrix's region.
pub fn certify_multiclass(net: &Network, lmat: &PairwiseLipschitzMatrix, x0: &[f64], epsilon: f64) -> Result<bool> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    if lmat.classes() != net.classes() {
        return Err(Error::Dimension {
            expected: net.classes(),
            got: lmat.classes(),
        });
    }
    check_containment(Some(&lmat.region), x0, epsilon)?;
    let s = net.scores(x0)?;
    let r = (0..s.len()).fold(0, |best, i| if s[i] > s[best] { i } else { best });
    if s.iter().enumerate().any(|(i, &v)| i != r && v == s[r]) {
        return Ok(false);
    }
    for i in (0..s.len()).filter(|&i| i != r) {
        if s[i] - s[r] + epsilon * lmat.get(i, r)? >= 0.0 {
            return Ok(false);
        }
    }
    Ok(true)
}

fn check_containment(region: Option<&InputRegion>, x0: &[f64], epsilon: f64) -> Result<()> {
    if let Some(region) = region {
        if !region.contains_ball(x0, epsilon) {
            return Err(Error::Containment(format!(
                "the {epsilon}-ball around the input leaves the region of radius {} the bound is valid on",
                region.radius
            )));
        }
    }
    Ok(())
}

/// Source of the bound used by [`certified_ratio`].
#[derive(Clone, Debug)]
pub enum Certifier {
    /// A single bound for a one-output network, with the region it holds on.
    Binary { bound: f64, region: Option<InputRegion> },
    Multiclass(PairwiseLipschitzMatrix),
}

impl Certifier {
    pub fn certify(&self, net: &Network, x0: &[f64], epsilon: f64) -> Result<bool> {
        match self {
            Certifier::Binary { bound, region } => {
                check_containment(region.as_ref(), x0, epsilon)?;
                certify_binary(net, *bound, x0, epsilon)
            }
            Certifier::Multiclass(m) => certify_multiclass(net, m, x0, epsilon),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertReport {
    pub epsilon: f64,
    pub ratio: f64,
    pub n_certified: usize,
    pub n_total: usize,
}

/// Fraction of `data` certified at `epsilon`.
pub fn certified_ratio(net: &Network, cert: &Certifier, data: &[Vec<f64>], epsilon: f64) -> Result<CertReport> {
    if data.is_empty() {
        return Err(Error::InvalidArgument("empty dataset".into()));
    }
    let flags = data
        .par_iter()
        .map(|x| cert.certify(net, x, epsilon))
        .collect::<Result<Vec<bool>>>()?;
    let n_certified = flags.iter().filter(|&&f| f).count();
    Ok(CertReport {
        epsilon,
        ratio: n_certified as f64 / data.len() as f64,
        n_certified,
        n_total: data.len(),
    })
}

/// [`certified_ratio`] for each `ε` in order.
pub fn ratio_sweep(net: &Network, cert: &Certifier, data: &[Vec<f64>], epsilons: &[f64]) -> Result<Vec<CertReport>> {
    epsilons.iter().map(|&e| certified_ratio(net, cert, data, e)).collect()
}

/// `ε ∈ {0.01, 0.02, …, 0.1}`.
pub fn default_epsilons() -> Vec<f64> {
    (1..=10).map(|k| k as f64 / 100.0).collect()
}

/// Reads a dataset: a JSON array of vectors, or CSV with one vector per row.
/// A CSV header line without any number is skipped.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text)
}

pub fn parse_dataset(text: &str) -> Result<Vec<Vec<f64>>> {
    let rows: Vec<Vec<f64>> = if text.trim_start().starts_with('[') {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("dataset json: {e}")))?
    } else {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
            match parsed {
                Ok(v) => rows.push(v),
                Err(_) if rows.is_empty() && fields.iter().all(|f| f.parse::<f64>().is_err()) => {}
                Err(e) => {
                    return Err(Error::ParseLine {
                        line: lineno + 1,
                        message: format!("bad number: {e}"),
                    })
                }
            }
        }
        rows
    };
    if let Some(first) = rows.first() {
        if let Some(bad) = rows.iter().position(|r| r.len() != first.len()) {
            return Err(Error::Parse(format!(
                "dataset row {} has {} entries, expected {}",
                bad + 1,
                rows[bad].len(),
                first.len()
            )));
        }
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("dataset".into()));
    }
    Ok(rows)
}

/// Points drawn uniformly from the box `‖x‖∞ ≤ half_width`.
pub fn uniform_box(n: usize, dim: usize, half_width: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..dim).map(|_| half_width * (2.0 * rng.random::<f64>() - 1.0)).collect())
        .collect()
}

/// Two noisy concentric spheres of radius 1 (label `false`) and 2 (label
/// `true`), half the points each.
pub fn two_spheres(n: usize, dim: usize, noise: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = move || -> f64 { StandardNormal.sample(&mut rng) };
    let mut xs = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let outer = i % 2 == 1;
        let radius = if outer { 2.0 } else { 1.0 };
        let dir: Vec<f64> = (0..dim).map(|_| normal()).collect();
        let len = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        let r = radius * (1.0 + noise * normal());
        xs.push(dir.iter().map(|v| v * r / len).collect());
        labels.push(outer);
    }
    (xs, labels)
}

/// Trains a one-hidden-layer binary classifier with logistic loss by
/// full-batch gradient descent with momentum. Positive scores mean `true`.
pub fn train_binary(hidden: usize, xs: &[Vec<f64>], labels: &[bool], epochs: usize, lr: f64, seed: u64) -> Result<Network> {
    if xs.is_empty() || xs.len() != labels.len() {
        return Err(Error::InvalidArgument("training data and labels must be non-empty and aligned".into()));
    }
    let dim = xs[0].len();
    let init = crate::network::random_network(&[dim, hidden], dim.max(hidden), seed)?;
    let mut a = init.weight(1).clone();
    let mut b = init.bias(1).to_vec();
    let mut c = init.output_row(0)?.to_vec();
    let mut d = 0.0;
    let mut va = vec![0.0; hidden * dim];
    let mut vb = vec![0.0; hidden];
    let mut vc = vec![0.0; hidden];
    let mut vd = 0.0;
    let n = xs.len() as f64;
    for _ in 0..epochs {
        let mut ga = vec![0.0; hidden * dim];
        let mut gb = vec![0.0; hidden];
        let mut gc = vec![0.0; hidden];
        let mut gd = 0.0;
        for (x, &lab) in xs.iter().zip(labels) {
            let mut z = a.mul_vec(x);
            for (zi, bi) in z.iter_mut().zip(&b) {
                *zi += bi;
            }
            let h: Vec<f64> = z.iter().map(|v| v.max(0.0)).collect();
            let y = h.iter().zip(&c).map(|(h, c)| h * c).sum::<f64>() + d;
            // d/dy of log(1 + exp(−t y)) with t = ±1
            let t = if lab { 1.0 } else { -1.0 };
            let g = -t / (1.0 + (t * y).exp());
            gd += g;
            for j in 0..hidden {
                gc[j] += g * h[j];
                if z[j] > 0.0 {
                    let gz = g * c[j];
                    gb[j] += gz;
                    for (k, xk) in x.iter().enumerate() {
                        ga[j * dim + k] += gz * xk;
                    }
                }
            }
        }
        let step = |v: &mut f64, p: &mut f64, g: f64| {
            *v = 0.9 * *v - lr * g / n;
            *p += *v;
        };
        for j in 0..hidden {
            for k in 0..dim {
                let mut w = a.get(j, k);
                step(&mut va[j * dim + k], &mut w, ga[j * dim + k]);
                a.set(j, k, w);
            }
            step(&mut vb[j], &mut b[j], gb[j]);
            step(&mut vc[j], &mut c[j], gc[j]);
        }
        step(&mut vd, &mut d, gd);
    }
    Network::new(vec![dim, hidden], vec![a], vec![b], Matrix::from_rows(&[c])?, Some(vec![d]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::random_network_with_outputs;

    fn affine_net(c: f64, d: f64) -> Network {
        // F(x) = c·ReLU(x) + d on x ≥ 0
        Network::new(vec![1, 1], vec![Matrix::identity(1)], vec![vec![0.0]], Matrix::from_rows(&[vec![c]]).unwrap(), Some(vec![d]))
            .unwrap()
    }

    #[test]
    fn binary_arithmetic() {
        let net = affine_net(1.0, 2.0);
        assert!(certify_binary(&net, 5.0, &[0.0], 0.1).unwrap());
        assert!(!certify_binary(&net, 5.0, &[0.0], 0.5).unwrap());
        assert!(certify_binary(&net, 0.0, &[0.0], 1e6).unwrap());
        let zero = affine_net(1.0, 0.0);
        assert!(!certify_binary(&zero, 0.0, &[0.0], 0.1).unwrap());
        let neg = affine_net(1.0, -2.0);
        assert!(certify_binary(&neg, 5.0, &[0.0], 0.1).unwrap());
        assert!(certify_binary(&net, -1.0, &[0.0], 0.1).is_err());
    }

    fn three_class() -> Network {
        random_network_with_outputs(&[2, 3], 2, 3, 4).unwrap()
    }

    #[test]
    fn multiclass_zero_matrix_and_epsilon_zero() {
        let net = three_class();
        let region = InputRegion::global(2);
        let zero = PairwiseLipschitzMatrix::from_upper(3, &[(0, 1, 0.0), (0, 2, 0.0), (1, 2, 0.0)], Method::Shor, region.clone())
            .unwrap();
        let x = [0.3, -0.4];
        assert!(certify_multiclass(&net, &zero, &x, 5.0).unwrap());
        let big = PairwiseLipschitzMatrix::from_upper(3, &[(0, 1, 7.0), (0, 2, 7.0), (1, 2, 7.0)], Method::Shor, region).unwrap();
        assert!(certify_multiclass(&net, &big, &x, 0.0).unwrap());
        assert!(!certify_multiclass(&net, &big, &x, 5.0).unwrap());
        assert!(matches!(certify_multiclass(&net, &big, &[9.95, 0.0], 0.1), Err(Error::Containment(_))));
    }

    #[test]
    fn argmax_tie_not_certified() {
        let net = Network::new(
            vec![1, 1],
            vec![Matrix::identity(1)],
            vec![vec![0.0]],
            Matrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap(),
            None,
        )
        .unwrap();
        let m = PairwiseLipschitzMatrix::from_upper(2, &[(0, 1, 0.0)], Method::Shor, InputRegion::global(1)).unwrap();
        assert!(!certify_multiclass(&net, &m, &[0.5], 0.0).unwrap());
    }

    #[test]
    fn matrix_accessors() {
        let m = PairwiseLipschitzMatrix::from_upper(3, &[(0, 1, 1.0), (0, 2, 2.0), (1, 2, 3.0)], Method::HR2, InputRegion::global(2))
            .unwrap();
        assert_eq!(m.get(2, 1).unwrap(), 3.0);
        assert_eq!(m.get(1, 2).unwrap(), 3.0);
        assert!(m.get(1, 1).is_err());
        assert_eq!(m.to_rows()[0], vec![None, Some(1.0), Some(2.0)]);
        assert!(PairwiseLipschitzMatrix::from_upper(3, &[(0, 1, 1.0)], Method::HR2, InputRegion::global(2)).is_err());
    }

    #[test]
    fn datasets() {
        assert_eq!(parse_dataset("[[1, 2], [3, 4.5]]").unwrap(), vec![vec![1.0, 2.0], vec![3.0, 4.5]]);
        assert_eq!(parse_dataset("a,b\n1,2\n\n3,4\n").unwrap(), vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert!(matches!(parse_dataset("1,2\n3,x\n"), Err(Error::ParseLine { line: 2, .. })));
        assert!(parse_dataset("1,2\n3\n").is_err());
        assert!(parse_dataset("[]").unwrap().is_empty());
        let net = affine_net(1.0, 1.0);
        let cert = Certifier::Binary { bound: 1.0, region: None };
        assert!(certified_ratio(&net, &cert, &[], 0.1).is_err());
    }

    #[test]
    fn sweep_is_monotone_and_deterministic() {
        let net = random_network_with_outputs(&[3, 4], 3, 1, 2).unwrap();
        let data = uniform_box(500, 3, 2.0, 1);
        let cert = Certifier::Binary {
            bound: 3.0,
            region: Some(InputRegion::local(vec![0.0; 3], 3.0).unwrap()),
        };
        let eps: Vec<f64> = (0..12).map(|k| k as f64 * 0.05).collect();
        let sweep = ratio_sweep(&net, &cert, &data, &eps).unwrap();
        assert_eq!(sweep[0].ratio, 1.0);
        for w in sweep.windows(2) {
            assert!(w[1].n_certified <= w[0].n_certified);
        }
        assert_eq!(sweep, ratio_sweep(&net, &cert, &data, &eps).unwrap());
    }

    #[test]
    fn trained_toy_separates_spheres() {
        let (xs, labels) = two_spheres(400, 5, 0.05, 0);
        let net = train_binary(8, &xs, &labels, 300, 0.1, 0).unwrap();
        let acc = xs
            .iter()
            .zip(&labels)
            .filter(|(x, &l)| (net.scores(x).unwrap()[0] > 0.0) == l)
            .count() as f64
            / xs.len() as f64;
        assert!(acc > 0.9, "accuracy {acc}");
    }
}
