//! Feedforward ReLU networks: storage, JSON I/O, random generation, and
//! evaluation of scores and generalized gradients.

use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Deserialize;

use crate::error::{Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(Error::InvalidArgument(format!(
                    "ragged matrix: row {i} has {} entries, expected {c}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: r,
            cols: c,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// `self * x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `selfᵀ * x`.
    pub fn tmul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (i, xi) in x.iter().enumerate() {
            if *xi == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * xi;
            }
        }
        out
    }

    fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// A feedforward ReLU classifier `x ↦ C·ReLU(A_m ⋯ ReLU(A_1 x + b_1) ⋯ + b_m) (+ d)`.
///
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layer_sizes: Vec<usize>,
    weights: Vec<Matrix>,
    biases: Vec<Vec<f64>>,
    output_weights: Matrix,
    output_bias: Option<Vec<f64>>,
}

/// Per-layer values from a forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    /// `x_0, x_1, …, x_m`.
    pub activations: Vec<Vec<f64>>,
    /// `z_1, …, z_m` with `z_i = A_i x_{i-1} + b_i`.
    pub pre_activations: Vec<Vec<f64>>,
    /// Output scores `C x_m (+ d)`.
    pub scores: Vec<f64>,
}

impl Network {
    pub fn new(
        layer_sizes: Vec<usize>,
        weights: Vec<Matrix>,
        biases: Vec<Vec<f64>>,
        output_weights: Matrix,
        output_bias: Option<Vec<f64>>,
    ) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::Shape {
                layer: 0,
                message: "need an input layer and at least one hidden layer".into(),
            });
        }
        if let Some(i) = layer_sizes.iter().position(|&p| p == 0) {
            return Err(Error::Shape {
                layer: i,
                message: "layer width must be positive".into(),
            });
        }
        let m = layer_sizes.len() - 1;
        if weights.len() != m || biases.len() != m {
            return Err(Error::Shape {
                layer: weights.len().min(biases.len()) + 1,
                message: format!(
                    "expected {m} weight matrices and bias vectors, got {} and {}",
                    weights.len(),
                    biases.len()
                ),
            });
        }
        for i in 0..m {
            let (rows, cols) = (layer_sizes[i + 1], layer_sizes[i]);
            let a = &weights[i];
            if a.rows() != rows || a.cols() != cols {
                return Err(Error::Shape {
                    layer: i + 1,
                    message: format!(
                        "weight matrix is {}x{}, expected {rows}x{cols}",
                        a.rows(),
                        a.cols()
                    ),
                });
            }
            if biases[i].len() != rows {
                return Err(Error::Shape {
                    layer: i + 1,
                    message: format!("bias has length {}, expected {rows}", biases[i].len()),
                });
            }
            if !a.all_finite() {
                return Err(Error::NonFinite(format!("weights of layer {}", i + 1)));
            }
            if biases[i].iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("bias of layer {}", i + 1)));
            }
        }
        let pm = layer_sizes[m];
        if output_weights.rows() == 0 || output_weights.cols() != pm {
            return Err(Error::Shape {
                layer: m + 1,
                message: format!(
                    "output weights are {}x{}, expected Kx{pm} with K >= 1",
                    output_weights.rows(),
                    output_weights.cols()
                ),
            });
        }
        if !output_weights.all_finite() {
            return Err(Error::NonFinite("output weights".into()));
        }
        if let Some(d) = &output_bias {
            if d.len() != output_weights.rows() {
                return Err(Error::Shape {
                    layer: m + 1,
                    message: format!(
                        "output bias has length {}, expected {}",
                        d.len(),
                        output_weights.rows()
                    ),
                });
            }
            if d.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("output bias".into()));
            }
        }
        Ok(Self {
            layer_sizes,
            weights,
            biases,
            output_weights,
            output_bias,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    /// Number of hidden layers `m`.
    pub fn depth(&self) -> usize {
        self.weights.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    /// Number of output classes `K`.
    pub fn classes(&self) -> usize {
        self.output_weights.rows()
    }

    /// `A_i` for `i` in `1..=m`.
    pub fn weight(&self, layer: usize) -> &Matrix {
        &self.weights[layer - 1]
    }

    /// `b_i` for `i` in `1..=m`.
    pub fn bias(&self, layer: usize) -> &[f64] {
        &self.biases[layer - 1]
    }

    pub fn output_weights(&self) -> &Matrix {
        &self.output_weights
    }

    pub fn output_bias(&self) -> Option<&[f64]> {
        self.output_bias.as_deref()
    }

    /// Row `c_k` of the output matrix.
    pub fn output_row(&self, label: usize) -> Result<&[f64]> {
        self.check_label(label)?;
        Ok(self.output_weights.row(label))
    }

    pub(crate) fn check_label(&self, label: usize) -> Result<()> {
        if label >= self.classes() {
            return Err(Error::LabelOutOfRange {
                label,
                classes: self.classes(),
            });
        }
        Ok(())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::Dimension {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<ForwardTrace> {
        self.check_input(x)?;
        let mut activations = Vec::with_capacity(self.depth() + 1);
        let mut pre_activations = Vec::with_capacity(self.depth());
        let mut cur = x.to_vec();
        for (a, b) in self.weights.iter().zip(&self.biases) {
            let mut z = a.mul_vec(&cur);
            for (zi, bi) in z.iter_mut().zip(b) {
                *zi += bi;
            }
            let next = z.iter().map(|&v| v.max(0.0)).collect();
            activations.push(std::mem::replace(&mut cur, next));
            pre_activations.push(z);
        }
        let mut scores = self.output_weights.mul_vec(&cur);
        if let Some(d) = &self.output_bias {
            for (s, di) in scores.iter_mut().zip(d) {
                *s += di;
            }
        }
        activations.push(cur);
        Ok(ForwardTrace {
            activations,
            pre_activations,
            scores,
        })
    }

    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(x)?.scores)
    }

    /// Activation pattern `u_i = [z_i > 0]` of every hidden layer at `x`.
    pub fn activation_pattern(&self, x: &[f64]) -> Result<Vec<Vec<bool>>> {
        Ok(self
            .forward(x)?
            .pre_activations
            .iter()
            .map(|z| z.iter().map(|&v| v > 0.0).collect())
            .collect())
    }

    /// Generalized gradient of score `label` at `x`, selecting derivative 0 at `z = 0`.
    pub fn gradient(&self, x: &[f64], label: usize) -> Result<Vec<f64>> {
        let c = self.output_row(label)?;
        let pattern = self.activation_pattern(x)?;
        Ok(self.gradient_for_pattern(&pattern, c))
    }

    /// `(∏ A_iᵀ diag(u_i)) c` for a given pattern and output vector.
    pub fn gradient_for_pattern(&self, pattern: &[Vec<bool>], c: &[f64]) -> Vec<f64> {
        let mut v = c.to_vec();
        for layer in (0..self.depth()).rev() {
            for (vi, &on) in v.iter_mut().zip(&pattern[layer]) {
                if !on {
                    *vi = 0.0;
                }
            }
            v = self.weights[layer].tmul_vec(&v);
        }
        v
    }

    /// Copy of this network with the output matrix replaced by the single row `c`.
    pub fn with_output_row(&self, c: &[f64]) -> Result<Self> {
        Network::new(
            self.layer_sizes.clone(),
            self.weights.clone(),
            self.biases.clone(),
            Matrix::from_rows(&[c.to_vec()])?,
            None,
        )
    }

    /// Copy of this network with every weight of the output matrix multiplied by `factor`.
    pub fn with_scaled_output(&self, factor: f64) -> Result<Self> {
        let mut c = self.output_weights.clone();
        for v in &mut c.data {
            *v *= factor;
        }
        Network::new(
            self.layer_sizes.clone(),
            self.weights.clone(),
            self.biases.clone(),
            c,
            self.output_bias.clone(),
        )
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: NetworkFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("network json: {e}")))?;
        raw.into_network()
    }

    /// Canonical JSON: fixed key order, every number with 17 significant digits.
    pub fn to_canonical_json(&self) -> String {
        let mut s = String::new();
        s.push_str("{\"layer_sizes\":[");
        for (i, p) in self.layer_sizes.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            let _ = write!(s, "{p}");
        }
        s.push_str("],\"weights\":[");
        for (i, a) in self.weights.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            write_matrix(&mut s, a);
        }
        s.push_str("],\"biases\":[");
        for (i, b) in self.biases.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            write_vector(&mut s, b);
        }
        s.push_str("],\"output_weights\":");
        write_matrix(&mut s, &self.output_weights);
        if let Some(d) = &self.output_bias {
            s.push_str(",\"output_bias\":");
            write_vector(&mut s, d);
        }
        s.push_str("}\n");
        s
    }
}

fn write_number(s: &mut String, v: f64) {
    let _ = write!(s, "{v:.16e}");
}

fn write_vector(s: &mut String, v: &[f64]) {
    s.push('[');
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        write_number(s, *x);
    }
    s.push(']');
}

fn write_matrix(s: &mut String, m: &Matrix) {
    s.push('[');
    for i in 0..m.rows() {
        if i > 0 {
            s.push(',');
        }
        write_vector(s, m.row(i));
    }
    s.push(']');
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    layer_sizes: Vec<usize>,
    weights: Vec<Vec<Vec<f64>>>,
    biases: Vec<Vec<f64>>,
    output_weights: Vec<Vec<f64>>,
    #[serde(default)]
    output_bias: Option<Vec<f64>>,
}

impl NetworkFile {
    fn into_network(self) -> Result<Network> {
        let mut weights = Vec::with_capacity(self.weights.len());
        for (i, w) in self.weights.iter().enumerate() {
            let m = Matrix::from_rows(w).map_err(|e| Error::Shape {
                layer: i + 1,
                message: e.to_string(),
            })?;
            // an empty row list still has to carry the expected shape
            if w.is_empty() {
                return Err(Error::Shape {
                    layer: i + 1,
                    message: "weight matrix has no rows".into(),
                });
            }
            weights.push(m);
        }
        let output = Matrix::from_rows(&self.output_weights).map_err(|e| Error::Shape {
            layer: self.weights.len() + 1,
            message: e.to_string(),
        })?;
        Network::new(
            self.layer_sizes,
            weights,
            self.biases,
            output,
            self.output_bias,
        )
    }
}

pub fn load_network(path: impl AsRef<Path>) -> Result<Network> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Network::from_json_str(&text)
}

pub fn save_network(net: &Network, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, net.to_canonical_json()).map_err(|e| Error::io(path, e))
}

/// Band predicate of the random generator: entry `(j, k)` of a `rows × cols`
/// weight matrix may be nonzero iff `|j·cols/rows − k| < s/2`.
///
/// For a 4×4 matrix and `s = 4` this is the tridiagonal pattern whose
/// diagonal blocks are at most 2×2.
pub fn band_allows(j: usize, k: usize, rows: usize, cols: usize, sparsity: usize) -> bool {
    let center = j as f64 * cols as f64 / rows as f64;
    (center - k as f64).abs() < sparsity as f64 / 2.0
}

/// Random banded network with a single output row.
///
/// Nonzero weights are i.i.d. `N(0, 1)/√s`, biases are `N(0, 1)` and the
/// output row is `N(0, 1)/√p_m`. Deterministic in `seed`.
pub fn random_network(layer_sizes: &[usize], sparsity: usize, seed: u64) -> Result<Network> {
    random_network_with_outputs(layer_sizes, sparsity, 1, seed)
}

pub fn random_network_with_outputs(
    layer_sizes: &[usize],
    sparsity: usize,
    outputs: usize,
    seed: u64,
) -> Result<Network> {
    if sparsity < 1 {
        return Err(Error::InvalidArgument("sparsity must be at least 1".into()));
    }
    if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
        return Err(Error::InvalidArgument(format!(
            "invalid layer sizes {layer_sizes:?}"
        )));
    }
    if outputs < 1 {
        return Err(Error::InvalidArgument("need at least one output".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = move || -> f64 { StandardNormal.sample(&mut rng) };
    let scale = 1.0 / (sparsity as f64).sqrt();
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for w in layer_sizes.windows(2) {
        let (cols, rows) = (w[0], w[1]);
        let mut a = Matrix::zeros(rows, cols);
        for j in 0..rows {
            for k in 0..cols {
                if band_allows(j, k, rows, cols, sparsity) {
                    a.set(j, k, normal() * scale);
                }
            }
        }
        weights.push(a);
        biases.push((0..rows).map(|_| normal()).collect());
    }
    let pm = *layer_sizes.last().unwrap();
    let cscale = 1.0 / (pm as f64).sqrt();
    let mut c = Matrix::zeros(outputs, pm);
    for i in 0..outputs {
        for j in 0..pm {
            c.set(i, j, normal() * cscale);
        }
    }
    Network::new(layer_sizes.to_vec(), weights, biases, c, None)
}

/// Shape of the input set `Ω`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    GlobalBall,
    LocalBox,
}

/// `L∞` ball `{x : ‖x − center‖∞ ≤ radius}`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct InputRegion {
    pub kind: RegionKind,
    pub center: Vec<f64>,
    pub radius: f64,
}

pub const DEFAULT_GLOBAL_RADIUS: f64 = 10.0;
pub const DEFAULT_LOCAL_EPSILON: f64 = 0.1;

impl InputRegion {
    /// Global region: ball of radius 10 around the origin.
    pub fn global(dim: usize) -> Self {
        Self {
            kind: RegionKind::GlobalBall,
            center: vec![0.0; dim],
            radius: DEFAULT_GLOBAL_RADIUS,
        }
    }

    pub fn global_with_radius(dim: usize, radius: f64) -> Result<Self> {
        Self::check_radius(radius)?;
        Ok(Self {
            kind: RegionKind::GlobalBall,
            center: vec![0.0; dim],
            radius,
        })
    }

    pub fn local(center: Vec<f64>, epsilon: f64) -> Result<Self> {
        Self::check_radius(epsilon)?;
        if center.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("region center".into()));
        }
        Ok(Self {
            kind: RegionKind::LocalBox,
            center,
            radius: epsilon,
        })
    }

    fn check_radius(r: f64) -> Result<()> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "region radius must be positive, got {r}"
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn validate_for(&self, net: &Network) -> Result<()> {
        if self.dim() != net.input_dim() {
            return Err(Error::Dimension {
                expected: net.input_dim(),
                got: self.dim(),
            });
        }
        Self::check_radius(self.radius)
    }

    /// Coordinate interval `[lo, hi]` of input `i`.
    pub fn bounds(&self, i: usize) -> (f64, f64) {
        (self.center[i] - self.radius, self.center[i] + self.radius)
    }

    /// Whether the `ε`-ball around `x` lies inside this region.
    pub fn contains_ball(&self, x: &[f64], epsilon: f64) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(&self.center)
                .all(|(a, c)| (a - c).abs() + epsilon <= self.radius)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_net() -> Network {
        Network::new(
            vec![2, 2],
            vec![Matrix::identity(2)],
            vec![vec![0.0, 0.0]],
            Matrix::from_rows(&[vec![1.0, 1.0]]).unwrap(),
            None,
        )
        .unwrap()
    }

    #[test]
    fn load_identity_network() {
        let text = r#"{"layer_sizes":[2,2],"weights":[[[1,0],[0,1]]],"biases":[[0,0]],"output_weights":[[1,1]]}"#;
        let net = Network::from_json_str(text).unwrap();
        assert_eq!(net.depth(), 1);
        assert_eq!(net.classes(), 1);
        assert_eq!(net, identity_net());
    }

    #[test]
    fn shape_mismatch_names_layer() {
        let text = r#"{"layer_sizes":[2,2],"weights":[[[1,0,0],[0,1,0]]],"biases":[[0,0]],"output_weights":[[1,1]]}"#;
        match Network::from_json_str(text) {
            Err(Error::Shape { layer, .. }) => assert_eq!(layer, 1),
            other => panic!("expected shape error, got {other:?}"),
        }
    }

    #[test]
    fn non_finite_rejected() {
        let a = Matrix::from_rows(&[vec![f64::NAN]]).unwrap();
        let r = Network::new(
            vec![1, 1],
            vec![a],
            vec![vec![0.0]],
            Matrix::from_rows(&[vec![1.0]]).unwrap(),
            None,
        );
        assert!(matches!(r, Err(Error::NonFinite(_))));
        assert!(Network::from_json_str("{not json").is_err());
    }

    #[test]
    fn forward_identity() {
        let net = identity_net();
        let tr = net.forward(&[1.0, -1.0]).unwrap();
        assert_eq!(tr.activations[1], vec![1.0, 0.0]);
        assert_eq!(tr.scores, vec![1.0]);
        assert!(net.forward(&[1.0]).is_err());
    }

    #[test]
    fn forward_zero_input_gives_output_bias() {
        let net = Network::new(
            vec![2, 2],
            vec![Matrix::identity(2)],
            vec![vec![0.0, 0.0]],
            Matrix::from_rows(&[vec![1.0, 1.0]]).unwrap(),
            Some(vec![0.25]),
        )
        .unwrap();
        let tr = net.forward(&[0.0, 0.0]).unwrap();
        assert!(tr.activations.iter().all(|a| a.iter().all(|&v| v == 0.0)));
        assert_eq!(tr.scores, vec![0.25]);
    }

    #[test]
    fn gradient_patterns() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![-1.0, 3.0]]).unwrap();
        let net = Network::new(
            vec![2, 2],
            vec![a.clone()],
            vec![vec![100.0, 100.0]],
            Matrix::from_rows(&[vec![0.5, -2.0]]).unwrap(),
            None,
        )
        .unwrap();
        let g = net.gradient(&[0.1, 0.2], 0).unwrap();
        assert_eq!(g, a.tmul_vec(&[0.5, -2.0]));

        let off = Network::new(
            vec![2, 2],
            vec![a],
            vec![vec![-100.0, -100.0]],
            Matrix::from_rows(&[vec![0.5, -2.0]]).unwrap(),
            None,
        )
        .unwrap();
        assert_eq!(off.gradient(&[0.1, 0.2], 0).unwrap(), vec![0.0, 0.0]);
        assert!(off.gradient(&[0.1, 0.2], 1).is_err());
    }

    #[test]
    fn band_pattern_matches_tridiagonal_form() {
        let net = random_network(&[4, 4], 4, 7).unwrap();
        let a = net.weight(1);
        for j in 0..4 {
            for k in 0..4 {
                let expect = (j as i64 - k as i64).abs() <= 1;
                assert_eq!(a.get(j, k) != 0.0, expect, "entry ({j},{k})");
            }
            let off = (0..4).filter(|&k| k != j && a.get(j, k) != 0.0).count();
            assert!(off <= 2);
        }
    }

    #[test]
    fn wide_band_is_dense() {
        let net = random_network(&[5, 6, 3], 12, 1).unwrap();
        for layer in 1..=2 {
            let a = net.weight(layer);
            for j in 0..a.rows() {
                assert!(a.row(j).iter().all(|&v| v != 0.0));
            }
        }
    }

    #[test]
    fn random_network_is_deterministic() {
        let a = random_network(&[6, 5], 3, 42).unwrap();
        let b = random_network(&[6, 5], 3, 42).unwrap();
        let c = random_network(&[6, 5], 3, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(random_network(&[6, 5], 0, 1).is_err());
    }

    #[test]
    fn zero_entries_exactly_where_band_fails() {
        let net = random_network(&[9, 7, 5], 5, 3).unwrap();
        for layer in 1..=2 {
            let a = net.weight(layer);
            for j in 0..a.rows() {
                for k in 0..a.cols() {
                    assert_eq!(
                        a.get(j, k) != 0.0,
                        band_allows(j, k, a.rows(), a.cols(), 5)
                    );
                }
            }
        }
    }

    #[test]
    fn canonical_json_round_trip() {
        let net = random_network_with_outputs(&[3, 4], 3, 2, 9).unwrap();
        let text = net.to_canonical_json();
        let back = Network::from_json_str(&text).unwrap();
        assert_eq!(back, net);
        assert_eq!(back.to_canonical_json(), text);
    }

    #[test]
    fn region_containment() {
        let r = InputRegion::global(2);
        assert!(r.contains_ball(&[9.0, -9.5], 0.5));
        assert!(!r.contains_ball(&[9.8, 0.0], 0.5));
        assert!(InputRegion::local(vec![0.0], 0.0).is_err());
    }
}
