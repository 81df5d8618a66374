//! Multilayer perceptron with rectifier hidden layers and a linear head.
//!
//! Weights of a layer are stored `(inputs, outputs)` so a batch is propagated
//! as `X · W + b` with examples along axis 0.
//!
//! # Snapshot format
//!
//! Little-endian throughout:
//!
//! | bytes | content |
//! |-------|---------|
//! | 8     | magic `QBMLP\0\0\x01` |
//! | 4     | `u32` number of layer sizes `L + 1` |
//! | 4·(L+1) | `u32` layer sizes, input first |
//! | …     | per layer: weights as `f64` row-major `(inputs, outputs)`, then biases |

use std::hash::{Hash, Hasher};
use std::io::{Read, Write};

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};

use crate::error::{Error, Result};
use crate::rng::RngStream;

const MAGIC: &[u8; 8] = b"QBMLP\0\0\x01";

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weights: Array2::zeros((inputs, outputs)),
            bias: Array1::zeros(outputs),
        }
    }

    /// Weights and biases uniform in `±1/sqrt(inputs)`.
    pub fn fan_in_uniform(inputs: usize, outputs: usize, rng: &mut RngStream) -> Self {
        let bound = 1.0 / (inputs as f64).sqrt();
        let mut draw = || rng.uniform_range(-bound, bound);
        let weights = Array2::from_shape_simple_fn((inputs, outputs), &mut draw);
        let bias = Array1::from_shape_simple_fn(outputs, &mut draw);
        Self { weights, bias }
    }

    pub fn inputs(&self) -> usize {
        self.weights.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.weights.ncols()
    }

    fn apply(&self, x: &ArrayView2<f64>) -> Array2<f64> {
        let mut z = x.dot(&self.weights);
        z += &self.bias;
        z
    }
}

/// Per-layer parameter gradients, shaped like the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| Dense::zeros(l.inputs(), l.outputs()))
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()))
            .fold(0.0, |m, &g| m.max(g.abs()))
    }

    /// Flat view in the same order as [`Mlp::parameter`].
    pub fn flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

impl Mlp {
    /// `sizes` lists the input width, each hidden width and the output width.
    pub fn new(sizes: &[usize], rng: &mut RngStream) -> Self {
        assert!(sizes.len() >= 2, "network needs at least an input and an output size");
        Self {
            layers: sizes
                .windows(2)
                .map(|w| Dense::fan_in_uniform(w[0], w[1], rng))
                .collect(),
        }
    }

    pub fn zeros(sizes: &[usize]) -> Self {
        assert!(sizes.len() >= 2);
        Self {
            layers: sizes.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.layers[0].inputs()];
        sizes.extend(self.layers.iter().map(Dense::outputs));
        sizes
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_size(&self) -> usize {
        self.layers.last().unwrap().outputs()
    }

    /// Batched forward pass: `(batch, inputs) -> (batch, outputs)`.
    pub fn forward(&self, x: &ArrayView2<f64>) -> Array2<f64> {
        let last = self.layers.len() - 1;
        let mut h = self.layers[0].apply(x);
        if last > 0 {
            h.mapv_inplace(relu);
        }
        for (i, layer) in self.layers.iter().enumerate().skip(1) {
            h = layer.apply(&h.view());
            if i < last {
                h.mapv_inplace(relu);
            }
        }
        h
    }

    pub fn forward_one(&self, x: &[f64]) -> Vec<f64> {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("input row");
        self.forward(&view).into_raw_vec_and_offset().0
    }

    /// Mean squared error over the taken actions,
    /// `(1/B) Σ_i (Q(s_i, a_i) − target_i)²`, and its gradient.
    pub fn backward(
        &self,
        states: &ArrayView2<f64>,
        actions: &[usize],
        targets: &[f64],
    ) -> (f64, Gradients) {
        let batch = states.nrows();
        assert!(batch > 0, "empty batch");
        assert_eq!(actions.len(), batch);
        assert_eq!(targets.len(), batch);

        // Post-activation outputs of every layer, input first.
        let last = self.layers.len() - 1;
        let mut activations: Vec<Array2<f64>> = Vec::with_capacity(self.layers.len() + 1);
        activations.push(states.to_owned());
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = layer.apply(&activations[i].view());
            if i < last {
                z.mapv_inplace(relu);
            }
            activations.push(z);
        }

        let output = &activations[last + 1];
        let mut delta = Array2::<f64>::zeros(output.raw_dim());
        let mut loss = 0.0;
        let scale = 2.0 / batch as f64;
        for (i, (&a, &t)) in actions.iter().zip(targets).enumerate() {
            let err = output[[i, a]] - t;
            loss += err * err;
            delta[[i, a]] = scale * err;
        }
        loss /= batch as f64;

        let mut grads = Vec::with_capacity(self.layers.len());
        for i in (0..self.layers.len()).rev() {
            let input = &activations[i];
            let weights = input.t().dot(&delta);
            let bias = delta.sum_axis(Axis(0));
            if i > 0 {
                let mut back = delta.dot(&self.layers[i].weights.t());
                // Rectifier derivative, read off the stored activation.
                Zip::from(&mut back).and(input).for_each(|d, &h| {
                    if h <= 0.0 {
                        *d = 0.0;
                    }
                });
                delta = back;
            }
            grads.push(Dense { weights, bias });
        }
        grads.reverse();
        (loss, Gradients { layers: grads })
    }

    /// Loss only, for finite-difference checks.
    pub fn loss(&self, states: &ArrayView2<f64>, actions: &[usize], targets: &[f64]) -> f64 {
        let out = self.forward(states);
        actions
            .iter()
            .zip(targets)
            .enumerate()
            .map(|(i, (&a, &t))| (out[[i, a]] - t).powi(2))
            .sum::<f64>()
            / states.nrows() as f64
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    fn locate(&self, mut index: usize) -> (usize, Option<(usize, usize)>, usize) {
        for (li, l) in self.layers.iter().enumerate() {
            let nw = l.weights.len();
            if index < nw {
                return (li, Some((index / l.outputs(), index % l.outputs())), 0);
            }
            index -= nw;
            if index < l.bias.len() {
                return (li, None, index);
            }
            index -= l.bias.len();
        }
        panic!("parameter index out of range");
    }

    /// Parameter by flat index: each layer's weights row-major, then its biases.
    pub fn parameter(&self, index: usize) -> f64 {
        match self.locate(index) {
            (l, Some(ij), _) => self.layers[l].weights[ij],
            (l, None, b) => self.layers[l].bias[b],
        }
    }

    pub fn set_parameter(&mut self, index: usize, value: f64) {
        match self.locate(index) {
            (l, Some(ij), _) => self.layers[l].weights[ij] = value,
            (l, None, b) => self.layers[l].bias[b] = value,
        }
    }

    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    /// Hash of the exact parameter bits.
    pub fn fingerprint(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for l in &self.layers {
            for v in l.weights.iter().chain(l.bias.iter()) {
                v.to_bits().hash(&mut h);
            }
        }
        h.finish()
    }

    pub fn write_snapshot<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(MAGIC)?;
        let sizes = self.sizes();
        out.write_all(&(sizes.len() as u32).to_le_bytes())?;
        for s in &sizes {
            out.write_all(&(*s as u32).to_le_bytes())?;
        }
        for l in &self.layers {
            for v in l.weights.iter().chain(l.bias.iter()) {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_snapshot<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Snapshot("bad magic".into()));
        }
        let mut word = [0u8; 4];
        input.read_exact(&mut word)?;
        let count = u32::from_le_bytes(word) as usize;
        if !(2..=64).contains(&count) {
            return Err(Error::Snapshot(format!("implausible layer count {count}")));
        }
        let mut sizes = Vec::with_capacity(count);
        for _ in 0..count {
            input.read_exact(&mut word)?;
            let s = u32::from_le_bytes(word) as usize;
            if s == 0 {
                return Err(Error::Snapshot("zero-width layer".into()));
            }
            sizes.push(s);
        }
        let mut net = Mlp::zeros(&sizes);
        let mut buf = [0u8; 8];
        for l in &mut net.layers {
            for v in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                input.read_exact(&mut buf)?;
                *v = f64::from_le_bytes(buf);
            }
        }
        let mut rest = Vec::new();
        input.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(Error::Snapshot(format!("{} trailing bytes", rest.len())));
        }
        Ok(net)
    }
}

#[inline]
fn relu(v: f64) -> f64 {
    v.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    const SIZES: [usize; 4] = [4, 48, 96, 2];

    fn random_batch(rng: &mut RngStream, n: usize) -> (Array2<f64>, Vec<usize>, Vec<f64>) {
        let states = Array2::from_shape_simple_fn((n, 4), || rng.uniform_range(-1.0, 1.0));
        let actions = (0..n).map(|_| rng.below(2)).collect();
        let targets = (0..n).map(|_| rng.uniform_range(-2.0, 2.0)).collect();
        (states, actions, targets)
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = Mlp::zeros(&SIZES);
        assert_eq!(net.forward_one(&[0.3, -1.0, 2.0, 0.5]), vec![0.0, 0.0]);
    }

    #[test]
    fn output_bias_passes_through() {
        let mut net = Mlp::zeros(&SIZES);
        net.layers[2].bias = array![1.5, -0.25];
        assert_eq!(net.forward_one(&[1.0, 2.0, 3.0, 4.0]), vec![1.5, -0.25]);
    }

    #[test]
    fn head_is_linear_in_its_weights() {
        let mut rng = RngStream::new(8);
        let mut net = Mlp::new(&SIZES, &mut rng);
        net.layers[2].bias.fill(0.0);
        let x = [0.1, -0.2, 0.3, 0.05];
        let base = net.forward_one(&x);
        net.layers[2].weights *= 3.0;
        let scaled = net.forward_one(&x);
        for (a, b) in base.iter().zip(&scaled) {
            assert!((3.0 * a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn forward_is_pure() {
        let mut rng = RngStream::new(9);
        let net = Mlp::new(&SIZES, &mut rng);
        let (states, _, _) = random_batch(&mut rng, 16);
        let a = net.forward(&states.view());
        let b = net.forward(&states.view());
        assert!(a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn init_is_bounded_by_fan_in() {
        let mut rng = RngStream::new(10);
        let net = Mlp::new(&SIZES, &mut rng);
        for l in &net.layers {
            let bound = 1.0 / (l.inputs() as f64).sqrt();
            assert!(l.weights.iter().chain(l.bias.iter()).all(|v| v.abs() <= bound));
        }
        assert_eq!(net.parameter_count(), 4 * 48 + 48 + 48 * 96 + 96 + 96 * 2 + 2);
    }

    #[test]
    fn matching_targets_give_zero_gradient() {
        let mut rng = RngStream::new(11);
        let net = Mlp::new(&SIZES, &mut rng);
        let (states, actions, _) = random_batch(&mut rng, 32);
        let out = net.forward(&states.view());
        let targets: Vec<f64> = actions.iter().enumerate().map(|(i, &a)| out[[i, a]]).collect();
        let (loss, grads) = net.backward(&states.view(), &actions, &targets);
        assert_eq!(loss, 0.0);
        assert_eq!(grads.max_abs(), 0.0);
    }

    #[test]
    fn duplicated_batch_has_same_gradient() {
        let mut rng = RngStream::new(12);
        let net = Mlp::new(&SIZES, &mut rng);
        let (states, actions, targets) = random_batch(&mut rng, 20);
        let (_, g1) = net.backward(&states.view(), &actions, &targets);
        let doubled = ndarray::concatenate(Axis(0), &[states.view(), states.view()]).unwrap();
        let actions2: Vec<usize> = actions.iter().chain(&actions).copied().collect();
        let targets2: Vec<f64> = targets.iter().chain(&targets).copied().collect();
        let (_, g2) = net.backward(&doubled.view(), &actions2, &targets2);
        for (a, b) in g1.flat().iter().zip(g2.flat()) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn backward_matches_central_differences() {
        let mut rng = RngStream::new(13);
        let h = 1e-4;
        let mut probes = 0;
        let mut worst: f64 = 0.0;
        for _ in 0..4 {
            let mut net = Mlp::new(&SIZES, &mut rng);
            let (states, actions, targets) = random_batch(&mut rng, 8);
            let (_, grads) = net.backward(&states.view(), &actions, &targets);
            let flat = grads.flat();
            for _ in 0..40 {
                let i = rng.below(net.parameter_count());
                let p = net.parameter(i);
                net.set_parameter(i, p + h);
                let up = net.loss(&states.view(), &actions, &targets);
                net.set_parameter(i, p - h);
                let down = net.loss(&states.view(), &actions, &targets);
                net.set_parameter(i, p);
                let numeric = (up - down) / (2.0 * h);
                let analytic = flat[i];
                // Relative error with a floor so exactly-zero gradients (dead
                // units) compare on an absolute scale.
                let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-6);
                worst = worst.max(rel);
                probes += 1;
            }
        }
        assert!(probes >= 100);
        assert!(worst <= 1e-4, "worst relative error {worst:e}");
    }

    #[test]
    fn snapshot_round_trip() {
        let mut rng = RngStream::new(14);
        let net = Mlp::new(&SIZES, &mut rng);
        let mut bytes = Vec::new();
        net.write_snapshot(&mut bytes).unwrap();
        assert_eq!(bytes.len(), 8 + 4 + 16 + 8 * net.parameter_count());
        let back = Mlp::read_snapshot(bytes.as_slice()).unwrap();
        assert_eq!(back, net);
        assert_eq!(back.fingerprint(), net.fingerprint());
    }

    #[test]
    fn snapshot_rejects_garbage() {
        assert!(matches!(
            Mlp::read_snapshot(&b"NOTANMLP\x02\0\0\0"[..]),
            Err(Error::Snapshot(_))
        ));
        let mut rng = RngStream::new(15);
        let mut bytes = Vec::new();
        Mlp::new(&[2, 3], &mut rng).write_snapshot(&mut bytes).unwrap();
        bytes.push(0);
        assert!(matches!(Mlp::read_snapshot(bytes.as_slice()), Err(Error::Snapshot(_))));
        bytes.truncate(20);
        assert!(Mlp::read_snapshot(bytes.as_slice()).is_err());
    }
}
