//! Feed-forward network with manual reverse-mode differentiation and an Adam
//! optimizer. Parameters live in one flat array (per layer: row-major weight
//! matrix, then biases) so checkpointing, target averaging, and gradient
//! accumulation are simple array operations.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// ReLU hidden layers, linear output.
#[derive(Clone, Debug)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

/// Per-layer parameter offsets are recomputed on the fly; layers are few.
impl Mlp {
    /// `sizes` lists the input width followed by every layer width.
    pub fn new(sizes: Vec<usize>, rng: &mut ChaCha8Rng) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output sizes");
        let n = Self::param_count(&sizes);
        let mut params = vec![0.0; n];
        let mut off = 0;
        for l in 1..sizes.len() {
            let (fan_in, fan_out) = (sizes[l - 1], sizes[l]);
            let scale = (1.0 / fan_in as f64).sqrt();
            for w in params[off..off + fan_in * fan_out].iter_mut() {
                *w = rng.gen_range(-scale..scale);
            }
            off += fan_in * fan_out + fan_out; // biases stay zero
        }
        Mlp { sizes, params }
    }

    pub fn param_count(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    /// Move parameters toward `other` by rate `tau` (target-network update).
    pub fn polyak_toward(&mut self, other: &Mlp, tau: f64) {
        debug_assert_eq!(self.sizes, other.sizes);
        for (t, s) in self.params.iter_mut().zip(&other.params) {
            *t += tau * (s - *t);
        }
    }

    /// Plain forward pass.
    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        let mut ws = Workspace::for_net(self);
        self.forward_cached(input, &mut ws);
        ws.activations.last().unwrap().clone()
    }

    /// Forward pass keeping per-layer activations for a later backward pass.
    pub fn forward_cached<'a>(&self, input: &[f64], ws: &'a mut Workspace) -> &'a [f64] {
        assert_eq!(input.len(), self.sizes[0], "input width mismatch");
        ws.ensure(self);
        let n_layers = self.sizes.len() - 1;
        let mut off = 0;
        for l in 0..n_layers {
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let weights = &self.params[off..off + fan_in * fan_out];
            let biases = &self.params[off + fan_in * fan_out..off + fan_in * fan_out + fan_out];
            let last = l == n_layers - 1;
            // split_at_mut so the previous activation can be read while
            // writing the next one
            let (head, tail) = ws.activations.split_at_mut(l + 1);
            let src: &[f64] = if l == 0 { input } else { &head[l] };
            let dst = &mut tail[0];
            for o in 0..fan_out {
                let row = &weights[o * fan_in..(o + 1) * fan_in];
                let mut acc = biases[o];
                for (w, x) in row.iter().zip(src) {
                    acc += w * x;
                }
                dst[o] = if last { acc } else { acc.max(0.0) };
            }
            off += fan_in * fan_out + fan_out;
        }
        ws.activations.last().unwrap()
    }

    /// Reverse pass for the contraction `upstream . output`.
    ///
    /// Accumulates parameter gradients into `grads` (same layout as
    /// `params`); when `input_grad` is given, also writes the gradient with
    /// respect to the input (needed to differentiate a critic by its action).
    /// `ws` must hold the activations of the matching forward pass.
    pub fn backward(
        &self,
        input: &[f64],
        ws: &Workspace,
        upstream: &[f64],
        grads: &mut [f64],
        mut input_grad: Option<&mut [f64]>,
    ) {
        assert_eq!(grads.len(), self.params.len(), "gradient buffer mismatch");
        assert_eq!(upstream.len(), self.output_dim());
        let n_layers = self.sizes.len() - 1;
        let mut delta = upstream.to_vec();
        // walk layers from the top; recompute the parameter offset per layer
        for l in (0..n_layers).rev() {
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let off: usize = self.sizes[..=l]
                .windows(2)
                .map(|w| w[0] * w[1] + w[1])
                .sum();
            let weights = &self.params[off..off + fan_in * fan_out];
            let src: &[f64] = if l == 0 { input } else { &ws.activations[l] };

            let (w_grads, b_grads) =
                grads[off..off + fan_in * fan_out + fan_out].split_at_mut(fan_in * fan_out);
            for o in 0..fan_out {
                let d = delta[o];
                b_grads[o] += d;
                let row = &mut w_grads[o * fan_in..(o + 1) * fan_in];
                for (g, x) in row.iter_mut().zip(src) {
                    *g += d * x;
                }
            }

            let want_input_grad = l > 0 || input_grad.is_some();
            if !want_input_grad {
                break;
            }
            let mut prev = vec![0.0; fan_in];
            for o in 0..fan_out {
                let d = delta[o];
                let row = &weights[o * fan_in..(o + 1) * fan_in];
                for (p, w) in prev.iter_mut().zip(row) {
                    *p += d * w;
                }
            }
            if l > 0 {
                // ReLU mask of the hidden activation below
                for (p, a) in prev.iter_mut().zip(ws.activations[l].iter()) {
                    if *a <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev;
            } else if let Some(ig) = input_grad.as_deref_mut() {
                for (g, p) in ig.iter_mut().zip(&prev) {
                    *g = *p;
                }
            }
        }
    }
}

/// Reusable per-sample activation storage.
#[derive(Clone, Debug, Default)]
pub struct Workspace {
    sizes: Vec<usize>,
    /// `activations[0]` is unused (the input is passed explicitly);
    /// `activations[l]` holds the output of layer `l`.
    activations: Vec<Vec<f64>>,
}

impl Workspace {
    pub fn for_net(net: &Mlp) -> Self {
        let mut ws = Workspace::default();
        ws.ensure(net);
        ws
    }

    fn ensure(&mut self, net: &Mlp) {
        if self.sizes != net.sizes {
            self.sizes = net.sizes.clone();
            self.activations = net.sizes.iter().map(|&s| vec![0.0; s]).collect();
        }
    }

    pub fn output(&self) -> &[f64] {
        self.activations.last().unwrap()
    }
}

/// Adaptive moment estimation over a flat parameter array.
#[derive(Clone, Debug)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(lr: f64, n_params: usize) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }

    pub fn state(&self) -> (&[f64], &[f64], u64) {
        (&self.m, &self.v, self.t)
    }

    pub fn restore(&mut self, m: Vec<f64>, v: Vec<f64>, t: u64) {
        assert_eq!(m.len(), self.m.len());
        assert_eq!(v.len(), self.v.len());
        self.m = m;
        self.v = v;
        self.t = t;
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn single_linear_layer_gradient_is_outer_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net = Mlp::new(vec![3, 2], &mut rng);
        let input = [0.5, -1.0, 2.0];
        let mut ws = Workspace::for_net(&net);
        net.forward_cached(&input, &mut ws);
        let upstream = [1.0, -2.0];
        let mut grads = vec![0.0; net.n_params()];
        net.backward(&input, &ws, &upstream, &mut grads, None);
        // weight gradient dL/dW[o][i] = upstream[o] * input[i]
        for o in 0..2 {
            for i in 0..3 {
                assert_eq!(grads[o * 3 + i], upstream[o] * input[i]);
            }
            assert_eq!(grads[6 + o], upstream[o]);
        }
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Mlp::new(vec![4, 8, 3], &mut rng);
        let input = [0.1, 0.2, -0.3, 0.4];
        let mut ws = Workspace::for_net(&net);
        net.forward_cached(&input, &mut ws);
        let mut grads = vec![0.0; net.n_params()];
        let mut input_grad = vec![7.0; 4];
        net.backward(&input, &ws, &[0.0; 3], &mut grads, Some(&mut input_grad));
        assert!(grads.iter().all(|&g| g == 0.0));
        assert!(input_grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn gradients_match_central_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for sizes in [vec![5, 8, 4, 2], vec![3, 16, 1], vec![2, 4, 4, 4, 1]] {
            let net = Mlp::new(sizes, &mut rng);
            let input: Vec<f64> = (0..net.input_dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let upstream: Vec<f64> =
                (0..net.output_dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut ws = Workspace::for_net(&net);
            net.forward_cached(&input, &mut ws);
            let mut grads = vec![0.0; net.n_params()];
            let mut input_grad = vec![0.0; net.input_dim()];
            net.backward(&input, &ws, &upstream, &mut grads, Some(&mut input_grad));

            let loss = |net: &Mlp| -> f64 {
                net.forward(&input).iter().zip(&upstream).map(|(y, u)| y * u).sum()
            };
            let h = 1e-6;
            for p in (0..net.n_params()).step_by(7) {
                let mut plus = net.clone();
                plus.params_mut()[p] += h;
                let mut minus = net.clone();
                minus.params_mut()[p] -= h;
                let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
                let denom = (fd.abs() + grads[p].abs()).max(1e-8);
                assert!(
                    (fd - grads[p]).abs() / denom < 1e-5,
                    "param {p}: fd {fd} vs analytic {}",
                    grads[p]
                );
            }
            // input gradient against finite differences
            for i in 0..net.input_dim() {
                let mut plus = input.clone();
                plus[i] += h;
                let mut minus = input.clone();
                minus[i] -= h;
                let f = |x: &[f64]| -> f64 {
                    net.forward(x).iter().zip(&upstream).map(|(y, u)| y * u).sum()
                };
                let fd = (f(&plus) - f(&minus)) / (2.0 * h);
                let denom = (fd.abs() + input_grad[i].abs()).max(1e-8);
                assert!((fd - input_grad[i]).abs() / denom < 1e-5);
            }
        }
    }

    #[test]
    fn polyak_distance_is_non_increasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let live = Mlp::new(vec![4, 8, 2], &mut rng);
        let mut target = Mlp::new(vec![4, 8, 2], &mut rng);
        let dist = |a: &Mlp, b: &Mlp| -> f64 {
            a.params().iter().zip(b.params()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
        };
        let start = dist(&live, &target);
        let mut prev = start;
        for _ in 0..100 {
            target.polyak_toward(&live, 0.05);
            let now = dist(&live, &target);
            assert!(now <= prev + 1e-15);
            prev = now;
        }
        assert!(prev < 0.01 * start, "distance {prev} barely shrank from {start}");
    }

    #[test]
    fn adam_descends_a_quadratic() {
        let mut params = vec![5.0, -3.0];
        let mut opt = Adam::new(0.1, 2);
        for _ in 0..500 {
            let grads: Vec<f64> = params.iter().map(|p| 2.0 * p).collect();
            opt.step(&mut params, &grads);
        }
        assert!(params.iter().all(|p| p.abs() < 1e-2));
    }
}
