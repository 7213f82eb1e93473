//! Batched forward evaluation and reverse-mode gradients.

use alloc::vec::Vec;

use super::{Activation, Dataset, ParamVector, ShortcutNetwork};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Intermediate values of one residual unit, kept for backpropagation.
struct UnitTrace {
    /// Unit input h.
    input: Matrix,
    /// σ_pre(h), the input of the first matrix.
    pre_out: Matrix,
    /// Pre-activations z_1..z_n (z_1 includes the bias).
    z: Vec<Matrix>,
}

fn apply(act: Activation, m: &Matrix) -> Matrix {
    match act {
        Activation::Identity => m.clone(),
        _ => m.map(|v| act.apply(v)),
    }
}

/// `grad ⊙ σ'(z)` in place.
fn mul_derivative(act: Activation, grad: &mut Matrix, z: &Matrix) {
    if act == Activation::Identity {
        return;
    }
    for (g, v) in grad.as_mut_slice().iter_mut().zip(z.as_slice()) {
        *g *= act.derivative(*v);
    }
}

fn add_bias(m: &mut Matrix, bias: &[f64]) {
    let cols = m.cols();
    for (i, b) in bias.iter().enumerate() {
        for v in &mut m.as_mut_slice()[i * cols..(i + 1) * cols] {
            *v += b;
        }
    }
}

impl ShortcutNetwork {
    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.rows() != self.shape.width {
            return Err(Error::DimensionMismatch {
                op: "forward",
                expected: (self.shape.width, x.cols()),
                found: x.shape(),
            });
        }
        Ok(())
    }

    /// Transformation-path output of unit `r` for the batch `h`.
    fn unit_path(&self, r: usize, h: &Matrix, keep: bool) -> Result<(Matrix, Option<UnitTrace>)> {
        let acts = self.shape.activations;
        let n = self.shape.shortcut_depth;
        let pre_out = apply(acts.pre, h);
        let mut z1 = self.weight(r, 0).matmul(&pre_out)?;
        if let Some(b) = self.bias(r) {
            add_bias(&mut z1, b);
        }
        let mut zs = Vec::with_capacity(if keep { n } else { 0 });
        let mut z = z1;
        for l in 1..n {
            let a = apply(acts.mid, &z);
            let next = self.weight(r, l).matmul(&a)?;
            if keep {
                zs.push(core::mem::replace(&mut z, next));
            } else {
                z = next;
            }
        }
        let out = apply(acts.post, &z);
        let trace = keep.then(|| {
            zs.push(z);
            UnitTrace {
                input: h.clone(),
                pre_out,
                z: zs,
            }
        });
        Ok((out, trace))
    }

    /// Applies the network to every column of `x`.
    pub fn forward_batch(&self, x: &Matrix) -> Result<Matrix> {
        self.check_input(x)?;
        let mut h = x.clone();
        for r in 0..self.shape.units {
            let (out, _) = self.unit_path(r, &h, false)?;
            h = if self.shape.shortcuts { out.add(&h)? } else { out };
        }
        Ok(h)
    }

    /// Hidden states `h_0 = x, h_1, …, h_R` after every unit.
    pub fn forward_states(&self, x: &Matrix) -> Result<Vec<Matrix>> {
        self.check_input(x)?;
        let mut states = Vec::with_capacity(self.shape.units + 1);
        states.push(x.clone());
        for r in 0..self.shape.units {
            let h = &states[r];
            let (out, _) = self.unit_path(r, h, false)?;
            let next = if self.shape.shortcuts { out.add(h)? } else { out };
            states.push(next);
        }
        Ok(states)
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let col = Matrix::from_vec(x.len(), 1, x.to_vec())?;
        Ok(self.forward_batch(&col)?.into_vec())
    }

    /// `net(x) − x` accumulated as the sum of transformation-path outputs, so
    /// tiny displacements are not lost to cancellation against `x`.
    pub fn residual_displacement(&self, x: &Matrix) -> Result<Matrix> {
        if !self.shape.shortcuts {
            return Ok(self.forward_batch(x)?.sub(x)?);
        }
        self.check_input(x)?;
        let mut h = x.clone();
        let mut total = Matrix::zeros(x.rows(), x.cols());
        for r in 0..self.shape.units {
            let (out, _) = self.unit_path(r, &h, false)?;
            h = h.add(&out)?;
            total = total.add(&out)?;
        }
        Ok(total)
    }

    /// `L = (1/2m) Σ_μ ‖y^μ − net(x^μ)‖²`.
    pub fn loss(&self, data: &Dataset) -> Result<f64> {
        let f = self.forward_batch(data.x())?;
        Ok(half_mse(&f, data.y()))
    }

    /// ∂L/∂w for every parameter, in flattened order.
    pub fn gradient(&self, data: &Dataset) -> Result<ParamVector> {
        Ok(self.loss_and_gradient(data)?.1)
    }

    pub fn loss_and_gradient(&self, data: &Dataset) -> Result<(f64, ParamVector)> {
        self.check_input(data.x())?;
        let shape = self.shape;
        let (d, n, m) = (shape.width, shape.shortcut_depth, data.samples());
        let acts = shape.activations;

        let mut traces = Vec::with_capacity(shape.units);
        let mut h = data.x().clone();
        for r in 0..shape.units {
            let (out, trace) = self.unit_path(r, &h, true)?;
            traces.push(trace.expect("trace requested"));
            h = if shape.shortcuts { out.add(&h)? } else { out };
        }
        let loss = half_mse(&h, data.y());

        let mut grad = ParamVector::zeros(shape.param_count());
        let g = grad.as_mut_slice();
        // dL/dF = (F − Y)/m
        let mut upstream = h.sub(data.y())?.scaled(1.0 / m as f64);

        for r in (0..shape.units).rev() {
            let trace = &traces[r];
            let mut dz = upstream.clone();
            mul_derivative(acts.post, &mut dz, &trace.z[n - 1]);
            for l in (0..n).rev() {
                let layer_in = if l == 0 {
                    trace.pre_out.clone()
                } else {
                    apply(acts.mid, &trace.z[l - 1])
                };
                let dw = dz.matmul_transpose(&layer_in)?;
                let base = shape.param_index(r, l, 0, 0);
                for j in 0..d {
                    for i in 0..d {
                        g[base + j * d + i] = dw[(i, j)];
                    }
                }
                if l == 0 && shape.biased {
                    for i in 0..d {
                        g[shape.bias_index(r, i)] = dz.row(i).iter().sum();
                    }
                }
                let mut da = self.weight(r, l).transpose_matmul(&dz)?;
                if l > 0 {
                    mul_derivative(acts.mid, &mut da, &trace.z[l - 1]);
                } else {
                    mul_derivative(acts.pre, &mut da, &trace.input);
                }
                dz = da;
            }
            upstream = if shape.shortcuts { dz.add(&upstream)? } else { dz };
        }
        Ok((loss, grad))
    }
}

fn half_mse(f: &Matrix, y: &Matrix) -> f64 {
    let m = f.cols() as f64;
    let s: f64 = f.as_slice().iter().zip(y.as_slice()).map(|(a, b)| (a - b) * (a - b)).sum();
    s / (2.0 * m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{ActivationTriple, NetworkShape};
    use crate::rng::Rng64;

    fn random_matrix(rows: usize, cols: usize, rng: &mut Rng64) -> Matrix {
        Matrix::from_fn(rows, cols, |_, _| rng.normal())
    }

    fn random_net(shape: NetworkShape, seed: u64, scale: f64) -> ShortcutNetwork {
        let mut rng = Rng64::new(seed);
        let p: Vec<f64> = (0..shape.param_count()).map(|_| scale * rng.normal()).collect();
        ShortcutNetwork::unflatten(shape, &ParamVector::new(p)).unwrap()
    }

    /// Straight-line re-implementation, one sample and one scalar at a time.
    fn oracle_forward(net: &ShortcutNetwork, x: &[f64]) -> Vec<f64> {
        let s = net.shape();
        let d = s.width;
        let mut h = x.to_vec();
        for r in 0..s.units {
            let mut a: Vec<f64> = h.iter().map(|v| s.activations.pre.apply(*v)).collect();
            for l in 0..s.shortcut_depth {
                let w = net.weight(r, l);
                let mut z = vec![0.0; d];
                for i in 0..d {
                    for j in 0..d {
                        z[i] += w[(i, j)] * a[j];
                    }
                    if l == 0 {
                        if let Some(b) = net.bias(r) {
                            z[i] += b[i];
                        }
                    }
                }
                let act = if l + 1 == s.shortcut_depth {
                    s.activations.post
                } else {
                    s.activations.mid
                };
                a = z.iter().map(|v| act.apply(*v)).collect();
            }
            for i in 0..d {
                h[i] = a[i] + if s.shortcuts { h[i] } else { 0.0 };
            }
        }
        h
    }

    #[test]
    fn zero_network_is_identity() {
        for acts in ["identity,identity,identity", "relu,relu,relu", "tanh,tanh,tanh"] {
            let shape = NetworkShape::new(4, 3, 3, acts.parse().unwrap()).unwrap();
            let net = ShortcutNetwork::zeros(shape).unwrap();
            let x = [0.3, -1.0, 2.0, 0.5];
            assert_eq!(net.forward(&x).unwrap(), x);
        }
    }

    #[test]
    fn single_linear_unit() {
        let shape = NetworkShape::new(3, 1, 1, ActivationTriple::linear()).unwrap();
        let net = random_net(shape, 3, 1.0);
        let x = [1.0, -2.0, 0.5];
        let expect = net.weight(0, 0).add(&Matrix::identity(3)).unwrap().mul_vec(&x).unwrap();
        let got = net.forward(&x).unwrap();
        for (a, b) in got.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn matches_step_by_step_oracle() {
        let mut rng = Rng64::new(21);
        let cases = [
            NetworkShape::new(4, 2, 2, "identity,relu,identity".parse().unwrap()).unwrap(),
            NetworkShape::new(3, 3, 2, "tanh,relu,tanh".parse().unwrap()).unwrap(),
            NetworkShape::simplified_resnet(3, 3).unwrap(),
            NetworkShape::new(3, 2, 3, ActivationTriple::linear()).unwrap().plain(),
        ];
        for (k, shape) in cases.into_iter().enumerate() {
            let net = random_net(shape, 100 + k as u64, 0.7);
            let x = random_matrix(shape.width, 5, &mut rng);
            let batch = net.forward_batch(&x).unwrap();
            for mu in 0..5 {
                let oracle = oracle_forward(&net, &x.column(mu));
                for (i, v) in oracle.iter().enumerate() {
                    assert!((batch[(i, mu)] - v).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn forward_agrees_with_end_to_end_map() {
        let shape = NetworkShape::new(4, 2, 3, ActivationTriple::linear()).unwrap();
        for seed in 0..5 {
            let net = random_net(shape, seed, 0.5);
            let w = net.end_to_end_map().unwrap();
            let x = [0.1, 0.2, -0.3, 0.9];
            let a = net.forward(&x).unwrap();
            let b = w.mul_vec(&x).unwrap();
            for (p, q) in a.iter().zip(&b) {
                assert!((p - q).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn states_end_at_forward_output() {
        let shape = NetworkShape::simplified_resnet(3, 4).unwrap();
        let net = random_net(shape, 8, 0.3);
        let mut rng = Rng64::new(2);
        let x = random_matrix(3, 5, &mut rng);
        let states = net.forward_states(&x).unwrap();
        assert_eq!(states.len(), 5);
        assert_eq!(states[0], x);
        assert_eq!(states[4], net.forward_batch(&x).unwrap());
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let shape = NetworkShape::new(3, 1, 1, ActivationTriple::linear()).unwrap();
        let net = ShortcutNetwork::zeros(shape).unwrap();
        assert!(net.forward(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn loss_examples() {
        let mut rng = Rng64::new(8);
        let x = random_matrix(3, 6, &mut rng);
        let y = random_matrix(3, 6, &mut rng);
        let data = Dataset::new(x.clone(), y.clone()).unwrap();
        let shape = NetworkShape::new(3, 2, 2, ActivationTriple::linear()).unwrap();
        let zero = ShortcutNetwork::zeros(shape).unwrap();
        let expect: f64 = (0..6)
            .map(|mu| {
                x.column(mu)
                    .iter()
                    .zip(y.column(mu))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
            })
            .sum::<f64>()
            / 12.0;
        assert!((zero.loss(&data).unwrap() - expect).abs() < 1e-14);

        let net = random_net(shape, 9, 0.5);
        let fit = Dataset::new(x.clone(), net.forward_batch(&x).unwrap()).unwrap();
        assert_eq!(net.loss(&fit).unwrap(), 0.0);
        let g = net.gradient(&fit).unwrap();
        assert_eq!(g.max_abs(), 0.0);

        // per-sample loop oracle
        let mut s = 0.0;
        for mu in 0..6 {
            let f = oracle_forward(&net, &x.column(mu));
            s += f.iter().zip(y.column(mu)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        }
        assert!((net.loss(&data).unwrap() - s / 12.0).abs() < 1e-12);
    }

    #[test]
    fn zero_point_gradient_vanishes_for_deep_paths() {
        let mut rng = Rng64::new(5);
        let data = Dataset::new(random_matrix(3, 7, &mut rng), random_matrix(3, 7, &mut rng)).unwrap();
        for n in 2..5 {
            let shape = NetworkShape::new(3, n, 3, "tanh,relu,identity".parse().unwrap()).unwrap();
            let g = ShortcutNetwork::zeros(shape).unwrap().gradient(&data).unwrap();
            assert_eq!(g.max_abs(), 0.0, "n = {n}");
        }
    }

    #[test]
    fn displacement_matches_difference() {
        let mut rng = Rng64::new(6);
        let shape = NetworkShape::new(4, 2, 3, "identity,tanh,identity".parse().unwrap()).unwrap();
        let net = random_net(shape, 1, 0.3);
        let x = random_matrix(4, 5, &mut rng);
        let a = net.residual_displacement(&x).unwrap();
        let b = net.forward_batch(&x).unwrap().sub(&x).unwrap();
        assert!(a.sub(&b).unwrap().max_abs() < 1e-12);
    }
}
