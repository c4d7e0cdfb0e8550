use crate::error::{invalid, Error, Result};
use crate::net::{Activation, DenseNetwork, Layer};

/// Affine combination `Σ w·h + bias` of the neurons of one layer. Layer 0
/// denotes the raw inputs.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Signal {
    pub layer: usize,
    pub terms: Vec<(usize, f64)>,
    pub bias: f64,
}

impl Signal {
    pub fn input(j: usize) -> Self {
        Self { layer: 0, terms: vec![(j, 1.0)], bias: 0.0 }
    }

    /// `Σ c_p · s_p + bias`; all parts must live on the same layer.
    pub fn combine(parts: &[(f64, &Signal)], bias: f64) -> Result<Self> {
        let layer = match parts.first() {
            Some((_, s)) => s.layer,
            None => return invalid("empty signal combination"),
        };
        let mut terms = Vec::new();
        let mut b = bias;
        for (c, s) in parts {
            if s.layer != layer {
                return invalid(format!(
                    "cannot combine signals from layers {layer} and {}",
                    s.layer
                ));
            }
            terms.extend(s.terms.iter().map(|&(i, w)| (i, c * w)));
            b += c * s.bias;
        }
        Ok(Self { layer, terms, bias: b })
    }

    /// `mul·s + add`.
    pub fn affine(&self, mul: f64, add: f64) -> Self {
        Self {
            layer: self.layer,
            terms: self.terms.iter().map(|&(i, w)| (i, mul * w)).collect(),
            bias: mul * self.bias + add,
        }
    }
}

#[derive(Debug, Clone)]
struct Neuron {
    w: Vec<(usize, f64)>,
    b: f64,
}

/// Incrementally wires sigmoid neurons layer by layer and assembles a
/// [`DenseNetwork`] whose width is the widest layer (or a requested minimum).
#[derive(Debug, Clone)]
pub(crate) struct NetBuilder {
    act: Activation,
    input_dim: usize,
    layers: Vec<Vec<Neuron>>,
}

impl NetBuilder {
    pub fn new(act: Activation, input_dim: usize) -> Self {
        Self { act, input_dim, layers: Vec::new() }
    }

    /// Adds `σ(Σ c_p · s_p + shift)` on the layer after the inputs' layer.
    pub fn neuron(&mut self, pre: &[(f64, &Signal)], shift: f64) -> Result<Signal> {
        let s = Signal::combine(pre, shift)?;
        let layer = s.layer + 1;
        while self.layers.len() < layer {
            self.layers.push(Vec::new());
        }
        let neurons = &mut self.layers[layer - 1];
        neurons.push(Neuron { w: s.terms, b: s.bias });
        Ok(Signal { layer, terms: vec![(neurons.len() - 1, 1.0)], bias: 0.0 })
    }

    /// `(R/σ'(t))(σ(s/R + t) − σ(t))`.
    pub fn identity(&mut self, s: &Signal, r: f64) -> Result<Signal> {
        let t = self.act.t_id;
        let c = r / self.act.d1_id();
        let h = self.neuron(&[(1.0 / r, s)], t)?;
        let s0: f64 = self.act.eval(t);
        Ok(Signal { layer: h.layer, terms: vec![(h.terms[0].0, c)], bias: -(c * s0) })
    }

    pub fn identity_n(&mut self, s: &Signal, r: f64, times: usize) -> Result<Signal> {
        let mut cur = s.clone();
        for _ in 0..times {
            cur = self.identity(&cur, r)?;
        }
        Ok(cur)
    }

    /// `(R²/σ''(t))(σ(2s/R + t) − 2σ(s/R + t) + σ(t))`.
    pub fn square(&mut self, s: &Signal, r: f64) -> Result<Signal> {
        let t = self.act.t_sq;
        let c = r * r / self.act.d2_sq();
        let h1 = self.neuron(&[(2.0 / r, s)], t)?;
        let h2 = self.neuron(&[(1.0 / r, s)], t)?;
        let s0: f64 = self.act.eval(t);
        Ok(Signal {
            layer: h1.layer,
            terms: vec![(h1.terms[0].0, c), (h2.terms[0].0, -2.0 * c)],
            bias: c * s0,
        })
    }

    /// Four-neuron polarization product of two signals on the same layer.
    pub fn mult(&mut self, x: &Signal, y: &Signal, r: f64) -> Result<Signal> {
        let t = self.act.t_sq;
        let c = r * r / (4.0 * self.act.d2_sq());
        let (a2, a1) = (2.0 / r, 1.0 / r);
        // the order keeps cancelling pairs adjacent in the output sum
        let p2 = self.neuron(&[(a2, x), (a2, y)], t)?;
        let m2 = self.neuron(&[(a2, x), (-a2, y)], t)?;
        let p1 = self.neuron(&[(a1, x), (a1, y)], t)?;
        let m1 = self.neuron(&[(a1, x), (-a1, y)], t)?;
        let idx = |s: &Signal| s.terms[0].0;
        Ok(Signal {
            layer: p2.layer,
            terms: vec![(idx(&p2), c), (idx(&m2), -c), (idx(&p1), -2.0 * c), (idx(&m1), 2.0 * c)],
            bias: 0.0,
        })
    }

    /// `σ(R·s)`.
    pub fn step(&mut self, s: &Signal, r: f64) -> Result<Signal> {
        self.neuron(&[(r, s)], 0.0)
    }

    /// `f_mult(f_id(s), σ(R·s))`.
    pub fn relu(&mut self, s: &Signal, r: f64) -> Result<Signal> {
        let id = self.identity(s, r)?;
        let st = self.step(s, r)?;
        self.mult(&id, &st, r)
    }

    /// Copies `net` so that it reads `inputs` (all on one layer).
    pub fn embed(&mut self, net: &DenseNetwork<f64>, inputs: &[Signal]) -> Result<Signal> {
        if inputs.len() != net.input_dim() {
            return Err(Error::DimensionMismatch { expected: net.input_dim(), got: inputs.len() });
        }
        if *net.activation() != self.act {
            return invalid("embedded network uses a different activation");
        }
        let layers = net.layers();
        let (hidden, out) = layers.split_at(layers.len() - 1);
        let mut prev: Vec<Signal> = inputs.to_vec();
        for layer in hidden {
            let mut next = Vec::with_capacity(layer.rows);
            for i in 0..layer.rows {
                let pre: Vec<(f64, &Signal)> =
                    (0..layer.cols).map(|j| (layer.weight(i, j), &prev[j])).collect();
                next.push(self.neuron(&pre, layer.b[i])?);
            }
            prev = next;
        }
        let pre: Vec<(f64, &Signal)> = (0..out[0].cols).map(|j| (out[0].weight(0, j), &prev[j])).collect();
        Signal::combine(&pre, out[0].b[0])
    }

    /// Widest layer so far.
    pub fn natural_width(&self) -> usize {
        self.layers.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Emits the network computing `out`; layers are padded with inert
    /// neurons to `max(natural width, min_width)`.
    pub fn finish(self, out: &Signal, min_width: usize) -> Result<DenseNetwork<f64>> {
        let depth = out.layer;
        if depth == 0 {
            return invalid("output must depend on at least one hidden layer");
        }
        if depth != self.layers.len() {
            return invalid(format!(
                "output lives on layer {depth} but {} layers were built",
                self.layers.len()
            ));
        }
        let width = self.natural_width().max(min_width);
        let mut layers = Vec::with_capacity(depth + 1);
        for (k, neurons) in self.layers.iter().enumerate() {
            let cols = if k == 0 { self.input_dim } else { width };
            let mut l = Layer::zeros(width, cols);
            for (i, n) in neurons.iter().enumerate() {
                for &(j, w) in &n.w {
                    *l.weight_mut(i, j) += w;
                }
                l.b[i] = n.b;
            }
            layers.push(l);
        }
        let mut o = Layer::zeros(1, width);
        for &(j, w) in &out.terms {
            *o.weight_mut(0, j) += w;
        }
        o.b[0] = out.bias;
        layers.push(o);
        let alpha = layers
            .iter()
            .flat_map(|l| l.w.iter().chain(&l.b))
            .fold(1.0f64, |m, v| m.max(v.abs()));
        DenseNetwork::from_layers(self.input_dim, layers, alpha, self.act)
    }
}

/// Pads every hidden layer of `net` with inert neurons up to `width`.
pub(crate) fn pad_width(net: &DenseNetwork<f64>, width: usize) -> Result<DenseNetwork<f64>> {
    if width < net.width() {
        return invalid(format!("cannot shrink width {} to {width}", net.width()));
    }
    let old = net.width();
    let n = net.layers().len();
    let layers = net
        .layers()
        .iter()
        .enumerate()
        .map(|(k, l)| {
            let rows = if k + 1 == n { 1 } else { width };
            let cols = if k == 0 { l.cols } else { width };
            let mut p = Layer::zeros(rows, cols);
            for i in 0..l.rows {
                for j in 0..l.cols {
                    *p.weight_mut(i, j) = l.weight(i, j);
                }
                p.b[i] = l.b[i];
            }
            debug_assert!(k == 0 || l.cols == old);
            p
        })
        .collect();
    DenseNetwork::from_layers(net.input_dim(), layers, net.alpha(), *net.activation())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combine_requires_same_layer() {
        let a = Signal::input(0);
        let b = Signal { layer: 1, terms: vec![(0, 1.0)], bias: 0.0 };
        assert!(Signal::combine(&[(1.0, &a), (1.0, &b)], 0.0).is_err());
    }

    #[test]
    fn embed_reproduces_network() {
        let act = Activation::logistic();
        let mut b = NetBuilder::new(act, 1);
        let x = Signal::input(0);
        let sq = b.square(&x, 10.0).unwrap();
        let net = b.finish(&sq, 0).unwrap();
        let mut b2 = NetBuilder::new(act, 1);
        let shifted = x.affine(0.5, 0.1);
        let e = b2.embed(&net, &[shifted]).unwrap();
        let net2 = b2.finish(&e, 0).unwrap();
        for v in [-1.0, 0.0, 0.3] {
            let want = net.forward(&[0.5 * v + 0.1]).unwrap();
            assert!((net2.forward(&[v]).unwrap() - want).abs() < 1e-9);
        }
    }

    #[test]
    fn padding_keeps_values() {
        let act = Activation::logistic();
        let mut b = NetBuilder::new(act, 1);
        let y = b.relu(&Signal::input(0), 100.0).unwrap();
        let net = b.finish(&y, 0).unwrap();
        let wide = pad_width(&net, 9).unwrap();
        assert_eq!(wide.width(), 9);
        for v in [-0.7, 0.2, 1.0] {
            assert_eq!(wide.forward(&[v]).unwrap(), net.forward(&[v]).unwrap());
        }
    }

    #[test]
    fn finish_rejects_affine_output() {
        let b = NetBuilder::new(Activation::logistic(), 2);
        assert!(b.finish(&Signal::input(0), 0).is_err());
    }
}
