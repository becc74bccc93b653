//! A plain dense stack: affine layers with ReLU between them and a linear
//! output. Both the sentiment head and the multi-task towers are built
//! from these.

use crate::error::{Error, Result};
use crate::numeric::{Gradients, Matrix, SeededRng, Tape, ValueId};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseStack {
    /// (weights, bias) per layer, input side first.
    layers: Vec<(Matrix, Matrix)>,
}

impl DenseStack {
    /// Glorot weights / zero biases for the layer widths in `dims`
    /// (`[input, hidden..., output]`), drawn input side first.
    pub fn init(dims: &[usize], rng: &mut SeededRng) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::Config(format!(
                "a dense stack needs at least input and output widths, got {dims:?}"
            )));
        }
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for pair in dims.windows(2) {
            layers.push((Matrix::glorot(pair[0], pair[1], rng)?, Matrix::zeros(1, pair[1])?));
        }
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<(Matrix, Matrix)>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("empty dense stack".to_string()));
        }
        for (i, (w, b)) in layers.iter().enumerate() {
            if b.shape() != (1, w.cols()) {
                return Err(Error::Dimension(format!(
                    "layer {i}: bias {}x{} does not fit weights {}x{}",
                    b.rows(),
                    b.cols(),
                    w.rows(),
                    w.cols()
                )));
            }
            if i > 0 && layers[i - 1].0.cols() != w.rows() {
                return Err(Error::Dimension(format!(
                    "layer {i} consumes {} columns but layer {} makes {}",
                    w.rows(),
                    i - 1,
                    layers[i - 1].0.cols()
                )));
            }
        }
        Ok(Self { layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].0.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("stack is never empty").0.cols()
    }

    pub fn layers(&self) -> &[(Matrix, Matrix)] {
        &self.layers
    }

    pub fn params(&self) -> Vec<&Matrix> {
        self.layers.iter().flat_map(|(w, b)| [w, b]).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Matrix> {
        self.layers.iter_mut().flat_map(|(w, b)| [w, b]).collect()
    }

    pub(crate) fn stage(&self, tape: &mut Tape) -> StagedStack {
        StagedStack {
            ids: self
                .layers
                .iter()
                .map(|(w, b)| (tape.param(w.clone()), tape.param(b.clone())))
                .collect(),
        }
    }

    /// Forward pass outside any training graph.
    pub fn forward_value(&self, x: &Matrix) -> Result<Matrix> {
        let mut tape = Tape::new();
        let input = tape.input(x.clone());
        let out = self.stage(&mut tape).forward(&mut tape, input)?;
        Ok(tape.value(out).clone())
    }
}

pub(crate) struct StagedStack {
    ids: Vec<(ValueId, ValueId)>,
}

impl StagedStack {
    /// Affine layers with ReLU between them; the last layer stays linear.
    pub fn forward(&self, tape: &mut Tape, x: ValueId) -> Result<ValueId> {
        let last = self.ids.len() - 1;
        let mut cur = x;
        for (i, (w, b)) in self.ids.iter().enumerate() {
            cur = tape.affine(cur, *w, *b)?;
            if i != last {
                cur = tape.relu(cur)?;
            }
        }
        Ok(cur)
    }

    pub fn param_ids(&self) -> Vec<ValueId> {
        self.ids.iter().flat_map(|(w, b)| [*w, *b]).collect()
    }

    pub fn collect_grads(&self, grads: &Gradients, stack: &DenseStack) -> Vec<Matrix> {
        self.param_ids()
            .iter()
            .zip(stack.params())
            .map(|(id, p)| grads.get_or_zeros(*id, p.shape()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_shapes_follow_dims() {
        let s = DenseStack::init(&[6, 4, 3], &mut SeededRng::new(1)).unwrap();
        assert_eq!(s.input_dim(), 6);
        assert_eq!(s.output_dim(), 3);
        assert_eq!(s.layers().len(), 2);
        assert_eq!(s.layers()[0].0.shape(), (6, 4));
        assert_eq!(s.layers()[1].1.shape(), (1, 3));
        assert!(DenseStack::init(&[5], &mut SeededRng::new(1)).is_err());
    }

    #[test]
    fn single_layer_stack_is_linear() {
        // One layer means no ReLU anywhere: f(-x) = -f(x) with zero bias.
        let s = DenseStack::init(&[3, 2], &mut SeededRng::new(2)).unwrap();
        let x = Matrix::new(1, 3, vec![0.4, -1.0, 2.0]).unwrap();
        let neg = Matrix::new(1, 3, vec![-0.4, 1.0, -2.0]).unwrap();
        let a = s.forward_value(&x).unwrap();
        let b = s.forward_value(&neg).unwrap();
        for (u, v) in a.data().iter().zip(b.data()) {
            assert!((u + v).abs() < 1e-12);
        }
    }

    #[test]
    fn from_layers_checks_the_chain() {
        let w1 = Matrix::zeros(3, 4).unwrap();
        let b1 = Matrix::zeros(1, 4).unwrap();
        let w2 = Matrix::zeros(5, 2).unwrap(); // should consume 4
        let b2 = Matrix::zeros(1, 2).unwrap();
        assert!(DenseStack::from_layers(vec![(w1.clone(), b1.clone()), (w2, b2)]).is_err());
        let bad_bias = Matrix::zeros(1, 3).unwrap();
        assert!(DenseStack::from_layers(vec![(w1, bad_bias)]).is_err());
    }

    #[test]
    fn params_interleave_weights_and_biases() {
        let s = DenseStack::init(&[2, 3, 1], &mut SeededRng::new(3)).unwrap();
        let shapes: Vec<(usize, usize)> = s.params().iter().map(|m| m.shape()).collect();
        assert_eq!(shapes, vec![(2, 3), (1, 3), (3, 1), (1, 1)]);
    }
}
