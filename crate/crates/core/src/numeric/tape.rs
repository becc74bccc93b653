//! Reverse-mode automatic differentiation over a closed primitive set.
//!
//! A [`Tape`] records every primitive applied during a forward pass, in
//! topological order by construction (an operand's [`ValueId`] can only come
//! from an earlier push onto the same tape). [`Tape::backward`] replays the
//! record once, in reverse, accumulating vector-Jacobian products, and returns
//! the gradients of all registered parameters.
//!
//! The primitive set is exactly what the two-branch embedding network and the
//! classifier heads need: dense affine, ReLU, row L2-normalization, pairwise
//! cosine similarity, the bidirectional triplet hinge, softmax and sigmoid
//! cross-entropy, plus two scalar reductions for composing losses.

use crate::error::{Error, Result};
use crate::numeric::matrix::Matrix;
use crate::numeric::ops;
use crate::numeric::ops::HingeSkips;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValueId(pub(crate) usize);

#[derive(Debug)]
enum Node {
    Leaf { param: bool },
    Affine { x: ValueId, w: ValueId, b: ValueId },
    Relu { x: ValueId },
    L2NormalizeRows { x: ValueId },
    /// S[i][j] = a_i . b_j for unit rows.
    Similarity { a: ValueId, b: ValueId },
    TripletHinge { sims: ValueId, margin: f64, skips: HingeSkips },
    /// Caches the forward probabilities for the backward rule.
    SoftmaxCrossEntropy { logits: ValueId, gold: Vec<usize>, probs: Matrix },
    SigmoidCrossEntropy { logits: ValueId, gold: Vec<u8> },
    SumAll { x: ValueId },
    WeightedSum { terms: Vec<(ValueId, f64)> },
}

struct Entry {
    node: Node,
    value: Matrix,
}

#[derive(Default)]
pub struct Tape {
    entries: Vec<Entry>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Record a non-parameter leaf (an input batch).
    pub fn input(&mut self, value: Matrix) -> ValueId {
        self.push(Node::Leaf { param: false }, value)
    }

    /// Record a parameter leaf; its gradient is returned by [`Tape::backward`].
    pub fn param(&mut self, value: Matrix) -> ValueId {
        self.push(Node::Leaf { param: true }, value)
    }

    pub fn value(&self, id: ValueId) -> &Matrix {
        &self.entries[id.0].value
    }

    fn push(&mut self, node: Node, value: Matrix) -> ValueId {
        self.entries.push(Entry { node, value });
        ValueId(self.entries.len() - 1)
    }

    fn check(&self, id: ValueId) -> Result<&Matrix> {
        self.entries
            .get(id.0)
            .map(|e| &e.value)
            .ok_or_else(|| Error::Contract(format!("value id {} is not on this tape", id.0)))
    }

    pub fn affine(&mut self, x: ValueId, w: ValueId, b: ValueId) -> Result<ValueId> {
        let out = ops::dense_affine(self.check(x)?, self.check(w)?, self.check(b)?)?;
        Ok(self.push(Node::Affine { x, w, b }, out))
    }

    pub fn relu(&mut self, x: ValueId) -> Result<ValueId> {
        let out = ops::relu(self.check(x)?);
        Ok(self.push(Node::Relu { x }, out))
    }

    pub fn l2_normalize(&mut self, x: ValueId) -> Result<ValueId> {
        let out = ops::l2_normalize(self.check(x)?)?;
        Ok(self.push(Node::L2NormalizeRows { x }, out))
    }

    pub fn similarity(&mut self, a: ValueId, b: ValueId) -> Result<ValueId> {
        let out = ops::similarity_matrix(self.check(a)?, self.check(b)?)?;
        Ok(self.push(Node::Similarity { a, b }, out))
    }

    pub fn triplet_hinge(&mut self, sims: ValueId, margin: f64, skips: HingeSkips) -> Result<ValueId> {
        let loss = ops::triplet_hinge_from_sims(self.check(sims)?, margin, &skips)?;
        let value = Matrix::from_parts(1, 1, vec![loss]);
        Ok(self.push(Node::TripletHinge { sims, margin, skips }, value))
    }

    pub fn softmax_cross_entropy(&mut self, logits: ValueId, gold: &[usize]) -> Result<ValueId> {
        let (loss, probs) = ops::softmax_cross_entropy(self.check(logits)?, gold)?;
        let value = Matrix::from_parts(1, 1, vec![loss]);
        Ok(self.push(
            Node::SoftmaxCrossEntropy { logits, gold: gold.to_vec(), probs },
            value,
        ))
    }

    pub fn sigmoid_cross_entropy(&mut self, logits: ValueId, gold: &[u8]) -> Result<ValueId> {
        let loss = ops::sigmoid_cross_entropy(self.check(logits)?, gold)?;
        let value = Matrix::from_parts(1, 1, vec![loss]);
        Ok(self.push(Node::SigmoidCrossEntropy { logits, gold: gold.to_vec() }, value))
    }

    /// Sum of every entry, as a scalar.
    pub fn sum_all(&mut self, x: ValueId) -> Result<ValueId> {
        let total: f64 = self.check(x)?.data().iter().sum();
        let value = Matrix::from_parts(1, 1, vec![total]);
        Ok(self.push(Node::SumAll { x }, value))
    }

    /// Weighted sum of scalar terms, as a scalar.
    pub fn weighted_sum(&mut self, terms: &[(ValueId, f64)]) -> Result<ValueId> {
        if terms.is_empty() {
            return Err(Error::Contract("weighted_sum over no terms".to_string()));
        }
        let mut total = 0.0;
        for &(id, w) in terms {
            total += w * self.check(id)?.scalar_value()?;
        }
        let value = Matrix::from_parts(1, 1, vec![total]);
        Ok(self.push(Node::WeightedSum { terms: terms.to_vec() }, value))
    }

    /// Gradients of `loss` with respect to every registered parameter.
    pub fn backward(&self, loss: ValueId) -> Result<Gradients> {
        if self.entries.is_empty() {
            return Err(Error::Contract("backward on an empty tape".to_string()));
        }
        let loss_value = self.check(loss)?;
        if !loss_value.is_scalar() {
            return Err(Error::Contract(format!(
                "loss must be scalar, got {}x{}",
                loss_value.rows(),
                loss_value.cols()
            )));
        }

        let mut grads: Vec<Option<Matrix>> = (0..self.entries.len()).map(|_| None).collect();
        grads[loss.0] = Some(Matrix::from_parts(1, 1, vec![1.0]));

        for i in (0..=loss.0).rev() {
            let Some(gout) = grads[i].take() else { continue };
            self.apply_vjp(i, &gout, &mut grads)?;
            // Keep the slot for parameters and for fan-out accumulation below i.
            grads[i] = Some(gout);
        }

        let params = self
            .entries
            .iter()
            .map(|e| matches!(e.node, Node::Leaf { param: true }))
            .collect();
        Ok(Gradients { grads, params })
    }

    fn accumulate(grads: &mut [Option<Matrix>], id: ValueId, delta: Matrix) {
        match &mut grads[id.0] {
            Some(g) => g.add_assign(&delta),
            slot @ None => *slot = Some(delta),
        }
    }

    fn apply_vjp(&self, i: usize, gout: &Matrix, grads: &mut [Option<Matrix>]) -> Result<()> {
        match &self.entries[i].node {
            Node::Leaf { .. } => {}
            Node::Affine { x, w, b } => {
                let (xv, wv) = (self.value(*x), self.value(*w));
                Self::accumulate(grads, *x, ops::matmul_nt(gout, wv)?);
                Self::accumulate(grads, *w, ops::matmul_tn(xv, gout)?);
                Self::accumulate(grads, *b, ops::column_sums(gout));
            }
            Node::Relu { x } => {
                let xv = self.value(*x);
                let data = xv
                    .data()
                    .iter()
                    .zip(gout.data())
                    .map(|(&v, &g)| if v > 0.0 { g } else { 0.0 })
                    .collect();
                Self::accumulate(grads, *x, Matrix::from_parts(xv.rows(), xv.cols(), data));
            }
            Node::L2NormalizeRows { x } => {
                let xv = self.value(*x);
                let yv = &self.entries[i].value;
                let cols = xv.cols();
                let mut dx = vec![0.0; xv.rows() * cols];
                for r in 0..xv.rows() {
                    let norm = ops::dot(xv.row(r), xv.row(r)).sqrt();
                    let yrow = yv.row(r);
                    let grow = gout.row(r);
                    let gy = ops::dot(grow, yrow);
                    let drow = &mut dx[r * cols..(r + 1) * cols];
                    for c in 0..cols {
                        drow[c] = (grow[c] - gy * yrow[c]) / norm;
                    }
                }
                Self::accumulate(grads, *x, Matrix::from_parts(xv.rows(), cols, dx));
            }
            Node::Similarity { a, b } => {
                let (av, bv) = (self.value(*a), self.value(*b));
                Self::accumulate(grads, *a, ops::matmul(gout, bv)?);
                Self::accumulate(grads, *b, ops::matmul_tn(gout, av)?);
            }
            Node::TripletHinge { sims, margin, skips } => {
                let s = self.value(*sims);
                let n = s.rows();
                let scale = gout.scalar_value()? / (n as f64 * (n as f64 - 1.0));
                let mut ds = vec![0.0; n * n];
                for i in 0..n {
                    let s_ii = s.get(i, i);
                    for j in 0..n {
                        if i == j {
                            continue;
                        }
                        if !skips.skip_img_anchor(i, j) && margin - s_ii + s.get(i, j) > 0.0 {
                            ds[i * n + j] += scale;
                            ds[i * n + i] -= scale;
                        }
                        if !skips.skip_txt_anchor(i, j) && margin - s_ii + s.get(j, i) > 0.0 {
                            ds[j * n + i] += scale;
                            ds[i * n + i] -= scale;
                        }
                    }
                }
                Self::accumulate(grads, *sims, Matrix::from_parts(n, n, ds));
            }
            Node::SoftmaxCrossEntropy { logits, gold, probs } => {
                let scale = gout.scalar_value()? / probs.rows() as f64;
                let mut d = probs.data().to_vec();
                let classes = probs.cols();
                for (r, &g) in gold.iter().enumerate() {
                    d[r * classes + g] -= 1.0;
                }
                for v in &mut d {
                    *v *= scale;
                }
                Self::accumulate(grads, *logits, Matrix::from_parts(probs.rows(), classes, d));
            }
            Node::SigmoidCrossEntropy { logits, gold } => {
                let zv = self.value(*logits);
                let scale = gout.scalar_value()? / zv.rows() as f64;
                let d = zv
                    .data()
                    .iter()
                    .zip(gold)
                    .map(|(&z, &y)| scale * (ops::sigmoid(z) - f64::from(y)))
                    .collect();
                Self::accumulate(grads, *logits, Matrix::from_parts(zv.rows(), 1, d));
            }
            Node::SumAll { x } => {
                let xv = self.value(*x);
                let g = gout.scalar_value()?;
                Self::accumulate(
                    grads,
                    *x,
                    Matrix::from_parts(xv.rows(), xv.cols(), vec![g; xv.rows() * xv.cols()]),
                );
            }
            Node::WeightedSum { terms } => {
                let g = gout.scalar_value()?;
                for &(id, w) in terms {
                    Self::accumulate(grads, id, Matrix::from_parts(1, 1, vec![g * w]));
                }
            }
        }
        Ok(())
    }
}

/// Parameter gradients produced by [`Tape::backward`].
///
/// Gradients of non-parameter intermediates are not exposed.
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
    params: Vec<bool>,
}

impl Gradients {
    /// Gradient of the loss with respect to the parameter `id`, if the
    /// parameter participated in the loss.
    pub fn get(&self, id: ValueId) -> Option<&Matrix> {
        if !self.params.get(id.0).copied().unwrap_or(false) {
            return None;
        }
        self.grads[id.0].as_ref()
    }

    /// Gradient for `id`, or zeros of the given shape when the parameter was
    /// not reached by the loss.
    pub fn get_or_zeros(&self, id: ValueId, shape: (usize, usize)) -> Matrix {
        match self.get(id) {
            Some(g) => g.clone(),
            None => Matrix::from_parts(shape.0, shape.1, vec![0.0; shape.0 * shape.1]),
        }
    }
}
