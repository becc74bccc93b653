//! Forward kernels for the closed primitive set.
//!
//! Every layer the crate trains is composed from these functions. The tape in
//! [`super::tape`] records them and owns the matching backward rules, so the
//! forward math lives in exactly one place.

use crate::error::{Error, Result};
use crate::numeric::matrix::Matrix;

/// Row Euclidean norms below this are treated as degenerate.
pub const NORM_EPS: f64 = 1e-12;

/// `x @ w + b` with `b` broadcast over rows. `x: n x k`, `w: k x m`, `b: 1 x m`.
pub fn dense_affine(x: &Matrix, w: &Matrix, b: &Matrix) -> Result<Matrix> {
    if x.cols() != w.rows() {
        return Err(Error::dimension(
            "dense_affine",
            format!("x is {}x{} but w is {}x{}", x.rows(), x.cols(), w.rows(), w.cols()),
        ));
    }
    if b.rows() != 1 || b.cols() != w.cols() {
        return Err(Error::dimension(
            "dense_affine",
            format!("bias is {}x{} but w is {}x{}", b.rows(), b.cols(), w.rows(), w.cols()),
        ));
    }
    let (n, k, m) = (x.rows(), x.cols(), w.cols());
    let mut out = vec![0.0; n * m];
    for i in 0..n {
        let xrow = x.row(i);
        let orow = &mut out[i * m..(i + 1) * m];
        orow.copy_from_slice(b.data());
        for (p, &xv) in xrow.iter().enumerate().take(k) {
            if xv == 0.0 {
                continue;
            }
            let wrow = w.row(p);
            for j in 0..m {
                orow[j] += xv * wrow[j];
            }
        }
    }
    Ok(Matrix::from_parts(n, m, out))
}

/// Plain matrix product `a @ b`.
pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols() != b.rows() {
        return Err(Error::dimension(
            "matmul",
            format!("a is {}x{} but b is {}x{}", a.rows(), a.cols(), b.rows(), b.cols()),
        ));
    }
    let (n, k, m) = (a.rows(), a.cols(), b.cols());
    let mut out = vec![0.0; n * m];
    for i in 0..n {
        let arow = a.row(i);
        let orow = &mut out[i * m..(i + 1) * m];
        for (p, &av) in arow.iter().enumerate().take(k) {
            if av == 0.0 {
                continue;
            }
            let brow = b.row(p);
            for j in 0..m {
                orow[j] += av * brow[j];
            }
        }
    }
    Ok(Matrix::from_parts(n, m, out))
}

/// `a @ b^T`. `a: n x d`, `b: m x d` -> `n x m`.
pub fn matmul_nt(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols() != b.cols() {
        return Err(Error::dimension(
            "matmul_nt",
            format!("a is {}x{} but b is {}x{}", a.rows(), a.cols(), b.rows(), b.cols()),
        ));
    }
    let (n, m) = (a.rows(), b.rows());
    let mut out = vec![0.0; n * m];
    for i in 0..n {
        for j in 0..m {
            out[i * m + j] = dot(a.row(i), b.row(j));
        }
    }
    Ok(Matrix::from_parts(n, m, out))
}

/// `a^T @ b`. `a: n x k`, `b: n x m` -> `k x m`.
pub fn matmul_tn(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.rows() != b.rows() {
        return Err(Error::dimension(
            "matmul_tn",
            format!("a is {}x{} but b is {}x{}", a.rows(), a.cols(), b.rows(), b.cols()),
        ));
    }
    let (n, k, m) = (a.rows(), a.cols(), b.cols());
    let mut out = vec![0.0; k * m];
    for i in 0..n {
        let arow = a.row(i);
        let brow = b.row(i);
        for (p, &av) in arow.iter().enumerate().take(k) {
            if av == 0.0 {
                continue;
            }
            let orow = &mut out[p * m..(p + 1) * m];
            for j in 0..m {
                orow[j] += av * brow[j];
            }
        }
    }
    Ok(Matrix::from_parts(k, m, out))
}

/// Sum over rows -> `1 x m`.
pub fn column_sums(x: &Matrix) -> Matrix {
    let m = x.cols();
    let mut out = vec![0.0; m];
    for row in x.iter_rows() {
        for (o, v) in out.iter_mut().zip(row) {
            *o += v;
        }
    }
    Matrix::from_parts(1, m, out)
}

/// Elementwise `max(0, x)`. The subgradient at 0 is 0 (see the tape).
pub fn relu(x: &Matrix) -> Matrix {
    let data = x.data().iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect();
    Matrix::from_parts(x.rows(), x.cols(), data)
}

/// Divide each row by its Euclidean norm. Rows with norm <= `NORM_EPS` error.
pub fn l2_normalize(x: &Matrix) -> Result<Matrix> {
    let mut data = Vec::with_capacity(x.rows() * x.cols());
    for (r, row) in x.iter_rows().enumerate() {
        let norm = dot(row, row).sqrt();
        if norm <= NORM_EPS {
            return Err(Error::DegenerateVector { row: r });
        }
        data.extend(row.iter().map(|v| v / norm));
    }
    Ok(Matrix::from_parts(x.rows(), x.cols(), data))
}

pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Cosine similarity of two unit rows is their dot product.
pub fn similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::dimension(
            "similarity",
            format!("rows have lengths {} and {}", u.len(), v.len()),
        ));
    }
    Ok(dot(u, v))
}

/// All pairwise similarities of unit rows: `S[i][j] = a_i . b_j`.
pub fn similarity_matrix(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    matmul_nt(a, b)
}

/// Mean negative log-likelihood under row-wise softmax, plus the probabilities.
///
/// Computed with max-subtraction; probability rows sum to 1 within 1e-9.
pub fn softmax_cross_entropy(logits: &Matrix, gold: &[usize]) -> Result<(f64, Matrix)> {
    let (n, classes) = logits.shape();
    if classes < 2 {
        return Err(Error::Contract(format!(
            "softmax needs at least 2 classes, got {classes}"
        )));
    }
    if gold.len() != n {
        return Err(Error::Label(format!(
            "{} gold labels for {} logit rows",
            gold.len(),
            n
        )));
    }
    if let Some(&bad) = gold.iter().find(|&&g| g >= classes) {
        return Err(Error::Label(format!(
            "gold index {bad} out of range for {classes} classes"
        )));
    }
    let mut probs = Vec::with_capacity(n * classes);
    let mut loss = 0.0;
    for (row, &g) in logits.iter_rows().zip(gold) {
        let max = row.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let mut denom = 0.0;
        for &z in row {
            denom += (z - max).exp();
        }
        let log_denom = denom.ln();
        loss += log_denom - (row[g] - max);
        probs.extend(row.iter().map(|&z| (z - max).exp() / denom));
    }
    Ok((loss / n as f64, Matrix::from_parts(n, classes, probs)))
}

/// Mean binary cross-entropy of a single-logit column against 0/1 golds.
///
/// Uses the log-space-stable form `max(z,0) - z*y + ln(1 + e^{-|z|})`.
pub fn sigmoid_cross_entropy(logits: &Matrix, gold: &[u8]) -> Result<f64> {
    if logits.cols() != 1 {
        return Err(Error::dimension(
            "sigmoid_cross_entropy",
            format!("expected an n x 1 logit column, got {}x{}", logits.rows(), logits.cols()),
        ));
    }
    if gold.len() != logits.rows() {
        return Err(Error::Label(format!(
            "{} gold labels for {} logits",
            gold.len(),
            logits.rows()
        )));
    }
    if let Some(&bad) = gold.iter().find(|&&y| y > 1) {
        return Err(Error::Label(format!("binary gold must be 0 or 1, got {bad}")));
    }
    let mut loss = 0.0;
    for (&z, &y) in logits.data().iter().zip(gold) {
        loss += z.max(0.0) - z * f64::from(y) + (-z.abs()).exp().ln_1p();
    }
    Ok(loss / logits.rows() as f64)
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Hinge terms to exclude from the bidirectional triplet loss.
///
/// When a batch carries duplicate keys, some hinge terms compare a positive
/// similarity against a structurally identical copy of itself and contribute
/// a constant `margin` with contradictory gradients. Those terms are skipped:
/// the image-anchored term for pair `(i, j)` when the two text keys coincide,
/// and the text-anchored term when the two image keys coincide.
#[derive(Debug, Clone)]
pub struct HingeSkips {
    size: usize,
    img_anchor: Vec<bool>,
    txt_anchor: Vec<bool>,
}

impl HingeSkips {
    /// No exclusions; every off-diagonal term participates.
    pub fn none(size: usize) -> Self {
        Self {
            size,
            img_anchor: vec![false; size * size],
            txt_anchor: vec![false; size * size],
        }
    }

    /// Build skip masks from the per-pair image and text keys.
    pub fn from_keys<S: AsRef<str>>(image_keys: &[S], text_keys: &[S]) -> Self {
        let size = image_keys.len();
        debug_assert_eq!(size, text_keys.len());
        let mut skips = Self::none(size);
        for i in 0..size {
            for j in 0..size {
                if i == j {
                    continue;
                }
                if text_keys[i].as_ref() == text_keys[j].as_ref() {
                    skips.img_anchor[i * size + j] = true;
                }
                if image_keys[i].as_ref() == image_keys[j].as_ref() {
                    skips.txt_anchor[i * size + j] = true;
                }
            }
        }
        skips
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Skip `max(0, m - s_ii + s_ij)` (text j as negative for image i)?
    pub fn skip_img_anchor(&self, i: usize, j: usize) -> bool {
        self.img_anchor[i * self.size + j]
    }

    /// Skip `max(0, m - s_ii + s_ji)` (image j as negative for text i)?
    pub fn skip_txt_anchor(&self, i: usize, j: usize) -> bool {
        self.txt_anchor[i * self.size + j]
    }
}

/// Bidirectional in-batch triplet hinge over a square similarity matrix.
///
/// With `s(i, j)` the similarity of image `i` and text `j`:
///
/// ```text
/// loss = (1 / (B (B - 1))) * sum_{i != j} [ max(0, m - s(i,i) + s(i,j))
///                                         + max(0, m - s(i,i) + s(j,i)) ]
/// ```
///
/// Terms flagged by `skips` are left out of the sum; the normalizer stays
/// `B (B - 1)`.
pub fn triplet_hinge_from_sims(sims: &Matrix, margin: f64, skips: &HingeSkips) -> Result<f64> {
    let b = sims.rows();
    if sims.cols() != b {
        return Err(Error::dimension(
            "triplet_hinge",
            format!("similarity matrix must be square, got {}x{}", b, sims.cols()),
        ));
    }
    if b < 2 {
        return Err(Error::Config(format!(
            "triplet loss needs a batch of at least 2 pairs, got {b}"
        )));
    }
    if skips.size() != b {
        return Err(Error::Contract(format!(
            "skip mask is for batch {} but similarity matrix is {b}x{b}",
            skips.size()
        )));
    }
    let mut total = 0.0;
    for i in 0..b {
        let s_ii = sims.get(i, i);
        for j in 0..b {
            if i == j {
                continue;
            }
            if !skips.skip_img_anchor(i, j) {
                total += (margin - s_ii + sims.get(i, j)).max(0.0);
            }
            if !skips.skip_txt_anchor(i, j) {
                total += (margin - s_ii + sims.get(j, i)).max(0.0);
            }
        }
    }
    Ok(total / (b as f64 * (b as f64 - 1.0)))
}
