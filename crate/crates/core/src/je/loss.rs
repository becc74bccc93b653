//! Bidirectional in-batch triplet loss over a staged model.

use crate::error::{Error, Result};
use crate::je::model::{JointModel, StagedModel};
use crate::numeric::{HingeSkips, Matrix, Tape, ValueId};

/// Build the full loss graph on `tape`: both branch projections, the
/// similarity matrix and the hinge. Returns the scalar loss id.
pub(crate) fn stage_loss(
    tape: &mut Tape,
    staged: &StagedModel,
    images: &Matrix,
    texts: &Matrix,
    margin: f64,
    skips: HingeSkips,
) -> Result<ValueId> {
    let img_in = tape.input(images.clone());
    let txt_in = tape.input(texts.clone());
    let img_emb = staged.image.forward(tape, img_in)?;
    let txt_emb = staged.text.forward(tape, txt_in)?;
    let sims = tape.similarity(img_emb, txt_emb)?;
    tape.triplet_hinge(sims, margin, skips)
}

/// Evaluate the triplet loss of a batch without touching any gradients.
/// `images` and `texts` are aligned rows of raw features; `keys` are the
/// (image, text) key pairs behind those rows, used to skip hinge terms
/// whose "negative" is the positive under another name.
pub fn triplet_loss(
    model: &JointModel,
    images: &Matrix,
    texts: &Matrix,
    keys: &[(String, String)],
) -> Result<f64> {
    if images.rows() != texts.rows() || images.rows() != keys.len() {
        return Err(Error::Contract(format!(
            "batch misaligned: {} images, {} texts, {} key pairs",
            images.rows(),
            texts.rows(),
            keys.len()
        )));
    }
    let image_keys: Vec<&str> = keys.iter().map(|(i, _)| i.as_str()).collect();
    let text_keys: Vec<&str> = keys.iter().map(|(_, t)| t.as_str()).collect();
    let skips = HingeSkips::from_keys(&image_keys, &text_keys);
    let mut tape = Tape::new();
    let staged = StagedModel::stage(&mut tape, model);
    let loss = stage_loss(&mut tape, &staged, images, texts, model.margin(), skips)?;
    tape.value(loss).scalar_value()
}
