//! Binary checkpoint for the trained classifier heads (all three tasks).
//!
//! Layout after the `b"JEMBH1"` magic, integers little-endian u64:
//!
//! ```text
//! task_a_classes  task_c_cards[0..4]
//! <task A stack>
//! has_trunk:u8 [<trunk stack>] <tower stack> x4     (task B)
//! has_trunk:u8 [<trunk stack>] <tower stack> x4     (task C)
//! ```
//!
//! where a stack is `layer_count` followed by shape-prefixed weight and
//! bias matrices per layer. Round-trips are bit-exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::binio::{expect_eof, read_matrix_shaped, read_u64, write_matrix_shaped, write_u64};
use crate::data::{LabelSchema, SUB_TASKS};
use crate::error::{Error, Result};
use crate::heads::mlp::MlpHead;
use crate::heads::mtl::{MtlModel, TaskMode};
use crate::heads::stack::DenseStack;
use crate::heads::HeadsBundle;

const MAGIC: &[u8; 6] = b"JEMBH1";

fn write_stack<W: Write>(w: &mut W, stack: &DenseStack) -> Result<()> {
    write_u64(w, stack.layers().len())?;
    for (weights, bias) in stack.layers() {
        write_matrix_shaped(w, weights)?;
        write_matrix_shaped(w, bias)?;
    }
    Ok(())
}

fn read_stack<R: Read>(r: &mut R) -> Result<DenseStack> {
    let count = read_u64(r)?;
    if count == 0 || count > 16 {
        return Err(Error::Schema(format!("implausible layer count {count}")));
    }
    let mut layers = Vec::with_capacity(count);
    for _ in 0..count {
        let weights = read_matrix_shaped(r)?;
        let bias = read_matrix_shaped(r)?;
        layers.push((weights, bias));
    }
    DenseStack::from_layers(layers)
}

fn write_mtl<W: Write>(w: &mut W, model: &MtlModel) -> Result<()> {
    w.write_all(&[u8::from(model.has_shared_trunk())])?;
    if let Some(trunk) = model.trunk() {
        write_stack(w, trunk)?;
    }
    for tower in model.towers() {
        write_stack(w, tower)?;
    }
    Ok(())
}

fn read_mtl<R: Read>(r: &mut R, mode: TaskMode, schema: LabelSchema) -> Result<MtlModel> {
    let mut flag = [0u8; 1];
    r.read_exact(&mut flag)?;
    let trunk = match flag[0] {
        0 => None,
        1 => Some(read_stack(r)?),
        other => return Err(Error::Schema(format!("bad trunk flag {other}"))),
    };
    let mut towers = Vec::with_capacity(SUB_TASKS);
    for _ in 0..SUB_TASKS {
        towers.push(read_stack(r)?);
    }
    MtlModel::from_parts(mode, schema, trunk, towers)
}

pub fn write_heads<W: Write>(bundle: &HeadsBundle, writer: W) -> Result<()> {
    bundle.validate()?;
    let mut w = BufWriter::new(writer);
    w.write_all(MAGIC)?;
    let schema = bundle.task_b.schema();
    write_u64(&mut w, schema.task_a_classes)?;
    for card in schema.task_c_cards {
        write_u64(&mut w, card)?;
    }
    write_stack(&mut w, bundle.task_a.stack())?;
    write_mtl(&mut w, &bundle.task_b)?;
    write_mtl(&mut w, &bundle.task_c)?;
    w.flush()?;
    Ok(())
}

pub fn read_heads<R: Read>(reader: R) -> Result<HeadsBundle> {
    let mut r = BufReader::new(reader);
    let mut magic = [0u8; 6];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Schema(format!(
            "not a heads checkpoint (magic {:?})",
            String::from_utf8_lossy(&magic)
        )));
    }
    let task_a_classes = read_u64(&mut r)?;
    let mut task_c_cards = [0usize; SUB_TASKS];
    for card in &mut task_c_cards {
        *card = read_u64(&mut r)?;
    }
    let schema = LabelSchema { task_a_classes, task_c_cards };
    schema.validate().map_err(|e| Error::Schema(e.to_string()))?;
    let task_a = MlpHead::from_stack(read_stack(&mut r)?)?;
    if task_a.classes() != task_a_classes {
        return Err(Error::Schema(format!(
            "task A head emits {} classes, schema says {task_a_classes}",
            task_a.classes()
        )));
    }
    let task_b = read_mtl(&mut r, TaskMode::B, schema)?;
    let task_c = read_mtl(&mut r, TaskMode::C, schema)?;
    expect_eof(&mut r)?;
    let bundle = HeadsBundle { task_a, task_b, task_c };
    bundle.validate()?;
    Ok(bundle)
}

pub fn save_heads(bundle: &HeadsBundle, path: impl AsRef<Path>) -> Result<()> {
    write_heads(bundle, File::create(path)?)
}

pub fn load_heads(path: impl AsRef<Path>) -> Result<HeadsBundle> {
    read_heads(File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heads::mlp::MlpConfig;
    use crate::heads::mtl::MtlConfig;
    use crate::numeric::SeededRng;

    fn bundle() -> HeadsBundle {
        let mut rng = SeededRng::new(17);
        let schema = LabelSchema::default();
        let cfg = MtlConfig { hidden1: 6, hidden2: 4, shared_trunk: false };
        let shared = MtlConfig { shared_trunk: true, ..cfg };
        HeadsBundle {
            task_a: MlpHead::init(8, 3, MlpConfig { hidden1: 6, hidden2: 4 }, &mut rng).unwrap(),
            task_b: MtlModel::init(8, TaskMode::B, schema, cfg, &mut rng).unwrap(),
            task_c: MtlModel::init(8, TaskMode::C, schema, shared, &mut rng).unwrap(),
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let b = bundle();
        let mut buf = Vec::new();
        write_heads(&b, &mut buf).unwrap();
        let back = read_heads(buf.as_slice()).unwrap();
        assert_eq!(b, back);
    }

    #[test]
    fn magic_is_checked() {
        let mut buf = Vec::new();
        write_heads(&bundle(), &mut buf).unwrap();
        buf[0] = b'X';
        assert!(matches!(read_heads(buf.as_slice()), Err(Error::Schema(_))));
    }

    #[test]
    fn truncation_fails() {
        let mut buf = Vec::new();
        write_heads(&bundle(), &mut buf).unwrap();
        buf.truncate(buf.len() / 2);
        assert!(read_heads(buf.as_slice()).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("heads.jembh");
        let b = bundle();
        save_heads(&b, &path).unwrap();
        assert_eq!(load_heads(&path).unwrap(), b);
    }
}
