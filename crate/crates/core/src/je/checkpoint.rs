//! Binary checkpoints for the joint model.
//!
//! Layout, all integers little-endian u64 and all floats little-endian f64:
//!
//! ```text
//! b"JEMB1"  dim_img  dim_txt  hidden  joint_dim  margin
//! <image w1> <image b1> <image w2> <image b2>
//! <text  w1> <text  b1> <text  w2> <text  b2>
//! ```
//!
//! Matrix shapes follow from the dimensions, so only raw row-major data is
//! stored. Round-trips are bit-exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::binio::{expect_eof, read_f64, read_matrix_raw, read_u64, write_matrix_raw, write_u64};
use crate::error::{Error, Result};
use crate::je::model::{BranchParams, JointModel};

const MAGIC: &[u8; 5] = b"JEMB1";

pub fn write_model<W: Write>(model: &JointModel, writer: W) -> Result<()> {
    let mut w = BufWriter::new(writer);
    w.write_all(MAGIC)?;
    write_u64(&mut w, model.dim_img())?;
    write_u64(&mut w, model.dim_txt())?;
    write_u64(&mut w, model.hidden())?;
    write_u64(&mut w, model.joint_dim())?;
    w.write_all(&model.margin().to_le_bytes())?;
    for param in model.params() {
        write_matrix_raw(&mut w, param)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_model<R: Read>(reader: R) -> Result<JointModel> {
    let mut r = BufReader::new(reader);
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Schema(format!(
            "not a joint-model checkpoint (magic {:?})",
            String::from_utf8_lossy(&magic)
        )));
    }
    let dim_img = read_u64(&mut r)?;
    let dim_txt = read_u64(&mut r)?;
    let hidden = read_u64(&mut r)?;
    let joint = read_u64(&mut r)?;
    let margin = read_f64(&mut r)?;
    let mut branch = |input: usize| -> Result<BranchParams> {
        Ok(BranchParams {
            w1: read_matrix_raw(&mut r, input, hidden)?,
            b1: read_matrix_raw(&mut r, 1, hidden)?,
            w2: read_matrix_raw(&mut r, hidden, joint)?,
            b2: read_matrix_raw(&mut r, 1, joint)?,
        })
    };
    let image_branch = branch(dim_img)?;
    let text_branch = branch(dim_txt)?;
    expect_eof(&mut r)?;
    JointModel::from_parts(image_branch, text_branch, margin)
}

pub fn save_model(model: &JointModel, path: impl AsRef<Path>) -> Result<()> {
    write_model(model, File::create(path)?)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<JointModel> {
    read_model(File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::je::model::JeConfig;
    use crate::numeric::SeededRng;

    fn model() -> JointModel {
        let cfg = JeConfig { hidden: 5, joint_dim: 3, margin: 0.25 };
        JointModel::init(7, 4, cfg, &mut SeededRng::new(21)).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let m = model();
        let mut buf = Vec::new();
        write_model(&m, &mut buf).unwrap();
        let back = read_model(buf.as_slice()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn bad_magic_is_a_schema_error() {
        let err = read_model(&b"NOPE! whatever"[..]).unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
    }

    #[test]
    fn truncated_file_fails() {
        let m = model();
        let mut buf = Vec::new();
        write_model(&m, &mut buf).unwrap();
        buf.truncate(buf.len() - 9);
        assert!(read_model(buf.as_slice()).is_err());
    }

    #[test]
    fn trailing_bytes_fail() {
        let m = model();
        let mut buf = Vec::new();
        write_model(&m, &mut buf).unwrap();
        buf.push(0);
        assert!(matches!(read_model(buf.as_slice()), Err(Error::Schema(_))));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.jemb");
        let m = model();
        save_model(&m, &path).unwrap();
        assert_eq!(load_model(&path).unwrap(), m);
    }
}
