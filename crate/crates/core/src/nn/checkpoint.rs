//! Binary checkpoint format.
//!
//! ```text
//! offset  size  field
//! 0       5     magic "GLPW1"
//! 5       1     architecture tag (0 = GCN, 1 = SAGE)
//! 6       8     input_dim   (u64 LE)
//! 14      8     hidden_dim  (u64 LE)
//! 22      8     tensor count (u64 LE)
//! then per tensor, in layout order:
//!         8     rows (u64 LE)
//!         8     cols (u64 LE)
//!         8·r·c values (f64 LE, row-major)
//! ```
//!
//! Biases are `1 × width` tensors. Nothing follows the last tensor.

use std::fs;
use std::path::Path;

use ndarray::Array2;

use super::model::{Arch, LinkPredictor};
use super::params::Params;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 5] = b"GLPW1";

pub fn to_bytes(model: &LinkPredictor) -> Vec<u8> {
    let params = model.params();
    let mut out = Vec::with_capacity(30 + 8 * params.num_scalars() + 16 * params.len());
    out.extend_from_slice(MAGIC);
    out.push(model.arch().tag());
    for x in [model.input_dim(), model.hidden_dim(), params.len()] {
        out.extend_from_slice(&(x as u64).to_le_bytes());
    }
    for t in &params.0 {
        out.extend_from_slice(&(t.nrows() as u64).to_le_bytes());
        out.extend_from_slice(&(t.ncols() as u64).to_le_bytes());
        for x in t.iter() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::format("checkpoint", "truncated"))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::format("checkpoint", "size overflow"))
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<LinkPredictor> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(5)? != MAGIC {
        return Err(Error::format("checkpoint", "bad magic"));
    }
    let tag = r.take(1)?[0];
    let arch = Arch::from_tag(tag).ok_or_else(|| Error::format("checkpoint", format!("unknown arch tag {tag}")))?;
    let input_dim = r.usize()?;
    let hidden_dim = r.usize()?;
    let count = r.usize()?;
    if count > 64 {
        return Err(Error::format("checkpoint", format!("implausible tensor count {count}")));
    }
    let mut tensors = Vec::with_capacity(count);
    for _ in 0..count {
        let rows = r.usize()?;
        let cols = r.usize()?;
        let len = rows
            .checked_mul(cols)
            .filter(|l| l.checked_mul(8).is_some_and(|b| b <= bytes.len()))
            .ok_or_else(|| Error::format("checkpoint", "tensor size exceeds file"))?;
        let raw = r.take(len * 8)?;
        let data: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        tensors.push(Array2::from_shape_vec((rows, cols), data).expect("length checked"));
    }
    if r.pos != bytes.len() {
        return Err(Error::format("checkpoint", "trailing bytes"));
    }
    LinkPredictor::from_params(arch, input_dim, hidden_dim, Params(tensors))
}

pub fn save(model: &LinkPredictor, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_bytes(model)).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<LinkPredictor> {
    let path = path.as_ref();
    from_bytes(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn round_trip_is_bit_exact() {
        for arch in [Arch::Gcn, Arch::Sage] {
            let model = LinkPredictor::new(arch, 5, 7, &mut rng::seeded(3));
            let bytes = to_bytes(&model);
            assert_eq!(&bytes[..5], MAGIC);
            let back = from_bytes(&bytes).unwrap();
            assert_eq!(back, model);
            assert_eq!(to_bytes(&back), bytes);
        }
    }

    #[test]
    fn rejects_corruption() {
        let model = LinkPredictor::new(Arch::Gcn, 3, 4, &mut rng::seeded(1));
        let mut bytes = to_bytes(&model);
        assert!(from_bytes(&bytes[..bytes.len() - 1]).is_err());
        bytes[0] = b'X';
        assert!(from_bytes(&bytes).is_err());
    }
}
