//! Binary weight container.
//!
//! Little-endian layout:
//!
//! ```text
//! "MDNW"                     4 bytes magic
//! version                    u32 (= 1)
//! config hash                32 bytes, SHA-256 of the NetworkConfig JSON
//! tensor count               u32
//! per tensor:
//!   name length              u32
//!   name                     UTF-8 bytes
//!   rank                     u32
//!   dims                     rank × u64
//!   values                   product(dims) × f64
//! ```

use crate::error::{Error, Result};
use crate::tensor::Tensor;

use super::config::NetworkConfig;
use super::model::NetworkModel;

pub const WEIGHTS_MAGIC: &[u8; 4] = b"MDNW";
pub const WEIGHTS_VERSION: u32 = 1;

pub fn save_weights(model: &NetworkModel) -> Vec<u8> {
    let params = model.params();
    let mut out = Vec::with_capacity(48 + params.num_scalars() * 8);
    out.extend_from_slice(WEIGHTS_MAGIC);
    out.extend_from_slice(&WEIGHTS_VERSION.to_le_bytes());
    out.extend_from_slice(&model.config().hash());
    out.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for (name, p) in params.iter() {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(p.value.rank() as u32).to_le_bytes());
        for &d in p.value.shape() {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for v in p.value.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

/// Parses a weight file and checks it against `config`. All loaded
/// parameters are trainable.
pub fn load_weights(bytes: &[u8], config: &NetworkConfig) -> Result<NetworkModel> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != WEIGHTS_MAGIC {
        return Err(Error::Format("bad magic, expected MDNW".into()));
    }
    let version = r.u32()?;
    if version != WEIGHTS_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let hash = r.take(32)?;
    if hash != config.hash() {
        return Err(Error::Compatibility(format!(
            "file was written for config {}, expected {}",
            hex::encode(hash),
            config.hash_hex()
        )));
    }
    let mut model = NetworkModel::zeroed(config)?;
    let count = r.u32()? as usize;
    if count != model.params().len() {
        return Err(Error::Compatibility(format!(
            "file holds {count} tensors, network has {}",
            model.params().len()
        )));
    }
    let expected: Vec<String> = model.params().names().map(str::to_string).collect();
    for want in expected {
        let len = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(len)?)
            .map_err(|_| Error::Format("tensor name is not UTF-8".into()))?;
        if name != want {
            return Err(Error::Compatibility(format!("found tensor `{name}`, expected `{want}`")));
        }
        let rank = r.u32()? as usize;
        let dims = (0..rank)
            .map(|_| r.u64().map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        let slot = model.params_mut().get_mut(&want).expect("listed");
        if dims != slot.value.shape() {
            return Err(Error::Compatibility(format!(
                "`{want}` has shape {dims:?}, expected {:?}",
                slot.value.shape()
            )));
        }
        let n: usize = dims.iter().product();
        let raw = r.take(n * 8)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        slot.value = Tensor::new(&dims, data)?;
    }
    if r.pos != bytes.len() {
        return Err(Error::Format(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn round_trip_is_byte_identical() {
        let cfg = NetworkConfig::desk();
        let m = NetworkModel::build(&cfg, &mut Rng::new(4)).unwrap();
        let bytes = save_weights(&m);
        assert_eq!(&bytes[..4], b"MDNW");
        assert_eq!(&bytes[4..8], &[1, 0, 0, 0]);
        let again = save_weights(&load_weights(&bytes, &cfg).unwrap());
        assert_eq!(bytes, again);
    }

    #[test]
    fn mismatched_classes_rejected() {
        let cfg = NetworkConfig::desk();
        let bytes = save_weights(&NetworkModel::build(&cfg, &mut Rng::new(4)).unwrap());
        let other = NetworkConfig {
            num_classes: 4,
            ..cfg
        };
        assert!(matches!(
            load_weights(&bytes, &other),
            Err(Error::Compatibility(_))
        ));
    }

    #[test]
    fn corrupt_files_rejected() {
        let cfg = NetworkConfig::desk();
        let mut bytes = save_weights(&NetworkModel::build(&cfg, &mut Rng::new(4)).unwrap());
        assert!(matches!(load_weights(&bytes[..100], &cfg), Err(Error::Format(_))));
        let mut v2 = bytes.clone();
        v2[4] = 2;
        assert!(matches!(load_weights(&v2, &cfg), Err(Error::Format(_))));
        bytes[0] = b'X';
        assert!(matches!(load_weights(&bytes, &cfg), Err(Error::Format(_))));
    }
}
