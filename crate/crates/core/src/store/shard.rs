use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"PBC1";
pub const HEADER_LEN: usize = 4 + 32 + 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShardHeader {
    pub manifest_hash: [u8; 32],
    /// 0-based node index.
    pub node: u16,
}

impl ShardHeader {
    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut out = [0; HEADER_LEN];
        out[..4].copy_from_slice(MAGIC);
        out[4..36].copy_from_slice(&self.manifest_hash);
        out[36..].copy_from_slice(&self.node.to_le_bytes());
        out
    }

    pub fn parse(bytes: &[u8]) -> Result<ShardHeader> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::format(format!(
                "shard header needs {HEADER_LEN} bytes, got {}",
                bytes.len()
            )));
        }
        if &bytes[..4] != MAGIC {
            return Err(Error::format("bad shard magic"));
        }
        let mut manifest_hash = [0; 32];
        manifest_hash.copy_from_slice(&bytes[4..36]);
        Ok(ShardHeader {
            manifest_hash,
            node: u16::from_le_bytes([bytes[36], bytes[37]]),
        })
    }
}

pub fn shard_name(node: usize) -> String {
    format!("shard_{:03}.pbc", node + 1)
}

/// Symbols to little-endian bytes of `width` each.
pub fn pack(symbols: &[u32], width: usize, out: &mut Vec<u8>) {
    for &s in symbols {
        out.extend_from_slice(&s.to_le_bytes()[..width]);
    }
}

pub fn unpack(bytes: &[u8], width: usize) -> Vec<u32> {
    bytes
        .chunks(width)
        .map(|c| c.iter().rev().fold(0u32, |acc, &b| (acc << 8) | b as u32))
        .collect()
}
