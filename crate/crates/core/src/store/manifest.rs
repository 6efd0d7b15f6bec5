use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::algebra::FieldSpec;
use crate::designs::{CodeParams, DesignId};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

/// Everything needed to rebuild the code and check the shards.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: u32,
    pub design: String,
    pub field: String,
    pub n: usize,
    pub k: usize,
    pub alpha: usize,
    pub m: usize,
    pub file_len: u64,
    pub stripes: u64,
    /// CRC-32 of each shard's payload, by node.
    pub checksums: Vec<u32>,
    pub seed: u64,
}

/// Bytes per stored symbol for the fields the store supports.
pub fn symbol_bytes(field: FieldSpec) -> Result<usize> {
    match field {
        FieldSpec::Binary { w: 8 } => Ok(1),
        FieldSpec::Binary { w: 16 } => Ok(2),
        other => Err(Error::params(format!("shards need GF(2^8) or GF(2^16), got {other}"))),
    }
}

/// Stripes needed for `file_len` bytes; at least one so every shard has a payload.
pub fn stripe_count(file_len: u64, k: usize, alpha: usize, width: usize) -> u64 {
    let per = (k * alpha * width) as u64;
    file_len.div_ceil(per).max(1)
}

impl Manifest {
    pub fn params(&self) -> Result<CodeParams> {
        Ok(CodeParams {
            design: self.design.parse::<DesignId>()?,
            field: self.field.parse::<FieldSpec>()?,
            n: self.n,
            k: self.k,
            m: self.m,
            seed: self.seed,
        })
    }

    pub fn symbol_bytes(&self) -> Result<usize> {
        symbol_bytes(self.field.parse()?)
    }

    /// Payload bytes in each shard.
    pub fn payload_len(&self) -> Result<u64> {
        Ok(self.stripes * (self.alpha * self.symbol_bytes()?) as u64)
    }

    /// Hash of the fields that determine the code and the layout.
    pub fn identity_hash(&self) -> [u8; 32] {
        let text = format!(
            "v{} {} {} n{} k{} a{} m{} len{} s{} seed{}",
            self.version,
            self.design,
            self.field,
            self.n,
            self.k,
            self.alpha,
            self.m,
            self.file_len,
            self.stripes,
            self.seed
        );
        Sha256::digest(text.as_bytes()).into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    /// Parse and check internal consistency; does not build the code.
    pub fn parse(text: &str) -> Result<Manifest> {
        let m: Manifest = serde_json::from_str(text).map_err(|e| Error::format(format!("manifest: {e}")))?;
        m.check()?;
        Ok(m)
    }

    fn check(&self) -> Result<()> {
        if self.version != FORMAT_VERSION {
            return Err(Error::format(format!("unsupported manifest version {}", self.version)));
        }
        let p = self.params()?;
        let width = symbol_bytes(p.field)?;
        if self.k == 0 || self.n <= self.k || self.n > u16::MAX as usize || self.alpha == 0 || self.m == 0 {
            return Err(Error::format("manifest has impossible code dimensions"));
        }
        if self.checksums.len() != self.n {
            return Err(Error::format(format!(
                "manifest lists {} checksums for {} shards",
                self.checksums.len(),
                self.n
            )));
        }
        let want = self
            .k
            .checked_mul(self.alpha)
            .and_then(|v| v.checked_mul(width))
            .map(|per| self.file_len.div_ceil(per as u64).max(1));
        if want != Some(self.stripes) {
            return Err(Error::format("stripe count does not match file length"));
        }
        Ok(())
    }
}
