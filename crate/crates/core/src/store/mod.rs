//! Shard store: a manifest plus one file per node.
//!
//! Each stripe holds `k * alpha` symbols of the input; systematic shard `i`
//! receives symbols `i * alpha .. (i + 1) * alpha` of every stripe.

mod manifest;
mod shard;

pub use manifest::{stripe_count, symbol_bytes, Manifest, FORMAT_VERSION};
pub use shard::{shard_name, ShardHeader, HEADER_LEN, MAGIC};

use std::fs::{self, File};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use tempfile::NamedTempFile;

use crate::algebra::rational::{ratio, Ratio};
use crate::algebra::Mat;
use crate::designs::{build, Built, CodeParams};
use crate::engine::RepairPlan;
use crate::error::{Error, Result};
use crate::framework::LinearCode;

pub const MANIFEST_NAME: &str = "manifest.json";

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Message coordinate of the `j`-th data symbol of a stripe.
fn data_coord(j: usize, k: usize, alpha: usize) -> usize {
    (j % alpha) * k + j / alpha
}

/// Encode `data` into `dir`, creating it if needed.
pub fn encode_bytes(data: &[u8], dir: &Path, params: &CodeParams) -> Result<Manifest> {
    let width = symbol_bytes(params.field)?;
    let built = build(params)?;
    let code = built.code();
    let (n, k, alpha) = (code.n(), code.k(), code.alpha());
    let stripes = stripe_count(data.len() as u64, k, alpha, width);
    let per = k * alpha * width;

    let encoded: Vec<Vec<Vec<u32>>> = (0..stripes as usize)
        .into_par_iter()
        .map(|st| {
            let lo = (st * per).min(data.len());
            let hi = ((st + 1) * per).min(data.len());
            let mut chunk = data[lo..hi].to_vec();
            chunk.resize(per, 0);
            let symbols = shard::unpack(&chunk, width);
            let mut msg = vec![0; k * alpha];
            for (j, &s) in symbols.iter().enumerate() {
                msg[data_coord(j, k, alpha)] = s;
            }
            code.encode(&msg)
        })
        .collect::<Result<_>>()?;

    let mut payloads = vec![Vec::with_capacity(stripes as usize * alpha * width); n];
    for stripe in &encoded {
        for (node, symbols) in stripe.iter().enumerate() {
            shard::pack(symbols, width, &mut payloads[node]);
        }
    }
    let manifest = Manifest {
        version: FORMAT_VERSION,
        design: params.design.name().into(),
        field: params.field.to_string(),
        n,
        k,
        alpha,
        m: params.m,
        file_len: data.len() as u64,
        stripes,
        checksums: payloads.iter().map(|p| crc32fast::hash(p)).collect(),
        seed: params.seed,
    };
    fs::create_dir_all(dir)?;
    let hash = manifest.identity_hash();
    payloads.par_iter().enumerate().try_for_each(|(node, payload)| {
        let header = ShardHeader {
            manifest_hash: hash,
            node: node as u16,
        };
        let mut bytes = header.to_bytes().to_vec();
        bytes.extend_from_slice(payload);
        write_atomic(&dir.join(shard_name(node)), &bytes)
    })?;
    write_atomic(&dir.join(MANIFEST_NAME), manifest.to_json().as_bytes())?;
    Ok(manifest)
}

pub fn encode_file(input: &Path, dir: &Path, params: &CodeParams) -> Result<Manifest> {
    encode_bytes(&fs::read(input)?, dir, params)
}

/// Manifest and the code it describes.
pub struct Store {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub built: Built,
    width: usize,
}

impl Store {
    pub fn open(dir: &Path) -> Result<Store> {
        let text = fs::read_to_string(dir.join(MANIFEST_NAME))?;
        let manifest = Manifest::parse(&text)?;
        let built = build(&manifest.params()?)?;
        let code = built.code();
        if code.n() != manifest.n || code.k() != manifest.k || code.alpha() != manifest.alpha {
            return Err(Error::Integrity(
                "manifest parameters do not rebuild the same code".into(),
            ));
        }
        let width = manifest.symbol_bytes()?;
        Ok(Store {
            dir: dir.to_path_buf(),
            manifest,
            built,
            width,
        })
    }

    pub fn code(&self) -> &LinearCode {
        self.built.code()
    }

    pub fn shard_path(&self, node: usize) -> PathBuf {
        self.dir.join(shard_name(node))
    }

    fn check_header(&self, node: usize, bytes: &[u8]) -> Result<()> {
        let h = ShardHeader::parse(bytes).map_err(|e| Error::Integrity(format!("shard {}: {e}", node + 1)))?;
        if h.manifest_hash != self.manifest.identity_hash() || h.node as usize != node {
            return Err(Error::Integrity(format!(
                "shard {} does not belong to this manifest",
                node + 1
            )));
        }
        Ok(())
    }

    /// Whole payload of `node`, checked against its header, length and CRC.
    pub fn read_shard(&self, node: usize) -> Result<Vec<u32>> {
        let bytes = fs::read(self.shard_path(node))?;
        self.check_header(node, &bytes)?;
        let payload = &bytes[HEADER_LEN..];
        if payload.len() as u64 != self.manifest.payload_len()? {
            return Err(Error::Integrity(format!("shard {} has the wrong length", node + 1)));
        }
        if crc32fast::hash(payload) != self.manifest.checksums[node] {
            return Err(Error::Integrity(format!("shard {} fails its checksum", node + 1)));
        }
        Ok(shard::unpack(payload, self.width))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RepairReport {
    pub lost: usize,
    /// Payload bytes read from each node.
    pub bytes_per_node: Vec<u64>,
    pub header_bytes: u64,
    pub payload_bytes: u64,
    /// Payload bytes read over the stored message size.
    pub fraction: Ratio,
    /// Plan cost over `alpha * k`.
    pub plan_fraction: Ratio,
}

/// Contiguous runs of sorted substripes.
fn runs(subs: &[usize]) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for &s in subs {
        match out.last_mut() {
            Some((start, len)) if *start + *len == s => *len += 1,
            _ => out.push((s, 1)),
        }
    }
    out
}

/// Rebuild shard `lost` reading only the symbols its plan names.
pub fn repair(dir: &Path, lost: usize) -> Result<RepairReport> {
    let store = Store::open(dir)?;
    let code = store.code();
    let (n, k, alpha, width) = (code.n(), code.k(), code.alpha(), store.width);
    if lost >= n {
        return Err(Error::IndexOutOfRange {
            what: "node",
            index: lost,
            limit: n,
        });
    }
    let plan: RepairPlan = store.built.design.repair_plan(lost)?;
    let stripes = store.manifest.stripes as usize;

    // values[node][stripe * alpha + s] for the substripes the plan reads
    let mut values = vec![Vec::new(); n];
    let mut bytes_per_node = vec![0u64; n];
    let mut header_bytes = 0u64;
    for node in plan.nodes() {
        let mut subs: Vec<usize> = plan.reads.iter().filter(|r| r.0 == node).map(|r| r.1).collect();
        subs.sort_unstable();
        let path = store.shard_path(node);
        let mut file = File::open(&path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::Insufficient(format!("repair needs missing shard {}", node + 1)),
            _ => Error::Io(e),
        })?;
        let mut header = [0u8; HEADER_LEN];
        file.read_exact(&mut header)
            .map_err(|_| Error::Integrity(format!("shard {} is truncated", node + 1)))?;
        header_bytes += HEADER_LEN as u64;
        store.check_header(node, &header)?;
        let mut vals = vec![0u32; stripes * alpha];
        let mut buf = Vec::new();
        for stripe in 0..stripes {
            for (start, len) in runs(&subs) {
                let off = HEADER_LEN + (stripe * alpha + start) * width;
                file.seek(SeekFrom::Start(off as u64))?;
                buf.resize(len * width, 0);
                file.read_exact(&mut buf)
                    .map_err(|_| Error::Integrity(format!("shard {} is truncated", node + 1)))?;
                bytes_per_node[node] += buf.len() as u64;
                for (i, v) in shard::unpack(&buf, width).into_iter().enumerate() {
                    vals[stripe * alpha + start + i] = v;
                }
            }
        }
        values[node] = vals;
    }

    let rebuilt: Vec<Vec<u32>> = (0..stripes)
        .into_par_iter()
        .map(|st| {
            let read: Vec<u32> = plan.reads.iter().map(|&(h, s)| values[h][st * alpha + s]).collect();
            plan.apply(&read)
        })
        .collect::<Result<_>>()?;
    let mut payload = Vec::with_capacity(stripes * alpha * width);
    for symbols in &rebuilt {
        shard::pack(symbols, width, &mut payload);
    }
    if crc32fast::hash(&payload) != store.manifest.checksums[lost] {
        return Err(Error::Integrity(format!(
            "rebuilt shard {} fails its checksum; a helper shard is corrupt",
            lost + 1
        )));
    }
    let header = ShardHeader {
        manifest_hash: store.manifest.identity_hash(),
        node: lost as u16,
    };
    let mut bytes = header.to_bytes().to_vec();
    bytes.extend_from_slice(&payload);
    write_atomic(&store.shard_path(lost), &bytes)?;

    let payload_bytes: u64 = bytes_per_node.iter().sum();
    let message_bytes = (stripes * k * alpha * width) as u64;
    Ok(RepairReport {
        lost,
        bytes_per_node,
        header_bytes,
        payload_bytes,
        fraction: ratio(payload_bytes as i64, message_bytes as i64),
        plan_fraction: ratio(plan.cost() as i64, (alpha * k) as i64),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodeReport {
    pub data: Vec<u8>,
    /// 0-based nodes used.
    pub used: Vec<usize>,
    /// Shards present but rejected, with the reason.
    pub rejected: Vec<(usize, String)>,
}

/// Recover the original bytes from any `k` intact shards.
pub fn decode(dir: &Path) -> Result<DecodeReport> {
    let store = Store::open(dir)?;
    let code = store.code();
    let (n, k, alpha, width) = (code.n(), code.k(), code.alpha(), store.width);
    let mut used = Vec::new();
    let mut shards = Vec::new();
    let mut rejected = Vec::new();
    for node in 0..n {
        if used.len() == k {
            break;
        }
        match store.read_shard(node) {
            Ok(v) => {
                used.push(node);
                shards.push(v);
            }
            Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => rejected.push((node, e.to_string())),
        }
    }
    if used.len() < k {
        return Err(Error::Insufficient(format!("{} intact shards, need {k}", used.len())));
    }
    let x: Mat = code.decode_matrix(&used)?;
    let stripes = store.manifest.stripes as usize;
    let chunks: Vec<Vec<u8>> = (0..stripes)
        .into_par_iter()
        .map(|st| {
            let vals: Vec<u32> = shards
                .iter()
                .flat_map(|s| s[st * alpha..(st + 1) * alpha].iter().copied())
                .collect();
            let msg = x.mul_vec(&vals)?;
            let symbols: Vec<u32> = (0..k * alpha).map(|j| msg[data_coord(j, k, alpha)]).collect();
            let mut out = Vec::with_capacity(k * alpha * width);
            shard::pack(&symbols, width, &mut out);
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut data = chunks.concat();
    data.truncate(store.manifest.file_len as usize);
    Ok(DecodeReport { data, used, rejected })
}

pub fn decode_to_file(dir: &Path, out: &Path) -> Result<DecodeReport> {
    let report = decode(dir)?;
    write_atomic(out, &report.data)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designs::DesignId;

    #[test]
    fn run_grouping() {
        assert_eq!(runs(&[0, 1, 2, 5, 7, 8]), vec![(0, 3), (5, 1), (7, 2)]);
        assert!(runs(&[]).is_empty());
    }

    #[test]
    fn systematic_shards_hold_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let data: Vec<u8> = (0..16).collect();
        let m = encode_bytes(&data, dir.path(), &CodeParams::new(DesignId::D1, 6, 4)).unwrap();
        assert_eq!(m.stripes, 2);
        let s1 = fs::read(dir.path().join("shard_001.pbc")).unwrap();
        assert_eq!(&s1[HEADER_LEN..], &[0, 1, 8, 9]);
    }

    #[test]
    fn round_trip_small() {
        let dir = tempfile::tempdir().unwrap();
        let data: Vec<u8> = (0..1000u32).map(|i| (i * 7 % 251) as u8).collect();
        encode_bytes(&data, dir.path(), &CodeParams::new(DesignId::D1, 6, 4)).unwrap();
        fs::remove_file(dir.path().join("shard_001.pbc")).unwrap();
        let rep = repair(dir.path(), 0).unwrap();
        assert_eq!(rep.fraction, ratio(3, 4));
        assert_eq!(rep.fraction, rep.plan_fraction);
        fs::remove_file(dir.path().join("shard_002.pbc")).unwrap();
        fs::remove_file(dir.path().join("shard_003.pbc")).unwrap();
        assert_eq!(decode(dir.path()).unwrap().data, data);
        fs::remove_file(dir.path().join("shard_004.pbc")).unwrap();
        assert!(matches!(decode(dir.path()), Err(Error::Insufficient(_))));
    }

    #[test]
    fn gf65536_and_odd_length() {
        let dir = tempfile::tempdir().unwrap();
        let data: Vec<u8> = (0..777u32).map(|i| (i % 256) as u8).collect();
        let mut p = CodeParams::new(DesignId::D2, 7, 4);
        p.field = "GF(2^16)".parse().unwrap();
        encode_bytes(&data, dir.path(), &p).unwrap();
        fs::remove_file(dir.path().join("shard_002.pbc")).unwrap();
        repair(dir.path(), 1).unwrap();
        assert_eq!(decode(dir.path()).unwrap().data, data);
    }

    #[test]
    fn corrupt_shard_is_skipped_or_detected() {
        let dir = tempfile::tempdir().unwrap();
        let data = vec![42u8; 500];
        encode_bytes(&data, dir.path(), &CodeParams::new(DesignId::D1, 6, 4)).unwrap();
        let path = dir.path().join("shard_002.pbc");
        let mut bytes = fs::read(&path).unwrap();
        bytes[HEADER_LEN + 3] ^= 1;
        fs::write(&path, &bytes).unwrap();
        let rep = decode(dir.path()).unwrap();
        assert_eq!(rep.data, data);
        assert_eq!(rep.rejected.len(), 1);
        assert!(!rep.used.contains(&1));
        // repairing node 1 reads the corrupt shard 2
        assert!(matches!(repair(dir.path(), 0), Err(Error::Integrity(_))));
    }

    #[test]
    fn empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let m = encode_bytes(&[], dir.path(), &CodeParams::new(DesignId::D3, 11, 8)).unwrap();
        assert_eq!(m.stripes, 1);
        assert_eq!(
            fs::metadata(dir.path().join("shard_005.pbc")).unwrap().len(),
            (HEADER_LEN + m.alpha) as u64
        );
        assert!(decode(dir.path()).unwrap().data.is_empty());
    }

    #[test]
    fn unsupported_field() {
        let dir = tempfile::tempdir().unwrap();
        let mut p = CodeParams::new(DesignId::D1, 6, 4);
        p.field = "GF(257)".parse().unwrap();
        assert!(matches!(
            encode_bytes(b"x", dir.path(), &p),
            Err(Error::InvalidParams(_))
        ));
    }
}
