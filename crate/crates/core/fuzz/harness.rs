// Shared bodies for the fuzz targets and the corpus replay test.
#![allow(dead_code)]

use pbcode_core::algebra::{Field, FieldSpec};
use pbcode_core::basecode::make_toy_base;
use pbcode_core::designs::{CodeParams, DesignId};
use pbcode_core::engine::{emit_tables, parse_table, Repairable};
use pbcode_core::framework::{instantiate, parse_grid};
use pbcode_core::store::{self, Manifest, ShardHeader, HEADER_LEN};
use pbcode_core::{design1, golden, Error};

fn text(data: &[u8]) -> Option<&str> {
    std::str::from_utf8(data).ok()
}

pub fn manifest(data: &[u8]) {
    if let Some(m) = text(data).and_then(|t| Manifest::parse(t).ok()) {
        assert_eq!(Manifest::parse(&m.to_json()).unwrap(), m);
    }
}

pub fn shard_header(data: &[u8]) {
    if let Ok(h) = ShardHeader::parse(data) {
        assert_eq!(&h.to_bytes()[..], &data[..HEADER_LEN]);
    }
}

pub fn grid_dump(data: &[u8]) {
    let Some((&sel, rest)) = data.split_first() else {
        return;
    };
    let field = match sel % 3 {
        0 => Field::gf256(),
        1 => Field::new(FieldSpec::Binary { w: 16 }).unwrap(),
        _ => Field::prime(5).unwrap(),
    };
    if let Some(dump) = text(rest).and_then(|t| parse_grid(t, field).ok()) {
        let width = dump.rows.first().map(|r| r.2.len());
        assert!(dump.rows.iter().all(|r| Some(r.2.len()) == width));
        assert!(dump.rows.iter().flat_map(|r| r.2.iter()).all(|&v| v < field.order()));
    }
}

pub fn field_spec(data: &[u8]) {
    if let Some(spec) = text(data).and_then(|t| t.parse::<FieldSpec>().ok()) {
        assert_eq!(spec.to_string().parse::<FieldSpec>().unwrap(), spec);
        if let Ok(f) = Field::new(spec) {
            let g = f.generator();
            assert_eq!(f.mul(g, f.inv(g).unwrap()), 1);
        }
    }
}

pub fn gamma_table(data: &[u8]) {
    if let Some(rows) = text(data).and_then(|t| parse_table(t).ok()) {
        assert_eq!(parse_table(&emit_tables(&rows)).unwrap(), rows);
    }
}

pub fn expr(data: &[u8]) {
    let code = instantiate(&make_toy_base(), 4).unwrap();
    if let Some(row) = text(data).and_then(|t| golden::parse_expr(&code, t).ok()) {
        assert_eq!(row.len(), code.width());
    }
}

/// Feed symbols to the base decoder and to both decoders of a piggybacked code.
pub fn scalar_decode(data: &[u8]) {
    let base = make_toy_base();
    let symbols: Vec<(usize, u32)> = data.chunks_exact(2).map(|c| (c[0] as usize % 8, c[1] as u32)).collect();
    if let Ok(msg) = base.decode(&symbols) {
        let cw = base.encode(&msg).unwrap();
        for &(node, v) in symbols.iter().take(4) {
            assert_eq!(cw[node], v);
        }
    }

    let d = design1::construct(&base, 2).unwrap();
    let code = d.code();
    let nodes: Vec<usize> = data.iter().take(4).map(|&b| b as usize % 7).collect();
    let values: Vec<Vec<u32>> = data
        .iter()
        .skip(4)
        .copied()
        .chain(std::iter::repeat(0))
        .take(nodes.len() * code.alpha())
        .collect::<Vec<u8>>()
        .chunks(code.alpha())
        .map(|c| c.iter().map(|&b| b as u32).collect())
        .collect();
    let direct = code.decode(&nodes, &values);
    let sequential = code.sequential_decode(&nodes, &values);
    match (&direct, &sequential) {
        (Ok(a), Ok(b)) => {
            assert_eq!(a, b);
            let cw = code.encode(a).unwrap();
            for (node, v) in nodes.iter().zip(&values) {
                assert_eq!(&cw[*node], v);
            }
        }
        (Ok(_), Err(e)) | (Err(e), Ok(_)) => panic!("decoders disagree: {e}"),
        (Err(_), Err(_)) => {}
    }
}

/// Replace shard 1 of a small store with fuzz bytes; decoding must still
/// return the original data, and repairs must either succeed or report damage.
pub fn store_decode(data: &[u8]) {
    let dir = tempfile::tempdir().unwrap();
    let original: Vec<u8> = (0..40).collect();
    store::encode_bytes(&original, dir.path(), &CodeParams::new(DesignId::D1, 6, 4)).unwrap();
    std::fs::write(dir.path().join(store::shard_name(0)), data).unwrap();
    assert_eq!(store::decode(dir.path()).unwrap().data, original);
    match store::repair(dir.path(), 1) {
        Ok(_) | Err(Error::Integrity(_)) => {}
        Err(e) => panic!("unexpected repair error: {e}"),
    }
    store::repair(dir.path(), 0).unwrap();
    assert_eq!(store::decode(dir.path()).unwrap().data, original);
}
