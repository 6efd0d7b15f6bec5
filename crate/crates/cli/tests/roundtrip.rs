mod common;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};

use pbcode_core::designs::{build, CodeParams, DesignId};
use pbcode_core::store::Store;

use common::{field_after, ok, path, pbcode};

fn random_file(dir: &std::path::Path, rng: &mut StdRng, len: usize) -> (std::path::PathBuf, Vec<u8>) {
    let mut data = vec![0u8; len];
    rng.fill_bytes(&mut data);
    let p = dir.join("input.bin");
    std::fs::write(&p, &data).unwrap();
    (p, data)
}

fn encode(input: &std::path::Path, shards: &std::path::Path, design: &str, n: usize, k: usize) -> std::process::Output {
    pbcode(&[
        "encode",
        path(input),
        "--out",
        path(shards),
        "--design",
        design,
        "--n",
        &n.to_string(),
        "--k",
        &k.to_string(),
    ])
}

#[test]
fn lose_one_repair_decode_every_design() {
    let mut rng = StdRng::seed_from_u64(1);
    for (n, k) in [(6, 4), (13, 10), (14, 10)] {
        for design in DesignId::ALL {
            let tmp = tempfile::tempdir().unwrap();
            let (input, data) = random_file(tmp.path(), &mut rng, 64 * 1024);
            let shards = tmp.path().join("shards");
            let out = encode(&input, &shards, design.name(), n, k);
            if build(&CodeParams::new(design, n, k)).is_err() {
                assert_eq!(out.status.code(), Some(2), "{design} ({n},{k})");
                continue;
            }
            assert!(out.status.success(), "{design} ({n},{k})");
            let lost = rng.gen_range(1..=n);
            let shard = shards.join(format!("shard_{lost:03}.pbc"));
            let before = std::fs::read(&shard).unwrap();
            std::fs::remove_file(&shard).unwrap();
            ok(&["repair", path(&shards), "--lost", &lost.to_string()]);
            assert_eq!(
                std::fs::read(&shard).unwrap(),
                before,
                "{design} ({n},{k}) shard {lost}"
            );
            let restored = tmp.path().join("restored.bin");
            ok(&["decode", path(&shards), "--out", path(&restored)]);
            assert_eq!(std::fs::read(&restored).unwrap(), data, "{design} ({n},{k})");
        }
    }
}

#[test]
fn decode_from_any_k_shards() {
    let mut rng = StdRng::seed_from_u64(2);
    let tmp = tempfile::tempdir().unwrap();
    let (input, data) = random_file(tmp.path(), &mut rng, 5000);
    let shards = tmp.path().join("shards");
    assert!(encode(&input, &shards, "d3", 13, 10).status.success());
    let mut nodes: Vec<usize> = (1..=13).collect();
    nodes.shuffle(&mut rng);
    for node in &nodes[..3] {
        std::fs::remove_file(shards.join(format!("shard_{node:03}.pbc"))).unwrap();
    }
    let restored = tmp.path().join("restored.bin");
    let report = ok(&["decode", path(&shards), "--out", path(&restored)]);
    assert!(report.contains("decoded 5000 bytes"), "{report}");
    assert_eq!(std::fs::read(&restored).unwrap(), data);

    std::fs::remove_file(shards.join(format!("shard_{:03}.pbc", nodes[3]))).unwrap();
    assert_eq!(
        pbcode(&["decode", path(&shards), "--out", path(&restored)])
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn reported_fractions() {
    let mut rng = StdRng::seed_from_u64(3);
    let tmp = tempfile::tempdir().unwrap();
    let (input, _) = random_file(tmp.path(), &mut rng, 4096);
    let cases = [
        // (design, n, k, lost, fraction)
        ("d1", 6, 4, 1, "3/4"),
        ("d1", 6, 4, 5, "1/1"),
        ("d1", 14, 10, 1, "13/20"),
        ("d2", 13, 10, 4, "2/3"),
    ];
    for (design, n, k, lost, want) in cases {
        let shards = tmp.path().join(format!("{design}_{n}_{k}"));
        assert!(encode(&input, &shards, design, n, k).status.success());
        let report = ok(&["repair", path(&shards), "--lost", &lost.to_string()]);
        assert_eq!(
            field_after(&report, "payload bytes, fraction"),
            Some(want),
            "{design} ({n},{k}) {report}"
        );
        assert!(report.contains("header bytes: "), "{report}");
    }
}

#[test]
fn manifest_rebuilds_the_encode_time_grid() {
    let mut rng = StdRng::seed_from_u64(4);
    let tmp = tempfile::tempdir().unwrap();
    let (input, _) = random_file(tmp.path(), &mut rng, 1000);
    for design in DesignId::ALL {
        let shards = tmp.path().join(design.name());
        assert!(encode(&input, &shards, design.name(), 13, 10).status.success());
        let store = Store::open(&shards).unwrap();
        let fresh = build(&CodeParams::new(design, 13, 10)).unwrap();
        assert_eq!(store.code().dump(), fresh.code().dump(), "{design}");
    }
}

#[test]
fn exit_codes() {
    let mut rng = StdRng::seed_from_u64(5);
    let tmp = tempfile::tempdir().unwrap();
    let (input, _) = random_file(tmp.path(), &mut rng, 3000);
    let shards = tmp.path().join("shards");

    assert_eq!(encode(&input, &shards, "d2", 6, 4).status.code(), Some(2));
    assert_eq!(
        pbcode(&["encode", path(&input), "--out", path(&shards)]).status.code(),
        Some(2)
    );
    assert_eq!(
        encode(&tmp.path().join("missing"), &shards, "d1", 6, 4).status.code(),
        Some(1)
    );

    assert!(encode(&input, &shards, "d1", 6, 4).status.success());
    assert_eq!(pbcode(&["repair", path(&shards), "--lost", "0"]).status.code(), Some(2));
    assert_eq!(pbcode(&["repair", path(&shards), "--lost", "7"]).status.code(), Some(2));

    // flip a payload byte in a helper of node 1
    let helper = shards.join("shard_002.pbc");
    let mut bytes = std::fs::read(&helper).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 0xff;
    std::fs::write(&helper, &bytes).unwrap();
    std::fs::remove_file(shards.join("shard_001.pbc")).unwrap();
    assert_eq!(pbcode(&["repair", path(&shards), "--lost", "1"]).status.code(), Some(4));

    std::fs::remove_file(shards.join("shard_003.pbc")).unwrap();
    assert_eq!(pbcode(&["repair", path(&shards), "--lost", "1"]).status.code(), Some(3));
}

#[test]
fn empty_file_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("empty");
    std::fs::write(&input, b"").unwrap();
    let shards = tmp.path().join("shards");
    assert!(encode(&input, &shards, "pp", 9, 6).status.success());
    let out = tmp.path().join("out");
    ok(&["decode", path(&shards), "--out", path(&out)]);
    assert_eq!(std::fs::read(&out).unwrap(), b"");
}

#[test]
fn verify_selftest_analyze() {
    let v = ok(&["verify", "--design", "d3", "--n", "13", "--k", "10"]);
    assert!(v.contains("mds: ok") && v.contains("repair plans: ok"), "{v}");
    let s = ok(&["selftest"]);
    assert!(s.trim_end().ends_with("PASS 6/6 golden examples"), "{s}");
    let a = pbcode(&["analyze", "--design", "d2", "--k-range", "4..6", "--r-range", "2..3"]);
    assert!(a.status.success());
    assert_eq!(common::stdout(&a).lines().count(), 1 + 3);
    assert!(String::from_utf8_lossy(&a.stderr).contains("skipped 3"));
    assert_eq!(
        pbcode(&["analyze", "--design", "d1", "--k-range", "5..2", "--r-range", "2"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn thread_variable_is_checked() {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_pbcode"))
        .arg("selftest")
        .env("PBCODE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_pbcode"))
        .args(["analyze", "--design", "d1", "--k-range", "4..8", "--r-range", "2..3"])
        .env("PBCODE_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
}
