// Helpers shared by the CLI integration tests.
#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

pub fn pbcode(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pbcode"))
        .args(args)
        .env_remove("PBCODE_THREADS")
        .output()
        .expect("spawn pbcode")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn ok(args: &[&str]) -> String {
    let out = pbcode(args);
    assert!(
        out.status.success(),
        "pbcode {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    stdout(&out)
}

pub fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Value after `key` up to the next space, e.g. `fraction 7/10 (0.700000)` gives `7/10`.
pub fn field_after<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    let start = text.find(key)? + key.len();
    text[start..].split_whitespace().next()
}
