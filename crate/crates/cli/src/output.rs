//! File writing and number formatting for artifacts.

use std::path::Path;
use std::str::FromStr;

use jlsampler::io::fmt_f64;
use serde_json::{Number, Value};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// JSON number carrying 17 significant digits; non-finite values become
/// the strings `inf`, `-inf` and `nan`.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(Number::from_str(&fmt_f64(x)).expect("formatted float parses"))
    } else {
        Value::String(fmt_f64(x))
    }
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn to_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_keep_seventeen_digits() {
        assert_eq!(to_json(&num(0.1)), "1.0000000000000001e-1\n");
        assert_eq!(num(f64::INFINITY), Value::String("inf".into()));
        let back: f64 = serde_json::from_value(num(1.0 / 3.0)).unwrap();
        assert_eq!(back, 1.0 / 3.0);
    }

    #[test]
    fn checksum_is_sha256() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
