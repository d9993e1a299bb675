//! Number formatting, output sinks and run manifests.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

const SIG: i32 = 12;

/// `x` with 12 significant digits, `%g` style: plain decimal for moderate
/// exponents, scientific otherwise, trailing zeros trimmed.
pub fn fmt(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", (SIG - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..SIG).contains(&exp) {
        return format!("{}e{exp}", trim(mantissa));
    }
    let decimals = (SIG - 1 - exp).max(0) as usize;
    trim(&format!("{x:.decimals$}")).to_string()
}

fn trim(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `x` rounded to 12 significant digits, for JSON output.
pub fn round(x: f64) -> f64 {
    fmt(x).parse().unwrap_or(x)
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".into(), fmt)
}

/// Parameters, tool version and time of one invocation.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: Value,
    pub tool_version: &'static str,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl RunManifest {
    pub fn new(command: &str, parameters: Value) -> Self {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            command: command.into(),
            parameters,
            tool_version: env!("CARGO_PKG_VERSION"),
            timestamp,
        }
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Write `body` to stdout, or to `out` with a manifest next to it.
pub fn emit(body: &str, out: Option<&Path>, manifest: &RunManifest) -> io::Result<()> {
    match out {
        None => io::stdout().lock().write_all(body.as_bytes()),
        Some(path) => {
            fs::write(path, body)?;
            let m = serde_json::to_string_pretty(manifest).map_err(io::Error::other)?;
            fs::write(manifest_path(path), m + "\n")
        }
    }
}

pub fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable output") + "\n"
}

/// RFC 4180 table with a header row.
pub fn csv_table<const K: usize>(header: &[&str; K], rows: &[[String; K]]) -> String {
    let mut w = ::csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 csv")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(fmt(0.25), "0.25");
        assert_eq!(fmt(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt(2.813698569), "2.813698569");
        assert_eq!(fmt(12.811900512345678), "12.8119005123");
        assert_eq!(fmt(1e-7), "1e-7");
        assert_eq!(fmt(-0.5), "-0.5");
        assert_eq!(fmt(4.0), "4");
        assert_eq!(fmt(123456789012345.0), "1.23456789012e14");
    }

    #[test]
    fn manifest_sits_next_to_output() {
        assert_eq!(manifest_path(Path::new("a/b.csv")), PathBuf::from("a/b.csv.manifest.json"));
    }
}
