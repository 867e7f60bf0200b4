//! File formats: generator sample streams and report documents.
//!
//! Text outputs start with `#` header lines carrying the tool version and the
//! SHA-256 of the generating configuration, so every file names its origin.
//! Binary sample streams are bare little-endian `f64` records, `n` per sample.

use std::io::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::sampler::master_seed;
use crate::error::{invalid, Error, Result};
use crate::generator::{GeneratorConfig, SampleScratch};

pub const TOOL_NAME: &str = "ptfprg";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleFormat {
    Csv,
    Json,
    Binary,
}

impl std::str::FromStr for SampleFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "binary" | "bin" => Ok(Self::Binary),
            other => Err(invalid(format!("unknown format {other:?} (expected csv, json or binary)"))),
        }
    }
}

/// SHA-256 (hex) of any serializable value's compact JSON.
pub fn json_sha256<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("value serializes");
    hex::encode(Sha256::digest(&bytes))
}

fn io_err(e: std::io::Error) -> Error {
    Error::InvalidArgument(format!("write failed: {e}"))
}

/// The header lines shared by every text output.
pub fn header_lines(config_hash: &str, extra: &[(&str, String)]) -> String {
    let mut out = format!("# {TOOL_NAME} {TOOL_VERSION}\n# config_sha256 {config_hash}\n");
    for (k, v) in extra {
        out.push_str(&format!("# {k} {v}\n"));
    }
    out
}

/// `count` generator samples; sample `i` uses the master seed drawn for trial
/// `i` of experiment `seed`.
pub fn generate_samples(config: &GeneratorConfig, seed: u64, count: u64) -> Result<Vec<Vec<f64>>> {
    let mut bytes = vec![0u8; config.seed_bytes()];
    let mut scratch = SampleScratch::default();
    (0..count)
        .map(|i| {
            master_seed(seed, i, &mut bytes);
            let mut out = vec![0.0; config.n];
            config.sample_into(&bytes, &mut scratch, &mut out)?;
            Ok(out)
        })
        .collect()
}

/// Writes samples in `format`. `hash` is the value for the
/// `config_sha256` header line (see [`json_sha256`]).
pub fn write_samples(
    w: &mut impl Write,
    config: &GeneratorConfig,
    samples: &[Vec<f64>],
    format: SampleFormat,
    hash: &str,
    extra: &[(&str, String)],
) -> Result<()> {
    match format {
        SampleFormat::Binary => {
            for s in samples {
                for v in s {
                    w.write_all(&v.to_le_bytes()).map_err(io_err)?;
                }
            }
        }
        SampleFormat::Csv => {
            w.write_all(header_lines(hash, extra).as_bytes()).map_err(io_err)?;
            let names: Vec<String> = (1..=config.n).map(|i| format!("y{i}")).collect();
            writeln!(w, "{}", names.join(",")).map_err(io_err)?;
            for s in samples {
                let row: Vec<String> = s.iter().map(|v| v.to_string()).collect();
                writeln!(w, "{}", row.join(",")).map_err(io_err)?;
            }
        }
        SampleFormat::Json => {
            let doc = serde_json::json!({
                "tool": TOOL_NAME,
                "version": TOOL_VERSION,
                "config_sha256": hash,
                "meta": extra.iter().map(|(k, v)| (k.to_string(), v.clone())).collect::<std::collections::BTreeMap<_, _>>(),
                "config": config,
                "samples": samples,
            });
            serde_json::to_writer_pretty(&mut *w, &doc).map_err(|e| invalid(e.to_string()))?;
            writeln!(w).map_err(io_err)?;
        }
    }
    Ok(())
}

/// A report table in CSV form, preceded by the standard header lines.
pub fn render_csv(hash: &str, extra: &[(&str, String)], columns: &str, rows: &[String]) -> String {
    let mut out = header_lines(hash, extra);
    out.push_str(columns);
    out.push('\n');
    for r in rows {
        out.push_str(r);
        out.push('\n');
    }
    out
}

/// Pretty JSON with a trailing newline.
pub fn render_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> GeneratorConfig {
        GeneratorConfig::empirical(3, 0.3, 2, 1e-3, 1e-3, 4).unwrap()
    }

    #[test]
    fn csv_layout() {
        let cfg = small();
        let samples = generate_samples(&cfg, 7, 2).unwrap();
        let mut buf = Vec::new();
        let hash = json_sha256(&cfg);
        write_samples(&mut buf, &cfg, &samples, SampleFormat::Csv, &hash, &[("seed", "7".into())]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], format!("# ptfprg {TOOL_VERSION}"));
        assert_eq!(lines[1], format!("# config_sha256 {hash}"));
        assert_eq!(lines[2], "# seed 7");
        assert_eq!(lines[3], "y1,y2,y3");
        assert_eq!(lines.len(), 6);
        // values round-trip exactly
        let parsed: Vec<f64> = lines[4].split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(parsed, samples[0]);
    }

    #[test]
    fn binary_layout() {
        let cfg = small();
        let samples = generate_samples(&cfg, 1, 3).unwrap();
        let mut buf = Vec::new();
        write_samples(&mut buf, &cfg, &samples, SampleFormat::Binary, "", &[]).unwrap();
        assert_eq!(buf.len(), 3 * 3 * 8);
        let second = f64::from_le_bytes(buf[8..16].try_into().unwrap());
        assert_eq!(second, samples[0][1]);
    }

    #[test]
    fn json_layout_and_determinism() {
        let cfg = small();
        let render = || {
            let samples = generate_samples(&cfg, 2, 2).unwrap();
            let mut buf = Vec::new();
            write_samples(&mut buf, &cfg, &samples, SampleFormat::Json, &json_sha256(&cfg), &[]).unwrap();
            buf
        };
        let a = render();
        assert_eq!(a, render());
        let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
        assert_eq!(v["samples"].as_array().unwrap().len(), 2);
        assert_eq!(v["config"]["mode"], "empirical");
    }

    #[test]
    fn formats_parse() {
        assert_eq!("csv".parse::<SampleFormat>().unwrap(), SampleFormat::Csv);
        assert_eq!("binary".parse::<SampleFormat>().unwrap(), SampleFormat::Binary);
        assert!("xml".parse::<SampleFormat>().is_err());
    }
}
