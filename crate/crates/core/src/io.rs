//! Plain-text writers for sweep tables and JSON records.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;

use crate::eigensolver::SweepRow;

/// Seventeen significant digits; `nan`, `inf`, `-inf` for the non-finite values.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("s,lambda,residual,phi_at_one_third,overflow_flag\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(r.s),
            fmt_f64(r.lambda),
            fmt_f64(r.residual),
            fmt_f64(r.phi_at_one_third),
            u8::from(r.overflow)
        );
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EfgRow {
    pub s: f64,
    pub e: f64,
    pub f: f64,
    pub g: f64,
    pub k1: usize,
    pub k2: usize,
}

pub fn efg_csv(rows: &[EfgRow]) -> String {
    let mut out = String::from("s,E,F,G,K1,K2\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{},{},{}", fmt_f64(r.s), fmt_f64(r.e), fmt_f64(r.f), fmt_f64(r.g), r.k1, r.k2);
    }
    out
}

/// One compact JSON object per line.
pub fn jsonl<T: Serialize>(records: &[T]) -> serde_json::Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

/// Write through a sibling temporary file and rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_roundtrip() {
        for v in [0.1, 1.0 / 3.0, 89.826_457_874_010_07, 1e-300, -2.5e17] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17);
        }
        assert_eq!(fmt_f64(f64::NAN), "nan");
    }

    #[test]
    fn sweep_header() {
        let csv = sweep_csv(&[]);
        assert_eq!(csv, "s,lambda,residual,phi_at_one_third,overflow_flag\n");
    }
}
