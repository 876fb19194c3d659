//! Trace CSV and JSON-lines readers/writers shared by the tools.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::scenario::AccelSample;

pub const TRACE_CSV_HEADER: &str = "t,ax,ay,az,temp,pressure";

#[derive(Debug, Error)]
pub enum FileError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
}

/// Format with 9 significant digits, plain decimal where reasonable.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let exponential = format!("{v:.8e}");
    let (mantissa, exponent) = exponential.split_once('e').expect("exponent present");
    let exponent: i32 = exponent.parse().expect("numeric exponent");
    if (-4..9).contains(&exponent) {
        let decimals = (8 - exponent).max(0) as usize;
        let plain = format!("{v:.decimals$}");
        let trimmed = plain.trim_end_matches('0').trim_end_matches('.');
        trimmed.to_string()
    } else {
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{exponent}")
    }
}

/// Write a trace as CSV. Missing context channels leave their field empty.
pub fn write_trace_csv<W: Write>(mut w: W, trace: &[AccelSample]) -> Result<(), FileError> {
    writeln!(w, "{TRACE_CSV_HEADER}")?;
    for s in trace {
        let opt = |v: Option<f64>| v.map(format_sig9).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{}",
            format_sig9(s.t),
            format_sig9(s.ax),
            format_sig9(s.ay),
            format_sig9(s.az),
            opt(s.skin_temp),
            opt(s.pressure),
        )?;
    }
    Ok(())
}

pub fn write_trace_csv_file(path: &Path, trace: &[AccelSample]) -> Result<(), FileError> {
    write_trace_csv(BufWriter::new(File::create(path)?), trace)
}

/// Read a trace CSV produced by [`write_trace_csv`].
pub fn read_trace_csv<R: BufRead>(r: R) -> Result<Vec<AccelSample>, FileError> {
    let mut lines = r.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or(FileError::Parse { line: 1, message: "empty file".into() })?;
    let header = header?;
    if header.trim() != TRACE_CSV_HEADER {
        return Err(FileError::Parse {
            line: 1,
            message: format!("expected header {TRACE_CSV_HEADER:?}, got {header:?}"),
        });
    }
    let mut trace = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(FileError::Parse {
                line: lineno,
                message: format!("expected 6 fields, got {}", fields.len()),
            });
        }
        let num = |text: &str, name: &str| -> Result<f64, FileError> {
            text.trim().parse::<f64>().map_err(|e| FileError::Parse {
                line: lineno,
                message: format!("field {name}: {e}"),
            })
        };
        let opt = |text: &str, name: &str| -> Result<Option<f64>, FileError> {
            if text.trim().is_empty() { Ok(None) } else { num(text, name).map(Some) }
        };
        trace.push(AccelSample {
            t: num(fields[0], "t")?,
            ax: num(fields[1], "ax")?,
            ay: num(fields[2], "ay")?,
            az: num(fields[3], "az")?,
            skin_temp: opt(fields[4], "temp")?,
            pressure: opt(fields[5], "pressure")?,
        });
    }
    if trace.is_empty() {
        return Err(FileError::Parse { line: 1, message: "no sample rows".into() });
    }
    Ok(trace)
}

pub fn read_trace_csv_file(path: &Path) -> Result<Vec<AccelSample>, FileError> {
    read_trace_csv(BufReader::new(File::open(path)?))
}

/// One JSON document per line.
pub fn write_jsonl<T: Serialize, W: Write>(mut w: W, items: &[T]) -> Result<(), FileError> {
    for item in items {
        let line = serde_json::to_string(item).map_err(|source| FileError::Json {
            line: 0,
            source,
        })?;
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn write_jsonl_file<T: Serialize>(path: &Path, items: &[T]) -> Result<(), FileError> {
    write_jsonl(BufWriter::new(File::create(path)?), items)
}

pub fn read_jsonl<T: DeserializeOwned, R: BufRead>(r: R) -> Result<Vec<T>, FileError> {
    let mut items = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        items.push(
            serde_json::from_str(&line)
                .map_err(|source| FileError::Json { line: idx + 1, source })?,
        );
    }
    Ok(items)
}

pub fn read_jsonl_file<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, FileError> {
    read_jsonl(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig9_formats() {
        assert_eq!(format_sig9(0.0), "0");
        assert_eq!(format_sig9(1.0), "1");
        assert_eq!(format_sig9(-2.5), "-2.5");
        assert_eq!(format_sig9(7.19), "7.19");
        assert_eq!(format_sig9(101325.0), "101325");
        assert_eq!(format_sig9(9.80665), "9.80665");
        assert_eq!(format_sig9(0.012337005501361699), "0.0123370055");
        assert_eq!(format_sig9(1.0e-12), "1e-12");
        assert_eq!(format_sig9(123456789012.0), "1.23456789e11");
    }

    #[test]
    fn sig9_keeps_nine_digits() {
        let v = std::f64::consts::PI;
        assert_eq!(format_sig9(v), "3.14159265");
    }

    #[test]
    fn trace_csv_round_trip() {
        let trace = vec![
            AccelSample {
                t: 0.0,
                ax: 0.1,
                ay: -0.25,
                az: 9.80665,
                skin_temp: Some(33.5),
                pressure: Some(101_325.0),
            },
            AccelSample { t: 0.01, ax: 0.0, ay: 0.0, az: 0.0, skin_temp: None, pressure: None },
        ];
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &trace).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,ax,ay,az,temp,pressure\n"), "{text}");
        let back = read_trace_csv(&buf[..]).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].az, 9.80665);
        assert_eq!(back[1].skin_temp, None);
    }

    #[test]
    fn trace_csv_rejects_empty_and_bad_header() {
        assert!(read_trace_csv(&b""[..]).is_err());
        assert!(read_trace_csv(&b"time,x\n1,2\n"[..]).is_err());
        let err = read_trace_csv(&b"t,ax,ay,az,temp,pressure\n0,1,bogus,3,,\n"[..]).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn jsonl_round_trip() {
        #[derive(serde::Serialize, serde::Deserialize, PartialEq, Debug)]
        struct Row {
            a: u32,
            b: String,
        }
        let rows = vec![Row { a: 1, b: "x".into() }, Row { a: 2, b: "y".into() }];
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &rows).unwrap();
        let back: Vec<Row> = read_jsonl(&buf[..]).unwrap();
        assert_eq!(back, rows);
    }
}
