//! One CSV file per sensor.
//!
//! The layout is fixed: header `t,ax,ay,az,gx,gy,gz,mx,my,mz`, SI units,
//! comma separators, LF line endings, values rounded to nine significant
//! digits.

use std::fmt::Write as _;
use std::path::Path;

use shoulder_core::{ImuSample, Vec3};

use super::IoError;

pub const HEADER: &str = "t,ax,ay,az,gx,gy,gz,mx,my,mz";
const COLUMNS: [&str; 10] = ["t", "ax", "ay", "az", "gx", "gy", "gz", "mx", "my", "mz"];

/// Rounds to nine significant digits and prints the shortest decimal that
/// reads back to the rounded value.
pub fn format_value(x: f64) -> String {
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

/// The value a round trip through the file format produces.
pub fn round_value(x: f64) -> f64 {
    format_value(x).parse().expect("formatted float parses")
}

pub fn stream_to_string(samples: &[ImuSample]) -> String {
    let mut out = String::with_capacity(samples.len() * 96 + HEADER.len() + 1);
    out.push_str(HEADER);
    out.push('\n');
    for s in samples {
        let v = [s.t, s.accel.x, s.accel.y, s.accel.z, s.gyro.x, s.gyro.y, s.gyro.z, s.mag.x, s.mag.y, s.mag.z];
        for (i, x) in v.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", format_value(*x));
        }
        out.push('\n');
    }
    out
}

fn parse_err(path: &str, line: u64, message: impl Into<String>) -> IoError {
    IoError::Parse { path: path.to_string(), line, message: message.into() }
}

fn invalid(path: &str, line: u64, invariant: impl Into<String>) -> IoError {
    IoError::Validation { path: path.to_string(), line: Some(line), invariant: invariant.into() }
}

/// Parses the text of one stream file. `path` is only used in errors.
pub fn parse_stream(text: &str, path: &str) -> Result<Vec<ImuSample>, IoError> {
    if text.is_empty() {
        return Err(parse_err(path, 1, format!("empty file, expected header {HEADER:?}")));
    }
    for (i, line) in text.split_inclusive('\n').enumerate() {
        let line_no = i as u64 + 1;
        if line.contains('\r') {
            return Err(parse_err(path, line_no, "carriage return found; lines must end with LF"));
        }
        if line == "\n" {
            return Err(parse_err(path, line_no, "blank line"));
        }
        if !line.ends_with('\n') {
            return Err(parse_err(path, line_no, "missing final newline"));
        }
    }

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .quoting(false)
        .from_reader(text.as_bytes());
    let mut samples: Vec<ImuSample> = Vec::new();
    let mut record = csv::StringRecord::new();
    let mut first = true;
    loop {
        let line = reader.position().line();
        match reader.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => return Err(parse_err(path, line, e.to_string())),
        }
        let line = record.position().map_or(line, |p| p.line());
        if first {
            first = false;
            if record.iter().ne(COLUMNS) {
                return Err(parse_err(path, line, format!("header must be exactly {HEADER:?}")));
            }
            continue;
        }
        if record.len() != COLUMNS.len() {
            return Err(parse_err(path, line, format!("expected {} fields, found {}", COLUMNS.len(), record.len())));
        }
        let mut v = [0.0; 10];
        for (k, field) in record.iter().enumerate() {
            v[k] = field
                .parse::<f64>()
                .map_err(|_| parse_err(path, line, format!("column {}: not a number: {field:?}", COLUMNS[k])))?;
            if !v[k].is_finite() {
                return Err(invalid(path, line, format!("column {}: value must be finite", COLUMNS[k])));
            }
        }
        if let Some(prev) = samples.last() {
            if !(v[0] > prev.t) {
                return Err(invalid(
                    path,
                    line,
                    format!("timestamps must be strictly increasing ({} after {})", v[0], prev.t),
                ));
            }
        }
        samples.push(ImuSample {
            t: v[0],
            accel: Vec3::new(v[1], v[2], v[3]),
            gyro: Vec3::new(v[4], v[5], v[6]),
            mag: Vec3::new(v[7], v[8], v[9]),
        });
    }
    if samples.is_empty() {
        return Err(invalid(path, 1, "stream has no samples"));
    }
    Ok(samples)
}

pub fn read_stream(path: &Path) -> Result<Vec<ImuSample>, IoError> {
    let text = super::read_text(path)?;
    parse_stream(&text, &path.display().to_string())
}
