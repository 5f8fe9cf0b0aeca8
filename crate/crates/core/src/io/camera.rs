//! Camera sequence text files.
//!
//! Native: one line per frame, 12 space-separated reals, the row-major
//! rotation followed by the translation of the world-to-camera pose.
//!
//! RealEstate10K: an optional first line holding the source URL, then one
//! line per frame of 19 fields: timestamp, normalized `fx fy cx cy`, two
//! zeros, and the row-major 3x4 world-to-camera matrix.

use super::{fmt_real, FormatError};
use crate::geometry::Intrinsics;
use crate::scene::CameraSequence;

pub const NATIVE_FIELDS: usize = 12;
pub const RE10K_FIELDS: usize = 19;

pub fn write_camera_txt(seq: &CameraSequence) -> String {
    let mut out = String::new();
    for row in &seq.rows {
        let fields: Vec<String> = row.iter().map(|&v| fmt_real(v)).collect();
        out.push_str(&fields.join(" "));
        out.push('\n');
    }
    out
}

/// Data lines with their 1-based line numbers; blank lines and `#` comments
/// are skipped.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_fields(line_no: usize, line: &str, expected: usize) -> Result<Vec<f64>, FormatError> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != expected {
        return Err(FormatError::FieldCount { line: line_no, expected, got: fields.len() });
    }
    fields
        .iter()
        .enumerate()
        .map(|(i, t)| match t.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            Ok(_) => Err(FormatError::NonFiniteValue { line: line_no, field: i + 1, text: t.to_string() }),
            Err(_) => Err(FormatError::Line { line: line_no, message: format!("field {} {t:?} is not a number", i + 1) }),
        })
        .collect()
}

pub fn parse_camera_txt(text: &str) -> Result<CameraSequence, FormatError> {
    let mut rows = Vec::new();
    for (n, line) in data_lines(text) {
        let v = parse_fields(n, line, NATIVE_FIELDS)?;
        rows.push(std::array::from_fn(|i| v[i]));
    }
    Ok(CameraSequence { rows })
}

/// A RealEstate10K clip: poses plus the normalized intrinsics of its first
/// frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Re10kClip {
    pub source: Option<String>,
    pub timestamps: Vec<i64>,
    /// `[fx, fy, cx, cy]` divided by image width / height.
    pub normalized_intrinsics: [f64; 4],
    pub sequence: CameraSequence,
}

impl Re10kClip {
    pub fn intrinsics(&self, width: u32, height: u32) -> Intrinsics {
        let [fx, fy, cx, cy] = self.normalized_intrinsics;
        let (w, h) = (width as f64, height as f64);
        Intrinsics::new(fx * w, fy * h, cx * w, cy * h, width, height)
    }
}

pub fn parse_re10k(text: &str) -> Result<Re10kClip, FormatError> {
    let mut lines = data_lines(text).peekable();
    let mut source = None;
    if let Some((_, first)) = lines.peek() {
        if first.contains("://") {
            source = Some(first.to_string());
            lines.next();
        }
    }
    let mut timestamps = Vec::new();
    let mut normalized_intrinsics = None;
    let mut rows = Vec::new();
    for (n, line) in lines {
        let v = parse_fields(n, line, RE10K_FIELDS)?;
        timestamps.push(v[0] as i64);
        normalized_intrinsics.get_or_insert([v[1], v[2], v[3], v[4]]);
        let m = &v[7..];
        rows.push([m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10], m[3], m[7], m[11]]);
    }
    let normalized_intrinsics =
        normalized_intrinsics.ok_or_else(|| FormatError::Invalid("RealEstate10K file has no pose lines".into()))?;
    Ok(Re10kClip { source, timestamps, normalized_intrinsics, sequence: CameraSequence { rows } })
}

/// Either format, decided by the field count of the first pose line.
pub enum CameraFile {
    Native(CameraSequence),
    Re10k(Re10kClip),
}

pub fn parse_camera_any(text: &str) -> Result<CameraFile, FormatError> {
    let first = data_lines(text).find(|(_, l)| !l.contains("://"));
    match first.map(|(n, l)| (n, l.split_whitespace().count())) {
        Some((_, RE10K_FIELDS)) => parse_re10k(text).map(CameraFile::Re10k),
        Some((_, NATIVE_FIELDS)) | None => parse_camera_txt(text).map(CameraFile::Native),
        Some((n, got)) => Err(FormatError::FieldCount { line: n, expected: NATIVE_FIELDS, got }),
    }
}
