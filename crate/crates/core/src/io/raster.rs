//! Raster carriers: 16-bit PNG and PFM depth, 8-bit indexed PNG id maps.

use std::io::Cursor;

use super::FormatError;
use crate::raster::{DepthMap, IdMap};

/// Default PNG16 quantum: millimeters.
pub const DEFAULT_DEPTH_SCALE: f64 = 0.001;

fn png_err(e: impl std::fmt::Display) -> FormatError {
    FormatError::Png(e.to_string())
}

/// `round(depth / scale)` as big-endian 16-bit grayscale. `0` is reserved for
/// the sentinel, so positive depths that round to zero are stored as `1`.
pub fn encode_depth_png16(d: &DepthMap, scale: f64) -> Result<Vec<u8>, FormatError> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(FormatError::Invalid(format!("depth scale must be positive, got {scale}")));
    }
    let mut samples = Vec::with_capacity(d.data.len() * 2);
    let mut max_depth = 0.0f64;
    for &v in &d.data {
        if !v.is_finite() || v < 0.0 {
            return Err(FormatError::Invalid(format!("depth value {v} is not a finite non-negative number")));
        }
        max_depth = max_depth.max(v as f64);
        let q = if v == DepthMap::SENTINEL { 0.0 } else { (v as f64 / scale).round().max(1.0) };
        if q > u16::MAX as f64 {
            continue;
        }
        samples.extend_from_slice(&(q as u16).to_be_bytes());
    }
    if max_depth / scale >= u16::MAX as f64 + 0.5 {
        return Err(FormatError::DepthOverflow { max_depth, scale, suggested_scale: suggest_scale(max_depth) });
    }
    write_png(d.width, d.height, png::ColorType::Grayscale, png::BitDepth::Sixteen, &samples, None)
}

/// Smallest scale of the form `m × 10^e` (m ∈ {1, 2, 5}) that fits `max_depth`.
fn suggest_scale(max_depth: f64) -> f64 {
    let need = max_depth / u16::MAX as f64;
    let mut e = need.log10().floor() as i32;
    loop {
        for m in [1.0, 2.0, 5.0] {
            let s = m * 10f64.powi(e);
            if s >= need {
                return s;
            }
        }
        e += 1;
    }
}

pub fn decode_depth_png16(bytes: &[u8], scale: f64) -> Result<DepthMap, FormatError> {
    let (w, h, color, depth, buf) = read_png(bytes)?;
    if color != png::ColorType::Grayscale || depth != png::BitDepth::Sixteen {
        return Err(FormatError::Png(format!("expected 16-bit grayscale, got {color:?} {depth:?}")));
    }
    let data = buf
        .chunks_exact(2)
        .map(|c| {
            let q = u16::from_be_bytes([c[0], c[1]]);
            if q == 0 {
                DepthMap::SENTINEL
            } else {
                (q as f64 * scale) as f32
            }
        })
        .collect();
    Ok(DepthMap::from_data(w, h, data))
}

/// Little-endian PFM, rows bottom to top as the format requires.
pub fn encode_depth_pfm(d: &DepthMap) -> Vec<u8> {
    let mut out = format!("Pf\n{} {}\n-1.0\n", d.width, d.height).into_bytes();
    for y in (0..d.height).rev() {
        for x in 0..d.width {
            out.extend_from_slice(&d.get(x, y).to_le_bytes());
        }
    }
    out
}

pub fn decode_depth_pfm(bytes: &[u8]) -> Result<DepthMap, FormatError> {
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(FormatError::Pfm("truncated header".into()));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    // exactly one whitespace byte separates the header from the data
    pos += 1;
    if fields[0] != "Pf" {
        return Err(FormatError::Pfm(format!("expected single-channel 'Pf', got {:?}", fields[0])));
    }
    let parse_dim = |s: &str| s.parse::<u32>().map_err(|_| FormatError::Pfm(format!("bad dimension {s:?}")));
    let (w, h) = (parse_dim(&fields[1])?, parse_dim(&fields[2])?);
    let endian: f64 = fields[3].parse().map_err(|_| FormatError::Pfm(format!("bad scale {:?}", fields[3])))?;
    let n = w as usize * h as usize;
    let body = bytes.get(pos..).unwrap_or(&[]);
    if body.len() != n * 4 {
        return Err(FormatError::Pfm(format!("expected {} data bytes, got {}", n * 4, body.len())));
    }
    let mut data = vec![0.0f32; n];
    for (i, c) in body.chunks_exact(4).enumerate() {
        let v = if endian < 0.0 {
            f32::from_le_bytes([c[0], c[1], c[2], c[3]])
        } else {
            f32::from_be_bytes([c[0], c[1], c[2], c[3]])
        };
        let (x, y_from_bottom) = (i % w as usize, i / w as usize);
        data[(h as usize - 1 - y_from_bottom) * w as usize + x] = v;
    }
    Ok(DepthMap::from_data(w, h, data))
}

/// Deterministic palette color for an id; 0 is black.
pub fn palette_color(id: u8) -> [u8; 3] {
    if id == 0 {
        return [0, 0, 0];
    }
    // golden-ratio hue walk keeps neighbouring ids apart
    let h = (id as f64 * 0.618_033_988_749_895).fract() * 6.0;
    let (s, v) = (0.65, 0.95);
    let c = v * s;
    let x = c * (1.0 - ((h % 2.0) - 1.0).abs());
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [r, g, b].map(|ch| ((ch + m) * 255.0).round() as u8)
}

/// 8-bit indexed PNG; the palette index is the entity id.
pub fn encode_idmap_png(ids: &IdMap) -> Result<Vec<u8>, FormatError> {
    let mut idx = Vec::with_capacity(ids.data.len());
    for &v in &ids.data {
        idx.push(u8::try_from(v).map_err(|_| FormatError::IdOutOfRange(v))?);
    }
    let palette: Vec<u8> = (0..=255u8).flat_map(palette_color).collect();
    write_png(ids.width, ids.height, png::ColorType::Indexed, png::BitDepth::Eight, &idx, Some(palette))
}

/// Accepts indexed or 8-bit grayscale PNGs; the sample value is the id.
pub fn decode_idmap_png(bytes: &[u8]) -> Result<IdMap, FormatError> {
    let (w, h, color, depth, buf) = read_png(bytes)?;
    match (color, depth) {
        (png::ColorType::Indexed | png::ColorType::Grayscale, png::BitDepth::Eight) => {
            Ok(IdMap::from_data(w, h, buf.into_iter().map(u32::from).collect()))
        }
        _ => Err(FormatError::Png(format!("expected 8-bit indexed or grayscale, got {color:?} {depth:?}"))),
    }
}

fn write_png(
    w: u32,
    h: u32,
    color: png::ColorType,
    depth: png::BitDepth,
    data: &[u8],
    palette: Option<Vec<u8>>,
) -> Result<Vec<u8>, FormatError> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, w, h);
        enc.set_color(color);
        enc.set_depth(depth);
        if let Some(p) = palette {
            enc.set_palette(p);
        }
        let mut writer = enc.write_header().map_err(png_err)?;
        writer.write_image_data(data).map_err(png_err)?;
        writer.finish().map_err(png_err)?;
    }
    Ok(out)
}

type Decoded = (u32, u32, png::ColorType, png::BitDepth, Vec<u8>);

fn read_png(bytes: &[u8]) -> Result<Decoded, FormatError> {
    let mut dec = png::Decoder::new(Cursor::new(bytes));
    dec.set_transformations(png::Transformations::IDENTITY);
    let mut reader = dec.read_info().map_err(png_err)?;
    let size = reader.output_buffer_size().ok_or_else(|| FormatError::Png("image too large".into()))?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(png_err)?;
    buf.truncate(info.buffer_size());
    Ok((info.width, info.height, info.color_type, info.bit_depth, buf))
}
