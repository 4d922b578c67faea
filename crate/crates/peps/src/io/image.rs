//! PNG and binary PPM (P6) images.

use std::path::Path;

use peps_core::signals::Image;

use crate::error::{read, write, Error, Result};

/// Load an 8- or 16-bit PNG or P6 PPM as RGB in `[0, 1]`.
///
/// Gray is replicated over three channels and alpha is dropped. The format
/// is picked from the leading bytes, not the extension.
pub fn load_image(path: &Path) -> Result<Image> {
    let bytes = read(path)?;
    decode_image(&bytes).map_err(|e| Error::in_file(path, e))
}

/// Decode PNG or P6 bytes.
pub fn decode_image(bytes: &[u8]) -> peps_core::Result<Image> {
    if bytes.starts_with(b"\x89PNG") {
        decode_png(bytes)
    } else if bytes.starts_with(b"P6") {
        decode_ppm(bytes)
    } else {
        Err(format_err(0, "neither PNG nor binary PPM (P6)"))
    }
}

/// Save as 8-bit RGB; `.ppm` writes P6, anything else PNG. Values are clamped.
pub fn save_image(path: &Path, img: &Image) -> Result<()> {
    let ppm = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("ppm"));
    let bytes = if ppm { encode_ppm(img) } else { encode_png(img) }.map_err(|e| Error::in_file(path, e))?;
    write(path, &bytes)
}

fn format_err(offset: usize, reason: impl Into<String>) -> peps_core::Error {
    peps_core::Error::Format {
        offset,
        reason: reason.into(),
    }
}

fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn rgb_bytes(img: &Image) -> peps_core::Result<Vec<u8>> {
    if img.channels() != 3 {
        return Err(peps_core::Error::Input(format!("can only save RGB images, got {} channels", img.channels())));
    }
    Ok(img.data().iter().map(|&v| to_u8(v)).collect())
}

/// Expand `samples` (values in `[0, max]`, `ch` per pixel) to RGB.
fn to_rgb(width: usize, height: usize, ch: usize, samples: impl Iterator<Item = f64>) -> peps_core::Result<Image> {
    let raw: Vec<f64> = samples.collect();
    let data = match ch {
        1 | 2 => raw.chunks_exact(ch).flat_map(|p| [p[0]; 3]).collect(),
        3 => raw,
        4 => raw.chunks_exact(4).flat_map(|p| [p[0], p[1], p[2]]).collect(),
        _ => return Err(format_err(0, format!("unsupported channel count {ch}"))),
    };
    Image::new(width, height, 3, data)
}

fn decode_png(bytes: &[u8]) -> peps_core::Result<Image> {
    let mut decoder = png::Decoder::new(bytes);
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(|e| format_err(0, format!("png: {e}")))?;
    let mut buf = vec![0; reader.output_buffer_size()];
    let info = reader.next_frame(&mut buf).map_err(|e| format_err(0, format!("png: {e}")))?;
    let buf = &buf[..info.buffer_size()];
    let (w, h) = (info.width as usize, info.height as usize);
    let ch = info.color_type.samples();
    match info.bit_depth {
        png::BitDepth::Sixteen => to_rgb(
            w,
            h,
            ch,
            buf.chunks_exact(2).map(|b| f64::from(u16::from_be_bytes([b[0], b[1]])) / 65535.0),
        ),
        png::BitDepth::Eight => to_rgb(w, h, ch, buf.iter().map(|&b| f64::from(b) / 255.0)),
        other => Err(format_err(0, format!("unexpected png bit depth {other:?} after expansion"))),
    }
}

fn encode_png(img: &Image) -> peps_core::Result<Vec<u8>> {
    let data = rgb_bytes(img)?;
    let mut out = Vec::new();
    let mut enc = png::Encoder::new(&mut out, img.width() as u32, img.height() as u32);
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    let mut writer = enc.write_header().map_err(|e| format_err(0, format!("png: {e}")))?;
    writer.write_image_data(&data).map_err(|e| format_err(0, format!("png: {e}")))?;
    writer.finish().map_err(|e| format_err(0, format!("png: {e}")))?;
    Ok(out)
}

/// Header fields of a P6 file; `#` comments run to the end of the line.
fn ppm_header(bytes: &[u8]) -> peps_core::Result<([usize; 3], usize)> {
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(format_err(pos, "expected a number in the PPM header"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format_err(start, "header number out of range"))?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(format_err(pos, "expected whitespace after maxval"));
    }
    Ok((fields, pos + 1))
}

fn decode_ppm(bytes: &[u8]) -> peps_core::Result<Image> {
    let ([w, h, maxval], data_at) = ppm_header(bytes)?;
    if w == 0 || h == 0 {
        return Err(format_err(3, "zero image dimension"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(format_err(data_at - 1, format!("maxval {maxval} outside 1..=65535")));
    }
    let depth = if maxval < 256 { 1 } else { 2 };
    let need = w.checked_mul(h).and_then(|p| p.checked_mul(3 * depth));
    let payload = &bytes[data_at..];
    match need {
        Some(n) if n <= payload.len() => {
            let max = maxval as f64;
            let payload = &payload[..n];
            if depth == 1 {
                to_rgb(w, h, 3, payload.iter().map(|&b| f64::from(b).min(max) / max))
            } else {
                let samples = payload.chunks_exact(2).map(|b| f64::from(u16::from_be_bytes([b[0], b[1]])).min(max) / max);
                to_rgb(w, h, 3, samples)
            }
        }
        _ => Err(format_err(
            bytes.len(),
            format!("truncated PPM payload: {w}x{h} needs {} bytes after the header", w * h * 3 * depth),
        )),
    }
}

fn encode_ppm(img: &Image) -> peps_core::Result<Vec<u8>> {
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(rgb_bytes(img)?);
    Ok(out)
}
