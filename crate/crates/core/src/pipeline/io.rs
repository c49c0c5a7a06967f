use std::fs;
use std::io::Cursor;
use std::path::Path;

use image::{ColorType, GrayImage, ImageFormat, ImageReader};

use crate::error::{Error, Result};
use crate::grid::ScalarField;

const PNG_MAGIC: &[u8] = b"\x89PNG";

/// Reads an 8-bit grayscale PGM (P5) or PNG and scales it to `[0, 1]`.
pub fn load_image(path: impl AsRef<Path>) -> Result<ScalarField> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    decode_image(&fs::read(path)?)
}

/// Decodes PGM or PNG bytes, detected by their magic number.
pub fn decode_image(bytes: &[u8]) -> Result<ScalarField> {
    if bytes.starts_with(PNG_MAGIC) {
        decode_png(bytes)
    } else if bytes.starts_with(b"P5") {
        decode_pgm(bytes)
    } else if bytes.len() >= 2 && bytes[0] == b'P' && bytes[1].is_ascii_digit() {
        Err(Error::UnsupportedFormat(format!(
            "netpbm variant P{} (only binary grayscale P5 is read)",
            bytes[1] as char
        )))
    } else {
        Err(Error::UnsupportedFormat("not a PGM or PNG file".into()))
    }
}

/// Writes a field as 8-bit grayscale; the format follows the extension
/// (`.pgm` or `.png`). Values are clamped to `[0, 1]` and rounded.
pub fn save_image(field: &ScalarField, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    let bytes = match ext.as_deref() {
        Some("pgm") => encode_pgm(field),
        Some("png") => encode_png(field)?,
        _ => {
            return Err(Error::UnsupportedFormat(format!(
                "cannot infer image format from {}",
                path.display()
            )))
        }
    };
    fs::write(path, bytes)?;
    Ok(())
}

pub fn to_bytes(field: &ScalarField) -> Vec<u8> {
    field
        .values()
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect()
}

pub fn encode_pgm(field: &ScalarField) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", field.width(), field.height()).into_bytes();
    out.extend(to_bytes(field));
    out
}

pub fn encode_png(field: &ScalarField) -> Result<Vec<u8>> {
    let img = GrayImage::from_raw(field.width() as u32, field.height() as u32, to_bytes(field))
        .expect("buffer length matches dimensions");
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, ImageFormat::Png)
        .map_err(|e| Error::UnsupportedFormat(e.to_string()))?;
    Ok(out.into_inner())
}

fn decode_png(bytes: &[u8]) -> Result<ScalarField> {
    let reader = ImageReader::with_format(Cursor::new(bytes), ImageFormat::Png);
    let img = reader
        .decode()
        .map_err(|e| Error::MalformedHeader(format!("png: {e}")))?;
    match img.color() {
        ColorType::L8 => {}
        ColorType::L16 => return Err(Error::UnsupportedBitDepth("16-bit grayscale png".into())),
        other => {
            return Err(Error::UnsupportedFormat(format!(
                "png color type {other:?} (grayscale expected)"
            )))
        }
    }
    let gray = img.into_luma8();
    let (w, h) = gray.dimensions();
    let values = gray
        .into_raw()
        .into_iter()
        .map(|b| b as f64 / 255.0)
        .collect();
    ScalarField::from_vec(h as usize, w as usize, values)
}

/// Header tokenizer: whitespace separated, `#` comments run to end of line.
struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Header<'a> {
    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::MalformedHeader(format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .expect("digits are ascii")
            .parse()
            .map_err(|_| Error::MalformedHeader(format!("{what} out of range")))
    }
}

fn decode_pgm(bytes: &[u8]) -> Result<ScalarField> {
    let mut header = Header { bytes, pos: 2 };
    let width = header.number("width")?;
    let height = header.number("height")?;
    let maxval = header.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader("zero image dimension".into()));
    }
    if maxval == 0 {
        return Err(Error::MalformedHeader("maxval must be positive".into()));
    }
    if maxval > 255 {
        return Err(Error::UnsupportedBitDepth(format!(
            "maxval {maxval} needs 16-bit samples"
        )));
    }
    match bytes.get(header.pos) {
        Some(c) if c.is_ascii_whitespace() => header.pos += 1,
        _ => {
            return Err(Error::MalformedHeader(
                "missing separator after maxval".into(),
            ))
        }
    }
    let data = &bytes[header.pos..];
    let n = width * height;
    if data.len() < n {
        return Err(Error::MalformedHeader(format!(
            "expected {n} pixel bytes, found {}",
            data.len()
        )));
    }
    let scale = maxval as f64;
    let values = data[..n]
        .iter()
        .map(|&b| (b as f64 / scale).min(1.0))
        .collect();
    ScalarField::from_vec(height, width, values)
}
