// Copyright 2026 The alphadrop Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

use std::fs;
use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;

use super::DataError;
use crate::math::Matrix;

/// Unsigned-byte, rank-3 tensor.
pub const IMAGE_MAGIC: u32 = 0x0000_0803;
/// Unsigned-byte, rank-1 tensor.
pub const LABEL_MAGIC: u32 = 0x0000_0801;

const MAX_LABEL: u8 = 9;

fn read_bytes(path: &Path) -> Result<Vec<u8>, DataError> {
    let io = |source| DataError::Io {
        path: path.display().to_string(),
        source,
    };
    let raw = fs::read(path).map_err(io)?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice()).read_to_end(&mut out).map_err(io)?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

struct Header {
    dims: Vec<u32>,
    payload: usize,
}

fn parse_header(bytes: &[u8], magic: u32, rank: usize, path: &str) -> Result<Header, DataError> {
    let header_len = 4 * (rank + 1);
    if bytes.len() < 4 {
        return Err(DataError::Truncated {
            path: path.into(),
            needed: 4,
            have: bytes.len(),
        });
    }
    let word = |i: usize| u32::from_be_bytes([bytes[4 * i], bytes[4 * i + 1], bytes[4 * i + 2], bytes[4 * i + 3]]);
    let found = word(0);
    if found != magic {
        return Err(DataError::BadMagic {
            path: path.into(),
            found,
            expected: magic,
        });
    }
    if bytes.len() < header_len {
        return Err(DataError::Truncated {
            path: path.into(),
            needed: header_len,
            have: bytes.len(),
        });
    }
    let dims: Vec<u32> = (1..=rank).map(word).collect();
    let payload = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d as usize))
        .and_then(|p| p.checked_add(header_len))
        .ok_or_else(|| DataError::DimensionOverflow {
            path: path.into(),
            dims: dims.clone(),
        })?;
    match bytes.len() {
        n if n < payload => Err(DataError::Truncated {
            path: path.into(),
            needed: payload,
            have: n,
        }),
        n if n > payload => Err(DataError::TrailingData {
            path: path.into(),
            extra: n - payload,
        }),
        _ => Ok(Header { dims, payload: header_len }),
    }
}

/// Parse an in-memory IDX image file into an `n × (rows·cols)` matrix,
/// scaling bytes by 1/255. `origin` labels error messages.
pub fn parse_idx_images(bytes: &[u8], origin: &str) -> Result<Matrix, DataError> {
    let h = parse_header(bytes, IMAGE_MAGIC, 3, origin)?;
    let n = h.dims[0] as usize;
    let width = h.dims[1] as usize * h.dims[2] as usize;
    let pixels = bytes[h.payload..].iter().map(|&b| b as f64 / 255.0).collect();
    Ok(Matrix::from_vec(n, width, pixels)?)
}

pub fn parse_idx_labels(bytes: &[u8], origin: &str) -> Result<Vec<usize>, DataError> {
    let h = parse_header(bytes, LABEL_MAGIC, 1, origin)?;
    bytes[h.payload..]
        .iter()
        .enumerate()
        .map(|(index, &label)| {
            if label > MAX_LABEL {
                Err(DataError::LabelRange {
                    path: origin.into(),
                    index,
                    label,
                })
            } else {
                Ok(label as usize)
            }
        })
        .collect()
}

/// Load an IDX image file, plain or gzip-compressed.
pub fn load_idx_images(path: impl AsRef<Path>) -> Result<Matrix, DataError> {
    let path = path.as_ref();
    parse_idx_images(&read_bytes(path)?, &path.display().to_string())
}

/// Load an IDX label file, plain or gzip-compressed.
pub fn load_idx_labels(path: impl AsRef<Path>) -> Result<Vec<usize>, DataError> {
    let path = path.as_ref();
    parse_idx_labels(&read_bytes(path)?, &path.display().to_string())
}

/// Write `images` (values in `[0, 1]`, rounded to the byte grid) as an
/// uncompressed IDX file with the given per-image shape.
pub fn write_idx_images(
    path: impl AsRef<Path>,
    images: &Matrix,
    rows: u32,
    cols: u32,
) -> Result<(), DataError> {
    let path = path.as_ref();
    if rows as usize * cols as usize != images.cols() {
        return Err(DataError::Invalid(format!(
            "image shape {rows}x{cols} does not match {} columns",
            images.cols()
        )));
    }
    let mut out = Vec::with_capacity(16 + images.len());
    out.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
    for d in [images.rows() as u32, rows, cols] {
        out.extend_from_slice(&d.to_be_bytes());
    }
    for &v in images.as_slice() {
        if !(0.0..=1.0).contains(&v) {
            return Err(DataError::PixelRange(v));
        }
        out.push((v * 255.0).round() as u8);
    }
    write(path, &out)
}

pub fn write_idx_labels(path: impl AsRef<Path>, labels: &[usize]) -> Result<(), DataError> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    for &l in labels {
        let byte = u8::try_from(l).ok().filter(|&b| b <= MAX_LABEL);
        out.push(byte.ok_or_else(|| DataError::Invalid(format!("label {l} is not a digit")))?);
    }
    write(path.as_ref(), &out)
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), DataError> {
    fs::write(path, bytes).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use flate2::write::GzEncoder;
    use flate2::Compression;
    use std::io::Write;

    fn image_fixture() -> Vec<u8> {
        let mut b = IMAGE_MAGIC.to_be_bytes().to_vec();
        for d in [1u32, 2, 2] {
            b.extend_from_slice(&d.to_be_bytes());
        }
        b.extend_from_slice(&[0, 128, 255, 0]);
        b
    }

    #[test]
    fn one_image_fixture() {
        let m = parse_idx_images(&image_fixture(), "fixture").unwrap();
        assert_eq!(m.dims(), (1, 4));
        assert_eq!(m.row(0), &[0.0, 128.0 / 255.0, 1.0, 0.0]);
    }

    #[test]
    fn wrong_magic_for_images() {
        let mut b = image_fixture();
        b[3] = 0x01;
        assert!(matches!(
            parse_idx_images(&b, "x"),
            Err(DataError::BadMagic { found: 0x801, .. })
        ));
    }

    #[test]
    fn truncated_pixels_and_header() {
        let b = image_fixture();
        assert!(matches!(
            parse_idx_images(&b[..b.len() - 1], "x"),
            Err(DataError::Truncated { needed: 20, have: 19, .. })
        ));
        assert!(matches!(parse_idx_images(&b[..9], "x"), Err(DataError::Truncated { .. })));
        assert!(matches!(parse_idx_images(&b[..2], "x"), Err(DataError::Truncated { .. })));
    }

    #[test]
    fn trailing_bytes_rejected() {
        let mut b = image_fixture();
        b.push(7);
        assert!(matches!(parse_idx_images(&b, "x"), Err(DataError::TrailingData { extra: 1, .. })));
    }

    #[test]
    fn dimension_overflow() {
        let mut b = IMAGE_MAGIC.to_be_bytes().to_vec();
        for _ in 0..3 {
            b.extend_from_slice(&u32::MAX.to_be_bytes());
        }
        let r = parse_idx_images(&b, "x");
        if usize::BITS == 64 {
            assert!(matches!(r, Err(DataError::DimensionOverflow { .. })));
        } else {
            assert!(r.is_err());
        }
    }

    fn labels(bytes: &[u8]) -> Vec<u8> {
        let mut b = LABEL_MAGIC.to_be_bytes().to_vec();
        b.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
        b.extend_from_slice(bytes);
        b
    }

    #[test]
    fn label_fixtures() {
        assert_eq!(parse_idx_labels(&labels(&[3, 7]), "x").unwrap(), vec![3, 7]);
        assert!(parse_idx_labels(&labels(&[]), "x").unwrap().is_empty());
        assert!(matches!(
            parse_idx_labels(&labels(&[1, 12]), "x"),
            Err(DataError::LabelRange { index: 1, label: 12, .. })
        ));
    }

    #[test]
    fn gzip_is_sniffed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.gz");
        let mut enc = GzEncoder::new(Vec::new(), Compression::default());
        enc.write_all(&image_fixture()).unwrap();
        fs::write(&path, enc.finish().unwrap()).unwrap();
        assert_eq!(load_idx_images(&path).unwrap().row(0)[2], 1.0);
    }

    #[test]
    fn write_then_load() {
        let dir = tempfile::tempdir().unwrap();
        let m = Matrix::from_rows(&[[0.0, 1.0, 0.2, 0.6], [1.0, 1.0, 0.0, 0.0]]);
        write_idx_images(dir.path().join("i"), &m, 2, 2).unwrap();
        let back = load_idx_images(dir.path().join("i")).unwrap();
        for (a, b) in m.as_slice().iter().zip(back.as_slice()) {
            assert!((a - b).abs() <= 0.5 / 255.0);
        }
        write_idx_labels(dir.path().join("l"), &[0, 9, 4]).unwrap();
        assert_eq!(load_idx_labels(dir.path().join("l")).unwrap(), vec![0, 9, 4]);
        assert!(write_idx_labels(dir.path().join("l"), &[10]).is_err());
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(load_idx_labels("/nonexistent/labels"), Err(DataError::Io { .. })));
    }
}
