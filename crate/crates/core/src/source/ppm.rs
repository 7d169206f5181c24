//! Binary PPM (P6) and PGM (P5) with maxval 255.
//! <https://netpbm.sourceforge.net/doc/ppm.html>

use crate::imaging::{Frame, GrayImage};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PpmError {
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic {
        expected: &'static str,
        found: String,
    },
    #[error("malformed header: {0}")]
    BadHeader(String),
    #[error("unsupported maxval {0} (only 255 is accepted)")]
    UnsupportedMaxval(u32),
    #[error("truncated payload: need {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },
}

struct Header {
    width: usize,
    height: usize,
    data_offset: usize,
}

fn parse_header(bytes: &[u8], magic: &'static str) -> Result<Header, PpmError> {
    let mut pos = 0;
    let mut tokens = Vec::with_capacity(4);
    while tokens.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            if tokens.is_empty() {
                return Err(PpmError::BadMagic {
                    expected: magic,
                    found: String::new(),
                });
            }
            return Err(PpmError::BadHeader("header ends early".into()));
        }
        let tok = String::from_utf8_lossy(&bytes[start..pos]).into_owned();
        if tokens.is_empty() && tok != magic {
            return Err(PpmError::BadMagic {
                expected: magic,
                found: tok,
            });
        }
        tokens.push(tok);
    }
    // Exactly one whitespace byte separates maxval from the raster.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(PpmError::BadHeader("missing separator after maxval".into()));
    }
    let num = |s: &str, what: &str| -> Result<usize, PpmError> {
        s.parse::<usize>()
            .map_err(|_| PpmError::BadHeader(format!("invalid {what} {s:?}")))
    };
    let width = num(&tokens[1], "width")?;
    let height = num(&tokens[2], "height")?;
    let maxval = num(&tokens[3], "maxval")?;
    if maxval != 255 {
        return Err(PpmError::UnsupportedMaxval(
            maxval.min(u32::MAX as usize) as u32
        ));
    }
    if width == 0 || height == 0 {
        return Err(PpmError::BadHeader(format!(
            "zero dimension {width}x{height}"
        )));
    }
    Ok(Header {
        width,
        height,
        data_offset: pos + 1,
    })
}

pub fn parse_ppm(bytes: &[u8]) -> Result<Frame, PpmError> {
    let h = parse_header(bytes, "P6")?;
    let expected = h.width * h.height * 3;
    let payload = &bytes[h.data_offset..];
    if payload.len() < expected {
        return Err(PpmError::Truncated {
            expected,
            actual: payload.len(),
        });
    }
    Ok(
        Frame::from_rgb_bytes(h.width, h.height, &payload[..expected])
            .expect("dimensions checked against payload"),
    )
}

pub fn parse_pgm(bytes: &[u8]) -> Result<GrayImage, PpmError> {
    let h = parse_header(bytes, "P5")?;
    let expected = h.width * h.height;
    let payload = &bytes[h.data_offset..];
    if payload.len() < expected {
        return Err(PpmError::Truncated {
            expected,
            actual: payload.len(),
        });
    }
    Ok(
        GrayImage::new(h.width, h.height, payload[..expected].to_vec())
            .expect("dimensions checked against payload"),
    )
}

pub fn encode_ppm(frame: &Frame) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", frame.width(), frame.height()).into_bytes();
    out.reserve(frame.pixels().len() * 3);
    for px in frame.pixels() {
        out.extend_from_slice(px);
    }
    out
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.values());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_red_pixel() {
        let mut bytes = b"P6 1 1 255 ".to_vec();
        bytes.extend_from_slice(&[255, 0, 0]);
        let f = parse_ppm(&bytes).unwrap();
        assert_eq!(f.dims(), (1, 1));
        assert_eq!(f.pixels(), &[[255, 0, 0]]);
    }

    #[test]
    fn rejects_p5_as_ppm() {
        let bytes = b"P5 1 1 255 \x00";
        assert!(matches!(parse_ppm(bytes), Err(PpmError::BadMagic { .. })));
        assert!(matches!(parse_ppm(b""), Err(PpmError::BadMagic { .. })));
    }

    #[test]
    fn rejects_truncated_payload() {
        let mut bytes = b"P6\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[0; 9]);
        assert_eq!(
            parse_ppm(&bytes),
            Err(PpmError::Truncated {
                expected: 12,
                actual: 9
            })
        );
    }

    #[test]
    fn rejects_other_maxval() {
        let bytes = b"P6 1 1 65535 \x00\x00\x00\x00\x00\x00";
        assert_eq!(parse_ppm(bytes), Err(PpmError::UnsupportedMaxval(65535)));
    }

    #[test]
    fn rejects_garbage_dimensions() {
        assert!(matches!(
            parse_ppm(b"P6 a 1 255 \0\0\0"),
            Err(PpmError::BadHeader(_))
        ));
        assert!(matches!(parse_ppm(b"P6 1 1"), Err(PpmError::BadHeader(_))));
    }

    #[test]
    fn skips_comments() {
        let mut bytes = b"P6\n# made by hand\n1 1\n255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3]);
        assert_eq!(parse_ppm(&bytes).unwrap().pixels(), &[[1, 2, 3]]);
    }

    #[test]
    fn payload_byte_that_looks_like_whitespace() {
        // First raster byte is '\n'; only one separator byte may be consumed.
        let mut bytes = b"P6 1 1 255\n".to_vec();
        bytes.extend_from_slice(&[b'\n', 0, 7]);
        assert_eq!(parse_ppm(&bytes).unwrap().pixels(), &[[b'\n', 0, 7]]);
    }

    #[test]
    fn agrees_with_reference_decoder() {
        let mut px = Vec::new();
        for i in 0..12u8 {
            px.push([i * 20, 255 - i, i ^ 0x5a]);
        }
        let f = Frame::new(4, 3, px).unwrap();
        let bytes = encode_ppm(&f);
        let reference = image::load_from_memory_with_format(&bytes, image::ImageFormat::Pnm)
            .unwrap()
            .to_rgb8();
        assert_eq!(reference.dimensions(), (4, 3));
        assert_eq!(reference.as_raw(), &f.to_rgb_bytes());
        assert_eq!(parse_ppm(&bytes).unwrap(), f);
    }

    proptest! {
        #[test]
        fn ppm_round_trip(w in 1usize..10, h in 1usize..10, seed in any::<u64>()) {
            let px = (0..w * h)
                .map(|i| {
                    let v = seed.wrapping_mul(i as u64 + 1).to_le_bytes();
                    [v[0], v[3], v[6]]
                })
                .collect();
            let f = Frame::new(w, h, px).unwrap();
            prop_assert_eq!(parse_ppm(&encode_ppm(&f)).unwrap(), f);
        }

        #[test]
        fn pgm_round_trip(values in proptest::collection::vec(any::<u8>(), 1..64)) {
            let g = GrayImage::new(values.len(), 1, values).unwrap();
            prop_assert_eq!(parse_pgm(&encode_pgm(&g)).unwrap(), g);
        }
    }
}
