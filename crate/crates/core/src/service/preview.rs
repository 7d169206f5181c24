//! Preview images: rate limiting and JPEG/base64 encoding.

use super::protocol::{preview_message, StreamId};
use crate::imaging::{BinaryImage, Frame};
use base64::Engine;
use image::codecs::jpeg::JpegEncoder;
use image::ExtendedColorType;
use std::time::Instant;

/// Previews wider than this are box-downsampled by an integer factor.
pub const PREVIEW_MAX_WIDTH: usize = 320;
const JPEG_QUALITY: u8 = 75;

#[derive(Debug, Clone)]
pub enum PreviewImage {
    Mask(BinaryImage),
    Camera(Frame),
}

fn downsample(
    width: usize,
    height: usize,
    channels: usize,
    data: &[u8],
) -> (usize, usize, Vec<u8>) {
    let factor = width.div_ceil(PREVIEW_MAX_WIDTH).max(1);
    if factor == 1 {
        return (width, height, data.to_vec());
    }
    let (ow, oh) = (width / factor, height / factor);
    let (ow, oh) = (ow.max(1), oh.max(1));
    let mut out = vec![0u8; ow * oh * channels];
    let area = (factor * factor) as u32;
    for oy in 0..oh {
        for ox in 0..ow {
            for ch in 0..channels {
                let mut sum = 0u32;
                for dy in 0..factor {
                    let row = ((oy * factor + dy).min(height - 1)) * width;
                    for dx in 0..factor {
                        let col = (ox * factor + dx).min(width - 1);
                        sum += data[(row + col) * channels + ch] as u32;
                    }
                }
                out[(oy * ow + ox) * channels + ch] = ((sum + area / 2) / area) as u8;
            }
        }
    }
    (ow, oh, out)
}

/// JPEG bytes for a preview; masks are expanded to 0/255 gray first.
pub fn encode_jpeg(image: &PreviewImage) -> Result<Vec<u8>, image::ImageError> {
    let (w, h, channels, raw, color) = match image {
        PreviewImage::Mask(mask) => (
            mask.width(),
            mask.height(),
            1,
            mask.to_gray().values().to_vec(),
            ExtendedColorType::L8,
        ),
        PreviewImage::Camera(frame) => (
            frame.width(),
            frame.height(),
            3,
            frame.to_rgb_bytes(),
            ExtendedColorType::Rgb8,
        ),
    };
    let (w, h, data) = downsample(w, h, channels, &raw);
    let mut out = Vec::new();
    JpegEncoder::new_with_quality(&mut out, JPEG_QUALITY)
        .encode(&data, w as u32, h as u32, color)?;
    Ok(out)
}

/// Full `preview` message text for one image.
pub fn encode_preview(
    image: &PreviewImage,
    stream: StreamId,
    frame_index: u64,
) -> Result<String, image::ImageError> {
    let jpeg = encode_jpeg(image)?;
    let data = base64::engine::general_purpose::STANDARD.encode(jpeg);
    Ok(preview_message(stream, frame_index, &data))
}

/// Decides, per stream, whether a preview is due.
///
/// A preview needs `1000 / fps` ms to have passed both in stream time and on
/// the wall clock since the last one. Replay runs faster than real time; the
/// wall-clock bound keeps encoding work at the display rate regardless.
#[derive(Debug, Default, Clone)]
pub struct PreviewLimiter {
    last_sent: [Option<(u64, Instant)>; StreamId::ALL.len()],
}

impl PreviewLimiter {
    /// Marks and returns true when a preview on `stream` may go out.
    pub fn due(&mut self, stream: StreamId, timestamp: u64, now: Instant, fps: f64) -> bool {
        let slot = &mut self.last_sent[stream.slot()];
        let interval = 1000.0 / fps;
        let ready = match *slot {
            None => true,
            // The stream restarted.
            Some((last, _)) if timestamp < last => true,
            Some((last, at)) => {
                let wall = now.saturating_duration_since(at).as_secs_f64() * 1000.0;
                (timestamp - last) as f64 + 1e-9 >= interval && wall + 1e-9 >= interval
            }
        };
        if ready {
            *slot = Some((timestamp, now));
        }
        ready
    }
}
