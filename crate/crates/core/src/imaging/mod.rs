//! Per-frame pixel operations: mirror, luma, channel excess, binarization,
//! component labeling and centroids.
//!
//! Everything here is a pure function over owned rasters. Coordinates are
//! `(row, col)` for pixel addressing and `(x, y) = (col, row)` for centroids.

mod components;
mod detect;

pub use components::{connected_components, largest_component, Region};
pub use detect::{centroid, detect_marker, Centroid, DetectParams, Detection, REFERENCE_AREA};

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

pub type Rgb = [u8; 3];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImagingError {
    #[error("raster dimensions must be at least 1x1, got {width}x{height}")]
    EmptyRaster { width: usize, height: usize },
    #[error("pixel buffer holds {actual} values, expected {expected}")]
    BufferLength { expected: usize, actual: usize },
    #[error("dimension mismatch: frame is {frame:?}, gray image is {gray:?}")]
    DimensionMismatch {
        frame: (usize, usize),
        gray: (usize, usize),
    },
    #[error("threshold fraction must lie in (0, 1), got {0}")]
    ThresholdFraction(f64),
    #[error("binary image values must be 0 or 1, found {0}")]
    NonBinaryValue(u8),
    #[error("min_area must be at least 1")]
    MinArea,
    #[error("region is empty")]
    EmptyRegion,
    #[error("pixel ({row}, {col}) lies outside the image")]
    OutOfBounds { row: usize, col: usize },
    #[error("pixel ({row}, {col}) appears twice in region")]
    DuplicatePixel { row: usize, col: usize },
    #[error("region pixels are not 8-connected")]
    Disconnected,
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<(), ImagingError> {
    if width == 0 || height == 0 {
        return Err(ImagingError::EmptyRaster { width, height });
    }
    if len != width * height {
        return Err(ImagingError::BufferLength {
            expected: width * height,
            actual: len,
        });
    }
    Ok(())
}

/// An owned RGB raster, row-major, top row first.
#[derive(Clone, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    pixels: Vec<Rgb>,
}

impl Frame {
    pub fn new(width: usize, height: usize, pixels: Vec<Rgb>) -> Result<Self, ImagingError> {
        check_dims(width, height, pixels.len())?;
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, color: Rgb) -> Result<Self, ImagingError> {
        Self::new(width, height, vec![color; width * height])
    }

    /// Builds a frame from packed `r, g, b` bytes.
    pub fn from_rgb_bytes(width: usize, height: usize, bytes: &[u8]) -> Result<Self, ImagingError> {
        if bytes.len() != width * height * 3 {
            return Err(ImagingError::BufferLength {
                expected: width * height * 3,
                actual: bytes.len(),
            });
        }
        let pixels = bytes.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [Rgb] {
        &mut self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> Rgb {
        self.pixels[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Rgb) {
        self.pixels[row * self.width + col] = value;
    }

    pub fn to_rgb_bytes(&self) -> Vec<u8> {
        self.pixels.iter().flatten().copied().collect()
    }
}

impl fmt::Debug for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Frame({}x{})", self.width, self.height)
    }
}

/// Single-channel 8-bit raster.
#[derive(Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    values: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, values: Vec<u8>) -> Result<Self, ImagingError> {
        check_dims(width, height, values.len())?;
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.values[row * self.width + col]
    }
}

impl fmt::Debug for GrayImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GrayImage({}x{})", self.width, self.height)
    }
}

/// Raster of `{0, 1}` values.
#[derive(Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    bits: Vec<u8>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize, bits: Vec<u8>) -> Result<Self, ImagingError> {
        check_dims(width, height, bits.len())?;
        if let Some(&bad) = bits.iter().find(|&&b| b > 1) {
            return Err(ImagingError::NonBinaryValue(bad));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self, ImagingError> {
        Self::new(width, height, vec![0; width * height])
    }

    /// Image with the listed `(row, col)` pixels set.
    pub fn from_pixels(
        width: usize,
        height: usize,
        on: &[(usize, usize)],
    ) -> Result<Self, ImagingError> {
        let mut img = Self::zeros(width, height)?;
        for &(row, col) in on {
            if row >= height || col >= width {
                return Err(ImagingError::OutOfBounds { row, col });
            }
            img.bits[row * width + col] = 1;
        }
        Ok(img)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col] == 1
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    /// Expands to a 0/255 gray image for display or dumping.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            values: self.bits.iter().map(|&b| b * 255).collect(),
        }
    }
}

impl fmt::Debug for BinaryImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "BinaryImage({}x{}, {} set)",
            self.width,
            self.height,
            self.count_ones()
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarkerColor {
    Red,
    Green,
    Blue,
}

impl MarkerColor {
    pub const ALL: [MarkerColor; 3] = [MarkerColor::Red, MarkerColor::Green, MarkerColor::Blue];

    pub fn channel_index(self) -> usize {
        match self {
            MarkerColor::Red => 0,
            MarkerColor::Green => 1,
            MarkerColor::Blue => 2,
        }
    }

    /// The saturated primary for this marker.
    pub fn primary(self) -> Rgb {
        let mut px = [0; 3];
        px[self.channel_index()] = 255;
        px
    }

    pub fn name(self) -> &'static str {
        match self {
            MarkerColor::Red => "red",
            MarkerColor::Green => "green",
            MarkerColor::Blue => "blue",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "red" => Some(MarkerColor::Red),
            "green" => Some(MarkerColor::Green),
            "blue" => Some(MarkerColor::Blue),
            _ => None,
        }
    }
}

impl fmt::Display for MarkerColor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Reverses pixel columns so that on-screen motion follows the user's hand.
pub fn mirror_horizontal(frame: &Frame) -> Frame {
    let mut pixels = Vec::with_capacity(frame.pixels.len());
    for row in frame.pixels.chunks_exact(frame.width) {
        pixels.extend(row.iter().rev());
    }
    Frame {
        width: frame.width,
        height: frame.height,
        pixels,
    }
}

/// BT.601 luma of one pixel, rounded half away from zero.
///
/// Integer form of `0.299 R + 0.587 G + 0.114 B`, exact at the half-way points.
#[inline]
pub fn luma(px: Rgb) -> u8 {
    let weighted = 299 * px[0] as u32 + 587 * px[1] as u32 + 114 * px[2] as u32;
    ((weighted + 500) / 1000).min(255) as u8
}

pub fn to_grayscale(frame: &Frame) -> GrayImage {
    GrayImage {
        width: frame.width,
        height: frame.height,
        values: frame.pixels.iter().map(|&px| luma(px)).collect(),
    }
}

/// `max(0, channel - gray)` per pixel.
pub fn extract_channel_excess(
    frame: &Frame,
    gray: &GrayImage,
    color: MarkerColor,
) -> Result<GrayImage, ImagingError> {
    if frame.dims() != gray.dims() {
        return Err(ImagingError::DimensionMismatch {
            frame: frame.dims(),
            gray: gray.dims(),
        });
    }
    let ch = color.channel_index();
    let values = frame
        .pixels
        .iter()
        .zip(&gray.values)
        .map(|(px, &g)| px[ch].saturating_sub(g))
        .collect();
    Ok(GrayImage {
        width: frame.width,
        height: frame.height,
        values,
    })
}

/// The 8-bit cutoff for a threshold fraction of full scale.
pub fn threshold_cutoff(threshold_fraction: f64) -> Result<u8, ImagingError> {
    if !(threshold_fraction > 0.0 && threshold_fraction < 1.0) {
        return Err(ImagingError::ThresholdFraction(threshold_fraction));
    }
    Ok((threshold_fraction * 255.0).round() as u8)
}

/// White iff `value >= round(threshold_fraction * 255)`.
pub fn binarize(gray: &GrayImage, threshold_fraction: f64) -> Result<BinaryImage, ImagingError> {
    let cutoff = threshold_cutoff(threshold_fraction)?;
    let bits = gray.values.iter().map(|&v| (v >= cutoff) as u8).collect();
    Ok(BinaryImage {
        width: gray.width,
        height: gray.height,
        bits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_frame(max: usize) -> impl Strategy<Value = Frame> {
        (1..=max, 1..=max).prop_flat_map(|(w, h)| {
            proptest::collection::vec(any::<[u8; 3]>(), w * h)
                .prop_map(move |px| Frame::new(w, h, px).unwrap())
        })
    }

    #[test]
    fn frame_rejects_bad_lengths() {
        assert!(matches!(
            Frame::new(2, 2, vec![[0; 3]; 3]),
            Err(ImagingError::BufferLength {
                expected: 4,
                actual: 3
            })
        ));
        assert!(matches!(
            Frame::new(0, 2, vec![]),
            Err(ImagingError::EmptyRaster { .. })
        ));
        assert!(matches!(
            BinaryImage::new(1, 1, vec![2]),
            Err(ImagingError::NonBinaryValue(2))
        ));
    }

    #[test]
    fn mirror_single_pixel_is_identity() {
        let f = Frame::new(1, 1, vec![[1, 2, 3]]).unwrap();
        assert_eq!(mirror_horizontal(&f), f);
    }

    #[test]
    fn mirror_swaps_two_columns() {
        let f = Frame::new(2, 1, vec![[10, 0, 0], [0, 20, 0]]).unwrap();
        let m = mirror_horizontal(&f);
        assert_eq!(m.pixels(), &[[0, 20, 0], [10, 0, 0]]);
    }

    #[test]
    fn grayscale_reference_values() {
        assert_eq!(luma([255, 255, 255]), 255);
        // 0.299 * 255 = 76.245
        assert_eq!(luma([255, 0, 0]), 76);
        // 0.587 * 255 = 149.685
        assert_eq!(luma([0, 255, 0]), 150);
        // 0.114 * 255 = 29.07
        assert_eq!(luma([0, 0, 255]), 29);
    }

    #[test]
    fn grayscale_matches_float_formula() {
        // Independent evaluation in f64 on a lattice that avoids exact halves.
        for r in (0..=255).step_by(7) {
            for g in (0..=255).step_by(11) {
                for b in (0..=255).step_by(13) {
                    let exact = 0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64;
                    if (exact.fract() - 0.5).abs() < 1e-6 {
                        continue;
                    }
                    assert_eq!(luma([r, g, b]) as f64, exact.round(), "({r},{g},{b})");
                }
            }
        }
    }

    #[test]
    fn gray_pixels_are_fixed_points() {
        for v in 0..=255u8 {
            assert_eq!(luma([v, v, v]), v);
        }
    }

    #[test]
    fn channel_excess_examples() {
        let f = Frame::new(3, 1, vec![[100, 100, 100], [255, 0, 0], [0, 255, 0]]).unwrap();
        let g = to_grayscale(&f);
        let red = extract_channel_excess(&f, &g, MarkerColor::Red).unwrap();
        assert_eq!(red.values(), &[0, 179, 0]);
    }

    #[test]
    fn channel_excess_dimension_mismatch() {
        let f = Frame::filled(3, 2, [0; 3]).unwrap();
        let g = GrayImage::new(2, 3, vec![0; 6]).unwrap();
        assert!(matches!(
            extract_channel_excess(&f, &g, MarkerColor::Blue),
            Err(ImagingError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn binarize_cutoff_boundary() {
        let g = GrayImage::new(3, 1, vec![0, 50, 51]).unwrap();
        let b = binarize(&g, 0.20).unwrap();
        assert_eq!(b.bits(), &[0, 0, 1]);
        assert_eq!(threshold_cutoff(0.2).unwrap(), 51);
    }

    #[test]
    fn binarize_rejects_fraction_out_of_range() {
        let g = GrayImage::new(1, 1, vec![0]).unwrap();
        for bad in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(binarize(&g, bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn binarize_full_white() {
        let g = GrayImage::new(4, 4, vec![255; 16]).unwrap();
        for frac in [0.001, 0.2, 0.5, 0.999] {
            assert_eq!(binarize(&g, frac).unwrap().count_ones(), 16);
        }
    }

    proptest! {
        #[test]
        fn mirror_is_involution(f in arb_frame(12)) {
            prop_assert_eq!(mirror_horizontal(&mirror_horizontal(&f)), f);
        }

        #[test]
        fn mirror_preserves_row_multisets(f in arb_frame(12)) {
            let m = mirror_horizontal(&f);
            for (a, b) in f.pixels().chunks(f.width()).zip(m.pixels().chunks(m.width())) {
                let mut a = a.to_vec();
                let mut b = b.to_vec();
                a.sort();
                b.sort();
                prop_assert_eq!(a, b);
            }
        }

        #[test]
        fn channel_excess_never_exceeds_channel(f in arb_frame(10)) {
            let g = to_grayscale(&f);
            for c in MarkerColor::ALL {
                let ex = extract_channel_excess(&f, &g, c).unwrap();
                for ((px, &gv), &e) in f.pixels().iter().zip(g.values()).zip(ex.values()) {
                    let ch = px[c.channel_index()];
                    if ch <= gv {
                        prop_assert_eq!(e, 0);
                    } else {
                        prop_assert_eq!(e, ch - gv);
                    }
                }
            }
        }

        #[test]
        fn binarize_is_monotone(
            values in proptest::collection::vec(any::<u8>(), 1..200),
            a in 0.001f64..0.999,
            b in 0.001f64..0.999,
        ) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let g = GrayImage::new(values.len(), 1, values).unwrap();
            prop_assert!(binarize(&g, lo).unwrap().count_ones() >= binarize(&g, hi).unwrap().count_ones());
        }
    }
}
