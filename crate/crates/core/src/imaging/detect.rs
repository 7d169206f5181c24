use super::{
    binarize, extract_channel_excess, largest_component, Frame, GrayImage, ImagingError,
    MarkerColor, Region,
};
use serde::{Deserialize, Serialize};

/// Fractional pixel position; `x` is the column, `y` the row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Centroid {
    pub x: f64,
    pub y: f64,
}

/// Unweighted mean of the region's pixel coordinates.
pub fn centroid(region: &Region) -> Centroid {
    let n = region.area() as f64;
    let (sr, sc) = region
        .pixels()
        .iter()
        .fold((0u64, 0u64), |(sr, sc), &(r, c)| {
            (sr + r as u64, sc + c as u64)
        });
    Centroid {
        x: sc as f64 / n,
        y: sr as f64 / n,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectParams {
    pub threshold_fraction: f64,
    pub min_area: usize,
}

impl Default for DetectParams {
    fn default() -> Self {
        Self {
            threshold_fraction: 0.20,
            min_area: 150,
        }
    }
}

/// Frame area that a configured `min_area` refers to.
pub const REFERENCE_AREA: usize = 640 * 480;

impl DetectParams {
    /// Rescales `min_area` from the 640x480 reference to a frame of the given size.
    pub fn scaled_for(self, width: usize, height: usize) -> Self {
        let scaled =
            (self.min_area as f64 * (width * height) as f64 / REFERENCE_AREA as f64).round();
        Self {
            min_area: (scaled as usize).max(1),
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub centroid: Centroid,
    pub area: usize,
}

/// Channel excess, threshold, largest qualifying blob, centroid.
///
/// `frame` is expected to be already mirrored and `gray` its luma.
pub fn detect_marker(
    frame: &Frame,
    gray: &GrayImage,
    color: MarkerColor,
    params: &DetectParams,
) -> Result<Option<Detection>, ImagingError> {
    let excess = extract_channel_excess(frame, gray, color)?;
    let mask = binarize(&excess, params.threshold_fraction)?;
    Ok(
        largest_component(&mask, params.min_area)?.map(|region| Detection {
            centroid: centroid(&region),
            area: region.area(),
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::{mirror_horizontal, to_grayscale};
    use proptest::prelude::*;

    fn disk_frame(w: usize, h: usize, cx: f64, cy: f64, radius: f64, color: MarkerColor) -> Frame {
        let mut f = Frame::filled(w, h, [0, 0, 0]).unwrap();
        for r in 0..h {
            for c in 0..w {
                let (dx, dy) = (c as f64 - cx, r as f64 - cy);
                if dx * dx + dy * dy <= radius * radius {
                    f.set(r, c, color.primary());
                }
            }
        }
        f
    }

    #[test]
    fn centroid_examples() {
        let single = Region::new(vec![(3, 7)], 10, 10).unwrap();
        assert_eq!(centroid(&single), Centroid { x: 7.0, y: 3.0 });

        let block = Region::new(vec![(1, 1), (1, 2), (2, 1), (2, 2)], 4, 4).unwrap();
        assert_eq!(centroid(&block), Centroid { x: 1.5, y: 1.5 });

        let l = Region::new(vec![(0, 0), (0, 1), (1, 0)], 2, 2).unwrap();
        let c = centroid(&l);
        assert!((c.x - 1.0 / 3.0).abs() < 1e-12 && (c.y - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn detects_red_disk() {
        let f = disk_frame(64, 48, 20.0, 30.0, 5.0, MarkerColor::Red);
        let g = to_grayscale(&f);
        let params = DetectParams::default().scaled_for(64, 48);
        let d = detect_marker(&f, &g, MarkerColor::Red, &params)
            .unwrap()
            .unwrap();
        assert!((d.centroid.x - 20.0).abs() <= 0.5);
        assert!((d.centroid.y - 30.0).abs() <= 0.5);
        // 81 lattice points within distance 5 of an integer center
        assert_eq!(d.area, 81);

        assert_eq!(
            detect_marker(&f, &g, MarkerColor::Blue, &params).unwrap(),
            None
        );
    }

    #[test]
    fn black_frame_has_no_markers() {
        let f = Frame::filled(32, 24, [0, 0, 0]).unwrap();
        let g = to_grayscale(&f);
        for c in MarkerColor::ALL {
            assert_eq!(
                detect_marker(
                    &f,
                    &g,
                    c,
                    &DetectParams {
                        min_area: 1,
                        ..Default::default()
                    }
                )
                .unwrap(),
                None
            );
        }
    }

    #[test]
    fn min_area_scaling() {
        let p = DetectParams::default();
        assert_eq!(p.scaled_for(640, 480).min_area, 150);
        assert_eq!(p.scaled_for(320, 240).min_area, 38);
        assert_eq!(p.scaled_for(1, 1).min_area, 1);
    }

    #[test]
    fn detection_after_mirror_flips_column() {
        let f = disk_frame(64, 48, 10.0, 20.0, 4.0, MarkerColor::Green);
        let m = mirror_horizontal(&f);
        let g = to_grayscale(&m);
        let params = DetectParams {
            min_area: 5,
            ..Default::default()
        };
        let d = detect_marker(&m, &g, MarkerColor::Green, &params)
            .unwrap()
            .unwrap();
        assert_eq!(d.centroid, Centroid { x: 53.0, y: 20.0 });
    }

    proptest! {
        #[test]
        fn centroid_inside_bounding_box(
            pixels in proptest::collection::btree_set((0usize..8, 0usize..8), 1..30)
        ) {
            let img = crate::imaging::BinaryImage::from_pixels(
                8, 8, &pixels.into_iter().collect::<Vec<_>>()).unwrap();
            for region in crate::imaging::connected_components(&img) {
                let c = centroid(&region);
                let (r0, c0, r1, c1) = region.bounding_box();
                prop_assert!(c.y >= r0 as f64 && c.y <= r1 as f64);
                prop_assert!(c.x >= c0 as f64 && c.x <= c1 as f64);
            }
        }

        #[test]
        fn translation_equivariance(
            cx in 12.0f64..40.0, cy in 12.0f64..30.0, dr in -6i32..6, dc in -6i32..6
        ) {
            let params = DetectParams { min_area: 5, ..Default::default() };
            let detect = |x: f64, y: f64| {
                let f = disk_frame(56, 44, x, y, 5.0, MarkerColor::Red);
                let g = to_grayscale(&f);
                detect_marker(&f, &g, MarkerColor::Red, &params).unwrap().unwrap().centroid
            };
            let a = detect(cx, cy);
            let b = detect(cx + dc as f64, cy + dr as f64);
            prop_assert!((b.x - a.x - dc as f64).abs() <= 0.5);
            prop_assert!((b.y - a.y - dr as f64).abs() <= 0.5);
        }
    }
}
