//! 8-connected component labeling.

use super::{BinaryImage, ImagingError};
use std::cmp::Ordering;

/// A maximal 8-connected set of foreground pixels.
///
/// Pixels are stored in row-major order, so the first one is the
/// lexicographically smallest `(row, col)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    pixels: Vec<(usize, usize)>,
}

impl Region {
    /// Validates a pixel set against image bounds and 8-connectivity.
    pub fn new(
        mut pixels: Vec<(usize, usize)>,
        width: usize,
        height: usize,
    ) -> Result<Self, ImagingError> {
        if pixels.is_empty() {
            return Err(ImagingError::EmptyRegion);
        }
        pixels.sort_unstable();
        for w in pixels.windows(2) {
            if w[0] == w[1] {
                return Err(ImagingError::DuplicatePixel {
                    row: w[0].0,
                    col: w[0].1,
                });
            }
        }
        if let Some(&(row, col)) = pixels.iter().find(|&&(r, c)| r >= height || c >= width) {
            return Err(ImagingError::OutOfBounds { row, col });
        }
        let img = BinaryImage::from_pixels(width, height, &pixels)?;
        let labeling = Labeling::compute(&img);
        if labeling.areas.len() != 1 {
            return Err(ImagingError::Disconnected);
        }
        Ok(Self { pixels })
    }

    pub fn pixels(&self) -> &[(usize, usize)] {
        &self.pixels
    }

    pub fn area(&self) -> usize {
        self.pixels.len()
    }

    pub fn min_pixel(&self) -> (usize, usize) {
        self.pixels[0]
    }

    /// `(min_row, min_col, max_row, max_col)`, inclusive.
    pub fn bounding_box(&self) -> (usize, usize, usize, usize) {
        let mut bb = (usize::MAX, usize::MAX, 0, 0);
        for &(r, c) in &self.pixels {
            bb.0 = bb.0.min(r);
            bb.1 = bb.1.min(c);
            bb.2 = bb.2.max(r);
            bb.3 = bb.3.max(c);
        }
        bb
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        self.pixels.binary_search(&(row, col)).is_ok()
    }
}

/// Dense labels plus per-component statistics. Label 0 is background;
/// component `k` carries label `k + 1`, numbered in raster order of first
/// appearance.
pub(crate) struct Labeling {
    pub labels: Vec<u32>,
    pub areas: Vec<usize>,
    pub first: Vec<(usize, usize)>,
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        let next = parent[x as usize];
        parent[x as usize] = parent[next as usize];
        x = next;
    }
    x
}

fn union(parent: &mut [u32], a: u32, b: u32) -> u32 {
    let ra = find(parent, a);
    let rb = find(parent, b);
    // Keep the smaller label as root so roots stay in raster order.
    let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
    parent[hi as usize] = lo;
    lo
}

impl Labeling {
    pub fn compute(img: &BinaryImage) -> Self {
        let (w, h) = img.dims();
        let bits = img.bits();
        let mut labels = vec![0u32; w * h];
        let mut parent: Vec<u32> = vec![0];

        for row in 0..h {
            let base = row * w;
            for col in 0..w {
                if bits[base + col] == 0 {
                    continue;
                }
                let mut label = 0u32;
                let merge = |label: &mut u32, n: u32, parent: &mut Vec<u32>| {
                    if n == 0 {
                        return;
                    }
                    *label = if *label == 0 {
                        n
                    } else {
                        union(parent, *label, n)
                    };
                };
                if col > 0 {
                    merge(&mut label, labels[base + col - 1], &mut parent);
                }
                if row > 0 {
                    let up = base - w;
                    if col > 0 {
                        merge(&mut label, labels[up + col - 1], &mut parent);
                    }
                    merge(&mut label, labels[up + col], &mut parent);
                    if col + 1 < w {
                        merge(&mut label, labels[up + col + 1], &mut parent);
                    }
                }
                if label == 0 {
                    label = parent.len() as u32;
                    parent.push(label);
                }
                labels[base + col] = label;
            }
        }

        // Resolve provisional labels to dense component ids.
        let mut dense = vec![0u32; parent.len()];
        let mut areas = Vec::new();
        let mut first = Vec::new();
        for i in 1..parent.len() {
            let root = find(&mut parent, i as u32) as usize;
            if root == i {
                areas.push(0);
                first.push((usize::MAX, usize::MAX));
                dense[i] = areas.len() as u32;
            } else {
                dense[i] = dense[root];
            }
        }
        for (idx, l) in labels.iter_mut().enumerate() {
            if *l != 0 {
                *l = dense[*l as usize];
                let k = *l as usize - 1;
                if areas[k] == 0 {
                    first[k] = (idx / w, idx % w);
                }
                areas[k] += 1;
            }
        }
        Self {
            labels,
            areas,
            first,
        }
    }

    /// Component indices in output order: decreasing area, then smallest first pixel.
    pub fn ordered(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.areas.len()).collect();
        order.sort_by(|&a, &b| self.compare(a, b));
        order
    }

    fn compare(&self, a: usize, b: usize) -> Ordering {
        self.areas[b]
            .cmp(&self.areas[a])
            .then(self.first[a].cmp(&self.first[b]))
    }

    pub fn region(&self, k: usize, width: usize) -> Region {
        let label = k as u32 + 1;
        let start = self.first[k].0 * width + self.first[k].1;
        let mut pixels = Vec::with_capacity(self.areas[k]);
        for (idx, &l) in self.labels.iter().enumerate().skip(start) {
            if l == label {
                pixels.push((idx / width, idx % width));
                if pixels.len() == self.areas[k] {
                    break;
                }
            }
        }
        Region { pixels }
    }
}

/// All 8-connected foreground regions, largest first; equal areas are ordered
/// by their smallest `(row, col)` pixel.
pub fn connected_components(img: &BinaryImage) -> Vec<Region> {
    let labeling = Labeling::compute(img);
    labeling
        .ordered()
        .into_iter()
        .map(|k| labeling.region(k, img.width()))
        .collect()
}

/// The first region of [`connected_components`] with at least `min_area` pixels.
pub fn largest_component(
    img: &BinaryImage,
    min_area: usize,
) -> Result<Option<Region>, ImagingError> {
    if min_area == 0 {
        return Err(ImagingError::MinArea);
    }
    let labeling = Labeling::compute(img);
    let best = (0..labeling.areas.len())
        .filter(|&k| labeling.areas[k] >= min_area)
        .min_by(|&a, &b| labeling.compare(a, b));
    Ok(best.map(|k| labeling.region(k, img.width())))
}
