//! Labels 8-connected blobs in a small mask.

use chroma_mouse::imaging::{connected_components, largest_component, BinaryImage};

const MASK: &str = "
##....#.
##.....#
......#.
.###....
.#.#..##
.###..##
";

fn main() {
    let rows: Vec<&str> = MASK.trim().lines().collect();
    let (w, h) = (rows[0].len(), rows.len());
    let bits = rows
        .iter()
        .flat_map(|r| r.bytes().map(|b| (b == b'#') as u8))
        .collect();
    let mask = BinaryImage::new(w, h, bits).unwrap();

    for (i, region) in connected_components(&mask).iter().enumerate() {
        println!(
            "#{i}: area {}, first pixel {:?}, bbox {:?}",
            region.area(),
            region.min_pixel(),
            region.bounding_box()
        );
    }
    let big = largest_component(&mask, 5).unwrap();
    println!("largest with area >= 5: {:?}", big.map(|r| r.area()));
}
