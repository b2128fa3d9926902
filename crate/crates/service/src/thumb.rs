use std::io::Cursor;

use fame_core::evolution::{render_silhouette, view_directions};
use fame_core::Shape;
use image::{GrayImage, ImageFormat, Luma};

/// Pixels per silhouette tile.
pub const TILE: u32 = 64;

/// PNG of the first four descriptor views in a 2×2 grid, dark silhouettes
/// on white.
pub fn thumbnail_png(shape: &Shape) -> Vec<u8> {
    let dirs = view_directions();
    let mut img = GrayImage::from_pixel(2 * TILE, 2 * TILE, Luma([255]));
    for (k, dir) in dirs.iter().take(4).enumerate() {
        let (ox, oy) = ((k as u32 % 2) * TILE, (k as u32 / 2) * TILE);
        let pixels = render_silhouette(shape, dir, TILE as usize);
        for (i, &on) in pixels.iter().enumerate() {
            if on {
                let (x, y) = (i as u32 % TILE, i as u32 / TILE);
                // Image rows grow downwards, silhouette rows upwards.
                img.put_pixel(ox + x, oy + TILE - 1 - y, Luma([40]));
            }
        }
    }
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, ImageFormat::Png)
        .expect("in-memory PNG encoding");
    out.into_inner()
}
