//! Binary PGM rasters of point clouds.

use nsfrac::CompactSet;

/// Rows used for 1D sets.
pub const STRIP_HEIGHT: usize = 16;

/// Pixel index of `v` on an axis of `n` pixels whose first and last pixel
/// centres sit on `lo` and `hi`; `None` outside.
fn cell(v: f64, lo: f64, hi: f64, n: usize) -> Option<usize> {
    if !(lo <= v && v <= hi) {
        return None;
    }
    if n == 1 || hi == lo {
        return Some((n - 1) / 2);
    }
    let pitch = (hi - lo) / (n - 1) as f64;
    Some((((v - lo) / pitch + 0.5).floor() as usize).min(n - 1))
}

/// Renders `set` into `width × height` grey bytes, row-major with the top row
/// at the largest second coordinate: 255 where a point lands, 0 elsewhere.
/// 1D sets become a strip [`STRIP_HEIGHT`] rows high.
pub fn rasterize(
    set: &CompactSet,
    width: usize,
    height: usize,
    bounds: ([f64; 2], [f64; 2]),
) -> (usize, usize, Vec<u8>) {
    let width = width.max(1);
    let height = if set.dim() == 1 {
        STRIP_HEIGHT
    } else {
        height.max(1)
    };
    let (lo, hi) = bounds;
    let mut pixels = vec![0u8; width * height];
    for p in set.points() {
        let Some(col) = cell(p.x(), lo[0], hi[0], width) else {
            continue;
        };
        if set.dim() == 1 {
            for row in 0..height {
                pixels[row * width + col] = 255;
            }
        } else if let Some(r) = cell(p.y(), lo[1], hi[1], height) {
            pixels[(height - 1 - r) * width + col] = 255;
        }
    }
    (width, height, pixels)
}

/// A complete P5 file: `P5\n<w> <h>\n255\n` followed by the pixels.
pub fn render_pgm(
    set: &CompactSet,
    width: usize,
    height: usize,
    bounds: ([f64; 2], [f64; 2]),
) -> Vec<u8> {
    let (w, h, pixels) = rasterize(set, width, height, bounds);
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend_from_slice(&pixels);
    out
}
