//! PPM rendering of rasters with envelope overlays.

use std::fs;
use std::path::Path;

use crate::diagram::Raster;
use crate::envelope::EnvelopeCurve;
use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ToneMode {
    Linear,
    Log1p,
}

/// Count-to-ink mapping. Ink 0 is paper, 255 is full ink.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ToneMap {
    pub mode: ToneMode,
    pub gamma: f64,
    /// Draw light ink on a black background instead of dark ink on white.
    pub invert: bool,
}

impl Default for ToneMap {
    fn default() -> Self {
        ToneMap {
            mode: ToneMode::Log1p,
            gamma: 1.0,
            invert: false,
        }
    }
}

impl ToneMap {
    /// `round(255 * t^(1/gamma))` with `t = c / c_max` or `ln(1+c) / ln(1+c_max)`.
    pub fn ink(&self, count: u64, c_max: u64) -> u8 {
        if count == 0 || c_max == 0 {
            return 0;
        }
        let t = match self.mode {
            ToneMode::Linear => count as f64 / c_max as f64,
            ToneMode::Log1p => (count as f64).ln_1p() / (c_max as f64).ln_1p(),
        };
        (255.0 * t.min(1.0).powf(1.0 / self.gamma)).round() as u8
    }

    pub fn gray(&self, count: u64, c_max: u64) -> u8 {
        let ink = self.ink(count, c_max);
        if self.invert {
            ink
        } else {
            255 - ink
        }
    }
}

/// Overlay colours, indexed by curve order.
pub const PALETTE: [[u8; 3]; 8] = [
    [128, 128, 128],
    [220, 20, 60],
    [30, 110, 230],
    [20, 150, 60],
    [240, 140, 0],
    [150, 40, 200],
    [0, 170, 180],
    [200, 0, 130],
];

pub fn overlay_color(order: usize) -> [u8; 3] {
    PALETTE[order % PALETTE.len()]
}

struct Canvas {
    width: usize,
    height: usize,
    rgb: Vec<u8>,
}

impl Canvas {
    fn put(&mut self, x: i64, y: i64, color: [u8; 3]) {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return;
        }
        let i = 3 * (y as usize * self.width + x as usize);
        self.rgb[i..i + 3].copy_from_slice(&color);
    }

    /// Integer line stepping between two pixels.
    fn line(&mut self, (x0, y0): (i64, i64), (x1, y1): (i64, i64), color: [u8; 3]) {
        let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
        let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
        let (mut x, mut y, mut err) = (x0, y0, dx + dy);
        loop {
            self.put(x, y, color);
            if x == x1 && y == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x += sx;
            }
            if e2 <= dx {
                err += dx;
                y += sy;
            }
        }
    }
}

/// Clips the segment to `[0, w] × [0, h]` (continuous pixel space).
fn clip_segment(p: (f64, f64), q: (f64, f64), w: f64, h: f64) -> Option<((f64, f64), (f64, f64))> {
    let (dx, dy) = (q.0 - p.0, q.1 - p.1);
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for (num, den) in [(p.0, -dx), (w - p.0, dx), (p.1, -dy), (h - p.1, dy)] {
        if den == 0.0 {
            if num < 0.0 {
                return None;
            }
        } else {
            let t = num / den;
            if den < 0.0 {
                t0 = t0.max(t);
            } else {
                t1 = t1.min(t);
            }
        }
    }
    if t0 > t1 {
        return None;
    }
    Some((
        (p.0 + t0 * dx, p.1 + t0 * dy),
        (p.0 + t1 * dx, p.1 + t1 * dy),
    ))
}

fn check_overlay(raster: &Raster, curve: &EnvelopeCurve) -> Result<()> {
    let spec = &raster.spec;
    if curve.family.name() != spec.family.name() {
        return Err(Error::Mismatch(format!(
            "overlay family `{}` on a `{}` raster",
            curve.family.name(),
            spec.family.name()
        )));
    }
    if curve.is_empty() {
        return invalid("empty overlay");
    }
    let slack = 1e-9 * (spec.r_max - spec.r_min);
    let (lo, hi) = curve.r_range();
    if lo < spec.r_min - slack || hi > spec.r_max + slack {
        return Err(Error::Mismatch(format!(
            "overlay window [{lo}, {hi}] exceeds raster window [{}, {}]",
            spec.r_min, spec.r_max
        )));
    }
    Ok(())
}

/// Encodes the raster and overlays as a binary PPM. Image row 0 is `x_max`.
pub fn render_ppm(raster: &Raster, tone: &ToneMap, overlays: &[EnvelopeCurve]) -> Result<Vec<u8>> {
    let (w, h) = (raster.columns(), raster.rows());
    if w == 0 || h == 0 || raster.counts.len() != w * h {
        return invalid("raster is empty");
    }
    if !(tone.gamma > 0.0) {
        return invalid("gamma must be positive");
    }
    for curve in overlays {
        check_overlay(raster, curve)?;
    }
    let c_max = raster.max_count();
    let mut canvas = Canvas {
        width: w,
        height: h,
        rgb: Vec::with_capacity(3 * w * h),
    };
    for y in 0..h {
        let row = h - 1 - y;
        for x in 0..w {
            let g = tone.gray(raster.get(row, x), c_max);
            canvas.rgb.extend_from_slice(&[g, g, g]);
        }
    }

    let spec = &raster.spec;
    let to_pixel = |r: f64, v: f64| {
        (
            (r - spec.r_min) / (spec.r_max - spec.r_min) * w as f64,
            (spec.x_max - v) / (spec.x_max - spec.x_min) * h as f64,
        )
    };
    // the far edge w (or h) belongs to the last pixel
    let snap = |t: f64, n: usize| (t.floor() as i64).min(n as i64 - 1);
    for curve in overlays {
        let color = overlay_color(curve.order);
        let points: Vec<(f64, f64)> = curve
            .r_samples
            .iter()
            .zip(&curve.values)
            .map(|(&r, &v)| to_pixel(r, v))
            .collect();
        for seg in points.windows(2) {
            let (p, q) = (seg[0], seg[1]);
            if ![p.0, p.1, q.0, q.1].iter().all(|c| c.is_finite()) {
                continue;
            }
            if let Some((a, b)) = clip_segment(p, q, w as f64, h as f64) {
                canvas.line(
                    (snap(a.0, w), snap(a.1, h)),
                    (snap(b.0, w), snap(b.1, h)),
                    color,
                );
            }
        }
    }

    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    out.extend_from_slice(&canvas.rgb);
    Ok(out)
}

pub fn write_image(
    raster: &Raster,
    tone: &ToneMap,
    overlays: &[EnvelopeCurve],
    path: impl AsRef<Path>,
) -> Result<()> {
    let bytes = render_ppm(raster, tone, overlays)?;
    fs::write(path, bytes)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::DiagramSpec;
    use crate::envelope::envelope_polyline;
    use crate::map::{Branch, MapFamily};

    fn raster(cols: usize, rows: usize, counts: Vec<u64>) -> Raster {
        let spec = DiagramSpec::new(MapFamily::sine(), (-1.0, 1.0), cols, (-1.0, 1.0), rows);
        Raster {
            spec,
            counts,
            escaped_columns: vec![],
        }
    }

    #[test]
    fn one_blank_pixel() {
        let tone = ToneMap {
            mode: ToneMode::Linear,
            gamma: 1.0,
            invert: false,
        };
        let bytes = render_ppm(&raster(1, 1, vec![0]), &tone, &[]).unwrap();
        assert_eq!(bytes, b"P6\n1 1\n255\n\xff\xff\xff");
    }

    #[test]
    fn max_count_is_full_ink() {
        let tone = ToneMap::default();
        // rows stored bottom-up: (0,0) bottom row, (0,k) top row
        let bytes = render_ppm(&raster(2, 2, vec![0, 0, 0, 7]), &tone, &[]).unwrap();
        let px = &bytes[b"P6\n2 2\n255\n".len()..];
        assert_eq!(px, &[255, 255, 255, 0, 0, 0, 255, 255, 255, 255, 255, 255]);
    }

    #[test]
    fn tone_curves() {
        let lin = ToneMap {
            mode: ToneMode::Linear,
            gamma: 2.0,
            invert: true,
        };
        assert_eq!(lin.ink(25, 100), 128); // 255 * 0.5
        assert_eq!(lin.gray(100, 100), 255);
        let log = ToneMap::default();
        assert_eq!(log.ink(3, 15), 128); // ln 4 / ln 16 = 0.5
        assert_eq!(log.ink(0, 15), 0);
        assert_eq!(log.ink(4, 0), 0);
    }

    #[test]
    fn overlay_is_drawn_and_clipped() {
        let r = raster(40, 20, vec![0; 800]);
        let sine = MapFamily::sine();
        let diag = envelope_polyline(&sine, 0, Branch::Plus, -1.0, 1.0, 5).unwrap();
        let bytes = render_ppm(&r, &ToneMap::default(), &[diag]).unwrap();
        let px = &bytes[b"P6\n40 20\n255\n".len()..];
        let colored = px.chunks(3).filter(|c| *c == overlay_color(0)).count();
        assert!(colored >= 40, "{colored}");
        // top-right pixel is on the diagonal r = x
        assert_eq!(&px[3 * 39..3 * 40], &overlay_color(0));

        // a steep curve far outside the window must not wrap around
        let steep = EnvelopeCurve {
            family: sine,
            order: 1,
            branch: Branch::Plus,
            r_samples: vec![-1.0, 1.0],
            values: vec![-50.0, 50.0],
            derivs: vec![0.0, 0.0],
        };
        let bytes = render_ppm(&r, &ToneMap::default(), &[steep]).unwrap();
        let px = &bytes[b"P6\n40 20\n255\n".len()..];
        let colored = px.chunks(3).filter(|c| *c == overlay_color(1)).count();
        assert!(colored > 0 && colored <= 20, "{colored}");
    }

    #[test]
    fn overlay_mismatch() {
        let r = raster(4, 4, vec![0; 16]);
        let rat = MapFamily::rational_odd();
        let c = envelope_polyline(&rat, 1, Branch::Plus, -1.0, 1.0, 5).unwrap();
        assert!(matches!(
            render_ppm(&r, &ToneMap::default(), &[c]),
            Err(Error::Mismatch(_))
        ));
        let sine = MapFamily::sine();
        let c = envelope_polyline(&sine, 1, Branch::Plus, -2.0, 1.0, 5).unwrap();
        assert!(matches!(
            render_ppm(&r, &ToneMap::default(), &[c]),
            Err(Error::Mismatch(_))
        ));
    }

    #[test]
    fn unwritable_path() {
        let r = raster(1, 1, vec![0]);
        let err = write_image(&r, &ToneMap::default(), &[], "/nonexistent-dir/x.ppm").unwrap_err();
        assert!(matches!(err, Error::Io(_)));
    }
}
