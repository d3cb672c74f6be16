//! Rasters of the dynamical plane and of the `q` and `q^2` parameter planes.
//!
//! Rows are computed in parallel and assembled in row-major order, so the
//! output bytes do not depend on scheduling.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    antipode, classify_orbit, classify_parameter, critical_points, cycle_rotation_number, mean_rotation, OrbitKind,
    ParamClass, C64,
};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Projection {
    Plane,
    /// One hemisphere of the Riemann sphere seen from outside, with 0 at
    /// the bottom, infinity at the top and `i` in front.
    SphereOrthonormal,
    /// The plane compressed to the unit disk by `r -> r / sqrt(1 + r^2)`.
    CircledDisk,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamPlane {
    Q,
    QSquared,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coloring {
    ComponentType,
    RotationNumber,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageSpec {
    pub width: usize,
    pub height: usize,
    pub center: C64,
    /// Half of the horizontal extent; the vertical one follows the aspect.
    pub half_extent: f64,
    pub projection: Projection,
    pub budget: usize,
    pub eps: f64,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl ImageSpec {
    pub fn square(size: usize, center: C64, half_extent: f64) -> ImageSpec {
        ImageSpec {
            width: size,
            height: size,
            center,
            half_extent,
            projection: Projection::Plane,
            budget: 500,
            eps: 1e-3,
            threads: None,
        }
    }

    /// Viewport coordinate of a pixel centre. Centres sit at odd multiples
    /// of half a pixel, so pixel `(i, j)` and `(W-1-i, H-1-j)` are exact
    /// negatives of each other around the centre.
    pub fn viewport_point(&self, col: usize, row: usize) -> C64 {
        let (w, h) = (self.width as f64, self.height as f64);
        let hy = self.half_extent * h / w;
        let x = self.half_extent * (2.0 * col as f64 + 1.0 - w) / w;
        let y = hy * (h - 2.0 * row as f64 - 1.0) / h;
        self.center + C64::new(x, y)
    }

    /// Point of the plane shown at a pixel, or `None` off the projection.
    pub fn plane_point(&self, col: usize, row: usize) -> Option<C64> {
        let p = self.viewport_point(col, row);
        unproject(self.projection, p)
    }

    /// Pixel showing a plane point, when it is inside the viewport.
    pub fn pixel_of(&self, z: C64) -> Option<(usize, usize)> {
        let p = project(self.projection, z)? - self.center;
        let (w, h) = (self.width as f64, self.height as f64);
        let hy = self.half_extent * h / w;
        let col = ((p.re / self.half_extent * w + w - 1.0) / 2.0).round();
        let row = ((h - 1.0 - p.im / hy * h) / 2.0).round();
        (col >= 0.0 && row >= 0.0 && col < w && row < h).then_some((col as usize, row as usize))
    }

    fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.half_extent.is_nan() || self.half_extent <= 0.0 {
            return Err(Error::Precondition("empty viewport".into()));
        }
        Ok(())
    }
}

/// Inverse of `r -> r / sqrt(1 + r^2)`.
fn uncircle(p: C64) -> Option<C64> {
    let s = p.norm();
    (s < 1.0).then(|| p / (1.0 - s * s).sqrt())
}

pub fn unproject(projection: Projection, p: C64) -> Option<C64> {
    match projection {
        Projection::Plane => Some(p),
        Projection::CircledDisk => uncircle(p),
        Projection::SphereOrthonormal => {
            let d2 = 1.0 - p.norm_sqr();
            if d2 < 0.0 {
                return None;
            }
            // Sphere point (x, sqrt(1 - x^2 - y^2), y), stereographic from the north pole.
            let (x1, x2, x3) = (p.re, d2.sqrt(), p.im);
            Some(C64::new(x1, x2) / (1.0 - x3))
        }
    }
}

pub fn project(projection: Projection, z: C64) -> Option<C64> {
    match projection {
        Projection::Plane => Some(z),
        Projection::CircledDisk => Some(z / (1.0 + z.norm_sqr()).sqrt()),
        Projection::SphereOrthonormal => {
            let n = z.norm_sqr();
            let (x1, x2, x3) = (2.0 * z.re / (1.0 + n), 2.0 * z.im / (1.0 + n), (n - 1.0) / (n + 1.0));
            (x2 >= 0.0).then_some(C64::new(x1, x3))
        }
    }
}

/// Pixel classes of a dynamical-plane render.
pub mod julia_class {
    pub const TO_ZERO: u8 = 0;
    pub const TO_INFINITY: u8 = 1;
    pub const CYCLE: u8 = 2;
    pub const UNDECIDED: u8 = 3;
    pub const OUTSIDE: u8 = 255;
}

/// Pixel classes of a parameter-plane render.
pub mod param_class {
    pub const CENTRAL: u8 = 0;
    pub const CAPTURE_ZERO: u8 = 1;
    pub const CAPTURE_INFINITY: u8 = 2;
    pub const MANDELBROT: u8 = 3;
    pub const TRICORN: u8 = 4;
    pub const HERMAN: u8 = 5;
    pub const OUTSIDE: u8 = 255;
}

fn param_code(c: ParamClass) -> u8 {
    match c {
        ParamClass::Central => param_class::CENTRAL,
        ParamClass::CaptureZero => param_class::CAPTURE_ZERO,
        ParamClass::CaptureInfinity => param_class::CAPTURE_INFINITY,
        ParamClass::MandelbrotType => param_class::MANDELBROT,
        ParamClass::TricornType => param_class::TRICORN,
        ParamClass::HermanCandidate => param_class::HERMAN,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageKind {
    Julia,
    Param,
}

/// Colours by class; loaded from JSON when the defaults do not suit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Palette {
    pub julia: [[u8; 3]; 4],
    pub param: [[u8; 3]; 6],
    pub outside: [u8; 3],
}

impl Default for Palette {
    fn default() -> Palette {
        Palette {
            // zero basin, infinity basin, cycle basins, undecided
            julia: [[205, 205, 205], [95, 95, 95], [60, 100, 190], [0, 0, 0]],
            // central, capture zero, capture infinity, mandelbrot, tricorn, herman
            param: [[255, 255, 255], [200, 200, 200], [120, 120, 120], [40, 40, 40], [0, 0, 0], [190, 30, 30]],
            outside: [255, 255, 255],
        }
    }
}

impl Palette {
    pub fn from_json(s: &str) -> Result<Palette> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Hue in `[0, 1)` to RGB, running from red through green to blue.
pub fn hue_rgb(h: f64) -> [u8; 3] {
    let deg = 240.0 * h.rem_euclid(1.0);
    let x = 1.0 - ((deg / 60.0) % 2.0 - 1.0).abs();
    let (r, g, b) = match (deg / 60.0) as u32 {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        _ => (0.0, x, 1.0),
    };
    [(r * 255.0).round() as u8, (g * 255.0).round() as u8, (b * 255.0).round() as u8]
}

#[derive(Clone, Debug, Serialize)]
pub struct PlaneImage {
    pub kind: ImageKind,
    pub spec: ImageSpec,
    /// Julia parameter, or the parameter plane shown.
    pub q: Option<C64>,
    pub plane: Option<ParamPlane>,
    pub coloring: Coloring,
    #[serde(skip)]
    pub classes: Vec<u8>,
    #[serde(skip)]
    pub hues: Vec<Option<f64>>,
}

impl PlaneImage {
    pub fn class_at(&self, col: usize, row: usize) -> u8 {
        self.classes[row * self.spec.width + col]
    }

    pub fn count(&self, class: u8) -> usize {
        self.classes.iter().filter(|&&c| c == class).count()
    }

    pub fn rgb(&self, palette: &Palette) -> Vec<u8> {
        let mut out = Vec::with_capacity(3 * self.classes.len());
        for (i, &c) in self.classes.iter().enumerate() {
            let px = if c == 255 {
                palette.outside
            } else if let Some(h) = self.hues.get(i).copied().flatten() {
                hue_rgb(h)
            } else {
                match self.kind {
                    ImageKind::Julia => palette.julia[c as usize],
                    ImageKind::Param => palette.param[c as usize],
                }
            };
            out.extend_from_slice(&px);
        }
        out
    }

    pub fn ppm_bytes(&self, palette: &Palette) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.spec.width, self.spec.height).into_bytes();
        out.extend(self.rgb(palette));
        out
    }

    pub fn write_ppm(&self, path: &Path, palette: &Palette) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.ppm_bytes(palette))?;
        Ok(())
    }

    #[cfg(feature = "png")]
    pub fn write_png(&self, path: &Path, palette: &Palette) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        let mut enc = png::Encoder::new(file, self.spec.width as u32, self.spec.height as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut w = enc.write_header().map_err(|e| Error::Io(e.to_string()))?;
        w.write_image_data(&self.rgb(palette)).map_err(|e| Error::Io(e.to_string()))?;
        Ok(())
    }

    /// Metadata written next to the image.
    pub fn sidecar(&self, palette: &Palette) -> serde_json::Value {
        let mut v = serde_json::to_value(self).unwrap_or_default();
        v["palette"] = serde_json::to_value(palette).unwrap_or_default();
        v["counts"] = serde_json::Value::from(
            (0..=5u8).map(|c| self.count(c)).collect::<Vec<_>>(),
        );
        v
    }
}

fn run_rows<T: Send>(spec: &ImageSpec, row: impl Fn(usize) -> Vec<T> + Sync + Send) -> Result<Vec<T>> {
    let go = || (0..spec.height).into_par_iter().map(&row).collect::<Vec<Vec<T>>>();
    let rows = match spec.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Precondition(e.to_string()))?
            .install(go),
        None => go(),
    };
    Ok(rows.into_iter().flatten().collect())
}

/// Classifies every pixel of the dynamical plane of `f_q`.
pub fn render_julia(q: C64, spec: &ImageSpec) -> Result<PlaneImage> {
    spec.validate()?;
    let classes = run_rows(spec, |row| {
        (0..spec.width)
            .map(|col| match spec.plane_point(col, row) {
                None => julia_class::OUTSIDE,
                Some(z) => match classify_orbit(q, z, spec.budget, spec.eps).kind {
                    OrbitKind::ToZero => julia_class::TO_ZERO,
                    OrbitKind::ToInfinity => julia_class::TO_INFINITY,
                    OrbitKind::AttractingCycle { .. } => julia_class::CYCLE,
                    OrbitKind::Undecided => julia_class::UNDECIDED,
                },
            })
            .collect()
    })?;
    Ok(PlaneImage {
        kind: ImageKind::Julia,
        spec: spec.clone(),
        q: Some(q),
        plane: None,
        coloring: Coloring::ComponentType,
        classes,
        hues: vec![],
    })
}

/// Parameter `q` shown at a point of the chosen plane.
pub fn param_of(plane: ParamPlane, p: C64) -> C64 {
    match plane {
        ParamPlane::Q => p,
        ParamPlane::QSquared => p.sqrt(),
    }
}

/// Classifies every pixel of the `q` or `q^2` plane.
pub fn render_param(plane: ParamPlane, coloring: Coloring, spec: &ImageSpec) -> Result<PlaneImage> {
    spec.validate()?;
    let pixels = run_rows(spec, |row| {
        (0..spec.width)
            .map(|col| match spec.plane_point(col, row) {
                None => (param_class::OUTSIDE, None),
                Some(p) => {
                    let q = param_of(plane, p);
                    let class = match classify_parameter(q, spec.budget, spec.eps) {
                        Ok((c, _)) => param_code(c),
                        Err(_) => param_class::CENTRAL,
                    };
                    let hue = match coloring {
                        Coloring::RotationNumber => estimate_rotation_hue(q, spec.budget),
                        Coloring::ComponentType => None,
                    };
                    (class, hue)
                }
            })
            .collect()
    })?;
    let (classes, hues) = pixels.into_iter().unzip();
    Ok(PlaneImage { kind: ImageKind::Param, spec: spec.clone(), q: None, plane: Some(plane), coloring, classes, hues })
}

/// Rotation number of a tongue (its self-antipodal cycle) or the mean
/// argument advance of a bounded orbit for a Herman candidate.
pub fn estimate_rotation_hue(q: C64, budget: usize) -> Option<f64> {
    let (class, oc) = classify_parameter(q, budget, 1e-3).ok()?;
    match (class, oc.kind) {
        (ParamClass::TricornType, OrbitKind::AttractingCycle { points, .. }) => {
            cycle_rotation_number(q, &points).ok().map(|a| a.to_f64())
        }
        (ParamClass::HermanCandidate, _) => {
            let (c0, _) = critical_points(q).ok()?;
            mean_rotation(q, c0, budget.max(1000))
        }
        _ => None,
    }
}

/// Fraction of basin pixels whose antipode, where visible, lies in a pixel
/// (or a neighbour of it) of the opposite basin.
pub fn antipodal_agreement(img: &PlaneImage) -> f64 {
    let spec = &img.spec;
    let (mut checked, mut good) = (0usize, 0usize);
    for row in 0..spec.height {
        for col in 0..spec.width {
            let c = img.class_at(col, row);
            let want = match c {
                julia_class::TO_ZERO => julia_class::TO_INFINITY,
                julia_class::TO_INFINITY => julia_class::TO_ZERO,
                _ => continue,
            };
            let Some(z) = spec.plane_point(col, row) else { continue };
            let Some((c2, r2)) = spec.pixel_of(antipode(z)) else { continue };
            checked += 1;
            let hit = (r2.saturating_sub(1)..=(r2 + 1).min(spec.height - 1))
                .any(|r| (c2.saturating_sub(1)..=(c2 + 1).min(spec.width - 1)).any(|cc| img.class_at(cc, r) == want));
            good += hit as usize;
        }
    }
    if checked == 0 {
        1.0
    } else {
        good as f64 / checked as f64
    }
}

/// Pixels differing from the image rotated by 180 degrees.
pub fn rotation_mismatches(img: &PlaneImage) -> usize {
    let n = img.classes.len();
    (0..n).filter(|&i| img.classes[i] != img.classes[n - 1 - i]).count()
}

fn neighbours(i: usize, w: usize, h: usize) -> impl Iterator<Item = usize> {
    let (x, y) = (i % w, i / w);
    [
        (x > 0).then(|| i - 1),
        (x + 1 < w).then(|| i + 1),
        (y > 0).then(|| i - w),
        (y + 1 < h).then(|| i + w),
    ]
    .into_iter()
    .flatten()
}

/// 4-connected component of `class` pixels containing the seeds.
fn component(img: &PlaneImage, seeds: &[usize], class: u8) -> Vec<bool> {
    let (w, h) = (img.spec.width, img.spec.height);
    let mut seen = vec![false; w * h];
    let mut stack: Vec<usize> = seeds.iter().copied().filter(|&i| img.classes[i] == class).collect();
    for &i in &stack {
        seen[i] = true;
    }
    while let Some(i) = stack.pop() {
        for j in neighbours(i, w, h) {
            if !seen[j] && img.classes[j] == class {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen
}

/// Whether undecided pixels separate the immediate basins: the component
/// of the zero basin around the pixel of 0 and the component of the
/// infinity basin touching the frame cannot be joined by a 4-connected path
/// avoiding undecided pixels.
pub fn undecided_band_separates(img: &PlaneImage) -> bool {
    let (w, h) = (img.spec.width, img.spec.height);
    let Some((c0, r0)) = img.spec.pixel_of(C64::new(0.0, 0.0)) else { return false };
    let zero = component(img, &[r0 * w + c0], julia_class::TO_ZERO);
    let frame: Vec<usize> = (0..w * h).filter(|&i| i % w == 0 || i % w == w - 1 || i / w == 0 || i / w == h - 1).collect();
    let inf = component(img, &frame, julia_class::TO_INFINITY);
    if !zero.iter().any(|&b| b) || !inf.iter().any(|&b| b) {
        return false;
    }
    // Flood from the zero component through everything but undecided pixels.
    let mut seen = zero.clone();
    let mut stack: Vec<usize> = (0..w * h).filter(|&i| zero[i]).collect();
    while let Some(i) = stack.pop() {
        if inf[i] {
            return false;
        }
        for j in neighbours(i, w, h) {
            if !seen[j] && img.classes[j] != julia_class::UNDECIDED {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projections_round_trip() {
        for proj in [Projection::Plane, Projection::CircledDisk, Projection::SphereOrthonormal] {
            for z in [C64::new(0.3, 0.4), C64::new(-2.0, 5.0), C64::new(0.1, -0.01)] {
                if let Some(p) = project(proj, z) {
                    let back = unproject(proj, p).unwrap();
                    assert!((back - z).norm() < 1e-9 * z.norm().max(1.0), "{proj:?} {z}");
                }
            }
        }
        let r: f64 = 3.0;
        assert!((project(Projection::CircledDisk, C64::new(r, 0.0)).unwrap().re - r / (1.0 + r * r).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn pixel_centres_are_symmetric() {
        let spec = ImageSpec::square(7, C64::new(0.0, 0.0), 2.0);
        for row in 0..7 {
            for col in 0..7 {
                assert_eq!(spec.viewport_point(col, row), -spec.viewport_point(6 - col, 6 - row));
                assert_eq!(spec.pixel_of(spec.viewport_point(col, row)), Some((col, row)));
            }
        }
    }

    #[test]
    fn unit_circle_julia_at_zero() {
        let spec = ImageSpec::square(33, C64::new(0.0, 0.0), 2.0);
        let img = render_julia(C64::new(0.0, 0.0), &spec).unwrap();
        for row in 0..33 {
            for col in 0..33 {
                let z = spec.plane_point(col, row).unwrap();
                let c = img.class_at(col, row);
                if z.norm() < 0.95 {
                    assert_eq!(c, julia_class::TO_ZERO);
                } else if z.norm() > 1.05 {
                    assert_eq!(c, julia_class::TO_INFINITY);
                }
            }
        }
        assert!(antipodal_agreement(&img) > 0.99);
    }
}
