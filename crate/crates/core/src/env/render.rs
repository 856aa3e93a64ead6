//! Orthographic silhouette renderer.
//!
//! Faces are projected, sorted far-to-near and filled with a scanline pass;
//! in the original color mode each face is then outlined at half its
//! intensity. Projected coordinates
//! are snapped to a fine sub-pixel grid so symmetric scenes rasterize to
//! identical pixels regardless of floating-point noise in the poses.

use std::fmt;
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shapes::ObjectPair;
use crate::Vec3;
use crate::{Pose, Vec2};

use super::layout;

pub const MIN_RESOLUTION: usize = 16;
pub const MAX_RESOLUTION: usize = 256;
const SNAP: f64 = 65536.0;
const STROKE_HALF_WIDTH: f64 = 0.35;
const CULL_EPS: f64 = 1e-6;
const DECAL_BIAS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum View {
    Top,
    WristLeft,
    WristRight,
}

impl View {
    pub const ALL: [View; 3] = [View::Top, View::WristLeft, View::WristRight];

    pub fn as_str(self) -> &'static str {
        match self {
            View::Top => "top",
            View::WristLeft => "wrist-left",
            View::WristRight => "wrist-right",
        }
    }
}

/// Which cameras feed the observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViewSet {
    #[default]
    None,
    TopOnly,
    TopWrists,
}

impl ViewSet {
    pub fn views(self) -> &'static [View] {
        match self {
            ViewSet::None => &[],
            ViewSet::TopOnly => &[View::Top],
            ViewSet::TopWrists => &View::ALL,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ViewSet::None => "none",
            ViewSet::TopOnly => "top-only",
            ViewSet::TopWrists => "top+wrists",
        }
    }
}

impl fmt::Display for ViewSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ViewSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(ViewSet::None),
            "top" | "top-only" => Ok(ViewSet::TopOnly),
            "top+wrists" | "top-wrists" | "all" => Ok(ViewSet::TopWrists),
            _ => Err(Error::InvalidArgument(format!("unknown view set `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorMode {
    #[default]
    Original,
    Colored,
}

impl ColorMode {
    pub fn base(self) -> f32 {
        match self {
            ColorMode::Original => 0.6,
            ColorMode::Colored => 0.5,
        }
    }

    /// Intensity of the extrusion cap and the intrusion decal.
    pub fn feature(self) -> f32 {
        match self {
            ColorMode::Original => 0.6,
            ColorMode::Colored => 1.0,
        }
    }

    /// Outline intensity for a face; only the low-contrast mode draws them.
    pub fn outline(self, face: f32) -> Option<f32> {
        match self {
            ColorMode::Original => Some(face * 0.5),
            ColorMode::Colored => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ColorMode::Original => "original",
            ColorMode::Colored => "colored",
        }
    }
}

impl fmt::Display for ColorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ColorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "original" => Ok(ColorMode::Original),
            "colored" | "coloured" => Ok(ColorMode::Colored),
            _ => Err(Error::InvalidArgument(format!("unknown color mode `{s}`"))),
        }
    }
}

/// Square grayscale image, row-major from the top row, values in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub size: usize,
    pub data: Vec<f32>,
}

impl Image {
    pub fn new(size: usize) -> Self {
        Self {
            size,
            data: vec![0.0; size * size],
        }
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.data[row * self.size + col]
    }

    pub fn to_u8(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect()
    }

    pub fn from_u8(size: usize, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != size * size {
            return Err(Error::dims(format!(
                "expected {} pixels, got {}",
                size * size,
                bytes.len()
            )));
        }
        Ok(Self {
            size,
            data: bytes.iter().map(|&b| b as f32 / 255.0).collect(),
        })
    }

    /// Number of pixels whose 8-bit values differ.
    pub fn count_differing(&self, other: &Image) -> usize {
        self.to_u8()
            .iter()
            .zip(other.to_u8())
            .filter(|(a, b)| **a != *b)
            .count()
    }

    pub fn histogram(&self) -> [u32; 256] {
        let mut h = [0u32; 256];
        for b in self.to_u8() {
            h[b as usize] += 1;
        }
        h
    }

    /// Binary PGM (P5, maxval 255).
    pub fn write_pgm<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "P5\n{} {}\n255\n", self.size, self.size)?;
        w.write_all(&self.to_u8())
    }

    pub fn save_pgm(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = io::BufWriter::new(f);
        self.write_pgm(&mut w)?;
        w.flush()?;
        Ok(())
    }
}

/// Orthographic camera: `right × up` spans the image plane, `forward`
/// points into the scene.
#[derive(Debug, Clone, Copy)]
pub struct Camera {
    pub origin: Vec3,
    pub right: Vec3,
    pub up: Vec3,
    pub forward: Vec3,
    pub extent: f64,
}

impl Camera {
    pub fn new(origin: Vec3, forward: Vec3, up: Vec3, extent: f64) -> Self {
        Self {
            origin,
            right: forward.cross(up),
            up,
            forward,
            extent,
        }
    }

    pub fn top() -> Self {
        Self::new(
            Vec3::new(0.0, 0.0, layout::TOP_CAMERA_HEIGHT),
            Vec3::new(0.0, 0.0, -1.0),
            Vec3::unit_y(),
            layout::TOP_VIEW_EXTENT,
        )
    }

    /// Camera rigidly mounted behind a gripper, looking along its approach
    /// axis with the gripper x axis up.
    pub fn wrist(gripper: &Pose) -> Self {
        let forward = gripper.transform_vector(Vec3::unit_z());
        let up = gripper.transform_vector(Vec3::unit_x());
        let origin = gripper.t - forward.scale(layout::WRIST_CAMERA_BACKOFF);
        Self::new(origin, forward, up, layout::WRIST_VIEW_EXTENT)
    }

    /// Pixel coordinates (column, row) with the row axis pointing down.
    fn project(&self, p: Vec3, res: usize) -> (f64, f64) {
        let d = p - self.origin;
        let scale = res as f64 / self.extent;
        let u = (d.dot(self.right) + self.extent / 2.0) * scale;
        let v = (self.extent / 2.0 - d.dot(self.up)) * scale;
        ((u * SNAP).round() / SNAP, (v * SNAP).round() / SNAP)
    }

    fn depth(&self, p: Vec3) -> f64 {
        (p - self.origin).dot(self.forward)
    }
}

/// Planar polygon in world coordinates.
#[derive(Debug, Clone)]
pub struct Face {
    pub vertices: Vec<Vec3>,
    pub normal: Vec3,
    pub intensity: f32,
    pub outline: Option<f32>,
    /// Decals (the intrusion outline) are painted just after their host face.
    pub decal: bool,
}

#[derive(Debug, Clone, Default)]
pub struct Scene {
    pub faces: Vec<Face>,
}

fn face_local(
    pose: &Pose,
    pts: &[Vec3],
    n: Vec3,
    intensity: f32,
    color: ColorMode,
    decal: bool,
) -> Face {
    Face {
        vertices: pts.iter().map(|p| pose.transform_point(*p)).collect(),
        normal: pose.transform_vector(n),
        intensity,
        outline: color.outline(intensity),
        decal,
    }
}

fn cube_faces(pose: &Pose, half: f64, color: ColorMode, out: &mut Vec<Face>) {
    let h = half;
    for axis in 0..3 {
        for sign in [1.0, -1.0] {
            let mut n = [0.0; 3];
            n[axis] = sign;
            let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
            let corner = |sa: f64, sb: f64| {
                let mut p = [0.0; 3];
                p[axis] = sign * h;
                p[a] = sa * h;
                p[b] = sb * h;
                Vec3::new(p[0], p[1], p[2])
            };
            let quad = [
                corner(-1.0, -1.0),
                corner(1.0, -1.0),
                corner(1.0, 1.0),
                corner(-1.0, 1.0),
            ];
            out.push(face_local(
                pose,
                &quad,
                Vec3::new(n[0], n[1], n[2]),
                color.base(),
                color,
                false,
            ));
        }
    }
}

fn lift(poly: &[Vec2], z: f64) -> Vec<Vec3> {
    poly.iter().map(|p| Vec3::new(p.x, p.y, z)).collect()
}

impl Scene {
    /// Adds the peg: base cube plus the extruded cross-section on its +z face.
    pub fn add_peg(&mut self, pose: &Pose, pair: &ObjectPair, color: ColorMode) {
        let half = pair.base_size / 2.0;
        cube_faces(pose, half, color, &mut self.faces);
        let top = half + pair.extrusion_height;
        let poly = &pair.peg_polygon;
        self.faces.push(face_local(
            pose,
            &lift(poly, top),
            Vec3::unit_z(),
            color.feature(),
            color,
            false,
        ));
        for i in 0..poly.len() {
            let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
            let e = b - a;
            let len = e.norm();
            if len == 0.0 {
                continue;
            }
            let n = Vec3::new(e.y / len, -e.x / len, 0.0);
            let quad = [
                Vec3::new(a.x, a.y, half),
                Vec3::new(b.x, b.y, half),
                Vec3::new(b.x, b.y, top),
                Vec3::new(a.x, a.y, top),
            ];
            self.faces
                .push(face_local(pose, &quad, n, color.base(), color, false));
        }
    }

    /// Adds the hole: base cube with the intrusion outline on its +z face.
    pub fn add_hole(&mut self, pose: &Pose, pair: &ObjectPair, color: ColorMode) {
        let half = pair.base_size / 2.0;
        cube_faces(pose, half, color, &mut self.faces);
        self.faces.push(face_local(
            pose,
            &lift(&pair.hole_polygon_local(), half),
            Vec3::unit_z(),
            color.feature(),
            color,
            true,
        ));
    }

    pub fn render(&self, camera: &Camera, res: usize) -> Image {
        let mut img = Image::new(res);
        let mut visible: Vec<(f64, usize)> = self
            .faces
            .iter()
            .enumerate()
            .filter(|(_, f)| f.normal.dot(camera.forward) < -CULL_EPS)
            .map(|(i, f)| {
                let n = f.vertices.len() as f64;
                let c = f
                    .vertices
                    .iter()
                    .fold(Vec3::zeros(), |acc, v| acc + *v)
                    .scale(1.0 / n);
                let bias = if f.decal { DECAL_BIAS } else { 0.0 };
                (camera.depth(c) - bias, i)
            })
            .collect();
        // Far to near; ties keep insertion order.
        visible.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for (_, i) in visible {
            let f = &self.faces[i];
            let pts: Vec<(f64, f64)> = f.vertices.iter().map(|v| camera.project(*v, res)).collect();
            fill_polygon(&mut img, &pts, f.intensity);
            if let Some(v) = f.outline {
                stroke_polygon(&mut img, &pts, v);
            }
        }
        img
    }
}

fn fill_polygon(img: &mut Image, pts: &[(f64, f64)], value: f32) {
    let n = pts.len();
    if n < 3 {
        return;
    }
    let res = img.size;
    let (ymin, ymax) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.1), hi.max(p.1))
        });
    let r0 = (ymin - 0.5).ceil().max(0.0) as usize;
    let r1 = ((ymax - 0.5).floor()).min(res as f64 - 1.0);
    if r1 < 0.0 {
        return;
    }
    let mut xs = Vec::with_capacity(n);
    for row in r0..=(r1 as usize) {
        let yc = row as f64 + 0.5;
        xs.clear();
        for i in 0..n {
            let (mut a, mut b) = (pts[i], pts[(i + 1) % n]);
            if a.1 > b.1 {
                std::mem::swap(&mut a, &mut b);
            }
            if a.1 <= yc && yc < b.1 {
                xs.push(a.0 + (yc - a.1) * (b.0 - a.0) / (b.1 - a.1));
            }
        }
        xs.sort_by(|a, b| a.total_cmp(b));
        for span in xs.chunks_exact(2) {
            let c0 = (span[0] - 0.5).ceil().max(0.0) as usize;
            let c1 = (span[1] - 0.5).ceil().min(res as f64);
            for col in c0..(c1.max(0.0) as usize) {
                img.data[row * res + col] = value;
            }
        }
    }
}

fn stroke_polygon(img: &mut Image, pts: &[(f64, f64)], value: f32) {
    let n = pts.len();
    let res = img.size as f64;
    let w = STROKE_HALF_WIDTH;
    for i in 0..n {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        let c0 = (a.0.min(b.0) - w - 0.5).ceil().max(0.0);
        let c1 = (a.0.max(b.0) + w - 0.5).floor().min(res - 1.0);
        let r0 = (a.1.min(b.1) - w - 0.5).ceil().max(0.0);
        let r1 = (a.1.max(b.1) + w - 0.5).floor().min(res - 1.0);
        if c1 < c0 || r1 < r0 {
            continue;
        }
        let (ex, ey) = (b.0 - a.0, b.1 - a.1);
        let len2 = ex * ex + ey * ey;
        for row in r0 as usize..=r1 as usize {
            for col in c0 as usize..=c1 as usize {
                let (px, py) = (col as f64 + 0.5, row as f64 + 0.5);
                let s = if len2 > 0.0 {
                    (((px - a.0) * ex + (py - a.1) * ey) / len2).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                let (dx, dy) = (px - a.0 - s * ex, py - a.1 - s * ey);
                if dx * dx + dy * dy <= w * w {
                    img.data[row * img.size + col] = value;
                }
            }
        }
    }
}
