//! The nine peg/hole cross-sections, their rotational symmetry orders, and
//! peg/hole pair construction with clearance.

pub mod polygon;

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec2;
pub use polygon::symmetry_order_of;

/// Edge length of the cubical base of every object (m).
pub const BASE_SIZE: f64 = 0.08;
/// Height of every peg extrusion (m).
pub const EXTRUSION_HEIGHT: f64 = 0.02;
/// Depth of every hole intrusion (m).
pub const INTRUSION_DEPTH: f64 = 0.025;
/// Side of the square every design polygon fits in (m).
pub const DESIGN_SQUARE: f64 = 0.04;
pub const DEFAULT_CLEARANCE: f64 = 0.002;
pub const MIN_CLEARANCE: f64 = 0.001;
pub const MAX_CLEARANCE: f64 = 0.004;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeName {
    Arrow,
    Key,
    U,
    Pentagon,
    Minus,
    Hexagon,
    Diamond,
    Plus,
    Circle,
}

impl ShapeName {
    pub const ALL: [ShapeName; 9] = [
        ShapeName::Arrow,
        ShapeName::Key,
        ShapeName::U,
        ShapeName::Pentagon,
        ShapeName::Minus,
        ShapeName::Hexagon,
        ShapeName::Diamond,
        ShapeName::Plus,
        ShapeName::Circle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ShapeName::Arrow => "arrow",
            ShapeName::Key => "key",
            ShapeName::U => "u",
            ShapeName::Pentagon => "pentagon",
            ShapeName::Minus => "minus",
            ShapeName::Hexagon => "hexagon",
            ShapeName::Diamond => "diamond",
            ShapeName::Plus => "plus",
            ShapeName::Circle => "circle",
        }
    }

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&s| s == self).unwrap()
    }

    /// Rotational symmetry order under quarter turns.
    pub fn symmetry_order(self) -> u32 {
        match self {
            ShapeName::Arrow | ShapeName::Key | ShapeName::U | ShapeName::Pentagon => 1,
            ShapeName::Minus | ShapeName::Hexagon | ShapeName::Diamond => 2,
            ShapeName::Plus | ShapeName::Circle => 4,
        }
    }
}

impl fmt::Display for ShapeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ShapeName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown shape `{s}`")))
    }
}

/// A named cross-section polygon (m, CCW, centered in the design square).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeSpec {
    pub name: ShapeName,
    pub polygon: Vec<Vec2<f64>>,
    pub symmetry_order: u32,
    pub clearance: f64,
}

impl ShapeSpec {
    pub fn new(name: ShapeName) -> Self {
        Self {
            name,
            polygon: design_polygon(name),
            symmetry_order: name.symmetry_order(),
            clearance: DEFAULT_CLEARANCE,
        }
    }

    pub fn with_clearance(mut self, clearance: f64) -> Self {
        self.clearance = clearance;
        self
    }

    /// Writes the plain-text polygon format: a `# name order clearance`
    /// header followed by one `x y` vertex per line.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "# {} {} {}",
            self.name, self.symmetry_order, self.clearance
        )?;
        for p in &self.polygon {
            writeln!(w, "{} {}", p.x, p.y)?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::format("empty polygon file"))??;
        let fields: Vec<&str> = header
            .strip_prefix('#')
            .ok_or_else(|| Error::format("missing `#` header"))?
            .split_whitespace()
            .collect();
        let [name, order, clearance] = fields[..] else {
            return Err(Error::format(
                "header must be `# name symmetry_order clearance`",
            ));
        };
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::format(format!("bad number `{s}`")))
        };
        let mut polygon = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let xy: Vec<&str> = line.split_whitespace().collect();
            let [x, y] = xy[..] else {
                return Err(Error::format(format!("bad vertex line `{line}`")));
            };
            polygon.push(Vec2::new(parse(x)?, parse(y)?));
        }
        Ok(Self {
            name: name
                .parse()
                .map_err(|_| Error::format(format!("unknown shape `{name}`")))?,
            polygon,
            symmetry_order: order
                .parse()
                .map_err(|_| Error::format(format!("bad symmetry order `{order}`")))?,
            clearance: parse(clearance)?,
        })
    }
}

fn mm(points: &[(f64, f64)]) -> Vec<Vec2<f64>> {
    points
        .iter()
        .map(|&(x, y)| Vec2::new(x * 1e-3, y * 1e-3))
        .collect()
}

fn regular(n: usize, radius_mm: f64, phase_deg: f64) -> Vec<Vec2<f64>> {
    (0..n)
        .map(|i| {
            let a = phase_deg.to_radians() + std::f64::consts::TAU * i as f64 / n as f64;
            Vec2::new(radius_mm * 1e-3 * a.cos(), radius_mm * 1e-3 * a.sin())
        })
        .collect()
}

/// Canonical design polygon of each shape.
pub fn design_polygon(name: ShapeName) -> Vec<Vec2<f64>> {
    match name {
        ShapeName::Arrow => mm(&[
            (-20.0, -6.0),
            (2.0, -6.0),
            (2.0, -16.0),
            (20.0, 0.0),
            (2.0, 16.0),
            (2.0, 6.0),
            (-20.0, 6.0),
        ]),
        ShapeName::Key => {
            let s = std::f64::consts::FRAC_1_SQRT_2 * 10.0;
            mm(&[
                (0.0, -4.0),
                (8.0, -4.0),
                (8.0, -12.0),
                (16.0, -12.0),
                (16.0, -4.0),
                (20.0, -4.0),
                (20.0, 4.0),
                (0.0, 4.0),
                (-10.0 + s, s),
                (-10.0, 10.0),
                (-10.0 - s, s),
                (-20.0, 0.0),
                (-10.0 - s, -s),
                (-10.0, -10.0),
                (-10.0 + s, -s),
            ])
        }
        ShapeName::U => mm(&[
            (-20.0, -20.0),
            (20.0, -20.0),
            (20.0, 20.0),
            (10.0, 20.0),
            (10.0, -8.0),
            (-10.0, -8.0),
            (-10.0, 20.0),
            (-20.0, 20.0),
        ]),
        ShapeName::Pentagon => regular(5, 18.0, 90.0),
        ShapeName::Minus => mm(&[(-20.0, -6.0), (20.0, -6.0), (20.0, 6.0), (-20.0, 6.0)]),
        ShapeName::Hexagon => regular(6, 18.0, 0.0),
        ShapeName::Diamond => mm(&[(20.0, 0.0), (0.0, 10.0), (-20.0, 0.0), (0.0, -10.0)]),
        ShapeName::Plus => mm(&[
            (20.0, -6.0),
            (20.0, 6.0),
            (6.0, 6.0),
            (6.0, 20.0),
            (-6.0, 20.0),
            (-6.0, 6.0),
            (-20.0, 6.0),
            (-20.0, -6.0),
            (-6.0, -6.0),
            (-6.0, -20.0),
            (6.0, -20.0),
            (6.0, -6.0),
        ]),
        ShapeName::Circle => regular(32, 16.0, 0.0),
    }
}

/// All nine shapes with the default clearance, in a fixed order.
pub fn builtin_shapes() -> Vec<ShapeSpec> {
    ShapeName::ALL.into_iter().map(ShapeSpec::new).collect()
}

/// Per-shape clearance overrides on top of a global default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClearanceTable {
    pub default: f64,
    #[serde(default)]
    pub overrides: BTreeMap<ShapeName, f64>,
}

impl Default for ClearanceTable {
    fn default() -> Self {
        Self {
            default: DEFAULT_CLEARANCE,
            overrides: BTreeMap::new(),
        }
    }
}

impl ClearanceTable {
    pub fn get(&self, name: ShapeName) -> f64 {
        self.overrides.get(&name).copied().unwrap_or(self.default)
    }
}

/// A shape plus its extrusion rotation on the base face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ObjectKey {
    pub shape: ShapeName,
    pub rotated45: bool,
}

impl ObjectKey {
    pub fn new(shape: ShapeName, rotated45: bool) -> Self {
        Self { shape, rotated45 }
    }

    pub fn extrusion_rotation(self) -> f64 {
        if self.rotated45 {
            std::f64::consts::FRAC_PI_4
        } else {
            0.0
        }
    }

    /// Builds the peg/hole pair for this object.
    pub fn pair(self, clearances: &ClearanceTable) -> Result<ObjectPair> {
        make_pair(
            &ShapeSpec::new(self.shape),
            clearances.get(self.shape),
            self.extrusion_rotation(),
        )
    }
}

impl fmt::Display for ObjectKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.rotated45 {
            write!(f, "{}-r45", self.shape)
        } else {
            write!(f, "{}", self.shape)
        }
    }
}

impl FromStr for ObjectKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.strip_suffix("-r45") {
            Some(base) => Ok(Self::new(base.parse()?, true)),
            None => Ok(Self::new(s.parse()?, false)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ObjectSet {
    #[serde(rename = "order1")]
    Order1,
    #[serde(rename = "order2")]
    Order2,
    #[serde(rename = "order4")]
    Order4,
    #[serde(rename = "order-all")]
    OrderAll,
    #[serde(rename = "rotated45")]
    Rotated45,
}

impl ObjectSet {
    pub const ALL: [ObjectSet; 5] = [
        ObjectSet::Order1,
        ObjectSet::Order2,
        ObjectSet::Order4,
        ObjectSet::OrderAll,
        ObjectSet::Rotated45,
    ];

    pub fn objects(self) -> Vec<ObjectKey> {
        let by_order = |k: u32| {
            ShapeName::ALL
                .into_iter()
                .filter(move |s| s.symmetry_order() == k)
                .map(|s| ObjectKey::new(s, false))
                .collect()
        };
        match self {
            ObjectSet::Order1 => by_order(1),
            ObjectSet::Order2 => by_order(2),
            ObjectSet::Order4 => by_order(4),
            ObjectSet::OrderAll => ShapeName::ALL
                .into_iter()
                .map(|s| ObjectKey::new(s, false))
                .collect(),
            ObjectSet::Rotated45 => ShapeName::ALL
                .into_iter()
                .map(|s| ObjectKey::new(s, true))
                .collect(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ObjectSet::Order1 => "order1",
            ObjectSet::Order2 => "order2",
            ObjectSet::Order4 => "order4",
            ObjectSet::OrderAll => "order-all",
            ObjectSet::Rotated45 => "rotated45",
        }
    }
}

impl fmt::Display for ObjectSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ObjectSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .to_ascii_lowercase()
            .chars()
            .filter(|c| !matches!(c, '-' | '_'))
            .collect();
        match norm.as_str() {
            "order1" => Ok(ObjectSet::Order1),
            "order2" => Ok(ObjectSet::Order2),
            "order4" => Ok(ObjectSet::Order4),
            "orderall" | "all" => Ok(ObjectSet::OrderAll),
            "rotated45" | "45deg" | "r45" => Ok(ObjectSet::Rotated45),
            _ => Err(Error::InvalidArgument(format!("unknown object set `{s}`"))),
        }
    }
}

/// Peg/hole pair sharing one cross-section.
///
/// `peg_polygon` and `hole_polygon` are both expressed in the design frame
/// (extrusion rotation applied). In its own object frame the hole outline is
/// the mirror image, see [`ObjectPair::hole_polygon_local`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectPair {
    pub shape: ShapeSpec,
    pub base_size: f64,
    pub extrusion_height: f64,
    pub intrusion_depth: f64,
    pub extrusion_rotation: f64,
    pub peg_polygon: Vec<Vec2<f64>>,
    pub hole_polygon: Vec<Vec2<f64>>,
}

impl ObjectPair {
    pub fn symmetry_order(&self) -> u32 {
        self.shape.symmetry_order
    }

    pub fn key(&self) -> ObjectKey {
        ObjectKey::new(self.shape.name, self.extrusion_rotation != 0.0)
    }

    /// Intrusion outline in the hole's own frame. The hole faces the peg, so
    /// its outline is the peg outline reflected across the x axis.
    pub fn hole_polygon_local(&self) -> Vec<Vec2<f64>> {
        polygon::mirror_y(&self.hole_polygon)
    }
}

/// Builds a pair whose peg is the design polygon offset inward by
/// `clearance / 2` and whose hole is offset outward by the same amount.
pub fn make_pair(shape: &ShapeSpec, clearance: f64, extrusion_rotation: f64) -> Result<ObjectPair> {
    if !(MIN_CLEARANCE - 1e-12..=MAX_CLEARANCE + 1e-12).contains(&clearance) {
        return Err(Error::InvalidClearance(clearance));
    }
    let design = polygon::rotate(&shape.polygon, extrusion_rotation);
    let half = clearance * 0.5;
    Ok(ObjectPair {
        shape: ShapeSpec {
            clearance,
            ..shape.clone()
        },
        base_size: BASE_SIZE,
        extrusion_height: EXTRUSION_HEIGHT,
        intrusion_depth: INTRUSION_DEPTH,
        extrusion_rotation,
        peg_polygon: polygon::offset(&design, -half),
        hole_polygon: polygon::offset(&design, half),
    })
}
