use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Pose;
use crate::{Quat, Vec3};

/// Which grasp perturbations are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TaskVariation {
    pub xt: bool,
    pub zt: bool,
    pub yr: bool,
    pub zr: bool,
}

impl TaskVariation {
    pub const NONE: Self = Self::new(false, false, false, false);
    pub const XT: Self = Self::new(true, false, false, false);
    pub const ZT: Self = Self::new(false, true, false, false);
    pub const YR: Self = Self::new(false, false, true, false);
    pub const ZR: Self = Self::new(false, false, false, true);
    pub const XTZR: Self = Self::new(true, false, false, true);
    pub const ZTZR: Self = Self::new(false, true, false, true);
    pub const YRZR: Self = Self::new(false, false, true, true);
    pub const XZTYZR: Self = Self::new(true, true, true, true);

    /// The eight variations of the experiment grid.
    pub const NAMED: [(&'static str, Self); 8] = [
        ("XT", Self::XT),
        ("ZT", Self::ZT),
        ("YR", Self::YR),
        ("ZR", Self::ZR),
        ("XTZR", Self::XTZR),
        ("ZTZR", Self::ZTZR),
        ("YRZR", Self::YRZR),
        ("XZTYZR", Self::XZTYZR),
    ];

    pub const fn new(xt: bool, zt: bool, yr: bool, zr: bool) -> Self {
        Self { xt, zt, yr, zr }
    }
}

impl fmt::Display for TaskVariation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self == Self::NONE {
            return f.write_str("NONE");
        }
        if let Some((name, _)) = Self::NAMED.iter().find(|(_, v)| v == self) {
            return f.write_str(name);
        }
        let parts: Vec<&str> = [
            (self.xt, "XT"),
            (self.zt, "ZT"),
            (self.yr, "YR"),
            (self.zr, "ZR"),
        ]
        .into_iter()
        .filter_map(|(on, n)| on.then_some(n))
        .collect();
        f.write_str(&parts.join("+"))
    }
}

impl FromStr for TaskVariation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let up = s.trim().to_ascii_uppercase();
        if up == "NONE" {
            return Ok(Self::NONE);
        }
        if let Some((_, v)) = Self::NAMED.iter().find(|(n, _)| *n == up) {
            return Ok(*v);
        }
        let mut v = Self::NONE;
        for part in up.split('+') {
            match part {
                "XT" => v.xt = true,
                "ZT" => v.zt = true,
                "YR" => v.yr = true,
                "ZR" => v.zr = true,
                _ => return Err(Error::InvalidArgument(format!("unknown variation `{s}`"))),
            }
        }
        Ok(v)
    }
}

impl TryFrom<String> for TaskVariation {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<TaskVariation> for String {
    fn from(v: TaskVariation) -> String {
        v.to_string()
    }
}

/// Half-range of the XT/ZT translation noise (m).
pub const TRANSLATION_NOISE: f64 = 0.01;
/// Half-range of the YR rotation noise (rad).
pub const TILT_NOISE: f64 = 11.25 * std::f64::consts::PI / 180.0;

/// Object-in-gripper perturbation, expressed in the object frame
/// (z = insertion axis).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GraspOffset {
    pub dx: f64,
    pub dz: f64,
    pub ry: f64,
    /// Quarter turns about the insertion axis, 0..4.
    pub rz_quarters: u8,
}

impl GraspOffset {
    pub const ZERO: Self = Self {
        dx: 0.0,
        dz: 0.0,
        ry: 0.0,
        rz_quarters: 0,
    };

    /// Z rotation in radians, one of {0, π/2, π, 3π/2}.
    pub fn rz(&self) -> f64 {
        self.rz_quarters as f64 * std::f64::consts::FRAC_PI_2
    }

    /// `Trans(dx, 0, dz) ∘ Ry(ry) ∘ Rz(rz)`.
    pub fn transform(&self) -> Pose {
        Pose::new(
            Vec3::new(self.dx, 0.0, self.dz),
            Quat::rot_y(self.ry) * Quat::rot_z(self.rz()),
        )
    }

    /// Samples one arm's offset. All four draws happen regardless of the
    /// flags so enabling one perturbation never changes another's value.
    pub fn sample(variation: TaskVariation, seed: u64, arm: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(arm);
        let dx = rng.gen_range(-TRANSLATION_NOISE..=TRANSLATION_NOISE);
        let dz = rng.gen_range(-TRANSLATION_NOISE..=TRANSLATION_NOISE);
        let ry = rng.gen_range(-TILT_NOISE..=TILT_NOISE);
        let rz = rng.gen_range(0u8..4);
        Self {
            dx: if variation.xt { dx } else { 0.0 },
            dz: if variation.zt { dz } else { 0.0 },
            ry: if variation.yr { ry } else { 0.0 },
            rz_quarters: if variation.zr { rz } else { 0 },
        }
    }
}
