use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env::{ColorMode, EnvConfig, ObsConfig, Observation, TaskVariation, ViewSet};
use crate::error::{Error, Result};
use crate::shapes::{ClearanceTable, ObjectKey, ObjectSet};
use crate::ActionVec;

pub const MAGIC: &[u8; 4] = b"GPIH";
pub const VERSION: u32 = 1;
pub const SCHEMA: &str = "geopeg-demos";

/// One (observation, action) pair as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub state: Vec<f32>,
    pub action: [f32; 18],
    /// One `resolution²` byte image per configured view.
    pub views: Vec<Vec<u8>>,
}

impl Frame {
    pub fn from_observation(obs: &Observation, action: &ActionVec) -> Self {
        Self {
            state: obs.state_vector().iter().map(|&x| x as f32).collect(),
            action: action.v.map(|x| x as f32),
            views: obs.views.iter().map(|v| v.to_u8()).collect(),
        }
    }

    pub fn action_vec(&self) -> ActionVec {
        ActionVec {
            v: self.action.map(f64::from),
        }
    }

    pub fn state_f64(&self) -> Vec<f64> {
        self.state.iter().map(|&x| x as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub object: ObjectKey,
    pub seed: u64,
    pub success: bool,
    pub frames: Vec<Frame>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMeta {
    pub object: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub obs_dim: usize,
    pub action_dim: usize,
    pub proprio: bool,
    pub oracle: bool,
    pub views: ViewSet,
    pub resolution: usize,
    pub color: ColorMode,
    pub variation: TaskVariation,
    pub object_set: ObjectSet,
    pub n_episodes: usize,
    pub seed: u64,
    pub clearance: ClearanceTable,
    pub episodes: Vec<EpisodeMeta>,
}

impl Manifest {
    pub fn new(
        obs: &ObsConfig,
        variation: TaskVariation,
        object_set: ObjectSet,
        seed: u64,
        clearance: ClearanceTable,
    ) -> Self {
        Self {
            schema: SCHEMA.into(),
            obs_dim: obs.state_dim(),
            action_dim: ActionVec::DIM,
            proprio: obs.proprio,
            oracle: obs.oracle,
            views: obs.views,
            resolution: obs.resolution,
            color: obs.color,
            variation,
            object_set,
            n_episodes: 0,
            seed,
            clearance,
            episodes: Vec::new(),
        }
    }

    pub fn obs_config(&self) -> ObsConfig {
        ObsConfig {
            proprio: self.proprio,
            oracle: self.oracle,
            views: self.views,
            resolution: self.resolution,
            color: self.color,
        }
    }

    pub fn env_config(&self) -> EnvConfig {
        EnvConfig {
            obs: self.obs_config(),
            ..EnvConfig::default()
        }
    }

    fn n_views(&self) -> usize {
        self.views.views().len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub manifest: Manifest,
    pub episodes: Vec<Episode>,
}

/// Episode counts grouped by symmetry order (1, 2, 4).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Mixture {
    pub order1: usize,
    pub order2: usize,
    pub order4: usize,
}

impl Mixture {
    pub fn total(&self) -> usize {
        self.order1 + self.order2 + self.order4
    }

    pub fn fractions(&self) -> [f64; 3] {
        let n = self.total().max(1) as f64;
        [self.order1, self.order2, self.order4].map(|c| c as f64 / n)
    }
}

impl Dataset {
    pub fn empty(manifest: Manifest) -> Self {
        Self {
            manifest,
            episodes: Vec::new(),
        }
    }

    pub fn n_frames(&self) -> usize {
        self.episodes.iter().map(|e| e.frames.len()).sum()
    }

    pub fn mixture(&self) -> Mixture {
        let mut m = Mixture::default();
        for e in &self.episodes {
            match e.object.shape.symmetry_order() {
                1 => m.order1 += 1,
                2 => m.order2 += 1,
                _ => m.order4 += 1,
            }
        }
        m
    }

    /// Rebuilds the manifest's per-episode list from `episodes`.
    pub fn sync_manifest(&mut self) {
        self.manifest.n_episodes = self.episodes.len();
        self.manifest.episodes = self
            .episodes
            .iter()
            .map(|e| EpisodeMeta {
                object: e.object.to_string(),
                seed: e.seed,
            })
            .collect();
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let m = &self.manifest;
        let pixels = m.resolution * m.resolution;
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        let json = serde_json::to_vec(m).map_err(|e| Error::format(e.to_string()))?;
        out.extend_from_slice(
            &u32::try_from(json.len())
                .map_err(|_| Error::format("manifest too large"))?
                .to_le_bytes(),
        );
        out.extend_from_slice(&json);
        for e in &self.episodes {
            out.extend_from_slice(&(e.frames.len() as u32).to_le_bytes());
            out.push(e.success as u8);
            for f in &e.frames {
                if f.state.len() != m.obs_dim || f.views.len() != m.n_views() {
                    return Err(Error::dims("frame does not match manifest"));
                }
                for x in &f.state {
                    out.extend_from_slice(&x.to_le_bytes());
                }
                for x in &f.action {
                    out.extend_from_slice(&x.to_le_bytes());
                }
                for v in &f.views {
                    if v.len() != pixels {
                        return Err(Error::dims("view size does not match manifest"));
                    }
                    out.extend_from_slice(v);
                }
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { buf: bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::format("bad magic, not a demonstration file"));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::format(format!("unsupported version {version}")));
        }
        let len = r.u32()? as usize;
        let manifest: Manifest = serde_json::from_slice(r.take(len)?)
            .map_err(|e| Error::format(format!("manifest: {e}")))?;
        if manifest.schema != SCHEMA
            || manifest.action_dim != ActionVec::DIM
            || manifest.episodes.len() != manifest.n_episodes
            || manifest.obs_dim != manifest.obs_config().state_dim()
        {
            return Err(Error::format("inconsistent manifest"));
        }
        manifest
            .obs_config()
            .validate()
            .map_err(|e| Error::format(format!("manifest: {e}")))?;
        let n_views = manifest.n_views();
        let pixels = manifest.resolution * manifest.resolution;
        let frame_bytes = 4 * (manifest.obs_dim + ActionVec::DIM) + n_views * pixels;
        let mut episodes = Vec::with_capacity(manifest.n_episodes.min(1 << 16));
        for meta in &manifest.episodes {
            let n = r.u32()? as usize;
            let success = match r.take(1)?[0] {
                0 => false,
                1 => true,
                b => return Err(Error::format(format!("bad success flag {b}"))),
            };
            if r.remaining() < n.saturating_mul(frame_bytes) {
                return Err(Error::format("truncated episode data"));
            }
            let mut frames = Vec::with_capacity(n);
            for _ in 0..n {
                let state = (0..manifest.obs_dim)
                    .map(|_| r.finite_f32())
                    .collect::<Result<_>>()?;
                let mut action = [0f32; 18];
                for a in &mut action {
                    *a = r.finite_f32()?;
                }
                let views = (0..n_views)
                    .map(|_| r.take(pixels).map(<[u8]>::to_vec))
                    .collect::<Result<_>>()?;
                frames.push(Frame {
                    state,
                    action,
                    views,
                });
            }
            let object = meta
                .object
                .parse()
                .map_err(|_| Error::format(format!("unknown object `{}`", meta.object)))?;
            episodes.push(Episode {
                object,
                seed: meta.seed,
                success,
                frames,
            });
        }
        if r.remaining() != 0 {
            return Err(Error::format("trailing bytes after last episode"));
        }
        Ok(Self { manifest, episodes })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        let mut f = std::fs::File::create(path)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::format("unexpected end of file"));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn finite_f32(&mut self) -> Result<f32> {
        let x = f32::from_le_bytes(self.take(4)?.try_into().unwrap());
        if x.is_finite() {
            Ok(x)
        } else {
            Err(Error::format("non-finite value in frame data"))
        }
    }
}
