use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{gram_schmidt, sixd_from_matrix, Mat3, Quat, Rot6D};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RotationRepr {
    Quaternion,
    SixD,
}

impl RotationRepr {
    /// Raw values per arm.
    pub fn dim(self) -> usize {
        match self {
            RotationRepr::Quaternion => 4,
            RotationRepr::SixD => 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RotationMetric {
    Mse,
    Frobenius,
}

/// One of the four rotation representation / loss pairings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RotationLossSpec {
    pub repr: RotationRepr,
    pub metric: RotationMetric,
}

impl RotationLossSpec {
    pub const QUAT_MSE: Self = Self::new(RotationRepr::Quaternion, RotationMetric::Mse);
    pub const QUAT_FROBENIUS: Self = Self::new(RotationRepr::Quaternion, RotationMetric::Frobenius);
    pub const SIXD_MSE: Self = Self::new(RotationRepr::SixD, RotationMetric::Mse);
    pub const SIXD_FROBENIUS: Self = Self::new(RotationRepr::SixD, RotationMetric::Frobenius);

    pub const ALL: [Self; 4] = [
        Self::QUAT_MSE,
        Self::QUAT_FROBENIUS,
        Self::SIXD_MSE,
        Self::SIXD_FROBENIUS,
    ];

    pub const fn new(repr: RotationRepr, metric: RotationMetric) -> Self {
        Self { repr, metric }
    }
}

impl Default for RotationLossSpec {
    fn default() -> Self {
        Self::SIXD_MSE
    }
}

impl fmt::Display for RotationLossSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let repr = match self.repr {
            RotationRepr::Quaternion => "quat",
            RotationRepr::SixD => "6d",
        };
        let metric = match self.metric {
            RotationMetric::Mse => "mse",
            RotationMetric::Frobenius => "frob",
        };
        write!(f, "{repr}-{metric}")
    }
}

impl FromStr for RotationLossSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|spec| spec.to_string() == s.to_ascii_lowercase())
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown rotation spec `{s}` (expected quat-mse, quat-frob, 6d-mse, 6d-frob)"
                ))
            })
    }
}

/// Flips `target` onto the hemisphere of `pred`.
pub fn align_quat_sign<T: Real>(pred: &Quat<T>, target: Quat<T>) -> Quat<T> {
    if pred.dot(target) < T::zero() {
        -target
    } else {
        target
    }
}

/// Rotation matrix of an unnormalized quaternion.
pub fn quat_matrix<T: Real>(raw: &[T]) -> Result<Mat3<T>> {
    Quat::from_array([raw[0], raw[1], raw[2], raw[3]])
        .try_normalize(T::lit(super::GS_EPS))
        .map(Quat::to_matrix)
        .ok_or(Error::DegenerateInput("quaternion has vanishing norm"))
}

/// Target values in the given representation; quaternion targets are
/// sign-aligned to `pred`.
pub fn target_repr<T: Real>(repr: RotationRepr, pred: &[T], target: &Mat3<T>) -> Vec<T> {
    match repr {
        RotationRepr::SixD => sixd_from_matrix(target).to_array().to_vec(),
        RotationRepr::Quaternion => {
            let p = Quat::from_array([pred[0], pred[1], pred[2], pred[3]]);
            align_quat_sign(&p, Quat::from_matrix(target))
                .to_array()
                .to_vec()
        }
    }
}

/// Rotation loss over one or more arms.
///
/// `pred` holds `repr.dim()` raw values per arm, concatenated. The MSE metric
/// averages the squared error over all raw values; the Frobenius metric sums
/// `‖R(pred) − R_target‖²_F` over arms.
pub fn rotation_loss<T: Real>(
    pred: &[T],
    targets: &[Mat3<T>],
    spec: RotationLossSpec,
) -> Result<T> {
    let d = spec.repr.dim();
    if pred.len() != d * targets.len() {
        return Err(Error::dims(format!(
            "rotation prediction has {} values, expected {}",
            pred.len(),
            d * targets.len()
        )));
    }
    let mut acc = T::zero();
    for (chunk, target) in pred.chunks(d).zip(targets) {
        match spec.metric {
            RotationMetric::Mse => {
                let tv = target_repr(spec.repr, chunk, target);
                for (p, t) in chunk.iter().zip(tv) {
                    acc = acc + (*p - t) * (*p - t);
                }
            }
            RotationMetric::Frobenius => {
                let r = match spec.repr {
                    RotationRepr::SixD => gram_schmidt(&Rot6D::from_slice(chunk))?,
                    RotationRepr::Quaternion => quat_matrix(chunk)?,
                };
                acc = acc + r.sub(target).frobenius_squared();
            }
        }
    }
    Ok(match spec.metric {
        RotationMetric::Mse => acc / T::lit(pred.len() as f64),
        RotationMetric::Frobenius => acc,
    })
}
