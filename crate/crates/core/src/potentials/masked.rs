//! Discontinuous interactions switched on by the position of the pair.

use serde::{Deserialize, Serialize};

use super::Interaction;
use crate::error::{Error, Result};
use crate::measures::dist;

/// A box or ball in `R^d`. Membership is asked either for the open set,
/// its closure, or the interior of its complement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Region {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl Region {
    pub fn dim(&self) -> usize {
        match self {
            Region::Box { lower, .. } => lower.len(),
            Region::Ball { center, .. } => center.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Region::Box { lower, upper } => {
                if lower.is_empty() || lower.len() != upper.len() {
                    return Err(Error::param("region", "box bounds must have equal positive length"));
                }
                if lower.iter().zip(upper).any(|(l, u)| !(l < u)) {
                    return Err(Error::param("region", "box lower bounds must be below upper bounds"));
                }
            }
            Region::Ball { center, radius } => {
                if center.is_empty() || !(*radius > 0.0) || center.iter().any(|c| !c.is_finite()) {
                    return Err(Error::param("region", "ball needs a finite center and radius > 0"));
                }
            }
        }
        Ok(())
    }

    /// `x` in the open set.
    pub fn contains_open(&self, x: &[f64]) -> bool {
        match self {
            Region::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(v, (l, u))| *l < *v && *v < *u),
            Region::Ball { center, radius } => dist(x, center) < *radius,
        }
    }

    /// `x` in the closed set.
    pub fn contains_closed(&self, x: &[f64]) -> bool {
        match self {
            Region::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(v, (l, u))| *l <= *v && *v <= *u),
            Region::Ball { center, radius } => dist(x, center) <= *radius,
        }
    }

    /// `x` in the interior of the complement of the open set.
    pub fn outside_closure(&self, x: &[f64]) -> bool {
        !self.contains_closed(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskKind {
    /// `h` when both points lie in the open set `O`.
    W1,
    /// `h` when both lie in `O` or both lie outside its closure.
    W2,
    /// `h` when the segment `[x, y]` misses the closed set `K`.
    W3,
}

/// Default number of sample points on `[x, y]` for the W3 visibility test.
pub const DEFAULT_SEGMENT_RESOLUTION: usize = 1000;

/// Builds `W1`, `W2` or `W3` from a non-negative continuous `h`.
///
/// For `W3` the segment test evaluates `resolution` equally spaced points of
/// `[x, y]`, endpoints included.
pub fn masked_interaction(
    kind: MaskKind,
    h: Interaction,
    region: Region,
    resolution: usize,
) -> Result<Interaction> {
    region.validate()?;
    let symmetric = h.is_symmetric();
    let label = format!("{kind:?}({})", h.label()).to_lowercase();
    Ok(match kind {
        MaskKind::W1 => Interaction::new(label, symmetric, move |x, y| {
            if region.contains_open(x) && region.contains_open(y) {
                h.eval(x, y)
            } else {
                0.0
            }
        }),
        MaskKind::W2 => Interaction::new(label, symmetric, move |x, y| {
            let inside = region.contains_open(x) && region.contains_open(y);
            let outside = region.outside_closure(x) && region.outside_closure(y);
            if inside || outside {
                h.eval(x, y)
            } else {
                0.0
            }
        }),
        MaskKind::W3 => {
            if resolution < 2 {
                return Err(Error::param("resolution", "need at least 2 segment points"));
            }
            Interaction::new(label, symmetric, move |x, y| {
                let mut point = vec![0.0; x.len()];
                let blocked = (0..resolution).any(|i| {
                    let t = i as f64 / (resolution - 1) as f64;
                    for k in 0..x.len() {
                        point[k] = x[k] + t * (y[k] - x[k]);
                    }
                    region.contains_closed(&point)
                });
                if blocked {
                    0.0
                } else {
                    h.eval(x, y)
                }
            })
        }
    })
}
