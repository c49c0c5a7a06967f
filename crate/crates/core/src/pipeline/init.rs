use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ScalarField;

/// Initial zero level set, in pixel coordinates (row, col).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InitShape {
    Circle {
        row: f64,
        col: f64,
        radius: f64,
    },
    /// Axis-aligned rectangle with corners `(r0, c0)` and `(r1, c1)`.
    Box {
        r0: f64,
        c0: f64,
        r1: f64,
        c1: f64,
    },
}

impl InitShape {
    /// A circle centred in the image with a radius of `fraction` times the
    /// smaller dimension.
    pub fn centered_circle(height: usize, width: usize, fraction: f64) -> Self {
        InitShape::Circle {
            row: height as f64 / 2.0,
            col: width as f64 / 2.0,
            radius: fraction * height.min(width) as f64,
        }
    }

    fn validate(&self, height: usize, width: usize) -> Result<()> {
        let (h, w) = (height as f64, width as f64);
        match *self {
            InitShape::Circle { row, col, radius } => {
                if !(radius > 0.0) || !row.is_finite() || !col.is_finite() || !radius.is_finite() {
                    return Err(Error::DegenerateShape(format!("circle radius {radius}")));
                }
                let dr = (row.clamp(0.0, h - 1.0) - row).abs();
                let dc = (col.clamp(0.0, w - 1.0) - col).abs();
                if dr.hypot(dc) > radius {
                    return Err(Error::DegenerateShape("circle misses the image".into()));
                }
            }
            InitShape::Box { r0, c0, r1, c1 } => {
                if [r0, c0, r1, c1].iter().any(|v| !v.is_finite()) || !(r1 > r0) || !(c1 > c0) {
                    return Err(Error::DegenerateShape(format!(
                        "box ({r0}, {c0})-({r1}, {c1})"
                    )));
                }
                if r1 < 0.0 || c1 < 0.0 || r0 > h - 1.0 || c0 > w - 1.0 {
                    return Err(Error::DegenerateShape("box misses the image".into()));
                }
            }
        }
        Ok(())
    }

    /// Signed distance at a point, positive inside.
    pub fn signed_distance(&self, i: f64, j: f64) -> f64 {
        match *self {
            InitShape::Circle { row, col, radius } => radius - (i - row).hypot(j - col),
            InitShape::Box { r0, c0, r1, c1 } => {
                let (cr, cc) = ((r0 + r1) / 2.0, (c0 + c1) / 2.0);
                let (hr, hc) = ((r1 - r0) / 2.0, (c1 - c0) / 2.0);
                let dr = (i - cr).abs() - hr;
                let dc = (j - cc).abs() - hc;
                let outside = dr.max(0.0).hypot(dc.max(0.0));
                let inside = dr.max(dc).min(0.0);
                -(outside + inside)
            }
        }
    }
}

impl fmt::Display for InitShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            InitShape::Circle { row, col, radius } => write!(f, "circle:{row},{col},{radius}"),
            InitShape::Box { r0, c0, r1, c1 } => write!(f, "box:{r0},{c0},{r1},{c1}"),
        }
    }
}

impl FromStr for InitShape {
    type Err = Error;

    /// `circle:row,col,radius` or `box:r0,c0,r1,c1`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::Parse(format!(
                "init `{s}`: expected circle:r,c,radius or box:r0,c0,r1,c1"
            ))
        };
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        let nums = rest
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| bad())?;
        match (kind.trim(), nums.as_slice()) {
            ("circle", &[row, col, radius]) => Ok(InitShape::Circle { row, col, radius }),
            ("box", &[r0, c0, r1, c1]) => Ok(InitShape::Box { r0, c0, r1, c1 }),
            _ => Err(bad()),
        }
    }
}

/// Exact signed distance field of the shape on a `height x width` grid.
pub fn init_phi(shape: &InitShape, height: usize, width: usize) -> Result<ScalarField> {
    shape.validate(height, width)?;
    Ok(ScalarField::from_fn(height, width, |i, j| {
        shape.signed_distance(i as f64, j as f64)
    }))
}
