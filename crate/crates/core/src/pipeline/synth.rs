use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::model::{Landmark, LandmarkSet};

/// Radius of the disk-like shapes as a fraction of the smaller dimension.
const DISK_FRACTION: f64 = 0.3;
/// Angular width of the occluded arc of `broken_circle`, in degrees.
pub const BROKEN_CIRCLE_ARC_DEG: f64 = 60.0;
/// Radial depth of the occlusion as a fraction of the radius.
const BROKEN_CIRCLE_DEPTH: f64 = 0.35;
const BROKEN_CIRCLE_LANDMARKS: usize = 5;
/// Fraction of the triangle's height removed at the tip.
const TRIANGLE_CUT: f64 = 0.3;
const TRIANGLE_LANDMARKS: usize = 8;
const MIN_DIM: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Disk,
    BrokenCircle,
    BrokenTriangle,
    BrokenLetters,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 4] = [
        ScenarioKind::Disk,
        ScenarioKind::BrokenCircle,
        ScenarioKind::BrokenTriangle,
        ScenarioKind::BrokenLetters,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::Disk => "disk",
            ScenarioKind::BrokenCircle => "broken_circle",
            ScenarioKind::BrokenTriangle => "broken_triangle",
            ScenarioKind::BrokenLetters => "broken_letters",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::UnknownScenario(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Rect {
    r0: f64,
    c0: f64,
    r1: f64,
    c1: f64,
}

impl Rect {
    fn sdf(&self, i: f64, j: f64) -> f64 {
        let dr = (i - (self.r0 + self.r1) / 2.0).abs() - (self.r1 - self.r0) / 2.0;
        let dc = (j - (self.c0 + self.c1) / 2.0).abs() - (self.c1 - self.c0) / 2.0;
        -(dr.max(0.0).hypot(dc.max(0.0)) + dr.max(dc).min(0.0))
    }

    fn contains(&self, i: f64, j: f64) -> bool {
        i >= self.r0 && i <= self.r1 && j >= self.c0 && j <= self.c1
    }
}

/// The unoccluded shape, positive inside.
#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Disk {
        row: f64,
        col: f64,
        radius: f64,
    },
    Polygon(Vec<(f64, f64)>),
    /// Union of rectangles. The union of box distances is exact outside and
    /// on isolated edges, which is all the landmark test needs.
    Rects(Vec<Rect>),
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    (p.0 - a.0 - t * dx).hypot(p.1 - a.1 - t * dy)
}

fn polygon_contains(poly: &[(f64, f64)], p: (f64, f64)) -> bool {
    let mut inside = false;
    let n = poly.len();
    for k in 0..n {
        let (a, b) = (poly[k], poly[(k + 1) % n]);
        if (a.0 > p.0) != (b.0 > p.0) {
            let c = a.1 + (p.0 - a.0) / (b.0 - a.0) * (b.1 - a.1);
            if p.1 < c {
                inside = !inside;
            }
        }
    }
    inside
}

impl Shape {
    fn sdf(&self, i: f64, j: f64) -> f64 {
        match self {
            Shape::Disk { row, col, radius } => radius - (i - row).hypot(j - col),
            Shape::Polygon(poly) => {
                let n = poly.len();
                let d = (0..n)
                    .map(|k| segment_distance((i, j), poly[k], poly[(k + 1) % n]))
                    .fold(f64::INFINITY, f64::min);
                if polygon_contains(poly, (i, j)) {
                    d
                } else {
                    -d
                }
            }
            Shape::Rects(rects) => rects
                .iter()
                .map(|r| r.sdf(i, j))
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Region set to background in the observed image.
#[derive(Debug, Clone, PartialEq)]
enum Damage {
    /// Everything at distance at least `inner` from the centre whose polar
    /// angle lies within `half_width` of `theta`.
    Sector {
        row: f64,
        col: f64,
        inner: f64,
        theta: f64,
        half_width: f64,
    },
    Rects(Vec<Rect>),
}

/// Polar angle measured clockwise from "up" (decreasing row).
fn polar_angle(di: f64, dj: f64) -> f64 {
    dj.atan2(-di)
}

fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

impl Damage {
    fn contains(&self, i: f64, j: f64) -> bool {
        match self {
            Damage::Sector {
                row,
                col,
                inner,
                theta,
                half_width,
            } => {
                let (di, dj) = (i - row, j - col);
                di.hypot(dj) >= *inner && angle_diff(polar_angle(di, dj), *theta) <= *half_width
            }
            Damage::Rects(rects) => rects.iter().any(|r| r.contains(i, j)),
        }
    }
}

/// A synthetic test image with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub image: ScalarField,
    /// The unoccluded shape.
    pub truth_mask: ScalarField,
    pub suggested_landmarks: LandmarkSet,
    /// Pieces of the true boundary hidden by the occlusion, as (row, col)
    /// polylines.
    pub occluded_boundary: Vec<Vec<(f64, f64)>>,
    shape: Shape,
}

impl Scenario {
    /// Distance from a point to the true (unoccluded) boundary.
    pub fn boundary_distance(&self, row: f64, col: f64) -> f64 {
        self.shape.sdf(row, col).abs()
    }

    /// Signed distance to the true boundary, positive inside.
    pub fn truth_sdf(&self) -> ScalarField {
        let (h, w) = self.image.dims();
        ScalarField::from_fn(h, w, |i, j| self.shape.sdf(i as f64, j as f64))
    }

    pub fn occluded_length(&self) -> f64 {
        self.occluded_boundary
            .iter()
            .map(|p| polyline_length(p))
            .sum()
    }

    /// `k` landmarks at evenly spaced arc-length positions along the
    /// occluded boundary, each snapped to a nearby pixel that lies within
    /// half a pixel of the true boundary.
    pub fn sample_landmarks(&self, k: usize) -> LandmarkSet {
        let total = self.occluded_length();
        let targets = (0..k).map(|m| (m as f64 + 0.5) / k as f64 * total);
        self.snap_all(targets.map(|s| point_at(&self.occluded_boundary, s)))
    }

    fn snap_all(&self, points: impl Iterator<Item = (f64, f64)>) -> LandmarkSet {
        let mut out: Vec<Landmark> = Vec::new();
        for p in points {
            if let Some(l) = self.snap(p) {
                if !out.contains(&l) {
                    out.push(l);
                }
            }
        }
        LandmarkSet::new(out)
    }

    fn snap(&self, p: (f64, f64)) -> Option<Landmark> {
        let (h, w) = self.image.dims();
        let (ri, ci) = (p.0.round() as i64, p.1.round() as i64);
        let mut best: Option<(f64, Landmark)> = None;
        for reach in 1..=3i64 {
            for i in ri - reach..=ri + reach {
                for j in ci - reach..=ci + reach {
                    if i < 0 || j < 0 || i >= h as i64 || j >= w as i64 {
                        continue;
                    }
                    if self.boundary_distance(i as f64, j as f64) >= 0.5 {
                        continue;
                    }
                    let d = (i as f64 - p.0).hypot(j as f64 - p.1);
                    if best.is_none_or(|(bd, _)| d < bd) {
                        best = Some((d, Landmark::new(i, j)));
                    }
                }
            }
            if best.is_some() {
                break;
            }
        }
        best.map(|(_, l)| l)
    }
}

fn polyline_length(p: &[(f64, f64)]) -> f64 {
    p.windows(2)
        .map(|s| (s[1].0 - s[0].0).hypot(s[1].1 - s[0].1))
        .sum()
}

/// The point at arc length `s` along the concatenated pieces.
fn point_at(pieces: &[Vec<(f64, f64)>], mut s: f64) -> (f64, f64) {
    for piece in pieces {
        for seg in piece.windows(2) {
            let len = (seg[1].0 - seg[0].0).hypot(seg[1].1 - seg[0].1);
            if s <= len && len > 0.0 {
                let t = s / len;
                return (
                    seg[0].0 + t * (seg[1].0 - seg[0].0),
                    seg[0].1 + t * (seg[1].1 - seg[0].1),
                );
            }
            s -= len;
        }
    }
    *pieces
        .last()
        .and_then(|p| p.last())
        .expect("occluded boundary is nonempty")
}

fn arc(row: f64, col: f64, radius: f64, from: f64, to: f64) -> Vec<(f64, f64)> {
    let steps = ((to - from).abs() * radius * 4.0).ceil().max(2.0) as usize;
    (0..=steps)
        .map(|k| {
            let t = from + (to - from) * k as f64 / steps as f64;
            (row - radius * t.cos(), col + radius * t.sin())
        })
        .collect()
}

/// `UCLA` in block strokes. Each letter is a union of bars in a unit box,
/// given as (r0, c0, r1, c1) fractions.
const LETTERS: [&[(f64, f64, f64, f64)]; 4] = [
    &[
        (0.0, 0.0, 1.0, 0.25),
        (0.0, 0.75, 1.0, 1.0),
        (0.75, 0.0, 1.0, 1.0),
    ],
    &[
        (0.0, 0.0, 1.0, 0.25),
        (0.0, 0.0, 0.25, 1.0),
        (0.75, 0.0, 1.0, 1.0),
    ],
    &[(0.0, 0.0, 1.0, 0.25), (0.75, 0.0, 1.0, 1.0)],
    &[
        (0.0, 0.0, 1.0, 0.25),
        (0.0, 0.75, 1.0, 1.0),
        (0.0, 0.0, 0.25, 1.0),
        (0.4, 0.0, 0.6, 1.0),
    ],
];

/// One gap per letter: (letter, bar index, vertical bar?, from, to) with the
/// cut's extent along the bar in unit fractions.
const LETTER_GAPS: [(usize, usize, bool, f64, f64); 4] = [
    (0, 0, true, 0.4, 0.55),
    (1, 1, false, 0.45, 0.6),
    (2, 0, true, 0.35, 0.5),
    (3, 1, true, 0.62, 0.75),
];

struct Layout {
    shape: Shape,
    damage: Option<Damage>,
    pieces: Vec<Vec<(f64, f64)>>,
    suggested: Suggested,
}

enum Suggested {
    None,
    Uniform(usize),
    PieceMidpoints,
}

fn layout(kind: ScenarioKind, h: usize, w: usize) -> Layout {
    let (hf, wf) = (h as f64, w as f64);
    let (row, col) = (hf / 2.0, wf / 2.0);
    let radius = DISK_FRACTION * h.min(w) as f64;
    match kind {
        ScenarioKind::Disk => Layout {
            shape: Shape::Disk { row, col, radius },
            damage: None,
            pieces: Vec::new(),
            suggested: Suggested::None,
        },
        ScenarioKind::BrokenCircle => {
            let half = BROKEN_CIRCLE_ARC_DEG.to_radians() / 2.0;
            Layout {
                shape: Shape::Disk { row, col, radius },
                damage: Some(Damage::Sector {
                    row,
                    col,
                    inner: radius * (1.0 - BROKEN_CIRCLE_DEPTH),
                    theta: 0.0,
                    half_width: half,
                }),
                pieces: vec![arc(row, col, radius, -half, half)],
                suggested: Suggested::Uniform(BROKEN_CIRCLE_LANDMARKS),
            }
        }
        ScenarioKind::BrokenTriangle => {
            let apex = (0.15 * hf, 0.5 * wf);
            let left = (0.85 * hf, 0.15 * wf);
            let right = (0.85 * hf, 0.85 * wf);
            let cut = apex.0 + TRIANGLE_CUT * (left.0 - apex.0);
            let lerp = |a: (f64, f64), b: (f64, f64)| {
                let t = (cut - a.0) / (b.0 - a.0);
                (cut, a.1 + t * (b.1 - a.1))
            };
            Layout {
                shape: Shape::Polygon(vec![apex, right, left]),
                damage: Some(Damage::Rects(vec![Rect {
                    r0: f64::NEG_INFINITY,
                    c0: f64::NEG_INFINITY,
                    r1: cut,
                    c1: f64::INFINITY,
                }])),
                pieces: vec![vec![lerp(apex, left), apex, lerp(apex, right)]],
                suggested: Suggested::Uniform(TRIANGLE_LANDMARKS),
            }
        }
        ScenarioKind::BrokenLetters => {
            let (top, bottom) = (0.3 * hf, 0.7 * hf);
            let (box_w, gap, start) = (0.2 * wf, 0.04 * wf, 0.04 * wf);
            let to_px = |letter: usize, &(r0, c0, r1, c1): &(f64, f64, f64, f64)| {
                let left = start + letter as f64 * (box_w + gap);
                Rect {
                    r0: top + r0 * (bottom - top),
                    c0: left + c0 * box_w,
                    r1: top + r1 * (bottom - top),
                    c1: left + c1 * box_w,
                }
            };
            let rects = LETTERS
                .iter()
                .enumerate()
                .flat_map(|(l, bars)| bars.iter().map(move |b| to_px(l, b)))
                .collect();
            let mut cuts = Vec::new();
            let mut pieces = Vec::new();
            for &(letter, bar, vertical, from, to) in &LETTER_GAPS {
                let b = to_px(letter, &LETTERS[letter][bar]);
                if vertical {
                    let (g0, g1) = (b.r0 + from * (b.r1 - b.r0), b.r0 + to * (b.r1 - b.r0));
                    cuts.push(Rect {
                        r0: g0,
                        c0: b.c0 - 1.0,
                        r1: g1,
                        c1: b.c1 + 1.0,
                    });
                    pieces.push(vec![(g0, b.c0), (g1, b.c0)]);
                    pieces.push(vec![(g0, b.c1), (g1, b.c1)]);
                } else {
                    let (g0, g1) = (b.c0 + from * (b.c1 - b.c0), b.c0 + to * (b.c1 - b.c0));
                    cuts.push(Rect {
                        r0: b.r0 - 1.0,
                        c0: g0,
                        r1: b.r1 + 1.0,
                        c1: g1,
                    });
                    pieces.push(vec![(b.r0, g0), (b.r0, g1)]);
                    pieces.push(vec![(b.r1, g0), (b.r1, g1)]);
                }
            }
            Layout {
                shape: Shape::Rects(rects),
                damage: Some(Damage::Rects(cuts)),
                pieces,
                suggested: Suggested::PieceMidpoints,
            }
        }
    }
}

/// Builds a named scenario: foreground 1, background 0, occlusion set to
/// background, Gaussian noise of standard deviation `noise_sigma` added and
/// clamped to `[0, 1]`. Deterministic in `seed`.
pub fn synth_scenario(
    name: &str,
    (height, width): (usize, usize),
    noise_sigma: f64,
    seed: u64,
) -> Result<Scenario> {
    let kind: ScenarioKind = name.parse()?;
    if height < MIN_DIM || width < MIN_DIM {
        return Err(Error::InvalidParameter {
            name: "dims",
            reason: format!("{height}x{width} is below {MIN_DIM}x{MIN_DIM}"),
        });
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "noise_sigma",
            reason: format!("must be nonnegative and finite, got {noise_sigma}"),
        });
    }
    let Layout {
        shape,
        damage,
        pieces,
        suggested,
    } = layout(kind, height, width);

    let truth_mask = ScalarField::from_fn(height, width, |i, j| {
        if shape.sdf(i as f64, j as f64) >= 0.0 {
            1.0
        } else {
            0.0
        }
    });
    let mut image = ScalarField::from_fn(height, width, |i, j| {
        let hidden = damage
            .as_ref()
            .is_some_and(|d| d.contains(i as f64, j as f64));
        if truth_mask.get(i, j) > 0.5 && !hidden {
            1.0
        } else {
            0.0
        }
    });
    if noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, noise_sigma).expect("sigma validated");
        for v in image.values_mut() {
            *v = (*v + normal.sample(&mut rng)).clamp(0.0, 1.0);
        }
    }

    let mut scenario = Scenario {
        name: kind.as_str().to_string(),
        image,
        truth_mask,
        suggested_landmarks: LandmarkSet::default(),
        occluded_boundary: pieces,
        shape,
    };
    scenario.suggested_landmarks = match suggested {
        Suggested::None => LandmarkSet::default(),
        Suggested::Uniform(k) => scenario.sample_landmarks(k),
        Suggested::PieceMidpoints => {
            let mids: Vec<_> = scenario
                .occluded_boundary
                .iter()
                .map(|p| point_at(std::slice::from_ref(p), polyline_length(p) / 2.0))
                .collect();
            scenario.snap_all(mids.into_iter())
        }
    };
    Ok(scenario)
}
