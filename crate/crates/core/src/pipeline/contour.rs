use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::ScalarField;

/// Sub-pixel zero level set. Vertices are `[row, col]`; a closed polyline
/// does not repeat its first vertex.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub polylines: Vec<Vec<[f64; 2]>>,
    pub closed: Vec<bool>,
}

impl Contour {
    pub fn is_empty(&self) -> bool {
        self.polylines.is_empty()
    }

    pub fn len(&self) -> usize {
        self.polylines.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        self.polylines.iter().flatten().copied()
    }

    /// Segments of every polyline, including the closing one.
    pub fn segments(&self) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
        self.polylines
            .iter()
            .zip(&self.closed)
            .flat_map(|(line, &closed)| {
                let n = line.len();
                let count = if closed && n > 2 {
                    n
                } else {
                    n.saturating_sub(1)
                };
                (0..count).map(move |k| (line[k], line[(k + 1) % n]))
            })
    }

    /// Euclidean distance from a point to the nearest segment; infinite for
    /// an empty contour.
    pub fn distance_to(&self, row: f64, col: f64) -> f64 {
        let mut best = f64::INFINITY;
        for line in &self.polylines {
            if line.len() == 1 {
                best = best.min((line[0][0] - row).hypot(line[0][1] - col));
            }
        }
        self.segments()
            .map(|(a, b)| point_segment_distance([row, col], a, b))
            .fold(best, f64::min)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("contour serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    };
    (p[0] - a[0] - t * d[0]).hypot(p[1] - a[1] - t * d[1])
}

/// Signed shoelace area of a closed ring (positive when the vertices run
/// counter-clockwise in (row, col) axes).
pub fn shoelace_area(ring: &[[f64; 2]]) -> f64 {
    let n = ring.len();
    let twice: f64 = (0..n)
        .map(|k| {
            let (a, b) = (ring[k], ring[(k + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum();
    twice / 2.0
}

/// A grid edge carrying a crossing: horizontal edges join (i, j) and
/// (i, j + 1), vertical ones (i, j) and (i + 1, j).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Edge {
    H(usize, usize),
    V(usize, usize),
}

fn crossing(phi: &ScalarField, edge: Edge) -> [f64; 2] {
    let (a, b) = match edge {
        Edge::H(i, j) => ((i, j), (i, j + 1)),
        Edge::V(i, j) => ((i, j), (i + 1, j)),
    };
    let (fa, fb) = (phi.get(a.0, a.1), phi.get(b.0, b.1));
    let t = fa / (fa - fb);
    [
        a.0 as f64 + t * (b.0 as f64 - a.0 as f64),
        a.1 as f64 + t * (b.1 as f64 - a.1 as f64),
    ]
}

/// Marching squares on the sign of `phi` (inside is `phi >= 0`) with linear
/// interpolation along cell edges. Saddle cells are resolved by the sign of
/// the cell average: when the average is inside, the two inside corners are
/// joined through the centre.
pub fn extract_contour(phi: &ScalarField) -> Contour {
    let (h, w) = phi.dims();
    let inside = |i: usize, j: usize| phi.get(i, j) >= 0.0;
    let mut links: BTreeMap<Edge, Vec<Edge>> = BTreeMap::new();
    let mut link = |a: Edge, b: Edge| {
        links.entry(a).or_default().push(b);
        links.entry(b).or_default().push(a);
    };

    for i in 0..h.saturating_sub(1) {
        for j in 0..w.saturating_sub(1) {
            let (tl, tr, br, bl) = (
                inside(i, j),
                inside(i, j + 1),
                inside(i + 1, j + 1),
                inside(i + 1, j),
            );
            let (top, right, bottom, left) = (
                Edge::H(i, j),
                Edge::V(i, j + 1),
                Edge::H(i + 1, j),
                Edge::V(i, j),
            );
            let mut cut = Vec::with_capacity(4);
            if tl != tr {
                cut.push(top);
            }
            if tr != br {
                cut.push(right);
            }
            if br != bl {
                cut.push(bottom);
            }
            if bl != tl {
                cut.push(left);
            }
            match cut.len() {
                2 => link(cut[0], cut[1]),
                4 => {
                    let avg = (phi.get(i, j)
                        + phi.get(i, j + 1)
                        + phi.get(i + 1, j + 1)
                        + phi.get(i + 1, j))
                        / 4.0;
                    // the corner pair not sharing the centre's side is cut off
                    if (avg >= 0.0) == tl {
                        link(top, right);
                        link(bottom, left);
                    } else {
                        link(left, top);
                        link(right, bottom);
                    }
                }
                _ => {}
            }
        }
    }

    let mut visited: BTreeMap<Edge, bool> = links.keys().map(|&e| (e, false)).collect();
    let mut contour = Contour::default();
    let walk = |start: Edge, visited: &mut BTreeMap<Edge, bool>| -> (Vec<Edge>, bool) {
        let mut path = vec![start];
        visited.insert(start, true);
        let mut prev: Option<Edge> = None;
        let mut cur = start;
        loop {
            let next = links[&cur]
                .iter()
                .copied()
                .find(|n| Some(*n) != prev && !visited[n])
                .or_else(|| {
                    // a single remaining neighbour equal to the start closes the loop
                    links[&cur]
                        .iter()
                        .copied()
                        .find(|n| *n == start && path.len() > 2)
                });
            match next {
                Some(n) if n == start => return (path, true),
                Some(n) => {
                    visited.insert(n, true);
                    path.push(n);
                    prev = Some(cur);
                    cur = n;
                }
                None => return (path, false),
            }
        }
    };

    // open chains start at a domain-border end; everything left is a loop
    let ends: Vec<Edge> = links
        .iter()
        .filter(|(_, n)| n.len() == 1)
        .map(|(&e, _)| e)
        .collect();
    for e in ends {
        if !visited[&e] {
            let (path, closed) = walk(e, &mut visited);
            contour
                .polylines
                .push(path.iter().map(|&e| crossing(phi, e)).collect());
            contour.closed.push(closed);
        }
    }
    let starts: Vec<Edge> = links.keys().copied().collect();
    for e in starts {
        if !visited[&e] {
            let (path, closed) = walk(e, &mut visited);
            contour
                .polylines
                .push(path.iter().map(|&e| crossing(phi, e)).collect());
            contour.closed.push(closed);
        }
    }
    contour
}
