//! Level-set tracing on sampled grids by marching squares.

use crate::grid::GridField;
use serde::Serialize;
use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polyline {
    pub points: Vec<(f64, f64)>,
    pub closed: bool,
}

impl Polyline {
    /// Signed area of a closed polyline in the `(r, z)` plane.
    pub fn signed_area(&self) -> f64 {
        let n = self.points.len();
        (0..n)
            .map(|k| {
                let (a, b) = (self.points[k], self.points[(k + 1) % n]);
                a.0 * b.1 - b.0 * a.1
            })
            .sum::<f64>()
            * 0.5
    }

    /// Even-odd point-in-polygon test; false for open polylines.
    pub fn encloses(&self, p: (f64, f64)) -> bool {
        if !self.closed {
            return false;
        }
        let n = self.points.len();
        let mut inside = false;
        for k in 0..n {
            let (a, b) = (self.points[k], self.points[(k + 1) % n]);
            if (a.1 > p.1) != (b.1 > p.1) {
                let x = a.0 + (p.1 - a.1) / (b.1 - a.1) * (b.0 - a.0);
                if p.0 < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn length(&self) -> f64 {
        let n = self.points.len();
        let segs = if self.closed { n } else { n.saturating_sub(1) };
        (0..segs)
            .map(|k| {
                let (a, b) = (self.points[k], self.points[(k + 1) % n]);
                (b.0 - a.0).hypot(b.1 - a.1)
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContourSet {
    pub level: f64,
    pub polylines: Vec<Polyline>,
}

/// Grid edge key: `(horizontal?, i, j)`; a horizontal edge joins `(i, j)`
/// to `(i + 1, j)`, a vertical one `(i, j)` to `(i, j + 1)`.
type EdgeKey = (bool, usize, usize);

/// Closed loops with fewer vertices than this are dropped as under-resolved.
pub const MIN_CLOSED_POINTS: usize = 8;

/// Traces `psi = level` with linear sub-cell interpolation. Closed
/// polylines are ordered counterclockwise. Cells touching invalid samples
/// are skipped.
pub fn trace_contour(f: &GridField, level: f64) -> ContourSet {
    let empty = ContourSet {
        level,
        polylines: Vec::new(),
    };
    match f.range() {
        Some((lo, hi)) if level >= lo && level <= hi => {}
        _ => return empty,
    }
    let s = &f.spec;
    let point = |e: EdgeKey| -> (f64, f64) {
        let (h, i, j) = e;
        let (i1, j1) = if h { (i + 1, j) } else { (i, j + 1) };
        let (v0, v1) = (f.psi[[i, j]], f.psi[[i1, j1]]);
        let t = ((level - v0) / (v1 - v0)).clamp(0.0, 1.0);
        let (r0, z0) = (s.r(i), s.z(j));
        let (r1, z1) = (s.r(i1), s.z(j1));
        (r0 + t * (r1 - r0), z0 + t * (z1 - z0))
    };
    let mut segs: Vec<(EdgeKey, EdgeKey)> = Vec::new();
    for i in 0..s.n_r - 1 {
        for j in 0..s.n_z - 1 {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            if corners.iter().any(|&(a, b)| !f.valid[[a, b]]) {
                continue;
            }
            let v: Vec<f64> = corners.iter().map(|&(a, b)| f.psi[[a, b]]).collect();
            let above: Vec<bool> = v.iter().map(|x| *x > level).collect();
            // Edges in cyclic order: bottom, right, top, left.
            let edges: [EdgeKey; 4] = [(true, i, j), (false, i + 1, j), (true, i, j + 1), (false, i, j)];
            let crossing: Vec<usize> = (0..4).filter(|&k| above[k] != above[(k + 1) % 4]).collect();
            match crossing.len() {
                2 => segs.push((edges[crossing[0]], edges[crossing[1]])),
                4 => {
                    let center = 0.25 * v.iter().sum::<f64>();
                    // Join around the corner whose side differs from the center.
                    if (center > level) == above[0] {
                        segs.push((edges[0], edges[1]));
                        segs.push((edges[2], edges[3]));
                    } else {
                        segs.push((edges[3], edges[0]));
                        segs.push((edges[1], edges[2]));
                    }
                }
                _ => {}
            }
        }
    }
    let mut adj: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
    for (k, (a, b)) in segs.iter().enumerate() {
        adj.entry(*a).or_default().push(k);
        adj.entry(*b).or_default().push(k);
    }
    let mut used = vec![false; segs.len()];
    let mut polylines = Vec::new();
    let walk = |start_seg: usize, from: EdgeKey, used: &mut Vec<bool>| -> Vec<EdgeKey> {
        let mut chain = vec![from];
        let mut seg = start_seg;
        let mut at = from;
        loop {
            used[seg] = true;
            let (a, b) = segs[seg];
            let next = if a == at { b } else { a };
            chain.push(next);
            at = next;
            match adj[&at].iter().find(|&&k| !used[k]) {
                Some(&k) => seg = k,
                None => break,
            }
        }
        chain
    };
    // Open chains start at edges with a single segment; loops come after.
    let mut order: Vec<usize> = (0..segs.len()).collect();
    order.sort_by_key(|&k| {
        let (a, b) = segs[k];
        !(adj[&a].len() == 1 || adj[&b].len() == 1)
    });
    for k in order {
        if used[k] {
            continue;
        }
        let (a, b) = segs[k];
        let from = if adj[&b].len() == 1 && adj[&a].len() != 1 { b } else { a };
        let mut chain = walk(k, from, &mut used);
        let closed = chain.len() > 2 && chain.first() == chain.last();
        if closed {
            chain.pop();
        } else if adj[&from].len() != 1 {
            // Started mid-chain: extend backwards from the other end.
            let back_start = adj[&from].iter().copied().find(|&s| !used[s]);
            if let Some(s2) = back_start {
                let mut back = walk(s2, from, &mut used);
                back.reverse();
                back.pop();
                back.extend(chain);
                chain = back;
            }
        }
        let mut pl = Polyline {
            points: chain.into_iter().map(point).collect(),
            closed,
        };
        pl.points.dedup();
        if pl.closed {
            if pl.points.len() < MIN_CLOSED_POINTS {
                continue;
            }
            if pl.signed_area() < 0.0 {
                pl.points.reverse();
            }
        }
        polylines.push(pl);
    }
    ContourSet { level, polylines }
}
