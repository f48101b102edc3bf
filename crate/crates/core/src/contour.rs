//! Marching-squares iso-lines of a scalar field sampled on a rectilinear grid.
//!
//! Cells touching a non-finite sample are masked. Saddle cells are resolved
//! with the cell-centre average. Segments are chained into polylines through
//! shared edge crossings, so each output polyline is an ordered point list.

use std::collections::HashMap;

use serde::Serialize;

/// An ordered list of `(x, y)` points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polyline {
    pub points: Vec<[f64; 2]>,
    pub closed: bool,
}

/// Scalar samples `values[j * xs.len() + i]` at `(xs[i], ys[j])`.
#[derive(Debug, Clone, Copy)]
pub struct Field<'a> {
    pub xs: &'a [f64],
    pub ys: &'a [f64],
    pub values: &'a [f64],
}

impl<'a> Field<'a> {
    pub fn new(xs: &'a [f64], ys: &'a [f64], values: &'a [f64]) -> Self {
        assert_eq!(xs.len() * ys.len(), values.len(), "field shape mismatch");
        Self { xs, ys, values }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.xs.len() + i]
    }
}

/// Identifies a grid edge: horizontal edges run from `(i, j)` to `(i+1, j)`,
/// vertical edges from `(i, j)` to `(i, j+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Edge {
    H(usize, usize),
    V(usize, usize),
}

/// Iso-lines of `field` at `level`.
pub fn march(field: &Field<'_>, level: f64) -> Vec<Polyline> {
    let nx = field.xs.len();
    let ny = field.ys.len();
    if nx < 2 || ny < 2 {
        return Vec::new();
    }

    let crossing = |e: Edge| -> [f64; 2] {
        let ((i0, j0), (i1, j1)) = match e {
            Edge::H(i, j) => ((i, j), (i + 1, j)),
            Edge::V(i, j) => ((i, j), (i, j + 1)),
        };
        let (v0, v1) = (field.at(i0, j0), field.at(i1, j1));
        let t = if v1 == v0 { 0.5 } else { ((level - v0) / (v1 - v0)).clamp(0.0, 1.0) };
        [
            field.xs[i0] + t * (field.xs[i1] - field.xs[i0]),
            field.ys[j0] + t * (field.ys[j1] - field.ys[j0]),
        ]
    };

    let mut segments: Vec<(Edge, Edge)> = Vec::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            // corners counter-clockwise from bottom-left
            let v = [field.at(i, j), field.at(i + 1, j), field.at(i + 1, j + 1), field.at(i, j + 1)];
            if v.iter().any(|x| !x.is_finite()) {
                continue;
            }
            let above = v.map(|x| x >= level);
            let case = above
                .iter()
                .enumerate()
                .fold(0u8, |acc, (k, &a)| acc | ((a as u8) << k));
            let bottom = Edge::H(i, j);
            let right = Edge::V(i + 1, j);
            let top = Edge::H(i, j + 1);
            let left = Edge::V(i, j);
            let centre_above = (v[0] + v[1] + v[2] + v[3]) / 4.0 >= level;
            match case {
                0 | 15 => {}
                1 | 14 => segments.push((left, bottom)),
                2 | 13 => segments.push((bottom, right)),
                3 | 12 => segments.push((left, right)),
                4 | 11 => segments.push((right, top)),
                6 | 9 => segments.push((bottom, top)),
                7 | 8 => segments.push((left, top)),
                5 => {
                    if centre_above {
                        segments.push((left, top));
                        segments.push((bottom, right));
                    } else {
                        segments.push((left, bottom));
                        segments.push((right, top));
                    }
                }
                10 => {
                    if centre_above {
                        segments.push((left, bottom));
                        segments.push((right, top));
                    } else {
                        segments.push((left, top));
                        segments.push((bottom, right));
                    }
                }
                _ => unreachable!(),
            }
        }
    }
    chain(&segments, crossing)
}

fn chain(segments: &[(Edge, Edge)], crossing: impl Fn(Edge) -> [f64; 2]) -> Vec<Polyline> {
    let mut by_edge: HashMap<Edge, Vec<usize>> = HashMap::new();
    for (k, (a, b)) in segments.iter().enumerate() {
        by_edge.entry(*a).or_default().push(k);
        by_edge.entry(*b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut out = Vec::new();

    let walk = |start_seg: usize, start_edge: Edge, used: &mut Vec<bool>| -> Polyline {
        let mut edges = vec![start_edge];
        let mut seg = start_seg;
        let mut at = start_edge;
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            let next = if a == at { b } else { a };
            edges.push(next);
            at = next;
            match by_edge[&at].iter().find(|&&s| !used[s]) {
                Some(&s) => seg = s,
                None => break,
            }
        }
        let closed = edges.len() > 2 && edges.first() == edges.last();
        Polyline { points: edges.into_iter().map(&crossing).collect(), closed }
    };

    // open chains start at edges with a single segment (grid border or mask)
    for k in 0..segments.len() {
        if used[k] {
            continue;
        }
        let (a, b) = segments[k];
        if by_edge[&a].len() == 1 {
            out.push(walk(k, a, &mut used));
        } else if by_edge[&b].len() == 1 {
            out.push(walk(k, b, &mut used));
        }
    }
    for k in 0..segments.len() {
        if !used[k] {
            let start = segments[k].0;
            out.push(walk(k, start, &mut used));
        }
    }
    out
}

/// Shortest distance from `p` to the segment `a`-`b`, with `x` and `y`
/// divided by `scale` first.
pub fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2], scale: [f64; 2]) -> f64 {
    let p = [p[0] / scale[0], p[1] / scale[1]];
    let a = [a[0] / scale[0], a[1] / scale[1]];
    let b = [b[0] / scale[0], b[1] / scale[1]];
    let ab = [b[0] - a[0], b[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0)
    };
    let d = [p[0] - a[0] - t * ab[0], p[1] - a[1] - t * ab[1]];
    (d[0] * d[0] + d[1] * d[1]).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axis(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64).collect()
    }

    #[test]
    fn linear_field_gives_straight_line() {
        let xs = axis(11);
        let ys = axis(7);
        let values: Vec<f64> = ys.iter().flat_map(|_| xs.iter().copied()).collect();
        let lines = march(&Field::new(&xs, &ys, &values), 3.5);
        assert_eq!(lines.len(), 1);
        let line = &lines[0];
        assert!(!line.closed);
        assert_eq!(line.points.len(), 7);
        for p in &line.points {
            assert!((p[0] - 3.5).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_field_has_no_contours() {
        let xs = axis(5);
        let ys = axis(5);
        let values = vec![2.0; 25];
        assert!(march(&Field::new(&xs, &ys, &values), 1.0).is_empty());
        assert!(march(&Field::new(&xs, &ys, &values), 3.0).is_empty());
    }

    #[test]
    fn circle_is_closed_and_near_radius() {
        let xs: Vec<f64> = (0..41).map(|i| -2.0 + i as f64 * 0.1).collect();
        let ys = xs.clone();
        let values: Vec<f64> = ys
            .iter()
            .flat_map(|&y| xs.iter().map(move |&x| (x * x + y * y).sqrt()))
            .collect();
        let lines = march(&Field::new(&xs, &ys, &values), 1.0);
        assert_eq!(lines.len(), 1);
        assert!(lines[0].closed);
        for p in &lines[0].points {
            assert!(((p[0] * p[0] + p[1] * p[1]).sqrt() - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn masked_cells_split_lines() {
        let xs = axis(6);
        let ys = axis(6);
        let mut values: Vec<f64> = ys.iter().flat_map(|_| xs.iter().copied()).collect();
        values[3 * 6 + 2] = f64::NAN;
        let lines = march(&Field::new(&xs, &ys, &values), 2.5);
        assert_eq!(lines.len(), 2);
    }

    #[test]
    fn distance_to_segment() {
        let d = point_segment_distance([0.5, 1.0], [0.0, 0.0], [1.0, 0.0], [1.0, 1.0]);
        assert!((d - 1.0).abs() < 1e-15);
        let d = point_segment_distance([2.0, 0.0], [0.0, 0.0], [1.0, 0.0], [0.5, 1.0]);
        assert!((d - 2.0).abs() < 1e-15);
    }
}
