//! Zero-level contours of a margin field sampled on a rectangular grid,
//! by marching squares with linear interpolation along cell edges.

use std::collections::BTreeMap;

use serde::Serialize;

/// Point on the `(gamma, mu)` plane.
pub type Point = (f64, f64);

/// Field values are indexed `[i * ys.len() + j]` with `i` along `xs`.
#[derive(Debug, Clone, Copy)]
pub struct Field<'a> {
    pub xs: &'a [f64],
    pub ys: &'a [f64],
    pub values: &'a [f64],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polyline {
    pub points: Vec<Point>,
    pub closed: bool,
}

/// An edge of the grid: `(i, j, horizontal)` is the edge leaving vertex
/// `(i, j)` towards `(i + 1, j)` when horizontal, `(i, j + 1)` otherwise.
type EdgeKey = (usize, usize, bool);

impl Field<'_> {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.ys.len() + j]
    }

    fn crossing(&self, (i, j, horizontal): EdgeKey) -> Point {
        let (i2, j2) = if horizontal { (i + 1, j) } else { (i, j + 1) };
        let (v0, v1) = (self.at(i, j), self.at(i2, j2));
        let t = if v0 == v1 { 0.5 } else { v0 / (v0 - v1) };
        (
            self.xs[i] + t * (self.xs[i2] - self.xs[i]),
            self.ys[j] + t * (self.ys[j2] - self.ys[j]),
        )
    }
}

/// Polylines where the field changes sign between "positive" and "not
/// positive". Cells touching a non-finite value are skipped. Output order
/// depends only on the field.
pub fn extract_contour(field: Field<'_>) -> Vec<Polyline> {
    let (nx, ny) = (field.xs.len(), field.ys.len());
    assert_eq!(field.values.len(), nx * ny, "field size does not match axes");
    let mut links: BTreeMap<EdgeKey, Vec<EdgeKey>> = BTreeMap::new();
    let mut link = |a: EdgeKey, b: EdgeKey| {
        links.entry(a).or_default().push(b);
        links.entry(b).or_default().push(a);
    };

    for i in 0..nx.saturating_sub(1) {
        for j in 0..ny.saturating_sub(1) {
            let corners = [field.at(i, j), field.at(i + 1, j), field.at(i + 1, j + 1), field.at(i, j + 1)];
            if corners.iter().any(|v| !v.is_finite()) {
                continue;
            }
            let inside = corners.map(|v| v > 0.0);
            // Edges in corner order: bottom, right, top, left.
            let edges: [EdgeKey; 4] = [(i, j, true), (i + 1, j, false), (i, j + 1, true), (i, j, false)];
            let cut: Vec<usize> = (0..4).filter(|&k| inside[k] != inside[(k + 1) % 4]).collect();
            match cut.len() {
                0 => {}
                2 => link(edges[cut[0]], edges[cut[1]]),
                4 => {
                    // Saddle: the cell mean decides whether the two positive
                    // corners are joined through the middle.
                    let centre = corners.iter().sum::<f64>() / 4.0;
                    if (centre > 0.0) == inside[0] {
                        link(edges[0], edges[1]);
                        link(edges[2], edges[3]);
                    } else {
                        link(edges[3], edges[0]);
                        link(edges[1], edges[2]);
                    }
                }
                _ => unreachable!("a sign pattern on four corners changes an even number of times"),
            }
        }
    }

    let mut polylines = Vec::new();
    let mut visited: BTreeMap<EdgeKey, bool> = links.keys().map(|&k| (k, false)).collect();
    let walk = |start: EdgeKey, visited: &mut BTreeMap<EdgeKey, bool>| {
        let mut chain = vec![start];
        visited.insert(start, true);
        let mut current = start;
        while let Some(&next) = links[&current].iter().find(|k| !visited[*k]) {
            visited.insert(next, true);
            chain.push(next);
            current = next;
        }
        chain
    };
    // Open chains start at boundary edges, which have a single neighbour.
    for (&key, next) in &links {
        if next.len() == 1 && !visited[&key] {
            let chain = walk(key, &mut visited);
            polylines.push(Polyline {
                points: chain.into_iter().map(|k| field.crossing(k)).collect(),
                closed: false,
            });
        }
    }
    for &key in links.keys() {
        if !visited[&key] {
            let chain = walk(key, &mut visited);
            let mut points: Vec<Point> = chain.into_iter().map(|k| field.crossing(k)).collect();
            points.push(points[0]);
            polylines.push(Polyline { points, closed: true });
        }
    }
    polylines
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axis(n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
    }

    fn sample(xs: &[f64], ys: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        xs.iter().flat_map(|&x| ys.iter().map(move |&y| (x, y))).map(|(x, y)| f(x, y)).collect()
    }

    #[test]
    fn constant_sign_gives_nothing() {
        let xs = axis(5, 0.0, 1.0);
        let v = sample(&xs, &xs, |x, y| 1.0 + x + y);
        assert!(extract_contour(Field { xs: &xs, ys: &xs, values: &v }).is_empty());
        let v = sample(&xs, &xs, |_, _| -1.0);
        assert!(extract_contour(Field { xs: &xs, ys: &xs, values: &v }).is_empty());
    }

    #[test]
    fn linear_field_is_exact() {
        let xs = axis(21, 0.0, 1.0);
        let v = sample(&xs, &xs, |g, _| g - 0.5);
        let lines = extract_contour(Field { xs: &xs, ys: &xs, values: &v });
        assert_eq!(lines.len(), 1);
        assert!(!lines[0].closed);
        assert_eq!(lines[0].points.len(), 21);
        for &(g, _) in &lines[0].points {
            assert!((g - 0.5).abs() < 1e-12);
        }
        let v = sample(&xs, &xs, |g, m| 0.3 * g + 0.7 * m - 0.42);
        for line in extract_contour(Field { xs: &xs, ys: &xs, values: &v }) {
            for &(g, m) in &line.points {
                assert!((0.3 * g + 0.7 * m - 0.42).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn circle_is_closed() {
        let xs = axis(41, -1.0, 1.0);
        let v = sample(&xs, &xs, |x, y| 0.25 - x * x - y * y);
        let lines = extract_contour(Field { xs: &xs, ys: &xs, values: &v });
        assert_eq!(lines.len(), 1);
        assert!(lines[0].closed);
        assert_eq!(lines[0].points.first(), lines[0].points.last());
        for &(x, y) in &lines[0].points {
            assert!(((x * x + y * y).sqrt() - 0.5).abs() < 0.01);
        }
    }

    #[test]
    fn saddle_is_resolved() {
        let xs = [0.0, 1.0];
        // Positive corners on one diagonal, mean positive: joined through
        // the middle, so the two negative corners are cut off separately.
        let v = [1.0, -0.5, -0.5, 1.0];
        let lines = extract_contour(Field { xs: &xs, ys: &xs, values: &v });
        assert_eq!(lines.len(), 2);
        let v = [-1.0, 0.5, 0.5, -1.0];
        assert_eq!(extract_contour(Field { xs: &xs, ys: &xs, values: &v }).len(), 2);
    }

    #[test]
    fn non_finite_cells_are_skipped() {
        let xs = axis(3, 0.0, 1.0);
        let mut v = sample(&xs, &xs, |g, _| g - 0.25);
        v[0] = f64::NAN;
        let lines = extract_contour(Field { xs: &xs, ys: &xs, values: &v });
        assert_eq!(lines.len(), 1);
        assert_eq!(lines[0].points.len(), 2);
    }
}
