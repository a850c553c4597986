//! Uniform-grid spatial hashes for point and box queries.

use std::collections::HashMap;

use crate::geometry::{Aabb, Point2};

type Cell = (i64, i64);

fn cell_of(p: Point2, size: f64) -> Cell {
    ((p.x / size).floor() as i64, (p.y / size).floor() as i64)
}

/// Points keyed by caller-supplied ids. Supports incremental insertion.
#[derive(Debug, Clone)]
pub struct PointGrid {
    cell_size: f64,
    cells: HashMap<Cell, Vec<(usize, Point2)>>,
    len: usize,
}

impl PointGrid {
    pub fn new(cell_size: f64) -> Self {
        assert!(cell_size > 0.0);
        Self {
            cell_size,
            cells: HashMap::new(),
            len: 0,
        }
    }

    pub fn insert(&mut self, id: usize, p: Point2) {
        self.cells
            .entry(cell_of(p, self.cell_size))
            .or_default()
            .push((id, p));
        self.len += 1;
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// All entries within `radius` of `p`, sorted by (distance, id).
    pub fn within(&self, p: Point2, radius: f64) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        let lo = cell_of(Point2::new(p.x - radius, p.y - radius), self.cell_size);
        let hi = cell_of(Point2::new(p.x + radius, p.y + radius), self.cell_size);
        for cx in lo.0..=hi.0 {
            for cy in lo.1..=hi.1 {
                if let Some(entries) = self.cells.get(&(cx, cy)) {
                    for &(id, q) in entries {
                        let d = q.distance(p);
                        if d <= radius {
                            out.push((id, d));
                        }
                    }
                }
            }
        }
        out.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        out
    }

    /// Nearest entry overall, growing the search ring until something is found.
    pub fn nearest(&self, p: Point2) -> Option<(usize, f64)> {
        if self.len == 0 {
            return None;
        }
        let mut radius = self.cell_size;
        loop {
            let hits = self.within(p, radius);
            if let Some(&first) = hits.first() {
                return Some(first);
            }
            radius *= 2.0;
            if radius > 1e7 {
                return None;
            }
        }
    }
}

/// Axis-aligned boxes keyed by id; queries return a superset of overlapping boxes
/// filtered to exact box overlap.
#[derive(Debug, Clone)]
pub struct BoxGrid {
    cell_size: f64,
    cells: HashMap<Cell, Vec<usize>>,
    boxes: Vec<(usize, Aabb)>,
}

impl BoxGrid {
    pub fn new(cell_size: f64) -> Self {
        assert!(cell_size > 0.0);
        Self {
            cell_size,
            cells: HashMap::new(),
            boxes: Vec::new(),
        }
    }

    pub fn insert(&mut self, id: usize, bb: Aabb) {
        let slot = self.boxes.len();
        self.boxes.push((id, bb));
        let lo = cell_of(bb.min, self.cell_size);
        let hi = cell_of(bb.max, self.cell_size);
        for cx in lo.0..=hi.0 {
            for cy in lo.1..=hi.1 {
                self.cells.entry((cx, cy)).or_default().push(slot);
            }
        }
    }

    /// Ids of boxes overlapping `query`, ascending and de-duplicated.
    pub fn query(&self, query: &Aabb) -> Vec<usize> {
        let lo = cell_of(query.min, self.cell_size);
        let hi = cell_of(query.max, self.cell_size);
        let mut out = Vec::new();
        for cx in lo.0..=hi.0 {
            for cy in lo.1..=hi.1 {
                if let Some(slots) = self.cells.get(&(cx, cy)) {
                    for &slot in slots {
                        let (id, bb) = self.boxes[slot];
                        if bb.intersects(query) {
                            out.push(id);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn within_sorted_with_id_tiebreak() {
        let mut g = PointGrid::new(2.0);
        g.insert(7, Point2::new(1.0, 0.0));
        g.insert(3, Point2::new(-1.0, 0.0));
        g.insert(5, Point2::new(0.0, 0.5));
        let hits = g.within(Point2::new(0.0, 0.0), 1.0);
        assert_eq!(hits.iter().map(|h| h.0).collect::<Vec<_>>(), vec![5, 3, 7]);
    }

    #[test]
    fn box_query_overlap() {
        let mut g = BoxGrid::new(5.0);
        g.insert(0, Aabb { min: Point2::new(0.0, 0.0), max: Point2::new(1.0, 1.0) });
        g.insert(1, Aabb { min: Point2::new(20.0, 0.0), max: Point2::new(31.0, 1.0) });
        let q = Aabb { min: Point2::new(0.5, 0.5), max: Point2::new(25.0, 0.6) };
        assert_eq!(g.query(&q), vec![0, 1]);
        let q = Aabb { min: Point2::new(2.0, 2.0), max: Point2::new(3.0, 3.0) };
        assert!(g.query(&q).is_empty());
    }
}
