//! Bounding-volume hierarchy over triangles, built with a binned
//! surface-area heuristic.

use crate::geom::{Point3, Vec3};

const LEAF_SIZE: usize = 4;
const BINS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    pub const EMPTY: Aabb = Aabb {
        min: Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
        max: Vec3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
    };

    pub fn grow(&mut self, p: Point3) {
        self.min = self.min.min_by_component(p);
        self.max = self.max.max_by_component(p);
    }

    pub fn union(&self, o: &Aabb) -> Aabb {
        Aabb { min: self.min.min_by_component(o.min), max: self.max.max_by_component(o.max) }
    }

    pub fn surface_area(&self) -> f64 {
        let d = self.max - self.min;
        if d.x < 0.0 {
            return 0.0;
        }
        2.0 * (d.x * d.y + d.y * d.z + d.z * d.x)
    }

    pub fn centre(&self) -> Point3 {
        (self.min + self.max) * 0.5
    }

    pub fn diagonal(&self) -> f64 {
        (self.max - self.min).norm()
    }

    /// Squared distance from `p` to the box (0 inside).
    pub fn dist2(&self, p: Point3) -> f64 {
        let q = p.max_by_component(self.min).min_by_component(self.max);
        (q - p).norm2()
    }

    /// Slab test for the segment `a + t d`, `t ∈ [0,1]`, with a relative pad.
    fn hits_segment(&self, a: Point3, inv_d: Vec3, pad: f64) -> bool {
        let mut t0: f64 = 0.0;
        let mut t1: f64 = 1.0;
        for k in 0..3 {
            let (lo, hi) = (self.min[k] - pad, self.max[k] + pad);
            let (ta, tb) = ((lo - a[k]) * inv_d[k], (hi - a[k]) * inv_d[k]);
            let (ta, tb) = if ta <= tb { (ta, tb) } else { (tb, ta) };
            // NaN (0 * inf) means the segment lies on the slab plane: keep it
            if ta.is_nan() || tb.is_nan() {
                if a[k] < lo || a[k] > hi {
                    return false;
                }
                continue;
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
            if t0 > t1 {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { bounds: Aabb, start: usize, count: usize },
    Inner { bounds: Aabb, left: usize, right: usize },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<Node>,
    /// Triangle indices in leaf order.
    order: Vec<usize>,
    pad: f64,
}

impl Bvh {
    pub fn build(tris: &[[Point3; 3]]) -> Bvh {
        let boxes: Vec<Aabb> = tris
            .iter()
            .map(|t| {
                let mut b = Aabb::EMPTY;
                t.iter().for_each(|&p| b.grow(p));
                b
            })
            .collect();
        let centres: Vec<Point3> = boxes.iter().map(Aabb::centre).collect();
        let mut order: Vec<usize> = (0..tris.len()).collect();
        let mut nodes = Vec::with_capacity(2 * tris.len() / LEAF_SIZE + 1);
        if !tris.is_empty() {
            build_node(&boxes, &centres, &mut order, 0, tris.len(), &mut nodes);
        }
        let pad = nodes.first().map_or(0.0, |n: &Node| n.bounds().diagonal() * 1e-9);
        Bvh { nodes, order, pad }
    }

    pub fn bounds(&self) -> Aabb {
        self.nodes.first().map_or(Aabb::EMPTY, |n| *n.bounds())
    }

    /// Indices of triangles whose box the segment `[a,b]` crosses.
    pub fn segment_candidates(&self, a: Point3, b: Point3, out: &mut Vec<usize>) {
        out.clear();
        if self.nodes.is_empty() {
            return;
        }
        let d = b - a;
        let inv = Vec3::new(1.0 / d.x, 1.0 / d.y, 1.0 / d.z);
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i];
            if !node.bounds().hits_segment(a, inv, self.pad) {
                continue;
            }
            match *node {
                Node::Leaf { start, count, .. } => out.extend_from_slice(&self.order[start..start + count]),
                Node::Inner { left, right, .. } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
    }

    /// Indices of triangles whose box comes within `r` of `c`.
    pub fn ball_candidates(&self, c: Point3, r: f64, out: &mut Vec<usize>) {
        out.clear();
        if self.nodes.is_empty() {
            return;
        }
        let r2 = (r + self.pad) * (r + self.pad);
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i];
            if node.bounds().dist2(c) > r2 {
                continue;
            }
            match *node {
                Node::Leaf { start, count, .. } => out.extend_from_slice(&self.order[start..start + count]),
                Node::Inner { left, right, .. } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
    }

    /// Best-first nearest-triangle search; `dist2(i)` gives the squared
    /// distance from the query to triangle `i`. Returns `(index, dist2)`.
    pub fn nearest(&self, p: Point3, dist2: impl Fn(usize) -> f64) -> Option<(usize, f64)> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best = (usize::MAX, f64::INFINITY);
        let mut stack = vec![(0usize, self.nodes[0].bounds().dist2(p))];
        while let Some((i, bd)) = stack.pop() {
            if bd > best.1 {
                continue;
            }
            match self.nodes[i] {
                Node::Leaf { start, count, .. } => {
                    for &t in &self.order[start..start + count] {
                        let d = dist2(t);
                        if d < best.1 || (d == best.1 && t < best.0) {
                            best = (t, d);
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    let (dl, dr) = (self.nodes[left].bounds().dist2(p), self.nodes[right].bounds().dist2(p));
                    // visit the nearer child first
                    if dl <= dr {
                        stack.push((right, dr));
                        stack.push((left, dl));
                    } else {
                        stack.push((left, dl));
                        stack.push((right, dr));
                    }
                }
            }
        }
        Some(best)
    }
}

fn build_node(
    boxes: &[Aabb],
    centres: &[Point3],
    order: &mut [usize],
    start: usize,
    end: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let slice = &mut order[start..end];
    let mut bounds = Aabb::EMPTY;
    let mut cbounds = Aabb::EMPTY;
    for &i in slice.iter() {
        bounds = bounds.union(&boxes[i]);
        cbounds.grow(centres[i]);
    }
    let idx = nodes.len();
    let count = end - start;
    if count <= LEAF_SIZE {
        nodes.push(Node::Leaf { bounds, start, count });
        return idx;
    }
    let extent = cbounds.max - cbounds.min;
    let axis = if extent.x >= extent.y && extent.x >= extent.z {
        0
    } else if extent.y >= extent.z {
        1
    } else {
        2
    };
    let (lo, span) = (cbounds.min[axis], extent[axis]);
    let mut mid = start + count / 2;
    if span > 0.0 {
        let bin_of = |i: usize| (((centres[i][axis] - lo) / span * BINS as f64) as usize).min(BINS - 1);
        let mut bin_box = [Aabb::EMPTY; BINS];
        let mut bin_count = [0usize; BINS];
        for &i in slice.iter() {
            let b = bin_of(i);
            bin_box[b] = bin_box[b].union(&boxes[i]);
            bin_count[b] += 1;
        }
        let mut best = (f64::INFINITY, 0usize);
        for split in 1..BINS {
            let (mut lb, mut rb) = (Aabb::EMPTY, Aabb::EMPTY);
            let (mut lc, mut rc) = (0, 0);
            for b in 0..split {
                lb = lb.union(&bin_box[b]);
                lc += bin_count[b];
            }
            for b in split..BINS {
                rb = rb.union(&bin_box[b]);
                rc += bin_count[b];
            }
            if lc == 0 || rc == 0 {
                continue;
            }
            let cost = lb.surface_area() * lc as f64 + rb.surface_area() * rc as f64;
            if cost < best.0 {
                best = (cost, split);
            }
        }
        if best.0.is_finite() {
            let split = best.1;
            let mut left = 0;
            for k in 0..slice.len() {
                if bin_of(slice[k]) < split {
                    slice.swap(k, left);
                    left += 1;
                }
            }
            mid = start + left;
        } else {
            slice.sort_by(|&a, &b| centres[a][axis].total_cmp(&centres[b][axis]));
        }
    } else {
        slice.sort_unstable();
    }
    nodes.push(Node::Leaf { bounds, start, count });
    let left = build_node(boxes, centres, order, start, mid, nodes);
    let right = build_node(boxes, centres, order, mid, end, nodes);
    nodes[idx] = Node::Inner { bounds, left, right };
    idx
}
