//! Convex polygon clipping (Sutherland-Hodgman) and shoelace area.

use arrayvec::ArrayVec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Clipping a convex quad by four half-planes yields at most 8 vertices.
pub(crate) const CLIP_CAPACITY: usize = 16;
pub(crate) type ClipBuffer = ArrayVec<Point2, CLIP_CAPACITY>;

/// A simple polygon with counter-clockwise vertex order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Polygon2D {
    vertices: Vec<Point2>,
}

impl Polygon2D {
    pub fn new(vertices: Vec<Point2>) -> Self {
        Self { vertices }
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.len() < 3
    }

    pub fn signed_area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    /// Intersection with another convex counter-clockwise polygon.
    ///
    /// Both polygons must be convex; the result is convex and keeps points
    /// lying exactly on the clip boundary.
    pub fn clip_convex(&self, clip: &Polygon2D) -> Polygon2D {
        let mut current = self.vertices.clone();
        let n = clip.vertices.len();
        for i in 0..n {
            if current.is_empty() {
                break;
            }
            let (a, b) = (clip.vertices[i], clip.vertices[(i + 1) % n]);
            let mut next = Vec::with_capacity(current.len() + 1);
            clip_edge(&current, a, b, |p| next.push(p));
            current = next;
        }
        Polygon2D::new(current)
    }
}

/// Signed distance-like value: positive when `p` is left of the directed
/// edge `a -> b`.
#[inline]
fn side(a: Point2, b: Point2, p: Point2) -> f64 {
    (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)
}

#[inline]
fn clip_edge(subject: &[Point2], a: Point2, b: Point2, mut emit: impl FnMut(Point2)) {
    let Some(&last) = subject.last() else {
        return;
    };
    let mut s = last;
    let mut ds = side(a, b, s);
    for &e in subject {
        let de = side(a, b, e);
        let (s_in, e_in) = (ds >= 0.0, de >= 0.0);
        if s_in != e_in {
            // Exactly one endpoint is strictly outside, so ds != de.
            let t = ds / (ds - de);
            emit(Point2::new(s.x + t * (e.x - s.x), s.y + t * (e.y - s.y)));
        }
        if e_in {
            emit(e);
        }
        s = e;
        ds = de;
    }
}

/// Allocation-free intersection of two convex counter-clockwise quads.
pub(crate) fn clip_quads(subject: &[Point2; 4], clip: &[Point2; 4]) -> ClipBuffer {
    let mut current: ClipBuffer = subject.iter().copied().collect();
    for i in 0..4 {
        if current.is_empty() {
            break;
        }
        let (a, b) = (clip[i], clip[(i + 1) % 4]);
        let mut next = ClipBuffer::new();
        clip_edge(&current, a, b, |p| next.push(p));
        current = next;
    }
    current
}

pub(crate) fn signed_area(vertices: &[Point2]) -> f64 {
    let n = vertices.len();
    if n < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for i in 0..n {
        let (p, q) = (vertices[i], vertices[(i + 1) % n]);
        twice += p.x * q.y - q.x * p.y;
    }
    0.5 * twice
}
