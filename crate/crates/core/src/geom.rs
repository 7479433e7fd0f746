//! Planar geometry helpers shared by the environments and planners.

pub type Vec2 = [f64; 2];

pub fn add(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] + b[0], a[1] + b[1]]
}

pub fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn scale(a: Vec2, s: f64) -> Vec2 {
    [a[0] * s, a[1] * s]
}

pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// z-component of the 3D cross product of two planar vectors.
pub fn cross(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

pub fn norm(a: Vec2) -> f64 {
    (a[0] * a[0] + a[1] * a[1]).sqrt()
}

pub fn dist(a: Vec2, b: Vec2) -> f64 {
    norm(sub(a, b))
}

pub fn lerp(a: Vec2, b: Vec2, t: f64) -> Vec2 {
    [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t]
}

/// Axis-aligned rectangle given by center and half-extents.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub center: Vec2,
    pub half: Vec2,
}

impl Rect {
    pub fn new(center: Vec2, half: Vec2) -> Self {
        Rect { center, half }
    }

    pub fn min(&self) -> Vec2 {
        sub(self.center, self.half)
    }

    pub fn max(&self) -> Vec2 {
        add(self.center, self.half)
    }

    /// Closed containment: boundary points count as inside.
    pub fn contains(&self, p: Vec2) -> bool {
        let lo = self.min();
        let hi = self.max();
        p[0] >= lo[0] && p[0] <= hi[0] && p[1] >= lo[1] && p[1] <= hi[1]
    }

    pub fn inflate(&self, by: f64) -> Rect {
        Rect {
            center: self.center,
            half: [self.half[0] + by, self.half[1] + by],
        }
    }

    /// Closest point of the (closed) rectangle to `p`.
    pub fn closest_point(&self, p: Vec2) -> Vec2 {
        let lo = self.min();
        let hi = self.max();
        [p[0].clamp(lo[0], hi[0]), p[1].clamp(lo[1], hi[1])]
    }

    /// Euclidean distance from `p` to the rectangle (0 inside).
    pub fn distance(&self, p: Vec2) -> f64 {
        dist(p, self.closest_point(p))
    }

    /// Slab test for segment a->b against the closed rectangle.
    pub fn intersects_segment(&self, a: Vec2, b: Vec2) -> bool {
        let lo = self.min();
        let hi = self.max();
        let d = sub(b, a);
        let mut t0 = 0.0f64;
        let mut t1 = 1.0f64;
        for axis in 0..2 {
            if d[axis].abs() < 1e-15 {
                if a[axis] < lo[axis] || a[axis] > hi[axis] {
                    return false;
                }
            } else {
                let inv = 1.0 / d[axis];
                let mut ta = (lo[axis] - a[axis]) * inv;
                let mut tb = (hi[axis] - a[axis]) * inv;
                if ta > tb {
                    std::mem::swap(&mut ta, &mut tb);
                }
                t0 = t0.max(ta);
                t1 = t1.min(tb);
                if t0 > t1 {
                    return false;
                }
            }
        }
        true
    }

    /// Overlap test against another axis-aligned rectangle (closed).
    pub fn intersects_rect(&self, other: &Rect) -> bool {
        (self.center[0] - other.center[0]).abs() <= self.half[0] + other.half[0]
            && (self.center[1] - other.center[1]).abs() <= self.half[1] + other.half[1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_slab_hits_and_misses() {
        let r = Rect::new([0.5, 0.5], [0.1, 0.1]);
        assert!(r.intersects_segment([0.0, 0.5], [1.0, 0.5]));
        assert!(r.intersects_segment([0.45, 0.45], [0.55, 0.55]));
        assert!(!r.intersects_segment([0.0, 0.8], [1.0, 0.8]));
        assert!(!r.intersects_segment([0.0, 0.0], [0.3, 0.3]));
        // degenerate segment inside
        assert!(r.intersects_segment([0.5, 0.5], [0.5, 0.5]));
    }

    #[test]
    fn closest_point_and_distance() {
        let r = Rect::new([0.0, 0.0], [1.0, 1.0]);
        assert_eq!(r.closest_point([2.0, 0.0]), [1.0, 0.0]);
        assert!((r.distance([2.0, 0.0]) - 1.0).abs() < 1e-12);
        assert_eq!(r.distance([0.5, -0.5]), 0.0);
    }
}
