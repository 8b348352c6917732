use serde::{Deserialize, Serialize};

/// Below this magnitude a ray and a segment are treated as parallel.
pub const PARALLEL_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn sub(self, other: Point) -> Point {
        Point::new(self.x - other.x, self.y - other.y)
    }

    fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }
}

/// A zero-thickness wall.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

impl Segment {
    pub const fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        Self {
            a: Point::new(x1, y1),
            b: Point::new(x2, y2),
        }
    }

    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }

    pub fn direction(&self) -> Point {
        self.b.sub(self.a)
    }

    /// Distance along the ray `origin + t * dir` (with `dir` a unit vector) to
    /// the first point of this segment, if any.
    pub fn ray_hit(&self, origin: Point, dir: Point) -> Option<f64> {
        let edge = self.direction();
        let to_a = self.a.sub(origin);
        let denom = dir.cross(edge);
        let len = edge.dot(edge).sqrt();

        if denom.abs() <= PARALLEL_TOLERANCE * len.max(1.0) {
            // Parallel: only a collinear ray can touch the segment.
            if to_a.cross(dir).abs() > PARALLEL_TOLERANCE * to_a.dot(to_a).sqrt().max(1.0) {
                return None;
            }
            let ta = to_a.dot(dir);
            let tb = self.b.sub(origin).dot(dir);
            let (near, far) = if ta <= tb { (ta, tb) } else { (tb, ta) };
            return if far < 0.0 {
                None
            } else if near <= 0.0 {
                Some(0.0)
            } else {
                Some(near)
            };
        }

        let t = to_a.cross(edge) / denom;
        let u = to_a.cross(dir) / denom;
        let slack = PARALLEL_TOLERANCE;
        (t >= 0.0 && (-slack..=1.0 + slack).contains(&u)).then_some(t)
    }

    pub fn distance_to(&self, p: Point) -> f64 {
        let edge = self.direction();
        let len2 = edge.dot(edge);
        if len2 == 0.0 {
            return p.distance(self.a);
        }
        let u = (p.sub(self.a).dot(edge) / len2).clamp(0.0, 1.0);
        p.distance(Point::new(self.a.x + u * edge.x, self.a.y + u * edge.y))
    }

    pub fn contains(&self, p: Point, tolerance: f64) -> bool {
        self.distance_to(p) <= tolerance
    }

    pub fn is_perpendicular_to(&self, other: &Segment) -> bool {
        let (u, v) = (self.direction(), other.direction());
        u.dot(v).abs() <= 1e-9 * (u.dot(u) * v.dot(v)).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perpendicular_hit() {
        let wall = Segment::new(50.0, 0.0, 50.0, 50.0);
        let t = wall.ray_hit(Point::new(47.0, 25.0), Point::new(1.0, 0.0));
        assert_eq!(t, Some(3.0));
    }

    #[test]
    fn miss_behind_and_beside() {
        let wall = Segment::new(50.0, 0.0, 50.0, 10.0);
        assert_eq!(wall.ray_hit(Point::new(47.0, 25.0), Point::new(1.0, 0.0)), None);
        assert_eq!(wall.ray_hit(Point::new(47.0, 5.0), Point::new(-1.0, 0.0)), None);
    }

    #[test]
    fn collinear_ray_hits_nearest_end() {
        let wall = Segment::new(0.0, 25.0, 30.0, 25.0);
        let t = wall.ray_hit(Point::new(35.0, 25.0), Point::new(-1.0, 0.0));
        assert_eq!(t, Some(5.0));
        assert_eq!(wall.ray_hit(Point::new(35.0, 25.0), Point::new(1.0, 0.0)), None);
    }

    #[test]
    fn point_distance() {
        let wall = Segment::new(0.0, 0.0, 10.0, 0.0);
        assert_eq!(wall.distance_to(Point::new(5.0, 3.0)), 3.0);
        assert_eq!(wall.distance_to(Point::new(13.0, 4.0)), 5.0);
    }
}
