//! Pixel and point primitives, angle helpers and integer line stepping.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Integer pixel coordinate. `y` grows downward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pixel {
    pub x: i32,
    pub y: i32,
}

impl Pixel {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn offset(self, dx: i32, dy: i32) -> Self {
        Self::new(self.x + dx, self.y + dy)
    }

    /// True when the two pixels are distinct and touch by edge or corner.
    pub fn is_8_adjacent(self, other: Self) -> bool {
        self != other && (self.x - other.x).abs() <= 1 && (self.y - other.y).abs() <= 1
    }

    pub fn to_point(self) -> Point {
        Point::new(f64::from(self.x), f64::from(self.y))
    }

    pub fn distance(self, other: Self) -> f64 {
        self.to_point().distance(other.to_point())
    }
}

/// Sub-pixel point in image coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Self) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn midpoint(self, other: Self) -> Self {
        Self::new((self.x + other.x) * 0.5, (self.y + other.y) * 0.5)
    }

    pub fn sub(self, other: Self) -> (f64, f64) {
        (self.x - other.x, self.y - other.y)
    }

    pub fn along(self, angle: f64, t: f64) -> Self {
        Self::new(self.x + t * angle.cos(), self.y + t * angle.sin())
    }

    /// Nearest pixel, rounding halves up.
    pub fn to_pixel(self) -> Pixel {
        Pixel::new((self.x + 0.5).floor() as i32, (self.y + 0.5).floor() as i32)
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a % (2.0 * PI);
    if r <= -PI {
        r += 2.0 * PI;
    } else if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// Absolute difference between two undirected orientations, in `[0, π/2]`.
pub fn undirected_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

/// Folds a direction into an undirected line orientation in `(-π/2, π/2]`.
pub fn fold_orientation(a: f64) -> f64 {
    let mut r = wrap_angle(a);
    if r > PI / 2.0 {
        r -= PI;
    } else if r <= -PI / 2.0 {
        r += PI;
    }
    r
}

/// Circular mean of a set of directions. `None` when the resultant vanishes.
pub fn circular_mean(angles: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (mut s, mut c) = (0.0, 0.0);
    for a in angles {
        s += a.sin();
        c += a.cos();
    }
    if s.hypot(c) < 1e-9 {
        None
    } else {
        Some(s.atan2(c))
    }
}

/// Bresenham line from `a` to `b`, both ends included.
pub fn line_pixels(a: Pixel, b: Pixel) -> Vec<Pixel> {
    let dx = (b.x - a.x).abs();
    let dy = -(b.y - a.y).abs();
    let sx = if a.x < b.x { 1 } else { -1 };
    let sy = if a.y < b.y { 1 } else { -1 };
    let mut err = dx + dy;
    let (mut x, mut y) = (a.x, a.y);
    let mut out = Vec::with_capacity((dx.max(-dy) + 1) as usize);
    loop {
        out.push(Pixel::new(x, y));
        if x == b.x && y == b.y {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    out
}

/// Proper or touching intersection of segments `p1-p2` and `q1-q2`.
/// Returns the parameters `(t, u)` along each segment.
pub fn segment_intersection(p1: Point, p2: Point, q1: Point, q2: Point) -> Option<(f64, f64)> {
    let r = p2.sub(p1);
    let s = q2.sub(q1);
    let denom = r.0 * s.1 - r.1 * s.0;
    if denom.abs() < 1e-12 {
        return None;
    }
    let qp = q1.sub(p1);
    let t = (qp.0 * s.1 - qp.1 * s.0) / denom;
    let u = (qp.0 * r.1 - qp.1 * r.0) / denom;
    const EPS: f64 = 1e-9;
    if (-EPS..=1.0 + EPS).contains(&t) && (-EPS..=1.0 + EPS).contains(&u) {
        Some((t, u))
    } else {
        None
    }
}

/// Distance from `p` to the segment `a-b`.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (abx, aby) = b.sub(a);
    let len2 = abx * abx + aby * aby;
    if len2 == 0.0 {
        return p.distance(a);
    }
    let (apx, apy) = p.sub(a);
    let t = ((apx * abx + apy * aby) / len2).clamp(0.0, 1.0);
    p.distance(Point::new(a.x + t * abx, a.y + t * aby))
}

/// Distance from `p` to the nearest segment of a polyline.
pub fn point_polyline_distance(p: Point, line: &[Point]) -> f64 {
    match line {
        [] => f64::INFINITY,
        [only] => p.distance(*only),
        _ => line
            .windows(2)
            .map(|w| point_segment_distance(p, w[0], w[1]))
            .fold(f64::INFINITY, f64::min),
    }
}
