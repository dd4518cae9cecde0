//! Parametrized embedded shapes: inside tests, closest-point projection and
//! boundary frames (distance vector, true normal, tangent).
//!
//! Normal convention: `normal` is the outward normal of the computational
//! domain, which surrounds the hole, so it points from the true boundary into
//! the hole. For a point outside the hole the distance vector d then satisfies
//! d = ||d|| n exactly (corner projections use n = d/||d||). Points inside the
//! hole are accepted as well (surrogate edges can clip a corner of the hole);
//! there d = -||d|| n with n still the true boundary normal.

use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::math::Vec2;
use crate::mesh::Rect;

/// Closed admissible interval for the geometry parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParamRange {
    pub lo: f64,
    pub hi: f64,
}

impl ParamRange {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi);
        ParamRange { lo, hi }
    }

    pub fn contains(&self, mu: f64) -> bool {
        mu >= self.lo && mu <= self.hi
    }
}

/// Family of embedded shapes, one scalar parameter each.
#[derive(Clone, Copy, Debug)]
pub enum EmbeddedShape {
    /// Fixed-size rectangle whose vertical center position is the parameter.
    RectangleYCenter {
        half_width: f64,
        half_height: f64,
        x_center: f64,
        range: ParamRange,
    },
    /// Rectangle of aspect ratio mu with the constraint width = mu * height
    /// and mu * height fixed, so the width stays constant while the height
    /// varies as constraint / mu. Centered at a fixed point.
    RectangleAspect {
        constraint: f64,
        center: Vec2,
        range: ParamRange,
    },
    /// Disc with fixed center; the parameter is the radius.
    Disc { center: Vec2, range: ParamRange },
}

#[derive(Clone, Debug, PartialEq)]
pub enum GeometryError {
    InadmissibleParameter { mu: f64, lo: f64, hi: f64 },
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeometryError::InadmissibleParameter { mu, lo, hi } => {
                write!(f, "parameter {mu} outside the admissible range [{lo}, {hi}]")
            }
        }
    }
}

impl core::error::Error for GeometryError {}

impl EmbeddedShape {
    /// The reference moving-rectangle family: 0.8 x 0.7, x-centered at zero.
    pub fn rect_ycenter(range: ParamRange) -> Self {
        EmbeddedShape::RectangleYCenter {
            half_width: 0.4,
            half_height: 0.35,
            x_center: 0.0,
            range,
        }
    }

    /// The reference aspect-ratio family: size constraint mu * height = 0.2.
    pub fn rect_aspect(center: Vec2, range: ParamRange) -> Self {
        EmbeddedShape::RectangleAspect {
            constraint: 0.2,
            center,
            range,
        }
    }

    pub fn range(&self) -> ParamRange {
        match *self {
            EmbeddedShape::RectangleYCenter { range, .. } => range,
            EmbeddedShape::RectangleAspect { range, .. } => range,
            EmbeddedShape::Disc { range, .. } => range,
        }
    }

    /// Concrete hole geometry for an admissible parameter value.
    pub fn resolve(&self, mu: f64) -> Result<Hole, GeometryError> {
        let range = self.range();
        if !range.contains(mu) {
            return Err(GeometryError::InadmissibleParameter {
                mu,
                lo: range.lo,
                hi: range.hi,
            });
        }
        Ok(match *self {
            EmbeddedShape::RectangleYCenter {
                half_width,
                half_height,
                x_center,
                ..
            } => Hole::Rectangle {
                center: Vec2::new(x_center, mu),
                half: Vec2::new(half_width, half_height),
            },
            EmbeddedShape::RectangleAspect {
                constraint, center, ..
            } => Hole::Rectangle {
                center,
                half: Vec2::new(0.5 * constraint, 0.5 * constraint / mu),
            },
            EmbeddedShape::Disc { center, .. } => Hole::Disc { center, radius: mu },
        })
    }
}

/// Closest-point data at one query point.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryFrame {
    /// Projection point on the true boundary.
    pub point: Vec2,
    /// Distance vector d = point - query.
    pub offset: Vec2,
    /// True boundary normal, oriented into the hole (see module docs).
    pub normal: Vec2,
    /// Normal rotated by +90 degrees.
    pub tangent: Vec2,
}

impl BoundaryFrame {
    pub fn dist(&self) -> f64 {
        self.offset.norm()
    }
}

/// Resolved hole geometry.
#[derive(Clone, Copy, Debug)]
pub enum Hole {
    Rectangle { center: Vec2, half: Vec2 },
    Disc { center: Vec2, radius: f64 },
}

// Faces in perimeter order starting at the bottom-left corner, counterclockwise
// around the rectangle: bottom, right, top, left. Ties in projections are broken
// by this order. Normals point into the hole.
const FACE_NORMALS: [Vec2; 4] = [
    Vec2 { x: 0.0, y: 1.0 },
    Vec2 { x: -1.0, y: 0.0 },
    Vec2 { x: 0.0, y: -1.0 },
    Vec2 { x: 1.0, y: 0.0 },
];

impl Hole {
    /// Strict interior test; boundary points are not inside.
    pub fn contains(&self, p: Vec2) -> bool {
        match *self {
            Hole::Rectangle { center, half } => {
                (p.x - center.x).abs() < half.x && (p.y - center.y).abs() < half.y
            }
            Hole::Disc { center, radius } => (p - center).norm_sq() < radius * radius,
        }
    }

    /// Unsigned distance to the hole closure; zero inside.
    pub fn distance(&self, p: Vec2) -> f64 {
        match *self {
            Hole::Rectangle { center, half } => {
                let ox = ((p.x - center.x).abs() - half.x).max(0.0);
                let oy = ((p.y - center.y).abs() - half.y).max(0.0);
                Vec2::new(ox, oy).norm()
            }
            Hole::Disc { center, radius } => ((p - center).norm() - radius).max(0.0),
        }
    }

    pub fn bbox(&self) -> Rect {
        match *self {
            Hole::Rectangle { center, half } => Rect::new(
                center.x - half.x,
                center.x + half.x,
                center.y - half.y,
                center.y + half.y,
            ),
            Hole::Disc { center, radius } => Rect::new(
                center.x - radius,
                center.x + radius,
                center.y - radius,
                center.y + radius,
            ),
        }
    }

    /// Closest-point projection onto the hole boundary with the full frame.
    pub fn closest_point(&self, q: Vec2) -> BoundaryFrame {
        match *self {
            Hole::Rectangle { center, half } => {
                let lo = center - half;
                let hi = center + half;
                if self.contains(q) {
                    // Nearest face; perimeter order breaks ties.
                    let dists = [q.y - lo.y, hi.x - q.x, hi.y - q.y, q.x - lo.x];
                    let mut face = 0;
                    for k in 1..4 {
                        if dists[k] < dists[face] {
                            face = k;
                        }
                    }
                    let point = match face {
                        0 => Vec2::new(q.x, lo.y),
                        1 => Vec2::new(hi.x, q.y),
                        2 => Vec2::new(q.x, hi.y),
                        _ => Vec2::new(lo.x, q.y),
                    };
                    let normal = FACE_NORMALS[face];
                    BoundaryFrame {
                        point,
                        offset: point - q,
                        normal,
                        tangent: normal.perp(),
                    }
                } else {
                    let point = Vec2::new(q.x.clamp(lo.x, hi.x), q.y.clamp(lo.y, hi.y));
                    let offset = point - q;
                    let normal = match offset.normalized() {
                        // Face and corner projections alike: d is normal-aligned.
                        Some(n) => n,
                        // On the boundary: face normal, perimeter order on corners.
                        None => {
                            let face = if q.y == lo.y && q.x < hi.x {
                                0
                            } else if q.x == hi.x && q.y < hi.y {
                                1
                            } else if q.y == hi.y && q.x > lo.x {
                                2
                            } else {
                                3
                            };
                            FACE_NORMALS[face]
                        }
                    };
                    BoundaryFrame {
                        point,
                        offset,
                        normal,
                        tangent: normal.perp(),
                    }
                }
            }
            Hole::Disc { center, radius } => {
                let u = q - center;
                let dir = u.normalized().unwrap_or(Vec2::new(1.0, 0.0));
                let point = center + dir * radius;
                let normal = -dir;
                BoundaryFrame {
                    point,
                    offset: point - q,
                    normal,
                    tangent: normal.perp(),
                }
            }
        }
    }

    /// Uniformly sampled points on the boundary, for brute-force verification.
    pub fn sample_boundary(&self, n: usize) -> alloc::vec::Vec<Vec2> {
        let mut out = alloc::vec::Vec::with_capacity(n);
        match *self {
            Hole::Rectangle { center, half } => {
                let lo = center - half;
                let hi = center + half;
                let perim = 4.0 * (half.x + half.y);
                for k in 0..n {
                    let mut s = perim * k as f64 / n as f64;
                    let p = if s < 2.0 * half.x {
                        Vec2::new(lo.x + s, lo.y)
                    } else if {
                        s -= 2.0 * half.x;
                        s < 2.0 * half.y
                    } {
                        Vec2::new(hi.x, lo.y + s)
                    } else if {
                        s -= 2.0 * half.y;
                        s < 2.0 * half.x
                    } {
                        Vec2::new(hi.x - s, hi.y)
                    } else {
                        s -= 2.0 * half.x;
                        Vec2::new(lo.x, hi.y - s)
                    };
                    out.push(p);
                }
            }
            Hole::Disc { center, radius } => {
                for k in 0..n {
                    let angle = core::f64::consts::TAU * k as f64 / n as f64;
                    out.push(center + Vec2::new(angle.cos(), angle.sin()) * radius);
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ycenter_shape() -> EmbeddedShape {
        EmbeddedShape::rect_ycenter(ParamRange::new(-0.5, 0.5))
    }

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64) / ((1u64 << 53) as f64)
    }

    #[test]
    fn inside_tests() {
        let hole = ycenter_shape().resolve(0.0).unwrap();
        assert!(hole.contains(Vec2::new(0.0, 0.0)));
        assert!(!hole.contains(Vec2::new(1.0, 0.0)));
        // Boundary points are excluded.
        assert!(!hole.contains(Vec2::new(0.4, 0.0)));
        let disc = Hole::Disc {
            center: Vec2::ZERO,
            radius: 0.5,
        };
        assert!(!disc.contains(Vec2::new(0.5, 0.0)));
        assert!(disc.contains(Vec2::new(0.49, 0.0)));
    }

    #[test]
    fn inadmissible_parameter_is_rejected() {
        let err = ycenter_shape().resolve(0.75).unwrap_err();
        assert!(matches!(err, GeometryError::InadmissibleParameter { .. }));
    }

    #[test]
    fn aspect_family_keeps_width_fixed() {
        let shape = EmbeddedShape::rect_aspect(Vec2::ZERO, ParamRange::new(0.29, 6.67));
        for mu in [0.29, 1.0, 6.67] {
            match shape.resolve(mu).unwrap() {
                Hole::Rectangle { half, .. } => {
                    assert!((half.x - 0.1).abs() < 1e-15);
                    assert!((half.y - 0.1 / mu).abs() < 1e-15);
                }
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn face_projection_matches_convention() {
        let hole = ycenter_shape().resolve(0.0).unwrap();
        let f = hole.closest_point(Vec2::new(0.5, 0.0));
        assert!((f.point.x - 0.4).abs() < 1e-15 && f.point.y.abs() < 1e-15);
        assert!((f.offset.x + 0.1).abs() < 1e-15 && f.offset.y.abs() < 1e-15);
        assert_eq!(f.normal, Vec2::new(-1.0, 0.0));
        assert_eq!(f.tangent, Vec2::new(0.0, -1.0));
    }

    #[test]
    fn disc_projection_is_radial() {
        let c = Vec2::new(0.3, -0.2);
        let r = 0.4;
        let disc = Hole::Disc { center: c, radius: r };
        let q = c + Vec2::new(0.6, 0.8) * (2.0 * r / 1.0);
        let f = disc.closest_point(q);
        assert!((f.dist() - r).abs() < 1e-14);
        let expected = c + Vec2::new(0.6, 0.8) * r;
        assert!((f.point - expected).norm() < 1e-14);
        assert!((f.normal + Vec2::new(0.6, 0.8)).norm() < 1e-14);
    }

    #[test]
    fn corner_projection_uses_distance_direction() {
        for mu in [-0.3, 0.0, 0.2] {
            let hole = ycenter_shape().resolve(mu).unwrap();
            let q = Vec2::new(0.5, mu + 0.45);
            let f = hole.closest_point(q);
            assert!((f.point - Vec2::new(0.4, mu + 0.35)).norm() < 1e-14);
            assert!((f.offset - Vec2::new(-0.1, -0.1)).norm() < 1e-14);
            let n_dir = f.offset.normalized().unwrap();
            assert!((f.normal - n_dir).norm() < 1e-14);

            // Brute-force oracle: no sampled boundary point is closer.
            let best = hole
                .sample_boundary(100_000)
                .iter()
                .map(|&p| p.dist(q))
                .fold(f64::INFINITY, f64::min);
            assert!(f.dist() <= best + 1e-12);
        }
    }

    #[test]
    fn projection_optimality_against_polyline_oracle() {
        let shapes = [
            ycenter_shape().resolve(0.25).unwrap(),
            Hole::Disc {
                center: Vec2::new(0.1, 0.0),
                radius: 0.5,
            },
        ];
        let mut seed = 99u64;
        for hole in shapes {
            let samples = hole.sample_boundary(20_000);
            for _ in 0..200 {
                let q = Vec2::new(lcg(&mut seed) * 4.0 - 2.0, lcg(&mut seed) * 2.0 - 1.0);
                if hole.contains(q) {
                    continue;
                }
                let f = hole.closest_point(q);
                for &p in samples.iter().step_by(37) {
                    assert!(f.dist() <= p.dist(q) + 1e-12);
                }
                // d-alignment for exterior points.
                if f.dist() > 1e-12 {
                    let aligned = f.normal * f.dist();
                    assert!((f.offset - aligned).norm() <= 1e-12);
                }
                assert!((f.normal.norm() - 1.0).abs() < 1e-14);
                assert!(f.normal.dot(f.tangent).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn projection_is_idempotent_on_boundary() {
        let hole = ycenter_shape().resolve(0.1).unwrap();
        let (center, half) = match hole {
            Hole::Rectangle { center, half } => (center, half),
            _ => unreachable!(),
        };
        // Build the test points from the same arithmetic as the hole so they
        // sit exactly on the boundary.
        let right = Vec2::new(center.x + half.x, center.y);
        let top = Vec2::new(center.x, center.y + half.y);
        let left = Vec2::new(center.x - half.x, center.y - 0.1);
        let corner = Vec2::new(center.x + half.x, center.y + half.y);
        for q in [right, top, left, corner] {
            let f = hole.closest_point(q);
            assert!((f.point - q).norm() < 1e-15);
            assert_eq!(f.dist(), 0.0);
            assert!((f.normal.norm() - 1.0).abs() < 1e-15);
        }
        // On-boundary normals are the face normals.
        assert_eq!(hole.closest_point(right).normal, Vec2::new(-1.0, 0.0));
        assert_eq!(hole.closest_point(top).normal, Vec2::new(0.0, -1.0));
        assert_eq!(hole.closest_point(left).normal, Vec2::new(1.0, 0.0));
    }

    #[test]
    fn projection_commutes_with_parameter_shift() {
        let shape = ycenter_shape();
        let mu = 0.35;
        let hole_mu = shape.resolve(mu).unwrap();
        let hole_0 = shape.resolve(0.0).unwrap();
        let mut seed = 5u64;
        for _ in 0..100 {
            let q = Vec2::new(lcg(&mut seed) * 3.0 - 1.5, lcg(&mut seed) * 2.0 - 1.0);
            let f_mu = hole_mu.closest_point(q);
            let f_0 = hole_0.closest_point(q - Vec2::new(0.0, mu));
            assert!((f_mu.point - (f_0.point + Vec2::new(0.0, mu))).norm() < 1e-12);
            assert!((f_mu.offset - f_0.offset).norm() < 1e-12);
        }
    }

    #[test]
    fn interior_points_project_to_nearest_face() {
        let hole = ycenter_shape().resolve(0.0).unwrap();
        let q = Vec2::new(0.35, 0.05); // nearest to the right face
        let f = hole.closest_point(q);
        assert!((f.point - Vec2::new(0.4, 0.05)).norm() < 1e-15);
        assert_eq!(f.normal, Vec2::new(-1.0, 0.0));
        // d points out of the hole: d = -||d|| n for interior queries.
        assert!((f.offset + f.normal * f.dist()).norm() < 1e-15);
    }
}
