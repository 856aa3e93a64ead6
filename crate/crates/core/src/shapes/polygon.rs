//! Planar polygon utilities, generic over the scalar type.

use crate::geom::Vec2;
use crate::scalar::Real;

pub fn signed_area<T: Real>(poly: &[Vec2<T>]) -> T {
    let n = poly.len();
    let mut acc = T::zero();
    for i in 0..n {
        acc = acc + poly[i].cross(poly[(i + 1) % n]);
    }
    acc * T::half()
}

pub fn is_ccw<T: Real>(poly: &[Vec2<T>]) -> bool {
    signed_area(poly) > T::zero()
}

/// Area centroid.
pub fn centroid<T: Real>(poly: &[Vec2<T>]) -> Vec2<T> {
    let n = poly.len();
    let (mut cx, mut cy) = (T::zero(), T::zero());
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let c = a.cross(b);
        cx = cx + (a.x + b.x) * c;
        cy = cy + (a.y + b.y) * c;
    }
    let k = T::one() / (T::lit(6.0) * signed_area(poly));
    Vec2::new(cx * k, cy * k)
}

/// Axis-aligned bounds `(min, max)`.
pub fn bounds<T: Real>(poly: &[Vec2<T>]) -> (Vec2<T>, Vec2<T>) {
    poly.iter().fold(
        (
            Vec2::new(T::infinity(), T::infinity()),
            Vec2::new(T::neg_infinity(), T::neg_infinity()),
        ),
        |(lo, hi), p| {
            (
                Vec2::new(lo.x.min(p.x), lo.y.min(p.y)),
                Vec2::new(hi.x.max(p.x), hi.y.max(p.y)),
            )
        },
    )
}

fn segments_intersect<T: Real>(a: Vec2<T>, b: Vec2<T>, c: Vec2<T>, d: Vec2<T>) -> bool {
    let d1 = (b - a).cross(c - a);
    let d2 = (b - a).cross(d - a);
    let d3 = (d - c).cross(a - c);
    let d4 = (d - c).cross(b - c);
    ((d1 > T::zero()) != (d2 > T::zero()) && d1 != T::zero() && d2 != T::zero())
        && ((d3 > T::zero()) != (d4 > T::zero()) && d3 != T::zero() && d4 != T::zero())
}

/// No two non-adjacent edges cross and no edge is degenerate.
pub fn is_simple<T: Real>(poly: &[Vec2<T>]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (b - a).norm() == T::zero() {
            return false;
        }
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_intersect(a, b, poly[j], poly[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

/// Even-odd point containment.
pub fn contains<T: Real>(poly: &[Vec2<T>], p: Vec2<T>) -> bool {
    let n = poly.len();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

pub fn point_segment_distance<T: Real>(p: Vec2<T>, a: Vec2<T>, b: Vec2<T>) -> T {
    let ab = b - a;
    let len2 = ab.dot(ab);
    let s = if len2 > T::zero() {
        ((p - a).dot(ab) / len2).max(T::zero()).min(T::one())
    } else {
        T::zero()
    };
    (p - (a + ab.scale(s))).norm()
}

/// Distance from `p` to the polygon boundary.
pub fn boundary_distance<T: Real>(poly: &[Vec2<T>], p: Vec2<T>) -> T {
    let n = poly.len();
    (0..n).fold(T::infinity(), |acc, i| {
        acc.min(point_segment_distance(p, poly[i], poly[(i + 1) % n]))
    })
}

pub fn rotate<T: Real>(poly: &[Vec2<T>], angle: T) -> Vec<Vec2<T>> {
    poly.iter().map(|p| p.rotated(angle)).collect()
}

pub fn mirror_y<T: Real>(poly: &[Vec2<T>]) -> Vec<Vec2<T>> {
    // Reflection flips orientation; reverse to stay counter-clockwise.
    poly.iter().rev().map(|p| Vec2::new(p.x, -p.y)).collect()
}

/// Miter offset of a CCW polygon: positive `d` grows it outward, negative
/// shrinks it. Valid while `|d|` is small relative to the shortest feature.
pub fn offset<T: Real>(poly: &[Vec2<T>], d: T) -> Vec<Vec2<T>> {
    let n = poly.len();
    let normal = |i: usize| {
        let e = poly[(i + 1) % n] - poly[i];
        Vec2::new(e.y, -e.x).scale(T::one() / e.norm())
    };
    (0..n)
        .map(|i| {
            let n_in = normal((i + n - 1) % n);
            let n_out = normal(i);
            let denom = T::one() + n_in.dot(n_out);
            poly[i] + (n_in + n_out).scale(d / denom)
        })
        .collect()
}

/// Whether `rotated` equals `poly` as a cyclic vertex sequence within `tol`.
fn cyclic_match<T: Real>(poly: &[Vec2<T>], rotated: &[Vec2<T>], tol: T) -> bool {
    let n = poly.len();
    (0..n).any(|shift| (0..n).all(|i| (rotated[i] - poly[(i + shift) % n]).norm() <= tol))
}

/// Number of rotations in {0°, 90°, 180°, 270°} about the centroid that map
/// the polygon onto itself. Always 1, 2, or 4.
pub fn symmetry_order_of<T: Real>(poly: &[Vec2<T>]) -> u32 {
    let c = centroid(poly);
    let local: Vec<Vec2<T>> = poly.iter().map(|&p| p - c).collect();
    let (lo, hi) = bounds(&local);
    let extent = (hi.x - lo.x).max(hi.y - lo.y);
    // 1e-6 m at the 4 cm design scale, relative beyond it.
    let tol = T::lit(1e-6) * (extent / T::lit(0.04)).max(T::one());
    (0..4)
        .filter(|&k| {
            let rotated: Vec<Vec2<T>> = local.iter().map(|p| p.rotated_quarter(k)).collect();
            cyclic_match(&local, &rotated, tol)
        })
        .count() as u32
}
