//! Boolean GJK overlap test for convex shapes given by support mappings.

use crate::geometry::Vec3;

pub(crate) trait Support {
    /// Farthest point of the shape in direction `d`.
    fn support(&self, d: &Vec3) -> Vec3;
    /// Any interior (or boundary) point, used to seed the search.
    fn center(&self) -> Vec3;
}

const MAX_ITERATIONS: usize = 96;
const EPS: f64 = 1e-14;

/// True when the two convex shapes share at least one point.
pub(crate) fn intersects(a: &impl Support, b: &impl Support) -> bool {
    let minkowski = |d: &Vec3| a.support(d) - b.support(&-d);

    let mut d = a.center() - b.center();
    if d.norm_squared() < EPS {
        d = Vec3::x();
    }
    let mut simplex: Vec<Vec3> = vec![minkowski(&d)];
    d = -simplex[0];

    for _ in 0..MAX_ITERATIONS {
        if d.norm_squared() < EPS * EPS {
            // origin lies on the current simplex
            return true;
        }
        let p = minkowski(&d);
        if p.dot(&d) < 0.0 {
            return false;
        }
        simplex.push(p);
        if next_simplex(&mut simplex, &mut d) {
            return true;
        }
    }
    // Cycling only happens for touching contact; count it as contact.
    true
}

fn same_direction(a: &Vec3, b: &Vec3) -> bool {
    a.dot(b) > 0.0
}

fn next_simplex(simplex: &mut Vec<Vec3>, d: &mut Vec3) -> bool {
    match simplex.len() {
        2 => line(simplex, d),
        3 => triangle(simplex, d),
        4 => tetrahedron(simplex, d),
        _ => unreachable!("simplex holds 2..=4 points"),
    }
}

// Simplex points are stored oldest first; the last one is the newest (a).

fn line(s: &mut Vec<Vec3>, d: &mut Vec3) -> bool {
    let a = s[1];
    let b = s[0];
    let ab = b - a;
    let ao = -a;
    if same_direction(&ab, &ao) {
        *d = ab.cross(&ao).cross(&ab);
        if d.norm_squared() < EPS * EPS * ab.norm_squared().max(1.0) {
            return true;
        }
    } else {
        *s = vec![a];
        *d = ao;
    }
    false
}

fn triangle(s: &mut Vec<Vec3>, d: &mut Vec3) -> bool {
    let a = s[2];
    let b = s[1];
    let c = s[0];
    let ab = b - a;
    let ac = c - a;
    let ao = -a;
    let abc = ab.cross(&ac);

    if same_direction(&abc.cross(&ac), &ao) {
        if same_direction(&ac, &ao) {
            *s = vec![c, a];
            *d = ac.cross(&ao).cross(&ac);
            return false;
        }
        *s = vec![b, a];
        return line(s, d);
    }
    if same_direction(&ab.cross(&abc), &ao) {
        *s = vec![b, a];
        return line(s, d);
    }
    let side = abc.dot(&ao);
    if side.abs() <= EPS * abc.norm() {
        return true;
    }
    if side > 0.0 {
        *d = abc;
    } else {
        *s = vec![b, c, a];
        *d = -abc;
    }
    false
}

fn tetrahedron(s: &mut Vec<Vec3>, d: &mut Vec3) -> bool {
    let a = s[3];
    let b = s[2];
    let c = s[1];
    let dd = s[0];
    let ab = b - a;
    let ac = c - a;
    let ad = dd - a;
    let ao = -a;
    let abc = ab.cross(&ac);
    let acd = ac.cross(&ad);
    let adb = ad.cross(&ab);

    if same_direction(&abc, &ao) {
        *s = vec![c, b, a];
        return triangle(s, d);
    }
    if same_direction(&acd, &ao) {
        *s = vec![dd, c, a];
        return triangle(s, d);
    }
    if same_direction(&adb, &ao) {
        *s = vec![b, dd, a];
        return triangle(s, d);
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Ball(Vec3, f64);

    impl Support for Ball {
        fn support(&self, d: &Vec3) -> Vec3 {
            let n = d.norm();
            if n == 0.0 {
                self.0
            } else {
                self.0 + d * (self.1 / n)
            }
        }
        fn center(&self) -> Vec3 {
            self.0
        }
    }

    #[test]
    fn balls_overlap_iff_centers_close() {
        let a = Ball(Vec3::zeros(), 1.0);
        for x in [0.3, 1.5, 1.99, 2.01, 2.5, 5.0] {
            let b = Ball(Vec3::new(x, 0.3 * x, -0.2 * x), 1.0);
            let dist = b.0.norm();
            assert_eq!(intersects(&a, &b), dist < 2.0, "x={x}");
        }
    }

    #[test]
    fn concentric_shapes_overlap() {
        let a = Ball(Vec3::new(1.0, 2.0, 3.0), 0.1);
        let b = Ball(Vec3::new(1.0, 2.0, 3.0), 5.0);
        assert!(intersects(&a, &b));
    }
}
