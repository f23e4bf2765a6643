//! Small planar linear-algebra helpers on top of nalgebra.

pub type Vec2 = nalgebra::Vector2<f64>;
pub type Mat2 = nalgebra::Matrix2<f64>;

/// `a^⊥`: `a` rotated by π/2 clockwise, `(x, y)^⊥ = (y, −x)`.
pub fn perp(a: &Vec2) -> Vec2 {
    Vec2::new(a.y, -a.x)
}

/// 2D cross product `a × b = a.x b.y − a.y b.x`.
pub fn cross(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Real eigenvalues of a 2×2 matrix, ordered `(closest to 1, other)`.
///
/// The second eigenvalue is recovered as `det / first` when it is the smaller
/// one in magnitude, which keeps full relative accuracy for strongly
/// contracting monodromies.
pub fn split_unit_eigenvalue(m: &Mat2) -> Option<(f64, f64)> {
    let tr = m.trace();
    let det = m.determinant();
    let disc = tr * tr - 4.0 * det;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    // avoid cancellation in the smaller root
    let big = if tr >= 0.0 { 0.5 * (tr + sq) } else { 0.5 * (tr - sq) };
    if big == 0.0 {
        return Some((0.0, 0.0));
    }
    let small = det / big;
    if (big - 1.0).abs() <= (small - 1.0).abs() {
        Some((big, small))
    } else {
        Some((small, big))
    }
}

/// Unit vector spanning the kernel of a (nearly) singular 2×2 matrix.
pub fn null_vector(a: &Mat2) -> Vec2 {
    let r0 = Vec2::new(a[(0, 0)], a[(0, 1)]);
    let r1 = Vec2::new(a[(1, 0)], a[(1, 1)]);
    let r = if r0.norm() >= r1.norm() { r0 } else { r1 };
    let n = r.norm();
    if n == 0.0 {
        return Vec2::new(1.0, 0.0);
    }
    Vec2::new(-r.y, r.x) / n
}

/// Eigenvector of `m` for the (real) eigenvalue `lambda`, unit length.
pub fn eigenvector(m: &Mat2, lambda: f64) -> Vec2 {
    null_vector(&(m - Mat2::identity() * lambda))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perp_is_clockwise() {
        assert_eq!(perp(&Vec2::new(1.0, 0.0)), Vec2::new(0.0, -1.0));
        assert_eq!(perp(&Vec2::new(0.0, 1.0)), Vec2::new(1.0, 0.0));
    }

    #[test]
    fn eigen_split_keeps_small_root_accurate() {
        let rho = (-4.0 * std::f64::consts::PI).exp();
        let r = nalgebra::Rotation2::new(0.3).into_inner();
        let m = r * Mat2::new(1.0, 0.2, 0.0, rho) * r.transpose();
        let (one, other) = split_unit_eigenvalue(&m).unwrap();
        assert!((one - 1.0).abs() < 1e-14);
        assert!((other / rho - 1.0).abs() < 1e-9);
        let v = eigenvector(&m, other);
        assert!((m * v - v * other).norm() < 1e-12);
    }
}
