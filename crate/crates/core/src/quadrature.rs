//! Adaptive Gauss–Kronrod (7, 15) quadrature.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("quadrature did not converge on [{a}, {b}] at depth {depth} (error estimate {error:e})")]
    NoConvergence { a: f64, b: f64, depth: usize, error: f64 },
    #[error("non-finite integrand near t = {0}")]
    NonFinite(f64),
}

pub const MAX_DEPTH: usize = 30;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<(f64, f64), QuadError> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    let (k, g) = (k * h, g * h);
    if !k.is_finite() {
        return Err(QuadError::NonFinite(c));
    }
    Ok((k, (k - g).abs()))
}

fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, floor: f64, depth: usize) -> Result<Quad, QuadError> {
    let (v, e) = gk15(f, a, b)?;
    // the G7/K15 difference is a pessimistic estimate for smooth panels
    if e <= tol || (b - a).abs() <= 1e-15 * (1.0 + a.abs()) {
        return Ok(Quad { value: v, error: e, panels: 1 });
    }
    if depth >= MAX_DEPTH {
        return Err(QuadError::NoConvergence { a, b, depth, error: e });
    }
    let m = 0.5 * (a + b);
    let sub = (0.5 * tol).max(floor);
    let l = recurse(f, a, m, sub, floor, depth + 1)?;
    let r = recurse(f, m, b, sub, floor, depth + 1)?;
    Ok(Quad {
        value: l.value + r.value,
        error: l.error + r.error,
        panels: l.panels + r.panels,
    })
}

/// `∫_a^b f` to absolute tolerance `tol`, splitting first at every
/// breakpoint inside `(a, b)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], tol: f64) -> Result<Quad, QuadError> {
    if a == b {
        return Ok(Quad { value: 0.0, error: 0.0, panels: 0 });
    }
    if b < a {
        let q = integrate(f, b, a, breaks, tol)?;
        return Ok(Quad { value: -q.value, ..q });
    }
    let mut nodes = vec![a];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&t| t > a && t < b).collect();
    inner.sort_by(|x, y| x.partial_cmp(y).unwrap());
    nodes.extend(inner);
    nodes.push(b);
    nodes.dedup();
    let len = b - a;
    let mut total = Quad { value: 0.0, error: 0.0, panels: 0 };
    for w in nodes.windows(2) {
        let share = tol * (w[1] - w[0]) / len;
        let q = recurse(&f, w[0], w[1], share, 1e-6 * tol, 0)?;
        total.value += q.value;
        total.error += q.error;
        total.panels += q.panels;
    }
    Ok(total)
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for i in 1..n {
        let v = f(a + h * i as f64);
        if i % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    h / 3.0 * (f(a) + f(b) + 4.0 * odd + 2.0 * even)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomials_and_trig() {
        let q = integrate(|x| x.powi(5) - 3.0 * x, 0.0, 2.0, &[], 1e-13).unwrap();
        assert!((q.value - (64.0 / 6.0 - 6.0)).abs() < 1e-13);
        let q = integrate(|x| x.sin(), 0.0, PI, &[], 1e-13).unwrap();
        assert!((q.value - 2.0).abs() < 1e-13);
        let q = integrate(|x| x.exp(), 1.0, 0.0, &[], 1e-13).unwrap();
        assert!((q.value + (1f64.exp() - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn kinks_at_breakpoints() {
        let f = |x: f64| (x - 0.3).abs();
        let q = integrate(f, 0.0, 1.0, &[0.3], 1e-14).unwrap();
        assert!((q.value - (0.045 + 0.245)).abs() < 1e-14);
        assert_eq!(q.panels, 2);
        let q = integrate(f, 0.0, 1.0, &[], 1e-12).unwrap();
        assert!((q.value - 0.29).abs() < 1e-12);
    }

    #[test]
    fn gives_up_on_singularity() {
        let e = integrate(|x: f64| 1.0 / x.abs().sqrt().max(1e-300).powi(3), -1.0, 1.0, &[], 1e-10);
        assert!(e.is_err());
    }

    #[test]
    fn simpson_matches() {
        let s = simpson(|x: f64| x.cos().exp(), 0.0, 2.0 * PI, 1000);
        let q = integrate(|x: f64| x.cos().exp(), 0.0, 2.0 * PI, &[], 1e-13).unwrap();
        assert!((s - q.value).abs() < 1e-12);
    }
}
