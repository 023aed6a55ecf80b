//! Closed geodesics, the cycle pairing (f, C) = Re((i/sqrt d)^(k-1) int f Q^(k-1) dz),
//! path planning around poles and local expansions at points of H.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::arith::{gcd, is_square};
use crate::error::{invalid, Error, Result};
use crate::maass::raising_numeric;
use crate::merom::i_pow;
use crate::qf::{LatticeVector, Mat2, QuadForm};
use crate::quad::adaptive_gl;
use crate::specfun::{gamma, hyp2f1, legendre_p};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PathPolicy {
    DirectSegment,
    /// polygon through the listed points between z0 and gamma z0
    Waypoints(Vec<Complex64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicCycle {
    pub gamma: Mat2,
    /// Q_gamma = [c, d - a, -b]
    pub q: QuadForm,
    pub d_gamma: i64,
    pub base_point: Complex64,
    pub path_policy: PathPolicy,
}

/// JSON description of a cycle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CycleConfig {
    pub gamma: [i64; 4],
    #[serde(default)]
    pub base_point: Option<[f64; 2]>,
    #[serde(default)]
    pub waypoints: Vec<[f64; 2]>,
}

impl CycleConfig {
    pub fn build(&self) -> Result<GeodesicCycle> {
        let [a, b, c, d] = self.gamma;
        let mut cyc = cycle_from_matrix(Mat2::new(a, b, c, d))?;
        if let Some([x, y]) = self.base_point {
            cyc = cyc.with_base_point(Complex64::new(x, y))?;
        }
        if !self.waypoints.is_empty() {
            cyc.path_policy = PathPolicy::Waypoints(self.waypoints.iter().map(|&[x, y]| Complex64::new(x, y)).collect());
        }
        Ok(cyc)
    }
}

/// True if a hyperbolic gamma is not +-delta^m with m >= 2. The stabilizer of
/// the primitive form Q_gamma / g is generated by the unit (t0 + u0 sqrt d0)/2
/// of least u0 > 0, and gamma corresponds to u = g.
pub fn is_primitive(gamma: &Mat2) -> bool {
    let q = gamma_form(gamma);
    let g = gcd(gcd(q.a, q.b), q.c);
    let d0 = q.disc() / (g * g);
    let u0 = (1..).find(|&u: &i64| is_square(d0 * u * u + 4)).expect("Pell equation has a solution");
    g == u0
}

fn gamma_form(g: &Mat2) -> QuadForm {
    QuadForm::new(g.c, g.d - g.a, -g.b)
}

pub fn cycle_from_matrix(gamma: Mat2) -> Result<GeodesicCycle> {
    if gamma.det() != 1 {
        return invalid("matrix must have determinant 1");
    }
    let t = gamma.trace();
    if t.abs() <= 2 {
        return invalid(format!("trace {t} is not hyperbolic"));
    }
    if !is_primitive(&gamma) {
        return invalid("matrix is a proper power");
    }
    let q = gamma_form(&gamma);
    let mut cyc = GeodesicCycle {
        gamma,
        q,
        d_gamma: t * t - 4,
        base_point: Complex64::new(0.0, 1.0),
        path_policy: PathPolicy::DirectSegment,
    };
    cyc.base_point = cyc.apex();
    Ok(cyc)
}

impl GeodesicCycle {
    /// The two real fixed points, increasing.
    pub fn fixed_points(&self) -> (f64, f64) {
        let g = &self.gamma;
        let s = (self.d_gamma as f64).sqrt();
        let c = g.c as f64;
        let (x1, x2) = (((g.a - g.d) as f64 - s) / (2.0 * c), ((g.a - g.d) as f64 + s) / (2.0 * c));
        (x1.min(x2), x1.max(x2))
    }

    /// Top of the semicircle S_gamma.
    pub fn apex(&self) -> Complex64 {
        let (x1, x2) = self.fixed_points();
        Complex64::new(0.5 * (x1 + x2), 0.5 * (x2 - x1))
    }

    pub fn with_base_point(mut self, z: Complex64) -> Result<Self> {
        if z.im <= 0.0 {
            return invalid("base point must lie in the upper half-plane");
        }
        self.base_point = z;
        Ok(self)
    }

    /// The point of S_gamma at angle theta (0 < theta < pi) seen from the centre.
    pub fn point_on_geodesic(&self, theta: f64) -> Complex64 {
        let (x1, x2) = self.fixed_points();
        Complex64::new(0.5 * (x1 + x2), 0.0) + Complex64::from_polar(0.5 * (x2 - x1), theta)
    }

    pub fn end_point(&self) -> Complex64 {
        self.gamma.act(self.base_point)
    }

    fn vertices(&self) -> Vec<Complex64> {
        let mut v = vec![self.base_point];
        if let PathPolicy::Waypoints(w) = &self.path_policy {
            v.extend(w.iter().copied());
        }
        v.push(self.end_point());
        v
    }

    /// Box [xmin, xmax] x [ymin, oo) containing every path the planner can
    /// produce for this cycle with the given detour factor.
    pub fn bounding_box(&self, opts: &PathOptions) -> (f64, f64, f64) {
        let v = self.vertices();
        let xmin = v.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        let xmax = v.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        let ymin = v.iter().map(|z| z.im).fold(f64::INFINITY, f64::min);
        let shrink = 1.0 / (1.0 + 2.0 * opts.detour);
        let pad = 2.0 * opts.detour * v.iter().map(|z| z.im).fold(0.0, f64::max);
        (xmin - pad, xmax + pad, ymin * shrink)
    }
}

/// One piece of an integration path, parametrised over [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Piece {
    Line { from: Complex64, to: Complex64 },
    Arc { centre: Complex64, radius: f64, from: f64, to: f64 },
}

impl Piece {
    pub fn point(&self, t: f64) -> Complex64 {
        match *self {
            Piece::Line { from, to } => from + (to - from) * t,
            Piece::Arc { centre, radius, from, to } => centre + Complex64::from_polar(radius, from + (to - from) * t),
        }
    }

    pub fn velocity(&self, t: f64) -> Complex64 {
        match *self {
            Piece::Line { from, to } => to - from,
            Piece::Arc { radius, from, to, .. } => {
                Complex64::new(0.0, to - from) * Complex64::from_polar(radius, from + (to - from) * t)
            }
        }
    }
}

/// Detour parameters: a pole p within `detour * Im p` of a segment is
/// bypassed along the circle of that radius about p.
#[derive(Debug, Clone, Copy)]
pub struct PathOptions {
    pub detour: f64,
    /// absolute quadrature tolerance relative to the integrand scale
    pub tol: f64,
    pub max_depth: u32,
    /// side used when a pole lies on the segment: +1 left, -1 right
    pub side: f64,
}

impl Default for PathOptions {
    fn default() -> Self {
        PathOptions { detour: 0.2, tol: 1e-12, max_depth: 40, side: 1.0 }
    }
}

fn wrap_angle(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// Polygon from base_point to gamma base_point through the waypoints, with
/// circular detours around the listed poles.
pub fn plan_path(cycle: &GeodesicCycle, poles: &[Complex64], opts: &PathOptions) -> Result<Vec<Piece>> {
    let verts = cycle.vertices();
    let radius_of = |p: Complex64| -> f64 {
        let mut r = opts.detour * p.im;
        for q in poles {
            let d = (q - p).norm();
            if d > 1e-12 {
                r = r.min(0.4 * d);
            }
        }
        r
    };
    let mut pieces = Vec::new();
    for w in verts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let dir = b - a;
        let len = dir.norm();
        if len == 0.0 {
            continue;
        }
        let u = dir / len;
        // (t_in, t_out, centre, radius)
        let mut hits: Vec<(f64, f64, Complex64, f64)> = Vec::new();
        for &p in poles {
            let r = radius_of(p);
            let rel = (p - a) / u;
            let (along, off) = (rel.re, rel.im);
            if off.abs() >= r {
                continue;
            }
            let half = (r * r - off * off).sqrt();
            let (t0, t1) = (along - half, along + half);
            if t1 <= 0.0 || t0 >= len {
                continue;
            }
            if t0 <= 0.0 || t1 >= len {
                let d = (p - a).norm().min((p - b).norm());
                return Err(Error::PoleTooClose { re: p.re, im: p.im, distance: d });
            }
            hits.push((t0, t1, p, r));
        }
        hits.sort_by(|x, y| x.0.total_cmp(&y.0));
        for h in hits.windows(2) {
            if h[1].0 < h[0].1 {
                return Err(Error::PoleTooClose { re: h[1].2.re, im: h[1].2.im, distance: (h[1].2 - h[0].2).norm() });
            }
        }
        let mut cur = a;
        for (t0, t1, p, r) in hits {
            let enter = a + u * t0;
            let leave = a + u * t1;
            pieces.push(Piece::Line { from: cur, to: enter });
            let th0 = (enter - p).arg();
            let th1 = (leave - p).arg();
            let mut sweep = wrap_angle(th1 - th0);
            let off = ((p - a) / u).im;
            if off.abs() < 1e-12 * r {
                // pole on the segment: half circle to the requested side
                sweep = -opts.side * PI;
            }
            pieces.push(Piece::Arc { centre: p, radius: r, from: th0, to: th0 + sweep });
            cur = leave;
        }
        pieces.push(Piece::Line { from: cur, to: b });
    }
    Ok(pieces)
}

/// Result of a cycle pairing.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Pairing {
    /// Re of the projected integral
    pub value: f64,
    /// (i / sqrt d_gamma)^(k-1) times the integral
    pub projected: Complex64,
    /// int f(z) Q_gamma(z, 1)^(k-1) dz
    pub integral: Complex64,
    pub error: f64,
}

/// int over the path of f(z) Q(z,1)^(k-1) dz, piece by piece.
pub fn path_integral<F>(f: &F, q: &QuadForm, k: u32, pieces: &[Piece], opts: &PathOptions) -> Result<(Complex64, f64)>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let mut total = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    for piece in pieces {
        let integrand = |t: f64| -> Result<Complex64> {
            let z = piece.point(t);
            Ok(f(z)? * q.eval(z).powi(k as i32 - 1) * piece.velocity(t))
        };
        let mut scale: f64 = 0.0;
        for j in 0..=16 {
            scale = scale.max(integrand(j as f64 / 16.0)?.norm());
        }
        let failure = std::cell::RefCell::new(None);
        let est = adaptive_gl(
            |t| match integrand(t) {
                Ok(v) => v,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    Complex64::new(0.0, 0.0)
                }
            },
            0.0,
            1.0,
            opts.tol * scale.max(1e-300),
            opts.max_depth,
        )?;
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        total += est.value;
        err += est.error;
    }
    Ok((total, err))
}

fn project(k: u32, d_gamma: i64, integral: Complex64) -> Complex64 {
    integral * i_pow(k as i64 - 1) / (d_gamma as f64).sqrt().powi(k as i32 - 1)
}

/// (f, C_gamma) along the planned path.
pub fn pairing<F>(f: &F, cycle: &GeodesicCycle, k: u32, poles: &[Complex64], opts: &PathOptions) -> Result<Pairing>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let pieces = plan_path(cycle, poles, opts)?;
    let (integral, error) = path_integral(f, &cycle.q, k, &pieces, opts)?;
    let projected = project(k, cycle.d_gamma, integral);
    Ok(Pairing { value: projected.re, projected, integral, error })
}

/// The pairing along two path policies for the same cycle.
pub fn path_independence_check<F>(
    f: &F,
    cycle: &GeodesicCycle,
    k: u32,
    poles: &[Complex64],
    policies: (PathPolicy, PathPolicy),
    opts: &PathOptions,
) -> Result<(Pairing, Pairing)>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let mut c1 = cycle.clone();
    c1.path_policy = policies.0;
    let mut c2 = cycle.clone();
    c2.path_policy = policies.1;
    Ok((pairing(f, &c1, k, poles, opts)?, pairing(f, &c2, k, poles, opts)?))
}

fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

fn seg_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let t = (((p - a) * d.conj()).re / d.norm_sqr()).clamp(0.0, 1.0);
    (p - (a + d * t)).norm()
}

/// A waypoint w such that the triangle (z0, w, gamma z0) encloses `pole` and
/// no other listed pole, with every pole clear of the new edges. Returns w and
/// the orientation (+1 counter-clockwise) of the loop z0 -> w -> gamma z0 -> z0,
/// so that the waypoint path minus the direct path is orientation times the
/// counter-clockwise loop around the pole.
pub fn loop_waypoint(cycle: &GeodesicCycle, pole: Complex64, poles: &[Complex64], opts: &PathOptions) -> Result<(Complex64, f64)> {
    let (z0, z1) = (cycle.base_point, cycle.end_point());
    let d = z1 - z0;
    let t = (((pole - z0) * d.conj()).re / d.norm_sqr()).clamp(0.0, 1.0);
    let foot = z0 + d * t;
    let off = (pole - foot).norm();
    let normal = if off > 1e-12 { (pole - foot) / off } else { Complex64::new(-d.im, d.re) / d.norm() };
    let radius = |p: Complex64| opts.detour * p.im;
    let inside = |p: Complex64, w: Complex64| {
        let s = [cross(w - z0, p - z0), cross(z1 - w, p - w), cross(z0 - z1, p - z1)];
        s.iter().all(|&v| v > 0.0) || s.iter().all(|&v| v < 0.0)
    };
    for s in [1.5, 2.0, 3.0, 4.0, 6.0, 8.0] {
        let w = pole + normal * (s * off.max(radius(pole)));
        if w.im <= 0.0 || !inside(pole, w) {
            continue;
        }
        let clear = poles.iter().all(|&q| {
            let enclosed = inside(q, w);
            let is_target = (q - pole).norm() < 1e-12;
            enclosed == is_target && seg_distance(q, z0, w).min(seg_distance(q, w, z1)) > 1.05 * radius(q)
        });
        if clear {
            return Ok((w, cross(w - z0, z1 - w).signum()));
        }
    }
    Err(Error::IllConditioned(format!("no waypoint isolates the pole at {pole}")))
}

/// Coefficient of X^(k-1) in Q_gamma(z,1)^(k-1) (z - conj p)^(2-2k), X = (z - p)/(z - conj p):
/// (-4 Im p)^(1-k) (2i sqrt d)^(k-1) P_(k-1)(i (A|p|^2 + B Re p + C) / (Im p sqrt d)).
pub fn elliptic_coeff_q(gamma: &Mat2, p: Complex64, k: u32) -> Complex64 {
    let q = gamma_form(gamma);
    let d = q.disc() as f64;
    let sd = d.sqrt();
    let arg = Complex64::new(0.0, (q.a as f64 * p.norm_sqr() + q.b as f64 * p.re + q.c as f64) / (p.im * sd));
    let m = k as i32 - 1;
    (-4.0 * p.im).powi(-m) * (Complex64::new(0.0, 2.0 * sd)).powi(m) * legendre_p(k - 1, arg)
}

/// Predicted value of the counter-clockwise loop integral of f Q_gamma^(k-1)
/// around p, where f = a ((z - p)(z - conj p)/(p - conj p))^(-k) + (holomorphic):
/// (pi / Im p) a (2i Im p)^k c_(k-1).
pub fn loop_integral_prediction(gamma: &Mat2, p: Complex64, k: u32, a: f64) -> Complex64 {
    let delta = Complex64::new(0.0, 2.0 * p.im);
    PI / p.im * a * delta.powi(k as i32) * elliptic_coeff_q(gamma, p, k)
}

/// The same loop integral after the projection (i / sqrt d_gamma)^(k-1).
pub fn projected_loop_prediction(cycle: &GeodesicCycle, p: Complex64, k: u32, a: f64) -> Complex64 {
    project(k, cycle.d_gamma, loop_integral_prediction(&cycle.gamma, p, k, a))
}

/// R_0^k of w^(k/2) 2F1(k/2, (k+1)/2; k+1/2; w) with w = 2|m|/p_z(X)^2, by finite
/// differences, against Gamma(2k)/Gamma(k) (sqrt(4N|m|) sgn p_z(X) / Q_X(z))^k.
pub fn raising_hypergeometric_check(k: u32, m: f64, x: &LatticeVector, z: Complex64) -> Result<(Complex64, Complex64)> {
    if m >= 0.0 || (x.norm() - m).abs() > 1e-12 * m.abs() {
        return invalid(format!("need q(X) = m < 0, got q(X) = {}", x.norm()));
    }
    let kf = k as f64;
    let w_at = |t: Complex64| 2.0 * m.abs() / x.p_z(t).powi(2);
    let w0 = w_at(z);
    if !(w0 > 0.0 && w0 < 1.0) {
        return invalid(format!("2|m|/p_z^2 = {w0} is outside (0, 1)"));
    }
    let phi = |t: Complex64| -> Result<Vec<Complex64>> {
        let w = w_at(t);
        if !(w > 0.0 && w < 1.0) {
            return invalid("finite-difference stencil left the domain");
        }
        Ok(vec![Complex64::new(w.powf(kf / 2.0) * hyp2f1(kf / 2.0, (kf + 1.0) / 2.0, kf + 0.5, w)?, 0.0)])
    };
    let h = 0.02 * z.im;
    let l1 = raising_numeric(&phi, 0.0, k, z, h)?[0];
    let l2 = raising_numeric(&phi, 0.0, k, z, h / 2.0)?[0];
    let qz = x.to_form().eval(z);
    let n = x.n as f64;
    let sgn = x.p_z(z).signum();
    let rhs = gamma(2.0 * kf) / gamma(kf) * ((4.0 * n * m.abs()).sqrt() * sgn / qz).powi(k as i32);
    if (l1 - l2).norm() > 1e-3 * rhs.norm() {
        return Err(Error::IllConditioned(format!("finite differences unstable: {l1} vs {l2}")));
    }
    Ok((l2, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples_from_matrices() {
        let c = cycle_from_matrix(Mat2::new(2, 1, 1, 1)).unwrap();
        assert_eq!(c.q, QuadForm::new(1, -1, -1));
        assert_eq!(c.d_gamma, 5);
        let c = cycle_from_matrix(Mat2::new(5, 2, 2, 1)).unwrap();
        assert_eq!(c.q, QuadForm::new(2, -4, -2));
        assert_eq!(c.d_gamma, 32);
        assert!(cycle_from_matrix(Mat2::new(1, 1, 0, 1)).is_err());
    }

    #[test]
    fn squares_are_not_primitive() {
        let g = Mat2::new(2, 1, 1, 1);
        assert!(is_primitive(&g));
        assert!(!is_primitive(&g.mul(&g)));
        assert!(!is_primitive(&g.mul(&g).mul(&g)));
    }

    #[test]
    fn form_vanishes_at_fixed_points() {
        let c = cycle_from_matrix(Mat2::new(5, 2, 2, 1)).unwrap();
        let (x1, x2) = c.fixed_points();
        for x in [x1, x2] {
            assert!(c.q.eval(Complex64::new(x, 0.0)).norm() < 1e-12);
            assert!((c.gamma.act(Complex64::new(x, 0.0)) - x).norm() < 1e-9);
        }
    }
}
