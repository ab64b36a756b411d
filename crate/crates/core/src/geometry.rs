//! Planar primitives shared by the simulator and the raster generator.
//!
//! Orientation tests use plain double-precision cross products. Every
//! coordinate handled here is a continuous random variate, so degenerate
//! (exactly collinear) configurations occur with probability zero and the
//! sign of the cross product is all that matters.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("degenerate segment: endpoints coincide at ({x}, {y})")]
    DegenerateSegment { x: f64, y: f64 },
    #[error("segment half-length must be positive and finite, got {0}")]
    InvalidHalfLength(f64),
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("density must be finite and non-negative, got {0}")]
    NegativeDensity(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_polar(radius: f64, angle: f64) -> Self {
        Self::new(radius * angle.cos(), radius * angle.sin())
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn offset(&self, dx: f64, dy: f64) -> Point2 {
        Point2::new(self.x + dx, self.y + dy)
    }
}

/// Cross product `(b - a) x (c - a)`.
#[inline]
pub fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

#[inline]
fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// A line segment stored by midpoint, half-length and direction angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub midpoint: Point2,
    pub half_length: f64,
    /// Direction in `[0, 2π)`.
    pub angle: f64,
}

impl Segment {
    pub fn new(midpoint: Point2, half_length: f64, angle: f64) -> Result<Self, GeometryError> {
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(GeometryError::InvalidHalfLength(half_length));
        }
        if !midpoint.is_finite() || !angle.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        Ok(Self {
            midpoint,
            half_length,
            angle: angle.rem_euclid(TAU),
        })
    }

    /// Endpoints `(e1, e2)` ordered along the direction angle.
    pub fn endpoints(&self) -> (Point2, Point2) {
        let (s, c) = self.angle.sin_cos();
        let dx = self.half_length * c;
        let dy = self.half_length * s;
        (self.midpoint.offset(-dx, -dy), self.midpoint.offset(dx, dy))
    }

    pub fn length(&self) -> f64 {
        2.0 * self.half_length
    }
}

/// Anything that can be viewed as a closed segment between two endpoints.
pub trait AsEndpoints {
    fn as_endpoints(&self) -> (Point2, Point2);
}

impl AsEndpoints for Segment {
    fn as_endpoints(&self) -> (Point2, Point2) {
        self.endpoints()
    }
}

impl AsEndpoints for (Point2, Point2) {
    fn as_endpoints(&self) -> (Point2, Point2) {
        *self
    }
}

fn check_non_degenerate((p, q): (Point2, Point2)) -> Result<(), GeometryError> {
    if !p.is_finite() || !q.is_finite() {
        return Err(GeometryError::NonFinite);
    }
    if p == q {
        return Err(GeometryError::DegenerateSegment { x: p.x, y: p.y });
    }
    Ok(())
}

/// Closed-segment intersection test. Touching endpoints and collinear
/// overlap both count as intersecting.
pub fn segments_intersect<A: AsEndpoints, B: AsEndpoints>(a: &A, b: &B) -> Result<bool, GeometryError> {
    let a = a.as_endpoints();
    let b = b.as_endpoints();
    check_non_degenerate(a)?;
    check_non_degenerate(b)?;
    Ok(closed_segments_intersect(a.0, a.1, b.0, b.1))
}

/// Unchecked variant used on hot paths where segments are known valid.
#[inline]
pub fn closed_segments_intersect(p1: Point2, q1: Point2, p2: Point2, q2: Point2) -> bool {
    // bounding-box rejection first; most candidate pairs fail here
    if p1.x.max(q1.x) < p2.x.min(q2.x)
        || p2.x.max(q2.x) < p1.x.min(q1.x)
        || p1.y.max(q1.y) < p2.y.min(q2.y)
        || p2.y.max(q2.y) < p1.y.min(q1.y)
    {
        return false;
    }
    let o1 = sign(orient(p1, q1, p2));
    let o2 = sign(orient(p1, q1, q2));
    let o3 = sign(orient(p2, q2, p1));
    let o4 = sign(orient(p2, q2, q1));
    if o1 != o2 && o3 != o4 {
        return true;
    }
    // collinear cases: the bounding boxes already overlap
    (o1 == 0 && on_segment(p1, q1, p2))
        || (o2 == 0 && on_segment(p1, q1, q2))
        || (o3 == 0 && on_segment(p2, q2, p1))
        || (o4 == 0 && on_segment(p2, q2, q1))
}

#[inline]
fn on_segment(p: Point2, q: Point2, r: Point2) -> bool {
    r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
}

/// Side of the infinite host line on which `p` lies: `+1` left of the
/// direction `e1 -> e2`, `-1` right of it, `0` on the line.
pub fn side_of_line(p: Point2, host: &Segment) -> i8 {
    let (e1, e2) = host.endpoints();
    sign(orient(e1, e2, p))
}

/// Axis-aligned measurement window plus a guard band used for sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub guard_margin: f64,
}

impl Window {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64, guard_margin: f64) -> Result<Self, GeometryError> {
        let w = Self {
            x_min,
            x_max,
            y_min,
            y_max,
            guard_margin,
        };
        w.validate()?;
        Ok(w)
    }

    /// Square of side `side` centred on the origin.
    pub fn centered_square(side: f64, guard_margin: f64) -> Result<Self, GeometryError> {
        let h = side / 2.0;
        Self::new(-h, h, -h, h, guard_margin)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let vals = [self.x_min, self.x_max, self.y_min, self.y_max, self.guard_margin];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::InvalidWindow("non-finite bound".into()));
        }
        if self.x_max <= self.x_min || self.y_max <= self.y_min {
            return Err(GeometryError::InvalidWindow(format!(
                "empty extent [{}, {}] x [{}, {}]",
                self.x_min, self.x_max, self.y_min, self.y_max
            )));
        }
        if self.guard_margin < 0.0 {
            return Err(GeometryError::InvalidWindow(format!(
                "negative guard margin {}",
                self.guard_margin
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point2 {
        Point2::new(0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))
    }

    /// The sampling region: the window grown by the guard margin on every side.
    pub fn expanded(&self) -> Window {
        let g = self.guard_margin;
        Window {
            x_min: self.x_min - g,
            x_max: self.x_max + g,
            y_min: self.y_min - g,
            y_max: self.y_max + g,
            guard_margin: 0.0,
        }
    }

    pub fn expanded_area(&self) -> f64 {
        self.expanded().area()
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn with_guard(&self, guard_margin: f64) -> Window {
        Window { guard_margin, ..*self }
    }
}

/// Draws a homogeneous Poisson point process over the expanded window.
/// `density` is in points per square meter.
pub fn sample_ppp<R: Rng + ?Sized>(density: f64, window: &Window, rng: &mut R) -> Result<Vec<Point2>, GeometryError> {
    if !(density.is_finite() && density >= 0.0) {
        return Err(GeometryError::NegativeDensity(density));
    }
    window.validate()?;
    let region = window.expanded();
    let count = poisson_count(density * region.area(), rng);
    Ok((0..count)
        .map(|_| {
            Point2::new(
                rng.random_range(region.x_min..region.x_max),
                rng.random_range(region.y_min..region.y_max),
            )
        })
        .collect())
}

/// Poisson variate with the given mean; zero mean yields zero.
pub fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let draw: f64 = Poisson::new(mean)
        .expect("finite positive mean is a valid Poisson parameter")
        .sample(rng);
    draw as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    #[test]
    fn crossing_segments_intersect() {
        assert!(segments_intersect(&(p(0.0, 0.0), p(2.0, 0.0)), &(p(1.0, -1.0), p(1.0, 1.0))).unwrap());
    }

    #[test]
    fn disjoint_parallels_do_not_intersect() {
        assert!(!segments_intersect(&(p(0.0, 0.0), p(1.0, 0.0)), &(p(0.0, 1.0), p(1.0, 1.0))).unwrap());
    }

    #[test]
    fn shared_endpoint_counts() {
        assert!(segments_intersect(&(p(0.0, 0.0), p(1.0, 1.0)), &(p(1.0, 1.0), p(2.0, 0.0))).unwrap());
    }

    #[test]
    fn collinear_overlap_counts_and_collinear_gap_does_not() {
        assert!(segments_intersect(&(p(0.0, 0.0), p(2.0, 0.0)), &(p(1.0, 0.0), p(3.0, 0.0))).unwrap());
        assert!(!segments_intersect(&(p(0.0, 0.0), p(1.0, 0.0)), &(p(2.0, 0.0), p(3.0, 0.0))).unwrap());
    }

    #[test]
    fn degenerate_segment_is_rejected() {
        let err = segments_intersect(&(p(1.0, 1.0), p(1.0, 1.0)), &(p(0.0, 0.0), p(2.0, 2.0)));
        assert!(matches!(err, Err(GeometryError::DegenerateSegment { .. })));
    }

    #[test]
    fn segment_constructor_rejects_zero_length() {
        assert!(Segment::new(p(0.0, 0.0), 0.0, 0.0).is_err());
        assert!(Segment::new(p(0.0, 0.0), f64::NAN, 0.0).is_err());
    }

    #[test]
    fn segment_form_and_endpoint_form_agree() {
        let s = Segment::new(p(1.0, 0.0), 1.0, 0.0).unwrap();
        let (e1, e2) = s.endpoints();
        assert!((e1.x - 0.0).abs() < 1e-15 && (e2.x - 2.0).abs() < 1e-15);
        assert!(segments_intersect(&s, &(p(1.0, -1.0), p(1.0, 1.0))).unwrap());
    }

    #[test]
    fn side_of_line_examples() {
        let host = Segment::new(p(0.0, 0.0), 1.0, 0.0).unwrap();
        assert_eq!(side_of_line(p(0.0, 1.0), &host), 1);
        assert_eq!(side_of_line(p(0.0, -1.0), &host), -1);
        assert_eq!(side_of_line(p(5.0, 0.0), &host), 0);
    }

    #[test]
    fn side_flips_with_host_direction() {
        let fwd = Segment::new(p(0.0, 0.0), 1.0, 0.3).unwrap();
        let back = Segment::new(p(0.0, 0.0), 1.0, 0.3 + std::f64::consts::PI).unwrap();
        let q = p(0.2, 3.0);
        assert_eq!(side_of_line(q, &fwd), -side_of_line(q, &back));
    }

    #[test]
    fn window_validation() {
        assert!(Window::new(0.0, 0.0, 0.0, 1.0, 0.0).is_err());
        assert!(Window::new(0.0, 1.0, 0.0, 1.0, -1.0).is_err());
        let w = Window::centered_square(1000.0, 100.0).unwrap();
        assert_eq!(w.expanded_area(), 1200.0 * 1200.0);
        assert_eq!(w.center(), p(0.0, 0.0));
    }

    #[test]
    fn ppp_zero_density_is_empty() {
        let w = Window::centered_square(1000.0, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_ppp(0.0, &w, &mut rng).unwrap().is_empty());
    }

    #[test]
    fn ppp_rejects_negative_density() {
        let w = Window::centered_square(1000.0, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            sample_ppp(-1.0, &w, &mut rng),
            Err(GeometryError::NegativeDensity(_))
        ));
    }

    #[test]
    fn ppp_is_deterministic_per_seed() {
        let w = Window::centered_square(1000.0, 50.0).unwrap();
        let a = sample_ppp(1e-4, &w, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let b = sample_ppp(1e-4, &w, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|q| w.expanded().contains(*q)));
    }

    #[test]
    fn ppp_count_mean_and_variance() {
        // Poisson(10): the mean of 1e4 draws has sd 0.0316, so a 3σ band is
        // [9.905, 10.095]; the coarser band [9.4, 10.6] must hold as well.
        let w = Window::centered_square(1000.0, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 10_000;
        let counts: Vec<f64> = (0..n)
            .map(|_| sample_ppp(1e-5, &w, &mut rng).unwrap().len() as f64)
            .collect();
        let mean = counts.iter().sum::<f64>() / n as f64;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        assert!((9.4..=10.6).contains(&mean), "mean {mean}");
        assert!((mean - 10.0).abs() < 3.0 * (10.0f64 / n as f64).sqrt(), "mean {mean}");
        // sd of the sample variance for Poisson(10) ≈ sqrt((μ + 2μ²)/n) ≈ 0.145
        assert!((var - 10.0).abs() < 3.0 * 0.145, "var {var}");
    }

    fn arb_point() -> impl Strategy<Value = Point2> {
        (-100.0f64..100.0, -100.0f64..100.0).prop_map(|(x, y)| Point2::new(x, y))
    }

    proptest! {
        #[test]
        fn intersection_is_symmetric(a in arb_point(), b in arb_point(), c in arb_point(), d in arb_point()) {
            prop_assume!(a != b && c != d);
            let ab = (a, b);
            let cd = (c, d);
            prop_assert_eq!(segments_intersect(&ab, &cd).unwrap(), segments_intersect(&cd, &ab).unwrap());
            prop_assert_eq!(segments_intersect(&ab, &cd).unwrap(), segments_intersect(&(b, a), &cd).unwrap());
        }

        #[test]
        fn reflection_flips_side(mx in -50.0f64..50.0, my in -50.0f64..50.0, ang in 0.0f64..std::f64::consts::TAU, q in arb_point()) {
            let host = Segment::new(Point2::new(mx, my), 5.0, ang).unwrap();
            let (e1, e2) = host.endpoints();
            let dx = e2.x - e1.x;
            let dy = e2.y - e1.y;
            let len2 = dx * dx + dy * dy;
            let t = ((q.x - e1.x) * dx + (q.y - e1.y) * dy) / len2;
            let foot = Point2::new(e1.x + t * dx, e1.y + t * dy);
            let mirrored = Point2::new(2.0 * foot.x - q.x, 2.0 * foot.y - q.y);
            // skip points too close to the line for the mirror image to keep its sign
            prop_assume!(orient(e1, e2, q).abs() > 1e-6 * len2.sqrt());
            prop_assert_eq!(side_of_line(q, &host), -side_of_line(mirrored, &host));
        }
    }
}
