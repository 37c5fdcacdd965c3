//! Static stability and the inverted-pendulum ZMP.
//!
//! A pose is statically stable when the ground projection of its center of
//! mass lies inside (or on) the support polygon, the convex hull of the sole
//! corners of every foot in contact.

use nalgebra::{Point2, Point3};
use thiserror::Error;

use crate::model::{center_of_mass, BipedGeometry, BodyPose, Leg, ModelError};

/// Tolerance for collinearity and half-plane tests.
pub const GEOMETRY_EPS: f64 = 1e-12;

pub const STANDARD_GRAVITY: f64 = 9.81;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StabilityError {
    #[error("no support: no foot is in contact")]
    NoSupport,
    #[error("degenerate support polygon ({0} distinct hull vertices)")]
    Degenerate(usize),
    #[error("polygon vertices are not strictly convex and counterclockwise")]
    NotConvex,
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("pendulum parameter {0} must be positive")]
    NonPositive(&'static str),
    #[error("need at least 3 samples, got {0}")]
    TooFewSamples(usize),
    #[error("timestamps must be strictly increasing and uniformly spaced (frame {index})")]
    NonUniformTimestamps { index: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Which feet touch the ground.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Contacts {
    pub right: bool,
    pub left: bool,
}

impl Contacts {
    pub const DOUBLE: Contacts = Contacts {
        right: true,
        left: true,
    };

    pub fn single(leg: Leg) -> Contacts {
        Contacts {
            right: leg == Leg::Right,
            left: leg == Leg::Left,
        }
    }
}

fn cross(o: &Point2<f64>, a: &Point2<f64>, b: &Point2<f64>) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Convex, counterclockwise polygon with at least three vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportPolygon {
    vertices: Vec<Point2<f64>>,
}

impl SupportPolygon {
    /// Accepts an explicit vertex list, checking convexity and orientation.
    pub fn new(vertices: Vec<Point2<f64>>) -> Result<Self, StabilityError> {
        let n = vertices.len();
        if n < 3 {
            return Err(StabilityError::Degenerate(n));
        }
        if vertices
            .iter()
            .any(|v| !(v.x.is_finite() && v.y.is_finite()))
        {
            return Err(StabilityError::NonFinite("polygon vertex"));
        }
        for i in 0..n {
            let (a, b, c) = (&vertices[i], &vertices[(i + 1) % n], &vertices[(i + 2) % n]);
            if cross(a, b, c) <= GEOMETRY_EPS {
                return Err(StabilityError::NotConvex);
            }
        }
        Ok(Self { vertices })
    }

    /// Convex hull (monotone chain). Duplicate and collinear points are
    /// dropped; points are ordered lexicographically by (x, y) first.
    pub fn hull<I: IntoIterator<Item = Point2<f64>>>(points: I) -> Result<Self, StabilityError> {
        let mut pts: Vec<Point2<f64>> = points.into_iter().collect();
        if pts.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(StabilityError::NonFinite("hull point"));
        }
        pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        pts.dedup();
        if pts.len() < 3 {
            return Err(StabilityError::Degenerate(pts.len()));
        }
        let mut hull: Vec<Point2<f64>> = Vec::with_capacity(2 * pts.len());
        for pass in 0..2 {
            let start = hull.len();
            let iter: Box<dyn Iterator<Item = &Point2<f64>>> = if pass == 0 {
                Box::new(pts.iter())
            } else {
                Box::new(pts.iter().rev())
            };
            for p in iter {
                while hull.len() >= start + 2
                    && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= GEOMETRY_EPS
                {
                    hull.pop();
                }
                hull.push(*p);
            }
            // last point of each chain starts the other one
            hull.pop();
        }
        if hull.len() < 3 {
            return Err(StabilityError::Degenerate(hull.len()));
        }
        Ok(Self { vertices: hull })
    }

    pub fn vertices(&self) -> &[Point2<f64>] {
        &self.vertices
    }

    fn edges(&self) -> impl Iterator<Item = (&Point2<f64>, &Point2<f64>)> {
        let n = self.vertices.len();
        (0..n).map(move |i| (&self.vertices[i], &self.vertices[(i + 1) % n]))
    }

    /// Closed-set membership: boundary points are inside.
    pub fn contains(&self, p: &Point2<f64>) -> bool {
        self.edges().all(|(a, b)| {
            let edge_len = (b - a).norm();
            cross(a, b, p) >= -GEOMETRY_EPS * edge_len
        })
    }

    /// Signed distance to the boundary: positive inside, negative outside.
    pub fn static_margin(&self, p: &Point2<f64>) -> f64 {
        let distance = self
            .edges()
            .map(|(a, b)| segment_distance(a, b, p))
            .fold(f64::INFINITY, f64::min);
        if self.contains(p) {
            distance
        } else {
            -distance
        }
    }
}

fn segment_distance(a: &Point2<f64>, b: &Point2<f64>, p: &Point2<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = (p - a).dot(&ab);
    if len2 == 0.0 || t <= 0.0 {
        (p - a).norm()
    } else if t >= len2 {
        (p - b).norm()
    } else {
        // perpendicular distance; exactly zero for points on the edge line
        cross(a, b, p).abs() / len2.sqrt()
    }
}

/// Hull of the ground projections of the sole corners of contacting feet.
pub fn support_polygon(
    pose: &BodyPose,
    contacts: Contacts,
) -> Result<SupportPolygon, StabilityError> {
    let mut corners = Vec::with_capacity(8);
    for (leg, touching) in [(Leg::Right, contacts.right), (Leg::Left, contacts.left)] {
        if touching {
            corners.extend(
                pose.leg(leg)
                    .sole_corners
                    .iter()
                    .map(|c| Point2::new(c.x, c.y)),
            );
        }
    }
    if corners.is_empty() {
        return Err(StabilityError::NoSupport);
    }
    SupportPolygon::hull(corners)
}

/// Single-mass inverted pendulum. `theta`/`theta_ddot` drive the torque
/// equation, `y_mc`/`y_mc_ddot` the ZMP equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendulumState {
    pub m: f64,
    pub l: f64,
    pub g: f64,
    pub theta: f64,
    pub theta_ddot: f64,
    pub y_mc: f64,
    pub y_mc_ddot: f64,
}

impl PendulumState {
    /// Builds a state from the COM displacement, with l·θ = y_mc and
    /// l·θ̈ = ÿ_mc.
    pub fn from_com(m: f64, l: f64, g: f64, y_mc: f64, y_mc_ddot: f64) -> Self {
        Self {
            m,
            l,
            g,
            theta: y_mc / l,
            theta_ddot: y_mc_ddot / l,
            y_mc,
            y_mc_ddot,
        }
    }

    fn validate(&self) -> Result<(), StabilityError> {
        let fields = [
            ("m", self.m),
            ("l", self.l),
            ("g", self.g),
            ("theta", self.theta),
            ("theta_ddot", self.theta_ddot),
            ("y_mc", self.y_mc),
            ("y_mc_ddot", self.y_mc_ddot),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(StabilityError::NonFinite(name));
            }
        }
        for (name, v) in [("m", self.m), ("l", self.l), ("g", self.g)] {
            if v <= 0.0 {
                return Err(StabilityError::NonPositive(name));
            }
        }
        Ok(())
    }

    /// Vertical ground reaction, F_z = m·g.
    pub fn vertical_force(&self) -> f64 {
        self.m * self.g
    }

    /// T / F_z, which equals the ZMP when θ·l = y_mc and θ̈·l = ÿ_mc.
    pub fn torque_over_force(&self) -> Result<f64, StabilityError> {
        Ok(pendulum_torque(self)? / self.vertical_force())
    }
}

/// T = m·g·l·θ − m·l²·θ̈
pub fn pendulum_torque(s: &PendulumState) -> Result<f64, StabilityError> {
    s.validate()?;
    Ok(s.m * s.g * s.l * s.theta - s.m * s.l * s.l * s.theta_ddot)
}

/// Y_zmp = Y_mc − (l/g)·Ÿ_mc. Axis-agnostic: pass x quantities for the
/// sagittal analogue.
pub fn zmp(y_mc: f64, y_mc_ddot: f64, l: f64, g: f64) -> Result<f64, StabilityError> {
    for (name, v) in [("y_mc", y_mc), ("y_mc_ddot", y_mc_ddot), ("l", l), ("g", g)] {
        if !v.is_finite() {
            return Err(StabilityError::NonFinite(name));
        }
    }
    if l <= 0.0 {
        return Err(StabilityError::NonPositive("l"));
    }
    if g <= 0.0 {
        return Err(StabilityError::NonPositive("g"));
    }
    Ok(y_mc - (l / g) * y_mc_ddot)
}

/// Per-frame stability report row.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilitySample {
    pub t_ms: u64,
    pub com_xy: Point2<f64>,
    pub com_z: f64,
    pub polygon: SupportPolygon,
    pub margin_m: f64,
    pub y_mc_ddot: f64,
    pub y_zmp: f64,
}

impl StabilitySample {
    pub fn is_stable(&self) -> bool {
        self.margin_m >= 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoseSample {
    pub t_ms: u64,
    pub pose: BodyPose,
    pub contacts: Contacts,
}

/// Second derivative of a uniformly sampled series. Interior points use
/// central differences, endpoints the nearest three-point stencil; both are
/// exact for quadratics.
pub fn second_difference(values: &[f64], dt: f64) -> Vec<f64> {
    let n = values.len();
    let stencil = |i: usize| {
        let (a, b, c) = (values[i - 1], values[i], values[i + 1]);
        ((c - b) - (b - a)) / (dt * dt)
    };
    (0..n)
        .map(|i| match i {
            0 => stencil(1),
            i if i == n - 1 => stencil(n - 2),
            i => stencil(i),
        })
        .collect()
}

/// COM, support margin and lateral ZMP for every frame. The pendulum length
/// is the frame's COM height above the ground.
pub fn analyze_trajectory(
    samples: &[PoseSample],
    geom: &BipedGeometry,
) -> Result<Vec<StabilitySample>, StabilityError> {
    if samples.len() < 3 {
        return Err(StabilityError::TooFewSamples(samples.len()));
    }
    let period = samples[1].t_ms.saturating_sub(samples[0].t_ms);
    if period == 0 {
        return Err(StabilityError::NonUniformTimestamps { index: 1 });
    }
    for (i, w) in samples.windows(2).enumerate() {
        if w[1].t_ms.checked_sub(w[0].t_ms) != Some(period) {
            return Err(StabilityError::NonUniformTimestamps { index: i + 1 });
        }
    }
    let dt = period as f64 / 1000.0;

    let coms: Vec<Point3<f64>> = samples
        .iter()
        .map(|s| center_of_mass(geom, &s.pose).map(|c| c.xyz))
        .collect::<Result<_, _>>()?;
    let ys: Vec<f64> = coms.iter().map(|c| c.y).collect();
    let accel = second_difference(&ys, dt);

    samples
        .iter()
        .zip(coms.iter().zip(accel))
        .map(|(s, (com, y_ddot))| {
            let polygon = support_polygon(&s.pose, s.contacts)?;
            let com_xy = Point2::new(com.x, com.y);
            let margin_m = polygon.static_margin(&com_xy);
            let y_zmp = zmp(com.y, y_ddot, com.z, STANDARD_GRAVITY)?;
            Ok(StabilitySample {
                t_ms: s.t_ms,
                com_xy,
                com_z: com.z,
                polygon,
                margin_m,
                y_mc_ddot: y_ddot,
                y_zmp,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{forward_kinematics, JointVector};

    fn square() -> SupportPolygon {
        SupportPolygon::hull([
            Point2::new(-0.5, -0.5),
            Point2::new(0.5, -0.5),
            Point2::new(0.5, 0.5),
            Point2::new(-0.5, 0.5),
        ])
        .unwrap()
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
    }

    #[test]
    fn square_margin_and_contains() {
        let sq = square();
        assert_eq!(sq.static_margin(&Point2::origin()), 0.5);
        assert!(sq.contains(&Point2::origin()));
        assert_eq!(sq.static_margin(&Point2::new(0.5, 0.1)), 0.0);
        assert!(sq.contains(&Point2::new(0.5, 0.1)));
        assert!(!sq.contains(&Point2::new(1.5, 0.0)));
        assert_eq!(sq.static_margin(&Point2::new(1.5, 0.0)), -1.0);
    }

    #[test]
    fn hull_removes_collinear_and_duplicates() {
        let pts = [
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.5, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
            Point2::new(0.0, 1.0),
            Point2::new(0.5, 0.5),
        ];
        let hull = SupportPolygon::hull(pts).unwrap();
        assert_eq!(hull.vertices().len(), 4);
        assert_eq!(hull.vertices()[0], Point2::new(0.0, 0.0));
        // counterclockwise
        assert_eq!(hull.vertices()[1], Point2::new(1.0, 0.0));
    }

    #[test]
    fn degenerate_hulls_fail() {
        assert_eq!(
            SupportPolygon::hull([Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)]),
            Err(StabilityError::Degenerate(2))
        );
        assert!(SupportPolygon::hull([
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(2.0, 2.0)
        ])
        .is_err());
    }

    #[test]
    fn explicit_polygon_must_be_ccw() {
        let cw = vec![
            Point2::new(0.0, 0.0),
            Point2::new(0.0, 1.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 0.0),
        ];
        assert_eq!(SupportPolygon::new(cw), Err(StabilityError::NotConvex));
    }

    #[test]
    fn support_polygon_of_feet() {
        let g = BipedGeometry::default();
        let pose = forward_kinematics(&g, &JointVector::zeros()).unwrap();
        let one = support_polygon(&pose, Contacts::single(Leg::Right)).unwrap();
        assert_eq!(one.vertices().len(), 4);
        let both = support_polygon(&pose, Contacts::DOUBLE).unwrap();
        assert_eq!(both.vertices().len(), 4);
        for c in pose
            .right
            .sole_corners
            .iter()
            .chain(&pose.left.sole_corners)
        {
            assert!(both.contains(&Point2::new(c.x, c.y)));
        }
        let none = Contacts {
            right: false,
            left: false,
        };
        assert_eq!(support_polygon(&pose, none), Err(StabilityError::NoSupport));
    }

    #[test]
    fn coincident_feet_give_one_rectangle() {
        let rect = [
            Point2::new(0.0, 0.0),
            Point2::new(0.1, 0.0),
            Point2::new(0.1, 0.06),
            Point2::new(0.0, 0.06),
        ];
        let hull = SupportPolygon::hull(rect.iter().chain(rect.iter()).copied()).unwrap();
        assert_eq!(hull.vertices().len(), 4);
    }

    #[test]
    fn torque_examples() {
        let s = |theta, theta_ddot| PendulumState {
            m: 1.0,
            l: 0.3,
            g: 9.81,
            theta,
            theta_ddot,
            y_mc: 0.0,
            y_mc_ddot: 0.0,
        };
        assert_eq!(pendulum_torque(&s(0.0, 0.0)).unwrap(), 0.0);
        assert!(rel_close(
            pendulum_torque(&s(0.1, 0.0)).unwrap(),
            0.2943,
            1e-12
        ));
        assert!(rel_close(
            pendulum_torque(&s(0.0, 1.0)).unwrap(),
            -0.09,
            1e-12
        ));
        assert!(pendulum_torque(&s(f64::NAN, 0.0)).is_err());
        let mut bad = s(0.0, 0.0);
        bad.l = 0.0;
        assert_eq!(pendulum_torque(&bad), Err(StabilityError::NonPositive("l")));
    }

    #[test]
    fn zmp_examples() {
        assert_eq!(zmp(0.03, 0.0, 0.3, 9.81).unwrap(), 0.03);
        assert_eq!(zmp(0.0, 0.0, 0.3, 9.81).unwrap(), 0.0);
        assert!(rel_close(
            zmp(0.05, 0.2, 0.3, 9.81).unwrap(),
            0.05 - 0.3 * 0.2 / 9.81,
            1e-12
        ));
        assert!(rel_close(
            zmp(0.05, 0.2, 0.3, 9.81).unwrap(),
            0.0438837920489297,
            1e-12
        ));
        assert!(zmp(f64::INFINITY, 0.0, 0.3, 9.81).is_err());
        assert!(zmp(0.0, 0.0, -0.3, 9.81).is_err());
    }

    #[test]
    fn torque_over_force_is_zmp() {
        let s = PendulumState::from_com(2.0, 0.25, 9.81, 0.04, -1.3);
        let lhs = s.torque_over_force().unwrap();
        let rhs = zmp(0.04, -1.3, 0.25, 9.81).unwrap();
        assert!(rel_close(lhs, rhs, 1e-12));
    }

    #[test]
    fn second_difference_is_exact_on_quadratics() {
        let a = 0.7;
        let dt = 0.02;
        let ys: Vec<f64> = (0..10).map(|i| a * (i as f64 * dt).powi(2)).collect();
        for v in second_difference(&ys, dt) {
            assert!(rel_close(v, 2.0 * a, 1e-9), "{v}");
        }
    }

    #[test]
    fn analyze_rejects_bad_sequences() {
        let g = BipedGeometry::default();
        let pose = forward_kinematics(&g, &JointVector::zeros()).unwrap();
        let mk = |t| PoseSample {
            t_ms: t,
            pose,
            contacts: Contacts::DOUBLE,
        };
        assert_eq!(
            analyze_trajectory(&[mk(0), mk(20)], &g),
            Err(StabilityError::TooFewSamples(2))
        );
        assert_eq!(
            analyze_trajectory(&[mk(0), mk(20), mk(60)], &g),
            Err(StabilityError::NonUniformTimestamps { index: 2 })
        );
        assert!(analyze_trajectory(&[mk(0), mk(0), mk(0)], &g).is_err());
    }

    #[test]
    fn constant_erect_sequence_is_static_and_stable() {
        let g = BipedGeometry::default();
        let pose = forward_kinematics(&g, &JointVector::zeros()).unwrap();
        let samples: Vec<PoseSample> = (0..5)
            .map(|k| PoseSample {
                t_ms: 20 * k,
                pose,
                contacts: Contacts::DOUBLE,
            })
            .collect();
        for s in analyze_trajectory(&samples, &g).unwrap() {
            assert_eq!(s.y_mc_ddot, 0.0);
            assert_eq!(s.y_zmp, s.com_xy.y);
            assert!(s.margin_m > 0.0);
        }
    }
}
