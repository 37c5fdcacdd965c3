//! Geometric and mass model of the 10-DOF biped.
//!
//! Each leg is a serial chain of five revolute joints:
//!
//! | joint | axis  | motion                         |
//! |-------|-------|--------------------------------|
//! | J1    | roll  | hip abduction / adduction      |
//! | J2    | pitch | hip flexion / extension        |
//! | J3    | pitch | knee                           |
//! | J4    | pitch | ankle plantar / dorsiflexion   |
//! | J5    | roll  | ankle eversion / inversion     |
//!
//! The ground frame has x forward, y to the robot's left and z up. Roll joints
//! rotate about +x. Pitch joints are signed so that a positive angle swings the
//! distal link toward +x.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Point3, Rotation3, Vector3};
use thiserror::Error;

pub const JOINT_COUNT: usize = 10;

/// Reachable joint span under the default servo mapping.
pub const JOINT_LIMIT_RAD: f64 = std::f64::consts::FRAC_PI_2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("joint {joint} angle is not finite")]
    NonFiniteAngle { joint: JointId },
    #[error("joint {joint} angle {angle} rad outside [-pi/2, pi/2]")]
    AngleOutOfRange { joint: JointId, angle: f64 },
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("total mass is zero")]
    ZeroMass,
    #[error("geometry config line {line}: {message}")]
    Config { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Leg {
    Right,
    Left,
}

impl Leg {
    pub fn opposite(self) -> Leg {
        match self {
            Leg::Right => Leg::Left,
            Leg::Left => Leg::Right,
        }
    }

    /// Sign of the lateral (y) direction pointing away from the body.
    pub fn lateral_sign(self) -> f64 {
        match self {
            Leg::Right => -1.0,
            Leg::Left => 1.0,
        }
    }
}

/// One of the ten servo joints, in `JointVector` order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum JointId {
    RJ1,
    RJ2,
    RJ3,
    RJ4,
    RJ5,
    LJ1,
    LJ2,
    LJ3,
    LJ4,
    LJ5,
}

impl JointId {
    pub const ALL: [JointId; JOINT_COUNT] = [
        JointId::RJ1,
        JointId::RJ2,
        JointId::RJ3,
        JointId::RJ4,
        JointId::RJ5,
        JointId::LJ1,
        JointId::LJ2,
        JointId::LJ3,
        JointId::LJ4,
        JointId::LJ5,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<JointId> {
        Self::ALL.get(index).copied()
    }

    pub fn leg(self) -> Leg {
        if self.index() < 5 {
            Leg::Right
        } else {
            Leg::Left
        }
    }

    /// Position along the leg chain, 1 (hip roll) to 5 (ankle roll).
    pub fn chain_position(self) -> usize {
        self.index() % 5 + 1
    }

    /// J1 and J5 act in the frontal plane.
    pub fn is_roll(self) -> bool {
        matches!(self.chain_position(), 1 | 5)
    }

    /// The same chain position on the other leg.
    pub fn mirrored(self) -> JointId {
        Self::ALL[(self.index() + 5) % JOINT_COUNT]
    }

    pub fn name(self) -> &'static str {
        match self {
            JointId::RJ1 => "RJ1",
            JointId::RJ2 => "RJ2",
            JointId::RJ3 => "RJ3",
            JointId::RJ4 => "RJ4",
            JointId::RJ5 => "RJ5",
            JointId::LJ1 => "LJ1",
            JointId::LJ2 => "LJ2",
            JointId::LJ3 => "LJ3",
            JointId::LJ4 => "LJ4",
            JointId::LJ5 => "LJ5",
        }
    }
}

impl fmt::Display for JointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown joint id `{0}`")]
pub struct UnknownJoint(pub String);

impl FromStr for JointId {
    type Err = UnknownJoint;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|j| j.name() == s)
            .ok_or_else(|| UnknownJoint(s.to_string()))
    }
}

/// The ten joint angles in radians, ordered RJ1..RJ5, LJ1..LJ5.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointVector([f64; JOINT_COUNT]);

impl JointVector {
    pub fn new(angles: [f64; JOINT_COUNT]) -> Result<Self, ModelError> {
        for (joint, &angle) in JointId::ALL.iter().zip(angles.iter()) {
            if !angle.is_finite() {
                return Err(ModelError::NonFiniteAngle { joint: *joint });
            }
            if angle.abs() > JOINT_LIMIT_RAD {
                return Err(ModelError::AngleOutOfRange {
                    joint: *joint,
                    angle,
                });
            }
        }
        Ok(Self(angles))
    }

    pub fn zeros() -> Self {
        Self([0.0; JOINT_COUNT])
    }

    pub fn get(&self, joint: JointId) -> f64 {
        self.0[joint.index()]
    }

    pub fn as_array(&self) -> &[f64; JOINT_COUNT] {
        &self.0
    }

    fn leg(&self, leg: Leg) -> [f64; 5] {
        let offset = match leg {
            Leg::Right => 0,
            Leg::Left => 5,
        };
        let mut out = [0.0; 5];
        out.copy_from_slice(&self.0[offset..offset + 5]);
        out
    }
}

/// Swaps the right and left joint blocks and negates the roll joints (J1, J5).
pub fn mirror_joints(joints: &JointVector) -> JointVector {
    let mut out = [0.0; JOINT_COUNT];
    for joint in JointId::ALL {
        let angle = joints.get(joint);
        out[joint.mirrored().index()] = if joint.is_roll() { -angle } else { angle };
    }
    JointVector(out)
}

/// Per-link masses in kilograms. Thigh, shin and foot masses apply to each leg.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkMasses {
    pub pelvis: f64,
    pub thigh: f64,
    pub shin: f64,
    pub foot: f64,
}

impl LinkMasses {
    pub fn total(&self) -> f64 {
        self.pelvis + 2.0 * (self.thigh + self.shin + self.foot)
    }
}

impl Default for LinkMasses {
    fn default() -> Self {
        Self {
            pelvis: 0.30,
            thigh: 0.12,
            shin: 0.12,
            foot: 0.06,
        }
    }
}

/// Link lengths, sole dimensions and masses, SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BipedGeometry {
    /// Pelvis center to hip joint.
    pub hip_half_width: f64,
    pub thigh_len: f64,
    pub shin_len: f64,
    /// Ankle axis to the sole plane.
    pub ankle_height: f64,
    pub sole_length: f64,
    pub sole_width: f64,
    pub link_masses: LinkMasses,
}

impl Default for BipedGeometry {
    fn default() -> Self {
        Self {
            hip_half_width: 0.035,
            thigh_len: 0.085,
            shin_len: 0.085,
            ankle_height: 0.035,
            sole_length: 0.10,
            sole_width: 0.06,
            link_masses: LinkMasses::default(),
        }
    }
}

impl BipedGeometry {
    pub fn validate(&self) -> Result<(), ModelError> {
        let lengths = [
            ("hip_half_width", self.hip_half_width),
            ("thigh_len", self.thigh_len),
            ("shin_len", self.shin_len),
            ("ankle_height", self.ankle_height),
            ("sole_length", self.sole_length),
            ("sole_width", self.sole_width),
        ];
        for (name, value) in lengths {
            if !(value.is_finite() && value > 0.0) {
                return Err(ModelError::InvalidGeometry(format!(
                    "{name} must be a positive length, got {value}"
                )));
            }
        }
        let m = &self.link_masses;
        for (name, value) in [
            ("pelvis", m.pelvis),
            ("thigh", m.thigh),
            ("shin", m.shin),
            ("foot", m.foot),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(ModelError::InvalidGeometry(format!(
                    "{name} mass must be non-negative, got {value}"
                )));
            }
        }
        if m.total() <= 0.0 {
            return Err(ModelError::ZeroMass);
        }
        Ok(())
    }

    /// Sum of every length parameter; a loose bound on how far any pose point
    /// can move per radian of a single joint.
    pub fn total_length(&self) -> f64 {
        self.hip_half_width
            + self.thigh_len
            + self.shin_len
            + self.ankle_height
            + self.sole_length
            + self.sole_width
    }

    /// Parses `key=value` lines. Keys are the field names; `link_masses` takes
    /// `pelvis,thigh,shin,foot`. Missing keys keep their defaults.
    pub fn from_config_str(text: &str) -> Result<Self, ModelError> {
        let mut geom = BipedGeometry::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| ModelError::Config {
                line: line_no,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let number = |v: &str| -> Result<f64, ModelError> {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| err(format!("`{v}` is not a number")))
            };
            match key {
                "hip_half_width" => geom.hip_half_width = number(value)?,
                "thigh_len" => geom.thigh_len = number(value)?,
                "shin_len" => geom.shin_len = number(value)?,
                "ankle_height" => geom.ankle_height = number(value)?,
                "sole_length" => geom.sole_length = number(value)?,
                "sole_width" => geom.sole_width = number(value)?,
                "link_masses" => {
                    let parts: Vec<&str> = value.split(',').collect();
                    if parts.len() != 4 {
                        return Err(err(format!(
                            "link_masses needs 4 values (pelvis,thigh,shin,foot), got {}",
                            parts.len()
                        )));
                    }
                    geom.link_masses = LinkMasses {
                        pelvis: number(parts[0])?,
                        thigh: number(parts[1])?,
                        shin: number(parts[2])?,
                        foot: number(parts[3])?,
                    };
                }
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        geom.validate()?;
        Ok(geom)
    }
}

pub(crate) fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(pos) => &line[..pos],
        None => line,
    }
}

/// Chain points of one leg, in the ground frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegPose {
    pub hip: Point3<f64>,
    pub knee: Point3<f64>,
    pub ankle: Point3<f64>,
    /// Point on the sole plane directly under the ankle along the foot axis.
    pub sole_center: Point3<f64>,
    /// Front-outer, front-inner, back-inner, back-outer.
    pub sole_corners: [Point3<f64>; 4],
}

impl LegPose {
    fn translated(&self, offset: &Vector3<f64>) -> LegPose {
        let mut corners = self.sole_corners;
        for c in corners.iter_mut() {
            *c += offset;
        }
        LegPose {
            hip: self.hip + offset,
            knee: self.knee + offset,
            ankle: self.ankle + offset,
            sole_center: self.sole_center + offset,
            sole_corners: corners,
        }
    }

    pub fn points(&self) -> impl Iterator<Item = &Point3<f64>> {
        [&self.hip, &self.knee, &self.ankle, &self.sole_center]
            .into_iter()
            .chain(self.sole_corners.iter())
    }
}

/// Grounded body pose: lowest sole corner at z = 0, pelvis at x = y = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyPose {
    pub pelvis: Point3<f64>,
    pub right: LegPose,
    pub left: LegPose,
}

impl BodyPose {
    pub fn leg(&self, leg: Leg) -> &LegPose {
        match leg {
            Leg::Right => &self.right,
            Leg::Left => &self.left,
        }
    }

    /// Reflection in the x-z plane. Legs swap sides.
    pub fn reflected(&self) -> BodyPose {
        fn flip(p: &Point3<f64>) -> Point3<f64> {
            Point3::new(p.x, -p.y, p.z)
        }
        fn flip_leg(l: &LegPose) -> LegPose {
            LegPose {
                hip: flip(&l.hip),
                knee: flip(&l.knee),
                ankle: flip(&l.ankle),
                sole_center: flip(&l.sole_center),
                sole_corners: l.sole_corners.map(|c| flip(&c)),
            }
        }
        BodyPose {
            pelvis: flip(&self.pelvis),
            right: flip_leg(&self.left),
            left: flip_leg(&self.right),
        }
    }

    pub fn points(&self) -> impl Iterator<Item = &Point3<f64>> {
        std::iter::once(&self.pelvis)
            .chain(self.right.points())
            .chain(self.left.points())
    }

    /// Largest coordinate-wise distance between matching points.
    pub fn max_distance(&self, other: &BodyPose) -> f64 {
        self.points()
            .zip(other.points())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

fn roll(angle: f64) -> Rotation3<f64> {
    Rotation3::from_axis_angle(&Vector3::x_axis(), angle)
}

fn pitch(angle: f64) -> Rotation3<f64> {
    // about -y: positive angles swing a downward link toward +x
    Rotation3::from_axis_angle(&-Vector3::y_axis(), angle)
}

fn leg_chain(geom: &BipedGeometry, leg: Leg, q: [f64; 5]) -> LegPose {
    let side = leg.lateral_sign();
    let down = |len: f64| Vector3::new(0.0, 0.0, -len);

    let hip = Point3::new(0.0, side * geom.hip_half_width, 0.0);
    let thigh_frame = roll(q[0]) * pitch(q[1]);
    let knee = hip + thigh_frame * down(geom.thigh_len);
    let shin_frame = thigh_frame * pitch(q[2]);
    let ankle = knee + shin_frame * down(geom.shin_len);
    let foot_frame = shin_frame * pitch(q[3]) * roll(q[4]);
    let sole_center = ankle + foot_frame * down(geom.ankle_height);

    let half_l = 0.5 * geom.sole_length;
    let outer = side * 0.5 * geom.sole_width;
    let corner = |dx: f64, dy: f64| sole_center + foot_frame * Vector3::new(dx, dy, 0.0);
    LegPose {
        hip,
        knee,
        ankle,
        sole_center,
        sole_corners: [
            corner(half_l, outer),
            corner(half_l, -outer),
            corner(-half_l, -outer),
            corner(-half_l, outer),
        ],
    }
}

/// Pelvis-rooted forward kinematics, then grounded so the lowest sole corner
/// sits at z = 0.
pub fn forward_kinematics(
    geom: &BipedGeometry,
    joints: &JointVector,
) -> Result<BodyPose, ModelError> {
    geom.validate()?;
    for joint in JointId::ALL {
        if !joints.get(joint).is_finite() {
            return Err(ModelError::NonFiniteAngle { joint });
        }
    }
    let right = leg_chain(geom, Leg::Right, joints.leg(Leg::Right));
    let left = leg_chain(geom, Leg::Left, joints.leg(Leg::Left));
    let lowest = right
        .sole_corners
        .iter()
        .chain(left.sole_corners.iter())
        .map(|c| c.z)
        .fold(f64::INFINITY, f64::min);
    let lift = Vector3::new(0.0, 0.0, -lowest);
    Ok(BodyPose {
        pelvis: Point3::new(0.0, 0.0, -lowest),
        right: right.translated(&lift),
        left: left.translated(&lift),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComPoint {
    pub xyz: Point3<f64>,
    pub total_mass: f64,
}

/// Midpoints of every link: pelvis, then thigh, shin, foot of each leg.
pub fn link_midpoints(pose: &BodyPose) -> [Point3<f64>; 7] {
    let mid = |a: &Point3<f64>, b: &Point3<f64>| nalgebra::center(a, b);
    let r = &pose.right;
    let l = &pose.left;
    [
        mid(&r.hip, &l.hip),
        mid(&r.hip, &r.knee),
        mid(&r.knee, &r.ankle),
        mid(&r.ankle, &r.sole_center),
        mid(&l.hip, &l.knee),
        mid(&l.knee, &l.ankle),
        mid(&l.ankle, &l.sole_center),
    ]
}

/// Mass-weighted mean of the link midpoints.
pub fn center_of_mass(geom: &BipedGeometry, pose: &BodyPose) -> Result<ComPoint, ModelError> {
    let m = &geom.link_masses;
    let total = m.total();
    if total.is_nan() || total <= 0.0 {
        return Err(ModelError::ZeroMass);
    }
    let mids = link_midpoints(pose);
    let leg_sum = |t: &Point3<f64>, s: &Point3<f64>, f: &Point3<f64>| {
        t.coords * m.thigh + s.coords * m.shin + f.coords * m.foot
    };
    // Legs are summed separately so mirrored poses cancel exactly in y.
    let right = leg_sum(&mids[1], &mids[2], &mids[3]);
    let left = leg_sum(&mids[4], &mids[5], &mids[6]);
    let weighted = mids[0].coords * m.pelvis + (right + left);
    Ok(ComPoint {
        xyz: Point3::from(weighted / total),
        total_mass: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn erect_pose_closed_form() {
        let g = BipedGeometry::default();
        let pose = forward_kinematics(&g, &JointVector::zeros()).unwrap();
        assert_eq!(pose.pelvis.z, g.thigh_len + g.shin_len + g.ankle_height);
        assert_eq!(pose.right.hip.y, -g.hip_half_width);
        assert_eq!(pose.left.hip.y, g.hip_half_width);
        for c in pose
            .right
            .sole_corners
            .iter()
            .chain(&pose.left.sole_corners)
        {
            assert_eq!(c.z, 0.0);
        }
    }

    #[test]
    fn knee_right_angle_matches_two_link_trig() {
        let g = BipedGeometry {
            thigh_len: 0.10,
            shin_len: 0.10,
            ..BipedGeometry::default()
        };
        let straight = forward_kinematics(&g, &JointVector::zeros()).unwrap();
        let mut q = [0.0; JOINT_COUNT];
        q[JointId::RJ3.index()] = FRAC_PI_2;
        let bent = forward_kinematics(&g, &JointVector::new(q).unwrap()).unwrap();
        // two-link planar: x = l1 sin q2 + l2 sin(q2 + q3), z = -(l1 cos q2 + l2 cos(q2 + q3))
        let (q2, q3) = (0.0_f64, FRAC_PI_2);
        let dx = 0.10 * q2.sin() + 0.10 * (q2 + q3).sin();
        let dz = -(0.10 * q2.cos() + 0.10 * (q2 + q3).cos());
        let rel_bent = bent.right.ankle - bent.right.hip;
        let rel_straight = straight.right.ankle - straight.right.hip;
        assert_close(rel_bent.x, dx, 1e-12);
        assert_close(rel_bent.z, dz, 1e-12);
        assert_close(rel_bent.x - rel_straight.x, 0.10, 1e-12);
        assert_close(rel_bent.z - rel_straight.z, 0.10, 1e-12);
    }

    #[test]
    fn mirror_rules() {
        assert_eq!(mirror_joints(&JointVector::zeros()), JointVector::zeros());
        let mut q = [0.0; JOINT_COUNT];
        q[JointId::RJ1.index()] = 0.1;
        let m = mirror_joints(&JointVector::new(q).unwrap());
        let mut expected = [0.0; JOINT_COUNT];
        expected[JointId::LJ1.index()] = -0.1;
        assert_eq!(m.as_array(), &expected);
    }

    #[test]
    fn rejects_bad_angles() {
        let mut q = [0.0; JOINT_COUNT];
        q[3] = f64::NAN;
        assert_eq!(
            JointVector::new(q),
            Err(ModelError::NonFiniteAngle {
                joint: JointId::RJ4
            })
        );
        q[3] = 2.0;
        assert!(matches!(
            JointVector::new(q),
            Err(ModelError::AngleOutOfRange { .. })
        ));
    }

    #[test]
    fn com_of_erect_pose_is_centered() {
        let g = BipedGeometry::default();
        let pose = forward_kinematics(&g, &JointVector::zeros()).unwrap();
        let com = center_of_mass(&g, &pose).unwrap();
        assert_eq!(com.xyz.y, 0.0);
        assert_close(com.total_mass, 0.30 + 2.0 * (0.12 + 0.12 + 0.06), 1e-15);
    }

    #[test]
    fn com_with_all_mass_in_pelvis() {
        let g = BipedGeometry {
            link_masses: LinkMasses {
                pelvis: 1.0,
                thigh: 0.0,
                shin: 0.0,
                foot: 0.0,
            },
            ..BipedGeometry::default()
        };
        let q = JointVector::new([0.2, -0.3, 0.5, 0.1, -0.2, 0.0, 0.4, 0.3, -0.1, 0.05]).unwrap();
        let pose = forward_kinematics(&g, &q).unwrap();
        let com = center_of_mass(&g, &pose).unwrap();
        assert!((com.xyz - pose.pelvis).norm() < 1e-15);
    }

    #[test]
    fn com_matches_hand_weighted_average() {
        // unit masses, right knee bent: average the seven midpoints by hand
        let g = BipedGeometry {
            link_masses: LinkMasses {
                pelvis: 1.0,
                thigh: 1.0,
                shin: 1.0,
                foot: 1.0,
            },
            ..BipedGeometry::default()
        };
        let mut q = [0.0; JOINT_COUNT];
        q[JointId::RJ3.index()] = 0.7;
        q[JointId::LJ2.index()] = -0.4;
        let pose = forward_kinematics(&g, &JointVector::new(q).unwrap()).unwrap();
        let r = &pose.right;
        let l = &pose.left;
        let pts = [
            (r.hip + l.hip.coords) / 2.0,
            (r.hip + r.knee.coords) / 2.0,
            (r.knee + r.ankle.coords) / 2.0,
            (r.ankle + r.sole_center.coords) / 2.0,
            (l.hip + l.knee.coords) / 2.0,
            (l.knee + l.ankle.coords) / 2.0,
            (l.ankle + l.sole_center.coords) / 2.0,
        ];
        let mut sum = [0.0; 3];
        for p in pts {
            sum[0] += p.x;
            sum[1] += p.y;
            sum[2] += p.z;
        }
        let com = center_of_mass(&g, &pose).unwrap();
        assert_close(com.xyz.x, sum[0] / 7.0, 1e-15);
        assert_close(com.xyz.y, sum[1] / 7.0, 1e-15);
        assert_close(com.xyz.z, sum[2] / 7.0, 1e-15);
        assert_eq!(com.total_mass, 7.0);
    }

    #[test]
    fn zero_mass_is_rejected() {
        let g = BipedGeometry {
            link_masses: LinkMasses {
                pelvis: 0.0,
                thigh: 0.0,
                shin: 0.0,
                foot: 0.0,
            },
            ..BipedGeometry::default()
        };
        let pose = forward_kinematics(&BipedGeometry::default(), &JointVector::zeros()).unwrap();
        assert_eq!(center_of_mass(&g, &pose), Err(ModelError::ZeroMass));
        assert_eq!(g.validate(), Err(ModelError::ZeroMass));
    }

    #[test]
    fn geometry_config_parsing() {
        let g = BipedGeometry::from_config_str(
            "# hobby biped\nthigh_len = 0.09\nlink_masses=0.4,0.1,0.1,0.05\n\n",
        )
        .unwrap();
        assert_eq!(g.thigh_len, 0.09);
        assert_eq!(g.shin_len, 0.085);
        assert_eq!(g.link_masses.pelvis, 0.4);

        let err = BipedGeometry::from_config_str("thigh_len=0.1\nneck_len=0.2\n").unwrap_err();
        assert_eq!(
            err,
            ModelError::Config {
                line: 2,
                message: "unknown key `neck_len`".into()
            }
        );
        assert!(BipedGeometry::from_config_str("shin_len=-1").is_err());
        assert!(BipedGeometry::from_config_str("shin_len").is_err());
    }

    #[test]
    fn joint_id_helpers() {
        assert_eq!("LJ3".parse::<JointId>().unwrap(), JointId::LJ3);
        assert!("RJ6".parse::<JointId>().is_err());
        assert_eq!(JointId::RJ5.mirrored(), JointId::LJ5);
        assert_eq!(JointId::LJ2.mirrored(), JointId::RJ2);
        assert!(JointId::LJ5.is_roll());
        assert!(!JointId::RJ3.is_roll());
        assert_eq!(JointId::LJ1.leg(), Leg::Left);
    }
}
