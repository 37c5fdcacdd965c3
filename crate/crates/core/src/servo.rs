//! Hobby servo model: linear pulse-width to joint-angle mapping, mounting
//! orientation, range checks and 20 ms PWM frames.

use std::fmt;

use thiserror::Error;

use crate::gait::FORWARD_PULSES;
use crate::model::{strip_comment, JointId, JointVector, ModelError, JOINT_COUNT};

pub const FRAME_PERIOD_MS: u64 = 20;
pub const MIN_PULSE_US: u32 = 800;
pub const MAX_PULSE_US: u32 = 2400;
/// 1600 µs of travel over 180°.
pub const DEFAULT_SCALE_DEG_PER_US: f64 = 0.1125;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ServoError {
    #[error("{joint}: pulse {pulse_us} us outside [{min_us}, {max_us}]")]
    PulseOutOfRange {
        joint: JointId,
        pulse_us: u32,
        min_us: u32,
        max_us: u32,
    },
    #[error("{joint}: angle {angle_rad} rad is not reachable")]
    AngleOutOfRange { joint: JointId, angle_rad: f64 },
    #[error("{joint}: {source}")]
    Joint {
        joint: JointId,
        #[source]
        source: ModelError,
    },
    #[error("invalid servo config for {joint}: {message}")]
    InvalidConfig { joint: JointId, message: String },
    #[error("servo config line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Mounting orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn value(self) -> i64 {
        match self {
            Sign::Positive => 1,
            Sign::Negative => -1,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Positive => "+1",
            Sign::Negative => "-1",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServoConfig {
    pub joint: JointId,
    /// Pulse that produces the zero joint angle.
    pub neutral_us: u32,
    pub sign: Sign,
    pub min_us: u32,
    pub max_us: u32,
    pub scale_deg_per_us: f64,
}

impl ServoConfig {
    pub fn new(joint: JointId, neutral_us: u32, sign: Sign) -> Self {
        Self {
            joint,
            neutral_us,
            sign,
            min_us: MIN_PULSE_US,
            max_us: MAX_PULSE_US,
            scale_deg_per_us: DEFAULT_SCALE_DEG_PER_US,
        }
    }

    pub fn validate(&self) -> Result<(), ServoError> {
        let fail = |message: String| {
            Err(ServoError::InvalidConfig {
                joint: self.joint,
                message,
            })
        };
        if self.min_us >= self.max_us {
            return fail(format!(
                "min {} must be below max {}",
                self.min_us, self.max_us
            ));
        }
        if !(self.min_us..=self.max_us).contains(&self.neutral_us) {
            return fail(format!(
                "neutral {} outside [{}, {}]",
                self.neutral_us, self.min_us, self.max_us
            ));
        }
        if !(self.scale_deg_per_us.is_finite() && self.scale_deg_per_us > 0.0) {
            return fail(format!("scale {} must be positive", self.scale_deg_per_us));
        }
        Ok(())
    }

    pub fn in_range(&self, pulse_us: u32) -> bool {
        (self.min_us..=self.max_us).contains(&pulse_us)
    }

    fn range_error(&self, pulse_us: u32) -> ServoError {
        ServoError::PulseOutOfRange {
            joint: self.joint,
            pulse_us,
            min_us: self.min_us,
            max_us: self.max_us,
        }
    }

    /// angle = sign · (pulse − neutral) · scale, in radians.
    pub fn pulse_to_angle(&self, pulse_us: u32) -> Result<f64, ServoError> {
        if !self.in_range(pulse_us) {
            return Err(self.range_error(pulse_us));
        }
        let offset = (pulse_us as i64 - self.neutral_us as i64) * self.sign.value();
        Ok((offset as f64 * self.scale_deg_per_us).to_radians())
    }

    /// Inverse of [`pulse_to_angle`](Self::pulse_to_angle), rounded to the
    /// nearest microsecond (ties away from zero).
    pub fn angle_to_pulse(&self, angle_rad: f64) -> Result<u32, ServoError> {
        let unreachable = ServoError::AngleOutOfRange {
            joint: self.joint,
            angle_rad,
        };
        if !angle_rad.is_finite() {
            return Err(unreachable);
        }
        let offset = angle_rad.to_degrees() / self.scale_deg_per_us * self.sign.value() as f64;
        let pulse = (self.neutral_us as f64 + offset).round();
        if pulse < self.min_us as f64 || pulse > self.max_us as f64 {
            return Err(unreachable);
        }
        Ok(pulse as u32)
    }
}

/// One configuration per joint, in `JointVector` order.
#[derive(Debug, Clone, PartialEq)]
pub struct ServoBank([ServoConfig; JOINT_COUNT]);

impl Default for ServoBank {
    /// Neutrals at the erect stance (stage I of the forward table), right
    /// servos +1, left servos −1.
    fn default() -> Self {
        Self::with_neutrals(&FORWARD_PULSES[0])
    }
}

impl ServoBank {
    pub fn with_neutrals(neutrals: &[u32; JOINT_COUNT]) -> Self {
        Self(JointId::ALL.map(|joint| {
            let sign = match joint.leg() {
                crate::model::Leg::Right => Sign::Positive,
                crate::model::Leg::Left => Sign::Negative,
            };
            ServoConfig::new(joint, neutrals[joint.index()], sign)
        }))
    }

    pub fn new(configs: [ServoConfig; JOINT_COUNT]) -> Result<Self, ServoError> {
        for (joint, cfg) in JointId::ALL.iter().zip(configs.iter()) {
            if cfg.joint != *joint {
                return Err(ServoError::InvalidConfig {
                    joint: *joint,
                    message: format!("slot holds config for {}", cfg.joint),
                });
            }
            cfg.validate()?;
        }
        Ok(Self(configs))
    }

    pub fn get(&self, joint: JointId) -> &ServoConfig {
        &self.0[joint.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = &ServoConfig> {
        self.0.iter()
    }

    /// Parses lines of the form
    /// `<JOINT> neutral=<int> sign=<+1|-1> [min=<int>] [max=<int>] [scale=<float>]`.
    /// Joints not listed keep their defaults.
    pub fn from_config_str(text: &str) -> Result<Self, ServoError> {
        let mut configs = ServoBank::default().0;
        let mut seen = [false; JOINT_COUNT];
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| ServoError::Parse {
                line: line_no,
                message,
            };
            let mut tokens = line.split_whitespace();
            let joint: JointId = tokens
                .next()
                .unwrap_or_default()
                .parse()
                .map_err(|e: crate::model::UnknownJoint| err(e.to_string()))?;
            if std::mem::replace(&mut seen[joint.index()], true) {
                return Err(err(format!("duplicate joint {joint}")));
            }
            let mut cfg = ServoConfig::new(joint, 0, Sign::Positive);
            let (mut has_neutral, mut has_sign) = (false, false);
            for token in tokens {
                let (key, value) = token
                    .split_once('=')
                    .ok_or_else(|| err(format!("expected key=value, got `{token}`")))?;
                let int = |v: &str| {
                    v.parse::<u32>()
                        .map_err(|_| err(format!("`{v}` is not an integer")))
                };
                match key {
                    "neutral" => {
                        cfg.neutral_us = int(value)?;
                        has_neutral = true;
                    }
                    "sign" => {
                        cfg.sign = match value {
                            "+1" | "1" => Sign::Positive,
                            "-1" => Sign::Negative,
                            other => {
                                return Err(err(format!("sign must be +1 or -1, got `{other}`")))
                            }
                        };
                        has_sign = true;
                    }
                    "min" => cfg.min_us = int(value)?,
                    "max" => cfg.max_us = int(value)?,
                    "scale" => {
                        cfg.scale_deg_per_us = value
                            .parse()
                            .map_err(|_| err(format!("`{value}` is not a number")))?
                    }
                    other => return Err(err(format!("unknown key `{other}`"))),
                }
            }
            if !has_neutral || !has_sign {
                return Err(err(format!("{joint} needs both neutral= and sign=")));
            }
            cfg.validate().map_err(|e| err(e.to_string()))?;
            configs[joint.index()] = cfg;
        }
        Ok(Self(configs))
    }
}

/// One 20 ms servo frame: the on-time of every servo.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PwmFrame {
    pub t_ms: u64,
    pub pulses_us: [u32; JOINT_COUNT],
}

impl PwmFrame {
    pub fn new(t_ms: u64, pulses_us: [u32; JOINT_COUNT]) -> Self {
        Self { t_ms, pulses_us }
    }

    pub fn pulse(&self, joint: JointId) -> u32 {
        self.pulses_us[joint.index()]
    }
}

pub fn frame_to_joints(frame: &PwmFrame, servos: &ServoBank) -> Result<JointVector, ServoError> {
    let mut angles = [0.0; JOINT_COUNT];
    for joint in JointId::ALL {
        angles[joint.index()] = servos.get(joint).pulse_to_angle(frame.pulse(joint))?;
    }
    JointVector::new(angles).map_err(|source| {
        let joint = match &source {
            ModelError::NonFiniteAngle { joint } | ModelError::AngleOutOfRange { joint, .. } => {
                *joint
            }
            _ => JointId::RJ1,
        };
        ServoError::Joint { joint, source }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RangeViolation {
    pub joint: JointId,
    pub pulse_us: u32,
}

impl fmt::Display for RangeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.joint, self.pulse_us)
    }
}

/// Every pulse outside its servo's [min, max]. Empty means the frame is valid.
pub fn validate_frame(frame: &PwmFrame, servos: &ServoBank) -> Vec<RangeViolation> {
    JointId::ALL
        .iter()
        .filter(|&&joint| !servos.get(joint).in_range(frame.pulse(joint)))
        .map(|&joint| RangeViolation {
            joint,
            pulse_us: frame.pulse(joint),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(neutral: u32, sign: Sign) -> ServoConfig {
        ServoConfig::new(JointId::RJ1, neutral, sign)
    }

    #[test]
    fn neutral_maps_to_zero() {
        for sign in [Sign::Positive, Sign::Negative] {
            assert_eq!(cfg(1234, sign).pulse_to_angle(1234).unwrap(), 0.0);
            assert_eq!(cfg(1234, sign).angle_to_pulse(0.0).unwrap(), 1234);
        }
    }

    #[test]
    fn endpoint_is_ninety_degrees() {
        let a = cfg(1600, Sign::Positive).pulse_to_angle(2400).unwrap();
        assert!((a - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn table_offset_example() {
        // 21 us * 0.1125 deg/us = 2.3625 deg
        let a = cfg(870, Sign::Positive).pulse_to_angle(891).unwrap();
        assert!((a - 2.3625_f64.to_radians()).abs() < 1e-15);
        assert!((a - 0.041233).abs() < 5e-7);
    }

    #[test]
    fn negative_sign_inverse() {
        let p = cfg(1600, Sign::Negative)
            .angle_to_pulse(45.0_f64.to_radians())
            .unwrap();
        assert_eq!(p, 1200);
    }

    #[test]
    fn out_of_range_names_joint() {
        let c = ServoConfig::new(JointId::LJ4, 1500, Sign::Negative);
        let err = c.pulse_to_angle(2500).unwrap_err();
        assert_eq!(
            err,
            ServoError::PulseOutOfRange {
                joint: JointId::LJ4,
                pulse_us: 2500,
                min_us: 800,
                max_us: 2400
            }
        );
        assert!(err.to_string().starts_with("LJ4"));
        assert!(c.angle_to_pulse(3.0).is_err());
        assert!(c.angle_to_pulse(f64::NAN).is_err());
    }

    #[test]
    fn integer_round_trip_over_full_range() {
        for sign in [Sign::Positive, Sign::Negative] {
            let c = cfg(1317, sign);
            for p in MIN_PULSE_US..=MAX_PULSE_US {
                let a = c.pulse_to_angle(p).unwrap();
                assert_eq!(c.angle_to_pulse(a).unwrap(), p);
            }
        }
    }

    #[test]
    fn stage_one_frame_maps_to_zero_posture() {
        let bank = ServoBank::default();
        let frame = PwmFrame::new(0, FORWARD_PULSES[0]);
        assert_eq!(
            frame_to_joints(&frame, &bank).unwrap(),
            JointVector::zeros()
        );
    }

    #[test]
    fn single_joint_offset() {
        let bank = ServoBank::default();
        let mut pulses = FORWARD_PULSES[0];
        pulses[0] += 21;
        let q = frame_to_joints(&PwmFrame::new(0, pulses), &bank).unwrap();
        assert!((q.get(JointId::RJ1) - 2.3625_f64.to_radians()).abs() < 1e-15);
        assert!(q.as_array()[1..].iter().all(|&a| a == 0.0));
    }

    #[test]
    fn frame_to_joints_reports_joint_of_unreachable_angle() {
        let bank = ServoBank::default();
        let mut pulses = FORWARD_PULSES[0];
        // 870 -> 2400 is 172 degrees away from neutral
        pulses[0] = 2400;
        let err = frame_to_joints(&PwmFrame::new(0, pulses), &bank).unwrap_err();
        assert!(matches!(
            err,
            ServoError::Joint {
                joint: JointId::RJ1,
                ..
            }
        ));
        pulses[0] = 700;
        let err = frame_to_joints(&PwmFrame::new(0, pulses), &bank).unwrap_err();
        assert!(matches!(
            err,
            ServoError::PulseOutOfRange {
                joint: JointId::RJ1,
                ..
            }
        ));
    }

    #[test]
    fn validate_frame_boundaries() {
        let bank = ServoBank::default();
        let mut pulses = FORWARD_PULSES[0];
        pulses[3] = 800;
        assert!(validate_frame(&PwmFrame::new(0, pulses), &bank).is_empty());
        pulses[3] = 2500;
        pulses[7] = 799;
        assert_eq!(
            validate_frame(&PwmFrame::new(0, pulses), &bank),
            vec![
                RangeViolation {
                    joint: JointId::RJ4,
                    pulse_us: 2500
                },
                RangeViolation {
                    joint: JointId::LJ3,
                    pulse_us: 799
                }
            ]
        );
    }

    #[test]
    fn config_file() {
        let bank = ServoBank::from_config_str(
            "# trims\nRJ2 neutral=1160 sign=-1\nLJ5 neutral=1750 sign=+1 min=900 max=2300 scale=0.1\n",
        )
        .unwrap();
        assert_eq!(bank.get(JointId::RJ2).neutral_us, 1160);
        assert_eq!(bank.get(JointId::RJ2).sign, Sign::Negative);
        assert_eq!(bank.get(JointId::LJ5).max_us, 2300);
        assert_eq!(bank.get(JointId::LJ5).scale_deg_per_us, 0.1);
        // untouched joints keep their defaults
        assert_eq!(
            bank.get(JointId::RJ1),
            ServoBank::default().get(JointId::RJ1)
        );

        assert!(ServoBank::from_config_str("RJ2 neutral=1160").is_err());
        assert!(ServoBank::from_config_str("RJ2 neutral=1160 sign=0").is_err());
        assert!(ServoBank::from_config_str("RJ9 neutral=1160 sign=1").is_err());
        assert!(ServoBank::from_config_str("RJ2 neutral=700 sign=1").is_err());
        assert!(
            ServoBank::from_config_str("RJ2 neutral=1000 sign=1\nRJ2 neutral=1000 sign=1").is_err()
        );
        assert!(ServoBank::from_config_str("RJ2 neutral=1000 sign=1 trim=3").is_err());
    }

    #[test]
    fn bank_rejects_misplaced_configs() {
        let mut configs = ServoBank::default().0;
        configs.swap(0, 1);
        assert!(ServoBank::new(configs).is_err());
    }
}
