//! Keyframe walking pattern: a table of per-stage servo pulses, support
//! phases, interpolation into 20 ms frames and cyclic sequencing.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::model::{strip_comment, JointId, Leg, JOINT_COUNT};
use crate::servo::{PwmFrame, ServoBank, FRAME_PERIOD_MS, MAX_PULSE_US, MIN_PULSE_US};
use crate::stability::Contacts;

/// Forward walking pattern, one row per stage, joints in `JointVector` order.
pub const FORWARD_PULSES: [[u32; JOINT_COUNT]; 5] = [
    [870, 1152, 957, 957, 1696, 2152, 1043, 957, 1935, 1761],
    [891, 1043, 1043, 935, 1500, 2152, 1087, 891, 1913, 2000],
    [891, 1043, 1043, 935, 1500, 2152, 826, 891, 1913, 1783],
    [870, 1152, 957, 957, 1500, 2152, 1043, 957, 1935, 1826],
    [870, 826, 957, 1109, 1522, 2152, 1043, 957, 1935, 2000],
];

pub const FORWARD_SUPPORT: [Support; 5] = [
    Support::Double,
    Support::SingleRight,
    Support::Double,
    Support::SingleLeft,
    Support::Double,
];

pub const DEFAULT_STAGE_DURATION_MS: u64 = 500;

/// Direction statements for the forward table, one per named joint motion.
pub const FORWARD_NARRATIVE: &str = include_str!("../data/forward_narrative.txt");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaitError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: expected {expected} values, found {found}")]
    Arity {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: {joint} pulse out of range: {pulse_us} not in [800, 2400]")]
    PulseOutOfRange {
        line: usize,
        joint: JointId,
        pulse_us: u32,
    },
    #[error("line {line}: duplicate joint {joint}")]
    DuplicateJoint { line: usize, joint: JointId },
    #[error("wrong joint count: expected 10 joint rows, found {found}")]
    JointCount { found: usize },
    #[error("line {line}: unknown support tag `{tag}`")]
    UnknownSupport { line: usize, tag: String },
    #[error("a gait table needs at least 2 stages, got {0}")]
    TooFewStages(usize),
    #[error("stage {stage}: {joint} pulse {pulse_us} out of range [800, 2400]")]
    StagePulse {
        stage: usize,
        joint: JointId,
        pulse_us: u32,
    },
    #[error("duration {duration_ms} ms is not a positive multiple of {period_ms} ms")]
    InvalidDuration { duration_ms: u64, period_ms: u64 },
    #[error("cycle count must be at least 1")]
    InvalidCycles,
    #[error("narrative line {line}: {message}")]
    Narrative { line: usize, message: String },
    #[error("narrative references stage {stage}, table has {stages}")]
    UnknownStage { stage: usize, stages: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Support {
    Double,
    SingleLeft,
    SingleRight,
}

impl Support {
    pub fn tag(self) -> &'static str {
        match self {
            Support::Double => "D",
            Support::SingleLeft => "SL",
            Support::SingleRight => "SR",
        }
    }

    pub fn swing_leg(self) -> Option<Leg> {
        match self {
            Support::Double => None,
            Support::SingleLeft => Some(Leg::Right),
            Support::SingleRight => Some(Leg::Left),
        }
    }

    pub fn contacts(self) -> Contacts {
        match self {
            Support::Double => Contacts::DOUBLE,
            Support::SingleLeft => Contacts::single(Leg::Left),
            Support::SingleRight => Contacts::single(Leg::Right),
        }
    }
}

impl FromStr for Support {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "D" => Ok(Support::Double),
            "SL" => Ok(Support::SingleLeft),
            "SR" => Ok(Support::SingleRight),
            other => Err(other.to_string()),
        }
    }
}

impl fmt::Display for Support {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stage {
    /// 1-based.
    pub index: usize,
    pub pulses_us: [u32; JOINT_COUNT],
    pub support: Support,
}

impl Stage {
    pub fn swing_leg(&self) -> Option<Leg> {
        self.support.swing_leg()
    }

    pub fn pulse(&self, joint: JointId) -> u32 {
        self.pulses_us[joint.index()]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaitTable {
    name: String,
    stages: Vec<Stage>,
}

impl GaitTable {
    pub fn new(name: impl Into<String>, stages: Vec<Stage>) -> Result<Self, GaitError> {
        let table = Self::new_unchecked(name, stages)?;
        for stage in &table.stages {
            for joint in JointId::ALL {
                let pulse_us = stage.pulse(joint);
                if !(MIN_PULSE_US..=MAX_PULSE_US).contains(&pulse_us) {
                    return Err(GaitError::StagePulse {
                        stage: stage.index,
                        joint,
                        pulse_us,
                    });
                }
            }
        }
        Ok(table)
    }

    fn new_unchecked(name: impl Into<String>, stages: Vec<Stage>) -> Result<Self, GaitError> {
        if stages.len() < 2 {
            return Err(GaitError::TooFewStages(stages.len()));
        }
        Ok(Self {
            name: name.into(),
            stages,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    /// 1-based stage lookup.
    pub fn stage(&self, index: usize) -> Option<&Stage> {
        index.checked_sub(1).and_then(|i| self.stages.get(i))
    }

    pub fn joint_ids(&self) -> [JointId; JOINT_COUNT] {
        JointId::ALL
    }

    /// Smallest and largest pulse over every stage.
    pub fn pulse_span(&self) -> (u32, u32) {
        let all = self.stages.iter().flat_map(|s| s.pulses_us.iter().copied());
        let min = all.clone().min().unwrap_or(0);
        let max = all.max().unwrap_or(0);
        (min, max)
    }

    pub fn stage_frame(&self, index: usize, t_ms: u64) -> Option<PwmFrame> {
        self.stage(index).map(|s| PwmFrame::new(t_ms, s.pulses_us))
    }
}

impl fmt::Display for GaitTable {
    /// Canonical text form, accepted back by [`load_gait_table`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "GAIT {} STAGES {}", self.name, self.stages.len())?;
        write!(f, "SUPPORT")?;
        for s in &self.stages {
            write!(f, " {}", s.support)?;
        }
        writeln!(f)?;
        for joint in JointId::ALL {
            write!(f, "{joint}")?;
            for s in &self.stages {
                write!(f, " {}", s.pulse(joint))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

pub fn builtin_forward_table() -> GaitTable {
    let stages = FORWARD_PULSES
        .iter()
        .zip(FORWARD_SUPPORT)
        .enumerate()
        .map(|(i, (pulses, support))| Stage {
            index: i + 1,
            pulses_us: *pulses,
            support,
        })
        .collect();
    GaitTable::new("forward", stages).expect("builtin table is valid")
}

/// Parses the gait table text format, enforcing the 800–2400 µs range.
pub fn load_gait_table(text: &str) -> Result<GaitTable, GaitError> {
    parse_table(text, true)
}

/// Same grammar as [`load_gait_table`] but keeps out-of-range pulses so they
/// can be reported against servo limits.
pub fn load_gait_table_unchecked(text: &str) -> Result<GaitTable, GaitError> {
    parse_table(text, false)
}

fn parse_table(text: &str, check_range: bool) -> Result<GaitTable, GaitError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, strip_comment(l).trim()))
        .filter(|(_, l)| !l.is_empty());
    let syntax = |line: usize, message: String| GaitError::Syntax { line, message };

    let (line_no, header) = lines
        .next()
        .ok_or_else(|| syntax(1, "missing `GAIT <name> STAGES <k>` header".into()))?;
    let (name, stage_count) = match header.split_whitespace().collect::<Vec<_>>()[..] {
        ["GAIT", name, "STAGES", k] => {
            let k: usize = k
                .parse()
                .map_err(|_| syntax(line_no, format!("stage count `{k}` is not an integer")))?;
            (name.to_string(), k)
        }
        _ => {
            return Err(syntax(
                line_no,
                format!("expected `GAIT <name> STAGES <k>`, got `{header}`"),
            ))
        }
    };
    if stage_count < 2 {
        return Err(GaitError::TooFewStages(stage_count));
    }

    let (line_no, support_line) = lines
        .next()
        .ok_or_else(|| syntax(line_no + 1, "missing SUPPORT line".into()))?;
    let mut tokens = support_line.split_whitespace();
    if tokens.next() != Some("SUPPORT") {
        return Err(syntax(
            line_no,
            format!("expected SUPPORT line, got `{support_line}`"),
        ));
    }
    let tags: Vec<&str> = tokens.collect();
    if tags.len() != stage_count {
        return Err(GaitError::Arity {
            line: line_no,
            expected: stage_count,
            found: tags.len(),
        });
    }
    let supports = tags
        .iter()
        .map(|t| {
            t.parse::<Support>()
                .map_err(|tag| GaitError::UnknownSupport { line: line_no, tag })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut rows: [Option<Vec<u32>>; JOINT_COUNT] = Default::default();
    let mut found = 0;
    for (line_no, line) in lines {
        let mut tokens = line.split_whitespace();
        let id = tokens.next().unwrap_or_default();
        let joint: JointId = id.parse().map_err(|e| syntax(line_no, format!("{e}")))?;
        let values: Vec<&str> = tokens.collect();
        if values.len() != stage_count {
            return Err(GaitError::Arity {
                line: line_no,
                expected: stage_count,
                found: values.len(),
            });
        }
        let pulses = values
            .iter()
            .map(|v| {
                let pulse_us: u32 = v
                    .parse()
                    .map_err(|_| syntax(line_no, format!("`{v}` is not an integer pulse")))?;
                if check_range && !(MIN_PULSE_US..=MAX_PULSE_US).contains(&pulse_us) {
                    return Err(GaitError::PulseOutOfRange {
                        line: line_no,
                        joint,
                        pulse_us,
                    });
                }
                Ok(pulse_us)
            })
            .collect::<Result<Vec<_>, _>>()?;
        if rows[joint.index()].replace(pulses).is_some() {
            return Err(GaitError::DuplicateJoint {
                line: line_no,
                joint,
            });
        }
        found += 1;
    }
    if found != JOINT_COUNT {
        return Err(GaitError::JointCount { found });
    }

    let stages = (0..stage_count)
        .map(|s| Stage {
            index: s + 1,
            pulses_us: JointId::ALL.map(|j| rows[j.index()].as_ref().expect("all rows present")[s]),
            support: supports[s],
        })
        .collect();
    if check_range {
        GaitTable::new(name, stages)
    } else {
        GaitTable::new_unchecked(name, stages)
    }
}

fn check_duration(duration_ms: u64, period_ms: u64) -> Result<u64, GaitError> {
    if period_ms == 0 || duration_ms == 0 || !duration_ms.is_multiple_of(period_ms) {
        return Err(GaitError::InvalidDuration {
            duration_ms,
            period_ms,
        });
    }
    Ok(duration_ms / period_ms)
}

/// Linear pulse-space interpolation. Frame k of n (k = 1..=n) sits at
/// `k · period` and holds `round(from + (to − from)·k/n)`, ties rounded up,
/// so the last frame is exactly `to`.
pub fn interpolate_transition(
    from: &Stage,
    to: &Stage,
    duration_ms: u64,
    frame_period_ms: u64,
) -> Result<Vec<PwmFrame>, GaitError> {
    let n = check_duration(duration_ms, frame_period_ms)?;
    let frames = (1..=n)
        .map(|k| {
            let pulses = JointId::ALL.map(|j| {
                let (a, b) = (from.pulse(j) as u64, to.pulse(j) as u64);
                // (a·(n−k) + b·k) / n, rounded half up; all terms non-negative
                let num = a * (n - k) + b * k;
                ((2 * num + n) / (2 * n)) as u32
            });
            PwmFrame::new(k * frame_period_ms, pulses)
        })
        .collect();
    Ok(frames)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrajectoryFrame {
    pub pwm: PwmFrame,
    pub support: Support,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub frame_period_ms: u64,
    pub frames: Vec<TrajectoryFrame>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn pwm_frames(&self) -> impl Iterator<Item = &PwmFrame> {
        self.frames.iter().map(|f| &f.pwm)
    }
}

/// Stage 1 hold frame at t = 0, then transitions 1→2→…→k→1 for each cycle.
/// Every frame carries the support phase of its transition's destination.
pub fn generate_cycle(
    table: &GaitTable,
    stage_duration_ms: u64,
    n_cycles: usize,
) -> Result<Trajectory, GaitError> {
    if n_cycles == 0 {
        return Err(GaitError::InvalidCycles);
    }
    let stages = table.stages();
    let per_transition = check_duration(stage_duration_ms, FRAME_PERIOD_MS)? as usize;
    let mut frames = Vec::with_capacity(1 + n_cycles * stages.len() * per_transition);
    frames.push(TrajectoryFrame {
        pwm: PwmFrame::new(0, stages[0].pulses_us),
        support: stages[0].support,
    });
    let mut t0 = 0;
    for _ in 0..n_cycles {
        for (i, from) in stages.iter().enumerate() {
            let to = &stages[(i + 1) % stages.len()];
            for mut pwm in interpolate_transition(from, to, stage_duration_ms, FRAME_PERIOD_MS)? {
                pwm.t_ms += t0;
                frames.push(TrajectoryFrame {
                    pwm,
                    support: to.support,
                });
            }
            t0 += stage_duration_ms;
        }
    }
    Ok(Trajectory {
        frame_period_ms: FRAME_PERIOD_MS,
        frames,
    })
}

/// Rotation sense as seen with anticlockwise = positive joint angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Clockwise,
    Anticlockwise,
    None,
}

impl Direction {
    pub fn tag(self) -> &'static str {
        match self {
            Direction::Clockwise => "CW",
            Direction::Anticlockwise => "ACW",
            Direction::None => "NONE",
        }
    }

    fn from_signum(s: i64) -> Direction {
        match s.signum() {
            1 => Direction::Anticlockwise,
            -1 => Direction::Clockwise,
            _ => Direction::None,
        }
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "CW" => Ok(Direction::Clockwise),
            "ACW" => Ok(Direction::Anticlockwise),
            "NONE" => Ok(Direction::None),
            other => Err(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NarrativeEntry {
    pub from_stage: usize,
    pub to_stage: usize,
    pub joint: JointId,
    pub expected: Direction,
}

/// Expected rotation directions per (transition, joint). Joints without an
/// entry are unspecified.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NarrativeSpec {
    pub entries: Vec<NarrativeEntry>,
}

impl NarrativeSpec {
    pub fn builtin_forward() -> NarrativeSpec {
        Self::parse(FORWARD_NARRATIVE).expect("builtin narrative parses")
    }

    /// Lines of `<from>-><to> <JOINT> <CW|ACW|NONE>`.
    pub fn parse(text: &str) -> Result<NarrativeSpec, GaitError> {
        let mut entries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| GaitError::Narrative {
                line: idx + 1,
                message,
            };
            let [transition, joint, direction] = line.split_whitespace().collect::<Vec<_>>()[..]
            else {
                return Err(err(format!(
                    "expected `<from>-><to> <joint> <dir>`, got `{line}`"
                )));
            };
            let (from, to) = transition
                .split_once("->")
                .ok_or_else(|| err(format!("bad transition `{transition}`")))?;
            let stage = |s: &str| {
                s.parse::<usize>()
                    .ok()
                    .filter(|&v| v >= 1)
                    .ok_or_else(|| err(format!("bad stage number `{s}`")))
            };
            let joint: JointId = joint.parse().map_err(|e| err(format!("{e}")))?;
            let expected: Direction = direction
                .parse()
                .map_err(|d| err(format!("unknown direction `{d}`")))?;
            entries.push(NarrativeEntry {
                from_stage: stage(from)?,
                to_stage: stage(to)?,
                joint,
                expected,
            });
        }
        Ok(NarrativeSpec { entries })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Consistency {
    Match,
    Mismatch,
    /// The text names a rotation but the table leaves the pulse unchanged.
    ZeroButSpecified,
}

impl Consistency {
    pub fn tag(self) -> &'static str {
        match self {
            Consistency::Match => "MATCH",
            Consistency::Mismatch => "MISMATCH",
            Consistency::ZeroButSpecified => "ZERO_BUT_SPECIFIED",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NarrativeCheck {
    pub entry: NarrativeEntry,
    pub from_us: u32,
    pub to_us: u32,
    pub observed: Direction,
    pub outcome: Consistency,
}

impl NarrativeCheck {
    pub fn delta_us(&self) -> i64 {
        self.to_us as i64 - self.from_us as i64
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NarrativeReport {
    pub table_name: String,
    pub checks: Vec<NarrativeCheck>,
}

impl NarrativeReport {
    pub fn count(&self, outcome: Consistency) -> usize {
        self.checks.iter().filter(|c| c.outcome == outcome).count()
    }
}

impl fmt::Display for NarrativeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "NARRATIVE {}", self.table_name)?;
        for c in &self.checks {
            writeln!(
                f,
                "{}->{} {} expected={} pulses={}->{} delta={:+} observed={} {}",
                c.entry.from_stage,
                c.entry.to_stage,
                c.entry.joint,
                c.entry.expected.tag(),
                c.from_us,
                c.to_us,
                c.delta_us(),
                c.observed.tag(),
                c.outcome.tag()
            )?;
        }
        writeln!(
            f,
            "SUMMARY entries={} match={} mismatch={} zero_but_specified={}",
            self.checks.len(),
            self.count(Consistency::Match),
            self.count(Consistency::Mismatch),
            self.count(Consistency::ZeroButSpecified)
        )
    }
}

/// Compares sign(Δpulse)·servo sign against each stated direction.
pub fn check_narrative(
    table: &GaitTable,
    spec: &NarrativeSpec,
    servos: &ServoBank,
) -> Result<NarrativeReport, GaitError> {
    let stages = table.stages().len();
    let lookup = |stage: usize| {
        table
            .stage(stage)
            .ok_or(GaitError::UnknownStage { stage, stages })
    };
    let checks = spec
        .entries
        .iter()
        .map(|entry| {
            let from_us = lookup(entry.from_stage)?.pulse(entry.joint);
            let to_us = lookup(entry.to_stage)?.pulse(entry.joint);
            let delta = to_us as i64 - from_us as i64;
            let observed = Direction::from_signum(delta * servos.get(entry.joint).sign.value());
            let outcome = if observed == entry.expected {
                Consistency::Match
            } else if observed == Direction::None {
                Consistency::ZeroButSpecified
            } else {
                Consistency::Mismatch
            };
            Ok(NarrativeCheck {
                entry: entry.clone(),
                from_us,
                to_us,
                observed,
                outcome,
            })
        })
        .collect::<Result<_, GaitError>>()?;
    Ok(NarrativeReport {
        table_name: table.name().to_string(),
        checks,
    })
}
