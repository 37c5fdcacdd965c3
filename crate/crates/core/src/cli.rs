//! Subcommand implementations behind the `gaitforge` binary.
//!
//! Each command is a pure function of its inputs and returns its textual
//! output together with the process exit code, so the binary only does I/O.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::comm::{parse_command, CommandError, MasterState, SlaveState};
use crate::gait::{
    builtin_forward_table, check_narrative, generate_cycle, load_gait_table,
    load_gait_table_unchecked, Consistency, GaitError, GaitTable, NarrativeSpec, TrajectoryFrame,
    DEFAULT_STAGE_DURATION_MS,
};
use crate::model::{
    center_of_mass, forward_kinematics, BipedGeometry, JointId, ModelError, JOINT_COUNT,
};
use crate::servo::{
    frame_to_joints, validate_frame, PwmFrame, ServoBank, ServoError, FRAME_PERIOD_MS,
};
use crate::stability::{
    analyze_trajectory, support_polygon, zmp, PoseSample, StabilityError, STANDARD_GRAVITY,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT_ERROR: u8 = 1;
pub const EXIT_CHECK_FAILED: u8 = 2;

pub const BUILTIN: &str = "builtin";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Input { path: String, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Servo(#[from] ServoError),
    #[error(transparent)]
    Gait(#[from] GaitError),
    #[error(transparent)]
    Stability(#[from] StabilityError),
    #[error("script line {line}: {source}")]
    Command {
        line: usize,
        #[source]
        source: CommandError,
    },
    #[error("script line {line}: {message}")]
    Script { line: usize, message: String },
}

pub fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn tagged<T, E: std::fmt::Display>(path: &Path, r: Result<T, E>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Input {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Loads `builtin` or a gait table file.
pub fn load_table(source: &str) -> Result<GaitTable, CliError> {
    if source == BUILTIN {
        return Ok(builtin_forward_table());
    }
    let path = Path::new(source);
    tagged(path, load_gait_table(&read_file(path)?))
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub geometry: BipedGeometry,
    pub servos: ServoBank,
    pub table: GaitTable,
    pub stage_duration_ms: u64,
    pub n_cycles: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            geometry: BipedGeometry::default(),
            servos: ServoBank::default(),
            table: builtin_forward_table(),
            stage_duration_ms: DEFAULT_STAGE_DURATION_MS,
            n_cycles: 1,
        }
    }
}

impl RunConfig {
    pub fn load(
        geometry: Option<&Path>,
        servos: Option<&Path>,
        gait: &str,
        stage_duration_ms: u64,
        n_cycles: usize,
    ) -> Result<Self, CliError> {
        let geometry = match geometry {
            Some(p) => tagged(p, BipedGeometry::from_config_str(&read_file(p)?))?,
            None => BipedGeometry::default(),
        };
        let servos = match servos {
            Some(p) => tagged(p, ServoBank::from_config_str(&read_file(p)?))?,
            None => ServoBank::default(),
        };
        if stage_duration_ms == 0 || !stage_duration_ms.is_multiple_of(FRAME_PERIOD_MS) {
            return Err(GaitError::InvalidDuration {
                duration_ms: stage_duration_ms,
                period_ms: FRAME_PERIOD_MS,
            }
            .into());
        }
        if n_cycles == 0 {
            return Err(GaitError::InvalidCycles.into());
        }
        Ok(Self {
            geometry,
            servos,
            table: load_table(gait)?,
            stage_duration_ms,
            n_cycles,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub t_ms: u64,
    pub pulses_us: [u32; JOINT_COUNT],
    pub angles_rad: [f64; JOINT_COUNT],
    pub com: [f64; 3],
    pub margin_m: f64,
    pub y_zmp: f64,
    pub support: &'static str,
}

impl ReportRow {
    pub fn stable(&self) -> bool {
        self.margin_m >= 0.0
    }
}

/// One row per frame, in a fixed column order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryReport {
    pub rows: Vec<ReportRow>,
}

pub fn csv_header() -> String {
    let mut cols = vec!["t_ms".to_string()];
    cols.extend(JointId::ALL.iter().map(|j| format!("{j}_us")));
    cols.extend(JointId::ALL.iter().map(|j| format!("{j}_rad")));
    cols.extend(
        [
            "com_x", "com_y", "com_z", "margin_m", "y_zmp", "support", "stable",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    cols.join(",")
}

fn fixed(v: f64) -> String {
    let s = format!("{v:.9}");
    // never print a negative zero
    if s.trim_start_matches('-')
        .bytes()
        .all(|b| b == b'0' || b == b'.')
    {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

impl TrajectoryReport {
    pub fn to_csv(&self) -> String {
        let mut out = csv_header();
        out.push('\n');
        for r in &self.rows {
            let mut fields = vec![r.t_ms.to_string()];
            fields.extend(r.pulses_us.iter().map(|p| p.to_string()));
            fields.extend(r.angles_rad.iter().map(|&a| fixed(a)));
            fields.extend(r.com.iter().map(|&c| fixed(c)));
            fields.push(fixed(r.margin_m));
            fields.push(fixed(r.y_zmp));
            fields.push(r.support.to_string());
            fields.push(r.stable().to_string());
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    pub fn unstable(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| !r.stable())
    }

    pub fn all_stable(&self) -> bool {
        self.unstable().next().is_none()
    }

    pub fn summary(&self, color: bool) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "frames: {}", self.rows.len());
        if self.rows.is_empty() {
            return s;
        }
        let min = self
            .rows
            .iter()
            .map(|r| r.margin_m)
            .fold(f64::INFINITY, f64::min);
        let mean = self.rows.iter().map(|r| r.margin_m).sum::<f64>() / self.rows.len() as f64;
        let _ = writeln!(s, "margin_m: min={} mean={}", fixed(min), fixed(mean));
        let unstable: Vec<&ReportRow> = self.unstable().collect();
        if unstable.is_empty() {
            let _ = writeln!(s, "{}", paint("all frames stable", Paint::Good, color));
        } else {
            let _ = writeln!(
                s,
                "{}",
                paint(
                    &format!("unstable frames: {}", unstable.len()),
                    Paint::Bad,
                    color
                )
            );
            for r in unstable {
                let _ = writeln!(
                    s,
                    "  t_ms={} support={} margin_m={}",
                    r.t_ms,
                    r.support,
                    fixed(r.margin_m)
                );
            }
        }
        s
    }
}

#[derive(Clone, Copy)]
pub enum Paint {
    Good,
    Warn,
    Bad,
}

pub fn paint(text: &str, style: Paint, color: bool) -> String {
    if !color {
        return text.to_string();
    }
    let code = match style {
        Paint::Good => "32",
        Paint::Warn => "33",
        Paint::Bad => "31",
    };
    format!("\x1b[{code}m{text}\x1b[0m")
}

/// Splits at timestamp gaps so each run is uniformly sampled.
fn contiguous_runs(frames: &[TrajectoryFrame]) -> Vec<&[TrajectoryFrame]> {
    let mut runs = Vec::new();
    let mut start = 0;
    for i in 1..=frames.len() {
        let gap =
            i == frames.len() || frames[i].pwm.t_ms != frames[i - 1].pwm.t_ms + FRAME_PERIOD_MS;
        if gap {
            runs.push(&frames[start..i]);
            start = i;
        }
    }
    runs
}

/// Maps frames through the servo and kinematic models and runs the
/// stability analysis.
pub fn analyze_frames(
    frames: &[TrajectoryFrame],
    cfg: &RunConfig,
) -> Result<TrajectoryReport, CliError> {
    let mut rows = Vec::with_capacity(frames.len());
    for run in contiguous_runs(frames) {
        let mut angles = Vec::with_capacity(run.len());
        let mut samples = Vec::with_capacity(run.len());
        for f in run {
            let joints = frame_to_joints(&f.pwm, &cfg.servos)?;
            let pose = forward_kinematics(&cfg.geometry, &joints)?;
            angles.push(*joints.as_array());
            samples.push(PoseSample {
                t_ms: f.pwm.t_ms,
                pose,
                contacts: f.support.contacts(),
            });
        }
        let stability = if samples.len() >= 3 {
            analyze_trajectory(&samples, &cfg.geometry)?
        } else {
            // too short to difference: treat as held postures
            samples
                .iter()
                .map(|s| static_sample(s, &cfg.geometry))
                .collect::<Result<_, _>>()?
        };
        for ((f, a), st) in run.iter().zip(angles).zip(stability) {
            rows.push(ReportRow {
                t_ms: f.pwm.t_ms,
                pulses_us: f.pwm.pulses_us,
                angles_rad: a,
                com: [st.com_xy.x, st.com_xy.y, st.com_z],
                margin_m: st.margin_m,
                y_zmp: st.y_zmp,
                support: f.support.tag(),
            });
        }
    }
    Ok(TrajectoryReport { rows })
}

fn static_sample(
    s: &PoseSample,
    geom: &BipedGeometry,
) -> Result<crate::stability::StabilitySample, CliError> {
    let com = center_of_mass(geom, &s.pose)?.xyz;
    let polygon = support_polygon(&s.pose, s.contacts)?;
    let com_xy = nalgebra::Point2::new(com.x, com.y);
    Ok(crate::stability::StabilitySample {
        t_ms: s.t_ms,
        com_xy,
        com_z: com.z,
        margin_m: polygon.static_margin(&com_xy),
        polygon,
        y_mc_ddot: 0.0,
        y_zmp: zmp(com.y, 0.0, com.z, STANDARD_GRAVITY)?,
    })
}

#[derive(Debug, Clone)]
pub struct WalkOutcome {
    pub report: TrajectoryReport,
    pub exit_code: u8,
}

pub fn walk(cfg: &RunConfig) -> Result<WalkOutcome, CliError> {
    let trajectory = generate_cycle(&cfg.table, cfg.stage_duration_ms, cfg.n_cycles)?;
    let report = analyze_frames(&trajectory.frames, cfg)?;
    let exit_code = if report.all_stable() {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    };
    Ok(WalkOutcome { report, exit_code })
}

#[derive(Debug, Clone)]
pub struct ValidateOutcome {
    pub text: String,
    pub exit_code: u8,
}

/// Range checks for every stage against the servo limits, followed by the
/// narrative consistency report. Narrative mismatches never change the exit
/// code.
pub fn validate(
    table: &GaitTable,
    narrative: &NarrativeSpec,
    servos: &ServoBank,
    color: bool,
) -> Result<ValidateOutcome, CliError> {
    let mut text = String::new();
    let _ = writeln!(text, "RANGE {}", table.name());
    let mut violations = 0;
    for stage in table.stages() {
        let found = validate_frame(&PwmFrame::new(0, stage.pulses_us), servos);
        if found.is_empty() {
            let _ = writeln!(text, "stage {} ok", stage.index);
        } else {
            violations += found.len();
            let list: Vec<String> = found.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(
                text,
                "stage {} {}",
                stage.index,
                paint(&format!("VIOLATION {}", list.join(",")), Paint::Bad, color)
            );
        }
    }
    let (min, max) = table.pulse_span();
    let _ = writeln!(
        text,
        "range: {} violations, pulses span {min}..{max}",
        violations
    );

    let report = check_narrative(table, narrative, servos)?;
    let rendered = report.to_string();
    for line in rendered.lines() {
        let style = if line.ends_with(Consistency::Match.tag())
            || line.starts_with("SUMMARY")
            || line.starts_with("NARRATIVE")
        {
            None
        } else {
            Some(Paint::Warn)
        };
        match style {
            Some(p) => {
                let _ = writeln!(text, "{}", paint(line, p, color));
            }
            None => {
                let _ = writeln!(text, "{line}");
            }
        }
    }
    let exit_code = if violations == 0 {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    };
    Ok(ValidateOutcome { text, exit_code })
}

/// Loads a table for validation, keeping out-of-range pulses.
pub fn load_table_for_validation(source: &str) -> Result<GaitTable, CliError> {
    if source == BUILTIN {
        return Ok(builtin_forward_table());
    }
    let path = Path::new(source);
    tagged(path, load_gait_table_unchecked(&read_file(path)?))
}

pub fn load_narrative(source: &str) -> Result<NarrativeSpec, CliError> {
    if source == BUILTIN {
        return Ok(NarrativeSpec::builtin_forward());
    }
    let path = Path::new(source);
    tagged(path, NarrativeSpec::parse(&read_file(path)?))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScriptStep {
    Command(crate::comm::Command),
    Wait(u64),
}

/// `CMD ...` and `WAIT <ms>` lines; `#` comments and blank lines are skipped.
pub fn parse_script(text: &str) -> Result<Vec<ScriptStep>, CliError> {
    let mut steps = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        if let Some(ms) = line.strip_prefix("WAIT ") {
            let ms = ms.parse::<u64>().map_err(|_| CliError::Script {
                line: line_no,
                message: format!("bad WAIT duration `{ms}`"),
            })?;
            steps.push(ScriptStep::Wait(ms));
        } else if line.starts_with("CMD") {
            let cmd = parse_command(line).map_err(|source| CliError::Command {
                line: line_no,
                source,
            })?;
            steps.push(ScriptStep::Command(cmd));
        } else {
            return Err(CliError::Script {
                line: line_no,
                message: format!("expected `CMD ...` or `WAIT <ms>`, got `{line}`"),
            });
        }
    }
    Ok(steps)
}

#[derive(Debug, Clone)]
pub struct ReplayOutcome {
    /// Master lines prefixed `> `, slave replies prefixed `< `.
    pub wire_log: Vec<String>,
    pub report: TrajectoryReport,
    pub exit_code: u8,
}

/// Drives the master on a simulated clock, passes every line through the
/// slave and analyzes the frames the slave applied. After the script ends the
/// clock keeps running until the master is idle.
pub fn replay(script: &[ScriptStep], cfg: &RunConfig) -> Result<ReplayOutcome, CliError> {
    let mut master = MasterState::new(cfg.table.clone(), cfg.stage_duration_ms);
    let mut slave = SlaveState::new(cfg.servos.clone());
    let mut wire_log = Vec::new();
    let mut applied: Vec<TrajectoryFrame> = Vec::new();
    let mut clock = 0u64;

    let mut pump = |master: &mut MasterState, now: u64| {
        for e in master.tick(now) {
            let reply = slave.apply(&e.line);
            wire_log.push(format!("> {}", e.line));
            if reply.starts_with("ACK") {
                if let Some(frame) = slave.last_applied() {
                    applied.push(TrajectoryFrame {
                        pwm: *frame,
                        support: e.support,
                    });
                }
            }
            wire_log.push(format!("< {reply}"));
        }
    };

    for step in script {
        match *step {
            ScriptStep::Command(cmd) => {
                master.command(cmd)?;
                pump(&mut master, clock);
            }
            ScriptStep::Wait(ms) => {
                let target = clock + ms;
                while clock + FRAME_PERIOD_MS <= target {
                    clock += FRAME_PERIOD_MS;
                    pump(&mut master, clock);
                }
                clock = target;
                pump(&mut master, clock);
            }
        }
    }
    while let Some(next) = master.next_frame_ms() {
        clock = clock.max(next);
        pump(&mut master, clock);
    }

    let report = analyze_frames(&applied, cfg)?;
    let exit_code = if report.all_stable() {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    };
    Ok(ReplayOutcome {
        wire_log,
        report,
        exit_code,
    })
}

/// Canonical serialization of a table.
pub fn table(source: &str) -> Result<String, CliError> {
    Ok(load_table(source)?.to_string())
}
