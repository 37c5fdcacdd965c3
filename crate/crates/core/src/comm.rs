//! Master/slave controller emulation over a line-based text protocol.
//!
//! Commands (`CMD FWD <n>`, `CMD STOP`, `CMD DUR <ms>`) drive the master,
//! which streams PWM frames to the slave as checksummed lines:
//!
//! ```text
//! F <t_ms> <p1> ... <p10> *<CK>
//! ```
//!
//! `CK` is two uppercase hex digits, the XOR of every byte before the space
//! that precedes `*`. The slave answers `ACK <t_ms>` or `ERR <code> <detail>`.

use std::fmt;

use thiserror::Error;

use crate::gait::{generate_cycle, GaitError, GaitTable, Support, Trajectory, TrajectoryFrame};
use crate::model::JOINT_COUNT;
use crate::servo::{validate_frame, PwmFrame, ServoBank, FRAME_PERIOD_MS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Forward { cycles: u32 },
    Stop,
    SetStageDuration { ms: u64 },
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::Forward { cycles } => write!(f, "CMD FWD {cycles}"),
            Command::Stop => f.write_str("CMD STOP"),
            Command::SetStageDuration { ms } => write!(f, "CMD DUR {ms}"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CommandError {
    #[error("malformed command `{0}`")]
    Malformed(String),
    #[error("unknown verb `{0}`")]
    UnknownVerb(String),
    #[error("argument `{0}` is not a positive integer")]
    BadArgument(String),
    #[error("cycles must be ≥ 1 (got `{0}`)")]
    ZeroCycles(String),
    #[error("stage duration `{0}` must be a positive multiple of 20 ms")]
    BadDuration(String),
}

/// Parses one command line. Tokens are separated by exactly one space.
pub fn parse_command(line: &str) -> Result<Command, CommandError> {
    let tokens: Vec<&str> = line.split(' ').collect();
    if tokens.iter().any(|t| t.is_empty()) || tokens.first() != Some(&"CMD") {
        return Err(CommandError::Malformed(line.to_string()));
    }
    let arg = |token: &str| -> Result<u64, CommandError> {
        if token.is_empty() || !token.bytes().all(|b| b.is_ascii_digit()) {
            return Err(CommandError::BadArgument(token.to_string()));
        }
        token
            .parse::<u64>()
            .map_err(|_| CommandError::BadArgument(token.to_string()))
    };
    match tokens[1..] {
        ["FWD", n] => {
            let cycles = arg(n)?;
            if cycles == 0 {
                return Err(CommandError::ZeroCycles(n.to_string()));
            }
            let cycles =
                u32::try_from(cycles).map_err(|_| CommandError::BadArgument(n.to_string()))?;
            Ok(Command::Forward { cycles })
        }
        ["STOP"] => Ok(Command::Stop),
        ["DUR", ms_token] => {
            let ms = arg(ms_token)?;
            if ms == 0 || ms % FRAME_PERIOD_MS != 0 {
                return Err(CommandError::BadDuration(ms_token.to_string()));
            }
            Ok(Command::SetStageDuration { ms })
        }
        [verb, ..] if !matches!(verb, "FWD" | "STOP" | "DUR") => {
            Err(CommandError::UnknownVerb(verb.to_string()))
        }
        _ => Err(CommandError::Malformed(line.to_string())),
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WireError {
    #[error("checksum mismatch: line carries {found:02X}, computed {computed:02X}")]
    Checksum { found: u8, computed: u8 },
    #[error("malformed frame: {0}")]
    Malformed(String),
    #[error("expected 10 pulses, found {found}")]
    Arity { found: usize },
}

fn xor_checksum(bytes: &[u8]) -> u8 {
    bytes.iter().fold(0, |acc, b| acc ^ b)
}

pub fn encode_frame(frame: &PwmFrame) -> String {
    let mut body = format!("F {}", frame.t_ms);
    for p in frame.pulses_us {
        body.push(' ');
        body.push_str(&p.to_string());
    }
    let ck = xor_checksum(body.as_bytes());
    format!("{body} *{ck:02X}")
}

/// Canonical unsigned decimal: digits only, no leading zeros.
fn parse_decimal<T: std::str::FromStr>(token: &str) -> Option<T> {
    let canonical = !token.is_empty()
        && token.bytes().all(|b| b.is_ascii_digit())
        && (token == "0" || !token.starts_with('0'));
    canonical.then(|| token.parse().ok()).flatten()
}

fn parse_hex_byte(ck: &str) -> Option<u8> {
    let ok = ck.len() == 2 && ck.bytes().all(|b| matches!(b, b'0'..=b'9' | b'A'..=b'F'));
    ok.then(|| u8::from_str_radix(ck, 16).ok()).flatten()
}

/// Verifies the checksum, then parses the fields.
pub fn decode_frame(line: &str) -> Result<PwmFrame, WireError> {
    let (body, ck) = line
        .rsplit_once(" *")
        .ok_or_else(|| WireError::Malformed("missing ` *` checksum separator".into()))?;
    let found = parse_hex_byte(ck).ok_or_else(|| {
        WireError::Malformed(format!(
            "checksum field `{ck}` is not two uppercase hex digits"
        ))
    })?;
    let computed = xor_checksum(body.as_bytes());
    if found != computed {
        return Err(WireError::Checksum { found, computed });
    }

    let tokens: Vec<&str> = body.split(' ').collect();
    if tokens[0] != "F" {
        return Err(WireError::Malformed(format!(
            "expected `F`, got `{}`",
            tokens[0]
        )));
    }
    let t_token = tokens
        .get(1)
        .ok_or_else(|| WireError::Malformed("missing timestamp".into()))?;
    let t_ms = parse_decimal::<u64>(t_token)
        .ok_or_else(|| WireError::Malformed(format!("bad timestamp `{t_token}`")))?;
    let pulse_tokens = &tokens[2..];
    if pulse_tokens.len() != JOINT_COUNT {
        return Err(WireError::Arity {
            found: pulse_tokens.len(),
        });
    }
    let mut pulses_us = [0u32; JOINT_COUNT];
    for (slot, token) in pulses_us.iter_mut().zip(pulse_tokens) {
        *slot = parse_decimal(token)
            .ok_or_else(|| WireError::Malformed(format!("bad pulse `{token}`")))?;
    }
    Ok(PwmFrame::new(t_ms, pulses_us))
}

/// A frame leaving the master, with the support phase it was planned for.
/// The support tag is simulation metadata and never goes on the wire.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Emission {
    pub line: String,
    pub frame: PwmFrame,
    pub support: Support,
}

#[derive(Debug, Clone)]
struct Walk {
    trajectory: Trajectory,
    start_ms: u64,
    cursor: usize,
    /// Last index to emit once a stop has been requested.
    stop_at: Option<usize>,
    /// Indices of the stage-1 frames that close each cycle, plus the hold frame.
    boundaries: Vec<usize>,
}

impl Walk {
    fn frame_time(&self, index: usize) -> u64 {
        self.start_ms + self.trajectory.frames[index].pwm.t_ms
    }

    fn end(&self) -> usize {
        match self.stop_at {
            Some(stop) => stop + 1,
            None => self.trajectory.len(),
        }
    }
}

/// The master controller. Time is supplied by the caller through
/// [`tick`](MasterState::tick).
#[derive(Debug, Clone)]
pub struct MasterState {
    table: GaitTable,
    stage_duration_ms: u64,
    clock_ms: u64,
    last_emitted_ms: Option<u64>,
    walk: Option<Walk>,
}

impl MasterState {
    pub fn new(table: GaitTable, stage_duration_ms: u64) -> Self {
        Self {
            table,
            stage_duration_ms,
            clock_ms: 0,
            last_emitted_ms: None,
            walk: None,
        }
    }

    pub fn is_running(&self) -> bool {
        self.walk.is_some()
    }

    pub fn stage_duration_ms(&self) -> u64 {
        self.stage_duration_ms
    }

    fn frames_per_cycle(&self) -> usize {
        self.table.stages().len() * (self.stage_duration_ms / FRAME_PERIOD_MS) as usize
    }

    fn cycle_boundaries(&self, base: usize, cycles: u32) -> impl Iterator<Item = usize> {
        let per_cycle = self.frames_per_cycle();
        (1..=cycles as usize).map(move |c| base + c * per_cycle)
    }

    /// Applies a command at the current clock. A forward command while
    /// walking appends cycles; stop drains to the next stage-1 frame.
    pub fn command(&mut self, cmd: Command) -> Result<(), GaitError> {
        match cmd {
            Command::SetStageDuration { ms } => {
                if ms == 0 || ms % FRAME_PERIOD_MS != 0 {
                    return Err(GaitError::InvalidDuration {
                        duration_ms: ms,
                        period_ms: FRAME_PERIOD_MS,
                    });
                }
                self.stage_duration_ms = ms;
            }
            Command::Forward { cycles } => {
                let fresh = generate_cycle(&self.table, self.stage_duration_ms, cycles as usize)?;
                let base = self.walk.as_ref().map_or(0, |w| w.trajectory.len() - 1);
                let boundaries: Vec<usize> = self.cycle_boundaries(base, cycles).collect();
                match self.walk.as_mut() {
                    Some(walk) => {
                        let offset = walk.trajectory.frames.last().map_or(0, |f| f.pwm.t_ms);
                        walk.trajectory
                            .frames
                            .extend(fresh.frames.iter().skip(1).map(|f| TrajectoryFrame {
                                pwm: PwmFrame::new(f.pwm.t_ms + offset, f.pwm.pulses_us),
                                support: f.support,
                            }));
                        walk.boundaries.extend(boundaries);
                        walk.stop_at = None;
                    }
                    None => {
                        let earliest = match self.last_emitted_ms {
                            Some(t) => self.clock_ms.max(t + FRAME_PERIOD_MS),
                            None => self.clock_ms,
                        };
                        let start_ms = earliest.div_ceil(FRAME_PERIOD_MS) * FRAME_PERIOD_MS;
                        self.walk = Some(Walk {
                            trajectory: fresh,
                            start_ms,
                            cursor: 0,
                            stop_at: None,
                            boundaries: std::iter::once(0).chain(boundaries).collect(),
                        });
                    }
                }
            }
            Command::Stop => {
                if let Some(walk) = self.walk.as_mut() {
                    let last_sent = walk.cursor.saturating_sub(1);
                    let stop = walk
                        .boundaries
                        .iter()
                        .copied()
                        .find(|&b| b >= last_sent)
                        .unwrap_or(walk.trajectory.len() - 1);
                    walk.stop_at = Some(stop);
                    if walk.cursor >= walk.end() {
                        self.walk = None;
                    }
                }
            }
        }
        Ok(())
    }

    /// Emits every pending frame with timestamp ≤ `now_ms`.
    pub fn tick(&mut self, now_ms: u64) -> Vec<Emission> {
        self.clock_ms = self.clock_ms.max(now_ms);
        let mut out = Vec::new();
        let Some(walk) = self.walk.as_mut() else {
            return out;
        };
        while walk.cursor < walk.end() && walk.frame_time(walk.cursor) <= self.clock_ms {
            let planned = &walk.trajectory.frames[walk.cursor];
            let frame = PwmFrame::new(walk.frame_time(walk.cursor), planned.pwm.pulses_us);
            out.push(Emission {
                line: encode_frame(&frame),
                frame,
                support: planned.support,
            });
            self.last_emitted_ms = Some(frame.t_ms);
            walk.cursor += 1;
        }
        if walk.cursor >= walk.end() {
            self.walk = None;
        }
        out
    }

    /// Timestamp of the next frame to be emitted, if walking.
    pub fn next_frame_ms(&self) -> Option<u64> {
        self.walk.as_ref().map(|w| w.frame_time(w.cursor))
    }
}

pub const ERR_CHECKSUM: u8 = 1;
pub const ERR_PARSE: u8 = 2;
pub const ERR_RANGE: u8 = 3;

/// The servo controller. Only frames that pass range validation are applied.
#[derive(Debug, Clone)]
pub struct SlaveState {
    servos: ServoBank,
    last_applied: Option<PwmFrame>,
    error_count: u64,
}

impl SlaveState {
    pub fn new(servos: ServoBank) -> Self {
        Self {
            servos,
            last_applied: None,
            error_count: 0,
        }
    }

    pub fn last_applied(&self) -> Option<&PwmFrame> {
        self.last_applied.as_ref()
    }

    pub fn error_count(&self) -> u64 {
        self.error_count
    }

    pub fn servos(&self) -> &ServoBank {
        &self.servos
    }

    /// Handles one wire line and returns the reply line.
    pub fn apply(&mut self, line: &str) -> String {
        let frame = match decode_frame(line) {
            Ok(frame) => frame,
            Err(e) => {
                self.error_count += 1;
                let code = match e {
                    WireError::Checksum { .. } => ERR_CHECKSUM,
                    WireError::Malformed(_) | WireError::Arity { .. } => ERR_PARSE,
                };
                return format!("ERR {code} {e}");
            }
        };
        let violations = validate_frame(&frame, &self.servos);
        if !violations.is_empty() {
            self.error_count += 1;
            let detail: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            return format!("ERR {ERR_RANGE} {}", detail.join(","));
        }
        self.last_applied = Some(frame);
        format!("ACK {}", frame.t_ms)
    }
}
