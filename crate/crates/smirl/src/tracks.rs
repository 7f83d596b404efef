//! Track recordings in the INTERACTION-style CSV layout.
//!
//! Columns: `case_id, track_id, frame_id, timestamp_ms, agent_role, x_m,
//! y_m, vx_mps, vy_mps, psi_rad`. `agent_role` is `ego` or `other`;
//! `psi_rad` may be empty, in which case the heading follows the velocity.
//! Extra columns are ignored. Frames are 100 ms apart.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use smirl_core::types::validate_demonstration;
use smirl_core::{Demonstration, State, Trajectory};

use crate::error::{Error, Result};
use crate::geometry::GeometryFile;

pub const COLUMNS: [&str; 10] = [
    "case_id",
    "track_id",
    "frame_id",
    "timestamp_ms",
    "agent_role",
    "x_m",
    "y_m",
    "vx_mps",
    "vy_mps",
    "psi_rad",
];

/// Frame spacing of every track, milliseconds.
pub const FRAME_MS: i64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Ego,
    Other,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::Ego => "ego",
            Role::Other => "other",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackRow {
    pub case_id: String,
    pub track_id: String,
    pub frame_id: u64,
    pub timestamp_ms: i64,
    pub role: Role,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub psi: Option<f64>,
}

impl TrackRow {
    pub fn state(&self) -> State {
        let psi = self.psi.unwrap_or_else(|| self.vy.atan2(self.vx));
        State::new(self.x, self.y, psi, self.vx.hypot(self.vy))
    }
}

/// Parses a track file. Any malformed row is an error naming its line.
pub fn read_tracks(reader: impl Read) -> Result<Vec<TrackRow>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let mut idx = [0usize; 10];
    for (k, name) in COLUMNS.iter().enumerate() {
        idx[k] = headers.iter().position(|h| h == *name).ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("missing column '{name}'"),
        })?;
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |k: usize| rec.get(idx[k]).unwrap_or("");
        let bad = |k: usize, what: &str| Error::Parse {
            line,
            message: format!("{} '{}': {what}", COLUMNS[k], field(k)),
        };
        let num = |k: usize| -> Result<f64> {
            let v: f64 = field(k).parse().map_err(|_| bad(k, "not a number"))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(bad(k, "not finite"))
            }
        };
        let role = match field(4) {
            "ego" => Role::Ego,
            "other" => Role::Other,
            _ => return Err(bad(4, "expected 'ego' or 'other'")),
        };
        let case_id = field(0).to_string();
        if case_id.is_empty() {
            return Err(bad(0, "empty"));
        }
        rows.push(TrackRow {
            case_id,
            track_id: field(1).to_string(),
            frame_id: field(2).parse().map_err(|_| bad(2, "not an unsigned integer"))?,
            timestamp_ms: field(3).parse().map_err(|_| bad(3, "not an integer"))?,
            role,
            x: num(5)?,
            y: num(6)?,
            vx: num(7)?,
            vy: num(8)?,
            psi: if field(9).is_empty() { None } else { Some(num(9)?) },
        });
    }
    Ok(rows)
}

/// Writes rows with the exact header; numbers use the shortest text that
/// parses back to the same value.
pub fn write_tracks(rows: &[TrackRow], writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(COLUMNS).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.case_id.clone(),
            r.track_id.clone(),
            r.frame_id.to_string(),
            r.timestamp_ms.to_string(),
            r.role.name().to_string(),
            r.x.to_string(),
            r.y.to_string(),
            r.vx.to_string(),
            r.vy.to_string(),
            r.psi.map(|p| p.to_string()).unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))
}

/// Rows of one trajectory.
pub fn trajectory_rows(case_id: &str, track_id: &str, role: Role, t: &Trajectory) -> Vec<TrackRow> {
    t.states
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let ms = ((t.t0 + k as f64 * t.dt) * 1000.0).round() as i64;
            TrackRow {
                case_id: case_id.to_string(),
                track_id: track_id.to_string(),
                frame_id: (ms / FRAME_MS) as u64,
                timestamp_ms: ms,
                role,
                x: s.x,
                y: s.y,
                vx: s.v * s.psi.cos(),
                vy: s.v * s.psi.sin(),
                psi: Some(s.psi),
            }
        })
        .collect()
}

/// Rows of a demonstration: ego track `1`, other vehicle track `2`.
pub fn demonstration_rows(d: &Demonstration) -> Vec<TrackRow> {
    let mut rows = trajectory_rows(&d.id, "1", Role::Ego, &d.ego);
    if let Some(o) = &d.scenario.other_agent {
        rows.extend(trajectory_rows(&d.id, "2", Role::Other, o));
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LoadOutcome {
    pub demos: Vec<Demonstration>,
    pub warnings: Vec<String>,
}

fn to_trajectory(rows: &[&TrackRow]) -> std::result::Result<Trajectory, String> {
    for w in rows.windows(2) {
        if w[1].timestamp_ms - w[0].timestamp_ms != FRAME_MS {
            return Err(format!(
                "track {} has a gap between {} ms and {} ms",
                w[0].track_id, w[0].timestamp_ms, w[1].timestamp_ms
            ));
        }
    }
    Ok(Trajectory::new(
        rows[0].timestamp_ms as f64 / 1000.0,
        FRAME_MS as f64 / 1000.0,
        rows.iter().map(|r| r.state()).collect(),
    ))
}

/// Groups rows by case into demonstrations.
///
/// The ego track becomes the demonstration; an `other` track becomes the
/// interacting vehicle, kept whole, while the ego track is trimmed to the
/// overlap of both. Cases with frame gaps, disjoint time ranges or invalid
/// content are skipped with a warning. An ego track with fewer than three
/// states is an error.
pub fn load_tracks(rows: &[TrackRow], geometry: &GeometryFile) -> Result<LoadOutcome> {
    let mut order: Vec<&str> = Vec::new();
    let mut cases: BTreeMap<&str, Vec<&TrackRow>> = BTreeMap::new();
    for r in rows {
        let e = cases.entry(&r.case_id).or_default();
        if e.is_empty() {
            order.push(&r.case_id);
        }
        e.push(r);
    }
    let mut out = LoadOutcome::default();
    for id in order {
        let case = &cases[id];
        let mut ego: Vec<&TrackRow> = case.iter().copied().filter(|r| r.role == Role::Ego).collect();
        let mut other: Vec<&TrackRow> = case.iter().copied().filter(|r| r.role == Role::Other).collect();
        ego.sort_by_key(|r| r.timestamp_ms);
        other.sort_by_key(|r| r.timestamp_ms);
        if ego.is_empty() {
            out.warnings.push(format!("case {id}: no ego track, skipped"));
            continue;
        }
        if ego.len() < 3 {
            return Err(Error::Format(format!(
                "case {id}: ego track has {} states, N ≥ 3 required",
                ego.len()
            )));
        }
        let tracks = |rs: &[&TrackRow]| rs.iter().map(|r| r.track_id.as_str()).collect::<std::collections::BTreeSet<_>>().len();
        if tracks(&ego) > 1 || tracks(&other) > 1 {
            out.warnings.push(format!("case {id}: more than one track per role, skipped"));
            continue;
        }
        let Some(site) = geometry.for_case(id) else {
            return Err(Error::Format(format!("case {id}: no geometry")));
        };
        let other_traj = if other.is_empty() {
            None
        } else {
            let lo = ego[0].timestamp_ms.max(other[0].timestamp_ms);
            let hi = ego[ego.len() - 1].timestamp_ms.min(other[other.len() - 1].timestamp_ms);
            if lo > hi {
                out.warnings.push(format!("case {id}: ego and other time ranges are disjoint, skipped"));
                continue;
            }
            ego.retain(|r| r.timestamp_ms >= lo && r.timestamp_ms <= hi);
            if ego.len() < 3 {
                out.warnings.push(format!("case {id}: overlap shorter than three frames, skipped"));
                continue;
            }
            match to_trajectory(&other) {
                Ok(t) => Some(t),
                Err(msg) => {
                    out.warnings.push(format!("case {id}: {msg}, skipped"));
                    continue;
                }
            }
        };
        let ego_traj = match to_trajectory(&ego) {
            Ok(t) => t,
            Err(msg) => {
                out.warnings.push(format!("case {id}: {msg}, skipped"));
                continue;
            }
        };
        let d = Demonstration {
            id: id.to_string(),
            ego: ego_traj,
            scenario: site.scenario(other_traj),
        };
        let violations = validate_demonstration(&d);
        if !violations.is_empty() {
            let list: Vec<String> = violations.iter().map(ToString::to_string).collect();
            out.warnings.push(format!("case {id}: {}, skipped", list.join("; ")));
            continue;
        }
        out.demos.push(d);
    }
    Ok(out)
}

/// Reads a track file and its geometry from disk.
pub fn load_track_file(path: &std::path::Path, geometry: &GeometryFile) -> Result<LoadOutcome> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let rows = read_tracks(std::io::BufReader::new(f)).map_err(|e| match e {
        Error::Parse { line, message } => Error::Format(format!("{}: line {line}: {message}", path.display())),
        other => other,
    })?;
    load_tracks(&rows, geometry)
}
