use std::io::{BufRead, Write};

use super::profile::{ProfileLabel, ScenarioId};
use crate::error::{Error, Result};
use crate::geom::Vec2;

pub const TRAJECTORY_HEADER: &str = "tick,agent_id,kind,profile,x,y";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentKind {
    Sheep,
    Shepherd,
}

/// Recorded positions of one run.
///
/// Each frame holds the sheep in agent-id order followed by the shepherd,
/// so frame length is `n_sheep + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub positions: Vec<Vec<Vec2>>,
    pub dt: f64,
    pub profile_labels: Vec<ProfileLabel>,
    pub scenario_id: ScenarioId,
    pub seed: u64,
    /// False when the run stopped at `max_ticks` instead of the goal.
    pub reached_goal: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn n_sheep(&self) -> usize {
        self.profile_labels.len()
    }

    pub fn shepherd_index(&self) -> usize {
        self.n_sheep()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{TRAJECTORY_HEADER}")?;
        for (tick, frame) in self.positions.iter().enumerate() {
            for (id, p) in frame.iter().enumerate() {
                if id < self.n_sheep() {
                    writeln!(w, "{tick},{id},sheep,{},{},{}", self.profile_labels[id], p.x, p.y)?;
                } else {
                    writeln!(w, "{tick},{id},shepherd,,{},{}", p.x, p.y)?;
                }
            }
        }
        Ok(())
    }

    /// Parses the CSV produced by [`Trajectory::write_csv`]. Run metadata
    /// that the file does not carry is supplied by the caller.
    pub fn read_csv<R: BufRead>(
        r: R,
        scenario_id: ScenarioId,
        seed: u64,
        reached_goal: bool,
    ) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty trajectory file".into()))??;
        if header.trim() != TRAJECTORY_HEADER {
            return Err(Error::Parse(format!("unexpected header `{header}`")));
        }
        let mut positions: Vec<Vec<Vec2>> = Vec::new();
        let mut labels: Vec<ProfileLabel> = Vec::new();
        let mut shepherd_seen = false;
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |what: &str| Error::Parse(format!("line {}: {what}", lineno + 2));
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 6 {
                return Err(bad("expected 6 columns"));
            }
            let tick: usize = cols[0].parse().map_err(|_| bad("bad tick"))?;
            let id: usize = cols[1].parse().map_err(|_| bad("bad agent_id"))?;
            let x: f64 = cols[4].parse().map_err(|_| bad("bad x"))?;
            let y: f64 = cols[5].parse().map_err(|_| bad("bad y"))?;
            if tick == positions.len() {
                positions.push(Vec::new());
            } else if tick + 1 != positions.len() {
                return Err(bad("ticks out of order"));
            }
            let frame = positions.last_mut().expect("frame pushed");
            if id != frame.len() {
                return Err(bad("agent ids out of order"));
            }
            frame.push(Vec2::new(x, y));
            match cols[2] {
                "sheep" => {
                    let label: ProfileLabel = cols[3].parse()?;
                    if tick == 0 {
                        if shepherd_seen {
                            return Err(bad("sheep listed after the shepherd"));
                        }
                        labels.push(label);
                    } else if labels.get(id) != Some(&label) {
                        return Err(bad("profile changed between ticks"));
                    }
                }
                "shepherd" => {
                    if id != labels.len() {
                        return Err(bad("shepherd must be the last agent"));
                    }
                    shepherd_seen = true;
                }
                other => return Err(bad(&format!("unknown kind `{other}`"))),
            }
        }
        let width = labels.len() + 1;
        if positions.is_empty() || positions.iter().any(|f| f.len() != width) {
            return Err(Error::Parse("frames have inconsistent agent counts".into()));
        }
        Ok(Trajectory {
            positions,
            dt: 1.0,
            profile_labels: labels,
            scenario_id,
            seed,
            reached_goal,
        })
    }

    /// Applies a rotation about the origin followed by a translation.
    pub fn rigid_motion(&self, theta: f64, shift: Vec2) -> Trajectory {
        let mut out = self.clone();
        for frame in &mut out.positions {
            for p in frame.iter_mut() {
                *p = p.rotate(theta) + shift;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{run_scenario, ScenarioSpec};

    #[test]
    fn csv_round_trip_is_exact() {
        let mut spec = ScenarioSpec::canonical(ScenarioId::S1);
        spec.max_ticks = 30;
        let t = run_scenario(&spec, 4).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("tick,agent_id,kind,profile,x,y\n"));
        // 20 sheep + 1 shepherd per tick
        assert_eq!(text.lines().count(), 1 + 21 * t.len());
        let back = Trajectory::read_csv(&buf[..], t.scenario_id, t.seed, t.reached_goal).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn rejects_bad_header() {
        let err = Trajectory::read_csv(&b"a,b\n"[..], ScenarioId::S1, 0, false).unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
    }
}
