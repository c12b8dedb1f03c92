//! Per agent-step transcript: one comma-separated line per record, fixed
//! field order, floats rounded to 9 significant digits.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use super::{Action, AgentId, TerminalKind};
use crate::error::{Error, Result};
use crate::kinematics::NavMode;

pub const TRANSCRIPT_HEADER: &str =
    "t,agent_id,action,reward,r_s,r_h,r_a,omega,lat,lon,alt_ft,heading,speed_kn,energy_kwh,nav_mode,terminal";

const FIELDS: usize = 16;

/// Rounds to 9 significant digits.
pub fn round9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

/// Shortest text that reads back as `round9(x)`.
pub fn sig9(x: f64) -> String {
    format!("{:?}", round9(x))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranscriptRecord {
    /// Simulation time at the end of the step, seconds.
    pub t: f64,
    pub agent_id: AgentId,
    pub action: Action,
    pub reward: f64,
    pub r_s: f64,
    pub r_h: f64,
    pub r_a: f64,
    pub omega: f64,
    pub lat: f64,
    pub lon: f64,
    pub alt_ft: f64,
    pub heading: f64,
    pub speed_kn: f64,
    pub energy_kwh: f64,
    pub nav_mode: NavMode,
    pub terminal: Option<TerminalKind>,
}

impl TranscriptRecord {
    pub fn write_line(&self, out: &mut String) {
        let floats = [
            self.reward,
            self.r_s,
            self.r_h,
            self.r_a,
            self.omega,
            self.lat,
            self.lon,
            self.alt_ft,
            self.heading,
            self.speed_kn,
            self.energy_kwh,
        ];
        let _ = write!(out, "{},{},{}", sig9(self.t), self.agent_id, self.action);
        for v in floats {
            let _ = write!(out, ",{}", sig9(v));
        }
        let _ = writeln!(
            out,
            ",{},{}",
            self.nav_mode.as_str(),
            self.terminal.map_or("", TerminalKind::as_str)
        );
    }

    pub fn parse_line(line: &str) -> std::result::Result<Self, String> {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != FIELDS {
            return Err(format!("expected {FIELDS} fields, found {}", f.len()));
        }
        let num = |i: usize| -> std::result::Result<f64, String> {
            f[i].parse::<f64>().map_err(|e| format!("field {}: {e}", i + 1))
        };
        let nav_mode = [NavMode::FollowRoute, NavMode::HoldHeading, NavMode::Descending]
            .into_iter()
            .find(|m| m.as_str() == f[14])
            .ok_or_else(|| format!("unknown nav mode `{}`", f[14]))?;
        let terminal = match f[15] {
            "" => None,
            s => Some(s.parse::<TerminalKind>().map_err(|e| e.to_string())?),
        };
        Ok(TranscriptRecord {
            t: num(0)?,
            agent_id: f[1].parse().map_err(|e| format!("agent_id: {e}"))?,
            action: f[2].parse().map_err(|e: Error| e.to_string())?,
            reward: num(3)?,
            r_s: num(4)?,
            r_h: num(5)?,
            r_a: num(6)?,
            omega: num(7)?,
            lat: num(8)?,
            lon: num(9)?,
            alt_ft: num(10)?,
            heading: num(11)?,
            speed_kn: num(12)?,
            energy_kwh: num(13)?,
            nav_mode,
            terminal,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Transcript {
    pub records: Vec<TranscriptRecord>,
}

impl Transcript {
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(160 * (self.records.len() + 1));
        out.push_str(TRANSCRIPT_HEADER);
        out.push('\n');
        for r in &self.records {
            r.write_line(&mut out);
        }
        out
    }

    pub fn write_to(&self, w: &mut impl Write) -> io::Result<()> {
        w.write_all(self.to_text().as_bytes())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h == TRANSCRIPT_HEADER => {}
            _ => {
                return Err(Error::Parse {
                    path: origin.to_path_buf(),
                    line: 1,
                    msg: "missing transcript header".into(),
                })
            }
        }
        let mut records = vec![];
        for (i, line) in lines {
            if line.is_empty() {
                continue;
            }
            records.push(TranscriptRecord::parse_line(line).map_err(|msg| Error::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                msg,
            })?);
        }
        Ok(Transcript { records })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record() -> TranscriptRecord {
        TranscriptRecord {
            t: 120.0,
            agent_id: 7,
            action: Action::LandNow,
            reward: -0.111,
            r_s: 0.0,
            r_h: 0.0,
            r_a: -0.11,
            omega: 0.001,
            lat: 40.712345678912,
            lon: -74.0061234567,
            alt_ft: 1571.4285714285713,
            heading: 359.99999999,
            speed_kn: 100.0,
            energy_kwh: 187.5,
            nav_mode: NavMode::Descending,
            terminal: Some(TerminalKind::Touchdown),
        }
    }

    #[test]
    fn sig9_examples() {
        assert_eq!(sig9(1571.4285714285713), "1571.42857");
        assert_eq!(sig9(-0.001), "-0.001");
        assert_eq!(sig9(1e-5), "1e-5");
        assert_eq!(sig9(0.0), "0.0");
        assert_eq!(sig9(40.712345678912), "40.7123457");
    }

    #[test]
    fn line_round_trip() {
        let r = record();
        let mut s = String::new();
        r.write_line(&mut s);
        assert_eq!(s.trim_end().split(',').count(), FIELDS);
        let back = TranscriptRecord::parse_line(s.trim_end()).unwrap();
        assert_eq!(back.action, r.action);
        assert_eq!(back.terminal, r.terminal);
        assert_eq!(back.lat, round9(r.lat));
        assert_eq!(back.alt_ft, round9(r.alt_ft));
    }

    #[test]
    fn text_round_trip_is_stable() {
        let t = Transcript {
            records: vec![record(), TranscriptRecord { terminal: None, ..record() }],
        };
        let text = t.to_text();
        let back = Transcript::parse(&text, Path::new("t.csv")).unwrap();
        assert_eq!(back.to_text(), text);
        assert_eq!(back.records[1].terminal, None);
    }

    #[test]
    fn parse_errors_carry_line() {
        let text = format!("{TRANSCRIPT_HEADER}\n1,2,3\n");
        match Transcript::parse(&text, Path::new("x")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(Transcript::parse("nope\n", Path::new("x")).is_err());
    }

    proptest! {
        #[test]
        fn round9_is_within_half_ulp_of_ninth_digit(x in -1e6f64..1e6) {
            let r = round9(x);
            prop_assert!((r - x).abs() <= 5e-9 * x.abs().max(f64::MIN_POSITIVE) * 1.000001);
            prop_assert_eq!(sig9(r).parse::<f64>().unwrap(), r);
        }
    }
}
