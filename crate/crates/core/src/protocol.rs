//! Line-delimited JSON control protocol, for driving an environment from
//! another process (e.g. a Python gym wrapper) over stdio.
//!
//! Every request is one JSON object per line carrying an `id` that must be
//! strictly greater than the previous request's, and a `type`:
//!
//! ```text
//! {"id":1,"type":"HELLO","version":"cmgym/1"}
//! {"id":2,"type":"RESET","seed":7}
//! {"id":3,"type":"STEP","actions":{"0":3,"4":"HEADING_LEFT"}}
//! {"id":4,"type":"CLOSE"}
//! ```
//!
//! Replies echo the id: `HELLO`, `OBS`, `STEP_RESULT`, `BYE` or `ERROR`.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::SimConfig;
use crate::env::{Action, AgentId, AgentStep, CmEnv, Observation};
use crate::error::Error;

pub const PROTOCOL_VERSION: &str = "cmgym/1";

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "SCREAMING_SNAKE_CASE", deny_unknown_fields)]
enum Request {
    Hello {
        id: u64,
        version: String,
    },
    Reset {
        id: u64,
        #[serde(default)]
        seed: Option<u64>,
    },
    Step {
        id: u64,
        #[serde(default)]
        actions: BTreeMap<String, Value>,
    },
    Close {
        id: u64,
    },
}

impl Request {
    fn id(&self) -> u64 {
        match self {
            Request::Hello { id, .. } | Request::Reset { id, .. } | Request::Step { id, .. } | Request::Close { id } => *id,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorCode {
    BadRequest,
    BadVersion,
    IdNotIncreasing,
    NotReset,
    BadAction,
    UnknownAgent,
    Internal,
}

#[derive(Debug, Serialize)]
struct AgentReply<'a> {
    observation: &'a Observation,
    reward: f64,
    done: bool,
    info: AgentInfo<'a>,
}

#[derive(Debug, Serialize)]
struct AgentInfo<'a> {
    #[serde(flatten)]
    step: &'a crate::env::StepInfo,
    action: Action,
    r_s: f64,
    r_h: f64,
    r_a: f64,
    omega: f64,
    /// Actions this agent has taken so far, indexed like `Action::ALL`.
    action_counts: [u32; Action::COUNT],
}

/// Protocol state for one connection.
pub struct Server {
    cfg: SimConfig,
    env: Option<CmEnv>,
    last_id: Option<u64>,
    counts: BTreeMap<AgentId, [u32; Action::COUNT]>,
}

impl Server {
    pub fn new(cfg: SimConfig) -> Self {
        Server {
            cfg,
            env: None,
            last_id: None,
            counts: BTreeMap::new(),
        }
    }

    /// Handles one request line. Returns the reply and whether the
    /// connection should close.
    pub fn handle_line(&mut self, line: &str) -> (Value, bool) {
        let raw: Value = match serde_json::from_str(line) {
            Ok(v) => v,
            Err(e) => return (error(None, ErrorCode::BadRequest, &format!("invalid json: {e}")), false),
        };
        let loose_id = raw.get("id").and_then(Value::as_u64);
        let req: Request = match serde_json::from_value(raw) {
            Ok(r) => r,
            Err(e) => return (error(loose_id, ErrorCode::BadRequest, &e.to_string()), false),
        };
        let id = req.id();
        if self.last_id.is_some_and(|last| id <= last) {
            return (
                error(Some(id), ErrorCode::IdNotIncreasing, &format!("id {id} is not above {}", self.last_id.unwrap())),
                false,
            );
        }
        self.last_id = Some(id);
        match req {
            Request::Hello { version, .. } => {
                if version != PROTOCOL_VERSION {
                    return (
                        error(Some(id), ErrorCode::BadVersion, &format!("server speaks {PROTOCOL_VERSION}")),
                        false,
                    );
                }
                let obs_len = CmEnv::new(self.cfg.clone()).map(|e| e.observation_len()).unwrap_or(0);
                let reply = json!({
                    "id": id,
                    "type": "HELLO",
                    "version": PROTOCOL_VERSION,
                    "observation_len": obs_len,
                    "actions": Action::ALL.iter().map(|a| a.as_str()).collect::<Vec<_>>(),
                });
                (reply, false)
            }
            Request::Reset { seed, .. } => (self.reset(id, seed.unwrap_or(self.cfg.seed)), false),
            Request::Step { actions, .. } => (self.step(id, &actions), false),
            Request::Close { .. } => (json!({"id": id, "type": "BYE"}), true),
        }
    }

    fn reset(&mut self, id: u64, seed: u64) -> Value {
        let mut env = match self.env.take() {
            Some(e) => e,
            None => match CmEnv::new(self.cfg.clone()) {
                Ok(e) => e,
                Err(e) => return error(Some(id), ErrorCode::Internal, &e.to_string()),
            },
        };
        let obs = match env.reset(seed) {
            Ok(o) => o,
            Err(e) => return error(Some(id), ErrorCode::Internal, &e.to_string()),
        };
        self.counts.clear();
        self.env = Some(env);
        json!({"id": id, "type": "OBS", "t": 0.0, "seed": seed, "observations": obs})
    }

    fn step(&mut self, id: u64, raw: &BTreeMap<String, Value>) -> Value {
        let Some(env) = self.env.as_mut() else {
            return error(Some(id), ErrorCode::NotReset, "STEP before RESET");
        };
        let mut actions = BTreeMap::new();
        for (k, v) in raw {
            let Ok(agent) = k.parse::<AgentId>() else {
                return error(Some(id), ErrorCode::BadRequest, &format!("agent key `{k}` is not an integer"));
            };
            let action = match v {
                Value::Number(n) => n.as_u64().ok_or(()).and_then(|i| Action::from_index(i as usize).map_err(|_| ())),
                Value::String(s) => s.parse::<Action>().map_err(|_| ()),
                _ => Err(()),
            };
            match action {
                Ok(a) => {
                    actions.insert(agent, a);
                }
                Err(()) => {
                    return error(
                        Some(id),
                        ErrorCode::BadAction,
                        &format!("agent {agent}: action {v} is not an index in 0..{} or a name", Action::COUNT),
                    )
                }
            }
        }
        let result = match env.step(&actions) {
            Ok(r) => r,
            Err(Error::UnknownAgent(a)) => return error(Some(id), ErrorCode::UnknownAgent, &format!("unknown agent {a}")),
            Err(e) => return error(Some(id), ErrorCode::Internal, &e.to_string()),
        };
        let mut agents = serde_json::Map::new();
        for (aid, s) in &result.agents {
            let AgentStep {
                observation,
                reward,
                breakdown,
                done,
                info,
            } = s;
            let a = actions.get(aid).copied().unwrap_or(Action::NoAlert);
            let c = self.counts.entry(*aid).or_default();
            c[a.index()] += 1;
            let reply = AgentReply {
                observation,
                reward: *reward,
                done: *done,
                info: AgentInfo {
                    step: info,
                    action: a,
                    r_s: breakdown.r_s,
                    r_h: breakdown.r_h,
                    r_a: breakdown.r_a,
                    omega: breakdown.omega,
                    action_counts: *c,
                },
            };
            agents.insert(aid.to_string(), serde_json::to_value(reply).expect("serializable"));
            if *done {
                self.counts.remove(aid);
            }
        }
        json!({
            "id": id,
            "type": "STEP_RESULT",
            "t": env.time(),
            "agents": agents,
            "spawned": result.spawned,
        })
    }
}

fn error(id: Option<u64>, code: ErrorCode, message: &str) -> Value {
    json!({"id": id, "type": "ERROR", "code": code, "message": message})
}

/// Serves requests until CLOSE or end of input.
pub fn serve(cfg: SimConfig, input: impl BufRead, mut output: impl Write) -> std::io::Result<()> {
    let mut server = Server::new(cfg);
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (reply, close) = server.handle_line(&line);
        serde_json::to_writer(&mut output, &reply)?;
        output.write_all(b"\n")?;
        output.flush()?;
        if close {
            break;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn server() -> Server {
        let mut cfg = SimConfig::default();
        cfg.scenario.fleet_size = 4;
        cfg.scenario.synthetic.ring.as_mut().unwrap().count = 4;
        cfg.scenario.synthetic.ring.as_mut().unwrap().radius_m = 5_000.0;
        Server::new(cfg)
    }

    fn ty(v: &Value) -> &str {
        v["type"].as_str().unwrap()
    }

    #[test]
    fn step_before_reset_is_an_error() {
        let mut s = server();
        let (r, close) = s.handle_line(r#"{"id":1,"type":"STEP","actions":{}}"#);
        assert_eq!(ty(&r), "ERROR");
        assert_eq!(r["code"], "NOT_RESET");
        assert!(!close);
    }

    #[test]
    fn ids_must_increase() {
        let mut s = server();
        assert_eq!(ty(&s.handle_line(r#"{"id":5,"type":"HELLO","version":"cmgym/1"}"#).0), "HELLO");
        let (r, _) = s.handle_line(r#"{"id":5,"type":"RESET"}"#);
        assert_eq!(r["code"], "ID_NOT_INCREASING");
        assert_eq!(ty(&s.handle_line(r#"{"id":6,"type":"RESET"}"#).0), "OBS");
    }

    #[test]
    fn bad_version_and_garbage() {
        let mut s = server();
        assert_eq!(s.handle_line(r#"{"id":1,"type":"HELLO","version":"x"}"#).0["code"], "BAD_VERSION");
        assert_eq!(s.handle_line("not json").0["code"], "BAD_REQUEST");
        assert_eq!(s.handle_line(r#"{"id":9,"type":"JUMP"}"#).0["code"], "BAD_REQUEST");
    }

    #[test]
    fn full_session() {
        let mut s = server();
        let (r, _) = s.handle_line(r#"{"id":1,"type":"RESET","seed":2}"#);
        let obs = r["observations"].as_object().unwrap();
        assert_eq!(obs.len(), 4);
        let first = obs.keys().next().unwrap().clone();
        let (r, _) = s.handle_line(&format!(r#"{{"id":2,"type":"STEP","actions":{{"{first}":9}}}}"#));
        assert_eq!(r["code"], "BAD_ACTION");
        let (r, _) = s.handle_line(r#"{"id":3,"type":"STEP","actions":{"999":0}}"#);
        assert_eq!(r["code"], "UNKNOWN_AGENT");
        let (r, _) = s.handle_line(&format!(r#"{{"id":4,"type":"STEP","actions":{{"{first}":"HEADING_LEFT"}}}}"#));
        assert_eq!(ty(&r), "STEP_RESULT");
        let info = &r["agents"][first.as_str()]["info"];
        assert_eq!(info["action"], "HEADING_LEFT");
        assert_eq!(info["action_counts"][0], 1);
        let (r, close) = s.handle_line(r#"{"id":5,"type":"CLOSE"}"#);
        assert_eq!(ty(&r), "BYE");
        assert!(close);
    }

    #[test]
    fn serve_stops_at_close() {
        let input = b"{\"id\":1,\"type\":\"HELLO\",\"version\":\"cmgym/1\"}\n\n{\"id\":2,\"type\":\"CLOSE\"}\n{\"id\":3,\"type\":\"RESET\"}\n";
        let mut out = vec![];
        serve(server().cfg, &input[..], &mut out).unwrap();
        let lines: Vec<&str> = std::str::from_utf8(&out).unwrap().lines().collect();
        assert_eq!(lines.len(), 2);
    }
}
