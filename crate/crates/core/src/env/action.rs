use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{normalize_heading, Projection};
use crate::kinematics::{AircraftState, NavMode};

/// The six discrete contingency actions, in wire/index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Action {
    HeadingLeft,
    HeadingHold,
    HeadingRight,
    LandNow,
    NoAlert,
    UseRoute,
}

impl Action {
    pub const ALL: [Action; 6] = [
        Action::HeadingLeft,
        Action::HeadingHold,
        Action::HeadingRight,
        Action::LandNow,
        Action::NoAlert,
        Action::UseRoute,
    ];
    pub const COUNT: usize = 6;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Result<Self> {
        Action::ALL
            .get(i)
            .copied()
            .ok_or_else(|| Error::range(format!("action index {i} outside 0..{}", Action::COUNT)))
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Action::HeadingLeft => "HEADING_LEFT",
            Action::HeadingHold => "HEADING_HOLD",
            Action::HeadingRight => "HEADING_RIGHT",
            Action::LandNow => "LAND_NOW",
            Action::NoAlert => "NO_ALERT",
            Action::UseRoute => "USE_ROUTE",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Action {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Action::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::range(format!("unknown action `{s}`")))
    }
}

/// Applies an action's mode change. Motion itself happens in the integrator.
pub fn apply_action(s: &mut AircraftState, a: Action, heading_step_deg: f64, proj: &Projection) {
    match a {
        Action::HeadingLeft | Action::HeadingHold | Action::HeadingRight => {
            let delta = match a {
                Action::HeadingLeft => -heading_step_deg,
                Action::HeadingRight => heading_step_deg,
                _ => 0.0,
            };
            s.held_heading_deg = normalize_heading(s.heading_deg + delta);
            s.nav_mode = NavMode::HoldHeading;
        }
        Action::LandNow => s.nav_mode = NavMode::Descending,
        Action::NoAlert => {}
        Action::UseRoute => {
            s.active_waypoint = s.route.nearest_waypoint(s.local(proj));
            s.nav_mode = NavMode::FollowRoute;
            s.refresh_route_distance(proj);
        }
    }
}
