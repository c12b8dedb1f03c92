//! Point-mass aircraft motion: turn-rate limited heading, acceleration limited
//! speed, wind drift, route following and vertical descent.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::geo::{
    heading_delta, knots_to_ms, ms_to_knots, normalize_heading, GeoPoint, LocalXY, Projection, STANDARD_GRAVITY,
};
use crate::hazards::WindVector;
use crate::scenario::VertiportId;

pub const MAX_SPEED_KN: f64 = 120.0;
pub const MAX_ALTITUDE_FT: f64 = 5000.0;
pub const MIN_ACCEL_G: f64 = 0.1;
pub const MAX_ACCEL_G: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KinematicsConfig {
    /// Not given by the source model; a tunable default.
    pub turn_rate_deg_s: f64,
    /// Horizontal distance at which a route waypoint counts as reached.
    pub capture_radius_m: f64,
    pub descent_rate_fpm: f64,
    /// Horizontal acceleration limit assigned to new aircraft, in g.
    pub accel_limit_g: f64,
}

impl Default for KinematicsConfig {
    fn default() -> Self {
        KinematicsConfig {
            turn_rate_deg_s: 6.0,
            capture_radius_m: 100.0,
            descent_rate_fpm: 500.0,
            accel_limit_g: 0.2,
        }
    }
}

impl KinematicsConfig {
    pub fn validate(&self) -> crate::Result<()> {
        use crate::Error;
        if !(self.turn_rate_deg_s > 0.0 && self.turn_rate_deg_s.is_finite()) {
            return Err(Error::config("kinematics.turn_rate_deg_s must be positive"));
        }
        if !(self.capture_radius_m > 0.0 && self.capture_radius_m.is_finite()) {
            return Err(Error::config("kinematics.capture_radius_m must be positive"));
        }
        if !(self.descent_rate_fpm > 0.0 && self.descent_rate_fpm.is_finite()) {
            return Err(Error::config("kinematics.descent_rate_fpm must be positive"));
        }
        if !(MIN_ACCEL_G..=MAX_ACCEL_G).contains(&self.accel_limit_g) {
            return Err(Error::config(format!(
                "kinematics.accel_limit_g must lie in [{MIN_ACCEL_G}, {MAX_ACCEL_G}]"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NavMode {
    FollowRoute,
    HoldHeading,
    Descending,
}

impl NavMode {
    pub fn as_str(self) -> &'static str {
        match self {
            NavMode::FollowRoute => "FOLLOW_ROUTE",
            NavMode::HoldHeading => "HOLD_HEADING",
            NavMode::Descending => "DESCENDING",
        }
    }
}

/// Immutable waypoint polyline shared between an aircraft and its flight plan.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutePath {
    points: Vec<GeoPoint>,
    local: Vec<LocalXY>,
    /// `suffix_m[i]`: polyline length from waypoint `i` to the last waypoint
    suffix_m: Vec<f64>,
    lane_ft: f64,
}

impl RoutePath {
    pub fn new(points: Vec<GeoPoint>, lane_ft: f64, proj: &Projection) -> Self {
        let local: Vec<LocalXY> = points.iter().map(|p| proj.to_local(*p)).collect();
        let mut suffix_m = vec![0.0; points.len()];
        for i in (0..points.len().saturating_sub(1)).rev() {
            suffix_m[i] = suffix_m[i + 1] + local[i].distance(&local[i + 1]);
        }
        RoutePath {
            points,
            local,
            suffix_m,
            lane_ft,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[GeoPoint] {
        &self.points
    }

    pub fn local(&self) -> &[LocalXY] {
        &self.local
    }

    pub fn lane_ft(&self) -> f64 {
        self.lane_ft
    }

    pub fn total_length_m(&self) -> f64 {
        self.suffix_m.first().copied().unwrap_or(0.0)
    }

    /// Distance from `from` along the route, entering at waypoint `active`.
    pub fn remaining_from(&self, from: LocalXY, active: usize) -> f64 {
        match self.local.get(active) {
            Some(wp) => from.distance(wp) + self.suffix_m[active],
            None => self.local.last().map_or(0.0, |wp| from.distance(wp)),
        }
    }

    /// Shortest distance from `p` to any leg of the polyline.
    pub fn cross_track_m(&self, p: LocalXY) -> f64 {
        if self.local.len() == 1 {
            return p.distance(&self.local[0]);
        }
        self.local
            .windows(2)
            .map(|leg| segment_distance(p, leg[0], leg[1]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Index of the waypoint closest to `p`, ignoring the departure point.
    pub fn nearest_waypoint(&self, p: LocalXY) -> usize {
        let start = usize::from(self.local.len() > 1);
        (start..self.local.len())
            .min_by(|&a, &b| p.distance(&self.local[a]).total_cmp(&p.distance(&self.local[b])))
            .unwrap_or(0)
    }
}

fn segment_distance(p: LocalXY, a: LocalXY, b: LocalXY) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.distance(&a);
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    p.distance(&LocalXY::new(a.x + t * dx, a.y + t * dy))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AircraftState {
    pub id: crate::env::AgentId,
    /// Fleet index of the physical vehicle flying this leg.
    pub tail: u32,
    pub position: GeoPoint,
    pub altitude_ft: f64,
    pub heading_deg: f64,
    /// Commanded-frame speed through the air mass.
    pub airspeed_kn: f64,
    pub ground_speed_kn: f64,
    pub accel_limit_g: f64,
    pub cruise_speed_kn: f64,
    pub energy_kwh: f64,
    pub charge_cycles: u32,
    pub route: Arc<RoutePath>,
    /// Index of the waypoint currently targeted.
    pub active_waypoint: usize,
    pub route_distance_remaining_m: f64,
    pub nav_mode: NavMode,
    /// Heading latched by the last heading-change action.
    pub held_heading_deg: f64,
    pub nav_lost: bool,
    pub destination: VertiportId,
}

impl AircraftState {
    pub fn is_landed(&self) -> bool {
        self.altitude_ft <= 0.0
    }

    pub fn local(&self, proj: &Projection) -> LocalXY {
        proj.to_local(self.position)
    }

    pub fn refresh_route_distance(&mut self, proj: &Projection) {
        self.route_distance_remaining_m = self.route.remaining_from(proj.to_local(self.position), self.active_waypoint);
    }
}

/// What happened during a kinematic update beyond plain integration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct KinematicsReport {
    pub command_clamped: bool,
    pub ground_speed_clamped: bool,
}

impl KinematicsReport {
    pub fn merge(&mut self, other: KinematicsReport) {
        self.command_clamped |= other.command_clamped;
        self.ground_speed_clamped |= other.ground_speed_clamped;
    }
}

/// Integrates horizontal motion over `dt` seconds toward the commanded heading
/// and speed. Out-of-range commands are clamped and reported, never rejected.
pub fn step_kinematics(
    s: &mut AircraftState,
    commanded_heading: f64,
    commanded_speed_kn: f64,
    wind: WindVector,
    dt: f64,
    cfg: &KinematicsConfig,
    proj: &Projection,
) -> KinematicsReport {
    debug_assert!(dt > 0.0);
    let mut report = KinematicsReport::default();

    let target_heading = if commanded_heading.is_finite() {
        normalize_heading(commanded_heading)
    } else {
        report.command_clamped = true;
        s.heading_deg
    };
    let target_speed = if commanded_speed_kn.is_finite() {
        let c = commanded_speed_kn.clamp(0.0, MAX_SPEED_KN);
        report.command_clamped |= c != commanded_speed_kn;
        c
    } else {
        report.command_clamped = true;
        s.airspeed_kn
    };

    let max_turn = cfg.turn_rate_deg_s * dt;
    let turn = heading_delta(s.heading_deg, target_heading).clamp(-max_turn, max_turn);
    s.heading_deg = normalize_heading(s.heading_deg + turn);

    let v = knots_to_ms(s.airspeed_kn);
    let max_dv = s.accel_limit_g * STANDARD_GRAVITY * dt;
    let dv = (knots_to_ms(target_speed) - v).clamp(-max_dv, max_dv);
    s.airspeed_kn = ms_to_knots(v + dv).clamp(0.0, MAX_SPEED_KN);

    let v = knots_to_ms(s.airspeed_kn);
    let (sin_h, cos_h) = s.heading_deg.to_radians().sin_cos();
    let mut north = v * cos_h + wind.north;
    let mut east = v * sin_h + wind.east;
    let ground = north.hypot(east);
    let limit = knots_to_ms(MAX_SPEED_KN);
    if ground > limit {
        north *= limit / ground;
        east *= limit / ground;
        report.ground_speed_clamped = true;
    }
    s.ground_speed_kn = ms_to_knots(north.hypot(east)).min(MAX_SPEED_KN);
    s.position = proj.displace(s.position, east * dt, north * dt);
    s.refresh_route_distance(proj);
    report
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RouteCommand {
    Fly { heading_deg: f64, speed_kn: f64 },
    /// No waypoint left to fly to; the caller should start descending.
    Exhausted,
}

/// Selects the route-following command, capturing waypoints that are within
/// the capture radius. On the final leg the commanded speed follows a stopping
/// profile so the aircraft comes to rest over the destination.
pub fn advance_route(s: &mut AircraftState, cfg: &KinematicsConfig, proj: &Projection) -> RouteCommand {
    let here = proj.to_local(s.position);
    let route = Arc::clone(&s.route);
    let wps = route.local();
    while let Some(wp) = wps.get(s.active_waypoint) {
        let d = here.distance(wp);
        if d <= cfg.capture_radius_m {
            s.active_waypoint += 1;
            continue;
        }
        let mut speed = s.cruise_speed_kn;
        if s.active_waypoint + 1 == wps.len() {
            let decel = s.accel_limit_g * STANDARD_GRAVITY;
            speed = speed.min(ms_to_knots((2.0 * decel * d).sqrt()));
        }
        return RouteCommand::Fly {
            heading_deg: here.bearing_to(wp),
            speed_kn: speed,
        };
    }
    RouteCommand::Exhausted
}

/// Vertical descent at the configured rate with horizontal speed bleeding off.
pub fn descend(
    s: &mut AircraftState,
    wind: WindVector,
    dt: f64,
    cfg: &KinematicsConfig,
    proj: &Projection,
) -> KinematicsReport {
    let report = step_kinematics(s, s.heading_deg, 0.0, wind, dt, cfg, proj);
    s.altitude_ft = (s.altitude_ft - cfg.descent_rate_fpm * dt / 60.0).max(0.0);
    report
}


#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const CALM: WindVector = WindVector { north: 0.0, east: 0.0 };

    fn haversine_m(a: GeoPoint, b: GeoPoint) -> f64 {
        let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
        let dp = p2 - p1;
        let dl = (b.lon - a.lon).to_radians();
        let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
        2.0 * crate::geo::EARTH_RADIUS_M * h.sqrt().asin()
    }

    #[test]
    fn cruise_east_one_second() {
        let proj = projection();
        let mut s = aircraft(&proj, vec![proj.origin()]);
        s.heading_deg = 90.0;
        s.airspeed_kn = 120.0;
        step_kinematics(&mut s, 90.0, 120.0, CALM, 1.0, &KinematicsConfig::default(), &proj);
        let xy = proj.to_local(s.position);
        assert_abs_diff_eq!(xy.x, 61.733, epsilon = 1e-3);
        assert_abs_diff_eq!(xy.y, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.ground_speed_kn, 120.0, epsilon = 1e-9);
    }

    #[test]
    fn opposing_wind_cancels_motion() {
        let proj = projection();
        let mut s = aircraft(&proj, vec![proj.origin()]);
        s.heading_deg = 90.0;
        s.airspeed_kn = 50.0;
        let wind = WindVector {
            north: 0.0,
            east: -knots_to_ms(50.0),
        };
        step_kinematics(&mut s, 90.0, 50.0, wind, 1.0, &KinematicsConfig::default(), &proj);
        assert!(proj.to_local(s.position).distance(&LocalXY::default()) < 1e-9);
        assert!(s.ground_speed_kn < 1e-9);
    }

    #[test]
    fn acceleration_is_limited() {
        let proj = projection();
        let mut s = aircraft(&proj, vec![proj.origin()]);
        s.accel_limit_g = 0.1;
        step_kinematics(&mut s, 0.0, 120.0, CALM, 1.0, &KinematicsConfig::default(), &proj);
        // 0.1 * 9.80665 m/s^2 over one second
        assert_abs_diff_eq!(knots_to_ms(s.airspeed_kn), 0.980665, epsilon = 1e-9);
        assert_abs_diff_eq!(s.airspeed_kn, 1.906, epsilon = 1e-3);
    }

    #[test]
    fn turn_does_not_overshoot() {
        let proj = projection();
        let cfg = KinematicsConfig::default();
        let mut s = aircraft(&proj, vec![proj.origin()]);
        s.heading_deg = 350.0;
        step_kinematics(&mut s, 20.0, 0.0, CALM, 1.0, &cfg, &proj);
        assert_abs_diff_eq!(s.heading_deg, 356.0, epsilon = 1e-9);
        step_kinematics(&mut s, 20.0, 0.0, CALM, 10.0, &cfg, &proj);
        assert_abs_diff_eq!(s.heading_deg, 20.0, epsilon = 1e-9);
    }

    #[test]
    fn bad_commands_are_clamped_and_reported() {
        let proj = projection();
        let mut s = aircraft(&proj, vec![proj.origin()]);
        let r = step_kinematics(&mut s, f64::NAN, 500.0, CALM, 1.0, &KinematicsConfig::default(), &proj);
        assert!(r.command_clamped);
        assert!(s.airspeed_kn <= MAX_SPEED_KN);
        assert_eq!(s.heading_deg, 0.0);
    }

    #[test]
    fn tailwind_ground_speed_is_capped() {
        let proj = projection();
        let mut s = aircraft(&proj, vec![proj.origin()]);
        s.airspeed_kn = 120.0;
        let r = step_kinematics(
            &mut s,
            0.0,
            120.0,
            WindVector { north: 20.0, east: 0.0 },
            1.0,
            &KinematicsConfig::default(),
            &proj,
        );
        assert!(r.ground_speed_clamped);
        assert_abs_diff_eq!(s.ground_speed_kn, 120.0, epsilon = 1e-9);
    }

    #[test]
    fn bearing_north_when_due_south() {
        let proj = projection();
        let o = proj.origin();
        let wp = GeoPoint::new(o.lat + 0.05, o.lon).unwrap();
        let mut s = aircraft(&proj, vec![o, wp]);
        match advance_route(&mut s, &KinematicsConfig::default(), &proj) {
            RouteCommand::Fly { heading_deg, .. } => assert_abs_diff_eq!(heading_deg, 0.0, epsilon = 1e-9),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn capture_advances_waypoint() {
        let proj = projection();
        let o = proj.origin();
        let near = proj.unproject(LocalXY::new(0.0, 50.0));
        let far = proj.unproject(LocalXY::new(0.0, 5000.0));
        let mut s = aircraft(&proj, vec![o, near, far]);
        assert_eq!(s.active_waypoint, 1);
        advance_route(&mut s, &KinematicsConfig::default(), &proj);
        assert_eq!(s.active_waypoint, 2);
    }

    #[test]
    fn empty_route_is_exhausted() {
        let proj = projection();
        let mut s = aircraft(&proj, vec![]);
        assert_eq!(
            advance_route(&mut s, &KinematicsConfig::default(), &proj),
            RouteCommand::Exhausted
        );
    }

    #[test]
    fn three_waypoint_route_trace() {
        let proj = projection();
        let cfg = KinematicsConfig::default();
        let pts = vec![
            proj.unproject(LocalXY::new(0.0, 0.0)),
            proj.unproject(LocalXY::new(3000.0, 0.0)),
            proj.unproject(LocalXY::new(3000.0, 4000.0)),
            proj.unproject(LocalXY::new(-1000.0, 6000.0)),
        ];
        let great_circle: f64 = pts.windows(2).map(|w| haversine_m(w[0], w[1])).sum();
        let mut s = aircraft(&proj, pts);
        s.heading_deg = 90.0;
        s.airspeed_kn = s.cruise_speed_kn;
        // local planar lengths agree with great-circle legs at this scale
        assert!((s.route_distance_remaining_m - great_circle).abs() / great_circle < 1e-3);

        let mut captured = vec![];
        let mut last = s.route_distance_remaining_m;
        let mut strictly_decreasing = true;
        for _ in 0..2000 {
            let before = s.active_waypoint;
            match advance_route(&mut s, &cfg, &proj) {
                RouteCommand::Fly { heading_deg, speed_kn } => {
                    if s.active_waypoint != before {
                        captured.push(before);
                    }
                    step_kinematics(&mut s, heading_deg, speed_kn, CALM, 1.0, &cfg, &proj);
                }
                RouteCommand::Exhausted => {
                    if s.active_waypoint != before {
                        captured.push(before);
                    }
                    break;
                }
            }
            if s.route_distance_remaining_m >= last {
                strictly_decreasing = false;
            }
            last = s.route_distance_remaining_m;
        }
        assert_eq!(captured, vec![1, 2, 3]);
        assert!(strictly_decreasing);
        // the stopping profile brings the aircraft to rest close to the destination
        let end = proj.to_local(s.position);
        assert!(end.distance(&LocalXY::new(-1000.0, 6000.0)) <= cfg.capture_radius_m);
    }

    #[test]
    fn descent_examples() {
        let proj = projection();
        let cfg = KinematicsConfig::default();
        let mut s = aircraft(&proj, vec![proj.origin()]);
        s.altitude_ft = 1000.0;
        descend(&mut s, CALM, 60.0, &cfg, &proj);
        assert_abs_diff_eq!(s.altitude_ft, 500.0, epsilon = 1e-9);

        s.altitude_ft = 100.0;
        descend(&mut s, CALM, 60.0, &cfg, &proj);
        assert_eq!(s.altitude_ft, 0.0);
        assert!(s.is_landed());

        s.altitude_ft = 1000.0;
        let mut t = 0.0;
        while !s.is_landed() {
            descend(&mut s, CALM, 1.0, &cfg, &proj);
            t += 1.0;
        }
        assert!((t - 120.0_f64).abs() <= 1.0);
    }

    #[test]
    fn descent_bleeds_horizontal_speed() {
        let proj = projection();
        let cfg = KinematicsConfig::default();
        let mut s = aircraft(&proj, vec![proj.origin()]);
        s.airspeed_kn = 60.0;
        let mut prev = s.airspeed_kn;
        for _ in 0..30 {
            descend(&mut s, CALM, 1.0, &cfg, &proj);
            assert!(s.airspeed_kn <= prev);
            prev = s.airspeed_kn;
        }
        assert_eq!(s.airspeed_kn, 0.0);
    }

    proptest! {
        #[test]
        fn heading_and_speed_stay_in_range(
            h0 in 0.0f64..360.0,
            v0 in 0.0f64..=120.0,
            cmds in proptest::collection::vec((-720.0f64..720.0, -50.0f64..200.0, -30.0f64..30.0, -30.0f64..30.0), 1..40),
        ) {
            let proj = projection();
            let cfg = KinematicsConfig::default();
            let mut s = aircraft(&proj, vec![proj.origin()]);
            s.heading_deg = h0;
            s.airspeed_kn = v0;
            for (h, v, wn, we) in cmds {
                step_kinematics(&mut s, h, v, WindVector { north: wn, east: we }, 1.0, &cfg, &proj);
                prop_assert!((0.0..360.0).contains(&s.heading_deg));
                prop_assert!((0.0..=MAX_SPEED_KN).contains(&s.airspeed_kn));
                prop_assert!((0.0..=MAX_SPEED_KN).contains(&s.ground_speed_kn));
            }
        }

        #[test]
        fn straight_flight_distance_matches(speed in 1.0f64..120.0, heading in 0.0f64..360.0, k in 1usize..200) {
            let proj = projection();
            let cfg = KinematicsConfig::default();
            let mut s = aircraft(&proj, vec![proj.origin()]);
            s.heading_deg = heading;
            s.airspeed_kn = speed;
            for _ in 0..k {
                step_kinematics(&mut s, heading, speed, CALM, 1.0, &cfg, &proj);
            }
            let d = proj.to_local(s.position).distance(&LocalXY::default());
            let expected = knots_to_ms(speed) * k as f64;
            prop_assert!((d - expected).abs() / expected < 1e-6);
        }

        #[test]
        fn altitude_monotone_while_descending(alt in 0.0f64..5000.0, steps in 1usize..400) {
            let proj = projection();
            let cfg = KinematicsConfig::default();
            let mut s = aircraft(&proj, vec![proj.origin()]);
            s.altitude_ft = alt;
            s.nav_mode = NavMode::Descending;
            let mut prev = alt;
            for _ in 0..steps {
                descend(&mut s, CALM, 1.0, &cfg, &proj);
                prop_assert!(s.altitude_ft <= prev);
                prop_assert!(s.altitude_ft >= 0.0);
                prev = s.altitude_ft;
            }
        }
    }
}
