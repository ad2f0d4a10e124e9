use super::world::Snapshot;
use crate::control::{LeaderGains, TriggerMode};
use crate::model::PayloadParams;
use serde::{Deserialize, Serialize};

/// Samples before this time are excluded from the Lyapunov monotonicity check [s].
pub const V2_TRANSIENT: f64 = 2.0;

/// Window before a trajectory switch used as the steady-state baseline [s].
pub const SWITCH_BASELINE: f64 = 20.0;
/// Window after a switch over which recovery is measured, as `(start, end)` offsets [s].
pub const SWITCH_RECOVERY: (f64, f64) = (8.0, 10.0);

/// Run summary. Statistics over an empty window are `None`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub name: String,
    pub seed: u64,
    /// Integration steps included in the statistics.
    pub samples: u64,
    pub rmse_x: Option<f64>,
    pub rmse_y: Option<f64>,
    pub rmse_theta: Option<f64>,
    pub rmse_eta1: Option<f64>,
    pub rmse_eta2: Option<f64>,
    pub std_x: Option<f64>,
    pub std_y: Option<f64>,
    pub std_theta: Option<f64>,
    pub std_eta1: Option<f64>,
    pub std_eta2: Option<f64>,
    /// RMSE of the leader's estimate of the follower force, payload frame.
    pub leader_force_rmse_x: Option<f64>,
    pub leader_force_rmse_y: Option<f64>,
    /// RMS of the full 3-D estimate error over RMS of the true follower force.
    pub leader_force_relative_error: Option<f64>,
    /// RMSE of the follower's own cable-force estimate, payload frame.
    pub follower_force_rmse_x: Option<f64>,
    pub follower_force_rmse_y: Option<f64>,
    pub trigger_events: u32,
    /// Steps spent in force-following mode.
    pub trigger_enabled_steps: u64,
    /// Largest step-to-step increase of `V2` after the initial transient.
    pub max_v2_increase: Option<f64>,
    /// RMS residual of the closed-loop `eta` dynamics, from finite differences.
    /// Stencils touching saturation or slack cables are skipped.
    pub eta_residual_rms: Option<f64>,
    pub saturated_steps: u64,
    pub slack_steps: u64,
    pub offset_clamped_steps: u64,
    /// RMS lateral velocity of `c2` over mean longitudinal speed.
    pub lateral_speed_ratio: Option<f64>,
    pub max_cable_error: Option<f64>,
    pub max_bar_error: Option<f64>,
    pub max_attitude_defect: Option<f64>,
    pub switch: Option<SwitchMetrics>,
}

/// Tracking error around a trajectory switch.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SwitchMetrics {
    pub time: f64,
    pub baseline_rms_x: Option<f64>,
    pub baseline_rms_y: Option<f64>,
    pub recovery_rms_x: Option<f64>,
    pub recovery_rms_y: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn rms(&self) -> Option<f64> {
        (self.n > 0).then(|| (self.sum_sq / self.n as f64).sqrt())
    }

    fn mean(&self) -> Option<f64> {
        (self.n > 0).then(|| self.sum / self.n as f64)
    }

    fn std(&self) -> Option<f64> {
        let mean = self.mean()?;
        Some((self.sum_sq / self.n as f64 - mean * mean).max(0.0).sqrt())
    }
}

#[derive(Debug, Clone, Copy)]
struct ResidualSample {
    t: f64,
    eta1: f64,
    eta2: f64,
    /// Expected `eta` rates from the closed-loop model.
    model1: f64,
    model2: f64,
    valid: bool,
    generation: u64,
}

/// Streaming accumulator fed one [`Snapshot`] per integration step.
#[derive(Debug, Clone)]
pub struct MetricsAccumulator {
    name: String,
    seed: u64,
    start: f64,
    gains: LeaderGains,
    params: PayloadParams,
    switch_time: Option<f64>,
    samples: u64,
    x: Moments,
    y: Moments,
    theta: Moments,
    eta1: Moments,
    eta2: Moments,
    leader_fx: Moments,
    leader_fy: Moments,
    leader_err3: Moments,
    leader_true3: Moments,
    follower_fx: Moments,
    follower_fy: Moments,
    trigger_events: u32,
    trigger_enabled: u64,
    last_v2: Option<f64>,
    max_v2_increase: Option<f64>,
    window: Vec<ResidualSample>,
    residual: Moments,
    saturated: u64,
    slack: u64,
    clamped: u64,
    v_lat: Moments,
    speed: Moments,
    max_cable: Option<f64>,
    max_bar: Option<f64>,
    max_defect: Option<f64>,
    pre: (Moments, Moments),
    post: (Moments, Moments),
}

fn max_opt(a: Option<f64>, b: f64) -> Option<f64> {
    Some(a.map_or(b, |a| a.max(b)))
}

impl MetricsAccumulator {
    pub fn new(name: &str, seed: u64, start: f64, gains: LeaderGains, params: PayloadParams, switch_time: Option<f64>) -> Self {
        Self {
            name: name.to_string(),
            seed,
            start,
            gains,
            params,
            switch_time,
            samples: 0,
            x: Moments::default(),
            y: Moments::default(),
            theta: Moments::default(),
            eta1: Moments::default(),
            eta2: Moments::default(),
            leader_fx: Moments::default(),
            leader_fy: Moments::default(),
            leader_err3: Moments::default(),
            leader_true3: Moments::default(),
            follower_fx: Moments::default(),
            follower_fy: Moments::default(),
            trigger_events: 0,
            trigger_enabled: 0,
            last_v2: None,
            max_v2_increase: None,
            window: Vec::with_capacity(5),
            residual: Moments::default(),
            saturated: 0,
            slack: 0,
            clamped: 0,
            v_lat: Moments::default(),
            speed: Moments::default(),
            max_cable: None,
            max_bar: None,
            max_defect: None,
            pre: Default::default(),
            post: Default::default(),
        }
    }

    pub fn push(&mut self, s: &Snapshot) {
        self.trigger_events = s.trigger.events;
        self.push_switch(s);
        self.push_residual(s);
        if s.t >= V2_TRANSIENT {
            if let Some(prev) = self.last_v2 {
                self.max_v2_increase = max_opt(self.max_v2_increase, s.v2 - prev);
            }
            self.last_v2 = Some(s.v2);
        }
        self.max_cable = max_opt(self.max_cable, s.cable_error);
        self.max_bar = max_opt(self.max_bar, s.bar_error);
        self.max_defect = max_opt(self.max_defect, s.attitude_defect);
        if s.t < self.start {
            return;
        }
        self.samples += 1;
        let e = &s.error;
        self.x.push(e.x);
        self.y.push(e.y);
        self.theta.push(e.theta);
        self.eta1.push(e.eta1);
        self.eta2.push(e.eta2);
        let truth = s.forces.follower;
        let le = s.leader_estimate - truth;
        self.leader_fx.push(le.x);
        self.leader_fy.push(le.y);
        self.leader_err3.push(le.norm());
        self.leader_true3.push(truth.norm());
        let fe = s.follower_estimate - truth;
        self.follower_fx.push(fe.x);
        self.follower_fy.push(fe.y);
        if s.trigger.mode == TriggerMode::Enabled {
            self.trigger_enabled += 1;
        }
        self.saturated += u64::from(s.saturated);
        self.slack += u64::from(s.leader_slack || s.follower_slack);
        self.clamped += u64::from(s.offset_clamped);
        self.v_lat.push(s.lateral_velocity);
        self.speed.push(s.payload.v.abs());
    }

    fn push_switch(&mut self, s: &Snapshot) {
        let Some(ts) = self.switch_time else { return };
        if s.t > ts - SWITCH_BASELINE && s.t <= ts {
            self.pre.0.push(s.error.x);
            self.pre.1.push(s.error.y);
        }
        if s.t >= ts + SWITCH_RECOVERY.0 && s.t <= ts + SWITCH_RECOVERY.1 {
            self.post.0.push(s.error.x);
            self.post.1.push(s.error.y);
        }
    }

    fn push_residual(&mut self, s: &Snapshot) {
        let g = &self.gains;
        let e = &s.error;
        let sample = ResidualSample {
            t: s.t,
            eta1: e.eta1,
            eta2: e.eta2,
            model1: -g.kv * e.eta1 - e.x - s.forces.follower.x / self.params.mass,
            model2: -g.k_omega * e.eta2 - e.theta.sin() / g.k2,
            valid: !s.saturated && !s.leader_slack && !s.follower_slack,
            generation: s.generation,
        };
        if self.window.len() == 5 {
            self.window.remove(0);
        }
        self.window.push(sample);
        if self.window.len() < 5 || self.window[2].t < self.start {
            return;
        }
        let w = &self.window;
        if w.iter().any(|p| !p.valid || p.generation != w[0].generation) {
            return;
        }
        let h = (w[4].t - w[0].t) / 4.0;
        let d = |f: fn(&ResidualSample) -> f64| (f(&w[0]) - 8.0 * f(&w[1]) + 8.0 * f(&w[3]) - f(&w[4])) / (12.0 * h);
        let r1 = d(|p| p.eta1) - w[2].model1;
        let r2 = d(|p| p.eta2) - w[2].model2;
        self.residual.push(r1);
        self.residual.push(r2);
    }

    pub fn finish(&self) -> Metrics {
        let ratio = match (self.v_lat.rms(), self.speed.mean()) {
            (Some(r), Some(m)) if m > 0.0 => Some(r / m),
            _ => None,
        };
        let relative = match (self.leader_err3.rms(), self.leader_true3.rms()) {
            (Some(e), Some(t)) if t > 0.0 => Some(e / t),
            _ => None,
        };
        Metrics {
            name: self.name.clone(),
            seed: self.seed,
            samples: self.samples,
            rmse_x: self.x.rms(),
            rmse_y: self.y.rms(),
            rmse_theta: self.theta.rms(),
            rmse_eta1: self.eta1.rms(),
            rmse_eta2: self.eta2.rms(),
            std_x: self.x.std(),
            std_y: self.y.std(),
            std_theta: self.theta.std(),
            std_eta1: self.eta1.std(),
            std_eta2: self.eta2.std(),
            leader_force_rmse_x: self.leader_fx.rms(),
            leader_force_rmse_y: self.leader_fy.rms(),
            leader_force_relative_error: relative,
            follower_force_rmse_x: self.follower_fx.rms(),
            follower_force_rmse_y: self.follower_fy.rms(),
            trigger_events: self.trigger_events,
            trigger_enabled_steps: self.trigger_enabled,
            max_v2_increase: self.max_v2_increase,
            eta_residual_rms: self.residual.rms(),
            saturated_steps: self.saturated,
            slack_steps: self.slack,
            offset_clamped_steps: self.clamped,
            lateral_speed_ratio: ratio,
            max_cable_error: self.max_cable,
            max_bar_error: self.max_bar,
            max_attitude_defect: self.max_defect,
            switch: self.switch_time.map(|time| SwitchMetrics {
                time,
                baseline_rms_x: self.pre.0.rms(),
                baseline_rms_y: self.pre.1.rms(),
                recovery_rms_x: self.post.0.rms(),
                recovery_rms_y: self.post.1.rms(),
            }),
        }
    }
}

impl Metrics {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("metrics serialize");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments() {
        let mut m = Moments::default();
        assert_eq!(m.rms(), None);
        for x in [3.0, -3.0, 3.0, -3.0] {
            m.push(x);
        }
        assert_eq!(m.rms(), Some(3.0));
        assert_eq!(m.std(), Some(3.0));
        assert_eq!(m.mean(), Some(0.0));
    }
}
