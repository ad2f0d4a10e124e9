use super::world::Snapshot;
use crate::control::TriggerMode;
use std::io::{self, Write};

/// First line of every log. Readers should refuse other versions.
pub const LOG_SCHEMA: &str = "# cotransport-log v1";

/// Column names in write order. Forces are in the payload frame.
pub const LOG_COLUMNS: &[&str] = &[
    "t",
    "generation",
    "ref_x",
    "ref_y",
    "ref_theta",
    "ref_speed",
    "ref_omega",
    "x",
    "y",
    "theta",
    "v",
    "omega",
    "v_lat",
    "c2_x",
    "c2_y",
    "c1_est_x",
    "c1_est_y",
    "v_est",
    "x_e",
    "y_e",
    "theta_e",
    "eta1",
    "eta2",
    "v2",
    "f_leader_x",
    "f_leader_y",
    "f_leader_z",
    "f_follower_x",
    "f_follower_y",
    "f_follower_z",
    "cmd_leader_x",
    "cmd_leader_y",
    "cmd_follower_x",
    "cmd_follower_y",
    "est_leader_f_x",
    "est_leader_f_y",
    "est_leader_ff_x",
    "est_leader_ff_y",
    "est_follower_f_x",
    "est_follower_f_y",
    "trigger",
    "trigger_events",
    "saturated",
    "leader_slack",
    "follower_slack",
    "leader_x",
    "leader_y",
    "leader_z",
    "follower_x",
    "follower_y",
    "follower_z",
    "cable_error",
    "bar_error",
];

/// Formats `x` with six significant digits, trimming trailing zeros.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-4..=9).contains(&exp) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.').to_string() } else { s };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

/// CSV writer for [`Snapshot`] rows.
pub struct LogWriter<W: Write> {
    out: W,
    rows: u64,
}

impl<W: Write> LogWriter<W> {
    /// Writes the schema line and the column header.
    pub fn new(mut out: W) -> io::Result<Self> {
        writeln!(out, "{LOG_SCHEMA}")?;
        writeln!(out, "{}", LOG_COLUMNS.join(","))?;
        Ok(Self { out, rows: 0 })
    }

    pub fn write(&mut self, s: &Snapshot) -> io::Result<()> {
        let b = |v: bool| if v { 1.0 } else { 0.0 };
        let values = [
            s.t,
            s.generation as f64,
            s.reference.position.x,
            s.reference.position.y,
            s.reference.theta,
            s.reference.speed,
            s.reference.omega,
            s.payload.position.x,
            s.payload.position.y,
            s.payload.theta,
            s.payload.v,
            s.payload.omega,
            s.payload.v_lat,
            s.p_c2.x,
            s.p_c2.y,
            s.p_c1_estimate.x,
            s.p_c1_estimate.y,
            s.v_estimate,
            s.error.x,
            s.error.y,
            s.error.theta,
            s.error.eta1,
            s.error.eta2,
            s.v2,
            s.forces.leader.x,
            s.forces.leader.y,
            s.forces.leader.z,
            s.forces.follower.x,
            s.forces.follower.y,
            s.forces.follower.z,
            s.leader_command.x,
            s.leader_command.y,
            s.follower_command.x,
            s.follower_command.y,
            s.leader_force_estimate.x,
            s.leader_force_estimate.y,
            s.leader_estimate.x,
            s.leader_estimate.y,
            s.follower_estimate.x,
            s.follower_estimate.y,
            b(s.trigger.mode == TriggerMode::Enabled),
            s.trigger.events as f64,
            b(s.saturated),
            b(s.leader_slack),
            b(s.follower_slack),
            s.leader_position.x,
            s.leader_position.y,
            s.leader_position.z,
            s.follower_position.x,
            s.follower_position.y,
            s.follower_position.z,
            s.cable_error,
            s.bar_error,
        ];
        debug_assert_eq!(values.len(), LOG_COLUMNS.len());
        let line = values.iter().map(|v| format_sig6(*v)).collect::<Vec<_>>().join(",");
        writeln!(self.out, "{line}")?;
        self.rows += 1;
        Ok(())
    }

    pub fn rows(&self) -> u64 {
        self.rows
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.out.flush()
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}
