//! Per-control-step rollout log (CSV).

use std::io::Write;

use super::{Command, StepInfo};
use crate::morphology::{Foot, RobotModel};

pub const ROLLOUT_SCHEMA: &str = "rollout-v1";

pub fn rollout_header(model: &RobotModel) -> Vec<String> {
    let mut h: Vec<String> = ["time", "cmd_vx", "cmd_vy", "cmd_wz", "com_vx", "com_vy", "com_vz", "sigma"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend(Foot::ALL.iter().map(|f| format!("contact_{}", f.label())));
    h.push("contact_count".into());
    h.extend(model.joints.iter().map(|j| format!("q_{}", j.name)));
    h.extend(["r_v", "r_omega", "r_energy", "r_phase", "reward"].map(String::from));
    h
}

/// CSV writer for [`rollout_header`]-shaped rows.
pub struct RolloutWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> RolloutWriter<W> {
    pub fn new(out: W, model: &RobotModel) -> csv::Result<Self> {
        let mut inner = csv::Writer::from_writer(out);
        inner.write_record(rollout_header(model))?;
        Ok(RolloutWriter { inner })
    }

    pub fn write(&mut self, command: &Command, info: &StepInfo, q: &[f64]) -> csv::Result<()> {
        let mut row: Vec<String> = Vec::with_capacity(20 + q.len());
        let num = |x: f64| format!("{x:.6}");
        row.push(num(info.time));
        row.extend(command.to_array().map(num));
        row.extend(info.com_velocity.map(num));
        row.push(info.sigma.to_string());
        row.extend(info.contacts.map(|c| u8::from(c).to_string()));
        row.push(info.contact_count.to_string());
        row.extend(q.iter().map(|&x| num(x)));
        let t = &info.terms;
        row.extend([t.r_v, t.r_omega, t.r_energy, t.r_phase, t.total].map(|x| format!("{x:.9}")));
        self.inner.write_record(row)
    }

    pub fn into_inner(self) -> std::io::Result<W> {
        self.inner.into_inner().map_err(|e| e.into_error())
    }
}
