//! Per-step state trace and its CSV form.

use std::io::{self, Write};

use super::camera::Measurement;
use super::world::WorldState;
use crate::Vec3;

pub const SCHEMA_LINE: &str = "#schema=v1";

pub const HEADER: &str =
    "kind,time,chaser_x,chaser_y,chaser_z,chaser_vx,chaser_vy,chaser_vz,chaser_yaw,\
carrier_x,carrier_y,carrier_z,ball_x,ball_y,ball_z,ball_vx,ball_vy,ball_vz,alpha,beta,\
status,phase,visible,range,azimuth,elevation,cmd_x,cmd_y,cmd_z,event";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Step,
    Event,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub kind: RowKind,
    pub time: f64,
    pub chaser_position: Vec3,
    pub chaser_velocity: Vec3,
    pub chaser_yaw: f64,
    pub carrier_position: Vec3,
    pub ball_position: Vec3,
    pub ball_velocity: Vec3,
    pub alpha: f64,
    pub beta: f64,
    pub status: &'static str,
    pub phase: &'static str,
    pub measurement: Option<Measurement>,
    pub command: Vec3,
    pub event: String,
}

impl TraceRow {
    pub fn step(w: &WorldState, phase: &'static str, measurement: Option<Measurement>) -> Self {
        Self {
            kind: RowKind::Step,
            time: w.time,
            chaser_position: w.chaser_position,
            chaser_velocity: w.chaser_velocity,
            chaser_yaw: w.chaser_yaw,
            carrier_position: w.carrier.position,
            ball_position: w.ball_position,
            ball_velocity: w.ball_velocity,
            alpha: w.pendulum.alpha,
            beta: w.pendulum.beta,
            status: w.status.as_str(),
            phase,
            measurement,
            command: w.command,
            event: String::new(),
        }
    }

    pub fn event(w: &WorldState, phase: &'static str, event: String) -> Self {
        Self {
            kind: RowKind::Event,
            event,
            ..Self::step(w, phase, None)
        }
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let kind = match self.kind {
            RowKind::Step => "step",
            RowKind::Event => "event",
        };
        let c = &self.chaser_position;
        let cv = &self.chaser_velocity;
        let k = &self.carrier_position;
        let b = &self.ball_position;
        let bv = &self.ball_velocity;
        write!(
            out,
            "{kind},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},",
            self.time,
            c.x,
            c.y,
            c.z,
            cv.x,
            cv.y,
            cv.z,
            self.chaser_yaw,
            k.x,
            k.y,
            k.z,
            b.x,
            b.y,
            b.z,
            bv.x,
            bv.y,
            bv.z,
            self.alpha,
            self.beta,
            self.status,
            self.phase
        )?;
        match &self.measurement {
            Some(m) => write!(out, "1,{},{},{},", m.range, m.azimuth, m.elevation)?,
            None => write!(out, "0,,,,")?,
        }
        let a = &self.command;
        // events never contain commas or quotes
        writeln!(out, "{},{},{},{}", a.x, a.y, a.z, self.event)
    }
}

pub fn write_csv<W: Write>(rows: &[TraceRow], out: &mut W) -> io::Result<()> {
    writeln!(out, "{SCHEMA_LINE}")?;
    writeln!(out, "{HEADER}")?;
    for r in rows {
        r.write_csv(out)?;
    }
    Ok(())
}
