use serde::{Deserialize, Serialize};
use std::io::{self, Write};

/// Provenance needed to regenerate a trajectory bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub seed: u64,
    pub member: u64,
    pub config_hash: String,
    pub dt_s: f64,
    pub duration_s: f64,
    pub sample_period_s: f64,
}

/// Uniformly sampled positions (m) and velocities (m/s).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub position: Vec<[f64; 3]>,
    pub velocity: Vec<[f64; 3]>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn sample_period(&self) -> f64 {
        self.meta.sample_period_s
    }

    pub fn sample_rate(&self) -> f64 {
        1.0 / self.meta.sample_period_s
    }

    /// Position samples along one axis (0 = x, 1 = y, 2 = z).
    pub fn axis(&self, axis: usize) -> Vec<f64> {
        self.position.iter().map(|p| p[axis]).collect()
    }

    pub fn velocity_axis(&self, axis: usize) -> Vec<f64> {
        self.velocity.iter().map(|v| v[axis]).collect()
    }

    /// Drops samples before `t0`.
    pub fn skip_until(&self, t0: f64) -> Self {
        let start = self.t.partition_point(|&t| t < t0);
        Self {
            t: self.t[start..].to_vec(),
            position: self.position[start..].to_vec(),
            velocity: self.velocity[start..].to_vec(),
            meta: self.meta.clone(),
        }
    }

    /// CSV with columns `t,x,y,z,vx,vy,vz`, preceded by one `#` line with
    /// the config hash and seed.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# config_hash={} seed={} member={}", self.meta.config_hash, self.meta.seed, self.meta.member)?;
        writeln!(w, "t,x,y,z,vx,vy,vz")?;
        for ((t, p), v) in self.t.iter().zip(&self.position).zip(&self.velocity) {
            writeln!(w, "{t:e},{:e},{:e},{:e},{:e},{:e},{:e}", p[0], p[1], p[2], v[0], v[1], v[2])?;
        }
        Ok(())
    }

    pub fn write_meta_json<W: Write>(&self, w: W) -> io::Result<()> {
        serde_json::to_writer_pretty(w, &self.meta).map_err(io::Error::other)
    }
}
