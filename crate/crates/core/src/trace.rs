//! Time-indexed run log with a fixed column schema.
//!
//! One record per control step. The CSV layout is versioned: a header row
//! with the exact column names below, in this order, preceded by nothing.
//! Floats are written with Rust's shortest round-trip formatting, so equal
//! runs produce byte-identical files and values re-parse exactly.

use std::fs;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::math::Vec3;

/// Schema version recorded in metrics files next to each trace.
pub const TRACE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed trace: {0}")]
    Malformed(String),
}

macro_rules! trace_fields {
    ($m:ident) => {
        $m!(
            t,
            pos_x, pos_y, pos_z,
            vel_x, vel_y, vel_z,
            roll, pitch, yaw,
            rate_x, rate_y, rate_z,
            des_pos_x, des_pos_y, des_pos_z,
            des_vel_x, des_vel_y, des_vel_z,
            des_acc_x, des_acc_y, des_acc_z,
            des_yaw,
            ref_roll, ref_pitch, ref_yaw,
            ref_rate_x, ref_rate_y, ref_rate_z,
            ref_acc_x, ref_acc_y, ref_acc_z,
            e_o1_x, e_o1_y, e_o1_z,
            e_o2_x, e_o2_y, e_o2_z,
            e_i1_x, e_i1_y, e_i1_z,
            e_i2_x, e_i2_y, e_i2_z,
            force_x, force_y, force_z,
            torque_x, torque_y, torque_z,
            theta1_hat,
            theta2_hat_x, theta2_hat_y, theta2_hat_z,
            h1,
            h2_x, h2_y, h2_z,
            p1,
            p1_excess,
            p2_lambda_min,
            p2_lambda_min_excess,
            p2_norm,
            psi2f_norm,
            dist_force_x, dist_force_y, dist_force_z,
            dist_torque_x, dist_torque_y, dist_torque_z,
            acc1_x, acc1_y, acc1_z,
            acc2_x, acc2_y, acc2_z,
            v1,
            v2,
            p_inv_h1,
            p_inv_h2_norm,
            ident_outer,
            ident_inner,
            sat_active
        );
    };
}

macro_rules! define_record {
    ($($name:ident),+ $(,)?) => {
        /// One logged step. Field order defines the CSV column order.
        #[derive(Debug, Clone, Copy, PartialEq, Default)]
        pub struct TraceRecord {
            $(pub $name: f64,)+
        }

        impl TraceRecord {
            pub const COLUMNS: &'static [&'static str] = &[$(stringify!($name)),+];

            fn write_csv_row(&self, out: &mut String) {
                let mut first = true;
                $(
                    if !first { out.push(','); }
                    first = false;
                    push_float(out, self.$name);
                )+
                let _ = first;
                out.push('\n');
            }

            fn from_slice(values: &[f64]) -> Self {
                let mut iter = values.iter().copied();
                Self {
                    $($name: iter.next().unwrap_or(0.0),)+
                }
            }
        }
    };
}

trace_fields!(define_record);

fn push_float(out: &mut String, v: f64) {
    // Shortest round-trip representation; deterministic for identical bits.
    out.push_str(&format!("{v}"));
}

/// A complete run log.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimTrace {
    pub records: Vec<TraceRecord>,
}

impl SimTrace {
    pub fn new() -> Self {
        Self {
            records: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn push(&mut self, record: TraceRecord) {
        if let Some(last) = self.records.last() {
            debug_assert!(record.t > last.t, "trace times must strictly increase");
        }
        self.records.push(record);
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn column(&self, extract: impl Fn(&TraceRecord) -> f64) -> Vec<f64> {
        self.records.iter().map(extract).collect()
    }

    pub fn force_norms(&self) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| Vec3::new(r.force_x, r.force_y, r.force_z).norm())
            .collect()
    }

    /// Serializes the trace to CSV (header plus one row per record).
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 + self.records.len() * 256);
        out.push_str(&TraceRecord::COLUMNS.join(","));
        out.push('\n');
        for record in &self.records {
            record.write_csv_row(&mut out);
        }
        out
    }

    /// Writes the CSV atomically: a temporary file in the target directory is
    /// renamed over the destination, so a crash cannot leave a truncated file.
    pub fn write_csv(&self, path: &Path) -> Result<(), TraceError> {
        write_atomic(path, self.to_csv().as_bytes())
    }

    /// Parses a trace CSV produced by [`SimTrace::to_csv`]. Column names must
    /// match the current schema exactly.
    pub fn from_csv(text: &str) -> Result<Self, TraceError> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| TraceError::Malformed("empty file".into()))?;
        let names: Vec<&str> = header.split(',').collect();
        if names != TraceRecord::COLUMNS {
            return Err(TraceError::Malformed(format!(
                "header mismatch: expected {} columns of schema v{}, got {}",
                TraceRecord::COLUMNS.len(),
                TRACE_SCHEMA_VERSION,
                names.len()
            )));
        }
        let mut records = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let mut values = Vec::with_capacity(TraceRecord::COLUMNS.len());
            for field in line.split(',') {
                let v: f64 = field.parse().map_err(|_| {
                    TraceError::Malformed(format!("row {}: bad float '{}'", i + 2, field))
                })?;
                values.push(v);
            }
            if values.len() != TraceRecord::COLUMNS.len() {
                return Err(TraceError::Malformed(format!(
                    "row {}: expected {} fields, got {}",
                    i + 2,
                    TraceRecord::COLUMNS.len(),
                    values.len()
                )));
            }
            records.push(TraceRecord::from_slice(&values));
        }
        Ok(Self { records })
    }

    pub fn read_csv(path: &Path) -> Result<Self, TraceError> {
        let text = fs::read_to_string(path).map_err(|source| TraceError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_csv(&text)
    }
}

/// Atomic file write used for every artifact this crate produces.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), TraceError> {
    let io_err = |source| TraceError::Io {
        path: path.display().to_string(),
        source,
    };
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir).map_err(io_err)?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("out"),
        std::process::id()
    ));
    {
        let mut f = fs::File::create(&tmp).map_err(io_err)?;
        f.write_all(bytes).map_err(io_err)?;
        f.sync_all().map_err(io_err)?;
    }
    fs::rename(&tmp, path).map_err(io_err)
}
