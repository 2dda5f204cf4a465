use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::params::ParamState;

pub const TRACE_COLUMNS: [&str; 14] = [
    "k",
    "alpha",
    "gamma",
    "beta",
    "eta",
    "theta",
    "gap",
    "H",
    "bound",
    "dist_x",
    "dist_y",
    "dv2",
    "dw2",
    "descent_residual",
];

/// One row of a run trace. Fields a run cannot supply are `None`
/// (no saddle known, baseline method, or last row).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRecord {
    pub k: usize,
    pub params: Option<ParamState>,
    pub gap: Option<f64>,
    pub h: Option<f64>,
    pub bound: Option<f64>,
    pub dist_x: Option<f64>,
    pub dist_y: Option<f64>,
    pub dv2: Option<f64>,
    pub dw2: Option<f64>,
    pub descent_residual: Option<f64>,
}

fn cell(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

/// Shortest representation that parses back to the same double.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        let mut buf = ryu::Buffer::new();
        buf.format_finite(v).to_string()
    } else if v.is_nan() {
        "NaN".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn write_trace_csv<W: Write>(records: &[TraceRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_COLUMNS)?;
    for r in records {
        let p = r.params.as_ref();
        let row = [
            r.k.to_string(),
            cell(p.map(|p| p.alpha)),
            cell(p.map(|p| p.gamma)),
            cell(p.map(|p| p.beta)),
            cell(p.map(|p| p.eta)),
            cell(p.map(|p| p.theta)),
            cell(r.gap),
            cell(r.h),
            cell(r.bound),
            cell(r.dist_x),
            cell(r.dist_y),
            cell(r.dv2),
            cell(r.dw2),
            cell(r.descent_residual),
        ];
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
