//! On-disk formats: the binary state snapshot, the diagnostics CSV, and
//! the run summary. All writes are whole-file atomic (temp file, rename).
//!
//! Snapshot layout, fixed for external tooling:
//! magic `ELF1` · dim (u8) · per-axis interior counts (u32 LE each) ·
//! boundary byte (0 = Dirichlet, 1 = Periodic) · time (f64 LE) · interior
//! values as f64 LE in axis-major order (axis 0 fastest), fields in the
//! order u components, F entries row-major, then P.
//!
//! CSV numbers are printed with 17 significant digits so parsing them
//! back reproduces the exact doubles.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::diagnostics::DiagnosticsRecord;
use crate::field::{FieldData, State};
use crate::grid::{BoundaryMode, Grid};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io { path: path.to_path_buf(), source }
}

/// Write bytes to `path` atomically: a temp file in the same directory is
/// renamed over the target.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(io_err(path))?;
        }
    }
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(bytes).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(io_err(path))?;
    Ok(())
}

const MAGIC: &[u8; 4] = b"ELF1";

/// Serialize a state to the snapshot byte layout.
pub fn snapshot_bytes(state: &State) -> Vec<u8> {
    let grid = state.grid();
    let dim = grid.dim();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(dim as u8);
    for a in 0..dim {
        out.extend_from_slice(&(grid.n(a) as u32).to_le_bytes());
    }
    out.push(match grid.boundary() {
        BoundaryMode::Dirichlet => 0,
        BoundaryMode::Periodic => 1,
    });
    out.extend_from_slice(&state.t.to_le_bytes());
    let mut push_field = |comps: &[Vec<f64>]| {
        for comp in comps {
            grid.for_each_interior(|flat, _| {
                out.extend_from_slice(&comp[flat].to_le_bytes());
            });
        }
    };
    push_field(state.u.components());
    push_field(state.f.components());
    push_field(state.p.components());
    out
}

pub fn write_snapshot(path: &Path, state: &State) -> Result<(), IoError> {
    atomic_write(path, &snapshot_bytes(state))
}

/// Read a snapshot against an expected grid; the stored header must match
/// the grid exactly.
pub fn read_snapshot(path: &Path, grid: &Grid) -> Result<State, IoError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    parse_snapshot(&bytes, grid).map_err(|reason| IoError::Format {
        path: path.to_path_buf(),
        reason,
    })
}

pub fn parse_snapshot(bytes: &[u8], grid: &Grid) -> Result<State, String> {
    let dim = grid.dim();
    let header = 4 + 1 + 4 * dim + 1 + 8;
    if bytes.len() < header {
        return Err("truncated header".into());
    }
    if &bytes[..4] != MAGIC {
        return Err(format!("bad magic {:?}", &bytes[..4]));
    }
    if bytes[4] as usize != dim {
        return Err(format!("dimension {} does not match grid dim {dim}", bytes[4]));
    }
    let mut off = 5;
    for a in 0..dim {
        let n = u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()) as usize;
        if n != grid.n(a) {
            return Err(format!("axis {a} has {n} cells, grid expects {}", grid.n(a)));
        }
        off += 4;
    }
    let boundary = match bytes[off] {
        0 => BoundaryMode::Dirichlet,
        1 => BoundaryMode::Periodic,
        other => return Err(format!("unknown boundary byte {other}")),
    };
    if boundary != grid.boundary() {
        return Err("boundary mode does not match the grid".into());
    }
    off += 1;
    let t = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
    off += 8;

    let cells = grid.cell_count();
    let n_comp = dim + dim * dim + 1;
    let need = off + 8 * cells * n_comp;
    if bytes.len() != need {
        return Err(format!("payload is {} bytes, expected {}", bytes.len() - off, need - off));
    }
    let mut state = State::zero(grid);
    state.t = t;
    let read_field = |comps: &mut [Vec<f64>], off: &mut usize| {
        for comp in comps {
            grid.for_each_interior(|flat, _| {
                comp[flat] = f64::from_le_bytes(bytes[*off..*off + 8].try_into().unwrap());
                *off += 8;
            });
        }
    };
    read_field(state.u.components_mut(), &mut off);
    read_field(state.f.components_mut(), &mut off);
    read_field(state.p.components_mut(), &mut off);
    state.u.fill_ghosts();
    state.f.fill_ghosts();
    state.p.fill_ghosts();
    Ok(state)
}

/// Column order of the diagnostics CSV, one per record field.
pub const CSV_HEADER: &str = "t,energy,dissipation,div_residual,pressure_mean,picard_iters,\
picard_ratio,norm_u_lq,norm_f_lq,norm_u_grad_lq,norm_f_grad_lq,norm_u_w2q,norm_f_w2q,\
norm_grad_p_lq,norm_dtu_lq,norm_dtf_lq,norm_grad_u_linf,norm_grad_f_linf,norm_f_linf,\
h_value,curl_residual_f";

/// 17-significant-digit float formatting; round-trips f64 exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn csv_row(rec: &DiagnosticsRecord) -> String {
    let f = fmt_f64;
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        f(rec.t),
        f(rec.energy),
        f(rec.dissipation),
        f(rec.div_residual),
        f(rec.pressure_mean),
        rec.picard_iters,
        f(rec.picard_ratio),
        f(rec.norm_u_lq),
        f(rec.norm_f_lq),
        f(rec.norm_u_grad_lq),
        f(rec.norm_f_grad_lq),
        f(rec.norm_u_w2q),
        f(rec.norm_f_w2q),
        f(rec.norm_grad_p_lq),
        f(rec.norm_dtu_lq),
        f(rec.norm_dtf_lq),
        f(rec.norm_grad_u_linf),
        f(rec.norm_grad_f_linf),
        f(rec.norm_f_linf),
        f(rec.h_value),
        f(rec.curl_residual_f),
    )
}

pub fn csv_text(records: &[DiagnosticsRecord]) -> String {
    let mut s = String::with_capacity(64 + records.len() * 400);
    s.push_str(CSV_HEADER);
    s.push('\n');
    for rec in records {
        s.push_str(&csv_row(rec));
        s.push('\n');
    }
    s
}

/// Parse a diagnostics CSV produced by `csv_text` (used by tooling and
/// the round-trip tests).
pub fn parse_csv(text: &str) -> Result<Vec<DiagnosticsRecord>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => return Err(format!("unexpected header {other:?}")),
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 21 {
            return Err(format!("row {}: expected 21 columns, got {}", i + 2, cols.len()));
        }
        let p = |s: &str| s.parse::<f64>().map_err(|e| format!("row {}: {e}", i + 2));
        out.push(DiagnosticsRecord {
            t: p(cols[0])?,
            energy: p(cols[1])?,
            dissipation: p(cols[2])?,
            div_residual: p(cols[3])?,
            pressure_mean: p(cols[4])?,
            picard_iters: cols[5].parse::<u32>().map_err(|e| format!("row {}: {e}", i + 2))?,
            picard_ratio: p(cols[6])?,
            norm_u_lq: p(cols[7])?,
            norm_f_lq: p(cols[8])?,
            norm_u_grad_lq: p(cols[9])?,
            norm_f_grad_lq: p(cols[10])?,
            norm_u_w2q: p(cols[11])?,
            norm_f_w2q: p(cols[12])?,
            norm_grad_p_lq: p(cols[13])?,
            norm_dtu_lq: p(cols[14])?,
            norm_dtf_lq: p(cols[15])?,
            norm_grad_u_linf: p(cols[16])?,
            norm_grad_f_linf: p(cols[17])?,
            norm_f_linf: p(cols[18])?,
            h_value: p(cols[19])?,
            curl_residual_f: p(cols[20])?,
        });
    }
    Ok(out)
}

/// Final status of a run, mapped onto process exit codes by the CLI.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Ok,
    SolverDiverged,
    ConfigError,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Ok => 0,
            RunStatus::ConfigError => 2,
            RunStatus::SolverDiverged => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            RunStatus::Ok => "ok",
            RunStatus::SolverDiverged => "solver_diverged",
            RunStatus::ConfigError => "config_error",
        }
    }
}

/// Summary written exactly once per run.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub scenario: String,
    pub config_hash: String,
    pub final_time: f64,
    pub worst_energy_margin: f64,
    pub max_div_residual: f64,
    pub h_at_end: f64,
    pub picard_total_iters: u64,
    pub picard_max_iters: u32,
    pub exit: RunStatus,
    pub error: Option<String>,
}

impl RunSummary {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("scenario = {}\n", self.scenario));
        s.push_str(&format!("config_hash = {}\n", self.config_hash));
        s.push_str(&format!("final_time = {}\n", fmt_f64(self.final_time)));
        s.push_str(&format!("worst_energy_margin = {}\n", fmt_f64(self.worst_energy_margin)));
        s.push_str(&format!("max_div_residual = {}\n", fmt_f64(self.max_div_residual)));
        s.push_str(&format!("h_at_end = {}\n", fmt_f64(self.h_at_end)));
        s.push_str(&format!("picard_total_iters = {}\n", self.picard_total_iters));
        s.push_str(&format!("picard_max_iters = {}\n", self.picard_max_iters));
        s.push_str(&format!("status = {}\n", self.exit.label()));
        if let Some(err) = &self.error {
            s.push_str(&format!("error = {err}\n"));
        }
        s
    }
}
