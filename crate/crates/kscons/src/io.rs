//! File formats: KSF1 field snapshots and numeric CSV tables.
//!
//! KSF1 layout, little endian:
//!
//! ```text
//! magic    4 bytes  "KSF1"
//! dim      u32
//! cells    u64 × dim
//! extent   f64 × dim
//! time     f64
//! topology u8       0 = neumann_box, 1 = periodic_torus
//! values   f64 × Π cells, row-major, last axis fastest
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use kscons_core::{Field, Grid, GridSpec, Topology};

use crate::error::HarnessError;

const MAGIC: &[u8; 4] = b"KSF1";

pub fn encode_field(field: &Field, t: f64) -> Vec<u8> {
    let grid = field.grid();
    let dim = grid.dim();
    let mut out = Vec::with_capacity(4 + 4 + 16 * dim + 9 + 8 * field.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    for a in 0..dim {
        out.extend_from_slice(&(grid.cells(a) as u64).to_le_bytes());
    }
    for a in 0..dim {
        out.extend_from_slice(&grid.extent(a).to_le_bytes());
    }
    out.extend_from_slice(&t.to_le_bytes());
    out.push(match grid.topology() {
        Topology::NeumannBox => 0,
        Topology::PeriodicTorus => 1,
    });
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Option<[u8; N]> {
        let chunk = self.bytes.get(self.at..self.at + N)?;
        self.at += N;
        chunk.try_into().ok()
    }
}

/// Inverse of [`encode_field`]; `Err` carries a human-readable reason.
pub fn decode_field(bytes: &[u8]) -> Result<(Field, f64), String> {
    let mut r = Reader { bytes, at: 0 };
    if r.take::<4>().as_ref() != Some(MAGIC) {
        return Err("missing KSF1 magic".into());
    }
    let truncated = || "truncated header".to_string();
    let dim = u32::from_le_bytes(r.take().ok_or_else(truncated)?) as usize;
    if !(1..=3).contains(&dim) {
        return Err(format!("unsupported dimension {dim}"));
    }
    let mut cells = Vec::with_capacity(dim);
    for _ in 0..dim {
        cells.push(u64::from_le_bytes(r.take().ok_or_else(truncated)?) as usize);
    }
    let mut extent = Vec::with_capacity(dim);
    for _ in 0..dim {
        extent.push(f64::from_le_bytes(r.take().ok_or_else(truncated)?));
    }
    let t = f64::from_le_bytes(r.take().ok_or_else(truncated)?);
    let topology = match r.take::<1>().ok_or_else(truncated)?[0] {
        0 => Topology::NeumannBox,
        1 => Topology::PeriodicTorus,
        other => return Err(format!("unknown topology tag {other}")),
    };
    let grid = Grid::new(GridSpec::new(&cells, &extent, topology)).map_err(|e| e.to_string())?;
    let body = &bytes[r.at..];
    if body.len() != 8 * grid.len() {
        return Err(format!("expected {} value bytes, found {}", 8 * grid.len(), body.len()));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let field = Field::from_values(grid, values).map_err(|e| e.to_string())?;
    Ok((field, t))
}

pub fn write_field(path: &Path, field: &Field, t: f64) -> Result<(), HarnessError> {
    fs::write(path, encode_field(field, t)).map_err(|e| HarnessError::io(path, e))
}

pub fn read_field(path: &Path) -> Result<(Field, f64), HarnessError> {
    let bytes = fs::read(path).map_err(|e| HarnessError::io(path, e))?;
    decode_field(&bytes).map_err(|reason| HarnessError::format(path, reason))
}

/// A header plus rows of floats.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Table {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.index_of(name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    /// Values printed with `{:.16e}`, which round-trips every `f64`.
    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<Table, String> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or("empty table")?;
        let columns: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
        let mut table = Table::new(columns);
        for (i, line) in lines.enumerate() {
            let row = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()
                .map_err(|e| format!("row {}: {e}", i + 2))?;
            if row.len() != table.columns.len() {
                return Err(format!(
                    "row {} has {} values, header has {}",
                    i + 2,
                    row.len(),
                    table.columns.len()
                ));
            }
            table.rows.push(row);
        }
        Ok(table)
    }

    pub fn write(&self, path: &Path) -> Result<(), HarnessError> {
        let mut file = fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
        file.write_all(self.to_csv().as_bytes())
            .map_err(|e| HarnessError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Table, HarnessError> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Table::parse_csv(&text).map_err(|reason| HarnessError::format(path, reason))
    }
}
