//! Ledger and snapshot files.
//!
//! Snapshots of cell fields are CSV grids: a header line `nx ny lx ly time`
//! followed by `ny` rows of `nx` values, row `j = 0` first. Face velocities
//! are written unchanged on their own grids (`(nx+1) x ny` for the x
//! component, `nx x (ny+1)` for y). The VTK files are legacy structured
//! points with cell data, for viewing only.

use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use thermocap_core::diagnostics::RunLedger;
use thermocap_core::grid::{CellField, FaceField, Grid, ScalarBc};
use thermocap_core::scheme::State;

/// Rows `0, every, 2 every, ...` plus the last one.
pub fn thin_ledger(ledger: &RunLedger, every: usize) -> RunLedger {
    let every = every.max(1);
    let n = ledger.rows.len();
    RunLedger {
        rows: ledger
            .rows
            .iter()
            .enumerate()
            .filter(|(k, _)| k % every == 0 || k + 1 == n)
            .map(|(_, r)| *r)
            .collect(),
    }
}

pub fn write_ledger(path: &Path, ledger: &RunLedger) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    ledger.write_csv(&mut w)?;
    w.flush()
}

fn write_grid(path: &Path, g: &Grid, time: f64, cols: usize, rows: usize, values: &[f64]) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{} {} {} {} {:.16e}", g.nx, g.ny, g.lx, g.ly, time)?;
    for r in 0..rows {
        let line: Vec<String> = values[r * cols..(r + 1) * cols].iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()
}

/// A cell-field snapshot read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub grid: Grid,
    pub time: f64,
    pub values: Vec<f64>,
}

fn bad(msg: String) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg)
}

/// Reads a cell-field snapshot written by [`write_snapshot`].
pub fn read_cell_snapshot(path: &Path) -> io::Result<Snapshot> {
    let mut lines = BufReader::new(File::open(path)?).lines();
    let header = lines.next().ok_or_else(|| bad("empty snapshot".into()))??;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 5 {
        return Err(bad(format!("header must read `nx ny lx ly time`, got `{header}`")));
    }
    let parse_f = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("`{s}`: {e}")));
    let parse_u = |s: &str| s.parse::<usize>().map_err(|e| bad(format!("`{s}`: {e}")));
    let grid = Grid::new(parse_u(h[0])?, parse_u(h[1])?, parse_f(h[2])?, parse_f(h[3])?)
        .map_err(|e| bad(e.to_string()))?;
    let time = parse_f(h[4])?;
    let mut values = Vec::with_capacity(grid.n_cells());
    for (j, line) in lines.enumerate() {
        let line = line?;
        let row: Vec<f64> = line.split(',').map(parse_f).collect::<io::Result<_>>()?;
        if row.len() != grid.nx {
            return Err(bad(format!("row {j} has {} values, expected {}", row.len(), grid.nx)));
        }
        values.extend(row);
    }
    if values.len() != grid.n_cells() {
        return Err(bad(format!("{} values, expected {}", values.len(), grid.n_cells())));
    }
    Ok(Snapshot { grid, time, values })
}

impl Snapshot {
    pub fn to_field(&self, bc: ScalarBc) -> thermocap_core::Result<CellField> {
        CellField::from_values(&self.grid, self.values.clone(), bc)
    }
}

fn cell_average_velocity(u: &FaceField, g: &Grid) -> Vec<[f64; 2]> {
    let mut out = vec![[0.0; 2]; g.n_cells()];
    for j in 0..g.ny {
        for i in 0..g.nx {
            out[g.cell(i, j)] = [
                0.5 * (u.xcomp[g.xface(i, j)] + u.xcomp[g.xface(i + 1, j)]),
                0.5 * (u.ycomp[g.yface(i, j)] + u.ycomp[g.yface(i, j + 1)]),
            ];
        }
    }
    out
}

fn write_vtk(path: &Path, s: &State) -> io::Result<()> {
    let g = &s.grid;
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "thermocap step {} time {:.16e}", s.step, s.time)?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET STRUCTURED_POINTS")?;
    writeln!(w, "DIMENSIONS {} {} 1", g.nx + 1, g.ny + 1)?;
    writeln!(w, "ORIGIN 0 0 0")?;
    writeln!(w, "SPACING {:.16e} {:.16e} 1", g.dx, g.dy)?;
    writeln!(w, "CELL_DATA {}", g.n_cells())?;
    let theta = s.theta();
    for (name, f) in [("phi", &s.phi), ("mu", &s.mu), ("theta", &theta), ("p", &s.p)] {
        writeln!(w, "SCALARS {name} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for v in &f.values {
            writeln!(w, "{v:.16e}")?;
        }
    }
    writeln!(w, "VECTORS velocity double")?;
    for [a, b] in cell_average_velocity(&s.u, g) {
        writeln!(w, "{a:.16e} {b:.16e} 0")?;
    }
    w.flush()
}

/// Writes the snapshot files of `s` into `dir`; returns the paths written.
pub fn write_snapshot(dir: &Path, s: &State, csv: bool, vtk: bool) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let g = &s.grid;
    let tag = format!("{:06}", s.step);
    let mut out = vec![];
    if csv {
        let theta = s.theta();
        for (name, f) in [("phi", &s.phi), ("mu", &s.mu), ("theta", &theta), ("p", &s.p)] {
            let p = dir.join(format!("{name}_{tag}.csv"));
            write_grid(&p, g, s.time, g.nx, g.ny, &f.values)?;
            out.push(p);
        }
        let p = dir.join(format!("ux_{tag}.csv"));
        write_grid(&p, g, s.time, g.nx + 1, g.ny, &s.u.xcomp)?;
        out.push(p);
        let p = dir.join(format!("uy_{tag}.csv"));
        write_grid(&p, g, s.time, g.nx, g.ny + 1, &s.u.ycomp)?;
        out.push(p);
    }
    if vtk {
        let p = dir.join(format!("state_{tag}.vtk"));
        write_vtk(&p, s)?;
        out.push(p);
    }
    Ok(out)
}
