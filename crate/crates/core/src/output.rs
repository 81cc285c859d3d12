//! CSV time series and legacy-VTK snapshots.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::Result;
use crate::pd::PdSolid;
use crate::sim::FluidPart;

/// Column order of the time-series CSV.
pub const CSV_HEADER: [&str; 6] = ["t", "p_det", "p_wall", "com_x", "f_pen_x", "mass_loss"];

/// One CSV row.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TimeSample {
    pub t: f64,
    pub p_det: f64,
    pub p_wall: f64,
    pub com_x: f64,
    pub f_pen_x: f64,
    pub mass_loss: f64,
}

pub struct CsvLog<W: Write> {
    writer: csv::Writer<W>,
}

impl CsvLog<File> {
    pub fn create(path: &Path) -> Result<Self> {
        Self::new(File::create(path)?)
    }
}

impl<W: Write> CsvLog<W> {
    pub fn new(inner: W) -> Result<Self> {
        let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(inner);
        writer.write_record(CSV_HEADER)?;
        Ok(Self { writer })
    }

    pub fn push(&mut self, row: &TimeSample) -> Result<()> {
        self.writer.serialize(row)?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.writer.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> Result<W> {
        self.writer
            .into_inner()
            .map_err(|e| crate::Error::Io(std::io::Error::other(e.to_string())))
    }
}

/// Samples `p`, `|v|` and `T` of the background on an `n × n` lattice and writes
/// them as structured points.
pub fn write_background_vtk<W: Write>(out: W, fluid: &FluidPart, n: usize, time: f64) -> Result<()> {
    let mut w = BufWriter::new(out);
    let d = fluid.problem.space.domain();
    let (dx, dy) = (d.width() / (n - 1) as f64, d.height() / (n - 1) as f64);
    let mut p = Vec::with_capacity(n * n);
    let mut speed = Vec::with_capacity(n * n);
    let mut temp = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let x = [
                (d.x0 + i as f64 * dx).min(d.x1),
                (d.y0 + j as f64 * dy).min(d.y1),
            ];
            let (y, _) = fluid.problem.space.interpolate(&fluid.y, x)?;
            p.push(y[0]);
            speed.push((y[1] * y[1] + y[2] * y[2]).sqrt());
            temp.push(y[3]);
        }
    }
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "background t={time:e}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET STRUCTURED_POINTS")?;
    writeln!(w, "DIMENSIONS {n} {n} 1")?;
    writeln!(w, "ORIGIN {} {} 0", d.x0, d.y0)?;
    writeln!(w, "SPACING {dx} {dy} 1")?;
    writeln!(w, "POINT_DATA {}", n * n)?;
    for (name, values) in [("p", &p), ("speed", &speed), ("T", &temp)] {
        writeln!(w, "SCALARS {name} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for v in values.iter() {
            writeln!(w, "{v}")?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes PD nodes as vertices with velocity, plastic strain and damage.
pub fn write_solid_vtk<W: Write>(out: W, solid: &PdSolid, time: f64) -> Result<()> {
    let mut w = BufWriter::new(out);
    let n = solid.len();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "solid t={time:e}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET POLYDATA")?;
    writeln!(w, "POINTS {n} double")?;
    for x in &solid.x {
        writeln!(w, "{} {} 0", x[0], x[1])?;
    }
    writeln!(w, "VERTICES {n} {}", 2 * n)?;
    for p in 0..n {
        writeln!(w, "1 {p}")?;
    }
    writeln!(w, "POINT_DATA {n}")?;
    writeln!(w, "VECTORS v double")?;
    for v in &solid.v {
        writeln!(w, "{} {} 0", v[0], v[1])?;
    }
    writeln!(w, "SCALARS eps_p double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for p in 0..n {
        let e = solid.families.bonds(p).map(|b| solid.eps_p[b]).fold(0.0, f64::max);
        writeln!(w, "{e}")?;
    }
    writeln!(w, "SCALARS damage double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for d in &solid.damage {
        writeln!(w, "{d}")?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_header_and_precision() {
        let mut log = CsvLog::new(Vec::new()).unwrap();
        let row = TimeSample { t: 1e-6, p_det: 1.0 / 3.0, p_wall: 1e5, com_x: -0.0, f_pen_x: 2.5e-300, mass_loss: 0.0 };
        log.push(&row).unwrap();
        let text = String::from_utf8(log.into_inner().unwrap()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,p_det,p_wall,com_x,f_pen_x,mass_loss"));
        let values: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(values[1], 1.0 / 3.0);
        assert_eq!(values[4], 2.5e-300);
    }
}
