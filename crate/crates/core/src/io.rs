//! CSV and PGM writers for profiles, densities and sweep tables.
//!
//! Every CSV starts with one `# key=value ...` comment line recording the run
//! parameters, followed by a header row.

use std::io::{self, Read, Write};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hybrid::Density2D;
use crate::neutron::{ChiSweep, DetectorCounts};
use crate::pointer::{PointerWavefunction, UniformGrid1D};

/// Ordered run parameters, rendered as the leading comment line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params(pub Vec<(String, String)>);

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.0.push((key.to_string(), value.to_string()));
        self
    }

    pub fn comment_line(&self) -> String {
        let body: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("# {}", body.join(" "))
    }
}

fn csv_err(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

fn table<W: Write>(mut w: W, params: &Params, header: &[&str]) -> io::Result<csv::Writer<W>> {
    writeln!(w, "{}", params.comment_line())?;
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(header).map_err(csv_err)?;
    Ok(wtr)
}

/// Columns `x, re, im`. Analytic profiles are sampled on `grid` first.
pub fn write_pointer_csv<W: Write>(
    w: W,
    p: &PointerWavefunction,
    grid: &UniformGrid1D,
    params: &Params,
) -> Result<()> {
    let values = p.values_on(grid)?;
    let run = || -> io::Result<()> {
        let mut wtr = table(w, params, &["x", "re", "im"])?;
        for (x, v) in grid.points().zip(&values) {
            wtr.serialize((x, v.re, v.im)).map_err(csv_err)?;
        }
        wtr.flush()
    };
    run().map_err(|e| Error::InvalidParameter(format!("write failed: {e}")))
}

/// Reads `x, re[, im]` rows back into a sampled profile. The `x` column must
/// be uniformly spaced.
pub fn read_pointer_csv<R: Read>(r: R) -> Result<PointerWavefunction> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(r);
    let mut xs = Vec::new();
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::InvalidParameter(format!("csv: {e}")))?;
        let field = |i: usize| -> Result<f64> {
            rec.get(i)
                .unwrap_or("0")
                .trim()
                .parse()
                .map_err(|e| Error::InvalidParameter(format!("csv field {i}: {e}")))
        };
        if rec.len() < 2 {
            return Err(Error::InvalidParameter(
                "expected x, re[, im] columns".into(),
            ));
        }
        xs.push(field(0)?);
        values.push(C64::new(
            field(1)?,
            if rec.len() > 2 { field(2)? } else { 0.0 },
        ));
    }
    let (first, last) = match (xs.first(), xs.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(Error::InvalidParameter("empty profile".into())),
    };
    let grid = UniformGrid1D::new(first, last, xs.len())?;
    let tol = 1e-9 * grid.span();
    if xs
        .iter()
        .enumerate()
        .any(|(i, &x)| (x - grid.x(i)).abs() > tol)
    {
        return Err(Error::InvalidGrid(
            "x column is not uniformly spaced".into(),
        ));
    }
    PointerWavefunction::sampled(grid, values)
}

/// Columns `x, y, value`, `x` varying fastest.
pub fn write_density_csv<W: Write>(w: W, d: &Density2D, params: &Params) -> io::Result<()> {
    let mut wtr = table(w, params, &["x", "y", "value"])?;
    for iy in 0..d.gy.len() {
        let y = d.gy.x(iy);
        for ix in 0..d.gx.len() {
            wtr.serialize((d.gx.x(ix), y, d.at(ix, iy)))
                .map_err(csv_err)?;
        }
    }
    wtr.flush()
}

/// Binary 8-bit PGM of `|value|`, scaled so the largest magnitude maps to 255.
/// The first image row is the largest `y`.
pub fn write_pgm<W: Write>(mut w: W, d: &Density2D) -> io::Result<()> {
    let (nx, ny) = (d.gx.len(), d.gy.len());
    let peak = d.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    write!(w, "P5\n{nx} {ny}\n255\n")?;
    let mut row = vec![0u8; nx];
    for iy in (0..ny).rev() {
        for (ix, px) in row.iter_mut().enumerate() {
            let v = if peak > 0.0 {
                d.at(ix, iy).abs() / peak
            } else {
                0.0
            };
            *px = (255.0 * v).round().clamp(0.0, 255.0) as u8;
        }
        w.write_all(&row)?;
    }
    Ok(())
}

/// Columns `chi, p_d1, p_d2, p_absorbed, p_rejected`, plus
/// `n_d1, n_d2, n_absorbed, n_rejected` when counts are given.
pub fn write_sweep_csv<W: Write>(
    w: W,
    sweep: &ChiSweep,
    counts: Option<&[DetectorCounts]>,
    params: &Params,
) -> io::Result<()> {
    let mut header = vec!["chi", "p_d1", "p_d2", "p_absorbed", "p_rejected"];
    if counts.is_some() {
        header.extend(["n_d1", "n_d2", "n_absorbed", "n_rejected"]);
    }
    let mut wtr = table(w, params, &header)?;
    for (i, row) in sweep.rows.iter().enumerate() {
        let p = &row.probabilities;
        let probs = (row.chi, p.d1, p.d2, p.absorbed, p.rejected);
        match counts.and_then(|c| c.get(i)) {
            Some(c) => wtr
                .serialize((probs, c.d1, c.d2, c.absorbed, c.rejected))
                .map_err(csv_err)?,
            None => wtr.serialize(probs).map_err(csv_err)?,
        }
    }
    wtr.flush()
}

/// Generic table with a parameter comment and header.
pub fn write_rows<W: Write>(
    w: W,
    params: &Params,
    header: &[&str],
    rows: &[Vec<String>],
) -> io::Result<()> {
    let mut wtr = table(w, params, header)?;
    for r in rows {
        wtr.write_record(r).map_err(csv_err)?;
    }
    wtr.flush()
}
