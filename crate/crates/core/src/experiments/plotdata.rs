use std::io::Write;

use crate::error::Result;
use crate::msa::LadderRow;
use crate::observables::{DecayFit, IdsCurve};

/// `(x, y, yerr)` rows under a `#` comment naming the columns.
pub fn emit_plotdata<W: Write>(rows: &[(f64, f64, f64)], columns: (&str, &str, &str), mut w: W) -> Result<()> {
    writeln!(w, "# x = {}, y = {}, yerr = {}", columns.0, columns.1, columns.2)?;
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["x", "y", "yerr"])?;
    for (x, y, e) in rows {
        wr.write_record([x.to_string(), y.to_string(), e.to_string()])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn ids_plot<W: Write>(curve: &IdsCurve, w: W) -> Result<()> {
    let rows: Vec<_> = curve
        .energies
        .iter()
        .zip(&curve.values)
        .zip(&curve.se)
        .map(|((&e, &n), &s)| (e, n, s))
        .collect();
    emit_plotdata(&rows, ("E", "N(E)", "standard error"), w)
}

pub fn decay_plot<W: Write>(fit: &DecayFit, w: W) -> Result<()> {
    let rows: Vec<_> = fit.points.iter().map(|&(r, m)| (r, m, 0.0)).collect();
    emit_plotdata(&rows, ("distance", "log mass", "0"), w)
}

pub fn ladder_plot<W: Write>(rows: &[LadderRow], w: W) -> Result<()> {
    let rows: Vec<_> = rows.iter().map(|r| (r.scale, r.phat, 0.5 * (r.hi - r.lo))).collect();
    emit_plotdata(&rows, ("L", "good fraction", "Wilson half-width"), w)
}
