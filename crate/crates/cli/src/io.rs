use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};

/// Reads the `value` column of a CSV file.
pub fn read_values(path: &Path) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let headers = rdr.headers().with_context(|| format!("reading header of {}", path.display()))?;
    let Some(col) = headers.iter().position(|h| h == "value") else {
        bail!("{} has no `value` column", path.display());
    };
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: record {}", path.display(), i + 1))?;
        let field = rec.get(col).unwrap_or("");
        let v: f64 = field
            .parse()
            .with_context(|| format!("{}: record {}: bad number '{field}'", path.display(), i + 1))?;
        if !v.is_finite() {
            bail!("{}: record {}: value is not finite", path.display(), i + 1);
        }
        out.push(v);
    }
    if out.is_empty() {
        bail!("{} has no values", path.display());
    }
    Ok(out)
}

/// Full-precision decimal form used in every CSV output.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Opens `path` for writing, or stdout when absent.
pub fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    })
}

pub fn write_values(path: Option<&Path>, values: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink(path)?);
    w.write_record(["value"])?;
    for &v in values {
        w.write_record([num(v)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}
