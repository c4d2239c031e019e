//! CSV tables with a provenance comment line, and JSON reports.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use kerr1d::C64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Writes `# config=<hash> scheme=<name> version=<v>`, a header row and the
/// records. Floats use the shortest representation that round-trips.
pub fn write_csv(path: &Path, hash: &str, scheme: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    writeln!(file, "# config={hash} scheme={scheme} version={VERSION}")?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

/// Shortest round-trip form, in exponent notation outside `[1e-4, 1e15)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Reads a field from a solution CSV: the `re` and `im` columns, in row order.
pub fn read_field(path: &Path) -> Result<Vec<C64>> {
    let file = File::open(path).with_context(|| format!("opening seed file {}", path.display()))?;
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(file);
    let headers = r.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(re), Some(im)) = (col("re"), col("im")) else {
        bail!("seed file {} needs `re` and `im` columns", path.display());
    };
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        out.push(C64::new(rec[re].trim().parse()?, rec[im].trim().parse()?));
    }
    Ok(out)
}
