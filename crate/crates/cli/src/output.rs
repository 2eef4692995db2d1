use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{CliError, RunConfig};

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn provenance(cmd: &str, cfg: &RunConfig) -> Value {
    json!({
        "command": cmd,
        "kernel": cfg.spec.id(),
        "window": [cfg.window.a, cfg.window.b],
        "order": cfg.order,
        "seed": cfg.seed,
        "version": env!("CARGO_PKG_VERSION"),
    })
}

fn csv_header(prov: &Value) -> String {
    let p = prov.as_object().expect("provenance is an object");
    p.iter().map(|(k, v)| format!("# {k}: {v}\n")).collect()
}

/// Writes via a temporary sibling and a rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp: PathBuf = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_json(path: &Path, prov: &Value, body: &impl Serialize) -> Result<(), CliError> {
    let mut v = serde_json::to_value(body).map_err(|e| CliError::Numerical(e.to_string()))?;
    if let Value::Object(m) = &mut v {
        m.insert("provenance".into(), prov.clone());
    }
    let text = serde_json::to_string_pretty(&v).map_err(|e| CliError::Numerical(e.to_string()))?;
    write_atomic(path, &(text + "\n"))
}

/// CSV with a `#` provenance block; cells are preformatted.
pub fn write_csv(path: &Path, prov: &Value, columns: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut s = csv_header(prov);
    s.push_str(&columns.join(","));
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    write_atomic(path, &s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, 2.0f64.sqrt() * 1e-300, -7.25e11] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
    }

    #[test]
    fn atomic_write_replaces() {
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("sub/a.txt");
        write_atomic(&p, "one").unwrap();
        write_atomic(&p, "two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(d.path().join("sub")).unwrap().count(), 1);
    }
}
