use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{EvidenceError, Result};

/// Serializes rows as CSV with a header taken from the row type.
pub fn to_csv<S: Serialize>(rows: impl IntoIterator<Item = S>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)
            .map_err(|e| EvidenceError::Io(e.to_string()))?;
    }
    w.into_inner().map_err(|e| EvidenceError::Io(e.to_string()))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<S: Serialize + ?Sized>(value: &S) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value).map_err(|e| EvidenceError::Io(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

/// Writes through a temporary file in the target directory, then renames,
/// so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .map_err(|e| EvidenceError::Io(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        n: usize,
        value: f64,
    }

    #[test]
    fn csv_has_header() {
        let bytes = to_csv([Row { n: 1, value: 0.5 }, Row { n: 2, value: 0.25 }]).unwrap();
        assert_eq!(
            String::from_utf8(bytes).unwrap(),
            "n,value\n1,0.5\n2,0.25\n"
        );
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("out.json");
        write_atomic(&p, b"first").unwrap();
        write_atomic(&p, b"second").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"second");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
