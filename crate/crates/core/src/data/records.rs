use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use serde::{Deserialize, Serialize};

use crate::data::DataError;

/// One raw paper: an opaque id, its publication year, and the ids it cites.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaperRecord {
    pub id: String,
    pub year: i32,
    #[serde(default)]
    pub references: Vec<String>,
}

fn io_err(path: &Path, source: std::io::Error) -> DataError {
    DataError::Io { path: path.display().to_string(), source }
}

/// Reads newline-delimited JSON paper records; `.gz` paths are decompressed
/// transparently. Blank lines are skipped.
pub fn read_records(path: &Path) -> Result<Vec<PaperRecord>, DataError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let reader: Box<dyn Read> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(GzDecoder::new(file))
    } else {
        Box::new(file)
    };
    let mut records = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PaperRecord =
            serde_json::from_str(&line).map_err(|source| DataError::Parse { line: idx + 1, source })?;
        records.push(record);
    }
    Ok(records)
}

/// Writes records as newline-delimited JSON, one paper per line.
pub fn write_records(path: &Path, records: &[PaperRecord]) -> Result<(), DataError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut out = BufWriter::new(file);
    for record in records {
        serde_json::to_writer(&mut out, record)
            .map_err(|e| DataError::Io { path: path.display().to_string(), source: e.into() })?;
        out.write_all(b"\n").map_err(|e| io_err(path, e))?;
    }
    out.flush().map_err(|e| io_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_plain_and_gz() {
        let dir = tempfile::tempdir().unwrap();
        let records = vec![
            PaperRecord { id: "a".into(), year: 2000, references: vec![] },
            PaperRecord { id: "b".into(), year: 2001, references: vec!["a".into()] },
        ];
        let plain = dir.path().join("corpus.ndjson");
        write_records(&plain, &records).unwrap();
        assert_eq!(read_records(&plain).unwrap(), records);

        let gz = dir.path().join("corpus.ndjson.gz");
        let mut enc = flate2::write::GzEncoder::new(
            File::create(&gz).unwrap(),
            flate2::Compression::default(),
        );
        for r in &records {
            serde_json::to_writer(&mut enc, r).unwrap();
            enc.write_all(b"\n").unwrap();
        }
        enc.finish().unwrap();
        assert_eq!(read_records(&gz).unwrap(), records);
    }

    #[test]
    fn missing_references_field_defaults_to_empty() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.ndjson");
        std::fs::write(&path, "{\"id\":\"x\",\"year\":1999}\n\n").unwrap();
        let records = read_records(&path).unwrap();
        assert_eq!(records.len(), 1);
        assert!(records[0].references.is_empty());
    }

    #[test]
    fn malformed_line_reports_its_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.ndjson");
        std::fs::write(&path, "{\"id\":\"x\",\"year\":1999}\nnot json\n").unwrap();
        match read_records(&path) {
            Err(DataError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
