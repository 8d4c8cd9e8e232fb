//! CSV, JSON and JSON-lines serialization of experiment results.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::BenchError;

pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string<T: Serialize>(rows: &[T]) -> Result<String, BenchError> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

pub fn read_csv<T: DeserializeOwned, R: Read>(input: R) -> Result<Vec<T>, BenchError> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(BenchError::from))
        .collect()
}

pub fn write_jsonl<T: Serialize, W: Write>(records: &[T], mut out: W) -> Result<(), BenchError> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn save_csv<T: Serialize>(rows: &[T], path: &Path) -> Result<(), BenchError> {
    write_csv(rows, File::create(path)?)
}

pub fn save_json<T: Serialize>(value: &T, path: &Path) -> Result<(), BenchError> {
    let mut f = File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn load_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, BenchError> {
    read_csv(File::open(path)?)
}
