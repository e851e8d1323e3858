use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::IngestError;
use crate::model::{DataPoint, Dataset, ProvenanceRecord, Split, TripleSet};

/// One canonical JSONL line. Fields are declared in key order so the
/// serialized form has sorted keys.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointRecord {
    pub id: String,
    #[serde(default)]
    pub missing_triples: TripleSet,
    pub text: String,
    pub triples: TripleSet,
}

impl From<&DataPoint> for PointRecord {
    fn from(point: &DataPoint) -> Self {
        PointRecord {
            id: point.id().to_owned(),
            missing_triples: point.missing_triples().clone(),
            text: point.text().to_owned(),
            triples: point.triples().clone(),
        }
    }
}

impl TryFrom<PointRecord> for DataPoint {
    type Error = crate::model::ModelError;

    fn try_from(record: PointRecord) -> Result<Self, Self::Error> {
        DataPoint::with_missing(record.id, record.text, record.triples, record.missing_triples)
    }
}

/// Sidecar metadata for a data file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    #[serde(default)]
    pub provenance: Vec<ProvenanceRecord>,
    /// Resolved command configuration of the run that wrote the file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<serde_json::Value>,
    #[serde(default)]
    pub split: Split,
}

impl Manifest {
    pub fn for_dataset(ds: &Dataset) -> Self {
        Manifest {
            name: ds.name.clone(),
            provenance: ds.provenance().to_vec(),
            run: None,
            split: ds.split,
        }
    }
}

/// `data/a.jsonl` → `data/a.manifest.json`
pub fn manifest_path(data: &Path) -> PathBuf {
    data.with_extension("manifest.json")
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<(), IngestError> {
    let mut body = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    body.push('\n');
    fs::write(path, body)?;
    Ok(())
}

/// Reads the manifest for a data file. Falls back to `manifest.json` in the
/// same directory, then to a default named after the file stem.
pub fn read_manifest(data: &Path) -> Result<Manifest, IngestError> {
    let candidates = [
        manifest_path(data),
        data.parent().unwrap_or(Path::new(".")).join("manifest.json"),
    ];
    for candidate in candidates {
        if candidate.is_file() {
            let body = fs::read_to_string(&candidate)?;
            return serde_json::from_str(&body).map_err(|e| IngestError::SchemaViolation {
                line: e.line(),
                message: format!("{}: {e}", candidate.display()),
            });
        }
    }
    Ok(Manifest {
        name: data
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        provenance: Vec::new(),
        run: None,
        split: Split::Train,
    })
}

pub fn write_canonical_to<W: Write>(mut out: W, ds: &Dataset) -> Result<(), IngestError> {
    for point in ds.points() {
        let line = serde_json::to_string(&PointRecord::from(point)).expect("record serializes");
        out.write_all(line.as_bytes())?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Writes the data file and its manifest.
pub fn write_canonical(path: &Path, ds: &Dataset) -> Result<(), IngestError> {
    write_canonical_to(BufWriter::new(File::create(path)?), ds)?;
    write_manifest(&manifest_path(path), &Manifest::for_dataset(ds))
}

pub fn read_canonical_from<R: BufRead>(input: R, manifest: Manifest) -> Result<Dataset, IngestError> {
    let mut points = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (index, line) in input.lines().enumerate() {
        let line_no = index + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let violation = |message: String| IngestError::SchemaViolation {
            line: line_no,
            message,
        };
        let record: PointRecord =
            serde_json::from_str(&line).map_err(|e| violation(e.to_string()))?;
        if !seen.insert(record.id.clone()) {
            return Err(violation(format!("duplicate id `{}`", record.id)));
        }
        points.push(DataPoint::try_from(record).map_err(|e| violation(e.to_string()))?);
    }
    Ok(Dataset::with_provenance(
        manifest.name,
        manifest.split,
        points,
        manifest.provenance,
    )?)
}

pub fn read_canonical(path: &Path) -> Result<Dataset, IngestError> {
    let manifest = read_manifest(path)?;
    read_canonical_from(BufReader::new(File::open(path)?), manifest)
}
