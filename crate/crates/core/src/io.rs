//! On-disk formats.
//!
//! * Corpus: JSON lines `{"id": "...", "attributes": ["kind:value", ...], "embedding": [..]}`.
//!   The embedding may instead come from a sidecar embedding file, one row per line.
//! * Embedding file: `SEEV` magic, `u16` version, `u32` rows, `u32` dimension
//!   (all little-endian), then `rows × dim` little-endian `f32`, row-major.
//! * Partition file: `{"clusters": [["id", ...], ...]}`.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::knn::MessageRecord;
use crate::partition::Partition;

pub const EMBEDDING_MAGIC: &[u8; 4] = b"SEEV";
pub const EMBEDDING_VERSION: u16 = 1;
pub const EMBEDDING_HEADER_LEN: usize = 14;

/// Dense row-major `f32` matrix as stored in an embedding file.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    dim: usize,
    data: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn new(rows: usize, dim: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != rows * dim {
            return Err(Error::Input(format!(
                "{} values do not fill a {rows} x {dim} matrix",
                data.len()
            )));
        }
        Ok(EmbeddingMatrix { rows, dim, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Expected file length for a matrix of this shape.
    pub fn encoded_len(rows: usize, dim: usize) -> usize {
        EMBEDDING_HEADER_LEN + 4 * rows * dim
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(Self::encoded_len(self.rows, self.dim));
        out.extend_from_slice(EMBEDDING_MAGIC);
        out.extend_from_slice(&EMBEDDING_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.rows as u32).to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        for x in &self.data {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, String> {
        if bytes.len() < EMBEDDING_HEADER_LEN {
            return Err(format!("{} bytes is shorter than the header", bytes.len()));
        }
        if &bytes[..4] != EMBEDDING_MAGIC {
            return Err("missing SEEV magic".into());
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != EMBEDDING_VERSION {
            return Err(format!("unsupported format version {version}"));
        }
        let rows = u32::from_le_bytes(bytes[6..10].try_into().expect("4 bytes")) as usize;
        let dim = u32::from_le_bytes(bytes[10..14].try_into().expect("4 bytes")) as usize;
        let expected = rows
            .checked_mul(dim)
            .and_then(|cells| cells.checked_mul(4))
            .and_then(|body| body.checked_add(EMBEDDING_HEADER_LEN));
        if expected != Some(bytes.len()) {
            return Err(format!(
                "{rows} rows of dimension {dim} need {} bytes, file has {}",
                expected.map_or_else(|| "too many".to_string(), |e| e.to_string()),
                bytes.len()
            ));
        }
        let data = bytes[EMBEDDING_HEADER_LEN..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        Ok(EmbeddingMatrix { rows, dim, data })
    }
}

pub fn read_embeddings(path: &Path) -> Result<EmbeddingMatrix> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    EmbeddingMatrix::from_bytes(&bytes).map_err(|message| Error::Format {
        path: path.to_path_buf(),
        message,
    })
}

pub fn write_embeddings(path: &Path, matrix: &EmbeddingMatrix) -> Result<()> {
    fs::write(path, matrix.to_bytes()).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Serialize, Deserialize)]
struct CorpusLine {
    id: String,
    #[serde(default)]
    attributes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    embedding: Option<Vec<f64>>,
}

fn check_attribute(attribute: &str) -> std::result::Result<(), String> {
    match attribute.split_once(':') {
        Some((kind, _)) if !kind.is_empty() => Ok(()),
        _ => Err(format!(
            "attribute '{attribute}' is not namespaced as kind:value"
        )),
    }
}

/// Reads a corpus, taking embeddings inline or from `sidecar`.
///
/// Blank lines are skipped; diagnostics carry 1-based line numbers.
pub fn read_corpus(path: &Path, sidecar: Option<&Path>) -> Result<Vec<MessageRecord<f64>>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let matrix = sidecar.map(read_embeddings).transpose()?;
    let at = |line: usize, message: String| Error::Line {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut records = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut dim: Option<usize> = None;
    for (index, line) in BufReader::new(file).lines().enumerate() {
        let number = index + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: CorpusLine =
            serde_json::from_str(&line).map_err(|e| at(number, format!("malformed record: {e}")))?;
        if !seen.insert(parsed.id.clone()) {
            return Err(at(number, format!("duplicate id '{}'", parsed.id)));
        }
        for attribute in &parsed.attributes {
            check_attribute(attribute).map_err(|m| at(number, m))?;
        }
        let embedding = match (&matrix, parsed.embedding) {
            (Some(_), Some(_)) => {
                return Err(at(
                    number,
                    "inline embedding is not allowed when a sidecar embedding file is given".into(),
                ))
            }
            (None, None) => {
                return Err(at(
                    number,
                    format!(
                        "record '{}' has no embedding and no sidecar embedding file was given",
                        parsed.id
                    ),
                ))
            }
            (None, Some(inline)) => inline,
            (Some(m), None) => {
                let row = records.len();
                if row >= m.rows() {
                    return Err(at(
                        number,
                        format!("sidecar embedding file has only {} rows", m.rows()),
                    ));
                }
                m.row(row).iter().map(|&x| f64::from(x)).collect()
            }
        };
        match dim {
            None => dim = Some(embedding.len()),
            Some(d) if d != embedding.len() => {
                return Err(at(
                    number,
                    format!(
                        "embedding dimension {} differs from the corpus dimension {d}",
                        embedding.len()
                    ),
                ))
            }
            Some(_) => {}
        }
        if embedding.is_empty() {
            return Err(at(number, "embedding is empty".into()));
        }
        records.push(MessageRecord {
            id: parsed.id,
            attributes: parsed.attributes,
            embedding,
        });
    }
    if let Some(m) = &matrix {
        if m.rows() != records.len() {
            return Err(Error::Format {
                path: path.to_path_buf(),
                message: format!(
                    "sidecar embedding file has {} rows but the corpus has {} records",
                    m.rows(),
                    records.len()
                ),
            });
        }
    }
    Ok(records)
}

/// Writes a corpus with inline embeddings.
pub fn write_corpus(path: &Path, records: &[MessageRecord<f64>]) -> Result<()> {
    let mut out = Vec::new();
    for record in records {
        let line = CorpusLine {
            id: record.id.clone(),
            attributes: record.attributes.clone(),
            embedding: Some(record.embedding.clone()),
        };
        serde_json::to_writer(&mut out, &line).map_err(|e| Error::Invariant(e.to_string()))?;
        out.push(b'\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Writes a corpus without inline embeddings plus a sidecar embedding file.
///
/// The sidecar stores `f32`, so embeddings lose precision on the way out.
pub fn write_corpus_with_sidecar(
    path: &Path,
    sidecar: &Path,
    records: &[MessageRecord<f64>],
) -> Result<()> {
    let dim = records.first().map_or(0, |r| r.embedding.len());
    let mut data = Vec::with_capacity(records.len() * dim);
    let mut out = Vec::new();
    for record in records {
        if record.embedding.len() != dim {
            return Err(Error::Input(format!(
                "record '{}' has dimension {} but the corpus has {dim}",
                record.id,
                record.embedding.len()
            )));
        }
        data.extend(record.embedding.iter().map(|&x| x as f32));
        let line = CorpusLine {
            id: record.id.clone(),
            attributes: record.attributes.clone(),
            embedding: None,
        };
        serde_json::to_writer(&mut out, &line).map_err(|e| Error::Invariant(e.to_string()))?;
        out.push(b'\n');
    }
    write_embeddings(sidecar, &EmbeddingMatrix::new(records.len(), dim, data)?)?;
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// A partition over external message ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionFile {
    pub clusters: Vec<Vec<String>>,
}

impl PartitionFile {
    pub fn from_partition(partition: &Partition, ids: &[String]) -> Self {
        PartitionFile {
            clusters: partition
                .clusters()
                .iter()
                .map(|c| c.iter().map(|&v| ids[v].clone()).collect())
                .collect(),
        }
    }

    /// Converts to a node-index partition using `ids` as the index order.
    pub fn to_partition(&self, ids: &[String]) -> Result<Partition> {
        let index: HashMap<&str, usize> =
            ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let clusters = self
            .clusters
            .iter()
            .map(|c| {
                c.iter()
                    .map(|id| {
                        index.get(id.as_str()).copied().ok_or_else(|| {
                            Error::Input(format!("id '{id}' is not in the item universe"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Partition::new(ids.len(), clusters)
    }

    /// All ids in file order.
    pub fn ids(&self) -> Vec<String> {
        self.clusters.iter().flatten().cloned().collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("string clusters serialize");
        bytes.push(b'\n');
        bytes
    }
}

pub fn read_partition(path: &Path) -> Result<PartitionFile> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: format!("malformed partition file: {e}"),
    })
}

pub fn write_partition(path: &Path, partition: &PartitionFile) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&partition.to_bytes())
        .map_err(|e| Error::io(path, e))
}
