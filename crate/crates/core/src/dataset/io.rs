//! Line-delimited JSON query files, model manifests and embedding sidecars.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::embed::{normalize, HashedEmbedder, DEFAULT_EMBEDDING_DIM};
use super::{Dataset, DatasetError, ModelSpec, QueryRecord, DEFAULT_L_MAX, NORM_TOLERANCE};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbedderKind {
    /// Missing vectors are filled by the feature-hashing embedder.
    #[default]
    Hashed,
    /// Every record must carry a vector, inline or in a sidecar.
    Precomputed,
}

#[derive(Clone, Debug)]
pub struct DatasetPaths {
    pub queries: PathBuf,
    pub models: PathBuf,
    /// Extra embedding table keyed by query or model id.
    pub embeddings: Option<PathBuf>,
}

impl DatasetPaths {
    pub fn new(queries: impl Into<PathBuf>, models: impl Into<PathBuf>) -> Self {
        DatasetPaths {
            queries: queries.into(),
            models: models.into(),
            embeddings: None,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LoadOptions {
    pub embedder: EmbedderKind,
    /// Dimension for hashed embeddings.
    pub dim: usize,
    pub l_max: u32,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            embedder: EmbedderKind::Hashed,
            dim: DEFAULT_EMBEDDING_DIM,
            l_max: DEFAULT_L_MAX,
        }
    }
}

/// `<file>.emb`, the default sidecar location for a record file.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".emb");
    PathBuf::from(s)
}

#[derive(Serialize, Deserialize)]
struct EmbeddingRow {
    id: String,
    embedding: Vec<f64>,
}

fn io_err(path: &Path, source: std::io::Error) -> DatasetError {
    DatasetError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, DatasetError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row = serde_json::from_str(&line).map_err(|e| DatasetError::Parse {
            path: path.display().to_string(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        out.push(row);
    }
    Ok(out)
}

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), DatasetError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    for row in rows {
        serde_json::to_writer(&mut w, row).map_err(|e| io_err(path, std::io::Error::other(e)))?;
        w.write_all(b"\n").map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Reads an embedding table (`{"id": ..., "embedding": [...]}` per line).
pub fn read_embeddings(path: &Path) -> Result<HashMap<String, Vec<f64>>, DatasetError> {
    Ok(read_jsonl::<EmbeddingRow>(path)?
        .into_iter()
        .map(|r| (r.id, r.embedding))
        .collect())
}

struct Resolver {
    table: HashMap<String, Vec<f64>>,
    kind: EmbedderKind,
    hasher: HashedEmbedder,
}

impl Resolver {
    fn resolve(&self, id: &str, inline: Vec<f64>, text: &str) -> Result<Vec<f64>, DatasetError> {
        let mut v = if !inline.is_empty() {
            inline
        } else if let Some(v) = self.table.get(id) {
            v.clone()
        } else {
            match self.kind {
                EmbedderKind::Hashed => return Ok(self.hasher.embed(text)),
                EmbedderKind::Precomputed => return Err(DatasetError::Lookup(id.to_string())),
            }
        };
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        // already-unit vectors are kept bit-for-bit so save/load round-trips
        if (norm - 1.0).abs() > NORM_TOLERANCE && !normalize(&mut v) {
            return Err(DatasetError::Schema(format!(
                "embedding for `{id}` is zero"
            )));
        }
        Ok(v)
    }
}

pub fn load_dataset(paths: &DatasetPaths, options: &LoadOptions) -> Result<Dataset, DatasetError> {
    let mut table = HashMap::new();
    for sidecar in [sidecar_path(&paths.queries), sidecar_path(&paths.models)] {
        if sidecar.exists() {
            table.extend(read_embeddings(&sidecar)?);
        }
    }
    if let Some(extra) = &paths.embeddings {
        table.extend(read_embeddings(extra)?);
    }
    let resolver = Resolver {
        table,
        kind: options.embedder,
        hasher: HashedEmbedder::new(options.dim.max(1)),
    };

    let mut models: Vec<ModelSpec> = read_jsonl(&paths.models)?;
    for m in &mut models {
        let inline = std::mem::take(&mut m.embedding);
        m.embedding = resolver.resolve(&m.id, inline, &m.description)?;
    }
    let mut queries: Vec<QueryRecord> = read_jsonl(&paths.queries)?;
    for q in &mut queries {
        let inline = std::mem::take(&mut q.embedding);
        q.embedding = resolver.resolve(&q.id, inline, &q.text)?;
    }
    Dataset::new(queries, models, options.l_max)
}

/// Writes the dataset with inline embeddings so it reloads without sidecars.
pub fn save_dataset(dataset: &Dataset, paths: &DatasetPaths) -> Result<(), DatasetError> {
    write_jsonl(&paths.models, &dataset.models)?;
    write_jsonl(&paths.queries, &dataset.queries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::fixtures::*;
    use crate::dataset::{Tier, DEFAULT_EMBEDDING_DIM};
    use std::fs;

    fn write(path: &Path, body: &str) {
        fs::write(path, body).unwrap();
    }

    const MODELS: &str = r#"{"id":"a","name":"A","description":"small fast model","price_in":0.15,"price_out":0.6,"tier":"WEAK","concurrency_limit":4}
{"id":"b","name":"B","description":"large model","price_in":2.5,"price_out":10,"tier":"STRONG","concurrency_limit":2}
"#;

    #[test]
    fn empty_query_file_loads() {
        let dir = tempfile::tempdir().unwrap();
        let (q, m) = (dir.path().join("q.jsonl"), dir.path().join("m.jsonl"));
        write(&q, "");
        write(&m, MODELS);
        let ds = load_dataset(&DatasetPaths::new(&q, &m), &LoadOptions::default()).unwrap();
        assert_eq!(ds.n_queries(), 0);
        assert_eq!(ds.n_models(), 2);
        assert_eq!(ds.embedding_dim, DEFAULT_EMBEDDING_DIM);
        assert_eq!(ds.models[1].tier, Tier::Strong);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let (q, m) = (dir.path().join("q.jsonl"), dir.path().join("m.jsonl"));
        write(&m, MODELS);
        write(
            &q,
            "{\"id\":\"q1\",\"text\":\"t\",\"source\":\"MMLU\",\"in_tokens\":3,\"correctness\":{\"a\":1,\"b\":0},\"out_tokens\":{\"a\":5,\"b\":6}}\n{not json}\n",
        );
        let err = load_dataset(&DatasetPaths::new(&q, &m), &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, DatasetError::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn missing_model_key_is_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let (q, m) = (dir.path().join("q.jsonl"), dir.path().join("m.jsonl"));
        write(&m, MODELS);
        write(
            &q,
            "{\"id\":\"q1\",\"text\":\"t\",\"source\":\"GSM8K\",\"in_tokens\":3,\"correctness\":{\"a\":1},\"out_tokens\":{\"a\":5,\"b\":6}}\n",
        );
        let err = load_dataset(&DatasetPaths::new(&q, &m), &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, DatasetError::Schema(_)), "{err}");
    }

    #[test]
    fn precomputed_uses_sidecar_and_checks_dimension() {
        let dir = tempfile::tempdir().unwrap();
        let (q, m) = (dir.path().join("q.jsonl"), dir.path().join("m.jsonl"));
        write(&m, MODELS);
        write(
            &q,
            "{\"id\":\"q1\",\"text\":\"t\",\"source\":\"MATH500\",\"in_tokens\":3,\"correctness\":{\"a\":1,\"b\":0},\"out_tokens\":{\"a\":5,\"b\":6}}\n",
        );
        write(
            &sidecar_path(&m),
            "{\"id\":\"a\",\"embedding\":[3.0,4.0]}\n{\"id\":\"b\",\"embedding\":[0.0,2.0]}\n",
        );
        let opts = LoadOptions {
            embedder: EmbedderKind::Precomputed,
            ..LoadOptions::default()
        };
        // q1 has no vector anywhere
        let err = load_dataset(&DatasetPaths::new(&q, &m), &opts).unwrap_err();
        assert!(
            matches!(err, DatasetError::Lookup(ref id) if id == "q1"),
            "{err}"
        );

        write(
            &sidecar_path(&q),
            "{\"id\":\"q1\",\"embedding\":[1.0,1.0,1.0]}\n",
        );
        let err = load_dataset(&DatasetPaths::new(&q, &m), &opts).unwrap_err();
        assert!(matches!(err, DatasetError::Schema(_)), "{err}");

        write(
            &sidecar_path(&q),
            "{\"id\":\"q1\",\"embedding\":[1.0,1.0]}\n",
        );
        let ds = load_dataset(&DatasetPaths::new(&q, &m), &opts).unwrap();
        assert_eq!(ds.models[0].embedding, vec![0.6, 0.8]);
        let qn: f64 = ds.queries[0].embedding.iter().map(|x| x * x).sum();
        assert!((qn.sqrt() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn save_then_load_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        let (q, m) = (dir.path().join("q.jsonl"), dir.path().join("m.jsonl"));
        let hasher = HashedEmbedder::new(32);
        let mut models: Vec<ModelSpec> = PRICE_TABLE
            .iter()
            .map(|&(id, i, o, t)| model(id, i, o, t))
            .collect();
        for m in &mut models {
            m.embedding = hasher.embed(&m.description);
        }
        let queries = (0..20)
            .map(|i| {
                let mut rec = query(
                    &format!("q{i}"),
                    &models,
                    &[(i % 2) as u8; 10],
                    &[(i * 37 % 1000) as u64; 10],
                );
                rec.text = format!("Compute {i} times {} please", i * 7 + 1);
                rec.in_tokens = 17 * i as u64;
                rec.embedding = hasher.embed(&rec.text);
                rec
            })
            .collect();
        let ds = Dataset::new(queries, models, 1024).unwrap();
        let paths = DatasetPaths::new(&q, &m);
        save_dataset(&ds, &paths).unwrap();
        let back = load_dataset(&paths, &LoadOptions::default()).unwrap();
        assert_eq!(back, ds);
    }
}
