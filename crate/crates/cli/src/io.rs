use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use airtran::data::{load_matrix, EmbeddingMatrix};
use tempfile::NamedTempFile;

use crate::error::{CliError, Result};

/// Writes through a temporary file in the target directory, then renames
/// it into place, so readers never see a partial file.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> airtran::Result<()>,
{
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent).map_err(|e| CliError::io(&parent, e))?;
    let tmp = NamedTempFile::new_in(&parent).map_err(|e| CliError::io(&parent, e))?;
    {
        let mut out = BufWriter::new(tmp.as_file());
        fill(&mut out).map_err(|e| CliError::file(path, e))?;
        out.flush().map_err(|e| CliError::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, |w| {
        w.write_all(text.as_bytes())
            .map_err(|source| airtran::Error::Io { offset: 0, source })
    })
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::io(path, e))
}

/// Reads and validates `path` with a core reader, naming the file on error.
pub fn read_with<T, F>(path: &Path, parse: F) -> Result<T>
where
    F: FnOnce(BufReader<File>) -> airtran::Result<T>,
{
    parse(open(path)?).map_err(|e| CliError::file(path, e))
}

/// Model subdirectories of a pool, sorted by id.
pub fn model_ids(pool_dir: &Path) -> Result<Vec<String>> {
    let entries = fs::read_dir(pool_dir).map_err(|e| CliError::io(pool_dir, e))?;
    let mut ids = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| CliError::io(pool_dir, e))?;
        if entry.path().is_dir() {
            ids.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    ids.sort();
    if ids.len() < 2 {
        return Err(CliError::file(
            pool_dir,
            airtran::Error::EmptyInput(format!("pool needs at least 2 model directories, found {}", ids.len())),
        ));
    }
    Ok(ids)
}

#[derive(Debug, Clone)]
pub struct ModelEmbeddings {
    pub id: String,
    pub queries: EmbeddingMatrix,
    pub docs: EmbeddingMatrix,
}

pub fn query_path(pool_dir: &Path, id: &str) -> PathBuf {
    pool_dir.join(id).join("queries.mat")
}

pub fn doc_path(pool_dir: &Path, id: &str) -> PathBuf {
    pool_dir.join(id).join("docs.mat")
}

pub fn load_model(pool_dir: &Path, id: &str) -> Result<ModelEmbeddings> {
    let load = |path: PathBuf| {
        load_matrix(&path).map_err(|source| CliError::ModelFile {
            model: id.to_string(),
            path,
            source,
        })
    };
    Ok(ModelEmbeddings {
        id: id.to_string(),
        queries: load(query_path(pool_dir, id))?,
        docs: load(doc_path(pool_dir, id))?,
    })
}
