use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use super::{load_columnar, load_csv, ColumnTable, TableError};

static GENERATION: AtomicU64 = AtomicU64::new(1);

/// A table held by the registry together with a load generation, which
/// changes whenever the name is rebound and keeps cache keys honest.
#[derive(Debug, Clone)]
pub struct RegisteredTable {
    pub table: Arc<ColumnTable>,
    pub generation: u64,
}

/// Tables addressed by name (file stem) under one data directory.
#[derive(Debug)]
pub struct TableRegistry {
    root: Option<PathBuf>,
    tables: RwLock<BTreeMap<String, RegisteredTable>>,
    load_locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl Default for TableRegistry {
    fn default() -> Self {
        Self::in_memory()
    }
}

impl TableRegistry {
    /// Registry rooted at `dir`; nothing is loaded until [`load_all`](Self::load_all).
    pub fn new(dir: &Path) -> Result<Self, TableError> {
        let root = dir
            .canonicalize()
            .map_err(|e| TableError::io(format!("data directory {}", dir.display()), e))?;
        if !root.is_dir() {
            return Err(TableError::io(
                format!("data directory {}", dir.display()),
                std::io::Error::new(std::io::ErrorKind::NotADirectory, "not a directory"),
            ));
        }
        Ok(TableRegistry {
            root: Some(root),
            tables: RwLock::default(),
            load_locks: Mutex::default(),
        })
    }

    /// Registry with no backing directory; tables are added with [`insert`](Self::insert).
    pub fn in_memory() -> Self {
        TableRegistry {
            root: None,
            tables: RwLock::default(),
            load_locks: Mutex::default(),
        }
    }

    pub fn root(&self) -> Option<&Path> {
        self.root.as_deref()
    }

    /// Loads every `.csv` and `.pwct` file directly under the data
    /// directory. When both forms of a stem exist the PWCT file wins.
    pub fn load_all(&self) -> Result<Vec<String>, TableError> {
        let Some(root) = &self.root else {
            return Ok(Vec::new());
        };
        let entries = std::fs::read_dir(root).map_err(|e| TableError::io(format!("listing {}", root.display()), e))?;
        let mut files: BTreeMap<String, PathBuf> = BTreeMap::new();
        for entry in entries {
            let path = entry.map_err(|e| TableError::io("listing data directory", e))?.path();
            let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
            let Some(stem) = path.file_stem().and_then(|s| s.to_str()).map(str::to_string) else {
                continue;
            };
            match ext.as_deref() {
                Some("pwct") => {
                    files.insert(stem, path);
                }
                Some("csv") => {
                    files.entry(stem).or_insert(path);
                }
                _ => {}
            }
        }
        let mut names = Vec::with_capacity(files.len());
        for (stem, path) in files {
            let rel = path.strip_prefix(root).unwrap_or(&path).to_path_buf();
            self.load_file(&rel)?;
            names.push(stem);
        }
        Ok(names)
    }

    fn resolve(&self, rel: &Path) -> Result<PathBuf, TableError> {
        let root = self
            .root
            .as_ref()
            .ok_or_else(|| TableError::PathEscape(rel.display().to_string()))?;
        let full = root
            .join(rel)
            .canonicalize()
            .map_err(|e| TableError::io(format!("resolving {}", rel.display()), e))?;
        if !full.starts_with(root) {
            return Err(TableError::PathEscape(rel.display().to_string()));
        }
        Ok(full)
    }

    /// Loads one file (path relative to the data directory) and registers
    /// it under its file stem. Loads of the same name are serialized.
    pub fn load_file(&self, rel: &Path) -> Result<RegisteredTable, TableError> {
        let path = self.resolve(rel)?;
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| TableError::Schema(format!("bad table file name {}", path.display())))?
            .to_string();
        let lock = {
            let mut locks = self.load_locks.lock().unwrap();
            locks.entry(name.clone()).or_default().clone()
        };
        let _guard = lock.lock().unwrap();
        let table = match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("pwct") => load_columnar(&path)?,
            _ => load_csv(&path)?,
        };
        Ok(self.insert(table))
    }

    /// Registers a table under its own name, replacing any previous binding.
    pub fn insert(&self, table: ColumnTable) -> RegisteredTable {
        let entry = RegisteredTable {
            table: Arc::new(table),
            generation: GENERATION.fetch_add(1, Ordering::Relaxed),
        };
        self.tables
            .write()
            .unwrap()
            .insert(entry.table.name().to_string(), entry.clone());
        entry
    }

    pub fn get(&self, name: &str) -> Option<RegisteredTable> {
        self.tables.read().unwrap().get(name).cloned()
    }

    /// All tables in name order.
    pub fn list(&self) -> Vec<RegisteredTable> {
        self.tables.read().unwrap().values().cloned().collect()
    }
}
