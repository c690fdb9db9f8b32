//! Program persistence: one canonical `<name>.sib.json` file per program.

use super::program::{parse, serialize, BlockProgram};
use super::LangError;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const PROGRAM_EXTENSION: &str = ".sib.json";

#[derive(Debug, Clone)]
pub struct ProgramStore {
    dir: PathBuf,
}

/// `[A-Za-z0-9_-]{1,64}`
pub fn is_valid_name(name: &str) -> bool {
    (1..=64).contains(&name.len())
        && name
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
}

impl ProgramStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_for(&self, name: &str) -> Result<PathBuf, LangError> {
        if !is_valid_name(name) {
            return Err(LangError::InvalidName(name.to_string()));
        }
        Ok(self.dir.join(format!("{name}{PROGRAM_EXTENSION}")))
    }

    /// Writes the canonical form, replacing any previous program of that name.
    pub fn store(&self, name: &str, program: &BlockProgram) -> Result<String, LangError> {
        let path = self.path_for(name)?;
        program.validate()?;
        let storage = |e: std::io::Error| LangError::Storage(format!("{}: {e}", path.display()));
        fs::create_dir_all(&self.dir).map_err(storage)?;
        // write-then-rename so readers never observe a partial file
        let tmp = self.dir.join(format!(".{name}{PROGRAM_EXTENSION}.tmp"));
        {
            let mut f = fs::File::create(&tmp).map_err(storage)?;
            f.write_all(&serialize(program)).map_err(storage)?;
            f.sync_all().map_err(storage)?;
        }
        fs::rename(&tmp, &path).map_err(storage)?;
        Ok(name.to_string())
    }

    /// Raw canonical bytes of a stored program.
    pub fn load_bytes(&self, name: &str) -> Result<Vec<u8>, LangError> {
        let path = self.path_for(name)?;
        fs::read(&path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => LangError::NotFound(name.to_string()),
            _ => LangError::Storage(format!("{}: {e}", path.display())),
        })
    }

    pub fn load(&self, name: &str) -> Result<BlockProgram, LangError> {
        let bytes = self.load_bytes(name)?;
        parse(&bytes).map_err(|e| match e {
            // a file that no longer parses is reported as a schema problem
            LangError::Syntax(msg) => LangError::schema(None, "$", format!("corrupted program file: {msg}")),
            other => other,
        })
    }

    /// Names of stored programs, sorted.
    pub fn list(&self) -> Result<Vec<String>, LangError> {
        let entries = match fs::read_dir(&self.dir) {
            Ok(e) => e,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(LangError::Storage(format!("{}: {e}", self.dir.display()))),
        };
        let mut names: Vec<String> = entries
            .filter_map(|e| e.ok())
            .filter_map(|e| {
                let file = e.file_name().into_string().ok()?;
                let stem = file.strip_suffix(PROGRAM_EXTENSION)?;
                is_valid_name(stem).then(|| stem.to_string())
            })
            .collect();
        names.sort();
        Ok(names)
    }
}
