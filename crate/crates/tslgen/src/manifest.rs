//! The set of files a generation run produces.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FileRole {
    ExtensionHeader,
    Declaration,
    Definition,
    Umbrella,
    Test,
    Build,
}

impl FileRole {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::ExtensionHeader => "extension-header",
            Self::Declaration => "declaration",
            Self::Definition => "definition",
            Self::Umbrella => "umbrella",
            Self::Test => "test",
            Self::Build => "build",
        }
    }

    /// Part of the header-only library itself.
    pub fn is_library(self) -> bool {
        matches!(
            self,
            Self::ExtensionHeader | Self::Declaration | Self::Definition | Self::Umbrella
        )
    }
}

impl fmt::Display for FileRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedFile {
    /// Relative, `/`-separated.
    pub path: String,
    pub content: String,
    pub role: FileRole,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ManifestError {
    #[error("path `{0}` is generated twice")]
    Duplicate(String),
    #[error("path `{0}` must be relative and must not leave the output directory")]
    NotRelative(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FileManifest {
    files: Vec<GeneratedFile>,
}

/// LF line endings and exactly one trailing newline.
pub fn normalize_text(text: &str) -> String {
    let mut out = text.replace("\r\n", "\n").replace('\r', "\n");
    let trimmed = out.trim_end_matches('\n').len();
    out.truncate(trimmed);
    out.push('\n');
    out
}

impl FileManifest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(
        &mut self,
        path: impl Into<String>,
        content: impl AsRef<str>,
        role: FileRole,
    ) -> Result<(), ManifestError> {
        let path = path.into();
        if path.is_empty()
            || path.starts_with('/')
            || path.contains('\\')
            || path.split('/').any(|c| c == ".." || c.is_empty())
        {
            return Err(ManifestError::NotRelative(path));
        }
        if self.get(&path).is_some() {
            return Err(ManifestError::Duplicate(path));
        }
        self.files.push(GeneratedFile {
            path,
            content: normalize_text(content.as_ref()),
            role,
        });
        Ok(())
    }

    pub fn get(&self, path: &str) -> Option<&GeneratedFile> {
        self.files.iter().find(|f| f.path == path)
    }

    /// Files in insertion order.
    pub fn files(&self) -> &[GeneratedFile] {
        &self.files
    }

    pub fn with_role(&self, role: FileRole) -> impl Iterator<Item = &GeneratedFile> {
        self.files.iter().filter(move |f| f.role == role)
    }

    pub fn paths(&self) -> Vec<&str> {
        let mut paths: Vec<&str> = self.files.iter().map(|f| f.path.as_str()).collect();
        paths.sort_unstable();
        paths
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    /// Writes every file below `root`, creating directories as needed.
    pub fn write_to(&self, root: &Path) -> Result<(), (PathBuf, io::Error)> {
        let mut files: Vec<&GeneratedFile> = self.files.iter().collect();
        files.sort_by(|a, b| a.path.cmp(&b.path));
        for file in files {
            let path = root.join(&file.path);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent).map_err(|e| (parent.to_owned(), e))?;
            }
            fs::write(&path, file.content.as_bytes()).map_err(|e| (path.clone(), e))?;
        }
        Ok(())
    }
}
