//! Line-oriented image manifests.
//!
//! ```text
//! # comment
//! dir  /etc
//! file /etc/motd inline:68656c6c6f
//! file /etc/hosts @hosts.txt
//! link /motd etc/motd
//! ```
//!
//! Paths are absolute. Parents must be declared (as `dir`) before their
//! children. `@` sources are read at build time, relative to the manifest's
//! directory when loaded with [`Manifest::load`].

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::codec::{CodecError, PathName};

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: parent of {path} is not a declared directory")]
    OrphanDeclaration { line: usize, path: PathName },
    #[error("line {line}: {path} declared twice")]
    DuplicatePath { line: usize, path: PathName },
    #[error("reading manifest: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PayloadSource {
    Inline(Vec<u8>),
    HostFile(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Declaration {
    Dir(PathName),
    File(PathName, PayloadSource),
    Link(PathName, PathName),
}

impl Declaration {
    pub fn path(&self) -> &PathName {
        match self {
            Declaration::Dir(p) | Declaration::File(p, _) | Declaration::Link(p, _) => p,
        }
    }

    fn is_dir(&self) -> bool {
        matches!(self, Declaration::Dir(_))
    }
}

impl fmt::Display for Declaration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Declaration::Dir(p) => write!(f, "dir {p}"),
            Declaration::File(p, PayloadSource::Inline(bytes)) => write!(f, "file {p} inline:{}", hex::encode(bytes)),
            Declaration::File(p, PayloadSource::HostFile(host)) => write!(f, "file {p} @{}", host.display()),
            Declaration::Link(p, target) => write!(f, "link {p} {target}"),
        }
    }
}

/// Validated declarations in declaration order.
#[derive(Debug, Clone, Default)]
pub struct Manifest {
    declarations: Vec<Declaration>,
    /// declared path -> is a directory
    kinds: BTreeMap<PathName, bool>,
    base_dir: Option<PathBuf>,
}

impl Manifest {
    pub fn new() -> Manifest {
        Manifest::default()
    }

    pub fn parse(text: &str) -> Result<Manifest, ManifestError> {
        let mut manifest = Manifest::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let body = strip_comment(raw).trim();
            if body.is_empty() {
                continue;
            }
            let decl = parse_line(body).map_err(|message| ManifestError::Parse { line, message })?;
            manifest.push_at(decl, line)?;
        }
        Ok(manifest)
    }

    /// Reads and parses a manifest file; `@` sources resolve against its
    /// directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Manifest, ManifestError> {
        let path = path.as_ref();
        let mut manifest = Manifest::parse(&std::fs::read_to_string(path)?)?;
        manifest.base_dir = path.parent().map(Path::to_path_buf);
        Ok(manifest)
    }

    pub fn with_base_dir(mut self, dir: impl Into<PathBuf>) -> Manifest {
        self.base_dir = Some(dir.into());
        self
    }

    pub fn base_dir(&self) -> Option<&Path> {
        self.base_dir.as_deref()
    }

    /// Appends a declaration, enforcing the same rules as parsing.
    pub fn push(&mut self, decl: Declaration) -> Result<(), ManifestError> {
        let line = self.declarations.len() + 1;
        self.push_at(decl, line)
    }

    fn push_at(&mut self, decl: Declaration, line: usize) -> Result<(), ManifestError> {
        let path = decl.path().clone();
        let Some((parent, name)) = path.split_last() else {
            return Err(ManifestError::DuplicatePath { line, path });
        };
        if name.is_dot() || !path.is_dot_free() {
            return Err(ManifestError::Parse {
                line,
                message: format!("{path}: '.' and '..' are created by the builder"),
            });
        }
        if !parent.is_empty() && self.kinds.get(&parent) != Some(&true) {
            return Err(ManifestError::OrphanDeclaration { line, path });
        }
        if self.kinds.contains_key(&path) {
            return Err(ManifestError::DuplicatePath { line, path });
        }
        self.kinds.insert(path, decl.is_dir());
        self.declarations.push(decl);
        Ok(())
    }

    pub fn declarations(&self) -> &[Declaration] {
        &self.declarations
    }

    pub fn len(&self) -> usize {
        self.declarations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.declarations.is_empty()
    }
}

impl fmt::Display for Manifest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for decl in &self.declarations {
            writeln!(f, "{decl}")?;
        }
        Ok(())
    }
}

/// `#` opens a comment at the start of a line or after whitespace.
fn strip_comment(line: &str) -> &str {
    let mut prev_space = true;
    for (i, c) in line.char_indices() {
        if c == '#' && prev_space {
            return &line[..i];
        }
        prev_space = c.is_whitespace();
    }
    line
}

fn parse_line(body: &str) -> Result<Declaration, String> {
    let mut words = body.split_whitespace();
    let kind = words.next().unwrap_or_default();
    let path = words.next().ok_or_else(|| format!("{kind}: missing path"))?;
    let path = parse_abs(path)?;
    let decl = match kind {
        "dir" => Declaration::Dir(path),
        "file" => {
            let source = words.next().ok_or("file: missing payload source")?;
            let source = if let Some(hex) = source.strip_prefix("inline:") {
                PayloadSource::Inline(hex::decode(hex).map_err(|e| format!("bad inline hex: {e}"))?)
            } else if let Some(host) = source.strip_prefix('@') {
                if host.is_empty() {
                    return Err("file: empty host path".into());
                }
                PayloadSource::HostFile(PathBuf::from(host))
            } else {
                return Err(format!("file: payload must be inline:<hex> or @<file>, got {source:?}"));
            };
            Declaration::File(path, source)
        }
        "link" => {
            let target = words.next().ok_or("link: missing target")?;
            Declaration::Link(path, PathName::parse(target).map_err(|e| codec_msg(target, e))?)
        }
        other => return Err(format!("unknown declaration {other:?}")),
    };
    if let Some(extra) = words.next() {
        return Err(format!("unexpected {extra:?}"));
    }
    Ok(decl)
}

fn parse_abs(text: &str) -> Result<PathName, String> {
    if !text.starts_with('/') {
        return Err(format!("{text:?} is not an absolute path"));
    }
    PathName::parse(text).map_err(|e| codec_msg(text, e))
}

fn codec_msg(text: &str, e: CodecError) -> String {
    format!("{text:?}: {e}")
}
