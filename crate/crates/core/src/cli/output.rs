use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::{Builder, NamedTempFile};

use crate::error::{Error, Result};

/// Where a command's primary result goes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sink {
    Stdout,
    File(PathBuf),
}

impl Sink {
    pub fn from_arg(path: Option<&Path>) -> Self {
        match path {
            None => Sink::Stdout,
            Some(p) if p.as_os_str() == "-" => Sink::Stdout,
            Some(p) => Sink::File(p.to_path_buf()),
        }
    }
}

#[cfg(unix)]
fn staging_file(dir: &Path) -> std::io::Result<NamedTempFile> {
    use std::os::unix::fs::PermissionsExt;
    Builder::new()
        .prefix(".materiel-pulse-")
        .permissions(std::fs::Permissions::from_mode(0o644))
        .tempfile_in(dir)
}

#[cfg(not(unix))]
fn staging_file(dir: &Path) -> std::io::Result<NamedTempFile> {
    Builder::new().prefix(".materiel-pulse-").tempfile_in(dir)
}

/// Everything a command wants to emit, held in memory until the command
/// has fully succeeded.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub items: Vec<(Sink, String)>,
}

impl Artifacts {
    pub fn push(&mut self, sink: Sink, content: String) {
        self.items.push((sink, content));
    }

    /// Stage every file next to its destination, then rename them all into
    /// place. Stdout content is written last.
    pub fn commit(self, stdout: &mut dyn Write) -> Result<Vec<PathBuf>> {
        let mut staged = Vec::new();
        let mut to_stdout = Vec::new();
        for (sink, content) in self.items {
            match sink {
                Sink::Stdout => to_stdout.push(content),
                Sink::File(path) => {
                    let dir = match path.parent() {
                        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
                        _ => PathBuf::from("."),
                    };
                    let mut tmp = staging_file(&dir).map_err(|e| Error::io(&dir, e))?;
                    tmp.write_all(content.as_bytes())
                        .and_then(|_| tmp.as_file().sync_all())
                        .map_err(|e| Error::io(tmp.path(), e))?;
                    staged.push((tmp, path));
                }
            }
        }
        let mut written = Vec::with_capacity(staged.len());
        for (tmp, path) in staged {
            tmp.persist(&path).map_err(|e| Error::io(&path, e.error))?;
            written.push(path);
        }
        for content in to_stdout {
            stdout
                .write_all(content.as_bytes())
                .map_err(|e| Error::io("<stdout>", e))?;
        }
        Ok(written)
    }
}
