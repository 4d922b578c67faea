use std::path::{Path, PathBuf};

/// Errors of the command-line layer.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] peps_core::Error),
    /// Filesystem failure on `path`.
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// A payload error tagged with the file it came from.
    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        #[source]
        source: peps_core::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn format(path: &Path, offset: usize, reason: impl Into<String>) -> Self {
        Error::File {
            path: path.to_path_buf(),
            source: peps_core::Error::Format {
                offset,
                reason: reason.into(),
            },
        }
    }

    pub(crate) fn in_file(path: &Path, source: peps_core::Error) -> Self {
        Error::File {
            path: path.to_path_buf(),
            source,
        }
    }

    /// The core error underneath, if any.
    pub fn core(&self) -> Option<&peps_core::Error> {
        match self {
            Error::Core(e) | Error::File { source: e, .. } => Some(e),
            Error::Io { .. } => None,
        }
    }

    /// Process exit status: 2 configuration, 3 numeric, 4 I/O or format.
    pub fn exit_code(&self) -> i32 {
        use peps_core::Error as E;
        match self.core() {
            None => 4,
            Some(E::Config(_) | E::Input(_) | E::Range(_) | E::Contract(_)) => 2,
            Some(E::NumericFault { .. } | E::Diverged { .. } | E::Degenerate(_)) => 3,
            Some(E::Format { .. } | E::UnsupportedVersion { .. }) => 4,
        }
    }
}

pub(crate) fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
