//! All-or-nothing output: files are written to temporaries and only renamed
//! into place once every one of them was written.

use std::fs;
use std::path::{Path, PathBuf};

use lidarplace_core::Error;

pub struct Staged {
    path: PathBuf,
    bytes: Vec<u8>,
}

impl Staged {
    pub fn new(path: impl Into<PathBuf>, bytes: Vec<u8>) -> Self {
        Staged {
            path: path.into(),
            bytes,
        }
    }
}

fn tmp_sibling(path: &Path) -> PathBuf {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!(".{name}.tmp{}", std::process::id()))
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn commit(files: &[Staged]) -> Result<(), Error> {
    let mut written = Vec::new();
    let result = (|| {
        for f in files {
            if let Some(dir) = f.path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(io(dir))?;
            }
            let tmp = tmp_sibling(&f.path);
            fs::write(&tmp, &f.bytes).map_err(io(&tmp))?;
            written.push((tmp, &f.path));
        }
        Ok(())
    })();
    if let Err(e) = result {
        for (tmp, _) in &written {
            let _ = fs::remove_file(tmp);
        }
        return Err(e);
    }
    for (tmp, dest) in &written {
        fs::rename(tmp, dest).map_err(io(dest))?;
    }
    Ok(())
}

/// Fills a temporary directory via `fill`, then moves its entries into `dest`.
/// Fails without touching `dest` if any entry already exists there.
pub fn stage_dir(dest: &Path, fill: impl FnOnce(&Path) -> Result<(), Error>) -> Result<(), Error> {
    let tmp = tmp_sibling(dest);
    let _ = fs::remove_dir_all(&tmp);
    fs::create_dir_all(&tmp).map_err(io(&tmp))?;
    let result = (|| {
        fill(&tmp)?;
        let entries: Vec<_> = fs::read_dir(&tmp)
            .map_err(io(&tmp))?
            .collect::<Result<_, _>>()
            .map_err(io(&tmp))?;
        if let Some(e) = entries.iter().find(|e| dest.join(e.file_name()).exists()) {
            return Err(Error::Validation(format!(
                "{} already exists",
                dest.join(e.file_name()).display()
            )));
        }
        fs::create_dir_all(dest).map_err(io(dest))?;
        for e in entries {
            let to = dest.join(e.file_name());
            fs::rename(e.path(), &to).map_err(io(&to))?;
        }
        Ok(())
    })();
    let _ = fs::remove_dir_all(&tmp);
    result
}
