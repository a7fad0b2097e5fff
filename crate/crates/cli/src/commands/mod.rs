pub mod cluster;
pub mod compare;
pub mod evaluate;
pub mod preprocess;
pub mod synth;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

/// `dir/stem.nii.gz`, else `dir/stem.nii`.
pub fn find_nifti(dir: &Path, stem: &str) -> Option<PathBuf> {
    [".nii.gz", ".nii"]
        .iter()
        .map(|ext| dir.join(format!("{stem}{ext}")))
        .find(|p| p.is_file())
}

/// Strips `.nii.gz` / `.nii`; `None` for other files.
pub fn nifti_stem(path: &Path) -> Option<String> {
    let name = path.file_name()?.to_str()?;
    name.strip_suffix(".nii.gz")
        .or_else(|| name.strip_suffix(".nii"))
        .map(str::to_string)
}

/// Sorted subject subdirectories of `dir`. An empty directory is an error.
pub fn subject_dirs(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let entry = entry?;
        if entry.file_type()?.is_dir() {
            out.push((entry.file_name().to_string_lossy().into_owned(), entry.path()));
        }
    }
    if out.is_empty() {
        bail!("no subject directories found in {}", dir.display());
    }
    out.sort();
    Ok(out)
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Outcome of a run: how many items failed.
pub struct Outcome {
    pub failures: usize,
}
