pub mod decode_instance;
pub mod decode_pose;
pub mod eval;
pub mod gradcheck;
pub mod synth;
pub mod train;

use std::path::{Path, PathBuf};

use crate::CliError;

/// Creates the output directory and returns it.
pub fn ensure_out_dir(out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::io(format!("cannot create output directory {}: {e}", out.display())))
}

/// Writes a string artifact, mapping failures to I/O errors.
pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
}

/// Deterministic per-scene seed derivation for batch commands.
pub fn scene_seed(base: u64, index: usize) -> u64 {
    base.wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Scene files are numbered `prefix_0000.suffix`.
pub fn scene_file_name(prefix: &str, index: usize, suffix: &str) -> String {
    format!("{prefix}_{index:04}.{suffix}")
}

/// Sorted entries of a directory, as paths.
pub fn sorted_dir_entries(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::io(format!("cannot read directory {}: {e}", dir.display())))?
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| CliError::io(e.to_string()))?
        .into_iter()
        .map(|e| e.path())
        .collect();
    entries.sort();
    Ok(entries)
}
