use std::fs;
use std::path::{Path, PathBuf};

use relaxed_tikhonov::admm::IterationRecord;
use relaxed_tikhonov::io::{fmt_f64, to_json};
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub struct OutDir(PathBuf);

impl OutDir {
    pub fn create(path: &Path) -> CliResult<Self> {
        fs::create_dir_all(path).map_err(|e| CliError::failure(format!("creating {}: {e}", path.display())))?;
        Ok(Self(path.to_path_buf()))
    }

    pub fn write(&self, name: &str, bytes: impl AsRef<[u8]>) -> CliResult<()> {
        let p = self.0.join(name);
        fs::write(&p, bytes).map_err(|e| CliError::failure(format!("writing {}: {e}", p.display())))
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> CliResult<()> {
        let mut s = to_json(value).map_err(CliError::failure)?;
        s.push('\n');
        self.write(name, s)
    }
}

pub fn trace_csv(trace: &[IterationRecord]) -> String {
    let mut out = String::from("iteration,residual,objective_k,mean_sphere_distance\n");
    for t in trace {
        out.push_str(&format!(
            "{},{},{},{}\n",
            t.iteration,
            fmt_f64(t.residual),
            fmt_f64(t.objective_k),
            fmt_f64(t.mean_sphere_distance)
        ));
    }
    out
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::parse(format!("reading {}: {e}", path.display())))
}

pub fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::parse(format!("reading {}: {e}", path.display())))
}
