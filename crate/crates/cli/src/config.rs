//! Run configuration: an optional JSON file, overridden field by field by flags.

use std::path::{Path, PathBuf};

use progq::linalg::Tolerances;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "PROGQ_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub tolerances: Tolerances,
    /// Directory for generated files.
    pub output_path: PathBuf,
    pub format: Format,
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            tolerances: Tolerances::default(),
            output_path: PathBuf::from("."),
            format: Format::Csv,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

/// Flag values that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_path: Option<PathBuf>,
    pub format: Option<Format>,
    pub workers: Option<usize>,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::file(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::file(path, e))
    }

    /// Defaults, then the environment, then `file`, then flags.
    pub fn resolve(file: Option<&Path>, env_out_dir: Option<PathBuf>, flags: Overrides) -> Result<Self, CliError> {
        let mut cfg = match file {
            Some(p) => Self::from_file(p)?,
            None => {
                let mut cfg = Self::default();
                if let Some(dir) = env_out_dir.clone() {
                    cfg.output_path = dir;
                }
                cfg
            }
        };
        // The environment only supplies a default; an explicit file value wins.
        if file.is_some() && cfg.output_path == Path::new(".") {
            if let Some(dir) = env_out_dir {
                cfg.output_path = dir;
            }
        }
        if let Some(s) = flags.seed {
            cfg.seed = s;
        }
        if let Some(p) = flags.output_path {
            cfg.output_path = p;
        }
        if let Some(f) = flags.format {
            cfg.format = f;
        }
        if let Some(w) = flags.workers {
            cfg.workers = w;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.workers == 0 {
            return Err(CliError::Input("workers must be at least 1".into()));
        }
        let t = &self.tolerances;
        let all = [t.herm, t.unitary, t.eig, t.psd, t.trace];
        if all.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(CliError::Input("tolerances must be positive and finite".into()));
        }
        Ok(())
    }

    /// `name` inside the output directory, unless `explicit` is given.
    pub fn output_file(&self, explicit: Option<&Path>, name: &str) -> PathBuf {
        explicit.map_or_else(|| self.output_path.join(name), Path::to_path_buf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(text: &str) -> tempfile::NamedTempFile {
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(f.path(), text).unwrap();
        f
    }

    #[test]
    fn flags_override_file() {
        let f = write(r#"{"seed": 7, "workers": 3, "format": "json", "tolerances": {"herm": 1e-8}}"#);
        let cfg = RunConfig::resolve(
            Some(f.path()),
            None,
            Overrides {
                seed: Some(9),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.workers, 3);
        assert_eq!(cfg.format, Format::Json);
        assert_eq!(cfg.tolerances.herm, 1e-8);
        assert_eq!(cfg.tolerances.eig, 1e-10);
    }

    #[test]
    fn environment_supplies_default_directory() {
        let cfg = RunConfig::resolve(None, Some("/tmp/x".into()), Overrides::default()).unwrap();
        assert_eq!(cfg.output_path, PathBuf::from("/tmp/x"));
        let cfg = RunConfig::resolve(
            None,
            Some("/tmp/x".into()),
            Overrides {
                output_path: Some("/tmp/y".into()),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(cfg.output_file(None, "a.csv"), PathBuf::from("/tmp/y/a.csv"));
    }

    #[test]
    fn rejects_bad_files() {
        let f = write(r#"{"seeds": 1}"#);
        let err = RunConfig::resolve(Some(f.path()), None, Overrides::default()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let f = write(r#"{"workers": 0}"#);
        assert!(RunConfig::resolve(Some(f.path()), None, Overrides::default()).is_err());
        let f = write(r#"{"tolerances": {"herm": -1}}"#);
        assert!(RunConfig::resolve(Some(f.path()), None, Overrides::default()).is_err());
        assert!(RunConfig::from_file(Path::new("/nonexistent/cfg.json")).is_err());
    }
}
