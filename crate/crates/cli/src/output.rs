use std::path::{Path, PathBuf};

use magscat_core::grid::io::{write_field, write_sidecar, Field, FieldMeta};
use num_complex::Complex64;
use serde::Serialize;

use crate::config::RunConfig;
use crate::CliError;

/// Shortest round-trip representation, so identical runs give identical bytes.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn cplx(z: Complex64) -> [String; 2] {
    [num(z.re), num(z.im)]
}

/// Single writer for everything a command emits.
#[derive(Debug)]
pub struct Collector {
    dir: PathBuf,
    files: Vec<String>,
}

impl Collector {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)?;
        Ok(Collector { dir: dir.to_path_buf(), files: vec![] })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    pub fn csv<R, I>(&mut self, name: &str, header: &[&str], rows: R) -> Result<(), CliError>
    where
        R: IntoIterator<Item = I>,
        I: IntoIterator<Item = String>,
    {
        let mut w = csv::Writer::from_path(self.dir.join(name))?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(magscat_core::Error::from)?;
        text.push('\n');
        std::fs::write(self.dir.join(name), text)?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn text(&mut self, name: &str, lines: &[String]) -> Result<(), CliError> {
        let mut text = lines.join("\n");
        text.push('\n');
        std::fs::write(self.dir.join(name), text)?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn field(&mut self, name: &str, field: &Field, meta: &FieldMeta) -> Result<(), CliError> {
        let path = self.dir.join(name);
        write_field(field, &path)?;
        write_sidecar(&path, meta)?;
        self.files.push(name.to_string());
        Ok(())
    }
}

#[derive(Debug, Serialize)]
pub struct Versions {
    pub magscat_cli: &'static str,
    pub magscat_core: &'static str,
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub command: &'a str,
    pub config_sha256: String,
    pub config: &'a RunConfig,
    pub versions: Versions,
    pub seed: u64,
    pub threads: usize,
    pub wall_clock_seconds: f64,
    pub exit_code: i32,
    pub summary: &'a [String],
    pub outputs: &'a [String],
}

impl<'a> Manifest<'a> {
    pub fn new(command: &'a str, config: &'a RunConfig) -> Self {
        Manifest {
            command,
            config_sha256: config.hash(),
            config,
            versions: Versions { magscat_cli: env!("CARGO_PKG_VERSION"), magscat_core: magscat_core::VERSION },
            seed: config.seed,
            threads: rayon::current_num_threads(),
            wall_clock_seconds: 0.0,
            exit_code: 0,
            summary: &[],
            outputs: &[],
        }
    }
}
