use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};

use crate::args::Command;

/// Error split by exit status: usage problems exit 2, failures inside the library exit 1.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Run(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Run(e)
    }
}

impl From<dcg_core::DcgError> for Failure {
    fn from(e: dcg_core::DcgError) -> Self {
        Failure::Run(e.into())
    }
}

pub fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Splices a flat TOML `--config` file into the argument list right after the
/// subcommand, so flags given on the command line win.
pub fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>, Failure> {
    let mut rest = Vec::with_capacity(args.len());
    let mut path = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        match a.to_str() {
            Some("--config") => {
                let p = it.next().ok_or_else(|| usage("--config needs a path"))?;
                path = Some(PathBuf::from(p));
            }
            Some(s) if s.starts_with("--config=") => path = Some(PathBuf::from(&s["--config=".len()..])),
            _ => rest.push(a),
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let text = fs::read_to_string(&path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| usage(format!("invalid config {}: {e}", path.display())))?;

    let mut flags = Vec::new();
    let mut command = None;
    for (key, value) in &table {
        if key == "command" {
            let name = value.as_str().ok_or_else(|| usage("config key `command` must be a string"))?;
            command = Some(name.to_string());
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            toml::Value::Boolean(true) => flags.push(flag),
            toml::Value::Boolean(false) => {}
            toml::Value::Array(items) => {
                let parts = items.iter().map(scalar).collect::<Result<Vec<_>, _>>()?;
                flags.push(flag);
                flags.push(parts.join(","));
            }
            other => {
                flags.push(flag);
                flags.push(scalar(other)?);
            }
        }
    }

    let has_subcommand = rest.get(1).and_then(|a| a.to_str()).is_some_and(|s| !s.starts_with('-'));
    let at = if has_subcommand {
        if let (Some(c), Some(given)) = (&command, rest[1].to_str()) {
            if c != given {
                return Err(usage(format!("config is for `{c}` but the command is `{given}`")));
            }
        }
        2
    } else {
        let c = command.ok_or_else(|| usage("no subcommand given and the config has no `command` key"))?;
        rest.insert(1.min(rest.len()), c.into());
        2
    };
    let tail = rest.split_off(at.min(rest.len()));
    rest.extend(flags.into_iter().map(OsString::from));
    rest.extend(tail);
    Ok(rest)
}

fn scalar(v: &toml::Value) -> Result<String, Failure> {
    match v {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Integer(i) => Ok(i.to_string()),
        toml::Value::Float(f) => Ok(f.to_string()),
        toml::Value::Boolean(b) => Ok(b.to_string()),
        other => Err(usage(format!("unsupported config value {other}"))),
    }
}

/// Writes through a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let name = path
        .file_name()
        .with_context(|| format!("{} is not a file path", path.display()))?;
    let mut tmp_name = OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".{}.tmp", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.with_context(|| format!("writing {}", path.display()))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub dcg_version: String,
    pub command: Command,
    pub outputs: Vec<PathBuf>,
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Files produced by one command, written together with the manifest of the primary output.
pub struct Outputs {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Outputs {
    pub fn new() -> Self {
        Self { files: Vec::new() }
    }

    pub fn add(&mut self, path: &Path, bytes: Vec<u8>) {
        self.files.push((path.to_path_buf(), bytes));
    }

    pub fn commit(self, command: &Command) -> anyhow::Result<PathBuf> {
        let primary = self.files.first().context("command produced no output")?.0.clone();
        for (path, bytes) in &self.files {
            write_atomic(path, bytes)?;
        }
        let manifest = Manifest {
            dcg_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.clone(),
            outputs: self.files.into_iter().map(|(p, _)| p).collect(),
        };
        let path = manifest_path(&primary);
        let mut json = serde_json::to_vec_pretty(&manifest)?;
        json.push(b'\n');
        write_atomic(&path, &json)?;
        Ok(path)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> anyhow::Result<Vec<u8>> {
    let mut json = serde_json::to_vec_pretty(value)?;
    json.push(b'\n');
    Ok(json)
}

/// `start:stop:step` (inclusive) or a comma-separated list.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, Failure> {
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| usage(format!("bad number {s:?} in {spec:?}")))
    };
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (a, b, h) = (num(start)?, num(stop)?, num(step)?);
            if !(h > 0.0) || b < a {
                return Err(usage(format!("range {spec:?} needs start <= stop and a positive step")));
            }
            let n = ((b - a) / h + 1e-9).floor() as usize;
            if n > 1_000_000 {
                return Err(usage(format!("range {spec:?} has too many points")));
            }
            Ok((0..=n).map(|k| a + k as f64 * h).collect())
        }
        [list] => list.split(',').map(num).collect(),
        _ => Err(usage(format!("cannot parse {spec:?} as start:stop:step or a list"))),
    }
}

pub fn parse_list<T: std::str::FromStr>(spec: &str, what: &str) -> Result<Vec<T>, Failure> {
    spec.split(',')
        .map(|s| s.trim().parse::<T>().map_err(|_| usage(format!("bad {what} {s:?} in {spec:?}"))))
        .collect()
}
