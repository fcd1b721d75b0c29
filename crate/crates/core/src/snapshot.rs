//! Binary state snapshots and checkpoint metadata.
//!
//! A snapshot is one file per prognostic field, `<prefix>.<name>.bin`, each a
//! header line `MOISTFLOW1 nx ny nz time name` followed by the values as
//! little-endian `f64`, z fastest. The time is written in shortest
//! round-trip form, so values and time come back bit for bit. A checkpoint
//! adds a `key = value` sidecar with the config hash, step and time.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fields::{Grid, ScalarField, State};

const MAGIC: &str = "MOISTFLOW1";

fn bad(path: &Path, msg: impl Into<String>) -> Error {
    Error::Snapshot {
        path: path.to_path_buf(),
        msg: msg.into(),
    }
}

/// File holding field `name` of the snapshot at `prefix`.
pub fn field_path(prefix: &Path, name: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(format!(".{name}.bin"));
    PathBuf::from(s)
}

pub fn write_field(path: &Path, f: &ScalarField, time: f64, name: &str) -> Result<()> {
    let g = f.grid();
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{MAGIC} {} {} {} {time:?} {name}", g.nx, g.ny, g.nz)?;
    for v in f.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Read one field file; returns the field, its time and its name.
pub fn read_field(path: &Path) -> Result<(ScalarField, f64, String)> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    let end = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| bad(path, "truncated header"))?;
    let header = std::str::from_utf8(&bytes[..end]).map_err(|_| bad(path, "header is not UTF-8"))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 6 || parts[0] != MAGIC {
        return Err(bad(path, format!("not a {MAGIC} field header: '{header}'")));
    }
    let n = |s: &str| s.parse::<usize>().map_err(|_| bad(path, format!("bad dimension '{s}'")));
    let grid = Grid::new(n(parts[1])?, n(parts[2])?, n(parts[3])?)?;
    let time: f64 = parts[4].parse().map_err(|_| bad(path, format!("bad time '{}'", parts[4])))?;
    let data = &bytes[end + 1..];
    if data.len() != grid.len() * 8 {
        return Err(bad(path, format!("expected {} data bytes, found {}", grid.len() * 8, data.len())));
    }
    let values = data
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
        .collect();
    Ok((ScalarField::from_vec(grid, values)?, time, parts[5].to_string()))
}

pub fn write_snapshot(prefix: &Path, state: &State) -> Result<()> {
    for (name, f) in state.named_fields() {
        write_field(&field_path(prefix, name), f, state.time, name)?;
    }
    Ok(())
}

pub fn read_snapshot(prefix: &Path) -> Result<State> {
    let mut fields = Vec::with_capacity(State::FIELD_NAMES.len());
    let mut time = None;
    for name in State::FIELD_NAMES {
        let path = field_path(prefix, name);
        let (f, t, stored) = read_field(&path)?;
        if stored != name {
            return Err(bad(&path, format!("holds field '{stored}', expected '{name}'")));
        }
        if let Some(t0) = time {
            if f64::to_bits(t0) != t.to_bits() {
                return Err(bad(&path, "field times disagree within the snapshot"));
            }
        }
        time = Some(t);
        fields.push(f);
    }
    State::from_named(fields, time.unwrap_or(0.0)).map_err(|e| bad(prefix, e.to_string()))
}

/// Checkpoint sidecar contents.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckpointMeta {
    pub config_hash: String,
    pub step: usize,
    pub time: f64,
    /// Snapshot prefix, relative to the sidecar.
    pub snapshot: PathBuf,
    /// Config echo, relative to the sidecar.
    pub config: PathBuf,
}

impl CheckpointMeta {
    pub fn to_text(&self) -> String {
        format!(
            "config_hash = {}\nstep = {}\ntime = {}\ntime_bits = {:016x}\nsnapshot = {}\nconfig = {}\n",
            self.config_hash,
            self.step,
            self.time,
            self.time.to_bits(),
            self.snapshot.display(),
            self.config.display()
        )
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut hash = None;
        let mut step = None;
        let mut bits = None;
        let mut snapshot = None;
        let mut config = None;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad(path, format!("malformed line '{line}'")))?;
            let v = v.trim();
            match k.trim() {
                "config_hash" => hash = Some(v.to_string()),
                "step" => step = Some(v.parse::<usize>().map_err(|_| bad(path, "bad step"))?),
                "time" => {}
                "time_bits" => bits = Some(u64::from_str_radix(v, 16).map_err(|_| bad(path, "bad time_bits"))?),
                "snapshot" => snapshot = Some(PathBuf::from(v)),
                "config" => config = Some(PathBuf::from(v)),
                other => return Err(bad(path, format!("unknown key '{other}'"))),
            }
        }
        let miss = |k: &str| bad(path, format!("missing '{k}'"));
        Ok(CheckpointMeta {
            config_hash: hash.ok_or_else(|| miss("config_hash"))?,
            step: step.ok_or_else(|| miss("step"))?,
            time: f64::from_bits(bits.ok_or_else(|| miss("time_bits"))?),
            snapshot: snapshot.ok_or_else(|| miss("snapshot"))?,
            config: config.ok_or_else(|| miss("config"))?,
        })
    }
}

/// Write the `checkpoint_<step>` snapshot and its `.meta` sidecar into `dir`.
pub fn write_checkpoint(dir: &Path, state: &State, step: usize, config_hash: &str, config_file: &Path) -> Result<PathBuf> {
    let stem = format!("checkpoint_{step:08}");
    let snap = PathBuf::from(&stem);
    write_snapshot(&dir.join(&snap), state)?;
    let meta = CheckpointMeta {
        config_hash: config_hash.to_string(),
        step,
        time: state.time,
        snapshot: snap,
        config: config_file.to_path_buf(),
    };
    let meta_path = dir.join(format!("{stem}.meta"));
    fs::write(&meta_path, meta.to_text())?;
    Ok(meta_path)
}

/// Read a checkpoint sidecar and its snapshot. Relative paths resolve
/// against the sidecar's directory.
pub fn read_checkpoint(meta_path: &Path) -> Result<(CheckpointMeta, State)> {
    let text = fs::read_to_string(meta_path)?;
    let meta = CheckpointMeta::parse(&text, meta_path)?;
    let base = meta_path.parent().unwrap_or(Path::new("."));
    let state = read_snapshot(&base.join(&meta.snapshot))?;
    if state.time.to_bits() != meta.time.to_bits() {
        return Err(bad(meta_path, "snapshot time does not match metadata"));
    }
    Ok((meta, state))
}
