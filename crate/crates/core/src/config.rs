//! Plain-text run configuration.
//!
//! One `key = value` per line, dotted keys, `#` starts a comment. Values may
//! be double-quoted. Unknown or repeated keys are errors. The echo lists every
//! key with its effective value and parses back to the same configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::boundary::{validate_signs, BoundaryData, BoundarySpec, BoundaryVar, ModeTerm, PsiRate};
use crate::constants::PhysConstants;
use crate::error::{Error, Result};
use crate::fields::{Grid, State};
use crate::microphysics::{Clipping, ConstantSaturation, Saturation};
use crate::presets::{physical_fields, preset_initial, InitialConfig, Preset};
use crate::solver::{Mode, Model, SolverConfig, VrProfile};

/// Wall values `F^b` as configured.
#[derive(Clone, Debug, PartialEq, Default)]
pub enum WallValue {
    /// The preset's own wall value.
    #[default]
    Auto,
    Constant(f64),
    Modes(Vec<ModeTerm>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct VarConfig {
    pub alpha_bottom: f64,
    pub alpha_top: f64,
    pub value_bottom: WallValue,
    pub value_top: WallValue,
}

impl Default for VarConfig {
    fn default() -> Self {
        VarConfig {
            alpha_bottom: 0.0,
            alpha_top: 0.0,
            value_bottom: WallValue::Auto,
            value_top: WallValue::Auto,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SaturationKind {
    #[default]
    Default,
    /// `q_vs = microphysics.q_vs_value` for `T > 0`
    Constant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum VrKind {
    #[default]
    Constant,
    Bump,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub constant_set: String,
    pub constants: PhysConstants,
    /// indexed by [`BoundaryVar::index`]
    pub boundary: [VarConfig; 4],
    pub waive_sign_check: bool,
    pub psi_rate: PsiRate,
    pub saturation: SaturationKind,
    pub q_vs_value: f64,
    pub clipping: Clipping,
    pub clipped: bool,
    /// `solver.v_r` is derived from these two
    pub v_r_kind: VrKind,
    pub v_r_value: f64,
    pub solver: SolverConfig,
    pub initial: InitialConfig,
    pub output_dir: PathBuf,
    pub snapshot_every: usize,
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            nx: 16,
            ny: 16,
            nz: 17,
            constant_set: "nondimensional".into(),
            constants: PhysConstants::nondimensional(),
            boundary: Default::default(),
            waive_sign_check: false,
            psi_rate: PsiRate::Analytic,
            saturation: SaturationKind::Default,
            q_vs_value: 0.01,
            clipping: Clipping::Literal,
            clipped: true,
            v_r_kind: VrKind::Constant,
            v_r_value: 1.0,
            solver: SolverConfig::default(),
            initial: InitialConfig::default(),
            output_dir: PathBuf::from("out"),
            snapshot_every: 0,
            threads: 1,
        }
    }
}

fn constant_set(name: &str) -> Option<PhysConstants> {
    match name {
        "nondimensional" => Some(PhysConstants::nondimensional()),
        "atmospheric" => Some(PhysConstants::atmospheric()),
        _ => None,
    }
}

fn parse_f64(v: &str) -> std::result::Result<f64, String> {
    v.parse::<f64>().map_err(|_| format!("expected a number, got '{v}'"))
}

fn parse_usize(v: &str) -> std::result::Result<usize, String> {
    v.parse::<usize>()
        .map_err(|_| format!("expected a non-negative integer, got '{v}'"))
}

fn parse_bool(v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, got '{v}'")),
    }
}

/// `auto`, a number, or `modes(kx ky a b; ...)`.
fn parse_wall(v: &str) -> std::result::Result<WallValue, String> {
    if v == "auto" {
        return Ok(WallValue::Auto);
    }
    if let Some(inner) = v.strip_prefix("modes(").and_then(|s| s.strip_suffix(')')) {
        let mut terms = Vec::new();
        for part in inner.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            let w: Vec<&str> = part.split_whitespace().collect();
            if w.len() != 4 {
                return Err(format!("mode '{part}' must be 'kx ky a b'"));
            }
            let int = |s: &str| s.parse::<i64>().map_err(|_| format!("bad wavenumber '{s}'"));
            terms.push(ModeTerm {
                kx: int(w[0])?,
                ky: int(w[1])?,
                a: parse_f64(w[2])?,
                b: parse_f64(w[3])?,
            });
        }
        return Ok(WallValue::Modes(terms));
    }
    parse_f64(v).map(WallValue::Constant)
}

fn fmt_wall(w: &WallValue) -> String {
    match w {
        WallValue::Auto => "auto".into(),
        WallValue::Constant(c) => format!("{c}"),
        WallValue::Modes(m) => {
            let parts: Vec<String> = m.iter().map(|t| format!("{} {} {} {}", t.kx, t.ky, t.a, t.b)).collect();
            format!("modes({})", parts.join("; "))
        }
    }
}

fn strip_value(raw: &str) -> &str {
    let v = raw.trim();
    if v.len() >= 2 && v.starts_with('"') && v.ends_with('"') {
        &v[1..v.len() - 1]
    } else {
        v
    }
}

/// Split a line at the first `#` outside double quotes.
fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, ch) in line.char_indices() {
        match ch {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

/// Source line of each key, for error reporting after parsing.
#[derive(Clone, Debug, Default)]
pub struct KeyLines(Vec<(String, usize)>);

impl KeyLines {
    pub fn line(&self, key: &str) -> usize {
        self.0.iter().find(|(k, _)| k == key).map_or(0, |(_, l)| *l)
    }
}

impl RunConfig {
    /// Apply one key. Constant overrides need `self.constants` to already
    /// hold the chosen set.
    fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        if let Some(name) = key.strip_prefix("constants.") {
            if name == "set" {
                return if constant_set(v).is_some() {
                    self.constant_set = v.to_string();
                    Ok(())
                } else {
                    Err(format!("unknown constant set '{v}' (nondimensional, atmospheric)"))
                };
            }
            let val = parse_f64(v)?;
            for (n, slot) in self.constants.entries_mut() {
                if n == name {
                    *slot = val;
                    return Ok(());
                }
            }
            return Err(format!("unknown key '{key}'"));
        }
        if let Some(rest) = key.strip_prefix("boundary.") {
            match rest {
                "waive_sign_check" => {
                    self.waive_sign_check = parse_bool(v)?;
                    return Ok(());
                }
                "dpsi_dt" => {
                    self.psi_rate = match v {
                        "analytic" => PsiRate::Analytic,
                        "finite_difference" => PsiRate::FiniteDifference,
                        _ => return Err(format!("expected analytic or finite_difference, got '{v}'")),
                    };
                    return Ok(());
                }
                _ => {}
            }
            if let Some((var, field)) = rest.split_once('.') {
                if let Some(bv) = BoundaryVar::ALL.iter().find(|b| b.key() == var) {
                    let c = &mut self.boundary[bv.index()];
                    match field {
                        "alpha_bottom" => c.alpha_bottom = parse_f64(v)?,
                        "alpha_top" => c.alpha_top = parse_f64(v)?,
                        "value_bottom" => c.value_bottom = parse_wall(v)?,
                        "value_top" => c.value_top = parse_wall(v)?,
                        _ => return Err(format!("unknown key '{key}'")),
                    }
                    return Ok(());
                }
            }
            return Err(format!("unknown key '{key}'"));
        }
        match key {
            "grid.nx" => self.nx = parse_usize(v)?,
            "grid.ny" => self.ny = parse_usize(v)?,
            "grid.nz" => self.nz = parse_usize(v)?,
            "microphysics.q_vs" => {
                self.saturation = match v {
                    "default" => SaturationKind::Default,
                    "constant" => SaturationKind::Constant,
                    _ => return Err(format!("expected default or constant, got '{v}'")),
                }
            }
            "microphysics.q_vs_value" => self.q_vs_value = parse_f64(v)?,
            "microphysics.clipping" => {
                self.clipping = match v {
                    "literal" => Clipping::Literal,
                    "symmetric" => Clipping::Symmetric,
                    _ => return Err(format!("expected literal or symmetric, got '{v}'")),
                }
            }
            "microphysics.clipped" => self.clipped = parse_bool(v)?,
            "solver.dt" => self.solver.dt = parse_f64(v)?,
            "solver.t_end" => self.solver.t_end = parse_f64(v)?,
            "solver.mode" => {
                self.solver.mode = match v {
                    "picard" => Mode::Picard,
                    "direct" => Mode::Direct,
                    _ => return Err(format!("expected picard or direct, got '{v}'")),
                }
            }
            "solver.picard_tol" => self.solver.picard_tol = parse_f64(v)?,
            "solver.picard_max_iters" => self.solver.picard_max_iters = parse_usize(v)?,
            "solver.dealias" => self.solver.dealias = parse_bool(v)?,
            "solver.v_r" => {
                self.v_r_kind = match v {
                    "constant" => VrKind::Constant,
                    "bump" => VrKind::Bump,
                    _ => return Err(format!("expected constant or bump, got '{v}'")),
                }
            }
            "solver.v_r_value" => self.v_r_value = parse_f64(v)?,
            "solver.checkpoint_every" => self.solver.checkpoint_every = parse_usize(v)?,
            "solver.max_retries" => self.solver.max_retries = parse_usize(v)?,
            "solver.strict_positivity" => self.solver.strict_positivity = parse_bool(v)?,
            "initial.preset" => self.initial.preset = v.parse().map_err(|e: Error| e.to_string())?,
            "initial.T0" => self.initial.t0 = parse_f64(v)?,
            "initial.rho0" => self.initial.rho0 = parse_f64(v)?,
            "initial.amplitude" => self.initial.amplitude = parse_f64(v)?,
            "initial.width" => self.initial.width = parse_f64(v)?,
            "initial.perturbation" => self.initial.perturbation = parse_f64(v)?,
            "seed" => self.initial.seed = v.parse::<u64>().map_err(|_| format!("bad seed '{v}'"))?,
            "output.dir" => self.output_dir = PathBuf::from(v),
            "output.snapshot_every" => self.snapshot_every = parse_usize(v)?,
            "threads" => self.threads = parse_usize(v)?,
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }
}

/// Parsed configuration together with the source of each key.
#[derive(Clone, Debug)]
pub struct Parsed {
    pub config: RunConfig,
    pub lines: KeyLines,
    pub source: String,
}

/// Parse configuration text; `source` labels error messages.
pub fn parse_str(text: &str, source: &str) -> Result<Parsed> {
    let mut entries: Vec<(String, String, usize)> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let body = strip_comment(raw).trim();
        if body.is_empty() {
            continue;
        }
        let (k, v) = body
            .split_once('=')
            .ok_or_else(|| Error::config(source, line, format!("expected 'key = value', got '{body}'")))?;
        let key = k.trim();
        if key.is_empty() {
            return Err(Error::config(source, line, "empty key"));
        }
        if let Some((_, _, first)) = entries.iter().find(|(k2, _, _)| k2 == key) {
            return Err(Error::config(
                source,
                line,
                format!("duplicate key '{key}' (first set on line {first})"),
            ));
        }
        entries.push((key.to_string(), strip_value(v).to_string(), line));
    }
    let mut cfg = RunConfig::default();
    // the constant set goes first so that overrides apply on top of it
    if let Some((_, v, line)) = entries.iter().find(|(k, _, _)| k == "constants.set") {
        cfg.set("constants.set", v).map_err(|m| Error::config(source, *line, m))?;
        cfg.constants = constant_set(&cfg.constant_set).expect("checked by set");
    }
    for (k, v, line) in &entries {
        if k == "constants.set" {
            continue;
        }
        cfg.set(k, v).map_err(|m| Error::config(source, *line, m))?;
    }
    cfg.solver.v_r = match cfg.v_r_kind {
        VrKind::Constant => VrProfile::Constant(cfg.v_r_value),
        VrKind::Bump => VrProfile::Bump,
    };
    let lines = KeyLines(entries.into_iter().map(|(k, _, l)| (k, l)).collect());
    let parsed = Parsed {
        config: cfg,
        lines,
        source: source.to_string(),
    };
    parsed.validate()?;
    Ok(parsed)
}

pub fn parse_config(path: &Path) -> Result<Parsed> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::config(&path.display().to_string(), 0, e.to_string()))?;
    parse_str(&text, &path.display().to_string())
}

impl Parsed {
    fn err(&self, key: &str, msg: impl Into<String>) -> Error {
        Error::config(&self.source, self.lines.line(key), msg)
    }

    /// Check every module-level invariant; nothing is allocated yet.
    pub fn validate(&self) -> Result<()> {
        let c = &self.config;
        if let Err(e) = Grid::new(c.nx, c.ny, c.nz) {
            let key = if c.nz < 4 {
                "grid.nz"
            } else if c.ny < 4 || c.ny % 2 == 1 {
                "grid.ny"
            } else {
                "grid.nx"
            };
            return Err(self.err(key, e.to_string()));
        }
        c.constants
            .validate()
            .map_err(|e| self.err("constants.set", e.to_string()))?;
        if !c.waive_sign_check {
            for v in BoundaryVar::ALL {
                let b = &c.boundary[v.index()];
                if let Err(e) = validate_signs(v, b.alpha_bottom, b.alpha_top) {
                    let face = if let Error::BoundarySign { face, .. } = &e { *face } else { "bottom" };
                    return Err(self.err(&format!("boundary.{}.alpha_{face}", v.key()), e.to_string()));
                }
            }
        }
        for v in BoundaryVar::ALL {
            let b = &c.boundary[v.index()];
            for (face, w) in [("bottom", &b.value_bottom), ("top", &b.value_top)] {
                let bad = match w {
                    WallValue::Auto => false,
                    WallValue::Constant(x) => !x.is_finite(),
                    WallValue::Modes(m) => m.iter().any(|t| !t.a.is_finite() || !t.b.is_finite()),
                };
                if bad {
                    return Err(self.err(&format!("boundary.{}.value_{face}", v.key()), "non-finite wall value"));
                }
            }
        }
        if c.saturation == SaturationKind::Constant && !(c.q_vs_value >= 0.0 && c.q_vs_value <= c.constants.q_vs_star) {
            return Err(self.err(
                "microphysics.q_vs_value",
                format!("q_vs_value must lie in [0, q_vs_star = {}]", c.constants.q_vs_star),
            ));
        }
        if let Err(e) = c.solver.validate() {
            let msg = e.to_string();
            let key = ["dt", "t_end", "picard_tol", "picard_max_iters", "V_r"]
                .iter()
                .find(|k| msg.contains(*k))
                .map(|k| match *k {
                    "V_r" => "solver.v_r_value".to_string(),
                    k => format!("solver.{k}"),
                })
                .unwrap_or_else(|| "solver.dt".into());
            return Err(self.err(&key, msg));
        }
        if let Err(e) = c.initial.validate() {
            return Err(self.err("initial.preset", e.to_string()));
        }
        if c.threads == 0 {
            return Err(self.err("threads", "threads must be >= 1"));
        }
        Ok(())
    }
}

impl RunConfig {
    /// Every key with its effective value, in a fixed order.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("grid.nx", self.nx.to_string());
        kv("grid.ny", self.ny.to_string());
        kv("grid.nz", self.nz.to_string());
        kv("constants.set", self.constant_set.clone());
        let mut c = self.constants;
        for (n, v) in c.entries_mut() {
            kv(&format!("constants.{n}"), format!("{}", *v));
        }
        for v in BoundaryVar::ALL {
            let b = &self.boundary[v.index()];
            kv(&format!("boundary.{}.alpha_bottom", v.key()), format!("{}", b.alpha_bottom));
            kv(&format!("boundary.{}.alpha_top", v.key()), format!("{}", b.alpha_top));
            kv(&format!("boundary.{}.value_bottom", v.key()), fmt_wall(&b.value_bottom));
            kv(&format!("boundary.{}.value_top", v.key()), fmt_wall(&b.value_top));
        }
        kv("boundary.waive_sign_check", self.waive_sign_check.to_string());
        kv(
            "boundary.dpsi_dt",
            match self.psi_rate {
                PsiRate::Analytic => "analytic",
                PsiRate::FiniteDifference => "finite_difference",
            }
            .into(),
        );
        kv(
            "microphysics.q_vs",
            match self.saturation {
                SaturationKind::Default => "default",
                SaturationKind::Constant => "constant",
            }
            .into(),
        );
        kv("microphysics.q_vs_value", format!("{}", self.q_vs_value));
        kv(
            "microphysics.clipping",
            match self.clipping {
                Clipping::Literal => "literal",
                Clipping::Symmetric => "symmetric",
            }
            .into(),
        );
        kv("microphysics.clipped", self.clipped.to_string());
        let sv = &self.solver;
        kv("solver.dt", format!("{}", sv.dt));
        kv("solver.t_end", format!("{}", sv.t_end));
        kv(
            "solver.mode",
            match sv.mode {
                Mode::Picard => "picard",
                Mode::Direct => "direct",
            }
            .into(),
        );
        kv("solver.picard_tol", format!("{}", sv.picard_tol));
        kv("solver.picard_max_iters", sv.picard_max_iters.to_string());
        kv("solver.dealias", sv.dealias.to_string());
        kv(
            "solver.v_r",
            match self.v_r_kind {
                VrKind::Constant => "constant",
                VrKind::Bump => "bump",
            }
            .into(),
        );
        kv("solver.v_r_value", format!("{}", self.v_r_value));
        kv("solver.checkpoint_every", sv.checkpoint_every.to_string());
        kv("solver.max_retries", sv.max_retries.to_string());
        kv("solver.strict_positivity", sv.strict_positivity.to_string());
        let ic = &self.initial;
        kv("initial.preset", ic.preset.name().into());
        kv("initial.T0", format!("{}", ic.t0));
        kv("initial.rho0", format!("{}", ic.rho0));
        kv("initial.amplitude", format!("{}", ic.amplitude));
        kv("initial.width", format!("{}", ic.width));
        kv("initial.perturbation", format!("{}", ic.perturbation));
        kv("seed", ic.seed.to_string());
        kv("output.dir", format!("\"{}\"", self.output_dir.display()));
        kv("output.snapshot_every", self.snapshot_every.to_string());
        kv("threads", self.threads.to_string());
        s
    }

    /// SHA-256 of the echo, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.echo().as_bytes()))
    }

    /// SHA-256 of the echo without output-only keys, so that a moved output
    /// directory still matches its checkpoints.
    pub fn physics_hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        c.snapshot_every = 0;
        c.solver.checkpoint_every = 0;
        c.threads = 1;
        c.solver.t_end = 0.0;
        c.hash()
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.nx, self.ny, self.nz)
    }

    fn saturation_closure(&self) -> Result<Saturation> {
        match self.saturation {
            SaturationKind::Default => Ok(Saturation::default_for(&self.constants)),
            SaturationKind::Constant => Saturation::register(
                std::sync::Arc::new(ConstantSaturation { value: self.q_vs_value }),
                &self.constants,
            ),
        }
    }

    fn model_with(&self, boundary: BoundarySpec) -> Result<Model> {
        let mut m = Model::new(
            self.grid()?,
            self.constants,
            boundary,
            self.solver.clone(),
            self.initial.reference(),
        )?
        .with_saturation(self.saturation_closure()?);
        m.clipping = self.clipping;
        m.clipped = self.clipped;
        m.psi_rate = self.psi_rate.clone();
        Ok(m)
    }

    /// Model and initial state. `auto` wall values take the preset's wall means.
    pub fn build(&self) -> Result<(Model, State)> {
        let mut probe = BoundarySpec::uniform(0.0, 0.0);
        probe.waive_sign_check = true;
        let scratch = self.model_with(probe)?;
        let init = physical_fields(&scratch, &self.initial)?;
        let auto = crate::presets::default_boundary(&init, 0.0, 0.0);
        let mut spec = BoundarySpec::uniform(0.0, 0.0);
        spec.waive_sign_check = self.waive_sign_check;
        for v in BoundaryVar::ALL {
            let c = &self.boundary[v.index()];
            let a = auto.get(v);
            let data = |w: &WallValue, fallback: &BoundaryData| match w {
                WallValue::Auto => fallback.clone(),
                WallValue::Constant(x) => BoundaryData::Constant(*x),
                WallValue::Modes(m) => BoundaryData::Modes(m.clone()),
            };
            let b = spec.get_mut(v);
            b.alpha_bottom = c.alpha_bottom;
            b.alpha_top = c.alpha_top;
            b.bottom = data(&c.value_bottom, &a.bottom);
            b.top = data(&c.value_top, &a.top);
        }
        let model = self.model_with(spec)?;
        let state = preset_initial(&model, &self.initial)?;
        Ok((model, state))
    }

    pub fn preset(&self) -> Preset {
        self.initial.preset
    }
}
