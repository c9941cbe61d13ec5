//! Line-based `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored; keys are dotted (`backward.eps`).
//! Every key is optional except `kind` (and `backward.eps` for backward runs);
//! unknown and repeated keys are errors.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::analysis::DeterminingInputs;
use crate::backward::BackwardParams;
use crate::error::{Error, Result};
use crate::forward::{ChevronParams, FeedbackParams};
use crate::spectral::{Grid, Grid1D, Grid2D};

pub const DEFAULT_SWEEP_EPS: [f64; 7] = [0.5, 0.1, 0.05, 0.01, 0.005, 0.001, 0.0005];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Backward,
    Sweep,
    Forward,
    Stabilize,
    Determining,
    Analyze,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Backward => "backward",
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::Forward => "forward",
            ExperimentKind::Stabilize => "stabilize",
            ExperimentKind::Determining => "determining",
            ExperimentKind::Analyze => "analyze",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "backward" => ExperimentKind::Backward,
            "sweep" => ExperimentKind::Sweep,
            "forward" => ExperimentKind::Forward,
            "stabilize" => ExperimentKind::Stabilize,
            "determining" => ExperimentKind::Determining,
            "analyze" => ExperimentKind::Analyze,
            other => return Err(format!("unknown experiment kind `{other}`")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridSpec {
    OneD { length: f64, n: usize },
    TwoD { lx: f64, ly: f64, nx: usize, ny: usize },
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        Ok(match *self {
            GridSpec::OneD { length, n } => Grid1D::new(length, n)?.into(),
            GridSpec::TwoD { lx, ly, nx, ny } => Grid2D::new(lx, ly, nx, ny)?.into(),
        })
    }
}

/// Initial profile. In 2D the profile in `x` is multiplied by `sin(pi y / Ly)`.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// `5 sin^3(20 pi x / L) + 2 sin^3(12 pi x / L) - sin^3(4 pi x / L)`.
    Oscillatory,
    SineMode { k: usize, amplitude: f64 },
    /// `sum a sin^3(k pi x / L)` over `(a, k)` pairs.
    SineCubedSum(Vec<(f64, usize)>),
    ConstantModulus { value: f64 },
    /// Snapshot CSV (`x,re_A,im_A,phi`) on the same grid.
    FromFile { path: PathBuf },
}

impl InitialCondition {
    fn kind_str(&self) -> &'static str {
        match self {
            InitialCondition::Oscillatory => "oscillatory",
            InitialCondition::SineMode { .. } => "sine_mode",
            InitialCondition::SineCubedSum(_) => "sine_cubed_sum",
            InitialCondition::ConstantModulus { .. } => "constant_modulus",
            InitialCondition::FromFile { .. } => "from_file",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcSpec {
    pub profile: InitialCondition,
    /// Rescale the profile so its squared L2 norm equals this value.
    pub norm_sq: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardSettings {
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
    pub snapshot_every: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    pub eps: Vec<f64>,
    /// Number of smallest-`eps` blow-up runs entering the power-law fit.
    pub fit_smallest: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeterminingSettings {
    /// Number of mode functionals; derived from `gamma` and `M` when absent.
    pub modes: Option<usize>,
    pub inputs: Option<DeterminingInputs>,
    /// Sine mode (1-based) in which the second initial state differs.
    pub perturb_mode: Option<usize>,
    pub perturb_amplitude: f64,
    pub window_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub kind: ExperimentKind,
    pub grid: GridSpec,
    pub chevron: ChevronParams,
    pub backward: BackwardParams,
    pub feedback_mu: f64,
    /// Explicit controlled-mode count; `stabilize` derives one when absent.
    pub feedback_modes: Option<usize>,
    pub forward: ForwardSettings,
    pub ic: IcSpec,
    pub phi_ic: IcSpec,
    pub sweep: SweepSettings,
    pub analyze_psi0: Option<f64>,
    pub determining: DeterminingSettings,
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn feedback(&self) -> FeedbackParams {
        FeedbackParams::new(self.feedback_mu, self.feedback_modes.unwrap_or(0))
    }
}

const KEYS: &[&str] = &[
    "kind",
    "grid.L",
    "grid.n",
    "grid.Lx",
    "grid.Ly",
    "grid.nx",
    "grid.ny",
    "chevron.tau_relax",
    "chevron.c1",
    "chevron.c2",
    "chevron.h",
    "chevron.beta",
    "chevron.D1",
    "chevron.D2",
    "backward.eps",
    "backward.tau_max",
    "backward.safety_blow",
    "backward.safety_eps",
    "backward.blow_tol",
    "backward.t_end",
    "backward.record_every",
    "backward.snapshot_every",
    "backward.max_steps",
    "feedback.mu",
    "feedback.modes",
    "forward.dt",
    "forward.t_end",
    "forward.record_every",
    "forward.snapshot_every",
    "ic.kind",
    "ic.k",
    "ic.amplitude",
    "ic.terms",
    "ic.value",
    "ic.path",
    "ic.norm_sq",
    "phi_ic.kind",
    "phi_ic.k",
    "phi_ic.amplitude",
    "phi_ic.terms",
    "phi_ic.value",
    "phi_ic.path",
    "phi_ic.norm_sq",
    "sweep.eps",
    "sweep.fit_smallest",
    "analyze.psi0",
    "determining.modes",
    "determining.gamma",
    "determining.M",
    "determining.R",
    "determining.perturb_mode",
    "determining.perturb_amplitude",
    "determining.window_steps",
    "output.dir",
];

struct Entries<'a> {
    map: BTreeMap<&'a str, (&'a str, usize)>,
}

fn config_err(line: usize, message: impl Into<String>) -> Error {
    Error::Config { line, message: message.into() }
}

impl<'a> Entries<'a> {
    fn parse(text: &'a str) -> Result<Self> {
        let mut map: BTreeMap<&str, (&str, usize)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| config_err(line, format!("expected `key = value`, got `{content}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(config_err(line, "empty key"));
            }
            if !KEYS.contains(&key) {
                return Err(config_err(line, format!("unknown key `{key}`")));
            }
            if value.is_empty() {
                return Err(config_err(line, format!("{key}: missing value")));
            }
            if let Some((_, first)) = map.get(key) {
                return Err(config_err(
                    line,
                    format!("duplicate key `{key}` (lines {first} and {line})"),
                ));
            }
            map.insert(key, (value, line));
        }
        Ok(Self { map })
    }

    fn line(&self, key: &str) -> usize {
        self.map.get(key).map_or(0, |e| e.1)
    }

    fn has(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.map.get(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse()
                .map(Some)
                .map_err(|_| config_err(*line, format!("{key}: cannot parse `{v}`"))),
        }
    }

    fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    fn require<T: FromStr>(&self, key: &str, why: &str) -> Result<T> {
        self.get(key)?
            .ok_or_else(|| config_err(0, format!("missing required key `{key}` ({why})")))
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some((v, line)) = self.map.get(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| config_err(*line, format!("{key}: cannot parse `{}`", s.trim())))
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    /// Attributes a parameter error to the key named by its first word.
    fn blame(&self, section: &str, err: Error) -> Error {
        let message = match err {
            Error::InvalidParameter(m) | Error::Domain(m) => m,
            other => other.to_string(),
        };
        let word = message.split_whitespace().next().unwrap_or("");
        let key = format!("{section}.{word}");
        if self.has(&key) {
            config_err(self.line(&key), format!("{key}: {message}"))
        } else {
            config_err(0, format!("{section}: {message}"))
        }
    }
}

fn parse_terms(entries: &Entries, key: &str) -> Result<Vec<(f64, usize)>> {
    let (v, line) = entries.map[key];
    v.split(',')
        .map(|term| {
            let bad = || config_err(line, format!("{key}: expected `amplitude:k`, got `{}`", term.trim()));
            let (a, k) = term.trim().split_once(':').ok_or_else(bad)?;
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let k: usize = k.trim().parse().map_err(|_| bad())?;
            if k == 0 || !a.is_finite() {
                return Err(bad());
            }
            Ok((a, k))
        })
        .collect()
}

fn parse_ic(entries: &Entries, prefix: &str, default: InitialCondition) -> Result<IcSpec> {
    let key = |s: &str| format!("{prefix}.{s}");
    let kind: Option<String> = entries.get(&key("kind"))?;
    let profile = match kind.as_deref() {
        None => default,
        Some("oscillatory") => InitialCondition::Oscillatory,
        Some("sine_mode") => {
            let k: usize = entries.get_or(&key("k"), 1)?;
            if k == 0 {
                return Err(config_err(entries.line(&key("k")), format!("{}: sine modes start at 1", key("k"))));
            }
            InitialCondition::SineMode { k, amplitude: entries.get_or(&key("amplitude"), 1.0)? }
        }
        Some("sine_cubed_sum") => {
            if !entries.has(&key("terms")) {
                return Err(config_err(
                    entries.line(&key("kind")),
                    format!("{} needs {}", key("kind"), key("terms")),
                ));
            }
            InitialCondition::SineCubedSum(parse_terms(entries, &key("terms"))?)
        }
        Some("constant_modulus") => InitialCondition::ConstantModulus { value: entries.get_or(&key("value"), 1.0)? },
        Some("from_file") => {
            let path: String = entries.get(&key("path"))?.ok_or_else(|| {
                config_err(entries.line(&key("kind")), format!("{} needs {}", key("kind"), key("path")))
            })?;
            InitialCondition::FromFile { path: path.into() }
        }
        Some(other) => {
            return Err(config_err(
                entries.line(&key("kind")),
                format!("{}: unknown initial condition `{other}`", key("kind")),
            ))
        }
    };
    let norm_sq: Option<f64> = entries.get(&key("norm_sq"))?;
    if let Some(v) = norm_sq {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(config_err(entries.line(&key("norm_sq")), format!("{}: must be >= 0", key("norm_sq"))));
        }
    }
    Ok(IcSpec { profile, norm_sq })
}

fn positive_count(entries: &Entries, key: &str, default: usize) -> Result<usize> {
    let v = entries.get_or(key, default)?;
    if v == 0 {
        return Err(config_err(entries.line(key), format!("{key}: must be >= 1")));
    }
    Ok(v)
}

/// Parses and validates a configuration, filling defaults.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let e = Entries::parse(text)?;
    let kind_text: String = e.require("kind", "one of backward, sweep, forward, stabilize, determining, analyze")?;
    let kind: ExperimentKind = kind_text.parse().map_err(|m: String| config_err(e.line("kind"), m))?;

    let two_d = ["grid.Lx", "grid.Ly", "grid.nx", "grid.ny"].iter().any(|k| e.has(k));
    let grid = if two_d {
        if let Some(k) = ["grid.L", "grid.n"].iter().find(|k| e.has(k)) {
            return Err(config_err(e.line(k), format!("{k} cannot be combined with 2D grid keys")));
        }
        GridSpec::TwoD {
            lx: e.get_or("grid.Lx", 10.0)?,
            ly: e.get_or("grid.Ly", 10.0)?,
            nx: e.get_or("grid.nx", 64)?,
            ny: e.get_or("grid.ny", 64)?,
        }
    } else {
        GridSpec::OneD { length: e.get_or("grid.L", 10.0)?, n: e.get_or("grid.n", 1000)? }
    };
    let built = grid.build().map_err(|err| {
        let line = ["grid.L", "grid.n", "grid.Lx", "grid.Ly", "grid.nx", "grid.ny"]
            .iter()
            .map(|k| e.line(k))
            .find(|&l| l > 0)
            .unwrap_or(0);
        config_err(line, format!("grid: {err}"))
    })?;
    let needs_1d = matches!(
        kind,
        ExperimentKind::Backward | ExperimentKind::Sweep | ExperimentKind::Analyze | ExperimentKind::Determining
    );
    if needs_1d && two_d {
        return Err(config_err(
            e.line("kind"),
            format!("kind = {} runs on a 1D grid; remove grid.Lx/Ly/nx/ny", kind.as_str()),
        ));
    }

    let dc = ChevronParams::default();
    let chevron = ChevronParams {
        tau_relax: e.get_or("chevron.tau_relax", dc.tau_relax)?,
        c1: e.get_or("chevron.c1", dc.c1)?,
        c2: e.get_or("chevron.c2", dc.c2)?,
        h: e.get_or("chevron.h", dc.h)?,
        beta: e.get_or("chevron.beta", dc.beta)?,
        d1: e.get_or("chevron.D1", dc.d1)?,
        d2: e.get_or("chevron.D2", dc.d2)?,
    };
    chevron.validate().map_err(|err| e.blame("chevron", err))?;

    let eps = if kind == ExperimentKind::Backward {
        e.require("backward.eps", "the regularization weight of a backward run")?
    } else {
        e.get_or("backward.eps", 0.1)?
    };
    let db = BackwardParams::new(eps);
    let backward = BackwardParams {
        eps,
        tau_max: e.get_or("backward.tau_max", db.tau_max)?,
        safety_blow: e.get_or("backward.safety_blow", db.safety_blow)?,
        safety_eps: e.get_or("backward.safety_eps", db.safety_eps)?,
        blow_tol: e.get_or("backward.blow_tol", db.blow_tol)?,
        t_end: e.get("backward.t_end")?,
        record_every: e.get_or("backward.record_every", db.record_every)?,
        snapshot_every: e.get("backward.snapshot_every")?,
        max_steps: e.get_or("backward.max_steps", db.max_steps)?,
    };
    backward.validate().map_err(|err| e.blame("backward", err))?;

    let feedback_mu = e.get_or("feedback.mu", if kind == ExperimentKind::Stabilize { 1.0 } else { 0.0 })?;
    let feedback_modes: Option<usize> = e.get("feedback.modes")?;
    FeedbackParams::new(feedback_mu, feedback_modes.unwrap_or(0))
        .validate(&built)
        .map_err(|err| {
            let key = if feedback_mu >= 0.0 && feedback_mu.is_finite() { "feedback.modes" } else { "feedback.mu" };
            config_err(e.line(key), format!("{key}: {err}"))
        })?;

    let forward = ForwardSettings {
        dt: e.get_or("forward.dt", 1e-3)?,
        t_end: e.get_or("forward.t_end", 10.0)?,
        record_every: positive_count(&e, "forward.record_every", 100)?,
        snapshot_every: e.get("forward.snapshot_every")?,
    };
    for (key, v) in [("forward.dt", forward.dt), ("forward.t_end", forward.t_end)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(config_err(e.line(key), format!("{key}: must be finite and > 0, got {v}")));
        }
    }
    if forward.snapshot_every == Some(0) {
        return Err(config_err(e.line("forward.snapshot_every"), "forward.snapshot_every: must be >= 1"));
    }

    let ic = parse_ic(&e, "ic", InitialCondition::Oscillatory)?;
    let phi_ic = parse_ic(&e, "phi_ic", InitialCondition::ConstantModulus { value: 0.0 })?;

    let sweep_eps = e.list("sweep.eps")?.unwrap_or_else(|| DEFAULT_SWEEP_EPS.to_vec());
    if let Some(bad) = sweep_eps.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(config_err(e.line("sweep.eps"), format!("sweep.eps: eps must be > 0, got {bad}")));
    }
    let sweep = SweepSettings { eps: sweep_eps, fit_smallest: e.get_or("sweep.fit_smallest", 4)? };
    if sweep.fit_smallest < 3 {
        return Err(config_err(e.line("sweep.fit_smallest"), "sweep.fit_smallest: a fit needs at least 3 runs"));
    }

    let analyze_psi0: Option<f64> = e.get("analyze.psi0")?;
    if let Some(v) = analyze_psi0 {
        if !(v > 0.0 && v.is_finite()) {
            return Err(config_err(e.line("analyze.psi0"), format!("analyze.psi0: must be > 0, got {v}")));
        }
    }

    let gamma: Option<f64> = e.get("determining.gamma")?;
    let m_r: Option<f64> = e.get("determining.M")?;
    let inputs = match (gamma, m_r) {
        (None, None) => None,
        (Some(gamma), Some(m_r)) => {
            let d = DeterminingInputs { gamma, m_r, r: e.get_or("determining.R", 1.0)? };
            d.validate().map_err(|err| config_err(e.line("determining.gamma"), format!("determining: {err}")))?;
            Some(d)
        }
        _ => {
            let line = e.line("determining.gamma").max(e.line("determining.M"));
            return Err(config_err(line, "determining.gamma and determining.M must be given together"));
        }
    };
    let determining = DeterminingSettings {
        modes: e.get("determining.modes")?,
        inputs,
        perturb_mode: e.get("determining.perturb_mode")?,
        perturb_amplitude: e.get_or("determining.perturb_amplitude", 0.1)?,
        window_steps: positive_count(&e, "determining.window_steps", 100)?,
    };
    if kind == ExperimentKind::Determining && determining.modes.is_none() && inputs.is_none() {
        return Err(config_err(
            e.line("kind"),
            "determining needs determining.modes or determining.gamma with determining.M",
        ));
    }
    if determining.perturb_mode == Some(0) {
        return Err(config_err(e.line("determining.perturb_mode"), "determining.perturb_mode: modes start at 1"));
    }

    let output_dir: String = e.get_or("output.dir", "out".to_string())?;

    Ok(RunConfig {
        kind,
        grid,
        chevron,
        backward,
        feedback_mu,
        feedback_modes,
        forward,
        ic,
        phi_ic,
        sweep,
        analyze_psi0,
        determining,
        output_dir: output_dir.into(),
    })
}

fn write_ic(out: &mut String, prefix: &str, ic: &IcSpec) {
    let _ = writeln!(out, "{prefix}.kind = {}", ic.profile.kind_str());
    match &ic.profile {
        InitialCondition::Oscillatory => {}
        InitialCondition::SineMode { k, amplitude } => {
            let _ = writeln!(out, "{prefix}.k = {k}");
            let _ = writeln!(out, "{prefix}.amplitude = {amplitude}");
        }
        InitialCondition::SineCubedSum(terms) => {
            let list: Vec<String> = terms.iter().map(|(a, k)| format!("{a}:{k}")).collect();
            let _ = writeln!(out, "{prefix}.terms = {}", list.join(", "));
        }
        InitialCondition::ConstantModulus { value } => {
            let _ = writeln!(out, "{prefix}.value = {value}");
        }
        InitialCondition::FromFile { path } => {
            let _ = writeln!(out, "{prefix}.path = {}", path.display());
        }
    }
    if let Some(v) = ic.norm_sq {
        let _ = writeln!(out, "{prefix}.norm_sq = {v}");
    }
}

/// Writes every setting explicitly; `parse_config` of the result reproduces `cfg`.
pub fn serialize_config(cfg: &RunConfig) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    kv("kind", cfg.kind.as_str().into());
    match cfg.grid {
        GridSpec::OneD { length, n } => {
            kv("grid.L", length.to_string());
            kv("grid.n", n.to_string());
        }
        GridSpec::TwoD { lx, ly, nx, ny } => {
            kv("grid.Lx", lx.to_string());
            kv("grid.Ly", ly.to_string());
            kv("grid.nx", nx.to_string());
            kv("grid.ny", ny.to_string());
        }
    }
    let c = &cfg.chevron;
    kv("chevron.tau_relax", c.tau_relax.to_string());
    kv("chevron.c1", c.c1.to_string());
    kv("chevron.c2", c.c2.to_string());
    kv("chevron.h", c.h.to_string());
    kv("chevron.beta", c.beta.to_string());
    kv("chevron.D1", c.d1.to_string());
    kv("chevron.D2", c.d2.to_string());
    let b = &cfg.backward;
    kv("backward.eps", b.eps.to_string());
    kv("backward.tau_max", b.tau_max.to_string());
    kv("backward.safety_blow", b.safety_blow.to_string());
    kv("backward.safety_eps", b.safety_eps.to_string());
    kv("backward.blow_tol", b.blow_tol.to_string());
    if let Some(t) = b.t_end {
        kv("backward.t_end", t.to_string());
    }
    kv("backward.record_every", b.record_every.to_string());
    if let Some(s) = b.snapshot_every {
        kv("backward.snapshot_every", s.to_string());
    }
    kv("backward.max_steps", b.max_steps.to_string());
    kv("feedback.mu", cfg.feedback_mu.to_string());
    if let Some(m) = cfg.feedback_modes {
        kv("feedback.modes", m.to_string());
    }
    let f = &cfg.forward;
    kv("forward.dt", f.dt.to_string());
    kv("forward.t_end", f.t_end.to_string());
    kv("forward.record_every", f.record_every.to_string());
    if let Some(s) = f.snapshot_every {
        kv("forward.snapshot_every", s.to_string());
    }
    let eps: Vec<String> = cfg.sweep.eps.iter().map(|v| v.to_string()).collect();
    kv("sweep.eps", eps.join(", "));
    kv("sweep.fit_smallest", cfg.sweep.fit_smallest.to_string());
    if let Some(p) = cfg.analyze_psi0 {
        kv("analyze.psi0", p.to_string());
    }
    let d = &cfg.determining;
    if let Some(m) = d.modes {
        kv("determining.modes", m.to_string());
    }
    if let Some(inp) = d.inputs {
        kv("determining.gamma", inp.gamma.to_string());
        kv("determining.M", inp.m_r.to_string());
        kv("determining.R", inp.r.to_string());
    }
    if let Some(m) = d.perturb_mode {
        kv("determining.perturb_mode", m.to_string());
    }
    kv("determining.perturb_amplitude", d.perturb_amplitude.to_string());
    kv("determining.window_steps", d.window_steps.to_string());
    kv("output.dir", cfg.output_dir.display().to_string());
    write_ic(&mut out, "ic", &cfg.ic);
    write_ic(&mut out, "phi_ic", &cfg.phi_ic);
    out
}
