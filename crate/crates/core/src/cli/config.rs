//! Run configuration: flat `key = value` lines grouped in `[section]`s.
//!
//! ```text
//! seed = 7
//! output_dir = out
//!
//! [grid]
//! n = 64
//! length = 6.283185307179586
//!
//! [initial]
//! preset = bubble
//! scale = 0.19634954084936207
//! ```
//!
//! `#` starts a comment. Radii in `[monitors]` accept an `h` suffix meaning
//! multiples of the grid spacing.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::diagnostics::{MonitorConfig, DEFAULT_CELL_FRACTION, SPHERE_BUBBLE_ENERGY};
use crate::fiber::{FiberKind, FiberModel};
use crate::flow::{IntegratorConfig, Scheme};
use crate::grid::GridSpec;

/// Parse failure, with the 1-based line it refers to (0 for whole-file
/// problems such as a missing key).
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "config: {}", self.message)
        } else {
            write!(f, "config line {}: {}", self.line, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        message: message.into(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialData {
    Preset { name: String, params: BTreeMap<String, f64> },
    Snapshot(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub spec: GridSpec,
    pub model: FiberModel,
    pub integrator: IntegratorConfig,
    pub monitors: MonitorConfig,
    pub initial: InitialData,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Write a snapshot every this many steps; 0 disables.
    pub snapshot_every: usize,
}

/// One `key = value` entry with its line.
#[derive(Clone, Debug)]
struct Entry {
    value: String,
    line: usize,
    used: bool,
}

#[derive(Default)]
struct Sections {
    map: BTreeMap<(String, String), Entry>,
}

const SECTIONS: [&str; 6] = ["", "grid", "fiber", "integrator", "monitors", "initial"];

impl Sections {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut out = Sections::default();
        let mut section = String::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some(rest) = body.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err(line, "unterminated section header"))?
                    .trim();
                if !SECTIONS[1..].contains(&name) {
                    return Err(err(line, format!("unknown section [{name}]")));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected `key = value`, found `{body}`")))?;
            let key = key.trim().to_ascii_lowercase();
            if key.is_empty() {
                return Err(err(line, "empty key"));
            }
            let entry = Entry {
                value: value.trim().to_string(),
                line,
                used: false,
            };
            if let Some(prev) = out.map.insert((section.clone(), key.clone()), entry) {
                return Err(err(line, format!("duplicate key `{key}` (first on line {})", prev.line)));
            }
        }
        Ok(out)
    }

    fn take(&mut self, section: &str, key: &str) -> Option<(String, usize)> {
        self.map.get_mut(&(section.to_string(), key.to_string())).map(|e| {
            e.used = true;
            (e.value.clone(), e.line)
        })
    }

    fn number(&mut self, section: &str, key: &str) -> Result<Option<(f64, usize)>, ConfigError> {
        match self.take(section, key) {
            None => Ok(None),
            Some((v, line)) => parse_number(&v)
                .map(|x| Some((x, line)))
                .ok_or_else(|| err(line, format!("`{key}`: expected a number, found `{v}`"))),
        }
    }

    fn real_or(&mut self, section: &str, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.number(section, key)?.map_or(default, |(x, _)| x))
    }

    fn count(&mut self, section: &str, key: &str) -> Result<Option<(u64, usize)>, ConfigError> {
        match self.take(section, key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse::<u64>()
                .map(|x| Some((x, line)))
                .map_err(|_| err(line, format!("`{key}`: expected a nonnegative integer, found `{v}`"))),
        }
    }

    fn leftovers(&self) -> Option<ConfigError> {
        self.map
            .iter()
            .filter(|(_, e)| !e.used)
            .min_by_key(|(_, e)| e.line)
            .map(|((s, k), e)| {
                let place = if s.is_empty() { "top level".to_string() } else { format!("[{s}]") };
                err(e.line, format!("unknown key `{k}` in {place}"))
            })
    }
}

/// Reals, plus `pi`, `tau`/`2pi` and fractions such as `tau/32`.
fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let d = parse_number(den)?;
        return (d != 0.0).then(|| parse_number(num).map(|n| n / d)).flatten();
    }
    match s.to_ascii_lowercase().as_str() {
        "pi" => Some(std::f64::consts::PI),
        "tau" | "2pi" => Some(TAU),
        other => other.parse::<f64>().ok().filter(|x| x.is_finite()),
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Some(true),
        "false" | "no" | "0" | "off" => Some(false),
        _ => None,
    }
}

pub const PRESETS: [&str; 7] = [
    "ground",
    "south-pole",
    "equator",
    "bubble",
    "two-bubbles",
    "random-smooth",
    "vortex",
];

/// Keys that `[initial]` accepts besides `preset` and `snapshot`.
const PRESET_KEYS: [&str; 8] = [
    "scale", "center_x", "center_y", "amplitude", "cutoff", "winding", "core", "tilt",
];

impl RunConfig {
    /// Parses and validates `text`. Relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let mut s = Sections::parse(text)?;

        let seed = s.count("", "seed")?.map_or(0, |(x, _)| x);
        let output_dir = match s.take("", "output_dir") {
            Some((v, line)) if v.is_empty() => return Err(err(line, "`output_dir` is empty")),
            Some((v, _)) => base.join(v),
            None => return Err(err(0, "missing top-level `output_dir`")),
        };

        let (n, n_line) = s.count("grid", "n")?.ok_or_else(|| err(0, "missing [grid] n"))?;
        let length = s.number("grid", "length")?;
        let spec = GridSpec::new(n as usize, length.map_or(TAU, |(x, _)| x)).map_err(|e| {
            let line = length.map_or(n_line, |(_, l)| l.max(n_line));
            err(line, e.to_string())
        })?;

        // `fiber = plane` at the top level and `kind = plane` under
        // `[fiber]` are the same key
        let kind = match (s.take("", "fiber"), s.take("fiber", "kind")) {
            (Some(_), Some((_, line))) => return Err(err(line, "fiber kind given twice")),
            (a, b) => a.or(b),
        };
        let model = match kind {
            None => FiberModel::sphere(),
            Some((v, line)) => {
                let kind: FiberKind = v.parse().map_err(|_| err(line, format!("unknown fiber `{v}`")))?;
                FiberModel::new(kind, kind.default_central_element())
            }
        };
        let central = match (s.number("", "central_element")?, s.number("fiber", "central_element")?) {
            (Some(_), Some((_, line))) => return Err(err(line, "central_element given twice")),
            (a, b) => a.or(b),
        };
        let model = match central {
            Some((c, _)) => FiberModel::new(model.kind, c),
            None => model,
        };

        let defaults = IntegratorConfig::default();
        let scheme = match s.take("integrator", "scheme") {
            None => defaults.scheme,
            Some((v, line)) => v.parse::<Scheme>().map_err(|e| err(line, e.to_string()))?,
        };
        let adapt = match s.take("integrator", "adapt") {
            None => defaults.adapt,
            Some((v, line)) => parse_bool(&v).ok_or_else(|| err(line, format!("`adapt`: expected true/false, found `{v}`")))?,
        };
        let cfl_safety = s.real_or("integrator", "cfl_safety", defaults.cfl_safety)?;
        let max_time = s.real_or("integrator", "max_time", defaults.max_time)?;
        let mut integrator = IntegratorConfig {
            dt: defaults.dt,
            scheme,
            max_time,
            cfl_safety,
            adapt,
        };
        let dt_line = match s.take("integrator", "dt") {
            None => {
                integrator.dt = integrator.dt.min(integrator.stable_dt(&spec));
                0
            }
            Some((v, line)) if v.eq_ignore_ascii_case("auto") => {
                integrator.dt = integrator.stable_dt(&spec);
                line
            }
            Some((v, line)) => {
                integrator.dt = parse_number(&v).ok_or_else(|| err(line, format!("`dt`: expected a number or `auto`, found `{v}`")))?;
                line
            }
        };
        integrator.validate(&spec).map_err(|e| err(dt_line, e.to_string()))?;

        let mut monitors = MonitorConfig::new(&spec);
        monitors.epsilon0 = s.real_or("monitors", "epsilon0", monitors.epsilon0)?;
        monitors.alpha_m = s.real_or("monitors", "alpha_m", SPHERE_BUBBLE_ENERGY)?;
        monitors.cell_fraction = s.real_or("monitors", "cell_fraction", DEFAULT_CELL_FRACTION)?;
        let mut mon_line = 0;
        if let Some((v, _)) = s.count("monitors", "check_every")? {
            monitors.check_every = v.max(1) as usize;
        }
        if let Some((v, line)) = s.take("monitors", "ball_radii") {
            mon_line = line;
            monitors.ball_radii = v
                .split(',')
                .map(|r| parse_radius(r, spec.spacing()))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| err(line, format!("`ball_radii`: cannot parse `{v}`")))?;
        }
        monitors.validate(&spec).map_err(|e| err(mon_line, e.to_string()))?;
        let snapshot_every = s.count("", "snapshot_every")?.map_or(0, |(x, _)| x as usize);

        let initial = match (s.take("initial", "preset"), s.take("initial", "snapshot")) {
            (Some(_), Some((_, line))) => {
                return Err(err(line, "give either `preset` or `snapshot`, not both"))
            }
            (None, None) => return Err(err(0, "missing [initial] preset or snapshot")),
            (None, Some((p, line))) => {
                let path = base.join(&p);
                if !path.is_file() {
                    return Err(err(line, format!("snapshot `{}` not found", path.display())));
                }
                InitialData::Snapshot(path)
            }
            (Some((name, line)), None) => {
                let name = name.to_ascii_lowercase();
                if !PRESETS.contains(&name.as_str()) {
                    return Err(err(line, format!("unknown preset `{name}`; expected one of {}", PRESETS.join(", "))));
                }
                let mut params = BTreeMap::new();
                for key in PRESET_KEYS {
                    if let Some((x, _)) = s.number("initial", key)? {
                        params.insert(key.to_string(), x);
                    }
                }
                InitialData::Preset { name, params }
            }
        };

        if let Some(e) = s.leftovers() {
            return Err(e);
        }
        Ok(RunConfig {
            spec,
            model,
            integrator,
            monitors,
            initial,
            seed,
            output_dir,
            snapshot_every,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| err(0, format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }
}

fn parse_radius(s: &str, h: f64) -> Option<f64> {
    let s = s.trim();
    match s.strip_suffix('h') {
        Some(m) => parse_number(m).map(|x| x * h),
        None => parse_number(s),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "output_dir = out\n[grid]\nn = 16\n[initial]\npreset = ground\n";

    #[test]
    fn minimal_config_uses_defaults() {
        let c = RunConfig::parse(MINIMAL, Path::new("/tmp")).unwrap();
        assert_eq!(c.spec.n(), 16);
        assert!((c.spec.length() - TAU).abs() < 1e-12);
        assert_eq!(c.model.kind, FiberKind::Sphere);
        assert_eq!(c.seed, 0);
        assert_eq!(c.output_dir, Path::new("/tmp/out"));
        assert!(c.integrator.dt <= c.integrator.stable_dt(&c.spec));
    }

    #[test]
    fn full_config() {
        let text = "\
seed = 9   # comment
output_dir = run1
snapshot_every = 100

[grid]
n = 32
length = tau

[fiber]
kind = plane
central_element = 0.5

[integrator]
dt = auto
scheme = rk4
max_time = 2.5
cfl_safety = 0.5
adapt = yes

[monitors]
epsilon0 = 0.5
ball_radii = 2h, 0.5
check_every = 5

[initial]
preset = random-smooth
amplitude = 0.3
cutoff = 3
";
        let c = RunConfig::parse(text, Path::new(".")).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.snapshot_every, 100);
        assert_eq!(c.model.kind, FiberKind::Plane);
        assert_eq!(c.integrator.scheme, Scheme::Rk4);
        assert!(c.integrator.adapt);
        assert_eq!(c.integrator.dt, c.integrator.stable_dt(&c.spec));
        assert_eq!(c.monitors.ball_radii, vec![2.0 * c.spec.spacing(), 0.5]);
        assert_eq!(c.monitors.check_every, 5);
        let InitialData::Preset { name, params } = &c.initial else { panic!() };
        assert_eq!(name, "random-smooth");
        assert_eq!(params["cutoff"], 3.0);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("output_dir = o\n[grid]\nn = 16\n[initial]\npreset = nope\n", 5),
            ("output_dir = o\n[grid]\nn = x\n", 3),
            ("output_dir = o\n[grid]\nn = 16\n[initial]\npreset = ground\nwhat = 1\n", 6),
            ("output_dir = o\n[gird]\n", 2),
            ("output_dir = o\n[grid]\nn = 16\nn = 32\n", 4),
            ("output_dir = o\n[grid]\nn = 16\njunk\n", 4),
            ("output_dir = o\n[grid]\nn = 15\n[initial]\npreset = ground\n", 3),
            ("output_dir = o\n[grid]\nn = 16\n[integrator]\ndt = 1.0\n[initial]\npreset = ground\n", 5),
        ];
        for (text, line) in cases {
            let e = RunConfig::parse(text, Path::new(".")).unwrap_err();
            assert_eq!(e.line, line, "{text:?}: {e}");
        }
        let e = RunConfig::parse("[grid]\nn = 16\n", Path::new(".")).unwrap_err();
        assert!(e.message.contains("output_dir"));
    }

    #[test]
    fn top_level_fiber_keys() {
        let c = RunConfig::parse("output_dir = o\nfiber = plane\ncentral_element = 2\n[grid]\nn = 16\n[initial]\npreset = ground\n", Path::new("/tmp")).unwrap();
        assert_eq!(c.model, FiberModel::new(FiberKind::Plane, 2.0));
        let e = RunConfig::parse("output_dir = o\nfiber = plane\n[grid]\nn = 8\n[fiber]\nkind = sphere\n", Path::new("/tmp")).unwrap_err();
        assert_eq!(e.line, 6);
    }

    #[test]
    fn numbers() {
        assert_eq!(parse_number("tau/32"), Some(TAU / 32.0));
        assert_eq!(parse_number("1e-3"), Some(1e-3));
        assert_eq!(parse_number("inf"), None);
        assert_eq!(parse_number("1/0"), None);
        assert_eq!(parse_radius("4h", 0.5), Some(2.0));
    }
}
