//! Run configuration.
//!
//! Two input forms are accepted. A single JSON object, or `key = value`
//! lines where `#` starts a comment, lists are comma separated and `none`
//! clears an optional threshold:
//!
//! ```text
//! kind = repulsive
//! R = 30
//! N = 2048
//! profile = gaussian
//! t1 = 1.5
//! dt = 1e-3
//! rho = 0.5, 1, 2
//! watchdog_energy = none
//! ```
//!
//! `R` and `N` are aliases of `radius` and `points`. Every other key is
//! listed on [`SimConfig`]; unknown keys are rejected.

use std::f64::consts::PI;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Number, Value};

use crate::error::{Error, Result};
use crate::evolution::{Nonlinearity, PicardOptions, StepPolicy, Watchdog};
use crate::grid::Grid;
use crate::propagator::PotentialKind;
use crate::scattering::WaveOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// `amplitude · e^{−r²/(2 width²)}`
    Gaussian,
    /// `amplitude · e^{−(r − center)²/(2 width²)}`
    Ring,
    /// Read from `checkpoint_path`.
    Checkpoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub kind: PotentialKind,
    #[serde(alias = "R")]
    pub radius: f64,
    #[serde(alias = "N")]
    pub points: usize,
    pub profile: Profile,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "one")]
    pub width: f64,
    #[serde(default = "default_center")]
    pub center: f64,
    #[serde(default)]
    pub checkpoint_path: Option<PathBuf>,
    #[serde(default)]
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default = "yes")]
    pub nonlinear: bool,

    /// Local masses at the `rho` radii on every snapshot.
    #[serde(default = "yes")]
    pub diag_local_mass: bool,
    /// Smooth-weight Morawetz action on every snapshot.
    #[serde(default = "yes")]
    pub diag_morawetz: bool,
    /// Repulsive split-energy audit: variance identity and potential decay.
    #[serde(default = "yes")]
    pub diag_variance: bool,
    /// Pullback Cauchy matrix and scattering-state extraction (repulsive and free).
    #[serde(default)]
    pub diag_scattering: bool,

    #[serde(default = "default_boundary")]
    pub watchdog_boundary: f64,
    #[serde(default = "default_energy_drift")]
    pub watchdog_energy: Option<f64>,
    #[serde(default = "default_z")]
    pub watchdog_z: Option<f64>,

    #[serde(default = "one")]
    pub morawetz_k: f64,
    #[serde(default = "default_epsilon")]
    pub morawetz_epsilon: f64,
    #[serde(default = "default_rho")]
    pub rho: Vec<f64>,

    #[serde(default = "default_t_start")]
    pub t_start: f64,
    #[serde(default = "one")]
    pub tau_tail: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,

    #[serde(default = "default_t_loc")]
    pub picard_t_loc: f64,
    #[serde(default = "default_node_dt")]
    pub picard_node_dt: f64,

    /// Ladder for `convergence`; empty means `dt, dt/2, dt/4`.
    #[serde(default)]
    pub ladder: Vec<f64>,
    #[serde(default)]
    pub ladder_param: LadderParam,

    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LadderParam {
    #[default]
    Dt,
    #[serde(rename = "N")]
    N,
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_center() -> f64 {
    3.0
}
fn default_stride() -> usize {
    10
}
fn default_boundary() -> f64 {
    1e-6
}
fn default_energy_drift() -> Option<f64> {
    Some(1e-2)
}
fn default_z() -> Option<f64> {
    Some(1e12)
}
fn default_epsilon() -> f64 {
    0.5
}
fn default_rho() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}
fn default_t_start() -> f64 {
    2.0
}
fn default_tol() -> f64 {
    1e-3
}
fn default_t_loc() -> f64 {
    0.1
}
fn default_node_dt() -> f64 {
    1e-3
}

#[derive(Clone, Copy)]
enum Ty {
    Num,
    Int,
    Bool,
    Str,
    NumList,
    OptNum,
    OptStr,
}

const FIELDS: &[(&str, Ty)] = &[
    ("kind", Ty::Str),
    ("radius", Ty::Num),
    ("points", Ty::Int),
    ("profile", Ty::Str),
    ("amplitude", Ty::Num),
    ("width", Ty::Num),
    ("center", Ty::Num),
    ("checkpoint_path", Ty::OptStr),
    ("t0", Ty::Num),
    ("t1", Ty::Num),
    ("dt", Ty::Num),
    ("stride", Ty::Int),
    ("nonlinear", Ty::Bool),
    ("diag_local_mass", Ty::Bool),
    ("diag_morawetz", Ty::Bool),
    ("diag_variance", Ty::Bool),
    ("diag_scattering", Ty::Bool),
    ("watchdog_boundary", Ty::Num),
    ("watchdog_energy", Ty::OptNum),
    ("watchdog_z", Ty::OptNum),
    ("morawetz_k", Ty::Num),
    ("morawetz_epsilon", Ty::Num),
    ("rho", Ty::NumList),
    ("t_start", Ty::Num),
    ("tau_tail", Ty::Num),
    ("tol", Ty::Num),
    ("picard_t_loc", Ty::Num),
    ("picard_node_dt", Ty::Num),
    ("ladder", Ty::NumList),
    ("ladder_param", Ty::Str),
    ("seed", Ty::Int),
];

fn canonical_key(key: &str) -> &str {
    match key {
        "R" => "radius",
        "N" => "points",
        k => k,
    }
}

fn parse_error(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse {
        location: location.into(),
        message: message.into(),
    }
}

fn parse_number(s: &str) -> Option<Value> {
    let x: f64 = s.parse().ok()?;
    Number::from_f64(x).map(Value::Number)
}

fn typed_value(ty: Ty, raw: &str) -> std::result::Result<Value, String> {
    let none = raw.eq_ignore_ascii_case("none");
    match ty {
        Ty::Num => {
            parse_number(raw).ok_or_else(|| format!("expected a finite number, got `{raw}`"))
        }
        Ty::Int => raw
            .parse::<u64>()
            .map(|v| Value::Number(v.into()))
            .map_err(|_| format!("expected a non-negative integer, got `{raw}`")),
        Ty::Bool => match raw {
            "true" => Ok(Value::Bool(true)),
            "false" => Ok(Value::Bool(false)),
            _ => Err(format!("expected true or false, got `{raw}`")),
        },
        Ty::Str => Ok(Value::String(raw.to_string())),
        Ty::OptStr if none => Ok(Value::Null),
        Ty::OptStr => Ok(Value::String(raw.to_string())),
        Ty::OptNum if none => Ok(Value::Null),
        Ty::OptNum => parse_number(raw)
            .ok_or_else(|| format!("expected a finite number or `none`, got `{raw}`")),
        Ty::NumList if raw.is_empty() => Ok(Value::Array(Vec::new())),
        Ty::NumList => raw
            .split(',')
            .map(|s| {
                parse_number(s.trim())
                    .ok_or_else(|| format!("expected a list of numbers, got `{raw}`"))
            })
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(Value::Array),
    }
}

fn key_value_object(text: &str) -> Result<Map<String, Value>> {
    let mut map = Map::new();
    for (i, line) in text.lines().enumerate() {
        let at = format!("line {}", i + 1);
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, raw)) = line.split_once('=') else {
            return Err(parse_error(
                at,
                format!("expected `key = value`, got `{line}`"),
            ));
        };
        let key = canonical_key(key.trim());
        let Some(&(_, ty)) = FIELDS.iter().find(|(k, _)| *k == key) else {
            return Err(parse_error(at, format!("unknown key `{key}`")));
        };
        let value = typed_value(ty, raw.trim())
            .map_err(|m| parse_error(format!("{at}, key `{key}`"), m))?;
        if map.insert(key.to_string(), value).is_some() {
            return Err(parse_error(at, format!("duplicate key `{key}`")));
        }
    }
    Ok(map)
}

fn from_value(value: Value, location: &str) -> Result<SimConfig> {
    serde_json::from_value(value).map_err(|e| parse_error(location, e.to_string()))
}

/// Parses and validates a configuration in either accepted form.
pub fn parse_config(text: &str) -> Result<SimConfig> {
    let trimmed = text.trim_start();
    let config = if trimmed.starts_with('{') {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| parse_error(format!("line {}", e.line()), e.to_string()))?;
        from_value(value, "json")?
    } else {
        from_value(Value::Object(key_value_object(text)?), "config")?
    };
    config.validate()?;
    Ok(config)
}

fn render(value: &Value) -> String {
    match value {
        Value::Null => "none".into(),
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(render).collect::<Vec<_>>().join(", "),
        v => v.to_string(),
    }
}

/// `key = value` text with every field spelled out; parses back to `self`.
pub fn emit(config: &SimConfig) -> String {
    let Value::Object(map) = serde_json::to_value(config).expect("config serializes") else {
        unreachable!("config serializes to an object")
    };
    let mut out = String::new();
    for (key, _) in FIELDS {
        if let Some(v) = map.get(*key) {
            out.push_str(&format!("{key} = {}\n", render(v)));
        }
    }
    out
}

fn check(ok: bool, key: &str, message: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(parse_error(format!("key `{key}`"), message()))
    }
}

impl SimConfig {
    /// A configuration with every optional field at its default.
    pub fn minimal(kind: PotentialKind, radius: f64, points: usize, t1: f64, dt: f64) -> SimConfig {
        let text = format!("kind = {kind}\nR = {radius:?}\nN = {points}\nprofile = gaussian\nt1 = {t1:?}\ndt = {dt:?}\n");
        parse_config(&text).expect("minimal config is valid")
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |x: f64| x.is_finite() && x > 0.0;
        check(pos(self.radius), "radius", || {
            format!("must be positive, got {}", self.radius)
        })?;
        check(self.points >= Grid::MIN_POINTS, "points", || {
            format!("must be at least {}, got {}", Grid::MIN_POINTS, self.points)
        })?;
        check(
            self.amplitude.is_finite() && self.amplitude >= 0.0,
            "amplitude",
            || format!("must be non-negative, got {}", self.amplitude),
        )?;
        check(pos(self.width), "width", || {
            format!("must be positive, got {}", self.width)
        })?;
        check(
            self.center.is_finite() && self.center >= 0.0,
            "center",
            || format!("must be non-negative, got {}", self.center),
        )?;
        check(
            self.profile != Profile::Checkpoint || self.checkpoint_path.is_some(),
            "checkpoint_path",
            || "required by profile = checkpoint".into(),
        )?;
        check(self.t0.is_finite(), "t0", || "must be finite".into())?;
        check(self.t1.is_finite(), "t1", || "must be finite".into())?;
        check(pos(self.dt), "dt", || {
            format!("must be positive, got {}", self.dt)
        })?;
        check(
            self.kind != PotentialKind::Confining || self.dt < PI,
            "dt",
            || format!("confining steps need dt < π, got {}", self.dt),
        )?;
        check(self.stride >= 1, "stride", || "must be at least 1".into())?;
        check(
            pos(self.watchdog_boundary) && self.watchdog_boundary <= 1.0,
            "watchdog_boundary",
            || format!("must lie in (0, 1], got {}", self.watchdog_boundary),
        )?;
        check(
            self.watchdog_energy.is_none_or(pos),
            "watchdog_energy",
            || "must be positive".into(),
        )?;
        check(self.watchdog_z.is_none_or(pos), "watchdog_z", || {
            "must be positive".into()
        })?;
        check(pos(self.morawetz_k), "morawetz_k", || {
            format!("must be positive, got {}", self.morawetz_k)
        })?;
        check(pos(self.morawetz_epsilon), "morawetz_epsilon", || {
            format!("must be positive, got {}", self.morawetz_epsilon)
        })?;
        check(
            self.rho.iter().all(|&r| pos(r) && 2.0 * r <= self.radius),
            "rho",
            || format!("radii must satisfy 0 < 2ρ <= R, got {:?}", self.rho),
        )?;
        check(pos(self.t_start), "t_start", || {
            format!("must be positive, got {}", self.t_start)
        })?;
        check(pos(self.tau_tail), "tau_tail", || {
            format!("must be positive, got {}", self.tau_tail)
        })?;
        check(pos(self.tol), "tol", || {
            format!("must be positive, got {}", self.tol)
        })?;
        check(pos(self.picard_t_loc), "picard_t_loc", || {
            "must be positive".into()
        })?;
        check(pos(self.picard_node_dt), "picard_node_dt", || {
            "must be positive".into()
        })?;
        check(self.ladder.iter().all(|&x| pos(x)), "ladder", || {
            "entries must be positive".into()
        })?;
        Ok(())
    }

    pub fn nonlinearity(&self) -> Nonlinearity {
        if self.nonlinear {
            Nonlinearity::Defocusing
        } else {
            Nonlinearity::Off
        }
    }

    pub fn watchdog(&self) -> Watchdog {
        Watchdog {
            boundary_fraction: self.watchdog_boundary,
            energy_drift: self.watchdog_energy,
            z_pow10: self.watchdog_z,
        }
    }

    pub fn step_policy(&self) -> StepPolicy {
        StepPolicy {
            dt: self.dt,
            stride: self.stride,
            watchdog: self.watchdog(),
            nonlinearity: self.nonlinearity(),
        }
    }

    pub fn picard_options(&self) -> PicardOptions {
        PicardOptions {
            t_loc: self.picard_t_loc,
            node_dt: self.picard_node_dt,
            ..PicardOptions::default()
        }
    }

    pub fn wave_options(&self) -> WaveOptions {
        WaveOptions {
            tau_tail: self.tau_tail,
            tol: self.tol,
            dt: self.dt,
            stride: self.stride,
            watchdog: Watchdog {
                boundary_fraction: self.watchdog_boundary,
                energy_drift: None,
                z_pow10: None,
            },
            ..WaveOptions::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const MINIMAL: &str =
        "kind = repulsive\nR = 30\nN = 512\nprofile = gaussian\nt1 = 1\ndt = 1e-3\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.kind, PotentialKind::Repulsive);
        assert_eq!((c.radius, c.points), (30.0, 512));
        assert_eq!(c.stride, 10);
        assert_eq!(c.rho, vec![0.5, 1.0, 2.0]);
        assert_eq!(c.watchdog_energy, Some(1e-2));
        assert_eq!(c.t0, 0.0);
        assert!(c.nonlinear);
        assert_eq!(
            c,
            SimConfig::minimal(PotentialKind::Repulsive, 30.0, 512, 1.0, 1e-3)
        );
    }

    #[test]
    fn json_and_key_value_agree() {
        let json = r#"{"kind": "repulsive", "R": 30, "N": 512, "profile": "gaussian", "t1": 1, "dt": 0.001}"#;
        assert_eq!(parse_config(json).unwrap(), parse_config(MINIMAL).unwrap());
    }

    fn location(e: Error) -> String {
        match e {
            Error::Parse { location, .. } => location,
            other => panic!("expected a parse error, got {other}"),
        }
    }

    #[test]
    fn rejections_name_the_line_or_key() {
        let neg = MINIMAL.replace("dt = 1e-3", "dt = -1e-3");
        assert_eq!(location(parse_config(&neg).unwrap_err()), "key `dt`");
        let unknown = format!("{MINIMAL}colour = red\n");
        assert_eq!(location(parse_config(&unknown).unwrap_err()), "line 7");
        let typed = MINIMAL.replace("N = 512", "N = many");
        assert_eq!(
            location(parse_config(&typed).unwrap_err()),
            "line 3, key `points`"
        );
        let missing = MINIMAL.replace("t1 = 1\n", "");
        assert!(parse_config(&missing)
            .unwrap_err()
            .to_string()
            .contains("t1"));
        let json = r#"{"kind": "free", "R": 30, "N": 512, "profile": "gaussian", "t1": 1, "dt": 0.1, "x": 1}"#;
        assert!(parse_config(json)
            .unwrap_err()
            .to_string()
            .contains("unknown field `x`"));
        let dup = format!("{MINIMAL}dt = 2e-3\n");
        assert!(parse_config(&dup).is_err());
    }

    #[test]
    fn confining_step_cap() {
        let text = "kind = confining\nR = 20\nN = 256\nprofile = gaussian\nt1 = 10\ndt = 3.2\n";
        assert_eq!(location(parse_config(text).unwrap_err()), "key `dt`");
        assert!(parse_config(&text.replace("3.2", "3.1")).is_ok());
    }

    #[test]
    fn optional_thresholds_and_lists() {
        let text = format!(
            "{MINIMAL}watchdog_energy = none\nrho = 1, 2.5 # radii\nladder = 4e-3, 2e-3, 1e-3\n"
        );
        let c = parse_config(&text).unwrap();
        assert_eq!(c.watchdog_energy, None);
        assert_eq!(c.rho, vec![1.0, 2.5]);
        assert_eq!(c.ladder.len(), 3);
        let bad_rho = format!("{MINIMAL}rho = 20\n");
        assert_eq!(location(parse_config(&bad_rho).unwrap_err()), "key `rho`");
        let ck = MINIMAL.replace("gaussian", "checkpoint");
        assert_eq!(
            location(parse_config(&ck).unwrap_err()),
            "key `checkpoint_path`"
        );
    }

    fn arb_config() -> impl Strategy<Value = SimConfig> {
        (
            prop::sample::select(vec![
                PotentialKind::Free,
                PotentialKind::Confining,
                PotentialKind::Repulsive,
            ]),
            4.0f64..200.0,
            8usize..10_000,
            prop::sample::select(vec![Profile::Gaussian, Profile::Ring, Profile::Checkpoint]),
            (0.0f64..10.0, 0.01f64..5.0, -5.0f64..5.0, 1e-6f64..3.0),
            (1usize..1000, any::<bool>(), any::<bool>(), any::<u64>()),
            (
                prop::option::of(1e-12f64..1.0),
                prop::collection::vec(0.01f64..0.5, 0..4),
            ),
        )
            .prop_map(
                |(
                    kind,
                    radius,
                    points,
                    profile,
                    (amplitude, width, t1, dt),
                    (stride, nl, dm, seed),
                    (e, rho),
                )| {
                    let mut c = SimConfig::minimal(kind, radius, points, t1, dt);
                    c.profile = profile;
                    if profile == Profile::Checkpoint {
                        c.checkpoint_path = Some(PathBuf::from("runs/field_final.bin"));
                    }
                    c.amplitude = amplitude;
                    c.width = width;
                    c.stride = stride;
                    c.nonlinear = nl;
                    c.diag_morawetz = dm;
                    c.seed = seed;
                    c.watchdog_energy = e;
                    c.rho = rho.iter().map(|f| f * radius).collect();
                    c
                },
            )
    }

    proptest! {
        #[test]
        fn emit_parse_round_trip(c in arb_config()) {
            let text = emit(&c);
            let back = parse_config(&text).unwrap();
            prop_assert_eq!(&back, &c);
            prop_assert_eq!(emit(&back), text);
        }
    }
}
