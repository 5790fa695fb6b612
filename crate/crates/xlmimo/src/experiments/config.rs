use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::catalog::{find_experiment, Experiment, LayoutNeed, ParamDefault, ParamKind};
use crate::codebook::{DistanceSampling, PolarSpec};
use crate::geometry::{ArrayGeometry, ArrayLayout};
use crate::nearfield::{reactive_boundary, GainPattern, ResponseModel, SourcePoint};
use crate::{wavelength, Error, Result, Vec3};

/// One scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub experiment: String,
    #[serde(default)]
    pub seed: u64,
    pub frequency_hz: f64,
    pub layout: ArrayGeometry,
    #[serde(default)]
    pub pattern: GainPattern,
    #[serde(default = "default_response")]
    pub response: ResponseModel,
    /// Experiment parameters by name; unset ones take the experiment default.
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub sweep: Vec<SweepAxis>,
    /// Explicit user positions; experiments that place users randomly use
    /// these instead when given.
    #[serde(default)]
    pub users: Vec<Placement>,
    #[serde(default)]
    pub scatterers: Vec<ScattererPlacement>,
    #[serde(default)]
    pub codebook: Option<PolarSpec>,
    /// Output directory; not part of the config hash.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_response() -> ResponseModel {
    ResponseModel::Nusw
}

/// Polar position relative to the array centre; `angle_deg` is measured
/// from the array axis, 90 being broadside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Placement {
    pub range_m: f64,
    pub angle_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScattererPlacement {
    pub range_m: f64,
    pub angle_deg: f64,
    pub rcs_m2: f64,
}

impl Placement {
    pub fn position(&self, layout: &ArrayLayout) -> Vec3 {
        SourcePoint::polar(layout, self.range_m, self.angle_deg.to_radians()).position
    }
}

impl ScattererPlacement {
    pub fn position(&self, layout: &ArrayLayout) -> Vec3 {
        Placement { range_m: self.range_m, angle_deg: self.angle_deg }.position(layout)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

/// A swept parameter: either `min`/`max`/`steps` (with `scale`) or an
/// explicit `values` list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub parameter: String,
    #[serde(default)]
    pub min: Option<f64>,
    #[serde(default)]
    pub max: Option<f64>,
    #[serde(default)]
    pub steps: Option<usize>,
    #[serde(default)]
    pub scale: Scale,
    #[serde(default)]
    pub values: Option<Vec<f64>>,
}

impl SweepAxis {
    /// Grid values; `None` when the axis is malformed (see [`validate`]).
    pub fn grid(&self) -> Option<Vec<f64>> {
        if let Some(v) = &self.values {
            return (self.min.is_none() && self.max.is_none() && self.steps.is_none() && !v.is_empty())
                .then(|| v.clone());
        }
        let (lo, hi, n) = (self.min?, self.max?, self.steps?);
        if n < 2 || !lo.is_finite() || !hi.is_finite() {
            return None;
        }
        let last = (n - 1) as f64;
        match self.scale {
            Scale::Linear => {
                Some((0..n).map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / last }).collect())
            }
            Scale::Log => {
                if !(lo > 0.0 && hi > 0.0) {
                    return None;
                }
                let (a, b) = (lo.ln(), hi.ln());
                Some(
                    (0..n)
                        .map(|i| match i {
                            0 => lo,
                            _ if i + 1 == n => hi,
                            _ => (a + (b - a) * i as f64 / last).exp(),
                        })
                        .collect(),
                )
            }
        }
    }
}

/// A problem located by its path in the config.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub path: String,
    pub message: String,
}

impl Issue {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Issue { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Diagnostics {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl Diagnostics {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Parses TOML text; syntax and schema errors come back as a single issue.
pub fn parse_config(text: &str) -> std::result::Result<ScenarioConfig, Issue> {
    toml::from_str(text).map_err(|e| {
        let path = match e.span() {
            Some(span) => {
                let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
                format!("line {line}")
            }
            None => "config".to_string(),
        };
        Issue::new(path, e.message().to_string())
    })
}

/// One grid point: a value for every parameter the experiment declares.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    names: Vec<&'static str>,
    values: Vec<f64>,
}

impl Point {
    /// Value of a declared parameter.
    ///
    /// # Panics
    /// If the experiment does not declare `name`.
    pub fn get(&self, name: &str) -> f64 {
        let i = self.names.iter().position(|n| *n == name).unwrap_or_else(|| panic!("undeclared parameter {name}"));
        self.values[i]
    }

    /// Integer-valued parameter.
    pub fn count(&self, name: &str) -> usize {
        self.get(name).round().max(0.0) as usize
    }

    pub fn has(&self, name: &str) -> bool {
        self.names.contains(&name)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

fn default_value(config: &ScenarioConfig, default: ParamDefault) -> f64 {
    match default {
        ParamDefault::Value(v) => v,
        ParamDefault::Frequency => config.frequency_hz,
        ParamDefault::Elements => config.layout.num_elements() as f64,
    }
}

/// Every declared parameter with its configured or default value.
pub fn resolved_params(config: &ScenarioConfig, experiment: &Experiment) -> BTreeMap<String, f64> {
    experiment
        .params
        .iter()
        .filter(|p| matches!(p.default, ParamDefault::Value(_)))
        .map(|p| {
            (p.name.to_string(), config.params.get(p.name).copied().unwrap_or_else(|| default_value(config, p.default)))
        })
        .collect()
}

/// Sweep grid in row order: the first axis varies slowest.
pub fn grid(config: &ScenarioConfig, experiment: &Experiment) -> Result<Vec<Point>> {
    let names: Vec<&'static str> = experiment.params.iter().map(|p| p.name).collect();
    let base: Vec<f64> = experiment
        .params
        .iter()
        .map(|p| config.params.get(p.name).copied().unwrap_or_else(|| default_value(config, p.default)))
        .collect();
    let mut points = vec![base];
    for (i, axis) in config.sweep.iter().enumerate() {
        let slot = names
            .iter()
            .position(|n| *n == axis.parameter)
            .ok_or_else(|| Error::param("sweep", format!("sweep[{i}] names unknown parameter {}", axis.parameter)))?;
        let integer = experiment.params[slot].kind.is_integer();
        let values = axis.grid().ok_or_else(|| Error::param("sweep", format!("sweep[{i}] is malformed")))?;
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q[slot] = if integer { v.round() } else { v };
                    q
                })
            })
            .collect();
    }
    // Integer parameters are rounded; the sweep loop handles swept ones.
    Ok(points
        .into_iter()
        .map(|mut values| {
            for (v, p) in values.iter_mut().zip(experiment.params) {
                if p.kind.is_integer() {
                    *v = v.round();
                }
            }
            Point { names: names.clone(), values }
        })
        .collect())
}

/// `geometry` with its element count replaced where that is meaningful.
pub fn with_elements(geometry: &ArrayGeometry, elements: usize) -> Result<ArrayGeometry> {
    let mut g = geometry.clone();
    match &mut g {
        ArrayGeometry::CollocatedUla { elements: e } | ArrayGeometry::SparseUla { elements: e, .. } => *e = elements,
        ArrayGeometry::ModularUla { modules, per_module, .. } => {
            if elements % *per_module != 0 {
                return Err(Error::param(
                    "elements",
                    format!("{elements} elements do not fill whole modules of {per_module}"),
                ));
            }
            *modules = elements / *per_module;
        }
        _ => {
            if elements != geometry.num_elements() {
                return Err(Error::param("elements", "the element count of planar layouts cannot be changed"));
            }
        }
    }
    Ok(g)
}

/// Array at the point's carrier, centred at the origin facing `x̂`.
pub fn point_layout(config: &ScenarioConfig, point: &Point) -> Result<ArrayLayout> {
    let geometry = if point.has("elements") {
        with_elements(&config.layout, point.count("elements"))?
    } else {
        config.layout.clone()
    };
    let f = if point.has("frequency_hz") { point.get("frequency_hz") } else { config.frequency_hz };
    ArrayLayout::along_y(geometry, wavelength(f))
}

fn check_value(kind: ParamKind, v: f64) -> std::result::Result<(), String> {
    let ok = match kind {
        ParamKind::Real => v.is_finite(),
        ParamKind::Positive | ParamKind::Range => v.is_finite() && v > 0.0,
        ParamKind::NonNegative => v.is_finite() && v >= 0.0,
        ParamKind::Fraction => v > 0.0 && v < 1.0,
        ParamKind::Angle => (0.0..=180.0).contains(&v),
        ParamKind::Count => v.is_finite() && v >= 1.0 && (v - v.round()).abs() < 1e-9,
        ParamKind::PowerOfTwo => {
            v.is_finite() && v >= 1.0 && (v - v.round()).abs() < 1e-9 && (v.round() as u64).is_power_of_two()
        }
    };
    if ok {
        Ok(())
    } else {
        Err(format!("{v} is not {}", kind.describe()))
    }
}

/// Full validation. Errors carry the path of the offending field; sources
/// inside the reactive region produce warnings.
pub fn validate(config: &ScenarioConfig) -> Diagnostics {
    let mut d = Diagnostics::default();
    let err = |d: &mut Diagnostics, path: &str, msg: String| d.errors.push(Issue::new(path, msg));

    if config.name.trim().is_empty() {
        err(&mut d, "name", "must not be empty".into());
    }
    if !(config.frequency_hz.is_finite() && config.frequency_hz > 0.0) {
        err(&mut d, "frequency_hz", format!("must be positive, got {}", config.frequency_hz));
    }
    if let Err(e) = config.layout.validate() {
        err(&mut d, &error_path("layout", &e), error_message(&e));
    }
    if let Err(e) = config.pattern.validate() {
        err(&mut d, &error_path("pattern", &e), error_message(&e));
    }
    for (i, u) in config.users.iter().enumerate() {
        check_placement(&mut d, &format!("users[{i}]"), u.range_m, u.angle_deg);
    }
    for (i, s) in config.scatterers.iter().enumerate() {
        check_placement(&mut d, &format!("scatterers[{i}]"), s.range_m, s.angle_deg);
        if !(s.rcs_m2.is_finite() && s.rcs_m2 > 0.0) {
            err(&mut d, &format!("scatterers[{i}].rcs_m2"), format!("must be positive, got {}", s.rcs_m2));
        }
    }
    if let Some(cb) = &config.codebook {
        if !(cb.delta > 0.0 && cb.delta < 1.0) {
            err(&mut d, "codebook.delta", format!("must lie in (0, 1), got {}", cb.delta));
        }
        if cb.max_rings == Some(0) {
            err(&mut d, "codebook.max_rings", "must be at least 1".into());
        }
        if let DistanceSampling::Uniform { ranges } = &cb.sampling {
            if let Some(r) = ranges.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
                err(&mut d, "codebook.sampling.ranges", format!("distances must be positive, got {r}"));
            }
        }
    }

    let Some(experiment) = find_experiment(&config.experiment) else {
        err(&mut d, "experiment", format!("unknown experiment `{}`; see list-experiments", config.experiment));
        return d;
    };

    for (key, &v) in &config.params {
        match experiment.params.iter().find(|p| p.name == key) {
            None => err(&mut d, &format!("params.{key}"), format!("`{}` has no parameter `{key}`", experiment.name)),
            Some(p) if !matches!(p.default, ParamDefault::Value(_)) => err(
                &mut d,
                &format!("params.{key}"),
                format!("set `{key}` through the top-level config or a sweep axis"),
            ),
            Some(p) => {
                if let Err(m) = check_value(p.kind, v) {
                    err(&mut d, &format!("params.{key}"), m);
                }
            }
        }
    }
    let mut seen = Vec::new();
    for (i, axis) in config.sweep.iter().enumerate() {
        let path = format!("sweep[{i}]");
        let Some(p) = experiment.params.iter().find(|p| p.name == axis.parameter) else {
            err(
                &mut d,
                &format!("{path}.parameter"),
                format!("`{}` has no parameter `{}`", experiment.name, axis.parameter),
            );
            continue;
        };
        if seen.contains(&p.name) {
            err(&mut d, &format!("{path}.parameter"), format!("`{}` is swept twice", p.name));
        }
        seen.push(p.name);
        if axis.values.is_some() {
            if axis.min.is_some() || axis.max.is_some() || axis.steps.is_some() {
                err(&mut d, &path, "give either `values` or `min`/`max`/`steps`, not both".into());
            } else if axis.values.as_ref().is_some_and(|v| v.is_empty()) {
                err(&mut d, &format!("{path}.values"), "must not be empty".into());
            }
        } else {
            if axis.min.is_none() {
                err(&mut d, &format!("{path}.min"), "missing".into());
            }
            if axis.max.is_none() {
                err(&mut d, &format!("{path}.max"), "missing".into());
            }
            match axis.steps {
                None => err(&mut d, &format!("{path}.steps"), "missing".into()),
                Some(n) if n < 2 => err(&mut d, &format!("{path}.steps"), format!("must be at least 2, got {n}")),
                _ => {}
            }
            if axis.scale == Scale::Log && (axis.min.is_some_and(|v| v <= 0.0) || axis.max.is_some_and(|v| v <= 0.0)) {
                err(&mut d, &format!("{path}.scale"), "log sweeps need positive bounds".into());
            }
        }
        if let Some(values) = axis.grid() {
            for v in values {
                let v = if p.kind.is_integer() { v.round() } else { v };
                if let Err(m) = check_value(p.kind, v) {
                    err(&mut d, &path, m);
                    break;
                }
            }
        }
    }
    if !d.is_ok() {
        return d;
    }

    let points = match grid(config, experiment) {
        Ok(p) => p,
        Err(e) => {
            err(&mut d, "sweep", error_message(&e));
            return d;
        }
    };
    for p in experiment.params {
        if matches!(p.default, ParamDefault::Frequency | ParamDefault::Elements) && !seen.contains(&p.name) {
            let v = points[0].get(p.name);
            if let Err(m) = check_value(p.kind, v) {
                let path = if p.name == "elements" { "layout" } else { p.name };
                err(&mut d, path, m);
            }
        }
    }
    if !d.is_ok() {
        return d;
    }
    check_points(config, experiment, &points, &mut d);
    d
}

fn check_placement(d: &mut Diagnostics, path: &str, range: f64, angle: f64) {
    if !(range.is_finite() && range > 0.0) {
        d.errors.push(Issue::new(format!("{path}.range_m"), format!("must be positive, got {range}")));
    }
    if !(0.0..=180.0).contains(&angle) {
        d.errors.push(Issue::new(format!("{path}.angle_deg"), format!("must lie in [0, 180], got {angle}")));
    }
}

fn check_points(config: &ScenarioConfig, experiment: &Experiment, points: &[Point], d: &mut Diagnostics) {
    let mut inside: BTreeMap<String, (usize, f64, f64)> = BTreeMap::new();
    for point in points {
        if experiment.layout == LayoutNeed::None {
            continue;
        }
        let layout = match point_layout(config, point) {
            Ok(l) => l,
            Err(e) => {
                d.errors.push(Issue::new(error_path("layout", &e), error_message(&e)));
                return;
            }
        };
        let ok = match experiment.layout {
            LayoutNeed::Linear => layout.geometry().is_linear(),
            LayoutNeed::CollocatedLinear => matches!(layout.geometry(), ArrayGeometry::CollocatedUla { .. }),
            _ => true,
        };
        if !ok {
            d.errors.push(Issue::new(
                "layout.kind",
                format!("`{}` needs {}", experiment.name, experiment.layout.describe()),
            ));
            return;
        }
        let boundary = reactive_boundary(layout.physical_dimension(), layout.wavelength());
        let mut note = |path: String, r: f64| {
            if r <= boundary {
                let e = inside.entry(path).or_insert((0, r, boundary));
                e.0 += 1;
                if r < e.1 {
                    e.1 = r;
                    e.2 = boundary;
                }
            }
        };
        for p in experiment.params.iter().filter(|p| p.kind == ParamKind::Range) {
            note(format!("params.{}", p.name), point.get(p.name));
        }
        if experiment.uses_placements {
            for (i, u) in config.users.iter().enumerate() {
                note(format!("users[{i}].range_m"), u.range_m);
            }
            for (i, s) in config.scatterers.iter().enumerate() {
                note(format!("scatterers[{i}].range_m"), s.range_m);
            }
        }
    }
    for (path, (count, r, boundary)) in inside {
        d.warnings.push(Issue::new(
            path,
            format!(
                "{r} m lies inside the reactive region (boundary {boundary:.4} m) at {count} of {} grid points",
                points.len()
            ),
        ));
    }
}

fn error_path(prefix: &str, e: &Error) -> String {
    match e {
        Error::InvalidParameter { name, .. } => format!("{prefix}.{name}"),
        _ => prefix.to_string(),
    }
}

fn error_message(e: &Error) -> String {
    match e {
        Error::InvalidParameter { reason, .. } => reason.clone(),
        other => other.to_string(),
    }
}

#[derive(Serialize)]
struct HashView<'a> {
    name: &'a str,
    experiment: &'a str,
    seed: u64,
    frequency_hz: f64,
    layout: &'a ArrayGeometry,
    pattern: &'a GainPattern,
    response: ResponseModel,
    params: BTreeMap<String, f64>,
    sweep: &'a [SweepAxis],
    users: &'a [Placement],
    scatterers: &'a [ScattererPlacement],
    codebook: &'a Option<PolarSpec>,
}

/// SHA-256 of the parsed config with defaults filled in and the output
/// directory left out, so formatting, key order and spelled-out defaults do
/// not change it.
pub fn config_hash(config: &ScenarioConfig) -> String {
    let params = match find_experiment(&config.experiment) {
        Some(e) => resolved_params(config, e),
        None => config.params.clone(),
    };
    let view = HashView {
        name: &config.name,
        experiment: &config.experiment,
        seed: config.seed,
        frequency_hz: config.frequency_hz,
        layout: &config.layout,
        pattern: &config.pattern,
        response: config.response,
        params,
        sweep: &config.sweep,
        users: &config.users,
        scatterers: &config.scatterers,
        codebook: &config.codebook,
    };
    let json = serde_json::to_string(&view).expect("config serialises");
    let digest = Sha256::digest(json.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
