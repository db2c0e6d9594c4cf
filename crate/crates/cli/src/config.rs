//! Run configuration in TOML with three flat sections: `[model]`, `[sweep]`
//! and `[output]`.
//!
//! ```toml
//! [model]
//! kind = "robin"
//!
//! [sweep]
//! start = 0.1
//! ratio = 0.5
//! count = 8
//!
//! [output]
//! dir = "out"
//! ```

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use spectral_shift::models::{
    geometric_schedule, ConformalProfile, ConformalSpec, HoleSpec, PseudoMask, PseudoSpec, RobinDomain, RobinSpec,
    SymbolKind,
};
use spectral_shift::sweep::{check_schedule, SweepOptions, VerifyOptions};
use spectral_shift::{ModelKind, ModelSpec, ModelTag};

/// A configuration error, located at a key when possible.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    /// `[section].key`, when the error concerns a single key.
    pub key: Option<String>,
    /// 1-based line number in the source text.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.key, self.line) {
            (Some(k), Some(l)) => write!(f, "config error at line {l} ({k}): {}", self.message),
            (Some(k), None) => write!(f, "config error ({k}): {}", self.message),
            (None, Some(l)) => write!(f, "config error at line {l}: {}", self.message),
            (None, None) => write!(f, "config error: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Every tolerance used by a run, with the library defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    pub residual_tol: f64,
    pub gap_threshold: f64,
    pub min_overlap: f64,
    pub max_failed_fraction: f64,
    /// `None` uses the model's default law tolerance.
    pub law_tolerance: Option<f64>,
    pub slope_tolerance: f64,
    pub remainder_factor: f64,
    pub capacity_band: [f64; 2],
    pub min_degenerate_slope: f64,
    pub zero_coefficient_tol: f64,
    pub duality_tol: f64,
    pub consistency_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let s = SweepOptions::default();
        let v = VerifyOptions::default();
        Self {
            residual_tol: s.residual_tol,
            gap_threshold: s.gap_threshold,
            min_overlap: s.min_overlap,
            max_failed_fraction: s.max_failed_fraction,
            law_tolerance: v.law_tolerance,
            slope_tolerance: v.slope_tolerance,
            remainder_factor: v.remainder_factor,
            capacity_band: v.capacity_band,
            min_degenerate_slope: v.min_degenerate_slope,
            zero_coefficient_tol: v.zero_coefficient_tol,
            duality_tol: v.duality_tol,
            consistency_tol: v.consistency_tol,
        }
    }
}

impl Tolerances {
    pub fn sweep_options(&self, threads: Option<usize>) -> SweepOptions {
        SweepOptions {
            threads,
            residual_tol: self.residual_tol,
            gap_threshold: self.gap_threshold,
            min_overlap: self.min_overlap,
            max_failed_fraction: self.max_failed_fraction,
        }
    }

    pub fn verify_options(&self) -> VerifyOptions {
        VerifyOptions {
            law_tolerance: self.law_tolerance,
            slope_tolerance: self.slope_tolerance,
            remainder_factor: self.remainder_factor,
            capacity_band: self.capacity_band,
            min_degenerate_slope: self.min_degenerate_slope,
            zero_coefficient_tol: self.zero_coefficient_tol,
            duality_tol: self.duality_tol,
            consistency_tol: self.consistency_tol,
            max_failed_fraction: self.max_failed_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputPaths {
    pub dir: PathBuf,
    pub csv: String,
    pub verdict: String,
    pub summary: String,
}

impl Default for OutputPaths {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            csv: "sweep.csv".into(),
            verdict: "verdict.json".into(),
            summary: "summary.txt".into(),
        }
    }
}

impl OutputPaths {
    pub fn csv_path(&self) -> PathBuf {
        self.dir.join(&self.csv)
    }

    pub fn verdict_path(&self) -> PathBuf {
        self.dir.join(&self.verdict)
    }

    pub fn summary_path(&self) -> PathBuf {
        self.dir.join(&self.summary)
    }
}

/// A validated run: model, explicit ε schedule, tolerances and outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub schedule: Vec<f64>,
    pub threads: Option<usize>,
    pub tolerances: Tolerances,
    pub output: OutputPaths,
}

impl RunConfig {
    /// Model defaults with the model's default schedule.
    pub fn for_model(tag: ModelTag) -> Self {
        let model = ModelSpec::default_for(tag);
        let schedule = model.default_schedule();
        Self {
            model,
            schedule,
            threads: None,
            tolerances: Tolerances::default(),
            output: OutputPaths::default(),
        }
    }

    /// Checks the model and schedule against the library preconditions.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.model.validate().map_err(|e| keyless(e.to_string()))?;
        check_schedule(&self.schedule).map_err(|e| keyed("[sweep].schedule", e.to_string()))?;
        for &eps in &self.schedule {
            self.model
                .check_eps(eps)
                .map_err(|e| keyed("[sweep].schedule", e.to_string()))?;
        }
        Ok(())
    }
}

fn keyless(message: String) -> ConfigError {
    ConfigError {
        key: None,
        line: None,
        message,
    }
}

fn keyed(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        key: Some(key.to_string()),
        line: None,
        message: message.into(),
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: RawModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sweep: Option<RawSweep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    output: Option<RawOutput>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    mode: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    nodes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    domain: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dimension: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    profile: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    center: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    radius_scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lattice: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mask: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mask_start: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mask_len: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    symbol: Option<String>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    #[serde(skip_serializing_if = "Option::is_none")]
    schedule: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    start: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    residual_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gap_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    min_overlap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_failed_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    law_tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    slope_tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    remainder_factor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    capacity_band: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    min_degenerate_slope: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    zero_coefficient_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    duality_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    consistency_tol: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    #[serde(skip_serializing_if = "Option::is_none")]
    dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    csv: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    verdict: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    summary: Option<String>,
}

/// Parses and validates a configuration, applying defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError {
        key: None,
        line: e.span().map(|s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    let locate = |mut err: ConfigError| {
        if let Some(key) = &err.key {
            err.line = locate_key(text, key);
        }
        err
    };
    let config = build(raw).map_err(locate)?;
    config.validate().map_err(locate)?;
    Ok(config)
}

/// Serializes a configuration so that `parse_config` reproduces it.
pub fn to_toml(config: &RunConfig) -> String {
    let m = &config.model;
    let mut model = RawModel {
        kind: m.tag().name().to_string(),
        mode: Some(m.mode_index),
        ..RawModel::default()
    };
    match &m.kind {
        ModelKind::Robin(s) => {
            model.domain = Some(
                match s.domain {
                    RobinDomain::Interval => "interval",
                    RobinDomain::Square => "square",
                }
                .into(),
            );
            model.nodes = Some(s.nodes);
        }
        ModelKind::Conformal(s) => {
            model.dimension = Some(s.dimension);
            model.nodes = Some(s.nodes);
            let (name, a) = match s.profile {
                ConformalProfile::Constant { value } => ("constant", value),
                ConformalProfile::CosineBump { amplitude } => ("cosine-bump", amplitude),
                ConformalProfile::OddSine { amplitude } => ("odd-sine", amplitude),
            };
            model.profile = Some(name.into());
            model.amplitude = Some(a);
        }
        ModelKind::DirichletHole(s) => {
            model.nodes = Some(s.nodes);
            model.center = Some(s.center);
            model.radius_scale = Some(s.radius_scale);
        }
        ModelKind::PseudoSymbol(s) => {
            model.lattice = Some(s.lattice);
            match s.mask {
                PseudoMask::LeftHalf => model.mask = Some("left-half".into()),
                PseudoMask::Range { start, len } => {
                    model.mask = Some("range".into());
                    model.mask_start = Some(start);
                    model.mask_len = Some(len);
                }
            }
            model.symbol = Some(
                match s.symbol {
                    SymbolKind::Fractional => "fractional",
                    SymbolKind::Frozen => "frozen",
                }
                .into(),
            );
        }
    }
    let t = &config.tolerances;
    let sweep = RawSweep {
        schedule: Some(config.schedule.clone()),
        threads: config.threads,
        residual_tol: Some(t.residual_tol),
        gap_threshold: Some(t.gap_threshold),
        min_overlap: Some(t.min_overlap),
        max_failed_fraction: Some(t.max_failed_fraction),
        law_tolerance: t.law_tolerance,
        slope_tolerance: Some(t.slope_tolerance),
        remainder_factor: Some(t.remainder_factor),
        capacity_band: Some(t.capacity_band),
        min_degenerate_slope: Some(t.min_degenerate_slope),
        zero_coefficient_tol: Some(t.zero_coefficient_tol),
        duality_tol: Some(t.duality_tol),
        consistency_tol: Some(t.consistency_tol),
        ..RawSweep::default()
    };
    let o = &config.output;
    let output = RawOutput {
        dir: Some(o.dir.clone()),
        csv: Some(o.csv.clone()),
        verdict: Some(o.verdict.clone()),
        summary: Some(o.summary.clone()),
    };
    let raw = RawConfig {
        model,
        sweep: Some(sweep),
        output: Some(output),
    };
    toml::to_string(&raw).expect("configuration serializes")
}

fn build(raw: RawConfig) -> Result<RunConfig, ConfigError> {
    let model = build_model(&raw.model)?;
    let sweep = raw.sweep.unwrap_or_default();
    let schedule = build_schedule(&sweep, &model)?;
    let d = Tolerances::default();
    let tolerances = Tolerances {
        residual_tol: positive("residual_tol", sweep.residual_tol, d.residual_tol)?,
        gap_threshold: positive("gap_threshold", sweep.gap_threshold, d.gap_threshold)?,
        min_overlap: fraction("min_overlap", sweep.min_overlap, d.min_overlap)?,
        max_failed_fraction: fraction("max_failed_fraction", sweep.max_failed_fraction, d.max_failed_fraction)?,
        law_tolerance: match sweep.law_tolerance {
            Some(v) => Some(positive("law_tolerance", Some(v), 0.0)?),
            None => None,
        },
        slope_tolerance: positive("slope_tolerance", sweep.slope_tolerance, d.slope_tolerance)?,
        remainder_factor: positive("remainder_factor", sweep.remainder_factor, d.remainder_factor)?,
        capacity_band: match sweep.capacity_band {
            Some([lo, hi]) if lo.is_finite() && hi.is_finite() && lo < hi => [lo, hi],
            Some(_) => {
                return Err(keyed(
                    "[sweep].capacity_band",
                    "band must be [low, high] with low < high",
                ))
            }
            None => d.capacity_band,
        },
        min_degenerate_slope: positive(
            "min_degenerate_slope",
            sweep.min_degenerate_slope,
            d.min_degenerate_slope,
        )?,
        zero_coefficient_tol: positive(
            "zero_coefficient_tol",
            sweep.zero_coefficient_tol,
            d.zero_coefficient_tol,
        )?,
        duality_tol: positive("duality_tol", sweep.duality_tol, d.duality_tol)?,
        consistency_tol: positive("consistency_tol", sweep.consistency_tol, d.consistency_tol)?,
    };
    if sweep.threads == Some(0) {
        return Err(keyed("[sweep].threads", "thread count must be at least 1"));
    }
    let o = raw.output.unwrap_or_default();
    let d = OutputPaths::default();
    let output = OutputPaths {
        dir: o.dir.unwrap_or(d.dir),
        csv: file_name("csv", o.csv, d.csv)?,
        verdict: file_name("verdict", o.verdict, d.verdict)?,
        summary: file_name("summary", o.summary, d.summary)?,
    };
    Ok(RunConfig {
        model,
        schedule,
        threads: sweep.threads,
        tolerances,
        output,
    })
}

fn positive(key: &str, value: Option<f64>, default: f64) -> Result<f64, ConfigError> {
    match value {
        None => Ok(default),
        Some(v) if v > 0.0 && v.is_finite() => Ok(v),
        Some(v) => Err(keyed(
            &format!("[sweep].{key}"),
            format!("must be positive and finite, got {v}"),
        )),
    }
}

fn fraction(key: &str, value: Option<f64>, default: f64) -> Result<f64, ConfigError> {
    match value {
        None => Ok(default),
        Some(v) if (0.0..=1.0).contains(&v) => Ok(v),
        Some(v) => Err(keyed(&format!("[sweep].{key}"), format!("must lie in [0, 1], got {v}"))),
    }
}

fn file_name(key: &str, value: Option<String>, default: String) -> Result<String, ConfigError> {
    match value {
        None => Ok(default),
        Some(v) if !v.is_empty() && !v.contains(['/', '\\']) => Ok(v),
        Some(v) => Err(keyed(
            &format!("[output].{key}"),
            format!("expected a plain file name, got {v:?}"),
        )),
    }
}

fn build_schedule(sweep: &RawSweep, model: &ModelSpec) -> Result<Vec<f64>, ConfigError> {
    let geometric = sweep.start.is_some() || sweep.ratio.is_some() || sweep.count.is_some();
    if let Some(list) = &sweep.schedule {
        if geometric {
            let key = ["start", "ratio", "count"]
                .into_iter()
                .zip([sweep.start.is_some(), sweep.ratio.is_some(), sweep.count.is_some()])
                .find(|(_, set)| *set)
                .map(|(k, _)| k)
                .unwrap_or("start");
            return Err(keyed(
                &format!("[sweep].{key}"),
                "give either an explicit schedule or start/ratio/count, not both",
            ));
        }
        return Ok(list.clone());
    }
    if !geometric {
        return Ok(model.default_schedule());
    }
    let start = sweep.start.unwrap_or(0.1);
    let ratio = sweep.ratio.unwrap_or(0.5);
    let count = sweep.count.unwrap_or(8);
    if !(start > 0.0 && start.is_finite()) {
        return Err(keyed("[sweep].start", format!("must be positive, got {start}")));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(keyed(
            "[sweep].ratio",
            format!("must lie strictly between 0 and 1, got {ratio}"),
        ));
    }
    if count == 0 {
        return Err(keyed("[sweep].count", "must be at least 1"));
    }
    Ok(geometric_schedule(start, ratio, count))
}

fn build_model(raw: &RawModel) -> Result<ModelSpec, ConfigError> {
    let tag = ModelTag::parse(&raw.kind).ok_or_else(|| {
        let names: Vec<&str> = ModelTag::ALL.iter().map(|t| t.name()).collect();
        keyed(
            "[model].kind",
            format!(
                "unknown model kind {:?}; expected one of {}",
                raw.kind,
                names.join(", ")
            ),
        )
    })?;
    let allowed: &[&str] = match tag {
        ModelTag::Robin => &["domain", "nodes"],
        ModelTag::Conformal => &["dimension", "nodes", "profile", "amplitude"],
        ModelTag::DirichletHole => &["nodes", "center", "radius_scale"],
        ModelTag::PseudoSymbol => &["lattice", "mask", "mask_start", "mask_len", "symbol"],
    };
    let present = [
        ("nodes", raw.nodes.is_some()),
        ("domain", raw.domain.is_some()),
        ("dimension", raw.dimension.is_some()),
        ("profile", raw.profile.is_some()),
        ("amplitude", raw.amplitude.is_some()),
        ("center", raw.center.is_some()),
        ("radius_scale", raw.radius_scale.is_some()),
        ("lattice", raw.lattice.is_some()),
        ("mask", raw.mask.is_some()),
        ("mask_start", raw.mask_start.is_some()),
        ("mask_len", raw.mask_len.is_some()),
        ("symbol", raw.symbol.is_some()),
    ];
    if let Some((key, _)) = present.iter().find(|(k, set)| *set && !allowed.contains(k)) {
        return Err(keyed(
            &format!("[model].{key}"),
            format!("unknown key for model kind {tag}"),
        ));
    }
    let mut spec = ModelSpec::default_for(tag);
    spec.mode_index = raw.mode.unwrap_or(0);
    match &mut spec.kind {
        ModelKind::Robin(RobinSpec { domain, nodes }) => {
            if let Some(d) = &raw.domain {
                *domain = match d.as_str() {
                    "interval" => RobinDomain::Interval,
                    "square" => RobinDomain::Square,
                    other => {
                        return Err(keyed(
                            "[model].domain",
                            format!("expected \"interval\" or \"square\", got {other:?}"),
                        ))
                    }
                };
            }
            if let Some(n) = raw.nodes {
                *nodes = n;
            } else if *domain == RobinDomain::Square {
                *nodes = 33;
            }
        }
        ModelKind::Conformal(ConformalSpec {
            dimension,
            nodes,
            profile,
        }) => {
            if let Some(d) = raw.dimension {
                *dimension = d;
            }
            if let Some(n) = raw.nodes {
                *nodes = n;
            } else if *dimension == 2 {
                *nodes = 65;
            }
            let shape = raw
                .profile
                .as_deref()
                .unwrap_or(if *dimension == 2 { "odd-sine" } else { "constant" });
            let a = raw.amplitude.unwrap_or(1.0);
            if !a.is_finite() {
                return Err(keyed("[model].amplitude", "must be finite"));
            }
            *profile = match shape {
                "constant" => ConformalProfile::Constant { value: a },
                "cosine-bump" => ConformalProfile::CosineBump { amplitude: a },
                "odd-sine" => ConformalProfile::OddSine { amplitude: a },
                other => {
                    return Err(keyed(
                        "[model].profile",
                        format!("expected constant, cosine-bump or odd-sine, got {other:?}"),
                    ))
                }
            };
        }
        ModelKind::DirichletHole(HoleSpec {
            nodes,
            center,
            radius_scale,
        }) => {
            if let Some(n) = raw.nodes {
                *nodes = n;
            }
            if let Some(c) = raw.center {
                *center = c;
            }
            if let Some(r) = raw.radius_scale {
                if !(r > 0.0 && r.is_finite()) {
                    return Err(keyed("[model].radius_scale", format!("must be positive, got {r}")));
                }
                *radius_scale = r;
            }
        }
        ModelKind::PseudoSymbol(PseudoSpec { lattice, mask, symbol }) => {
            if let Some(m) = raw.lattice {
                *lattice = m;
            }
            *mask = match raw.mask.as_deref().unwrap_or("left-half") {
                "left-half" => {
                    if raw.mask_start.is_some() || raw.mask_len.is_some() {
                        return Err(keyed("[model].mask_start", "only valid with mask = \"range\""));
                    }
                    PseudoMask::LeftHalf
                }
                "range" => PseudoMask::Range {
                    start: raw.mask_start.unwrap_or(0),
                    len: raw
                        .mask_len
                        .ok_or_else(|| keyed("[model].mask_len", "required when mask = \"range\""))?,
                },
                other => {
                    return Err(keyed(
                        "[model].mask",
                        format!("expected \"left-half\" or \"range\", got {other:?}"),
                    ))
                }
            };
            if let Some(s) = &raw.symbol {
                *symbol = match s.as_str() {
                    "fractional" => SymbolKind::Fractional,
                    "frozen" => SymbolKind::Frozen,
                    other => {
                        return Err(keyed(
                            "[model].symbol",
                            format!("expected \"fractional\" or \"frozen\", got {other:?}"),
                        ))
                    }
                };
            }
        }
    }
    Ok(spec)
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of `key = …` inside `[section]`, for a key written `[section].key`.
fn locate_key(text: &str, key: &str) -> Option<usize> {
    let (section, name) = key.strip_prefix('[')?.split_once("].")?;
    let mut current = String::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if let Some(s) = t.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            current = s.trim().to_string();
        } else if current == section {
            if let Some((k, _)) = t.split_once('=') {
                if k.trim() == name {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn locates_keys_by_section() {
        let text = "[model]\nkind = \"robin\"\n\n[sweep]\nratio = 0\n";
        assert_eq!(locate_key(text, "[sweep].ratio"), Some(5));
        assert_eq!(locate_key(text, "[model].kind"), Some(2));
        assert_eq!(locate_key(text, "[model].ratio"), None);
    }
}
