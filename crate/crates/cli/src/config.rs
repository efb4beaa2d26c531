//! Declarative experiment configuration: a flat sectioned key/value format.
//!
//! ```text
//! experiment = exponent-fit
//! gamma = auto
//!
//! [model]
//! n = 1
//! beta = 1.0
//! mu = 0.0
//! alpha = 0.5
//! prefactor = 1.0
//! j_re = 1.0
//! j_im = 0.0
//!
//! [kernel]
//! cutoff = smooth
//!
//! [grid]
//! r_min = 10
//! r_max = 10000
//! points = 12
//!
//! [output]
//! format = csv
//! path = out
//! ```
//!
//! Parsing is strict: unknown sections or keys are errors, and validation
//! reports every problem found, not just the first.

use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    ScaleSweep,
    ExponentFit,
    Limit2pt,
    ClusterCheck,
    SharpVsSmooth,
    CommutatorBound,
    KmsCheck,
    Slowdown,
    DynamicExponent,
    QuasifreeCheck,
}

impl Experiment {
    pub const ALL: [(&'static str, Experiment); 10] = [
        ("scale-sweep", Experiment::ScaleSweep),
        ("exponent-fit", Experiment::ExponentFit),
        ("limit-2pt", Experiment::Limit2pt),
        ("cluster-check", Experiment::ClusterCheck),
        ("sharp-vs-smooth", Experiment::SharpVsSmooth),
        ("commutator-bound", Experiment::CommutatorBound),
        ("kms-check", Experiment::KmsCheck),
        ("slowdown", Experiment::Slowdown),
        ("dynamic-exponent", Experiment::DynamicExponent),
        ("quasifree-check", Experiment::QuasifreeCheck),
    ];

    pub fn parse(s: &str) -> Option<Experiment> {
        Self::ALL.iter().find(|(n, _)| *n == s).map(|(_, e)| *e)
    }

    pub fn name(&self) -> &'static str {
        Self::ALL.iter().find(|(_, e)| e == self).unwrap().0
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaSpec {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelConfig {
    pub n: usize,
    pub beta: f64,
    pub mu: f64,
    pub alpha: f64,
    pub prefactor: f64,
    pub j_re: f64,
    pub j_im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "form")]
pub enum WtConfig {
    Gaussian {
        order: usize,
        sigma: f64,
        amplitude: f64,
    },
    Critical {
        alpha: f64,
        constant: f64,
        f_amplitude: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelCutoff {
    Smooth,
    Sharp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelProfile {
    Mollifier,
    Cosine,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelConfig {
    pub cutoff: KernelCutoff,
    pub profile: KernelProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridConfig {
    pub r_min: f64,
    pub r_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeometryConfig {
    pub y: f64,
    pub y_max: Option<f64>,
    pub y_points: usize,
    pub t0: f64,
    pub t1: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig {
            y: 0.0,
            y_max: None,
            y_points: 1,
            t0: 0.0,
            t1: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommProfileKind {
    Gaussian,
    Indicator,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommutatorConfig {
    pub gamma_a: f64,
    pub gamma_b: f64,
    pub profile: CommProfileKind,
    pub sigma: f64,
    pub radius: f64,
    pub amplitude: f64,
}

impl Default for CommutatorConfig {
    fn default() -> Self {
        CommutatorConfig {
            gamma_a: 1.0,
            gamma_b: 1.0,
            profile: CommProfileKind::Gaussian,
            sigma: 1.0,
            radius: 0.5,
            amplitude: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputConfig {
    pub format: OutputFormat,
    pub path: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            format: OutputFormat::Csv,
            path: "out".into(),
        }
    }
}

/// Fully parsed experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub gamma: GammaSpec,
    pub seed: u64,
    pub model: Option<ModelConfig>,
    pub wt: Option<WtConfig>,
    pub kernel: KernelConfig,
    pub grid: GridConfig,
    pub geometry: GeometryConfig,
    pub commutator: CommutatorConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

fn err(line: Option<usize>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        message: message.into(),
    }
}

struct RawConfig {
    // (section, key) -> (line, value); top-level keys use section ""
    entries: BTreeMap<(String, String), (usize, String)>,
}

fn lex(text: &str) -> Result<RawConfig, Vec<ConfigError>> {
    let mut entries = BTreeMap::new();
    let mut errors = Vec::new();
    let mut section = String::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(p) => &raw_line[..p],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            match name.strip_suffix(']') {
                Some(name) => section = name.trim().to_string(),
                None => errors.push(err(Some(line_no), "unterminated section header")),
            }
            continue;
        }
        match line.split_once('=') {
            Some((k, v)) => {
                let key = k.trim().to_string();
                let value = v.trim().to_string();
                if key.is_empty() {
                    errors.push(err(Some(line_no), "empty key"));
                    continue;
                }
                if entries
                    .insert((section.clone(), key.clone()), (line_no, value))
                    .is_some()
                {
                    errors.push(err(
                        Some(line_no),
                        format!("duplicate key '{key}' in section '[{section}]'"),
                    ));
                }
            }
            None => errors.push(err(
                Some(line_no),
                format!("expected 'key = value', got '{line}'"),
            )),
        }
    }
    if errors.is_empty() {
        Ok(RawConfig { entries })
    } else {
        Err(errors)
    }
}

struct Reader<'a> {
    raw: &'a RawConfig,
    errors: Vec<ConfigError>,
    consumed: Vec<(String, String)>,
}

impl<'a> Reader<'a> {
    fn get(&mut self, section: &str, key: &str) -> Option<(usize, String)> {
        self.consumed.push((section.to_string(), key.to_string()));
        self.raw
            .entries
            .get(&(section.to_string(), key.to_string()))
            .cloned()
    }

    fn f64_opt(&mut self, section: &str, key: &str) -> Option<f64> {
        let (line, v) = self.get(section, key)?;
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Some(x),
            _ => {
                self.errors.push(err(
                    Some(line),
                    format!("key '{key}': expected a finite number, got '{v}'"),
                ));
                None
            }
        }
    }

    fn f64_or(&mut self, section: &str, key: &str, default: f64) -> f64 {
        self.f64_opt(section, key).unwrap_or(default)
    }

    fn usize_opt(&mut self, section: &str, key: &str) -> Option<usize> {
        let (line, v) = self.get(section, key)?;
        match v.parse::<usize>() {
            Ok(x) => Some(x),
            _ => {
                self.errors.push(err(
                    Some(line),
                    format!("key '{key}': expected a non-negative integer, got '{v}'"),
                ));
                None
            }
        }
    }

    fn string_opt(&mut self, section: &str, key: &str) -> Option<(usize, String)> {
        self.get(section, key)
    }

    fn require(&mut self, section: &str, key: &str) {
        if !self
            .raw
            .entries
            .contains_key(&(section.to_string(), key.to_string()))
        {
            self.errors.push(err(
                None,
                format!("missing required key '{key}' in section '[{section}]'"),
            ));
        }
    }
}

/// Parses and validates a config, reporting every error found.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, Vec<ConfigError>> {
    let raw = lex(text)?;
    let mut r = Reader {
        raw: &raw,
        errors: Vec::new(),
        consumed: Vec::new(),
    };

    // experiment
    let experiment = match r.string_opt("", "experiment") {
        Some((line, v)) => match Experiment::parse(&v) {
            Some(e) => Some(e),
            None => {
                r.errors.push(err(
                    Some(line),
                    format!(
                        "unknown experiment '{v}'; expected one of: {}",
                        Experiment::ALL.map(|(n, _)| n).join(", ")
                    ),
                ));
                None
            }
        },
        None => {
            r.errors
                .push(err(None, "missing required top-level key 'experiment'"));
            None
        }
    };

    let gamma = match r.string_opt("", "gamma") {
        None => GammaSpec::Auto,
        Some((_, v)) if v == "auto" => GammaSpec::Auto,
        Some((line, v)) => match v.parse::<f64>() {
            Ok(x) if x.is_finite() => GammaSpec::Fixed(x),
            _ => {
                r.errors.push(err(
                    Some(line),
                    format!("key 'gamma': expected a number or 'auto', got '{v}'"),
                ));
                GammaSpec::Auto
            }
        },
    };

    let seed = match r.string_opt("", "seed") {
        None => 0,
        Some((line, v)) => match v.parse::<u64>() {
            Ok(x) => x,
            _ => {
                r.errors.push(err(
                    Some(line),
                    format!("key 'seed': expected an unsigned integer, got '{v}'"),
                ));
                0
            }
        },
    };

    // model (optional; required per experiment below)
    let model_present = raw.entries.keys().any(|(s, _)| s == "model");
    let model = if model_present {
        r.require("model", "n");
        r.require("model", "beta");
        r.require("model", "alpha");
        let n = r.usize_opt("model", "n").unwrap_or(1);
        let beta = r.f64_or("model", "beta", 1.0);
        let mu = r.f64_or("model", "mu", 0.0);
        let alpha = r.f64_or("model", "alpha", 1.0);
        let prefactor = r.f64_or("model", "prefactor", 1.0);
        let j_re = r.f64_or("model", "j_re", 1.0);
        let j_im = r.f64_or("model", "j_im", 0.0);
        if !(1..=3).contains(&n) {
            r.errors
                .push(err(None, format!("model.n must be 1, 2 or 3, got {n}")));
        }
        if beta <= 0.0 {
            r.errors.push(err(
                None,
                format!("model.beta must be positive, got {beta}"),
            ));
        }
        if alpha <= 0.0 {
            r.errors.push(err(
                None,
                format!("model.alpha must be positive, got {alpha}"),
            ));
        }
        if prefactor <= 0.0 {
            r.errors.push(err(
                None,
                format!("model.prefactor must be positive, got {prefactor}"),
            ));
        }
        if mu > 0.0 {
            r.errors.push(err(
                None,
                format!("model.mu must be ≤ 0 for a gapless pure-power branch, got {mu}"),
            ));
        }
        Some(ModelConfig {
            n,
            beta,
            mu,
            alpha,
            prefactor,
            j_re,
            j_im,
        })
    } else {
        None
    };

    // wt (optional)
    let wt_present = raw.entries.keys().any(|(s, _)| s == "wt");
    let wt = if wt_present {
        match r.string_opt("wt", "form") {
            Some((line, form)) => match form.as_str() {
                "gaussian" => {
                    let order = r.usize_opt("wt", "order").unwrap_or(2);
                    let sigma = r.f64_or("wt", "sigma", 1.0);
                    let amplitude = r.f64_or("wt", "amplitude", 1.0);
                    if !(2..=4).contains(&order) {
                        r.errors
                            .push(err(None, format!("wt.order must be 2..=4, got {order}")));
                    }
                    if sigma <= 0.0 {
                        r.errors
                            .push(err(None, format!("wt.sigma must be positive, got {sigma}")));
                    }
                    Some(WtConfig::Gaussian {
                        order,
                        sigma,
                        amplitude,
                    })
                }
                "critical" => {
                    r.require("wt", "alpha");
                    let alpha = r.f64_or("wt", "alpha", 0.5);
                    let constant = r.f64_or("wt", "constant", 1.0);
                    let f_amplitude = r.f64_or("wt", "f_amplitude", 0.0);
                    if alpha <= 0.0 {
                        r.errors
                            .push(err(None, format!("wt.alpha must be positive, got {alpha}")));
                    }
                    Some(WtConfig::Critical {
                        alpha,
                        constant,
                        f_amplitude,
                    })
                }
                other => {
                    r.errors.push(err(
                        Some(line),
                        format!("wt.form must be 'gaussian' or 'critical', got '{other}'"),
                    ));
                    None
                }
            },
            None => {
                r.errors.push(err(None, "section [wt] requires key 'form'"));
                None
            }
        }
    } else {
        None
    };

    // kernel
    let cutoff = match r.string_opt("kernel", "cutoff") {
        None => KernelCutoff::Smooth,
        Some((_, v)) if v == "smooth" => KernelCutoff::Smooth,
        Some((_, v)) if v == "sharp" => KernelCutoff::Sharp,
        Some((line, v)) => {
            r.errors.push(err(
                Some(line),
                format!("kernel.cutoff must be 'smooth' or 'sharp', got '{v}'"),
            ));
            KernelCutoff::Smooth
        }
    };
    let profile = match r.string_opt("kernel", "profile") {
        None => KernelProfile::Mollifier,
        Some((_, v)) if v == "mollifier" => KernelProfile::Mollifier,
        Some((_, v)) if v == "cosine" => KernelProfile::Cosine,
        Some((line, v)) => {
            r.errors.push(err(
                Some(line),
                format!("kernel.profile must be 'mollifier' or 'cosine', got '{v}'"),
            ));
            KernelProfile::Mollifier
        }
    };
    let kernel = KernelConfig { cutoff, profile };

    // grid
    let grid = {
        let r_min = r.f64_or("grid", "r_min", 10.0);
        let r_max = r.f64_or("grid", "r_max", 1e4);
        let points = r.usize_opt("grid", "points").unwrap_or(12);
        if r_min <= 0.0 {
            r.errors.push(err(
                None,
                format!("grid.r_min must be positive, got {r_min}"),
            ));
        }
        if r_min >= r_max {
            r.errors.push(err(
                None,
                format!("grid.r_min must be below grid.r_max, got {r_min} ≥ {r_max}"),
            ));
        }
        if points < 4 {
            r.errors
                .push(err(None, format!("grid.points must be ≥ 4, got {points}")));
        }
        GridConfig {
            r_min,
            r_max,
            points,
        }
    };

    // geometry
    let geometry = {
        let mut g = GeometryConfig {
            y: r.f64_or("geometry", "y", 0.0),
            y_max: r.f64_opt("geometry", "y_max"),
            y_points: r.usize_opt("geometry", "y_points").unwrap_or(1),
            t0: r.f64_or("geometry", "t0", 0.0),
            t1: r.f64_or("geometry", "t1", 2.0),
        };
        if g.t1 <= g.t0 {
            r.errors.push(err(
                None,
                format!("geometry: t0 < t1 required, got [{}, {}]", g.t0, g.t1),
            ));
        }
        if let Some(ym) = g.y_max {
            if ym <= g.y {
                r.errors.push(err(
                    None,
                    format!("geometry: y < y_max required, got [{}, {ym}]", g.y),
                ));
            }
            if g.y_points < 2 {
                r.errors.push(err(
                    None,
                    "geometry: y_points ≥ 2 required with y_max".to_string(),
                ));
            }
        } else {
            g.y_points = 1;
        }
        g
    };

    // commutator
    let commutator = {
        let mut c = CommutatorConfig {
            gamma_a: r.f64_or("commutator", "gamma_a", 1.0),
            gamma_b: r.f64_or("commutator", "gamma_b", 1.0),
            sigma: r.f64_or("commutator", "sigma", 1.0),
            radius: r.f64_or("commutator", "radius", 0.5),
            amplitude: r.f64_or("commutator", "amplitude", 1.0),
            profile: CommProfileKind::Gaussian,
        };
        match r.string_opt("commutator", "profile") {
            None => {}
            Some((_, v)) if v == "gaussian" => c.profile = CommProfileKind::Gaussian,
            Some((_, v)) if v == "indicator" => c.profile = CommProfileKind::Indicator,
            Some((line, v)) => r.errors.push(err(
                Some(line),
                format!("commutator.profile must be 'gaussian' or 'indicator', got '{v}'"),
            )),
        }
        if c.sigma <= 0.0 || c.radius <= 0.0 {
            r.errors.push(err(
                None,
                "commutator: sigma and radius must be positive".to_string(),
            ));
        }
        c
    };

    // output
    let output = {
        let format = match r.string_opt("output", "format") {
            None => OutputFormat::Csv,
            Some((_, v)) if v == "csv" => OutputFormat::Csv,
            Some((_, v)) if v == "json" => OutputFormat::Json,
            Some((line, v)) => {
                r.errors.push(err(
                    Some(line),
                    format!("output.format must be 'csv' or 'json', got '{v}'"),
                ));
                OutputFormat::Csv
            }
        };
        let path = r
            .string_opt("output", "path")
            .map(|(_, v)| v)
            .unwrap_or_else(|| "out".to_string());
        OutputConfig { format, path }
    };

    // unknown keys are errors, not warnings
    for ((section, key), (line, _)) in &raw.entries {
        if !r.consumed.iter().any(|(s, k)| s == section && k == key) {
            r.errors.push(err(
                Some(*line),
                format!("unknown key '{key}' in section '[{section}]'"),
            ));
        }
    }

    // per-experiment requirements
    if let Some(exp) = experiment {
        let needs_model = matches!(
            exp,
            Experiment::ScaleSweep
                | Experiment::ExponentFit
                | Experiment::KmsCheck
                | Experiment::Slowdown
                | Experiment::DynamicExponent
        );
        if needs_model && model.is_none() {
            r.errors.push(err(
                None,
                format!("experiment '{exp}' requires a [model] section"),
            ));
        }
        if exp == Experiment::DynamicExponent {
            if let Some(m) = &model {
                if m.mu != 0.0 {
                    r.errors.push(err(
                        None,
                        "dynamic-exponent requires a critical model (mu = 0)".to_string(),
                    ));
                }
            }
        }
        let needs_wt = matches!(
            exp,
            Experiment::Limit2pt | Experiment::ClusterCheck | Experiment::SharpVsSmooth
        );
        if needs_wt && wt.is_none() {
            r.errors.push(err(
                None,
                format!("experiment '{exp}' requires a [wt] section"),
            ));
        }
        match (&exp, &wt) {
            (Experiment::Limit2pt, Some(WtConfig::Gaussian { .. })) => r.errors.push(err(
                None,
                "limit-2pt requires [wt] form = critical".to_string(),
            )),
            (
                Experiment::ClusterCheck | Experiment::SharpVsSmooth,
                Some(WtConfig::Critical { .. }),
            ) => r
                .errors
                .push(err(None, format!("{exp} requires [wt] form = gaussian"))),
            _ => {}
        }
    }

    match (experiment, r.errors.is_empty()) {
        (Some(experiment), true) => Ok(ExperimentConfig {
            experiment,
            gamma,
            seed,
            model,
            wt,
            kernel,
            grid,
            geometry,
            commutator,
            output,
        }),
        _ => Err(r.errors),
    }
}

/// Serializes a config back to the text format; `parse_config(emit_config(c))`
/// reproduces `c`.
pub fn emit_config(c: &ExperimentConfig) -> String {
    let mut s = String::new();
    s.push_str(&format!("experiment = {}\n", c.experiment));
    match c.gamma {
        GammaSpec::Auto => s.push_str("gamma = auto\n"),
        GammaSpec::Fixed(g) => s.push_str(&format!("gamma = {g}\n")),
    }
    s.push_str(&format!("seed = {}\n", c.seed));
    if let Some(m) = &c.model {
        s.push_str(&format!(
            "\n[model]\nn = {}\nbeta = {}\nmu = {}\nalpha = {}\nprefactor = {}\nj_re = {}\nj_im = {}\n",
            m.n, m.beta, m.mu, m.alpha, m.prefactor, m.j_re, m.j_im
        ));
    }
    if let Some(w) = &c.wt {
        match w {
            WtConfig::Gaussian {
                order,
                sigma,
                amplitude,
            } => s.push_str(&format!(
                "\n[wt]\nform = gaussian\norder = {order}\nsigma = {sigma}\namplitude = {amplitude}\n"
            )),
            WtConfig::Critical {
                alpha,
                constant,
                f_amplitude,
            } => s.push_str(&format!(
                "\n[wt]\nform = critical\nalpha = {alpha}\nconstant = {constant}\nf_amplitude = {f_amplitude}\n"
            )),
        }
    }
    s.push_str(&format!(
        "\n[kernel]\ncutoff = {}\nprofile = {}\n",
        match c.kernel.cutoff {
            KernelCutoff::Smooth => "smooth",
            KernelCutoff::Sharp => "sharp",
        },
        match c.kernel.profile {
            KernelProfile::Mollifier => "mollifier",
            KernelProfile::Cosine => "cosine",
        }
    ));
    s.push_str(&format!(
        "\n[grid]\nr_min = {}\nr_max = {}\npoints = {}\n",
        c.grid.r_min, c.grid.r_max, c.grid.points
    ));
    s.push_str(&format!(
        "\n[geometry]\ny = {}\ny_points = {}\nt0 = {}\nt1 = {}\n",
        c.geometry.y, c.geometry.y_points, c.geometry.t0, c.geometry.t1
    ));
    if let Some(ym) = c.geometry.y_max {
        s.push_str(&format!("y_max = {ym}\n"));
    }
    s.push_str(&format!(
        "\n[commutator]\ngamma_a = {}\ngamma_b = {}\nprofile = {}\nsigma = {}\nradius = {}\namplitude = {}\n",
        c.commutator.gamma_a,
        c.commutator.gamma_b,
        match c.commutator.profile {
            CommProfileKind::Gaussian => "gaussian",
            CommProfileKind::Indicator => "indicator",
        },
        c.commutator.sigma,
        c.commutator.radius,
        c.commutator.amplitude
    ));
    s.push_str(&format!(
        "\n[output]\nformat = {}\npath = {}\n",
        match c.output.format {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        },
        c.output.path
    ));
    s
}
