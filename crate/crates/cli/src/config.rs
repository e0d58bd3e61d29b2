//! Run configuration: a flat `key = value` file overlaid by command-line flags.
//!
//! ```text
//! structure = heisenberg_cc
//! res = 81
//! tau = 0.4, 0.2, 0.1
//! annulus = 1, 2, 4          # repeatable: a, b, p
//! annulus = 1, 4, 4
//! radii = 0.4..4:10:log      # list, or start..end[:count[:log]]
//! ```

use std::path::{Path, PathBuf};

use carnot_core::capacity::AnnulusSpec;
use carnot_core::metric::{GrowthProfile, DEFAULT_TAU_SCHEDULE};
use carnot_core::sr::{build_builtin, load_structure, SubRiemannianStructure};
use carnot_core::GridChart;

use crate::error::{config, CliError, CliResult};

pub const BUILTINS: [&str; 3] = ["euclidean", "heisenberg_cc", "heisenberg_riemannian"];
pub const KEYS: [&str; 13] = [
    "structure",
    "dim",
    "chart",
    "res",
    "origin",
    "tau",
    "radii",
    "annulus",
    "growth-file",
    "model",
    "m",
    "total-volume",
    "out",
];
const DEFAULT_RADII_COUNT: usize = 11;

#[derive(Debug, Clone, PartialEq)]
pub enum StructureSource {
    /// Built-in name with an optional topological dimension.
    Builtin {
        name: String,
        dim: Option<usize>,
    },
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GrowthModel {
    Power { c: f64, k: f64 },
    Exponential { c: f64, beta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Annulus {
    pub a: f64,
    pub b: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub structure: Option<StructureSource>,
    /// `(lower, upper)` per axis; derived from the radii when absent.
    pub chart: Option<Vec<(f64, f64)>>,
    pub res: Option<Vec<usize>>,
    pub origin: Option<Vec<f64>>,
    pub tau: Vec<f64>,
    pub radii: Vec<f64>,
    pub annuli: Vec<Annulus>,
    pub growth_file: Option<PathBuf>,
    pub model: Option<GrowthModel>,
    pub m: Option<usize>,
    pub total_volume: Option<f64>,
    pub out: PathBuf,
}

/// `(key, value, line)` entries of a config file; line 0 marks a flag.
pub type Entries = Vec<(String, String, usize)>;

pub fn read_config_file(path: &Path) -> CliResult<Entries> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Config(format!("cannot read config file {}: {e}", path.display()))
    })?;
    parse_config_text(&text, path)
}

pub fn parse_config_text(text: &str, path: &Path) -> CliResult<Entries> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::ConfigLine {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("expected `key = value`, found `{line}`"),
            });
        };
        let key = k.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::ConfigLine {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("unknown key `{}`", k.trim()),
            });
        }
        out.push((key, v.trim().to_string(), i + 1));
    }
    Ok(out)
}

/// File entries with every key that appears among the flags replaced by the flag values.
pub fn merge(file: Entries, flags: Entries) -> Entries {
    let mut merged: Entries = file
        .into_iter()
        .filter(|(k, _, _)| !flags.iter().any(|(f, _, _)| f == k))
        .collect();
    merged.extend(flags);
    merged
}

fn floats(text: &str, what: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Config(format!("{what}: `{t}` is not a finite number")))
        })
        .collect()
}

fn usizes(text: &str, what: &str) -> CliResult<Vec<usize>> {
    text.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<usize>().map_err(|_| {
                CliError::Config(format!("{what}: `{t}` is not a nonnegative integer"))
            })
        })
        .collect()
}

fn single<T: std::str::FromStr>(text: &str, what: &str) -> CliResult<T> {
    text.trim()
        .parse::<T>()
        .map_err(|_| CliError::Config(format!("{what}: cannot parse `{}`", text.trim())))
}

/// `r1, r2, …` or `start..end[:count[:log]]`.
pub fn parse_radii(text: &str) -> CliResult<Vec<f64>> {
    let radii = if let Some((start, rest)) = text.split_once("..") {
        let mut parts = rest.split(':');
        let end = single::<f64>(parts.next().unwrap_or(""), "radii end")?;
        let start = single::<f64>(start, "radii start")?;
        let count = match parts.next() {
            Some(c) => single::<usize>(c, "radii count")?,
            None => DEFAULT_RADII_COUNT,
        };
        let log = match parts.next() {
            None => false,
            Some("log") => true,
            Some(other) => {
                return config(format!("radii: unknown spacing `{other}` (expected `log`)"))
            }
        };
        if count < 2 {
            return config("radii: a range needs at least two samples");
        }
        if !(start > 0.0 && end > start) {
            return config(format!(
                "radii: range needs 0 < start < end, got {start}..{end}"
            ));
        }
        (0..count)
            .map(|i| {
                let t = i as f64 / (count - 1) as f64;
                if log {
                    start * (end / start).powf(t)
                } else {
                    start + (end - start) * t
                }
            })
            .collect()
    } else {
        floats(text, "radii")?
    };
    if radii.is_empty() || radii[0] <= 0.0 || radii.windows(2).any(|w| !(w[1] > w[0])) {
        return config("radii must be positive and strictly increasing");
    }
    Ok(radii)
}

/// `H` (all axes `[−H, H]`), `lo:hi` (all axes) or `lo:hi, lo:hi, …`.
pub fn parse_chart(text: &str) -> CliResult<Vec<(f64, f64)>> {
    let mut axes = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        let (lo, hi) = match part.split_once(':') {
            Some((lo, hi)) => (single::<f64>(lo, "chart")?, single::<f64>(hi, "chart")?),
            None => {
                let h = single::<f64>(part, "chart")?;
                (-h, h)
            }
        };
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return config(format!(
                "chart: axis bounds `{part}` must satisfy lower < upper"
            ));
        }
        axes.push((lo, hi));
    }
    Ok(axes)
}

fn parse_model(text: &str) -> CliResult<GrowthModel> {
    let Some((kind, params)) = text.split_once(':') else {
        return config(format!(
            "model: expected `power:c,k` or `exponential:c,beta`, got `{text}`"
        ));
    };
    let v = floats(params, "model")?;
    if v.len() != 2 {
        return config("model: expected two parameters");
    }
    match kind.trim() {
        "power" => Ok(GrowthModel::Power { c: v[0], k: v[1] }),
        "exponential" => Ok(GrowthModel::Exponential {
            c: v[0],
            beta: v[1],
        }),
        other => config(format!("model: unknown kind `{other}`")),
    }
}

fn parse_annulus(text: &str) -> CliResult<Annulus> {
    let v = floats(text, "annulus")?;
    let [a, b, p] = v[..] else {
        return config(format!("annulus: expected `a, b, p`, got `{text}`"));
    };
    if !(a > 0.0 && b > a) {
        return config(format!(
            "annulus: radii must satisfy 0 < a < b, got a={a}, b={b}"
        ));
    }
    if !(p > 1.0) {
        return config(format!("annulus: the exponent must exceed 1, got p={p}"));
    }
    Ok(Annulus { a, b, p })
}

impl RunConfig {
    pub fn from_entries(entries: &Entries) -> CliResult<Self> {
        let mut cfg = RunConfig {
            structure: None,
            chart: None,
            res: None,
            origin: None,
            tau: DEFAULT_TAU_SCHEDULE.to_vec(),
            radii: Vec::new(),
            annuli: Vec::new(),
            growth_file: None,
            model: None,
            m: None,
            total_volume: None,
            out: PathBuf::from("."),
        };
        let mut structure = None;
        let mut dim = None;
        for (key, value, _) in entries {
            match key.as_str() {
                "structure" => structure = Some(value.clone()),
                "dim" => dim = Some(single::<usize>(value, "dim")?),
                "chart" => cfg.chart = Some(parse_chart(value)?),
                "res" => cfg.res = Some(usizes(value, "res")?),
                "origin" => cfg.origin = Some(floats(value, "origin")?),
                "tau" => cfg.tau = floats(value, "tau")?,
                "radii" => cfg.radii = parse_radii(value)?,
                "annulus" => cfg.annuli.push(parse_annulus(value)?),
                "growth-file" => cfg.growth_file = Some(PathBuf::from(value)),
                "model" => cfg.model = Some(parse_model(value)?),
                "m" => cfg.m = Some(single::<usize>(value, "m")?),
                "total-volume" => cfg.total_volume = Some(single::<f64>(value, "total-volume")?),
                "out" => cfg.out = PathBuf::from(value),
                other => return config(format!("unknown key `{other}`")),
            }
        }
        cfg.structure = match structure {
            None => {
                if dim.is_some() {
                    return config("`dim` needs a built-in `structure`");
                }
                None
            }
            Some(s) if BUILTINS.contains(&s.as_str()) => {
                Some(StructureSource::Builtin { name: s, dim })
            }
            Some(s) => {
                if dim.is_some() {
                    return config("`dim` applies only to built-in structures");
                }
                let path = PathBuf::from(&s);
                if !path.is_file() {
                    return config(format!(
                        "structure `{s}` is neither a built-in ({}) nor an existing file",
                        BUILTINS.join(", ")
                    ));
                }
                Some(StructureSource::File(path))
            }
        };
        if let Some(p) = &cfg.growth_file {
            if !p.is_file() {
                return config(format!("growth file {} does not exist", p.display()));
            }
        }
        if cfg.tau.len() < 2
            || cfg.tau.iter().any(|t| !(*t > 0.0))
            || cfg.tau.windows(2).any(|w| !(w[1] < w[0]))
        {
            return config("tau: need at least two positive, strictly decreasing values");
        }
        if let Some(res) = &cfg.res {
            if res.iter().any(|&r| r < 3) {
                return config("res: every axis needs at least 3 nodes");
            }
        }
        if cfg.m == Some(0) {
            return config("m must be positive");
        }
        Ok(cfg)
    }

    pub fn load_structure(&self) -> CliResult<SubRiemannianStructure> {
        match &self.structure {
            None => config("no structure given (use --structure)"),
            Some(StructureSource::Builtin { name, dim }) => {
                let params = match (name.as_str(), dim) {
                    (_, None) => vec![],
                    ("euclidean", Some(n)) => vec![*n],
                    (_, Some(n)) => {
                        if *n < 3 || n % 2 == 0 {
                            return config(format!(
                                "{name}: dimension must be odd and at least 3, got {n}"
                            ));
                        }
                        vec![(n - 1) / 2]
                    }
                };
                Ok(build_builtin(name, &params)?)
            }
            Some(StructureSource::File(path)) => Ok(load_structure(path)?),
        }
    }

    pub fn origin_for(&self, n: usize) -> CliResult<Vec<f64>> {
        match &self.origin {
            None => Ok(vec![0.0; n]),
            Some(o) if o.len() == n => Ok(o.clone()),
            Some(o) => config(format!(
                "origin has {} coordinates, structure has {n}",
                o.len()
            )),
        }
    }

    fn resolution_for(&self, n: usize) -> CliResult<Vec<usize>> {
        match &self.res {
            None => Ok(vec![if n <= 2 { 257 } else { 65 }; n]),
            Some(r) if r.len() == 1 => Ok(vec![r[0]; n]),
            Some(r) if r.len() == n => Ok(r.clone()),
            Some(r) => config(format!(
                "res has {} entries, structure has {n} coordinates",
                r.len()
            )),
        }
    }

    /// Explicit chart, or one sized so the ball of radius `extent` about the
    /// origin stays two cells inside every face.
    pub fn chart_for(&self, s: &SubRiemannianStructure, extent: f64) -> CliResult<GridChart> {
        let n = s.n();
        let res = self.resolution_for(n)?;
        if let Some(axes) = &self.chart {
            let axes = match axes.len() {
                1 => vec![axes[0]; n],
                k if k == n => axes.clone(),
                k => return config(format!("chart has {k} axes, structure has {n} coordinates")),
            };
            let (lo, hi) = axes.into_iter().unzip();
            return Ok(GridChart::new(lo, hi, res)?);
        }
        let half = self.auto_half_widths(extent)?;
        let origin = self.origin_for(n)?;
        // half = base + 2h with h = 2·half/(res − 1)
        let widths: Vec<f64> = half
            .iter()
            .zip(&res)
            .map(|(b, &r)| {
                let shrink = 1.0 - 4.0 / (r as f64 - 1.0);
                if shrink > 0.1 {
                    b / shrink
                } else {
                    2.0 * b
                }
            })
            .collect();
        Ok(GridChart::centered(&origin, &widths, res)?)
    }

    fn auto_half_widths(&self, extent: f64) -> CliResult<Vec<f64>> {
        match &self.structure {
            Some(StructureSource::Builtin { name, dim }) => {
                let n = dim.unwrap_or(if name == "euclidean" { 2 } else { 3 });
                Ok(match name.as_str() {
                    // vertical reach of a Carnot ball of radius R is R²/(4π)
                    "heisenberg_cc" => {
                        let mut h = vec![1.05 * extent; n];
                        h[n - 1] = 2.5 * extent * extent / (4.0 * std::f64::consts::PI);
                        h
                    }
                    _ => vec![1.1 * extent; n],
                })
            }
            _ => config("structures loaded from a file need an explicit --chart"),
        }
    }

    pub fn growth_model(&self, m: usize) -> CliResult<Option<GrowthProfile>> {
        let Some(model) = self.model else {
            return Ok(None);
        };
        let g = match model {
            GrowthModel::Power { c, k } => GrowthProfile::power_model(c, k, m)?,
            GrowthModel::Exponential { c, beta } => GrowthProfile::exponential_model(c, beta, m)?,
        };
        Ok(Some(match self.total_volume {
            Some(v) => g.with_total_volume(v),
            None => g,
        }))
    }

    pub fn annulus_spec(&self, n: usize, ann: &Annulus) -> CliResult<AnnulusSpec> {
        Ok(AnnulusSpec::new(self.origin_for(n)?, ann.a, ann.b)?)
    }
}
