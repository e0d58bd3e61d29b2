use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use carnot_core::capacity::{
    capacity_variational, closed_form_capacity, isoperimetric_profile, sandwich_check,
    CapacityEstimate, ClosedFormSpace, SandwichReport,
};
use carnot_core::conformal::{
    ahlfors_gromov_check, classify_by_growth, AhlforsGromovReport, ClassificationResult,
};
use carnot_core::io::{
    read_growth_csv, write_distance_csv, write_growth_csv, write_json, write_series_csv,
    DistanceMetadata, GrowthMetadata,
};
use carnot_core::metric::{
    cc_distance_field, growth_profile_from_distance, sphere_area_check, DistanceField, GrowthKind,
    GrowthProfile, SphereAreaReport,
};
use carnot_core::quad::linear_fit;
use carnot_core::sr::SubRiemannianStructure;
use carnot_core::{Error as CoreError, GridChart};
use serde::Serialize;

use crate::config::{RunConfig, StructureSource};
use crate::error::{config, CliError, CliResult};

/// Residual limits of the coarea suite for Riemannian and genuinely sub-Riemannian structures.
pub const COAREA_LIMIT_RIEMANNIAN: f64 = 0.05;
pub const COAREA_LIMIT_SUBRIEMANNIAN: f64 = 0.10;
/// Allowed spread of `lhs/rhs` around 1 when the two metrics coincide.
pub const AHLFORS_GROMOV_EQUALITY: f64 = 0.01;
/// Level bands of the coarea suite when no radii are configured.
const COAREA_BANDS: usize = 8;

fn write_file(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> Result<(), CoreError>,
) -> CliResult<()> {
    let wrap = |source: CoreError| CliError::Write {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(|e| wrap(e.into()))?;
    let mut w = BufWriter::new(file);
    body(&mut w).map_err(wrap)?;
    w.flush().map_err(|e| wrap(e.into()))
}

fn out_dir(cfg: &RunConfig) -> CliResult<&Path> {
    std::fs::create_dir_all(&cfg.out).map_err(|e| CliError::Write {
        path: cfg.out.clone(),
        source: e.into(),
    })?;
    Ok(&cfg.out)
}

fn out_path(cfg: &RunConfig, name: &str) -> CliResult<PathBuf> {
    Ok(out_dir(cfg)?.join(name))
}

fn distance_for(
    cfg: &RunConfig,
    s: &SubRiemannianStructure,
    extent: f64,
) -> CliResult<DistanceField> {
    let chart = cfg.chart_for(s, extent)?;
    let origin = cfg.origin_for(s.n())?;
    let dist = cc_distance_field(s, &chart, &origin, &cfg.tau)?;
    for w in dist.warnings() {
        log::warn!("{w}");
    }
    Ok(dist)
}

pub fn info(cfg: &RunConfig, out: &mut impl Write) -> CliResult<()> {
    let s = cfg.load_structure()?;
    let sum = s.summary();
    let ranks: Vec<String> = sum.filtration_ranks.iter().map(|r| r.to_string()).collect();
    writeln!(out, "structure {}", sum.name).ok();
    writeln!(
        out,
        "n={} d={} ranks=[{}] m={}",
        sum.n,
        sum.d,
        ranks.join(","),
        sum.m
    )
    .ok();
    // construction rejects rank sequences that vary between sample points
    writeln!(out, "equiregular=yes").ok();
    Ok(())
}

pub fn growth(cfg: &RunConfig, out: &mut impl Write) -> CliResult<()> {
    let s = cfg.load_structure()?;
    if cfg.radii.is_empty() {
        return config("growth needs --radii");
    }
    let r_max = cfg.radii[cfg.radii.len() - 1];
    let dist = distance_for(cfg, &s, r_max)?;
    let profile = growth_profile_from_distance(&dist, s.density(), &cfg.radii, s.m())?;
    let power_fit = if profile.samples.len() >= 2 {
        profile.power_fit().ok()
    } else {
        None
    };
    let meta = GrowthMetadata {
        distance: DistanceMetadata::new(s.name(), &dist),
        m: s.m(),
        power_fit,
    };
    let csv = out_path(cfg, "growth.csv")?;
    write_file(&csv, |w| write_growth_csv(&profile, w))?;
    let json = out_path(cfg, "growth.json")?;
    write_file(&json, |w| write_json(&meta, w))?;
    let dcsv = out_path(cfg, "distance.csv")?;
    write_file(&dcsv, |w| write_distance_csv(&dist, s.coordinates(), w))?;
    writeln!(
        out,
        "wrote {}, {} and {}",
        csv.display(),
        json.display(),
        dcsv.display()
    )
    .ok();
    if let Some(f) = power_fit {
        writeln!(
            out,
            "power fit v ~ {:.6e} r^{:.4} (log residual {:.2e})",
            f.c, f.k, f.residual
        )
        .ok();
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosedFormComparison {
    pub space: ClosedFormSpace,
    pub value: f64,
    pub relative_error: f64,
    /// False when only the dependence on `b/a` is known, not the constant.
    pub exact: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CapacityRecord {
    pub estimate: CapacityEstimate,
    pub sandwich: SandwichReport,
    pub closed_form: Option<ClosedFormComparison>,
}

/// Fitted `d ln(value) / d ln(ln(b/a))` over annuli sharing `a` and `p`.
#[derive(Debug, Clone, Serialize)]
pub struct LogSlope {
    pub a: f64,
    pub p: f64,
    pub slope: f64,
    pub annuli: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CapacityReport {
    pub structure: String,
    pub records: Vec<CapacityRecord>,
    pub log_slopes: Vec<LogSlope>,
}

/// Closed form for the conformal exponent of a built-in structure.
fn closed_form_space(
    cfg: &RunConfig,
    s: &SubRiemannianStructure,
    p: f64,
) -> Option<ClosedFormSpace> {
    let Some(StructureSource::Builtin { name, .. }) = &cfg.structure else {
        return None;
    };
    if p != s.m() as f64 {
        return None;
    }
    match name.as_str() {
        "euclidean" if s.n() >= 2 => Some(ClosedFormSpace::Euclidean),
        "heisenberg_cc" => Some(ClosedFormSpace::Heisenberg),
        _ => None,
    }
}

fn run_capacities(cfg: &RunConfig, s: &SubRiemannianStructure) -> CliResult<Vec<CapacityRecord>> {
    if cfg.annuli.is_empty() {
        return config("capacity needs at least one --annulus a,b,p");
    }
    let mut fields: Vec<(GridChart, DistanceField)> = Vec::new();
    let mut records = Vec::with_capacity(cfg.annuli.len());
    for ann in &cfg.annuli {
        let spec = cfg.annulus_spec(s.n(), ann)?;
        let chart = cfg.chart_for(s, ann.b)?;
        let cached = fields.iter().position(|(c, _)| c.same_grid(&chart));
        let idx = match cached {
            Some(i) => i,
            None => {
                let dist = distance_for(cfg, s, ann.b)?;
                fields.push((chart, dist));
                fields.len() - 1
            }
        };
        let est = capacity_variational(s, &spec, ann.p, &fields[idx].1)?;
        let sandwich = sandwich_check(&est);
        let closed_form = match closed_form_space(cfg, s, ann.p) {
            Some(space) => {
                let value = closed_form_capacity(space, s.n(), ann.a, ann.b)?;
                Some(ClosedFormComparison {
                    space,
                    value,
                    relative_error: est.value / value - 1.0,
                    exact: space == ClosedFormSpace::Euclidean,
                })
            }
            None => None,
        };
        records.push(CapacityRecord {
            estimate: est,
            sandwich,
            closed_form,
        });
    }
    Ok(records)
}

fn log_slopes(records: &[CapacityRecord]) -> Vec<LogSlope> {
    let mut groups: Vec<(f64, f64, Vec<(f64, f64)>)> = Vec::new();
    for r in records {
        let e = &r.estimate;
        if !(e.value > 0.0) {
            continue;
        }
        let point = ((e.annulus.b / e.annulus.a).ln().ln(), e.value.ln());
        match groups.iter_mut().find(|g| g.0 == e.annulus.a && g.1 == e.p) {
            Some(g) => g.2.push(point),
            None => groups.push((e.annulus.a, e.p, vec![point])),
        }
    }
    groups
        .into_iter()
        .filter_map(|(a, p, pts)| {
            let (x, y): (Vec<f64>, Vec<f64>) = pts.iter().cloned().unzip();
            let slope = linear_fit(&x, &y).ok()?.0;
            (pts.len() >= 2).then_some(LogSlope {
                a,
                p,
                slope,
                annuli: pts.len(),
            })
        })
        .collect()
}

pub fn capacity(cfg: &RunConfig, out: &mut impl Write) -> CliResult<()> {
    let s = cfg.load_structure()?;
    let records = run_capacities(cfg, &s)?;
    let report = CapacityReport {
        structure: s.name().to_string(),
        log_slopes: log_slopes(&records),
        records,
    };
    let path = out_path(cfg, "capacity.json")?;
    write_file(&path, |w| write_json(&report, w))?;
    for r in &report.records {
        let e = &r.estimate;
        let cf = match &r.closed_form {
            Some(c) if c.exact => format!(
                " closed form {:.6} ({:+.2}%)",
                c.value,
                100.0 * c.relative_error
            ),
            Some(c) => format!(
                " scaling reference {:.6} (ratio {:.4})",
                c.value,
                1.0 + c.relative_error
            ),
            None => String::new(),
        };
        writeln!(
            out,
            "a={} b={} p={}: value {:.6} in [{:.6}, {:.6}] sandwich {}{cf}",
            e.annulus.a,
            e.annulus.b,
            e.p,
            e.value,
            e.lower,
            e.upper,
            if r.sandwich.pass { "pass" } else { "FAIL" }
        )
        .ok();
    }
    for l in &report.log_slopes {
        writeln!(
            out,
            "a={} p={}: slope of ln(value) against ln(ln(b/a)) = {:.4}",
            l.a, l.p, l.slope
        )
        .ok();
    }
    writeln!(out, "wrote {}", path.display()).ok();
    let unconverged: Vec<String> = report
        .records
        .iter()
        .filter(|r| !r.estimate.converged)
        .map(|r| format!("({}, {})", r.estimate.annulus.a, r.estimate.annulus.b))
        .collect();
    if !unconverged.is_empty() {
        return Err(CliError::Solver(format!(
            "minimization did not converge on {}",
            unconverged.join(", ")
        )));
    }
    Ok(())
}

/// Growth input in order of precedence: file, analytic model, computed from the structure.
fn classification_input(cfg: &RunConfig) -> CliResult<GrowthProfile> {
    let structure_m = || -> CliResult<Option<usize>> {
        match &cfg.structure {
            Some(_) => Ok(Some(cfg.load_structure()?.m())),
            None => Ok(None),
        }
    };
    let m = || -> CliResult<usize> {
        match cfg.m {
            Some(m) => Ok(m),
            None => {
                structure_m()?.ok_or_else(|| CliError::Config("give --m or --structure".into()))
            }
        }
    };
    if let Some(path) = &cfg.growth_file {
        let file = File::open(path).map_err(|e| CliError::Core(e.into()))?;
        let g = read_growth_csv(file, m()?)?;
        return Ok(match cfg.total_volume {
            Some(v) => g.with_total_volume(v),
            None => g,
        });
    }
    if let Some(g) = cfg.growth_model(m()?)? {
        return Ok(g);
    }
    if cfg.structure.is_some() && !cfg.radii.is_empty() {
        let s = cfg.load_structure()?;
        let dist = distance_for(cfg, &s, cfg.radii[cfg.radii.len() - 1])?;
        let g =
            growth_profile_from_distance(&dist, s.density(), &cfg.radii, cfg.m.unwrap_or(s.m()))?;
        return Ok(match cfg.total_volume {
            Some(v) => g.with_total_volume(v),
            None => g,
        });
    }
    config("classify needs --growth-file, --model, or --structure with --radii")
}

/// Integrands of the area, volume and growth criteria along the profile's radii.
fn integrand_series(g: &GrowthProfile) -> CliResult<(Vec<f64>, Vec<(String, Vec<f64>)>)> {
    let m = g.m as f64;
    let rs: Vec<f64> = match g.kind {
        GrowthKind::Sampled => g.radii(),
        _ => (0..65).map(|i| 10f64.powf(i as f64 / 32.0)).collect(),
    };
    let mut area = Vec::with_capacity(rs.len());
    let mut volume = Vec::with_capacity(rs.len());
    let mut ratio = Vec::with_capacity(rs.len());
    for &r in &rs {
        let v = g.volume_at(r)?;
        let s = g.area_at(r)?;
        area.push(s.powf(1.0 / (1.0 - m)));
        volume.push((r / v).powf(1.0 / (m - 1.0)));
        ratio.push(v / r.powf(m));
    }
    Ok((
        rs,
        vec![
            ("S^(1/(1-m)) [1/length]".into(), area),
            ("(r/v)^(1/(m-1)) [1/length]".into(), volume),
            ("v/r^m [dimensionless]".into(), ratio),
        ],
    ))
}

pub fn classify(cfg: &RunConfig, out: &mut impl Write) -> CliResult<()> {
    let g = classification_input(cfg)?;
    let result: ClassificationResult = classify_by_growth(&g)?;
    let path = out_path(cfg, "classification.json")?;
    write_file(&path, |w| write_json(&result, w))?;
    let (rs, series) = integrand_series(&g)?;
    let plot = out_path(cfg, "classification_integrands.csv")?;
    write_file(&plot, |w| write_series_csv("r [length]", &rs, &series, w))?;
    writeln!(
        out,
        "verdict {}",
        serde_json::to_value(result.verdict)
            .map_err(CoreError::from)?
            .as_str()
            .unwrap_or("?")
    )
    .ok();
    for d in &result.diagnostics {
        let label = serde_json::to_value(d.criterion).map_err(CoreError::from)?;
        let status = serde_json::to_value(d.status).map_err(CoreError::from)?;
        writeln!(
            out,
            "{} {}: {}",
            label.as_str().unwrap_or("?"),
            status.as_str().unwrap_or("?"),
            d.evidence
        )
        .ok();
    }
    writeln!(out, "wrote {} and {}", path.display(), plot.display()).ok();
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct CoareaSuite {
    pub report: SphereAreaReport,
    pub limit: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AhlforsGromovSuite {
    pub report: AhlforsGromovReport,
    pub ratio: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub structure: String,
    pub coarea: Option<CoareaSuite>,
    pub sandwich: Vec<CapacityRecord>,
    pub ahlfors_gromov: Option<AhlforsGromovSuite>,
    pub pass: bool,
}

/// Sphere areas `V'(r)` against banded coarea integrals between the configured radii.
fn coarea_suite(
    s: &SubRiemannianStructure,
    dist: &DistanceField,
    levels: &[f64],
) -> CliResult<CoareaSuite> {
    let report = sphere_area_check(s, dist, levels)?;
    let limit = if s.m() == s.n() {
        COAREA_LIMIT_RIEMANNIAN
    } else {
        COAREA_LIMIT_SUBRIEMANNIAN
    };
    Ok(CoareaSuite {
        pass: report.residual <= limit,
        report,
        limit,
    })
}

/// The inequality with both metrics equal, where it must be an equality.
fn ahlfors_gromov_suite(
    s: &SubRiemannianStructure,
    dist: &DistanceField,
    radii: &[f64],
) -> CliResult<AhlforsGromovSuite> {
    let g = growth_profile_from_distance(dist, s.density(), radii, s.m())?;
    let volumes: Vec<(f64, f64)> = g.samples.iter().map(|x| (x.r, x.v)).collect();
    let iso = isoperimetric_profile(s, dist, &g.volumes())?;
    let (r0, r1) = (radii[0], radii[radii.len() - 1]);
    let report = ahlfors_gromov_check(&g, &iso, &volumes, r0, r1, s.m())?;
    let ratio = report.lhs / report.rhs;
    Ok(AhlforsGromovSuite {
        report,
        ratio,
        pass: (ratio - 1.0).abs() <= AHLFORS_GROMOV_EQUALITY,
    })
}

pub fn check(cfg: &RunConfig, out: &mut impl Write) -> CliResult<()> {
    let s = cfg.load_structure()?;
    if cfg.radii.is_empty() && cfg.annuli.is_empty() {
        return config("check needs --radii or at least one --annulus");
    }
    let levels: Vec<f64> = if cfg.radii.len() >= 2 {
        cfg.radii.clone()
    } else {
        let ann = cfg.annuli[0];
        (0..=COAREA_BANDS)
            .map(|i| ann.a + (ann.b - ann.a) * i as f64 / COAREA_BANDS as f64)
            .collect()
    };
    let extent = levels[levels.len() - 1];
    let dist = distance_for(cfg, &s, extent)?;
    let coarea = Some(coarea_suite(&s, &dist, &levels)?);
    let ag = if cfg.radii.len() >= 2 && s.m() >= 2 {
        Some(ahlfors_gromov_suite(&s, &dist, &cfg.radii)?)
    } else {
        None
    };
    let sandwich = if cfg.annuli.is_empty() {
        Vec::new()
    } else {
        run_capacities(cfg, &s)?
    };
    let pass = coarea.as_ref().is_none_or(|c| c.pass)
        && ag.as_ref().is_none_or(|a| a.pass)
        && sandwich.iter().all(|r| r.sandwich.pass);
    let report = CheckReport {
        structure: s.name().to_string(),
        coarea,
        sandwich,
        ahlfors_gromov: ag,
        pass,
    };
    let path = out_path(cfg, "check.json")?;
    write_file(&path, |w| write_json(&report, w))?;
    let verdict = |ok: bool| if ok { "pass" } else { "FAIL" };
    if let Some(c) = &report.coarea {
        writeln!(
            out,
            "coarea residual {:.4} (limit {}) {}",
            c.report.residual,
            c.limit,
            verdict(c.pass)
        )
        .ok();
    }
    for r in &report.sandwich {
        let e = &r.estimate;
        writeln!(
            out,
            "sandwich a={} b={} p={}: {:.6} <= {:.6} <= {:.6} {}",
            e.annulus.a,
            e.annulus.b,
            e.p,
            e.lower,
            e.value,
            e.upper * (1.0 + r.sandwich.slack),
            verdict(r.sandwich.pass)
        )
        .ok();
    }
    if let Some(a) = &report.ahlfors_gromov {
        writeln!(
            out,
            "ahlfors-gromov lhs/rhs {:.4} {}",
            a.ratio,
            verdict(a.pass)
        )
        .ok();
    }
    writeln!(out, "wrote {}", path.display()).ok();
    if !report.pass {
        return Err(CliError::ChecksFailed("see check.json".into()));
    }
    Ok(())
}
