use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use zygmund::czoperator::{l2_norm_estimate, TruncatedOperator};
use zygmund::experiments::{tp_sufficiency_with, TpOptions};
use zygmund::extension::{extend, report_for, ExtensionOptions};
use zygmund::geometry::{build_whitney_with, Domain, Side, WhitneyCovering, WhitneyOptions};
use zygmund::polyapprox::{campanato_seminorm, random_cube_check, GridFunction, Norm, SeminormOptions};

use crate::config::{ConfigError, RunConfig};
use crate::functions::TestFunction;

#[derive(Debug)]
pub enum Failure {
    Config(ConfigError),
    Run(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<zygmund::Error> for Failure {
    fn from(e: zygmund::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

/// What a command hands back to the driver: pass flag and summary payload.
pub struct Outcome {
    pub pass: bool,
    pub result: Value,
}

/// Output directory with a list of the files written.
pub struct Output {
    dir: PathBuf,
    pub files: Vec<PathBuf>,
}

impl Output {
    pub fn new(dir: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(dir)?;
        Ok(Output {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<(), Failure> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path)?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        self.files.push(path);
        Ok(())
    }

    pub fn field(&mut self, name: &str, f: &GridFunction) -> Result<(), Failure> {
        let path = self.dir.join(name);
        f.write_text(BufWriter::new(File::create(&path)?))?;
        self.files.push(path);
        Ok(())
    }

    pub fn json(&mut self, name: &str, v: &Value) -> Result<(), Failure> {
        let path = self.dir.join(name);
        let text = serde_json::to_string_pretty(v).map_err(|e| Failure::Run(e.to_string()))?;
        fs::write(&path, text + "\n")?;
        self.files.push(path);
        Ok(())
    }
}

#[derive(Serialize)]
struct CubeRow {
    level: i32,
    i: i64,
    j: i64,
    corner_x: f64,
    corner_y: f64,
    side: f64,
    dist: f64,
}

fn cube_rows(w: &WhitneyCovering) -> Vec<CubeRow> {
    (0..w.len())
        .map(|k| {
            let q = w.cube(k);
            let c = q.corner();
            CubeRow {
                level: q.level,
                i: q.index[0],
                j: q.index[1],
                corner_x: c[0],
                corner_y: c[1],
                side: q.side(),
                dist: w.dist(k),
            }
        })
        .collect()
}

pub fn decompose(cfg: &RunConfig, out: &mut Output) -> Result<Outcome, Failure> {
    let domain = cfg.domain()?;
    let opts = WhitneyOptions {
        min_level: cfg.max_level,
        max_side: None,
    };
    let mut result = serde_json::Map::new();
    let mut pass = true;
    for (name, side) in [("interior", Side::Interior), ("exterior", Side::Exterior)] {
        let w = build_whitney_with(&domain, side, &opts)?;
        let rep = w.check_invariants(&domain);
        pass &= rep.all_ok();
        out.csv(&format!("{name}_cubes.csv"), &cube_rows(&w))?;
        result.insert(
            name.into(),
            json!({ "invariants": rep, "all_ok": rep.all_ok(), "truncation": w.truncation() }),
        );
    }
    Ok(Outcome {
        pass,
        result: Value::Object(result),
    })
}

#[derive(Serialize)]
struct LevelRow {
    norm: String,
    interior: bool,
    level: i32,
    side: f64,
    cubes: usize,
    max: f64,
}

pub fn seminorm(cfg: &RunConfig, out: &mut Output) -> Result<Outcome, Failure> {
    let domain = cfg.domain()?;
    let omega = cfg.growth()?;
    let func = TestFunction::parse(&cfg.function, &omega)?;
    let grid = cfg.grid(&domain)?;
    let f = GridFunction::on_domain(grid, &domain, |x| func.eval(x));
    let mut rows = Vec::new();
    let mut values = serde_json::Map::new();
    let mut sweep = Vec::new();
    for p in [Norm::L1, Norm::L2, Norm::Linf] {
        for interior in [false, true] {
            let opts = SeminormOptions::new(p, interior, cfg.max_level);
            let r = campanato_seminorm(&f, &domain, &omega, &opts)?;
            for l in &r.levels {
                rows.push(LevelRow {
                    norm: format!("{p:?}"),
                    interior,
                    level: l.level,
                    side: l.side,
                    cubes: l.cubes,
                    max: l.max,
                });
            }
            if !interior {
                sweep.push(r.value);
            }
            let key = format!("{p:?}{}", if interior { "_interior" } else { "" });
            values.insert(key, json!({ "value": r.value, "argmax": r.argmax }));
        }
    }
    out.csv("levels.csv", &rows)?;
    let lo = sweep.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = sweep.iter().copied().fold(0.0, f64::max);
    let ratio = if lo > 0.0 { Some(hi / lo) } else { None };
    let opts = SeminormOptions::new(cfg.norm()?, false, cfg.max_level);
    let random = random_cube_check(&f, &domain, &omega, &opts, 200, cfg.seed)?;
    let chosen = campanato_seminorm(&f, &domain, &omega, &opts)?.value;
    let random_max = random.iter().map(|l| l.max).fold(0.0, f64::max);
    Ok(Outcome {
        pass: true,
        result: json!({
            "n": omega.n(),
            "values": values,
            "p_ratio": ratio,
            "random_check": {
                "norm": format!("{:?}", opts.p),
                "lattice_value": chosen,
                "max": random_max,
                "levels": random,
            },
        }),
    })
}

pub fn extend_cmd(cfg: &RunConfig, out: &mut Output) -> Result<Outcome, Failure> {
    let domain = cfg.domain()?;
    let omega = cfg.growth()?;
    let func = TestFunction::parse(&cfg.function, &omega)?;
    let grid = cfg.grid(&domain)?;
    let f = GridFunction::on_domain(grid, &domain, |x| func.eval(x));
    let opts = ExtensionOptions {
        cutoff: cfg.cutoff,
        ..Default::default()
    };
    let ext = extend(&f, &domain, &omega, &opts)?;
    let rep = report_for(&f, &ext, &domain, &omega, cfg.norm()?)?;
    let g = &ext.f.grid;
    let di = ((f.grid.origin[0] - g.origin[0]) / g.h).round() as usize;
    let dj = ((f.grid.origin[1] - g.origin[1]) / g.h).round() as usize;
    let mut agrees = true;
    for j in 0..f.grid.ny {
        for i in 0..f.grid.nx {
            if f.active(i, j) {
                agrees &= ext.f.get(i + di, j + dj) == f.get(i, j);
            }
        }
    }
    if cfg.fields {
        out.field("extension.txt", &ext.f)?;
    }
    let support_ok = rep.measured_support <= rep.support_radius;
    Ok(Outcome {
        pass: agrees && support_ok,
        result: json!({ "report": rep, "equals_input_on_domain": agrees, "support_ok": support_ok }),
    })
}

#[derive(Serialize)]
struct ApplyRow {
    kernel: String,
    max_abs: f64,
    interior_max_abs: f64,
    l2_norm_estimate: f64,
    sphere_mean: f64,
    homogeneity_error: f64,
}

pub fn apply(cfg: &RunConfig, out: &mut Output) -> Result<Outcome, Failure> {
    let domain = cfg.domain()?;
    let omega = cfg.growth()?;
    let func = TestFunction::parse(&cfg.function, &omega)?;
    let kernels = cfg.kernels()?;
    let grid = cfg.grid(&domain)?;
    let op = TruncatedOperator::new(&grid, &domain, cfg.scheme()?)?;
    let f = op.sample(|x| func.eval(x));
    let fields = op.apply_many(&kernels, &f)?;
    let reach = 1.0 / 32.0;
    let far: Vec<bool> = (0..grid.len())
        .map(|k| op.targets()[k] && domain.dist_to_boundary(&grid.center(k % grid.nx, k / grid.nx)) >= reach)
        .collect();
    let mut rows = Vec::new();
    let mut pass = true;
    for (kernel, tf) in kernels.iter().zip(&fields) {
        let check = kernel.check(3);
        pass &= check.even && check.sphere_mean.abs() < 1e-10 && check.homogeneity_error < 1e-12;
        let interior = tf
            .values
            .iter()
            .zip(&far)
            .filter(|(_, &a)| a)
            .map(|(v, _)| v.abs())
            .fold(0.0, f64::max);
        rows.push(ApplyRow {
            kernel: kernel.to_string(),
            max_abs: tf.sup_norm(),
            interior_max_abs: interior,
            l2_norm_estimate: l2_norm_estimate(&op, kernel, 20, cfg.seed)?,
            sphere_mean: check.sphere_mean,
            homogeneity_error: check.homogeneity_error,
        });
        if cfg.fields {
            out.field(&format!("apply_{kernel}.txt"), tf)?;
        }
    }
    out.csv("apply.csv", &rows)?;
    Ok(Outcome {
        pass,
        result: json!({
            "targets": op.targets().iter().filter(|&&t| t).count(),
            "boundary_cells": op.boundary_cells(),
            "interior_reach": reach,
            "kernels": rows,
        }),
    })
}

#[derive(Serialize)]
struct ProfileCsvRow {
    kernel: String,
    k: String,
    anchor_x: f64,
    anchor_y: f64,
    side: f64,
    weight: f64,
    oscillation: f64,
    value: f64,
}

#[derive(Serialize)]
struct TableCsvRow {
    kernel: String,
    k: String,
    anchor_x: f64,
    anchor_y: f64,
    value: f64,
    argmax_x: f64,
    argmax_y: f64,
    argmax_side: f64,
}

#[derive(Serialize)]
struct ScaleRow {
    k: String,
    side: f64,
    value: f64,
}

pub fn tpcheck(cfg: &RunConfig, out: &mut Output) -> Result<Outcome, Failure> {
    let domain = cfg.domain()?;
    let omega = cfg.growth()?;
    let kernels = cfg.kernels()?;
    let opts = TpOptions {
        scheme: cfg.scheme()?,
        scales: (cfg.min_level, cfg.max_level),
        ..Default::default()
    };
    let r = tp_sufficiency_with(&domain, &kernels, &omega, cfg.grid_level(), &opts)?;
    let rows: Vec<ProfileCsvRow> = r
        .rows
        .iter()
        .map(|p| ProfileCsvRow {
            kernel: p.kernel.clone(),
            k: p.k.clone(),
            anchor_x: p.anchor[0],
            anchor_y: p.anchor[1],
            side: p.side,
            weight: p.weight,
            oscillation: p.oscillation,
            value: p.value,
        })
        .collect();
    out.csv("profile_rows.csv", &rows)?;
    let scales: Vec<ScaleRow> = r
        .profiles
        .iter()
        .flat_map(|p| {
            p.points.iter().map(|&(side, value)| ScaleRow {
                k: p.k.clone(),
                side,
                value,
            })
        })
        .collect();
    out.csv("profiles.csv", &scales)?;
    let table: Vec<TableCsvRow> = r
        .table
        .iter()
        .map(|t| TableCsvRow {
            kernel: t.kernel.clone(),
            k: t.k.clone(),
            anchor_x: t.anchor[0],
            anchor_y: t.anchor[1],
            value: t.value,
            argmax_x: t.argmax.corner[0],
            argmax_y: t.argmax.corner[1],
            argmax_side: t.argmax.side,
        })
        .collect();
    out.csv("table.csv", &table)?;
    Ok(Outcome {
        pass: r.bounded,
        result: json!({
            "kernels": r.kernels,
            "growth": r.growth,
            "n": r.n,
            "h": r.h,
            "options": r.options,
            "anchors": r.anchors,
            "sides": r.sides,
            "target_cells": r.target_cells,
            "boundary_cells": r.boundary_cells,
            "table_sup": r.table_sup,
            "profiles": r.profiles,
            "bounded": r.bounded,
        }),
    })
}

#[derive(Serialize)]
struct GrowthRow {
    t: f64,
    omega: f64,
    xi: f64,
    omega_tilde: f64,
}

pub fn growth_info(cfg: &RunConfig, out: &mut Output) -> Result<Outcome, Failure> {
    let omega = cfg.growth()?;
    let rows = (0..=100)
        .map(|k| {
            let t = 2f64.powf(-20.0 * f64::from(k) / 100.0);
            Ok(GrowthRow {
                t,
                omega: omega.eval(t),
                xi: omega.xi(t)?,
                omega_tilde: omega.omega_tilde(t)?,
            })
        })
        .collect::<Result<Vec<_>, zygmund::Error>>()?;
    out.csv("growth.csv", &rows)?;
    Ok(Outcome {
        pass: true,
        result: json!({
            "modulus": omega.modulus().to_string(),
            "type": omega.info(),
            "doubling": omega.doubling(),
            "dini": omega.dini(),
        }),
    })
}
