use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use mgstd_core::{
    build_grid, build_multivalued_map, count_transitions, export_dot, morse_decomposition,
    read_binary, read_csv, recommend_h, run_mgstd, select_mu_star_averaged,
    select_mu_star_from_counts, write_csv, BuiltinModel, Dataset, Error, GridSpec, MgstdParams,
    MorseGraph, Preset, SweepSettings,
};
use serde_json::json;

use crate::config::{MuStar, RunConfig};
use crate::{CliError, Outcome};

pub const DATA_FILE: &str = "data.csv";
pub const SIMULATION_FILE: &str = "simulation.json";
pub const SELECT_FILE: &str = "select.json";
pub const CURVE_FILE: &str = "ratio_curve.tsv";
pub const COVERAGE_FILE: &str = "coverage.tsv";
pub const DOT_FILE: &str = "morse.dot";
pub const MORSE_FILE: &str = "morse.json";
pub const FIELD_FILE: &str = "vectorfield.tsv";
pub const FIELD_META_FILE: &str = "vectorfield.json";

fn out_path(cfg: &RunConfig, name: &str) -> Result<PathBuf, CliError> {
    let dir = cfg.out_dir();
    fs::create_dir_all(&dir).map_err(Error::from)?;
    Ok(dir.join(name))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path).map_err(Error::from)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(Error::from)?;
    writeln!(w).map_err(Error::from)?;
    w.flush().map_err(Error::from)?;
    Ok(())
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> mgstd_core::Result<()>) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path).map_err(Error::from)?);
    f(&mut w)?;
    w.flush().map_err(Error::from)?;
    Ok(())
}

fn simulation(cfg: &RunConfig) -> Result<(Preset, mgstd_core::SimulationSpec), CliError> {
    let model = BuiltinModel::parse(cfg.model.as_deref().unwrap_or_default())?;
    let preset = Preset::parse(cfg.preset.as_deref().unwrap_or_default())?;
    let mut spec = preset.spec(model, cfg.seed());
    if let Some(n) = cfg.n_series {
        spec.config.n_series = n;
    }
    Ok((preset, spec))
}

/// Dataset named by `--input`, or simulated from `--model`/`--preset`.
pub fn load_dataset(cfg: &RunConfig) -> Result<Dataset, CliError> {
    let d = match &cfg.input {
        Some(path) => {
            let is_csv = path
                .extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
            if is_csv {
                read_csv(path)?
            } else {
                read_binary(path)?
            }
        }
        None => {
            let (preset, spec) = simulation(cfg)?;
            preset.generate(&spec)?
        }
    };
    if d.is_empty() || d.point_count() == 0 {
        return Err(Error::Empty("dataset has no points").into());
    }
    Ok(d)
}

fn single_grid(cfg: &RunConfig, d: &Dataset) -> Result<GridSpec, CliError> {
    let delta = cfg.delta.clone().unwrap_or_else(|| vec![0.0; d.dim()]);
    Ok(build_grid(d.dim(), cfg.h(), f64::INFINITY, &delta, d.max_abs())?)
}

fn fmt_ratio(r: f64) -> String {
    if r.is_infinite() {
        "inf".into()
    } else {
        r.to_string()
    }
}

fn write_curve(path: &Path, curve: &[(u64, f64)]) -> Result<(), CliError> {
    write_with(path, |w| {
        writeln!(w, "mu_star\tratio")?;
        for &(mu, r) in curve {
            writeln!(w, "{mu}\t{}", fmt_ratio(r))?;
        }
        Ok(())
    })
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    if cfg.model.is_none() {
        return Err(CliError::Usage("simulate needs --model and --preset".into()));
    }
    let (preset, spec) = simulation(cfg)?;
    let d = preset.generate(&spec)?;
    let data = out_path(cfg, DATA_FILE)?;
    write_with(&data, |w| write_csv(&d, w))?;
    let meta = out_path(cfg, SIMULATION_FILE)?;
    let mut value = serde_json::to_value(&spec).map_err(Error::from)?;
    value["preset"] = json!(preset);
    write_json(&meta, &value)?;
    Ok(Outcome {
        summary: format!(
            "{} series, {} points, {} pairs",
            d.series_count(),
            d.point_count(),
            d.pair_count()
        ),
        files: vec![data, meta],
    })
}

pub fn cmd_select(
    cfg: &RunConfig,
    h_candidates: Option<&[f64]>,
    band: (u64, u64),
) -> Result<Outcome, CliError> {
    let d = load_dataset(cfg)?;
    let (h, rho, a, mu_max) = (cfg.h(), cfg.rho(), cfg.ratio_bound(), cfg.mu_max());
    let mut files = Vec::new();
    let mut report = json!({ "h": h, "rho": rho, "ratio_bound": a, "mu_max": mu_max });

    let coverage = match h_candidates {
        Some(c) if !c.is_empty() => Some(recommend_h(&d, c, band)?),
        _ => None,
    };
    if let Some(rec) = &coverage {
        let path = out_path(cfg, COVERAGE_FILE)?;
        write_with(&path, |w| {
            writeln!(w, "h\tn\tcoverage")?;
            for row in &rec.table {
                for &(n, v) in &row.curve {
                    writeln!(w, "{}\t{n}\t{v}", row.h)?;
                }
            }
            Ok(())
        })?;
        files.push(path);
        report["coverage"] = json!({
            "band": [band.0, band.1],
            "recommended_h": rec.h,
            "band_means": rec.table.iter().map(|r| json!({"h": r.h, "mean": r.band_mean})).collect::<Vec<_>>(),
        });
    }

    let summary;
    let mut failure = None;
    if let Some(inc) = cfg.sweep_increment {
        let sweep = SweepSettings {
            shift_increment: inc,
            enclosing_half_width: None,
        };
        let avg = select_mu_star_averaged(&d, h, rho, a, mu_max, &sweep)?;
        summary = format!("mu_star {} (mean {:.2} over {} shifts)", avg.chosen, avg.mean, avg.per_shift.len());
        report["mu_star"] = json!(avg.chosen);
        report["mu_star_mean"] = json!(avg.mean);
        report["shift_increment"] = json!(inc);
        report["per_shift"] = json!(avg
            .per_shift
            .iter()
            .map(|(delta, mu)| json!({"delta": delta, "mu_star": mu}))
            .collect::<Vec<_>>());
    } else {
        let grid = single_grid(cfg, &d)?;
        let tc = count_transitions(&d, &grid)?;
        report["grid"] = serde_json::to_value(&grid).map_err(Error::from)?;
        let curve = match select_mu_star_from_counts(&tc, rho, a, mu_max) {
            Ok(sel) => {
                summary = format!("mu_star {}", sel.mu_star);
                report["mu_star"] = json!(sel.mu_star);
                sel.curve
            }
            Err(Error::ThresholdNotFound { mu_max, ratio_bound, curve }) => {
                summary = String::new();
                report["mu_star"] = serde_json::Value::Null;
                failure = Some(Error::ThresholdNotFound {
                    mu_max,
                    ratio_bound,
                    curve: Vec::new(),
                });
                curve
            }
            Err(e) => return Err(e.into()),
        };
        let path = out_path(cfg, CURVE_FILE)?;
        write_curve(&path, &curve)?;
        files.push(path);
    }
    let path = out_path(cfg, SELECT_FILE)?;
    write_json(&path, &report)?;
    files.push(path);
    if let Some(e) = failure {
        return Err(e.into());
    }
    let summary = match &coverage {
        Some(rec) => format!("{summary}; recommended h {}", rec.h),
        None => summary,
    };
    Ok(Outcome { summary, files })
}

pub fn cmd_morse(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let d = load_dataset(cfg)?;
    let grid = single_grid(cfg, &d)?;
    let tc = count_transitions(&d, &grid)?;
    let rho = cfg.rho();
    let mu_star = match cfg.mu_star {
        Some(MuStar::Fixed(n)) => n,
        Some(MuStar::Auto) => select_mu_star_from_counts(&tc, rho, cfg.ratio_bound(), cfg.mu_max())?.mu_star,
        None => return Err(CliError::Usage("morse needs --mu-star N or --mu-star auto".into())),
    };
    let map = build_multivalued_map(&tc, rho, mu_star)?;
    let md = morse_decomposition(&map);
    let mg = MorseGraph::new(&md, &grid)?;

    let dot = out_path(cfg, DOT_FILE)?;
    fs::write(&dot, export_dot(&mg)).map_err(Error::from)?;
    let sets: Vec<_> = md
        .sets()
        .iter()
        .zip(&mg.nodes)
        .map(|(cells, node)| {
            json!({
                "name": node.name,
                "size": node.size,
                "barycenter": node.barycenter,
                "cells": cells,
            })
        })
        .collect();
    let report = json!({
        "grid": grid,
        "rho": rho,
        "mu_star": mu_star,
        "sets": sets,
        "order": md.order(),
        "reduced": md.reduced_edges(),
        "minimal": md.minimal_sets(),
    });
    let json_path = out_path(cfg, MORSE_FILE)?;
    write_json(&json_path, &report)?;
    Ok(Outcome {
        summary: format!(
            "mu_star {mu_star}: {} Morse sets, {} minimal",
            md.len(),
            md.minimal_sets().len()
        ),
        files: vec![dot, json_path],
    })
}

pub fn cmd_vectorfield(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let d = load_dataset(cfg)?;
    let (h, rho, inc) = (cfg.h(), cfg.rho(), cfg.shift_increment());
    let (mu_star, mean) = match cfg.mu_star {
        Some(MuStar::Fixed(n)) => (n, None),
        Some(MuStar::Auto) => {
            let sweep = SweepSettings {
                shift_increment: inc,
                enclosing_half_width: None,
            };
            let avg = select_mu_star_averaged(&d, h, rho, cfg.ratio_bound(), cfg.mu_max(), &sweep)?;
            (avg.chosen, Some(avg.mean))
        }
        None => {
            return Err(CliError::Usage(
                "vectorfield needs --mu-star N or --mu-star auto".into(),
            ))
        }
    };
    let mut params = MgstdParams::new(h, rho, mu_star);
    params.shift_increment = inc;
    params.interpolation = cfg.interp.unwrap_or_default();
    params.arrows = cfg.arrows.unwrap_or_default();
    let run = run_mgstd(&d, &params)?;

    let tsv = out_path(cfg, FIELD_FILE)?;
    write_with(&tsv, |w| run.field.write_tsv(w))?;
    let meta = json!({
        "h": h,
        "rho": rho,
        "mu_star": mu_star,
        "mu_star_mean": mean,
        "shift_increment": inc,
        "shifts": run.shifts.len(),
        "interp": params.interpolation,
        "arrows": params.arrows,
        "cells": run.field.len(),
        "grid": run.field.grid,
    });
    let meta_path = out_path(cfg, FIELD_META_FILE)?;
    write_json(&meta_path, &meta)?;
    Ok(Outcome {
        summary: format!(
            "mu_star {mu_star}: {} supported cells over {} shifts",
            run.field.len(),
            run.shifts.len()
        ),
        files: vec![tsv, meta_path],
    })
}
