use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use starkmem::atomic::rad_per_us_to_khz;
use starkmem::compensator::{schedule_fields, OptimizeSettings};
use starkmem::export::{
    fmt_num, mask_pgm, write_heatmap, write_mask, write_records, write_samples, write_schedule,
    write_table,
};
use starkmem::field::compose;
use starkmem::memory::{average_curve, draw_bias_offsets, lifetime_heatmap, MonteCarloConfig};
use starkmem::slm::{synthesize_mask, SlmGrid, SynthesisOptions};
use starkmem::stark::{fictitious_field, fictitious_field_at, polarizabilities, stark_shift};
use starkmem::{
    CompensationPlan, Compensator, DecayCurve, FieldProfile, FieldTimeSeries, IntensityProfile,
    MemorySimulator,
};

use crate::config::{
    read_csv_pairs, CompensateMode, ConfigError, CycleCompensation, ScenarioConfig,
};
use crate::Command;

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn write_json(path: &Path, command: &str, cfg: &ScenarioConfig, result: Value) -> Result<()> {
    let doc = json!({ "command": command, "config": cfg, "result": result });
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, &doc)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn lifetime_of(samples: &[(f64, f64)]) -> Option<f64> {
    DecayCurve::from_samples(samples.to_vec())
        .ok()
        .map(|c| c.lifetime_1e)
}

fn describe(lifetime: Option<f64>) -> String {
    lifetime.map_or_else(|| "not reached".to_string(), |t| format!("{t:.3} us"))
}

fn paths(out: &Path, names: &[&str]) -> Vec<PathBuf> {
    names.iter().map(|n| out.join(n)).collect()
}

fn list(paths: &[PathBuf]) -> String {
    paths
        .iter()
        .map(|p| p.display().to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn execute(command: &Command, cfg: &mut ScenarioConfig, out: &Path) -> Result<String> {
    match command {
        Command::Shift { sweep_intensity } => shift(cfg, out, sweep_intensity.as_ref()),
        Command::Curve { t_max_us, points } => {
            if let Some(t) = t_max_us {
                cfg.run.t_max_us = *t;
            }
            if let Some(n) = points {
                cfg.run.t_points = *n;
            }
            curve(cfg, out)
        }
        Command::Lifetime { plan } => lifetime(cfg, out, plan.as_deref()),
        Command::Heatmap { b1_range, b2_range } => {
            if let Some(r) = b1_range {
                cfg.heatmap.b1_range = *r;
            }
            if let Some(r) = b2_range {
                cfg.heatmap.b2_range = *r;
            }
            heatmap(cfg, out)
        }
        Command::Montecarlo {
            delta_b_mg,
            levels,
            cycles,
            compensation,
            sweep_delta_b,
        } => {
            let mc = &mut cfg.montecarlo;
            if let Some(v) = delta_b_mg {
                mc.delta_b = *v;
            }
            if let Some(v) = levels {
                mc.n_levels = *v;
            }
            if let Some(v) = cycles {
                mc.n_cycles = *v;
            }
            if let Some(v) = compensation {
                mc.compensation = *v;
            }
            montecarlo(cfg, out, sweep_delta_b.map(|r| r.values()))
        }
        Command::Compensate { mode, budget } => {
            if let Some(m) = mode {
                cfg.compensate.mode = *m;
            }
            if let Some(b) = budget {
                cfg.compensate.budget = *b;
            }
            compensate(cfg, out)
        }
        Command::Mask { iterations } => {
            if let Some(n) = iterations {
                cfg.slm.iterations = *n;
            }
            mask(cfg, out)
        }
    }
}

fn shift(
    cfg: &ScenarioConfig,
    out: &Path,
    sweep: Option<&crate::config::SweepRange>,
) -> Result<String> {
    let atom = cfg.atom()?;
    let beam = cfg.beam()?;
    let (low, high) = atom.storage_pair();
    let mut rows = Vec::new();
    let mut table = Vec::new();
    for manifold in [low, high] {
        for m in manifold.sublevels() {
            let s = stark_shift(&atom, manifold.f, m, &beam)?;
            let khz = [s.scalar, s.vector, s.tensor, s.total()].map(rad_per_us_to_khz);
            rows.push(vec![
                manifold.f.to_string(),
                m.to_string(),
                fmt_num(khz[0]),
                fmt_num(khz[1]),
                fmt_num(khz[2]),
                fmt_num(khz[3]),
            ]);
            table.push(json!({ "F": manifold.f, "m_F": m, "scalar_kHz": khz[0], "vector_kHz": khz[1], "tensor_kHz": khz[2], "total_kHz": khz[3] }));
        }
    }
    let field = fictitious_field(&atom, &beam)?;
    let alphas: Vec<Value> = [low.f, high.f]
        .iter()
        .map(|&f| {
            polarizabilities(&atom, f, beam.detuning)
                .map(|a| json!({ "F": f, "polarizabilities_kHz_per_V2_cm2": a }))
        })
        .collect::<starkmem::Result<_>>()?;
    let mut files = paths(out, &["shift.csv", "shift.json"]);
    write_records(
        create(&files[0])?,
        &[
            "F",
            "m_F",
            "scalar_kHz",
            "vector_kHz",
            "tensor_kHz",
            "total_kHz",
        ],
        rows,
    )?;
    let mut result =
        json!({ "shifts": table, "fictitious_field_mG": field, "polarizabilities": alphas });
    let mut summary = format!("shift: fictitious field {field:.6} mG");
    if let Some(range) = sweep {
        let points = range
            .values()
            .into_iter()
            .map(|i| Ok((i, fictitious_field_at(&atom, &beam, i)?)))
            .collect::<starkmem::Result<Vec<(f64, f64)>>>()?;
        let (slope, intercept) = linear_fit(&points);
        let path = out.join("shift_sweep.csv");
        write_table(
            create(&path)?,
            &["intensity_mW_mm2", "field_mG"],
            points.iter().map(|&(i, b)| vec![i, b]),
        )?;
        result["sweep"] = json!({ "slope_mG_per_mW_mm2": slope, "intercept_mG": intercept });
        summary += &format!("; sweep slope {slope:.6} mG per mW/mm2, intercept {intercept:.3e} mG");
        files.push(path);
    }
    write_json(&files[1], "shift", cfg, result)?;
    Ok(format!("{summary} -> {}", list(&files)))
}

fn linear_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (sxy, sxx) = points.iter().fold((0.0, 0.0), |(a, b), &(x, y)| {
        (a + (x - mx) * (y - my), b + (x - mx).powi(2))
    });
    if sxx == 0.0 {
        return (0.0, my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

fn simulator(cfg: &ScenarioConfig) -> Result<(starkmem::AtomSystem, MemorySimulator)> {
    let atom = cfg.atom()?;
    let ensemble = cfg.ensemble(&atom)?;
    let sim = MemorySimulator::new(&atom, ensemble)?;
    Ok((atom, sim))
}

fn curve(cfg: &ScenarioConfig, out: &Path) -> Result<String> {
    let (_, sim) = simulator(cfg)?;
    let field = cfg.field()?;
    let samples = sim.sample_curve(&field, &cfg.time_grid()?)?;
    let lifetime = lifetime_of(&samples);
    let files = paths(out, &["curve.csv", "curve.json"]);
    write_samples(create(&files[0])?, &samples)?;
    write_json(&files[1], "curve", cfg, json!({ "lifetime_us": lifetime }))?;
    Ok(format!(
        "curve: lifetime {} -> {}",
        describe(lifetime),
        list(&files)
    ))
}

fn lifetime(cfg: &ScenarioConfig, out: &Path, plan: Option<&Path>) -> Result<String> {
    let (_, sim) = simulator(cfg)?;
    let mut field = cfg.field()?;
    if let Some(path) = plan {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let doc: Value = serde_json::from_str(&text)
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        let extra: FieldProfile =
            serde_json::from_value(doc["result"]["compensation_field"].clone()).map_err(|e| {
                ConfigError(format!(
                    "{}: no static compensation_field ({e})",
                    path.display()
                ))
            })?;
        field = compose(&field, &extra);
    }
    let tau = sim.lifetime(&field, &cfg.search())?;
    let file = out.join("lifetime.json");
    write_json(
        &file,
        "lifetime",
        cfg,
        json!({ "lifetime_us": tau, "field": field }),
    )?;
    Ok(format!("lifetime: {tau:.6} us -> {}", file.display()))
}

fn heatmap(cfg: &ScenarioConfig, out: &Path) -> Result<String> {
    let (_, sim) = simulator(cfg)?;
    let (b1, b2) = (cfg.heatmap.b1_range.values(), cfg.heatmap.b2_range.values());
    let map = lifetime_heatmap(&sim, &b1, &b2, &cfg.search())?;
    let files = paths(out, &["heatmap.csv", "heatmap.json"]);
    write_heatmap(create(&files[0])?, &map)?;
    let peak = map
        .entries()
        .fold((0.0, 0.0, f64::NEG_INFINITY), |best, e| {
            if e.2 > best.2 {
                e
            } else {
                best
            }
        });
    write_json(
        &files[1],
        "heatmap",
        cfg,
        json!({ "tau_zero_us": map.tau_zero, "peak": { "b1_mG_per_cm": peak.0, "b2_mG_per_cm2": peak.1, "tau_norm": peak.2 } }),
    )?;
    Ok(format!(
        "heatmap: tau(B=0) {:.3} us, peak {:.6} at ({}, {}) -> {}",
        map.tau_zero,
        peak.2,
        peak.0,
        peak.1,
        list(&files)
    ))
}

fn montecarlo(cfg: &ScenarioConfig, out: &Path, sweep: Option<Vec<f64>>) -> Result<String> {
    let (atom, sim) = simulator(cfg)?;
    let base = cfg.field()?;
    let grid = cfg.time_grid()?;
    let mc = &cfg.montecarlo;
    let run = |delta_b: f64| -> Result<Vec<(f64, f64)>> {
        let mc_cfg = MonteCarloConfig {
            delta_b,
            n_levels: mc.n_levels,
            n_cycles: mc.n_cycles,
            seed: cfg.run.seed,
        };
        let offsets = draw_bias_offsets(&mc_cfg)?;
        let compensation = match mc.compensation {
            CycleCompensation::None => None,
            CycleCompensation::Exact => {
                Some(offsets.iter().map(|o| -(base.b0 + o)).collect::<Vec<f64>>())
            }
            CycleCompensation::Schedule => {
                let comp =
                    Compensator::new(&atom, &cfg.beam()?)?.with_cap(cfg.compensate.intensity_cap);
                let net: Vec<f64> = offsets.iter().map(|o| base.b0 + o).collect();
                let plan =
                    comp.schedule_temporal(&FieldTimeSeries::from_bias_values(&net), mc.n_levels)?;
                Some(schedule_fields(&plan))
            }
        };
        Ok(average_curve(
            &sim,
            &base,
            &offsets,
            compensation.as_deref(),
            &grid,
        )?)
    };
    let samples = run(mc.delta_b)?;
    let averaged = lifetime_of(&samples);
    let baseline = lifetime_of(&sim.sample_curve(&base, &grid)?);
    let mut files = paths(out, &["montecarlo.csv", "montecarlo.json"]);
    write_samples(create(&files[0])?, &samples)?;
    let mut result = json!({ "lifetime_us": averaged, "baseline_lifetime_us": baseline });
    if let Some(values) = sweep {
        let rows = values
            .iter()
            .map(|&d| Ok(vec![d, lifetime_of(&run(d)?).unwrap_or(f64::NAN)]))
            .collect::<Result<Vec<Vec<f64>>>>()?;
        let path = out.join("montecarlo_sweep.csv");
        write_table(create(&path)?, &["delta_b_mG", "lifetime_us"], rows.clone())?;
        result["sweep"] = to_value(
            &rows
                .iter()
                .map(|r| json!({ "delta_b_mG": r[0], "lifetime_us": lifetime_or_null(r[1]) }))
                .collect::<Vec<_>>(),
        );
        files.push(path);
    }
    write_json(&files[1], "montecarlo", cfg, result)?;
    Ok(format!(
        "montecarlo: lifetime {} (baseline {}) -> {}",
        describe(averaged),
        describe(baseline),
        list(&files)
    ))
}

fn lifetime_or_null(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn compensate(cfg: &ScenarioConfig, out: &Path) -> Result<String> {
    let (atom, sim) = simulator(cfg)?;
    let field = cfg.field()?;
    let [lo, hi] = cfg.run.support_cm;
    let comp = Compensator::new(&atom, &cfg.beam()?)?
        .with_cap(cfg.compensate.intensity_cap)
        .with_support(lo, hi);
    let search = cfg.search();
    let mut files = vec![out.join("plan.json")];
    let stages: Vec<CompensationPlan> = match cfg.compensate.mode {
        CompensateMode::Bias => vec![comp.solve_bias(field.b0)?],
        CompensateMode::Profile => vec![comp.solve_profile(&field)?],
        CompensateMode::Complete => {
            let staged = comp.solve_complete(&field)?;
            std::iter::once(staged.profile).chain(staged.bias).collect()
        }
        CompensateMode::Optimize => {
            let settings = OptimizeSettings {
                budget: cfg.compensate.budget,
                seed: cfg.run.seed,
                search,
            };
            vec![comp.optimize_lifetime(sim.ensemble(), &field, &settings)?]
        }
        CompensateMode::Temporal => {
            let series = match cfg.series()? {
                Some(values) => values,
                None => {
                    let mc = &cfg.montecarlo;
                    let mc_cfg = MonteCarloConfig {
                        delta_b: mc.delta_b,
                        n_levels: mc.n_levels,
                        n_cycles: mc.n_cycles,
                        seed: cfg.run.seed,
                    };
                    draw_bias_offsets(&mc_cfg)?
                        .iter()
                        .map(|o| field.b0 + o)
                        .collect()
                }
            };
            let plan = comp.schedule_temporal(
                &FieldTimeSeries::from_bias_values(&series),
                cfg.compensate.n_levels,
            )?;
            let path = out.join("schedule.csv");
            write_schedule(create(&path)?, &plan)?;
            files.push(path);
            vec![plan]
        }
    };
    let mut result = json!({ "mode": cfg.compensate.mode, "stages": stages });
    let summary = if cfg.compensate.mode == CompensateMode::Temporal {
        let half = stages[0].quantization_half_step.unwrap_or(0.0);
        result["worst_case_residual_mG"] = json!(half);
        format!(
            "compensate: {} cycles, worst-case residual {half:.6} mG",
            stages[0].temporal_schedule.as_ref().map_or(0, Vec::len)
        )
    } else {
        let total = stages.iter().fold(FieldProfile::zero(), |acc, p| {
            compose(&acc, &p.fictitious_field())
        });
        let residual = compose(&field, &total);
        let before = sim.lifetime(&field, &search).ok();
        let after = sim.lifetime(&residual, &search).ok();
        result["compensation_field"] = to_value(&total);
        result["residual_after"] = to_value(&residual);
        result["uncompensated_lifetime_us"] = json!(before);
        result["predicted_lifetime_us"] = json!(after);
        format!(
            "compensate: lifetime {} -> {}",
            describe(before),
            describe(after)
        )
    };
    write_json(&files[0], "compensate", cfg, result)?;
    Ok(format!("{summary} -> {}", list(&files)))
}

fn mask(cfg: &ScenarioConfig, out: &Path) -> Result<String> {
    let s = &cfg.slm;
    let grid = SlmGrid {
        samples: s.samples,
        pitch_mm: s.pitch_mm,
    };
    if s.samples == 0 || !(s.pitch_mm > 0.0) || !(s.waist_mm > 0.0) {
        return Err(
            ConfigError("slm: samples, pitch_mm and waist_mm must be positive".into()).into(),
        );
    }
    let incident = grid.gaussian(s.waist_mm, 1.0);
    let target = match &s.target_csv {
        Some(path) => {
            let profile =
                IntensityProfile::Sampled(read_csv_pairs(path, "z_prime_mm", "intensity")?);
            grid.sample(|z| profile.at(z))
        }
        None => {
            let half = 0.5 * (s.support_mm[1] - s.support_mm[0]);
            let mid = 0.5 * (s.support_mm[1] + s.support_mm[0]);
            grid.sample(|z| {
                let u = (z - mid) / half;
                s.target_level * (1.0 + s.target_slope * u + s.target_curvature * u * u)
            })
        }
    };
    let opts = SynthesisOptions {
        period_samples: s.period_samples,
        iterations: s.iterations,
        tolerance: s.tolerance,
        ..SynthesisOptions::new(&grid, (s.support_mm[0], s.support_mm[1]))
    };
    let synthesis = synthesize_mask(&target, &incident, grid, &opts)?;
    let files = paths(out, &["mask.csv", "mask.pgm", "mask.json"]);
    write_mask(create(&files[0])?, &synthesis.mask)?;
    std::fs::write(&files[1], mask_pgm(&synthesis.mask, s.pgm_rows))?;
    write_json(
        &files[2],
        "mask",
        cfg,
        json!({ "rms_error": synthesis.rms_error, "error_trace": synthesis.error_trace }),
    )?;
    Ok(format!(
        "mask: rms error {:.4}% after {} evaluations -> {}",
        100.0 * synthesis.rms_error,
        synthesis.error_trace.len(),
        list(&files)
    ))
}
