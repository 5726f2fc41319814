//! Config-driven experiments: stationary branches, spectra, dynamic
//! instability runs and σ sweeps, each writing a JSON report plus CSV and
//! SVG files into the output directory.

pub mod config;
pub mod plot;
pub mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use mvstab::fokkerplanck::{fp_evolve, FpGrid, FpRun, FpState};
use mvstab::metrics::{w1_density, w1_samples_to_law, weighted_dual_norm_lb, WeightedNormConfig};
use mvstab::numerics::{fit_exp_rate, value_window};
use mvstab::particles::{dt_bound, evolve, Ensemble, Observer, SimConfig};
use mvstab::perturb::{
    default_truncation, direction_at, direction_values, perturbed_measure, sample_measure, truncate_center, Direction,
};
use mvstab::spectrum::{secular_function, SpectralAnalysis, Verdict};
use mvstab::stationary::{critical_sigma, default_scan_range, self_consistent_roots, GridLaw, GridSpec};
use mvstab::Model;

use config::{AutoOr, DirectionName, Dump, Engine, ExperimentConfig};
use plot::{Chart, Line};
use report::*;

/// How a finished command should exit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    Inconclusive,
}

impl Outcome {
    pub fn exit_code(self) -> u8 {
        match self {
            Outcome::Success => 0,
            Outcome::Inconclusive => 2,
        }
    }
}

/// Output directory plus the files written so far.
struct Output {
    dir: PathBuf,
    files: Vec<String>,
}

impl Output {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        self.dir.join(name)
    }

    fn write(&mut self, name: &str, contents: &[u8]) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("csv: {e}"))?;
        self.write(name, &bytes)
    }

    fn svg(&mut self, name: &str, chart: &Chart) -> Result<()> {
        self.write(name, chart.to_svg().as_bytes())
    }

    /// Writes the report (files listed first, so it lists itself) and the
    /// manifest with its timestamp.
    fn finish<R: serde::Serialize>(mut self, name: &str, command: &str, build: impl FnOnce(Vec<String>) -> R) -> Result<()> {
        self.path(name);
        let report = build(self.files.clone());
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        fs::write(self.dir.join(name), text)?;
        write_manifest(&self.dir, command, &self.files)
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn grid_spec(cfg: &ExperimentConfig) -> GridSpec<f64> {
    let mut g = GridSpec {
        order: cfg.grid.order,
        ..GridSpec::default()
    };
    if let Some(l) = cfg.grid.half_width.value() {
        g = g.with_half_width(l);
    }
    if let Some(n) = cfg.grid.n_nodes {
        g = g.with_panels(n.div_ceil(cfg.grid.order));
    }
    g
}

/// The configured model and, when it was needed or requested, `σ_c`.
fn resolve_model(cfg: &ExperimentConfig, want_critical: bool) -> Result<(Model, Option<f64>)> {
    let m = &cfg.model;
    let placeholder = if m.sigma_factor.is_some() { Some(1.0) } else { m.sigma };
    let base = Model::from_name(&m.name, m.beta, placeholder)?;
    let sigma_c = if want_critical || m.sigma_factor.is_some() {
        let [a, b] = cfg.stationary.sigma_range;
        critical_sigma(&base, (a, b), cfg.stationary.n_sigma.max(2), &grid_spec(cfg))?.sigma_c
    } else {
        None
    };
    let model = match m.sigma_factor {
        Some(f) => {
            let sc = sigma_c.with_context(|| {
                format!(
                    "sigma_factor needs a critical sigma, but S0 = 1 is not crossed on {:?}",
                    cfg.stationary.sigma_range
                )
            })?;
            base.with_sigma(f * sc)?
        }
        None => base,
    };
    Ok((model, sigma_c))
}

fn model_info(model: &Model, sigma_c: Option<f64>) -> ModelInfo {
    ModelInfo {
        name: model.name().to_string(),
        beta: model.beta(),
        sigma: Some(model.sigma()),
        sigma_c,
    }
}

fn roots(cfg: &ExperimentConfig, model: &Model) -> Result<mvstab::stationary::SelfConsistencyReport<f64>> {
    let scan = cfg
        .stationary
        .scan
        .map(|[a, b]| (a, b))
        .unwrap_or_else(|| default_scan_range(model));
    Ok(self_consistent_roots(model, scan, cfg.stationary.n_scan, &grid_spec(cfg))?)
}

pub fn cmd_stationary(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Outcome> {
    let (model, sigma_c) = resolve_model(cfg, cfg.stationary.critical)?;
    let rep = roots(cfg, &model)?;
    let mut out = Output::new(out_dir)?;
    out.csv(
        "psi.csv",
        &["m", "psi"],
        rep.psi_scan.iter().map(|&(m, p)| vec![num(m), num(p)]),
    )?;
    out.svg(
        "psi.svg",
        &Chart {
            title: format!("self-consistency, {}", model.name()),
            x_label: "m".into(),
            y_label: "psi(m)".into(),
            log_y: false,
            lines: vec![Line::new("psi", rep.psi_scan.clone())],
        },
    )?;
    let roots = rep
        .roots
        .iter()
        .map(|r| RootInfo {
            m: r.m,
            s0: r.s0,
            fold: r.fold,
        })
        .collect();
    out.finish("stationary.json", "stationary", |files| StationaryReport {
        schema_version: SCHEMA_VERSION,
        command: "stationary".into(),
        model: model_info(&model, sigma_c),
        branch_count: rep.branch_count,
        roots,
        files,
    })?;
    Ok(Outcome::Success)
}

fn root_analysis(an: &SpectralAnalysis<f64>, n_listed: usize) -> RootSpectrum {
    let mode = &an.mode;
    RootSpectrum {
        m: an.gibbs.m(),
        s0: an.s0,
        half_width: an.gibbs.rule().upper(),
        degree: an.basis.degree(),
        lambda_i: an.spectrum.values.iter().take(n_listed).copied().collect(),
        lambda_star: mode.lambda_star,
        lambda0: Complex {
            re: mode.lambda0.re,
            im: mode.lambda0.im,
        },
        k0: mode.k0,
        multiplicity_warning: mode.multiplicity_warning,
        verdict: mode.verdict.as_str().to_string(),
        f_star: mode.f_star.clone(),
    }
}

pub fn cmd_spectrum(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Outcome> {
    let (model, sigma_c) = resolve_model(cfg, cfg.stationary.critical)?;
    let rep = roots(cfg, &model)?;
    let mut chosen: Vec<f64> = rep.root_values();
    if let Some(target) = cfg.spectrum.root {
        let nearest = chosen
            .iter()
            .copied()
            .min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))
            .context("no stationary roots found")?;
        chosen = vec![nearest];
    }
    if chosen.is_empty() {
        bail!("no stationary roots found on the scan interval");
    }
    let grid = grid_spec(cfg);
    let analyses = chosen
        .iter()
        .map(|&m| SpectralAnalysis::run(&model, m, &grid, cfg.spectrum.degree).map_err(Into::into))
        .collect::<Result<Vec<_>>>()?;

    let mut out = Output::new(out_dir)?;
    let n = cfg.spectrum.secular_points;
    let lambdas: Vec<f64> = (0..n)
        .map(|k| cfg.spectrum.secular_max * k as f64 / (n - 1) as f64)
        .collect();
    let mut rows = Vec::new();
    let mut lines = Vec::new();
    for (i, an) in analyses.iter().enumerate() {
        let curve: Vec<(f64, f64)> = lambdas
            .iter()
            .map(|&l| (l, secular_function(&an.spectrum, &an.coupling, l)))
            .collect();
        rows.extend(curve.iter().map(|&(l, s)| vec![i.to_string(), num(an.gibbs.m()), num(l), num(s)]));
        lines.push(Line::new(format!("m = {:.4}", an.gibbs.m()), curve));
    }
    lines.push(Line::new("S = 1", vec![(0.0, 1.0), (cfg.spectrum.secular_max, 1.0)]));
    out.csv("secular.csv", &["root", "m", "lambda", "S"], rows)?;
    out.svg(
        "secular.svg",
        &Chart {
            title: format!("secular function, {}", model.name()),
            x_label: "lambda".into(),
            y_label: "S(lambda)".into(),
            log_y: false,
            lines,
        },
    )?;
    let mut rows = Vec::new();
    for (i, an) in analyses.iter().enumerate() {
        if let Some(fs) = &an.mode.f_star {
            let vals = an.eigen_series_at_nodes(fs);
            rows.extend(
                an.gibbs
                    .nodes()
                    .iter()
                    .zip(vals)
                    .map(|(&x, v)| vec![i.to_string(), num(x), num(v)]),
            );
        }
    }
    out.csv("f_star.csv", &["root", "x", "f_star"], rows)?;

    let roots = analyses.iter().map(|an| root_analysis(an, cfg.spectrum.n_listed)).collect();
    out.finish("spectrum.json", "spectrum", |files| SpectrumReport {
        schema_version: SCHEMA_VERSION,
        command: "spectrum".into(),
        model: model_info(&model, sigma_c),
        roots,
        files,
    })?;
    Ok(Outcome::Success)
}

/// Custom direction: CSV `x,h` interpolated linearly onto the nodes.
fn read_custom_direction(path: &Path, nodes: &[f64]) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != 2 {
            bail!("{}: expected two columns x,h", path.display());
        }
        pts.push((rec[0].trim().parse()?, rec[1].trim().parse()?));
    }
    if pts.len() < 2 {
        bail!("{}: need at least two points", path.display());
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(nodes
        .iter()
        .map(|&x| {
            let k = pts.partition_point(|p| p.0 <= x);
            if k == 0 {
                pts[0].1
            } else if k == pts.len() {
                pts[k - 1].1
            } else {
                let (a, b) = (pts[k - 1], pts[k]);
                a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0)
            }
        })
        .collect())
}

struct Trace {
    /// `(t, m, pairing, w1)`.
    rows: Vec<[f64; 4]>,
}

impl Trace {
    fn pairs(&self, col: usize) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r[0], r[col])).collect()
    }
}

/// Fitted rate of `|pairing|` over `[2c, 10c]`, `c` the initial value.
fn fit_trace(trace: &Trace) -> Option<(f64, (f64, f64))> {
    let abs: Vec<(f64, f64)> = trace.rows.iter().map(|r| (r[0], r[2].abs())).collect();
    let c = abs.first()?.1;
    if !(c > 0.0) {
        return None;
    }
    let window = value_window(&abs, 2.0 * c, 10.0 * c)?;
    fit_exp_rate(&abs, window).ok().map(|r| (r, window))
}

fn escape_time(trace: &Trace, m_s: f64, band: f64) -> Option<f64> {
    trace.rows.iter().find(|r| (r[1] - m_s).abs() >= band).map(|r| r[0])
}

fn nearest(values: &[f64], x: f64) -> Option<f64> {
    values
        .iter()
        .copied()
        .min_by(|a, b| (a - x).abs().total_cmp(&(b - x).abs()))
}

pub fn cmd_instability(cfg: &ExperimentConfig, out_dir: &Path, seed: u64) -> Result<Outcome> {
    let (model, sigma_c) = resolve_model(cfg, cfg.stationary.critical)?;
    let rep = roots(cfg, &model)?;
    let root_values = rep.root_values();
    let grid = grid_spec(cfg);
    let mut out = Output::new(out_dir)?;
    let base_report = |status: &str, note: &str| InstabilityReport {
        schema_version: SCHEMA_VERSION,
        command: "instability".into(),
        model: model_info(&model, sigma_c),
        status: status.into(),
        note: note.into(),
        ..InstabilityReport::default()
    };

    let an = match cfg.spectrum.root {
        Some(target) => {
            let m = nearest(&root_values, target).context("no stationary roots found")?;
            SpectralAnalysis::run(&model, m, &grid, cfg.spectrum.degree)?
        }
        None => {
            let mut found = None;
            for &m in &root_values {
                let an = SpectralAnalysis::run(&model, m, &grid, cfg.spectrum.degree)?;
                if an.mode.verdict == Verdict::Unstable {
                    found = Some(an);
                    break;
                }
            }
            match found {
                Some(an) => an,
                None => {
                    let r = base_report("no-unstable-mode", "no stationary root has an unstable mode");
                    out.finish("instability.json", "instability", |files| InstabilityReport { files, ..r })?;
                    return Ok(Outcome::Success);
                }
            }
        }
    };
    let m_s = an.gibbs.m();
    if an.mode.verdict != Verdict::Unstable {
        let r = InstabilityReport {
            root: Some(m_s),
            lambda_star: an.mode.lambda_star,
            ..base_report("no-unstable-mode", "the selected root has no unstable mode")
        };
        out.finish("instability.json", "instability", |files| InstabilityReport { files, ..r })?;
        return Ok(Outcome::Success);
    }

    let direction = match cfg.perturbation.direction {
        DirectionName::AdjointRe => Direction::AdjointRe,
        DirectionName::AdjointIm => Direction::AdjointIm,
        DirectionName::CustomFile => {
            let file = cfg.perturbation.file.as_ref().context("custom direction needs a file")?;
            Direction::Custom(read_custom_direction(file, an.gibbs.nodes())?)
        }
    };
    let Some(h) = direction_values(&an, &direction)? else {
        let r = InstabilityReport {
            root: Some(m_s),
            lambda_star: an.mode.lambda_star,
            ..base_report(
                "skipped",
                "the imaginary part of the adjoint vector vanishes for a real dominant eigenvalue",
            )
        };
        out.finish("instability.json", "instability", |files| InstabilityReport { files, ..r })?;
        return Ok(Outcome::Success);
    };
    let truncated = match cfg.perturbation.level {
        AutoOr::Auto => default_truncation(&an.gibbs, &h)?,
        AutoOr::Value(level) => truncate_center(&an.gibbs, &h, level)?,
    };
    let delta = cfg.perturbation.delta;
    let law = perturbed_measure(&an.gibbs, &truncated.values, delta)?;

    // Growth observable: f*, or the real part of the right eigenvector.
    let observable: Vec<f64> = match &an.mode.f_star {
        Some(fs) => fs.clone(),
        None => an.mode.right_vec.iter().map(|z| z.re).collect(),
    };
    let obs_poly = an.spectrum.to_polynomial(&observable);
    let obs_nodes = an.basis.series_at_nodes(&obs_poly);
    let obs_mean = an.gibbs.expect_values(&obs_nodes);

    let metric = WeightedNormConfig::new(cfg.metric.p0, cfg.metric.phi0)?.with_default_dictionary(
        an.gibbs.nodes(),
        cfg.metric.knots,
        vec![
            ("f_star".into(), obs_nodes.clone()),
            ("g".into(), an.gibbs.nodes().iter().map(|&x| model.g(x)).collect()),
        ],
    );
    let norm_lb = weighted_dual_norm_lb(&law, &an.gibbs, &metric)?;
    let band = 10.0 * delta;

    let mut runs = Vec::new();
    let traces: Vec<(String, Trace)> = match cfg.simulation.engine {
        Engine::Fp => {
            let fgrid = FpGrid::for_model(&model, m_s, cfg.simulation.fp_cells)?;
            let base = FpState::stationary(&fgrid, &model, m_s)?;
            let h_cells = direction_at(&an, &direction, fgrid.centers())?.context("direction vanishes on the grid")?;
            let init = FpState::perturbed(&fgrid, &model, &base, &h_cells, truncated.level, delta)?;
            let dt = match cfg.simulation.dt {
                AutoOr::Auto => FpRun::default_dt(&model, m_s)?,
                AutoOr::Value(dt) => dt,
            };
            let run = FpRun {
                t_end: cfg.simulation.t_end,
                dt,
                stride: ((cfg.simulation.record_every / dt).round() as usize).max(1),
                keep_frames: true,
            };
            let f_cells = fgrid.tabulate(|x| an.basis.eval_series(&obs_poly, x));
            let f_base = fgrid.integrate(&f_cells, &base.rho);
            let stop = cfg.simulation.stop_band.map(|b| move |_t: f64, m: f64, _f: &[f64]| (m - m_s).abs() >= b);
            let traj = fp_evolve(
                &init,
                &model,
                &fgrid,
                &run,
                &[("f".into(), f_cells)],
                stop.as_ref().map(|s| s as &dyn Fn(f64, f64, &[f64]) -> bool),
            )?;
            let edges = fgrid.edges();
            let target = fgrid.cdf(&base.rho);
            let ms = traj.series.channel("m").context("m channel")?;
            let fs = traj.series.channel("f").context("f channel")?;
            let mut rows = Vec::with_capacity(ms.len());
            for ((t, rho), (&m, &f)) in traj.frames.iter().zip(ms.iter().zip(fs)) {
                let w = w1_density(&edges, &fgrid.cdf(rho), &target)?;
                rows.push([*t, m, f - f_base, w]);
            }
            if cfg.simulation.dump_frames {
                let centers = fgrid.centers();
                out.csv(
                    "frames.csv",
                    &["t", "x", "rho"],
                    traj.frames.iter().flat_map(|(t, rho)| {
                        centers.iter().zip(rho).map(move |(&x, &r)| vec![num(*t), num(x), num(r)])
                    }),
                )?;
            }
            let trace = Trace { rows };
            let fit = fit_trace(&trace);
            let last = trace.rows.last().copied().unwrap_or([0.0; 4]);
            runs.push(RunSummary {
                seed: None,
                initial_pairing: trace.rows[0][2],
                fitted_rate: fit.map(|f| f.0),
                fit_window: fit.map(|f| [f.1 .0, f.1 .1]),
                escape_time: escape_time(&trace, m_s, band),
                final_m: last[1],
                final_branch: nearest(&root_values, last[1]),
                sign_match: Some((last[1] - m_s).signum() == trace.rows[0][2].signum()),
                w1_initial: trace.rows[0][3],
                w1_final: last[3],
            });
            vec![("fp".into(), trace)]
        }
        Engine::Particles => {
            let dt = match cfg.simulation.dt {
                AutoOr::Auto => dt_bound(&model, m_s)?,
                AutoOr::Value(dt) => dt,
            };
            let config = SimConfig {
                dt,
                t_end: cfg.simulation.t_end,
                stride: ((cfg.simulation.record_every / dt).round() as usize).max(1),
                noise: true,
            };
            config.validate(&model, m_s)?;
            let basis = Arc::new(an.basis.clone());
            let poly = Arc::new(obs_poly.clone());
            let observer = {
                let (basis, poly) = (basis.clone(), poly.clone());
                Observer::new("f", move |x: f64| basis.eval_series(&poly, x))
            };
            let mut traces = Vec::new();
            for r in 0..cfg.simulation.runs {
                let run_seed = seed.wrapping_add(r as u64);
                let xs = sample_measure(&law, cfg.simulation.n_particles, run_seed);
                let ens = Ensemble::new(&model, xs, run_seed)?;
                let mut w1s = Vec::new();
                let mut w1_err = None;
                let mut on_record = |e: &Ensemble<f64>| match w1_samples_to_law(&e.positions, &an.gibbs) {
                    Ok(w) => w1s.push(w),
                    Err(err) => w1_err = Some(err),
                };
                let stop = cfg.simulation.stop_band.map(|b| move |e: &Ensemble<f64>| (e.m_hat - m_s).abs() >= b);
                let outcome = evolve(
                    &ens,
                    &model,
                    &config,
                    std::slice::from_ref(&observer),
                    stop.as_ref().map(|s| s as &dyn Fn(&Ensemble<f64>) -> bool),
                    Some(&mut on_record),
                )?;
                if let Some(err) = w1_err {
                    return Err(err.into());
                }
                let ts = outcome.series.times();
                let ms = outcome.series.channel("m_hat").context("m_hat channel")?;
                let fs = outcome.series.channel("f").context("f channel")?;
                let rows: Vec<[f64; 4]> = (0..ts.len()).map(|k| [ts[k], ms[k], fs[k] - obs_mean, w1s[k]]).collect();
                let trace = Trace { rows };
                let fit = fit_trace(&trace);
                let last = trace.rows.last().copied().unwrap_or([0.0; 4]);
                runs.push(RunSummary {
                    seed: Some(run_seed),
                    initial_pairing: trace.rows[0][2],
                    fitted_rate: fit.map(|f| f.0),
                    fit_window: fit.map(|f| [f.1 .0, f.1 .1]),
                    escape_time: escape_time(&trace, m_s, band),
                    final_m: last[1],
                    final_branch: nearest(&root_values, last[1]),
                    sign_match: Some((last[1] - m_s).signum() == trace.rows[0][2].signum()),
                    w1_initial: trace.rows[0][3],
                    w1_final: last[3],
                });
                match cfg.simulation.dump_positions {
                    Dump::None => {}
                    Dump::Binary => {
                        let name = format!("positions_run{r}.f64");
                        let path = out.path(&name);
                        outcome.last.write_snapshot(&path)?;
                        out.path(&format!("positions_run{r}.json"));
                    }
                    Dump::Csv => {
                        let mut buf = Vec::new();
                        outcome.last.write_positions_csv(&mut buf)?;
                        out.write(&format!("positions_run{r}.csv"), &buf)?;
                    }
                }
                traces.push((format!("run{r}"), trace));
            }
            traces
        }
    };

    for (name, trace) in &traces {
        out.csv(
            &format!("series_{name}.csv"),
            &["t", "m", "pairing", "w1"],
            trace.rows.iter().map(|r| r.iter().map(|&v| num(v)).collect()),
        )?;
    }
    let lambda_star = an.mode.lambda_star;
    let mut lines: Vec<Line> = traces
        .iter()
        .map(|(name, t)| Line::new(name.clone(), t.rows.iter().map(|r| (r[0], r[2].abs())).collect()))
        .collect();
    if let (Some(ls), Some((_, first))) = (lambda_star, traces.first()) {
        let c = first.rows[0][2].abs();
        let t_max = first.rows.last().map_or(0.0, |r| r[0]);
        let pred: Vec<(f64, f64)> = (0..=100)
            .map(|k| {
                let t = t_max * k as f64 / 100.0;
                (t, c * (ls * t).exp())
            })
            .collect();
        lines.push(Line::new("c exp(lambda* t)", pred));
    }
    out.svg(
        "instability.svg",
        &Chart {
            title: format!("escape from m = {m_s:.4}"),
            x_label: "t".into(),
            y_label: "|pairing with f*|".into(),
            log_y: true,
            lines,
        },
    )?;
    out.svg(
        "coupling.svg",
        &Chart {
            title: "coupling m_t".into(),
            x_label: "t".into(),
            y_label: "m".into(),
            log_y: false,
            lines: traces.iter().map(|(n, t)| Line::new(n.clone(), t.pairs(1))).collect(),
        },
    )?;

    let mut rates: Vec<f64> = runs.iter().filter_map(|r| r.fitted_rate).collect();
    rates.sort_by(f64::total_cmp);
    let fitted_rate = if rates.is_empty() {
        None
    } else if rates.len() % 2 == 1 {
        Some(rates[rates.len() / 2])
    } else {
        Some(0.5 * (rates[rates.len() / 2 - 1] + rates[rates.len() / 2]))
    };
    let relative_error = match (fitted_rate, lambda_star) {
        (Some(r), Some(ls)) => Some((r - ls).abs() / ls),
        _ => None,
    };
    let conclusive = fitted_rate.is_some();
    let sign_matches = runs.iter().filter(|r| r.sign_match == Some(true)).count();
    let escape = runs.iter().filter_map(|r| r.escape_time).reduce(f64::min);
    let final_m = runs.first().map(|r| r.final_m);
    let r = InstabilityReport {
        root: Some(m_s),
        engine: Some(cfg.simulation.engine),
        delta: Some(delta),
        truncation_level: Some(truncated.level),
        gamma: Some(truncated.gamma),
        direction: Some(cfg.perturbation.direction),
        lambda_star,
        fitted_rate,
        relative_error,
        escape_time: escape,
        final_m,
        final_branch: final_m.and_then(|m| nearest(&root_values, m)),
        sign_matches: Some(sign_matches),
        weighted_norm_lb_initial: Some(norm_lb),
        runs,
        ..base_report(
            if conclusive { "ok" } else { "inconclusive" },
            if conclusive {
                ""
            } else {
                "the pairing never crossed the fit window [2c, 10c] before t_end"
            },
        )
    };
    out.finish("instability.json", "instability", |files| InstabilityReport { files, ..r })?;
    Ok(if conclusive { Outcome::Success } else { Outcome::Inconclusive })
}

pub fn cmd_sweep(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Outcome> {
    let [a, b] = cfg.sweep.sigma_range;
    let model = Model::from_name(&cfg.model.name, cfg.model.beta, Some(a))?;
    let grid = grid_spec(cfg);
    let n = cfg.sweep.n_sigma;
    let sigmas: Vec<f64> = (0..n)
        .map(|k| if n == 1 { a } else { a + (b - a) * k as f64 / (n - 1) as f64 })
        .collect();
    let points: Vec<SweepPoint> = sigmas
        .par_iter()
        .map(|&s| -> Result<SweepPoint> {
            let m = model.with_sigma(s)?;
            let rep = roots(cfg, &m)?;
            let mut branches = Vec::new();
            for r in &rep.roots {
                let an = SpectralAnalysis::run(&m, r.m, &grid, cfg.sweep.degree)?;
                branches.push(SweepBranch {
                    m: r.m,
                    s0: r.s0,
                    lambda_star: an.mode.lambda_star,
                });
            }
            Ok(SweepPoint {
                sigma: s,
                branch_count: rep.branch_count,
                branches,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let sigma_c = if n >= 2 && b > a {
        critical_sigma(&model, (a, b), n, &grid)?.sigma_c
    } else {
        None
    };

    let mut out = Output::new(out_dir)?;
    let rows = points.iter().flat_map(|p| {
        p.branches.iter().enumerate().map(move |(i, br)| {
            vec![
                num(p.sigma),
                p.branch_count.to_string(),
                i.to_string(),
                num(br.m),
                num(br.s0),
                opt(br.lambda_star),
            ]
        })
    });
    out.csv(
        "bifurcation.csv",
        &["sigma", "branch_count", "branch", "m", "S0", "lambda_star"],
        rows,
    )?;
    let extreme = |pick: fn(f64, f64) -> f64| -> Vec<(f64, f64)> {
        points
            .iter()
            .filter(|p| !p.branches.is_empty())
            .map(|p| (p.sigma, p.branches.iter().map(|b| b.m).fold(p.branches[0].m, pick)))
            .collect()
    };
    out.svg(
        "bifurcation.svg",
        &Chart {
            title: format!("stationary branches, {}", model.name()),
            x_label: "sigma".into(),
            y_label: "m".into(),
            log_y: false,
            lines: vec![Line::new("largest root", extreme(f64::max)), Line::new("smallest root", extreme(f64::min))],
        },
    )?;
    out.finish("sweep.json", "sweep", |files| SweepReport {
        schema_version: SCHEMA_VERSION,
        command: "sweep".into(),
        model: ModelInfo {
            sigma: None,
            ..model_info(&model, sigma_c)
        },
        points,
        files,
    })?;
    Ok(Outcome::Success)
}
