//! Command implementations.

mod presets;

use std::fs::{self, File};
use std::io::{BufWriter, Write as _};
use std::path::{Path, PathBuf};

use gdvt::config::{ExperimentConfig, ResidualsSection};
use gdvt::energy::ModelKind;
use gdvt::estimation::{fit, summarize, FitResult};
use gdvt::geometry::Tessellation;
use gdvt::io::{self as gio, Layer};
use gdvt::residuals::{qq_diagnostic, Fitted, GridSettings, QqSettings, ResidualGrid, TestFunction};
use gdvt::sampler::{replicate, run, ProposalParams, RunOutput, Target};
use gdvt::{Error, Result};

use crate::{EstimateArgs, QqArgs, ResidualArgs, ResidualInput, SimulateArgs};

pub use presets::reproduce;

/// Provenance shared by every file one command writes.
pub(crate) struct Provenance {
    command: String,
    config_sha256: String,
    seed: u64,
}

impl Provenance {
    pub(crate) fn new(config_text: &str, seed: u64) -> Self {
        let args: Vec<String> = std::env::args().collect();
        Self {
            command: args.join(" "),
            config_sha256: gio::sha256_hex(config_text.as_bytes()),
            seed,
        }
    }

    pub(crate) fn write(&self, path: &Path, contents: &str) -> Result<()> {
        gio::write_with_manifest(path, contents, &self.command, &self.config_sha256, self.seed)?;
        eprintln!("wrote {}", path.display());
        Ok(())
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Config {
        location: path.display().to_string(),
        message: format!("cannot read: {e}"),
    })
}

/// `dir/stem_NNN.ext` for replication `i`.
fn suffixed(path: &Path, i: usize) -> PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_{i:03}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{i:03}"),
    };
    path.with_file_name(name)
}

pub(crate) fn layer_for(kind: ModelKind) -> Layer {
    match kind {
        ModelKind::VolumeRatio { .. } => Layer::Voronoi,
        _ => Layer::Delaunay,
    }
}

/// Writes the outputs of one finished chain.
pub(crate) fn write_run(
    prov: &Provenance,
    config: &ExperimentConfig,
    out: &RunOutput,
    points: Option<&Path>,
    trace: Option<&Path>,
    svg: Option<&Path>,
) -> Result<()> {
    if let Some(p) = points {
        prov.write(p, &gio::points_csv(&out.config))?;
    }
    if let Some(p) = trace {
        prov.write(p, &gio::trace_csv(&out.trace))?;
    }
    if let Some(p) = svg {
        let tess = Tessellation::build(&out.config)?;
        prov.write(p, &gio::tessellation_svg(&tess, layer_for(config.model.kind), &[]))?;
    }
    Ok(())
}

/// Streams trace records to `path` as they arrive.
struct TraceSink(Option<BufWriter<File>>);

impl TraceSink {
    fn open(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(Self(None)) };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(b"block,births,deaths,moves,total\n")?;
        Ok(Self(Some(w)))
    }

    fn push(&mut self, r: &gdvt::sampler::MonitoringRecord) {
        if let Some(w) = &mut self.0 {
            let line = format!("{},{},{},{},{}\n", r.block, r.births, r.deaths, r.moves, r.total);
            if w.write_all(line.as_bytes()).and_then(|()| w.flush()).is_err() {
                self.0 = None;
            }
        }
    }
}

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    let text = read_text(&a.config)?;
    let mut config = ExperimentConfig::parse(&text)?;
    if let Some(n) = a.iters {
        config.sampler.iters = Some(n);
    }
    if let Some(s) = a.seed {
        config.sampler.seed = s;
    }
    if let Some(s) = a.sigma {
        ProposalParams::with_sigma(s)?;
        config.sampler.sigma = s;
    }
    if let Some(m) = a.monitor_every {
        config.sampler.monitor_every = m;
    }
    if let Some(r) = a.replications {
        config.sampler.replications = r;
    }
    let target = Target {
        model: &config.model,
        theta: config.theta,
        intensity: config.intensity,
    };
    let settings = config.run_settings();
    let replications = config.sampler.replications;
    if replications <= 1 && a.replications.is_none() {
        let prov = Provenance::new(&text, settings.seed);
        let mut sink = TraceSink::open(a.out_trace.as_deref())?;
        let out = run(&target, &config.proposal(), settings, |r| sink.push(r))?;
        drop(sink);
        eprintln!("points={} statistic={} iterations={}", out.config.len(), out.statistic, settings.iterations);
        if a.out_points.is_none() {
            print!("{}", gio::points_csv(&out.config));
        }
        return write_run(&prov, &config, &out, a.out_points.as_deref(), a.out_trace.as_deref(), a.out_svg.as_deref());
    }
    let seed_base = a.seed_base.unwrap_or(settings.seed);
    let prov = Provenance::new(&text, seed_base);
    let outputs = replicate(replications, seed_base, &target, &config.proposal(), settings);
    let mut failures = Vec::new();
    for (i, out) in outputs.into_iter().enumerate() {
        match out {
            Ok(out) => {
                println!("replication={i} seed={} points={}", seed_base + i as u64, out.config.len());
                let name = |p: &Option<PathBuf>| p.as_deref().map(|p| suffixed(p, i));
                write_run(
                    &prov,
                    &config,
                    &out,
                    name(&a.out_points).as_deref(),
                    name(&a.out_trace).as_deref(),
                    name(&a.out_svg).as_deref(),
                )?;
            }
            Err(e) => {
                eprintln!("replication {i} failed: {e}");
                failures.push(e);
            }
        }
    }
    match failures.into_iter().next() {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

pub(crate) fn shape_note(result: &FitResult, threshold: f64) -> Option<String> {
    let b = result.model.hardcore.shape?;
    (b > threshold).then(|| format!("fitted shape bound {b} exceeds {threshold}: effectively inactive"))
}

pub fn estimate(a: &EstimateArgs) -> Result<()> {
    let text = read_text(&a.model)?;
    let mut config = ExperimentConfig::parse(&text)?;
    if a.z_known.is_some() {
        config.estimation.z_known = a.z_known;
    }
    if let Some(n) = a.mc_samples {
        config.estimation.mc_samples = n;
    }
    if let Some(s) = a.seed {
        config.estimation.seed = s;
    }
    if a.erosion.is_some() {
        config.estimation.erosion = a.erosion;
    }
    let options = config.fit_options();
    let prov = Provenance::new(&text, options.seed);
    if a.points.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(&a.points)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(Error::InvalidInput(format!("no .csv files in {}", a.points.display())));
        }
        let results: Vec<Result<FitResult>> = files
            .iter()
            .map(|f| gio::read_points(f).and_then(|c| fit(&c, &config.model, &options)))
            .collect();
        let mut table = String::from("file,points,removable,theta,z\n");
        for (f, r) in files.iter().zip(&results) {
            let name = f.file_name().unwrap_or_default().to_string_lossy();
            match r {
                Ok(r) => {
                    let theta = r.theta.map_or_else(|| "none".into(), |t| t.to_string());
                    table.push_str(&format!("{name},{},{},{theta},{}\n", r.points, r.removable, r.z));
                }
                Err(e) => eprintln!("{name}: {e}"),
            }
        }
        let summary = format!("{}\n{table}", summarize(&results));
        return match &a.out {
            Some(p) => prov.write(p, &summary),
            None => {
                print!("{summary}");
                Ok(())
            }
        };
    }
    let points = gio::read_points(&a.points)?;
    let result = fit(&points, &config.model, &options)?;
    if let Some(note) = shape_note(&result, a.inactive_shape_above) {
        eprintln!("note: {note}");
    }
    match &a.out {
        Some(p) => prov.write(p, &result.to_string()),
        None => {
            print!("{result}");
            Ok(())
        }
    }
}

/// Data, fit and grid settings shared by `residuals` and `qqplot`.
struct Loaded {
    points: gdvt::geometry::PointConfiguration,
    fit: FitResult,
    section: ResidualsSection,
    grid: GridSettings,
    provenance_text: String,
}

fn load_residual_input(input: &ResidualInput) -> Result<(Loaded, Option<ExperimentConfig>)> {
    let fit_text = read_text(&input.fit)?;
    let fit: FitResult = fit_text.parse()?;
    let points = gio::read_points(&input.points)?;
    let (config, config_text) = match &input.config {
        Some(p) => {
            let t = read_text(p)?;
            (Some(ExperimentConfig::parse(&t)?), t)
        }
        None => (None, String::new()),
    };
    let mut section = config.as_ref().map(|c| c.residuals.clone()).unwrap_or_default();
    if let Some(s) = input.grid_side {
        section.grid_side = s;
    }
    if let Some(m) = input.mc_per_square {
        section.mc_per_square = m;
    }
    if let Some(t) = &input.test_function {
        section.test_function = t.clone();
    }
    if let Some(s) = input.seed {
        section.seed = s;
    }
    let grid = GridSettings {
        side: section.grid_side,
        mc_per_square: section.mc_per_square,
        psi: section.test_function.parse::<TestFunction>()?,
        seed: section.seed,
    };
    Ok((
        Loaded {
            points,
            fit,
            section,
            grid,
            provenance_text: format!("{fit_text}{config_text}"),
        },
        config,
    ))
}

fn smoothed_csv(grid: &ResidualGrid, values: &[f64]) -> String {
    let mut out = String::from("i,j,value\n");
    for row in 0..grid.rows {
        for column in 0..grid.columns {
            out.push_str(&format!("{column},{row},{}\n", values[row * grid.columns + column]));
        }
    }
    out
}

pub fn residuals(a: &ResidualArgs) -> Result<()> {
    let (l, _) = load_residual_input(&a.input)?;
    let prov = Provenance::new(&l.provenance_text, l.grid.seed);
    let grid = ResidualGrid::compute(&l.points, &Fitted::from(&l.fit), &l.fit.window, &l.grid)?;
    println!("squares={} total={}", grid.values.len(), grid.total());
    if let Some(p) = &a.out_grid {
        prov.write(p, &grid.to_csv())?;
    }
    if let Some(p) = &a.out_svg {
        prov.write(p, &gio::heatmap_svg(&grid))?;
    }
    if let Some(p) = &a.out_smoothed {
        let values = grid.smoothed(a.bandwidth.unwrap_or(l.section.bandwidth))?;
        prov.write(p, &smoothed_csv(&grid, &values))?;
    }
    Ok(())
}

pub fn qqplot(a: &QqArgs) -> Result<()> {
    let (l, config) = load_residual_input(&a.input)?;
    let proposal = config.as_ref().map(|c| c.proposal()).unwrap_or_default();
    let settings = QqSettings {
        grid: l.grid,
        n_boot: a.n_boot.unwrap_or(l.section.n_boot),
        iters_per_boot: a.iters_per_boot.or(l.section.iters_per_boot),
        proposal,
        seed: l.section.seed,
    };
    if settings.n_boot == 0 {
        return Err(Error::Config { location: "--n-boot".into(), message: "must be positive".into() });
    }
    let prov = Provenance::new(&l.provenance_text, settings.seed);
    let env = qq_diagnostic(&l.points, &Fitted::from(&l.fit), &l.fit.window, &settings)?;
    println!("outside={} p={} n_boot={}", env.observed_outside(), env.p_value(), settings.n_boot);
    if let Some(p) = &a.out_qq {
        prov.write(p, &env.to_csv())?;
    }
    if let Some(p) = &a.out_svg {
        prov.write(p, &gio::qq_svg(&env))?;
    }
    Ok(())
}
