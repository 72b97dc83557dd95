//! Named presets that regenerate figure data.

use std::f64::consts::FRAC_PI_6;
use std::fmt::Write as _;
use std::path::PathBuf;

use gdvt::config::ExperimentConfig;
use gdvt::energy::removable_set;
use gdvt::estimation::{fit, summarize, FitOptions, FitResult};
use gdvt::geometry::{PointConfiguration, Tessellation};
use gdvt::io::{self as gio, Layer};
use gdvt::residuals::{qq_diagnostic, Fitted, GridSettings, QqSettings, ResidualGrid};
use gdvt::sampler::{initial_lattice, replicate, run, RunOutput, Target};
use gdvt::{Error, Result};

use super::{layer_for, shape_note, Provenance};
use crate::ReproduceArgs;

/// Monte Carlo points per residual square in the residual presets.
const PRESET_MC_PER_SQUARE: usize = 10;

fn min_angle() -> String {
    format!("kind = \"min-angle\"\nmin_angle = {FRAC_PI_6:?}\n[model.radial]\nscale = 100.0\nexponent = -0.75")
}

fn perimeter(theta: f64) -> String {
    format!("kind = \"perimeter\"\nalpha = 0.08\nz = 1000.0\ntheta = {theta:?}")
}

fn volume_ratio(theta: f64, shape: Option<f64>) -> String {
    let shape = shape.map_or_else(String::new, |b| format!("shape = {b:?}\n"));
    format!("kind = \"volume-ratio\"\nalpha = 0.05\n{shape}z = 100.0\ntheta = {theta:?}")
}

/// One chain of a preset.
struct Chain {
    label: String,
    model: String,
    iters: u64,
}

impl Chain {
    fn new(label: &str, model: String, iters: u64) -> Self {
        Self { label: label.into(), model, iters }
    }

    fn config_text(&self, a: &ReproduceArgs) -> String {
        format!(
            "[model]\n{}\n\n[sampler]\niters = {}\nseed = {}\n",
            self.model,
            a.iters.unwrap_or(self.iters),
            a.seed
        )
    }
}

struct Preset<'a> {
    name: &'a str,
    args: &'a ReproduceArgs,
}

impl Preset<'_> {
    fn path(&self, label: &str, what: &str) -> PathBuf {
        self.args.out_dir.join(format!("{}_{label}_{what}", self.name))
    }

    fn simulate(&self, chain: &Chain) -> Result<(ExperimentConfig, RunOutput, Provenance)> {
        let text = chain.config_text(self.args);
        let config = ExperimentConfig::parse(&text)?;
        let target = Target { model: &config.model, theta: config.theta, intensity: config.intensity };
        eprintln!("{} {}: {} iterations", self.name, chain.label, config.iterations());
        let out = run(&target, &config.proposal(), config.run_settings(), |_| {})?;
        Ok((config, out, Provenance::new(&text, self.args.seed)))
    }

    /// Final points, trace and tessellation of each chain.
    fn tessellations(&self, chains: &[Chain]) -> Result<()> {
        for chain in chains {
            let (config, out, prov) = self.simulate(chain)?;
            let tess = Tessellation::build(&out.config)?;
            prov.write(&self.path(&chain.label, "points.csv"), &gio::points_csv(&out.config))?;
            prov.write(&self.path(&chain.label, "trace.csv"), &gio::trace_csv(&out.trace))?;
            prov.write(&self.path(&chain.label, "trace.svg"), &gio::trace_svg(&out.trace))?;
            prov.write(
                &self.path(&chain.label, "tessellation.svg"),
                &gio::tessellation_svg(&tess, layer_for(config.model.kind), &[]),
            )?;
        }
        Ok(())
    }
}

fn volume_ratio_thetas() -> Vec<Chain> {
    [(-0.8, 500_000), (-0.5, 200_000), (0.5, 200_000), (0.8, 500_000)]
        .into_iter()
        .map(|(t, n)| Chain::new(&format!("theta{t}"), volume_ratio(t, Some(0.625)), n))
        .collect()
}

fn volume_ratio_shapes() -> Vec<Chain> {
    let mut out = Vec::new();
    for t in [-0.5, 0.5] {
        out.push(Chain::new(&format!("unbounded_theta{t}"), volume_ratio(t, None), 150_000));
        out.push(Chain::new(&format!("shape1_theta{t}"), volume_ratio(t, Some(1.0)), 150_000));
    }
    out
}

/// The sample the residual presets analyse.
fn residual_sample() -> Chain {
    Chain::new("sample", volume_ratio(-0.5, None), 150_000)
}

fn estimation_study(p: &Preset<'_>, chain: Chain, z_known: f64) -> Result<()> {
    let a = p.args;
    let text = chain.config_text(a);
    let config = ExperimentConfig::parse(&text)?;
    let target = Target { model: &config.model, theta: config.theta, intensity: config.intensity };
    eprintln!("{}: {} replications of {} iterations", p.name, a.replications, config.iterations());
    let runs = replicate(a.replications, a.seed, &target, &config.proposal(), config.run_settings());
    let options = FitOptions { z_known: Some(z_known), seed: a.seed, ..FitOptions::default() };
    let mut table = String::from("replication,points,removable,removable_in_window,theta,alpha,shape\n");
    let mut results: Vec<Result<FitResult>> = Vec::new();
    for (i, out) in runs.into_iter().enumerate() {
        let result = out.and_then(|out| fit(&out.config, &config.model, &options));
        match &result {
            Ok(r) => {
                let h = r.model.hardcore;
                let opt = |v: Option<f64>| v.map_or_else(|| "none".into(), |x: f64| x.to_string());
                let _ = writeln!(
                    table,
                    "{i},{},{},{},{},{},{}",
                    r.points,
                    r.removable,
                    r.removable_in_window,
                    opt(r.theta),
                    opt(h.alpha),
                    opt(h.shape)
                );
            }
            Err(e) => eprintln!("replication {i}: {e}"),
        }
        results.push(result);
    }
    let prov = Provenance::new(&text, a.seed);
    prov.write(&p.path("study", "fits.csv"), &table)?;
    let summary = summarize(&results).to_string();
    print!("{summary}");
    prov.write(&p.path("study", "summary.txt"), &summary)
}

fn removable_figure(p: &Preset<'_>) -> Result<()> {
    for chain in [
        Chain::new("perimeter_theta5", perimeter(5.0), 200_000),
        Chain::new("volume_ratio_theta-0.5", volume_ratio(-0.5, Some(0.625)), 200_000),
    ] {
        let (config, out, prov) = p.simulate(&chain)?;
        let removable = removable_set(&out.config, &config.model)?;
        println!("{}: {} removable of {}", chain.label, removable.len(), out.config.len());
        let tess = Tessellation::build(&out.config)?;
        let kept = PointConfiguration::from_points(removable.iter().map(|&i| out.config.point(i)))?;
        prov.write(&p.path(&chain.label, "points.csv"), &gio::points_csv(&out.config))?;
        prov.write(&p.path(&chain.label, "removable.csv"), &gio::points_csv(&kept))?;
        prov.write(
            &p.path(&chain.label, "tessellation.svg"),
            &gio::tessellation_svg(&tess, layer_for(config.model.kind), &removable),
        )?;
    }
    Ok(())
}

/// Fits `template` to the residual sample and writes its residual grid,
/// heatmap and QQ comparison.
fn residual_analysis(
    p: &Preset<'_>,
    sample: &RunOutput,
    label: &str,
    template: &str,
    z_known: Option<f64>,
) -> Result<()> {
    let fit_text = format!("[model]\n{template}\n");
    let fit_config = ExperimentConfig::parse(&fit_text)?;
    let options = FitOptions { z_known, seed: p.args.seed, ..FitOptions::default() };
    let result = fit(&sample.config, &fit_config.model, &options)?;
    if let Some(note) = shape_note(&result, 50.0) {
        eprintln!("note: {note}");
    }
    let prov = Provenance::new(&format!("{}{fit_text}", residual_sample().config_text(p.args)), p.args.seed);
    prov.write(&p.path(label, "fit.txt"), &result.to_string())?;
    let fitted = Fitted::from(&result);
    let grid = GridSettings { mc_per_square: PRESET_MC_PER_SQUARE, seed: p.args.seed, ..GridSettings::default() };
    let observed = ResidualGrid::compute(&sample.config, &fitted, &result.window, &grid)?;
    prov.write(&p.path(label, "residuals.csv"), &observed.to_csv())?;
    prov.write(&p.path(label, "residuals.svg"), &gio::heatmap_svg(&observed))?;
    let settings = QqSettings {
        grid,
        n_boot: p.args.n_boot,
        iters_per_boot: p.args.iters,
        seed: p.args.seed,
        ..QqSettings::default()
    };
    let env = qq_diagnostic(&sample.config, &fitted, &result.window, &settings)?;
    println!("{label}: outside={} p={}", env.observed_outside(), env.p_value());
    prov.write(&p.path(label, "qq.csv"), &env.to_csv())?;
    prov.write(&p.path(label, "qq.svg"), &gio::qq_svg(&env))?;
    Ok(())
}

pub fn reproduce(a: &ReproduceArgs) -> Result<()> {
    let p = Preset { name: a.preset.as_str(), args: a };
    match p.name {
        "fig1" => {
            let chain = Chain::new("min_angle", min_angle(), 500_000);
            let config = ExperimentConfig::parse(&chain.config_text(a))?;
            let start = initial_lattice(&config.model, config.intensity.total_mass())?;
            let prov = Provenance::new(&chain.config_text(a), a.seed);
            prov.write(&p.path("initial", "points.csv"), &gio::points_csv(&start))?;
            prov.write(
                &p.path("initial", "tessellation.svg"),
                &gio::tessellation_svg(&Tessellation::build(&start)?, Layer::Delaunay, &[]),
            )?;
            p.tessellations(&[chain])
        }
        "fig2" => p.tessellations(&[
            Chain::new("theta-5", perimeter(-5.0), 200_000),
            Chain::new("theta5", perimeter(5.0), 200_000),
        ]),
        "fig3" | "fig4" => p.tessellations(&volume_ratio_thetas()),
        "fig5" | "fig6" => p.tessellations(&volume_ratio_shapes()),
        "fig7" => removable_figure(&p),
        "fig8" => estimation_study(&p, Chain::new("", perimeter(-5.0), 200_000), 1000.0),
        "fig9" => estimation_study(&p, Chain::new("", perimeter(5.0), 200_000), 1000.0),
        "fig10" => estimation_study(&p, Chain::new("", volume_ratio(-0.5, Some(0.625)), 200_000), 100.0),
        "fig11" => estimation_study(&p, Chain::new("", volume_ratio(0.5, Some(0.625)), 200_000), 100.0),
        "fig12" => {
            let (_, out, prov) = p.simulate(&residual_sample())?;
            let tess = Tessellation::build(&out.config)?;
            prov.write(&p.path("sample", "points.csv"), &gio::points_csv(&out.config))?;
            prov.write(&p.path("sample", "voronoi.svg"), &gio::tessellation_svg(&tess, Layer::Voronoi, &[]))?;
            prov.write(&p.path("sample", "delaunay.svg"), &gio::tessellation_svg(&tess, Layer::Delaunay, &[]))?;
            prov.write(&p.path("sample", "edges.csv"), &gio::edges_csv(&tess))
        }
        "fig13" => {
            let (_, sample, _) = p.simulate(&residual_sample())?;
            residual_analysis(&p, &sample, "poisson", "kind = \"poisson\"\nz = 1.0", None)?;
            residual_analysis(&p, &sample, "perimeter", "kind = \"perimeter\"\nalpha = 0.08\nz = 1000.0", Some(1000.0))
        }
        "fig14" => residual_analysis(
            &p,
            &p.simulate(&residual_sample())?.1,
            "volume_ratio",
            "kind = \"volume-ratio\"\nalpha = 0.05\nshape = 1.0\nz = 100.0",
            Some(100.0),
        ),
        other => Err(Error::Config {
            location: "preset".into(),
            message: format!("unknown preset {other:?}; expected fig1 to fig14"),
        }),
    }
}
