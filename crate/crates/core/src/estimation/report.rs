//! Text form of fit results and batch summaries.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::energy::{HardcoreParams, Model, ModelKind, DEFAULT_VOLUME_EXPONENT};
use crate::error::{Error, Result};

use super::window::{ObservationWindow, Rect};
use super::FitResult;

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".into(), |x| x.to_string())
}

impl fmt::Display for FitResult {
    /// One `key=value` pair per line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let h = &self.model.hardcore;
        writeln!(f, "model={}", self.model.kind.name())?;
        if let ModelKind::VolumeRatio { exponent } = self.model.kind {
            writeln!(f, "exponent={exponent}")?;
        }
        writeln!(f, "min_angle={}", opt(h.min_angle))?;
        writeln!(f, "eps={}", opt(h.eps))?;
        writeln!(f, "alpha={}", opt(h.alpha))?;
        writeln!(f, "shape={}", opt(h.shape))?;
        writeln!(f, "theta={}", opt(self.theta))?;
        writeln!(f, "z={}", self.z)?;
        writeln!(f, "z_known={}", self.z_known)?;
        writeln!(f, "points={}", self.points)?;
        writeln!(f, "removable={}", self.removable)?;
        writeln!(f, "removable_in_window={}", self.removable_in_window)?;
        let (o, i) = (&self.window.outer, &self.window.inner);
        writeln!(f, "outer={},{},{},{}", o.lo[0], o.lo[1], o.hi[0], o.hi[1])?;
        writeln!(f, "window={},{},{},{}", i.lo[0], i.lo[1], i.hi[0], i.hi[1])?;
        writeln!(f, "erosion={}", self.window.erosion)?;
        writeln!(f, "mc_samples={}", self.mc_samples)?;
        writeln!(f, "seed={}", self.seed)?;
        writeln!(f, "pll={}", self.pll)?;
        match self.bracket {
            Some([lo, hi]) => writeln!(f, "bracket={lo},{hi}"),
            None => writeln!(f, "bracket=none"),
        }
    }
}

struct Fields(Vec<(usize, String, String)>);

impl Fields {
    fn parse(text: &str) -> Result<Self> {
        let mut out: Vec<(usize, String, String)> = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Config {
                location: format!("line {}", n + 1),
                message: format!("expected key=value, got {line:?}"),
            })?;
            let k = k.trim().to_string();
            if out.iter().any(|f| f.1 == k) {
                return Err(Error::Config {
                    location: format!("line {}", n + 1),
                    message: format!("duplicate key {k}"),
                });
            }
            out.push((n + 1, k, v.trim().to_string()));
        }
        Ok(Self(out))
    }

    fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.0.iter().find(|f| f.1 == key).map(|f| (f.0, f.2.as_str()))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<T> {
        let (line, v) = self.raw(key).ok_or_else(|| Error::Config {
            location: key.into(),
            message: "missing key".into(),
        })?;
        v.parse().map_err(|_| Error::Config {
            location: format!("line {line}, {key}"),
            message: format!("cannot parse {v:?}"),
        })
    }

    fn optional(&self, key: &str) -> Result<Option<f64>> {
        match self.raw(key) {
            None | Some((_, "none")) => Ok(None),
            Some(_) => self.get(key).map(Some),
        }
    }

    fn quad(&self, key: &str) -> Result<[f64; 4]> {
        let s: String = self.get(key)?;
        let v: Vec<f64> = s.split(',').filter_map(|x| x.trim().parse().ok()).collect();
        v.try_into().map_err(|_| Error::Config {
            location: key.into(),
            message: format!("expected four comma-separated numbers, got {s:?}"),
        })
    }
}

pub(crate) fn model_kind(name: &str, exponent: Option<f64>) -> Result<ModelKind> {
    Ok(match name {
        "poisson" => ModelKind::Poisson,
        "min-angle" => ModelKind::MinAngle,
        "perimeter" => ModelKind::Perimeter,
        "volume-ratio" => ModelKind::VolumeRatio {
            exponent: exponent.unwrap_or(DEFAULT_VOLUME_EXPONENT),
        },
        other => {
            return Err(Error::Config {
                location: "model".into(),
                message: format!(
                    "unknown model {other:?}; expected poisson, min-angle, perimeter or volume-ratio"
                ),
            })
        }
    })
}

impl FromStr for FitResult {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let f = Fields::parse(text)?;
        let kind = model_kind(&f.get::<String>("model")?, f.optional("exponent")?)?;
        let hardcore = HardcoreParams {
            min_angle: f.optional("min_angle")?,
            eps: f.optional("eps")?,
            alpha: f.optional("alpha")?,
            shape: f.optional("shape")?,
        };
        // Fitted bounds need not satisfy the orderings required of configured models.
        let model = Model { kind, hardcore };
        let rect = |q: [f64; 4]| Rect::new([q[0], q[1]], [q[2], q[3]]);
        let outer = match f.raw("outer") {
            Some(_) => rect(f.quad("outer")?)?,
            None => Rect::unit(),
        };
        let window = ObservationWindow {
            outer,
            inner: rect(f.quad("window")?)?,
            erosion: f.get("erosion")?,
        };
        let bracket = match f.raw("bracket") {
            None | Some((_, "none")) => None,
            Some((_, s)) => {
                let v: Vec<f64> = s.split(',').filter_map(|x| x.trim().parse().ok()).collect();
                Some(v.try_into().map_err(|_| Error::Config {
                    location: "bracket".into(),
                    message: format!("expected two numbers, got {s:?}"),
                })?)
            }
        };
        Ok(FitResult {
            model,
            theta: f.optional("theta")?,
            z: f.get("z")?,
            z_known: f.get("z_known")?,
            points: f.get("points")?,
            removable: f.get("removable")?,
            removable_in_window: f.get("removable_in_window")?,
            window,
            mc_samples: f.get("mc_samples")?,
            seed: f.get("seed")?,
            pll: f.get("pll")?,
            bracket,
        })
    }
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    pub sd: f64,
}

impl Moments {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.into_iter().collect();
        let count = v.len();
        if count == 0 {
            return Self::default();
        }
        let mean = v.iter().sum::<f64>() / count as f64;
        let sd = if count > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { count, mean, sd }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BatchSummary {
    pub fits: usize,
    pub inestimable: usize,
    pub failed: usize,
    pub theta: Moments,
    pub z: Moments,
    pub eps: Moments,
    pub alpha: Moments,
    pub shape: Moments,
    pub min_angle: Moments,
    pub points: Moments,
    pub removable: Moments,
}

/// Aggregates a batch of fits; errors are counted, not summarised.
pub fn summarize<'a>(results: impl IntoIterator<Item = &'a Result<FitResult>>) -> BatchSummary {
    let mut ok = Vec::new();
    let mut s = BatchSummary::default();
    for r in results {
        match r {
            Ok(f) => ok.push(f),
            Err(Error::Inestimable(_)) => s.inestimable += 1,
            Err(_) => s.failed += 1,
        }
    }
    s.fits = ok.len();
    s.theta = Moments::of(ok.iter().filter_map(|f| f.theta));
    s.z = Moments::of(ok.iter().map(|f| f.z));
    s.eps = Moments::of(ok.iter().filter_map(|f| f.model.hardcore.eps));
    s.alpha = Moments::of(ok.iter().filter_map(|f| f.model.hardcore.alpha));
    s.shape = Moments::of(ok.iter().filter_map(|f| f.model.hardcore.shape));
    s.min_angle = Moments::of(ok.iter().filter_map(|f| f.model.hardcore.min_angle));
    s.points = Moments::of(ok.iter().map(|f| f.points as f64));
    s.removable = Moments::of(ok.iter().map(|f| f.removable as f64));
    s
}

impl fmt::Display for BatchSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "fits={} inestimable={} failed={}", self.fits, self.inestimable, self.failed)?;
        let mut table = String::from("parameter,count,mean,sd\n");
        for (name, m) in [
            ("theta", self.theta),
            ("z", self.z),
            ("min_angle", self.min_angle),
            ("eps", self.eps),
            ("alpha", self.alpha),
            ("shape", self.shape),
            ("points", self.points),
            ("removable", self.removable),
        ] {
            if m.count > 0 {
                let _ = writeln!(table, "{name},{},{},{}", m.count, m.mean, m.sd);
            }
        }
        f.write_str(&table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> FitResult {
        FitResult {
            model: Model::new(
                ModelKind::VolumeRatio { exponent: 0.5 },
                HardcoreParams { alpha: Some(0.0493), shape: Some(97.8), ..Default::default() },
            )
            .unwrap(),
            theta: Some(-0.56),
            z: 100.0 / 3.0,
            z_known: false,
            points: 265,
            removable: 45,
            removable_in_window: 16,
            window: ObservationWindow::new(Rect::unit(), 0.1972).unwrap(),
            mc_samples: 10_000,
            seed: 7,
            pll: -12.25,
            bracket: Some([-10.0, 10.0]),
        }
    }

    #[test]
    fn text_form_round_trips() {
        let f = sample();
        assert_eq!(f.to_string().parse::<FitResult>().unwrap(), f);
        let g = FitResult { theta: None, bracket: None, model: Model::poisson(), ..f };
        assert_eq!(g.to_string().parse::<FitResult>().unwrap(), g);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let text = sample().to_string().replace("points=265", "points=many");
        let err = text.parse::<FitResult>().unwrap_err().to_string();
        assert!(err.contains("line") && err.contains("points"), "{err}");
        assert!("model=circle\n".parse::<FitResult>().is_err());
    }

    #[test]
    fn summary_counts_failures() {
        let results = vec![Ok(sample()), Ok(sample()), Err(Error::Inestimable("none".into()))];
        let s = summarize(&results);
        assert_eq!((s.fits, s.inestimable), (2, 1));
        assert_eq!(s.theta.mean, -0.56);
        assert_eq!(s.theta.sd, 0.0);
    }
}
