//! CSV tables and SVG plots next to the JSON report.

use std::fs;
use std::path::{Path, PathBuf};

use plotters::prelude::*;
use serde::Serialize;

use cyclepersist_core::degree::f_on_cycle;
use cyclepersist_core::persist::{PersistenceRun, PeriodicSolution};
use cyclepersist_core::pipeline::Analysis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Svg,
    All,
}

impl Format {
    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::All)
    }

    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::All)
    }

    pub fn svg(self) -> bool {
        matches!(self, Format::Svg | Format::All)
    }
}

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> String {
    format!("{}: {e}", path.display())
}

pub fn write_text(path: &Path, text: &str) -> Result<(), String> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> Result<(), String> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn bounds(series: &[Series]) -> (f64, f64, f64, f64) {
    let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in series.iter().flat_map(|s| s.points.iter()).filter(|p| p.0.is_finite() && p.1.is_finite()) {
        b = (b.0.min(*x), b.1.max(*x), b.2.min(*y), b.3.max(*y));
    }
    if !b.0.is_finite() {
        return (0.0, 1.0, 0.0, 1.0);
    }
    let pad = |lo: f64, hi: f64| {
        let w = if hi > lo { 0.05 * (hi - lo) } else { 0.5 * lo.abs().max(1.0) };
        (lo - w, hi + w)
    };
    let (x0, x1) = pad(b.0, b.1);
    let (y0, y1) = pad(b.2, b.3);
    (x0, x1, y0, y1)
}

/// Line plot of one or more series; `origin` marks `(0, 0)`.
pub fn line_plot(path: &Path, title: &str, xdesc: &str, ydesc: &str, series: &[Series], origin: bool) -> Result<(), String> {
    let err = |e: &dyn std::fmt::Debug| io_err(path, format!("{e:?}"));
    let root = SVGBackend::new(path, (760, 480)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| err(&e))?;
    let (x0, x1, y0, y1) = bounds(series);
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(70)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(|e| err(&e))?;
    chart
        .configure_mesh()
        .x_desc(xdesc)
        .y_desc(ydesc)
        .draw()
        .map_err(|e| err(&e))?;
    for (i, s) in series.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        chart
            .draw_series(LineSeries::new(s.points.iter().copied(), color.stroke_width(2)))
            .map_err(|e| err(&e))?
            .label(s.label.clone())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
    }
    if origin {
        chart
            .draw_series(std::iter::once(Cross::new((0.0, 0.0), 6, BLACK.stroke_width(2))))
            .map_err(|e| err(&e))?;
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.85))
        .border_style(BLACK)
        .draw()
        .map_err(|e| err(&e))?;
    root.present().map_err(|e| err(&e))
}

#[derive(Serialize)]
struct F0Row {
    theta: f64,
    f0: f64,
}

#[derive(Serialize)]
struct FCurveRow {
    theta: f64,
    f_1: f64,
    f_2: f64,
}

#[derive(Serialize)]
struct F1Row {
    theta0: f64,
    s: f64,
    f1: f64,
    f1_periodic: f64,
}

#[derive(Serialize)]
struct ProfileRow {
    t: f64,
    s: f64,
    dist: f64,
    predicted: f64,
    ratio: f64,
    r: Option<f64>,
}

#[derive(Serialize)]
struct ConvergenceRow {
    theta0: f64,
    eps: f64,
    max_error: f64,
}

/// `F(x0(θ))` on `n` points of one period.
fn f_curve(a: &Analysis, n: usize) -> Vec<(f64, [f64; 2])> {
    let period = a.bifurcation.period();
    (0..=n)
        .map(|k| {
            let t = period * k as f64 / n as f64;
            let v = f_on_cycle(&a.bifurcation, t).map(|v| [v.x, v.y]).unwrap_or([f64::NAN; 2]);
            (t, v)
        })
        .collect()
}

/// `f1(θ0, θ0 + s)` for `s` in one period, with its periodic part
/// `f1 · exp(−λ* s)`.
fn f1_rows(a: &Analysis, n: usize) -> Vec<F1Row> {
    let period = a.bifurcation.period();
    let lambda_star = a.frame.rho_star().ln() / period;
    let mut rows = Vec::new();
    for z in &a.profile.zeros {
        for k in 0..=n {
            let s = period * k as f64 / n as f64;
            let f1 = a.bifurcation.f1(z.theta, z.theta + s);
            rows.push(F1Row {
                theta0: z.theta,
                s,
                f1,
                f1_periodic: f1 * (-lambda_star * s).exp(),
            });
        }
    }
    rows
}

pub fn write_analysis_artifacts(dir: &Path, a: &Analysis, format: Format) -> Result<Vec<PathBuf>, String> {
    let mut written = Vec::new();
    let f0: Vec<F0Row> = a
        .profile
        .theta_grid
        .iter()
        .zip(&a.profile.f0_values)
        .map(|(&theta, &f0)| F0Row { theta, f0 })
        .collect();
    let curve = f_curve(a, 512);
    let f1 = f1_rows(a, 256);
    if format.csv() {
        let p = dir.join("f0.csv");
        write_csv(&p, &f0)?;
        written.push(p);
        let p = dir.join("f1.csv");
        write_csv(&p, &f1)?;
        written.push(p);
        let rows: Vec<FCurveRow> = curve.iter().map(|(t, v)| FCurveRow { theta: *t, f_1: v[0], f_2: v[1] }).collect();
        let p = dir.join("f_curve.csv");
        write_csv(&p, &rows)?;
        written.push(p);
    }
    if format.svg() {
        let p = dir.join("f0.svg");
        let s = Series {
            label: "f0".into(),
            points: f0.iter().map(|r| (r.theta, r.f0)).collect(),
        };
        line_plot(&p, "f0(theta)", "theta", "f0", &[s], false)?;
        written.push(p);

        let p = dir.join("f1.svg");
        let series: Vec<Series> = a
            .profile
            .zeros
            .iter()
            .map(|z| Series {
                label: format!("theta0 = {:.4}", z.theta),
                points: f1.iter().filter(|r| r.theta0 == z.theta).map(|r| (r.s, r.f1_periodic)).collect(),
            })
            .collect();
        line_plot(&p, "f1(theta0, theta0 + s) exp(-lambda* s)", "s", "periodic part of f1", &series, false)?;
        written.push(p);

        let p = dir.join("f_curve.svg");
        let s = Series {
            label: format!("F(x0(theta)), dB = {}", a.degree.d_b),
            points: curve.iter().map(|(_, v)| (v[0], v[1])).collect(),
        };
        line_plot(&p, "F along the cycle", "F_1", "F_2", &[s], true)?;
        written.push(p);
    }
    Ok(written)
}

fn solution_stem(s: &PeriodicSolution) -> String {
    format!("eps{}_{}", s.eps, format!("{:?}", s.location).to_lowercase())
}

pub fn write_verify_artifacts(dir: &Path, run: &PersistenceRun, format: Format) -> Result<Vec<PathBuf>, String> {
    let mut written = Vec::new();
    for r in &run.results {
        for s in &r.solutions {
            let Some(p) = &s.profile else { continue };
            let stem = solution_stem(s);
            if format.csv() {
                let rows: Vec<ProfileRow> = p
                    .points
                    .iter()
                    .map(|q| ProfileRow {
                        t: q.t,
                        s: q.s,
                        dist: q.dist,
                        predicted: q.predicted,
                        ratio: q.ratio,
                        r: q.r,
                    })
                    .collect();
                let path = dir.join(format!("profile_{stem}.csv"));
                write_csv(&path, &rows)?;
                written.push(path);
            }
            if format.svg() {
                let path = dir.join(format!("profile_{stem}.svg"));
                let series = [
                    Series {
                        label: "dist(t)".into(),
                        points: p.points.iter().map(|q| (q.t, q.dist)).collect(),
                    },
                    Series {
                        label: "eps |f1| |y1| / |1 - rho|".into(),
                        points: p.points.iter().map(|q| (q.t, q.predicted)).collect(),
                    },
                ];
                let title = format!("distance through the sections, eps = {}", s.eps);
                line_plot(&path, &title, "t", "distance", &series, false)?;
                written.push(path);
            }
        }
    }
    if format.csv() && !run.convergence.is_empty() {
        let rows: Vec<ConvergenceRow> = run
            .convergence
            .iter()
            .flat_map(|c| {
                c.points.iter().map(|&(eps, max_error)| ConvergenceRow {
                    theta0: c.theta0,
                    eps,
                    max_error,
                })
            })
            .collect();
        let path = dir.join("convergence.csv");
        write_csv(&path, &rows)?;
        written.push(path);
    }
    Ok(written)
}
