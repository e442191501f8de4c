use moyal_core::dynamics::{
    integrate_in_field, sample_positions, transported_density_check, Sampling, TrajectoryEnsemble, VelocityField,
    MAX_FIELD_CHANGE, MIN_PATHS,
};
use moyal_core::{Error, Floor, Result, Wavefunction};

use crate::registry::{Analysis, Registry, RunContext};
use crate::report::{fmt_f64, CheckItem, Outcome, Table};
use crate::scenario::{fail, Params, Scenario, StateSection, System, ValidationError};
use crate::svg::{self, Series, Style};

/// Streamline ensembles: non-crossing, transported density and, for two
/// slits, where the endpoints land.
pub struct Trajectories;

struct Settings<'a> {
    field: &'a str,
    paths: usize,
    density_paths: usize,
    sampling: &'a str,
    substeps: usize,
    floor: f64,
    tv_tolerance: f64,
    bright_fraction: f64,
}

fn settings(table: &toml::Table) -> std::result::Result<Settings<'_>, ValidationError> {
    let p = Params::new(table);
    let s = Settings {
        field: p.str_or("field", "guidance")?,
        paths: p.usize_or("paths", 100)?,
        density_paths: p.usize_or("density_paths", 1000)?,
        sampling: p.str_or("sampling", "quantile")?,
        substeps: p.usize_or("substeps", 2)?,
        floor: p.f64_or("floor", 1e-8)?,
        tv_tolerance: p.f64_or("tv_tolerance", 0.05)?,
        bright_fraction: p.f64_or("bright_fraction", 0.9)?,
    };
    p.finish()?;
    Ok(s)
}

fn sampling(name: &str, seed: u64) -> Sampling {
    match name {
        "random" => Sampling::Random { seed },
        _ => Sampling::Quantile,
    }
}

fn ensemble(
    field: &dyn VelocityField,
    start: &Wavefunction,
    times: &[f64],
    count: usize,
    how: Sampling,
    substeps: usize,
) -> Result<TrajectoryEnsemble> {
    let x0 = sample_positions(start, count, how)?;
    let e = integrate_in_field(field, &x0, times, substeps, how)?;
    let change = field.undersampling(&e);
    if change > MAX_FIELD_CHANGE {
        return Err(Error::FieldUndersampled {
            change,
            limit: MAX_FIELD_CHANGE,
        });
    }
    Ok(e)
}

/// Fraction of endpoints where the final density exceeds a tenth of its peak.
fn bright(endpoints: &[f64], wf: &Wavefunction) -> f64 {
    let d = wf.densities();
    let peak = d.iter().cloned().fold(0.0, f64::max);
    let g = wf.grid();
    let hits = endpoints
        .iter()
        .filter(|x| {
            let j = ((**x - g.x_min()) / g.dx()).round();
            j >= 0.0 && (j as usize) < d.len() && d[j as usize] > 0.1 * peak
        })
        .count();
    hits as f64 / endpoints.len() as f64
}

fn histogram(endpoints: &[f64], wf: &Wavefunction, bins: usize) -> Vec<(f64, f64)> {
    let d = wf.densities();
    let peak = d.iter().cloned().fold(0.0, f64::max);
    let xs = wf.coords();
    let inside: Vec<f64> = xs.iter().zip(&d).filter(|(_, v)| **v > 1e-6 * peak).map(|(x, _)| *x).collect();
    let (lo, hi) = (inside[0], *inside.last().unwrap());
    let w = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for x in endpoints {
        let b = ((x - lo) / w).floor();
        if b >= 0.0 && (b as usize) < bins {
            counts[b as usize] += 1;
        }
    }
    let n = endpoints.len() as f64;
    let mut pts = vec![(lo, 0.0)];
    for (b, c) in counts.iter().enumerate() {
        pts.push((lo + (b + 1) as f64 * w, *c as f64 / (n * w)));
    }
    pts
}

impl Analysis for Trajectories {
    fn name(&self) -> &'static str {
        "trajectories"
    }

    fn summary(&self) -> &'static str {
        "streamlines of a registered velocity field with non-crossing and density checks"
    }

    fn validate(&self, table: &toml::Table, scenario: &Scenario, _system: &System, registry: &Registry) -> std::result::Result<(), ValidationError> {
        let s = settings(table)?;
        if scenario.evolution.is_none() {
            return fail("kind", "trajectories need an [evolution] section");
        }
        let ev = scenario.evolution.unwrap();
        if ev.steps / ev.record_every < 2 {
            return fail("kind", "the evolution must record at least three slices");
        }
        if !(2..=100_000).contains(&s.paths) {
            return fail("paths", "must lie in [2, 100000]");
        }
        if s.density_paths != 0 && !(MIN_PATHS..=100_000).contains(&s.density_paths) {
            return fail("density_paths", format!("must be 0 or lie in [{MIN_PATHS}, 100000]"));
        }
        if !matches!(s.sampling, "quantile" | "random") {
            return fail("sampling", "expected `quantile` or `random`");
        }
        if !(1..=1024).contains(&s.substeps) {
            return fail("substeps", "must lie in [1, 1024]");
        }
        if !(s.floor > 0.0 && s.floor < 1.0) {
            return fail("floor", "relative floor must lie in (0, 1)");
        }
        if !(s.tv_tolerance > 0.0) {
            return fail("tv_tolerance", "must be positive");
        }
        if !(0.0..=1.0).contains(&s.bright_fraction) {
            return fail("bright_fraction", "must lie in [0, 1]");
        }
        let field = registry.field(s.field).ok_or_else(|| ValidationError {
            path: "field".into(),
            message: format!("unknown field `{}`; known: {}", s.field, registry.field_names().join(", ")),
        })?;
        field.validate(scenario)
    }

    fn run(&self, table: &toml::Table, ctx: &RunContext) -> Result<Outcome> {
        let s = settings(table).expect("validated");
        let series = ctx.series()?;
        let source = ctx.registry.field(s.field).expect("validated");
        let field = source.build(ctx, series, Floor::Relative(s.floor))?;
        let how = sampling(s.sampling, ctx.seed);
        let start = &series.states[0];
        let fin = series.last();
        let scale = ctx.tolerance_scale;
        let mut out = Outcome::default();

        let e = ensemble(field.as_ref(), start, &series.times, s.paths, how, s.substeps)?;
        let gap = e.min_gap();
        out.checks.push(CheckItem::above("non-crossing (smallest neighbour gap)", gap, 0.0, 1.0));
        out.checks.push(CheckItem::exact("paths stay in the valid region", e.stopped_count(), ""));
        out.metric("min_gap", gap);
        out.metric("field_change", field.undersampling(&e));

        let mut t = Table::new("paths", &["path", "t", "x"]);
        for (i, p) in e.paths.iter().enumerate() {
            for (k, x) in p.iter().enumerate() {
                t.push(vec![i.to_string(), fmt_f64(e.times[k]), fmt_f64(*x)]);
            }
        }
        out.tables.push(t);

        let mut fringe = Vec::new();
        if s.density_paths > 0 {
            let dense = ensemble(field.as_ref(), start, &series.times, s.density_paths, how, s.substeps)?;
            let tv = transported_density_check(&dense, fin)?;
            out.checks.push(CheckItem::below("endpoint histogram vs |ψ(T)|² (TV)", tv, s.tv_tolerance, scale));
            let ends = dense.endpoints();
            if matches!(ctx.scenario.state, StateSection::TwoSlit { .. }) {
                let f = bright(&ends, fin);
                out.checks.push(CheckItem::above("endpoints in bright fringes", f, s.bright_fraction, 1.0));
            }
            let mut t = Table::new("endpoints", &["x"]);
            ends.iter().for_each(|x| t.push_f64(&[*x]));
            out.tables.push(t);
            fringe = histogram(&ends, fin, 64);
        }
        let mut d = Table::new("final_density", &["x", "density"]);
        for (x, v) in fin.coords().iter().zip(fin.densities()) {
            d.push_f64(&[*x, v]);
        }
        out.tables.push(d);

        if ctx.plots {
            let lines: Vec<Series> = e
                .paths
                .iter()
                .map(|p| Series::new("", e.times.iter().zip(p).map(|(t, x)| (*x, *t)).collect(), Style::Line))
                .collect();
            let mut lines = lines;
            if let Some(first) = lines.first_mut() {
                first.name = format!("{} paths", e.len());
            }
            out.plots.push(("trajectories".into(), svg::plot("Streamlines", "x", "t", &lines)));
            let mut series = vec![Series::new("|ψ(T)|²", fin.coords().into_iter().zip(fin.densities()).collect(), Style::Line)];
            if !fringe.is_empty() {
                series.push(Series::new("endpoint histogram", fringe, Style::Steps));
            }
            out.plots.push(("fringes".into(), svg::plot("Final density and endpoints", "x", "density", &series)));
        }
        Ok(out)
    }
}
