use std::f64::consts::FRAC_PI_2;

use moyal_core::shadow::{frft, streamline_divergence};
use moyal_core::{Floor, Result};

use crate::registry::{Analysis, Registry, RunContext};
use crate::report::{fmt_f64, CheckItem, Outcome, Table};
use crate::scenario::{fail, Params, Scenario, System, ValidationError};
use crate::svg::{self, Series, Style};

/// Quantile-paired streamlines in two fractional-Fourier domains.
pub struct Shadow;

struct Settings {
    theta1: f64,
    theta2: f64,
    t_end: f64,
    slices: usize,
    paths: usize,
    floor: f64,
    expect_below: Option<f64>,
    expect_above: Option<f64>,
}

fn settings(table: &toml::Table) -> std::result::Result<Settings, ValidationError> {
    let p = Params::new(table);
    let s = Settings {
        theta1: p.f64_or("theta1", 0.0)?,
        theta2: p.f64_or("theta2", FRAC_PI_2)?,
        t_end: p.f64_or("t_end", 1.0)?,
        slices: p.usize_or("slices", 20)?,
        paths: p.usize_or("paths", 50)?,
        floor: p.f64_or("floor", 1e-8)?,
        expect_below: p.opt_f64("expect_below")?,
        expect_above: p.opt_f64("expect_above")?,
    };
    p.finish()?;
    Ok(s)
}

fn times(s: &Settings) -> Vec<f64> {
    (0..=s.slices).map(|k| s.t_end * k as f64 / s.slices as f64).collect()
}

impl Analysis for Shadow {
    fn name(&self) -> &'static str {
        "shadow"
    }

    fn summary(&self) -> &'static str {
        "streamline divergence between two fractional-Fourier representations"
    }

    fn validate(&self, table: &toml::Table, scenario: &Scenario, system: &System, _registry: &Registry) -> std::result::Result<(), ValidationError> {
        let s = settings(table)?;
        for (key, v) in [("theta1", s.theta1), ("theta2", s.theta2)] {
            if !v.is_finite() {
                return fail(key, "must be finite");
            }
        }
        if !(s.t_end > 0.0 && s.t_end.is_finite()) {
            return fail("t_end", "must be positive");
        }
        if !(1..=1000).contains(&s.slices) {
            return fail("slices", "must lie in [1, 1000]");
        }
        if !(2..=10_000).contains(&s.paths) {
            return fail("paths", "must lie in [2, 10000]");
        }
        if !(s.floor > 0.0 && s.floor < 1.0) {
            return fail("floor", "relative floor must lie in (0, 1)");
        }
        if s.expect_below.is_some() && s.expect_above.is_some() {
            return fail("expect_above", "give at most one of expect_below and expect_above");
        }
        for (key, v) in [("expect_below", s.expect_below), ("expect_above", s.expect_above)] {
            if v.is_some_and(|v| !(v > 0.0)) {
                return fail(key, "must be positive");
            }
        }
        scenario.check_reach(&system.grid, &system.config, s.t_end).map_err(|e| ValidationError {
            path: "t_end".into(),
            message: e.message,
        })?;
        for (key, theta) in [("theta1", s.theta1), ("theta2", s.theta2)] {
            frft(&system.state, theta).map_err(|e| ValidationError {
                path: key.into(),
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    fn run(&self, table: &toml::Table, ctx: &RunContext) -> Result<Outcome> {
        let s = settings(table).expect("validated");
        let times = times(&s);
        let r = streamline_divergence(
            &ctx.system.state,
            &ctx.system.potential,
            s.theta1,
            s.theta2,
            &times,
            s.paths,
            Floor::Relative(s.floor),
        )?;
        let mut out = Outcome::default();
        out.metric("divergence", r.divergence);
        out.metric("worst_label", r.worst_label);
        out.metric("worst_time", r.worst_time);
        if let Some(tol) = s.expect_below {
            out.checks.push(CheckItem::below("streamline divergence", r.divergence, tol, ctx.tolerance_scale));
        }
        if let Some(thr) = s.expect_above {
            out.checks.push(CheckItem::above("streamline divergence", r.divergence, thr, ctx.tolerance_scale));
        }

        let mut t = Table::new("paths", &["label", "t", "u1", "u2"]);
        for (i, label) in r.labels.iter().enumerate() {
            for (k, time) in r.times.iter().enumerate() {
                t.push(vec![
                    fmt_f64(*label),
                    fmt_f64(*time),
                    fmt_f64(r.first.paths[i][k]),
                    fmt_f64(r.second.paths[i][k]),
                ]);
            }
        }
        out.tables.push(t);

        if ctx.plots {
            let mut series = Vec::new();
            for (e, name, style) in [(&r.first, format!("θ = {}", fmt_f64(s.theta1)), Style::Line), (&r.second, format!("θ = {}", fmt_f64(s.theta2)), Style::Dots)] {
                for (i, p) in e.paths.iter().enumerate() {
                    let label = if i == 0 { name.clone() } else { String::new() };
                    series.push(Series::new(label, p.iter().zip(&r.times).map(|(u, t)| (*u, *t)).collect(), style));
                }
            }
            out.plots.push(("shadow".into(), svg::plot("Streamlines in two representations", "u", "t", &series)));
        }
        Ok(out)
    }
}
