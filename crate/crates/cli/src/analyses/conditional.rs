use moyal_core::bohm::{conditional_momentum, conditional_position, guidance_from_phase, quantum_potential};
use moyal_core::{polar_decompose, to_momentum, wigner_transform, Floor, Result};

use super::{max_gap, state_at, wigner_moment};
use crate::registry::{Analysis, Registry, RunContext};
use crate::report::{CheckItem, Outcome, Table};
use crate::scenario::{fail, Params, Scenario, System, ValidationError};
use crate::svg::{self, Series, Style};

/// Conditional momentum and position fields and the quantum potential.
pub struct Fields;

struct Settings<'a> {
    at: &'a str,
    floor: f64,
    tolerance: f64,
    dual: bool,
}

fn settings(table: &toml::Table) -> std::result::Result<Settings<'_>, ValidationError> {
    let p = Params::new(table);
    let s = Settings {
        at: p.str_or("at", "initial")?,
        floor: p.f64_or("floor", 1e-6)?,
        tolerance: p.f64_or("tolerance", 1e-5)?,
        dual: p.bool_or("dual", true)?,
    };
    p.finish()?;
    Ok(s)
}

impl Analysis for Fields {
    fn name(&self) -> &'static str {
        "fields"
    }

    fn summary(&self) -> &'static str {
        "guidance field by the phase and Wigner-moment routes, dual x̄(p), quantum potential"
    }

    fn validate(&self, table: &toml::Table, scenario: &Scenario, system: &System, _registry: &Registry) -> std::result::Result<(), ValidationError> {
        let s = settings(table)?;
        match s.at {
            "initial" => {}
            "final" if scenario.evolution.is_some() => {}
            "final" => return fail("at", "`final` needs an [evolution] section"),
            other => return fail("at", format!("expected `initial` or `final`, got `{other}`")),
        }
        if !(s.floor > 0.0 && s.floor < 1.0) {
            return fail("floor", "relative floor must lie in (0, 1)");
        }
        if !(s.tolerance > 0.0) {
            return fail("tolerance", "must be positive");
        }
        if system.grid.n() > 1024 {
            return fail("kind", "the Wigner-moment route is limited to grid.n ≤ 1024");
        }
        let polar = polar_decompose(&system.state, Floor::Relative(s.floor)).map_err(|e| ValidationError {
            path: "floor".into(),
            message: e.to_string(),
        })?;
        guidance_from_phase(&polar).map_err(|e| ValidationError {
            path: "floor".into(),
            message: e.to_string(),
        })?;
        Ok(())
    }

    fn run(&self, table: &toml::Table, ctx: &RunContext) -> Result<Outcome> {
        let s = settings(table).expect("validated");
        let wf = state_at(ctx, s.at)?;
        let floor = Floor::Relative(s.floor);
        let scale = ctx.tolerance_scale;
        let mut out = Outcome::default();

        let polar = polar_decompose(wf, floor)?;
        let phase = guidance_from_phase(&polar)?;
        let w = wigner_transform(wf)?;
        let moment = wigner_moment(&w, true);
        let gap = max_gap(&phase.values, &moment, &phase.valid);
        out.checks.push(CheckItem::below("p̄: ∇S vs Wigner p-moment", gap, s.tolerance, scale));
        let spectral = conditional_momentum(wf, floor)?;
        out.metric("spectral_vs_moment_gap", spectral.route_gap.unwrap_or(f64::NAN));
        out.metric("valid_points", phase.valid_count() as f64);
        let q = quantum_potential(&polar, wf.config());

        let mut t = Table::new("guidance", &["x", "density", "pbar_phase", "pbar_moment", "valid", "quantum_potential"]);
        for i in 0..wf.len() {
            t.push_f64(&[
                phase.coords[i],
                phase.density[i],
                phase.values[i],
                moment[i],
                f64::from(u8::from(phase.valid[i])),
                q.values[i],
            ]);
        }
        out.tables.push(t);

        let mut series = vec![Series::new(
            "∇S",
            phase.coords.iter().zip(&phase.values).zip(&phase.valid).filter(|(_, v)| **v).map(|((x, y), _)| (*x, *y)).collect(),
            Style::Line,
        )];

        if s.dual {
            let phi = to_momentum(wf)?;
            let dual = conditional_position(&phi, floor)?;
            let gap = dual.route_gap.unwrap_or(f64::NAN);
            out.checks.push(CheckItem::below("x̄(p): −∂S_p/∂p vs Wigner x-moment", gap, s.tolerance, scale));
            let mut t = Table::new("dual", &["p", "density", "xbar", "valid"]);
            for i in 0..phi.len() {
                t.push_f64(&[dual.coords[i], dual.density[i], dual.values[i], f64::from(u8::from(dual.valid[i]))]);
            }
            out.tables.push(t);
        }
        if ctx.plots {
            let sampled: Vec<(f64, f64)> =
                phase.coords.iter().zip(&moment).zip(&phase.valid).filter(|(_, v)| **v).map(|((x, y), _)| (*x, *y)).step_by(4).collect();
            series.push(Series::new("Wigner moment", sampled, Style::Dots));
            out.plots.push(("guidance".into(), svg::plot("Conditional momentum", "x", "p̄(x)", &series)));
        }
        Ok(out)
    }
}
