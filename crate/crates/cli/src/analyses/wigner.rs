use moyal_core::wigner::purity;
use moyal_core::{marginals, to_momentum, wigner_transform, Result};

use super::{state_at, stride_for};
use crate::registry::{Analysis, Registry, RunContext};
use crate::report::{CheckItem, Outcome, Table};
use crate::scenario::{fail, Params, Scenario, System, ValidationError};
use crate::svg;

pub struct WignerAnalysis;

struct Settings<'a> {
    at: &'a str,
    tolerance: f64,
    table_points: usize,
}

fn settings(table: &toml::Table) -> std::result::Result<Settings<'_>, ValidationError> {
    let p = Params::new(table);
    let s = Settings {
        at: p.str_or("at", "initial")?,
        tolerance: p.f64_or("tolerance", 1e-8)?,
        table_points: p.usize_or("table_points", 128)?,
    };
    p.finish()?;
    Ok(s)
}

impl Analysis for WignerAnalysis {
    fn name(&self) -> &'static str {
        "wigner"
    }

    fn summary(&self) -> &'static str {
        "Wigner function of the initial or final state, with marginal checks"
    }

    fn validate(&self, table: &toml::Table, scenario: &Scenario, system: &System, _registry: &Registry) -> std::result::Result<(), ValidationError> {
        let s = settings(table)?;
        match s.at {
            "initial" => {}
            "final" if scenario.evolution.is_some() => {}
            "final" => return fail("at", "`final` needs an [evolution] section"),
            other => return fail("at", format!("expected `initial` or `final`, got `{other}`")),
        }
        if !(s.tolerance > 0.0) {
            return fail("tolerance", "must be positive");
        }
        if system.grid.n() > 1024 {
            return fail("kind", "the Wigner transform is limited to grid.n ≤ 1024");
        }
        if s.table_points == 0 {
            return fail("table_points", "must be positive");
        }
        Ok(())
    }

    fn run(&self, table: &toml::Table, ctx: &RunContext) -> Result<Outcome> {
        let s = settings(table).expect("validated");
        let wf = state_at(ctx, s.at)?;
        let w = wigner_transform(wf)?;
        let (px, pp) = marginals(&w);
        let phi = to_momentum(wf)?;
        let ex = super::max_gap(&px, &wf.densities(), &vec![true; px.len()]);
        let ep = super::max_gap(&pp, &phi.densities(), &vec![true; pp.len()]);
        let g = *wf.grid();
        let mut out = Outcome::default();
        out.checks.push(CheckItem::below("position marginal = |ψ|²", ex, s.tolerance, ctx.tolerance_scale));
        out.checks.push(CheckItem::below("momentum marginal = |φ|²", ep, s.tolerance, ctx.tolerance_scale));
        out.checks.push(CheckItem::below("∬W = 1", (w.integral() - 1.0).abs(), s.tolerance, ctx.tolerance_scale));
        let negative: f64 = w.values().iter().filter(|v| **v < 0.0).map(|v| -v).sum::<f64>() * g.dx() * g.dp();
        out.metric("negative_volume", negative);
        out.metric("purity", purity(&w));
        out.metric("min", w.min());
        out.metric("max", w.max());

        let stride = stride_for(g.n(), s.table_points);
        let idx: Vec<usize> = (0..g.n()).step_by(stride).collect();
        let mut t = Table::new("wigner", &["x", "p", "w"]);
        let mut cells = Vec::with_capacity(idx.len() * idx.len());
        for &j in &idx {
            for &k in &idx {
                t.push_f64(&[g.x(j), g.p(k), w.at(j, k)]);
                cells.push(w.at(j, k));
            }
        }
        out.tables.push(t);
        let mut m = Table::new("marginals", &["x", "position_marginal", "density", "p", "momentum_marginal", "momentum_density"]);
        let (dx, dp) = (wf.densities(), phi.densities());
        for i in 0..g.n() {
            m.push_f64(&[g.x(i), px[i], dx[i], g.p(i), pp[i], dp[i]]);
        }
        out.tables.push(m);
        if ctx.plots {
            let x = (g.x(idx[0]), g.x(*idx.last().unwrap()));
            let p = (g.p(idx[0]), g.p(*idx.last().unwrap()));
            out.plots.push(("wigner".into(), svg::heatmap("Wigner function", x, p, idx.len(), idx.len(), &cells)));
        }
        Ok(out)
    }
}
