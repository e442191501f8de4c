use moyal_core::exact::{from_f64, to_f64, Rational};
use moyal_core::star::{classical_defect_grid, moyal_bracket, poisson_bracket, sample_poly, tail_fraction, FlatTopWindow, PolySymbol};
use moyal_core::{Error, Grid, PhysicsConfig, Region, Result};
use num_traits::Zero;

use crate::registry::{Analysis, Registry, RunContext};
use crate::report::{fmt_f64, CheckItem, Outcome, Table};
use crate::scenario::{fail, Params, Scenario, System, ValidationError};
use crate::svg::{self, Series, Style};

/// Tail budget for sampled symbols before the grid product is attempted.
const TAIL_LIMIT: f64 = 1e-8;

/// Classical-limit sweep of `{a,b}_MB − {a,b}_PB` over ħ.
pub struct Brackets;

/// One ħ of a sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub hbar: Rational,
    /// Coefficient norm of the exact difference.
    pub exact: Rational,
    /// `exact` at the previous ħ divided by `exact` here.
    pub ratio: Option<Rational>,
    /// Largest modulus of the grid difference on the central quarter.
    pub grid: Option<f64>,
    /// Largest modulus of the exact difference on the same points.
    pub reference: Option<f64>,
}

fn symbol(text: &str, hbar: &Rational) -> Result<PolySymbol> {
    PolySymbol::parse(text, hbar.clone())
}

fn grid_for(hbar: f64, n: usize) -> Result<(Grid, PhysicsConfig)> {
    let cfg = PhysicsConfig::with_hbar(hbar)?;
    Ok((Grid::symmetric(n, &cfg)?, cfg))
}

/// Exact and (when `grid_n > 0`) grid defects of `a`, `b` at each ħ.
pub fn bracket_sweep(a: &str, b: &str, hbars: &[f64], grid_n: usize) -> Result<Vec<SweepRow>> {
    let mut rows: Vec<SweepRow> = Vec::with_capacity(hbars.len());
    for &h in hbars {
        let hbar = from_f64(h).ok_or(Error::InvalidParameter {
            name: "hbar",
            reason: format!("{h} is not finite"),
        })?;
        let (sa, sb) = (symbol(a, &hbar)?, symbol(b, &hbar)?);
        let diff = moyal_bracket(&sa, &sb)?.sub(&poisson_bracket(&sa, &sb)?)?;
        let exact = diff.coefficient_norm();
        let ratio = match rows.last() {
            Some(prev) if !exact.is_zero() => Some(&prev.exact / &exact),
            _ => None,
        };
        let (grid, reference) = if grid_n > 0 {
            let (g, _) = grid_for(h, grid_n)?;
            let w = FlatTopWindow::default();
            let region = Region::central_quarter(&g);
            let measured = classical_defect_grid(&sample_poly(&sa, &g, w)?, &sample_poly(&sb, &g, w)?, &region)?;
            let mut reference = 0.0f64;
            for j in 0..g.n() {
                for k in 0..g.n() {
                    if region.contains(&g, j, k) {
                        reference = reference.max(diff.eval(g.x(j), g.p(k)).norm());
                    }
                }
            }
            (Some(measured), Some(reference))
        } else {
            (None, None)
        };
        rows.push(SweepRow {
            hbar,
            exact,
            ratio,
            grid,
            reference,
        });
    }
    Ok(rows)
}

struct Settings<'a> {
    a: &'a str,
    b: &'a str,
    hbar_sweep: Vec<f64>,
    grid_n: usize,
    grid_tolerance: f64,
    expect_ratio: Option<f64>,
}

fn settings(table: &toml::Table) -> std::result::Result<Settings<'_>, ValidationError> {
    let p = Params::new(table);
    let s = Settings {
        a: p.str_or("a", "x^3")?,
        b: p.str_or("b", "p^3")?,
        hbar_sweep: p.f64_list_or("hbar_sweep", &[0.5, 0.25, 0.125])?,
        grid_n: p.usize_or("grid_n", 256)?,
        grid_tolerance: p.f64_or("grid_tolerance", 0.05)?,
        expect_ratio: p.opt_f64("expect_ratio")?,
    };
    p.finish()?;
    Ok(s)
}

impl Analysis for Brackets {
    fn name(&self) -> &'static str {
        "brackets"
    }

    fn summary(&self) -> &'static str {
        "Moyal minus Poisson bracket over an ħ sweep, exact and on the grid"
    }

    fn validate(&self, table: &toml::Table, _scenario: &Scenario, _system: &System, _registry: &Registry) -> std::result::Result<(), ValidationError> {
        let s = settings(table)?;
        if s.hbar_sweep.is_empty() || s.hbar_sweep.len() > 16 {
            return fail("hbar_sweep", "needs between 1 and 16 values");
        }
        if s.hbar_sweep.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
            return fail("hbar_sweep", "values must be positive");
        }
        if s.grid_n != 0 && !(s.grid_n.is_power_of_two() && (32..=512).contains(&s.grid_n)) {
            return fail("grid_n", "must be 0 or a power of two in [32, 512]");
        }
        if !(s.grid_tolerance > 0.0) {
            return fail("grid_tolerance", "must be positive");
        }
        if s.expect_ratio.is_some_and(|r| !(r > 0.0 && r.is_finite())) {
            return fail("expect_ratio", "must be positive");
        }
        for &h in &s.hbar_sweep {
            let hbar = from_f64(h).expect("finite");
            let mut sampled = Vec::new();
            for (key, text) in [("a", s.a), ("b", s.b)] {
                let sym = symbol(text, &hbar).map_err(|e| ValidationError {
                    path: key.into(),
                    message: e.to_string(),
                })?;
                if sym.degree() > 8 {
                    return fail(key, "degree must not exceed 8");
                }
                sampled.push((key, sym));
            }
            if s.grid_n > 0 {
                let (g, _) = grid_for(h, s.grid_n).map_err(|e| ValidationError {
                    path: "grid_n".into(),
                    message: e.to_string(),
                })?;
                for (key, sym) in &sampled {
                    let f = sample_poly(sym, &g, FlatTopWindow::default()).map_err(|e| ValidationError {
                        path: (*key).into(),
                        message: e.to_string(),
                    })?;
                    let tail = tail_fraction(&f);
                    if tail > TAIL_LIMIT {
                        return fail(*key, format!("sampled symbol is not band-limited at ħ = {h} (tail {tail:e}); lower the degree or grid_n"));
                    }
                }
            }
        }
        Ok(())
    }

    fn run(&self, table: &toml::Table, ctx: &RunContext) -> Result<Outcome> {
        let s = settings(table).expect("validated");
        let rows = bracket_sweep(s.a, s.b, &s.hbar_sweep, s.grid_n)?;
        let mut out = Outcome::default();
        if let Some(want) = s.expect_ratio {
            let want = from_f64(want).expect("finite");
            for r in rows.iter().skip(1) {
                let ok = r.ratio.as_ref() == Some(&want);
                let got = r.ratio.as_ref().map_or("undefined".to_string(), |q| q.to_string());
                out.checks.push(CheckItem::holds(format!("exact ratio at ħ = {}", r.hbar), ok, format!("got {got}, want {want}")));
            }
        }
        let mut t = Table::new("sweep", &["hbar", "exact_defect", "exact_defect_value", "ratio", "grid_defect", "grid_reference", "grid_relative_error"]);
        for r in &rows {
            let rel = match (r.grid, r.reference) {
                (Some(g), Some(e)) => {
                    let rel = if e > 0.0 { (g / e - 1.0).abs() } else { g };
                    out.checks.push(CheckItem::below(format!("grid defect at ħ = {}", r.hbar), rel, s.grid_tolerance, ctx.tolerance_scale));
                    Some(rel)
                }
                _ => None,
            };
            let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
            t.push(vec![
                r.hbar.to_string(),
                r.exact.to_string(),
                fmt_f64(to_f64(&r.exact)),
                r.ratio.as_ref().map(|q| q.to_string()).unwrap_or_default(),
                opt(r.grid),
                opt(r.reference),
                opt(rel),
            ]);
        }
        out.tables.push(t);
        if let Some(last) = rows.last() {
            out.metric("exact_defect_at_smallest_hbar", to_f64(&last.exact));
        }
        if ctx.plots {
            let mut series = vec![Series::new(
                "exact",
                rows.iter().map(|r| (to_f64(&r.hbar).log2(), to_f64(&r.exact).log2())).collect(),
                Style::Line,
            )];
            if rows.iter().all(|r| r.grid.is_some()) {
                series.push(Series::new(
                    "grid",
                    rows.iter().map(|r| (to_f64(&r.hbar).log2(), r.grid.unwrap().log2())).collect(),
                    Style::Dots,
                ));
            }
            out.plots.push(("sweep".into(), svg::plot("Moyal minus Poisson bracket", "log₂ ħ", "log₂ defect", &series)));
        }
        Ok(out)
    }
}
