//! Scenario files: schema, parsing and validation.
//!
//! A scenario is a TOML document:
//!
//! ```text
//! scenario   := name seed? description? physics grid state potential? evolution? analysis*
//! physics    := [physics] hbar mass
//! grid       := [grid] n x_min x_max
//! state      := [state] kind = "gaussian" x0 p0 sigma
//!             | [state] kind = "cat" x0 p0 sigma phase?
//!             | [state] kind = "two-slit" separation width forward_momentum
//! potential  := [potential] kind = "free" | kind = "harmonic" omega
//! evolution  := [evolution] dt steps record_every?
//! analysis   := [[analysis]] kind = <registered analysis> <analysis keys>
//! ```
//!
//! Unknown keys are rejected. Every precondition the run depends on is
//! checked by [`Scenario::validate`], which reports the offending field path.

use std::f64::consts::PI;

use moyal_core::dynamics::{max_stable_dt, two_slit_state, Potential, TwoSlit, EDGE_FRACTION};
use moyal_core::{gaussian_packet, superpose, Grid, PhysicsConfig, Wavefunction};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::registry::Registry;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{path}: {message}")]
pub struct ValidationError {
    pub path: String,
    pub message: String,
}

pub fn fail<T>(path: impl Into<String>, message: impl Into<String>) -> Result<T, ValidationError> {
    Err(ValidationError {
        path: path.into(),
        message: message.into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub seed: u64,
    pub physics: PhysicsSection,
    pub grid: GridSection,
    pub state: StateSection,
    #[serde(default)]
    pub potential: PotentialSection,
    pub evolution: Option<EvolutionSection>,
    #[serde(default)]
    pub analysis: Vec<toml::Table>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSection {
    pub hbar: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n: usize,
    pub x_min: f64,
    pub x_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StateSection {
    Gaussian {
        x0: f64,
        p0: f64,
        sigma: f64,
    },
    /// `G(x0, p0, σ) + e^{iφ} G(−x0, −p0, σ)`, normalized.
    Cat {
        x0: f64,
        p0: f64,
        sigma: f64,
        #[serde(default)]
        phase: f64,
    },
    TwoSlit {
        separation: f64,
        width: f64,
        forward_momentum: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialSection {
    #[default]
    Free,
    Harmonic { omega: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSection {
    pub dt: f64,
    pub steps: usize,
    #[serde(default = "one")]
    pub record_every: usize,
}

fn one() -> usize {
    1
}

/// Grid, state and potential built from a validated scenario.
#[derive(Debug, Clone)]
pub struct System {
    pub config: PhysicsConfig,
    pub grid: Grid,
    pub state: Wavefunction,
    pub potential: Potential,
}

fn positive(path: &str, v: f64) -> Result<(), ValidationError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        fail(path, format!("must be positive and finite, got {v}"))
    }
}

fn finite(path: &str, v: f64) -> Result<(), ValidationError> {
    if v.is_finite() {
        Ok(())
    } else {
        fail(path, format!("must be finite, got {v}"))
    }
}

/// Gaussian components `(x0, p0, σ)` of the initial state.
fn components(state: &StateSection) -> Vec<(f64, f64, f64)> {
    match *state {
        StateSection::Gaussian { x0, p0, sigma } => vec![(x0, p0, sigma)],
        StateSection::Cat { x0, p0, sigma, .. } => vec![(x0, p0, sigma), (-x0, -p0, sigma)],
        StateSection::TwoSlit { separation, width, .. } => {
            vec![(0.5 * separation, 0.0, width), (-0.5 * separation, 0.0, width)]
        }
    }
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ValidationError> {
        serde_path_to_error::deserialize(toml::Deserializer::new(text)).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let at = inner.span().map(|s| format!(" (byte {})", s.start)).unwrap_or_default();
            ValidationError {
                path: if path == "." { "scenario".into() } else { path },
                message: format!("{}{at}", inner.message()),
            }
        })
    }

    pub fn config(&self) -> PhysicsConfig {
        PhysicsConfig {
            hbar: self.physics.hbar,
            mass: self.physics.mass,
        }
    }

    /// Check every field and build the system the run starts from.
    pub fn validate(&self, registry: &Registry) -> Result<System, ValidationError> {
        if self.name.trim().is_empty() {
            return fail("name", "must not be empty");
        }
        positive("physics.hbar", self.physics.hbar)?;
        positive("physics.mass", self.physics.mass)?;
        let config = self.config();

        let g = self.grid;
        if !(g.n >= 16 && g.n <= 4096 && g.n.is_power_of_two()) {
            return fail("grid.n", format!("must be a power of two in [16, 4096], got {}", g.n));
        }
        finite("grid.x_min", g.x_min)?;
        finite("grid.x_max", g.x_max)?;
        if g.x_max <= g.x_min {
            return fail("grid.x_max", "must exceed grid.x_min");
        }
        let grid = Grid::new(g.n, g.x_min, g.x_max, &config).map_err(|e| ValidationError {
            path: "grid".into(),
            message: e.to_string(),
        })?;

        let potential = match self.potential {
            PotentialSection::Free => Potential::free(&grid),
            PotentialSection::Harmonic { omega } => {
                positive("potential.omega", omega)?;
                Potential::harmonic(&grid, omega, &config).map_err(|e| ValidationError {
                    path: "potential".into(),
                    message: e.to_string(),
                })?
            }
        };

        let state = self.build_state(&grid, &config)?;

        if let Some(ev) = self.evolution {
            positive("evolution.dt", ev.dt)?;
            let limit = max_stable_dt(&grid, &config);
            if ev.dt > limit {
                return fail("evolution.dt", format!("exceeds the stability limit 0.1·m·dx²/ħ = {limit:e}"));
            }
            if ev.steps == 0 || ev.steps > 10_000_000 {
                return fail("evolution.steps", format!("must be in [1, 10⁷], got {}", ev.steps));
            }
            if ev.record_every == 0 {
                return fail("evolution.record_every", "must be at least 1");
            }
            self.check_reach(&grid, &config, ev.dt * ev.steps as f64)?;
        }

        for (i, table) in self.analysis.iter().enumerate() {
            let path = format!("analysis[{i}]");
            let kind = match table.get("kind") {
                Some(toml::Value::String(k)) => k.as_str(),
                Some(_) => return fail(format!("{path}.kind"), "must be a string"),
                None => return fail(format!("{path}.kind"), "missing"),
            };
            let analysis = registry.analysis(kind).ok_or_else(|| ValidationError {
                path: format!("{path}.kind"),
                message: format!("unknown analysis `{kind}`; known: {}", registry.analysis_names().join(", ")),
            })?;
            let system = System {
                config,
                grid,
                state: state.clone(),
                potential: potential.clone(),
            };
            analysis.validate(table, self, &system, registry).map_err(|mut e| {
                e.path = format!("{path}.{}", e.path);
                e
            })?;
        }
        Ok(System {
            config,
            grid,
            state,
            potential,
        })
    }

    fn build_state(&self, grid: &Grid, config: &PhysicsConfig) -> Result<Wavefunction, ValidationError> {
        let core = |e: moyal_core::Error| ValidationError {
            path: "state".into(),
            message: e.to_string(),
        };
        match self.state {
            StateSection::Gaussian { x0, p0, sigma } => {
                finite("state.x0", x0)?;
                finite("state.p0", p0)?;
                positive("state.sigma", sigma)?;
                self.resolvable(grid, sigma, p0.abs(), "state.sigma")?;
                gaussian_packet(grid, x0, p0, sigma, config).map_err(core)
            }
            StateSection::Cat { x0, p0, sigma, phase } => {
                finite("state.x0", x0)?;
                finite("state.p0", p0)?;
                finite("state.phase", phase)?;
                positive("state.sigma", sigma)?;
                self.resolvable(grid, sigma, p0.abs(), "state.sigma")?;
                let a = gaussian_packet(grid, x0, p0, sigma, config).map_err(core)?;
                let b = gaussian_packet(grid, -x0, -p0, sigma, config).map_err(core)?;
                superpose(&[(Complex64::new(1.0, 0.0), &a), (Complex64::from_polar(1.0, phase), &b)]).map_err(core)
            }
            StateSection::TwoSlit {
                separation,
                width,
                forward_momentum,
            } => {
                positive("state.width", width)?;
                positive("state.separation", separation)?;
                positive("state.forward_momentum", forward_momentum)?;
                if separation < 4.0 * width {
                    return fail("state.separation", format!("must be at least 4·width = {}", 4.0 * width));
                }
                self.resolvable(grid, width, 0.0, "state.width")?;
                let slit = TwoSlit {
                    separation,
                    width,
                    forward_momentum,
                };
                two_slit_state(&slit, grid, config).map_err(core)
            }
        }
    }

    /// σ ≥ 3dx and the momentum content inside the grid's band.
    fn resolvable(&self, grid: &Grid, sigma: f64, p0: f64, path: &str) -> Result<(), ValidationError> {
        if sigma < 3.0 * grid.dx() {
            return fail(path, format!("{sigma} is below 3·dx = {}", 3.0 * grid.dx()));
        }
        let reach = p0 + 8.0 * self.physics.hbar / sigma;
        if reach > grid.p_max() {
            return fail(path, format!("momentum content up to {reach} exceeds the grid band ±{}", grid.p_max()));
        }
        Ok(())
    }

    /// Conservative envelope of every Gaussian component over `[0, t]`,
    /// which must stay clear of the absorbing-edge margin.
    pub(crate) fn check_reach(&self, grid: &Grid, config: &PhysicsConfig, t: f64) -> Result<(), ValidationError> {
        let margin = EDGE_FRACTION * grid.length();
        let (lo, hi) = (grid.x_min() + margin, grid.x_max() - margin);
        for (x0, p0, sigma) in components(&self.state) {
            let (centre_lo, centre_hi, width) = match self.potential {
                PotentialSection::Free => {
                    let tau = config.hbar * t / (config.mass * sigma * sigma);
                    let end = x0 + p0 * t / config.mass;
                    (x0.min(end), x0.max(end), sigma * (1.0 + tau * tau).sqrt())
                }
                PotentialSection::Harmonic { omega } => {
                    let mw = config.mass * omega;
                    let amp = (x0 * x0 + (p0 / mw).powi(2)).sqrt();
                    let turns = omega * t >= PI;
                    let r = if turns { amp } else { amp.max(x0.abs()) };
                    (-r, r, sigma.max(config.hbar / (mw * sigma)))
                }
            };
            // 6σ/√2 keeps the edge density below about 1e-8 of the peak
            let reach = 6.0 * width;
            if centre_lo - reach < lo || centre_hi + reach > hi {
                return fail(
                    "evolution.steps",
                    format!(
                        "the state spreads to [{:.3}, {:.3}] by t = {t}, beyond the interior [{lo:.3}, {hi:.3}]",
                        centre_lo - reach,
                        centre_hi + reach
                    ),
                );
            }
        }
        Ok(())
    }
}

/// Typed view of one `[[analysis]]` table with path-aware accessors.
pub struct Params<'a> {
    table: &'a toml::Table,
    used: std::cell::RefCell<Vec<&'static str>>,
}

impl<'a> Params<'a> {
    pub fn new(table: &'a toml::Table) -> Self {
        Self {
            table,
            used: std::cell::RefCell::new(vec!["kind"]),
        }
    }

    fn raw(&self, key: &'static str) -> Option<&'a toml::Value> {
        self.used.borrow_mut().push(key);
        self.table.get(key)
    }

    pub fn f64_or(&self, key: &'static str, default: f64) -> Result<f64, ValidationError> {
        match self.raw(key) {
            None => Ok(default),
            Some(toml::Value::Float(v)) => finite(key, *v).map(|_| *v),
            Some(toml::Value::Integer(v)) => Ok(*v as f64),
            Some(_) => fail(key, "must be a number"),
        }
    }

    pub fn opt_f64(&self, key: &'static str) -> Result<Option<f64>, ValidationError> {
        if self.table.contains_key(key) {
            self.f64_or(key, 0.0).map(Some)
        } else {
            self.used.borrow_mut().push(key);
            Ok(None)
        }
    }

    pub fn usize_or(&self, key: &'static str, default: usize) -> Result<usize, ValidationError> {
        match self.raw(key) {
            None => Ok(default),
            Some(toml::Value::Integer(v)) if *v >= 0 => Ok(*v as usize),
            Some(_) => fail(key, "must be a non-negative integer"),
        }
    }

    pub fn str_or(&self, key: &'static str, default: &'a str) -> Result<&'a str, ValidationError> {
        match self.raw(key) {
            None => Ok(default),
            Some(toml::Value::String(s)) => Ok(s.as_str()),
            Some(_) => fail(key, "must be a string"),
        }
    }

    pub fn bool_or(&self, key: &'static str, default: bool) -> Result<bool, ValidationError> {
        match self.raw(key) {
            None => Ok(default),
            Some(toml::Value::Boolean(b)) => Ok(*b),
            Some(_) => fail(key, "must be true or false"),
        }
    }

    pub fn f64_list_or(&self, key: &'static str, default: &[f64]) -> Result<Vec<f64>, ValidationError> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(toml::Value::Array(items)) => items
                .iter()
                .enumerate()
                .map(|(i, v)| match v {
                    toml::Value::Float(f) if f.is_finite() => Ok(*f),
                    toml::Value::Integer(n) => Ok(*n as f64),
                    _ => fail(format!("{key}[{i}]"), "must be a finite number"),
                })
                .collect(),
            Some(_) => fail(key, "must be an array of numbers"),
        }
    }

    /// Reject keys no accessor asked for. Call after reading every field.
    pub fn finish(&self) -> Result<(), ValidationError> {
        let used = self.used.borrow();
        match self.table.keys().find(|k| !used.contains(&k.as_str())) {
            Some(k) => fail(k.clone(), "unknown key"),
            None => Ok(()),
        }
    }
}
