//! Named strategies: scenario analyses, check suites and velocity fields.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use moyal_core::dynamics::{split_step_evolve, TimeSeries, VelocityField};
use moyal_core::{Error, Floor, Result};

use crate::report::{CheckItem, Outcome};
use crate::scenario::{Scenario, System, ValidationError};

/// Shared state of one scenario run.
pub struct RunContext<'a> {
    pub scenario: &'a Scenario,
    pub system: &'a System,
    pub registry: &'a Registry,
    pub seed: u64,
    pub tolerance_scale: f64,
    pub plots: bool,
    series: OnceLock<std::result::Result<TimeSeries, Error>>,
}

impl<'a> RunContext<'a> {
    pub fn new(scenario: &'a Scenario, system: &'a System, registry: &'a Registry, seed: u64, tolerance_scale: f64, plots: bool) -> Self {
        Self {
            scenario,
            system,
            registry,
            seed,
            tolerance_scale,
            plots,
            series: OnceLock::new(),
        }
    }

    /// The scenario's evolution, computed once and shared by all analyses.
    pub fn series(&self) -> Result<&TimeSeries> {
        self.series
            .get_or_init(|| {
                let ev = self
                    .scenario
                    .evolution
                    .ok_or_else(|| moyal_core::Error::InvalidParameter {
                        name: "evolution",
                        reason: "this analysis needs an [evolution] section".into(),
                    })?;
                split_step_evolve(&self.system.state, &self.system.potential, ev.dt, ev.steps, ev.record_every)
            })
            .as_ref()
            .map_err(Clone::clone)
    }
}

/// One `[[analysis]]` kind.
pub trait Analysis: Send + Sync {
    fn name(&self) -> &'static str;
    fn summary(&self) -> &'static str;
    /// Check the analysis table against the scenario before anything runs.
    fn validate(&self, params: &toml::Table, scenario: &Scenario, system: &System, registry: &Registry) -> std::result::Result<(), ValidationError>;
    fn run(&self, params: &toml::Table, ctx: &RunContext) -> Result<Outcome>;
}

/// A named list of invariant checks at fixed desk-scale settings.
pub trait CheckSuite: Send + Sync {
    fn name(&self) -> &'static str;
    fn summary(&self) -> &'static str;
    fn run(&self, tolerance_scale: f64) -> Result<Vec<CheckItem>>;
}

/// Source of the velocity field streamlines follow.
pub trait FieldSource: Send + Sync {
    fn name(&self) -> &'static str;
    fn validate(&self, scenario: &Scenario) -> std::result::Result<(), ValidationError>;
    fn build(&self, ctx: &RunContext, series: &TimeSeries, floor: Floor) -> Result<Box<dyn VelocityField>>;
}

#[derive(Default)]
pub struct Registry {
    analyses: BTreeMap<&'static str, Box<dyn Analysis>>,
    suites: BTreeMap<&'static str, Box<dyn CheckSuite>>,
    fields: BTreeMap<&'static str, Box<dyn FieldSource>>,
}

impl Registry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Everything this crate ships.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        crate::analyses::register(&mut r);
        crate::suites::register(&mut r);
        crate::fields::register(&mut r);
        r
    }

    pub fn add_analysis(&mut self, a: Box<dyn Analysis>) {
        self.analyses.insert(a.name(), a);
    }

    pub fn add_suite(&mut self, s: Box<dyn CheckSuite>) {
        self.suites.insert(s.name(), s);
    }

    pub fn add_field(&mut self, f: Box<dyn FieldSource>) {
        self.fields.insert(f.name(), f);
    }

    pub fn analysis(&self, name: &str) -> Option<&dyn Analysis> {
        self.analyses.get(name).map(|b| b.as_ref())
    }

    pub fn suite(&self, name: &str) -> Option<&dyn CheckSuite> {
        self.suites.get(name).map(|b| b.as_ref())
    }

    pub fn field(&self, name: &str) -> Option<&dyn FieldSource> {
        self.fields.get(name).map(|b| b.as_ref())
    }

    pub fn analysis_names(&self) -> Vec<&'static str> {
        self.analyses.keys().copied().collect()
    }

    pub fn suite_names(&self) -> Vec<&'static str> {
        self.suites.keys().copied().collect()
    }

    pub fn field_names(&self) -> Vec<&'static str> {
        self.fields.keys().copied().collect()
    }

    pub fn suites(&self) -> impl Iterator<Item = &dyn CheckSuite> {
        self.suites.values().map(|b| b.as_ref())
    }
}
