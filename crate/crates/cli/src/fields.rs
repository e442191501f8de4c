//! Velocity fields selectable by name in trajectory analyses.

use moyal_core::dynamics::{CoherentField, FreeGaussianField, SeriesField, TimeSeries, VelocityField};
use moyal_core::{Floor, Result};

use crate::registry::{FieldSource, Registry, RunContext};
use crate::scenario::{fail, PotentialSection, Scenario, StateSection, ValidationError};

pub fn register(r: &mut Registry) {
    r.add_field(Box::new(Guidance));
    r.add_field(Box::new(FreeGaussian));
    r.add_field(Box::new(Coherent));
}

/// Conditional momentum of the propagated series, divided by the mass.
struct Guidance;

impl FieldSource for Guidance {
    fn name(&self) -> &'static str {
        "guidance"
    }

    fn validate(&self, scenario: &Scenario) -> std::result::Result<(), ValidationError> {
        if scenario.evolution.is_none() {
            return fail("field", "the guidance field needs an [evolution] section");
        }
        Ok(())
    }

    fn build(&self, _ctx: &RunContext, series: &TimeSeries, floor: Floor) -> Result<Box<dyn VelocityField>> {
        Ok(Box::new(SeriesField::new(series, floor)?))
    }
}

/// Closed form for a single free Gaussian.
struct FreeGaussian;

impl FieldSource for FreeGaussian {
    fn name(&self) -> &'static str {
        "free-gaussian"
    }

    fn validate(&self, scenario: &Scenario) -> std::result::Result<(), ValidationError> {
        match (scenario.state, scenario.potential) {
            (StateSection::Gaussian { .. }, PotentialSection::Free) => Ok(()),
            _ => fail("field", "free-gaussian needs a gaussian state and a free potential"),
        }
    }

    fn build(&self, ctx: &RunContext, _series: &TimeSeries, _floor: Floor) -> Result<Box<dyn VelocityField>> {
        let StateSection::Gaussian { x0, p0, sigma } = ctx.scenario.state else {
            unreachable!("validated");
        };
        Ok(Box::new(FreeGaussianField {
            x0,
            p0,
            sigma,
            config: ctx.system.config,
        }))
    }
}

/// Closed form for a harmonic coherent state.
struct Coherent;

impl FieldSource for Coherent {
    fn name(&self) -> &'static str {
        "coherent"
    }

    fn validate(&self, scenario: &Scenario) -> std::result::Result<(), ValidationError> {
        let (StateSection::Gaussian { sigma, .. }, PotentialSection::Harmonic { omega }) = (scenario.state, scenario.potential) else {
            return fail("field", "coherent needs a gaussian state and a harmonic potential");
        };
        let want = (scenario.physics.hbar / (scenario.physics.mass * omega)).sqrt();
        if (sigma - want).abs() > 1e-9 * want {
            return fail("field", format!("coherent needs state.sigma = √(ħ/mω) = {want}"));
        }
        Ok(())
    }

    fn build(&self, ctx: &RunContext, _series: &TimeSeries, _floor: Floor) -> Result<Box<dyn VelocityField>> {
        let (StateSection::Gaussian { x0, p0, .. }, PotentialSection::Harmonic { omega }) = (ctx.scenario.state, ctx.scenario.potential) else {
            unreachable!("validated");
        };
        Ok(Box::new(CoherentField {
            q0: x0,
            p0,
            omega,
            config: ctx.system.config,
        }))
    }
}
