//! Scenario analyses.

mod brackets;
mod clifford;
mod conditional;
mod shadow;
mod trajectories;
mod wigner;

use moyal_core::{Grid, PhaseSpaceFunction, Wavefunction};

use crate::registry::Registry;

pub use brackets::bracket_sweep;

pub fn register(r: &mut Registry) {
    r.add_analysis(Box::new(wigner::WignerAnalysis));
    r.add_analysis(Box::new(conditional::Fields));
    r.add_analysis(Box::new(trajectories::Trajectories));
    r.add_analysis(Box::new(shadow::Shadow));
    r.add_analysis(Box::new(brackets::Brackets));
    r.add_analysis(Box::new(clifford::CliffordDemo));
}

/// `∫ p W dp / |ψ|²` at each position (or `∫ x W dx / |φ|²` at each momentum
/// when `along_x` is false), NaN where the density is zero.
pub fn wigner_moment(w: &PhaseSpaceFunction, along_x: bool) -> Vec<f64> {
    let g: &Grid = w.grid();
    let n = g.n();
    (0..n)
        .map(|a| {
            let (mut num, mut den) = (0.0, 0.0);
            for b in 0..n {
                let (v, c) = if along_x { (w.at(a, b), g.p(b)) } else { (w.at(b, a), g.x(b)) };
                num += c * v;
                den += v;
            }
            if den > 0.0 {
                num / den
            } else {
                f64::NAN
            }
        })
        .collect()
}

/// Largest `|a − b|` where `valid`.
pub fn max_gap(a: &[f64], b: &[f64], valid: &[bool]) -> f64 {
    a.iter()
        .zip(b)
        .zip(valid)
        .filter(|(_, v)| **v)
        .map(|((x, y), _)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn stride_for(n: usize, target: usize) -> usize {
    n.div_ceil(target).max(1)
}

pub fn state_at<'a>(ctx: &'a crate::registry::RunContext, at: &str) -> moyal_core::Result<&'a Wavefunction> {
    match at {
        "final" => Ok(ctx.series()?.last()),
        _ => Ok(&ctx.system.state),
    }
}
