//! Numerical and exact-algebra workbench for phase-space quantum mechanics.
//!
//! The crate is organized by subsystem:
//!
//! * [`grid`]: uniform grids, wavefunctions, Fourier convention, polar split.
//! * [`wigner`]: Wigner transform, marginals, expectations, characteristic function.
//! * [`star`]: Moyal star product (exact polynomial series and grid spectral) and brackets.
//! * [`weyl`]: truncated-oscillator operators, displacements, Weyl quantization.
//! * [`bohm`]: conditional-expectation fields, quantum potential, QHJ residual.
//! * [`dynamics`]: split-step propagation, two-slit states, streamline ensembles.
//! * [`shadow`]: fractional Fourier transform and cross-representation streamlines.
//! * [`clifford`]: groupoid arrows, Clifford algebras, idempotents (exact arithmetic).

pub mod analytic;
pub mod bohm;
pub mod clifford;
pub mod dynamics;
pub mod error;
pub mod exact;
pub mod fourier;
pub mod grid;
pub mod phase_space;
pub mod shadow;
pub mod star;
pub mod stencil;
pub mod weyl;
pub mod wigner;

pub use error::{Error, Result};
pub use grid::{
    gaussian_packet, polar_decompose, superpose, to_momentum, to_position, Floor, Grid,
    PhysicsConfig, PolarFields, Representation, Wavefunction,
};
pub use phase_space::{ComplexPhaseSpaceFunction, PhaseSpaceFunction, Region};
pub use wigner::{characteristic_function, marginals, wigner_transform, CharacteristicFunction};
