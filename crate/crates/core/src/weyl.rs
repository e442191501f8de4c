//! Operators in a truncated harmonic-oscillator basis and the Weyl
//! correspondence between operators and phase-space symbols.
//!
//! The basis is the eigenbasis of `(P̂² + X̂²)/2` (unit mass and frequency)
//! with the configured ħ. Displacements are `Ŝ(α,β) = exp[i(αP̂ + βX̂)/ħ]`,
//! so `Ŝ X̂ Ŝ⁻¹ = X̂ + α` and `Ŝ P̂ Ŝ⁻¹ = P̂ − β`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::exact::to_f64;
use crate::fourier;
use crate::grid::{Grid, PhysicsConfig, Wavefunction};
use crate::phase_space::{ComplexPhaseSpaceFunction, PhaseSpaceFunction};
use crate::star::grid::{coefficients, tail_of, BAND_LIMIT};
use crate::star::PolySymbol;
use crate::wigner::CharacteristicFunction;

/// Largest polynomial degree accepted by [`weyl_quantize_poly`].
pub const MAX_DEGREE: u32 = 4;

/// Relative Frobenius weight allowed outside the leading half-block.
pub const SUPPORT_TOLERANCE: f64 = 1e-4;

const HERMITIAN_TOLERANCE: f64 = 1e-10;

fn max_modulus(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Dense operator on the first `N` oscillator levels.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    matrix: DMatrix<Complex64>,
    config: PhysicsConfig,
    hermitian: bool,
}

impl Operator {
    pub fn new(matrix: DMatrix<Complex64>, config: PhysicsConfig) -> Result<Self> {
        config.validate()?;
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(invalid("matrix", "operator matrix must be square and non-empty"));
        }
        if matrix.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(invalid("matrix", "operator has non-finite entries"));
        }
        Ok(Self::wrap(matrix, config))
    }

    fn wrap(matrix: DMatrix<Complex64>, config: PhysicsConfig) -> Self {
        let defect = max_modulus(&(&matrix - matrix.adjoint()));
        Self {
            matrix,
            config,
            hermitian: defect < HERMITIAN_TOLERANCE,
        }
    }

    pub fn identity(n: usize, config: PhysicsConfig) -> Self {
        Self::wrap(DMatrix::identity(n, n), config)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }
    pub fn config(&self) -> &PhysicsConfig {
        &self.config
    }
    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn hermitian_defect(&self) -> f64 {
        max_modulus(&(&self.matrix - self.matrix.adjoint()))
    }

    fn check(&self, other: &Operator) -> Result<()> {
        if self.dim() != other.dim() || self.config != other.config {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    pub fn adjoint(&self) -> Self {
        Self::wrap(self.matrix.adjoint(), self.config)
    }

    pub fn mul(&self, other: &Operator) -> Result<Self> {
        self.check(other)?;
        Ok(Self::wrap(&self.matrix * &other.matrix, self.config))
    }

    pub fn add(&self, other: &Operator) -> Result<Self> {
        self.check(other)?;
        Ok(Self::wrap(&self.matrix + &other.matrix, self.config))
    }

    pub fn sub(&self, other: &Operator) -> Result<Self> {
        self.check(other)?;
        Ok(Self::wrap(&self.matrix - &other.matrix, self.config))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::wrap(&self.matrix * c, self.config)
    }

    /// `AB − BA`.
    pub fn commutator(&self, other: &Operator) -> Result<Self> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// Copy with every entry outside the leading `k × k` block set to zero.
    pub fn compress(&self, k: usize) -> Self {
        let n = self.dim();
        let mut m = self.matrix.clone();
        for i in 0..n {
            for j in 0..n {
                if i >= k || j >= k {
                    m[(i, j)] = Complex64::new(0.0, 0.0);
                }
            }
        }
        Self::wrap(m, self.config)
    }

    /// `T A T` with `T = diag(t_k)`, `t_k = ½ erfc((k − center)/width)`.
    /// A smooth roll-off keeps the Weyl symbol of a truncated operator close
    /// to that of the untruncated one inside the flat part; a sharp cut
    /// leaves an alternating `Σ(−1)ᵏ` residue at the origin.
    pub fn taper(&self, center: f64, width: f64) -> Self {
        let n = self.dim();
        let t: Vec<f64> = (0..n).map(|k| 0.5 * libm::erfc((k as f64 - center) / width)).collect();
        let mut m = self.matrix.clone();
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] *= t[i] * t[j];
            }
        }
        Self::wrap(m, self.config)
    }

    /// Largest entry modulus of `A − B` on the leading `k × k` block.
    pub fn block_distance(&self, other: &Operator, k: usize) -> Result<f64> {
        self.check(other)?;
        let k = k.min(self.dim());
        let d = self.matrix.view((0, 0), (k, k)) - other.matrix.view((0, 0), (k, k));
        Ok(max_modulus(&d))
    }

    /// Frobenius norm of the part outside the leading half-block relative to
    /// the whole.
    pub fn outside_half_block(&self) -> f64 {
        let n = self.dim();
        let h = n / 2;
        let mut outside = 0.0;
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let w = self.matrix[(i, j)].norm_sqr();
                total += w;
                if i >= h || j >= h {
                    outside += w;
                }
            }
        }
        if total == 0.0 {
            0.0
        } else {
            (outside / total).sqrt()
        }
    }

    /// Ascending eigenvalues of the Hermitian part `(A + A†)/2`.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let h = (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

/// Density operator with its validity flags.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    op: Operator,
    pub trace_one: bool,
    pub positive: bool,
}

impl DensityOperator {
    /// Validate `rho` as a state: unit trace and no eigenvalue below −1e-10.
    pub fn new(rho: Operator) -> Result<Self> {
        if !rho.is_hermitian() {
            return Err(invalid("rho", "density operator must be Hermitian"));
        }
        let trace_one = (rho.trace() - 1.0).norm() <= 1e-10;
        let positive = rho.hermitian_eigenvalues().first().is_none_or(|&l| l >= -1e-10);
        if !trace_one {
            return Err(invalid("rho", format!("trace {} differs from 1", rho.trace())));
        }
        if !positive {
            return Err(invalid("rho", "density operator has a negative eigenvalue"));
        }
        Ok(Self { op: rho, trace_one, positive })
    }

    /// `|ψ⟩⟨ψ|` for Fock coefficients `c` (normalized here).
    pub fn pure(c: &[Complex64], config: PhysicsConfig) -> Result<Self> {
        Self::mixture(&[(1.0, c)], config)
    }

    /// `Σ wᵢ |ψᵢ⟩⟨ψᵢ|` with weights renormalized to sum to one.
    pub fn mixture(terms: &[(f64, &[Complex64])], config: PhysicsConfig) -> Result<Self> {
        let n = terms.first().map(|t| t.1.len()).ok_or_else(|| invalid("terms", "empty mixture"))?;
        let wsum: f64 = terms.iter().map(|t| t.0).sum();
        if terms.iter().any(|t| t.0 < 0.0 || t.1.len() != n) || wsum <= 0.0 {
            return Err(invalid("terms", "weights must be non-negative and states equally sized"));
        }
        let mut m = DMatrix::zeros(n, n);
        for (w, c) in terms {
            let v = DVector::from_column_slice(c);
            let norm = v.norm();
            if norm == 0.0 {
                return Err(Error::ZeroVector { norm });
            }
            let v = v / Complex64::new(norm, 0.0);
            m += (&v * v.adjoint()) * Complex64::new(w / wsum, 0.0);
        }
        Self::new(Operator::new(m, config)?)
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    /// Frobenius norm of `ρ² − ρ`.
    pub fn idempotency_defect(&self) -> f64 {
        let m = self.op.matrix();
        (m * m - m).norm()
    }

    pub fn is_pure(&self) -> bool {
        self.idempotency_defect() < 1e-8
    }
}

fn ladder(n: usize) -> DMatrix<Complex64> {
    let mut a = DMatrix::zeros(n, n);
    for k in 1..n {
        a[(k - 1, k)] = Complex64::new((k as f64).sqrt(), 0.0);
    }
    a
}

fn pair_matrices(n: usize, hbar: f64) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let a = ladder(n);
    let ad = a.adjoint();
    let s = (hbar / 2.0).sqrt();
    let x = (&a + &ad) * Complex64::new(s, 0.0);
    let p = (&ad - &a) * Complex64::new(0.0, s);
    (x, p)
}

/// `X̂ = √(ħ/2)(a + a†)` and `P̂ = i√(ħ/2)(a† − a)` on `N` levels.
pub fn canonical_pair(n: usize, config: &PhysicsConfig) -> Result<(Operator, Operator)> {
    config.validate()?;
    if n < 2 {
        return Err(invalid("N", "basis needs at least two levels"));
    }
    let (x, p) = pair_matrices(n, config.hbar);
    Ok((Operator::wrap(x, *config), Operator::wrap(p, *config)))
}

/// `α² + β²` bound inside which an `N`-level displacement is trusted.
pub fn faithful_radius_sqr(n: usize, hbar: f64) -> f64 {
    n as f64 * hbar / 4.0
}

pub fn in_faithful_range(alpha: f64, beta: f64, n: usize, hbar: f64) -> bool {
    alpha * alpha + beta * beta <= faithful_radius_sqr(n, hbar)
}

/// Raised (not fatal) when a displacement leaves the faithful range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeWarning {
    pub alpha: f64,
    pub beta: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Displacement {
    pub operator: Operator,
    pub warning: Option<RangeWarning>,
}

/// Matrix elements `⟨m|D(z)|n⟩` of the untruncated displacement operator
/// for `m, n < N`, by the column recurrence
/// `D|n+1⟩ = (a† − z*) D|n⟩ / √(n+1)` from the coherent state `D|0⟩`.
fn displacement_matrix(z: Complex64, n: usize) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(n, n);
    let mut c = Complex64::new((-z.norm_sqr() / 2.0).exp(), 0.0);
    for row in 0..n {
        if row > 0 {
            c = c * z / (row as f64).sqrt();
        }
        m[(row, 0)] = c;
    }
    let zc = z.conj();
    for col in 0..n.saturating_sub(1) {
        let norm = 1.0 / ((col + 1) as f64).sqrt();
        for row in 0..n {
            let up = if row > 0 { m[(row - 1, col)] * (row as f64).sqrt() } else { Complex64::new(0.0, 0.0) };
            m[(row, col + 1)] = (up - zc * m[(row, col)]) * norm;
        }
    }
    m
}

fn displacement_z(alpha: f64, beta: f64, hbar: f64) -> Complex64 {
    Complex64::new(-alpha, beta) / (2.0 * hbar).sqrt()
}

/// `Ŝ(α,β) = exp[i(αP̂ + βX̂)/ħ]` on `N` levels.
pub fn displacement(alpha: f64, beta: f64, n: usize, config: &PhysicsConfig) -> Result<Displacement> {
    config.validate()?;
    if n < 2 || !alpha.is_finite() || !beta.is_finite() {
        return Err(invalid("displacement", "need N ≥ 2 and finite (α, β)"));
    }
    let warning = (!in_faithful_range(alpha, beta, n, config.hbar)).then_some(RangeWarning {
        alpha,
        beta,
        limit: faithful_radius_sqr(n, config.hbar),
    });
    let m = if alpha == 0.0 && beta == 0.0 {
        DMatrix::identity(n, n)
    } else {
        displacement_matrix(displacement_z(alpha, beta, config.hbar), n)
    };
    Ok(Displacement {
        operator: Operator::wrap(m, *config),
        warning,
    })
}

/// Weyl-ordered operator of a polynomial symbol of degree ≤ 4, using
/// `x^m p^n ↦ 2^{−m} Σₖ C(m,k) X̂ᵏ P̂ⁿ X̂^{m−k}` built on enough extra levels
/// that the leading `N × N` block is exact.
pub fn weyl_quantize_poly(symbol: &PolySymbol, n: usize, config: &PhysicsConfig) -> Result<Operator> {
    config.validate()?;
    let hbar = to_f64(symbol.hbar());
    if (hbar - config.hbar).abs() > 1e-14 * hbar {
        return Err(invalid("hbar", "symbol and configuration carry different hbar"));
    }
    let degree = symbol.degree();
    if degree > MAX_DEGREE {
        return Err(Error::Degree { degree, max: MAX_DEGREE });
    }
    if n < 2 {
        return Err(invalid("N", "basis needs at least two levels"));
    }
    let big = n + degree as usize + 1;
    let (x, p) = pair_matrices(big, config.hbar);
    let pow = |m: &DMatrix<Complex64>, k: u32| (0..k).fold(DMatrix::identity(big, big), |acc, _| acc * m);
    let mut out = DMatrix::zeros(big, big);
    for ((mx, np), c) in symbol.terms() {
        let pn = pow(&p, *np);
        let mut term = DMatrix::zeros(big, big);
        let mut binom = 1.0;
        for k in 0..=*mx {
            term += (pow(&x, k) * &pn * pow(&x, mx - k)) * Complex64::new(binom, 0.0);
            binom = binom * (mx - k) as f64 / (k + 1) as f64;
        }
        out += term * (c.to_c64() / 2f64.powi(*mx as i32));
    }
    Ok(Operator::wrap(out.view((0, 0), (n, n)).into_owned(), *config))
}

/// Weyl quantization of a sampled symbol: `Â = Σ ã(α,β) Ŝ(α,β)` over the
/// plane-wave coefficients of the grid function.
pub fn weyl_quantize_grid(symbol: &ComplexPhaseSpaceFunction, n: usize) -> Result<Operator> {
    let config = *symbol.config();
    let g = *symbol.grid();
    let size = g.n();
    let coeffs = coefficients(symbol);
    let tail = tail_of(&coeffs, size);
    if tail > BAND_LIMIT {
        return Err(Error::BandLimit { tail, limit: BAND_LIMIT });
    }
    let peak = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let h = size as i64 / 2;
    let total = (0..size)
        .into_par_iter()
        .map(|tc| {
            let t = tc as i64 - h;
            let beta = t as f64 * g.dp();
            let shift = Complex64::from_polar(1.0, -beta * g.x_min() / g.hbar());
            let mut acc = DMatrix::zeros(n, n);
            for sc in 0..size {
                let c = coeffs[tc * size + sc];
                if c.norm() <= 1e-15 * peak {
                    continue;
                }
                let s = sc as i64 - h;
                let sign = if s.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                let alpha = s as f64 * g.dx();
                let z = displacement_z(alpha, beta, g.hbar());
                acc += displacement_matrix(z, n) * (c * shift * sign);
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        // summed in a fixed order so repeated runs agree bit for bit
        .fold(DMatrix::zeros(n, n), |a, b| a + b);
    Ok(Operator::wrap(total, config))
}

pub fn weyl_quantize_real(symbol: &PhaseSpaceFunction, n: usize) -> Result<Operator> {
    weyl_quantize_grid(&symbol.to_complex(), n)
}

/// Oscillator eigenfunctions `h_0 … h_{N−1}` at `y`.
fn hermite_functions(y: f64, n: usize, hbar: f64) -> Vec<f64> {
    let xi = y / hbar.sqrt();
    let mut h = vec![0.0; n];
    h[0] = (PI * hbar).powf(-0.25) * (-xi * xi / 2.0).exp();
    if n > 1 {
        h[1] = 2f64.sqrt() * xi * h[0];
    }
    for k in 1..n.saturating_sub(1) {
        h[k + 1] = (2.0 / (k + 1) as f64).sqrt() * xi * h[k] - (k as f64 / (k + 1) as f64).sqrt() * h[k - 1];
    }
    h
}

/// Position-space samples of `Σ cₙ|n⟩`.
pub fn fock_to_wavefunction(c: &[Complex64], grid: &Grid, config: &PhysicsConfig) -> Result<Wavefunction> {
    Wavefunction::from_fn(*grid, *config, |x| {
        hermite_functions(x, c.len(), config.hbar).iter().zip(c).map(|(h, c)| c * h).sum()
    })
}

/// First `N` oscillator coefficients `⟨n|ψ⟩` by quadrature.
pub fn wavefunction_to_fock(wf: &Wavefunction, n: usize) -> Vec<Complex64> {
    let hbar = wf.config().hbar;
    let dx = wf.grid().dx();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (x, psi) in wf.grid().positions().iter().zip(wf.amplitudes()) {
        for (o, h) in out.iter_mut().zip(hermite_functions(*x, n, hbar)) {
            *o += psi * h * dx;
        }
    }
    out
}

/// Weyl symbol `a(x,p) = ∫⟨x+τ/2|Â|x−τ/2⟩ e^{−ipτ/ħ} dτ` without the
/// support check.
fn symbol_of(op: &Operator, grid: &Grid) -> Result<ComplexPhaseSpaceFunction> {
    let hbar = op.config().hbar;
    if (grid.hbar() - hbar).abs() > 1e-14 * hbar {
        return Err(Error::GridMismatch);
    }
    let n = grid.n();
    let dim = op.dim();
    let half = n as i64 / 2;
    // half-grid points y_i = x_min + (i − n/2)·dx/2 for i in 0..3n
    let offset = half;
    let npts = 3 * n;
    let herm: Vec<Vec<f64>> = (0..npts)
        .map(|i| hermite_functions(grid.x_min() + (i as i64 - offset) as f64 * grid.dx() / 2.0, dim, hbar))
        .collect();
    // b[i][m] = Σₖ A[m][k] h_k(y_i)
    let a = op.matrix();
    let b: Vec<Vec<Complex64>> = herm
        .par_iter()
        .map(|h| (0..dim).map(|m| (0..dim).map(|k| a[(m, k)] * h[k]).sum()).collect())
        .collect();
    let kernel = |i: i64, ip: i64| -> Complex64 {
        let (i, ip) = ((i + offset) as usize, (ip + offset) as usize);
        herm[i].iter().zip(&b[ip]).map(|(h, v)| v * *h).sum()
    };
    let dx = grid.dx();
    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let c = 2 * j as i64;
            let mut buf = vec![Complex64::new(0.0, 0.0); n];
            for k in -half..half {
                let g = if k == -half {
                    (kernel(c + k, c - k) + kernel(c - k, c + k)) * 0.5
                } else {
                    kernel(c + k, c - k)
                };
                let sign = if k.rem_euclid(2) == 0 { dx } else { -dx };
                buf[k.rem_euclid(n as i64) as usize] = g * sign;
            }
            fourier::forward(&mut buf);
            buf
        })
        .collect();
    let config = PhysicsConfig::new(hbar, op.config().mass)?;
    ComplexPhaseSpaceFunction::new(*grid, rows.into_iter().flatten().collect(), config)
}

/// Weyl symbol of an operator supported on its leading half-block.
pub fn weyl_symbol(op: &Operator, grid: &Grid) -> Result<ComplexPhaseSpaceFunction> {
    let weight = op.outside_half_block();
    if weight > SUPPORT_TOLERANCE {
        return Err(Error::Support { weight });
    }
    symbol_of(op, grid)
}

/// Wigner function `symbol(ρ)/(2πħ)` of a density operator.
pub fn wigner_of(rho: &DensityOperator, grid: &Grid) -> Result<PhaseSpaceFunction> {
    let s = symbol_of(rho.operator(), grid)?;
    let scale = 1.0 / (2.0 * PI * grid.hbar());
    Ok(s.real_part().map(|v| v * scale))
}

/// `f_ρ(α,β) = Tr[ρ Ŝ(α,β)]` on the given axes.
pub fn char_via_trace(rho: &DensityOperator, alpha: &[f64], beta: &[f64]) -> CharacteristicFunction {
    let r = rho.operator().matrix();
    let n = r.nrows();
    let hbar = rho.operator().config().hbar;
    let values = alpha
        .par_iter()
        .flat_map_iter(|&a| {
            beta.iter().map(move |&b| {
                let d = displacement_matrix(displacement_z(a, b, hbar), n);
                r.transpose().component_mul(&d).sum()
            })
        })
        .collect();
    CharacteristicFunction {
        alpha: alpha.to_vec(),
        beta: beta.to_vec(),
        values,
    }
}

/// A symbol that can be quantized and sampled.
pub trait Quantizable {
    fn quantize(&self, n: usize, config: &PhysicsConfig) -> Result<Operator>;
    fn sample(&self, grid: &Grid) -> Result<ComplexPhaseSpaceFunction>;
}

impl Quantizable for PolySymbol {
    fn quantize(&self, n: usize, config: &PhysicsConfig) -> Result<Operator> {
        weyl_quantize_poly(self, n, config)
    }
    fn sample(&self, grid: &Grid) -> Result<ComplexPhaseSpaceFunction> {
        let config = PhysicsConfig::with_hbar(grid.hbar())?;
        if (to_f64(self.hbar()) - grid.hbar()).abs() > 1e-14 * grid.hbar() {
            return Err(Error::GridMismatch);
        }
        Ok(ComplexPhaseSpaceFunction::from_fn(*grid, config, |x, p| self.eval(x, p)))
    }
}

impl Quantizable for PhaseSpaceFunction {
    fn quantize(&self, n: usize, _config: &PhysicsConfig) -> Result<Operator> {
        weyl_quantize_real(self, n)
    }
    fn sample(&self, grid: &Grid) -> Result<ComplexPhaseSpaceFunction> {
        self.grid().check_same(grid)?;
        Ok(self.to_complex())
    }
}

/// `(∬ a·f_ρ dx dp, Tr[ρÂ])`: the phase-space and operator routes to `⟨Â⟩`.
pub fn expectation_cross_check<S: Quantizable + ?Sized>(
    symbol: &S,
    rho: &DensityOperator,
    grid: &Grid,
) -> Result<(f64, f64)> {
    let w = wigner_of(rho, grid)?;
    let a = symbol.sample(grid)?;
    let lhs: Complex64 = a.values().iter().zip(w.values()).map(|(a, w)| a * w).sum::<Complex64>() * grid.dx() * grid.dp();
    let op = symbol.quantize(rho.operator().dim(), rho.operator().config())?;
    let rhs = (rho.operator().matrix() * op.matrix()).trace();
    Ok((lhs.re, rhs.re))
}

/// Fock coefficients of the coherent state centred at `(x0, p0)`.
pub fn coherent_fock(x0: f64, p0: f64, n: usize, hbar: f64) -> Vec<Complex64> {
    displacement_matrix(displacement_z(-x0, p0, hbar), n).column(0).iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, rat};
    use crate::phase_space::Region;
    use crate::wigner::{characteristic_function, wigner_transform};

    fn cfg(hbar: f64) -> PhysicsConfig {
        PhysicsConfig::with_hbar(hbar).unwrap()
    }

    fn ih(hbar: f64) -> Complex64 {
        Complex64::new(0.0, hbar)
    }

    #[test]
    fn commutator_two_levels() {
        let (x, p) = canonical_pair(2, &cfg(0.5)).unwrap();
        let c = x.commutator(&p).unwrap();
        assert!((c.matrix()[(0, 0)] - ih(0.5)).norm() < 1e-15);
        assert!((c.matrix()[(1, 1)] + ih(0.5)).norm() < 1e-15);
        assert!(c.matrix()[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn commutator_on_leading_block() {
        let c = cfg(0.7);
        let (x, p) = canonical_pair(64, &c).unwrap();
        assert!(x.is_hermitian() && p.is_hermitian());
        assert!(x.hermitian_defect() < 1e-12 && p.hermitian_defect() < 1e-12);
        let comm = x.commutator(&p).unwrap();
        let want = Operator::identity(64, c).scale(ih(0.7));
        assert!(comm.block_distance(&want, 32).unwrap() < 1e-10);
        for k in 0..63 {
            assert!((comm.matrix()[(k, k)] - ih(0.7)).norm() < 1e-10);
        }
        assert!((comm.matrix()[(63, 63)] - ih(0.7)).norm() > 1.0);
    }

    #[test]
    fn displacement_basics() {
        let c = cfg(1.0);
        let n = 64;
        let id = displacement(0.0, 0.0, n, &c).unwrap();
        assert_eq!(id.operator, Operator::identity(n, c));
        assert!(id.warning.is_none());
        let (a, b) = (0.8, -0.6);
        let s = displacement(a, b, n, &c).unwrap().operator;
        let inv = displacement(-a, -b, n, &c).unwrap().operator;
        let prod = s.mul(&inv).unwrap();
        assert!(prod.block_distance(&Operator::identity(n, c), n / 2).unwrap() < 1e-8);
        let unit = s.adjoint().mul(&s).unwrap();
        assert!(unit.block_distance(&Operator::identity(n, c), n / 2).unwrap() < 1e-8);
        assert!(displacement(10.0, 0.0, n, &c).unwrap().warning.is_some());
    }

    #[test]
    fn displacement_translates_position() {
        let c = cfg(0.5);
        let n = 64;
        let (x, p) = canonical_pair(n, &c).unwrap();
        let (a, b) = (1.1, 0.4);
        let s = displacement(a, b, n, &c).unwrap().operator;
        let sinv = displacement(-a, -b, n, &c).unwrap().operator;
        let id = Operator::identity(n, c);
        let moved = s.mul(&x).unwrap().mul(&sinv).unwrap();
        let want = x.add(&id.scale(Complex64::new(a, 0.0))).unwrap();
        assert!(moved.block_distance(&want, n / 2).unwrap() < 1e-6);
        let moved_p = s.mul(&p).unwrap().mul(&sinv).unwrap();
        let want_p = p.sub(&id.scale(Complex64::new(b, 0.0))).unwrap();
        assert!(moved_p.block_distance(&want_p, n / 2).unwrap() < 1e-6);
    }

    #[test]
    fn polynomial_quantization() {
        let h = rat(1, 2);
        let c = cfg(0.5);
        let n = 32;
        let (x, p) = canonical_pair(n, &c).unwrap();
        let q = |s: &str| weyl_quantize_poly(&PolySymbol::parse(s, h.clone()).unwrap(), n, &c).unwrap();
        assert!(q("1").block_distance(&Operator::identity(n, c), n).unwrap() < 1e-14);
        assert!(q("x").block_distance(&x, n).unwrap() < 1e-12);
        assert!(q("p").block_distance(&p, n).unwrap() < 1e-12);
        let sym = x.mul(&p).unwrap().add(&p.mul(&x).unwrap()).unwrap().scale(Complex64::new(0.5, 0.0));
        assert!(q("x*p").block_distance(&sym, n / 2).unwrap() < 1e-12);
        let ho = q("x^2 + p^2");
        let ev = ho.compress(n / 2).hermitian_eigenvalues();
        // compressing adds n/2 zero eigenvalues below the spectrum
        for (k, e) in ev[n / 2..].iter().enumerate() {
            assert!((e - 0.5 * (2 * k + 1) as f64).abs() < 1e-10, "{k}: {e}");
        }
        let big = PolySymbol::parse("x^5", int(1)).unwrap();
        assert!(matches!(weyl_quantize_poly(&big, n, &cfg(1.0)), Err(Error::Degree { .. })));
    }

    #[test]
    fn ground_projector_symbol() {
        let c = cfg(1.0);
        let g = Grid::symmetric(128, &c).unwrap();
        let mut v = vec![Complex64::new(0.0, 0.0); 16];
        v[0] = Complex64::new(1.0, 0.0);
        let rho = DensityOperator::pure(&v, c).unwrap();
        let s = weyl_symbol(rho.operator(), &g).unwrap();
        let want = ComplexPhaseSpaceFunction::from_fn(g, c, |x, p| Complex64::new(2.0 * (-(x * x + p * p)).exp(), 0.0));
        let all = Region { half_x: f64::INFINITY, half_p: f64::INFINITY };
        assert!(s.max_abs_diff_on(&want, &all).unwrap() < 1e-12);
        // a sharp cut leaves Σ(−1)ᵏ at the origin
        let cut = weyl_symbol(&Operator::identity(16, c).compress(8), &g).unwrap();
        assert!(cut.at(64, 64).norm() < 1e-12);
        let (x, _) = canonical_pair(16, &c).unwrap();
        assert!(matches!(weyl_symbol(&x, &g), Err(Error::Support { .. })));
    }

    #[test]
    fn quantize_symbol_round_trip() {
        let c = cfg(1.0);
        let g = Grid::symmetric(128, &c).unwrap();
        let n = 128;
        let region = Region::central_quarter(&g);
        for text in ["1", "x*p", "x^2 + p^2"] {
            let sym = PolySymbol::parse(text, int(1)).unwrap();
            let op = weyl_quantize_poly(&sym, n, &c).unwrap().taper(40.0, 6.0);
            let back = weyl_symbol(&op, &g).unwrap();
            let want = sym.sample(&g).unwrap();
            let err = back.max_abs_diff_on(&want, &region).unwrap();
            assert!(err < 1e-5, "{text}: {err}");
        }
    }

    #[test]
    fn grid_quantization_matches_polynomial_route() {
        let c = cfg(1.0);
        let g = Grid::symmetric(128, &c).unwrap();
        let gauss = PhaseSpaceFunction::from_fn(g, c, |x, p| 2.0 * (-(x * x + p * p)).exp());
        let op = weyl_quantize_real(&gauss, 16).unwrap();
        let mut proj = DMatrix::zeros(16, 16);
        proj[(0, 0)] = Complex64::new(1.0, 0.0);
        let want = Operator::new(proj, c).unwrap();
        assert!(op.block_distance(&want, 16).unwrap() < 1e-10);
    }

    #[test]
    fn trace_route_characteristic_function() {
        let c = cfg(1.0);
        let g = Grid::symmetric(128, &c).unwrap();
        let n = 64;
        let a = coherent_fock(1.0, -0.5, n, 1.0);
        let b = coherent_fock(-1.0, 0.5, n, 1.0);
        let cat: Vec<Complex64> = a.iter().zip(&b).map(|(u, v)| u + v).collect();
        let rho = DensityOperator::pure(&cat, c).unwrap();
        let wf = fock_to_wavefunction(&cat, &g, &c).unwrap().normalized().unwrap();
        let fourier = characteristic_function(&wigner_transform(&wf).unwrap());
        let trace = char_via_trace(&rho, &fourier.alpha, &fourier.beta);
        let mut checked = 0;
        for ai in 0..fourier.alpha.len() {
            for bi in 0..fourier.beta.len() {
                if in_faithful_range(fourier.alpha[ai], fourier.beta[bi], n, 1.0) {
                    checked += 1;
                    assert!((fourier.at(ai, bi) - trace.at(ai, bi)).norm() < 1e-5);
                }
            }
        }
        assert!(checked > 100);
        let (o1, o2) = trace.origin();
        assert!((trace.at(o1, o2) - 1.0).norm() < 1e-12);
    }

    #[test]
    fn mixed_state_characteristic_function_decays_faster() {
        let c = cfg(1.0);
        let n = 16;
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        v[0] = Complex64::new(1.0, 0.0);
        let pure = DensityOperator::pure(&v, c).unwrap();
        let mixed = DensityOperator::new(Operator::identity(n, c).scale(Complex64::new(1.0 / n as f64, 0.0))).unwrap();
        let axis = [0.0, 1.0];
        let fp = char_via_trace(&pure, &axis, &[0.0]);
        let fm = char_via_trace(&mixed, &axis, &[0.0]);
        assert!((fm.at(0, 0) - 1.0).norm() < 1e-12);
        assert!(fm.at(1, 0).norm() < fp.at(1, 0).norm());
    }

    #[test]
    fn expectation_routes_agree() {
        let c = cfg(1.0);
        let g = Grid::symmetric(256, &c).unwrap();
        let n = 64;
        let rho = DensityOperator::pure(&coherent_fock(2.0, 5.0, n, 1.0), c).unwrap();
        let x = PolySymbol::x(int(1)).unwrap();
        let (l, r) = expectation_cross_check(&x, &rho, &g).unwrap();
        assert!((l - 2.0).abs() < 1e-5 && (r - 2.0).abs() < 1e-5, "{l} {r}");
        let one = PolySymbol::parse("1", int(1)).unwrap();
        let (l, r) = expectation_cross_check(&one, &rho, &g).unwrap();
        assert!((l - 1.0).abs() < 1e-8 && (r - 1.0).abs() < 1e-8);
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        v[0] = Complex64::new(1.0, 0.0);
        let ground = DensityOperator::pure(&v, c).unwrap();
        let ho = PolySymbol::parse("x^2 + p^2", int(1)).unwrap();
        let (l, r) = expectation_cross_check(&ho, &ground, &g).unwrap();
        assert!((l - 1.0).abs() < 1e-8 && (r - 1.0).abs() < 1e-10);
    }

    #[test]
    fn purity_and_noncommuting_states() {
        let c = cfg(1.0);
        let n = 32;
        let a = coherent_fock(0.5, 0.0, n, 1.0);
        let b = coherent_fock(0.0, 0.7, n, 1.0);
        let ra = DensityOperator::pure(&a, c).unwrap();
        let rb = DensityOperator::pure(&b, c).unwrap();
        assert!(ra.is_pure() && rb.is_pure());
        let comm = ra.operator().commutator(rb.operator()).unwrap();
        assert!(comm.matrix().norm() > 1e-3);
        assert_eq!(ra.operator().commutator(ra.operator()).unwrap().matrix().norm(), 0.0);
        let mix = DensityOperator::mixture(&[(0.5, &a), (0.5, &b)], c).unwrap();
        assert!(!mix.is_pure());
        assert!(mix.trace_one && mix.positive);
        let bad = Operator::identity(n, c);
        assert!(DensityOperator::new(bad).is_err());
    }
}
