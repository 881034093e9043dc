//! Time evolution with the coefficient tables.
//!
//! Spin-boson: the Bloch vector obeys `v̇ = ℬ(t) v + Σ(t)` with
//!
//! ```text
//!     ⎛ −4B^Re_zz   −ε         4B^Re_zx     ⎞        ⎛ −4B^Im_zy ⎞
//! ℬ = ⎜  ε         −4B^Re_zz   4B^Re_zy + Δ ⎟,  Σ = ⎜  4B^Im_zx ⎟
//!     ⎝  0         −Δ          0            ⎠        ⎝  0        ⎠
//! ```
//!
//! Jaynes-Cummings, with `P = B_xx`, `Q = B_xy` and basis `(|e⟩, |g⟩)`:
//!
//! ```text
//! ρ̇ = −i(ω₀ + 4Q^Re)[σ⁺σ⁻, ρ] + 4(P^Re − Q^Im) D[σ⁻]ρ + 4(P^Re + Q^Im) D[σ⁺]ρ
//! ```
//!
//! Both are integrated with fixed-step RK4 on the coefficient grid, with
//! coefficients interpolated linearly between nodes.

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bath::{correlation_lags, CorrelationKernel, KernelRank, SpectralModel};
use crate::error::{Error, Result};
use crate::grid::{cumulative_trapezoid, TimeGrid};
use crate::kernels::{CoefficientTable, SystemModel};
use crate::propagator::{sinc, TlsParams};

/// RK4 substeps per coefficient grid step.
pub const DEFAULT_SUBSTEPS: usize = 4;

/// Tolerance on `‖v‖ − 1` before a state is flagged as unphysical.
pub const POSITIVITY_SLACK: f64 = 1e-6;

const HERMITIAN_TOL: f64 = 1e-10;

type C = Complex64;

/// `(⟨σ^x⟩, ⟨σ^y⟩, ⟨σ^z⟩)` at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochState {
    pub t: f64,
    pub v: [f64; 3],
}

impl BlochState {
    pub fn norm(&self) -> f64 {
        self.v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Qubit density matrix; index 0 is the `σ^z = +1` state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Qubit2x2(Matrix2<C>);

impl Qubit2x2 {
    pub fn new(rho: Matrix2<C>) -> Result<Self> {
        let q = Qubit2x2(rho);
        if q.hermiticity_defect() > HERMITIAN_TOL || (q.trace() - 1.0).abs() > HERMITIAN_TOL {
            return Err(Error::domain(format!("not a unit-trace Hermitian matrix: {rho}")));
        }
        Ok(q)
    }

    pub fn excited() -> Self {
        Qubit2x2(Matrix2::new(C::new(1.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0)))
    }

    pub fn matrix(&self) -> &Matrix2<C> {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        (self.0[(0, 0)] + self.0[(1, 1)]).re
    }

    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.0)
    }

    /// Smaller eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        eigenvalues(&self.0).0
    }
}

fn hermiticity_defect(m: &Matrix2<C>) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn eigenvalues(m: &Matrix2<C>) -> (f64, f64) {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)].conj());
    let mean = 0.5 * (a + d);
    let r = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    (mean - r, mean + r)
}

/// `ρ = ½(I + v·σ)`.
pub fn rho_from_bloch(v: [f64; 3]) -> Qubit2x2 {
    Qubit2x2(Matrix2::new(
        C::new(0.5 * (1.0 + v[2]), 0.0),
        C::new(0.5 * v[0], -0.5 * v[1]),
        C::new(0.5 * v[0], 0.5 * v[1]),
        C::new(0.5 * (1.0 - v[2]), 0.0),
    ))
}

/// `v_i = Tr(ρ σ^i)`.
pub fn bloch_from_rho(rho: &Matrix2<C>) -> Result<[f64; 3]> {
    if hermiticity_defect(rho) > HERMITIAN_TOL {
        return Err(Error::domain(format!("density matrix is not Hermitian: {rho}")));
    }
    Ok([
        2.0 * rho[(1, 0)].re,
        2.0 * rho[(1, 0)].im,
        (rho[(0, 0)] - rho[(1, 1)]).re,
    ])
}

/// Worst-case diagnostics over a trajectory. Reported, never enforced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Monitors {
    pub max_bloch_norm: f64,
    pub max_trace_defect: f64,
    pub max_hermiticity_defect: f64,
    pub min_eigenvalue: f64,
    /// Some state left the Bloch ball by more than [`POSITIVITY_SLACK`].
    pub positivity_violated: bool,
    /// A rate entering the generator went negative somewhere.
    pub negative_rate: bool,
}

impl Monitors {
    fn from_matrices<'a>(states: impl Iterator<Item = &'a Matrix2<C>>) -> Self {
        let mut m = Monitors {
            max_bloch_norm: 0.0,
            max_trace_defect: 0.0,
            max_hermiticity_defect: 0.0,
            min_eigenvalue: f64::INFINITY,
            positivity_violated: false,
            negative_rate: false,
        };
        for rho in states {
            let (lo, _) = eigenvalues(rho);
            let v = [2.0 * rho[(1, 0)].re, 2.0 * rho[(1, 0)].im, (rho[(0, 0)] - rho[(1, 1)]).re];
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            m.max_bloch_norm = m.max_bloch_norm.max(norm);
            m.max_trace_defect = m.max_trace_defect.max(((rho[(0, 0)] + rho[(1, 1)]).re - 1.0).abs());
            m.max_hermiticity_defect = m.max_hermiticity_defect.max(hermiticity_defect(rho));
            m.min_eigenvalue = m.min_eigenvalue.min(lo);
        }
        m.positivity_violated = m.max_bloch_norm > 1.0 + POSITIVITY_SLACK;
        m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlochTrajectory {
    pub states: Vec<BlochState>,
    pub monitors: Monitors,
}

impl BlochTrajectory {
    fn new(times: &[f64], vs: Vec<[f64; 3]>) -> Self {
        let rhos: Vec<_> = vs.iter().map(|v| rho_from_bloch(*v).0).collect();
        let monitors = Monitors::from_matrices(rhos.iter());
        BlochTrajectory {
            states: times.iter().zip(vs).map(|(&t, v)| BlochState { t, v }).collect(),
            monitors,
        }
    }

    /// `v_− = v_x − i v_y` along the trajectory.
    pub fn coherence(&self) -> Vec<C> {
        self.states.iter().map(|s| C::new(s.v[0], -s.v[1])).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<Matrix2<C>>,
    pub monitors: Monitors,
}

impl DensityTrajectory {
    fn new(times: Vec<f64>, states: Vec<Matrix2<C>>) -> Self {
        let monitors = Monitors::from_matrices(states.iter());
        DensityTrajectory {
            times,
            states,
            monitors,
        }
    }
}

/// Fixed-step RK4 sampled at the grid nodes, `substeps` steps per interval.
fn rk4<const N: usize, F>(f: F, y0: [f64; N], grid: &TimeGrid, substeps: usize) -> Result<Vec<[f64; N]>>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
{
    if substeps == 0 {
        return Err(Error::domain("RK4 needs at least one substep"));
    }
    let axpy = |y: &[f64; N], a: f64, k: &[f64; N]| -> [f64; N] { std::array::from_fn(|i| y[i] + a * k[i]) };
    let mut out = Vec::with_capacity(grid.len());
    let mut y = y0;
    out.push(y);
    for k in 0..grid.len() - 1 {
        let (t0, t1) = (grid.node(k), grid.node(k + 1));
        let h = (t1 - t0) / substeps as f64;
        for j in 0..substeps {
            let t = t0 + j as f64 * h;
            let t_end = if j + 1 == substeps { t1 } else { t + h };
            let k1 = f(t, &y)?;
            let k2 = f(t + 0.5 * h, &axpy(&y, 0.5 * h, &k1))?;
            let k3 = f(t + 0.5 * h, &axpy(&y, 0.5 * h, &k2))?;
            let k4 = f(t_end, &axpy(&y, h, &k3))?;
            let next: [f64; N] = std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
            if next.iter().any(|x| !x.is_finite()) {
                return Err(Error::Integration {
                    time: t,
                    last_good: y.to_vec(),
                });
            }
            y = next;
        }
        out.push(y);
    }
    Ok(out)
}

fn tls_of(table: &CoefficientTable) -> Result<TlsParams> {
    match table.system() {
        SystemModel::SpinBoson { tls, .. } => Ok(*tls),
        other => Err(Error::domain(format!("Bloch equation needs spin-boson coefficients, got {other:?}"))),
    }
}

/// `(ℬ(t), Σ(t))` from the interpolated coefficients.
pub fn bloch_generator(table: &CoefficientTable, t: f64) -> Result<([[f64; 3]; 3], [f64; 3])> {
    let p = tls_of(table)?;
    let b = table.at(t)?;
    let (zx, zy, zz) = (b[0], b[1], b[2]);
    let (d, e) = (p.delta, p.epsilon);
    let gen = [
        [-4.0 * zz.re, -e, 4.0 * zx.re],
        [e, -4.0 * zz.re, 4.0 * zy.re + d],
        [0.0, -d, 0.0],
    ];
    Ok((gen, [-4.0 * zy.im, 4.0 * zx.im, 0.0]))
}

pub fn bloch_rhs(table: &CoefficientTable, v: &[f64; 3], t: f64) -> Result<[f64; 3]> {
    let (m, s) = bloch_generator(table, t)?;
    Ok(std::array::from_fn(|i| (0..3).map(|j| m[i][j] * v[j]).sum::<f64>() + s[i]))
}

pub fn evolve_bloch(table: &CoefficientTable, v0: [f64; 3]) -> Result<BlochTrajectory> {
    evolve_bloch_with(table, v0, DEFAULT_SUBSTEPS)
}

pub fn evolve_bloch_with(table: &CoefficientTable, v0: [f64; 3], substeps: usize) -> Result<BlochTrajectory> {
    tls_of(table)?;
    let norm = v0.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm <= 1.0 + 1e-12) {
        return Err(Error::domain(format!("initial Bloch vector has norm {norm} > 1")));
    }
    let grid = table.grid();
    let vs = rk4(|t, v| bloch_rhs(table, v, t), v0, grid, substeps)?;
    let mut traj = BlochTrajectory::new(&grid.nodes(), vs);
    traj.monitors.negative_rate = (0..grid.len()).any(|k| table.row(k)[2].re < 0.0);
    Ok(traj)
}

fn pack(m: &Matrix2<C>) -> [f64; 8] {
    [
        m[(0, 0)].re,
        m[(0, 0)].im,
        m[(0, 1)].re,
        m[(0, 1)].im,
        m[(1, 0)].re,
        m[(1, 0)].im,
        m[(1, 1)].re,
        m[(1, 1)].im,
    ]
}

fn unpack(y: &[f64; 8]) -> Matrix2<C> {
    Matrix2::new(C::new(y[0], y[1]), C::new(y[2], y[3]), C::new(y[4], y[5]), C::new(y[6], y[7]))
}

fn dissipator(l: &Matrix2<C>, rho: &Matrix2<C>) -> Matrix2<C> {
    let ld = l.adjoint();
    let ldl = ld * l;
    l * rho * ld - (ldl * rho + rho * ldl) * C::new(0.5, 0.0)
}

fn lowering() -> Matrix2<C> {
    Matrix2::new(C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(1.0, 0.0), C::new(0.0, 0.0))
}

/// Frequency shift and the `(σ⁻, σ⁺)` rates at time `t`.
pub fn jc_rates(table: &CoefficientTable, t: f64) -> Result<(f64, f64, f64)> {
    let omega0 = match table.system() {
        SystemModel::JaynesCummings { omega0, .. } => *omega0,
        other => return Err(Error::domain(format!("JC evolution needs JC coefficients, got {other:?}"))),
    };
    let b = table.at(t)?;
    let (p, q) = (b[0], b[1]);
    Ok((omega0 + 4.0 * q.re, 4.0 * (p.re - q.im), 4.0 * (p.re + q.im)))
}

pub fn jc_rhs(table: &CoefficientTable, rho: &Matrix2<C>, t: f64) -> Result<Matrix2<C>> {
    let (freq, down, up) = jc_rates(table, t)?;
    let sm = lowering();
    let sp = sm.adjoint();
    let n = sp * sm;
    let comm = (n * rho - rho * n) * C::new(0.0, -freq);
    Ok(comm + dissipator(&sm, rho) * C::new(down, 0.0) + dissipator(&sp, rho) * C::new(up, 0.0))
}

pub fn evolve_jc(table: &CoefficientTable, rho0: &Qubit2x2) -> Result<DensityTrajectory> {
    evolve_jc_with(table, rho0, DEFAULT_SUBSTEPS)
}

pub fn evolve_jc_with(table: &CoefficientTable, rho0: &Qubit2x2, substeps: usize) -> Result<DensityTrajectory> {
    jc_rates(table, 0.0)?;
    let grid = table.grid();
    let ys = rk4(|t, y| Ok(pack(&jc_rhs(table, &unpack(y), t)?)), pack(&rho0.0), grid, substeps)?;
    let mut traj = DensityTrajectory::new(grid.nodes(), ys.iter().map(unpack).collect());
    traj.monitors.negative_rate = grid.nodes().iter().any(|&t| {
        jc_rates(table, t)
            .map(|(_, down, up)| down < 0.0 || up < 0.0)
            .unwrap_or(false)
    });
    Ok(traj)
}

/// `Γ(t_k) = k₀² ∫₀^{t_k} dτ ∫₀^τ ds D^Re(τ − s)` with both integrals done by
/// the grid trapezoid rule, i.e. the same quadrature the coefficient tables use.
pub fn dephasing_exponent(bath: &SpectralModel, k0_sq: f64, grid: &TimeGrid) -> Result<Vec<f64>> {
    let lags = correlation_lags(bath, grid)?;
    let inner: Vec<f64> = (0..grid.len())
        .map(|k| {
            grid.trapezoid_weights(k)
                .iter()
                .enumerate()
                .map(|(s, w)| w * lags[k - s].re)
                .sum()
        })
        .collect();
    Ok(cumulative_trapezoid(&inner, grid.step()).into_iter().map(|g| k0_sq * g).collect())
}

/// Continuum `Γ(t) = k₀² ∫ dω J(ω) coth(ω/2T) (1 − cos ωt)/ω²`.
pub fn decoherence_exponent(bath: &SpectralModel, k0_sq: f64, t: f64) -> Result<f64> {
    bath.validate()?;
    let g = |w: f64| 0.5 * t * t * sinc(0.5 * w * t).powi(2);
    Ok(k0_sq * bath.thermal_integral(g, 1e-12)?)
}

/// Closed-form pure-dephasing trajectory: `v_z` fixed and
/// `v_−(t) = v_−(0) e^{−iεt} e^{−Γ(t)}`, with `Γ` from [`dephasing_exponent`].
pub fn pure_dephasing_exact(
    bath: &SpectralModel,
    k0_sq: f64,
    tls: &TlsParams,
    grid: &TimeGrid,
    v0: [f64; 3],
) -> Result<BlochTrajectory> {
    if tls.delta != 0.0 {
        return Err(Error::domain(format!("pure dephasing needs Δ = 0, got {}", tls.delta)));
    }
    let gamma = dephasing_exponent(bath, k0_sq, grid)?;
    let vm0 = C::new(v0[0], -v0[1]);
    let vs = grid
        .nodes()
        .iter()
        .zip(&gamma)
        .map(|(&t, g)| {
            let vm = vm0 * C::new(0.0, -tls.epsilon * t).exp() * (-g).exp();
            [vm.re, -vm.im, v0[2]]
        })
        .collect();
    Ok(BlochTrajectory::new(&grid.nodes(), vs))
}

/// Local dephasing: `ρ̇ = −i[H₀, ρ] + (k₀²/4) D(t) (σ^z ρ σ^z − ρ)`, where `D(t)`
/// is the weight of a correlation `D(t) δ(τ − s)`. A constant `D = γ` damps
/// coherences as `e^{−γ k₀² t / 2}`.
pub fn markov_evolve<F>(rate: F, k0_sq: f64, tls: &TlsParams, rho0: &Qubit2x2, grid: &TimeGrid) -> Result<DensityTrajectory>
where
    F: Fn(f64) -> f64,
{
    let sz = Matrix2::new(C::new(1.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(-1.0, 0.0));
    let sx = Matrix2::new(C::new(0.0, 0.0), C::new(1.0, 0.0), C::new(1.0, 0.0), C::new(0.0, 0.0));
    let h0 = sx * C::new(-0.5 * tls.delta, 0.0) + sz * C::new(0.5 * tls.epsilon, 0.0);
    let negative = std::cell::Cell::new(false);
    let rhs = |t: f64, y: &[f64; 8]| -> Result<[f64; 8]> {
        let rho = unpack(y);
        let d = rate(t);
        if !d.is_finite() {
            return Err(Error::domain(format!("non-finite Markov rate at t = {t}")));
        }
        if d < 0.0 {
            negative.set(true);
        }
        let comm = (h0 * rho - rho * h0) * C::new(0.0, -1.0);
        Ok(pack(&(comm + (sz * rho * sz - rho) * C::new(0.25 * k0_sq * d, 0.0))))
    };
    let ys = rk4(rhs, pack(&rho0.0), grid, DEFAULT_SUBSTEPS)?;
    let mut traj = DensityTrajectory::new(grid.nodes(), ys.iter().map(unpack).collect());
    traj.monitors.negative_rate = negative.get();
    Ok(traj)
}

/// Stationary real kernel `D(τ) = γ √(2/π)/σ · e^{−τ²/2σ²}`, normalized so that
/// `∫₀^∞ D = γ`. As `σ → 0` this is the local correlation of weight `2γ`.
pub fn peaked_kernel(gamma: f64, sigma: f64, grid: &TimeGrid) -> Result<CorrelationKernel> {
    if !(sigma > 0.0 && sigma.is_finite() && gamma.is_finite()) {
        return Err(Error::domain(format!("peaked kernel needs σ > 0 and finite γ, got σ={sigma}, γ={gamma}")));
    }
    let norm = gamma * (2.0 / std::f64::consts::PI).sqrt() / sigma;
    let lags: Vec<C> = grid
        .nodes()
        .iter()
        .map(|t| C::new(norm * (-0.5 * t * t / (sigma * sigma)).exp(), 0.0))
        .collect();
    CorrelationKernel::from_lags(*grid, KernelRank::Scalar, &lags)
}
