//! Exact reference dynamics: a qubit coupled to up to three truncated
//! bosonic modes, evolved by dense diagonalization.
//!
//! Conventions for the coupling operators, with `c_j` the mode couplings:
//!
//! * spin-boson: `H_I = ½k₀ σ^z Σ c_j q_j`, `q_j = (a_j + a_j†)/√(2ω_j)`, so the
//!   equivalent spectral weight of mode `j` is `c_j²/(2ω_j)`;
//! * Rabi: `H_I = g σ^z Σ c_j (a_j + a_j†)`, i.e. spin-boson with `k₀ = 2g` and
//!   weight `c_j²`;
//! * Jaynes-Cummings: `H_I = g Σ c_j (σ⁺a_j + σ⁻a_j†)`, weight `c_j²`.
//!
//! Qubit basis index 0 is the `σ^z = +1` (excited) state.

use nalgebra::{DMatrix, Matrix2, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bath::{build_correlation, build_jc_correlation_matrix, CorrelationKernel, SpectralModel};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::kernels::SystemModel;
use crate::propagator::TlsParams;

pub const MAX_MODES: usize = 3;
/// Largest number of Fock levels kept per mode.
pub const MAX_LEVELS: usize = 12;
pub const MAX_DIMENSION: usize = 4096;
/// Largest thermal weight allowed above the cutoff.
pub const TAIL_LIMIT: f64 = 1e-8;

type C = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub frequency: f64,
    pub coupling: f64,
}

/// Discrete modes with per-mode Fock cutoffs (number of levels kept).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteBathSpec {
    modes: Vec<Mode>,
    levels: Vec<usize>,
    temperature: f64,
}

/// `(populations, tail)` of a Gibbs state truncated to `levels` levels and
/// renormalized; `tail` is the weight the untruncated state puts above.
pub fn thermal_populations(frequency: f64, temperature: f64, levels: usize) -> (Vec<f64>, f64) {
    if temperature == 0.0 {
        let mut p = vec![0.0; levels];
        p[0] = 1.0;
        return (p, 0.0);
    }
    let x = (-frequency / temperature).exp();
    let raw: Vec<f64> = (0..levels).map(|n| x.powi(n as i32)).collect();
    let z: f64 = raw.iter().sum();
    (raw.iter().map(|p| p / z).collect(), x.powi(levels as i32))
}

impl DiscreteBathSpec {
    /// Validates the modes and raises cutoffs until the thermal tail is below
    /// [`TAIL_LIMIT`].
    pub fn new(modes: Vec<Mode>, levels: Vec<usize>, temperature: f64) -> Result<Self> {
        if modes.is_empty() || modes.len() > MAX_MODES {
            return Err(Error::domain(format!("need 1..={MAX_MODES} modes, got {}", modes.len())));
        }
        if levels.len() != modes.len() {
            return Err(Error::domain("one Fock cutoff per mode required"));
        }
        if !(temperature >= 0.0 && temperature.is_finite()) {
            return Err(Error::domain(format!("temperature must be finite and >= 0, got {temperature}")));
        }
        let mut raised = Vec::with_capacity(levels.len());
        for (j, (m, &l)) in modes.iter().zip(&levels).enumerate() {
            if !(m.frequency > 0.0 && m.frequency.is_finite() && m.coupling.is_finite()) {
                return Err(Error::domain(format!("mode {j} has invalid parameters {m:?}")));
            }
            if !(2..=MAX_LEVELS).contains(&l) {
                return Err(Error::domain(format!("mode {j}: Fock cutoff {l} outside 2..={MAX_LEVELS}")));
            }
            let mut l = l;
            while thermal_populations(m.frequency, temperature, l).1 >= TAIL_LIMIT && l < MAX_LEVELS {
                l += 1;
            }
            let tail = thermal_populations(m.frequency, temperature, l).1;
            if tail >= TAIL_LIMIT {
                return Err(Error::TailMass {
                    mode: j,
                    tail,
                    limit: TAIL_LIMIT,
                });
            }
            raised.push(l);
        }
        let dimension = 2 * raised.iter().product::<usize>();
        if dimension > MAX_DIMENSION {
            return Err(Error::DimensionOverflow {
                dimension,
                limit: MAX_DIMENSION,
            });
        }
        Ok(DiscreteBathSpec {
            modes,
            levels: raised,
            temperature,
        })
    }

    pub fn single(frequency: f64, coupling: f64, levels: usize, temperature: f64) -> Result<Self> {
        Self::new(vec![Mode { frequency, coupling }], vec![levels], temperature)
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    /// Fock levels per mode after any automatic raise.
    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn bath_dimension(&self) -> usize {
        self.levels.iter().product()
    }

    pub fn dimension(&self) -> usize {
        2 * self.bath_dimension()
    }

    /// Same modes with every cutoff raised by `extra` levels.
    pub fn with_extra_levels(&self, extra: usize) -> Result<Self> {
        Self::new(self.modes.clone(), self.levels.iter().map(|l| l + extra).collect(), self.temperature)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum OracleModel {
    SpinBoson { tls: TlsParams, k0: f64 },
    Rabi { tls: TlsParams, g: f64 },
    JaynesCummings { omega0: f64, g: f64 },
}

impl OracleModel {
    /// Master-equation system with the matching coupling.
    pub fn system(&self) -> SystemModel {
        match *self {
            OracleModel::SpinBoson { tls, k0 } => SystemModel::SpinBoson { tls, k0_sq: k0 * k0 },
            OracleModel::Rabi { tls, g } => SystemModel::SpinBoson {
                tls,
                k0_sq: 4.0 * g * g,
            },
            OracleModel::JaynesCummings { omega0, g } => SystemModel::JaynesCummings { omega0, g_sq: g * g },
        }
    }

    /// Spectral weight a mode contributes to the matching continuum bath.
    pub fn mode_weight(&self, mode: &Mode) -> f64 {
        match self {
            OracleModel::SpinBoson { .. } => mode.coupling * mode.coupling / (2.0 * mode.frequency),
            _ => mode.coupling * mode.coupling,
        }
    }

    /// Declared position-operator normalization, for output metadata.
    pub fn convention(&self) -> &'static str {
        match self {
            OracleModel::SpinBoson { .. } => "H_I = k0/2 sz sum c_j q_j, q_j = (a_j + a_j^dag)/sqrt(2 w_j)",
            OracleModel::Rabi { .. } => "H_I = g sz sum c_j (a_j + a_j^dag)",
            OracleModel::JaynesCummings { .. } => "H_I = g sum c_j (s+ a_j + s- a_j^dag)",
        }
    }
}

fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

fn annihilation(levels: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(levels, levels);
    for n in 1..levels {
        a[(n - 1, n)] = (n as f64).sqrt();
    }
    a
}

/// `a_j` embedded in the bath space.
fn bath_annihilation(spec: &DiscreteBathSpec, j: usize) -> DMatrix<f64> {
    spec.levels
        .iter()
        .enumerate()
        .map(|(m, &l)| if m == j { annihilation(l) } else { DMatrix::identity(l, l) })
        .reduce(|acc, op| kron(&acc, &op))
        .expect("at least one mode")
}

fn bath_hamiltonian(spec: &DiscreteBathSpec) -> DMatrix<f64> {
    let d = spec.bath_dimension();
    let mut h = DMatrix::zeros(d, d);
    for (j, m) in spec.modes.iter().enumerate() {
        let a = bath_annihilation(spec, j);
        h += (a.transpose() * &a) * m.frequency;
    }
    h
}

fn tls_hamiltonian(tls: &TlsParams) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.5 * tls.epsilon, -0.5 * tls.delta, -0.5 * tls.delta, -0.5 * tls.epsilon])
}

/// Full Hamiltonian on `qubit ⊗ modes` (qubit index most significant).
pub fn build_hamiltonian(spec: &DiscreteBathSpec, model: &OracleModel) -> Result<DMatrix<f64>> {
    let db = spec.bath_dimension();
    if spec.dimension() > MAX_DIMENSION {
        return Err(Error::DimensionOverflow {
            dimension: spec.dimension(),
            limit: MAX_DIMENSION,
        });
    }
    let i2 = DMatrix::<f64>::identity(2, 2);
    let ib = DMatrix::<f64>::identity(db, db);
    let sz = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let h0 = match model {
        OracleModel::SpinBoson { tls, .. } | OracleModel::Rabi { tls, .. } => tls_hamiltonian(tls),
        OracleModel::JaynesCummings { omega0, .. } => DMatrix::from_row_slice(2, 2, &[*omega0, 0.0, 0.0, 0.0]),
    };
    let mut h = kron(&h0, &ib) + kron(&i2, &bath_hamiltonian(spec));
    for (j, m) in spec.modes.iter().enumerate() {
        let a = bath_annihilation(spec, j);
        let x = &a + a.transpose();
        match *model {
            OracleModel::SpinBoson { k0, .. } => {
                h += kron(&sz, &x) * (0.5 * k0 * m.coupling / (2.0 * m.frequency).sqrt());
            }
            OracleModel::Rabi { g, .. } => h += kron(&sz, &x) * (g * m.coupling),
            OracleModel::JaynesCummings { g, .. } => {
                let sp = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
                let hop = kron(&sp, &a);
                h += (&hop + hop.transpose()) * (g * m.coupling);
            }
        }
    }
    Ok(h)
}

/// Diagonal of the truncated product Gibbs state of the modes.
pub fn thermal_state(spec: &DiscreteBathSpec) -> Vec<f64> {
    spec.modes
        .iter()
        .zip(&spec.levels)
        .map(|(m, &l)| thermal_populations(m.frequency, spec.temperature, l).0)
        .reduce(|acc, p| acc.iter().flat_map(|x| p.iter().map(move |y| x * y)).collect())
        .expect("at least one mode")
}

/// Reduced qubit states plus global conservation diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<Matrix2<C>>,
    /// `Tr ρ²` of the global state.
    pub purity: Vec<f64>,
    /// `⟨H⟩` of the global state.
    pub energy: Vec<f64>,
}

impl OracleTrajectory {
    /// Smallest eigenvalue of any reduced state.
    pub fn min_eigenvalue(&self) -> f64 {
        self.states
            .iter()
            .map(|r| {
                let (a, d, b) = (r[(0, 0)].re, r[(1, 1)].re, r[(0, 1)].norm());
                0.5 * (a + d) - (0.25 * (a - d) * (a - d) + b * b).sqrt()
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Evolves `ρ_qubit ⊗ ρ_bath` exactly with `e^{−iHt}` from a dense
/// eigendecomposition and traces out the modes at each time.
pub fn evolve_exact(
    h: &DMatrix<f64>,
    rho_qubit: &Matrix2<C>,
    bath: &[f64],
    times: &[f64],
) -> Result<OracleTrajectory> {
    let d = h.nrows();
    let db = bath.len();
    if d != 2 * db || h.ncols() != d {
        return Err(Error::domain(format!("Hamiltonian of size {d} does not match a bath of {db} states")));
    }
    if h.iter().any(|x| !x.is_finite()) {
        return Err(Error::Diagonalization("non-finite Hamiltonian entry".into()));
    }
    let eig = SymmetricEigen::try_new(h.clone(), 1e-14, 10_000)
        .ok_or_else(|| Error::Diagonalization(format!("no convergence for dimension {d}")))?;
    let v = eig.eigenvectors.map(|x| C::new(x, 0.0));
    let e = eig.eigenvalues;

    let mut rho0 = DMatrix::<C>::zeros(d, d);
    for a in 0..2 {
        for b in 0..2 {
            for k in 0..db {
                rho0[(a * db + k, b * db + k)] = rho_qubit[(a, b)] * bath[k];
            }
        }
    }
    let rho_e = v.adjoint() * &rho0 * &v;
    let hc = h.map(|x| C::new(x, 0.0));

    let mut out = OracleTrajectory {
        times: times.to_vec(),
        states: Vec::with_capacity(times.len()),
        purity: Vec::with_capacity(times.len()),
        energy: Vec::with_capacity(times.len()),
    };
    for &t in times {
        let phases: Vec<C> = e.iter().map(|&x| C::new(0.0, -x * t).exp()).collect();
        let rt = DMatrix::from_fn(d, d, |m, n| rho_e[(m, n)] * phases[m] * phases[n].conj());
        let rho = &v * rt * v.adjoint();
        let mut red = Matrix2::<C>::zeros();
        for a in 0..2 {
            for b in 0..2 {
                red[(a, b)] = (0..db).map(|k| rho[(a * db + k, b * db + k)]).sum();
            }
        }
        out.states.push(red);
        out.purity.push(rho.iter().map(|z| z.norm_sqr()).sum());
        out.energy.push((&hc * &rho).trace().re);
    }
    Ok(out)
}

/// Reference kernel of the discrete modes: the sum of single-mode analytic
/// correlations with weights [`OracleModel::mode_weight`].
pub fn discrete_correlation(spec: &DiscreteBathSpec, model: &OracleModel, grid: &TimeGrid) -> Result<CorrelationKernel> {
    let mut total: Option<CorrelationKernel> = None;
    for m in &spec.modes {
        let single = SpectralModel::single_mode(m.frequency, model.mode_weight(m), spec.temperature)?;
        let k = match model {
            OracleModel::JaynesCummings { .. } => build_jc_correlation_matrix(&single, grid)?,
            _ => build_correlation(&single, grid)?,
        };
        total = Some(match total {
            None => k,
            Some(acc) => acc.sum(&k)?,
        });
    }
    Ok(total.expect("at least one mode"))
}

/// Deviation between exact truncated-Fock correlations and the bath formulas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCertificate {
    pub taus: Vec<f64>,
    /// Worst absolute deviation over all lags and entries.
    pub max_deviation: f64,
    /// Largest entry magnitude, for scale.
    pub max_magnitude: f64,
    /// `|Im D_ii(0)|`, which must vanish.
    pub equal_time_imaginary: f64,
}

/// Exact `Tr[φ_i(τ) φ_j ρ_B]` for the coupling operators of `model`,
/// row-major over `i, j` (one entry for the σ^z couplings).
pub fn exact_correlation(spec: &DiscreteBathSpec, model: &OracleModel, tau: f64) -> Vec<C> {
    let db = spec.bath_dimension();
    let mut phi_x = DMatrix::<C>::zeros(db, db);
    let mut phi_y = DMatrix::<C>::zeros(db, db);
    for (j, m) in spec.modes.iter().enumerate() {
        let a = bath_annihilation(spec, j).map(|x| C::new(x, 0.0));
        let ad = a.transpose();
        let c = match model {
            OracleModel::SpinBoson { .. } => m.coupling / (2.0 * m.frequency).sqrt(),
            _ => m.coupling,
        };
        phi_x += (&a + &ad) * C::new(c, 0.0);
        phi_y += (&a - &ad) * C::new(0.0, c);
    }
    let energies: Vec<f64> = bath_hamiltonian(spec).diagonal().iter().copied().collect();
    let pops = thermal_state(spec);
    let evolve = |op: &DMatrix<C>| {
        DMatrix::from_fn(db, db, |m, n| op[(m, n)] * C::new(0.0, (energies[m] - energies[n]) * tau).exp())
    };
    let expect = |a: &DMatrix<C>, b: &DMatrix<C>| {
        let prod = evolve(a) * b;
        (0..db).map(|k| prod[(k, k)] * pops[k]).sum::<C>()
    };
    match model {
        OracleModel::JaynesCummings { .. } => vec![
            expect(&phi_x, &phi_x),
            expect(&phi_x, &phi_y),
            expect(&phi_y, &phi_x),
            expect(&phi_y, &phi_y),
        ],
        _ => vec![expect(&phi_x, &phi_x)],
    }
}

/// Compares [`exact_correlation`] with the analytic bath kernels at `taus`.
pub fn certify_correlation(spec: &DiscreteBathSpec, model: &OracleModel, taus: &[f64]) -> Result<CorrelationCertificate> {
    let mut max_deviation: f64 = 0.0;
    let mut max_magnitude: f64 = 0.0;
    for &tau in taus {
        let exact = exact_correlation(spec, model, tau);
        let mut formula = vec![C::new(0.0, 0.0); exact.len()];
        for m in &spec.modes {
            let single = SpectralModel::single_mode(m.frequency, model.mode_weight(m), spec.temperature)?;
            match model {
                OracleModel::JaynesCummings { .. } => {
                    for (f, v) in formula.iter_mut().zip(single.jc_correlation(tau)?) {
                        *f += v;
                    }
                }
                _ => formula[0] += single.correlation(tau)?,
            }
        }
        for (a, b) in exact.iter().zip(&formula) {
            max_deviation = max_deviation.max((a - b).norm());
            max_magnitude = max_magnitude.max(b.norm());
        }
    }
    let zero = exact_correlation(spec, model, 0.0);
    let equal_time_imaginary = match model {
        OracleModel::JaynesCummings { .. } => zero[0].im.abs().max(zero[3].im.abs()),
        _ => zero[0].im.abs(),
    };
    Ok(CorrelationCertificate {
        taus: taus.to_vec(),
        max_deviation,
        max_magnitude,
        equal_time_imaginary,
    })
}

/// `½‖a − b‖₁` for Hermitian 2×2 matrices.
pub fn trace_distance(a: &Matrix2<C>, b: &Matrix2<C>) -> f64 {
    let d = a - b;
    let (p, q) = (d[(0, 0)].re, d[(1, 1)].re);
    let off = 0.5 * (d[(0, 1)] + d[(1, 0)].conj());
    let mean = 0.5 * (p + q);
    let r = (0.25 * (p - q) * (p - q) + off.norm_sqr()).sqrt();
    0.5 * ((mean + r).abs() + (mean - r).abs())
}

/// Per-time trace distances between two trajectories on a common grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub times: Vec<f64>,
    pub distances: Vec<f64>,
    pub max_distance: f64,
    pub time_of_max: f64,
}

pub fn compare(times_a: &[f64], a: &[Matrix2<C>], times_b: &[f64], b: &[Matrix2<C>]) -> Result<ComparisonReport> {
    if times_a.len() != times_b.len() || a.len() != times_a.len() || b.len() != times_b.len() {
        return Err(Error::GridMismatch(format!(
            "trajectories have {} and {} samples",
            times_a.len(),
            times_b.len()
        )));
    }
    if let Some((x, y)) = times_a
        .iter()
        .zip(times_b)
        .find(|(x, y)| (*x - *y).abs() > 1e-12 * x.abs().max(1.0))
    {
        return Err(Error::GridMismatch(format!("sample times differ: {x} vs {y}")));
    }
    let distances: Vec<f64> = a.iter().zip(b).map(|(x, y)| trace_distance(x, y)).collect();
    let (imax, max_distance) = distances
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0), |best, (i, d)| if d > best.1 { (i, d) } else { best });
    Ok(ComparisonReport {
        times: times_a.to_vec(),
        distances,
        max_distance,
        time_of_max: times_a[imax],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jc(g: f64) -> OracleModel {
        OracleModel::JaynesCummings { omega0: 5.0, g }
    }

    #[test]
    fn spec_validation_and_auto_raise() {
        assert!(DiscreteBathSpec::single(1.0, 1.0, 13, 0.0).is_err());
        assert!(DiscreteBathSpec::single(-1.0, 1.0, 4, 0.0).is_err());
        let hot = DiscreteBathSpec::single(3.0, 1.0, 2, 1.0).unwrap();
        assert_eq!(hot.levels()[0], 7);
        assert!(thermal_populations(3.0, 1.0, 7).1 < TAIL_LIMIT);
        assert!(matches!(
            DiscreteBathSpec::single(1.0, 1.0, 4, 1.0),
            Err(Error::TailMass { .. })
        ));
        let modes = vec![Mode { frequency: 1.0, coupling: 0.1 }; 4];
        assert!(DiscreteBathSpec::new(modes, vec![2; 4], 0.0).is_err());
    }

    #[test]
    fn dimension_limit() {
        let modes = vec![Mode { frequency: 1.0, coupling: 0.1 }; 3];
        let spec = DiscreteBathSpec::new(modes, vec![12, 12, 12], 0.0).unwrap();
        assert_eq!(spec.dimension(), 3456);
        assert!(spec.with_extra_levels(1).is_err());
    }

    #[test]
    fn thermal_populations_geometric() {
        let (p, _) = thermal_populations(1.0, 1.0, 12);
        let mean: f64 = p.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
        assert!((mean - 1.0 / (1f64.exp() - 1.0)).abs() < 1e-4);
        assert!((p[3] / p[2] - (-1f64).exp()).abs() < 1e-14);
        let spec = DiscreteBathSpec::single(2.0, 1.0, 6, 0.0).unwrap();
        let vac = thermal_state(&spec);
        assert_eq!(vac[0], 1.0);
        assert!((vac.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn free_hamiltonian_spectrum() {
        let spec = DiscreteBathSpec::single(2.0, 0.0, 4, 0.0).unwrap();
        let h = build_hamiltonian(&spec, &jc(1.0)).unwrap();
        assert_eq!(&h, &h.transpose());
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let mut expect: Vec<f64> = (0..4).flat_map(|n| [2.0 * n as f64, 5.0 + 2.0 * n as f64]).collect();
        expect.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn vacuum_rabi_splitting() {
        let g = 0.3;
        let spec = DiscreteBathSpec::single(5.0, 1.0, 5, 0.0).unwrap();
        let h = build_hamiltonian(&spec, &jc(g)).unwrap();
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        // ground |g,0⟩ at 0, then the one-excitation doublet 5 ± g
        assert!(ev[0].abs() < 1e-12);
        assert!((ev[2] - ev[1] - 2.0 * g).abs() < 1e-12);
    }

    #[test]
    fn jc_vacuum_rabi_oscillation() {
        let g = 0.4;
        let spec = DiscreteBathSpec::single(5.0, 1.0, 4, 0.0).unwrap();
        let h = build_hamiltonian(&spec, &jc(g)).unwrap();
        let times: Vec<f64> = (0..30).map(|k| 0.25 * k as f64).collect();
        let excited = Matrix2::new(C::new(1.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0));
        let traj = evolve_exact(&h, &excited, &thermal_state(&spec), &times).unwrap();
        for (t, rho) in times.iter().zip(&traj.states) {
            assert!((rho[(0, 0)].re - (g * t).cos().powi(2)).abs() < 1e-10);
        }
        for p in &traj.purity {
            assert!((p - 1.0).abs() < 1e-10);
        }
        assert!(traj.min_eigenvalue() > -1e-9);
    }

    #[test]
    fn uncoupled_oracle_precesses_like_propagator() {
        let tls = TlsParams::new(3.0, 4.0).unwrap();
        let spec = DiscreteBathSpec::single(2.0, 0.0, 3, 0.5).unwrap();
        let model = OracleModel::SpinBoson { tls, k0: 1.0 };
        let h = build_hamiltonian(&spec, &model).unwrap();
        let v0 = [0.6, 0.0, 0.8];
        let rho0 = *crate::dynamics::rho_from_bloch(v0).matrix();
        let times = [0.0, 0.3, 1.1];
        let traj = evolve_exact(&h, &rho0, &thermal_state(&spec), &times).unwrap();
        for (t, rho) in times.iter().zip(&traj.states) {
            // ⟨σ^i(t)⟩ = b^i_j(t) ⟨σ^j(0)⟩
            let b = crate::propagator::tls_propagator(&tls, *t);
            let v = crate::dynamics::bloch_from_rho(rho).unwrap();
            for i in 0..3 {
                let expect: f64 = (0..3).map(|j| b[(i, j)] * v0[j]).sum();
                assert!((v[i] - expect).abs() < 1e-10, "t={t} i={i}");
            }
        }
    }

    #[test]
    fn energy_is_conserved() {
        let tls = TlsParams::new(1.0, 2.0).unwrap();
        let spec = DiscreteBathSpec::new(
            vec![Mode { frequency: 1.5, coupling: 0.7 }, Mode { frequency: 3.0, coupling: 0.4 }],
            vec![6, 4],
            0.3,
        )
        .unwrap();
        let h = build_hamiltonian(&spec, &OracleModel::Rabi { tls, g: 0.5 }).unwrap();
        let rho0 = *crate::dynamics::rho_from_bloch([0.0, 0.6, 0.0]).matrix();
        let traj = evolve_exact(&h, &rho0, &thermal_state(&spec), &[0.0, 1.0, 5.0]).unwrap();
        for e in &traj.energy {
            assert!((e - traj.energy[0]).abs() < 1e-10);
        }
    }

    #[test]
    fn single_mode_vacuum_correlation() {
        let spec = DiscreteBathSpec::single(2.0, 0.8, 4, 0.0).unwrap();
        let model = jc(1.0);
        let c = certify_correlation(&spec, &model, &[0.0, 0.4, 1.3, 2.9]).unwrap();
        assert!(c.max_deviation < 1e-8, "{c:?}");
        assert!(c.equal_time_imaginary < 1e-14);
        let d = exact_correlation(&spec, &model, 0.7);
        let expect = C::new(0.0, -2.0 * 0.7).exp() * 0.64;
        assert!((d[0] - expect).norm() < 1e-12);
    }

    #[test]
    fn two_mode_correlations_add() {
        let modes = vec![Mode { frequency: 2.0, coupling: 0.8 }, Mode { frequency: 3.5, coupling: 0.5 }];
        let spec = DiscreteBathSpec::new(modes.clone(), vec![4, 4], 0.0).unwrap();
        let one = DiscreteBathSpec::new(vec![modes[0]], vec![4], 0.0).unwrap();
        let two = DiscreteBathSpec::new(vec![modes[1]], vec![4], 0.0).unwrap();
        let model = OracleModel::SpinBoson {
            tls: TlsParams::new(1.0, 1.0).unwrap(),
            k0: 1.0,
        };
        for tau in [0.0, 0.6, 2.2] {
            let both = exact_correlation(&spec, &model, tau)[0];
            let sum = exact_correlation(&one, &model, tau)[0] + exact_correlation(&two, &model, tau)[0];
            assert!((both - sum).norm() < 1e-12);
        }
        let c = certify_correlation(&spec, &model, &[0.3, 1.7]).unwrap();
        assert!(c.max_deviation < 1e-8);
    }

    #[test]
    fn compare_identity_and_mismatch() {
        let rho = *crate::dynamics::rho_from_bloch([0.1, 0.2, 0.3]).matrix();
        let r = compare(&[0.0, 1.0], &[rho, rho], &[0.0, 1.0], &[rho, rho]).unwrap();
        assert_eq!(r.max_distance, 0.0);
        assert!(compare(&[0.0, 1.0], &[rho, rho], &[0.0, 1.5], &[rho, rho]).is_err());
        assert!(compare(&[0.0], &[rho], &[0.0, 1.0], &[rho, rho]).is_err());
        let up = *crate::dynamics::rho_from_bloch([0.0, 0.0, 1.0]).matrix();
        let down = *crate::dynamics::rho_from_bloch([0.0, 0.0, -1.0]).matrix();
        assert!((trace_distance(&up, &down) - 1.0).abs() < 1e-15);
    }
}
