//! Spectral densities and thermal bath correlation functions.
//!
//! Units: `ħ = k_B = 1`. For a stationary Gaussian bath with spectral density
//! `J(ω)` at temperature `T` the two-point function is
//!
//! ```text
//! D(τ) = ∫₀^∞ dω J(ω) [coth(ω / 2T) cos ωτ − i sin ωτ]
//! ```
//!
//! so `Re D` is even in `τ` and `Im D` is odd. The Jaynes-Cummings quadratures
//! `φ_x = Σ (a + a†)` and `φ_y = i Σ (a − a†)` give the matrix-valued function
//!
//! ```text
//! D_xx = D_yy = ∫ J [coth cos ωτ − i sin ωτ]
//! D_xy = −D_yx = −∫ J [coth sin ωτ + i cos ωτ]
//! ```

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::quad;

/// Relative tolerance of the frequency quadrature.
pub const QUAD_REL_TOL: f64 = 1e-10;

/// Frequency integrals of Gaussian-cutoff densities stop at this multiple of the cutoff.
pub const CUTOFF_MULTIPLE: f64 = 8.0;

/// Below `SMALL_FREQUENCY * scale` the thermal factor uses its Laurent expansion.
pub const SMALL_FREQUENCY: f64 = 1e-6;

/// Relative width of the Gaussian line that represents a single mode in `J(ω)`.
pub const SINGLE_MODE_LINE_WIDTH: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SpectralFamily {
    /// `J(ω) = a ω exp(−ω²/Λ²)`.
    OhmicGaussian { prefactor: f64, cutoff: f64 },
    /// One oscillator of frequency `ω_c` with squared coupling `g²`.
    SingleMode { frequency: f64, weight: f64 },
    /// Piecewise-linear `J` through `(ω, J)` samples, zero outside their range.
    Tabulated { samples: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralModel {
    #[serde(flatten)]
    pub family: SpectralFamily,
    pub temperature: f64,
}

impl SpectralModel {
    pub fn new(family: SpectralFamily, temperature: f64) -> Result<Self> {
        let model = SpectralModel { family, temperature };
        model.validate()?;
        Ok(model)
    }

    pub fn ohmic_gaussian(prefactor: f64, cutoff: f64, temperature: f64) -> Result<Self> {
        Self::new(SpectralFamily::OhmicGaussian { prefactor, cutoff }, temperature)
    }

    pub fn single_mode(frequency: f64, weight: f64, temperature: f64) -> Result<Self> {
        Self::new(SpectralFamily::SingleMode { frequency, weight }, temperature)
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.temperature;
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::domain(format!("temperature must be finite and >= 0, got {t}")));
        }
        match &self.family {
            SpectralFamily::OhmicGaussian { prefactor, cutoff } => {
                if !(prefactor.is_finite() && *prefactor >= 0.0) {
                    return Err(Error::domain(format!("ohmic prefactor must be >= 0, got {prefactor}")));
                }
                if !(cutoff.is_finite() && *cutoff > 0.0) {
                    return Err(Error::domain(format!("cutoff must be > 0, got {cutoff}")));
                }
            }
            SpectralFamily::SingleMode { frequency, weight } => {
                if !(frequency.is_finite() && *frequency > 0.0) {
                    return Err(Error::domain(format!("mode frequency must be > 0, got {frequency}")));
                }
                if !(weight.is_finite() && *weight >= 0.0) {
                    return Err(Error::domain(format!("mode weight must be >= 0, got {weight}")));
                }
            }
            SpectralFamily::Tabulated { samples } => {
                if samples.is_empty() {
                    return Err(Error::domain("tabulated spectral density has no samples"));
                }
                for &(w, j) in samples {
                    if !(w.is_finite() && w >= 0.0 && j.is_finite() && j >= 0.0) {
                        return Err(Error::domain(format!("invalid spectral sample ({w}, {j})")));
                    }
                }
                if samples.windows(2).any(|p| p[1].0 <= p[0].0) {
                    return Err(Error::domain("tabulated frequencies must be strictly increasing"));
                }
                if t > 0.0 && samples[0].0 == 0.0 && samples[0].1 > 0.0 {
                    return Err(Error::domain(
                        "J(0) > 0 makes the finite-temperature correlation divergent",
                    ));
                }
            }
        }
        Ok(())
    }

    /// `J(ω)` for `ω >= 0`.
    pub fn spectral_density(&self, omega: f64) -> Result<f64> {
        if !(omega >= 0.0) {
            return Err(Error::domain(format!("spectral density needs ω >= 0, got {omega}")));
        }
        Ok(self.density(omega))
    }

    fn density(&self, w: f64) -> f64 {
        match &self.family {
            SpectralFamily::OhmicGaussian { prefactor, cutoff } => {
                prefactor * w * (-(w * w) / (cutoff * cutoff)).exp()
            }
            SpectralFamily::SingleMode { frequency, weight } => {
                let width = SINGLE_MODE_LINE_WIDTH * frequency;
                let x = (w - frequency) / width;
                weight * (-0.5 * x * x).exp() / (width * (2.0 * PI).sqrt())
            }
            SpectralFamily::Tabulated { samples } => interpolate(samples, w),
        }
    }

    /// `lim_{ω→0} J(ω)/ω`.
    fn low_frequency_slope(&self) -> f64 {
        match &self.family {
            SpectralFamily::OhmicGaussian { prefactor, .. } => *prefactor,
            SpectralFamily::SingleMode { .. } => 0.0,
            SpectralFamily::Tabulated { samples } => match samples.as_slice() {
                [(w0, j0), (w1, j1), ..] if *w0 == 0.0 => (j1 - j0) / (w1 - w0),
                _ => 0.0,
            },
        }
    }

    fn frequency_scale(&self) -> f64 {
        match &self.family {
            SpectralFamily::OhmicGaussian { cutoff, .. } => *cutoff,
            SpectralFamily::SingleMode { frequency, .. } => *frequency,
            SpectralFamily::Tabulated { samples } => samples.last().map_or(1.0, |s| s.0.max(1e-300)),
        }
    }

    /// `J(ω) coth(ω / 2T)`, with `coth → 1` at `T = 0` and the removable
    /// `ω → 0` limit `2T lim J(ω)/ω`.
    pub fn thermal_density(&self, w: f64) -> f64 {
        let t = self.temperature;
        if t == 0.0 {
            return self.density(w);
        }
        if w == 0.0 {
            return 2.0 * t * self.low_frequency_slope();
        }
        if w < SMALL_FREQUENCY * self.frequency_scale() {
            return self.density(w) * (2.0 * t / w + w / (6.0 * t));
        }
        self.density(w) / (w / (2.0 * t)).tanh()
    }

    fn thermal_factor(&self, w: f64) -> f64 {
        if self.temperature == 0.0 {
            1.0
        } else {
            1.0 / (w / (2.0 * self.temperature)).tanh()
        }
    }

    fn integration_range(&self) -> (f64, Vec<f64>) {
        match &self.family {
            SpectralFamily::OhmicGaussian { cutoff, .. } => {
                let upper = CUTOFF_MULTIPLE * cutoff;
                let cuts = (1..CUTOFF_MULTIPLE as usize).map(|k| k as f64 * cutoff).collect();
                (upper, cuts)
            }
            SpectralFamily::Tabulated { samples } => {
                (samples.last().map_or(0.0, |s| s.0), samples.iter().map(|s| s.0).collect())
            }
            SpectralFamily::SingleMode { .. } => unreachable!("single modes are evaluated analytically"),
        }
    }

    /// Scalar correlation `D(τ)` at the default quadrature tolerance.
    pub fn correlation(&self, tau: f64) -> Result<Complex64> {
        self.correlation_with_tol(tau, QUAD_REL_TOL)
    }

    pub fn correlation_with_tol(&self, tau: f64, rel_tol: f64) -> Result<Complex64> {
        if let SpectralFamily::SingleMode { frequency, weight } = self.family {
            let (s, c) = (frequency * tau).sin_cos();
            return Ok(Complex64::new(weight * self.thermal_factor(frequency) * c, -weight * s));
        }
        let (upper, cuts) = self.integration_range();
        let r = quad::integrate(
            |w: f64| {
                let (s, c) = (w * tau).sin_cos();
                Complex64::new(self.thermal_density(w) * c, -self.density(w) * s)
            },
            0.0,
            upper,
            &cuts,
            rel_tol,
        )?;
        Ok(r.value)
    }

    /// `∫ dω J(ω) coth(ω/2T) g(ω)` over the same frequency range as the
    /// correlation integrals.
    pub fn thermal_integral<G: Fn(f64) -> f64>(&self, g: G, rel_tol: f64) -> Result<f64> {
        if let SpectralFamily::SingleMode { frequency, weight } = self.family {
            return Ok(weight * self.thermal_factor(frequency) * g(frequency));
        }
        let (upper, cuts) = self.integration_range();
        Ok(quad::integrate(|w: f64| self.thermal_density(w) * g(w), 0.0, upper, &cuts, rel_tol)?.value)
    }

    /// Row-major `[D_xx, D_xy, D_yx, D_yy](τ)` for the Jaynes-Cummings quadratures.
    pub fn jc_correlation(&self, tau: f64) -> Result<[Complex64; 4]> {
        self.jc_correlation_with_tol(tau, QUAD_REL_TOL)
    }

    pub fn jc_correlation_with_tol(&self, tau: f64, rel_tol: f64) -> Result<[Complex64; 4]> {
        let (diag, cross) = if let SpectralFamily::SingleMode { frequency, weight } = self.family {
            let (s, c) = (frequency * tau).sin_cos();
            let n = self.thermal_factor(frequency);
            (
                Complex64::new(weight * n * c, -weight * s),
                Complex64::new(weight * n * s, weight * c),
            )
        } else {
            let diag = self.correlation_with_tol(tau, rel_tol)?;
            let (upper, cuts) = self.integration_range();
            let cross = quad::integrate(
                |w: f64| {
                    let (s, c) = (w * tau).sin_cos();
                    Complex64::new(self.thermal_density(w) * s, self.density(w) * c)
                },
                0.0,
                upper,
                &cuts,
                rel_tol,
            )?
            .value;
            (diag, cross)
        };
        Ok([diag, -cross, cross, diag])
    }
}

fn interpolate(samples: &[(f64, f64)], w: f64) -> f64 {
    let first = samples[0];
    let last = samples[samples.len() - 1];
    if w < first.0 || w > last.0 {
        return 0.0;
    }
    let idx = samples.partition_point(|s| s.0 <= w);
    if idx == 0 {
        return first.1;
    }
    let (w0, j0) = samples[idx - 1];
    if w == w0 || idx == samples.len() {
        return j0;
    }
    let (w1, j1) = samples[idx];
    j0 + (j1 - j0) * (w - w0) / (w1 - w0)
}

/// Scalar (spin-boson) or 2×2 (Jaynes-Cummings) kernel values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelRank {
    Scalar,
    Matrix2,
}

impl KernelRank {
    pub fn dim(self) -> usize {
        match self {
            KernelRank::Scalar => 1,
            KernelRank::Matrix2 => 2,
        }
    }

    pub fn block_len(self) -> usize {
        self.dim() * self.dim()
    }
}

/// Dense two-time kernel `D(t_k, t_l)` on a grid; blocks are row-major `r × r`.
#[derive(Debug, Clone)]
pub struct CorrelationKernel {
    grid: TimeGrid,
    rank: KernelRank,
    stationary: bool,
    hermitian: bool,
    values: Vec<Complex64>,
}

impl CorrelationKernel {
    /// Builds a stationary Hermitian kernel from lag blocks `L(t_k)`, `k = 0..n`,
    /// using `D(t_k, t_l) = L(t_k − t_l)` and `L(−τ) = L(τ)†`.
    pub fn from_lags(grid: TimeGrid, rank: KernelRank, lags: &[Complex64]) -> Result<Self> {
        let n = grid.len();
        let bl = rank.block_len();
        let r = rank.dim();
        if lags.len() != n * bl {
            return Err(Error::GridMismatch(format!(
                "expected {} lag values, got {}",
                n * bl,
                lags.len()
            )));
        }
        if lags.iter().any(|z| !z.is_finite()) {
            return Err(Error::domain("non-finite correlation value"));
        }
        let mut values = vec![Complex64::new(0.0, 0.0); n * n * bl];
        for k in 0..n {
            for l in 0..n {
                let dst = &mut values[(k * n + l) * bl..(k * n + l + 1) * bl];
                if k >= l {
                    dst.copy_from_slice(&lags[(k - l) * bl..(k - l + 1) * bl]);
                } else {
                    let src = &lags[(l - k) * bl..(l - k + 1) * bl];
                    for i in 0..r {
                        for j in 0..r {
                            dst[i * r + j] = src[j * r + i].conj();
                        }
                    }
                }
            }
        }
        // The zero lag must itself be Hermitian.
        for i in 0..n {
            let blk = &mut values[(i * n + i) * bl..(i * n + i + 1) * bl];
            for a in 0..r {
                for b in a..r {
                    let avg = 0.5 * (blk[a * r + b] + blk[b * r + a].conj());
                    blk[a * r + b] = avg;
                    blk[b * r + a] = avg.conj();
                }
            }
        }
        Ok(CorrelationKernel {
            grid,
            rank,
            stationary: true,
            hermitian: true,
            values,
        })
    }

    /// Wraps arbitrary dense values (used for derived kernels).
    pub fn from_dense(
        grid: TimeGrid,
        rank: KernelRank,
        values: Vec<Complex64>,
        stationary: bool,
        hermitian: bool,
    ) -> Result<Self> {
        let n = grid.len();
        if values.len() != n * n * rank.block_len() {
            return Err(Error::GridMismatch(format!(
                "expected {} kernel values, got {}",
                n * n * rank.block_len(),
                values.len()
            )));
        }
        Ok(CorrelationKernel {
            grid,
            rank,
            stationary,
            hermitian,
            values,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn rank(&self) -> KernelRank {
        self.rank
    }

    pub fn is_stationary(&self) -> bool {
        self.stationary
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Block `D(t_k, t_l)`.
    pub fn block(&self, k: usize, l: usize) -> &[Complex64] {
        let n = self.grid.len();
        let bl = self.rank.block_len();
        &self.values[(k * n + l) * bl..(k * n + l + 1) * bl]
    }

    /// Scalar entry `D_ij(t_k, t_l)`.
    pub fn entry(&self, k: usize, l: usize, i: usize, j: usize) -> Complex64 {
        self.block(k, l)[i * self.rank.dim() + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |D_ij(t,s) − D*_ji(s,t)|` over the grid.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.grid.len();
        let r = self.rank.dim();
        let mut worst: f64 = 0.0;
        for k in 0..n {
            for l in 0..n {
                for i in 0..r {
                    for j in 0..r {
                        let d = self.entry(k, l, i, j) - self.entry(l, k, j, i).conj();
                        worst = worst.max(d.norm());
                    }
                }
            }
        }
        worst
    }

    /// `max |D(t_k, t_l) − D(t_{k+1}, t_{l+1})|`.
    pub fn stationarity_defect(&self) -> f64 {
        let n = self.grid.len();
        let bl = self.rank.block_len();
        let mut worst: f64 = 0.0;
        for k in 0..n - 1 {
            for l in 0..n - 1 {
                let a = self.block(k, l);
                let b = self.block(k + 1, l + 1);
                for q in 0..bl {
                    worst = worst.max((a[q] - b[q]).norm());
                }
            }
        }
        worst
    }

    /// Entrywise sum of two kernels on the same grid (independent baths add).
    pub fn sum(&self, other: &CorrelationKernel) -> Result<CorrelationKernel> {
        if self.grid != other.grid || self.rank != other.rank {
            return Err(Error::GridMismatch("kernels differ in grid or rank".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(CorrelationKernel {
            grid: self.grid,
            rank: self.rank,
            stationary: self.stationary && other.stationary,
            hermitian: self.hermitian && other.hermitian,
            values,
        })
    }

    pub fn scaled(&self, factor: f64) -> CorrelationKernel {
        CorrelationKernel {
            values: self.values.iter().map(|z| z * factor).collect(),
            ..self.clone()
        }
    }
}

/// Scalar lags `D(t_k)`, `k = 0..n`, evaluated in parallel.
pub fn correlation_lags(model: &SpectralModel, grid: &TimeGrid) -> Result<Vec<Complex64>> {
    model.validate()?;
    (0..grid.len())
        .into_par_iter()
        .map(|k| model.correlation(grid.node(k)))
        .collect()
}

/// Stationary scalar kernel of the spin-boson coupling operator.
pub fn build_correlation(model: &SpectralModel, grid: &TimeGrid) -> Result<CorrelationKernel> {
    let lags = correlation_lags(model, grid)?;
    CorrelationKernel::from_lags(*grid, KernelRank::Scalar, &lags)
}

/// Stationary 2×2 kernel of the Jaynes-Cummings quadratures `(φ_x, φ_y)`.
pub fn build_jc_correlation_matrix(model: &SpectralModel, grid: &TimeGrid) -> Result<CorrelationKernel> {
    model.validate()?;
    let blocks: Vec<[Complex64; 4]> = (0..grid.len())
        .into_par_iter()
        .map(|k| model.jc_correlation(grid.node(k)))
        .collect::<Result<_>>()?;
    let lags: Vec<Complex64> = blocks.into_iter().flatten().collect();
    CorrelationKernel::from_lags(*grid, KernelRank::Matrix2, &lags)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1_model() -> SpectralModel {
        SpectralModel::ohmic_gaussian(2.0 * PI, 20.0, 1.0).unwrap()
    }

    #[test]
    fn ohmic_density_values() {
        let m = SpectralModel::ohmic_gaussian(2.0 * PI, 20.0, 0.0).unwrap();
        assert_eq!(m.spectral_density(0.0).unwrap(), 0.0);
        let j = m.spectral_density(20.0).unwrap();
        assert!((j - 2.0 * PI * 20.0 * (-1.0f64).exp()).abs() < 1e-12);
        assert!((j - 46.229).abs() < 1e-3);
        assert!(m.spectral_density(-1.0).is_err());
    }

    #[test]
    fn tabulated_node_lookup_and_validation() {
        let m = SpectralModel::new(SpectralFamily::Tabulated { samples: vec![(1.0, 3.0)] }, 0.0).unwrap();
        assert_eq!(m.spectral_density(1.0).unwrap(), 3.0);
        assert_eq!(m.spectral_density(2.0).unwrap(), 0.0);
        let m = SpectralModel::new(
            SpectralFamily::Tabulated { samples: vec![(0.0, 0.0), (1.0, 2.0), (3.0, 0.0)] },
            0.5,
        )
        .unwrap();
        assert!((m.spectral_density(2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(SpectralModel::new(
            SpectralFamily::Tabulated { samples: vec![(1.0, 1.0), (1.0, 2.0)] },
            0.0
        )
        .is_err());
        assert!(SpectralModel::new(SpectralFamily::Tabulated { samples: vec![(0.0, 1.0)] }, 1.0).is_err());
    }

    #[test]
    fn invalid_models_rejected() {
        assert!(SpectralModel::ohmic_gaussian(1.0, 0.0, 0.0).is_err());
        assert!(SpectralModel::ohmic_gaussian(1.0, 1.0, -1.0).is_err());
        assert!(SpectralModel::single_mode(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn zero_temperature_equal_time_moment() {
        let m = SpectralModel::ohmic_gaussian(2.0 * PI, 20.0, 0.0).unwrap();
        let d = m.correlation(0.0).unwrap();
        assert!((d.re - PI * 400.0).abs() < 1e-8 * PI * 400.0);
        assert_eq!(d.im, 0.0);
    }

    #[test]
    fn removable_low_frequency_limit_is_continuous() {
        let m = fig1_model();
        let at_zero = m.thermal_density(0.0);
        assert!((at_zero - 2.0 * 2.0 * PI).abs() < 1e-12);
        // branch switch sits at 2e-5; both sides must agree with the limit
        for w in [1e-9, 1e-7, 1.9e-5, 2.1e-5, 1e-3] {
            assert!((m.thermal_density(w) - at_zero).abs() < 1e-6 * at_zero);
        }
    }

    #[test]
    fn lag_symmetry() {
        let m = fig1_model();
        for tau in [0.013, 0.1, 0.77] {
            let a = m.correlation(tau).unwrap();
            let b = m.correlation(-tau).unwrap();
            assert!((a - b.conj()).norm() < 1e-12 * a.norm().max(1.0));
        }
    }

    #[test]
    fn single_mode_is_analytic() {
        let m = SpectralModel::single_mode(3.0, 0.5, 0.0).unwrap();
        let d = m.correlation(0.4).unwrap();
        let expect = Complex64::from_polar(0.5, -1.2);
        assert!((d - expect).norm() < 1e-15);
        let jc = m.jc_correlation(0.4).unwrap();
        assert!((jc[0] - expect).norm() < 1e-15);
        // at T = 0 the cross term is −i D_xx
        assert!((jc[1] + Complex64::i() * expect).norm() < 1e-15);
        assert!((jc[2] + jc[1]).norm() < 1e-15);
    }

    #[test]
    fn jc_equal_time_diagonal_is_real() {
        let m = SpectralModel::ohmic_gaussian(1.0, 5.0, 50.0).unwrap();
        let jc = m.jc_correlation(0.0).unwrap();
        assert_eq!(jc[0].im, 0.0);
        assert_eq!(jc[3].im, 0.0);
    }

    #[test]
    fn kernels_are_hermitian_and_stationary() {
        let grid = TimeGrid::new(0.2, 21).unwrap();
        let k = build_correlation(&fig1_model(), &grid).unwrap();
        let scale = k.max_abs();
        assert!(k.is_stationary());
        assert!(k.hermiticity_defect() <= 1e-10 * scale);
        assert!(k.stationarity_defect() <= 1e-10 * scale);

        let m = SpectralModel::ohmic_gaussian(2.0 * PI, 20.0, 3.0).unwrap();
        let jc = build_jc_correlation_matrix(&m, &grid).unwrap();
        assert!(jc.hermiticity_defect() <= 1e-10 * jc.max_abs());
        assert!(jc.stationarity_defect() <= 1e-10 * jc.max_abs());
    }

    #[test]
    fn kernel_sum_requires_matching_grids() {
        let g1 = TimeGrid::new(1.0, 5).unwrap();
        let g2 = TimeGrid::new(1.0, 6).unwrap();
        let m = SpectralModel::single_mode(1.0, 1.0, 0.0).unwrap();
        let a = build_correlation(&m, &g1).unwrap();
        let b = build_correlation(&m, &g2).unwrap();
        assert!(a.sum(&b).is_err());
        let s = a.sum(&a).unwrap();
        assert!((s.entry(3, 1, 0, 0) - 2.0 * a.entry(3, 1, 0, 0)).norm() < 1e-15);
    }
}
