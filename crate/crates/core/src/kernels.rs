//! The iterated-contraction kernel series and the master-equation coefficients.
//!
//! Starting from the bath kernel `D_(1) = D`, each level is
//!
//! ```text
//! D_(n)(t, s1) = ∫₀ᵗ dt_n ∫₀ᵗ ds_n  D_(n−1)(t, s_n) C(s_n, t_n) D̄(t_n, s1)
//!                                + D*_(n−1)(t, s_n) C(s_n, t_n) D(t_n, s1)
//! ```
//!
//! with the contraction `C(s, t') = −κ {σ(s), σ(t')} θ(t' − s)` (coupling `κ`
//! folded in) and `D̄(t, s) = θ(t − s) D(t, s) − θ(s − t) D*(t, s)`. For the
//! 2×2 Jaynes-Cummings kernels the products are matrix products and `*` is the
//! entrywise conjugate. The resummed kernel is the alternating sum
//! `𝔻 = Σ (−1)^{n−1} D_(n)`, or equivalently `(1 + 𝔇)⁻¹ D` where `𝔇` is the
//! (real-linear) map taking one level to the next.
//!
//! Both time integrals use the trapezoid rule on the grid; `θ(0) = ½`. Each
//! level costs `O(k² r³)` at outer node `k`: the inner `s_n` sum is formed once
//! per `t_n` and reused for every `s1`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bath::{CorrelationKernel, KernelRank};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::propagator::{step, FreeEvolution, PropagatorTable, TlsParams};

/// Highest series order the builders accept.
pub const MAX_ORDER: usize = 8;

/// Above this condition number the resolvent solve is refused.
pub const MAX_CONDITION: f64 = 1e12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// System Hamiltonian plus coupling strength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum SystemModel {
    /// `H₀ = −½Δσ^x + ½εσ^z`, `H_I = ½k₀ σ^z φ`.
    SpinBoson { tls: TlsParams, k0_sq: f64 },
    /// `H₀ = ω₀σ⁺σ⁻`, `H_I = ½g (σ^x φ_x + σ^y φ_y)`.
    JaynesCummings { omega0: f64, g_sq: f64 },
}

impl SystemModel {
    pub fn evolution(&self) -> FreeEvolution {
        match *self {
            SystemModel::SpinBoson { tls, .. } => FreeEvolution::SpinBoson(tls),
            SystemModel::JaynesCummings { omega0, .. } => FreeEvolution::JaynesCummings { omega0 },
        }
    }

    /// Squared prefactor of the coupled operators: `k₀²/4` or `g²/4`.
    pub fn coupling(&self) -> f64 {
        match *self {
            SystemModel::SpinBoson { k0_sq, .. } => 0.25 * k0_sq,
            SystemModel::JaynesCummings { g_sq, .. } => 0.25 * g_sq,
        }
    }

    pub fn rank(&self) -> KernelRank {
        match self {
            SystemModel::SpinBoson { .. } => KernelRank::Scalar,
            SystemModel::JaynesCummings { .. } => KernelRank::Matrix2,
        }
    }

    pub fn component_names(&self) -> &'static [&'static str] {
        match self {
            SystemModel::SpinBoson { .. } => &["zx", "zy", "zz"],
            SystemModel::JaynesCummings { .. } => &["xx", "xy", "yx", "yy"],
        }
    }

    pub fn with_coupling_scaled(&self, factor: f64) -> SystemModel {
        match *self {
            SystemModel::SpinBoson { tls, k0_sq } => SystemModel::SpinBoson {
                tls,
                k0_sq: k0_sq * factor,
            },
            SystemModel::JaynesCummings { omega0, g_sq } => SystemModel::JaynesCummings {
                omega0,
                g_sq: g_sq * factor,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            SystemModel::SpinBoson { tls, k0_sq } => {
                tls.delta.is_finite() && tls.epsilon.is_finite() && k0_sq.is_finite() && k0_sq >= 0.0
            }
            SystemModel::JaynesCummings { omega0, g_sq } => {
                omega0.is_finite() && g_sq.is_finite() && g_sq >= 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!("invalid system parameters {self:?}")))
        }
    }
}

/// Contraction blocks `C(s_a, t_b)` on a grid, coupling included.
///
/// The anticommutator depends only on `s − t'`, so one block per lag is stored.
#[derive(Debug, Clone)]
pub struct ContractionTable {
    grid: TimeGrid,
    dim: usize,
    pre_theta: Vec<f64>,
}

impl ContractionTable {
    pub fn new(system: &SystemModel, grid: TimeGrid) -> Self {
        let evo = system.evolution();
        let kappa = system.coupling();
        let n = grid.len() as isize;
        let h = grid.step();
        let pre_theta = (-(n - 1)..n)
            .flat_map(|d| {
                evo.anticommutator_block(d as f64 * h, 0.0)
                    .into_iter()
                    .map(move |v| -kappa * v)
            })
            .collect();
        ContractionTable {
            grid,
            dim: evo.coupled_dim(),
            pre_theta,
        }
    }

    /// `C ≡ 0`, for which the series stops at its first term.
    pub fn zero(grid: TimeGrid, rank: KernelRank) -> Self {
        let n = grid.len();
        ContractionTable {
            grid,
            dim: rank.dim(),
            pre_theta: vec![0.0; (2 * n - 1) * rank.block_len()],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Block before the step function, at grid nodes `(s, t')`.
    pub fn pre_theta(&self, s: usize, t: usize) -> &[f64] {
        let bl = self.dim * self.dim;
        let idx = s + self.grid.len() - 1 - t;
        &self.pre_theta[idx * bl..(idx + 1) * bl]
    }

    /// `θ(t' − s)` on grid indices.
    pub fn gate(s: usize, t: usize) -> f64 {
        step(t as f64 - s as f64)
    }
}

/// Pointwise `D̄(t, s) = θ(t − s) D(t, s) − θ(s − t) D*(t, s)`; the diagonal is
/// `i Im D(t, t)`.
pub fn dbar(d: &CorrelationKernel) -> CorrelationKernel {
    let n = d.grid().len();
    let bl = d.rank().block_len();
    let mut values = Vec::with_capacity(d.values().len());
    for k in 0..n {
        for l in 0..n {
            let blk = d.block(k, l);
            values.extend(blk.iter().map(|z| {
                if k > l {
                    *z
                } else if k < l {
                    -z.conj()
                } else {
                    Complex64::new(0.0, z.im)
                }
            }));
        }
    }
    debug_assert_eq!(values.len(), n * n * bl);
    CorrelationKernel::from_dense(*d.grid(), d.rank(), values, false, false)
        .expect("dbar preserves the kernel shape")
}

/// Precomputed inputs of the recursion, shared across outer times.
#[derive(Debug, Clone)]
pub struct Recursion<'a> {
    base: &'a CorrelationKernel,
    dbar: CorrelationKernel,
    contraction: ContractionTable,
}

impl<'a> Recursion<'a> {
    pub fn new(base: &'a CorrelationKernel, contraction: ContractionTable) -> Result<Self> {
        if contraction.grid != *base.grid() || contraction.dim != base.rank().dim() {
            return Err(Error::GridMismatch(
                "contraction table does not match the kernel grid or rank".into(),
            ));
        }
        Ok(Recursion {
            base,
            dbar: dbar(base),
            contraction,
        })
    }

    pub fn for_system(system: &SystemModel, base: &'a CorrelationKernel) -> Result<Self> {
        system.validate()?;
        if system.rank() != base.rank() {
            return Err(Error::domain(format!(
                "{:?} kernel supplied for a {:?} system",
                base.rank(),
                system.rank()
            )));
        }
        Self::new(base, ContractionTable::new(system, *base.grid()))
    }

    pub fn base(&self) -> &CorrelationKernel {
        self.base
    }

    pub fn grid(&self) -> &TimeGrid {
        self.base.grid()
    }

    fn dim(&self) -> usize {
        self.base.rank().dim()
    }

    /// First level: the base kernel row `D(t_outer, s)`, `s = 0..=outer`.
    pub fn first_level(&self, outer: usize) -> Result<Vec<Complex64>> {
        self.check_outer(outer)?;
        Ok((0..=outer).flat_map(|s| self.base.block(outer, s).iter().copied()).collect())
    }

    fn check_outer(&self, outer: usize) -> Result<()> {
        if outer >= self.grid().len() {
            return Err(Error::domain(format!(
                "outer index {outer} outside a grid of {} nodes",
                self.grid().len()
            )));
        }
        Ok(())
    }

    /// `X(t) = Σ_s w_s P(s) C(s, t)` and the same with `P*`.
    fn contract(&self, prev: &[Complex64], outer: usize, w: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let r = self.dim();
        let bl = r * r;
        let mut x = vec![ZERO; (outer + 1) * bl];
        let mut y = vec![ZERO; (outer + 1) * bl];
        for t in 0..=outer {
            let (xt, yt) = (&mut x[t * bl..(t + 1) * bl], &mut y[t * bl..(t + 1) * bl]);
            for s in 0..=t {
                let weight = w[s] * ContractionTable::gate(s, t);
                if weight == 0.0 {
                    continue;
                }
                let c = self.contraction.pre_theta(s, t);
                let p = &prev[s * bl..(s + 1) * bl];
                for i in 0..r {
                    for l in 0..r {
                        let mut acc = ZERO;
                        let mut acc_conj = ZERO;
                        for k in 0..r {
                            acc += p[i * r + k] * c[k * r + l];
                            acc_conj += p[i * r + k].conj() * c[k * r + l];
                        }
                        xt[i * r + l] += acc * weight;
                        yt[i * r + l] += acc_conj * weight;
                    }
                }
            }
        }
        (x, y)
    }

    /// One application of the level map: `D_(n−1)(t_outer, ·) → D_(n)(t_outer, ·)`.
    pub fn next_level(&self, prev: &[Complex64], outer: usize) -> Result<Vec<Complex64>> {
        self.check_outer(outer)?;
        let r = self.dim();
        let bl = r * r;
        if prev.len() != (outer + 1) * bl {
            return Err(Error::GridMismatch(format!(
                "previous level has {} values, expected {}",
                prev.len(),
                (outer + 1) * bl
            )));
        }
        let w = self.grid().trapezoid_weights(outer);
        let (x, y) = self.contract(prev, outer, &w);
        let mut next = vec![ZERO; (outer + 1) * bl];
        for s1 in 0..=outer {
            let out = &mut next[s1 * bl..(s1 + 1) * bl];
            for t in 0..=outer {
                if w[t] == 0.0 {
                    continue;
                }
                let db = self.dbar.block(t, s1);
                let d = self.base.block(t, s1);
                let (xt, yt) = (&x[t * bl..(t + 1) * bl], &y[t * bl..(t + 1) * bl]);
                for i in 0..r {
                    for m in 0..r {
                        let mut acc = ZERO;
                        for l in 0..r {
                            acc += xt[i * r + l] * db[l * r + m] + yt[i * r + l] * d[l * r + m];
                        }
                        out[i * r + m] += acc * w[t];
                    }
                }
            }
        }
        if next.iter().any(|z| !z.is_finite()) {
            return Err(Error::domain(format!(
                "non-finite kernel level at outer time {}",
                self.grid().node(outer)
            )));
        }
        Ok(next)
    }
}

/// `D_(n)(t, ·)` for `n = 1..=depth` at one outer time.
#[derive(Debug, Clone)]
pub struct KernelStack {
    outer: usize,
    rank: KernelRank,
    levels: Vec<Vec<Complex64>>,
}

impl KernelStack {
    pub fn new(rec: &Recursion<'_>, outer: usize) -> Result<Self> {
        Ok(KernelStack {
            outer,
            rank: rec.base().rank(),
            levels: vec![rec.first_level(outer)?],
        })
    }

    pub fn build(rec: &Recursion<'_>, outer: usize, depth: usize) -> Result<Self> {
        let mut stack = Self::new(rec, outer)?;
        while stack.depth() < depth {
            stack.extend(rec)?;
        }
        Ok(stack)
    }

    pub fn extend(&mut self, rec: &Recursion<'_>) -> Result<()> {
        let next = next_kernel(self.levels.last().expect("stack has a first level"), rec, self.outer)?;
        self.levels.push(next);
        Ok(())
    }

    pub fn outer(&self) -> usize {
        self.outer
    }

    pub fn rank(&self) -> KernelRank {
        self.rank
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// Level `n` (1-based).
    pub fn level(&self, n: usize) -> &[Complex64] {
        &self.levels[n - 1]
    }
}

/// Next level of the series at outer node `outer`.
pub fn next_kernel(prev: &[Complex64], rec: &Recursion<'_>, outer: usize) -> Result<Vec<Complex64>> {
    rec.next_level(prev, outer)
}

/// Alternating partial sums `Σ_{n<=m} (−1)^{n−1} D_(n)` for `m = 1..=n_max`.
pub fn resum_truncated(stack: &KernelStack, n_max: usize) -> Result<Vec<Vec<Complex64>>> {
    if n_max == 0 || n_max > stack.depth() {
        return Err(Error::domain(format!(
            "truncation order {n_max} needs 1 <= n <= stack depth {}",
            stack.depth()
        )));
    }
    let mut sums: Vec<Vec<Complex64>> = Vec::with_capacity(n_max);
    sums.push(stack.level(1).to_vec());
    for n in 2..=n_max {
        let sign = if n % 2 == 0 { -1.0 } else { 1.0 };
        let prev = &sums[n - 2];
        let next = prev.iter().zip(stack.level(n)).map(|(a, b)| a + b * sign).collect();
        sums.push(next);
    }
    Ok(sums)
}

/// Resummed kernel row from a linear solve, with the 1-norm condition number
/// of the discretized `1 + 𝔇`.
#[derive(Debug, Clone)]
pub struct ResolventSlice {
    pub values: Vec<Complex64>,
    pub condition: f64,
}

/// Solves `(1 + 𝔇) 𝔻(t, ·) = D(t, ·)` at outer node `outer`.
///
/// `𝔇 f = A f + B f*` is only real-linear, so the system is assembled on
/// `(Re f, Im f)`.
pub fn resum_resolvent(rec: &Recursion<'_>, outer: usize) -> Result<ResolventSlice> {
    rec.check_outer(outer)?;
    let r = rec.dim();
    let m = (outer + 1) * r;
    let w = rec.grid().trapezoid_weights(outer);

    // Weighted contraction, rows (t, l), columns (s, k).
    let mut cw = DMatrix::<Complex64>::zeros(m, m);
    for t in 0..=outer {
        for s in 0..=t {
            let weight = w[t] * w[s] * ContractionTable::gate(s, t);
            if weight == 0.0 {
                continue;
            }
            let c = rec.contraction.pre_theta(s, t);
            for l in 0..r {
                for k in 0..r {
                    cw[(t * r + l, s * r + k)] = Complex64::new(c[k * r + l] * weight, 0.0);
                }
            }
        }
    }
    // Rows (s1, m), columns (t, l).
    let mut dbar_t = DMatrix::<Complex64>::zeros(m, m);
    let mut d_t = DMatrix::<Complex64>::zeros(m, m);
    for s1 in 0..=outer {
        for t in 0..=outer {
            let db = rec.dbar.block(t, s1);
            let d = rec.base.block(t, s1);
            for mm in 0..r {
                for l in 0..r {
                    dbar_t[(s1 * r + mm, t * r + l)] = db[l * r + mm];
                    d_t[(s1 * r + mm, t * r + l)] = d[l * r + mm];
                }
            }
        }
    }
    let a = &dbar_t * &cw;
    let b = &d_t * &cw;

    let mut sys = DMatrix::<f64>::identity(2 * m, 2 * m);
    for i in 0..m {
        for j in 0..m {
            let plus = a[(i, j)] + b[(i, j)];
            let minus = a[(i, j)] - b[(i, j)];
            sys[(i, j)] += plus.re;
            sys[(i, m + j)] -= minus.im;
            sys[(m + i, j)] += plus.im;
            sys[(m + i, m + j)] += minus.re;
        }
    }
    let norm1 = one_norm(&sys);
    let inverse = sys.clone().lu().try_inverse().ok_or(Error::SingularOperator {
        time: rec.grid().node(outer),
        condition: f64::INFINITY,
    })?;
    let condition = norm1 * one_norm(&inverse);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::SingularOperator {
            time: rec.grid().node(outer),
            condition,
        });
    }

    // Each row i of the matrix kernel is an independent right-hand side.
    let first = rec.first_level(outer)?;
    let mut values = vec![ZERO; m * r];
    let mut rhs = nalgebra::DVector::<f64>::zeros(2 * m);
    for i in 0..r {
        for s in 0..=outer {
            for k in 0..r {
                let z = first[s * r * r + i * r + k];
                rhs[s * r + k] = z.re;
                rhs[m + s * r + k] = z.im;
            }
        }
        let sol = &inverse * &rhs;
        for s in 0..=outer {
            for k in 0..r {
                values[s * r * r + i * r + k] = Complex64::new(sol[s * r + k], sol[m + s * r + k]);
            }
        }
    }
    Ok(ResolventSlice { values, condition })
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// How the kernel series was summed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesOrder {
    Truncated(usize),
    Resolvent,
}

impl SeriesOrder {
    /// Provenance label carried into output metadata.
    pub fn label(&self) -> &'static str {
        match self {
            SeriesOrder::Truncated(1) => "weak-coupling (TCL2-equivalent)",
            _ => "series approximation: higher orders systematically neglect operator-ordering \
                  terms and are not exact",
        }
    }
}

/// Coefficients `B(t_k)` on the grid, row-major by time.
///
/// Spin-boson columns are `B_zx, B_zy, B_zz`; Jaynes-Cummings columns are
/// `B_xx, B_xy, B_yx, B_yy`. The coupling prefactor is included.
#[derive(Debug, Clone)]
pub struct CoefficientTable {
    system: SystemModel,
    grid: TimeGrid,
    order: SeriesOrder,
    values: Vec<Complex64>,
}

impl CoefficientTable {
    pub fn from_values(system: SystemModel, grid: TimeGrid, order: SeriesOrder, values: Vec<Complex64>) -> Result<Self> {
        let width = system.component_names().len();
        if values.len() != grid.len() * width {
            return Err(Error::GridMismatch(format!(
                "expected {} coefficient values, got {}",
                grid.len() * width,
                values.len()
            )));
        }
        if values.iter().any(|z| !z.is_finite()) {
            return Err(Error::domain("non-finite coefficient"));
        }
        Ok(CoefficientTable {
            system,
            grid,
            order,
            values,
        })
    }

    /// Table of zeros, i.e. the uncoupled system.
    pub fn zeros(system: SystemModel, grid: TimeGrid) -> Self {
        let width = system.component_names().len();
        CoefficientTable {
            system,
            grid,
            order: SeriesOrder::Truncated(1),
            values: vec![ZERO; grid.len() * width],
        }
    }

    pub fn system(&self) -> &SystemModel {
        &self.system
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn order(&self) -> SeriesOrder {
        self.order
    }

    pub fn width(&self) -> usize {
        self.system.component_names().len()
    }

    pub fn row(&self, k: usize) -> &[Complex64] {
        let w = self.width();
        &self.values[k * w..(k + 1) * w]
    }

    /// Column `c` over the whole grid.
    pub fn column(&self, c: usize) -> Vec<Complex64> {
        (0..self.grid.len()).map(|k| self.row(k)[c]).collect()
    }

    pub fn column_by_name(&self, name: &str) -> Option<Vec<Complex64>> {
        let c = self.system.component_names().iter().position(|n| *n == name)?;
        Some(self.column(c))
    }

    /// Linear interpolation between grid nodes.
    pub fn at(&self, t: f64) -> Result<Vec<Complex64>> {
        let (k, f) = self.grid.locate(t)?;
        let (a, b) = (self.row(k), self.row(k + 1));
        Ok(a.iter().zip(b).map(|(x, y)| x * (1.0 - f) + y * f).collect())
    }
}

/// `B(t_k) = κ ∫₀^{t_k} ds 𝔻(t_k, s) b(s − t_k)` for one outer node.
pub fn coefficients_at(
    slice: &[Complex64],
    table: &PropagatorTable,
    coupling: f64,
    grid: &TimeGrid,
    outer: usize,
) -> Vec<Complex64> {
    let evo = table.evolution();
    let (r, q) = (evo.coupled_dim(), evo.target_dim());
    let w = grid.trapezoid_weights(outer);
    let mut out = vec![ZERO; r * q];
    for (s, ws) in w.iter().enumerate() {
        if *ws == 0.0 {
            continue;
        }
        let dd = &slice[s * r * r..(s + 1) * r * r];
        let b = table.rows_at_lag(outer - s);
        for i in 0..r {
            for j in 0..q {
                let mut acc = ZERO;
                for k in 0..r {
                    acc += dd[i * r + k] * b[k * q + j];
                }
                out[i * q + j] += acc * (ws * coupling);
            }
        }
    }
    out
}

/// Assembles coefficient tables from resummed rows, one row per outer node.
pub fn coefficients(
    system: &SystemModel,
    rows: &[Vec<Complex64>],
    grid: &TimeGrid,
    order: SeriesOrder,
) -> Result<CoefficientTable> {
    if rows.len() != grid.len() {
        return Err(Error::GridMismatch(format!(
            "{} resummed rows for a grid of {} nodes",
            rows.len(),
            grid.len()
        )));
    }
    let table = PropagatorTable::new(system.evolution(), *grid);
    let values = rows
        .iter()
        .enumerate()
        .flat_map(|(k, row)| coefficients_at(row, &table, system.coupling(), grid, k))
        .collect();
    CoefficientTable::from_values(*system, *grid, order, values)
}

/// Coefficient tables for every truncation order `1..=n_max`.
pub fn build_coefficient_series(
    system: &SystemModel,
    base: &CorrelationKernel,
    n_max: usize,
) -> Result<Vec<CoefficientTable>> {
    if n_max == 0 || n_max > MAX_ORDER {
        return Err(Error::domain(format!("series order must be in 1..={MAX_ORDER}, got {n_max}")));
    }
    let rec = Recursion::for_system(system, base)?;
    let grid = *base.grid();
    let table = PropagatorTable::new(system.evolution(), grid);
    let kappa = system.coupling();
    let per_node: Vec<Vec<Vec<Complex64>>> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let stack = KernelStack::build(&rec, k, n_max)?;
            let sums = resum_truncated(&stack, n_max)?;
            Ok(sums.iter().map(|s| coefficients_at(s, &table, kappa, &grid, k)).collect())
        })
        .collect::<Result<_>>()?;
    (0..n_max)
        .map(|n| {
            let values = per_node.iter().flat_map(|node| node[n].iter().copied()).collect();
            CoefficientTable::from_values(*system, grid, SeriesOrder::Truncated(n + 1), values)
        })
        .collect()
}

/// Coefficients at a single truncation order.
pub fn build_coefficients(system: &SystemModel, base: &CorrelationKernel, n_max: usize) -> Result<CoefficientTable> {
    Ok(build_coefficient_series(system, base, n_max)?.pop().expect("n_max >= 1"))
}

/// Coefficients from the resolvent solve plus the worst condition number seen.
pub fn build_resolvent_coefficients(
    system: &SystemModel,
    base: &CorrelationKernel,
) -> Result<(CoefficientTable, f64)> {
    let rec = Recursion::for_system(system, base)?;
    let grid = *base.grid();
    let table = PropagatorTable::new(system.evolution(), grid);
    let kappa = system.coupling();
    let per_node: Vec<(Vec<Complex64>, f64)> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let slice = resum_resolvent(&rec, k)?;
            Ok((coefficients_at(&slice.values, &table, kappa, &grid, k), slice.condition))
        })
        .collect::<Result<_>>()?;
    let worst = per_node.iter().map(|p| p.1).fold(1.0, f64::max);
    let values = per_node.into_iter().flat_map(|p| p.0).collect();
    Ok((
        CoefficientTable::from_values(*system, grid, SeriesOrder::Resolvent, values)?,
        worst,
    ))
}
