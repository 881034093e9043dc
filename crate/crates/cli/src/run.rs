use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use spinbath::bath::{build_correlation, build_jc_correlation_matrix};
use spinbath::dynamics::{
    dephasing_exponent, evolve_bloch, evolve_jc, markov_evolve, peaked_kernel, pure_dephasing_exact, rho_from_bloch,
    Monitors, Qubit2x2,
};
use spinbath::kernels::{build_coefficient_series, build_resolvent_coefficients};
use spinbath::oracle::{
    build_hamiltonian, compare, discrete_correlation, evolve_exact, thermal_state, DiscreteBathSpec, OracleModel,
};
use spinbath::{CoefficientTable, CorrelationKernel, SeriesOrder, SpectralModel, SystemModel, TimeGrid};

use crate::config::{fig1_bath, fig1_system, RunConfig, RunMode};
use crate::output::{csv, float, Metadata, Table};
use crate::CliError;

/// A file produced by a run, not yet written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

fn num(module: &'static str) -> impl Fn(spinbath::Error) -> CliError {
    move |source| CliError::Numerical { module, source }
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    verbose: bool,
}

impl Ctx<'_> {
    fn log(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("[{}] {}", self.cfg.mode.name(), msg.as_ref());
        }
    }

    fn grid(&self) -> TimeGrid {
        self.cfg.grid.expect("validated")
    }

    fn system(&self) -> SystemModel {
        match self.cfg.mode {
            RunMode::Fig1 | RunMode::SuppFig2 => self.cfg.system.unwrap_or_else(fig1_system),
            _ => self.cfg.system.expect("validated"),
        }
    }

    fn bath(&self) -> SpectralModel {
        match self.cfg.mode {
            RunMode::Fig1 | RunMode::SuppFig2 => self.cfg.bath.clone().unwrap_or_else(fig1_bath),
            _ => self.cfg.bath.clone().expect("validated"),
        }
    }

    fn base_kernel(&self, system: &SystemModel) -> Result<CorrelationKernel, CliError> {
        let (bath, grid) = (self.bath(), self.grid());
        self.log(format!("correlation kernel on {} nodes", grid.len()));
        match system {
            SystemModel::SpinBoson { .. } => build_correlation(&bath, &grid),
            SystemModel::JaynesCummings { .. } => build_jc_correlation_matrix(&bath, &grid),
        }
        .map_err(num("bath"))
    }

    /// Partial sums `n = 1..=n_max`, or the resolvent sum alone.
    fn tables(&self, system: &SystemModel, meta: &mut Metadata) -> Result<Vec<CoefficientTable>, CliError> {
        let base = self.base_kernel(system)?;
        let tables = if self.cfg.resolvent() {
            self.log("resolvent summation");
            let (table, cond) = build_resolvent_coefficients(system, &base).map_err(num("kernels"))?;
            meta.push(format!("resolvent worst condition number={}", float(cond)));
            vec![table]
        } else {
            self.log(format!("kernel series to n={}", self.cfg.n_max()));
            build_coefficient_series(system, &base, self.cfg.n_max()).map_err(num("kernels"))?
        };
        meta.orders(&tables.iter().map(|t| t.order()).collect::<Vec<_>>());
        Ok(tables)
    }

    fn final_table(&self, system: &SystemModel, meta: &mut Metadata) -> Result<CoefficientTable, CliError> {
        Ok(self.tables(system, meta)?.pop().expect("at least one order"))
    }
}

fn order_name(o: SeriesOrder) -> String {
    match o {
        SeriesOrder::Truncated(n) => n.to_string(),
        SeriesOrder::Resolvent => "resolvent".into(),
    }
}

fn monitors(meta: &mut Metadata, m: &Monitors) {
    meta.push(format!(
        "monitors: max_bloch_norm={} min_eigenvalue={} max_trace_defect={} max_hermiticity_defect={} \
         positivity_violated={} negative_rate={}",
        float(m.max_bloch_norm),
        float(m.min_eigenvalue),
        float(m.max_trace_defect),
        float(m.max_hermiticity_defect),
        m.positivity_violated,
        m.negative_rate
    ));
}

type Rho = nalgebra::Matrix2<Complex64>;

fn min_eig(r: &Rho) -> f64 {
    let (a, d, b) = (r[(0, 0)].re, r[(1, 1)].re, r[(0, 1)].norm());
    0.5 * (a + d) - (0.25 * (a - d) * (a - d) + b * b).sqrt()
}

fn rho_row(t: f64, r: &Rho) -> Vec<f64> {
    vec![t, r[(0, 0)].re, r[(0, 1)].re, r[(0, 1)].im, r[(1, 1)].re]
}

const RHO_COLUMNS: [&str; 5] = ["t", "re_rho00", "re_rho01", "im_rho01", "re_rho11"];

/// Runs one validated configuration and returns its artifacts in order.
pub fn execute(cfg: &RunConfig, verbose: bool) -> Result<Vec<Artifact>, CliError> {
    let ctx = Ctx { cfg, verbose };
    let stem = cfg.stem();
    let mut meta = Metadata::new(cfg);
    let csv_artifact = |contents: String| {
        vec![Artifact {
            name: format!("{stem}.csv"),
            contents,
        }]
    };
    match cfg.mode {
        RunMode::Coeffs => {
            let system = ctx.system();
            let tables = ctx.tables(&system, &mut meta)?;
            let names = system.component_names();
            let mut cols = vec!["order".to_string(), "t".to_string()];
            for n in names {
                cols.push(format!("re_b_{n}"));
                cols.push(format!("im_b_{n}"));
            }
            let mut table = Table::new(cols);
            for tab in &tables {
                for (k, t) in ctx.grid().nodes().into_iter().enumerate() {
                    let mut row = vec![order_name(tab.order()), float(t)];
                    for z in tab.row(k) {
                        row.push(float(z.re));
                        row.push(float(z.im));
                    }
                    table.push(row);
                }
            }
            Ok(csv_artifact(csv(&meta, &[(None, table)])))
        }
        RunMode::Fig1 => {
            let system = ctx.system();
            let tables = ctx.tables(&system, &mut meta)?;
            let mut table = Table::new(
                std::iter::once("t".to_string()).chain(tables.iter().map(|t| format!("re_b_zz_n{}", order_name(t.order())))),
            );
            let zz: Vec<Vec<Complex64>> = tables.iter().map(|t| t.column(2)).collect();
            for (k, t) in ctx.grid().nodes().into_iter().enumerate() {
                let mut row = vec![t];
                row.extend(zz.iter().map(|c| c[k].re));
                table.push_floats(&row);
            }
            Ok(csv_artifact(csv(&meta, &[(None, table)])))
        }
        RunMode::SuppFig2 => {
            let system = ctx.system();
            let tables = ctx.tables(&system, &mut meta)?;
            let mut blocks = Vec::new();
            for (col, name) in [(0usize, "zx"), (1, "zy")] {
                let values: Vec<Vec<Complex64>> = tables.iter().map(|t| t.column(col)).collect();
                for (part, pick) in [("re", 0u8), ("im", 1)] {
                    let mut table = Table::new(
                        std::iter::once("t".to_string())
                            .chain(tables.iter().map(|t| format!("{part}_b_{name}_n{}", order_name(t.order())))),
                    );
                    for (k, t) in ctx.grid().nodes().into_iter().enumerate() {
                        let mut row = vec![t];
                        row.extend(values.iter().map(|c| if pick == 0 { c[k].re } else { c[k].im }));
                        table.push_floats(&row);
                    }
                    blocks.push((Some(format!("{part} B_{name}")), table));
                }
            }
            Ok(csv_artifact(csv(&meta, &blocks)))
        }
        RunMode::Bloch => {
            let system = ctx.system();
            let table = ctx.final_table(&system, &mut meta)?;
            let v0 = cfg.initial.expect("validated").bloch;
            ctx.log("integrating Bloch equation");
            let traj = evolve_bloch(&table, v0).map_err(num("dynamics"))?;
            monitors(&mut meta, &traj.monitors);
            let mut out = Table::new(["t", "vx", "vy", "vz", "bloch_norm"]);
            for s in &traj.states {
                out.push_floats(&[s.t, s.v[0], s.v[1], s.v[2], s.norm()]);
            }
            Ok(csv_artifact(csv(&meta, &[(None, out)])))
        }
        RunMode::Jc => {
            let system = ctx.system();
            let table = ctx.final_table(&system, &mut meta)?;
            let rho0 = match cfg.initial {
                Some(i) => rho_from_bloch(i.bloch),
                None => Qubit2x2::excited(),
            };
            ctx.log("integrating JC master equation");
            let traj = evolve_jc(&table, &rho0).map_err(num("dynamics"))?;
            monitors(&mut meta, &traj.monitors);
            let mut out = Table::new(RHO_COLUMNS.iter().copied().chain(["min_eigenvalue"]));
            for (t, r) in traj.times.iter().zip(&traj.states) {
                let mut row = rho_row(*t, r);
                row.push(min_eig(r));
                out.push_floats(&row);
            }
            Ok(csv_artifact(csv(&meta, &[(None, out)])))
        }
        RunMode::DephasingExact => {
            let system = ctx.system();
            let SystemModel::SpinBoson { tls, k0_sq } = system else {
                unreachable!("validated")
            };
            let (bath, grid) = (ctx.bath(), ctx.grid());
            let v0 = cfg.initial.expect("validated").bloch;
            let gamma = dephasing_exponent(&bath, k0_sq, &grid).map_err(num("dynamics"))?;
            let exact = pure_dephasing_exact(&bath, k0_sq, &tls, &grid, v0).map_err(num("dynamics"))?;
            let table = ctx.final_table(&system, &mut meta)?;
            let me = evolve_bloch(&table, v0).map_err(num("dynamics"))?;
            let worst = exact
                .states
                .iter()
                .zip(&me.states)
                .flat_map(|(a, b)| (0..3).map(move |i| (a.v[i] - b.v[i]).abs()))
                .fold(0.0, f64::max);
            meta.push(format!("max |v_exact - v_me|={}", float(worst)));
            monitors(&mut meta, &me.monitors);
            let mut out = Table::new(["t", "gamma", "vx_exact", "vy_exact", "vz_exact", "vx_me", "vy_me", "vz_me"]);
            for (k, (a, b)) in exact.states.iter().zip(&me.states).enumerate() {
                out.push_floats(&[a.t, gamma[k], a.v[0], a.v[1], a.v[2], b.v[0], b.v[1], b.v[2]]);
            }
            Ok(csv_artifact(csv(&meta, &[(None, out)])))
        }
        RunMode::Markov => {
            let system = ctx.system();
            let SystemModel::SpinBoson { tls, k0_sq } = system else {
                unreachable!("validated")
            };
            let grid = ctx.grid();
            let m = cfg.markov.expect("validated");
            let v0 = cfg.initial.expect("validated").bloch;
            let traj = markov_evolve(|_| m.rate, k0_sq, &tls, &rho_from_bloch(v0), &grid).map_err(num("dynamics"))?;
            monitors(&mut meta, &traj.monitors);
            let mut cols: Vec<String> = RHO_COLUMNS.iter().map(|s| s.to_string()).collect();
            let peaked = match m.sigma {
                Some(sigma) => {
                    // a half-line weight of rate/2 is a local weight of rate
                    let d = peaked_kernel(0.5 * m.rate, sigma, &grid).map_err(num("dynamics"))?;
                    let tables = build_coefficient_series(&system, &d, cfg.n_max()).map_err(num("kernels"))?;
                    let table = tables.last().expect("at least one order");
                    meta.orders(&[table.order()]);
                    meta.push(format!("peaked kernel: sigma={}", float(sigma)));
                    cols.extend(["vx_peaked", "vy_peaked", "vz_peaked"].map(String::from));
                    Some(evolve_bloch(table, v0).map_err(num("dynamics"))?)
                }
                None => None,
            };
            let mut out = Table::new(cols);
            for (k, (t, r)) in traj.times.iter().zip(&traj.states).enumerate() {
                let mut row = rho_row(*t, r);
                if let Some(p) = &peaked {
                    row.extend(p.states[k].v);
                }
                out.push_floats(&row);
            }
            Ok(csv_artifact(csv(&meta, &[(None, out)])))
        }
        RunMode::OracleCompare => oracle_compare(&ctx, &stem),
    }
}

#[derive(Serialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum Report<'a> {
    Header {
        schema_version: u32,
        config_sha256: &'a str,
        seed: u64,
        convention: &'a str,
        order: String,
        order_label: &'a str,
        units: &'a str,
    },
    Run {
        halving: usize,
        model: OracleModel,
        coupling_squared: f64,
        dimension: usize,
        levels: &'a [usize],
        max_distance: f64,
        time_of_max: f64,
        times: &'a [f64],
        distances: &'a [f64],
        me_monitors: Monitors,
        oracle_min_eigenvalue: f64,
    },
    Scaling {
        ratios: &'a [f64],
    },
}

fn scaled(model: &OracleModel, factor: f64) -> OracleModel {
    match *model {
        OracleModel::SpinBoson { tls, k0 } => OracleModel::SpinBoson { tls, k0: k0 * factor },
        OracleModel::Rabi { tls, g } => OracleModel::Rabi { tls, g: g * factor },
        OracleModel::JaynesCummings { omega0, g } => OracleModel::JaynesCummings { omega0, g: g * factor },
    }
}

fn coupling_squared(model: &OracleModel) -> f64 {
    match *model {
        OracleModel::SpinBoson { k0, .. } => k0 * k0,
        OracleModel::Rabi { g, .. } | OracleModel::JaynesCummings { g, .. } => g * g,
    }
}

struct RunResult {
    model: OracleModel,
    spec: DiscreteBathSpec,
    report: spinbath::oracle::ComparisonReport,
    monitors: Monitors,
    oracle_min: f64,
}

fn oracle_compare(ctx: &Ctx<'_>, stem: &str) -> Result<Vec<Artifact>, CliError> {
    let cfg = ctx.cfg;
    let o = cfg.oracle.as_ref().expect("validated");
    let grid = ctx.grid();
    let n_max = cfg.n_max();
    let spec = DiscreteBathSpec::new(o.modes(), o.levels(), o.temperature).map_err(num("oracle"))?;
    let v0 = cfg.initial.map(|i| i.bloch).unwrap_or([0.0, 0.0, 1.0]);
    let times = grid.nodes();

    let one = |halving: usize| -> Result<RunResult, CliError> {
        let model = scaled(&o.model, 0.5f64.powf(0.5 * halving as f64));
        ctx.log(format!("halving {halving}: coupling^2 = {:e}", coupling_squared(&model)));
        let d = discrete_correlation(&spec, &model, &grid).map_err(num("oracle"))?;
        let tables = build_coefficient_series(&model.system(), &d, n_max).map_err(num("kernels"))?;
        let table = tables.last().expect("at least one order");
        let rho0 = rho_from_bloch(v0);
        let (me_states, monitors) = match model {
            OracleModel::JaynesCummings { .. } => {
                let t = evolve_jc(table, &rho0).map_err(num("dynamics"))?;
                (t.states, t.monitors)
            }
            _ => {
                let t = evolve_bloch(table, v0).map_err(num("dynamics"))?;
                (t.states.iter().map(|s| *rho_from_bloch(s.v).matrix()).collect(), t.monitors)
            }
        };
        let h = build_hamiltonian(&spec, &model).map_err(num("oracle"))?;
        let exact = evolve_exact(&h, rho0.matrix(), &thermal_state(&spec), &times).map_err(num("oracle"))?;
        let report = compare(&times, &me_states, &exact.times, &exact.states).map_err(num("oracle"))?;
        Ok(RunResult {
            model,
            spec: spec.clone(),
            report,
            monitors,
            oracle_min: exact.min_eigenvalue(),
        })
    };
    let runs: Vec<RunResult> = (0..=o.halvings).into_par_iter().map(one).collect::<Result<_, _>>()?;

    let hash = crate::output::config_hash(cfg);
    let order = SeriesOrder::Truncated(n_max);
    let mut lines = vec![Report::Header {
        schema_version: cfg.schema_version,
        config_sha256: &hash,
        seed: cfg.seed,
        convention: o.model.convention(),
        order: order_name(order),
        order_label: order.label(),
        units: crate::output::UNITS,
    }];
    for (i, r) in runs.iter().enumerate() {
        lines.push(Report::Run {
            halving: i,
            model: r.model,
            coupling_squared: coupling_squared(&r.model),
            dimension: r.spec.dimension(),
            levels: r.spec.levels(),
            max_distance: r.report.max_distance,
            time_of_max: r.report.time_of_max,
            times: &r.report.times,
            distances: &r.report.distances,
            me_monitors: r.monitors,
            oracle_min_eigenvalue: r.oracle_min,
        });
    }
    let ratios: Vec<f64> = runs
        .windows(2)
        .map(|w| w[0].report.max_distance / w[1].report.max_distance)
        .collect();
    if !ratios.is_empty() {
        lines.push(Report::Scaling { ratios: &ratios });
    }
    let mut contents = String::new();
    for l in &lines {
        contents.push_str(&serde_json::to_string(l).expect("report serializes"));
        contents.push('\n');
    }
    Ok(vec![Artifact {
        name: format!("{stem}.jsonl"),
        contents,
    }])
}
