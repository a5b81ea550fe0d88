use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use dicke_core::{
    best_collapse_exponent, collapse_quality, critical_coupling, critical_window,
    energy_second_derivative, extrapolate_c_infinity, fidelity_susceptibility_from,
    fs_curve_with_peak, loglog_slope_fit, scaled_concurrence, GroundState, GroundStateCache,
    ModelParams, PeakRef, ScalingDataset, SizeCurve, SolverError, SweepSolver,
};

use crate::cache::DiskCache;
use crate::config::{Command, RunConfig};
use crate::rows::{write_result_csv, ResultRow};

pub fn run(cfg: &RunConfig) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.width)
        .build()
        .context("building worker pool")?;
    pool.install(|| dispatch(cfg))
}

fn dispatch(cfg: &RunConfig) -> Result<()> {
    match cfg.command {
        Command::Point => cmd_point(cfg),
        Command::Sweep => cmd_sweep(cfg),
        Command::PhaseDiagram => cmd_phase_diagram(cfg),
        Command::FsScan => cmd_fs_scan(cfg),
        Command::Scaling => cmd_scaling(cfg),
    }
}

fn open_cache(cfg: &RunConfig) -> Result<Option<Arc<dyn GroundStateCache>>> {
    match &cfg.cache {
        None => Ok(None),
        Some(dir) => {
            let cache = DiskCache::open(dir.clone())
                .with_context(|| format!("opening cache directory {}", dir.display()))?;
            Ok(Some(cache as Arc<dyn GroundStateCache>))
        }
    }
}

fn params_at(cfg: &RunConfig, n: u32, lambda: f64, omega_cap: f64) -> Result<ModelParams> {
    ModelParams::new(cfg.omega, cfg.delta, lambda, omega_cap, n).map_err(|e| anyhow!(e))
}

/// Solve one grid point; eigensolver exhaustion becomes a placeholder row
/// instead of aborting the run.
fn solve_row(
    sweep: &mut SweepSolver,
    params: &ModelParams,
    fs_step: Option<f64>,
) -> Result<(ResultRow, Option<GroundState>)> {
    match sweep.solve(params) {
        Ok(gs) => {
            let fs = match fs_step {
                Some(step) if gs.converged => {
                    fidelity_susceptibility_from(sweep, &gs, step).ok()
                }
                _ => None,
            };
            Ok((ResultRow::from_state(&gs, fs), Some(gs)))
        }
        Err(SolverError::Eigensolver { .. }) => Ok((
            ResultRow::failed(params.n_atoms, params.lambda, params.capital_omega),
            None,
        )),
        Err(e) => Err(e.into()),
    }
}

#[derive(Serialize)]
struct Sidecar<'a> {
    version: &'a str,
    config: &'a RunConfig,
}

fn write_sidecar(out: &Path, cfg: &RunConfig) -> Result<()> {
    let sidecar = Sidecar {
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
    };
    let path = PathBuf::from(format!("{}.meta.json", out.display()));
    std::fs::write(&path, serde_json::to_vec_pretty(&sidecar)?)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn cmd_point(cfg: &RunConfig) -> Result<()> {
    let cache = open_cache(cfg)?;
    let lambda = cfg.lambda.expect("validated").start;
    let p = params_at(cfg, cfg.sizes[0], lambda, cfg.omega_cap.start)?;
    let mut sweep = SweepSolver::with_cache(cfg.solver, cache);
    let (row, _) = solve_row(&mut sweep, &p, Some(cfg.delta_lambda))?;

    #[derive(Serialize)]
    struct PointOutput<'a> {
        version: &'a str,
        config: &'a RunConfig,
        result: &'a ResultRow,
    }
    let payload = PointOutput {
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        result: &row,
    };
    let text = serde_json::to_string_pretty(&payload)?;
    println!("{text}");
    if let Some(out) = &cfg.out {
        std::fs::write(out, text.as_bytes())
            .with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(())
}

fn cmd_sweep(cfg: &RunConfig) -> Result<()> {
    let cache = open_cache(cfg)?;
    let lams = cfg.lambda.expect("validated").points();
    let omega_cap = cfg.omega_cap.start;
    let n = cfg.sizes[0];

    let mut sweep = SweepSolver::with_cache(cfg.solver, cache);
    let mut rows = Vec::with_capacity(lams.len());
    let mut energies: Vec<Option<f64>> = Vec::with_capacity(lams.len());
    for &la in &lams {
        let p = params_at(cfg, n, la, omega_cap)?;
        let (row, gs) = solve_row(&mut sweep, &p, Some(cfg.delta_lambda))?;
        energies.push(gs.as_ref().filter(|g| g.converged).map(|g| g.energy));
        rows.push(row);
    }

    // central second differences where the energy curve is complete
    if energies.iter().all(|e| e.is_some()) && lams.len() >= 3 {
        let curve: Vec<(f64, f64)> = lams
            .iter()
            .zip(energies.iter())
            .map(|(&l, e)| (l, e.unwrap()))
            .collect();
        if let Ok(d2) = energy_second_derivative(&curve) {
            for (k, v) in d2.values.iter().enumerate() {
                rows[k + 1].d2e_dlambda2 = Some(*v);
            }
        }
    }

    let out = cfg.out.as_ref().expect("validated");
    write_result_csv(out, &rows)?;
    write_sidecar(out, cfg)
}

fn cmd_phase_diagram(cfg: &RunConfig) -> Result<()> {
    let cache = open_cache(cfg)?;
    let lams = cfg.lambda.expect("validated").points();
    let oms = cfg.omega_cap.points();
    let n = cfg.sizes[0];

    let row_blocks: Vec<Result<Vec<ResultRow>>> = oms
        .par_iter()
        .map(|&om| {
            let mut sweep = SweepSolver::with_cache(cfg.solver, cache.clone());
            let mut rows = Vec::with_capacity(lams.len());
            for &la in &lams {
                let p = params_at(cfg, n, la, om)?;
                let (row, _) = solve_row(&mut sweep, &p, None)?;
                rows.push(row);
            }
            Ok(rows)
        })
        .collect();

    let mut rows = Vec::with_capacity(oms.len() * lams.len());
    for block in row_blocks {
        rows.extend(block?);
    }
    let out = cfg.out.as_ref().expect("validated");
    write_result_csv(out, &rows)?;
    write_sidecar(out, cfg)
}

fn cmd_fs_scan(cfg: &RunConfig) -> Result<()> {
    let cache = open_cache(cfg)?;
    let lams = cfg.lambda.expect("validated").points();
    let oms = cfg.omega_cap.points();

    let jobs: Vec<(u32, f64)> = cfg
        .sizes
        .iter()
        .flat_map(|&n| oms.iter().map(move |&om| (n, om)))
        .collect();
    let blocks: Vec<Result<Vec<ResultRow>>> = jobs
        .par_iter()
        .map(|&(n, om)| {
            let mut sweep = SweepSolver::with_cache(cfg.solver, cache.clone());
            let mut rows = Vec::with_capacity(lams.len());
            for &la in &lams {
                let p = params_at(cfg, n, la, om)?;
                let (row, _) = solve_row(&mut sweep, &p, Some(cfg.delta_lambda))?;
                rows.push(row);
            }
            Ok(rows)
        })
        .collect();

    let mut rows = Vec::new();
    for block in blocks {
        rows.extend(block?);
    }
    let out = cfg.out.as_ref().expect("validated");
    write_result_csv(out, &rows)?;
    write_sidecar(out, cfg)
}

struct ScalingJob {
    omega_cap: f64,
    n: u32,
    curve: Vec<(f64, f64)>,
    peak: PeakRef,
    critical_row: ResultRow,
    photons: Option<f64>,
    scaled_conc: Option<f64>,
}

fn cmd_scaling(cfg: &RunConfig) -> Result<()> {
    let cache = open_cache(cfg)?;
    let oms = cfg.omega_cap.points();

    let jobs: Vec<(f64, u32)> = oms
        .iter()
        .flat_map(|&om| cfg.sizes.iter().map(move |&n| (om, n)))
        .collect();
    let done: Vec<Result<ScalingJob>> = jobs
        .par_iter()
        .map(|&(om, n)| {
            let base = params_at(cfg, n, 0.0, om)?;
            let lc = critical_coupling(&base);
            let grid = match (&cfg.lambda, oms.len()) {
                (Some(g), 1) => g.points(),
                _ => critical_window(lc, 0.15, 41),
            };
            let mut sweep = SweepSolver::with_cache(cfg.solver, cache.clone());
            let fs = fs_curve_with_peak(&mut sweep, &base, &grid, cfg.delta_lambda)
                .map_err(|e| anyhow!("susceptibility curve failed at N={n}, Omega={om}: {e}"))?;
            let pc = params_at(cfg, n, lc, om)?;
            let (mut critical_row, gs) = solve_row(&mut sweep, &pc, None)?;
            critical_row.fs_avg = None;
            let photons = critical_row.photons_per_atom;
            let scaled_conc = gs.as_ref().and_then(|g| scaled_concurrence(g).ok());
            Ok(ScalingJob {
                omega_cap: om,
                n,
                curve: fs.curve,
                peak: fs.peak,
                critical_row,
                photons,
                scaled_conc,
            })
        })
        .collect();
    let done: Vec<ScalingJob> = done.into_iter().collect::<Result<_>>()?;

    let out = cfg.out.as_ref().expect("validated");
    let stem = out.with_extension("");
    let stem = stem.to_string_lossy();

    // raw susceptibility curves
    let mut fs_lines = String::from("N,Omega,lambda,fs_avg\n");
    for job in &done {
        for (la, chi) in &job.curve {
            fs_lines.push_str(&format!("{},{},{},{}\n", job.n, job.omega_cap, la, chi));
        }
    }
    std::fs::write(format!("{stem}_fs.csv"), fs_lines)?;

    // per-size critical-point observables
    let obs_rows: Vec<ResultRow> = done.iter().map(|j| j.critical_row.clone()).collect();
    write_result_csv(Path::new(&format!("{stem}_observables.csv")), &obs_rows)?;

    // collapse data and exponent fits per Omega
    let mut collapse_lines = String::from("Omega,N,x,y\n");
    let mut fit_lines = String::from(
        "Omega,observable,exponent,stderr,exponent_extrapolated,c_infinity,nu_star,quality_nu23,quality_nu13,quality_nu1\n",
    );
    for &om in &oms {
        let group: Vec<&ScalingJob> = done.iter().filter(|j| j.omega_cap == om).collect();
        let curves: Vec<SizeCurve> = group
            .iter()
            .map(|j| SizeCurve {
                n: j.n,
                curve: j.curve.clone(),
            })
            .collect();
        let peaks: Vec<PeakRef> = group.iter().map(|j| j.peak).collect();
        let dataset = ScalingDataset::new("fs_avg", curves).map_err(|e| anyhow!(e))?;

        let nu0 = 2.0 / 3.0;
        for job in &group {
            let scale = f64::from(job.n).powf(nu0);
            for (la, chi) in &job.curve {
                let x = scale * (la - job.peak.lambda_max);
                let y = (job.peak.value_max - chi) / chi;
                collapse_lines.push_str(&format!("{},{},{},{}\n", om, job.n, x, y));
            }
        }

        let q23 = collapse_quality(&dataset, nu0, &peaks).map_err(|e| anyhow!(e))?;
        let q13 = collapse_quality(&dataset, 1.0 / 3.0, &peaks).map_err(|e| anyhow!(e))?;
        let q1 = collapse_quality(&dataset, 1.0, &peaks).map_err(|e| anyhow!(e))?;
        let (nu_star, _) =
            best_collapse_exponent(&dataset, &peaks, (0.3, 1.2)).map_err(|e| anyhow!(e))?;
        fit_lines.push_str(&format!(
            "{om},fs_collapse,,,,,{nu_star},{q23},{q13},{q1}\n"
        ));

        let op_points: Vec<(f64, f64)> = group
            .iter()
            .filter_map(|j| j.photons.map(|p| (f64::from(j.n), p)))
            .collect();
        match loglog_slope_fit(&op_points) {
            Ok(fit) => fit_lines.push_str(&format!(
                "{om},photons_per_atom,{},{},{},,,,,\n",
                fit.exponent, fit.stderr, fit.extrapolated_intercept
            )),
            Err(e) => {
                eprintln!("order-parameter fit failed at Omega={om}: {e}");
                fit_lines.push_str(&format!("{om},photons_per_atom,,,,,,,,\n"));
            }
        }

        let c_points: Vec<(f64, f64)> = group
            .iter()
            .filter_map(|j| j.scaled_conc.map(|c| (f64::from(j.n), c)))
            .collect();
        match extrapolate_c_infinity(&c_points) {
            Ok((c_inf, fit)) => fit_lines.push_str(&format!(
                "{om},scaled_concurrence_diff,{},{},{},{c_inf},,,,\n",
                fit.exponent, fit.stderr, fit.extrapolated_intercept
            )),
            Err(e) => {
                eprintln!("concurrence extrapolation failed at Omega={om}: {e}");
                fit_lines.push_str(&format!("{om},scaled_concurrence_diff,,,,,,,,\n"));
            }
        }
    }
    std::fs::write(format!("{stem}_collapse.csv"), collapse_lines)?;
    std::fs::write(out, fit_lines)?;
    write_sidecar(out, cfg)
}
