use std::collections::HashMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::Parser;
use serde::Serialize;

use dicke_core::SolverConfig;

use crate::grid::{parse_sizes, Grid};

/// Exact ground states of dipole-coupled two-level atoms in a single-mode
/// cavity: sweeps, phase diagrams, susceptibility scans and scaling fits.
#[derive(Debug, Parser)]
#[command(name = "dicke", version)]
pub struct CliArgs {
    /// One of: point, sweep, phase-diagram, fs-scan, scaling
    #[arg(long)]
    pub command: Option<String>,
    /// Flat key = value file carrying the same keys as the flags
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated atom counts, e.g. 32,64,128
    #[arg(long = "N")]
    pub n_atoms: Option<String>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Coupling grid start:stop:count (or a single value)
    #[arg(long)]
    pub lambda: Option<String>,
    /// Interatomic coupling grid start:stop:count (or a single value)
    #[arg(long = "Omega")]
    pub omega_cap: Option<String>,
    /// Susceptibility step δλ
    #[arg(long = "delta-lambda")]
    pub delta_lambda: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for the ground-state cache; omit to disable caching
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Worker count for grid dispatch
    #[arg(long)]
    pub width: Option<usize>,
    /// Seed of the eigensolver start vectors
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Command {
    Point,
    Sweep,
    PhaseDiagram,
    FsScan,
    Scaling,
}

impl Command {
    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "point" => Command::Point,
            "sweep" => Command::Sweep,
            "phase-diagram" => Command::PhaseDiagram,
            "fs-scan" => Command::FsScan,
            "scaling" => Command::Scaling,
            other => bail!(
                "unknown command {other:?}; expected point, sweep, phase-diagram, fs-scan or scaling"
            ),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub sizes: Vec<u32>,
    pub omega: f64,
    pub delta: f64,
    pub lambda: Option<Grid>,
    pub omega_cap: Grid,
    pub delta_lambda: f64,
    pub out: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub width: usize,
    pub solver: SolverConfig,
}

impl RunConfig {
    pub fn from_args(args: CliArgs) -> Result<Self> {
        let mut kv: HashMap<String, String> = HashMap::new();
        if let Some(path) = &args.config {
            for (k, v) in read_config_file(path)? {
                kv.insert(k, v);
            }
        }
        // flags override the file
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                kv.insert(k.to_string(), v);
            }
        };
        put("command", args.command);
        put("N", args.n_atoms);
        put("omega", args.omega.map(|v| v.to_string()));
        put("delta", args.delta.map(|v| v.to_string()));
        put("lambda", args.lambda);
        put("Omega", args.omega_cap);
        put("delta-lambda", args.delta_lambda.map(|v| v.to_string()));
        put("out", args.out.map(|p| p.display().to_string()));
        put("cache", args.cache.map(|p| p.display().to_string()));
        put("width", args.width.map(|v| v.to_string()));
        put("seed", args.seed.map(|v| v.to_string()));

        let command = Command::parse(
            kv.get("command")
                .ok_or_else(|| anyhow!("--command is required (or `command =` in the config)"))?,
        )?;

        let sizes = match kv.get("N") {
            Some(s) => parse_sizes(s).map_err(|e| anyhow!(e))?,
            None => bail!("--N is required"),
        };
        let omega: f64 = parse_field(&kv, "omega")?.unwrap_or(1.0);
        let delta: f64 = parse_field(&kv, "delta")?.unwrap_or(1.0);
        let lambda: Option<Grid> = match kv.get("lambda") {
            Some(s) => Some(s.parse::<Grid>().map_err(|e| anyhow!(e))?),
            None => None,
        };
        let omega_cap: Grid = match kv.get("Omega") {
            Some(s) => s.parse::<Grid>().map_err(|e| anyhow!(e))?,
            None => Grid::single(0.0),
        };
        let delta_lambda: f64 = parse_field(&kv, "delta-lambda")?.unwrap_or(1e-3);
        if delta_lambda <= 0.0 {
            bail!("delta-lambda must be positive");
        }
        let out = kv.get("out").map(PathBuf::from);
        let cache = kv.get("cache").map(PathBuf::from);
        let width: usize = parse_field(&kv, "width")?.unwrap_or(1);
        if width == 0 {
            bail!("width must be at least 1");
        }
        let seed: u64 = parse_field(&kv, "seed")?.unwrap_or(SolverConfig::default().seed);
        let solver = SolverConfig {
            seed,
            ..SolverConfig::default()
        };

        let cfg = Self {
            command,
            sizes,
            omega,
            delta,
            lambda,
            omega_cap,
            delta_lambda,
            out,
            cache,
            width,
            solver,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        match self.command {
            Command::Point => {
                let l = self.require_lambda()?;
                if l.count != 1 || self.omega_cap.count != 1 || self.sizes.len() != 1 {
                    bail!("point needs a single N, a single lambda and a single Omega");
                }
            }
            Command::Sweep => {
                let l = self.require_lambda()?;
                if l.count < 2 {
                    bail!("sweep needs a lambda grid with at least 2 points");
                }
                if self.omega_cap.count != 1 || self.sizes.len() != 1 {
                    bail!("sweep runs at a single N and a single Omega");
                }
                self.require_out()?;
            }
            Command::PhaseDiagram => {
                let l = self.require_lambda()?;
                if l.count < 2 || self.omega_cap.count < 2 {
                    bail!("phase-diagram needs grids in both lambda and Omega");
                }
                if self.sizes.len() != 1 {
                    bail!("phase-diagram runs at a single N");
                }
                self.require_out()?;
            }
            Command::FsScan => {
                let l = self.require_lambda()?;
                if l.count < 3 {
                    bail!("fs-scan needs a lambda grid with at least 3 points");
                }
                self.require_out()?;
            }
            Command::Scaling => {
                if self.sizes.len() < 3 {
                    bail!("scaling needs at least 3 sizes");
                }
                if self.lambda.is_some() && self.omega_cap.count > 1 {
                    bail!("scaling with an Omega grid chooses its own per-Omega lambda window; drop --lambda");
                }
                self.require_out()?;
            }
        }
        Ok(())
    }

    fn require_lambda(&self) -> Result<Grid> {
        self.lambda
            .ok_or_else(|| anyhow!("--lambda is required for this command"))
    }

    fn require_out(&self) -> Result<()> {
        if self.out.is_none() {
            bail!("--out is required for this command");
        }
        Ok(())
    }
}

fn parse_field<T: std::str::FromStr>(kv: &HashMap<String, String>, key: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    match kv.get(key) {
        None => Ok(None),
        Some(s) => s
            .trim()
            .parse::<T>()
            .map(Some)
            .map_err(|e| anyhow!("bad value for {key}: {e}")),
    }
}

/// Flat `key = value` file; `#` starts a comment.
pub fn read_config_file(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config file {}", path.display()))?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("{}:{}: expected key = value", path.display(), i + 1))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(list: &[&str]) -> CliArgs {
        CliArgs::parse_from(std::iter::once("dicke").chain(list.iter().copied()))
    }

    #[test]
    fn flags_override_file() {
        let dir = std::env::temp_dir().join(format!("dicke-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("a.conf");
        std::fs::write(
            &path,
            "command = sweep\nN = 4\nlambda = 0:1:5\nOmega = 2.2\nout = /tmp/x.csv\nseed = 9\n",
        )
        .unwrap();
        let cfg = RunConfig::from_args(args(&[
            "--config",
            path.to_str().unwrap(),
            "--Omega",
            "2.5",
        ]))
        .unwrap();
        assert_eq!(cfg.omega_cap, Grid::single(2.5));
        assert_eq!(cfg.solver.seed, 9);
        assert_eq!(cfg.sizes, vec![4]);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn rejects_incomplete_configs() {
        assert!(RunConfig::from_args(args(&["--command", "sweep", "--N", "4"])).is_err());
        assert!(RunConfig::from_args(args(&["--command", "nope", "--N", "4"])).is_err());
        assert!(RunConfig::from_args(args(&[
            "--command", "point", "--N", "4", "--lambda", "0:1:5", "--Omega", "1",
        ]))
        .is_err());
    }
}
