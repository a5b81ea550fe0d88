//! The fixed result-row schema shared by every CSV-emitting command.

use std::io::Write;

use serde::Serialize;

use dicke_core::{GroundState, ObservableRecord};

pub const RESULT_COLUMNS: &str = "N,j,lambda,Omega,n_tr_used,converged,energy,energy_per_atom,d2E_dlambda2,photons_per_atom,fs_avg,concurrence,scaled_concurrence";

#[derive(Debug, Clone, Serialize)]
pub struct ResultRow {
    pub n_atoms: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j: Option<f64>,
    pub lambda: f64,
    pub omega_cap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_tr_used: Option<usize>,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_per_atom: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d2e_dlambda2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub photons_per_atom: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fs_avg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub concurrence: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scaled_concurrence: Option<f64>,
}

impl ResultRow {
    /// Placeholder row for a grid point whose solve did not converge.
    pub fn failed(n_atoms: u32, lambda: f64, omega_cap: f64) -> Self {
        Self {
            n_atoms,
            j: None,
            lambda,
            omega_cap,
            n_tr_used: None,
            converged: false,
            energy: None,
            energy_per_atom: None,
            d2e_dlambda2: None,
            photons_per_atom: None,
            fs_avg: None,
            concurrence: None,
            scaled_concurrence: None,
        }
    }

    pub fn from_state(gs: &GroundState, fs_avg: Option<f64>) -> Self {
        let rec = ObservableRecord::from_ground_state(gs);
        Self {
            n_atoms: gs.params.n_atoms,
            j: Some(rec.j),
            lambda: gs.params.lambda,
            omega_cap: gs.params.capital_omega,
            n_tr_used: Some(gs.n_tr_used),
            converged: gs.converged,
            energy: Some(gs.energy),
            energy_per_atom: Some(rec.energy_per_atom),
            d2e_dlambda2: None,
            photons_per_atom: rec.photons_per_atom,
            fs_avg,
            concurrence: rec.concurrence,
            scaled_concurrence: rec.scaled_concurrence,
        }
    }

    fn csv_line(&self) -> String {
        fn opt_f(v: Option<f64>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        fn opt_u(v: Option<usize>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.n_atoms,
            opt_f(self.j),
            self.lambda,
            self.omega_cap,
            opt_u(self.n_tr_used),
            self.converged,
            opt_f(self.energy),
            opt_f(self.energy_per_atom),
            opt_f(self.d2e_dlambda2),
            opt_f(self.photons_per_atom),
            opt_f(self.fs_avg),
            opt_f(self.concurrence),
            opt_f(self.scaled_concurrence),
        )
    }
}

/// UTF-8, LF line endings, header row with the fixed column names.
pub fn write_result_csv(path: &std::path::Path, rows: &[ResultRow]) -> std::io::Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    w.write_all(RESULT_COLUMNS.as_bytes())?;
    w.write_all(b"\n")?;
    for row in rows {
        w.write_all(row.csv_line().as_bytes())?;
        w.write_all(b"\n")?;
    }
    w.flush()
}
