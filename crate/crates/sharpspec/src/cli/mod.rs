//! Command-line front end: `sharpspec verify|spectrum|convergence|evolve`.
//!
//! Exit codes: 0 when every requested check or computation succeeded, 1 for
//! computational failures (a failing verification row, an eigenpair that
//! could not be verified, a solver giving up), 2 for usage and input errors
//! (unknown flags, unreadable or malformed files, impossible requests).
//! All file output is deterministic for fixed inputs and seed.

pub mod export;
pub mod suites;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde::Deserialize;

use crate::complex::cubical::CubicalComplex;
use crate::complex::domain::{DomainSpec, VoxelDomain};
use crate::eig::EigResult;
use crate::error::{Error, Result};
use crate::pde_evolution::{evolve_heat, evolve_wave, EigenBasis};
use crate::sharp_spectra::drivers::{
    curl_sharp_eigs, d_sharp_1d, laplace_sharp_with_coords, CurlParams,
};
use crate::{DEFAULT_SEED, DEFAULT_TOL};

use export::ConvergenceRow;

#[derive(Parser)]
#[command(
    name = "sharpspec",
    version,
    about = "Spectra and evolution for sharp extensions of grad, div and curl on voxel domains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Suite {
    Linrel,
    Complex,
    Spectra,
    All,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Operator {
    #[value(name = "curl-sharp")]
    CurlSharp,
    #[value(name = "laplace-sharp")]
    LaplaceSharp,
    #[value(name = "d-sharp-1d")]
    DSharp1d,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Equation {
    Heat,
    Wave,
}

#[derive(Subcommand)]
enum Command {
    /// Run an invariant suite and report one row per check.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Also write the report as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute an eigenvalue window of one operator on one domain.
    Spectrum {
        /// Domain description file (JSON).
        #[arg(long)]
        domain: PathBuf,
        #[arg(long, value_enum)]
        operator: Operator,
        /// How many eigenvalues to report, smallest magnitude first.
        #[arg(long, default_value_t = 8)]
        count: usize,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Directory for VTK eigenfields (one file per eigenvector).
        #[arg(long)]
        export_fields: Option<PathBuf>,
    },
    /// Refinement study: rerun one operator across a list of grid sizes.
    Convergence {
        /// Domain description file; its `h` is overridden per level.
        #[arg(long)]
        domain: PathBuf,
        #[arg(long, value_enum)]
        operator: Operator,
        /// Grid sizes, comma separated, at least three.
        #[arg(long, value_delimiter = ',', required = true)]
        h_list: Vec<f64>,
        /// How many eigenvalues to track per level.
        #[arg(long, default_value_t = 3)]
        count: usize,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evolve the heat or wave equation by eigenexpansion.
    Evolve {
        /// Domain description file (1d or 2d).
        #[arg(long)]
        domain: PathBuf,
        #[arg(long, value_enum)]
        equation: Equation,
        /// JSON data file: `{"u0": [...]}` with optional `"v0"` for wave.
        #[arg(long)]
        data: PathBuf,
        /// Output times, comma separated, strictly increasing.
        #[arg(long, value_delimiter = ',', required = true)]
        times: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Output path prefix; writes `<out>.snapshots.csv` and
        /// `<out>.energy.csv`.
        #[arg(long)]
        out: PathBuf,
    },
}

/// Initial data for `evolve`. Strict fields for the same reason as
/// [`DomainSpec`]: silent typos are worse than loud ones.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EvolveData {
    u0: Vec<f64>,
    #[serde(default)]
    v0: Option<Vec<f64>>,
}

/// Parses arguments from the process environment, runs the command and
/// returns the exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not errors.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_)
        | Error::Json(_)
        | Error::InvalidDomain(_)
        | Error::InvalidData(_)
        | Error::Precondition(_)
        | Error::DimensionMismatch(_)
        | Error::ResourceLimit(_) => 2,
        _ => 1,
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Verify { suite, seed, tol, out } => cmd_verify(suite, seed, tol, out.as_deref()),
        Command::Spectrum { domain, operator, count, tol, seed, out, export_fields } => {
            cmd_spectrum(&domain, operator, count, tol, seed, &out, export_fields.as_deref())
        }
        Command::Convergence { domain, operator, h_list, count, tol, seed, out } => {
            cmd_convergence(&domain, operator, &h_list, count, tol, seed, &out)
        }
        Command::Evolve { domain, equation, data, times, tol, out } => {
            cmd_evolve(&domain, equation, &data, &times, tol, &out)
        }
    }
}

fn cmd_verify(suite: Suite, seed: u64, tol: f64, out: Option<&Path>) -> Result<i32> {
    let names: &[&str] = match suite {
        Suite::Linrel => &["linrel"],
        Suite::Complex => &["complex"],
        Suite::Spectra => &["spectra"],
        Suite::All => &["linrel", "complex", "spectra"],
    };
    let report = suites::run_suites(names, seed, tol)?;
    print!("{}", report.to_text());
    if let Some(path) = out {
        fs::write(path, report.to_csv())?;
    }
    if report.all_pass() {
        Ok(0)
    } else {
        eprintln!("{} of {} checks failed", report.failed().len(), report.rows.len());
        Ok(1)
    }
}

/// Keeps the `count` smallest-magnitude eigenpairs, re-indexed and
/// re-clustered. Ties break toward the negative value so output order is
/// total.
fn select_by_magnitude(eig: &EigResult, count: usize) -> EigResult {
    let mut idx: Vec<usize> = (0..eig.len()).collect();
    idx.sort_by(|&a, &b| {
        let (va, vb) = (eig.eigenvalues[a], eig.eigenvalues[b]);
        va.abs().total_cmp(&vb.abs()).then(va.total_cmp(&vb))
    });
    idx.truncate(count);
    let mut out = EigResult {
        operator: eig.operator.clone(),
        eigenvalues: idx.iter().map(|&i| eig.eigenvalues[i]).collect(),
        residuals: idx.iter().map(|&i| eig.residuals[i]).collect(),
        cluster_ids: vec![],
        defects: eig
            .defects
            .as_ref()
            .map(|d| idx.iter().map(|&i| d[i]).collect()),
        vectors_re: eig.vectors_re.as_ref().map(|m| m.select_columns(&idx)),
        vectors_im: eig.vectors_im.as_ref().map(|m| m.select_columns(&idx)),
        unverified: eig.unverified.clone(),
        meta: eig.meta.clone(),
    };
    let cluster_tol = if out.meta.cluster_tol > 0.0 {
        out.meta.cluster_tol
    } else {
        1e-8 * out.max_abs().max(1.0)
    };
    out.assign_clusters(cluster_tol);
    out
}

fn spectrum_for(
    domain: &VoxelDomain,
    operator: Operator,
    count: usize,
    tol: Option<f64>,
    seed: u64,
) -> Result<(EigResult, Option<Vec<f64>>)> {
    match operator {
        Operator::LaplaceSharp => {
            let (eig, weights) = laplace_sharp_with_coords(domain, tol.unwrap_or(DEFAULT_TOL))?;
            Ok((eig, Some(weights)))
        }
        Operator::DSharp1d => {
            if domain.dim != 1 {
                return Err(Error::Precondition(format!(
                    "d-sharp-1d needs a 1d domain, got {}d",
                    domain.dim
                )));
            }
            let eig = d_sharp_1d(domain.shape[0] + 1, tol.unwrap_or(DEFAULT_TOL))?;
            Ok((eig, None))
        }
        Operator::CurlSharp => {
            let mut params = CurlParams::new(count);
            params.seed = seed;
            if let Some(t) = tol {
                params.tol = t;
            }
            let (eig, _) = curl_sharp_eigs(domain, &params)?;
            Ok((eig, None))
        }
    }
}

fn cmd_spectrum(
    domain_path: &Path,
    operator: Operator,
    count: usize,
    tol: Option<f64>,
    seed: u64,
    out: &Path,
    export_fields: Option<&Path>,
) -> Result<i32> {
    let spec = DomainSpec::from_file(domain_path)?;
    let domain = spec.voxelize()?;
    let (full, weights) = spectrum_for(&domain, operator, count, tol, seed)?;
    let eig = select_by_magnitude(&full, count);
    fs::write(out, export::spectrum_csv(&eig))?;

    if let Some(dir) = export_fields {
        write_fields(dir, &domain, operator, &eig, weights.as_deref())?;
    }

    if eig.unverified.is_empty() {
        Ok(0)
    } else {
        for u in &eig.unverified {
            eprintln!(
                "unverified: value {} residual {} ({})",
                u.value_re, u.residual, u.reason
            );
        }
        eprintln!("spectrum is partial: {} unverified candidates", eig.unverified.len());
        Ok(1)
    }
}

fn write_fields(
    dir: &Path,
    domain: &VoxelDomain,
    operator: Operator,
    eig: &EigResult,
    weights: Option<&[f64]>,
) -> Result<()> {
    let Some(re) = eig.vectors_re.as_ref() else {
        eprintln!("operator reports no eigenvectors; skipping --export-fields");
        return Ok(());
    };
    fs::create_dir_all(dir)?;
    let complex = CubicalComplex::build(domain);
    for j in 0..eig.len() {
        let title = format!(
            "eigenfield {j} lambda {}",
            crate::report::format_float_full(eig.eigenvalues[j])
        );
        match operator {
            Operator::LaplaceSharp => {
                // Hat coordinates back to nodal values.
                let w = weights.ok_or_else(|| {
                    Error::Precondition("missing vertex weights for export".into())
                })?;
                let col = re.column(j);
                let nodal: Vec<f64> =
                    col.iter().zip(w).map(|(v, wi)| v / wi.sqrt()).collect();
                let text =
                    export::vtk_vertex_scalars(domain, &complex, &title, "u", &nodal)?;
                fs::write(dir.join(format!("eig_{j:03}.vtk")), text)?;
            }
            Operator::CurlSharp => {
                let col: Vec<f64> = re.column(j).iter().copied().collect();
                let text = export::vtk_edge_vectors(domain, &complex, &title, "re", &col)?;
                fs::write(dir.join(format!("eig_{j:03}_re.vtk")), text)?;
                if let Some(im) = eig.vectors_im.as_ref() {
                    let col: Vec<f64> = im.column(j).iter().copied().collect();
                    let text =
                        export::vtk_edge_vectors(domain, &complex, &title, "im", &col)?;
                    fs::write(dir.join(format!("eig_{j:03}_im.vtk")), text)?;
                }
            }
            Operator::DSharp1d => {
                // Block coordinates are internal to the solver; there is no
                // field to draw.
            }
        }
    }
    Ok(())
}

/// Tracked values of one level: the `count` smallest-magnitude eigenvalues
/// after dropping the numerical kernel (and, for curl, keeping the positive
/// half so tracks do not hop between mirror pairs).
fn tracked_values(eig: &EigResult, operator: Operator, count: usize, h: f64) -> Result<Vec<f64>> {
    let scale = eig.max_abs().max(1.0);
    let mut vals: Vec<f64> = match operator {
        Operator::CurlSharp => eig
            .eigenvalues
            .iter()
            .copied()
            .filter(|v| *v > 1e-8 * scale)
            .collect(),
        _ => eig
            .eigenvalues
            .iter()
            .copied()
            .filter(|v| v.abs() > 1e-8 * scale)
            .collect(),
    };
    vals.sort_by(|a, b| a.abs().total_cmp(&b.abs()).then(a.total_cmp(b)));
    if vals.len() < count {
        return Err(Error::SolverFailure(format!(
            "level h = {h} produced {} usable eigenvalues, need {count}",
            vals.len()
        )));
    }
    vals.truncate(count);
    Ok(vals)
}

fn cmd_convergence(
    domain_path: &Path,
    operator: Operator,
    h_list: &[f64],
    count: usize,
    tol: Option<f64>,
    seed: u64,
    out: &Path,
) -> Result<i32> {
    if h_list.len() < 3 {
        return Err(Error::Precondition(format!(
            "a refinement study needs at least 3 grid sizes, got {}",
            h_list.len()
        )));
    }
    let mut hs = h_list.to_vec();
    hs.sort_by(|a, b| b.total_cmp(a));
    if hs.windows(2).any(|w| w[0] <= w[1]) || hs.last().is_some_and(|h| *h <= 0.0) {
        return Err(Error::Precondition("grid sizes must be positive and distinct".into()));
    }

    let base = DomainSpec::from_file(domain_path)?;
    let mut levels: Vec<Vec<f64>> = Vec::with_capacity(hs.len());
    for &h in &hs {
        let mut spec = base.clone();
        spec.h = h;
        let domain = spec.voxelize()?;
        let (eig, _) = spectrum_for(&domain, operator, count + 2, tol, seed)?;
        levels.push(tracked_values(&eig, operator, count, h)?);
    }

    let mut rows = Vec::new();
    for track in 0..count {
        for (i, &h) in hs.iter().enumerate() {
            let fit = if i >= 2 {
                export::order_from_triple(
                    [hs[i - 2], hs[i - 1], h],
                    [levels[i - 2][track], levels[i - 1][track], levels[i][track]],
                )
            } else {
                None
            };
            rows.push(ConvergenceRow {
                track,
                h,
                eigenvalue: levels[i][track],
                richardson: fit.map(|f| f.1),
                order: fit.map(|f| f.0),
            });
        }
    }
    fs::write(out, export::convergence_csv(&rows))?;
    Ok(0)
}

fn cmd_evolve(
    domain_path: &Path,
    equation: Equation,
    data_path: &Path,
    times: &[f64],
    tol: f64,
    out: &Path,
) -> Result<i32> {
    let spec = DomainSpec::from_file(domain_path)?;
    let domain = spec.voxelize()?;
    let (eig, weights) = laplace_sharp_with_coords(&domain, tol)?;
    let basis = EigenBasis::from_laplace(&eig, &weights, tol)?;

    let text = fs::read_to_string(data_path)?;
    let data: EvolveData = serde_json::from_str(&text)?;
    if data.u0.len() != basis.dim() {
        return Err(Error::InvalidData(format!(
            "u0 has {} entries for a grid with {} nodes",
            data.u0.len(),
            basis.dim()
        )));
    }
    let u0 = DVector::from_column_slice(&data.u0);

    let result = match equation {
        Equation::Heat => {
            if data.v0.is_some() {
                return Err(Error::InvalidData("v0 only applies to the wave equation".into()));
            }
            evolve_heat(&basis, &u0, times)?
        }
        Equation::Wave => {
            let v0 = match &data.v0 {
                None => DVector::zeros(basis.dim()),
                Some(v) => {
                    if v.len() != basis.dim() {
                        return Err(Error::InvalidData(format!(
                            "v0 has {} entries for a grid with {} nodes",
                            v.len(),
                            basis.dim()
                        )));
                    }
                    DVector::from_column_slice(v)
                }
            };
            evolve_wave(&basis, &u0, &v0, times)?
        }
    };

    let mut snap = out.as_os_str().to_owned();
    snap.push(".snapshots.csv");
    fs::write(PathBuf::from(snap), export::snapshots_csv(&result))?;
    let mut energy = out.as_os_str().to_owned();
    energy.push(".energy.csv");
    fs::write(PathBuf::from(energy), export::energy_csv(&result))?;
    Ok(0)
}
