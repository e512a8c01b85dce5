//! Subcommand implementations and artifact writers.
//!
//! Every artifact carries provenance: JSON files embed the configuration
//! SHA-256 and effective seed as fields, CSV files as a leading `#`
//! comment, and camera frames as PGM header comments.  All outputs are
//! pure functions of (config, seed), so repeated runs are byte-identical.

use crate::config::{CalibrationInput, RunConfig};
use crate::{CliError, RunArgs};
use blochtomo::calibration::{
    calibrate_delta_dichroic, calibrate_delta_plain, calibrate_eta, CalibrationReading,
};
use blochtomo::image::{encode_frames, render_frames};
use blochtomo::mat::{C64, CVec3};
use blochtomo::polarimetry::{synthesize_dataset, DatasetRecord};
use blochtomo::ptsym::{pt_point, PtPointReport, SpectralPurity};
use blochtomo::spectral::{
    eigensystem, lift_bands, stokes, CanonicalStep, ModelParams, Quasimomentum,
};
use blochtomo::tomography::{reconstruct_bz, ZoneReconstruction};
use blochtomo::topology::{
    critical_momentum, ep_suspect_pixels, find_exceptional_points, phase_diagram as sweep_plane,
    step_sublattice_residual, winding_number, CriticalMomentum, EPRecord, EpSearchOptions,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};

/// Resolved invocation state shared by every subcommand.
pub struct RunContext {
    pub command: &'static str,
    pub config: RunConfig,
    pub config_sha256: String,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl RunContext {
    /// Reads and validates the configuration, applies the `--seed`
    /// override, and resolves the output directory.
    pub fn prepare(args: &RunArgs, command: &'static str) -> Result<Self, CliError> {
        let bytes = fs::read(&args.config)?;
        let config_sha256 = format!("{:x}", Sha256::digest(&bytes));
        let mut config: RunConfig =
            serde_json::from_slice(&bytes).map_err(|err| CliError::Config {
                reason: err.to_string(),
            })?;
        if let Some(seed) = args.seed {
            config.noise.seed = seed;
            config.solver.seed = seed;
        }
        config.noise.validate()?;
        config.solver.validate()?;
        if let Some(geometry) = &config.images {
            geometry.validate()?;
        }
        if config.grid < 2 {
            return Err(CliError::Config {
                reason: format!("grid must hold at least 2 momentum pixels, got {}", config.grid),
            });
        }
        let out_dir = args
            .out
            .clone()
            .or_else(|| std::env::var_os("BLOCHTOMO_OUT").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."));
        fs::create_dir_all(&out_dir)?;
        let seed = config.noise.seed;
        Ok(Self {
            command,
            config,
            config_sha256,
            seed,
            out_dir,
        })
    }

    fn model(&self) -> Result<ModelParams, CliError> {
        let spec = self.config.model.ok_or_else(|| CliError::Config {
            reason: format!("the {} subcommand needs a \"model\" entry", self.command),
        })?;
        Ok(spec.params()?)
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.out_dir.join(name);
        fs::write(&path, bytes)?;
        println!("wrote {}", path.display());
        Ok(path)
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|err| CliError::Config {
            reason: format!("serializing {name}: {err}"),
        })?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    fn provenance_comment(&self) -> String {
        format!("config_sha256={}\nseed={}", self.config_sha256, self.seed)
    }

    fn input_path(&self, configured: &Option<String>, default_name: &str) -> PathBuf {
        match configured {
            Some(path) => PathBuf::from(path),
            None => self.out_dir.join(default_name),
        }
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let bytes = fs::read(path)?;
    serde_json::from_slice(&bytes).map_err(|err| CliError::Parse {
        path: path.display().to_string(),
        reason: err.to_string(),
    })
}

/// Run-level metadata written by `simulate`; doubles as the frame
/// geometry sidecar for rendered images.
#[derive(Serialize)]
struct MetaFile<'a> {
    command: &'static str,
    config_sha256: &'a str,
    seed: u64,
    delta: f64,
    eta: f64,
    grid: usize,
    noise: blochtomo::polarimetry::NoiseConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    geometry: Option<blochtomo::image::FrameGeometry>,
}

/// One reconstructed pixel as persisted to `reconstruction.json`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PixelRow {
    q: f64,
    m0: [f64; 2],
    m: [[f64; 2]; 3],
    #[serde(rename = "E")]
    energy: Option<[f64; 2]>,
    n: Option<[[f64; 2]; 3]>,
    residual: f64,
    iterations: usize,
    flags: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReconstructionFile {
    config_sha256: String,
    seed: u64,
    pixels: Vec<PixelRow>,
}

fn complex_pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

fn vector_pairs(v: &CVec3) -> [[f64; 2]; 3] {
    [complex_pair(v.x), complex_pair(v.y), complex_pair(v.z)]
}

fn pixel_rows(zone: &ZoneReconstruction) -> Vec<PixelRow> {
    zone.results
        .iter()
        .zip(zone.bands.iter())
        .zip(zone.q.iter())
        .map(|((result, band), &q)| {
            let mut flags = Vec::new();
            if result.flags.converged {
                flags.push("converged".to_string());
            }
            if result.flags.ep_suspect {
                flags.push("ep_suspect".to_string());
            }
            if result.flags.dark_input {
                flags.push("dark_input".to_string());
            }
            PixelRow {
                q,
                m0: complex_pair(result.canonical.m0),
                m: vector_pairs(&result.canonical.m),
                energy: band.as_ref().map(|b| complex_pair(b.energy)),
                n: band.as_ref().map(|b| vector_pairs(&b.n)),
                residual: result.residual,
                iterations: result.iterations,
                flags,
            }
        })
        .collect()
}

fn steps_from_rows(pixels: &[PixelRow]) -> Vec<CanonicalStep> {
    pixels
        .iter()
        .map(|row| CanonicalStep {
            m0: C64::new(row.m0[0], row.m0[1]),
            m: CVec3::new(
                C64::new(row.m[0][0], row.m[0][1]),
                C64::new(row.m[1][0], row.m[1][1]),
                C64::new(row.m[2][0], row.m[2][1]),
            ),
        })
        .collect()
}

pub fn simulate(ctx: &RunContext) -> Result<(), CliError> {
    let params = ctx.model()?;
    let records = synthesize_dataset(&params, ctx.config.grid, &ctx.config.noise)?;
    let mut bytes = serde_json::to_vec_pretty(&records).map_err(|err| CliError::Config {
        reason: format!("serializing dataset: {err}"),
    })?;
    bytes.push(b'\n');
    ctx.write("dataset.json", &bytes)?;
    if let Some(geometry) = &ctx.config.images {
        let frames = render_frames(&params, geometry, &ctx.config.noise)?;
        for (name, payload) in encode_frames(&frames, &ctx.provenance_comment())? {
            ctx.write(&name, &payload)?;
        }
    }
    ctx.write_json(
        "meta.json",
        &MetaFile {
            command: ctx.command,
            config_sha256: &ctx.config_sha256,
            seed: ctx.seed,
            delta: params.delta(),
            eta: params.eta(),
            grid: ctx.config.grid,
            noise: ctx.config.noise,
            geometry: ctx.config.images,
        },
    )?;
    Ok(())
}

pub fn reconstruct(ctx: &RunContext) -> Result<(), CliError> {
    let input = ctx.input_path(&ctx.config.dataset_path, "dataset.json");
    let records: Vec<DatasetRecord> = read_json(&input)?;
    let zone = reconstruct_bz(&records, &ctx.config.solver)?;
    ctx.write_json(
        "reconstruction.json",
        &ReconstructionFile {
            config_sha256: ctx.config_sha256.clone(),
            seed: ctx.seed,
            pixels: pixel_rows(&zone),
        },
    )?;
    Ok(())
}

/// One row of the symmetry report: the chiral-frame decomposition and
/// phase classification at a single (η, q) point.
#[derive(Serialize)]
struct PtRow {
    source: &'static str,
    eta: f64,
    q: f64,
    a: f64,
    b: f64,
    phi: f64,
    phi_prime: f64,
    order_parameter: f64,
    phase: &'static str,
    lambda: [[f64; 2]; 2],
}

fn purity_label(purity: SpectralPurity) -> &'static str {
    match purity {
        SpectralPurity::RealPair => "real_pair",
        SpectralPurity::ImaginaryPair => "imaginary_pair",
        SpectralPurity::Coalesced => "coalesced",
        SpectralPurity::Mixed => "mixed",
    }
}

fn pt_row(source: &'static str, eta: f64, q: f64, report: &PtPointReport) -> PtRow {
    PtRow {
        source,
        eta,
        q,
        a: report.decomposition.a,
        b: report.decomposition.b,
        phi: report.decomposition.phi,
        phi_prime: report.decomposition.phi_prime,
        order_parameter: report.order_parameter,
        phase: purity_label(report.classification.purity),
        lambda: [
            complex_pair(report.classification.lambda),
            complex_pair(-report.classification.lambda),
        ],
    }
}

#[derive(Serialize)]
struct AnalysisFile {
    config_sha256: String,
    seed: u64,
    winding: Option<[f64; 2]>,
    critical: Option<CriticalMomentum>,
    ep_suspects: Vec<usize>,
    max_sublattice_residual: f64,
}

#[derive(Serialize)]
struct EpFile {
    config_sha256: String,
    seed: u64,
    delta: f64,
    records: Option<[EPRecord; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

#[derive(Serialize)]
struct PtFile {
    config_sha256: String,
    seed: u64,
    delta: f64,
    q_critical: Option<f64>,
    rows: Vec<PtRow>,
}

pub fn analyze(ctx: &RunContext) -> Result<(), CliError> {
    let params = ctx.model()?;
    let input = ctx.input_path(&ctx.config.reconstruction_path, "reconstruction.json");
    let file: ReconstructionFile = read_json(&input)?;
    let steps = steps_from_rows(&file.pixels);
    if steps.len() < 2 {
        return Err(CliError::Config {
            reason: format!("reconstruction holds {} pixels; analysis needs at least 2", steps.len()),
        });
    }

    let infidelity: Vec<f64> = steps
        .iter()
        .map(|cs| eigensystem(cs).map(|e| e.infidelity()).unwrap_or(1.0))
        .collect();
    let suspects = ep_suspect_pixels(&infidelity);
    let critical = critical_momentum(&steps).ok();
    let bands = lift_bands(&steps).ok();
    let winding = bands.as_ref().and_then(|bands| {
        let n: Vec<CVec3> = bands.iter().map(|b| b.n).collect();
        winding_number(&n).ok().map(|nu| [nu.re, nu.im])
    });
    let max_sublattice_residual = steps
        .iter()
        .map(step_sublattice_residual)
        .fold(0.0_f64, f64::max);

    // Plot-ready per-pixel table.
    let mut csv = String::new();
    csv.push_str(&format!(
        "# config_sha256={} seed={}\n",
        ctx.config_sha256, ctx.seed
    ));
    csv.push_str("q,e_re,e_im,nx_re,nx_im,ny_re,ny_im,nz_re,nz_im,infidelity,s1,s2,s3\n");
    for (k, (row, cs)) in file.pixels.iter().zip(steps.iter()).enumerate() {
        let band = bands.as_ref().map(|b| &b[k]);
        let (e, n) = match band {
            Some(b) => (
                format!("{},{}", b.energy.re, b.energy.im),
                format!(
                    "{},{},{},{},{},{}",
                    b.n.x.re, b.n.x.im, b.n.y.re, b.n.y.im, b.n.z.re, b.n.z.im
                ),
            ),
            None => (",".to_string(), ",,,,,".to_string()),
        };
        let s = eigensystem(cs)
            .ok()
            .and_then(|e| stokes(&e.psi1).ok())
            .map(|s| format!("{},{},{}", s.x, s.y, s.z))
            .unwrap_or_else(|| ",,".to_string());
        csv.push_str(&format!("{},{},{},{},{}\n", row.q, e, n, infidelity[k], s));
    }
    ctx.write("bands.csv", csv.as_bytes())?;

    ctx.write_json(
        "analysis.json",
        &AnalysisFile {
            config_sha256: ctx.config_sha256.clone(),
            seed: ctx.seed,
            winding,
            critical,
            ep_suspects: suspects,
            max_sublattice_residual,
        },
    )?;

    // Exceptional points of the model's parameter line, then the symmetry
    // report at the critical momentum.
    let ep_search = find_exceptional_points(params.delta(), None, &EpSearchOptions::default());
    let (records, note) = match &ep_search {
        Ok(pair) => (Some(*pair), None),
        Err(err) => (None, Some(err.to_string())),
    };
    ctx.write_json(
        "ep.json",
        &EpFile {
            config_sha256: ctx.config_sha256.clone(),
            seed: ctx.seed,
            delta: params.delta(),
            records,
            note,
        },
    )?;

    let mut rows = Vec::new();
    let q_critical = ep_search.as_ref().ok().map(|pair| pair[0].q);
    if let Some(q_c) = q_critical {
        for &eta in &ctx.config.pt_scan_etas {
            let scan = ModelParams::new(params.delta(), eta)?;
            let cs = CanonicalStep::closed_form(&scan, Quasimomentum::new(q_c));
            let report = pt_point(&cs)?;
            rows.push(pt_row("closed_form", eta, q_c, &report));
        }
        let n = steps.len();
        let pixel = ((q_c / TAU * n as f64).round() as usize) % n;
        if let Ok(report) = pt_point(&steps[pixel]) {
            rows.push(pt_row(
                "reconstruction",
                params.eta(),
                file.pixels[pixel].q,
                &report,
            ));
        }
    }
    ctx.write_json(
        "pt.json",
        &PtFile {
            config_sha256: ctx.config_sha256.clone(),
            seed: ctx.seed,
            delta: params.delta(),
            q_critical,
            rows,
        },
    )?;
    Ok(())
}

pub fn phase_diagram(ctx: &RunContext) -> Result<(), CliError> {
    let spec = ctx.config.phase_grid.unwrap_or_default();
    let cells = sweep_plane(&spec)?;
    let mut csv = String::new();
    csv.push_str(&format!(
        "# config_sha256={} seed={}\n",
        ctx.config_sha256, ctx.seed
    ));
    csv.push_str("delta,eta,nu_re,nu_im\n");
    for cell in &cells {
        match cell.nu {
            Some(nu) => csv.push_str(&format!(
                "{},{},{},{}\n",
                cell.delta, cell.eta, nu.re, nu.im
            )),
            None => csv.push_str(&format!("{},{},,\n", cell.delta, cell.eta)),
        }
    }
    ctx.write("phase_diagram.csv", csv.as_bytes())?;
    Ok(())
}

#[derive(Serialize)]
struct CalibrationFile {
    config_sha256: String,
    seed: u64,
    eta: f64,
    delta_plain: f64,
    delta_dichroic: f64,
}

pub fn calibrate(ctx: &RunContext) -> Result<(), CliError> {
    let CalibrationInput {
        i_ll,
        i_lr,
        i_ord,
        i_ext,
    } = ctx.config.calibration.ok_or_else(|| CliError::Config {
        reason: "the calibrate subcommand needs a \"calibration\" entry".to_string(),
    })?;
    let reading = CalibrationReading {
        i_ll,
        i_lr,
        i_ord,
        i_ext,
    };
    ctx.write_json(
        "calibration.json",
        &CalibrationFile {
            config_sha256: ctx.config_sha256.clone(),
            seed: ctx.seed,
            eta: calibrate_eta(&reading)?,
            delta_plain: calibrate_delta_plain(&reading)?,
            delta_dichroic: calibrate_delta_dichroic(&reading)?,
        },
    )?;
    Ok(())
}

pub fn pipeline(ctx: &RunContext) -> Result<(), CliError> {
    simulate(ctx)?;
    reconstruct(ctx)?;
    analyze(ctx)
}
