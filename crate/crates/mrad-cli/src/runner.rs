//! Scenario dispatch: build the physics objects from a config, evaluate,
//! and emit deterministic tables plus a run summary.

use anyhow::{bail, Context, Result};
use mrad_core::beams::ZetaField;
use mrad_core::kernels::{formation_time, SmallRecoilCurrent};
use mrad_core::packets::{spin_mul, spin_projector, spin_trace, SpinKernel};
use mrad_core::polarization::stokes_from_chi;
use mrad_core::quadrature::integrate_3d_plain;
use mrad_core::spontaneous::{SpectralPoint, SpectrumOptions};
use mrad_core::stimulated::{
    amplitude_point, AmplitudeEntry, AmplitudeSetup, PhotonGrid, SpinMeasuredKernel,
};
use mrad_core::vec3;
use mrad_core::Complex64;
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::{ScenarioConfig, ScenarioKind, StateSpec};
use crate::emit::{fmt_f64, write_atomic, CsvTable};

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub kind: ScenarioKind,
    pub files: Vec<PathBuf>,
    pub norm_factor: Option<f64>,
    pub t_f_range: Option<(f64, f64)>,
    pub window_suppression: Option<f64>,
    pub all_converged: bool,
    pub checks: Option<(usize, usize)>,
}

impl RunSummary {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario = {}", self.kind.as_str());
        if let Some(nf) = self.norm_factor {
            let _ = writeln!(s, "normalization_factor = {}", fmt_f64(nf));
        }
        if let Some((lo, hi)) = self.t_f_range {
            let _ = writeln!(s, "formation_time_min = {}", fmt_f64(lo));
            let _ = writeln!(s, "formation_time_max = {}", fmt_f64(hi));
        }
        if let Some(w) = self.window_suppression {
            let _ = writeln!(s, "window_suppression_min_modulus = {}", fmt_f64(w));
        }
        let _ = writeln!(s, "quadrature_converged = {}", self.all_converged);
        if let Some((pass, total)) = self.checks {
            let _ = writeln!(s, "checks_passed = {pass}/{total}");
        }
        for f in &self.files {
            if let Some(name) = f.file_name() {
                let _ = writeln!(s, "file = {}", name.to_string_lossy());
            }
        }
        s
    }
}

/// In-memory artifacts of one run, before writing.
pub struct RunArtifacts {
    /// `(file suffix, content)`; the first table is the primary output.
    pub tables: Vec<(String, String)>,
    pub summary: RunSummary,
}

pub fn run_to_artifacts(cfg: &ScenarioConfig, base_dir: &Path) -> Result<RunArtifacts> {
    cfg.validate()?;
    let echo = cfg.canonical_toml();
    match cfg.scenario.kind {
        ScenarioKind::OracleVerify => run_oracle_verify(cfg, &echo),
        ScenarioKind::ClassicalEdge => run_classical_edge(cfg, base_dir, &echo),
        ScenarioKind::StimulatedSpin => run_stimulated_spin(cfg, base_dir, &echo),
        ScenarioKind::StimulatedMomentum => run_stimulated_momentum(cfg, base_dir, &echo),
        ScenarioKind::StimulatedPosition => run_stimulated_position(cfg, base_dir, &echo),
        ScenarioKind::StimulatedEntangled => run_stimulated_entangled(cfg, base_dir, &echo),
        ScenarioKind::SpontaneousSpin => run_spontaneous_spin(cfg, base_dir, &echo),
        ScenarioKind::SpontaneousMomentum => run_spontaneous_momentum(cfg, base_dir, &echo),
        ScenarioKind::SpontaneousPosition => run_spontaneous_position(cfg, base_dir, &echo),
    }
}

/// Run and write the artifacts; returns the summary.
pub fn run(cfg: &ScenarioConfig, base_dir: &Path, out_override: Option<&Path>) -> Result<RunSummary> {
    let art = run_to_artifacts(cfg, base_dir)?;
    let out_dir = out_override
        .map(|p| p.to_path_buf())
        .unwrap_or_else(|| base_dir.join(&cfg.output.dir));
    let mut summary = art.summary;
    for (suffix, content) in &art.tables {
        let path = out_dir.join(format!("{}_{}", cfg.output.prefix, suffix));
        write_atomic(&path, content.as_bytes())?;
        summary.files.push(path);
    }
    let spath = out_dir.join(format!("{}_summary.txt", cfg.output.prefix));
    write_atomic(&spath, summary.render().as_bytes())?;
    summary.files.push(spath);
    Ok(summary)
}

fn state_beta(cfg: &ScenarioConfig) -> Option<[f64; 3]> {
    let p0 = match cfg.state.as_ref()? {
        StateSpec::Packet { packet } => packet.p0,
        StateSpec::Beam { members } => members.first()?.p0,
        StateSpec::Pair { packet1, .. } => packet1.p0,
        StateSpec::BeamArray { template, .. } => template.p0,
    };
    let e = mrad_core::kernels::energy(p0);
    Some([p0[0] / e, p0[1] / e, p0[2] / e])
}

fn formation_time_range(cfg: &ScenarioConfig, grid: &PhotonGrid) -> Option<(f64, f64)> {
    let beta = state_beta(cfg)?;
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for pt in &grid.points {
        if let Some(t) = formation_time(pt.k, beta) {
            lo = lo.min(t.exact);
            hi = hi.max(t.exact);
        }
    }
    (hi > 0.0).then_some((lo, hi))
}

fn amplitude_table(
    echo: &str,
    entries: &[AmplitudeEntry],
    norm_factor: f64,
    probe: Option<&crate::config::ProbeSpec>,
) -> String {
    let mut table = CsvTable::new(
        echo,
        &[
            "k0",
            "theta",
            "phi",
            "lambda",
            "re_amplitude",
            "im_amplitude",
            "normalization",
            "window_mod",
            "interference",
        ],
    );
    for e in entries {
        for lam in 0..2 {
            let interference = match probe {
                Some(p) if p.lambda == lam + 1 => {
                    let d = Complex64::new(p.d_re, p.d_im);
                    2.0 * (d.conj() * e.values[lam]).re
                }
                _ => 0.0,
            };
            table.push_row(vec![
                fmt_f64(e.point.k0),
                fmt_f64(e.point.theta),
                fmt_f64(e.point.phi),
                (lam + 1).to_string(),
                fmt_f64(e.values[lam].re),
                fmt_f64(e.values[lam].im),
                fmt_f64(norm_factor),
                fmt_f64(e.window_mod),
                fmt_f64(interference),
            ]);
        }
    }
    table.render()
}

fn amplitude_stokes_table(echo: &str, entries: &[AmplitudeEntry]) -> String {
    let mut table = CsvTable::new(echo, &["k0", "theta", "phi", "a", "b1", "b2", "b3"]);
    for e in entries {
        let (a, b) = match stokes_from_chi(e.values) {
            Ok(s) => (s.intensity, s.b),
            Err(_) => (0.0, [0.0; 3]),
        };
        table.push_row(vec![
            fmt_f64(e.point.k0),
            fmt_f64(e.point.theta),
            fmt_f64(e.point.phi),
            fmt_f64(a),
            fmt_f64(b[0]),
            fmt_f64(b[1]),
            fmt_f64(b[2]),
        ]);
    }
    table.render()
}

fn spectral_table(echo: &str, points: &[SpectralPoint]) -> String {
    let mut table = CsvTable::new(
        echo,
        &["k0", "theta", "phi", "a", "b1", "b2", "b3", "dp"],
    );
    for p in points {
        let (a, b) = p.stokes();
        table.push_row(vec![
            fmt_f64(p.point.k0),
            fmt_f64(p.point.theta),
            fmt_f64(p.point.phi),
            fmt_f64(a),
            fmt_f64(b[0]),
            fmt_f64(b[1]),
            fmt_f64(b[2]),
            fmt_f64(p.contracted(None)),
        ]);
    }
    table.render()
}

struct CommonSetup {
    ff: mrad_core::kernels::FormFactors,
    grid: mrad_core::quadrature::GridSpec,
    photon: PhotonGrid,
    window: Option<(f64, mrad_core::kernels::WindowProfile)>,
    rel_tol: f64,
}

fn common(cfg: &ScenarioConfig, base_dir: &Path) -> Result<CommonSetup> {
    let ff = cfg.form_factors.build(base_dir)?;
    let grid = cfg
        .state
        .as_ref()
        .context("state required")?
        .natural_grid(cfg.quadrature.order)?;
    let photon = cfg
        .photon_grid
        .as_ref()
        .context("photon grid required")?
        .build()?;
    let window = cfg.measurement.as_ref().and_then(|m| m.window());
    Ok(CommonSetup {
        ff,
        grid,
        photon,
        window,
        rel_tol: cfg.quadrature.rel_tol,
    })
}

fn min_window_mod(entries: &[AmplitudeEntry]) -> Option<f64> {
    entries
        .iter()
        .map(|e| e.window_mod)
        .min_by(|a, b| a.partial_cmp(b).unwrap())
}

/// Evaluate the generic kernel amplitude in parallel over the photon grid.
fn parallel_amplitude<K: SpinKernel + Sync>(
    kernel: &K,
    common: &CommonSetup,
    norm_factor: f64,
    branch_small_recoil: bool,
) -> Vec<AmplitudeEntry> {
    let current = SmallRecoilCurrent;
    common
        .photon
        .points
        .par_iter()
        .map(|pt| {
            let mut setup = AmplitudeSetup::transition(&common.ff, &current, common.grid);
            setup.norm_factor = norm_factor;
            setup.window = common.window;
            setup.rel_tol = common.rel_tol;
            setup.small_recoil_denominator = branch_small_recoil;
            amplitude_point(kernel, &setup, pt)
        })
        .collect()
}

fn run_classical_edge(cfg: &ScenarioConfig, base_dir: &Path, echo: &str) -> Result<RunArtifacts> {
    let c = common(cfg, base_dir)?;
    let density = cfg.state.as_ref().unwrap().density()?;
    let entries = parallel_amplitude(&density, &c, 1.0, false);
    let all_converged = entries.iter().all(|e| e.converged);
    Ok(RunArtifacts {
        tables: vec![
            ("amplitude.csv".into(), amplitude_table(echo, &entries, 1.0, cfg.probe.as_ref())),
            ("stokes.csv".into(), amplitude_stokes_table(echo, &entries)),
        ],
        summary: RunSummary {
            kind: cfg.scenario.kind,
            files: vec![],
            norm_factor: Some(1.0),
            t_f_range: formation_time_range(cfg, &c.photon),
            window_suppression: min_window_mod(&entries),
            all_converged,
            checks: None,
        },
    })
}

fn spin_norm_factor(
    density: &dyn SpinKernel,
    zeta: &ZetaField,
    grid: &mrad_core::quadrature::GridSpec,
) -> f64 {
    integrate_3d_plain(
        |p| {
            let d = spin_projector(zeta.at(p));
            spin_trace(spin_mul(d, density.kernel(p, p)))
        },
        grid,
    )
    .re
}

fn run_stimulated_spin(cfg: &ScenarioConfig, base_dir: &Path, echo: &str) -> Result<RunArtifacts> {
    let c = common(cfg, base_dir)?;
    let m = cfg.measurement.as_ref().unwrap();
    let zeta = m.zeta_field()?;
    let state = cfg.state.as_ref().unwrap();
    let (entries, norm_factor) = match state {
        StateSpec::Beam { .. } | StateSpec::BeamArray { .. } => {
            let beam = state.beam()?;
            let (kernel, nf) = beam.projected_sandwiched(&zeta, cfg.quadrature.order);
            if nf < 1e-12 {
                bail!("measured-state probability is zero");
            }
            (parallel_amplitude(&kernel, &c, nf, m.small_recoil), nf)
        }
        _ => {
            let density = state.density()?;
            let nf = spin_norm_factor(&density, &zeta, &c.grid);
            if nf < 1e-12 {
                bail!("measured-state probability is zero");
            }
            if m.small_recoil {
                let zv = m.zeta.unwrap();
                let current = SmallRecoilCurrent;
                let mut setup = AmplitudeSetup::transition(&c.ff, &current, c.grid);
                setup.window = c.window;
                setup.rel_tol = c.rel_tol;
                let amp = mrad_core::stimulated::amplitude_spin_measured_small_recoil(
                    &density, zv, nf, &setup, &c.photon,
                )
                .map_err(|e| anyhow::anyhow!("{e}"))?;
                (amp.entries, nf)
            } else {
                let kernel = SpinMeasuredKernel {
                    inner: &density,
                    zeta: &zeta,
                };
                (parallel_amplitude(&kernel, &c, nf, false), nf)
            }
        }
    };
    let all_converged = entries.iter().all(|e| e.converged);
    Ok(RunArtifacts {
        tables: vec![
            (
                "amplitude.csv".into(),
                amplitude_table(echo, &entries, norm_factor, cfg.probe.as_ref()),
            ),
            ("stokes.csv".into(), amplitude_stokes_table(echo, &entries)),
        ],
        summary: RunSummary {
            kind: cfg.scenario.kind,
            files: vec![],
            norm_factor: Some(norm_factor),
            t_f_range: formation_time_range(cfg, &c.photon),
            window_suppression: min_window_mod(&entries),
            all_converged,
            checks: None,
        },
    })
}

fn run_stimulated_momentum(
    cfg: &ScenarioConfig,
    base_dir: &Path,
    echo: &str,
) -> Result<RunArtifacts> {
    let c = common(cfg, base_dir)?;
    let m = cfg.measurement.as_ref().unwrap();
    let p_r = m.p_r.context("measurement.p_r required")?;
    let density = cfg.state.as_ref().unwrap().density()?;
    let current = SmallRecoilCurrent;
    let mut setup = AmplitudeSetup::transition(&c.ff, &current, c.grid);
    setup.window = c.window;
    setup.rel_tol = c.rel_tol;
    let amp = mrad_core::stimulated::amplitude_momentum_measured(&density, p_r, &setup, &c.photon)
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    Ok(RunArtifacts {
        tables: vec![
            (
                "amplitude.csv".into(),
                amplitude_table(echo, &amp.entries, amp.norm_factor, cfg.probe.as_ref()),
            ),
            ("stokes.csv".into(), amplitude_stokes_table(echo, &amp.entries)),
        ],
        summary: RunSummary {
            kind: cfg.scenario.kind,
            files: vec![],
            norm_factor: Some(amp.norm_factor),
            t_f_range: formation_time_range(cfg, &c.photon),
            window_suppression: None,
            all_converged: true,
            checks: None,
        },
    })
}

fn run_stimulated_position(
    cfg: &ScenarioConfig,
    base_dir: &Path,
    echo: &str,
) -> Result<RunArtifacts> {
    let c = common(cfg, base_dir)?;
    let m = cfg.measurement.as_ref().unwrap();
    let psi = match cfg.state.as_ref().unwrap() {
        StateSpec::Packet { packet } => packet.wave_packet()?,
        _ => bail!("position measurement needs a pure packet state"),
    };
    let phi = m
        .phi
        .as_ref()
        .context("measurement.phi required")?
        .wave_packet()?;
    let current = SmallRecoilCurrent;
    let mut setup = AmplitudeSetup::transition(&c.ff, &current, c.grid);
    setup.window = c.window;
    setup.rel_tol = c.rel_tol;
    let res = mrad_core::stimulated::amplitude_position_measured(&psi, &phi, &setup, &c.photon)
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let all_converged = res.total.entries.iter().all(|e| e.converged);
    Ok(RunArtifacts {
        tables: vec![
            (
                "amplitude.csv".into(),
                amplitude_table(echo, &res.total.entries, res.overlap.norm_sqr(), cfg.probe.as_ref()),
            ),
            (
                "post_term.csv".into(),
                amplitude_table(echo, &res.post_term.entries, 1.0, None),
            ),
            (
                "transition_term.csv".into(),
                amplitude_table(echo, &res.transition_term.entries, 1.0, None),
            ),
        ],
        summary: RunSummary {
            kind: cfg.scenario.kind,
            files: vec![],
            norm_factor: Some(res.overlap.norm_sqr()),
            t_f_range: formation_time_range(cfg, &c.photon),
            window_suppression: min_window_mod(&res.total.entries),
            all_converged,
            checks: None,
        },
    })
}

fn run_stimulated_entangled(
    cfg: &ScenarioConfig,
    base_dir: &Path,
    echo: &str,
) -> Result<RunArtifacts> {
    let c = common(cfg, base_dir)?;
    let m = cfg.measurement.as_ref().unwrap();
    let zv = m.zeta.context("measurement.zeta required")?;
    let pair = cfg.state.as_ref().unwrap().pair()?;
    let norm_factor = pair.norm_factor(zv);
    if norm_factor < 1e-12 {
        bail!("measured-state probability is zero");
    }
    let kernel = pair.amplitude_kernel(zv);
    let entries = parallel_amplitude(&kernel, &c, norm_factor, false);
    let all_converged = entries.iter().all(|e| e.converged);
    Ok(RunArtifacts {
        tables: vec![
            (
                "amplitude.csv".into(),
                amplitude_table(echo, &entries, norm_factor, cfg.probe.as_ref()),
            ),
            ("stokes.csv".into(), amplitude_stokes_table(echo, &entries)),
        ],
        summary: RunSummary {
            kind: cfg.scenario.kind,
            files: vec![],
            norm_factor: Some(norm_factor),
            t_f_range: formation_time_range(cfg, &c.photon),
            window_suppression: min_window_mod(&entries),
            all_converged,
            checks: None,
        },
    })
}

fn run_spontaneous_spin(cfg: &ScenarioConfig, base_dir: &Path, echo: &str) -> Result<RunArtifacts> {
    let c = common(cfg, base_dir)?;
    let m = cfg.measurement.as_ref().unwrap();
    let zeta = m.zeta_field()?;
    let density = cfg.state.as_ref().unwrap().density()?;
    let current = SmallRecoilCurrent;
    let opts = SpectrumOptions {
        window: c.window,
        rel_tol: c.rel_tol,
    };
    let points: Vec<SpectralPoint> = c
        .photon
        .points
        .par_iter()
        .map(|pt| {
            let single = PhotonGrid { points: vec![*pt] };
            mrad_core::spontaneous::spectrum_spin_measured(
                &density, &zeta, &c.ff, &current, &c.grid, &single, &opts,
            )
            .points[0]
        })
        .collect();
    let nf = spin_norm_factor(&density, &zeta, &c.grid);
    Ok(RunArtifacts {
        tables: vec![
            ("spectrum.csv".into(), spectral_table(echo, &points)),
            (
                "matrices.json".into(),
                crate::emit::spectral_matrices_json(&points),
            ),
        ],
        summary: RunSummary {
            kind: cfg.scenario.kind,
            files: vec![],
            norm_factor: Some(nf),
            t_f_range: formation_time_range(cfg, &c.photon),
            window_suppression: None,
            all_converged: true,
            checks: None,
        },
    })
}

fn run_spontaneous_momentum(
    cfg: &ScenarioConfig,
    base_dir: &Path,
    echo: &str,
) -> Result<RunArtifacts> {
    let c = common(cfg, base_dir)?;
    let m = cfg.measurement.as_ref().unwrap();
    let p_r = m.p_r.context("measurement.p_r required")?;
    let chi = match &m.phi {
        Some(spec) => spec.spin.spinor()?,
        None => [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
    };
    let density = cfg.state.as_ref().unwrap().density()?;
    let current = SmallRecoilCurrent;
    let pts = mrad_core::spontaneous::spectrum_momentum_measured(
        &density, p_r, chi, &c.ff, &current, &c.photon, c.window,
    );
    let mut table = CsvTable::new(
        echo,
        &[
            "k0", "theta", "phi", "a", "b1", "b2", "b3", "dp", "electron_density",
        ],
    );
    let mut electron_density = 0.0;
    let spectral: Vec<SpectralPoint> = pts
        .iter()
        .map(|p| {
            electron_density = p.electron_density;
            SpectralPoint {
                point: p.point,
                matrix: p.matrix,
            }
        })
        .collect();
    for (sp, p) in spectral.iter().zip(pts.iter()) {
        let (a, b) = sp.stokes();
        table.push_row(vec![
            fmt_f64(sp.point.k0),
            fmt_f64(sp.point.theta),
            fmt_f64(sp.point.phi),
            fmt_f64(a),
            fmt_f64(b[0]),
            fmt_f64(b[1]),
            fmt_f64(b[2]),
            fmt_f64(sp.contracted(None)),
            fmt_f64(p.electron_density),
        ]);
    }
    Ok(RunArtifacts {
        tables: vec![
            ("spectrum.csv".into(), table.render()),
            (
                "matrices.json".into(),
                crate::emit::spectral_matrices_json(&spectral),
            ),
        ],
        summary: RunSummary {
            kind: cfg.scenario.kind,
            files: vec![],
            norm_factor: Some(electron_density),
            t_f_range: formation_time_range(cfg, &c.photon),
            window_suppression: None,
            all_converged: true,
            checks: None,
        },
    })
}

fn run_spontaneous_position(
    cfg: &ScenarioConfig,
    base_dir: &Path,
    echo: &str,
) -> Result<RunArtifacts> {
    let c = common(cfg, base_dir)?;
    let m = cfg.measurement.as_ref().unwrap();
    let psi = match cfg.state.as_ref().unwrap() {
        StateSpec::Packet { packet } => packet.wave_packet()?,
        _ => bail!("position measurement needs a pure packet state"),
    };
    let phi = m
        .phi
        .as_ref()
        .context("measurement.phi required")?
        .wave_packet()?;
    let current = SmallRecoilCurrent;
    let opts = SpectrumOptions {
        window: c.window,
        rel_tol: c.rel_tol,
    };
    let pts = mrad_core::spontaneous::probability_position_measured(
        &psi, &phi, &c.ff, &current, &c.grid, &c.photon, &opts,
    )
    .map_err(|e| anyhow::anyhow!("{e}"))?;
    let mut table = CsvTable::new(
        echo,
        &[
            "k0",
            "theta",
            "phi",
            "incoherent",
            "cross",
            "transition",
            "total",
        ],
    );
    let mut nf = 0.0;
    for p in &pts {
        nf = p.overlap2;
        let tr = |msum: &mrad_core::packets::SpinMat| (msum[0][0] + msum[1][1]).re;
        table.push_row(vec![
            fmt_f64(p.point.k0),
            fmt_f64(p.point.theta),
            fmt_f64(p.point.phi),
            fmt_f64(p.overlap2 * tr(&p.incoherent)),
            fmt_f64(p.overlap2 * tr(&p.cross)),
            fmt_f64(p.overlap2 * tr(&p.transition)),
            fmt_f64(p.total(None)),
        ]);
    }
    Ok(RunArtifacts {
        tables: vec![("probability.csv".into(), table.render())],
        summary: RunSummary {
            kind: cfg.scenario.kind,
            files: vec![],
            norm_factor: Some(nf),
            t_f_range: formation_time_range(cfg, &c.photon),
            window_suppression: None,
            all_converged: true,
            checks: None,
        },
    })
}

fn run_oracle_verify(cfg: &ScenarioConfig, echo: &str) -> Result<RunArtifacts> {
    let report = mrad_core::verify::run_all(cfg.scenario.seed);
    let mut table = CsvTable::new(echo, &["check", "max_err", "tolerance", "cases", "pass"]);
    let mut passed = 0usize;
    for c in &report.checks {
        if c.pass() {
            passed += 1;
        }
        table.push_row(vec![
            c.name.clone(),
            format!("{:.3e}", c.max_err),
            format!("{:.1e}", c.tolerance),
            c.cases.to_string(),
            c.pass().to_string(),
        ]);
    }
    let total = report.checks.len();
    Ok(RunArtifacts {
        tables: vec![("verify.csv".into(), table.render())],
        summary: RunSummary {
            kind: cfg.scenario.kind,
            files: vec![],
            norm_factor: None,
            t_f_range: None,
            window_suppression: None,
            all_converged: true,
            checks: Some((passed, total)),
        },
    })
}

/// Sweep one scalar config parameter: reruns the scenario per value and
/// stacks the primary table with a leading `sweep_value` column.
pub fn sweep(
    cfg_text: &str,
    base_dir: &Path,
    param: &str,
    values: &[f64],
    out_override: Option<&Path>,
) -> Result<Option<PathBuf>> {
    if values.is_empty() {
        eprintln!("warning: empty sweep value list; nothing to do");
        return Ok(None);
    }
    let mut stacked: Option<(String, Vec<String>)> = None; // (header, rows)
    let mut echo_lines = String::new();
    let mut cfg_for_output: Option<ScenarioConfig> = None;
    for &v in values {
        let mut doc: toml::Value = toml::from_str(cfg_text).context("parsing config")?;
        set_path(&mut doc, param, v)?;
        let cfg: ScenarioConfig = doc
            .try_into()
            .with_context(|| format!("config invalid after setting {param} = {v}"))?;
        cfg.validate()?;
        let art = run_to_artifacts(&cfg, base_dir)?;
        let (_name, content) = art
            .tables
            .first()
            .context("scenario produced no tables")?;
        let mut lines = content.lines();
        let mut header = String::new();
        let mut rows: Vec<String> = Vec::new();
        let mut echo = String::new();
        for line in lines.by_ref() {
            if let Some(rest) = line.strip_prefix("# ") {
                echo.push_str(rest);
                echo.push('\n');
                continue;
            }
            header = line.to_string();
            break;
        }
        for line in lines {
            rows.push(format!("{},{}", fmt_f64(v), line));
        }
        match &mut stacked {
            None => {
                echo_lines = echo;
                cfg_for_output = Some(cfg);
                stacked = Some((format!("sweep_value,{header}"), rows));
            }
            Some((h, all_rows)) => {
                debug_assert_eq!(*h, format!("sweep_value,{header}"));
                all_rows.extend(rows);
            }
        }
    }
    let (header, rows) = stacked.unwrap();
    let cfg = cfg_for_output.unwrap();
    let out_dir = out_override
        .map(|p| p.to_path_buf())
        .unwrap_or_else(|| base_dir.join(&cfg.output.dir));
    let path = out_dir.join(format!(
        "{}_sweep_{}.csv",
        cfg.output.prefix,
        param.replace('.', "_")
    ));
    let mut content = String::new();
    for line in echo_lines.lines() {
        let _ = writeln!(content, "# {line}");
    }
    let _ = writeln!(content, "# sweep_param = {param}");
    let _ = writeln!(content, "{header}");
    for r in rows {
        let _ = writeln!(content, "{r}");
    }
    write_atomic(&path, content.as_bytes())?;
    Ok(Some(path))
}

fn set_path(doc: &mut toml::Value, path: &str, value: f64) -> Result<()> {
    let segments: Vec<&str> = path.split('.').collect();
    let mut cur = doc;
    for (i, seg) in segments.iter().enumerate() {
        if i + 1 == segments.len() {
            let table = cur
                .as_table_mut()
                .with_context(|| format!("{path}: not a table at '{seg}'"))?;
            match table.get(*seg) {
                Some(toml::Value::Integer(_)) => {
                    table.insert(seg.to_string(), toml::Value::Integer(value.round() as i64));
                }
                Some(toml::Value::Float(_)) | None => {
                    table.insert(seg.to_string(), toml::Value::Float(value));
                }
                Some(_) => bail!("{path} does not address a scalar"),
            }
            return Ok(());
        }
        cur = cur
            .as_table_mut()
            .with_context(|| format!("{path}: not a table at '{seg}'"))?
            .get_mut(*seg)
            .with_context(|| format!("{path}: missing section '{seg}'"))?;
    }
    unreachable!()
}

/// Formation-time helper used by the summary and by tests: the exact value
/// at the grid's central state velocity.
pub fn formation_time_at(k: mrad_core::vec3::Vec3, beta: mrad_core::vec3::Vec3) -> Option<f64> {
    formation_time(k, beta).map(|t| t.exact)
}

/// `n·β` guard helper for tests.
pub fn n_dot_beta(k: mrad_core::vec3::Vec3, beta: mrad_core::vec3::Vec3) -> f64 {
    vec3::dot(vec3::unit(k), beta)
}
