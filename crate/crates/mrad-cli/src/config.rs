//! Scenario configuration: a single TOML file describing the particle
//! state, the measurement, the photon grid, and the outputs.

use anyhow::{bail, Context, Result};
use mrad_core::beams::{EntangledPair, UncorrelatedBeam, ZetaField};
use mrad_core::kernels::{BasisConvention, FormFactors, WindowProfile};
use mrad_core::packets::{
    GaussianPacket, OneParticleDensity, ScalarGaussian, SpinState, WavePacket,
};
use mrad_core::quadrature::GridSpec;
use mrad_core::Complex64;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub state: Option<StateSpec>,
    #[serde(default)]
    pub measurement: Option<MeasurementSpec>,
    #[serde(default)]
    pub form_factors: FormFactorSpec,
    #[serde(default)]
    pub photon_grid: Option<PhotonGridSpec>,
    #[serde(default)]
    pub probe: Option<ProbeSpec>,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub kind: ScenarioKind,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    StimulatedSpin,
    StimulatedMomentum,
    StimulatedPosition,
    StimulatedEntangled,
    SpontaneousSpin,
    SpontaneousMomentum,
    SpontaneousPosition,
    ClassicalEdge,
    OracleVerify,
}

impl ScenarioKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioKind::StimulatedSpin => "stimulated-spin",
            ScenarioKind::StimulatedMomentum => "stimulated-momentum",
            ScenarioKind::StimulatedPosition => "stimulated-position",
            ScenarioKind::StimulatedEntangled => "stimulated-entangled",
            ScenarioKind::SpontaneousSpin => "spontaneous-spin",
            ScenarioKind::SpontaneousMomentum => "spontaneous-momentum",
            ScenarioKind::SpontaneousPosition => "spontaneous-position",
            ScenarioKind::ClassicalEdge => "classical-edge",
            ScenarioKind::OracleVerify => "oracle-verify",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PacketSpec {
    pub p0: [f64; 3],
    #[serde(default)]
    pub x0: [f64; 3],
    pub sigma: f64,
    #[serde(default)]
    pub spin: SpinSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpinSpec {
    Polarized { xi: [f64; 3] },
    Pure { chi: [[f64; 2]; 2] },
}

impl Default for SpinSpec {
    fn default() -> Self {
        SpinSpec::Polarized { xi: [0.0; 3] }
    }
}

impl SpinSpec {
    pub fn build(&self) -> Result<SpinState> {
        match self {
            SpinSpec::Polarized { xi } => {
                let n = (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt();
                if n > 1.0 + 1e-10 {
                    bail!("|ξ| = {n} exceeds 1");
                }
                Ok(SpinState::Polarized(*xi))
            }
            SpinSpec::Pure { chi } => Ok(SpinState::Pure([
                Complex64::new(chi[0][0], chi[0][1]),
                Complex64::new(chi[1][0], chi[1][1]),
            ])),
        }
    }

    pub fn spinor(&self) -> Result<[Complex64; 2]> {
        match self {
            SpinSpec::Pure { chi } => Ok([
                Complex64::new(chi[0][0], chi[0][1]),
                Complex64::new(chi[1][0], chi[1][1]),
            ]),
            SpinSpec::Polarized { .. } => bail!("a pure spinor is required here"),
        }
    }
}

impl PacketSpec {
    pub fn build(&self) -> Result<GaussianPacket> {
        if self.sigma <= 0.0 {
            bail!("packet width must be positive");
        }
        Ok(GaussianPacket::new(
            self.p0,
            self.x0,
            self.sigma,
            self.spin.build()?,
        ))
    }

    pub fn scalar(&self) -> Result<ScalarGaussian> {
        if self.sigma <= 0.0 {
            bail!("packet width must be positive");
        }
        Ok(ScalarGaussian::new(self.p0, self.x0, self.sigma))
    }

    pub fn wave_packet(&self) -> Result<WavePacket> {
        Ok(WavePacket::new(self.scalar()?, self.spin.spinor()?))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StateSpec {
    Packet {
        #[serde(flatten)]
        packet: PacketSpec,
    },
    Beam {
        members: Vec<PacketSpec>,
    },
    Pair {
        packet1: PacketSpec,
        packet2: PacketSpec,
        chi: [[f64; 2]; 2],
    },
    /// Beam of `n_members` copies of a template packet displaced along +z
    /// in momentum by `spacing` each (mutually orthogonal for
    /// `spacing ≫ σ`).
    BeamArray {
        template: PacketSpec,
        n_members: usize,
        spacing: f64,
    },
}

impl StateSpec {
    pub fn density(&self) -> Result<OneParticleDensity> {
        match self {
            StateSpec::Packet { packet } => Ok(OneParticleDensity::Packet(packet.build()?)),
            StateSpec::Beam { .. } | StateSpec::BeamArray { .. } => {
                bail!("beam states are handled by the beam path")
            }
            StateSpec::Pair { .. } => bail!("pair states are handled by the pair path"),
        }
    }

    pub fn beam(&self) -> Result<UncorrelatedBeam> {
        match self {
            StateSpec::Beam { members } => {
                let packets: Result<Vec<GaussianPacket>> =
                    members.iter().map(|m| m.build()).collect();
                UncorrelatedBeam::new(packets?).map_err(|e| anyhow::anyhow!("{e}"))
            }
            StateSpec::BeamArray {
                template,
                n_members,
                spacing,
            } => {
                if *n_members == 0 {
                    bail!("beam needs at least one member");
                }
                let packets: Result<Vec<GaussianPacket>> = (0..*n_members)
                    .map(|i| {
                        let mut spec = template.clone();
                        spec.p0[2] += spacing * i as f64;
                        spec.build()
                    })
                    .collect();
                UncorrelatedBeam::new(packets?).map_err(|e| anyhow::anyhow!("{e}"))
            }
            _ => bail!("state is not a beam"),
        }
    }

    pub fn pair(&self) -> Result<EntangledPair> {
        match self {
            StateSpec::Pair {
                packet1,
                packet2,
                chi,
            } => EntangledPair::new(
                packet1.scalar()?,
                packet1.spin.spinor()?,
                packet2.scalar()?,
                packet2.spin.spinor()?,
                [
                    Complex64::new(chi[0][0], chi[0][1]),
                    Complex64::new(chi[1][0], chi[1][1]),
                ],
            )
            .map_err(|e| anyhow::anyhow!("{e}")),
            _ => bail!("state is not an entangled pair"),
        }
    }

    /// Hermite grid hugging the state's momentum support.
    pub fn natural_grid(&self, order: usize) -> Result<GridSpec> {
        match self {
            StateSpec::Packet { packet } => {
                Ok(OneParticleDensity::Packet(packet.build()?).natural_grid(order))
            }
            StateSpec::Beam { members } => {
                let packets: Result<Vec<(f64, GaussianPacket)>> = members
                    .iter()
                    .map(|m| Ok((1.0 / members.len() as f64, m.build()?)))
                    .collect();
                Ok(OneParticleDensity::Mixture(packets?).natural_grid(order))
            }
            StateSpec::Pair { packet1, .. } => {
                Ok(OneParticleDensity::Packet(packet1.build()?).natural_grid(order))
            }
            StateSpec::BeamArray {
                template,
                n_members,
                spacing,
            } => {
                let packets: Result<Vec<(f64, GaussianPacket)>> = (0..(*n_members).max(1))
                    .map(|i| {
                        let mut spec = template.clone();
                        spec.p0[2] += spacing * i as f64;
                        Ok((1.0 / (*n_members).max(1) as f64, spec.build()?))
                    })
                    .collect();
                Ok(OneParticleDensity::Mixture(packets?).natural_grid(order))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSpec {
    /// Measured spin direction (unit vector) for spin scenarios.
    #[serde(default)]
    pub zeta: Option<[f64; 3]>,
    /// Measured momentum for momentum scenarios.
    #[serde(default)]
    pub p_r: Option<[f64; 3]>,
    /// Recorded state for position/state measurement.
    #[serde(default)]
    pub phi: Option<PacketSpec>,
    /// Measurement duration (units 1/m); 0 = instantaneous.
    #[serde(default)]
    pub tau: f64,
    #[serde(default)]
    pub window: WindowSpec,
    /// Use the small-recoil magnetic-bracket amplitude for spin scenarios.
    #[serde(default)]
    pub small_recoil: bool,
}

impl MeasurementSpec {
    pub fn zeta_field(&self) -> Result<ZetaField> {
        let z = self.zeta.context("measurement.zeta is required")?;
        let n = (z[0] * z[0] + z[1] * z[1] + z[2] * z[2]).sqrt();
        if (n - 1.0).abs() > 1e-10 {
            bail!("measurement.zeta must be a unit vector (|ζ| = {n})");
        }
        Ok(ZetaField::constant(z))
    }

    pub fn window(&self) -> Option<(f64, WindowProfile)> {
        if self.tau > 0.0 {
            Some((self.tau, self.window.build()))
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "profile", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WindowSpec {
    /// Plain smooth bump `exp(-s/(u(1-u)))`.
    Bump { steepness: f64 },
    /// Kaiser-cored bump (default; far stronger sideband suppression).
    KaiserBump { beta: f64, steepness: f64 },
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec::KaiserBump {
            beta: 24.0,
            steepness: 0.02,
        }
    }
}

impl WindowSpec {
    pub fn build(&self) -> WindowProfile {
        match *self {
            WindowSpec::Bump { steepness } => WindowProfile::Bump { steepness },
            WindowSpec::KaiserBump { beta, steepness } => {
                WindowProfile::KaiserBump { beta, steepness }
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FormFactorSpec {
    Electron,
    Constant { fe: f64, fm: f64 },
    Table { path: String },
}

impl Default for FormFactorSpec {
    fn default() -> Self {
        FormFactorSpec::Electron
    }
}

impl FormFactorSpec {
    pub fn build(&self, base_dir: &Path) -> Result<FormFactors> {
        match self {
            FormFactorSpec::Electron => Ok(FormFactors::electron()),
            FormFactorSpec::Constant { fe, fm } => Ok(FormFactors::constant(*fe, *fm)),
            FormFactorSpec::Table { path } => {
                let full = base_dir.join(path);
                crate::emit::load_form_factors_csv(&full)
                    .with_context(|| format!("loading form factors from {}", full.display()))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PhotonGridSpec {
    pub k0_min: f64,
    pub k0_max: f64,
    pub n_energy: usize,
    #[serde(default)]
    pub theta_min: f64,
    #[serde(default = "default_theta_max")]
    pub theta_max: f64,
    pub n_theta: usize,
    #[serde(default = "default_one")]
    pub n_phi: usize,
    #[serde(default)]
    pub basis: BasisSpec,
}

fn default_theta_max() -> f64 {
    core::f64::consts::PI
}

fn default_one() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "convention", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BasisSpec {
    /// Spherical triad about a fixed axis (the measured direction ζ by
    /// convention).
    SphericalAboutAxis { axis: [f64; 3] },
    /// `f₁` aligned with β⊥ of the supplied velocity.
    BetaPerp { beta: [f64; 3] },
}

impl Default for BasisSpec {
    fn default() -> Self {
        BasisSpec::SphericalAboutAxis {
            axis: [0.0, 0.0, 1.0],
        }
    }
}

impl BasisSpec {
    pub fn build(&self) -> BasisConvention {
        match *self {
            BasisSpec::SphericalAboutAxis { axis } => BasisConvention::SphericalAboutAxis { axis },
            BasisSpec::BetaPerp { beta } => BasisConvention::BetaPerpAligned { beta },
        }
    }
}

impl PhotonGridSpec {
    pub fn build(&self) -> Result<mrad_core::stimulated::PhotonGrid> {
        if self.n_energy == 0 || self.n_theta == 0 || self.n_phi == 0 {
            bail!("photon grid must have at least one point per axis");
        }
        if !(self.k0_min > 0.0 && self.k0_max >= self.k0_min) {
            bail!("photon energies must satisfy 0 < k0_min <= k0_max");
        }
        mrad_core::stimulated::PhotonGrid::build(
            self.k0_min,
            self.k0_max,
            self.n_energy,
            self.theta_min,
            self.theta_max,
            self.n_theta,
            self.n_phi,
            self.basis.build(),
        )
        .map_err(|e| anyhow::anyhow!("{e}"))
    }
}

/// Coherent probe amplitude applied per grid point (interference column of
/// stimulated outputs).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    pub d_re: f64,
    pub d_im: f64,
    /// Which linear polarization the probe occupies (1 or 2).
    #[serde(default = "default_one")]
    pub lambda: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    /// Per-axis Gauss-Hermite order for the state grid.
    pub order: usize,
    /// Relative tolerance for the order-raising convergence check.
    pub rel_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            order: 16,
            rel_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: String,
    pub prefix: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            prefix: "scenario".into(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_str_validated(&text)
    }

    pub fn from_str_validated(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).context("parsing scenario config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        use ScenarioKind::*;
        let kind = self.scenario.kind;
        if self.quadrature.order < 8 {
            bail!("quadrature.order must be at least 8 (Hermite nodes must reach ±5σ)");
        }
        if kind != OracleVerify {
            if self.state.is_none() {
                bail!("{}: [state] is required", kind.as_str());
            }
            if self.photon_grid.is_none() {
                bail!("{}: [photon_grid] is required", kind.as_str());
            }
            self.photon_grid.as_ref().unwrap().build()?;
        }
        match kind {
            StimulatedSpin | SpontaneousSpin | StimulatedEntangled => {
                let m = self
                    .measurement
                    .as_ref()
                    .context("spin scenarios need [measurement]")?;
                m.zeta_field()?;
            }
            StimulatedMomentum | SpontaneousMomentum => {
                let m = self
                    .measurement
                    .as_ref()
                    .context("momentum scenarios need [measurement]")?;
                if m.p_r.is_none() {
                    bail!("momentum scenarios need measurement.p_r");
                }
            }
            StimulatedPosition | SpontaneousPosition => {
                let m = self
                    .measurement
                    .as_ref()
                    .context("position scenarios need [measurement]")?;
                if m.phi.is_none() {
                    bail!("position scenarios need measurement.phi");
                }
            }
            ClassicalEdge | OracleVerify => {}
        }
        if let Some(StateSpec::Pair { .. }) = &self.state {
            if kind != StimulatedEntangled {
                bail!("pair states are only valid for stimulated-entangled");
            }
        }
        Ok(())
    }

    /// Canonical TOML text of this config (used for the output echo).
    pub fn canonical_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
