//! JSON run configuration.

use std::f64::consts::PI;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use breather_core::breather::{SeriesOptions, SolverKind};
use breather_core::pencil::{newton, DrudeDispersion, LorentzDispersion, PencilContext, Tolerances};
use breather_core::resolvent::StaggeredGrid;
use breather_core::susceptibility::{LinearSusceptibility, MaterialInterface, NonlinearSusceptibility};
use breather_core::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Lorentz,
    Drude,
    Constant,
}

/// One half-space. `T` or `j` switches the memory cut on; `j` gives
/// `T = jπ/c*` and is only meaningful for the Lorentz model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub model: Model,
    #[serde(rename = "c_L", alias = "c_D", default, skip_serializing_if = "Option::is_none")]
    pub c_l: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_star: Option<f64>,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

/// Scalar (diagonal in-plane) or full coupling tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Tensor3 {
    Diagonal(f64),
    Full(Box<[[[f64; 3]; 3]; 3]>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Tensor4 {
    Diagonal(f64),
    Full(Box<[[[[f64; 3]; 3]; 3]; 3]>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearConfig {
    pub c2: Tensor3,
    pub c3: Tensor4,
    pub gamma_tilde: f64,
    pub omega_star_tilde: f64,
    /// `null` keeps the full oscillator memory.
    #[serde(rename = "T_N")]
    pub t_n: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub d: f64,
    pub n: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { d: 40.0, n: 16000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    /// Truncation indices `j` with `T = jπ/c*`.
    pub j_schedule: Vec<u32>,
    pub contour_a: f64,
    pub delta: f64,
    pub winding: bool,
    pub delta0: bool,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig {
            j_schedule: vec![101, 161, 251, 401, 631, 1001],
            contour_a: 20.0,
            delta: 0.05,
            winding: true,
            delta0: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergeConfig {
    pub n_list: Vec<usize>,
    pub reference_n: usize,
    /// Order of the partial sum compared across grids.
    pub partial_sum: u32,
}

impl Default for ConvergeConfig {
    fn default() -> Self {
        ConvergeConfig { n_list: vec![2000, 4000, 8000], reference_n: 32000, partial_sum: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DrudeConfig {
    #[serde(rename = "c_D", alias = "c_L")]
    pub c_d: f64,
    pub gamma: f64,
    #[serde(rename = "T_schedule")]
    pub t_schedule: Vec<f64>,
}

impl Default for DrudeConfig {
    fn default() -> Self {
        DrudeConfig { c_d: 20.0, gamma: 0.5, t_schedule: vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0] }
    }
}

fn one() -> f64 {
    1.0
}

fn default_eps() -> f64 {
    0.5
}

fn default_nu_max() -> u32 {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Free text carried through to manifests.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
    #[serde(default = "one")]
    pub eps0: f64,
    #[serde(default = "one")]
    pub mu0: f64,
    pub k: f64,
    pub minus: MaterialConfig,
    pub plus: MaterialConfig,
    /// Quadratic and cubic response of the minus side.
    #[serde(default)]
    pub nonlinear: Option<NonlinearConfig>,
    #[serde(default)]
    pub nonlinear_plus: Option<NonlinearConfig>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_nu_max")]
    pub nu_max: u32,
    #[serde(default = "default_solver")]
    pub solver: SolverKind,
    /// Untruncated root used as Newton seed; defaults to the least damped
    /// root with positive real part.
    #[serde(default)]
    pub omega_seed: Option<[f64; 2]>,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub converge: ConvergeConfig,
    #[serde(default)]
    pub drude: DrudeConfig,
}

fn default_solver() -> SolverKind {
    SolverKind::Fd
}

fn need(v: Option<f64>, side: &str, name: &str) -> Result<f64> {
    v.ok_or_else(|| anyhow!("{side}: `{name}` is required for this model"))
}

impl MaterialConfig {
    pub fn c_star(&self) -> Option<f64> {
        match (self.model, self.gamma, self.omega_star) {
            (Model::Lorentz, Some(g), Some(w)) if w > g => Some((w * w - g * g).sqrt()),
            _ => None,
        }
    }

    /// Memory cut, resolving `j` against `c*`.
    pub fn truncation(&self, side: &str) -> Result<Option<f64>> {
        match (self.t, self.j) {
            (Some(_), Some(_)) => bail!("{side}: give either `T` or `j`, not both"),
            (Some(t), None) => Ok(Some(t)),
            (None, Some(j)) => {
                let cs = self
                    .c_star()
                    .ok_or_else(|| anyhow!("{side}: `j` needs a Lorentz model with omega_star > gamma"))?;
                Ok(Some(j as f64 * PI / cs))
            }
            (None, None) => Ok(None),
        }
    }

    pub fn susceptibility(&self, side: &str) -> Result<LinearSusceptibility> {
        let t = self.truncation(side)?;
        let m = match self.model {
            Model::Constant => LinearSusceptibility::Constant { alpha: need(self.alpha, side, "alpha")? },
            Model::Lorentz => {
                let (c_l, gamma, omega_star) = (
                    need(self.c_l, side, "c_L")?,
                    need(self.gamma, side, "gamma")?,
                    need(self.omega_star, side, "omega_star")?,
                );
                match t {
                    Some(t_cut) => LinearSusceptibility::TruncatedLorentz { c_l, gamma, omega_star, t_cut },
                    None => LinearSusceptibility::UntruncatedLorentz { c_l, gamma, omega_star },
                }
            }
            Model::Drude => {
                let (c_d, gamma) = (need(self.c_l, side, "c_D")?, need(self.gamma, side, "gamma")?);
                match t {
                    Some(t_cut) => LinearSusceptibility::TruncatedDrude { c_d, gamma, t_cut },
                    None => LinearSusceptibility::UntruncatedDrude { c_d, gamma },
                }
            }
        };
        m.validate().map_err(|e| anyhow!("{side}: {e}"))?;
        Ok(m)
    }
}

impl NonlinearConfig {
    pub fn susceptibility(&self) -> NonlinearSusceptibility {
        let mut nl = NonlinearSusceptibility::diagonal(0.0, 0.0, self.gamma_tilde, self.omega_star_tilde, self.t_n);
        match &self.c2 {
            Tensor3::Diagonal(v) => nl.c2 = NonlinearSusceptibility::diagonal(*v, 0.0, 1.0, 2.0, None).c2,
            Tensor3::Full(t) => nl.c2 = **t,
        }
        match &self.c3 {
            Tensor4::Diagonal(v) => nl.c3 = NonlinearSusceptibility::diagonal(0.0, *v, 1.0, 2.0, None).c3,
            Tensor4::Full(t) => nl.c3 = **t,
        }
        nl
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| anyhow!("invalid config: {e}"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        self.interface()?;
        StaggeredGrid::new(self.grid.d, self.grid.n).map_err(|e| anyhow!("grid: {e}"))?;
        if self.nu_max == 0 {
            bail!("nu_max must be at least 1");
        }
        if !(self.k.is_finite() && self.k != 0.0) {
            bail!("k must be finite and nonzero");
        }
        if let Some(nl) = &self.nonlinear {
            if let (Some(t_n), Some(t)) = (nl.t_n, self.minus.truncation("minus")?) {
                if t_n >= t / (2.0 * 3f64.sqrt()) {
                    bail!("nonlinear: T_N = {t_n} must stay below T/(2 sqrt 3) = {}", t / (2.0 * 3f64.sqrt()));
                }
            }
        }
        Ok(())
    }

    pub fn interface(&self) -> Result<MaterialInterface> {
        let mi = MaterialInterface {
            eps0: self.eps0,
            mu0: self.mu0,
            minus: self.minus.susceptibility("minus")?,
            plus: self.plus.susceptibility("plus")?,
            nl_minus: self.nonlinear.as_ref().map(|n| n.susceptibility()),
            nl_plus: self.nonlinear_plus.as_ref().map(|n| n.susceptibility()),
        };
        mi.validate().map_err(|e| anyhow!("{e}"))?;
        Ok(mi)
    }

    pub fn truncation(&self) -> Result<Option<f64>> {
        self.minus.truncation("minus")
    }

    pub fn lorentz(&self) -> Result<LorentzDispersion> {
        Ok(LorentzDispersion::from_interface(&self.interface()?, self.k)?)
    }

    /// Drude half-space for the truncation demo: the minus side when it is a
    /// Drude model, the `drude` section otherwise.
    pub fn drude_dispersion(&self) -> Result<DrudeDispersion> {
        let mut mi = self.interface()?;
        if self.minus.model != Model::Drude {
            mi.minus = LinearSusceptibility::UntruncatedDrude { c_d: self.drude.c_d, gamma: self.drude.gamma };
            mi.minus.validate()?;
        }
        Ok(DrudeDispersion::from_interface(&mi, self.k)?)
    }

    /// Untruncated root at `n = 1` used as seed.
    pub fn omega_inf(&self) -> Result<C64> {
        if let Some([re, im]) = self.omega_seed {
            return Ok(C64::new(re, im));
        }
        let d = self.lorentz()?;
        d.untruncated_eigenvalues(1)?
            .into_iter()
            .filter(|r| r.re > 0.0 && r.im < 0.0 && r.im > -d.gamma)
            .max_by(|a, b| a.im.partial_cmp(&b.im).unwrap())
            .ok_or_else(|| anyhow!("no untruncated eigenvalue in the strip -gamma < Im < 0"))
    }

    /// Eigenvalue of the configured (possibly truncated) model.
    pub fn omega0(&self) -> Result<C64> {
        let d = self.lorentz()?;
        let seed = self.omega_inf()?;
        Ok(match self.truncation()? {
            Some(t) => newton(|w| d.g(1, w, t), seed, 1e-15, 100)?,
            None => newton(|w| d.g_inf(1, w), seed, 1e-15, 100)?,
        })
    }

    pub fn context(&self) -> Result<PencilContext> {
        Ok(PencilContext::new(self.interface()?, self.k, self.omega0()?)?)
    }

    pub fn series_options(&self) -> Result<SeriesOptions> {
        Ok(SeriesOptions {
            grid: StaggeredGrid::new(self.grid.d, self.grid.n)?,
            eps: self.eps,
            nu_max: self.nu_max,
            solver: self.solver,
            tol: Tolerances::default(),
        })
    }
}
