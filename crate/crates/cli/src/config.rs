//! Run configuration: one TOML document with sections `operators`, `state`,
//! `grid`, `regularizer` and `sweep`. Command-line flags override fields.
//!
//! ```toml
//! [operators]
//! family = "NOISY_PROJ"
//! params = { signs = ["x+", "y+", "z+"], lambda = 0.25 }
//!
//! [state]
//! bloch = [0.0, 0.0, 0.0]      # default: maximally mixed
//!
//! [grid]
//! frame = "natural"            # or "plain" (spectral box); default natural
//! count = 129                  # per axis; default 257 / 129 / 49 by n
//!
//! [regularizer]
//! epsilon = 1e-4
//! kernel = "family"            # or GAUSS_ISO / EXP_ISO
//!
//! [sweep]
//! variable = "lambda"          # lambda | epsilon | dimension
//! values = [0.0, 0.25, 0.5, 0.75]
//! ```
//!
//! `[[operators]]` (an array of tables) runs the same sweep for several sets.

use serde::{Deserialize, Serialize};
use wigvol_core::catalog::{Family, OperatorSet, OperatorSetDoc};
use wigvol_core::grid::{Axis, PhaseGrid};
use wigvol_core::linalg::{bloch_to_state, ComplexMatrix, QuantumState, C64};
use wigvol_core::regularizer::{family_regularizer, KernelKind, Regularizer};
use wigvol_core::transform::{epsilon_floor, regularized_wigner, WignerField};

use crate::error::{at, CliError, Result};

pub const DEFAULT_EPSILON: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OperatorsSection {
    One(OperatorSetDoc),
    Many(Vec<OperatorSetDoc>),
}

impl OperatorsSection {
    pub fn docs(&self) -> Vec<OperatorSetDoc> {
        match self {
            OperatorsSection::One(d) => vec![d.clone()],
            OperatorsSection::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSection {
    /// generalized Bloch vector r, rho = (I + r.Lambda)/d; padded with zeros
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bloch: Option<Vec<f64>>,
    /// d*d [re, im] pairs, row-major
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameKind {
    /// axis-aligned in the family's primed coordinates
    #[default]
    Natural,
    /// the padded spectral box in a-coordinates
    Plain,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default)]
    pub frame: FrameKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<Vec<usize>>,
    /// explicit a-space axes; overrides frame and counts
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axes: Option<Vec<Axis>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularizerSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// "family" (default: the kernel paired with the family) or an isotropic kind
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<String>,
    /// xi-box half-width; default solves G^ = 1e-10
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variable {
    Lambda,
    Epsilon,
    Dimension,
}

impl Variable {
    pub fn name(self) -> &'static str {
        match self {
            Variable::Lambda => "lambda",
            Variable::Epsilon => "epsilon",
            Variable::Dimension => "dimension",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub variable: Variable,
    pub values: Vec<f64>,
    /// singular-mask width for disk shapes; default 3 sqrt(eps)
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operators: Option<OperatorsSection>,
    #[serde(default)]
    pub state: StateSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub regularizer: RegularizerSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

/// Flag overrides, applied on top of the document.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub epsilon: Option<f64>,
    pub lambda: Option<Vec<f64>>,
    pub count: Option<usize>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(e) = o.epsilon {
            self.regularizer.epsilon = Some(e);
        }
        if let Some(c) = o.count {
            self.grid.count = Some(c);
            self.grid.counts = None;
        }
        if let Some(ls) = &o.lambda {
            if let Some(ops) = &mut self.operators {
                let docs = match ops {
                    OperatorsSection::One(d) => std::slice::from_mut(d),
                    OperatorsSection::Many(v) => v.as_mut_slice(),
                };
                for d in docs {
                    set_lambdas(d, ls);
                }
            }
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.regularizer.epsilon.unwrap_or(DEFAULT_EPSILON)
    }

    pub fn operator_docs(&self) -> Result<Vec<OperatorSetDoc>> {
        let docs = self.operators.as_ref().map(|o| o.docs()).unwrap_or_default();
        if docs.is_empty() {
            return Err(CliError::Config("[operators] section is required".into()));
        }
        Ok(docs)
    }

    /// Value lists non-empty and inside their validity ranges.
    pub fn validate_sweep(&self) -> Result<&SweepSection> {
        let s = self.sweep.as_ref().ok_or_else(|| CliError::Config("[sweep] section is required".into()))?;
        if s.values.is_empty() {
            return Err(CliError::Config("sweep.values: empty".into()));
        }
        for &v in &s.values {
            let ok = match s.variable {
                Variable::Lambda => (0.0..=1.0).contains(&v),
                Variable::Epsilon => v > 0.0 && v.is_finite(),
                Variable::Dimension => v >= 2.0 && v.fract() == 0.0,
            };
            if !ok {
                return Err(CliError::Config(format!("sweep.values: {v} is not a valid {}", s.variable.name())));
            }
        }
        if let Some(m) = s.mask {
            if !(m > 0.0 && m < 1.0) {
                return Err(CliError::Config(format!("sweep.mask: {m} outside (0, 1)")));
            }
        }
        Ok(s)
    }
}

/// lambda for projector families, lambdas (broadcast) otherwise.
pub fn set_lambdas(doc: &mut OperatorSetDoc, ls: &[f64]) {
    match doc.family.as_str() {
        "NOISY_PROJ" | "NOISY_PROJ_MIXED" => doc.params.lambda = ls.first().copied(),
        _ => {
            let k = doc.params.lambdas.as_ref().map(|v| v.len()).unwrap_or(ls.len());
            doc.params.lambdas =
                Some(if ls.len() == 1 { vec![ls[0]; k.max(1)] } else { ls.to_vec() });
        }
    }
}

pub fn build_set(doc: &OperatorSetDoc) -> Result<OperatorSet> {
    at("operators", doc.to_set())
}

pub fn build_state(section: &StateSection, set: &OperatorSet) -> Result<QuantumState> {
    let d = set.dim();
    match (&section.bloch, &section.matrix) {
        (Some(_), Some(_)) => Err(CliError::Config("state: give either bloch or matrix, not both".into())),
        (Some(r), None) => at("state.bloch", bloch_to_state(r, d)),
        (None, Some(m)) => {
            if m.len() != d * d {
                return Err(CliError::Config(format!("state.matrix: {} entries, need {}", m.len(), d * d)));
            }
            let data: Vec<C64> = m.iter().map(|[re, im]| C64::new(*re, *im)).collect();
            at("state.matrix", QuantumState::new(ComplexMatrix::from_row_slice(d, d, &data)))
        }
        (None, None) => Ok(QuantumState::maximally_mixed(d)),
    }
}

pub fn build_regularizer(section: &RegularizerSection, set: &OperatorSet, epsilon: f64) -> Result<Regularizer> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(CliError::Config(format!("regularizer.epsilon: {epsilon} must be > 0")));
    }
    let n = set.n();
    match section.kernel.as_deref().unwrap_or("family") {
        "family" => {
            if matches!(set.family(), Family::NoisyProj { lambda, .. } if *lambda >= 1.0) {
                // the scaled kernel degenerates at lambda = 1
                return at("regularizer", Regularizer::gauss_iso(n, epsilon));
            }
            at("regularizer", family_regularizer(set, epsilon))
        }
        name => match at("regularizer.kernel", KernelKind::parse(name))? {
            KernelKind::GaussIso => at("regularizer", Regularizer::gauss_iso(n, epsilon)),
            KernelKind::ExpIso => at("regularizer", Regularizer::exp_iso(n, epsilon)),
            other => Err(CliError::Config(format!(
                "regularizer.kernel: {} needs family parameters; use \"family\"",
                other.name()
            ))),
        },
    }
}

pub fn build_grid(section: &GridSection, set: &OperatorSet, reg: &Regularizer) -> Result<PhaseGrid> {
    let n = set.n();
    if let Some(axes) = &section.axes {
        if axes.len() != n {
            return Err(CliError::Config(format!("grid.axes: {} axes for n = {n}", axes.len())));
        }
        return at("grid.axes", PhaseGrid::new(axes.clone()));
    }
    let counts = match (&section.counts, section.count) {
        (Some(c), _) => {
            if c.len() != n {
                return Err(CliError::Config(format!("grid.counts: {} entries for n = {n}", c.len())));
            }
            Some(c.clone())
        }
        (None, Some(c)) => Some(vec![c; n]),
        (None, None) => None,
    };
    match (section.frame, set.coords()) {
        (FrameKind::Natural, Some(_)) => at("grid", PhaseGrid::natural(set, reg, counts.as_deref())),
        // no primed frame (CUSTOM, or lambda = 1): fall back to the box
        _ => {
            if counts.as_ref().is_some_and(|c| c.iter().any(|&k| k != c[0])) {
                return Err(CliError::Config("grid.counts: the plain frame uses one count per axis".into()));
            }
            at("grid", PhaseGrid::default_for(set, reg, counts.map(|c| c[0])))
        }
    }
}

/// Everything needed to evaluate one field.
#[derive(Debug, Clone)]
pub struct Job {
    pub doc: OperatorSetDoc,
    pub set: OperatorSet,
    pub rho: QuantumState,
    pub reg: Regularizer,
    pub grid: PhaseGrid,
    pub cutoff: f64,
}

impl Job {
    pub fn resolve(cfg: &Config, doc: &OperatorSetDoc, epsilon: f64) -> Result<Self> {
        let set = build_set(doc)?;
        let rho = build_state(&cfg.state, &set)?;
        let reg = build_regularizer(&cfg.regularizer, &set, epsilon)?;
        let grid = build_grid(&cfg.grid, &set, &reg)?;
        let cutoff = match cfg.regularizer.cutoff {
            Some(c) => {
                at("regularizer.cutoff", reg.check_cutoff(c))?;
                c
            }
            None => at("regularizer", reg.default_cutoff())?,
        };
        Ok(Self { doc: doc.clone(), set, rho, reg, grid, cutoff })
    }

    pub fn field(&self) -> Result<WignerField> {
        at("regularizer.epsilon", check_floor(&self.set, self.reg.epsilon()))?;
        Ok(regularized_wigner(&self.rho, &self.set, &self.grid, &self.reg, self.cutoff)?)
    }
}

fn check_floor(set: &OperatorSet, epsilon: f64) -> wigvol_core::Result<()> {
    let floor = epsilon_floor(set.n());
    if epsilon < floor {
        return Err(wigvol_core::Error::InvalidParameter(format!("{epsilon:e} is below the floor {floor:e} for n = {}", set.n())));
    }
    Ok(())
}
