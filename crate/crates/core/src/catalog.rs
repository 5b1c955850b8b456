//! Operator families and their primed phase-space coordinates.
//!
//! Every built-in family carries a [`PrimedCoords`]: the affine map a' = M a + c
//! in which its Wigner function takes the MUB shape, which primed coordinates
//! pair with which Bloch component, and which ones are pure kernel directions
//! (the delta(a'_3) factors of the mixed projector sets).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, HermitianOperator, C64};

pub fn pauli(k: usize) -> Result<HermitianOperator> {
    let rows: [C64; 4] = match k {
        1 => [0.0.into(), 1.0.into(), 1.0.into(), 0.0.into()],
        2 => [0.0.into(), C64::new(0.0, -1.0), C64::new(0.0, 1.0), 0.0.into()],
        3 => [1.0.into(), 0.0.into(), 0.0.into(), (-1.0).into()],
        _ => return Err(Error::BadIndex { index: k, max: 3 }),
    };
    HermitianOperator::new(ComplexMatrix::from_row_slice(2, 2, &rows))
}

/// Index pairs (j, k), j < k, in row-major order with (0, 1) removed.
fn offdiag_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for j in 0..n {
        for k in j + 1..n {
            if (j, k) != (0, 1) {
                out.push((j, k));
            }
        }
    }
    out
}

/// Generalized Gell-Mann matrix Lambda_k^N, normalized tr[L_j L_k] = 2 delta_jk.
///
/// k = 1, 2, 3 are the Pauli matrices in the top-left block. After that come
/// the remaining symmetric pairs (row-major), the remaining antisymmetric
/// pairs (row-major), and finally the diagonal generators l = 2..N-1.
pub fn gellmann(n: usize, k: usize) -> Result<HermitianOperator> {
    if !(2..=crate::linalg::MAX_DIM).contains(&n) {
        return Err(Error::BadDim(format!("Gell-Mann dimension {n}")));
    }
    let count = n * n - 1;
    if k == 0 || k > count {
        return Err(Error::BadIndex { index: k, max: count });
    }
    let mut m = ComplexMatrix::zeros(n, n);
    let pairs = offdiag_pairs(n);
    let np = pairs.len();
    let (sym, anti, diag) = match k {
        1 => (Some((0, 1)), None, None),
        2 => (None, Some((0, 1)), None),
        3 => (None, None, Some(1)),
        _ if k - 4 < np => (Some(pairs[k - 4]), None, None),
        _ if k - 4 - np < np => (None, Some(pairs[k - 4 - np]), None),
        _ => (None, None, Some(k - 4 - 2 * np + 2)),
    };
    if let Some((j, l)) = sym {
        m[(j, l)] = 1.0.into();
        m[(l, j)] = 1.0.into();
    }
    if let Some((j, l)) = anti {
        m[(j, l)] = C64::new(0.0, -1.0);
        m[(l, j)] = C64::new(0.0, 1.0);
    }
    if let Some(l) = diag {
        let norm = (2.0 / (l * (l + 1)) as f64).sqrt();
        for j in 0..l {
            m[(j, j)] = norm.into();
        }
        m[(l, l)] = (-(l as f64) * norm).into();
    }
    HermitianOperator::new(m)
}

pub fn gellmann_basis(n: usize) -> Vec<HermitianOperator> {
    (1..n * n).map(|k| gellmann(n, k).expect("valid index")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// a' = M a + c.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub matrix: DMatrix<f64>,
    pub offset: DVector<f64>,
}

impl AffineMap {
    pub fn identity(n: usize) -> Self {
        Self { matrix: DMatrix::identity(n, n), offset: DVector::zeros(n) }
    }

    pub fn diagonal(scale: &[f64], shift: &[f64]) -> Self {
        Self {
            matrix: DMatrix::from_diagonal(&DVector::from_column_slice(scale)),
            offset: DVector::from_column_slice(shift),
        }
    }

    pub fn n(&self) -> usize {
        self.offset.len()
    }

    pub fn apply(&self, a: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|i| (0..n).map(|j| self.matrix[(i, j)] * a[j]).sum::<f64>() + self.offset[i])
            .collect()
    }

    pub fn det(&self) -> f64 {
        self.matrix.determinant()
    }

    pub fn inverse(&self) -> Option<AffineMap> {
        let inv = self.matrix.clone().try_inverse()?;
        let offset = -(&inv * &self.offset);
        Some(AffineMap { matrix: inv, offset })
    }
}

/// How a family's primed coordinates relate to the Bloch vector and kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimedCoords {
    pub map: AffineMap,
    /// For the leading primed coordinates: (1-based Bloch index, sign).
    pub bloch: Vec<(usize, f64)>,
    /// Indices of pure kernel coordinates (always after the Bloch ones).
    pub kernel: Vec<usize>,
    /// The a'' = a - lambda shift recorded for the equal-noise family.
    pub secondary: Option<AffineMap>,
}

impl PrimedCoords {
    fn plain(map: AffineMap, nb: usize) -> Self {
        Self { map, bloch: (1..=nb).map(|k| (k, 1.0)).collect(), kernel: vec![], secondary: None }
    }

    pub fn bloch_dims(&self) -> usize {
        self.bloch.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    MubPauli { n: usize },
    NoisyProj { signs: Vec<(usize, Sign)>, lambda: f64 },
    NoisyPauli { lambdas: Vec<f64>, symmetric: bool },
    ArbQubitTriple { theta1: f64, phi1: f64, theta2: f64, phi2: f64 },
    ArbQubitPair { beta: f64 },
    GellMann { dim: usize, n: usize },
    NoisyGellMann { dim: usize, lambdas: Vec<f64> },
    Custom,
}

impl Family {
    pub fn tag(&self) -> &'static str {
        match self {
            Family::MubPauli { .. } => "MUB_PAULI",
            Family::NoisyProj { signs, .. } => {
                if is_mixed(signs) {
                    "NOISY_PROJ_MIXED"
                } else {
                    "NOISY_PROJ"
                }
            }
            Family::NoisyPauli { symmetric: false, .. } => "NOISY_PAULI",
            Family::NoisyPauli { symmetric: true, .. } => "NOISY_PAULI_SYMM",
            Family::ArbQubitTriple { .. } => "ARB_QUBIT_TRIPLE",
            Family::ArbQubitPair { .. } => "ARB_QUBIT_PAIR",
            Family::GellMann { .. } => "GELLMANN",
            Family::NoisyGellMann { .. } => "NOISY_GELLMANN",
            Family::Custom => "CUSTOM",
        }
    }

    /// Noise parameters, one per operator where that makes sense.
    pub fn lambdas(&self) -> Vec<f64> {
        match self {
            Family::NoisyProj { signs, lambda } => vec![*lambda; signs.len()],
            Family::NoisyPauli { lambdas, .. } | Family::NoisyGellMann { lambdas, .. } => lambdas.clone(),
            _ => vec![],
        }
    }

    /// Qudit dimension N of the family.
    pub fn qudit_dim(&self) -> Option<usize> {
        match self {
            Family::GellMann { dim, .. } | Family::NoisyGellMann { dim, .. } => Some(*dim),
            Family::Custom => None,
            _ => Some(2),
        }
    }
}

/// Both a lone projector and a +- pair on some axis.
fn is_mixed(signs: &[(usize, Sign)]) -> bool {
    let count = |ax: usize| signs.iter().filter(|(a, _)| *a == ax).count();
    let counts: Vec<usize> = signs.iter().map(|(a, _)| count(*a)).collect();
    counts.contains(&1) && counts.contains(&2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSet {
    ops: Vec<HermitianOperator>,
    family: Family,
    coords: Option<PrimedCoords>,
}

impl OperatorSet {
    pub fn n(&self) -> usize {
        self.ops.len()
    }

    pub fn dim(&self) -> usize {
        self.ops[0].dim()
    }

    pub fn ops(&self) -> &[HermitianOperator] {
        &self.ops
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn coords(&self) -> Option<&PrimedCoords> {
        self.coords.as_ref()
    }

    pub fn affine(&self) -> Option<&AffineMap> {
        self.coords.as_ref().map(|c| &c.map)
    }

    /// Per-axis spectral range [lambda_min(A_k), lambda_max(A_k)].
    pub fn spectral_box(&self) -> Vec<(f64, f64)> {
        self.ops.iter().map(|a| a.spectral_range()).collect()
    }

    pub fn custom(ops: Vec<HermitianOperator>) -> Result<Self> {
        if ops.is_empty() || ops.len() > 6 {
            return Err(Error::InvalidParameter(format!("custom sets take 1..=6 operators, got {}", ops.len())));
        }
        let d = ops[0].dim();
        if let Some(bad) = ops.iter().find(|o| o.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: bad.dim() });
        }
        Ok(Self { ops, family: Family::Custom, coords: None })
    }
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn affine_combo(a: &HermitianOperator, scale: f64, shift: f64) -> HermitianOperator {
    let d = a.dim();
    HermitianOperator::new(a.matrix() * real(scale) + ComplexMatrix::identity(d, d) * real(shift))
        .expect("affine image of a Hermitian matrix")
}

pub fn mub_pauli(n: usize) -> Result<OperatorSet> {
    if !(1..=3).contains(&n) {
        return Err(Error::InvalidParameter(format!("MUB Pauli set needs n in 1..=3, got {n}")));
    }
    let ops = (1..=n).map(|k| pauli(k).unwrap()).collect();
    Ok(OperatorSet {
        ops,
        family: Family::MubPauli { n },
        coords: Some(PrimedCoords::plain(AffineMap::identity(n), n)),
    })
}

pub fn parse_sign(s: &str) -> Result<(usize, Sign)> {
    let s = s.trim();
    let (ax, sg) = s.split_at(s.len().saturating_sub(1));
    let axis = match ax {
        "x" | "1" => 1,
        "y" | "2" => 2,
        "z" | "3" => 3,
        _ => return Err(Error::BadSigns(format!("unknown axis in {s:?}"))),
    };
    let sign = match sg {
        "+" => Sign::Plus,
        "-" => Sign::Minus,
        _ => return Err(Error::BadSigns(format!("missing +/- in {s:?}"))),
    };
    Ok((axis, sign))
}

pub fn format_sign(axis: usize, sign: Sign) -> String {
    let ax = ["x", "y", "z"][axis - 1];
    format!("{ax}{}", if sign == Sign::Plus { "+" } else { "-" })
}

/// A_k = (lambda/2) I + (1 - lambda) |+-><+-|_axis.
pub fn noisy_projector_set(signs: &[(usize, Sign)], lambda: f64) -> Result<OperatorSet> {
    if signs.is_empty() || signs.len() > 4 {
        return Err(Error::BadSigns(format!("need 1..=4 projectors, got {}", signs.len())));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::BadNoise(format!("lambda = {lambda} outside [0, 1]")));
    }
    for (i, &(ax, sg)) in signs.iter().enumerate() {
        if !(1..=3).contains(&ax) {
            return Err(Error::BadIndex { index: ax, max: 3 });
        }
        if signs[..i].contains(&(ax, sg)) {
            return Err(Error::BadSigns(format!("projector {} repeated", format_sign(ax, sg))));
        }
    }
    let half = ComplexMatrix::identity(2, 2) * real(0.5);
    let ops = signs
        .iter()
        .map(|&(ax, sg)| {
            let proj = &half + pauli(ax).unwrap().matrix() * real(0.5 * sg.value());
            HermitianOperator::new(&half * real(lambda) + proj * real(1.0 - lambda)).unwrap()
        })
        .collect();
    let coords = if lambda < 1.0 { Some(projector_coords(signs, lambda)) } else { None };
    Ok(OperatorSet { ops, family: Family::NoisyProj { signs: signs.to_vec(), lambda }, coords })
}

fn projector_coords(signs: &[(usize, Sign)], lambda: f64) -> PrimedCoords {
    let n = signs.len();
    let s = 1.0 / (1.0 - lambda);
    let partner = |i: usize| (0..n).find(|&j| j != i && signs[j].0 == signs[i].0);
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut bloch = Vec::new();
    // singles first, in operator order
    for i in 0..n {
        if partner(i).is_none() {
            let mut r = vec![0.0; n];
            r[i] = 2.0 * s;
            rows.push((r, -s));
            bloch.push((signs[i].0, signs[i].1.value()));
        }
    }
    let mut kernel_rows = Vec::new();
    for i in 0..n {
        if let Some(j) = partner(i) {
            if j < i {
                continue;
            }
            let mut diff = vec![0.0; n];
            diff[i] = s;
            diff[j] = -s;
            rows.push((diff, 0.0));
            bloch.push((signs[i].0, signs[i].1.value()));
            let mut sum = vec![0.0; n];
            sum[i] = s;
            sum[j] = s;
            kernel_rows.push((sum, -s));
        }
    }
    let nb = rows.len();
    rows.extend(kernel_rows);
    let matrix = DMatrix::from_fn(n, n, |r, c| rows[r].0[c]);
    let offset = DVector::from_fn(n, |r, _| rows[r].1);
    PrimedCoords { map: AffineMap { matrix, offset }, bloch, kernel: (nb..n).collect(), secondary: None }
}

fn check_lambdas(lambdas: &[f64]) -> Result<()> {
    if !(2..=3).contains(&lambdas.len()) {
        return Err(Error::BadNoise(format!("need 2 or 3 noise parameters, got {}", lambdas.len())));
    }
    if let Some(l) = lambdas.iter().find(|l| !(0.0..1.0).contains(*l)) {
        return Err(Error::BadNoise(format!("lambda = {l} outside [0, 1)")));
    }
    Ok(())
}

fn noisy_coords(lambdas: &[f64]) -> PrimedCoords {
    let scale: Vec<f64> = lambdas.iter().map(|l| 1.0 / (1.0 - l)).collect();
    let shift: Vec<f64> = lambdas.iter().map(|l| -l / (1.0 - l)).collect();
    PrimedCoords::plain(AffineMap::diagonal(&scale, &shift), lambdas.len())
}

/// A_k = (1 - lambda_k) sigma_k + lambda_k I.
pub fn noisy_pauli_set(lambdas: &[f64], symmetric: bool) -> Result<OperatorSet> {
    check_lambdas(lambdas)?;
    if symmetric && lambdas.iter().any(|l| *l != lambdas[0]) {
        return Err(Error::BadNoise("symmetric flag needs equal lambdas".into()));
    }
    let ops = lambdas
        .iter()
        .enumerate()
        .map(|(k, &l)| affine_combo(&pauli(k + 1).unwrap(), 1.0 - l, l))
        .collect();
    let mut coords = noisy_coords(lambdas);
    if symmetric {
        let n = lambdas.len();
        coords.secondary = Some(AffineMap::diagonal(&vec![1.0; n], &vec![-lambdas[0]; n]));
    }
    Ok(OperatorSet { ops, family: Family::NoisyPauli { lambdas: lambdas.to_vec(), symmetric }, coords: Some(coords) })
}

fn unit_vector(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

fn bloch_op(v: [f64; 3]) -> HermitianOperator {
    let m = (1..=3).fold(ComplexMatrix::zeros(2, 2), |acc, k| acc + pauli(k).unwrap().matrix() * real(v[k - 1]));
    HermitianOperator::new(m).unwrap()
}

/// Map eta = H xi for which xi . A = eta . sigma.
pub fn eta_matrix(family: &Family) -> Option<DMatrix<f64>> {
    match *family {
        Family::ArbQubitTriple { theta1, phi1, theta2, phi2 } => {
            let l = unit_vector(theta1, phi1);
            let g = unit_vector(theta2, phi2);
            Some(DMatrix::from_row_slice(3, 3, &[l[0], g[0], 0.0, l[1], g[1], 0.0, l[2], g[2], 1.0]))
        }
        Family::ArbQubitPair { beta } => {
            Some(DMatrix::from_row_slice(2, 2, &[1.0, (1.0 - beta * beta).sqrt(), 0.0, beta]))
        }
        _ => None,
    }
}

fn eta_coords(h: &DMatrix<f64>) -> PrimedCoords {
    let n = h.nrows();
    let m = h.transpose().try_inverse().expect("checked invertible");
    PrimedCoords::plain(AffineMap { matrix: m, offset: DVector::zeros(n) }, n)
}

/// |gamma_y lambda_x - gamma_x lambda_y| = |sin t1 sin t2 sin(p1 - p2)|.
pub fn coplanarity_factor(theta1: f64, phi1: f64, theta2: f64, phi2: f64) -> f64 {
    let l = unit_vector(theta1, phi1);
    let g = unit_vector(theta2, phi2);
    (g[1] * l[0] - g[0] * l[1]).abs()
}

pub fn arb_qubit_triple(theta1: f64, phi1: f64, theta2: f64, phi2: f64) -> Result<OperatorSet> {
    let f = coplanarity_factor(theta1, phi1, theta2, phi2);
    if f < 1e-12 {
        return Err(Error::DegenerateTriple(f));
    }
    let family = Family::ArbQubitTriple { theta1, phi1, theta2, phi2 };
    let ops = vec![bloch_op(unit_vector(theta1, phi1)), bloch_op(unit_vector(theta2, phi2)), pauli(3).unwrap()];
    let coords = eta_coords(&eta_matrix(&family).unwrap());
    Ok(OperatorSet { ops, family, coords: Some(coords) })
}

pub fn arb_qubit_pair(beta: f64) -> Result<OperatorSet> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::BadBeta(beta));
    }
    let family = Family::ArbQubitPair { beta };
    let c = (1.0 - beta * beta).sqrt();
    let ops = vec![pauli(1).unwrap(), bloch_op([c, beta, 0.0])];
    let coords = eta_coords(&eta_matrix(&family).unwrap());
    Ok(OperatorSet { ops, family, coords: Some(coords) })
}

pub fn gellmann_set(dim: usize, n: usize) -> Result<OperatorSet> {
    if !(2..=3).contains(&n) {
        return Err(Error::InvalidParameter(format!("Gell-Mann sets use n in 2..=3, got {n}")));
    }
    let ops = (1..=n).map(|k| gellmann(dim, k)).collect::<Result<Vec<_>>>()?;
    Ok(OperatorSet {
        ops,
        family: Family::GellMann { dim, n },
        coords: Some(PrimedCoords::plain(AffineMap::identity(n), n)),
    })
}

/// A_k = (1 - lambda_k) Lambda_k^N + lambda_k I.
pub fn noisy_gellmann_set(dim: usize, lambdas: &[f64]) -> Result<OperatorSet> {
    if dim < 2 {
        return Err(Error::BadDim(format!("N = {dim} < 2")));
    }
    check_lambdas(lambdas)?;
    let ops = lambdas
        .iter()
        .enumerate()
        .map(|(k, &l)| Ok(affine_combo(&gellmann(dim, k + 1)?, 1.0 - l, l)))
        .collect::<Result<Vec<_>>>()?;
    Ok(OperatorSet {
        ops,
        family: Family::NoisyGellMann { dim, lambdas: lambdas.to_vec() },
        coords: Some(noisy_coords(lambdas)),
    })
}

/// Rebuild a set from its family parameters.
pub fn instantiate(family: &Family) -> Result<OperatorSet> {
    match family {
        Family::MubPauli { n } => mub_pauli(*n),
        Family::NoisyProj { signs, lambda } => noisy_projector_set(signs, *lambda),
        Family::NoisyPauli { lambdas, symmetric } => noisy_pauli_set(lambdas, *symmetric),
        Family::ArbQubitTriple { theta1, phi1, theta2, phi2 } => arb_qubit_triple(*theta1, *phi1, *theta2, *phi2),
        Family::ArbQubitPair { beta } => arb_qubit_pair(*beta),
        Family::GellMann { dim, n } => gellmann_set(*dim, *n),
        Family::NoisyGellMann { dim, lambdas } => noisy_gellmann_set(*dim, lambdas),
        Family::Custom => Err(Error::InvalidParameter("CUSTOM sets need explicit matrices".into())),
    }
}

/// Text form of an operator set: `family`, `params`, and `matrices` for CUSTOM.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OperatorSetDoc {
    pub family: String,
    #[serde(default)]
    pub params: ParamsDoc,
    /// One entry per operator: d*d [re, im] pairs, row-major.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrices: Option<Vec<Vec<[f64; 2]>>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, rename = "N", skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signs: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi2: Option<f64>,
}

fn need<T: Copy>(v: Option<T>, name: &str) -> Result<T> {
    v.ok_or_else(|| Error::Parse(format!("params.{name} is required")))
}

impl OperatorSetDoc {
    pub fn from_set(set: &OperatorSet) -> Self {
        let mut p = ParamsDoc::default();
        let mut matrices = None;
        match set.family() {
            Family::MubPauli { n } => p.n = Some(*n),
            Family::NoisyProj { signs, lambda } => {
                p.signs = Some(signs.iter().map(|&(a, s)| format_sign(a, s)).collect());
                p.lambda = Some(*lambda);
            }
            Family::NoisyPauli { lambdas, .. } => p.lambdas = Some(lambdas.clone()),
            Family::ArbQubitTriple { theta1, phi1, theta2, phi2 } => {
                p.theta1 = Some(*theta1);
                p.phi1 = Some(*phi1);
                p.theta2 = Some(*theta2);
                p.phi2 = Some(*phi2);
            }
            Family::ArbQubitPair { beta } => p.beta = Some(*beta),
            Family::GellMann { dim, n } => {
                p.dim = Some(*dim);
                p.n = Some(*n);
            }
            Family::NoisyGellMann { dim, lambdas } => {
                p.dim = Some(*dim);
                p.lambdas = Some(lambdas.clone());
            }
            Family::Custom => {
                matrices = Some(
                    set.ops().iter().map(|op| op.matrix().transpose().iter().map(|z| [z.re, z.im]).collect()).collect(),
                );
            }
        }
        Self { family: set.family().tag().to_string(), params: p, matrices }
    }

    pub fn to_set(&self) -> Result<OperatorSet> {
        let p = &self.params;
        let lambdas = || p.lambdas.clone().ok_or_else(|| Error::Parse("params.lambdas is required".into()));
        match self.family.as_str() {
            "MUB_PAULI" => mub_pauli(need(p.n, "n")?),
            "NOISY_PROJ" | "NOISY_PROJ_MIXED" => {
                let signs = p.signs.as_ref().ok_or_else(|| Error::Parse("params.signs is required".into()))?;
                let signs = signs.iter().map(|s| parse_sign(s)).collect::<Result<Vec<_>>>()?;
                noisy_projector_set(&signs, need(p.lambda, "lambda")?)
            }
            "NOISY_PAULI" => noisy_pauli_set(&lambdas()?, false),
            "NOISY_PAULI_SYMM" => noisy_pauli_set(&lambdas()?, true),
            "ARB_QUBIT_TRIPLE" => arb_qubit_triple(
                need(p.theta1, "theta1")?,
                need(p.phi1, "phi1")?,
                need(p.theta2, "theta2")?,
                need(p.phi2, "phi2")?,
            ),
            "ARB_QUBIT_PAIR" => arb_qubit_pair(need(p.beta, "beta")?),
            "GELLMANN" => gellmann_set(need(p.dim, "N")?, need(p.n, "n")?),
            "NOISY_GELLMANN" => noisy_gellmann_set(need(p.dim, "N")?, &lambdas()?),
            "CUSTOM" => {
                let mats = self.matrices.as_ref().ok_or_else(|| Error::Parse("CUSTOM needs matrices".into()))?;
                let ops = mats
                    .iter()
                    .map(|flat| {
                        let d = (flat.len() as f64).sqrt().round() as usize;
                        if d * d != flat.len() {
                            return Err(Error::Parse(format!("matrix with {} entries is not square", flat.len())));
                        }
                        let data: Vec<C64> = flat.iter().map(|[re, im]| C64::new(*re, *im)).collect();
                        HermitianOperator::new(ComplexMatrix::from_row_slice(d, d, &data))
                    })
                    .collect::<Result<Vec<_>>>()?;
                OperatorSet::custom(ops)
            }
            other => Err(Error::Parse(format!("unknown family {other:?}"))),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::trace_product;
    use std::f64::consts::PI;

    fn max_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn pauli_basics() {
        let z = pauli(3).unwrap();
        assert_eq!(z.matrix()[(0, 0)].re, 1.0);
        assert_eq!(z.matrix()[(1, 1)].re, -1.0);
        let x = pauli(1).unwrap();
        assert!(max_diff(&(x.matrix() * x.matrix()), &ComplexMatrix::identity(2, 2)) == 0.0);
        assert_eq!(trace_product(x.matrix(), pauli(2).unwrap().matrix()).norm(), 0.0);
        assert!(matches!(pauli(4), Err(Error::BadIndex { .. })));
    }

    #[test]
    fn gellmann_reduces_and_is_orthonormal() {
        for k in 1..=3 {
            assert_eq!(gellmann(2, k).unwrap(), pauli(k).unwrap());
        }
        let l1 = gellmann(5, 1).unwrap();
        for r in 0..5 {
            for c in 0..5 {
                let want = if (r, c) == (0, 1) || (r, c) == (1, 0) { 1.0 } else { 0.0 };
                assert_eq!(l1.matrix()[(r, c)], C64::new(want, 0.0));
            }
        }
        for n in 2..=5 {
            let b = gellmann_basis(n);
            for (j, a) in b.iter().enumerate() {
                assert!(a.trace().abs() < 1e-14);
                for (k, c) in b.iter().enumerate() {
                    let want = if j == k { 2.0 } else { 0.0 };
                    assert!((trace_product(a.matrix(), c.matrix()) - want).norm() < 1e-13, "N={n} {j} {k}");
                }
            }
        }
        assert!(matches!(gellmann(3, 9), Err(Error::BadIndex { .. })));
    }

    #[test]
    fn projector_examples() {
        let s = noisy_projector_set(&[(1, Sign::Plus), (2, Sign::Plus)], 0.0).unwrap();
        let plus_x = (ComplexMatrix::identity(2, 2) + pauli(1).unwrap().matrix()) * real(0.5);
        assert!(max_diff(s.ops()[0].matrix(), &plus_x) < 1e-15);
        let full = noisy_projector_set(&[(1, Sign::Plus)], 1.0).unwrap();
        assert!(max_diff(full.ops()[0].matrix(), &(ComplexMatrix::identity(2, 2) * real(0.5))) < 1e-15);
        let half = noisy_projector_set(&[(1, Sign::Plus), (2, Sign::Plus)], 0.5).unwrap();
        let want = ComplexMatrix::from_row_slice(2, 2, &[real(0.5), real(0.25), real(0.25), real(0.5)]);
        assert!(max_diff(half.ops()[0].matrix(), &want) < 1e-15);
        assert!(matches!(noisy_projector_set(&[(1, Sign::Plus)], 1.5), Err(Error::BadNoise(_))));
        assert!(matches!(noisy_projector_set(&[(1, Sign::Plus), (1, Sign::Plus)], 0.1), Err(Error::BadSigns(_))));
    }

    #[test]
    fn mixed_projector_map_layout() {
        let s = noisy_projector_set(&[(1, Sign::Plus), (2, Sign::Plus), (2, Sign::Minus)], 0.5).unwrap();
        assert_eq!(s.family().tag(), "NOISY_PROJ_MIXED");
        let c = s.coords().unwrap();
        let a = [0.3, 0.9, 0.2];
        let p = c.map.apply(&a);
        assert!((p[0] - (2.0 * 0.3 - 1.0) / 0.5).abs() < 1e-14);
        assert!((p[1] - (0.9 - 0.2) / 0.5).abs() < 1e-14);
        assert!((p[2] - (0.9 + 0.2 - 1.0) / 0.5).abs() < 1e-14);
        assert_eq!(c.kernel, vec![2]);
        // +-+ variant: the single y projector comes first
        let v = noisy_projector_set(&[(1, Sign::Plus), (1, Sign::Minus), (2, Sign::Plus)], 0.0).unwrap();
        assert_eq!(v.coords().unwrap().bloch, vec![(2, 1.0), (1, 1.0)]);
    }

    #[test]
    fn noisy_pauli_examples() {
        let s = noisy_pauli_set(&[0.5, 0.5, 0.5], false).unwrap();
        for k in 0..3 {
            let want = pauli(k + 1).unwrap().matrix() * real(0.5) + ComplexMatrix::identity(2, 2) * real(0.5);
            assert!(max_diff(s.ops()[k].matrix(), &want) < 1e-15);
        }
        let t = noisy_pauli_set(&[0.2, 0.4], false).unwrap();
        let p = t.affine().unwrap().apply(&[1.0, 1.0]);
        assert!((p[0] - 0.8 / 0.8).abs() < 1e-14 && (p[1] - 0.6 / 0.6).abs() < 1e-14);
        let p = t.affine().unwrap().apply(&[0.5, 0.1]);
        assert!((p[0] - 0.3 / 0.8).abs() < 1e-14 && (p[1] - (-0.3 / 0.6)).abs() < 1e-14);
        assert!(matches!(noisy_pauli_set(&[1.0, 0.0], false), Err(Error::BadNoise(_))));
        assert!(matches!(noisy_pauli_set(&[0.1, 0.2], true), Err(Error::BadNoise(_))));
    }

    #[test]
    fn triple_examples() {
        let s = arb_qubit_triple(PI / 2.0, 0.0, PI / 2.0, PI / 2.0).unwrap();
        for k in 0..3 {
            assert!(max_diff(s.ops()[k].matrix(), pauli(k + 1).unwrap().matrix()) < 1e-15);
        }
        assert!(matches!(arb_qubit_triple(PI / 2.0, 0.0, PI / 2.0, 0.0), Err(Error::DegenerateTriple(_))));
        let f = coplanarity_factor(PI / 2.0, 0.0, PI / 2.0, PI / 4.0);
        assert!((f - (PI / 4.0).sin()).abs() < 1e-15);
    }

    #[test]
    fn pair_examples() {
        let s = arb_qubit_pair(1.0).unwrap();
        assert!(max_diff(s.ops()[1].matrix(), pauli(2).unwrap().matrix()) < 1e-15);
        assert_eq!(s.affine().unwrap().matrix, DMatrix::identity(2, 2));
        let p = arb_qubit_pair(0.6).unwrap();
        let want = pauli(1).unwrap().matrix() * real(0.8) + pauli(2).unwrap().matrix() * real(0.6);
        assert!(max_diff(p.ops()[1].matrix(), &want) < 1e-15);
        let a = p.affine().unwrap().apply(&[0.5, 0.7]);
        assert!((a[0] - 0.5).abs() < 1e-14 && (a[1] - 0.5).abs() < 1e-14);
        assert!(matches!(arb_qubit_pair(0.0), Err(Error::BadBeta(_))));
    }

    #[test]
    fn gellmann_set_examples() {
        let s = noisy_gellmann_set(2, &[0.0, 0.0, 0.0]).unwrap();
        for k in 0..3 {
            assert_eq!(s.ops()[k], pauli(k + 1).unwrap());
        }
        let s4 = noisy_gellmann_set(4, &[0.0, 0.0]).unwrap();
        assert_eq!(s4.ops()[1], gellmann(4, 2).unwrap());
        let s3 = noisy_gellmann_set(3, &[0.3, 0.3, 0.3]).unwrap();
        let a1 = s3.ops()[0].matrix();
        for i in 0..3 {
            assert!((a1[(i, i)].re - 0.3).abs() < 1e-15);
        }
        assert!((a1[(0, 1)].re - 0.7).abs() < 1e-15 && (a1[(1, 0)].re - 0.7).abs() < 1e-15);
        assert!(matches!(noisy_gellmann_set(1, &[0.0, 0.0]), Err(Error::BadDim(_))));
    }

    #[test]
    fn doc_round_trip_is_exact() {
        let sets = vec![
            mub_pauli(3).unwrap(),
            noisy_projector_set(&[(1, Sign::Plus), (1, Sign::Minus), (2, Sign::Plus), (2, Sign::Minus)], 0.1).unwrap(),
            noisy_pauli_set(&[0.1, 0.7], false).unwrap(),
            noisy_pauli_set(&[0.3, 0.3, 0.3], true).unwrap(),
            arb_qubit_triple(1.1, 0.2, 0.7, 2.3).unwrap(),
            arb_qubit_pair(0.1 + 0.2).unwrap(),
            gellmann_set(4, 3).unwrap(),
            noisy_gellmann_set(5, &[0.1, 1.0 / 3.0]).unwrap(),
            OperatorSet::custom(vec![gellmann(3, 5).unwrap(), gellmann(3, 8).unwrap()]).unwrap(),
        ];
        for s in sets {
            let doc = OperatorSetDoc::from_set(&s);
            let back = OperatorSetDoc::from_json(&doc.to_json()).unwrap();
            assert_eq!(back, doc);
            let rebuilt = back.to_set().unwrap();
            assert_eq!(rebuilt.family(), s.family());
            for (a, b) in rebuilt.ops().iter().zip(s.ops()) {
                assert!(max_diff(a.matrix(), b.matrix()) <= 1e-15);
            }
        }
    }
}
