//! Complex-amplitude substrate: state vectors, unitary operators, projective
//! measurements and the tolerance policy shared by every engine.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QError {
    #[error("dimension mismatch: operator {op} vs state {state}")]
    DimensionMismatch { op: usize, state: usize },
    #[error("operator is not unitary (max deviation {deviation:e})")]
    NonUnitary { deviation: f64 },
    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),
    #[error("invalid state vector: {0}")]
    InvalidState(String),
    #[error("invalid tolerance policy: {0}")]
    InvalidTolerance(String),
}

/// Numerical tolerances. Every value must lie in `(0, 1e-6]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TolerancePolicy {
    pub tol_norm: f64,
    pub tol_unitary: f64,
    pub tol_prob: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self {
            tol_norm: 1e-9,
            tol_unitary: 1e-9,
            tol_prob: 1e-9,
        }
    }
}

impl TolerancePolicy {
    pub fn new(tol_norm: f64, tol_unitary: f64, tol_prob: f64) -> Result<Self, QError> {
        for (name, v) in [
            ("tol_norm", tol_norm),
            ("tol_unitary", tol_unitary),
            ("tol_prob", tol_prob),
        ] {
            if !(v > 0.0 && v <= 1e-6) {
                return Err(QError::InvalidTolerance(format!(
                    "{name} = {v} outside (0, 1e-6]"
                )));
            }
        }
        Ok(Self {
            tol_norm,
            tol_unitary,
            tol_prob,
        })
    }
}

fn check_finite(amps: &[C64]) -> Result<(), QError> {
    if amps.iter().all(|a| a.re.is_finite() && a.im.is_finite()) {
        Ok(())
    } else {
        Err(QError::InvalidState("non-finite amplitude".into()))
    }
}

/// A pure state |ψ⟩ over a finite computational basis.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    amps: Vec<C64>,
}

impl fmt::Debug for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.amps.iter()).finish()
    }
}

impl StateVector {
    pub fn new(amps: Vec<C64>) -> Result<Self, QError> {
        if amps.is_empty() {
            return Err(QError::InvalidState("dimension must be at least 1".into()));
        }
        check_finite(&amps)?;
        Ok(Self { amps })
    }

    /// Like [`StateVector::new`] but also requires unit norm within `tol.tol_norm`.
    pub fn normalized(amps: Vec<C64>, tol: &TolerancePolicy) -> Result<Self, QError> {
        let v = Self::new(amps)?;
        let n = v.norm_sqr();
        if (n - 1.0).abs() > tol.tol_norm {
            return Err(QError::InvalidState(format!("squared norm {n} is not 1")));
        }
        Ok(v)
    }

    pub fn from_real(reals: &[f64]) -> Result<Self, QError> {
        Self::new(reals.iter().map(|&r| C64::new(r, 0.0)).collect())
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(
            index < dim,
            "basis index {index} out of range for dim {dim}"
        );
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amps(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Largest per-amplitude modulus of the difference.
    pub fn max_deviation(&self, other: &StateVector) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Max amplitude deviation after aligning the global phase of `other` to `self`.
    pub fn ray_deviation(&self, other: &StateVector) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        let overlap: C64 = other
            .amps
            .iter()
            .zip(&self.amps)
            .map(|(b, a)| b.conj() * a)
            .sum();
        if overlap.norm() == 0.0 {
            return self.max_deviation(other);
        }
        let phase = overlap / overlap.norm();
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b * phase).norm())
            .fold(0.0, f64::max)
    }
}

/// Square complex matrix, row-major. No unitarity promise. Serialized as a
/// list of rows, each entry an `[re, im]` pair.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<C64>>", into = "Vec<Vec<C64>>")]
pub struct Grid {
    dim: usize,
    data: Vec<C64>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Grid({}x{})", self.dim, self.dim)
    }
}

impl TryFrom<Vec<Vec<C64>>> for Grid {
    type Error = QError;
    fn try_from(rows: Vec<Vec<C64>>) -> Result<Self, QError> {
        Grid::from_rows(rows)
    }
}

impl From<Grid> for Vec<Vec<C64>> {
    fn from(g: Grid) -> Self {
        g.rows()
    }
}

impl Grid {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut g = Self::zeros(dim);
        for i in 0..dim {
            g.data[i * dim + i] = ONE;
        }
        g
    }

    pub fn from_rows(rows: Vec<Vec<C64>>) -> Result<Self, QError> {
        let dim = rows.len();
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(QError::InvalidState(
                "grid must be square and non-empty".into(),
            ));
        }
        let data: Vec<C64> = rows.into_iter().flatten().collect();
        check_finite(&data)?;
        Ok(Self { dim, data })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self, QError> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
                .collect(),
        )
    }

    pub fn diagonal(diag: &[C64]) -> Self {
        let mut g = Self::zeros(diag.len());
        for (i, d) in diag.iter().enumerate() {
            g.data[i * g.dim + i] = *d;
        }
        g
    }

    /// |v⟩⟨v|
    pub fn outer(v: &[C64]) -> Self {
        let dim = v.len();
        let mut g = Self::zeros(dim);
        for r in 0..dim {
            for c in 0..dim {
                g.data[r * dim + c] = v[r] * v[c].conj();
            }
        }
        g
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.dim + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: C64) {
        self.data[r * self.dim + c] = v;
    }

    pub fn rows(&self) -> Vec<Vec<C64>> {
        self.data.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut g = Self::zeros(self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                g.data[c * self.dim + r] = self.data[r * self.dim + c].conj();
            }
        }
        g
    }

    pub fn matmul(&self, other: &Grid) -> Grid {
        assert_eq!(self.dim, other.dim);
        let d = self.dim;
        let mut g = Self::zeros(d);
        for r in 0..d {
            for k in 0..d {
                let a = self.data[r * d + k];
                if a == ZERO {
                    continue;
                }
                for c in 0..d {
                    g.data[r * d + c] += a * other.data[k * d + c];
                }
            }
        }
        g
    }

    pub fn add(&self, other: &Grid) -> Grid {
        assert_eq!(self.dim, other.dim);
        Grid {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Grid {
        Grid {
            dim: self.dim,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        self.data
            .chunks(self.dim)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Max-entry modulus of `self - other`.
    pub fn max_deviation(&self, other: &Grid) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Block-diagonal `[1] ⊕ self`: a fresh basis state at index 0.
    pub fn with_leading_identity(&self) -> Grid {
        let d = self.dim + 1;
        let mut g = Grid::zeros(d);
        g.set(0, 0, ONE);
        for r in 0..self.dim {
            for c in 0..self.dim {
                g.set(r + 1, c + 1, self.get(r, c));
            }
        }
        g
    }

    /// `self ⊗ I_k`, the trailing factor being the fast index.
    pub fn tensor_identity(&self, k: usize) -> Grid {
        let d = self.dim * k;
        let mut g = Grid::zeros(d);
        for r in 0..self.dim {
            for c in 0..self.dim {
                let v = self.get(r, c);
                if v == ZERO {
                    continue;
                }
                for a in 0..k {
                    g.set(r * k + a, c * k + a, v);
                }
            }
        }
        g
    }
}

/// Max-entry deviation of `U·U†` from the identity.
pub fn unitarity_deviation(u: &Grid) -> f64 {
    u.matmul(&u.adjoint())
        .max_deviation(&Grid::identity(u.dim()))
}

/// True iff `U·U†` is within `tol.tol_unitary` of the identity, entrywise.
pub fn check_unitary(u: &Grid, tol: &TolerancePolicy) -> bool {
    unitarity_deviation(u) <= tol.tol_unitary
}

#[derive(Clone, PartialEq)]
enum OpForm {
    Dense(Grid),
    Diagonal(Vec<C64>),
    /// `U e_k = phase[k] · e_{perm[k]}`
    Monomial {
        perm: Vec<usize>,
        phase: Vec<C64>,
    },
}

/// A validated unitary. Diagonal and monomial (phased permutation) operators
/// are stored sparsely and applied in linear time.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Grid", into = "Grid")]
pub struct UnitaryOp {
    form: OpForm,
}

impl fmt::Debug for UnitaryOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.form {
            OpForm::Dense(g) => write!(f, "Dense({})", g.dim()),
            OpForm::Diagonal(d) => write!(f, "Diagonal({})", d.len()),
            OpForm::Monomial { perm, .. } => write!(f, "Monomial({})", perm.len()),
        }
    }
}

impl TryFrom<Grid> for UnitaryOp {
    type Error = QError;
    fn try_from(g: Grid) -> Result<Self, QError> {
        UnitaryOp::dense(g, &TolerancePolicy::default())
    }
}

impl From<UnitaryOp> for Grid {
    fn from(u: UnitaryOp) -> Grid {
        u.to_grid()
    }
}

fn unit_modulus(z: C64, tol: &TolerancePolicy) -> bool {
    (z.norm_sqr() - 1.0).abs() <= tol.tol_unitary
}

impl UnitaryOp {
    pub fn identity(dim: usize) -> Self {
        Self {
            form: OpForm::Diagonal(vec![ONE; dim]),
        }
    }

    pub fn dense(g: Grid, tol: &TolerancePolicy) -> Result<Self, QError> {
        let deviation = unitarity_deviation(&g);
        if deviation > tol.tol_unitary {
            return Err(QError::NonUnitary { deviation });
        }
        Ok(Self {
            form: OpForm::Dense(g),
        })
    }

    pub fn diagonal(diag: Vec<C64>, tol: &TolerancePolicy) -> Result<Self, QError> {
        check_finite(&diag)?;
        if let Some(bad) = diag.iter().find(|z| !unit_modulus(**z, tol)) {
            return Err(QError::NonUnitary {
                deviation: (bad.norm_sqr() - 1.0).abs(),
            });
        }
        Ok(Self {
            form: OpForm::Diagonal(diag),
        })
    }

    /// Diagonal operator with entries `(-1)^{flip[k]}`.
    pub fn sign_diagonal(flip: impl IntoIterator<Item = bool>) -> Self {
        Self {
            form: OpForm::Diagonal(
                flip.into_iter()
                    .map(|f| if f { -ONE } else { ONE })
                    .collect(),
            ),
        }
    }

    pub fn permutation(perm: Vec<usize>) -> Result<Self, QError> {
        let n = perm.len();
        Self::monomial(perm, vec![ONE; n], &TolerancePolicy::default())
    }

    pub fn monomial(
        perm: Vec<usize>,
        phase: Vec<C64>,
        tol: &TolerancePolicy,
    ) -> Result<Self, QError> {
        let n = perm.len();
        let mut seen = vec![false; n];
        for &p in &perm {
            if p >= n || seen[p] {
                return Err(QError::NonUnitary { deviation: 1.0 });
            }
            seen[p] = true;
        }
        if phase.len() != n || phase.iter().any(|z| !unit_modulus(*z, tol)) {
            return Err(QError::NonUnitary { deviation: 1.0 });
        }
        Ok(Self {
            form: OpForm::Monomial { perm, phase },
        })
    }

    pub fn dim(&self) -> usize {
        match &self.form {
            OpForm::Dense(g) => g.dim(),
            OpForm::Diagonal(d) => d.len(),
            OpForm::Monomial { perm, .. } => perm.len(),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.form, OpForm::Diagonal(_))
    }

    pub fn diagonal_entries(&self) -> Option<&[C64]> {
        match &self.form {
            OpForm::Diagonal(d) => Some(d),
            _ => None,
        }
    }

    pub fn to_grid(&self) -> Grid {
        match &self.form {
            OpForm::Dense(g) => g.clone(),
            OpForm::Diagonal(d) => Grid::diagonal(d),
            OpForm::Monomial { perm, phase } => {
                let mut g = Grid::zeros(perm.len());
                for (k, (&p, &z)) in perm.iter().zip(phase).enumerate() {
                    g.set(p, k, z);
                }
                g
            }
        }
    }

    pub fn adjoint(&self) -> Self {
        let form = match &self.form {
            OpForm::Dense(g) => OpForm::Dense(g.adjoint()),
            OpForm::Diagonal(d) => OpForm::Diagonal(d.iter().map(|z| z.conj()).collect()),
            OpForm::Monomial { perm, phase } => {
                let mut inv = vec![0; perm.len()];
                let mut ph = vec![ONE; perm.len()];
                for (k, &p) in perm.iter().enumerate() {
                    inv[p] = k;
                    ph[p] = phase[k].conj();
                }
                OpForm::Monomial {
                    perm: inv,
                    phase: ph,
                }
            }
        };
        Self { form }
    }

    /// `self · other` (other applied first).
    pub fn compose(&self, other: &UnitaryOp) -> UnitaryOp {
        match (&self.form, &other.form) {
            (OpForm::Diagonal(a), OpForm::Diagonal(b)) => Self {
                form: OpForm::Diagonal(a.iter().zip(b).map(|(x, y)| x * y).collect()),
            },
            _ => Self {
                form: OpForm::Dense(self.to_grid().matmul(&other.to_grid())),
            },
        }
    }

    pub(crate) fn apply_amps(&self, v: &[C64]) -> Vec<C64> {
        match &self.form {
            OpForm::Dense(g) => g.mul_vec(v),
            OpForm::Diagonal(d) => d.iter().zip(v).map(|(a, b)| a * b).collect(),
            OpForm::Monomial { perm, phase } => {
                let mut out = vec![ZERO; v.len()];
                for k in 0..v.len() {
                    out[perm[k]] = phase[k] * v[k];
                }
                out
            }
        }
    }
}

/// `u · v`. Validated operators preserve the norm within rounding.
pub fn apply_unitary(u: &UnitaryOp, v: &StateVector) -> Result<StateVector, QError> {
    if u.dim() != v.dim() {
        return Err(QError::DimensionMismatch {
            op: u.dim(),
            state: v.dim(),
        });
    }
    Ok(StateVector {
        amps: u.apply_amps(&v.amps),
    })
}

#[derive(Clone, PartialEq)]
enum ProjForm {
    Dense(Grid),
    /// Projector onto the span of the listed basis states.
    Basis(Vec<usize>),
}

/// Orthogonal projector. Basis-subset projectors are stored by their support.
#[derive(Clone, Serialize, Deserialize)]
#[serde(from = "Grid", into = "Grid")]
pub struct Projector {
    dim: usize,
    form: ProjForm,
}

impl fmt::Debug for Projector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.form {
            ProjForm::Dense(_) => write!(f, "Projector(dense {})", self.dim),
            ProjForm::Basis(s) => write!(f, "Projector(basis {:?})", s),
        }
    }
}

impl PartialEq for Projector {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && (self.form == other.form || self.to_grid() == other.to_grid())
    }
}

impl From<Grid> for Projector {
    fn from(g: Grid) -> Self {
        Projector::dense(g)
    }
}

impl From<Projector> for Grid {
    fn from(p: Projector) -> Grid {
        p.to_grid()
    }
}

impl Projector {
    pub fn dense(g: Grid) -> Self {
        Self {
            dim: g.dim(),
            form: ProjForm::Dense(g),
        }
    }

    pub fn basis(dim: usize, mut support: Vec<usize>) -> Self {
        support.sort_unstable();
        support.dedup();
        Self {
            dim,
            form: ProjForm::Basis(support),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn to_grid(&self) -> Grid {
        match &self.form {
            ProjForm::Dense(g) => g.clone(),
            ProjForm::Basis(s) => {
                let mut g = Grid::zeros(self.dim);
                for &i in s {
                    g.set(i, i, ONE);
                }
                g
            }
        }
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        match &self.form {
            ProjForm::Dense(g) => g.mul_vec(v),
            ProjForm::Basis(s) => {
                let mut out = vec![ZERO; v.len()];
                for &i in s {
                    out[i] = v[i];
                }
                out
            }
        }
    }

    /// `self ⊗ I_k`.
    pub fn tensor_identity(&self, k: usize) -> Projector {
        match &self.form {
            ProjForm::Dense(g) => Projector::dense(g.tensor_identity(k)),
            ProjForm::Basis(s) => Projector::basis(
                self.dim * k,
                s.iter()
                    .flat_map(|&i| (0..k).map(move |a| i * k + a))
                    .collect(),
            ),
        }
    }

    /// `[extra] ⊕ self`, where `extra` says whether the new leading basis
    /// state lies in the range.
    pub fn with_leading(&self, extra: bool) -> Projector {
        match &self.form {
            ProjForm::Dense(g) => {
                let mut h = g.with_leading_identity();
                if !extra {
                    h.set(0, 0, ZERO);
                }
                Projector::dense(h)
            }
            ProjForm::Basis(s) => {
                let mut sup: Vec<usize> = s.iter().map(|i| i + 1).collect();
                if extra {
                    sup.push(0);
                }
                Projector::basis(self.dim + 1, sup)
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
struct MeasurementDoc {
    projectors: Vec<Projector>,
    labels: Vec<u64>,
}

impl TryFrom<MeasurementDoc> for ProjectiveMeasurement {
    type Error = QError;
    fn try_from(d: MeasurementDoc) -> Result<Self, QError> {
        ProjectiveMeasurement::new(d.projectors, d.labels, &TolerancePolicy::default())
    }
}

impl From<ProjectiveMeasurement> for MeasurementDoc {
    fn from(m: ProjectiveMeasurement) -> Self {
        MeasurementDoc {
            projectors: m.projectors,
            labels: m.labels,
        }
    }
}

/// A complete family of orthogonal projectors with outcome labels.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasurementDoc", into = "MeasurementDoc")]
pub struct ProjectiveMeasurement {
    dim: usize,
    projectors: Vec<Projector>,
    labels: Vec<u64>,
}

impl fmt::Debug for ProjectiveMeasurement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Measurement(dim {}, labels {:?})", self.dim, self.labels)
    }
}

impl ProjectiveMeasurement {
    /// Validates idempotence, hermiticity and completeness within `tol.tol_unitary`.
    pub fn new(
        projectors: Vec<Projector>,
        labels: Vec<u64>,
        tol: &TolerancePolicy,
    ) -> Result<Self, QError> {
        let Some(first) = projectors.first() else {
            return Err(QError::InvalidMeasurement("no projectors".into()));
        };
        let dim = first.dim();
        if labels.len() != projectors.len() {
            return Err(QError::InvalidMeasurement(
                "label count differs from projector count".into(),
            ));
        }
        if projectors.iter().any(|p| p.dim() != dim) {
            return Err(QError::InvalidMeasurement(
                "projector dimensions differ".into(),
            ));
        }
        let all_basis = projectors
            .iter()
            .all(|p| matches!(p.form, ProjForm::Basis(_)));
        if all_basis {
            let mut count = vec![0u32; dim];
            for p in &projectors {
                if let ProjForm::Basis(s) = &p.form {
                    for &i in s {
                        if i >= dim {
                            return Err(QError::InvalidMeasurement(
                                "basis index out of range".into(),
                            ));
                        }
                        count[i] += 1;
                    }
                }
            }
            if count.iter().any(|&c| c != 1) {
                return Err(QError::InvalidMeasurement(
                    "basis projectors must partition the basis".into(),
                ));
            }
        } else {
            let mut sum = Grid::zeros(dim);
            for p in &projectors {
                let g = p.to_grid();
                if g.matmul(&g).max_deviation(&g) > tol.tol_unitary {
                    return Err(QError::InvalidMeasurement(
                        "projector is not idempotent".into(),
                    ));
                }
                if g.adjoint().max_deviation(&g) > tol.tol_unitary {
                    return Err(QError::InvalidMeasurement(
                        "projector is not hermitian".into(),
                    ));
                }
                sum = sum.add(&g);
            }
            if sum.max_deviation(&Grid::identity(dim)) > tol.tol_unitary {
                return Err(QError::InvalidMeasurement(
                    "projectors do not sum to identity".into(),
                ));
            }
        }
        Ok(Self {
            dim,
            projectors,
            labels,
        })
    }

    /// Full computational-basis measurement; outcome `k` has label `k`.
    pub fn computational(dim: usize) -> Self {
        Self {
            dim,
            projectors: (0..dim).map(|i| Projector::basis(dim, vec![i])).collect(),
            labels: (0..dim as u64).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> &[u64] {
        &self.labels
    }

    pub fn projectors(&self) -> &[Projector] {
        &self.projectors
    }

    pub fn outcome_count(&self) -> usize {
        self.projectors.len()
    }

    pub fn map_projectors(&self, f: impl Fn(&Projector) -> Projector) -> ProjectiveMeasurement {
        let projectors: Vec<Projector> = self.projectors.iter().map(f).collect();
        ProjectiveMeasurement {
            dim: projectors[0].dim(),
            projectors,
            labels: self.labels.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub label: u64,
    pub probability: f64,
    /// Renormalized `P v / ‖P v‖`; `None` when the probability is below `tol_prob`.
    pub post_state: Option<StateVector>,
}

/// Outcome probabilities `‖P_i v‖²` clamped into `[0, 1]`, with post-measurement states.
pub fn measure(
    m: &ProjectiveMeasurement,
    v: &StateVector,
    tol: &TolerancePolicy,
) -> Result<Vec<Outcome>, QError> {
    if m.dim != v.dim() {
        return Err(QError::DimensionMismatch {
            op: m.dim,
            state: v.dim(),
        });
    }
    let mut out = Vec::with_capacity(m.projectors.len());
    let mut total = 0.0;
    for (p, &label) in m.projectors.iter().zip(&m.labels) {
        let projected = p.apply(&v.amps);
        let prob: f64 = projected.iter().map(|a| a.norm_sqr()).sum();
        total += prob;
        let post_state = (prob >= tol.tol_prob).then(|| {
            let s = 1.0 / prob.sqrt();
            StateVector {
                amps: projected.into_iter().map(|a| a * s).collect(),
            }
        });
        out.push(Outcome {
            label,
            probability: prob.clamp(0.0, 1.0),
            post_state,
        });
    }
    if (total - 1.0).abs() > tol.tol_prob.max(tol.tol_norm) * 10.0 {
        return Err(QError::InvalidState(format!(
            "measured state has squared norm {total}"
        )));
    }
    Ok(out)
}
