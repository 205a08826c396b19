//! Dense operator algebra on truncated tensor-product spaces.
//!
//! Basis ordering is a stable contract: factors are laid out in declaration
//! order with the first factor varying slowest. The qubit factor always comes
//! first with index 0 = |g⟩ and index 1 = |e⟩, followed by Fock factors with
//! index n = |n⟩.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;

use crate::{Error, Result, C64};

/// Elementwise tolerance for Hermitian-flagged operators.
pub const OPERATOR_HERMITIAN_TOL: f64 = 1e-12;
/// Elementwise Hermiticity tolerance for density matrices.
pub const STATE_HERMITIAN_TOL: f64 = 1e-10;
/// Allowed deviation of a density-matrix trace from one.
pub const STATE_TRACE_TOL: f64 = 1e-9;
/// Smallest admissible eigenvalue of a density matrix.
pub const STATE_MIN_EIGENVALUE: f64 = -1e-8;

/// Ordered list of tensor-factor dimensions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpaceDims(Vec<usize>);

impl SpaceDims {
    pub fn new(factors: Vec<usize>) -> Result<Self> {
        if factors.is_empty() || factors.iter().any(|&d| d < 2) {
            return Err(Error::InvalidDims(factors));
        }
        Ok(Self(factors))
    }

    pub fn qubit() -> Self {
        Self(vec![2])
    }

    pub fn fock(cutoff: usize) -> Result<Self> {
        check_cutoff(cutoff)?;
        Ok(Self(vec![cutoff]))
    }

    /// The reduced-model space: qubit ⊗ one Fock mode.
    pub fn qubit_fock(cutoff: usize) -> Result<Self> {
        check_cutoff(cutoff)?;
        Ok(Self(vec![2, cutoff]))
    }

    pub fn factors(&self) -> &[usize] {
        &self.0
    }

    pub fn total(&self) -> usize {
        self.0.iter().product()
    }

    pub fn concat(&self, other: &SpaceDims) -> SpaceDims {
        let mut f = self.0.clone();
        f.extend_from_slice(&other.0);
        SpaceDims(f)
    }

    /// Flat basis index of a product state given one label per factor.
    pub fn index(&self, labels: &[usize]) -> Result<usize> {
        if labels.len() != self.0.len() || labels.iter().zip(&self.0).any(|(l, d)| l >= d) {
            return Err(Error::InvalidParameter(format!(
                "labels {labels:?} do not address a basis state of {:?}",
                self.0
            )));
        }
        Ok(labels
            .iter()
            .zip(&self.0)
            .fold(0, |acc, (&l, &d)| acc * d + l))
    }

    /// Inverse of [`SpaceDims::index`].
    pub fn labels(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.0.len()];
        for (slot, &d) in out.iter_mut().zip(&self.0).rev() {
            *slot = index % d;
            index /= d;
        }
        out
    }
}

fn check_cutoff(d: usize) -> Result<()> {
    if d < 2 {
        Err(Error::CutoffTooSmall(d))
    } else {
        Ok(())
    }
}

/// Computational basis state of the target qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QubitState {
    #[serde(alias = "g")]
    Ground,
    #[serde(alias = "e")]
    Excited,
}

impl QubitState {
    pub fn index(self) -> usize {
        match self {
            QubitState::Ground => 0,
            QubitState::Excited => 1,
        }
    }

    /// +1 for |e⟩, −1 for |g⟩.
    pub fn sign(self) -> f64 {
        match self {
            QubitState::Ground => -1.0,
            QubitState::Excited => 1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            QubitState::Ground => "g",
            QubitState::Excited => "e",
        }
    }
}

/// Dense square matrix on a [`SpaceDims`] space.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    dims: SpaceDims,
    matrix: DMatrix<C64>,
    hermitian: bool,
}

impl Operator {
    pub fn new(dims: SpaceDims, matrix: DMatrix<C64>) -> Result<Self> {
        check_shape(&dims, &matrix)?;
        Ok(Self {
            dims,
            matrix,
            hermitian: false,
        })
    }

    /// Builds a Hermitian-flagged operator, rejecting matrices that deviate
    /// from their adjoint by more than [`OPERATOR_HERMITIAN_TOL`].
    pub fn hermitian(dims: SpaceDims, matrix: DMatrix<C64>) -> Result<Self> {
        Self::new(dims, matrix)?.into_hermitian()
    }

    pub fn zeros(dims: SpaceDims) -> Self {
        let n = dims.total();
        Self {
            dims,
            matrix: DMatrix::zeros(n, n),
            hermitian: true,
        }
    }

    pub fn identity(dims: SpaceDims) -> Self {
        let n = dims.total();
        Self {
            dims,
            matrix: DMatrix::identity(n, n),
            hermitian: true,
        }
    }

    /// Real diagonal operator.
    pub fn diagonal(dims: SpaceDims, diag: &[f64]) -> Result<Self> {
        let n = dims.total();
        if diag.len() != n {
            return Err(Error::ShapeMismatch {
                rows: diag.len(),
                cols: 1,
                dim: n,
            });
        }
        let matrix = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(diag[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        Ok(Self {
            dims,
            matrix,
            hermitian: true,
        })
    }

    pub fn dims(&self) -> &SpaceDims {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.matrix[(row, col)]
    }

    /// Largest elementwise deviation |M − M†|.
    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.matrix)
    }

    /// Verifies Hermiticity and sets the flag.
    pub fn into_hermitian(mut self) -> Result<Self> {
        let err = self.hermiticity_error();
        if err > OPERATOR_HERMITIAN_TOL {
            return Err(Error::NotHermitian(err));
        }
        self.hermitian = true;
        Ok(self)
    }

    pub fn adjoint(&self) -> Operator {
        Operator {
            dims: self.dims.clone(),
            matrix: self.matrix.adjoint(),
            hermitian: self.hermitian,
        }
    }

    pub fn scale_complex(&self, z: C64) -> Operator {
        Operator {
            dims: self.dims.clone(),
            matrix: &self.matrix * z,
            hermitian: self.hermitian && z.im == 0.0,
        }
    }

    /// [A, B] = AB − BA.
    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        same_dims(&self.dims, &other.dims)?;
        Operator::new(
            self.dims.clone(),
            &self.matrix * &other.matrix - &other.matrix * &self.matrix,
        )
    }

    /// Largest elementwise magnitude.
    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest absolute row sum, an upper bound on the spectral radius.
    pub fn max_row_sum(&self) -> f64 {
        self.matrix
            .row_iter()
            .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

fn check_shape(dims: &SpaceDims, m: &DMatrix<C64>) -> Result<()> {
    let n = dims.total();
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::ShapeMismatch {
            rows: m.nrows(),
            cols: m.ncols(),
            dim: n,
        });
    }
    Ok(())
}

fn same_dims(a: &SpaceDims, b: &SpaceDims) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch {
            expected: a.0.clone(),
            found: b.0.clone(),
        });
    }
    Ok(())
}

pub(crate) fn hermiticity_error(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in j..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

impl Add for &Operator {
    type Output = Operator;

    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dims, rhs.dims, "operator dimension mismatch in add");
        Operator {
            dims: self.dims.clone(),
            matrix: &self.matrix + &rhs.matrix,
            hermitian: self.hermitian && rhs.hermitian,
        }
    }
}

impl Add for Operator {
    type Output = Operator;

    fn add(self, rhs: Operator) -> Operator {
        &self + &rhs
    }
}

impl Sub for &Operator {
    type Output = Operator;

    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dims, rhs.dims, "operator dimension mismatch in sub");
        Operator {
            dims: self.dims.clone(),
            matrix: &self.matrix - &rhs.matrix,
            hermitian: self.hermitian && rhs.hermitian,
        }
    }
}

impl Neg for &Operator {
    type Output = Operator;

    fn neg(self) -> Operator {
        self * -1.0
    }
}

impl Mul for &Operator {
    type Output = Operator;

    /// Matrix product. The result is not Hermitian-flagged.
    fn mul(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dims, rhs.dims, "operator dimension mismatch in mul");
        Operator {
            dims: self.dims.clone(),
            matrix: &self.matrix * &rhs.matrix,
            hermitian: false,
        }
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;

    fn mul(self, rhs: f64) -> Operator {
        Operator {
            dims: self.dims.clone(),
            matrix: &self.matrix * C64::new(rhs, 0.0),
            hermitian: self.hermitian,
        }
    }
}

impl Mul<f64> for Operator {
    type Output = Operator;

    fn mul(self, rhs: f64) -> Operator {
        &self * rhs
    }
}

/// Fock-space lowering operator with ⟨n−1|a|n⟩ = √n.
pub fn ladder(cutoff: usize) -> Result<Operator> {
    let dims = SpaceDims::fock(cutoff)?;
    let mut m = DMatrix::zeros(cutoff, cutoff);
    for n in 1..cutoff {
        m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    Operator::new(dims, m)
}

/// Number operator a†a on a single Fock factor.
pub fn number(cutoff: usize) -> Result<Operator> {
    let diag: Vec<f64> = (0..cutoff).map(|n| n as f64).collect();
    Operator::diagonal(SpaceDims::fock(cutoff)?, &diag)
}

fn qubit_op(entries: [[f64; 2]; 2], hermitian: bool) -> Operator {
    let m = DMatrix::from_fn(2, 2, |i, j| C64::new(entries[i][j], 0.0));
    Operator {
        dims: SpaceDims::qubit(),
        matrix: m,
        hermitian,
    }
}

/// σ⁻ = |g⟩⟨e|.
pub fn sigma_minus() -> Operator {
    qubit_op([[0.0, 1.0], [0.0, 0.0]], false)
}

/// σ⁺ = |e⟩⟨g|.
pub fn sigma_plus() -> Operator {
    qubit_op([[0.0, 0.0], [1.0, 0.0]], false)
}

/// σ_z = |e⟩⟨e| − |g⟩⟨g|.
pub fn sigma_z() -> Operator {
    qubit_op([[-1.0, 0.0], [0.0, 1.0]], true)
}

/// σ_x = σ⁺ + σ⁻.
pub fn sigma_x() -> Operator {
    qubit_op([[0.0, 1.0], [1.0, 0.0]], true)
}

/// |s⟩⟨s| on the qubit.
pub fn qubit_projector(state: QubitState) -> Operator {
    let mut e = [[0.0; 2]; 2];
    e[state.index()][state.index()] = 1.0;
    qubit_op(e, true)
}

/// Kronecker product; the factor lists are concatenated.
pub fn kron(a: &Operator, b: &Operator) -> Operator {
    Operator {
        dims: a.dims.concat(&b.dims),
        matrix: a.matrix.kronecker(&b.matrix),
        hermitian: a.hermitian && b.hermitian,
    }
}

/// Places `op` on factor `position` of `dims`, identities elsewhere.
pub fn embed(op: &Operator, position: usize, dims: &SpaceDims) -> Result<Operator> {
    let factors = dims.factors();
    if position >= factors.len() || op.dims.factors() != [factors[position]] {
        return Err(Error::DimensionMismatch {
            expected: factors.get(position).map(|&d| vec![d]).unwrap_or_default(),
            found: op.dims.0.clone(),
        });
    }
    let mut out: Option<Operator> = None;
    for (k, &d) in factors.iter().enumerate() {
        let piece = if k == position {
            op.clone()
        } else {
            Operator::identity(SpaceDims(vec![d]))
        };
        out = Some(match out {
            None => piece,
            Some(acc) => kron(&acc, &piece),
        });
    }
    Ok(out.expect("dims are non-empty"))
}

/// Tr(ρ·obs).
pub fn expectation(rho: &DensityMatrix, obs: &Operator) -> Result<C64> {
    same_dims(&rho.dims, &obs.dims)?;
    Ok(trace_product(&rho.matrix, &obs.matrix))
}

pub(crate) fn trace_product(a: &DMatrix<C64>, b: &DMatrix<C64>) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Eigen-decomposition of a Hermitian operator, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Column k is the eigenvector of `values[k]`.
    pub vectors: DMatrix<C64>,
}

pub fn eig_hermitian(m: &Operator) -> Result<HermitianEigen> {
    if !m.hermitian {
        return Err(Error::NotHermitian(m.hermiticity_error()));
    }
    let eig = m.matrix.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let n = m.dim();
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(HermitianEigen { values, vectors })
}

/// Joint state of the simulated system.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dims: SpaceDims,
    matrix: DMatrix<C64>,
}

/// Numerical health of a density matrix.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct StateDiagnostics {
    pub trace_err: f64,
    pub hermiticity_err: f64,
    pub min_eig: f64,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(dims: SpaceDims, matrix: DMatrix<C64>) -> Result<Self> {
        check_shape(&dims, &matrix)?;
        let rho = Self { dims, matrix };
        let d = rho.diagnostics();
        if d.hermiticity_err > STATE_HERMITIAN_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (deviation {:.3e})",
                d.hermiticity_err
            )));
        }
        if d.trace_err > STATE_TRACE_TOL {
            return Err(Error::InvalidState(format!(
                "trace deviates from 1 by {:.3e}",
                d.trace_err
            )));
        }
        if d.min_eig < STATE_MIN_EIGENVALUE {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {:.3e}",
                d.min_eig
            )));
        }
        Ok(rho)
    }

    pub(crate) fn from_raw(dims: SpaceDims, matrix: DMatrix<C64>) -> Self {
        Self { dims, matrix }
    }

    /// |ψ⟩⟨ψ| for a normalized state vector.
    pub fn pure(dims: SpaceDims, psi: &[C64]) -> Result<Self> {
        let n = dims.total();
        if psi.len() != n {
            return Err(Error::ShapeMismatch {
                rows: psi.len(),
                cols: 1,
                dim: n,
            });
        }
        let m = DMatrix::from_fn(n, n, |i, j| psi[i] * psi[j].conj());
        Self::new(dims, m)
    }

    /// Product basis state addressed by one label per factor.
    pub fn basis(dims: SpaceDims, labels: &[usize]) -> Result<Self> {
        let k = dims.index(labels)?;
        let n = dims.total();
        let mut m = DMatrix::zeros(n, n);
        m[(k, k)] = C64::new(1.0, 0.0);
        Ok(Self { dims, matrix: m })
    }

    /// Mixture Σ p_k |k⟩⟨k| over product basis states.
    pub fn diagonal_mixture(dims: SpaceDims, weights: &[(Vec<usize>, f64)]) -> Result<Self> {
        let n = dims.total();
        let mut m = DMatrix::zeros(n, n);
        for (labels, p) in weights {
            let k = dims.index(labels)?;
            m[(k, k)] += C64::new(*p, 0.0);
        }
        Self::new(dims, m)
    }

    pub fn dims(&self) -> &SpaceDims {
        &self.dims
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn diagnostics(&self) -> StateDiagnostics {
        let herm = hermiticity_error(&self.matrix);
        let sym = (&self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0);
        let min_eig = sym
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        StateDiagnostics {
            trace_err: (self.trace() - C64::new(1.0, 0.0)).norm(),
            hermiticity_err: herm,
            min_eig,
        }
    }
}
