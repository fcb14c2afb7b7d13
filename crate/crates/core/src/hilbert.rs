//! Finite-dimensional Hilbert-space primitives.
//!
//! Composite states are ordered `mode1 ⊗ mode2 ⊗ qubit`, so the basis state
//! `|n1, n2, s⟩` sits at index `(n1 * d2 + n2) * 2 + s`, with `s = 0` the
//! excited state `|e⟩` and `s = 1` the ground state `|g⟩`.

use std::ops::{Add, Mul, Sub};

use ndarray::{linalg::kron, s, Array1, Array2, Axis, ShapeBuilder};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Qubit index of the excited state.
pub const EXCITED: usize = 0;
/// Qubit index of the ground state.
pub const GROUND: usize = 1;

/// `e^{iπk}` for integer `k`, evaluated exactly.
#[inline]
pub fn parity_sign(k: i64) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// The space an operator or state acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Space {
    /// A single truncated oscillator (one vibrational mode, or a para-Bose mode).
    Oscillator(usize),
    Qubit,
    /// `mode1 ⊗ mode2` with the given truncations.
    TwoMode(usize, usize),
    /// `mode1 ⊗ mode2 ⊗ qubit`.
    Composite(usize, usize),
    Generic(usize),
}

impl Space {
    pub fn dim(&self) -> usize {
        match *self {
            Space::Oscillator(d) | Space::Generic(d) => d,
            Space::Qubit => 2,
            Space::TwoMode(d1, d2) => d1 * d2,
            Space::Composite(d1, d2) => d1 * d2 * 2,
        }
    }

    /// Fock truncations of the bosonic factors, if any.
    pub fn mode_dims(&self) -> Vec<usize> {
        match *self {
            Space::Oscillator(d) => vec![d],
            Space::TwoMode(d1, d2) | Space::Composite(d1, d2) => vec![d1, d2],
            Space::Qubit | Space::Generic(_) => Vec::new(),
        }
    }

    fn product(factors: &[Space]) -> Space {
        let dim = factors.iter().map(Space::dim).product();
        match factors {
            [Space::Oscillator(d1), Space::Oscillator(d2), Space::Qubit] => {
                Space::Composite(*d1, *d2)
            }
            [Space::TwoMode(d1, d2), Space::Qubit] => Space::Composite(*d1, *d2),
            [Space::Oscillator(d1), Space::Oscillator(d2)] => Space::TwoMode(*d1, *d2),
            [single] => *single,
            _ => Space::Generic(dim),
        }
    }
}

/// Index of `|n1, n2, s⟩` in the composite basis.
#[inline]
pub fn composite_index(d2: usize, n1: usize, n2: usize, qubit: usize) -> usize {
    (n1 * d2 + n2) * 2 + qubit
}

/// Index of `|n1, n2⟩` in the two-mode basis.
#[inline]
pub fn two_mode_index(d2: usize, n1: usize, n2: usize) -> usize {
    n1 * d2 + n2
}

/// Dense complex operator.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    mat: Array2<C64>,
    space: Space,
}

impl Operator {
    pub fn new(mat: Array2<C64>, space: Space) -> Result<Self> {
        let (r, c) = mat.dim();
        if r != c {
            return Err(Error::InvalidDimension(format!(
                "operator matrix is {r}x{c}"
            )));
        }
        if r != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: r,
            });
        }
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidDimension(
                "operator has non-finite entries".into(),
            ));
        }
        Ok(Operator { mat, space })
    }

    pub(crate) fn from_parts(mat: Array2<C64>, space: Space) -> Self {
        debug_assert_eq!(mat.nrows(), space.dim());
        Operator { mat, space }
    }

    pub fn identity(space: Space) -> Self {
        Operator {
            mat: Array2::eye(space.dim()),
            space,
        }
    }

    pub fn zeros(space: Space) -> Self {
        let d = space.dim();
        Operator {
            mat: Array2::zeros((d, d)),
            space,
        }
    }

    pub fn diagonal(values: &[f64], space: Space) -> Result<Self> {
        if values.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: values.len(),
            });
        }
        let diag: Array1<C64> = values.iter().map(|&v| C64::new(v, 0.0)).collect();
        Ok(Operator {
            mat: Array2::from_diag(&diag),
            space,
        })
    }

    pub fn mat(&self) -> &Array2<C64> {
        &self.mat
    }

    pub fn into_mat(self) -> Array2<C64> {
        self.mat
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn with_space(mut self, space: Space) -> Result<Self> {
        if space.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: space.dim(),
            });
        }
        self.space = space;
        Ok(self)
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.mat[[row, col]]
    }

    pub fn dagger(&self) -> Operator {
        Operator {
            mat: self.mat.t().mapv(|z| z.conj()),
            space: self.space,
        }
    }

    pub fn dot(&self, other: &Operator) -> Result<Operator> {
        self.check_dim(other.dim())?;
        Ok(Operator {
            mat: self.mat.dot(&other.mat),
            space: self.space,
        })
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        self.check_dim(psi.dim())?;
        Ok(StateVector {
            amps: self.mat.dot(&psi.amps),
            space: self.space,
        })
    }

    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        Ok(&self.dot(other)? - &other.dot(self)?)
    }

    pub fn anticommutator(&self, other: &Operator) -> Result<Operator> {
        Ok(&self.dot(other)? + &other.dot(self)?)
    }

    /// `U · self · U†`.
    pub fn conjugated_by(&self, u: &Operator) -> Result<Operator> {
        u.dot(self)?.dot(&u.dagger())
    }

    pub fn max_abs(&self) -> f64 {
        self.mat.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim(), other.dim(), "max_abs_diff: dimension mismatch");
        self.mat
            .iter()
            .zip(other.mat.iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    /// `max |H - H†|`.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.dim();
        let mut r: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                r = r.max((self.mat[[i, j]] - self.mat[[j, i]].conj()).norm());
            }
        }
        r
    }

    /// `max |U U† - 1|`.
    pub fn unitarity_residual(&self) -> f64 {
        let uu = self.mat.dot(&self.mat.t().mapv(|z| z.conj()));
        let mut r: f64 = 0.0;
        for ((i, j), z) in uu.indexed_iter() {
            let target = if i == j { ONE } else { ZERO };
            r = r.max((z - target).norm());
        }
        r
    }

    /// Max-abs entry restricted to rows and columns whose index satisfies `keep`.
    pub fn max_abs_restricted(&self, keep: impl Fn(usize) -> bool) -> f64 {
        let idx: Vec<usize> = (0..self.dim()).filter(|&i| keep(i)).collect();
        let mut r: f64 = 0.0;
        for &i in &idx {
            for &j in &idx {
                r = r.max(self.mat[[i, j]].norm());
            }
        }
        r
    }

    /// Submatrix on the given basis indices.
    pub fn restrict(&self, indices: &[usize]) -> Operator {
        let n = indices.len();
        let mut m = Array2::zeros((n, n));
        for (a, &i) in indices.iter().enumerate() {
            for (b, &j) in indices.iter().enumerate() {
                m[[a, b]] = self.mat[[i, j]];
            }
        }
        Operator {
            mat: m,
            space: Space::Generic(n),
        }
    }

    /// Embeds a two-mode operator into the composite space as `op ⊗ 1_qubit`.
    pub fn embed_two_mode(&self) -> Result<Operator> {
        match self.space {
            Space::TwoMode(..) => tensor(&[self, &Operator::identity(Space::Qubit)]),
            other => Err(Error::InvalidDimension(format!(
                "expected a two-mode operator, got {other:?}"
            ))),
        }
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found,
            });
        }
        Ok(())
    }
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator add: dimension mismatch");
        Operator {
            mat: &self.mat + &rhs.mat,
            space: self.space,
        }
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator sub: dimension mismatch");
        Operator {
            mat: &self.mat - &rhs.mat,
            space: self.space,
        }
    }
}

impl Mul<&Operator> for f64 {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator {
            mat: rhs.mat.mapv(|z| z * self),
            space: rhs.space,
        }
    }
}

impl Mul<&Operator> for C64 {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator {
            mat: rhs.mat.mapv(|z| z * self),
            space: rhs.space,
        }
    }
}

/// Complex amplitude vector.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: Array1<C64>,
    space: Space,
}

impl StateVector {
    pub fn new(amps: Array1<C64>, space: Space) -> Result<Self> {
        if amps.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: amps.len(),
            });
        }
        Ok(StateVector { amps, space })
    }

    /// Basis vector `|index⟩`.
    pub fn basis(index: usize, space: Space) -> Result<Self> {
        let d = space.dim();
        if index >= d {
            return Err(Error::InvalidDimension(format!(
                "basis index {index} outside dimension {d}"
            )));
        }
        let mut amps = Array1::zeros(d);
        amps[index] = ONE;
        Ok(StateVector { amps, space })
    }

    /// `|n1, n2, s⟩` in the composite space.
    pub fn composite_fock(
        n1: usize,
        n2: usize,
        qubit: usize,
        d1: usize,
        d2: usize,
    ) -> Result<Self> {
        if n1 >= d1 || n2 >= d2 || qubit > 1 {
            return Err(Error::InvalidDimension(format!(
                "|{n1},{n2},{qubit}⟩ outside dims ({d1},{d2})"
            )));
        }
        Self::basis(composite_index(d2, n1, n2, qubit), Space::Composite(d1, d2))
    }

    pub fn amps(&self) -> &Array1<C64> {
        &self.amps
    }

    pub fn into_amps(self) -> Array1<C64> {
        self.amps
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Physical states have unit norm to 1e-12.
    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() < 1e-12
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            self.amps.mapv_inplace(|z| z / n);
        }
        self
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    pub fn with_space(mut self, space: Space) -> Result<Self> {
        if space.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: space.dim(),
            });
        }
        self.space = space;
        Ok(self)
    }

    pub fn to_density(&self) -> DensityMatrix {
        let n = self.dim();
        let mut m = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                m[[i, j]] = self.amps[i] * self.amps[j].conj();
            }
        }
        DensityMatrix {
            mat: m,
            space: self.space,
        }
    }
}

/// Validated density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    mat: Array2<C64>,
    space: Space,
}

impl DensityMatrix {
    /// Validates Hermiticity (1e-12), unit trace (1e-10) and positivity (-1e-10).
    pub fn new(mat: Array2<C64>, space: Space) -> Result<Self> {
        let op = Operator::new(mat, space)?;
        let herm = op.hermiticity_residual();
        if herm > 1e-12 {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian (residual {herm:e})"
            )));
        }
        let tr: C64 = op.mat.diag().sum();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::InvalidDensityMatrix(format!(
                "trace {tr} differs from 1"
            )));
        }
        let (evals, _) = eigh_hermitian(&op.mat)?;
        if let Some(min) = evals.iter().cloned().reduce(f64::min) {
            if min < -1e-10 {
                return Err(Error::InvalidDensityMatrix(format!(
                    "negative eigenvalue {min:e}"
                )));
            }
        }
        Ok(DensityMatrix { mat: op.mat, space })
    }

    pub fn mat(&self) -> &Array2<C64> {
        &self.mat
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.mat.diag().sum()
    }

    pub fn expectation(&self, op: &Operator) -> Result<C64> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: op.dim(),
            });
        }
        Ok(self.mat.dot(op.mat()).diag().sum())
    }
}

/// Eigendecomposition `H = V diag(λ) V†` of a Hermitian matrix, eigenvalues ascending.
///
/// LAPACK sees a row-major complex matrix as its transpose, which for a
/// Hermitian matrix is the conjugate; a column-major copy avoids that.
pub fn eigh_hermitian(mat: &Array2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    let mut fortran = Array2::zeros(mat.raw_dim().f());
    fortran.assign(mat);
    Ok(fortran.eigh(UPLO::Upper)?)
}

/// Truncated annihilation operator, `⟨m|a|n⟩ = √n δ_{m,n-1}`.
pub fn annihilation(dim: usize) -> Result<Operator> {
    if dim < 2 {
        return Err(Error::InvalidDimension(format!(
            "annihilation needs dim >= 2, got {dim}"
        )));
    }
    let mut m = Array2::zeros((dim, dim));
    for n in 1..dim {
        m[[n - 1, n]] = C64::new((n as f64).sqrt(), 0.0);
    }
    Ok(Operator {
        mat: m,
        space: Space::Oscillator(dim),
    })
}

pub fn number(dim: usize) -> Result<Operator> {
    let values: Vec<f64> = (0..dim).map(|n| n as f64).collect();
    Operator::diagonal(&values, Space::Oscillator(dim))
}

/// Single-mode parity `e^{iπ n}`.
pub fn parity(dim: usize) -> Result<Operator> {
    let values: Vec<f64> = (0..dim).map(|n| parity_sign(n as i64)).collect();
    Operator::diagonal(&values, Space::Oscillator(dim))
}

/// Qubit operators in the `(|e⟩, |g⟩)` basis.
pub mod qubit {
    use super::*;

    fn from_rows(rows: [[C64; 2]; 2]) -> Operator {
        let m = Array2::from_shape_fn((2, 2), |(i, j)| rows[i][j]);
        Operator::from_parts(m, Space::Qubit)
    }

    pub fn sigma_z() -> Operator {
        from_rows([[ONE, ZERO], [ZERO, -ONE]])
    }

    pub fn sigma_x() -> Operator {
        from_rows([[ZERO, ONE], [ONE, ZERO]])
    }

    pub fn sigma_y() -> Operator {
        from_rows([[ZERO, -I], [I, ZERO]])
    }

    /// `σ₊ = |e⟩⟨g|`.
    pub fn sigma_plus() -> Operator {
        from_rows([[ZERO, ONE], [ZERO, ZERO]])
    }

    /// `σ₋ = |g⟩⟨e|`.
    pub fn sigma_minus() -> Operator {
        from_rows([[ZERO, ZERO], [ONE, ZERO]])
    }

    pub fn projector(state: usize) -> Operator {
        let mut m = Array2::zeros((2, 2));
        m[[state, state]] = ONE;
        Operator::from_parts(m, Space::Qubit)
    }

    /// `e^{iθσ_y} = cos θ + i sin θ σ_y`.
    pub fn rotation_y(theta: f64) -> Operator {
        let (s, c) = theta.sin_cos();
        from_rows([
            [C64::new(c, 0.0), C64::new(s, 0.0)],
            [C64::new(-s, 0.0), C64::new(c, 0.0)],
        ])
    }
}

/// Kronecker product in the given order.
pub fn tensor(ops: &[&Operator]) -> Result<Operator> {
    let (first, rest) = ops
        .split_first()
        .ok_or_else(|| Error::InvalidDimension("tensor of an empty list".into()))?;
    let mut mat = first.mat.clone();
    for op in rest {
        mat = kron(&mat, &op.mat);
    }
    let spaces: Vec<Space> = ops.iter().map(|o| o.space).collect();
    Ok(Operator {
        mat,
        space: Space::product(&spaces),
    })
}

/// Tensor product of state vectors, same ordering as [`tensor`].
pub fn tensor_states(states: &[&StateVector]) -> Result<StateVector> {
    let (first, rest) = states
        .split_first()
        .ok_or_else(|| Error::InvalidDimension("tensor of an empty list".into()))?;
    let mut amps = first.amps.clone();
    for s in rest {
        let mut next = Array1::zeros(amps.len() * s.dim());
        for (i, a) in amps.iter().enumerate() {
            for (j, b) in s.amps.iter().enumerate() {
                next[i * s.dim() + j] = a * b;
            }
        }
        amps = next;
    }
    let spaces: Vec<Space> = states.iter().map(|s| s.space).collect();
    Ok(StateVector {
        amps,
        space: Space::product(&spaces),
    })
}

/// Traces out mode 2 and the qubit, leaving the `d1 × d1` reduced state of mode 1.
pub fn partial_trace_first_mode(
    rho: &DensityMatrix,
    dims: (usize, usize, usize),
) -> Result<DensityMatrix> {
    let (d1, d2, dq) = dims;
    let rest = d2 * dq;
    if rho.dim() != d1 * rest {
        return Err(Error::DimensionMismatch {
            expected: d1 * rest,
            found: rho.dim(),
        });
    }
    let mut out = Array2::zeros((d1, d1));
    for a in 0..d1 {
        for b in 0..d1 {
            let block = rho
                .mat
                .slice(s![a * rest..(a + 1) * rest, b * rest..(b + 1) * rest]);
            out[[a, b]] = block.diag().sum();
        }
    }
    DensityMatrix::new(out, Space::Oscillator(d1))
}

/// Reduced mode-1 state of a pure composite state, without forming the full density matrix.
pub fn reduced_first_mode(psi: &StateVector, dims: (usize, usize, usize)) -> Result<DensityMatrix> {
    let (d1, d2, dq) = dims;
    let rest = d2 * dq;
    if psi.dim() != d1 * rest {
        return Err(Error::DimensionMismatch {
            expected: d1 * rest,
            found: psi.dim(),
        });
    }
    let m = psi
        .amps
        .view()
        .into_shape((d1, rest))
        .map_err(|e| Error::Linalg(e.to_string()))?;
    let rho = m.dot(&m.t().mapv(|z| z.conj()));
    DensityMatrix::new(rho, Space::Oscillator(d1))
}

/// Coherent state `e^{-|α|²/2} Σ αⁿ/√n! |n⟩`, renormalized after truncation.
pub fn coherent_state(alpha: C64, dim: usize) -> Result<StateVector> {
    if dim == 0 {
        return Err(Error::InvalidDimension(
            "coherent state needs dim >= 1".into(),
        ));
    }
    if alpha.norm_sqr() > dim as f64 / 4.0 {
        log::warn!(
            "coherent state |α|² = {} exceeds dim/4 = {}; truncation may be significant",
            alpha.norm_sqr(),
            dim as f64 / 4.0
        );
    }
    let mut amps = Array1::zeros(dim);
    let mut term = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    amps[0] = term;
    for n in 1..dim {
        term = term * alpha / (n as f64).sqrt();
        amps[n] = term;
    }
    Ok(StateVector {
        amps,
        space: Space::Oscillator(dim),
    }
    .normalized())
}

/// `⟨ψ|O|ψ⟩`.
pub fn expectation(op: &Operator, psi: &StateVector) -> Result<C64> {
    let o_psi = op.apply(psi)?;
    psi.inner(&o_psi)
}

/// Marginal populations of each bosonic mode, indexed `[mode][level]`.
pub fn mode_populations(psi: &StateVector) -> Vec<Vec<f64>> {
    let probs: Vec<f64> = psi.amps.iter().map(|z| z.norm_sqr()).collect();
    match psi.space {
        Space::Oscillator(_) | Space::Generic(_) => vec![probs],
        Space::Qubit => Vec::new(),
        Space::TwoMode(d1, d2) | Space::Composite(d1, d2) => {
            let dq = psi.dim() / (d1 * d2);
            let arr = Array1::from(probs)
                .into_shape((d1, d2, dq))
                .expect("shape matches space");
            let p1 = arr.sum_axis(Axis(2)).sum_axis(Axis(1)).to_vec();
            let p2 = arr.sum_axis(Axis(2)).sum_axis(Axis(0)).to_vec();
            vec![p1, p2]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fock(n: usize, dim: usize) -> StateVector {
        StateVector::basis(n, Space::Oscillator(dim)).unwrap()
    }

    #[test]
    fn annihilation_ladder() {
        let a = annihilation(5).unwrap();
        let out = a.apply(&fock(1, 5)).unwrap();
        assert!(out.max_abs_diff(&fock(0, 5)) < 1e-15);
        assert!(a.apply(&fock(0, 5)).unwrap().norm_sqr() == 0.0);
        assert!((a.get(2, 3).re - 3f64.sqrt()).abs() < 1e-15);
        assert!(annihilation(1).is_err());
    }

    #[test]
    fn truncated_commutator_is_identity_below_top_level() {
        let dim = 12;
        let a = annihilation(dim).unwrap();
        let c = a.commutator(&a.dagger()).unwrap();
        let dev = &c - &Operator::identity(c.space());
        assert!(dev.max_abs_restricted(|i| i < dim - 1) < 1e-12);
        assert!(dev.get(dim - 1, dim - 1).norm() > 1.0);
    }

    #[test]
    fn tensor_dims_and_ordering() {
        let i2 = Operator::identity(Space::Oscillator(2));
        let i4 = tensor(&[&i2, &i2]).unwrap();
        assert_eq!(i4.max_abs_diff(&Operator::identity(Space::Generic(4))), 0.0);
        let a3 = annihilation(3).unwrap();
        let a4 = annihilation(4).unwrap();
        assert_eq!(tensor(&[&a3, &a4]).unwrap().dim(), 12);

        let id = Operator::identity(Space::Oscillator(3));
        let a1 = tensor(&[&a3, &id]).unwrap();
        let ket10 = StateVector::basis(two_mode_index(3, 1, 0), Space::TwoMode(3, 3)).unwrap();
        let ket00 = StateVector::basis(two_mode_index(3, 0, 0), Space::TwoMode(3, 3)).unwrap();
        assert!(a1.apply(&ket10).unwrap().max_abs_diff(&ket00) < 1e-15);

        let sz = qubit::sigma_z();
        let full = tensor(&[&a3, &id, &sz]).unwrap();
        assert_eq!(full.space(), Space::Composite(3, 3));
        // |1,0,g⟩ -> -|0,0,g⟩
        let v = full
            .apply(&StateVector::composite_fock(1, 0, GROUND, 3, 3).unwrap())
            .unwrap();
        assert!((v.amps()[composite_index(3, 0, 0, GROUND)] + ONE).norm() < 1e-15);
    }

    #[test]
    fn partial_trace_of_product_and_bell_states() {
        let (d1, d2) = (3, 2);
        let psi1 = StateVector::new(
            Array1::from(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8), ZERO]),
            Space::Oscillator(d1),
        )
        .unwrap();
        let vac = fock(0, d2);
        let g = StateVector::basis(GROUND, Space::Qubit).unwrap();
        let prod = tensor_states(&[&psi1, &vac, &g]).unwrap();
        let red = partial_trace_first_mode(&prod.to_density(), (d1, d2, 2)).unwrap();
        assert!((red.mat() - psi1.to_density().mat())
            .iter()
            .all(|z| z.norm() < 1e-12));

        // (|0,0⟩ + |1,1⟩)/√2 with the qubit fixed in |g⟩
        let mut amps = Array1::zeros(2 * 2 * 2);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        amps[composite_index(2, 0, 0, GROUND)] = C64::new(r, 0.0);
        amps[composite_index(2, 1, 1, GROUND)] = C64::new(r, 0.0);
        let bell = StateVector::new(amps, Space::Composite(2, 2)).unwrap();
        let red = partial_trace_first_mode(&bell.to_density(), (2, 2, 2)).unwrap();
        assert!((red.mat()[[0, 0]].re - 0.5).abs() < 1e-12);
        assert!((red.mat()[[1, 1]].re - 0.5).abs() < 1e-12);
        assert!(red.mat()[[0, 1]].norm() < 1e-12);

        let pure_route = reduced_first_mode(&bell, (2, 2, 2)).unwrap();
        assert!((pure_route.mat() - red.mat())
            .iter()
            .all(|z| z.norm() < 1e-14));
        assert!(partial_trace_first_mode(&bell.to_density(), (3, 2, 2)).is_err());
    }

    #[test]
    fn coherent_state_moments() {
        let vac = coherent_state(ZERO, 8).unwrap();
        assert!(vac.max_abs_diff(&fock(0, 8)) < 1e-15);

        let psi = coherent_state(ONE, 32).unwrap();
        assert!(psi.is_normalized());
        let n = expectation(&number(32).unwrap(), &psi).unwrap();
        assert!((n.re - 1.0).abs() < 1e-10);

        let alpha = C64::new(0.5, 0.0);
        let psi = coherent_state(alpha, 32).unwrap();
        let a = expectation(&annihilation(32).unwrap(), &psi).unwrap();
        assert!((a - alpha).norm() < 1e-10);
    }

    #[test]
    fn expectation_of_number() {
        let n = number(4).unwrap();
        assert_eq!(expectation(&n, &fock(0, 4)).unwrap(), ZERO);
        assert_eq!(expectation(&n, &fock(1, 4)).unwrap(), ONE);
        assert!(expectation(&n, &fock(1, 5)).is_err());
    }

    #[test]
    fn density_matrix_validation() {
        let bad = Array2::from_diag(&Array1::from(vec![C64::new(1.2, 0.0), C64::new(-0.2, 0.0)]));
        assert!(DensityMatrix::new(bad, Space::Qubit).is_err());
        let not_unit = Array2::from_diag(&Array1::from(vec![ONE, ONE]));
        assert!(DensityMatrix::new(not_unit, Space::Qubit).is_err());
    }

    #[test]
    fn eigh_reconstructs_complex_hermitian() {
        let m = Array2::from_shape_vec(
            (2, 2),
            vec![
                ONE,
                C64::new(0.3, -1.0),
                C64::new(0.3, 1.0),
                C64::new(2.0, 0.0),
            ],
        )
        .unwrap();
        let (evals, vecs) = eigh_hermitian(&m).unwrap();
        let lambda = Array2::from_diag(&evals.mapv(|x| C64::new(x, 0.0)));
        let back = vecs.dot(&lambda).dot(&vecs.t().mapv(|z| z.conj()));
        assert!((&back - &m).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn exact_parity_signs() {
        assert_eq!(parity_sign(0), 1.0);
        assert_eq!(parity_sign(3), -1.0);
        assert_eq!(parity_sign(-1), -1.0);
        let r = qubit::rotation_y(0.3);
        assert!(r.unitarity_residual() < 1e-15);
    }
}
