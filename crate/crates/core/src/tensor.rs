//! Dense complex linear algebra for qubit registers.
//!
//! All registers use big-endian qubit ordering: qubit 0 is the most
//! significant bit of a basis index, so `|q0 q1 … q(n-1)⟩` maps to the index
//! `q0·2^(n-1) + … + q(n-1)`. Every circuit constructor in this crate relies
//! on that convention.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{DfsError, Result};

pub type C64 = Complex64;

/// Largest register the dense kernels accept.
pub const MAX_QUBITS: usize = 12;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub(crate) fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(DfsError::NotPowerOfTwo(dim));
    }
    let n = dim.trailing_zeros() as usize;
    if n > MAX_QUBITS {
        return Err(DfsError::RegisterTooLarge { requested: n, max: MAX_QUBITS });
    }
    Ok(n)
}

fn check_targets(targets: &[usize], n: usize) -> Result<()> {
    if targets.is_empty() {
        return Err(DfsError::EmptyQubitSet);
    }
    for (i, &t) in targets.iter().enumerate() {
        if t >= n {
            return Err(DfsError::QubitOutOfRange { index: t, n });
        }
        if targets[..i].contains(&t) {
            return Err(DfsError::DuplicateQubit(t));
        }
    }
    Ok(())
}

/// Bit position (from the least significant end) of qubit `q` in an `n`-qubit index.
#[inline]
pub fn bit_of(q: usize, n: usize) -> usize {
    n - 1 - q
}

/// Value (0 or 1) of qubit `q` in basis index `idx`.
#[inline]
pub fn qubit_value(idx: usize, q: usize, n: usize) -> usize {
    (idx >> bit_of(q, n)) & 1
}

/// Precomputed index tables for acting with a `k`-qubit operator on chosen
/// qubits of an `n`-qubit register.
struct LocalIndex {
    bases: Vec<usize>,
    offsets: Vec<usize>,
}

impl LocalIndex {
    fn new(targets: &[usize], n: usize) -> Self {
        let k = targets.len();
        let mask: usize = targets.iter().map(|&t| 1usize << bit_of(t, n)).sum();
        let bases = (0..1usize << n).filter(|i| i & mask == 0).collect();
        let offsets = (0..1usize << k)
            .map(|l| {
                targets
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| (l >> (k - 1 - j)) & 1 == 1)
                    .map(|(_, &t)| 1usize << bit_of(t, n))
                    .sum()
            })
            .collect();
        LocalIndex { bases, offsets }
    }
}

/// Normalized state vector of a qubit register.
#[derive(Clone, Debug, PartialEq)]
pub struct Ket {
    amps: DVector<C64>,
}

impl Ket {
    /// Builds a ket from raw amplitudes and normalizes it.
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        qubits_for_dim(amps.len())?;
        let v = DVector::from_vec(amps);
        let norm = v.norm();
        if norm < 1e-300 {
            return Err(DfsError::ZeroNorm);
        }
        Ok(Ket { amps: v.unscale(norm) })
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::new(amps.iter().map(|&a| C64::new(a, 0.0)).collect())
    }

    /// Computational basis state `|index⟩` on `n` qubits.
    pub fn basis(n: usize, index: usize) -> Result<Self> {
        let dim = 1usize << n;
        qubits_for_dim(dim)?;
        if index >= dim {
            return Err(DfsError::DimensionMismatch { expected: dim, found: index });
        }
        let mut v = DVector::from_element(dim, ZERO);
        v[index] = ONE;
        Ok(Ket { amps: v })
    }

    /// Product state from a bit string, e.g. `[0, 1]` is `|01⟩`.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        let idx = bits.iter().fold(0usize, |acc, &b| (acc << 1) | (b as usize & 1));
        Self::basis(bits.len(), idx)
    }

    /// Single-qubit state `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`.
    pub fn bloch(theta: f64, phi: f64) -> Self {
        Ket {
            amps: DVector::from_vec(vec![
                C64::new((theta / 2.0).cos(), 0.0),
                C64::from_polar((theta / 2.0).sin(), phi),
            ]),
        }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn n_qubits(&self) -> usize {
        self.amps.len().trailing_zeros() as usize
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &Ket) -> C64 {
        self.amps.dotc(&other.amps)
    }

    pub fn fidelity(&self, other: &Ket) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn kron(&self, other: &Ket) -> Result<Ket> {
        qubits_for_dim(self.dim() * other.dim())?;
        Ok(Ket { amps: self.amps.kronecker(&other.amps) })
    }

    pub fn apply(&self, op: &DenseOperator) -> Result<Ket> {
        if op.dim() != self.dim() {
            return Err(DfsError::DimensionMismatch { expected: self.dim(), found: op.dim() });
        }
        Ok(Ket { amps: &op.m * &self.amps })
    }

    /// Applies a `k`-qubit operator to the listed qubits.
    pub fn apply_local(&self, op: &DenseOperator, targets: &[usize]) -> Result<Ket> {
        let n = self.n_qubits();
        check_targets(targets, n)?;
        if op.dim() != 1usize << targets.len() {
            return Err(DfsError::DimensionMismatch { expected: 1 << targets.len(), found: op.dim() });
        }
        let table = LocalIndex::new(targets, n);
        let mut out = self.amps.clone();
        let k = table.offsets.len();
        let mut buf = vec![ZERO; k];
        for &b in &table.bases {
            for (l, &o) in table.offsets.iter().enumerate() {
                buf[l] = self.amps[b + o];
            }
            for (r, &o) in table.offsets.iter().enumerate() {
                let mut acc = ZERO;
                for (c, v) in buf.iter().enumerate() {
                    acc += op.m[(r, c)] * v;
                }
                out[b + o] = acc;
            }
        }
        Ok(Ket { amps: out })
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix { m: &self.amps * self.amps.adjoint() }
    }

    /// Probabilities of the computational basis outcomes.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// Square complex matrix acting on a qubit register.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    m: DMatrix<C64>,
}

impl DenseOperator {
    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(DfsError::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        qubits_for_dim(m.nrows())?;
        Ok(DenseOperator { m })
    }

    /// Row-major construction from complex entries.
    pub fn from_rows(dim: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(DfsError::DimensionMismatch { expected: dim * dim, found: entries.len() });
        }
        Self::from_matrix(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn from_real_rows(dim: usize, entries: &[f64]) -> Result<Self> {
        let c: Vec<C64> = entries.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_rows(dim, &c)
    }

    pub fn identity(n: usize) -> Self {
        DenseOperator { m: DMatrix::identity(1 << n, 1 << n) }
    }

    pub fn zeros(n: usize) -> Self {
        DenseOperator { m: DMatrix::from_element(1 << n, 1 << n, ZERO) }
    }

    /// `|ket⟩⟨bra|`
    pub fn outer(ket: &Ket, bra: &Ket) -> Result<Self> {
        if ket.dim() != bra.dim() {
            return Err(DfsError::DimensionMismatch { expected: ket.dim(), found: bra.dim() });
        }
        Ok(DenseOperator { m: &ket.amps * bra.amps.adjoint() })
    }

    pub(crate) fn from_matrix_unchecked(m: DMatrix<C64>) -> Self {
        DenseOperator { m }
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn n_qubits(&self) -> usize {
        self.m.nrows().trailing_zeros() as usize
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.m[(r, c)]
    }

    pub fn adjoint(&self) -> Self {
        DenseOperator { m: self.m.adjoint() }
    }

    /// Matrix product `self · rhs`.
    pub fn mul(&self, rhs: &DenseOperator) -> Self {
        DenseOperator { m: &self.m * &rhs.m }
    }

    pub fn add(&self, rhs: &DenseOperator) -> Self {
        DenseOperator { m: &self.m + &rhs.m }
    }

    pub fn sub(&self, rhs: &DenseOperator) -> Self {
        DenseOperator { m: &self.m - &rhs.m }
    }

    pub fn scale(&self, c: C64) -> Self {
        DenseOperator { m: &self.m * c }
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    /// `[self, rhs]`
    pub fn commutator(&self, rhs: &DenseOperator) -> Self {
        DenseOperator { m: &self.m * &rhs.m - &rhs.m * &self.m }
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &DenseOperator) -> f64 {
        self.m.iter().zip(other.m.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// `max |U†U − I|`
    pub fn unitarity_error(&self) -> f64 {
        let p = self.m.adjoint() * &self.m;
        let id = DMatrix::<C64>::identity(self.dim(), self.dim());
        (p - id).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn hermiticity_error(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_error() < tol
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() < tol
    }

    /// Hilbert–Schmidt inner product `Tr(self† other) / dim`.
    pub fn hs_inner(&self, other: &DenseOperator) -> C64 {
        let mut acc = ZERO;
        for (a, b) in self.m.iter().zip(other.m.iter()) {
            acc += a.conj() * b;
        }
        acc / self.dim() as f64
    }

    pub fn hs_norm(&self) -> f64 {
        self.hs_inner(self).re.max(0.0).sqrt()
    }

    pub fn kron(&self, other: &DenseOperator) -> Result<Self> {
        kron(self, other)
    }

    /// Lifts a `k`-qubit operator acting on `targets` to the full `n`-qubit register.
    pub fn embed(local: &DenseOperator, targets: &[usize], n: usize) -> Result<Self> {
        if n > MAX_QUBITS {
            return Err(DfsError::RegisterTooLarge { requested: n, max: MAX_QUBITS });
        }
        check_targets(targets, n)?;
        if local.dim() != 1usize << targets.len() {
            return Err(DfsError::DimensionMismatch { expected: 1 << targets.len(), found: local.dim() });
        }
        let table = LocalIndex::new(targets, n);
        let dim = 1usize << n;
        let mut m = DMatrix::from_element(dim, dim, ZERO);
        for &b in &table.bases {
            for (r, &or) in table.offsets.iter().enumerate() {
                for (c, &oc) in table.offsets.iter().enumerate() {
                    m[(b + or, b + oc)] = local.m[(r, c)];
                }
            }
        }
        Ok(DenseOperator { m })
    }

    /// Permutation operator sending qubit `i` to position `perm[i]`.
    pub fn qubit_permutation(perm: &[usize]) -> Result<Self> {
        let n = perm.len();
        qubits_for_dim(1 << n)?;
        let mut seen = vec![false; n];
        for &p in perm {
            if p >= n {
                return Err(DfsError::QubitOutOfRange { index: p, n });
            }
            if seen[p] {
                return Err(DfsError::DuplicateQubit(p));
            }
            seen[p] = true;
        }
        let dim = 1usize << n;
        let mut m = DMatrix::from_element(dim, dim, ZERO);
        for idx in 0..dim {
            let mut out = 0usize;
            for (q, &p) in perm.iter().enumerate() {
                if qubit_value(idx, q, n) == 1 {
                    out |= 1 << bit_of(p, n);
                }
            }
            m[(out, idx)] = ONE;
        }
        Ok(DenseOperator { m })
    }

    /// Distance to `other` after removing the best global phase.
    pub fn phase_insensitive_distance(&self, other: &DenseOperator) -> f64 {
        phase_insensitive_distance(self, other)
    }
}

/// Density matrix of a (possibly mixed) register state.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    m: DMatrix<C64>,
}

impl DensityMatrix {
    /// Validates Hermiticity (1e-12), unit trace (1e-10) and positivity (−1e-10).
    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        let op = DenseOperator::from_matrix(m)?;
        let herm = op.hermiticity_error();
        if herm > 1e-12 {
            return Err(DfsError::InvalidDensity(format!("not Hermitian ({herm:.3e})")));
        }
        let tr = op.trace();
        if (tr - ONE).norm() > 1e-10 {
            return Err(DfsError::InvalidDensity(format!("trace {tr} != 1")));
        }
        let eig = op.m.clone().symmetric_eigen();
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -1e-10 {
            return Err(DfsError::InvalidDensity(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(DensityMatrix { m: op.m })
    }

    pub(crate) fn from_matrix_unchecked(m: DMatrix<C64>) -> Self {
        DensityMatrix { m }
    }

    pub fn maximally_mixed(n: usize) -> Self {
        let dim = 1usize << n;
        DensityMatrix { m: DMatrix::identity(dim, dim) / C64::new(dim as f64, 0.0) }
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn n_qubits(&self) -> usize {
        self.m.nrows().trailing_zeros() as usize
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.m * &self.m).trace().re
    }

    /// `U ρ U†`
    pub fn evolve(&self, u: &DenseOperator) -> Result<Self> {
        if u.dim() != self.dim() {
            return Err(DfsError::DimensionMismatch { expected: self.dim(), found: u.dim() });
        }
        Ok(DensityMatrix { m: &u.m * &self.m * u.m.adjoint() })
    }

    /// `G ρ G†` for a gate `G` on the listed qubits.
    pub fn apply_local(&self, op: &DenseOperator, targets: &[usize]) -> Result<Self> {
        let n = self.n_qubits();
        check_targets(targets, n)?;
        if op.dim() != 1usize << targets.len() {
            return Err(DfsError::DimensionMismatch { expected: 1 << targets.len(), found: op.dim() });
        }
        let table = LocalIndex::new(targets, n);
        let left = apply_rows(&self.m, &op.m, &table);
        // (G (G ρ)†)† = G ρ G†
        let right = apply_rows(&left.adjoint(), &op.m, &table);
        Ok(DensityMatrix { m: right.adjoint() })
    }

    pub fn add_scaled(&self, other: &DensityMatrix, w_self: f64, w_other: f64) -> Self {
        DensityMatrix { m: &self.m * C64::new(w_self, 0.0) + &other.m * C64::new(w_other, 0.0) }
    }

    pub fn expectation(&self, op: &DenseOperator) -> C64 {
        (&self.m * &op.m).trace()
    }

    /// `⟨ψ|ρ|ψ⟩`
    pub fn fidelity_with(&self, psi: &Ket) -> f64 {
        (psi.amps.adjoint() * &self.m * &psi.amps)[(0, 0)].re
    }

    /// Diagonal of ρ clipped to non-negative values.
    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.m[(i, i)].re.max(0.0)).collect()
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        partial_trace(self, keep)
    }
}

fn apply_rows(m: &DMatrix<C64>, op: &DMatrix<C64>, table: &LocalIndex) -> DMatrix<C64> {
    let mut out = m.clone();
    let k = table.offsets.len();
    let mut buf = vec![ZERO; k];
    for col in 0..m.ncols() {
        for &b in &table.bases {
            for (l, &o) in table.offsets.iter().enumerate() {
                buf[l] = m[(b + o, col)];
            }
            for (r, &o) in table.offsets.iter().enumerate() {
                let mut acc = ZERO;
                for (c, v) in buf.iter().enumerate() {
                    acc += op[(r, c)] * v;
                }
                out[(b + o, col)] = acc;
            }
        }
    }
    out
}

/// Kronecker product; `a` occupies the most significant qubits.
pub fn kron(a: &DenseOperator, b: &DenseOperator) -> Result<DenseOperator> {
    let n = a.n_qubits() + b.n_qubits();
    if n > MAX_QUBITS {
        return Err(DfsError::RegisterTooLarge { requested: n, max: MAX_QUBITS });
    }
    Ok(DenseOperator { m: a.m.kronecker(&b.m) })
}

/// Reduced state on the qubits in `keep` (kept in ascending order).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let n = rho.n_qubits();
    check_targets(keep, n)?;
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    let traced: Vec<usize> = (0..n).filter(|q| !kept.contains(q)).collect();
    let kept_table: Vec<usize> = (0..1usize << kept.len())
        .map(|l| compose_index(l, &kept, n))
        .collect();
    let traced_table: Vec<usize> = (0..1usize << traced.len())
        .map(|l| compose_index(l, &traced, n))
        .collect();
    let dk = kept_table.len();
    let mut out = DMatrix::from_element(dk, dk, ZERO);
    for (i, &ki) in kept_table.iter().enumerate() {
        for (j, &kj) in kept_table.iter().enumerate() {
            let mut acc = ZERO;
            for &t in &traced_table {
                acc += rho.m[(ki | t, kj | t)];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(DensityMatrix { m: out })
}

/// Places the bits of `local` (big-endian over `qubits`) into an `n`-qubit index.
fn compose_index(local: usize, qubits: &[usize], n: usize) -> usize {
    let k = qubits.len();
    qubits
        .iter()
        .enumerate()
        .filter(|(j, _)| (local >> (k - 1 - j)) & 1 == 1)
        .map(|(_, &q)| 1usize << bit_of(q, n))
        .sum()
}

/// Spectral decomposition of a Hermitian operator, reusable for `e^{-iHt}` at many `t`.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

impl HermitianEigen {
    pub fn new(h: &DenseOperator) -> Result<Self> {
        let err = h.hermiticity_error();
        if err > 1e-10 * h.max_abs().max(1.0) {
            return Err(DfsError::NotHermitian(err));
        }
        // Symmetrize so roundoff asymmetry does not leak into the eigensolver.
        let sym = (&h.m + h.m.adjoint()) * C64::new(0.5, 0.0);
        let eig = sym.symmetric_eigen();
        Ok(HermitianEigen { values: eig.eigenvalues.iter().cloned().collect(), vectors: eig.eigenvectors })
    }

    /// `e^{-iHt}`
    pub fn evolution(&self, t: f64) -> DenseOperator {
        let phases: Vec<C64> = self.values.iter().map(|&e| C64::from_polar(1.0, -e * t)).collect();
        let mut scaled = self.vectors.clone();
        for (j, p) in phases.iter().enumerate() {
            let mut col = scaled.column_mut(j);
            col *= *p;
        }
        DenseOperator { m: scaled * self.vectors.adjoint() }
    }

    /// Eigenvector with the lowest eigenvalue.
    pub fn ground_state(&self) -> Ket {
        let (idx, _) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
        Ket { amps: self.vectors.column(idx).into_owned() }
    }
}

/// `e^{-iht}` through the Hermitian eigendecomposition of `h`.
pub fn expm_hermitian(h: &DenseOperator, t: f64) -> Result<DenseOperator> {
    Ok(HermitianEigen::new(h)?.evolution(t))
}

/// Result of a Schmidt decomposition across a bipartition.
#[derive(Clone, Debug)]
pub struct Schmidt {
    /// Non-negative, descending.
    pub coefficients: Vec<f64>,
    pub left: Vec<Ket>,
    pub right: Vec<Ket>,
}

impl Schmidt {
    pub fn rank(&self, tol: f64) -> usize {
        self.coefficients.iter().filter(|&&c| c > tol).count()
    }

    /// Rebuilds `Σ cᵢ |leftᵢ⟩|rightᵢ⟩` in the (left ⊗ right) qubit order.
    pub fn reconstruct(&self) -> Ket {
        let dim = self.left[0].dim() * self.right[0].dim();
        let mut v = DVector::from_element(dim, ZERO);
        for ((c, l), r) in self.coefficients.iter().zip(&self.left).zip(&self.right) {
            v += l.amps.kronecker(&r.amps) * C64::new(*c, 0.0);
        }
        Ket { amps: v }
    }
}

/// Schmidt decomposition of `psi` with the qubits in `left` on one side.
///
/// The coefficients are the square roots of the eigenvalues of the reduced
/// state on `left`; the right vectors are obtained by projecting `psi` onto
/// each left eigenvector so the relative phases stay consistent.
pub fn schmidt_decompose(psi: &Ket, left: &[usize]) -> Result<Schmidt> {
    let n = psi.n_qubits();
    check_targets(left, n)?;
    let mut l: Vec<usize> = left.to_vec();
    l.sort_unstable();
    let r: Vec<usize> = (0..n).filter(|q| !l.contains(q)).collect();
    if r.is_empty() {
        return Err(DfsError::InvalidParameter("bipartition leaves the right side empty".into()));
    }
    let dl = 1usize << l.len();
    let dr = 1usize << r.len();
    let mut m = DMatrix::from_element(dl, dr, ZERO);
    for a in 0..dl {
        let ia = compose_index(a, &l, n);
        for b in 0..dr {
            m[(a, b)] = psi.amps[ia | compose_index(b, &r, n)];
        }
    }
    let rho_a = &m * m.adjoint();
    let eig = HermitianEigen::new(&DenseOperator { m: rho_a })?;
    let mut order: Vec<usize> = (0..dl).collect();
    order.sort_by(|&i, &j| eig.values[j].partial_cmp(&eig.values[i]).unwrap());
    let rank = dl.min(dr);
    let mut coefficients = Vec::with_capacity(rank);
    let mut lefts = Vec::with_capacity(rank);
    let mut rights: Vec<Option<DVector<C64>>> = Vec::with_capacity(rank);
    for &k in order.iter().take(rank) {
        let c = eig.values[k].max(0.0).sqrt();
        let lv: DVector<C64> = eig.vectors.column(k).into_owned();
        // φ_b = Σ_a conj(u_a) M[a,b] / c
        let rv: DVector<C64> = (m.adjoint() * &lv).conjugate();
        coefficients.push(c);
        lefts.push(Ket { amps: lv });
        rights.push(if c > 1e-12 { Some(rv.unscale(c)) } else { None });
    }
    let rights = complete_basis(rights, dr);
    Ok(Schmidt { coefficients, left: lefts, right: rights.into_iter().map(|amps| Ket { amps }).collect() })
}

/// Fills missing vectors with an orthonormal completion.
fn complete_basis(vs: Vec<Option<DVector<C64>>>, dim: usize) -> Vec<DVector<C64>> {
    let mut basis: Vec<DVector<C64>> = vs.iter().flatten().cloned().collect();
    let mut out = Vec::with_capacity(vs.len());
    let mut candidate = 0usize;
    for v in vs {
        match v {
            Some(v) => out.push(v),
            None => loop {
                let mut e = DVector::from_element(dim, ZERO);
                e[candidate % dim] = ONE;
                candidate += 1;
                for b in &basis {
                    let ov = b.dotc(&e);
                    e -= b * ov;
                }
                let norm = e.norm();
                if norm > 1e-8 {
                    let e = e.unscale(norm);
                    basis.push(e.clone());
                    out.push(e);
                    break;
                }
            },
        }
    }
    out
}

/// `max |a − e^{iφ} b|` with `φ` chosen to align the largest entry of `b` with `a`.
pub fn phase_insensitive_distance(a: &DenseOperator, b: &DenseOperator) -> f64 {
    if a.dim() != b.dim() {
        return f64::INFINITY;
    }
    let overlap = b.hs_inner(a);
    let phase = if overlap.norm() > 1e-300 { overlap / overlap.norm() } else { ONE };
    a.max_abs_diff(&b.scale(phase))
}

/// Phase-insensitive distance between kets, `max |a − e^{iφ} b|`.
pub fn ket_phase_distance(a: &Ket, b: &Ket) -> f64 {
    let ov = b.inner(a);
    let phase = if ov.norm() > 1e-300 { ov / ov.norm() } else { ONE };
    a.amps.iter().zip(b.amps.iter()).map(|(x, y)| (x - y * phase).norm()).fold(0.0, f64::max)
}

/// Single-qubit Pauli and common gate matrices.
pub mod gates {
    use super::*;

    pub fn id() -> DenseOperator {
        DenseOperator::identity(1)
    }
    pub fn x() -> DenseOperator {
        DenseOperator::from_real_rows(2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }
    pub fn y() -> DenseOperator {
        DenseOperator::from_rows(2, &[ZERO, -I, I, ZERO]).unwrap()
    }
    pub fn z() -> DenseOperator {
        DenseOperator::from_real_rows(2, &[1.0, 0.0, 0.0, -1.0]).unwrap()
    }
    pub fn h() -> DenseOperator {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        DenseOperator::from_real_rows(2, &[s, s, s, -s]).unwrap()
    }
    /// `e^{-iθX/2}`
    pub fn rx(theta: f64) -> DenseOperator {
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        DenseOperator::from_rows(2, &[C64::new(c, 0.0), C64::new(0.0, -s), C64::new(0.0, -s), C64::new(c, 0.0)])
            .unwrap()
    }
    /// `e^{-iθY/2}`
    pub fn ry(theta: f64) -> DenseOperator {
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        DenseOperator::from_real_rows(2, &[c, -s, s, c]).unwrap()
    }
    /// `e^{-iθZ/2}`
    pub fn rz(theta: f64) -> DenseOperator {
        DenseOperator::from_rows(
            2,
            &[C64::from_polar(1.0, -theta / 2.0), ZERO, ZERO, C64::from_polar(1.0, theta / 2.0)],
        )
        .unwrap()
    }
    /// Control is the first (most significant) qubit.
    pub fn cnot() -> DenseOperator {
        DenseOperator::from_real_rows(
            4,
            &[1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 0., 1., 0., 0., 1., 0.],
        )
        .unwrap()
    }
    pub fn swap() -> DenseOperator {
        DenseOperator::from_real_rows(
            4,
            &[1., 0., 0., 0., 0., 0., 1., 0., 0., 1., 0., 0., 0., 0., 0., 1.],
        )
        .unwrap()
    }
    /// Controlled-`u` with the control on the first qubit.
    pub fn controlled(u: &DenseOperator) -> DenseOperator {
        let d = u.dim();
        let mut m = DMatrix::identity(2 * d, 2 * d);
        for r in 0..d {
            for c in 0..d {
                m[(d + r, d + c)] = u.get(r, c);
            }
        }
        DenseOperator::from_matrix(m).unwrap()
    }
    /// Unitary taking `|0⟩` to `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`.
    pub fn state_prep(theta: f64, phi: f64) -> DenseOperator {
        rz(phi).mul(&ry(theta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn kron_identity() {
        let i4 = kron(&gates::id(), &gates::id()).unwrap();
        assert_eq!(i4, DenseOperator::identity(2));
    }

    #[test]
    fn kron_zz_on_01() {
        let zz = kron(&gates::z(), &gates::z()).unwrap();
        let k = Ket::from_bits(&[0, 1]).unwrap();
        let out = k.apply(&zz).unwrap();
        assert!(ket_phase_distance(&out, &k) < 1e-15);
        assert!((out.inner(&k) + ONE).norm() < 1e-15);
    }

    #[test]
    fn xx_times_yy_is_minus_zz() {
        // oracle: explicit 4x4 products written out by hand
        let xx = DenseOperator::from_real_rows(
            4,
            &[0., 0., 0., 1., 0., 0., 1., 0., 0., 1., 0., 0., 1., 0., 0., 0.],
        )
        .unwrap();
        let yy = DenseOperator::from_real_rows(
            4,
            &[0., 0., 0., -1., 0., 0., 1., 0., 0., 1., 0., 0., -1., 0., 0., 0.],
        )
        .unwrap();
        let zz = DenseOperator::from_real_rows(
            4,
            &[1., 0., 0., 0., 0., -1., 0., 0., 0., 0., -1., 0., 0., 0., 0., 1.],
        )
        .unwrap();
        assert!(kron(&gates::x(), &gates::x()).unwrap().max_abs_diff(&xx) < 1e-15);
        assert!(kron(&gates::y(), &gates::y()).unwrap().max_abs_diff(&yy) < 1e-15);
        assert!(xx.mul(&yy).max_abs_diff(&zz.scale(-ONE)) < 1e-15);
    }

    #[test]
    fn kron_overflow() {
        let a = DenseOperator::identity(7);
        let b = DenseOperator::identity(6);
        assert!(matches!(kron(&a, &b), Err(DfsError::RegisterTooLarge { .. })));
    }

    #[test]
    fn partial_trace_product_and_bell() {
        let rho = Ket::from_bits(&[0, 0]).unwrap().to_density();
        let r = partial_trace(&rho, &[0]).unwrap();
        assert!((r.matrix()[(0, 0)] - ONE).norm() < 1e-15);
        assert!(r.matrix()[(1, 1)].norm() < 1e-15);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = Ket::from_real(&[s, 0.0, 0.0, s]).unwrap().to_density();
        let r = partial_trace(&bell, &[0]).unwrap();
        let half = DensityMatrix::maximally_mixed(1);
        assert!((r.matrix() - half.matrix()).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn partial_trace_errors() {
        let rho = Ket::from_bits(&[0, 0]).unwrap().to_density();
        assert_eq!(partial_trace(&rho, &[]), Err(DfsError::EmptyQubitSet));
        assert_eq!(partial_trace(&rho, &[2]), Err(DfsError::QubitOutOfRange { index: 2, n: 2 }));
    }

    #[test]
    fn expm_examples() {
        let u = expm_hermitian(&gates::z(), PI / 2.0).unwrap();
        assert!((u.get(0, 0) - C64::from_polar(1.0, -PI / 2.0)).norm() < 1e-14);
        assert!((u.get(1, 1) - C64::from_polar(1.0, PI / 2.0)).norm() < 1e-14);

        let u = expm_hermitian(&gates::h(), 0.0).unwrap();
        assert!(u.max_abs_diff(&DenseOperator::identity(1)) < 1e-14);

        let u = expm_hermitian(&gates::x(), PI).unwrap();
        assert!(u.max_abs_diff(&DenseOperator::identity(1).scale(-ONE)) < 1e-14);
        let u = expm_hermitian(&gates::x(), PI / 2.0).unwrap();
        assert!(phase_insensitive_distance(&u, &gates::x().scale(-I)) < 1e-14);
    }

    #[test]
    fn expm_rejects_non_hermitian() {
        let a = DenseOperator::from_real_rows(2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(expm_hermitian(&a, 1.0), Err(DfsError::NotHermitian(_))));
    }

    #[test]
    fn embed_matches_kron() {
        let x = gates::x();
        let e = DenseOperator::embed(&x, &[1], 3).unwrap();
        let k = kron(&kron(&gates::id(), &x).unwrap(), &gates::id()).unwrap();
        assert!(e.max_abs_diff(&k) < 1e-15);
        // reversed control/target ordering
        let c = DenseOperator::embed(&gates::cnot(), &[1, 0], 2).unwrap();
        let k = Ket::from_bits(&[0, 1]).unwrap().apply(&c).unwrap();
        assert!(ket_phase_distance(&k, &Ket::from_bits(&[1, 1]).unwrap()) < 1e-15);
    }

    #[test]
    fn schmidt_examples() {
        let s = schmidt_decompose(&Ket::from_bits(&[0, 0]).unwrap(), &[0]).unwrap();
        assert!((s.coefficients[0] - 1.0).abs() < 1e-12 && s.coefficients[1].abs() < 1e-12);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let singlet = Ket::from_real(&[0.0, h, -h, 0.0]).unwrap();
        let s = schmidt_decompose(&singlet, &[0]).unwrap();
        assert!((s.coefficients[0] - h).abs() < 1e-12 && (s.coefficients[1] - h).abs() < 1e-12);
        assert!(ket_phase_distance(&s.reconstruct(), &singlet) < 1e-12);
    }

    #[test]
    fn permutation_operator_swaps() {
        let p = DenseOperator::qubit_permutation(&[1, 0]).unwrap();
        assert!(p.max_abs_diff(&gates::swap()) < 1e-15);
    }
}
