//! Pauli strings, operator sums and the first-order average-Hamiltonian machinery.
//!
//! Operators are canonicalized to Hermitian `X`/`Y`/`Z` strings; raising and
//! lowering operators enter only as complex combinations. The Hilbert–Schmidt
//! inner product is `Tr(A†B)/dim`, so every Pauli string has unit norm.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{DfsError, Result};
use crate::tensor::{qubits_for_dim, DenseOperator, C64, I, ONE, ZERO};

/// Coefficients below this magnitude are dropped.
pub const PRUNE_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    /// `self · other = i^k · result`
    pub fn mul(self, other: Pauli) -> (u8, Pauli) {
        use Pauli::*;
        match (self, other) {
            (I, p) | (p, I) => (0, p),
            (a, b) if a == b => (0, I),
            (X, Y) => (1, Z),
            (Y, Z) => (1, X),
            (Z, X) => (1, Y),
            (Y, X) => (3, Z),
            (Z, Y) => (3, X),
            (X, Z) => (3, Y),
            _ => unreachable!(),
        }
    }

    fn flips(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    /// Amplitude of `P|bit⟩` on the flipped (or same) basis state.
    fn amplitude(self, bit: usize) -> C64 {
        match (self, bit) {
            (Pauli::I, _) | (Pauli::X, _) | (Pauli::Z, 0) => ONE,
            (Pauli::Z, _) => -ONE,
            (Pauli::Y, 0) => I,
            (Pauli::Y, _) => -I,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn to_dense(self) -> DenseOperator {
        PauliString::new(vec![self]).to_dense()
    }
}

/// Power of `i` in {0, 1, 2, 3}.
fn phase_value(k: u8) -> C64 {
    match k % 4 {
        0 => ONE,
        1 => I,
        2 => -ONE,
        _ => -I,
    }
}

/// Tensor product of single-qubit Paulis with a phase `i^k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    axes: Vec<Pauli>,
    phase: u8,
}

impl PauliString {
    pub fn new(axes: Vec<Pauli>) -> Self {
        PauliString { axes, phase: 0 }
    }

    pub fn with_phase(axes: Vec<Pauli>, phase: u8) -> Self {
        PauliString { axes, phase: phase % 4 }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(vec![Pauli::I; n])
    }

    /// Single non-identity factor `p` on qubit `q` of an `n`-qubit register.
    pub fn single(n: usize, q: usize, p: Pauli) -> Self {
        let mut axes = vec![Pauli::I; n];
        axes[q] = p;
        Self::new(axes)
    }

    pub fn axes(&self) -> &[Pauli] {
        &self.axes
    }

    pub fn n_qubits(&self) -> usize {
        self.axes.len()
    }

    /// Phase as a power of `i`.
    pub fn phase(&self) -> u8 {
        self.phase
    }

    pub fn phase_factor(&self) -> C64 {
        phase_value(self.phase)
    }

    pub fn weight(&self) -> usize {
        self.axes.iter().filter(|&&p| p != Pauli::I).count()
    }

    pub fn mul(&self, other: &PauliString) -> Result<PauliString> {
        if self.n_qubits() != other.n_qubits() {
            return Err(DfsError::DimensionMismatch { expected: self.n_qubits(), found: other.n_qubits() });
        }
        let mut phase = self.phase + other.phase;
        let axes = self
            .axes
            .iter()
            .zip(&other.axes)
            .map(|(&a, &b)| {
                let (k, p) = a.mul(b);
                phase += k;
                p
            })
            .collect();
        Ok(PauliString { axes, phase: phase % 4 })
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let anti = self
            .axes
            .iter()
            .zip(&other.axes)
            .filter(|(&a, &b)| a != Pauli::I && b != Pauli::I && a != b)
            .count();
        anti % 2 == 0
    }

    /// Tensor product `self ⊗ other`.
    pub fn tensor(&self, other: &PauliString) -> PauliString {
        let mut axes = self.axes.clone();
        axes.extend_from_slice(&other.axes);
        PauliString { axes, phase: (self.phase + other.phase) % 4 }
    }

    fn flip_mask(&self) -> usize {
        let n = self.axes.len();
        self.axes
            .iter()
            .enumerate()
            .filter(|(_, p)| p.flips())
            .map(|(q, _)| 1usize << (n - 1 - q))
            .sum()
    }

    /// `P|idx⟩ = value · |idx ^ mask⟩`; returns `value` (without the string phase).
    fn column_value(&self, idx: usize) -> C64 {
        let n = self.axes.len();
        let mut v = ONE;
        for (q, &p) in self.axes.iter().enumerate() {
            if p != Pauli::I {
                v *= p.amplitude((idx >> (n - 1 - q)) & 1);
            }
        }
        v
    }

    pub fn to_dense(&self) -> DenseOperator {
        let n = self.axes.len();
        let dim = 1usize << n;
        let mask = self.flip_mask();
        let ph = self.phase_factor();
        let mut m = DMatrix::from_element(dim, dim, ZERO);
        for k in 0..dim {
            m[(k ^ mask, k)] = ph * self.column_value(k);
        }
        DenseOperator::from_matrix_unchecked(m)
    }

    /// `Tr(P · M)` in `O(dim)`.
    fn trace_with(&self, m: &DMatrix<C64>) -> C64 {
        let mask = self.flip_mask();
        let mut acc = ZERO;
        for k in 0..m.nrows() {
            acc += self.column_value(k) * m[(k, k ^ mask)];
        }
        acc * self.phase_factor()
    }

    /// Iterates every phase-free string on `n` qubits in lexicographic order.
    pub fn all(n: usize) -> impl Iterator<Item = PauliString> {
        (0..1usize << (2 * n)).map(move |code| {
            let axes = (0..n).map(|q| Pauli::ALL[(code >> (2 * (n - 1 - q))) & 3]).collect();
            PauliString::new(axes)
        })
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = ["", "i", "-", "-i"][self.phase as usize];
        write!(f, "{prefix}")?;
        for p in &self.axes {
            write!(f, "{}", p.symbol())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = DfsError;

    /// Parses strings like `XIZ`, `-YY` or `iZ`.
    fn from_str(s: &str) -> Result<Self> {
        let (phase, body) = if let Some(r) = s.strip_prefix("-i") {
            (3, r)
        } else if let Some(r) = s.strip_prefix('-') {
            (2, r)
        } else if let Some(r) = s.strip_prefix('i') {
            (1, r)
        } else {
            (0, s.strip_prefix('+').unwrap_or(s))
        };
        let axes = body
            .chars()
            .map(|c| match c {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(DfsError::InvalidParameter(format!("bad Pauli symbol `{other}`"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if axes.is_empty() {
            return Err(DfsError::EmptyQubitSet);
        }
        Ok(PauliString { axes, phase })
    }
}

/// Weighted sum of phase-free Pauli strings on a fixed number of qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorSum {
    n: usize,
    terms: BTreeMap<Vec<Pauli>, C64>,
}

impl OperatorSum {
    pub fn zero(n: usize) -> Self {
        OperatorSum { n, terms: BTreeMap::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_string(&PauliString::identity(n), ONE)
    }

    /// `c · P`, with the phase of `P` folded into the coefficient.
    pub fn from_string(p: &PauliString, c: C64) -> Self {
        let mut s = Self::zero(p.n_qubits());
        s.add_term(p, c);
        s
    }

    /// Builds a sum from `(label, coefficient)` pairs such as `("XX", 0.5)`.
    pub fn from_labels(terms: &[(&str, C64)]) -> Result<Self> {
        let first: PauliString = terms
            .first()
            .ok_or(DfsError::EmptyQubitSet)?
            .0
            .parse()?;
        let mut s = Self::zero(first.n_qubits());
        for (label, c) in terms {
            let p: PauliString = label.parse()?;
            if p.n_qubits() != s.n {
                return Err(DfsError::DimensionMismatch { expected: s.n, found: p.n_qubits() });
            }
            s.add_term(&p, *c);
        }
        Ok(s)
    }

    pub fn single(n: usize, q: usize, p: Pauli) -> Self {
        Self::from_string(&PauliString::single(n, q, p), ONE)
    }

    /// `Σᵢ σᵢ^p` over the listed qubits.
    pub fn sum_over(n: usize, qubits: &[usize], p: Pauli) -> Self {
        let mut s = Self::zero(n);
        for &q in qubits {
            s.add_term(&PauliString::single(n, q, p), ONE);
        }
        s
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (PauliString, C64)> + '_ {
        self.terms.iter().map(|(k, &c)| (PauliString::new(k.clone()), c))
    }

    pub fn coefficient(&self, p: &PauliString) -> C64 {
        self.terms.get(&p.axes).copied().unwrap_or(ZERO) * p.phase_factor().conj()
    }

    pub fn add_term(&mut self, p: &PauliString, c: C64) {
        let v = c * p.phase_factor();
        let entry = self.terms.entry(p.axes.clone()).or_insert(ZERO);
        *entry += v;
        if entry.norm() < PRUNE_TOL {
            self.terms.remove(&p.axes);
        }
    }

    fn check_same(&self, other: &OperatorSum) -> Result<()> {
        if self.n != other.n {
            return Err(DfsError::DimensionMismatch { expected: self.n, found: other.n });
        }
        Ok(())
    }

    pub fn add(&self, other: &OperatorSum) -> Result<Self> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (k, &c) in &other.terms {
            out.add_term(&PauliString::new(k.clone()), c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &OperatorSum) -> Result<Self> {
        self.add(&other.scale(-ONE))
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = Self::zero(self.n);
        for (k, &v) in &self.terms {
            out.add_term(&PauliString::new(k.clone()), v * c);
        }
        out
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(C64::new(c, 0.0))
    }

    /// Operator product `self · other`.
    pub fn mul(&self, other: &OperatorSum) -> Result<Self> {
        self.check_same(other)?;
        let mut out = Self::zero(self.n);
        for (a, &ca) in &self.terms {
            let pa = PauliString::new(a.clone());
            for (b, &cb) in &other.terms {
                let prod = pa.mul(&PauliString::new(b.clone()))?;
                out.add_term(&prod, ca * cb);
            }
        }
        Ok(out)
    }

    pub fn commutator(&self, other: &OperatorSum) -> Result<Self> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    pub fn adjoint(&self) -> Self {
        OperatorSum { n: self.n, terms: self.terms.iter().map(|(k, c)| (k.clone(), c.conj())).collect() }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms.values().all(|c| c.im.abs() < tol)
    }

    pub fn to_dense(&self) -> DenseOperator {
        let dim = 1usize << self.n;
        let mut m = DMatrix::from_element(dim, dim, ZERO);
        for (k, &c) in &self.terms {
            let p = PauliString::new(k.clone());
            let mask = p.flip_mask();
            for col in 0..dim {
                m[(col ^ mask, col)] += c * p.column_value(col);
            }
        }
        DenseOperator::from_matrix_unchecked(m)
    }

    /// Pauli expansion `M = Σ_P c_P P` with `c_P = Tr(P M) / 2^n`.
    pub fn from_dense(op: &DenseOperator) -> Result<Self> {
        let n = qubits_for_dim(op.dim())?;
        let dim = op.dim() as f64;
        let mut out = Self::zero(n);
        for p in PauliString::all(n) {
            let c = p.trace_with(op.matrix()) / dim;
            if c.norm() >= PRUNE_TOL {
                out.terms.insert(p.axes, c);
            }
        }
        Ok(out)
    }

    /// `Tr(self† other) / dim`
    pub fn hs_inner(&self, other: &OperatorSum) -> Result<C64> {
        self.check_same(other)?;
        Ok(self
            .terms
            .iter()
            .filter_map(|(k, a)| other.terms.get(k).map(|b| a.conj() * b))
            .sum())
    }

    pub fn hs_norm(&self) -> f64 {
        self.terms.values().fold(0.0, |acc, c| acc + c.norm_sqr()).sqrt()
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `self ⊗ other`
    pub fn tensor(&self, other: &OperatorSum) -> Self {
        let mut out = Self::zero(self.n + other.n);
        for (a, &ca) in &self.terms {
            for (b, &cb) in &other.terms {
                let mut k = a.clone();
                k.extend_from_slice(b);
                out.add_term(&PauliString::new(k), ca * cb);
            }
        }
        out
    }

    /// Relabels qubits so that old qubit `q` lands at `map[q]` in an `n_new`-qubit register.
    pub fn relabel(&self, map: &[usize], n_new: usize) -> Result<Self> {
        if map.len() != self.n {
            return Err(DfsError::DimensionMismatch { expected: self.n, found: map.len() });
        }
        if let Some(&bad) = map.iter().find(|&&m| m >= n_new) {
            return Err(DfsError::QubitOutOfRange { index: bad, n: n_new });
        }
        let mut out = Self::zero(n_new);
        for (k, &c) in &self.terms {
            let mut axes = vec![Pauli::I; n_new];
            for (q, &p) in k.iter().enumerate() {
                axes[map[q]] = p;
            }
            out.add_term(&PauliString::new(axes), c);
        }
        Ok(out)
    }

    /// Splits `self = Σ_b A_b ⊗ b` over the trailing `n - n_sys` qubits, keyed by bath string `b`.
    pub fn split_system(&self, n_sys: usize) -> Result<BTreeMap<Vec<Pauli>, OperatorSum>> {
        if n_sys == 0 || n_sys > self.n {
            return Err(DfsError::InvalidParameter(format!(
                "system size {n_sys} invalid for a {}-qubit operator",
                self.n
            )));
        }
        let mut out: BTreeMap<Vec<Pauli>, OperatorSum> = BTreeMap::new();
        for (k, &c) in &self.terms {
            let (s, b) = k.split_at(n_sys);
            out.entry(b.to_vec())
                .or_insert_with(|| OperatorSum::zero(n_sys))
                .add_term(&PauliString::new(s.to_vec()), c);
        }
        Ok(out)
    }

    fn join_system(parts: &BTreeMap<Vec<Pauli>, OperatorSum>, n_sys: usize, n_bath: usize) -> Self {
        let mut out = Self::zero(n_sys + n_bath);
        for (b, a) in parts {
            for (k, &c) in &a.terms {
                let mut axes = k.clone();
                axes.extend_from_slice(b);
                out.add_term(&PauliString::new(axes), c);
            }
        }
        out
    }
}

impl fmt::Display for OperatorSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(k, c)| {
                let label: String = k.iter().map(|p| p.symbol()).collect();
                if c.im.abs() < PRUNE_TOL {
                    format!("{:+.6}·{label}", c.re)
                } else {
                    format!("({:.6}{:+.6}i)·{label}", c.re, c.im)
                }
            })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Conjugating operator: either a Pauli string or a dense unitary on the leading qubits.
#[derive(Clone, Debug)]
pub enum Conjugator {
    Pauli(PauliString),
    Dense(DenseOperator),
}

impl From<PauliString> for Conjugator {
    fn from(p: PauliString) -> Self {
        Conjugator::Pauli(p)
    }
}

impl From<DenseOperator> for Conjugator {
    fn from(u: DenseOperator) -> Self {
        Conjugator::Dense(u)
    }
}

/// `p† h p`, re-expressed in the Pauli basis.
///
/// `p` may act on fewer qubits than `h`; it then acts on the leading
/// (system) qubits and the remaining factors are carried through unchanged.
pub fn conjugate(h: &OperatorSum, p: &Conjugator) -> Result<OperatorSum> {
    match p {
        Conjugator::Pauli(ps) => {
            let k = ps.n_qubits();
            if k > h.n {
                return Err(DfsError::DimensionMismatch { expected: h.n, found: k });
            }
            let mut out = OperatorSum::zero(h.n);
            for (axes, &c) in &h.terms {
                let head = PauliString::new(axes[..k].to_vec());
                let sign = if head.commutes_with(ps) { ONE } else { -ONE };
                out.add_term(&PauliString::new(axes.clone()), c * sign);
            }
            Ok(out)
        }
        Conjugator::Dense(u) => {
            let err = u.unitarity_error();
            if err > 1e-10 {
                return Err(DfsError::NotUnitary(err));
            }
            let k = u.n_qubits();
            if k > h.n {
                return Err(DfsError::DimensionMismatch { expected: h.n, found: k });
            }
            if k == h.n {
                let m = u.adjoint().mul(&h.to_dense()).mul(u);
                return OperatorSum::from_dense(&m);
            }
            let parts = h.split_system(k)?;
            let ud = u.adjoint();
            let mut conj = BTreeMap::new();
            for (b, a) in parts {
                let m = ud.mul(&a.to_dense()).mul(u);
                conj.insert(b, OperatorSum::from_dense(&m)?);
            }
            Ok(OperatorSum::join_system(&conj, k, h.n - k))
        }
    }
}

/// `(1/K) Σ_j Q_j† h Q_j` over toggling frames `Q_j` acting on the leading qubits.
pub fn average_over_frames(frames: &[DenseOperator], h: &OperatorSum) -> Result<OperatorSum> {
    if frames.is_empty() {
        return Err(DfsError::UnsupportedSequence("no toggling frames".into()));
    }
    let mut acc = OperatorSum::zero(h.n);
    for q in frames {
        acc = acc.add(&conjugate(h, &Conjugator::Dense(q.clone()))?)?;
    }
    Ok(acc.scale_real(1.0 / frames.len() as f64))
}

/// First-order Magnus term of one cycle of `seq` for the interaction `h_sb`.
///
/// The sequence must have uniform free intervals; frames act on the leading
/// `seq.n_qubits()` qubits of `h_sb`.
pub fn first_order_average(seq: &crate::sequences::PulseSequence, h_sb: &OperatorSum) -> Result<OperatorSum> {
    let frames = seq.toggling_frames()?;
    if frames.is_empty() {
        return Ok(h_sb.clone());
    }
    average_over_frames(&frames, h_sb)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubspaceName {
    Leak,
    Logi,
    Dfs,
    Collective,
}

/// Orthonormal (Hilbert–Schmidt) operator basis of a named subspace.
#[derive(Clone, Debug)]
pub struct SubspaceBasis {
    pub name: SubspaceName,
    pub elements: Vec<OperatorSum>,
}

fn normalized(terms: &[(&str, f64)]) -> OperatorSum {
    let c: Vec<(&str, C64)> = terms.iter().map(|&(l, v)| (l, C64::new(v, 0.0))).collect();
    let s = OperatorSum::from_labels(&c).expect("static labels");
    let n = s.hs_norm();
    s.scale_real(1.0 / n)
}

impl SubspaceBasis {
    /// Two-qubit operators that move population between the DFS `{|01⟩, |10⟩}` and its complement.
    pub fn leak() -> Self {
        let labels = ["XI", "IX", "YI", "IY", "XZ", "ZX", "YZ", "ZY"];
        SubspaceBasis {
            name: SubspaceName::Leak,
            elements: labels.iter().map(|l| normalized(&[(l, 1.0)])).collect(),
        }
    }

    /// Logical Paulis of the two-qubit DFS.
    pub fn logi() -> Self {
        SubspaceBasis {
            name: SubspaceName::Logi,
            elements: vec![
                normalized(&[("XX", 1.0), ("YY", 1.0)]),
                normalized(&[("YX", 1.0), ("XY", -1.0)]),
                normalized(&[("ZI", 1.0), ("IZ", -1.0)]),
            ],
        }
    }

    /// Operators acting trivially on the DFS (up to a constant) or only outside it.
    pub fn dfs() -> Self {
        SubspaceBasis {
            name: SubspaceName::Dfs,
            elements: vec![
                normalized(&[("XY", 1.0), ("YX", 1.0)]),
                normalized(&[("XX", 1.0), ("YY", -1.0)]),
                normalized(&[("ZI", 1.0), ("IZ", 1.0)]),
                normalized(&[("II", 1.0)]),
                normalized(&[("ZZ", 1.0)]),
            ],
        }
    }

    /// `{I, Σσˣ, Σσʸ, Σσᶻ}` on `n` qubits, normalized.
    pub fn collective(n: usize) -> Self {
        let all: Vec<usize> = (0..n).collect();
        let mut elements = vec![OperatorSum::identity(n)];
        for p in [Pauli::X, Pauli::Y, Pauli::Z] {
            let s = OperatorSum::sum_over(n, &all, p);
            let norm = s.hs_norm();
            elements.push(s.scale_real(1.0 / norm));
        }
        SubspaceBasis { name: SubspaceName::Collective, elements }
    }

    pub fn n_qubits(&self) -> usize {
        self.elements[0].n_qubits()
    }

    pub fn gram(&self) -> DMatrix<C64> {
        let k = self.elements.len();
        DMatrix::from_fn(k, k, |i, j| self.elements[i].hs_inner(&self.elements[j]).unwrap())
    }
}

/// Orthogonal projection of `h` onto `basis`; returns the component and `‖h − component‖_HS`.
///
/// When `h` carries extra trailing (bath) qubits the projection acts on the
/// system factor channel by channel.
pub fn project(h: &OperatorSum, basis: &SubspaceBasis) -> Result<(OperatorSum, f64)> {
    let k = basis.n_qubits();
    if h.n_qubits() < k {
        return Err(DfsError::DimensionMismatch { expected: k, found: h.n_qubits() });
    }
    let parts = if h.n_qubits() == k {
        let mut m = BTreeMap::new();
        m.insert(Vec::new(), h.clone());
        m
    } else {
        h.split_system(k)?
    };
    let mut comp = BTreeMap::new();
    for (b, a) in parts {
        let mut c = OperatorSum::zero(k);
        for e in &basis.elements {
            c = c.add(&e.scale(e.hs_inner(&a)?))?;
        }
        comp.insert(b, c);
    }
    let component = OperatorSum::join_system(&comp, k, h.n_qubits() - k);
    let residual = h.sub(&component)?.hs_norm();
    Ok((component, residual))
}

/// Hilbert–Schmidt distance from `h` to the collective span on its first `n_sys` qubits.
pub fn collective_residual(h: &OperatorSum, n_sys: usize) -> Result<f64> {
    Ok(project(h, &SubspaceBasis::collective(n_sys))?.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{gates, kron};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn multiplication_table_matches_dense() {
        for a in Pauli::ALL {
            for b in Pauli::ALL {
                let (k, p) = a.mul(b);
                let lhs = a.to_dense().mul(&b.to_dense());
                let rhs = p.to_dense().scale(phase_value(k));
                assert!(lhs.max_abs_diff(&rhs) < 1e-15, "{a:?}{b:?}");
            }
        }
    }

    #[test]
    fn string_dense_matches_kron() {
        let p: PauliString = "XYZ".parse().unwrap();
        let k = kron(&kron(&gates::x(), &gates::y()).unwrap(), &gates::z()).unwrap();
        assert!(p.to_dense().max_abs_diff(&k) < 1e-15);
        let q: PauliString = "-iZX".parse().unwrap();
        assert_eq!(q.to_string(), "-iZX");
    }

    #[test]
    fn self_product_is_identity() {
        let p: PauliString = "-XYZ".parse().unwrap();
        let sq = p.mul(&p).unwrap();
        assert_eq!(sq, PauliString::identity(3));
    }

    #[test]
    fn dense_roundtrip() {
        let h = OperatorSum::from_labels(&[("XZ", c(0.3)), ("YY", C64::new(0.1, -0.2)), ("II", c(1.0))]).unwrap();
        let back = OperatorSum::from_dense(&h.to_dense()).unwrap();
        assert!(h.sub(&back).unwrap().hs_norm() < 1e-12);
    }

    #[test]
    fn conjugate_examples() {
        let x1 = OperatorSum::single(2, 0, Pauli::X);
        let z1 = PauliString::single(2, 0, Pauli::Z);
        let out = conjugate(&x1, &Conjugator::Pauli(z1)).unwrap();
        assert!(out.add(&x1).unwrap().hs_norm() < 1e-15);

        let out = conjugate(&x1, &Conjugator::Dense(gates::swap())).unwrap();
        assert!(out.sub(&OperatorSum::single(2, 1, Pauli::X)).unwrap().hs_norm() < 1e-12);
    }

    #[test]
    fn conjugate_rejects_non_unitary() {
        let x1 = OperatorSum::single(1, 0, Pauli::X);
        let bad = DenseOperator::from_real_rows(2, &[1.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(matches!(conjugate(&x1, &Conjugator::Dense(bad)), Err(DfsError::NotUnitary(_))));
    }

    #[test]
    fn conjugation_with_bath_factor() {
        // X⊗Z_bath conjugated by a system swap on the first two qubits.
        let h = OperatorSum::from_labels(&[("XIZ", c(1.0))]).unwrap();
        let out = conjugate(&h, &Conjugator::Dense(gates::swap())).unwrap();
        let expect = OperatorSum::from_labels(&[("IXZ", c(1.0))]).unwrap();
        assert!(out.sub(&expect).unwrap().hs_norm() < 1e-12);
    }

    #[test]
    fn subspace_bases_are_orthonormal_and_complete() {
        let all: Vec<OperatorSum> = [SubspaceBasis::leak(), SubspaceBasis::logi(), SubspaceBasis::dfs()]
            .into_iter()
            .flat_map(|b| {
                let g = b.gram();
                let id = DMatrix::<C64>::identity(g.nrows(), g.nrows());
                assert!((g - id).iter().all(|z| z.norm() < 1e-12));
                b.elements
            })
            .collect();
        assert_eq!(all.len(), 16);
        for (i, a) in all.iter().enumerate() {
            for b in &all[i + 1..] {
                assert!(a.hs_inner(b).unwrap().norm() < 1e-12);
            }
        }
    }

    #[test]
    fn projection_examples() {
        let x1 = OperatorSum::single(2, 0, Pauli::X);
        let (comp, res) = project(&x1, &SubspaceBasis::leak()).unwrap();
        assert!(res < 1e-12);
        assert!(comp.sub(&x1).unwrap().hs_norm() < 1e-12);

        let zbar = OperatorSum::from_labels(&[("ZI", c(0.5)), ("IZ", c(-0.5))]).unwrap();
        let (comp, _) = project(&zbar, &SubspaceBasis::leak()).unwrap();
        assert!(comp.hs_norm() < 1e-12);
    }

    #[test]
    fn collective_residual_examples() {
        let h = OperatorSum::from_labels(&[("ZIX", c(1.0)), ("IZX", c(1.0))]).unwrap();
        assert!(collective_residual(&h, 2).unwrap() < 1e-12);
        let h = OperatorSum::from_labels(&[("ZIX", c(1.0))]).unwrap();
        assert!(collective_residual(&h, 2).unwrap() > 0.5);
    }

    #[test]
    fn empty_frames_rejected() {
        let h = OperatorSum::identity(1);
        assert!(average_over_frames(&[], &h).is_err());
    }
}
