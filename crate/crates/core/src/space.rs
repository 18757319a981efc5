//! Truncated qubit ⊗ Fock(A) ⊗ Fock(B) basis and sparse operators on it.
//!
//! Density matrices travel through the dynamics as flat column-major
//! slices of length `dim²`, the same layout `nalgebra::DMatrix` uses, so
//! conversion in either direction is a copy at most.

use nalgebra::DMatrix;

use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Qubit {
    G,
    E,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BasisState {
    pub qubit: Qubit,
    pub n_a: usize,
    pub n_b: usize,
}

impl BasisState {
    pub const fn new(qubit: Qubit, n_a: usize, n_b: usize) -> Self {
        BasisState { qubit, n_a, n_b }
    }
}

impl std::fmt::Display for BasisState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let q = match self.qubit {
            Qubit::G => 'g',
            Qubit::E => 'e',
        };
        write!(f, "|{q},{},{}>", self.n_a, self.n_b)
    }
}

/// Truncated product space. A truncation of 0 means the resonator is frozen
/// in vacuum and carries no dynamics.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Space {
    pub n_a_max: usize,
    pub n_b_max: usize,
}

impl Space {
    pub fn new(n_a_max: usize, n_b_max: usize) -> Self {
        Space { n_a_max, n_b_max }
    }

    pub fn dim(&self) -> usize {
        2 * (self.n_a_max + 1) * (self.n_b_max + 1)
    }

    /// Row of `|q, n_a, n_b⟩`; the qubit index runs fastest.
    pub fn index(&self, s: BasisState) -> usize {
        debug_assert!(s.n_a <= self.n_a_max && s.n_b <= self.n_b_max);
        let q = match s.qubit {
            Qubit::G => 0,
            Qubit::E => 1,
        };
        q + 2 * (s.n_b + (self.n_b_max + 1) * s.n_a)
    }

    pub fn try_index(&self, s: BasisState) -> Option<usize> {
        (s.n_a <= self.n_a_max && s.n_b <= self.n_b_max).then(|| self.index(s))
    }

    pub fn state(&self, i: usize) -> BasisState {
        let qubit = if i % 2 == 0 { Qubit::G } else { Qubit::E };
        let rest = i / 2;
        BasisState {
            qubit,
            n_b: rest % (self.n_b_max + 1),
            n_a: rest / (self.n_b_max + 1),
        }
    }

    pub fn states(&self) -> impl Iterator<Item = BasisState> + '_ {
        (0..self.dim()).map(move |i| self.state(i))
    }

    /// Resonator-A annihilation operator.
    pub fn a(&self) -> SparseOp {
        self.lowering(|s| (s.n_a > 0).then(|| (BasisState { n_a: s.n_a - 1, ..s }, (s.n_a as f64).sqrt())))
    }

    pub fn b(&self) -> SparseOp {
        self.lowering(|s| (s.n_b > 0).then(|| (BasisState { n_b: s.n_b - 1, ..s }, (s.n_b as f64).sqrt())))
    }

    /// Qubit lowering operator σ = |g⟩⟨e|.
    pub fn sigma(&self) -> SparseOp {
        self.lowering(|s| (s.qubit == Qubit::E).then(|| (BasisState { qubit: Qubit::G, ..s }, 1.0)))
    }

    fn lowering(&self, f: impl Fn(BasisState) -> Option<(BasisState, f64)>) -> SparseOp {
        let mut op = SparseOp::zeros(self.dim());
        for (col, s) in self.states().enumerate() {
            if let Some((target, amp)) = f(s) {
                op.push(self.index(target), col, C64::new(amp, 0.0));
            }
        }
        op
    }

    /// Pure state `|s⟩⟨s|` as a flat density matrix.
    pub fn projector(&self, s: BasisState) -> Vec<C64> {
        let d = self.dim();
        let mut rho = vec![C64::new(0.0, 0.0); d * d];
        let i = self.index(s);
        rho[i + i * d] = C64::new(1.0, 0.0);
        rho
    }
}

/// Row-compressed sparse complex matrix. Operators here have at most a few
/// entries per row.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOp {
    dim: usize,
    rows: Vec<Vec<(usize, C64)>>,
}

impl SparseOp {
    pub fn zeros(dim: usize) -> Self {
        SparseOp {
            dim,
            rows: vec![Vec::new(); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Adds `value` at (row, col), merging with an existing entry.
    pub fn push(&mut self, row: usize, col: usize, value: C64) {
        let r = &mut self.rows[row];
        if let Some(e) = r.iter_mut().find(|(c, _)| *c == col) {
            e.1 += value;
        } else {
            r.push((col, value));
        }
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.rows[row]
            .iter()
            .find(|(c, _)| *c == col)
            .map_or(C64::new(0.0, 0.0), |e| e.1)
    }

    pub fn row(&self, row: usize) -> &[(usize, C64)] {
        &self.rows[row]
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |&(c, v)| (r, c, v)))
    }

    pub fn dagger(&self) -> SparseOp {
        let mut out = SparseOp::zeros(self.dim);
        for (r, c, v) in self.entries() {
            out.push(c, r, v.conj());
        }
        out
    }

    pub fn scale(&self, k: C64) -> SparseOp {
        let mut out = self.clone();
        for row in &mut out.rows {
            for e in row.iter_mut() {
                e.1 *= k;
            }
        }
        out
    }

    pub fn add(&self, other: &SparseOp) -> SparseOp {
        let mut out = self.clone();
        for (r, c, v) in other.entries() {
            out.push(r, c, v);
        }
        out
    }

    pub fn matmul(&self, other: &SparseOp) -> SparseOp {
        let mut out = SparseOp::zeros(self.dim);
        for (r, k, v) in self.entries() {
            for &(c, w) in other.row(k) {
                out.push(r, c, v * w);
            }
        }
        out.prune();
        out
    }

    fn prune(&mut self) {
        for row in &mut self.rows {
            row.retain(|(_, v)| v.norm_sqr() > 0.0);
        }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.entries() {
            m[(r, c)] += v;
        }
        m
    }

    /// Largest |A_ij − conj(A_ji)|.
    pub fn hermiticity_defect(&self) -> f64 {
        let dag = self.dagger();
        self.entries()
            .chain(dag.entries())
            .map(|(r, c, _)| (self.get(r, c) - dag.get(r, c)).norm())
            .fold(0.0, f64::max)
    }

    /// `out += k · (A ρ)` for column-major ρ.
    pub fn left_mul_acc(&self, rho: &[C64], k: C64, out: &mut [C64]) {
        let d = self.dim;
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                let kv = k * v;
                for j in 0..d {
                    out[r + j * d] += kv * rho[c + j * d];
                }
            }
        }
    }

    /// `out += k · (ρ A)` for column-major ρ.
    pub fn right_mul_acc(&self, rho: &[C64], k: C64, out: &mut [C64]) {
        let d = self.dim;
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                let kv = k * v;
                let (src, dst) = (&rho[r * d..(r + 1) * d], &mut out[c * d..(c + 1) * d]);
                for (o, x) in dst.iter_mut().zip(src) {
                    *o += kv * x;
                }
            }
        }
    }

    /// `out += k · (A ρ A†)` for column-major ρ.
    pub fn sandwich_acc(&self, rho: &[C64], k: f64, out: &mut [C64]) {
        let d = self.dim;
        for (j, row_j) in self.rows.iter().enumerate() {
            for &(l, vj) in row_j {
                let cj = vj.conj() * k;
                for (i, row_i) in self.rows.iter().enumerate() {
                    for &(m, vi) in row_i {
                        out[i + j * d] += vi * cj * rho[m + l * d];
                    }
                }
            }
        }
    }

    /// Tr(A ρ).
    pub fn expect(&self, rho: &[C64]) -> C64 {
        let d = self.dim;
        self.entries().map(|(r, c, v)| v * rho[c + r * d]).sum()
    }
}

/// Tr(ρ) of a flat column-major matrix.
pub fn trace(rho: &[C64], dim: usize) -> C64 {
    (0..dim).map(|i| rho[i + i * dim]).sum()
}

/// Largest |ρ_ij − conj(ρ_ji)|.
pub fn hermiticity_defect(rho: &[C64], dim: usize) -> f64 {
    let mut worst = 0.0_f64;
    for j in 0..dim {
        for i in 0..=j {
            worst = worst.max((rho[i + j * dim] - rho[j + i * dim].conj()).norm());
        }
    }
    worst
}

/// Conjugate transpose of a flat column-major matrix.
pub fn dagger(rho: &[C64], dim: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); dim * dim];
    for j in 0..dim {
        for i in 0..dim {
            out[j + i * dim] = rho[i + j * dim].conj();
        }
    }
    out
}
