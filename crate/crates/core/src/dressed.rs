//! Static rotating-frame Hamiltonian, its dressed zero- and one-photon
//! eigenstates, dressed radiative rates, and the impedance-matching drive.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{DispersiveParams, DriveSpec};
use crate::space::{BasisState, Qubit, SparseOp, Space};
use crate::units::{angular, Ghz, Mhz};
use crate::C64;

/// Extra rotating frames for the resonators (GHz). The qubit always rotates
/// at the drive frequency. Photon numbers are conserved by the static
/// Hamiltonian, so any resonator rotation is exact.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct FrameSpec {
    pub resonator_a: Option<f64>,
    pub resonator_b: Option<f64>,
}

impl FrameSpec {
    pub fn qubit_only() -> Self {
        FrameSpec::default()
    }

    pub fn rotating(resonator_a: Option<f64>, resonator_b: Option<f64>) -> Self {
        FrameSpec {
            resonator_a,
            resonator_b,
        }
    }

    fn check(&self, space: &Space) -> Result<()> {
        if self.resonator_a.is_some() && space.n_a_max == 0 {
            return Err(Error::Frame("rotation requested for resonator A, which is not part of the space".into()));
        }
        if self.resonator_b.is_some() && space.n_b_max == 0 {
            return Err(Error::Frame("rotation requested for resonator B, which is not part of the space".into()));
        }
        Ok(())
    }
}

/// Diagonal energy (rad/ns) of a bare state in the given frame.
pub(crate) fn bare_energy(dp: &DispersiveParams, omega_d: f64, frame: &FrameSpec, s: BasisState) -> f64 {
    let fa = frame.resonator_a.unwrap_or(0.0);
    let fb = frame.resonator_b.unwrap_or(0.0);
    let (na, nb) = (s.n_a as f64, s.n_b as f64);
    let ghz = match s.qubit {
        Qubit::G => na * (dp.omega_a - fa) + nb * (dp.omega_b - fb),
        Qubit::E => {
            (dp.omega_q - omega_d)
                + na * (dp.omega_a - 2e-3 * dp.chi_a - fa)
                + nb * (dp.omega_b - 2e-3 * dp.chi_b - fb)
        }
    };
    angular(Ghz(ghz))
}

/// Sparse form of the driven dispersive Hamiltonian, `Ω_d(σ† + σ)` included.
pub fn hamiltonian_sparse(space: &Space, dp: &DispersiveParams, drive: &DriveSpec, frame: &FrameSpec) -> Result<SparseOp> {
    frame.check(space)?;
    let mut h = SparseOp::zeros(space.dim());
    let rabi = drive.rabi_ang();
    for (i, s) in space.states().enumerate() {
        h.push(i, i, C64::new(bare_energy(dp, drive.omega_d, frame, s), 0.0));
        if rabi != 0.0 {
            let partner = BasisState {
                qubit: match s.qubit {
                    Qubit::G => Qubit::E,
                    Qubit::E => Qubit::G,
                },
                ..s
            };
            h.push(i, space.index(partner), C64::new(rabi, 0.0));
        }
    }
    Ok(h)
}

#[derive(Clone, Debug)]
pub struct HamiltonianMatrix {
    pub matrix: DMatrix<C64>,
    pub space: Space,
    pub frame: FrameSpec,
    /// Qubit frame rotation (GHz).
    pub omega_d: f64,
}

impl HamiltonianMatrix {
    pub fn index(&self, s: BasisState) -> usize {
        self.space.index(s)
    }
}

pub fn build_hamiltonian(dp: &DispersiveParams, drive: &DriveSpec, frame: &FrameSpec) -> Result<HamiltonianMatrix> {
    let space = Space::new(dp.n_a_max, dp.n_b_max);
    let h = hamiltonian_sparse(&space, dp, drive, frame)?;
    Ok(HamiltonianMatrix {
        matrix: h.to_dense(),
        space,
        frame: *frame,
        omega_d: drive.omega_d,
    })
}

/// Bare states spanning the zero- and one-photon manifold, in the order
/// used for dressed eigenvectors.
pub const MANIFOLD: [BasisState; 6] = [
    BasisState::new(Qubit::G, 0, 0),
    BasisState::new(Qubit::E, 0, 0),
    BasisState::new(Qubit::G, 1, 0),
    BasisState::new(Qubit::E, 1, 0),
    BasisState::new(Qubit::G, 0, 1),
    BasisState::new(Qubit::E, 0, 1),
];
const G00: usize = 0;
const E00: usize = 1;
const G10: usize = 2;
const E10: usize = 3;
const G01: usize = 4;
const E01: usize = 5;

/// Gap (rad/ns) below which two manifold levels count as degenerate.
const DEGENERACY_TOL: f64 = 1e-9;

/// Dressed levels |1̃⟩..|6̃⟩, ascending in energy.
#[derive(Clone, Debug)]
pub struct DressedSpectrum {
    /// Eigenvalues (rad/ns) in the Hamiltonian's frame, index 0 is |1̃⟩.
    pub energies: [f64; 6],
    /// Eigenvectors over [`MANIFOLD`], phase-fixed so the dominant
    /// component is real and positive.
    pub vectors: [DVector<C64>; 6],
    pub theta_12: f64,
    pub theta_34: f64,
    pub theta_56: f64,
    pub frame: FrameSpec,
    pub omega_d: f64,
    pub space: Space,
}

impl DressedSpectrum {
    /// Dressed state `label` (1-based) embedded in the full space.
    pub fn state_vector(&self, label: usize) -> DVector<C64> {
        let mut v = DVector::zeros(self.space.dim());
        for (k, s) in MANIFOLD.iter().enumerate() {
            v[self.space.index(*s)] = self.vectors[label - 1][k];
        }
        v
    }

    /// Qubit-space amplitudes (g, e) of |1̃⟩ or |2̃⟩.
    pub fn qubit_amplitudes(&self, label: usize) -> (C64, C64) {
        assert!(label == 1 || label == 2, "only |1~> and |2~> are zero-photon states");
        let v = &self.vectors[label - 1];
        (v[G00], v[E00])
    }

    /// Energy of level `label` with the resonator frame rotations added back (rad/ns).
    fn lab_energy(&self, label: usize) -> f64 {
        let fa = angular(Ghz(self.frame.resonator_a.unwrap_or(0.0)));
        let fb = angular(Ghz(self.frame.resonator_b.unwrap_or(0.0)));
        let shift = match label {
            3 | 4 => fa,
            5 | 6 => fb,
            _ => 0.0,
        };
        self.energies[label - 1] + shift
    }
}

fn mixing_angle(cos_comp: C64, sin_comp: C64) -> f64 {
    // |ψ⟩ = cosθ |cos_basis⟩ − sinθ |sin_basis⟩ up to a global phase
    let c = cos_comp.norm();
    if c == 0.0 {
        return std::f64::consts::FRAC_PI_2;
    }
    let phase = cos_comp.conj() / c;
    (-(sin_comp * phase).re).atan2(c)
}

pub fn diagonalize_dressed(h: &HamiltonianMatrix) -> Result<DressedSpectrum> {
    let space = h.space;
    if space.n_a_max < 1 || space.n_b_max < 1 {
        return Err(Error::invalid("dressed analysis needs at least one photon in each resonator"));
    }
    let idx: Vec<usize> = MANIFOLD.iter().map(|s| space.index(*s)).collect();
    let dim = space.dim();
    for &i in &idx {
        for j in (0..dim).filter(|j| !idx.contains(j)) {
            if h.matrix[(i, j)].norm() != 0.0 {
                return Err(Error::invalid(format!(
                    "Hamiltonian couples {} to {} outside the one-photon manifold",
                    space.state(i),
                    space.state(j)
                )));
            }
        }
    }
    // photon numbers are conserved: each 2×2 block is diagonalized on its
    // own and ordered by energy, so labels do not depend on the frame
    let blocks: [[usize; 2]; 3] = [[G00, E00], [G10, E10], [G01, E01]];
    let mut energies = [0.0; 6];
    let mut vectors: Vec<DVector<C64>> = Vec::with_capacity(6);
    for (b, pair) in blocks.iter().enumerate() {
        let sub = DMatrix::from_fn(2, 2, |r, c| h.matrix[(idx[pair[r]], idx[pair[c]])]);
        let eig = SymmetricEigen::new(sub);
        let (lo, hi) = if eig.eigenvalues[0] <= eig.eigenvalues[1] { (0, 1) } else { (1, 0) };
        let gap = eig.eigenvalues[hi] - eig.eigenvalues[lo];
        if gap < DEGENERACY_TOL {
            return Err(Error::Degenerate(2 * b + 1, 2 * b + 2, gap));
        }
        let mut dominants = Vec::with_capacity(2);
        for (slot, col) in [lo, hi].into_iter().enumerate() {
            let label = 2 * b + slot;
            let c = eig.eigenvectors.column(col);
            let (dom, weight) = (0..2)
                .map(|i| (i, c[i].norm_sqr()))
                .fold((0, 0.0), |acc, (i, w)| if w > acc.1 { (i, w) } else { acc });
            if weight <= 0.5 || dominants.contains(&dom) {
                return Err(Error::AmbiguousLabel {
                    label: label + 1,
                    overlap: weight,
                });
            }
            dominants.push(dom);
            let phase = c[dom].conj() / c[dom].norm();
            let mut v = DVector::zeros(6);
            v[pair[0]] = c[0] * phase;
            v[pair[1]] = c[1] * phase;
            energies[label] = eig.eigenvalues[col];
            vectors.push(v);
        }
    }
    let vectors: [DVector<C64>; 6] = vectors.try_into().expect("six vectors");

    Ok(DressedSpectrum {
        theta_12: mixing_angle(vectors[0][G00], vectors[0][E00]),
        theta_34: mixing_angle(vectors[2][E10], vectors[2][G10]),
        theta_56: mixing_angle(vectors[4][G01], vectors[4][E01]),
        energies,
        vectors,
        frame: h.frame,
        omega_d: h.omega_d,
        space,
    })
}

/// Dressed radiative rates κ̃ᵃ_ji = κ_a|⟨j̃|a†|ĩ⟩|² and κ̃ᵇ_ji = κ_b|⟨j̃|b†|ĩ⟩|² (rad/ns).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayTable {
    pub ka31: f64,
    pub ka32: f64,
    pub ka41: f64,
    pub ka42: f64,
    pub kb51: f64,
    pub kb52: f64,
    pub kb61: f64,
    pub kb62: f64,
    pub kappa_a: f64,
    pub kappa_b: f64,
}

impl DecayTable {
    /// The eight rates divided by κ_a (A) or κ_b (B), ordered
    /// ka31, ka32, ka41, ka42, kb51, kb52, kb61, kb62.
    pub fn normalized(&self) -> [f64; 8] {
        let (a, b) = (self.kappa_a, self.kappa_b);
        [
            self.ka31 / a,
            self.ka32 / a,
            self.ka41 / a,
            self.ka42 / a,
            self.kb51 / b,
            self.kb52 / b,
            self.kb61 / b,
            self.kb62 / b,
        ]
    }

    /// Same rates as linear frequencies (MHz).
    pub fn linear_mhz(&self) -> [f64; 8] {
        [
            self.ka31, self.ka32, self.ka41, self.ka42, self.kb51, self.kb52, self.kb61, self.kb62,
        ]
        .map(|k| Mhz::from_angular(k).0)
    }
}

pub fn decay_table(spec: &DressedSpectrum, dp: &DispersiveParams) -> DecayTable {
    let v = &spec.vectors;
    // raising operators restricted to the manifold: 00 → 10 (a†), 00 → 01 (b†)
    let raise = |j: usize, i: usize, to_g: usize, to_e: usize| -> f64 {
        let amp = v[j][to_g].conj() * v[i][G00] + v[j][to_e].conj() * v[i][E00];
        amp.norm_sqr()
    };
    let (ka, kb) = (dp.kappa_a_ang(), dp.kappa_b_ang());
    DecayTable {
        ka31: ka * raise(2, 0, G10, E10),
        ka32: ka * raise(2, 1, G10, E10),
        ka41: ka * raise(3, 0, G10, E10),
        ka42: ka * raise(3, 1, G10, E10),
        kb51: kb * raise(4, 0, G01, E01),
        kb52: kb * raise(4, 1, G01, E01),
        kb61: kb * raise(5, 0, G01, E01),
        kb62: kb * raise(5, 1, G01, E01),
        kappa_a: ka,
        kappa_b: kb,
    }
}

/// Dressed transition frequencies (GHz). One-photon transitions are lab-frame
/// frequencies; ω̃_21 is the drive-frame splitting of the qubit doublet.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransitionFrequencies {
    pub w21: f64,
    pub w31: f64,
    pub w32: f64,
    pub w41: f64,
    pub w42: f64,
    pub w51: f64,
    pub w61: f64,
}

pub fn transition_frequencies(spec: &DressedSpectrum) -> TransitionFrequencies {
    let e = |l: usize| spec.lab_energy(l);
    let ghz = |x: f64| Ghz::from_angular(x).0;
    TransitionFrequencies {
        w21: ghz(e(2) - e(1)),
        w31: ghz(e(3) - e(1)),
        w32: ghz(e(3) - e(2)),
        w41: ghz(e(4) - e(1)),
        w42: ghz(e(4) - e(2)),
        w51: ghz(e(5) - e(1)),
        w61: ghz(e(6) - e(1)),
    }
}

/// Spectrum and rates at one drive setting, in the qubit-only frame.
pub fn dressed_at(dp: &DispersiveParams, drive: &DriveSpec) -> Result<(DressedSpectrum, DecayTable)> {
    let h = build_hamiltonian(dp, drive, &FrameSpec::qubit_only())?;
    let spec = diagonalize_dressed(&h)?;
    let table = decay_table(&spec, dp);
    Ok((spec, table))
}

/// Default bisection bracket for Ω_d^imp (MHz).
pub const MATCH_BRACKET: (f64, f64) = (0.1, 40.0);
/// Absolute bisection tolerance on Ω_d^imp (MHz), i.e. 1 kHz.
pub const MATCH_TOL_MHZ: f64 = 1e-3;

/// κ̃ᵃ_31 − κ̃ᵃ_32 (rad/ns); zero at impedance matching.
pub fn impedance_mismatch(dp: &DispersiveParams, omega_d: f64, rabi_mhz: f64) -> Result<f64> {
    let (_, t) = dressed_at(dp, &DriveSpec { omega_d, rabi: rabi_mhz })?;
    Ok(t.ka31 - t.ka32)
}

/// Rabi frequency at which the four resonator-A dressed rates coincide,
/// found by bisection of κ̃ᵃ_31 − κ̃ᵃ_32 on [`MATCH_BRACKET`].
pub fn find_impedance_match(dp: &DispersiveParams, omega_d: Ghz) -> Result<Mhz> {
    find_impedance_match_in(dp, omega_d, MATCH_BRACKET)
}

pub fn find_impedance_match_in(dp: &DispersiveParams, omega_d: Ghz, bracket: (f64, f64)) -> Result<Mhz> {
    DriveSpec::new(omega_d, Mhz(bracket.0)).validate(dp)?;
    let f = |x: f64| impedance_mismatch(dp, omega_d.0, x);
    let (mut lo, mut hi) = bracket;
    let (f_lo, f_hi) = (f(lo)?, f(hi)?);
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoBracket { low: lo, high: hi });
    }
    while hi - lo > MATCH_TOL_MHZ {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(Mhz(mid));
        }
        if fm.signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Mhz(0.5 * (lo + hi)))
}
