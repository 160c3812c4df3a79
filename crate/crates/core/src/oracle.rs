//! Exact dense density-matrix simulation for small chains.
//!
//! Site `s` is bit `s` of the computational-basis index. Everything here is
//! brute force and exists to cross-check the stabilizer engine.

use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64;

use crate::circuit::{brickwork_step, random_pair_step, CircuitTarget};
use crate::clifford::CliffordGate2;
use crate::error::{Error, Result};
use crate::observables::{log_purity, negativity, Cut};
use crate::pauli::PauliString;
use crate::rng::RandomSource;
use crate::stabilizer::StabilizerState;

pub const ORACLE_MAX_SITES: usize = 8;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn check_size(sites: usize) -> Result<()> {
    if sites > ORACLE_MAX_SITES {
        return Err(Error::OracleTooLarge { sites, max: ORACLE_MAX_SITES });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseState {
    sites: usize,
    rho: DMatrix<Complex64>,
}

impl DenseState {
    /// `|0…0⟩⟨0…0|`.
    pub fn zero(sites: usize) -> Result<Self> {
        check_size(sites)?;
        let dim = 1 << sites;
        let mut rho = DMatrix::zeros(dim, dim);
        rho[(0, 0)] = ONE;
        Ok(Self { sites, rho })
    }

    pub fn maximally_mixed(sites: usize) -> Result<Self> {
        check_size(sites)?;
        let dim = 1 << sites;
        Ok(Self { sites, rho: DMatrix::identity(dim, dim) / Complex64::from(dim as f64) })
    }

    pub fn from_matrix(sites: usize, rho: DMatrix<Complex64>) -> Result<Self> {
        check_size(sites)?;
        let dim = 1 << sites;
        if rho.nrows() != dim || rho.ncols() != dim {
            return Err(Error::LengthMismatch { left: rho.nrows(), right: dim });
        }
        Ok(Self { sites, rho })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn rho(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    /// Hermitian and unit trace within 1e−12, eigenvalues above −1e−10.
    pub fn check_invariants(&self) -> Result<()> {
        let herm = (&self.rho - self.rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > 1e-12 {
            return Err(Error::InvariantViolation(format!("density matrix not Hermitian (deviation {herm:e})")));
        }
        let tr = self.trace();
        if (tr - ONE).norm() > 1e-12 {
            return Err(Error::InvariantViolation(format!("trace {tr} ≠ 1")));
        }
        let min = self.rho.clone().symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        if min < -1e-10 {
            return Err(Error::InvariantViolation(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &DenseState) -> f64 {
        (&self.rho - &other.rho).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `ρ → U ρ U†` for a 4×4 `U` on sites `(a, b)`; `a` is the low bit of
    /// the local index.
    pub fn apply_unitary2(&mut self, u: &Matrix4<Complex64>, a: usize, b: usize) -> Result<()> {
        if a >= self.sites || b >= self.sites || a == b {
            return Err(Error::InvalidSitePair(a, b));
        }
        let dim = 1usize << self.sites;
        let (ma, mb) = (1usize << a, 1usize << b);
        let u_conj = u.map(|z| z.conj());
        let mut buf = [ZERO; 4];
        for base in (0..dim).filter(|i| i & (ma | mb) == 0) {
            let idx = [base, base | ma, base | mb, base | ma | mb];
            // rows: ρ ← U ρ
            for c in 0..dim {
                for (r, slot) in buf.iter_mut().enumerate() {
                    *slot = (0..4).map(|k| u[(r, k)] * self.rho[(idx[k], c)]).sum();
                }
                for r in 0..4 {
                    self.rho[(idx[r], c)] = buf[r];
                }
            }
            // columns: ρ ← ρ U†
            for r in 0..dim {
                for (c, slot) in buf.iter_mut().enumerate() {
                    *slot = (0..4).map(|k| self.rho[(r, idx[k])] * u_conj[(c, k)]).sum();
                }
                for c in 0..4 {
                    self.rho[(r, idx[c])] = buf[c];
                }
            }
        }
        Ok(())
    }
}

/// `tr_i(ρ) ⊗ |0⟩⟨0|_i`.
pub fn dense_reset(state: &DenseState, site: usize) -> Result<DenseState> {
    if site >= state.sites {
        return Err(Error::SiteOutOfRange { site, sites: state.sites });
    }
    let dim = 1usize << state.sites;
    let bit = 1usize << site;
    let rho = DMatrix::from_fn(dim, dim, |a, b| {
        if a & bit != 0 || b & bit != 0 {
            ZERO
        } else {
            state.rho[(a, b)] + state.rho[(a | bit, b | bit)]
        }
    });
    Ok(DenseState { sites: state.sites, rho })
}

/// `−log₂ tr ρ²`.
pub fn dense_purity(state: &DenseState) -> f64 {
    -state.rho.iter().map(|z| z.norm_sqr()).sum::<f64>().log2()
}

/// Partial transpose over the sites of `cut`.
pub fn partial_transpose(state: &DenseState, cut: &Cut) -> Result<DMatrix<Complex64>> {
    if cut.sites() != state.sites {
        return Err(Error::LengthMismatch { left: cut.sites(), right: state.sites });
    }
    let mask: usize = cut.members().iter().map(|&s| 1usize << s).sum();
    let dim = 1usize << state.sites;
    Ok(DMatrix::from_fn(dim, dim, |a, b| {
        let a2 = (a & !mask) | (b & mask);
        let b2 = (b & !mask) | (a & mask);
        state.rho[(a2, b2)]
    }))
}

/// `log₂ ‖ρ^{Γ_A}‖₁`; the partial transpose is Hermitian, so the trace norm
/// is the sum of absolute eigenvalues.
pub fn dense_negativity(state: &DenseState, cut: &Cut) -> Result<f64> {
    let pt = partial_transpose(state, cut)?;
    Ok(pt.symmetric_eigenvalues().iter().map(|e| e.abs()).sum::<f64>().log2())
}

/// Applies the Pauli string `p` to basis state `|b⟩`: returns `(amplitude, b')`.
fn pauli_on_basis(p: &PauliString, b: usize) -> (Complex64, usize) {
    let x = p.x_words().first().copied().unwrap_or(0) as usize;
    let z = p.z_words().first().copied().unwrap_or(0) as usize;
    // Y = iXZ: Z acts first, then X
    let ys = (x & z).count_ones();
    let mut amp = match ys % 4 {
        0 => ONE,
        1 => Complex64::new(0.0, 1.0),
        2 => -ONE,
        _ => Complex64::new(0.0, -1.0),
    };
    if (z & b).count_ones() % 2 == 1 {
        amp = -amp;
    }
    if p.is_negative() {
        amp = -amp;
    }
    (amp, b ^ x)
}

/// Dense matrix of a signed Pauli string.
pub fn pauli_matrix(p: &PauliString) -> Result<DMatrix<Complex64>> {
    check_size(p.len())?;
    let dim = 1usize << p.len();
    let mut m = DMatrix::zeros(dim, dim);
    for b in 0..dim {
        let (amp, out) = pauli_on_basis(p, b);
        m[(out, b)] = amp;
    }
    Ok(m)
}

/// `ρ = 2^{−L} Σ_{g ∈ G} g`, the expansion of `2^{k−L} Π (1 + g_l)/2`.
pub fn dense_stabilizer_state(state: &StabilizerState) -> Result<DenseState> {
    check_size(state.sites())?;
    let dim = 1usize << state.sites();
    let mut rho = DMatrix::zeros(dim, dim);
    for g in state.group_elements() {
        for b in 0..dim {
            let (amp, out) = pauli_on_basis(&g, b);
            rho[(out, b)] += amp;
        }
    }
    rho /= Complex64::from(dim as f64);
    Ok(DenseState { sites: state.sites(), rho })
}

fn pauli2_matrix(p: crate::clifford::Pauli2) -> Matrix4<Complex64> {
    let s = p.to_pauli_string();
    Matrix4::from_fn(|r, c| {
        let (amp, out) = pauli_on_basis(&s, c);
        if out == r {
            amp
        } else {
            ZERO
        }
    })
}

/// A 4×4 unitary (up to global phase) whose conjugation action matches the
/// gate's truth table. Column `b₀ + 2b₁` is `X_a'^{b₀} X_b'^{b₁}|ψ₀⟩`, where
/// primes denote images and `|ψ₀⟩` is the joint +1 eigenvector of `Z_a'`, `Z_b'`.
pub fn gate_unitary(gate: &CliffordGate2) -> Matrix4<Complex64> {
    let [xa, za, xb, zb] = gate.images().map(pauli2_matrix);
    let id = Matrix4::<Complex64>::identity();
    let projector = (id + za) * (id + zb) * Complex64::from(0.25);
    let col = (0..4).map(|c| projector.column(c).into_owned()).max_by(|a, b| a.norm().total_cmp(&b.norm())).expect("rank-one projector");
    let psi0 = col / Complex64::from(col.norm());
    let mut u = Matrix4::zeros();
    for (b, column) in [psi0, xa * psi0, xb * psi0, xa * xb * psi0].into_iter().enumerate() {
        u.set_column(b, &column);
    }
    u
}

impl CircuitTarget for DenseState {
    fn apply_gate(&mut self, gate: &CliffordGate2, a: usize, b: usize) -> Result<()> {
        self.apply_unitary2(&gate_unitary(gate), a, b)
    }

    fn reset(&mut self, site: usize) -> Result<()> {
        *self = dense_reset(self, site)?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    /// Even/odd links of the periodic chain; needs even `L`.
    Brickwork,
    /// `L` gates on random pairs per step; any `L ≥ 2`.
    RandomPairs,
}

impl Layout {
    /// Brickwork for even chains, random pairs otherwise.
    pub fn for_sites(sites: usize) -> Self {
        if sites % 2 == 0 {
            Layout::Brickwork
        } else {
            Layout::RandomPairs
        }
    }

    pub fn step<T: CircuitTarget + ?Sized>(self, target: &mut T, sites: usize, q: f64, rng: &mut RandomSource) -> Result<usize> {
        match self {
            Layout::Brickwork => brickwork_step(target, sites, q, rng),
            Layout::RandomPairs => random_pair_step(target, sites, q, rng),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoSimCase {
    pub sites: usize,
    pub steps: usize,
    pub p: f64,
    pub seed: u64,
    pub stream: u64,
    pub layout: Layout,
    pub cut: Cut,
}

impl CoSimCase {
    /// Half-chain cut and the default layout for `sites`.
    pub fn new(sites: usize, steps: usize, p: f64, seed: u64, stream: u64) -> Result<Self> {
        Ok(Self { sites, steps, p, seed, stream, layout: Layout::for_sites(sites), cut: Cut::half_chain(sites)? })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoSimOutcome {
    pub stabilizer_sp: usize,
    pub stabilizer_en: usize,
    pub dense_sp: f64,
    pub dense_en: f64,
    /// Largest elementwise gap between the dense state and the stabilizer state's matrix.
    pub max_state_diff: f64,
    pub resets: usize,
}

impl CoSimOutcome {
    pub fn matches(&self, tol: f64) -> bool {
        (self.stabilizer_sp as f64 - self.dense_sp).abs() <= tol
            && (self.stabilizer_en as f64 - self.dense_en).abs() <= tol
            && self.max_state_diff <= tol
    }
}

/// Replays one random circuit on both engines. Each engine gets its own
/// `RandomSource` built from the same `(seed, stream)`, so both consume
/// the identical decision sequence.
pub fn cosimulate(case: &CoSimCase) -> Result<CoSimOutcome> {
    check_size(case.sites)?;
    if case.layout == Layout::Brickwork && case.sites % 2 != 0 {
        return Err(Error::InvalidConfig(format!("brickwork needs even L, got {}", case.sites)));
    }
    let q = case.p / case.sites as f64;
    let mut stab = StabilizerState::zero(case.sites);
    let mut rng = RandomSource::new(case.seed, case.stream);
    let mut resets = 0;
    for _ in 0..case.steps {
        resets += case.layout.step(&mut stab, case.sites, q, &mut rng)?;
    }
    let mut dense = DenseState::zero(case.sites)?;
    let mut rng = RandomSource::new(case.seed, case.stream);
    let mut dense_resets = 0;
    for _ in 0..case.steps {
        dense_resets += case.layout.step(&mut dense, case.sites, q, &mut rng)?;
    }
    if resets != dense_resets {
        return Err(Error::InvariantViolation("engines saw different reset streams".into()));
    }
    Ok(CoSimOutcome {
        stabilizer_sp: log_purity(&stab),
        stabilizer_en: negativity(&stab, &case.cut)?,
        dense_sp: dense_purity(&dense),
        dense_en: dense_negativity(&dense, &case.cut)?,
        max_state_diff: dense.max_abs_diff(&dense_stabilizer_state(&stab)?),
        resets,
    })
}

/// One stage of the two-site reset walk-through from the Bell pair.
#[derive(Clone, Debug, PartialEq)]
pub struct ResetStage {
    pub site: usize,
    pub stabilizer: StabilizerState,
    pub dense: DenseState,
    /// Closed-form target density matrix.
    pub expected: DenseState,
    pub stabilizer_sp: usize,
    pub dense_sp: f64,
}

/// Resets site 0 and then site 1 of `(|00⟩ + |11⟩)/√2` on both engines.
/// The targets are `|0⟩⟨0| ⊗ I/2` and `|00⟩⟨00|`.
pub fn bell_reset_sequence() -> Result<Vec<ResetStage>> {
    let mut stab: StabilizerState = "+XX\n+ZZ".parse()?;
    let mut dense = dense_stabilizer_state(&stab)?;
    let half = Complex64::from(0.5);
    // site 0 is the low bit: |0⟩⟨0|_0 ⊗ I/2 has weight on indices 0 (00) and 2 (site 1 set)
    let mut first = DMatrix::zeros(4, 4);
    first[(0, 0)] = half;
    first[(2, 2)] = half;
    let targets = [DenseState::from_matrix(2, first)?, DenseState::zero(2)?];
    let mut stages = Vec::new();
    for (site, expected) in [0, 1].into_iter().zip(targets) {
        stab.reset(site)?;
        dense = dense_reset(&dense, site)?;
        stages.push(ResetStage {
            site,
            stabilizer: stab.clone(),
            dense: dense.clone(),
            expected,
            stabilizer_sp: log_purity(&stab),
            dense_sp: dense_purity(&dense),
        });
    }
    Ok(stages)
}
