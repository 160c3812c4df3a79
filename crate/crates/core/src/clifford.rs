//! Two-qubit Clifford gates as signed truth tables.
//!
//! A gate is fixed (up to global phase) by the images of `X_a, Z_a, X_b, Z_b`
//! under conjugation. Applying it to a generator only needs the generator's
//! letters on the two sites, so each gate precomputes the image of all 16
//! two-site letter pairs together with the resulting sign flip.
//!
//! Two-site Pauli codes pack `(x_a, z_a, x_b, z_b)` into bits 0..4.
//!
//! For bit-sliced application the same map is also stored as a linear
//! part (each output bit is an XOR of input bits) and the algebraic normal
//! form of the sign flip as a function of the four input bits.

use std::fmt;
use std::sync::OnceLock;

use rand::Rng;

use crate::error::{Error, Result};
use crate::pauli::PauliString;

/// Phase exponent (mod 4) of the single-site product `a·b` for 2-bit codes
/// `x | z << 1` (0 = I, 1 = X, 2 = Z, 3 = Y).
const SITE_PHASE: [[u8; 4]; 4] = [
    // b:  I  X  Z  Y
    [0, 0, 0, 0], // I
    [0, 0, 3, 1], // X: XZ = -iY, XY = iZ
    [0, 1, 0, 3], // Z: ZX = iY, ZY = -iX
    [0, 3, 1, 0], // Y: YX = -iZ, YZ = iX
];

/// Swaps x and z bits on both sites of a 4-bit code.
#[inline]
fn swap_xz(v: u8) -> u8 {
    ((v & 0b0101) << 1) | ((v & 0b1010) >> 1)
}

/// Symplectic form on two-site codes: 1 iff the operators anticommute.
#[inline]
pub fn omega(u: u8, v: u8) -> u8 {
    ((u & swap_xz(v)).count_ones() & 1) as u8
}

/// A Hermitian two-site Pauli: code plus sign.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Pauli2 {
    pub code: u8,
    pub negative: bool,
}

impl Pauli2 {
    pub const fn new(code: u8, negative: bool) -> Self {
        Self { code, negative }
    }

    pub fn to_pauli_string(self) -> PauliString {
        let mut p = PauliString::identity(2);
        p.set_code(0, self.code & 3);
        p.set_code(1, self.code >> 2);
        p.set_negative(self.negative);
        p
    }
}

impl fmt::Display for Pauli2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_pauli_string())
    }
}

/// `(i^e_a · a) · (i^e_b · b)` on codes with phases mod 4.
#[inline]
fn mul_phased(a: (u8, u8), b: (u8, u8)) -> (u8, u8) {
    let (ea, ca) = a;
    let (eb, cb) = b;
    let e = ea + eb + SITE_PHASE[(ca & 3) as usize][(cb & 3) as usize] + SITE_PHASE[(ca >> 2) as usize][(cb >> 2) as usize];
    (e % 4, ca ^ cb)
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct CliffordGate2 {
    images: [Pauli2; 4],
    /// Entry for input code `c`: output code in bits 0..4, sign flip in bit 4.
    table: [u8; 16],
    /// Output bit `t` is the XOR of the input bits selected by `linear[t]`.
    linear: [u8; 4],
    /// Bit `m` set iff the monomial `Π_{v ∈ m} in_v` appears in the sign flip.
    flip_anf: u16,
}

fn linear_part(codes: [u8; 4]) -> [u8; 4] {
    std::array::from_fn(|t| (0..4).map(|k| (codes[k] >> t & 1) << k).sum())
}

/// Möbius transform of the flip bit of `table`.
fn flip_anf(table: &[u8; 16]) -> u16 {
    let mut a: [u8; 16] = table.map(|t| t >> 4 & 1);
    for i in 0..4 {
        for c in 0..16 {
            if c & (1 << i) != 0 {
                a[c] ^= a[c ^ (1 << i)];
            }
        }
    }
    a.iter().enumerate().map(|(m, &bit)| u16::from(bit) << m).sum()
}

impl CliffordGate2 {
    /// Builds a gate from the images of `X_a, Z_a, X_b, Z_b`.
    pub fn from_images(images: [Pauli2; 4]) -> Result<Self> {
        let c = images.map(|p| p.code);
        if c.iter().any(|&v| v > 0b1111) {
            return Err(Error::InvalidClifford("code out of range"));
        }
        let expected = |i: usize, j: usize| u8::from(i / 2 == j / 2 && i != j);
        for i in 0..4 {
            for j in 0..4 {
                if omega(c[i], c[j]) != expected(i, j) {
                    return Err(Error::InvalidClifford("images break the commutation relations"));
                }
            }
        }
        let mut table = [0u8; 16];
        for (input, entry) in table.iter_mut().enumerate() {
            let input = input as u8;
            let (xa, za, xb, zb) = (input & 1, input >> 1 & 1, input >> 2 & 1, input >> 3 & 1);
            // P = i^{xa·za + xb·zb} X_a^xa Z_a^za X_b^xb Z_b^zb
            let mut acc = ((xa & za) + (xb & zb), 0u8);
            for (k, &on) in [xa, za, xb, zb].iter().enumerate() {
                if on == 1 {
                    acc = mul_phased(acc, (2 * u8::from(images[k].negative), images[k].code));
                }
            }
            let (e, code) = acc;
            if e % 2 == 1 {
                return Err(Error::InvalidClifford("image of a Hermitian Pauli is not Hermitian"));
            }
            *entry = code | u8::from(e == 2) << 4;
        }
        Ok(Self { images, table, linear: linear_part(c), flip_anf: flip_anf(&table) })
    }

    /// Same symplectic part as `base` (whose images are all positive) with
    /// image signs taken from the bits of `signs`.
    fn with_signs(base: &CliffordGate2, signs: u8) -> Self {
        let images = std::array::from_fn(|k| Pauli2::new(base.images[k].code, signs >> k & 1 == 1));
        // each negative image used in the product contributes one factor −1
        let table = std::array::from_fn(|c| base.table[c] ^ (((c as u8 & signs).count_ones() as u8 & 1) << 4));
        let flip_anf = (0..4).filter(|k| signs >> k & 1 == 1).fold(base.flip_anf, |acc, k| acc ^ (1 << (1 << k)));
        Self { images, table, linear: base.linear, flip_anf }
    }

    pub fn identity() -> Self {
        Self::from_images([Pauli2::new(0b0001, false), Pauli2::new(0b0010, false), Pauli2::new(0b0100, false), Pauli2::new(0b1000, false)])
            .expect("identity is a Clifford")
    }

    /// CNOT with the first site as control.
    pub fn cnot() -> Self {
        Self::from_images([Pauli2::new(0b0101, false), Pauli2::new(0b0010, false), Pauli2::new(0b0100, false), Pauli2::new(0b1010, false)])
            .expect("CNOT is a Clifford")
    }

    pub fn cz() -> Self {
        Self::from_images([Pauli2::new(0b1001, false), Pauli2::new(0b0010, false), Pauli2::new(0b0110, false), Pauli2::new(0b1000, false)])
            .expect("CZ is a Clifford")
    }

    pub fn swap() -> Self {
        Self::from_images([Pauli2::new(0b0100, false), Pauli2::new(0b1000, false), Pauli2::new(0b0001, false), Pauli2::new(0b0010, false)])
            .expect("SWAP is a Clifford")
    }

    /// Hadamard on the first site.
    pub fn hadamard_a() -> Self {
        Self::from_images([Pauli2::new(0b0010, false), Pauli2::new(0b0001, false), Pauli2::new(0b0100, false), Pauli2::new(0b1000, false)])
            .expect("H is a Clifford")
    }

    /// Phase gate S on the first site: X → Y, Z → Z.
    pub fn phase_a() -> Self {
        Self::from_images([Pauli2::new(0b0011, false), Pauli2::new(0b0010, false), Pauli2::new(0b0100, false), Pauli2::new(0b1000, false)])
            .expect("S is a Clifford")
    }

    pub fn images(&self) -> &[Pauli2; 4] {
        &self.images
    }

    /// Image of an arbitrary two-site code, as `(code, sign flip)`.
    #[inline]
    pub fn map_code(&self, code: u8) -> (u8, bool) {
        let t = self.table[code as usize];
        (t & 0b1111, t & 0b1_0000 != 0)
    }

    /// Conjugates `p` by the gate acting on sites `(a, b)`.
    #[inline]
    pub fn conjugate(&self, p: &mut PauliString, a: usize, b: usize) {
        let code = p.code(a) | p.code(b) << 2;
        if code == 0 {
            return;
        }
        let t = self.table[code as usize];
        p.set_code(a, t & 3);
        p.set_code(b, t >> 2 & 3);
        if t & 0b1_0000 != 0 {
            p.negate();
        }
    }

    /// Conjugates 64 Paulis at once. `w` holds the bit planes
    /// `(x_a, z_a, x_b, z_b)`; returns the new planes and the sign-flip mask.
    #[inline]
    pub fn conjugate_words(&self, w: [u64; 4]) -> ([u64; 4], u64) {
        let select = |mask: u8, k: usize| w[k] & 0u64.wrapping_sub(u64::from(mask >> k & 1));
        let out = self.linear.map(|m| select(m, 0) ^ select(m, 1) ^ select(m, 2) ^ select(m, 3));
        let mut flip = 0u64;
        let mut anf = self.flip_anf;
        while anf != 0 {
            let m = anf.trailing_zeros();
            anf &= anf - 1;
            let mut term = u64::MAX;
            for (v, plane) in w.iter().enumerate() {
                if m >> v & 1 == 1 {
                    term &= plane;
                }
            }
            flip ^= term;
        }
        (out, flip)
    }

    /// Identifies the symplectic part (one of 720 classes).
    pub fn symplectic_key(&self) -> u16 {
        self.images.iter().enumerate().map(|(k, p)| u16::from(p.code) << (4 * k)).sum()
    }

    /// Identifies the gate up to global phase (one of 11520 elements).
    pub fn element_key(&self) -> u32 {
        let signs: u32 = self.images.iter().enumerate().map(|(k, p)| u32::from(p.negative) << k).sum();
        u32::from(self.symplectic_key()) | signs << 16
    }
}

impl fmt::Debug for CliffordGate2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [xa, za, xb, zb] = self.images;
        write!(f, "CliffordGate2(XI→{xa}, ZI→{za}, IX→{xb}, IZ→{zb})")
    }
}

/// Uniform choice among the nonzero codes accepted by `accept`.
fn sample_code<R: Rng + ?Sized>(rng: &mut R, accept: impl Fn(u8) -> bool) -> u8 {
    let mut admissible = [0u8; 15];
    let mut n = 0;
    for v in (1..16u8).filter(|&v| accept(v)) {
        admissible[n] = v;
        n += 1;
    }
    admissible[rng.random_range(0..n)]
}

/// Draws a uniformly random two-qubit Clifford (mod global phase).
///
/// The symplectic part is built column by column: a random nonzero image of
/// `X_a`, a random partner for `Z_a` with unit symplectic product, then the
/// same for the second site inside the symplectic complement. Each choice is
/// uniform over its admissible set (15·8·3·2 = 720 outcomes), and the four
/// image signs are independent fair bits (×16).
pub fn sample_clifford2<R: Rng + ?Sized>(rng: &mut R) -> CliffordGate2 {
    let v1 = sample_code(rng, |_| true);
    let w1 = sample_code(rng, |w| omega(v1, w) == 1);
    let v2 = sample_code(rng, |v| omega(v1, v) == 0 && omega(w1, v) == 0);
    let w2 = sample_code(rng, |w| omega(v1, w) == 0 && omega(w1, w) == 0 && omega(v2, w) == 1);
    let signs: u8 = rng.random_range(0..16);
    let key = u16::from(v1) | u16::from(w1) << 4 | u16::from(v2) << 8 | u16::from(w2) << 12;
    CliffordGate2::with_signs(symplectic_class(key), signs)
}

/// Positive-sign gates for all 720 symplectic classes, indexed by
/// [`CliffordGate2::symplectic_key`]. Built once on first use.
fn symplectic_class(key: u16) -> &'static CliffordGate2 {
    static CLASSES: OnceLock<Vec<Option<CliffordGate2>>> = OnceLock::new();
    let classes = CLASSES.get_or_init(|| {
        let mut out = vec![None; 1 << 16];
        for v1 in 1..16u8 {
            for w1 in (1..16u8).filter(|&w| omega(v1, w) == 1) {
                for v2 in (1..16u8).filter(|&v| omega(v1, v) == 0 && omega(w1, v) == 0) {
                    for w2 in (1..16u8).filter(|&w| omega(v1, w) == 0 && omega(w1, w) == 0 && omega(v2, w) == 1) {
                        let gate = CliffordGate2::from_images([v1, w1, v2, w2].map(|c| Pauli2::new(c, false))).expect("symplectic by construction");
                        out[gate.symplectic_key() as usize] = Some(gate);
                    }
                }
            }
        }
        out
    });
    classes[key as usize].as_ref().expect("sampled images are symplectic")
}
