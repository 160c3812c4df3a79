//! Signed Pauli strings in packed (x|z) form.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gf2::{symplectic_words, tail_mask, words_for, WORD_BITS};

/// Single-site Pauli letter. `Y` denotes the Hermitian Y matrix (`Y = iXZ`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

impl Letter {
    #[inline]
    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Letter::I,
            (true, false) => Letter::X,
            (true, true) => Letter::Y,
            (false, true) => Letter::Z,
        }
    }

    #[inline]
    pub fn bits(self) -> (bool, bool) {
        match self {
            Letter::I => (false, false),
            Letter::X => (true, false),
            Letter::Y => (true, true),
            Letter::Z => (false, true),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Letter::I => 'I',
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }
}

/// Exponent `e` (mod 4) of the phase `i^e` picked up by the letter-wise
/// product of two Pauli strings given as packed words.
#[inline]
pub(crate) fn product_phase_words(ax: &[u64], az: &[u64], bx: &[u64], bz: &[u64]) -> u32 {
    let (mut plus, mut minus) = (0u32, 0u32);
    for i in 0..ax.len() {
        let (a_x, a_y, a_z) = (ax[i] & !az[i], ax[i] & az[i], !ax[i] & az[i]);
        let (b_x, b_y, b_z) = (bx[i] & !bz[i], bx[i] & bz[i], !bx[i] & bz[i]);
        // XY = iZ, YZ = iX, ZX = iY and the reversed orders give -i
        plus += ((a_x & b_y) | (a_y & b_z) | (a_z & b_x)).count_ones();
        minus += ((a_y & b_x) | (a_z & b_y) | (a_x & b_z)).count_ones();
    }
    (plus + 3 * minus) % 4
}

/// A Hermitian Pauli operator `±P₁⊗…⊗P_L`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    len: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    negative: bool,
}

impl PauliString {
    pub fn identity(len: usize) -> Self {
        let w = words_for(len);
        Self { len, x: vec![0; w], z: vec![0; w], negative: false }
    }

    /// `+P` on `site`, identity elsewhere.
    pub fn single(len: usize, site: usize, letter: Letter) -> Self {
        let mut p = Self::identity(len);
        p.set_letter(site, letter);
        p
    }

    pub fn from_letters(letters: &[Letter], negative: bool) -> Self {
        let mut p = Self::identity(letters.len());
        for (i, &l) in letters.iter().enumerate() {
            p.set_letter(i, l);
        }
        p.negative = negative;
        p
    }

    /// Builds from packed words; bits past `len` are cleared.
    pub fn from_words(len: usize, mut x: Vec<u64>, mut z: Vec<u64>, negative: bool) -> Self {
        let w = words_for(len);
        assert!(x.len() == w && z.len() == w, "word count does not match length");
        if w > 0 {
            x[w - 1] &= tail_mask(len);
            z[w - 1] &= tail_mask(len);
        }
        Self { len, x, z, negative }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn x_words(&self) -> &[u64] {
        &self.x
    }

    #[inline]
    pub fn z_words(&self) -> &[u64] {
        &self.z
    }

    #[inline]
    pub fn is_negative(&self) -> bool {
        self.negative
    }

    /// `+1` or `-1`.
    pub fn sign(&self) -> i8 {
        if self.negative {
            -1
        } else {
            1
        }
    }

    pub fn set_negative(&mut self, negative: bool) {
        self.negative = negative;
    }

    pub fn negate(&mut self) {
        self.negative = !self.negative;
    }

    #[inline]
    pub fn letter(&self, site: usize) -> Letter {
        assert!(site < self.len, "site {site} out of range");
        let (w, b) = (site / WORD_BITS, site % WORD_BITS);
        Letter::from_bits(self.x[w] >> b & 1 == 1, self.z[w] >> b & 1 == 1)
    }

    pub fn set_letter(&mut self, site: usize, letter: Letter) {
        assert!(site < self.len, "site {site} out of range");
        let (w, bit) = (site / WORD_BITS, 1u64 << (site % WORD_BITS));
        let (x, z) = letter.bits();
        self.x[w] = if x { self.x[w] | bit } else { self.x[w] & !bit };
        self.z[w] = if z { self.z[w] | bit } else { self.z[w] & !bit };
    }

    /// Two-bit code `x | z << 1` of the letter at `site`.
    #[inline]
    pub(crate) fn code(&self, site: usize) -> u8 {
        let (w, b) = (site / WORD_BITS, site % WORD_BITS);
        ((self.x[w] >> b & 1) | (self.z[w] >> b & 1) << 1) as u8
    }

    #[inline]
    pub(crate) fn set_code(&mut self, site: usize, code: u8) {
        let (w, b) = (site / WORD_BITS, site % WORD_BITS);
        let bit = 1u64 << b;
        self.x[w] = (self.x[w] & !bit) | (u64::from(code) & 1) << b;
        self.z[w] = (self.z[w] & !bit) | (u64::from(code) >> 1 & 1) << b;
    }

    /// True when every site carries `I` (the sign is not inspected).
    pub fn is_identity(&self) -> bool {
        self.x.iter().chain(&self.z).all(|&w| w == 0)
    }

    pub fn weight(&self) -> usize {
        self.x.iter().zip(&self.z).map(|(x, z)| (x | z).count_ones() as usize).sum()
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        !symplectic_words(&self.x, &self.z, &other.x, &other.z)
    }

    /// Operator product `self · other`.
    ///
    /// Fails if the operands anticommute, since the product then carries a
    /// factor of `±i` and is not Hermitian.
    pub fn multiply(&self, other: &PauliString) -> Result<PauliString> {
        let mut out = self.clone();
        out.mul_assign_right(other)?;
        Ok(out)
    }

    /// `self ← self · other`.
    pub fn mul_assign_right(&mut self, other: &PauliString) -> Result<()> {
        if self.len != other.len {
            return Err(Error::LengthMismatch { left: self.len, right: other.len });
        }
        let phase = product_phase_words(&self.x, &self.z, &other.x, &other.z);
        if phase % 2 == 1 {
            return Err(Error::NonHermitianProduct);
        }
        for (a, b) in self.x.iter_mut().zip(&other.x) {
            *a ^= b;
        }
        for (a, b) in self.z.iter_mut().zip(&other.z) {
            *a ^= b;
        }
        self.negative ^= other.negative ^ (phase == 2);
        Ok(())
    }

    /// Product `self · other` as `(i^e, letters)` with the sign folded into
    /// `e`; defined for anticommuting operands too.
    pub fn product_with_phase(&self, other: &PauliString) -> Result<(u32, PauliString)> {
        if self.len != other.len {
            return Err(Error::LengthMismatch { left: self.len, right: other.len });
        }
        let mut phase = product_phase_words(&self.x, &self.z, &other.x, &other.z);
        phase = (phase + 2 * u32::from(self.negative ^ other.negative)) % 4;
        let x = self.x.iter().zip(&other.x).map(|(a, b)| a ^ b).collect();
        let z = self.z.iter().zip(&other.z).map(|(a, b)| a ^ b).collect();
        Ok((phase, PauliString { len: self.len, x, z, negative: false }))
    }

    /// Copy with every site outside `mask` replaced by `I`.
    pub fn restricted(&self, mask: &[u64]) -> PauliString {
        let mut out = self.clone();
        for ((x, z), m) in out.x.iter_mut().zip(out.z.iter_mut()).zip(mask) {
            *x &= m;
            *z &= m;
        }
        out
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> + '_ {
        (0..self.len).map(|i| self.letter(i))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.negative { "-" } else { "+" })?;
        for l in self.letters() {
            write!(f, "{}", l.as_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Parses `"+XZI"`, `"-YY"` or an unsigned `"XZ"`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (negative, body) = match s.as_bytes().first() {
            Some(b'-') => (true, &s[1..]),
            Some(b'+') => (false, &s[1..]),
            _ => (false, s),
        };
        let letters = body
            .chars()
            .map(|c| match c.to_ascii_uppercase() {
                'I' | '_' => Ok(Letter::I),
                'X' => Ok(Letter::X),
                'Y' => Ok(Letter::Y),
                'Z' => Ok(Letter::Z),
                other => Err(Error::Parse(format!("unexpected Pauli letter {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PauliString::from_letters(&letters, negative))
    }
}
