//! Mixed stabilizer states stored as `k ≤ L` independent commuting generators.
//!
//! The state is `ρ = 2^{-L} Σ_{g∈G} g` where `G` is the group generated by
//! the rows. There are no destabilizer rows: the reset channel changes `k`,
//! and every observable here is a function of the stabilizer group alone.

use std::fmt;
use std::str::FromStr;

use crate::clifford::CliffordGate2;
use crate::error::{Error, Result};
use crate::gf2::{words_for, BitMatrix, WORD_BITS};
use crate::pauli::PauliString;

/// Generators are stored column-major: for every site there is one
/// x-plane and one z-plane holding bit `r` of generator `r`, so a two-site
/// gate touches four planes and updates all generators with word operations.
/// Bits at positions `≥ k` are always zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct StabilizerState {
    sites: usize,
    k: usize,
    /// Words per plane.
    stride: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    sign: Vec<u64>,
}

#[inline]
fn bit(words: &[u64], r: usize) -> bool {
    words[r / WORD_BITS] >> (r % WORD_BITS) & 1 == 1
}

#[inline]
fn put(words: &mut [u64], r: usize, value: bool) {
    let (w, m) = (r / WORD_BITS, 1u64 << (r % WORD_BITS));
    if value {
        words[w] |= m;
    } else {
        words[w] &= !m;
    }
}

/// Removes bit `r` and shifts the higher bits down by one.
fn delete_bit(words: &mut [u64], r: usize) {
    let (w, b) = (r / WORD_BITS, r % WORD_BITS);
    let low = words[w] & ((1u64 << b) - 1);
    let high = if b == 63 { 0 } else { words[w] >> (b + 1) << b };
    words[w] = low | high;
    for i in w + 1..words.len() {
        let carry = words[i] & 1;
        words[i - 1] |= carry << 63;
        words[i] >>= 1;
    }
}

impl StabilizerState {
    fn empty(sites: usize) -> Self {
        let stride = words_for(sites.max(1));
        Self { sites, k: 0, stride, x: vec![0; sites * stride], z: vec![0; sites * stride], sign: vec![0; stride] }
    }

    /// The pure product state `|0…0⟩`, generated by `+Z_i` in site order.
    pub fn zero(sites: usize) -> Self {
        let mut s = Self::empty(sites);
        for i in 0..sites {
            put(&mut s.z[i * s.stride..(i + 1) * s.stride], i, true);
        }
        s.k = sites;
        s
    }

    /// `I / 2^L`: no generators.
    pub fn maximally_mixed(sites: usize) -> Self {
        Self::empty(sites)
    }

    /// Validates and wraps a generator list, keeping its order.
    pub fn from_generators(sites: usize, generators: Vec<PauliString>) -> Result<Self> {
        canonical_generators(sites, &generators)?;
        let mut s = Self::empty(sites);
        for g in &generators {
            s.push_generator(g);
        }
        Ok(s)
    }

    /// Parses one generator per line, e.g. `"+XX\n+ZZ"`. Blank lines are skipped.
    pub fn parse(sites: usize, text: &str) -> Result<Self> {
        let gens = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::parse)
            .collect::<Result<Vec<PauliString>>>()?;
        Self::from_generators(sites, gens)
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    /// Number of generators `k`.
    pub fn rank(&self) -> usize {
        self.k
    }

    pub fn is_pure(&self) -> bool {
        self.k == self.sites
    }

    /// The x- and z-planes of `site`: bit `r` belongs to generator `r`.
    #[inline]
    pub fn site_planes(&self, site: usize) -> (&[u64], &[u64]) {
        let r = site * self.stride..(site + 1) * self.stride;
        (&self.x[r.clone()], &self.z[r])
    }

    /// Sign plane: bit `r` set iff generator `r` is negative.
    pub fn sign_plane(&self) -> &[u64] {
        &self.sign
    }

    /// Mask with bits `0..k` set.
    pub fn row_mask(&self) -> Vec<u64> {
        (0..self.stride)
            .map(|w| {
                let lo = w * WORD_BITS;
                match self.k.saturating_sub(lo) {
                    0 => 0,
                    n if n >= WORD_BITS => u64::MAX,
                    n => (1u64 << n) - 1,
                }
            })
            .collect()
    }

    /// Generator `r` as a Pauli string.
    pub fn generator(&self, r: usize) -> PauliString {
        assert!(r < self.k, "generator {r} out of range for k = {}", self.k);
        let mut x = vec![0u64; words_for(self.sites)];
        let mut z = vec![0u64; words_for(self.sites)];
        for site in 0..self.sites {
            let (xp, zp) = self.site_planes(site);
            if bit(xp, r) {
                put(&mut x, site, true);
            }
            if bit(zp, r) {
                put(&mut z, site, true);
            }
        }
        PauliString::from_words(self.sites, x, z, bit(&self.sign, r))
    }

    pub fn generators(&self) -> Vec<PauliString> {
        (0..self.k).map(|r| self.generator(r)).collect()
    }

    /// Appends a generator without validation.
    pub(crate) fn push_generator(&mut self, p: &PauliString) {
        assert!(self.k < self.stride * WORD_BITS && p.len() == self.sites);
        let r = self.k;
        for site in 0..self.sites {
            let (px, pz) = p.letter(site).bits();
            let span = site * self.stride..(site + 1) * self.stride;
            put(&mut self.x[span.clone()], r, px);
            put(&mut self.z[span], r, pz);
        }
        put(&mut self.sign, r, p.is_negative());
        self.k += 1;
    }

    /// Deletes generator `r`, keeping the order of the others.
    pub(crate) fn remove_generator(&mut self, r: usize) {
        assert!(r < self.k);
        for plane in self.x.chunks_mut(self.stride).chain(self.z.chunks_mut(self.stride)) {
            delete_bit(plane, r);
        }
        delete_bit(&mut self.sign, r);
        self.k -= 1;
    }

    /// Replaces every generator `m` selected by `targets` with `g_rep · g_m`.
    ///
    /// The phase of each product is accumulated mod 4 in two bit planes; an
    /// odd result means `rep` anticommutes with a target.
    pub(crate) fn multiply_into(&mut self, rep: usize, targets: &[u64]) -> Result<()> {
        debug_assert!(!bit(targets, rep));
        let mut e0 = vec![0u64; self.stride];
        let mut e1 = vec![0u64; self.stride];
        for site in 0..self.sites {
            let span = site * self.stride..(site + 1) * self.stride;
            let rx = bit(&self.x[span.clone()], rep);
            let rz = bit(&self.z[span.clone()], rep);
            if !rx && !rz {
                continue;
            }
            for w in 0..self.stride {
                let t = targets[w];
                let mx = self.x[span.start + w] & t;
                let mz = self.z[span.start + w] & t;
                // per-site phase of rep·m: +1 (i) or −1 (−i) exponent
                let (plus, minus) = match (rx, rz) {
                    (true, false) => (mx & mz, !mx & mz),
                    (false, true) => (mx & !mz, mx & mz),
                    _ => (!mx & mz, mx & !mz),
                };
                let (p, m) = (plus & t, minus & t);
                let old = e0[w];
                e0[w] ^= p ^ m;
                e1[w] ^= (p & old) | (m & !old);
                if rx {
                    self.x[span.start + w] ^= t;
                }
                if rz {
                    self.z[span.start + w] ^= t;
                }
            }
        }
        let rs = if bit(&self.sign, rep) { u64::MAX } else { 0 };
        for w in 0..self.stride {
            if e0[w] & targets[w] != 0 {
                return Err(Error::InvariantViolation(format!("generator {rep} anticommutes with a class member")));
            }
            self.sign[w] ^= (rs ^ e1[w]) & targets[w];
        }
        Ok(())
    }

    /// Conjugates every generator by `gate` acting on sites `(a, b)`.
    pub fn apply_gate(&mut self, gate: &CliffordGate2, a: usize, b: usize) -> Result<()> {
        if a == b || a >= self.sites || b >= self.sites {
            return Err(Error::InvalidSitePair(a, b));
        }
        let (oa, ob) = (a * self.stride, b * self.stride);
        for w in 0..self.stride {
            let planes = [self.x[oa + w], self.z[oa + w], self.x[ob + w], self.z[ob + w]];
            let ([xa, za, xb, zb], flip) = gate.conjugate_words(planes);
            self.x[oa + w] = xa;
            self.z[oa + w] = za;
            self.x[ob + w] = xb;
            self.z[ob + w] = zb;
            self.sign[w] ^= flip;
        }
        Ok(())
    }

    /// Row `l` of the symplectic Gram matrix restricted to `sites`: bit `l'`
    /// set iff generators `l` and `l'` anticommute on those sites.
    pub(crate) fn gram_row(&self, l: usize, sites: impl IntoIterator<Item = usize>, out: &mut [u64]) {
        out.fill(0);
        for site in sites {
            let (xp, zp) = self.site_planes(site);
            let (lx, lz) = (bit(xp, l), bit(zp, l));
            if lx {
                for (o, &zw) in out.iter_mut().zip(zp) {
                    *o ^= zw;
                }
            }
            if lz {
                for (o, &xw) in out.iter_mut().zip(xp) {
                    *o ^= xw;
                }
            }
        }
    }

    /// Checks mutual commutation, independence, and that no bits are set
    /// past the last generator.
    pub fn check_invariants(&self) -> Result<()> {
        if self.k > self.sites {
            return Err(Error::InvariantViolation(format!("{} generators on {} sites", self.k, self.sites)));
        }
        let mask = self.row_mask();
        let stray = self.x.chunks(self.stride).chain(self.z.chunks(self.stride)).chain(std::iter::once(&self.sign[..]));
        for plane in stray {
            if plane.iter().zip(&mask).any(|(w, m)| w & !m != 0) {
                return Err(Error::InvariantViolation("bits set beyond the last generator".into()));
            }
        }
        let mut row = vec![0u64; self.stride];
        for l in 0..self.k {
            self.gram_row(l, 0..self.sites, &mut row);
            if let Some(j) = (0..self.k).find(|&j| bit(&row, j)) {
                return Err(Error::AnticommutingGenerators(j.min(l), j.max(l)));
            }
        }
        // rank of the (x|z) matrix equals rank of its transpose, whose rows are the planes
        let mut planes = BitMatrix::zeros(2 * self.sites, self.k);
        let used = words_for(self.k);
        for (r, plane) in self.x.chunks(self.stride).chain(self.z.chunks(self.stride)).enumerate() {
            planes.set_row_words(r, &plane[..used]);
        }
        if planes.rank() != self.k {
            return Err(Error::InvariantViolation("generators are linearly dependent".into()));
        }
        Ok(())
    }

    /// The `k × 2L` binary matrix with rows `(x | z)`.
    pub fn check_matrix(&self) -> BitMatrix {
        let mut m = BitMatrix::zeros(self.k, 2 * self.sites);
        for site in 0..self.sites {
            let (xp, zp) = self.site_planes(site);
            for r in 0..self.k {
                m.set(r, site, bit(xp, r));
                m.set(r, self.sites + site, bit(zp, r));
            }
        }
        m
    }

    /// Copy with generators in reduced row echelon form.
    pub fn canonicalize(&self) -> Result<StabilizerState> {
        let canon = canonical_generators(self.sites, &self.generators())?;
        let mut s = Self::empty(self.sites);
        for g in &canon {
            s.push_generator(g);
        }
        Ok(s)
    }

    /// True when both states have the same stabilizer group.
    pub fn same_group(&self, other: &StabilizerState) -> Result<bool> {
        Ok(self.sites == other.sites && self.canonicalize()? == other.canonicalize()?)
    }

    /// `Some(negative)` if `±p` lies in the stabilizer group, `None` otherwise.
    pub fn group_sign(&self, p: &PauliString) -> Result<Option<bool>> {
        if p.len() != self.sites {
            return Err(Error::LengthMismatch { left: p.len(), right: self.sites });
        }
        let gens = self.generators();
        if gens.iter().any(|g| !g.commutes_with(p)) {
            return Ok(None);
        }
        let canon = canonical_generators(self.sites, &gens)?;
        let mut rest = p.clone();
        for g in &canon {
            let pivot = leading_column(g, self.sites).expect("canonical rows are nonzero");
            if column_bit(&rest, pivot, self.sites) {
                rest.mul_assign_right(g)?;
            }
        }
        Ok(rest.is_identity().then_some(rest.is_negative()))
    }

    pub fn contains(&self, p: &PauliString) -> Result<bool> {
        Ok(self.group_sign(p)? == Some(false))
    }

    /// All `2^k` signed group elements. Intended for small test states.
    pub fn group_elements(&self) -> Vec<PauliString> {
        assert!(self.k < 24, "group too large to enumerate");
        let mut out = vec![PauliString::identity(self.sites)];
        for g in &self.generators() {
            let more: Vec<_> = out.iter().map(|e| e.multiply(g).expect("generators commute")).collect();
            out.extend(more);
        }
        out
    }
}

/// Column index in the `(x_0 … x_{L-1}, z_0 … z_{L-1})` ordering.
#[inline]
fn column_bit(p: &PauliString, col: usize, sites: usize) -> bool {
    let (words, c) = if col < sites { (p.x_words(), col) } else { (p.z_words(), col - sites) };
    words[c / WORD_BITS] >> (c % WORD_BITS) & 1 == 1
}

fn leading_column(p: &PauliString, sites: usize) -> Option<usize> {
    (0..2 * sites).find(|&c| column_bit(p, c, sites))
}

/// Reduced row echelon form of a generator list over the `(x|z)` columns,
/// with signs carried through the row products.
///
/// The form is unique for a given group, so comparing canonical lists
/// compares groups.
pub fn canonical_generators(sites: usize, generators: &[PauliString]) -> Result<Vec<PauliString>> {
    for (i, g) in generators.iter().enumerate() {
        if g.len() != sites {
            return Err(Error::LengthMismatch { left: g.len(), right: sites });
        }
        for (j, h) in generators[..i].iter().enumerate() {
            if !g.commutes_with(h) {
                return Err(Error::AnticommutingGenerators(j, i));
            }
        }
    }
    let mut rows: Vec<(usize, PauliString)> = generators.iter().cloned().enumerate().collect();
    let mut rank = 0;
    for col in 0..2 * sites {
        if rank == rows.len() {
            break;
        }
        let Some(pivot) = (rank..rows.len()).find(|&r| column_bit(&rows[r].1, col, sites)) else {
            continue;
        };
        rows.swap(rank, pivot);
        let pivot_row = rows[rank].1.clone();
        for (r, (_, row)) in rows.iter_mut().enumerate() {
            if r != rank && column_bit(row, col, sites) {
                row.mul_assign_right(&pivot_row)?;
            }
        }
        rank += 1;
    }
    if let Some((orig, row)) = rows.get(rank) {
        return Err(if row.is_negative() { Error::SignContradiction } else { Error::DependentGenerators(*orig) });
    }
    Ok(rows.into_iter().map(|(_, r)| r).collect())
}

/// One generator per line: `+XXI`, `-IZY`, …
impl fmt::Display for StabilizerState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for g in self.generators() {
            writeln!(f, "{g}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for StabilizerState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StabilizerState(L={}, k={}) [", self.sites, self.k)?;
        for (i, g) in self.generators().iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{g}")?;
        }
        f.write_str("]")
    }
}

impl FromStr for StabilizerState {
    type Err = Error;

    /// Infers `L` from the first generator; an empty string is rejected
    /// because the site count would be unknown.
    fn from_str(s: &str) -> Result<Self> {
        let first = s.lines().map(str::trim).find(|l| !l.is_empty()).ok_or_else(|| Error::Parse("no generators".into()))?;
        let sites = first.trim_start_matches(['+', '-']).len();
        Self::parse(sites, s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::sample_clifford2;
    use crate::rng::RandomSource;
    use std::collections::HashSet;

    fn st(s: &str) -> StabilizerState {
        s.parse().unwrap()
    }

    #[test]
    fn canonical_row_reduction() {
        let s = StabilizerState::parse(2, "+ZZ\n+ZI").unwrap();
        assert_eq!(s.canonicalize().unwrap().to_string(), "+ZI\n+IZ\n");
        let empty = StabilizerState::maximally_mixed(3);
        assert_eq!(empty.canonicalize().unwrap().rank(), 0);
    }

    #[test]
    fn bell_canonical_form_keeps_group() {
        let s = st("+XX\n+ZZ");
        let c = s.canonicalize().unwrap();
        assert_eq!(c.to_string(), "+XX\n+ZZ\n");
        let a: HashSet<_> = s.group_elements().into_iter().collect();
        let b: HashSet<_> = c.group_elements().into_iter().collect();
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
        // reordered and multiplied generators describe the same group
        let other = st("+ZZ\n-YY");
        let c2 = other.canonicalize().unwrap();
        assert_eq!(c, c2);
    }

    #[test]
    fn canonicalize_reports_bad_inputs() {
        let anti = vec!["X".parse().unwrap(), "Z".parse().unwrap()];
        assert!(matches!(canonical_generators(1, &anti), Err(Error::AnticommutingGenerators(0, 1))));
        let dep = vec!["ZI".parse().unwrap(), "IZ".parse().unwrap(), "ZZ".parse().unwrap()];
        assert!(matches!(canonical_generators(2, &dep), Err(Error::DependentGenerators(2))));
        let contra = vec!["ZI".parse().unwrap(), "-ZI".parse().unwrap()];
        assert!(matches!(canonical_generators(2, &contra), Err(Error::SignContradiction)));
    }

    #[test]
    fn membership() {
        let s = st("+XX\n+ZZ");
        assert!(s.contains(&"-YY".parse().unwrap()).unwrap());
        assert_eq!(s.group_sign(&"YY".parse().unwrap()).unwrap(), Some(true));
        assert_eq!(s.group_sign(&"ZI".parse().unwrap()).unwrap(), None);
    }

    #[test]
    fn gate_application_and_pair_validation() {
        let mut s = st("+ZI");
        s.apply_gate(&CliffordGate2::cnot(), 0, 1).unwrap();
        assert_eq!(s.to_string(), "+ZI\n");
        let mut s = st("+XI");
        s.apply_gate(&CliffordGate2::cnot(), 0, 1).unwrap();
        assert_eq!(s.to_string(), "+XX\n");
        assert!(matches!(s.apply_gate(&CliffordGate2::cnot(), 1, 1), Err(Error::InvalidSitePair(1, 1))));
        assert!(s.apply_gate(&CliffordGate2::cnot(), 0, 2).is_err());
    }

    #[test]
    fn bit_deletion_shifts_across_words() {
        let mut w = vec![0b1011u64, 1, 1 << 63];
        delete_bit(&mut w, 1);
        assert_eq!(w, vec![0b101 | 1 << 63, 0, 1 << 62]);
        let mut w = vec![u64::MAX];
        delete_bit(&mut w, 63);
        assert_eq!(w, vec![u64::MAX >> 1]);
    }

    #[test]
    fn generator_round_trip_beyond_one_word() {
        let mut rng = RandomSource::from_seed(8);
        let mut s = StabilizerState::zero(150);
        for _ in 0..2000 {
            let a = rand::Rng::random_range(&mut rng, 0..150);
            let b = (a + rand::Rng::random_range(&mut rng, 1..150)) % 150;
            s.apply_gate(&sample_clifford2(&mut rng), a, b).unwrap();
        }
        s.check_invariants().unwrap();
        let rebuilt = StabilizerState::from_generators(150, s.generators()).unwrap();
        assert_eq!(rebuilt, s);
        let mut t = s.clone();
        t.remove_generator(70);
        assert_eq!(t.rank(), 149);
        assert_eq!(t.generator(70), s.generator(71));
        assert_eq!(t.generator(69), s.generator(69));
        t.check_invariants().unwrap();
    }

    #[test]
    fn sliced_products_match_row_products() {
        let mut rng = RandomSource::from_seed(19);
        for _ in 0..200 {
            let n = rand::Rng::random_range(&mut rng, 2..80);
            let mut s = StabilizerState::zero(n);
            for _ in 0..4 * n {
                let a = rand::Rng::random_range(&mut rng, 0..n);
                let b = (a + rand::Rng::random_range(&mut rng, 1..n)) % n;
                s.apply_gate(&sample_clifford2(&mut rng), a, b).unwrap();
            }
            let rep = rand::Rng::random_range(&mut rng, 0..n);
            let mut targets = vec![0u64; words_for(n)];
            for r in (0..n).filter(|&r| r != rep) {
                if rand::Rng::random_bool(&mut rng, 0.5) {
                    put(&mut targets, r, true);
                }
            }
            let before = s.generators();
            s.multiply_into(rep, &targets).unwrap();
            for r in 0..n {
                let want = if bit(&targets, r) { before[rep].multiply(&before[r]).unwrap() } else { before[r].clone() };
                assert_eq!(s.generator(r), want);
            }
            s.check_invariants().unwrap();
        }
    }

    #[test]
    fn invariant_check_catches_anticommuting_rows() {
        let mut s = st("+ZI\n+IZ");
        s.push_generator(&"XI".parse().unwrap());
        assert!(matches!(s.check_invariants(), Err(Error::InvariantViolation(_)) | Err(Error::AnticommutingGenerators(..))));
        let mut s = st("+ZI");
        s.push_generator(&"-ZI".parse().unwrap());
        assert!(s.check_invariants().is_err());
    }

    #[test]
    fn random_gates_preserve_invariants() {
        let mut rng = RandomSource::from_seed(3);
        let mut s = StabilizerState::from_generators(9, StabilizerState::zero(9).generators()[..6].to_vec()).unwrap();
        for _ in 0..500 {
            let g = sample_clifford2(&mut rng);
            let a = rand::Rng::random_range(&mut rng, 0..9);
            let b = (a + rand::Rng::random_range(&mut rng, 1..9)) % 9;
            s.apply_gate(&g, a, b).unwrap();
        }
        assert_eq!(s.rank(), 6);
        s.check_invariants().unwrap();
        let c = s.canonicalize().unwrap();
        assert_eq!(c.canonicalize().unwrap(), c);
        assert!(c.same_group(&s).unwrap());
    }
}
