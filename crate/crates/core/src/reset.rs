//! The reset channel `R_i(ρ) = tr_i(ρ) ⊗ |0⟩⟨0|_i` on stabilizer generators.
//!
//! Generators are first classified by their letter on site `i`. Within each
//! of the X, Y and Z classes, the first member is multiplied into the others
//! so that at most one representative per class carries a non-identity
//! letter on `i`; the group is unchanged. Tracing out `i` then keeps exactly
//! the subgroup with `I` on site `i`:
//!
//! | nonempty classes | update                                              | Δk |
//! |------------------|-----------------------------------------------------|----|
//! | 0                | add `+Z_i`                                          | +1 |
//! | 1                | drop the representative, add `+Z_i`                 |  0 |
//! | 2                | drop both representatives, add `+Z_i`               | −1 |
//! | 3                | drop all three, add `g_x·g_y·g_z`, add `+Z_i`       | −1 |

use crate::error::{Error, Result};
use crate::pauli::{Letter, PauliString};
use crate::stabilizer::StabilizerState;

/// Generator indices grouped by their letter on one site.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SiteClasses {
    pub x: Vec<usize>,
    pub y: Vec<usize>,
    pub z: Vec<usize>,
    pub identity: Vec<usize>,
}

impl SiteClasses {
    /// `(n_x, n_y, n_z, n_I)`.
    pub fn counts(&self) -> (usize, usize, usize, usize) {
        (self.x.len(), self.y.len(), self.z.len(), self.identity.len())
    }

    /// Number of nonempty classes among X, Y, Z.
    pub fn nonempty(&self) -> usize {
        [&self.x, &self.y, &self.z].iter().filter(|c| !c.is_empty()).count()
    }
}

/// Summary of one reset, mostly for tests and diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ResetOutcome {
    pub counts_before: (usize, usize, usize, usize),
    pub nonempty_classes: usize,
    pub rank_before: usize,
    pub rank_after: usize,
}

pub fn classify_site(state: &StabilizerState, site: usize) -> Result<SiteClasses> {
    let [x, y, z] = class_masks(state, site)?;
    let mut classes = SiteClasses::default();
    for r in 0..state.rank() {
        let b = |m: &[u64]| m[r / 64] >> (r % 64) & 1 == 1;
        match (b(&x), b(&y), b(&z)) {
            (true, _, _) => classes.x.push(r),
            (_, true, _) => classes.y.push(r),
            (_, _, true) => classes.z.push(r),
            _ => classes.identity.push(r),
        }
    }
    Ok(classes)
}

/// Generator masks of the X, Y and Z classes on `site`.
fn class_masks(state: &StabilizerState, site: usize) -> Result<[Vec<u64>; 3]> {
    if site >= state.sites() {
        return Err(Error::SiteOutOfRange { site, sites: state.sites() });
    }
    let (xp, zp) = state.site_planes(site);
    let x = xp.iter().zip(zp).map(|(x, z)| x & !z).collect();
    let y = xp.iter().zip(zp).map(|(x, z)| x & z).collect();
    let z = xp.iter().zip(zp).map(|(x, z)| !x & z).collect();
    Ok([x, y, z])
}

/// Clears the lowest set bit and returns its index.
fn take_first(mask: &mut [u64]) -> Option<usize> {
    let w = mask.iter().position(|&w| w != 0)?;
    let b = mask[w].trailing_zeros() as usize;
    mask[w] &= mask[w] - 1;
    Some(w * 64 + b)
}

/// Multiplies each class representative into the rest of its class and
/// returns the representatives in X, Y, Z order.
fn reduce(state: &mut StabilizerState, site: usize) -> Result<Vec<usize>> {
    let mut reps = Vec::with_capacity(3);
    for mut class in class_masks(state, site)? {
        if let Some(rep) = take_first(&mut class) {
            if class.iter().any(|&w| w != 0) {
                state.multiply_into(rep, &class)?;
            }
            reps.push(rep);
        }
    }
    Ok(reps)
}

/// Multiplies each class representative into the rest of its class, in
/// place, and returns the classes after the reduction.
pub fn reduce_to_representatives(state: &mut StabilizerState, site: usize) -> Result<SiteClasses> {
    reduce(state, site)?;
    classify_site(state, site)
}

fn invariant(e: Error) -> Error {
    Error::InvariantViolation(format!("generator product failed during reset: {e}"))
}

/// Applies `R_site` in place.
pub fn reset_site(state: &mut StabilizerState, site: usize) -> Result<ResetOutcome> {
    let rank_before = state.rank();
    let counts_before = classify_site(state, site)?.counts();
    let mut reps = reduce(state, site)?;

    let triple = if let [a, b, c] = reps[..] {
        let t = state.generator(a).multiply(&state.generator(b)).and_then(|ab| ab.multiply(&state.generator(c))).map_err(invariant)?;
        if t.letter(site) != Letter::I {
            return Err(Error::InvariantViolation("triple product does not act trivially on the reset site".into()));
        }
        Some(t)
    } else {
        None
    };

    let nonempty_classes = reps.len();
    reps.sort_unstable_by(|a, b| b.cmp(a));
    for idx in reps {
        state.remove_generator(idx);
    }
    if let Some(t) = &triple {
        state.push_generator(t);
    }

    // every survivor now carries I on `site`, so +Z_site is independent of them
    let (xp, zp) = state.site_planes(site);
    if xp.iter().chain(zp).any(|&w| w != 0) {
        return Err(Error::InvariantViolation(format!("a generator still acts on reset site {site}")));
    }
    state.push_generator(&PauliString::single(state.sites(), site, Letter::Z));

    Ok(ResetOutcome { counts_before, nonempty_classes, rank_before, rank_after: state.rank() })
}

impl StabilizerState {
    pub fn reset(&mut self, site: usize) -> Result<ResetOutcome> {
        reset_site(self, site)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::sample_clifford2;
    use crate::rng::RandomSource;
    use rand::Rng;

    fn st(s: &str) -> StabilizerState {
        s.parse().unwrap()
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify_site(&st("+XX\n+ZZ"), 0).unwrap().counts(), (1, 0, 1, 0));
        assert_eq!(classify_site(&st("+ZI"), 1).unwrap().counts(), (0, 0, 0, 1));
        assert_eq!(classify_site(&st("+Y"), 0).unwrap().counts(), (0, 1, 0, 0));
        assert!(classify_site(&st("+Y"), 1).is_err());
    }

    #[test]
    fn reduction_leaves_one_representative_per_class() {
        let mut s = st("+XXZ\n+XZX");
        let before = s.clone();
        let classes = reduce_to_representatives(&mut s, 0).unwrap();
        assert_eq!(classes.counts(), (1, 0, 0, 1));
        assert_eq!(s.to_string(), "+XXZ\n+IYY\n");
        assert!(s.same_group(&before).unwrap());

        let mut bell = st("+XX\n+ZZ");
        reduce_to_representatives(&mut bell, 0).unwrap();
        assert_eq!(bell, st("+XX\n+ZZ"));
        let mut prod = st("+ZI\n+IZ");
        reduce_to_representatives(&mut prod, 0).unwrap();
        assert_eq!(prod, st("+ZI\n+IZ"));
    }

    #[test]
    fn bell_pair_reset_sequence() {
        let mut s = st("+XX\n+ZZ");
        let out = s.reset(0).unwrap();
        assert_eq!(out.nonempty_classes, 2);
        assert_eq!(s.to_string(), "+ZI\n");
        assert_eq!(s.sites() - s.rank(), 1);
        s.reset(1).unwrap();
        assert!(s.same_group(&StabilizerState::zero(2)).unwrap());
    }

    #[test]
    fn resetting_zero_is_a_fixed_point() {
        let mut s = st("+Z");
        s.reset(0).unwrap();
        assert_eq!(s, st("+Z"));
        let mut s = StabilizerState::zero(4);
        for i in 0..4 {
            s.reset(i).unwrap();
        }
        assert!(s.same_group(&StabilizerState::zero(4)).unwrap());
    }

    #[test]
    fn one_state_flips_to_zero() {
        let mut s = st("-ZI\n+IX");
        s.reset(0).unwrap();
        assert!(s.same_group(&st("+ZI\n+IX")).unwrap());
    }

    #[test]
    fn all_three_classes_use_the_triple_product() {
        let mut s = st("+XXI\n+YZX\n+ZZZ");
        assert_eq!(classify_site(&s, 0).unwrap().counts(), (1, 1, 1, 0));
        let out = s.reset(0).unwrap();
        assert_eq!((out.nonempty_classes, out.rank_before, out.rank_after), (3, 3, 2));
        let triple = &s.generators()[0];
        assert_eq!(triple.letters().map(|l| l.as_char()).collect::<String>(), "IXY");
        assert_eq!(s.generators()[1].to_string(), "+ZII");
    }

    #[test]
    fn random_resets_keep_invariants_and_are_idempotent() {
        let mut rng = RandomSource::from_seed(17);
        for _ in 0..300 {
            let n = rng.random_range(1..7);
            let mut s = StabilizerState::zero(n);
            for _ in 0..rng.random_range(0..30) {
                if n >= 2 && rng.random_bool(0.7) {
                    let a = rng.random_range(0..n);
                    let b = (a + rng.random_range(1..n)) % n;
                    s.apply_gate(&sample_clifford2(&mut rng), a, b).unwrap();
                } else {
                    let site = rng.random_range(0..n);
                    let k = s.rank();
                    s.reset(site).unwrap();
                    assert!(s.rank().abs_diff(k) <= 1);
                }
            }
            let site = rng.random_range(0..n);
            s.reset(site).unwrap();
            s.check_invariants().unwrap();
            assert!(s.contains(&PauliString::single(n, site, Letter::Z)).unwrap());
            for g in &s.generators()[..s.rank() - 1] {
                assert_eq!(g.letter(site), Letter::I);
            }
            let mut again = s.clone();
            again.reset(site).unwrap();
            assert!(again.same_group(&s).unwrap());
        }
    }
}
