//! Vectorial Boolean functions `F: (F₂)^m → (F₂)^m` as full lookup tables,
//! with the differential and anti-invariance measures the certifier relies on.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{capacity, input, Error, Result};
use crate::field::BinaryField;
use crate::gf2::{enumerate_subspaces, Echelon, Subspace, Vec2};

pub const MIN_M: usize = 2;
pub const MAX_M: usize = 16;

/// Largest `m` for which anti-invariance degrees are computed over every
/// subspace.
pub const FULL_SCAN_MAX_M: usize = 8;

/// Codimension bound used above [`FULL_SCAN_MAX_M`] unless overridden.
pub const DEFAULT_MAX_CODIM: usize = 4;

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Vbf {
    m: usize,
    table: Vec<u16>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DdtReport {
    pub m: usize,
    /// Differential uniformity: the largest `δ_F(a, b)` over `a ≠ 0`.
    pub uniformity: u32,
    /// Smallest `|Im(F̂_a)|` over `a ≠ 0`.
    pub min_derivative_image: usize,
    pub is_apn: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AntiInvarianceOptions {
    /// Replace `F` by `F + F(0)` when `F(0) ≠ 0`.
    pub normalize: bool,
    /// Only examine subspaces of codimension at most this; `None` means a full
    /// scan for `m ≤ 8` and [`DEFAULT_MAX_CODIM`] above.
    pub max_codim: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StrongWitness {
    pub domain: Subspace,
    pub image: Subspace,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AntiInvarianceReport {
    pub m: usize,
    /// Largest `l` with `F` `l`-anti-invariant (a lower bound when `plain_partial`).
    pub plain_degree: usize,
    /// Largest `l` with `F` strongly `l`-anti-invariant (a lower bound when
    /// `strong_partial`).
    pub strong_degree: usize,
    pub plain_partial: bool,
    pub strong_partial: bool,
    /// Codimensions examined, `1..=max_codim_scanned`.
    pub max_codim_scanned: usize,
    /// A proper invariant subspace of maximal dimension.
    pub witness_plain: Option<Subspace>,
    /// A proper subspace of maximal dimension whose image is a subspace.
    pub witness_strong: Option<StrongWitness>,
    /// The constant `F(0)` that was added to every entry, if normalization ran.
    pub normalized_by: Option<u16>,
}

impl Vbf {
    pub fn from_table(m: usize, table: Vec<u16>) -> Result<Self> {
        if !(MIN_M..=MAX_M).contains(&m) {
            return input(format!("S-box width {m} outside {MIN_M}..={MAX_M}"));
        }
        if table.len() != 1 << m {
            return input(format!(
                "table has {} entries, expected {}",
                table.len(),
                1usize << m
            ));
        }
        if let Some((x, &y)) = table.iter().enumerate().find(|(_, &y)| (y as usize) >> m != 0) {
            return input(format!("entry {x} = {y:#x} outside {m} bits"));
        }
        Ok(Vbf { m, table })
    }

    pub fn identity(m: usize) -> Result<Self> {
        Self::from_table(m, (0..1u32 << m).map(|x| x as u16).collect())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn size(&self) -> usize {
        self.table.len()
    }

    pub fn table(&self) -> &[u16] {
        &self.table
    }

    #[inline]
    pub fn eval(&self, x: usize) -> u16 {
        self.table[x]
    }

    pub fn is_permutation(&self) -> bool {
        let mut seen = vec![false; self.size()];
        self.table
            .iter()
            .all(|&y| !std::mem::replace(&mut seen[y as usize], true))
    }

    pub fn inverse(&self) -> Option<Vbf> {
        if !self.is_permutation() {
            return None;
        }
        let mut inv = vec![0u16; self.size()];
        for (x, &y) in self.table.iter().enumerate() {
            inv[y as usize] = x as u16;
        }
        Some(Vbf {
            m: self.m,
            table: inv,
        })
    }

    /// `x ↦ other(self(x))`.
    pub fn then(&self, other: &Vbf) -> Result<Vbf> {
        if self.m != other.m {
            return input("width mismatch in composition");
        }
        Ok(Vbf {
            m: self.m,
            table: self
                .table
                .iter()
                .map(|&y| other.table[y as usize])
                .collect(),
        })
    }

    pub fn is_involution(&self) -> bool {
        self.table
            .iter()
            .enumerate()
            .all(|(x, &y)| self.table[y as usize] as usize == x)
    }

    /// `x ↦ F(x) + c`.
    pub fn add_constant(&self, c: u16) -> Vbf {
        Vbf {
            m: self.m,
            table: self.table.iter().map(|&y| y ^ c).collect(),
        }
    }

    /// Translates the output so that 0 is fixed; returns the constant used.
    pub fn normalized(&self) -> (Vbf, Option<u16>) {
        match self.table[0] {
            0 => (self.clone(), None),
            c => (self.add_constant(c), Some(c)),
        }
    }

    /// The derivative `F̂_a: x ↦ F(x + a) + F(x)`.
    pub fn derivative(&self, a: Vec2) -> Result<Vbf> {
        let a = self.direction(a)?;
        Ok(Vbf {
            m: self.m,
            table: (0..self.size())
                .map(|x| self.table[x ^ a] ^ self.table[x])
                .collect(),
        })
    }

    fn direction(&self, a: Vec2) -> Result<usize> {
        if a.width() != self.m {
            return input(format!(
                "direction of width {} for an S-box on {} bits",
                a.width(),
                self.m
            ));
        }
        if a.is_zero() {
            return input("derivative direction must be nonzero");
        }
        Ok(a.bits() as usize)
    }

    /// Distinct output values, ascending.
    pub fn image(&self) -> Vec<u16> {
        let mut seen = vec![false; self.size()];
        for &y in &self.table {
            seen[y as usize] = true;
        }
        (0..self.size() as u32)
            .filter(|&y| seen[y as usize])
            .map(|y| y as u16)
            .collect()
    }

    /// Row `a` of the difference distribution table: entry `b` is `δ_F(a, b)`.
    pub fn ddt_row(&self, a: Vec2) -> Result<Vec<u32>> {
        let a = self.direction(a)?;
        Ok(self.ddt_row_raw(a))
    }

    fn ddt_row_raw(&self, a: usize) -> Vec<u32> {
        let mut row = vec![0u32; self.size()];
        for x in 0..self.size() {
            row[(self.table[x ^ a] ^ self.table[x]) as usize] += 1;
        }
        row
    }

    pub fn ddt_report(&self) -> DdtReport {
        let (uniformity, min_image) = (1..self.size())
            .into_par_iter()
            .map(|a| {
                let row = self.ddt_row_raw(a);
                let max = row.iter().copied().max().unwrap_or(0);
                let image = row.iter().filter(|&&c| c != 0).count();
                (max, image)
            })
            .reduce(
                || (0, usize::MAX),
                |(u1, i1), (u2, i2)| (u1.max(u2), i1.min(i2)),
            );
        DdtReport {
            m: self.m,
            uniformity,
            min_derivative_image: min_image,
            is_apn: uniformity == 2,
        }
    }

    pub fn min_derivative_image(&self) -> usize {
        self.ddt_report().min_derivative_image
    }

    /// Weak `δ`-uniformity: every derivative image satisfies
    /// `(|Im(F̂_u)| − 1)·(δ + 2) ≥ 2^m`.
    pub fn is_weakly_uniform(&self, delta: u32) -> Result<bool> {
        if delta < 2 || !delta.is_multiple_of(2) {
            return input(format!("delta must be an even number >= 2, got {delta}"));
        }
        if !self.is_permutation() {
            return input("weak uniformity is defined for permutations only");
        }
        Ok(weak_bound_holds(self.min_derivative_image(), delta, self.m))
    }

    /// `F(U)` when it is a subspace. Images are inserted into an echelon basis
    /// and the scan stops as soon as the rank exceeds `dim U`.
    pub fn image_subspace(&self, u: &Subspace) -> Option<Subspace> {
        debug_assert_eq!(u.n(), self.m);
        let mut ech = Echelon::new(self.m);
        for x in u.elements().ok()? {
            ech.insert(self.table[x as usize] as u128);
            if ech.rank() > u.dim() {
                return None;
            }
        }
        let w = ech.into_subspace(self.m);
        // For a non-injective F the image can be smaller than its span.
        (w.dim() == u.dim()).then_some(w)
    }

    /// `F(U) ⊆ U`; for a permutation this is `F(U) = U`.
    pub fn preserves(&self, u: &Subspace) -> bool {
        u.elements()
            .map(|mut els| els.all(|x| u.contains_bits(self.table[x as usize] as u128)))
            .unwrap_or(false)
    }

    pub fn anti_invariance_report(
        &self,
        opts: &AntiInvarianceOptions,
    ) -> Result<AntiInvarianceReport> {
        if !self.is_permutation() {
            return input("anti-invariance is defined for permutations only");
        }
        let (f, normalized_by) = if self.table[0] == 0 {
            (self.clone(), None)
        } else if opts.normalize {
            self.normalized()
        } else {
            return input(format!(
                "F(0) = {:#x}; pass normalize to translate it to 0",
                self.table[0]
            ));
        };
        let m = self.m;
        let limit = match opts.max_codim {
            Some(c) => c.min(m),
            None if m <= FULL_SCAN_MAX_M => m,
            None => DEFAULT_MAX_CODIM.min(m),
        };
        if m > FULL_SCAN_MAX_M && limit > DEFAULT_MAX_CODIM {
            return capacity(format!(
                "codimension {limit} scan at m = {m}; at most {DEFAULT_MAX_CODIM} is supported"
            ));
        }

        let mut witness_plain = None;
        let mut plain_degree = limit;
        for codim in 1..=limit {
            let dims = [m - codim];
            if let Some(u) = enumerate_subspaces(m, Some(&dims))?.find(|u| f.preserves(u)) {
                witness_plain = Some(u);
                plain_degree = codim - 1;
                break;
            }
        }

        // Lines {0, a} always map onto lines, so codimension m − 1 ends the scan.
        let strong_limit = limit.min(m - 1);
        let mut witness_strong = None;
        let mut strong_degree = strong_limit;
        for codim in 1..=strong_limit {
            let dims = [m - codim];
            let hit = enumerate_subspaces(m, Some(&dims))?
                .find_map(|u| f.image_subspace(&u).map(|w| (u, w)));
            if let Some((domain, image)) = hit {
                witness_strong = Some(StrongWitness { domain, image });
                strong_degree = codim - 1;
                break;
            }
        }

        Ok(AntiInvarianceReport {
            m,
            plain_degree,
            strong_degree,
            plain_partial: witness_plain.is_none(),
            strong_partial: witness_strong.is_none(),
            max_codim_scanned: limit,
            witness_plain,
            witness_strong,
            normalized_by,
        })
    }

    /// Parses the S-box text format: a `# m=<value>` header line followed by
    /// `2^m` whitespace-separated hexadecimal entries. Further `#` comments are
    /// ignored.
    pub fn parse_sbox(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty S-box file".into()))?;
        let m: usize = header
            .strip_prefix('#')
            .map(str::trim)
            .and_then(|h| h.strip_prefix("m="))
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| Error::Parse(format!("expected header '# m=<value>', got {header:?}")))?;
        if !(MIN_M..=MAX_M).contains(&m) {
            return Err(Error::Parse(format!("m = {m} outside {MIN_M}..={MAX_M}")));
        }
        let mut table = Vec::with_capacity(1 << m);
        for line in lines {
            let data = line.split('#').next().unwrap_or("");
            for tok in data.split_whitespace() {
                let digits = tok
                    .strip_prefix("0x")
                    .or_else(|| tok.strip_prefix("0X"))
                    .unwrap_or(tok);
                let y = u32::from_str_radix(digits, 16)
                    .map_err(|_| Error::Parse(format!("bad hexadecimal token {tok:?}")))?;
                if y >> m != 0 {
                    return Err(Error::Parse(format!(
                        "entry {} = {tok} outside {m} bits",
                        table.len()
                    )));
                }
                table.push(y as u16);
            }
        }
        if table.len() != 1 << m {
            return Err(Error::Parse(format!(
                "expected {} entries, found {}",
                1usize << m,
                table.len()
            )));
        }
        Self::from_table(m, table)
    }

    pub fn to_sbox_text(&self) -> String {
        let width = self.m.div_ceil(4);
        let mut out = format!("# m={}\n", self.m);
        for chunk in self.table.chunks(16) {
            let line: Vec<String> = chunk.iter().map(|y| format!("{y:0width$x}")).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    /// Uniformly random permutation of (F₂)^m, optionally fixing 0.
    pub fn random_permutation<R: Rng>(m: usize, fix_zero: bool, rng: &mut R) -> Result<Self> {
        let mut table: Vec<u16> = (0..1u32 << m).map(|x| x as u16).collect();
        if fix_zero {
            table[1..].shuffle(rng);
        } else {
            table.shuffle(rng);
        }
        Self::from_table(m, table)
    }

    /// Random involution fixing 0: nonzero points are shuffled and consecutive
    /// ones paired, each pair left as two fixed points with probability
    /// `fixed_ratio`.
    pub fn random_involution<R: Rng>(m: usize, fixed_ratio: f64, rng: &mut R) -> Result<Self> {
        let mut points: Vec<u16> = (1..1u32 << m).map(|x| x as u16).collect();
        points.shuffle(rng);
        let mut table: Vec<u16> = (0..1u32 << m).map(|x| x as u16).collect();
        for pair in points.chunks(2) {
            if let [a, b] = *pair {
                if !rng.gen_bool(fixed_ratio) {
                    table[a as usize] = b;
                    table[b as usize] = a;
                }
            }
        }
        Self::from_table(m, table)
    }
}

impl std::str::FromStr for Vbf {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse_sbox(s)
    }
}

/// Exact integer form of `|Im| ≥ 2^m/(δ+2) + 1`.
pub fn weak_bound_holds(image_size: usize, delta: u32, m: usize) -> bool {
    image_size >= 1 && (image_size as u64 - 1) * (delta as u64 + 2) >= 1u64 << m
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LemmaCase {
    pub r: usize,
    pub satisfied: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InvolutionLemmaVerdict {
    pub m: usize,
    pub plain_degree: usize,
    pub strong_degree: usize,
    /// One entry per `r` with `1 ≤ r < m/2` and `plain_degree ≥ 2r`.
    pub cases: Vec<LemmaCase>,
    pub holds: bool,
}

/// Checks that an involution which is `2r`-anti-invariant is strongly
/// `r`-anti-invariant, for every qualifying `r`.
pub fn check_involution_lemma(f: &Vbf) -> Result<InvolutionLemmaVerdict> {
    if !f.is_permutation() || !f.is_involution() {
        return input("the involution lemma needs F∘F = identity");
    }
    let report = f.anti_invariance_report(&AntiInvarianceOptions::default())?;
    let m = f.m();
    let cases: Vec<LemmaCase> = (1..)
        .take_while(|&r| 2 * r < m)
        .filter(|&r| report.plain_degree >= 2 * r)
        .map(|r| LemmaCase {
            r,
            satisfied: report.strong_degree >= r,
        })
        .collect();
    Ok(InvolutionLemmaVerdict {
        m,
        plain_degree: report.plain_degree,
        strong_degree: report.strong_degree,
        holds: cases.iter().all(|c| c.satisfied),
        cases,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InverseClosedSubgroup {
    pub subspace: Subspace,
    pub multiplicatively_closed: bool,
    /// `Some(d)` when the subgroup equals GF(2^d) with `d | m`.
    pub subfield_degree: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SubfieldVerdict {
    pub m: usize,
    pub modulus: u32,
    pub subspaces_scanned: usize,
    /// Nonzero additive subgroups closed under inversion, in enumeration order.
    pub inverse_closed: Vec<InverseClosedSubgroup>,
    /// Divisors `d` of `m`; GF(2^d) must appear exactly once above.
    pub expected_degrees: Vec<usize>,
    pub holds: bool,
}

/// Exhaustively confirms that the nonzero additive subgroups of GF(2^m) that
/// are closed under inversion are exactly the subfields.
pub fn verify_subfield_theorem(m: usize, modulus: u32) -> Result<SubfieldVerdict> {
    if m > FULL_SCAN_MAX_M {
        return capacity(format!("subfield scan needs m <= {FULL_SCAN_MAX_M}, got {m}"));
    }
    let field = BinaryField::new(m, modulus)?;
    let inv: Vec<u32> = (0..field.order()).map(|x| field.inv(x)).collect();
    let subfields: Vec<(usize, Vec<u32>)> = (1..=m)
        .filter(|&d| m.is_multiple_of(d))
        .map(|d| (d, field.subfield_elements(d)))
        .collect();

    let mut scanned = 0;
    let mut inverse_closed = Vec::new();
    for u in enumerate_subspaces(m, None)? {
        scanned += 1;
        if u.is_zero() {
            continue;
        }
        let elements: Vec<u32> = u.elements()?.map(|x| x as u32).collect();
        if !elements
            .iter()
            .all(|&x| u.contains_bits(inv[x as usize] as u128))
        {
            continue;
        }
        let multiplicatively_closed = elements.iter().all(|&x| {
            elements
                .iter()
                .all(|&y| u.contains_bits(field.mul(x, y) as u128))
        });
        let mut sorted = elements.clone();
        sorted.sort_unstable();
        let subfield_degree = subfields
            .iter()
            .find(|(_, els)| *els == sorted)
            .map(|&(d, _)| d);
        inverse_closed.push(InverseClosedSubgroup {
            subspace: u,
            multiplicatively_closed,
            subfield_degree,
        });
    }

    let expected_degrees: Vec<usize> = subfields.iter().map(|&(d, _)| d).collect();
    let mut found: Vec<usize> = inverse_closed
        .iter()
        .filter_map(|g| g.subfield_degree)
        .collect();
    found.sort_unstable();
    let holds = inverse_closed
        .iter()
        .all(|g| g.multiplicatively_closed && g.subfield_degree.is_some())
        && found == expected_degrees;
    Ok(SubfieldVerdict {
        m,
        modulus,
        subspaces_scanned: scanned,
        inverse_closed,
        expected_degrees,
        holds,
    })
}

/// Splits `x` into (canonical coset representative, coordinates in the basis of `u`).
fn coset_coordinates(u: &Subspace, x: u128) -> (u128, usize) {
    let rep = u.reduce(x);
    let inner = x ^ rep;
    let coords = u
        .pivots()
        .iter()
        .enumerate()
        .fold(0usize, |acc, (i, &p)| acc | ((((inner >> p) & 1) as usize) << i));
    (rep, coords)
}

fn combine(u: &Subspace, coords: usize) -> u128 {
    u.rows()
        .iter()
        .enumerate()
        .filter(|(i, _)| (coords >> i) & 1 == 1)
        .fold(0, |acc, (_, &r)| acc ^ r)
}

fn check_planting_subspace(u: &Subspace) -> Result<()> {
    if !(MIN_M..=MAX_M).contains(&u.n()) {
        return input(format!("S-box width {} outside {MIN_M}..={MAX_M}", u.n()));
    }
    if u.is_zero() || u.is_full() {
        return input("the planted subspace must be neither {0} nor the whole space");
    }
    Ok(())
}

/// Coset representatives of `u` in increasing order; index 0 is 0.
fn coset_representatives(u: &Subspace) -> Vec<u128> {
    (0..1u128 << u.n()).filter(|&x| u.reduce(x) == x).collect()
}

/// A permutation fixing 0 that maps every coset of `u` onto a coset of `u`:
/// a random permutation of the cosets fixing `u` itself, composed with
/// independent random permutations inside each coset.
pub fn make_coset_respecting_sbox(u: &Subspace, seed: u64) -> Result<Vbf> {
    check_planting_subspace(u)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reps = coset_representatives(u);
    let mut coset_perm: Vec<usize> = (0..reps.len()).collect();
    coset_perm[1..].shuffle(&mut rng);
    let inner = 1usize << u.dim();
    let within: Vec<Vec<usize>> = (0..reps.len())
        .map(|c| {
            let mut p: Vec<usize> = (0..inner).collect();
            if c == 0 {
                p[1..].shuffle(&mut rng);
            } else {
                p.shuffle(&mut rng);
            }
            p
        })
        .collect();
    let rep_index = |rep: u128| reps.binary_search(&rep).expect("canonical representative");
    let table = (0..1u128 << u.n())
        .map(|x| {
            let (rep, coords) = coset_coordinates(u, x);
            let c = rep_index(rep);
            (reps[coset_perm[c]] ^ combine(u, within[c][coords])) as u16
        })
        .collect();
    Vbf::from_table(u.n(), table)
}

/// An involution fixing 0 that permutes the cosets of `u` (by an involution
/// fixing `u`), so it always preserves `u`.
pub fn make_coset_respecting_involution(u: &Subspace, seed: u64) -> Result<Vbf> {
    check_planting_subspace(u)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reps = coset_representatives(u);
    let inner = 1usize << u.dim();

    let random_involution = |rng: &mut ChaCha8Rng, n: usize, fix_first: bool| {
        let mut pts: Vec<usize> = (usize::from(fix_first)..n).collect();
        pts.shuffle(rng);
        let mut p: Vec<usize> = (0..n).collect();
        for pair in pts.chunks(2) {
            if let [a, b] = *pair {
                if rng.gen_bool(0.75) {
                    p[a] = b;
                    p[b] = a;
                }
            }
        }
        p
    };

    let coset_perm = random_involution(&mut rng, reps.len(), true);
    let mut within: Vec<Vec<usize>> = vec![Vec::new(); reps.len()];
    for c in 0..reps.len() {
        if !within[c].is_empty() {
            continue;
        }
        let partner = coset_perm[c];
        if partner == c {
            within[c] = random_involution(&mut rng, inner, c == 0);
        } else {
            let mut p: Vec<usize> = (0..inner).collect();
            p.shuffle(&mut rng);
            let mut q = vec![0; inner];
            for (i, &j) in p.iter().enumerate() {
                q[j] = i;
            }
            within[c] = p;
            within[partner] = q;
        }
    }
    let rep_index = |rep: u128| reps.binary_search(&rep).expect("canonical representative");
    let table = (0..1u128 << u.n())
        .map(|x| {
            let (rep, coords) = coset_coordinates(u, x);
            let c = rep_index(rep);
            (reps[coset_perm[c]] ^ combine(u, within[c][coords])) as u16
        })
        .collect();
    Vbf::from_table(u.n(), table)
}
