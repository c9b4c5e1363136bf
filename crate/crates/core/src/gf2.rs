//! Linear algebra over F₂ on bit words of width at most 128.
//!
//! Coordinate `j` of a vector is bit `j` of its word. Matrices act on the
//! right: row `i` of a [`BitMatrix`] is the image of the basis vector `e_i`,
//! and `v·λ` is the xor of the rows selected by the set bits of `v`.
//!
//! Subspaces are kept in a canonical reduced echelon form: each basis row has
//! a distinct pivot (its highest set bit), every pivot column is clear in all
//! other rows, and rows are sorted by pivot. Two [`Subspace`] values are equal
//! as sets exactly when they compare equal.

use std::fmt;
use std::ops::Add;

use crate::error::{capacity, input, Error, Result};

pub const MAX_WIDTH: usize = 128;

/// Words wider than this are never enumerated element by element.
const MAX_ELEMENT_DIM: usize = 32;

#[inline]
pub(crate) fn width_mask(n: usize) -> u128 {
    if n >= 128 {
        u128::MAX
    } else {
        (1u128 << n) - 1
    }
}

#[inline]
fn pivot(v: u128) -> usize {
    127 - v.leading_zeros() as usize
}

/// An element of (F₂)ⁿ.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vec2 {
    bits: u128,
    width: u8,
}

impl Vec2 {
    pub fn new(bits: u128, width: usize) -> Result<Self> {
        if width == 0 || width > MAX_WIDTH {
            return input(format!("vector width {width} outside 1..=128"));
        }
        if bits & !width_mask(width) != 0 {
            return input(format!("value {bits:#x} does not fit in {width} bits"));
        }
        Ok(Vec2 {
            bits,
            width: width as u8,
        })
    }

    pub fn zero(width: usize) -> Result<Self> {
        Self::new(0, width)
    }

    /// The standard basis vector `e_j`.
    pub fn unit(j: usize, width: usize) -> Result<Self> {
        if j >= width {
            return input(format!("coordinate {j} outside width {width}"));
        }
        Self::new(1u128 << j, width)
    }

    #[inline]
    pub fn bits(self) -> u128 {
        self.bits
    }

    #[inline]
    pub fn width(self) -> usize {
        self.width as usize
    }

    #[inline]
    pub fn bit(self, j: usize) -> bool {
        j < self.width() && (self.bits >> j) & 1 == 1
    }

    pub fn is_zero(self) -> bool {
        self.bits == 0
    }

    pub fn weight(self) -> u32 {
        self.bits.count_ones()
    }

    pub fn checked_add(self, other: Vec2) -> Result<Vec2> {
        if self.width != other.width {
            return input(format!(
                "width mismatch: {} vs {}",
                self.width, other.width
            ));
        }
        Ok(Vec2 {
            bits: self.bits ^ other.bits,
            width: self.width,
        })
    }
}

impl Add for Vec2 {
    type Output = Vec2;

    /// Panics on a width mismatch; use [`Vec2::checked_add`] for untrusted input.
    fn add(self, other: Vec2) -> Vec2 {
        self.checked_add(other).expect("Vec2 width mismatch")
    }
}

impl fmt::Debug for Vec2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Vec2({:#x}/{})", self.bits, self.width)
    }
}

impl fmt::Display for Vec2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in 0..self.width() {
            f.write_str(if self.bit(j) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Incremental echelon basis keyed by pivot; the building block for
/// [`Subspace::span`] and the rank-capped image tests in `vbf`.
#[derive(Clone, Debug)]
pub(crate) struct Echelon {
    by_pivot: Vec<u128>,
    rank: usize,
}

impl Echelon {
    pub(crate) fn new(n: usize) -> Self {
        Echelon {
            by_pivot: vec![0; n.max(1)],
            rank: 0,
        }
    }

    pub(crate) fn rank(&self) -> usize {
        self.rank
    }

    /// Inserts `v`; returns false if it was already in the span.
    pub(crate) fn insert(&mut self, mut v: u128) -> bool {
        while v != 0 {
            let p = pivot(v);
            let row = self.by_pivot[p];
            if row == 0 {
                self.by_pivot[p] = v;
                self.rank += 1;
                return true;
            }
            v ^= row;
        }
        false
    }

    pub(crate) fn into_subspace(self, n: usize) -> Subspace {
        let mut rows: Vec<u128> = self.by_pivot.into_iter().filter(|&r| r != 0).collect();
        // Rows are sorted by pivot; clear lower pivot columns from each row.
        for i in 0..rows.len() {
            for k in (0..i).rev() {
                let p = pivot(rows[k]);
                if (rows[i] >> p) & 1 == 1 {
                    rows[i] ^= rows[k];
                }
            }
        }
        Subspace { n, rows }
    }
}

/// A linear subspace of (F₂)ⁿ in canonical reduced echelon form.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Subspace {
    n: usize,
    rows: Vec<u128>,
}

impl Subspace {
    pub fn zero(n: usize) -> Result<Self> {
        check_width(n)?;
        Ok(Subspace { n, rows: Vec::new() })
    }

    pub fn full(n: usize) -> Result<Self> {
        check_width(n)?;
        Ok(Subspace {
            n,
            rows: (0..n).map(|j| 1u128 << j).collect(),
        })
    }

    /// Canonical span of `vectors`, all of which must have width `n`.
    pub fn span(vectors: &[Vec2], n: usize) -> Result<Self> {
        check_width(n)?;
        if let Some(v) = vectors.iter().find(|v| v.width() != n) {
            return input(format!(
                "vector of width {} in span over width {n}",
                v.width()
            ));
        }
        Ok(Self::span_bits(n, vectors.iter().map(|v| v.bits())))
    }

    /// Span of raw words; bits above `n` must already be clear.
    pub(crate) fn span_bits(n: usize, words: impl IntoIterator<Item = u128>) -> Self {
        let mut ech = Echelon::new(n);
        for w in words {
            debug_assert_eq!(w & !width_mask(n), 0);
            ech.insert(w);
            if ech.rank() == n {
                break;
            }
        }
        ech.into_subspace(n)
    }

    /// Builds a subspace from canonical rows; used by the enumerator.
    pub(crate) fn from_canonical_rows(n: usize, rows: Vec<u128>) -> Self {
        Subspace { n, rows }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn codim(&self) -> usize {
        self.n - self.rows.len()
    }

    pub fn is_zero(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.rows.len() == self.n
    }

    /// Canonical basis rows as raw words.
    pub fn rows(&self) -> &[u128] {
        &self.rows
    }

    pub fn basis(&self) -> Vec<Vec2> {
        self.rows
            .iter()
            .map(|&r| Vec2 {
                bits: r,
                width: self.n as u8,
            })
            .collect()
    }

    /// Pivot columns of the canonical basis, ascending.
    pub fn pivots(&self) -> Vec<usize> {
        self.rows.iter().map(|&r| pivot(r)).collect()
    }

    /// Eliminates the pivots of `v`; the result is the canonical coset
    /// representative of `v + U`.
    #[inline]
    pub fn reduce(&self, mut v: u128) -> u128 {
        for &r in &self.rows {
            if (v >> pivot(r)) & 1 == 1 {
                v ^= r;
            }
        }
        v
    }

    #[inline]
    pub fn contains_bits(&self, v: u128) -> bool {
        self.reduce(v) == 0
    }

    pub fn contains(&self, v: Vec2) -> Result<bool> {
        if v.width() != self.n {
            return input(format!(
                "vector of width {} tested against subspace of width {}",
                v.width(),
                self.n
            ));
        }
        Ok(self.contains_bits(v.bits()))
    }

    pub fn is_subspace_of(&self, other: &Subspace) -> bool {
        self.n == other.n && self.rows.iter().all(|&r| other.contains_bits(r))
    }

    pub fn sum(&self, other: &Subspace) -> Result<Subspace> {
        if self.n != other.n {
            return input("width mismatch in subspace sum");
        }
        Ok(Self::span_bits(
            self.n,
            self.rows.iter().chain(other.rows.iter()).copied(),
        ))
    }

    /// Number of elements, `2^dim`; errors when the dimension is too large to
    /// enumerate.
    pub fn size(&self) -> Result<u64> {
        if self.dim() > MAX_ELEMENT_DIM {
            return capacity(format!("subspace of dim {} too large to list", self.dim()));
        }
        Ok(1u64 << self.dim())
    }

    /// All elements in Gray-code order, starting at 0.
    pub fn elements(&self) -> Result<Elements<'_>> {
        let total = self.size()?;
        Ok(Elements {
            rows: &self.rows,
            index: 0,
            total,
            current: 0,
        })
    }

    /// `image_of_subspace`: the span of the images of the basis under `λ`.
    pub fn image(&self, lambda: &BitMatrix) -> Result<Subspace> {
        if lambda.n() != self.n {
            return input(format!(
                "matrix of dimension {} applied to subspace of width {}",
                lambda.n(),
                self.n
            ));
        }
        Ok(Self::span_bits(
            self.n,
            self.rows.iter().map(|&r| lambda.apply_bits(r)),
        ))
    }
}

impl serde::Serialize for Subspace {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let basis: Vec<String> = self.rows.iter().map(|r| format!("{r:#x}")).collect();
        let mut st = ser.serialize_struct("Subspace", 3)?;
        st.serialize_field("n", &self.n)?;
        st.serialize_field("dim", &self.dim())?;
        st.serialize_field("basis", &basis)?;
        st.end()
    }
}

/// Iterator over the elements of a [`Subspace`].
pub struct Elements<'a> {
    rows: &'a [u128],
    index: u64,
    total: u64,
    current: u128,
}

impl Iterator for Elements<'_> {
    type Item = u128;

    fn next(&mut self) -> Option<u128> {
        if self.index >= self.total {
            return None;
        }
        if self.index > 0 {
            let flip = self.index.trailing_zeros() as usize;
            self.current ^= self.rows[flip];
        }
        self.index += 1;
        Some(self.current)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.total - self.index) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for Elements<'_> {}

fn check_width(n: usize) -> Result<()> {
    if n == 0 || n > MAX_WIDTH {
        return input(format!("dimension {n} outside 1..=128"));
    }
    Ok(())
}

/// Invertible (or general) linear map on (F₂)ⁿ; row `i` is `e_i·λ`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct BitMatrix {
    n: usize,
    rows: Vec<u128>,
}

impl BitMatrix {
    pub fn identity(n: usize) -> Result<Self> {
        check_width(n)?;
        Ok(BitMatrix {
            n,
            rows: (0..n).map(|i| 1u128 << i).collect(),
        })
    }

    pub fn from_rows(n: usize, rows: &[Vec2]) -> Result<Self> {
        if rows.iter().any(|r| r.width() != n) {
            return input("matrix row width does not match dimension");
        }
        Self::from_bit_rows(n, rows.iter().map(|r| r.bits()).collect())
    }

    pub fn from_bit_rows(n: usize, rows: Vec<u128>) -> Result<Self> {
        check_width(n)?;
        if rows.len() != n {
            return input(format!("expected {n} rows, got {}", rows.len()));
        }
        if rows.iter().any(|&r| r & !width_mask(n) != 0) {
            return input(format!("matrix row wider than {n} bits"));
        }
        Ok(BitMatrix { n, rows })
    }

    /// Assembles the matrix of a linear map given as a function on words.
    pub fn from_linear_fn(n: usize, f: impl Fn(u128) -> u128) -> Result<Self> {
        check_width(n)?;
        Self::from_bit_rows(n, (0..n).map(|i| f(1u128 << i)).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> &[u128] {
        &self.rows
    }

    #[inline]
    pub fn apply_bits(&self, mut v: u128) -> u128 {
        let mut out = 0;
        while v != 0 {
            let i = v.trailing_zeros() as usize;
            out ^= self.rows[i];
            v &= v - 1;
        }
        out
    }

    pub fn apply(&self, v: Vec2) -> Result<Vec2> {
        if v.width() != self.n {
            return input(format!(
                "vector of width {} applied to {}x{} matrix",
                v.width(),
                self.n,
                self.n
            ));
        }
        Vec2::new(self.apply_bits(v.bits()), self.n)
    }

    pub fn rank(&self) -> usize {
        let mut ech = Echelon::new(self.n);
        for &r in &self.rows {
            ech.insert(r);
        }
        ech.rank()
    }

    pub fn is_invertible(&self) -> bool {
        self.rank() == self.n
    }

    pub fn is_identity(&self) -> bool {
        self.rows.iter().enumerate().all(|(i, &r)| r == 1u128 << i)
    }

    /// `self` followed by `other`: `v ↦ (v·self)·other`.
    pub fn then(&self, other: &BitMatrix) -> Result<BitMatrix> {
        if self.n != other.n {
            return input("dimension mismatch in matrix product");
        }
        Ok(BitMatrix {
            n: self.n,
            rows: self.rows.iter().map(|&r| other.apply_bits(r)).collect(),
        })
    }

    /// Gauss–Jordan inverse; `None` when singular.
    pub fn inverse(&self) -> Option<BitMatrix> {
        let n = self.n;
        let mut left = self.rows.clone();
        let mut right: Vec<u128> = (0..n).map(|i| 1u128 << i).collect();
        for col in 0..n {
            let sel = (col..n).find(|&r| (left[r] >> col) & 1 == 1)?;
            left.swap(col, sel);
            right.swap(col, sel);
            for r in 0..n {
                if r != col && (left[r] >> col) & 1 == 1 {
                    left[r] ^= left[col];
                    right[r] ^= right[col];
                }
            }
        }
        Some(BitMatrix { n, rows: right })
    }

    /// Parses the text format: `n` lines of `n` characters `0`/`1`, line `i`
    /// being row `i` and character `j` coordinate `j`.
    pub fn parse_text(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text
            .lines()
            .map(|l| l.trim_end_matches('\r'))
            .filter(|l| !l.is_empty())
            .collect();
        let n = lines.len();
        if n == 0 {
            return Err(Error::Parse("empty matrix".into()));
        }
        if n > MAX_WIDTH {
            return Err(Error::Parse(format!("{n} rows exceed the 128-bit limit")));
        }
        let mut rows = Vec::with_capacity(n);
        for (i, line) in lines.iter().enumerate() {
            if line.len() != n {
                return Err(Error::Parse(format!(
                    "row {i} has {} characters, expected {n}",
                    line.len()
                )));
            }
            let mut row = 0u128;
            for (j, c) in line.bytes().enumerate() {
                match c {
                    b'0' => {}
                    b'1' => row |= 1u128 << j,
                    _ => {
                        return Err(Error::Parse(format!(
                            "row {i} column {j}: unexpected character {:?}",
                            c as char
                        )))
                    }
                }
            }
            rows.push(row);
        }
        Self::from_bit_rows(n, rows)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.n * (self.n + 1));
        for &r in &self.rows {
            for j in 0..self.n {
                out.push(if (r >> j) & 1 == 1 { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }
}

/// Splitting of (F₂)ⁿ into `s` consecutive bricks of `m` coordinates each.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, serde::Serialize, serde::Deserialize)]
pub struct BrickDecomposition {
    m: usize,
    s: usize,
}

impl BrickDecomposition {
    pub fn new(s: usize, m: usize) -> Result<Self> {
        if s < 2 {
            return input(format!("need at least two bricks, got {s}"));
        }
        if m == 0 || m * s > MAX_WIDTH {
            return input(format!("{s} bricks of width {m} do not fit in 128 bits"));
        }
        Ok(BrickDecomposition { m, s })
    }

    /// Parses a descriptor `s×m` (or `sxm`), e.g. `16x8`.
    pub fn parse(descr: &str) -> Result<Self> {
        let normalized = descr.trim().replace('×', "x");
        let (s, m) = normalized
            .split_once(['x', 'X'])
            .ok_or_else(|| Error::Parse(format!("brick descriptor {descr:?} is not s×m")))?;
        let s = s
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad brick count in {descr:?}")))?;
        let m = m
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad brick width in {descr:?}")))?;
        Self::new(s, m)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn n(&self) -> usize {
        self.m * self.s
    }

    #[inline]
    pub fn brick_mask(&self, i: usize) -> u128 {
        width_mask(self.m) << (i * self.m)
    }

    /// `π_i(v)` shifted down to an `m`-bit word.
    #[inline]
    pub fn project(&self, v: u128, i: usize) -> u128 {
        (v >> (i * self.m)) & width_mask(self.m)
    }

    #[inline]
    pub fn embed(&self, value: u128, i: usize) -> u128 {
        (value & width_mask(self.m)) << (i * self.m)
    }

    /// The brick sum `⊕_{i∈I} V_i`.
    pub fn brick_sum(&self, bricks: &[usize]) -> Result<Subspace> {
        if let Some(&i) = bricks.iter().find(|&&i| i >= self.s) {
            return input(format!("brick {i} out of range 0..{}", self.s));
        }
        let rows = bricks
            .iter()
            .flat_map(|&i| (0..self.m).map(move |j| 1u128 << (i * self.m + j)));
        Ok(Subspace::span_bits(self.n(), rows))
    }

    pub fn display(&self) -> String {
        format!("{}x{}", self.s, self.m)
    }
}

/// Lazy stream over the subspaces of (F₂)ⁿ, by dimension ascending and then
/// lexicographically on the canonical basis rows.
pub struct Subspaces {
    n: usize,
    dims: Vec<usize>,
    current: Option<DimOdometer>,
}

/// Enumerates subspaces of (F₂)ⁿ, optionally restricted to the given
/// dimensions. Unrestricted enumeration is limited to `n ≤ 8`; above that
/// every requested dimension must have codimension at most 4.
pub fn enumerate_subspaces(n: usize, dims: Option<&[usize]>) -> Result<Subspaces> {
    check_width(n)?;
    let mut dims: Vec<usize> = match dims {
        Some(d) => d.to_vec(),
        None => {
            if n > 8 {
                return capacity(format!(
                    "full subspace enumeration needs n <= 8, got {n}; pass a dimension filter"
                ));
            }
            (0..=n).collect()
        }
    };
    dims.sort_unstable();
    dims.dedup();
    if let Some(&d) = dims.iter().find(|&&d| d > n) {
        return input(format!("dimension {d} exceeds ambient dimension {n}"));
    }
    if n > 8 {
        if let Some(&d) = dims.iter().find(|&&d| n - d > 4) {
            return capacity(format!(
                "codimension {} requested at n = {n}; at most 4 is supported",
                n - d
            ));
        }
    }
    dims.reverse();
    let mut it = Subspaces {
        n,
        dims,
        current: None,
    };
    it.current = it.dims.pop().map(|k| DimOdometer::new(n, k));
    Ok(it)
}

impl Iterator for Subspaces {
    type Item = Subspace;

    fn next(&mut self) -> Option<Subspace> {
        loop {
            let odo = self.current.as_mut()?;
            if let Some(rows) = odo.next_rows() {
                return Some(Subspace::from_canonical_rows(self.n, rows));
            }
            self.current = self.dims.pop().map(|k| DimOdometer::new(self.n, k));
        }
    }
}

/// Walks the canonical bases of one dimension. Row `i` is
/// `(1 << pivot_i) | free_i`, with `free_i` ranging over the submasks of the
/// columns below `pivot_i` that are not earlier pivots.
struct DimOdometer {
    n: usize,
    pivots: Vec<usize>,
    free: Vec<u128>,
    masks: Vec<u128>,
    exhausted: bool,
}

impl DimOdometer {
    fn new(n: usize, k: usize) -> Self {
        let mut odo = DimOdometer {
            n,
            pivots: vec![0; k],
            free: vec![0; k],
            masks: vec![0; k],
            exhausted: false,
        };
        odo.reset_from(0);
        odo
    }

    fn mask_for(&self, i: usize) -> u128 {
        let below = width_mask(self.pivots[i]);
        let taken = self.pivots[..i]
            .iter()
            .fold(0u128, |acc, &p| acc | (1u128 << p));
        below & !taken
    }

    /// Sets rows `i..` to the smallest values compatible with rows `..i`.
    fn reset_from(&mut self, i: usize) {
        for j in i..self.pivots.len() {
            self.pivots[j] = if j == 0 { 0 } else { self.pivots[j - 1] + 1 };
            self.free[j] = 0;
            self.masks[j] = self.mask_for(j);
        }
    }

    fn next_rows(&mut self) -> Option<Vec<u128>> {
        if self.exhausted {
            return None;
        }
        let rows = self
            .pivots
            .iter()
            .zip(&self.free)
            .map(|(&p, &f)| (1u128 << p) | f)
            .collect();
        self.advance();
        Some(rows)
    }

    fn advance(&mut self) {
        let k = self.pivots.len();
        for j in (0..k).rev() {
            if self.free[j] != self.masks[j] {
                self.free[j] = (self.free[j] | !self.masks[j]).wrapping_add(1) & self.masks[j];
                self.reset_from(j + 1);
                return;
            }
            if self.pivots[j] < self.n - k + j {
                self.pivots[j] += 1;
                self.free[j] = 0;
                self.masks[j] = self.mask_for(j);
                self.reset_from(j + 1);
                return;
            }
        }
        self.exhausted = true;
    }
}
