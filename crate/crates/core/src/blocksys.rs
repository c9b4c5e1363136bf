//! Brute-force block systems of the group generated by a zero-key round
//! function together with all translations of (F₂)ⁿ.
//!
//! The minimal block system containing `{0, w}` is found by union-find
//! refinement (Atkinson): merge `0` and `w`, then for every merged pair and
//! every generator `g` merge the images under `g`, until nothing changes.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::cipher::TbCipherSpec;
use crate::error::{capacity, input, Result};
use crate::gf2::Subspace;

pub const MAX_POINTS_LOG2: usize = 16;

/// Permutations of (F₂)ⁿ plus the translations by the basis vectors, which
/// generate the full translation group and make the action transitive.
#[derive(Clone, Debug)]
pub struct GeneratorSet {
    n: usize,
    tables: Vec<Vec<u32>>,
}

impl GeneratorSet {
    pub fn new(n: usize, tables: Vec<Vec<u32>>) -> Result<Self> {
        check_n(n)?;
        for (i, t) in tables.iter().enumerate() {
            if t.len() != 1 << n {
                return input(format!("generator {i} has {} points, expected {}", t.len(), 1u32 << n));
            }
            let mut seen = vec![false; t.len()];
            for &y in t {
                if (y as usize) >= seen.len() || std::mem::replace(&mut seen[y as usize], true) {
                    return input(format!("generator {i} is not a permutation"));
                }
            }
        }
        Ok(GeneratorSet { n, tables })
    }

    pub fn translations_only(n: usize) -> Result<Self> {
        Self::new(n, Vec::new())
    }

    /// The zero-key round function of round `h`, with the translations.
    pub fn from_round(spec: &TbCipherSpec, h: usize) -> Result<Self> {
        check_n(spec.n())?;
        Self::new(spec.n(), vec![spec.round_table(h)?])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tables(&self) -> &[Vec<u32>] {
        &self.tables
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return input("state width must be positive");
    }
    if n > MAX_POINTS_LOG2 {
        return capacity(format!(
            "block oracle supports n <= {MAX_POINTS_LOG2}, got {n}"
        ));
    }
    Ok(())
}

struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    fn new(len: usize) -> Self {
        UnionFind {
            parent: (0..len as u32).collect(),
            size: vec![1; len],
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        while self.parent[x as usize] != root {
            let next = self.parent[x as usize];
            self.parent[x as usize] = root;
            x = next;
        }
        root
    }

    /// Returns the surviving root when two classes merge.
    fn union(&mut self, a: u32, b: u32) -> Option<u32> {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return None;
        }
        if self.size[ra as usize] < self.size[rb as usize] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb as usize] = ra;
        self.size[ra as usize] += self.size[rb as usize];
        Some(ra)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BlockSystemResult {
    pub seed: u32,
    pub block_size: usize,
    pub block_count: usize,
    /// Sorted points of the block through 0.
    pub block_containing_zero: Vec<u32>,
    pub is_subspace: bool,
    /// Canonical basis of the block through 0, when it is a subspace.
    pub subspace: Option<Subspace>,
}

impl BlockSystemResult {
    /// One block holding every point.
    pub fn is_trivial(&self) -> bool {
        self.block_count == 1
    }
}

/// The finest invariant partition in which 0 and `w` share a block.
pub fn minimal_blocks(gens: &GeneratorSet, w: u32) -> Result<BlockSystemResult> {
    let n = gens.n;
    if w == 0 || (w as u64) >> n != 0 {
        return input(format!("seed {w:#x} must be a nonzero {n}-bit point"));
    }
    let points = 1usize << n;
    let mut uf = UnionFind::new(points);
    let mut pending: Vec<(u32, u32)> = Vec::new();
    uf.union(0, w);
    pending.push((0, w));
    while let Some((a, b)) = pending.pop() {
        for j in 0..n {
            let t = 1u32 << j;
            let (x, y) = (a ^ t, b ^ t);
            if uf.union(x, y).is_some() {
                pending.push((x, y));
            }
        }
        for table in &gens.tables {
            let (x, y) = (table[a as usize], table[b as usize]);
            if uf.union(x, y).is_some() {
                pending.push((x, y));
            }
        }
    }

    let zero_root = uf.find(0);
    let mut block_count = 0;
    let mut block_containing_zero = Vec::new();
    for x in 0..points as u32 {
        let r = uf.find(x);
        if r == x {
            block_count += 1;
        }
        if r == zero_root {
            block_containing_zero.push(x);
        }
    }
    let block_size = block_containing_zero.len();
    debug_assert_eq!(block_size * block_count, points);

    let span = Subspace::span_bits(n, block_containing_zero.iter().map(|&x| x as u128));
    let is_subspace = 1usize << span.dim() == block_size;
    Ok(BlockSystemResult {
        seed: w,
        block_size,
        block_count,
        block_containing_zero,
        is_subspace,
        subspace: is_subspace.then_some(span),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SeedSummary {
    pub seed: u32,
    pub block_size: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ScanResult {
    pub n: usize,
    pub primitive: bool,
    pub seeds: Vec<SeedSummary>,
    /// Distinct nontrivial systems, in order of their first seed.
    pub systems: Vec<BlockSystemResult>,
}

/// Runs [`minimal_blocks`] for every nonzero seed. The group is primitive
/// exactly when every seed collapses to the one-block partition.
pub fn primitivity_scan(gens: &GeneratorSet) -> Result<ScanResult> {
    let results: Vec<BlockSystemResult> = (1..1u32 << gens.n)
        .into_par_iter()
        .map(|w| minimal_blocks(gens, w))
        .collect::<Result<_>>()?;
    let seeds = results
        .iter()
        .map(|r| SeedSummary {
            seed: r.seed,
            block_size: r.block_size,
        })
        .collect();
    let mut seen: HashSet<Vec<u32>> = HashSet::new();
    let systems: Vec<BlockSystemResult> = results
        .into_iter()
        .filter(|r| !r.is_trivial() && seen.insert(r.block_containing_zero.clone()))
        .collect();
    Ok(ScanResult {
        n: gens.n,
        primitive: systems.is_empty(),
        seeds,
        systems,
    })
}
