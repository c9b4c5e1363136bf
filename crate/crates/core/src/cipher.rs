//! Translation-based ciphers: rounds `v ↦ vγ_hλ_h + k` built from a
//! bricklayer of S-boxes, a linear layer and a key translation, together with
//! the primitivity certifier for the per-round groups `Γ_h`.
//!
//! A primitive `Γ_h` makes `Γ_∞` primitive as well: `Γ_∞` is transitive and
//! contains `Γ_h`, so a block system for `Γ_∞` would also be one for `Γ_h`.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{capacity, input, Error, Result};
use crate::gf2::{BitMatrix, BrickDecomposition, Subspace, Vec2};
use crate::mixing::is_proper;
use crate::vbf::{weak_bound_holds, AntiInvarianceOptions, Vbf};

/// Largest state width for [`verify_block_witness`].
pub const WITNESS_MAX_N: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Round {
    sboxes: Vec<Vbf>,
    layer: BitMatrix,
    /// Constant added after the linear layer, for affine layers.
    offset: u128,
}

impl Round {
    pub fn new(sboxes: Vec<Vbf>, layer: BitMatrix) -> Self {
        Round {
            sboxes,
            layer,
            offset: 0,
        }
    }

    /// The same S-box in every brick.
    pub fn uniform(sbox: Vbf, s: usize, layer: BitMatrix) -> Self {
        Self::new(vec![sbox; s], layer)
    }

    pub fn with_offset(mut self, offset: u128) -> Self {
        self.offset = offset;
        self
    }

    pub fn sboxes(&self) -> &[Vbf] {
        &self.sboxes
    }

    pub fn layer(&self) -> &BitMatrix {
        &self.layer
    }

    pub fn offset(&self) -> u128 {
        self.offset
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TbCipherSpec {
    bricks: BrickDecomposition,
    rounds: Vec<Round>,
}

impl TbCipherSpec {
    pub fn new(bricks: BrickDecomposition, rounds: Vec<Round>) -> Result<Self> {
        if rounds.is_empty() {
            return input("a cipher needs at least one round");
        }
        for (h, round) in rounds.iter().enumerate() {
            if round.sboxes.len() != bricks.s() {
                return input(format!(
                    "round {h} has {} S-boxes for {} bricks",
                    round.sboxes.len(),
                    bricks.s()
                ));
            }
            for (i, sb) in round.sboxes.iter().enumerate() {
                if sb.m() != bricks.m() {
                    return input(format!(
                        "round {h} brick {i}: S-box on {} bits, bricks have {}",
                        sb.m(),
                        bricks.m()
                    ));
                }
                if !sb.is_permutation() {
                    return input(format!("round {h} brick {i}: S-box is not a permutation"));
                }
            }
            if round.layer.n() != bricks.n() {
                return input(format!(
                    "round {h}: layer of dimension {} for n = {}",
                    round.layer.n(),
                    bricks.n()
                ));
            }
            if !round.layer.is_invertible() {
                return input(format!("round {h}: mixing layer is singular"));
            }
            if round.offset & !crate::gf2::width_mask(bricks.n()) != 0 {
                return input(format!("round {h}: layer offset wider than n"));
            }
        }
        Ok(TbCipherSpec { bricks, rounds })
    }

    pub fn bricks(&self) -> &BrickDecomposition {
        &self.bricks
    }

    pub fn n(&self) -> usize {
        self.bricks.n()
    }

    pub fn rounds(&self) -> &[Round] {
        &self.rounds
    }

    fn round(&self, h: usize) -> Result<&Round> {
        self.rounds.get(h).ok_or_else(|| {
            Error::Input(format!(
                "round {h} out of range, cipher has {}",
                self.rounds.len()
            ))
        })
    }

    /// `vγ_h`, brick by brick.
    pub fn bricklayer_bits(&self, h: usize, v: u128) -> Result<u128> {
        let round = self.round(h)?;
        Ok(self.bricklayer_raw(round, v))
    }

    fn bricklayer_raw(&self, round: &Round, v: u128) -> u128 {
        let d = &self.bricks;
        round
            .sboxes
            .iter()
            .enumerate()
            .fold(0, |acc, (i, sb)| {
                acc | d.embed(sb.eval(d.project(v, i) as usize) as u128, i)
            })
    }

    #[inline]
    fn apply_raw(&self, round: &Round, key: u128, v: u128) -> u128 {
        round.layer.apply_bits(self.bricklayer_raw(round, v)) ^ round.offset ^ key
    }

    /// `τ_{k,h}(v) = vγ_hλ_h + k`.
    pub fn apply_round(&self, h: usize, key: Vec2, v: Vec2) -> Result<Vec2> {
        let n = self.n();
        if key.width() != n || v.width() != n {
            return input(format!(
                "state and key must have width {n}, got {} and {}",
                v.width(),
                key.width()
            ));
        }
        let round = self.round(h)?;
        Vec2::new(self.apply_raw(round, key.bits(), v.bits()), n)
    }

    pub fn apply_round_bits(&self, h: usize, key: u128, v: u128) -> Result<u128> {
        let round = self.round(h)?;
        Ok(self.apply_raw(round, key, v))
    }

    /// The zero-key round function as a table; needs `n ≤ 20`.
    pub fn round_table(&self, h: usize) -> Result<Vec<u32>> {
        let n = self.n();
        if n > WITNESS_MAX_N {
            return capacity(format!("round table for n = {n} exceeds 2^{WITNESS_MAX_N} points"));
        }
        let round = self.round(h)?;
        Ok((0..1u128 << n)
            .map(|v| self.apply_raw(round, 0, v) as u32)
            .collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Primitive,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BrickEvidence {
    pub brick: usize,
    pub min_derivative_image: usize,
    pub strong_degree: usize,
    /// The strong degree is only a lower bound.
    pub strong_partial: bool,
    pub normalized_by: Option<u16>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Attempt {
    pub r: usize,
    /// Every brick is weakly `2^r`-uniform.
    pub weakly_uniform: bool,
    /// Every brick is strongly `r`-anti-invariant.
    pub strongly_anti_invariant: bool,
}

impl Attempt {
    pub fn passed(&self) -> bool {
        self.weakly_uniform && self.strongly_anti_invariant
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RoundEvidence {
    pub round: usize,
    pub proper: bool,
    pub invariant_bricks: Option<Vec<usize>>,
    /// Filled only for proper rounds.
    pub bricks: Vec<BrickEvidence>,
    pub attempts: Vec<Attempt>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Certificate {
    pub verdict: Verdict,
    pub round: Option<usize>,
    pub r: Option<usize>,
    pub rounds: Vec<RoundEvidence>,
    pub notes: Vec<String>,
}

#[derive(Clone, Copy)]
struct SboxFacts {
    min_image: usize,
    strong_degree: usize,
    strong_partial: bool,
}

/// Tries every proper round and every `1 ≤ r < m/2` (ascending) against the
/// brick hypotheses: weak `2^r`-uniformity and strong `r`-anti-invariance.
/// The first success yields a primitive verdict; otherwise the result is
/// inconclusive, since the criterion is only sufficient.
pub fn certify(spec: &TbCipherSpec) -> Result<Certificate> {
    let m = spec.bricks.m();
    let mut notes = Vec::new();
    let mut cache: HashMap<Vec<u16>, SboxFacts> = HashMap::new();
    let mut rounds = Vec::with_capacity(spec.rounds.len());
    let mut chosen: Option<(usize, usize)> = None;

    for (h, round) in spec.rounds.iter().enumerate() {
        if round.offset != 0 {
            notes.push(format!(
                "round {h}: layer offset {:#x} absorbed into the round key",
                round.offset
            ));
        }
        let properness = is_proper(&round.layer, &spec.bricks)?;
        let mut evidence = RoundEvidence {
            round: h,
            proper: properness.proper,
            invariant_bricks: properness.invariant_bricks,
            bricks: Vec::new(),
            attempts: Vec::new(),
        };
        if !properness.proper {
            rounds.push(evidence);
            continue;
        }

        let mut shifts: Vec<(u16, Vec<usize>)> = Vec::new();
        for (i, sbox) in round.sboxes.iter().enumerate() {
            let (normalized, constant) = sbox.normalized();
            if let Some(c) = constant {
                match shifts.iter_mut().find(|(k, _)| *k == c) {
                    Some((_, bricks)) => bricks.push(i),
                    None => shifts.push((c, vec![i])),
                }
            }
            let facts = match cache.get(normalized.table()) {
                Some(&f) => f,
                None => {
                    let report = normalized.anti_invariance_report(&AntiInvarianceOptions::default())?;
                    let f = SboxFacts {
                        min_image: normalized.min_derivative_image(),
                        strong_degree: report.strong_degree,
                        strong_partial: report.strong_partial,
                    };
                    cache.insert(normalized.table().to_vec(), f);
                    f
                }
            };
            evidence.bricks.push(BrickEvidence {
                brick: i,
                min_derivative_image: facts.min_image,
                strong_degree: facts.strong_degree,
                strong_partial: facts.strong_partial,
                normalized_by: constant,
            });
        }

        for (c, bricks) in shifts {
            let which = if bricks.len() == spec.bricks.s() {
                "every brick".to_string()
            } else {
                format!("bricks {bricks:?}")
            };
            notes.push(format!(
                "round {h}: S-boxes of {which} shifted by {c:#x} to fix 0; constants absorbed into the round key"
            ));
        }

        for r in (1..).take_while(|&r| 2 * r < m) {
            let attempt = Attempt {
                r,
                weakly_uniform: evidence
                    .bricks
                    .iter()
                    .all(|b| weak_bound_holds(b.min_derivative_image, 1 << r, m)),
                strongly_anti_invariant: evidence.bricks.iter().all(|b| b.strong_degree >= r),
            };
            let passed = attempt.passed();
            evidence.attempts.push(attempt);
            if passed {
                chosen.get_or_insert((h, r));
                break;
            }
        }
        rounds.push(evidence);
    }

    if rounds.iter().all(|r| !r.proper) {
        notes.push("no round has a proper mixing layer".into());
    }
    Ok(Certificate {
        verdict: if chosen.is_some() {
            Verdict::Primitive
        } else {
            Verdict::Inconclusive
        },
        round: chosen.map(|c| c.0),
        r: chosen.map(|c| c.1),
        rounds,
        notes,
    })
}

/// Checks that the translates of `u` form a block system for `Γ_h`:
/// `(v + u)γλ + vγλ ∈ U` for all `v ∈ V`, `u ∈ U`. By additivity in `u` it is
/// enough to test the basis of `U`.
pub fn verify_block_witness(spec: &TbCipherSpec, h: usize, u: &Subspace) -> Result<bool> {
    let n = spec.n();
    if n > WITNESS_MAX_N {
        return capacity(format!("block witness check needs n <= {WITNESS_MAX_N}, got {n}"));
    }
    if u.n() != n {
        return input(format!("subspace of width {} for n = {n}", u.n()));
    }
    if u.is_zero() || u.is_full() {
        return input("the candidate block must be neither {0} nor V");
    }
    let round = spec.round(h)?;
    let table: Vec<u128> = (0..1u128 << n).map(|v| spec.apply_raw(round, 0, v)).collect();
    Ok((0..1usize << n).all(|v| {
        let fv = table[v];
        u.rows()
            .iter()
            .all(|&b| u.contains_bits(table[v ^ b as usize] ^ fv))
    }))
}

/// S-box references of one round in a spec file: one path for every brick or
/// one path per brick.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SboxRefs {
    Shared(String),
    PerBrick(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundFile {
    pub sboxes: SboxRefs,
    /// Matrix file path, or `"identity"`.
    pub layer: String,
    /// Optional hexadecimal constant added after the layer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<String>,
}

/// On-disk cipher description; paths are relative to the file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CipherFile {
    pub n: usize,
    pub m: usize,
    pub s: usize,
    pub rounds: Vec<RoundFile>,
}

pub fn parse_hex_u128(text: &str) -> Result<u128> {
    let t = text.trim();
    let digits = t
        .strip_prefix("0x")
        .or_else(|| t.strip_prefix("0X"))
        .unwrap_or(t);
    u128::from_str_radix(digits, 16).map_err(|_| Error::Parse(format!("bad hexadecimal value {text:?}")))
}

impl CipherFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Every file the description refers to, in order of first use.
    pub fn referenced_paths(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rounds {
            let sboxes: Vec<&str> = match &r.sboxes {
                SboxRefs::Shared(p) => vec![p.as_str()],
                SboxRefs::PerBrick(ps) => ps.iter().map(String::as_str).collect(),
            };
            for p in sboxes.into_iter().chain((r.layer != "identity").then_some(r.layer.as_str())) {
                if !out.contains(&p) {
                    out.push(p);
                }
            }
        }
        out
    }

    /// Loads the referenced S-box and matrix files relative to `base`.
    pub fn resolve(&self, base: &Path) -> Result<TbCipherSpec> {
        if self.n != self.m * self.s {
            return input(format!("n = {} but m·s = {}", self.n, self.m * self.s));
        }
        let bricks = BrickDecomposition::new(self.s, self.m)?;
        let mut sbox_cache: HashMap<PathBuf, Vbf> = HashMap::new();
        let mut load_sbox = |p: &str| -> Result<Vbf> {
            let path = base.join(p);
            if let Some(v) = sbox_cache.get(&path) {
                return Ok(v.clone());
            }
            let v = Vbf::parse_sbox(&read(&path)?)?;
            sbox_cache.insert(path, v.clone());
            Ok(v)
        };
        let mut rounds = Vec::with_capacity(self.rounds.len());
        for rf in &self.rounds {
            let sboxes = match &rf.sboxes {
                SboxRefs::Shared(p) => vec![load_sbox(p)?; self.s],
                SboxRefs::PerBrick(ps) => ps.iter().map(|p| load_sbox(p)).collect::<Result<_>>()?,
            };
            let layer = if rf.layer == "identity" {
                BitMatrix::identity(self.n)?
            } else {
                BitMatrix::parse_text(&read(&base.join(&rf.layer))?)?
            };
            let offset = rf.offset.as_deref().map(parse_hex_u128).transpose()?.unwrap_or(0);
            rounds.push(Round::new(sboxes, layer).with_offset(offset));
        }
        TbCipherSpec::new(bricks, rounds)
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

/// Reads and resolves a cipher description file.
pub fn load_cipher(path: &Path) -> Result<TbCipherSpec> {
    let file = CipherFile::parse(&read(path)?)?;
    file.resolve(path.parent().unwrap_or(Path::new(".")))
}
