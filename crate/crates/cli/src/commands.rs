//! One function per subcommand. Each returns a report; printing and file
//! output are left to the binary.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use tbprim::blocksys::{primitivity_scan, GeneratorSet, ScanResult, MAX_POINTS_LOG2};
use tbprim::cipher::{certify, load_cipher, CipherFile, Certificate, Verdict};
use tbprim::mixing::{brick_digraph, is_proper, BrickDigraph};
use tbprim::vbf::{
    check_involution_lemma, verify_subfield_theorem, AntiInvarianceOptions, AntiInvarianceReport,
    DdtReport, InvolutionLemmaVerdict, SubfieldVerdict,
};
use tbprim::{BitMatrix, BrickDecomposition, Vbf};

use crate::report::{AnalysisReport, InputDigest};

/// A one-line, human-readable digest of a payload.
pub trait Summary {
    fn summary(&self) -> String;
}

pub const WEAK_TABLE_DELTAS: [u32; 4] = [2, 4, 8, 16];

#[derive(Clone, Debug, Serialize)]
pub struct WeakEntry {
    pub delta: u32,
    pub weakly_uniform: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SboxAnalysis {
    pub m: usize,
    pub is_permutation: bool,
    pub is_involution: bool,
    pub ddt: DdtReport,
    /// Empty for tables that are not permutations.
    pub weak_uniformity: Vec<WeakEntry>,
    /// Absent when the table is not a permutation, or when `F(0) ≠ 0` and
    /// normalization was not requested.
    pub anti_invariance: Option<AntiInvarianceReport>,
    pub notes: Vec<String>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SboxOptions {
    pub normalize: bool,
    pub strong_max_codim: Option<usize>,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn sbox_analyze(path: &Path, opts: SboxOptions) -> Result<AnalysisReport<SboxAnalysis>> {
    let digest = InputDigest::of_file(path)?;
    let f = Vbf::parse_sbox(&read_text(path)?).with_context(|| format!("parsing {}", path.display()))?;
    Ok(AnalysisReport::new("sbox analyze", vec![digest], analyze_vbf(&f, opts)?))
}

pub fn analyze_vbf(f: &Vbf, opts: SboxOptions) -> Result<SboxAnalysis> {
    let mut notes = Vec::new();
    let is_permutation = f.is_permutation();
    let weak_uniformity = if is_permutation {
        WEAK_TABLE_DELTAS
            .iter()
            .map(|&delta| {
                Ok(WeakEntry {
                    delta,
                    weakly_uniform: f.is_weakly_uniform(delta)?,
                })
            })
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let anti_invariance = if !is_permutation {
        notes.push("not a permutation; analysis limited to the DDT".into());
        None
    } else if f.eval(0) != 0 && !opts.normalize {
        notes.push(format!(
            "F(0) = {:#x}; rerun with --normalize for anti-invariance degrees",
            f.eval(0)
        ));
        None
    } else {
        let ai = AntiInvarianceOptions {
            normalize: opts.normalize,
            max_codim: opts.strong_max_codim,
        };
        Some(f.anti_invariance_report(&ai)?)
    };
    Ok(SboxAnalysis {
        m: f.m(),
        is_permutation,
        is_involution: is_permutation && f.is_involution(),
        ddt: f.ddt_report(),
        weak_uniformity,
        anti_invariance,
        notes,
    })
}

impl Summary for SboxAnalysis {
    fn summary(&self) -> String {
        let mut s = format!(
            "m={} uniformity={} min_image={}",
            self.m, self.ddt.uniformity, self.ddt.min_derivative_image
        );
        if let Some(ai) = &self.anti_invariance {
            s += &format!(" plain_degree={} strong_degree={}", ai.plain_degree, ai.strong_degree);
        }
        s
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LayerCheck {
    pub n: usize,
    pub bricks: String,
    pub proper: bool,
    pub invariant_bricks: Option<Vec<usize>>,
    pub digraph: BrickDigraph,
}

pub fn layer_check(path: &Path, bricks: &str) -> Result<AnalysisReport<LayerCheck>> {
    let digest = InputDigest::of_file(path)?;
    let d = BrickDecomposition::parse(bricks)?;
    let lambda =
        BitMatrix::parse_text(&read_text(path)?).with_context(|| format!("parsing {}", path.display()))?;
    let properness = is_proper(&lambda, &d)?;
    let payload = LayerCheck {
        n: lambda.n(),
        bricks: d.display(),
        proper: properness.proper,
        invariant_bricks: properness.invariant_bricks,
        digraph: brick_digraph(&lambda, &d)?,
    };
    Ok(AnalysisReport::new("layer check", vec![digest], payload))
}

impl Summary for LayerCheck {
    fn summary(&self) -> String {
        match &self.invariant_bricks {
            None => format!("bricks {}: proper", self.bricks),
            Some(w) => format!("bricks {}: not proper, invariant bricks {w:?}", self.bricks),
        }
    }
}

/// Digests of a cipher file and of every file it refers to.
fn cipher_inputs(path: &Path) -> Result<Vec<InputDigest>> {
    let file = CipherFile::parse(&read_text(path)?).with_context(|| format!("parsing {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut inputs = vec![InputDigest::of_file(path)?];
    for p in file.referenced_paths() {
        inputs.push(InputDigest::of_file(&base.join(p))?);
    }
    Ok(inputs)
}

pub fn cipher_certify(path: &Path) -> Result<AnalysisReport<Certificate>> {
    let inputs = cipher_inputs(path)?;
    let spec = load_cipher(path).with_context(|| format!("loading {}", path.display()))?;
    Ok(AnalysisReport::new("cipher certify", inputs, certify(&spec)?))
}

impl Summary for Certificate {
    fn summary(&self) -> String {
        match (self.verdict, self.round, self.r) {
            (Verdict::Primitive, Some(h), Some(r)) => format!("primitive (round {h}, r = {r})"),
            _ => "inconclusive".into(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    pub round: usize,
    pub scan: ScanResult,
}

pub fn group_oracle(path: &Path, round: usize, max_n: usize) -> Result<AnalysisReport<OracleReport>> {
    if max_n > MAX_POINTS_LOG2 {
        bail!("capacity error: --max-n {max_n} exceeds {MAX_POINTS_LOG2}");
    }
    let inputs = cipher_inputs(path)?;
    let spec = load_cipher(path).with_context(|| format!("loading {}", path.display()))?;
    if spec.n() > max_n {
        bail!("capacity error: n = {} exceeds --max-n {max_n}", spec.n());
    }
    let scan = primitivity_scan(&GeneratorSet::from_round(&spec, round)?)?;
    Ok(AnalysisReport::new("group oracle", inputs, OracleReport { round, scan }))
}

impl Summary for OracleReport {
    fn summary(&self) -> String {
        if self.scan.primitive {
            format!("round {}: primitive", self.round)
        } else {
            let smallest = self.scan.systems.iter().map(|s| s.block_size).min().unwrap_or(0);
            format!(
                "round {}: imprimitive, {} block systems, smallest block size {smallest}",
                self.round,
                self.scan.systems.len()
            )
        }
    }
}

pub fn verify_subfield(m: usize, modulus: u32) -> Result<AnalysisReport<SubfieldVerdict>> {
    Ok(AnalysisReport::new(
        "verify subfield-theorem",
        Vec::new(),
        verify_subfield_theorem(m, modulus)?,
    ))
}

impl Summary for SubfieldVerdict {
    fn summary(&self) -> String {
        format!(
            "m={}: {} inverse-closed subgroups among {} subspaces, theorem {}",
            self.m,
            self.inverse_closed.len(),
            self.subspaces_scanned,
            if self.holds { "holds" } else { "FAILS" }
        )
    }
}

#[derive(Clone, Debug)]
pub enum InvolutionSource<'a> {
    File(&'a Path),
    Random {
        m: usize,
        count: usize,
        seed: u64,
        fixed_ratio: f64,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct InvolutionLemmaRun {
    pub m: usize,
    /// Recorded for random runs, so the samples can be regenerated.
    pub seed: Option<u64>,
    pub fixed_ratio: Option<f64>,
    pub samples: Vec<InvolutionLemmaVerdict>,
    pub qualifying_cases: usize,
    pub violations: usize,
}

pub fn verify_involution_lemma(source: InvolutionSource<'_>) -> Result<AnalysisReport<InvolutionLemmaRun>> {
    let (inputs, sboxes, seed, ratio) = match source {
        InvolutionSource::File(path) => {
            let digest = InputDigest::of_file(path)?;
            let f = Vbf::parse_sbox(&read_text(path)?)
                .with_context(|| format!("parsing {}", path.display()))?;
            (vec![digest], vec![f], None, None)
        }
        InvolutionSource::Random {
            m,
            count,
            seed,
            fixed_ratio,
        } => {
            if !(0.0..=1.0).contains(&fixed_ratio) {
                bail!("input error: --fixed-ratio must lie in [0, 1]");
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sboxes = (0..count)
                .map(|_| Vbf::random_involution(m, fixed_ratio, &mut rng))
                .collect::<tbprim::Result<Vec<_>>>()?;
            (Vec::new(), sboxes, Some(seed), Some(fixed_ratio))
        }
    };
    let m = sboxes.first().map(Vbf::m).unwrap_or(0);
    let samples = sboxes
        .iter()
        .map(check_involution_lemma)
        .collect::<tbprim::Result<Vec<_>>>()?;
    let qualifying_cases = samples.iter().map(|s| s.cases.len()).sum();
    let violations = samples
        .iter()
        .flat_map(|s| &s.cases)
        .filter(|c| !c.satisfied)
        .count();
    let payload = InvolutionLemmaRun {
        m,
        seed,
        fixed_ratio: ratio,
        samples,
        qualifying_cases,
        violations,
    };
    Ok(AnalysisReport::new("verify involution-lemma", inputs, payload))
}

impl Summary for InvolutionLemmaRun {
    fn summary(&self) -> String {
        format!(
            "{} involutions, {} qualifying cases, {} violations",
            self.samples.len(),
            self.qualifying_cases,
            self.violations
        )
    }
}
