//! Reproducible fixture data: the AES inversion S-box and linear layer, the
//! SERPENT linear transformation, and small toy ciphers for the oracle.
//!
//! Bit conventions. An AES state is 16 bytes in column-major order (byte
//! `r + 4c` sits in row `r`, column `c`); coordinate `8i + j` is bit `j` of
//! byte `i`. A SERPENT state is four 32-bit words `X0..X3`; coordinate
//! `4j + k` is bit `j` of word `Xk`, so brick `j` collects bit `j` of every
//! word, as in the bitsliced S-box layer.

use std::fs;
use std::path::{Path, PathBuf};

use tbprim::cipher::{CipherFile, RoundFile, SboxRefs};
use tbprim::field::BinaryField;
use tbprim::vbf::make_coset_respecting_sbox;
use tbprim::{BitMatrix, Result, Subspace, Vbf, Vec2};

/// Seed of the trapdoor toy S-boxes shipped in `fixtures/`.
pub const TOY_TRAPDOOR_SEED: u64 = 20_240_917;

/// SERPENT S-boxes S0..S7, as published with the cipher.
pub const SERPENT_SBOXES: [[u16; 16]; 8] = [
    [3, 8, 15, 1, 10, 6, 5, 11, 14, 13, 4, 2, 7, 0, 9, 12],
    [15, 12, 2, 7, 9, 0, 5, 10, 1, 11, 14, 8, 6, 13, 3, 4],
    [8, 6, 7, 9, 3, 12, 10, 15, 13, 1, 14, 4, 0, 11, 5, 2],
    [0, 15, 11, 8, 12, 9, 6, 3, 13, 1, 2, 4, 10, 7, 5, 14],
    [1, 15, 8, 3, 12, 0, 11, 6, 2, 5, 4, 10, 9, 14, 7, 13],
    [15, 5, 2, 11, 4, 10, 9, 12, 0, 3, 14, 8, 13, 6, 7, 1],
    [7, 2, 12, 5, 8, 4, 6, 11, 14, 9, 1, 15, 13, 3, 10, 0],
    [1, 13, 15, 0, 14, 8, 2, 11, 7, 4, 12, 10, 9, 3, 5, 6],
];

/// Patched inversion `x ↦ x^254` over GF(2⁸) modulo `x⁸ + x⁴ + x³ + x + 1`.
pub fn aes_inverse_sbox() -> Vbf {
    BinaryField::aes().inversion_sbox()
}

fn state_bytes(v: u128) -> [u8; 16] {
    v.to_le_bytes()
}

fn from_state_bytes(b: [u8; 16]) -> u128 {
    u128::from_le_bytes(b)
}

fn xtime(b: u8) -> u8 {
    (b << 1) ^ if b & 0x80 != 0 { 0x1b } else { 0 }
}

/// Row `r` rotated left by `r` positions.
pub fn shift_rows(v: u128) -> u128 {
    let a = state_bytes(v);
    let mut out = [0u8; 16];
    for r in 0..4 {
        for c in 0..4 {
            out[r + 4 * c] = a[r + 4 * ((c + r) % 4)];
        }
    }
    from_state_bytes(out)
}

/// Each column multiplied by the circulant `(02 03 01 01)`.
pub fn mix_columns(v: u128) -> u128 {
    let a = state_bytes(v);
    let mut out = [0u8; 16];
    for c in 0..4 {
        let col = &a[4 * c..4 * c + 4];
        for r in 0..4 {
            let (x0, x1, x2, x3) = (col[r], col[(r + 1) % 4], col[(r + 2) % 4], col[(r + 3) % 4]);
            out[r + 4 * c] = xtime(x0) ^ xtime(x1) ^ x1 ^ x2 ^ x3;
        }
    }
    from_state_bytes(out)
}

pub fn aes_shift_rows_matrix() -> BitMatrix {
    BitMatrix::from_linear_fn(128, shift_rows).expect("128 is a valid width")
}

/// ShiftRows followed by MixColumns.
pub fn aes_layer_matrix() -> BitMatrix {
    BitMatrix::from_linear_fn(128, |v| mix_columns(shift_rows(v))).expect("128 is a valid width")
}

fn serpent_words(v: u128) -> [u32; 4] {
    let mut x = [0u32; 4];
    for j in 0..32 {
        for (k, word) in x.iter_mut().enumerate() {
            *word |= (((v >> (4 * j + k)) & 1) as u32) << j;
        }
    }
    x
}

fn from_serpent_words(x: [u32; 4]) -> u128 {
    let mut v = 0u128;
    for j in 0..32 {
        for (k, word) in x.iter().enumerate() {
            v |= (((word >> j) & 1) as u128) << (4 * j + k);
        }
    }
    v
}

/// The SERPENT linear transformation on the bitsliced words.
pub fn serpent_lt(v: u128) -> u128 {
    let [mut x0, mut x1, mut x2, mut x3] = serpent_words(v);
    x0 = x0.rotate_left(13);
    x2 = x2.rotate_left(3);
    x1 ^= x0 ^ x2;
    x3 ^= x2 ^ (x0 << 3);
    x1 = x1.rotate_left(1);
    x3 = x3.rotate_left(7);
    x0 ^= x1 ^ x3;
    x2 ^= x3 ^ (x1 << 7);
    x0 = x0.rotate_left(5);
    x2 = x2.rotate_left(22);
    from_serpent_words([x0, x1, x2, x3])
}

pub fn serpent_lt_matrix() -> BitMatrix {
    BitMatrix::from_linear_fn(128, serpent_lt).expect("128 is a valid width")
}

pub fn serpent_sbox(i: usize) -> Vbf {
    Vbf::from_table(4, SERPENT_SBOXES[i].to_vec()).expect("published S-boxes are 4-bit tables")
}

/// `(x, y) ↦ (y, x + y)` on two 4-bit bricks.
pub fn toy_layer() -> BitMatrix {
    BitMatrix::from_linear_fn(8, |v| {
        let (x, y) = (v & 0xf, v >> 4);
        y | ((x ^ y) << 4)
    })
    .expect("8 is a valid width")
}

/// Inversion in GF(2⁴) modulo `x⁴ + x + 1`.
pub fn toy_inverse_sbox() -> Vbf {
    BinaryField::new(4, 0b10011)
        .expect("x^4 + x + 1 is irreducible")
        .inversion_sbox()
}

/// `span{0001, 0010}` inside one 4-bit brick.
pub fn toy_planted_subspace() -> Subspace {
    let gens = [Vec2::new(0b0001, 4), Vec2::new(0b0010, 4)].map(|v| v.expect("4-bit vector"));
    Subspace::span(&gens, 4).expect("4-bit subspace")
}

/// The planted subspace in both bricks: a block of the trapdoor round.
pub fn toy_planted_block() -> Subspace {
    let u = toy_planted_subspace();
    let gens: Vec<Vec2> = [0usize, 4]
        .iter()
        .flat_map(|&shift| u.rows().iter().map(move |&r| r << shift))
        .map(|r| Vec2::new(r, 8).expect("8-bit vector"))
        .collect();
    Subspace::span(&gens, 8).expect("8-bit subspace")
}

pub fn toy_trapdoor_sboxes(seed: u64) -> Result<[Vbf; 2]> {
    let u = toy_planted_subspace();
    Ok([
        make_coset_respecting_sbox(&u, seed)?,
        make_coset_respecting_sbox(&u, seed.wrapping_add(1))?,
    ])
}

/// A generated file, relative to the fixture directory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixtureFile {
    pub path: String,
    pub contents: String,
}

fn sbox_file(path: &str, sbox: &Vbf, comment: &str) -> FixtureFile {
    let text = sbox.to_sbox_text();
    let (header, body) = text.split_once('\n').expect("header line");
    FixtureFile {
        path: path.into(),
        contents: format!("{header}\n# {comment}\n{body}"),
    }
}

fn matrix_file(path: &str, m: &BitMatrix) -> FixtureFile {
    FixtureFile {
        path: path.into(),
        contents: m.to_text(),
    }
}

fn cipher_file(path: &str, file: &CipherFile) -> Result<FixtureFile> {
    Ok(FixtureFile {
        path: path.into(),
        contents: file.to_json()?,
    })
}

fn round(sboxes: SboxRefs, layer: &str) -> RoundFile {
    RoundFile {
        sboxes,
        layer: layer.into(),
        offset: None,
    }
}

fn shared(path: &str) -> SboxRefs {
    SboxRefs::Shared(path.into())
}

/// Every generated fixture. The trapdoor S-boxes depend on `seed`.
pub fn generated_fixtures(seed: u64) -> Result<Vec<FixtureFile>> {
    let mut out = vec![
        sbox_file("aes-inverse.sbox", &aes_inverse_sbox(), "patched inverse over GF(2^8) mod 0x11b"),
        matrix_file("aes-layer.mat", &aes_layer_matrix()),
        matrix_file("aes-shiftrows.mat", &aes_shift_rows_matrix()),
        cipher_file(
            "aes.json",
            &CipherFile {
                n: 128,
                m: 8,
                s: 16,
                rounds: vec![
                    round(shared("aes-inverse.sbox"), "aes-layer.mat"),
                    round(shared("aes-inverse.sbox"), "aes-shiftrows.mat"),
                ],
            },
        )?,
        sbox_file("identity4.sbox", &Vbf::identity(4)?, "identity on 4 bits"),
        matrix_file("identity8.mat", &BitMatrix::identity(8)?),
        sbox_file("toy-inverse.sbox", &toy_inverse_sbox(), "patched inverse over GF(2^4) mod 0x13"),
        matrix_file("toy-layer.mat", &toy_layer()),
        cipher_file(
            "toy-good.json",
            &CipherFile {
                n: 8,
                m: 4,
                s: 2,
                rounds: vec![round(shared("toy-inverse.sbox"), "toy-layer.mat")],
            },
        )?,
        cipher_file(
            "translations-only.json",
            &CipherFile {
                n: 8,
                m: 4,
                s: 2,
                rounds: vec![round(shared("identity4.sbox"), "identity")],
            },
        )?,
    ];
    let [t0, t1] = toy_trapdoor_sboxes(seed)?;
    out.push(sbox_file(
        "toy-trapdoor-0.sbox",
        &t0,
        &format!("coset-respecting for span{{1, 2}}, seed={seed}"),
    ));
    out.push(sbox_file(
        "toy-trapdoor-1.sbox",
        &t1,
        &format!("coset-respecting for span{{1, 2}}, seed={}", seed.wrapping_add(1)),
    ));
    out.push(cipher_file(
        "toy-trapdoor.json",
        &CipherFile {
            n: 8,
            m: 4,
            s: 2,
            rounds: vec![round(
                SboxRefs::PerBrick(vec!["toy-trapdoor-0.sbox".into(), "toy-trapdoor-1.sbox".into()]),
                "toy-layer.mat",
            )],
        },
    )?);
    Ok(out)
}

/// The SERPENT tables in the vendored layout under `serpent/`.
pub fn serpent_fixtures() -> Result<Vec<FixtureFile>> {
    let mut out: Vec<FixtureFile> = (0..8)
        .map(|i| sbox_file(&format!("serpent/S{i}.sbox"), &serpent_sbox(i), &format!("SERPENT S{i}")))
        .collect();
    out.push(matrix_file("serpent/lt.mat", &serpent_lt_matrix()));
    let mut rounds: Vec<RoundFile> = (0..8)
        .map(|i| round(shared(&format!("S{i}.sbox")), "lt.mat"))
        .collect();
    // The last cipher round replaces the transformation by a key addition.
    rounds.push(round(shared("S7.sbox"), "identity"));
    out.push(cipher_file(
        "serpent/serpent.json",
        &CipherFile {
            n: 128,
            m: 4,
            s: 32,
            rounds,
        },
    )?);
    Ok(out)
}

/// Writes the generated fixtures under `dir`, creating subdirectories.
pub fn write_fixtures(dir: &Path, seed: u64, with_serpent: bool) -> Result<Vec<PathBuf>> {
    let mut files = generated_fixtures(seed)?;
    if with_serpent {
        files.extend(serpent_fixtures()?);
    }
    let mut written = Vec::with_capacity(files.len());
    for f in files {
        let path = dir.join(&f.path);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, f.contents)?;
        written.push(path);
    }
    Ok(written)
}

/// Directory of the fixtures committed with this crate.
pub fn bundled_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}
