//! Minimal GF(2^m) arithmetic in a polynomial basis, for building inversion
//! S-boxes and for the subfield check. Bit `j` of an element is the
//! coefficient of `x^j`.

use crate::error::{input, Result};
use crate::vbf::Vbf;

/// GF(2^m) modulo an irreducible polynomial given as a bit pattern including
/// the leading term, e.g. `0x11b` for x⁸+x⁴+x³+x+1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BinaryField {
    m: usize,
    modulus: u32,
}

pub const AES_MODULUS: u32 = 0x11b;

fn degree(p: u32) -> Option<usize> {
    (p != 0).then(|| 31 - p.leading_zeros() as usize)
}

/// Remainder of polynomial division over F₂.
fn poly_rem(mut a: u32, b: u32) -> u32 {
    let db = degree(b).expect("division by zero polynomial");
    while let Some(da) = degree(a) {
        if da < db {
            break;
        }
        a ^= b << (da - db);
    }
    a
}

/// Irreducibility by trial division by every polynomial of degree ≤ deg/2.
pub fn is_irreducible(p: u32) -> bool {
    let Some(d) = degree(p) else { return false };
    if d == 0 {
        return false;
    }
    (2u32..(1 << (d / 2 + 1))).all(|q| poly_rem(p, q) != 0)
}

impl BinaryField {
    pub fn new(m: usize, modulus: u32) -> Result<Self> {
        if !(1..=16).contains(&m) {
            return input(format!("field degree {m} outside 1..=16"));
        }
        if degree(modulus) != Some(m) {
            return input(format!("modulus {modulus:#x} does not have degree {m}"));
        }
        if !is_irreducible(modulus) {
            return input(format!("modulus {modulus:#x} is reducible"));
        }
        Ok(BinaryField { m, modulus })
    }

    pub fn aes() -> Self {
        BinaryField {
            m: 8,
            modulus: AES_MODULUS,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn order(&self) -> u32 {
        1 << self.m
    }

    pub fn mul(&self, mut a: u32, mut b: u32) -> u32 {
        let mut acc = 0;
        while b != 0 {
            if b & 1 == 1 {
                acc ^= a;
            }
            b >>= 1;
            a <<= 1;
            if (a >> self.m) & 1 == 1 {
                a ^= self.modulus;
            }
        }
        acc
    }

    pub fn pow(&self, mut a: u32, mut e: u64) -> u32 {
        let mut acc = 1;
        while e != 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        acc
    }

    /// Patched inverse: `x^(2^m − 2)`, so 0 maps to 0.
    pub fn inv(&self, a: u32) -> u32 {
        self.pow(a, (1u64 << self.m) - 2)
    }

    /// The patched inverse as a lookup-table S-box.
    pub fn inversion_sbox(&self) -> Vbf {
        let table = (0..self.order()).map(|x| self.inv(x) as u16).collect();
        Vbf::from_table(self.m, table).expect("inversion table is well formed")
    }

    /// Elements of the subfield GF(2^d): the roots of `x^(2^d) = x`.
    pub fn subfield_elements(&self, d: usize) -> Vec<u32> {
        (0..self.order())
            .filter(|&x| self.pow(x, 1u64 << d) == x)
            .collect()
    }
}
