use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tbprim::mixing::{brick_digraph, is_proper, is_proper_naive};
use tbprim::{BitMatrix, BrickDecomposition};

fn random_invertible(n: usize, rng: &mut impl Rng) -> BitMatrix {
    let mask = (1u128 << n) - 1;
    loop {
        let rows = (0..n).map(|_| rng.gen::<u128>() & mask).collect();
        let m = BitMatrix::from_bit_rows(n, rows).unwrap();
        if m.is_invertible() {
            return m;
        }
    }
}

/// Block-diagonal invertible matrix: one random block per brick, so every
/// brick sum is invariant.
fn random_brickwise(d: &BrickDecomposition, rng: &mut impl Rng) -> BitMatrix {
    let mut rows = Vec::with_capacity(d.n());
    for i in 0..d.s() {
        let block = random_invertible(d.m(), rng);
        rows.extend(block.rows().iter().map(|&r| d.embed(r, i)));
    }
    BitMatrix::from_bit_rows(d.n(), rows).unwrap()
}

/// The matrix of `v ↦ v` with bricks relabelled by `perm` (brick `i` moves to
/// brick `perm[i]`).
fn brick_permutation(d: &BrickDecomposition, perm: &[usize]) -> BitMatrix {
    BitMatrix::from_linear_fn(d.n(), |v| {
        (0..d.s()).fold(0, |acc, i| acc | d.embed(d.project(v, i), perm[i]))
    })
    .unwrap()
}

fn check_agreement(lambda: &BitMatrix, d: &BrickDecomposition) {
    let fast = is_proper(lambda, d).unwrap();
    let slow = is_proper_naive(lambda, d).unwrap();
    assert_eq!(fast.proper, slow.proper);
    if let Some(set) = &fast.invariant_bricks {
        let u = d.brick_sum(set).unwrap();
        assert_eq!(u.image(lambda).unwrap(), u);
        assert!(!set.is_empty() && set.len() < d.s());
    }
}

#[test]
fn fast_and_naive_agree_on_random_layers() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let shapes = [(2, 2), (2, 3), (2, 4), (3, 2), (3, 3), (2, 1), (3, 1)];
    for sample in 0..200 {
        let (s, m) = shapes[sample % shapes.len()];
        let d = BrickDecomposition::new(s, m).unwrap();
        let lambda = if sample % 4 == 0 {
            random_brickwise(&d, &mut rng)
        } else {
            random_invertible(d.n(), &mut rng)
        };
        check_agreement(&lambda, &d);
    }
}

#[test]
fn rotations_and_identities() {
    for (s, m) in [(2, 4), (3, 3), (4, 2), (8, 1)] {
        let d = BrickDecomposition::new(s, m).unwrap();
        let perm: Vec<usize> = (0..s).map(|i| (i + 1) % s).collect();
        let rot = brick_permutation(&d, &perm);
        assert!(is_proper(&rot, &d).unwrap().proper);
        check_agreement(&rot, &d);
        check_agreement(&BitMatrix::identity(d.n()).unwrap(), &d);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn properness_survives_brick_relabelling(
        s in 2usize..=4,
        m in 1usize..=3,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = BrickDecomposition::new(s, m).unwrap();
        let lambda = if seed % 3 == 0 {
            random_brickwise(&d, &mut rng)
        } else {
            random_invertible(d.n(), &mut rng)
        };
        let mut perm: Vec<usize> = (0..s).collect();
        for i in (1..s).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        let p = brick_permutation(&d, &perm);
        let p_inv = p.inverse().unwrap();
        let conjugate = p_inv.then(&lambda).unwrap().then(&p).unwrap();
        let a = is_proper(&lambda, &d).unwrap();
        let b = is_proper(&conjugate, &d).unwrap();
        prop_assert_eq!(a.proper, b.proper);
        let g = brick_digraph(&lambda, &d).unwrap();
        for comp in g.components() {
            prop_assert!(!comp.is_empty());
        }
        if let Some(set) = &a.invariant_bricks {
            prop_assert!(g.is_closed(set));
        }
    }
}
