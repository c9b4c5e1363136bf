//! Properness of linear layers with respect to a brick decomposition.
//!
//! For an invertible `λ`, the brick sum `⊕_{i∈I} V_i` is invariant exactly
//! when `I` is closed under the edges `i → j` of the brick digraph
//! (`π_j(V_i·λ) ≠ 0`): closure gives `λ(U) ⊆ U`, and equal dimensions turn
//! that into `λ(U) = U`. So `λ` is proper iff the digraph is strongly
//! connected, and any sink component of a disconnected digraph is an
//! invariant brick set.

use serde::Serialize;

use crate::error::{capacity, input, Result};
use crate::gf2::{BitMatrix, BrickDecomposition};

/// Largest brick count accepted by [`is_proper_naive`].
pub const NAIVE_MAX_BRICKS: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BrickDigraph {
    pub s: usize,
    /// `adjacency[i]`: bricks `j` (ascending) with `π_j(V_i·λ) ≠ 0`.
    pub adjacency: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Properness {
    pub proper: bool,
    /// A nonempty proper brick set whose sum is invariant, when not proper.
    pub invariant_bricks: Option<Vec<usize>>,
}

fn check_layer(lambda: &BitMatrix, d: &BrickDecomposition) -> Result<()> {
    if lambda.n() != d.n() {
        return input(format!(
            "layer of dimension {} does not match {} bricks of width {}",
            lambda.n(),
            d.s(),
            d.m()
        ));
    }
    if !lambda.is_invertible() {
        return input("mixing layer is singular");
    }
    Ok(())
}

pub fn brick_digraph(lambda: &BitMatrix, d: &BrickDecomposition) -> Result<BrickDigraph> {
    check_layer(lambda, d)?;
    let adjacency = (0..d.s())
        .map(|i| {
            let image = (0..d.m()).fold(0u128, |acc, j| acc | lambda.rows()[i * d.m() + j]);
            (0..d.s())
                .filter(|&t| image & d.brick_mask(t) != 0)
                .collect()
        })
        .collect();
    Ok(BrickDigraph {
        s: d.s(),
        adjacency,
    })
}

impl BrickDigraph {
    /// Strongly connected components in reverse topological order (sinks
    /// first), by Tarjan's algorithm with an explicit stack.
    pub fn components(&self) -> Vec<Vec<usize>> {
        const UNSEEN: usize = usize::MAX;
        let n = self.s;
        let mut index = vec![UNSEEN; n];
        let mut low = vec![0; n];
        let mut on_stack = vec![false; n];
        let mut stack = Vec::new();
        let mut comps = Vec::new();
        let mut counter = 0;

        for root in 0..n {
            if index[root] != UNSEEN {
                continue;
            }
            let mut call: Vec<(usize, usize)> = vec![(root, 0)];
            index[root] = counter;
            low[root] = counter;
            counter += 1;
            stack.push(root);
            on_stack[root] = true;

            while let Some(&mut (v, ref mut next)) = call.last_mut() {
                if let Some(&w) = self.adjacency[v].get(*next) {
                    *next += 1;
                    if index[w] == UNSEEN {
                        index[w] = counter;
                        low[w] = counter;
                        counter += 1;
                        stack.push(w);
                        on_stack[w] = true;
                        call.push((w, 0));
                    } else if on_stack[w] {
                        low[v] = low[v].min(index[w]);
                    }
                    continue;
                }
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    comps.push(comp);
                }
            }
        }
        comps
    }

    pub fn is_closed(&self, set: &[usize]) -> bool {
        let mut member = vec![false; self.s];
        for &i in set {
            member[i] = true;
        }
        set.iter()
            .all(|&i| self.adjacency[i].iter().all(|&j| member[j]))
    }
}

/// Decides properness by strong connectivity of the brick digraph.
pub fn is_proper(lambda: &BitMatrix, d: &BrickDecomposition) -> Result<Properness> {
    let graph = brick_digraph(lambda, d)?;
    let comps = graph.components();
    if comps.len() == 1 {
        return Ok(Properness {
            proper: true,
            invariant_bricks: None,
        });
    }
    // Tarjan emits a sink component first.
    let sink = comps.into_iter().next().expect("at least one component");
    debug_assert!(graph.is_closed(&sink));
    Ok(Properness {
        proper: false,
        invariant_bricks: Some(sink),
    })
}

/// Direct transcription of the definition: tries every nonempty proper brick
/// set `I` and compares `λ(⊕_I V_i)` with `⊕_I V_i`.
pub fn is_proper_naive(lambda: &BitMatrix, d: &BrickDecomposition) -> Result<Properness> {
    if d.s() > NAIVE_MAX_BRICKS {
        return capacity(format!(
            "naive properness scan supports at most {NAIVE_MAX_BRICKS} bricks, got {}",
            d.s()
        ));
    }
    check_layer(lambda, d)?;
    for set in 1u32..(1 << d.s()) - 1 {
        let bricks: Vec<usize> = (0..d.s()).filter(|&i| (set >> i) & 1 == 1).collect();
        let u = d.brick_sum(&bricks)?;
        if u.image(lambda)? == u {
            return Ok(Properness {
                proper: false,
                invariant_bricks: Some(bricks),
            });
        }
    }
    Ok(Properness {
        proper: true,
        invariant_bricks: None,
    })
}
