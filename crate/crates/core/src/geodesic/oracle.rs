use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::bounds::Bounds;
use crate::error::{Error, Result};
use crate::homogenize::Landscape;
use crate::math;
use crate::potential::advance;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOptions {
    pub bounds: Bounds,
    pub per_axis: usize,
    /// Neighbors are all lattice offsets with Chebyshev norm up to this order.
    pub order: usize,
}

#[derive(PartialEq)]
struct Entry {
    cost: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    // reversed so the max-heap pops the cheapest, then the smallest index
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest path between the (snapped) wells on a lattice graph with edge
/// weights `2√W(edge midpoint)·|edge|`. An upper bound for `K_H` up to snapping.
pub fn dijkstra_oracle<L: Landscape>(
    land: &L,
    a: &[f64],
    b: &[f64],
    opts: &OracleOptions,
) -> Result<f64> {
    let d = land.state_dim();
    if d > 3 {
        return Err(Error::OracleDimension(d));
    }
    if opts.bounds.dim() != d || a.len() != d || b.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: opts.bounds.dim(),
        });
    }
    if !opts.bounds.contains(a) || !opts.bounds.contains(b) {
        return Err(Error::invalid("bounds", "box must contain both wells"));
    }
    if opts.per_axis < 2 || opts.order == 0 {
        return Err(Error::invalid("oracle", "need two nodes per axis and order >= 1"));
    }
    let n = opts.per_axis;
    let step: Vec<f64> = (0..d).map(|k| opts.bounds.side(k) / (n - 1) as f64).collect();
    let coord = |k: usize, i: usize| opts.bounds.lo()[k] + step[k] * i as f64;

    let snap = |p: &[f64]| -> usize {
        let mut flat = 0;
        for k in 0..d {
            let u = (p[k] - opts.bounds.lo()[k]) / step[k];
            let i = (libm::round(u).max(0.0) as usize).min(n - 1);
            flat = flat * n + i;
        }
        flat
    };
    let source = snap(a);
    let target = snap(b);
    if source == target {
        return Ok(0.0);
    }

    // neighbor offsets in {-order..order}^d without the zero offset
    let width = 2 * opts.order + 1;
    let mut offsets: Vec<Vec<isize>> = Vec::new();
    let mut idx = vec![0usize; d];
    loop {
        let off: Vec<isize> = idx.iter().map(|&i| i as isize - opts.order as isize).collect();
        if off.iter().any(|&o| o != 0) {
            offsets.push(off);
        }
        if !advance(&mut idx, width) {
            break;
        }
    }

    let total = n.pow(d as u32);
    let mut dist = vec![f64::INFINITY; total];
    let mut done = vec![false; total];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Entry {
        cost: 0.0,
        node: source,
    });

    let mut here = vec![0usize; d];
    let mut mid = vec![0.0; d];
    let mut delta = vec![0.0; d];
    while let Some(Entry { cost, node }) = heap.pop() {
        if done[node] {
            continue;
        }
        done[node] = true;
        if node == target {
            return Ok(cost);
        }
        let mut rest = node;
        for k in (0..d).rev() {
            here[k] = rest % n;
            rest /= n;
        }
        'offsets: for off in &offsets {
            let mut flat = 0usize;
            for k in 0..d {
                let j = here[k] as isize + off[k];
                if j < 0 || j >= n as isize {
                    continue 'offsets;
                }
                let j = j as usize;
                flat = flat * n + j;
                mid[k] = 0.5 * (coord(k, here[k]) + coord(k, j));
                delta[k] = step[k] * off[k] as f64;
            }
            if done[flat] {
                continue;
            }
            let w = 2.0 * math::sqrt(land.value(&mid).max(0.0)) * math::norm(&delta);
            let next = cost + w;
            if next < dist[flat] {
                dist[flat] = next;
                heap.push(Entry {
                    cost: next,
                    node: flat,
                });
            }
        }
    }
    Ok(dist[target])
}
