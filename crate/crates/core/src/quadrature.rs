//! Adaptive cubature over axis-aligned boxes.
//!
//! Each cell is integrated with a tensor Gauss-Legendre 5-point rule; the
//! difference against the embedded 3-point rule serves as the error
//! estimate. The worst cell (by estimated error) is bisected along its
//! widest axis until the summed error meets the relative tolerance.
//! Cells containing or neighboring a listed singular point are split
//! unconditionally until they are small, the discrete counterpart of
//! keeping quadrature nodes away from a measure-zero singular set.

use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

const GL3_NODES: [f64; 3] = [-0.7745966692414834, 0.0, 0.7745966692414834];
const GL3_WEIGHTS: [f64; 3] = [
    0.5555555555555556,
    0.8888888888888888,
    0.5555555555555556,
];
const GL5_NODES: [f64; 5] = [
    -0.906179845938664,
    -0.5384693101056831,
    0.0,
    0.5384693101056831,
    0.906179845938664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.23692688505618908,
    0.47862867049936647,
    0.5688888888888889,
    0.47862867049936647,
    0.23692688505618908,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    /// Requested relative tolerance on the total integral.
    pub rel_tol: f64,
    /// Convergence floor for integrals that are genuinely zero.
    pub abs_floor: f64,
    /// Budget of integrand evaluations before giving up.
    pub max_evals: usize,
    /// Cells near a singular point are force-split until narrower than
    /// this fraction of the root region extent.
    pub min_width_frac: f64,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            rel_tol: 1e-8,
            abs_floor: 1e-300,
            max_evals: 20_000_000,
            min_width_frac: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOutcome {
    pub value: f64,
    pub error_estimate: f64,
    pub evals: usize,
}

struct Cell<const D: usize> {
    lo: [f64; D],
    hi: [f64; D],
    value: f64,
    err: f64,
    forced: bool,
}

impl<const D: usize> PartialEq for Cell<D> {
    fn eq(&self, other: &Self) -> bool {
        self.forced == other.forced && self.err == other.err
    }
}
impl<const D: usize> Eq for Cell<D> {}
impl<const D: usize> PartialOrd for Cell<D> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const D: usize> Ord for Cell<D> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.forced
            .cmp(&other.forced)
            .then(self.err.total_cmp(&other.err))
    }
}

/// Integrate `f` over a union of boxes.
pub fn integrate<const D: usize>(
    f: impl Fn(&[f64; D]) -> f64,
    regions: &[([f64; D], [f64; D])],
    singular: &[[f64; D]],
    opts: &QuadOptions,
) -> Result<QuadOutcome> {
    let mut evals = 0usize;
    let mut heap: BinaryHeap<Cell<D>> = BinaryHeap::new();
    let mut extent = [0.0f64; D];
    for (lo, hi) in regions {
        for a in 0..D {
            extent[a] = extent[a].max(hi[a] - lo[a]);
        }
    }
    let min_width: Vec<f64> = extent.iter().map(|e| e * opts.min_width_frac).collect();

    let mut total_value = 0.0;
    let mut total_err = 0.0;
    for (lo, hi) in regions {
        if (0..D).any(|a| hi[a] <= lo[a]) {
            continue;
        }
        let cell = eval_cell(&f, *lo, *hi, singular, &min_width, &mut evals);
        total_value += cell.value;
        total_err += cell.err;
        heap.push(cell);
    }

    loop {
        let tol = (opts.rel_tol * total_value.abs()).max(opts.abs_floor);
        let need_forced = heap.iter().any(|c| c.forced);
        if total_err <= tol && !need_forced {
            break;
        }
        let Some(cell) = heap.pop() else { break };
        if evals > opts.max_evals {
            return Err(Error::QuadratureNonConvergence {
                achieved: total_err / total_value.abs().max(f64::MIN_POSITIVE),
                requested: opts.rel_tol,
            });
        }
        total_value -= cell.value;
        total_err -= cell.err;
        // split along the widest axis relative to the root extent
        let mut axis = 0;
        let mut best = -1.0;
        for a in 0..D {
            let w = (cell.hi[a] - cell.lo[a]) / extent[a].max(f64::MIN_POSITIVE);
            if w > best {
                best = w;
                axis = a;
            }
        }
        let mid = 0.5 * (cell.lo[axis] + cell.hi[axis]);
        let mut lo2 = cell.lo;
        lo2[axis] = mid;
        let mut hi1 = cell.hi;
        hi1[axis] = mid;
        for (lo, hi) in [(cell.lo, hi1), (lo2, cell.hi)] {
            let child = eval_cell(&f, lo, hi, singular, &min_width, &mut evals);
            total_value += child.value;
            total_err += child.err;
            heap.push(child);
        }
    }

    Ok(QuadOutcome {
        value: total_value,
        error_estimate: total_err,
        evals,
    })
}

fn eval_cell<const D: usize>(
    f: &impl Fn(&[f64; D]) -> f64,
    lo: [f64; D],
    hi: [f64; D],
    singular: &[[f64; D]],
    min_width: &[f64],
    evals: &mut usize,
) -> Cell<D> {
    let mut half = [0.0f64; D];
    let mut mid = [0.0f64; D];
    let mut volume = 1.0;
    for a in 0..D {
        half[a] = 0.5 * (hi[a] - lo[a]);
        mid[a] = 0.5 * (hi[a] + lo[a]);
        volume *= half[a];
    }

    let v5 = tensor_rule(f, &mid, &half, &GL5_NODES, &GL5_WEIGHTS, evals) * volume;
    let v3 = tensor_rule(f, &mid, &half, &GL3_NODES, &GL3_WEIGHTS, evals) * volume;
    let err = (v5 - v3).abs();

    // force refinement when a singular point touches this cell or its
    // immediate neighborhood and the cell is still wide
    let mut forced = false;
    for p in singular {
        let near = (0..D).all(|a| {
            let w = hi[a] - lo[a];
            p[a] >= lo[a] - w && p[a] <= hi[a] + w
        });
        if near && (0..D).any(|a| hi[a] - lo[a] > min_width[a]) {
            forced = true;
            break;
        }
    }

    Cell {
        lo,
        hi,
        value: v5,
        err,
        forced,
    }
}

fn tensor_rule<const D: usize>(
    f: &impl Fn(&[f64; D]) -> f64,
    mid: &[f64; D],
    half: &[f64; D],
    nodes: &[f64],
    weights: &[f64],
    evals: &mut usize,
) -> f64 {
    let k = nodes.len();
    let points = k.pow(D as u32);
    let mut sum = 0.0;
    let mut x = [0.0f64; D];
    for flat in 0..points {
        let mut rest = flat;
        let mut w = 1.0;
        for a in 0..D {
            let i = rest % k;
            rest /= k;
            x[a] = mid[a] + half[a] * nodes[i];
            w *= weights[i];
        }
        sum += w * f(&x);
    }
    *evals += points;
    sum
}
