//! Periodic convolution engine: the ball-average operator A_t, its
//! binomial iterates, and the fractional Laplacian multiplier.
//!
//! Convolutions go through the FFT with a real symmetric symbol. The mean
//! is split off before transforming and added back afterwards, so
//! constants are fixed points of every averaging operator exactly, not
//! just to rounding.

use crate::error::{Error, Result};
use crate::fft;
use crate::field::{Field, GridSpec};
use crate::kernels::{ball_fourier_symbol, binomial_coefficients, KernelKind, KernelSpec};
use crate::sum::pairwise_sum;
use serde::{Deserialize, Serialize};

/// How the ball symbol is normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Sampled indicator rescaled to exact unit mass (default; constants
    /// are preserved exactly and the symbol at DC is exactly 1).
    Discrete,
    /// Continuum Bessel symbol of the ball, kept as a cross-check mode.
    Analytic,
}

/// Fourier symbol of the radius-t ball average on a fixed grid.
#[derive(Debug, Clone)]
pub struct BallSymbolTable {
    grid: GridSpec,
    scale: f64,
    mode: Normalization,
    symbol: Vec<f64>,
}

impl BallSymbolTable {
    pub fn new(grid: GridSpec, t: f64, mode: Normalization) -> Result<Self> {
        check_scale(&grid, t)?;
        let symbol = match mode {
            Normalization::Discrete => discrete_symbol(&grid, t),
            Normalization::Analytic => analytic_symbol(&grid, t)?,
        };
        Ok(BallSymbolTable {
            grid,
            scale: t,
            mode,
            symbol,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn mode(&self) -> Normalization {
        self.mode
    }

    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    /// Symbol value at a signed frequency multi-index.
    pub fn symbol_at(&self, k: &[i64]) -> f64 {
        let n = self.grid.samples_per_axis() as i64;
        let mut flat = 0usize;
        for &c in k {
            let wrapped = c.rem_euclid(n) as usize;
            flat = flat * n as usize + wrapped;
        }
        self.symbol[flat]
    }
}

/// Admissible scale range for a grid: [2h, L/2].
pub fn scale_bounds(grid: &GridSpec) -> (f64, f64) {
    (2.0 * grid.spacing(), grid.period() / 2.0)
}

fn check_scale(grid: &GridSpec, t: f64) -> Result<()> {
    let (lo, hi) = scale_bounds(grid);
    if !(t.is_finite() && t >= lo && t <= hi) {
        return Err(Error::ScaleOutOfRange { t, lo, hi });
    }
    Ok(())
}

/// Signed frequency index of a wrapped index: j -> j or j - N.
#[inline]
fn signed_index(j: usize, samples: usize) -> i64 {
    if j <= samples / 2 {
        j as i64
    } else {
        j as i64 - samples as i64
    }
}

fn discrete_symbol(grid: &GridSpec, t: f64) -> Vec<f64> {
    let n = grid.dimension();
    let samples = grid.samples_per_axis();
    let h = grid.spacing();
    let total = grid.total_samples();
    // center rule: a cell belongs to the ball if its center is within t
    let mut indicator = vec![0.0f64; total];
    let mut count = 0usize;
    let mut idx = vec![0usize; n];
    let t2 = t * t;
    for flat in 0..total {
        let mut r2 = 0.0;
        for &i in idx.iter() {
            let d = signed_index(i, samples) as f64 * h;
            r2 += d * d;
        }
        if r2 <= t2 {
            indicator[flat] = 1.0;
            count += 1;
        }
        advance(&mut idx, samples, flat, total);
    }
    let w = 1.0 / count as f64;
    for v in indicator.iter_mut() {
        *v *= w;
    }
    let spec = fft::forward_real(&indicator, &grid.shape());
    // the indicator is symmetric, so the symbol is real; the imaginary
    // parts are pure rounding noise
    let mut symbol: Vec<f64> = spec.iter().map(|c| c.re).collect();
    symbol[0] = 1.0; // unit mass at DC by definition
    symbol
}

fn analytic_symbol(grid: &GridSpec, t: f64) -> Result<Vec<f64>> {
    let n = grid.dimension();
    let samples = grid.samples_per_axis();
    let total = grid.total_samples();
    let l = grid.period();
    let mut symbol = vec![0.0f64; total];
    let mut idx = vec![0usize; n];
    for flat in 0..total {
        let mut k2 = 0.0f64;
        for &i in idx.iter() {
            let k = signed_index(i, samples) as f64;
            k2 += k * k;
        }
        let x = 2.0 * std::f64::consts::PI * t * k2.sqrt() / l;
        symbol[flat] = ball_fourier_symbol(n, x)?;
        advance(&mut idx, samples, flat, total);
    }
    Ok(symbol)
}

#[inline]
fn advance(idx: &mut [usize], samples: usize, flat: usize, total: usize) {
    if flat + 1 >= total {
        return;
    }
    let mut a = idx.len() - 1;
    loop {
        idx[a] += 1;
        if idx[a] < samples {
            break;
        }
        idx[a] = 0;
        if a == 0 {
            break;
        }
        a -= 1;
    }
}

/// Apply a real Fourier multiplier with mean splitting.
fn apply_symbol(f: &Field, symbol: &[f64]) -> Field {
    let grid = *f.grid();
    let shape = grid.shape();
    let mean = pairwise_sum(f.values()) / f.values().len() as f64;
    let centered: Vec<f64> = f.values().iter().map(|&v| v - mean).collect();
    let mut spec = fft::forward_real(&centered, &shape);
    for (c, &s) in spec.iter_mut().zip(symbol) {
        *c *= s;
    }
    let mut out = fft::inverse_to_real(spec, &shape);
    for v in out.iter_mut() {
        *v += mean;
    }
    Field::from_values(grid, out).expect("filtered field stays finite")
}

/// Ball average A_t f with a prebuilt symbol table.
pub fn ball_average_with(f: &Field, table: &BallSymbolTable) -> Result<Field> {
    if f.grid() != table.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(apply_symbol(f, table.symbol()))
}

/// Ball average A_t f in discrete normalization.
pub fn ball_average(f: &Field, t: f64) -> Result<Field> {
    let table = BallSymbolTable::new(*f.grid(), t, Normalization::Discrete)?;
    ball_average_with(f, &table)
}

/// Binomial smoothing K_t * f = sum_j c_j (A_t)^j f, applying the ball
/// average repeatedly. For k = 1 this is exactly A_t f.
pub fn binomial_smooth(f: &Field, t: f64, k: usize) -> Result<Field> {
    let table = BallSymbolTable::new(*f.grid(), t, Normalization::Discrete)?;
    binomial_smooth_with(f, &table, k)
}

pub fn binomial_smooth_with(f: &Field, table: &BallSymbolTable, k: usize) -> Result<Field> {
    let coeffs = binomial_coefficients(k)?;
    let grid = *f.grid();
    let limit = grid.period() / 2.0;
    let support = k as f64 * table.scale();
    if support > limit * (1.0 + 1e-12) {
        return Err(Error::SupportViolation { support, limit });
    }
    let mut iterate = ball_average_with(f, table)?;
    let mut acc: Vec<f64> = iterate.values().iter().map(|&v| coeffs[0] * v).collect();
    for &c in &coeffs[1..] {
        iterate = ball_average_with(&iterate, table)?;
        for (a, &v) in acc.iter_mut().zip(iterate.values()) {
            *a += c * v;
        }
    }
    Field::from_values(grid, acc)
}

/// Smooth with the kernel named by `spec` at scale t.
pub fn smooth_with_kernel(f: &Field, spec: &KernelSpec, table: &BallSymbolTable) -> Result<Field> {
    match spec.kind {
        KernelKind::BallIndicator => ball_average_with(f, table),
        KernelKind::Iterate { j } => {
            let grid = *f.grid();
            let limit = grid.period() / 2.0;
            let support = j as f64 * table.scale();
            if support > limit * (1.0 + 1e-12) {
                return Err(Error::SupportViolation { support, limit });
            }
            let mut out = ball_average_with(f, table)?;
            for _ in 1..j {
                out = ball_average_with(&out, table)?;
            }
            Ok(out)
        }
        KernelKind::Binomial { k } => binomial_smooth_with(f, table, k),
    }
}

/// Fractional Laplacian (-Delta)^{alpha/2}: the multiplier |2 pi xi|^alpha
/// on nonzero frequencies, with the DC component forced to zero.
pub fn fractional_laplacian(f: &Field, alpha: f64) -> Result<Field> {
    if !f.is_mean_zero() {
        return Err(Error::NotMeanZero);
    }
    let grid = *f.grid();
    let n = grid.dimension();
    if !(alpha > 0.0 && alpha < n as f64) {
        return Err(Error::AlphaRange {
            alpha,
            lo: 0.0,
            hi: n as f64,
        });
    }
    let samples = grid.samples_per_axis();
    let total = grid.total_samples();
    let l = grid.period();
    let shape = grid.shape();
    let mut spec = fft::forward_real(f.values(), &shape);
    let mut idx = vec![0usize; n];
    let two_pi = 2.0 * std::f64::consts::PI;
    for flat in 0..total {
        let mut k2 = 0.0f64;
        for &i in idx.iter() {
            let k = signed_index(i, samples) as f64;
            k2 += k * k;
        }
        if flat == 0 {
            spec[0] *= 0.0;
        } else {
            let mult = (two_pi * k2.sqrt() / l).powf(alpha);
            spec[flat] *= mult;
        }
        advance(&mut idx, samples, flat, total);
    }
    Field::from_values(grid, fft::inverse_to_real(spec, &shape))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{inner_product, lp_norm, make_field, translate};
    use std::f64::consts::PI;

    fn grid2(n: usize) -> GridSpec {
        GridSpec::new(2, n, 1.0).unwrap()
    }

    fn harmonic(grid: GridSpec, kx: usize, ky: usize) -> Field {
        make_field(grid, |x| (2.0 * PI * (kx as f64 * x[0] + ky as f64 * x[1])).cos()).unwrap()
    }

    /// Deterministic rough test field (hash noise).
    fn hash_noise(grid: GridSpec) -> Field {
        let mut state = 0x243F6A8885A308D3u64;
        let values: Vec<f64> = (0..grid.total_samples())
            .map(|_| {
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
            })
            .collect();
        Field::from_values(grid, values).unwrap()
    }

    #[test]
    fn scale_bounds_enforced() {
        let g = grid2(32);
        let f = make_field(g, |x| x[0]).unwrap();
        let h = g.spacing();
        assert!(ball_average(&f, 1.9 * h).is_err());
        assert!(ball_average(&f, 0.51).is_err());
        assert!(ball_average(&f, 2.0 * h).is_ok());
        assert!(ball_average(&f, 0.5).is_ok());
    }

    #[test]
    fn constants_are_fixed_exactly() {
        let g = grid2(32);
        let c = make_field(g, |_| 3.7).unwrap();
        let out = ball_average(&c, 0.2).unwrap();
        assert!(out.values().iter().all(|&v| v == 3.7));
        let out = binomial_smooth(&c, 0.1, 3).unwrap();
        assert!(out.values().iter().all(|&v| v == 3.7));
    }

    #[test]
    fn discrete_symbol_dc_is_one_and_bounded() {
        for t in [0.1, 0.27, 0.5] {
            let table = BallSymbolTable::new(grid2(32), t, Normalization::Discrete).unwrap();
            assert_eq!(table.symbol()[0], 1.0);
            assert!(table.symbol().iter().all(|&s| s.abs() <= 1.0 + 1e-12));
        }
    }

    #[test]
    fn harmonic_is_scaled_by_the_symbol() {
        let g = grid2(64);
        let f = harmonic(g, 3, 1);
        let t = 0.2;
        let table = BallSymbolTable::new(g, t, Normalization::Discrete).unwrap();
        let s = table.symbol_at(&[3, 1]);
        let out = ball_average_with(&f, &table).unwrap();
        for (o, v) in out.values().iter().zip(f.values()) {
            assert!((o - s * v).abs() < 1e-12);
        }
    }

    #[test]
    fn discrete_and_analytic_symbols_converge() {
        // staircase error shrinks roughly like h^2, with lattice
        // irregularity; two doublings must shrink the error noticeably
        let t = 0.2;
        let freqs: [[i64; 2]; 3] = [[1, 0], [2, 3], [5, 1]];
        let mut errs = vec![];
        for samples in [32usize, 64, 128] {
            let g = grid2(samples);
            let d = BallSymbolTable::new(g, t, Normalization::Discrete).unwrap();
            let a = BallSymbolTable::new(g, t, Normalization::Analytic).unwrap();
            let e: f64 = freqs
                .iter()
                .map(|k| (d.symbol_at(k) - a.symbol_at(k)).abs())
                .sum();
            errs.push(e);
        }
        assert!(
            errs[2] < errs[0] / 6.0,
            "no h^2-like decay: {errs:?}"
        );
        assert!(errs[2] < 2e-3, "absolute error too large: {errs:?}");
    }

    #[test]
    fn smallest_scale_contracts_noise_variance() {
        let g = grid2(32);
        let f = hash_noise(g);
        let t = 2.0 * g.spacing();
        let out = ball_average(&f, t).unwrap();
        let var = |x: &Field| {
            let m = x.mean();
            x.values().iter().map(|v| (v - m) * (v - m)).sum::<f64>()
        };
        assert!(var(&out) < var(&f));
    }

    #[test]
    fn ball_average_is_self_adjoint() {
        let g = grid2(32);
        let f = hash_noise(g);
        let gfield = harmonic(g, 2, 5);
        let t = 0.17;
        let af = ball_average(&f, t).unwrap();
        let ag = ball_average(&gfield, t).unwrap();
        let left = inner_product(&af, &gfield).unwrap();
        let right = inner_product(&f, &ag).unwrap();
        assert!((left - right).abs() <= 1e-12 * left.abs().max(right.abs()));
    }

    #[test]
    fn ball_average_commutes_with_translation() {
        let g = grid2(32);
        let f = hash_noise(g);
        let t = 0.2;
        let shift = [7usize, 13];
        let a = translate(&ball_average(&f, t).unwrap(), &shift).unwrap();
        let b = ball_average(&translate(&f, &shift).unwrap(), t).unwrap();
        let scale = f.max_abs();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn ball_average_is_an_l2_contraction() {
        let g = grid2(32);
        let f = hash_noise(g);
        for t in [0.07, 0.2, 0.5] {
            let out = ball_average(&f, t).unwrap();
            assert!(lp_norm(&out, 2.0).unwrap() <= lp_norm(&f, 2.0).unwrap() * (1.0 + 1e-13));
        }
    }

    #[test]
    fn binomial_smooth_matches_hand_rolled_k2() {
        let g = grid2(64);
        let f = hash_noise(g);
        let t = 0.1;
        let smooth = binomial_smooth(&f, t, 2).unwrap();
        let af = ball_average(&f, t).unwrap();
        let aaf = ball_average(&af, t).unwrap();
        let scale = f.max_abs();
        for ((s, a), aa) in smooth.values().iter().zip(af.values()).zip(aaf.values()) {
            assert!((s - (2.0 * a - aa)).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn binomial_smooth_k1_is_ball_average_bitwise() {
        let g = grid2(32);
        let f = hash_noise(g);
        let t = 0.2;
        let a = ball_average(&f, t).unwrap();
        let b = binomial_smooth(&f, t, 1).unwrap();
        assert!(a
            .values()
            .iter()
            .zip(b.values())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn binomial_smooth_preserves_mean() {
        let g = grid2(32);
        let f = hash_noise(g);
        for k in [1usize, 2, 3, 5] {
            let out = binomial_smooth(&f, 0.08, k).unwrap();
            assert!(
                (out.mean() - f.mean()).abs() <= 1e-12,
                "k = {k}: {} vs {}",
                out.mean(),
                f.mean()
            );
        }
    }

    #[test]
    fn binomial_support_violation_is_rejected() {
        let g = grid2(32);
        let f = hash_noise(g);
        // t admissible for a single average but k t wraps the torus
        let err = binomial_smooth(&f, 0.3, 2).unwrap_err();
        assert!(matches!(err, Error::SupportViolation { .. }));
    }

    #[test]
    fn fractional_laplacian_single_mode() {
        let g = grid2(32);
        let f = harmonic(g, 1, 0);
        let alpha = 1.5;
        let out = fractional_laplacian(&f, alpha).unwrap();
        let mult = (2.0 * PI).powf(alpha); // |2 pi xi|^alpha at xi = 1/L, L = 1
        for (o, v) in out.values().iter().zip(f.values()) {
            assert!((o - mult * v).abs() <= 1e-12 * mult);
        }
    }

    #[test]
    fn fractional_laplacian_requires_mean_zero() {
        let g = grid2(16);
        let c = make_field(g, |_| 1.0).unwrap();
        assert!(matches!(
            fractional_laplacian(&c, 1.0),
            Err(Error::NotMeanZero)
        ));
    }

    #[test]
    fn fractional_laplacian_alpha_to_zero_is_identity() {
        let g = grid2(32);
        let f = harmonic(g, 2, 1);
        let out = fractional_laplacian(&f, 1e-9).unwrap();
        for (o, v) in out.values().iter().zip(f.values()) {
            assert!((o - v).abs() < 1e-8);
        }
    }

    #[test]
    fn fractional_laplacian_is_linear() {
        let g = grid2(32);
        let f = harmonic(g, 1, 2);
        let h = harmonic(g, 4, 1);
        let alpha = 1.2;
        let sum = f.zip_with(&h, |a, b| a + b).unwrap();
        let lhs = fractional_laplacian(&sum, alpha).unwrap();
        let rf = fractional_laplacian(&f, alpha).unwrap();
        let rh = fractional_laplacian(&h, alpha).unwrap();
        let scale = lhs.max_abs();
        for ((l, a), b) in lhs.values().iter().zip(rf.values()).zip(rh.values()) {
            assert!((l - (a + b)).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn fractional_laplacian_composes() {
        let g = grid2(32);
        let f = harmonic(g, 3, 2);
        let (a, b) = (0.7, 0.9);
        let two_step = fractional_laplacian(&fractional_laplacian(&f, a).unwrap(), b).unwrap();
        let one_step = fractional_laplacian(&f, a + b).unwrap();
        let scale = one_step.max_abs();
        for (x, y) in two_step.values().iter().zip(one_step.values()) {
            assert!((x - y).abs() <= 1e-10 * scale);
        }
    }
}
