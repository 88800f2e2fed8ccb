//! The scale-integrated square functions built from ball averages.
//!
//! For each scale t the deviation d_t = f - K_t * f is squared and
//! averaged over balls of radius t; the inner spatial integral over
//! B(x, t) equals v_n t^n (A_t d_t^2)(x) in the continuum, so each scale
//! costs two FFT convolutions plus the smoothing. The scale integral
//! dt/t is discretized by the midpoint rule on a geometric grid.

use crate::convolve::{ball_average_with, scale_bounds, smooth_with_kernel, BallSymbolTable, Normalization};
use crate::error::{Error, Result};
use crate::field::{fmt_f64, Field, GridSpec};
use crate::kernels::{unit_ball_volume, KernelSpec};
use crate::sum::pairwise_sum;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Geometric grid of scales t_i = t_min 2^{i/m} with the log-uniform
/// quadrature weight ln 2 / m per scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleGrid {
    grid: GridSpec,
    t_min: f64,
    t_max: f64,
    per_octave: usize,
    scales: Vec<f64>,
}

impl ScaleGrid {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn per_octave(&self) -> usize {
        self.per_octave
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    /// Midpoint log-quadrature weight ln 2 / m.
    pub fn weight(&self) -> f64 {
        std::f64::consts::LN_2 / self.per_octave as f64
    }
}

/// Build a scale grid for a kernel whose support multiplier is `k`
/// (1 for the ball indicator, j or k for iterates and binomials); the
/// admissible range is [2h, L/(2k)].
pub fn scale_grid(
    grid: GridSpec,
    t_min: f64,
    t_max: f64,
    per_octave: usize,
    k: usize,
) -> Result<ScaleGrid> {
    if per_octave == 0 {
        return Err(Error::EmptyScaleGrid);
    }
    let (lo, hi) = scale_bounds(&grid);
    if !(t_min.is_finite() && t_min >= lo * (1.0 - 1e-12)) {
        return Err(Error::ScaleOutOfRange {
            t: t_min,
            lo,
            hi,
        });
    }
    if !(t_max.is_finite() && t_max <= hi * (1.0 + 1e-12)) {
        return Err(Error::ScaleOutOfRange {
            t: t_max,
            lo,
            hi,
        });
    }
    if t_min > t_max {
        return Err(Error::EmptyScaleGrid);
    }
    let support = k.max(1) as f64 * t_max;
    if support > hi * (1.0 + 1e-12) {
        return Err(Error::SupportViolation {
            support,
            limit: hi,
        });
    }
    let m = per_octave as f64;
    let count = (m * (t_max / t_min).log2() + 1e-9).floor() as usize + 1;
    let scales: Vec<f64> = (0..count)
        .map(|i| t_min * 2.0_f64.powf(i as f64 / m))
        .collect();
    debug_assert!(scales.windows(2).all(|w| w[0] < w[1]));
    debug_assert!(*scales.last().unwrap() <= t_max * (1.0 + 1e-9));
    Ok(ScaleGrid {
        grid,
        t_min,
        t_max,
        per_octave,
        scales,
    })
}

/// Scale-grid descriptor carried in reports and configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleGridSpec {
    pub t_min: f64,
    pub t_max: f64,
    pub per_octave: usize,
}

impl ScaleGridSpec {
    pub fn build(&self, grid: GridSpec, k: usize) -> Result<ScaleGrid> {
        scale_grid(grid, self.t_min, self.t_max, self.per_octave, k)
    }

    pub fn of(scales: &ScaleGrid) -> Self {
        ScaleGridSpec {
            t_min: scales.t_min(),
            t_max: scales.t_max(),
            per_octave: scales.per_octave(),
        }
    }
}

/// Result of a square-function evaluation.
#[derive(Debug, Clone)]
pub struct SquareFnOutput {
    /// The square-function values, pointwise nonnegative.
    pub result: Field,
    /// Per-scale (t, integrand L^1 mass) pairs, ascending in t.
    pub per_scale: Vec<(f64, f64)>,
    pub alpha: f64,
    pub kernel: KernelSpec,
    pub scale_spec: ScaleGridSpec,
    /// True when the theorem range on alpha was bypassed.
    pub range_override: bool,
}

impl SquareFnOutput {
    /// Per-scale L^1 masses of the scale integrands.
    pub fn per_scale_profile(&self) -> &[(f64, f64)] {
        &self.per_scale
    }

    /// CSV export of the per-scale profile: rows `t,mass`.
    pub fn write_profile_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "t,mass")?;
        for (t, mass) in &self.per_scale {
            writeln!(w, "{},{}", fmt_f64(*t), fmt_f64(*mass))?;
        }
        Ok(())
    }
}

fn check_theorem_range(alpha: f64, kernel: &KernelSpec) -> Result<()> {
    let n = kernel.dimension as f64;
    let hi = match kernel.kind {
        crate::kernels::KernelKind::Binomial { k } => (2.0 * k as f64).min(n),
        _ => n,
    };
    if !(alpha > n / 2.0 && alpha < hi) {
        return Err(Error::TheoremRange {
            alpha,
            lo: n / 2.0,
            hi,
        });
    }
    Ok(())
}

/// The square function with the given smoothing kernel over a scale grid,
/// enforcing the theorem range on alpha.
pub fn square_function(
    f: &Field,
    alpha: f64,
    kernel: &KernelSpec,
    scales: &ScaleGrid,
) -> Result<SquareFnOutput> {
    square_function_with_options(f, alpha, kernel, scales, false)
}

/// As [`square_function`], optionally bypassing the theorem range on
/// alpha; the bypass is recorded in the output.
pub fn square_function_with_options(
    f: &Field,
    alpha: f64,
    kernel: &KernelSpec,
    scales: &ScaleGrid,
    override_range: bool,
) -> Result<SquareFnOutput> {
    let grid = *f.grid();
    if scales.grid() != &grid {
        return Err(Error::ScaleGridMismatch);
    }
    if kernel.dimension != grid.dimension() {
        return Err(Error::GridMismatch);
    }
    match check_theorem_range(alpha, kernel) {
        Ok(()) => {}
        Err(e) if override_range => {
            // explored outside the theorem hypothesis; recorded below
            let _ = e;
        }
        Err(e) => return Err(e),
    }
    // still reject alpha for which the weights are meaningless
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::AlphaRange {
            alpha,
            lo: 0.0,
            hi: grid.dimension() as f64,
        });
    }
    let support = kernel.support_radius() * scales.t_max();
    let limit = grid.period() / 2.0;
    if support > limit * (1.0 + 1e-12) {
        return Err(Error::SupportViolation { support, limit });
    }

    let vn = unit_ball_volume(grid.dimension());
    let hn = grid.cell_volume();

    // scales are independent; evaluate in parallel, then combine in
    // ascending order so the reduction is deterministic
    let per_scale: Vec<(f64, f64, Vec<f64>)> = scales
        .scales()
        .par_iter()
        .map(|&t| -> Result<(f64, f64, Vec<f64>)> {
            let table = BallSymbolTable::new(grid, t, Normalization::Discrete)?;
            let smooth = smooth_with_kernel(f, kernel, &table)?;
            let deviation = f.zip_with(&smooth, |a, b| a - b)?;
            let squared = deviation.map(|v| v * v)?;
            let averaged = ball_average_with(&squared, &table)?;
            let factor = vn * t.powf(-2.0 * alpha);
            let integrand: Vec<f64> = averaged.values().iter().map(|&v| factor * v).collect();
            let mass = pairwise_sum(&integrand) * hn;
            Ok((t, mass, integrand))
        })
        .collect::<Result<Vec<_>>>()?;

    let w = scales.weight();
    let mut acc = vec![0.0f64; grid.total_samples()];
    let mut profile = Vec::with_capacity(per_scale.len());
    for (t, mass, integrand) in &per_scale {
        for (a, &v) in acc.iter_mut().zip(integrand) {
            *a += w * v;
        }
        profile.push((*t, *mass));
    }
    let values: Vec<f64> = acc.into_iter().map(|v| v.max(0.0).sqrt()).collect();
    Ok(SquareFnOutput {
        result: Field::from_values(grid, values)?,
        per_scale: profile,
        alpha,
        kernel: *kernel,
        scale_spec: ScaleGridSpec::of(scales),
        range_override: override_range && check_theorem_range(alpha, kernel).is_err(),
    })
}

/// The square function built on the binomial kernel of order k; for
/// k = 1 this is bitwise identical to the ball-indicator square function.
pub fn e_tilde(f: &Field, alpha: f64, k: usize, scales: &ScaleGrid) -> Result<SquareFnOutput> {
    let kernel = KernelSpec::binomial(k, f.grid().dimension())?;
    square_function(f, alpha, &kernel, scales)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convolve::ball_average;
    use crate::field::{lp_norm, make_field, translate};
    use std::f64::consts::PI;

    fn grid2(n: usize) -> GridSpec {
        GridSpec::new(2, n, 1.0).unwrap()
    }

    fn noise(grid: GridSpec) -> Field {
        let mut state = 0x9E3779B97F4A7C15u64;
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
    fn scale_grid_counting_and_degenerate() {
        let g = grid2(64);
        let h = g.spacing();
        let s = scale_grid(g, 0.1, 0.1, 4, 1).unwrap();
        assert_eq!(s.scales().len(), 1);
        assert_eq!(s.weight(), std::f64::consts::LN_2 / 4.0);

        // one octave at 4 per octave holds 5 scales
        let s = scale_grid(g, 0.1, 0.2, 4, 1).unwrap();
        assert_eq!(s.scales().len(), 5);

        assert!(matches!(
            scale_grid(g, h, 0.2, 4, 1),
            Err(Error::ScaleOutOfRange { .. })
        ));
        assert!(matches!(
            scale_grid(g, 0.1, 0.6, 4, 1),
            Err(Error::ScaleOutOfRange { .. })
        ));
        // k = 2 halves the admissible t_max
        assert!(scale_grid(g, 0.1, 0.3, 4, 2).is_err());
        assert!(scale_grid(g, 0.1, 0.25, 4, 2).is_ok());
    }

    #[test]
    fn constant_field_yields_exact_zero() {
        let g = grid2(32);
        let c = make_field(g, |_| 2.5).unwrap();
        let scales = scale_grid(g, 0.1, 0.25, 3, 1).unwrap();
        let kernel = KernelSpec::ball(2).unwrap();
        let out = square_function(&c, 1.5, &kernel, &scales).unwrap();
        assert!(out.result.values().iter().all(|&v| v == 0.0));
        assert!(out.per_scale.iter().all(|&(_, m)| m == 0.0));
    }

    #[test]
    fn theorem_range_is_enforced_and_overridable() {
        let g = grid2(32);
        let f = noise(g);
        let scales = scale_grid(g, 0.1, 0.2, 2, 1).unwrap();
        let kernel = KernelSpec::ball(2).unwrap();
        let err = square_function(&f, 0.4, &kernel, &scales).unwrap_err();
        assert!(matches!(err, Error::TheoremRange { lo, hi, .. } if lo == 1.0 && hi == 2.0));

        let out = square_function_with_options(&f, 0.4, &kernel, &scales, true).unwrap();
        assert!(out.range_override);

        // binomial k = 1 additionally requires alpha < 2; k = 2 relaxes
        // nothing in n = 2 since min(4, 2) = 2
        let k1 = KernelSpec::binomial(1, 2).unwrap();
        assert!(square_function(&f, 1.5, &k1, &scales).is_ok());
    }

    #[test]
    fn harmonic_matches_fourier_symbol_oracle() {
        // single harmonic: d_t = (1 - s_k) cos, d_t^2 opens into DC and
        // the doubled frequency, so A_t d_t^2 has the closed form
        // (1 - s_k)^2 (1 + s_{2k} cos(4 pi k x)) / 2
        let g = grid2(64);
        let (kx, ky) = (3i64, 0i64);
        let f = make_field(g, |x| (2.0 * PI * 3.0 * x[0]).cos()).unwrap();
        let alpha = 1.5;
        let scales = scale_grid(g, 0.0625, 0.25, 3, 1).unwrap();
        let kernel = KernelSpec::ball(2).unwrap();
        let out = square_function(&f, alpha, &kernel, &scales).unwrap();

        let vn = PI;
        let w = scales.weight();
        let mut acc = vec![0.0f64; g.total_samples()];
        for &t in scales.scales() {
            let table = BallSymbolTable::new(g, t, Normalization::Discrete).unwrap();
            let s1 = table.symbol_at(&[kx, ky]);
            let s2 = table.symbol_at(&[2 * kx, 2 * ky]);
            let factor = vn * t.powf(-2.0 * alpha) * (1.0 - s1) * (1.0 - s1) / 2.0;
            for (i, a) in acc.iter_mut().enumerate() {
                let x0 = (i / 64) as f64 / 64.0;
                *a += w * factor * (1.0 + s2 * (4.0 * PI * 3.0 * x0).cos());
            }
        }
        for (o, e) in out.result.values().iter().zip(&acc) {
            let expect = e.max(0.0).sqrt();
            assert!(
                (o - expect).abs() <= 1e-10 * expect.abs().max(1e-6),
                "pipeline {o} vs oracle {expect}"
            );
        }
    }

    #[test]
    fn e_tilde_k1_is_bitwise_u_alpha() {
        let g = grid2(32);
        let f = noise(g);
        let scales = scale_grid(g, 0.07, 0.2, 3, 1).unwrap();
        let kernel = KernelSpec::ball(2).unwrap();
        let u = square_function(&f, 1.5, &kernel, &scales).unwrap();
        let e1 = e_tilde(&f, 1.5, 1, &scales).unwrap();
        assert!(u
            .result
            .values()
            .iter()
            .zip(e1.result.values())
            .all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn e_tilde_k2_matches_direct_double_difference_pipeline() {
        // (I - A_t)^2 f computed literally, then squared and averaged
        let g = grid2(64);
        let f = noise(g);
        let alpha = 1.5;
        let scales = scale_grid(g, 0.0625, 0.2, 3, 2).unwrap();
        let out = e_tilde(&f, alpha, 2, &scales).unwrap();

        let vn = PI;
        let w = scales.weight();
        let hn = g.cell_volume();
        let mut acc = vec![0.0f64; g.total_samples()];
        for &t in scales.scales() {
            let g1 = f.zip_with(&ball_average(&f, t).unwrap(), |a, b| a - b).unwrap();
            let g2 = g1
                .zip_with(&ball_average(&g1, t).unwrap(), |a, b| a - b)
                .unwrap();
            let sq = g2.map(|v| v * v).unwrap();
            let avg = ball_average(&sq, t).unwrap();
            let factor = vn * t.powf(-2.0 * alpha);
            for (a, &v) in acc.iter_mut().zip(avg.values()) {
                *a += w * factor * v;
            }
            let _ = hn;
        }
        for (o, e) in out.result.values().iter().zip(&acc) {
            let expect = e.max(0.0).sqrt();
            assert!(
                (o - expect).abs() <= 1e-12 * expect.abs(),
                "{o} vs {expect}"
            );
        }
    }

    #[test]
    fn translation_equivariance() {
        let g = grid2(32);
        let f = noise(g);
        let scales = scale_grid(g, 0.07, 0.2, 3, 1).unwrap();
        let kernel = KernelSpec::ball(2).unwrap();
        let shift = [9usize, 21];
        let a = square_function(&translate(&f, &shift).unwrap(), 1.5, &kernel, &scales).unwrap();
        let b = translate(
            &square_function(&f, 1.5, &kernel, &scales).unwrap().result,
            &shift,
        )
        .unwrap();
        let scale = b.max_abs();
        for (x, y) in a.result.values().iter().zip(b.values()) {
            assert!((x - y).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn enlarging_the_scale_range_never_decreases_the_output() {
        let g = grid2(32);
        let f = noise(g);
        let kernel = KernelSpec::ball(2).unwrap();
        let narrow = scale_grid(g, 0.125, 0.25, 2, 1).unwrap();
        let wide = scale_grid(g, 0.0625, 0.25, 2, 1).unwrap();
        // the wide grid contains every narrow scale plus one octave below
        let a = square_function(&f, 1.5, &kernel, &narrow).unwrap();
        let b = square_function(&f, 1.5, &kernel, &wide).unwrap();
        for (x, y) in a.result.values().iter().zip(b.result.values()) {
            assert!(y >= x);
        }
    }

    #[test]
    fn per_octave_refinement_is_cauchy() {
        let g = grid2(64);
        let f = make_field(g, |x| {
            (2.0 * PI * x[0]).cos() + 0.5 * (2.0 * PI * 3.0 * (x[0] + 2.0 * x[1])).sin()
        })
        .unwrap();
        let kernel = KernelSpec::ball(2).unwrap();
        let mut norms = vec![];
        for m in [2usize, 4, 8] {
            let scales = scale_grid(g, 0.0625, 0.25, m, 1).unwrap();
            let out = square_function(&f, 1.5, &kernel, &scales).unwrap();
            norms.push(lp_norm(&out.result, 1.0).unwrap());
        }
        let d1 = (norms[1] - norms[0]).abs();
        let d2 = (norms[2] - norms[1]).abs();
        assert!(d2 < d1, "not Cauchy: {norms:?}");
    }

    #[test]
    fn bookkeeping_identity_between_profile_and_result() {
        let g = grid2(32);
        let f = noise(g);
        let scales = scale_grid(g, 0.07, 0.2, 3, 1).unwrap();
        let kernel = KernelSpec::ball(2).unwrap();
        let out = square_function(&f, 1.5, &kernel, &scales).unwrap();
        let hn = g.cell_volume();
        let lhs: f64 = out
            .result
            .values()
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            * hn;
        let rhs: f64 = out.per_scale.iter().map(|(_, m)| m).sum::<f64>() * scales.weight();
        assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs());
    }

    #[test]
    fn profile_csv_shape() {
        let g = grid2(32);
        let f = noise(g);
        let scales = scale_grid(g, 0.07, 0.2, 3, 1).unwrap();
        let out = square_function(&f, 1.5, &KernelSpec::ball(2).unwrap(), &scales).unwrap();
        let mut buf = vec![];
        out.write_profile_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,mass\n"));
        assert_eq!(text.lines().count(), 1 + scales.scales().len());
    }
}
