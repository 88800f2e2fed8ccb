//! Concrete members of the kernel family: the normalized ball indicator,
//! its convolution iterates, their binomial combination, and the Riesz
//! kernel together with its ball-smoothed profile.

use crate::error::{Error, Result};
use crate::field::fmt_f64;
use crate::quadrature::{integrate, QuadOptions};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

/// Volume of the unit ball in n dimensions.
pub fn unit_ball_volume(n: usize) -> f64 {
    PI.powf(n as f64 / 2.0) / libm::tgamma(n as f64 / 2.0 + 1.0)
}

/// Surface measure of the unit sphere S^{n-1}.
pub fn sphere_area(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / libm::tgamma(n as f64 / 2.0)
}

/// Which smoothing kernel a square function uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelKind {
    /// The normalized indicator of the unit ball.
    BallIndicator,
    /// j-fold self-convolution of the ball indicator.
    Iterate { j: usize },
    /// Binomial combination K of the first k iterates; I - K* = (I - A)^k.
    Binomial { k: usize },
}

/// A smoothing kernel descriptor: unit mass, compact support, bounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub dimension: usize,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, dimension: usize) -> Result<Self> {
        if dimension < 2 {
            return Err(Error::GridDimension { n: dimension });
        }
        match kind {
            KernelKind::Iterate { j } if j == 0 || j > 20 => Err(Error::BinomialOrder { k: j }),
            KernelKind::Binomial { k } if k == 0 || k > 20 => Err(Error::BinomialOrder { k }),
            _ => Ok(KernelSpec { kind, dimension }),
        }
    }

    pub fn ball(dimension: usize) -> Result<Self> {
        Self::new(KernelKind::BallIndicator, dimension)
    }

    pub fn binomial(k: usize, dimension: usize) -> Result<Self> {
        Self::new(KernelKind::Binomial { k }, dimension)
    }

    /// Support radius at unit scale: 1 for the ball, j for the j-th
    /// iterate, k for the binomial combination.
    pub fn support_radius(&self) -> f64 {
        match self.kind {
            KernelKind::BallIndicator => 1.0,
            KernelKind::Iterate { j } => j as f64,
            KernelKind::Binomial { k } => k as f64,
        }
    }
}

/// Coefficients c_j of K: c_j = -(-1)^j C(k, j), j = 1..k. They sum to 1.
pub fn binomial_coefficients(k: usize) -> Result<Vec<f64>> {
    Ok(binomial_coefficients_int(k)?
        .into_iter()
        .map(|c| c as f64)
        .collect())
}

/// Integer-exact form of the coefficients; the sum-to-one identity holds
/// in integer arithmetic before any conversion.
pub fn binomial_coefficients_int(k: usize) -> Result<Vec<i64>> {
    if k == 0 || k > 20 {
        return Err(Error::BinomialOrder { k });
    }
    let mut c = Vec::with_capacity(k);
    let mut binom: i64 = 1;
    for j in 1..=k {
        // C(k, j) by the multiplicative recurrence
        binom = binom * (k as i64 - j as i64 + 1) / j as i64;
        let sign = if j % 2 == 1 { 1 } else { -1 };
        c.push(sign * binom);
    }
    debug_assert_eq!(c.iter().sum::<i64>(), 1);
    Ok(c)
}

fn check_alpha(alpha: f64, n: usize) -> Result<()> {
    if !(alpha > 0.0 && alpha < n as f64 && alpha.is_finite()) {
        return Err(Error::AlphaRange {
            alpha,
            lo: 0.0,
            hi: n as f64,
        });
    }
    Ok(())
}

/// Normalizing constant of the Riesz kernel:
/// tau(alpha) = Gamma(n/2 - alpha/2) / (pi^{n/2} 2^alpha Gamma(alpha/2)).
pub fn tau(alpha: f64, n: usize) -> Result<f64> {
    check_alpha(alpha, n)?;
    let nf = n as f64;
    Ok(libm::tgamma(nf / 2.0 - alpha / 2.0)
        / (PI.powf(nf / 2.0) * 2.0_f64.powf(alpha) * libm::tgamma(alpha / 2.0)))
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Riesz kernel tau(alpha) |x|^{alpha - n}.
pub fn riesz_value(alpha: f64, n: usize, x: &[f64]) -> Result<f64> {
    let r = norm(x);
    if r == 0.0 {
        return Err(Error::OriginSingularity);
    }
    Ok(tau(alpha, n)? * r.powf(alpha - n as f64))
}

/// Exact gradient magnitude of the Riesz kernel:
/// tau(alpha) (n - alpha) |x|^{alpha - n - 1}.
pub fn grad_riesz_magnitude(alpha: f64, n: usize, x: &[f64]) -> Result<f64> {
    let r = norm(x);
    if r == 0.0 {
        return Err(Error::OriginSingularity);
    }
    Ok(tau(alpha, n)? * (n as f64 - alpha) * r.powf(alpha - n as f64 - 1.0))
}

/// Fourier symbol of the unit-mass ball indicator at radius t, evaluated
/// at x = 2 pi t |xi|: Gamma(n/2 + 1) (2/x)^{n/2} J_{n/2}(x).
///
/// Uses the hypergeometric series below x = 6 and Bessel evaluations
/// above; accuracy is a few ulps of 1e-13 over the range used here.
pub fn ball_fourier_symbol(n: usize, x: f64) -> Result<f64> {
    if n < 2 || n > 12 {
        return Err(Error::UnsupportedDimension {
            n,
            context: "the analytic ball symbol",
        });
    }
    let x = x.abs();
    if x < 1e-14 {
        return Ok(1.0);
    }
    if x <= 6.0 {
        // symbol = sum_m (-1)^m (x^2/4)^m / (m! prod_{i=1..m} (n/2 + i))
        let q = x * x / 4.0;
        let mut term = 1.0;
        let mut sum = 1.0;
        for m in 1..200 {
            term *= -q / (m as f64 * (n as f64 / 2.0 + m as f64));
            sum += term;
            if term.abs() < 1e-17 * sum.abs().max(1e-3) {
                break;
            }
        }
        return Ok(sum);
    }
    let half_n = n as f64 / 2.0;
    let j = if n % 2 == 0 {
        libm::jn((n / 2) as i32, x)
    } else {
        bessel_half_integer(n, x)
    };
    Ok(libm::tgamma(half_n + 1.0) * (2.0 / x).powf(half_n) * j)
}

/// J_{n/2}(x) for odd n via the elementary half-integer forms and upward
/// recurrence; stable here because callers only use x > 6 >= order.
fn bessel_half_integer(n: usize, x: f64) -> f64 {
    let pref = (2.0 / (PI * x)).sqrt();
    let mut jm = pref * x.sin(); // J_{1/2}
    if n == 1 {
        return jm;
    }
    let mut jp = pref * (x.sin() / x - x.cos()); // J_{3/2}
    let mut nu = 1.5;
    while nu < n as f64 / 2.0 {
        let next = (2.0 * nu / x) * jp - jm;
        jm = jp;
        jp = next;
        nu += 1.0;
    }
    jp
}

/// Spherical-cap measure: the (n-1)-measure of {w in S^{n-1} : w.e >= nu}.
fn cap_measure_ge(n: usize, nu: f64) -> f64 {
    if nu <= -1.0 {
        return sphere_area(n);
    }
    if nu >= 1.0 {
        return 0.0;
    }
    match n {
        2 => 2.0 * nu.acos(),
        3 => 2.0 * PI * (1.0 - nu),
        _ => {
            // sigma_{n-2} int_0^{arccos nu} sin^{n-2}(theta) dtheta by a
            // fixed high-order Gauss rule; the integrand is entire.
            let t1 = nu.acos();
            let s = sphere_area(n - 1);
            let mut sum = 0.0;
            for &(node, weight) in gauss_legendre_48().iter() {
                let theta = 0.5 * t1 * (node + 1.0);
                sum += weight * theta.sin().powi(n as i32 - 2);
            }
            s * 0.5 * t1 * sum
        }
    }
}

/// 48-point Gauss-Legendre rule on [-1, 1], nodes solved once by Newton
/// iteration from the Chebyshev initial guess.
fn gauss_legendre_48() -> &'static [(f64, f64); 48] {
    use std::sync::OnceLock;
    static RULE: OnceLock<[(f64, f64); 48]> = OnceLock::new();
    RULE.get_or_init(|| {
        let m = 48usize;
        let mut rule = [(0.0, 0.0); 48];
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                // Legendre P_m(x) and P_m'(x) by the three-term recurrence
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=m {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            rule[i] = (x, 2.0 / ((1.0 - x * x) * dp * dp));
        }
        rule
    })
}

/// Ball-smoothed Riesz kernel G(r) = |B_0|^{-1} int_{B(0,1)} L(re - w) dw
/// at unit scale, by quadrature in polar coordinates around the singular
/// point of L. `rel_tol` is the relative quadrature tolerance.
pub fn smoothed_riesz_at(alpha: f64, n: usize, r: f64, rel_tol: f64) -> Result<f64> {
    check_alpha(alpha, n)?;
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::InvalidRadii("radius must be a nonnegative real"));
    }
    let sigma = sphere_area(n);
    let opts = QuadOptions {
        rel_tol,
        min_width_frac: 1e-8,
        ..QuadOptions::default()
    };

    // shifted polar: G = (tau / v_n) int_0^{1+r} s^{alpha-1} A(s) ds with
    // A(s) the cap measure of {w in S^{n-1} : |re - sw| <= 1}
    let mut regions: Vec<([f64; 1], [f64; 1])> = Vec::new();
    let full_end = if r < 1.0 { 1.0 - r } else { 0.0 };
    if full_end > 0.0 {
        regions.push(([0.0], [full_end]));
    }
    let band_lo = (1.0 - r).abs();
    let band_hi = 1.0 + r;
    if band_hi - band_lo > 1e-14 {
        regions.push(([band_lo], [band_hi]));
    }
    let f = |x: &[f64; 1]| {
        let s = x[0];
        let weight = s.powf(alpha - 1.0);
        if s <= full_end {
            return weight * sigma;
        }
        let nu = (r * r + s * s - 1.0) / (2.0 * r * s);
        weight * cap_measure_ge(n, nu)
    };
    let out = integrate(f, &regions, &[[0.0]], &opts)?;
    Ok(tau(alpha, n)? * out.value / unit_ball_volume(n))
}

/// Tabulated values of a radial function, e.g. the smoothed Riesz kernel.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub alpha: f64,
    pub dimension: usize,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    /// Exponent alpha - n of the underlying kernel's singularity.
    pub singular_exponent: f64,
}

impl RadialProfile {
    /// CSV export: rows `r,G(r)` in physical units.
    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "r,G(r)")?;
        for (r, g) in self.radii.iter().zip(&self.values) {
            writeln!(w, "{},{}", fmt_f64(*r), fmt_f64(*g))?;
        }
        Ok(())
    }
}

/// Default relative tolerance for profile quadrature.
pub const PROFILE_QUAD_TOL: f64 = 1e-8;

/// Evaluate the smoothed Riesz kernel at the given radii.
pub fn smoothed_riesz_profile(alpha: f64, n: usize, radii: &[f64]) -> Result<RadialProfile> {
    check_alpha(alpha, n)?;
    if radii.is_empty() {
        return Err(Error::InvalidRadii("no radii given"));
    }
    if radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidRadii("radii must be strictly increasing"));
    }
    if radii[0] <= 0.0 {
        return Err(Error::InvalidRadii("radii must be positive"));
    }
    let values = radii
        .iter()
        .map(|&r| smoothed_riesz_at(alpha, n, r, PROFILE_QUAD_TOL))
        .collect::<Result<Vec<f64>>>()?;
    Ok(RadialProfile {
        alpha,
        dimension: n,
        radii: radii.to_vec(),
        values,
        singular_exponent: alpha - n as f64,
    })
}

/// Smoothed Riesz kernel tabulated with cubic interpolation on four
/// segments: logarithmic in r away from the support boundary, and
/// geometrically graded toward r = 1 from both sides, where G is only
/// C^{1+alpha} and a uniform log grid would lose accuracy.
#[derive(Debug, Clone)]
pub struct SmoothedRieszTable {
    alpha: f64,
    dimension: usize,
    r_min: f64,
    r_max: f64,
    kink_pad: f64,
    g_zero: f64,
    g_kink_lo: f64,
    g_kink_hi: f64,
    small: LogSegment,    // x = ln r,       r in [r_min, 0.5]
    below: LogSegment,    // x = ln(1 - r),  1 - r in [kink_pad, 0.5]
    above: LogSegment,    // x = ln(r - 1),  r - 1 in [kink_pad, 1.0]
    large: LogSegment,    // x = ln r,       r in [2, r_max]
}

#[derive(Debug, Clone)]
struct LogSegment {
    x_start: f64,
    x_step: f64,
    values: Vec<f64>,
}

impl LogSegment {
    fn build(
        alpha: f64,
        n: usize,
        x_start: f64,
        x_end: f64,
        per_octave: usize,
        tol: f64,
        radius_of: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let octaves = (x_end - x_start) / std::f64::consts::LN_2;
        let count = (octaves.abs() * per_octave as f64).ceil() as usize + 1;
        let x_step = (x_end - x_start) / (count - 1) as f64;
        let values = (0..count)
            .map(|i| smoothed_riesz_at(alpha, n, radius_of(x_start + i as f64 * x_step), tol))
            .collect::<Result<Vec<f64>>>()?;
        Ok(LogSegment {
            x_start,
            x_step,
            values,
        })
    }

    fn eval(&self, x: f64) -> f64 {
        let m = self.values.len();
        let pos = (x - self.x_start) / self.x_step;
        // 4-point Lagrange stencil clamped into the segment
        let i0 = (pos.floor() as isize - 1).clamp(0, m as isize - 4) as usize;
        let mut acc = 0.0;
        for a in 0..4 {
            let xa = (i0 + a) as f64;
            let mut l = 1.0;
            for b in 0..4 {
                if a != b {
                    let xb = (i0 + b) as f64;
                    l *= (pos - xb) / (xa - xb);
                }
            }
            acc += l * self.values[i0 + a];
        }
        acc
    }
}

impl SmoothedRieszTable {
    pub const DEFAULT_PER_OCTAVE: usize = 32;

    pub fn new(alpha: f64, n: usize) -> Result<Self> {
        Self::with_resolution(alpha, n, Self::DEFAULT_PER_OCTAVE, 1e-9)
    }

    pub fn with_resolution(alpha: f64, n: usize, per_octave: usize, tol: f64) -> Result<Self> {
        check_alpha(alpha, n)?;
        let r_min = 1e-4;
        let r_max = 16.0;
        let kink_pad = 1e-6;
        let g_zero = smoothed_riesz_at(alpha, n, 0.0, tol)?;
        let small = LogSegment::build(
            alpha,
            n,
            r_min.ln(),
            0.5f64.ln(),
            per_octave,
            tol,
            f64::exp,
        )?;
        let below = LogSegment::build(
            alpha,
            n,
            kink_pad.ln(),
            0.5f64.ln(),
            per_octave,
            tol,
            |x| 1.0 - x.exp(),
        )?;
        let above = LogSegment::build(alpha, n, kink_pad.ln(), 0.0, per_octave, tol, |x| {
            1.0 + x.exp()
        })?;
        let large = LogSegment::build(
            alpha,
            n,
            2.0f64.ln(),
            r_max.ln(),
            per_octave,
            tol,
            f64::exp,
        )?;
        Ok(SmoothedRieszTable {
            alpha,
            dimension: n,
            r_min,
            r_max,
            kink_pad,
            g_zero,
            g_kink_lo: below.values[0],
            g_kink_hi: above.values[0],
            small,
            below,
            above,
            large,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Interpolated G(r). Below the table the quadratic short-range model
    /// through G(0) is used (G is even in r); beyond it the far field is
    /// the bare Riesz kernel, exact to O(r^{-2}) relative. Across the
    /// kink itself (|r - 1| < 1e-6) G is C^1, so a linear bridge holds
    /// well inside the interpolation budget.
    pub fn eval(&self, r: f64) -> f64 {
        debug_assert!(r.is_finite() && r >= 0.0);
        if r < self.r_min {
            let g_min = self.small.values[0];
            let q = r / self.r_min;
            return self.g_zero + (g_min - self.g_zero) * q * q;
        }
        if r > self.r_max {
            let tau = tau(self.alpha, self.dimension).expect("validated at construction");
            return tau * r.powf(self.alpha - self.dimension as f64);
        }
        let d = r - 1.0;
        if d.abs() <= self.kink_pad {
            let s = (d + self.kink_pad) / (2.0 * self.kink_pad);
            return self.g_kink_lo + s * (self.g_kink_hi - self.g_kink_lo);
        }
        if r <= 0.5 {
            self.small.eval(r.ln())
        } else if r < 1.0 {
            self.below.eval((1.0 - r).ln())
        } else if r <= 2.0 {
            self.above.eval(d.ln())
        } else {
            self.large.eval(r.ln())
        }
    }
}
