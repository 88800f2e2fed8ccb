//! Quadrature verification of the smoothed-Riesz difference integral,
//! its quadratic small-displacement bound, and the gradient-integral
//! estimate behind it.
//!
//! Everything is computed in dimensionless variables (u, v) = (x/t, y/t);
//! the scaling identity I(x, y, t) = t^{-2n} F(u, v) makes the t-power an
//! exact structural fact. F itself is an integral over the unit ball
//! intersected with an annulus around u, evaluated in polar coordinates
//! centered at u so both region constraints become coordinate bounds.

use crate::error::{Error, Result};
use crate::kernels::{grad_riesz_magnitude, sphere_area, tau, SmoothedRieszTable};
use crate::quadrature::{integrate, QuadOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

/// Admissible tolerance range for the F quadrature.
pub const TOL_RANGE: (f64, f64) = (1e-10, 1e-4);

/// A dimensionless pair (u, v) = (x/t, y/t).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionlessPair {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl DimensionlessPair {
    /// Admissibility for the quadratic bound: |u| < 7 and 0 < |v| < |u|/2.
    pub fn is_admissible(&self) -> bool {
        let uu = norm(&self.u);
        let vv = norm(&self.v);
        uu < 7.0 && vv > 0.0 && vv < uu / 2.0
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Outcome of one F evaluation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FEval {
    pub value: f64,
    /// Set when the integration region is empty; the value is then 0.
    pub empty_region: bool,
    pub error_estimate: f64,
    pub evals: usize,
}

/// Shared state for repeated F evaluations at fixed (alpha, n).
pub struct LemmaContext {
    alpha: f64,
    n: usize,
    table: SmoothedRieszTable,
}

impl LemmaContext {
    /// Build the smoothed-Riesz table for (alpha, n). Supported in
    /// dimensions 2 and 3, where the angular geometry is implemented.
    pub fn new(alpha: f64, n: usize) -> Result<Self> {
        if n != 2 && n != 3 {
            return Err(Error::UnsupportedDimension {
                n,
                context: "the difference-integral quadrature",
            });
        }
        Ok(LemmaContext {
            alpha,
            n,
            table: SmoothedRieszTable::new(alpha, n)?,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    /// F(u, v): the integral of |G(u - v - z) - G(u - z)|^2 over
    /// {z in B_0 : 2|v| < |u - z| < 6}, to relative tolerance `tol`.
    pub fn f_dimensionless(&self, u: &[f64], v: &[f64], tol: f64) -> Result<FEval> {
        if u.len() != self.n || v.len() != self.n {
            return Err(Error::UnsupportedDimension {
                n: u.len().max(v.len()),
                context: "an (u, v) pair of the wrong dimension",
            });
        }
        let vv = norm(v);
        if vv == 0.0 {
            return Err(Error::ZeroVector { what: "v" });
        }
        if !(TOL_RANGE.0..=TOL_RANGE.1).contains(&tol) {
            return Err(Error::ToleranceRange {
                tol,
                lo: TOL_RANGE.0,
                hi: TOL_RANGE.1,
            });
        }
        let uu = norm(u);

        // radial range of |u - z| over the region
        let rho_lo = (2.0 * vv).max(if uu > 1.0 { uu - 1.0 } else { 0.0 });
        let rho_hi = 6.0_f64.min(uu + 1.0);
        if rho_lo >= rho_hi {
            return Ok(FEval {
                value: 0.0,
                empty_region: true,
                error_estimate: 0.0,
                evals: 0,
            });
        }

        // orthonormal frame with e1 along u
        let e1: Vec<f64> = if uu > 0.0 {
            u.iter().map(|c| c / uu).collect()
        } else {
            let mut e = vec![0.0; self.n];
            e[0] = 1.0;
            e
        };
        let (v_par, v_perp) = decompose(v, &e1);

        // pieces split where the geometry or the integrand kinks
        let mut cuts = vec![rho_lo, rho_hi];
        for c in [(1.0 - uu).abs(), 1.0, vv, vv + 1e-9] {
            if c > rho_lo && c < rho_hi {
                cuts.push(c);
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-13);

        let opts = QuadOptions {
            rel_tol: tol,
            max_evals: 40_000_000,
            min_width_frac: 1e-5,
            ..QuadOptions::default()
        };

        let mu = |rho: f64| -> f64 {
            let denom = 2.0 * uu * rho;
            if denom < f64::MIN_POSITIVE {
                if 1.0 - uu * uu - rho * rho >= 0.0 {
                    f64::INFINITY
                } else {
                    f64::NEG_INFINITY
                }
            } else {
                (1.0 - uu * uu - rho * rho) / denom
            }
        };

        match self.n {
            2 => {
                let regions: Vec<([f64; 2], [f64; 2])> = cuts
                    .windows(2)
                    .map(|w| ([w[0], 0.0], [w[1], 1.0]))
                    .collect();
                // exploratory inputs may place the point z = u - v (where
                // the first argument of G vanishes) inside the region
                let mut singular: Vec<[f64; 2]> = Vec::new();
                if vv > rho_lo && vv < rho_hi {
                    let m = mu(vv);
                    let theta_c = m.clamp(-1.0, 1.0).acos();
                    let width = 2.0 * PI - 2.0 * theta_c;
                    if width > 0.0 {
                        let mut phi = (-v_perp).atan2(-v_par) - 0.0;
                        if phi < 0.0 {
                            phi += 2.0 * PI;
                        }
                        let s = (phi - theta_c) / width;
                        if (0.0..=1.0).contains(&s) {
                            singular.push([vv, s]);
                        }
                    }
                }
                let table = &self.table;
                let f = |x: &[f64; 2]| -> f64 {
                    let (rho, s) = (x[0], x[1]);
                    let m = mu(rho);
                    if m <= -1.0 {
                        return 0.0;
                    }
                    let theta_c = if m >= 1.0 { 0.0 } else { m.acos() };
                    let width = 2.0 * PI - 2.0 * theta_c;
                    let phi = theta_c + s * width;
                    let dot = v_par * phi.cos() + v_perp * phi.sin();
                    let q = (rho * rho + vv * vv + 2.0 * rho * dot).max(0.0).sqrt();
                    let diff = table.eval(q) - table.eval(rho);
                    diff * diff * rho * width
                };
                let out = integrate(f, &regions, &singular, &opts)?;
                Ok(FEval {
                    value: out.value,
                    empty_region: false,
                    error_estimate: out.error_estimate,
                    evals: out.evals,
                })
            }
            3 => {
                let regions: Vec<([f64; 3], [f64; 3])> = cuts
                    .windows(2)
                    .map(|w| ([w[0], 0.0, 0.0], [w[1], 1.0, 1.0]))
                    .collect();
                let table = &self.table;
                // psi runs over half the azimuth (cos psi symmetry), x2
                let f = |x: &[f64; 3]| -> f64 {
                    let (rho, s, p) = (x[0], x[1], x[2]);
                    let m = mu(rho);
                    if m <= -1.0 {
                        return 0.0;
                    }
                    let theta_c = if m >= 1.0 { 0.0 } else { m.acos() };
                    let w_theta = PI - theta_c;
                    let theta = theta_c + s * w_theta;
                    let psi = p * PI;
                    let dot = v_par * theta.cos() + v_perp * theta.sin() * psi.cos();
                    let q = (rho * rho + vv * vv + 2.0 * rho * dot).max(0.0).sqrt();
                    let diff = table.eval(q) - table.eval(rho);
                    2.0 * diff * diff * rho * rho * theta.sin() * w_theta * PI
                };
                let out = integrate(f, &regions, &[], &opts)?;
                Ok(FEval {
                    value: out.value,
                    empty_region: false,
                    error_estimate: out.error_estimate,
                    evals: out.evals,
                })
            }
            _ => unreachable!("dimension checked at construction"),
        }
    }

    /// I(x, y, t) = t^{-2n} F(x/t, y/t).
    pub fn i11(&self, x: &[f64], y: &[f64], t: f64, tol: f64) -> Result<FEval> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::ScaleOutOfRange {
                t,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        if norm(y) == 0.0 {
            return Err(Error::ZeroVector { what: "y" });
        }
        let u: Vec<f64> = x.iter().map(|c| c / t).collect();
        let v: Vec<f64> = y.iter().map(|c| c / t).collect();
        let mut out = self.f_dimensionless(&u, &v, tol)?;
        out.value *= t.powi(-2 * self.n as i32);
        out.error_estimate *= t.powi(-2 * self.n as i32);
        Ok(out)
    }

    /// Scan the ratio F(u, v)/|v|^2 over admissible samples with
    /// geometric |v|-ladders toward zero.
    pub fn bound_scan(&self, config: &BoundScanConfig) -> Result<BoundScanReport> {
        config.validate()?;
        let mut geometries: Vec<DimensionlessPair> = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        for _ in 0..config.num_samples {
            let uu = rng.gen_range(config.u_min..config.u_max);
            let u_dir = random_direction(&mut rng, self.n);
            let v_dir = random_direction(&mut rng, self.n);
            geometries.push(DimensionlessPair {
                u: u_dir.iter().map(|c| c * uu).collect(),
                // |v| filled per rung; store the direction here
                v: v_dir,
            });
        }

        let generated: Vec<ScanSample> = geometries
            .par_iter()
            .map(|pair| self.scan_one(&pair.u, &pair.v, config))
            .collect();

        let explicit: Vec<ScanSample> = config
            .extra_samples
            .par_iter()
            .map(|pair| {
                if !pair.is_admissible() {
                    return ScanSample {
                        u: pair.u.clone(),
                        status: SampleStatus::SkippedInadmissible {
                            reason: "requires |u| < 7 and 0 < |v| < |u|/2".into(),
                        },
                        rungs: vec![],
                        small_v_slope: None,
                        slope_radii: vec![],
                    };
                }
                let vv = norm(&pair.v);
                let dir: Vec<f64> = pair.v.iter().map(|c| c / vv).collect();
                self.scan_one(&pair.u, &dir, config)
            })
            .collect();

        let mut samples = generated;
        samples.extend(explicit);

        let mut sup_ratio: Option<f64> = None;
        let mut min_slope: Option<f64> = None;
        let mut max_rel_error = 0.0f64;
        let mut failed = 0usize;
        for s in &samples {
            match &s.status {
                SampleStatus::Evaluated => {}
                SampleStatus::QuadratureFailed { .. } => failed += 1,
                SampleStatus::SkippedInadmissible { .. } => continue,
            }
            for r in &s.rungs {
                if !r.empty_region {
                    sup_ratio = Some(sup_ratio.map_or(r.ratio, |m: f64| m.max(r.ratio)));
                    if r.f_value > 0.0 {
                        max_rel_error = max_rel_error.max(r.rel_error);
                    }
                }
            }
            if let Some(slope) = s.small_v_slope {
                min_slope = Some(min_slope.map_or(slope, |m: f64| m.min(slope)));
            }
        }

        Ok(BoundScanReport {
            alpha: self.alpha,
            n: self.n,
            config: config.clone(),
            samples,
            sup_ratio,
            min_slope,
            max_rel_error,
            failed_samples: failed,
        })
    }

    fn scan_one(&self, u: &[f64], v_dir: &[f64], config: &BoundScanConfig) -> ScanSample {
        let uu = norm(u);
        let mut rungs = Vec::with_capacity(config.ladder_depth);
        for j in 1..=config.ladder_depth {
            let vv = uu * 2.0_f64.powi(-(j as i32)) / 2.0;
            let v: Vec<f64> = v_dir.iter().map(|c| c * vv).collect();
            match self.f_dimensionless(u, &v, config.tol) {
                Ok(out) => rungs.push(LadderRung {
                    v,
                    v_abs: vv,
                    f_value: out.value,
                    ratio: out.value / (vv * vv),
                    rel_error: if out.value > 0.0 {
                        out.error_estimate / out.value
                    } else {
                        0.0
                    },
                    empty_region: out.empty_region,
                }),
                Err(Error::QuadratureNonConvergence { achieved, .. }) => {
                    return ScanSample {
                        u: u.to_vec(),
                        status: SampleStatus::QuadratureFailed { achieved },
                        rungs,
                        small_v_slope: None,
                        slope_radii: vec![],
                    };
                }
                Err(_) => {
                    return ScanSample {
                        u: u.to_vec(),
                        status: SampleStatus::SkippedInadmissible {
                            reason: "rung evaluation rejected".into(),
                        },
                        rungs,
                        small_v_slope: None,
                        slope_radii: vec![],
                    };
                }
            }
        }
        // least-squares slope of ln F against ln |v| over the last rungs
        let usable: Vec<&LadderRung> = rungs
            .iter()
            .rev()
            .take(3)
            .filter(|r| r.f_value > 0.0 && !r.empty_region)
            .collect();
        let (slope, radii) = if usable.len() >= 2 {
            let pts: Vec<(f64, f64)> = usable
                .iter()
                .map(|r| (r.v_abs.ln(), r.f_value.ln()))
                .collect();
            let m = pts.len() as f64;
            let sx: f64 = pts.iter().map(|p| p.0).sum();
            let sy: f64 = pts.iter().map(|p| p.1).sum();
            let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
            let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
            (
                Some((m * sxy - sx * sy) / (m * sxx - sx * sx)),
                usable.iter().map(|r| r.v_abs).collect(),
            )
        } else {
            (None, vec![])
        };
        ScanSample {
            u: u.to_vec(),
            status: SampleStatus::Evaluated,
            rungs,
            small_v_slope: slope,
            slope_radii: radii,
        }
    }
}

fn decompose(v: &[f64], e1: &[f64]) -> (f64, f64) {
    let v_par: f64 = v.iter().zip(e1).map(|(a, b)| a * b).sum();
    let perp2: f64 = v
        .iter()
        .zip(e1)
        .map(|(a, b)| a - v_par * b)
        .map(|c| c * c)
        .sum();
    // the frame's e2 is chosen along the perpendicular part of v, except
    // in n = 2 where e2 = rot90(e1) fixes a handedness
    if v.len() == 2 {
        let e2 = [-e1[1], e1[0]];
        (v_par, v[0] * e2[0] + v[1] * e2[1])
    } else {
        (v_par, perp2.sqrt())
    }
}

fn random_direction(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    match n {
        2 => {
            let phi = rng.gen_range(0.0..2.0 * PI);
            vec![phi.cos(), phi.sin()]
        }
        _ => {
            let z: f64 = rng.gen_range(-1.0..1.0);
            let phi = rng.gen_range(0.0..2.0 * PI);
            let r = (1.0 - z * z).sqrt();
            vec![r * phi.cos(), r * phi.sin(), z]
        }
    }
}

/// Convenience wrapper building a context per call.
pub fn f_dimensionless(alpha: f64, n: usize, u: &[f64], v: &[f64], tol: f64) -> Result<FEval> {
    LemmaContext::new(alpha, n)?.f_dimensionless(u, v, tol)
}

/// Convenience wrapper building a context per call.
pub fn i11(alpha: f64, n: usize, x: &[f64], y: &[f64], t: f64, tol: f64) -> Result<FEval> {
    LemmaContext::new(alpha, n)?.i11(x, y, t, tol)
}

/// Configuration of a bound scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundScanConfig {
    pub num_samples: usize,
    /// Ladder depth J: rung j uses |v| = |u| 2^{-j} / 2.
    pub ladder_depth: usize,
    pub seed: u64,
    pub tol: f64,
    pub u_min: f64,
    pub u_max: f64,
    /// Explicit (u, v) pairs evaluated after the generated samples;
    /// inadmissible entries are skipped with a label.
    #[serde(default)]
    pub extra_samples: Vec<DimensionlessPair>,
}

impl Default for BoundScanConfig {
    fn default() -> Self {
        BoundScanConfig {
            num_samples: 100,
            ladder_depth: 6,
            seed: 42,
            tol: 1e-5,
            u_min: 0.2,
            u_max: 6.9,
            extra_samples: vec![],
        }
    }
}

impl BoundScanConfig {
    fn validate(&self) -> Result<()> {
        if !(self.u_min > 0.0 && self.u_max <= 7.0 && self.u_min < self.u_max) {
            return Err(Error::RecipeParameter {
                what: format!(
                    "|u| range ({}, {}) must satisfy 0 < u_min < u_max <= 7",
                    self.u_min, self.u_max
                ),
            });
        }
        if self.ladder_depth == 0 || self.ladder_depth > 16 {
            return Err(Error::RecipeParameter {
                what: "ladder depth must lie in [1, 16]".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LadderRung {
    pub v: Vec<f64>,
    pub v_abs: f64,
    pub f_value: f64,
    /// F / |v|^2, the quantity the quadratic bound controls.
    pub ratio: f64,
    pub rel_error: f64,
    pub empty_region: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SampleStatus {
    Evaluated,
    SkippedInadmissible { reason: String },
    QuadratureFailed { achieved: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanSample {
    pub u: Vec<f64>,
    pub status: SampleStatus,
    pub rungs: Vec<LadderRung>,
    /// Least-squares slope of ln F vs ln |v| over the smallest rungs.
    pub small_v_slope: Option<f64>,
    /// The |v| radii the slope estimate used.
    pub slope_radii: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundScanReport {
    pub alpha: f64,
    pub n: usize,
    pub config: BoundScanConfig,
    pub samples: Vec<ScanSample>,
    pub sup_ratio: Option<f64>,
    pub min_slope: Option<f64>,
    pub max_rel_error: f64,
    pub failed_samples: usize,
}

impl BoundScanReport {
    /// Flat CSV for plotting: one row per evaluated rung.
    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        let axes = ["x", "y", "z"];
        for a in 0..self.n {
            write!(w, "u{},", axes[a])?;
        }
        for a in 0..self.n {
            write!(w, "v{},", axes[a])?;
        }
        writeln!(w, "F,ratio")?;
        for s in &self.samples {
            if matches!(s.status, SampleStatus::SkippedInadmissible { .. }) {
                continue;
            }
            for r in &s.rungs {
                for c in &s.u {
                    write!(w, "{},", crate::field::fmt_f64(*c))?;
                }
                for c in &r.v {
                    write!(w, "{},", crate::field::fmt_f64(*c))?;
                }
                writeln!(
                    w,
                    "{},{}",
                    crate::field::fmt_f64(r.f_value),
                    crate::field::fmt_f64(r.ratio)
                )?;
            }
        }
        Ok(())
    }
}

/// Outcome of a gradient-integral identity check.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GradIntegralCheck {
    pub quadrature: f64,
    pub closed_form: f64,
    /// The integral converges exactly when alpha exceeds this value.
    pub finite_for_alpha_above: f64,
}

/// Default tolerance for the gradient-integral checks.
pub const GRAD_CHECK_TOL: f64 = 1e-8;

fn grad_shell_quadrature(
    alpha: f64,
    n: usize,
    c_radius: f64,
    rel_tol: f64,
    moment: bool,
) -> Result<f64> {
    let sigma = sphere_area(n);
    let opts = QuadOptions {
        rel_tol,
        min_width_frac: 1e-9,
        max_evals: 20_000_000,
        ..QuadOptions::default()
    };
    let f = |x: &[f64; 1]| -> f64 {
        let s = x[0];
        let weight = if moment { s } else { 1.0 };
        // radial shells: sigma s^{n-1} |grad L|(s), optionally moment-weighted
        sigma
            * s.powi(n as i32 - 1)
            * weight
            * grad_riesz_magnitude(alpha, n, &[s]).expect("s > 0 inside the cell")
    };
    Ok(integrate(f, &[([0.0], [c_radius])], &[[0.0]], &opts)?.value)
}

/// Quadrature of the first radial moment of the gradient magnitude,
/// int_{|w| <= C} |w| |grad L|(w) dw, against its closed form
/// sigma_{n-1} tau(alpha) (n - alpha) C^alpha / alpha. The moment is
/// finite for every alpha > 0 and diverges like 1/alpha at the origin
/// of the alpha range.
pub fn grad_integral_check(
    alpha: f64,
    n: usize,
    c_radius: f64,
    rel_tol: f64,
) -> Result<GradIntegralCheck> {
    if !(c_radius.is_finite() && c_radius > 0.0) {
        return Err(Error::InvalidRadii("C must be a positive real"));
    }
    let closed =
        sphere_area(n) * tau(alpha, n)? * (n as f64 - alpha) * c_radius.powf(alpha) / alpha;
    Ok(GradIntegralCheck {
        quadrature: grad_shell_quadrature(alpha, n, c_radius, rel_tol, true)?,
        closed_form: closed,
        finite_for_alpha_above: 0.0,
    })
}

/// Quadrature of the bare gradient integral int_{|w| <= C} |grad L|(w) dw
/// against sigma_{n-1} tau(alpha) (n - alpha) C^{alpha-1} / (alpha - 1);
/// this is the integral whose finiteness needs alpha > 1, i.e. the
/// combination of alpha > n/2 with n/2 >= 1.
pub fn grad_integral_check_unweighted(
    alpha: f64,
    n: usize,
    c_radius: f64,
    rel_tol: f64,
) -> Result<GradIntegralCheck> {
    if !(c_radius.is_finite() && c_radius > 0.0) {
        return Err(Error::InvalidRadii("C must be a positive real"));
    }
    if alpha <= 1.0 {
        return Err(Error::AlphaRange {
            alpha,
            lo: 1.0,
            hi: n as f64,
        });
    }
    let closed = sphere_area(n) * tau(alpha, n)? * (n as f64 - alpha)
        * c_radius.powf(alpha - 1.0)
        / (alpha - 1.0);
    Ok(GradIntegralCheck {
        quadrature: grad_shell_quadrature(alpha, n, c_radius, rel_tol, false)?,
        closed_form: closed,
        finite_for_alpha_above: 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx2() -> LemmaContext {
        LemmaContext::new(1.5, 2).unwrap()
    }

    #[test]
    fn empty_region_is_flagged_not_an_error() {
        let ctx = ctx2();
        // 2|v| >= |u| + 1 makes the annulus miss the unit ball entirely
        let out = ctx
            .f_dimensionless(&[0.5, 0.0], &[1.6, 0.0], 1e-5)
            .unwrap();
        assert!(out.empty_region);
        assert_eq!(out.value, 0.0);
        // |u| >= 7 also empties the region: |u - z| > 6 for all z in B_0
        let out = ctx
            .f_dimensionless(&[7.5, 0.0], &[0.5, 0.0], 1e-5)
            .unwrap();
        assert!(out.empty_region);
    }

    #[test]
    fn zero_v_is_rejected() {
        let ctx = ctx2();
        assert!(matches!(
            ctx.f_dimensionless(&[3.0, 0.0], &[0.0, 0.0], 1e-5),
            Err(Error::ZeroVector { .. })
        ));
    }

    #[test]
    fn tolerance_range_is_enforced() {
        let ctx = ctx2();
        assert!(matches!(
            ctx.f_dimensionless(&[3.0, 0.0], &[0.5, 0.0], 1e-3),
            Err(Error::ToleranceRange { .. })
        ));
        assert!(matches!(
            ctx.f_dimensionless(&[3.0, 0.0], &[0.5, 0.0], 1e-11),
            Err(Error::ToleranceRange { .. })
        ));
    }

    #[test]
    fn f_rotation_invariance() {
        let ctx = ctx2();
        let tol = 1e-6;
        let (u, v) = ([3.0, 0.4], [0.5, -0.3]);
        let base = ctx.f_dimensionless(&u, &v, tol).unwrap();
        for angle in [0.7f64, 2.1] {
            let (c, s) = (angle.cos(), angle.sin());
            let ru = [c * u[0] - s * u[1], s * u[0] + c * u[1]];
            let rv = [c * v[0] - s * v[1], s * v[0] + c * v[1]];
            let rot = ctx.f_dimensionless(&ru, &rv, tol).unwrap();
            assert!(
                (rot.value - base.value).abs() <= 20.0 * tol * base.value,
                "angle {angle}: {} vs {}",
                rot.value,
                base.value
            );
        }
    }

    #[test]
    fn f_reflection_proves_nothing_but_both_sides_are_finite() {
        let ctx = ctx2();
        let plus = ctx.f_dimensionless(&[2.0, 0.5], &[0.4, 0.1], 1e-5).unwrap();
        let minus = ctx
            .f_dimensionless(&[2.0, 0.5], &[-0.4, -0.1], 1e-5)
            .unwrap();
        assert!(plus.value.is_finite() && plus.value > 0.0);
        assert!(minus.value.is_finite() && minus.value > 0.0);
    }

    #[test]
    fn i11_scaling_is_structural() {
        let ctx = ctx2();
        let (x, y, t) = ([2.4f64, 0.8], [0.3f64, -0.2], 1.3f64);
        let base = ctx.i11(&x, &y, t, 1e-5).unwrap();
        for lambda in [0.5f64, 2.0, 4.0] {
            let lx = [lambda * x[0], lambda * x[1]];
            let ly = [lambda * y[0], lambda * y[1]];
            let scaled = ctx.i11(&lx, &ly, lambda * t, 1e-5).unwrap();
            let back = scaled.value * lambda.powi(4);
            assert!(
                (back - base.value).abs() <= 1e-10 * base.value,
                "lambda {lambda}: {back} vs {}",
                base.value
            );
        }
    }

    #[test]
    fn i11_rejects_degenerate_inputs() {
        let ctx = ctx2();
        assert!(ctx.i11(&[1.0, 0.0], &[0.1, 0.0], 0.0, 1e-5).is_err());
        assert!(matches!(
            ctx.i11(&[1.0, 0.0], &[0.0, 0.0], 1.0, 1e-5),
            Err(Error::ZeroVector { .. })
        ));
    }

    #[test]
    fn admissible_triples_are_finite() {
        let ctx = ctx2();
        // t > |x|/7 > 2|y|/7
        for (x, y, t) in [
            ([3.5f64, 0.0], [0.4f64, 0.3], 1.0f64),
            ([1.0, 1.0], [0.2, -0.3], 0.9),
        ] {
            let out = ctx.i11(&x, &y, t, 1e-5).unwrap();
            assert!(out.value.is_finite());
            assert!(out.value >= 0.0);
        }
    }

    #[test]
    fn grad_integral_check_unit_case() {
        // sigma_1 tau(1) (2-1) / 1 = 2 pi / (2 pi) = 1 at C = 1
        let out = grad_integral_check(1.0, 2, 1.0, 1e-8).unwrap();
        assert!((out.closed_form - 1.0).abs() < 1e-14);
        assert!(
            (out.quadrature - out.closed_form).abs() <= 1e-6 * out.closed_form,
            "{out:?}"
        );
        // linear in C when alpha = 1
        let out2 = grad_integral_check(1.0, 2, 2.0, 1e-8).unwrap();
        assert!((out2.closed_form - 2.0).abs() < 1e-14);
        assert!((out2.quadrature - 2.0).abs() <= 2e-6);
    }

    #[test]
    fn grad_integral_alpha_to_zero_diverges_like_inv_alpha() {
        let c1 = grad_integral_check(0.2, 2, 1.0, 1e-5).unwrap();
        let c2 = grad_integral_check(0.1, 2, 1.0, 1e-5).unwrap();
        assert!(c2.closed_form > 1.8 * c1.closed_form);
        assert!((c2.quadrature - c2.closed_form).abs() <= 1e-3 * c2.closed_form);
    }

    #[test]
    fn unweighted_grad_integral_matches_its_antiderivative() {
        for (alpha, n) in [(1.2, 2usize), (1.6, 2), (1.8, 3), (2.4, 3)] {
            let out = grad_integral_check_unweighted(alpha, n, 1.5, 1e-8).unwrap();
            assert!(
                (out.quadrature - out.closed_form).abs() <= 1e-6 * out.closed_form,
                "alpha={alpha} n={n}: {out:?}"
            );
            assert_eq!(out.finite_for_alpha_above, 1.0);
        }
        // at alpha <= 1 the integral diverges and is rejected
        assert!(matches!(
            grad_integral_check_unweighted(1.0, 2, 1.0, 1e-6),
            Err(Error::AlphaRange { .. })
        ));
    }

    #[test]
    fn scan_skips_inadmissible_custom_samples() {
        let ctx = ctx2();
        let config = BoundScanConfig {
            num_samples: 2,
            ladder_depth: 3,
            tol: 1e-5,
            extra_samples: vec![
                DimensionlessPair {
                    u: vec![3.0, 0.0],
                    v: vec![2.0, 0.0], // |v| >= |u|/2
                },
                DimensionlessPair {
                    u: vec![8.0, 0.0], // |u| >= 7
                    v: vec![0.5, 0.0],
                },
            ],
            ..BoundScanConfig::default()
        };
        let report = ctx.bound_scan(&config).unwrap();
        let skipped = report
            .samples
            .iter()
            .filter(|s| matches!(s.status, SampleStatus::SkippedInadmissible { .. }))
            .count();
        assert_eq!(skipped, 2);
        assert!(report.sup_ratio.unwrap().is_finite());
    }

    #[test]
    fn small_scan_has_quadratic_slopes() {
        let ctx = ctx2();
        let config = BoundScanConfig {
            num_samples: 4,
            ladder_depth: 5,
            tol: 1e-5,
            seed: 7,
            ..BoundScanConfig::default()
        };
        let report = ctx.bound_scan(&config).unwrap();
        assert_eq!(report.failed_samples, 0);
        let min_slope = report.min_slope.unwrap();
        assert!(min_slope >= 1.85, "min slope {min_slope}");
        let mut csv = vec![];
        report.write_csv(&mut csv).unwrap();
        assert!(String::from_utf8(csv).unwrap().starts_with("ux,uy,vx,vy,F,ratio"));
    }

    #[test]
    fn n3_smoke_rotation_and_scaling() {
        let ctx = LemmaContext::new(2.2, 3).unwrap();
        let u = [1.5, 0.5, -0.3];
        let v = [0.2, -0.1, 0.15];
        let base = ctx.f_dimensionless(&u, &v, 1e-4).unwrap();
        assert!(base.value.is_finite() && base.value > 0.0);
        // rotate by 90 degrees about z
        let ru = [-u[1], u[0], u[2]];
        let rv = [-v[1], v[0], v[2]];
        let rot = ctx.f_dimensionless(&ru, &rv, 1e-4).unwrap();
        assert!(
            (rot.value - base.value).abs() <= 40.0 * 1e-4 * base.value,
            "{} vs {}",
            rot.value,
            base.value
        );
        // scaling identity: lambda^{2n} = 2^6 for lambda = 2, n = 3
        let a = ctx.i11(&u, &v, 1.0, 1e-4).unwrap();
        let b = ctx
            .i11(
                &[2.0 * u[0], 2.0 * u[1], 2.0 * u[2]],
                &[2.0 * v[0], 2.0 * v[1], 2.0 * v[2]],
                2.0,
                1e-4,
            )
            .unwrap();
        assert!((b.value * 2.0f64.powi(6) - a.value).abs() <= 1e-8 * a.value);
    }

    #[test]
    fn unsupported_dimension_is_rejected() {
        assert!(matches!(
            LemmaContext::new(2.0, 4),
            Err(Error::UnsupportedDimension { .. })
        ));
    }
}
