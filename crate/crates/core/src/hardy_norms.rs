//! Discrete surrogates for the Hardy space and fractional Sobolev norms,
//! and the norm-equivalence experiments built on them.
//!
//! The Hardy norm surrogate is the L^1 norm of the scale-grid maximal
//! function of ball averages; the Sobolev-over-Hardy norm adds the same
//! functional of the fractional Laplacian. Both use the same scale grid
//! as the square function so truncation effects cancel in ratio studies.

use crate::convolve::{ball_average_with, fractional_laplacian, BallSymbolTable, Normalization};
use crate::error::{Error, Result};
use crate::field::{fmt_f64, lp_norm, Field};
use crate::kernels::KernelSpec;
use crate::squarefn::{square_function, ScaleGrid, ScaleGridSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;

/// L^1 norm of the pointwise supremum of |A_t f| over the scale grid.
pub fn h1_norm(f: &Field, scales: &ScaleGrid) -> Result<f64> {
    if !f.is_mean_zero() {
        return Err(Error::NotMeanZero);
    }
    if scales.grid() != f.grid() {
        return Err(Error::ScaleGridMismatch);
    }
    let grid = *f.grid();
    let averaged: Vec<Vec<f64>> = scales
        .scales()
        .par_iter()
        .map(|&t| -> Result<Vec<f64>> {
            let table = BallSymbolTable::new(grid, t, Normalization::Discrete)?;
            let a = ball_average_with(f, &table)?;
            Ok(a.values().iter().map(|v| v.abs()).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    // pointwise max is order-independent, hence deterministic
    let mut sup = vec![0.0f64; grid.total_samples()];
    for layer in &averaged {
        for (s, &v) in sup.iter_mut().zip(layer) {
            *s = s.max(v);
        }
    }
    lp_norm(&Field::from_values(grid, sup)?, 1.0)
}

/// Sobolev-over-Hardy surrogate:
/// h1_norm(f) + h1_norm((-Delta)^{alpha/2} f).
pub fn sobolev_h1_norm(f: &Field, alpha: f64, scales: &ScaleGrid) -> Result<f64> {
    let base = h1_norm(f, scales)?;
    let lifted = fractional_laplacian(f, alpha)?;
    Ok(base + h1_norm(&lifted, scales)?)
}

/// Norms and equivalence ratios for one field.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegularityReport {
    pub alpha: f64,
    pub grid_dimension: usize,
    pub samples_per_axis: usize,
    pub period: f64,
    pub scales: ScaleGridSpec,
    pub h1_norm: f64,
    pub sobolev_h1_norm: f64,
    pub u_alpha_l1: f64,
    /// L^1 norms of the binomial square functions, keyed by k.
    pub e_tilde_l1: BTreeMap<String, f64>,
    /// sobolev / (h1 + u_alpha); None when the denominator vanishes.
    pub ratio_thm1: Option<f64>,
    /// sobolev / (h1 + e_tilde(k)), keyed by k; None entries are omitted.
    pub ratio_thm2: BTreeMap<String, Option<f64>>,
}

fn ratio(numerator: f64, denominator: f64) -> Option<f64> {
    if denominator > 0.0 {
        Some(numerator / denominator)
    } else {
        None
    }
}

/// Compute every norm in the Theorem 1.1 / Theorem 2 equivalence and
/// assemble a report. `k_list` selects the binomial orders for the
/// second theorem; it may be empty.
pub fn equivalence_report(
    f: &Field,
    alpha: f64,
    k_list: &[usize],
    scales: &ScaleGrid,
) -> Result<RegularityReport> {
    let grid = *f.grid();
    let h1 = h1_norm(f, scales)?;
    let sobolev = sobolev_h1_norm(f, alpha, scales)?;
    let kernel = KernelSpec::ball(grid.dimension())?;
    let u = square_function(f, alpha, &kernel, scales)?;
    let u_l1 = lp_norm(&u.result, 1.0)?;

    let mut e_tilde_l1 = BTreeMap::new();
    let mut ratio_thm2 = BTreeMap::new();
    for &k in k_list {
        let e = crate::squarefn::e_tilde(f, alpha, k, scales)?;
        let l1 = lp_norm(&e.result, 1.0)?;
        e_tilde_l1.insert(k.to_string(), l1);
        ratio_thm2.insert(k.to_string(), ratio(sobolev, h1 + l1));
    }

    Ok(RegularityReport {
        alpha,
        grid_dimension: grid.dimension(),
        samples_per_axis: grid.samples_per_axis(),
        period: grid.period(),
        scales: ScaleGridSpec::of(scales),
        h1_norm: h1,
        sobolev_h1_norm: sobolev,
        u_alpha_l1: u_l1,
        e_tilde_l1,
        ratio_thm1: ratio(sobolev, h1 + u_l1),
        ratio_thm2,
    })
}

/// CSV header matching [`write_report_csv_row`].
pub fn write_report_csv_header(w: &mut impl Write, k_list: &[usize]) -> Result<()> {
    write!(
        w,
        "label,alpha,n,samples_per_axis,h1_norm,sobolev_h1_norm,u_alpha_l1,ratio_thm1"
    )?;
    for k in k_list {
        write!(w, ",e_tilde_l1_k{k},ratio_thm2_k{k}")?;
    }
    writeln!(w)?;
    Ok(())
}

/// One CSV row per report; undefined ratios render as `undefined`.
pub fn write_report_csv_row(
    w: &mut impl Write,
    label: &str,
    report: &RegularityReport,
    k_list: &[usize],
) -> Result<()> {
    let opt = |v: &Option<f64>| match v {
        Some(x) => fmt_f64(*x),
        None => "undefined".to_string(),
    };
    write!(
        w,
        "{label},{},{},{},{},{},{},{}",
        fmt_f64(report.alpha),
        report.grid_dimension,
        report.samples_per_axis,
        fmt_f64(report.h1_norm),
        fmt_f64(report.sobolev_h1_norm),
        fmt_f64(report.u_alpha_l1),
        opt(&report.ratio_thm1),
    )?;
    for k in k_list {
        let key = k.to_string();
        let l1 = report
            .e_tilde_l1
            .get(&key)
            .map(|v| fmt_f64(*v))
            .unwrap_or_else(|| "undefined".to_string());
        let r2 = report
            .ratio_thm2
            .get(&key)
            .map(|v| opt(v))
            .unwrap_or_else(|| "undefined".to_string());
        write!(w, ",{l1},{r2}")?;
    }
    writeln!(w)?;
    Ok(())
}
