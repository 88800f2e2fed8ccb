//! Generators of fields with known or controlled regularity.
//!
//! All generators emit mean-zero fields and are deterministic given the
//! recipe; the spectral generator draws phases from a counter-based
//! SplitMix64 stream keyed by the signed frequency vector, so refining
//! the grid preserves every retained mode.

use crate::error::{Error, Result};
use crate::fft;
use crate::field::{Field, GridSpec};
use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

/// Identifier of the phase-draw algorithm documented in [`splitmix64`].
pub const NOISE_ALGORITHM: &str = "splitmix64-v1";

/// A reproducible field construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldRecipe {
    /// Smooth compactly supported bump at `center` minus its antipodal
    /// copy; exactly mean-zero and infinitely smooth.
    MeanZeroAtom { center: Vec<f64>, width: f64 },
    /// |x - center|^beta under a smooth cutoff, antipodally corrected.
    SingularBump {
        center: Vec<f64>,
        beta: f64,
        cutoff_width: f64,
    },
    /// Random-phase synthesis with amplitude |xi|^{-s} on nonzero modes.
    SpectralNoise {
        decay_exponent: f64,
        seed: u64,
        #[serde(default = "default_algorithm")]
        algorithm: String,
    },
}

fn default_algorithm() -> String {
    NOISE_ALGORITHM.to_string()
}

/// Generate the field a recipe describes.
pub fn generate(recipe: &FieldRecipe, grid: GridSpec) -> Result<Field> {
    match recipe {
        FieldRecipe::MeanZeroAtom { center, width } => mean_zero_atom(grid, center, *width),
        FieldRecipe::SingularBump {
            center,
            beta,
            cutoff_width,
        } => singular_bump(grid, center, *beta, *cutoff_width),
        FieldRecipe::SpectralNoise {
            decay_exponent,
            seed,
            algorithm,
        } => {
            if algorithm != NOISE_ALGORITHM {
                return Err(Error::RecipeParameter {
                    what: format!(
                        "unknown noise algorithm {algorithm:?}; this build implements {NOISE_ALGORITHM:?}"
                    ),
                });
            }
            spectral_noise(grid, *decay_exponent, *seed)
        }
    }
}

/// Periodic minimum-image distance between a grid point and a center.
fn torus_distance(x: &[f64], center: &[f64], period: f64) -> f64 {
    x.iter()
        .zip(center)
        .map(|(&a, &c)| {
            let d = (a - c).abs() % period;
            let d = d.min(period - d);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

fn check_center(center: &[f64], grid: &GridSpec) -> Result<()> {
    if center.len() != grid.dimension() {
        return Err(Error::RecipeParameter {
            what: format!(
                "center has {} coordinates, grid dimension is {}",
                center.len(),
                grid.dimension()
            ),
        });
    }
    if center.iter().any(|c| !c.is_finite()) {
        return Err(Error::RecipeParameter {
            what: "center coordinates must be finite".into(),
        });
    }
    Ok(())
}

fn antipode(center: &[f64], period: f64) -> Vec<f64> {
    center
        .iter()
        .map(|&c| (c + period / 2.0) % period)
        .collect()
}

/// C-infinity bump profile: exp(1 - 1/(1 - s^2)) for s < 1, else 0.
fn bump_profile(s: f64) -> f64 {
    if s >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

/// Smooth plateau cutoff: 1 on [0, 1/2], rolls off to 0 at 1.
fn plateau_cutoff(s: f64) -> f64 {
    if s <= 0.5 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        let u = 2.0 * s - 1.0;
        (1.0 - 1.0 / (1.0 - u * u)).exp()
    }
}

/// Smooth bump at `center` minus the identical bump at the antipodal
/// point. Supports are disjoint for width <= L/4, so the mean vanishes
/// by construction.
pub fn mean_zero_atom(grid: GridSpec, center: &[f64], width: f64) -> Result<Field> {
    check_center(center, &grid)?;
    let l = grid.period();
    if !(width > 0.0 && width <= l / 4.0) {
        return Err(Error::RecipeParameter {
            what: format!("atom width {width} must lie in (0, L/4 = {}]", l / 4.0),
        });
    }
    let anti = antipode(center, l);
    let center = center.to_vec();
    crate::field::make_field(grid, move |x| {
        let d1 = torus_distance(x, &center, l);
        let d2 = torus_distance(x, &anti, l);
        bump_profile(d1 / width) - bump_profile(d2 / width)
    })
}

/// |x - center|^beta under a smooth cutoff, antipodally mean-corrected.
/// For beta < 0 the value at the tip is capped at the grid-scale ball
/// average of the profile, n h^beta / (n + beta).
pub fn singular_bump(
    grid: GridSpec,
    center: &[f64],
    beta: f64,
    cutoff_width: f64,
) -> Result<Field> {
    check_center(center, &grid)?;
    let n = grid.dimension() as f64;
    let l = grid.period();
    if !(beta > -n / 2.0 && beta < 2.0) {
        return Err(Error::RecipeParameter {
            what: format!("beta {beta} must lie in (-n/2, 2)"),
        });
    }
    if !(cutoff_width > 0.0 && cutoff_width <= l / 4.0) {
        return Err(Error::RecipeParameter {
            what: format!("cutoff width {cutoff_width} must lie in (0, L/4]"),
        });
    }
    let cap = if beta < 0.0 {
        n * grid.spacing().powf(beta) / (n + beta)
    } else {
        f64::INFINITY
    };
    let anti = antipode(center, l);
    let center = center.to_vec();
    // r^beta saturates to the cap at the tip (powf(0, beta<0) is +inf)
    let profile = move |r: f64| -> f64 { r.powf(beta).min(cap) * plateau_cutoff(r / cutoff_width) };
    crate::field::make_field(grid, move |x| {
        profile(torus_distance(x, &center, l)) - profile(torus_distance(x, &anti, l))
    })
}

/// SplitMix64 keyed by (seed, counter); the documented generator behind
/// [`NOISE_ALGORITHM`]. Returns a uniform u64.
pub fn splitmix64(seed: u64, counter: u64) -> u64 {
    let mut z = seed
        .wrapping_add(counter.wrapping_mul(0x9E3779B97F4A7C15))
        .wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

fn unit_uniform(bits: u64) -> f64 {
    (bits >> 11) as f64 / (1u64 << 53) as f64
}

/// Zig-zag packing of the signed frequency vector into the draw counter,
/// 16 bits per axis; stable across grid refinement.
fn mode_counter(k: &[i64]) -> u64 {
    let mut c = 0u64;
    for &comp in k {
        let z = if comp >= 0 {
            (comp as u64) << 1
        } else {
            ((-comp as u64) << 1) - 1
        };
        debug_assert!(z < (1 << 16));
        c = (c << 16) | z;
    }
    c
}

/// Random-phase spectral synthesis: amplitude |xi|^{-s} on nonzero
/// frequencies, Hermitian-symmetric phases so samples are real, zero DC.
pub fn spectral_noise(grid: GridSpec, decay_exponent: f64, seed: u64) -> Result<Field> {
    let n = grid.dimension();
    let nf = n as f64;
    if !(decay_exponent > 0.0 && decay_exponent < nf + 2.0) {
        return Err(Error::RecipeParameter {
            what: format!(
                "decay exponent {decay_exponent} must lie in (0, n + 2 = {})",
                nf + 2.0
            ),
        });
    }
    if n > 4 {
        return Err(Error::RecipeParameter {
            what: "spectral noise supports n <= 4 (counter packing)".into(),
        });
    }
    let samples = grid.samples_per_axis();
    let total = grid.total_samples();
    let l = grid.period();
    let mut spectrum = vec![Complex::new(0.0, 0.0); total];
    let scale = total as f64; // continuum-coefficient convention
    let mut idx = vec![0usize; n];
    let mut signed = vec![0i64; n];
    for flat in 0..total {
        for (a, &i) in idx.iter().enumerate() {
            signed[a] = if i <= samples / 2 {
                i as i64
            } else {
                i as i64 - samples as i64
            };
        }
        if signed.iter().all(|&c| c == 0) {
            advance(&mut idx, samples, flat, total);
            continue;
        }
        let k_abs = signed.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt();
        let amp = (k_abs / l).powf(-decay_exponent) * scale;
        // self-paired modes (all components 0 or N/2) must stay real
        let self_paired = idx.iter().all(|&i| i == 0 || i == samples / 2);
        let draw = splitmix64(seed, mode_counter(&signed));
        if self_paired {
            let sign = if draw & 1 == 0 { 1.0 } else { -1.0 };
            spectrum[flat] = Complex::new(sign * amp, 0.0);
        } else {
            // canonical member of the (k, -k) pair: first nonzero
            // component positive; the partner takes the conjugate
            let canonical = signed.iter().find(|&&c| c != 0).map(|&c| c > 0).unwrap();
            if canonical {
                let theta = 2.0 * std::f64::consts::PI * unit_uniform(draw);
                spectrum[flat] = Complex::from_polar(amp, theta);
            } else {
                let mirrored: Vec<i64> = signed.iter().map(|&c| -c).collect();
                let draw = splitmix64(seed, mode_counter(&mirrored));
                let theta = 2.0 * std::f64::consts::PI * unit_uniform(draw);
                spectrum[flat] = Complex::from_polar(amp, theta).conj();
            }
        }
        advance(&mut idx, samples, flat, total);
    }
    let values = fft::inverse_to_real(spectrum, &grid.shape());
    Field::from_values(grid, values)
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
