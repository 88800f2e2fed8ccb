//! Sampled periodic fields, grid geometry, elementary norms, and file I/O.
//!
//! The domain is the torus [0, L)^n sampled on a uniform N^n lattice,
//! row-major with the last axis contiguous. Fields are immutable after
//! construction; every operation returns a new field.

use crate::error::{Error, Result};
use crate::sum::{pairwise_sum, sorted_pairwise_map_sum};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

/// Magic bytes of the binary field format.
pub const FIELD_MAGIC: [u8; 6] = *b"SQFN1\0";

/// Relative threshold under which a field counts as mean-zero.
pub const MEAN_ZERO_REL: f64 = 1e-12;

/// Geometry of a periodic sampling grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    n: usize,
    samples_per_axis: usize,
    period: f64,
}

impl GridSpec {
    pub fn new(n: usize, samples_per_axis: usize, period: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::GridDimension { n });
        }
        if samples_per_axis < 8 || !samples_per_axis.is_power_of_two() {
            return Err(Error::GridSamples {
                samples: samples_per_axis,
            });
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::GridPeriod { period });
        }
        Ok(GridSpec {
            n,
            samples_per_axis,
            period,
        })
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn samples_per_axis(&self) -> usize {
        self.samples_per_axis
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Grid spacing h = L / N.
    pub fn spacing(&self) -> f64 {
        self.period / self.samples_per_axis as f64
    }

    /// Total number of samples N^n.
    pub fn total_samples(&self) -> usize {
        self.samples_per_axis.pow(self.n as u32)
    }

    /// Volume element h^n of one grid cell.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.n as i32)
    }

    pub fn shape(&self) -> Vec<usize> {
        vec![self.samples_per_axis; self.n]
    }

    /// Physical coordinates of the sample with the given multi-index.
    pub fn coordinates(&self, index: &[usize]) -> Vec<f64> {
        let h = self.spacing();
        index.iter().map(|&i| i as f64 * h).collect()
    }

    /// Decompose a flat row-major index into a multi-index.
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0usize; self.n];
        for a in (0..self.n).rev() {
            idx[a] = flat % self.samples_per_axis;
            flat /= self.samples_per_axis;
        }
        idx
    }
}

/// Real-valued samples on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    values: Vec<f64>,
    mean_zero: bool,
}

impl Field {
    /// Wrap raw samples, validating the count and finiteness.
    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.total_samples() {
            return Err(Error::ValueCountMismatch {
                expected: grid.total_samples(),
                found: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSample {
                index: grid.multi_index(pos),
            });
        }
        let mean_zero = mean_is_negligible(&values);
        Ok(Field {
            grid,
            values,
            mean_zero,
        })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Field {
            values: vec![0.0; grid.total_samples()],
            grid,
            mean_zero: true,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_mean_zero(&self) -> bool {
        self.mean_zero
    }

    /// Arithmetic mean of the samples (pairwise accumulation).
    pub fn mean(&self) -> f64 {
        pairwise_sum(&self.values) / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, &v| m.max(v.abs()))
    }

    /// Pointwise map producing a new field on the same grid.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Field::from_values(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Field::from_values(self.grid, values)
    }
}

fn mean_is_negligible(values: &[f64]) -> bool {
    let mean = pairwise_sum(values) / values.len() as f64;
    let max = values.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
    mean.abs() <= MEAN_ZERO_REL * max
}

/// Sample a pointwise function on the grid.
///
/// The sampler receives physical coordinates in [0, L)^n.
pub fn make_field(grid: GridSpec, sampler: impl Fn(&[f64]) -> f64) -> Result<Field> {
    let total = grid.total_samples();
    let n = grid.dimension();
    let samples = grid.samples_per_axis();
    let h = grid.spacing();
    let mut values = Vec::with_capacity(total);
    let mut idx = vec![0usize; n];
    let mut coords = vec![0.0f64; n];
    for flat in 0..total {
        for a in 0..n {
            coords[a] = idx[a] as f64 * h;
        }
        let v = sampler(&coords);
        if !v.is_finite() {
            return Err(Error::NonFiniteSample { index: idx });
        }
        values.push(v);
        // advance the row-major multi-index
        if flat + 1 < total {
            let mut a = n - 1;
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
    }
    Field::from_values(grid, values)
}

/// Riemann-sum L^p norm, p in {1, 2}: (sum |v|^p h^n)^(1/p).
///
/// Magnitudes are sorted before pairwise accumulation, so the result is
/// bitwise invariant under any permutation of the samples.
pub fn lp_norm(f: &Field, p: f64) -> Result<f64> {
    let hn = f.grid.cell_volume();
    if p == 1.0 {
        Ok(sorted_pairwise_map_sum(f.values(), f64::abs) * hn)
    } else if p == 2.0 {
        Ok((sorted_pairwise_map_sum(f.values(), |v| v * v) * hn).sqrt())
    } else {
        Err(Error::UnsupportedNorm { p })
    }
}

/// Discrete inner product <f, g> = sum f g h^n (test and diagnostic use).
pub fn inner_product(f: &Field, g: &Field) -> Result<f64> {
    if f.grid != g.grid {
        return Err(Error::GridMismatch);
    }
    let prods: Vec<f64> = f
        .values
        .iter()
        .zip(&g.values)
        .map(|(&a, &b)| a * b)
        .collect();
    Ok(pairwise_sum(&prods) * f.grid.cell_volume())
}

/// Circular shift of the samples by an integer lattice vector.
pub fn translate(f: &Field, shift: &[usize]) -> Result<Field> {
    let grid = f.grid;
    let n = grid.dimension();
    if shift.len() != n {
        return Err(Error::ShiftOutOfRange {
            axis: shift.len().min(n),
            shift: shift.len() as i64,
            samples: n,
        });
    }
    let samples = grid.samples_per_axis();
    for (axis, &s) in shift.iter().enumerate() {
        if s >= samples {
            return Err(Error::ShiftOutOfRange {
                axis,
                shift: s as i64,
                samples,
            });
        }
    }
    let total = grid.total_samples();
    let mut out = vec![0.0f64; total];
    // out[i] = f[(i + shift) mod N] axis-wise
    let mut idx = vec![0usize; n];
    for flat in 0..total {
        let mut src = 0usize;
        for a in 0..n {
            let j = (idx[a] + shift[a]) % samples;
            src = src * samples + j;
        }
        out[flat] = f.values[src];
        if flat + 1 < total {
            let mut a = n - 1;
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
    }
    Ok(Field {
        grid,
        values: out,
        mean_zero: f.mean_zero,
    })
}

/// Samples of f(2x): the dilation f_2[i] = f[(2 i) mod N] on the same grid.
pub fn dilate_by_two(f: &Field) -> Field {
    let grid = f.grid;
    let n = grid.dimension();
    let samples = grid.samples_per_axis();
    let total = grid.total_samples();
    let mut out = vec![0.0f64; total];
    let mut idx = vec![0usize; n];
    for flat in 0..total {
        let mut src = 0usize;
        for &i in idx.iter() {
            src = src * samples + (2 * i) % samples;
        }
        out[flat] = f.values[src];
        if flat + 1 < total {
            let mut a = n - 1;
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
    }
    Field {
        grid,
        values: out,
        mean_zero: f.mean_zero,
    }
}

/// Write a field in the binary format: magic, u32 n, u32 N, f64 L, then
/// N^n little-endian f64 samples in row-major order.
pub fn write_field(f: &Field, path: impl AsRef<Path>) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_field_to(f, &mut w)
}

pub fn write_field_to(f: &Field, w: &mut impl Write) -> Result<()> {
    w.write_all(&FIELD_MAGIC)?;
    w.write_all(&(f.grid.dimension() as u32).to_le_bytes())?;
    w.write_all(&(f.grid.samples_per_axis() as u32).to_le_bytes())?;
    w.write_all(&f.grid.period().to_le_bytes())?;
    for v in &f.values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_field(path: impl AsRef<Path>) -> Result<Field> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    read_field_from(&mut r)
}

pub fn read_field_from(r: &mut impl Read) -> Result<Field> {
    let mut magic = [0u8; 6];
    read_exact_or(r, &mut magic, Error::BadMagic)?;
    if magic != FIELD_MAGIC {
        return Err(Error::BadMagic);
    }
    let mut b4 = [0u8; 4];
    read_exact_or(r, &mut b4, Error::DimensionMismatch { n: 0, samples: 0 })?;
    let n = u32::from_le_bytes(b4);
    read_exact_or(r, &mut b4, Error::DimensionMismatch { n, samples: 0 })?;
    let samples = u32::from_le_bytes(b4);
    let mut b8 = [0u8; 8];
    read_exact_or(r, &mut b8, Error::DimensionMismatch { n, samples })?;
    let period = f64::from_le_bytes(b8);
    let grid = GridSpec::new(n as usize, samples as usize, period)
        .map_err(|_| Error::DimensionMismatch { n, samples })?;
    let total = grid.total_samples();
    let mut values = Vec::with_capacity(total);
    for i in 0..total {
        if let Err(e) = r.read_exact(&mut b8) {
            if e.kind() == std::io::ErrorKind::UnexpectedEof {
                return Err(Error::TruncatedPayload {
                    expected: total,
                    found: i,
                });
            }
            return Err(Error::Io(e));
        }
        values.push(f64::from_le_bytes(b8));
    }
    let mut probe = [0u8; 1];
    match r.read(&mut probe)? {
        0 => {}
        _ => {
            let mut extra = 1usize;
            let mut sink = [0u8; 4096];
            loop {
                let got = r.read(&mut sink)?;
                if got == 0 {
                    break;
                }
                extra += got;
            }
            return Err(Error::TrailingBytes { extra });
        }
    }
    Field::from_values(grid, values)
}

fn read_exact_or(r: &mut impl Read, buf: &mut [u8], on_eof: Error) -> Result<()> {
    match r.read_exact(buf) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => Err(on_eof),
        Err(e) => Err(Error::Io(e)),
    }
}

/// CSV export: header `x1,...,xn,value`, one row per sample, physical units.
pub fn write_field_csv(f: &Field, w: &mut impl Write) -> Result<()> {
    let n = f.grid.dimension();
    for a in 0..n {
        write!(w, "x{},", a + 1)?;
    }
    writeln!(w, "value")?;
    let total = f.grid.total_samples();
    for flat in 0..total {
        let idx = f.grid.multi_index(flat);
        for c in f.grid.coordinates(&idx) {
            write!(w, "{},", fmt_f64(c))?;
        }
        writeln!(w, "{}", fmt_f64(f.values[flat]))?;
    }
    Ok(())
}

/// 17-significant-digit rendering; round-trips f64 exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
