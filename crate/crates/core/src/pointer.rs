//! One-dimensional pointer wavefunctions.
//!
//! The analytic profile is `A·exp(−(x−c)²/W²)`, peak amplitude `|A|` and
//! intensity standard deviation `σ = W/2`. Sampled profiles live on a uniform
//! grid; their integrals use the trapezoidal rule and their translations use a
//! spectral phase ramp so sub-grid shifts stay exact for band-limited data.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Default half-span of a pointer grid, in units of W.
pub const DEFAULT_HALF_SPAN: f64 = 8.0;
/// Default number of samples per axis.
pub const DEFAULT_POINTS: usize = 512;

const MIN_POINTS: usize = 16;
pub const MIN_POINTS_PER_WIDTH: f64 = 8.0;
const MAX_SHIFT_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid1D {
    min: f64,
    max: f64,
    n: usize,
}

impl UniformGrid1D {
    pub fn new(min: f64, max: f64, n: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) || min >= max {
            return Err(Error::InvalidGrid(format!(
                "need min < max, got [{min}, {max}]"
            )));
        }
        if n < MIN_POINTS {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_POINTS} points, got {n}"
            )));
        }
        Ok(Self { min, max, n })
    }

    /// `[center − half_span, center + half_span]` with `n` points.
    pub fn centered(center: f64, half_span: f64, n: usize) -> Result<Self> {
        Self::new(center - half_span, center + half_span, n)
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn span(&self) -> f64 {
        self.max - self.min
    }

    pub fn spacing(&self) -> f64 {
        self.span() / (self.n - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.max
        } else {
            self.min + i as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.x(i))
    }

    /// Trapezoidal quadrature weight of node `i`.
    pub fn weight(&self, i: usize) -> f64 {
        let h = self.spacing();
        if i == 0 || i + 1 == self.n {
            0.5 * h
        } else {
            h
        }
    }

    /// Trapezoidal integral of sampled values.
    pub fn integrate<T>(&self, values: &[T]) -> T
    where
        T: Copy + std::iter::Sum<T> + std::ops::Mul<f64, Output = T>,
    {
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| v * self.weight(i))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PointerWavefunction {
    Gaussian {
        width: f64,
        center: f64,
        amplitude: C64,
    },
    Sampled {
        grid: UniformGrid1D,
        values: Vec<C64>,
    },
}

/// `exp(−(x−center)²/W²)`, unit peak.
pub fn gaussian(width: f64, center: f64) -> Result<PointerWavefunction> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::InvalidWidth(width));
    }
    if !center.is_finite() {
        return Err(Error::InvalidParameter(format!("gaussian center {center}")));
    }
    Ok(PointerWavefunction::Gaussian {
        width,
        center,
        amplitude: C64::new(1.0, 0.0),
    })
}

/// `∫ conj(p) q dx`
pub fn overlap(p: &PointerWavefunction, q: &PointerWavefunction) -> Result<C64> {
    moment(p, q, 0)
}

/// `⟨p|q⟩ / √(⟨p|p⟩⟨q|q⟩)`
pub fn normalized_overlap(p: &PointerWavefunction, q: &PointerWavefunction) -> Result<C64> {
    let n = (p.norm2()? * q.norm2()?).sqrt();
    Ok(overlap(p, q)? / n)
}

/// `∫ conj(p) xᵏ q dx` for `k ∈ {0, 1, 2}`.
pub fn moment(p: &PointerWavefunction, q: &PointerWavefunction, k: u32) -> Result<C64> {
    use PointerWavefunction::*;
    match (p, q) {
        (
            Gaussian {
                width: w1,
                center: a,
                amplitude: ap,
            },
            Gaussian {
                width: w2,
                center: b,
                amplitude: aq,
            },
        ) => {
            let alpha = 1.0 / (w1 * w1);
            let beta = 1.0 / (w2 * w2);
            let s = alpha + beta;
            let d = a - b;
            let base = (PI / s).sqrt() * (-alpha * beta / s * d * d).exp();
            let m = (alpha * a + beta * b) / s;
            let factor = match k {
                0 => 1.0,
                1 => m,
                2 => m * m + 0.5 / s,
                _ => return Err(Error::InvalidParameter(format!("moment order {k}"))),
            };
            Ok(ap.conj() * aq * base * factor)
        }
        (Sampled { grid, values }, other) => {
            let qv = other.values_on(grid)?;
            Ok(sampled_moment(grid, values, &qv, k))
        }
        (other, Sampled { grid, values }) => {
            let pv = other.values_on(grid)?;
            Ok(sampled_moment(grid, &pv, values, k))
        }
    }
}

fn sampled_moment(grid: &UniformGrid1D, p: &[C64], q: &[C64], k: u32) -> C64 {
    let integrand: Vec<C64> = p
        .iter()
        .zip(q)
        .enumerate()
        .map(|(i, (a, b))| a.conj() * b * grid.x(i).powi(k as i32))
        .collect();
    grid.integrate(&integrand)
}

impl PointerWavefunction {
    /// Wraps sampled data. The profile must not vanish identically.
    pub fn sampled(grid: UniformGrid1D, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} values for a {}-point grid",
                values.len(),
                grid.len()
            )));
        }
        let p = PointerWavefunction::Sampled { grid, values };
        p.norm2()?;
        Ok(p)
    }

    /// Point evaluation. Sampled profiles interpolate linearly between nodes
    /// and vanish outside their grid.
    pub fn eval(&self, x: f64) -> C64 {
        match self {
            PointerWavefunction::Gaussian {
                width,
                center,
                amplitude,
            } => {
                let u = (x - center) / width;
                amplitude * (-u * u).exp()
            }
            PointerWavefunction::Sampled { grid, values } => {
                if x < grid.min() || x > grid.max() {
                    return C64::new(0.0, 0.0);
                }
                let t = (x - grid.min()) / grid.spacing();
                let i = (t.floor() as usize).min(grid.len() - 2);
                let f = t - i as f64;
                values[i] * (1.0 - f) + values[i + 1] * f
            }
        }
    }

    /// Values at the nodes of `grid`. Sampled profiles only evaluate on the
    /// grid they were built on.
    pub fn values_on(&self, grid: &UniformGrid1D) -> Result<Vec<C64>> {
        match self {
            PointerWavefunction::Gaussian { .. } => {
                Ok(grid.points().map(|x| self.eval(x)).collect())
            }
            PointerWavefunction::Sampled { grid: own, values } => {
                if own == grid {
                    Ok(values.clone())
                } else {
                    Err(Error::IncompatibleGrids)
                }
            }
        }
    }

    /// Samples an analytic profile onto `grid`, which must resolve the width
    /// with at least eight points.
    pub fn sample(&self, grid: UniformGrid1D) -> Result<Self> {
        if let PointerWavefunction::Gaussian { width, .. } = self {
            let limit = width / MIN_POINTS_PER_WIDTH;
            if grid.spacing() > limit {
                return Err(Error::GridTooCoarse {
                    spacing: grid.spacing(),
                    limit,
                });
            }
        }
        let values = self.values_on(&grid)?;
        Self::sampled(grid, values)
    }

    pub fn grid(&self) -> Option<&UniformGrid1D> {
        match self {
            PointerWavefunction::Sampled { grid, .. } => Some(grid),
            PointerWavefunction::Gaussian { .. } => None,
        }
    }

    /// `p′(x) = p(x − shift)`.
    pub fn displace(&self, shift: f64) -> Result<Self> {
        if !shift.is_finite() {
            return Err(Error::InvalidParameter(format!("displacement {shift}")));
        }
        match self {
            PointerWavefunction::Gaussian {
                width,
                center,
                amplitude,
            } => Ok(PointerWavefunction::Gaussian {
                width: *width,
                center: center + shift,
                amplitude: *amplitude,
            }),
            PointerWavefunction::Sampled { grid, values } => {
                if shift.abs() > MAX_SHIFT_FRACTION * grid.span() {
                    return Err(Error::DisplacementTooLarge {
                        shift,
                        span: grid.span(),
                    });
                }
                if shift == 0.0 {
                    return Ok(self.clone());
                }
                Ok(PointerWavefunction::Sampled {
                    grid: *grid,
                    values: spectral_shift(values, grid.spacing(), shift),
                })
            }
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        match self {
            PointerWavefunction::Gaussian {
                width,
                center,
                amplitude,
            } => PointerWavefunction::Gaussian {
                width: *width,
                center: *center,
                amplitude: amplitude * s,
            },
            PointerWavefunction::Sampled { grid, values } => PointerWavefunction::Sampled {
                grid: *grid,
                values: values.iter().map(|v| v * s).collect(),
            },
        }
    }

    pub fn norm2(&self) -> Result<f64> {
        let n = moment(self, self, 0)?.re;
        if n > 0.0 && n.is_finite() {
            Ok(n)
        } else {
            Err(Error::ZeroNorm)
        }
    }

    pub fn normalized(&self) -> Result<Self> {
        Ok(self.scale(C64::from(1.0 / self.norm2()?.sqrt())))
    }

    /// `∫ x|p|² / ∫ |p|²`
    pub fn centroid(&self) -> Result<f64> {
        let n = self.norm2()?;
        Ok(moment(self, self, 1)?.re / n)
    }

    pub fn variance(&self) -> Result<f64> {
        let n = self.norm2()?;
        let m1 = moment(self, self, 1)?.re / n;
        let m2 = moment(self, self, 2)?.re / n;
        Ok(m2 - m1 * m1)
    }
}

/// Band-limited translation by `shift` through a phase ramp in Fourier space.
fn spectral_shift(values: &[C64], spacing: f64, shift: f64) -> Vec<C64> {
    let n = values.len();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);

    let mut buf = values.to_vec();
    forward.process(&mut buf);
    let dk = 2.0 * PI / (n as f64 * spacing);
    for (j, c) in buf.iter_mut().enumerate() {
        if 2 * j == n {
            // Nyquist: keep real data real
            *c *= (PI / spacing * shift).cos();
        } else {
            let signed = if 2 * j < n {
                j as f64
            } else {
                j as f64 - n as f64
            };
            *c *= C64::from_polar(1.0, -signed * dk * shift);
        }
    }
    inverse.process(&mut buf);
    let inv_n = 1.0 / n as f64;
    buf.iter_mut().for_each(|c| *c *= inv_n);
    buf
}
