//! Photon pipeline with explicit pointers: pre-selection with resting
//! pointers, conditional pointer displacements, post-selection onto a
//! discrete state, and readout of the resulting two-pointer wavefunction.
//!
//! Pointer 1 is the horizontal beam coordinate `x`, displaced by `±δx` for
//! circular polarization `±` in arm I. Pointer 2 is the vertical coordinate
//! `y`, displaced by `+δy` whenever the photon is in arm II. Joint pointer
//! states stay factored as `Σ c·p1(x)·p2(y)`; densities are assembled on
//! demand.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::pointer::{gaussian, moment, PointerWavefunction, UniformGrid1D, MIN_POINTS_PER_WIDTH};
use crate::qstate::{inner, BasisLabel, DiscreteKet, Family, Internal, Path};

/// Default disk radius for strong-regime lobe integration, in units of W.
pub const DEFAULT_LOBE_RADIUS: f64 = 2.5;
/// Largest normalized overlap between joint terms that still counts as disjoint.
pub const LOBE_OVERLAP_LIMIT: f64 = 1e-6;
/// Merged coefficients below this fraction of the pre-merge scale are dropped.
const NULL_RELATIVE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionSpec {
    /// Polarization-conditioned shift of pointer 1 in arm I.
    pub dx: f64,
    /// Presence-conditioned shift of pointer 2 in arm II.
    pub dy: f64,
    /// Pointer width W.
    pub width: f64,
}

impl InteractionSpec {
    pub fn new(dx: f64, dy: f64, width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::InvalidWidth(width));
        }
        if !(dx >= 0.0 && dy >= 0.0 && dx.is_finite() && dy.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "displacements must be finite and non-negative, got dx={dx}, dy={dy}"
            )));
        }
        Ok(Self { dx, dy, width })
    }

    /// Both displacements set to `ratio·W`.
    pub fn symmetric(ratio: f64, width: f64) -> Result<Self> {
        Self::new(ratio * width, ratio * width, width)
    }
}

/// `(|I⟩ + i|II⟩)|H⟩/√2`
pub fn photon_preselection() -> DiscreteKet {
    DiscreteKet::from_terms(&[
        (
            BasisLabel::new(Path::I, Internal::H),
            C64::from(FRAC_1_SQRT_2),
        ),
        (
            BasisLabel::new(Path::II, Internal::H),
            C64::new(0.0, FRAC_1_SQRT_2),
        ),
    ])
    .expect("fixed linear-family ket")
}

/// `(|I⟩|V⟩ + |II⟩|H⟩)/√2`
pub fn photon_postselection() -> DiscreteKet {
    DiscreteKet::from_terms(&[
        (
            BasisLabel::new(Path::I, Internal::V),
            C64::from(FRAC_1_SQRT_2),
        ),
        (
            BasisLabel::new(Path::II, Internal::H),
            C64::from(FRAC_1_SQRT_2),
        ),
    ])
    .expect("fixed linear-family ket")
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridBranch {
    pub label: BasisLabel,
    pub coeff: C64,
    pub p1: PointerWavefunction,
    pub p2: PointerWavefunction,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct HybridState {
    pub branches: Vec<HybridBranch>,
}

/// Attaches resting pointers to every nonzero component of `ket`.
pub fn preselect(
    ket: &DiscreteKet,
    rest1: &PointerWavefunction,
    rest2: &PointerWavefunction,
) -> HybridState {
    let branches = ket
        .terms()
        .filter(|(_, a)| *a != C64::new(0.0, 0.0))
        .map(|(label, coeff)| HybridBranch {
            label,
            coeff,
            p1: rest1.clone(),
            p2: rest2.clone(),
        })
        .collect();
    HybridState { branches }
}

/// Normalized resting Gaussian pointer of width W.
pub fn rest_pointer(width: f64) -> Result<PointerWavefunction> {
    gaussian(width, 0.0)?.normalized()
}

/// The photon pre-selection with both pointers at rest.
pub fn preselect_photon(spec: &InteractionSpec) -> Result<HybridState> {
    let rest = rest_pointer(spec.width)?;
    Ok(preselect(&photon_preselection(), &rest, &rest))
}

/// Conditional pointer displacements. Arm-I branches are re-expressed in the
/// circular basis and pointer 1 moves by `±δx`; arm-II branches keep their
/// label and pointer 2 moves by `+δy`.
pub fn interact(state: &HybridState, spec: &InteractionSpec) -> Result<HybridState> {
    let mut branches = Vec::with_capacity(state.branches.len() + 1);
    for b in &state.branches {
        match b.label.path {
            Path::I => {
                let local = DiscreteKet::basis(b.label).in_family(Family::Circular);
                for (internal, sign) in [(Internal::Plus, 1.0), (Internal::Minus, -1.0)] {
                    let label = BasisLabel::new(Path::I, internal);
                    let amp = local.amplitude(label);
                    if amp == C64::new(0.0, 0.0) {
                        continue;
                    }
                    branches.push(HybridBranch {
                        label,
                        coeff: b.coeff * amp,
                        p1: b.p1.displace(sign * spec.dx)?,
                        p2: b.p2.clone(),
                    });
                }
            }
            Path::II => branches.push(HybridBranch {
                label: b.label,
                coeff: b.coeff,
                p1: b.p1.clone(),
                p2: b.p2.displace(spec.dy)?,
            }),
        }
    }
    Ok(HybridState { branches })
}

impl HybridState {
    pub fn norm2(&self) -> Result<f64> {
        let mut total = C64::new(0.0, 0.0);
        for a in &self.branches {
            for b in &self.branches {
                let labels = inner(&DiscreteKet::basis(a.label), &DiscreteKet::basis(b.label));
                if labels == C64::new(0.0, 0.0) {
                    continue;
                }
                total += a.coeff.conj()
                    * b.coeff
                    * labels
                    * moment(&a.p1, &b.p1, 0)?
                    * moment(&a.p2, &b.p2, 0)?;
            }
        }
        Ok(total.re)
    }

    /// The discrete state, if every branch carries the same pair of pointers.
    pub fn discrete_marginal(&self) -> Option<DiscreteKet> {
        let first = self.branches.first()?;
        let mut ket = DiscreteKet::zero(Family::Linear);
        for b in &self.branches {
            if b.p1 != first.p1 || b.p2 != first.p2 {
                return None;
            }
            ket = ket.add(&DiscreteKet::basis(b.label).scale(b.coeff));
        }
        Some(ket)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointTerm {
    pub coeff: C64,
    pub p1: PointerWavefunction,
    pub p2: PointerWavefunction,
    /// Discrete label of the branch this term came from.
    pub origin: BasisLabel,
}

/// Post-selected pointer state `Σ c·p1⊗p2`. An empty term list is the null
/// post-selection outcome.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointerJointState {
    pub terms: Vec<JointTerm>,
}

/// Contracts every branch against `post` (normalized internally). Terms with
/// identical pointer pairs are merged; if everything cancels the returned
/// state is null.
pub fn postselect(state: &HybridState, post: &DiscreteKet) -> Result<PointerJointState> {
    let post = post.normalized()?;
    let mut terms: Vec<JointTerm> = Vec::new();
    let mut scale = 0.0;
    for b in &state.branches {
        let c = b.coeff * post.amplitude(b.label).conj();
        scale += c.norm();
        match terms.iter_mut().find(|t| t.p1 == b.p1 && t.p2 == b.p2) {
            Some(t) => t.coeff += c,
            None => terms.push(JointTerm {
                coeff: c,
                p1: b.p1.clone(),
                p2: b.p2.clone(),
                origin: b.label,
            }),
        }
    }
    terms.retain(|t| t.coeff.norm() > NULL_RELATIVE_TOLERANCE * scale);
    Ok(PointerJointState { terms })
}

/// Full photon pipeline: pre-select, interact, post-select.
pub fn photon_joint_state(spec: &InteractionSpec) -> Result<PointerJointState> {
    let hybrid = interact(&preselect_photon(spec)?, spec)?;
    postselect(&hybrid, &photon_postselection())
}

impl PointerJointState {
    pub fn is_null(&self) -> bool {
        self.terms.is_empty()
    }

    fn require_non_null(&self) -> Result<()> {
        if self.is_null() {
            Err(Error::NullPostSelection)
        } else {
            Ok(())
        }
    }

    /// First term whose originating branch carries `label`.
    pub fn term_from(&self, label: BasisLabel) -> Option<&JointTerm> {
        self.terms.iter().find(|t| t.origin == label)
    }

    /// Gram matrix `⟨t_a|t_b⟩` of the product terms, coefficients excluded.
    pub fn term_gram(&self) -> Result<Vec<Vec<C64>>> {
        self.terms
            .iter()
            .map(|a| {
                self.terms
                    .iter()
                    .map(|b| Ok(moment(&a.p1, &b.p1, 0)? * moment(&a.p2, &b.p2, 0)?))
                    .collect()
            })
            .collect()
    }

    /// `‖Σ c·p1⊗p2‖²`. With normalized pre/post states and pointers this is
    /// the post-selection success probability.
    pub fn norm2(&self) -> Result<f64> {
        let g = self.term_gram()?;
        let mut n = C64::new(0.0, 0.0);
        for (a, ta) in self.terms.iter().enumerate() {
            for (b, tb) in self.terms.iter().enumerate() {
                n += ta.coeff.conj() * tb.coeff * g[a][b];
            }
        }
        Ok(n.re)
    }

    /// Amplitude `Σ c·p1(x)·p2(y)` on the grid, row-major with `y` as the
    /// slow index.
    pub fn amplitude_on(&self, gx: &UniformGrid1D, gy: &UniformGrid1D) -> Result<Vec<C64>> {
        let mut out = vec![C64::new(0.0, 0.0); gx.len() * gy.len()];
        for t in &self.terms {
            let px = t.p1.values_on(gx)?;
            let py = t.p2.values_on(gy)?;
            for (row, vy) in out.chunks_mut(gx.len()).zip(&py) {
                let cy = t.coeff * vy;
                for (o, vx) in row.iter_mut().zip(&px) {
                    *o += cy * vx;
                }
            }
        }
        Ok(out)
    }
}

/// Real field on a 2D grid, row-major with `y` as the slow index.
#[derive(Debug, Clone, PartialEq)]
pub struct Density2D {
    pub gx: UniformGrid1D,
    pub gy: UniformGrid1D,
    pub values: Vec<f64>,
}

impl Density2D {
    pub fn new(gx: UniformGrid1D, gy: UniformGrid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != gx.len() * gy.len() {
            return Err(Error::InvalidGrid(format!(
                "{} values for a {}x{} grid",
                values.len(),
                gx.len(),
                gy.len()
            )));
        }
        Ok(Self { gx, gy, values })
    }

    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.gx.len() + ix]
    }

    /// Trapezoidal integral of the values selected by `keep(x, y)`.
    pub fn integrate_where(&self, keep: impl Fn(f64, f64) -> bool) -> f64 {
        let mut total = 0.0;
        for iy in 0..self.gy.len() {
            let y = self.gy.x(iy);
            let wy = self.gy.weight(iy);
            let row = &self.values[iy * self.gx.len()..(iy + 1) * self.gx.len()];
            for (ix, v) in row.iter().enumerate() {
                let x = self.gx.x(ix);
                if keep(x, y) {
                    total += v * wy * self.gx.weight(ix);
                }
            }
        }
        total
    }

    pub fn integral(&self) -> f64 {
        self.integrate_where(|_, _| true)
    }

    /// Coordinates and value of the largest sample.
    pub fn argmax(&self) -> (f64, f64, f64) {
        let (i, v) = self
            .values
            .iter()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc },
            );
        (
            self.gx.x(i % self.gx.len()),
            self.gy.x(i / self.gx.len()),
            v,
        )
    }

    /// Number of strict local maxima among interior samples whose value
    /// exceeds `floor·max`.
    pub fn count_local_maxima(&self, floor: f64) -> usize {
        let (nx, ny) = (self.gx.len(), self.gy.len());
        let threshold = floor * self.argmax().2;
        let mut count = 0;
        for iy in 1..ny - 1 {
            for ix in 1..nx - 1 {
                let v = self.at(ix, iy);
                if v <= threshold {
                    continue;
                }
                let mut peak = true;
                'nb: for dy in [-1i64, 0, 1] {
                    for dx in [-1i64, 0, 1] {
                        if dx == 0 && dy == 0 {
                            continue;
                        }
                        let n = self.at((ix as i64 + dx) as usize, (iy as i64 + dy) as usize);
                        if n >= v {
                            peak = false;
                            break 'nb;
                        }
                    }
                }
                if peak {
                    count += 1;
                }
            }
        }
        count
    }
}

/// `|F(x,y)|²` normalized to unit trapezoidal integral on the grid.
pub fn joint_density(
    j: &PointerJointState,
    gx: &UniformGrid1D,
    gy: &UniformGrid1D,
) -> Result<Density2D> {
    j.require_non_null()?;
    let values: Vec<f64> = j
        .amplitude_on(gx, gy)?
        .iter()
        .map(|a| a.norm_sqr())
        .collect();
    let mut d = Density2D::new(*gx, *gy, values)?;
    let total = d.integral();
    if !(total > 0.0) {
        return Err(Error::ZeroNorm);
    }
    d.values.iter_mut().for_each(|v| *v /= total);
    Ok(d)
}

/// Exact `(⟨x⟩, ⟨y⟩)` of the normalized joint density, from 1D moment
/// integrals of the factored terms.
pub fn centroid2d(j: &PointerJointState) -> Result<(f64, f64)> {
    j.require_non_null()?;
    let (mut n, mut mx, mut my) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0));
    for a in &j.terms {
        for b in &j.terms {
            let c = a.coeff.conj() * b.coeff;
            let x0 = moment(&a.p1, &b.p1, 0)?;
            let y0 = moment(&a.p2, &b.p2, 0)?;
            n += c * x0 * y0;
            mx += c * moment(&a.p1, &b.p1, 1)? * y0;
            my += c * x0 * moment(&a.p2, &b.p2, 1)?;
        }
    }
    if !(n.re > 0.0) {
        return Err(Error::ZeroNorm);
    }
    Ok((mx.re / n.re, my.re / n.re))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LobeWeight {
    pub origin: BasisLabel,
    /// Disk center: the centroids of the term's two pointers.
    pub center: (f64, f64),
    pub weight: f64,
}

/// Grid covering every profile in `pointers` with `margin` to spare. Sampled
/// profiles force their own grid.
fn covering_grid<'a>(
    pointers: impl Iterator<Item = &'a PointerWavefunction> + Clone,
    margin: f64,
) -> Result<UniformGrid1D> {
    if let Some(g) = pointers.clone().find_map(|p| p.grid()) {
        return Ok(*g);
    }
    let (mut lo, mut hi, mut sd) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for p in pointers {
        let c = p.centroid()?;
        lo = lo.min(c);
        hi = hi.max(c);
        sd = sd.max(p.variance()?.sqrt());
    }
    let ext = margin + 16.0 * sd;
    let spacing = sd / 16.0;
    let n = (((hi - lo + 2.0 * ext) / spacing).ceil() as usize + 1).clamp(64, 4097);
    UniformGrid1D::new(lo - ext, hi + ext, n)
}

/// Probability inside a disk of `radius` around each term's pointer centers.
/// Fails when any two terms overlap by more than [`LOBE_OVERLAP_LIMIT`].
pub fn strong_lobe_weights(j: &PointerJointState, radius: f64) -> Result<Vec<LobeWeight>> {
    j.require_non_null()?;
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!("lobe radius {radius}")));
    }
    let overlap = max_term_overlap(j)?;
    if overlap > LOBE_OVERLAP_LIMIT {
        return Err(Error::OverlappingLobes {
            overlap,
            limit: LOBE_OVERLAP_LIMIT,
        });
    }
    let gx = covering_grid(j.terms.iter().map(|t| &t.p1), radius)?;
    let gy = covering_grid(j.terms.iter().map(|t| &t.p2), radius)?;
    let density = joint_density(j, &gx, &gy)?;
    let r2 = radius * radius;
    j.terms
        .iter()
        .map(|t| {
            let center = (t.p1.centroid()?, t.p2.centroid()?);
            let weight = density.integrate_where(|x, y| {
                let (dx, dy) = (x - center.0, y - center.1);
                dx * dx + dy * dy <= r2
            });
            Ok(LobeWeight {
                origin: t.origin,
                center,
                weight,
            })
        })
        .collect()
}

/// Largest normalized overlap `|⟨t_a|t_b⟩|/‖t_a‖‖t_b‖` between distinct terms.
pub fn max_term_overlap(j: &PointerJointState) -> Result<f64> {
    let g = j.term_gram()?;
    let mut worst = 0.0f64;
    for a in 0..g.len() {
        for b in a + 1..g.len() {
            worst = worst.max(g[a][b].norm() / (g[a][a].re * g[b][b].re).sqrt());
        }
    }
    Ok(worst)
}

/// Purity `Tr ρ₁²` of the reduced state of pointer 1; 1 for a product state.
pub fn pointer_entanglement(j: &PointerJointState) -> Result<f64> {
    j.require_non_null()?;
    let k = j.terms.len();
    let mut gu = vec![vec![C64::new(0.0, 0.0); k]; k];
    let mut gv = gu.clone();
    for (a, ta) in j.terms.iter().enumerate() {
        for (b, tb) in j.terms.iter().enumerate() {
            gu[a][b] = moment(&ta.p1, &tb.p1, 0)?;
            gv[a][b] = moment(&ta.p2, &tb.p2, 0)?;
        }
    }
    // ρ₁ = Σ_ab c_a c̄_b ⟨v_b|v_a⟩ |u_a⟩⟨u_b|, so Tr ρ₁² = Tr(K G_u K G_u)
    let mut kmat = vec![vec![C64::new(0.0, 0.0); k]; k];
    let mut norm = C64::new(0.0, 0.0);
    for a in 0..k {
        for b in 0..k {
            let (ca, cb) = (j.terms[a].coeff, j.terms[b].coeff);
            kmat[a][b] = ca * cb.conj() * gv[b][a];
            norm += ca.conj() * cb * gu[a][b] * gv[a][b];
        }
    }
    let kg: Vec<Vec<C64>> = (0..k)
        .map(|a| {
            (0..k)
                .map(|c| (0..k).map(|b| kmat[a][b] * gu[b][c]).sum())
                .collect()
        })
        .collect();
    let trace: C64 = (0..k)
        .map(|a| (0..k).map(|c| kg[a][c] * kg[c][a]).sum::<C64>())
        .sum();
    Ok(trace.re / (norm.re * norm.re))
}

/// The two unnormalized pieces of the post-selected wavefunction with unit-peak
/// Gaussians `F(x,y) = f(x)f(y)`: the arm-II piece `2F(x, y−δy)` and the
/// arm-I piece `F(x−δx, y) − F(x+δx, y)`.
pub fn arm_components(
    spec: &InteractionSpec,
    gx: &UniformGrid1D,
    gy: &UniformGrid1D,
) -> Result<(Density2D, Density2D)> {
    let f = gaussian(spec.width, 0.0)?;
    let fx = f.values_on(gx)?;
    let fy = f.values_on(gy)?;
    let fy_up = f.displace(spec.dy)?.values_on(gy)?;
    let fx_plus = f.displace(spec.dx)?.values_on(gx)?;
    let fx_minus = f.displace(-spec.dx)?.values_on(gx)?;
    let mut arm_ii = Vec::with_capacity(gx.len() * gy.len());
    let mut arm_i = Vec::with_capacity(gx.len() * gy.len());
    for iy in 0..gy.len() {
        for ix in 0..gx.len() {
            arm_ii.push(2.0 * fx[ix].re * fy_up[iy].re);
            arm_i.push((fx_plus[ix].re - fx_minus[ix].re) * fy[iy].re);
        }
    }
    Ok((
        Density2D::new(*gx, *gy, arm_ii)?,
        Density2D::new(*gx, *gy, arm_i)?,
    ))
}

/// Default square grid for a photon run: `±half_span·W` plus the largest
/// displacement, `n` points per axis. Rejects grids coarser than `W/8`.
pub fn photon_grids(
    spec: &InteractionSpec,
    half_span: f64,
    n: usize,
) -> Result<(UniformGrid1D, UniformGrid1D)> {
    let ext = half_span * spec.width + spec.dx.max(spec.dy);
    let g = UniformGrid1D::centered(0.0, ext, n)?;
    let limit = spec.width / MIN_POINTS_PER_WIDTH;
    if g.spacing() > limit {
        return Err(Error::GridTooCoarse {
            spacing: g.spacing(),
            limit,
        });
    }
    Ok((g, g))
}
