//! Exact algebra on the four-dimensional space path ⊗ two-level internal
//! degree of freedom.
//!
//! Every ket and operator carries the internal basis family it is written in:
//! linear `{H, V}` or circular `{+, −}`. The two families are tied together by
//! the fixed unitary `|±⟩ = (|H⟩ ± i|V⟩)/√2`, and every binary operation
//! converts its arguments to a common family before combining them. For the
//! neutron the `{+, −}` labels are read as σ_x eigenstates; the algebra is
//! identical.

use std::fmt;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

const DIM: usize = 4;
const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Path {
    I,
    II,
}

impl Path {
    fn index(self) -> usize {
        match self {
            Path::I => 0,
            Path::II => 1,
        }
    }

    fn from_index(i: usize) -> Self {
        if i == 0 {
            Path::I
        } else {
            Path::II
        }
    }

    pub fn other(self) -> Self {
        match self {
            Path::I => Path::II,
            Path::II => Path::I,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Internal {
    H,
    V,
    Plus,
    Minus,
}

impl Internal {
    pub fn family(self) -> Family {
        match self {
            Internal::H | Internal::V => Family::Linear,
            Internal::Plus | Internal::Minus => Family::Circular,
        }
    }

    fn index(self) -> usize {
        match self {
            Internal::H | Internal::Plus => 0,
            Internal::V | Internal::Minus => 1,
        }
    }
}

/// Internal basis family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// `{H, V}`
    Linear,
    /// `{+, −}`
    Circular,
}

impl Family {
    pub fn labels(self) -> [Internal; 2] {
        match self {
            Family::Linear => [Internal::H, Internal::V],
            Family::Circular => [Internal::Plus, Internal::Minus],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisLabel {
    pub path: Path,
    pub internal: Internal,
}

impl BasisLabel {
    pub const fn new(path: Path, internal: Internal) -> Self {
        Self { path, internal }
    }

    fn index(self) -> usize {
        2 * self.path.index() + self.internal.index()
    }

    fn from_index(family: Family, i: usize) -> Self {
        Self {
            path: Path::from_index(i / 2),
            internal: family.labels()[i % 2],
        }
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = match self.path {
            Path::I => "I",
            Path::II => "II",
        };
        let s = match self.internal {
            Internal::H => "H",
            Internal::V => "V",
            Internal::Plus => "+",
            Internal::Minus => "-",
        };
        write!(f, "|{p},{s}>")
    }
}

/// Coordinate map from `from` to `to` on the full four-dimensional space.
fn change_of_basis(from: Family, to: Family) -> [[C64; DIM]; DIM] {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let i = C64::i();
    // per-path 2x2 blocks; linear -> circular: c+ = (cH - i cV)/√2, c- = (cH + i cV)/√2
    let block: [[C64; 2]; 2] = match (from, to) {
        (Family::Linear, Family::Circular) => [[r * ONE, -r * i], [r * ONE, r * i]],
        (Family::Circular, Family::Linear) => [[r * ONE, r * ONE], [r * i, -r * i]],
        _ => [[ONE, ZERO], [ZERO, ONE]],
    };
    let mut u = [[ZERO; DIM]; DIM];
    for p in 0..2 {
        for a in 0..2 {
            for b in 0..2 {
                u[2 * p + a][2 * p + b] = block[a][b];
            }
        }
    }
    u
}

fn matvec(m: &[[C64; DIM]; DIM], v: &[C64; DIM]) -> [C64; DIM] {
    let mut out = [ZERO; DIM];
    for (o, row) in out.iter_mut().zip(m) {
        *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
    }
    out
}

fn matmul(a: &[[C64; DIM]; DIM], b: &[[C64; DIM]; DIM]) -> [[C64; DIM]; DIM] {
    let mut out = [[ZERO; DIM]; DIM];
    for i in 0..DIM {
        for j in 0..DIM {
            out[i][j] = (0..DIM).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn dagger(a: &[[C64; DIM]; DIM]) -> [[C64; DIM]; DIM] {
    let mut out = [[ZERO; DIM]; DIM];
    for i in 0..DIM {
        for j in 0..DIM {
            out[i][j] = a[j][i].conj();
        }
    }
    out
}

/// A ket over `{I, II} ⊗ {two internal states}`. Normalization is never
/// assumed; callers ask for it when they need it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteKet {
    family: Family,
    amps: [C64; DIM],
}

impl DiscreteKet {
    pub fn zero(family: Family) -> Self {
        Self {
            family,
            amps: [ZERO; DIM],
        }
    }

    pub fn basis(label: BasisLabel) -> Self {
        let mut k = Self::zero(label.internal.family());
        k.amps[label.index()] = ONE;
        k
    }

    /// Builds a ket from `(label, amplitude)` pairs. Repeated labels add up.
    /// All labels must come from one internal family.
    pub fn from_terms(terms: &[(BasisLabel, C64)]) -> Result<Self> {
        let family = match terms.first() {
            Some((l, _)) => l.internal.family(),
            None => return Err(Error::Degenerate("ket built from no terms")),
        };
        let mut k = Self::zero(family);
        for (label, amp) in terms {
            if label.internal.family() != family {
                return Err(Error::BasisMismatch(format!(
                    "{label} mixed into a {family:?} ket"
                )));
            }
            k.amps[label.index()] += amp;
        }
        Ok(k)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Same vector, coordinates re-expressed in `family`.
    pub fn in_family(&self, family: Family) -> Self {
        if family == self.family {
            return *self;
        }
        Self {
            family,
            amps: matvec(&change_of_basis(self.family, family), &self.amps),
        }
    }

    /// Component along `label`, converting bases as needed.
    pub fn amplitude(&self, label: BasisLabel) -> C64 {
        self.in_family(label.internal.family()).amps[label.index()]
    }

    /// `(label, amplitude)` in the ket's own family, including zeros.
    pub fn terms(&self) -> impl Iterator<Item = (BasisLabel, C64)> + '_ {
        (0..DIM).map(move |i| (BasisLabel::from_index(self.family, i), self.amps[i]))
    }

    pub fn norm2(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm2();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::Degenerate("cannot normalize a zero ket"));
        }
        Ok(self.scale(C64::from(1.0 / n.sqrt())))
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut k = *self;
        k.amps.iter_mut().for_each(|a| *a *= s);
        k
    }

    /// Vector sum; the result is written in `self`'s family.
    pub fn add(&self, other: &Self) -> Self {
        let o = other.in_family(self.family);
        let mut k = *self;
        for (a, b) in k.amps.iter_mut().zip(o.amps) {
            *a += b;
        }
        k
    }

    /// Largest componentwise distance, compared in `self`'s family.
    pub fn distance(&self, other: &Self) -> f64 {
        let o = other.in_family(self.family);
        self.amps
            .iter()
            .zip(o.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Multiplies the amplitudes living on `path` by `s`.
    pub fn scale_path(&self, path: Path, s: C64) -> Self {
        let mut k = *self;
        for internal in 0..2 {
            k.amps[2 * path.index() + internal] *= s;
        }
        k
    }
}

impl fmt::Display for DiscreteKet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (label, amp) in self.terms().filter(|(_, a)| a.norm() > 0.0) {
            if !first {
                write!(f, " + ")?;
            }
            write!(f, "({:.6}{:+.6}i){label}", amp.re, amp.im)?;
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// `Σ conj(bra_i) ket_i`, conjugate-linear in `bra`.
pub fn inner(bra: &DiscreteKet, ket: &DiscreteKet) -> C64 {
    let b = bra.in_family(Family::Linear);
    let k = ket.in_family(Family::Linear);
    b.amps.iter().zip(k.amps).map(|(x, y)| x.conj() * y).sum()
}

/// Linear operator on the four-dimensional space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteOperator {
    family: Family,
    m: [[C64; DIM]; DIM],
}

impl DiscreteOperator {
    pub fn zero(family: Family) -> Self {
        Self {
            family,
            m: [[ZERO; DIM]; DIM],
        }
    }

    pub fn identity() -> Self {
        let mut op = Self::zero(Family::Linear);
        for i in 0..DIM {
            op.m[i][i] = ONE;
        }
        op
    }

    /// `|ket⟩⟨bra|`
    pub fn outer(ket: &DiscreteKet, bra: &DiscreteKet) -> Self {
        let family = ket.family;
        let b = bra.in_family(family);
        let mut op = Self::zero(family);
        for i in 0..DIM {
            for j in 0..DIM {
                op.m[i][j] = ket.amps[i] * b.amps[j].conj();
            }
        }
        op
    }

    /// `Π_path ⊗ 1_internal`
    pub fn path_projector(path: Path) -> Self {
        let mut op = Self::zero(Family::Linear);
        for internal in 0..2 {
            let i = 2 * path.index() + internal;
            op.m[i][i] = ONE;
        }
        op
    }

    /// `1_path ⊗ (|+⟩⟨+| − |−⟩⟨−|)`. In the linear family this gives
    /// `σ|H⟩ = i|V⟩` and `σ|V⟩ = −i|H⟩`.
    pub fn sigma() -> Self {
        let mut op = Self::zero(Family::Circular);
        for p in 0..2 {
            op.m[2 * p][2 * p] = ONE;
            op.m[2 * p + 1][2 * p + 1] = -ONE;
        }
        op
    }

    /// `1_path ⊗ internal`, with `internal` given as a 2x2 matrix in `family`.
    pub fn internal(family: Family, internal: [[C64; 2]; 2]) -> Self {
        let mut op = Self::zero(family);
        for p in 0..2 {
            for (a, row) in internal.iter().enumerate() {
                for (b, &v) in row.iter().enumerate() {
                    op.m[2 * p + a][2 * p + b] = v;
                }
            }
        }
        op
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn in_family(&self, family: Family) -> Self {
        if family == self.family {
            return *self;
        }
        let u = change_of_basis(self.family, family);
        Self {
            family,
            m: matmul(&matmul(&u, &self.m), &dagger(&u)),
        }
    }

    /// Matrix element `⟨row|op|col⟩`.
    pub fn element(&self, row: BasisLabel, col: BasisLabel) -> C64 {
        inner(
            &DiscreteKet::basis(row),
            &apply(self, &DiscreteKet::basis(col)),
        )
    }

    /// `self ∘ other`
    pub fn compose(&self, other: &Self) -> Self {
        let o = other.in_family(self.family);
        Self {
            family: self.family,
            m: matmul(&self.m, &o.m),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            family: self.family,
            m: dagger(&self.m),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let o = other.in_family(self.family);
        let mut op = *self;
        for i in 0..DIM {
            for j in 0..DIM {
                op.m[i][j] += o.m[i][j];
            }
        }
        op
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut op = *self;
        op.m.iter_mut().flatten().for_each(|a| *a *= s);
        op
    }

    /// Largest elementwise distance, compared in `self`'s family.
    pub fn distance(&self, other: &Self) -> f64 {
        let o = other.in_family(self.family);
        self.m
            .iter()
            .flatten()
            .zip(o.m.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Matrix-vector action. The output is written in the operator's family.
pub fn apply(op: &DiscreteOperator, ket: &DiscreteKet) -> DiscreteKet {
    let k = ket.in_family(op.family);
    DiscreteKet {
        family: op.family,
        amps: matvec(&op.m, &k.amps),
    }
}

/// Orthogonal projector onto the ray of `ket`; the input need not be
/// normalized.
pub fn projector(ket: &DiscreteKet) -> Result<DiscreteOperator> {
    let n = ket.norm2();
    if n == 0.0 {
        return Err(Error::Degenerate("projector onto the zero ket"));
    }
    Ok(DiscreteOperator::outer(ket, ket).scale(C64::from(1.0 / n)))
}

/// `|⟨post|state⟩|² / ⟨post|post⟩`. Lies in `[0, norm²(state)]`.
pub fn detection_probability(state: &DiscreteKet, post: &DiscreteKet) -> Result<f64> {
    let n = post.norm2();
    if n == 0.0 {
        return Err(Error::Degenerate("detection against the zero ket"));
    }
    Ok(inner(post, state).norm_sqr() / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn l(path: Path, internal: Internal) -> BasisLabel {
        BasisLabel::new(path, internal)
    }

    fn psi() -> DiscreteKet {
        DiscreteKet::from_terms(&[
            (l(Path::I, Internal::H), C64::from(FRAC_1_SQRT_2)),
            (l(Path::II, Internal::H), C64::new(0.0, FRAC_1_SQRT_2)),
        ])
        .unwrap()
    }

    fn phi() -> DiscreteKet {
        DiscreteKet::from_terms(&[
            (l(Path::I, Internal::V), C64::from(FRAC_1_SQRT_2)),
            (l(Path::II, Internal::H), C64::from(FRAC_1_SQRT_2)),
        ])
        .unwrap()
    }

    #[test]
    fn inner_products() {
        assert!((inner(&psi(), &psi()) - ONE).norm() < 1e-15);
        assert!((inner(&phi(), &psi()) - C64::new(0.0, 0.5)).norm() < 1e-15);
        let phi_orth = DiscreteKet::from_terms(&[
            (l(Path::I, Internal::V), C64::from(FRAC_1_SQRT_2)),
            (l(Path::II, Internal::H), C64::from(-FRAC_1_SQRT_2)),
        ])
        .unwrap();
        assert!(inner(&phi_orth, &phi()).norm() < 1e-15);
    }

    #[test]
    fn mixed_family_is_rejected() {
        let err = DiscreteKet::from_terms(&[
            (l(Path::I, Internal::H), ONE),
            (l(Path::II, Internal::Plus), ONE),
        ]);
        assert!(matches!(err, Err(Error::BasisMismatch(_))));
    }

    #[test]
    fn path_projector_on_psi() {
        let out = apply(&DiscreteOperator::path_projector(Path::II), &psi());
        let want =
            DiscreteKet::from_terms(&[(l(Path::II, Internal::H), C64::new(0.0, FRAC_1_SQRT_2))])
                .unwrap();
        assert!(out.distance(&want) < 1e-15);
        assert!(apply(&DiscreteOperator::identity(), &psi()).distance(&psi()) < 1e-15);
    }

    #[test]
    fn sigma_on_horizontal() {
        let out = apply(
            &DiscreteOperator::sigma(),
            &DiscreteKet::basis(l(Path::I, Internal::H)),
        );
        let want = DiscreteKet::from_terms(&[(l(Path::I, Internal::V), C64::i())]).unwrap();
        assert!(out.distance(&want) < 1e-15, "{out}");
        let v = apply(
            &DiscreteOperator::sigma(),
            &DiscreteKet::basis(l(Path::II, Internal::V)),
        );
        let want = DiscreteKet::from_terms(&[(l(Path::II, Internal::H), -C64::i())]).unwrap();
        assert!(v.distance(&want) < 1e-15);
    }

    #[test]
    fn projector_examples() {
        let p = projector(&DiscreteKet::basis(l(Path::I, Internal::H))).unwrap();
        let want = DiscreteKet::from_terms(&[(l(Path::I, Internal::H), C64::from(FRAC_1_SQRT_2))])
            .unwrap();
        assert!(apply(&p, &psi()).distance(&want) < 1e-15);

        // (|I⟩ + |II⟩)|−⟩ against (|I,+⟩ + |II,−⟩)/√2
        let post = DiscreteKet::from_terms(&[
            (l(Path::I, Internal::Minus), ONE),
            (l(Path::II, Internal::Minus), ONE),
        ])
        .unwrap();
        let psi_n = DiscreteKet::from_terms(&[
            (l(Path::I, Internal::Plus), C64::from(FRAC_1_SQRT_2)),
            (l(Path::II, Internal::Minus), C64::from(FRAC_1_SQRT_2)),
        ])
        .unwrap();
        let out = apply(&projector(&post).unwrap(), &psi_n);
        let a = 1.0 / (2.0 * 2f64.sqrt());
        assert!((out.amplitude(l(Path::I, Internal::Minus)) - C64::from(a)).norm() < 1e-15);
        assert!((out.amplitude(l(Path::II, Internal::Minus)) - C64::from(a)).norm() < 1e-15);
        assert!(out.amplitude(l(Path::I, Internal::Plus)).norm() < 1e-15);
    }

    #[test]
    fn projector_of_zero_is_an_error() {
        assert!(projector(&DiscreteKet::zero(Family::Linear)).is_err());
        assert!(detection_probability(&psi(), &DiscreteKet::zero(Family::Circular)).is_err());
    }

    #[test]
    fn detection_examples() {
        assert!((detection_probability(&psi(), &psi()).unwrap() - 1.0).abs() < 1e-15);
        let state = DiscreteKet::basis(l(Path::I, Internal::Plus));
        let post = DiscreteKet::from_terms(&[
            (l(Path::I, Internal::Minus), C64::from(FRAC_1_SQRT_2)),
            (l(Path::II, Internal::Minus), C64::from(FRAC_1_SQRT_2)),
        ])
        .unwrap();
        assert_eq!(detection_probability(&state, &post).unwrap(), 0.0);
    }

    #[test]
    fn circular_states_in_linear_coordinates() {
        let plus = DiscreteKet::basis(l(Path::I, Internal::Plus));
        let r = FRAC_1_SQRT_2;
        assert!((plus.amplitude(l(Path::I, Internal::H)) - C64::from(r)).norm() < 1e-15);
        assert!((plus.amplitude(l(Path::I, Internal::V)) - C64::new(0.0, r)).norm() < 1e-15);
        let sigma_lin = DiscreteOperator::sigma().in_family(Family::Linear);
        let back = sigma_lin.in_family(Family::Circular);
        assert!(back.distance(&DiscreteOperator::sigma()) < 1e-15);
    }
}
