//! Spin-tensor types, dense component storage, composite bundles, frame
//! charts and their derived data.
//!
//! A component array stores one exact scalar per multi-index. The index axes
//! are frozen globally in storage order: upper spinor, lower spinor, upper
//! barred spinor, lower barred spinor, upper vector, lower vector. Spinor
//! digits run `1..=2`, vector digits `0..=3`, matching the external text
//! formats digit for digit.

use std::fmt;

use smallvec::SmallVec;
use thiserror::Error;

use crate::algebra::{BlockShape, GaussianRational, IndexTuple, NativeVar, ScalarExpr, Var};
use crate::spingroup::{varphi, Lorentz4Matrix, Mat, SL2Matrix, SpinGroupError};

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("singular frame: det = {det}")]
    SingularFrame { det: String },
    #[error("frame chart carries no transition")]
    MissingTransition,
    #[error("type mismatch: expected {expected}, got {got}")]
    TypeMismatch { expected: String, got: String },
    #[error("slot {slot} out of range 1..={count}")]
    SlotOutOfRange { slot: usize, count: usize },
    #[error(transparent)]
    SpinGroup(#[from] SpinGroupError),
}

/// The six block lengths `(alpha, beta | nu, gamma | m, n)` of a spin-tensor
/// type: upper/lower spinor, upper/lower barred spinor, upper/lower vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SpinTensorType {
    pub alpha: u8,
    pub beta: u8,
    pub nu: u8,
    pub gamma: u8,
    pub m: u8,
    pub n: u8,
}

impl SpinTensorType {
    pub const fn new(alpha: u8, beta: u8, nu: u8, gamma: u8, m: u8, n: u8) -> Self {
        SpinTensorType {
            alpha,
            beta,
            nu,
            gamma,
            m,
            n,
        }
    }

    pub const fn scalar() -> Self {
        SpinTensorType::new(0, 0, 0, 0, 0, 0)
    }

    /// A tangent-vector type: one upper vector index.
    pub const fn vector() -> Self {
        SpinTensorType::new(0, 0, 0, 0, 1, 0)
    }

    pub fn shape(&self) -> BlockShape {
        [self.alpha, self.beta, self.nu, self.gamma, self.m, self.n]
    }

    pub fn rank(&self) -> usize {
        self.shape().iter().map(|&b| b as usize).sum()
    }

    /// Total number of stored components: spinor axes contribute a factor 2,
    /// vector axes a factor 4.
    pub fn component_count(&self) -> usize {
        let spin = self.alpha + self.beta + self.nu + self.gamma;
        let vec = self.m + self.n;
        (1usize << spin) * 4usize.pow(vec as u32)
    }

    /// The block-swapped type `(nu, gamma | alpha, beta | m, n)`.
    pub fn swap_bar(&self) -> SpinTensorType {
        SpinTensorType::new(self.nu, self.gamma, self.alpha, self.beta, self.m, self.n)
    }

    /// Block id (0..6) of an axis position.
    pub fn block_of(&self, pos: usize) -> usize {
        let shape = self.shape();
        let mut acc = 0usize;
        for (b, &len) in shape.iter().enumerate() {
            acc += len as usize;
            if pos < acc {
                return b;
            }
        }
        panic!("axis position {pos} out of range for {self}");
    }

    /// Start offset of a block in the flat index tuple.
    pub fn block_start(&self, block: usize) -> usize {
        self.shape()[..block].iter().map(|&b| b as usize).sum()
    }

    /// `(length, first digit)` of the axis at `pos`: spinor axes are
    /// `(2, 1)`, vector axes `(4, 0)`.
    pub fn axis(&self, pos: usize) -> (u8, u8) {
        if self.block_of(pos) < 4 {
            (2, 1)
        } else {
            (4, 0)
        }
    }

    /// All multi-indices in storage order.
    pub fn indices(&self) -> Vec<IndexTuple> {
        let rank = self.rank();
        let mut out = Vec::with_capacity(self.component_count());
        let mut idx: IndexTuple = (0..rank).map(|p| self.axis(p).1).collect();
        loop {
            out.push(idx.clone());
            // Odometer increment, last axis fastest.
            let mut pos = rank;
            loop {
                if pos == 0 {
                    return out;
                }
                pos -= 1;
                let (len, base) = self.axis(pos);
                if idx[pos] + 1 < base + len {
                    idx[pos] += 1;
                    break;
                }
                idx[pos] = base;
            }
        }
    }

    /// Linear offset of a multi-index.
    pub fn offset(&self, idx: &IndexTuple) -> usize {
        debug_assert_eq!(idx.len(), self.rank(), "index rank mismatch for {self}");
        let mut off = 0usize;
        for (pos, &digit) in idx.iter().enumerate() {
            let (len, base) = self.axis(pos);
            debug_assert!(
                digit >= base && digit < base + len,
                "digit {digit} out of range at position {pos} for {self}"
            );
            off = off * len as usize + (digit - base) as usize;
        }
        off
    }

    /// Rearranges a multi-index of this type into the layout of
    /// [`SpinTensorType::swap_bar`]: the spinor and barred-spinor blocks
    /// trade places, vector blocks stay.
    pub fn swap_bar_index(&self, idx: &IndexTuple) -> IndexTuple {
        let s = |b: usize| {
            let start = self.block_start(b);
            let len = self.shape()[b] as usize;
            &idx[start..start + len]
        };
        let mut out = IndexTuple::new();
        for b in [2usize, 3, 0, 1, 4, 5] {
            out.extend_from_slice(s(b));
        }
        out
    }
}

impl fmt::Display for SpinTensorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({},{}|{},{}|{},{})",
            self.alpha, self.beta, self.nu, self.gamma, self.m, self.n
        )
    }
}

/// Dense storage of one exact scalar per multi-index of a spin-tensor type.
/// This is also the representation of an extended field: the entries may
/// depend on the base coordinates and on the native variables of a bundle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentArray {
    ty: SpinTensorType,
    comps: Vec<ScalarExpr>,
}

/// An extended spin-tensorial field in an equipped chart, represented by its
/// component array.
pub type ExtendedField = ComponentArray;

impl ComponentArray {
    pub fn zero(ty: SpinTensorType) -> Self {
        ComponentArray {
            ty,
            comps: vec![ScalarExpr::zero(); ty.component_count()],
        }
    }

    pub fn from_fn(ty: SpinTensorType, mut f: impl FnMut(&IndexTuple) -> ScalarExpr) -> Self {
        let mut comps = Vec::with_capacity(ty.component_count());
        for idx in ty.indices() {
            comps.push(f(&idx));
        }
        ComponentArray { ty, comps }
    }

    /// A rank-zero field holding one scalar.
    pub fn scalar(e: ScalarExpr) -> Self {
        ComponentArray {
            ty: SpinTensorType::scalar(),
            comps: vec![e],
        }
    }

    pub fn ty(&self) -> SpinTensorType {
        self.ty
    }

    pub fn get(&self, idx: &IndexTuple) -> &ScalarExpr {
        &self.comps[self.ty.offset(idx)]
    }

    pub fn set(&mut self, idx: &IndexTuple, e: ScalarExpr) {
        let off = self.ty.offset(idx);
        self.comps[off] = e;
    }

    pub fn components(&self) -> &[ScalarExpr] {
        &self.comps
    }

    pub fn into_scalar(mut self) -> ScalarExpr {
        assert_eq!(self.ty, SpinTensorType::scalar());
        self.comps.pop().unwrap()
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(ScalarExpr::is_zero)
    }

    pub fn map(&self, f: impl Fn(&ScalarExpr) -> ScalarExpr) -> Self {
        ComponentArray {
            ty: self.ty,
            comps: self.comps.iter().map(f).collect(),
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.ty, rhs.ty, "type mismatch in field addition");
        ComponentArray {
            ty: self.ty,
            comps: self
                .comps
                .iter()
                .zip(&rhs.comps)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!(self.ty, rhs.ty, "type mismatch in field subtraction");
        ComponentArray {
            ty: self.ty,
            comps: self
                .comps
                .iter()
                .zip(&rhs.comps)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn neg(&self) -> Self {
        self.map(|e| -e)
    }

    pub fn scale(&self, c: &GaussianRational) -> Self {
        self.map(|e| e.scale(c))
    }

    /// First index whose component differs from `rhs`, with the difference.
    pub fn first_difference(&self, rhs: &Self) -> Option<(IndexTuple, ScalarExpr)> {
        assert_eq!(self.ty, rhs.ty, "type mismatch in field comparison");
        for idx in self.ty.indices() {
            let d = self.get(&idx) - rhs.get(&idx);
            if !d.is_zero() {
                return Some((idx, d));
            }
        }
        None
    }
}

/// The canonical semilinear isomorphism: spinor and barred-spinor index
/// blocks trade places and every component is conjugated. Involutive.
pub fn tau(x: &ComponentArray) -> ComponentArray {
    let ty2 = x.ty().swap_bar();
    ComponentArray::from_fn(ty2, |idx| x.get(&ty2.swap_bar_index(idx)).bar())
}

/// Declaration of a composite bundle: the list of slot types whose component
/// coordinates, together with the base coordinates, form the variable
/// universe of every scalar expression.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompositeBundleSpec {
    types: Vec<SpinTensorType>,
    slot_base: u8,
}

impl CompositeBundleSpec {
    pub fn new(types: Vec<SpinTensorType>) -> Self {
        CompositeBundleSpec {
            types,
            slot_base: 0,
        }
    }

    /// Same slot types, renumbered to start after `base` slots. Used to give
    /// a second chart its own disjoint copy of the native variables.
    pub fn with_slot_base(&self, base: u8) -> Self {
        CompositeBundleSpec {
            types: self.types.clone(),
            slot_base: base,
        }
    }

    /// Number of slots.
    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn types(&self) -> &[SpinTensorType] {
        &self.types
    }

    /// Type of the 1-based slot `p`.
    pub fn ty(&self, p: usize) -> SpinTensorType {
        self.types[p - 1]
    }

    pub fn check_slot(&self, p: usize) -> Result<(), BundleError> {
        if p == 0 || p > self.types.len() {
            return Err(BundleError::SlotOutOfRange {
                slot: p,
                count: self.types.len(),
            });
        }
        Ok(())
    }

    /// Global slot number written into variables of the 1-based slot `p`.
    pub fn global_slot(&self, p: usize) -> u8 {
        self.slot_base + p as u8
    }

    /// The native variable of slot `p` at a multi-index.
    pub fn var(&self, p: usize, idx: &IndexTuple) -> Var {
        let ty = self.ty(p);
        debug_assert_eq!(idx.len(), ty.rank());
        Var::Native(NativeVar {
            slot: self.global_slot(p),
            shape: ty.shape(),
            index: idx.clone(),
        })
    }

    pub fn bar_var(&self, p: usize, idx: &IndexTuple) -> Var {
        self.var(p, idx).bar()
    }

    /// The field whose components are the native variables of slot `p`
    /// themselves.
    pub fn native_field(&self, p: usize) -> ExtendedField {
        let ty = self.ty(p);
        ComponentArray::from_fn(ty, |idx| ScalarExpr::var(self.var(p, idx)))
    }

    /// The conjugate-image of the native field of slot `p`: block-swapped
    /// type with barred variables as components.
    pub fn native_bar_field(&self, p: usize) -> ExtendedField {
        tau(&self.native_field(p))
    }

    /// Every native variable and its bar-partner, in canonical order.
    pub fn all_vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        for p in 1..=self.len() {
            for idx in self.ty(p).indices() {
                out.push(self.var(p, &idx));
            }
        }
        let bars: Vec<Var> = out.iter().map(Var::bar).collect();
        out.extend(bars);
        out
    }
}

/// Transition between two equipped charts: the spinor transition matrix, its
/// exact inverse, and their images in the Lorentz group.
#[derive(Clone, Debug)]
pub struct ChartTransition {
    pub s2: SL2Matrix,
    pub t2: SL2Matrix,
    pub s4: Lorentz4Matrix,
    pub t4: Lorentz4Matrix,
}

impl ChartTransition {
    pub fn new(s2: SL2Matrix) -> Self {
        let t2 = s2.inverse();
        let s4 = varphi(&s2);
        let t4 = varphi(&t2);
        ChartTransition { s2, t2, s4, t4 }
    }

    pub fn identity() -> Self {
        ChartTransition::new(SL2Matrix::identity())
    }

    /// The single transition equivalent to `self` followed by `then`.
    pub fn compose(&self, then: &ChartTransition) -> Self {
        ChartTransition::new(self.s2.mul(&then.s2))
    }
}

/// Which way a component transformation runs between the two charts of a
/// transition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransformDirection {
    /// Express components in the transformed (tilde) chart.
    ToTilde,
    /// Recover components in the original chart from tilde components.
    FromTilde,
}

impl TransformDirection {
    pub fn reverse(self) -> Self {
        match self {
            TransformDirection::ToTilde => TransformDirection::FromTilde,
            TransformDirection::FromTilde => TransformDirection::ToTilde,
        }
    }
}

/// The product of one transition-matrix factor per index slot relating the
/// component at `tgt` to the component at `src`.
fn transform_weight(
    t: &ChartTransition,
    ty: SpinTensorType,
    tgt: &IndexTuple,
    src: &IndexTuple,
    dir: TransformDirection,
) -> ScalarExpr {
    let mut w = ScalarExpr::one();
    for pos in 0..ty.rank() {
        let (a, b) = (tgt[pos], src[pos]);
        let factor = match (ty.block_of(pos), dir) {
            // Upper spinor: inverse matrix on the new upper index.
            (0, TransformDirection::ToTilde) => t.t2.entry(a, b).clone(),
            (0, TransformDirection::FromTilde) => t.s2.entry(a, b).clone(),
            // Lower spinor: direct matrix, summed index on top.
            (1, TransformDirection::ToTilde) => t.s2.entry(b, a).clone(),
            (1, TransformDirection::FromTilde) => t.t2.entry(b, a).clone(),
            // Barred spinor slots carry the conjugated factors.
            (2, TransformDirection::ToTilde) => t.t2.entry(a, b).bar(),
            (2, TransformDirection::FromTilde) => t.s2.entry(a, b).bar(),
            (3, TransformDirection::ToTilde) => t.s2.entry(b, a).bar(),
            (3, TransformDirection::FromTilde) => t.t2.entry(b, a).bar(),
            // Vector slots use the Lorentz images.
            (4, TransformDirection::ToTilde) => t.t4.entry(a, b).clone(),
            (4, TransformDirection::FromTilde) => t.s4.entry(a, b).clone(),
            (5, TransformDirection::ToTilde) => t.s4.entry(b, a).clone(),
            (5, TransformDirection::FromTilde) => t.t4.entry(b, a).clone(),
            _ => unreachable!(),
        };
        if factor.is_zero() {
            return ScalarExpr::zero();
        }
        w = &w * &factor;
    }
    w
}

/// Change-of-frame action on a component array: one transition-matrix factor
/// per index slot, direct matrices on lower slots, inverses on upper slots,
/// conjugates on barred slots, Lorentz images on vector slots.
pub fn transform_components(
    x: &ComponentArray,
    t: &ChartTransition,
    dir: TransformDirection,
) -> ComponentArray {
    let ty = x.ty();
    let sources = ty.indices();
    ComponentArray::from_fn(ty, |tgt| {
        let mut acc = ScalarExpr::zero();
        for src in &sources {
            let w = transform_weight(t, ty, tgt, src, dir);
            if !w.is_zero() {
                acc.add_assign(&(&w * x.get(src)));
            }
        }
        acc
    })
}

/// The linear substitution expressing the native variables of `from` through
/// the native variables of `to` across a chart transition. Barred variables
/// map to the conjugated expansion.
pub fn chart_substitution(
    from: &CompositeBundleSpec,
    to: &CompositeBundleSpec,
    t: &ChartTransition,
) -> std::collections::BTreeMap<Var, ScalarExpr> {
    assert_eq!(from.types(), to.types(), "charts must share slot types");
    let mut map = std::collections::BTreeMap::new();
    for p in 1..=from.len() {
        let ty = from.ty(p);
        let indices = ty.indices();
        for tgt in &indices {
            let mut expansion = ScalarExpr::zero();
            for src in &indices {
                let w = transform_weight(t, ty, tgt, src, TransformDirection::FromTilde);
                if !w.is_zero() {
                    expansion.add_assign(&(&w * &ScalarExpr::var(to.var(p, src))));
                }
            }
            map.insert(from.var(p, tgt), expansion.clone());
            map.insert(from.bar_var(p, tgt), expansion.bar());
        }
    }
    map
}

/// An equipped local chart: the frame expansion coefficients, their exact
/// inverse, and optionally the transition to a second chart.
#[derive(Clone, Debug)]
pub struct FrameChart {
    pub upsilon: Mat<4>,
    pub upsilon_inv: Mat<4>,
    pub transition: Option<ChartTransition>,
}

impl FrameChart {
    /// The holonomic chart: frame vectors are the coordinate derivations.
    pub fn holonomic() -> Self {
        FrameChart {
            upsilon: Mat::identity(),
            upsilon_inv: Mat::identity(),
            transition: None,
        }
    }

    /// Builds a chart from frame coefficients, computing the exact inverse.
    /// The determinant must be a nonzero constant; generated instances keep
    /// it equal to one so the inverse stays polynomial.
    pub fn new(upsilon: Mat<4>) -> Result<Self, BundleError> {
        let upsilon_inv = upsilon
            .inverse_constant_det()
            .map_err(|_| BundleError::SingularFrame {
                det: upsilon.det().to_string(),
            })?;
        Ok(FrameChart {
            upsilon,
            upsilon_inv,
            transition: None,
        })
    }

    pub fn with_transition(mut self, s2: SL2Matrix) -> Self {
        self.transition = Some(ChartTransition::new(s2));
        self
    }

    pub fn transition(&self) -> Result<&ChartTransition, BundleError> {
        self.transition.as_ref().ok_or(BundleError::MissingTransition)
    }

    /// The chart reached through the transition: its frame coefficients are
    /// the product of this chart's with the Lorentz image of the transition.
    pub fn transformed_chart(&self) -> Result<FrameChart, BundleError> {
        let t = self.transition()?;
        Ok(FrameChart {
            upsilon: self.upsilon.mul(t.s4.mat()),
            upsilon_inv: t.t4.mat().mul(&self.upsilon_inv),
            transition: None,
        })
    }

    /// Directional derivative along the `i`-th frame vector.
    pub fn lie_derivative(&self, i: u8, f: &ScalarExpr) -> ScalarExpr {
        let mut acc = ScalarExpr::zero();
        for j in 0..4u8 {
            let coeff = &self.upsilon.e[j as usize][i as usize];
            if coeff.is_zero() {
                continue;
            }
            let d = f.partial(&Var::base(j));
            if !d.is_zero() {
                acc.add_assign(&(coeff * &d));
            }
        }
        acc
    }
}

/// The frame's commutator coefficients, antisymmetric in the two lower
/// indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructureConstants {
    c: Vec<ScalarExpr>,
}

impl StructureConstants {
    pub fn at(&self, k: u8, i: u8, j: u8) -> &ScalarExpr {
        &self.c[(k as usize * 4 + i as usize) * 4 + j as usize]
    }
}

/// Solves the frame-commutator expansion for the structure constants:
/// contract the antisymmetrized frame-derivative expression with the inverse
/// frame matrix.
pub fn structure_constants(f: &FrameChart) -> StructureConstants {
    let u = &f.upsilon;
    let uinv = &f.upsilon_inv;
    let mut lhs = vec![ScalarExpr::zero(); 64]; // (m, i, j)
    for m in 0..4usize {
        for i in 0..4usize {
            for j in 0..4usize {
                if i == j {
                    continue;
                }
                let mut acc = ScalarExpr::zero();
                for s in 0..4usize {
                    let dj = u.e[m][j].partial(&Var::base(s as u8));
                    if !dj.is_zero() {
                        acc.add_assign(&(&u.e[s][i] * &dj));
                    }
                    let di = u.e[m][i].partial(&Var::base(s as u8));
                    if !di.is_zero() {
                        acc.sub_assign(&(&u.e[s][j] * &di));
                    }
                }
                lhs[(m * 4 + i) * 4 + j] = acc;
            }
        }
    }
    let mut c = vec![ScalarExpr::zero(); 64];
    for k in 0..4usize {
        for i in 0..4usize {
            for j in 0..4usize {
                let mut acc = ScalarExpr::zero();
                for m in 0..4usize {
                    let l = &lhs[(m * 4 + i) * 4 + j];
                    if !l.is_zero() {
                        acc.add_assign(&(&uinv.e[k][m] * l));
                    }
                }
                c[(k * 4 + i) * 4 + j] = acc;
            }
        }
    }
    StructureConstants { c }
}

/// The inhomogeneous terms of the connection transformation law: a vector
/// family and a spinor family, indexed by (new index, frame direction,
/// old index).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThetaParams {
    theta: Vec<ScalarExpr>,    // k, dir, j all 0..4
    vartheta: Vec<ScalarExpr>, // k, j in 1..=2, dir 0..4
}

impl ThetaParams {
    pub fn theta(&self, k: u8, dir: u8, j: u8) -> &ScalarExpr {
        &self.theta[(k as usize * 4 + dir as usize) * 4 + j as usize]
    }

    pub fn vartheta(&self, k: u8, dir: u8, j: u8) -> &ScalarExpr {
        &self.vartheta[((k - 1) as usize * 4 + dir as usize) * 2 + (j - 1) as usize]
    }

    pub fn is_zero(&self) -> bool {
        self.theta.iter().all(ScalarExpr::is_zero)
            && self.vartheta.iter().all(ScalarExpr::is_zero)
    }
}

/// Which of the two equivalent printed expressions to use when computing the
/// theta parameters; their exact agreement is one of the verified properties.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThetaForm {
    /// Contract the direct matrix with frame-derivatives of the inverse.
    DirectOnInverseDerivative,
    /// Negated contraction of frame-derivatives of the direct matrix with
    /// the inverse.
    NegatedDerivativeOnInverse,
}

/// Theta parameters of the chart's transition, differentiating in this
/// chart's own coordinates with this chart's own frame.
pub fn theta_params(f: &FrameChart, form: ThetaForm) -> Result<ThetaParams, BundleError> {
    let t = f.transition()?;
    Ok(theta_with_frame(f, t, form, false))
}

/// Theta parameters as seen from the transformed chart: same transition, but
/// the Lie derivative runs along the transformed frame and the roles of the
/// direct and inverse matrices swap.
pub fn theta_params_tilde(f: &FrameChart, form: ThetaForm) -> Result<ThetaParams, BundleError> {
    let t = f.transition()?;
    let tilde = f.transformed_chart()?;
    Ok(theta_with_frame(&tilde, t, form, true))
}

fn theta_with_frame(
    frame: &FrameChart,
    t: &ChartTransition,
    form: ThetaForm,
    tilde: bool,
) -> ThetaParams {
    // In this chart the "direct" matrix carries the new frame on the left of
    // the transition relation; from the transformed chart the roles swap.
    let (s4, t4) = if tilde {
        (t.t4.mat(), t.s4.mat())
    } else {
        (t.s4.mat(), t.t4.mat())
    };
    let (s2, t2) = if tilde {
        (t.t2.mat(), t.s2.mat())
    } else {
        (t.s2.mat(), t.t2.mat())
    };

    let mut theta = vec![ScalarExpr::zero(); 64];
    for k in 0..4usize {
        for dir in 0..4u8 {
            for j in 0..4usize {
                let mut acc = ScalarExpr::zero();
                for a in 0..4usize {
                    match form {
                        ThetaForm::DirectOnInverseDerivative => {
                            let d = frame.lie_derivative(dir, &t4.e[a][j]);
                            if !d.is_zero() {
                                acc.add_assign(&(&s4.e[k][a] * &d));
                            }
                        }
                        ThetaForm::NegatedDerivativeOnInverse => {
                            let d = frame.lie_derivative(dir, &s4.e[k][a]);
                            if !d.is_zero() {
                                acc.sub_assign(&(&d * &t4.e[a][j]));
                            }
                        }
                    }
                }
                theta[(k * 4 + dir as usize) * 4 + j] = acc;
            }
        }
    }

    let mut vartheta = vec![ScalarExpr::zero(); 16];
    for k in 0..2usize {
        for dir in 0..4u8 {
            for j in 0..2usize {
                let mut acc = ScalarExpr::zero();
                for a in 0..2usize {
                    match form {
                        ThetaForm::DirectOnInverseDerivative => {
                            let d = frame.lie_derivative(dir, &t2.e[a][j]);
                            if !d.is_zero() {
                                acc.add_assign(&(&s2.e[k][a] * &d));
                            }
                        }
                        ThetaForm::NegatedDerivativeOnInverse => {
                            let d = frame.lie_derivative(dir, &s2.e[k][a]);
                            if !d.is_zero() {
                                acc.sub_assign(&(&d * &t2.e[a][j]));
                            }
                        }
                    }
                }
                vartheta[(k * 4 + dir as usize) * 2 + j] = acc;
            }
        }
    }

    ThetaParams { theta, vartheta }
}

/// `idx` with the digit at `pos` replaced by `v`.
pub fn index_with(idx: &IndexTuple, pos: usize, v: u8) -> IndexTuple {
    let mut out: IndexTuple = SmallVec::from_slice(idx);
    out[pos] = v;
    out
}
