//! The three differentiation operator families on extended fields: native
//! multivariate (plain and barred), degenerate, and spatial covariant, plus
//! the extended connection and its change-of-chart transformation.
//!
//! All operators are directional (contracted with a field of the matching
//! type), return freshly built fields, and are exact; commutators of
//! operators are computed as honest compositions.

use crate::algebra::{IndexTuple, ScalarExpr};
use crate::bundle::{
    chart_substitution, index_with, theta_params, BundleError, ComponentArray,
    CompositeBundleSpec, ExtendedField, FrameChart, SpinTensorType, ThetaForm,
};
use crate::mutation::{self, MutationSite};

/// One component family of an extended connection, indexed
/// `(new index k, frame direction j, old index i)`. Spinor families use the
/// digit range `1..=2` on `k` and `i`, the vector family `0..=3`; the
/// direction `j` always runs `0..=3`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConnFamily {
    dim: u8,
    data: Vec<ScalarExpr>,
}

impl ConnFamily {
    pub fn zero(dim: u8) -> Self {
        debug_assert!(dim == 2 || dim == 4);
        ConnFamily {
            dim,
            data: vec![ScalarExpr::zero(); dim as usize * 4 * dim as usize],
        }
    }

    pub fn from_fn(dim: u8, mut f: impl FnMut(u8, u8, u8) -> ScalarExpr) -> Self {
        let mut fam = ConnFamily::zero(dim);
        for k in fam.index_range() {
            for j in 0..4u8 {
                for i in fam.index_range() {
                    let off = fam.offset(k, j, i);
                    fam.data[off] = f(k, j, i);
                }
            }
        }
        fam
    }

    pub fn dim(&self) -> u8 {
        self.dim
    }

    /// Paper-range digits of the `k`/`i` axes.
    pub fn index_range(&self) -> std::ops::RangeInclusive<u8> {
        if self.dim == 2 {
            1..=2
        } else {
            0..=3
        }
    }

    fn offset(&self, k: u8, j: u8, i: u8) -> usize {
        let base = if self.dim == 2 { 1 } else { 0 };
        ((k - base) as usize * 4 + j as usize) * self.dim as usize + (i - base) as usize
    }

    pub fn at(&self, k: u8, j: u8, i: u8) -> &ScalarExpr {
        &self.data[self.offset(k, j, i)]
    }

    pub fn set(&mut self, k: u8, j: u8, i: u8, e: ScalarExpr) {
        let off = self.offset(k, j, i);
        self.data[off] = e;
    }

    pub fn map(&self, f: impl Fn(&ScalarExpr) -> ScalarExpr) -> Self {
        ConnFamily {
            dim: self.dim,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(ScalarExpr::is_zero)
    }
}

/// An extended spinor connection: the spinor family, the barred-spinor
/// family, and the vector family. Components may depend on the base
/// coordinates and on every native variable of the bundle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Connection {
    pub a: ConnFamily,
    pub abar: ConnFamily,
    pub gamma: ConnFamily,
}

impl Connection {
    pub fn zero() -> Self {
        Connection {
            a: ConnFamily::zero(2),
            abar: ConnFamily::zero(2),
            gamma: ConnFamily::zero(4),
        }
    }

    pub fn new(a: ConnFamily, abar: ConnFamily, gamma: ConnFamily) -> Self {
        assert_eq!(a.dim(), 2);
        assert_eq!(abar.dim(), 2);
        assert_eq!(gamma.dim(), 4);
        Connection { a, abar, gamma }
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.abar.is_zero() && self.gamma.is_zero()
    }

    /// The barred family is not constrained to be the conjugate of the plain
    /// one; this helper validates that special case when wanted.
    pub fn is_conjugate_pair(&self) -> bool {
        for k in 1..=2u8 {
            for j in 0..4u8 {
                for i in 1..=2u8 {
                    if self.abar.at(k, j, i) != &self.a.at(k, j, i).bar() {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// The degenerate triple formed by freezing the frame direction: the
    /// connection's index-slot action in direction `j`.
    pub fn direction_triple(&self, j: u8) -> DegenerateTriple {
        let sfrak = ComponentArray::from_fn(DegenerateTriple::SPINOR_TYPE, |idx| {
            self.a.at(idx[0], j, idx[1]).clone()
        });
        let sfrak_bar = ComponentArray::from_fn(DegenerateTriple::BARRED_TYPE, |idx| {
            self.abar.at(idx[0], j, idx[1]).clone()
        });
        let sbold = ComponentArray::from_fn(DegenerateTriple::VECTOR_TYPE, |idx| {
            self.gamma.at(idx[0], j, idx[1]).clone()
        });
        DegenerateTriple {
            sfrak,
            sfrak_bar,
            sbold,
        }
    }
}

/// The data of a degenerate differentiation: an operator-valued field per
/// index class. The component arrays have the fixed types
/// `(1,1|0,0|0,0)`, `(0,0|1,1|0,0)` and `(0,0|0,0|1,1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegenerateTriple {
    sfrak: ExtendedField,
    sfrak_bar: ExtendedField,
    sbold: ExtendedField,
}

impl DegenerateTriple {
    pub const SPINOR_TYPE: SpinTensorType = SpinTensorType::new(1, 1, 0, 0, 0, 0);
    pub const BARRED_TYPE: SpinTensorType = SpinTensorType::new(0, 0, 1, 1, 0, 0);
    pub const VECTOR_TYPE: SpinTensorType = SpinTensorType::new(0, 0, 0, 0, 1, 1);

    pub fn new(
        sfrak: ExtendedField,
        sfrak_bar: ExtendedField,
        sbold: ExtendedField,
    ) -> Result<Self, BundleError> {
        for (field, ty) in [
            (&sfrak, Self::SPINOR_TYPE),
            (&sfrak_bar, Self::BARRED_TYPE),
            (&sbold, Self::VECTOR_TYPE),
        ] {
            if field.ty() != ty {
                return Err(BundleError::TypeMismatch {
                    expected: ty.to_string(),
                    got: field.ty().to_string(),
                });
            }
        }
        Ok(DegenerateTriple {
            sfrak,
            sfrak_bar,
            sbold,
        })
    }

    pub fn zero() -> Self {
        DegenerateTriple {
            sfrak: ComponentArray::zero(Self::SPINOR_TYPE),
            sfrak_bar: ComponentArray::zero(Self::BARRED_TYPE),
            sbold: ComponentArray::zero(Self::VECTOR_TYPE),
        }
    }

    pub fn fields(&self) -> (&ExtendedField, &ExtendedField, &ExtendedField) {
        (&self.sfrak, &self.sfrak_bar, &self.sbold)
    }

    fn spinor_entry(&self, upper: u8, lower: u8) -> &ScalarExpr {
        self.sfrak.get(&IndexTuple::from_slice(&[upper, lower]))
    }

    fn bar_entry(&self, upper: u8, lower: u8) -> &ScalarExpr {
        self.sfrak_bar.get(&IndexTuple::from_slice(&[upper, lower]))
    }

    fn vector_entry(&self, upper: u8, lower: u8) -> &ScalarExpr {
        self.sbold.get(&IndexTuple::from_slice(&[upper, lower]))
    }

    /// Pointwise matrix commutator per family; the triple of the commutator
    /// of two degenerate differentiations.
    pub fn commutator(&self, rhs: &DegenerateTriple) -> DegenerateTriple {
        let comm = |a: &ExtendedField, b: &ExtendedField, dim: u8, ty: SpinTensorType| {
            let base = if dim == 2 { 1u8 } else { 0 };
            ComponentArray::from_fn(ty, |idx| {
                let (p, q) = (idx[0], idx[1]);
                let mut acc = ScalarExpr::zero();
                for r in base..base + dim {
                    let ab = a.get(&IndexTuple::from_slice(&[p, r]))
                        * b.get(&IndexTuple::from_slice(&[r, q]));
                    let ba = b.get(&IndexTuple::from_slice(&[p, r]))
                        * a.get(&IndexTuple::from_slice(&[r, q]));
                    acc.add_assign(&ab);
                    acc.sub_assign(&ba);
                }
                acc
            })
        };
        DegenerateTriple {
            sfrak: comm(&self.sfrak, &rhs.sfrak, 2, Self::SPINOR_TYPE),
            sfrak_bar: comm(&self.sfrak_bar, &rhs.sfrak_bar, 2, Self::BARRED_TYPE),
            sbold: comm(&self.sbold, &rhs.sbold, 4, Self::VECTOR_TYPE),
        }
    }

    pub fn map(&self, f: impl Fn(&ExtendedField) -> ExtendedField) -> DegenerateTriple {
        DegenerateTriple {
            sfrak: f(&self.sfrak),
            sfrak_bar: f(&self.sfrak_bar),
            sbold: f(&self.sbold),
        }
    }

    pub fn neg(&self) -> DegenerateTriple {
        self.map(ComponentArray::neg)
    }

    pub fn is_zero(&self) -> bool {
        self.sfrak.is_zero() && self.sfrak_bar.is_zero() && self.sbold.is_zero()
    }
}

/// The derivative-free differentiation: one contraction per index slot,
/// positive on upper slots, negative on lower slots, with the spinor family
/// on spinor slots, the barred family on barred slots and the vector family
/// on vector slots.
pub fn degenerate_apply(d: &DegenerateTriple, x: &ExtendedField) -> ExtendedField {
    let ty = x.ty();
    ComponentArray::from_fn(ty, |idx| {
        let mut acc = ScalarExpr::zero();
        for pos in 0..ty.rank() {
            let (len, base) = ty.axis(pos);
            let digit = idx[pos];
            match ty.block_of(pos) {
                0 => {
                    for v in base..base + len {
                        let term = d.spinor_entry(digit, v) * x.get(&index_with(idx, pos, v));
                        acc.add_assign(&term);
                    }
                }
                1 => {
                    for w in base..base + len {
                        let term = d.spinor_entry(w, digit) * x.get(&index_with(idx, pos, w));
                        acc.add_assign(&mutation::signed(
                            MutationSite::DegenerateLowerSpinor,
                            -&term,
                        ));
                    }
                }
                2 => {
                    for v in base..base + len {
                        let term = d.bar_entry(digit, v) * x.get(&index_with(idx, pos, v));
                        acc.add_assign(&mutation::signed(MutationSite::DegenerateUpperBar, term));
                    }
                }
                3 => {
                    for w in base..base + len {
                        let term = d.bar_entry(w, digit) * x.get(&index_with(idx, pos, w));
                        acc.sub_assign(&term);
                    }
                }
                4 => {
                    for v in base..base + len {
                        let term = d.vector_entry(digit, v) * x.get(&index_with(idx, pos, v));
                        acc.add_assign(&term);
                    }
                }
                5 => {
                    for w in base..base + len {
                        let term = d.vector_entry(w, digit) * x.get(&index_with(idx, pos, w));
                        acc.add_assign(&mutation::signed(
                            MutationSite::DegenerateLowerVector,
                            -&term,
                        ));
                    }
                }
                _ => unreachable!(),
            }
        }
        acc
    })
}

/// Native multivariate differentiation of `x` along `y` in slot `p`: the sum
/// over the slot's multi-indices of `y`-components times exact partials with
/// respect to the slot's native variables. `y` must have the slot's type.
pub fn native_derivative(
    x: &ExtendedField,
    spec: &CompositeBundleSpec,
    p: usize,
    y: &ExtendedField,
) -> Result<ExtendedField, BundleError> {
    spec.check_slot(p)?;
    let ty_p = spec.ty(p);
    if y.ty() != ty_p {
        return Err(BundleError::TypeMismatch {
            expected: ty_p.to_string(),
            got: y.ty().to_string(),
        });
    }
    let indices = ty_p.indices();
    Ok(x.map(|f| {
        let mut acc = ScalarExpr::zero();
        for idx in &indices {
            let d = f.partial(&spec.var(p, idx));
            if !d.is_zero() {
                acc.add_assign(&(y.get(idx) * &d));
            }
        }
        acc
    }))
}

/// Barred native multivariate differentiation: partials run with respect to
/// the conjugate native variables, and the directional field `y` has the
/// block-swapped slot type.
pub fn native_derivative_bar(
    x: &ExtendedField,
    spec: &CompositeBundleSpec,
    p: usize,
    y: &ExtendedField,
) -> Result<ExtendedField, BundleError> {
    spec.check_slot(p)?;
    let ty_p = spec.ty(p);
    if y.ty() != ty_p.swap_bar() {
        return Err(BundleError::TypeMismatch {
            expected: ty_p.swap_bar().to_string(),
            got: y.ty().to_string(),
        });
    }
    let indices = ty_p.indices();
    Ok(x.map(|f| {
        let mut acc = ScalarExpr::zero();
        for idx in &indices {
            let d = f.partial(&spec.bar_var(p, idx));
            if !d.is_zero() {
                acc.add_assign(&(y.get(&ty_p.swap_bar_index(idx)) * &d));
            }
        }
        acc
    }))
}

/// Per-direction coefficient fields of the covariant derivative's native
/// blocks: the direction triple of the connection applied to each slot's
/// native field and to its conjugate image.
pub struct NativeBrackets {
    pub plain: Vec<ExtendedField>,
    pub barred: Vec<ExtendedField>,
}

pub fn native_brackets(c: &Connection, spec: &CompositeBundleSpec, j: u8) -> NativeBrackets {
    let d = c.direction_triple(j);
    let plain = (1..=spec.len())
        .map(|p| degenerate_apply(&d, &spec.native_field(p)))
        .collect();
    let barred = (1..=spec.len())
        .map(|p| degenerate_apply(&d, &spec.native_bar_field(p)))
        .collect();
    NativeBrackets { plain, barred }
}

/// The scalar part of the covariant derivative in direction `j`: the
/// frame-directed base derivative minus the native and conjugate-native
/// connection blocks. This is the full covariant derivative on rank-zero
/// fields.
pub fn scalar_covariant_derivative_with(
    brackets: &NativeBrackets,
    frame: &FrameChart,
    spec: &CompositeBundleSpec,
    j: u8,
    f: &ScalarExpr,
) -> ScalarExpr {
    let mut acc = mutation::signed(MutationSite::CovariantFrame, frame.lie_derivative(j, f));
    for p in 1..=spec.len() {
        let ty = spec.ty(p);
        for idx in ty.indices() {
            let d = f.partial(&spec.var(p, &idx));
            if !d.is_zero() {
                let term = brackets.plain[p - 1].get(&idx) * &d;
                acc.add_assign(&mutation::signed(MutationSite::CovariantNative, -&term));
            }
            let dbar = f.partial(&spec.bar_var(p, &idx));
            if !dbar.is_zero() {
                let term = brackets.barred[p - 1].get(&ty.swap_bar_index(&idx)) * &dbar;
                acc.add_assign(&mutation::signed(MutationSite::CovariantNativeBar, -&term));
            }
        }
    }
    acc
}

/// Spatial covariant derivative of `x` in frame direction `j`: the scalar
/// part applied to every component plus the direction triple's index-slot
/// action.
pub fn covariant_derivative(
    c: &Connection,
    frame: &FrameChart,
    spec: &CompositeBundleSpec,
    j: u8,
    x: &ExtendedField,
) -> ExtendedField {
    let brackets = native_brackets(c, spec, j);
    let scalar_part = x.map(|f| scalar_covariant_derivative_with(&brackets, frame, spec, j, f));
    scalar_part.add(&degenerate_apply(&c.direction_triple(j), x))
}

/// Covariant derivative along a vector-type field: directions contracted
/// against the field's components.
pub fn covariant_derivative_along(
    c: &Connection,
    frame: &FrameChart,
    spec: &CompositeBundleSpec,
    xvec: &ExtendedField,
    w: &ExtendedField,
) -> ExtendedField {
    assert_eq!(xvec.ty(), SpinTensorType::vector(), "direction field type");
    let mut acc = ComponentArray::zero(w.ty());
    for j in 0..4u8 {
        let coeff = xvec.get(&IndexTuple::from_slice(&[j]));
        if coeff.is_zero() {
            continue;
        }
        let dj = covariant_derivative(c, frame, spec, j, w);
        acc = acc.add(&dj.map(|e| coeff * e));
    }
    acc
}

/// The connection of the transformed chart: the three-matrix transport of
/// each family with the matching theta parameters removed, and every native
/// variable argument rewritten through the component transformation into the
/// transformed chart's native coordinates (reusing the same variable names).
pub fn connection_transform(
    c: &Connection,
    frame: &FrameChart,
    spec: &CompositeBundleSpec,
) -> Result<Connection, BundleError> {
    connection_transform_into(c, frame, spec, spec)
}

/// As [`connection_transform`], but the rewritten native variables land in
/// the slots of `spec_to` (which must declare the same slot types). Passing a
/// disjoint second spec keeps both charts' variables distinguishable.
pub fn connection_transform_into(
    c: &Connection,
    frame: &FrameChart,
    spec: &CompositeBundleSpec,
    spec_to: &CompositeBundleSpec,
) -> Result<Connection, BundleError> {
    let t = frame.transition()?;
    let th = theta_params(frame, ThetaForm::DirectOnInverseDerivative)?;
    let subst_map = chart_substitution(spec, spec_to, t);
    let subst = |e: &ScalarExpr| e.substitute(|v| subst_map.get(v).cloned());

    let a = ConnFamily::from_fn(2, |anew, cdir, bnew| {
        let mut acc = ScalarExpr::zero();
        for k in 1..=2u8 {
            for i in 1..=2u8 {
                for j in 0..4u8 {
                    let w = &(t.t2.entry(anew, k) * t.s2.entry(i, bnew)) * t.s4.entry(j, cdir);
                    if w.is_zero() {
                        continue;
                    }
                    let shifted = c.a.at(k, j, i) - th.vartheta(k, j, i);
                    acc.add_assign(&(&w * &shifted));
                }
            }
        }
        subst(&acc)
    });
    let abar = ConnFamily::from_fn(2, |anew, cdir, bnew| {
        let mut acc = ScalarExpr::zero();
        for k in 1..=2u8 {
            for i in 1..=2u8 {
                for j in 0..4u8 {
                    let w = &(&t.t2.entry(anew, k).bar() * &t.s2.entry(i, bnew).bar())
                        * t.s4.entry(j, cdir);
                    if w.is_zero() {
                        continue;
                    }
                    let shifted = c.abar.at(k, j, i) - &th.vartheta(k, j, i).bar();
                    acc.add_assign(&(&w * &shifted));
                }
            }
        }
        subst(&acc)
    });
    let gamma = ConnFamily::from_fn(4, |anew, cdir, bnew| {
        let mut acc = ScalarExpr::zero();
        for k in 0..4u8 {
            for i in 0..4u8 {
                for j in 0..4u8 {
                    let w = &(t.t4.entry(anew, k) * t.s4.entry(i, bnew)) * t.s4.entry(j, cdir);
                    if w.is_zero() {
                        continue;
                    }
                    let shifted = c.gamma.at(k, j, i) - th.theta(k, j, i);
                    acc.add_assign(&(&w * &shifted));
                }
            }
        }
        subst(&acc)
    });

    Ok(Connection { a, abar, gamma })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{GaussianRational, Var};
    use crate::bundle::{tau as bundle_tau, ChartTransition};
    use crate::spingroup::{Mat, SL2Matrix};

    fn spec_spinor() -> CompositeBundleSpec {
        CompositeBundleSpec::new(vec![SpinTensorType::new(1, 0, 0, 0, 0, 0)])
    }

    fn spec_mixed() -> CompositeBundleSpec {
        CompositeBundleSpec::new(vec![SpinTensorType::new(1, 1, 0, 0, 0, 0)])
    }

    fn gr(p: i64, q: i64) -> GaussianRational {
        GaussianRational::from_ratio(p, q)
    }

    /// A small dense connection with distinct constant and coordinate terms.
    fn sample_connection(spec: &CompositeBundleSpec) -> Connection {
        let native0 = spec.native_field(1);
        let first = native0.components()[0].clone();
        let a = ConnFamily::from_fn(2, |k, j, i| {
            let mut e = ScalarExpr::constant(gr((k + j) as i64, 1 + i as i64));
            e.add_assign(&ScalarExpr::base_coord(j).scale(&gr(i as i64, 2)));
            if (k, i) == (1, 2) {
                e.add_assign(&first.scale(&gr(1, 3)));
            }
            e
        });
        let abar = ConnFamily::from_fn(2, |k, j, i| {
            let mut e = ScalarExpr::constant(GaussianRational::from_parts(0, 1, k as i64, 2));
            e.add_assign(&ScalarExpr::base_coord(i.min(3)).scale(&gr(j as i64, 1)));
            if (k, i) == (2, 1) {
                e.add_assign(&first.bar().scale(&gr(1, 2)));
            }
            e
        });
        let gamma = ConnFamily::from_fn(4, |k, j, i| {
            if (k + j + i) % 3 == 0 {
                ScalarExpr::base_coord(k).scale(&gr(1 + i as i64, 2))
            } else {
                ScalarExpr::constant(gr(k as i64 - i as i64, 1 + j as i64))
            }
        });
        Connection::new(a, abar, gamma)
    }

    #[test]
    fn degenerate_zero_triple_and_scalar() {
        let spec = spec_spinor();
        let x = spec.native_field(1);
        assert!(degenerate_apply(&DegenerateTriple::zero(), &x).is_zero());
        let s = ComponentArray::scalar(ScalarExpr::base_coord(0));
        let c = sample_connection(&spec);
        assert!(degenerate_apply(&c.direction_triple(0), &s).is_zero());
    }

    #[test]
    fn degenerate_single_upper_spinor_slot() {
        // On a one-upper-spinor-index field only the spinor contraction
        // survives: result^a = sum_v sfrak^a_v x^v.
        let spec = spec_spinor();
        let x = spec.native_field(1);
        let c = sample_connection(&spec);
        let d = c.direction_triple(2);
        let out = degenerate_apply(&d, &x);
        for a in 1..=2u8 {
            let mut expect = ScalarExpr::zero();
            for v in 1..=2u8 {
                expect.add_assign(&(c.a.at(a, 2, v) * x.get(&IndexTuple::from_slice(&[v]))));
            }
            assert_eq!(out.get(&IndexTuple::from_slice(&[a])), &expect);
        }
    }

    #[test]
    fn native_derivative_basics() {
        let spec = spec_spinor();
        let y = spec
            .native_field(1)
            .map(|e| e.scale(&GaussianRational::from_parts(2, 1, 1, 2)));

        // Independent of natives: derivative vanishes.
        let x_base = ComponentArray::scalar(ScalarExpr::base_coord(3).pow(2));
        assert!(native_derivative(&x_base, &spec, 1, &y).unwrap().is_zero());

        // The native field differentiates to the direction field itself.
        let id = spec.native_field(1);
        assert_eq!(native_derivative(&id, &spec, 1, &y).unwrap(), y);

        // Leibniz on scalar products.
        let f = ComponentArray::scalar(id.components()[0].clone());
        let g = ComponentArray::scalar(&id.components()[1] * &ScalarExpr::base_coord(0));
        let fg = ComponentArray::scalar(&f.components()[0] * &g.components()[0]);
        let lhs = native_derivative(&fg, &spec, 1, &y).unwrap();
        let rhs_a = native_derivative(&f, &spec, 1, &y).unwrap();
        let rhs_b = native_derivative(&g, &spec, 1, &y).unwrap();
        let rhs = ComponentArray::scalar(
            &(&rhs_a.components()[0] * &g.components()[0])
                + &(&f.components()[0] * &rhs_b.components()[0]),
        );
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn native_derivative_type_errors() {
        let spec = spec_spinor();
        let wrong = ComponentArray::zero(SpinTensorType::vector());
        assert!(matches!(
            native_derivative(&wrong.clone(), &spec, 1, &wrong),
            Err(BundleError::TypeMismatch { .. })
        ));
        let y = spec.native_field(1);
        assert!(matches!(
            native_derivative(&y.clone(), &spec, 3, &y),
            Err(BundleError::SlotOutOfRange { .. })
        ));
    }

    #[test]
    fn native_derivative_bar_basics() {
        let spec = spec_spinor();
        let ybar = spec.native_bar_field(1);

        // Fields with no conjugate variables have vanishing barred derivative.
        let holo = spec.native_field(1);
        assert!(native_derivative_bar(&holo, &spec, 1, &ybar)
            .unwrap()
            .is_zero());

        // The conjugate native field differentiates to the direction field.
        let idbar = spec.native_bar_field(1);
        assert_eq!(
            native_derivative_bar(&idbar, &spec, 1, &ybar).unwrap(),
            ybar
        );
    }

    #[test]
    fn native_derivative_conjugation_symmetry() {
        // tau(native_bar(x, y)) == native(tau(x), tau(y))
        let spec = spec_mixed();
        let ty = spec.ty(1);
        let x = ComponentArray::from_fn(ty, |idx| {
            let v = ScalarExpr::var(spec.var(1, idx));
            let vb = ScalarExpr::var(spec.bar_var(1, idx));
            &(&v * &vb) + &ScalarExpr::base_coord(idx[0] - 1)
        });
        let y = ComponentArray::from_fn(ty.swap_bar(), |idx| {
            ScalarExpr::var(spec.bar_var(1, &ty.swap_bar().swap_bar_index(idx)))
                .scale(&GaussianRational::from_parts(1, 2, -1, 3))
        });
        let lhs = bundle_tau(&native_derivative_bar(&x, &spec, 1, &y).unwrap());
        let rhs = native_derivative(&bundle_tau(&x), &spec, 1, &bundle_tau(&y)).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn covariant_reduces_to_frame_derivative() {
        // Zero connection, holonomic frame, components depending on the base
        // coordinates only: the derivative is the plain coordinate partial.
        let spec = spec_spinor();
        let chart = FrameChart::holonomic();
        let x = ComponentArray::from_fn(spec.ty(1), |idx| {
            ScalarExpr::base_coord(0).pow(2).scale(&gr(idx[0] as i64, 1))
        });
        let out = covariant_derivative(&Connection::zero(), &chart, &spec, 0, &x);
        let expect = x.map(|e| e.partial(&Var::base(0)));
        assert_eq!(out, expect);

        // Depending only on natives with a zero connection: zero.
        let xn = spec.native_field(1);
        assert!(covariant_derivative(&Connection::zero(), &chart, &spec, 1, &xn).is_zero());
    }

    #[test]
    fn covariant_of_constant_one_is_zero() {
        let spec = spec_mixed();
        let chart = FrameChart::holonomic();
        let c = sample_connection(&spec);
        let one = ComponentArray::scalar(ScalarExpr::one());
        for j in 0..4u8 {
            assert!(covariant_derivative(&c, &chart, &spec, j, &one).is_zero());
        }
    }

    #[test]
    fn covariant_native_block_on_single_variable() {
        // Scalar field equal to the (1,1) native variable of a (1,1|0,0|0,0)
        // slot: the native block collects the two surviving connection terms.
        let spec = spec_mixed();
        let chart = FrameChart::holonomic();
        let c = sample_connection(&spec);
        let s = |u: u8, l: u8| ScalarExpr::var(spec.var(1, &IndexTuple::from_slice(&[u, l])));
        let x = ComponentArray::scalar(s(1, 1));
        for j in 0..4u8 {
            let out = covariant_derivative(&c, &chart, &spec, j, &x).into_scalar();
            // -(A^1_{j1} s11 + A^1_{j2} s21 - A^1_{j1} s11 - A^2_{j1} s12)
            let mut expect = ScalarExpr::zero();
            expect.sub_assign(&(c.a.at(1, j, 1) * &s(1, 1)));
            expect.sub_assign(&(c.a.at(1, j, 2) * &s(2, 1)));
            expect.add_assign(&(c.a.at(1, j, 1) * &s(1, 1)));
            expect.add_assign(&(c.a.at(2, j, 1) * &s(1, 2)));
            assert_eq!(out, expect, "direction {j}");
        }
    }

    /// Literal transcription of the covariant derivative specialized to a
    /// one-upper-one-lower spinor field over a single slot of the same type,
    /// written independently of the production code path.
    fn covariant_oracle_spinor_pair(
        c: &Connection,
        chart: &FrameChart,
        spec: &CompositeBundleSpec,
        j: u8,
        x: &ExtendedField,
    ) -> ExtendedField {
        let s = |u: u8, l: u8| ScalarExpr::var(spec.var(1, &IndexTuple::from_slice(&[u, l])));
        let sbar =
            |u: u8, l: u8| ScalarExpr::var(spec.bar_var(1, &IndexTuple::from_slice(&[u, l])));
        ComponentArray::from_fn(x.ty(), |idx| {
            let (a, b) = (idx[0], idx[1]);
            let xc = x.get(idx);
            let mut acc = ScalarExpr::zero();
            // Frame-directed base derivative.
            for k in 0..4u8 {
                acc.add_assign(
                    &(&chart.upsilon.e[k as usize][j as usize] * &xc.partial(&Var::base(k))),
                );
            }
            // Native block: bracket contracted against native partials.
            for i in 1..=2u8 {
                for ip in 1..=2u8 {
                    let mut bracket = ScalarExpr::zero();
                    for v in 1..=2u8 {
                        bracket.add_assign(&(c.a.at(i, j, v) * &s(v, ip)));
                    }
                    for w in 1..=2u8 {
                        bracket.sub_assign(&(c.a.at(w, j, ip) * &s(i, w)));
                    }
                    let d = xc.partial(&spec.var(1, &IndexTuple::from_slice(&[i, ip])));
                    acc.sub_assign(&(&bracket * &d));
                }
            }
            // Conjugate block: barred bracket against conjugate partials.
            for i in 1..=2u8 {
                for ip in 1..=2u8 {
                    let mut bracket = ScalarExpr::zero();
                    for v in 1..=2u8 {
                        bracket.add_assign(&(c.abar.at(i, j, v) * &sbar(v, ip)));
                    }
                    for w in 1..=2u8 {
                        bracket.sub_assign(&(c.abar.at(w, j, ip) * &sbar(i, w)));
                    }
                    let d = xc.partial(&spec.bar_var(1, &IndexTuple::from_slice(&[i, ip])));
                    acc.sub_assign(&(&bracket * &d));
                }
            }
            // Index-slot action on the field's own two indices.
            for v in 1..=2u8 {
                acc.add_assign(&(c.a.at(a, j, v) * x.get(&IndexTuple::from_slice(&[v, b]))));
            }
            for w in 1..=2u8 {
                acc.sub_assign(&(c.a.at(w, j, b) * x.get(&IndexTuple::from_slice(&[a, w]))));
            }
            acc
        })
    }

    #[test]
    fn covariant_matches_hand_unrolled_oracle() {
        let spec = spec_mixed();
        let mut m = Mat::<4>::identity();
        m.e[1][0] = ScalarExpr::base_coord(1);
        let chart = FrameChart::new(m).unwrap();
        let c = sample_connection(&spec);
        let x = ComponentArray::from_fn(spec.ty(1), |idx| {
            let v = ScalarExpr::var(spec.var(1, idx));
            let vb = ScalarExpr::var(spec.bar_var(1, &IndexTuple::from_slice(&[idx[1], idx[0]])));
            &(&v * &ScalarExpr::base_coord(2)) + &vb.scale(&gr(idx[0] as i64, 2))
        });
        for j in 0..4u8 {
            let got = covariant_derivative(&c, &chart, &spec, j, &x);
            let expect = covariant_oracle_spinor_pair(&c, &chart, &spec, j, &x);
            assert_eq!(got, expect, "direction {j}");
        }
    }

    #[test]
    fn covariant_is_leibniz_on_scalar_products() {
        let spec = spec_spinor();
        let chart = FrameChart::holonomic();
        let c = sample_connection(&spec);
        let f = spec.native_field(1).components()[0].clone();
        let g = &spec.native_bar_field(1).components()[1] * &ScalarExpr::base_coord(1);
        for j in 0..4u8 {
            let dfg =
                covariant_derivative(&c, &chart, &spec, j, &ComponentArray::scalar(&f * &g))
                    .into_scalar();
            let df =
                covariant_derivative(&c, &chart, &spec, j, &ComponentArray::scalar(f.clone()))
                    .into_scalar();
            let dg =
                covariant_derivative(&c, &chart, &spec, j, &ComponentArray::scalar(g.clone()))
                    .into_scalar();
            assert_eq!(dfg, &(&df * &g) + &(&f * &dg), "direction {j}");
        }
    }

    #[test]
    fn connection_transform_identity_and_zero() {
        let spec = spec_spinor();
        let chart = FrameChart::holonomic().with_transition(SL2Matrix::identity());
        let c = sample_connection(&spec);
        let transformed = connection_transform(&c, &chart, &spec).unwrap();
        assert_eq!(transformed, c);

        // Constant non-identity transition maps the zero connection to zero.
        let boost = SL2Matrix::new(Mat {
            e: [
                [ScalarExpr::from_int(2), ScalarExpr::zero()],
                [ScalarExpr::zero(), ScalarExpr::constant(gr(1, 2))],
            ],
        })
        .unwrap();
        let chart2 = FrameChart::holonomic().with_transition(boost);
        let z = connection_transform(&Connection::zero(), &chart2, &spec).unwrap();
        assert!(z.is_zero());
    }

    #[test]
    fn connection_transform_missing_transition() {
        let spec = spec_spinor();
        let err = connection_transform(&sample_connection(&spec), &FrameChart::holonomic(), &spec)
            .unwrap_err();
        assert!(matches!(err, BundleError::MissingTransition));
    }

    #[test]
    fn connection_transform_cocycle() {
        // Transforming through two transitions in sequence equals
        // transforming through their composite.
        let spec = spec_spinor();
        let tri = |e: ScalarExpr, upper: bool| {
            let m = if upper {
                Mat {
                    e: [
                        [ScalarExpr::one(), e],
                        [ScalarExpr::zero(), ScalarExpr::one()],
                    ],
                }
            } else {
                Mat {
                    e: [
                        [ScalarExpr::one(), ScalarExpr::zero()],
                        [e, ScalarExpr::one()],
                    ],
                }
            };
            SL2Matrix::new(m).unwrap()
        };
        let s1 = tri(ScalarExpr::base_coord(0), true);
        let s2 = tri(
            ScalarExpr::base_coord(1).scale(&GaussianRational::from_parts(0, 1, 1, 2)),
            false,
        );

        let mut m = Mat::<4>::identity();
        m.e[2][1] = ScalarExpr::base_coord(3);
        let chart0 = FrameChart::new(m).unwrap().with_transition(s1.clone());
        let chart1 = chart0
            .transformed_chart()
            .unwrap()
            .with_transition(s2.clone());
        let composite = {
            let t = ChartTransition::new(s1).compose(&ChartTransition::new(s2));
            let mut c0 = chart0.clone();
            c0.transition = Some(t);
            c0
        };

        let c = sample_connection(&spec);
        let step = connection_transform(&c, &chart0, &spec).unwrap();
        let two_steps = connection_transform(&step, &chart1, &spec).unwrap();
        let direct = connection_transform(&c, &composite, &spec).unwrap();
        assert_eq!(two_steps, direct);
    }

    #[test]
    fn conjugate_pair_helper() {
        let spec = spec_spinor();
        let c = sample_connection(&spec);
        assert!(!c.is_conjugate_pair());
        let paired = Connection::new(c.a.clone(), c.a.map(ScalarExpr::bar), ConnFamily::zero(4));
        assert!(paired.is_conjugate_pair());
    }
}
