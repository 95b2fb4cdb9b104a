//! Exact scalar engine: multivariate polynomials over Gaussian rationals.
//!
//! Every scalar the crate manipulates is a [`ScalarExpr`]: a canonical sparse
//! polynomial in the base coordinates `x0..x3` and the native component
//! variables of a composite bundle, with [`GaussianRational`] coefficients.
//! Conjugate component variables are independent formal variables paired to
//! their partners through [`Var::bar`] (Wirtinger convention), so formal
//! partial derivatives treat a variable and its bar-partner as independent.
//!
//! Equality of expressions is structural equality of the canonical form, so
//! identity checking reduces to `lhs - rhs == 0` with no tolerances anywhere.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num::{BigInt, BigRational, One, Zero};
use smallvec::SmallVec;
use thiserror::Error;

/// Exact rational number, arbitrary precision.
pub type Rational = BigRational;

/// Errors raised by scalar evaluation.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlgebraError {
    /// Evaluation hit a variable with no assigned value.
    #[error("no value assigned to variable `{0}`")]
    MissingAssignment(Var),
    /// Division by an exact zero.
    #[error("division by zero")]
    DivisionByZero,
}

/// A complex number with exact rational real and imaginary parts.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct GaussianRational {
    re: Rational,
    im: Rational,
}

impl GaussianRational {
    pub fn new(re: Rational, im: Rational) -> Self {
        GaussianRational { re, im }
    }

    pub fn from_int(n: i64) -> Self {
        GaussianRational::new(Rational::from_integer(n.into()), Rational::zero())
    }

    /// `p/q` as an exact real rational. Panics on `q == 0`.
    pub fn from_ratio(p: i64, q: i64) -> Self {
        GaussianRational::new(
            Rational::new(BigInt::from(p), BigInt::from(q)),
            Rational::zero(),
        )
    }

    /// `(p/q) + (r/s)i`.
    pub fn from_parts(p: i64, q: i64, r: i64, s: i64) -> Self {
        GaussianRational::new(
            Rational::new(BigInt::from(p), BigInt::from(q)),
            Rational::new(BigInt::from(r), BigInt::from(s)),
        )
    }

    pub fn zero() -> Self {
        GaussianRational::default()
    }

    pub fn one() -> Self {
        GaussianRational::from_int(1)
    }

    /// The imaginary unit.
    pub fn i() -> Self {
        GaussianRational::new(Rational::zero(), Rational::one())
    }

    pub fn re(&self) -> &Rational {
        &self.re
    }

    pub fn im(&self) -> &Rational {
        &self.im
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    /// Complex conjugate.
    pub fn conj(&self) -> Self {
        GaussianRational::new(self.re.clone(), -self.im.clone())
    }

    /// Exact multiplicative inverse; `None` for zero.
    pub fn recip(&self) -> Option<Self> {
        let norm = &self.re * &self.re + &self.im * &self.im;
        if norm.is_zero() {
            return None;
        }
        Some(GaussianRational::new(
            &self.re / &norm,
            -(&self.im / &norm),
        ))
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = GaussianRational::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// `true` when both parts are non-negative and the real part dominates;
    /// used only for orthochronicity checks on constant matrices.
    pub fn is_real_ge_one(&self) -> bool {
        self.im.is_zero() && self.re >= Rational::one()
    }
}

impl Add for &GaussianRational {
    type Output = GaussianRational;
    fn add(self, rhs: &GaussianRational) -> GaussianRational {
        GaussianRational::new(&self.re + &rhs.re, &self.im + &rhs.im)
    }
}

impl Sub for &GaussianRational {
    type Output = GaussianRational;
    fn sub(self, rhs: &GaussianRational) -> GaussianRational {
        GaussianRational::new(&self.re - &rhs.re, &self.im - &rhs.im)
    }
}

impl Mul for &GaussianRational {
    type Output = GaussianRational;
    fn mul(self, rhs: &GaussianRational) -> GaussianRational {
        GaussianRational::new(
            &self.re * &rhs.re - &self.im * &rhs.im,
            &self.re * &rhs.im + &self.im * &rhs.re,
        )
    }
}

impl Neg for &GaussianRational {
    type Output = GaussianRational;
    fn neg(self) -> GaussianRational {
        GaussianRational::new(-self.re.clone(), -self.im.clone())
    }
}

fn fmt_rational(r: &Rational, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    write!(f, "{}/{}", r.numer(), r.denom())
}

impl fmt::Display for GaussianRational {
    /// Canonical pair form `(p/q,r/s)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        fmt_rational(&self.re, f)?;
        write!(f, ",")?;
        fmt_rational(&self.im, f)?;
        write!(f, ")")
    }
}

/// Multi-index digits of one native component variable, in storage order:
/// upper-spinor block, lower-spinor block, upper-barred block, lower-barred
/// block, upper-vector block, lower-vector block.
pub type IndexTuple = SmallVec<[u8; 8]>;

/// The `(alpha, beta, nu, gamma, m, n)` block lengths of a slot type, carried
/// on each native variable so its digits can be regrouped without context.
pub type BlockShape = [u8; 6];

/// One native component variable of a bundle slot.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NativeVar {
    /// 1-based slot number in the composite bundle.
    pub slot: u8,
    /// Block lengths of the slot's type.
    pub shape: BlockShape,
    /// Index digits in storage order (spinor digits 1..=2, vector 0..=3).
    pub index: IndexTuple,
}

/// A formal variable: a base coordinate, a native slot component, or the
/// conjugate partner of a native slot component.
///
/// The derived `Ord` is the stable total order used for canonical monomials:
/// base coordinates first, then native variables by slot and digits, then
/// their bar-partners.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    /// `x^k`, `k` in `0..=3`.
    Base(u8),
    Native(NativeVar),
    NativeBar(NativeVar),
}

impl Var {
    pub fn base(k: u8) -> Var {
        debug_assert!(k < 4);
        Var::Base(k)
    }

    /// The conjugation partner: base coordinates are real and fixed, native
    /// variables swap with their barred copies. Involutive.
    pub fn bar(&self) -> Var {
        match self {
            Var::Base(k) => Var::Base(*k),
            Var::Native(v) => Var::NativeBar(v.clone()),
            Var::NativeBar(v) => Var::Native(v.clone()),
        }
    }

    fn fmt_native(v: &NativeVar, f: &mut fmt::Formatter<'_>, barred: bool) -> fmt::Result {
        let name = if barred { "Sbar" } else { "S" };
        write!(f, "{name}[{}]{{", v.slot)?;
        let [a, b, nu, g, m, n] = v.shape;
        let blocks = [a, b, nu, g, m, n].map(usize::from);
        let mut starts = [0usize; 6];
        let mut acc = 0;
        for (i, len) in blocks.iter().enumerate() {
            starts[i] = acc;
            acc += len;
        }
        // Upper digits are blocks 0 (spinor), 2 (barred), 4 (vector).
        let mut first = true;
        for &blk in &[0usize, 2, 4] {
            for p in 0..blocks[blk] {
                if !first {
                    write!(f, " ")?;
                }
                write!(f, "{}", v.index[starts[blk] + p])?;
                first = false;
            }
        }
        write!(f, ";")?;
        let mut first = true;
        for &blk in &[1usize, 3, 5] {
            for p in 0..blocks[blk] {
                if !first {
                    write!(f, " ")?;
                }
                write!(f, "{}", v.index[starts[blk] + p])?;
                first = false;
            }
        }
        write!(f, "}}")
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::Base(k) => write!(f, "x{k}"),
            Var::Native(v) => Var::fmt_native(v, f, false),
            Var::NativeBar(v) => Var::fmt_native(v, f, true),
        }
    }
}

/// A power product of variables. Canonical: no zero exponents.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial(BTreeMap<Var, u32>);

impl Monomial {
    pub fn one() -> Self {
        Monomial::default()
    }

    pub fn var(v: Var) -> Self {
        let mut m = BTreeMap::new();
        m.insert(v, 1);
        Monomial(m)
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.values().sum()
    }

    pub fn exponent(&self, v: &Var) -> u32 {
        self.0.get(v).copied().unwrap_or(0)
    }

    pub fn factors(&self) -> impl Iterator<Item = (&Var, u32)> {
        self.0.iter().map(|(v, e)| (v, *e))
    }

    pub fn mul(&self, rhs: &Monomial) -> Monomial {
        let mut out = self.0.clone();
        for (v, e) in &rhs.0 {
            *out.entry(v.clone()).or_insert(0) += e;
        }
        Monomial(out)
    }

    /// Divides out one power of `v`; `None` if `v` is absent.
    fn shift_down(&self, v: &Var) -> Option<Monomial> {
        let e = self.exponent(v);
        if e == 0 {
            return None;
        }
        let mut out = self.0.clone();
        if e == 1 {
            out.remove(v);
        } else {
            out.insert(v.clone(), e - 1);
        }
        Some(Monomial(out))
    }

    fn bar(&self) -> Monomial {
        Monomial(self.0.iter().map(|(v, e)| (v.bar(), *e)).collect())
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return write!(f, "1");
        }
        let mut first = true;
        for (v, e) in &self.0 {
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if *e == 1 {
                write!(f, "{v}")?;
            } else {
                write!(f, "{v}^{e}")?;
            }
        }
        Ok(())
    }
}

/// Canonical sparse polynomial with Gaussian-rational coefficients.
///
/// Invariant: no stored coefficient is zero, so `is_zero` and structural
/// equality decide polynomial identity.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ScalarExpr {
    terms: BTreeMap<Monomial, GaussianRational>,
}

impl ScalarExpr {
    pub fn zero() -> Self {
        ScalarExpr::default()
    }

    pub fn one() -> Self {
        ScalarExpr::constant(GaussianRational::one())
    }

    pub fn constant(c: GaussianRational) -> Self {
        let mut e = ScalarExpr::zero();
        e.add_term(Monomial::one(), c);
        e
    }

    pub fn from_int(n: i64) -> Self {
        ScalarExpr::constant(GaussianRational::from_int(n))
    }

    pub fn var(v: Var) -> Self {
        let mut e = ScalarExpr::zero();
        e.add_term(Monomial::var(v), GaussianRational::one());
        e
    }

    pub fn base_coord(k: u8) -> Self {
        ScalarExpr::var(Var::base(k))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The constant value if the expression has no variable dependence.
    pub fn as_constant(&self) -> Option<GaussianRational> {
        match self.terms.len() {
            0 => Some(GaussianRational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &GaussianRational)> {
        self.terms.iter()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Canonical insertion: accumulates and drops zero coefficients.
    pub fn add_term(&mut self, m: Monomial, c: GaussianRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = &*e.get() + &c;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn add_assign(&mut self, rhs: &ScalarExpr) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), c.clone());
        }
    }

    pub fn sub_assign(&mut self, rhs: &ScalarExpr) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), -c);
        }
    }

    pub fn scale(&self, c: &GaussianRational) -> ScalarExpr {
        let mut out = ScalarExpr::zero();
        if c.is_zero() {
            return out;
        }
        for (m, k) in &self.terms {
            out.add_term(m.clone(), k * c);
        }
        out
    }

    pub fn pow(&self, e: u32) -> ScalarExpr {
        let mut acc = ScalarExpr::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Exact formal partial derivative; every other variable, including the
    /// bar-partner of `v`, is held constant.
    pub fn partial(&self, v: &Var) -> ScalarExpr {
        let mut out = ScalarExpr::zero();
        for (m, c) in &self.terms {
            let e = m.exponent(v);
            if e == 0 {
                continue;
            }
            let lowered = m.shift_down(v).expect("nonzero exponent");
            out.add_term(lowered, c * &GaussianRational::from_int(e as i64));
        }
        out
    }

    /// `true` when `v` occurs in some term.
    pub fn depends_on(&self, v: &Var) -> bool {
        self.terms.keys().any(|m| m.exponent(v) > 0)
    }

    /// Component-level conjugation: coefficients are conjugated and every
    /// variable is replaced by its bar-partner. A ring anti-involution that
    /// fixes the (real) base coordinates.
    pub fn bar(&self) -> ScalarExpr {
        let mut out = ScalarExpr::zero();
        for (m, c) in &self.terms {
            out.add_term(m.bar(), c.conj());
        }
        out
    }

    /// Exact evaluation under a total assignment of the occurring variables.
    pub fn eval<F>(&self, assign: F) -> Result<GaussianRational, AlgebraError>
    where
        F: Fn(&Var) -> Option<GaussianRational>,
    {
        let mut acc = GaussianRational::zero();
        for (m, c) in &self.terms {
            let mut term = c.clone();
            for (v, e) in m.factors() {
                let val = assign(v).ok_or_else(|| AlgebraError::MissingAssignment(v.clone()))?;
                term = &term * &val.pow(e);
            }
            acc = &acc + &term;
        }
        Ok(acc)
    }

    /// Replaces variables by expressions; unmapped variables stay themselves.
    /// A ring homomorphism for any substitution map.
    pub fn substitute<F>(&self, subst: F) -> ScalarExpr
    where
        F: Fn(&Var) -> Option<ScalarExpr>,
    {
        let mut out = ScalarExpr::zero();
        for (m, c) in &self.terms {
            let mut term = ScalarExpr::constant(c.clone());
            for (v, e) in m.factors() {
                let factor = match subst(v) {
                    Some(e_new) => e_new,
                    None => ScalarExpr::var(v.clone()),
                };
                term = &term * &factor.pow(e);
            }
            out.add_assign(&term);
        }
        out
    }

    /// Every variable occurring in the expression, in canonical order.
    pub fn variables(&self) -> Vec<Var> {
        let mut out: Vec<Var> = Vec::new();
        for m in self.terms.keys() {
            for (v, _) in m.factors() {
                if out.binary_search(v).is_err() {
                    let pos = out.binary_search(v).unwrap_err();
                    out.insert(pos, v.clone());
                }
            }
        }
        out
    }
}

impl Add for &ScalarExpr {
    type Output = ScalarExpr;
    fn add(self, rhs: &ScalarExpr) -> ScalarExpr {
        let mut out = self.clone();
        out.add_assign(rhs);
        out
    }
}

impl Sub for &ScalarExpr {
    type Output = ScalarExpr;
    fn sub(self, rhs: &ScalarExpr) -> ScalarExpr {
        let mut out = self.clone();
        out.sub_assign(rhs);
        out
    }
}

impl Mul for &ScalarExpr {
    type Output = ScalarExpr;
    fn mul(self, rhs: &ScalarExpr) -> ScalarExpr {
        let mut out = ScalarExpr::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl Neg for &ScalarExpr {
    type Output = ScalarExpr;
    fn neg(self) -> ScalarExpr {
        let mut out = ScalarExpr::zero();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }
}

impl fmt::Display for ScalarExpr {
    /// Canonical text form: terms in monomial order joined by ` + `, each
    /// `(p/q,r/s)` or `(p/q,r/s)*v^e*...`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            if !m.is_one() {
                write!(f, "*{m}")?;
            }
        }
        Ok(())
    }
}
