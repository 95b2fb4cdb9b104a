//! Injectable single-sign mutations for sensitivity testing.
//!
//! Each site names one sign (or one summation range) inside the degenerate
//! action, the covariant derivative, the torsion, or the curvature formulas.
//! Activating a site flips exactly that sign for the duration of a closure;
//! the identity suites must then fail, which is how the test suite proves it
//! can detect transcription errors.

use std::cell::Cell;
use std::fmt;
use std::str::FromStr;

use crate::algebra::ScalarExpr;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MutationSite {
    /// Degenerate action: sign of the lower-spinor contraction group.
    DegenerateLowerSpinor,
    /// Degenerate action: sign of the upper-barred-spinor contraction group.
    DegenerateUpperBar,
    /// Degenerate action: sign of the lower-vector contraction group.
    DegenerateLowerVector,
    /// Covariant derivative: sign of the frame-directed base-derivative block.
    CovariantFrame,
    /// Covariant derivative: sign of the native-variable connection block.
    CovariantNative,
    /// Covariant derivative: sign of the conjugate-variable connection block.
    CovariantNativeBar,
    /// Torsion: sign of the reversed-direction connection term.
    TorsionGammaSwap,
    /// Torsion: sign of the structure-constant term.
    TorsionStructure,
    /// Curvature components: sign of the quadratic connection term.
    CurvatureQuadratic,
    /// Curvature components: sign of the structure-constant term.
    CurvatureStructure,
    /// Vector curvature components: restrict the quadratic summation index to
    /// the spinor range 1..=2 instead of the vector range 0..=3.
    VectorQuadSpinorRange,
}

pub const ALL_SITES: [MutationSite; 11] = [
    MutationSite::DegenerateLowerSpinor,
    MutationSite::DegenerateUpperBar,
    MutationSite::DegenerateLowerVector,
    MutationSite::CovariantFrame,
    MutationSite::CovariantNative,
    MutationSite::CovariantNativeBar,
    MutationSite::TorsionGammaSwap,
    MutationSite::TorsionStructure,
    MutationSite::CurvatureQuadratic,
    MutationSite::CurvatureStructure,
    MutationSite::VectorQuadSpinorRange,
];

impl MutationSite {
    pub fn name(&self) -> &'static str {
        match self {
            MutationSite::DegenerateLowerSpinor => "degenerate-lower-spinor",
            MutationSite::DegenerateUpperBar => "degenerate-upper-bar",
            MutationSite::DegenerateLowerVector => "degenerate-lower-vector",
            MutationSite::CovariantFrame => "covariant-frame",
            MutationSite::CovariantNative => "covariant-native",
            MutationSite::CovariantNativeBar => "covariant-native-bar",
            MutationSite::TorsionGammaSwap => "torsion-gamma-swap",
            MutationSite::TorsionStructure => "torsion-structure",
            MutationSite::CurvatureQuadratic => "curvature-quadratic",
            MutationSite::CurvatureStructure => "curvature-structure",
            MutationSite::VectorQuadSpinorRange => "vector-quad-spinor-range",
        }
    }
}

impl fmt::Display for MutationSite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MutationSite {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ALL_SITES
            .iter()
            .copied()
            .find(|site| site.name() == s)
            .ok_or_else(|| format!("unknown mutation site `{s}`"))
    }
}

thread_local! {
    static ACTIVE: Cell<Option<MutationSite>> = const { Cell::new(None) };
}

/// Runs `f` with the given mutation active on this thread.
pub fn with_active<R>(site: MutationSite, f: impl FnOnce() -> R) -> R {
    let prev = ACTIVE.with(|a| a.replace(Some(site)));
    let out = f();
    ACTIVE.with(|a| a.set(prev));
    out
}

/// Runs `f` with a mutation optionally active.
pub fn with_optional<R>(site: Option<MutationSite>, f: impl FnOnce() -> R) -> R {
    match site {
        Some(s) => with_active(s, f),
        None => f(),
    }
}

pub fn active() -> Option<MutationSite> {
    ACTIVE.with(|a| a.get())
}

/// `-e` when `site` is active, `e` otherwise. The call sites are the signs
/// the identity suites are required to pin down.
pub(crate) fn signed(site: MutationSite, e: ScalarExpr) -> ScalarExpr {
    if active() == Some(site) {
        -&e
    } else {
        e
    }
}

/// Summation range of the quadratic term in the vector curvature components:
/// the full vector range, unless the range mutation is active.
pub(crate) fn vector_quad_indices() -> &'static [u8] {
    if active() == Some(MutationSite::VectorQuadSpinorRange) {
        &[1, 2]
    } else {
        &[0, 1, 2, 3]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn activation_is_scoped() {
        assert_eq!(active(), None);
        let seen = with_active(MutationSite::TorsionStructure, || active());
        assert_eq!(seen, Some(MutationSite::TorsionStructure));
        assert_eq!(active(), None);
    }

    #[test]
    fn site_names_round_trip() {
        for site in ALL_SITES {
            assert_eq!(site.name().parse::<MutationSite>().unwrap(), site);
        }
    }
}
