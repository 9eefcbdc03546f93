//! Bergman orthogonal polynomials over circular multiply connected domains.
//!
//! Two independent routes compute the monic orthogonal polynomials `P_n`:
//! [`oracle`] builds them from exact monomial moments in extended precision,
//! while [`series`] evaluates the contour-integral series generated by the
//! semigroup of contractions in [`family`]. The [`asymptotics`] module evaluates
//! the large-`n` predictions that the two routes are checked against.

pub mod asymptotics;
pub mod contour;
pub mod family;
pub mod geometry;
pub mod kernel;
pub mod moebius;
pub mod oracle;
pub mod series;
pub mod zeros;
