//! Geometry on the unit hypersphere S^{d-1}.
//!
//! Embeddings are L2-normalized on construction and compared by geodesic
//! (angular) distance. The Semantic Grounding Index is the ratio of the
//! response's angular distance to the question over its angular distance
//! to the context, and the spherical triangle inequality bounds it.

use std::f64::consts::PI;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Tolerance for unit-norm and metric checks.
pub const TOLERANCE: f64 = 1e-9;

/// Norms at or below this are rejected by [`normalize`].
pub const MIN_NORM: f64 = 1e-12;

/// Vectors whose norm is this close to 1 are kept bit-for-bit, so that
/// normalization is idempotent and stored embeddings round-trip exactly.
const UNIT_SLACK: f64 = 1e-12;

/// An L2-normalized point on S^{d-1}.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitEmbedding {
    coords: Vec<f64>,
}

impl UnitEmbedding {
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coords
    }

    pub fn dot(&self, other: &UnitEmbedding) -> Result<f64> {
        check_dims(self.dim(), other.dim())?;
        Ok(dot(&self.coords, &other.coords))
    }

    pub(crate) fn from_unit_unchecked(coords: Vec<f64>) -> Self {
        debug_assert!((norm(&coords) - 1.0).abs() <= 1e-6);
        Self { coords }
    }
}

impl TryFrom<Vec<f64>> for UnitEmbedding {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        normalize_owned(v)
    }
}

impl Serialize for UnitEmbedding {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.coords.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for UnitEmbedding {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(deserializer)?;
        normalize_owned(v).map_err(serde::de::Error::custom)
    }
}

/// Geodesic distance between two unit vectors, in radians.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct AngularDistance(f64);

impl AngularDistance {
    /// Wraps a raw angle, clamping into [0, pi].
    pub fn new(radians: f64) -> Self {
        Self(radians.clamp(0.0, PI))
    }

    pub fn radians(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgiValue {
    pub ratio: f64,
    pub theta_rq: AngularDistance,
    pub theta_rc: AngularDistance,
}

/// Interval admitted for SGI by the spherical triangle inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgiBounds {
    pub lower: f64,
    pub upper: f64,
    pub theta_qc: AngularDistance,
}

impl SgiBounds {
    pub fn contains(&self, ratio: f64, tol: f64) -> bool {
        self.lower - tol <= ratio && ratio <= self.upper + tol
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub(crate) fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

fn normalize_owned(mut v: Vec<f64>) -> Result<UnitEmbedding> {
    if v.len() < 2 {
        return Err(Error::DimensionTooSmall(v.len()));
    }
    if let Some(&bad) = v.iter().find(|x| !x.is_finite()) {
        return Err(Error::NonFiniteScore(bad));
    }
    let n = norm(&v);
    if n <= MIN_NORM {
        return Err(Error::ZeroNormVector { norm: n });
    }
    if (n - 1.0).abs() > UNIT_SLACK {
        v.iter_mut().for_each(|x| *x /= n);
    }
    Ok(UnitEmbedding { coords: v })
}

/// Projects `v` onto the unit sphere.
pub fn normalize(v: &[f64]) -> Result<UnitEmbedding> {
    normalize_owned(v.to_vec())
}

/// `arccos` of the dot product, clamped so rounding noise never yields NaN.
pub fn angular_distance(a: &UnitEmbedding, b: &UnitEmbedding) -> Result<AngularDistance> {
    let cos = a.dot(b)?;
    Ok(AngularDistance::new(cos.clamp(-1.0, 1.0).acos()))
}

/// SGI(r; q, c) = theta(r, q) / theta(r, c).
pub fn sgi(q: &UnitEmbedding, c: &UnitEmbedding, r: &UnitEmbedding) -> Result<SgiValue> {
    check_dims(q.dim(), c.dim())?;
    let theta_rq = angular_distance(r, q)?;
    let theta_rc = angular_distance(r, c)?;
    if theta_rc.radians() <= TOLERANCE {
        return Err(Error::ResponseEqualsContext {
            theta: theta_rc.radians(),
        });
    }
    Ok(SgiValue {
        ratio: theta_rq.radians() / theta_rc.radians(),
        theta_rq,
        theta_rc,
    })
}

pub fn sgi_bounds(theta_qc: AngularDistance, theta_rc: AngularDistance) -> Result<SgiBounds> {
    if theta_rc.radians() <= TOLERANCE {
        return Err(Error::DegenerateDenominator {
            theta: theta_rc.radians(),
        });
    }
    let ratio = theta_qc.radians() / theta_rc.radians();
    Ok(SgiBounds {
        lower: (ratio - 1.0).abs(),
        upper: ratio + 1.0,
        theta_qc,
    })
}

/// Slack on both sides of |theta(q,c) - theta(r,c)| <= theta(r,q) <= theta(q,c) + theta(r,c).
///
/// Returns `(lower_slack, upper_slack)`; both are nonnegative up to rounding.
pub fn triangle_residuals(
    q: &UnitEmbedding,
    c: &UnitEmbedding,
    r: &UnitEmbedding,
) -> Result<(f64, f64)> {
    let rq = angular_distance(r, q)?.radians();
    let qc = angular_distance(q, c)?.radians();
    let rc = angular_distance(r, c)?.radians();
    Ok((rq - (qc - rc).abs(), qc + rc - rq))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

    fn u(v: &[f64]) -> UnitEmbedding {
        normalize(v).unwrap()
    }

    #[test]
    fn normalize_scales_to_unit() {
        let e = u(&[3.0, 4.0]);
        assert_abs_diff_eq!(e.as_slice()[0], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(e.as_slice()[1], 0.8, epsilon = 1e-15);
        assert_eq!(u(&[1.0, 0.0, 0.0]).as_slice(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn normalize_rejects_degenerate() {
        assert!(matches!(
            normalize(&[0.0, 0.0]),
            Err(Error::ZeroNormVector { .. })
        ));
        assert!(matches!(
            normalize(&[1e-13, 0.0]),
            Err(Error::ZeroNormVector { .. })
        ));
        assert_eq!(normalize(&[1.0]), Err(Error::DimensionTooSmall(1)));
    }

    #[test]
    fn angular_distance_examples() {
        let a = u(&[1.0, 0.0]);
        assert_eq!(angular_distance(&a, &a).unwrap().radians(), 0.0);
        assert_abs_diff_eq!(
            angular_distance(&a, &u(&[0.0, 1.0])).unwrap().radians(),
            FRAC_PI_2,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            angular_distance(&a, &u(&[-1.0, 0.0])).unwrap().radians(),
            PI,
            epsilon = 1e-15
        );
        assert!(matches!(
            angular_distance(&a, &u(&[1.0, 0.0, 0.0])),
            Err(Error::DimensionMismatch { expected: 2, found: 3 })
        ));
    }

    #[test]
    fn clamping_keeps_acos_finite() {
        // Nudge a vector just past unit norm; the dot product then exceeds 1.
        let a = UnitEmbedding::from_unit_unchecked(vec![1.0 + 1e-12, 0.0]);
        let b = UnitEmbedding::from_unit_unchecked(vec![-1.0 - 1e-12, 0.0]);
        assert_eq!(angular_distance(&a, &a).unwrap().radians(), 0.0);
        assert_eq!(angular_distance(&a, &b).unwrap().radians(), PI);
    }

    #[test]
    fn sgi_examples() {
        let q = u(&[1.0, 0.0]);
        let c = u(&[0.0, 1.0]);
        let mid = u(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]);
        let s = sgi(&q, &c, &mid).unwrap();
        assert_abs_diff_eq!(s.ratio, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.theta_rq.radians(), FRAC_PI_4, epsilon = 1e-12);

        assert_eq!(sgi(&q, &c, &q).unwrap().ratio, 0.0);
        assert!(matches!(
            sgi(&q, &c, &c),
            Err(Error::ResponseEqualsContext { .. })
        ));
        // q = c = r is also rejected on the denominator.
        assert!(matches!(
            sgi(&q, &q, &q),
            Err(Error::ResponseEqualsContext { .. })
        ));
    }

    #[test]
    fn sgi_bounds_examples() {
        let b = sgi_bounds(AngularDistance::new(FRAC_PI_2), AngularDistance::new(FRAC_PI_4)).unwrap();
        assert_abs_diff_eq!(b.lower, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b.upper, 3.0, epsilon = 1e-15);

        let b = sgi_bounds(AngularDistance::new(0.7), AngularDistance::new(0.7)).unwrap();
        assert_eq!((b.lower, b.upper), (0.0, 2.0));

        // q = c pins SGI to exactly 1.
        let b = sgi_bounds(AngularDistance::new(0.0), AngularDistance::new(FRAC_PI_2)).unwrap();
        assert_eq!((b.lower, b.upper), (1.0, 1.0));

        assert!(matches!(
            sgi_bounds(AngularDistance::new(1.0), AngularDistance::new(0.0)),
            Err(Error::DegenerateDenominator { .. })
        ));
    }

    #[test]
    fn triangle_residual_degenerate_cases() {
        let q = u(&[1.0, 0.0, 0.0]);
        let c = u(&[0.0, 1.0, 0.0]);
        let (lo, hi) = triangle_residuals(&q, &c, &c).unwrap();
        assert_abs_diff_eq!(lo, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(hi, 0.0, epsilon = 1e-15);

        assert_eq!(triangle_residuals(&q, &q, &q).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn deserialize_renormalizes() {
        let e: UnitEmbedding = serde_json::from_str("[0.0, 2.0]").unwrap();
        assert_eq!(e.as_slice(), &[0.0, 1.0]);
        assert!(serde_json::from_str::<UnitEmbedding>("[0.0, 0.0]").is_err());
    }

    #[test]
    fn normalize_is_idempotent_and_round_trips() {
        let v = [0.3, -1.7, 2.2, 0.01];
        let once = normalize(&v).unwrap();
        let twice = normalize(once.as_slice()).unwrap();
        assert_eq!(once, twice);
        let back: UnitEmbedding = serde_json::from_str(&serde_json::to_string(&once).unwrap()).unwrap();
        assert_eq!(back, once);
    }
}
