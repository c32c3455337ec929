use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{DfsError, Result};

/// End condition of an interpolating cubic spline.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplineEnds {
    /// Zero second derivative at both ends.
    #[default]
    Natural,
    /// Continuous third derivative at the second and penultimate knots.
    NotAKnot,
}

/// Piecewise cubic interpolant; segment `i` is `a + b·u + c·u² + d·u³` with `u = x − x_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct CubicSpline {
    knots: Vec<f64>,
    coeffs: Vec<[f64; 4]>,
}

impl CubicSpline {
    pub fn new(x: &[f64], y: &[f64], ends: SplineEnds) -> Result<Self> {
        let n = x.len();
        if y.len() != n {
            return Err(DfsError::DimensionMismatch { expected: n, found: y.len() });
        }
        let need = match ends {
            SplineEnds::Natural => 2,
            SplineEnds::NotAKnot => 4,
        };
        if n < need {
            return Err(DfsError::TooFewPoints { need, have: n });
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(DfsError::InvalidParameter("spline knots must be strictly increasing".into()));
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let slope: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();

        // Unknowns are the knot second derivatives.
        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut rhs = DVector::<f64>::zeros(n);
        for i in 1..n - 1 {
            a[(i, i - 1)] = h[i - 1];
            a[(i, i)] = 2.0 * (h[i - 1] + h[i]);
            a[(i, i + 1)] = h[i];
            rhs[i] = 6.0 * (slope[i] - slope[i - 1]);
        }
        match ends {
            SplineEnds::Natural => {
                a[(0, 0)] = 1.0;
                a[(n - 1, n - 1)] = 1.0;
            }
            SplineEnds::NotAKnot => {
                a[(0, 0)] = h[1];
                a[(0, 1)] = -(h[0] + h[1]);
                a[(0, 2)] = h[0];
                let k = n - 1;
                a[(k, k - 2)] = h[k - 1];
                a[(k, k - 1)] = -(h[k - 2] + h[k - 1]);
                a[(k, k)] = h[k - 2];
            }
        }
        let m = a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| DfsError::Numeric("singular spline system".into()))?;

        let coeffs = (0..n - 1)
            .map(|i| {
                let hi = h[i];
                [
                    y[i],
                    slope[i] - hi * (2.0 * m[i] + m[i + 1]) / 6.0,
                    m[i] / 2.0,
                    (m[i + 1] - m[i]) / (6.0 * hi),
                ]
            })
            .collect();
        Ok(CubicSpline { knots: x.to_vec(), coeffs })
    }

    fn segment(&self, x: f64) -> usize {
        let k = self.knots.partition_point(|&t| t <= x);
        k.saturating_sub(1).min(self.coeffs.len() - 1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let u = x - self.knots[i];
        let [a, b, c, d] = self.coeffs[i];
        a + u * (b + u * (c + u * d))
    }

    fn primitive(&self, i: usize, u: f64) -> f64 {
        let [a, b, c, d] = self.coeffs[i];
        u * (a + u * (b / 2.0 + u * (c / 3.0 + u * d / 4.0)))
    }

    /// Exact integral of the interpolant over `[lo, hi]`.
    pub fn integrate(&self, lo: f64, hi: f64) -> f64 {
        if hi < lo {
            return -self.integrate(hi, lo);
        }
        let (i0, i1) = (self.segment(lo), self.segment(hi));
        if i0 == i1 {
            let x = self.knots[i0];
            return self.primitive(i0, hi - x) - self.primitive(i0, lo - x);
        }
        let mut total = self.primitive(i0, self.knots[i0 + 1] - self.knots[i0]) - self.primitive(i0, lo - self.knots[i0]);
        for i in i0 + 1..i1 {
            total += self.primitive(i, self.knots[i + 1] - self.knots[i]);
        }
        total + self.primitive(i1, hi - self.knots[i1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_knots() {
        let x = [0.0, 0.5, 1.7, 2.0, 3.3];
        let y = [1.0, -0.2, 0.4, 2.0, 0.0];
        for ends in [SplineEnds::Natural, SplineEnds::NotAKnot] {
            let s = CubicSpline::new(&x, &y, ends).unwrap();
            for (xi, yi) in x.iter().zip(&y) {
                assert!((s.eval(*xi) - yi).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn not_a_knot_reproduces_cubics() {
        let f = |t: f64| 0.3 - 1.2 * t + 0.7 * t * t - 0.15 * t * t * t;
        let big_f = |t: f64| 0.3 * t - 0.6 * t * t + 0.7 / 3.0 * t.powi(3) - 0.15 / 4.0 * t.powi(4);
        let x = [0.0, 0.4, 1.1, 2.0, 2.6, 4.0];
        let y: Vec<f64> = x.iter().map(|&t| f(t)).collect();
        let s = CubicSpline::new(&x, &y, SplineEnds::NotAKnot).unwrap();
        assert!((s.eval(1.7) - f(1.7)).abs() < 1e-12);
        assert!((s.integrate(0.2, 3.1) - (big_f(3.1) - big_f(0.2))).abs() < 1e-12);
    }

    #[test]
    fn natural_reproduces_lines() {
        let x = [0.0, 1.0, 2.5, 3.0];
        let y: Vec<f64> = x.iter().map(|t| 2.0 - 0.5 * t).collect();
        let s = CubicSpline::new(&x, &y, SplineEnds::Natural).unwrap();
        assert!((s.integrate(0.0, 3.0) - 3.75).abs() < 1e-14);
        assert!((s.integrate(0.5, 2.7) - (2.0 * 2.2 - 0.25 * (2.7f64.powi(2) - 0.25))).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(CubicSpline::new(&[0.0, 0.0, 1.0, 2.0], &[0.0; 4], SplineEnds::Natural).is_err());
        assert!(CubicSpline::new(&[0.0, 1.0, 2.0], &[0.0; 3], SplineEnds::NotAKnot).is_err());
    }
}
