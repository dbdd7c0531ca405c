//! Cubic splines with clamped or periodic end conditions.

use crate::tridiag;
use crate::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EndCondition {
    /// First derivative prescribed at both ends.
    Clamped { start: f64, end: f64 },
    /// Values, slopes and curvatures wrap around; requires `y[0] == y[last]`.
    Periodic,
}

/// C² piecewise cubic interpolant, stored as knot values plus second
/// derivatives ("moments") at the knots.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
    periodic: bool,
}

impl CubicSpline {
    pub fn new(x: &[f64], y: &[f64], end: EndCondition) -> Result<Self> {
        if x.len() != y.len() {
            return Err(LabError::InvalidArgument(format!(
                "spline abscissae and values differ in length ({} vs {})",
                x.len(),
                y.len()
            )));
        }
        if x.len() < 4 {
            return Err(LabError::InvalidArgument("spline needs at least 4 samples".into()));
        }
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(LabError::InvalidArgument("spline samples must be finite".into()));
        }
        if let Some(i) = x.windows(2).position(|w| w[1] <= w[0]) {
            return Err(LabError::InvalidArgument(format!(
                "spline abscissae must be strictly increasing (index {})",
                i + 1
            )));
        }
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let slope = |i: usize| (y[i + 1] - y[i]) / h[i];
        let m = match end {
            EndCondition::Clamped { start, end } => {
                let mut diag = vec![0.0; n];
                let mut rhs = vec![0.0; n];
                diag[0] = 2.0 * h[0];
                rhs[0] = 6.0 * (slope(0) - start);
                for i in 1..n - 1 {
                    diag[i] = 2.0 * (h[i - 1] + h[i]);
                    rhs[i] = 6.0 * (slope(i) - slope(i - 1));
                }
                diag[n - 1] = 2.0 * h[n - 2];
                rhs[n - 1] = 6.0 * (end - slope(n - 2));
                tridiag::solve_symmetric(&diag, &h, &rhs)
                    .map_err(|_| LabError::InvalidArgument("degenerate spline system".into()))?
            }
            EndCondition::Periodic => {
                if (y[0] - y[n - 1]).abs() > 1e-12 * y[0].abs().max(1.0) {
                    return Err(LabError::InvalidProfile {
                        invariant: "periodic closure".into(),
                        detail: format!("first and last samples differ ({} vs {})", y[0], y[n - 1]),
                    });
                }
                let k = n - 1;
                let mut diag = vec![0.0; k];
                let mut off = vec![0.0; k];
                let mut rhs = vec![0.0; k];
                for i in 0..k {
                    let prev = (i + k - 1) % k;
                    diag[i] = 2.0 * (h[prev] + h[i]);
                    off[i] = h[i];
                    rhs[i] = 6.0 * (slope(i) - slope(prev));
                }
                let mut m = tridiag::solve_cyclic(&diag, &off, &rhs)
                    .map_err(|_| LabError::InvalidArgument("degenerate spline system".into()))?;
                m.push(m[0]);
                m
            }
        };
        Ok(Self {
            x: x.to_vec(),
            y: y.to_vec(),
            m,
            periodic: matches!(end, EndCondition::Periodic),
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn span(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    fn interval(&self, t: f64) -> usize {
        let last = self.x.len() - 2;
        match self.x.binary_search_by(|p| p.partial_cmp(&t).unwrap_or(std::cmp::Ordering::Less)) {
            Ok(i) => i.min(last),
            Err(0) => 0,
            Err(i) => (i - 1).min(last),
        }
    }

    fn wrap(&self, t: f64) -> f64 {
        if !self.periodic {
            return t;
        }
        let (a, b) = self.span();
        if (a..=b).contains(&t) {
            return t;
        }
        a + (t - a).rem_euclid(b - a)
    }

    /// Value, first and second derivative at `t`.
    pub fn eval(&self, t: f64) -> [f64; 3] {
        let t = self.wrap(t);
        let i = self.interval(t);
        let mut jet = self.eval_piece(i, t);
        // knots reproduce their samples bit-for-bit
        if t == self.x[i] {
            jet[0] = self.y[i];
        } else if t == self.x[i + 1] {
            jet[0] = self.y[i + 1];
        }
        jet
    }

    /// Evaluates the cubic of interval `i` (possibly outside its interval).
    pub fn eval_piece(&self, i: usize, t: f64) -> [f64; 3] {
        let (x0, x1) = (self.x[i], self.x[i + 1]);
        let h = x1 - x0;
        let (a, b) = (x1 - t, t - x0);
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let c0 = self.y[i] / h - m0 * h / 6.0;
        let c1 = self.y[i + 1] / h - m1 * h / 6.0;
        let value = m0 * a * a * a / (6.0 * h) + m1 * b * b * b / (6.0 * h) + c0 * a + c1 * b;
        let d1 = -m0 * a * a / (2.0 * h) + m1 * b * b / (2.0 * h) - c0 + c1;
        let d2 = (m0 * a + m1 * b) / h;
        [value, d1, d2]
    }

    /// Largest jump of the second derivative across interior knots, evaluated
    /// from the two adjacent cubics.
    pub fn curvature_jump(&self) -> f64 {
        (1..self.x.len() - 1)
            .map(|i| {
                let left = self.eval_piece(i - 1, self.x[i])[2];
                let right = self.eval_piece(i, self.x[i])[2];
                (left - right).abs()
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn clamped_spline_interpolates_and_matches_end_slopes() {
        let n = 65;
        let x: Vec<f64> = (0..n).map(|i| PI * i as f64 / (n - 1) as f64).collect();
        let y: Vec<f64> = x.iter().map(|t| t.sin()).collect();
        let s = CubicSpline::new(&x, &y, EndCondition::Clamped { start: 1.0, end: -1.0 }).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert_eq!(s.eval(*xi)[0].to_bits(), yi.to_bits());
        }
        assert!((s.eval(0.0)[1] - 1.0).abs() < 1e-12);
        assert!((s.eval(PI)[1] + 1.0).abs() < 1e-12);
        let t = 1.234;
        let [v, d1, d2] = s.eval(t);
        assert!((v - t.sin()).abs() < 1e-6);
        assert!((d1 - t.cos()).abs() < 1e-4);
        assert!((d2 + t.sin()).abs() < 1e-2);
        assert!(s.curvature_jump() < 1e-10);
    }

    #[test]
    fn periodic_spline_wraps() {
        let n = 81;
        let l = 2.0 * PI;
        let x: Vec<f64> = (0..n).map(|i| l * i as f64 / (n - 1) as f64).collect();
        let y: Vec<f64> = x.iter().map(|t| 1.0 + 0.3 * t.sin()).collect();
        let s = CubicSpline::new(&x, &y, EndCondition::Periodic).unwrap();
        let a = s.eval(0.0);
        let b = s.eval_piece(n - 2, l);
        for k in 0..3 {
            assert!((a[k] - b[k]).abs() < 1e-10, "derivative {k}");
        }
        assert!((s.eval(l + 0.5)[0] - s.eval(0.5)[0]).abs() < 1e-14);
    }

    #[test]
    fn rejects_unsorted_abscissae() {
        let err = CubicSpline::new(&[0.0, 1.0, 0.5, 2.0], &[0.0; 4], EndCondition::Periodic);
        assert!(err.is_err());
    }
}
