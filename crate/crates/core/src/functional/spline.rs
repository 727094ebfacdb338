use crate::error::{Error, Result};

/// Natural cubic spline through `(x_k, y_k)`: second derivative zero at both
/// ends, `C²` inside.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the nodes.
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn natural(x: &[f64], y: &[f64]) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::Curve(format!(
                "spline needs ≥ 2 matching nodes, got {} and {}",
                n,
                y.len()
            )));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Curve(
                "spline nodes must be strictly increasing".into(),
            ));
        }
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the interior equations
            // h_{k−1} m_{k−1} + 2(h_{k−1}+h_k) m_k + h_k m_{k+1} = 6 Δ_k.
            let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
            let slope: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
            let size = n - 2;
            let mut diag = vec![0.0; size];
            let mut rhs = vec![0.0; size];
            for i in 0..size {
                diag[i] = 2.0 * (h[i] + h[i + 1]);
                rhs[i] = 6.0 * (slope[i + 1] - slope[i]);
            }
            for i in 1..size {
                let w = h[i] / diag[i - 1];
                diag[i] -= w * h[i];
                rhs[i] -= w * rhs[i - 1];
            }
            m[size] = rhs[size - 1] / diag[size - 1];
            for i in (0..size - 1).rev() {
                m[i + 1] = (rhs[i] - h[i + 1] * m[i + 2]) / diag[i];
            }
        }
        Ok(CubicSpline {
            x: x.to_vec(),
            y: y.to_vec(),
            m,
        })
    }

    pub fn nodes(&self) -> (&[f64], &[f64]) {
        (&self.x, &self.y)
    }

    /// Value at `t`; outside the node range the end cubic is extended.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let k = match self.x.partition_point(|&xk| xk <= t) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let h = self.x[k + 1] - self.x[k];
        let a = (self.x[k + 1] - t) / h;
        let b = (t - self.x[k]) / h;
        a * self.y[k]
            + b * self.y[k + 1]
            + ((a * a * a - a) * self.m[k] + (b * b * b - b) * self.m[k + 1]) * h * h / 6.0
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let n = self.x.len();
        let k = match self.x.partition_point(|&xk| xk <= t) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let h = self.x[k + 1] - self.x[k];
        let a = (self.x[k + 1] - t) / h;
        let b = (t - self.x[k]) / h;
        (self.y[k + 1] - self.y[k]) / h
            + ((1.0 - 3.0 * a * a) * self.m[k] + (3.0 * b * b - 1.0) * self.m[k + 1]) * h / 6.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reproduces_lines_exactly() {
        let x = [0.0, 0.5, 1.5, 2.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 1.0).collect();
        let s = CubicSpline::natural(&x, &y).unwrap();
        for t in [0.1, 0.7, 1.9, 2.0] {
            assert!((s.eval(t) - (3.0 * t - 1.0)).abs() < 1e-14);
            assert!((s.derivative(t) - 3.0).abs() < 1e-13);
        }
    }

    #[test]
    fn two_nodes_interpolate_linearly() {
        let s = CubicSpline::natural(&[0.0, 1.0], &[1.0, 3.0]).unwrap();
        assert_eq!(s.eval(0.5), 2.0);
    }

    #[test]
    fn natural_end_conditions() {
        let x: Vec<f64> = (0..8).map(|k| k as f64 * 0.25).collect();
        let y: Vec<f64> = x.iter().map(|v: &f64| v.sin()).collect();
        let s = CubicSpline::natural(&x, &y).unwrap();
        assert_eq!(s.m[0], 0.0);
        assert_eq!(s.m[7], 0.0);
        // Second derivative continuity shows up as smooth first derivatives.
        for &xk in &x[1..7] {
            let (l, r) = (s.derivative(xk - 1e-9), s.derivative(xk + 1e-9));
            assert!((l - r).abs() < 1e-7);
        }
    }

    #[test]
    fn rejects_bad_nodes() {
        assert!(CubicSpline::natural(&[0.0], &[1.0]).is_err());
        assert!(CubicSpline::natural(&[0.0, 0.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(CubicSpline::natural(&[0.0, 1.0], &[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn node_fidelity(ys in proptest::collection::vec(-50.0f64..50.0, 3..40)) {
            let x: Vec<f64> = (0..ys.len()).map(|k| k as f64 / 7.0).collect();
            let s = CubicSpline::natural(&x, &ys).unwrap();
            for (xk, yk) in x.iter().zip(&ys) {
                prop_assert!((s.eval(*xk) - yk).abs() < 1e-10);
            }
        }
    }
}
