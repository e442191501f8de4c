//! Central finite differences restricted to runs of valid samples.

use std::ops::Range;

/// Widest stencil supported, 16th order.
pub const MAX_HALF_WIDTH: usize = 8;

/// Default half-width (16th order).
pub const DEFAULT_HALF_WIDTH: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Derivative {
    First,
    Second,
}

/// Result of differentiating along runs.
#[derive(Debug, Clone)]
pub struct RunDerivative {
    pub values: Vec<f64>,
    /// A stencil of some order fit at this point.
    pub defined: Vec<bool>,
    /// The widest stencil the enclosing run allows fit at this point.
    pub interior: Vec<bool>,
}

/// Central weights `c_1 ..= c_m` of the order-`2m` stencil. The first
/// derivative is `Σ c_k (f_{+k} − f_{−k})/h`, the second
/// `(c_0 f_0 + Σ c_k (f_{+k} + f_{−k}))/h²` with `c_0 = −2Σc_k`.
fn weights(m: usize, which: Derivative) -> Vec<f64> {
    // (m!)² / ((m−k)!(m+k)!) as a running product
    let mut ratio = 1.0;
    (1..=m)
        .map(|k| {
            ratio *= (m + 1 - k) as f64 / (m + k) as f64;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            let k = k as f64;
            match which {
                Derivative::First => sign * ratio / k,
                Derivative::Second => sign * 2.0 * ratio / (k * k),
            }
        })
        .collect()
}

fn apply(values: &[f64], i: usize, c: &[f64], which: Derivative, h: f64) -> f64 {
    match which {
        Derivative::First => {
            let mut acc = 0.0;
            for (k, ck) in c.iter().enumerate() {
                let o = k + 1;
                acc += ck * (values[i + o] - values[i - o]);
            }
            acc / h
        }
        Derivative::Second => {
            let mut acc = -2.0 * c.iter().sum::<f64>() * values[i];
            for (k, ck) in c.iter().enumerate() {
                let o = k + 1;
                acc += ck * (values[i + o] + values[i - o]);
            }
            acc / (h * h)
        }
    }
}

/// Central difference at the middle of `2m + 1` samples, order `2m`.
pub fn central(samples: &[f64], h: f64, which: Derivative) -> f64 {
    let m = samples.len() / 2;
    apply(samples, m, &weights(m, which), which, h)
}

/// Differentiate `values` with central stencils that never reach outside
/// the enclosing run. Near run ends the order drops; points where not even
/// the 3-point stencil fits are left undefined (`NaN`).
pub fn differentiate_runs(
    values: &[f64],
    runs: &[Range<usize>],
    h: f64,
    which: Derivative,
    max_half_width: usize,
) -> RunDerivative {
    let n = values.len();
    let max_half = max_half_width.clamp(1, MAX_HALF_WIDTH);
    let table: Vec<Vec<f64>> = (1..=max_half).map(|m| weights(m, which)).collect();
    let mut out = RunDerivative {
        values: vec![f64::NAN; n],
        defined: vec![false; n],
        interior: vec![false; n],
    };
    for run in runs {
        let widest = ((run.len().max(1) - 1) / 2).min(max_half);
        for i in run.clone() {
            let room = (i - run.start).min(run.end - 1 - i);
            let half = room.min(max_half);
            if half == 0 {
                continue;
            }
            out.values[i] = apply(values, i, &table[half - 1], which, h);
            out.defined[i] = true;
            out.interior[i] = half == widest;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_polynomials_up_to_order() {
        let h = 0.1;
        let xs: Vec<f64> = (0..40).map(|i| i as f64 * h).collect();
        let f: Vec<f64> = xs.iter().map(|x| x.powi(7) - 2.0 * x.powi(3)).collect();
        let d1 = differentiate_runs(&f, &[0..40], h, Derivative::First, 4);
        let d2 = differentiate_runs(&f, &[0..40], h, Derivative::Second, 4);
        for i in 4..36 {
            let x = xs[i];
            assert!(d1.interior[i]);
            assert!((d1.values[i] - (7.0 * x.powi(6) - 6.0 * x * x)).abs() < 1e-8);
            assert!((d2.values[i] - (42.0 * x.powi(5) - 12.0 * x)).abs() < 1e-6);
        }
        assert!(!d1.defined[0]);
        assert!(d1.defined[1] && !d1.interior[1]);
    }

    #[test]
    fn closed_form_weights() {
        let w = weights(4, Derivative::First);
        let want = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
        assert!(w.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-15));
        let w = weights(3, Derivative::Second);
        let want = [3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0];
        assert!(w.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-15));
        assert!((-2.0 * w.iter().sum::<f64>() + 49.0 / 18.0).abs() < 1e-14);
    }

    #[test]
    fn high_order_on_analytic_function() {
        let h = 0.05;
        let xs: Vec<f64> = (0..200).map(|i| i as f64 * h).collect();
        let f: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
        let d = differentiate_runs(&f, &[0..200], h, Derivative::First, MAX_HALF_WIDTH);
        for i in 8..192 {
            assert!((d.values[i] - xs[i].cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn respects_run_boundaries() {
        let f = vec![1.0, 2.0, 1e9, 4.0, 5.0, 6.0];
        let d = differentiate_runs(&f, &[0..2, 3..6], 1.0, Derivative::First, 4);
        assert!(!d.defined[2]);
        assert!((d.values[4] - 1.0).abs() < 1e-12);
    }
}
