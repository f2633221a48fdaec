//! Gauss-Legendre rules and adaptive panel integration of matrix-valued
//! integrands.

use ndarray::Array2;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`,
/// by Newton iteration on `P_n` from the Chebyshev initial guesses.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Integrates a matrix-valued `f` over `[a, b]`, where `f(xs, ws)` must
/// return `Σ_k ws[k] f(xs[k])`. Panels of width at most `max_width` are
/// bisected until the rule on a panel agrees with the sum over its halves
/// to within `tol` in every entry.
pub(crate) fn adaptive_panels<F>(a: f64, b: f64, max_width: f64, order: usize, tol: f64, f: F) -> Array2<f64>
where
    F: Fn(&[f64], &[f64]) -> Array2<f64>,
{
    let (gx, gw) = gauss_legendre(order);
    let rule = |lo: f64, hi: f64| {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let xs: Vec<f64> = gx.iter().map(|t| mid + half * t).collect();
        let ws: Vec<f64> = gw.iter().map(|w| half * w).collect();
        f(&xs, &ws)
    };

    let panels = ((b - a) / max_width).ceil().max(1.0) as usize;
    let width = (b - a) / panels as f64;
    let mut total: Option<Array2<f64>> = None;
    for p in 0..panels {
        let lo = a + p as f64 * width;
        let hi = if p + 1 == panels { b } else { lo + width };
        let mut stack = vec![(lo, hi, rule(lo, hi), 0u32)];
        while let Some((lo, hi, whole, depth)) = stack.pop() {
            let mid = 0.5 * (lo + hi);
            let left = rule(lo, mid);
            let right = rule(mid, hi);
            let split = &left + &right;
            let err = (&split - &whole).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if err <= tol || depth >= 30 {
                match total.as_mut() {
                    Some(t) => *t += &split,
                    None => total = Some(split),
                }
            } else {
                stack.push((lo, mid, left, depth + 1));
                stack.push((mid, hi, right, depth + 1));
            }
        }
    }
    total.expect("at least one panel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(10);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // degree 19 is exact for 10 points
        let i: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((i - 2.0 / 19.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_gaussian_integral() {
        let m = adaptive_panels(0.0, 10.0, 1.0, 16, 1e-15, |xs, ws| {
            let v: f64 = xs.iter().zip(ws).map(|(x, w)| w * (-x * x).exp()).sum();
            Array2::from_elem((1, 1), v)
        });
        assert!((m[[0, 0]] - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-14);
    }
}
