//! Small summary statistics used by reports and tests.

use crate::math::sqrt;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator); zero for fewer than two values.
///
/// This is the spread reported as "Std Error" in the cross-seed tables.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    sqrt(ss / (xs.len() - 1) as f64)
}

pub fn max(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Pearson correlation; zero when either side is constant.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return 0.0;
    }
    let (mx, my) = (mean(&xs[..n]), mean(&ys[..n]));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (dx, dy) = (xs[i] - mx, ys[i] - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / sqrt(sxx * syy)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_spread_matches_reported_values() {
        // Cross-seed runs as published for DDPG and FH-DDPG. The runs are
        // rounded to four places, so the recomputed spread only agrees to
        // about 1e-3; the population formula would give 3.084 instead.
        let ddpg = [-0.2817, -0.8986, -8.5000, -1.4037, -0.7835];
        let fh = [-0.2312, -0.2308, -0.2310, -0.2315, -0.2438];
        assert!((mean(&ddpg) - (-2.3734)).abs() < 2e-4);
        assert!((sample_std(&ddpg) - 3.4477).abs() < 1e-3);
        assert!((sample_std(&fh) - 0.0057).abs() < 1e-4);
        assert!((population_spread(&ddpg) - 3.4477).abs() > 0.3);
        assert_eq!(max(&fh), -0.2308);
    }

    fn population_spread(x: &[f64]) -> f64 {
        let m = mean(x);
        sqrt(x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64)
    }

    #[test]
    fn correlation_of_line_is_one() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [2.0, 4.0, 6.0, 8.0];
        assert!((correlation(&x, &y) - 1.0).abs() < 1e-12);
        assert_eq!(correlation(&x, &[0.0; 4]), 0.0);
    }
}
