//! Log-log slope fitting.

/// Ordinary least-squares slope of `ys` against `xs`; `None` with fewer than
/// two points or a degenerate abscissa.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return None;
    }
    let mx = xs[..n].iter().sum::<f64>() / n as f64;
    let my = ys[..n].iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs[..n].iter().zip(&ys[..n]) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    if sxx <= 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// Slope fitted on the asymptotic part of a sequence: the leading quarter
/// of the points is dropped before the regression.
pub fn tail_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let skip = xs.len() / 4;
    least_squares_slope(&xs[skip..], &ys[skip..])
}
