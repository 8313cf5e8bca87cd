//! Small descriptive-statistics helpers shared by the encoder, the DSL's
//! fitted nodes, and the diagnostics.

/// Median of the values (average of the two central values for even length).
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

/// Mean and population standard deviation. Empty input yields `(NaN, NaN)`.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// True when a spread is zero up to floating-point noise relative to the
/// column's magnitude.
pub fn is_effectively_constant(mean: f64, std: f64) -> bool {
    !(std.is_finite() && std > 1e-12 * (1.0 + mean.abs()))
}

/// Linear-interpolation quantile of already sorted values, `q` in `[0, 1]`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    debug_assert!(n > 0);
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

/// Quantile edges at `0, 1/k, .., 1` over the finite values, with duplicate
/// edges collapsed. Empty when there are no finite values.
pub fn quantile_edges(values: &[f64], k: usize) -> Vec<f64> {
    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if sorted.is_empty() || k == 0 {
        return Vec::new();
    }
    sorted.sort_by(f64::total_cmp);
    let mut edges: Vec<f64> = (0..=k).map(|i| quantile_sorted(&sorted, i as f64 / k as f64)).collect();
    edges.dedup();
    edges
}

/// Right-closed bin index of `v` for the given edges: the first bin also
/// holds values at or below the lowest edge, the last bin everything above.
pub fn bin_index(edges: &[f64], v: f64) -> usize {
    if edges.len() < 2 {
        return 0;
    }
    let interior = &edges[1..edges.len() - 1];
    interior.iter().filter(|&&e| v > e).count()
}

/// Pearson correlation over rows where both values are finite. Zero-variance
/// inputs (or fewer than two shared rows) give 0.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let pairs: Vec<(f64, f64)> = a
        .iter()
        .zip(b)
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .map(|(x, y)| (*x, *y))
        .collect();
    if pairs.len() < 2 {
        return 0.0;
    }
    let n = pairs.len() as f64;
    let ma = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mb = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in &pairs {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return 0.0;
    }
    (sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0)
}
