use super::{MetricsError, Result};

fn check(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(MetricsError::LengthMismatch { x: x.len(), y: y.len() });
    }
    if x.len() < 2 {
        return Err(MetricsError::TooShort(x.len()));
    }
    if let Some(i) = x.iter().chain(y).position(|v| !v.is_finite()) {
        return Err(MetricsError::NonFinite(i % x.len()));
    }
    Ok(())
}

fn centered(v: &[f64]) -> Vec<f64> {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|a| a - mean).collect()
}

/// Sample Pearson correlation, two-pass (centre first, then sum).
pub fn plcc(x: &[f64], y: &[f64]) -> Result<f64> {
    check(x, y)?;
    let (cx, cy) = (centered(x), centered(y));
    let sxx: f64 = cx.iter().map(|a| a * a).sum();
    let syy: f64 = cy.iter().map(|b| b * b).sum();
    if sxx == 0.0 {
        return Err(MetricsError::ConstantInput("x"));
    }
    if syy == 0.0 {
        return Err(MetricsError::ConstantInput("y"));
    }
    let sxy: f64 = cx.iter().zip(&cy).map(|(a, b)| a * b).sum();
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of the positions they span.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && v[order[end]] == v[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman correlation: Pearson over average ranks.
pub fn srcc(x: &[f64], y: &[f64]) -> Result<f64> {
    check(x, y)?;
    plcc(&average_ranks(x), &average_ranks(y))
}
