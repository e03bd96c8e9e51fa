//! Benchmark aggregates.

/// Shifted geometric mean `(Π (v_i + s))^(1/n) - s`, computed in log space.
///
/// Returns `None` for an empty slice or when some `v_i + s` is not positive.
pub fn shifted_geometric_mean(values: &[f64], shift: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut log_sum = 0.0;
    for &v in values {
        let shifted = v + shift;
        if !(shifted > 0.0) {
            return None;
        }
        log_sum += shifted.ln();
    }
    Some((log_sum / values.len() as f64).exp() - shift)
}

pub fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_node_counts() {
        let got = shifted_geometric_mean(&[100.0, 400.0], 100.0).unwrap();
        let want = (200.0f64 * 500.0).sqrt() - 100.0;
        assert!((got - want).abs() < 1e-9);
        assert!((got - 216.227_766).abs() < 1e-6);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(shifted_geometric_mean(&[], 1.0), None);
        assert_eq!(shifted_geometric_mean(&[-2.0], 1.0), None);
        assert!((shifted_geometric_mean(&[5.0, 5.0, 5.0], 1.0).unwrap() - 5.0).abs() < 1e-12);
    }
}
