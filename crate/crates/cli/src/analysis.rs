//! Post-run diagnostics on filtered trajectories.

/// Means of every length-`w` window, in order of window start.
pub fn rolling_means(xs: &[f64], w: usize) -> Vec<f64> {
    if w == 0 || xs.len() < w {
        return Vec::new();
    }
    xs.windows(w).map(|win| win.iter().sum::<f64>() / w as f64).collect()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Jump-clustering statistics of a filtered `P(J_t = 1)` path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterStats {
    pub global_mean: f64,
    /// Largest window mean over all windows.
    pub max_window_mean: f64,
    /// Window mean over the window where `regime` (e.g. the true variance) is highest.
    pub regime_window_mean: Option<f64>,
    pub regime_window_start: Option<usize>,
}

impl ClusterStats {
    pub fn max_ratio(&self) -> f64 {
        self.max_window_mean / self.global_mean
    }

    pub fn regime_ratio(&self) -> Option<f64> {
        self.regime_window_mean.map(|m| m / self.global_mean)
    }
}

pub fn cluster_stats(jump_probs: &[f64], regime: Option<&[f64]>, w: usize) -> Option<ClusterStats> {
    let windows = rolling_means(jump_probs, w);
    if windows.is_empty() {
        return None;
    }
    let max_window_mean = windows.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let regime_start = regime.and_then(|r| {
        rolling_means(r, w)
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
    });
    Some(ClusterStats {
        global_mean: mean(jump_probs),
        max_window_mean,
        regime_window_mean: regime_start.and_then(|i| windows.get(i).copied()),
        regime_window_start: regime_start,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windows() {
        assert_eq!(rolling_means(&[1.0, 2.0, 3.0, 4.0], 2), vec![1.5, 2.5, 3.5]);
        assert!(rolling_means(&[1.0], 2).is_empty());
    }

    #[test]
    fn cluster_in_high_regime() {
        let mut p = vec![0.01; 100];
        let mut v = vec![1.0; 100];
        for i in 40..50 {
            p[i] = 0.5;
            v[i] = 5.0;
        }
        let c = cluster_stats(&p, Some(&v), 10).unwrap();
        assert_eq!(c.regime_window_start, Some(40));
        assert!((c.max_window_mean - 0.5).abs() < 1e-12);
        assert!(c.regime_ratio().unwrap() > 3.0);
    }
}
