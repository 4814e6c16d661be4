/// A latent construct sampled on a regular grid from `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentSeries {
    pub dt_sec: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start_sec: f64,
    pub end_sec: f64,
    pub value: f64,
}

impl LatentSeries {
    pub fn constant(duration_sec: f64, dt_sec: f64, value: f64) -> Self {
        Self::from_segments(duration_sec, dt_sec, value, &[], 0.0)
    }

    /// Piecewise-constant series over a `rest` background, then a centered
    /// moving average of `smoothing_sec`.
    pub fn from_segments(duration_sec: f64, dt_sec: f64, rest: f64, segments: &[Segment], smoothing_sec: f64) -> Self {
        let n = (duration_sec / dt_sec).ceil() as usize + 1;
        let mut values = vec![rest; n];
        for s in segments {
            let i0 = (s.start_sec / dt_sec).round().max(0.0) as usize;
            let i1 = ((s.end_sec / dt_sec).round() as usize).min(n);
            for v in values.iter_mut().take(i1).skip(i0) {
                *v = s.value;
            }
        }
        let half = (smoothing_sec / dt_sec / 2.0).round() as usize;
        if half > 0 {
            let mut prefix = vec![0.0; n + 1];
            for i in 0..n {
                prefix[i + 1] = prefix[i] + values[i];
            }
            values = (0..n)
                .map(|i| {
                    let lo = i.saturating_sub(half);
                    let hi = (i + half + 1).min(n);
                    (prefix[hi] - prefix[lo]) / (hi - lo) as f64
                })
                .collect();
        }
        Self { dt_sec, values }
    }

    /// Linear interpolation, clamped at both ends.
    pub fn at(&self, t_sec: f64) -> f64 {
        let x = (t_sec / self.dt_sec).max(0.0);
        let i = x.floor() as usize;
        if i + 1 >= self.values.len() {
            return *self.values.last().unwrap_or(&0.0);
        }
        let frac = x - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }

    /// Average over `[t0, t1)` on the grid.
    pub fn window_mean(&self, t0: f64, t1: f64) -> f64 {
        let steps = (((t1 - t0) / self.dt_sec).round() as usize).max(1);
        (0..steps).map(|k| self.at(t0 + (k as f64 + 0.5) * (t1 - t0) / steps as f64)).sum::<f64>() / steps as f64
    }

    pub fn duration_sec(&self) -> f64 {
        (self.values.len().saturating_sub(1)) as f64 * self.dt_sec
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segments_and_smoothing() {
        let seg = [Segment {
            start_sec: 2.0,
            end_sec: 4.0,
            value: 1.0,
        }];
        let s = LatentSeries::from_segments(6.0, 0.1, 0.0, &seg, 0.0);
        assert_eq!(s.at(1.0), 0.0);
        assert_eq!(s.at(3.0), 1.0);
        assert_eq!(s.at(5.0), 0.0);
        let sm = LatentSeries::from_segments(6.0, 0.1, 0.0, &seg, 1.0);
        assert!(sm.at(2.0) > 0.3 && sm.at(2.0) < 0.7);
        assert!((sm.at(3.0) - 1.0).abs() < 1e-12);
        assert!((LatentSeries::constant(3.0, 0.5, 0.4).window_mean(0.5, 2.5) - 0.4).abs() < 1e-12);
    }
}
