use std::collections::VecDeque;

/// Rolling windows of global-risk values and raw people counts for one
/// stream. Single writer.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskState {
    window: usize,
    global: VecDeque<f64>,
    counts: VecDeque<u32>,
}

fn push_bounded<T>(buf: &mut VecDeque<T>, cap: usize, v: T) {
    if buf.len() == cap {
        buf.pop_front();
    }
    buf.push_back(v);
}

impl RiskState {
    /// # Panics
    /// If `window` is zero.
    pub fn new(window: usize) -> Self {
        assert!(window > 0, "window must be positive");
        Self {
            window,
            global: VecDeque::with_capacity(window),
            counts: VecDeque::with_capacity(window),
        }
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Pushes a global-risk value and returns the dynamic risk: the mean of
    /// the last `min(W, seen)` values. Out-of-range input is clamped to
    /// [0, 1].
    pub fn update_dynamic_risk(&mut self, g: f64) -> f64 {
        debug_assert!((0.0..=1.0).contains(&g), "global risk {g} outside [0, 1]");
        let g = if g.is_nan() { 0.0 } else { g.clamp(0.0, 1.0) };
        push_bounded(&mut self.global, self.window, g);
        self.dynamic_risk()
    }

    /// Mean of the buffered global-risk values (0 before any sample).
    pub fn dynamic_risk(&self) -> f64 {
        if self.global.is_empty() {
            return 0.0;
        }
        let mean = self.global.iter().sum::<f64>() / self.global.len() as f64;
        mean.clamp(0.0, 1.0)
    }

    /// Pushes a raw people count and returns the windowed mean count.
    pub fn smoothed_count(&mut self, n: u32) -> f64 {
        push_bounded(&mut self.counts, self.window, n);
        self.mean_count()
    }

    /// Mean of the buffered counts (0 before any sample).
    pub fn mean_count(&self) -> f64 {
        if self.counts.is_empty() {
            return 0.0;
        }
        self.counts.iter().map(|&c| c as f64).sum::<f64>() / self.counts.len() as f64
    }

    pub fn global_history(&self) -> impl Iterator<Item = f64> + '_ {
        self.global.iter().copied()
    }
}
