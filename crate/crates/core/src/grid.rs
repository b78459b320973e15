use crate::error::{invalid, Result};

/// Uniform time discretization of `[0, T]` into `M` Euler steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
    step: f64,
}

impl TimeGrid {
    /// `steps == 0` is accepted and describes a run that stops at the initial law.
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon >= 0.0) {
            return Err(invalid("time horizon must be finite and non-negative"));
        }
        if steps > 0 && horizon == 0.0 {
            return Err(invalid("positive step count needs a positive horizon"));
        }
        let step = if steps == 0 {
            0.0
        } else {
            horizon / steps as f64
        };
        Ok(Self {
            horizon,
            steps,
            step,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of Euler steps `M`.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Step size `h = T / M`.
    pub fn step(&self) -> f64 {
        self.step
    }

    /// Node `t_m`; exact at both ends (`t_0 = 0`, `t_M = T`).
    pub fn node(&self, m: usize) -> f64 {
        debug_assert!(m <= self.steps);
        if m == self.steps {
            self.horizon
        } else {
            self.horizon * m as f64 / self.steps as f64
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(move |m| self.node(m))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn burgers_grid() {
        let g = TimeGrid::new(1.0, 50).unwrap();
        assert_eq!(g.step(), 0.02);
        assert_eq!(g.node(0), 0.0);
        assert_eq!(g.node(50), 1.0);
    }

    #[test]
    fn nodes_strictly_increasing_and_step_consistent() {
        for &(t, m) in &[(1.5, 150usize), (1.0, 7), (3.3, 5000)] {
            let g = TimeGrid::new(t, m).unwrap();
            let nodes: Vec<f64> = g.nodes().collect();
            assert_eq!(nodes.len(), m + 1);
            assert!(nodes.windows(2).all(|w| w[0] < w[1]));
            let prod = g.step() * m as f64;
            assert!((prod - t).abs() <= f64::EPSILON * t);
        }
    }

    #[test]
    fn rejects_bad_horizon() {
        assert!(TimeGrid::new(f64::NAN, 3).is_err());
        assert!(TimeGrid::new(-1.0, 3).is_err());
        assert!(TimeGrid::new(0.0, 3).is_err());
        assert!(TimeGrid::new(0.0, 0).is_ok());
    }
}
