//! Test functions mapped onto the normalized maximization problem.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::pretrain::{AuxDataset, Task};

use super::TestFunction;

pub const DEFAULT_GRID_RESOLUTION: usize = 201;

/// `f : [-1, 1]^2 -> [0, 1]`, maximized where the native function is minimized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedProblem {
    pub function: TestFunction,
    /// Grid minimum and maximum of the negated native function.
    pub range_calibration: (f64, f64),
}

impl NormalizedProblem {
    /// Native point for a normalized input.
    pub fn to_native(&self, u: &[f64]) -> [f64; 2] {
        let r = self.function.half_width();
        [u[0] * r, u[1] * r]
    }

    /// Normalized objective, clamped to `[0, 1]`.
    pub fn eval(&self, u: &[f64]) -> f64 {
        let (lo, hi) = self.range_calibration;
        let v = -self.function.value(self.to_native(u));
        ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
    }
}

/// Calibrates the output map on a `resolution x resolution` grid (at least 101).
pub fn normalize_problem(function: TestFunction, resolution: usize) -> NormalizedProblem {
    let res = resolution.max(101);
    let r = function.half_width();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..res {
        for j in 0..res {
            let u = [grid_coord(i, res), grid_coord(j, res)];
            let v = -function.value([u[0] * r, u[1] * r]);
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    NormalizedProblem { function, range_calibration: (lo, hi) }
}

pub(crate) fn grid_coord(i: usize, res: usize) -> f64 {
    -1.0 + 2.0 * i as f64 / (res - 1) as f64
}

/// `n` seeded uniform points with the flipped objective `1 - f` as regression targets.
pub fn make_flipped_aux(problem: &NormalizedProblem, n: usize, seed: u64) -> Result<AuxDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs: Vec<Vec<f64>> = (0..n)
        .map(|_| vec![rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)])
        .collect();
    let targets = inputs.iter().map(|x| 1.0 - problem.eval(x)).collect();
    AuxDataset::new(inputs, targets, Task::Regression)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_minima_map_to_one() {
        for f in [TestFunction::Rastrigin, TestFunction::Ackley] {
            let p = normalize_problem(f, 101);
            assert!((p.eval(&[0.0, 0.0]) - 1.0).abs() < 1e-12, "{f}");
        }
    }

    #[test]
    fn grid_attains_both_ends() {
        for f in TestFunction::ALL {
            let p = normalize_problem(f, 101);
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for i in 0..101 {
                for j in 0..101 {
                    let v = p.eval(&[grid_coord(i, 101), grid_coord(j, 101)]);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            assert_eq!((lo, hi), (0.0, 1.0), "{f}");
        }
    }

    #[test]
    fn flipped_aux_is_reproducible() {
        let p = normalize_problem(TestFunction::Himmelblau, 101);
        let a = make_flipped_aux(&p, 50, 3).unwrap();
        let b = make_flipped_aux(&p, 50, 3).unwrap();
        assert_eq!(a.inputs, b.inputs);
        assert_eq!(a.targets, b.targets);
        assert!(a.targets.iter().all(|t| (0.0..=1.0).contains(t)));
    }
}
