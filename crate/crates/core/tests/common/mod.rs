//! Reference implementations shared by the integration tests.

use bregkacz::linops::BlockPartition;
use bregkacz::solvers::theta_next;
use bregkacz::{PotentialF64, ProblemF64};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// The accelerated method run entirely on primal-space vectors
/// `t, d, c in R^n` in place of `z, y, v in R^m`.
pub struct PrimalArbk {
    pub t: Vec<f64>,
    pub d: Vec<f64>,
    pub theta: f64,
}

impl PrimalArbk {
    pub fn new(n: usize, blocks: usize) -> Self {
        Self {
            t: vec![0.0; n],
            d: vec![0.0; n],
            theta: 1.0 / blocks as f64,
        }
    }

    pub fn step(&mut self, problem: &ProblemF64, f: &PotentialF64, partition: &BlockPartition<f64>, i: usize) {
        let m_theta = partition.num_blocks() as f64 * self.theta;
        let c: Vec<f64> = self
            .d
            .iter()
            .zip(&self.t)
            .map(|(d, t)| (1.0 - self.theta) * d + self.theta * t)
            .collect();
        let x_c = f.conj_grad(&c);
        let range = partition.range(i);
        let n = problem.cols();
        // A_(i)^T (A_(i) x_c - b_(i)), row by row
        let mut g = vec![0.0; n];
        for row in range {
            let a = &problem.a.data()[row * n..(row + 1) * n];
            let r = dot(a, &x_c) - problem.b[row];
            for (gj, aj) in g.iter_mut().zip(a) {
                *gj += r * aj;
            }
        }
        let scale = 1.0 / (m_theta * partition.lipschitz(i));
        for j in 0..n {
            let dt = -scale * g[j];
            self.t[j] += dt;
            self.d[j] = c[j] + m_theta * dt;
        }
        self.theta = theta_next(self.theta);
    }
}
