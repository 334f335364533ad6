use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{NlsError, Result};

/// Smallest node count accepted by [`RadialGrid::new`].
pub const MIN_NODES: usize = 16;

/// Uniform cell-centered grid on `(0, r_max)` for radial functions on the plane.
///
/// Nodes sit at `r_k = (k + 1/2) h` for `k = 0..n`, so the origin is never a node;
/// values there come from the even extension `u(-r) = u(r)`. The outer edge
/// `r_max` is a homogeneous Dirichlet boundary realized by odd ghost values.
///
/// Two quadratures are carried along:
///
/// * node weights for `∫ g(r) 2πr dr` (midpoint rule with the leading
///   Euler–Maclaurin end corrections, so a constant integrates to `π r_max²`
///   exactly and smooth radial integrands converge at fourth order);
/// * staggered weights at `s_j = j h`, `j = 0..=n`, used for the Dirichlet form
///   `∫ |∂_r u|² 2πr dr` where `∂_r u` comes from [`RadialGrid::derivative`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    r_max: f64,
    h: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    stag_weights: Vec<f64>,
}

impl RadialGrid {
    pub fn new(r_max: f64, n: usize) -> Result<Self> {
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(NlsError::InvalidArgument(format!(
                "r_max must be positive and finite, got {r_max}"
            )));
        }
        if n < MIN_NODES {
            return Err(NlsError::InvalidArgument(format!(
                "grid needs at least {MIN_NODES} nodes, got {n}"
            )));
        }
        let h = r_max / n as f64;
        let nodes: Vec<f64> = (0..n).map(|k| (k as f64 + 0.5) * h).collect();
        let mut weights: Vec<f64> = nodes.iter().map(|r| 2.0 * PI * r * h).collect();
        // -(h²/24)·f'(0) and +(h²/24)·f'(r_max) with f = 2πr·g, g taken at the end node
        let end_correction = PI * h * h / 12.0;
        weights[0] -= end_correction;
        weights[n - 1] += end_correction;

        let mut stag_weights: Vec<f64> = (0..=n).map(|j| 2.0 * PI * (j as f64 * h) * h).collect();
        stag_weights[n] *= 0.5;

        Ok(Self {
            r_max,
            h,
            nodes,
            weights,
            stag_weights,
        })
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Staggered points `s_j = j h`, `j = 0..=n`.
    pub fn staggered_nodes(&self) -> Vec<f64> {
        (0..=self.n()).map(|j| j as f64 * self.h).collect()
    }

    pub fn staggered_weights(&self) -> &[f64] {
        &self.stag_weights
    }

    /// Quadrature of `∫ g(r) 2πr dr` from node samples.
    pub fn integrate(&self, samples: &[f64]) -> f64 {
        debug_assert_eq!(samples.len(), self.n());
        self.weights.iter().zip(samples).map(|(w, g)| w * g).sum()
    }

    /// Same grid rescaled by `x -> x / lambda` (spacing and radius divided by `lambda`).
    pub fn dilated(&self, lambda: f64) -> Result<Self> {
        Self::new(self.r_max / lambda, self.n())
    }

    /// Folded stencil of the fourth-order staggered derivative at `s_j`.
    ///
    /// Returns up to four `(node, coefficient)` pairs; the even ghosts at the
    /// origin and the odd ghosts past `r_max` are already folded in. Coefficients
    /// include the `1/(24h)` factor.
    pub fn derivative_stencil(&self, j: usize) -> Vec<(usize, f64)> {
        let n = self.n() as isize;
        let scale = 1.0 / (24.0 * self.h);
        let raw = [(j as isize - 2, 1.0), (j as isize - 1, -27.0), (j as isize, 27.0), (j as isize + 1, -1.0)];
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(4);
        for (idx, c) in raw {
            let (node, sign) = if idx < 0 {
                (-idx - 1, 1.0)
            } else if idx >= n {
                (2 * n - 1 - idx, -1.0)
            } else {
                (idx, 1.0)
            };
            let node = node as usize;
            let c = sign * c * scale;
            match out.iter_mut().find(|(k, _)| *k == node) {
                Some(entry) => entry.1 += c,
                None => out.push((node, c)),
            }
        }
        out.retain(|(_, c)| *c != 0.0);
        out
    }

    /// Fourth-order derivative of node samples, evaluated at the `n + 1` staggered points.
    pub fn derivative<T>(&self, values: &[T]) -> Vec<T>
    where
        T: Copy + std::ops::Neg<Output = T> + std::ops::Sub<Output = T> + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
    {
        let n = self.n();
        debug_assert_eq!(values.len(), n);
        let at = |idx: isize| -> T {
            if idx < 0 {
                values[(-idx - 1) as usize]
            } else if idx >= n as isize {
                -values[(2 * n as isize - 1 - idx) as usize]
            } else {
                values[idx as usize]
            }
        };
        let scale = 1.0 / (24.0 * self.h);
        (0..=n as isize)
            .map(|j| {
                let a = at(j - 2) - at(j + 1);
                let b = at(j) - at(j - 1);
                (a + b * 27.0) * scale
            })
            .collect()
    }

    /// Fourth-order interpolation of node samples to the staggered points.
    pub fn to_staggered<T>(&self, values: &[T]) -> Vec<T>
    where
        T: Copy + std::ops::Neg<Output = T> + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
    {
        let n = self.n();
        let at = |idx: isize| -> T {
            if idx < 0 {
                values[(-idx - 1) as usize]
            } else if idx >= n as isize {
                -values[(2 * n as isize - 1 - idx) as usize]
            } else {
                values[idx as usize]
            }
        };
        (0..=n as isize)
            .map(|j| (at(j - 1) + at(j)) * (9.0 / 16.0) + (at(j - 2) + at(j + 1)) * (-1.0 / 16.0))
            .collect()
    }

    /// Dirichlet-form matrix `K = Dᵀ W' D` in symmetric band storage.
    pub fn stiffness(&self) -> SymmetricBand {
        let n = self.n();
        let mut band = SymmetricBand::zeros(n, STIFFNESS_BANDWIDTH);
        for j in 0..=n {
            let w = self.stag_weights[j];
            if w == 0.0 {
                continue;
            }
            let stencil = self.derivative_stencil(j);
            for &(a, ca) in &stencil {
                for &(b, cb) in &stencil {
                    if b >= a {
                        band.add(a, b, w * ca * cb);
                    }
                }
            }
        }
        band
    }
}

/// Half-bandwidth of [`RadialGrid::stiffness`].
pub const STIFFNESS_BANDWIDTH: usize = 3;

/// Real symmetric banded matrix, upper triangle stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricBand {
    n: usize,
    bandwidth: usize,
    data: Vec<f64>,
}

impl SymmetricBand {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        Self {
            n,
            bandwidth,
            data: vec![0.0; n * (bandwidth + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// Entry `(i, j)` for any `i, j`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        if b - a > self.bandwidth {
            0.0
        } else {
            self.data[a * (self.bandwidth + 1) + (b - a)]
        }
    }

    fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(j >= i && j - i <= self.bandwidth);
        self.data[i * (self.bandwidth + 1) + (j - i)] += v;
    }

    /// `y = K x` for any scalar type closed under real scaling.
    pub fn apply<T>(&self, x: &[T]) -> Vec<T>
    where
        T: Copy + Default + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
    {
        let n = self.n;
        let b = self.bandwidth;
        let mut y = vec![T::default(); n];
        for i in 0..n {
            let row = &self.data[i * (b + 1)..(i + 1) * (b + 1)];
            y[i] = y[i] + x[i] * row[0];
            for d in 1..=b {
                let j = i + d;
                if j >= n {
                    break;
                }
                let v = row[d];
                y[i] = y[i] + x[j] * v;
                y[j] = y[j] + x[i] * v;
            }
        }
        y
    }
}
