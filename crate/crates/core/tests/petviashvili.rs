//! Independent check of the shooting ground state: Petviashvili iteration for
//! `-Q'' - Q'/r + Q = Q^{p+1}` on its own second-order conservative finite
//! difference grid, Richardson-extrapolated over two resolutions. Nothing from
//! the library is used except the value under test.

use nls_radial::ground_state::shoot_ground_state;

/// `(-Δ + 1)` as a symmetric tridiagonal system on `r_k = (k - ½)h`, with the
/// flux vanishing at the origin and an odd ghost at `r_max`.
struct Operator {
    h: f64,
    r: Vec<f64>,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl Operator {
    fn new(r_max: f64, n: usize) -> Self {
        let h = r_max / n as f64;
        let r: Vec<f64> = (0..n).map(|k| (k as f64 + 0.5) * h).collect();
        let (mut lower, mut diag, mut upper) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for k in 0..n {
            let left = k as f64 * h;
            let right = (k as f64 + 1.0) * h;
            let scale = 1.0 / (r[k] * h * h);
            lower[k] = -left * scale;
            upper[k] = -right * scale;
            diag[k] = (left + right) * scale + 1.0;
        }
        // u_n = -u_{n-1} beyond r_max doubles the outgoing flux term
        diag[n - 1] += n as f64 * h / (r[n - 1] * h * h);
        Self { h, r, lower, diag, upper }
    }

    fn apply(&self, u: &[f64]) -> Vec<f64> {
        let n = u.len();
        (0..n)
            .map(|k| {
                let mut v = self.diag[k] * u[k];
                if k > 0 {
                    v += self.lower[k] * u[k - 1];
                }
                if k + 1 < n {
                    v += self.upper[k] * u[k + 1];
                }
                v
            })
            .collect()
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = rhs.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        c[0] = self.upper[0] / self.diag[0];
        d[0] = rhs[0] / self.diag[0];
        for k in 1..n {
            let m = self.diag[k] - self.lower[k] * c[k - 1];
            c[k] = self.upper[k] / m;
            d[k] = (rhs[k] - self.lower[k] * d[k - 1]) / m;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = d[n - 1];
        for k in (0..n - 1).rev() {
            x[k] = d[k] - c[k] * x[k + 1];
        }
        x
    }

    fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).zip(&self.r).map(|((x, y), r)| x * y * r).sum::<f64>() * self.h
    }
}

/// Returns `Q(0)` by quadratic extrapolation from the first two nodes.
fn petviashvili_q0(p: f64, r_max: f64, n: usize) -> f64 {
    let op = Operator::new(r_max, n);
    let gamma = (p + 1.0) / p;
    let mut u: Vec<f64> = op.r.iter().map(|r| 2.0 * (-r * r / 2.0).exp()).collect();
    for _ in 0..500 {
        let nl: Vec<f64> = u.iter().map(|x| x.abs().powf(p) * x).collect();
        let stab = op.dot(&u, &op.apply(&u)) / op.dot(&u, &nl);
        let rhs: Vec<f64> = nl.iter().map(|x| stab.powf(gamma) * x).collect();
        let next = op.solve(&rhs);
        let change = next.iter().zip(&u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        u = next;
        if change < 1e-14 {
            break;
        }
    }
    // even in r: Q(r) ≈ a + b r² through (h/2, 3h/2)
    let (r0, r1) = (op.r[0], op.r[1]);
    let b = (u[1] - u[0]) / (r1 * r1 - r0 * r0);
    u[0] - b * r0 * r0
}

#[test]
fn fixed_point_iteration_agrees_with_shooting() {
    for p in [2.0, 3.0, 4.0] {
        let coarse = petviashvili_q0(p, 30.0, 3000);
        let fine = petviashvili_q0(p, 30.0, 6000);
        let extrapolated = (4.0 * fine - coarse) / 3.0;
        let shot = shoot_ground_state(p, 1e-12).unwrap().q0;
        let rel = ((extrapolated - shot) / shot).abs();
        assert!(rel < 1e-6, "p = {p}: fixed point {extrapolated}, shooting {shot}, rel {rel:.2e}");
        // the unextrapolated values really are second order apart
        assert!((coarse - fine).abs() > 10.0 * (extrapolated - shot).abs(), "p = {p}");
    }
}
