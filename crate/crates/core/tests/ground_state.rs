use std::sync::Arc;

use nls_radial::ground_state::{gn_constant, shoot_ground_state, shoot_ground_state_on};
use nls_radial::RadialGrid;

// Independent shooting (scipy DOP853, rtol 1e-13, bisection to 1e-13):
// p, Q(0), M, K, P, C0, M²E^{p-2}, M‖∇Q‖^{p-2}
const ORACLE: [[f64; 8]; 5] = [
    [2.0, 2.2062008646506968, 11.700896524547943, 11.700896524555553, 23.401793049044343, 0.17092707347715552, 136.91097947817812, 11.700896524547943],
    [2.5, 2.140009226584226, 8.35864893158286, 10.448311164494541, 18.806960095995393, 0.11977740385558931, 71.41595020503291, 15.027876227557794],
    [3.0, 2.0853301695031234, 6.3013560177429895, 9.452034026625237, 15.753390044257973, 0.086030430094133, 62.5521239480464, 19.372990055298214],
    [4.0, 2.0002899439958526, 3.9834474652132132, 7.9668949304394125, 11.950342395463956, 0.047265371473350956, 62.94719532778463, 31.735707416278878],
    [6.0, 1.8890429628256982, 2.0404745277987906, 6.121423583415375, 8.161898110715947, 0.01743824175633526, 72.17504542846447, 76.46030786612633],
];

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn matches_independent_shooting() {
    for [p, q0, m, k, pot, c0, me, kg] in ORACLE {
        let g = shoot_ground_state(p, 1e-12).unwrap();
        let n = &g.norms;
        assert!((g.q0 - q0).abs() < 1e-9, "p = {p}: Q(0) {} vs {q0}", g.q0);
        for (name, got, want) in [
            ("M", n.mass, m),
            ("K", n.kinetic, k),
            ("P", n.potential, pot),
            ("C0", g.c0, c0),
            ("threshold_me", g.threshold_me, me),
            ("threshold_kg", g.threshold_kg, kg),
        ] {
            assert!(rel(got, want) < 1e-6, "p = {p}: {name} {got} vs {want}");
        }
    }
}

#[test]
fn cubic_constant_is_twice_inverse_mass() {
    let g = shoot_ground_state(2.0, 1e-12).unwrap();
    assert!(rel(g.c0, 2.0 / g.norms.mass) < 1e-6);
    assert!(gn_constant(&g).relative_gap() < 1e-6);
}

#[test]
fn energy_is_fixed_fraction_of_kinetic() {
    for p in [2.5, 3.0, 4.0, 6.0] {
        let g = shoot_ground_state(p, 1e-12).unwrap();
        let want = (p - 2.0) / (2.0 * p) * g.norms.kinetic;
        assert!(rel(g.norms.energy, want) < 1e-6, "p = {p}");
        assert!(g.threshold_me > 0.0 && g.threshold_kg > 0.0);
        assert!(gn_constant(&g).relative_gap() < 1e-6, "p = {p}");
    }
}

/// `Q'' + Q'/r - Q + Q^{p+1}` from seven-point centered differences, with the
/// profile continued evenly through the origin. Sixth order: near the peak at
/// p = 6 the five-point stencil's own truncation error is already 6e-5.
fn ode_residual(q: &[f64], h: f64, p: f64, k: usize) -> f64 {
    let at = |j: isize| if j < 0 { q[(-j - 1) as usize] } else { q[j as usize] };
    let k = k as isize;
    let f: Vec<f64> = (-3..=3).map(|j| at(k + j)).collect();
    let d1 = (-f[0] + 9.0 * f[1] - 45.0 * f[2] + 45.0 * f[4] - 9.0 * f[5] + f[6]) / (60.0 * h);
    let d2 = (2.0 * f[0] - 27.0 * f[1] + 270.0 * f[2] - 490.0 * f[3] + 270.0 * f[4] - 27.0 * f[5] + 2.0 * f[6])
        / (180.0 * h * h);
    let r = (k as f64 + 0.5) * h;
    d2 + d1 / r - f[3] + f[3].powf(p + 1.0)
}

#[test]
fn discrete_equation_residual_is_small() {
    for p in [2.0, 2.5, 3.0, 4.0, 6.0] {
        let g = shoot_ground_state(p, 1e-12).unwrap();
        let grid = g.field.grid();
        let q: Vec<f64> = g.field.values().iter().map(|z| z.re).collect();
        let h = grid.r_max() / q.len() as f64;
        assert!((grid.nodes()[0] - h / 2.0).abs() < 1e-15);
        let worst = (0..q.len())
            .filter(|&k| grid.nodes()[k] < 0.8 * grid.r_max())
            .map(|k| ode_residual(&q, h, p, k).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-5, "p = {p}: residual {worst:.2e}");
    }
}

#[test]
fn threshold_converges_under_refinement() {
    let me = |n: usize| {
        shoot_ground_state_on(Arc::new(RadialGrid::new(30.0, n).unwrap()), 3.0, 1e-12)
            .unwrap()
            .threshold_me
    };
    let reference = me(8192);
    let coarse = (me(256) - reference).abs();
    let fine = (me(512) - reference).abs();
    let order = (coarse / fine).log2();
    assert!(order >= 1.8, "errors {coarse:.2e} -> {fine:.2e}, order {order:.2}");
}
