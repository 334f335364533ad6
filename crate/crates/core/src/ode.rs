//! Adaptive Dormand–Prince 5(4) integrator for small autonomous-in-form systems.

use crate::error::{NlsError, Result};

#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-16,
            h_init: 1e-3,
            h_max: 0.05,
            max_steps: 2_000_000,
        }
    }
}

/// What the step observer sees after every accepted step.
pub struct StepInfo<'a, const N: usize> {
    pub t: f64,
    pub y: &'a [f64; N],
    /// Index into `stops` when this step landed exactly on a requested point.
    pub stop: Option<usize>,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b* (fifth minus fourth order weights)
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

impl Dopri5 {
    /// Integrates `y' = f(t, y)` from `t0` to `t_end`, landing exactly on every
    /// point of the ascending `stops` slice. The observer may return `false`
    /// to end the integration early; the final `(t, y)` is returned.
    pub fn integrate<const N: usize>(
        &self,
        f: impl Fn(f64, &[f64; N]) -> [f64; N],
        t0: f64,
        y0: [f64; N],
        t_end: f64,
        stops: &[f64],
        mut observe: impl FnMut(StepInfo<'_, N>) -> bool,
    ) -> Result<(f64, [f64; N])> {
        let mut t = t0;
        let mut y = y0;
        let mut h = self.h_init.min(t_end - t0);
        let mut k1 = f(t, &y);
        let mut next_stop = stops.iter().position(|&s| s > t0);
        let mut steps = 0usize;

        while t < t_end {
            steps += 1;
            if steps > self.max_steps {
                return Err(NlsError::SolverFailure(format!(
                    "ODE step budget exhausted at t = {t}"
                )));
            }
            let target = match next_stop {
                Some(i) if stops[i] < t_end => stops[i],
                _ => t_end,
            };
            let mut landing = false;
            if t + h >= target {
                h = target - t;
                landing = true;
            }

            let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
            let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
            let k4 = f(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = f(
                t + C5 * h,
                &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            );
            let k6 = f(
                t + h,
                &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            );
            let y_new = axpy(&y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            let k7 = f(t + h, &y_new);

            let mut err = 0.0f64;
            for i in 0..N {
                let e = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
                err = err.max((e / sc).abs());
            }
            if !err.is_finite() {
                h *= 0.1;
                if h < 1e-14 {
                    return Err(NlsError::SolverFailure("ODE solution became non-finite".into()));
                }
                continue;
            }

            if err <= 1.0 {
                t = if landing { target } else { t + h };
                y = y_new;
                k1 = k7;
                let stop = if landing && next_stop.map(|i| stops[i] == target).unwrap_or(false) {
                    let i = next_stop.unwrap();
                    next_stop = if i + 1 < stops.len() { Some(i + 1) } else { None };
                    Some(i)
                } else {
                    None
                };
                if !observe(StepInfo { t, y: &y, stop }) {
                    break;
                }
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h * factor).min(self.h_max);
            if h < 1e-14 {
                return Err(NlsError::SolverFailure(format!("ODE step underflow at t = {t}")));
            }
        }
        Ok((t, y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_hits_stops() {
        let stops: Vec<f64> = (1..=10).map(|k| k as f64 * 0.7).collect();
        let mut seen = Vec::new();
        let (t, y) = Dopri5::default()
            .integrate(
                |_, y: &[f64; 2]| [y[1], -y[0]],
                0.0,
                [1.0, 0.0],
                7.0,
                &stops,
                |info| {
                    if let Some(i) = info.stop {
                        seen.push((i, info.t, info.y[0]));
                    }
                    true
                },
            )
            .unwrap();
        assert_eq!(t, 7.0);
        assert!((y[0] - 7.0f64.cos()).abs() < 1e-10);
        assert_eq!(seen.len(), 10);
        for (i, t, y0) in seen {
            assert_eq!(t, stops[i]);
            assert!((y0 - t.cos()).abs() < 1e-10);
        }
    }

    #[test]
    fn observer_can_stop_early() {
        let (t, _) = Dopri5::default()
            .integrate(|_, y: &[f64; 1]| [y[0]], 0.0, [1.0], 10.0, &[], |info| info.y[0] < 3.0)
            .unwrap();
        assert!(t < 2.0);
    }
}
