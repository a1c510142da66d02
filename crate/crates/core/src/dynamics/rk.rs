//! Dormand–Prince 5(4) with FSAL and the standard fourth-order dense output.

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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Continuous extension over one accepted step.
#[derive(Debug, Clone, Copy)]
pub struct Dense<const N: usize> {
    pub tau0: f64,
    pub h: f64,
    rc: [[f64; N]; 5],
}

impl<const N: usize> Dense<N> {
    pub fn eval(&self, tau: f64) -> [f64; N] {
        let s = (tau - self.tau0) / self.h;
        let s1 = 1.0 - s;
        let mut y = [0.0; N];
        for (i, yi) in y.iter_mut().enumerate() {
            let rc = &self.rc;
            *yi = rc[0][i] + s * (rc[1][i] + s1 * (rc[2][i] + s * (rc[3][i] + s1 * rc[4][i])));
        }
        y
    }
}

pub struct Step<const N: usize> {
    pub y: [f64; N],
    /// Derivative at the new point (first stage of the next step).
    pub k7: [f64; N],
    /// Local error estimate `h Σ e_i k_i`.
    pub err: [f64; N],
    pub dense: Dense<N>,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        if *c != 0.0 {
            for i in 0..N {
                out[i] += h * c * k[i];
            }
        }
    }
    out
}

/// One trial step from `(tau, y)` with `k1 = f(tau, y)`.
pub fn step<const N: usize, E, F>(f: &mut F, tau: f64, y: &[f64; N], k1: &[f64; N], h: f64) -> Result<Step<N>, E>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N], E>,
{
    let k2 = f(tau + C2 * h, &axpy(y, h, &[(A21, k1)]))?;
    let k3 = f(tau + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]))?;
    let k4 = f(tau + C4 * h, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = f(tau + C5 * h, &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
    let k6 = f(tau + h, &axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]))?;
    let y_new = axpy(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    let k7 = f(tau + h, &y_new)?;

    let mut err = [0.0; N];
    let mut rc = [[0.0; N]; 5];
    for i in 0..N {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let ydiff = y_new[i] - y[i];
        let bspl = h * k1[i] - ydiff;
        rc[0][i] = y[i];
        rc[1][i] = ydiff;
        rc[2][i] = bspl;
        rc[3][i] = ydiff - h * k7[i] - bspl;
        rc[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
    }
    Ok(Step { y: y_new, k7, err, dense: Dense { tau0: tau, h, rc } })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_is_fifth_order() {
        let mut f = |_t: f64, y: &[f64; 1]| -> Result<[f64; 1], ()> { Ok([y[0]]) };
        let mut err = |h: f64| {
            let s = step(&mut f, 0.0, &[1.0], &[1.0], h).unwrap();
            (s.y[0] - h.exp()).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!(ratio > 50.0 && ratio < 80.0, "{ratio}");
    }

    #[test]
    fn dense_output_matches_endpoints_and_interior() {
        let mut f = |_t: f64, y: &[f64; 2]| -> Result<[f64; 2], ()> { Ok([y[1], -y[0]]) };
        let mut interior_err = |h: f64| {
            let s = step(&mut f, 0.0, &[0.0, 1.0], &[1.0, 0.0], h).unwrap();
            assert_eq!(s.dense.eval(0.0), [0.0, 1.0]);
            assert!((s.dense.eval(h)[0] - s.y[0]).abs() < 1e-15);
            (s.dense.eval(0.35 * h)[0] - (0.35 * h).sin()).abs()
        };
        let (coarse, fine) = (interior_err(0.2), interior_err(0.1));
        assert!(coarse < 2e-7);
        assert!(coarse / fine > 20.0 && coarse / fine < 45.0, "{}", coarse / fine);
    }
}
