//! Adaptive Dormand–Prince 5(4) integration of `ψ'' = (V_S(x) - k²) ψ`.
//!
//! The state carries a separate log-scale so that solutions growing through
//! confining regions never overflow; ratios of states stay exact.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::potential::{PotentialModel, RealFn};

type C = Complex64;

/// Per-step error target as a fraction of the requested relative tolerance.
const LOCAL_FRACTION: f64 = 0.02;
const MAX_STEPS: usize = 5_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct State {
    pub psi: C,
    pub dpsi: C,
    /// The true solution is `(psi, dpsi) · e^{log_scale}`.
    pub log_scale: f64,
}

impl State {
    pub fn new(psi: C, dpsi: C) -> Self {
        Self { psi, dpsi, log_scale: 0.0 }
    }

    fn renormalized(mut self) -> Self {
        let n = self.psi.norm().max(self.dpsi.norm());
        if n > 1e50 || (n < 1e-50 && n > 0.0) {
            self.psi /= n;
            self.dpsi /= n;
            self.log_scale += n.ln();
        }
        self
    }

    /// `ψ` with the scale folded in (may overflow for extreme scales).
    pub fn value(&self) -> C {
        self.psi * self.log_scale.exp()
    }

    pub fn derivative(&self) -> C {
        self.dpsi * self.log_scale.exp()
    }
}

/// `ψ₁ψ₂' - ψ₁'ψ₂` with scales folded in.
pub fn wronskian(a: &State, b: &State) -> C {
    (a.psi * b.dpsi - a.dpsi * b.psi) * (a.log_scale + b.log_scale).exp()
}

/// `ψ'' = (V_S - k²) ψ` with delta weights at `jumps` and finite jumps of
/// `V_S` at `breaks`.
pub struct Schrodinger {
    vs: RealFn,
    k2: C,
    /// `(x₀, c)`: `V_S` contains `c δ(x - x₀)`.
    jumps: Vec<(f64, f64)>,
    /// Every point where `V_S` is not smooth.
    breaks: Vec<f64>,
    rtol: f64,
}

const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const CS: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

impl Schrodinger {
    pub fn new(model: &PotentialModel, k: C, rtol: f64) -> Self {
        let jumps = model
            .discontinuities
            .iter()
            .filter(|d| d.delta_weight() != 0.0)
            .map(|d| (d.at, d.delta_weight()))
            .collect();
        let breaks = model.discontinuities.iter().map(|d| d.at).collect();
        Self { vs: model.vs_fn(), k2: k * k, jumps, breaks, rtol }
    }

    pub fn from_parts(vs: RealFn, k: C, jumps: Vec<(f64, f64)>, breaks: Vec<f64>, rtol: f64) -> Self {
        Self { vs, k2: k * k, jumps, breaks, rtol }
    }

    pub fn q(&self, x: f64) -> C {
        C::new((self.vs)(x), 0.0) - self.k2
    }

    /// Carry `s` from `from` to `to`, applying jump conditions on the way.
    /// When `record` is given, every accepted step is appended to it.
    pub fn propagate(
        &self,
        from: f64,
        to: f64,
        s: State,
        mut record: Option<&mut Vec<(f64, State)>>,
    ) -> Result<State> {
        if from == to {
            return Ok(s);
        }
        let dir = if to > from { 1.0 } else { -1.0 };
        let mut stops: Vec<f64> = self
            .breaks
            .iter()
            .copied()
            .filter(|&b| (b - from) * dir > 0.0 && (to - b) * dir > 0.0)
            .collect();
        stops.sort_by(|a, b| (a * dir).total_cmp(&(b * dir)));
        stops.push(to);
        let mut state = s;
        let mut a = from;
        for &b in &stops {
            state = self.segment(a, b, state, record.as_deref_mut())?;
            if b != to {
                for &(x0, c) in &self.jumps {
                    if x0 == b {
                        state.dpsi += dir * c * state.psi;
                    }
                }
                if let Some(r) = record.as_deref_mut() {
                    r.push((b, state));
                }
            }
            a = b;
        }
        Ok(state)
    }

    fn segment(
        &self,
        a: f64,
        b: f64,
        s: State,
        mut record: Option<&mut Vec<(f64, State)>>,
    ) -> Result<State> {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let pad = |e: f64| if self.breaks.contains(&e) { 1e-12 * (1.0 + e.abs()) } else { 0.0 };
        let (lo_in, hi_in) = (lo + pad(lo), hi - pad(hi));
        let vs = |t: f64| (self.vs)(t.clamp(lo_in, hi_in.max(lo_in)));
        let rhs = |t: f64, y: [C; 2]| -> [C; 2] { [y[1], (C::new(vs(t), 0.0) - self.k2) * y[0]] };
        let omega = |t: f64| (C::new(vs(t), 0.0) - self.k2).norm().sqrt().max(1.0 / (1.0 + t.abs()));

        let len = (b - a).abs();
        let dir = (b - a).signum();
        let mut t = a;
        let mut y = [s.psi, s.dpsi];
        let mut log_scale = s.log_scale;
        let mut h = (0.05 / omega(a)).min(len);
        let mut k1 = rhs(t, y);
        let mut steps = 0usize;
        while (b - t) * dir > 0.0 {
            steps += 1;
            if steps > MAX_STEPS {
                return Err(Error::NonconvergedOde(format!("step limit on [{a}, {b}]")));
            }
            let remaining = (b - t).abs();
            let last = h >= remaining * (1.0 - 1e-12);
            let hs = if last { remaining } else { h };
            let hd = hs * dir;
            let mut ks = [[C::new(0.0, 0.0); 2]; 7];
            ks[0] = k1;
            for i in 1..7 {
                let mut yi = y;
                for (j, kj) in ks.iter().enumerate().take(i) {
                    let aij = A[i - 1][j];
                    if aij != 0.0 {
                        yi[0] += hd * aij * kj[0];
                        yi[1] += hd * aij * kj[1];
                    }
                }
                ks[i] = rhs(t + CS[i] * hd, yi);
            }
            let mut y5 = y;
            let mut err = [C::new(0.0, 0.0); 2];
            for i in 0..7 {
                for c in 0..2 {
                    y5[c] += hd * B5[i] * ks[i][c];
                    err[c] += hd * (B5[i] - B4[i]) * ks[i][c];
                }
            }
            let w = omega(t);
            let energy = |v: &[C; 2]| ((w * v[0].norm()).powi(2) + v[1].norm_sqr()).sqrt();
            let scale = LOCAL_FRACTION * self.rtol * energy(&y).max(energy(&y5)).max(f64::MIN_POSITIVE);
            let e = (w * err[0].norm()).max(err[1].norm()) / scale;
            if !e.is_finite() {
                return Err(Error::NonconvergedOde(format!("non-finite state near x = {t}")));
            }
            if e <= 1.0 {
                t = if last { b } else { t + hd };
                y = y5;
                k1 = ks[6];
                let st = State { psi: y[0], dpsi: y[1], log_scale }.renormalized();
                if st.log_scale != log_scale {
                    let f = (log_scale - st.log_scale).exp();
                    k1 = [k1[0] * f, k1[1] * f];
                    y = [st.psi, st.dpsi];
                    log_scale = st.log_scale;
                }
                if let Some(r) = record.as_deref_mut() {
                    r.push((t, st));
                }
            }
            let factor = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
            h = hs * factor;
            if h < 1e-14 * (1.0 + t.abs()) {
                return Err(Error::NonconvergedOde(format!("step size underflow near x = {t}")));
            }
        }
        Ok(State { psi: y[0], dpsi: y[1], log_scale })
    }

    /// WKB log-derivative `ψ'/ψ` at `x` for the solution decaying toward
    /// `+∞` (`toward_right`) or `-∞`.
    pub fn wkb_log_derivative(&self, x: f64, toward_right: bool, k: C) -> (C, f64) {
        let h = 1e-3 * (1.0 + x.abs());
        let q0 = self.q(x);
        let qp = (self.q(x + h) - self.q(x - h)) / (2.0 * h);
        let qpp = (self.q(x + h) - 2.0 * q0 + self.q(x - h)) / (h * h);
        let mut r = q0.sqrt();
        if r.re.abs() <= 1e-15 * r.norm() {
            // real k above the potential: outgoing wave, Re κ with the sign of Re k
            let s = if k.re >= 0.0 { -1.0 } else { 1.0 };
            r = C::new(0.0, s * r.im.abs());
        }
        let a = -qp / (4.0 * q0);
        let c = (5.0 * qp * qp / (16.0 * q0 * q0) - qpp / (4.0 * q0)) / (2.0 * r);
        let crit = (c / r).norm();
        if toward_right {
            (-r + a + c, crit)
        } else {
            (r + a - c, crit)
        }
    }
}

/// Record of a solution along a line, for evaluation at arbitrary points.
pub struct Trajectory {
    /// Sorted by position.
    points: Vec<(f64, State)>,
}

impl Trajectory {
    pub fn new(mut points: Vec<(f64, State)>) -> Self {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self { points }
    }

    pub fn span(&self) -> (f64, f64) {
        (self.points[0].0, self.points[self.points.len() - 1].0)
    }

    pub fn points(&self) -> &[(f64, State)] {
        &self.points
    }

    /// Nearest recorded state at or beside `x`, then a short integration.
    pub fn eval(&self, eq: &Schrodinger, x: f64) -> Result<State> {
        let i = self.points.partition_point(|p| p.0 < x);
        let cand = [i.checked_sub(1), (i < self.points.len()).then_some(i)];
        let (x0, s0) = cand
            .iter()
            .flatten()
            .map(|&j| self.points[j])
            .min_by(|a, b| (a.0 - x).abs().total_cmp(&(b.0 - x).abs()))
            .expect("empty trajectory");
        eq.propagate(x0, x, s0, None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::catalog_with;

    #[test]
    fn plane_wave_is_reproduced() {
        let free = catalog_with("free", &[]).unwrap();
        let k = C::new(0.7, 0.0);
        let eq = Schrodinger::new(&free, k, 1e-12);
        let i = C::new(0.0, 1.0);
        let s = eq.propagate(0.0, 5.0, State::new(C::new(1.0, 0.0), i * k), None).unwrap();
        let want = (i * k * 5.0).exp();
        assert!((s.value() - want).norm() < 1e-10);
        assert!((s.derivative() - i * k * want).norm() < 1e-10);
    }

    #[test]
    fn growth_is_renormalized() {
        let free = catalog_with("free", &[]).unwrap();
        let k = C::new(0.0, 3.0);
        let eq = Schrodinger::new(&free, k, 1e-12);
        let s = eq.propagate(0.0, 100.0, State::new(C::new(1.0, 0.0), C::new(3.0, 0.0)), None).unwrap();
        let log = s.psi.norm().ln() + s.log_scale;
        assert!((log - 300.0).abs() < 1e-9, "{log}");
    }

    #[test]
    fn delta_jump_applied_in_both_directions() {
        let m = catalog_with("logstep", &[("alpha", 1.5)]).unwrap();
        let eq = Schrodinger::new(&m, C::new(0.0, 0.0), 1e-12);
        let s0 = State::new(C::new(1.0, 0.0), C::new(0.0, 0.0));
        let fwd = eq.propagate(0.5, 1.5, s0, None).unwrap();
        let back = eq.propagate(1.5, 0.5, fwd, None).unwrap();
        assert!((back.value() - 1.0).norm() < 1e-10);
        assert!(back.derivative().norm() < 1e-10);
        // just past the jump ψ' = -α/2
        let past = eq.propagate(0.5, 1.0 + 1e-9, s0, None).unwrap();
        assert!((past.derivative().re + 0.75).abs() < 1e-7);
    }
}
