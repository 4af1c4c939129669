use std::cell::Cell;
use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64 as C;
use num_rational::Rational64;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

use lowk_core::assembler::{
    closed_form_g, generic_expansion, green_series, log_form, pole_resummed, q_values, s_series,
};
use lowk_core::brackets::QuadratureConfig;
use lowk_core::coeffgen::{a_terms, b_terms, gamma_series, Side, TermTable};
use lowk_core::oracle::{
    green_exact, green_exact_detailed, remainder_scaling_fit, zero_energy_modes, SolverConfig,
};
use lowk_core::potential::catalog_with;
use lowk_core::{max_valid_order, Branch, CaseTag, LaurentSeries, PotentialModel, ValidOrder};

type Outcome = Result<String, String>;

fn rel(got: f64, want: f64) -> f64 {
    ((got - want) / want).abs()
}

fn crel(got: C, want: C) -> f64 {
    (got - want).norm() / want.norm()
}

struct Worst {
    what: String,
    err: f64,
}

impl Worst {
    fn new() -> Self {
        Worst { what: String::new(), err: 0.0 }
    }

    fn see(&mut self, what: impl Into<String>, err: f64) {
        if !(err <= self.err) {
            self.err = err;
            self.what = what.into();
        }
    }

    fn check(&self, tol: f64) -> Outcome {
        let msg = format!("worst {:.2e} ({}), tol {tol:.0e}", self.err, self.what);
        if self.err < tol {
            Ok(msg)
        } else {
            Err(msg)
        }
    }
}

fn model(name: &str, params: &[(&str, f64)]) -> Result<PotentialModel, String> {
    catalog_with(name, params).map_err(|e| e.to_string())
}

fn e<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn rng() -> TestRng {
    TestRng::deterministic_rng(RngAlgorithm::ChaCha)
}

fn erfi(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    let x2 = x * x;
    for n in 1..200 {
        term *= x2 / n as f64;
        let t = term / (2 * n + 1) as f64;
        sum += t;
        if t.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    2.0 / PI.sqrt() * sum
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `Ei(-u)` for `u > 0`.
fn ei_neg(u: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for n in 1..200 {
        term *= -u / n as f64;
        let t = term / n as f64;
        sum += t;
        if t.abs() < 1e-18 {
            break;
        }
    }
    EULER_GAMMA + u.ln() + sum
}

fn shi(u: f64) -> f64 {
    let mut term = u;
    let mut sum = u;
    for n in 1..200 {
        let m = (2 * n) as f64;
        term *= u * u / (m * (m + 1.0));
        let t = term / (m + 1.0);
        sum += t;
        if t.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

fn listing(t: &TermTable) -> Vec<(Rational64, i32, String)> {
    let mut v: Vec<_> = t.terms.iter().map(|t| (t.coeff, t.limit_exponent, t.sign_string())).collect();
    v.sort();
    v
}

fn golden(rows: &[(i64, i64, i32, &str)]) -> Vec<(Rational64, i32, String)> {
    let mut v: Vec<_> =
        rows.iter().map(|&(n, d, l, s)| (Rational64::new(n, d), l, s.to_string())).collect();
    v.sort();
    v
}

fn criterion_1() -> Outcome {
    let a: [&[(i64, i64, i32, &str)]; 6] = [
        &[(-1, 2, 1, "")],
        &[(1, 2, 0, "-")],
        &[(1, 1, 1, "-+")],
        &[(3, 1, 2, "-++"), (-1, 1, 0, "--+")],
        &[(12, 1, 3, "-+++"), (-2, 1, 1, "-+-+"), (-6, 1, 1, "--++")],
        &[
            (60, 1, 4, "-++++"),
            (-6, 1, 2, "-++-+"),
            (-18, 1, 2, "-+-++"),
            (-36, 1, 2, "--+++"),
            (2, 1, 0, "--+-+"),
            (6, 1, 0, "---++"),
        ],
    ];
    let b: [(usize, &[(i64, i64, i32, &str)]); 4] = [
        (1, &[(1, 2, 0, "-")]),
        (3, &[(-1, 1, 0, "--+")]),
        (5, &[(6, 1, 0, "---++"), (2, 1, 0, "--+-+")]),
        (
            7,
            &[
                (-72, 1, 0, "----+++"),
                (-36, 1, 0, "---+-++"),
                (-12, 1, 0, "---++-+"),
                (-12, 1, 0, "--+--++"),
                (-4, 1, 0, "--+-+-+"),
            ],
        ),
    ];
    for (n, rows) in a.iter().enumerate() {
        if listing(&a_terms(n, Side::Right)) != golden(rows) {
            return Err(format!("a_{n} differs: {:?}", listing(&a_terms(n, Side::Right))));
        }
    }
    for (n, rows) in b {
        if listing(&b_terms(n, Side::Right)) != golden(rows) {
            return Err(format!("b_{n} differs: {:?}", listing(&b_terms(n, Side::Right))));
        }
    }
    Ok("a_0..a_5 and b_1, b_3, b_5, b_7 exact".into())
}

fn criterion_2() -> Outcome {
    let mut runner = TestRunner::new_with_rng(Config { cases: 100, ..Config::default() }, rng());
    let strat = (prop_oneof![0.1f64..3.0, -3.0f64..-0.1], -3.0f64..3.0, -3.0f64..3.0);
    let worst = Cell::new(0.0f64);
    let res = runner.run(&strat, |(b1, b3, b5)| {
        let g = gamma_series(&LaurentSeries::from_real(1, &[b1, 0.0, b3, 0.0, b5]))
            .map_err(|e| TestCaseError::fail(e.to_string()))?;
        let want = [
            (-1, 1.0 / (4.0 * b1)),
            (1, -b3 / (4.0 * b1 * b1)),
            (3, (b3 * b3 - b5 * b1) / (4.0 * b1.powi(3))),
        ];
        for (n, w) in want {
            let err = rel(g.re(n), w);
            worst.set(worst.get().max(err));
            prop_assert!(err < 1e-12, "γ_{} = {} vs {}", n, g.re(n), w);
        }
        Ok(())
    });
    match res {
        Ok(()) => Ok(format!("100 triples, worst rel {:.2e}, tol 1e-12", worst.get())),
        Err(err) => Err(err.to_string()),
    }
}

fn criterion_3() -> Outcome {
    let quad = QuadratureConfig::default();
    let m = model("parabolic", &[])?;
    let mut w = Worst::new();
    for x in [0.0, 0.7, 1.2] {
        let s = e(s_series(&m, x, 1, &quad))?;
        w.see(format!("s1({x})"), rel(s.re(1), PI.sqrt() / 2.0 * (x * x).exp()));
    }
    let q = e(q_values(&m, 1.2, 1.0, 1, &quad))?;
    w.see("q2(1.2, 1)", rel(q[2], PI / 4.0 * (erfi(1.0) - erfi(1.2))));
    let mut msg = w.check(1e-8)?;
    let ks: Vec<f64> = (0..8).map(|i| 0.4 * (0.05f64 / 0.4).powf(i as f64 / 7.0)).collect();
    let fit = e(remainder_scaling_fit(&m, 1.2, 1.0, 0, &ks, &SolverConfig::default(), &quad))?;
    msg += &format!("; N=0 slope {:.4} (want 2 ± 0.15)", fit.slope);
    if (fit.slope - 2.0).abs() <= 0.15 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_4() -> Outcome {
    let quad = QuadratureConfig::default();
    let m = model("logcosh", &[])?;
    let mut w = Worst::new();
    for x in [0.0, 1.0, 2.0f64] {
        let s = e(s_series(&m, x, 3, &quad))?;
        let c2 = x.cosh().powi(2);
        w.see(format!("s1({x})"), rel(s.re(1), c2));
        w.see(format!("s3({x})"), rel(s.re(3), -0.5 * (2.0 * x).cosh() * c2));
    }
    for (x, y) in [(2.0, 0.0), (1.0, -0.5), (0.3, 0.3 - 1e-3)] {
        let q = e(q_values(&m, x, y, 1, &quad))?;
        let want = 0.5 * (y - x) + 0.25 * ((2.0 * y).sinh() - (2.0 * x).sinh());
        w.see(format!("q2({x}, {y})"), rel(q[2], want));
    }
    w.check(1e-10)
}

fn criterion_5() -> Outcome {
    let quad = QuadratureConfig::default();
    let m = model("exponential", &[])?;
    let mut w = Worst::new();
    for z in [-1.0, 0.0, 0.5f64] {
        let u = z.exp();
        let s = e(s_series(&m, z, 1, &quad))?;
        w.see(format!("s0({z})"), rel(s.re(0), -0.5 * u.exp()));
        w.see(format!("s1({z})"), rel(s.re(1), -0.5 * u.exp() * (ei_neg(u) + 2.0 * shi(u))));
    }
    let msg = w.check(1e-8)?;
    let mut lw = Worst::new();
    for (x, y) in [(0.5, 0.0), (0.0, -2.0), (1.0, 0.7)] {
        let r = e(green_series(&m, x, y, 1, &quad))?;
        let p = e(log_form(&r))?;
        let (gm1, g0, g1) = (r.coeff(-1), r.coeff(0), r.coeff(1));
        let p1 = g0 / gm1;
        let p2 = g1 / gm1 - 0.5 * p1 * p1;
        lw.see(format!("p1({x}, {y})"), rel(p[0], p1));
        lw.see(format!("p2({x}, {y})"), rel(p[1], p2));
    }
    Ok(format!("{msg}; log form {}", lw.check(1e-12)?))
}

fn criterion_6() -> Outcome {
    let quad = QuadratureConfig::default();
    let m = model("sqrtwell", &[])?;
    let (x, y) = (1.0f64, -0.5f64);
    let r = e(green_series(&m, x, y, 2, &quad))?;
    let sx = (1.0 + x).sqrt();
    let sy = (1.0 - y).sqrt();
    let pre = (1.0 - sx / 2.0 - sy / 2.0).exp();
    let g0 = -2.0 * pre * (1.0 + sx);
    let g2 = 4.0 / 3.0
        * pre
        * (118.0 + 37.0 * x + 2.0 * x * x - 3.0 * y
            + (94.0 + 11.0 * x - 3.0 * y) * sx
            + 2.0 * (1.0 - y) * (1.0 + sx) * sy);
    let mut w = Worst::new();
    w.see("g0", rel(r.coeff(0), g0));
    w.see("g2", rel(r.coeff(2), g2));
    let msg = w.check(1e-6)?;
    let cfg = SolverConfig::default();
    let mut im = Vec::new();
    for k in [0.1, 0.05, 0.025] {
        im.push(e(green_exact(&m, x, y, C::new(k, 0.0), &cfg))?.value.im.abs());
    }
    let ratios = [im[0] / im[1], im[1] / im[2]];
    let msg = format!(
        "{msg}; |Im G| = {:.3e}, {:.3e}, {:.3e}, halving ratios {:.3e}, {:.3e} (k³ gives 8)",
        im[0], im[1], im[2], ratios[0], ratios[1]
    );
    if ratios.iter().all(|r| *r > 8.0) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_7() -> Outcome {
    let quad = QuadratureConfig::default();
    let alpha = 1.5f64;
    let m = model("logstep", &[("alpha", alpha)])?;
    let (x, y) = (1.5f64, 0.8f64);
    let r = e(green_series(&m, x, y, 0, &quad))?;
    let lead = x.powf(-alpha / 2.0);
    let mut w = Worst::new();
    w.see("g-1", rel(r.coeff(-1), lead));
    w.see("g0", rel(r.coeff(0), lead * (1.0 - y + 1.0 / (alpha - 1.0))));
    let mut msg = w.check(1e-8)?;
    let ks: Vec<f64> = (0..9).map(|i| 0.1 * 10f64.powf(-(i as f64) / 4.0)).collect();
    let fit = e(remainder_scaling_fit(&m, x, y, 0, &ks, &SolverConfig::default(), &quad))?;
    let valid = e(max_valid_order(&m))?;
    msg += &format!("; N=0 slope {:.4} (want 0.5 ± 0.1); max_valid_order {valid:?}", fit.slope);
    if (fit.slope - 0.5).abs() <= 0.1 && valid == ValidOrder::Finite(0) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn barrier_green(x: f64, y: f64, k: C, a: f64) -> C {
    let (x, y) = if x >= y { (x, y) } else { (y, x) };
    let i = C::new(0.0, 1.0);
    let p = (C::new(a * a, 0.0) - k * k).sqrt();
    let ik = i * k;
    let num = ((p - ik) * (p * (1.0 - x)).exp() + (p + ik) * (-p * (1.0 - x)).exp())
        * ((p + ik) * (-p * (1.0 + y)).exp() + (p - ik) * (p * (1.0 + y)).exp());
    let den = -4.0 * p * ((p * p - k * k) * (2.0 * p).sinh() - 2.0 * i * p * k * (2.0 * p).cosh());
    num / den
}

fn criterion_8() -> Outcome {
    let quad = QuadratureConfig::default();
    let cfg = SolverConfig::default();
    let a = 1.0f64;
    let m = model("barrier", &[("a", a)])?;
    let (x, y) = (0.5f64, -0.5f64);
    let r = e(generic_expansion(&m, x, y, 1, &cfg, &quad))?;
    let ch = |z: f64| (a * z).cosh();
    let th = |z: f64| (a * z).tanh();
    let s2 = (2.0 * a).sinh();
    let g0 = -ch(x - 1.0) * ch(y + 1.0) / (a * s2);
    let g1 = g0 / (2.0 * a)
        * (th(x + 1.0) + th(x - 1.0) - th(y + 1.0) - th(y - 1.0)
            + (ch(x - 1.0) / ch(x + 1.0)
                + ch(x + 1.0) / ch(x - 1.0)
                + ch(y - 1.0) / ch(y + 1.0)
                + ch(y + 1.0) / ch(y - 1.0))
                / s2);
    let mut w = Worst::new();
    w.see("g0", rel(r.coeff(0), g0));
    w.see("g1", rel(r.coeff(1), g1));
    let zm = e(zero_energy_modes(&m, &cfg))?;
    let c2 = a * s2;
    let c1 = ch(2.0) - c2;
    for z in [-2.5, -1.2, -0.6, 0.0, 0.8, 1.5, 3.0f64] {
        let want = if z < -1.0 {
            1.0
        } else if z < 1.0 {
            ch(z + 1.0)
        } else {
            c1 + c2 * z
        };
        w.see(format!("ψ0-({z})"), rel(e(zm.psi_minus(z))?.0, want));
    }
    let msg = w.check(1e-8)?;
    let mut gw = Worst::new();
    let y = -0.3;
    for k in [0.1, 0.4, 0.9, 1.6, 3.0] {
        for x in [-0.9, -0.5, 0.0, 0.45, 0.95] {
            let k = C::new(k, 0.0);
            let got = e(green_exact(&m, x, y, k, &cfg))?.value;
            gw.see(format!("k = {}, x = {x}", k.re), crel(got, barrier_green(x, y, k, a)));
        }
    }
    Ok(format!("{msg}; 5×5 grid {}", gw.check(1e-6)?))
}

fn six_models() -> Result<Vec<(&'static str, PotentialModel, f64, f64)>, String> {
    Ok(vec![
        ("parabolic", model("parabolic", &[])?, 1.2, 1.0),
        ("logcosh", model("logcosh", &[])?, 2.0, 0.0),
        ("exponential", model("exponential", &[])?, 0.5, 0.0),
        ("sqrtwell", model("sqrtwell", &[])?, 1.0, -0.5),
        ("logstep", model("logstep", &[("alpha", 1.5)])?, 1.5, 0.8),
        ("barrier", model("barrier", &[("a", 1.0)])?, 0.5, -0.5),
    ])
}

fn criterion_9() -> Outcome {
    let cfg = SolverConfig::default();
    let free = model("free", &[])?;
    let mut fw = Worst::new();
    for (x, y) in [(0.7, -0.4), (2.0, 2.0), (-1.0, 3.5)] {
        for k in [C::new(0.3, 0.0), C::new(1.0, 0.0), C::new(2.5, 0.0), C::new(0.8, 0.4)] {
            let got = e(green_exact(&free, x, y, k, &cfg))?.value;
            let ik = C::new(0.0, 1.0) * k;
            let want = (ik * (x - y as f64).abs()).exp() / (2.0 * ik);
            fw.see(format!("free k = {k}, ({x}, {y})"), crel(got, want));
        }
    }
    let mut msg = format!("free {}", fw.check(1e-10)?);
    let mut drift = Worst::new();
    let mut jump = Worst::new();
    let mut sym = Worst::new();
    let mut mirror = Worst::new();
    let delta = 1e-9;
    for (name, m, x, y) in six_models()? {
        let refl = m.reflected();
        for k in [C::new(0.7, 0.0), C::new(0.3, 0.2)] {
            let d = e(green_exact_detailed(&m, x, y, k, &cfg))?;
            drift.see(format!("{name} k = {k}"), d.wronskian_drift);
            let s = e(green_exact(&m, y, x, k, &cfg))?;
            sym.see(format!("{name} k = {k}"), crel(s.value, d.sample.value));
            let r = e(green_exact(&refl, -x, -y, k, &cfg))?;
            mirror.see(format!("{name} k = {k}"), crel(r.value, d.sample.value));
            let above = e(green_exact_detailed(&m, y + delta, y, k, &cfg))?;
            let below = e(green_exact_detailed(&m, y, y - delta, k, &cfg))?;
            jump.see(format!("{name} k = {k}"), (above.d_dx - below.d_dy - 1.0).norm());
        }
    }
    msg += &format!("; drift {}", drift.check(1e-8)?);
    msg += &format!("; jump {}", jump.check(1e-6)?);
    msg += &format!("; x↔y {}", sym.check(1e-8)?);
    msg += &format!("; mirrored model {}", mirror.check(1e-8)?);
    Ok(msg)
}

fn criterion_10() -> Outcome {
    let quad = QuadratureConfig::default();
    let gen: &[(&str, &[(&str, f64)], CaseTag, &[i32], &[(f64, f64)])] = &[
        ("tanhstep", &[], CaseTag::I, &[-1, 0], &[(0.5, -0.3), (1.2, 1.0), (-0.4, -1.1)]),
        ("exponential", &[], CaseTag::Ii, &[-1, 0], &[(0.5, -0.3), (1.2, 1.0), (-0.4, -1.1)]),
        ("logstep", &[("alpha", 1.5)], CaseTag::Ii, &[-1, 0], &[(1.5, 0.8), (2.0, 1.2)]),
        ("negexp", &[], CaseTag::Iii, &[0, 1], &[(0.5, -0.3), (1.2, 1.0), (-0.4, -1.1)]),
        ("parabolic", &[], CaseTag::Iv, &[-2, 0], &[(0.5, -0.3), (1.2, 1.0), (-0.4, -1.1)]),
        ("logcosh", &[], CaseTag::Iv, &[-2, 0], &[(0.5, -0.3), (1.2, 1.0), (-0.4, -1.1)]),
        ("sqrtwell", &[], CaseTag::V, &[0, 2], &[(1.0, -0.5), (0.3, 0.1), (-0.2, -0.9)]),
        ("invparabolic", &[], CaseTag::Vi, &[0], &[(0.5, -0.3), (1.2, 1.0), (-0.4, -1.1)]),
    ];
    let mut w = Worst::new();
    for &(name, params, tag, which, pts) in gen {
        let m = model(name, params)?;
        let n = *which.iter().max().unwrap();
        for &(x, y) in pts {
            let r = e(green_series(&m, x, y, n, &quad))?;
            if r.case_tag != tag {
                return Err(format!("{name} classified as {:?}, want {tag:?}", r.case_tag));
            }
            for &i in which {
                let want = e(closed_form_g(&m, x, y, tag, i, &quad))?;
                w.see(format!("{name} g_{i} ({x}, {y})"), rel(r.coeff(i), want));
            }
        }
    }
    w.check(1e-6)
}

fn criterion_11() -> Outcome {
    let quad = QuadratureConfig::default();
    let m = model("parabolic", &[])?;
    let r = e(green_series(&m, 1.2, 1.0, 2, &quad))?;
    let (gm2, g0, g2) = (r.coeff(-2), r.coeff(0), r.coeff(2));
    let pole = -g0 / g2;
    let pole_err = (pole - 2.0).abs() / 2.0;
    let k = C::new(1.3, 0.0);
    let exact = e(green_exact(&m, 1.2, 1.0, k, &SolverConfig::default()))?.value;
    let resummed = e(pole_resummed(gm2, g0, g2, k))?;
    let plain = r.partial_sum(2, k);
    let (dr, dp) = ((resummed - exact).norm(), (plain - exact).norm());
    let msg = format!(
        "k² pole {pole:.4} ({:.1}% from 2, tol 15%); at k = 1.3 |resummed - exact| {dr:.3e} vs |N=2 - exact| {dp:.3e}",
        100.0 * pole_err
    );
    if pole_err <= 0.15 && dr < dp {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_12() -> Outcome {
    let mut runner = TestRunner::new_with_rng(Config { cases: 1000, ..Config::default() }, rng());
    let strat = (
        -3i32..=3,
        prop_oneof![0.5f64..2.0, -2.0f64..-0.5],
        proptest::collection::vec(-2.0f64..2.0, 8),
    );
    // errors are measured against the largest coefficient entering the round trip
    let norm = |s: &LaurentSeries| s.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
    let close = |a: &LaurentSeries, b: &LaurentSeries, scale: f64| {
        a.min_order() == b.min_order()
            && a.max_order() == b.max_order()
            && a.coeffs().iter().zip(b.coeffs()).all(|(x, y)| (x - y).norm() <= 1e-12 * scale)
    };
    let res = runner.run(&strat, |(min, lead, rest)| {
        let mut coeffs = vec![lead];
        coeffs.extend(rest);
        let a = LaurentSeries::from_real(min, &coeffs);
        let fail = |what: &str| TestCaseError::fail(format!("{what} failed for {a}"));
        prop_assert_eq!(a.max_order() - a.min_order(), 8);

        let inv = a.invert().map_err(|e| fail(&e.to_string()))?;
        let one = a.mul(&inv);
        let unit = LaurentSeries::monomial(0, C::new(1.0, 0.0), one.max_order());
        if !close(&one, &unit, norm(&a) * norm(&inv)) {
            return Err(fail("invert·self"));
        }

        let even = a.shift(-a.min_order() + 2 * (a.min_order() / 2));
        let r = even.sqrt(Branch::Plus).map_err(|e| fail(&e.to_string()))?;
        if !close(&r.mul(&r), &even, norm(&even).max(norm(&r)).max(1.0)) {
            return Err(fail("sqrt²"));
        }

        let l = a.log().map_err(|e| fail(&e.to_string()))?;
        let back = l.exp().map_err(|e| fail(&e.to_string()))?;
        let unshifted = a.shift(-a.min_order());
        if !close(&back, &unshifted, norm(&unshifted).max(norm(&l)).max(1.0)) {
            return Err(fail("exp∘log"));
        }
        Ok(())
    });
    match res {
        Ok(()) => Ok("1000 series through order 8: invert·self, sqrt², exp∘log within 1e-12".into()),
        Err(err) => Err(err.to_string()),
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("combinatoric golden tables", criterion_1),
        ("gamma closed forms", criterion_2),
        ("example 1, V = z²", criterion_3),
        ("example 2, V = 2 log cosh z", criterion_4),
        ("example 3, V = e^z", criterion_5),
        ("example 4, square-root well", criterion_6),
        ("example 5, logarithmic step", criterion_7),
        ("example 6, square barrier", criterion_8),
        ("oracle integrity", criterion_9),
        ("closed-form cross-checks", criterion_10),
        ("pole resummation", criterion_11),
        ("Laurent property suite", criterion_12),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = f();
        let secs = start.elapsed().as_secs_f64();
        match out {
            Ok(msg) => println!("criterion {:>2} PASS [{secs:.1}s] {name}: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL [{secs:.1}s] {name}: {msg}", i + 1)
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
