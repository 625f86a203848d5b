use approx::assert_relative_eq;

use super::*;
use crate::quad::{integrate, Node, QuadOptions};

fn families() -> Vec<Family> {
    vec![
        Family::gumbel(),
        Family::burr(2.0, 1.0).unwrap(),
        Family::burr(0.5, 3.0).unwrap(),
        Family::reversed_burr(1.0, 1.0, 0.0).unwrap(),
        Family::reversed_burr(1.0, 4.0, 0.0).unwrap(),
        Family::reversed_burr(0.5, 1.0, 1.5).unwrap(),
        Family::exact_gp(0.5).unwrap(),
        Family::exact_gp(-1.5).unwrap(),
    ]
}

fn total_mass(m: &ExcessModel) -> f64 {
    let opts = QuadOptions::with_rel_tol(1e-12);
    let r = integrate(
        |n: Node| {
            if m.endpoint.is_finite() && n.from_hi < 0.5 * m.endpoint {
                m.pdf_below_upper(n.from_hi)
            } else {
                m.pdf(n.x)
            }
        },
        0.0,
        m.endpoint,
        &opts,
    )
    .unwrap();
    r.value
}

#[test]
fn recenter_parses() {
    assert_eq!("on".parse::<Recenter>().unwrap(), Recenter::On);
    assert_eq!("AUTO".parse::<Recenter>().unwrap(), Recenter::Auto);
    assert!("maybe".parse::<Recenter>().is_err());
    assert!(Recenter::Auto.resolve(-0.5));
    assert!(!Recenter::Auto.resolve(0.0));
}

#[test]
fn construction_examples() {
    let gp = Family::exact_gp(0.5).unwrap();
    let m = ExcessModel::new(&gp, 100.0, Recenter::Auto).unwrap();
    assert_relative_eq!(m.t, 18.0, max_relative = 1e-14);
    assert_relative_eq!(m.s_t, 1.0 + 0.5 * m.t, max_relative = 1e-14);
    assert_eq!(m.c_t, 0.0);
    assert!(!m.recentered);

    let rb = Family::reversed_burr(1.0, 1.0, 0.0).unwrap();
    let on = ExcessModel::new(&rb, 100.0, Recenter::Auto).unwrap();
    assert!(on.recentered);
    assert_eq!(on.endpoint, 1.0);
    assert_relative_eq!(on.c_t, 0.0 - on.t - on.s_t, max_relative = 1e-12);
    assert!(on.mu_t < 0.0);

    let off = ExcessModel::new(&rb, 100.0, Recenter::Off).unwrap();
    assert_eq!(off.c_t, 0.0);
    assert_relative_eq!(off.endpoint, -off.t / off.s_t, max_relative = 1e-12);
    assert!(off.endpoint != 1.0);

    assert!(ExcessModel::new(&rb, 1.0, Recenter::Auto).is_err());
}

#[test]
fn level_matches_threshold() {
    for fam in families() {
        for v in [1e2, 1e4] {
            let m = ExcessModel::new(&fam, v, Recenter::Off).unwrap();
            let back = ExcessModel::at_threshold(&fam, m.t, Recenter::Off).unwrap();
            // x* - t cancels digits near a nonzero x*
            assert_relative_eq!(back.v, v, max_relative = 1e-6);
        }
    }
}

#[test]
fn density_at_zero_is_one() {
    let g = Family::gumbel();
    let t = -(-(1.0 - (-1f64).exp()).ln()).ln();
    let m = ExcessModel::at_threshold(&g, t, Recenter::Auto).unwrap();
    assert_relative_eq!(m.v, std::f64::consts::E, max_relative = 1e-14);
    assert_relative_eq!(m.pdf(0.0), 1.0, max_relative = 1e-14);
    assert_eq!(m.pdf(-0.1), 0.0);
    for gamma in [-1.5, 0.0, 0.5] {
        let m = ExcessModel::new(&Family::exact_gp(gamma).unwrap(), 50.0, Recenter::Auto).unwrap();
        assert_relative_eq!(m.pdf(1e-300), 1.0, max_relative = 1e-12);
    }
}

#[test]
fn excess_density_is_normalised() {
    for fam in families() {
        for e in 2..=6 {
            let v = 10f64.powi(e);
            for rc in [Recenter::Off, Recenter::On] {
                let m = ExcessModel::new(&fam, v, rc).unwrap();
                let mass = total_mass(&m);
                assert!((mass - 1.0).abs() <= 1e-9, "{fam} v={v} {rc}: {mass}");
                assert_relative_eq!(m.mass(0.0, f64::INFINITY), 1.0, epsilon = 1e-12);
            }
        }
    }
}

#[test]
fn exact_gp_excess_is_the_limit() {
    for gamma in [-1.5, -1.0, -0.5, 0.0, 0.5, 1.0] {
        let fam = Family::exact_gp(gamma).unwrap();
        let h = GpModel::standard(gamma);
        for v in [1e2, 1e4, 1e6] {
            let m = ExcessModel::new(&fam, v, Recenter::Auto).unwrap();
            assert_relative_eq!(m.endpoint, h.upper(), max_relative = 1e-12);
            let hi = if h.upper().is_finite() { h.upper() } else { 50.0 };
            for i in 1..200 {
                let x = hi * i as f64 / 200.0;
                let d = (m.pdf(x) - h.pdf(x)).abs();
                assert!(d <= 1e-12 * h.pdf(x).max(1.0), "gamma={gamma} v={v} x={x}: {d}");
            }
        }
    }
}

#[test]
fn excess_converges_pointwise() {
    for fam in families().into_iter().filter(|f| !f.degenerate_rate()) {
        let h = GpModel::standard(fam.gamma());
        let hi = if h.upper().is_finite() { h.upper() } else { 10.0 };
        for i in 1..10 {
            let x = hi * i as f64 / 10.0;
            let mut prev = f64::INFINITY;
            for e in 3..=6 {
                let m = ExcessModel::new(&fam, 10f64.powi(e), Recenter::Auto).unwrap();
                let d = (m.pdf(x) - h.pdf(x)).abs();
                assert!(d <= prev + 1e-9, "{fam} x={x} v=1e{e}: {d} > {prev}");
                prev = d;
            }
        }
    }
}

#[test]
fn endpoint_converges_at_rate_a() {
    for fam in [
        Family::reversed_burr(1.0, 1.0, 0.0).unwrap(),
        Family::reversed_burr(1.0, 4.0, 0.0).unwrap(),
        Family::reversed_burr(2.0, 0.5, 1.0).unwrap(),
    ] {
        let target = -1.0 / fam.gamma();
        let ratios: Vec<f64> = [1e3, 1e4, 1e5, 1e6]
            .iter()
            .map(|&v| {
                let m = ExcessModel::new(&fam, v, Recenter::Off).unwrap();
                (m.endpoint - target).abs() / m.abs_rate().unwrap()
            })
            .collect();
        for w in ratios.windows(2) {
            assert!((w[1] / w[0] - 1.0).abs() < 0.1, "{fam}: {ratios:?}");
        }
    }
}

#[test]
fn mu_over_rate_converges() {
    for fam in [
        Family::reversed_burr(1.0, 1.0, 0.0).unwrap(),
        Family::reversed_burr(1.0, 4.0, 0.0).unwrap(),
    ] {
        let ratio = |v: f64| {
            let m = ExcessModel::new(&fam, v, Recenter::On).unwrap();
            m.mu_t / m.abs_rate().unwrap()
        };
        let (r5, r6) = (ratio(1e5), ratio(1e6));
        assert!((r6 / r5 - 1.0).abs() <= 0.1, "{fam}: {r5} {r6}");
    }
}

#[test]
fn eta_examples() {
    let b = Family::burr(2.0, 1.0).unwrap();
    assert_relative_eq!(eta_diag(&b, 10.0).unwrap(), 19.0 / 101.0, epsilon = 1e-12);
    assert!(eta_diag(&b, 1e4).unwrap().abs() <= 2.1e-4);
    let gp = Family::exact_gp(0.5).unwrap();
    for t in [0.5, 3.0, 100.0] {
        assert!(eta_diag(&gp, t).unwrap().abs() <= 1e-13);
    }
    assert!(matches!(eta_diag(&Family::gumbel(), 1.0), Err(Error::GammaZero)));
    let gpn = Family::exact_gp(-0.5).unwrap();
    // for the GP itself eta~(y) = -1/(gamma y)
    assert_relative_eq!(eta_diag(&gpn, 1.5).unwrap(), 1.0, max_relative = 1e-13);
    assert_relative_eq!(eta_tilde(&gpn, 40.0).unwrap(), 0.05, max_relative = 1e-13);
    let rb = Family::reversed_burr(1.0, 1.0, 0.0).unwrap();
    assert!(eta_diag(&rb, -1e-3).unwrap().abs() < 1e-2);
}

#[test]
fn ratio_sup_examples() {
    let gp = Family::exact_gp(0.5).unwrap();
    for v in [10.0, 1e4] {
        let m = ExcessModel::new(&gp, v, Recenter::Auto).unwrap();
        assert_relative_eq!(density_ratio_sup(&m), 1.0, epsilon = 1e-9);
    }
    let g = ExcessModel::at_threshold(&Family::gumbel(), 2.0, Recenter::Auto).unwrap();
    let m = density_ratio_sup(&g);
    assert!(m >= 1.0 && m <= (-2f64).exp().exp(), "{m}");

    let b = ExcessModel::new(&Family::burr(2.0, 1.0).unwrap(), 1e4, Recenter::Auto).unwrap();
    let m = density_ratio_sup(&b);
    assert!(m.is_finite() && m > 1.0);

    let rb = ExcessModel::new(&Family::reversed_burr(1.0, 1.0, 0.0).unwrap(), 1e3, Recenter::On).unwrap();
    let m = density_ratio_sup(&rb);
    assert!(m.is_finite() && m > 1.0 && m < 1.1, "{m}");
}
