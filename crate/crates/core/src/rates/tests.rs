use approx::assert_relative_eq;

use super::*;

fn default_grid() -> Vec<f64> {
    VGrid::default().values()
}

fn run(spec: &str, recenter: Recenter, metrics: &str) -> SweepResult {
    sweep(
        &Family::parse(spec).unwrap(),
        &default_grid(),
        recenter,
        &MetricSet::parse(metrics).unwrap(),
        &QuadOptions::default(),
    )
    .unwrap()
}

#[test]
fn grid_spec_parses() {
    let g: VGrid = "1e2:1e6:log:9".parse().unwrap();
    let v = g.values();
    assert_eq!(v.len(), 9);
    assert_eq!(v[0], 100.0);
    assert_eq!(v[8], 1e6);
    assert_relative_eq!(v[2], 1e3, max_relative = 1e-12);
    let lin: VGrid = "2:10:lin:5".parse().unwrap();
    assert_eq!(lin.values(), vec![2.0, 4.0, 6.0, 8.0, 10.0]);
    for bad in ["1e2:1e6:log", "1:10:log:5", "10:2:log:5", "2:10:geo:5", "2:10:log:x", "2:10:log:1"] {
        assert!(bad.parse::<VGrid>().is_err(), "{bad}");
    }
}

#[test]
fn ols_recovers_a_line() {
    let x = [0.0, 1.0, 2.0, 3.0];
    let y: Vec<f64> = x.iter().map(|a| 2.5 * a - 1.0).collect();
    let f = ols(&x, &y).unwrap();
    assert_relative_eq!(f.slope, 2.5, epsilon = 1e-12);
    assert_relative_eq!(f.intercept, -1.0, epsilon = 1e-12);
    assert_relative_eq!(f.r_squared, 1.0, epsilon = 1e-12);
    assert!(ols(&x[..2], &y[..2]).is_none());
}

#[test]
fn exact_gp_sweeps_are_rejected() {
    let err = sweep(
        &Family::exact_gp(0.5).unwrap(),
        &default_grid(),
        Recenter::Auto,
        &MetricSet::default(),
        &QuadOptions::default(),
    )
    .unwrap_err();
    assert!(matches!(err, Error::DegenerateRate(_)));
}

#[test]
fn short_or_unsorted_grids_are_rejected() {
    let fam = Family::burr(2.0, 1.0).unwrap();
    let m = MetricSet::default();
    let o = QuadOptions::default();
    assert!(sweep(&fam, &[1e2, 1e3, 1e4], Recenter::Auto, &m, &o).is_err());
    assert!(sweep(&fam, &[1e2, 1e3, 1e3, 1e4, 1e5], Recenter::Auto, &m, &o).is_err());
}

#[test]
fn failing_quadrature_fails_the_sweep() {
    let opts = QuadOptions {
        rel_tol: 1e-30,
        abs_tol: 0.0,
        max_levels: 3,
    };
    let err = sweep(
        &Family::burr(2.0, 1.0).unwrap(),
        &default_grid(),
        Recenter::Auto,
        &MetricSet::parse("h2").unwrap(),
        &opts,
    )
    .unwrap_err();
    assert!(matches!(err, Error::SweepFailed { failed: 9, total: 9 }));
}

#[test]
fn burr_sweep_has_unit_slope_and_passes_checks() {
    let sr = run("burr:c=2,k=1", Recenter::Auto, "h2,tv,kl,d2,d3");
    let f = sr.fitted["h"];
    assert!((f.slope - 1.0).abs() <= 0.1, "{f:?}");
    assert!(f.r_squared >= 0.999);
    for v in &sr.verdicts {
        assert!(v.passed(), "{v:?}");
    }
    for m in ["h2", "tv", "kl", "d2", "d3"] {
        assert!(sr.monotone(m, 1e3, 1e-9), "{m}");
    }
    let dropped = sr.without_first();
    for m in ["h", "tv", "kl"] {
        assert!((dropped.fitted[m].slope - sr.fitted[m].slope).abs() < 0.05, "{m}");
    }
}

#[test]
fn recentering_improves_reversed_burr() {
    let off = run("revburr:c=1,k=1,xstar=0", Recenter::Off, "h2,tv");
    let on = run("revburr:c=1,k=1,xstar=0", Recenter::On, "h2,tv");
    assert!((off.fitted["h"].slope - 0.5).abs() <= 0.1, "{:?}", off.fitted["h"]);
    assert!((on.fitted["h"].slope - 1.0).abs() <= 0.1, "{:?}", on.fitted["h"]);
    for (a, b) in off.grid.iter().zip(&on.grid).filter(|(a, _)| a.v >= 1e3) {
        assert!(b.metric("h").unwrap() < a.metric("h").unwrap(), "v={}", a.v);
    }
    assert_eq!(check_theorem1(&off).status, VerdictStatus::NotApplicable);
    assert!(check_theorem1(&on).passed());
    assert!(check_sandwich(&off).passed());
}

#[test]
fn theorem1_rejects_unbounded_ratio() {
    let mut sr = run("burr:c=2,k=1", Recenter::Auto, "h2");
    assert!(check_theorem1(&sr).passed());
    for p in &mut sr.grid {
        let r = p.report.as_mut().unwrap();
        r.hellinger_sq = Some(p.abs_a);
        r.hellinger = Some(p.abs_a.sqrt());
    }
    assert_eq!(check_theorem1(&sr).status, VerdictStatus::Fail);
}

#[test]
fn prop1_exponents() {
    let opts = QuadOptions::default();
    for (spec, lo, hi) in [("revburr:c=1,k=1", 0.4, 0.6), ("revburr:c=1,k=4", 0.9, 2.1)] {
        let fam = Family::parse(spec).unwrap();
        let pairs: Vec<(f64, f64)> = default_grid()
            .into_iter()
            .map(|v| {
                let m = ExcessModel::new(&fam, v, Recenter::On).unwrap();
                (m.mu_t, m.abs_rate().unwrap())
            })
            .collect();
        let verdict = check_prop1(fam.gamma(), &pairs, &opts).unwrap();
        assert!(verdict.passed(), "{spec}: {verdict:?}");
        let slope: f64 = verdict.details.split_whitespace().nth(1).unwrap().parse().unwrap();
        assert!(slope >= lo && slope <= hi, "{spec}: {slope}");
    }
    let zero = check_prop1(-1.0, &[(0.0, 0.1), (0.0, 0.01), (0.0, 0.001)], &opts).unwrap();
    assert_eq!(zero.status, VerdictStatus::NotApplicable);
}

#[test]
fn shift_hellinger_uniform_closed_form() {
    let m: f64 = 0.04;
    let h = shift_hellinger(-1.0, -m, &QuadOptions::default()).unwrap();
    assert_relative_eq!(h * h, 2.0 - 2.0 * (1.0 - m).sqrt(), max_relative = 1e-10);
}
