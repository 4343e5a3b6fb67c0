//! The generic truncation operator against the fifteen transcribed rules.

use linexsel::improvement::{base_phi_of, improve, named_case_rule, ImprovedCase, Truncation};
use linexsel::oracles::phi_bounds;
use linexsel::{select, BaseEstimator, CovarianceSpec, LinexParams, ObservationPair, Pair, SelectionSummary};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Draw {
    s: SelectionSummary,
    a: LinexParams,
    cov: CovarianceSpec,
    c: f64,
}

fn summary(x_max: f64, y_sel: f64, t1: f64, t2: f64) -> SelectionSummary {
    select(&ObservationPair::new(Pair::new(x_max, y_sel), Pair::new(x_max + t1, y_sel + t2)).unwrap())
}

fn sign_of(rng: &mut ChaCha8Rng, sign: i8, allow_unit: bool) -> f64 {
    match sign {
        0 => 0.0,
        _ => {
            let m = if allow_unit && rng.random_bool(0.1) { 1.0 } else { rng.random_range(0.02..0.98) };
            m * sign as f64
        }
    }
}

/// A random point with `a` and `rho` of the given signs.
fn draw(rng: &mut ChaCha8Rng, a_sign: i8, rho_sign: i8) -> Draw {
    let sxx = rng.random_range(0.3..5.0);
    let syy = rng.random_range(0.3..5.0);
    let rho = sign_of(rng, rho_sign, true);
    let a = sign_of(rng, a_sign, false) * 3.0;
    let cov = CovarianceSpec::from_correlation(sxx, syy, rho).unwrap();
    let a = LinexParams::new(a).unwrap();
    let h = (a.a() * syy / 2.0).abs() * 2.0 + 3.0 * syy.sqrt();
    // t1 strictly negative so the pair is not a tie
    let t1 = -rng.random_range(1e-6..4.0 * sxx.sqrt());
    let t2 = rng.random_range(-h..h);
    let s = summary(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), t1, t2);
    Draw { s, a, cov, c: rng.random_range(0.1..2.0) }
}

/// Signs of `(a, rho)` covered by a case.
fn regions(case: ImprovedCase) -> &'static [(i8, i8)] {
    match case.id() {
        1 | 7 | 11 => &[(1, 1)],
        2 | 14 => &[(-1, -1)],
        3 => &[(1, -1), (-1, 1)],
        4 | 15 => &[(-1, 0)],
        5 | 12 => &[(1, -1)],
        6 => &[(1, 1), (-1, -1)],
        8 | 13 => &[(-1, 1)],
        9 => &[(1, -1), (-1, -1)],
        10 => &[(1, 0), (-1, 0)],
        _ => unreachable!(),
    }
}

/// Smallest relative distance to any threshold the rules compare against.
fn boundary_margin(d: &Draw) -> f64 {
    let (s, cov, a) = (&d.s, &d.cov, d.a.a());
    let (rho, xi, syy) = (cov.rho(), cov.xi(), cov.sigma_yy());
    let b = xi * rho * s.t1 - a * syy / 2.0 * (1.0 - rho * rho);
    let h = a * syy / 2.0;
    let cut = -d.c * (2.0 * cov.sigma_xx()).sqrt();
    let phi3 = base_phi_of(BaseEstimator::N3, s, d.a, cov);
    let v = 0.5 * s.t2 - a * syy / 4.0;
    let scale = 1.0 + s.t1.abs() + s.t2.abs() + h.abs();
    [
        s.t1 * xi - rho * s.t2,
        s.t2 - b,
        s.t2 - h,
        s.t2 + h,
        s.t1 - cut,
        phi3 - v,
    ]
    .iter()
    .map(|m| m.abs() / scale)
    .fold(f64::INFINITY, f64::min)
}

#[test]
fn generic_clip_reproduces_every_named_case() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in ImprovedCase::ALL {
        let (mut boundary, mut clipped, mut total) = (0, 0, 0);
        for &(sa, sr) in regions(case) {
            for _ in 0..1000 {
                let d = draw(&mut rng, sa, sr);
                assert!(case.contains(d.a, d.cov.rho()));
                let named = named_case_rule(case, &d.s, d.a, &d.cov, d.c).unwrap();
                let o = improve(case.base(d.c), &d.s, d.a, &d.cov);
                total += 1;
                if o.truncated != Truncation::None {
                    clipped += 1;
                }
                if (named - o.value).abs() > 1e-9 * (1.0 + named.abs()) {
                    let m = boundary_margin(&d);
                    assert!(m < 1e-9, "case {} disagrees off the boundary: named {named}, generic {o:?}, margin {m}", case.id());
                    boundary += 1;
                }
            }
        }
        println!("{}: {total} points, {clipped} clipped, {boundary} boundary disagreements", case.label());
        assert!(clipped > 0, "case {} never truncates", case.id());
    }
}

#[test]
fn no_improvement_regions_never_truncate() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let checks: [(BaseEstimator, &[(i8, i8)]); 4] = [
        (BaseEstimator::N1, &[(1, 0)]),
        (BaseEstimator::N2, &[(-1, 1)]),
        (BaseEstimator::N2, &[(1, 0), (-1, 0)]),
        (BaseEstimator::N4 { c: 1.0 }, &[(1, 0)]),
    ];
    for (base, signs) in checks {
        for &(sa, sr) in signs {
            for _ in 0..100_000 {
                let d = draw(&mut rng, sa, sr);
                let base = match base {
                    BaseEstimator::N4 { .. } => BaseEstimator::N4 { c: d.c },
                    b => b,
                };
                let o = improve(base, &d.s, d.a, &d.cov);
                assert_eq!(o.truncated, Truncation::None, "{base} a={} rho={} {:?}", d.a.a(), d.cov.rho(), d.s);
            }
        }
    }
}

proptest! {
    #[test]
    fn clip_stays_in_band(t1 in -6.0..-1e-9f64, t2 in -10.0..10.0f64, av in -3.0..3.0f64, rho in -1.0..=1.0f64,
                          sxx in 0.3..4.0f64, syy in 0.3..4.0f64, which in 0usize..4) {
        prop_assume!(av.abs() > 0.05);
        let a = LinexParams::new(av).unwrap();
        let cov = CovarianceSpec::from_correlation(sxx, syy, rho).unwrap();
        let s = summary(0.5, 1.5, t1, t2);
        let base = [BaseEstimator::N1, BaseEstimator::N2, BaseEstimator::N3, BaseEstimator::N4 { c: 1.0 }][which];
        let o = improve(base, &s, a, &cov);
        let (lo, hi) = phi_bounds(s.t1, s.t2, a, &cov);
        let phi_star = o.value - s.y_sel;
        let tol = 1e-9 * (1.0 + o.value.abs());
        prop_assert!(phi_star >= lo - tol && phi_star <= hi + tol);
        match o.truncated {
            Truncation::None => {
                let base_value = linexsel::evaluate(&base.into(), &s, a, &cov).unwrap();
                prop_assert_eq!(o.value, base_value);
            }
            Truncation::ClippedToPhiInf => prop_assert!(o.base_phi <= lo && (phi_star - lo).abs() <= tol),
            Truncation::ClippedToPhiSup => prop_assert!(o.base_phi >= hi && (phi_star - hi).abs() <= tol),
        }
    }
}
