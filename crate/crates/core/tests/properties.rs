mod common;

use common::random_group_element;
use cr3::hermitian::*;
use cr3::isoparametric::*;
use cr3::knots::gauss_linking;
use cr3::curves::SampledCurve;
use cr3::sphere::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cvec() -> impl Strategy<Value = PseudoVector> {
    prop::array::uniform6(-3.0f64..3.0).prop_map(|a| {
        PseudoVector::new(c(a[0], a[1]), c(a[2], a[3]), c(a[4], a[5]))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn group_preserves_the_form(seed in any::<u64>(), z in cvec(), w in cvec()) {
        let a = random_group_element(&mut ChaCha8Rng::seed_from_u64(seed), 0.8);
        prop_assert!(is_group_element(&a, 1e-10));
        let before = herm_product(&z, &w);
        let after = herm_product(&(a * z), &(a * w));
        prop_assert!((before - after).norm() <= 1e-9 * (1.0 + z.norm() * w.norm()));
        prop_assert!(max_abs(&(group_inverse(&a) * a - PseudoMatrix::identity())) < 1e-9);
    }

    #[test]
    fn exponential_is_a_one_parameter_group(kappa in -1.5f64..1.5, tau in -4.0f64..4.0, s in -10.0f64..10.0, t in -10.0f64..10.0) {
        let k = frame_generator(kappa, tau);
        let lhs = one_parameter_exp(&k, s + t).unwrap();
        let (es, et) = (one_parameter_exp(&k, s).unwrap(), one_parameter_exp(&k, t).unwrap());
        let rhs = es * et;
        // the product cancels when s and t have opposite signs
        let scale = max_abs(&es) * max_abs(&et);
        prop_assert!(max_abs(&(lhs - rhs)) <= 1e-11 * scale.max(1.0), "{} vs {}", max_abs(&(lhs - rhs)), scale);
    }

    #[test]
    fn cubic_roots_and_discriminant(kappa in -2.0f64..2.0, tau in -6.0f64..2.0) {
        let roots = solve_characteristic_cubic(kappa, tau);
        let d = discriminant(kappa, tau);
        if d > 1e-6 {
            let e = &roots.roots;
            prop_assert_eq!(e.len(), 3);
            prop_assert!((e[0] + e[1] + e[2]).abs() <= 1e-12);
            prop_assert!(e[0] < e[1] && e[1] < e[2]);
            let prod = ((e[0] - e[1]) * (e[0] - e[2]) * (e[1] - e[2])).powi(2);
            prop_assert!((prod - d).abs() <= 1e-8 * d.abs());
        }
    }

    #[test]
    fn chart_projection_round_trip(x in -10.0f64..10.0, y in -10.0f64..10.0, z in -10.0f64..10.0) {
        let p = HeisenbergPoint::new(x, y, z);
        let q = heisenberg_projection(&heisenberg_chart(&p)).unwrap();
        prop_assert!(p.distance(&q) <= 1e-12 * (1.0 + x * x + y * y + z.abs()));
    }

    #[test]
    fn torus_rotation_moves_along_cyclides(rho in 0.05f64..1.4, t1 in -3.0f64..3.0, t2 in -3.0f64..3.0, p1 in -3.0f64..3.0, p2 in -3.0f64..3.0) {
        let base = cyclide_point(rho, CliffordAngles::new(t1, t2)).unwrap();
        let moved = torus_rotation(CliffordAngles::new(p1, p2)) * heisenberg_chart(&base).representative();
        let target = cyclide_point(rho, CliffordAngles::new(t1 + p1, t2 + p2)).unwrap();
        let got = project(&moved).unwrap();
        prop_assert!(got.distance(&target) <= 1e-9 * (1.0 + target.to_array().iter().map(|v| v.abs()).sum::<f64>()));
    }

    #[test]
    fn ratio_parsing_round_trips(m in -50i64..50, n in 1i64..50) {
        let r = RationalRatio::new(m, n).unwrap();
        let back: RationalRatio = r.to_string().parse().unwrap();
        prop_assert_eq!(back, r);
        prop_assert!((r.value() - m as f64 / n as f64).abs() < 1e-15);
    }

    #[test]
    fn second_kind_integer_invariants(n in 2i64..40, m_frac in 0.0f64..1.0) {
        // r = m/n with -2 < r < -1/2
        let lo = -2 * n + 1;
        let hi = -(n / 2) - 1;
        prop_assume!(lo <= hi);
        let m = lo + ((hi - lo) as f64 * m_frac).round() as i64;
        let r = RationalRatio::new(m, n).unwrap();
        prop_assume!(r.in_spectral_range());
        let (p, q) = knot_type(Kind::Second, r);
        prop_assert!(p > 0 && q > 0);
        prop_assert_eq!(num_integer::Integer::gcd(&p, &q), 1);
        prop_assert_eq!(maslov_closed(Kind::Second, r), p + q);
        let (spin, anomaly) = spin_anomaly(r);
        prop_assert_eq!(spin == Spin::One, anomaly == Anomaly::Zero);
    }
}

#[test]
fn causal_pattern_on_both_half_lines() {
    // (κ, 0) with κ > 1/√2 lies in the first-class component
    for k in 0..25 {
        let kappa = std::f64::consts::FRAC_1_SQRT_2 + 0.01 + 0.1 * k as f64;
        let a = analyze(kappa, 0.0);
        assert!(a.discriminant > 0.0);
        assert_eq!(a.class, ClosureClass::FirstClass);
        let signs: Vec<bool> = a.eigenvalues.iter().map(|&e| eigenvector_square(kappa, e) > 0.0).collect();
        assert_eq!(signs, vec![true, false, true], "kappa {kappa}");
        assert_eq!(
            a.characters,
            vec![CausalCharacter::Spacelike, CausalCharacter::Timelike, CausalCharacter::Spacelike]
        );
    }
    // (0, τ): D > 0 needs τ < −(27/4)^{1/3}
    let edge = -(27.0f64 / 4.0).cbrt();
    for k in 0..25 {
        let tau = edge - 0.01 - 0.2 * k as f64;
        let a = analyze(0.0, tau);
        assert!(a.discriminant > 0.0);
        assert_eq!(a.class, ClosureClass::SecondClass);
        assert_eq!(
            a.characters,
            vec![CausalCharacter::Spacelike, CausalCharacter::Spacelike, CausalCharacter::Timelike]
        );
    }
    assert!(discriminant(0.0, edge + 0.01) < 0.0);
}

fn circle(center: [f64; 3], u: [f64; 3], v: [f64; 3], r: f64, n: usize) -> SampledCurve {
    let pts = (0..n)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            let (s, co) = t.sin_cos();
            HeisenbergPoint::new(
                center[0] + r * (co * u[0] + s * v[0]),
                center[1] + r * (co * u[1] + s * v[1]),
                center[2] + r * (co * u[2] + s * v[2]),
            )
        })
        .collect();
    SampledCurve::periodic_heisenberg(pts, 2.0 * std::f64::consts::PI)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn linking_is_symmetric_and_stable_under_refinement(shift in -0.4f64..0.4, tilt in -0.3f64..0.3, r in 0.6f64..1.4) {
        let a = circle([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 1.0, 256);
        let b = circle([1.0 + shift, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, tilt.sin(), tilt.cos()], r, 256);
        let ab = gauss_linking(&a, &b, 256).unwrap();
        let ba = gauss_linking(&b, &a, 256).unwrap();
        prop_assert!((ab.raw_integral - ba.raw_integral).abs() <= 1e-8);
        prop_assert_eq!(ab.rounded.abs(), 1);
        let fine = gauss_linking(&a, &b, 512).unwrap();
        prop_assert_eq!(fine.rounded, ab.rounded);
        prop_assert!(fine.residual <= ab.residual + 1e-9);
    }
}
