use conekernel::cone::{eigen_nu, ConeParams, ConePoint};
use conekernel::propagator::{mode_kernel, mode_kernel_extrapolated, KernelOptions};
use conekernel::quadrature::{gauss_legendre, geometric_schedule, QuadratureSpec};
use conekernel::specfun::{bessel_i_scaled_integral, bessel_i_series, SpecFunAccuracy};
use conekernel::spectral::{resolvent_kernel_complex, spectral_measure_closed, SpectralNormalization};
use num_complex::Complex64;

/// `e^{-z} I_nu(z)` at 30 digits.
const SCALED_I: [(f64, f64, f64, f64, f64); 5] = [
    (0.5, 3.0, 1.0, 0.221_754_330_454_886_93, -0.035_473_510_271_752_17),
    (1.3, 12.0, -5.0, 0.103_376_377_794_914_18, 0.018_219_734_713_259_83),
    (2.7, 0.4, 2.5, 0.021_545_688_746_414_743, 0.196_670_146_108_897_5),
    (0.25, 40.0, 30.0, 0.053_583_878_001_911_58, -0.017_929_392_106_360_815),
    (3.5, 7.0, 0.0, 0.061_105_977_067_940_41, 0.0),
];

#[test]
fn integral_representation_matches_reference() {
    let acc = SpecFunAccuracy::default();
    for (nu, re, im, want_re, want_im) in SCALED_I {
        let got = bessel_i_scaled_integral(nu, Complex64::new(re, im), &acc).unwrap();
        let want = Complex64::new(want_re, want_im);
        assert!(
            (got - want).norm() <= 1e-11 * want.norm(),
            "nu {nu}, z {re}+{im}i: {got} vs {want}"
        );
    }
}

#[test]
fn integral_representation_matches_series_at_moderate_argument() {
    let acc = SpecFunAccuracy::default();
    for nu in [0.1, 0.5, 0.9, 1.7, 4.2] {
        for (re, im) in [(0.3, 0.0), (1.0, 2.0), (2.5, -1.5), (0.05, 4.0)] {
            let z = Complex64::new(re, im);
            let a = bessel_i_scaled_integral(nu, z, &acc).unwrap();
            let b = (-z).exp() * bessel_i_series(nu, z, &acc).unwrap();
            assert!((a - b).norm() <= 1e-11 * (1.0 + b.norm()), "nu {nu}, z {z}: {a} vs {b}");
        }
    }
}

#[test]
fn disjoint_epsilon_schedules_agree() {
    let acc = SpecFunAccuracy {
        abs_tol: 1e-14,
        rel_tol: 1e-13,
        ..SpecFunAccuracy::default()
    };
    let spec = |eps0: f64| QuadratureSpec {
        epsilon_schedule: geometric_schedule(eps0, 8),
        extrapolation_order: 6,
        ..QuadratureSpec::default()
    };
    let (a, b) = (spec(0.1), spec(0.075));
    assert!(a.epsilon_schedule.iter().all(|e| !b.epsilon_schedule.contains(e)));
    for (nu, t, r, rp) in [(0.3, 1.0, 1.0, 1.5), (1.5, -0.7, 0.4, 2.0), (2.25, 2.0, 2.5, 1.2)] {
        let ka = mode_kernel_extrapolated(nu, t, r, rp, &a, &acc).unwrap().value;
        let kb = mode_kernel_extrapolated(nu, t, r, rp, &b, &acc).unwrap().value;
        let exact = mode_kernel(nu, t, r, rp, &acc).unwrap();
        let scale = exact.norm().max(1e-3);
        assert!((ka - kb).norm() <= 1e-7 * scale, "nu {nu}: {ka} vs {kb}");
        assert!((ka - exact).norm() <= 1e-7 * scale, "nu {nu}: {ka} vs {exact}");
    }
}

#[test]
fn resolvent_difference_is_the_density_transform() {
    let p = ConeParams::new(1.0, 0.3).unwrap();
    assert!((eigen_nu(&p, 0) - 0.3).abs() < 1e-15);
    let x = ConePoint::new(&p, 1.0, 0.3).unwrap();
    let y = ConePoint::new(&p, 1.5, 2.0).unwrap();
    let opts = KernelOptions::default();
    let (z1, z2) = (Complex64::new(1.0, 1.0), Complex64::new(3.0, 2.0));
    let lhs = resolvent_kernel_complex(&p, z1, &x, &y, &opts).unwrap()
        - resolvent_kernel_complex(&p, z2, &x, &y, &opts).unwrap();

    let (nodes, weights) = gauss_legendre(16);
    let (width, lambda_max) = (0.5, 200.0);
    let mut integral = Complex64::new(0.0, 0.0);
    let mut a = 0.0;
    while a < lambda_max {
        for (s, w) in nodes.iter().zip(&weights) {
            let lambda = a + 0.5 * width * (s + 1.0);
            let d = spectral_measure_closed(&p, lambda, &x, &y, &opts, SpectralNormalization::Derived)
                .unwrap()
                .density;
            let l2 = lambda * lambda;
            integral += 0.5 * width * w * d / ((l2 - z1) * (l2 - z2));
        }
        a += width;
    }
    let rhs = (z1 - z2) * integral;
    assert!((lhs - rhs).norm() <= 1e-5, "{lhs} vs {rhs}");
}
