mod common;

use common::{first_difference, second_difference};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use yamabe_core::functional::{
    aubin_constant, eh_energy, expansion_coefficient, minimize_quotient, perturbation_energy, MinimizeOptions,
    ProductSpace, TrialSpace,
};
use yamabe_core::product::ProductFamily;
use yamabe_core::ExecPolicy;

fn space(k: usize, l: usize, t: f64, l_max: u32, trial: TrialSpace) -> ProductSpace {
    let fam = ProductFamily::sphere_product(k, l, t).unwrap();
    ProductSpace::new(fam, l_max, 4 * l_max as usize, trial, ExecPolicy::Sequential).unwrap()
}

fn random_positive<R: Rng>(rng: &mut R, sp: &ProductSpace, amp: f64) -> Vec<f64> {
    let mut c = sp.constant();
    for v in c.iter_mut().skip(1) {
        *v = amp * rng.random_range(-1.0..1.0);
    }
    c
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for (k, l, t, trial) in
        [(2, 2, 2.5, TrialSpace::Zonal), (2, 2, 1.5, TrialSpace::Full), (3, 2, 1.7, TrialSpace::Zonal)]
    {
        let sp = space(k, l, t, 2, trial);
        let c = random_positive(&mut rng, &sp, 0.05);
        let (_, grad) = sp.quotient_and_gradient(&c).unwrap();
        for _ in 0..20 {
            let d: Vec<f64> = (0..sp.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            let d: Vec<f64> = d.iter().map(|v| v / norm).collect();
            let q = |h: f64| {
                let p: Vec<f64> = c.iter().zip(&d).map(|(a, b)| a + h * b).collect();
                sp.evaluate(&p, false).unwrap().quotient
            };
            let fd = first_difference(q, 1e-5);
            let an: f64 = grad.iter().zip(&d).map(|(g, v)| g * v).sum();
            assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0), "k={k}: fd {fd} an {an}");
        }
    }
}

#[test]
fn second_variation_matches_finite_differences() {
    for t in [1.0, 1.5, 2.0, 2.5] {
        let sp = space(2, 2, t, 1, TrialSpace::Zonal);
        let f = sp.sphere_coordinate(0).unwrap();
        let coef = expansion_coefficient(&sp, &f).unwrap();
        let fd = second_difference(|tau| perturbation_energy(&sp, &f, tau).unwrap(), 1e-3);
        let scale = sp.family().scalar_curvature() * sp.volume().sqrt();
        if t == 2.0 {
            assert_eq!(coef, 0.0);
            assert!(fd.abs() <= 1e-6 * scale, "{fd}");
        } else {
            assert!((fd - 2.0 * coef).abs() <= 1e-4 * (2.0 * coef).abs(), "t={t}: {fd} vs {}", 2.0 * coef);
        }
        assert_eq!(fd > 1e-6 * scale, t < 2.0);
        assert_eq!(fd < -1e-6 * scale, t > 2.0);
    }
}

#[test]
fn quartic_term_at_the_critical_parameter() {
    // at t = 2, ℰ(1 + τ x¹) = 6√V (1 + 0.4 τ⁴ + O(τ⁶)); fourth difference gives 24 · 0.4 · 6√V
    let sp = space(2, 2, 2.0, 1, TrialSpace::Zonal);
    let f = sp.sphere_coordinate(0).unwrap();
    let e = |tau: f64| perturbation_energy(&sp, &f, tau).unwrap();
    let h = 0.02;
    let d4 = (e(2.0 * h) - 4.0 * e(h) + 6.0 * e(0.0) - 4.0 * e(-h) + e(-2.0 * h)) / h.powi(4);
    let want = 24.0 * 0.4 * eh_energy(sp.family());
    assert!((d4 - want).abs() <= 2e-2 * want, "{d4} vs {want}");
}

#[test]
fn minimizer_respects_bounds_and_is_monotone() {
    let sp = space(2, 2, 2.5, 3, TrialSpace::Zonal);
    let res = minimize_quotient(&sp, &MinimizeOptions { restarts: 4, ..Default::default() }).unwrap();
    let aubin = aubin_constant(4).unwrap();
    assert!(res.estimate <= aubin * (1.0 + 1e-8));
    assert!(res.estimate < res.energy);
    for r in 0..4 {
        let rows: Vec<_> = res.trace.iter().filter(|row| row.restart == r).collect();
        assert!(rows.windows(2).all(|w| w[1].quotient <= w[0].quotient));
    }
}

#[test]
fn five_dimensional_products_are_supported() {
    // p = 10/3 is not an integer; quadrature is then approximate, the
    // constant factor still reproduces ℰ exactly
    let sp = space(3, 2, 1.2, 2, TrialSpace::Zonal);
    let u = sp.conformal_factor(sp.constant()).unwrap();
    let q = sp.yamabe_quotient(&u).unwrap();
    assert!((q / eh_energy(sp.family()) - 1.0).abs() <= 1e-12);
}

#[test]
fn parallel_and_sequential_agree_bitwise() {
    let sp = space(2, 2, 2.5, 3, TrialSpace::Full);
    let par = sp.clone().with_exec(ExecPolicy::Parallel);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let c = random_positive(&mut rng, &sp, 0.02);
    let a = sp.evaluate(&c, true).unwrap();
    let b = par.evaluate(&c, true).unwrap();
    assert_eq!(a.quotient.to_bits(), b.quotient.to_bits());
    assert_eq!(a.gradient, b.gradient);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn quotient_is_scale_invariant(seed in any::<u64>(), scale in 1e-3f64..1e3, t in 1.0f64..3.0) {
        let sp = space(2, 2, t, 2, TrialSpace::Zonal);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_positive(&mut rng, &sp, 0.02);
        let scaled: Vec<f64> = c.iter().map(|v| v * scale).collect();
        let a = sp.yamabe_quotient(&sp.conformal_factor(c).unwrap()).unwrap();
        let b = sp.yamabe_quotient(&sp.conformal_factor(scaled).unwrap()).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a);
    }

    #[test]
    fn constant_factor_reproduces_energy(t in 1.0f64..4.0, k in 2usize..=3, l in 2usize..=3) {
        let sp = space(k, l, t, 1, TrialSpace::Zonal);
        let q = sp.yamabe_quotient(&sp.conformal_factor(sp.constant()).unwrap()).unwrap();
        prop_assert!((q / eh_energy(sp.family()) - 1.0).abs() <= 1e-12);
    }
}
