use approx::assert_relative_eq;
use polarization::bang::{bang_signs_exhaustive, bang_signs_local};
use polarization::corpus::{random_config, random_orthogonal, rng_for};
use polarization::optimizer::{ascend, log_gradient, AscentDirection};
use polarization::{
    column_lengths, eigen_sym, full_report, gram, grid_oracle, product_at, sup_product, symmetrize,
    sym_inv_sqrt, verify_bang, BangInstance, Configuration, Construction, OptimizerSettings,
    SymmetricMatrix,
};
use proptest::prelude::*;
use rand::Rng;

fn config_strategy(max_n: usize) -> impl Strategy<Value = Configuration> {
    (2..=max_n, any::<u64>(), 0usize..3000).prop_map(|(n, seed, i)| random_config(n, seed, i))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_diff(a: &SymmetricMatrix, b: &SymmetricMatrix) -> f64 {
    a.as_matrix().max_abs_diff(b.as_matrix())
}

/// Every sign vector, in plain binary order.
fn all_signs(n: usize) -> impl Iterator<Item = Vec<i8>> {
    (0..1u32 << n).map(move |code| (0..n).map(|k| if code >> k & 1 == 0 { 1 } else { -1 }).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rotation_leaves_gram_and_bounds_unchanged(config in config_strategy(7), seed in any::<u64>()) {
        let n = config.dim();
        let q = random_orthogonal(n, &mut rng_for(seed, n, 0));
        let rotated = config.rotated(&q).unwrap();
        prop_assert!(max_diff(&gram(&config), &gram(&rotated)) <= 1e-10);
        let a = full_report(&config, None).unwrap().defined_bounds();
        let b = full_report(&rotated, None).unwrap().defined_bounds();
        prop_assert_eq!(a.len(), b.len());
        for ((name, va), (_, vb)) in a.iter().zip(&b) {
            prop_assert!((va - vb).abs() <= 1e-9, "{}: {} vs {}", name, va, vb);
        }
    }

    #[test]
    fn permutation_permutes_diagonal_and_keeps_bounds(config in config_strategy(7), shift in 1usize..7) {
        let n = config.dim();
        let perm: Vec<usize> = (0..n).map(|j| (j + shift) % n).collect();
        let permuted = config.permuted(&perm);
        let a = full_report(&config, None).unwrap();
        let b = full_report(&permuted, None).unwrap();
        for (j, &p) in perm.iter().enumerate() {
            prop_assert!((b.a_diag[j] - a.a_diag[p]).abs() <= 1e-12);
            if let (Some(va), Some(vb)) = (&a.v_lengths, &b.v_lengths) {
                prop_assert!((vb[j] - va[p]).abs() <= 1e-9 * va[p]);
            }
        }
        for ((name, va), (_, vb)) in a.defined_bounds().iter().zip(&b.defined_bounds()) {
            prop_assert!((va - vb).abs() <= 1e-12, "{}: {} vs {}", name, va, vb);
        }
    }

    #[test]
    fn square_root_has_unit_rows_and_squares_back(config in config_strategy(8)) {
        let g = gram(&config);
        let s = symmetrize(&config).unwrap();
        let s2 = s.as_matrix().mul(s.as_matrix());
        prop_assert!(s2.max_abs_diff(g.as_matrix()) <= 1e-10);
        for row in s.as_matrix().rows() {
            prop_assert!((dot(row, row).sqrt() - 1.0).abs() <= 1e-10);
        }
        let spec = eigen_sym(&g).unwrap();
        if spec.min() > 1e-3 {
            let inv = sym_inv_sqrt(&g).unwrap();
            let whitened = inv.as_matrix().mul(g.as_matrix()).mul(inv.as_matrix());
            prop_assert!(whitened.max_abs_diff(&polarization::Matrix::identity(g.dim())) <= 1e-8);
        }
    }

    #[test]
    fn trace_identities(config in config_strategy(8)) {
        let g = gram(&config);
        let n = g.dim() as f64;
        prop_assert!((g.as_matrix().trace() - n).abs() <= 1e-12);
        let spec = eigen_sym(&g).unwrap();
        prop_assert!((spec.eigenvalues.iter().sum::<f64>() - n).abs() <= 1e-10);
        if spec.min() > 1e-4 {
            let v = column_lengths(&sym_inv_sqrt(&g).unwrap());
            let lhs: f64 = v.iter().map(|x| x * x).sum();
            let rhs: f64 = spec.eigenvalues.iter().map(|l| 1.0 / l).sum();
            prop_assert!((lhs - rhs).abs() <= 1e-8 * rhs);
        }
    }

    #[test]
    fn diagonal_bound_dominates_the_other_witness_bounds(config in config_strategy(8)) {
        // a_j = E[lambda^(1/2)] over the spectral measure of row j, so Jensen
        // gives a_j >= E[1/lambda]^(-1/2) = 1/V_j and a_j >= 1/sqrt(lambda_max)
        let r = full_report(&config, None).unwrap();
        let t3 = r.thm3.as_ref().unwrap().log_bound;
        if let Some(t1) = &r.thm1 {
            prop_assert!(t3 >= t1.log_bound - 1e-10);
        }
        prop_assert!(t3 >= r.thm2.as_ref().unwrap().log_bound - 1e-10);
    }

    #[test]
    fn witnesses_are_unit_and_recompute(config in config_strategy(8)) {
        let r = full_report(&config, None).unwrap();
        prop_assert!(r.ordering_violations(1e-12).is_empty());
        prop_assert!(r.witness_violations(1e-12).is_empty());
        for w in r.witnesses() {
            prop_assert!((dot(&w.y, &w.y) - 1.0).abs() <= 1e-12);
            let direct: f64 = config.to_rows().iter().map(|x| dot(x, &w.y).abs()).product();
            prop_assert!((direct - w.achieved).abs() <= 1e-12 * direct.max(1e-300) + 1e-300);
        }
    }

    #[test]
    fn diagonal_witness_matches_symmetric_coordinates(config in config_strategy(8)) {
        // the third construction evaluates S at eps / sqrt(n); mapping back to
        // X coordinates must not change the product
        let s = symmetrize(&config).unwrap();
        let t3 = full_report(&config, None).unwrap().thm3.unwrap();
        let n = config.dim() as f64;
        let y: Vec<f64> = t3.certificate.signs().iter().map(|&e| f64::from(e) / n.sqrt()).collect();
        let via_s: f64 = s.mul_vec(&y).iter().map(|p| p.abs()).product();
        prop_assert!((via_s - t3.witness.achieved).abs() <= 1e-10 * via_s);
    }

    #[test]
    fn bang_search_modes_agree_with_brute_force(config in config_strategy(8), seed in any::<u64>()) {
        let n = config.dim();
        let mut rng = rng_for(seed, n, 1);
        let r: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..3.0)).collect();
        let inst = BangInstance::new(gram(&config), r).unwrap();
        let exhaustive = bang_signs_exhaustive(&inst).unwrap();
        let local = bang_signs_local(&inst).unwrap();
        prop_assert!(exhaustive.min_slack() >= -1e-10);
        prop_assert!(local.min_slack() >= -1e-10);
        let best = all_signs(n).map(|e| inst.quadratic_form(&e)).fold(f64::NEG_INFINITY, f64::max);
        let q = inst.quadratic_form(&exhaustive.signs);
        prop_assert!(q >= best - 1e-9 * best.abs().max(1.0));
        prop_assert!(inst.quadratic_form(&local.signs) <= q + 1e-9 * q.abs().max(1.0));
        prop_assert_eq!(exhaustive.signs[0], 1);
        let neg: Vec<i8> = exhaustive.signs.iter().map(|e| -e).collect();
        for (a, b) in verify_bang(&inst, &neg).iter().zip(&exhaustive.slack) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn ascent_is_monotone_and_ends_critical(config in config_strategy(8), seed in any::<u64>()) {
        let n = config.dim();
        let mut rng = rng_for(seed, n, 2);
        let y0: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        for direction in [AscentDirection::Newton, AscentDirection::Gradient] {
            let settings = OptimizerSettings { direction, max_iterations: 5000, ..OptimizerSettings::default() };
            let a = ascend(&config, &y0, &settings);
            prop_assert!(a.history.windows(2).all(|w| w[1] >= w[0]));
            if a.converged && direction == AscentDirection::Newton {
                // y^T grad = n, so a critical point has grad = n y
                let g = log_gradient(&config, &a.y);
                let res: f64 = g.iter().zip(&a.y).map(|(gi, yi)| (gi - n as f64 * yi).powi(2)).sum::<f64>().sqrt();
                prop_assert!(res <= 1e-6 * dot(&g, &g).sqrt(), "residual {}", res);
            }
        }
    }

    #[test]
    fn text_format_round_trips(config in config_strategy(8)) {
        let back = Configuration::parse(&config.to_text()).unwrap();
        prop_assert!(back.matrix().max_abs_diff(config.matrix()) <= 1e-15);
    }
}

#[test]
fn two_dimensional_bounds_match_closed_forms() {
    for deg in [10.0f64, 30.0, 60.0, 75.0, 89.0] {
        let c = deg.to_radians().cos();
        let r = full_report(&Configuration::pair(deg.to_radians()), None).unwrap();
        let half_sum = ((1.0 + c).sqrt() + (1.0 - c).sqrt()) / 2.0;
        assert_relative_eq!(r.marcus(), (1.0 - c) / 2.0, max_relative = 1e-12);
        assert_relative_eq!(r.harmonic().unwrap(), (1.0 - c * c) / 2.0, max_relative = 1e-12);
        assert_relative_eq!(r.thm1_value().unwrap(), (1.0 - c * c) / 2.0, max_relative = 1e-12);
        assert_relative_eq!(r.thm2_value().unwrap(), 1.0 / (2.0 * (1.0 + c)), max_relative = 1e-12);
        assert_relative_eq!(r.thm3_value().unwrap(), half_sum * half_sum / 2.0, max_relative = 1e-12);
        assert_eq!(r.winner(), Some(Construction::Thm3Bang));
    }
    let r = full_report(&Configuration::pair(60f64.to_radians()), None).unwrap();
    assert_relative_eq!(r.thm3_value().unwrap(), (1.0 + 0.75f64.sqrt()) / 4.0, max_relative = 1e-12);
}

#[test]
fn optimizer_agrees_with_grid_in_low_dimensions() {
    for n in [2usize, 3] {
        for i in 0..12 {
            let config = random_config(n, 99, i);
            let sup = sup_product(&config, &OptimizerSettings::default()).unwrap().best_value;
            let grid = grid_oracle(&config, None).unwrap();
            assert!(sup >= grid - 1e-12, "n={n} #{i}: {sup} < grid {grid}");
            assert!(sup - grid <= 5e-5 * sup.max(1e-3), "n={n} #{i}: {sup} vs grid {grid}");
        }
    }
}

#[test]
fn supremum_dominates_every_bound() {
    for n in 2..=8 {
        for i in 0..15 {
            let config = random_config(n, 5, i);
            let r = full_report(&config, Some(&OptimizerSettings::default())).unwrap();
            let sup = r.sup_estimate.unwrap();
            for (name, v) in r.defined_bounds() {
                assert!(v <= sup * (1.0 + 1e-12), "n={n} #{i}: {name} = {v} > sup {sup}");
            }
            for w in r.witnesses() {
                assert!(w.achieved <= sup * (1.0 + 1e-12));
            }
        }
    }
}

#[test]
fn symmetrized_configuration_has_the_same_supremum() {
    for n in 2..=6 {
        for i in 0..6 {
            let config = random_config(n, 17, i);
            let s = symmetrize(&config).unwrap();
            let sym = Configuration::new(s.as_matrix().to_rows()).unwrap();
            let a = sup_product(&config, &OptimizerSettings::default()).unwrap();
            let b = sup_product(&sym, &OptimizerSettings::default()).unwrap();
            assert_relative_eq!(a.best_value, b.best_value, max_relative = 1e-9);
            assert_relative_eq!(product_at(&config, &a.best_y).unwrap(), a.best_value, max_relative = 1e-12);
        }
    }
}

#[test]
fn sup_product_is_deterministic() {
    let config = random_config(5, 3, 1);
    let s = OptimizerSettings::with_seed(11);
    assert_eq!(sup_product(&config, &s).unwrap(), sup_product(&config, &s).unwrap());
}
