//! Lifted one-revolution prediction against direct simulation.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use spre_core::lifting::{block_forward_substitution, build_toeplitz, solve_lifted, split_markov, LiftedModel};
use spre_core::prbs::filtered_prbs;
use spre_core::synthetic::PredictorSystem;

const P: usize = 60;
const WIN: usize = 12;

fn lift(samples: &[DVector<f64>], rev: usize) -> DVector<f64> {
    let dim = samples[0].len();
    DVector::from_fn(P * dim, |i, _| samples[rev * P + i / dim][i % dim])
}

#[test]
fn one_revolution_prediction_matches_simulation() {
    let sys = PredictorSystem::random(4, 3, 3, 0.2, 0.5, 3).unwrap();
    let revs = 3;
    let raw = filtered_prbs(9, 1.0, 2.0, 0.1, 3 * P * revs);
    let inputs: Vec<DVector<f64>> = (0..P * revs).map(|k| DVector::from_fn(3, |c, _| raw[3 * k + c])).collect();
    let innov = vec![DVector::zeros(3); inputs.len()];
    let outputs = sys.simulate(&DVector::zeros(4), &inputs, &innov).unwrap();

    let model = LiftedModel::from_markov(&sys.markov_matrix(WIN), WIN, 3, 3, P).unwrap();
    let predicted = model.predict_delta(&lift(&inputs, 1), &lift(&outputs, 1), &lift(&inputs, 2)).unwrap();
    let truth = lift(&outputs, 2);
    let rel = (&predicted - &truth).norm() / truth.norm();
    assert!(rel < 1e-6, "lifted vs simulated relative error {rel:e}");

    // the same revolution by iterating the windowed predictor sample by sample
    let xi = sys.markov_matrix(WIN);
    let mut z = outputs[..2 * P].to_vec();
    for k in 2 * P..3 * P {
        let mut phi = DVector::zeros(6 * WIN);
        for j in 0..WIN {
            phi.rows_mut(3 * j, 3).copy_from(&inputs[k - WIN + j]);
            phi.rows_mut(3 * WIN + 3 * j, 3).copy_from(&z[k - WIN + j]);
        }
        z.push(&xi * phi);
    }
    let recursive = lift(&z, 2);
    assert!((&predicted - &recursive).norm() / recursive.norm() < 1e-12);
}

#[test]
fn split_recovers_generator_products() {
    let sys = PredictorSystem::random(4, 3, 3, 0.2, 0.5, 8).unwrap();
    let blocks = split_markov(&sys.markov_matrix(WIN), WIN, 3, 3).unwrap();
    let mut power = DMatrix::<f64>::identity(4, 4);
    for j in 0..WIN {
        let cb = &sys.c * &power * &sys.b;
        let cl = &sys.c * &power * &sys.l;
        assert!((&blocks.input[j] - cb).amax() < 1e-8);
        assert!((&blocks.output[j] - cl).amax() < 1e-8);
        power = &sys.a_tilde * power;
    }
}

fn random_blocks(values: &[f64], p: usize, r: usize, l: usize) -> DMatrix<f64> {
    DMatrix::from_fn(l, (r + l) * p, |i, j| values[(i * 131 + j * 17) % values.len()])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn forward_substitution_residual(
        values in prop::collection::vec(-0.5f64..0.5, 16..64),
        p in 1usize..6,
        extra in 0usize..10,
    ) {
        let period = p + extra;
        let blocks = split_markov(&random_blocks(&values, p, 3, 3), p, 3, 3).unwrap();
        let (h, g) = build_toeplitz(&blocks, period).unwrap();
        let x = block_forward_substitution(&g, &h, 3, p);
        let residual = (DMatrix::identity(3 * period, 3 * period) - &g) * &x - &h;
        prop_assert!(residual.norm() <= 1e-12 * h.norm().max(1.0));
    }

    #[test]
    fn hhat_is_strictly_causal(
        values in prop::collection::vec(-0.5f64..0.5, 16..64),
        p in 1usize..6,
        extra in 0usize..10,
    ) {
        let period = p + extra;
        let blocks = split_markov(&random_blocks(&values, p, 3, 3), p, 3, 3).unwrap();
        let (h, g) = build_toeplitz(&blocks, period).unwrap();
        let m = solve_lifted(&h, &g, &blocks, period).unwrap();
        for s in 0..period {
            for t in s..period {
                prop_assert!(m.hhat.view((3 * s, 3 * t), (3, 3)).iter().all(|v| *v == 0.0));
            }
        }
        prop_assert!(m.gku.iter().chain(m.gky.iter()).all(|v| v.is_finite()));
    }

    #[test]
    fn split_then_join_is_identity(values in prop::collection::vec(-5.0f64..5.0, 8..40), p in 1usize..8) {
        let xi = random_blocks(&values, p, 3, 3);
        prop_assert_eq!(split_markov(&xi, p, 3, 3).unwrap().join(), xi);
    }
}
