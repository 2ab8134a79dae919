mod common;

use common::{random_tensor, rng};
use fdon_core::analysis::MetricTransform;
use fdon_core::geomdata::{
    lhs_sample, pad_irregular, synth_field_dataset, IrregularSample, SynthSpec, SYNTH_RANGES,
};
use fdon_core::losses::{LossConfig, LossMode};
use fdon_core::operators::{FusionConfig, Variant};
use fdon_core::training::{load_checkpoint, prepare_model, save_checkpoint, TrainConfig, Trainer};

fn small_data() -> fdon_core::geomdata::OperatorDataset {
    let p = lhs_sample(&SYNTH_RANGES, 6, 2).unwrap();
    synth_field_dataset(
        &p,
        &SynthSpec {
            nx: 5,
            ny: 5,
            jitter: 0.2,
            ..SynthSpec::default()
        },
        4,
    )
    .unwrap()
}

fn cfg() -> FusionConfig {
    FusionConfig {
        layers: 3,
        width: 8,
        latent: 6,
        ..FusionConfig::default()
    }
}

fn trainer(variant: Variant, loss: LossConfig, epochs: u64) -> Trainer {
    let ds = small_data();
    let model = prepare_model(variant, cfg(), &ds).unwrap();
    let tc = TrainConfig {
        epochs,
        batch_size: 4,
        eval_every: 10,
        seed: 7,
        ..TrainConfig::default()
    };
    Trainer::new(model, MetricTransform::default(), &ds, None, loss, tc).unwrap()
}

#[test]
fn same_seed_same_parameters() {
    let ds = small_data();
    let loss = LossConfig {
        mode: LossMode::DelLsd,
        lambda1: 0.1,
        k_neighbors: 4,
        ..LossConfig::default()
    };
    let mut a = trainer(Variant::Fusion, loss, 40);
    let mut b = trainer(Variant::Fusion, loss, 40);
    a.run(&ds, |_, _| Ok(())).unwrap();
    b.run(&ds, |_, _| Ok(())).unwrap();
    let bits = |t: &Trainer| {
        t.model()
            .params
            .flat()
            .iter()
            .map(|v| v.to_bits())
            .collect::<Vec<_>>()
    };
    assert_eq!(bits(&a), bits(&b));
}

#[test]
fn resume_from_file_matches_uninterrupted_run() {
    let ds = small_data();
    let loss = LossConfig {
        mode: LossMode::DelDd,
        lambda1: 0.5,
        ..LossConfig::default()
    };
    let mut full = trainer(Variant::Fusion, loss, 30);
    full.run(&ds, |_, _| Ok(())).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let mut half = trainer(Variant::Fusion, loss, 13);
    half.run(&ds, |_, _| Ok(())).unwrap();
    let (last, best) = (dir.path().join("last.ck"), dir.path().join("best.ck"));
    save_checkpoint(&half.checkpoint(), &last).unwrap();
    save_checkpoint(&half.best_checkpoint(), &best).unwrap();

    let tc = TrainConfig {
        epochs: 30,
        ..half.config().clone()
    };
    let mut resumed = Trainer::resume(
        load_checkpoint(&last).unwrap(),
        Some(load_checkpoint(&best).unwrap()),
        &ds,
        None,
        loss,
        tc,
    )
    .unwrap();
    resumed.run(&ds, |_, _| Ok(())).unwrap();
    assert_eq!(resumed.model().params.flat(), full.model().params.flat());
    assert_eq!(resumed.best(), full.best());
}

#[test]
fn zero_epochs_keeps_initial_model() {
    let ds = small_data();
    let mut t = trainer(Variant::Vanilla, LossConfig::default(), 0);
    let before = t.model().params.flat().to_vec();
    let s = t.run(&ds, |_, _| Ok(())).unwrap();
    assert_eq!(s.epochs, 0);
    assert_eq!(t.model().params.flat(), before.as_slice());
}

#[test]
fn derivative_losses_train_on_padded_clouds() {
    let mut r = rng(5);
    let samples: Vec<IrregularSample> = [9, 12, 7, 12]
        .iter()
        .map(|&n| {
            let coords = random_tensor(&[n, 2], &mut r, -1.0, 1.0);
            let vals = (0..n)
                .map(|i| coords.get(&[i, 0]).sin() + coords.get(&[i, 1]))
                .collect();
            IrregularSample {
                branch: vec![n as f64, 1.0],
                coords,
                targets: fdon_core::DenseTensor::new(vec![n, 1], vals).unwrap(),
            }
        })
        .collect();
    let ds = pad_irregular(&samples).unwrap();
    for mode in [LossMode::DelDd, LossMode::DelLsd] {
        let loss = LossConfig {
            mode,
            lambda1: 0.1,
            k_neighbors: 4,
            ..LossConfig::default()
        };
        let model = prepare_model(Variant::Fusion, cfg(), &ds).unwrap();
        let tc = TrainConfig {
            epochs: 300,
            eval_every: 300,
            ..TrainConfig::default()
        };
        let mut t = Trainer::new(model, MetricTransform::default(), &ds, None, loss, tc).unwrap();
        let mut losses = Vec::new();
        t.run(&ds, |_, e| {
            if let fdon_core::training::TrainEvent::Step { loss, .. } = e {
                losses.push(*loss);
            }
            Ok(())
        })
        .unwrap();
        assert!(losses.iter().all(|l| l.is_finite()));
        assert!(
            losses[losses.len() - 1] < 0.5 * losses[0],
            "{mode:?}: {} -> {}",
            losses[0],
            losses[losses.len() - 1]
        );
    }
}
