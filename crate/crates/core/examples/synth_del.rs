//! DEL-DD versus MSE-only on the steep-front field:
//! `synth_del [epochs] [batch] [width] [lambda...]`.

use std::time::Instant;

use fdon_core::analysis::{gradient_magnitude_errors, predict_dataset, MetricTransform};
use fdon_core::geomdata::{
    lhs_sample, split_indices, synth_field_dataset, SynthSpec, SYNTH_RANGES,
};
use fdon_core::losses::{LossConfig, LossMode};
use fdon_core::operators::{FusionConfig, Variant};
use fdon_core::training::{prepare_model, TrainConfig, Trainer};

fn main() -> fdon_core::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let arg = |i: usize, d: &str| args.get(i).cloned().unwrap_or_else(|| d.to_string());
    let epochs: u64 = arg(1, "5000").parse().unwrap();
    let batch: usize = arg(2, "4").parse().unwrap();
    let width: usize = arg(3, "50").parse().unwrap();
    let lambdas: Vec<f64> = if args.len() > 4 {
        args[4..].iter().map(|s| s.parse().unwrap()).collect()
    } else {
        vec![0.01, 0.1, 1.0]
    };

    let params = lhs_sample(&SYNTH_RANGES, 50, 0)?;
    let all = synth_field_dataset(&params, &SynthSpec::default(), 0)?;
    let (tr, te) = split_indices(50, 40, 0);
    let (train, test) = (all.subset(&tr)?, all.subset(&te)?);

    let run = |mode: LossMode, lambda1: f64| -> fdon_core::Result<Vec<f64>> {
        let cfg = FusionConfig {
            layers: 4,
            width,
            latent: width,
            ..FusionConfig::default()
        };
        let model = prepare_model(Variant::Fusion, cfg, &train)?;
        let tc = TrainConfig {
            epochs,
            batch_size: batch,
            eval_every: epochs,
            ..TrainConfig::default()
        };
        let loss = LossConfig {
            mode,
            lambda1,
            ..LossConfig::default()
        };
        let mut t = Trainer::new(
            model,
            MetricTransform::default(),
            &train,
            Some(test.clone()),
            loss,
            tc,
        )?;
        let start = Instant::now();
        let s = t.run(&train, |_, _| Ok(()))?;
        let pred = predict_dataset(t.model(), &test, 16)?;
        let g = gradient_magnitude_errors(&pred, &test, 0, 6)?;
        println!(
            "{} l1={lambda1}: {:.1}s field {:.3}% grad mean {:.3}%",
            mode.name(),
            start.elapsed().as_secs_f64(),
            s.best_metric,
            g.iter().sum::<f64>() / g.len() as f64
        );
        Ok(g)
    };
    let base = run(LossMode::MseOnly, 0.0)?;
    for l in lambdas {
        let g = run(LossMode::DelDd, l)?;
        let wins = g.iter().zip(&base).filter(|(a, b)| a < b).count();
        println!(
            "  lambda {l}: wins {wins}/10  {:?}",
            g.iter()
                .zip(&base)
                .map(|(a, b)| format!("{a:.1}/{b:.1}"))
                .collect::<Vec<_>>()
        );
    }
    Ok(())
}
