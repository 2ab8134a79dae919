//! LeBlanc training run: `leblanc_run <fusion|vanilla> [epochs] [batch] [points] [lr]`.

use std::time::Instant;

use fdon_core::analysis::MetricTransform;
use fdon_core::geomdata::{leblanc_dataset, LeblancSpec};
use fdon_core::losses::LossConfig;
use fdon_core::operators::{FusionConfig, Variant};
use fdon_core::training::{prepare_model, TrainConfig, TrainEvent, Trainer};

fn main() -> fdon_core::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let arg = |i: usize, d: &str| args.get(i).cloned().unwrap_or_else(|| d.to_string());
    let variant = Variant::parse(&arg(1, "fusion")).expect("variant");
    let epochs: u64 = arg(2, "20000").parse().unwrap();
    let batch: usize = arg(3, "8").parse().unwrap();
    let points: usize = arg(4, "256").parse().unwrap();
    let lr: f64 = arg(5, "0.001").parse().unwrap();

    let spec = LeblancSpec {
        points,
        ..LeblancSpec::default()
    };
    let (train, test) = leblanc_dataset(&spec, 0)?;
    let cfg = FusionConfig {
        layers: 4,
        width: 100,
        latent: 100,
        ..FusionConfig::default()
    };
    let model = prepare_model(variant, cfg, &train)?;
    let mut tc = TrainConfig {
        epochs,
        batch_size: batch,
        eval_every: 2000,
        ..TrainConfig::default()
    };
    tc.schedule.base_lr = lr;
    let transform = MetricTransform {
        exp_vars: vec![0, 2],
    };
    let mut t = Trainer::new(
        model,
        transform,
        &train,
        Some(test),
        LossConfig::default(),
        tc,
    )?;
    let start = Instant::now();
    let mut recent = 0.0;
    let s = t.run(&train, |_, e| {
        match e {
            TrainEvent::Step { loss, .. } => recent = *loss,
            TrainEvent::Eval {
                epoch,
                report,
                improved,
            } => println!(
                "{epoch:>6} {:>7.1}s loss {recent:.3e} test {:?} agg {:.3}{}",
                start.elapsed().as_secs_f64(),
                report
                    .per_var
                    .iter()
                    .map(|v| format!("{v:.2}"))
                    .collect::<Vec<_>>(),
                report.aggregate,
                if *improved { " *" } else { "" }
            ),
        }
        Ok(())
    })?;
    println!("best {:.3}% at {}", s.best_metric, s.best_epoch);
    Ok(())
}
