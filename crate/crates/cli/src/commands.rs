use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use fdon_core::analysis::{
    circle_boundary, evaluate_model, export_heatflux, export_report, export_spectrum,
    export_summary, grad_at_query, heat_flux_total, layer_svd_spectrum, trunk_hidden_outputs,
    BoundaryNodes, HeatFluxSegment, MetricTransform,
};
use fdon_core::geomdata::{
    ellipse_mask, leblanc_dataset, lhs_sample, nozzle_coeffs, read_dataset, split_indices,
    synth_field_dataset, write_dataset, write_param_csv, write_rows_csv, EllipseParams,
    HeightConvention, LeblancSpec, NozzleParams, OperatorDataset, ParamTable, SynthSpec,
    UniformGrid, SYNTH_RANGES,
};
use fdon_core::losses::{LossConfig, LossMode};
use fdon_core::netcore::LrSchedule;
use fdon_core::operators::{FusionConfig, Variant};
use fdon_core::training::{
    load_checkpoint, prepare_model, save_checkpoint, Checkpoint, TrainConfig, TrainEvent, Trainer,
};
use fdon_core::DenseTensor;

use crate::config::{Command, RunConfig};
use crate::error::CliError;

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("i/o error on {}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io_err(path, e))
}

fn open_log(path: &Path, append: bool, header: &str) -> Result<BufWriter<File>, CliError> {
    let existed = append && path.exists();
    let f = OpenOptions::new()
        .create(true)
        .write(true)
        .append(append)
        .truncate(!append)
        .open(path)
        .map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(f);
    if !existed {
        writeln!(w, "{header}").map_err(|e| io_err(path, e))?;
    }
    Ok(w)
}

/// Runs `cfg.command`, after echoing the resolved config into the output directory.
/// Returns the files written.
pub fn run(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let echo = cfg.echo()?;
    let mut files = match cfg.command {
        Command::GenData => gen_data(cfg)?,
        Command::Train => train(cfg)?,
        Command::Eval => eval(cfg)?,
        Command::AnalyzeSvd => analyze_svd(cfg)?,
        Command::Heatflux => heatflux(cfg)?,
    };
    files.insert(0, echo);
    Ok(files)
}

pub fn gen_data(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let out = cfg.out_dir();
    let seed: u64 = cfg.get("seed")?;
    let write_pair =
        |train: &OperatorDataset, test: &OperatorDataset| -> Result<Vec<PathBuf>, CliError> {
            let (a, b) = (out.join("train.fdon"), out.join("test.fdon"));
            write_dataset(train, &a)?;
            write_dataset(test, &b)?;
            Ok(vec![a, b])
        };
    let params_csv = out.join("params.csv");
    match cfg.str("generator") {
        "leblanc" => {
            let spec = LeblancSpec {
                cases: cfg.get("cases")?,
                train: cfg.get("train_cases")?,
                points: cfg.get("points")?,
                t_f: cfg.get("t_final")?,
                p_range: (cfg.get("p_min")?, cfg.get("p_max")?),
            };
            let (train, test) = leblanc_dataset(&spec, seed)?;
            let mut files = write_pair(&train, &test)?;
            let p = spec.pressures();
            let (tr, te) = split_indices(spec.cases, spec.train, seed);
            let rows = |idx: &[usize]| {
                idx.iter()
                    .map(|&i| vec![p[i], spec.branch_value(p[i])])
                    .collect::<Vec<_>>()
            };
            write_rows_csv(&["p_l", "branch"], &rows(&tr), &rows(&te), &params_csv)?;
            files.push(params_csv);
            Ok(files)
        }
        "synth2d" => {
            let (n, n_train): (usize, usize) = (cfg.get("synth_cases")?, cfg.get("synth_train")?);
            if n_train == 0 || n_train >= n {
                return Err(CliError::Config(format!(
                    "need 0 < synth_train < synth_cases, got {n_train} of {n}"
                )));
            }
            let spec = SynthSpec {
                steepness: cfg.get("steepness")?,
                nx: cfg.get("nx")?,
                ny: cfg.get("ny")?,
                jitter: cfg.get("jitter")?,
            };
            let params = lhs_sample(&SYNTH_RANGES, n, seed)?;
            let all = synth_field_dataset(&params, &spec, seed)?;
            let (tr, te) = split_indices(n, n_train, seed);
            let mut files = write_pair(&all.subset(&tr)?, &all.subset(&te)?)?;
            let rows = |idx: &[usize]| {
                idx.iter()
                    .map(|&i| params.row(i).to_vec())
                    .collect::<Vec<_>>()
            };
            write_rows_csv(&["p0", "p1"], &rows(&tr), &rows(&te), &params_csv)?;
            files.push(params_csv);
            Ok(files)
        }
        "nozzle-geom" => gen_nozzle(cfg, &out, &params_csv),
        "ellipse-mask" => {
            let (train_rows, test_rows) = ParamTable::Ellipse.rows();
            let grid = UniformGrid::ellipse_default();
            let build = |rows: &[Vec<f64>]| -> Result<(OperatorDataset, Vec<usize>), CliError> {
                let (n, pts) = (rows.len(), grid.len());
                let mut masks = Vec::with_capacity(n * pts);
                let mut solid = Vec::with_capacity(n);
                for r in rows {
                    let m = ellipse_mask(&EllipseParams::new(r[0], r[1])?, &grid);
                    solid.push(m.iter().filter(|&&v| v == 0.0).count());
                    masks.extend(m);
                }
                let branch = DenseTensor::new(vec![n, 2], rows.concat())?;
                let coords = DenseTensor::new(vec![n, pts, 2], grid.points().data().repeat(n))?;
                let targets = DenseTensor::new(vec![n, pts, 1], masks.clone())?;
                let mask = DenseTensor::new(vec![n, pts], masks)?;
                Ok((
                    OperatorDataset::new(branch, coords, targets, Some(mask))?,
                    solid,
                ))
            };
            let (train, solid_train) = build(&train_rows)?;
            let (test, solid_test) = build(&test_rows)?;
            let mut files = write_pair(&train, &test)?;
            write_param_csv(ParamTable::Ellipse, &params_csv)?;
            let summary = out.join("ellipse_masks.csv");
            let mut w = create(&summary)?;
            let mut text = String::from("split,case,a,b,solid_nodes\n");
            for (split, rows, solid) in [
                ("train", &train_rows, &solid_train),
                ("test", &test_rows, &solid_test),
            ] {
                for (i, (r, s)) in rows.iter().zip(solid).enumerate() {
                    text.push_str(&format!("{split},{},{},{},{s}\n", i + 1, r[0], r[1]));
                }
            }
            w.write_all(text.as_bytes())
                .and_then(|_| w.flush())
                .map_err(|e| io_err(&summary, e))?;
            files.extend([params_csv, summary]);
            Ok(files)
        }
        other => Err(CliError::Config(format!(
            "unknown generator {other:?} (expected leblanc, synth2d, nozzle-geom or ellipse-mask)"
        ))),
    }
}

fn gen_nozzle(cfg: &RunConfig, out: &Path, params_csv: &Path) -> Result<Vec<PathBuf>, CliError> {
    let convention = match cfg.str("height_convention") {
        "half" => HeightConvention::HalfHeight,
        "literal" => HeightConvention::Literal,
        other => {
            return Err(CliError::Config(format!(
                "height_convention must be half or literal, got {other:?}"
            )))
        }
    };
    let samples: usize = cfg.get("wall_points")?;
    if samples < 2 {
        return Err(CliError::Config("wall_points must be at least 2".into()));
    }
    let (train, test) = ParamTable::Nozzle.rows();
    let walls_path = out.join("nozzle_walls.csv");
    let check_path = out.join("nozzle_check.csv");
    let mut walls = String::from("split,case,x,y\n");
    let mut check = String::from("split,case,max_residual,throat_x,min_x,min_y\n");
    for (split, rows) in [("train", &train), ("test", &test)] {
        for (i, r) in rows.iter().enumerate() {
            let p = NozzleParams {
                convention,
                ..NozzleParams::new(r[0], r[1], r[2])
            };
            let wall = nozzle_coeffs(&p)?;
            let res = wall
                .residuals(&p)
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()));
            let (mut min_x, mut min_y) = (0.0, f64::INFINITY);
            for k in 0..samples {
                let x = p.length * k as f64 / (samples - 1) as f64;
                let y = wall.eval(x);
                walls.push_str(&format!("{split},{},{x},{y}\n", i + 1));
                if y < min_y {
                    (min_x, min_y) = (x, y);
                }
            }
            check.push_str(&format!(
                "{split},{},{res:e},{},{min_x},{min_y}\n",
                i + 1,
                p.throat_x()
            ));
        }
    }
    std::fs::write(&walls_path, walls).map_err(|e| io_err(&walls_path, e))?;
    std::fs::write(&check_path, check).map_err(|e| io_err(&check_path, e))?;
    write_param_csv(ParamTable::Nozzle, params_csv)?;
    Ok(vec![walls_path, check_path, params_csv.to_path_buf()])
}

fn model_config(cfg: &RunConfig) -> Result<(Variant, FusionConfig), CliError> {
    let variant = Variant::parse(cfg.str("variant"))
        .ok_or_else(|| CliError::Config(format!("unknown variant {:?}", cfg.str("variant"))))?;
    let config = FusionConfig {
        layers: cfg.get("layers")?,
        width: cfg.get("width")?,
        latent: cfg.get("latent")?,
        harmonics: cfg.get("harmonics")?,
        rowdy_scale: cfg.get("rowdy_scale")?,
        condition_last_hidden: cfg.get("condition_last_hidden")?,
        seed: cfg.get("seed")?,
        ..FusionConfig::default()
    };
    Ok((variant, config))
}

fn var_names(cfg: &RunConfig, n_vars: usize) -> Result<Vec<String>, CliError> {
    let names: Vec<String> = cfg.list("var_names")?;
    if names.is_empty() {
        return Ok((0..n_vars).map(|v| format!("v{v}")).collect());
    }
    if names.len() != n_vars {
        return Err(CliError::Config(format!(
            "var_names lists {} names for {n_vars} variables",
            names.len()
        )));
    }
    Ok(names)
}

pub fn train(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let out = cfg.out_dir();
    let train_path = cfg.path("train_data").expect("required");
    let train = read_dataset(&train_path)?;
    let test = cfg
        .path("test_data")
        .map(|p| read_dataset(&p))
        .transpose()?;
    let mode = LossMode::parse(cfg.str("loss"))
        .ok_or_else(|| CliError::Config(format!("unknown loss {:?}", cfg.str("loss"))))?;
    let loss = LossConfig {
        mode,
        lambda1: cfg.get("lambda1")?,
        k_neighbors: cfg.get("k_neighbors")?,
        pair_epsilon: cfg.get("pair_epsilon")?,
    };
    loss.validate(train.coord_dim())?;
    let schedule = LrSchedule::new(
        cfg.get("lr")?,
        cfg.get("decay_steps")?,
        cfg.get("decay_rate")?,
    )?;
    let tc = TrainConfig {
        epochs: cfg.get("epochs")?,
        batch_size: cfg.get("batch_size")?,
        schedule,
        eval_every: cfg.get("checkpoint_every")?,
        seed: cfg.get("seed")?,
    };
    tc.validate()?;
    let log_every: u64 = cfg.get("log_every")?;
    if log_every == 0 {
        return Err(CliError::Config("log_every must be positive".into()));
    }
    let exp_vars: Vec<usize> = cfg.list("log_vars")?;
    if let Some(&v) = exp_vars.iter().find(|&&v| v >= train.n_vars()) {
        return Err(CliError::Config(format!(
            "log_vars entry {v} out of range for {} variables",
            train.n_vars()
        )));
    }
    let names = var_names(cfg, train.n_vars())?;

    let last_path = out.join("last.ckpt");
    let best_path = out.join("best.ckpt");
    let resume = cfg.path("resume");
    let mut trainer = match &resume {
        Some(p) => {
            let last = load_checkpoint(p)?;
            let best_src = p.with_file_name("best.ckpt");
            let best = if best_src.exists() {
                Some(load_checkpoint(&best_src)?)
            } else {
                None
            };
            Trainer::resume(last, best, &train, test, loss, tc)?
        }
        None => {
            let (variant, config) = model_config(cfg)?;
            let model = prepare_model(variant, config, &train)?;
            Trainer::new(model, MetricTransform { exp_vars }, &train, test, loss, tc)?
        }
    };
    save_checkpoint(&trainer.checkpoint(), &last_path)?;

    let loss_path = out.join("loss.csv");
    let eval_path = out.join("eval.csv");
    let append = resume.is_some();
    let mut loss_log = open_log(&loss_path, append, "epoch,loss,lr")?;
    let mut eval_log = open_log(
        &eval_path,
        append,
        &format!("epoch,{},aggregate,best", names.join(",")),
    )?;
    let mut best_saved = false;
    let outcome = trainer.run(&train, |t, e| {
        match e {
            TrainEvent::Step { epoch, loss, lr } => {
                if epoch % log_every == 0 {
                    writeln!(loss_log, "{epoch},{loss:e},{lr:e}").map_err(|e| {
                        fdon_core::Error::Io {
                            path: loss_path.clone(),
                            source: e,
                        }
                    })?;
                }
            }
            TrainEvent::Eval {
                epoch,
                report,
                improved,
            } => {
                let vars: Vec<String> = report.per_var.iter().map(|v| format!("{v}")).collect();
                writeln!(
                    eval_log,
                    "{epoch},{},{},{}",
                    vars.join(","),
                    report.aggregate,
                    *improved as u8
                )
                .and_then(|_| eval_log.flush())
                .and_then(|_| loss_log.flush())
                .map_err(|e| fdon_core::Error::Io {
                    path: eval_path.clone(),
                    source: e,
                })?;
                save_checkpoint(&t.checkpoint(), &last_path)?;
                if *improved {
                    save_checkpoint(&t.best_checkpoint(), &best_path)?;
                    best_saved = true;
                }
            }
        }
        Ok(())
    });
    loss_log.flush().map_err(|e| io_err(&loss_path, e))?;
    eval_log.flush().map_err(|e| io_err(&eval_path, e))?;
    let summary = outcome?;
    save_checkpoint(&trainer.checkpoint(), &last_path)?;
    let mut files = vec![last_path, loss_path, eval_path];
    if best_saved || best_path.exists() {
        files.push(best_path);
    }
    if summary.epochs > 0 {
        println!(
            "trained {} epochs; last loss {:.4e}; best rel-L2 {:.4}% at epoch {}",
            summary.epochs, summary.last_loss, summary.best_metric, summary.best_epoch
        );
    }
    Ok(files)
}

fn check_compatible(ck: &Checkpoint, ds: &OperatorDataset) -> Result<(), CliError> {
    let c = &ck.model.config;
    let found = (ds.n_params(), ds.coord_dim(), ds.n_vars());
    if found != (c.branch_inputs, c.coord_dim, c.n_vars) {
        return Err(CliError::Data(format!(
            "dataset (N_p, N_c, n_v) = {found:?} does not match checkpoint ({}, {}, {})",
            c.branch_inputs, c.coord_dim, c.n_vars
        )));
    }
    if let Some(p) = &ck.model.pod {
        if p.points != ds.points() {
            return Err(CliError::Data(format!(
                "POD checkpoint grid has {} points, dataset has {}",
                p.points,
                ds.points()
            )));
        }
    }
    Ok(())
}

pub fn eval(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let out = cfg.out_dir();
    let ck = load_checkpoint(&cfg.path("checkpoint").expect("required"))?;
    let ds = read_dataset(&cfg.path("data").expect("required"))?;
    check_compatible(&ck, &ds)?;
    let names = var_names(cfg, ds.n_vars())?;
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let report = evaluate_model(&ck.model, &ds, &ck.transform)?;
    let (a, b) = (out.join("eval_report.csv"), out.join("eval_summary.csv"));
    export_report(&report, &refs, &a)?;
    export_summary(&report, &refs, &b)?;
    println!("aggregate rel-L2 {:.4}%", report.aggregate);
    Ok(vec![a, b])
}

pub fn analyze_svd(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let out = cfg.out_dir();
    let ck = load_checkpoint(&cfg.path("checkpoint").expect("required"))?;
    let ds = read_dataset(&cfg.path("data").expect("required"))?;
    check_compatible(&ck, &ds)?;
    let sample: usize = cfg.get("sample")?;
    if sample >= ds.len() {
        return Err(CliError::Config(format!(
            "sample {sample} out of range for {} samples",
            ds.len()
        )));
    }
    let xb = DenseTensor::new(vec![1, ds.n_params()], ds.branch.row(sample).to_vec())?;
    let grid = ds.sample_coords(sample);
    let hidden = trunk_hidden_outputs(&ck.model, &xb, &grid)?;
    let outputs: Vec<(usize, usize, DenseTensor)> = hidden
        .into_iter()
        .enumerate()
        .map(|(l, m)| (l + 1, grid.rows(), m))
        .collect();
    let report = layer_svd_spectrum(&outputs)?;
    let path = out.join("spectrum.csv");
    export_spectrum(&report, &path)?;
    println!("spectra for {} hidden layers", report.entries.len());
    Ok(vec![path])
}

type Boundary = Vec<BoundaryNodes>;

/// `segment,x,y,nx,ny` rows; segments in order of first appearance, normals rescaled to unit length.
fn read_boundary_csv(path: &Path) -> Result<Boundary, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut segs: Vec<(String, BoundaryNodes)> = Vec::new();
    for (no, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = || {
            CliError::Config(format!(
                "{}:{}: expected segment,x,y,nx,ny",
                path.display(),
                no + 1
            ))
        };
        if f.len() != 5 {
            return Err(bad());
        }
        let v: Vec<f64> = f[1..]
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?;
        let norm = v[2].hypot(v[3]);
        if !(norm > 0.0) {
            return Err(CliError::Config(format!(
                "{}:{}: zero normal",
                path.display(),
                no + 1
            )));
        }
        let normal = [v[2] / norm, v[3] / norm];
        match segs.iter_mut().find(|s| s.0 == f[0]) {
            Some((_, (nodes, normals))) => {
                nodes.push([v[0], v[1]]);
                normals.push(normal);
            }
            None => segs.push((f[0].to_string(), (vec![[v[0], v[1]]], vec![normal]))),
        }
    }
    if segs.is_empty() {
        return Err(CliError::Config(format!(
            "{}: no boundary nodes",
            path.display()
        )));
    }
    Ok(segs.into_iter().map(|(_, b)| b).collect())
}

pub fn heatflux(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let out = cfg.out_dir();
    let boundary = match cfg.str("boundary") {
        "" => {
            return Err(CliError::Config(
                "heatflux requires a boundary (circle or a CSV path)".into(),
            ))
        }
        "circle" => {
            let (segments, nodes): (usize, usize) =
                (cfg.get("segments")?, cfg.get("nodes_per_segment")?);
            let radius: f64 = cfg.get("radius")?;
            if segments == 0 || nodes < 2 || !(radius > 0.0) {
                return Err(CliError::Config(
                    "circle needs segments >= 1, nodes_per_segment >= 2, radius > 0".into(),
                ));
            }
            circle_boundary(
                [cfg.get("center_x")?, cfg.get("center_y")?],
                radius,
                segments,
                nodes,
            )
        }
        p => read_boundary_csv(Path::new(p))?,
    };
    let kappa: f64 = cfg.get("kappa")?;
    let all_nodes: Vec<[f64; 2]> = boundary
        .iter()
        .flat_map(|(n, _)| n.iter().copied())
        .collect();
    let grads: Vec<[f64; 2]> = match cfg.str("source") {
        "quadratic" => all_nodes.iter().map(|p| [2.0 * p[0], 2.0 * p[1]]).collect(),
        "checkpoint" => {
            let path = cfg.path("checkpoint").ok_or_else(|| {
                CliError::Config("source = checkpoint requires checkpoint".into())
            })?;
            let ck = load_checkpoint(&path)?;
            let c = &ck.model.config;
            if c.coord_dim != 2 {
                return Err(CliError::Data(format!(
                    "heat flux needs a 2D model, checkpoint has N_c = {}",
                    c.coord_dim
                )));
            }
            let branch: Vec<f64> = cfg.list("branch")?;
            if branch.len() != c.branch_inputs {
                return Err(CliError::Config(format!(
                    "branch lists {} values, model expects {}",
                    branch.len(),
                    c.branch_inputs
                )));
            }
            let var: usize = cfg.get("variable")?;
            if var >= c.n_vars {
                return Err(CliError::Config(format!(
                    "variable {var} out of range for {} outputs",
                    c.n_vars
                )));
            }
            let xb = DenseTensor::new(vec![1, branch.len()], branch)?;
            let query = DenseTensor::new(vec![all_nodes.len(), 2], all_nodes.concat())?;
            let g = grad_at_query(&ck.model, &xb, &query)?;
            (0..all_nodes.len())
                .map(|q| [g.get(&[q, var, 0]), g.get(&[q, var, 1])])
                .collect()
        }
        other => {
            return Err(CliError::Config(format!(
                "source must be checkpoint or quadratic, got {other:?}"
            )))
        }
    };
    let mut at = 0;
    let mut segments = Vec::with_capacity(boundary.len());
    for (nodes, normals) in boundary {
        let k = nodes.len();
        segments.push(HeatFluxSegment::from_gradients(
            nodes,
            normals,
            &grads[at..at + k],
            kappa,
        )?);
        at += k;
    }
    let report = heat_flux_total(&segments)?;
    let path = out.join("heatflux.csv");
    export_heatflux(&report, &path)?;
    println!("total heat flux {:.10e}", report.total);
    Ok(vec![path])
}
