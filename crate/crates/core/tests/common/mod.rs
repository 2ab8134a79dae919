//! Oracles and fixtures shared by the integration tests and the acceptance run.
#![allow(dead_code, clippy::needless_range_loop)]

pub mod ddnum;

use ddnum::Dd;
use fdon_core::geomdata::{sample, star_state, Primitive, RiemannState, Wave};
use fdon_core::losses::{derivative_map, LossConfig, LossMode, LossPlan};
use fdon_core::netcore::{NetworkParams, ParamKind, SparseMap, Subnet, Tape};
use fdon_core::operators::{operator_graph, FusionConfig};
use fdon_core::DenseTensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(shape: &[usize], rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> DenseTensor {
    let len = shape.iter().product();
    DenseTensor::new(
        shape.to_vec(),
        (0..len).map(|_| rng.random_range(lo..hi)).collect(),
    )
    .unwrap()
}

/// Uniform weights in (-0.5, 0.5) and small nonzero Rowdy coefficients, so
/// every parameter kind carries gradient.
pub fn random_params(cfg: &FusionConfig, rng: &mut ChaCha8Rng) -> NetworkParams {
    let mut p = NetworkParams::zeros(&[cfg.branch_shape(), cfg.trunk_shape()]);
    for v in p.flat_mut() {
        *v = rng.random_range(-0.5..0.5);
    }
    for e in p.layout().to_vec() {
        if e.kind == ParamKind::Rowdy {
            for v in &mut p.flat_mut()[e.offset..e.offset + e.len()] {
                *v *= 0.02;
            }
        }
    }
    p
}

/// Small fusion network with `N_p = N_c = 2`.
pub fn small_config(layers: usize, width: usize, n_vars: usize, latent: usize) -> FusionConfig {
    FusionConfig {
        layers,
        width,
        branch_inputs: 2,
        coord_dim: 2,
        n_vars,
        latent,
        fusion_enabled: true,
        condition_last_hidden: false,
        harmonics: 2,
        rowdy_scale: 10.0,
        seed: 0,
    }
}

pub struct GradCheckProblem {
    pub cfg: FusionConfig,
    pub params: NetworkParams,
    pub xb: DenseTensor,
    pub xt: DenseTensor,
    pub points: usize,
    pub plan: LossPlan,
    pub loss: LossConfig,
    targets: DenseTensor,
    maps: Vec<SparseMap>,
}

impl GradCheckProblem {
    /// Random network, branch inputs, per-sample clouds and targets.
    pub fn new(
        cfg: FusionConfig,
        samples: usize,
        points: usize,
        loss: LossConfig,
        seed: u64,
    ) -> Self {
        let mut r = rng(seed);
        let params = random_params(&cfg, &mut r);
        let xb = random_tensor(&[samples, cfg.branch_inputs], &mut r, -1.0, 1.0);
        let coords = random_tensor(&[samples, points, cfg.coord_dim], &mut r, -1.0, 1.0);
        let targets = random_tensor(&[samples, points, cfg.n_vars], &mut r, -1.0, 1.0);
        let plan = LossPlan::new(&targets, &coords, None, loss).unwrap();
        let xt = coords.reshape(&[samples * points, cfg.coord_dim]).unwrap();
        let maps = (0..samples)
            .filter_map(|i| {
                let c = DenseTensor::new(
                    vec![points, cfg.coord_dim],
                    xt.data()[i * points * cfg.coord_dim..(i + 1) * points * cfg.coord_dim]
                        .to_vec(),
                )
                .unwrap();
                derivative_map(&c, None, &loss, None).unwrap()
            })
            .collect();
        Self {
            cfg,
            params,
            xb,
            xt,
            points,
            plan,
            loss,
            targets,
            maps,
        }
    }

    /// Loss and its gradient through the library's recorded graph.
    pub fn loss_and_grad(&self, flat: &[f64]) -> (f64, Vec<f64>) {
        let mut params = self.params.clone();
        params.flat_mut().copy_from_slice(flat);
        let mut tape = Tape::new(params.len());
        let b = tape.leaf(self.xb.clone());
        let t = tape.leaf(self.xt.clone());
        let pred = operator_graph(&mut tape, &params, &self.cfg, b, t, self.points, None).unwrap();
        let batch: Vec<usize> = (0..self.xb.rows()).collect();
        let loss = self.plan.loss_graph(&mut tape, pred, &batch).unwrap();
        let value = tape.value(loss).data()[0];
        (value, tape.backward(loss).unwrap().params)
    }

    fn layer(&self, theta: &[Dd], subnet: Subnet, l: usize, x: &[Dd], activate: bool) -> Vec<Dd> {
        let w = self.params.entry(subnet, l, ParamKind::Weight).unwrap();
        let b = self.params.entry(subnet, l, ParamKind::Bias).unwrap();
        let (n_in, n_out) = (w.shape[0], w.shape[1]);
        let a: Vec<Dd> = self
            .params
            .entry(subnet, l, ParamKind::Rowdy)
            .map(|e| theta[e.offset..e.offset + e.len()].to_vec())
            .unwrap_or_default();
        let ns = Dd::new(self.cfg.rowdy_scale);
        (0..n_out)
            .map(|j| {
                let mut z = theta[b.offset + j];
                for (i, xi) in x.iter().enumerate().take(n_in) {
                    z = z + *xi * theta[w.offset + i * n_out + j];
                }
                if !activate {
                    return z;
                }
                let mut y = z.tanh();
                for (k, ak) in a.iter().enumerate() {
                    y = y + *ak * ns * (Dd::new((k + 1) as f64) * ns * z).sin();
                }
                y
            })
            .collect()
    }

    /// Prediction `[sample][point][var]` by literal evaluation of the
    /// branch/trunk recursions with fusion conditioning.
    fn oracle_predict(&self, theta: &[Dd]) -> Vec<Vec<Vec<Dd>>> {
        let big_l = self.cfg.layers;
        let n_cond = if self.cfg.condition_last_hidden {
            big_l - 1
        } else {
            big_l - 2
        };
        let (nc, np) = (self.cfg.coord_dim, self.cfg.branch_inputs);
        (0..self.xb.rows())
            .map(|s| {
                let mut z = vec![self.xb.data()[s * np..(s + 1) * np]
                    .iter()
                    .map(|&v| Dd::new(v))
                    .collect::<Vec<_>>()];
                for l in 1..big_l {
                    let next = self.layer(theta, Subnet::Branch, l, &z[l - 1], true);
                    z.push(next);
                }
                let head = self.layer(theta, Subnet::Branch, big_l, &z[big_l - 1], false);
                let mut cond: Vec<Vec<Dd>> = Vec::new();
                for m in 0..n_cond {
                    let next = if m == 0 {
                        z[1].clone()
                    } else {
                        z[m + 1]
                            .iter()
                            .zip(&cond[m - 1])
                            .map(|(a, b)| *a + *b)
                            .collect()
                    };
                    cond.push(next);
                }
                (0..self.points)
                    .map(|p| {
                        let row = (s * self.points + p) * nc;
                        let mut y: Vec<Dd> = self.xt.data()[row..row + nc]
                            .iter()
                            .map(|&v| Dd::new(v))
                            .collect();
                        for l in 1..big_l {
                            y = self.layer(theta, Subnet::Trunk, l, &y, true);
                            if self.cfg.fusion_enabled && l <= n_cond {
                                y = y.iter().zip(&cond[l - 1]).map(|(a, b)| *a * *b).collect();
                            }
                        }
                        let t = self.layer(theta, Subnet::Trunk, big_l, &y, false);
                        (0..self.cfg.n_vars)
                            .map(|v| {
                                (0..self.cfg.latent).fold(Dd::ZERO, |acc, k| {
                                    acc + head[v * self.cfg.latent + k] * t[k]
                                })
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }

    /// Loss evaluated independently of the graph, in double-double precision.
    pub fn oracle_loss(&self, theta: &[Dd]) -> Dd {
        let pred = self.oracle_predict(theta);
        let nv = self.cfg.n_vars;
        let truth = |s: usize, p: usize, v: usize| {
            Dd::new(self.targets.data()[(s * self.points + p) * nv + v])
        };
        let mut mse = Dd::ZERO;
        for (s, ps) in pred.iter().enumerate() {
            for (p, vs) in ps.iter().enumerate() {
                for (v, x) in vs.iter().enumerate() {
                    mse = mse + (*x - truth(s, p, v)).sqr();
                }
            }
        }
        let mut loss = mse / Dd::new((pred.len() * self.points * nv) as f64);
        if self.maps.is_empty() {
            return loss;
        }
        let (mut dsum, mut rows) = (Dd::ZERO, 0usize);
        for (s, map) in self.maps.iter().enumerate() {
            rows += map.n_rows;
            for r in 0..map.n_rows {
                for v in 0..nv {
                    let mut d = Dd::ZERO;
                    for q in map.row_ptr[r]..map.row_ptr[r + 1] {
                        let w = Dd::new(map.values[q]);
                        d = d + w * (pred[s][map.col_idx[q]][v] - truth(s, map.col_idx[q], v));
                    }
                    dsum = dsum + d.sqr();
                }
            }
        }
        loss = loss + Dd::new(self.loss.lambda1) * dsum / Dd::new((rows * nv) as f64);
        loss
    }

    /// Central difference of the double-double oracle along parameter `i`.
    pub fn oracle_derivative(&self, i: usize, h: f64) -> f64 {
        let mut theta: Vec<Dd> = self.params.flat().iter().map(|&v| Dd::new(v)).collect();
        let base = theta[i];
        theta[i] = base + Dd::new(h);
        let up = self.oracle_loss(&theta);
        theta[i] = base - Dd::new(h);
        let down = self.oracle_loss(&theta);
        ((up - down) / Dd::new(2.0 * h)).to_f64()
    }

    /// Largest `|fd - ad| / max(|fd|, |ad|, 1e-8)` over all parameters, with
    /// `fd` the central difference of the independent oracle.
    pub fn max_relative_error(&self, h: f64) -> f64 {
        let (_, ad) = self.loss_and_grad(self.params.flat());
        (0..ad.len())
            .map(|i| {
                let fd = self.oracle_derivative(i, h);
                (fd - ad[i]).abs() / fd.abs().max(ad[i].abs()).max(1e-8)
            })
            .fold(0.0, f64::max)
    }
}

pub fn loss_config(mode: LossMode, k: usize) -> LossConfig {
    LossConfig {
        mode,
        lambda1: 0.7,
        k_neighbors: k,
        ..LossConfig::default()
    }
}

// ---- Riemann oracles ----

fn pressure_branch(p: f64, w: Primitive, g: f64) -> f64 {
    if p > w.p {
        let a = 2.0 / ((g + 1.0) * w.rho);
        let b = (g - 1.0) / (g + 1.0) * w.p;
        (p - w.p) * (a / (p + b)).sqrt()
    } else {
        let c = (g * w.p / w.rho).sqrt();
        2.0 * c / (g - 1.0) * ((p / w.p).powf((g - 1.0) / (2.0 * g)) - 1.0)
    }
}

/// Star pressure and velocity by plain bisection on the pressure function.
pub fn bisection_star(s: &RiemannState) -> (f64, f64) {
    let g = s.gamma;
    let f = |p: f64| {
        pressure_branch(p, s.left, g) + pressure_branch(p, s.right, g) + s.right.u - s.left.u
    };
    let (mut a, mut b) = (0.0f64, s.left.p.max(s.right.p));
    while f(b) < 0.0 {
        b *= 2.0;
    }
    for _ in 0..2000 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if f(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    let p = 0.5 * (a + b);
    let u = 0.5 * (s.left.u + s.right.u)
        + 0.5 * (pressure_branch(p, s.right, g) - pressure_branch(p, s.left, g));
    (p, u)
}

/// Relative violation of the three jump conditions across a discontinuity
/// moving at `speed` between states `a` and `b`.
pub fn rankine_hugoniot(a: Primitive, b: Primitive, speed: f64, g: f64) -> f64 {
    let flux = |w: Primitive| {
        let v = w.u - speed;
        let m = w.rho * v;
        let e = w.p / (g - 1.0) + 0.5 * w.rho * v * v;
        [m, m * v + w.p, (e + w.p) * v]
    };
    let (fa, fb) = (flux(a), flux(b));
    let scale = [
        a.rho.max(b.rho) * (a.u - speed).abs().max((b.u - speed).abs()),
        a.p.max(b.p) + a.rho * (a.u - speed).powi(2) + b.rho * (b.u - speed).powi(2),
        (a.p.max(b.p) / (g - 1.0) + a.p.max(b.p)) * (a.u - speed).abs().max((b.u - speed).abs()),
    ];
    (0..3)
        .map(|i| (fa[i] - fb[i]).abs() / scale[i].max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

/// Largest relative violation of shock jump conditions, contact continuity
/// of `(u, p)`, and Riemann-invariant constancy through rarefactions.
pub fn riemann_invariant_violation(s: &RiemannState) -> f64 {
    let g = s.gamma;
    let star = star_state(s).unwrap();
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-300);
    let mut worst = 0.0f64;
    // contact: both sides share u and p
    let width = 1e-9 * (1.0 + star.u.abs());
    let (cl, cr) = (
        sample(s, &star, star.u - width),
        sample(s, &star, star.u + width),
    );
    worst = worst
        .max(rel(cl.p, cr.p))
        .max((cl.u - cr.u).abs() / (1.0 + star.u.abs()));
    for (outer, wave, left) in [
        (s.left, star.left_wave, true),
        (s.right, star.right_wave, false),
    ] {
        let inner = Primitive::new(
            if left { star.rho_left } else { star.rho_right },
            star.u,
            star.p,
        );
        match wave {
            Wave::Shock { speed } => worst = worst.max(rankine_hugoniot(outer, inner, speed, g)),
            Wave::Rarefaction { head, tail } => {
                let sign = if left { 1.0 } else { -1.0 };
                let invariant = |w: Primitive| w.u + sign * 2.0 * w.sound_speed(g) / (g - 1.0);
                let entropy = |w: Primitive| w.p / w.rho.powf(g);
                for f in [0.0, 0.25, 0.5, 0.75, 1.0] {
                    let w = sample(s, &star, head + f * (tail - head));
                    let i0 = invariant(outer);
                    worst =
                        worst.max((invariant(w) - i0).abs() / (i0.abs() + outer.sound_speed(g)));
                    worst = worst.max(rel(entropy(w), entropy(outer)));
                }
            }
        }
    }
    worst
}

/// Random state pair that does not create vacuum.
pub fn random_riemann_state(r: &mut ChaCha8Rng) -> RiemannState {
    loop {
        let mut s = RiemannState::sod();
        s.left = Primitive::new(
            r.random_range(0.1..10.0),
            r.random_range(-2.0..2.0),
            r.random_range(0.05..20.0),
        );
        s.right = Primitive::new(
            r.random_range(0.1..10.0),
            r.random_range(-2.0..2.0),
            r.random_range(0.05..20.0),
        );
        if s.validate().is_ok() {
            return s;
        }
    }
}

// ---- structural reductions ----

/// Random shapes, parameters and inputs for one forward-pass comparison.
pub fn random_forward_case(
    r: &mut ChaCha8Rng,
    layers: usize,
) -> (FusionConfig, NetworkParams, DenseTensor, DenseTensor) {
    let cfg = FusionConfig {
        layers,
        width: r.random_range(1..9),
        branch_inputs: r.random_range(1..4),
        coord_dim: r.random_range(1..4),
        n_vars: r.random_range(1..4),
        latent: r.random_range(1..7),
        fusion_enabled: true,
        condition_last_hidden: r.random_bool(0.5),
        harmonics: r.random_range(0..3),
        rowdy_scale: r.random_range(0.5..10.0),
        seed: 0,
    };
    let params = random_params(&cfg, r);
    let n = r.random_range(1..5);
    let pts = r.random_range(1..8);
    let xb = random_tensor(&[n, cfg.branch_inputs], r, -1.0, 1.0);
    let xt = random_tensor(&[n, pts, cfg.coord_dim], r, -1.0, 1.0);
    (cfg, params, xb, xt)
}

/// `(|fusion_L2 - vanilla|_max, |fusion_ones - vanilla|_max)` for one random case.
pub fn reduction_errors(r: &mut ChaCha8Rng) -> (f64, f64) {
    use fdon_core::operators::{fusion_forward, fusion_forward_injected, vanilla_forward};
    let (mut cfg, params, xb, xt) = random_forward_case(r, 2);
    // with two layers the last-hidden option would condition layer one
    cfg.condition_last_hidden = false;
    let two = fusion_forward(&params, &cfg, &xb, &xt).unwrap();
    let plain = vanilla_forward(&params, &cfg, &xb, &xt).unwrap();
    let e_two = two.max_abs_diff(&plain);

    let layers = r.random_range(3..7);
    let (cfg, params, xb, xt) = random_forward_case(r, layers);
    let ones: Vec<DenseTensor> = (0..cfg.conditioned_layers())
        .map(|_| DenseTensor::filled(&[xb.rows(), cfg.width], 1.0))
        .collect();
    let injected = fusion_forward_injected(&params, &cfg, &xb, &xt, &ones).unwrap();
    let plain = vanilla_forward(&params, &cfg, &xb, &xt).unwrap();
    (e_two, injected.max_abs_diff(&plain))
}

// ---- SVD / POD identities ----

pub struct SvdIdentities {
    /// `|sum sigma^2 - ||A||_F^2| / ||A||_F^2`.
    pub frobenius: f64,
    /// `|1 - sum energy|`.
    pub energy: f64,
    /// Worst over truncation ranks of `|err^2 - tail^2| / ||A_c||_F^2`.
    pub eckart_young: f64,
    /// Largest deviation of `Phi^T Phi` from the identity.
    pub orthonormality: f64,
}

/// Identities on a random `points x samples` ensemble.
pub fn svd_identities(r: &mut ChaCha8Rng, points: usize, samples: usize) -> SvdIdentities {
    use fdon_core::analysis::layer_svd_spectrum;
    use fdon_core::operators::pod_fit_basis;
    let a = random_tensor(&[points, samples], r, -2.0, 2.0);
    let fro: f64 = a.data().iter().map(|v| v * v).sum();
    let spec = layer_svd_spectrum(&[(1, 0, a.clone())]).unwrap();
    let e = &spec.entries[0];
    let frobenius = (e.sigma.iter().map(|s| s * s).sum::<f64>() - fro).abs() / fro;
    let energy = (1.0 - e.energy.iter().sum::<f64>()).abs();

    // snapshots as samples: targets[s, p, 0] = a[p, s]
    let mut t = vec![0.0; samples * points];
    for p in 0..points {
        for s in 0..samples {
            t[s * points + p] = a.get(&[p, s]);
        }
    }
    let targets = DenseTensor::new(vec![samples, points, 1], t).unwrap();
    let mut eckart_young = 0.0f64;
    let mut orthonormality = 0.0f64;
    for latent in 1..=samples.min(points) {
        let basis = pod_fit_basis(&targets, latent).unwrap();
        let sv = &basis.singular_values[0];
        let centred: f64 = sv.iter().map(|s| s * s).sum();
        let tail: f64 = sv[latent..].iter().map(|s| s * s).sum();
        let mut err = 0.0;
        for s in 0..samples {
            let sample = DenseTensor::new(
                vec![points, 1],
                targets.data()[s * points..(s + 1) * points].to_vec(),
            )
            .unwrap();
            let rec = basis.reconstruct(&basis.project(&sample).unwrap());
            err += rec
                .data()
                .iter()
                .zip(sample.data())
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>();
        }
        eckart_young = eckart_young.max((err - tail).abs() / centred);
        for i in 0..latent {
            for j in 0..latent {
                let dot: f64 = (0..points)
                    .map(|p| basis.modes.get(&[p, i]) * basis.modes.get(&[p, j]))
                    .sum();
                orthonormality = orthonormality.max((dot - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
    }
    SvdIdentities {
        frobenius,
        energy,
        eckart_young,
        orthonormality,
    }
}

// ---- LSD exactness ----

/// Largest per-component error of the LSD gradient of a random affine field
/// on a random `points`-point cloud in the unit square.
pub fn lsd_affine_error(r: &mut ChaCha8Rng, points: usize, k: usize) -> f64 {
    use fdon_core::losses::{knn_neighbors, lsd_gradient};
    let coords = random_tensor(&[points, 2], r, 0.0, 1.0);
    let (c0, gx, gy) = (
        r.random_range(-5.0..5.0),
        r.random_range(-5.0..5.0),
        r.random_range(-5.0..5.0),
    );
    let field: Vec<f64> = (0..points)
        .map(|i| c0 + gx * coords.get(&[i, 0]) + gy * coords.get(&[i, 1]))
        .collect();
    let table = knn_neighbors(&coords, k).unwrap();
    let est = lsd_gradient(&field, &coords, &table).unwrap();
    assert!(est.rank_deficient().is_empty());
    (0..points)
        .flat_map(|i| {
            [
                (est.grads.get(&[i, 0]) - gx).abs(),
                (est.grads.get(&[i, 1]) - gy).abs(),
            ]
        })
        .fold(0.0, f64::max)
}

// ---- nozzle ----

/// `(max |residual|, min of y over a fine sweep minus y(throat))` for one triple.
/// A throat minimum shows up as a non-negative second component (up to round-off).
pub fn nozzle_check(h_i: f64, h_o: f64, x_t: f64) -> (f64, f64) {
    use fdon_core::geomdata::{nozzle_coeffs, NozzleParams};
    let p = NozzleParams::new(h_i, h_o, x_t);
    let wall = nozzle_coeffs(&p).unwrap();
    let residual = wall
        .residuals(&p)
        .iter()
        .fold(0.0f64, |m, r| m.max(r.abs()));
    let at_throat = wall.eval(p.throat_x()).abs();
    let sweep = (0..=10_000)
        .map(|i| wall.eval(p.length * i as f64 / 10_000.0).abs())
        .fold(f64::INFINITY, f64::min);
    (residual, sweep - at_throat)
}

// ---- heat flux ----

/// `(computed, closed form)` total flux of `T = x^2 + y^2`, `kappa = 1`, through a
/// circle of radius `r` centred at the origin.
pub fn circle_flux(r: f64, segments: usize, nodes: usize) -> (f64, f64) {
    use fdon_core::analysis::{circle_boundary, heat_flux_total, HeatFluxSegment};
    let segs: Vec<HeatFluxSegment> = circle_boundary([0.0, 0.0], r, segments, nodes)
        .into_iter()
        .map(|(pts, normals)| {
            let grads: Vec<[f64; 2]> = pts.iter().map(|p| [2.0 * p[0], 2.0 * p[1]]).collect();
            HeatFluxSegment::from_gradients(pts, normals, &grads, 1.0).unwrap()
        })
        .collect();
    let total = heat_flux_total(&segs).unwrap().total;
    (total, -(2.0 * r) * (std::f64::consts::TAU * r))
}

/// Worst `|trapezoid - exact|` over random straight segments carrying an
/// integrand linear in arclength.
pub fn trapezoid_linear_error(r: &mut ChaCha8Rng, trials: usize) -> f64 {
    use fdon_core::analysis::{heat_flux_segment, HeatFluxSegment};
    (0..trials)
        .map(|_| {
            let nodes = r.random_range(2..9);
            let a = [r.random_range(-3.0..3.0), r.random_range(-3.0..3.0)];
            let th: f64 = r.random_range(0.0..std::f64::consts::TAU);
            let dir = [th.cos(), th.sin()];
            let mut s: Vec<f64> = (0..nodes).map(|_| r.random_range(0.0..2.0)).collect();
            s.sort_by(f64::total_cmp);
            s.dedup();
            let (c0, c1, kappa) = (
                r.random_range(-2.0..2.0),
                r.random_range(-2.0..2.0),
                r.random_range(0.1..3.0),
            );
            let pts: Vec<[f64; 2]> = s
                .iter()
                .map(|t| [a[0] + t * dir[0], a[1] + t * dir[1]])
                .collect();
            let normal = [-dir[1], dir[0]];
            let vals: Vec<f64> = s.iter().map(|t| c0 + c1 * t).collect();
            if pts.len() < 2 {
                return 0.0;
            }
            let seg = HeatFluxSegment::new(pts, vec![normal; s.len()], vals, kappa).unwrap();
            let (s0, s1) = (s[0], s[s.len() - 1]);
            let exact = -kappa * (c0 * (s1 - s0) + 0.5 * c1 * (s1 * s1 - s0 * s0));
            (heat_flux_segment(&seg).unwrap() - exact).abs()
        })
        .fold(0.0, f64::max)
}
