//! Graph builders for the branch and trunk sub-networks and their fusion.

use crate::error::{Error, Result};
use crate::netcore::{LatentDotSpec, NetworkParams, ParamKind, Subnet, Tape, Var};
use crate::operators::FusionConfig;
use crate::tensor::DenseTensor;

/// Branch activations `Z^1..Z^{L-1}` and the linear head `Z^L`.
pub struct BranchGraph {
    pub hidden: Vec<Var>,
    pub head: Var,
}

/// Trunk hidden outputs (after any conditioning) and the linear head.
pub struct TrunkGraph {
    pub hidden: Vec<Var>,
    pub head: Var,
}

fn layer_param(
    tape: &mut Tape,
    params: &NetworkParams,
    subnet: Subnet,
    layer: usize,
    kind: ParamKind,
) -> Result<Var> {
    let e = params
        .entry(subnet, layer, kind)
        .ok_or_else(|| Error::contract(format!("missing {kind:?} for {subnet:?} layer {layer}")))?;
    Ok(tape.param(params.flat(), e.offset, &e.shape))
}

fn dense_layer(
    tape: &mut Tape,
    params: &NetworkParams,
    cfg: &FusionConfig,
    subnet: Subnet,
    layer: usize,
    input: Var,
    activate: bool,
) -> Result<Var> {
    let w = layer_param(tape, params, subnet, layer, ParamKind::Weight)?;
    let b = layer_param(tape, params, subnet, layer, ParamKind::Bias)?;
    let pre = tape.linear(input, w, b)?;
    if !activate || cfg.harmonics == 0 {
        return Ok(if activate { tanh_only(tape, pre) } else { pre });
    }
    let a = layer_param(tape, params, subnet, layer, ParamKind::Rowdy)?;
    Ok(tape.rowdy(pre, a, cfg.rowdy_scale))
}

// harmonics == 0 degenerates to plain tanh: a Rowdy node with no coefficients.
fn tanh_only(tape: &mut Tape, pre: Var) -> Var {
    let empty = tape.leaf(DenseTensor::zeros(&[0]));
    tape.rowdy(pre, empty, 1.0)
}

pub fn branch_graph(
    tape: &mut Tape,
    params: &NetworkParams,
    cfg: &FusionConfig,
    xb: Var,
) -> Result<BranchGraph> {
    let depth = cfg.layers;
    let mut hidden = Vec::with_capacity(depth - 1);
    let mut h = xb;
    for l in 1..depth {
        h = dense_layer(tape, params, cfg, Subnet::Branch, l, h, true)?;
        hidden.push(h);
    }
    let head = dense_layer(tape, params, cfg, Subnet::Branch, depth, h, false)?;
    Ok(BranchGraph { hidden, head })
}

/// Running sums `S^0 = Z^1`, `S^m = Z^{m+1} + S^{m-1}`, as many as needed.
pub fn conditioning_graph(tape: &mut Tape, branch: &BranchGraph, count: usize) -> Result<Vec<Var>> {
    let mut s = Vec::with_capacity(count);
    for m in 0..count {
        let next = if m == 0 {
            branch.hidden[0]
        } else {
            tape.add(branch.hidden[m], s[m - 1])?
        };
        s.push(next);
    }
    Ok(s)
}

/// Trunk network on `xt` (rows = points). When `conditioning` is given, the
/// output of hidden layer `l` is multiplied by `conditioning[l - 1]`, one row
/// of which covers `group` consecutive trunk rows.
pub fn trunk_graph(
    tape: &mut Tape,
    params: &NetworkParams,
    cfg: &FusionConfig,
    xt: Var,
    conditioning: Option<(&[Var], usize)>,
) -> Result<TrunkGraph> {
    let depth = cfg.layers;
    let mut hidden = Vec::with_capacity(depth - 1);
    let mut h = xt;
    for l in 1..depth {
        h = dense_layer(tape, params, cfg, Subnet::Trunk, l, h, true)?;
        if let Some((s, group)) = conditioning {
            if let Some(&sv) = s.get(l - 1) {
                if tape.value(sv).cols() != tape.value(h).cols() {
                    return Err(Error::dim(
                        "fusion conditioning width",
                        tape.value(h).cols(),
                        tape.value(sv).cols(),
                    ));
                }
                h = tape.mul_grouped(h, sv, group)?;
            }
        }
        hidden.push(h);
    }
    let head = dense_layer(tape, params, cfg, Subnet::Trunk, depth, h, false)?;
    Ok(TrunkGraph { hidden, head })
}

/// Full operator graph. `xb` is `[N, N_p]`; `xt` is `[N * N_pts, N_c]`, or
/// `[N_pts, N_c]` shared by all samples (vanilla only).
pub fn operator_graph(
    tape: &mut Tape,
    params: &NetworkParams,
    cfg: &FusionConfig,
    xb: Var,
    xt: Var,
    points: usize,
    injected: Option<&[Var]>,
) -> Result<Var> {
    let samples = tape.value(xb).rows();
    let t_rows = tape.value(xt).rows();
    let shared_trunk = t_rows == points && samples != 1;
    if t_rows != points && t_rows != samples * points {
        return Err(Error::dim("trunk rows", samples * points, t_rows));
    }
    let branch = branch_graph(tape, params, cfg, xb)?;
    let n_cond = cfg.conditioned_layers();
    let trunk = if n_cond > 0 || injected.is_some() {
        if shared_trunk {
            return Err(Error::contract(
                "conditioned trunk needs per-sample coordinates [N, N_pts, N_c]",
            ));
        }
        let s = match injected {
            Some(s) => s.to_vec(),
            None => conditioning_graph(tape, &branch, n_cond)?,
        };
        trunk_graph(tape, params, cfg, xt, Some((&s, points)))?
    } else {
        trunk_graph(tape, params, cfg, xt, None)?
    };
    tape.latent_dot(
        branch.head,
        trunk.head,
        LatentDotSpec {
            samples,
            points,
            latent: cfg.latent,
            n_vars: cfg.n_vars,
            shared_trunk,
            trunk_per_var: false,
        },
    )
}

fn check_branch_input(cfg: &FusionConfig, xb: &DenseTensor) -> Result<usize> {
    if xb.rank() != 2 || xb.cols() != cfg.branch_inputs {
        return Err(Error::dim(
            "branch input",
            format!("[N, {}]", cfg.branch_inputs),
            format!("{:?}", xb.shape()),
        ));
    }
    xb.ensure_finite("branch input")?;
    Ok(xb.rows())
}

/// `(N, N_pts)` of a per-sample coordinate tensor.
fn check_trunk_input(cfg: &FusionConfig, xt: &DenseTensor) -> Result<(usize, usize)> {
    if xt.rank() != 3 || xt.cols() != cfg.coord_dim {
        return Err(Error::dim(
            "trunk input",
            format!("[N, N_pts, {}]", cfg.coord_dim),
            format!("{:?}", xt.shape()),
        ));
    }
    Ok((xt.shape()[0], xt.shape()[1]))
}

fn as_matrix(t: &DenseTensor) -> DenseTensor {
    t.clone()
        .reshape(&[t.rows(), t.cols()])
        .expect("same length")
}

/// Branch hidden outputs `Z^1..Z^{L-1}` and head `Z^L`.
pub fn branch_forward(
    params: &NetworkParams,
    cfg: &FusionConfig,
    xb: &DenseTensor,
) -> Result<(Vec<DenseTensor>, DenseTensor)> {
    check_branch_input(cfg, xb)?;
    let mut tape = Tape::new(params.len());
    let x = tape.leaf(xb.clone());
    let g = branch_graph(&mut tape, params, cfg, x)?;
    let hidden = g.hidden.iter().map(|&v| tape.value(v).clone()).collect();
    Ok((hidden, tape.value(g.head).clone()))
}

/// Unconditioned trunk hidden outputs `Y^1..Y^{L-1}`, each `[N, N_pts, n]`.
pub fn trunk_forward(
    params: &NetworkParams,
    cfg: &FusionConfig,
    xt: &DenseTensor,
) -> Result<Vec<DenseTensor>> {
    let (n, pts) = check_trunk_input(cfg, xt)?;
    let mut tape = Tape::new(params.len());
    let x = tape.leaf(as_matrix(xt));
    let g = trunk_graph(&mut tape, params, cfg, x, None)?;
    g.hidden
        .iter()
        .map(|&v| tape.value(v).clone().reshape(&[n, pts, cfg.width]))
        .collect()
}

/// Conditioned trunk hidden outputs `Y-hat^l` of a fusion network, each `[N, N_pts, n]`.
pub fn fusion_trunk_hidden(
    params: &NetworkParams,
    cfg: &FusionConfig,
    xb: &DenseTensor,
    xt: &DenseTensor,
) -> Result<Vec<DenseTensor>> {
    check_branch_input(cfg, xb)?;
    let (n, pts) = check_trunk_input(cfg, xt)?;
    let mut tape = Tape::new(params.len());
    let b = tape.leaf(xb.clone());
    let t = tape.leaf(as_matrix(xt));
    let branch = branch_graph(&mut tape, params, cfg, b)?;
    let s = conditioning_graph(&mut tape, &branch, cfg.conditioned_layers())?;
    let g = trunk_graph(&mut tape, params, cfg, t, Some((&s, pts)))?;
    g.hidden
        .iter()
        .map(|&v| tape.value(v).clone().reshape(&[n, pts, cfg.width]))
        .collect()
}

fn run_operator(
    params: &NetworkParams,
    cfg: &FusionConfig,
    xb: &DenseTensor,
    xt: &DenseTensor,
    injected: Option<&[DenseTensor]>,
) -> Result<DenseTensor> {
    let n = check_branch_input(cfg, xb)?;
    let points = match xt.rank() {
        3 => {
            let (nt, pts) = check_trunk_input(cfg, xt)?;
            if nt != n {
                return Err(Error::dim("trunk samples", n, nt));
            }
            pts
        }
        2 if xt.cols() == cfg.coord_dim => xt.rows(),
        _ => {
            return Err(Error::dim(
                "trunk input",
                format!(
                    "[N, N_pts, {}] or [N_pts, {}]",
                    cfg.coord_dim, cfg.coord_dim
                ),
                format!("{:?}", xt.shape()),
            ))
        }
    };
    let mut tape = Tape::new(params.len());
    let b = tape.leaf(xb.clone());
    let t = tape.leaf(as_matrix(xt));
    let inj: Option<Vec<Var>> = injected.map(|s| s.iter().map(|v| tape.leaf(v.clone())).collect());
    let out = operator_graph(&mut tape, params, cfg, b, t, points, inj.as_deref())?;
    tape.value(out).clone().reshape(&[n, points, cfg.n_vars])
}

/// Fusion-conditioned prediction, `[N, N_pts, n_v]`.
pub fn fusion_forward(
    params: &NetworkParams,
    cfg: &FusionConfig,
    xb: &DenseTensor,
    xt: &DenseTensor,
) -> Result<DenseTensor> {
    if !cfg.fusion_enabled {
        return Err(Error::contract(
            "fusion_forward called with fusion disabled",
        ));
    }
    run_operator(params, cfg, xb, xt, None)
}

/// Fusion forward pass with caller-supplied conditioning vectors in place of
/// the branch running sums (one `[N, n]` tensor per conditioned layer).
pub fn fusion_forward_injected(
    params: &NetworkParams,
    cfg: &FusionConfig,
    xb: &DenseTensor,
    xt: &DenseTensor,
    conditioning: &[DenseTensor],
) -> Result<DenseTensor> {
    run_operator(params, cfg, xb, xt, Some(conditioning))
}

/// Plain DeepONet prediction `U_s = sum_k B_{k,s} T_k`, `[N, N_pts, n_v]`.
/// `xt` may be `[N, N_pts, N_c]` or a shared grid `[N_pts, N_c]`.
pub fn vanilla_forward(
    params: &NetworkParams,
    cfg: &FusionConfig,
    xb: &DenseTensor,
    xt: &DenseTensor,
) -> Result<DenseTensor> {
    let cfg = FusionConfig {
        fusion_enabled: false,
        ..cfg.clone()
    };
    run_operator(params, &cfg, xb, xt, None)
}
