#![allow(clippy::needless_range_loop)]

mod common;

use common::{
    bisection_star, nozzle_check, random_riemann_state, random_tensor, riemann_invariant_violation,
    rng,
};
use fdon_core::geomdata::{
    decode_dataset, ellipse_mask, encode_dataset, leblanc_cases, leblanc_dataset, lhs_sample,
    nozzle_coeffs, pad_irregular, read_dataset, riemann_exact, split_indices, star_state, stratum,
    synth_field, synth_field_dataset, synth_gradients, to_physical, write_dataset, EllipseParams,
    HeightConvention, IrregularSample, LeblancSpec, NozzleParams, OperatorDataset, Primitive,
    RiemannState, SynthSpec, UniformGrid, NOZZLE_TEST, NOZZLE_TRAIN,
};
use fdon_core::losses::mse_masked;
use fdon_core::{DenseTensor, Error};
use proptest::prelude::*;

#[test]
fn lhs_examples() {
    let one = lhs_sample(&[(2.0, 3.0), (-1.0, 1.0)], 1, 4).unwrap();
    assert!((2.0..=3.0).contains(&one.get(&[0, 0])) && (-1.0..=1.0).contains(&one.get(&[0, 1])));

    let ranges = [(13.06, 20.0), (40.0, 60.0), (5.0, 8.0)];
    let s = lhs_sample(&ranges, 60, 11).unwrap();
    for i in 0..60 {
        for (d, (lo, hi)) in ranges.iter().enumerate() {
            assert!((*lo..=*hi).contains(&s.get(&[i, d])));
        }
    }
    assert_eq!(s, lhs_sample(&ranges, 60, 11).unwrap());
    assert!(lhs_sample(&ranges, 0, 1).is_err());
    assert!(lhs_sample(&[(1.0, 1.0)], 3, 1).is_err());
}

#[test]
fn ellipse_mask_examples() {
    let grid = UniformGrid::ellipse_default();
    let m = ellipse_mask(&EllipseParams::new(2.0, 1.0).unwrap(), &grid);
    assert_eq!(m[0], 1.0);
    assert_eq!(m[grid.len() - 1], 1.0);

    // the semi-ellipse centre sits at the origin: the nearest node with x <= 0 is inside
    let k = (0..grid.len())
        .filter(|&k| grid.node(k).0 <= 0.0)
        .min_by(|&a, &b| {
            let (xa, ya) = grid.node(a);
            let (xb, yb) = grid.node(b);
            xa.hypot(ya).total_cmp(&xb.hypot(yb))
        })
        .unwrap();
    assert_eq!(m[k], 0.0);

    let unit = ellipse_mask(&EllipseParams::new(1.0, 1.0).unwrap(), &grid);
    let zeros = unit.iter().filter(|&&v| v == 0.0).count() as f64;
    let area = zeros * grid.cell_area();
    assert!(
        (area - std::f64::consts::FRAC_PI_2).abs() / std::f64::consts::FRAC_PI_2 < 0.02,
        "area {area}"
    );

    assert!(EllipseParams::new(0.2, 1.0).is_err());
    assert!(EllipseParams::new(1.0, 2.0).is_err());
}

#[test]
fn nozzle_examples() {
    let w = nozzle_coeffs(&NozzleParams {
        convention: HeightConvention::Literal,
        ..NozzleParams::new(2.0, 2.0, 0.55)
    })
    .unwrap();
    assert!((w.coeffs[0] - 1.0).abs() < 1e-12 && w.coeffs[1..].iter().all(|c| c.abs() < 1e-12));
    for x in [0.0, 2.5, 7.0] {
        assert_eq!(w.lower(x), -w.eval(x));
    }

    let p = NozzleParams::new(3.86, 2.03, 0.58);
    let w = nozzle_coeffs(&p).unwrap();
    assert!(w.residuals(&p).iter().all(|r| r.abs() <= 1e-9));
    // the interpolant is unique: an independent solve in the shifted basis
    // (x - x_t)^k must describe the same polynomial
    let xt = p.throat_x();
    let shifted = shifted_quintic(&p);
    for i in 0..=20 {
        let x = 10.0 * i as f64 / 20.0;
        let s: f64 = shifted
            .iter()
            .enumerate()
            .map(|(k, c)| c * (x - xt).powi(k as i32))
            .sum();
        assert!((s - w.eval(x)).abs() < 1e-9);
    }

    let bad = NozzleParams {
        x_t: 0.0,
        ..NozzleParams::new(3.0, 2.0, 0.5)
    };
    assert!(matches!(nozzle_coeffs(&bad), Err(Error::Contract(_))));
}

/// Gaussian elimination with partial pivoting on the constraint system in the
/// basis `(x - x_t)^k`.
fn shifted_quintic(p: &NozzleParams) -> [f64; 6] {
    let xt = p.throat_x();
    let xs = p.abscissae();
    let ys = p.ordinates();
    let mut a = [[0.0f64; 7]; 6];
    for i in 0..3 {
        let d = xs[i] - xt;
        for k in 0..6 {
            a[2 * i][k] = d.powi(k as i32);
            a[2 * i + 1][k] = if k == 0 {
                0.0
            } else {
                k as f64 * d.powi(k as i32 - 1)
            };
        }
        a[2 * i][6] = ys[i];
    }
    for c in 0..6 {
        let piv = (c..6)
            .max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))
            .unwrap();
        a.swap(c, piv);
        for r in 0..6 {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..7 {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    std::array::from_fn(|k| a[k][6] / a[k][k])
}

#[test]
fn nozzle_table_walls() {
    for row in NOZZLE_TRAIN.iter().chain(NOZZLE_TEST.iter()) {
        let (res, margin) = nozzle_check(row[0], row[1], row[2]);
        assert!(res <= 1e-9, "{row:?}: residual {res:e}");
        assert!(margin >= -1e-12, "{row:?}: throat not minimal ({margin:e})");
        let p = NozzleParams::new(row[0], row[1], row[2]);
        let w = nozzle_coeffs(&p).unwrap();
        for x in p.abscissae() {
            assert!(w.slope(x).abs() < 1e-9);
        }
    }
    assert_eq!(NOZZLE_TRAIN.len() + NOZZLE_TEST.len(), 60);
}

#[test]
fn riemann_examples() {
    let mut same = RiemannState::sod();
    same.right = same.left;
    let x: Vec<f64> = (0..21).map(|i| i as f64 / 20.0).collect();
    for w in riemann_exact(&same, &x, 0.2).unwrap() {
        assert!((w.rho - 1.0).abs() < 1e-12 && w.u.abs() < 1e-12 && (w.p - 1.0).abs() < 1e-12);
    }

    let sod = RiemannState::sod();
    let star = star_state(&sod).unwrap();
    let (p, u) = bisection_star(&sod);
    assert!((star.p - p).abs() <= 1e-10 * p && (star.u - u).abs() <= 1e-10 * u.abs());
    assert!((star.p - 0.30313).abs() < 1e-5 && (star.u - 0.92745).abs() < 1e-5);

    for p_l in [1e9, 1e10] {
        let s = RiemannState::leblanc(p_l);
        let x: Vec<f64> = (0..401).map(|i| -20.0 + 0.1 * i as f64).collect();
        for w in riemann_exact(&s, &x, 1e-4).unwrap() {
            assert!(
                w.rho.is_finite() && w.p.is_finite() && w.u.is_finite() && w.rho > 0.0 && w.p > 0.0
            );
        }
    }

    let mut vacuum = RiemannState::sod();
    vacuum.left.u = -50.0;
    vacuum.right.u = 50.0;
    assert!(matches!(star_state(&vacuum), Err(Error::Contract(_))));
    let mut neg = RiemannState::sod();
    neg.left = Primitive::new(-1.0, 0.0, 1.0);
    assert!(star_state(&neg).is_err());
    assert!(riemann_exact(&RiemannState::sod(), &[0.5], 0.0).is_err());
}

#[test]
fn riemann_jump_conditions() {
    let mut r = rng(77);
    for _ in 0..20 {
        let s = random_riemann_state(&mut r);
        let v = riemann_invariant_violation(&s);
        assert!(v <= 1e-8, "{s:?}: {v:e}");
    }
    for p_l in [1e9, 1e10] {
        let v = riemann_invariant_violation(&RiemannState::leblanc(p_l));
        assert!(v <= 1e-8, "p_l={p_l}: {v:e}");
    }
}

#[test]
fn leblanc_examples() {
    let spec = LeblancSpec {
        points: 32,
        ..Default::default()
    };
    let p = spec.pressures();
    assert_eq!(p.len(), 500);
    assert_eq!((p[0], p[499]), (1e9, 1e10));
    let gap = p[1] - p[0];
    assert!(p
        .windows(2)
        .all(|w| ((w[1] - w[0]) - gap).abs() < 1e-6 * gap));

    let (tr, te) = split_indices(500, 400, 3);
    assert_eq!((tr.len(), te.len()), (400, 100));
    let mut all: Vec<usize> = tr.iter().chain(&te).copied().collect();
    all.sort();
    assert_eq!(all, (0..500).collect::<Vec<_>>());

    let small = LeblancSpec {
        cases: 10,
        train: 8,
        points: 32,
        ..Default::default()
    };
    let (train, test) = leblanc_dataset(&small, 1).unwrap();
    assert_eq!((train.len(), test.len()), (8, 2));
    assert_eq!(train.n_vars(), 3);
    let all = leblanc_cases(&small).unwrap();
    assert_eq!(all.branch.get(&[0, 0]), 0.0);
    assert!((all.branch.get(&[9, 0]) - 1.0).abs() < 1e-15);

    // log targets round-trip through the physical transform
    let s = RiemannState::leblanc(small.pressures()[3]);
    let exact = riemann_exact(&s, &small.grid(), small.t_f).unwrap();
    let phys = to_physical(&all.sample_targets(3)).unwrap();
    for (row, w) in exact.iter().enumerate() {
        assert!((phys.get(&[row, 0]) - w.rho).abs() <= 1e-12 * w.rho);
        assert!((phys.get(&[row, 2]) - w.p).abs() <= 1e-12 * w.p);
        assert_eq!(phys.get(&[row, 1]), w.u);
    }
    assert!(leblanc_cases(&LeblancSpec { train: 0, ..small }).is_err());
}

#[test]
fn synth_examples() {
    let params = DenseTensor::from_rows(&[&[0.3, 0.7], &[0.9, 0.1]]).unwrap();
    let smooth = SynthSpec {
        steepness: 0.0,
        ..SynthSpec::default()
    };
    for (x, y) in [(0.1, -0.4), (0.8, 0.8)] {
        let (v, _) = synth_field(params.row(0), x, y, 0.0);
        let w = 0.5 * std::f64::consts::PI * 1.3;
        let want = 0.5 * (w * x).sin() * (0.5 * std::f64::consts::PI * y).cos() + 0.3 * 0.7 * x * y;
        assert!((v - want).abs() < 1e-14);
    }

    // two densities share every node of the coarse grid
    let coarse = synth_field_dataset(
        &params,
        &SynthSpec {
            nx: 5,
            ny: 5,
            ..smooth
        },
        0,
    )
    .unwrap();
    let fine = synth_field_dataset(
        &params,
        &SynthSpec {
            nx: 9,
            ny: 9,
            ..smooth
        },
        0,
    )
    .unwrap();
    for j in 0..5 {
        for k in 0..5 {
            let (c, f) = (j * 5 + k, 2 * j * 9 + 2 * k);
            assert_eq!(coarse.targets.get(&[1, c, 0]), fine.targets.get(&[1, f, 0]));
        }
    }

    // closed-form gradient vs central differences of the emitted values
    let spec = SynthSpec {
        nx: 6,
        ny: 6,
        jitter: 0.3,
        ..SynthSpec::default()
    };
    let ds = synth_field_dataset(&params, &spec, 5).unwrap();
    let grads = synth_gradients(&ds, spec.steepness);
    let h = 1e-5;
    for i in 0..2 {
        let c = ds.sample_coords(i);
        for r in 0..ds.points() {
            let (x, y) = (c.get(&[r, 0]), c.get(&[r, 1]));
            let f = |x: f64, y: f64| synth_field(ds.branch.row(i), x, y, spec.steepness).0;
            let fd = [
                (f(x + h, y) - f(x - h, y)) / (2.0 * h),
                (f(x, y + h) - f(x, y - h)) / (2.0 * h),
            ];
            for d in 0..2 {
                let g = grads.get(&[i, r, d]);
                assert!((g - fd[d]).abs() < 1e-6 * g.abs().max(1.0));
            }
        }
    }
}

fn irregular(r: &mut rand_chacha::ChaCha8Rng, n: usize) -> IrregularSample {
    IrregularSample {
        branch: vec![n as f64],
        coords: random_tensor(&[n, 2], r, -1.0, 1.0),
        targets: random_tensor(&[n, 3], r, -1.0, 1.0),
    }
}

#[test]
fn padding_examples() {
    let mut r = rng(2);
    let same = vec![irregular(&mut r, 4), irregular(&mut r, 4)];
    let ds = pad_irregular(&same).unwrap();
    assert_eq!(ds.points(), 4);
    assert!(ds.mask.as_ref().unwrap().data().iter().all(|&v| v == 1.0));
    assert_eq!(ds.sample_coords(1), same[1].coords);

    let mixed = vec![irregular(&mut r, 5), irregular(&mut r, 8)];
    let ds = pad_irregular(&mixed).unwrap();
    assert_eq!(ds.points(), 8);
    let c = ds.sample_coords(0);
    let t = ds.sample_targets(0);
    for row in 5..8 {
        assert_eq!(c.row(row), mixed[0].coords.row(4));
        assert_eq!(t.row(row), mixed[0].targets.row(4));
    }
    assert_eq!(
        ds.sample_mask(0).unwrap(),
        &[1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0]
    );
    assert!(pad_irregular(&[]).is_err());
}

#[test]
fn masked_loss_ignores_pad_content() {
    let mut r = rng(6);
    let ds = pad_irregular(&[irregular(&mut r, 3), irregular(&mut r, 7)]).unwrap();
    let pred = random_tensor(&[2 * 7, 3], &mut r, -1.0, 1.0);
    let truth = ds.targets.clone().reshape(&[14, 3]).unwrap();
    let mask = ds.mask.as_ref().unwrap().data();
    let base = mse_masked(&pred, &truth, Some(mask)).unwrap();
    let mut other = truth.clone();
    for row in 3..7 {
        for v in 0..3 {
            other.set(&[row, v], 1e6 * (row + v) as f64);
        }
    }
    assert_eq!(mse_masked(&pred, &other, Some(mask)).unwrap(), base);
}

#[test]
fn file_errors() {
    let mut r = rng(1);
    let ds = pad_irregular(&[irregular(&mut r, 3), irregular(&mut r, 5)]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.fdon");
    write_dataset(&ds, &path).unwrap();
    assert_eq!(read_dataset(&path).unwrap(), ds);

    let bytes = std::fs::read(&path).unwrap();
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(
        decode_dataset(&bad, &path),
        Err(Error::BadMagic { .. })
    ));
    let mut bad = bytes.clone();
    bad[4] = 9;
    assert!(matches!(
        decode_dataset(&bad, &path),
        Err(Error::Version { .. })
    ));
    assert!(matches!(
        decode_dataset(&bytes[..bytes.len() - 3], &path),
        Err(Error::Truncated { .. })
    ));
    assert!(matches!(
        decode_dataset(&bytes[..10], &path),
        Err(Error::Truncated { .. })
    ));
    assert!(matches!(
        read_dataset(&dir.path().join("missing")),
        Err(Error::Io { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lhs_stratified(n in 1usize..80, dims in 1usize..5, seed in any::<u64>()) {
        let ranges: Vec<(f64, f64)> = (0..dims).map(|d| (-(d as f64) - 1.0, 2.0 * d as f64 + 0.5)).collect();
        let s = lhs_sample(&ranges, n, seed).unwrap();
        for (d, &(lo, hi)) in ranges.iter().enumerate() {
            let mut seen = vec![0; n];
            for i in 0..n {
                seen[stratum(s.get(&[i, d]), lo, hi, n)] += 1;
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
        }
    }

    #[test]
    fn dataset_round_trip_is_bitwise(
        n in 1usize..5, pts in 1usize..9, np in 1usize..4, nc in 1usize..4, nv in 1usize..4,
        masked in any::<bool>(), seed in any::<u64>(),
    ) {
        let mut r = rng(seed);
        let mut weird = random_tensor(&[n, pts, nv], &mut r, -1e300, 1e300);
        weird.data_mut()[0] = -0.0;
        let mask = masked.then(|| random_tensor(&[n, pts], &mut r, 0.0, 1.0).map(|v| v.round()));
        let ds = OperatorDataset::new(
            random_tensor(&[n, np], &mut r, -1.0, 1.0),
            random_tensor(&[n, pts, nc], &mut r, -1.0, 1.0),
            weird,
            mask,
        ).unwrap();
        let back = decode_dataset(&encode_dataset(&ds), std::path::Path::new("mem")).unwrap();
        let bits = |t: &DenseTensor| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back.targets), bits(&ds.targets));
        prop_assert_eq!(bits(&back.coords), bits(&ds.coords));
        prop_assert_eq!(bits(&back.branch), bits(&ds.branch));
        prop_assert_eq!(back.mask.as_ref().map(bits), ds.mask.as_ref().map(bits));
    }
}
