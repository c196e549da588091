//! Acceptance gate: every criterion prints one PASS/FAIL line; the process
//! exits nonzero if any fails.

mod common;

use std::panic;
use std::time::Instant;

use common::{brute_force_svp, random_integer_basis, rel, rng};
use lramimo::bounds::{hermite_constant, proximity_bound_sic, bound_rows, bound_table_csv};
use lramimo::detect::{Detector, DetectorKind};
use lramimo::experiments::{
    ber_csv, never_wrong_way, proximity_csv, run_ber, run_proximity, sample_basis, BerConfig,
    Ensemble, ProximityConfig,
};
use lramimo::lattice::{compute_gso, project_block, Basis};
use lramimo::mimo::{sample_channel, sample_symbols, trial_seed, unit_noise, Constellation, Stream};
use lramimo::reduction::{
    bkz_reduce_detailed, lll_reduce, svp_enumerate, ReductionMethod, ReductionParams,
};
use num_rational::Ratio;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok { Ok(()) } else { Err(msg()) }
}

fn closed_form_bound() -> Outcome {
    for (m, want) in [(2, 20.0 / 9.0), (4, 7168.0 / 729.0)] {
        let got = proximity_bound_sic(m, 2).map_err(|e| e.to_string())?.value;
        ensure(rel(got, want) <= 1e-12, || format!("m={m}: {got:?} vs {want:?}"))?;
    }
    Ok("(2,2) = 20/9 and (4,2) = 7168/729 to 1e-12".into())
}

fn empirical_bound() -> Outcome {
    let mut checked = 0u64;
    let mut worst = 0.0f64;
    for ensemble in [Ensemble::Gaussian, Ensemble::Integer] {
        for m in 2..=6 {
            for beta in 2..=m {
                let report = run_proximity(&ProximityConfig::new(m, beta, 500, ensemble, 2024))
                    .map_err(|e| e.to_string())?;
                ensure(report.violations.is_empty(), || {
                    let v = &report.violations[0];
                    format!("{ensemble} m={m} beta={beta} seed={} i={} ratio {:?} > {:?}", v.seed, v.i, v.ratio, v.bound)
                })?;
                let sup = report.per_index_empirical_sup.iter().cloned().fold(0.0, f64::max);
                worst = worst.max(sup / report.theorem_bound);
                checked += 500 * m as u64;
            }
        }
    }
    Ok(format!("{checked} ratios, no violations; largest sup/bound {worst:.4}"))
}

fn reduction_correctness() -> Outcome {
    let mut worst_block = 0.0f64;
    let mut worst_det = 0.0f64;
    for seed in 0..1000u64 {
        let m = 2 + (seed % 7) as usize;
        let beta = 2 + (seed as usize / 7) % (m - 1);
        let ensemble = if seed % 2 == 0 { Ensemble::Gaussian } else { Ensemble::Integer };
        let b = sample_basis(ensemble, m, trial_seed(3, seed, Stream::Basis)).map_err(|e| e.to_string())?;
        let params = ReductionParams::with_beta(beta);

        let lll = lll_reduce(&b, &params).map_err(|e| e.to_string())?;
        let g = compute_gso(&lll).map_err(|e| e.to_string())?;
        for i in 0..m {
            for j in 0..i {
                ensure(g.mu[i][j].abs() <= 0.5 + 1e-9, || format!("seed {seed}: |mu[{i}][{j}]| = {}", g.mu[i][j].abs()))?;
            }
        }
        for k in 1..m {
            let lhs = 0.99 * g.norms_sq[k - 1];
            let rhs = g.norms_sq[k] + g.mu[k][k - 1].powi(2) * g.norms_sq[k - 1];
            ensure(lhs <= rhs * (1.0 + 1e-9), || format!("seed {seed}: Lovász fails at {k}"))?;
        }

        let bkz = bkz_reduce_detailed(&b, &params).map_err(|e| e.to_string())?;
        ensure(bkz.converged, || format!("seed {seed}: BKZ did not converge"))?;
        let g = compute_gso(&bkz.basis).map_err(|e| e.to_string())?;
        for k in 0..m - 1 {
            let block = project_block(&bkz.basis, k..(k + beta).min(m)).map_err(|e| e.to_string())?;
            let lambda = svp_enumerate(&block).map_err(|e| e.to_string())?.norm_sq;
            let d = rel(g.norms_sq[k], lambda);
            worst_block = worst_block.max(d);
            ensure(d <= 1e-8, || format!("seed {seed} m={m} beta={beta} k={k}: |b_k*|^2 {:?} vs lambda^2 {lambda:?}", g.norms_sq[k]))?;
        }
        for out in [&lll, &bkz.basis] {
            let d = rel(out.gram_determinant(), b.gram_determinant());
            worst_det = worst_det.max(d);
            ensure(d <= 1e-8, || format!("seed {seed}: Gram determinant drift {d:e}"))?;
        }
    }
    Ok(format!("1000 bases; worst block mismatch {worst_block:.1e}, worst Gram drift {worst_det:.1e}"))
}

fn svp_equivalence() -> Outcome {
    let mut r = rng(4);
    let mut checked = 0;
    let mut skipped = 0;
    while checked < 300 {
        let m = 1 + checked % 5;
        let v = random_integer_basis(&mut r, m, 9);
        let Some(oracle) = brute_force_svp(&v, 2e6) else {
            skipped += 1;
            continue;
        };
        let got = svp_enumerate(&Basis::new(v).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        ensure(got.norm_sq == oracle, || format!("instance {checked}: {:?} vs brute force {oracle:?}", got.norm_sq))?;
        checked += 1;
    }
    Ok(format!("300 integer instances, m <= 5, exact norm match ({skipped} oversized boxes redrawn)"))
}

fn detector_equivalence() -> Outcome {
    let c = Constellation::qam(4).map_err(|e| e.to_string())?;
    let p = ReductionParams::default();
    for (n, count) in [(2usize, 100u64), (4, 100)] {
        for t in 0..count {
            let ch = sample_channel(n, n, trial_seed(5, t, Stream::Channel)).map_err(|e| e.to_string())?;
            let sent = sample_symbols(n, &c, trial_seed(5, t, Stream::Symbols));
            let x: Vec<_> = sent.iter().map(|&k| c.point(k)).collect();
            let sigma = [0.2, 0.7, 1.5][t as usize % 3];
            let y: Vec<_> = ch
                .apply(&x)
                .iter()
                .zip(unit_noise(n, trial_seed(5, t, Stream::Noise)))
                .map(|(a, e)| a + e * sigma)
                .collect();
            let run = |kind| Detector::new(&ch, &c, kind, &p).and_then(|d| d.detect(&y, sigma));
            let a = run(DetectorKind::MlSphere).map_err(|e| e.to_string())?;
            let b = run(DetectorKind::MlExhaustive).map_err(|e| e.to_string())?;
            ensure(a.symbols == b.symbols, || format!("{n}x{n} trial {t}: sphere {:?} vs exhaustive {:?}", a.indices, b.indices))?;
        }
    }
    Ok("200 QPSK instances (100 at 2x2, 100 at 4x4), identical symbols".into())
}

fn zero_noise() -> Outcome {
    let kinds: Vec<DetectorKind> = "ml,ml-exhaustive,zf,mmse,sic,lra-lll,lra-bkz,lra-kz"
        .split(',')
        .map(|s| s.parse().unwrap())
        .collect();
    let p = ReductionParams::with_beta(2);
    for t in 0..100u64 {
        let n_tx = 1 + (t % 4) as usize;
        let n_rx = n_tx + (t / 4 % 2) as usize;
        let order = [4, 16, 64][(t / 8 % 3) as usize];
        let c = Constellation::qam(order).map_err(|e| e.to_string())?;
        let ch = sample_channel(n_rx, n_tx, trial_seed(6, t, Stream::Channel)).map_err(|e| e.to_string())?;
        let sent = sample_symbols(n_tx, &c, trial_seed(6, t, Stream::Symbols));
        let x: Vec<_> = sent.iter().map(|&k| c.point(k)).collect();
        let y = ch.apply(&x);
        for &kind in &kinds {
            if kind.is_ml() && !lramimo::detect::ml_admissible(&c, n_tx) {
                continue;
            }
            let got = Detector::new(&ch, &c, kind, &p)
                .and_then(|d| d.detect(&y, 0.0))
                .map_err(|e| e.to_string())?;
            ensure(got.indices == sent, || format!("{kind} trial {t}: {:?} vs sent {sent:?}", got.indices))?;
        }
    }
    Ok("100 instances x 8 detectors recover the sent vector at sigma = 0".into())
}

fn ber_ordering() -> Outcome {
    let config = BerConfig {
        n_tx: 4,
        n_rx: 4,
        order: 4,
        detectors: vec![
            DetectorKind::MlSphere,
            DetectorKind::LraSic(ReductionMethod::Bkz),
            DetectorKind::Sic,
        ],
        snr_db: vec![20.0],
        trials: 10_000,
        master_seed: 7,
        reduction: ReductionParams::with_beta(4),
        threads: 0,
    };
    let curves = run_ber(&config).map_err(|e| e.to_string())?;
    let k: Vec<u64> = curves.iter().map(|c| c.points[0].vec_errors).collect();
    let n = config.trials;
    let (ml, lra, sic) = ((k[0], n), (k[1], n), (k[2], n));
    ensure(never_wrong_way(ml, lra) && never_wrong_way(lra, sic) && never_wrong_way(ml, sic), || {
        format!("vector errors ml={} lra-bkz={} sic={}", k[0], k[1], k[2])
    })?;
    Ok(format!(
        "vector error rates ml={:.4} lra-bkz(4)={:.4} sic={:.4}",
        k[0] as f64 / n as f64,
        k[1] as f64 / n as f64,
        k[2] as f64 / n as f64
    ))
}

fn hermite_table() -> Outcome {
    let powers: [(usize, u64, u64); 9] = [
        (1, 1, 1),
        (2, 4, 3),
        (3, 2, 1),
        (4, 4, 1),
        (5, 8, 1),
        (6, 64, 3),
        (7, 64, 1),
        (8, 256, 1),
        (24, 1 << 48, 1),
    ];
    for (beta, num, den) in powers {
        let h = hermite_constant(beta).map_err(|e| e.to_string())?;
        ensure(h.power_form == Some(Ratio::new(num, den)), || format!("beta={beta}: {:?}", h.power_form))?;
    }
    let ratio = |b: &Basis| -> Result<f64, String> {
        let lambda = svp_enumerate(b).map_err(|e| e.to_string())?.norm_sq;
        Ok(lambda / b.gram_determinant().powf(1.0 / b.rank() as f64))
    };
    let hex = Basis::new(vec![vec![1.0, 0.0], vec![0.5, 3f64.sqrt() / 2.0]]).map_err(|e| e.to_string())?;
    let g2 = hermite_constant(2).map_err(|e| e.to_string())?.value;
    let h = ratio(&hex)?;
    ensure(rel(h, g2) <= 1e-9, || format!("hexagonal {h:?} vs {g2:?}"))?;
    let mut e8 = vec![vec![0.0; 8]; 8];
    e8[0][0] = 2.0;
    for i in 1..7 {
        e8[i][i - 1] = -1.0;
        e8[i][i] = 1.0;
    }
    e8[7] = vec![0.5; 8];
    let e8 = Basis::new(e8).map_err(|e| e.to_string())?;
    let g8 = hermite_constant(8).map_err(|e| e.to_string())?.value;
    let h = ratio(&e8)?;
    ensure(rel(h, g8) <= 1e-9, || format!("E8 {h:?} vs {g8:?}"))?;
    Ok("exact powers for beta in 1..8 and 24; hexagonal and E8 oracles within 1e-9".into())
}

fn determinism() -> Outcome {
    let prox = |threads| {
        let mut reports = Vec::new();
        for beta in 2..=4 {
            let mut c = ProximityConfig::new(4, beta, 200, Ensemble::Gaussian, 9);
            c.threads = threads;
            reports.push(run_proximity(&c).map_err(|e| e.to_string())?);
        }
        Ok::<_, String>(proximity_csv(&reports))
    };
    ensure(prox(1)? == prox(0)?, || "proximity CSV differs between runs".into())?;
    let ber = |threads| {
        let config = BerConfig {
            n_tx: 2,
            n_rx: 3,
            order: 16,
            detectors: "ml,zf,mmse,sic,lra-lll,lra-bkz,lra-kz".split(',').map(|s| s.parse().unwrap()).collect(),
            snr_db: vec![0.0, 10.0, 20.0, f64::INFINITY],
            trials: 1000,
            master_seed: 9,
            reduction: ReductionParams::default(),
            threads,
        };
        let curves = run_ber(&config).map_err(|e| e.to_string())?;
        Ok::<_, String>(ber_csv(&config, &curves))
    };
    ensure(ber(1)? == ber(0)?, || "BER CSV differs between runs".into())?;
    let table = || bound_rows(1..=8, 1..=8).map(|r| bound_table_csv(&r)).map_err(|e| e.to_string());
    ensure(table()? == table()?, || "bound table differs".into())?;
    Ok("proximity, BER and bound CSVs byte-identical across reruns and thread counts".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("theorem bound, closed form", closed_form_bound),
        ("theorem bound, empirical", empirical_bound),
        ("reduction correctness", reduction_correctness),
        ("SVP oracle equivalence", svp_equivalence),
        ("detector oracle equivalence", detector_equivalence),
        ("zero-noise exactness", zero_noise),
        ("BER ordering", ber_ordering),
        ("Hermite table", hermite_table),
        ("determinism", determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name} ({detail}) [{secs:.1}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name} ({why}) [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
