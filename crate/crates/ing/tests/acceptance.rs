//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use ing::cli::{cmd_eval, EvalArgs};
use ing::logits::parse_logits;
use ing::manifest::{Manifest, ManifestImage};
use ing::mask::read_mask;
use ing::raster::{decode_raster, encode_raster, read_raster, write_raster, Raster};
use ing::synth::{self, ShiftSpec, SynthSpec, METHOD_INVERTED, METHOD_PERFECT};
use ing_core::importance::{removal_order, select_threshold_subset};
use ing_core::metrics::{spearman_rho, threshold_check, ThresholdKind};
use ing_core::otdd::{otdd_distance, sinkhorn, uniform_weights, LabeledPointCloud, OtddSettings, SinkhornParams};
use ing_core::planner::enumerate_plan;
use ing_core::{
    linalg::Matrix, Aggregation, AttributionMap, ClassMode, CoveragePolicy, Direction, ImageRecord, LogitRecord,
    MetricId, PartAnnotation, PartId, PartImportance, PartSet,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:?}"))
}

// ---------------------------------------------------------------- planner

fn brute_plan(parts: &[u8], budget: usize) -> Vec<Vec<u8>> {
    let mut sorted = parts.to_vec();
    sorted.sort();
    let mut all: Vec<Vec<u8>> = (1..1u32 << sorted.len())
        .map(|bits| (0..sorted.len()).filter(|i| bits >> i & 1 == 1).map(|i| sorted[i]).collect())
        .collect();
    all.sort_by(|a: &Vec<u8>, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    all.truncate(budget);
    all
}

fn planner_oracle() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut cases = 0;
    for p in 1..=6usize {
        for budget in 1..=40 {
            let mut pool: Vec<u8> = (1..=255).collect();
            pool.shuffle(&mut rng);
            let parts: Vec<PartId> = pool[..p].iter().map(|&x| PartId(x)).collect();
            let got = enumerate_plan(&parts, budget);
            if budget < p {
                ensure(got.is_err(), || format!("P={p} budget={budget}: expected an error"))?;
            } else {
                let got: Vec<Vec<u8>> = got
                    .map_err(|e| e.to_string())?
                    .iter()
                    .map(|s| s.ids().iter().map(|q| q.0).collect())
                    .collect();
                let raw: Vec<u8> = parts.iter().map(|q| q.0).collect();
                ensure(got == brute_plan(&raw, budget), || format!("P={p} budget={budget} differs"))?;
            }
            cases += 1;
        }
    }
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("{cases} cases in {:.2?}", start.elapsed()))
}

// --------------------------------------------------------------- spearman

fn oracle_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&a| {
            let below = x.iter().filter(|&&b| b < a).count() as f64;
            let equal = x.iter().filter(|&&b| b == a).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

fn oracle_pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

fn spearman_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst, mut undefined) = (0.0f64, 0);
    for case in 0..1000 {
        let n = rng.gen_range(2..=10);
        // small value pools force ties
        let pool = rng.gen_range(2..=12);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0..pool) as f64 * 0.7).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-(pool as i32)..pool as i32) as f64 / 3.0).collect();
        let got = spearman_rho(&x, &y).map_err(|e| e.to_string())?;
        let want = oracle_pearson(&oracle_ranks(&x), &oracle_ranks(&y));
        match (got, want) {
            (Some(a), Some(b)) => {
                worst = worst.max((a - b).abs());
                ensure((a - b).abs() <= 1e-10, || format!("case {case}: {a} vs {b}"))?;
            }
            (None, None) => undefined += 1,
            (a, b) => return Err(format!("case {case}: {a:?} vs {b:?}")),
        }
    }
    Ok(format!("1000 vectors, max error {worst:.1e}, {undefined} constant"))
}

// --------------------------------------------------------------- identities

fn random_record(rng: &mut ChaCha8Rng, k: usize) -> ImageRecord {
    let p = rng.gen_range(1..=5u8);
    let parts: Vec<u8> = (1..=p).collect();
    let (h, w) = (3, 6);
    let mut mask: Vec<u8> = (0..h * w).map(|_| rng.gen_range(0..=p)).collect();
    mask[..p as usize].copy_from_slice(&parts);
    let id = format!("r{k}");
    let ann = PartAnnotation::from_mask(id.as_str(), h, w, mask).unwrap();
    let mut variants = Vec::new();
    for bits in 0..1u32 << p {
        let s = PartSet::from_ids((0..p).filter(|i| bits >> i & 1 == 1).map(|i| PartId(i + 1))).unwrap();
        let l: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        variants.push(LogitRecord::new(id.as_str(), s, l, 3).unwrap());
    }
    let values: Vec<f32> = (0..h * w).map(|_| rng.gen_range(-3i32..8) as f32 * 0.5).collect();
    let attr = AttributionMap::new(id.as_str(), "m", ClassMode::Predicted, h, w, values).unwrap();
    ImageRecord::new(ann, rng.gen_range(0..3), variants, [attr]).unwrap()
}

fn metric_identities() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut fixtures = 0;
    for _ in 0..100 {
        let records: Vec<ImageRecord> = (0..rng.gen_range(1..12)).map(|k| random_record(&mut rng, k)).collect();
        let pis: Vec<PartImportance> = records
            .iter()
            .map(|r| {
                let a = r.attribution("m", ClassMode::Predicted).unwrap();
                ing_core::importance::aggregate(a, r.annotation(), Aggregation::SumPerPart).unwrap()
            })
            .collect();
        for t in [0.05, 0.2, 0.4, 0.6, 0.8, 0.95] {
            for dir in [Direction::LeastFirst, Direction::MostFirst] {
                let run = |kind| threshold_check(&records, &pis, &[t], dir, kind, CoveragePolicy::FailMissing);
                let pc = run(ThresholdKind::Preservation).map_err(|e| e.to_string())?.value.unwrap();
                let dc = run(ThresholdKind::Deletion).map_err(|e| e.to_string())?.value.unwrap();
                ensure(pc + dc == 100.0, || format!("t={t}: {pc} + {dc} != 100"))?;
            }
        }
        fixtures += 1;
    }
    let grid: Vec<f64> = (1..20).map(|i| i as f64 / 20.0).collect();
    for case in 0..1000 {
        let n = rng.gen_range(1..=8u8);
        let values: Vec<(PartId, f64)> = (1..=n).map(|i| (PartId(i), rng.gen_range(-4i32..10) as f64 * 0.25)).collect();
        let pi = PartImportance::from_values("x", "m", ClassMode::Predicted, Aggregation::SumPerPart, values).unwrap();
        for dir in [Direction::LeastFirst, Direction::MostFirst] {
            let order = removal_order(&pi, dir);
            let mut prev = 0;
            for &t in &grid {
                let s = select_threshold_subset(&pi, t, dir);
                let mut prefix: Vec<PartId> = order[..s.len()].to_vec();
                prefix.sort();
                ensure(prefix == s.ids() && s.len() >= prev, || format!("case {case}: not a growing prefix at t={t}"))?;
                prev = s.len();
            }
        }
    }
    Ok(format!("PC+DC=100 on {fixtures} fixtures, prefix property on 1000 vectors"))
}

// ------------------------------------------------------------- synthetic e2e

fn eval_args(manifest: &Path, out: PathBuf, workers: usize) -> EvalArgs {
    EvalArgs {
        manifest: manifest.to_owned(),
        config: None,
        thresholds: None,
        class_mode: None,
        aggregation: None,
        coverage: None,
        score_fn: None,
        accuracy_reference: None,
        methods: None,
        workers: Some(workers),
        out,
    }
}

fn synthetic_end_to_end() -> Check {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let spec = SynthSpec::default();
    ensure(spec.images == 20 && spec.min_parts == 3 && spec.max_parts == 5, || "unexpected fixture spec".into())?;
    let manifest = synth::generate(&spec).write(dir.path()).map_err(|e| e.to_string())?;
    let rep = cmd_eval(&eval_args(&manifest, dir.path().join("out"), 0)).map_err(|e| format!("{e:#}"))?;
    let mut notes = Vec::new();
    for mode in ClassMode::ALL {
        let v = |m, method| {
            rep.result(m, method, mode)
                .and_then(|r| r.value)
                .ok_or_else(|| format!("{m} {method} {} missing", mode.as_str()))
        };
        let sd_p = v(MetricId::Sd, METHOD_PERFECT)?;
        let sd_i = v(MetricId::Sd, METHOD_INVERTED)?;
        ensure((sd_p - 100.0).abs() <= 0.01, || format!("SD perfect {sd_p}"))?;
        ensure(sd_i.abs() <= 0.01, || format!("SD inverted {sd_i}"))?;
        let (pp, pn) = (v(MetricId::PerturbPositive, METHOD_PERFECT)?, v(MetricId::PerturbNegative, METHOD_PERFECT)?);
        let (ip, inn) = (v(MetricId::PerturbPositive, METHOD_INVERTED)?, v(MetricId::PerturbNegative, METHOD_INVERTED)?);
        ensure(pp < pn, || format!("perfect: positive {pp} !< negative {pn}"))?;
        ensure(ip > inn, || format!("inverted: positive {ip} !> negative {inn}"))?;
        notes.push(format!("{}: SD {sd_p:.2}/{sd_i:.2} pos<neg {pp:.1}<{pn:.1}", mode.as_str()));
    }
    within(start.elapsed(), Duration::from_secs(5))?;
    Ok(format!("{} in {:.2?}", notes.join("; "), start.elapsed()))
}

// ----------------------------------------------------------- sinkhorn vs LP

/// Minimum-cost perfect assignment (Hungarian method with potentials).
fn assignment(cost: &[Vec<f64>]) -> f64 {
    let n = cost.len();
    let (mut u, mut v) = (vec![0.0; n + 1], vec![0.0; n + 1]);
    let (mut p, mut way) = (vec![0usize; n + 1], vec![0usize; n + 1]);
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let (mut delta, mut j1) = (f64::INFINITY, 0);
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (1..=n).map(|j| cost[p[j] - 1][j - 1]).sum()
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Exact transport cost between uniform weights: replicate rows and columns
/// to a common count and solve the assignment problem, whose optimum is a
/// vertex of the transport polytope.
fn exact_uniform_ot(c: &Matrix) -> f64 {
    let (n, m) = (c.rows(), c.cols());
    let l = n / gcd(n, m) * m;
    let big: Vec<Vec<f64>> = (0..l).map(|a| (0..l).map(|b| c[(a / (l / n), b / (l / m))]).collect()).collect();
    assignment(&big) / l as f64
}

fn brute_force_assignment(c: &Matrix) -> f64 {
    fn go(c: &Matrix, row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
        if row == c.rows() {
            *best = best.min(acc);
            return;
        }
        for j in 0..c.cols() {
            if !used[j] {
                used[j] = true;
                go(c, row + 1, used, acc + c[(row, j)], best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    go(c, 0, &mut vec![false; c.cols()], 0.0, &mut best);
    best / c.rows() as f64
}

fn sinkhorn_vs_lp() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let params = SinkhornParams {
        epsilon: 1e-4,
        ..SinkhornParams::default()
    };
    let mut worst = 0.0f64;
    for case in 0..50 {
        let (n, m) = (rng.gen_range(1..=6), rng.gen_range(1..=6));
        let data: Vec<f64> = (0..n * m).map(|_| rng.gen_range(0.0..1.0)).collect();
        let c = Matrix::from_row_major(n, m, data).map_err(|e| e.to_string())?;
        let exact = exact_uniform_ot(&c);
        if n == m {
            // cross-check the oracle itself
            let brute = brute_force_assignment(&c);
            ensure((brute - exact).abs() <= 1e-12, || format!("case {case}: oracles disagree"))?;
        }
        let r = sinkhorn(&c, &uniform_weights(n), &uniform_weights(m), &params).map_err(|e| e.to_string())?;
        let rel = (r.cost - exact).abs() / exact;
        worst = worst.max(rel);
        ensure(rel <= 0.01, || format!("case {case} ({n}x{m}): {} vs exact {exact}", r.cost))?;
    }
    within(start.elapsed(), Duration::from_secs(30))?;
    Ok(format!("50 instances, max relative error {worst:.1e}, {:.2?}", start.elapsed()))
}

// ---------------------------------------------------------------- OTDD

fn random_cloud(rng: &mut ChaCha8Rng, name: &str, n: usize, d: usize, classes: usize) -> LabeledPointCloud {
    let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
    let labels = (0..n).map(|i| i % classes).collect();
    LabeledPointCloud::new(name, &pts, labels).unwrap()
}

fn otdd_properties() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let s = OtddSettings::default();
    let err = |e: ing_core::Error| e.to_string();
    let (mut self_max, mut shift_max) = (0.0f64, 0.0f64);
    for case in 0..20 {
        let d = rng.gen_range(1..4);
        let (n, m) = (rng.gen_range(1..10), rng.gen_range(1..10));
        let a = random_cloud(&mut rng, "a", n, d, 2);
        let b = random_cloud(&mut rng, "b", m, d, 3);
        let ab = otdd_distance(&a, &b, &s).map_err(err)?;
        let ba = otdd_distance(&b, &a, &s).map_err(err)?;
        ensure(ab.distance.to_bits() == ba.distance.to_bits(), || format!("case {case}: asymmetric"))?;
        let aa = otdd_distance(&a, &a, &s).map_err(err)?.distance;
        self_max = self_max.max(aa);
        ensure(aa <= 1e-6, || format!("case {case}: self distance {aa}"))?;
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let fixed = OtddSettings {
            epsilon: Some(ab.epsilon),
            ..s
        };
        let moved = otdd_distance(&a.translated(&v).map_err(err)?, &b.translated(&v).map_err(err)?, &fixed).map_err(err)?;
        shift_max = shift_max.max((moved.distance - ab.distance).abs());
        ensure((moved.distance - ab.distance).abs() <= 1e-6, || format!("case {case}: translation moved it"))?;
    }
    for d in [0.25, 1.0, 4.0] {
        let a = LabeledPointCloud::new("a", &[vec![0.0, 0.0]], vec![0]).map_err(err)?;
        let b = LabeledPointCloud::new("b", &[vec![0.0, d]], vec![0]).map_err(err)?;
        let r = otdd_distance(&a, &b, &s).map_err(err)?.distance;
        ensure((r - 2.0 * d * d).abs() <= 0.01 * 2.0 * d * d, || format!("single points at {d}: {r}"))?;
    }
    Ok(format!("self max {self_max:.1e}, translation max {shift_max:.1e}, single points within 1%"))
}

fn directional_alignment() -> Check {
    let start = Instant::now();
    let spec = ShiftSpec::default();
    ensure(spec.images == 60 && spec.classes == 3, || "unexpected shift spec".into())?;
    let [orig, masked, inpainted] = synth::shift_datasets(&spec).clouds(8);
    let s = OtddSettings::default();
    let m = otdd_distance(&orig, &masked, &s).map_err(|e| e.to_string())?;
    let i = otdd_distance(&orig, &inpainted, &s).map_err(|e| e.to_string())?;
    ensure(m.distance > i.distance, || format!("masked {} !> inpainted {}", m.distance, i.distance))?;
    Ok(format!(
        "masked {:.4} > inpainted {:.4} (converged {}/{}), {:.2?}",
        m.distance,
        i.distance,
        m.converged,
        i.converged,
        start.elapsed()
    ))
}

// -------------------------------------------------------------- protocol

fn random_manifest(rng: &mut ChaCha8Rng) -> Manifest {
    let word = |rng: &mut ChaCha8Rng, n: usize| -> String {
        (0..rng.gen_range(1..=n)).map(|_| rng.gen_range(b'a'..=b'z') as char).collect()
    };
    let mut m = Manifest::new(format!("{} é\"\\\n", word(rng, 8)), word(rng, 6), rng.gen_range(1..50));
    for k in 0..rng.gen_range(0..5) {
        let parts: Vec<u8> = (1..=rng.gen_range(1..=6u8)).collect();
        let plan = enumerate_plan(&parts.iter().map(|&p| PartId(p)).collect::<Vec<_>>(), 32).unwrap();
        let keys: Vec<String> = plan.iter().map(PartSet::key).collect();
        let mut variant_logit_files = BTreeMap::from([("orig".to_owned(), format!("l/{k}.json"))]);
        for key in keys.iter().filter(|_| rng.gen_bool(0.5)) {
            variant_logit_files.insert(key.clone(), format!("l/{k}_{key}.json"));
        }
        let mut attribution_files = BTreeMap::new();
        for _ in 0..rng.gen_range(0..3) {
            let mut modes = BTreeMap::new();
            for mode in ClassMode::ALL {
                if rng.gen_bool(0.7) {
                    modes.insert(mode, word(rng, 10));
                }
            }
            attribution_files.insert(word(rng, 5), modes);
        }
        m.images.push(ManifestImage {
            image_id: format!("{k}_{}", word(rng, 6)),
            ground_truth_label: rng.gen_range(0..m.class_count),
            mask_file: word(rng, 9),
            part_ids: parts,
            plan: keys,
            variant_logit_files,
            attribution_files,
            embedding_file: rng.gen_bool(0.3).then(|| word(rng, 4)),
        });
    }
    m
}

/// Every case must be rejected with a message naming the file.
fn malformed_cases(dir: &Path) -> Result<usize, String> {
    let good = encode_raster(&Raster::new(2, 2, vec![0.5; 4]))?;
    let mut raster_cases: Vec<(&str, Vec<u8>)> = Vec::new();
    let mut b = good.clone();
    b[..4].copy_from_slice(b"XXXX");
    raster_cases.push(("magic.ingf", b));
    raster_cases.push(("empty.ingf", Vec::new()));
    raster_cases.push(("header.ingf", good[..10].to_vec()));
    raster_cases.push(("short.ingf", good[..good.len() - 2].to_vec()));
    let mut b = good.clone();
    b[16..20].copy_from_slice(&f32::NAN.to_le_bytes());
    raster_cases.push(("nan.ingf", b));
    let mut b = good.clone();
    b[12..16].copy_from_slice(&f32::NEG_INFINITY.to_le_bytes());
    raster_cases.push(("inf.ingf", b));
    let mut b = good.clone();
    b.extend_from_slice(&[0, 0, 0, 0]);
    raster_cases.push(("long.ingf", b));
    let mut n = 0;
    for (name, bytes) in raster_cases {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| e.to_string())?;
        let e = read_raster(&path).err().ok_or(format!("{name} accepted"))?.to_string();
        ensure(e.contains(name) && e.contains("offset"), || format!("{name}: weak diagnostic {e:?}"))?;
        n += 1;
    }

    let masks: Vec<(&str, Box<dyn Fn(&Path) -> image::ImageResult<()>>)> = vec![
        ("zero.png", Box::new(|p| image::GrayImage::new(3, 3).save(p))),
        ("rgb.png", Box::new(|p| image::RgbImage::from_pixel(3, 3, image::Rgb([1, 2, 3])).save(p))),
        ("gray16.png", Box::new(|p| image::ImageBuffer::<image::Luma<u16>, _>::from_pixel(3, 3, image::Luma([2u16])).save(p))),
        ("graya.png", Box::new(|p| image::GrayAlphaImage::from_pixel(3, 3, image::LumaA([1, 255])).save(p))),
        ("garbage.png", Box::new(|p| fs::write(p, b"\x89PNG nonsense").map_err(image::ImageError::IoError))),
    ];
    for (name, make) in masks {
        let path = dir.join(name);
        make(&path).map_err(|e| e.to_string())?;
        let e = read_mask(&path, "x").err().ok_or(format!("{name} accepted"))?.to_string();
        ensure(e.contains(name), || format!("{name}: weak diagnostic {e:?}"))?;
        n += 1;
    }

    let logits = [
        r#"{"image_id":"a","subset":"orig","logits":[0.1,0.9,0.2]}"#,
        r#"{"image_id":"a","subset":"orig","logits":[NaN,0.9]}"#,
        r#"{"image_id":"a","subset":"orig","logits":["NaN",0.9]}"#,
        r#"{"image_id":"a","subset":"orig","logits":[1e400,0.9]}"#,
        r#"{"image_id":"a","subset":"3-1","logits":[0.1,0.9]}"#,
        r#"{"image_id":"a","subset":"","logits":[0.1,0.9]}"#,
        r#"{"image_id":"a","subset":"orig"}"#,
        r#"{"image_id":"a","subset":"orig","logits":[]}"#,
        "not json",
    ];
    for (i, text) in logits.iter().enumerate() {
        let path = dir.join(format!("logits{i}.json"));
        let e = parse_logits(text, &path, 2).err().ok_or(format!("logits case {i} accepted"))?.to_string();
        ensure(e.contains(&format!("logits{i}.json")), || format!("logits case {i}: weak diagnostic {e:?}"))?;
        n += 1;
    }

    let manifests = [
        r#"{"schema_version":1,"dataset_name":"x","class_count":2,"images":[],"extra":true}"#,
        r#"{"schema_version":2,"dataset_name":"x","class_count":2,"images":[]}"#,
        r#"{"schema_version":1,"dataset_name":"x","class_count":0,"images":[]}"#,
        r#"{"schema_version":1,"dataset_name":"x","class_count":2,"images":[{"image_id":"a","ground_truth_label":0,"mask_file":"missing.png","part_ids":[1]}]}"#,
        r#"{"schema_version":1,"dataset_name":"x","class_count":2,"images":[{"image_id":"a","ground_truth_label":5,"mask_file":"m.png","part_ids":[1]}]}"#,
        r#"{"schema_version":1,"dataset_name":"x","class_count":2,"images":[{"image_id":"a","ground_truth_label":0,"mask_file":"m.png","part_ids":[]}]}"#,
        r#"{"schema_version":1,"dataset_name":"x","class_count":2,"images":[{"image_id":"a","ground_truth_label":0,"mask_file":"m.png","part_ids":[1],"plan":["1-2"]}]}"#,
        r#"{"schema_version":1,"dataset_name":"x","class_count":2"#,
    ];
    fs::write(dir.join("m.png"), b"").map_err(|e| e.to_string())?;
    for (i, text) in manifests.iter().enumerate() {
        let path = dir.join(format!("manifest{i}.json"));
        fs::write(&path, text).map_err(|e| e.to_string())?;
        let e = Manifest::load(&path).err().ok_or(format!("manifest case {i} accepted"))?.to_string();
        ensure(e.contains(&format!("manifest{i}.json")), || format!("manifest case {i}: weak diagnostic {e:?}"))?;
        n += 1;
    }
    Ok(n)
}

fn protocol_round_trips() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for case in 0..1000 {
        let (h, w) = (rng.gen_range(0..12), rng.gen_range(0..12));
        let values: Vec<f32> = (0..h * w)
            .map(|_| loop {
                let v = f32::from_bits(rng.gen());
                if v.is_finite() {
                    break v;
                }
            })
            .collect();
        let r = Raster::new(h, w, values);
        let path = dir.path().join("r.ingf");
        write_raster(&path, &r).map_err(|e| e.to_string())?;
        let back = read_raster(&path).map_err(|e| e.to_string())?;
        let bits = |r: &Raster| r.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        ensure((back.height, back.width) == (h, w) && bits(&back) == bits(&r), || format!("raster case {case}"))?;
        let bytes = fs::read(&path).map_err(|e| e.to_string())?;
        ensure(encode_raster(&back)? == bytes, || format!("raster case {case}: re-encode differs"))?;
        let again = decode_raster(&bytes, &path).map_err(|e| e.to_string())?;
        ensure(bits(&again) == bits(&r), || format!("raster case {case}: decode differs"))?;
    }
    for case in 0..1000 {
        let m = random_manifest(&mut rng);
        let path = dir.path().join("manifest.json");
        m.save(&path).map_err(|e| e.to_string())?;
        let text = fs::read_to_string(&path).map_err(|e| e.to_string())?;
        let back = Manifest::from_json(&text, &path).map_err(|e| e.to_string())?;
        ensure(back == m && back.to_json() == text, || format!("manifest case {case}"))?;
    }
    let rejected = malformed_cases(dir.path())?;
    Ok(format!("1000 rasters and 1000 manifests bit-identical, {rejected} malformed inputs rejected"))
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let manifest = synth::generate(&SynthSpec::default()).write(&dir.path().join("data")).map_err(|e| e.to_string())?;
    let mut outputs: Vec<BTreeMap<String, Vec<u8>>> = Vec::new();
    for workers in [1, 4, 16] {
        let out = dir.path().join(format!("w{workers}"));
        cmd_eval(&eval_args(&manifest, out.clone(), workers)).map_err(|e| format!("{e:#}"))?;
        let mut files = BTreeMap::new();
        for entry in fs::read_dir(&out).map_err(|e| e.to_string())? {
            let entry = entry.map_err(|e| e.to_string())?;
            files.insert(
                entry.file_name().to_string_lossy().into_owned(),
                fs::read(entry.path()).map_err(|e| e.to_string())?,
            );
        }
        outputs.push(files);
    }
    ensure(outputs[0].len() == 5, || format!("expected 5 output files, got {}", outputs[0].len()))?;
    ensure(outputs[1] == outputs[0] && outputs[2] == outputs[0], || "outputs differ across worker counts".into())?;
    Ok(format!("{} files byte-identical for workers 1, 4, 16", outputs[0].len()))
}

fn main() -> ExitCode {
    let checks: [(&str, fn() -> Check); 9] = [
        ("planner oracle", planner_oracle),
        ("spearman oracle", spearman_oracle),
        ("metric identities", metric_identities),
        ("synthetic end-to-end fidelity", synthetic_end_to_end),
        ("sinkhorn vs exact LP", sinkhorn_vs_lp),
        ("OTDD properties", otdd_properties),
        ("directional alignment (masked > inpainted)", directional_alignment),
        ("protocol round-trips", protocol_round_trips),
        ("determinism across worker counts", determinism),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
