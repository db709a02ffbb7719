//! Acceptance suite: runs criteria 1 to 9 and prints one PASS/FAIL line per
//! criterion. Exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use qot_core::config::RunConfig;
use qot_core::neuralnet::{Mlp, Params};
use qot_core::pipelines::{self, EvaluationReport};
use qot_core::topology::Link;
use qot_core::{seed, Dataset, SlotRange, SpectrumState, Topology};
use rand::Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// 1 ------------------------------------------------------------------------

fn brute_force_first_fit(free: &[Vec<bool>], links: &[usize], count: usize) -> Option<usize> {
    let slots = free[0].len();
    (0..slots)
        .take_while(|&s| s + count <= slots)
        .find(|&s| links.iter().all(|&l| (s..s + count).all(|i| free[l][i])))
}

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let mut rng = seed::rng_for(1, "acceptance-first-fit", 0);
    let mut agree = 0;
    for _ in 0..1000 {
        let link_count = rng.random_range(1..=3);
        let slots = rng.random_range(1..=16);
        let mut state = SpectrumState::new(link_count, slots);
        let mut free = vec![vec![true; slots]; link_count];
        let mut id = 1;
        for (link, row) in free.iter_mut().enumerate() {
            let density: f64 = rng.random_range(0.0..0.8);
            for (s, cell) in row.iter_mut().enumerate() {
                if rng.random_bool(density) {
                    state
                        .allocate(&[link], SlotRange { start: s, count: 1 }, id)
                        .map_err(|e| e.to_string())?;
                    *cell = false;
                    id += 1;
                }
            }
        }
        let route: Vec<usize> = (0..rng.random_range(1..=link_count)).collect();
        let count = rng.random_range(1..=slots);
        if state.first_fit(&route, count).map(|r| r.start) == brute_force_first_fit(&free, &route, count) {
            agree += 1;
        }
    }
    let secs = started.elapsed().as_secs_f64();
    check(agree == 1000 && secs < 10.0, format!("{agree}/1000 agree in {secs:.2} s"))
}

// 2 ------------------------------------------------------------------------

fn simple_paths(adj: &[Vec<(usize, f64)>], stack: &mut Vec<usize>, target: usize, len: f64, out: &mut Vec<(f64, Vec<usize>)>) {
    let here = *stack.last().unwrap();
    if here == target {
        out.push((len, stack.clone()));
        return;
    }
    for &(next, w) in &adj[here] {
        if !stack.contains(&next) {
            stack.push(next);
            simple_paths(adj, stack, target, len + w, out);
            stack.pop();
        }
    }
}

fn criterion_2() -> Outcome {
    let mut rng = seed::rng_for(2, "acceptance-routing", 0);
    let (mut graphs_ok, mut pairs) = (0, 0);
    for _ in 0..200 {
        let n = rng.random_range(2..=8);
        let mut links = Vec::new();
        let mut seen = BTreeMap::new();
        for v in 1..n {
            let u = rng.random_range(0..v);
            seen.insert((u, v), ());
            links.push(Link { a: u, b: v, length_km: f64::from(rng.random_range(1..=5u32)) });
        }
        for _ in 0..rng.random_range(0..=n * (n - 1) / 2) {
            let (u, v) = (rng.random_range(0..n), rng.random_range(0..n));
            let key = (u.min(v), u.max(v));
            if u != v && seen.insert(key, ()).is_none() {
                links.push(Link { a: key.0, b: key.1, length_km: f64::from(rng.random_range(1..=5u32)) });
            }
        }
        let topology = Topology::new(n, links.clone()).map_err(|e| e.to_string())?;
        let mut adj = vec![Vec::new(); n];
        for l in &links {
            adj[l.a].push((l.b, l.length_km));
            adj[l.b].push((l.a, l.length_km));
        }
        let mut all_ok = true;
        for s in 0..n {
            for t in (0..n).filter(|&t| t != s) {
                let mut found = Vec::new();
                simple_paths(&adj, &mut vec![s], t, 0.0, &mut found);
                let best = found.iter().map(|f| f.0).fold(f64::INFINITY, f64::min);
                let expected = found.iter().filter(|f| f.0 == best).map(|f| f.1.clone()).min();
                let got = topology.shortest_path(s, t).map_err(|e| e.to_string())?;
                all_ok &= Some(got.nodes) == expected;
                pairs += 1;
            }
        }
        graphs_ok += usize::from(all_ok);
    }
    check(graphs_ok == 200, format!("{graphs_ok}/200 graphs agree ({pairs} node pairs)"))
}

// 3 ------------------------------------------------------------------------

fn reference_loss(p: &Params, dims: (usize, usize, usize), xs: &[Vec<f64>], ts: &[usize]) -> f64 {
    let (ni, nh, no) = dims;
    let mut total = 0.0;
    for (x, &t) in xs.iter().zip(ts) {
        let h: Vec<f64> = (0..nh)
            .map(|j| (p.b1[j] + (0..ni).map(|i| p.w1[j * ni + i] * x[i]).sum::<f64>()).max(0.0))
            .collect();
        let z: Vec<f64> = (0..no)
            .map(|k| p.b2[k] + (0..nh).map(|j| p.w2[k * nh + j] * h[j]).sum::<f64>())
            .collect();
        let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        total += z.iter().map(|v| (v - m).exp()).sum::<f64>().ln() + m - z[t];
    }
    total / xs.len() as f64
}

fn criterion_3() -> Outcome {
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut passed = 0;
    for case in 0..100 {
        let mut rng = seed::rng_for(3, "acceptance-gradient", case);
        let dims = (rng.random_range(1..=7), rng.random_range(1..=6), rng.random_range(2..=7));
        let mut model = Mlp::glorot(dims.0, dims.1, dims.2, &mut rng);
        for b in model.params.b1.iter_mut().chain(model.params.b2.iter_mut()) {
            *b = rng.random_range(-0.5..0.5);
        }
        let batch = rng.random_range(1..=8);
        let xs: Vec<Vec<f64>> = (0..batch)
            .map(|_| (0..dims.0).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let ts: Vec<usize> = (0..batch).map(|_| rng.random_range(0..dims.2)).collect();
        let (_, grads) = model.backward(&xs, &ts).map_err(|e| e.to_string())?;
        let (mut diff, mut na, mut nn) = (0.0, 0.0, 0.0);
        for t in 0..4 {
            for i in 0..model.params.tensors()[t].len() {
                let mut plus = model.params.clone();
                plus.tensors_mut()[t][i] += h;
                let mut minus = model.params.clone();
                minus.tensors_mut()[t][i] -= h;
                let numeric = (reference_loss(&plus, dims, &xs, &ts) - reference_loss(&minus, dims, &xs, &ts)) / (2.0 * h);
                let analytic = grads.tensors()[t][i];
                diff += (analytic - numeric) * (analytic - numeric);
                na += analytic * analytic;
                nn += numeric * numeric;
            }
        }
        let scale = na.sqrt() + nn.sqrt();
        let rel = if scale == 0.0 { 0.0 } else { diff.sqrt() / scale };
        worst = worst.max(rel);
        passed += usize::from(rel < 1e-4);
    }
    check(passed == 100, format!("{passed}/100 within 1e-4, worst relative error {worst:.2e}"))
}

// 4 to 7 -------------------------------------------------------------------

struct FullScale {
    k6: Dataset,
    central_k6: Vec<EvaluationReport>,
    central_k3: EvaluationReport,
    distributed: Vec<Vec<EvaluationReport>>,
}

const K6: &str = "1e-8,1e-7,5e-7,1e-6,1e-5,1e-4";
const K3: &str = "1e-8,1e-6,1e-4";
const TIMING_RUNS: usize = 3;

fn full_scale() -> Result<FullScale, String> {
    let err = |e: qot_core::Error| e.to_string();
    let mut config = RunConfig::default();
    config.set("requests", "20000").map_err(err)?;
    config.set("ber_thresholds", K6).map_err(err)?;
    let k6 = pipelines::generate_dataset(&config).map_err(err)?;
    let pipeline = config.pipeline(&config.training_hash(&k6.provenance.config_hash));
    let slices = k6.partition();
    let mut central_k6 = Vec::new();
    let mut distributed = Vec::new();
    for _ in 0..TIMING_RUNS {
        let d = pipelines::run_distributed(&slices, &pipeline, 1).map_err(err)?;
        distributed.push(d.into_iter().map(|o| o.report).collect());
        central_k6.push(pipelines::run_centralized(&k6, &pipeline).map_err(err)?.report);
    }

    config.set("ber_thresholds", K3).map_err(err)?;
    let k3 = pipelines::generate_dataset(&config).map_err(err)?;
    let pipeline3 = config.pipeline(&config.training_hash(&k3.provenance.config_hash));
    let central_k3 = pipelines::run_centralized(&k3, &pipeline3).map_err(err)?.report;
    Ok(FullScale { k6, central_k6, central_k3, distributed })
}

fn criterion_4(f: &FullScale) -> Outcome {
    let slices = f.k6.partition();
    let consistent = slices.iter().enumerate().all(|(i, d)| {
        d.patterns.iter().all(|p| p.slice == i + 1 && (p.binary == 1) == (p.class <= i + 1))
    });
    let sum: usize = slices.iter().map(Dataset::len).sum();
    check(
        consistent && sum == f.k6.len(),
        format!("{} patterns, sum of |D_k| = {sum}, labels consistent: {consistent}", f.k6.len()),
    )
}

fn criterion_5(f: &FullScale) -> Outcome {
    let reports = &f.distributed[0];
    let worst = reports
        .iter()
        .flat_map(|r| r.per_class.iter().map(move |a| (r.slice.unwrap_or(0), *a)))
        .map(|(k, a)| (k, a.unwrap_or(0.0)))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
    check(
        worst.1 >= 0.9 && reports.len() == 6,
        format!("minimum distributed per-class accuracy {:.2}% (slice {})", 100.0 * worst.1, worst.0),
    )
}

fn criterion_6(f: &FullScale) -> Outcome {
    let c6 = f.central_k6[0].min_per_class().unwrap_or(0.0);
    let c3 = f.central_k3.min_per_class().unwrap_or(0.0);
    let d6 = f.distributed[0]
        .iter()
        .filter_map(EvaluationReport::min_per_class)
        .fold(f64::INFINITY, f64::min);
    check(
        c6 < c3 && c6 < d6,
        format!(
            "centralized min per-class K=6 {:.2}% vs K=3 {:.2}%; distributed K=6 {:.2}%",
            100.0 * c6,
            100.0 * c3,
            100.0 * d6
        ),
    )
}

fn criterion_7(f: &FullScale) -> Outcome {
    let central: f64 = f
        .central_k6
        .iter()
        .map(|r| r.mean_fold_seconds().unwrap_or(f64::NAN))
        .sum::<f64>()
        / TIMING_RUNS as f64;
    let distributed: f64 = f
        .distributed
        .iter()
        .map(|run| {
            run.iter()
                .map(|r| r.mean_fold_seconds().unwrap_or(f64::NAN))
                .fold(0.0, f64::max)
        })
        .sum::<f64>()
        / TIMING_RUNS as f64;
    let ratio = distributed / central;
    check(
        ratio <= 0.7,
        format!("max slice {distributed:.3} s vs centralized {central:.3} s per training, ratio {ratio:.3}"),
    )
}

// 8 ------------------------------------------------------------------------

fn qotsim(args: &[&str]) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_qotsim"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if status.status.success() {
        Ok(())
    } else {
        Err(format!("qotsim {args:?} failed: {}", String::from_utf8_lossy(&status.stderr)))
    }
}

fn end_to_end(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let out = dir.to_str().ok_or("non-utf8 temp dir")?;
    let common = ["--requests", "3000", "--seed", "7", "--out", out];
    let with = |cmd: &[&'static str]| -> Vec<&str> { cmd.iter().copied().chain(common).collect() };
    qotsim(&with(&["generate"]))?;
    qotsim(&with(&["train", "centralized"]))?;
    qotsim(&with(&["train", "distributed"]))?;
    let mut reports = vec![format!("{out}/report_centralized.csv")];
    reports.extend((1..=6).map(|k| format!("{out}/report_slice_{k}.csv")));
    let comparison = format!("{out}/comparison.txt");
    let mut args = vec!["report", "--no-timing", "--output", comparison.as_str()];
    args.extend(reports.iter().map(String::as_str));
    qotsim(&args)?;

    let mut files = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        files.insert(name, std::fs::read(&path).map_err(|e| e.to_string())?);
    }
    Ok(files)
}

fn criterion_8() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let fa = end_to_end(a.path())?;
    let fb = end_to_end(b.path())?;
    let compared: Vec<&String> = fa.keys().filter(|n| !n.starts_with("timing_")).collect();
    let differing: Vec<&&String> = compared.iter().filter(|n| fa.get(**n) != fb.get(**n)).collect();
    let names_match = fa.keys().eq(fb.keys());
    check(
        names_match && differing.is_empty() && compared.len() >= 28,
        format!(
            "{} files compared byte-for-byte (wall-clock timing files excluded), differing: {differing:?}",
            compared.len()
        ),
    )
}

// 9 ------------------------------------------------------------------------

fn criterion_9() -> Outcome {
    let err = |e: qot_core::Error| e.to_string();
    let mut config = RunConfig::default();
    config.set("requests", "5000").map_err(err)?;
    config.set("ber_thresholds", "1e-6").map_err(err)?;
    let d = pipelines::generate_dataset(&config).map_err(err)?;
    let pipeline = config.pipeline(&config.training_hash(&d.provenance.config_hash));
    let central = pipelines::run_centralized(&d, &pipeline).map_err(err)?.report;
    let distributed = pipelines::run_distributed(&d.partition(), &pipeline, 1).map_err(err)?;
    let same = central.fold_confusions == distributed[0].report.fold_confusions;
    check(
        same,
        format!("{} patterns, {} repetitions, confusion matrices identical: {same}", d.len(), central.folds()),
    )
}

fn main() {
    let mut results: Vec<(u32, Outcome)> = vec![(1, criterion_1()), (2, criterion_2()), (3, criterion_3())];
    match full_scale() {
        Ok(f) => {
            results.push((4, criterion_4(&f)));
            results.push((5, criterion_5(&f)));
            results.push((6, criterion_6(&f)));
            results.push((7, criterion_7(&f)));
        }
        Err(e) => results.extend((4..=7).map(|n| (n, Err(format!("full-scale run failed: {e}"))))),
    }
    results.push((8, criterion_8()));
    results.push((9, criterion_9()));

    let mut failures = 0;
    for (n, outcome) in &results {
        match outcome {
            Ok(detail) => println!("criterion {n}: PASS  {detail}"),
            Err(detail) => {
                failures += 1;
                println!("criterion {n}: FAIL  {detail}");
            }
        }
    }
    if failures > 0 {
        eprintln!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
