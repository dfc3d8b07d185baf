//! Acceptance suite: one line per criterion, non-zero exit if any fails.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use common::{all_daggers, brute_omega, load, random_dagger, realizer};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tilefab::attractor::*;
use tilefab::rigidity::*;
use tilefab::symbolic::*;
use tilefab::tiling::*;
use tilefab::{GraphIfs, Similitude};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_theta(sys: &GraphIfs, rng: &mut ChaCha8Rng, len: usize) -> tilefab::DaggerPath {
    let choices: Vec<usize> = (0..len).map(|_| rng.gen_range(0..1000)).collect();
    random_dagger(sys, &choices)
}

fn omega_oracle() -> Outcome {
    for name in ["binary", "fibonacci", "two_vertex"] {
        let sys = load(name);
        for k in 0..=12 {
            for v in 0..sys.vertex_count() {
                let got: BTreeSet<Vec<usize>> = omega(&sys, k, Some(v)).iter().map(|w| w.edges().to_vec()).collect();
                ensure(got == brute_omega(&sys, k, v), || format!("{name}: Ω_{k} differs at vertex {v}"))?;
            }
        }
    }
    let fib = load("fibonacci");
    let (mut a, mut b) = (1usize, 2usize);
    for k in 0..=20 {
        let n = omega(&fib, k, None).len();
        ensure(n == b, || format!("|Ω_{k}| = {n}, want {b}"))?;
        (a, b) = (b, a + b);
    }
    Ok("three systems to k=12; Fibonacci sizes to k=20".into())
}

fn splitting_lists() -> Outcome {
    let sys = load("fibonacci");
    let labels = |ws: &[Word]| ws.iter().map(|w| format!("∅.{}", w.label(&sys))).collect::<Vec<_>>();
    let om1 = omega(&sys, 1, None);
    ensure(labels(&om1) == ["∅.11", "∅.12", "∅.2"], || format!("Ω_1 = {:?}", labels(&om1)))?;
    let om2 = split(&sys, &om1, 1).map_err(|e| e.to_string())?;
    let want = ["∅.111", "∅.112", "∅.12", "∅.21", "∅.22"];
    ensure(labels(&om2) == want, || format!("split = {:?}", labels(&om2)))?;
    Ok(want.join(" "))
}

fn address_value() -> Outcome {
    let sys = load("two_vertex");
    let cloud = cell_cloud_with(&sys, 20_000);
    let sigma = parse_word(&sys, "243", 0).map_err(|e| e.to_string())?;
    let r = pi_region(&sys, &sigma, &cloud).map_err(|e| e.to_string())?;
    let b = r.bbox().ok_or("empty region")?;
    let tol = 1e-9 + cloud.resolution() * sigma.map(&sys).ratio();
    ensure((b.lo[0] - 0.75).abs() <= tol && (b.hi[0] - 0.875).abs() <= tol, || format!("bbox {:?}..{:?}", b.lo, b.hi))?;
    Ok(format!("[{:.6}, {:.6}] tol {tol:.1e}", b.lo[0], b.hi[0]))
}

const TEST_SYSTEMS: [&str; 5] = ["binary", "fibonacci", "two_vertex", "mixed_scales", "golden_b"];

fn nesting() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut checked = 0;
    for name in TEST_SYSTEMS {
        let sys = load(name);
        for _ in 0..20 {
            let theta = random_theta(&sys, &mut rng, 9);
            let chain = prefix_chain(&sys, &theta, 8).map_err(|e| format!("{name}: {e}"))?;
            for w in chain.windows(2) {
                ensure(w[0].is_subset_of(&w[1]), || format!("{name}: {} not nested", theta.label(&sys)))?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} inclusions, 0 violations"))
}

fn normal_form() -> Outcome {
    let mut count = 0;
    for name in ["binary", "fibonacci", "two_vertex", "mixed_scales"] {
        let sys = load(name);
        let mut canon = std::collections::HashMap::new();
        for theta in all_daggers(&sys, 10) {
            let pi = pi_tiling(&sys, &theta).map_err(|e| e.to_string())?;
            let key = (theta.xi(&sys), theta.terminal(&sys));
            let base = canon.entry(key).or_insert_with(|| canonical_tiling(&sys, key.0, Some(key.1)).unwrap());
            let nf = base.transformed(&e_theta(&sys, &theta));
            ensure(pi.set_eq(&nf), || format!("{name}: {}", theta.label(&sys)))?;
            count += 1;
        }
    }
    Ok(format!("{count} paths with ξ ≤ 10"))
}

fn inflation_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut checks = 0;
    for name in ["binary", "fibonacci"] {
        let sys = load(name);
        for _ in 0..5 {
            let theta = random_theta(&sys, &mut rng, 12);
            for k in 1..=8 {
                ensure(deflation_identity(&sys, &theta, k).map_err(|e| e.to_string())?, || format!("{name}: deflation at k={k}"))?;
                for &n in sys.out_edges(theta.origin()) {
                    ensure(inflation_identity(&sys, &theta, n, k).map_err(|e| e.to_string())?, || format!("{name}: inflation n={n} k={k}"))?;
                }
                checks += 1;
            }
        }
        for k in 1..=8 {
            let t = canonical_tiling(&sys, k, None).map_err(|e| e.to_string())?;
            let down = deflate_addressed(&sys, &t, k).map_err(|e| e.to_string())?;
            ensure(down.set_eq(&canonical_tiling(&sys, k - 1, None).unwrap()), || format!("{name}: α(T_{k}) ≠ T_{}", k - 1))?;
            let up = inflate_addressed(&sys, &down, k - 1).map_err(|e| e.to_string())?;
            ensure(up.set_eq(&t), || format!("{name}: round trip at k={k}"))?;
        }
    }
    Ok(format!("{checks} identity checks; round trips k=1..8"))
}

fn dimensions() -> Outcome {
    let mut parts = Vec::new();
    for (name, want) in [("binary", 1.0), ("fibonacci", 1.0), ("sierpinski", 1.584962500721156)] {
        let t = Instant::now();
        let d = hausdorff_dimension(&load(name), 1e-12).map_err(|e| e.to_string())?;
        let secs = t.elapsed().as_secs_f64();
        ensure((d - want).abs() <= 1e-6, || format!("{name}: {d}"))?;
        ensure(secs < 1.0, || format!("{name}: {secs}s"))?;
        parts.push(format!("{name} {d:.6}"));
    }
    Ok(parts.join(", "))
}

fn rigidity_audits() -> Outcome {
    let bin = load("binary");
    let geo = realizer(&bin, 4000);
    let r = check_rigidity(&bin, Group::Translations, 2, &geo).map_err(|e| e.to_string())?;
    let w = r.a1.witness().ok_or("binary: no A(i) witness")?;
    ensure(w.e.approx_eq(&Similitude::translation(&[0.5]), 1e-9), || format!("binary witness {:?}", w.e))?;
    ensure(recheck_meets_witness(&bin, w, &geo).map_err(|e| e.to_string())?, || "binary witness does not recheck".into())?;
    let bin_e = tilefab::io::format_map(&w.e);

    let ex3 = load("mixed_scales");
    let geo = realizer(&ex3, 4000);
    let r = check_rigidity(&ex3, Group::Translations, 1, &geo).map_err(|e| e.to_string())?;
    let w = r.a1.witness().ok_or("ex3: no A(i) witness")?.clone();
    ensure((w.k, w.v, w.w) == (1, 0, 1), || format!("ex3 witness k={} v={} w={}", w.k, w.v, w.w))?;
    let inner = canonical_tiling(&ex3, 0, Some(1)).unwrap().map_by(&ex3, &ex3.scaling(1)).unwrap().transformed(&w.e);
    ensure(inner.is_subset_of(&canonical_tiling(&ex3, 0, Some(0)).unwrap()), || "E s T_0^2 ⊄ T_0^1".into())?;
    ensure(recheck_meets_witness(&ex3, &w, &geo).map_err(|e| e.to_string())?, || "ex3 witness does not recheck".into())?;

    let gb = load("golden_b");
    let geo = realizer(&gb, 10_000);
    let r = check_rigidity(&gb, Group::Euclidean, 2, &geo).map_err(|e| e.to_string())?;
    ensure(r.passed(), || format!("golden-b: {}", r.verdict()))?;
    Ok(format!(
        "binary E={}, ex3 E={} (k=1, 1→2), golden-b {} over {} candidates",
        bin_e,
        tilefab::io::format_map(&w.e),
        r.verdict(),
        r.candidates
    ))
}

fn certificate() -> Outcome {
    let sys = load("fibonacci");
    let theta = parse_dagger(&sys, "12(1)", 0).map_err(|e| e.to_string())?;
    let psi = parse_dagger(&sys, "21(1)", 0).map_err(|e| e.to_string())?;
    let filter = GroupFilter::new(&sys, Group::Translations);
    let cert = decide_equal(&sys, &theta, &psi, &filter, None).map_err(|e| e.to_string())?.ok_or("no certificate")?;
    ensure((cert.p, cert.q) == (2, 2), || format!("p={} q={}", cert.p, cert.q))?;
    ensure(cert.e.approx_eq(&Similitude::translation(&[-1.0]), 1e-9), || format!("E = {:?}", cert.e))?;
    let big_t = pi_tiling(&sys, &theta.truncate(8).unwrap()).unwrap();
    let big_p = pi_tiling(&sys, &psi.truncate(8).unwrap()).unwrap().transformed(&cert.e);
    for k in 0..=8 {
        let a = pi_tiling(&sys, &theta.truncate(k).unwrap()).unwrap();
        let b = pi_tiling(&sys, &psi.truncate(k).unwrap()).unwrap().transformed(&cert.e);
        if k >= cert.p {
            ensure(a.set_eq(&b), || format!("tile sets differ at k={k}"))?;
        }
        ensure(a.is_subset_of(&big_p) && b.is_subset_of(&big_t), || format!("truncation {k} escapes"))?;
    }
    Ok(format!("p=2 q=2 E={}; equal for k=2..8, nested for k<2", tilefab::io::format_map(&cert.e)))
}

fn lambda_bijection() -> Outcome {
    let sys = load("golden_b");
    let filter = GroupFilter::new(&sys, Group::Euclidean);
    let mut counts = Vec::new();
    for k in 0..=6 {
        let n = lambda_set(&sys, k, 0, 0).len();
        let c = copies_of_t0(&sys, k, 0, 0).map_err(|e| e.to_string())?.len();
        let g = count_copies_geometric(&sys, k, 0, 0, &filter).map_err(|e| e.to_string())?;
        ensure(c == n && g == n, || format!("k={k}: |Λ|={n} copies={c} geometric={g}"))?;
        counts.push(n.to_string());
    }
    Ok(format!("|Λ_k| for k=0..6: {}", counts.join(",")))
}

fn quasiperiodicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut summary = Vec::new();
    for name in ["binary", "fibonacci", "two_vertex", "golden_b"] {
        let sys = load(name);
        if !matches!(is_coprime(&sys, None), Coprimality::Coprime { .. }) {
            continue;
        }
        let cloud = cell_cloud_with(&sys, 500);
        let geo = TileRealizer::new(&cloud, usize::MAX);
        let diam = (0..sys.vertex_count()).filter_map(|v| cloud.vertex(v).bbox().map(|b| b.diagonal())).fold(0.0, f64::max);
        let filter = GroupFilter::new(&sys, Group::Translations);
        let theta = random_theta(&sys, &mut rng, 10);
        let tiling = pi_tiling(&sys, &theta).map_err(|e| e.to_string())?;
        let patch = canonical_tiling(&sys, 0, Some(theta.terminal(&sys))).unwrap();
        let support = geo.support(&sys, &tiling).subsample(60);
        let mut windows = 0;
        for factor in [2.0, 4.0, 8.0] {
            for c in support.points() {
                let w = Window { center: c.to_vec(), radius: factor * diam, geo: &geo };
                let n = find_patch_copies(&sys, &tiling, &patch, &filter, Some(&w)).len();
                ensure(n >= 1, || format!("{name}: no copy within {factor}·diam of {c:?}"))?;
                windows += 1;
            }
        }
        summary.push(format!("{name} {windows}"));
    }
    Ok(format!("windows checked: {}", summary.join(", ")))
}

fn chaos_game_coverage() -> Outcome {
    let sys = load("binary");
    let sampler = MarkovSampler::natural(&sys, 12);
    let cloud = chaos_game(&sys, Driver::Markov(&sampler), 100_000 + DEFAULT_BURN_IN, DEFAULT_BURN_IN, None).map_err(|e| e.to_string())?;
    let mut bins = [false; 256];
    for p in cloud.vertex(0).points() {
        bins[((p[0] * 256.0) as usize).min(255)] = true;
    }
    let filled = bins.iter().filter(|b| **b).count();
    ensure(filled as f64 >= 0.99 * 256.0, || format!("{filled}/256 bins"))?;
    let tv = load("two_vertex");
    let c = sample_attractor(&tv, 50_000, 12);
    for (v, (lo, hi)) in [(0.0, 1.0), (2.0, 3.0)].into_iter().enumerate() {
        let r = c.vertex(v);
        ensure(r.points().all(|p| p[0] >= lo - 1e-9 && p[0] <= hi + 1e-9), || format!("vertex {v} leaves [{lo}, {hi}]"))?;
    }
    Ok(format!("{filled}/256 bins; components inside [0,1] and [2,3]"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("Ω matches brute-force enumeration", omega_oracle),
        ("splitting reproduces the Fibonacci address lists", splitting_lists),
        ("π(243) bounding box", address_value),
        ("prefix chains nest", nesting),
        ("Π(θ) equals its normal form", normal_form),
        ("inflation identities and round trips", inflation_identities),
        ("Hausdorff dimension", dimensions),
        ("rigidity audits", rigidity_audits),
        ("equivalence certificate", certificate),
        ("Λ-bijection on golden-b", lambda_bijection),
        ("quasiperiodic windows", quasiperiodicity),
        ("chaos game coverage", chaos_game_coverage),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("AC{:02} PASS {name} ({secs:.2}s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("AC{:02} FAIL {name} ({secs:.2}s): {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed in {:.1}s", criteria.len() - failed, criteria.len(), start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
