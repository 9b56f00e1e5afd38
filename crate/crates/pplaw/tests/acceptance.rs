//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Run with `cargo test -p pplaw --test acceptance`.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use pplaw_core::select::BRUTE_FORCE_LIMIT;
use pplaw_core::synth::{
    generate_corpus, generate_observations, law_with_optimum, simulate_training_curves, PplLaw,
    SyntheticCorpusSpec, SyntheticSpec,
};
use pplaw_core::{
    baseline_select, brute_force_select, chunk_corpus, descent_paths, find_optimum, fit,
    greedy_select, objective_j, split_observations, validate, BandConfig, Chunk, Corpus,
    DescentConfig, Document, DosTarget, FitConfig, LawForm, LawInput, LawParams, Method,
    Observation, PplStats, SearchBox, SelectOptions, SelectionManifest, WeightingMode,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

fn random_law(rng: &mut ChaCha8Rng) -> LawParams {
    LawParams::interaction(
        rng.random_range(0.0..3.0),
        log_uniform(rng, 1.0, 1e4),
        rng.random_range(-0.3..0.5),
        rng.random_range(-2e-3..2e-3),
        rng.random_range(-0.3..0.5),
        rng.random_range(-5e-3..5e-3),
        rng.random_range(0.05..0.6),
    )
    .unwrap()
}

fn random_input(rng: &mut ChaCha8Rng) -> LawInput {
    LawInput::new(
        log_uniform(rng, 1.5, 60.0),
        log_uniform(rng, 2.0, 1600.0),
        log_uniform(rng, 1e6, 1e10),
    )
    .unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}

fn rmse(params: &LawParams, obs: &[Observation]) -> f64 {
    let sq: f64 = obs
        .iter()
        .map(|o| {
            let r = params.predict_loss(&o.input()).unwrap() - o.test_loss;
            r * r
        })
        .sum();
    (sq / obs.len() as f64).sqrt()
}

/// Ground truth shared by the fitting criteria: minimum at (13.48, 40).
fn fit_truth() -> LawParams {
    law_with_optimum(1.5, 2e3, 0.3, -0.001, -0.002, 13.48, 40.0).unwrap()
}

fn fit_spec(n_obs: usize, noise_tau: f64, seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        truth: fit_truth(),
        mu_range: (5.0, 30.0),
        sigma_range: (10.0, 400.0),
        d_range: (1e7, 1e10),
        n_obs,
        noise_tau,
        seed,
    }
}

fn fit_recovery_noiseless() -> Outcome {
    let train = generate_observations(&fit_spec(200, 0.0, 11)).unwrap();
    let held_out = generate_observations(&fit_spec(100, 0.0, 12)).unwrap();
    let start = Instant::now();
    let r = fit(&train, LawForm::Interaction, &FitConfig::default()).unwrap();
    let elapsed = start.elapsed();
    let t = fit_truth();
    let p = r.params;
    let err = [
        rel(p.e(), t.e()),
        rel(p.d_c(), t.d_c()),
        rel(p.alpha_d(), t.alpha_d()),
    ];
    let heldout = rmse(&p, &held_out);
    let pass = heldout < 1e-6 && err.iter().all(|&e| e < 0.05) && elapsed < Duration::from_secs(60);
    Outcome::new(
        pass,
        format!(
            "held-out RMSE {heldout:.2e}; rel err E {:.1e}, D_c {:.1e}, alpha_D {:.1e}; {:.1?} single-threaded",
            err[0], err[1], err[2], elapsed
        ),
    )
}

fn fit_recovery_noisy() -> Outcome {
    let tau = 0.01;
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let obs = generate_observations(&fit_spec(200, tau, 100 + seed)).unwrap();
        let split = split_observations(&obs, 0.1, seed).unwrap();
        let r = fit(&split.train, LawForm::Interaction, &FitConfig::default()).unwrap();
        let v = validate(&r, &split.val, &BandConfig::default()).unwrap();
        worst = worst.max(v.val_rmse);
    }
    let elapsed = start.elapsed();
    Outcome::new(
        worst <= 2.0 * tau && elapsed < Duration::from_secs(300),
        format!(
            "worst validation RMSE over 10 seeds {worst:.4} (limit {}); {elapsed:.1?}",
            2.0 * tau
        ),
    )
}

fn validation_band() -> Outcome {
    let band = BandConfig::default();
    let spec = |noise_tau, seed| SyntheticSpec {
        mu_range: (
            band.mu_center - band.mu_half_width,
            band.mu_center + band.mu_half_width,
        ),
        sigma_range: (band.sigma_lo, band.sigma_hi),
        d_range: (1e8, 1e10),
        ..fit_spec(100, noise_tau, seed)
    };
    let mut clean = Vec::new();
    for seed in 0..5 {
        let obs = generate_observations(&spec(0.0, 200 + seed)).unwrap();
        let split = split_observations(&obs, 0.1, seed).unwrap();
        assert_eq!((split.train.len(), split.val.len()), (90, 10));
        let r = fit(&split.train, LawForm::Interaction, &FitConfig::default()).unwrap();
        clean.push(validate(&r, &split.val, &band).unwrap().band_coverage);
    }
    let tau = 0.01;
    let noisy_band = BandConfig {
        loss_margin: 3.0 * tau,
        ..band
    };
    let mut noisy = Vec::new();
    for seed in 0..5 {
        let obs = generate_observations(&spec(tau, 300 + seed)).unwrap();
        let split = split_observations(&obs, 0.1, seed).unwrap();
        let r = fit(&split.train, LawForm::Interaction, &FitConfig::default()).unwrap();
        noisy.push(validate(&r, &split.val, &noisy_band).unwrap().band_coverage);
    }
    let pass = clean.iter().all(|&c| c == 1.0) && noisy.iter().all(|&c| c >= 0.9);
    Outcome::new(
        pass,
        format!(
            "90/10 split; on-surface coverage {clean:?}; noisy (margin 3 tau) coverage {noisy:?}"
        ),
    )
}

fn collapse_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..100_000 {
        let p = random_law(&mut rng);
        let x = random_input(&mut rng);
        let zeroed =
            LawParams::interaction(p.e(), p.d_c(), p.alpha0(), 0.0, p.beta0(), 0.0, p.alpha_d())
                .unwrap();
        let basic = LawParams::basic(p.e(), p.d_c(), p.alpha0(), p.beta0(), p.alpha_d()).unwrap();
        worst = worst.max(rel(
            zeroed.predict_loss(&x).unwrap(),
            basic.predict_loss(&x).unwrap(),
        ));
    }
    Outcome::new(
        worst <= 1e-15,
        format!("1e5 inputs, max rel diff {worst:.1e}"),
    )
}

/// Five-point central difference of `f` at `x` with step `h`.
fn five_point(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let p = random_law(&mut rng);
        let x = random_input(&mut rng);
        let g = p.grad_loss(&x).unwrap();
        // E shifts the loss without changing its slope; differencing without
        // it keeps the reducible term's digits when it is tiny next to E
        let q = LawParams::interaction(
            0.0,
            p.d_c(),
            p.alpha0(),
            p.alpha1(),
            p.beta0(),
            p.beta1(),
            p.alpha_d(),
        )
        .unwrap();
        let at = |m: f64, s: f64| {
            q.predict_loss(&LawInput::new(m, s, x.d_tokens).unwrap())
                .unwrap()
        };
        let fd_mu = five_point(|m| at(m, x.sigma), x.mu, 1e-3 * x.mu);
        let fd_sigma = five_point(|s| at(x.mu, s), x.sigma, 1e-3 * x.sigma);
        worst = worst.max(rel(fd_mu, g.d_mu)).max(rel(fd_sigma, g.d_sigma));
    }
    Outcome::new(worst < 1e-5, format!("1e4 pairs, max rel err {worst:.1e}"))
}

fn decomposition_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..100_000 {
        let p = random_law(&mut rng);
        let x = random_input(&mut rng);
        let d = p.decompose(&x).unwrap();
        let recomposed = p.e() + p.d_c() / (d.independence * d.interdependence * d.size);
        worst = worst.max(rel(recomposed, p.predict_loss(&x).unwrap()));
    }
    Outcome::new(
        worst < 1e-12,
        format!("1e5 inputs, max rel diff {worst:.1e}"),
    )
}

fn two_pass(values: &[(f64, u64)], mode: WeightingMode) -> (f64, f64) {
    let w = |n: u64| match mode {
        WeightingMode::PerDocument => 1.0,
        WeightingMode::TokenWeighted => n as f64,
    };
    let total: f64 = values.iter().map(|&(_, n)| w(n)).sum();
    let mean = values.iter().map(|&(x, n)| w(n) * x).sum::<f64>() / total;
    let var = values
        .iter()
        .map(|&(x, n)| w(n) * (x - mean).powi(2))
        .sum::<f64>()
        / total;
    (mean, var)
}

fn stats_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n_blocks = 200;
    let block = 5_000;
    let blocks: Vec<Vec<(f64, u64)>> = (0..n_blocks)
        .map(|_| {
            (0..block)
                .map(|_| {
                    (
                        log_uniform(&mut rng, 2.0, 2000.0),
                        rng.random_range(1..20_000),
                    )
                })
                .collect()
        })
        .collect();
    let mut worst_seq: f64 = 0.0;
    let mut largest = 0;
    for mode in [WeightingMode::PerDocument, WeightingMode::TokenWeighted] {
        let block_stats: Vec<PplStats> = blocks
            .iter()
            .map(|b| {
                let mut s = PplStats::empty(mode);
                for &(x, n) in b {
                    s.push(x, n);
                }
                s
            })
            .collect();
        // all 10^6 documents streamed, then random removals and re-additions
        let mut member = vec![true; n_blocks];
        let mut acc = block_stats
            .iter()
            .fold(PplStats::empty(mode), |a, b| a.merge(b).unwrap());
        for step in 0..120 {
            let i = rng.random_range(0..n_blocks);
            let in_set = member.iter().filter(|&&m| m).count();
            if member[i] && in_set > 1 {
                acc = acc.remove(&block_stats[i]).unwrap();
                member[i] = false;
            } else if !member[i] {
                acc = acc.merge(&block_stats[i]).unwrap();
                member[i] = true;
            }
            if step % 10 == 9 {
                let values: Vec<(f64, u64)> = blocks
                    .iter()
                    .zip(&member)
                    .filter(|(_, &m)| m)
                    .flat_map(|(b, _)| b.iter().copied())
                    .collect();
                largest = largest.max(values.len());
                let (mean, var) = two_pass(&values, mode);
                worst_seq = worst_seq
                    .max(rel(acc.mean().unwrap(), mean))
                    .max(rel(acc.variance().unwrap(), var));
            }
        }
    }
    let full: Vec<(f64, u64)> = blocks.iter().flatten().copied().collect();
    let mut streamed = PplStats::empty(WeightingMode::PerDocument);
    for &(x, n) in &full {
        streamed.push(x, n);
    }
    let (mean, var) = two_pass(&full, WeightingMode::PerDocument);
    largest = largest.max(full.len());
    worst_seq = worst_seq
        .max(rel(streamed.mean().unwrap(), mean))
        .max(rel(streamed.variance().unwrap(), var));

    let mut worst_assoc: f64 = 0.0;
    let mut stats_of = |n: usize| {
        let mut s = PplStats::empty(WeightingMode::TokenWeighted);
        for _ in 0..n {
            s.push(
                log_uniform(&mut rng, 2.0, 2000.0),
                rng.random_range(1..20_000),
            );
        }
        s
    };
    for _ in 0..1000 {
        let (a, b, c) = (stats_of(50), stats_of(7), stats_of(300));
        let left = a.merge(&b).unwrap().merge(&c).unwrap();
        for other in [
            a.merge(&b.merge(&c).unwrap()).unwrap(),
            c.merge(&b).unwrap().merge(&a).unwrap(),
        ] {
            worst_assoc = worst_assoc
                .max(rel(other.mean().unwrap(), left.mean().unwrap()))
                .max(rel(other.variance().unwrap(), left.variance().unwrap()));
        }
    }
    Outcome::new(
        worst_seq < 1e-8 && worst_assoc < 1e-9,
        format!(
            "streaming and add/remove vs two-pass up to {largest} docs: {worst_seq:.1e}; merge assoc/comm: {worst_assoc:.1e}"
        ),
    )
}

fn random_instance(rng: &mut ChaCha8Rng, n_docs: usize, n_chunks: usize) -> (Corpus, Vec<Chunk>) {
    let docs = (0..n_docs)
        .map(|i| {
            Document::new(
                format!("d{i:05}"),
                rng.random_range(50..2000),
                (1.5 + 2.0 * rng.random::<f64>()).exp(),
            )
        })
        .collect();
    let corpus = Corpus::new(docs).unwrap();
    let chunks = chunk_corpus(&corpus, n_chunks, rng.random()).unwrap();
    (corpus, chunks)
}

fn batch_j(corpus: &Corpus, chunks: &[Chunk], ids: &[&str], target: &DosTarget) -> f64 {
    let docs = ids.iter().flat_map(|id| {
        let c = chunks.iter().find(|c| c.chunk_id == *id).unwrap();
        c.doc_ids.iter().map(|d| corpus.get(d).unwrap())
    });
    objective_j(
        &PplStats::from_documents(docs, WeightingMode::PerDocument).unwrap(),
        target,
    )
    .unwrap()
}

/// Re-evaluates every candidate at every step from scratch. Returns whether
/// each recorded choice is the argmin (ties by chunk id) and that no further
/// chunk fits at the end.
fn trajectory_is_greedy(m: &SelectionManifest, corpus: &Corpus, chunks: &[Chunk]) -> bool {
    let target = &m.target;
    let mut chosen: Vec<&str> = Vec::new();
    let mut tokens = 0;
    for step in &m.trajectory {
        let mut best: Option<(f64, &str)> = None;
        for c in chunks {
            if chosen.contains(&c.chunk_id.as_str()) || tokens + c.n_tokens > m.t_budget {
                continue;
            }
            let key = if chosen.is_empty() {
                (c.chunk_ppl - target.mu_hat).abs()
            } else {
                let mut ids = chosen.clone();
                ids.push(&c.chunk_id);
                batch_j(corpus, chunks, &ids, target)
            };
            if best.is_none_or(|(bv, bid)| key < bv || (key == bv && c.chunk_id.as_str() < bid)) {
                best = Some((key, &c.chunk_id));
            }
        }
        let Some((bv, bid)) = best else { return false };
        if bid != step.chunk_id {
            // accept a different id only when it ties within rounding
            let mut ids = chosen.clone();
            ids.push(&step.chunk_id);
            let got = if chosen.is_empty() {
                let c = chunks.iter().find(|c| c.chunk_id == step.chunk_id).unwrap();
                (c.chunk_ppl - target.mu_hat).abs()
            } else {
                batch_j(corpus, chunks, &ids, target)
            };
            if (got - bv).abs() > 1e-9 * bv.abs().max(1e-12) {
                return false;
            }
        }
        chosen.push(&step.chunk_id);
        tokens = step.tokens_so_far;
    }
    chunks
        .iter()
        .all(|c| chosen.contains(&c.chunk_id.as_str()) || tokens + c.n_tokens > m.t_budget)
}

fn dos_correctness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let opts = SelectOptions::default();
    let (mut argmin_ok, mut budget_ok, mut dominance_ok) = (true, true, true);
    let mut equal = 0;
    let mut trajectories = 0;
    for _ in 0..100 {
        let (corpus, chunks) = random_instance(&mut rng, 60, 12);
        let total: u64 = chunks.iter().map(|c| c.n_tokens).sum();
        let budget = (total as f64 * rng.random_range(0.2..0.8)) as u64;
        let target =
            DosTarget::from_std(rng.random_range(8.0..20.0), rng.random_range(3.0..9.0)).unwrap();
        let Ok(g) = greedy_select(&chunks, &corpus, &target, budget, &opts) else {
            continue;
        };
        let b = brute_force_select(&chunks, &corpus, &target, budget, &opts).unwrap();
        argmin_ok &= trajectory_is_greedy(&g, &corpus, &chunks);
        trajectories += 1;
        budget_ok &= g.tokens() <= budget && b.tokens() <= budget;
        for method in [Method::Rs, Method::Lps, Method::Hps] {
            if let Ok(m) =
                baseline_select(&chunks, &corpus, method, budget, 1, None, &target, &opts)
            {
                budget_ok &= m.tokens() <= budget;
            }
        }
        // merge order differs between the two searches
        dominance_ok &= b.final_j <= g.final_j * (1.0 + 1e-12);
        if (b.final_j - g.final_j).abs() <= 1e-12 * g.final_j.max(1e-300) {
            equal += 1;
        }
    }
    for _ in 0..10 {
        let (corpus, chunks) = random_instance(&mut rng, 400, 60);
        let total: u64 = chunks.iter().map(|c| c.n_tokens).sum();
        let target = DosTarget::from_std(12.0, 6.0).unwrap();
        let g = greedy_select(&chunks, &corpus, &target, total / 3, &opts).unwrap();
        argmin_ok &= trajectory_is_greedy(&g, &corpus, &chunks);
        budget_ok &= g.tokens() <= total / 3;
        trajectories += 1;
    }

    // {8, 12} and {18, 22} together have mean 15 and variance 29 exactly
    let docs = vec![
        Document::new("a1", 100, 8.0),
        Document::new("a2", 100, 12.0),
        Document::new("b1", 100, 18.0),
        Document::new("b2", 100, 22.0),
        Document::new("c1", 100, 15.0),
        Document::new("d1", 100, 40.0),
        Document::new("d2", 100, 3.0),
        Document::new("e1", 300, 14.0),
    ];
    let corpus = Corpus::new(docs.clone()).unwrap();
    let group = |id: &str, members: &[usize]| {
        Chunk::from_documents(id, members.iter().map(|&i| &docs[i])).unwrap()
    };
    let chunks = vec![
        group("ca", &[0, 1]),
        group("cb", &[2, 3]),
        group("cc", &[4]),
        group("cd", &[5, 6]),
        group("ce", &[7]),
    ];
    let target = DosTarget::new(15.0, 29.0).unwrap();
    let perfect = brute_force_select(&chunks, &corpus, &target, 400, &opts).unwrap();
    let zero = perfect.final_j == 0.0 && perfect.selected == ["ca", "cb"];
    let elapsed = start.elapsed();

    Outcome::new(
        argmin_ok && budget_ok && dominance_ok && zero && elapsed < Duration::from_secs(120),
        format!(
            "(a) argmin on {trajectories} trajectories: {argmin_ok}; (b) budget: {budget_ok}; \
             (c) brute <= greedy: {dominance_ok}, equal on {equal}/100 (N=12, limit {BRUTE_FORCE_LIMIT}); \
             (d) J=0 subset found: {zero}; {elapsed:.1?}"
        ),
    )
}

fn landscape() -> Outcome {
    let p = law_with_optimum(1.5, 2e3, 0.3, -0.001, -0.002, 13.48, 40.0).unwrap();
    let d = 1e8;
    let b = SearchBox::new((4.0, 45.0), (8.0, 200.0)).unwrap();
    let opt = find_optimum(&p, &b, d).unwrap();
    let corners = [(4.0, 8.0), (45.0, 8.0), (4.0, 200.0)];
    let paths = descent_paths(&p, &b, &corners, d, &DescentConfig::default()).unwrap();
    let mut worst: f64 = 0.0;
    let mut monotone = true;
    for path in &paths {
        monotone &= path.windows(2).all(|w| w[1].loss <= w[0].loss);
        let end = path.last().unwrap();
        worst = worst
            .max(rel(end.mu, opt.mu_hat))
            .max(rel(end.sigma, opt.sigma_hat));
    }
    let pass = !opt.clamped && opt.grad_norm < 1e-6 && monotone && worst < 1e-3;
    Outcome::new(
        pass,
        format!(
            "optimum ({:.4}, {:.4}) grad_norm {:.1e} clamped {}; path ends max rel dev {worst:.1e}; non-increasing {monotone}",
            opt.mu_hat, opt.sigma_hat, opt.grad_norm, opt.clamped
        ),
    )
}

/// One Monte-Carlo instance of the curve ordering check: true when the DOS
/// subset's final simulated loss is at or below every baseline's.
fn dos_beats_baselines(seed: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let corpus = generate_corpus(&SyntheticCorpusSpec {
        n_docs: 2000,
        ppl_law: PplLaw::LogNormal {
            log_mean: 13.48f64.ln(),
            log_std: 0.8,
        },
        token_median: 1000.0,
        token_spread: 0.5,
        seed,
    })
    .unwrap();
    let stats = corpus.stats(WeightingMode::PerDocument);
    let mu_star = stats.mean().unwrap() * rng.random_range(0.85..1.0);
    let sigma_star = stats.std().unwrap() * rng.random_range(0.7..1.0);
    // equal cross-curvature ratios keep the stationary point a minimum
    let k = 3e-4 * rng.random_range(0.5..2.0);
    let truth = law_with_optimum(
        1.5,
        2e3,
        0.3,
        -k * mu_star,
        -k * sigma_star,
        mu_star,
        sigma_star,
    )
    .unwrap();
    let chunks = chunk_corpus(&corpus, 400, seed).unwrap();
    let budget = corpus.total_tokens() * 3 / 10;
    let bounds = SearchBox::new(
        (mu_star / 3.0, mu_star * 3.0),
        (sigma_star / 3.0, sigma_star * 3.0),
    )
    .unwrap();
    let opt = find_optimum(&truth, &bounds, budget as f64).unwrap();
    let target = DosTarget::relative(opt.mu_hat, opt.sigma_hat * opt.sigma_hat).unwrap();
    let opts = SelectOptions::default();
    let mut manifests = vec![greedy_select(&chunks, &corpus, &target, budget, &opts).unwrap()];
    for method in [Method::Rs, Method::Lps, Method::Hps] {
        manifests.push(
            baseline_select(&chunks, &corpus, method, budget, seed, None, &target, &opts).unwrap(),
        );
    }
    let schedule: Vec<f64> = (0..8).map(|i| budget as f64 * 2f64.powi(i - 7)).collect();
    let curves = simulate_training_curves(&truth, &manifests, &schedule).unwrap();
    let dos = curves[0].final_loss().unwrap();
    curves[1..].iter().all(|c| dos <= c.final_loss().unwrap())
}

fn curve_ordering() -> Outcome {
    let wins = (0..100).filter(|&s| dos_beats_baselines(1000 + s)).count();
    Outcome::new(
        wins >= 90,
        format!("DOS final loss <= RS/LPS/HPS on {wins}/100 instances"),
    )
}

fn end_to_end() -> Outcome {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let script = root.join("scripts/e2e.sh");
    let work = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let mut closer = 0;
    let mut failures = Vec::new();
    for seed in 0..50u64 {
        let out = work.path().join(seed.to_string());
        let status = Command::new("bash")
            .arg(&script)
            .arg(seed.to_string())
            .arg(&out)
            .env("PPLAW", env!("CARGO_BIN_EXE_pplaw"))
            .current_dir(&root)
            .status()
            .unwrap();
        if !status.success() {
            failures.push(seed);
            continue;
        }
        let read = |p: &str| std::fs::read_to_string(out.join(p)).unwrap();
        let opt: serde_json::Value = serde_json::from_str(&read("land/optimum.json")).unwrap();
        let target = DosTarget::from_std(
            opt["mu_hat"].as_f64().unwrap(),
            opt["sigma_hat"].as_f64().unwrap(),
        )
        .unwrap();
        let j = |p: &str| {
            let m: SelectionManifest = serde_json::from_str(&read(p)).unwrap();
            let (mu, var) = m.final_stats().unwrap();
            (mu - target.mu_hat).powi(2) + (var - target.sigma2_hat).powi(2)
        };
        if j("dos/manifest.json") < j("rs/manifest.json") {
            closer += 1;
        }
    }
    Outcome::new(
        closer * 100 >= 95 * 50 && failures.is_empty(),
        format!(
            "DOS closer than RS to the landscape optimum on {closer}/50 seeds; failed runs {failures:?}; {:.1?}",
            start.elapsed()
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    // `cargo test` passes harness flags such as `--nocapture`; a filter
    // argument selects criteria by substring.
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let criteria: [Criterion; 11] = [
        ("fit recovery (noiseless)", fit_recovery_noiseless),
        ("fit recovery (noisy)", fit_recovery_noisy),
        ("validation band", validation_band),
        ("collapse identity", collapse_identity),
        ("gradient check", gradient_check),
        ("decomposition identity", decomposition_identity),
        ("stats correctness", stats_correctness),
        ("DOS correctness", dos_correctness),
        ("landscape", landscape),
        ("curve ordering", curve_ordering),
        ("end-to-end pipeline", end_to_end),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let o = check();
        println!(
            "[{}] {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
