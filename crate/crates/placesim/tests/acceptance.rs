//! Acceptance gate: runs the eight release criteria and prints one
//! pass/fail line per criterion; the exit code is nonzero if any fail.
//!
//! `cargo test --test acceptance` runs all of them. Criterion numbers as
//! trailing arguments select a subset, e.g. `cargo test --test acceptance
//! -- 4 5`.

use placesim::evaluator::{outcome, satisfaction_term};
use placesim::experiment::{
    baseline_scenario, benchmark_hardware, benchmark_shape, metrics_csv, run_simulation,
    summarize, ScenarioConfig,
};
use placesim::placement::{PlaceOutcome, SystemState};
use placesim::reconfig::{apply_if_beneficial, select_targets, trial_reconfigure};
use placesim::solver::{
    brute_force, random_model, solve_exact, RandomModelLimits, SolveBudget,
    DEFAULT_ENUMERATION_CAP,
};
use placesim::topology::{
    build_topology, DeviceKind, DeviceSpec, HardwareCatalog, LinkSpec, SiteId, TopologyShape,
};
use placesim::workload::{
    benchmark_catalog, generate_requests, AppProfile, MenuOption, PlacementRequest, RngId,
    WorkloadEntry,
};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

type Criterion = fn() -> Result<String, String>;

const CRITERIA: [(u32, Criterion); 8] = [
    (1, unit_metrics),
    (2, relocation_term),
    (3, solver_cross_check),
    (4, moved_fraction_band),
    (5, moved_term_band),
    (6, full_scale_certification),
    (7, fuzz_audits),
    (8, deterministic_exports),
];

fn main() {
    let filter: BTreeSet<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failures = 0;
    for (number, criterion) in CRITERIA {
        if !filter.is_empty() && !filter.contains(&number) {
            continue;
        }
        match criterion() {
            Ok(detail) => println!("criterion {number}: PASS - {detail}"),
            Err(detail) => {
                failures += 1;
                println!("criterion {number}: FAIL - {detail}");
            }
        }
    }
    if failures > 0 {
        std::process::exit(1);
    }
}

fn find_profile<'a>(catalog: &'a [AppProfile], name: &str) -> Result<&'a AppProfile, String> {
    catalog.iter().find(|p| p.name == name).ok_or_else(|| format!("{name} missing from catalog"))
}

/// Criterion 1: the reference outcomes of both catalog apps on the benchmark
/// tree, every tier, both metrics, to within 1e-6.
fn unit_metrics() -> Result<String, String> {
    const TOL: f64 = 1e-6;
    let topology =
        build_topology(&benchmark_shape(), &benchmark_hardware()).map_err(|e| e.to_string())?;
    let catalog = benchmark_catalog();
    let fft = find_profile(&catalog, "NAS.FT")?;
    let mri = find_profile(&catalog, "MRI-Q")?;
    let input = topology.input_nodes().next().ok_or("no input nodes")?;
    let [user, carrier, cloud] = topology.ancestor_sites(input).map_err(|e| e.to_string())?;

    let mut checks: Vec<(String, f64, f64)> = Vec::new();
    for (site, tier, want_r, want_p) in [
        (user, "user", 5.8, 9375.0),
        (carrier, "carrier", 6.6, 8412.5),
        (cloud, "cloud", 7.4, 7010.0),
    ] {
        let got = outcome(fft, input, site, &topology).map_err(|e| e.to_string())?;
        checks.push((format!("NAS.FT {tier} response"), got.response_time, want_r));
        checks.push((format!("NAS.FT {tier} price"), got.price, want_p));
    }
    for (site, tier, want_r, want_p) in
        [(carrier, "carrier", 3.2, 15300.0), (cloud, "cloud", 4.4, 12380.0)]
    {
        let got = outcome(mri, input, site, &topology).map_err(|e| e.to_string())?;
        checks.push((format!("MRI-Q {tier} response"), got.response_time, want_r));
        checks.push((format!("MRI-Q {tier} price"), got.price, want_p));
    }

    let mut max_delta = 0.0f64;
    for (what, got, want) in &checks {
        let delta = (got - want).abs();
        if !(delta <= TOL) {
            return Err(format!("{what}: got {got}, want {want} within {TOL:e}"));
        }
        max_delta = max_delta.max(delta);
    }
    Ok(format!("{} reference metrics reproduced, max deviation {max_delta:.1e}", checks.len()))
}

/// Criterion 2: the satisfaction term of the NAS.FT carrier-to-cloud move.
fn relocation_term() -> Result<String, String> {
    let topology =
        build_topology(&benchmark_shape(), &benchmark_hardware()).map_err(|e| e.to_string())?;
    let catalog = benchmark_catalog();
    let fft = find_profile(&catalog, "NAS.FT")?;
    let input = topology.input_nodes().next().ok_or("no input nodes")?;
    let [_, carrier, cloud] = topology.ancestor_sites(input).map_err(|e| e.to_string())?;

    let before = outcome(fft, input, carrier, &topology).map_err(|e| e.to_string())?;
    let after = outcome(fft, input, cloud, &topology).map_err(|e| e.to_string())?;
    let term = satisfaction_term(&before, &after).map_err(|e| e.to_string())?;
    let want = 1.9545;
    if (term - want).abs() <= 0.001 {
        Ok(format!("carrier to cloud term {term:.10}, within 0.001 of {want}"))
    } else {
        Err(format!("carrier to cloud term {term:.10}, want {want} within 0.001"))
    }
}

/// Criterion 3: branch and bound equals exhaustive enumeration bitwise on
/// 200 seeded random models, and every returned assignment is feasible.
fn solver_cross_check() -> Result<String, String> {
    let started = Instant::now();
    let limits = RandomModelLimits::default();
    let budget = SolveBudget::nodes_only(10_000_000);
    for seed in 0..200u64 {
        let model = random_model(seed, &limits);
        let exact = solve_exact(&model, &budget).map_err(|e| format!("seed {seed}: {e}"))?;
        let oracle =
            brute_force(&model, DEFAULT_ENUMERATION_CAP).map_err(|e| format!("seed {seed}: {e}"))?;
        if !exact.certified {
            return Err(format!("seed {seed}: solve ended uncertified"));
        }
        if exact.objective != oracle.objective {
            return Err(format!(
                "seed {seed}: objective {} differs from enumerated {}",
                exact.objective, oracle.objective
            ));
        }
        if !model.is_feasible(&exact.choice) {
            return Err(format!("seed {seed}: returned assignment is infeasible"));
        }
    }
    let elapsed = started.elapsed();
    if elapsed > Duration::from_secs(60) {
        return Err(format!("200 models took {elapsed:.2?}, budget is 60 s"));
    }
    Ok(format!("200 random models match enumeration bitwise in {elapsed:.2?}"))
}

struct SweepOutcome {
    rows: Vec<placesim::experiment::MetricsRow>,
    runs: usize,
    elapsed: Duration,
}

static SWEEP: OnceLock<Result<SweepOutcome, String>> = OnceLock::new();

/// Shared by criteria 4 and 5: the benchmark scenario at n in {100, 200,
/// 400}, ten seeds each, run in parallel.
fn sweep() -> &'static Result<SweepOutcome, String> {
    SWEEP.get_or_init(|| {
        let started = Instant::now();
        let mut jobs: Vec<(usize, u64)> = Vec::new();
        for n in [100usize, 200, 400] {
            for seed in 1..=10u64 {
                jobs.push((n, seed));
            }
        }
        let traces: Result<Vec<_>, String> = jobs
            .par_iter()
            .map(|&(n, seed)| {
                let mut config = baseline_scenario();
                config.run.targets = n;
                config.run.seed = seed;
                run_simulation(&config).map_err(|e| format!("n={n} seed={seed}: {e}"))
            })
            .collect();
        let rows = summarize(&traces?).map_err(|e| e.to_string())?;
        Ok(SweepOutcome { rows, runs: jobs.len(), elapsed: started.elapsed() })
    })
}

/// Criterion 4: mean moved fraction lands in [0.05, 0.15] for every n.
fn moved_fraction_band() -> Result<String, String> {
    let sweep = sweep().as_ref().map_err(|e| e.clone())?;
    if sweep.elapsed > Duration::from_secs(600) {
        return Err(format!("sweep took {:.1?}, budget is 10 min", sweep.elapsed));
    }
    let mut parts = Vec::new();
    let mut out_of_band = Vec::new();
    for row in &sweep.rows {
        if !(0.05..=0.15).contains(&row.mean_moved_fraction) {
            out_of_band.push(row.targets);
        }
        parts.push(format!("n={} {:.4}", row.targets, row.mean_moved_fraction));
    }
    if !out_of_band.is_empty() {
        return Err(format!(
            "mean moved fraction outside [0.05, 0.15] for n in {:?} ({})",
            out_of_band,
            parts.join(", ")
        ));
    }
    Ok(format!("{} runs in {:.1?}; {}", sweep.runs, sweep.elapsed, parts.join(", ")))
}

/// Criterion 5: mean satisfaction term over moved apps sits in [1.90, 2.00)
/// for every n, and the per-n means agree to within 0.04.
fn moved_term_band() -> Result<String, String> {
    let sweep = sweep().as_ref().map_err(|e| e.clone())?;
    let mut means = Vec::new();
    let mut parts = Vec::new();
    for row in &sweep.rows {
        let term = row
            .mean_moved_term
            .ok_or_else(|| format!("n={}: no moves in any round", row.targets))?;
        if !(1.90..2.00).contains(&term) {
            return Err(format!("n={}: mean moved term {term:.4} outside [1.90, 2.00)", row.targets));
        }
        means.push(term);
        parts.push(format!("n={} {:.4}", row.targets, term));
    }
    let spread = means.iter().cloned().fold(f64::MIN, f64::max)
        - means.iter().cloned().fold(f64::MAX, f64::min);
    if spread > 0.04 {
        return Err(format!("per-n means spread {spread:.4} exceeds 0.04 ({})", parts.join(", ")));
    }
    Ok(format!("{}; spread {spread:.4}", parts.join(", ")))
}

fn build_state(config: &ScenarioConfig) -> Result<(SystemState, Vec<PlacementRequest>), String> {
    let topology =
        build_topology(&config.topology, &config.hardware).map_err(|e| e.to_string())?;
    let inputs: Vec<SiteId> = topology.input_nodes().collect();
    let requests =
        generate_requests(&config.apps, &inputs, config.run.total, config.run.rng, config.run.seed)
            .map_err(|e| e.to_string())?;
    let catalog: Vec<AppProfile> = config.apps.iter().map(|e| e.profile.clone()).collect();
    let state = SystemState::new(topology, catalog).map_err(|e| e.to_string())?;
    Ok((state, requests))
}

/// Criterion 6: a certified optimum for the full n=400 trial within 5 min.
fn full_scale_certification() -> Result<String, String> {
    let mut config = baseline_scenario();
    config.run.targets = 400;
    config.run.seed = 1;
    let (mut state, requests) = build_state(&config)?;
    for request in &requests {
        state.place(request).map_err(|e| e.to_string())?;
    }
    let targets = select_targets(&state, config.run.targets);
    if targets.is_empty() {
        return Err("nothing was placed".into());
    }

    let budget = SolveBudget { max_nodes: u64::MAX, max_wall: Some(Duration::from_secs(300)) };
    let started = Instant::now();
    let plan = trial_reconfigure(&state, &targets, &budget).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    if !plan.certified {
        return Err(format!("trial ended uncertified after {elapsed:.2?}"));
    }
    if elapsed >= Duration::from_secs(300) {
        return Err(format!("certified but took {elapsed:.2?}, budget is 5 min"));
    }
    Ok(format!(
        "{} targets certified in {elapsed:.2?} ({} nodes, {} LP solves, {} moves)",
        targets.len(),
        plan.stats.nodes,
        plan.stats.lp_solves,
        plan.moved_count()
    ))
}

fn eighths(rng: &mut ChaCha8Rng, lo: u32, hi: u32) -> f64 {
    f64::from(rng.random_range(lo..=hi)) / 8.0
}

/// Random small scenario for the safety fuzz. Every quantity is a multiple
/// of 1/8 so capacity sums are exact regardless of addition order; the cloud
/// tier always stocks all three device kinds so no profile is unplaceable
/// everywhere by construction.
fn mini_scenario(index: u64) -> ScenarioConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(index.wrapping_mul(0x9E37_79B9_7F4A_7C15));

    let clouds = rng.random_range(1..=2u32);
    let carriers = clouds * rng.random_range(1..=3u32);
    let users = carriers * rng.random_range(1..=3u32);
    let inputs = users * rng.random_range(1..=3u32);
    let shape = TopologyShape { clouds, carriers, users, inputs };

    let tier = |always: bool, rng: &mut ChaCha8Rng| -> Vec<DeviceSpec> {
        let mut specs = Vec::new();
        for kind in [DeviceKind::Cpu, DeviceKind::Gpu, DeviceKind::Fpga] {
            if always || rng.random_range(0..10u32) < 7 {
                specs.push(DeviceSpec {
                    kind,
                    count: rng.random_range(1..=2),
                    capacity: eighths(rng, 8, 64),
                    month_cost: f64::from(rng.random_range(10..=50u32)) * 100.0,
                });
            }
        }
        specs
    };
    let hardware = HardwareCatalog {
        cloud_devices: tier(true, &mut rng),
        carrier_devices: tier(false, &mut rng),
        user_devices: tier(false, &mut rng),
        user_uplink: LinkSpec {
            bandwidth_mbps: eighths(&mut rng, 8, 32),
            month_cost: f64::from(rng.random_range(10..=80u32)) * 100.0,
        },
        carrier_uplink: LinkSpec {
            bandwidth_mbps: eighths(&mut rng, 32, 128),
            month_cost: f64::from(rng.random_range(10..=80u32)) * 100.0,
        },
    };

    let profile_count = rng.random_range(1..=2usize);
    let mut apps = Vec::new();
    for p in 0..profile_count {
        let kind = [DeviceKind::Cpu, DeviceKind::Gpu, DeviceKind::Fpga]
            [rng.random_range(0..3usize)];
        let mut processing_time = BTreeMap::new();
        for k in [DeviceKind::Cpu, DeviceKind::Gpu, DeviceKind::Fpga] {
            processing_time.insert(k, eighths(&mut rng, 2, 32));
        }
        let profile = AppProfile {
            name: format!("app{p}"),
            required_kind: kind,
            demand: eighths(&mut rng, 1, 8),
            bandwidth_mbps: eighths(&mut rng, 1, 16),
            data_size_mb: eighths(&mut rng, 1, 16),
            processing_time,
        };
        let mut options = Vec::new();
        for o in 0..rng.random_range(1..=3usize) {
            let which = rng.random_range(0..3u32);
            let time_limit = (which != 1).then(|| eighths(&mut rng, 8, 512));
            let price_limit =
                (which != 0).then(|| f64::from(rng.random_range(1..=300u32)) * 100.0);
            options.push(MenuOption {
                label: format!("o{o}"),
                weight: rng.random_range(1..=3),
                time_limit,
                price_limit,
            });
        }
        apps.push(WorkloadEntry { profile, options, share: 1 });
    }

    let p = profile_count;
    let initial = rng.random_range(1..=4usize) * p;
    let wave = rng.random_range(1..=3usize) * p;
    let waves = rng.random_range(1..=3usize);
    let total = initial + wave * waves;
    let run = placesim::experiment::RunPlan {
        initial,
        wave,
        total,
        targets: rng.random_range(0..=total),
        epsilon: [0.0, 0.01, 0.05, 0.25][rng.random_range(0..4usize)],
        rng: RngId::ChaCha8,
        seed: rng.random(),
    };

    ScenarioConfig {
        version: placesim::experiment::scenario::SCENARIO_VERSION,
        topology: shape,
        hardware,
        apps,
        run,
    }
}

/// Audit that trusts nothing but the topology: recomputes every outcome,
/// re-checks every bound, re-sums every capacity row from the placements
/// themselves, and requires the ledger to agree. Exact because the fuzz
/// scenarios use dyadic quantities only.
fn external_audit(state: &SystemState) -> Result<(), String> {
    let topology = state.topology();
    let mut device_used = vec![0.0f64; topology.devices().len()];
    let mut link_used = vec![0.0f64; topology.links().len()];

    for (&id, placement) in state.placements() {
        let profile = state.profile_of(placement);
        let fresh = outcome(profile, placement.input, placement.site, topology)
            .map_err(|e| format!("request {id:?}: {e}"))?;
        if fresh != placement.outcome {
            return Err(format!("request {id:?}: stored outcome drifted"));
        }
        if !placement.menu.admits(fresh.response_time, fresh.price) {
            return Err(format!("request {id:?}: placement violates its original bounds"));
        }
        let path = topology
            .path_links(placement.input, placement.site)
            .map_err(|e| format!("request {id:?}: {e}"))?;
        if path != placement.path {
            return Err(format!("request {id:?}: stored path is not the tree path"));
        }
        let device = topology.device(placement.device);
        if device.site != placement.site || device.kind != profile.required_kind {
            return Err(format!("request {id:?}: device does not match site or kind"));
        }
        device_used[placement.device.0 as usize] += profile.demand;
        for link in &path {
            link_used[link.0 as usize] += profile.bandwidth_mbps;
        }
    }

    for device in topology.devices() {
        let used = device_used[device.id.0 as usize];
        if used > device.capacity {
            return Err(format!(
                "{} over capacity: {used} > {}",
                topology.device_name(device.id),
                device.capacity
            ));
        }
        if state.ledger().device_used(device.id) != used {
            return Err(format!("{} ledger drift", topology.device_name(device.id)));
        }
    }
    for link in topology.links() {
        let used = link_used[link.id.0 as usize];
        if used > link.bandwidth_mbps {
            return Err(format!("link {:?} over bandwidth: {used} > {}", link.id, link.bandwidth_mbps));
        }
        if state.ledger().link_used(link.id) != used {
            return Err(format!("link {:?} ledger drift", link.id));
        }
    }
    Ok(())
}

struct MiniStats {
    placed: u64,
    rejected: u64,
    rounds: u64,
    applied: u64,
}

fn run_mini(index: u64) -> Result<MiniStats, String> {
    let config = mini_scenario(index);
    config.validate().map_err(|e| format!("generated config invalid: {e}"))?;
    let (mut state, requests) = build_state(&config)?;
    let budget = SolveBudget::nodes_only(1_000_000);
    let mut stats = MiniStats { placed: 0, rejected: 0, rounds: 0, applied: 0 };

    let mut chunks = vec![config.run.initial];
    chunks.extend(std::iter::repeat_n(
        config.run.wave,
        (config.run.total - config.run.initial) / config.run.wave,
    ));
    let mut cursor = 0;
    for (wave, chunk) in chunks.into_iter().enumerate() {
        for request in &requests[cursor..cursor + chunk] {
            match state.place(request).map_err(|e| e.to_string())? {
                PlaceOutcome::Placed(_) => stats.placed += 1,
                PlaceOutcome::Rejected(_) => stats.rejected += 1,
            }
        }
        cursor += chunk;

        if wave > 0 && config.run.targets > 0 && !state.placements().is_empty() {
            let targets = select_targets(&state, config.run.targets);
            let digest_before = state.digest();
            let plan = trial_reconfigure(&state, &targets, &budget).map_err(|e| e.to_string())?;
            if state.digest() != digest_before {
                return Err("trial reconfiguration mutated the state".into());
            }
            let report =
                apply_if_beneficial(&mut state, &plan, config.run.epsilon).map_err(|e| e.to_string())?;
            if report.applied {
                stats.applied += 1;
                if !(plan.improvement() >= config.run.epsilon) {
                    return Err(format!(
                        "applied plan improves by {} which is under epsilon {}",
                        plan.improvement(),
                        config.run.epsilon
                    ));
                }
                if !(report.s_after < report.s_before) {
                    return Err("applied plan does not strictly decrease the objective".into());
                }
            }
            stats.rounds += 1;
        }

        state.audit().map_err(|e| format!("internal audit failed: {e}"))?;
        external_audit(&state)?;
    }
    Ok(stats)
}

/// Criterion 7: 1000 randomized mini-scenarios, full audit after every wave.
fn fuzz_audits() -> Result<String, String> {
    let started = Instant::now();
    let results: Result<Vec<MiniStats>, String> = (0..1000u64)
        .into_par_iter()
        .map(|index| run_mini(index).map_err(|e| format!("scenario {index}: {e}")))
        .collect();
    let results = results?;
    let placed: u64 = results.iter().map(|s| s.placed).sum();
    let rejected: u64 = results.iter().map(|s| s.rejected).sum();
    let rounds: u64 = results.iter().map(|s| s.rounds).sum();
    let applied: u64 = results.iter().map(|s| s.applied).sum();
    Ok(format!(
        "1000 runs clean in {:.1?}: {placed} placed, {rejected} rejected, {applied} of {rounds} rounds applied",
        started.elapsed()
    ))
}

/// Criterion 8: identical seeds give byte-identical JSON and CSV exports.
fn deterministic_exports() -> Result<String, String> {
    let config = baseline_scenario();
    let first = run_simulation(&config).map_err(|e| e.to_string())?;
    let second = run_simulation(&config).map_err(|e| e.to_string())?;

    if first.final_digest != second.final_digest {
        return Err("final state digests differ between identical runs".into());
    }
    let json_a = first.to_json().map_err(|e| e.to_string())?;
    let json_b = second.to_json().map_err(|e| e.to_string())?;
    if json_a != json_b {
        return Err("trace JSON differs between identical runs".into());
    }
    let csv_a = first.wave_report_csv();
    let csv_b = second.wave_report_csv();
    if csv_a != csv_b {
        return Err("wave report CSV differs between identical runs".into());
    }
    let rows_a = summarize(std::slice::from_ref(&first)).map_err(|e| e.to_string())?;
    let rows_b = summarize(std::slice::from_ref(&second)).map_err(|e| e.to_string())?;
    if metrics_csv(&rows_a) != metrics_csv(&rows_b) {
        return Err("metrics CSV differs between identical runs".into());
    }
    Ok(format!(
        "trace JSON ({} bytes), wave CSV ({} bytes), and metrics CSV byte-identical across reruns",
        json_a.len(),
        csv_a.len()
    ))
}
