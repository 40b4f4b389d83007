//! Acceptance gate. Each criterion prints one `PASS` or `FAIL` line; the
//! process exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use pruw_core::ffield::{PrimeField, MERSENNE_31};
use pruw_core::planner::{
    build_plan, c2_weights, choose_mixture, four_class_alloc, mixture_c1, mixture_c2, total_cost,
    C2Branch, CostScalars, MdsCode, MixtureChoice, StoragePlan, StorageProfile,
};
use pruw_core::ratio::{format_decimal, in_unit_interval, int, rat, sum, to_f64, Rational};
use pruw_core::sim::{install_plan, measure_costs, privacy_probe, PlainOracle, ProbeConfig, ProbeMethod, ProbeMode};
use pruw_core::Error;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut out = f();
    let elapsed = start.elapsed();
    out.detail.push_str(&format!("; {:.2}s", elapsed.as_secs_f64()));
    if let Some(limit) = limit {
        if elapsed > limit {
            out.pass = false;
            out.detail.push_str(&format!(" exceeds {}s", limit.as_secs()));
        }
    }
    out
}

fn close(x: &Rational, target: f64, tol: f64) -> bool {
    (to_f64(x) - target).abs() <= tol
}

fn dec(x: &Rational) -> String {
    format_decimal(x, 6)
}

fn example_mu() -> Vec<Rational> {
    let mut mu = vec![rat(37, 100); 5];
    mu.extend(vec![rat(35, 100); 7]);
    mu
}

/// Profile of the worked example with the coding parameter rounded to 2.7 as
/// in the reference numbers.
fn example_profile() -> StorageProfile {
    StorageProfile::with_coding_parameter(example_mu(), rat(27, 10)).unwrap()
}

fn aligned(prof: &StorageProfile, m: u64) -> StoragePlan {
    let granularity = build_plan(prof, m, 1, true).unwrap().granularity;
    build_plan(prof, m, granularity, false).unwrap()
}

fn criterion_1() -> Outcome {
    let sc = CostScalars::new(rat(27, 10), rat(43, 10)).unwrap();
    let c1 = mixture_c1(&sc).unwrap().cost;
    let c2 = mixture_c2(&sc).unwrap().cost;
    let w = c2_weights(&sc);
    let (chosen, _) = choose_mixture(&sc).unwrap();
    let tol = 1e-6;
    let pass = close(&c1, 6.6, 0.01)
        && close(&c2, 5.99, 0.01)
        && close(&w.alpha, 2.0 / 9.0, tol)
        && w.beta.is_one()
        && close(&w.delta, 9.0 / 70.0, tol)
        && chosen == MixtureChoice::C2;
    Outcome::new(
        pass,
        format!(
            "C1={} C2={} alpha={} beta={} delta={} chosen={chosen:?}",
            dec(&c1),
            dec(&c2),
            w.alpha,
            w.beta,
            w.delta
        ),
    )
}

fn criterion_2() -> Outcome {
    let prof = example_profile();
    let w = c2_weights(prof.scalars());
    let a = four_class_alloc(&prof, &w.alpha, &w.beta, &w.delta).unwrap();
    let tol = 0.002;
    let split = |v: &[Rational], big: f64, small: f64| {
        v[..5].iter().all(|x| close(x, big, tol)) && v[5..].iter().all(|x| close(x, small, tol))
    };
    let alloc_ok = split(&a.hat1, 0.1107, 0.0951)
        && split(&a.bar1, 0.033, 0.029)
        && a.hat2.iter().all(Zero::is_zero)
        && a.bar2.iter().all(|x| close(x, 0.226, tol));

    // Reference partition of the (2, 11) class: leave-one-out subsets, with
    // eta = 2.73e-4 when a 0.37 database is left out and 3.15e-2 otherwise,
    // solved for the reference allocation 0.1107 / 0.0951.
    let (k, r, n) = (2i64, 11usize, 12usize);
    let printed: Vec<Rational> = (0..n).map(|i| if i < 5 { rat(273, 1_000_000) } else { rat(315, 10_000) }).collect();
    let target: Vec<Rational> = (0..n).map(|i| if i < 5 { rat(1107, 10_000) } else { rat(951, 10_000) }).collect();
    let subsets: Vec<Vec<usize>> = (0..n).map(|i| (0..n).filter(|&j| j != i).collect()).collect();
    let implied = |eta: &[Rational]| {
        let mut out = vec![Rational::zero(); n];
        for (e, b) in eta.iter().zip(&subsets) {
            for &j in b {
                out[j] += e / int(k);
            }
        }
        out
    };
    let max_gap = |a: &[Rational], b: &[Rational]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).max().unwrap();
    let eps = rat(1, 1_000_000);

    // Fill residual, total against the class fraction, and bounds.
    let fill_residual = max_gap(&implied(&printed), &target);
    let total_residual = (sum(&printed) - &w.alpha * &w.beta).abs();
    let bounds_ok = subsets.iter().all(|b| b.len() == r) && printed.iter().all(in_unit_interval);
    let feasible_ok = fill_residual <= eps && total_residual <= eps && bounds_ok;

    // Exact leave-one-out solution for the reference allocation,
    // eta_i = S - K * target(i) with S = K * sum(target) / (N - 1).
    let total = int(k) * sum(&target) / int(n as i64 - 1);
    let exact: Vec<Rational> = target.iter().map(|t| &total - int(k) * t).collect();
    let rounds_to_printed = exact
        .iter()
        .zip(&printed)
        .all(|(e, p)| (e - p).abs() <= if p < &rat(1, 1000) { rat(5, 10_000_000) } else { rat(5, 100_000) });

    let plan = build_plan(&prof, 2, 1, true).unwrap();
    let solver_ok = plan.classes.iter().all(|c| c.partitions.verify(&c.alloc).is_ok());

    Outcome::new(
        alloc_ok && feasible_ok && solver_ok,
        format!(
            "hat1={}/{} bar1={}/{} bar2={} (tol 0.002: {alloc_ok}) | reference eta: fill residual={} sum residual={} bounds={bounds_ok} (tol 1e-6: {feasible_ok}); exact leave-one-out eta {}/{} rounds to reference={rounds_to_printed} | solver tables exact={solver_ok}",
            dec(&a.hat1[0]),
            dec(&a.hat1[5]),
            dec(&a.bar1[0]),
            dec(&a.bar1[5]),
            dec(&a.bar2[0]),
            format_decimal(&fill_residual, 7),
            format_decimal(&total_residual, 7),
            format_decimal(&exact[0], 7),
            format_decimal(&exact[5], 7),
        ),
    )
}

const GEOMETRIES: [(u64, usize); 5] = [(1, 4), (2, 7), (2, 8), (3, 11), (3, 12)];

fn single_class(k: u64, r: usize, m: u64) -> StoragePlan {
    aligned(&StorageProfile::new(vec![rat(1, k as i64); r]).unwrap(), m)
}

fn criterion_3() -> Outcome {
    let field = PrimeField::new(MERSENNE_31).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let (mut sessions, mut failures) = (0, Vec::new());
    for (k, r) in GEOMETRIES {
        for m in [2u64, 4] {
            let plan = single_class(k, r, m);
            let l = plan.length as usize;
            let initial: Vec<Vec<u64>> = (0..m).map(|_| field.random_vec(&mut rng, l)).collect();
            let mut oracle = PlainOracle::new(&field, initial.clone());
            let mut cluster = install_plan(&field, &plan, &initial, &mut rng).unwrap();
            for _ in 0..10 {
                let theta = rng.gen_range(0..m as usize);
                let delta = field.random_vec(&mut rng, l);
                let out = cluster.run_session(theta, &delta, &mut rng).unwrap();
                sessions += 1;
                if out.recovered != oracle.submodel(theta) {
                    failures.push(format!("read ({k},{r}) M={m}"));
                }
                oracle.apply(theta, &delta);
                if cluster.read_submodel(theta, &mut rng).unwrap().recovered != oracle.submodel(theta) {
                    failures.push(format!("write ({k},{r}) M={m}"));
                }
            }
            if !cluster.verify_against(&oracle, &mut rng).unwrap() {
                failures.push(format!("final state ({k},{r}) M={m}"));
            }
        }
    }
    Outcome::new(
        failures.is_empty() && sessions >= 100,
        format!("{sessions} sessions, q={MERSENNE_31}, mismatches={failures:?}"),
    )
}

fn criterion_4() -> Outcome {
    let field = PrimeField::new(MERSENNE_31).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let mut exact = Vec::new();
    for (k, r) in GEOMETRIES {
        let plan = single_class(k, r, 2);
        let initial: Vec<Vec<u64>> = (0..2).map(|_| field.random_vec(&mut rng, plan.length as usize)).collect();
        let mut cluster = install_plan(&field, &plan, &initial, &mut rng).unwrap();
        let delta = field.random_vec(&mut rng, plan.length as usize);
        let out = cluster.run_session(0, &delta, &mut rng).unwrap();
        let report = measure_costs(&out.ledger, &plan);
        let c = &report.classes[0];
        exact.push((MdsCode::new(k, r as u64), c.exact && report.total == total_cost(k, r as u64).unwrap()));
    }
    let per_class_ok = exact.iter().all(|(_, ok)| *ok);

    let plan = aligned(&example_profile(), 2);
    let initial: Vec<Vec<u64>> = (0..2).map(|_| field.random_vec(&mut rng, plan.length as usize)).collect();
    let mut cluster = install_plan(&field, &plan, &initial, &mut rng).unwrap();
    let delta = field.random_vec(&mut rng, plan.length as usize);
    let out = cluster.run_session(1, &delta, &mut rng).unwrap();
    let report = measure_costs(&out.ledger, &plan);
    let block = plan.classes.iter().map(|c| c.geometry.block()).max().unwrap();
    let band = rat(2 * block as i64, plan.length as i64);
    // The reference 5.99 is 539/90, the four-code cost at the reference
    // alpha = 2/9, beta = 1, delta = 9/70, printed to two decimals.
    let reference = rat(599, 100);
    let within_band = (&report.total - plan.theoretical_cost()).abs() <= band;
    let rounds_to_reference = (plan.theoretical_cost() - &reference).abs() <= rat(5, 1000);
    let classes_ok = report.classes.iter().all(|c| c.exact);
    Outcome::new(
        per_class_ok && within_band && rounds_to_reference && classes_ok,
        format!(
            "per-class exact={exact:?} | example L={} measured C_T={} ({}), mixture cost={}, |measured-mixture|<={} , |mixture-5.99|={}",
            plan.length,
            report.total,
            dec(&report.total),
            plan.theoretical_cost(),
            dec(&band),
            dec(&(plan.theoretical_cost() - &reference).abs()),
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    let mut run = |label: &str, cfg: ProbeConfig, enumerate: bool| {
        let report = privacy_probe(&cfg).unwrap();
        let method_ok = matches!(report.method, ProbeMethod::Enumeration { .. }) == enumerate;
        let ok = report.pass && method_ok && (!enumerate || report.max_tv.as_ref().is_some_and(|t| t.0.is_zero()));
        pass &= ok;
        let stat = if enumerate {
            format!("max TV={}", report.max_tv.map(|t| t.0.to_string()).unwrap_or_default())
        } else {
            let min_p = report.comparisons.iter().filter_map(|c| c.p_value).fold(1.0f64, f64::min);
            format!("min p={min_p:.4}")
        };
        lines.push(format!("{label} {stat}"));
    };
    run("index q=7 M=2 (1,4)", ProbeConfig::new(ProbeMode::Index, 7, 2, 1, 4), true);
    run("update q=7 (1,4) delta in {0,3}", ProbeConfig::new(ProbeMode::Update, 7, 2, 1, 4), true);
    run("security q=7 M=1 (1,4)", ProbeConfig::new(ProbeMode::Security, 7, 1, 1, 4), true);
    run("index q=31 M=4 (1,4)", ProbeConfig::new(ProbeMode::Index, 31, 4, 1, 4), false);
    run("update q=31 M=4 (1,4)", ProbeConfig::new(ProbeMode::Update, 31, 4, 1, 4), false);
    run("security q=31 M=4 (1,4)", ProbeConfig::new(ProbeMode::Security, 31, 4, 1, 4), false);
    Outcome::new(pass, lines.join(" | "))
}

fn plan_is_exact(plan: &StoragePlan) -> bool {
    let mu = plan.profile.mu();
    let mut per_db = vec![Rational::zero(); mu.len()];
    for c in &plan.classes {
        let (k, r) = (int(c.code.k as i64), int(c.code.r as i64));
        let cap = &c.fraction / &k;
        if sum(&c.alloc) != &c.fraction * &r / &k || c.alloc.iter().any(|a| a.is_negative() || *a > cap) {
            return false;
        }
        for (acc, a) in per_db.iter_mut().zip(&c.alloc) {
            *acc += a;
        }
    }
    per_db == mu
}

fn criterion_6() -> Outcome {
    let mut problems = Vec::new();

    let mut branches = std::collections::HashSet::new();
    let mut points = 0;
    for k in 10..=60 {
        for p in 20..=80 {
            let sc = CostScalars::new(rat(k, 10), rat(p, 10)).unwrap();
            let w = c2_weights(&sc);
            let fr = w.fractions();
            if ![&w.alpha, &w.beta, &w.delta].into_iter().all(in_unit_interval)
                || !fr.iter().all(in_unit_interval)
                || sum(&fr) != Rational::one()
            {
                problems.push(format!("weights at k={k}/10 p={p}/10"));
            }
            branches.insert(w.branch);
            points += 1;
        }
    }
    if branches.len() != 6 || !branches.contains(&C2Branch::IntegerK) {
        problems.push(format!("only {} branches reached", branches.len()));
    }

    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let (mut feasible, mut tried) = (0, 0);
    while feasible < 200 && tried < 10_000 {
        tried += 1;
        let n = rng.gen_range(6..=16);
        let mu: Vec<Rational> = (0..n).map(|_| rat(rng.gen_range(10..=100), 100)).collect();
        match build_plan(&StorageProfile::new(mu).unwrap(), 2, 1, true) {
            Ok(plan) => {
                feasible += 1;
                if !plan_is_exact(&plan) {
                    problems.push(format!("allocation mismatch for {:?}", plan.profile.mu()));
                }
            }
            Err(Error::InfeasibleCode { .. }) => {}
            Err(e) => problems.push(format!("planner error {e}")),
        }
    }
    if feasible < 200 {
        problems.push(format!("only {feasible} feasible profiles"));
    }

    for a in 1..=8u64 {
        for b in a + 1..=40 {
            if let (Ok(x), Ok(y)) = (total_cost(a, b), total_cost(a, b + 2)) {
                if y >= x {
                    problems.push(format!("C_T({a},{b}) not decreasing in b"));
                }
            }
            if let (Ok(x), Ok(y)) = (total_cost(a, b), total_cost(a + 2, b)) {
                if y <= x {
                    problems.push(format!("C_T({a},{b}) not increasing in a"));
                }
            }
        }
    }

    let mut pairs = 0;
    for _ in 0..100 {
        let base: Vec<i64> = (0..8).map(|_| rng.gen_range(1..=100)).collect();
        let mut other = base.clone();
        other.rotate_left(rng.gen_range(0..8));
        let moved = (other[0] - 1).min(100 - other[1]);
        other[0] -= moved;
        other[1] += moved;
        let prof = |v: &[i64]| {
            StorageProfile::with_coding_parameter(v.iter().map(|&x| rat(x, 100)).collect(), int(1)).unwrap()
        };
        let (pa, pb) = (prof(&base), prof(&other));
        let ca = mixture_c1(pa.scalars()).map(|m| m.cost);
        let cb = mixture_c1(pb.scalars()).map(|m| m.cost);
        if ca != cb {
            problems.push(format!("uncoded cost differs at p={}", pa.p()));
        }
        pairs += 1;
    }

    Outcome::new(
        problems.is_empty(),
        format!(
            "{points} grid points, {} branches, {feasible} feasible profiles of {tried}, {pairs} equal-sum pairs, problems={problems:?}",
            branches.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, Option<u64>, fn() -> Outcome); 6] = [
        ("mixture weights and costs of the k=2.7, p=4.3 example", Some(1), criterion_1),
        ("allocations and partitions of the twelve-database example", Some(1), criterion_2),
        ("randomized read-update-write round trips", Some(60), criterion_3),
        ("measured communication costs", None, criterion_4),
        ("privacy and security probes", Some(30), criterion_5),
        ("planner properties", Some(30), criterion_6),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.into_iter().enumerate() {
        let out = timed(limit.map(Duration::from_secs), run);
        println!("{} criterion {}: {name}: {}", if out.pass { "PASS" } else { "FAIL" }, i + 1, out.detail);
        failed += usize::from(!out.pass);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
