//! End-to-end acceptance checks. Runs without the libtest harness so that
//! one PASS/FAIL line per criterion is always printed.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use entrocone::bounds::{omega_in, realize_combination, theta_in};
use entrocone::polycone::{
    cone_membership, elemental_inequalities, face_obstructions, in_gamma_n, omega, parse_generators, strict_in_face,
    theta, FacePosition, RayId,
};
use entrocone::qusearch::{
    brute_force_oracle, check_feasibility_necessary, search, verify_witness, SearchConfig, SearchStatus, SupportSpec,
};
use entrocone::subset::canonical_order;
use entrocone::{EntropyVector, JointPMF, LogLinear, Sign, Subset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn fixture(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn support_sizes(verdict_sizes: &BTreeMap<Subset, u64>) -> Vec<u64> {
    canonical_order(3).iter().map(|s| verdict_sizes[s]).collect()
}

fn table1() -> Check {
    let pmf = JointPMF::parse(&fixture("table1.pmf")).map_err(|e| e.to_string())?;
    ensure!(pmf.support_len() == 48, "support has {} points", pmf.support_len());
    let h = pmf.entropy_vector();
    ensure!(h == f(), "entropy vector {:?}", h);
    let qu = pmf.is_quasi_uniform();
    ensure!(qu.is_qu, "not quasi-uniform: {:?}", qu.witness);
    let m = support_sizes(&qu.support_sizes);
    ensure!(m == [4, 4, 4, 16, 16, 16, 48], "support sizes {m:?}");
    Ok(format!("h = f exactly, m = {m:?}"))
}

fn table2() -> Check {
    let pmf = JointPMF::parse(&fixture("table2.pmf")).map_err(|e| e.to_string())?;
    ensure!(pmf.support_len() == 216, "support has {} points", pmf.support_len());
    let h = pmf.entropy_vector();
    let h12: LogLinear =
        [(54u64, 2i64), (72, 4), (108, 6), (216, 12)].iter().map(|&(m, r)| log(m).scale(&rational(1, r))).sum();
    ensure!(h.coords()[3] == h12, "h12 = {}", h.coords()[3]);
    ensure!(h == g(), "entropy vector {:?}", h);
    let shown = h12.approx_exp(4).map_err(|e| e.to_string())?;
    let value: f64 = shown.parse().map_err(|_| format!("bad decimal {shown}"))?;
    ensure!((value - 73.1091).abs() <= 0.0001 + 1e-12, "exp(h12) ≈ {shown}");
    let qu = pmf.is_quasi_uniform();
    ensure!(!qu.is_qu, "reported quasi-uniform");
    let w = qu.witness.ok_or("no witness")?;
    ensure!(w.subset == "12".parse().unwrap(), "witness subset {}", w.subset);
    Ok(format!(
        "h = g exactly, exp(h12) ≈ {shown}, non-QU witness on {{{}}} ({} vs {})",
        w.subset, w.low_mass, w.high_mass
    ))
}

fn theta_pipeline() -> Check {
    ensure!(strict_in_face(&f(), &theta()).unwrap().is_strict(), "f not strictly inside Θ");
    let sub = parse_generators("1,2,123p").unwrap();
    ensure!(cone_membership(&f(), &sub.generators).unwrap().is_none(), "f inside cone(e1,e2,e123')");
    let FacePosition::Outside { obstructions, .. } = strict_in_face(&f(), &sub).unwrap() else {
        return Err("f not reported outside cone(e1,e2,e123')".into());
    };
    let gap = &f().coords()[6] - &f().coords()[3];
    ensure!(
        obstructions
            .iter()
            .any(|(ineq, v)| ineq.describe() == "h123 >= h12" && *v == gap && v.sign() == Sign::Positive),
        "no h12 = h123 obstruction in {:?}",
        obstructions.iter().map(|(i, v)| format!("{} = {v}", i.describe())).collect::<Vec<_>>()
    );
    let verdict = theta_in(&f()).unwrap();
    ensure!(!verdict.member, "f accepted by Θ^in");
    let cert = verdict.decomposition.as_ref().ok_or("no decomposition")?;
    ensure!(cert.coefficient(RayId::R123p) == logq(4, 3), "λ123' = {}", cert.coefficient(RayId::R123p));
    let eq30 = verdict.condition("eq30").ok_or("no eq30")?;
    ensure!(!eq30.holds && eq30.rhs == log(2), "eq30 {} vs {}", eq30.lhs, eq30.rhs);
    Ok(format!("strict in Θ, h123 - h12 = {gap}, λ123' = {}", cert.coefficient(RayId::R123p)))
}

fn omega_pipeline() -> Check {
    let cert = cone_membership(&g(), &omega().generators).unwrap().ok_or("g outside Ω")?;
    let zeta = log_zeta();
    let expected = [
        (RayId::R1, log(4)),
        (RayId::R2, log(4)),
        (RayId::R3, log(216) - zeta.clone()),
        (RayId::R12, log(81) - zeta.clone()),
        (RayId::R123p, zeta.clone() - log(36)),
    ];
    for (r, v) in &expected {
        ensure!(cert.coefficient(*r) == *v, "λ{} = {}, expected {v}", r, cert.coefficient(*r));
    }
    ensure!(cert.recompose() == g(), "certificate does not recompose to g");
    ensure!(strict_in_face(&g(), &omega()).unwrap().is_strict(), "g not strictly inside Ω");
    ensure!(cone_membership(&g(), &theta().generators).unwrap().is_none(), "g inside Θ");
    let split = &(&g().coords()[0] + &g().coords()[1]) - &g().coords()[3];
    let obs = face_obstructions(&g(), &theta().generators).unwrap();
    ensure!(
        obs.iter().any(|(ineq, v)| ineq.describe() == "h1 + h2 >= h12" && *v == split && v.sign() == Sign::Positive),
        "no h1 + h2 = h12 obstruction"
    );
    let verdict = omega_in(&g()).unwrap();
    ensure!(!verdict.member, "g accepted by Ω^in");
    let eq39 = verdict.condition("eq39").ok_or("no eq39")?;
    ensure!(!eq39.holds && eq39.lhs == logq(9, 4) && eq39.rhs == log(3), "eq39: {} vs {}", eq39.lhs, eq39.rhs);
    let eq40 = verdict.condition("eq40").ok_or("no eq40")?;
    ensure!(!eq40.holds, "eq40 holds");
    Ok(format!("λ exact, strict in Ω, h1 + h2 - h12 = {split}, eq39 {} < {}", eq39.lhs, eq39.rhs))
}

fn random_nonneg(rng: &mut ChaCha8Rng) -> LogLinear {
    if rng.gen_ratio(1, 4) {
        return LogLinear::zero();
    }
    let terms = [2u64, 3, 5].map(|p| (p, rational(rng.gen_range(0..=6), rng.gen_range(1..=4))));
    LogLinear::from_terms(terms).unwrap()
}

fn random_positive(rng: &mut ChaCha8Rng) -> LogLinear {
    let v = random_nonneg(rng);
    if v.is_zero() {
        log(2)
    } else {
        v
    }
}

fn cone_soundness() -> Check {
    for r in RayId::ALL {
        ensure!(in_gamma_n(&r.entropy_vector()).unwrap().member, "generator {r} outside Γ3");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let all = RayId::ALL.into_iter().collect();
    for i in 0..500 {
        let terms: Vec<(RayId, LogLinear)> = RayId::ALL.into_iter().map(|r| (r, random_nonneg(&mut rng))).collect();
        let h = combine(&terms);
        ensure!(in_gamma_n(&h).unwrap().member, "combination {i} outside Γ3");
        let cert = cone_membership(&h, &all).unwrap().ok_or(format!("combination {i} not decomposed"))?;
        ensure!(cert.recompose() == h, "combination {i} does not round-trip");
    }
    let ineqs = elemental_inequalities(3).unwrap();
    for i in 0..100 {
        let k = rng.gen_range(0..ineqs.len());
        let target = &ineqs[k];
        let on_facet: Vec<(RayId, LogLinear)> = RayId::ALL
            .into_iter()
            .filter(|r| target.coeffs.iter().zip(r.vector()).map(|(a, b)| a * b).sum::<i64>() == 0)
            .map(|r| (r, random_positive(&mut rng)))
            .collect();
        let h = combine(&on_facet);
        let slack = ineqs
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, ineq)| ineq.evaluate(&h))
            .min_by(|a, b| a.cmp_value(b))
            .unwrap();
        let step = slack.scale(&rational(1, 16));
        let push: Vec<i64> = target.coeffs.iter().map(|c| -c).collect();
        let bumped = h.add(&EntropyVector::from_combination(3, &[(&step, &push)]).unwrap()).unwrap();
        let verdict = in_gamma_n(&bumped).unwrap();
        let reported: Vec<usize> = verdict.violations.iter().map(|v| v.index).collect();
        ensure!(
            !verdict.member && reported == [k],
            "perturbation {i} of {}: violations {reported:?}",
            target.describe()
        );
    }
    Ok("8 generators, 500 combinations round-tripped, 100 single violations identified".into())
}

fn inner_soundness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut accepted, mut rejected) = (0, 0);
    while accepted < 500 {
        let use_omega = rng.gen_bool(0.5);
        let l123p = if rng.gen_bool(0.5) { log(rng.gen_range(1..=30)) } else { random_nonneg(&mut rng) };
        let mut terms: Vec<(RayId, LogLinear)> =
            [RayId::R1, RayId::R2, RayId::R3].into_iter().map(|r| (r, random_nonneg(&mut rng))).collect();
        if use_omega {
            terms.push((RayId::R12, random_nonneg(&mut rng)));
        }
        terms.push((RayId::R123p, l123p));
        let h = combine(&terms);
        let verdict = if use_omega { omega_in(&h) } else { theta_in(&h) }.unwrap();
        if !verdict.member {
            rejected += 1;
            continue;
        }
        accepted += 1;
        ensure!(in_gamma_n(&h).unwrap().member, "accepted vector outside Γ3: {:?}", h);
    }
    for i in 0..10 {
        let rays: &[RayId] = if i % 2 == 0 {
            &[RayId::R1, RayId::R2, RayId::R3, RayId::R123p]
        } else {
            &[RayId::R1, RayId::R2, RayId::R3, RayId::R12, RayId::R123p]
        };
        let picks: Vec<(RayId, u64)> = rays.iter().map(|&r| (r, rng.gen_range(1..=3))).collect();
        let h = combine(&picks.iter().map(|&(r, m)| (r, log(m))).collect::<Vec<_>>());
        let verdict = if i % 2 == 0 { theta_in(&h) } else { omega_in(&h) }.unwrap();
        ensure!(verdict.member, "integer vector {i} rejected");
        let pmf = realize_combination(&picks).unwrap();
        ensure!(pmf.entropy_vector() == h, "product {i} has the wrong entropy vector");
    }
    Ok(format!("500 accepted ({rejected} rejected draws) all in Γ3, 10 realized by product PMFs"))
}

fn search_validation() -> Check {
    let deterministic = SearchConfig::default();
    let mut report = Vec::new();
    for (name, file, expected, limit) in [
        ("parity", "spec_parity.json", RayId::R123p.scaled(&log(2)), Duration::from_secs(1)),
        ("f", "spec_f.json", f(), Duration::from_secs(60)),
    ] {
        let spec = SupportSpec::from_json(&fixture(file)).map_err(|e| e.to_string())?;
        let start = Instant::now();
        let out = search(&spec, &deterministic).map_err(|e| e.to_string())?;
        let took = start.elapsed();
        let w = out.status.witness().ok_or(format!("{name}: {}", out.status.name()))?;
        ensure!(took < limit, "{name} took {took:?}");
        ensure!(w.is_quasi_uniform().is_qu && verify_witness(&spec, w), "{name} witness fails verification");
        ensure!(w.entropy_vector() == expected, "{name} witness has the wrong entropy vector");
        report.push(format!("{name} in {:.3}s", took.as_secs_f64()));
    }
    let mut swept = 0;
    for m1 in 1..=4u64 {
        for m2 in 1..=4u64 {
            for m12 in 1..=m1 * m2 {
                let spec = SupportSpec::from_sizes(2, &[m1, m2, m12]).unwrap();
                if !check_feasibility_necessary(&spec).ok {
                    continue;
                }
                let fast = search(&spec, &deterministic).unwrap();
                let slow = brute_force_oracle(&spec, 24).unwrap();
                ensure!(
                    matches!(fast.status, SearchStatus::Found(_)) == matches!(slow.status, SearchStatus::Found(_))
                        && fast.status != SearchStatus::BudgetExceeded,
                    "{spec}: search {} vs oracle {}",
                    fast.status.name(),
                    slow.status.name()
                );
                swept += 1;
            }
        }
    }
    report.push(format!("{swept} two-variable specs agree with the oracle"));
    Ok(report.join(", "))
}

fn open_fixture() -> Check {
    let spec = SupportSpec::from_json(&fixture("spec_eq41.json")).map_err(|e| e.to_string())?;
    let out = search(&spec, &SearchConfig::default()).map_err(|e| e.to_string())?;
    match &out.status {
        SearchStatus::Found(w) => {
            ensure!(
                verify_witness(&spec, w) && w.entropy_vector() == open_vector(),
                "Found witness fails verification"
            );
        }
        SearchStatus::BudgetExceeded => {}
        SearchStatus::ExhaustedInfeasible => return Err("search claims infeasibility".into()),
    }
    Ok(format!("{} after {} nodes in {:.1}s", out.status.name(), out.nodes_explored, out.elapsed.as_secs_f64()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check, Duration); 8] = [
        ("Table-1 reproduction", table1, Duration::from_secs(1)),
        ("Table-2 reproduction", table2, Duration::from_secs(1)),
        ("Θ pipeline on f", theta_pipeline, Duration::from_secs(1)),
        ("Ω pipeline on g", omega_pipeline, Duration::from_secs(1)),
        ("cone soundness", cone_soundness, Duration::from_secs(30)),
        ("inner-bound soundness", inner_soundness, Duration::from_secs(60)),
        ("search validation", search_validation, Duration::from_secs(120)),
        ("open-problem fixture", open_fixture, Duration::from_secs(180)),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let took = start.elapsed();
        let result = match result {
            Ok(detail) if took > *limit => Err(format!("{detail}; took {took:?}, limit {limit:?}")),
            other => other,
        };
        match result {
            Ok(detail) => println!("PASS criterion {} ({name}) [{:.2}s]: {detail}", i + 1, took.as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {} ({name}) [{:.2}s]: {why}", i + 1, took.as_secs_f64());
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
