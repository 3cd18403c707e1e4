//! Acceptance gate: one PASS/FAIL line per criterion; exits non-zero if any
//! criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod oracle;

use std::path::Path;
use std::process::Command;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use ontopurify_core::gen::{random_ontology, random_pair};
use ontopurify_core::owl::{parse_json, parse_owl, serialize_json, serialize_owl};
use ontopurify_core::purify::replay;
use ontopurify_core::{find_mismatches, purify};
use ontopurify_service::{spawn, AppState, NullStore};
use rand::Rng;
use serde_json::Value;

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn verdict(name: &'static str, passed: bool, detail: String) -> Verdict {
    Verdict {
        name,
        passed,
        detail,
    }
}

fn purification_convergence() -> Verdict {
    let mut rng = oracle::rng(0xC0FFEE);
    let mut failures = Vec::new();
    let mut slowest = Duration::ZERO;
    let mut max_n = 0;
    for trial in 0..1000 {
        let (reference, local) = random_pair(&mut rng, 500, 50);
        max_n = max_n.max(reference.len());
        let start = Instant::now();
        let result = purify(&local, &reference);
        let took = start.elapsed();
        slowest = slowest.max(took);
        match result {
            Ok(p) => {
                let n = p.initial.n() as usize;
                if !p.final_report.is_clean()
                    || !p.purified.canonical_eq(&reference)
                    || p.iterations > n
                    || took >= Duration::from_secs(1)
                {
                    failures.push(format!(
                        "trial {trial}: final {} iterations {} of N {n}, {took:?}",
                        p.final_report.summary(),
                        p.iterations
                    ));
                }
            }
            Err(e) => failures.push(format!("trial {trial}: {e}")),
        }
    }
    verdict(
        "purification convergence (1000 pairs, N <= 500, <= 50 edits)",
        failures.is_empty(),
        format!("max N {max_n}, slowest pair {slowest:?}, failures {failures:?}"),
    )
}

fn mismatch_index_oracle() -> Verdict {
    let mut rng = oracle::rng(0xD1FF);
    let mut failures = Vec::new();
    for trial in 0..1000 {
        let (reference, local) = random_pair(&mut rng, 500, 50);
        let expected = oracle::oracle_diff(&local, &reference);
        match find_mismatches(&local, &reference) {
            Ok(r) => {
                let mi = (*r.mi().numer(), *r.mi().denom());
                let kinds: Vec<_> = r
                    .mismatches()
                    .iter()
                    .map(|m| (m.id.get(), m.kinds.clone()))
                    .collect();
                let want: Vec<_> = expected.kinds.clone().into_iter().collect();
                if (r.m(), r.n(), mi) != (expected.m, expected.n, expected.reduced) || kinds != want
                {
                    failures.push(format!(
                        "trial {trial}: got {} want {}/{}",
                        r.summary(),
                        expected.m,
                        expected.n
                    ));
                }
            }
            Err(e) => failures.push(format!("trial {trial}: {e}")),
        }
    }
    verdict(
        "mismatching index equals brute-force oracle (1000 pairs, exact rational)",
        failures.is_empty(),
        format!("failures {failures:?}"),
    )
}

fn count_oracle() -> Verdict {
    let mut rng = oracle::rng(0xC0DE);
    let mut failures = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=500);
        let o = random_ontology(&mut rng, n);
        if o.count_nodes() != oracle::oracle_count(&o) || o.count_nodes() != n {
            failures += 1;
        }
    }
    verdict(
        "count_nodes equals exhaustive traversal (1000 trees)",
        failures == 0,
        format!("{failures} mismatches"),
    )
}

fn round_trips() -> Verdict {
    let mut rng = oracle::rng(0x0710);
    let mut failures = Vec::new();
    for trial in 0..500 {
        let (_, o) = random_pair(&mut rng, 300, 30);
        let owl = serialize_owl(&o);
        let json = serialize_json(&o);
        let ok = match (parse_owl(&owl), parse_json(&json)) {
            (Ok(a), Ok(b)) => {
                a.canonical_eq(&o)
                    && b.canonical_eq(&o)
                    && serialize_owl(&a) == owl
                    && serialize_json(&b) == json
                    && serialize_owl(&o) == owl
                    && serialize_json(&o) == json
            }
            _ => false,
        };
        if !ok {
            failures.push(trial);
        }
    }
    verdict(
        "OWL and JSON round trips, byte-deterministic (500 ontologies)",
        failures.is_empty(),
        format!("failing trials {failures:?}"),
    )
}

fn patch_replay() -> Verdict {
    let mut rng = oracle::rng(0x2E91);
    let mut failures = Vec::new();
    for trial in 0..1000 {
        let (reference, local) = random_pair(&mut rng, 500, 50);
        match purify(&local, &reference) {
            Ok(p) => match replay(&local, &p.log) {
                Ok(r) if r == p.purified && serialize_json(&r) == serialize_json(&p.purified) => {}
                Ok(_) => failures.push(format!("trial {trial}: replay differs")),
                Err(e) => failures.push(format!("trial {trial}: {e}")),
            },
            Err(e) => failures.push(format!("trial {trial}: {e}")),
        }
    }
    verdict(
        "patch log replay reproduces the purified ontology (1000 pairs)",
        failures.is_empty(),
        format!("failures {failures:?}"),
    )
}

fn read_json(
    agent: &ureq::Agent,
    url: &str,
    token: Option<&str>,
    body: Option<&str>,
) -> (u16, Value) {
    let mut response = match body {
        Some(b) => agent
            .post(url)
            .header("Authorization", format!("Bearer {}", token.unwrap_or("")))
            .send(b)
            .unwrap(),
        None => agent.get(url).call().unwrap(),
    };
    let status = response.status().as_u16();
    let text = response.body_mut().read_to_string().unwrap();
    (status, serde_json::from_str(&text).unwrap_or(Value::Null))
}

/// 16 readers search for "probe" while one writer inserts `Probe k` nodes.
/// At revision r exactly r probes exist, so any response whose hit count
/// differs from its revision is a torn snapshot.
fn read_your_writes() -> Verdict {
    let fixture = include_str!("../../../fixtures/theatre.owl");
    let rt = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(8)
        .enable_all()
        .build()
        .unwrap();
    let state = Arc::new(AppState::new(
        parse_owl(fixture).unwrap(),
        None,
        "acceptance",
        true,
        Arc::new(NullStore),
    ));
    let running = rt.block_on(async {
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        spawn(Arc::clone(&state), listener).unwrap()
    });
    let base = running.base_url();
    let agent = || -> ureq::Agent {
        ureq::Agent::config_builder()
            .http_status_as_error(false)
            .build()
            .into()
    };

    let done = Arc::new(AtomicBool::new(false));
    let torn = Arc::new(AtomicU64::new(0));
    let regressions = Arc::new(AtomicU64::new(0));
    let reads = Arc::new(AtomicU64::new(0));
    let readers: Vec<_> = (0..16)
        .map(|_| {
            let (done, torn, regressions, reads) = (
                done.clone(),
                torn.clone(),
                regressions.clone(),
                reads.clone(),
            );
            let url = format!("{base}/search?q=probe&domain=theatre");
            let agent = agent();
            thread::spawn(move || {
                let mut last = 0;
                while !done.load(Ordering::Relaxed) {
                    let (status, body) = read_json(&agent, &url, None, None);
                    let revision = body["revision"].as_u64().unwrap_or(u64::MAX);
                    let hits = body["results"]
                        .as_array()
                        .map_or(u64::MAX - 1, |r| r.len() as u64);
                    if status != 200 || hits != revision {
                        torn.fetch_add(1, Ordering::Relaxed);
                    }
                    if revision < last {
                        regressions.fetch_add(1, Ordering::Relaxed);
                    }
                    last = revision;
                    reads.fetch_add(1, Ordering::Relaxed);
                }
            })
        })
        .collect();

    let writer = agent();
    let mut passed = 0;
    for k in 1..=100u64 {
        let (status, body) = read_json(
            &writer,
            &format!("{base}/admin/nodes"),
            Some("acceptance"),
            Some(&format!(r#"{{"parent": 1, "label": "Probe {k}"}}"#)),
        );
        let r = body["revision"].as_u64().unwrap_or(0);
        let (_, seen) = read_json(
            &writer,
            &format!("{base}/search?q=probe%20{k}&domain=theatre"),
            None,
            None,
        );
        let visible = seen["results"][0]["path"][1] == Value::String(format!("Probe {k}"));
        if status == 200 && r == k && seen["revision"].as_u64().unwrap_or(0) >= r && visible {
            passed += 1;
        }
    }
    done.store(true, Ordering::Relaxed);
    for r in readers {
        r.join().unwrap();
    }
    rt.block_on(running.shutdown()).unwrap();
    let torn = torn.load(Ordering::Relaxed);
    let regressions = regressions.load(Ordering::Relaxed);
    verdict(
        "read-your-writes under 16 readers / 1 writer (100 trials)",
        passed == 100 && torn == 0 && regressions == 0,
        format!(
            "{passed}/100 trials, {torn} torn snapshots, {regressions} revision regressions, {} concurrent reads",
            reads.load(Ordering::Relaxed)
        ),
    )
}

fn final_counts(csv: &str) -> (u64, u64) {
    let mut ontology = 0;
    let mut keyword = 0;
    for line in csv.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let perfect: u64 = fields[2].parse().unwrap();
        match fields[0] {
            "ontology" => ontology = perfect,
            "keyword" => keyword = perfect,
            other => panic!("unknown engine {other}"),
        }
    }
    (ontology, keyword)
}

fn benchmark_shape() -> Verdict {
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/theatre.owl");
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_ontopurify"))
        .args([
            "bench",
            fixture.to_str().unwrap(),
            "--pages",
            "1000",
            "--queries",
            "50",
            "--seed",
            "42",
        ])
        .output()
        .unwrap();
    let took = start.elapsed();
    let csv = String::from_utf8(out.stdout).unwrap();
    let header_ok = csv.lines().next() == Some("engine,elapsed_ms,perfect_pages");
    let (ontology, keyword) = final_counts(&csv);
    let ratio = ontology as f64 / keyword.max(1) as f64;
    verdict(
        "benchmark: ontology >= keyword and >= 1.2x on theatre (n=1000, m=50, < 10 s)",
        out.status.success()
            && header_ok
            && ontology >= keyword
            && ratio >= 1.2
            && took < Duration::from_secs(10),
        format!("ontology {ontology}, keyword {keyword}, ratio {ratio:.3}, {took:?}"),
    )
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("convergence", purification_convergence),
        ("mi-oracle", mismatch_index_oracle),
        ("count-oracle", count_oracle),
        ("round-trip", round_trips),
        ("read-your-writes", read_your_writes),
        ("patch-replay", patch_replay),
        ("benchmark", benchmark_shape),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (key, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| key.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let v = check();
        let status = if v.passed { "PASS" } else { "FAIL" };
        println!(
            "{status} {}: {} [{:.1?}]",
            v.name,
            v.detail,
            start.elapsed()
        );
        if !v.passed {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
