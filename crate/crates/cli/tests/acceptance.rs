//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use num::{BigRational, One};
use ppir_cli::load_scenario;
use ppir_core::audit::{
    audit_non_repetition, query_distribution, rate_isi, rate_multi, sample_distribution, theorem_conditions, to_f64,
    tv_distance_f64, ComparisonReport, RateParams, ENUMERATION_LIMIT,
};
use ppir_core::exchange::{run_session, SessionTrace};
use ppir_core::field::PrimeField;
use ppir_core::mds::{Combinations, Generator};
use ppir_core::query::{Demands, Preconditions};
use ppir_core::scenario::{synthesize, Mode, Scenario, SynthConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Outcome = Result<String, String>;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.json"))
}

fn scenario(name: &str) -> Scenario {
    let text = std::fs::read_to_string(fixture(name)).unwrap();
    load_scenario(&text).unwrap().1
}

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, budget: Duration) -> Result<(), String> {
    check(elapsed < budget, format!("took {elapsed:?}, budget {budget:?}"))
}

fn example2_code() -> Generator {
    scenario("example2").generator(Mode::Single).unwrap()
}

fn encode_golden() -> Outcome {
    let g = example2_code();
    let f = g.field();
    let start = Instant::now();
    let c1 = g.encode(&f.vector(&[0, 1, 9, 6, 8]).unwrap()).unwrap();
    let c2 = g.encode(&f.vector(&[1, 7, 4, 1, 3]).unwrap()).unwrap();
    let elapsed = start.elapsed();
    check(c1.values() == [0, 1, 9, 6, 8, 10, 8, 10], format!("m1 -> {:?}", c1.values()))?;
    check(c2.values() == [1, 7, 4, 1, 3, 0, 0, 7], format!("m2 -> {:?}", c2.values()))?;
    within(elapsed, Duration::from_millis(1))?;
    Ok(format!("both codewords exact in {elapsed:?}"))
}

fn decode_golden() -> Outcome {
    let g = example2_code();
    let values = g.field().vector(&[0, 1, 10, 8, 10]).unwrap();
    let start = Instant::now();
    let m = g.decode_from_positions(&[0, 1, 5, 6, 7], &values).unwrap();
    let elapsed = start.elapsed();
    let m: Vec<u64> = m.iter().map(|x| x.value()).collect();
    check(m == [0, 1, 9, 6, 8], format!("decoded {m:?}"))?;
    let s = scenario("example2");
    let w23: Vec<u64> = s.store().message(23).unwrap().iter().map(|x| x.value()).collect();
    check(m[2] == w23[0] && w23 == [9, 4], format!("W23 = {w23:?}"))?;
    within(elapsed, Duration::from_millis(1))?;
    Ok(format!("[0,1,9,6,8] in {elapsed:?}, W23 = (9,4)"))
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn rate_goldens() -> Outcome {
    let start = Instant::now();
    let r2 = ComparisonReport::new(&RateParams::from_scenario(&scenario("example2")));
    let r3 = ComparisonReport::new(&RateParams::from_scenario(&scenario("example3")));
    let r5 = ComparisonReport::new(&RateParams::from_scenario(&scenario("example5")));
    let r1 = ComparisonReport::new(&RateParams::from_scenario(&scenario("example1")));
    let table = [
        ("ex2 R_isi", r2.r_isi.clone(), ratio(1, 12)),
        ("ex2 R_usi", r2.r_usi.clone().unwrap(), ratio(1, 16)),
        ("ex3 R_isi", r3.r_isi.clone(), ratio(1, 12)),
        ("ex3 R_usi", r3.r_usi.clone().unwrap(), ratio(1, 23)),
        ("ex5 R_multi", r5.r_multi.clone(), ratio(1, 20)),
        ("ex5 R_naive_multi", r5.r_naive_multi.clone(), ratio(1, 24)),
        ("fsi R", r1.r_isi.clone(), BigRational::one()),
    ];
    for (name, got, want) in &table {
        check(got == want, format!("{name} = {got}, expected {want}"))?;
    }
    check(r3.theorems.t2.holds(), format!("ex3 t2: {:?}", r3.theorems.t2))?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("{} rates exact, ex3 t2 holds", table.len()))
}

/// Fixtures for examples 2, 3 and 5 plus synthesized conforming scenarios.
fn sweep_scenarios() -> Vec<(String, Scenario, Mode)> {
    let mut out = vec![
        ("example2".to_string(), scenario("example2"), Mode::Single),
        ("example3".to_string(), scenario("example3"), Mode::Single),
        ("example5".to_string(), scenario("example5"), Mode::Multi),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE);
    for i in 0..12 {
        out.push((format!("synth-single-{i}"), synthesize(&mut rng, SynthConfig::single()), Mode::Single));
    }
    for i in 0..12 {
        out.push((format!("synth-multi-{i}"), synthesize(&mut rng, SynthConfig::multi()), Mode::Multi));
    }
    out
}

const SEEDS: u64 = 100;

struct SessionCheck {
    recovered: bool,
    distinct: bool,
    rate_matches: bool,
    label: String,
}

fn closed_form(s: &Scenario, mode: Mode) -> BigRational {
    let p = RateParams::from_scenario(s);
    match mode {
        Mode::Single => rate_isi(&p),
        Mode::Multi => rate_multi(&p),
    }
}

fn inspect(s: &Scenario, d: &Demands, t: &SessionTrace, expected: &BigRational) -> (bool, bool, bool) {
    let recovered = t.outcomes.len() == d.to_vec().len()
        && t.outcomes.iter().all(|o| {
            o.retrieved.as_ref().is_some_and(|m| {
                let content: Vec<u64> = s.store().message(m.message).unwrap().iter().map(|x| x.value()).collect();
                m.class == d.of_user(o.user)
                    && !s.side_information(o.user).holds(m.class, m.subclass)
                    && s.classes().pair_to_global(m.class, m.subclass).ok() == Some(m.message)
                    && m.symbols == content
            })
        });

    let queries = &t.projection().queries;
    let distinct = queries.len() == s.query_count()
        && (1..=s.gamma()).all(|i| queries.iter().map(|q| q.beta(i)).collect::<BTreeSet<_>>().len() == queries.len())
        && audit_non_repetition(queries).is_ok();

    // L / D against the closed form, cross-multiplied in integers
    let l = s.store().symbols_per_message();
    let d_measured: usize = t.answers.iter().map(|a| a.parities.len() * a.parities[0].len()).sum();
    let rate_matches = d_measured == t.download
        && BigRational::new(l.into(), d_measured.into()) == *expected
        && t.rate == *expected
        && num::BigInt::from(l) * expected.denom() == num::BigInt::from(d_measured) * expected.numer();
    (recovered, distinct, rate_matches)
}

fn session_sweep() -> (Vec<SessionCheck>, Duration, usize) {
    let start = Instant::now();
    let scenarios = sweep_scenarios();
    let n = scenarios.len();
    let checks = scenarios
        .par_iter()
        .flat_map(|(name, s, mode)| {
            let expected = closed_form(s, *mode);
            let jobs: Vec<(Demands, u64)> =
                Demands::all(s, *mode).into_iter().flat_map(|d| (0..SEEDS).map(move |seed| (d.clone(), seed))).collect();
            jobs.into_par_iter()
                .map(|(d, seed)| {
                    let label = format!("{name} demands {d} seed {seed}");
                    match run_session(s, &d, seed, Preconditions::Enforce) {
                        Ok(t) => {
                            let (recovered, distinct, rate_matches) = inspect(s, &d, &t, &expected);
                            SessionCheck { recovered, distinct, rate_matches, label }
                        }
                        Err(e) => SessionCheck {
                            recovered: false,
                            distinct: false,
                            rate_matches: false,
                            label: format!("{label}: {e}"),
                        },
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect();
    (checks, start.elapsed(), n)
}

fn summarize(checks: &[SessionCheck], pick: impl Fn(&SessionCheck) -> bool, what: &str) -> Outcome {
    let failed: Vec<&SessionCheck> = checks.iter().filter(|c| !pick(c)).collect();
    match failed.first() {
        None => Ok(format!("{} sessions, {what} 100%", checks.len())),
        Some(c) => Err(format!("{} of {} sessions failed, first: {}", failed.len(), checks.len(), c.label)),
    }
}

fn smallest_prime_at_least(n: u64) -> u64 {
    (n..).find(|&p| p > 1 && (2..p).take_while(|d| d * d <= p).all(|d| p % d != 0)).unwrap()
}

fn mds_round_trip() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut decodes = 0usize;
    for (n, k) in [(4usize, 2usize), (6, 3), (8, 5), (10, 6), (12, 7)] {
        let q = smallest_prime_at_least(n as u64);
        let f = PrimeField::new(q).unwrap();
        let g = Generator::systematic_rs(n, k, f).map_err(|e| format!("RS({n},{k}) over GF({q}): {e}"))?;
        let messages: Vec<Vec<_>> =
            (0..50).map(|_| (0..k).map(|_| f.reduce(rng.random_range(0..q))).collect()).collect();
        let words: Vec<Vec<_>> = messages.iter().map(|m| g.encode(m).unwrap().into_inner()).collect();
        for cols in Combinations::new(n, k) {
            let decoder = g.erasure_decoder(&cols).map_err(|e| format!("RS({n},{k}) {cols:?}: {e}"))?;
            for (m, w) in messages.iter().zip(&words) {
                let values: Vec<_> = cols.iter().map(|&c| w[c]).collect();
                let got = decoder.decode(&values).map_err(|e| e.to_string())?;
                check(&got == m, format!("RS({n},{k}) over GF({q}) positions {cols:?}"))?;
                decodes += 1;
            }
        }
    }
    within(start.elapsed(), Duration::from_secs(30))?;
    Ok(format!("{decodes} subset decodes over GF(5,7,11,11,13)"))
}

fn usi_sum(p: &RateParams) -> usize {
    p.mu.iter().zip(&p.k[0]).map(|(&m, &k)| (k + 1).min(m - k)).sum()
}

/// The scheme preconditions the audit gates the flags on.
fn scheme_ok(p: &RateParams) -> bool {
    let k = &p.k[0];
    let k_un = p.k_un();
    let queries = k_un + 1;
    let margin = (k_un + 1).div_ceil(p.eta);
    let ident = (0..p.eta).all(|i| {
        let c = i + 1;
        let hits = if c > queries { 0 } else { (queries - c) / p.eta + 1 };
        k[i] >= k_un.max(queries - hits).max(usize::from(p.eta > 1))
    });
    ident && p.mu.iter().zip(k).all(|(&m, &ki)| m >= ki + margin)
}

fn random_params(rng: &mut ChaCha8Rng, uniform: bool, eta_one: bool) -> RateParams {
    let gamma = rng.random_range(2..=7);
    let eta = if eta_one { 1 } else { rng.random_range(1..=gamma) };
    let k_un = rng.random_range(0..=4);
    let kk = rng.random_range(k_un..=k_un + 3);
    let m = rng.random_range(kk + 1..=2 * kk + 4);
    let mut k = Vec::new();
    let mut mu = Vec::new();
    for i in 0..gamma {
        let ki = match (uniform, i < eta) {
            (true, true) => kk,
            (true, false) => k_un,
            (false, true) => rng.random_range(k_un..=k_un + 3),
            (false, false) => rng.random_range(0..=k_un),
        };
        k.push(ki);
        mu.push(if uniform { m.max(ki + 1) } else { rng.random_range(ki + 1..=2 * ki + 4) });
    }
    if !uniform {
        // pin k_un
        if eta < gamma {
            k[gamma - 1] = k_un;
            mu[gamma - 1] = mu[gamma - 1].max(k_un + 1);
        }
    }
    RateParams::single(eta, mu, k)
}

fn sweep<F, H>(seed: u64, want: usize, gen: F, hypothesis: H, flag: fn(&ppir_core::audit::TheoremFlags) -> bool) -> Result<usize, String>
where
    F: Fn(&mut ChaCha8Rng) -> RateParams,
    H: Fn(&RateParams) -> bool,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut accepted = 0;
    for _ in 0..2_000_000 {
        let p = gen(&mut rng);
        if !(scheme_ok(&p) && hypothesis(&p)) {
            continue;
        }
        let flags = theorem_conditions(&p);
        check(flag(&flags), format!("flag disagrees on {p:?}: {flags:?}"))?;
        let lhs = usi_sum(&p);
        let rhs = (p.k_un() + 1) * (p.gamma() - p.eta + 1);
        check(lhs >= rhs, format!("sum {lhs} < {rhs} on {p:?}"))?;
        let r = ComparisonReport::new(&p);
        check(r.r_usi.as_ref().is_some_and(|u| r.r_isi >= *u), format!("R_isi < R_usi on {p:?}"))?;
        accepted += 1;
        if accepted == want {
            return Ok(accepted);
        }
    }
    Err(format!("only {accepted} parameter sets found"))
}

fn theorem_sweeps() -> Outcome {
    let start = Instant::now();
    let t2 = sweep(
        2,
        60,
        |rng| random_params(rng, false, false),
        |p| {
            let k = &p.k[0];
            let k_un = p.k_un();
            (0..p.gamma()).all(|i| k[i] + 1 <= p.mu[i] - k[i]) && (p.eta..p.gamma()).all(|i| k[i] == k_un)
        },
        |f| f.t2.holds(),
    )?;
    let t3 = sweep(
        3,
        60,
        |rng| random_params(rng, true, false),
        |p| {
            let k = &p.k[0];
            let m = p.mu[0];
            let bound = k[0] + ((p.gamma() - p.eta + 1) * (p.k_un() + 1)).div_ceil(p.gamma());
            p.mu.iter().all(|&x| x == m)
                && k[..p.eta].iter().all(|&x| x == k[0])
                && k[p.eta..].iter().all(|&x| x == p.k_un())
                && k.iter().all(|&ki| ki + 1 >= m - ki)
                && m >= bound
        },
        |f| f.t3.holds(),
    )?;
    let t4 = sweep(
        4,
        60,
        |rng| random_params(rng, false, true),
        |p| p.eta == 1 && p.k[0].iter().zip(&p.mu).all(|(&k, &m)| k + 1 >= m - k),
        |f| f.t4.holds(),
    )?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("t2 {t2}, t3 {t3}, t4 {t4} parameter sets"))
}

fn distribution_oracle() -> Outcome {
    let start = Instant::now();
    let s = scenario("tiny");
    check(s.gamma() == 2 && s.eta() == 1, "tiny fixture shape")?;
    let mut worst = 0.0f64;
    for v in 1..=2 {
        let d = Demands::Single(v);
        let exact = query_distribution(&s, &d, ENUMERATION_LIMIT).map_err(|e| e.to_string())?;
        let total: BigRational = exact.values().cloned().sum();
        check(total == BigRational::one(), format!("v={v} sums to {total}"))?;
        let mc = sample_distribution(&s, &d, 100_000, 1000 * v as u64).map_err(|e| e.to_string())?;
        let tv = tv_distance_f64(&to_f64(&exact), &mc);
        worst = worst.max(tv);
        check(tv <= 0.02, format!("v={v}: Monte Carlo TV {tv}"))?;
    }
    within(start.elapsed(), Duration::from_secs(30))?;
    Ok(format!("sums exact, Monte Carlo TV <= {worst:.4} at 1e5 samples"))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cases: [(&str, &[&str]); 3] = [
        ("example2", &["--demand", "3"]),
        ("example5", &["--demand", "2", "--demand", "3"]),
        ("example3", &["--demand", "5", "--seed", "77"]),
    ];
    for (name, args) in cases {
        let mut outputs = Vec::new();
        for round in 0..2 {
            let out = dir.path().join(format!("{name}-{round}.json"));
            let status = Command::new(env!("CARGO_BIN_EXE_ppir"))
                .arg("run")
                .arg(fixture(name))
                .args(args)
                .arg("--out")
                .arg(&out)
                .status()
                .map_err(|e| e.to_string())?;
            check(status.success(), format!("{name}: {status}"))?;
            outputs.push(std::fs::read(&out).map_err(|e| e.to_string())?);
        }
        check(!outputs[0].is_empty() && outputs[0] == outputs[1], format!("{name}: traces differ"))?;
    }
    Ok("3 fixtures, identical traces".into())
}

fn main() {
    let (checks, elapsed, scenarios) = session_sweep();
    let budget = |o: Outcome| o.and_then(|m| within(elapsed, Duration::from_secs(60)).map(|_| m));
    let results: Vec<(&str, Outcome)> = vec![
        ("encode golden", encode_golden()),
        ("decode golden", decode_golden()),
        ("rate goldens", rate_goldens()),
        (
            "recovery",
            budget(summarize(&checks, |c| c.recovered, "recovery").map(|m| format!("{m} over {scenarios} scenarios in {elapsed:?}"))),
        ),
        ("non-repetition", summarize(&checks, |c| c.distinct, "distinct indices")),
        ("rate identity", summarize(&checks, |c| c.rate_matches, "L/D exact")),
        ("mds round trip", mds_round_trip()),
        ("theorem sweeps", theorem_sweeps()),
        ("distribution oracle", distribution_oracle()),
        ("determinism", determinism()),
    ];
    let mut failed = 0;
    for (i, (name, outcome)) in results.iter().enumerate() {
        match outcome {
            Ok(msg) => println!("PASS {:>2} {name}: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {msg}", i + 1);
            }
        }
    }
    println!("{} criteria, {failed} failed", results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
