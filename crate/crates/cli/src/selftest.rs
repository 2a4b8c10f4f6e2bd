//! Golden checks against the bundled example scenarios.

use num::{BigRational, One};
use ppir_core::audit::{query_distribution, ComparisonReport, RateParams, ENUMERATION_LIMIT};
use ppir_core::exchange::{answer_all, client_decode, ClientKnowledge};
use ppir_core::mds::Generator;
use ppir_core::query::{validate_plan, Demands};
use ppir_core::scenario::{Mode, Scenario};

use crate::schema::{fraction, load_scenario, ClassOrder, ScenarioFile};

/// Scenario texts the self-test runs on.
#[derive(Debug, Clone)]
pub struct Fixtures {
    pub example1: String,
    pub example2: String,
    pub example3: String,
    pub example4: String,
    pub example5: String,
    pub tiny: String,
}

impl Fixtures {
    pub fn embedded() -> Self {
        Self {
            example1: include_str!("../fixtures/example1.json").into(),
            example2: include_str!("../fixtures/example2.json").into(),
            example3: include_str!("../fixtures/example3.json").into(),
            example4: include_str!("../fixtures/example4.json").into(),
            example5: include_str!("../fixtures/example5.json").into(),
            tiny: include_str!("../fixtures/tiny.json").into(),
        }
    }

    fn all(&self) -> [(&'static str, &str); 6] {
        [
            ("example1", &self.example1),
            ("example2", &self.example2),
            ("example3", &self.example3),
            ("example4", &self.example4),
            ("example5", &self.example5),
            ("tiny", &self.tiny),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureResult {
    pub name: &'static str,
    pub outcome: Result<(), String>,
}

impl FixtureResult {
    pub fn passed(&self) -> bool {
        self.outcome.is_ok()
    }

    pub fn line(&self) -> String {
        match &self.outcome {
            Ok(()) => format!("PASS {}", self.name),
            Err(e) => format!("FAIL {}: {e}", self.name),
        }
    }
}

type Check = fn(&Fixtures) -> Result<(), String>;

const CHECKS: [(&str, Check); 12] = [
    ("fixtures-load", fixtures_load),
    ("example2-generator-mds", example2_generator_mds),
    ("example2-encode", example2_encode),
    ("example2-decode", example2_decode),
    ("example2-server-answer", example2_server_answer),
    ("example2-client-recovery", example2_client_recovery),
    ("example2-rates", example2_rates),
    ("example3-rates", example3_rates),
    ("example5-rates", example5_rates),
    ("example1-full-side-information", example1_full_side_information),
    ("reference-plans-validate", reference_plans_validate),
    ("tiny-distribution", tiny_distribution),
];

pub fn run_selftest(fx: &Fixtures) -> Vec<FixtureResult> {
    CHECKS.iter().map(|&(name, check)| FixtureResult { name, outcome: check(fx) }).collect()
}

fn load(text: &str) -> Result<(ScenarioFile, Scenario), String> {
    load_scenario(text).map_err(|e| e.to_string())
}

fn expect<T: PartialEq + std::fmt::Debug>(what: &str, got: T, want: T) -> Result<(), String> {
    if got == want {
        Ok(())
    } else {
        Err(format!("{what}: got {got:?}, expected {want:?}"))
    }
}

fn example2_code(fx: &Fixtures) -> Result<Generator, String> {
    let (_, s) = load(&fx.example2)?;
    s.generator(Mode::Single).map_err(|e| e.to_string())
}

fn symbols(v: Vec<ppir_core::field::FieldElement>) -> Vec<u64> {
    v.iter().map(|x| x.value()).collect()
}

fn fixtures_load(fx: &Fixtures) -> Result<(), String> {
    for (name, text) in fx.all() {
        load(text).map_err(|e| format!("{name}: {e}"))?;
    }
    Ok(())
}

fn example2_generator_mds(fx: &Fixtures) -> Result<(), String> {
    let g = example2_code(fx)?;
    expect("shape", (g.n(), g.k()), (8, 5))?;
    g.verify_mds().map_err(|e| e.to_string())
}

fn example2_encode(fx: &Fixtures) -> Result<(), String> {
    let g = example2_code(fx)?;
    let f = g.field();
    for (m, word) in [([0, 1, 9, 6, 8], [0, 1, 9, 6, 8, 10, 8, 10]), ([1, 7, 4, 1, 3], [1, 7, 4, 1, 3, 0, 0, 7])] {
        let c = g.encode(&f.vector(&m).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        expect("codeword", c.values(), word.to_vec())?;
    }
    Ok(())
}

fn example2_decode(fx: &Fixtures) -> Result<(), String> {
    let g = example2_code(fx)?;
    let f = g.field();
    let values = f.vector(&[0, 1, 10, 8, 10]).map_err(|e| e.to_string())?;
    let m = g.decode_from_positions(&[0, 1, 5, 6, 7], &values).map_err(|e| e.to_string())?;
    expect("decoded", symbols(m), vec![0, 1, 9, 6, 8])
}

fn example2_plan(fx: &Fixtures) -> Result<(Scenario, ppir_core::query::ServerView), String> {
    let (file, s) = load(&fx.example2)?;
    let plan = file.reference_plans.first().ok_or("no reference plan")?;
    let view = ClassOrder::of(&s).view_from_plan(plan);
    Ok((s, view))
}

fn example2_server_answer(fx: &Fixtures) -> Result<(), String> {
    let (s, view) = example2_plan(fx)?;
    let g = s.generator(Mode::Single).map_err(|e| e.to_string())?;
    let answers = answer_all(&s, &view, &g).map_err(|e| e.to_string())?;
    expect("first answer", answers[0].values(), vec![vec![10, 0], vec![8, 0], vec![10, 7]])?;
    expect("download", answers.iter().map(|a| a.size()).sum::<usize>(), 24)
}

fn example2_client_recovery(fx: &Fixtures) -> Result<(), String> {
    let (s, view) = example2_plan(fx)?;
    let g = s.generator(Mode::Single).map_err(|e| e.to_string())?;
    let answers = answer_all(&s, &view, &g).map_err(|e| e.to_string())?;
    let k = ClientKnowledge::of(&s, 1);
    let q = &view.queries[0];
    let msgs = client_decode(&k, q, &answers[0], &g).map_err(|e| e.to_string())?;
    let ids: Vec<usize> = q.pairs().map(|(i, b)| s.classes().pair_to_global(i, b).unwrap_or(0)).collect();
    expect("messages", ids, vec![11, 8, 23, 35, 14])?;
    expect("W23", symbols(msgs[2].clone()), vec![9, 4])?;
    expect("W23 is new", s.side_information(1).holds(3, q.beta(3)), false)
}

fn rates_of(text: &str) -> Result<ComparisonReport, String> {
    let (_, s) = load(text)?;
    Ok(ComparisonReport::new(&RateParams::from_scenario(&s)))
}

fn example2_rates(fx: &Fixtures) -> Result<(), String> {
    let r = rates_of(&fx.example2)?;
    expect("R_isi", fraction(&r.r_isi), "1/12".into())?;
    expect("R_usi", r.r_usi.as_ref().map(fraction), Some("1/16".into()))?;
    expect("some theorem holds", r.theorems.any_holds(), false)
}

fn example3_rates(fx: &Fixtures) -> Result<(), String> {
    let r = rates_of(&fx.example3)?;
    expect("R_isi", fraction(&r.r_isi), "1/12".into())?;
    expect("R_usi", r.r_usi.as_ref().map(fraction), Some("1/23".into()))?;
    expect("t2 holds", r.theorems.t2.holds(), true)
}

fn example5_rates(fx: &Fixtures) -> Result<(), String> {
    let r = rates_of(&fx.example5)?;
    expect("R_multi", fraction(&r.r_multi), "1/20".into())?;
    expect("R_naive_multi", fraction(&r.r_naive_multi), "1/24".into())
}

fn example1_full_side_information(fx: &Fixtures) -> Result<(), String> {
    let (_, s) = load(&fx.example1)?;
    expect("queries", s.query_count(), 1)?;
    expect("R_isi", fraction(&rates_of(&fx.example1)?.r_isi), "1/1".into())
}

fn reference_plans_validate(fx: &Fixtures) -> Result<(), String> {
    let mut seen = 0;
    for (name, text) in fx.all() {
        let (file, s) = load(text)?;
        let order = ClassOrder::of(&s);
        for plan in &file.reference_plans {
            let demands = crate::commands::internal_demands(&s, plan.mode, &plan.demands).map_err(|e| e.to_string())?;
            let report = validate_plan(&s, &demands, &order.view_from_plan(plan));
            if !report.is_valid() {
                let failed: Vec<&str> = report.rules.iter().filter(|r| !r.passed).map(|r| r.rule).collect();
                return Err(format!("{name} plan for {:?}: {failed:?}", plan.demands));
            }
            seen += 1;
        }
    }
    expect("plans checked", seen, 6)
}

fn tiny_distribution(fx: &Fixtures) -> Result<(), String> {
    let (_, s) = load(&fx.tiny)?;
    for v in 1..=s.gamma() {
        let d = query_distribution(&s, &Demands::Single(v), ENUMERATION_LIMIT).map_err(|e| e.to_string())?;
        let total: BigRational = d.values().cloned().sum();
        expect("total probability", total, BigRational::one())?;
    }
    Ok(())
}
