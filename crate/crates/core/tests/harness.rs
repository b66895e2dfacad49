use std::fs;
use std::io::BufReader;
use std::path::Path;

use sardonics::bayes_opt::BoltzmannPolicy;
use sardonics::diagnostics::{acf, parse_trace, EnergyTrace};
use sardonics::harness::{
    cmd_adapt, cmd_compare, cmd_generate, cmd_run, trace_file_name, verify, ExperimentConfig, ModelSpec, RunReport,
    VerifyLevel,
};
use sardonics::model::parse_model;
use sardonics::saw::StepRecord;

const BASE: &str = r#"
steps = 2000
seeds = [1, 2]
out = "out"
max_lag = 40

[model]
kind = "torus-2d"
side = 4
seed = 3

[[samplers]]
kind = "gibbs"

[[samplers]]
kind = "sardonics-adaptive"

[adapt]
iterations = 4
chain_steps = 200
n_init = 2
max_lag = 20
acq_budget = 40
policy_candidates = 8
"#;

fn config() -> ExperimentConfig {
    ExperimentConfig::from_toml(BASE).unwrap()
}

fn read_trace(path: &Path) -> Vec<StepRecord> {
    parse_trace(BufReader::new(fs::File::open(path).unwrap())).unwrap()
}

#[test]
fn stride_sets_trace_length() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config();
    c.stride = 5;
    cmd_run(&c, dir.path()).unwrap();
    for name in ["gibbs", "sardonics-adaptive"] {
        let rows = read_trace(&dir.path().join("out").join(trace_file_name(name, 1)));
        assert_eq!(rows.len(), 2000 / 5);
        assert!(rows.iter().all(|r| r.step % 5 == 0));
    }
}

#[test]
fn summary_matches_trace() {
    let dir = tempfile::tempdir().unwrap();
    let c = config();
    cmd_run(&c, dir.path()).unwrap();
    let out = dir.path().join("out");
    let report: RunReport = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(fs::read_to_string(out.join("config.toml")).unwrap(), c.to_toml().unwrap());
    for sampler in &report.samplers {
        for s in &sampler.seeds {
            let rows = read_trace(&out.join(trace_file_name(&sampler.name, s.seed)));
            let kept = &rows[rows.len() / 5..];
            let energies: Vec<f64> = kept.iter().map(|r| r.energy).collect();
            let mean = energies.iter().sum::<f64>() / energies.len() as f64;
            let area = acf(&EnergyTrace::new(energies), 40).unwrap().area();
            let rate = rows.iter().filter(|r| r.accepted).count() as f64 / rows.len() as f64;
            assert!((s.mean_energy - mean).abs() < 1e-9);
            assert!((s.acf_area - area).abs() < 1e-9);
            assert!((s.acceptance_rate - rate).abs() < 1e-12);
        }
    }
}

#[test]
fn rewards_recomputed_from_adaptation_trace() {
    let dir = tempfile::tempdir().unwrap();
    let c = config();
    let arts = cmd_adapt(&c, dir.path()).unwrap();
    let out = dir.path().join("out");
    for art in &arts {
        let rows = read_trace(&out.join(format!("adapt_trace_seed{}.csv", art.seed)));
        assert_eq!(rows.len(), 4 * 200);
        let text = fs::read_to_string(out.join(format!("rewards_seed{}.csv", art.seed))).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("iteration,reward,best_so_far,acf_area,zero_variance"));
        for (chunk, line) in rows.chunks(200).zip(lines) {
            let cols: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
            let curve = acf(&EnergyTrace::new(chunk.iter().map(|r| r.energy).collect()), 20).unwrap();
            let expected = if curve.zero_variance { -20.0 } else { -curve.area() };
            assert!((cols[1] - expected).abs() < 1e-9, "{line}");
        }

        let policy_text = fs::read_to_string(out.join(format!("policy_seed{}.json", art.seed))).unwrap();
        let policy = BoltzmannPolicy::from_json(&policy_text).unwrap();
        assert_eq!(policy, art.policy);
        let total: f64 = policy.probabilities().iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }
}

#[test]
fn saved_policy_drives_a_run() {
    let dir = tempfile::tempdir().unwrap();
    cmd_adapt(&config(), dir.path()).unwrap();
    let text = BASE.replace("kind = \"sardonics-adaptive\"", "kind = \"sardonics-adaptive\"\npolicy = \"out/policy_seed1.json\"");
    let mut c = ExperimentConfig::from_toml(&text).unwrap();
    c.out = "replay".into();
    c.adapt = None;
    let report = cmd_run(&c, dir.path()).unwrap();
    assert_eq!(report.samplers.len(), 2);
    let rows = read_trace(&dir.path().join("replay").join(trace_file_name("sardonics-adaptive", 2)));
    assert_eq!(rows.len(), 2000);
}

#[test]
fn compare_table_has_one_row_per_lag() {
    let dir = tempfile::tempdir().unwrap();
    let c = config();
    cmd_compare(&c, dir.path()).unwrap();
    let table = fs::read_to_string(dir.path().join("out/acf_table.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("lag,gibbs,sardonics-adaptive"));
    assert_eq!(lines.count(), 40 + 1);
}

#[test]
fn compare_needs_two_samplers() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config();
    c.samplers.truncate(1);
    assert!(cmd_compare(&c, dir.path()).is_err());
}

#[test]
fn verify_catches_a_flipped_energy_sign() {
    let corrupted = |beta: f64, de: f64, lf: f64, lr: f64| beta * de + lr - lf;
    let report = verify(VerifyLevel::Quick, &corrupted).unwrap();
    assert!(!report.passed());
    assert!(report.checks.iter().any(|c| c.name.contains("detailed balance") && !c.passed));
    assert!(report.to_string().lines().any(|l| l.starts_with("FAIL")));
}

fn generate(spec: &str) -> String {
    let dir = tempfile::tempdir().unwrap();
    let spec: ModelSpec = toml::from_str(spec).unwrap();
    let path = dir.path().join("m.txt");
    let model = cmd_generate(&spec, dir.path(), &path).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(parse_model(&text).unwrap(), model);
    text
}

#[test]
fn generated_torus_file() {
    let text = generate("kind = \"torus-2d\"\nside = 3\nseed = 1");
    assert!(text.starts_with("ising 9 "));
    assert_eq!(text.lines().filter(|l| l.starts_with("e ")).count(), 18);
}

#[test]
fn generated_chimera_file() {
    let text = generate("kind = \"chimera\"\nrows = 4\ncols = 4\nseed = 1");
    assert!(text.starts_with("ising 128 "));
}

#[test]
fn binary_generates_and_rejects_bad_configs() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), BASE).unwrap();
    let bin = env!("CARGO_BIN_EXE_sardonics");
    let ok = std::process::Command::new(bin)
        .current_dir(dir.path())
        .args(["generate", "--config", "c.toml", "--out", "m.txt"])
        .status()
        .unwrap();
    assert!(ok.success());
    assert!(fs::read_to_string(dir.path().join("m.txt")).unwrap().starts_with("ising 16 "));

    fs::write(dir.path().join("bad.toml"), BASE.replace("steps = 2000", "steps = 0")).unwrap();
    let bad = std::process::Command::new(bin)
        .current_dir(dir.path())
        .args(["run", "--config", "bad.toml"])
        .output()
        .unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("steps"));
}

#[test]
fn bundled_configs_parse_and_build() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let config = ExperimentConfig::from_toml(&fs::read_to_string(&path).unwrap())
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        if !matches!(config.model, ModelSpec::Rbm { weights: Some(_), .. }) {
            config.model.build(&dir).unwrap();
        }
        seen += 1;
    }
    assert!(seen >= 8);
}
