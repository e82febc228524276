use std::fs;
use std::path::Path;
use std::time::Duration;

use slimtune::oracle::{build_indicator, EffectivenessOracle, ExternalOracle, IndicatorError, OracleError};
use slimtune::space::Param;
use slimtune::{sample_uniform, ConfigurationSpace};

fn script(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    format!("python3 {}", path.display())
}

const ECHO: &str = r#"
import json, sys
req, resp = sys.argv[1], sys.argv[2]
with open(req) as f, open(resp, "w") as out:
    for line in f:
        r = json.loads(line)
        assert len(r["config"]) == 13
        out.write(json.dumps({"id": r["id"], "effectiveness": 0.873}) + "\n")
"#;

#[test]
fn passes_reported_value_through() {
    let dir = tempfile::tempdir().unwrap();
    let space = ConfigurationSpace::listing3();
    let oracle = ExternalOracle::new(script(dir.path(), "eval.py", ECHO), space.checksum());
    let configs = sample_uniform(&space, 5, 1).unwrap();
    assert_eq!(oracle.evaluate_batch(&configs).unwrap(), vec![0.873; 5]);
}

#[test]
fn request_carries_ids_checksum_and_all_fields() {
    let dir = tempfile::tempdir().unwrap();
    let copy = dir.path().join("seen.jsonl");
    let body = format!(
        "{ECHO}\nimport shutil\nshutil.copy(req, {:?})\n",
        copy.display().to_string()
    );
    let space = ConfigurationSpace::listing3();
    let oracle = ExternalOracle::new(script(dir.path(), "eval.py", &body), space.checksum());
    let configs = sample_uniform(&space, 3, 2).unwrap();
    oracle.evaluate_batch(&configs).unwrap();
    let seen = fs::read_to_string(copy).unwrap();
    let lines: Vec<serde_json::Value> = seen.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 3);
    for (i, l) in lines.iter().enumerate() {
        assert_eq!(l["id"], i);
        assert_eq!(l["space_checksum"], space.checksum());
        let cfg = l["config"].as_object().unwrap();
        assert_eq!(cfg.keys().cloned().collect::<Vec<_>>(), Param::ALL.map(|p| p.name().to_string()));
        assert_eq!(cfg["hidden_size"], configs[i].int(Param::HiddenSize).unwrap());
    }
}

#[test]
fn failures_are_distinct() {
    let dir = tempfile::tempdir().unwrap();
    let space = ConfigurationSpace::listing3();
    let configs = sample_uniform(&space, 2, 3).unwrap();
    let run = |name: &str, body: &str| {
        ExternalOracle::new(script(dir.path(), name, body), space.checksum())
            .with_timeout(Duration::from_millis(500))
            .evaluate_batch(&configs)
    };

    let crash = run("crash.py", "import sys\nsys.stderr.write('boom')\nsys.exit(3)\n");
    assert_eq!(
        crash,
        Err(OracleError::ProcessFailed { status: Some(3), stderr: "boom".into() })
    );

    let partial = run(
        "partial.py",
        "import sys\nopen(sys.argv[2], 'w').write('{\"id\": 0, \"effectiveness\": 0.5}\\n')\n",
    );
    assert_eq!(partial, Err(OracleError::PartialResponse { expected: 2, missing: vec![1] }));

    let garbage = run("garbage.py", "import sys\nopen(sys.argv[2], 'w').write('hello\\n')\n");
    assert!(matches!(garbage, Err(OracleError::MalformedResponse(_))));

    let silent = run("silent.py", "pass\n");
    assert!(matches!(silent, Err(OracleError::MalformedResponse(_))));

    let slow = run("slow.py", "import time\ntime.sleep(30)\n");
    assert_eq!(slow, Err(OracleError::Timeout(Duration::from_millis(500))));
}

#[test]
fn indicator_build_keeps_rows_scored_before_a_failure() {
    let dir = tempfile::tempdir().unwrap();
    let counter = dir.path().join("calls");
    let body = format!(
        r#"
import json, os, sys
path = {counter:?}
n = int(open(path).read()) if os.path.exists(path) else 0
open(path, "w").write(str(n + 1))
if n == 3:
    sys.exit(1)
with open(sys.argv[1]) as f, open(sys.argv[2], "w") as out:
    for line in f:
        out.write(json.dumps({{"id": json.loads(line)["id"], "effectiveness": 0.6}}) + "\n")
"#,
        counter = counter.display().to_string()
    );
    let space = ConfigurationSpace::listing3();
    let spec = format!("external:{}", script(dir.path(), "flaky.py", &body));
    let oracle = EffectivenessOracle::parse_spec(&spec, &space, 0).unwrap();
    match build_indicator(&space, &oracle, 6, 4) {
        Err(IndicatorError::Oracle { source, partial }) => {
            assert!(matches!(source, OracleError::ProcessFailed { .. }));
            assert_eq!(partial.len(), 3);
            let sampled = sample_uniform(&space, 6, 4).unwrap();
            for (row, c) in partial.iter().zip(&sampled) {
                assert_eq!(&row.config, c);
                assert_eq!(row.effectiveness, 0.6);
            }
        }
        other => panic!("expected an oracle failure, got {other:?}"),
    }
}
