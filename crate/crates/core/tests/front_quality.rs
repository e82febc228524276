use slimtune::oracle::SyntheticOracle;
use slimtune::space::validate;
use slimtune::tuner::{dominates, objectives};
use slimtune::{parse_space, tune, ConfigurationSpace, TunerParams};

fn mini() -> ConfigurationSpace {
    parse_space(include_str!("../../../spaces/mini.json")).unwrap()
}

fn key(p: [f64; 3]) -> [u64; 3] {
    p.map(f64::to_bits)
}

/// Distinct objective vectors of the exhaustive non-dominated set.
fn true_front(space: &ConfigurationSpace, oracle: &SyntheticOracle) -> Vec<[u64; 3]> {
    let pts: Vec<[f64; 3]> = (0..space.cardinality())
        .map(|i| space.configuration_at(i).unwrap())
        .filter(|c| validate(c, space).is_valid())
        .map(|c| objectives(&c, oracle).as_array())
        .collect();
    let mut front: Vec<[u64; 3]> = pts
        .iter()
        .filter(|p| !pts.iter().any(|q| dominates(q, p)))
        .map(|p| key(*p))
        .collect();
    front.sort();
    front.dedup();
    front
}

#[test]
fn enumeration_visits_every_configuration_once() {
    let space = mini();
    let mut seen: Vec<String> = (0..space.cardinality())
        .map(|i| space.configuration_at(i).unwrap().to_string())
        .collect();
    assert_eq!(seen.len(), 864);
    seen.sort();
    seen.dedup();
    assert_eq!(seen.len(), 864);
    assert!(space.configuration_at(864).is_none());
}

#[test]
fn recovers_most_of_the_exhaustive_front() {
    let space = mini();
    let oracle = SyntheticOracle::for_space(&space);
    let front = true_front(&space, &oracle);
    let mut coverage = Vec::new();
    for seed in 0..10 {
        let params = TunerParams {
            seed,
            size_budget_mb: None,
            ..Default::default()
        };
        let run = tune(&space, &oracle, &params).unwrap();
        let got: Vec<[u64; 3]> = run.archive.objective_points().into_iter().map(key).collect();
        let hit = front.iter().filter(|f| got.contains(f)).count();
        coverage.push(hit as f64 / front.len() as f64);

        // nothing seen during the run beats an archive member
        for e in &run.evaluated {
            for m in run.archive.members() {
                assert!(!e.objectives.dominates(&m.objectives));
            }
        }
        for w in run.generations.windows(2) {
            assert!(w[1].hypervolume >= w[0].hypervolume);
        }
    }
    coverage.sort_by(f64::total_cmp);
    let median = (coverage[4] + coverage[5]) / 2.0;
    assert!(median >= 0.9, "median coverage {median}: {coverage:?}");
}
