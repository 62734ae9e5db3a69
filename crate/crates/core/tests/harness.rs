use sscm_core::harness::{run_experiment, simulate_dataset, Design, ExperimentSpec};

fn small(design: Design, model: &str) -> ExperimentSpec {
    let mut spec = ExperimentSpec::for_model(design, model).unwrap();
    spec.n_list = vec![60];
    spec.c = vec![0.5, 1.0];
    spec.replications = 24;
    spec.seed = 5;
    if !spec.x_list.is_empty() {
        spec.x_list = vec![0.0, 0.2];
    }
    spec
}

#[test]
fn tables_do_not_depend_on_thread_count() {
    for (design, model) in [(Design::Estimation, "model1"), (Design::SizePower, "model4")] {
        let mut spec = small(design, model);
        spec.threads = Some(1);
        let one = run_experiment(&spec).unwrap();
        spec.threads = Some(4);
        let four = run_experiment(&spec).unwrap();
        assert_eq!(one, four, "{model}");
    }
}

#[test]
fn seeds_change_the_draws() {
    let mut spec = small(Design::Estimation, "model1");
    let a = simulate_dataset(&spec, 0).unwrap();
    spec.seed += 1;
    let b = simulate_dataset(&spec, 0).unwrap();
    assert_ne!(a.data(), b.data());
    assert_eq!(a.n(), 60);
    assert_eq!(a.p(), 30);
}

#[test]
fn test_design_reports_one_row_per_cell() {
    let table = run_experiment(&small(Design::SizePower, "model3")).unwrap();
    assert_eq!(table.rows.len(), 4);
    for row in &table.rows {
        let rate = row.rate.unwrap();
        assert!((0.0..=1.0).contains(&rate));
        assert_eq!(row.replications, 24);
    }
}

#[test]
fn density_design_integrates_to_the_continuous_mass() {
    let mut spec = small(Design::Density, "model1");
    spec.c = vec![0.5];
    spec.replications = 4;
    spec.grid = Some("0.01:8:400".into());
    let table = run_experiment(&spec).unwrap();
    assert_eq!(table.rows.len(), 400);
    let width = (8.0 - 0.01) / 399.0;
    let empirical: f64 = table.rows.iter().map(|r| r.mean * width).sum();
    let limit: f64 = table.rows.iter().map(|r| r.truth.unwrap() * width).sum();
    assert!((empirical - 1.0).abs() < 1e-9, "{empirical}");
    assert!((limit - 1.0).abs() < 0.02, "{limit}");
}

#[test]
fn unknown_fields_are_rejected() {
    assert!(ExperimentSpec::from_json(r#"{"design": "estimation", "model": "model1", "bogus": 1}"#).is_err());
    let spec = ExperimentSpec::from_json(r#"{"design": "size_power", "model": "model4", "c": 1.0}"#).unwrap();
    assert_eq!(spec.c, vec![1.0]);
}
