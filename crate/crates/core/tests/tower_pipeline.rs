use spectral_tower::verify::{verify_tower_with, VerifyOptions};
use spectral_tower::{
    build_tower, verify_tower, window_spectrum_gap, GraphFamily, SolverParams, SpectrumSpec, Tower,
    TowerError, TowerParams,
};

fn params(tau_edge: f64) -> TowerParams {
    TowerParams { solver: SolverParams { tau_edge, ..SolverParams::default() } }
}

fn families() -> Vec<GraphFamily> {
    ["path", "star", "complete", "empty", "binary_tree"]
        .iter()
        .map(|name| GraphFamily::from_name(name, 0, 0.5).unwrap())
        .chain(std::iter::once(GraphFamily::Random { seed: 1, edge_probability: 0.4 }))
        .collect()
}

#[test]
fn small_edge_floor_towers_pass_every_check() {
    let spec = SpectrumSpec::parse("interval -1 1; rayup 5").unwrap();
    for family in families() {
        let tower = build_tower(&family, &spec, 30, 0.1, &params(1e-12)).unwrap();
        let report = verify_tower(&tower);
        let bad: Vec<_> = report.failures().map(|c| c.name.clone()).collect();
        assert!(report.pass(), "{family:?}: {bad:?}");
    }
}

#[test]
fn star_interval_ten_steps() {
    let spec = SpectrumSpec::parse("interval 0 1").unwrap();
    let family = GraphFamily::from_name("star", 0, 0.5).unwrap();
    let tower = build_tower(&family, &spec, 10, 0.1, &params(1e-6)).unwrap();
    assert_eq!(tower.steps.len(), 10);
    assert!(verify_tower(&tower).pass());
}

#[test]
fn default_edge_floor_stops_long_star_tower() {
    let spec = SpectrumSpec::parse("interval 0 1").unwrap();
    let family = GraphFamily::from_name("star", 0, 0.5).unwrap();
    match build_tower(&family, &spec, 10, 0.1, &TowerParams::default()) {
        Err(TowerError::StepFailed { n, partial, .. }) => {
            assert_eq!(partial.steps.len(), n - 1);
            assert!(n <= 8);
        }
        other => panic!("expected a step failure, got {:?}", other.map(|t| t.steps.len())),
    }
}

#[test]
fn save_load_reproduces_report() {
    let spec = SpectrumSpec::parse("lattice 0 1").unwrap();
    let family = GraphFamily::from_name("binary_tree", 0, 0.5).unwrap();
    let tower = build_tower(&family, &spec, 15, 0.1, &params(1e-9)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    tower.save(dir.path()).unwrap();
    let loaded = Tower::load(dir.path()).unwrap();
    for (a, b) in tower.steps.iter().zip(&loaded.steps) {
        assert_eq!(a.matrix, b.matrix);
    }
    assert_eq!(verify_tower(&tower).to_json(), verify_tower(&loaded).to_json());
}

#[test]
fn window_gap_tracks_covering_radius() {
    let spec = SpectrumSpec::parse("interval 0 1").unwrap();
    let family = GraphFamily::from_name("path", 0, 0.5).unwrap();
    let tower = build_tower(&family, &spec, 30, 0.1, &params(1e-12)).unwrap();
    let gap = window_spectrum_gap(&tower, 30, 30, (0.0, 1.0), 1e-4).unwrap();
    let radius = spectral_tower::covering_radius(&spec, &tower.lambdas_up_to(30), (0.0, 1.0), 1e-4).unwrap();
    let slack = 1e-9 + 0.1 * 2f64.powi(-29) + 1e-10;
    assert!(gap.gap_in <= radius.radius + slack, "{} vs {}", gap.gap_in, radius.radius);
    assert!(gap.gap_out <= slack);
    let opts = VerifyOptions { extra_order: 0, window: (0.0, 1.0), grid_step: Some(1e-4) };
    assert!(verify_tower_with(&tower, &opts).pass());
}
