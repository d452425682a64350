use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ris_linkopt::experiments::{SweepResult, SweepSpec};
use ris_linkopt::optimizers::{
    draw_errors, maximize, mean_sample_power, optimal_phase_ideal, optimize_stochastic,
    ClosedFormObjective, SampleAverage,
};
use ris_linkopt::power_model::{
    expected_power_closed_form, received_power, sinc, PhaseErrorModel, SampleMode,
};
use ris_linkopt::{DruCovariation, Scenario};

fn preset(figure: u8, scenario: &Scenario) -> (SweepSpec, SweepResult) {
    let spec = SweepSpec::preset(figure, SampleMode::Sampled).unwrap();
    let result = spec.run(scenario).unwrap();
    (spec, result)
}

/// 100 random `(i, j)` cells of the sweep grid.
fn cells(result: &SweepResult, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inner = result.axes.get(1).map_or(1, |a| a.len());
    (0..100)
        .map(|_| {
            (
                rng.random_range(0..result.axes[0].len()),
                rng.random_range(0..inner),
            )
        })
        .collect()
}

#[test]
fn power_surface_cells_reproduce() {
    let s = Scenario::reference_leo();
    let (_, r) = preset(2, &s);
    assert_eq!(r.cell_count(), 100 * 181);
    for (i, j) in cells(&r, 2) {
        let b = s
            .budget_at_ris_distance(r.axes[0].values[i], DruCovariation::Geometric)
            .unwrap();
        assert_eq!(
            r.value("power", i, j).unwrap(),
            received_power(&b, r.axes[1].values[j]).unwrap()
        );
        assert_eq!(
            r.overlay("optimal_phase").unwrap().values[i],
            optimal_phase_ideal(&b)
        );
    }
}

#[test]
fn ris_vs_direct_cells_reproduce() {
    let s = Scenario::reference_leo();
    let (_, r) = preset(3, &s);
    for (i, _) in cells(&r, 3) {
        let b = s
            .budget_at_ris_distance(r.axes[0].values[i], DruCovariation::Geometric)
            .unwrap();
        let with = r.value("with_ris", i, 0).unwrap();
        assert_eq!(with, received_power(&b, optimal_phase_ideal(&b)).unwrap());
        assert_eq!(r.value("without_ris", i, 0).unwrap(), b.direct_power());
        assert!(with >= b.direct_power());
    }
}

#[test]
fn sinc_sweep_starts_at_one() {
    let s = Scenario::reference_leo();
    let (_, r) = preset(4, &s);
    let mut buf = Vec::new();
    r.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("sigma_rad,sinc"));
    assert_eq!(lines.next(), Some("0,1"));
    for (i, _) in cells(&r, 4) {
        assert_eq!(r.value("sinc", i, 0).unwrap(), sinc(r.axes[0].values[i]));
    }
}

#[test]
fn expected_surface_cells_reproduce() {
    let s = Scenario::reference_leo();
    let b = s.link_budget().unwrap();
    let (_, r) = preset(5, &s);
    for (i, j) in cells(&r, 5) {
        let err = PhaseErrorModel::new(r.axes[0].values[i]).unwrap();
        let want = expected_power_closed_form(&b, r.axes[1].values[j], &err).unwrap();
        assert_eq!(r.value("expected_power", i, j).unwrap(), want);
    }
}

#[test]
fn expected_vs_phase_cells_and_optima_reproduce() {
    let s = Scenario::reference_leo();
    let b = s.link_budget().unwrap();
    let (_, r) = preset(6, &s);
    for (i, j) in cells(&r, 6) {
        let err = PhaseErrorModel::new(r.axes[0].values[i]).unwrap();
        let errors = draw_errors(&err, &s.mc).unwrap();
        let want =
            mean_sample_power(&b, r.axes[1].values[j], &errors, &err, SampleMode::Sampled).unwrap();
        assert_eq!(r.value("expected_power", i, j).unwrap(), want);
    }
    for (i, &sigma) in r.axes[0].values.iter().enumerate() {
        let err = PhaseErrorModel::new(sigma).unwrap();
        let opt = optimize_stochastic(&b, &err, &s.mc, &s.bfgs, SampleMode::Sampled).unwrap();
        assert_eq!(
            r.overlay("optimal_phase").unwrap().values[i],
            opt.optimal_phase
        );
        assert_eq!(
            r.overlay("optimal_power").unwrap().values[i],
            opt.objective_value
        );
    }
}

#[test]
fn optimal_vs_suboptimal_cells_reproduce() {
    let s = Scenario::reference_leo();
    let b = s.link_budget().unwrap();
    let (_, r) = preset(7, &s);
    let rows: std::collections::BTreeSet<usize> =
        cells(&r, 7).into_iter().map(|(i, _)| i).collect();
    for i in rows {
        let err = PhaseErrorModel::new(r.axes[0].values[i]).unwrap();
        let saa = SampleAverage::new(
            b,
            draw_errors(&err, &s.mc).unwrap(),
            err,
            SampleMode::Sampled,
        )
        .unwrap();
        let opt = maximize(&saa, &s.bfgs).unwrap();
        let best = r.value("optimal", i, 0).unwrap();
        let before = r.value("suboptimal", i, 0).unwrap();
        assert_eq!(best, opt.objective_value);
        assert_eq!(before, opt.penultimate_objective());
        assert!(best >= before);
    }
    let histories = r.metadata["histories"].as_array().unwrap();
    assert_eq!(histories.len(), r.axes[0].len());
}

#[test]
fn closed_form_evaluation_tracks_sinc() {
    let s = Scenario::reference_leo();
    let b = s.link_budget().unwrap();
    let spec = SweepSpec::OptimalVsSuboptimal {
        sigma: ris_linkopt::experiments::Axis::explicit("sigma_rad", vec![0.0, 1.0, 2.0]).unwrap(),
        evaluation: ris_linkopt::experiments::Evaluation::ClosedForm,
    };
    let r = spec.run(&s).unwrap();
    for (i, &sigma) in [0.0, 1.0, 2.0].iter().enumerate() {
        let err = PhaseErrorModel::new(sigma).unwrap();
        let opt = maximize(&ClosedFormObjective::new(b, &err), &s.bfgs).unwrap();
        assert_eq!(r.value("optimal", i, 0).unwrap(), opt.objective_value);
        let peak = expected_power_closed_form(&b, optimal_phase_ideal(&b), &err).unwrap();
        assert!(((opt.objective_value - peak) / peak).abs() <= 1e-12);
    }
}

#[test]
fn json_carries_scenario_seed_and_mode() {
    let s = Scenario::reference_leo();
    let (_, r) = preset(6, &s);
    let v = r.to_json();
    assert_eq!(v["metadata"]["seed"], 42);
    assert_eq!(v["metadata"]["mode"], "sampled");
    assert!(v["metadata"]["scenario"]["radio"].is_object());
    assert_eq!(
        v["series"][0]["values"].as_array().unwrap().len(),
        r.cell_count()
    );
}
