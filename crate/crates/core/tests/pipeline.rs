use reactlearn::dsl::{format_model, parse_model};
use reactlearn::io::{read_time_series, write_time_series};
use reactlearn::optimizer::{run_descent, Descent};
use reactlearn::ssa::{mean_time_series, simulate};
use reactlearn::{
    enumerate_library, AdamState, EstimatorConfig, Model, Objective, ProblemEncoding, ProblemEncoding32, ProblemKind,
    ReactionSystem, ReactionSystem32, RngStream, SnapshotGrid, SnapshotGrid32, TimeSeries,
};

const SIR: &str = "species: S I R\ninit: 1980 20 0\n1 S + 1 I -> 2 I @ 0.02\n1 I -> 1 R @ 5\n";

fn sir() -> Model {
    parse_model(SIR).unwrap()
}

fn reference(seed: u64) -> TimeSeries {
    let m = sir();
    let grid = SnapshotGrid::uniform(1.0, 100).unwrap();
    simulate(&m.system, m.init.as_ref().unwrap(), &grid, RngStream::new(seed)).unwrap()
}

#[test]
fn model_text_round_trip() {
    let m = sir();
    assert_eq!(format_model(&m), SIR);
    assert_eq!(parse_model::<f64>(&format_model(&m)).unwrap(), m);
}

#[test]
fn reference_csv_round_trip() {
    let r = reference(1);
    let mut buf = Vec::new();
    write_time_series(&r, &mut buf).unwrap();
    let back: TimeSeries = read_time_series(buf.as_slice()).unwrap();
    assert_eq!(back, r);
}

#[test]
fn ground_truth_beats_perturbed_models() {
    let m = sir();
    let init = m.init.clone().unwrap();
    let obj = Objective::with_defaults(reference(0), &init).unwrap();
    let truth = obj.evaluate(&m.system, &init, RngStream::new(5)).unwrap();
    assert!(truth < 0.03, "{truth}");
    let frozen = m.system.with_rates(vec![0.0, 0.0]).unwrap();
    let slow = m.system.with_rates(vec![0.005, 5.0]).unwrap();
    for other in [frozen, slow] {
        let loss = obj.evaluate(&other, &init, RngStream::new(5)).unwrap();
        assert!(loss > 2.0 * truth, "{loss} vs {truth}");
    }
}

#[test]
fn every_encoding_represents_sir() {
    let m = sir();
    let lib = enumerate_library(m.system.species(), 2000);
    let init = m.init.clone().unwrap();
    let obj = Objective::with_defaults(reference(0), &init).unwrap();
    let truth = obj.evaluate(&m.system, &init, RngStream::new(3)).unwrap();
    for kind in ProblemKind::ALL {
        let enc = match kind {
            ProblemKind::FixedStructure => ProblemEncoding::fixed_structure(m.system.clone()),
            ProblemKind::CoefficientSteps => ProblemEncoding::coefficient_steps(m.system.species().clone()),
            _ => ProblemEncoding::new(kind, lib.clone()).unwrap(),
        };
        let theta = enc.encode(&m.system).unwrap();
        let mut losses = vec![1.0; enc.n_systems()];
        if let Some(k) = enc.pair_index(m.system.row(0), m.system.row(1)) {
            losses[k] = 0.5;
        }
        let model = enc
            .extract(&theta, Some(&losses))
            .unwrap_or_else(|e| panic!("{kind}: {e}"));
        let mut rows: Vec<&[u32]> = model.rows().collect();
        rows.sort();
        assert_eq!(rows, [m.system.row(1), m.system.row(0)], "{kind}");
        if kind != ProblemKind::LibraryOfSystems {
            let loss = enc.evaluate(&theta, &obj, &init, RngStream::new(3)).unwrap();
            // Same reactions and rates up to rounding in the reparametrization.
            assert!(
                (loss.reported - truth).abs() < 0.01,
                "{kind}: {} vs {truth}",
                loss.reported
            );
        }
    }
}

#[test]
fn descent_from_truth_stays_near_truth() {
    let m = sir();
    let init = m.init.clone().unwrap();
    let obj = Objective::new(reference(0), 5, 2000.0).unwrap();
    let problem = ProblemEncoding::fixed_structure(m.system.clone());
    let estimator = EstimatorConfig::new(10, 0.2).unwrap();
    let descent = Descent {
        problem: &problem,
        objective: &obj,
        init: &init,
        estimator: &estimator,
    };
    let theta = problem.encode(&m.system).unwrap();
    let trace = run_descent(descent, AdamState::new(0.1, 2).unwrap(), 10, theta, RngStream::new(8)).unwrap();
    assert_eq!(trace.records.len(), 11);
    let rates = trace.model.unwrap().rates().to_vec();
    assert!(
        (rates[0] / 0.02 - 1.0).abs() < 0.2 && (rates[1] / 5.0 - 1.0).abs() < 0.2,
        "{rates:?}"
    );
}

#[test]
fn single_precision_pipeline() {
    let m = sir();
    let sys32: ReactionSystem32 = m.system.cast();
    let init = m.init.clone().unwrap();
    let grid = SnapshotGrid32::uniform(1.0, 50).unwrap();
    let mean = mean_time_series(&sys32, &init, &grid, 4, RngStream::new(2)).unwrap();
    for k in 0..mean.n_rows() {
        let total: f32 = mean.row(k).iter().sum();
        assert!((total - 2000.0).abs() < 1e-2);
    }
    let enc = ProblemEncoding32::fixed_structure(sys32.clone());
    let back = enc.decode(&enc.encode(&sys32).unwrap()).unwrap();
    let back: &ReactionSystem32 = &back[0];
    for (a, b) in back.rates().iter().zip(sys32.rates()) {
        assert!((a / b - 1.0).abs() < 1e-3, "{a} vs {b}");
    }
    let _: ReactionSystem = back.cast();
}
