use csi_shield::channel::{ChannelModel, Scenario};
use csi_shield::experiments::{
    parameter_study, run_session, sweep_irs_orientation, sweep_irs_size, ExperimentConfig, Selection, SessionSpec,
};
use csi_shield::motion::Motion;
use csi_shield::Error;

fn short() -> ExperimentConfig {
    ExperimentConfig {
        reference_s: 10.0,
        session_s: 5.0,
        ..ExperimentConfig::default()
    }
}

#[test]
fn sessions_are_reproducible() {
    let s = Scenario::office(11);
    let exp = short();
    let model = ChannelModel::new(&s).unwrap();
    let spec = SessionSpec::new("walk", true, exp.walk_motion(), 3.0, exp.defense);
    let a = run_session(&model, &spec, &Selection::FromSession(28), 1.0).unwrap();
    let b = run_session(&model, &spec, &Selection::FromSession(28), 1.0).unwrap();
    assert_eq!(a.observation, b.observation);
    assert_eq!(a.selection, b.selection);
    assert_eq!(a.irs_changed, b.irs_changed);
}

#[test]
fn static_noiseless_room_is_silent() {
    let mut s = Scenario::office(1);
    s.snr_db = f64::INFINITY;
    s.irs = None;
    let model = ChannelModel::new(&s).unwrap();
    let spec = SessionSpec::new("quiet", false, Motion::None, 3.0, Default::default());
    let out = run_session(&model, &spec, &Selection::FromSession(28), 1.0).unwrap();
    assert!(out.observation.values.iter().all(|&v| v == 0.0));
}

#[test]
fn no_active_elements_without_noise_is_silent() {
    let mut s = Scenario::office(4);
    s.snr_db = f64::INFINITY;
    let r = sweep_irs_size(&s, &short(), &[0], 3.0).unwrap();
    assert_eq!(r.cells[0].median, 0.0);
    assert_eq!(r.cells[0].p99, 0.0);
}

#[test]
fn size_sweep_rejects_more_elements_than_the_surface_has() {
    let r = sweep_irs_size(&Scenario::office(4), &short(), &[257], 3.0);
    assert!(matches!(r, Err(Error::Contract(_))));
}

#[test]
fn empty_angle_list_gives_empty_sweep() {
    let r = sweep_irs_orientation(&Scenario::office(4), &short(), &[], 3.0).unwrap();
    assert!(r.cells.is_empty());
    assert_eq!(r.sweep_var, "orientation");
}

#[test]
fn rare_updates_shrink_the_observation() {
    let s = Scenario::office(6);
    let cells = parameter_study(&s, &short(), &[0.05], &[0.6, 0.99], 20.0).unwrap();
    assert!(cells[1].euclidean_norm < cells[0].euclidean_norm);
}

#[test]
fn walk_is_detected_only_without_defense() {
    let s = Scenario::office(1);
    let exp = ExperimentConfig::default();
    let off = csi_shield::experiments::walk_experiment(&s, &exp, false).unwrap();
    let on = csi_shield::experiments::walk_experiment(&s, &exp, true).unwrap();
    assert!(off.crossing_rate > 0.9);
    assert!(on.crossing_rate < 0.1);
    assert!(on.threshold > off.threshold);
}
