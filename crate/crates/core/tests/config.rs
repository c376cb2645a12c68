use koordsim::apps;
use koordsim::config::SimConfig;
use koordsim::motion::VehicleKind;
use koordsim::planner::PlannerKind;

const BASE: &str = "num_robots: 2
program: @task
workspace:
  bounds: 0 0 0 8 7 3
  obstacle: 3 3 0 4 4 3
robot:
  pid: 0
  on_device: car
  start: 1 1 0 0
robot:
  pid: 1
  on_device: quad
  start: 6 6 1.5 0
device:
  bot_name: car
  bot_type: CAR
device:
  bot_name: quad
  bot_type: QUAD
";

fn err(text: &str) -> String {
    SimConfig::parse(text, None).unwrap_err().to_string()
}

#[test]
fn program_paths_resolve_against_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir(dir.path().join("apps")).unwrap();
    std::fs::write(dir.path().join("apps/mine.koord"), apps::LINEFORM).unwrap();
    let text = BASE.replace("program: @task", "program: apps/mine.koord");
    std::fs::write(dir.path().join("run.yaml"), &text).unwrap();
    let cfg = SimConfig::load(&dir.path().join("run.yaml")).unwrap();
    assert_eq!(cfg.program.text, apps::LINEFORM);
    assert!(SimConfig::parse(&text, None).is_err());
}

#[test]
fn defaults_and_devices() {
    let cfg = SimConfig::parse(BASE, None).unwrap();
    assert_eq!((cfg.delta, cfg.dt, cfg.d_s(), cfg.eps_v, cfg.delta_v), (0.1, 0.01, 0.5, 0.2, 1.0));
    assert_eq!(cfg.steps_per_round(), 10);
    let devs = cfg.robot_devices();
    assert_eq!(devs[0].model.kind, VehicleKind::Car);
    assert_eq!(devs[0].planner, PlannerKind::RrtCar);
    assert_eq!(devs[1].planner, PlannerKind::RrtQuad);
    assert_eq!(cfg.workspace.obstacles.len(), 1);
}

#[test]
fn canonical_text_reparses_to_the_same_config() {
    for text in [
        BASE.to_string(),
        apps::task_config_text(4, 9),
        apps::shapeform_config_text(9, 2, 50.0),
        apps::averaging_config_text(&[1.5, -2.0, 7.25], 5.0),
    ] {
        let cfg = SimConfig::parse(&text, None).unwrap();
        assert_eq!(SimConfig::parse(&cfg.to_string(), None).unwrap(), cfg);
    }
}

#[test]
fn invalid_configs_are_rejected_with_a_reason() {
    let cases = [
        (BASE.replace("start: 1 1 0 0", "start: 1 1 1 0"), "ground"),
        (BASE.replace("start: 6 6 1.5 0", "start: 3.5 3.5 1.5 0"), "free"),
        (BASE.replace("on_device: quad", "on_device: blimp"), "blimp"),
        (BASE.replace("pid: 1", "pid: 0"), "pid"),
        (format!("{BASE}  planner: RRT_CAR\n"), "planner"),
        (BASE.replace("num_robots: 2", "num_robots: 2\ndelta: 0.105"), "dt"),
        (BASE.replace("program: @task", "program: @nothing"), "nothing"),
        (format!("{BASE}tasks:\n  - 3.5 3.5 0\n"), "task"),
    ];
    for (text, needle) in cases {
        let e = err(&text);
        assert!(e.contains(needle), "expected `{needle}` in `{e}`");
    }
}

#[test]
fn errors_name_their_line() {
    let e = err(&BASE.replace("  start: 6 6 1.5 0", "  start: 6 six 1.5 0"));
    assert!(e.starts_with("line 13:"), "{e}");
    let e = err(&BASE.replace("  bounds:", "\tbounds:"));
    assert!(e.starts_with("line 4:"), "{e}");
}
