use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rom_dwr_cli::commands::{self, REPORT_HEADER};
use rom_dwr_cli::io::{fmt_f64, read_indices, read_matrix};
use rom_dwr_cli::pipeline::{evaluate_with, Experiment, Offline};
use rom_dwr_cli::ExperimentConfig;

const SMALL: &str = "\
model.n_grid = 30
time.num_steps = 10
rom.pod_dim = 6
rom.deim_points = 8
sweep.pod_dims = 4, 6
sweep.deim_points = 6, 8
sweep.viscosities = 0.1, 0.08
";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rom-dwr"))
}

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, config).unwrap();
    bin()
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn pipeline_commands_produce_consistent_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    for cmd in ["run-fom", "build-rom", "estimate", "adapt-deim"] {
        ok(&run(dir.path(), SMALL, &[cmd]));
    }
    let out = dir.path().join("out");
    for f in [
        commands::TRAJECTORY,
        commands::ADJOINT,
        commands::QOI,
        commands::POD_BASIS,
        commands::NONLINEAR_BASIS,
        commands::DEIM_INDICES,
        commands::DEIM_CONDITION,
        commands::ESTIMATE,
        commands::CONTRIBUTIONS,
        commands::DWR,
        commands::ADAPTIVE_INDICES,
        commands::ADAPT_TABLE,
    ] {
        assert!(out.join(f).exists(), "{f} missing");
    }

    // in-process recomputation of the estimate row
    let config: ExperimentConfig = SMALL.parse().unwrap();
    let exp = Experiment::new(config.clone()).unwrap();
    let offline = Offline::build(&exp).unwrap();
    let basis = offline.state_basis_k(6).unwrap();
    let v = offline.nonlinear_basis(8).unwrap();
    let indices = rom_dwr::deim_indices(&v).unwrap();
    assert_eq!(
        read_indices(&out.join(commands::DEIM_INDICES)).unwrap(),
        indices
    );
    assert_eq!(
        read_matrix(&out.join(commands::POD_BASIS)).unwrap(),
        *basis.modes()
    );
    let truth = rom_dwr::qoi_eval(&exp.qoi, &offline.trajectory);
    let e = evaluate_with(&exp, basis, &v, indices, 0.1, truth).unwrap();

    let mut rdr = csv::Reader::from_path(out.join(commands::ESTIMATE)).unwrap();
    assert_eq!(
        rdr.headers().unwrap().iter().collect::<Vec<_>>(),
        REPORT_HEADER
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][0], "6");
    assert_eq!(&rows[0][1], "8");
    assert_eq!(&rows[0][5], fmt_f64(e.true_error()));
    assert_eq!(&rows[0][6], fmt_f64(e.report.estimated_error));
    assert_eq!(&rows[0][10], "");

    let table = fs::read_to_string(out.join(commands::ADAPT_TABLE)).unwrap();
    assert!(table.starts_with("selection,alpha,"));
    assert_eq!(table.lines().count(), 3);
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        ok(&run(d.path(), SMALL, &["run-fom"]));
        ok(&run(d.path(), SMALL, &["sweep"]));
    }
    for f in [
        commands::TRAJECTORY,
        commands::ADJOINT,
        commands::QOI,
        commands::SWEEP,
    ] {
        let x = fs::read(a.path().join("out").join(f)).unwrap();
        let y = fs::read(b.path().join("out").join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
}

#[test]
fn sweep_rows_cover_the_product_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    ok(&run(dir.path(), SMALL, &["sweep"]));
    let path = dir.path().join("out").join(commands::SWEEP);
    let mut rdr = csv::Reader::from_path(&path).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2 * 2 * 2);
    for r in &rows {
        for col in [3, 5, 6, 7, 8, 9] {
            let v: f64 = r[col].parse().unwrap();
            assert_eq!(fmt_f64(v), &r[col]);
        }
        assert_eq!(&r[4], "implicit");
    }
    assert!(!dir
        .path()
        .join("out")
        .join(commands::SWEEP_FAILURES)
        .exists());
}

#[test]
fn exact_reduction_row_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let config = "\
model.n_grid = 30
time.num_steps = 30
rom.pod_dim = 28
rom.deim_points = 28
";
    for cmd in ["run-fom", "build-rom", "estimate"] {
        ok(&run(dir.path(), config, &[cmd]));
    }
    let mut rdr = csv::Reader::from_path(dir.path().join("out").join(commands::ESTIMATE)).unwrap();
    let row = rdr.records().next().unwrap().unwrap();
    let t: f64 = row[5].parse().unwrap();
    let e: f64 = row[6].parse().unwrap();
    assert!(t.abs() < 1e-9 && e.abs() < 1e-9, "{t} {e}");
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();
    let code = |out: Output| out.status.code().unwrap();
    assert_eq!(
        code(run(dir.path(), "time.num_steps = 0\n", &["run-fom"])),
        2
    );
    assert_eq!(
        code(run(dir.path(), "model.flavour = 1\n", &["run-fom"])),
        2
    );
    assert_eq!(code(run(dir.path(), "sweep.pod_dims =\n", &["sweep"])), 2);
    assert_eq!(code(run(dir.path(), SMALL, &["build-rom"])), 4);
    assert_eq!(code(run(dir.path(), SMALL, &["estimate"])), 4);
    // more POD modes than snapshots
    ok(&run(dir.path(), SMALL, &["run-fom"]));
    let too_many = format!("{SMALL}rom.pod_dim = 25\n").replace("rom.pod_dim = 6\n", "");
    assert_eq!(code(run(dir.path(), &too_many, &["build-rom"])), 2);
    // explicit Euler far beyond its stability limit blows up
    let unstable = "time.num_steps = 20\n";
    let out = run(dir.path(), unstable, &["run-fom", "--scheme", "explicit"]);
    assert_eq!(code(out), 3);
}

#[test]
fn missing_config_file_is_a_config_error() {
    let out = bin()
        .args(["run-fom", "--config", "/nonexistent/x.cfg"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn adapt_table_indices_parse_as_index_lists() {
    let dir = tempfile::tempdir().unwrap();
    for cmd in ["run-fom", "build-rom", "estimate", "adapt-deim"] {
        ok(&run(dir.path(), SMALL, &[cmd]));
    }
    let out = dir.path().join("out");
    let mut rdr = csv::Reader::from_path(out.join(commands::ADAPT_TABLE)).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    let standard = rom_dwr_cli::io::parse_indices(&rows[0][6]).unwrap();
    assert_eq!(
        standard,
        read_indices(&out.join(commands::DEIM_INDICES)).unwrap()
    );
    let adaptive = rom_dwr_cli::io::parse_indices(&rows[1][6]).unwrap();
    assert_eq!(
        adaptive,
        read_indices(&out.join(commands::ADAPTIVE_INDICES)).unwrap()
    );
    assert_eq!(adaptive.len(), 8);
}
