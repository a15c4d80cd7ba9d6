use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_dabopt"));
    c.env_remove("DABOPT_JOBS");
    c
}

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .canonicalize()
        .unwrap()
}

/// Shipped system block with a reduced design space.
fn small_config(dir: &Path, n_modules: &str, f_sw: &str, ratios: &str) -> PathBuf {
    let data = data_dir();
    let text = format!(
        "[system]
p_max_w = 350000
i_max_a = 500
v_out_min_v = 150
v_out_max_v = 1000
v_in_min_v = 600
v_in_max_v = 850
t_amb_c = 25
t_c_max_c = 100
t_tx_max_c = 100
dv_c_max_v = 5

[design_space]
n_modules = {n_modules}
f_sw_hz = {f_sw}
turns_ratio = {ratios}

[paths]
switches = {s}
fans = {f}
cores = {c}
capacitors = {cap}
",
        s = data.join("switches.db").display(),
        f = data.join("fans.db").display(),
        c = data.join("cores.db").display(),
        cap = data.join("capacitors.db").display(),
    );
    let path = dir.join("system.conf");
    fs::write(&path, text).unwrap();
    path
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn sweep_writes_all_outputs_and_report_regenerates_them() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "9,14", "30000", "0.6,0.8");
    let out = tmp.path().join("out");
    let o = run(bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["--jobs", "2"]));
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    for f in [
        "results.csv",
        "pareto.csv",
        "report.json",
        "cost_breakdown.csv",
    ] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let maps: Vec<_> = fs::read_dir(&out)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with("efficiency_map_"))
        .collect();
    assert_eq!(maps.len(), 1, "{maps:?}");

    let results = fs::read_to_string(out.join("results.csv")).unwrap();
    let mut lines = results.lines();
    assert_eq!(
        lines.next().unwrap(),
        "N,f_sw_hz,turns_ratio,feasible,reason,cost_switches_usd,cost_cooling_usd,\
         cost_transformer_usd,cost_capacitors_usd,cost_module_usd,cost_350kw_usd,avg_loss_w,\
         min_eff_full_load,avg_eff_all,pareto,benchmark_pass"
    );
    assert_eq!(lines.count(), 4);

    // Regenerating from report.json must reproduce every CSV byte for byte.
    let before: Vec<(String, Vec<u8>)> = fs::read_dir(&out)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| {
            let bytes = fs::read(&p).unwrap();
            fs::remove_file(&p).unwrap();
            (p.file_name().unwrap().to_string_lossy().into_owned(), bytes)
        })
        .collect();
    let o = run(bin().arg("report").arg("--out").arg(&out));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for (name, bytes) in before {
        assert_eq!(fs::read(out.join(&name)).unwrap(), bytes, "{name} differs");
    }
}

#[test]
fn sweep_jobs_env_default_gives_same_results() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "9", "20000,30000", "0.7,0.8");
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let o = run(bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&a)
        .env("DABOPT_JOBS", "1"));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = run(bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&b)
        .env("DABOPT_JOBS", "3"));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(
        fs::read(a.join("results.csv")).unwrap(),
        fs::read(b.join("results.csv")).unwrap()
    );
}

#[test]
fn sweep_all_infeasible_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    // A single 350 kW module cannot be cooled by any 40 mm fan heatsink.
    let cfg = small_config(tmp.path(), "1", "30000", "0.9");
    let out = tmp.path().join("out");
    let o = run(bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out));
    assert_eq!(code(&o), 2, "{}{}", stdout(&o), stderr(&o));
    assert!(out.join("results.csv").is_file());
}

#[test]
fn sweep_bad_config_exits_1_with_cause() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.conf");
    fs::write(&cfg, "[system]\np_max_w = lots\n").unwrap();
    let o = run(bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path()));
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("p_max_w"), "{}", stderr(&o));

    let o = run(bin()
        .args(["sweep", "--config"])
        .arg(tmp.path().join("absent.conf"))
        .arg("--out")
        .arg(tmp.path()));
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("absent.conf"), "{}", stderr(&o));
}

#[test]
fn sweep_missing_database_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "9", "30000", "0.8");
    let text = fs::read_to_string(&cfg).unwrap();
    let broken = text.replace(
        &data_dir().join("fans.db").display().to_string(),
        "/nonexistent/fans.db",
    );
    fs::write(&cfg, broken).unwrap();
    let o = run(bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path()));
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("fans.db"), "{}", stderr(&o));
}

#[test]
fn eval_prints_breakdown_with_transformer_line() {
    let o = run(bin()
        .args(["eval", "--config"])
        .arg(data_dir().join("system.conf"))
        .args(["--N", "9", "--fsw", "30000", "--n", "0.8"]));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("feasible"));
    assert!(
        s.lines()
            .any(|l| l.trim_start().starts_with("transformer ")),
        "{s}"
    );
    assert!(s.contains("operating grid"));
    // 18 voltages x 2 loads.
    let rows = s
        .lines()
        .skip_while(|l| !l.starts_with("operating grid"))
        .skip(2)
        .take_while(|l| !l.trim().is_empty())
        .count();
    assert_eq!(rows, 36);
}

#[test]
fn eval_verbose_dumps_breakpoints() {
    let o = run(bin()
        .args(["eval", "--config"])
        .arg(data_dir().join("system.conf"))
        .args(["--N", "9", "--fsw", "30000", "--n", "0.8", "--verbose"]));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("breakpoints"));
    assert_eq!(s.lines().filter(|l| l.contains("d = ")).count(), 36);
}

#[test]
fn eval_outside_space_needs_force() {
    let cfg = data_dir().join("system.conf");
    let o = run(bin()
        .args(["eval", "--config"])
        .arg(&cfg)
        .args(["--N", "4", "--fsw", "30000", "--n", "0.9"]));
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("outside"), "{}", stderr(&o));

    let o = run(bin()
        .args(["eval", "--config"])
        .arg(&cfg)
        .args(["--N", "4", "--fsw", "30000", "--n", "0.9", "--force"]));
    assert!(matches!(code(&o), 0 | 2), "{}", stderr(&o));
}

#[test]
fn eval_infeasible_exits_2() {
    let o = run(bin()
        .args(["eval", "--config"])
        .arg(data_dir().join("system.conf"))
        .args(["--N", "5", "--fsw", "5000", "--n", "0.2"]));
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("INFEASIBLE"));
}

#[test]
fn report_without_json_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(bin().arg("report").arg("--out").arg(tmp.path()));
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("report.json"));
}

#[test]
fn report_corrupt_json_names_location() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("report.json"),
        "{\n  \"format_version\": 1,\n  oops\n}\n",
    )
    .unwrap();
    let o = run(bin().arg("report").arg("--out").arg(tmp.path()));
    assert_eq!(code(&o), 1);
    let e = stderr(&o);
    assert!(e.contains("line 3"), "{e}");
}
