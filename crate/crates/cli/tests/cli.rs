use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command as Process, Output};

use hetlock_cli::{parse_config, Command};

const BIN: &str = env!("CARGO_BIN_EXE_hetlock");

fn argv(s: &str) -> Vec<String> {
    std::iter::once("hetlock").chain(s.split_whitespace()).map(String::from).collect()
}

fn hetlock(dir: &Path, args: &str) -> Output {
    Process::new(BIN)
        .args(args.split_whitespace())
        .current_dir(dir)
        .env_remove("HETLOCK_OUT_DIR")
        .output()
        .unwrap()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn assert_csv(text: &str, header: &str) {
    assert_eq!(text.lines().next(), Some(header));
    assert!(text.ends_with('\n'));
}

#[test]
fn trace_example_parses() {
    let cfg = parse_config(&argv("trace --delta 1.5 --gamma 0.2 --k 0.5 --n-tau 512"), None).unwrap();
    match cfg.command {
        Command::Trace { map, grid, .. } => {
            assert_eq!(map.source.delta().unwrap(), 1.5);
            assert_eq!((map.gamma, map.k, grid.n_tau), (0.2, 0.5, 512));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn delta_from_alpha_and_beta() {
    let cfg = parse_config(&argv("classify --alpha 2 --beta -0.4 --gamma 1 --k 1"), None).unwrap();
    match cfg.command {
        Command::Classify { map, .. } => assert!((map.source.delta().unwrap() - 1.5).abs() < 1e-15),
        other => panic!("{other:?}"),
    }
}

#[test]
fn conflicting_or_invalid_parameters_are_rejected() {
    assert!(parse_config(&argv("classify --delta 1.5 --alpha 2 --beta -1 --gamma 1 --k 1"), None).is_err());
    assert!(parse_config(&argv("classify --delta 0.9 --gamma 1 --k 1"), None).is_err());
    assert!(parse_config(&argv("classify --delta 1.5 --gamma -1 --k 1"), None).is_err());
    assert!(parse_config(&argv("classify --alpha 2 --gamma 1 --k 1"), None).is_err());
    assert!(parse_config(&argv("hopf --delta 1.5 --k 1 --K 0"), None).is_err());
}

#[test]
fn command_line_overrides_file() {
    let file = "delta = 1.5\ngamma = 0.2\nk = 0.5 # forcing amplitude\n";
    let cfg = parse_config(&argv("classify --gamma 3"), Some(file)).unwrap();
    match cfg.command {
        Command::Classify { map, .. } => {
            assert_eq!((map.source.delta().unwrap(), map.gamma, map.k), (1.5, 3.0, 0.5));
        }
        other => panic!("{other:?}"),
    }
    assert!(parse_config(&argv("classify --delta 1.5 --gamma 1 --k 1"), Some("colour = red\n")).is_err());
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        "classify --delta 0.9 --gamma 1 --k 1",
        "classify --delta 1.5 --alpha 2 --beta -1 --gamma 1 --k 1",
        "--config missing.toml classify --delta 1.5 --gamma 1 --k 1",
        "stability --delta 1.5 --gamma 0.2 --k 0.5",
        "hopf --delta 2 --k 0.5 --K 1",
    ] {
        let out = hetlock(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cmds = [
        "trace --delta 1.5 --gamma 0.2 --k 0.5 --n-tau 512 --out a.csv --svg a.svg",
        "stability --delta 1.5 --gamma 0.2 --k 0.5 --K 1 --out a.csv",
        "sweep --k 2 --n-delta 6 --n-gamma 5 --out a.csv --svg a.svg",
        "locked-orbit --alpha 2 --beta -0.5 --gamma 0.05 --omega 0.054 --out a.csv",
    ];
    for cmd in cmds {
        let first: Vec<String> = (0..2)
            .map(|_| {
                let out = hetlock(dir.path(), cmd);
                assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
                let mut text = read(&dir.path().join("a.csv"));
                if cmd.contains("--svg") {
                    text.push_str(&read(&dir.path().join("a.svg")));
                }
                text
            })
            .collect();
        assert_eq!(first[0], first[1], "{cmd}");
    }
}

#[test]
fn every_table_has_a_header_and_trailing_newline() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("classify --delta 1.5 --gamma 0.2 --k 0.5", "delta,gamma,k,region,gamma_plus,gamma_minus"),
        ("trace --delta 1.5 --gamma 0.2 --k 0.5 --n-tau 512", "curve_id,tau,s,is_fold,criticality"),
        ("folds --delta 1.5 --gamma 0.2 --k 0.5", "tau,s,side,criticality,level"),
        (
            "stability --delta 1.5 --gamma 0.2 --k 0.5 --K 1 --tau 0.8",
            "tau,s,class,mu1_re,mu1_im,mu2_re,mu2_im,det,trace,orbit",
        ),
        ("bt --delta 1.5 --k 0.5", "delta,k,eps,gamma,tau,s,residual"),
        ("hopf --delta 1.5 --k 0.5 --K 1 --n-tau 3 --no-side", "delta,k,eps,gamma,tau,s,theta,side,status"),
        ("lock --delta 1.5 --gamma 0.2 --k 0.5 --K 1 --n-tau 512", "n,omega_lo,omega_hi,source,stability_note"),
        ("manifolds --delta 1.5 --gamma 0.2 --k 0.5 --K 1 --tau 0.8 --steps 20", "branch,index,y,s"),
        ("simulate --alpha 2 --beta -0.5 --gamma 0.05 --omega 0.3 --t-end 2 --samples 4", "t,x,y,z"),
        ("sweep --k 0.5 --n-delta 2 --n-gamma 2", "delta,gamma,k,region"),
        // a region with no zeros still writes its header
        ("trace --delta 1.5 --gamma 3 --k 0.5 --n-tau 512", "curve_id,tau,s,is_fold,criticality"),
        ("lock --delta 1.5 --gamma 3 --k 0.5 --K 1 --n-tau 512", "n,omega_lo,omega_hi,source,stability_note"),
    ];
    for (args, header) in cases {
        let out = hetlock(dir.path(), &format!("{args} --out t.csv"));
        assert!(out.status.success(), "{args}: {}", String::from_utf8_lossy(&out.stderr));
        assert_csv(&read(&dir.path().join("t.csv")), header);
    }
}

fn svg_doc(text: &str) -> roxmltree::Document<'_> {
    roxmltree::Document::parse(text).expect("well-formed SVG")
}

#[test]
fn diagram_svg_marks_folds() {
    let dir = tempfile::tempdir().unwrap();
    let out = hetlock(dir.path(), "trace --delta 2 --gamma 0.2 --k 0.5 --n-tau 1024 --svg z.svg");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = read(&dir.path().join("z.svg"));
    let doc = svg_doc(&text);
    assert!(text.contains("region Z"));
    let folds: Vec<_> = doc
        .descendants()
        .filter(|n| n.has_tag_name("circle") && n.attribute("class").is_some_and(|c| c.starts_with("fold")))
        .collect();
    assert_eq!(folds.len(), 2);
    // s runs across the frame, 0..2π over x in 60..620
    let mut xs: Vec<f64> = folds.iter().map(|n| n.attribute("cx").unwrap().parse().unwrap()).collect();
    xs.sort_by(f64::total_cmp);
    for (x, s) in xs.iter().zip([PI / 2.0, 3.0 * PI / 2.0]) {
        assert!((x - (60.0 + 560.0 * s / (2.0 * PI))).abs() < 1.0, "fold marker at x={x}");
    }
}

#[test]
fn empty_region_svg_is_an_annotated_frame() {
    let dir = tempfile::tempdir().unwrap();
    let out = hetlock(dir.path(), "trace --delta 1.5 --gamma 3 --k 0.5 --n-tau 512 --svg w.svg");
    assert!(out.status.success());
    let text = read(&dir.path().join("w.svg"));
    let doc = svg_doc(&text);
    assert!(!doc.descendants().any(|n| n.has_tag_name("polyline")));
    assert!(text.contains("region W") && text.contains("no zeros"));
}

fn atlas_regions(k: f64) -> BTreeSet<String> {
    let dir = tempfile::tempdir().unwrap();
    let out = hetlock(
        dir.path(),
        &format!("sweep --k {k} --n-delta 30 --n-gamma 30 --gamma-min 0.01 --gamma-max 4 --out a.csv --svg a.svg"),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    svg_doc(&read(&dir.path().join("a.svg")));
    read(&dir.path().join("a.csv"))
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().to_string())
        .collect()
}

#[test]
fn atlases_show_the_expected_regions() {
    let set = |tags: &[&str]| tags.iter().map(|t| t.to_string()).collect::<BTreeSet<_>>();
    assert!(atlas_regions(0.5).is_superset(&set(&["W", "X", "Y", "Z"])));
    assert!(atlas_regions(2.0).is_superset(&set(&["A", "B", "C"])));
    assert!(atlas_regions(1.0).is_superset(&set(&["a", "b", "c"])));
}

#[test]
fn out_dir_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("results");
    let out = Process::new(BIN)
        .args("classify --delta 1.5 --gamma 0.2 --k 0.5 --out c.csv".split_whitespace())
        .current_dir(dir.path())
        .env("HETLOCK_OUT_DIR", &target)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_csv(&read(&target.join("c.csv")), "delta,gamma,k,region,gamma_plus,gamma_minus");
    assert!(!dir.path().join("c.csv").exists());
}

#[test]
fn degraded_hopf_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    // the full span ends at tau = 0, where no Hopf point exists
    let out = hetlock(dir.path(), "hopf --delta 1.5 --k 0.5 --K 1 --n-tau 4 --span 1 --no-side --out h.csv");
    assert_eq!(out.status.code(), Some(1));
    let text = read(&dir.path().join("h.csv"));
    assert_csv(&text, "delta,k,eps,gamma,tau,s,theta,side,status");
    assert_eq!(text.lines().filter(|l| l.ends_with(",failed")).count(), 2);
    assert_eq!(text.lines().filter(|l| l.ends_with(",converged")).count(), 6);

    let out = hetlock(dir.path(), "hopf --delta 1.5 --k 0.5 --K 1 --n-tau 3 --no-side --out h.csv");
    assert_eq!(out.status.code(), Some(0));
}
