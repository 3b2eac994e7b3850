use std::fs;

use pe::output::{read_field_csv, write_convergence_csv, write_field_csv, write_regularity_csv, write_stability_csv};
use pe_core::analysis::{fit_stability, RegularityReport};
use pe_core::model::make_default_equilibrium;
use pe_core::periodic::ConvergenceReport;
use pe_core::PeriodicField;

fn lines(path: &std::path::Path) -> Vec<String> {
    let text = fs::read_to_string(path).unwrap();
    assert!(!text.contains('\r'));
    assert!(text.ends_with('\n'));
    text.lines().map(str::to_string).collect()
}

#[test]
fn two_by_two_field_has_five_lines() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.csv");
    let eq = make_default_equilibrium(1.0, 1.4).unwrap();
    let field = PeriodicField::from_fn(2, 2, 4.0, 1.0, |t, x| (1e-3 * t, -2e-3 * x)).unwrap();
    write_field_csv(&field, &eq, &path).unwrap();
    let l = lines(&path);
    assert_eq!(l.len(), 5);
    assert_eq!(l[0], "t,x,phi1,phi2,m,n,rho,u");
    assert!(l.iter().all(|r| !r.ends_with(',')));
    assert!(l[1..].iter().all(|r| r.split(',').count() == 8));
}

#[test]
fn zero_field_is_the_equilibrium() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.csv");
    let eq = make_default_equilibrium(1.3, 1.4).unwrap();
    write_field_csv(&PeriodicField::zeros(4, 5, 2.0, 3.0).unwrap(), &eq, &path).unwrap();
    for row in &lines(&path)[1..] {
        let v: Vec<f64> = row.split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!((v[2], v[3]), (0.0, 0.0));
        assert!((v[6] - 1.3).abs() < 1e-14, "rho {}", v[6]);
        assert!(v[7].abs() < 1e-15, "u {}", v[7]);
    }
}

#[test]
fn field_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.csv");
    let eq = make_default_equilibrium(1.0, 1.4).unwrap();
    let field = PeriodicField::from_fn(12, 9, 4.0, 1.0, |t, x| {
        (1e-2 * (t * 1.7).sin() * (x + 0.1).ln(), 3e-3 * (t - x).cos() / 7.0)
    })
    .unwrap();
    write_field_csv(&field, &eq, &path).unwrap();
    let back = read_field_csv(&path).unwrap();
    assert_eq!((back.nt, back.nx), (12, 9));
    assert_eq!(back.phi1, field.phi1);
    assert_eq!(back.phi2, field.phi2);
    assert!((back.period - 4.0).abs() < 1e-14);
    assert_eq!(back.length, 1.0);
}

#[test]
fn convergence_report_rows_and_ratios() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.csv");
    let report = ConvergenceReport::from_diffs(vec![1.0, 0.5, 0.25], 1e-12);
    write_convergence_csv(&report, &path).unwrap();
    let l = lines(&path);
    assert_eq!(l.len(), 4);
    assert_eq!(l[0], "iter,sup_diff,theta_est");
    let theta: Vec<&str> = l[1..].iter().map(|r| r.split(',').nth(2).unwrap()).collect();
    assert_eq!(theta[0], "");
    assert_eq!(theta[1].parse::<f64>().unwrap(), 0.5);
    assert_eq!(theta[2].parse::<f64>().unwrap(), 0.5);
}

#[test]
fn stability_windows_map_to_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    let series: Vec<(f64, f64)> = (0..=60).map(|i| (i as f64 * 0.1, 0.5f64.powi(i / 10))).collect();
    let report = fit_stability(&series, &series, 1.0, 0.0).unwrap();
    write_stability_csv(&report, &path).unwrap();
    let l = lines(&path);
    assert_eq!(l[0], "window,sup_c0,sup_c1,ratio_c0,ratio_c1");
    assert_eq!(l.len(), report.windows() + 1);
    assert!(l[1].ends_with(",,"));
    let r: f64 = l[2].split(',').nth(3).unwrap().parse().unwrap();
    assert!((r - 0.5).abs() < 1e-15);
}

#[test]
fn regularity_report_has_three_stencils() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let report = RegularityReport {
        d2t_sup: [1.0, 1.1],
        dtdx_sup: [2.0, 2.0],
        d2x_sup: [3.0, 6.0],
        refinement_ratios: [1.1, 1.0, 2.0],
    };
    write_regularity_csv(&report, &path).unwrap();
    let l = lines(&path);
    assert_eq!(l[0], "stencil,sup_coarse,sup_fine,ratio");
    let names: Vec<&str> = l[1..].iter().map(|r| r.split(',').next().unwrap()).collect();
    assert_eq!(names, ["d2t", "dtdx", "d2x"]);
}

#[test]
fn write_errors_name_the_path() {
    let eq = make_default_equilibrium(1.0, 1.4).unwrap();
    let field = PeriodicField::zeros(2, 2, 1.0, 1.0).unwrap();
    let err = write_field_csv(&field, &eq, std::path::Path::new("/nonexistent/dir/f.csv")).unwrap_err();
    assert!(err.to_string().contains("/nonexistent/dir/f.csv"));
    assert_eq!(err.exit_code(), 1);
}
