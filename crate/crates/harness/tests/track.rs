use plasmotrack_harness::config::DEFAULT_CONFIG;
use plasmotrack_harness::experiments::run_sweep;
use plasmotrack_harness::track::{run_track, TrackContext};
use plasmotrack_harness::{ExperimentConfig, Report};

fn config(edits: &[(&str, &str)]) -> ExperimentConfig {
    let mut text = DEFAULT_CONFIG.to_string();
    for (a, b) in edits {
        assert!(text.contains(a), "{a}");
        text = text.replacen(a, b, 1);
    }
    ExperimentConfig::parse(&text).unwrap()
}

#[test]
fn uncoupled_leading_model_realizes_the_projected_input() {
    let cfg = config(&[("coupling = 0.01", "coupling = 0.0"), ("delta = 0.1", "delta = 0.0")]);
    let ctx = TrackContext::prepare(&cfg).unwrap();
    let run = ctx.physical(0.0).unwrap();
    assert!(run.row.err_physical < 1e-9, "{}", run.row.err_physical);
    assert!(run.row.realization_error < 1e-9 * ctx.u_des.l2_norm());
    assert!((run.row.err_total - run.row.err_projection).abs() < 1e-9);
}

#[test]
fn budget_terms_obey_the_triangle_inequality() {
    let mut report = Report::new("track", "", Some(7));
    let out = run_track(&ExperimentConfig::builtin(), &mut report).unwrap();
    assert!(report.all_passed(), "{:?}", report.assertion_lines());
    for r in &out.budget {
        assert!(r.err_total <= r.err_projection + r.err_physical + 1e-12);
        assert!(r.holds());
    }
    // the nominal δ appears once even though the sweep repeats it
    assert_eq!(out.budget.len(), 4);
}

#[test]
fn equilibrium_reference_needs_no_compensation() {
    let cfg = config(&[("coefficients = [0.2, 1.0, -0.5, 0.25]", "coefficients = [0.4]")]);
    let ctx = TrackContext::prepare(&cfg).unwrap();
    assert!(ctx.bias.is_none() && ctx.tail.is_none());
    // zero initial state, constant target: the ideal loop heats the mean up
    let last = ctx.ideal_states.last().unwrap();
    assert!((last[0] - 0.4).abs() < 1e-6, "{}", last[0]);
}

#[test]
fn single_delta_sweep_matches_the_direct_run() {
    let cfg = config(&[
        ("gains = [0.25, 0.5, 1.0, 2.0, 4.0]", "gains = []"),
        ("meshes = [8, 16, 32, 64]", "meshes = []"),
        ("deltas = [0.2, 0.1, 0.05, 0.025]", "deltas = [0.1]"),
    ]);
    let mut sweep = Report::new("sweep", "", Some(7));
    run_sweep(&cfg, &mut sweep).unwrap();
    let mut track = Report::new("track", "", Some(7));
    run_track(&cfg, &mut track).unwrap();
    let s = &sweep.table("sweep.csv").unwrap().rows[0];
    let b = &track.table("budget.csv").unwrap().rows[0];
    // sweep metric = ‖ρ‖, secondary = η; budget columns 2 and 1
    assert_eq!((s[3].as_str(), s[4].as_str()), (b[2].as_str(), b[1].as_str()));
    // one point cannot support a slope fit
    let fit = &sweep.table("sweep.csv").unwrap().rows[1];
    assert!(fit[5].starts_with("flagged"));
}
