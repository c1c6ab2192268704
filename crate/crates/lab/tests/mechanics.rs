//! Forced scripted policies through the harness: outcomes must be exactly
//! what the environment mechanics dictate.

use cogtown_core::backend::{Gateway, ScriptRule, ScriptedBackend};
use cogtown_lab::{run_experiment, ExperimentKind, ExperimentProtocol, ExperimentRun, Variant};

fn gw(rules: &[(&str, &str, &str)]) -> Gateway {
    let rules = rules.iter().map(|(t, p, r)| ScriptRule::new(Some(t), p, r)).collect();
    Gateway::scripted(ScriptedBackend::new(rules).unwrap())
}

fn run(kind: ExperimentKind, variant: Variant, reps: usize, g: &Gateway) -> ExperimentRun {
    let mut p = ExperimentProtocol::builtin(kind, variant);
    p.repetitions = reps;
    run_experiment(&p, g, Some(2)).unwrap()
}

#[test]
fn helplessness_always_act_never_fails() {
    let g = gw(&[
        ("lab_pretreatment", ".", "press the button"),
        ("lab_light", ".", "turn the knob"),
    ]);
    let r = run(ExperimentKind::Helplessness, Variant::Base, 2, &g);
    for cond in ["E", "NE", "NP"] {
        assert_eq!(r.table.value(cond, "failure"), Some(0.0), "{cond}");
        assert_eq!(r.table.value(cond, "avoidance"), Some(1.0), "{cond}");
        assert_eq!(r.table.value(cond, "trials_to_avoidance"), Some(3.0), "{cond}");
    }
}

#[test]
fn helplessness_never_act_always_fails() {
    let g = gw(&[
        ("lab_pretreatment", ".", "do nothing"),
        ("lab_light", ".", "wait"),
        ("lab_noise", ".", "do nothing"),
    ]);
    let r = run(ExperimentKind::Helplessness, Variant::Base, 2, &g);
    for cond in ["E", "NE", "NP"] {
        assert_eq!(r.table.value(cond, "failure"), Some(1.0), "{cond}");
        assert_eq!(r.table.value(cond, "trials_to_escape"), Some(19.0), "{cond}");
    }
    let r = run(ExperimentKind::Helplessness, Variant::Extended, 1, &g);
    assert_eq!(r.table.value("controllable", "failure"), Some(1.0));
    assert_eq!(r.table.value("uncontrollable", "failure"), Some(1.0));
}

#[test]
fn button_works_only_where_noise_is_escapable() {
    let g = gw(&[("lab_pretreatment", ".", "press the button")]);
    for variant in [Variant::Base, Variant::Extended] {
        let r = run(ExperimentKind::Helplessness, variant, 1, &g);
        let p = &r.protocol;
        let mut seen = 0;
        for t in r.repetitions.iter().flat_map(|x| &x.trials).filter(|t| t.phase == "pretreatment") {
            let escapable = p.group(&t.group).unwrap().flag("escapable");
            assert_eq!(t.data["pressed"], true);
            assert_eq!(t.data["stopped"], escapable, "{} {}", t.group, t.trial);
            seen += 1;
        }
        assert!(seen > 0);
    }
}

#[test]
fn ostracism_throw_counts_are_exact() {
    let r = run(ExperimentKind::Ostracism, Variant::Base, 3, &gw(&[]));
    for rep in &r.repetitions {
        let c = rep.sheet.get("Ostracism", "received").unwrap();
        assert!(c.values.iter().all(|v| *v == Some(2.0)));
        let c = rep.sheet.get("Inclusion", "received").unwrap();
        assert!(c.values.iter().all(|v| *v == Some(4.0)));
    }
    let games = r.repetitions[0].trials.iter().filter(|t| t.phase == "game");
    assert_eq!(games.count(), 20 * 12);
}

#[test]
fn ostracism_constant_survey_shows_no_difference() {
    let r = run(ExperimentKind::Ostracism, Variant::Base, 2, &gw(&[("lab_rating", ".", "5")]));
    for cat in ["Belonging", "Control", "Self-esteem", "Meaningful Existence", "Mood", "Ancillary", "Manipulation Checks"] {
        assert_eq!(r.table.value("Ostracism", cat), r.table.value("Inclusion", cat), "{cat}");
        let s = r.table.significance.iter().find(|s| s.metric == cat).unwrap();
        assert!(s.p.map_or(true, |p| p == 1.0), "{cat}: {s:?}");
    }
}

#[test]
fn diffusion_help_first_helps_at_position_one() {
    let seq = r#"{"actions": ["call for help", "wait and listen", "wait and listen", "do nothing", "do nothing", "do nothing"]}"#;
    let r = run(ExperimentKind::Diffusion, Variant::Base, 2, &gw(&[("lab_actions", ".", seq)]));
    for cond in ["2", "3", "6"] {
        assert_eq!(r.table.value(cond, "helped"), Some(1.0), "{cond}");
        assert_eq!(r.table.value(cond, "position"), Some(1.0), "{cond}");
    }
    assert_eq!(r.table.invalid_trials, 0);
}

#[test]
fn diffusion_unknown_actions_make_the_trial_invalid() {
    let seq = r#"{"actions": ["scream", "run", "hide", "cry", "sit", "stand"]}"#;
    let r = run(ExperimentKind::Diffusion, Variant::Base, 1, &gw(&[("lab_actions", ".", seq)]));
    assert_eq!(r.table.invalid_trials, 26);
    assert_eq!(r.table.value("2", "helped"), None);
}

#[test]
fn fitd_always_no_complies_nowhere() {
    let r = run(ExperimentKind::Fitd, Variant::Base, 2, &gw(&[("lab_request", ".", "decline")]));
    for cond in ["Performance", "Agree-Only", "Familiarization", "One-Contact"] {
        assert_eq!(r.table.value(cond, "compliance"), Some(0.0), "{cond}");
    }
}

#[test]
fn dissonance_constant_rating_gives_constant_means() {
    let r = run(
        ExperimentKind::Dissonance,
        Variant::Base,
        2,
        &gw(&[("lab_rating", "learn from the tasks", "3"), ("lab_rating", ".", "0")]),
    );
    for cond in ["Control", "One Dollar", "Twenty Dollars"] {
        assert_eq!(r.table.value(cond, "Q2"), Some(3.0), "{cond}");
    }
}

#[test]
fn dissonance_out_of_range_answers_are_clamped_and_flagged() {
    let r = run(ExperimentKind::Dissonance, Variant::Base, 1, &gw(&[("lab_rating", "enjoyable", "+7")]));
    for cond in ["Control", "One Dollar", "Twenty Dollars"] {
        assert_eq!(r.table.value(cond, "Q1"), Some(5.0));
    }
    assert_eq!(r.table.flags.iter().filter(|f| f.contains("Q1") && f.contains("clamped")).count(), 20);
}

#[test]
fn dissonance_unreadable_answers_are_missing() {
    let r = run(ExperimentKind::Dissonance, Variant::Base, 1, &gw(&[("lab_rating", "important", "no idea")]));
    assert_eq!(r.table.value("Control", "Q3"), None);
    assert_eq!(r.table.row("agents", "Control", "Q3").unwrap().n, Some(0.0));
}

#[test]
fn door_in_the_face_counts_refusers() {
    // Everyone refuses the cold moderate request, then accepts it after
    // refusing the large one.
    let g = gw(&[
        ("lab_request", "just one hour", "agree"),
        ("lab_request", "six people", "decline"),
        ("lab_request", ".", "decline"),
    ]);
    let r = run(ExperimentKind::Fitd, Variant::Extended, 1, &g);
    assert_eq!(r.table.value("screening", "accepted_small"), Some(0.0));
    assert_eq!(r.table.value("refusers", "accepted_large"), Some(0.0));
    assert_eq!(r.table.value("refusers", "accepted_small"), Some(1.0));
    assert_eq!(r.table.row("agents", "refusers", "accepted_small").unwrap().n, Some(36.0));
}

#[test]
fn leader_categories_follow_the_sequences() {
    let leader = r#"{"actions": ["instruct the others to get help", "wait and listen", "wait and listen", "wait and listen", "wait and listen", "wait and listen"]}"#;
    let member = r#"{"actions": ["follow the leader's instructions", "wait and listen", "wait and listen", "wait and listen", "wait and listen", "wait and listen"]}"#;
    let g = gw(&[
        ("lab_actions", "instruct the others", leader),
        ("lab_actions", ".", member),
    ]);
    let r = run(ExperimentKind::Diffusion, Variant::Extended, 1, &g);
    let v = |c, m| r.table.value(c, m).unwrap();
    assert_eq!(v("leader", "recognized_role"), 1.0);
    assert_eq!(v("leader", "delegated"), 1.0);
    assert_eq!(v("leader", "commanded_and_acted"), 0.0);
    assert_eq!(v("member", "immediate"), 0.0);
    assert_eq!(v("member", "only_followed"), 1.0);
    assert_eq!(v("member", "complied"), 1.0);
}

#[test]
fn observer_throws_are_recorded_per_stage() {
    let r = run(ExperimentKind::Ostracism, Variant::Extended, 1, &gw(&[("lab_throw", ".", "Drew")]));
    assert_eq!(r.table.value("stage 2", "to_ostracizers"), Some(1.0));
    assert_eq!(r.table.value("stage 3", "to_ostracizers"), Some(1.0));
    let r = run(ExperimentKind::Ostracism, Variant::Extended, 1, &gw(&[("lab_throw", ".", "Casey")]));
    assert_eq!(r.table.value("stage 3", "to_ostracizers"), Some(0.0));
}
