//! One PASS/FAIL line per acceptance criterion. Tolerances and time budgets
//! are fixed here; any failure makes the target exit non-zero.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use cogtown_core::affect::{
    decay, map_personality_to_pad, update_mood, virtual_emotion_center, AffectParams, EmotionVector, MoodState,
    PadVector, PersonalityProfile, AROUSAL_WEIGHTS, DOMINANCE_WEIGHTS, PLEASURE_WEIGHTS,
};
use cogtown_core::backend::{
    hashed_embedding, Backend, Gateway, HttpBackend, HttpConfig, ReplayBackend, ScriptRule, ScriptedBackend,
    TemplateSet,
};
use cogtown_core::cognition::{
    decide_source, sn_select_mode, ActionSource, DmnFunction, DmnSelector, DmnStrategy, Priorities, PriorityCurve,
    PriorityParams, SnConfig, ThinkingMode,
};
use cogtown_core::memory::NeedsState;
use cogtown_core::sim::{self, daily_life, EventKind};
use cogtown_lab::output::write_run;
use cogtown_lab::stats::{chi_square, chi_square_auto, fisher_exact, Table2x2};
use cogtown_lab::{run_experiment, ExperimentKind, ExperimentProtocol, ExperimentRun, ResultTable, Variant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

// ---------------------------------------------------------------- affect

fn pad_oracle() -> Outcome {
    let hand: [[f64; 3]; 5] = [
        [0.21, 0.00, 0.60],
        [0.59, 0.30, -0.32],
        [0.19, -0.57, 0.00],
        [0.00, 0.15, 0.25],
        [0.00, 0.00, 0.17],
    ];
    for (i, want) in hand.iter().enumerate() {
        let mut c = [0.0; 5];
        c[i] = 1.0;
        let got = map_personality_to_pad(&PersonalityProfile::from_array(c)).to_array();
        for k in 0..3 {
            ensure!(close(got[k], want[k], 1e-9), "unit trait {i}: {got:?} vs {want:?}");
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let c: [f64; 5] = std::array::from_fn(|_| rng.gen());
        let got = map_personality_to_pad(&PersonalityProfile::from_array(c)).to_array();
        for (k, w) in [PLEASURE_WEIGHTS, AROUSAL_WEIGHTS, DOMINANCE_WEIGHTS].iter().enumerate() {
            let mut s = 0.0;
            for j in 0..5 {
                s += w[j] * c[j];
            }
            ensure!(close(got[k], s.clamp(-1.0, 1.0), 1e-9), "profile {c:?} axis {k}: {} vs {s}", got[k]);
        }
    }
    for _ in 0..1000 {
        let n = rng.gen_range(1..20);
        let events: Vec<(PadVector, f64)> = (0..n)
            .map(|_| {
                let v = PadVector::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
                (v, rng.gen_range(0.01..=1.0))
            })
            .collect();
        let (mut sp, mut sa, mut sd, mut w) = (0.0, 0.0, 0.0, 0.0);
        for (v, i) in &events {
            sp += v.p * i;
            sa += v.a * i;
            sd += v.d * i;
            w += i;
        }
        let c = virtual_emotion_center(&events).map_err(|e| e.to_string())?.position;
        ensure!(
            close(c.p, sp / w, 1e-9) && close(c.a, sa / w, 1e-9) && close(c.d, sd / w, 1e-9),
            "center {c:?} vs ({}, {}, {})",
            sp / w,
            sa / w,
            sd / w
        );
    }
    Ok("5 unit + 100 random profiles, 1000 event sets, tol 1e-9".into())
}

fn random_pad(rng: &mut ChaCha8Rng) -> PadVector {
    PadVector::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0))
}

fn in_cube(v: PadVector) -> bool {
    v.to_array().iter().all(|x| (-1.0..=1.0).contains(x))
}

fn mood_properties() -> Outcome {
    let params = AffectParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut pulls, mut pushes) = (0, 0);
    for case in 0..100_000 {
        let cur = MoodState::at(random_pad(&mut rng));
        let c = random_pad(&mut rng);
        if c.norm() == 0.0 {
            continue;
        }
        let next = update_mood(&cur, c, &params).position;
        ensure!(in_cube(next), "case {case}: {next:?} left the cube");
        let before = cur.position.distance(c);
        let after = next.distance(c);
        if cur.position.dot(c) / c.norm() < c.norm() {
            pulls += 1;
            ensure!(after <= (1.0 - params.pull_rate) * before + 1e-12, "case {case}: pull {before} -> {after}");
        } else {
            pushes += 1;
            let free = cur.position.add(cur.position.sub(c).scale(params.push_rate));
            if in_cube(free) {
                ensure!(
                    close(after, (1.0 + params.push_rate) * before, 1e-12),
                    "case {case}: push {before} -> {after}"
                );
            } else {
                ensure!(next == free.clamped(), "case {case}: push not clamped");
            }
        }
        let fixed = update_mood(&MoodState::at(c), c, &params).position;
        ensure!(fixed.distance(c) <= 1e-12, "case {case}: {c:?} is not fixed");

        let e = EmotionVector::from_array(std::array::from_fn(|_| rng.gen()));
        let home = random_pad(&mut rng);
        let (s, t) = (rng.gen_range(0.0..50.0), rng.gen_range(0.0..50.0));
        let (e1, m1) = decay(&e, &cur, home, s, &params);
        let (e2, m2) = decay(&e1, &m1, home, t, &params);
        let (e3, m3) = decay(&e, &cur, home, s + t, &params);
        ensure!(m2.position.distance(m3.position) <= 1e-12, "case {case}: mood decay is not a semigroup");
        for (a, b) in e2.to_array().iter().zip(e3.to_array()) {
            ensure!(close(*a, b, 1e-12), "case {case}: emotion decay is not a semigroup");
        }
        ensure!(e2.in_bounds() && in_cube(m2.position), "case {case}: decay left bounds");
    }
    ensure!(pulls > 1000 && pushes > 1000, "branches undersampled: {pulls} pulls, {pushes} pushes");
    Ok(format!("1e5 cases ({pulls} pull, {pushes} push), 0 violations"))
}

// ------------------------------------------------------------- cognition

fn decision_policy() -> Outcome {
    let params = PriorityParams::default();
    let needs = NeedsState::default();
    let emotions = EmotionVector::neutral();
    for i in 0..=100 {
        for j in 0..=100 {
            for k in 0..=100 {
                let p = Priorities {
                    task: i as f64 / 100.0,
                    need: j as f64 / 100.0,
                    emotion: k as f64 / 100.0,
                };
                let schedule = decide_source(&p, &needs, &emotions, &params) == ActionSource::Schedule;
                ensure!(schedule == (p.max() <= params.threshold), "{p:?}: schedule={schedule}");
            }
        }
    }
    let curve = PriorityCurve::default();
    let left = 1.0 - (curve.alpha * (curve.beta - 0.5)).exp();
    let right = (curve.gamma * (0.5 - curve.delta)).exp();
    ensure!((left - right).abs() < 1e-9, "gap at 0.5: {left} vs {right}");
    let below = curve.eval(0.5 - 1e-12);
    let above = curve.eval(0.5 + 1e-12);
    ensure!((below - above).abs() < 1e-9, "jump at 0.5: {below} vs {above}");
    let mut prev = curve.eval(0.0);
    for i in 1..=1000 {
        let v = curve.eval(i as f64 / 1000.0);
        ensure!(v <= prev, "P_n rises at {}", i as f64 / 1000.0);
        prev = v;
    }
    ensure!(close(curve.eval(0.5), 0.5, 1e-9), "P_n(0.5) = {}", curve.eval(0.5));
    ensure!(close(curve.eval(0.0), 0.98, 1e-3), "P_n(0) = {}", curve.eval(0.0));
    ensure!(close(curve.eval(1.0), 0.02, 1e-3), "P_n(1) = {}", curve.eval(1.0));
    Ok(format!(
        "101^3 grid at tau {}; P_n(0) {:.4}, P_n(0.5) {:.4}, P_n(1) {:.4}",
        params.threshold,
        curve.eval(0.0),
        curve.eval(0.5),
        curve.eval(1.0)
    ))
}

fn sn_gating() -> Outcome {
    let contexts = [
        "working at the cafe counter",
        "writing a report",
        "cooking dinner",
        "studying for the exam",
        "talking with a neighbour",
        "shopping for groceries",
    ];
    let relaxed = ["taking a walk", "rest on the couch", "idle at home", "commute to work", "daydream by the window"];
    let pure = SnConfig {
        disturbance_prob: 0.0,
        ..SnConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for c in contexts {
        for _ in 0..1000 {
            ensure!(sn_select_mode(c, &pure, &mut rng) == ThinkingMode::Cen, "`{c}` left CEN at epsilon 0");
        }
    }
    for c in relaxed {
        ensure!(sn_select_mode(c, &pure, &mut rng) == ThinkingMode::Dmn, "`{c}` is relaxed");
    }
    let cfg = SnConfig::default();
    ensure!(cfg.disturbance_prob == 0.1, "default epsilon {}", cfg.disturbance_prob);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let draws = 10_000;
    let dmn = (0..draws)
        .filter(|i| sn_select_mode(contexts[i % contexts.len()], &cfg, &mut rng) == ThinkingMode::Dmn)
        .count();
    let freq = dmn as f64 / draws as f64;
    ensure!(close(freq, 0.10, 0.03), "DMN frequency {freq}");
    Ok(format!("epsilon 0 pure over {} task contexts; epsilon 0.1 frequency {freq:.4}", contexts.len()))
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

fn dmn_selection() -> Outcome {
    let gw = Gateway::scripted(ScriptedBackend::defaults_only());
    let mut sel = DmnSelector::new(DmnStrategy::Cyclic);
    let mut counts = [0; 3];
    for _ in 0..300 {
        let f = sel
            .select("", "", &DmnFunction::ALL, &gw, "")
            .ok_or("cyclic selector returned nothing")?;
        counts[DmnFunction::ALL.iter().position(|x| *x == f).unwrap()] += 1;
    }
    ensure!(counts == [100, 100, 100], "cyclic counts {counts:?}");

    let words: Vec<&str> = DmnFunction::ALL
        .iter()
        .flat_map(|f| f.description().split_whitespace())
        .chain(["coffee", "friend", "rain", "tomorrow", "paint", "market", "music"])
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut sel = DmnSelector::new(DmnStrategy::Similarity);
    let mut picked = [0; 3];
    for _ in 0..100 {
        let n = rng.gen_range(3..15);
        let digest: Vec<&str> = (0..n).map(|_| words[rng.gen_range(0..words.len())]).collect();
        let digest = digest.join(" ");
        let d = hashed_embedding(&digest);
        let scores: Vec<f64> = DmnFunction::ALL
            .iter()
            .map(|f| cosine(&d, &hashed_embedding(f.description())))
            .collect();
        let mut best = 0;
        for i in 1..3 {
            if scores[i] > scores[best] {
                best = i;
            }
        }
        let got = sel.select(&digest, "", &DmnFunction::ALL, &gw, "").ok_or("similarity selector returned nothing")?;
        ensure!(got == DmnFunction::ALL[best], "`{digest}`: {got:?} vs {:?} ({scores:?})", DmnFunction::ALL[best]);
        picked[best] += 1;
    }
    Ok(format!("cyclic {counts:?}; similarity argmax on 100 digests, picks {picked:?}"))
}

// ---------------------------------------------------------------- stats

fn binom(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn fisher_oracle(t: &Table2x2) -> f64 {
    let (r0, r1) = (t[0][0] + t[0][1], t[1][0] + t[1][1]);
    let c0 = t[0][0] + t[1][0];
    let weight = |k: u64| binom(r0, k) * binom(r1, c0 - k);
    let observed = weight(t[0][0]);
    let num: u128 = (c0.saturating_sub(r1)..=r0.min(c0)).map(weight).filter(|w| *w <= observed).sum();
    num as f64 / binom(r0 + r1, c0) as f64
}

fn chi_oracle(t: &Table2x2, yates: bool) -> f64 {
    let [[a, b], [c, d]] = t.map(|r| r.map(|x| x as f64));
    let n = a + b + c + d;
    let mut diff = (a * d - b * c).abs();
    if yates {
        diff = (diff - n / 2.0).max(0.0);
    }
    n * diff * diff / ((a + b) * (c + d) * (a + c) * (b + d))
}

/// Upper tail of chi-square with one degree of freedom via the normal
/// density, composite Simpson.
fn chi1_sf(x: f64) -> f64 {
    let z = x.sqrt();
    if z == 0.0 {
        return 1.0;
    }
    let n = 20_000;
    let h = z / n as f64;
    let phi = |t: f64| (-t * t / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = phi(0.0) + phi(z);
    for i in 1..n {
        s += phi(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    (1.0 - 2.0 * s * h / 3.0).max(0.0)
}

fn stats_oracle() -> Outcome {
    let mut tested = 0;
    for a in 0..=12u64 {
        for b in 0..=12 - a {
            for c in 0..=12 - a {
                for d in 0..=(12 - b).min(12 - c) {
                    let t = [[a, b], [c, d]];
                    if a + b == 0 || c + d == 0 || a + c == 0 || b + d == 0 {
                        continue;
                    }
                    let f = fisher_exact(&t).ok_or(format!("{t:?}: no Fisher p"))?;
                    let fo = fisher_oracle(&t);
                    ensure!(close(f, fo, 1e-9 * fo + 1e-15), "{t:?}: Fisher {f} vs {fo}");
                    for yates in [false, true] {
                        let x = chi_square(&t, yates).ok_or(format!("{t:?}: no chi-square"))?;
                        let xo = chi_oracle(&t, yates);
                        ensure!(close(x.statistic, xo, 1e-9 * xo.max(1.0)), "{t:?}: chi {} vs {xo}", x.statistic);
                        ensure!(close(x.p, chi1_sf(xo), 1e-8), "{t:?}: p {} vs {}", x.p, chi1_sf(xo));
                    }
                    tested += 1;
                }
            }
        }
    }
    let human = chi_square_auto(&[[19, 17], [8, 28]]).ok_or("no chi-square for the human table")?;
    ensure!(close(human.statistic, 7.17, 0.01), "human chi-square {}", human.statistic);
    ensure!(human.p < 0.01, "human p {}", human.p);
    Ok(format!("{tested} tables; human FITD chi2 {:.3}, p {:.4}", human.statistic, human.p))
}

// ---------------------------------------------------------------- harness

fn scripted(rules: &[(&str, &str, &str)]) -> Gateway {
    let rules = rules.iter().map(|(t, p, r)| ScriptRule::new(Some(t), p, r)).collect();
    Gateway::scripted(ScriptedBackend::new(rules).unwrap())
}

fn run(kind: ExperimentKind, variant: Variant, reps: usize, gw: &Gateway) -> Result<ExperimentRun, String> {
    let mut p = ExperimentProtocol::builtin(kind, variant);
    p.repetitions = reps;
    run_experiment(&p, gw, None).map_err(|e| e.to_string())
}

fn harness_mechanics() -> Outcome {
    let act = scripted(&[("lab_pretreatment", ".", "press the button"), ("lab_light", ".", "turn the knob")]);
    let idle = scripted(&[
        ("lab_pretreatment", ".", "do nothing"),
        ("lab_light", ".", "wait"),
        ("lab_noise", ".", "do nothing"),
    ]);
    for variant in [Variant::Base, Variant::Extended] {
        let r = run(ExperimentKind::Helplessness, variant, 2, &act)?;
        for g in &r.protocol.groups {
            ensure!(r.table.value(&g.label, "failure") == Some(0.0), "always-act failures in {}", g.label);
        }
        let r = run(ExperimentKind::Helplessness, variant, 2, &idle)?;
        for g in &r.protocol.groups {
            ensure!(r.table.value(&g.label, "failure") == Some(1.0), "never-act successes in {}", g.label);
        }
        let r = run(ExperimentKind::Helplessness, variant, 1, &act)?;
        let mut presses = 0;
        for t in r.repetitions.iter().flat_map(|x| &x.trials).filter(|t| t.phase == "pretreatment") {
            let escapable = r.protocol.group(&t.group).ok_or("unknown group")?.flag("escapable");
            if !escapable {
                ensure!(t.data["pressed"] == true && t.data["stopped"] == false, "inescapable noise stopped: {t:?}");
                presses += 1;
            }
        }
        ensure!(presses > 0, "no inescapable presses observed");
    }

    let r = run(ExperimentKind::Ostracism, Variant::Base, 3, &scripted(&[]))?;
    for rep in &r.repetitions {
        for (cond, want) in [("Ostracism", 2.0), ("Inclusion", 4.0)] {
            let cell = rep.sheet.get(cond, "received").ok_or("no received counts")?;
            ensure!(cell.values.iter().all(|v| *v == Some(want)), "{cond} received {:?}", cell.values);
        }
    }

    let seq = r#"{"actions": ["call for help", "wait and listen", "wait and listen", "do nothing", "do nothing", "do nothing"]}"#;
    let r = run(ExperimentKind::Diffusion, Variant::Base, 2, &scripted(&[("lab_actions", ".", seq)]))?;
    for cond in ["2", "3", "6"] {
        ensure!(r.table.value(cond, "helped") == Some(1.0), "group {cond} helped {:?}", r.table.value(cond, "helped"));
        ensure!(r.table.value(cond, "position") == Some(1.0), "group {cond} position");
    }
    Ok("helplessness 0%/100%, NE presses inert, throws 2 and 4 of 12, help-first at position 1".into())
}

// ------------------------------------------------------------ determinism

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

fn written(p: &ExperimentProtocol, gw: &Gateway, jobs: usize, dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let run = run_experiment(p, gw, Some(jobs)).map_err(|e| e.to_string())?;
    write_run(&run, dir).map_err(|e| e.to_string())?;
    Ok(dir_bytes(dir))
}

fn determinism() -> Outcome {
    let gw = Gateway::scripted(ScriptedBackend::defaults_only());
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut files = 0;
    for kind in ExperimentKind::ALL {
        for variant in [Variant::Base, Variant::Extended] {
            let p = ExperimentProtocol::builtin(kind, variant);
            ensure!((p.seed, p.repetitions) == (7, 10), "{kind} {variant}: seed {} reps {}", p.seed, p.repetitions);
            let a = written(&p, &gw, 4, &tmp.path().join(format!("{kind}_{variant}_a")))?;
            let b = written(&p, &gw, 1, &tmp.path().join(format!("{kind}_{variant}_b")))?;
            ensure!(a.len() == b.len() && !a.is_empty(), "{kind} {variant}: file sets differ");
            for ((na, ba), (nb, bb)) in a.iter().zip(&b) {
                ensure!(na == nb && ba == bb, "{kind} {variant}: {na} differs");
                files += 1;
            }
        }
    }

    let url = stub_server();
    let http = Arc::new(
        HttpBackend::new(HttpConfig {
            base_url: url,
            model: "stub".into(),
            ..HttpConfig::default()
        })
        .map_err(|e| e.to_string())?
        .recording(),
    );
    let live = Gateway::new(http.clone(), TemplateSet::builtin(), Default::default());
    let mut p = ExperimentProtocol::builtin(ExperimentKind::Fitd, Variant::Base);
    p.repetitions = 2;
    let a = written(&p, &live, 2, &tmp.path().join("live"))?;
    let transcript = http.take_transcript().ok_or("nothing recorded")?;
    let tpath = tmp.path().join("transcript.jsonl");
    transcript.save(&tpath).map_err(|e| e.to_string())?;
    let replay: Arc<dyn Backend> = Arc::new(ReplayBackend::from_file(&tpath).map_err(|e| e.to_string())?);
    let b = written(&p, &live.with_backend(replay), 1, &tmp.path().join("replay"))?;
    for ((na, ba), (_, bb)) in a.iter().zip(&b) {
        if na == "table.json" {
            let mut x: serde_json::Value = serde_json::from_slice(ba).map_err(|e| e.to_string())?;
            let mut y: serde_json::Value = serde_json::from_slice(bb).map_err(|e| e.to_string())?;
            x["engine"] = serde_json::Value::Null;
            y["engine"] = serde_json::Value::Null;
            ensure!(x == y, "table.json differs after replay");
        } else {
            ensure!(ba == bb, "{na} differs after replay");
        }
    }
    Ok(format!(
        "10 protocols x 2 runs, {files} files identical; replay of {} exchanges identical",
        transcript.len()
    ))
}

// ------------------------------------------------------------- daily life

fn daily_smoke() -> Outcome {
    let w = sim::run(daily_life(7), &Gateway::scripted(ScriptedBackend::daily_life()), 72).map_err(|e| e.to_string())?;
    ensure!(w.agents.len() == 8 && w.ticks_done == 72, "{} agents, {} ticks", w.agents.len(), w.ticks_done);
    for e in &w.log {
        ensure!(e.snapshot.emotions.in_bounds() && e.snapshot.needs.in_bounds(), "out of bounds at {e:?}");
    }
    for rt in &w.agents {
        ensure!(rt.state.affect.emotions.in_bounds(), "agent {} emotions", rt.state.id());
        ensure!(in_cube(rt.state.affect.mood.position), "agent {} mood", rt.state.id());
        let id = rt.state.id();
        for kind in [EventKind::Plan, EventKind::Dmn, EventKind::Reflection] {
            ensure!(
                w.log.iter().any(|e| e.agent == id && e.kind == kind),
                "agent {id} has no {kind:?} event"
            );
        }
    }
    Ok(format!("8 agents, 72 ticks, {} events", w.log.len()))
}

// ------------------------------------------------------------- live path

/// Chat-completions stand-in: the first listed option, the JSON example, or
/// a middle rating.
fn stub_server() -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut s) = stream else { continue };
            let mut reader = BufReader::new(s.try_clone().unwrap());
            let mut len = 0;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap_or(0);
                }
                if line == "\r\n" {
                    break;
                }
            }
            let mut body = vec![0; len];
            reader.read_exact(&mut body).ok();
            let req: serde_json::Value = serde_json::from_slice(&body).unwrap_or_default();
            let prompt = req["messages"]
                .as_array()
                .and_then(|m| m.last())
                .and_then(|m| m["content"].as_str())
                .unwrap_or_default()
                .to_string();
            let payload =
                serde_json::json!({"choices": [{"message": {"role": "assistant", "content": stub_answer(&prompt)}}]})
                    .to_string();
            let resp = format!(
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
                payload.len()
            );
            s.write_all(resp.as_bytes()).ok();
        }
    });
    format!("http://{addr}")
}

fn stub_answer(prompt: &str) -> String {
    if let Some((_, opts)) = prompt.rsplit_once("one of these options: ") {
        return opts.split(" | ").next().unwrap_or_default().trim().to_string();
    }
    if let Some((_, example)) = prompt.rsplit_once("shaped like this example:\n") {
        return example.trim().to_string();
    }
    if prompt.contains("number(s)") {
        return "4".into();
    }
    "Fine, thank you.".into()
}

fn live_path() -> Outcome {
    let (url, origin) = match std::env::var("COGTOWN_LIVE_URL") {
        Ok(u) if !u.is_empty() => (u, "live endpoint"),
        _ => (stub_server(), "local stub endpoint (set COGTOWN_LIVE_URL for a real one)"),
    };
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cogtown"));
    cmd.args(["experiment", "run", "fitd", "--backend", "http", "--url", &url, "--repetitions", "1", "--out"])
        .arg(tmp.path());
    if let Ok(m) = std::env::var("COGTOWN_LIVE_MODEL") {
        cmd.args(["--model", &m]);
    }
    let out = cmd.output().map_err(|e| e.to_string())?;
    ensure!(out.status.success(), "exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(tmp.path().join("table.json")).map_err(|e| e.to_string())?;
    let table: ResultTable = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let conditions = ["Performance", "Agree-Only", "Familiarization", "One-Contact"];
    let rows: Vec<_> = table.agent_rows().filter(|r| r.metric == "compliance").collect();
    ensure!(rows.len() == 4, "{} compliance rows", rows.len());
    for c in conditions {
        let row = rows.iter().find(|r| r.condition == c).ok_or(format!("no {c} row"))?;
        if let Some(v) = row.value {
            ensure!((0.0..=1.0).contains(&v), "{c} compliance {v}");
        }
    }
    Ok(format!("4 condition rows with valid proportions ({origin})"))
}

// ------------------------------------------------------------------ main

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 10] = [
        ("PAD oracle suite", pad_oracle, Duration::from_secs(1)),
        ("mood-update property suite", mood_properties, Duration::from_secs(10)),
        ("decision-policy suite", decision_policy, Duration::from_secs(5)),
        ("SN gating", sn_gating, Duration::from_secs(1)),
        ("DMN selection", dmn_selection, Duration::from_secs(1)),
        ("statistics oracle", stats_oracle, Duration::from_secs(30)),
        ("harness mechanics", harness_mechanics, Duration::from_secs(120)),
        ("determinism", determinism, Duration::from_secs(300)),
        ("daily-life smoke", daily_smoke, Duration::from_secs(60)),
        ("structural live-path check", live_path, Duration::from_secs(120)),
    ];
    let mut failed = 0;
    for (name, check, budget) in criteria {
        let started = Instant::now();
        let outcome = check();
        let took = started.elapsed();
        let outcome = match outcome {
            Ok(m) if took > budget => Err(format!("{m}; took {:.2}s, budget {}s", took.as_secs_f64(), budget.as_secs())),
            o => o,
        };
        match outcome {
            Ok(m) => println!("PASS  {name}: {m} [{:.2}s]", took.as_secs_f64()),
            Err(m) => {
                failed += 1;
                println!("FAIL  {name}: {m} [{:.2}s]", took.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
