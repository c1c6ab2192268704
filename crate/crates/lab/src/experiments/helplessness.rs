//! Noise pre-treatment with a button, then a light-and-knob test.

use cogtown_core::affect::Emotion;
use cogtown_core::backend::BackendError;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{is_extended, Ctx, RepOutcome};
use crate::protocol::ExperimentProtocol;
use crate::results::Unit;
use crate::subject::Subject;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Response {
    /// Knob turned while only the light was on.
    Avoidance,
    /// Knob turned once the noise had started.
    Escape,
    Failure,
}

const LOCUS: [&str; 2] = ["internal", "external"];
const INSTRUCTION: [&str; 2] = ["skill", "chance"];

pub(super) fn check(p: &ExperimentProtocol) -> Result<(), String> {
    if is_extended(p) {
        let paired: Vec<_> = p.groups.iter().filter(|g| g.flag("paired")).collect();
        let free: Vec<_> = p.groups.iter().filter(|g| !g.flag("paired")).collect();
        if paired.len() != 1 || free.len() != 1 || paired[0].size != free[0].size {
            return Err("the paired variant needs one paired and one unpaired group of equal size".into());
        }
        if !free[0].flag("escapable") || paired[0].flag("escapable") {
            return Err("in the paired variant only the unpaired group can stop the noise".into());
        }
    }
    if p.required("pretreatment").trials == 0 || p.required("test").trials == 0 {
        return Err("pretreatment and test need at least one trial".into());
    }
    Ok(())
}

fn noise(ctx: &Ctx, s: &mut Subject) {
    let inj = ctx.p.injections;
    s.inject(Emotion::Fear, inj.noise_fear);
    s.inject(Emotion::Sadness, inj.noise_sadness);
    s.inject(Emotion::Anger, inj.noise_anger);
}

/// One button trial. Returns (pressed, stopped).
fn pretreatment_trial(
    ctx: &mut Ctx,
    out: &mut RepOutcome,
    s: &mut Subject,
    trial: usize,
    escapable: bool,
    partner: Option<(&str, bool, bool)>,
) -> Result<(bool, bool), BackendError> {
    let phase = ctx.p.required("pretreatment");
    let mut situation = phase.text.replace("{{partner}}", partner.map_or("another participant", |p| p.0));
    situation.push_str(&format!(" This is noise {} of {}.", trial + 1, phase.trials));
    if let Some((name, pressed, stopped)) = partner {
        situation.push_str(&match (pressed, stopped) {
            (true, true) => format!(" {name} pressed their button and their noise stopped."),
            (true, false) => format!(" {name} pressed their button but their noise kept playing."),
            (false, _) => format!(" {name} did not press their button."),
        });
    }
    let choice = s.choose(&ctx.gw, "lab_pretreatment", &situation, &phase.options)?;
    if choice.is_none() {
        out.note(s, &format!("pretreatment trial {}: unreadable choice", trial + 1));
    }
    let pressed = choice.as_deref() == Some(phase.options[0].as_str());
    // The button only works where the noise is escapable.
    let stopped = pressed && escapable;
    if !stopped {
        noise(ctx, s);
    }
    let what = match (pressed, stopped) {
        (true, true) => "I pressed the button and the noise stopped.",
        (true, false) => "I pressed the button but the noise kept playing until the end.",
        (false, _) => "I did nothing and the noise played until the end.",
    };
    s.remember(&format!("Noise {}: {what}", trial + 1), 0.5);
    s.advance(1);
    out.log(
        s,
        "pretreatment",
        trial,
        json!({"choice": choice, "pressed": pressed, "stopped": stopped, "escapable": escapable}),
    );
    Ok((pressed, stopped))
}

fn test(ctx: &mut Ctx, out: &mut RepOutcome, s: &mut Subject) -> Result<Vec<Response>, BackendError> {
    let test = ctx.p.required("test").clone();
    let noise_phase = ctx.p.required("noise").clone();
    let mut responses = Vec::with_capacity(test.trials);
    for t in 0..test.trials {
        let situation = format!("{} This is trial {} of {}.", test.text, t + 1, test.trials);
        let first = s.choose(&ctx.gw, "lab_light", &situation, &test.options)?;
        let response = if first.as_deref() == Some(test.options[0].as_str()) {
            Response::Avoidance
        } else {
            let second = s.choose(&ctx.gw, "lab_noise", &noise_phase.text, &noise_phase.options)?;
            if second.as_deref() == Some(noise_phase.options[0].as_str()) {
                Response::Escape
            } else {
                noise(ctx, s);
                Response::Failure
            }
        };
        let what = match response {
            Response::Avoidance => "I turned the knob when the light came on and no noise followed.",
            Response::Escape => "I turned the knob after the noise started and it stopped.",
            Response::Failure => "I did not turn the knob and the noise played until the end.",
        };
        s.remember(&format!("Test trial {}: {what}", t + 1), 0.5);
        s.advance(1);
        out.log(s, "test", t, json!({"response": response}));
        responses.push(response);
    }
    Ok(responses)
}

/// 1-based trial at which `hit` first held three times in a row;
/// `trials + 1` when it never did.
pub fn trials_to_three(responses: &[Response], hit: impl Fn(Response) -> bool) -> usize {
    let mut run = 0;
    for (i, r) in responses.iter().enumerate() {
        run = if hit(*r) { run + 1 } else { 0 };
        if run == 3 {
            return i + 1;
        }
    }
    responses.len() + 1
}

fn record(ctx: &Ctx, out: &mut RepOutcome, s: &Subject, responses: &[Response], locus: usize, instr: usize) {
    let n = responses.len() as u64;
    let share = |r: Response| responses.iter().filter(|x| **x == r).count() as f64 / n as f64;
    let g = &s.group;
    out.sheet.record_rate(g, "failure", Some(share(Response::Failure)), n);
    out.sheet.record_rate(g, "avoidance", Some(share(Response::Avoidance)), n);
    out.sheet.record_rate(g, "escape", Some(share(Response::Escape)), n);
    out.sheet.record(
        g,
        "trials_to_avoidance",
        Unit::Trials,
        Some(trials_to_three(responses, |r| r == Response::Avoidance) as f64),
    );
    out.sheet.record(
        g,
        "trials_to_escape",
        Unit::Trials,
        Some(trials_to_three(responses, |r| r != Response::Failure) as f64),
    );
    let group = ctx.group(s);
    if group.flag("pretreatment") && !group.flag("escapable") {
        let avoid = Some(share(Response::Avoidance));
        out.sheet.record_rate(&format!("{g} {}", LOCUS[locus]), "avoidance", avoid, n);
        out.sheet.record_rate(&format!("{g} {}", INSTRUCTION[instr]), "avoidance", avoid, n);
    }
}

pub(super) fn run(ctx: &mut Ctx, out: &mut RepOutcome) -> Result<(), BackendError> {
    let mut subjects = ctx.subjects();
    let locus = ctx.p.required("locus").options.clone();
    let instruction = ctx.p.required("instruction").options.clone();
    let beliefs: Vec<(usize, usize)> = subjects.iter().map(|s| (s.slot % 2, (s.slot / 2) % 2)).collect();
    for (s, (l, i)) in subjects.iter_mut().zip(&beliefs) {
        s.note(&locus[*l]);
        s.note(&instruction[*i]);
    }
    let trials = ctx.p.required("pretreatment").trials;

    if is_extended(ctx.p) {
        let free = ctx.p.groups.iter().find(|g| !g.flag("paired")).expect("checked").label.clone();
        let (mut a, mut b): (Vec<Subject>, Vec<Subject>) = subjects.into_iter().partition(|s| s.group == free);
        for (x, y) in a.iter_mut().zip(b.iter_mut()) {
            for t in 0..trials {
                let (xp, xs) = pretreatment_trial(ctx, out, x, t, true, Some((y.name(), false, false)).filter(|_| t > 0))?;
                let partner = x.name().to_string();
                pretreatment_trial(ctx, out, y, t, false, Some((&partner, xp, xs)))?;
            }
        }
        a.append(&mut b);
        subjects = a;
    } else {
        for s in subjects.iter_mut() {
            let g = ctx.group(s).clone();
            if g.flag("pretreatment") {
                for t in 0..trials {
                    pretreatment_trial(ctx, out, s, t, g.flag("escapable"), None)?;
                }
            }
        }
    }

    for s in subjects.iter_mut() {
        ctx.rest(s)?;
        s.advance(4);
        let responses = test(ctx, out, s)?;
        let (l, i) = (s.slot % 2, (s.slot / 2) % 2);
        record(ctx, out, s, &responses, l, i);
    }
    Ok(())
}
