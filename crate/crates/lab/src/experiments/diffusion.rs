//! Intercom discussion, then a participant has a seizure. The extended
//! variant appoints a leader in a group of six.

use cogtown_core::backend::BackendError;
use serde_json::json;

use super::{is_extended, Ctx, RepOutcome};
use crate::protocol::ExperimentProtocol;
use crate::results::Unit;
use crate::subject::Subject;

/// Actions that count as helping the victim.
pub const HELP_ACTIONS: [&str; 2] = ["call for help", "notify the experimenter"];
pub const INSTRUCT_ACTION: &str = "instruct the others to get help";
pub const FOLLOW_ACTION: &str = "follow the leader's instructions";

/// Length of an action sequence.
const STEPS: usize = 6;

pub(super) fn check(p: &ExperimentProtocol) -> Result<(), String> {
    let lines = p.required("discussion").options.len();
    for g in &p.groups {
        let n = g.number("group_size").unwrap_or(0.0);
        if n.fract() != 0.0 || n < 2.0 {
            return Err(format!("group `{}` needs an integer group_size of at least 2", g.label));
        }
        if n as usize - 1 > lines {
            return Err(format!("group `{}` needs {} discussion lines, found {lines}", g.label, n as usize - 1));
        }
    }
    let emergency = &p.required("emergency").options;
    if !HELP_ACTIONS.iter().all(|a| emergency.iter().any(|o| o == a)) {
        return Err(format!("the emergency options must include {}", HELP_ACTIONS.join(" and ")));
    }
    if is_extended(p) {
        let (l, m) = (p.group("leader"), p.group("member"));
        match (l, m) {
            (Some(l), Some(m)) if l.size == m.size && p.groups.len() == 2 => {}
            _ => return Err("the leader variant needs a `leader` and a `member` group of equal size".into()),
        }
        if !emergency.iter().any(|o| o == INSTRUCT_ACTION) {
            return Err(format!("the emergency options must include `{INSTRUCT_ACTION}`"));
        }
        if !p.required("member").options.iter().any(|o| o == FOLLOW_ACTION) {
            return Err(format!("the member options must include `{FOLLOW_ACTION}`"));
        }
    }
    Ok(())
}

fn group_size(ctx: &Ctx, s: &Subject) -> usize {
    ctx.group(s).number("group_size").unwrap_or(2.0) as usize
}

fn bystanders(n: usize) -> String {
    match n {
        0..=2 => "Nobody else but you can hear Participant 1.".into(),
        3 => "One other participant can also hear this.".into(),
        _ => format!("{} other participants can also hear this.", n - 2),
    }
}

/// Maps each step onto an allowed action; `None` unless there are exactly
/// six steps and all of them are allowed.
pub fn normalize(steps: &[String], allowed: &[String]) -> Option<Vec<String>> {
    if steps.len() != STEPS {
        return None;
    }
    steps
        .iter()
        .map(|s| {
            let k = s.trim().trim_end_matches('.').to_lowercase();
            allowed.iter().find(|a| a.to_lowercase() == k).cloned()
        })
        .collect()
}

fn is_help(a: &str) -> bool {
    HELP_ACTIONS.contains(&a)
}

/// First round of the discussion: the others speak, then the subject.
fn discussion(ctx: &Ctx, out: &mut RepOutcome, s: &mut Subject, n: usize) -> Result<(), BackendError> {
    let d = ctx.p.required("discussion");
    let mut text = d.text.replace("{{group_size}}", &n.to_string());
    for line in d.options.iter().take(n - 1) {
        text.push('\n');
        text.push_str(line);
    }
    text.push_str("\nIt is your turn to talk about your own problems.");
    let said = s.say(&ctx.gw, &text)?;
    s.remember(&format!("{} I said: {said}", d.text.replace("{{group_size}}", &n.to_string())), 0.4);
    for line in d.options.iter().take(n - 1) {
        s.remember(&format!("In the discussion, {line}"), 0.5);
    }
    s.advance(1);
    out.log(s, "discussion", 0, json!({"said": said}));
    Ok(())
}

/// An ordered list of six actions, re-asked once with a reminder. `None`
/// marks an invalid trial.
fn actions(
    ctx: &Ctx,
    out: &mut RepOutcome,
    s: &mut Subject,
    phase: &str,
    situation: &str,
    allowed: &[String],
) -> Result<Option<Vec<String>>, BackendError> {
    let first = s.sequence(&ctx.gw, situation, allowed, "")?;
    let mut seq = first.as_deref().and_then(|v| normalize(v, allowed));
    if seq.is_none() {
        let notice = format!(" Your last answer was not usable: give exactly {STEPS} actions, each taken word for word from the list.");
        let again = s.sequence(&ctx.gw, situation, allowed, &notice)?;
        seq = again.as_deref().and_then(|v| normalize(v, allowed));
    }
    if seq.is_none() {
        out.invalid += 1;
        out.note(s, &format!("{phase}: no valid action sequence"));
    }
    out.log(s, phase, 0, json!({"actions": seq}));
    Ok(seq)
}

fn emergency_text(ctx: &Ctx, n: usize) -> String {
    ctx.p.required("emergency").text.replace("{{bystanders}}", &bystanders(n))
}

fn base(ctx: &mut Ctx, out: &mut RepOutcome, s: &mut Subject) -> Result<(), BackendError> {
    let n = group_size(ctx, s);
    discussion(ctx, out, s, n)?;
    let text = emergency_text(ctx, n);
    s.react(&ctx.gw, &text)?;
    let allowed = ctx.p.required("emergency").options.clone();
    let seq = actions(ctx, out, s, "emergency", &text, &allowed)?;
    let position = seq.as_ref().map(|v| v.iter().position(|a| is_help(a)));
    out.sheet.record(&s.group, "helped", Unit::Proportion, position.map(|p| p.is_some() as u8 as f64));
    out.sheet.record(&s.group, "position", Unit::Trials, position.flatten().map(|p| p as f64 + 1.0));
    Ok(())
}

/// Leader outcome: did they instruct the others.
fn leader(ctx: &mut Ctx, out: &mut RepOutcome, s: &mut Subject) -> Result<Option<bool>, BackendError> {
    let n = group_size(ctx, s);
    let role = ctx.p.required("role");
    let role_text = role.text.replace("{{leader}}", "you");
    s.note(&role_text);
    let r = s.choose(&ctx.gw, "lab_role", &role_text, &role.options)?;
    out.sheet.flag(&s.group, "recognized_role", r.as_deref() == Some(role.options[0].as_str()));
    out.log(s, "role", 0, json!({"choice": r}));
    discussion(ctx, out, s, n)?;

    let text = emergency_text(ctx, n);
    s.react(&ctx.gw, &text)?;
    let allowed = ctx.p.required("emergency").options.clone();
    let seq = actions(ctx, out, s, "emergency", &text, &allowed)?;
    let instructed = seq.as_ref().map(|v| v.iter().any(|a| a == INSTRUCT_ACTION));
    let helped = seq.as_ref().map(|v| v.iter().any(|a| is_help(a)));
    let rec = |out: &mut RepOutcome, metric: &str, v: Option<bool>| {
        out.sheet.record(&s.group, metric, Unit::Proportion, v.map(|b| b as u8 as f64));
    };
    rec(out, "delegated", instructed.zip(helped).map(|(i, h)| i && !h));
    rec(out, "commanded_and_acted", instructed.zip(helped).map(|(i, h)| i && h));
    rec(out, "helped", helped);
    Ok(instructed)
}

fn member(
    ctx: &mut Ctx,
    out: &mut RepOutcome,
    s: &mut Subject,
    leader_name: &str,
    instructed: Option<bool>,
) -> Result<(), BackendError> {
    let n = group_size(ctx, s);
    let role = ctx.p.required("role");
    s.note(&role.text.replace("{{leader}}", leader_name));
    discussion(ctx, out, s, n)?;

    let command = match instructed {
        Some(true) => format!("{leader_name}, the group leader, says over the intercom: \"Someone get help for Participant 1 right now!\""),
        _ => format!("{leader_name}, the group leader, has not said anything."),
    };
    let ph = ctx.p.required("member");
    let text = format!("{} {}", emergency_text(ctx, n), ph.text.replace("{{command}}", &command));
    s.react(&ctx.gw, &text)?;
    let allowed = ph.options.clone();
    let seq = actions(ctx, out, s, "member", &text, &allowed)?;
    let helped = seq.as_ref().map(|v| v.iter().any(|a| is_help(a)));
    let followed = seq.as_ref().map(|v| v.iter().any(|a| a == FOLLOW_ACTION));
    let immediate = seq.as_ref().map(|v| v.first().is_some_and(|a| is_help(a)));
    let rec = |out: &mut RepOutcome, metric: &str, v: Option<bool>| {
        out.sheet.record(&s.group, metric, Unit::Proportion, v.map(|b| b as u8 as f64));
    };
    rec(out, "immediate", immediate);
    rec(out, "only_followed", followed.zip(helped).map(|(f, h)| f && !h));
    rec(
        out,
        "complied",
        followed
            .zip(helped)
            .map(|(f, h)| instructed == Some(true) && (f || h)),
    );
    rec(out, "helped", helped);
    Ok(())
}

pub(super) fn run(ctx: &mut Ctx, out: &mut RepOutcome) -> Result<(), BackendError> {
    let subjects = ctx.subjects();
    if !is_extended(ctx.p) {
        for mut s in subjects {
            base(ctx, out, &mut s)?;
        }
        return Ok(());
    }
    let (leaders, members): (Vec<Subject>, Vec<Subject>) = subjects.into_iter().partition(|s| s.group == "leader");
    for (mut l, mut m) in leaders.into_iter().zip(members) {
        let instructed = leader(ctx, out, &mut l)?;
        let name = l.name().to_string();
        member(ctx, out, &mut m, &name, instructed)?;
    }
    Ok(())
}
