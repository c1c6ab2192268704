//! Telephone requests: a small first contact, a gap of days, a large request.
//! The extended variant runs the reverse order on those who refuse a
//! moderate request cold.

use cogtown_core::backend::BackendError;
use serde_json::json;

use super::{is_extended, Ctx, RepOutcome};
use crate::protocol::ExperimentProtocol;
use crate::subject::Subject;

const CONTACTS: [&str; 4] = ["perform", "agree", "familiarize", "none"];

/// Ticks in one day.
const DAY: u64 = 96;

pub(super) fn check(p: &ExperimentProtocol) -> Result<(), String> {
    if is_extended(p) {
        return Ok(());
    }
    for g in &p.groups {
        match g.text("contact") {
            Some(c) if CONTACTS.contains(&c) => {}
            other => {
                return Err(format!(
                    "group `{}` has contact {other:?}; expected one of {}",
                    g.label,
                    CONTACTS.join(", ")
                ))
            }
        }
    }
    Ok(())
}

fn ask(ctx: &Ctx, out: &mut RepOutcome, s: &mut Subject, phase: &str) -> Result<bool, BackendError> {
    let ph = ctx.p.required(phase);
    let choice = s.choose(&ctx.gw, "lab_request", &ph.text, &ph.options)?;
    if choice.is_none() {
        out.note(s, &format!("{phase}: unreadable choice"));
    }
    let agreed = choice.as_deref() == Some(ph.options[0].as_str());
    let what = if agreed { "agreed" } else { "declined" };
    s.remember(&format!("{} I {what}.", ph.text), 0.5);
    s.react(&ctx.gw, &format!("{} You {what}.", ph.text))?;
    s.advance(1);
    out.log(s, phase, 0, json!({"choice": choice, "agreed": agreed}));
    Ok(agreed)
}

fn gap(ctx: &mut Ctx, s: &mut Subject) -> Result<(), BackendError> {
    let days = ctx.p.required("gap").trials.max(1);
    for _ in 0..days {
        ctx.rest(s)?;
        s.advance(DAY);
    }
    Ok(())
}

fn base(ctx: &mut Ctx, out: &mut RepOutcome, s: &mut Subject) -> Result<(), BackendError> {
    let contact = ctx.group(s).text("contact").unwrap_or("none").to_string();
    match contact.as_str() {
        "perform" => {
            if ask(ctx, out, s, "small_request")? {
                let q = &ctx.p.required("questions").text;
                let said = s.say(&ctx.gw, q)?;
                s.remember(&format!("I answered the consumer group's questions about soap: {said}"), 0.5);
                out.log(s, "questions", 0, json!({"said": said}));
            }
        }
        "agree" => {
            if ask(ctx, out, s, "small_request")? {
                let t = &ctx.p.required("agree_only").text;
                s.remember(t, 0.4);
                out.log(s, "agree_only", 0, json!({}));
            }
        }
        "familiarize" => {
            let t = &ctx.p.required("familiarization").text;
            let said = s.say(&ctx.gw, t)?;
            s.remember(&format!("{t} I said: {said}"), 0.4);
            out.log(s, "familiarization", 0, json!({"said": said}));
        }
        _ => {}
    }
    gap(ctx, s)?;
    let agreed = ask(ctx, out, s, "large_request")?;
    out.sheet.flag(&s.group, "compliance", agreed);
    Ok(())
}

fn reverse(ctx: &mut Ctx, out: &mut RepOutcome, mut s: Subject) -> Result<(), BackendError> {
    // A cold pass on a throwaway copy sorts out who refuses the moderate
    // request without any prior contact.
    let mut probe = s.clone();
    let accepted = ask(ctx, out, &mut probe, "screening")?;
    out.sheet.flag("screening", "accepted_small", accepted);
    if accepted {
        return Ok(());
    }
    gap(ctx, &mut s)?;
    let large = ask(ctx, out, &mut s, "first_request")?;
    out.sheet.flag("refusers", "accepted_large", large);
    let small = !large && ask(ctx, out, &mut s, "second_request")?;
    out.sheet.flag("refusers", "accepted_small", small);
    Ok(())
}

pub(super) fn run(ctx: &mut Ctx, out: &mut RepOutcome) -> Result<(), BackendError> {
    for mut s in ctx.subjects() {
        if is_extended(ctx.p) {
            reverse(ctx, out, s)?;
        } else {
            base(ctx, out, &mut s)?;
        }
    }
    Ok(())
}
