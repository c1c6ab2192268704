//! A boring task, a paid request to call it enjoyable, and a later interview.

use cogtown_core::backend::BackendError;
use serde_json::json;

use super::{is_extended, Ctx, RepOutcome};
use crate::protocol::ExperimentProtocol;
use crate::results::Unit;
use crate::subject::Subject;

pub(super) fn check(p: &ExperimentProtocol) -> Result<(), String> {
    if p.required("interview").items.is_empty() {
        return Err("the interview needs at least one item".into());
    }
    for g in &p.groups {
        if g.flag("request") && g.number("amount").is_none() {
            return Err(format!("group `{}` is asked to lie but has no amount", g.label));
        }
    }
    Ok(())
}

fn dollars(amount: f64) -> String {
    if amount.fract() == 0.0 {
        format!("${}", amount as i64)
    } else {
        format!("${amount:.2}")
    }
}

fn one(ctx: &mut Ctx, out: &mut RepOutcome, s: &mut Subject) -> Result<(), BackendError> {
    let p = ctx.p;
    let group = ctx.group(s).clone();
    if is_extended(p) {
        s.note(&p.required("values").text);
    }

    let task = &p.required("task").text;
    s.remember(task, 0.4);
    s.react(&ctx.gw, task)?;
    s.advance(4);
    out.log(s, "task", 0, json!({}));

    if group.flag("request") {
        let amount = dollars(group.number("amount").unwrap_or(0.0));
        let request = p.required("request");
        let text = request.text.replace("{{amount}}", &amount);
        let choice = s.choose(&ctx.gw, "lab_request", &text, &request.options)?;
        let agreed = choice.as_deref() == Some(request.options[0].as_str());
        out.sheet.flag(&s.group, "agreed", agreed);
        out.log(s, "request", 0, json!({"choice": choice, "agreed": agreed, "amount": amount}));
        if agreed {
            s.remember(&format!("I agreed to tell the next participant the tasks were enjoyable, for {amount}."), 0.6);
            let lie = &p.required("lie").text;
            let said = s.say(&ctx.gw, lie)?;
            s.remember(&format!("I told the next participant: {said}"), 0.6);
            s.react(&ctx.gw, &format!("You told the next participant: \"{said}\" You were paid {amount} for it."))?;
            s.advance(1);
            out.log(s, "lie", 0, json!({"said": said}));

            if is_extended(p) {
                let relief = p.required("relief");
                let r = s.choose(&ctx.gw, "lab_relief", &relief.text, &relief.options)?;
                if let Some(r) = &r {
                    s.remember(&format!("To ease my discomfort I chose to {r}."), 0.5);
                }
                out.log(s, "relief", 0, json!({"choice": r}));
            }
        } else {
            s.remember(&format!("I refused to tell the next participant the tasks were enjoyable, even for {amount}."), 0.5);
        }
    }

    ctx.rest(s)?;
    s.advance(2);

    let interview = p.required("interview");
    for (i, item) in interview.items.iter().enumerate() {
        let r = s.rate(&ctx.gw, &interview.text, &item.text, item.min, item.max)?;
        let value = r.value.map(|v| if item.reverse { item.min + item.max - v } else { v });
        if r.clamped {
            out.note(s, &format!("{} answer {} clamped to [{}, {}]", item.key, r.raw.unwrap_or(f64::NAN), item.min, item.max));
        }
        if r.value.is_none() {
            out.note(s, &format!("{}: unreadable answer", item.key));
        }
        out.sheet.record(&s.group, item.category(), Unit::Score, value);
        out.log(s, "interview", i, json!({"item": item.key, "value": value, "raw": r.raw, "clamped": r.clamped}));
    }
    Ok(())
}

pub(super) fn run(ctx: &mut Ctx, out: &mut RepOutcome) -> Result<(), BackendError> {
    for mut s in ctx.subjects() {
        one(ctx, out, &mut s)?;
    }
    Ok(())
}
