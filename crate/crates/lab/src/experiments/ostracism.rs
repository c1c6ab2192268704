//! Cyberball. The base variant includes or excludes the subject; the extended
//! variant has the subject watch an exclusion and then join the game.

use cogtown_core::affect::Emotion;
use cogtown_core::backend::BackendError;
use serde_json::json;

use super::{is_extended, Ctx, RepOutcome};
use crate::protocol::ExperimentProtocol;
use crate::results::Unit;
use crate::subject::Subject;

pub(super) fn check(p: &ExperimentProtocol) -> Result<(), String> {
    if is_extended(p) {
        let watch = p.required("watch");
        if watch.options.len() < 3 {
            return Err("the watch phase needs the excluded player and at least two others".into());
        }
        return Ok(());
    }
    let game = p.required("game");
    if game.options.len() != 2 {
        return Err("the game needs exactly two other players".into());
    }
    for g in &p.groups {
        let at = g.list("receive_at");
        let mut prev = 0;
        for &k in &at {
            if k < 1 || k as usize >= game.trials {
                return Err(format!("group `{}`: receive_at {k} outside 1..{}", g.label, game.trials));
            }
            if prev > 0 && k < prev + 2 {
                return Err(format!("group `{}`: receive_at must increase with gaps", g.label));
            }
            prev = k;
        }
    }
    Ok(())
}

/// Throw `k` (1-based) from `from` to `to`; 0 is the subject.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Throw {
    pub k: usize,
    pub from: usize,
    pub to: usize,
}

/// The full throw schedule. `pick` gives the subject's target (1 or 2) when
/// it holds the ball.
pub fn schedule(
    throws: usize,
    receive_at: &[u64],
    mut pick: impl FnMut(usize) -> Result<usize, BackendError>,
) -> Result<Vec<Throw>, BackendError> {
    let mut holder = 1;
    let mut out = Vec::with_capacity(throws);
    for k in 1..=throws {
        let to = if receive_at.contains(&(k as u64)) {
            0
        } else if holder == 0 {
            pick(k)?
        } else {
            3 - holder
        };
        out.push(Throw { k, from: holder, to });
        holder = to;
    }
    Ok(out)
}

fn base(ctx: &mut Ctx, out: &mut RepOutcome, s: &mut Subject) -> Result<(), BackendError> {
    let p = ctx.p;
    let game = p.required("game");
    let players = &game.options;
    let intro = game.text.replace("{{players}}", &players.join(" and "));
    s.remember(&intro, 0.4);
    let receive_at = ctx.group(s).list("receive_at");
    let inj = p.injections;
    let gw = ctx.gw.clone();
    let name = |i: usize| if i == 0 { "you".to_string() } else { players[i - 1].clone() };

    let mut received = 0;
    let mut log = Vec::new();
    let throws = schedule(game.trials, &receive_at, |k| {
        let situation = format!("{intro} This is throw {k} of {}.", game.trials);
        let choice = s.choose(&gw, "lab_throw", &situation, players)?;
        if choice.is_none() {
            out.note(s, &format!("throw {k}: unreadable choice"));
        }
        Ok(choice.and_then(|c| players.iter().position(|p| *p == c)).unwrap_or(0) + 1)
    })?;
    for t in &throws {
        if t.to == 0 {
            received += 1;
            s.inject(Emotion::Happiness, inj.receipt_happiness);
        } else if t.from != 0 {
            s.inject(Emotion::Sadness, inj.exclusion_sadness);
        }
        s.remember(&format!("In the game, {} threw the ball to {}.", name(t.from), name(t.to)), 0.3);
        if t.k % 3 == 0 {
            s.advance(1);
        }
        log.push((t.k, name(t.from), name(t.to)));
    }
    for (k, from, to) in log {
        out.log(s, "game", k - 1, json!({"from": from, "to": to}));
    }
    out.sheet.record(&s.group, "received", Unit::Count, Some(received as f64));
    out.sheet
        .record_rate(&s.group, "received_share", Some(received as f64 / game.trials as f64), game.trials as u64);

    ctx.rest(s)?;
    let survey = p.required("survey");
    let mut by_cat: Vec<(&str, Vec<f64>)> = Vec::new();
    for (i, item) in survey.items.iter().enumerate() {
        let r = s.rate(&ctx.gw, &survey.text, &item.text, item.min, item.max)?;
        if r.clamped {
            out.note(s, &format!("{} answer {} clamped", item.key, r.raw.unwrap_or(f64::NAN)));
        }
        let value = r.value.map(|v| if item.reverse { item.min + item.max - v } else { v });
        out.log(s, "survey", i, json!({"item": item.key, "value": value, "raw": r.raw}));
        let cat = item.category();
        let idx = match by_cat.iter().position(|(c, _)| *c == cat) {
            Some(i) => i,
            None => {
                by_cat.push((cat, Vec::new()));
                by_cat.len() - 1
            }
        };
        if let Some(v) = value {
            by_cat[idx].1.push(v);
        }
    }
    for (cat, vs) in by_cat {
        let mean = (!vs.is_empty()).then(|| vs.iter().sum::<f64>() / vs.len() as f64);
        out.sheet.record(&s.group, cat, Unit::Score, mean);
    }
    Ok(())
}

fn observer(ctx: &mut Ctx, out: &mut RepOutcome, s: &mut Subject) -> Result<(), BackendError> {
    let p = ctx.p;
    let watch = p.required("watch");
    let players = &watch.options;
    let (excluded, others) = (&players[0], &players[1..]);
    let listed = format!("{} and {}", others.join(", "), excluded);
    let text = watch
        .text
        .replace("{{players}}", &listed)
        .replace("{{ostracizers}}", &others.join(", "))
        .replace("{{excluded}}", excluded);
    let negative = |s: &Subject| {
        let e = s.snapshot().emotions;
        [Emotion::Sadness, Emotion::Anger, Emotion::Fear, Emotion::Disgust]
            .iter()
            .map(|k| e[k.index()])
            .sum::<f64>()
    };
    let before = negative(s);
    for t in 0..watch.trials {
        let (from, to) = (&others[t % others.len()], &others[(t + 1) % others.len()]);
        let line = format!("{from} throws the ball to {to}.");
        s.remember(&format!("Watching the game: {line} {excluded} is left out again."), 0.4);
        s.react(&ctx.gw, &format!("{text} {line}"))?;
        s.advance(1);
        out.log(s, "watch", t, json!({"from": from, "to": to}));
    }
    out.sheet.record("stage 1", "negative_change", Unit::Score, Some(negative(s) - before));

    let gw = ctx.gw.clone();
    let pick = |s: &mut Subject, out: &mut RepOutcome, stage: &str, situation: &str| -> Result<bool, BackendError> {
        let choice = s.choose(&gw, "lab_throw", situation, players)?;
        let to_ostracizer = choice.as_deref().is_some_and(|c| others.iter().any(|o| o == c));
        out.sheet.record(
            stage,
            "to_ostracizers",
            Unit::Proportion,
            choice.as_ref().map(|_| to_ostracizer as u8 as f64),
        );
        s.remember(&format!("I threw the ball to {}.", choice.as_deref().unwrap_or("nobody in particular")), 0.5);
        out.log(s, stage, 0, json!({"choice": choice}));
        Ok(to_ostracizer)
    };

    let join = p.required("join").text.replace("{{thrower}}", &others[0]);
    let first = pick(s, out, "stage 2", &format!("{text} {join}"))?;

    // The game goes on without asking the observer; how they are treated
    // follows whom they sided with.
    let exclusion = p.required("exclusion");
    for t in 0..exclusion.trials {
        if first {
            s.inject(Emotion::Happiness, p.injections.receipt_happiness);
        } else {
            s.inject(Emotion::Sadness, p.injections.exclusion_sadness);
        }
        s.advance(1);
        out.log(s, "exclusion", t, json!({"included": first}));
    }
    s.remember(&exclusion.text, 0.3);
    ctx.rest(s)?;
    let back = &p.required("return").text;
    pick(s, out, "stage 3", back)?;
    Ok(())
}

pub(super) fn run(ctx: &mut Ctx, out: &mut RepOutcome) -> Result<(), BackendError> {
    for mut s in ctx.subjects() {
        if is_extended(ctx.p) {
            observer(ctx, out, &mut s)?;
        } else {
            base(ctx, out, &mut s)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_delivers_exactly_the_planned_receipts() {
        for (at, n) in [(vec![1u64, 4], 2), (vec![1, 4, 7, 10], 4)] {
            let t = schedule(12, &at, |_| Ok(1)).unwrap();
            assert_eq!(t.iter().filter(|t| t.to == 0).count(), n);
            assert!(t.windows(2).all(|w| w[0].to == w[1].from));
            assert!(t.iter().all(|t| t.from != t.to));
        }
    }
}
