use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cogtown_core::affect::{AffectParams, AffectState, Emotion, EmotionEvent, PersonalityProfile};
use cogtown_core::backend::{Backend, BackendError, BackendRequest, Gateway, ScriptedBackend};
use cogtown_core::memory::NeedsState;
use cogtown_core::sim::{self, daily_life, step_needs, Activity, NeedsParams, World};

const ACTIVITIES: [(&str, &str); 8] = [
    ("eat lunch", "restaurant"),
    ("sleep", "home"),
    ("chat with friends", "cafe"),
    ("checkup", "clinic"),
    ("play music", "park"),
    ("work", "store"),
    ("commute", ""),
    ("idle", "library"),
];

fn needs_strategy() -> impl Strategy<Value = NeedsState> {
    prop::array::uniform5(0.0f64..=1.0).prop_map(|[a, b, c, d, e]| NeedsState {
        fullness: a,
        fun: b,
        health: c,
        social: d,
        energy: e,
    })
}

proptest! {
    #[test]
    fn step_needs_stays_in_bounds(n in needs_strategy(), idx in 0usize..8, onset: bool, dt in 0.0f64..48.0) {
        let (text, loc) = ACTIVITIES[idx];
        let out = step_needs(&n, &Activity::new(text, loc, onset), dt, &NeedsParams::default());
        prop_assert!(out.in_bounds());
    }

    #[test]
    fn zero_dt_without_onset_is_identity(n in needs_strategy(), idx in 0usize..8) {
        let (text, loc) = ACTIVITIES[idx];
        prop_assert_eq!(step_needs(&n, &Activity::new(text, loc, false), 0.0, &NeedsParams::default()), n);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    /// 10^5 ticks of needs and affect dynamics under random activities and
    /// emotion events, including out-of-range intensities.
    #[test]
    fn long_run_bounds(seed: u64, layered: bool) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let profile = PersonalityProfile::from_array(std::array::from_fn(|_| rng.gen::<f64>()));
        let params = AffectParams::default();
        let np = NeedsParams::default();
        let mut affect = AffectState::new(&profile, layered);
        let mut needs = NeedsState::default();
        for t in 0..100_000u64 {
            let (text, loc) = ACTIVITIES[rng.gen_range(0..ACTIVITIES.len())];
            needs = step_needs(&needs, &Activity::new(text, loc, rng.gen_bool(0.2)), 0.25, &np);
            affect.decay(1.0, &params);
            if rng.gen_bool(0.3) {
                let kind = Emotion::ALL[rng.gen_range(0..6)];
                let ev = EmotionEvent::new(kind, rng.gen_range(-0.5..1.5), t);
                affect.feel(&profile, &ev, &params);
            }
            if rng.gen_bool(0.1) {
                affect.nudge(&profile, Emotion::Fear, rng.gen_range(-1.0..1.0), t, &params);
            }
            affect.accumulate(&params);
            prop_assert!(needs.in_bounds(), "needs out of bounds at {t}: {needs:?}");
            prop_assert!(affect.emotions.in_bounds(), "emotions out of bounds at {t}");
            let m = affect.mood.position;
            prop_assert!(m.p.abs() <= 1.0 && m.a.abs() <= 1.0 && m.d.abs() <= 1.0);
        }
    }
}

struct FailFrom {
    inner: ScriptedBackend,
    calls: AtomicUsize,
    from: usize,
}

impl Backend for FailFrom {
    fn engine_name(&self) -> &'static str {
        "scripted"
    }

    fn complete(&self, req: &BackendRequest) -> Result<String, BackendError> {
        if self.calls.fetch_add(1, Ordering::SeqCst) >= self.from {
            return Err(BackendError::Unavailable("down".into()));
        }
        self.inner.complete(req)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(3))]

    #[test]
    fn resume_from_any_failure_point(fail_at in 1usize..600, seed in 0u64..4) {
        let gw = Gateway::scripted(ScriptedBackend::daily_life());
        let full = sim::run(daily_life(seed), &gw, 60).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let cp = dir.path().join("cp.json");
        let failing = gw.with_backend(Arc::new(FailFrom {
            inner: ScriptedBackend::daily_life(),
            calls: AtomicUsize::new(0),
            from: fail_at,
        }));
        let mut w = World::new(daily_life(seed)).unwrap();
        let resumed = match w.run(&failing, 60, Some(&cp)) {
            Ok(()) => w,
            Err(_) => {
                let mut r = World::load_checkpoint(&cp).unwrap();
                r.run_to(&gw, 60, None).unwrap();
                r
            }
        };
        prop_assert_eq!(sim::log::digest(&resumed.log), sim::log::digest(&full.log));
    }
}

#[test]
fn three_day_run_keeps_bounds_and_plans_each_day() {
    let gw = Gateway::scripted(ScriptedBackend::daily_life());
    let w = sim::run(daily_life(21), &gw, 72 * 3).unwrap();
    assert!(w.summary.iter().all(|r| {
        [r.happiness, r.sadness, r.anger, r.fear, r.disgust, r.surprise, r.fullness, r.fun, r.health, r.social, r.energy]
            .iter()
            .all(|v| (0.0..=1.0).contains(v))
    }));
    for rt in &w.agents {
        let plans = w
            .log
            .iter()
            .filter(|e| e.agent == rt.state.id() && e.kind == sim::EventKind::Plan && e.payload.get("day").is_some())
            .count();
        assert_eq!(plans, 3);
        let reflections = w
            .log
            .iter()
            .filter(|e| e.agent == rt.state.id() && e.kind == sim::EventKind::Reflection)
            .count();
        assert_eq!(reflections, 3);
    }
}
